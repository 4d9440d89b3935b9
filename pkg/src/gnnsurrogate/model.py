"""Encode-process-decode graph network with hand-rolled adjoints."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .graph import BatchedGraph, Graph
from . import mlp as nn
from .mlp import Mlp, MlpConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GnnConfig:
    node_input_size: int
    edge_input_size: int
    latent_size: int                    # n_l
    steps: int                          # message passing steps L
    depth: int                          # n_d for every MLP
    width: int                          # n_w for every MLP
    graph_output_size: int              # delta^G head width
    node_output_size: int | None = None # delta^V head width; None = graph-level task
    graph_output_activation: str = "linear"
    node_output_activation: str = "linear"
    sine_frequency: float = 1.0

    @property
    def task(self) -> str:
        return "graph_level" if self.node_output_size is None else "node_level"

    def mlp_configs(self):
        nl = self.latent_size
        mk = lambda i, o, act="linear": MlpConfig(
            input_size=i, depth=self.depth, width=self.width, output_size=o,
            output_activation=act, sine_frequency=self.sine_frequency)
        cfgs = {
            "encoder_edge": mk(self.edge_input_size, nl),
            "encoder_node": mk(self.node_input_size, nl),
            "processor_edge": mk(3 * nl, nl),
            "processor_node": mk(2 * nl, nl),
            "decoder_graph": mk(nl, self.graph_output_size, self.graph_output_activation),
        }
        if self.node_output_size is not None:
            cfgs["decoder_node"] = mk(nl + self.graph_output_size, self.node_output_size,
                                      self.node_output_activation)
        return cfgs


@dataclass
class GnnModel:
    config: GnnConfig
    encoder_edge: Mlp
    encoder_node: Mlp
    processor_edge: list[Mlp]   # one block per step
    processor_node: list[Mlp]
    decoder_graph: Mlp
    decoder_node: Mlp | None = None

    def mlps(self) -> list[Mlp]:
        out = [self.encoder_edge, self.encoder_node]
        for pe, pn in zip(self.processor_edge, self.processor_node):
            out.extend([pe, pn])
        out.append(self.decoder_graph)
        if self.decoder_node is not None:
            out.append(self.decoder_node)
        return out

    def parameters(self) -> list[np.ndarray]:
        params = []
        for m in self.mlps():
            params.extend(m.parameters())
        return params

    def set_parameters(self, values: list[np.ndarray]):
        i = 0
        for m in self.mlps():
            for k in range(len(m.weights)):
                m.weights[k] = values[i].reshape(m.weights[k].shape)
                m.biases[k] = values[i + 1].reshape(m.biases[k].shape)
                i += 2
        if i != len(values):
            raise ValueError(f"expected {i} parameter arrays, got {len(values)}")


def build_model(config: GnnConfig, seed) -> GnnModel:
    rng = np.random.default_rng(seed)
    cfgs = config.mlp_configs()
    return GnnModel(
        config=config,
        encoder_edge=nn.he_init(cfgs["encoder_edge"], rng),
        encoder_node=nn.he_init(cfgs["encoder_node"], rng),
        processor_edge=[nn.he_init(cfgs["processor_edge"], rng) for _ in range(config.steps)],
        processor_node=[nn.he_init(cfgs["processor_node"], rng) for _ in range(config.steps)],
        decoder_graph=nn.he_init(cfgs["decoder_graph"], rng),
        decoder_node=nn.he_init(cfgs["decoder_node"], rng)
        if config.node_output_size is not None else None,
    )


def _as_batch(g) -> BatchedGraph:
    if isinstance(g, BatchedGraph):
        return g
    return BatchedGraph(graph=g, segments=[(0, g.num_nodes)])


def _segment_mean(values: np.ndarray, segments) -> np.ndarray:
    rows = []
    for start, length in segments:
        if length == 0:
            raise ValueError("cannot pool an empty segment")
        rows.append(values[start:start + length].mean(axis=0))
    return np.stack(rows, axis=0)


def encode(model: GnnModel, graph: Graph):
    """Row-wise latent embedding of node and edge features."""
    e = nn.forward(model.encoder_edge, graph.edge_features)
    v = nn.forward(model.encoder_node, graph.node_features)
    return v, e


def message_passing_step(model: GnnModel, k: int, graph: Graph, state):
    """One residual processor step on (latent nodes, latent edges)."""
    if not (0 <= k < model.config.steps):
        raise ConfigError(f"step {k} out of range, model has {model.config.steps}")
    v, e = state
    s, r = graph.senders, graph.receivers
    ue = nn.forward(model.processor_edge[k], np.hstack([e, v[s], v[r]]))
    agg = np.zeros((graph.num_nodes, model.config.latent_size))
    np.add.at(agg, r, ue)
    uv = nn.forward(model.processor_node[k], np.hstack([v, agg]))
    return v + uv, e + ue


def decode_graph(model: GnnModel, latent_nodes: np.ndarray, segments):
    """Mean-pool each segment's latent nodes, then the graph decoder MLP."""
    return nn.forward(model.decoder_graph, _segment_mean(latent_nodes, segments))


def decode_node(model: GnnModel, latent_nodes: np.ndarray, y_graph: np.ndarray,
                seg_ids: np.ndarray):
    """Node decoder over [latent node | its graph's pooled decoding]."""
    if model.decoder_node is None:
        raise ConfigError("model has no node decoder (graph-level task)")
    return nn.forward(model.decoder_node, np.hstack([latent_nodes, y_graph[seg_ids]]))


def forward(model: GnnModel, graph_or_batch):
    """Full forward pass.

    Returns (node_out or None, graph_out (m, d_G), tape). graph_out for a
    node-level task is the internal pooled context, not a supervised output.
    """
    batch = _as_batch(graph_or_batch)
    g = batch.graph
    cfg = model.config
    s, r = g.senders, g.receivers
    nl = cfg.latent_size
    num_e = g.num_edges

    # incidence matrices make scatter-adds a single sparse matmul
    ones = np.ones(num_e)
    recv_mat = sparse.csr_matrix((ones, (r, np.arange(num_e))),
                                 shape=(g.num_nodes, num_e))
    send_mat = sparse.csr_matrix((ones, (s, np.arange(num_e))),
                                 shape=(g.num_nodes, num_e))

    e, tape_ee = nn.forward_tape(model.encoder_edge, g.edge_features)
    v, tape_ev = nn.forward_tape(model.encoder_node, g.node_features)

    step_tapes = []
    for k in range(cfg.steps):
        edge_in = np.concatenate([e, v[s], v[r]], axis=1)
        ue, tape_pe = nn.forward_tape(model.processor_edge[k], edge_in)
        agg = recv_mat @ ue
        node_in = np.concatenate([v, agg], axis=1)
        uv, tape_pn = nn.forward_tape(model.processor_node[k], node_in)
        e = e + ue
        v = v + uv
        step_tapes.append((tape_pe, tape_pn))

    pooled = _segment_mean(v, batch.segments)
    y_graph, tape_dg = nn.forward_tape(model.decoder_graph, pooled)

    y_node = None
    tape_dn = None
    seg_ids = None
    if model.decoder_node is not None:
        seg_ids = batch.segment_ids()
        node_in2 = np.concatenate([v, y_graph[seg_ids]], axis=1)
        y_node, tape_dn = nn.forward_tape(model.decoder_node, node_in2)

    tape = {
        "batch": batch, "seg_ids": seg_ids,
        "recv_mat": recv_mat, "send_mat": send_mat,
        "tape_ee": tape_ee, "tape_ev": tape_ev,
        "step_tapes": step_tapes, "tape_dg": tape_dg, "tape_dn": tape_dn,
    }
    return y_node, y_graph, tape


def backward(model: GnnModel, tape, grad_node_out=None, grad_graph_out=None):
    """Adjoint pass; returns parameter gradients in model.parameters() order."""
    batch = tape["batch"]
    g = batch.graph
    cfg = model.config
    s, r = g.senders, g.receivers
    nl = cfg.latent_size

    gy_graph = np.zeros((batch.num_members, cfg.graph_output_size))
    if grad_graph_out is not None:
        gy_graph = gy_graph + grad_graph_out

    starts = np.array([start for start, _ in batch.segments])
    lengths = np.array([length for _, length in batch.segments])

    grads_dn = None
    gv = np.zeros((g.num_nodes, nl))
    if model.decoder_node is not None and grad_node_out is not None:
        gin2, grads_dn = nn.backward(model.decoder_node, tape["tape_dn"], grad_node_out)
        gv += gin2[:, :nl]
        gy_graph += np.add.reduceat(gin2[:, nl:], starts, axis=0)
    elif model.decoder_node is not None:
        grads_dn = [np.zeros_like(p) for p in model.decoder_node.parameters()]

    gpooled, grads_dg = nn.backward(model.decoder_graph, tape["tape_dg"], gy_graph)
    gv += np.repeat(gpooled / lengths[:, None], lengths, axis=0)

    recv_mat, send_mat = tape["recv_mat"], tape["send_mat"]
    ge = np.zeros((g.num_edges, nl))
    step_grads = [None] * cfg.steps
    for k in range(cfg.steps - 1, -1, -1):
        tape_pe, tape_pn = tape["step_tapes"][k]
        # v_next = v + uv; e_next = e + ue; agg feeds uv, e/v feed ue
        gnode_in, grads_pn = nn.backward(model.processor_node[k], tape_pn, gv)
        gv_prev = gv + gnode_in[:, :nl]
        gue = ge + gnode_in[:, nl:][r]
        gedge_in, grads_pe = nn.backward(model.processor_edge[k], tape_pe, gue)
        ge = ge + gedge_in[:, :nl]
        gv_prev += send_mat @ gedge_in[:, nl:2 * nl]
        gv_prev += recv_mat @ gedge_in[:, 2 * nl:]
        gv = gv_prev
        step_grads[k] = (grads_pe, grads_pn)

    _, grads_ee = nn.backward(model.encoder_edge, tape["tape_ee"], ge)
    _, grads_ev = nn.backward(model.encoder_node, tape["tape_ev"], gv)

    out = list(grads_ee) + list(grads_ev)
    for grads_pe, grads_pn in step_grads:
        out.extend(grads_pe)
        out.extend(grads_pn)
    out.extend(grads_dg)
    if grads_dn is not None:
        out.extend(grads_dn)
    return out


def predict(model: GnnModel, graph_or_batch):
    """(node-level matrix or None, graph-level matrix (m, d_G))."""
    y_node, y_graph, _ = forward(model, graph_or_batch)
    return y_node, y_graph
