"""Graph containers and constructors for mesh / surface-chain geometry."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


class InvalidMeshError(ValueError):
    pass


class InvalidChainError(ValueError):
    pass


class IncompatibleGraphsError(ValueError):
    pass


@dataclass
class Graph:
    """A directed graph over mesh/surface nodes.

    Edges are stored as an (E, 2) int array of (sender, receiver) pairs,
    sorted by (receiver, sender) so that incoming-edge aggregation is a
    contiguous scan. Treat instances as immutable after construction.
    """

    positions: np.ndarray                     # (N, D)
    edges: np.ndarray                         # (E, 2) int, [sender, receiver]
    node_features: np.ndarray | None = None   # (N, d_v)
    edge_features: np.ndarray | None = None   # (E, d_e)
    node_targets: np.ndarray | None = None    # (N, d_y)
    graph_target: np.ndarray | None = None    # (d_G,)

    @property
    def num_nodes(self) -> int:
        return self.positions.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def senders(self) -> np.ndarray:
        return self.edges[:, 0]

    @property
    def receivers(self) -> np.ndarray:
        return self.edges[:, 1]

    def with_features(self, node_features=None, edge_features=None,
                      node_targets=None, graph_target=None) -> "Graph":
        kwargs = {}
        if node_features is not None:
            kwargs["node_features"] = node_features
        if edge_features is not None:
            kwargs["edge_features"] = edge_features
        if node_targets is not None:
            kwargs["node_targets"] = node_targets
        if graph_target is not None:
            kwargs["graph_target"] = graph_target
        return replace(self, **kwargs)


@dataclass
class BatchedGraph:
    """Disjoint union of member graphs plus the node ranges of each member."""

    graph: Graph
    segments: list[tuple[int, int]] = field(default_factory=list)  # (start, length)
    graph_targets: np.ndarray | None = None   # (m, d_G)

    @property
    def num_members(self) -> int:
        return len(self.segments)

    def segment_ids(self) -> np.ndarray:
        """Per-node member index, shape (N_total,)."""
        out = np.empty(self.graph.num_nodes, dtype=np.int64)
        for k, (start, length) in enumerate(self.segments):
            out[start:start + length] = k
        return out


def _sort_edges(edges: np.ndarray) -> np.ndarray:
    if len(edges) == 0:
        return edges.reshape(0, 2).astype(np.int64)
    order = np.lexsort((edges[:, 0], edges[:, 1]))
    return edges[order]


def build_from_mesh(positions, cells) -> Graph:
    """Derive the bidirectional edge set from cell connectivity.

    Each cell is an ordered tuple of node indices; consecutive pairs (plus
    the closing pair for cells of >= 3 nodes) become undirected edges,
    deduplicated across cells, then emitted in both directions.
    """
    positions = np.asarray(positions, dtype=np.float64)
    n = positions.shape[0]
    undirected = set()
    for ci, cell in enumerate(cells):
        cell = list(cell)
        if len(cell) < 2:
            raise InvalidMeshError(f"cell {ci} has {len(cell)} nodes, need >= 2")
        for idx in cell:
            if not (0 <= idx < n):
                raise InvalidMeshError(f"cell {ci} references node {idx}, have {n} nodes")
        pairs = list(zip(cell, cell[1:]))
        if len(cell) >= 3:
            pairs.append((cell[-1], cell[0]))
        for a, b in pairs:
            if a != b:
                undirected.add((min(a, b), max(a, b)))
    directed = [(a, b) for a, b in undirected] + [(b, a) for a, b in undirected]
    edges = _sort_edges(np.array(directed, dtype=np.int64).reshape(-1, 2))
    return Graph(positions=positions, edges=edges)


def build_surface_chain(positions, closed: bool = False) -> Graph:
    """Connect each node to its predecessor and successor in traversal order."""
    positions = np.asarray(positions, dtype=np.float64)
    n = positions.shape[0]
    if n < 2:
        raise InvalidChainError(f"chain needs >= 2 nodes, got {n}")
    pairs = [(k, k + 1) for k in range(n - 1)]
    if closed and n > 2:
        pairs.append((n - 1, 0))
    directed = pairs + [(b, a) for a, b in pairs]
    edges = _sort_edges(np.array(directed, dtype=np.int64))
    return Graph(positions=positions, edges=edges)


def merge_batch(graphs: list[Graph]) -> BatchedGraph:
    """Merge graphs into one disconnected graph with offset edge indices."""
    if not graphs:
        raise IncompatibleGraphsError("cannot merge an empty list of graphs")

    def width(arr):
        return None if arr is None else arr.shape[1]

    ref = graphs[0]
    for g in graphs[1:]:
        if g.dim != ref.dim:
            raise IncompatibleGraphsError("member graphs have mixed position dims")
        for attr in ("node_features", "edge_features", "node_targets"):
            if width(getattr(g, attr)) != width(getattr(ref, attr)):
                raise IncompatibleGraphsError(f"member graphs disagree on {attr} width")
        if (g.graph_target is None) != (ref.graph_target is None):
            raise IncompatibleGraphsError("member graphs disagree on graph_target presence")

    segments = []
    offset = 0
    edge_blocks = []
    for g in graphs:
        segments.append((offset, g.num_nodes))
        edge_blocks.append(g.edges + offset)
        offset += g.num_nodes

    def cat(attr):
        if getattr(ref, attr) is None:
            return None
        return np.concatenate([getattr(g, attr) for g in graphs], axis=0)

    merged = Graph(
        positions=np.concatenate([g.positions for g in graphs], axis=0),
        edges=np.concatenate(edge_blocks, axis=0),
        node_features=cat("node_features"),
        edge_features=cat("edge_features"),
        node_targets=cat("node_targets"),
    )
    graph_targets = None
    if ref.graph_target is not None:
        graph_targets = np.stack([g.graph_target for g in graphs], axis=0)
    return BatchedGraph(graph=merged, segments=segments, graph_targets=graph_targets)


def extract_segment(batch: BatchedGraph, k: int) -> Graph:
    """Recover member k of a batch (round trip of merge_batch)."""
    start, length = batch.segments[k]
    g = batch.graph
    mask = (g.receivers >= start) & (g.receivers < start + length)

    def sl(arr):
        return None if arr is None else arr[start:start + length]

    graph_target = None
    if batch.graph_targets is not None:
        graph_target = batch.graph_targets[k]
    return Graph(
        positions=g.positions[start:start + length],
        edges=g.edges[mask] - start,
        node_features=sl(g.node_features),
        edge_features=None if g.edge_features is None else g.edge_features[mask],
        node_targets=sl(g.node_targets),
        graph_target=graph_target,
    )


def validate(graph: Graph) -> list[str]:
    """Check Graph invariants; returns a list of violation messages."""
    violations = []
    n = graph.num_nodes
    edges = graph.edges
    for row, (s, r) in enumerate(edges):
        if not (0 <= s < n) or not (0 <= r < n):
            violations.append(f"edge {row}: index ({s}, {r}) out of range [0, {n})")
        elif s == r:
            violations.append(f"edge {row}: self-loop at node {s}")
    seen = set()
    pairs = set(map(tuple, edges.tolist()))
    for row, (s, r) in enumerate(edges.tolist()):
        if (s, r) in seen:
            violations.append(f"edge {row}: duplicate directed edge ({s}, {r})")
        seen.add((s, r))
        if s != r and (r, s) not in pairs:
            violations.append(f"edge {row}: missing reverse edge ({r}, {s})")
    if graph.node_features is not None and graph.node_features.shape[0] != n:
        violations.append(
            f"node_features has {graph.node_features.shape[0]} rows, expected {n}")
    if graph.edge_features is not None and graph.edge_features.shape[0] != len(edges):
        violations.append(
            f"edge_features has {graph.edge_features.shape[0]} rows, expected {len(edges)}")
    if graph.node_targets is not None and graph.node_targets.shape[0] != n:
        violations.append(
            f"node_targets has {graph.node_targets.shape[0]} rows, expected {n}")
    return violations
