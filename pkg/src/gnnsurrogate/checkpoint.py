"""Binary model checkpoints: magic + version + length-prefixed sections."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .datasets import Featurizer
from .features import Normalizer
from .model import GnnConfig, GnnModel, build_model
from .training import AdamState, PlateauSchedule

MAGIC = b"GNNSCKPT"
VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class TrainResumeState:
    adam: AdamState
    schedule: PlateauSchedule
    epoch: int


def _pack_arrays(arrays) -> bytes:
    chunks = [struct.pack("<Q", len(arrays))]
    for a in arrays:
        a = np.ascontiguousarray(a, dtype=np.float64)
        chunks.append(struct.pack("<B", a.ndim))
        chunks.append(struct.pack(f"<{a.ndim}Q", *a.shape) if a.ndim else b"")
        chunks.append(a.tobytes())
    return b"".join(chunks)


def _unpack_arrays(buf: bytes) -> list[np.ndarray]:
    (count,) = struct.unpack_from("<Q", buf, 0)
    offset = 8
    arrays = []
    for _ in range(count):
        (ndim,) = struct.unpack_from("<B", buf, offset)
        offset += 1
        shape = struct.unpack_from(f"<{ndim}Q", buf, offset) if ndim else ()
        offset += 8 * ndim
        size = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(buf, dtype="<f8", count=size, offset=offset).reshape(shape)
        offset += 8 * size
        arrays.append(arr.copy())
    return arrays


def _write_section(fh, name: str, payload: bytes):
    raw = name.encode()
    fh.write(struct.pack("<I", len(raw)))
    fh.write(raw)
    fh.write(struct.pack("<Q", len(payload)))
    fh.write(payload)


def _read_sections(buf: bytes, offset: int) -> dict:
    sections = {}
    end = len(buf)
    while offset < end:
        if offset + 4 > end:
            raise CheckpointError("truncated checkpoint (section header)")
        (name_len,) = struct.unpack_from("<I", buf, offset)
        offset += 4
        name = buf[offset:offset + name_len].decode()
        offset += name_len
        (payload_len,) = struct.unpack_from("<Q", buf, offset)
        offset += 8
        if offset + payload_len > end:
            raise CheckpointError(f"truncated checkpoint (section {name!r})")
        sections[name] = buf[offset:offset + payload_len]
        offset += payload_len
    return sections


def save_checkpoint(model: GnnModel, featurizer: Featurizer, path,
                    resume: TrainResumeState | None = None):
    cfg = model.config
    meta = {
        "model": {
            "node_input_size": cfg.node_input_size,
            "edge_input_size": cfg.edge_input_size,
            "latent_size": cfg.latent_size,
            "steps": cfg.steps,
            "depth": cfg.depth,
            "width": cfg.width,
            "graph_output_size": cfg.graph_output_size,
            "node_output_size": cfg.node_output_size,
            "graph_output_activation": cfg.graph_output_activation,
            "node_output_activation": cfg.node_output_activation,
            "sine_frequency": cfg.sine_frequency,
        },
        "featurizer": {
            "encoding_kind": featurizer.encoding_kind,
            "cell_type_vocabulary": list(featurizer.cell_type_vocabulary),
            "node_target_mode": featurizer.node_target_mode,
            "use_speed_squared": featurizer.use_speed_squared,
            "has_target_norm": featurizer.target_norm is not None,
        },
        "has_resume": resume is not None,
    }
    norm_arrays = [featurizer.node_norm.shift, featurizer.node_norm.scale,
                   featurizer.edge_norm.shift, featurizer.edge_norm.scale]
    if featurizer.target_norm is not None:
        norm_arrays += [featurizer.target_norm.shift, featurizer.target_norm.scale]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        _write_section(fh, "meta", json.dumps(meta).encode())
        _write_section(fh, "params", _pack_arrays(model.parameters()))
        _write_section(fh, "normalizers", _pack_arrays(norm_arrays))
        if resume is not None:
            sched = resume.schedule
            scalars = {"t": resume.adam.t, "beta1": resume.adam.beta1,
                       "beta2": resume.adam.beta2, "eps": resume.adam.eps,
                       "lr": sched.lr, "factor": sched.factor,
                       "patience": sched.patience, "min_delta": sched.min_delta,
                       "lr_min": sched.lr_min, "best": sched.best,
                       "bad_epochs": sched.bad_epochs, "epoch": resume.epoch}
            _write_section(fh, "resume_meta", json.dumps(scalars).encode())
            _write_section(fh, "resume_arrays", _pack_arrays(resume.adam.m + resume.adam.v))


def load_checkpoint(path):
    """Returns (model, featurizer, resume_state_or_None)."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:len(MAGIC)] != MAGIC:
        raise CheckpointError(f"bad magic {buf[:len(MAGIC)]!r}, expected {MAGIC!r}")
    (version,) = struct.unpack_from("<I", buf, len(MAGIC))
    if version != VERSION:
        raise CheckpointError(f"checkpoint version {version}, expected {VERSION}")
    sections = _read_sections(buf, len(MAGIC) + 4)
    meta = json.loads(sections["meta"].decode())

    cfg = GnnConfig(**meta["model"])
    model = build_model(cfg, seed=0)
    model.set_parameters(_unpack_arrays(sections["params"]))

    fmeta = meta["featurizer"]
    featurizer = Featurizer(
        encoding_kind=fmeta["encoding_kind"],
        cell_type_vocabulary=tuple(fmeta["cell_type_vocabulary"]),
        node_target_mode=fmeta["node_target_mode"],
        use_speed_squared=fmeta["use_speed_squared"],
    )
    norm_arrays = _unpack_arrays(sections["normalizers"])
    featurizer.node_norm = Normalizer(shift=norm_arrays[0], scale=norm_arrays[1])
    featurizer.edge_norm = Normalizer(shift=norm_arrays[2], scale=norm_arrays[3])
    if fmeta["has_target_norm"]:
        featurizer.target_norm = Normalizer(shift=norm_arrays[4], scale=norm_arrays[5])

    resume = None
    if meta.get("has_resume"):
        scalars = json.loads(sections["resume_meta"].decode())
        arrays = _unpack_arrays(sections["resume_arrays"])
        half = len(arrays) // 2
        adam = AdamState(m=arrays[:half], v=arrays[half:], t=scalars["t"],
                         beta1=scalars["beta1"], beta2=scalars["beta2"],
                         eps=scalars["eps"])
        sched = PlateauSchedule(lr=scalars["lr"], factor=scalars["factor"],
                                patience=scalars["patience"],
                                min_delta=scalars["min_delta"],
                                lr_min=scalars["lr_min"], best=scalars["best"],
                                bad_epochs=scalars["bad_epochs"])
        resume = TrainResumeState(adam=adam, schedule=sched, epoch=scalars["epoch"])
    return model, featurizer, resume
