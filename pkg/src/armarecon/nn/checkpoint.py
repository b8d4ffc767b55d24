"""Text checkpoints of model parameters and optimizer state.

Floats are written as ``float.hex`` so a save/load round trip is bit-exact.
"""

from __future__ import annotations

from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from ..errors import DataError
from .model import ModelParams, ModelSpec
from .optim import AdamState

HEADER = "armarecon-ckpt v1"


def _array_lines(tag, name, arr):
    shape = ",".join(str(s) for s in arr.shape) or "scalar"
    yield f"{tag} {name} {shape}"
    yield " ".join(float.hex(float(x)) for x in arr.ravel())


def dumps(params: ModelParams, state: AdamState | None = None) -> str:
    lines = [HEADER]
    spec = asdict(params.spec)
    lines.append("spec " + " ".join(f"{k}={v!r}" for k, v in spec.items()))
    for name, arr in params.tensors.items():
        lines.extend(_array_lines("param", name, arr))
    if state is not None:
        scalars = {f.name: getattr(state, f.name) for f in fields(state) if f.name not in ("m", "v")}
        lines.append("adam " + " ".join(
            f"{k}={float.hex(float(v)) if isinstance(v, float) else v}" for k, v in scalars.items()))
        for tag, moments in (("m", state.m), ("v", state.v)):
            for name, arr in moments.items():
                lines.extend(_array_lines(tag, name, arr))
    return "\n".join(lines) + "\n"


def _parse_value(text):
    if text in ("True", "False"):
        return text == "True"
    if text.startswith("'"):
        return text.strip("'")
    try:
        return int(text)
    except ValueError:
        return float(text)


def loads(text: str) -> tuple[ModelParams, AdamState | None]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        raise DataError(f"not a checkpoint (expected header {HEADER!r})")
    spec = None
    tensors, m, v = {}, {}, {}
    state = None
    i = 1
    while i < len(lines):
        head = lines[i].split(" ")
        tag = head[0]
        if tag == "spec":
            spec = ModelSpec(**{k: _parse_value(val) for k, val in
                                (tok.split("=", 1) for tok in head[1:])})
            i += 1
        elif tag == "adam":
            kw = {}
            for tok in head[1:]:
                k, val = tok.split("=", 1)
                kw[k] = int(val) if k == "step" else float.fromhex(val)
            state = AdamState(**kw)
            i += 1
        elif tag in ("param", "m", "v"):
            name, shape = head[1], head[2]
            shape = () if shape == "scalar" else tuple(int(s) for s in shape.split(","))
            body = lines[i + 1].split() if i + 1 < len(lines) else []
            arr = np.array([float.fromhex(x) for x in body], dtype=np.float64)
            if arr.size != int(np.prod(shape)):
                raise DataError(f"checkpoint tensor {name}: {arr.size} values for shape {shape}")
            {"param": tensors, "m": m, "v": v}[tag][name] = arr.reshape(shape)
            i += 2
        elif not lines[i].strip():
            i += 1
        else:
            raise DataError(f"checkpoint line {i + 1}: unknown record {tag!r}")
    if spec is None:
        raise DataError("checkpoint has no spec record")
    if state is not None:
        state.m, state.v = m, v
    return ModelParams(spec, tensors), state


def save_checkpoint(path, params: ModelParams, state: AdamState | None = None):
    Path(path).write_text(dumps(params, state))


def load_checkpoint(path) -> tuple[ModelParams, AdamState | None]:
    return loads(Path(path).read_text())
