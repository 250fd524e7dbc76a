"""Versioned JSON serialization of trained models.

The schema is {version, kind, D, H, C, b, c, d, W, U} with W and U
stored as flat row-major lists; set kinds add "pooling" and the
pooled-input pipeline records "input_pooling": "max-min-mean". Floats
are written with Python's shortest round-trip repr, so a reload is
bit-exact.
"""

from __future__ import annotations

import json

import numpy as np

from .classrbm import RbmParams
from .set_rbm import SetVariant
from .trainer import TrainedModel

__all__ = ["model_to_dict", "model_from_dict", "save_model", "load_model"]

_VERSION = 1


def model_to_dict(model: TrainedModel, input_pooling: str | None = None) -> dict:
    p = model.params
    if isinstance(model.kind, SetVariant):
        kind = model.kind.kind  # "set-xor" | "set-or"
        pooling = model.kind.pooling
    else:
        kind, pooling = "classrbm", None
    out = {
        "version": _VERSION,
        "kind": kind,
        "D": p.num_inputs,
        "H": p.num_hidden,
        "C": p.num_classes,
        "b": p.b.tolist(),
        "c": p.c.tolist(),
        "d": p.d.tolist(),
        "W": p.W.reshape(-1).tolist(),
        "U": p.U.reshape(-1).tolist(),
    }
    if pooling is not None:
        out["pooling"] = pooling
    if input_pooling is not None:
        out["input_pooling"] = input_pooling
    return out


def model_from_dict(raw: dict) -> tuple:
    """Returns (TrainedModel, input_pooling or None)."""
    if raw.get("version") != _VERSION:
        raise ValueError(f"unsupported model version {raw.get('version')!r}")
    D, H, C = raw["D"], raw["H"], raw["C"]
    params = RbmParams(
        np.array(raw["b"], dtype=np.float64),
        np.array(raw["c"], dtype=np.float64),
        np.array(raw["d"], dtype=np.float64),
        np.array(raw["W"], dtype=np.float64).reshape(H, D),
        np.array(raw["U"], dtype=np.float64).reshape(H, C),
    )
    kind_name = raw["kind"]
    if kind_name == "classrbm":
        kind = "classrbm"
    elif kind_name in ("set-xor", "set-or"):
        kind = SetVariant(kind_name.removeprefix("set-"), raw.get("pooling", "soft"))
    else:
        raise ValueError(f"unknown model kind {kind_name!r}")
    return TrainedModel(kind, params), raw.get("input_pooling")


def save_model(path, model: TrainedModel, input_pooling: str | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model, input_pooling), fh, indent=1)
        fh.write("\n")


def load_model(path) -> tuple:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
