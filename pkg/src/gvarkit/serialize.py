"""JSON helpers for matrices and model artifacts.

Matrices are stored row major as nested lists together with their
dimensions so artifacts can be checked without deserializing.
"""
from __future__ import annotations

import numpy as np

from .errors import DataError


def mat_to_json(a: np.ndarray) -> dict:
    a = np.asarray(a, dtype=float)
    if a.ndim not in (1, 2):
        raise DataError(f"expected a vector or matrix, got ndim={a.ndim}")
    return {"shape": list(a.shape), "data": a.tolist()}


def mat_from_json(obj: dict) -> np.ndarray:
    try:
        shape = tuple(int(d) for d in obj["shape"])
        a = np.asarray(obj["data"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed matrix payload: {exc}") from exc
    if any(d == 0 for d in shape):
        # nested lists cannot carry trailing zero dimensions
        return np.zeros(shape)
    if a.shape != shape:
        raise DataError(f"matrix payload shape {a.shape} does not match declared {shape}")
    return a


def mats_to_json(mats) -> list[dict]:
    return [mat_to_json(m) for m in mats]


def mats_from_json(objs) -> tuple[np.ndarray, ...]:
    return tuple(mat_from_json(o) for o in objs)
