from __future__ import annotations

import numpy as np
import pytest

from gvarkit import DataError
from gvarkit.serialize import mat_from_json, mat_to_json, mats_from_json, mats_to_json


def test_round_trip_exact():
    rng = np.random.default_rng(3)
    m = rng.standard_normal((4, 7))
    back = mat_from_json(mat_to_json(m))
    assert np.array_equal(back, m)
    assert back.dtype == np.float64


def test_round_trip_empty_rows():
    m = np.zeros((0, 3))
    back = mat_from_json(mat_to_json(m))
    assert back.shape == (0, 3)


def test_round_trip_empty_cols():
    m = np.zeros((2, 0))
    back = mat_from_json(mat_to_json(m))
    assert back.shape == (2, 0)


def test_tuple_round_trip():
    mats = (np.eye(2), np.zeros((2, 2)))
    back = mats_from_json(mats_to_json(mats))
    assert len(back) == 2
    assert np.array_equal(back[0], np.eye(2))


def test_vector_round_trip():
    v = np.array([1.0, -2.5, 3.0])
    back = mat_from_json(mat_to_json(v))
    assert np.array_equal(back, v) and back.shape == (3,)


def test_rejects_scalar_and_cube():
    with pytest.raises(DataError, match="vector or matrix"):
        mat_to_json(np.float64(3.0))
    with pytest.raises(DataError, match="vector or matrix"):
        mat_to_json(np.zeros((2, 2, 2)))


def test_shape_mismatch_rejected():
    with pytest.raises(DataError, match="shape"):
        mat_from_json({"shape": [2, 2], "data": [[1.0, 2.0]]})


def test_missing_keys_rejected():
    with pytest.raises(DataError, match="malformed"):
        mat_from_json({"data": [[1.0]]})
