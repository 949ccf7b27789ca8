"""Tests for JSON safety utilities."""

import json
import math
from fractions import Fraction

import numpy as np

from decoupling_lab.geometry import build_scale_ladder
from decoupling_lab.synthesis import FamilyKind
from decoupling_lab.utils.json_safety import convert_numpy_types


def test_convert_simple_types():
    assert convert_numpy_types(1) == 1
    assert convert_numpy_types(1.5) == 1.5
    assert convert_numpy_types("test") == "test"
    assert convert_numpy_types(True) is True


def test_convert_numpy_scalars():
    assert isinstance(convert_numpy_types(np.int64(42)), int)
    assert isinstance(convert_numpy_types(np.float64(3.14)), float)
    assert isinstance(convert_numpy_types(np.bool_(True)), bool)


def test_non_finite_floats_become_null():
    assert convert_numpy_types(math.inf) is None
    assert convert_numpy_types(np.float64("nan")) is None


def test_convert_complex():
    assert convert_numpy_types(np.complex128(1 - 2j)) == {"re": 1.0, "im": -2.0}
    assert convert_numpy_types(np.array([1j])) == [{"re": 0.0, "im": 1.0}]


def test_convert_fractions_and_enums():
    assert convert_numpy_types(Fraction(-3, 8)) == "-3/8"
    assert convert_numpy_types(FamilyKind.GAUSSIAN) == "gaussian"


def test_convert_dataclass_with_to_dict():
    ladder = build_scale_ladder(256)

    converted = convert_numpy_types(ladder)

    assert converted == convert_numpy_types(ladder.to_dict())
    json.dumps(converted)


def test_convert_nested_structures():
    data = {
        "scalar": np.int32(10),
        "list": [np.float32(1.5), (np.int8(2),)],
        "array": np.array([[1, 2], [3, 4]]),
        "nested": {3: np.bool_(False)},
    }

    converted = convert_numpy_types(data)

    assert converted == {
        "scalar": 10,
        "list": [1.5, [2]],
        "array": [[1, 2], [3, 4]],
        "nested": {"3": False},
    }
    json.dumps(converted)
