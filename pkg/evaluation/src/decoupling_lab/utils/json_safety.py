"""Utilities for safe JSON serialization of numeric types."""

import dataclasses
import math
from enum import Enum
from fractions import Fraction
from typing import Any

import numpy as np


def convert_numpy_types(obj: Any) -> Any:
    """
    Recursively convert numpy and numeric types to JSON-native values.

    Complex numbers become {"re": ..., "im": ...}, Fractions become "a/b"
    strings, dataclasses become dicts, enums their value, and non-finite
    floats become None.

    Args:
        obj: The object to convert (dict, list, scalar, or other)

    Returns:
        The converted object with native Python types
    """
    if isinstance(obj, dict):
        return {str(k): convert_numpy_types(v) for k, v in obj.items()}
    elif isinstance(obj, (list, tuple, set, frozenset)):
        return [convert_numpy_types(v) for v in obj]
    elif isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    elif isinstance(obj, np.integer):
        return int(obj)
    elif isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    elif isinstance(obj, (np.complexfloating, complex)):
        return {"re": convert_numpy_types(obj.real), "im": convert_numpy_types(obj.imag)}
    elif isinstance(obj, np.ndarray):
        return [convert_numpy_types(v) for v in obj.tolist()]
    elif isinstance(obj, Fraction):
        return str(obj)
    elif isinstance(obj, Enum):
        return convert_numpy_types(obj.value)
    elif dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return convert_numpy_types(obj.to_dict())
        return {
            f.name: convert_numpy_types(getattr(obj, f.name))
            for f in dataclasses.fields(obj)
            if f.repr
        }
    else:
        return obj
