from typing import Any, List

import numpy as np

from lintest.models.operators import as_cmatrix
from lintest.utils.exceptions import UsageError

Matrix = List[List[List[float]]]


def encode_label(label: Any) -> Any:
    """Tuples become JSON arrays; strings, ints and bools pass through."""
    if isinstance(label, tuple):
        return [encode_label(x) for x in label]
    if isinstance(label, (np.integer,)):
        return int(label)
    if isinstance(label, (str, int, bool)) or label is None:
        return label
    raise UsageError(f"label {label!r} cannot be serialized")


def decode_label(value: Any) -> Any:
    if isinstance(value, list):
        return tuple(decode_label(x) for x in value)
    return value


def encode_matrix(matrix: np.ndarray) -> Matrix:
    """Row-major list of [re, im] pairs."""
    m = np.asarray(matrix, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def decode_matrix(data: Matrix) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=np.float64)
    except (TypeError, ValueError):
        raise UsageError("matrix entries must be [re, im] pairs")
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise UsageError(f"matrix of shape {arr.shape} is not a square array of [re, im] pairs")
    return as_cmatrix(arr[..., 0] + 1j * arr[..., 1])
