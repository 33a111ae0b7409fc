"""
Matrix Model
============

The dense complex square matrix every sequence is made of, and its validation.
"""

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidInputError

Matrix = NDArray[np.complex128]


def as_matrix(data: ArrayLike) -> Matrix:
    """
    Converts array-like data to a complex square matrix, validating it.

    Raises:
        InvalidInputError: If the data is not a finite square matrix.
    """
    try:
        matrix = np.asarray(data, dtype=np.complex128)
    except (TypeError, ValueError) as e:
        raise InvalidInputError(f"Matrix entries must be numeric: {e}")

    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidInputError(f"Matrix must be square, got shape {matrix.shape}")
    if matrix.shape[0] == 0:
        raise InvalidInputError("Matrix order must be positive")
    if not np.all(np.isfinite(matrix)):
        raise InvalidInputError("Matrix has non-finite entries")
    return matrix
