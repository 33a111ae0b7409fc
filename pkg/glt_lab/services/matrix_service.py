"""
Matrix Service
==============

This module provides `MatrixService`, the three spectral primitives every other
service consumes: singular values, spectral norm and numerical rank of dense
complex square matrices.
"""

import logging

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from ..models.errors import InvalidInputError
from ..models.matrix import Matrix, as_matrix

logger = logging.getLogger(__name__)


def _canonical_sign(matrix: Matrix) -> Matrix:
    """
    Returns `matrix` or `-matrix`, whichever has its first nonzero entry in the
    closed right half plane (ties broken by the imaginary part).

    M and -M map to the same array, so their spectra are bit-identical.
    """
    flat = matrix.ravel()
    nonzero = np.flatnonzero(flat)
    if nonzero.size == 0:
        return matrix
    lead = flat[nonzero[0]]
    if lead.real < 0 or (lead.real == 0 and lead.imag < 0):
        return -matrix
    return matrix


def _is_diagonal(matrix: Matrix) -> bool:
    return np.count_nonzero(matrix - np.diag(np.diagonal(matrix))) == 0


class MatrixService:
    """
    Provides singular values, spectral norms and numerical ranks.

    All methods are pure functions of their inputs and may be called from
    several worker threads at once.
    """

    # Absolute floor for rank decisions, so the zero matrix has rank 0.
    RANK_FLOOR = 1e-300

    def singular_values(self, matrix: ArrayLike) -> NDArray[np.float64]:
        """
        Computes all singular values of a square matrix.

        Diagonal matrices return the sorted absolute diagonal exactly, exactly
        Hermitian matrices go through `eigvalsh`, everything else through the
        LAPACK SVD.

        Args:
            matrix: A finite square matrix.

        Returns:
            The n singular values, sorted non-increasing.

        Raises:
            InvalidInputError: If the matrix is not square or not finite.
        """
        a = as_matrix(matrix)

        if _is_diagonal(a):
            values = np.abs(np.diagonal(a))
        else:
            a = _canonical_sign(a)
            if np.array_equal(a, a.conj().T):
                values = np.abs(scipy.linalg.eigvalsh(a, check_finite=False))
            else:
                values = scipy.linalg.svdvals(a, check_finite=False)

        return np.sort(np.asarray(values, dtype=np.float64))[::-1]

    def spectral_norm(self, matrix: ArrayLike) -> float:
        """Returns the largest singular value of the matrix."""
        return float(self.singular_values(matrix)[0])

    def numerical_rank(self, matrix: ArrayLike, tol: float) -> int:
        """
        Counts the singular values strictly above `tol * sigma_1`.

        Args:
            matrix: A finite square matrix.
            tol: Relative tolerance, non-negative.

        Returns:
            An integer in [0, n].

        Raises:
            InvalidInputError: If tol is negative or the matrix is invalid.
        """
        if tol < 0:
            raise InvalidInputError(f"Rank tolerance must be non-negative, got {tol}")

        sigma = self.singular_values(matrix)
        threshold = max(tol * sigma[0], self.RANK_FLOOR)
        return int(np.count_nonzero(sigma > threshold))
