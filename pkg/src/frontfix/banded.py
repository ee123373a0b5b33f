"""Factorized tridiagonal solves (LAPACK ``?gttrf``/``?gttrs``).

The compact boundary row has one entry outside the tridiagonal band, at
position ``(0, 2)``.  It is eliminated with row 1 before factorizing, so
every system in the package goes through the same tridiagonal path.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lapack

from .errors import AssemblyError


class TridiagonalFactor:
    """LU factorization of a tridiagonal matrix plus an optional ``(0, 2)`` entry.

    ``lower[i] = A[i+1, i]``, ``diag[i] = A[i, i]``, ``upper[i] = A[i, i+1]``.
    """

    def __init__(self, lower, diag, upper, corner: float = 0.0):
        lower = np.array(lower, dtype=float)
        diag = np.array(diag, dtype=float)
        upper = np.array(upper, dtype=float)
        n = diag.size
        if n < 3 or lower.size != n - 1 or upper.size != n - 1:
            raise AssemblyError("inconsistent tridiagonal band lengths")
        self.n = n
        self._lower0, self._diag0, self._upper0, self._corner = lower.copy(), diag.copy(), upper.copy(), corner
        # Row 0 <- row 0 - m * row 1 removes the (0, 2) entry.
        self._m = 0.0
        if corner != 0.0:
            if upper[1] == 0.0:
                raise AssemblyError("cannot eliminate corner entry: A[1, 2] == 0")
            self._m = corner / upper[1]
            diag[0] -= self._m * lower[0]
            upper[0] -= self._m * diag[1]
        dl, d, du, du2, ipiv, info = lapack.dgttrf(lower, diag, upper)
        if info != 0:
            raise AssemblyError(f"singular tridiagonal system (dgttrf info={info})")
        self._lu = (dl, d, du, du2, ipiv)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve for one right-hand side (1-D) or several (columns of a 2-D array)."""
        b = np.array(rhs, dtype=float)
        one_d = b.ndim == 1
        if one_d:
            b = b[:, None]
        if self._m != 0.0:
            b[0] -= self._m * b[1]
        x, info = lapack.dgttrs(*self._lu, b)
        if info != 0:
            raise AssemblyError(f"dgttrs failed (info={info})")
        return x[:, 0] if one_d else x

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Product with the original (unfactorized) matrix."""
        y = self._diag0 * x
        y[:-1] += self._upper0 * x[1:]
        y[1:] += self._lower0 * x[:-1]
        y[0] += self._corner * x[2]
        return y

    def dense(self) -> np.ndarray:
        A = np.diag(self._diag0) + np.diag(self._upper0, 1) + np.diag(self._lower0, -1)
        A[0, 2] += self._corner
        return A
