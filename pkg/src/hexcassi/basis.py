"""Orthonormal 3D representation basis: spatial symlet, spectral DCT.

The cube coefficients factor separably: a J-level 2D discrete wavelet
transform (16-tap symlet, periodic extension) acts on each band's
spatial plane, and an orthonormal DCT-II acts along the spectral axis
of each pixel. Both factors are exactly orthogonal matrices, so
analysis is the transpose (and inverse) of synthesis and the two
separable factors commute.

Spatial dims must be powers of two large enough that the coarsest
wavelet level still covers the 16-tap filter; this keeps the periodized
transform exactly orthonormal.
"""

from __future__ import annotations

import math

import numpy as np

from .cube import array_from_vector, vector_from_array

# 16-tap symlet scaling filter (sym8), least-asymmetric orthonormal
# family with eight vanishing moments. Values refined to float64
# resolution against the defining orthonormality and moment equations.
SYM8_LO = np.array([
    -0.0033824159510089384,
    -0.0005421323317832042,
    0.031695087811568164,
    0.007607487324843755,
    -0.1432942383514868,
    -0.06127335906733426,
    0.4813596512599634,
    0.7771857516994863,
    0.364441894835272,
    -0.05194583810808408,
    -0.027219029916864403,
    0.049137179673683515,
    0.0038087520138172805,
    -0.014952258337024535,
    -0.00030292051471315966,
    0.0018899503327600138,
])


def wavelet_filters() -> tuple[np.ndarray, np.ndarray]:
    """Scaling and wavelet analysis filters (h, g)."""
    h = SYM8_LO.copy()
    n = np.arange(h.size)
    g = (-1.0) ** n * h[::-1]
    return h, g


def validate_filters(tol: float = 1e-12) -> None:
    """Check the embedded filter against the orthonormality identities."""
    h, _ = wavelet_filters()
    if abs(h.sum() - math.sqrt(2.0)) > tol:
        raise AssertionError("scaling filter does not sum to sqrt(2)")
    if abs(np.dot(h, h) - 1.0) > tol:
        raise AssertionError("scaling filter is not unit norm")
    for k in range(1, h.size // 2):
        if abs(np.dot(h[2 * k:], h[:h.size - 2 * k])) > tol:
            raise AssertionError(f"shift-orthogonality fails at lag {2 * k}")


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def default_levels(n_rows: int, n_cols: int) -> int:
    """Decomposition depth rule: 3 levels at 64, 5 at 256, capped at 5."""
    return min(5, int(math.log2(min(n_rows, n_cols))) - 3)


def _analysis_matrix(length: int) -> np.ndarray:
    """Orthogonal one-level DWT matrix for a periodic signal."""
    h, g = wavelet_filters()
    half = length // 2
    w = np.zeros((length, length))
    for k in range(half):
        for n in range(h.size):
            col = (2 * k + n) % length
            w[k, col] += h[n]
            w[half + k, col] += g[n]
    return w


def _dct_matrix(length: int) -> np.ndarray:
    """Orthonormal DCT-II matrix."""
    k = np.arange(length)[:, None]
    n = np.arange(length)[None, :]
    c = np.cos(np.pi * (2 * n + 1) * k / (2.0 * length))
    c *= math.sqrt(2.0 / length)
    c[0, :] *= math.sqrt(0.5)
    return c


class SparsityBasis:
    """Matrix-free synthesize/analyze pair for the cube basis.

    Vectors follow the repo-wide cube ordering. ``synthesize`` maps
    coefficients to the cube, ``analyze`` is its exact adjoint and
    inverse.
    """

    def __init__(self, n_rows: int, n_cols: int, n_bands: int,
                 levels: int | None = None):
        validate_filters()
        if not (_is_pow2(n_rows) and _is_pow2(n_cols)):
            raise ValueError("spatial dims must be powers of two")
        if n_bands < 1:
            raise ValueError("need at least one band")
        if levels is None:
            levels = default_levels(n_rows, n_cols)
        if levels < 1:
            raise ValueError("need at least one wavelet level")
        if levels > int(math.log2(min(n_rows, n_cols))) - 3:
            raise ValueError(
                f"levels={levels} too deep for {n_rows}x{n_cols}: the "
                "coarsest plane must still cover the 16-tap filter"
            )
        self.n_rows = n_rows
        self.n_cols = n_cols
        self.n_bands = n_bands
        self.levels = levels
        self._row_mats = [_analysis_matrix(n_rows >> t) for t in range(levels)]
        self._col_mats = [_analysis_matrix(n_cols >> t) for t in range(levels)]
        self._dct = _dct_matrix(n_bands)

    @property
    def size(self) -> int:
        return self.n_rows * self.n_cols * self.n_bands

    # -- spatial factor -----------------------------------------------------

    def _dwt2(self, plane: np.ndarray) -> np.ndarray:
        out = plane.copy()
        for t in range(self.levels):
            r = self.n_rows >> t
            c = self.n_cols >> t
            sub = out[:r, :c]
            out[:r, :c] = self._row_mats[t] @ sub @ self._col_mats[t].T
        return out

    def _idwt2(self, coef: np.ndarray) -> np.ndarray:
        out = coef.copy()
        for t in reversed(range(self.levels)):
            r = self.n_rows >> t
            c = self.n_cols >> t
            sub = out[:r, :c]
            out[:r, :c] = self._row_mats[t].T @ sub @ self._col_mats[t]
        return out

    # -- full basis ----------------------------------------------------------

    def analyze(self, f: np.ndarray) -> np.ndarray:
        """Cube vector -> coefficient vector."""
        cube = array_from_vector(f, self.n_rows, self.n_cols, self.n_bands)
        cube = np.einsum("kl,ijl->ijk", self._dct, cube)
        for l in range(self.n_bands):
            cube[:, :, l] = self._dwt2(cube[:, :, l])
        return vector_from_array(cube)

    def synthesize(self, theta: np.ndarray) -> np.ndarray:
        """Coefficient vector -> cube vector."""
        cube = array_from_vector(theta, self.n_rows, self.n_cols, self.n_bands)
        for l in range(self.n_bands):
            cube[:, :, l] = self._idwt2(cube[:, :, l])
        cube = np.einsum("kl,ijk->ijl", self._dct, cube)
        return vector_from_array(cube)
