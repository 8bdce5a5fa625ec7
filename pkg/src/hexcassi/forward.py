"""Discrete CASSI forward model and its adjoint.

One snapshot codes the cube with an N x M mask, shears band l sideways
by l detector columns (0-based), and integrates along the spectral
axis, so the detector plane is N x (M + L - 1):

    Y[i, jd] = sum_l F[i, jd - l, l] * T[i, jd - l]

with out-of-range spatial columns contributing zero. K snapshots
concatenate vertically in the vector picture. The operator is linear
and its adjoint is exact; a dense materialization is available for
small instances and is built by direct index enumeration so it can
serve as an independent witness for the matrix-free path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .apertures import ApertureSet
from .cube import (
    MeasurementSet,
    SpectralCube,
    array_from_vector,
    vector_from_array,
)
from .hexgrey import hex_to_grey

MATERIALIZE_GUARD = 10 ** 7


@dataclass(frozen=True)
class NoiseModel:
    """Additive detector noise; ``none`` ignores the seed entirely."""

    kind: str = "none"
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "gaussian"):
            raise ValueError("noise kind must be 'none' or 'gaussian'")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")

    def apply(self, planes: np.ndarray) -> np.ndarray:
        if self.kind == "none" or self.sigma == 0.0:
            return planes
        rng = np.random.default_rng(self.seed)
        return planes + rng.normal(0.0, self.sigma, size=planes.shape)


def modulation_masks(aset: ApertureSet, offset_a: float = 0.0) -> list[np.ndarray]:
    """Per-snapshot N x M float masks; hexagonal sets are grey-converted."""
    if aset.is_hex:
        return [hex_to_grey(ap, offset_a).entries for ap in aset.apertures]
    return [ap.modulation() for ap in aset.apertures]


class ForwardOperator:
    """Matrix-free H (and H^T) for K snapshots of one scene geometry."""

    def __init__(self, masks: Sequence[np.ndarray], n_bands: int):
        masks = [np.asarray(m, dtype=np.float64) for m in masks]
        if not masks:
            raise ValueError("need at least one mask")
        shape = masks[0].shape
        if any(m.shape != shape for m in masks):
            raise ValueError("masks must share dimensions")
        if any(m.min() < 0.0 or m.max() > 1.0 for m in masks):
            raise ValueError("mask entries must lie in [0, 1]")
        if n_bands < 1:
            raise ValueError("need at least one band")
        self.masks = np.stack(masks)
        self.k = len(masks)
        self.n_rows, self.n_cols = shape
        self.n_bands = n_bands

    @classmethod
    def from_aperture_set(cls, aset: ApertureSet, n_bands: int,
                          offset_a: float = 0.0) -> "ForwardOperator":
        return cls(modulation_masks(aset, offset_a), n_bands)

    @property
    def n_det_cols(self) -> int:
        return self.n_cols + self.n_bands - 1

    @property
    def plane_size(self) -> int:
        return self.n_rows * self.n_det_cols

    @property
    def shape(self) -> tuple[int, int]:
        return (self.k * self.plane_size,
                self.n_rows * self.n_cols * self.n_bands)

    # -- core maps ------------------------------------------------------------

    def _measure_planes(self, voxels: np.ndarray) -> np.ndarray:
        n, m, L = voxels.shape
        planes = np.zeros((self.k, n, self.n_det_cols))
        for kk in range(self.k):
            coded = voxels * self.masks[kk][:, :, None]
            for l in range(L):
                planes[kk, :, l:l + m] += coded[:, :, l]
        return planes

    def matvec(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=np.float64)
        if f.shape != (self.shape[1],):
            raise ValueError(f"expected length {self.shape[1]}, got {f.shape}")
        voxels = array_from_vector(f, self.n_rows, self.n_cols, self.n_bands)
        planes = self._measure_planes(voxels)
        return planes.transpose(0, 2, 1).reshape(self.shape[0])

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (self.shape[0],):
            raise ValueError(f"expected length {self.shape[0]}, got {y.shape}")
        planes = y.reshape(self.k, self.n_det_cols, self.n_rows)
        planes = planes.transpose(0, 2, 1)
        voxels = np.zeros((self.n_rows, self.n_cols, self.n_bands))
        for kk in range(self.k):
            for l in range(self.n_bands):
                voxels[:, :, l] += (self.masks[kk]
                                    * planes[kk, :, l:l + self.n_cols])
        return vector_from_array(voxels)

    # -- conveniences -----------------------------------------------------------

    def measure(self, cube: SpectralCube,
                noise: Optional[NoiseModel] = None) -> MeasurementSet:
        """Simulate the detector planes for one cube."""
        if cube.shape != (self.n_rows, self.n_cols, self.n_bands):
            raise ValueError(
                f"cube shape {cube.shape} does not match operator "
                f"({self.n_rows}, {self.n_cols}, {self.n_bands})"
            )
        planes = self._measure_planes(cube.voxels)
        if noise is None:
            noise = NoiseModel()
        noisy = noise.apply(planes)
        return MeasurementSet(noisy, noise.sigma, noise.seed)

    def materialize(self) -> np.ndarray:
        """Dense H, built entry-by-entry from the index rule.

        Guarded to small instances; each row carries at most L
        nonzeros, one per band diagonal.
        """
        rows, cols = self.shape
        if rows * cols > MATERIALIZE_GUARD:
            raise ValueError(
                f"dense H would hold {rows * cols} entries, over the "
                f"{MATERIALIZE_GUARD} guard"
            )
        n, m, L = self.n_rows, self.n_cols, self.n_bands
        v = self.plane_size
        nm = n * m
        dense = np.zeros((rows, cols))
        for kk in range(self.k):
            for jd in range(self.n_det_cols):
                for i in range(n):
                    row = kk * v + jd * n + i
                    for l in range(L):
                        js = jd - l
                        if 0 <= js < m:
                            dense[row, l * nm + js * n + i] = \
                                self.masks[kk, i, js]
        return dense


def measure(cube: SpectralCube, aset: ApertureSet,
            noise: Optional[NoiseModel] = None,
            offset_a: float = 0.0) -> MeasurementSet:
    """One-call forward simulation from an aperture set."""
    op = ForwardOperator.from_aperture_set(aset, cube.n_bands, offset_a)
    return op.measure(cube, noise)
