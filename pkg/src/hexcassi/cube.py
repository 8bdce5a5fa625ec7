"""Spectral data cubes, detector measurements, and the shared metrics.

The cube is the ground-truth object of the whole simulator: ``N x M``
spatial pixels times ``L`` spectral bands, values normalized to [0, 1].
Every operator in the package works on one fixed vectorization of the
cube, pinned here:

    q = l * N * M + j * N + i

(band-major, then column, then row, all 0-based). ``vectorize`` and
``devectorize`` are exact inverses of each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._binio import FormatError, _Reader, write_f32_array, write_u32

CUBE_MAGIC = b"SCUB1"
MEAS_MAGIC = b"SMEA1"


@dataclass(frozen=True)
class SpectralCube:
    """Immutable 3D spectral cube with voxels in [0, 1].

    ``voxels`` has shape ``(n_rows, n_cols, n_bands)`` and is indexed
    ``[i, j, l]``. ``wavelengths`` optionally labels the bands in nm.
    """

    voxels: np.ndarray
    wavelengths: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        v = np.asarray(self.voxels, dtype=np.float64)
        if v.ndim != 3 or min(v.shape) < 1:
            raise ValueError("voxels must be a 3D array with all dims >= 1")
        if not np.all(np.isfinite(v)):
            raise ValueError("voxels must be finite")
        if v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("voxels must lie in [0, 1]; normalize first")
        v.setflags(write=False)
        object.__setattr__(self, "voxels", v)
        if self.wavelengths is not None:
            w = tuple(float(x) for x in self.wavelengths)
            if len(w) != v.shape[2]:
                raise ValueError("need one wavelength per band")
            object.__setattr__(self, "wavelengths", w)

    @property
    def n_rows(self) -> int:
        return self.voxels.shape[0]

    @property
    def n_cols(self) -> int:
        return self.voxels.shape[1]

    @property
    def n_bands(self) -> int:
        return self.voxels.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.voxels.shape

    def band(self, l: int) -> np.ndarray:
        return self.voxels[:, :, l]

    @staticmethod
    def from_array(arr, wavelengths=None, normalize=False) -> "SpectralCube":
        """Build a cube, optionally dividing by the array maximum."""
        a = np.asarray(arr, dtype=np.float64)
        if normalize:
            peak = a.max() if a.size else 0.0
            if peak > 0:
                a = a / peak
        return SpectralCube(a, wavelengths)


def vectorize(cube: SpectralCube) -> np.ndarray:
    """Flatten a cube to the pinned ordering q = l*N*M + j*N + i."""
    return cube.voxels.transpose(2, 1, 0).ravel().copy()


def devectorize(
    vec: np.ndarray,
    n_rows: int,
    n_cols: int,
    n_bands: int,
    wavelengths=None,
) -> SpectralCube:
    """Inverse of :func:`vectorize`; rejects wrong-length vectors."""
    v = np.asarray(vec, dtype=np.float64)
    expected = n_rows * n_cols * n_bands
    if v.shape != (expected,):
        raise ValueError(f"vector length {v.shape} != {expected}")
    voxels = v.reshape(n_bands, n_cols, n_rows).transpose(2, 1, 0)
    return SpectralCube(voxels, wavelengths)


def array_from_vector(vec, n_rows, n_cols, n_bands) -> np.ndarray:
    """Like :func:`devectorize` but returns the bare (N, M, L) array.

    Used internally where intermediate values may leave [0, 1].
    """
    v = np.asarray(vec, dtype=np.float64)
    return v.reshape(n_bands, n_cols, n_rows).transpose(2, 1, 0).copy()


def vector_from_array(arr) -> np.ndarray:
    return np.asarray(arr, dtype=np.float64).transpose(2, 1, 0).ravel().copy()


@dataclass(frozen=True)
class MeasurementSet:
    """K detector planes of shape ``(N, M + L - 1)`` plus noise metadata."""

    planes: np.ndarray
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        p = np.asarray(self.planes, dtype=np.float64)
        if p.ndim != 3:
            raise ValueError("planes must have shape (K, N, M+L-1)")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        p.setflags(write=False)
        object.__setattr__(self, "planes", p)

    @property
    def k(self) -> int:
        return self.planes.shape[0]

    @property
    def plane_shape(self) -> tuple[int, int]:
        return self.planes.shape[1:]

    def vector(self) -> np.ndarray:
        """Concatenated [y1; y2; ...; yK], each plane in j*N + i order."""
        k, n, mc = self.planes.shape
        return self.planes.transpose(0, 2, 1).reshape(k * n * mc).copy()

    @staticmethod
    def from_vector(vec, k, n_rows, n_det_cols, noise_sigma=0.0, seed=0):
        v = np.asarray(vec, dtype=np.float64)
        if v.shape != (k * n_rows * n_det_cols,):
            raise ValueError("measurement vector has wrong length")
        planes = v.reshape(k, n_det_cols, n_rows).transpose(0, 2, 1)
        return MeasurementSet(planes, noise_sigma, seed)


@dataclass(frozen=True)
class ReconReport:
    """Summary of one reconstruction run."""

    band_psnr: tuple[float, ...]
    mean_psnr: float
    iterations: int
    final_objective: float
    tau: float
    wall_time_s: float = 0.0
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")

    @property
    def any_infinite(self) -> bool:
        return any(math.isinf(p) for p in self.band_psnr)


def psnr(reference: SpectralCube, estimate: SpectralCube, band: int) -> float:
    """Per-band PSNR in dB against peak 1.0.

    Returns ``inf`` when the band reconstructs exactly (zero MSE).
    """
    if reference.shape != estimate.shape:
        raise ValueError(
            f"dimension mismatch: {reference.shape} vs {estimate.shape}"
        )
    diff = reference.band(band) - estimate.band(band)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def mean_psnr(reference: SpectralCube, estimate: SpectralCube) -> float:
    """Arithmetic mean of the per-band PSNRs."""
    vals = [psnr(reference, estimate, l) for l in range(reference.n_bands)]
    return sum(vals) / len(vals)


def band_psnrs(reference: SpectralCube, estimate: SpectralCube) -> list[float]:
    return [psnr(reference, estimate, l) for l in range(reference.n_bands)]


def psnr_between_arrays(ref: np.ndarray, est: np.ndarray) -> float:
    diff = np.asarray(ref, dtype=np.float64) - np.asarray(est, dtype=np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


# ---------------------------------------------------------------------------
# Container formats
# ---------------------------------------------------------------------------

def save_cube(path, cube: SpectralCube) -> None:
    """Write the SCUB1 container (payload stored as float32)."""
    with open(path, "wb") as fh:
        fh.write(CUBE_MAGIC)
        write_u32(fh, cube.n_rows)
        write_u32(fh, cube.n_cols)
        write_u32(fh, cube.n_bands)
        if cube.wavelengths is None:
            write_u32(fh, 0)
        else:
            write_u32(fh, cube.n_bands)
            write_f32_array(fh, np.asarray(cube.wavelengths))
        write_f32_array(fh, vectorize(cube))


def load_cube(path) -> SpectralCube:
    with open(path, "rb") as fh:
        r = _Reader(fh)
        r.magic(CUBE_MAGIC)
        header_at = r.offset
        n = r.u32("n_rows")
        m = r.u32("n_cols")
        l = r.u32("n_bands")
        if n < 1 or m < 1 or l < 1:
            raise FormatError(
                f"invalid dimensions N={n} M={m} L={l}", header_at
            )
        w = r.u32("wavelength count")
        if w not in (0, l):
            raise FormatError(
                f"wavelength count {w} must be 0 or L={l}", header_at + 12
            )
        wavelengths = None
        if w:
            wavelengths = tuple(
                float(x) for x in r.f32_array(w, "wavelengths")
            )
        payload = r.f32_array(n * m * l, "voxel payload").astype(np.float64)
    return devectorize(payload, n, m, l, wavelengths)


def save_measurements(path, meas: MeasurementSet) -> None:
    """Write the SMEA1 container (noise metadata is not serialized)."""
    k, n, mc = meas.planes.shape
    with open(path, "wb") as fh:
        fh.write(MEAS_MAGIC)
        write_u32(fh, k)
        write_u32(fh, n)
        write_u32(fh, mc)
        write_f32_array(fh, meas.vector())


def load_measurements(path) -> MeasurementSet:
    with open(path, "rb") as fh:
        r = _Reader(fh)
        r.magic(MEAS_MAGIC)
        header_at = r.offset
        k = r.u32("snapshot count")
        n = r.u32("n_rows")
        mc = r.u32("detector columns")
        if k < 1 or n < 1 or mc < 1:
            raise FormatError(
                f"invalid dimensions K={k} N={n} Mc={mc}", header_at
            )
        payload = r.f32_array(k * n * mc, "plane payload").astype(np.float64)
    return MeasurementSet.from_vector(payload, k, n, mc)
