"""Deterministic synthetic spectral scenes for desk-scale experiments.

Three generators cover the interesting regimes: smooth Gaussian blobs
(very wavelet-compressible), rectangle/bar charts with hard edges, and
smooth spatial ramps with strongly varying spectral slopes. All scenes
are normalized to [0, 1], use smooth low-order spectral signatures, and
are exact functions of (kind, dims, seed).
"""

from __future__ import annotations

import math

import numpy as np

from .cube import SpectralCube

SCENE_KINDS = ("smooth-blobs", "text-edges", "spectral-ramps")

# Six-band scenes carry these band centers (nm).
BAND_WAVELENGTHS_6 = (450.0, 485.0, 520.0, 554.0, 589.0, 624.0)


def _spectral_signature(rng: np.random.Generator, n_bands: int) -> np.ndarray:
    """Smooth positive signature: DC plus two low DCT modes."""
    l = np.arange(n_bands)
    sig = np.full(n_bands, 1.0)
    for p, scale in ((1, 0.45), (2, 0.25)):
        coef = rng.uniform(-scale, scale)
        sig = sig + coef * np.cos(np.pi * (2 * l + 1) * p / (2.0 * n_bands))
    return np.maximum(sig, 0.05)


def _smooth_blobs(rng, n_rows, n_cols, n_bands):
    yy, xx = np.mgrid[0:n_rows, 0:n_cols].astype(np.float64)
    cube = np.zeros((n_rows, n_cols, n_bands))
    n_blobs = max(6, (n_rows * n_cols) // 640)
    for _ in range(n_blobs):
        cy = rng.uniform(0.1 * n_rows, 0.9 * n_rows)
        cx = rng.uniform(0.1 * n_cols, 0.9 * n_cols)
        sy = rng.uniform(n_rows / 16.0, n_rows / 6.0)
        sx = rng.uniform(n_cols / 16.0, n_cols / 6.0)
        amp = rng.uniform(0.35, 1.0)
        blob = amp * np.exp(-(((yy - cy) / sy) ** 2
                             + ((xx - cx) / sx) ** 2) / 2.0)
        cube += blob[:, :, None] * _spectral_signature(rng, n_bands)
    return cube


def _text_edges(rng, n_rows, n_cols, n_bands):
    cube = np.zeros((n_rows, n_cols, n_bands))
    n_rects = max(8, (n_rows * n_cols) // 512)
    for _ in range(n_rects):
        h = int(rng.integers(max(2, n_rows // 16), max(3, n_rows // 4)))
        w = int(rng.integers(max(2, n_cols // 16), max(3, n_cols // 4)))
        # Every other shape is a thin bar for stroke-like edges.
        if rng.random() < 0.5:
            h = max(1, h // 4)
        r0 = int(rng.integers(0, n_rows - h))
        c0 = int(rng.integers(0, n_cols - w))
        amp = rng.uniform(0.3, 1.0)
        sig = _spectral_signature(rng, n_bands)
        cube[r0:r0 + h, c0:c0 + w, :] += amp * sig
    return cube


def _spectral_ramps(rng, n_rows, n_cols, n_bands):
    yy, xx = np.mgrid[0:n_rows, 0:n_cols].astype(np.float64)
    yy /= max(n_rows - 1, 1)
    xx /= max(n_cols - 1, 1)
    l = np.arange(n_bands) / max(n_bands - 1, 1)
    cube = np.zeros((n_rows, n_cols, n_bands))
    n_fields = 4
    for _ in range(n_fields):
        phase_y = rng.uniform(0, 2 * math.pi)
        phase_x = rng.uniform(0, 2 * math.pi)
        spatial = (0.5 + 0.5 * np.cos(2 * math.pi * rng.uniform(0.5, 1.5) * yy
                                      + phase_y)) \
            * (0.5 + 0.5 * np.cos(2 * math.pi * rng.uniform(0.5, 1.5) * xx
                                  + phase_x))
        slope = rng.uniform(-0.9, 0.9)
        ramp = np.clip(0.55 + slope * (l - 0.5), 0.05, None)
        cube += spatial[:, :, None] * ramp
    return cube


_SCENE_BUILDERS = {
    "smooth-blobs": _smooth_blobs,
    "text-edges": _text_edges,
    "spectral-ramps": _spectral_ramps,
}


def synth_scene(kind: str, n_rows: int, n_cols: int, n_bands: int,
                seed) -> SpectralCube:
    """Build a synthetic scene, normalized so the peak voxel is 1."""
    if kind not in _SCENE_BUILDERS:
        raise ValueError(f"unknown scene kind {kind!r}; expected {SCENE_KINDS}")
    rng = np.random.default_rng(seed)
    cube = _SCENE_BUILDERS[kind](rng, n_rows, n_cols, n_bands)
    peak = cube.max()
    if peak > 0:
        cube = cube / peak
    cube = np.clip(cube, 0.0, 1.0)
    wavelengths = BAND_WAVELENGTHS_6 if n_bands == 6 else None
    return SpectralCube(cube, wavelengths)
