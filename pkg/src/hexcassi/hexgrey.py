"""Equivalent grey-scale square masks for hexagonal apertures.

A binary hexagonal mask, misaligned with the square detector lattice,
modulates each detector pixel through the three hexagonal elements that
overlap it. The overlap fractions depend only on the pixel's column
parity and on the x-offset ratio ``a`` between the two lattices (in
units of the pixel side), so the whole conversion reduces to two weight
triples:

    odd (1-based) columns   w = (1 - sqrt(3)/12 - a,
                                 sqrt(3)/24 + a/2,
                                 sqrt(3)/24 + a/2)
    even columns            w = (1/2 - sqrt(3)/24 - a/2,
                                 1/2 - sqrt(3)/24 - a/2,
                                 sqrt(3)/12 + a)

Each triple sums to one for every admissible offset. The admissible
range is capped where the first odd-column weight would go negative and
the three-element overlap picture stops holding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._binio import FormatError, _Reader, write_f32_array, write_f64, write_u32
from .apertures import HexAperture

SQRT3 = math.sqrt(3.0)

# Largest accepted offset ratio; the leading odd-column weight
# 1 - sqrt(3)/12 - a crosses zero at a = 0.8556...
A_MAX = 0.8557

GREY_MAGIC = b"SGRY1"


def _check_offset(a: float) -> None:
    if not (0.0 <= a < A_MAX):
        raise ValueError(f"offset ratio a must lie in [0, {A_MAX}), got {a}")


def type_weights(parity: str, a: float) -> tuple[float, float, float]:
    """Overlap weight triple for one column parity at offset ratio ``a``.

    Parity "I" is the odd (1-based) detector column, parity "II" the
    even column.
    """
    _check_offset(a)
    if parity == "I":
        return (1.0 - SQRT3 / 12.0 - a,
                SQRT3 / 24.0 + a / 2.0,
                SQRT3 / 24.0 + a / 2.0)
    if parity == "II":
        return (0.5 - SQRT3 / 24.0 - a / 2.0,
                0.5 - SQRT3 / 24.0 - a / 2.0,
                SQRT3 / 12.0 + a)
    raise ValueError(f"parity must be 'I' or 'II', got {parity!r}")


@dataclass(frozen=True)
class GreyAperture:
    """Real-valued square mask equivalent to a hexagonal aperture."""

    entries: np.ndarray
    offset_a: float

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.float64)
        if e.ndim != 2:
            raise ValueError("entries must be 2D")
        if not np.all(np.isfinite(e)):
            raise ValueError("entries must be finite")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def n_rows(self) -> int:
        return self.entries.shape[0]

    @property
    def n_cols(self) -> int:
        return self.entries.shape[1]

    def modulation(self) -> np.ndarray:
        return self.entries.copy()


def hex_to_grey(hexap: HexAperture, a: float) -> GreyAperture:
    """Convert a hexagonal mask into its grey-scale square equivalent.

    For the 1-based detector pixel (i, j), odd columns blend base cells
    (i, j), (i, j+1), (i+1, j+1); even columns blend (i, j), (i+1, j),
    (i, j+1). The base grid's extra row and column keep every reference
    in bounds.
    """
    _check_offset(a)
    b = hexap.grid.astype(np.float64)
    n, m = hexap.n_rows, hexap.n_cols
    w1_i, w2_i, w3_i = type_weights("I", a)
    w1_ii, w2_ii, w3_ii = type_weights("II", a)

    same = b[:n, :m]          # (i, j)
    right = b[:n, 1:m + 1]    # (i, j+1)
    below = b[1:n + 1, :m]    # (i+1, j)
    diag = b[1:n + 1, 1:m + 1]  # (i+1, j+1)

    grey = np.empty((n, m), dtype=np.float64)
    # 0-based even columns are 1-based odd: parity I.
    grey[:, 0::2] = (w1_i * same[:, 0::2]
                     + w2_i * right[:, 0::2]
                     + w3_i * diag[:, 0::2])
    grey[:, 1::2] = (w1_ii * same[:, 1::2]
                     + w2_ii * below[:, 1::2]
                     + w3_ii * right[:, 1::2])
    return GreyAperture(grey, a)


def grey_histogram(grey: GreyAperture) -> tuple[np.ndarray, np.ndarray]:
    """Distinct entry values and their counts, ascending."""
    return np.unique(grey.entries, return_counts=True)


def possible_grey_values(a: float) -> np.ndarray:
    """All entry values a binary hexagonal input can produce at offset a.

    Subset sums of the two weight triples, evaluated with the same
    arithmetic as :func:`hex_to_grey`; at most 16 values.
    """
    vals = []
    for parity in ("I", "II"):
        w1, w2, w3 = type_weights(parity, a)
        for b1 in (0.0, 1.0):
            for b2 in (0.0, 1.0):
                for b3 in (0.0, 1.0):
                    vals.append(w1 * b1 + w2 * b2 + w3 * b3)
    return np.unique(np.asarray(vals))


def save_grey(path, grey: GreyAperture) -> None:
    """Write SGRY1: magic, N, M, offset (float64), row-major float32."""
    with open(path, "wb") as fh:
        fh.write(GREY_MAGIC)
        write_u32(fh, grey.n_rows)
        write_u32(fh, grey.n_cols)
        write_f64(fh, grey.offset_a)
        write_f32_array(fh, grey.entries.ravel())


def load_grey(path) -> GreyAperture:
    with open(path, "rb") as fh:
        r = _Reader(fh)
        r.magic(GREY_MAGIC)
        at = r.offset
        n = r.u32("n_rows")
        m = r.u32("n_cols")
        if n < 1 or m < 1:
            raise FormatError(f"invalid dimensions N={n} M={m}", at)
        a = r.f64("offset ratio")
        entries = r.f32_array(n * m, "entries").astype(np.float64)
    return GreyAperture(entries.reshape(n, m), a)
