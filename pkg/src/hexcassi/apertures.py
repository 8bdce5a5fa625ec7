"""Coded-aperture generation: random and blue-noise, square and hexagonal.

Four families are supported, named by lattice and statistics:

    rand-sq   i.i.d. Bernoulli(g) on the square lattice
    bn-sq     blue-noise dither mask on the square lattice
    rand-hex  i.i.d. Bernoulli(g) on the hexagonal lattice
    bn-hex    blue-noise dither mask on the hexagonal lattice

A hexagonal aperture for an ``N x M`` scene is stored on an
``(N+1) x (M+1)`` binary base grid. Columns alternate between N and
N+1 usable elements: the last cell of every odd column (1-based) falls
outside the detector area and is permanently zero. Multishot sets can
be made complementary, meaning the K masks partition the usable cells.

Blue-noise masks come from a void-and-cluster search: swap the "1"
sitting in the tightest cluster with the "0" sitting in the largest
void, under a toroidally wrapped Gaussian energy kernel, until no swap
lowers the pair energy. The search runs on an arbitrary admissible-cell
domain, which serves both the hexagonal validity mask and the recursive
construction of complementary sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

from ._binio import FormatError, _Reader, write_u32

FAMILIES = ("rand-sq", "bn-sq", "rand-hex", "bn-hex")

# Gaussian energy spread of the void-and-cluster search, in pixels.
VAC_SIGMA = 1.5


def _check_g(g: float) -> None:
    if not (0.0 < g < 1.0):
        raise ValueError(f"transmittance g must lie in (0, 1), got {g}")


@dataclass(frozen=True)
class SquareAperture:
    """Binary mask on the square lattice (1 = pass, 0 = block)."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 2:
            raise ValueError("bits must be 2D")
        if not np.isin(b, (0, 1)).all():
            raise ValueError("bits must be 0/1")
        b = b.astype(np.uint8)
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def n_rows(self) -> int:
        return self.bits.shape[0]

    @property
    def n_cols(self) -> int:
        return self.bits.shape[1]

    @property
    def transmittance(self) -> float:
        return float(self.bits.mean())

    def modulation(self) -> np.ndarray:
        """The N x M float mask seen by the forward model."""
        return self.bits.astype(np.float64)


def hex_valid_mask(n_rows: int, n_cols: int) -> np.ndarray:
    """Admissible cells of the (N+1) x (M+1) hexagonal base grid.

    The last row is invalid in odd (1-based) columns, i.e. 0-based even
    column indices.
    """
    mask = np.ones((n_rows + 1, n_cols + 1), dtype=bool)
    mask[n_rows, 0::2] = False
    return mask


@dataclass(frozen=True)
class HexAperture:
    """Binary mask on the hexagonal lattice, stored on its base grid.

    ``grid`` has shape (N+1, M+1); cells outside the validity mask are
    always zero and never counted in the transmittance.
    """

    grid: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid)
        if g.ndim != 2 or g.shape[0] < 2 or g.shape[1] < 2:
            raise ValueError("grid must be 2D with both dims >= 2")
        if not np.isin(g, (0, 1)).all():
            raise ValueError("grid must be 0/1")
        g = g.astype(np.uint8)
        valid = hex_valid_mask(g.shape[0] - 1, g.shape[1] - 1)
        if g[~valid].any():
            raise ValueError("invalid hexagonal cells must be zero")
        g.setflags(write=False)
        object.__setattr__(self, "grid", g)

    @property
    def n_rows(self) -> int:
        return self.grid.shape[0] - 1

    @property
    def n_cols(self) -> int:
        return self.grid.shape[1] - 1

    @property
    def valid(self) -> np.ndarray:
        return hex_valid_mask(self.n_rows, self.n_cols)

    @property
    def n_valid(self) -> int:
        return int(self.valid.sum())

    @property
    def transmittance(self) -> float:
        return float(self.grid[self.valid].mean())


Aperture = Union[SquareAperture, HexAperture]


# ---------------------------------------------------------------------------
# Blue-noise pattern search
# ---------------------------------------------------------------------------

def _wrapped_gaussian(shape: tuple[int, int], sigma: float) -> np.ndarray:
    """Gaussian kernel centered at (0, 0) under toroidal distance."""
    r, c = shape
    dy = np.minimum(np.arange(r), r - np.arange(r)).astype(np.float64)
    dx = np.minimum(np.arange(c), c - np.arange(c)).astype(np.float64)
    d2 = dy[:, None] ** 2 + dx[None, :] ** 2
    return np.exp(-d2 / (2.0 * sigma * sigma))


# Spectral-shaping cutoff as a fraction of the principal frequency. At
# 1.0 the half-density pattern collapses into an exact checkerboard
# (no seed variation); 0.98 keeps a few wave modes free.
_SHAPE_CUTOFF = 0.98

# Kernel widths of the polishing sweeps, widest first.
_POLISH_SIGMAS = (VAC_SIGMA, 1.0, 0.8)


def _spectral_shape(bits, domain, n_ones, tie, max_iters=80):
    """Iteratively suppress low-frequency energy at fixed ones-count.

    Alternates between zeroing the periodogram below roughly the
    principal frequency and re-binarizing to the ``n_ones`` largest
    values inside ``domain``. Converges in a few dozen rounds.
    """
    shape = domain.shape
    density = n_ones / bits.size
    fp = math.sqrt(density) if density <= 0.5 else math.sqrt(1.0 - density)
    fy = np.fft.fftfreq(shape[0])
    fx = np.fft.fftfreq(shape[1])
    radial = np.sqrt(fy[:, None] ** 2 + fx[None, :] ** 2)
    filt = np.ones(shape)
    filt[radial < _SHAPE_CUTOFF * fp] = 0.0
    filt[0, 0] = 1.0

    bits = bits.astype(np.float64)
    for _ in range(max_iters):
        x = np.real(np.fft.ifft2(np.fft.fft2(bits) * filt))
        x = np.where(domain, x + tie, -np.inf)
        top = np.argpartition(x.ravel(), -n_ones)[-n_ones:]
        new_bits = np.zeros(shape)
        new_bits.ravel()[top] = 1.0
        if np.array_equal(new_bits, bits):
            break
        bits = new_bits
    return bits.astype(np.uint8)


def void_and_cluster(bits, domain, sigma, tie, max_passes=60):
    """Swap-descent refinement of a binary pattern, in place.

    Each pass visits every 1 (tightest cluster first) and relocates it
    to the largest void whenever that strictly lowers the total pair
    energy under the toroidal Gaussian kernel. Stops after a pass with
    no swap. Returns the number of passes run.
    """
    kernel = _wrapped_gaussian(bits.shape, sigma)
    energy = np.real(
        np.fft.ifft2(np.fft.fft2(bits.astype(np.float64)) * np.fft.fft2(kernel))
    )
    for p in range(max_passes):
        ones_idx = np.flatnonzero((bits == 1).ravel())
        order = np.argsort(-energy.ravel()[ones_idx], kind="stable")
        moved = 0
        for flat in ones_idx[order]:
            ry, rx = np.unravel_index(flat, bits.shape)
            removed = np.roll(kernel, (ry, rx), axis=(0, 1))
            energy -= removed
            bits[ry, rx] = 0
            holes = domain & (bits == 0)
            v_flat = int(np.argmin(np.where(holes, energy + tie, np.inf)))
            vy, vx = np.unravel_index(v_flat, bits.shape)
            if (vy, vx) == (ry, rx) or energy[vy, vx] >= energy[ry, rx] - 1e-12:
                bits[ry, rx] = 1
                energy += removed
            else:
                bits[vy, vx] = 1
                energy += np.roll(kernel, (vy, vx), axis=(0, 1))
                moved += 1
        if moved == 0:
            return p + 1
    return max_passes


def blue_noise_pattern(domain, n_ones, rng) -> np.ndarray:
    """Blue-noise binary pattern with exactly ``n_ones`` ones in ``domain``.

    Builds the minority pattern (inverting afterwards when ones are the
    majority): seeded random start, spectral shaping to suppress
    low-frequency energy, then void-and-cluster sweeps to settle local
    structure. Deterministic given the generator state.
    """
    domain = np.asarray(domain, dtype=bool)
    n_avail = int(domain.sum())
    if not (0 <= n_ones <= n_avail):
        raise ValueError(f"n_ones={n_ones} not in [0, {n_avail}]")
    invert = n_ones > n_avail // 2
    target = n_avail - n_ones if invert else n_ones

    bits = np.zeros(domain.shape, dtype=np.uint8)
    if target > 0:
        tie = rng.random(domain.shape) * 1e-7
        chosen = rng.permutation(np.flatnonzero(domain.ravel()))[:target]
        bits.ravel()[chosen] = 1
        bits = _spectral_shape(bits, domain, target, tie)
        # Cap the sweep work on large grids; desk scale gets full polish.
        budget = int(2e9 // max(bits.size * max(target, 1), 1))
        passes = max(1, min(60, budget))
        for sigma in _POLISH_SIGMAS:
            void_and_cluster(bits, domain, sigma, tie, max_passes=passes)
    if invert:
        bits = (domain & (bits == 0)).astype(np.uint8)
    return bits


# ---------------------------------------------------------------------------
# Single-aperture generators
# ---------------------------------------------------------------------------

def random_square(n_rows, n_cols, g, seed) -> SquareAperture:
    """i.i.d. Bernoulli(g) square mask from the seeded generator."""
    _check_g(g)
    rng = np.random.default_rng(seed)
    bits = (rng.random((n_rows, n_cols)) < g).astype(np.uint8)
    return SquareAperture(bits)


def bluenoise_square(n_rows, n_cols, g, seed) -> SquareAperture:
    """Blue-noise square mask with exactly round(g*N*M) ones."""
    _check_g(g)
    rng = np.random.default_rng(seed)
    n_ones = int(round(g * n_rows * n_cols))
    domain = np.ones((n_rows, n_cols), dtype=bool)
    return SquareAperture(blue_noise_pattern(domain, n_ones, rng))


def random_hex(n_rows, n_cols, g, seed) -> HexAperture:
    """i.i.d. Bernoulli(g) over the usable hexagonal cells."""
    _check_g(g)
    rng = np.random.default_rng(seed)
    valid = hex_valid_mask(n_rows, n_cols)
    grid = np.zeros(valid.shape, dtype=np.uint8)
    draws = rng.random(valid.shape) < g
    grid[valid] = draws[valid]
    return HexAperture(grid)


def bluenoise_hex(n_rows, n_cols, g, seed) -> HexAperture:
    """Blue-noise hexagonal mask with exactly round(g * n_valid) ones.

    The pattern is searched on the (N+1) x (M+1) base grid with the
    withdrawn cells (last cell of each odd column) pinned to zero, so
    the usable-cell count is exact rather than merely close.
    """
    _check_g(g)
    rng = np.random.default_rng(seed)
    valid = hex_valid_mask(n_rows, n_cols)
    n_ones = int(round(g * valid.sum()))
    return HexAperture(blue_noise_pattern(valid, n_ones, rng))


_GENERATORS = {
    "rand-sq": random_square,
    "bn-sq": bluenoise_square,
    "rand-hex": random_hex,
    "bn-hex": bluenoise_hex,
}


def generate(family, n_rows, n_cols, g, seed) -> Aperture:
    if family not in _GENERATORS:
        raise ValueError(f"unknown family {family!r}; expected {FAMILIES}")
    return _GENERATORS[family](n_rows, n_cols, g, seed)


# ---------------------------------------------------------------------------
# Multishot sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ApertureSet:
    """K same-family apertures plus the multishot metadata."""

    family: str
    apertures: tuple[Aperture, ...]
    g: float
    complementary: bool
    seed: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if len(self.apertures) < 1:
            raise ValueError("need at least one aperture")
        shapes = {a.bits.shape if isinstance(a, SquareAperture) else a.grid.shape
                  for a in self.apertures}
        if len(shapes) != 1:
            raise ValueError("apertures must share dimensions")
        if self.complementary and not self.is_partition():
            raise ValueError("set flagged complementary but masks do not "
                             "partition the usable cells")

    @property
    def k(self) -> int:
        return len(self.apertures)

    @property
    def is_hex(self) -> bool:
        return self.family.endswith("hex")

    @property
    def n_rows(self) -> int:
        return self.apertures[0].n_rows

    @property
    def n_cols(self) -> int:
        return self.apertures[0].n_cols

    def element_arrays(self) -> np.ndarray:
        """Stack of the K raw binary element grids (float64)."""
        if self.is_hex:
            return np.stack([a.grid.astype(np.float64) for a in self.apertures])
        return np.stack([a.bits.astype(np.float64) for a in self.apertures])

    def valid_mask(self) -> np.ndarray:
        if self.is_hex:
            return hex_valid_mask(self.n_rows, self.n_cols)
        return np.ones((self.n_rows, self.n_cols), dtype=bool)

    def is_partition(self) -> bool:
        """True when every usable cell is 1 in exactly one shot."""
        total = self.element_arrays().sum(axis=0)
        valid = self.valid_mask()
        return bool(np.all(total[valid] == 1.0) and np.all(total[~valid] == 0.0))


def independent_set(family, n_rows, n_cols, g, k, seed) -> ApertureSet:
    """K independently generated apertures of one family."""
    _check_g(g)
    if k < 1:
        raise ValueError("k must be >= 1")
    if not isinstance(seed, np.random.SeedSequence):
        seed_seq = np.random.SeedSequence(seed)
    else:
        seed_seq = seed
    children = seed_seq.spawn(k)
    aps = tuple(
        generate(family, n_rows, n_cols, g, child) for child in children
    )
    return ApertureSet(family, aps, g, False, seed)


def complementary_set(family, n_rows, n_cols, k, seed) -> ApertureSet:
    """K complementary apertures (implied g = 1/K).

    Blue-noise families stack recursively: each shot is a blue-noise
    pattern searched on the still-unassigned cells, and the last shot
    takes the remainder. Random families assign each usable cell a
    uniform snapshot label. Every usable cell ends up transmitting in
    exactly one snapshot.
    """
    if k < 2:
        raise ValueError("complementary sets need k >= 2")
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    is_hex = family.endswith("hex")
    if is_hex:
        valid = hex_valid_mask(n_rows, n_cols)
    else:
        valid = np.ones((n_rows, n_cols), dtype=bool)

    rng = np.random.default_rng(seed)
    masks = []
    if family.startswith("bn"):
        remaining = valid.copy()
        for shot in range(k - 1):
            target = int(round(remaining.sum() / (k - shot)))
            bits = blue_noise_pattern(remaining, target, rng)
            masks.append(bits)
            remaining &= bits == 0
        masks.append(remaining.astype(np.uint8))
    else:
        labels = rng.integers(0, k, size=valid.shape)
        for shot in range(k):
            bits = ((labels == shot) & valid).astype(np.uint8)
            masks.append(bits)

    if is_hex:
        aps = tuple(HexAperture(m) for m in masks)
    else:
        aps = tuple(SquareAperture(m) for m in masks)
    return ApertureSet(family, aps, 1.0 / k, True, seed)


def aperture_set(
    family, n_rows, n_cols, g, k, seed, complementary=False
) -> ApertureSet:
    """Front door used by the experiment drivers."""
    if complementary:
        if abs(k * g - 1.0) > 1e-9:
            raise ValueError(
                f"complementary sets require K*g = 1, got K={k}, g={g}"
            )
        return complementary_set(family, n_rows, n_cols, k, seed)
    return independent_set(family, n_rows, n_cols, g, k, seed)


# ---------------------------------------------------------------------------
# Blue-noise diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlueNoiseScore:
    low_freq_energy_ratio: float
    mean_nn_distance: float


def principal_frequency(g: float) -> float:
    """Principal blue-noise frequency in cycles/pixel for grey level g."""
    _check_g(g)
    return float(np.sqrt(g) if g <= 0.5 else np.sqrt(1.0 - g))


def bluenoise_score(bits: np.ndarray) -> BlueNoiseScore:
    """Spectral and spatial quality diagnostics of a binary mask.

    ``low_freq_energy_ratio`` is the periodogram energy (toroidal
    assumption, DC excluded) inside radius 0.5 * principal frequency,
    over the total AC energy. ``mean_nn_distance`` is the average
    nearest-neighbor distance among the ones.
    """
    b = np.asarray(bits, dtype=np.float64)
    if b.ndim != 2:
        raise ValueError("mask must be 2D")
    n_ones = int(b.sum())
    if n_ones == 0 or n_ones == b.size:
        raise ValueError("mask has no AC spectrum (all zeros or all ones)")
    if n_ones < 2:
        raise ValueError("need at least two ones for a neighbor distance")

    g = n_ones / b.size
    spec = np.abs(np.fft.fft2(b - b.mean())) ** 2
    fy = np.fft.fftfreq(b.shape[0])
    fx = np.fft.fftfreq(b.shape[1])
    radial = np.sqrt(fy[:, None] ** 2 + fx[None, :] ** 2)
    ac = spec.copy()
    ac[0, 0] = 0.0
    total = ac.sum()
    low = ac[(radial < 0.5 * principal_frequency(g)) & (radial > 0)].sum()

    points = np.argwhere(b > 0).astype(np.float64)
    tree = cKDTree(points)
    dists, _ = tree.query(points, k=2)
    mean_nn = float(dists[:, 1].mean())
    return BlueNoiseScore(float(low / total), mean_nn)


# ---------------------------------------------------------------------------
# SAPT1 container
# ---------------------------------------------------------------------------

APERTURE_MAGIC = b"SAPT1"
_FAMILY_CODES = {name: code for code, name in enumerate(FAMILIES)}


def save_aperture_set(path, aset: ApertureSet) -> None:
    """Write SAPT1: magic, family byte, N, M, K, then bit-packed masks.

    Stored dims are the logical scene dims; hexagonal masks pack their
    (N+1) x (M+1) base grid with invalid cells as zero bits.
    """
    with open(path, "wb") as fh:
        fh.write(APERTURE_MAGIC)
        fh.write(bytes([_FAMILY_CODES[aset.family]]))
        write_u32(fh, aset.n_rows)
        write_u32(fh, aset.n_cols)
        write_u32(fh, aset.k)
        for ap in aset.apertures:
            raw = ap.grid if isinstance(ap, HexAperture) else ap.bits
            fh.write(np.packbits(raw.ravel()).tobytes())


def load_aperture_set(path) -> ApertureSet:
    """Read SAPT1. Requested g and seed are not serialized; the loaded
    set reports the achieved transmittance and seed 0."""
    with open(path, "rb") as fh:
        r = _Reader(fh)
        r.magic(APERTURE_MAGIC)
        fam_at = r.offset
        code = int(r.bytes_array(1, "family byte")[0])
        if code >= len(FAMILIES):
            raise FormatError(f"unknown family code {code}", fam_at)
        family = FAMILIES[code]
        n = r.u32("n_rows")
        m = r.u32("n_cols")
        k = r.u32("snapshot count")
        if n < 1 or m < 1 or k < 1:
            raise FormatError(f"invalid dimensions N={n} M={m} K={k}", fam_at + 1)
        is_hex = family.endswith("hex")
        rows, cols = (n + 1, m + 1) if is_hex else (n, m)
        n_bytes = (rows * cols + 7) // 8
        aps = []
        for _ in range(k):
            raw = r.bytes_array(n_bytes, "mask payload")
            bits = np.unpackbits(raw)[: rows * cols].reshape(rows, cols)
            aps.append(HexAperture(bits) if is_hex else SquareAperture(bits))
    aps = tuple(aps)
    g = float(np.mean([
        ap.transmittance for ap in aps
    ]))
    total = np.stack([
        (ap.grid if is_hex else ap.bits).astype(np.float64) for ap in aps
    ]).sum(axis=0)
    valid = (hex_valid_mask(n, m) if is_hex
             else np.ones((n, m), dtype=bool))
    comp = bool(np.all(total[valid] == 1.0) and np.all(total[~valid] == 0.0))
    return ApertureSet(family, aps, g, comp, 0)
