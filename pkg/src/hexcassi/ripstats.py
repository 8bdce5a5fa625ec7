"""Empirical checks of the sensing-quality theory.

Two detector pixels in the same row whose column distance is below the
band count share voxels through the dispersion shear; the Gram matrix
of the sensing operator couples them through sums over snapshots of
mask-entry products,

    r = sum_k t^k[i, j] * t^k[i, j + d],    d in {1, ..., L-1}.

The mean of r over random pixel pairs differentiates the aperture
families: lower is better conditioned. This module estimates those
means with seeded Monte Carlo sampling, checks the multishot
complementarity constant, and probes restricted-isometry constants of
small dense operators by direct subset enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .apertures import (
    ApertureSet,
    aperture_set,
    hex_valid_mask,
)
from .forward import modulation_masks

# Work cap for exhaustive subset enumeration in the delta_s probe.
MAX_ENUM_SUBSETS = 2_000_000


@dataclass(frozen=True)
class DisplacementPairSampler:
    """Uniform same-row pixel pairs at the dispersion-induced offsets.

    Displacements default to every column shift a band pair can induce,
    1 through L-1.
    """

    displacements: tuple[int, ...]

    @staticmethod
    def for_bands(n_bands: int) -> "DisplacementPairSampler":
        if n_bands < 2:
            raise ValueError("need at least two bands for a displacement")
        return DisplacementPairSampler(tuple(range(1, n_bands)))

    @staticmethod
    def adjacent() -> "DisplacementPairSampler":
        return DisplacementPairSampler((1,))

    def draw(self, rng: np.random.Generator, n_samples: int,
             n_rows: int, n_cols: int):
        d = np.asarray(self.displacements)
        if d.min() < 1 or d.max() >= n_cols:
            raise ValueError("displacements must fit inside the mask width")
        rows = rng.integers(0, n_rows, size=n_samples)
        offs = d[rng.integers(0, d.size, size=n_samples)]
        cols = rng.integers(0, n_cols - offs)
        return rows, cols, cols + offs


@dataclass(frozen=True)
class RStatReport:
    family: str
    k: int
    g: float
    n_samples: int
    mean_r: float
    stderr: float
    by_displacement: Optional[dict[int, float]] = None


def _sample_products(masks: np.ndarray, sampler: DisplacementPairSampler,
                     n_samples: int, rng: np.random.Generator) -> np.ndarray:
    _, n_rows, n_cols = masks.shape
    rows, ca, cb = sampler.draw(rng, n_samples, n_rows, n_cols)
    return (masks[:, rows, ca] * masks[:, rows, cb]).sum(axis=0), cb - ca


def r_statistic(aset: ApertureSet, grey_mode: bool,
                sampler: DisplacementPairSampler, n_samples: int, seed,
                offset_a: float = 0.0,
                per_displacement: bool = False) -> RStatReport:
    """Monte Carlo estimate of the mean snapshot-product statistic.

    Square families use the binary entries directly; hexagonal sets
    must pass ``grey_mode=True`` so products are taken between the
    grey-equivalent square entries.
    """
    if n_samples < 100:
        raise ValueError("need at least 100 samples")
    if aset.is_hex and not grey_mode:
        raise ValueError("hexagonal sets require grey_mode=True: the "
                         "statistic lives on the square lattice")
    if grey_mode:
        masks = np.stack(modulation_masks(aset, offset_a))
    else:
        masks = np.stack([ap.modulation() for ap in aset.apertures])

    rng = np.random.default_rng(seed)
    values, offs = _sample_products(masks, sampler, n_samples, rng)
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(n_samples))
    by_disp = None
    if per_displacement:
        by_disp = {
            int(d): float(values[offs == d].mean())
            for d in np.unique(offs)
        }
    return RStatReport(aset.family, aset.k, aset.g, n_samples, mean, stderr,
                       by_disp)


# ---------------------------------------------------------------------------
# Family ordering
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrderingReport:
    families: tuple[str, ...]
    means: tuple[float, ...]
    stderrs: tuple[float, ...]
    gaps: tuple[float, ...]
    gap_thresholds: tuple[float, ...]
    verdict: bool

    def to_dict(self) -> dict:
        return {
            "families": list(self.families),
            "means": list(self.means),
            "stderrs": list(self.stderrs),
            "gaps": list(self.gaps),
            "gap_thresholds": list(self.gap_thresholds),
            "verdict": self.verdict,
        }


_ORDERING_BUILDERS = {
    "SR": lambda n, m, g, k, seed: aperture_set(
        "rand-sq", n, m, g, k, seed, complementary=False),
    "SB": lambda n, m, g, k, seed: aperture_set(
        "bn-sq", n, m, g, k, seed, complementary=True),
    "HB": lambda n, m, g, k, seed: aperture_set(
        "bn-hex", n, m, g, k, seed, complementary=True),
}


def verify_ordering(n_rows: int, n_cols: int, g: float, k: int,
                    n_seeds: int, n_samples: int, n_bands: int = 6,
                    offset_a: float = 0.0, base_seed: int = 0,
                    families: Sequence[str] = ("SR", "SB", "HB")
                    ) -> OrderingReport:
    """Estimate the family means and test their strict ordering.

    The verdict is true when every consecutive pair of families shows
    mean(left) > mean(right) by more than twice the combined standard
    error. Complementary constructions require K*g = 1.
    """
    for fam in families:
        if fam not in _ORDERING_BUILDERS:
            raise ValueError(f"unknown family tag {fam!r}")
    if any(f in ("SB", "HB") for f in families) and abs(k * g - 1.0) > 1e-9:
        raise ValueError("complementary families require K*g = 1")

    sampler = DisplacementPairSampler.for_bands(n_bands)
    ss = np.random.SeedSequence(base_seed)
    seeds = ss.spawn(n_seeds * (len(families) + 1))

    all_values = {fam: [] for fam in families}
    for s in range(n_seeds):
        for fi, fam in enumerate(families):
            gen_seed = seeds[s * (len(families) + 1) + fi]
            sample_seed = seeds[s * (len(families) + 1) + len(families)]
            aset = _ORDERING_BUILDERS[fam](n_rows, n_cols, g, k, gen_seed)
            rep = r_statistic(aset, grey_mode=(fam == "HB"),
                              sampler=sampler, n_samples=n_samples,
                              seed=sample_seed, offset_a=offset_a)
            all_values[fam].append((rep.mean_r, rep.stderr))

    means = []
    stderrs = []
    for fam in families:
        per_seed = np.array(all_values[fam])
        means.append(float(per_seed[:, 0].mean()))
        # Pooled standard error of the grand mean over seeds.
        stderrs.append(
            float(np.sqrt((per_seed[:, 1] ** 2).sum()) / n_seeds))

    gaps = []
    thresholds = []
    verdict = True
    for a in range(len(families) - 1):
        gap = means[a] - means[a + 1]
        thr = 2.0 * math.sqrt(stderrs[a] ** 2 + stderrs[a + 1] ** 2)
        gaps.append(gap)
        thresholds.append(thr)
        verdict = verdict and (gap > thr)
    return OrderingReport(tuple(families), tuple(means), tuple(stderrs),
                          tuple(gaps), tuple(thresholds), verdict)


# ---------------------------------------------------------------------------
# Complementarity constant
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComplementarityReport:
    values: np.ndarray
    min: float
    mean: float
    max: float
    element_values: Optional[np.ndarray] = None

    @staticmethod
    def from_values(values, element_values=None) -> "ComplementarityReport":
        v = np.asarray(values, dtype=np.float64)
        return ComplementarityReport(
            values=v,
            min=float(v.min()),
            mean=float(v.mean()),
            max=float(v.max()),
            element_values=element_values,
        )


def complementarity_constant(aset: ApertureSet, grey_mode: bool = False,
                             offset_a: float = 0.0) -> ComplementarityReport:
    """Per-position sum over snapshots of squared transmittances.

    Binary mode evaluates the raw mask elements over the usable cells
    (exactly 1 everywhere for a complementary set). Grey mode evaluates
    the grey-equivalent square entries and additionally reports the
    element-level sums on the hexagonal grid.
    """
    if grey_mode:
        masks = np.stack(modulation_masks(aset, offset_a))
        values = (masks ** 2).sum(axis=0).ravel()
        element_values = None
        if aset.is_hex:
            grids = aset.element_arrays()
            valid = hex_valid_mask(aset.n_rows, aset.n_cols)
            element_values = (grids ** 2).sum(axis=0)[valid].ravel()
        return ComplementarityReport.from_values(values, element_values)

    grids = aset.element_arrays()
    valid = aset.valid_mask()
    values = (grids ** 2).sum(axis=0)[valid].ravel()
    return ComplementarityReport.from_values(values)


# ---------------------------------------------------------------------------
# Restricted isometry probe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RipProbeResult:
    s: int
    policy: str
    n_subsets: int
    delta_s: float
    normalization: float
    alpha_estimate: float


def brute_force_delta_s(dense_a: np.ndarray, s: int,
                        subset_policy: str = "exhaustive",
                        n_subsets: int = 2000, seed: int = 0
                        ) -> RipProbeResult:
    """Restricted isometry constant of a small dense operator.

    Columns are first scaled so the Gram diagonal averages one. The
    probe then maximizes the largest-magnitude eigenvalue of
    (A_t^T A_t - I) over column subsets t of size up to ``s``,
    enumerated exhaustively or sampled uniformly. ``alpha_estimate``
    reports the largest off-diagonal Gram magnitude as the computable
    stand-in for the sub-Gaussian scale of the theory.
    """
    a = np.asarray(dense_a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("dense_a must be a matrix")
    q2 = a.shape[1]
    if s < 1 or s > q2:
        raise ValueError(f"subset size s={s} out of range for {q2} columns")

    gram = a.T @ a
    c = float(np.trace(gram) / q2)
    if c <= 0:
        raise ValueError("operator has zero energy; cannot normalize")
    gram = gram / c

    off = gram - np.diag(np.diag(gram))
    alpha_est = float(np.abs(off).max()) if q2 > 1 else 0.0

    if subset_policy == "exhaustive":
        n_total = sum(math.comb(q2, size) for size in range(1, s + 1))
        if n_total > MAX_ENUM_SUBSETS:
            raise ValueError(
                f"exhaustive enumeration needs {n_total} subsets, over the "
                f"{MAX_ENUM_SUBSETS} work guard; use subset_policy='random'"
            )
        subsets = (
            idx for size in range(1, s + 1)
            for idx in combinations(range(q2), size)
        )
        count = n_total
    elif subset_policy == "random":
        rng = np.random.default_rng(seed)
        subsets = (
            tuple(rng.choice(q2, size=s, replace=False))
            for _ in range(n_subsets)
        )
        count = n_subsets
    else:
        raise ValueError("subset_policy must be 'exhaustive' or 'random'")

    delta = 0.0
    eye_cache = {size: np.eye(size) for size in range(1, s + 1)}
    for idx in subsets:
        sub = gram[np.ix_(idx, idx)] - eye_cache[len(idx)]
        ev = np.linalg.eigvalsh(sub)
        delta = max(delta, float(max(abs(ev[0]), abs(ev[-1]))))
    return RipProbeResult(
        s=s,
        policy=subset_policy,
        n_subsets=count,
        delta_s=delta,
        normalization=c,
        alpha_estimate=alpha_est,
    )
