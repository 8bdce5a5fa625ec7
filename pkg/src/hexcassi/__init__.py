"""Desk-scale CASSI simulator with hexagonal blue-noise coded apertures.

The package covers the full snapshot-spectral-imaging loop: coded
aperture design (random / blue-noise, square / hexagonal lattices,
complementary multishot sets), the grey-scale square equivalence of
hexagonal masks, the dispersive forward operator with its adjoint, an
orthonormal wavelet x DCT sparsity basis, a gradient-projection l1
solver, and Monte Carlo machinery for the sensing-quality statistics.
"""

from .apertures import (
    ApertureSet,
    BlueNoiseScore,
    FAMILIES,
    HexAperture,
    SquareAperture,
    aperture_set,
    bluenoise_hex,
    bluenoise_score,
    bluenoise_square,
    complementary_set,
    hex_valid_mask,
    independent_set,
    load_aperture_set,
    random_hex,
    random_square,
    blue_noise_pattern,
    save_aperture_set,
    void_and_cluster,
)
from .basis import SparsityBasis, default_levels
from .cube import (
    MeasurementSet,
    ReconReport,
    SpectralCube,
    band_psnrs,
    devectorize,
    load_cube,
    load_measurements,
    mean_psnr,
    psnr,
    save_cube,
    save_measurements,
    vectorize,
)
from ._binio import FormatError
from .forward import ForwardOperator, NoiseModel, measure, modulation_masks
from .gpsr import (
    IdentityOperator,
    LineSearchResult,
    SensingOperator,
    SolverConfig,
    SolverDivergedError,
    SolverTrace,
    line_search_tau,
    optimality_residuals,
    reconstruct,
    solve,
)
from .hexgrey import (
    A_MAX,
    GreyAperture,
    grey_histogram,
    hex_to_grey,
    load_grey,
    possible_grey_values,
    save_grey,
    type_weights,
)
from .ripstats import (
    ComplementarityReport,
    DisplacementPairSampler,
    OrderingReport,
    RipProbeResult,
    RStatReport,
    brute_force_delta_s,
    complementarity_constant,
    r_statistic,
    verify_ordering,
)
from .scenes import BAND_WAVELENGTHS_6, SCENE_KINDS, synth_scene

__version__ = "0.1.0"
