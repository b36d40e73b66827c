"""Pseudospectral laboratory for the fractional-dispersion Benjamin-Ono flow."""

from .conservation import AprioriReport, apriori_check, forcing_ratio, l2_drift, low_freq_project
from .estimates import (
    RatioReport,
    RegionLabel,
    SymbolWeights,
    bilinear_I,
    bilinear_K,
    classify_region,
    convolution_weights,
    estimate_ratio,
    modulation_weights,
    resonance,
    resonance_infimum,
    spacetime_inner,
)
from .evolution import (
    BlowUpError,
    PicardHistory,
    Trajectory,
    duhamel_apply,
    export_trajectory_binary,
    export_trajectory_csv,
    load_trajectory_binary,
    nonlinearity,
    picard_solve,
    solve_reference,
)
from .norms import (
    EstimateParams,
    SpaceTimeField,
    admissible_b_prime_bound,
    bourgain_norm,
    localized_lift,
    mixed_lebesgue_norm,
    sobolev_norm,
)
from .spectral import (
    BUMP_PROFILE,
    CutoffProfile,
    FrequencyGrid,
    SpectralField,
    apply_multiplier,
    bump,
    cutoff_value,
    forward_transform,
    inverse_transform,
    l2_norm,
    make_grid,
    make_test_field,
    propagate,
    split_frequencies,
)

__version__ = "0.1.0"
