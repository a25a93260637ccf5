"""OFDM channel estimation from sparse pilots via a convolutional NTK.

The library simulates tapped-delay-line fading channels on a time-frequency
resource grid, extracts least-squares channel values at lattice pilot
positions, and imputes the full grid with kernel ridge regression under a
closed-form convolutional neural tangent kernel. Classical interpolators
(nearest, KNN, separable linear) and an NMSE sweep harness are included for
benchmarking.
"""

from .baselines import knn_interpolate, linear_interpolate, nearest_interpolate
from .chansim import (
    ChannelRealization,
    NoiseSpec,
    TdlProfile,
    default_profile,
    derive_seed,
    generate_channel,
    make_qpsk_grid,
    transmit,
)
from .cntk import (
    CntkConfig,
    CoordinateKernel,
    PriorTensor,
    PriorWeights,
    build_estimation_prior,
    build_prior,
    compute_cntk,
    leaky_relu_duals,
    mc_dual_oracle,
    normalize_kernel,
    patch_aggregate,
)
from .evaluate import (
    METHOD_TAGS,
    SweepResult,
    SweepRow,
    make_method,
    nmse_db,
    run_sweep,
    time_method,
)
from .grid import (
    PATTERN_PRESETS,
    PilotPattern,
    ResourceGrid,
    SparseChannelEstimate,
    ls_estimate,
    make_pilot_pattern,
    preset_pattern,
)
from .imputer import (
    ImputedChannel,
    RegressionProblem,
    SingularKernelError,
    auto_ridge,
    estimate_channel_cntk,
    kernel_regress,
    split_blocks,
    stitch_blocks,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelRealization",
    "CntkConfig",
    "CoordinateKernel",
    "ImputedChannel",
    "METHOD_TAGS",
    "NoiseSpec",
    "PATTERN_PRESETS",
    "PilotPattern",
    "PriorTensor",
    "PriorWeights",
    "RegressionProblem",
    "ResourceGrid",
    "SingularKernelError",
    "SparseChannelEstimate",
    "SweepResult",
    "SweepRow",
    "TdlProfile",
    "auto_ridge",
    "build_estimation_prior",
    "build_prior",
    "compute_cntk",
    "default_profile",
    "derive_seed",
    "estimate_channel_cntk",
    "generate_channel",
    "kernel_regress",
    "knn_interpolate",
    "leaky_relu_duals",
    "linear_interpolate",
    "ls_estimate",
    "make_method",
    "make_pilot_pattern",
    "make_qpsk_grid",
    "mc_dual_oracle",
    "nearest_interpolate",
    "nmse_db",
    "normalize_kernel",
    "patch_aggregate",
    "preset_pattern",
    "run_sweep",
    "split_blocks",
    "stitch_blocks",
    "time_method",
    "transmit",
]
