"""Suboptimal H-infinity synthesis for general (improper) discrete-time systems."""

from . import errors
from .analysis import bounded_real, hinf_norm, is_inner
from .errors import HinfError, InfeasibleError, InputError, NumericalError
from .pencil import (
    DeflationResult,
    MatrixPencil,
    Spectrum,
    generalized_spectrum,
    numerical_rank,
    ordered_stable_deflation,
    solve_stein,
)
from .realization import (
    CenteredRealization,
    DescriptorRealization,
    PartitionedPlant,
    d22_loop_shift,
    evaluate,
    evaluate_sharp,
    from_descriptor,
    gamma_scale,
    is_stable,
    lft_lower,
    star_product,
    static_gain,
)
from .riccati import PopovStructure, solve_ddtare, spectral_factor
from .synthesis import (
    central_controller,
    check_hypotheses,
    minimal_gamma,
    parametrize,
    solve_central_pair,
    synthesize,
    verify_closed_loop,
)

__version__ = "0.1.0"

__all__ = [
    "errors",
    "HinfError",
    "InfeasibleError",
    "InputError",
    "NumericalError",
    "DeflationResult",
    "MatrixPencil",
    "Spectrum",
    "generalized_spectrum",
    "numerical_rank",
    "ordered_stable_deflation",
    "solve_stein",
    "CenteredRealization",
    "DescriptorRealization",
    "PartitionedPlant",
    "d22_loop_shift",
    "evaluate",
    "evaluate_sharp",
    "from_descriptor",
    "gamma_scale",
    "is_stable",
    "lft_lower",
    "star_product",
    "static_gain",
    "PopovStructure",
    "solve_ddtare",
    "spectral_factor",
    "bounded_real",
    "hinf_norm",
    "is_inner",
    "central_controller",
    "check_hypotheses",
    "minimal_gamma",
    "parametrize",
    "solve_central_pair",
    "synthesize",
    "verify_closed_loop",
]
