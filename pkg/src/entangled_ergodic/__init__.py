"""Entangled ergodic averages of Dunford-Schwartz operators on finite probability spaces."""

__version__ = "0.1.0"

from .errors import (
    BudgetError,
    DefectiveSpectrumError,
    EntangledError,
    MeasureNotPreservedError,
    NotDunfordSchwartzError,
    ValidationError,
)
from .measure_space import FiniteMeasureSpace, Func, dual_norm, norm_inf, norm_p, pairing
from .operators import (
    OperatorRep,
    adjoint,
    adjoint_norm,
    cyclic_shift,
    identity,
    is_dunford_schwartz,
    koopman_from_map,
    modulus,
    operator_norm,
    random_ds,
    volterra_discrete,
)
from .polynomial import PolynomialIndex
from .engine import (
    EntangledProblem,
    EntanglementMap,
    absolute_entangled_average,
    average_trajectory,
    certify_joint_bound,
    entangled_average,
    naive_average,
    polynomial_entangled_average,
)
from .jdlg import SpectralSplit, spectral_split, split_function, verify_split
from .weights import (
    WeightSequence,
    besicovitch_seminorm,
    cesaro_abs_mean,
    correlation_sequence,
    eval_weights,
    explicit,
    linear_sequence,
    product,
    trig_poly,
    weighted_average,
)
from .splitting import a1_certificate, build_splitting_tree, verify_proof_bounds

__all__ = [
    "BudgetError",
    "DefectiveSpectrumError",
    "EntangledError",
    "MeasureNotPreservedError",
    "NotDunfordSchwartzError",
    "ValidationError",
    "OperatorRep",
    "adjoint",
    "adjoint_norm",
    "cyclic_shift",
    "identity",
    "is_dunford_schwartz",
    "koopman_from_map",
    "modulus",
    "operator_norm",
    "random_ds",
    "volterra_discrete",
    "EntangledProblem",
    "EntanglementMap",
    "absolute_entangled_average",
    "average_trajectory",
    "certify_joint_bound",
    "entangled_average",
    "naive_average",
    "polynomial_entangled_average",
    "WeightSequence",
    "besicovitch_seminorm",
    "cesaro_abs_mean",
    "correlation_sequence",
    "eval_weights",
    "explicit",
    "linear_sequence",
    "product",
    "trig_poly",
    "weighted_average",
    "FiniteMeasureSpace",
    "Func",
    "dual_norm",
    "norm_inf",
    "norm_p",
    "pairing",
    "PolynomialIndex",
    "SpectralSplit",
    "spectral_split",
    "split_function",
    "verify_split",
    "a1_certificate",
    "build_splitting_tree",
    "verify_proof_bounds",
]
