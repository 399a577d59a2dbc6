"""Sign-momentum optimizer family with convex reshapers, descent
certificates, and a sign-compressed distributed training simulator."""

from .dynamics import (ContinuousConfig, DiscreteConfig, OptState,
                       explicit_of_implicit, frank_wolfe_step, integrate_rk4,
                       mix_momentum, nesterov_pair_step, ode_rhs,
                       step_explicit, step_implicit)
from .errors import DomainViolation, NumericError
from .lyapunov import (Diagnostics, LyapCoeffs, coeffs, decomposition_fields,
                       delta1, delta2, descent_residual, fenchel_gap,
                       h_continuous, h_discrete, phase1_rate_check,
                       stationarity_residual)
from .phi import (TAU_DOM, GroupPartition, PhiSpec, dom_distance, is_in_dom,
                  phi_conj_subgrad, phi_conj_value, phi_subgrad, phi_value,
                  subgrad_lipschitz, value_lipschitz, yields_ternary)
from .problems import (GaussianIID, MinibatchSubset, Objective,
                       StochasticOracle, logistic_regression, quadratic,
                       sample_gradient, synthetic_logistic)

__all__ = [
    "ContinuousConfig", "DiscreteConfig", "OptState", "Diagnostics",
    "LyapCoeffs", "PhiSpec", "GroupPartition", "TAU_DOM",
    "DomainViolation", "NumericError",
    "phi_value", "phi_subgrad", "phi_conj_value", "phi_conj_subgrad",
    "dom_distance", "is_in_dom", "value_lipschitz", "subgrad_lipschitz",
    "yields_ternary",
    "step_explicit", "step_implicit", "explicit_of_implicit", "mix_momentum",
    "ode_rhs", "integrate_rk4", "nesterov_pair_step", "frank_wolfe_step",
    "h_continuous", "h_discrete", "delta1", "delta2", "coeffs",
    "descent_residual", "phase1_rate_check", "decomposition_fields",
    "stationarity_residual", "fenchel_gap",
    "Objective", "quadratic", "logistic_regression", "synthetic_logistic",
    "StochasticOracle", "GaussianIID", "MinibatchSubset", "sample_gradient",
]
