"""Propagation-of-chaos experiments for nonlinear Markov kernels."""

from ._nlmc import (
    boltzmann_gibbs,
    fk_moment_constants,
    kappa,
    moment_bound_sequence,
    mv_contraction_estimate,
    mv_moment_constants,
    mv_tau1_bound,
    poc_bound_general,
    rate_function,
    run_command,
    run_experiment,
    tensorization_check,
    w1_exact,
    w1_sorted_1d,
)

__all__ = [
    "boltzmann_gibbs",
    "fk_moment_constants",
    "kappa",
    "moment_bound_sequence",
    "mv_contraction_estimate",
    "mv_moment_constants",
    "mv_tau1_bound",
    "poc_bound_general",
    "rate_function",
    "run_command",
    "run_experiment",
    "tensorization_check",
    "w1_exact",
    "w1_sorted_1d",
]
