"""
MPRE - Simulazione e verifica del processo multifrazionario con esponente casuale.

X(t) = int_0^1 (t - s)_+^{A(s) - 1/2} dB(s), con A processo adattato a valori in (1/2, 1).

Questo modulo fornisce strumenti per:
- Generare moti browniani su griglie diadiche e i loro coefficienti di Haar
- Costruire esponenti costanti, sinusoidali, tabulati o da Riemann-Liouville normalizzato
- Calcolare medie di cella e prodotti scalari di Haar del nucleo
- Simulare gli schemi a punto sinistro, a media di cella e la serie di Haar troncata
- Verificare convergenza, regolarita' di Hoelder e stime sui coefficienti
"""

__version__ = "1.0.0"
__author__ = "MPRE Toolkit Project"

from mpre.errors import (
    MPREError,
    ConfigError,
    LevelOverflowError,
    InsufficientResolutionError,
    BoundViolationError,
    DomainError,
    DegenerateNormalizationError,
    GridMismatchError,
    InsufficientLevelsError,
    MemoryGuardError,
)

from mpre.brownian import (
    DyadicGrid,
    BrownianPath,
    HaarCoefficients,
    sample_brownian,
    refine,
    haar_coefficients,
    dump_increments,
    load_increments,
    replicate_seeds,
)

from mpre.exponent import (
    ExponentProcess,
    ExponentSpec,
    make_constant,
    make_smooth,
    make_tabulated,
    make_rl_exponent,
    riemann_liouville_grid,
    estimate_c1,
    check_mean_square_holder,
    read_exponent_csv,
    write_exponent_csv,
)

from mpre.kernel import (
    QuadraturePolicy,
    KernelContext,
    kernel_eval,
    l_eval,
    haar_eval,
    mean_kernel,
    mean_kernel_row,
    hat_kernel,
    haar_inner_product,
    increment_constant,
    check_increment_lemma,
    coefficient_sum_bound,
)

from mpre.simulator import (
    PathSeries,
    simulate_tilde,
    simulate_hat,
    simulate_haar_partial,
    mean_kernel_sum,
    reference_path,
    parse_times,
    dyadic_times,
)

from mpre.analysis import (
    RateReport,
    HolderReport,
    sup_distance,
    single_path_convergence,
    l1_rate_study,
    estimate_uniform_holder,
    check_regularity_lowerbound,
    levy_modulus_ratio,
    coefficient_growth_check,
    rl_increment_variance,
    kolmogorov_moment_check,
)

__all__ = [
    "MPREError",
    "ConfigError",
    "LevelOverflowError",
    "InsufficientResolutionError",
    "BoundViolationError",
    "DomainError",
    "DegenerateNormalizationError",
    "GridMismatchError",
    "InsufficientLevelsError",
    "MemoryGuardError",
    "DyadicGrid",
    "BrownianPath",
    "HaarCoefficients",
    "sample_brownian",
    "refine",
    "haar_coefficients",
    "dump_increments",
    "load_increments",
    "replicate_seeds",
    "ExponentProcess",
    "ExponentSpec",
    "make_constant",
    "make_smooth",
    "make_tabulated",
    "make_rl_exponent",
    "riemann_liouville_grid",
    "estimate_c1",
    "check_mean_square_holder",
    "read_exponent_csv",
    "write_exponent_csv",
    "QuadraturePolicy",
    "KernelContext",
    "kernel_eval",
    "l_eval",
    "haar_eval",
    "mean_kernel",
    "mean_kernel_row",
    "hat_kernel",
    "haar_inner_product",
    "increment_constant",
    "check_increment_lemma",
    "coefficient_sum_bound",
    "PathSeries",
    "simulate_tilde",
    "simulate_hat",
    "simulate_haar_partial",
    "mean_kernel_sum",
    "reference_path",
    "parse_times",
    "dyadic_times",
    "RateReport",
    "HolderReport",
    "sup_distance",
    "single_path_convergence",
    "l1_rate_study",
    "estimate_uniform_holder",
    "check_regularity_lowerbound",
    "levy_modulus_ratio",
    "coefficient_growth_check",
    "rl_increment_variance",
    "kolmogorov_moment_check",
]
