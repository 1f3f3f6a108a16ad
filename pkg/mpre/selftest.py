"""
Suite veloce di invarianti eseguita dal comando `selftest`.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from mpre.brownian import haar_coefficients, replicate_seeds, sample_brownian
from mpre.exponent import ExponentSpec, make_smooth
from mpre.kernel import (
    KernelContext,
    check_increment_lemma,
    coefficient_sum_bound,
    haar_inner_product,
)
from mpre.simulator import dyadic_times, mean_kernel_sum, simulate_haar_partial

logger = logging.getLogger(__name__)

IDENTITY_TOL = 1e-12
EQUIVALENCE_TOL = 1e-7


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _rng(master_seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(tag,)))


def check_haar_identity(master_seed: int = 0, n_seeds: int = 5, J: int = 10) -> CheckResult:
    """eps_{j,k} dal cammino fine coincide con quello del cammino di livello j+1."""
    worst = 0.0
    eta_ok = True
    for seed in replicate_seeds(master_seed, n_seeds):
        coeffs = haar_coefficients(sample_brownian(seed, J))
        eta_ok &= coeffs.eta0 == sample_brownian(seed, 0).increments[0]
        for j in range(J):
            inc = sample_brownian(seed, j + 1).increments
            direct = 2.0 ** (0.5 * j) * (inc[0::2] - inc[1::2])
            worst = max(worst, float(np.max(np.abs(coeffs.eps[j] - direct))))
    passed = eta_ok and worst <= IDENTITY_TOL
    return CheckResult("identita' eps", passed, f"scarto massimo {worst:.3e}, eta0 esatto: {eta_ok}")


def check_cell_mean_equivalence(master_seed: int = 0, n_seeds: int = 3, max_level: int = 6) -> CheckResult:
    """Serie di Haar troncata = somma delle medie di cella, J <= max_level."""
    times = dyadic_times(5)
    worst = 0.0
    for text in ("const:0.7", "sin:0.6:0.9:1"):
        ctx = KernelContext(ExponentSpec.parse(text).build())
        for seed in replicate_seeds(master_seed, n_seeds):
            path = sample_brownian(seed, max_level)
            coeffs = haar_coefficients(path)
            for J in range(max_level + 1):
                haar = simulate_haar_partial(coeffs, ctx, times, J)
                cells = mean_kernel_sum(path.coarsen(J), ctx, times)
                worst = max(worst, float(np.max(np.abs(haar.values - cells))))
    return CheckResult("Haar = medie di cella", worst <= EQUIVALENCE_TOL, f"scarto massimo {worst:.3e}")


def check_inner_product_bound(master_seed: int = 0, n_samples: int = 200, max_j: int = 10) -> CheckResult:
    """|<K_t, h_{j,k}>| <= 2^{-j/2} su terne casuali."""
    rng = _rng(master_seed, 1)
    ctx = KernelContext(make_smooth(0.55, 0.95, 2.0))
    violations = 0
    for _ in range(n_samples):
        j = int(rng.integers(0, max_j + 1))
        k = int(rng.integers(0, 2 ** j))
        t = float(rng.uniform(0.0, 1.0))
        if abs(haar_inner_product(ctx, t, j, k)) > 2.0 ** (-0.5 * j) * (1.0 + 1e-12):
            violations += 1
    return CheckResult("limite <K_t, h_jk>", violations == 0, f"{violations} violazioni su {n_samples}")


def check_coefficient_sums(master_seed: int = 0, n_times: int = 5, max_j: int = 8) -> CheckResult:
    """S_j(t) <= c4 2^{-j/2} + c0 2^{j/2} int |A(s) - A(s + 2^{-j-1})| ds."""
    rng = _rng(master_seed, 2)
    path = sample_brownian(replicate_seeds(master_seed, 1)[0], 10)
    exponents = [
        ExponentSpec.parse("rl:0.9:0.55:0.95").build(path),
        make_smooth(0.6, 0.9, 1.0),
    ]
    violations = 0
    total = 0
    for A in exponents:
        ctx = KernelContext(A)
        for t in rng.uniform(0.0, 1.0, n_times):
            for j in range(max_j + 1):
                total += 1
                if not coefficient_sum_bound(ctx, float(t), j).holds:
                    violations += 1
    return CheckResult("somma dei coefficienti", violations == 0, f"{violations} violazioni su {total}")


def check_increment_sweep(master_seed: int = 0, n_samples: int = 2000) -> CheckResult:
    """Disuguaglianza sugli incrementi del nucleo su terne 0 <= s' <= s'' < t <= 1."""
    rng = _rng(master_seed, 3)
    path = sample_brownian(replicate_seeds(master_seed, 1)[0], 10)
    exponents = [
        ExponentSpec.parse("const:0.7").build(),
        make_smooth(0.6, 0.9, 1.0),
        ExponentSpec.parse("rl:0.9:0.55:0.95").build(path),
    ]
    violations = 0
    for A in exponents:
        u = np.sort(rng.uniform(0.0, 1.0, (n_samples, 3)), axis=1)
        keep = u[:, 1] < u[:, 2]
        result = check_increment_lemma(KernelContext(A), u[keep, 2], u[keep, 0], u[keep, 1])
        violations += int(np.sum(~result.holds))
    return CheckResult("incrementi del nucleo", violations == 0, f"{violations} violazioni")


CHECKS: List[Callable[[int], CheckResult]] = [
    check_haar_identity,
    check_cell_mean_equivalence,
    check_inner_product_bound,
    check_coefficient_sums,
    check_increment_sweep,
]


def run_selftest(master_seed: int = 0) -> List[CheckResult]:
    """Esegue tutti i controlli; nessuna eccezione per i fallimenti numerici."""
    results = []
    for check in CHECKS:
        result = check(master_seed)
        logger.info("%s: %s (%s)", result.name, "OK" if result.passed else "FALLITO", result.detail)
        results.append(result)
    return results


def format_results(results: List[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'OK ' if r.passed else 'KO '} {r.name.ljust(width)}  {r.detail}" for r in results]
    failed = sum(not r.passed for r in results)
    lines.append(f"{len(results) - failed}/{len(results)} controlli superati")
    return "\n".join(lines)
