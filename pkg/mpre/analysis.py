"""
Verifiche quantitative: velocita' di convergenza, esponente di Hoelder
uniforme, modulo di Levy, crescita dei coefficienti e momenti di Kolmogorov.

Tutte le stime Monte Carlo sono riproducibili dato il master seed; i test
decidono sulle pendenze, mai sulle costanti assolute.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import integrate, stats

from mpre.brownian import (
    BrownianPath,
    HaarCoefficients,
    dyadic_points,
    haar_coefficients,
    replicate_seeds,
    sample_brownian,
)
from mpre.errors import (
    DomainError,
    GridMismatchError,
    InsufficientLevelsError,
    InsufficientResolutionError,
)
from mpre.exponent import RL_MIN_LEVEL, ExponentProcess, ExponentSpec
from mpre.kernel import SIMULATION_ABS_TOL, KernelContext, QuadraturePolicy
from mpre.simulator import (
    PathSeries,
    dyadic_times,
    reference_path,
    simulate,
    simulate_haar_partial,
    simulate_tilde,
)

logger = logging.getLogger(__name__)

MIN_RATE_LEVELS = 4
HOLDER_CAP = 1.05
HOLDER_FINE_SCALES = 7
LEVY_MIN_LEVEL = 10
GROWTH_MIN_DEPTH = 4
KOLMOGOROV_MIN_SEEDS = 100

SpecLike = Union[str, ExponentSpec]


def _as_spec(spec: SpecLike) -> ExponentSpec:
    return ExponentSpec.parse(spec) if isinstance(spec, str) else spec


def _fit(x: Sequence[float], y: Sequence[float]) -> Tuple[Optional[float], Optional[float]]:
    """Pendenza e errore standard dei minimi quadrati, None se i punti sono meno di 3."""
    if len(x) < 3:
        return None, None
    fit = stats.linregress(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
    return float(fit.slope), float(fit.stderr)


@dataclass(frozen=True)
class RateReport:
    """
    Errore per livello e pendenza di log2(errore) contro J.

    Attributes
    ----------
    levels : List[int]
        Livelli J studiati
    errors : List[float]
        Statistica d'errore per livello (sup o media L1)
    fitted_slope : float, optional
        Pendenza dei minimi quadrati sui livelli con errore positivo
    slope_stderr : float, optional
        Errore standard della pendenza
    target_slope : float
        Pendenza prevista dalla teoria
    n_seeds : int
        Numero di traiettorie
    slack : float
        Margine accettato sulla pendenza
    statistic : str
        "sup" o "l1"
    """
    levels: List[int]
    errors: List[float]
    fitted_slope: Optional[float]
    slope_stderr: Optional[float]
    target_slope: float
    n_seeds: int
    slack: float = 0.1
    statistic: str = "sup"

    @property
    def passed(self) -> bool:
        return self.fitted_slope is not None and self.fitted_slope <= self.target_slope + self.slack

    def to_dict(self) -> Dict:
        return {
            "statistic": self.statistic,
            "levels": self.levels,
            "errors": self.errors,
            "fitted_slope": self.fitted_slope,
            "slope_stderr": self.slope_stderr,
            "target_slope": self.target_slope,
            "slack": self.slack,
            "n_seeds": self.n_seeds,
            "passed": self.passed,
        }

    def to_text(self) -> str:
        table = pd.DataFrame({"J": self.levels, "errore": self.errors})
        slope = "n/d" if self.fitted_slope is None else f"{self.fitted_slope:.4f} +/- {self.slope_stderr:.4f}"
        lines = [
            f"Studio di convergenza ({self.statistic}, {self.n_seeds} traiettorie)",
            table.to_string(index=False, float_format=lambda v: f"{v:.6e}"),
            f"Pendenza stimata: {slope}",
            f"Pendenza attesa:  {self.target_slope:.4f} (margine {self.slack})",
            f"Esito: {'OK' if self.passed else 'FALLITO'}",
        ]
        return "\n".join(lines)


@dataclass(frozen=True)
class HolderReport:
    """
    Stima dell'esponente di Hoelder uniforme su una finestra.

    Attributes
    ----------
    window : (float, float)
        Finestra [nu1, nu2]
    levels_used : List[int]
        Scale j usate nella regressione
    oscillations : List[float]
        osc_j = max |X(t'') - X(t')| su coppie diadiche adiacenti a scala 2^-j
    estimate : float
        -pendenza di log2(osc_j / g_j) contro j, limitata a [0, 1.05]
    min_A : float, optional
        min di A sulla finestra
    degenerate : bool
        True se qualche oscillazione e' nulla (stima fissata a 1.05)
    normalizers : List[float], optional
        Fattori g_j di crescita del massimo, vedi estimate_uniform_holder
    """
    window: Tuple[float, float]
    levels_used: List[int]
    oscillations: List[float]
    estimate: float
    min_A: Optional[float] = None
    degenerate: bool = False
    normalizers: Optional[List[float]] = None

    @property
    def gap(self) -> Optional[float]:
        """estimate - min_A (con segno)."""
        return None if self.min_A is None else self.estimate - self.min_A

    def to_dict(self) -> Dict:
        return {
            "window": list(self.window),
            "levels_used": self.levels_used,
            "oscillations": self.oscillations,
            "normalizers": self.normalizers,
            "estimate": self.estimate,
            "min_A": self.min_A,
            "gap": self.gap,
            "degenerate": self.degenerate,
        }

    def to_text(self) -> str:
        table = pd.DataFrame({"j": self.levels_used, "osc": self.oscillations})
        if self.normalizers is not None:
            table["g"] = self.normalizers
        head = f"Finestra [{self.window[0]}, {self.window[1]}]: stima {self.estimate:.4f}"
        if self.min_A is not None:
            head += f", min A {self.min_A:.4f}, scarto {self.gap:+.4f}"
        if self.degenerate:
            head += " (oscillazione nulla)"
        return head + "\n" + table.to_string(index=False, float_format=lambda v: f"{v:.6e}")


@dataclass(frozen=True)
class RegularityReport:
    """Confronto tra stime di Hoelder e minimo di A su piu' finestre."""
    windows: List[HolderReport]
    tolerance: float = 0.1

    @property
    def passes(self) -> List[bool]:
        return [w.gap >= -self.tolerance for w in self.windows]

    @property
    def passed(self) -> bool:
        return all(self.passes)

    def to_dict(self) -> Dict:
        return {
            "tolerance": self.tolerance,
            "windows": [w.to_dict() for w in self.windows],
            "passes": self.passes,
            "passed": self.passed,
        }

    def to_text(self) -> str:
        table = pd.DataFrame({
            "nu1": [w.window[0] for w in self.windows],
            "nu2": [w.window[1] for w in self.windows],
            "stima": [w.estimate for w in self.windows],
            "min_A": [w.min_A for w in self.windows],
            "scarto": [w.gap for w in self.windows],
            "ok": self.passes,
        })
        return (
            f"Limite inferiore di regolarita' (tolleranza {self.tolerance})\n"
            + table.to_string(index=False, float_format=lambda v: f"{v:.4f}")
        )


@dataclass(frozen=True)
class KolmogorovReport:
    """
    Stima Monte Carlo di E|X(t'') - X(t')|^2 per coppie di tempi.

    Le coppie con t'' = t' compaiono con media nulla e sono escluse dalla regressione.
    """
    pairs: List[Tuple[float, float]]
    mean_squares: List[float]
    slope: Optional[float]
    slope_stderr: Optional[float]
    target_slope: float
    n_seeds: int
    J_ref: int
    tolerance: float = 0.2
    oracle: Optional[List[float]] = None
    oracle_slope: Optional[float] = None

    @property
    def passed(self) -> bool:
        return self.slope is not None and self.slope >= self.target_slope - self.tolerance

    def to_dict(self) -> Dict:
        return {
            "pairs": [list(p) for p in self.pairs],
            "mean_squares": self.mean_squares,
            "slope": self.slope,
            "slope_stderr": self.slope_stderr,
            "target_slope": self.target_slope,
            "tolerance": self.tolerance,
            "oracle": self.oracle,
            "oracle_slope": self.oracle_slope,
            "n_seeds": self.n_seeds,
            "J_ref": self.J_ref,
            "passed": self.passed,
        }

    def to_text(self) -> str:
        table = pd.DataFrame({
            "t1": [p[0] for p in self.pairs],
            "t2": [p[1] for p in self.pairs],
            "media_quadratica": self.mean_squares,
        })
        if self.oracle is not None:
            table["oracolo"] = self.oracle
        slope = "n/d" if self.slope is None else f"{self.slope:.4f}"
        return "\n".join([
            f"Momenti di Kolmogorov ({self.n_seeds} traiettorie, J_ref={self.J_ref})",
            table.to_string(index=False, float_format=lambda v: f"{v:.6e}"),
            f"Pendenza stimata: {slope}, minima ammessa {self.target_slope - self.tolerance:.4f}",
            "Nota: X e' approssimato dal riferimento di livello J_ref (bias di discretizzazione)",
        ])


def sup_distance(a: PathSeries, b: PathSeries) -> float:
    """
    Massimo di |a - b| sulla griglia comune.

    Raises
    ------
    GridMismatchError
        Se le griglie dei tempi sono diverse
    """
    if a.times.shape != b.times.shape or not np.array_equal(a.times, b.times):
        raise GridMismatchError("Le due traiettorie hanno griglie dei tempi diverse")
    if len(a.times) == 0:
        return 0.0
    return float(np.max(np.abs(a.values - b.values)))


def _exponent_at(spec: ExponentSpec, path: BrownianPath, level: int) -> ExponentProcess:
    # Gli esponenti RL richiedono almeno RL_MIN_LEVEL livelli del cammino
    if spec.needs_path:
        return spec.build(path.coarsen(max(level, RL_MIN_LEVEL)))
    return spec.build(path.coarsen(level))


def single_path_convergence(
    seed: int,
    spec: SpecLike,
    levels: Sequence[int],
    J_ref: int,
    times: Optional[np.ndarray] = None,
    scheme: str = "hat",
    slack: float = 0.1,
    threads: Optional[int] = None,
) -> RateReport:
    """
    sup_t |X^J - X^^{J_ref}| per ogni J su un solo omega.

    Parameters
    ----------
    levels : sequenza di int
        Livelli studiati; J_ref >= max(levels) + 4
    times : np.ndarray, optional
        Griglia dei tempi, default dyadic:6
    scheme : {"tilde", "hat", "haar"}
        Schema confrontato con il riferimento

    Notes
    -----
    La pendenza attesa e' -(gamma - 1/2): per gamma = 1 un fattore 8 ogni
    6 livelli.
    """
    spec = _as_spec(spec)
    levels = sorted(int(J) for J in levels)
    if len(levels) < MIN_RATE_LEVELS:
        raise InsufficientLevelsError(
            f"Servono almeno {MIN_RATE_LEVELS} livelli, ricevuti: {levels}"
        )
    if times is None:
        times = dyadic_times(6)

    reference = reference_path(seed, spec, J_ref, times, study_level=levels[-1], threads=threads)
    fine = sample_brownian(seed, J_ref)
    quadrature = QuadraturePolicy(abs_tol=SIMULATION_ABS_TOL)

    errors = []
    gamma = 1.0
    for J in levels:
        A = _exponent_at(spec, fine, J)
        gamma = min(A.gamma, 1.0)
        series = simulate(scheme, fine.coarsen(J), A, times, ctx=KernelContext(A, quadrature), threads=threads)
        errors.append(sup_distance(series, reference))
        logger.debug("J=%d: sup distanza %.6e", J, errors[-1])

    positive = [(J, e) for J, e in zip(levels, errors) if e > 0]
    slope, stderr = _fit([J for J, _ in positive], [math.log2(e) for _, e in positive])
    return RateReport(
        levels=levels,
        errors=errors,
        fitted_slope=slope,
        slope_stderr=stderr,
        target_slope=-(gamma - 0.5),
        n_seeds=1,
        slack=slack,
        statistic="sup",
    )


def l1_rate_study(
    spec: SpecLike,
    levels: Sequence[int],
    t_probe: float = 0.7,
    n_seeds: int = 200,
    master_seed: int = 0,
    slack: float = 0.1,
    quadrature: Optional[QuadraturePolicy] = None,
) -> RateReport:
    """
    Media Monte Carlo di |X^J(t) - X~^J(t)| per livello e sua pendenza.

    Parameters
    ----------
    levels : sequenza di int
        Almeno 4 livelli
    t_probe : float, default 0.7
        Tempo di valutazione
    slack : float, default 0.1
        La verifica passa se pendenza <= -(rho - 1/2) + slack

    Raises
    ------
    InsufficientLevelsError
        Con meno di 4 livelli
    DomainError
        Se rho <= 1/2
    """
    spec = _as_spec(spec)
    levels = sorted(int(J) for J in levels)
    if len(levels) < MIN_RATE_LEVELS:
        raise InsufficientLevelsError(
            f"Servono almeno {MIN_RATE_LEVELS} livelli, ricevuti: {levels}"
        )
    if not 0.0 <= t_probe <= 1.0:
        raise DomainError(f"t_probe deve stare in [0, 1], ricevuto: {t_probe}")
    if quadrature is None:
        quadrature = QuadraturePolicy(abs_tol=SIMULATION_ABS_TOL)

    top = max(levels[-1], RL_MIN_LEVEL) if spec.needs_path else levels[-1]
    rho = spec.declared_rho
    sums = np.zeros(len(levels))
    times = [t_probe]

    for seed in replicate_seeds(master_seed, n_seeds):
        fine = sample_brownian(seed, top)
        A = spec.build(fine)
        if rho is None:
            rho = A.rho
        if not rho > 0.5:
            raise DomainError(f"Lo studio L1 richiede rho > 1/2, ricevuto: {rho}")
        ctx = KernelContext(A, quadrature)
        coeffs = haar_coefficients(fine)
        for i, J in enumerate(levels):
            haar = simulate_haar_partial(coeffs, ctx, times, J)
            tilde = simulate_tilde(fine.coarsen(J), A, times)
            sums[i] += abs(haar.values[0] - tilde.values[0])

    errors = (sums / n_seeds).tolist()
    positive = [(J, e) for J, e in zip(levels, errors) if e > 0]
    slope, stderr = _fit([J for J, _ in positive], [math.log2(e) for _, e in positive])
    report = RateReport(
        levels=levels,
        errors=errors,
        fitted_slope=slope,
        slope_stderr=stderr,
        target_slope=-(rho - 0.5),
        n_seeds=n_seeds,
        slack=slack,
        statistic="l1",
    )
    logger.info("Studio L1 %s: pendenza %s", spec.text, slope)
    return report


def _grid_level(times: np.ndarray) -> int:
    n = len(times) - 1
    if n < 1 or n & (n - 1):
        raise GridMismatchError(f"Serve una griglia diadica completa, ricevuti {len(times)} tempi")
    level = n.bit_length() - 1
    if not np.array_equal(times, dyadic_points(level)):
        raise GridMismatchError("I tempi non formano la griglia diadica k 2^-J")
    return level


def _grid_index(nu: float, level: int) -> int:
    x = nu * 2 ** level
    index = int(round(x))
    if abs(x - index) > 1e-9 or not 0 <= index <= 2 ** level:
        raise GridMismatchError(f"L'estremo {nu} non sta sulla griglia di livello {level}")
    return index


def estimate_uniform_holder(
    series: PathSeries,
    window: Tuple[float, float] = (0.0, 1.0),
    j_range: Optional[Sequence[int]] = None,
) -> HolderReport:
    """
    Stima l'esponente di Hoelder uniforme di una traiettoria su una finestra.

    Parameters
    ----------
    series : PathSeries
        Traiettoria sulla griglia diadica completa di livello L
    window : (float, float)
        Estremi sulla griglia, nu1 < nu2
    j_range : sequenza di int, optional
        Scale della regressione, max(j_range) <= L - 2; di default le
        HOLDER_FINE_SCALES scale piu' fini fino a L - 2, mai sotto
        ceil(log2(1/(nu2-nu1))) + 1

    Returns
    -------
    HolderReport

    Raises
    ------
    GridMismatchError
        Se la griglia non e' diadica, la finestra non sta sulla griglia o
        j_range e' troppo fine per la griglia

    Notes
    -----
    Il massimo di N_j incrementi gaussiani cresce come sqrt(log N_j), come
    |eps_{j,k}| <= C sqrt(j + 1) per i coefficienti di Haar. Prima della
    regressione osc_j e' diviso per

        g_j = min(sqrt(log2 N_j + 1), osc_j / mean_j)

    dove N_j e' il numero di coppie nella finestra e mean_j la media di
    |X(t'') - X(t')| alla stessa scala. Il secondo termine e' 1 quando gli
    incrementi sono tutti uguali, quindi le funzioni regolari non vengono
    corrette.

    Examples
    --------
    >>> t = dyadic_points(12)
    >>> series = PathSeries("hat", 12, t, t, "identita'")
    >>> round(estimate_uniform_holder(series).estimate, 6)
    1.0
    """
    level = _grid_level(series.times)
    nu1, nu2 = float(window[0]), float(window[1])
    if not nu1 < nu2:
        raise GridMismatchError(f"Finestra non valida: [{nu1}, {nu2}]")
    i0, i1 = _grid_index(nu1, level), _grid_index(nu2, level)

    if j_range is None:
        j_min = max(1, math.ceil(math.log2(1.0 / (nu2 - nu1))) + 1)
        j_range = range(max(j_min, level - 1 - HOLDER_FINE_SCALES), level - 1)
    j_range = [int(j) for j in j_range]
    if len(j_range) < 2 or max(j_range) > level - 2:
        raise GridMismatchError(
            f"j_range {j_range} incompatibile con una griglia di livello {level} (max j = {level - 2})"
        )

    values = series.values
    oscillations, normalizers = [], []
    for j in j_range:
        step = 2 ** (level - j)
        first = -(-i0 // step) * step
        idx = np.arange(first, i1 + 1, step)
        if len(idx) < 2:
            raise GridMismatchError(f"La finestra [{nu1}, {nu2}] non contiene coppie a scala 2^-{j}")
        gaps = np.abs(np.diff(values[idx]))
        osc = float(np.max(gaps))
        oscillations.append(osc)
        if osc > 0.0:
            spread = osc / float(np.mean(gaps))
            normalizers.append(min(math.sqrt(math.log2(len(gaps)) + 1.0), spread))

    if min(oscillations) == 0.0:
        return HolderReport((nu1, nu2), j_range, oscillations, HOLDER_CAP, degenerate=True)

    slope = stats.linregress(j_range, np.log2(oscillations) - np.log2(normalizers)).slope
    estimate = float(np.clip(-slope, 0.0, HOLDER_CAP))
    return HolderReport((nu1, nu2), j_range, oscillations, estimate, normalizers=normalizers)


def check_regularity_lowerbound(
    series: PathSeries,
    A: ExponentProcess,
    windows: Sequence[Tuple[float, float]],
    j_range: Optional[Sequence[int]] = None,
    tolerance: float = 0.1,
) -> RegularityReport:
    """
    Confronta la stima di Hoelder con min A su ogni finestra.

    Una finestra passa se stima - min_A >= -tolerance.

    Raises
    ------
    DomainError
        Se gamma di A non supera 1/2
    """
    if not A.gamma > 0.5:
        raise DomainError(f"Serve un esponente con gamma > 1/2, ricevuto: {A.gamma}")

    reports = []
    for window in windows:
        base = estimate_uniform_holder(series, window, j_range)
        nu1, nu2 = base.window
        inside = series.times[(series.times >= nu1) & (series.times <= nu2)]
        min_A = float(np.min(A.eval(inside)))
        reports.append(replace(base, min_A=min_A))
    return RegularityReport(reports, tolerance)


def levy_modulus_ratio(path: BrownianPath) -> float:
    """
    max_l |Delta B_{J,l}| / sqrt(2 2^-J log(2^J)), che tende a 1.

    Raises
    ------
    InsufficientResolutionError
        Se path.level < 10
    """
    if path.level < LEVY_MIN_LEVEL:
        raise InsufficientResolutionError(
            f"Il modulo di Levy richiede un cammino di livello >= {LEVY_MIN_LEVEL}, ricevuto: {path.level}"
        )
    scale = math.sqrt(2.0 * 2.0 ** -path.level * path.level * math.log(2.0))
    return float(np.max(np.abs(path.increments))) / scale


def coefficient_growth_check(coeffs: HaarCoefficients) -> float:
    """max_{j,k} |eps_{j,k}| / sqrt(j + 1)."""
    if coeffs.depth < GROWTH_MIN_DEPTH:
        raise InsufficientResolutionError(
            f"Servono almeno {GROWTH_MIN_DEPTH} livelli di coefficienti, ricevuti: {coeffs.depth}"
        )
    return max(float(np.max(np.abs(eps))) / math.sqrt(j + 1) for j, eps in enumerate(coeffs.eps))


def rl_increment_variance(H: float, t1: float, t2: float) -> float:
    """
    E|R_H(t2) - R_H(t1)|^2 per il processo di Riemann-Liouville, t1 <= t2.

    Notes
    -----
    int_0^t1 ((t2-s)^{H-1/2} - (t1-s)^{H-1/2})^2 ds + (t2-t1)^{2H} / (2H)
    """
    if not 0.0 < H < 1.0:
        raise DomainError(f"H deve stare in (0, 1), ricevuto: {H}")
    t1, t2 = sorted((float(t1), float(t2)))
    if t2 == t1:
        return 0.0
    tail = (t2 - t1) ** (2.0 * H) / (2.0 * H)
    if t1 == 0.0:
        return tail
    head, _ = integrate.quad(
        lambda s: ((t2 - s) ** (H - 0.5) - (t1 - s) ** (H - 0.5)) ** 2,
        0.0,
        t1,
        limit=200,
    )
    return head + tail


def _lower_bound(spec: ExponentSpec) -> float:
    if spec.kind == "riemann_liouville":
        return spec.params[1]
    if spec.kind == "tabulated":
        return spec.build().lower_bound
    return spec.params[0]


def default_kolmogorov_pairs(start: float = 0.5, scales: Sequence[int] = range(2, 9)) -> List[Tuple[float, float]]:
    """Coppie (start, start + 2^-j) per le scale indicate."""
    return [(start, start + 2.0 ** -j) for j in scales]


def kolmogorov_moment_check(
    spec: SpecLike,
    pairs: Optional[Sequence[Tuple[float, float]]] = None,
    n_seeds: int = KOLMOGOROV_MIN_SEEDS,
    master_seed: int = 0,
    J_ref: int = 12,
    tolerance: float = 0.2,
    threads: Optional[int] = None,
) -> KolmogorovReport:
    """
    Pendenza di log2 E|X(t'') - X(t')|^2 contro log2 |t'' - t'|, attesa >= 2 a_min.

    X e' la traiettoria di riferimento di livello J_ref; per A costante il
    report include l'oracolo esatto di R_H.

    Raises
    ------
    DomainError
        Se n_seeds < 100
    """
    spec = _as_spec(spec)
    if n_seeds < KOLMOGOROV_MIN_SEEDS:
        raise DomainError(f"Servono almeno {KOLMOGOROV_MIN_SEEDS} traiettorie, ricevute: {n_seeds}")
    pairs = [tuple(sorted((float(a), float(b)))) for a, b in (pairs or default_kolmogorov_pairs())]
    times = np.unique(np.array([t for p in pairs for t in p]))
    where = {t: i for i, t in enumerate(times)}

    sums = np.zeros(len(pairs))
    for seed in replicate_seeds(master_seed, n_seeds):
        series = reference_path(seed, spec, J_ref, times, threads=threads)
        for i, (a, b) in enumerate(pairs):
            sums[i] += (series.values[where[b]] - series.values[where[a]]) ** 2

    mean_squares = (sums / n_seeds).tolist()
    usable = [(b - a, m) for (a, b), m in zip(pairs, mean_squares) if b > a and m > 0]
    slope, stderr = _fit([math.log2(d) for d, _ in usable], [math.log2(m) for _, m in usable])

    oracle = oracle_slope = None
    if spec.kind == "constant":
        H = spec.params[0]
        oracle = [rl_increment_variance(H, a, b) for a, b in pairs]
        oracle_slope, _ = _fit(
            [math.log2(b - a) for a, b in pairs if b > a],
            [math.log2(v) for (a, b), v in zip(pairs, oracle) if b > a],
        )

    return KolmogorovReport(
        pairs=pairs,
        mean_squares=mean_squares,
        slope=slope,
        slope_stderr=stderr,
        target_slope=2.0 * _lower_bound(spec),
        n_seeds=n_seeds,
        J_ref=J_ref,
        tolerance=tolerance,
        oracle=oracle,
        oracle_slope=oracle_slope,
    )
