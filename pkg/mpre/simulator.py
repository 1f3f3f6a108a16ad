"""
Simulazione delle traiettorie dell'MPRE.

Tre schemi su un cammino browniano di livello J:
    tilde  X~^J(t) = sum_l K_t(delta_{J,l}) Delta B_{J,l}        (punto sinistro)
    hat    X^^J(t) = sum_l Khat_t^{J,l} Delta B_{J,l}             (media di cella, esponente congelato)
    haar   X^J(t)  = <K_t, U> eta0 + sum_{j<J} sum_k <K_t, h_{j,k}> eps_{j,k}

Le somme su l sono compensate (math.fsum) e indipendenti dal numero di
thread: il parallelismo divide solo il vettore dei tempi, in blocchi di
dimensione fissa.
"""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Literal, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy import signal

from mpre.brownian import (
    BrownianPath,
    HaarCoefficients,
    dyadic_points,
    haar_coefficients,
    sample_brownian,
)
from mpre.errors import ConfigError, DomainError, LevelOverflowError, MemoryGuardError
from mpre.exponent import ExponentProcess, ExponentSpec, riemann_liouville_grid
from mpre.kernel import (
    KernelContext,
    hat_kernel,
    haar_inner_product_rows,
    kernel_eval,
    mean_kernel_row,
)

logger = logging.getLogger(__name__)

Scheme = Literal["tilde", "hat", "haar"]
SCHEMES = ("tilde", "hat", "haar")

REFERENCE_MAX_LEVEL = 24
REFERENCE_HEADROOM = 4
DEFAULT_TIME_LEVEL = 10

# Elementi per blocco della matrice dei pesi (32 MiB in float64)
_BLOCK_ENTRIES = 2 ** 22


@dataclass(frozen=True, eq=False)
class PathSeries:
    """
    Traiettoria simulata su una griglia di tempi.

    Attributes
    ----------
    scheme : {"tilde", "hat", "haar"}
        Schema usato
    level : int
        Livello J della discretizzazione
    times : np.ndarray
        Tempi di valutazione in [0, 1]
    values : np.ndarray
        Valori X(t)
    exponent_ref : str
        Etichetta dell'esponente
    seed : int, optional
        Seed del cammino browniano
    """
    scheme: Scheme
    level: int
    times: np.ndarray
    values: np.ndarray
    exponent_ref: str
    seed: Optional[int] = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme deve essere uno tra {SCHEMES}, ricevuto: {self.scheme}")
        times = np.array(self.times, dtype=np.float64)
        values = np.array(self.values, dtype=np.float64)
        if times.shape != values.shape:
            raise DomainError(f"times e values hanno forme diverse: {times.shape} vs {values.shape}")
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def to_frame(self) -> pd.DataFrame:
        """DataFrame con colonne t, value, scheme, J, seed."""
        n = len(self.times)
        return pd.DataFrame({
            "t": self.times,
            "value": self.values,
            "scheme": [self.scheme] * n,
            "J": [self.level] * n,
            "seed": [self.seed] * n,
        })


def dyadic_times(level: int) -> np.ndarray:
    """Griglia di tempi k 2^-level, k = 0..2^level."""
    if level < 0 or level > REFERENCE_MAX_LEVEL:
        raise LevelOverflowError(f"Livello della griglia fuori da [0, {REFERENCE_MAX_LEVEL}]: {level}")
    return dyadic_points(level)


def parse_times(text: str) -> np.ndarray:
    """
    Converte una specifica di griglia nei tempi corrispondenti.

    Parameters
    ----------
    text : str
        "dyadic:<level>" oppure "list:<t1>,<t2>,..."

    Raises
    ------
    ConfigError
        Se il formato non e' riconosciuto o un tempo esce da [0, 1]

    Examples
    --------
    >>> parse_times("list:0,0.5,1")
    array([0. , 0.5, 1. ])
    """
    head, _, body = text.strip().partition(":")
    if head not in ("dyadic", "list"):
        raise ConfigError(f"Griglia non riconosciuta: {text}. Formati: dyadic:<level>, list:<csv>")
    try:
        if head == "dyadic":
            return dyadic_times(int(body))
        times = np.array([float(x) for x in body.split(",") if x.strip()])
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"Errore nel parsing della griglia {text}: {e}")

    if len(times) == 0:
        raise ConfigError(f"La griglia {text} non contiene tempi")
    if np.any((times < 0.0) | (times > 1.0)):
        raise ConfigError(f"I tempi devono stare in [0, 1], ricevuto: {text}")
    return times


def resolve_threads(threads: Optional[int] = None) -> int:
    """Numero di worker: argomento esplicito, poi MPRE_THREADS, poi 1."""
    if threads is None:
        env = os.environ.get("MPRE_THREADS")
        if not env:
            return 1
        try:
            threads = int(env)
        except ValueError:
            raise ConfigError(f"MPRE_THREADS deve essere un intero, ricevuto: {env}")
    if threads < 1:
        raise ConfigError(f"threads deve essere >= 1, ricevuto: {threads}")
    return threads


def _check_times(times: Union[Sequence[float], np.ndarray]) -> np.ndarray:
    times = np.asarray(times, dtype=np.float64).ravel()
    if np.any((times < 0.0) | (times > 1.0)):
        raise DomainError("I tempi devono stare in [0, 1]")
    return times


def _map_blocks(
    func: Callable[[np.ndarray], np.ndarray],
    times: np.ndarray,
    width: int,
    threads: Optional[int],
) -> np.ndarray:
    # Blocchi di dimensione fissa: il risultato non dipende dal numero di thread
    rows = max(1, _BLOCK_ENTRIES // max(width, 1))
    blocks = [times[i:i + rows] for i in range(0, len(times), rows)]
    if not blocks:
        return np.empty(0)
    workers = resolve_threads(threads)
    if workers == 1 or len(blocks) == 1:
        results = [func(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(func, blocks))
    return np.concatenate(results)


def _compensated_rows(weights: np.ndarray, increments: np.ndarray) -> np.ndarray:
    """sum_l weights[i, l] * increments[l] per ogni riga, con somma compensata in l crescente."""
    products = weights * increments[None, :]
    return np.array([math.fsum(row) for row in products])


def _is_full_grid(times: np.ndarray, level: int) -> bool:
    return len(times) == 2 ** level + 1 and np.array_equal(times, dyadic_points(level))


def _constant_hat_grid(path: BrownianPath, H: float) -> np.ndarray:
    # Su griglia completa con A costante Khat dipende solo da i - l: convoluzione
    n = len(path.increments)
    p = H + 0.5
    steps = np.arange(n + 1, dtype=np.float64) * 2.0 ** -path.level
    weights = 2.0 ** path.level / p * np.diff(steps ** p)
    partial = signal.convolve(path.increments, weights, method="auto")[:n]
    return np.concatenate(([0.0], partial))


def simulate_tilde(
    path: BrownianPath,
    A: ExponentProcess,
    times: Union[Sequence[float], np.ndarray],
    threads: Optional[int] = None,
) -> PathSeries:
    """
    Schema a punto sinistro X~^J.

    Somma K_t(delta_{J,l}) Delta B_{J,l} sui soli l con delta_{J,l} < t.

    Examples
    --------
    >>> path = BrownianPath(level=1, increments=[0.3, 0.1], seed=0)
    >>> simulate_tilde(path, make_constant(0.75), [1.0]).values
    array([0.38408964])
    """
    times = _check_times(times)
    J = path.level
    if A.kind == "constant" and _is_full_grid(times, J):
        values = riemann_liouville_grid(path, A.params[0])
    else:
        ctx = KernelContext(A)
        left = dyadic_points(J)[:-1]

        def block(t: np.ndarray) -> np.ndarray:
            return _compensated_rows(np.asarray(kernel_eval(ctx, t[:, None], left[None, :])), path.increments)

        values = _map_blocks(block, times, len(left), threads)
    return PathSeries("tilde", J, times, values, A.label, path.seed)


def simulate_hat(
    path: BrownianPath,
    A: ExponentProcess,
    times: Union[Sequence[float], np.ndarray],
    threads: Optional[int] = None,
) -> PathSeries:
    """
    Schema a media di cella X^^J con esponente congelato all'estremo sinistro.

    Examples
    --------
    >>> path = BrownianPath(level=1, increments=[0.3, 0.1], seed=0)
    >>> simulate_hat(path, make_constant(0.75), [1.0]).values
    array([0.34545657])
    """
    times = _check_times(times)
    J = path.level
    if A.kind == "constant" and _is_full_grid(times, J):
        values = _constant_hat_grid(path, A.params[0])
    else:
        cells = np.arange(2 ** J)

        def block(t: np.ndarray) -> np.ndarray:
            return _compensated_rows(np.asarray(hat_kernel(A, t[:, None], J, cells)), path.increments)

        values = _map_blocks(block, times, len(cells), threads)
    return PathSeries("hat", J, times, values, A.label, path.seed)


def simulate_haar_partial(
    coeffs: HaarCoefficients,
    ctx: KernelContext,
    times: Union[Sequence[float], np.ndarray],
    J: int,
    seed: Optional[int] = None,
    threads: Optional[int] = None,
) -> PathSeries:
    """
    Somma parziale della serie di Haar X^J.

    Parameters
    ----------
    coeffs : HaarCoefficients
        eta0 ed eps_{j,k} del cammino (profondita' >= J)
    ctx : KernelContext
        Esponente e quadratura dei prodotti scalari
    J : int
        Numero di livelli; J = 0 restituisce <K_t, U> eta0

    Notes
    -----
    X^J(t) = <K_t, U> eta0 + sum_{j<J} sum_k <K_t, h_{j,k}> eps_{j,k}
    coincide con sum_l Kbar_t^{J,l} Delta B_{J,l} (vedi mean_kernel_sum).
    """
    times = _check_times(times)
    if J < 0 or J > coeffs.depth:
        raise LevelOverflowError(f"J deve stare in [0, {coeffs.depth}], ricevuto: {J}")
    eps = np.concatenate([coeffs.eps[j] for j in range(J)] + [np.zeros(0)])

    def block(t: np.ndarray) -> np.ndarray:
        out = np.empty(len(t))
        for i, ti in enumerate(t):
            unit, rows = haar_inner_product_rows(ctx, float(ti), J)
            terms = np.concatenate(rows + [np.zeros(0)]) * eps
            out[i] = math.fsum(np.concatenate(([unit * coeffs.eta0], terms)))
        return out

    values = _map_blocks(block, times, 2 ** J, threads)
    return PathSeries("haar", J, times, values, ctx.exponent.label, seed)


def mean_kernel_sum(
    path: BrownianPath,
    ctx: KernelContext,
    times: Union[Sequence[float], np.ndarray],
    threads: Optional[int] = None,
) -> np.ndarray:
    """sum_l Kbar_t^{J,l} Delta B_{J,l}: secondo membro dell'identita' con la serie di Haar."""
    times = _check_times(times)
    J = path.level

    def block(t: np.ndarray) -> np.ndarray:
        rows = np.stack([mean_kernel_row(ctx, float(ti), J) for ti in t])
        return _compensated_rows(rows, path.increments)

    return _map_blocks(block, times, 2 ** J, threads)


def simulate(
    scheme: Scheme,
    path: BrownianPath,
    A: ExponentProcess,
    times: Union[Sequence[float], np.ndarray],
    ctx: Optional[KernelContext] = None,
    threads: Optional[int] = None,
) -> PathSeries:
    """Dispatch sullo schema richiesto (haar usa i coefficienti del cammino)."""
    if scheme == "tilde":
        return simulate_tilde(path, A, times, threads=threads)
    if scheme == "hat":
        return simulate_hat(path, A, times, threads=threads)
    if scheme == "haar":
        if ctx is None:
            ctx = KernelContext(A)
        coeffs = haar_coefficients(path)
        return simulate_haar_partial(coeffs, ctx, times, path.level, seed=path.seed, threads=threads)
    raise ConfigError(f"scheme deve essere uno tra {SCHEMES}, ricevuto: {scheme}")


def reference_path(
    seed: int,
    spec: Union[str, ExponentSpec],
    J_ref: int,
    times: Union[Sequence[float], np.ndarray],
    study_level: Optional[int] = None,
    threads: Optional[int] = None,
) -> PathSeries:
    """
    Traiettoria di riferimento X^^{J_ref} sullo stesso omega.

    Il cammino di livello J_ref raffina quello di ogni livello inferiore dello
    stesso seed; per gli esponenti RL adattati A viene ricostruito da R_H sul
    cammino raffinato.

    Raises
    ------
    MemoryGuardError
        Se J_ref > 24
    ConfigError
        Se J_ref < study_level + 4
    """
    if J_ref > REFERENCE_MAX_LEVEL:
        raise MemoryGuardError(
            f"J_ref oltre il limite di memoria ({REFERENCE_MAX_LEVEL}), ricevuto: {J_ref}"
        )
    if study_level is not None and J_ref < study_level + REFERENCE_HEADROOM:
        raise ConfigError(
            f"J_ref deve superare J di almeno {REFERENCE_HEADROOM}, ricevuto: J={study_level}, J_ref={J_ref}"
        )
    if isinstance(spec, str):
        spec = ExponentSpec.parse(spec)

    path = sample_brownian(seed, J_ref)
    A = spec.build(path)
    logger.debug("Riferimento J_ref=%d per seed %d (%s)", J_ref, seed, A.label)
    return simulate_hat(path, A, times, threads=threads)
