"""
Nucleo dell'MPRE e quantita' derivate.

K_t(s) = (t - s)_+^{A(s) - 1/2}, le sue medie sulle celle diadiche, la forma
chiusa con esponente congelato e i prodotti scalari con la base di Haar.

Le medie di cella usano Gauss-Legendre composito: i pezzi sono spezzati nei
nodi di A (esponenti tabulati) e raffinati geometricamente verso s = t, dove
l'integrando e' continuo ma con derivata illimitata. L'ultimo pezzo [t-w, t]
e' integrato in forma chiusa con A congelato nel suo punto medio.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import roots_legendre

from mpre.brownian import dyadic_points
from mpre.errors import DomainError, MPREError
from mpre.exponent import SMOOTH_LEVEL, ExponentProcess

logger = logging.getLogger(__name__)

DEFAULT_ABS_TOL = 1e-10
SIMULATION_ABS_TOL = 1e-7
MAX_DEPTH = 60

# Ellisse di Bernstein di un pezzo la cui distanza dalla singolarita' e' pari alla sua lunghezza
_PIECE_RHO = 3.0 + 2.0 * math.sqrt(2.0)

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class QuadraturePolicy:
    """
    Parametri della quadratura.

    Attributes
    ----------
    nodes_per_cell : int, default 8
        Nodi di Gauss-Legendre per pezzo (minimo)
    refinement_depth : int, default 6
        Profondita' iniziale della suddivisione geometrica verso s = t
    abs_tol : float, default 1e-10
        Tolleranza assoluta sulle medie di cella
    """
    nodes_per_cell: int = 8
    refinement_depth: int = 6
    abs_tol: float = DEFAULT_ABS_TOL

    def __post_init__(self):
        if self.nodes_per_cell < 4:
            raise MPREError(f"nodes_per_cell deve essere >= 4, ricevuto: {self.nodes_per_cell}")
        if self.refinement_depth < 1:
            raise MPREError(f"refinement_depth deve essere >= 1, ricevuto: {self.refinement_depth}")
        if not self.abs_tol > 0:
            raise MPREError(f"abs_tol deve essere > 0, ricevuto: {self.abs_tol}")

    @property
    def effective_nodes(self) -> int:
        """Nodi sufficienti perche' l'errore relativo per pezzo scenda sotto abs_tol."""
        needed = math.ceil(math.log(1.0 / self.abs_tol) / (2.0 * math.log(_PIECE_RHO))) + 2
        return max(self.nodes_per_cell, needed)


@dataclass(frozen=True)
class KernelContext:
    """
    Esponente piu' politica di quadratura.

    Attributes
    ----------
    exponent : ExponentProcess
        Processo A(s)
    quadrature : QuadraturePolicy
        Parametri della quadratura
    """
    exponent: ExponentProcess
    quadrature: QuadraturePolicy = field(default_factory=QuadraturePolicy)

    @property
    def c0(self) -> float:
        return increment_constant(self.exponent)


@lru_cache(maxsize=None)
def _gauss_legendre(m: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = roots_legendre(m)
    return np.asarray(nodes), np.asarray(weights)


def _scalar_or_array(x: np.ndarray) -> ArrayLike:
    return float(x) if np.ndim(x) == 0 else x


def _power_kernel(t: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    # 0 ** (v - 1/2) = 0 perche' v > 1/2: copre il ramo t <= u
    return np.clip(t - u, 0.0, None) ** (v - 0.5)


def kernel_eval(ctx: KernelContext, t: ArrayLike, s: ArrayLike) -> ArrayLike:
    """
    Valuta K_t(s) = (t - s)_+^{A(s) - 1/2}, sempre in [0, 1].

    Examples
    --------
    >>> ctx = KernelContext(make_constant(0.75))
    >>> kernel_eval(ctx, 0.5, 0.25)
    0.7071067811865476
    """
    t = np.asarray(t, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    return _scalar_or_array(_power_kernel(t, s, np.asarray(ctx.exponent.eval(s))))


def l_eval(
    t: ArrayLike,
    u: ArrayLike,
    v: ArrayLike,
    bounds: Optional[Tuple[float, float]] = None,
) -> ArrayLike:
    """
    Valuta L_t(u, v) = (t - u)_+^{v - 1/2}; K_t(s) = L_t(s, A(s)).

    Parameters
    ----------
    bounds : (float, float), optional
        Limiti [a_min, a_max] per v; di default v deve stare in (1/2, 1)

    Raises
    ------
    DomainError
        Se v e' fuori dai limiti
    """
    v = np.asarray(v, dtype=np.float64)
    if bounds is None:
        ok = np.all((v > 0.5) & (v < 1.0))
    else:
        ok = np.all((v >= bounds[0]) & (v <= bounds[1]))
    if not ok:
        raise DomainError(f"v fuori dai limiti dell'esponente: {v}")
    return _scalar_or_array(
        _power_kernel(np.asarray(t, dtype=np.float64), np.asarray(u, dtype=np.float64), v)
    )


def haar_eval(j: int, k: int, s: ArrayLike, unit: bool = False) -> ArrayLike:
    """
    Valuta la funzione di Haar h_{j,k}(s) (o la costante U se unit=True).

    h_{j,k} vale 2^{j/2} sulla prima meta' di [k 2^-j, (k+1) 2^-j),
    -2^{j/2} sulla seconda meta' e 0 altrove.

    Raises
    ------
    DomainError
        Se k non sta in [0, 2^j) o s non sta in [0, 1)
    """
    s = np.asarray(s, dtype=np.float64)
    if not np.all((s >= 0.0) & (s < 1.0)):
        raise DomainError(f"s deve stare in [0, 1), ricevuto: {s}")
    if unit:
        return _scalar_or_array(np.ones_like(s))
    if j < 0 or not 0 <= k < 2 ** j:
        raise DomainError(f"Indice (j={j}, k={k}) fuori range")

    start = k * 2.0 ** -j
    middle = start + 2.0 ** (-j - 1)
    end = (k + 1) * 2.0 ** -j
    height = 2.0 ** (0.5 * j)
    result = np.where((s >= start) & (s < middle), height, 0.0)
    result = np.where((s >= middle) & (s < end), -height, result)
    return _scalar_or_array(result)


def _gauss_pieces(ctx: KernelContext, t: float, breaks: np.ndarray) -> float:
    if len(breaks) < 2:
        return 0.0
    xi, wi = _gauss_legendre(ctx.quadrature.effective_nodes)
    mid = 0.5 * (breaks[1:] + breaks[:-1])
    half = 0.5 * (breaks[1:] - breaks[:-1])
    x = mid[:, None] + half[:, None] * xi[None, :]
    vals = _power_kernel(t, x, np.asarray(ctx.exponent.eval(x)))
    return float(np.sum(half * (vals @ wi)))


def _interior_nodes(ctx: KernelContext, lo: float, hi: float) -> np.ndarray:
    nodes = ctx.exponent.nodes
    if nodes is None:
        return np.empty(0)
    return nodes[(nodes > lo) & (nodes < hi)]


def _frozen_tail(ctx: KernelContext, t: float, w: float) -> float:
    v = ctx.exponent.eval(t - 0.5 * w) + 0.5
    return w ** v / v


def _kernel_integral(ctx: KernelContext, t: float, lo: float, hi: float, scale: float) -> float:
    """
    Integrale di K_t su [lo, hi] con errore assoluto <= abs_tol / scale circa.

    scale e' il fattore che moltiplichera' l'integrale (2^J per una media di cella).
    """
    b = min(hi, t)
    if b <= lo:
        return 0.0

    nodes = _interior_nodes(ctx, lo, b)
    if t - b >= b - lo:
        breaks = np.unique(np.concatenate(([lo, b], nodes)))
        return _gauss_pieces(ctx, t, breaks)

    span = t - lo
    if b < t:
        # Suddivisione geometrica fino a b: ogni pezzo dista da t almeno la sua lunghezza
        count = int(math.floor(math.log2(span / (t - b)))) + 1
        grading = t - span * 2.0 ** -np.arange(1, count + 1)
        grading = grading[(grading > lo) & (grading < b)]
        breaks = np.unique(np.concatenate(([lo, b], grading, nodes)))
        return _gauss_pieces(ctx, t, breaks)

    q = ctx.quadrature
    depth = q.refinement_depth
    while True:
        w = span * 2.0 ** -depth
        inner = _interior_nodes(ctx, t - w, t)
        probe = np.asarray(ctx.exponent.eval(np.concatenate(([t - w, t], inner))))
        spread = float(probe.max() - probe.min())
        if scale * w * spread * (1.0 - math.log(w)) <= 0.25 * q.abs_tol or depth >= MAX_DEPTH:
            break
        depth += 1
    if depth > q.refinement_depth:
        logger.debug("t=%.6g: profondita' di raffinamento %d", t, depth)

    grading = t - span * 2.0 ** -np.arange(1, depth + 1)
    head = nodes[nodes < t - w]
    breaks = np.unique(np.concatenate(([lo], grading, head)))
    return _gauss_pieces(ctx, t, breaks) + _frozen_tail(ctx, t, w)


def cell_integrals(ctx: KernelContext, t: float, J: int) -> np.ndarray:
    """
    Integrali di K_t sulle 2^J celle diadiche di livello J.

    Le celle lontane da t sono integrate insieme, vettorialmente, al livello
    max(J, J_A) dove A e' lineare su ogni cella; le (al piu' due) celle vicine
    a t passano dalla quadratura graduata.
    """
    if J < 0:
        raise DomainError(f"J deve essere >= 0, ricevuto: {J}")
    nodes = ctx.exponent.nodes
    fine = J if nodes is None else max(J, ctx.exponent.level)
    width = 2.0 ** -fine
    edges = dyadic_points(fine)
    scale = 2.0 ** J

    result = np.zeros(2 ** fine)
    # Celle regolari: estremo destro <= t - width
    n_regular = int(np.searchsorted(edges[1:], t - width, side="right"))
    if n_regular > 0:
        xi, wi = _gauss_legendre(ctx.quadrature.effective_nodes)
        mid = edges[:n_regular] + 0.5 * width
        x = mid[:, None] + 0.5 * width * xi[None, :]
        vals = _power_kernel(t, x, np.asarray(ctx.exponent.eval(x)))
        result[:n_regular] = 0.5 * width * (vals @ wi)

    index = n_regular
    while index < 2 ** fine and edges[index] < t:
        result[index] = _kernel_integral(ctx, t, edges[index], edges[index + 1], scale)
        index += 1

    return result.reshape(2 ** J, -1).sum(axis=1)


def mean_kernel(ctx: KernelContext, t: float, J: int, l: int) -> float:
    """
    Media di K_t sulla cella [delta_{J,l}, delta_{J,l+1}].

    Notes
    -----
    Kbar_t^{J,l} = 2^J * integrale di K_t sulla cella, in [0, 1];
    vale Kbar^{J,l} = (Kbar^{J+1,2l} + Kbar^{J+1,2l+1}) / 2.

    Examples
    --------
    >>> mean_kernel(KernelContext(make_constant(0.75)), 1.0, 1, 0)
    0.9272829...
    """
    if not 0 <= l < 2 ** J:
        raise DomainError(f"l deve stare in [0, {2 ** J}), ricevuto: {l}")
    scale = 2.0 ** J
    lo, hi = l / scale, (l + 1) / scale
    return scale * _kernel_integral(ctx, t, lo, hi, scale)


def mean_kernel_row(ctx: KernelContext, t: float, J: int) -> np.ndarray:
    """Tutte le medie Kbar_t^{J,l}, l = 0..2^J-1."""
    return 2.0 ** J * cell_integrals(ctx, t, J)


def hat_kernel(A: ExponentProcess, t: float, J: int, l: ArrayLike) -> ArrayLike:
    """
    Media di cella con esponente congelato all'estremo sinistro, in forma chiusa.

    Notes
    -----
    Khat_t^{J,l} = 2^J / (A(delta_{J,l}) + 1/2)
                   * ((t - delta_{J,l})_+^{A+1/2} - (t - delta_{J,l+1})_+^{A+1/2})

    Examples
    --------
    >>> hat_kernel(make_constant(0.75), 1.0, 1, 0)
    0.9272829...
    """
    l = np.asarray(l)
    if np.any(l < 0) or np.any(l >= 2 ** J):
        raise DomainError(f"l deve stare in [0, {2 ** J}), ricevuto: {l}")
    scale = 2.0 ** J
    left = l / scale
    right = (l + 1) / scale
    p = np.asarray(A.eval(left)) + 0.5
    gap_left = np.clip(t - left, 0.0, None)
    gap_right = np.clip(t - right, 0.0, None)
    return _scalar_or_array(scale / p * (gap_left ** p - gap_right ** p))


def haar_inner_product(
    ctx: KernelContext,
    t: float,
    j: int = 0,
    k: int = 0,
    unit: bool = False,
) -> float:
    """
    Prodotto scalare <K_t, h_{j,k}> (o <K_t, U> se unit=True).

    Notes
    -----
    Forma a differenza di meta' cella:
        2^{j/2} (integrale di K_t sulla prima meta' - integrale sulla seconda)
    Ogni meta' sta in [0, 2^{-j-1}], quindi |<K_t, h_{j,k}>| <= 2^{-j/2}.
    """
    if unit:
        return _kernel_integral(ctx, t, 0.0, 1.0, 1.0)
    if j < 0 or not 0 <= k < 2 ** j:
        raise DomainError(f"Indice (j={j}, k={k}) fuori range")
    half = 2.0 ** (-j - 1)
    start = k * 2.0 ** -j
    scale = 2.0 ** (j + 1)
    first = _kernel_integral(ctx, t, start, start + half, scale)
    second = _kernel_integral(ctx, t, start + half, start + 2.0 * half, scale)
    return 2.0 ** (0.5 * j) * (first - second)


def haar_inner_product_rows(ctx: KernelContext, t: float, J: int) -> Tuple[float, List[np.ndarray]]:
    """
    <K_t, U> e le righe <K_t, h_{j,.}> per j < J, da un'unica riga di livello J.

    Le meta' di cella del livello j sono somme delle celle di livello J, cosi'
    la serie di Haar troncata e la somma delle medie di cella usano gli stessi
    integrali.
    """
    cells = cell_integrals(ctx, t, J)
    unit = float(cells.sum())
    rows = []
    for j in range(J):
        halves = cells.reshape(2 ** (j + 1), -1).sum(axis=1)
        rows.append(2.0 ** (0.5 * j) * (halves[0::2] - halves[1::2]))
    return unit, rows


def increment_constant(A: ExponentProcess) -> float:
    """
    Costante c0 della disuguaglianza sugli incrementi del nucleo.

    c0 = max(a_max - 1/2, 1 / (e (a_min - 1/2)), 1): il primo termine viene dal
    teorema del valor medio in t - s, il secondo da sup_x |ln x| x^v su (0, 1].
    """
    lo, hi = A.lower_bound, A.upper_bound
    return max(hi - 0.5, 1.0 / (math.e * (lo - 0.5)), 1.0)


@dataclass(frozen=True)
class BoundCheck:
    """Lato sinistro, lato destro e esito di una disuguaglianza verificata numericamente."""
    lhs: ArrayLike
    rhs: ArrayLike
    holds: Union[bool, np.ndarray]


def check_increment_lemma(ctx: KernelContext, t: ArrayLike, s1: ArrayLike, s2: ArrayLike) -> BoundCheck:
    """
    Verifica |K_t(s') - K_t(s'')| <= c0 ((t-s'')^{a_min-3/2} (s''-s') + |A(s') - A(s'')|).

    Raises
    ------
    DomainError
        Se non vale 0 <= s' <= s'' < t <= 1
    """
    t = np.asarray(t, dtype=np.float64)
    s1 = np.asarray(s1, dtype=np.float64)
    s2 = np.asarray(s2, dtype=np.float64)
    if not np.all((0.0 <= s1) & (s1 <= s2) & (s2 < t) & (t <= 1.0)):
        raise DomainError("Serve 0 <= s' <= s'' < t <= 1")

    A = ctx.exponent
    a1 = np.asarray(A.eval(s1))
    a2 = np.asarray(A.eval(s2))
    lhs = np.abs(_power_kernel(t, s1, a1) - _power_kernel(t, s2, a2))
    rhs = ctx.c0 * ((t - s2) ** (A.lower_bound - 1.5) * (s2 - s1) + np.abs(a1 - a2))
    holds = lhs <= rhs
    if np.ndim(holds) == 0:
        return BoundCheck(float(lhs), float(rhs), bool(holds))
    return BoundCheck(lhs, rhs, holds)


def coefficient_sum_bound(ctx: KernelContext, t: float, j: int) -> BoundCheck:
    """
    Verifica S_j(t) <= c4 2^{-j/2} + c0 2^{j/2} int_0^{1-2^{-j-1}} |A(s) - A(s+2^{-j-1})| ds.

    S_j(t) = sum_k |<K_t, h_{j,k}>|, c4 = c0 / (2 a_min - 1) + 1.
    """
    A = ctx.exponent
    c0 = ctx.c0
    c4 = c0 / (2.0 * A.lower_bound - 1.0) + 1.0

    _, rows = haar_inner_product_rows(ctx, t, j + 1)
    lhs = float(np.abs(rows[j]).sum())

    level = max(A.level if A.nodes is not None else SMOOTH_LEVEL, j + 1) + 4
    shift = 2 ** (level - j - 1)
    values = np.asarray(A.eval(dyadic_points(level)))
    gaps = np.abs(values[:-shift] - values[shift:])
    variation = trapezoid(gaps, dx=2.0 ** -level)

    rhs = c4 * 2.0 ** (-0.5 * j) + c0 * 2.0 ** (0.5 * j) * variation
    return BoundCheck(lhs, float(rhs), lhs <= rhs)
