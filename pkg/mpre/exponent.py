"""
Processo esponente A(s) dell'MPRE.

Costruisce e valuta l'esponente (costante, sinusoidale, Riemann-Liouville
normalizzato, tabulato) con i suoi limiti 1/2 < a_min <= a_max < 1 e i
metadati di Hoelder (gamma, rho). I metadati sono dichiarati o stimati, mai
dimostrati.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import signal, stats

from mpre.brownian import (
    BrownianPath,
    derived_seed,
    dyadic_points,
    replicate_seeds,
    sample_brownian,
)
from mpre.errors import (
    BoundViolationError,
    ConfigError,
    DegenerateNormalizationError,
    DomainError,
    InsufficientResolutionError,
    MPREError,
)

logger = logging.getLogger(__name__)

ExponentKind = Literal["constant", "smooth", "riemann_liouville", "tabulated"]

# Tolleranza sui valori tabulati rispetto ai limiti dichiarati
RANGE_TOL = 1e-12
RL_MIN_LEVEL = 8
SMOOTH_LEVEL = 12
GAMMA_MARGIN = 0.05


@dataclass(frozen=True)
class HolderMetadata:
    """
    Metadati di regolarita' dell'esponente.

    Attributes
    ----------
    gamma : float
        Ordine di Hoelder uniforme dei cammini
    rho : float
        Ordine di Hoelder in media quadratica
    c1_estimate : float, optional
        Costante di Hoelder dei cammini stimata sulla griglia
    c_estimate : float, optional
        Costante in media quadratica (solo se stimata via Monte Carlo)
    """
    gamma: float
    rho: float
    c1_estimate: Optional[float] = None
    c_estimate: Optional[float] = None


@dataclass(frozen=True, eq=False)
class ExponentProcess:
    """
    Esponente A(s) tabulato su una griglia diadica di livello J_A.

    Attributes
    ----------
    kind : {"constant", "smooth", "riemann_liouville", "tabulated"}
        Tipo di costruzione
    lower_bound, upper_bound : float
        Limiti a_min <= a_max in (1/2, 1)
    grid_values : np.ndarray
        A(delta_{J_A,k}), k = 0..2^J_A
    metadata : HolderMetadata
        gamma, rho e costanti stimate
    params : tuple
        Parametri della formula esatta (H) o (a, b, f) o (H, a, b)
    source_seed : int, optional
        Seed del cammino che guida A (per i tipi riemann_liouville)
    label : str
        Identificativo leggibile, es. "rl:0.9:0.55:0.95"
    """
    kind: ExponentKind
    lower_bound: float
    upper_bound: float
    grid_values: np.ndarray
    metadata: HolderMetadata
    params: Tuple[float, ...] = ()
    source_seed: Optional[int] = None
    label: str = ""

    def __post_init__(self):
        _check_bounds(self.lower_bound, self.upper_bound)
        values = np.array(self.grid_values, dtype=np.float64)
        n = len(values) - 1
        if n < 1 or n & (n - 1):
            raise MPREError(f"grid_values deve avere 2^J + 1 elementi, ricevuti: {len(values)}")
        if np.any(values < self.lower_bound - RANGE_TOL) or np.any(values > self.upper_bound + RANGE_TOL):
            raise BoundViolationError(
                f"Valori tabulati fuori da [{self.lower_bound}, {self.upper_bound}]: "
                f"min={values.min()}, max={values.max()}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "grid_values", values)

    @property
    def level(self) -> int:
        return int(len(self.grid_values) - 1).bit_length() - 1

    @property
    def gamma(self) -> float:
        return self.metadata.gamma

    @property
    def rho(self) -> float:
        return self.metadata.rho

    @property
    def nodes(self) -> Optional[np.ndarray]:
        """Nodi di interpolazione lineare, None per i tipi con formula esatta."""
        if self.kind in ("constant", "smooth"):
            return None
        return dyadic_points(self.level)

    def eval(self, s: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """
        Valuta A(s) per s in [0, 1].

        Formula esatta per i tipi constant e smooth, interpolazione lineare
        tra i valori di griglia altrimenti.

        Raises
        ------
        DomainError
            Se qualche s e' fuori da [0, 1]
        """
        s_arr = np.asarray(s, dtype=np.float64)
        if not np.all((s_arr >= 0.0) & (s_arr <= 1.0)):
            raise DomainError(f"s deve stare in [0, 1], ricevuto: {s}")

        if self.kind == "constant":
            result = np.full_like(s_arr, self.params[0])
        elif self.kind == "smooth":
            a, b, f = self.params
            result = 0.5 * (a + b) + 0.5 * (b - a) * np.sin(2.0 * np.pi * f * s_arr)
            result = np.clip(result, self.lower_bound, self.upper_bound)
        else:
            result = np.interp(s_arr, dyadic_points(self.level), self.grid_values)

        if result.ndim == 0:
            return float(result)
        return result


def _check_bounds(a: float, b: float) -> None:
    if not (0.5 < a <= b < 1.0):
        raise BoundViolationError(
            f"L'esponente deve stare in (1/2, 1) con a <= b, ricevuto: a={a}, b={b}"
        )


def _metadata(values: np.ndarray, gamma: float, rho: float) -> HolderMetadata:
    return HolderMetadata(gamma=gamma, rho=rho, c1_estimate=_grid_c1(values, min(gamma, 1.0)))


def make_constant(H: float, level: int = 0) -> ExponentProcess:
    """
    Esponente costante A(s) = H: l'MPRE si riduce al processo di Riemann-Liouville R_H.

    Raises
    ------
    BoundViolationError
        Se H non sta in (1/2, 1)

    Examples
    --------
    >>> make_constant(0.75).eval(0.3)
    0.75
    """
    _check_bounds(H, H)
    values = np.full(2 ** level + 1, float(H))
    return ExponentProcess(
        kind="constant",
        lower_bound=float(H),
        upper_bound=float(H),
        grid_values=values,
        metadata=_metadata(values, 1.0, 1.0),
        params=(float(H),),
        label=f"const:{H}",
    )


def make_smooth(a: float, b: float, f: float = 1.0, level: int = SMOOTH_LEVEL) -> ExponentProcess:
    """
    Esponente deterministico sinusoidale.

    Notes
    -----
    A(s) = (a+b)/2 + ((b-a)/2) sin(2 pi f s), tabulato al livello `level`;
    gamma = rho = 1.

    Raises
    ------
    BoundViolationError
        Se non vale 1/2 < a <= b < 1
    """
    _check_bounds(a, b)
    a, b, f = float(a), float(b), float(f)
    points = dyadic_points(level)
    values = np.clip(0.5 * (a + b) + 0.5 * (b - a) * np.sin(2.0 * np.pi * f * points), a, b)
    return ExponentProcess(
        kind="smooth",
        lower_bound=a,
        upper_bound=b,
        grid_values=values,
        metadata=_metadata(values, 1.0, 1.0),
        params=(a, b, f),
        label=f"sin:{a}:{b}:{f}",
    )


def make_tabulated(
    values: Sequence[float],
    lower_bound: Optional[float] = None,
    upper_bound: Optional[float] = None,
    gamma: float = 1.0,
    rho: float = 1.0,
    label: str = "tabulated",
) -> ExponentProcess:
    """
    Esponente dato per valori su una griglia diadica (2^J + 1 valori).

    I limiti di default sono il minimo e il massimo dei valori.
    """
    values = np.asarray(values, dtype=np.float64)
    lo = float(values.min()) if lower_bound is None else float(lower_bound)
    hi = float(values.max()) if upper_bound is None else float(upper_bound)
    _check_bounds(lo, hi)
    return ExponentProcess(
        kind="tabulated",
        lower_bound=lo,
        upper_bound=hi,
        grid_values=values,
        metadata=_metadata(values, gamma, rho),
        label=label,
    )


def riemann_liouville_grid(path: BrownianPath, H: float) -> np.ndarray:
    """
    Somma a punto sinistro del processo di Riemann-Liouville sulla griglia del cammino.

    Notes
    -----
    R_H(delta_{J,l}) = sum_{m<l} (delta_{J,l} - delta_{J,m})^{H-1/2} Delta B_{J,m}

    Il valore in delta_{J,l} usa solo incrementi con delta_{J,m+1} <= delta_{J,l}.

    Returns
    -------
    np.ndarray
        2^J + 1 valori, il primo e' R_H(0) = 0
    """
    if not 0.0 < H < 1.0:
        raise DomainError(f"H deve stare in (0, 1), ricevuto: {H}")
    n = len(path.increments)
    weights = (np.arange(1, n + 1, dtype=np.float64) * 2.0 ** -path.level) ** (H - 0.5)
    partial = signal.convolve(path.increments, weights, method="auto")[:n]
    return np.concatenate(([0.0], partial))


def make_rl_exponent(
    H: float,
    a: float,
    b: float,
    path: BrownianPath,
    gamma_margin: float = GAMMA_MARGIN,
    independent: bool = False,
) -> ExponentProcess:
    """
    Esponente casuale ottenuto normalizzando R_H nell'intervallo [a, b].

    Parameters
    ----------
    H : float
        Parametro di Hurst di R_H, 0 < H < 1
    a, b : float
        Limiti dell'esponente, 1/2 < a <= b < 1
    path : BrownianPath
        Cammino che guida R_H (livello >= 8). Usare lo stesso cammino del
        rumore di X rende A adattato; un seed indipendente realizza il caso
        indipendente.
    gamma_margin : float, default 0.05
        gamma dichiarato = H - gamma_margin
    independent : bool, default False
        Solo per l'etichetta: il cammino e' indipendente dal rumore di X

    Returns
    -------
    ExponentProcess
        A(s) = a + (b-a) (R_H(s) - min R_H) / (max R_H - min R_H), con R_H(0) = 0
        incluso nella ricerca di min e max; rho = H.

    Raises
    ------
    DegenerateNormalizationError
        Se R_H e' numericamente costante
    """
    if not 0.0 < H < 1.0:
        raise DomainError(f"H deve stare in (0, 1), ricevuto: {H}")
    _check_bounds(a, b)
    if path.level < RL_MIN_LEVEL:
        raise InsufficientResolutionError(
            f"L'esponente RL richiede un cammino di livello >= {RL_MIN_LEVEL}, ricevuto: {path.level}"
        )

    rl = riemann_liouville_grid(path, H)
    lo, hi = float(rl.min()), float(rl.max())
    if not hi > lo:
        raise DegenerateNormalizationError(
            f"Normalizzazione degenere: max R_H = min R_H = {lo}"
        )

    u = (rl - lo) / (hi - lo)
    # Forma convessa: u=0 -> a e u=1 -> b esatti; il clip tocca solo arrotondamenti di un ulp
    values = np.clip(a * (1.0 - u) + b * u, a, b)

    suffix = ":indep" if independent else ""
    return ExponentProcess(
        kind="riemann_liouville",
        lower_bound=float(a),
        upper_bound=float(b),
        grid_values=values,
        metadata=_metadata(values, H - gamma_margin, H),
        params=(float(H), float(a), float(b)),
        source_seed=path.seed,
        label=f"rl:{H}:{a}:{b}{suffix}",
    )


def _grid_c1(values: np.ndarray, gamma: float) -> float:
    n = len(values) - 1
    level = n.bit_length() - 1
    best = 0.0
    for j in range(level + 1):
        step = 2 ** (level - j)
        diffs = np.abs(values[step:] - values[:-step])
        best = max(best, float(diffs.max()) / (2.0 ** -j) ** gamma)
    return best


def estimate_c1(A: ExponentProcess, gamma: float) -> float:
    """
    Stima la costante di Hoelder uniforme C1 di A all'ordine gamma.

    Notes
    -----
    max su coppie di griglia a distanza 2^-j, j <= J_A, di
    |A(s'') - A(s')| / |s'' - s'|^gamma (costo O(N log N)).

    Raises
    ------
    DomainError
        Se gamma non sta in (0, 1]
    """
    if not 0.0 < gamma <= 1.0:
        raise DomainError(f"gamma deve stare in (0, 1], ricevuto: {gamma}")
    return _grid_c1(A.grid_values, gamma)


@dataclass(frozen=True)
class ExponentSpec:
    """
    Descrizione testuale di un esponente.

    Formati: "const:<H>", "sin:<a>:<b>:<f>", "rl:<H>:<a>:<b>[:indep]", "file:<path>".
    """
    kind: ExponentKind
    params: Tuple[float, ...] = ()
    file: Optional[str] = None
    independent: bool = False
    text: str = ""

    @classmethod
    def parse(cls, text: str) -> "ExponentSpec":
        """
        Converte una stringa nella specifica.

        Raises
        ------
        ConfigError
            Se il formato non e' riconosciuto
        BoundViolationError
            Se l'esponente esce da (1/2, 1)
        """
        parts = text.strip().split(":")
        head, rest = parts[0], parts[1:]

        if head == "file":
            if len(rest) < 1 or not rest[0]:
                raise ConfigError(f"Formato atteso file:<path>, ricevuto: {text}")
            return cls(kind="tabulated", file=":".join(rest), text=text)

        independent = False
        if head == "rl" and rest and rest[-1] == "indep":
            independent = True
            rest = rest[:-1]

        expected = {"const": 1, "sin": 3, "rl": 3}
        if head not in expected:
            raise ConfigError(
                f"Esponente non riconosciuto: {text}. Formati: const:H, sin:a:b:f, rl:H:a:b[:indep], file:path"
            )
        if len(rest) != expected[head]:
            raise ConfigError(f"{head} richiede {expected[head]} parametri, ricevuto: {text}")
        try:
            params = tuple(float(p) for p in rest)
        except ValueError as e:
            raise ConfigError(f"Errore nel parsing dell'esponente {text}: {e}")

        if head == "const":
            _check_bounds(params[0], params[0])
            return cls(kind="constant", params=params, text=text)
        if head == "sin":
            _check_bounds(params[0], params[1])
            return cls(kind="smooth", params=params, text=text)

        if not 0.0 < params[0] < 1.0:
            raise ConfigError(f"H deve stare in (0, 1), ricevuto: {params[0]}")
        _check_bounds(params[1], params[2])
        return cls(kind="riemann_liouville", params=params, independent=independent, text=text)

    @property
    def needs_path(self) -> bool:
        return self.kind == "riemann_liouville"

    @property
    def adapted_to_noise(self) -> bool:
        """True se A e' costruito dallo stesso cammino che guida X."""
        return self.kind == "riemann_liouville" and not self.independent

    @property
    def declared_rho(self) -> Optional[float]:
        """rho dichiarato senza costruire il processo (None per i file)."""
        if self.kind == "riemann_liouville":
            return self.params[0]
        if self.kind in ("constant", "smooth"):
            return 1.0
        return None

    def build(self, path: Optional[BrownianPath] = None) -> ExponentProcess:
        """
        Costruisce l'esponente; per i tipi RL usa il cammino (o uno indipendente
        dello stesso livello, derivato dal suo seed).
        """
        if self.kind == "constant":
            return make_constant(self.params[0])
        if self.kind == "smooth":
            level = SMOOTH_LEVEL if path is None else max(path.level, 1)
            return make_smooth(*self.params, level=level)
        if self.kind == "tabulated":
            return read_exponent_csv(self.file)

        if path is None:
            raise MPREError(f"L'esponente {self.text} richiede un cammino browniano")
        H, a, b = self.params
        if self.independent:
            driver = sample_brownian(derived_seed(path.seed), path.level)
            return make_rl_exponent(H, a, b, driver, independent=True)
        return make_rl_exponent(H, a, b, path)


def read_exponent_csv(file: Union[str, Path]) -> ExponentProcess:
    """
    Legge un esponente tabulato da CSV con righe s,value.

    Le ascisse devono partire da 0, finire in 1 ed essere crescenti; i valori
    vengono riportati sulla griglia diadica di livello ceil(log2(n-1)) per
    interpolazione lineare (esatta se l'input e' gia' diadico).
    """
    df = pd.read_csv(file, comment="#", float_precision="round_trip")
    if list(df.columns) != ["s", "value"]:
        df = pd.read_csv(file, comment="#", header=None, names=["s", "value"], float_precision="round_trip")

    s = df["s"].to_numpy(dtype=np.float64)
    v = df["value"].to_numpy(dtype=np.float64)
    if len(s) < 2 or s[0] != 0.0 or s[-1] != 1.0 or np.any(np.diff(s) <= 0):
        raise MPREError(f"Le ascisse di {file} devono crescere da 0 a 1")

    level = max(1, math.ceil(math.log2(len(s) - 1)))
    values = np.interp(dyadic_points(level), s, v)
    return make_tabulated(values, label=f"file:{file}")


def write_exponent_csv(A: ExponentProcess, file: Union[str, Path]) -> None:
    """Esporta i valori di griglia di A come CSV s,value."""
    df = pd.DataFrame({"s": dyadic_points(A.level), "value": A.grid_values})
    df.to_csv(file, index=False)


@dataclass
class MeanSquareReport:
    """
    Verifica Monte Carlo della condizione di Hoelder in media quadratica.

    Attributes
    ----------
    separations : List[float]
        Distanze diadiche 2^-j
    mean_squares : List[float]
        Stime di E|A(x) - A(y)|^2
    slope : float, optional
        Pendenza di log2(media) contro log2(distanza); None se degenere
    target : float
        2 rho
    degenerate : bool
        True se tutte le stime sono nulle (esponente costante)
    passed : bool
        slope >= target - tolerance (oppure degenere)
    n_seeds : int
    """
    separations: List[float]
    mean_squares: List[float]
    slope: Optional[float]
    target: float
    degenerate: bool
    passed: bool
    n_seeds: int
    tolerance: float = 0.2

    def to_dict(self) -> Dict:
        return {
            "separations": self.separations,
            "mean_squares": self.mean_squares,
            "slope": "degenerate" if self.degenerate else self.slope,
            "target": self.target,
            "passed": self.passed,
            "n_seeds": self.n_seeds,
            "tolerance": self.tolerance,
        }


def check_mean_square_holder(
    spec: Union[str, ExponentSpec],
    rho: float,
    n_seeds: int,
    level: int = 10,
    master_seed: int = 0,
    j_range: Optional[Sequence[int]] = None,
    tolerance: float = 0.2,
) -> MeanSquareReport:
    """
    Stima E|A(x) - A(y)|^2 su repliche e ne verifica la pendenza.

    Parameters
    ----------
    spec : str o ExponentSpec
        Esponente da verificare
    rho : float
        Ordine dichiarato, 1/2 < rho <= 1
    n_seeds : int
        Numero di repliche
    level : int, default 10
        Livello della griglia di valutazione (e del cammino per i tipi RL)
    j_range : sequenza di int, optional
        Scale 2^-j usate nella regressione; default 3..level-1
    tolerance : float, default 0.2
        Margine sulla pendenza attesa 2 rho

    Returns
    -------
    MeanSquareReport
    """
    if not 0.5 < rho <= 1.0:
        raise DomainError(f"rho deve stare in (1/2, 1], ricevuto: {rho}")
    if isinstance(spec, str):
        spec = ExponentSpec.parse(spec)
    if j_range is None:
        j_range = range(3, level)
    j_range = list(j_range)

    points = dyadic_points(level)
    sums = np.zeros(len(j_range))
    for seed in replicate_seeds(master_seed, n_seeds):
        path = sample_brownian(seed, level) if spec.needs_path else None
        values = np.asarray(spec.build(path).eval(points))
        for i, j in enumerate(j_range):
            step = 2 ** (level - j)
            sums[i] += np.mean((values[step:] - values[:-step]) ** 2)

    mean_squares = sums / n_seeds
    separations = [2.0 ** -j for j in j_range]
    target = 2.0 * rho

    if np.all(mean_squares == 0.0):
        return MeanSquareReport(separations, mean_squares.tolist(), None, target, True, True, n_seeds, tolerance)

    fit = stats.linregress(np.log2(separations), np.log2(mean_squares))
    slope = float(fit.slope)
    logger.info("Pendenza in media quadratica %.3f (attesa >= %.3f)", slope, target - tolerance)
    return MeanSquareReport(
        separations=separations,
        mean_squares=mean_squares.tolist(),
        slope=slope,
        target=target,
        degenerate=False,
        passed=slope >= target - tolerance,
        n_seeds=n_seeds,
        tolerance=tolerance,
    )
