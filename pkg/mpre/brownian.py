"""
Moto browniano su griglie diadiche.

Genera cammini browniani sui punti delta_{J,k} = k 2^-J di [0, 1], li raffina
per bisezione (ponte browniano al punto medio) e ne estrae i coefficienti di
Haar eta0 ed eps_{j,k}.

Tutti i livelli di uno stesso seed descrivono la stessa traiettoria: il
cammino di livello J si ottiene dal livello 0 con J raffinamenti successivi,
e il rumore del raffinamento verso il livello j proviene da un flusso Philox
indicizzato da (seed, j). I valori puntuali sono arrotondati a multipli di
2^-48, quindi somme e differenze di valori e incrementi sono esatte in float64.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Union

import numpy as np

from mpre.errors import (
    InsufficientResolutionError,
    LevelOverflowError,
    MPREError,
)

logger = logging.getLogger(__name__)

MAX_LEVEL = 26
QUANTUM = 2.0 ** -48
VALUE_LIMIT = 16.0

DUMP_MAGIC = b"MPREBM1"
_HEADER_DTYPE = np.dtype([("magic", "S7"), ("level", "<u4"), ("seed", "<u8")])


def dyadic_points(level: int) -> np.ndarray:
    """Punti k 2^-level per k = 0..2^level (esatti per level <= 52)."""
    if level < 0:
        raise LevelOverflowError(f"level deve essere >= 0, ricevuto: {level}")
    return np.arange(2 ** level + 1, dtype=np.float64) * 2.0 ** -level


@dataclass(frozen=True)
class DyadicGrid:
    """
    Griglia diadica di livello J su [0, 1].

    Attributes
    ----------
    level : int
        Livello J; la griglia ha 2^J + 1 punti e passo 2^-J.
    """
    level: int

    def __post_init__(self):
        if self.level < 0:
            raise LevelOverflowError(f"level deve essere >= 0, ricevuto: {self.level}")

    @property
    def points(self) -> np.ndarray:
        return dyadic_points(self.level)

    @property
    def spacing(self) -> float:
        return 2.0 ** -self.level


@dataclass(frozen=True, eq=False)
class BrownianPath:
    """
    Cammino browniano campionato sulla griglia diadica di livello J.

    Gli incrementi sono la fonte di verita'; i valori sono derivati con una
    sola somma cumulativa.

    Attributes
    ----------
    level : int
        Livello J della griglia
    increments : np.ndarray
        Incrementi Delta B_{J,l}, l = 0..2^J-1
    seed : int
        Seed a 64 bit della traiettoria
    values : np.ndarray
        B(delta_{J,k}), k = 0..2^J, con B(0) = 0 (calcolato)
    """
    level: int
    increments: np.ndarray
    seed: int
    values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        increments = np.array(self.increments, dtype=np.float64)
        if increments.shape != (2 ** self.level,):
            raise MPREError(
                f"Servono {2 ** self.level} incrementi per il livello {self.level}, "
                f"ricevuti: {increments.shape}"
            )
        values = np.concatenate(([0.0], np.cumsum(increments)))
        increments.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "increments", increments)
        object.__setattr__(self, "values", values)

    @property
    def grid(self) -> DyadicGrid:
        return DyadicGrid(self.level)

    @property
    def times(self) -> np.ndarray:
        return dyadic_points(self.level)

    def coarse_increments(self, level: int) -> np.ndarray:
        """
        Incrementi Delta B_{level,l} dello stesso cammino su una griglia piu' grossa.

        Raises
        ------
        LevelOverflowError
            Se level > self.level
        """
        if level < 0 or level > self.level:
            raise LevelOverflowError(
                f"level deve stare in [0, {self.level}], ricevuto: {level}"
            )
        return np.diff(self.values[:: 2 ** (self.level - level)])

    def coarsen(self, level: int) -> "BrownianPath":
        """Lo stesso cammino ristretto alla griglia di livello level <= self.level."""
        return BrownianPath(level=level, increments=self.coarse_increments(level), seed=self.seed)


@dataclass(frozen=True, eq=False)
class HaarCoefficients:
    """
    Coefficienti di Haar del moto browniano.

    Attributes
    ----------
    eta0 : float
        B(1) - B(0)
    eps : List[np.ndarray]
        eps[j][k] = 2^{j/2} (Delta B_{j+1,2k} - Delta B_{j+1,2k+1}),
        j = 0..depth-1, k = 0..2^j-1
    """
    eta0: float
    eps: List[np.ndarray]

    @property
    def depth(self) -> int:
        return len(self.eps)

    def truncate(self, depth: int) -> "HaarCoefficients":
        """Restituisce i coefficienti dei livelli j < depth."""
        if depth < 0 or depth > self.depth:
            raise LevelOverflowError(
                f"depth deve stare in [0, {self.depth}], ricevuto: {depth}"
            )
        return HaarCoefficients(eta0=self.eta0, eps=self.eps[:depth])


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if seed < 0 or seed >= 2 ** 64:
        raise MPREError(f"seed deve essere un intero a 64 bit non negativo, ricevuto: {seed}")
    return seed


def level_stream(seed: int, level: int) -> np.random.Generator:
    """Flusso Philox indicizzato da (seed, level), indipendente dall'ordine di valutazione."""
    sequence = np.random.SeedSequence(_check_seed(seed), spawn_key=(level,))
    return np.random.Generator(np.random.Philox(sequence))


def _quantize(x: np.ndarray) -> np.ndarray:
    return np.round(x / QUANTUM) * QUANTUM


def _check_values(values: np.ndarray, seed: int) -> None:
    # Oltre 16 la griglia 2^-48 non e' piu' rappresentabile esattamente
    if np.max(np.abs(values)) >= VALUE_LIMIT:
        raise MPREError(f"Cammino fuori dal reticolo esatto (|B| >= {VALUE_LIMIT}) per seed {seed}")


def _path_from_values(level: int, values: np.ndarray, seed: int) -> BrownianPath:
    return BrownianPath(level=level, increments=np.diff(values), seed=seed)


def sample_brownian(seed: int, J: int, max_level: int = MAX_LEVEL) -> BrownianPath:
    """
    Genera un moto browniano standard sulla griglia diadica di livello J.

    Parameters
    ----------
    seed : int
        Seed a 64 bit
    J : int
        Livello della griglia, 0 <= J <= max_level
    max_level : int, default MAX_LEVEL
        Limite superiore del livello (26: array sotto 1 GiB)

    Returns
    -------
    BrownianPath
        2^J incrementi i.i.d. Normal(0, 2^-J), deterministici dato (seed, J).
        sample_brownian(seed, J + 1) coincide con refine(sample_brownian(seed, J)).

    Raises
    ------
    LevelOverflowError
        Se J e' fuori da [0, max_level]

    Examples
    --------
    >>> path = sample_brownian(7, 10)
    >>> path.increments.shape
    (1024,)
    """
    seed = _check_seed(seed)
    if J < 0 or J > max_level:
        raise LevelOverflowError(f"J deve stare in [0, {max_level}], ricevuto: {J}")

    values = np.array([0.0, _quantize(level_stream(seed, 0).standard_normal(1))[0]])
    _check_values(values, seed)
    path = _path_from_values(0, values, seed)
    for _ in range(J):
        path = refine(path, max_level=max_level)
    return path


def refine(path: BrownianPath, max_level: int = MAX_LEVEL) -> BrownianPath:
    """
    Raffina un cammino al livello J+1 con il ponte browniano al punto medio.

    Il valore nel punto medio di ogni cella e' la media degli estremi piu' una
    Normal(0, 2^{-J-2}); gli incrementi della cella madre restano esattamente
    la somma degli incrementi figli.

    Raises
    ------
    LevelOverflowError
        Se path.level + 1 > max_level
    """
    new_level = path.level + 1
    if new_level > max_level:
        raise LevelOverflowError(
            f"Impossibile raffinare oltre il livello {max_level}, livello attuale: {path.level}"
        )

    values = path.values
    z = level_stream(path.seed, new_level).standard_normal(len(values) - 1)
    midpoints = _quantize(0.5 * (values[:-1] + values[1:]) + z * 2.0 ** (-0.5 * (new_level + 1)))

    fine = np.empty(2 * len(values) - 1)
    fine[0::2] = values
    fine[1::2] = midpoints
    _check_values(fine, path.seed)
    return _path_from_values(new_level, fine, path.seed)


def haar_coefficients(path: BrownianPath) -> HaarCoefficients:
    """
    Estrae eta0 e la matrice triangolare eps_{j,k} dagli incrementi.

    Notes
    -----
    eta0 = B(1) - B(0)
    eps_{j,k} = 2^{j/2} (Delta B_{j+1,2k} - Delta B_{j+1,2k+1}), j < J

    Raises
    ------
    InsufficientResolutionError
        Se path.level == 0 (eta0 resta disponibile nell'eccezione)

    Examples
    --------
    >>> coeffs = haar_coefficients(sample_brownian(7, 8))
    >>> coeffs.depth
    8
    """
    eta0 = float(path.values[-1] - path.values[0])
    if path.level < 1:
        raise InsufficientResolutionError(
            "I coefficienti eps richiedono un cammino di livello >= 1", eta0=eta0
        )

    eps = []
    for j in range(path.level):
        inc = path.coarse_increments(j + 1)
        eps.append(2.0 ** (0.5 * j) * (inc[0::2] - inc[1::2]))
    return HaarCoefficients(eta0=eta0, eps=eps)


def dump_increments(path: BrownianPath, file: Union[str, Path]) -> None:
    """
    Salva gli incrementi in formato binario.

    Formato: magic "MPREBM1", livello (uint32 LE), seed (uint64 LE), poi
    2^J float64 little-endian.
    """
    header = np.array([(DUMP_MAGIC, path.level, path.seed)], dtype=_HEADER_DTYPE)
    with open(file, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(path.increments.astype("<f8").tobytes())
    logger.debug("Salvati %d incrementi in %s", len(path.increments), file)


def load_increments(file: Union[str, Path]) -> BrownianPath:
    """
    Rilegge un cammino salvato con dump_increments.

    Raises
    ------
    MPREError
        Se il magic o la lunghezza non sono coerenti
    """
    data = Path(file).read_bytes()
    size = _HEADER_DTYPE.itemsize
    if len(data) < size:
        raise MPREError(f"File troppo corto per un header MPREBM1: {file}")

    header = np.frombuffer(data[:size], dtype=_HEADER_DTYPE)[0]
    if bytes(header["magic"]) != DUMP_MAGIC:
        raise MPREError(f"Magic non valido in {file}: {bytes(header['magic'])!r}")

    level = int(header["level"])
    increments = np.frombuffer(data[size:], dtype="<f8").astype(np.float64)
    if len(increments) != 2 ** level:
        raise MPREError(
            f"Attesi {2 ** level} incrementi per il livello {level}, trovati: {len(increments)}"
        )
    return BrownianPath(level=level, increments=increments, seed=int(header["seed"]))


def replicate_seeds(master_seed: int, n: int) -> List[int]:
    """Seed delle repliche Monte Carlo derivati da un master seed."""
    if n < 0:
        raise MPREError(f"n deve essere >= 0, ricevuto: {n}")
    state = np.random.SeedSequence(_check_seed(master_seed)).generate_state(n, dtype=np.uint64)
    return [int(s) for s in state]


# Chiave riservata: diversa da ogni (level,) usata dai flussi di raffinamento
_INDEPENDENT_KEY = 0x494E44


def derived_seed(seed: int) -> int:
    """Seed di una traiettoria indipendente ma riproducibile a partire da seed."""
    sequence = np.random.SeedSequence(_check_seed(seed), spawn_key=(_INDEPENDENT_KEY,))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])
