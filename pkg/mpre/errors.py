"""
Eccezioni del toolkit MPRE.

Tutte le eccezioni derivano da ValueError, come gli errori di validazione del
resto del package, e portano un codice di uscita usato dalla CLI:
1 = uso scorretto, 2 = fallimento numerico (3 = I/O e' riservato a OSError).
"""

from typing import Optional


class MPREError(ValueError):
    """Base per tutti gli errori del package."""

    exit_code = 2


class ConfigError(MPREError):
    """Configurazione o argomenti da riga di comando non validi."""

    exit_code = 1


class LevelOverflowError(MPREError):
    """Livello diadico fuori dall'intervallo consentito."""


class InsufficientResolutionError(MPREError):
    """
    Livello troppo basso per l'operazione richiesta.

    Attributes
    ----------
    eta0 : float, optional
        Per i coefficienti di Haar: eta0 resta definito anche al livello 0.
    """

    def __init__(self, message: str, eta0: Optional[float] = None):
        super().__init__(message)
        self.eta0 = eta0


class BoundViolationError(MPREError):
    """Esponente fuori da (1/2, 1) o valori fuori da [a_min, a_max]."""


class DomainError(MPREError):
    """Argomento fuori dal dominio della funzione."""


class DegenerateNormalizationError(MPREError):
    """Normalizzazione min-max di un cammino numericamente costante."""


class GridMismatchError(MPREError):
    """Griglie temporali incompatibili o finestra non allineata alla griglia."""


class InsufficientLevelsError(MPREError):
    """Troppo pochi livelli utilizzabili per stimare una pendenza."""


class MemoryGuardError(MPREError):
    """Livello di riferimento oltre il limite di memoria."""
