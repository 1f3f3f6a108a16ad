"""
Modulo per la visualizzazione delle traiettorie dell'MPRE.

Fornisce grafici dell'esponente A(s), la sovrapposizione degli schemi
X^^J e X~^J e una figura riassuntiva 2x2.
"""

from typing import Optional, Sequence

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.axes import Axes
from matplotlib.figure import Figure

from mpre.brownian import dyadic_points
from mpre.exponent import ExponentProcess
from mpre.simulator import PathSeries

SCHEME_COLORS = {"hat": "tab:blue", "tilde": "tab:red", "haar": "tab:green"}
SCHEME_LABELS = {"hat": r"$\widehat{X}^J$", "tilde": r"$\widetilde{X}^J$", "haar": r"$X^J$"}


def plot_exponent(
    A: ExponentProcess,
    ax: Optional[Axes] = None,
    level: Optional[int] = None,
    figsize: tuple = (10, 4)
) -> Axes:
    """
    Disegna l'esponente A(s) con i suoi limiti.

    Parameters
    ----------
    A : ExponentProcess
        Esponente da disegnare
    ax : Optional[Axes], default=None
        Axes matplotlib su cui disegnare. Se None, viene creato un nuovo plot
    level : int, optional
        Livello della griglia di valutazione, default max(J_A, 10)
    figsize : tuple, default=(10, 4)
        Dimensioni della figura (usato solo se ax è None)

    Returns
    -------
    Axes
        L'oggetto Axes matplotlib utilizzato
    """
    if ax is None:
        fig, ax = plt.subplots(figsize=figsize)

    s = dyadic_points(max(A.level, 10) if level is None else level)
    ax.plot(s, A.eval(s), color="black", linewidth=1.2, label="A(s)")
    ax.axhline(A.lower_bound, color="gray", linestyle="--", linewidth=1, alpha=0.7)
    ax.axhline(A.upper_bound, color="gray", linestyle="--", linewidth=1, alpha=0.7)

    ax.set_xlabel("s", fontsize=12)
    ax.set_ylabel("A(s)", fontsize=12)
    ax.set_title(f"Esponente {A.label}", fontsize=13, fontweight="bold")
    ax.set_xlim(0.0, 1.0)
    ax.grid(True, alpha=0.3)
    return ax


def plot_paths(
    series: Sequence[PathSeries],
    ax: Optional[Axes] = None,
    title: Optional[str] = None,
    figsize: tuple = (10, 5)
) -> Axes:
    """
    Sovrappone piu' traiettorie (tipicamente X^^J e X~^J dello stesso omega).

    Parameters
    ----------
    series : sequenza di PathSeries
        Traiettorie da disegnare
    ax : Optional[Axes], default=None
        Axes matplotlib su cui disegnare. Se None, viene creato un nuovo plot
    title : str, optional
        Titolo; di default riassume schemi, J e seed

    Returns
    -------
    Axes
        L'oggetto Axes matplotlib utilizzato

    Examples
    --------
    >>> path = sample_brownian(7, 12)
    >>> A = make_constant(0.75)
    >>> t = dyadic_times(10)
    >>> plot_paths([simulate_hat(path, A, t), simulate_tilde(path, A, t)])
    """
    if ax is None:
        fig, ax = plt.subplots(figsize=figsize)

    for s in series:
        ax.plot(
            s.times,
            s.values,
            color=SCHEME_COLORS.get(s.scheme, "black"),
            linewidth=1.0,
            alpha=0.8,
            label=f"{SCHEME_LABELS.get(s.scheme, s.scheme)}, J={s.level}",
        )

    if title is None and series:
        first = series[0]
        title = f"MPRE {first.exponent_ref} (seed {first.seed})"
    ax.set_xlabel("t", fontsize=12)
    ax.set_ylabel("X(t)", fontsize=12)
    if title:
        ax.set_title(title, fontsize=13, fontweight="bold")
    ax.set_xlim(0.0, 1.0)
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    return ax


def plot_overview(
    A: ExponentProcess,
    hat: PathSeries,
    tilde: PathSeries,
    figsize: tuple = (14, 9)
) -> Figure:
    """
    Figura 2x2: A(s), sovrapposizione dei due schemi, X^^J da solo, X~^J da solo.

    Le due traiettorie singole condividono la scala verticale.
    """
    fig, axes = plt.subplots(2, 2, figsize=figsize)
    plot_exponent(A, ax=axes[0, 0])
    plot_paths([hat, tilde], ax=axes[0, 1], title="Sovrapposizione")
    plot_paths([hat], ax=axes[1, 0], title=f"{SCHEME_LABELS['hat']} da solo")
    plot_paths([tilde], ax=axes[1, 1], title=f"{SCHEME_LABELS['tilde']} da solo")

    both = np.concatenate([hat.values, tilde.values])
    if len(both):
        margin = 0.05 * (both.max() - both.min() or 1.0)
        for ax in (axes[1, 0], axes[1, 1]):
            ax.set_ylim(both.min() - margin, both.max() + margin)

    fig.suptitle(f"MPRE con esponente {A.label}, seed {hat.seed}", fontsize=14, fontweight="bold")
    fig.tight_layout()
    return fig
