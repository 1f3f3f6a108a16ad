"""
Interfaccia a riga di comando per il toolkit MPRE.

Sottocomandi:
    simulate     traiettoria di uno schema (tilde, hat, haar) su una griglia di tempi
    convergence  studi di convergenza (sup su un omega, L1 Monte Carlo, momenti)
    holder       stima dell'esponente di Hoelder su finestre
    coeffs       prodotti <K_t, h_jk> con il limite 2^(-j/2); diagnostica dei coefficienti su stderr
    selftest     suite veloce di invarianti

Codici di uscita: 0 successo, 1 uso errato, 2 errore o verifica numerica fallita, 3 I/O.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib
import numpy as np
import pandas as pd

from mpre import __version__
from mpre.analysis import (
    check_regularity_lowerbound,
    coefficient_growth_check,
    estimate_uniform_holder,
    kolmogorov_moment_check,
    l1_rate_study,
    levy_modulus_ratio,
    single_path_convergence,
)
from mpre.brownian import MAX_LEVEL, haar_coefficients, replicate_seeds, sample_brownian
from mpre.errors import ConfigError, MPREError
from mpre.exponent import ExponentSpec
from mpre.kernel import SIMULATION_ABS_TOL, KernelContext, QuadraturePolicy, haar_inner_product_rows
from mpre.selftest import format_results, run_selftest
from mpre.simulator import (
    DEFAULT_TIME_LEVEL,
    REFERENCE_HEADROOM,
    REFERENCE_MAX_LEVEL,
    SCHEMES,
    dyadic_times,
    parse_times,
    resolve_threads,
    simulate,
)

logger = logging.getLogger(__name__)

COMMANDS = ("simulate", "convergence", "holder", "coeffs", "selftest")
STUDIES = ("sup", "l1", "moments")
BOOLEAN_KEYS = ("verbose",)
COEFFS_TIME_LEVEL = 2
BOUND_COLUMN = "bound_2^{-j/2}"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_IO = 3


@dataclass
class RunConfig:
    """
    Configurazione risolta di un'esecuzione (default inclusi).

    Viene scritta nell'intestazione dei file di output, tranne il numero di worker.
    """
    command: str
    scheme: str = "hat"
    J: int = 12
    J_ref: int = 16
    seed: int = 0
    master_seed: int = 0
    exponent: str = "const:0.7"
    times: Optional[str] = None
    out: Optional[str] = None
    format: str = "csv"
    n_seeds: int = 20
    windows: List[Tuple[float, float]] = field(default_factory=lambda: [(0.0, 1.0)])
    j_min: Optional[int] = 6
    j_max: Optional[int] = None
    t_probe: float = 0.7
    threads: int = 1
    study: str = "sup"
    tolerance: float = 0.1
    emit_plot_data: Optional[str] = None
    plot: Optional[str] = None
    verbose: bool = False

    @property
    def time_spec(self) -> str:
        level = COEFFS_TIME_LEVEL if self.command == "coeffs" else DEFAULT_TIME_LEVEL
        return self.times or f"dyadic:{min(self.J, level)}"

    @property
    def top_level(self) -> int:
        """Livello piu' fine degli studi di convergenza."""
        return self.J if self.j_max is None else self.j_max

    def metadata(self) -> Dict:
        data = asdict(self)
        data["times"] = self.time_spec
        data["windows"] = ",".join(f"{a}:{b}" for a, b in self.windows)
        data["version"] = __version__
        data.pop("threads")
        return data


class _Parser(argparse.ArgumentParser):
    """ArgumentParser che segnala gli errori d'uso con ConfigError invece di uscire."""

    def error(self, message):
        raise ConfigError(message)


def parse_windows(text: str) -> List[Tuple[float, float]]:
    """
    Converte "a:b,c:d" in una lista di finestre.

    Raises
    ------
    ConfigError
        Se il formato e' errato o una finestra e' vuota
    """
    windows = []
    try:
        for item in text.split(","):
            a, b = item.strip().split(":")
            windows.append((float(a), float(b)))
    except ValueError as e:
        raise ConfigError(f"Errore nel parsing delle finestre {text}: {e}")
    for a, b in windows:
        if not 0.0 <= a < b <= 1.0:
            raise ConfigError(f"Finestra non valida [{a}, {b}]: serve 0 <= a < b <= 1")
    return windows


def read_config_file(path: str) -> Dict[str, str]:
    """
    Legge un file di configurazione con righe key=value.

    Righe vuote e commenti (#) sono ignorati; le chiavi sono i nomi dei flag,
    con '-' o '_'.
    """
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise ConfigError(f"File di configurazione non leggibile: {e}")
    for number, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{number}: atteso key=value, ricevuto: {line}")
        key, value = line.split("=", 1)
        values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="File key=value con valori di default")
    common.add_argument("--verbose", action="store_true", help="Log di debug su stderr")
    common.add_argument("--seed", type=int, default=0, help="Seed a 64 bit del cammino")
    common.add_argument("--master-seed", dest="master_seed", type=int, default=0,
                        help="Master seed delle repliche Monte Carlo")
    common.add_argument("--exponent", type=str, default="const:0.7",
                        help="Esponente: const:H, sin:a:b:f, rl:H:a:b[:indep], file:path")
    common.add_argument("--J", dest="J", type=int, default=12, help="Livello della discretizzazione")
    common.add_argument("--J-ref", dest="J_ref", type=int, default=16, help="Livello del riferimento")
    common.add_argument("--times", type=str, default=None,
                        help="Griglia dei tempi: dyadic:<level> o list:<csv> (default dyadic:min(J,10))")
    common.add_argument("--out", type=str, default=None, help="File di output (default stdout)")
    common.add_argument("--format", type=str, choices=["csv", "json"], default="csv", help="Formato di output")
    common.add_argument("--n-seeds", dest="n_seeds", type=int, default=20, help="Numero di repliche")
    common.add_argument("--threads", type=int, default=None, help="Numero di worker (fallback MPRE_THREADS)")
    common.add_argument("--tolerance", type=float, default=0.1, help="Tolleranza delle verifiche")
    return common


def build_parser() -> argparse.ArgumentParser:
    """Parser completo con i cinque sottocomandi."""
    common = _common_options()
    parser = _Parser(
        prog="mpre",
        description="Simulazione e verifica del processo multifrazionario con esponente casuale",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    sim = sub.add_parser("simulate", parents=[common], help="Simula una traiettoria",
                         formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sim.add_argument("--scheme", type=str, choices=SCHEMES, default="hat", help="Schema di discretizzazione")
    sim.add_argument("--emit-plot-data", dest="emit_plot_data", type=str, default=None,
                     help="CSV con terne (t, X(t), A(t)) per grafici esterni")
    sim.add_argument("--plot", type=str, default=None, help="PNG riassuntivo (A, X^J e X~J)")

    conv = sub.add_parser("convergence", parents=[common], help="Studi di convergenza",
                          formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    conv.add_argument("--study", type=str, choices=STUDIES, default="sup",
                      help="sup: un omega contro il riferimento; l1: Monte Carlo X^J - X~J; moments: Kolmogorov")
    conv.add_argument("--scheme", type=str, choices=SCHEMES, default="hat", help="Schema dello studio sup")
    conv.add_argument("--j-min", dest="j_min", type=int, default=6, help="Primo livello studiato")
    conv.add_argument("--j-max", dest="j_max", type=int, default=None, help="Ultimo livello studiato (default J)")
    conv.add_argument("--t-probe", dest="t_probe", type=float, default=0.7, help="Tempo dello studio L1")

    hold = sub.add_parser("holder", parents=[common], help="Esponente di Hoelder su finestre",
                          formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    hold.add_argument("--windows", type=str, default="0:1", help="Finestre a:b,c:d")
    hold.add_argument("--j-min", dest="j_min", type=int, default=None, help="Prima scala della regressione")
    hold.add_argument("--j-max", dest="j_max", type=int, default=None, help="Ultima scala della regressione")

    sub.add_parser("coeffs", parents=[common],
                   help=f"Prodotti <K_t, h_jk> e limite 2^(-j/2) (default dyadic:min(J,{COEFFS_TIME_LEVEL}))",
                   formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub.add_parser("selftest", parents=[common], help="Suite veloce di invarianti",
                   formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.subparsers = sub.choices
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: Sequence[str], config_file: Optional[str]) -> None:
    early = argparse.ArgumentParser(add_help=False)
    early.add_argument("--config", default=None)
    known, _ = early.parse_known_args(argv)
    path = known.config or config_file
    if not path:
        return

    values = read_config_file(path)
    known_dests = {a.dest for sub in parser.subparsers.values() for a in sub._actions}
    unknown = sorted(k for k in values if k not in known_dests)
    if unknown:
        raise ConfigError(f"Chiavi sconosciute in {path}: {unknown}")

    for sub in parser.subparsers.values():
        dests = {a.dest for a in sub._actions}
        defaults = {}
        for key, value in values.items():
            if key not in dests:
                continue
            if key in BOOLEAN_KEYS:
                defaults[key] = value.lower() in ("1", "true", "yes", "si")
            else:
                defaults[key] = value
        sub.set_defaults(**defaults)


def parse_config(argv: Optional[Sequence[str]] = None, config_file: Optional[str] = None) -> RunConfig:
    """
    Converte gli argomenti in una RunConfig validata.

    I valori del file di configurazione fanno da default e vengono superati
    dai flag espliciti.

    Raises
    ------
    ConfigError
        Per flag sconosciuti, esponenti fuori da (1/2, 1), J_ref troppo
        vicino a J o output non scrivibile

    Examples
    --------
    >>> parse_config(["simulate", "--scheme", "hat", "--J", "10", "--seed", "7",
    ...               "--exponent", "rl:0.9:0.55:0.95"]).J
    10
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    _apply_config_file(parser, argv, config_file)
    args = parser.parse_args(argv)
    if args.command is None:
        raise ConfigError(f"Serve un sottocomando: {', '.join(COMMANDS)}")

    try:
        ExponentSpec.parse(args.exponent)
    except ConfigError:
        raise
    except MPREError as e:
        raise ConfigError(str(e))

    if not 0 <= args.J <= MAX_LEVEL:
        raise ConfigError(f"J deve stare in [0, {MAX_LEVEL}], ricevuto: {args.J}")
    if args.J_ref > REFERENCE_MAX_LEVEL:
        raise ConfigError(f"J_ref deve essere <= {REFERENCE_MAX_LEVEL}, ricevuto: {args.J_ref}")
    if args.n_seeds < 1:
        raise ConfigError(f"n_seeds deve essere >= 1, ricevuto: {args.n_seeds}")

    study = getattr(args, "study", "sup")
    j_max = getattr(args, "j_max", None)
    top = args.J if j_max is None or args.command != "convergence" else j_max
    if args.command == "convergence" and j_max is not None and not args.j_min <= j_max <= MAX_LEVEL:
        raise ConfigError(f"Serve j_min <= j_max <= {MAX_LEVEL}, ricevuto: j_min={args.j_min}, j_max={j_max}")
    needs_reference = args.command == "convergence" and study in ("sup", "moments")
    if needs_reference and args.J_ref < top + REFERENCE_HEADROOM:
        raise ConfigError(
            f"J_ref deve superare J di almeno {REFERENCE_HEADROOM}, ricevuto: J={top}, J_ref={args.J_ref}"
        )

    if args.times is not None:
        parse_times(args.times)
    for target in (args.out, getattr(args, "emit_plot_data", None), getattr(args, "plot", None)):
        if target is None:
            continue
        folder = Path(target).resolve().parent
        if not folder.is_dir():
            raise ConfigError(f"Cartella di output inesistente per {target}")
        if not os.access(folder, os.W_OK):
            raise ConfigError(f"Cartella di output non scrivibile per {target}")

    windows = parse_windows(args.windows) if hasattr(args, "windows") else [(0.0, 1.0)]
    j_min = args.j_min if getattr(args, "j_min", None) is not None else (6 if args.command == "convergence" else None)

    return RunConfig(
        command=args.command,
        scheme=getattr(args, "scheme", "hat"),
        J=args.J,
        J_ref=args.J_ref,
        seed=args.seed,
        master_seed=args.master_seed,
        exponent=args.exponent,
        times=args.times,
        out=args.out,
        format=args.format,
        n_seeds=args.n_seeds,
        windows=windows,
        j_min=j_min,
        j_max=getattr(args, "j_max", None),
        t_probe=getattr(args, "t_probe", 0.7),
        threads=resolve_threads(args.threads),
        study=study,
        tolerance=args.tolerance,
        emit_plot_data=getattr(args, "emit_plot_data", None),
        plot=getattr(args, "plot", None),
        verbose=args.verbose,
    )


def _emit(config: RunConfig, frame: pd.DataFrame, payload: Optional[Dict] = None) -> None:
    """Scrive la tabella (CSV con intestazione #) o il dizionario JSON su file o stdout."""
    meta = config.metadata()
    if config.format == "json":
        body = {"config": meta, "data": payload if payload is not None else frame.to_dict(orient="list")}
        text = json.dumps(body, sort_keys=True, indent=2, default=float) + "\n"
    else:
        header = "".join(f"# {key}={meta[key]}\n" for key in sorted(meta))
        text = header + frame.to_csv(index=False, lineterminator="\n")

    if config.out is None:
        sys.stdout.write(text)
    else:
        Path(config.out).write_text(text)
        print(f"Output salvato in: {config.out}", file=sys.stderr)


def _run_simulate(config: RunConfig) -> int:
    spec = ExponentSpec.parse(config.exponent)
    times = parse_times(config.time_spec)
    print(f"Simulazione {config.scheme} J={config.J}, seed {config.seed}, esponente {spec.text}...", file=sys.stderr)

    path = sample_brownian(config.seed, config.J)
    A = spec.build(path)
    ctx = KernelContext(A, QuadraturePolicy(abs_tol=SIMULATION_ABS_TOL))
    series = simulate(config.scheme, path, A, times, ctx=ctx, threads=config.threads)
    _emit(config, series.to_frame())

    if config.emit_plot_data:
        plot_data = pd.DataFrame({"t": series.times, "X": series.values, "A": A.eval(series.times)})
        plot_data.to_csv(config.emit_plot_data, index=False, lineterminator="\n")
        print(f"Dati per il grafico salvati in: {config.emit_plot_data}", file=sys.stderr)

    if config.plot:
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
        from mpre.plot import plot_overview

        hat = series if config.scheme == "hat" else simulate("hat", path, A, times, threads=config.threads)
        tilde = series if config.scheme == "tilde" else simulate("tilde", path, A, times, threads=config.threads)
        fig = plot_overview(A, hat, tilde)
        fig.savefig(config.plot, dpi=150, bbox_inches="tight")
        plt.close(fig)
        print(f"Grafico salvato in: {config.plot}", file=sys.stderr)
    return EXIT_OK


def _run_convergence(config: RunConfig) -> int:
    spec = ExponentSpec.parse(config.exponent)
    levels = list(range(config.j_min, config.top_level + 1))
    print(f"Studio {config.study} su {spec.text}, livelli {levels[0] if levels else '-'}..{config.top_level}...",
          file=sys.stderr)

    if config.study == "moments":
        report = kolmogorov_moment_check(
            spec, n_seeds=config.n_seeds, master_seed=config.master_seed,
            J_ref=config.J_ref, threads=config.threads,
        )
        frame = pd.DataFrame({
            "t1": [p[0] for p in report.pairs],
            "t2": [p[1] for p in report.pairs],
            "mean_square": report.mean_squares,
        })
    else:
        if config.study == "sup":
            report = single_path_convergence(
                config.seed, spec, levels, config.J_ref,
                times=parse_times(config.time_spec),
                scheme=config.scheme, slack=config.tolerance, threads=config.threads,
            )
        else:
            report = l1_rate_study(
                spec, levels, t_probe=config.t_probe, n_seeds=config.n_seeds,
                master_seed=config.master_seed, slack=config.tolerance,
            )
        frame = pd.DataFrame({"J": report.levels, "error": report.errors})

    print(report.to_text(), file=sys.stderr)
    _emit(config, frame, report.to_dict())
    return EXIT_OK if report.passed else EXIT_NUMERIC


def _run_holder(config: RunConfig) -> int:
    spec = ExponentSpec.parse(config.exponent)
    times = dyadic_times(config.J)
    j_range = None
    if config.j_min is not None or config.j_max is not None:
        j_min = config.j_min if config.j_min is not None else 1
        j_max = config.j_max if config.j_max is not None else config.J - 2
        j_range = range(j_min, j_max + 1)
    print(f"Stima di Hoelder su {config.n_seeds} traiettorie, J={config.J}...", file=sys.stderr)

    rows = []
    for seed in replicate_seeds(config.master_seed, config.n_seeds):
        path = sample_brownian(seed, config.J)
        A = spec.build(path)
        series = simulate("hat", path, A, times, threads=config.threads)
        if A.gamma > 0.5:
            reports = check_regularity_lowerbound(series, A, config.windows, j_range, config.tolerance).windows
        else:
            reports = [estimate_uniform_holder(series, w, j_range) for w in config.windows]
        for r in reports:
            rows.append({
                "seed": seed, "nu1": r.window[0], "nu2": r.window[1], "estimate": r.estimate,
                "min_A": r.min_A, "gap": r.gap, "degenerate": r.degenerate,
            })

    frame = pd.DataFrame(rows)
    summary = frame.groupby(["nu1", "nu2"])[["estimate", "min_A", "gap"]].mean()
    print(summary.to_string(float_format=lambda v: f"{v:.4f}"), file=sys.stderr)
    _emit(config, frame)

    gaps = frame["gap"].dropna()
    passed = bool((gaps >= -config.tolerance).mean() >= 0.95) if len(gaps) else True
    return EXIT_OK if passed else EXIT_NUMERIC


def _run_coeffs(config: RunConfig) -> int:
    spec = ExponentSpec.parse(config.exponent)
    times = parse_times(config.time_spec)
    path = sample_brownian(config.seed, config.J)
    A = spec.build(path)
    ctx = KernelContext(A, QuadraturePolicy(abs_tol=SIMULATION_ABS_TOL))
    print(f"Prodotti <K_t, h_jk> per {len(times)} tempi, J={config.J}, esponente {spec.text}...", file=sys.stderr)

    frames = []
    for t in times:
        _, rows = haar_inner_product_rows(ctx, float(t), config.J)
        for j, row in enumerate(rows):
            frames.append(pd.DataFrame({
                "j": j, "k": np.arange(len(row)), "t": float(t),
                "inner_product": row, BOUND_COLUMN: 2.0 ** (-0.5 * j),
            }))
    columns = ["j", "k", "t", "inner_product", BOUND_COLUMN]
    frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=columns)

    violations = int((frame["inner_product"].abs() > frame[BOUND_COLUMN]).sum())
    print(f"Violazioni di |<K_t, h_jk>| <= 2^(-j/2): {violations} su {len(frame)}", file=sys.stderr)
    if path.level >= 1:
        coeffs = haar_coefficients(path)
        print(f"eta0 = {coeffs.eta0:.6f}", file=sys.stderr)
        if coeffs.depth >= 4:
            print(f"max |eps_jk| / sqrt(j+1) = {coefficient_growth_check(coeffs):.4f}", file=sys.stderr)
    if path.level >= 10:
        print(f"Rapporto di Levy = {levy_modulus_ratio(path):.4f}", file=sys.stderr)
    _emit(config, frame)
    return EXIT_OK if violations == 0 else EXIT_NUMERIC


def _run_selftest(config: RunConfig) -> int:
    results = run_selftest(config.master_seed)
    print(format_results(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


RUNNERS = {
    "simulate": _run_simulate,
    "convergence": _run_convergence,
    "holder": _run_holder,
    "coeffs": _run_coeffs,
    "selftest": _run_selftest,
}


def run(config: RunConfig) -> int:
    """
    Esegue il sottocomando richiesto e restituisce il codice di uscita.

    1 = uso errato, 2 = errore o verifica numerica fallita, 3 = I/O.
    """
    logger.debug("Configurazione: %s", config.metadata())
    try:
        return RUNNERS[config.command](config)
    except MPREError as e:
        print(f"Errore: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"Errore di I/O: {e}", file=sys.stderr)
        return EXIT_IO


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point principale per la CLI."""
    try:
        config = parse_config(argv)
    except MPREError as e:
        print(f"Errore: {e}", file=sys.stderr)
        return EXIT_USAGE

    if config.verbose:
        logging.basicConfig(
            level=logging.DEBUG,
            format="%(asctime)s %(name)s %(levelname)s %(message)s",
        )
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
