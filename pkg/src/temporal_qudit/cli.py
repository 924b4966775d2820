"""``temporal-qudit`` command line: sweep runners that emit result tables.

Exit status is 0 on success, 2 when the configuration is invalid and 3 when
the requested bandwidths cannot be resolved on the simulation grid.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .detection import FilterShape, detection_matrix
from .errors import GridResolutionError
from .modulation import EXAMPLE_BASIS_4, SuperpositionBasis, gram_schmidt, ramp_symbols, superposition_symbols
from .output import ResultTable, base_metadata
from .signal import PulseShape, make_grid
from .sweeps import Setup, ers_vs_dimension_sweep, filter_bandwidth_sweep, loss_sweep, parallel_map

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GRID = 3

# Filter-to-photon bandwidth ratios used by mi-sweep when none are configured.
DEFAULT_MI_FILTER_RATIOS = [round(0.5 + 0.1 * i, 10) for i in range(56)]


def setup_from_config(cfg: ExperimentConfig) -> Setup:
    pulse = PulseShape(cfg.pulse.shape, cfg.pulse.coherence_time)
    ratios = cfg.eom_ratios(pulse.bandwidth)
    n_ref = cfg.grid.n_ref if cfg.grid.n_ref is not None else max([100.0, *ratios])
    return Setup(
        pulse=pulse,
        oversample=cfg.grid.oversample,
        span_factor=cfg.grid.span_factor,
        n_ref=n_ref,
        filter_shape=FilterShape(cfg.filter.shape),
        loop_amplitude=cfg.channel.loop_amplitude,
    )


def run_metadata(cfg: ExperimentConfig, subcommand: str) -> dict[str, Any]:
    setup = setup_from_config(cfg)
    grid = make_grid(setup.pulse.coherence_time, setup.oversample, setup.span_factor, n_ref=setup.n_ref)
    extra = {
        "pulse_shape": setup.pulse.kind.value,
        "filter_shape": setup.filter_shape.value,
        "photon_bandwidth_hz": setup.photon_bandwidth,
        "grid_dt_s": grid.dt,
        "grid_samples": grid.n_samples,
        "grid_n_ref": setup.n_ref,
    }
    return base_metadata(subcommand, cfg.canonical_json(), cfg.digest(), extra)


def _single(values: Sequence[Any], field: str, what: str) -> Any:
    if len(values) != 1:
        raise ConfigError(f"{field}: {what} takes exactly one value, got {len(values)}")
    return values[0]


def _require_scheme(cfg: ExperimentConfig, scheme: str, subcommand: str) -> None:
    if cfg.scheme != scheme:
        raise ConfigError(f"scheme: {subcommand} requires scheme '{scheme}', got '{cfg.scheme}'")


def run_pfm_ers(cfg: ExperimentConfig, jobs: int = 1) -> ResultTable:
    _require_scheme(cfg, "pfm", "pfm-ers")
    setup = setup_from_config(cfg)
    bw = setup.photon_bandwidth
    filter_ratio = _single(cfg.filter_ratios(bw, [1.0]), "filter", "pfm-ers")
    dims = cfg.dimension_values
    for n in cfg.walsh_n:
        if dims and max(dims) > n:
            raise ConfigError(f"dimensions: d = {max(dims)} exceeds Walsh order {n}")
    pts = ers_vs_dimension_sweep(
        "pfm", dims, cfg.eom_ratios(bw), walsh_orders=cfg.walsh_n,
        filter_ratio=filter_ratio, setup=setup, jobs=jobs,
    )
    rows = [(p.walsh_n, p.d, p.eom_ratio, p.ers, p.mean_efficiency) for p in pts]
    return ResultTable(("n", "d", "N", "ERS", "mean_efficiency"), ("", "", "", "", ""), rows, run_metadata(cfg, "pfm-ers"))


def run_ramp_ers(cfg: ExperimentConfig, jobs: int = 1) -> ResultTable:
    _require_scheme(cfg, "linear_ramp", "ramp-ers")
    setup = setup_from_config(cfg)
    bw = setup.photon_bandwidth
    filter_ratio = _single(cfg.filter_ratios(bw, [1.0]), "filter", "ramp-ers")
    pts = ers_vs_dimension_sweep(
        "linear_ramp", cfg.dimension_values, cfg.eom_ratios(bw),
        filter_ratio=filter_ratio, setup=setup, jobs=jobs,
    )
    rows = [(p.d, p.eom_ratio, p.normalized_dimension, p.ers, p.mean_efficiency) for p in pts]
    return ResultTable(("d", "N", "d_prime", "ERS", "mean_efficiency"), ("", "", "", "", ""), rows, run_metadata(cfg, "ramp-ers"))


def demo_basis(cfg: ExperimentConfig, d: int) -> SuperpositionBasis:
    kind = cfg.superposition.basis
    if kind == "identity":
        return SuperpositionBasis(np.eye(d, dtype=np.complex128))
    if kind == "random":
        rng = np.random.default_rng(cfg.seed)
        return gram_schmidt(rng.standard_normal((d, d)))
    if d != EXAMPLE_BASIS_4.shape[0]:
        raise ConfigError(f"superposition.basis: the example basis is {EXAMPLE_BASIS_4.shape[0]}-dimensional, got d = {d}")
    return gram_schmidt(EXAMPLE_BASIS_4)


def run_basis_demo(cfg: ExperimentConfig, jobs: int = 1) -> tuple[ResultTable, ResultTable]:
    """Detection matrices for the ramp alphabet and for a superposition basis built on it."""
    _require_scheme(cfg, "linear_ramp", "basis-demo")
    setup = setup_from_config(cfg)
    bw = setup.photon_bandwidth
    d = _single(cfg.dimension_values, "dimensions", "basis-demo")
    ratio = _single(cfg.eom_ratios(bw), "eom", "basis-demo")
    filt = setup.filter(_single(cfg.filter_ratios(bw, [1.0]), "filter", "basis-demo"))
    base = ramp_symbols(setup.carrier(), d, setup.eom(ratio))
    sup = superposition_symbols(demo_basis(cfg, d), base)
    meta = run_metadata(cfg, "basis-demo")
    cols = ("k", *(f"p_{j}" for j in range(d)))
    units = ("",) * len(cols)
    tables = []
    for name, symbols in (("computational", base), ("superposition", sup)):
        m = detection_matrix(symbols, filt, loop_amplitude=setup.loop_amplitude).entries
        rows = [(k, *(float(x) for x in m[k])) for k in range(d)]
        tables.append(ResultTable(cols, units, rows, {**meta, "basis": name}))
    return tables[0], tables[1]


def _mi_task(args: tuple[Setup, int, float, float, float, str, tuple[float, ...]]):
    setup, d, ratio, a, b, pairing, filter_ratios = args
    return filter_bandwidth_sweep(d, ratio, a, filter_ratios, b=b, pairing=pairing, setup=setup)


def run_mi_sweep(cfg: ExperimentConfig, jobs: int = 1) -> ResultTable:
    _require_scheme(cfg, "linear_ramp", "mi-sweep")
    setup = setup_from_config(cfg)
    bw = setup.photon_bandwidth
    d = _single(cfg.dimension_values, "dimensions", "mi-sweep")
    ratio = _single(cfg.eom_ratios(bw), "eom", "mi-sweep")
    filter_ratios = tuple(cfg.filter_ratios(bw, DEFAULT_MI_FILTER_RATIOS))
    sp = cfg.superposition
    tasks = [(setup, d, ratio, a, sp.phase, sp.pairing, filter_ratios) for a in sp.amplitudes]
    rows = []
    for curve in parallel_map(_mi_task, tasks, jobs):
        peak = curve.argmax
        for i, p in enumerate(curve.points):
            rows.append((p.filter_ratio, p.amplitude, p.mi.bits_per_symbol, p.mi.erasure_probability, int(i == peak)))
    cols = ("filter_ratio", "a", "MI_bits", "erasure_prob", "argmax")
    return ResultTable(cols, ("", "", "bit", "", ""), rows, run_metadata(cfg, "mi-sweep"))


def run_loss_sweep(cfg: ExperimentConfig, jobs: int = 1) -> ResultTable:
    _require_scheme(cfg, "linear_ramp", "loss-sweep")
    setup = setup_from_config(cfg)
    bw = setup.photon_bandwidth
    ch = cfg.channel
    pts = loss_sweep(
        cfg.dimension_values, ch.losses,
        eom_ratio=_single(cfg.eom_ratios(bw), "eom", "loss-sweep"),
        filter_ratio=_single(cfg.filter_ratios(bw, [1.0]), "filter", "loss-sweep"),
        dark_rate=ch.dark_rate, gate_window=ch.gate_window, setup=setup, jobs=jobs,
    )
    rows = [(p.loss, p.d, p.ers) for p in pts]
    return ResultTable(("loss", "d", "ERS"), ("", "", ""), rows, run_metadata(cfg, "loss-sweep"))


RUNNERS: dict[str, tuple[str, Callable[..., Any]]] = {
    "pfm-ers": ("pfm", run_pfm_ers),
    "ramp-ers": ("linear_ramp", run_ramp_ers),
    "basis-demo": ("linear_ramp", run_basis_demo),
    "mi-sweep": ("linear_ramp", run_mi_sweep),
    "loss-sweep": ("linear_ramp", run_loss_sweep),
}


SUBCOMMAND_HELP = {
    "pfm-ers": "ERS of phase-flip alphabets versus dimension",
    "ramp-ers": "ERS of linear-ramp alphabets versus dimension",
    "basis-demo": "computational and superposition detection matrices",
    "mi-sweep": "mutual information versus filter bandwidth",
    "loss-sweep": "ERS versus channel loss with dark counts",
    "validate": "check a config and print the run metadata",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="temporal-qudit", description="Temporal-mode qudit encoding simulations.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in [*RUNNERS, "validate"]:
        p = sub.add_parser(name, help=SUBCOMMAND_HELP[name])
        p.add_argument("--config", type=Path, help="YAML experiment file")
        p.add_argument("--out", type=Path, help="output CSV path (default: stdout)")
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")
        p.add_argument("--pulse-shape", choices=["gaussian", "one_sided_exponential", "two_sided_exponential"])
        p.add_argument("--filter-shape", choices=["gaussian", "lorentzian", "rectangular"])
        p.add_argument("--seed", type=int, help="seed for random superposition bases")
    return parser


def resolve_config(args: argparse.Namespace, default_scheme: str | None) -> ExperimentConfig:
    overrides: dict[str, Any] = {}
    if args.pulse_shape:
        overrides["pulse.shape"] = args.pulse_shape
    if args.filter_shape:
        overrides["filter.shape"] = args.filter_shape
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.config is not None:
        return load_config(args.config, overrides)
    if default_scheme is None:
        raise ConfigError("<file>: validate needs --config")
    return parse_config({"scheme": default_scheme}, overrides)


def _emit(table: ResultTable, out: Path | None, sidecar: bool) -> None:
    if out is None:
        sys.stdout.write(table.to_csv())
    else:
        table.write(out, sidecar=sidecar)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "validate":
            cfg = resolve_config(args, None)
            meta = run_metadata(cfg, "validate")
            sys.stdout.write(ResultTable((), (), (), meta).to_csv())
            return EXIT_OK
        scheme, runner = RUNNERS[args.command]
        cfg = resolve_config(args, scheme)
        out = args.out if args.out is not None else (Path(cfg.output.path) if cfg.output.path else None)
        result = runner(cfg, jobs=args.jobs)
        if isinstance(result, tuple):
            for table in result:
                name = table.metadata["basis"]
                target = None if out is None else out.with_name(f"{out.stem}_{name}{out.suffix or '.csv'}")
                _emit(table, target, cfg.output.sidecar)
        else:
            _emit(result, out, cfg.output.sidecar)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except GridResolutionError as e:
        print(f"grid resolution error: {e}", file=sys.stderr)
        return EXIT_GRID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
