"""Command-line frontend: synth, loess-band, plrm, pqrm, and compare.

Exit codes: 0 success, 2 input error, 3 fit failure, 4 partial result (some
tau levels failed).  On failure an ``error.json`` record is written and any
partial outputs are moved to ``<out>/quarantine/``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .area import AreaConfig, AreaError, MethodIntervals, compare_methods, compute_area
from .bands import BandConfig, BootstrapError, bootstrap_bands
from .dataset import (
    BivariateDataset,
    DataError,
    TransformSpec,
    dataset_to_json,
    load_dataset,
    summarize,
    write_dataset_csv,
)
from .loess import LoessConfig, LoessError, fit_loess, loess_fitter
from .piecewise import (
    SegmentedError,
    SegmentedModel,
    breakpoint_intervals,
    eval_segmented,
    fit_report_rows,
    fit_segmented,
    plrm_prediction_band,
)
from .quantile import (
    DEFAULT_TAU_GRID,
    QuantileError,
    fit_segmented_quantile,
    fit_tau_grid,
    pqrm_prediction_band,
    quantile_breakpoint_intervals,
)
from .report import (
    write_band_csv,
    write_comparison_csv,
    write_geometry_csv,
    write_json,
    write_svg_figure,
    write_tau_table_csv,
)
from .rng import RngSpec
from .synthetic import GaussianNoise, SyntheticError, SyntheticSpec, WedgeNoise, generate

_FIT_ERRORS = (LoessError, SegmentedError, QuantileError, BootstrapError, SyntheticError, AreaError)


class _Outputs:
    """Tracks written files so failures can quarantine partial results."""

    def __init__(self, out_dir: str):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.dir / name
        self.files.append(p)
        return p

    def quarantine(self) -> None:
        existing = [p for p in self.files if p.exists()]
        if not existing:
            return
        qdir = self.dir / "quarantine"
        qdir.mkdir(exist_ok=True)
        for p in existing:
            p.rename(qdir / p.name)


def _error_record(out: _Outputs, code: int, kind: str, exc: Exception) -> None:
    write_json(
        out.dir / "error.json",
        {"exit_code": code, "kind": kind, "error_type": type(exc).__name__, "message": str(exc)},
    )


def _parse_floats(text: str, count: int | None = None, what: str = "value") -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise DataError(f"non-numeric {what} in {text!r}") from exc
    if count is not None and len(values) != count:
        raise DataError(f"expected {count} comma-separated {what}s, got {text!r}")
    return values


def _parse_noise(text: str):
    if text.startswith("gaussian:"):
        (sigma,) = _parse_floats(text[len("gaussian:"):], 1, "sigma")
        return GaussianNoise(sigma)
    if text.startswith("wedge:"):
        sigma0, growth = _parse_floats(text[len("wedge:"):], 2, "wedge parameter")
        return WedgeNoise(sigma0, growth)
    raise DataError(f"cannot parse noise spec {text!r} (use gaussian:s or wedge:s0,c)")


def _formats(args) -> set[str]:
    wanted = set((args.format or "json,csv,svg").split(","))
    unknown = wanted - {"json", "csv", "svg"}
    if unknown:
        raise DataError(f"unknown output format(s): {sorted(unknown)}")
    return wanted


def _load(args) -> BivariateDataset:
    return load_dataset(
        args.input,
        x_column=args.x,
        y_column=args.y,
        label_column=args.label,
        x_transform=TransformSpec.parse(args.x_transform),
        y_transform=TransformSpec.parse(args.y_transform),
    )


def _gammas(args) -> list[float]:
    if args.gamma is not None:
        return [args.gamma]
    return [0.80, 0.95]


def _band_name(gamma: float) -> str:
    return f"band_gamma{int(round(gamma * 100)):03d}"


def _emit_band(out: _Outputs, name: str, band, formats) -> None:
    if "csv" in formats:
        write_band_csv(out.path(f"{name}.csv"), band)


def _emit_figure(out: _Outputs, name: str, ds, bands, formats, curves=None, ticks=None, title="") -> None:
    if "svg" not in formats:
        return
    write_svg_figure(out.path(f"{name}.svg"), ds, bands, curves=curves, breakpoint_ticks=ticks, title=title)
    elements = []
    for band in bands:
        elements.append(("center", band.method or "center", band.grid_x, band.center))
        elements.append(("lower", f"{band.method} gamma={band.gamma:g}", band.grid_x, band.lower))
        elements.append(("upper", f"{band.method} gamma={band.gamma:g}", band.grid_x, band.upper))
    for label, xs, ys in curves or []:
        elements.append(("curve", label, xs, ys))
    write_geometry_csv(out.path(f"{name}_geometry.csv"), ds, elements)


def _summary_rows(ds) -> list[dict]:
    try:
        return [row.__dict__ for row in summarize(ds)]
    except DataError:
        return []


def cmd_synth(args, out: _Outputs) -> int:
    beta = _parse_floats(args.truth_beta, 4, "beta")
    alpha = _parse_floats(args.truth_alpha, 2, "alpha")
    x_lo, x_hi = _parse_floats(args.x_range, 2, "x-range bound")
    spec = SyntheticSpec(
        model=SegmentedModel(beta=tuple(beta), alpha=tuple(alpha)),
        n=args.n,
        noise=_parse_noise(args.noise),
        rng=RngSpec(args.seed),
        x_min=x_lo,
        x_max=x_hi,
    )
    ds = generate(spec)
    ds = BivariateDataset.from_arrays(ds.xs, ds.ys, x_name=args.x_name, y_name=args.y_name)
    formats = _formats(args)
    write_dataset_csv(out.path("dataset.csv"), ds)
    if "json" in formats:
        out.path("dataset.json").write_text(dataset_to_json(ds), encoding="utf-8")
        write_json(
            out.path("synth_config.json"),
            {
                "beta": beta,
                "alpha": alpha,
                "n": args.n,
                "noise": args.noise,
                "seed": args.seed,
                "x_range": [x_lo, x_hi],
            },
        )
    return 0


def cmd_loess_band(args, out: _Outputs) -> int:
    ds = _load(args)
    formats = _formats(args)
    config = LoessConfig(span=args.span, degree=args.degree, robust_iterations=args.robust_iters)
    fit = fit_loess(ds, config)
    gammas = _gammas(args)
    band_config = BandConfig(B=args.bootstrap, gamma=max(gammas), rng=RngSpec(args.seed))
    bands = bootstrap_bands(ds, loess_fitter(config), band_config, gammas, method="BL")
    area_config = AreaConfig(grid_cells=args.grid_cells)
    for band in bands:
        compute_area(band, area_config)
        _emit_band(out, _band_name(band.gamma), band, formats)
    if "json" in formats:
        write_json(
            out.path("summary.json"),
            {
                "method": "BL",
                "loess": {"span": args.span, "degree": args.degree, "robust_iterations": args.robust_iters},
                "bootstrap": {"B": args.bootstrap, "seed": args.seed},
                "areas": {f"{b.gamma:g}": b.area for b in bands},
                "dataset_summary": _summary_rows(ds),
            },
        )
    _emit_figure(out, "figure_loess_band", ds, bands, formats, title="loess with bootstrap prediction bands")
    return 0


def cmd_plrm(args, out: _Outputs) -> int:
    ds = _load(args)
    formats = _formats(args)
    fit = fit_segmented(ds, min_segment_points=args.min_seg_points)
    if "json" in formats:
        write_json(
            out.path("fit_report.json"),
            {
                "method": "PLRM",
                "rows": fit_report_rows(fit),
                "rss": fit.rss,
                "df": fit.df,
                "sigma2": fit.sigma2,
                "grid_fallback": fit.grid_fallback,
                "unidentified": list(fit.unidentified),
            },
        )
    gammas = _gammas(args)
    bands = []
    for gamma in gammas:
        band = plrm_prediction_band(
            fit,
            ds,
            gamma,
            bootstrap_config=BandConfig(B=args.bootstrap, gamma=gamma, rng=RngSpec(args.seed)),
            force_bootstrap=(args.band_method == "bootstrap"),
        )
        compute_area(band, AreaConfig(grid_cells=args.grid_cells))
        bands.append(band)
        _emit_band(out, _band_name(gamma), band, formats)
    ticks = list(breakpoint_intervals(fit, 0.95).values())
    _emit_figure(
        out,
        "figure_plrm",
        ds,
        bands,
        formats,
        ticks=ticks,
        title="piecewise linear fit with prediction bands",
    )
    if "json" in formats:
        write_json(
            out.path("summary.json"),
            {
                "method": "PLRM",
                "alpha": list(fit.model.alpha),
                "beta": list(fit.model.beta),
                "areas": {f"{b.gamma:g}": b.area for b in bands},
                "breakpoint_ci95": {k: list(v) for k, v in breakpoint_intervals(fit, 0.95).items()},
            },
        )
    return 0


def _pqrm_pieces(ds, taus, gamma, min_seg_points):
    """Shared by pqrm and compare: grid fits, interval table, band, failures."""
    ls_fit = fit_segmented(ds, min_segment_points=min_seg_points)
    fits, failures = fit_tau_grid(ds, taus, init=ls_fit.model, min_segment_points=min_seg_points)
    if len(fits) < 2:
        raise QuantileError(f"too few successful tau fits ({len(fits)}) to build intervals")
    table = quantile_breakpoint_intervals(fits, failed_taus=[t for t, _ in failures])
    by_tau = {round(f.tau, 10): f for f in fits}
    band = None
    t_lo, t_hi = round((1.0 - gamma) / 2.0, 10), round((1.0 + gamma) / 2.0, 10)
    needed = {t_lo, 0.5, t_hi}
    extra_failures = list(failures)
    for t in sorted(needed - set(by_tau)):
        try:
            by_tau[t] = fit_segmented_quantile(ds, t, init=ls_fit.model, min_segment_points=min_seg_points)
        except (QuantileError, SegmentedError) as exc:
            extra_failures.append((t, str(exc)))
    if needed <= set(by_tau):
        band = pqrm_prediction_band(by_tau[t_lo], by_tau[0.5], by_tau[t_hi], ds)
    return ls_fit, fits, table, band, extra_failures


def cmd_pqrm(args, out: _Outputs) -> int:
    ds = _load(args)
    formats = _formats(args)
    taus = _parse_floats(args.tau_grid, None, "tau") if args.tau_grid else list(DEFAULT_TAU_GRID)
    gamma = args.gamma if args.gamma is not None else 0.80
    _, fits, table, band, failures = _pqrm_pieces(ds, taus, gamma, args.min_seg_points)
    if "csv" in formats:
        write_tau_table_csv(out.path("tau_table.csv"), table)
    if "json" in formats:
        write_json(
            out.path("intervals.json"),
            {
                "method": "PQRM",
                "coverage": table.coverage_label,
                "alpha1": list(table.alpha1_interval),
                "alpha2": list(table.alpha2_interval),
                "rows": [{"tau": t, "alpha1": a1, "alpha2": a2} for t, a1, a2 in table.rows],
                "partial": table.partial,
                "failed_taus": list(table.failed_taus),
            },
        )
    bands = []
    if band is not None:
        compute_area(band, AreaConfig(grid_cells=args.grid_cells))
        bands = [band]
        _emit_band(out, _band_name(gamma), band, formats)
    curves = [
        (f"tau={fit.tau:g}", ds.xs, eval_segmented(fit.model, ds.xs))
        for fit in fits
        if round(fit.tau, 10) in {round((1 - gamma) / 2, 10), 0.5, round((1 + gamma) / 2, 10)}
    ]
    _emit_figure(out, "figure_pqrm", ds, bands, formats, curves=curves, title="piecewise quantile fits")
    if "json" in formats:
        write_json(
            out.path("summary.json"),
            {
                "method": "PQRM",
                "tau_grid": [float(t) for t in taus],
                "coverage": table.coverage_label,
                "band_area": None if band is None else band.area,
                "partial": bool(failures),
            },
        )
    return 4 if failures else 0


def cmd_compare(args, out: _Outputs) -> int:
    ds = _load(args)
    formats = _formats(args)
    gamma = args.gamma if args.gamma is not None else 0.80
    taus = _parse_floats(args.tau_grid, None, "tau") if args.tau_grid else list(DEFAULT_TAU_GRID)
    area_config = AreaConfig(grid_cells=args.grid_cells)

    loess_config = LoessConfig(span=args.span, degree=args.degree, robust_iterations=args.robust_iters)
    fit_loess(ds, loess_config)  # surfaces loess config errors before the slow part
    (bl_band,) = bootstrap_bands(
        ds,
        loess_fitter(loess_config),
        BandConfig(B=args.bootstrap, gamma=gamma, rng=RngSpec(args.seed)),
        [gamma],
        method="BL",
    )

    ls_fit, _, table, pq_band, failures = _pqrm_pieces(ds, taus, gamma, args.min_seg_points)
    pl_band = plrm_prediction_band(
        ds=ds,
        fit=ls_fit,
        gamma=gamma,
        bootstrap_config=BandConfig(B=args.bootstrap, gamma=gamma, rng=RngSpec(args.seed)),
    )
    if pq_band is None:
        raise QuantileError("quantile band fits failed; cannot compare methods")

    level = float(table.coverage_label.rstrip("%")) / 100.0
    pl_iv = breakpoint_intervals(ls_fit, level)
    intervals = [
        MethodIntervals("PLRM", table.coverage_label, pl_iv["alpha1"], pl_iv["alpha2"]),
        MethodIntervals("PQRM", table.coverage_label, table.alpha1_interval, table.alpha2_interval),
    ]
    report = compare_methods(
        {"BL": bl_band, "PLRM": pl_band, "PQRM": pq_band}, intervals, area_config
    )

    if "json" in formats:
        write_json(out.path("comparison.json"), report.to_jsonable())
        write_json(
            out.path("plrm_fit_report.json"),
            {"method": "PLRM", "rows": fit_report_rows(ls_fit)},
        )
    if "csv" in formats:
        write_comparison_csv(out.path("comparison.csv"), report)
        write_tau_table_csv(out.path("tau_table.csv"), table)
        for name, band in (("BL", bl_band), ("PLRM", pl_band), ("PQRM", pq_band)):
            write_band_csv(out.path(f"{name.lower()}_{_band_name(gamma)}.csv"), band)
    _emit_figure(out, "figure_bl", ds, [bl_band], formats, title="bootstrapped loess band")
    _emit_figure(
        out,
        "figure_plrm",
        ds,
        [pl_band],
        formats,
        ticks=list(breakpoint_intervals(ls_fit, 0.95).values()),
        title="piecewise linear band",
    )
    _emit_figure(out, "figure_pqrm", ds, [pq_band], formats, title="piecewise quantile band")
    return 4 if failures else 0


def _add_dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="CSV file with a header row")
    p.add_argument("--x", required=True, help="predictor column name")
    p.add_argument("--y", required=True, help="response column name")
    p.add_argument("--label", default=None, help="optional group label column")
    p.add_argument("--x-transform", default="identity", help="identity | log10 | affine:a,b")
    p.add_argument("--y-transform", default="identity", help="identity | log10 | affine:a,b")


def _add_common_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", default=None, help="comma list from json,csv,svg (default all)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-cells", type=int, default=10_000, help="cells for band-area grids")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="breakline",
        description="Breakpoint estimation and prediction bands for bivariate stress-response data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic data from a known piecewise truth")
    p.add_argument("--truth-beta", default="10,0,-5,5", help="b0,b1,b2,b3")
    p.add_argument("--truth-alpha", default="0.3,0.6", help="a1,a2")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--x-range", default="0,1")
    p.add_argument("--noise", default="gaussian:0.5", help="gaussian:sigma | wedge:sigma0,c")
    p.add_argument("--x-name", default="x")
    p.add_argument("--y-name", default="y")
    _add_common_args(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("loess-band", help="loess fit with bootstrap prediction bands")
    _add_dataset_args(p)
    p.add_argument("--span", type=float, default=0.75)
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--robust-iters", type=int, default=4)
    p.add_argument("--bootstrap", type=int, default=10_000, metavar="B")
    p.add_argument("--gamma", type=float, default=None, help="default: both 0.80 and 0.95")
    _add_common_args(p)
    p.set_defaults(func=cmd_loess_band)

    p = sub.add_parser("plrm", help="two-breakpoint piecewise linear regression")
    _add_dataset_args(p)
    p.add_argument("--min-seg-points", type=int, default=3)
    p.add_argument("--gamma", type=float, default=None, help="default: both 0.80 and 0.95")
    p.add_argument("--band-method", choices=["parametric", "bootstrap"], default="parametric")
    p.add_argument("--bootstrap", type=int, default=10_000, metavar="B")
    _add_common_args(p)
    p.set_defaults(func=cmd_plrm)

    p = sub.add_parser("pqrm", help="two-breakpoint piecewise linear quantile regression")
    _add_dataset_args(p)
    p.add_argument("--min-seg-points", type=int, default=3)
    p.add_argument("--tau-grid", default=None, help="comma list, default 0.1,...,0.9")
    p.add_argument("--gamma", type=float, default=None, help="band coefficient, default 0.80")
    _add_common_args(p)
    p.set_defaults(func=cmd_pqrm)

    p = sub.add_parser("compare", help="run all three methods and compare widths and areas")
    _add_dataset_args(p)
    p.add_argument("--span", type=float, default=0.75)
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--robust-iters", type=int, default=4)
    p.add_argument("--bootstrap", type=int, default=10_000, metavar="B")
    p.add_argument("--min-seg-points", type=int, default=3)
    p.add_argument("--tau-grid", default=None, help="comma list, default 0.1,...,0.9")
    p.add_argument("--gamma", type=float, default=None, help="default 0.80")
    _add_common_args(p)
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = _Outputs(args.out)
    try:
        return args.func(args, out)
    except DataError as exc:
        out.quarantine()
        _error_record(out, 2, "input", exc)
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except _FIT_ERRORS as exc:
        out.quarantine()
        _error_record(out, 3, "fit", exc)
        print(f"fit error: {exc}", file=sys.stderr)
        return 3
    except np.linalg.LinAlgError as exc:
        out.quarantine()
        _error_record(out, 3, "fit", exc)
        print(f"fit error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
