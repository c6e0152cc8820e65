import argparse
import json
import logging
import logging.config
import sys
import time
from pathlib import Path

import numpy as np

from app import config
from app.common import io, tracing
from app.common.errors import PipelineError
from app.common.svg import SvgStyle, emit_svg_scatter
from app.dependencies import get_filter_repository
from app.entrypoints.schemas import ConfigError, RunConfig, load_run_config
from app.estimate.asymptotics import (
    asymptotic_correlation,
    asymptotic_covariance,
    asymptotic_V1,
    correlation_surface,
    jacobian_phi,
)
from app.estimate.service import adjusted_estimate, increment_stat, mean_square_stat
from app.filters.service import (
    compare_reference,
    effective_support,
    fourth_moment,
    i_of_c,
)
from app.mc.diagnostics import periodogram, sample_autocovariance
from app.mc.models import MCConfig
from app.mc.normality import qq_data
from app.mc.service import run_replicates
from app.simulate.models import SeriesGrid, SeriesSpec, SimulationConfig, SimulatorKind
from app.simulate.service import (
    simulate_coefficients_exact,
    simulate_gegenbauer,
    simulate_spectral,
)
from app.spectral.models import ModelParams
from app.spectral.service import gegenbauer_to_model
from app.transform.models import CoefficientBlock, LevelScheme
from app.transform.service import (
    coefficient_grid,
    compute_M,
    filter_coefficients,
    validate_scheme,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

_DEV_FORMAT = "%(levelname)s - %(name)s - %(message)s"


def setup_logging(app_config: config.AppConfig) -> None:
    if app_config.log_config:
        with open(app_config.log_config, encoding="utf-8") as f:
            logging.config.dictConfig(json.load(f))
    else:
        logging.basicConfig(level=logging.INFO, format=_DEV_FORMAT, stream=sys.stderr)
    logging.captureWarnings(True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cyclic-memory-moments",
        description=(
            "Filtered method-of-moments estimation for cyclic long-memory processes"
        ),
    )
    commands = parser.add_subparsers(dest="command", required=True)

    def with_config(sub, out_required=True):
        sub.add_argument(
            "--config", type=Path, help="INI run configuration or a manifest.json"
        )
        sub.add_argument(
            "--out", type=Path, required=out_required, help="Output directory"
        )
        return sub

    with_config(
        commands.add_parser("simulate", help="Simulate a series or coefficient blocks")
    )

    transform = with_config(
        commands.add_parser("transform", help="Filter coefficients of a series")
    )
    transform.add_argument(
        "--series", type=Path, required=True, help="Series CSV with columns t,value"
    )

    estimate = with_config(
        commands.add_parser("estimate", help="Adjusted estimate from coefficient CSVs"),
        out_required=False,
    )
    estimate.add_argument(
        "--coefficients", type=Path, required=True, help="Directory of level CSVs"
    )
    estimate.add_argument(
        "--at-truth", action="store_true", help="Evaluate V at the [model] parameters"
    )

    with_config(
        commands.add_parser("mc", help="Monte Carlo study of S1, S2 and the estimator")
    )

    asymptotics = commands.add_parser(
        "asymptotics", help="Asymptotic variance and correlation"
    )
    asymptotics.add_argument("--filter", default="shannon")
    asymptotics.add_argument("--sigma", type=float, help="Mexican hat width")
    asymptotics.add_argument("--c", type=float, default=1.0)
    asymptotics.add_argument("--s0", type=float, default=2.0)
    asymptotics.add_argument("--alpha", type=float, default=0.25)
    asymptotics.add_argument(
        "--grid", action="store_true", help="Write the correlation surface"
    )
    asymptotics.add_argument("--grid-size", type=int, default=40)
    asymptotics.add_argument("--out", type=Path)

    filters = commands.add_parser("filters", help="Inspect the filter catalogue")
    filter_commands = filters.add_subparsers(dest="filters_command", required=True)
    info = filter_commands.add_parser("info", help="Moments and supports of one filter")
    info.add_argument("name")
    info.add_argument("--sigma", type=float)
    info.add_argument(
        "--c", type=float, help="Also report the periodized integral I(c)"
    )
    info.add_argument("--json", action="store_true", help="Print JSON instead of text")
    filter_commands.add_parser("list", help="Available filter names")

    with_config(
        commands.add_parser(
            "diagnose", help="Realization, periodogram, autocovariance, coefficients"
        )
    )
    return parser


def _filter(name: str, sigma: float | None = None):
    parameters = {} if sigma is None else {"sigma": sigma}
    return get_filter_repository().get_filter(name, **parameters)


def _level_counts(scheme: LevelScheme, j: int) -> tuple[tuple[int, int], ...]:
    M = compute_M(scheme, j).value
    return (j, scheme.m(j)), (j + 1, M), (j + 2, M)


def _model_for(run_config: RunConfig) -> ModelParams:
    if run_config.model is not None:
        return run_config.model.to_params()
    if run_config.gegenbauer is not None:
        return gegenbauer_to_model(run_config.gegenbauer.to_params())
    return run_config.require_model()


def _simulate_series(run_config: RunConfig, sim: SimulationConfig) -> SeriesGrid:
    section = run_config.simulation
    if section.simulator == SimulatorKind.GEGENBAUER_MA:
        params = run_config.require_gegenbauer()
        drawn = simulate_gegenbauer(params, section.length, sim)
        return SeriesGrid(t0=section.t0, dt=1.0, values=drawn.values)
    if section.simulator == SimulatorKind.SPECTRAL_BIN:
        model = run_config.require_model()
        grid = SeriesSpec(t0=section.t0, dt=section.dt, n=section.length)
        band = section.band if section.band is not None else 2.0 * model.s0
        return simulate_spectral(model, grid, band, section.bins, sim)
    msg = f"Simulator '{section.simulator.value}' does not produce a series"
    raise ConfigError(msg, {"simulator": section.simulator.value})


def _write_block(directory: Path, block: CoefficientBlock) -> Path:
    return io.write_csv(
        directory / f"level_{block.level}.csv",
        ("k", "b_jk", "delta"),
        zip(
            range(block.first_index, block.first_index + block.m),
            block.shifts,
            block.values,
            strict=True,
        ),
    )


def _write_series(path: Path, series: SeriesGrid) -> Path:
    rows = zip(series.times, series.values, strict=True)
    return io.write_csv(path, ("t", "value"), rows)


def _read_series(path: Path) -> SeriesGrid:
    columns = io.read_csv_columns(path, ("t", "value"))
    t = columns["t"]
    if t.size < 2:
        msg = f"{path} needs at least two samples"
        raise io.ArtifactFormatError(msg)
    steps = np.diff(t)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0) or not steps[0] > 0:
        msg = f"{path} is not sampled on a uniform increasing grid"
        raise io.ArtifactFormatError(msg)
    return SeriesGrid(t0=float(t[0]), dt=float(steps[0]), values=columns["value"])


def cmd_simulate(args, run_config: RunConfig) -> list[Path]:
    sim = SimulationConfig(
        seed=run_config.simulation.seed, truncation_N=run_config.simulation.truncation_N
    )
    if run_config.simulation.simulator != SimulatorKind.EXACT_COVARIANCE:
        series = _simulate_series(run_config, sim)
        return [_write_series(args.out / "series.csv", series)]

    model = run_config.require_model()
    filter = _filter(run_config.filter.name, run_config.filter.sigma)
    scheme = run_config.scheme.to_scheme()
    return [
        _write_block(
            args.out,
            simulate_coefficients_exact(
                model, filter, scheme.a(j), scheme.gamma(j), count, sim, level=j
            ),
        )
        for j, count in _level_counts(scheme, run_config.analysis_level)
    ]


def cmd_transform(args, run_config: RunConfig) -> list[Path]:
    series = _read_series(args.series)
    filter = _filter(run_config.filter.name, run_config.filter.sigma)
    scheme = run_config.scheme.to_scheme()
    j = run_config.analysis_level

    report = validate_scheme(scheme, filter)
    artifacts = [
        _write_block(
            args.out, filter_coefficients(series, filter, scheme, level, count)
        )
        for level, count in _level_counts(scheme, j)
    ]
    artifacts.append(io.write_json(args.out / "validation.json", report.to_dict()))
    return artifacts


def cmd_estimate(args, run_config: RunConfig) -> list[Path]:
    filter = _filter(run_config.filter.name, run_config.filter.sigma)
    scheme = run_config.scheme.to_scheme()
    j = run_config.analysis_level

    deltas = [
        io.read_csv_columns(
            args.coefficients / f"level_{level}.csv", ("delta",)
        )["delta"]
        for level in (j, j + 1, j + 2)
    ]
    M = min(deltas[1].size, deltas[2].size)
    dbar = float(np.mean(deltas[0] ** 2))
    dincr = increment_stat(
        float(np.mean(deltas[1][:M] ** 2)),
        float(np.mean(deltas[2][:M] ** 2)),
        scheme.a(j + 1),
        scheme.a(j + 2),
    )
    truth = _model_for(run_config) if args.at_truth else None
    report = adjusted_estimate(
        dbar, dincr, filter, deltas[0].size, c=scheme.c, M=M, truth=truth
    )
    if args.out is None:
        sys.stdout.write(io.to_json(report.to_dict()))
        return []
    return [io.write_json(args.out / "estimate.json", report.to_dict())]


def _qq_artifacts(directory: Path, name: str, samples, svg: bool) -> list[Path]:
    try:
        points = qq_data(samples)
    except PipelineError as err:
        logger.warning("No Q-Q data for %s: %s", name, err)
        return []
    artifacts = [
        io.write_csv(
            directory / f"qq_{name.lower()}.csv", ("theoretical", "sample"), points
        )
    ]
    if svg:
        document = emit_svg_scatter(
            points,
            SvgStyle(
                title=f"Q-Q plot of {name}",
                x_label="normal quantile",
                y_label=name,
                diagonal=True,
            ),
        )
        path = directory / f"qq_{name.lower()}.svg"
        path.write_text(document, encoding="utf-8", newline="\n")
        artifacts.append(path)
    return artifacts


def cmd_mc(args, run_config: RunConfig) -> list[Path]:
    simulation = run_config.simulation
    if simulation.simulator == SimulatorKind.GEGENBAUER_MA:
        truth = run_config.require_gegenbauer()
    else:
        truth = run_config.require_model()

    mc_config = MCConfig(
        replicates=run_config.mc.replicates,
        truth=truth,
        filter_name=run_config.filter.name,
        filter_parameters=run_config.filter.parameters,
        scheme=run_config.scheme.to_scheme(),
        level=run_config.analysis_level,
        simulator=simulation.simulator,
        seed=simulation.seed,
        truncation_N=simulation.truncation_N,
        dt=simulation.dt,
        band=simulation.band,
        bins=simulation.bins,
        workers=run_config.mc.workers,
    )
    report = run_replicates(mc_config)
    out = args.out
    svg = run_config.output.svg

    artifacts = [
        io.write_json(out / "report.json", report.to_dict()),
        io.write_csv(
            out / "s1_s2.csv",
            ("replicate", "S1", "S2"),
            zip(
                range(report.replicates),
                report.samples_S1,
                report.samples_S2,
                strict=True,
            ),
        ),
        io.write_csv(
            out / "estimates.csv",
            ("replicate", "s0_hat", "alpha_hat", "truncated"),
            (
                (r, s0, alpha, flag)
                for r, ((s0, alpha), flag) in enumerate(
                    zip(report.estimates, report.truncated, strict=True)
                )
            ),
        ),
    ]
    artifacts += _qq_artifacts(out, "S1", report.samples_S1, svg)
    artifacts += _qq_artifacts(out, "S2", report.samples_S2, svg)
    if svg:
        path = out / "s1_s2.svg"
        document = emit_svg_scatter(
            np.column_stack([report.samples_S1, report.samples_S2]),
            SvgStyle(title="(S1, S2)", x_label="S1", y_label="S2"),
        )
        path.write_text(document, encoding="utf-8", newline="\n")
        artifacts.append(path)
    logger.info(
        "Monte Carlo finished in %.2f s: "
        "var S1 %.4g (theory %.4g), var S2 %.4g (theory %.4g)",
        report.runtime,
        report.empirical_var_S1,
        report.theory_var_S1,
        report.empirical_var_S2,
        report.theory_var_S2,
    )
    args.runtime = report.runtime
    return artifacts


def cmd_asymptotics(args, run_config: RunConfig) -> list[Path]:
    filter = _filter(args.filter, args.sigma)
    model = ModelParams(s0=args.s0, alpha=args.alpha)
    V = asymptotic_covariance(args.s0, args.alpha, filter, args.c)
    result = {
        "filter": filter.name,
        "c": args.c,
        "s0": args.s0,
        "alpha": args.alpha,
        "L0": filter.L0,
        "L2": filter.L2,
        "V1": asymptotic_V1(model, filter, args.c),
        "V": [float(v) for v in V.ravel()],
        "rho": asymptotic_correlation(args.s0, args.alpha, filter, args.c),
        "jacobian_det": float(np.linalg.det(jacobian_phi(args.s0, args.alpha))),
    }
    if args.out is None:
        if args.grid:
            msg = "--grid needs --out"
            raise ConfigError(msg, {"argument": "--out"})
        sys.stdout.write(io.to_json(result))
        return []

    artifacts = [io.write_json(args.out / "asymptotics.json", result)]
    if args.grid:
        s0_grid = np.linspace(1.05, 5.0, args.grid_size)
        alpha_grid = np.linspace(0.02, 0.48, args.grid_size)
        surface = correlation_surface(filter, args.c, s0_grid, alpha_grid)
        rows = (
            (s0, alpha, surface[i, k])
            for i, s0 in enumerate(s0_grid)
            for k, alpha in enumerate(alpha_grid)
        )
        artifacts.append(
            io.write_csv(
                args.out / "correlation_surface.csv", ("s0", "alpha", "rho"), rows
            )
        )
    return artifacts


def _time_form(filter) -> str:
    if not filter.has_time_form:
        return "none"
    return "approximate" if filter.time_form_approximate else "exact"


def cmd_filters(args, run_config: RunConfig) -> list[Path]:
    if args.filters_command == "list":
        for name in get_filter_repository().available_filters():
            print(name)
        return []

    filter = _filter(args.name, args.sigma)
    tol = config.get_config().filters.support_tol
    B_eff, A_eff = effective_support(filter, tol)
    info = {
        "filter": filter.name,
        "parameters": filter.parameters,
        "support": [filter.support_lo, filter.support_hi],
        "effective_support": [B_eff, A_eff],
        "support_tol": tol,
        "L0": filter.L0,
        "L2": filter.L2,
        "fourth_moment": fourth_moment(filter),
        "time_form": _time_form(filter),
        "reference": [
            {
                "quantity": comparison.quantity,
                "computed": comparison.computed,
                "reference": comparison.reference,
                "relative_difference": comparison.relative_difference,
                "consistent": comparison.consistent,
            }
            for comparison in compare_reference(filter)
        ],
    }
    if args.c is not None:
        info["c"] = args.c
        info["I_c"] = i_of_c(filter, args.c)

    if args.json:
        sys.stdout.write(io.to_json(info))
        return []

    fmt = io.format_value
    lines = [
        f"filter: {filter.name}",
        f"support: [{fmt(filter.support_lo)}, {fmt(filter.support_hi)}]",
        f"effective support at {tol:g}: [{fmt(B_eff)}, {fmt(A_eff)}]",
        f"L0 = {fmt(filter.L0)}",
        f"L2 = {fmt(filter.L2)}",
        f"fourth moment = {fmt(info['fourth_moment'])}",
        f"time form: {info['time_form']}",
    ]
    if args.c is not None:
        lines.append(f"I({fmt(args.c)}) = {fmt(info['I_c'])}")
    for entry in info["reference"]:
        status = "consistent" if entry["consistent"] else "DIFFERS"
        lines.append(
            f"reference {entry['quantity']} = {fmt(entry['reference'])} "
            f"({status}, relative difference {entry['relative_difference']:.3g})"
        )
    print("\n".join(lines))
    return []


def cmd_diagnose(args, run_config: RunConfig) -> list[Path]:
    sim = SimulationConfig(
        seed=run_config.simulation.seed, truncation_N=run_config.simulation.truncation_N
    )
    series = _simulate_series(run_config, sim)
    out = args.out
    maxlag = min(run_config.output.maxlag, series.n - 1)

    spectrum = periodogram(series)
    autocovariance = sample_autocovariance(series, maxlag)
    filter = _filter(run_config.filter.name, run_config.filter.sigma)
    scheme = run_config.scheme.to_scheme()
    blocks = coefficient_grid(
        series, filter, scheme, scheme.levels, run_config.output.grid_count
    )

    artifacts = [
        _write_series(out / "realization.csv", series),
        io.write_csv(out / "periodogram.csv", ("frequency", "power"), spectrum),
        io.write_csv(
            out / "autocovariance.csv",
            ("lag", "autocovariance"),
            zip(range(maxlag + 1), autocovariance, strict=True),
        ),
        io.write_csv(
            out / "coefficient_grid.csv",
            ("level", "k", "b_jk", "delta"),
            (
                (block.level, k, b, delta)
                for block in blocks
                for k, b, delta in zip(
                    range(block.first_index, block.first_index + block.m),
                    block.shifts,
                    block.values,
                    strict=True,
                )
            ),
        ),
    ]
    if run_config.output.svg:
        panels = {
            "realization.svg": (
                np.column_stack([series.times, series.values]),
                "Realization",
            ),
            "periodogram.svg": (spectrum, "Periodogram"),
            "autocovariance.svg": (
                np.column_stack([np.arange(maxlag + 1), autocovariance]),
                "Sample autocovariance",
            ),
        }
        for name, (points, title) in panels.items():
            path = out / name
            path.write_text(
                emit_svg_scatter(points, SvgStyle(title=title, marker_radius=1.0)),
                encoding="utf-8",
                newline="\n",
            )
            artifacts.append(path)
    return artifacts


_COMMANDS = {
    "simulate": cmd_simulate,
    "transform": cmd_transform,
    "estimate": cmd_estimate,
    "mc": cmd_mc,
    "asymptotics": cmd_asymptotics,
    "filters": cmd_filters,
    "diagnose": cmd_diagnose,
}


def _arguments(args) -> dict:
    return {
        key: str(value) if isinstance(value, Path) else value
        for key, value in sorted(vars(args).items())
        if key != "runtime"
    }


def _emit_error(code: str, message: str, details: dict) -> None:
    payload = {"error": code, "message": message, "details": details}
    sys.stderr.write(json.dumps(payload, sort_keys=True, default=str) + "\n")


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK

    try:
        app_config = config.get_config()
    except RuntimeError as err:
        _emit_error("config", str(err), {})
        return EXIT_CONFIG
    setup_logging(app_config)

    with tracing.run_context(args.command) as run_id:
        started = time.perf_counter()
        try:
            run_config = load_run_config(getattr(args, "config", None)).resolved()
            artifacts = _COMMANDS[args.command](args, run_config)
        except ConfigError as err:
            logger.error("Configuration error: %s", err)
            _emit_error(err.code, str(err), err.details)
            return EXIT_CONFIG
        except PipelineError as err:
            logger.error("%s failed: %s", args.command, err)
            _emit_error(err.code, str(err), err.details)
            return EXIT_RUNTIME
        except Exception as err:
            logger.exception("Unexpected error in %s", args.command)
            _emit_error("internal", str(err), {"type": type(err).__name__})
            return EXIT_RUNTIME

        if artifacts:
            timings = {"total_seconds": time.perf_counter() - started}
            if hasattr(args, "runtime"):
                timings["replicates_seconds"] = args.runtime
            io.write_manifest(
                artifacts[0].parent,
                command=args.command,
                run_id=run_id,
                config=run_config.model_dump(mode="json"),
                artifacts=artifacts,
                timings=timings,
                seed=run_config.simulation.seed,
                arguments=_arguments(args),
            )
        logger.info("%s finished with %d artifacts", args.command, len(artifacts))
    return EXIT_OK


def main() -> None:  # pragma: no cover
    sys.exit(run())


if __name__ == "__main__":  # pragma: no cover
    main()
