import concurrent.futures
import contextvars
import dataclasses
import logging
import math
import time

import numpy as np

from app import config
from app.common.errors import DomainError, PipelineError
from app.common.tracing import replicate_context
from app.dependencies import get_filter_repository
from app.estimate.asymptotics import asymptotic_covariance, asymptotic_V1
from app.estimate.service import (
    adjusted_estimate,
    effective_increment_normalizer,
    increment_stat,
    mean_square_stat,
    normalized_stats,
)
from app.filters.models import Filter
from app.mc.models import MCConfig, MCReport, ReplicateError
from app.mc.normality import ellipse_data, normality_test
from app.simulate.models import SeriesGrid, SeriesSpec, SimulationConfig, SimulatorKind
from app.simulate.service import (
    get_sampler,
    simulate_coefficients_exact,
    simulate_gegenbauer,
    simulate_spectral,
)
from app.spectral.models import GegenbauerParams, ModelParams
from app.spectral.service import gegenbauer_to_model
from app.transform.models import CoefficientBlock, IncrementCount
from app.transform.service import compute_M, filter_coefficients, validate_scheme

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class _Plan:
    """Per-study constants shared by every replicate."""

    cfg: MCConfig
    model: ModelParams
    filter: Filter
    counts: tuple[tuple[int, int], ...]
    increment: IncrementCount
    normalizer: float | None
    sim: SimulationConfig
    grid: SeriesSpec | None


@dataclasses.dataclass(frozen=True)
class _Outcome:
    s1: float
    s2: float
    s0_hat: float
    alpha_hat: float
    truncated: bool


def _series_grid(cfg: MCConfig, filter: Filter, counts) -> SeriesSpec:
    if not filter.has_time_form:
        msg = f"Filter '{filter.name}' has no time-domain form for series simulation"
        raise DomainError(msg)
    reach = [
        (
            cfg.scheme.b(j, 1) - filter.time_radius * cfg.scheme.a(j),
            cfg.scheme.b(j, count) + filter.time_radius * cfg.scheme.a(j),
        )
        for j, count in counts
    ]
    t0 = cfg.dt * math.floor(min(lo for lo, _ in reach) / cfg.dt)
    t_end = max(hi for _, hi in reach)
    return SeriesSpec(t0=t0, dt=cfg.dt, n=math.ceil((t_end - t0) / cfg.dt) + 1)


def _simulate_blocks(plan: _Plan, replicate: int) -> list[CoefficientBlock]:
    cfg = plan.cfg
    sim = plan.sim.for_replicate(replicate)
    if cfg.simulator == SimulatorKind.EXACT_COVARIANCE:
        return [
            simulate_coefficients_exact(
                plan.model,
                plan.filter,
                cfg.scheme.a(j),
                cfg.scheme.gamma(j),
                count,
                sim,
                level=j,
            )
            for j, count in plan.counts
        ]

    if cfg.simulator == SimulatorKind.GEGENBAUER_MA:
        drawn = simulate_gegenbauer(cfg.truth, plan.grid.n, sim)
        series = SeriesGrid(t0=plan.grid.t0, dt=1.0, values=drawn.values)
    else:
        band = cfg.band if cfg.band is not None else 2.0 * plan.model.s0
        series = simulate_spectral(plan.model, plan.grid, band, cfg.bins, sim)
    return [
        filter_coefficients(series, plan.filter, cfg.scheme, j, count)
        for j, count in plan.counts
    ]


def _run_one(plan: _Plan, replicate: int) -> _Outcome:
    cfg = plan.cfg
    with replicate_context(replicate):
        level, upper, lower = _simulate_blocks(plan, replicate)
        dbar = mean_square_stat(level)
        dincr = increment_stat(
            mean_square_stat(upper), mean_square_stat(lower), upper.a, lower.a
        )
        s1, s2 = normalized_stats(
            dbar,
            dincr,
            plan.filter,
            level.m,
            plan.model,
            increment_normalizer=plan.normalizer,
        )
        report = adjusted_estimate(
            dbar,
            dincr,
            plan.filter,
            level.m,
            c=cfg.scheme.c,
            M=plan.increment.value,
            truth=plan.model,
        )
        logger.debug("Replicate %d: S1=%.6g S2=%.6g", replicate, s1, s2)
        return _Outcome(
            s1, s2, report.s0_hat, report.alpha_hat, report.truncation_active
        )


def _level_independence(cfg: MCConfig, filter: Filter) -> str:
    if cfg.simulator != SimulatorKind.EXACT_COVARIANCE:
        return "induced"
    check = validate_scheme(cfg.scheme, filter, [cfg.level]).checks[0]
    if check.disjoint_supports:
        return "construction"
    logger.warning(
        "Filter supports at levels %d and %d overlap; "
        "levels are drawn independently by assumption",
        cfg.level + 1,
        cfg.level + 2,
    )
    return "assumption"


def _plan(cfg: MCConfig) -> _Plan:
    filter = get_filter_repository().get_filter(
        cfg.filter_name, **cfg.filter_parameters
    )
    if isinstance(cfg.truth, ModelParams):
        model = cfg.truth
    else:
        model = gegenbauer_to_model(cfg.truth)
    j = cfg.level
    m = cfg.scheme.m(j)
    increment = compute_M(cfg.scheme, j)
    counts = ((j, m), (j + 1, increment.value), (j + 2, increment.value))
    normalizer = (
        effective_increment_normalizer(cfg.scheme, j, increment.value)
        if increment.capped
        else None
    )
    truncation = cfg.truncation_N or config.get_config().simulation.truncation_n
    grid = None
    if cfg.simulator != SimulatorKind.EXACT_COVARIANCE:
        grid = _series_grid(cfg, filter, counts)
        logger.info("Each replicate simulates %d samples", grid.n)
    return _Plan(
        cfg=cfg,
        model=model,
        filter=filter,
        counts=counts,
        increment=increment,
        normalizer=normalizer,
        sim=SimulationConfig(seed=cfg.seed, truncation_N=truncation),
        grid=grid,
    )


def run_replicates(cfg: MCConfig) -> MCReport:
    """Run cfg.replicates independent replicates and aggregate them.

    Replicate r draws from streams keyed by (seed, r, level) and writes into
    slot r, so the report does not depend on the worker count.
    """
    started = time.perf_counter()
    plan = _plan(cfg)
    independence = _level_independence(cfg, plan.filter)

    if cfg.simulator == SimulatorKind.EXACT_COVARIANCE:
        # Factorize once before fanning out.
        for j, count in plan.counts:
            get_sampler(
                plan.model, plan.filter, cfg.scheme.a(j), cfg.scheme.gamma(j), count
            )

    workers = cfg.workers or config.get_config().mc.workers
    outcomes: list[_Outcome | None] = [None] * cfg.replicates
    logger.info(
        "Running %d replicates (%s simulator, %s filter, level %d) on %d workers",
        cfg.replicates,
        cfg.simulator.value,
        plan.filter.name,
        cfg.level,
        workers,
    )
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {
            executor.submit(contextvars.copy_context().run, _run_one, plan, r): r
            for r in range(cfg.replicates)
        }
        for future in concurrent.futures.as_completed(futures):
            r = futures[future]
            try:
                outcomes[r] = future.result()
            except Exception as err:
                for pending in futures:
                    pending.cancel()
                msg = f"Replicate {r} failed: {err}"
                logger.error(msg)
                if isinstance(err, PipelineError):
                    cause = {"cause": err.code, **err.details}
                else:
                    cause = {"cause": type(err).__name__}
                details = {"replicate": r, "seed": cfg.seed, **cause}
                raise ReplicateError(msg, details) from err

    report = _aggregate(plan, outcomes, independence)
    return dataclasses.replace(report, runtime=time.perf_counter() - started)


def _aggregate(plan: _Plan, outcomes: list[_Outcome], independence: str) -> MCReport:
    cfg = plan.cfg
    s1 = np.array([o.s1 for o in outcomes])
    s2 = np.array([o.s2 for o in outcomes])
    estimates = np.array([[o.s0_hat, o.alpha_hat] for o in outcomes])
    truncated = np.array([o.truncated for o in outcomes])
    m = cfg.scheme.m(cfg.level)

    truth = np.array([plan.model.s0, plan.model.alpha])
    scaled_errors = math.sqrt(m) * (estimates - truth)

    normality = {"S1": None, "S2": None}
    if cfg.replicates >= 20:
        normality = {"S1": normality_test(s1), "S2": normality_test(s2)}
    else:
        logger.info("Skipping normality tests for %d replicates", cfg.replicates)

    error_ellipse = None
    if cfg.replicates >= 3:
        try:
            error_ellipse = ellipse_data(scaled_errors[:, 0], scaled_errors[:, 1])
        except DomainError as err:
            logger.warning("No error ellipse: %s", err)

    corr = float(np.corrcoef(s1, s2)[0, 1]) if s1.std() > 0 and s2.std() > 0 else 0.0
    v1 = asymptotic_V1(plan.model, plan.filter, cfg.scheme.c)
    return MCReport(
        samples_S1=s1,
        samples_S2=s2,
        estimates=estimates,
        truncated=truncated,
        normality=normality,
        corr_S1_S2=corr,
        empirical_var_S1=float(np.var(s1, ddof=1)),
        empirical_var_S2=float(np.var(s2, ddof=1)),
        theory_var_S1=v1 / plan.filter.L0**2,
        theory_var_S2=v1 / (2.0 * plan.filter.L2**2),
        truncation_rate=float(np.mean(truncated)),
        scaled_errors=scaled_errors,
        error_ellipse=error_ellipse,
        theory_covariance=asymptotic_covariance(
            plan.model.s0, plan.model.alpha, plan.filter, cfg.scheme.c
        ),
        increment_count=plan.increment,
        increment_normalizer=(
            plan.normalizer if plan.normalizer is not None else math.sqrt(m)
        ),
        level_independence=independence,
        seed=cfg.seed,
        replicates=cfg.replicates,
        simulator=cfg.simulator,
        filter_name=plan.filter.name,
        level=cfg.level,
        m=m,
    )
