import abc
import functools
import logging
import threading
import warnings

import numpy as np
from scipy import linalg

from app import config
from app.filters.models import Filter
from app.simulate.gegenbauer import gegenbauer_coeffs, tail_energy
from app.simulate.models import (
    EmbeddingFallbackWarning,
    FactorizationError,
    SeriesGrid,
    SeriesSpec,
    SimulationConfig,
    SimulationConfigError,
    TruncationTailWarning,
)
from app.simulate.rng import rng_stream
from app.spectral.models import GegenbauerParams, ModelParams
from app.spectral.service import covariance_column, spectral_mass
from app.transform.models import CoefficientBlock, CoefficientSource

logger = logging.getLogger(__name__)

_TIME_BLOCK = 4096


def simulate_gegenbauer(
    g: GegenbauerParams, length: int, cfg: SimulationConfig
) -> SeriesGrid:
    """X(t) = sum_{n=0}^{N} C_n^(d)(u) eps(t - n) on the integer grid."""
    if length < 1:
        msg = f"Series length must be at least 1, got {length}"
        raise SimulationConfigError(msg)

    N = cfg.truncation_N
    head, tail = tail_energy(g.u, g.d, N)
    ratio = config.get_config().simulation.tail_warning_ratio
    if tail > ratio * head:
        logger.warning(
            "Moving-average truncation N=%d leaves tail energy %.3g (%.2f%% of kept)",
            N,
            tail,
            100.0 * tail / head,
        )
        warnings.warn(
            f"Truncation N={N} drops an estimated {tail / head:.2%} of the MA energy",
            TruncationTailWarning,
            stacklevel=2,
        )

    coeffs = gegenbauer_coeffs(g.u, g.d, N)
    rng = rng_stream(cfg.seed, cfg.replicate_index, 0)
    innovations = g.sigma_eps * rng.standard_normal(length + N)
    values = np.convolve(innovations, coeffs, mode="valid")
    return SeriesGrid(t0=0.0, dt=1.0, values=values)


@functools.lru_cache(maxsize=16)
def _bin_amplitudes(
    model: ModelParams, band: float, bins: int
) -> tuple[np.ndarray, np.ndarray]:
    edges = np.linspace(0.0, band, bins + 1)
    masses = np.array(
        [
            spectral_mass(model, lo, hi)
            for lo, hi in zip(edges[:-1], edges[1:], strict=True)
        ]
    )
    midpoints = 0.5 * (edges[:-1] + edges[1:])
    return midpoints, np.sqrt(2.0 * masses)


def simulate_spectral(
    model: ModelParams,
    grid: SeriesSpec,
    band: float,
    bins: int,
    cfg: SimulationConfig,
) -> SeriesGrid:
    """X(t) = sum_b sigma_b (xi_b cos(lam_b t) + eta_b sin(lam_b t)) with
    sigma_b^2 = 2 int_bin f; the bin containing s0 carries its exact mass."""
    if not band > model.s0:
        msg = f"Spectral band {band} must extend beyond the singularity s0={model.s0}"
        raise SimulationConfigError(msg, {"band": band, "s0": model.s0})
    if bins < 64:
        msg = f"Spectral simulation needs at least 64 bins, got {bins}"
        raise SimulationConfigError(msg)

    frequencies, amplitudes = _bin_amplitudes(model, band, bins)
    rng = rng_stream(cfg.seed, cfg.replicate_index, 0)
    cos_weights = amplitudes * rng.standard_normal(bins)
    sin_weights = amplitudes * rng.standard_normal(bins)

    times = grid.times
    values = np.empty(grid.n)
    for start in range(0, grid.n, _TIME_BLOCK):
        phase = np.outer(times[start : start + _TIME_BLOCK], frequencies)
        values[start : start + _TIME_BLOCK] = (
            np.cos(phase) @ cos_weights + np.sin(phase) @ sin_weights
        )
    return SeriesGrid(t0=grid.t0, dt=grid.dt, values=values)


class ToeplitzSampler(abc.ABC):
    @abc.abstractmethod
    def draw(self, rng: np.random.Generator) -> np.ndarray:
        pass


class DenseToeplitzSampler(ToeplitzSampler):
    def __init__(self, column: np.ndarray):
        matrix = linalg.toeplitz(column)
        jitter = config.get_config().simulation.psd_jitter * column[0]
        try:
            self.factor = linalg.cholesky(matrix, lower=True)
        except linalg.LinAlgError:
            logger.warning(
                "Toeplitz covariance not positive definite, retrying with jitter %.3g",
                jitter,
            )
            try:
                jittered = matrix + jitter * np.eye(column.size)
                self.factor = linalg.cholesky(jittered, lower=True)
            except linalg.LinAlgError as err:
                smallest = float(linalg.eigvalsh(matrix, subset_by_index=[0, 0])[0])
                msg = (
                    f"Coefficient covariance of size {column.size} "
                    "is not positive semidefinite"
                )
                logger.error("%s (smallest eigenvalue %.3g)", msg, smallest)
                raise FactorizationError(
                    msg,
                    {
                        "size": column.size,
                        "smallest_eigenvalue": smallest,
                        "jitter": jitter,
                    },
                ) from err

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        return self.factor @ rng.standard_normal(self.factor.shape[0])


class CirculantSampler(ToeplitzSampler):
    """Circulant embedding of the Toeplitz covariance, O(m log m) per draw."""

    def __init__(self, column: np.ndarray, eigenvalues: np.ndarray):
        self.size = column.size
        self.scale = np.sqrt(eigenvalues / eigenvalues.size)

    @staticmethod
    def embedding_eigenvalues(column: np.ndarray) -> np.ndarray:
        embedded = np.concatenate([column, column[-2:0:-1]])
        return np.fft.fft(embedded).real

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        n = self.scale.size
        noise = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        return np.fft.fft(self.scale * noise).real[: self.size]


def _build_sampler(column: np.ndarray) -> ToeplitzSampler:
    dense_limit = config.get_config().simulation.dense_limit
    if column.size <= dense_limit:
        return DenseToeplitzSampler(column)

    eigenvalues = CirculantSampler.embedding_eigenvalues(column)
    tolerance = config.get_config().simulation.psd_jitter * np.abs(eigenvalues).max()
    if eigenvalues.min() >= -tolerance:
        return CirculantSampler(column, np.clip(eigenvalues, 0.0, None))

    warnings.warn(
        f"Circulant embedding of size {eigenvalues.size} has negative eigenvalue "
        f"{eigenvalues.min():.3g}; falling back to dense factorization",
        EmbeddingFallbackWarning,
        stacklevel=3,
    )
    if column.size > 4 * dense_limit:
        msg = (
            f"Dense fallback for {column.size} coefficients "
            "exceeds the factorization limit"
        )
        raise FactorizationError(
            msg,
            {"size": column.size, "smallest_eigenvalue": float(eigenvalues.min())},
        )
    return DenseToeplitzSampler(column)


_samplers: dict[tuple, ToeplitzSampler] = {}
_samplers_lock = threading.Lock()


def get_sampler(
    model: ModelParams, filter: Filter, a: float, gamma: float, m: int
) -> ToeplitzSampler:
    key = (model, filter, a, gamma, m)
    sampler = _samplers.get(key)
    if sampler is None:
        with _samplers_lock:
            sampler = _samplers.get(key)
            if sampler is None:
                logger.info(
                    "Factorizing coefficient covariance a=%g gamma=%g m=%d",
                    a,
                    gamma,
                    m,
                )
                sampler = _build_sampler(covariance_column(model, filter, a, gamma, m))
                _samplers[key] = sampler
    return sampler


def clear_sampler_cache() -> None:
    with _samplers_lock:
        _samplers.clear()


def simulate_coefficients_exact(
    model: ModelParams,
    filter: Filter,
    a: float,
    gamma: float,
    m: int,
    cfg: SimulationConfig,
    level: int = 1,
) -> CoefficientBlock:
    """Draw (delta_j1..delta_jm) from its Gaussian law with Toeplitz covariance
    Cov(delta_jk, delta_jl) = I_{gamma (k - l) / a}(1 / a)."""
    if m < 1:
        msg = f"Coefficient count must be at least 1, got {m}"
        raise SimulationConfigError(msg)
    sampler = get_sampler(model, filter, a, gamma, m)
    values = sampler.draw(rng_stream(cfg.seed, cfg.replicate_index, level))
    return CoefficientBlock(
        level=level,
        a=a,
        gamma=gamma,
        values=values,
        source=CoefficientSource.EXACT_COVARIANCE,
    )
