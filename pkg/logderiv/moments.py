"""Log-derivative of the characteristic polynomial and its Monte Carlo moments"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from logderiv.config import MAX_MOMENT_K, run_defaults
from logderiv.ensembles import SO_EVEN, SO_ODD, USP, EigenSample, check_ensemble, sample_many
from logderiv.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

MIN_SAMPLES = 100


@dataclass(frozen=True)
class ScaledPoint:
    """Evaluation point s = exp(-a/N)"""
    N: int
    a: float

    def __post_init__(self):
        if self.N < 1:
            raise InvalidArgumentError(f"N must be a positive integer, got {self.N}")
        if not self.a > 0 or not math.isfinite(self.a):
            raise InvalidArgumentError(f"a must be a positive real, got {self.a}")

    @property
    def alpha(self) -> float:
        return self.a / self.N

    @property
    def s(self) -> float:
        return math.exp(-self.alpha)

    @property
    def delta(self) -> float:
        """1 - s without cancellation"""
        return -math.expm1(-self.alpha)


@dataclass(frozen=True)
class MomentEstimate:
    K: int
    mean: float
    std_error: float
    samples: int
    point: ScaledPoint
    ensemble: str
    seed: int


def _check_s(s: float):
    if not 0 < s < 1:
        raise InvalidArgumentError(f"evaluation point must satisfy 0 < s < 1, got {s}")


def logderiv_values(angles: np.ndarray, s: float, ensemble: str, delta: float = None) -> np.ndarray:
    """Lambda'/Lambda(s) for every row of a (samples, N) angle array.

    Each pair contributes (2s - 2cos t)/(s^2 - 2s cos t + 1), evaluated as
    (-2d + 4 sin^2(t/2)) / (d^2 + 4 s sin^2(t/2)) with d = 1 - s.
    """
    ensemble = check_ensemble(ensemble)
    _check_s(s)
    if delta is None:
        delta = 1.0 - s
    half = np.sin(np.asarray(angles, dtype=float) / 2) ** 2
    terms = (4 * half - 2 * delta) / (delta * delta + 4 * s * half)
    values = terms.sum(axis=-1)
    if ensemble == SO_ODD:
        values = values - 1 / delta
    return values


def logderiv(sample: EigenSample, s: float) -> float:
    return float(logderiv_values(sample.angles, s, sample.ensemble))


def pole_term(point: ScaledPoint) -> float:
    """-1/(1-s), the forced eigenvalue's contribution for SO(2N+1)"""
    return -1 / point.delta


def _chunk_values(ensemble: str, point: ScaledPoint, start: int, count: int, seed: int) -> Tuple[int, np.ndarray]:
    angles = sample_many(ensemble, point.N, count, seed, stream_offset=start)
    return start, logderiv_values(angles, point.s, ensemble, point.delta)


def draw_logderivs(ensemble: str, point: ScaledPoint, samples: int, seed: int = run_defaults["seed"],
                   threads: int = run_defaults["threads"],
                   chunk_size: int = run_defaults["chunk_size"]) -> np.ndarray:
    """Per-sample log-derivatives; sample i always comes from stream i, whatever the chunking"""
    ensemble = check_ensemble(ensemble)
    if samples < 1:
        raise InvalidArgumentError(f"samples must be positive, got {samples}")
    if threads < 1 or chunk_size < 1:
        raise InvalidArgumentError("threads and chunk_size must be positive")
    chunks = [(start, min(chunk_size, samples - start)) for start in range(0, samples, chunk_size)]
    values = np.empty(samples)

    if threads == 1 or len(chunks) == 1:
        for start, count in chunks:
            values[start:start + count] = _chunk_values(ensemble, point, start, count, seed)[1]
            logger.debug("chunk at %d done", start)
        return values

    with ProcessPoolExecutor(max_workers=threads) as executor:
        futures = [executor.submit(_chunk_values, ensemble, point, start, count, seed) for start, count in chunks]
        finished = 0
        for future in as_completed(futures):
            start, chunk = future.result()
            values[start:start + len(chunk)] = chunk
            finished += 1
            logger.info("%s: %d/%d chunks", ensemble, finished, len(chunks))
    return values


def summarize(values: np.ndarray, K: int, point: ScaledPoint, ensemble: str, seed: int) -> MomentEstimate:
    """Mean and standard error of values**K with exactly rounded sums"""
    if len(values) < 2:
        raise InvalidArgumentError("a standard error needs at least two samples")
    powers = np.asarray(values, dtype=float) ** K
    n = len(powers)
    mean = math.fsum(powers) / n
    variance = math.fsum((powers - mean) ** 2) / (n - 1)
    return MomentEstimate(K, mean, math.sqrt(variance / n), n, point, ensemble, seed)


def _check_run(K: int, samples: int):
    if not 0 <= K <= MAX_MOMENT_K:
        raise InvalidArgumentError(f"K must lie in 0..{MAX_MOMENT_K}, got {K}")
    if samples < MIN_SAMPLES:
        raise InvalidArgumentError(f"at least {MIN_SAMPLES} samples are required, got {samples}")


def estimate_moment(ensemble: str, K: int, point: ScaledPoint, samples: int,
                    seed: int = run_defaults["seed"], threads: int = run_defaults["threads"],
                    chunk_size: int = run_defaults["chunk_size"]) -> MomentEstimate:
    """Monte Carlo K-th moment of Lambda'/Lambda(exp(-a/N))"""
    ensemble = check_ensemble(ensemble)
    _check_run(K, samples)
    if K == 0:
        return MomentEstimate(0, 1.0, 0.0, samples, point, ensemble, seed)
    values = draw_logderivs(ensemble, point, samples, seed, threads, chunk_size)
    estimate = summarize(values, K, point, ensemble, seed)
    logger.info("%s K=%d N=%d a=%g: %.6g +- %.3g", ensemble, K, point.N, point.a,
                estimate.mean, estimate.std_error)
    return estimate


def estimate_pole_subtraction(K: int, point: ScaledPoint, samples: int,
                              seed: int = run_defaults["seed"], threads: int = run_defaults["threads"],
                              chunk_size: int = run_defaults["chunk_size"]) -> Tuple[MomentEstimate, MomentEstimate]:
    """SO(2N+1) moments of Lambda'/Lambda + 1/(1-s) and of Lambda'/Lambda, from one draw"""
    _check_run(K, samples)
    if K == 0:
        trivial = MomentEstimate(0, 1.0, 0.0, samples, point, SO_ODD, seed)
        return trivial, trivial
    values = draw_logderivs(SO_ODD, point, samples, seed, threads, chunk_size)
    return (summarize(values - pole_term(point), K, point, SO_ODD, seed),
            summarize(values, K, point, SO_ODD, seed))


def estimate_pole_subtracted_moment(K: int, point: ScaledPoint, samples: int,
                                    seed: int = run_defaults["seed"], threads: int = run_defaults["threads"],
                                    chunk_size: int = run_defaults["chunk_size"]) -> MomentEstimate:
    """SO(2N+1) moment of Lambda'/Lambda + 1/(1-s)"""
    return estimate_pole_subtraction(K, point, samples, seed, threads, chunk_size)[0]


def scaled_variance_usp(point: ScaledPoint, samples: int, seed: int = run_defaults["seed"],
                        threads: int = run_defaults["threads"],
                        chunk_size: int = run_defaults["chunk_size"]) -> float:
    """Monte Carlo mean of ((1/N) Lambda'/Lambda - 1)^2 over USp(2N)"""
    _check_run(1, samples)
    values = draw_logderivs(USP, point, samples, seed, threads, chunk_size)
    return math.fsum((values / point.N - 1) ** 2) / samples


def negative_fraction(ensemble: str, point: ScaledPoint, samples: int, seed: int = run_defaults["seed"],
                      threads: int = run_defaults["threads"]) -> float:
    """Share of Haar draws with a negative log-derivative"""
    values = draw_logderivs(ensemble, point, samples, seed, threads)
    return float(np.count_nonzero(values < 0)) / samples


def product_moment_estimate(alphas: Sequence[float], N: int, samples: int,
                            seed: int = run_defaults["seed"],
                            chunk_size: int = run_defaults["chunk_size"]) -> Dict[str, float]:
    """Monte Carlo of the product of Lambda'/Lambda(exp(-alpha_k)) over SO(2N)"""
    if not alphas or any(not x > 0 for x in alphas):
        raise InvalidArgumentError("alphas must be positive reals")
    if samples < 2:
        raise InvalidArgumentError("a standard error needs at least two samples")
    products: List[np.ndarray] = []
    for start in range(0, samples, chunk_size):
        angles = sample_many(SO_EVEN, N, min(chunk_size, samples - start), seed, stream_offset=start)
        product = np.ones(len(angles))
        for alpha in alphas:
            product *= logderiv_values(angles, math.exp(-alpha), SO_EVEN, -math.expm1(-alpha))
        products.append(product)
    values = np.concatenate(products)
    mean = math.fsum(values) / samples
    variance = math.fsum((values - mean) ** 2) / (samples - 1)
    return {"mean": mean, "std_error": math.sqrt(variance / samples)}
