"""Closed forms: z-function utilities, asymptotic moments, exact finite-N moments"""
import cmath
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

from scipy import stats

from logderiv.combinatorics import ExactRational, double_factorial, factorial
from logderiv.config import run_defaults, tolerances
from logderiv.ensembles import SO_EVEN, SO_ODD, USP, check_ensemble
from logderiv.errors import ConfluentLimitError, DomainError, InvalidArgumentError, PoleError
from logderiv.moments import MomentEstimate, ScaledPoint, estimate_moment

logger = logging.getLogger(__name__)

Number = Union[float, complex]

# |Re x| beyond which z is evaluated through e^-|x|
FAR_ARGUMENT = 30.0


# -- z-function ----------------------------------------------------------------

@dataclass(frozen=True)
class ZFunctionValue:
    """z(x) = 1/(1 - e^-x) with z'/z and (z'/z)'"""
    x: Number
    z: Number
    dlog: Number
    dlog_prime: Number

    @property
    def z_prime(self) -> Number:
        return self.dlog * self.z


def _z_eval_far(x: Number) -> ZFunctionValue:
    """Forms in e^-|Re x| only, so nothing overflows"""
    exp = cmath.exp if isinstance(x, complex) else math.exp
    if x.real > 0:
        u = exp(-x)
        return ZFunctionValue(x, 1 / (1 - u), -u / (1 - u), u / (1 - u) ** 2)
    v = exp(x)
    return ZFunctionValue(x, -v / (1 - v), 1 / (1 - v), v / (1 - v) ** 2)


def z_eval(x: Number) -> ZFunctionValue:
    if x == 0:
        raise PoleError("z has a pole at x = 0")
    if abs(x) < tolerances["laurent"]:
        return ZFunctionValue(
            x,
            1 / x + 0.5 + x / 12 - x ** 3 / 720,
            -1 / x + 0.5 - x / 12 + x ** 3 / 720,
            1 / x ** 2 - 1 / 12 + x ** 2 / 240,
        )
    if abs(x.real) > FAR_ARGUMENT:
        return _z_eval_far(x)
    if isinstance(x, complex):
        em, ep = cmath.exp(-x) - 1, cmath.exp(x) - 1
    else:
        em, ep = math.expm1(-x), math.expm1(x)
    if em == 0 or ep == 0:
        raise PoleError(f"z has a pole at x = {x}")
    return ZFunctionValue(x, -1 / em, -1 / ep, (1 + ep) / ep ** 2)


def z(x: Number) -> Number:
    return z_eval(x).z


def dlog(x: Number) -> Number:
    return z_eval(x).dlog


# -- Asymptotic moments --------------------------------------------------------

@dataclass(frozen=True)
class MomentFormulaResult:
    ensemble: str
    K: int
    N: int
    a: float
    leading: float
    next_to_leading: Optional[float]
    formula_id: str

    @property
    def value(self) -> float:
        return self.leading + (self.next_to_leading or 0.0)


def _check_K(K: int):
    if K < 1:
        raise InvalidArgumentError(f"K must be a positive integer, got {K}")


def asymptotic_coefficients(ensemble: str, K: int) -> Dict[int, ExactRational]:
    """c_m with moment ~ sum_m c_m N^K a^(m-K), first entry leading"""
    ensemble = check_ensemble(ensemble)
    _check_K(K)
    sign = (-1) ** K
    if ensemble == SO_EVEN:
        if K == 1:
            return {1: Fraction(-1)}
        return {1: sign * Fraction(2 * double_factorial(2 * K - 3), factorial(K - 1))}
    if ensemble == USP:
        if K == 1:
            return {1: Fraction(1), 2: Fraction(-1)}
        if K == 2:
            return {2: Fraction(1), 3: Fraction(-4, 3)}
        if K == 3:
            return {3: Fraction(2, 3)}
        return {3: sign * Fraction(2 * double_factorial(2 * K - 5), 3 * factorial(K - 1))}
    return {0: Fraction(sign), 1: Fraction(-sign * K)}


def _formula_id(ensemble: str, K: int) -> str:
    if ensemble == SO_ODD:
        return "so_odd"
    if ensemble == SO_EVEN:
        return "so_even:K=1" if K == 1 else "so_even:K>=2"
    return f"usp:K={K}" if K <= 3 else "usp:K>=4"


def asymptotic_moment(ensemble: str, K: int, N: int, a: float) -> MomentFormulaResult:
    """Leading and, where known, next-to-leading term of the K-th moment for a = o(1)"""
    ensemble = check_ensemble(ensemble)
    if N < 1 or not a > 0:
        raise InvalidArgumentError(f"need N >= 1 and a > 0, got N={N}, a={a}")
    terms = [float(c) * N ** K * a ** (m - K) for m, c in sorted(asymptotic_coefficients(ensemble, K).items())]
    return MomentFormulaResult(
        ensemble, K, N, a,
        leading=terms[0],
        next_to_leading=terms[1] if len(terms) > 1 else None,
        formula_id=_formula_id(ensemble, K),
    )


# -- Exact moments at finite N --------------------------------------------------

def j_to_moment(value: float, alphas: Sequence[float]) -> float:
    """J carries a factor -e^-alpha per variable; strip it to get the raw moment"""
    try:
        factor = math.exp(math.fsum(alphas))
    except OverflowError:
        raise DomainError(f"shifts summing to {math.fsum(alphas):g} overflow the raw-moment normalisation")
    return value * factor * (-1) ** len(alphas)


def moment_to_j(value: float, alphas: Sequence[float]) -> float:
    factor = 1.0
    for alpha in alphas:
        factor *= -math.exp(-alpha)
    return value * factor


def _check_alpha(alpha: float, N: int):
    if not alpha > 0:
        raise InvalidArgumentError(f"alpha must be positive, got {alpha}")
    if N < 1:
        raise InvalidArgumentError(f"N must be a positive integer, got {N}")


def confluent_j1(alpha: float, N: int) -> float:
    _check_alpha(alpha, N)
    at = z_eval(2 * alpha)
    return -at.dlog - math.exp(-2 * N * alpha) * at.z


def confluent_j2(alpha: float, N: int) -> float:
    """J at A = {alpha, alpha}"""
    _check_alpha(alpha, N)
    at = z_eval(2 * alpha)
    decay = math.exp(-2 * N * alpha)
    return (
        at.dlog_prime + at.dlog * at.dlog
        + decay * at.z * (-1 + 4 * at.dlog + 2 * N)
        - 2 * decay * at.z_prime
    )


def exact_moment_so_even(K: int, N: int, alpha: float) -> float:
    """K-th moment over SO(2N) at s = e^-alpha, K in {1, 2}.

    These are the confluent J values with the -e^alpha factors multiplied through,
    written in u = e^(-2 alpha) so that no exponential grows with alpha.
    """
    if K not in (1, 2):
        raise InvalidArgumentError(f"exact SO(2N) moments are available for K = 1, 2 only, got {K}")
    _check_alpha(alpha, N)
    if K == 1:
        return -math.exp(-alpha) * math.expm1(-2 * (N - 1) * alpha) / math.expm1(-2 * alpha)
    u = math.exp(-2 * alpha)
    gap = -math.expm1(-2 * alpha)
    return (1 + u - 2 * math.exp(-2 * N * alpha)) / gap ** 2 + (2 * N - 1) * math.exp(-2 * (N - 1) * alpha) / gap


def exact_first_moment(ensemble: str, N: int, alpha: float) -> float:
    """Mean of Lambda'/Lambda(e^-alpha) at finite N"""
    ensemble = check_ensemble(ensemble)
    if ensemble == SO_EVEN:
        return exact_moment_so_even(1, N, alpha)
    _check_alpha(alpha, N)
    if ensemble == USP:
        return math.exp(-alpha) * math.expm1(-2 * N * alpha) / math.expm1(-2 * alpha)
    return (math.exp(-alpha) + math.exp(-2 * N * alpha)) / math.expm1(-2 * alpha)


def exact_moment(ensemble: str, K: int, N: int, alpha: float) -> Optional[float]:
    """Exact value when one is known, else None"""
    ensemble = check_ensemble(ensemble)
    if K == 1:
        return exact_first_moment(ensemble, N, alpha)
    if K == 2 and ensemble == SO_EVEN:
        return exact_moment_so_even(2, N, alpha)
    return None


def telephone_number(m: int) -> int:
    """Number of partitions of an m-set into blocks of size one or two"""
    if m < 0:
        raise InvalidArgumentError("m must be nonnegative")
    previous, current = 1, 1
    for k in range(2, m + 1):
        previous, current = current, current + (k - 1) * previous
    return current


def size_two_partitions(items: Sequence) -> Iterator[List[Tuple]]:
    """Set partitions of items into singletons and pairs, by pairing the first item"""
    if not items:
        yield []
        return
    first, rest = items[0], list(items[1:])
    for partition in size_two_partitions(rest):
        yield [(first,)] + partition
    for k, partner in enumerate(rest):
        for partition in size_two_partitions(rest[:k] + rest[k + 1:]):
            yield [(first, partner)] + partition


def _pair_ratio(d1: float, d2: float) -> float:
    """z(d1+d2) z(-d1-d2) / (z(d2-d1) z(d1-d2)) = (sinh((d1-d2)/2) / sinh((d1+d2)/2))^2"""
    near, far = abs(d1 - d2) / 2, (d1 + d2) / 2
    return (math.exp(near - far) * math.expm1(-2 * near) / math.expm1(-2 * far)) ** 2


def _subset_weight(D: Sequence[float], N: int) -> float:
    """e^(-2N sum D) (-1)^|D| times the positive square root of the z-product"""
    weight = math.exp(-2 * N * sum(D)) * (-1) ** len(D)
    for delta in D:
        weight *= z(2 * delta)
    for d1, d2 in combinations(D, 2):
        weight *= _pair_ratio(d1, d2)
    return weight


def _block_value(block: Tuple[float, ...], D: Sequence[float]) -> float:
    if len(block) == 2:
        return z_eval(block[0] + block[1]).dlog_prime
    alpha = block[0]
    return sum(dlog(alpha - delta) - dlog(alpha + delta) for delta in D) - dlog(2 * alpha)


def exact_J(alphas: Sequence[float], N: int) -> float:
    """Exact J(A) = int prod(-e^-alpha) Lambda'/Lambda(e^-alpha) over SO(2N) for distinct alphas"""
    alphas = [float(x) for x in alphas]
    if not alphas:
        raise InvalidArgumentError("at least one shift is required")
    if any(not x > 0 for x in alphas):
        raise InvalidArgumentError("shifts must be positive")
    if len(set(alphas)) != len(alphas):
        raise ConfluentLimitError("coincident shifts; use exact_moment_so_even for the K = 1, 2 limits")
    if len(alphas) > N:
        raise DomainError(f"{len(alphas)} shifts exceed N = {N}")

    total = 0.0
    for size in range(len(alphas) + 1):
        for D in combinations(alphas, size):
            rest = [x for x in alphas if x not in D]
            inner = 0.0
            for partition in size_two_partitions(rest):
                term = 1.0
                for block in partition:
                    term *= _block_value(block, D)
                inner += term
            total += _subset_weight(D, N) * inner
    return total


def product_moment_so_even(alphas: Sequence[float], N: int) -> float:
    """Raw moment int prod Lambda'/Lambda(e^-alpha) over SO(2N)"""
    return j_to_moment(exact_J(alphas, N), alphas)


# -- Monte Carlo against the closed forms --------------------------------------

@dataclass(frozen=True)
class Comparison:
    monte_carlo: MomentEstimate
    asymptotic: MomentFormulaResult
    exact: Optional[float]

    @property
    def reference(self) -> float:
        return self.exact if self.exact is not None else self.asymptotic.value

    @property
    def ratio(self) -> float:
        return self.monte_carlo.mean / self.reference

    @property
    def z_score(self) -> float:
        if self.monte_carlo.std_error == 0:
            return 0.0 if self.monte_carlo.mean == self.reference else math.inf
        return (self.monte_carlo.mean - self.reference) / self.monte_carlo.std_error

    @property
    def p_value(self) -> float:
        return float(2 * stats.norm.sf(abs(self.z_score)))

    def as_row(self) -> Dict[str, object]:
        mc = self.monte_carlo
        return {
            "ensemble": mc.ensemble,
            "K": mc.K,
            "N": mc.point.N,
            "a": mc.point.a,
            "samples": mc.samples,
            "seed": mc.seed,
            "mc_mean": mc.mean,
            "mc_stderr": mc.std_error,
            "asymptotic": self.asymptotic.value,
            "exact": self.exact,
            "ratio": self.ratio,
            "z_score": self.z_score,
        }


def compare(ensemble: str, K: int, N: int, a: float, samples: int,
            seed: int = run_defaults["seed"], threads: int = run_defaults["threads"]) -> Comparison:
    ensemble = check_ensemble(ensemble)
    point = ScaledPoint(N, a)
    estimate = estimate_moment(ensemble, K, point, samples, seed, threads)
    result = Comparison(estimate, asymptotic_moment(ensemble, K, N, a), exact_moment(ensemble, K, N, point.alpha))
    logger.info("%s K=%d: ratio %.4f, z %.2f", ensemble, K, result.ratio, result.z_score)
    return result
