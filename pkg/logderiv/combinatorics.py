"""Exact integer and rational kernel: factorials, binomials, compositions"""
import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence, Tuple

from logderiv.errors import InvalidArgumentError

# All exact values are plain Fractions: lowest terms, positive denominator, immutable.
ExactRational = Fraction


def binomial(n: int, k: int) -> ExactRational:
    """C(n, k), zero whenever n < k (including every negative n)"""
    if k < 0:
        raise InvalidArgumentError(f"binomial lower index must be nonnegative, got {k}")
    if n < k:
        return Fraction(0)
    return Fraction(math.comb(n, k))


def factorial(n: int) -> int:
    if n < 0:
        raise InvalidArgumentError(f"factorial of negative integer {n}")
    return math.factorial(n)


@lru_cache(maxsize=None)
def double_factorial(n: int) -> int:
    """n!! with (-1)!! = 0!! = 1"""
    if n < -1:
        raise InvalidArgumentError(f"double factorial needs n >= -1, got {n}")
    if n <= 0:
        return 1
    return n * double_factorial(n - 2)


def multinomial(parts: Sequence[int]) -> int:
    """(sum parts)! / prod(part!)"""
    total = 0
    result = 1
    for part in parts:
        total += part
        result *= math.comb(total, part)
    return result


def compositions(total: int, length: int) -> Iterator[Tuple[int, ...]]:
    """Weak compositions of total into length parts, in lexicographic order of the first part."""
    if length == 0:
        if total == 0:
            yield ()
        return
    if length == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, length - 1):
            yield (first,) + rest


def pair_count(K: int) -> int:
    """K choose 2, the exponent that recurs in every moment prefactor"""
    return K * (K - 1) // 2


def permutation_sign(values: Sequence[int]) -> int:
    """Sign of the permutation sorting values ascending; 0 when two values coincide."""
    if len(set(values)) != len(values):
        return 0
    inversions = sum(
        1
        for i in range(len(values))
        for j in range(i + 1, len(values))
        if values[i] > values[j]
    )
    return -1 if inversions % 2 else 1
