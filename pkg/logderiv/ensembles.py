"""Haar samplers for SO(2N), SO(2N+1) and USp(2N) and their eigenangles"""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np
import pandas as pd

from logderiv.config import run_defaults, tolerances
from logderiv.errors import InvalidArgumentError, SamplingError

logger = logging.getLogger(__name__)

SO_EVEN = "so_even"
SO_ODD = "so_odd"
USP = "usp"
ENSEMBLES = (SO_EVEN, SO_ODD, USP)

ENSEMBLE_LABELS = {
    SO_EVEN: "SO(2N)",
    SO_ODD: "SO(2N+1)",
    USP: "USp(2N)",
}

MAX_REDRAWS = 64


def check_ensemble(ensemble: str) -> str:
    """Normalise an ensemble tag; accepts the CLI spelling so-even"""
    tag = str(ensemble).strip().lower().replace("-", "_")
    if tag not in ENSEMBLES:
        raise InvalidArgumentError(f"unknown ensemble {ensemble!r}; expected one of {', '.join(ENSEMBLES)}")
    return tag


def matrix_size(ensemble: str, N: int) -> int:
    return 2 * N + 1 if check_ensemble(ensemble) == SO_ODD else 2 * N


def _check_N(N: int):
    if N < 1:
        raise InvalidArgumentError(f"N must be a positive integer, got {N}")


@dataclass(frozen=True)
class RngStream:
    """Independent random stream; (seed, stream_id) always reproduces the same draws"""
    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,)))


@dataclass(frozen=True)
class EigenSample:
    ensemble: str
    N: int
    angles: np.ndarray


# -- Matrix draws --------------------------------------------------------------

def _haar_orthogonal(gaussians: np.ndarray) -> np.ndarray:
    """Sign-normalised QR of a stack of real Gaussian matrices"""
    Q, R = np.linalg.qr(gaussians)
    L = np.diagonal(R, axis1=-2, axis2=-1)
    Q *= (L / abs(L))[..., np.newaxis, :]
    return Q


def _draw_special_orthogonal(generators: List[np.random.Generator], n: int) -> np.ndarray:
    """Haar on SO(n): redraw from each stream until the determinant is +1"""
    Q = _haar_orthogonal(np.stack([g.standard_normal((n, n)) for g in generators]))
    pending = np.flatnonzero(np.linalg.det(Q) < 0)
    rounds = 0
    while pending.size:
        rounds += 1
        if rounds > MAX_REDRAWS:
            raise SamplingError(f"{pending.size} draws still have determinant -1 after {MAX_REDRAWS} rounds")
        Q[pending] = _haar_orthogonal(np.stack([generators[i].standard_normal((n, n)) for i in pending]))
        pending = pending[np.linalg.det(Q[pending]) < 0]
    return Q


def _symplectic_partner(v: np.ndarray) -> np.ndarray:
    """-J conj(v) for J = [[0, I], [-I, 0]]: (a, b) -> (-conj b, conj a)"""
    half = v.shape[-1] // 2
    return np.concatenate([-np.conj(v[..., half:]), np.conj(v[..., :half])], axis=-1)


def _draw_symplectic(generators: List[np.random.Generator], N: int) -> np.ndarray:
    """Haar on USp(2N) by structure-preserving Gram-Schmidt"""
    size = 2 * N
    raw = np.stack([
        g.standard_normal((size, N)) + 1j * g.standard_normal((size, N)) for g in generators
    ])
    # columns in the order v_0, partner(v_0), v_1, ... so the finished ones form a prefix
    Q = np.empty((len(generators), size, size), dtype=complex)
    for k in range(N):
        v = raw[:, :, k, np.newaxis]
        if k:
            basis = Q[:, :, :2 * k]
            # twice is enough
            for _ in range(2):
                v = v - basis @ (basis.conj().transpose(0, 2, 1) @ v)
        v = v[:, :, 0] / np.linalg.norm(v[:, :, 0], axis=1)[:, np.newaxis]
        Q[:, :, 2 * k] = v
        Q[:, :, 2 * k + 1] = _symplectic_partner(v)
    return np.concatenate([Q[:, :, 0::2], Q[:, :, 1::2]], axis=-1)


def _draw(ensemble: str, N: int, generators: List[np.random.Generator]) -> np.ndarray:
    if ensemble == USP:
        return _draw_symplectic(generators, N)
    return _draw_special_orthogonal(generators, matrix_size(ensemble, N))


def materialize_matrix(ensemble: str, N: int, rng: RngStream) -> np.ndarray:
    """The Haar matrix behind sample(ensemble, N, rng)"""
    ensemble = check_ensemble(ensemble)
    _check_N(N)
    return _draw(ensemble, N, [rng.generator()])[0]


def symplectic_form(N: int) -> np.ndarray:
    identity = np.eye(N)
    zero = np.zeros((N, N))
    return np.block([[zero, identity], [-identity, zero]])


def group_residuals(ensemble: str, matrix: np.ndarray) -> Dict[str, float]:
    """Max-norm residuals of the defining relations"""
    ensemble = check_ensemble(ensemble)
    n = matrix.shape[0]
    residuals = {
        "unitarity": float(np.max(np.abs(matrix.conj().T @ matrix - np.eye(n)))),
        "determinant": float(abs(np.linalg.det(matrix) - 1)),
        "unit_circle": float(np.max(np.abs(np.abs(np.linalg.eigvals(matrix)) - 1))),
    }
    if ensemble == USP:
        J = symplectic_form(n // 2)
        residuals["symplectic"] = float(np.max(np.abs(matrix.T @ J @ matrix - J)))
    return residuals


# -- Eigenangles ---------------------------------------------------------------

def eigenangles(ensemble: str, matrices: np.ndarray) -> np.ndarray:
    """Eigenangles folded to [0, pi], one per conjugate pair; works on a stack of matrices.

    For SO(2N+1) the eigenvalue nearest to +1 is the forced one and is dropped.
    """
    ensemble = check_ensemble(ensemble)
    single = matrices.ndim == 2
    stack = matrices[np.newaxis] if single else matrices
    eigenvalues = np.linalg.eigvals(stack)
    if ensemble == SO_ODD:
        distance = np.abs(eigenvalues - 1)
        forced = np.argmin(distance, axis=-1)
        # the forced eigenvalue is exactly 1 up to rounding
        worst = float(np.max(distance[np.arange(len(stack)), forced]))
        if worst > tolerances["unit_eigenvalue"]:
            raise SamplingError(f"no eigenvalue at 1 in an odd orthogonal draw (nearest {worst:.3e} away)")
        keep = np.ones(eigenvalues.shape, dtype=bool)
        keep[np.arange(len(stack)), forced] = False
        eigenvalues = eigenvalues[keep].reshape(len(stack), -1)

    folded = np.sort(np.abs(np.angle(eigenvalues)), axis=-1)
    first, second = folded[:, 0::2], folded[:, 1::2]
    mismatch = float(np.max(np.abs(first - second))) if first.size else 0.0
    if mismatch > tolerances["pairing"]:
        raise SamplingError(f"eigenvalues do not pair into conjugates (mismatch {mismatch:.3e})")

    clamp = tolerances["clamp"]
    angles = np.clip((first + second) / 2, clamp, np.pi - clamp)
    return angles[0] if single else angles


def sample(ensemble: str, N: int, rng: RngStream) -> EigenSample:
    """Eigenangles of one Haar draw"""
    ensemble = check_ensemble(ensemble)
    _check_N(N)
    angles = eigenangles(ensemble, _draw(ensemble, N, [rng.generator()]))[0]
    return EigenSample(ensemble, N, angles)


def sample_many(ensemble: str, N: int, samples: int, seed: int, stream_offset: int = 0) -> np.ndarray:
    """(samples, N) eigenangles; row i is exactly sample(ensemble, N, RngStream(seed, stream_offset + i))"""
    ensemble = check_ensemble(ensemble)
    _check_N(N)
    if samples < 1:
        raise InvalidArgumentError(f"samples must be positive, got {samples}")
    generators = [RngStream(seed, stream_offset + i).generator() for i in range(samples)]
    logger.debug("drawing %d %s matrices with N=%d from stream %d", samples, ensemble, N, stream_offset)
    return eigenangles(ensemble, _draw(ensemble, N, generators))


# -- One-level density -----------------------------------------------------------

def weyl_density(ensemble: str, theta) -> np.ndarray:
    """Eigenangle density on [0, pi] at N = 1"""
    ensemble = check_ensemble(ensemble)
    theta = np.asarray(theta, dtype=float)
    if ensemble == SO_EVEN:
        return np.full_like(theta, 1 / np.pi)
    if ensemble == USP:
        return 2 / np.pi * np.sin(theta) ** 2
    return (1 - np.cos(theta)) / np.pi


def weyl_cdf(ensemble: str) -> Callable[[np.ndarray], np.ndarray]:
    """Distribution function of the N = 1 eigenangle, usable with scipy.stats.kstest"""
    ensemble = check_ensemble(ensemble)
    if ensemble == SO_EVEN:
        return lambda theta: np.asarray(theta) / np.pi
    if ensemble == USP:
        return lambda theta: (np.asarray(theta) - np.sin(theta) * np.cos(theta)) / np.pi
    return lambda theta: (np.asarray(theta) - np.sin(theta)) / np.pi


def density_histogram(ensemble: str, N: int, samples: int, bins: int = 30,
                      seed: int = run_defaults["seed"], x_max: float = 3.0,
                      chunk_size: int = run_defaults["chunk_size"]) -> pd.DataFrame:
    """Binned eigenangle density in units of the mean spacing, x = theta N / pi"""
    ensemble = check_ensemble(ensemble)
    _check_N(N)
    if bins < 1:
        raise InvalidArgumentError(f"bins must be positive, got {bins}")
    if samples < 1:
        raise InvalidArgumentError(f"samples must be positive, got {samples}")
    if x_max <= 0:
        raise InvalidArgumentError("x_max must be positive")

    edges = np.linspace(0.0, x_max, bins + 1)
    counts = np.zeros(bins, dtype=np.int64)
    for start in range(0, samples, chunk_size):
        angles = sample_many(ensemble, N, min(chunk_size, samples - start), seed, stream_offset=start)
        counts += np.histogram(angles.ravel() * N / np.pi, bins=edges)[0]

    width = np.diff(edges)
    return pd.DataFrame({
        "bin_left": edges[:-1],
        "bin_right": edges[1:],
        "count": counts,
        "density": counts / (samples * width),
    })
