"""Covariance-matrix simulation of displacement sensing.

Quadratures follow ``x = (a^dag + a)/2`` and ``p = i(a^dag - a)/2``, so
``[x, p] = i/2``, vacuum variances are 1/4 and a pass ``exp(-i theta p)``
shifts ``<x>`` by ``-theta/2``.  Phase-space vectors are interleaved as
``(x_1, p_1, x_2, p_2, ...)``.

The entangled protocol squeezes one mode in ``p`` (amplifying the
``x`` precision), spreads it over ``d`` modes with an orthogonal network whose
first column is ``w = alpha/||alpha||_2`` and reads out ``w . x`` by
homodyne detection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .bounds import entangled_displacement_bound, separable_displacement_bound
from .coremath import CoefficientVector, QfiMatrix, partition_signs
from .errors import ValidationError

SeedLike = Union[int, np.random.SeedSequence, None]

#: shots drawn per independent stream in the Monte-Carlo estimators
CHUNK = 1 << 14


def symplectic_form(n: int) -> np.ndarray:
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True)
class GaussianState:
    """First moments and covariance matrix of an ``n``-mode Gaussian state."""

    mean: np.ndarray = field(repr=False)
    cov: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        mean = np.array(self.mean, dtype=float).ravel()
        cov = np.array(self.cov, dtype=float)
        n2 = mean.size
        if n2 == 0 or n2 % 2 or cov.shape != (n2, n2):
            raise ValidationError("need a 2n mean vector and a 2n x 2n covariance")
        scale = max(float(np.max(np.abs(cov))), 1.0)
        if np.max(np.abs(cov - cov.T)) > 1e-12 * scale:
            raise ValidationError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        # Robertson-Schroedinger: cov + (i/4) Omega must be PSD
        herm = cov + 0.25j * symplectic_form(n2 // 2)
        lo = float(np.linalg.eigvalsh(herm).min())
        if lo < -1e-9 * scale:
            raise ValidationError(f"covariance violates the uncertainty principle ({lo:.3e})")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def num_modes(self) -> int:
        return self.mean.size // 2

    def var_x(self) -> np.ndarray:
        return np.diag(self.cov)[0::2].copy()

    def var_p(self) -> np.ndarray:
        return np.diag(self.cov)[1::2].copy()

    def uncertainty_products(self) -> np.ndarray:
        """``Var(x_j) Var(p_j)`` per mode; never below 1/16."""
        return self.var_x() * self.var_p()

    def mean_photons(self) -> float:
        """Total ``<n>`` summed over modes."""
        return float(np.trace(self.cov) + self.mean @ self.mean - self.num_modes / 2)

    def x_block(self) -> tuple[np.ndarray, np.ndarray]:
        return self.mean[0::2].copy(), self.cov[0::2, 0::2].copy()

    def p_block(self) -> tuple[np.ndarray, np.ndarray]:
        return self.mean[1::2].copy(), self.cov[1::2, 1::2].copy()

    def displaced(self, shift: Sequence[float]) -> "GaussianState":
        return GaussianState(self.mean + np.asarray(shift, dtype=float), self.cov)


def vacuum(n: int = 1) -> GaussianState:
    return GaussianState(np.zeros(2 * n), 0.25 * np.eye(2 * n))


def squeezed_variance(nbar: float) -> float:
    """``Var(p)`` of the squeezed vacuum holding ``nbar`` photons."""
    return (math.sqrt(nbar) + math.sqrt(nbar + 1.0)) ** 2 / 4.0


def squeezed_vacuum(nbar: float) -> GaussianState:
    """Pure single-mode state, anti-squeezed in ``p`` and squeezed in ``x``."""
    if not nbar >= 0 or not math.isfinite(nbar):
        raise ValidationError(f"mean photon number must be non-negative, got {nbar}")
    xi = squeezed_variance(nbar)
    return GaussianState(np.zeros(2), np.diag([1.0 / (16.0 * xi), xi]))


def mixing_matrix(w: Sequence[float]) -> np.ndarray:
    """Orthogonal matrix with first column ``w`` (a Householder reflection)."""
    w = np.asarray(w, dtype=float).ravel()
    if w.size == 0 or abs(float(w @ w) - 1.0) > 1e-9:
        raise ValidationError("weight vector must have unit 2-norm")
    e1 = np.zeros_like(w)
    e1[0] = 1.0
    v = e1 - w
    vv = float(v @ v)
    if vv < 1e-30:
        return np.eye(w.size)
    return np.eye(w.size) - 2.0 * np.outer(v, v) / vv


def distribute(state: GaussianState, w: Sequence[float]) -> GaussianState:
    """Spread a single-mode state over ``len(w)`` modes with weights ``w``.

    The input occupies the first port of a passive network whose other
    ports see vacuum; mode ``j`` then carries ``w_j`` of the original
    quadratures.  Passive optics preserve the total photon number.
    """
    if state.num_modes != 1:
        raise ValidationError("distribute expects a single-mode input")
    T = mixing_matrix(w)
    d = T.shape[0]
    S = np.kron(T, np.eye(2))
    mean0 = np.zeros(2 * d)
    mean0[:2] = state.mean
    cov0 = 0.25 * np.eye(2 * d)
    cov0[:2, :2] = state.cov
    return GaussianState(S @ mean0, S @ cov0 @ S.T)


def apply_displacement_encoding(state: GaussianState, theta: Sequence[float], M: int = 1) -> GaussianState:
    """Apply ``M`` passes of ``exp(-i theta . p)``: ``<x_j>`` moves by ``-M theta_j / 2``."""
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size != state.num_modes:
        raise ValidationError("theta length must equal the number of modes")
    shift = np.zeros(2 * state.num_modes)
    shift[0::2] = -0.5 * M * theta
    return state.displaced(shift)


def homodyne_sample(
    state: GaussianState,
    quadrature: str = "x",
    rng: Optional[np.random.Generator] = None,
    size: Optional[int] = None,
) -> np.ndarray:
    """Joint homodyne record of one quadrature on every mode.

    Returns an array of shape ``(num_modes,)`` or ``(size, num_modes)``.
    """
    if quadrature not in ("x", "p"):
        raise ValidationError("quadrature must be 'x' or 'p'")
    rng = rng if rng is not None else np.random.default_rng()
    mean, cov = state.x_block() if quadrature == "x" else state.p_block()
    L = np.linalg.cholesky(cov)
    shape = (1 if size is None else size, mean.size)
    out = mean + rng.standard_normal(shape) @ L.T
    return out[0] if size is None else out


@dataclass
class RunningMoments:
    """Streaming mean and variance with an order-independent merge."""

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, values: np.ndarray) -> "RunningMoments":
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return cls()
        mu = float(values.mean())
        return cls(values.size, mu, float(((values - mu) ** 2).sum()))

    def merge(self, other: "RunningMoments") -> "RunningMoments":
        if other.n == 0:
            return RunningMoments(self.n, self.mean, self.m2)
        if self.n == 0:
            return RunningMoments(other.n, other.mean, other.m2)
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        return RunningMoments(n, mean, m2)

    @property
    def variance(self) -> float:
        return self.m2 / (self.n - 1) if self.n > 1 else 0.0

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.n) if self.n > 0 else math.inf


def chunk_streams(seed: SeedLike, shots: int) -> list[tuple[np.random.Generator, int]]:
    """Independent generators, one per chunk of at most ``CHUNK`` shots."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    sizes = [CHUNK] * (shots // CHUNK) + ([shots % CHUNK] if shots % CHUNK else [])
    return [(np.random.default_rng(child), n) for child, n in zip(ss.spawn(len(sizes)), sizes)]


@dataclass(frozen=True)
class DisplacementEstimate:
    q_true: float
    q_hat: float
    q_stderr: float
    mse: float
    mse_stderr: float
    shots: int


@dataclass(frozen=True)
class DisplacementProtocol:
    """Single squeezed mode distributed with weights ``alpha / ||alpha||_2``."""

    alpha: CoefficientVector
    nbar: float
    M: int = 1
    initial_displacement: Optional[tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if not isinstance(self.alpha, CoefficientVector):
            object.__setattr__(self, "alpha", partition_signs(self.alpha))
        if not self.nbar >= 0:
            raise ValidationError("mean photon number must be non-negative")
        if self.M < 1:
            raise ValidationError("M must be positive")

    @property
    def weights(self) -> np.ndarray:
        a = self.alpha.as_array()
        return a / np.linalg.norm(a)

    def probe(self) -> GaussianState:
        state = distribute(squeezed_vacuum(self.nbar), self.weights)
        if self.initial_displacement is not None:
            state = state.displaced(self.initial_displacement)
        return state

    def estimator(self, x: np.ndarray, x_probe: np.ndarray) -> np.ndarray:
        """Unbiased ``q`` estimate from x-homodyne records (rows are shots)."""
        norm2 = math.sqrt(float(self.alpha.norm2_sq))
        return (-2.0 / self.M) * norm2 * ((x - x_probe) @ self.weights)

    def bound(self, exact: bool = True) -> float:
        return entangled_displacement_bound(self.alpha, self.nbar, t=self.M, exact=exact)


def _run_shots(sample_q, q_true: float, shots: int, seed: SeedLike) -> DisplacementEstimate:
    if shots < 2:
        raise ValidationError("need at least 2 shots")
    qs, errs = RunningMoments(), RunningMoments()
    for rng, n in chunk_streams(seed, shots):
        q = sample_q(rng, n)
        qs = qs.merge(RunningMoments.of(q))
        errs = errs.merge(RunningMoments.of((q - q_true) ** 2))
    return DisplacementEstimate(q_true, qs.mean, qs.stderr, errs.mean, errs.stderr, shots)


def estimate_q_displacement(
    protocol: DisplacementProtocol,
    theta: Sequence[float],
    shots: int,
    seed: SeedLike = None,
) -> DisplacementEstimate:
    """Monte-Carlo MSE of the entangled protocol (one homodyne record per shot)."""
    theta = np.asarray(theta, dtype=float)
    # the protocol runs on the canonical coefficients; flip back at the end
    sign = protocol.alpha.unflip(1.0)
    q_true = sign * float(protocol.alpha.as_array() @ theta)
    probe = protocol.probe()
    x_probe, _ = probe.x_block()
    encoded = apply_displacement_encoding(probe, theta, protocol.M)

    def sample_q(rng, n):
        return sign * protocol.estimator(homodyne_sample(encoded, "x", rng, n), x_probe)

    return _run_shots(sample_q, q_true, shots, seed)


def gaussian_qfi(protocol: DisplacementProtocol) -> QfiMatrix:
    """``4 M^2 Cov(p_i, p_j)`` of the distributed probe."""
    _, cov_p = protocol.probe().p_block()
    return QfiMatrix(4.0 * protocol.M**2 * cov_p)


def separable_allocation(alpha: CoefficientVector, nbar: float) -> np.ndarray:
    a = np.abs(alpha.as_array())
    return a * nbar / a.sum()


def separable_displacement_protocol(
    alpha,
    nbar: float,
    M: int,
    shots: int,
    seed: SeedLike = None,
    theta: Optional[Sequence[float]] = None,
) -> DisplacementEstimate:
    """Independent squeezed probes per mode, combined classically."""
    alpha = alpha if isinstance(alpha, CoefficientVector) else partition_signs(alpha)
    if M < 1:
        raise ValidationError("M must be positive")
    a = alpha.as_array()
    theta = np.zeros(alpha.d) if theta is None else np.asarray(theta, dtype=float)
    alloc = separable_allocation(alpha, nbar)
    xi = np.array([squeezed_variance(n) for n in alloc])
    sd_x = 1.0 / (4.0 * np.sqrt(xi))
    mean_x = -0.5 * M * theta
    q_true = float(a @ theta)

    def sample_q(rng, n):
        x = mean_x + rng.standard_normal((n, alpha.d)) * sd_x
        return (-2.0 / M) * (x @ a)

    return _run_shots(sample_q, q_true, shots, seed)


def separable_bound(alpha, nbar: float, M: int) -> float:
    return separable_displacement_bound(alpha, nbar, t=M)
