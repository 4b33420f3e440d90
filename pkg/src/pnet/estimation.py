"""Parity read-out and multi-stage robust phase estimation.

A stage with multiplier ``m`` interrogates ``m * phi``; its two fringe
quadratures (control phases 0 and pi/2) give an arctangent estimate of
``m * phi mod 2 pi``, and the branch closest to the previous stage's
estimate is kept.  Multipliers double from stage to stage, so every stage
only has to resolve a factor-two ambiguity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .bounds import entangled_phase_bound
from .errors import ValidationError
from .fock import relative_phase

TWO_PI = 2.0 * math.pi

#: documented worst-case overhead of the non-adaptive construction
RPE_OVERHEAD = (24.26 * math.pi) ** 2

#: default repetition rule nu_j = 2 (a (K - j) + b)
DEFAULT_NU_SLOPE = 5
DEFAULT_NU_FLOOR = 1

# oracle(multiplier, delta, rng, size) -> array of +-1 outcomes
PhaseOracle = Callable[[int, float, np.random.Generator, int], np.ndarray]


def parity_outcome_prob(phi_tot: float, delta: float) -> float:
    """Probability of the +1 parity outcome."""
    return 0.5 * (1.0 + math.cos(phi_tot + delta))


def wrap(phi):
    """Map angles into ``(-pi, pi]``."""
    out = np.mod(np.asarray(phi, dtype=float) + math.pi, TWO_PI) - math.pi
    out = np.where(out == -math.pi, math.pi, out)
    return out if out.ndim else float(out)


def parity_oracle(phi: float) -> PhaseOracle:
    """Sampler for a two-branch state whose interbranch phase is ``multiplier * phi``."""

    def sample(multiplier: int, delta: float, rng: np.random.Generator, size: int) -> np.ndarray:
        p = parity_outcome_prob(multiplier * phi, delta)
        return np.where(rng.random(size) < p, 1, -1)

    return sample


@dataclass(frozen=True)
class RpeSchedule:
    """Stage sizes ``N_j`` (doubling) and repetitions ``nu_j`` (even, split over two quadratures)."""

    N: tuple[int, ...]
    nu: tuple[int, ...]

    def __post_init__(self) -> None:
        N = tuple(int(n) for n in self.N)
        nu = tuple(int(v) for v in self.nu)
        if not N or len(N) != len(nu):
            raise ValidationError("invalid RPE schedule: N and nu must be non-empty and equal length")
        if N[0] < 1 or any(b != 2 * a for a, b in zip(N, N[1:])):
            raise ValidationError("invalid RPE schedule: stage sizes must start positive and double")
        if any(v < 2 or v % 2 for v in nu):
            raise ValidationError("invalid RPE schedule: repetitions must be even and at least 2")
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "nu", nu)

    @property
    def K(self) -> int:
        return len(self.N)

    @property
    def total(self) -> int:
        return sum(n * v for n, v in zip(self.N, self.nu))

    @property
    def multipliers(self) -> tuple[int, ...]:
        return tuple(n // self.N[0] for n in self.N)

    @classmethod
    def default(cls, K: int, N1: int = 1, slope: int = DEFAULT_NU_SLOPE, floor: int = DEFAULT_NU_FLOOR):
        """More repetitions early, where a wrong branch costs the most."""
        if K < 1:
            raise ValidationError("invalid RPE schedule: K must be positive")
        N = tuple(N1 << j for j in range(K))
        nu = tuple(2 * (slope * (K - 1 - j) + floor) for j in range(K))
        return cls(N, nu)

    @classmethod
    def for_budget(cls, budget: int, N1: int = 1, slope: int = DEFAULT_NU_SLOPE, floor: int = DEFAULT_NU_FLOOR):
        """Deepest default schedule that fits ``budget``, topped up with extra pairs.

        Spare resources go to the latest stage that can still afford a pair
        of shots.  The total equals the budget whenever the leftover is a
        multiple of ``2 * N1``.
        """
        base = cls.default(1, N1, slope, floor)
        if base.total > budget:
            raise ValidationError(f"invalid RPE schedule: budget {budget} below minimum {base.total}")
        K = 1
        while cls.default(K + 1, N1, slope, floor).total <= budget:
            K += 1
        sched = cls.default(K, N1, slope, floor)
        nu = list(sched.nu)
        spare = budget - sched.total
        for j in range(K - 1, -1, -1):
            pairs = spare // (2 * sched.N[j])
            nu[j] += 2 * pairs
            spare -= 2 * pairs * sched.N[j]
        return cls(sched.N, tuple(nu))

    def to_dict(self) -> dict:
        return {"N": list(self.N), "nu": list(self.nu)}


def _refine(prev, angle, m: int):
    """Pick the branch ``(angle + 2 pi k) / m`` closest to ``prev`` on the circle."""
    base = angle / m
    k = np.round((prev - base) * m / TWO_PI)
    return base + TWO_PI * k / m


def rpe_estimate(oracle: PhaseOracle, schedule: RpeSchedule, rng: np.random.Generator) -> float:
    """One robust-phase-estimation run; returns an estimate in ``[0, 2 pi)``."""
    est = None
    for m, nu in zip(schedule.multipliers, schedule.nu):
        half = nu // 2
        c = float(np.mean(oracle(m, 0.0, rng, half)))
        s = -float(np.mean(oracle(m, 0.5 * math.pi, rng, half)))
        angle = math.atan2(s, c) % TWO_PI
        est = angle / m if est is None else float(_refine(est, angle, m))
    return est % TWO_PI


def rpe_estimate_batch(phi, schedule: RpeSchedule, trials: int, rng: np.random.Generator) -> np.ndarray:
    """``trials`` independent runs against a parity source with true phase ``phi``.

    Statistically identical to calling :func:`rpe_estimate` with
    :func:`parity_oracle`, but draws binomial counts per stage.
    """
    phi = np.broadcast_to(np.asarray(phi, dtype=float), (trials,))
    est = None
    for m, nu in zip(schedule.multipliers, schedule.nu):
        half = nu // 2
        p_cos = 0.5 * (1.0 + np.cos(m * phi))
        p_sin = 0.5 * (1.0 - np.sin(m * phi))
        c = 2.0 * rng.binomial(half, p_cos) / half - 1.0
        s = 1.0 - 2.0 * rng.binomial(half, p_sin) / half
        angle = np.mod(np.arctan2(s, c), TWO_PI)
        est = angle / m if est is None else _refine(est, angle, m)
    return np.mod(est, TWO_PI)


@dataclass(frozen=True)
class EstimationResult:
    q_true: float
    q_hat: float
    mse_empirical: float
    stderr: float
    trials: int
    bound: float
    ratio: float
    total_photons: int
    out_of_range: bool = False

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def estimate_function_phase(
    schedule,
    theta: Sequence[float],
    rpe: RpeSchedule,
    trials: int,
    rng: np.random.Generator,
) -> EstimationResult:
    """Monte-Carlo estimate of ``q = alpha . theta`` with a saturating schedule.

    Stage ``j`` runs the schedule with every column scaled by
    ``N_j / N_1`` (so ``N_j / N_1`` times the photons), which multiplies the
    accumulated phase ``(W r) . theta`` by the same factor.  The final phase
    estimate is mapped back through ``q = phi ||alpha||_{1,P} / (N M)``.
    """
    if trials < 2:
        raise ValidationError("need at least 2 trials")
    alpha = schedule.alpha
    N, M = schedule.N, schedule.M
    theta = np.asarray(theta, dtype=float)
    phi = relative_phase(schedule, theta)
    scale = float(alpha.norm1_pos) / (N * M)
    sign = alpha.unflip(1.0)
    q_true = sign * float(alpha.as_array() @ theta)

    phi_hat = wrap(rpe_estimate_batch(phi, rpe, trials, rng))
    q_hat = sign * phi_hat * scale
    err2 = (q_hat - q_true) ** 2
    total = N * rpe.total
    bound = entangled_phase_bound(alpha, total, t=M)
    mse = float(err2.mean())
    return EstimationResult(
        q_true=q_true,
        q_hat=float(q_hat.mean()),
        mse_empirical=mse,
        stderr=float(err2.std(ddof=1) / math.sqrt(trials)),
        trials=trials,
        bound=bound,
        ratio=mse / bound,
        total_photons=total,
        out_of_range=bool(abs(phi) >= math.pi),
    )


def single_phase_mse(phi: float, total: int, trials: int, rng: np.random.Generator) -> tuple[float, float]:
    """Circular MSE (and its standard error) of RPE on one mode with ``total`` photons."""
    sched = RpeSchedule.for_budget(total)
    err2 = wrap(rpe_estimate_batch(phi, sched, trials, rng) - phi) ** 2
    return float(err2.mean()), float(err2.std(ddof=1) / math.sqrt(trials))


def scaling_fit(points: Sequence[tuple[float, float]]) -> tuple[float, float, float]:
    """Least-squares line through ``(log resource, log mse)``: slope, intercept, r^2."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
        raise ValidationError("need at least two (resource, mse) points")
    if np.any(pts <= 0):
        raise ValidationError("resources and MSE values must be positive")
    x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2
