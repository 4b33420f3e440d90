"""Sparse Fock-space simulation of fixed-photon-number probes.

States live on ``d`` sensing modes plus one reference mode (always the last
entry of an occupation vector).  Amplitudes are stored sparsely, keyed by
occupation tuples; omega-family probes only ever occupy two basis states, but
arbitrary superpositions are accepted so the finite-difference oracle can be
exercised on general inputs.

Mid-protocol controls are never built as matrices.  Their action on an
omega-family state is a branch-preserving relabelling of the two basis
states, which is all the Fisher-information calculation depends on.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .coremath import CoefficientVector, QfiMatrix, partition_signs
from .errors import ValidationError

Occupation = tuple[int, ...]


@dataclass(frozen=True)
class FockState:
    """Pure state with exactly ``N`` photons over ``d + 1`` modes."""

    N: int
    amplitudes: Mapping[Occupation, complex] = field(repr=False)

    def __post_init__(self) -> None:
        amps = {tuple(int(c) for c in k): complex(v) for k, v in self.amplitudes.items()}
        if not amps:
            raise ValidationError("empty state")
        widths = {len(k) for k in amps}
        if len(widths) != 1 or widths.pop() < 2:
            raise ValidationError("occupation vectors must share a length >= 2")
        for k in amps:
            if min(k) < 0 or sum(k) != self.N:
                raise ValidationError(f"occupation {k} does not hold {self.N} photons")
        norm = sum(abs(a) ** 2 for a in amps.values())
        if abs(norm - 1.0) > 1e-12:
            raise ValidationError(f"state is not normalized (norm^2 = {norm!r})")
        object.__setattr__(self, "amplitudes", MappingProxyType(amps))

    @property
    def d(self) -> int:
        """Number of sensing modes (the reference mode is excluded)."""
        return len(next(iter(self.amplitudes))) - 1

    def to_json(self) -> list[dict]:
        return [
            {"occupation": list(k), "re": v.real, "im": v.imag}
            for k, v in sorted(self.amplitudes.items(), reverse=True)
        ]

    @classmethod
    def from_json(cls, data: Sequence[Mapping]) -> "FockState":
        if not data:
            raise ValidationError("empty state")
        amps = {}
        for item in data:
            key = tuple(int(c) for c in item["occupation"])
            amps[key] = amps.get(key, 0j) + complex(float(item["re"]), float(item["im"]))
        return cls(sum(next(iter(amps))), amps)


def _as_omega(omega: Sequence[int]) -> tuple[int, ...]:
    out = []
    for w in omega:
        if isinstance(w, bool) or int(w) != w:
            raise ValidationError("invalid omega: entries must be integers")
        out.append(int(w))
    if not out:
        raise ValidationError("invalid omega: empty")
    return tuple(out)


def check_omega(omega: Sequence[int], N: int, alpha: Optional[CoefficientVector] = None) -> tuple[int, ...]:
    """Validate an omega vector against the family constraints.

    Positive entries go to branch one and must total ``N``; magnitudes of the
    negative entries (branch two) may total at most ``N``.  When ``alpha`` is
    given, every entry must also agree in sign with its coefficient.
    """
    omega = _as_omega(omega)
    if N < 1:
        raise ValidationError("invalid omega: N must be positive")
    if alpha is not None:
        if len(omega) != alpha.d:
            raise ValidationError("invalid omega: length does not match alpha")
        for j, s in enumerate(alpha.signs):
            if omega[j] * s < 0:
                raise ValidationError(f"invalid omega: entry {j} has the wrong sign")
    if sum(w for w in omega if w > 0) != N:
        raise ValidationError("invalid omega: positive part must hold N photons")
    if -sum(w for w in omega if w < 0) > N:
        raise ValidationError("invalid omega: negative part exceeds N")
    return omega


def branch_keys(omega: Sequence[int], N: int) -> tuple[Occupation, Occupation]:
    """Occupation vectors of the two branches of the omega-family state."""
    omega = _as_omega(omega)
    first = tuple(max(w, 0) for w in omega) + (0,)
    neg = tuple(max(-w, 0) for w in omega)
    second = neg + (N - sum(neg),)
    return first, second


def make_probe(
    omega: Sequence[int],
    N: int,
    phase: float = 0.0,
    alpha: Optional[CoefficientVector] = None,
) -> FockState:
    """Equal-weight two-branch probe labelled by ``omega`` with relative phase ``phase``."""
    omega = check_omega(omega, N, alpha)
    b1, b2 = branch_keys(omega, N)
    amp = 1.0 / math.sqrt(2.0)
    return FockState(N, {b1: complex(amp), b2: amp * cmath.exp(1j * phase)})


def apply_encoding(state: FockState, theta: Sequence[float]) -> FockState:
    """One pass of ``exp(-i n . theta)``; the reference mode accrues no phase."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (state.d,):
        raise ValidationError(f"theta must have length {state.d}")
    out = {}
    for k, v in state.amplitudes.items():
        out[k] = v * cmath.exp(-1j * float(np.dot(k[:-1], theta)))
    return FockState(state.N, out)


def _identify_branches(state: FockState, pos_set: Sequence[int]) -> tuple[Occupation, Occupation]:
    keys = list(state.amplitudes)
    N = state.N
    if len(keys) != 2:
        raise ValidationError("not an omega-family state")
    first = [k for k in keys if sum(k[j] for j in pos_set) == N and k[-1] == 0]
    second = [k for k in keys if sum(k[j] for j in pos_set) == 0]
    if len(first) != 1 or len(second) != 1 or first[0] == second[0]:
        raise ValidationError("not an omega-family state")
    a1, a2 = state.amplitudes[first[0]], state.amplitudes[second[0]]
    if abs(abs(a1) - abs(a2)) > 1e-12:
        raise ValidationError("not an omega-family state")
    return first[0], second[0]


def switch_family(state: FockState, omega_next: Sequence[int], alpha) -> FockState:
    """Coherently move both branches onto the family labelled by ``omega_next``.

    Each branch keeps its amplitude, so the relative phase is untouched.
    """
    alpha = alpha if isinstance(alpha, CoefficientVector) else partition_signs(alpha)
    omega_next = check_omega(omega_next, state.N, alpha)
    old1, old2 = _identify_branches(state, alpha.pos_set)
    new1, new2 = branch_keys(omega_next, state.N)
    return FockState(state.N, {new1: state.amplitudes[old1], new2: state.amplitudes[old2]})


def interbranch_phase(state: FockState, alpha) -> float:
    """Phase of branch two relative to branch one, in ``[0, 2 pi)``."""
    alpha = alpha if isinstance(alpha, CoefficientVector) else partition_signs(alpha)
    k1, k2 = _identify_branches(state, alpha.pos_set)
    return cmath.phase(state.amplitudes[k2] / state.amplitudes[k1]) % (2 * math.pi)


def overlap(a: FockState, b: FockState) -> complex:
    """``<a|b>``."""
    return sum((v.conjugate() * b.amplitudes.get(k, 0j) for k, v in a.amplitudes.items()), 0j)


def number_moments(state: FockState) -> tuple[np.ndarray, np.ndarray]:
    """Means and covariance matrix of the ``d + 1`` number operators."""
    keys = np.array(list(state.amplitudes), dtype=float)
    probs = np.array([abs(v) ** 2 for v in state.amplitudes.values()])
    means = probs @ keys
    second = (keys * probs[:, None]).T @ keys
    return means, second - np.outer(means, means)


def positive_mass_variance(state: FockState, alpha) -> float:
    """``Var(sum_{j in P} n_j)``; equals ``N**2 / 4`` on every optimal probe."""
    alpha = alpha if isinstance(alpha, CoefficientVector) else partition_signs(alpha)
    _, cov = number_moments(state)
    idx = list(alpha.pos_set)
    return float(cov[np.ix_(idx, idx)].sum())


def qfi_numeric_static(state: FockState, M: int = 1) -> QfiMatrix:
    """QFI of ``M`` uncontrolled passes: ``4 M**2`` times the sensing covariance."""
    if M < 1:
        raise ValidationError("M must be positive")
    _, cov = number_moments(state)
    d = state.d
    return QfiMatrix(4.0 * M * M * cov[:d, :d])


def simulate_passes(
    omegas: Sequence[Sequence[int]], N: int, alpha, theta: Sequence[float], phase: float = 0.0
) -> list[FockState]:
    """States just before each pass, plus the final state after the last pass.

    Between passes the state is switched onto the next family in ``omegas``.
    """
    alpha = alpha if isinstance(alpha, CoefficientVector) else partition_signs(alpha)
    if not omegas:
        raise ValidationError("schedule has no passes")
    states = [make_probe(omegas[0], N, phase, alpha)]
    for m in range(len(omegas)):
        after = apply_encoding(states[-1], theta)
        if m + 1 < len(omegas) and tuple(omegas[m + 1]) != tuple(omegas[m]):
            after = switch_family(after, omegas[m + 1], alpha)
        states.append(after)
    return states


def _apply_number(vec: dict, j: int) -> dict:
    return {k: v * k[j] for k, v in vec.items() if k[j]}


def _inner(bra: FockState, vec: dict) -> complex:
    return sum((v.conjugate() * vec.get(k, 0j) for k, v in bra.amplitudes.items()), 0j)


def qfi_numeric_schedule(schedule, theta0: Optional[Sequence[float]] = None) -> QfiMatrix:
    """QFI of a controlled multi-pass schedule by explicit simulation.

    Evaluates ``4 sum_{l,m} Cov(n_i(l), n_j(m))`` where ``n_j(m)`` is the
    number operator in the Heisenberg picture just before pass ``m``.  The
    two-time correlators are obtained by propagating ``n_j |psi_m>`` forward
    through the encoding passes and branch relabellings.  ``schedule`` needs
    ``alpha``, ``N`` and ``pass_sequence()``.
    """
    alpha = schedule.alpha
    N = schedule.N
    omegas = [tuple(w) for w in schedule.pass_sequence()]
    M = len(omegas)
    d = alpha.d
    if any(len(w) != d for w in omegas):
        raise ValidationError("schedule/state mismatch: column length differs from alpha")
    theta = np.zeros(d) if theta0 is None else np.asarray(theta0, dtype=float)
    states = simulate_passes(omegas, N, alpha, theta)[:M]
    keys = [branch_keys(w, N) for w in omegas]

    def step(vec: dict, m: int) -> dict:
        # encoding pass m followed by the relabelling onto family m + 1
        out = {}
        for k, v in vec.items():
            v = v * cmath.exp(-1j * float(np.dot(k[:-1], theta)))
            if m + 1 < M:
                if k == keys[m][0]:
                    k = keys[m + 1][0]
                elif k == keys[m][1]:
                    k = keys[m + 1][1]
                else:
                    raise ValidationError("schedule/state mismatch: vector left the branch span")
            out[k] = out.get(k, 0j) + v
        return out

    means = np.zeros((M, d))
    for m, st in enumerate(states):
        means[m] = number_moments(st)[0][:d]

    # corr[i, j] = sum_{l,m} Re <n_i(l) n_j(m)>
    corr = np.zeros((d, d))
    for m in range(M):
        base = dict(states[m].amplitudes)
        for j in range(d):
            vec = _apply_number(base, j)
            for l in range(m, M):
                for i in range(d):
                    val = _inner(states[l], _apply_number(vec, i)).real
                    if l == m:
                        corr[i, j] += val
                    else:
                        # l > m term and its mirrored l < m partner share a real part
                        corr[i, j] += val
                        corr[j, i] += val
                if l + 1 < M:
                    vec = step(vec, l)
    total_means = means.sum(axis=0)
    F = 4.0 * (corr - np.outer(total_means, total_means))
    return QfiMatrix(0.5 * (F + F.T))


def schedule_protocol(schedule) -> Callable[[np.ndarray], FockState]:
    """Closure mapping ``theta`` to the final state of ``schedule``."""
    omegas = [tuple(w) for w in schedule.pass_sequence()]

    def run(theta: np.ndarray) -> FockState:
        return simulate_passes(omegas, schedule.N, schedule.alpha, theta)[-1]

    return run


def qfi_fidelity_oracle(
    protocol: Callable[[np.ndarray], FockState], theta0: Sequence[float], h: float = 1e-3
) -> QfiMatrix:
    """Finite-difference QFI from state overlaps.

    Uses ``f(D) = |<psi(theta0)|psi(theta0 + D)>|**2 ≈ 1 - D^T F D / 4`` and
    second-order central differences, so the error is ``O(h**2)``.
    """
    if not 1e-5 <= h <= 1e-2:
        raise ValidationError("h must lie in [1e-5, 1e-2]")
    theta0 = np.asarray(theta0, dtype=float)
    d = theta0.size
    ref = protocol(theta0)

    def f(delta: np.ndarray) -> float:
        return abs(overlap(ref, protocol(theta0 + delta))) ** 2

    eye = np.eye(d) * h
    F = np.zeros((d, d))
    for i in range(d):
        F[i, i] = -2.0 * (f(eye[i]) - 2.0 + f(-eye[i])) / h**2
        for j in range(i):
            mixed = (
                f(eye[i] + eye[j]) - f(eye[i] - eye[j]) - f(-eye[i] + eye[j]) + f(-eye[i] - eye[j])
            ) / (4.0 * h * h)
            F[i, j] = F[j, i] = -2.0 * mixed
    # clip round-off below the PSD tolerance
    w, v = np.linalg.eigh(F)
    return QfiMatrix((v * np.clip(w, 0.0, None)) @ v.T)


def relative_phase(schedule, theta: Sequence[float]) -> float:
    """Accumulated interbranch phase ``(W r) . theta`` (not wrapped)."""
    wr = schedule.phase_vector()
    return float(np.dot(np.array([int(x) for x in wr], dtype=float), np.asarray(theta, dtype=float)))
