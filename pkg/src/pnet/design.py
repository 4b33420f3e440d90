"""Protocol synthesis for phase sensing.

An optimal controlled protocol spends ``r_n`` of its ``M`` passes in the
two-branch family labelled by column ``omega_n`` of ``W``.  It saturates the
bound exactly when ``W r = N M alpha / ||alpha||_{1,P}``, so finding one is
an integer feasibility problem.  The search here is exhaustive: a returned
"infeasible" is a proof for the given column set.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence

import numpy as np

from . import _kernels
from .coremath import CoefficientVector, QfiMatrix, format_rational, partition_signs, to_rational
from .errors import InconclusiveError, InfeasibleError, ValidationError
from .fock import check_omega

DEFAULT_OMEGA_LIMIT = 10**6
DEFAULT_NODE_BUDGET = 10**8


def _canonical(alpha) -> CoefficientVector:
    return alpha if isinstance(alpha, CoefficientVector) else partition_signs(alpha)


def target_vector(alpha, N: int, M: int) -> tuple[Fraction, ...]:
    """``N M alpha / ||alpha||_{1,P}`` in exact arithmetic."""
    alpha = _canonical(alpha)
    scale = Fraction(N * M) / alpha.norm1_pos
    return tuple(a * scale for a in alpha.entries)


def feasibility_precheck(alpha, N: int, M: int) -> bool:
    """True iff the phase target is an integer vector (necessary for any schedule)."""
    if N < 1 or M < 1:
        raise ValidationError("N and M must be positive")
    return all(x.denominator == 1 for x in target_vector(alpha, N, M))


def entanglement_per_pass(omega: Sequence[int], N: int) -> int:
    """Number of modes entangled in the family state labelled by ``omega``.

    A mode factors out exactly when it holds the same photon number in both
    branches, so this counts the sensing modes with ``omega_j != 0`` plus
    the reference mode when branch two leaves photons in it.
    """
    support = sum(1 for w in omega if w != 0)
    ref = N + sum(w for w in omega if w < 0)
    return max(support + (1 if ref > 0 else 0), 1)


def omega_set_size(alpha, N: int, support_cap: Optional[int] = None) -> int:
    """Exact number of columns ``build_omega_set`` would enumerate."""
    alpha = _canonical(alpha)
    p, n = len(alpha.pos_set), len(alpha.neg_set)
    if support_cap is None:
        return math.comb(N + p - 1, p - 1) * math.comb(N + n, n)
    total = 0
    for a in range(1, min(p, N) + 1):
        head = math.comb(p, a) * math.comb(N - 1, a - 1)
        tail = 0
        for b in range(0, min(n, N) + 1):
            if a + b + 1 <= support_cap:
                tail += math.comb(n, b) * math.comb(N, b)
            elif a + b <= support_cap and b >= 1:
                # only the compositions that empty the reference mode
                tail += math.comb(n, b) * math.comb(N - 1, b - 1)
        total += head * tail
    return total


def _enumerate(signs: Sequence[int], N: int, cap: Optional[int]) -> Iterator[tuple[int, ...]]:
    d = len(signs)
    pos_after = [0] * (d + 1)
    for j in range(d - 1, -1, -1):
        pos_after[j] = pos_after[j + 1] + (signs[j] > 0)
    cur = [0] * d

    def rec(j: int, p_left: int, n_left: int, support: int):
        if cap is not None and support > cap:
            return
        if j == d:
            if p_left == 0:
                if cap is None or support + (n_left > 0) <= cap:
                    yield tuple(cur)
            return
        if signs[j] > 0:
            lo = p_left if pos_after[j + 1] == 0 else 0
            for v in range(p_left, lo - 1, -1):
                cur[j] = v
                yield from rec(j + 1, p_left - v, n_left, support + (v != 0))
        else:
            for v in range(0, n_left + 1):
                cur[j] = -v
                yield from rec(j + 1, p_left, n_left - v, support + (v != 0))
        cur[j] = 0

    yield from rec(0, N, N, 0)


@dataclass(frozen=True)
class OmegaSet:
    """Column set ``W``, in descending lexicographic order."""

    alpha: CoefficientVector
    N: int
    columns: tuple[tuple[int, ...], ...]
    support_cap: Optional[int] = None

    def __len__(self) -> int:
        return len(self.columns)

    def matrix(self) -> np.ndarray:
        """``W`` with one row per column vector (shape ``|W| x d``)."""
        return np.array(self.columns, dtype=np.int64).reshape(len(self.columns), self.alpha.d)


def build_omega_set(
    alpha,
    N: int,
    support_cap: Optional[int] = None,
    limit: int = DEFAULT_OMEGA_LIMIT,
) -> OmegaSet:
    """Enumerate every admissible omega, optionally capping per-pass entanglement.

    The size is computed combinatorially first, so an oversized request fails
    before any enumeration happens.
    """
    alpha = _canonical(alpha)
    if N < 1:
        raise ValidationError("N must be positive")
    if support_cap is not None and support_cap < 1:
        raise ValidationError("support_cap must be positive")
    size = omega_set_size(alpha, N, support_cap)
    if size > limit:
        raise ValidationError(
            f"omega set too large; supply support_cap ({size} columns > limit {limit})"
        )
    cols = tuple(_enumerate(alpha.signs, N, support_cap))
    assert len(cols) == size
    return OmegaSet(alpha, N, cols, support_cap)


@dataclass(frozen=True)
class ProtocolSchedule:
    """Columns of ``W`` with pass counts ``r``.

    Construction only checks structure; :meth:`violations` reports whether the
    schedule actually hits its target.  Schedules returned by
    :func:`solve_schedule` always have no violations.
    """

    omega_set: OmegaSet
    r: tuple[int, ...]
    M: int

    def __post_init__(self) -> None:
        r = tuple(int(x) for x in self.r)
        if len(r) != len(self.omega_set.columns):
            raise ValidationError("r must have one entry per column")
        if any(x < 0 for x in r):
            raise ValidationError("r must be non-negative")
        object.__setattr__(self, "r", r)

    @property
    def alpha(self) -> CoefficientVector:
        return self.omega_set.alpha

    @property
    def N(self) -> int:
        return self.omega_set.N

    @property
    def target(self) -> tuple[Fraction, ...]:
        return target_vector(self.alpha, self.N, self.M)

    def pass_sequence(self) -> list[tuple[int, ...]]:
        seq = []
        for col, count in zip(self.omega_set.columns, self.r):
            seq.extend([col] * count)
        return seq

    def phase_vector(self) -> tuple[int, ...]:
        """``W r`` (exact integers)."""
        out = [0] * self.alpha.d
        for col, count in zip(self.omega_set.columns, self.r):
            if count:
                for j, w in enumerate(col):
                    out[j] += w * count
        return tuple(out)

    def abs_phase_vector(self) -> tuple[int, ...]:
        """``|W| r``, the per-mode photon-pass totals."""
        return tuple(abs(x) for x in self.phase_vector())

    def violations(self) -> list[str]:
        problems = []
        if sum(self.r) != self.M:
            problems.append(f"sum(r) = {sum(self.r)} != M = {self.M}")
        if tuple(Fraction(x) for x in self.phase_vector()) != self.target:
            problems.append("W r does not equal N M alpha / ||alpha||_{1,P}")
        for col in self.omega_set.columns:
            try:
                check_omega(col, self.N, self.alpha)
            except ValidationError as exc:
                problems.append(f"column {list(col)}: {exc}")
        return problems

    def target_residual(self) -> float:
        """Sup-norm of ``W r - target`` relative to ``N M``."""
        wr = self.phase_vector()
        return float(max(abs(Fraction(a) - b) for a, b in zip(wr, self.target))) / (self.N * self.M)

    def to_dict(self, with_qfi: bool = True) -> dict:
        used = [(c, k) for c, k in zip(self.omega_set.columns, self.r) if k]
        out = {
            "alpha": self.alpha.to_strings(),
            "N": self.N,
            "M": self.M,
            "columns": [list(c) for c, _ in used],
            "r": [k for _, k in used],
        }
        if self.omega_set.support_cap is not None:
            out["support_cap"] = self.omega_set.support_cap
        if with_qfi:
            F = schedule_qfi_analytic(self)
            out["qfi"] = F.tolist()
            out["residual"] = check_saturation_phase(F, self.alpha, self.N, self.M)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ProtocolSchedule":
        """Rebuild from :meth:`to_dict` output.  Targets are not enforced here."""
        try:
            alpha = partition_signs([to_rational(a) for a in data["alpha"]])
            N, M = int(data["N"]), int(data["M"])
            cols = tuple(tuple(int(x) for x in c) for c in data["columns"])
            r = tuple(int(x) for x in data["r"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed schedule: {exc}") from exc
        if any(len(c) != alpha.d for c in cols):
            raise ValidationError("malformed schedule: column length differs from alpha")
        ws = OmegaSet(alpha, N, cols, data.get("support_cap"))
        return cls(ws, r, M)


def _node_budget(node_budget: Optional[int]) -> int:
    if node_budget is not None:
        return int(node_budget)
    env = os.environ.get("PNET_NODE_BUDGET")
    return int(env) if env else DEFAULT_NODE_BUDGET


def kernel_inputs(omega_set: OmegaSet, M: int):
    """Arrays consumed by the search kernels: ``|W|``, suffix maxima, ``|target|`` and the N-mode mask."""
    alpha = omega_set.alpha
    target = np.array([abs(int(x)) for x in target_vector(alpha, omega_set.N, M)], dtype=np.int64)
    cols = np.ascontiguousarray(np.abs(omega_set.matrix()))
    sufmax = np.zeros((len(cols) + 1, alpha.d), dtype=np.int64)
    sufmax[:-1] = np.maximum.accumulate(cols[::-1], axis=0)[::-1]
    negmask = np.array([s < 0 for s in alpha.signs], dtype=np.uint8)
    return cols, sufmax, target, negmask


def solve_schedule(
    omega_set: OmegaSet, M: int, node_budget: Optional[int] = None
) -> ProtocolSchedule:
    """Find ``r >= 0`` with ``sum(r) = M`` and ``W r = N M alpha / ||alpha||_{1,P}``.

    Raises :class:`InfeasibleError` when the exhaustive search proves no
    solution exists over these columns and :class:`InconclusiveError` when the
    node budget runs out first.
    """
    alpha, N = omega_set.alpha, omega_set.N
    if M < 1:
        raise ValidationError("M must be positive")
    if not feasibility_precheck(alpha, N, M):
        raise InfeasibleError("N M alpha / ||alpha||_{1,P} is not an integer vector")
    if len(omega_set) == 0:
        raise InfeasibleError("empty omega set")
    cols, sufmax, target, negmask = kernel_inputs(omega_set, M)
    kernel = _kernels.dfs_solve
    if N * M >= 2**62:
        kernel = _kernels.python_dfs_solve
    status, picks, nodes = kernel(cols, sufmax, target, negmask, N, M, _node_budget(node_budget))
    if status == 1:
        raise InfeasibleError(f"no schedule with M={M} passes over {len(cols)} columns")
    if status == 2:
        raise InconclusiveError(f"inconclusive: node budget exhausted after {nodes} nodes")
    r = [0] * len(cols)
    for n in picks:
        r[int(n)] += 1
    sched = ProtocolSchedule(omega_set, tuple(r), M)
    assert not sched.violations()
    return sched


def design_schedule(
    alpha,
    N: int,
    M: int,
    support_cap: Optional[int] = None,
    omega_limit: int = DEFAULT_OMEGA_LIMIT,
    node_budget: Optional[int] = None,
) -> ProtocolSchedule:
    """Precheck, enumerate and solve in one call."""
    alpha = _canonical(alpha)
    if not feasibility_precheck(alpha, N, M):
        raise InfeasibleError("N M alpha / ||alpha||_{1,P} is not an integer vector")
    ws = build_omega_set(alpha, N, support_cap, omega_limit)
    return solve_schedule(ws, M, node_budget)


def schedule_qfi_analytic(schedule: ProtocolSchedule) -> QfiMatrix:
    """Closed-form QFI of a family schedule.

    ``F_ij = s_i s_j S_i S_j`` where ``S = |W| r`` and ``s`` is +1 on P and
    -1 on N, i.e. positive within a sign class and negative across.
    """
    S = np.array(schedule.abs_phase_vector(), dtype=float)
    sign = np.array(schedule.alpha.signs, dtype=float)
    v = sign * S
    return QfiMatrix(np.outer(v, v))


def check_saturation_phase(F, alpha, N: int, M: int) -> float:
    """Sup-norm residual of ``sum_{i in P} F_ij = (N M)**2 alpha_j / ||alpha||_{1,P}``.

    Normalized by ``(N M)**2``; zero means the QFI saturates the bound.
    """
    alpha = _canonical(alpha)
    F = F.entries if isinstance(F, QfiMatrix) else np.asarray(F, dtype=float)
    if F.shape != (alpha.d, alpha.d):
        raise ValidationError("QFI dimension does not match alpha")
    scale = float((N * M) ** 2)
    lhs = F[list(alpha.pos_set), :].sum(axis=0)
    rhs = scale * alpha.as_array() / float(alpha.norm1_pos)
    return float(np.max(np.abs(lhs - rhs)) / scale)


def check_saturation_quad(F, alpha, nbar: float, M: int) -> float:
    """Relative sup-norm distance of ``F`` from ``4 M**2 nbar alpha alpha^T / ||alpha||_2**2``.

    The distance is normalized by the larger of the two sup-norms, so it is
    0 for the ideal rank-one matrix and 1 when the target vanishes.  The
    condition only holds asymptotically in ``nbar``.
    """
    alpha = _canonical(alpha)
    F = F.entries if isinstance(F, QfiMatrix) else np.asarray(F, dtype=float)
    a = alpha.as_array()
    target = 4.0 * M * M * nbar * np.outer(a, a) / float(alpha.norm2_sq)
    scale = max(np.max(np.abs(F)), np.max(np.abs(target)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(F - target)) / scale)


def schedule_summary_rationals(schedule: ProtocolSchedule) -> list[str]:
    """The target vector as rational strings."""
    return [format_rational(x) for x in schedule.target]
