"""Closed-form mean-square-error bounds for phase and displacement sensing.

All phase-sensing quantities are computed from the exact one-norms of the
canonical coefficient vector; the displacement bounds only need the two-norm
and the one-norm.  Where a bound is rational (phase sensing with rational
``t``) an exact :class:`~fractions.Fraction` can be requested.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Optional, Sequence, Union

from .coremath import CoefficientVector, partition_signs, schatten_p
from .errors import ValidationError

Coupling = Literal["phase", "displacement"]
Control = Literal["discrete", "arbitrary"]
Number = Union[int, float, Fraction]

#: Qubit-network column of the comparison table, kept as reference text only.
QUBIT_REFERENCE = {
    "MSE (separable)": "||alpha||_2^2 / t^2",
    "MSE (entangled)": "||alpha||_inf^2 / t^2",
    "Entanglement needed (discrete controls)": "k >= max(ceil(||alpha||_1/||alpha||_inf), ceil(||alpha||_0/M))",
    "Entanglement needed (arbitrary controls)": "||alpha||_1/||alpha||_inf in (k-1, k]",
}


def _positive(name: str, value: Number) -> None:
    if not value > 0:
        raise ValidationError(f"{name} must be positive, got {value}")


def _canonical(alpha) -> CoefficientVector:
    return alpha if isinstance(alpha, CoefficientVector) else partition_signs(alpha)


def entangled_phase_bound(
    alpha, N: int, t: Number = 1, *, as_fraction: bool = False
) -> Union[float, Fraction]:
    """``max(||alpha||_{1,P}, ||alpha||_{1,N})**2 / (N t)**2``.

    With ``as_fraction=True`` the result is exact; ``t`` must then be an int
    or a Fraction.
    """
    alpha = _canonical(alpha)
    _positive("N", N)
    _positive("t", t)
    top = max(alpha.norm1_pos, alpha.norm1_neg)
    if as_fraction:
        if isinstance(t, float):
            raise ValidationError("exact bound needs a rational t")
        return top**2 / (Fraction(N) * Fraction(t)) ** 2
    return float(top) ** 2 / (N * float(t)) ** 2


def separable_phase_bound(alpha, N: int, t: Number = 1) -> float:
    """``||alpha||_{2/3}**2 / (N t)**2`` for the optimal separable photon split."""
    alpha = _canonical(alpha)
    _positive("N", N)
    _positive("t", t)
    return schatten_p(alpha.as_array(), 2.0 / 3.0) ** 2 / (N * float(t)) ** 2


def _squeeze_gain(nbar: float) -> float:
    # 4 * Var(p) of the optimal single-mode state with mean photon number nbar
    return (math.sqrt(nbar) + math.sqrt(nbar + 1.0)) ** 2


def entangled_displacement_bound(alpha, nbar: float, t: Number = 1, exact: bool = False) -> float:
    """Displacement-sensing bound with an average photon number ``nbar``.

    The default is the leading-order ``||alpha||_2**2 / (4 nbar t**2)``.
    ``exact=True`` uses the single-mode optimum ``(sqrt(n)+sqrt(n+1))**2`` in
    place of ``4 n``, which is what the squeezed-state network attains and is
    also defined at ``nbar == 0``.
    """
    alpha = _canonical(alpha)
    _positive("t", t)
    n2 = float(alpha.norm2_sq)
    if exact:
        if nbar < 0:
            raise ValidationError(f"nbar must be non-negative, got {nbar}")
        return n2 / (float(t) ** 2 * _squeeze_gain(nbar))
    _positive("nbar", nbar)
    return n2 / (4.0 * nbar * float(t) ** 2)


def separable_displacement_bound(alpha, nbar: float, t: Number = 1) -> float:
    """``||alpha||_1**2 / (4 nbar t**2)``."""
    alpha = _canonical(alpha)
    _positive("nbar", nbar)
    _positive("t", t)
    return float(alpha.norm1) ** 2 / (4.0 * nbar * float(t) ** 2)


@dataclass(frozen=True)
class DualVector:
    """Minimizer of the Fock-restricted seminorm subject to ``alpha . beta = 1``.

    ``objective`` is ``N (beta_max - beta_min)`` in photon units.
    """

    entries: tuple[Fraction, ...]
    objective: Fraction

    def __post_init__(self) -> None:
        if any(b.denominator == 0 for b in self.entries):
            raise ValidationError("bad dual vector")


def solve_beta_star_phase(alpha, N: int) -> DualVector:
    """Closed-form solution of the seminorm minimax for number coupling.

    Only two boundary points can be optimal: all of the weight on the
    positive modes (``beta_j = 1/||alpha||_{1,P}`` on P) or all of it on the
    negative modes.  Ties go to the positive side.
    """
    alpha = _canonical(alpha)
    _positive("N", N)
    p_mass, n_mass = alpha.norm1_pos, alpha.norm1_neg
    use_pos = n_mass == 0 or p_mass >= n_mass
    beta = [Fraction(0)] * alpha.d
    if use_pos:
        for j in alpha.pos_set:
            beta[j] = 1 / p_mass
        objective = Fraction(N) / p_mass
    else:
        for j in alpha.neg_set:
            beta[j] = -1 / n_mass
        objective = Fraction(N) / n_mass
    return DualVector(tuple(beta), objective)


@dataclass(frozen=True)
class SeparableAllocation:
    """Per-mode resource split for a separable protocol.

    ``weights`` are the real-valued optimal allocations; for phase sensing
    ``rounded`` holds a largest-remainder integer rounding and ``flagged``
    is set when that rounding worsens the attainable MSE by more than 1%.
    """

    coupling: str
    weights: tuple[float, ...]
    rounded: Optional[tuple[int, ...]] = None
    mse_weights: float = math.nan
    mse_rounded: float = math.nan
    flagged: bool = False


def _largest_remainder(weights: Sequence[float], total: int) -> tuple[int, ...]:
    floors = [math.floor(w) for w in weights]
    short = total - sum(floors)
    order = sorted(range(len(weights)), key=lambda j: (-(weights[j] - floors[j]), j))
    for j in order[:short]:
        floors[j] += 1
    return tuple(floors)


def _separable_phase_mse(alpha: CoefficientVector, eta: Sequence[float], t: float) -> float:
    total = 0.0
    for a, n in zip(alpha.entries, eta):
        if a == 0:
            continue
        if n <= 0:
            return math.inf
        total += float(a) ** 2 / (n * t) ** 2
    return total


def separable_photon_allocation(
    alpha, budget: Number, coupling: Coupling, t: Number = 1
) -> SeparableAllocation:
    """Optimal separable division of photons (or mean photons) between modes.

    Phase sensing puts ``eta_j ∝ |alpha_j|**(2/3)`` photons on mode j;
    displacement sensing puts ``nbar_j ∝ |alpha_j|``.  Zero coefficients get
    nothing.
    """
    alpha = _canonical(alpha)
    _positive("budget", budget)
    mags = [abs(float(a)) for a in alpha.entries]
    if coupling == "phase":
        if int(budget) != budget:
            raise ValidationError("phase sensing needs an integer photon number")
        shares = [m ** (2.0 / 3.0) for m in mags]
        s = sum(shares)
        weights = tuple(float(budget) * x / s for x in shares)
        rounded = _largest_remainder(weights, int(budget))
        mse_w = _separable_phase_mse(alpha, weights, float(t))
        mse_r = _separable_phase_mse(alpha, rounded, float(t))
        flagged = not (mse_r <= 1.01 * mse_w)
        return SeparableAllocation("phase", weights, rounded, mse_w, mse_r, flagged)
    if coupling == "displacement":
        s = sum(mags)
        weights = tuple(float(budget) * m / s for m in mags)
        mse = sum(m * m / (4.0 * w * float(t) ** 2) for m, w in zip(mags, weights) if m > 0)
        return SeparableAllocation("displacement", weights, None, mse, mse, False)
    raise ValidationError(f"unknown coupling {coupling!r}")


def min_entanglement(alpha, M: int, coupling: Coupling, control: Control) -> int:
    """Smallest k such that some optimal protocol needs only k-mode entanglement.

    A value of 1 means no entanglement is needed.
    """
    alpha = _canonical(alpha)
    _positive("M", M)
    if control == "arbitrary":
        return {"phase": 2, "displacement": 1}[coupling]
    if control != "discrete":
        raise ValidationError(f"unknown control model {control!r}")
    spread = -(-alpha.norm0 // M)
    if coupling == "phase":
        return spread + 1
    if coupling == "displacement":
        return spread
    raise ValidationError(f"unknown coupling {coupling!r}")


@dataclass(frozen=True)
class BoundReport:
    coupling: str
    entangled_mse: float
    separable_mse: float
    ratio: float
    resources: dict = field(default_factory=dict)
    entanglement_discrete: int = 0
    entanglement_arbitrary: int = 0

    def __post_init__(self) -> None:
        if not (self.entangled_mse > 0 and self.separable_mse > 0):
            raise ValidationError("bounds must be positive")
        if self.entangled_mse > self.separable_mse * (1 + 1e-12):
            raise ValidationError("entangled bound exceeds separable bound")

    def to_dict(self) -> dict:
        return {
            "coupling": self.coupling,
            "resources": dict(self.resources),
            "MSE (separable)": self.separable_mse,
            "MSE (entangled)": self.entangled_mse,
            "ratio": self.ratio,
            "Entanglement needed (discrete controls)": self.entanglement_discrete,
            "Entanglement needed (arbitrary controls)": self.entanglement_arbitrary,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BoundReport":
        return cls(
            coupling=data["coupling"],
            entangled_mse=float(data["MSE (entangled)"]),
            separable_mse=float(data["MSE (separable)"]),
            ratio=float(data["ratio"]),
            resources=dict(data["resources"]),
            entanglement_discrete=int(data["Entanglement needed (discrete controls)"]),
            entanglement_arbitrary=int(data["Entanglement needed (arbitrary controls)"]),
        )


def bound_report(
    alpha,
    *,
    N: Optional[int] = None,
    nbar: Optional[float] = None,
    t: Optional[Number] = None,
    M: int = 1,
) -> list[BoundReport]:
    """One :class:`BoundReport` per coupling whose budget was supplied.

    ``t`` defaults to ``M`` (unit time per pass).
    """
    alpha = _canonical(alpha)
    if N is None and nbar is None:
        raise ValidationError("supply N (phase) and/or nbar (displacement)")
    t = M if t is None else t
    reports = []
    if N is not None:
        ent = entangled_phase_bound(alpha, N, t)
        sep = separable_phase_bound(alpha, N, t)
        reports.append(
            BoundReport(
                "phase", ent, sep, sep / ent,
                {"N": N, "t": float(t), "M": M, "d": alpha.d},
                min_entanglement(alpha, M, "phase", "discrete"),
                min_entanglement(alpha, M, "phase", "arbitrary"),
            )
        )
    if nbar is not None:
        ent = entangled_displacement_bound(alpha, nbar, t)
        sep = separable_displacement_bound(alpha, nbar, t)
        reports.append(
            BoundReport(
                "displacement", ent, sep, sep / ent,
                {"N_bar": float(nbar), "t": float(t), "M": M, "d": alpha.d},
                min_entanglement(alpha, M, "displacement", "discrete"),
                min_entanglement(alpha, M, "displacement", "arbitrary"),
            )
        )
    return reports


CSV_FIELDS = [
    "alpha", "coupling", "budget", "t", "M", "d",
    "mse_entangled", "mse_separable", "ratio",
    "entanglement_discrete", "entanglement_arbitrary",
]


def reports_to_csv(alpha, reports: Sequence[BoundReport]) -> str:
    """CSV text, one row per (alpha, budget) pair."""
    alpha = _canonical(alpha)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    label = " ".join(alpha.to_strings())
    for rep in reports:
        res = rep.resources
        budget = res.get("N", res.get("N_bar"))
        writer.writerow([
            label, rep.coupling, budget, repr(res["t"]), res["M"], res["d"],
            repr(rep.entangled_mse), repr(rep.separable_mse), repr(rep.ratio),
            rep.entanglement_discrete, rep.entanglement_arbitrary,
        ])
    return buf.getvalue()
