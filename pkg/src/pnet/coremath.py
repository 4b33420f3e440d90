"""Exact rational helpers, vector p-functions and the QFI matrix container.

Coefficients of the target function are kept as :class:`fractions.Fraction`
end to end; floats only appear once a bound or a Fisher-information matrix
is evaluated.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import ValidationError

RationalLike = Union[int, str, Fraction]

#: relative tolerance for real-valued comparisons
REL_TOL = 1e-9


def to_rational(value: RationalLike) -> Fraction:
    """Parse ``value`` into a Fraction.

    Floats are rejected on purpose: a coefficient like ``0.1`` has no exact
    binary representation and would silently corrupt the Diophantine target.
    """
    if isinstance(value, bool):
        raise ValidationError(f"not a rational: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"not a rational: {value!r}") from exc
    raise ValidationError(f"not a rational: {value!r} (floats are not accepted)")


def format_rational(q: Fraction) -> str:
    """Serialize as ``"p/q"``, or ``"p"`` when the denominator is 1."""
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def schatten_p(v: Sequence[float], p: float) -> float:
    """Return ``(sum_i |v_i|**p) ** (1/p)``.

    For ``p < 1`` this is not a norm (no triangle inequality) but it is the
    quantity the separable phase bound is written in.
    """
    arr = np.abs(np.asarray(v, dtype=float).ravel())
    if arr.size == 0:
        raise ValidationError("empty input")
    if not p > 0:
        raise ValidationError(f"p must be positive, got {p}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("non-finite entry")
    scale = arr.max()
    if scale == 0.0:
        return 0.0
    # factor out the max entry to keep the power sum in range
    return float(scale * np.sum((arr / scale) ** p) ** (1.0 / p))


@dataclass(frozen=True)
class CoefficientVector:
    """Canonical coefficient vector of ``q = alpha . theta``.

    ``entries`` are already canonicalized so that the positive part carries
    at least as much one-norm as the negative part; ``flipped`` records
    whether the caller's vector was negated to get there.  Index sets are
    0-based.
    """

    entries: tuple[Fraction, ...]
    pos_set: tuple[int, ...]
    neg_set: tuple[int, ...]
    flipped: bool = False

    def __post_init__(self) -> None:
        d = len(self.entries)
        if set(self.pos_set) | set(self.neg_set) != set(range(d)):
            raise ValidationError("sign sets must cover every index")
        if set(self.pos_set) & set(self.neg_set):
            raise ValidationError("sign sets overlap")
        if all(a == 0 for a in self.entries):
            raise ValidationError("degenerate function")
        for j in self.pos_set:
            if self.entries[j] < 0:
                raise ValidationError(f"index {j} is negative but listed in P")
        for j in self.neg_set:
            if self.entries[j] >= 0:
                raise ValidationError(f"index {j} is non-negative but listed in N")
        if self.norm1_pos < self.norm1_neg:
            raise ValidationError("non-canonical: ||alpha||_{1,N} > ||alpha||_{1,P}")

    @property
    def d(self) -> int:
        return len(self.entries)

    @property
    def norm1_pos(self) -> Fraction:
        return restricted_one_norm(self, self.pos_set)

    @property
    def norm1_neg(self) -> Fraction:
        return restricted_one_norm(self, self.neg_set)

    @property
    def norm1(self) -> Fraction:
        return self.norm1_pos + self.norm1_neg

    @property
    def norm0(self) -> int:
        return sum(1 for a in self.entries if a != 0)

    @property
    def norm2_sq(self) -> Fraction:
        return sum((a * a for a in self.entries), Fraction(0))

    @property
    def signs(self) -> tuple[int, ...]:
        """+1 for indices in P, -1 for indices in N."""
        neg = set(self.neg_set)
        return tuple(-1 if j in neg else 1 for j in range(self.d))

    def as_array(self) -> np.ndarray:
        return np.array([float(a) for a in self.entries])

    def original(self) -> tuple[Fraction, ...]:
        """The coefficients as the caller supplied them (undoing the flip)."""
        if self.flipped:
            return tuple(-a for a in self.entries)
        return self.entries

    def unflip(self, q: float) -> float:
        """Map an estimate of the canonical function back to the caller's."""
        return -q if self.flipped else q

    def to_strings(self) -> list[str]:
        return [format_rational(a) for a in self.original()]


def restricted_one_norm(alpha: CoefficientVector, S: Iterable[int]) -> Fraction:
    """Exact ``sum_{i in S} |alpha_i|``; zero for an empty index set."""
    total = Fraction(0)
    d = len(alpha.entries)
    for i in S:
        if not 0 <= i < d:
            raise IndexError(f"index {i} out of range for d={d}")
        total += abs(alpha.entries[i])
    return total


def partition_signs(raw: Sequence[RationalLike]) -> CoefficientVector:
    """Build a canonical :class:`CoefficientVector` from raw coefficients.

    The vector is negated (and ``flipped`` set) when its negative part has the
    larger one-norm.  Ties keep the input orientation.
    """
    if isinstance(raw, CoefficientVector):
        raw = raw.original()
    entries = [to_rational(a) for a in raw]
    if not entries:
        raise ValidationError("empty input")
    if all(a == 0 for a in entries):
        raise ValidationError("degenerate function")
    pos_mass = sum((a for a in entries if a > 0), Fraction(0))
    neg_mass = -sum((a for a in entries if a < 0), Fraction(0))
    flipped = neg_mass > pos_mass
    if flipped:
        entries = [-a for a in entries]
    pos = tuple(j for j, a in enumerate(entries) if a >= 0)
    neg = tuple(j for j, a in enumerate(entries) if a < 0)
    return CoefficientVector(tuple(entries), pos, neg, flipped)


@dataclass(frozen=True)
class QfiMatrix:
    """Symmetric PSD quantum Fisher information matrix (d x d, float64)."""

    entries: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        F = np.array(self.entries, dtype=float)
        if F.ndim != 2 or F.shape[0] != F.shape[1] or F.shape[0] == 0:
            raise ValidationError(f"QFI must be a non-empty square matrix, got {F.shape}")
        scale = max(float(np.max(np.abs(F))), 1.0)
        if np.max(np.abs(F - F.T)) > 1e-12 * scale:
            raise ValidationError("QFI matrix is not symmetric")
        F = 0.5 * (F + F.T)
        lo = float(np.linalg.eigvalsh(F).min())
        if lo < -1e-9 * scale:
            raise ValidationError(f"QFI matrix is not PSD (min eigenvalue {lo:.3e})")
        F.setflags(write=False)
        object.__setattr__(self, "entries", F)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def max_rel_deviation(self, other: "QfiMatrix | np.ndarray") -> float:
        """Sup-norm distance to ``other`` relative to the larger sup-norm."""
        B = other.entries if isinstance(other, QfiMatrix) else np.asarray(other, dtype=float)
        scale = max(np.max(np.abs(self.entries)), np.max(np.abs(B)))
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(self.entries - B)) / scale)

    def tolist(self) -> list[list[float]]:
        return self.entries.tolist()
