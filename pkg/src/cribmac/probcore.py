"""Joint distributions over named finite alphabets and information measures.

Everything is in bits (log base 2) with the convention 0 log 0 = 0.  Values
are immutable after construction and all operations are pure, so they can be
shared freely across parallel workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Constructors renormalize mass drifting by at most RENORM_ATOL and reject
# anything worse: small drift is float noise, large drift is a user error.
RENORM_ATOL = 1e-9
STRICT_ATOL = 1e-12

# A mutual information this far below zero signals a bug, not rounding.
NEG_MI_GUARD = 1e-10


def entropy_bits(p) -> float:
    """Shannon entropy in bits of an array of probabilities (any shape)."""
    p = np.asarray(p, dtype=float).ravel()
    nz = p[p > 0.0]
    return float(-np.dot(nz, np.log2(nz)))


def binary_entropy(p: float) -> float:
    """H_b(p) = -p log2 p - (1-p) log2 (1-p)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"binary_entropy argument must be in [0,1], got {p}")
    return entropy_bits([p, 1.0 - p])


def entropy_rows(p: np.ndarray) -> np.ndarray:
    """Entropy in bits along the last axis of an array of distributions."""
    p = np.asarray(p, dtype=float)
    logs = np.zeros_like(p)
    np.log2(p, out=logs, where=p > 0.0)
    return -(p * logs).sum(axis=-1)


@dataclass(frozen=True)
class Alphabet:
    """A named finite alphabet; symbols are the integers 0..size-1."""

    name: str
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"alphabet {self.name!r} needs size >= 1, got {self.size}")


class JointPMF:
    """Dense joint pmf over an ordered list of named axes.

    ``mass[i1, ..., ik]`` is P(axis_1 = i1, ..., axis_k = ik).  Entries must
    be nonnegative and sum to one; sums within ``RENORM_ATOL`` of one are
    renormalized, anything further off is rejected.
    """

    __slots__ = ("axes", "mass")

    def __init__(self, axes: Sequence[Alphabet], mass, _trusted: bool = False):
        axes = tuple(axes)
        names = [a.name for a in axes]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate axis names: {names}")
        mass = np.asarray(mass, dtype=float)
        expected = tuple(a.size for a in axes)
        if mass.shape != expected:
            raise ValueError(f"mass shape {mass.shape} != alphabet sizes {expected}")
        if not _trusted:
            mass = mass.copy()
            if mass.min(initial=0.0) < -STRICT_ATOL:
                raise ValueError(f"negative probability mass: min={mass.min()}")
            np.clip(mass, 0.0, None, out=mass)
            total = mass.sum()
            if abs(total - 1.0) > RENORM_ATOL:
                raise ValueError(f"mass sums to {total}, not 1 within {RENORM_ATOL}")
            if total != 1.0:
                mass = mass / total
        mass.setflags(write=False)
        self.axes = axes
        self.mass = mass

    # -- basic introspection -------------------------------------------------

    @property
    def axis_names(self) -> tuple:
        return tuple(a.name for a in self.axes)

    def _positions(self, names: Iterable[str] | str) -> tuple:
        if isinstance(names, str):
            names = (names,)
        lookup = {a.name: i for i, a in enumerate(self.axes)}
        out = []
        for name in names:
            if name not in lookup:
                raise ValueError(f"unknown axis {name!r}; have {self.axis_names}")
            out.append(lookup[name])
        if len(set(out)) != len(out):
            raise ValueError(f"repeated axis in {tuple(names)}")
        return tuple(out)

    def __repr__(self):
        return f"JointPMF(axes={self.axis_names}, shape={self.mass.shape})"

    # -- marginals -----------------------------------------------------------

    def marginal_array(self, keep: Iterable[str] | str) -> np.ndarray:
        """Marginal mass over `keep`, axes in this pmf's order."""
        keep_pos = set(self._positions(keep))
        if not keep_pos:
            raise ValueError("keep must be a nonempty axis set")
        drop = tuple(i for i in range(len(self.axes)) if i not in keep_pos)
        return self.mass.sum(axis=drop) if drop else self.mass


def project(j: JointPMF, keep: Iterable[str] | str) -> JointPMF:
    """Marginalize onto the `keep` axes (kept in j's axis order)."""
    if isinstance(keep, str):
        keep = (keep,)
    keep_set = set(keep)
    kept_axes = [a for a in j.axes if a.name in keep_set]
    return JointPMF(kept_axes, j.marginal_array(keep), _trusted=True)


def entropy(j: JointPMF, axes: Iterable[str] | str | None = None) -> float:
    """H(axes) in bits; `axes=None` means the full joint."""
    if axes is None:
        return entropy_bits(j.mass)
    return entropy_bits(j.marginal_array(axes))


def conditional_entropy(j: JointPMF, target, given=()) -> float:
    """H(target | given) = H(target, given) - H(given)."""
    target = (target,) if isinstance(target, str) else tuple(target)
    given = (given,) if isinstance(given, str) else tuple(given)
    if set(target) & set(given):
        raise ValueError(f"target {target} and given {given} overlap")
    j._positions(target + given)  # validates names and disjointness
    if not given:
        return entropy(j, target)
    return entropy(j, target + given) - entropy(j, given)


def mutual_information(j: JointPMF, a, b, given=()) -> float:
    """I(a; b | given) in bits, clamped to zero on tiny negative round-off."""
    a = (a,) if isinstance(a, str) else tuple(a)
    b = (b,) if isinstance(b, str) else tuple(b)
    given = (given,) if isinstance(given, str) else tuple(given)
    sets = [set(a), set(b), set(given)]
    if (sets[0] & sets[1]) or (sets[0] & sets[2]) or (sets[1] & sets[2]):
        raise ValueError(f"axis sets must be pairwise disjoint: {a}, {b}, {given}")
    value = conditional_entropy(j, a, given) - conditional_entropy(j, a, b + given)
    if value < 0.0:
        if value < -NEG_MI_GUARD:
            raise ValueError(f"mutual information {value} < -{NEG_MI_GUARD}: invalid pmf?")
        value = 0.0
    return value


def product_pmf(parts: Sequence[tuple[Alphabet, np.ndarray]]) -> JointPMF:
    """Independent product of single-axis distributions."""
    axes = [ax for ax, _ in parts]
    mass = np.array(1.0)
    for _, p in parts:
        mass = np.multiply.outer(mass, np.asarray(p, dtype=float))
    return JointPMF(axes, mass.reshape([ax.size for ax in axes]))
