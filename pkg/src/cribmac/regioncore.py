"""Channel specifications, cribbing factorizations, and the region bounds.

A channel is memoryless with law W(y|x1,x2); each encoder leaks a
deterministic function z_l = g_l(x_l) of its input to the other encoder.
A factorization fixes one feasible input law

    Case A:  P(u) P(x1,z1|u) P(x2,z2|u)
    Case B:  P(u) P(x1,z1|u) P(x2,z2|z1,u)

and the four rate bounds evaluated on the assembled joint cut a pentagon
out of the nonnegative quadrant.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import probcore
from .probcore import Alphabet, JointPMF

ROW_ATOL = 1e-9           # row-stochastic drift tolerated and renormalized
SUPPORT_ATOL = 1e-12      # mass off the z=g(x) support beyond this is an error
CLAMP_ATOL = 1e-10        # bounds this far below zero clamp; worse is a bug

AXIS_ORDER = ("U", "X1", "Z1", "X2", "Z2", "Y")


def _canonical_map(g, size: int) -> np.ndarray:
    """Relabel the image of g onto 0..k-1 (ascending original codes)."""
    g = np.asarray(g, dtype=int)
    if g.shape != (size,):
        raise ValueError(f"cribbing map must have shape ({size},), got {g.shape}")
    if g.min() < 0:
        raise ValueError("cribbing map values must be nonnegative")
    _, relabeled = np.unique(g, return_inverse=True)
    return relabeled.astype(int)


def _stochastic(table: np.ndarray, what: str) -> np.ndarray:
    """Validate rows of `table` (last axis) as distributions; renormalize drift."""
    table = np.asarray(table, dtype=float).copy()
    if table.min(initial=0.0) < -SUPPORT_ATOL:
        raise ValueError(f"{what} has negative entries (min {table.min()})")
    np.clip(table, 0.0, None, out=table)
    sums = table.sum(axis=-1)
    if np.abs(sums - 1.0).max() > ROW_ATOL:
        bad = np.unravel_index(np.abs(sums - 1.0).argmax(), sums.shape)
        raise ValueError(f"{what} row {bad} sums to {sums[bad]}, not 1")
    table /= sums[..., None]
    return table


@dataclass(frozen=True)
class ChannelSpec:
    """Memoryless two-user MAC with deterministic cribbing maps.

    transition[x1, x2, y] = W(y | x1, x2); g1 and g2 are total maps on the
    input alphabets, stored with canonically relabeled images 0..k-1.
    """

    transition: np.ndarray
    g1: np.ndarray
    g2: np.ndarray

    def __post_init__(self):
        w = _stochastic(self.transition, "channel transition")
        if w.ndim != 3:
            raise ValueError(f"transition must be (x1, x2, y), got shape {w.shape}")
        object.__setattr__(self, "transition", w)
        object.__setattr__(self, "g1", _canonical_map(self.g1, w.shape[0]))
        object.__setattr__(self, "g2", _canonical_map(self.g2, w.shape[1]))
        self.transition.setflags(write=False)
        self.g1.setflags(write=False)
        self.g2.setflags(write=False)

    @property
    def x1_size(self) -> int:
        return self.transition.shape[0]

    @property
    def x2_size(self) -> int:
        return self.transition.shape[1]

    @property
    def y_size(self) -> int:
        return self.transition.shape[2]

    @property
    def z1_size(self) -> int:
        return int(self.g1.max()) + 1

    @property
    def z2_size(self) -> int:
        return int(self.g2.max()) + 1

    def crib_onehot(self, encoder: int) -> np.ndarray:
        """Indicator matrix G[x, z] = 1{g(x) = z} for encoder 1 or 2."""
        g = self.g1 if encoder == 1 else self.g2
        size = self.z1_size if encoder == 1 else self.z2_size
        return np.eye(size)[g]


def with_cribbing(ch: ChannelSpec, g1=None, g2=None) -> ChannelSpec:
    """Same channel law with replaced cribbing maps."""
    return ChannelSpec(
        transition=ch.transition,
        g1=ch.g1 if g1 is None else g1,
        g2=ch.g2 if g2 is None else g2,
    )


def xor_channel() -> ChannelSpec:
    """Binary MAC with Y = X1 xor X2 and (by default) no cribbing."""
    w = np.zeros((2, 2, 2))
    for x1 in range(2):
        for x2 in range(2):
            w[x1, x2, x1 ^ x2] = 1.0
    return ChannelSpec(transition=w, g1=[0, 0], g2=[0, 0])


def selector_channel() -> ChannelSpec:
    """Binary MAC whose output is X1 or X2 with equal probability."""
    w = np.zeros((2, 2, 2))
    for x1 in range(2):
        for x2 in range(2):
            w[x1, x2, x1] += 0.5
            w[x1, x2, x2] += 0.5
    return ChannelSpec(transition=w, g1=[0, 0], g2=[0, 0])


@dataclass(frozen=True)
class CribFactorization:
    """One feasible input law for the Case A / Case B regions.

    k1[u, x1, z1] = P(x1, z1 | u) and must put mass only where z1 = g1(x1).
    For Case A k2[u, x2, z2] = P(x2, z2 | u); for Case B the kernel gains a
    leading z1 axis: k2[u, z1, x2, z2] = P(x2, z2 | z1, u).
    """

    case: str
    p_u: np.ndarray
    k1: np.ndarray
    k2: np.ndarray

    def __post_init__(self):
        if self.case not in ("A", "B"):
            raise ValueError(f"case must be 'A' or 'B', got {self.case!r}")
        p_u = _stochastic(np.asarray(self.p_u, dtype=float)[None, :], "P(u)")[0]
        k1 = np.asarray(self.k1, dtype=float)
        k2 = np.asarray(self.k2, dtype=float)
        if k1.ndim != 3:
            raise ValueError(f"k1 must be (u, x1, z1), got shape {k1.shape}")
        want = 3 if self.case == "A" else 4
        if k2.ndim != want:
            raise ValueError(f"k2 must have {want} axes for case {self.case}")
        u = p_u.shape[0]
        if k1.shape[0] != u or k2.shape[0] != u:
            raise ValueError("kernel u-axis disagrees with P(u)")
        k1 = _stochastic(k1.reshape(u, -1), "k1").reshape(k1.shape)
        k2 = _stochastic(k2.reshape(*k2.shape[:-2], -1), "k2").reshape(k2.shape)
        for arr, name in ((p_u, "p_u"), (k1, "k1"), (k2, "k2")):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def u_size(self) -> int:
        return self.p_u.shape[0]

    def k2_as_case_b(self, z1_size: int) -> np.ndarray:
        """View of k2 with the Case B shape (u, z1, x2, z2)."""
        if self.case == "B":
            return self.k2
        return np.broadcast_to(self.k2[:, None, :, :],
                               (self.u_size, z1_size) + self.k2.shape[1:])

    @classmethod
    def _trusted(cls, case, p_u, k1, k2) -> "CribFactorization":
        """Construct without revalidation; keeps already-validated floats
        untouched so retagging stays bit-exact."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "case", case)
        object.__setattr__(obj, "p_u", p_u)
        object.__setattr__(obj, "k1", k1)
        object.__setattr__(obj, "k2", k2)
        return obj


def factorization_from_inputs(case: str, p_u, px1_given_u, x2_kernel,
                              ch: ChannelSpec) -> CribFactorization:
    """Build a factorization from input laws; z_l = g_l(x_l) is made explicit.

    `x2_kernel` is P(x2|u) for Case A, shape (u, x2), or P(x2|z1,u) for
    Case B, shape (u, z1, x2).
    """
    p_u = np.asarray(p_u, dtype=float)
    a1 = np.asarray(px1_given_u, dtype=float)
    a2 = np.asarray(x2_kernel, dtype=float)
    g1h = ch.crib_onehot(1)
    g2h = ch.crib_onehot(2)
    k1 = a1[:, :, None] * g1h[None, :, :]
    if case == "A":
        k2 = a2[:, :, None] * g2h[None, :, :]
    else:
        k2 = a2[:, :, :, None] * g2h[None, None, :, :]
    return CribFactorization(case=case, p_u=p_u, k1=k1, k2=k2)


def constant_crib_factorization(case: str, p_u, px1_given_u, px2_given_u,
                                ch: ChannelSpec) -> CribFactorization:
    """Product factorization that ignores the cribbed signal entirely."""
    if case == "A":
        return factorization_from_inputs("A", p_u, px1_given_u, px2_given_u, ch)
    a2 = np.repeat(np.asarray(px2_given_u, float)[:, None, :], ch.z1_size, axis=1)
    return factorization_from_inputs("B", p_u, px1_given_u, a2, ch)


def retag_as_case_b(f: CribFactorization, ch: ChannelSpec) -> CribFactorization:
    """A Case A factorization as the Case B law that ignores z1.

    The kernel table is the broadcast of the original, bit for bit, so the
    retagged law evaluates to bit-identical RateBounds.
    """
    if f.case == "B":
        return f
    k2b = np.ascontiguousarray(f.k2_as_case_b(ch.z1_size))
    k2b.setflags(write=False)
    return CribFactorization._trusted("B", f.p_u, f.k1, k2b)


def perfect_crib_lift(f: CribFactorization, ch: ChannelSpec) -> CribFactorization:
    """Re-express a factorization with z_l replaced by x_l (identity cribbing).

    The lifted factorization is feasible on the identity-cribbing channel and
    its pentagon contains the original one pointwise.
    """
    ch_id = with_cribbing(ch, g1=np.arange(ch.x1_size), g2=np.arange(ch.x2_size))
    a1 = f.k1.sum(axis=2)
    k2b = f.k2_as_case_b(ch.z1_size)
    px2_given_uz1 = k2b.sum(axis=3)
    if f.case == "A":
        return factorization_from_inputs("A", f.p_u, a1, f.k2.sum(axis=2), ch_id)
    # condition on x1 instead of z1 = g1(x1)
    a2 = px2_given_uz1[:, ch.g1, :]
    return factorization_from_inputs("B", f.p_u, a1, a2, ch_id)


def _check_sizes(f: CribFactorization, ch: ChannelSpec):
    if f.k1.shape[1:] != (ch.x1_size, ch.z1_size):
        raise ValueError(f"k1 shape {f.k1.shape} does not match channel "
                         f"({ch.x1_size} inputs, {ch.z1_size} crib symbols)")
    want = (ch.x2_size, ch.z2_size) if f.case == "A" else \
        (ch.z1_size, ch.x2_size, ch.z2_size)
    if f.k2.shape[1:] != want:
        raise ValueError(f"k2 shape {f.k2.shape} does not match channel")


def assemble_joint(f: CribFactorization, ch: ChannelSpec) -> JointPMF:
    """Joint law over (U, X1, Z1, X2, Z2, Y) for one factorization.

    Raises on any mass placed where z_l != g_l(x_l).
    """
    _check_sizes(f, ch)
    off1 = f.k1 * (1.0 - ch.crib_onehot(1)[None, :, :])
    if off1.max(initial=0.0) > SUPPORT_ATOL:
        raise ValueError("k1 places mass where z1 != g1(x1)")
    # materialized so Case A and its Case B retag share one einsum layout,
    # keeping the resulting bounds bit-identical
    k2b = np.ascontiguousarray(f.k2_as_case_b(ch.z1_size))
    off2 = k2b * (1.0 - ch.crib_onehot(2)[None, None, :, :])
    if off2.max(initial=0.0) > SUPPORT_ATOL:
        raise ValueError("k2 places mass where z2 != g2(x2)")
    mass = np.einsum("u,uaz,uzbt,aby->uazbty",
                     f.p_u, f.k1, k2b, ch.transition, optimize=True)
    axes = [
        Alphabet("U", f.u_size),
        Alphabet("X1", ch.x1_size),
        Alphabet("Z1", ch.z1_size),
        Alphabet("X2", ch.x2_size),
        Alphabet("Z2", ch.z2_size),
        Alphabet("Y", ch.y_size),
    ]
    return JointPMF(axes, mass)


@dataclass(frozen=True)
class RateBounds:
    """Right-hand sides of the four region inequalities (bits).

    The pentagon is {R1 <= b1, R2 <= b2, R1 + R2 <= min(b_sum_cond,
    b_sum_total), R >= 0}.  With `includes_common` set, the fourth bound
    caps R0 + R1 + R2 instead of R1 + R2.
    """

    b1: float
    b2: float
    b_sum_cond: float
    b_sum_total: float
    includes_common: bool = False

    def __post_init__(self):
        for name in ("b1", "b2", "b_sum_cond", "b_sum_total"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0.0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")

    @property
    def sum_cap(self) -> float:
        return min(self.b_sum_cond, self.b_sum_total)


def _clamp(value: float, name: str) -> float:
    if value < 0.0:
        if value < -CLAMP_ATOL:
            raise ValueError(f"{name} = {value} is negative beyond round-off")
        return 0.0
    return value


def bound_components(f: CribFactorization, ch: ChannelSpec) -> dict:
    """Named entropy/MI terms of the four bounds, from the assembled joint."""
    j = assemble_joint(f, ch)
    return {
        "h_z1_given_u": probcore.conditional_entropy(j, "Z1", "U"),
        "mi_x1": probcore.mutual_information(j, "X1", "Y", ("X2", "Z1", "U")),
        "h_z2_given_u": probcore.conditional_entropy(j, "Z2", "U"),
        "mi_x2": probcore.mutual_information(j, "X2", "Y", ("X1", "Z2", "U")),
        "h_z1z2_given_u": probcore.conditional_entropy(j, ("Z1", "Z2"), "U"),
        "mi_both_cond": probcore.mutual_information(
            j, ("X1", "X2"), "Y", ("U", "Z1", "Z2")),
        "mi_total": probcore.mutual_information(j, ("X1", "X2"), "Y"),
    }


def eval_bounds(f: CribFactorization, ch: ChannelSpec) -> RateBounds:
    """The four pentagon bounds for one factorization."""
    c = bound_components(f, ch)
    return RateBounds(
        b1=_clamp(c["h_z1_given_u"] + c["mi_x1"], "b1"),
        b2=_clamp(c["h_z2_given_u"] + c["mi_x2"], "b2"),
        b_sum_cond=_clamp(c["h_z1z2_given_u"] + c["mi_both_cond"], "b_sum_cond"),
        b_sum_total=_clamp(c["mi_total"], "b_sum_total"),
    )


def eval_bounds_common(f: CribFactorization, ch: ChannelSpec) -> RateBounds:
    """Common-message variant: the unconditional sum bound caps R0 + R1 + R2."""
    return replace(eval_bounds(f, ch), includes_common=True)


def cardinality_cap(y_size: int, x1_size: int, x2_size: int) -> int:
    """Sufficient auxiliary alphabet size: min(|Y| + 3, |X1||X2| + 2)."""
    if min(y_size, x1_size, x2_size) < 1:
        raise ValueError("alphabet sizes must be >= 1")
    return min(y_size + 3, x1_size * x2_size + 2)
