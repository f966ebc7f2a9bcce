"""Action-controlled cribbing: the crib map is selected by a costed action.

Encoder 2 observes z1 = g1(a1, x1) where the action a1 is driven by past
cribbed symbols and charged an average cost E[cost(A1)] <= gamma.  The
module evaluates the constrained region bounds for arbitrary finite
instances, and solves the binary "crib or not" example (action 1 reveals
x1, action 0 reveals nothing, cost = Pr(A=1)) both through the general
bounds and through its two-parameter reduction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import probcore
from .probcore import Alphabet, JointPMF, binary_entropy
from .regioncore import ChannelSpec, RateBounds, _stochastic, selector_channel

COST_ATOL = 1e-12
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ActionFactorization:
    """Input law for the one-sided action-cribbing region.

    g1[a, x1] is the action-indexed crib map.  k1[u, a, x1, z1] is
    P(x1, z1 | u, a) and must respect z1 = g1(a, x1).  k2 is P(x2 | u, a)
    for Case A (shape (u, a, x2)) or P(x2 | z1, u, a) for Case B (shape
    (u, a, z1, x2)).
    """

    case: str
    p_ua: np.ndarray
    g1: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    cost: np.ndarray
    gamma: float

    def __post_init__(self):
        if self.case not in ("A", "B"):
            raise ValueError(f"case must be 'A' or 'B', got {self.case!r}")
        p_ua = np.asarray(self.p_ua, dtype=float)
        if p_ua.ndim != 2:
            raise ValueError("p_ua must be a (u, a) table")
        p_ua = _stochastic(p_ua.reshape(1, -1), "P(u,a1)")[0].reshape(p_ua.shape)
        g1 = np.asarray(self.g1, dtype=int)
        if g1.ndim != 2 or g1.min() < 0:
            raise ValueError("g1 must be a nonnegative (a, x1) table")
        k1 = np.asarray(self.k1, dtype=float)
        k2 = np.asarray(self.k2, dtype=float)
        cost = np.asarray(self.cost, dtype=float)
        k, na = p_ua.shape
        nz1 = int(g1.max()) + 1
        if k1.shape[:2] != (k, na) or k1.ndim != 4:
            raise ValueError(f"k1 must be (u, a, x1, z1), got {k1.shape}")
        if k1.shape[3] < nz1:
            raise ValueError("k1 z1 axis smaller than the image of g1")
        want = 3 if self.case == "A" else 4
        if k2.ndim != want or k2.shape[:2] != (k, na):
            raise ValueError(f"k2 must have {want} axes starting (u, a)")
        if cost.shape != (na,):
            raise ValueError(f"cost must have shape ({na},), got {cost.shape}")
        k1 = _stochastic(k1.reshape(k * na, -1), "k1").reshape(k1.shape)
        k2 = _stochastic(k2, "k2")
        onehot = np.zeros((na, k1.shape[2], k1.shape[3]))
        for a in range(na):
            for x in range(k1.shape[2]):
                onehot[a, x, g1[a, x]] = 1.0
        if (k1 * (1.0 - onehot[None])).max(initial=0.0) > COST_ATOL:
            raise ValueError("k1 places mass where z1 != g1(a1, x1)")
        for arr, name in ((p_ua, "p_ua"), (g1, "g1"), (k1, "k1"),
                          (k2, "k2"), (cost, "cost")):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def expected_cost(self) -> float:
        return float(self.p_ua.sum(axis=0) @ self.cost)

    @property
    def feasible(self) -> bool:
        return self.expected_cost <= self.gamma + COST_ATOL


@dataclass(frozen=True)
class ActionBounds:
    """eval_bounds_action result: the pentagon plus the cost check."""

    bounds: RateBounds
    feasible: bool
    expected_cost: float


def assemble_joint_action(f: ActionFactorization, ch: ChannelSpec) -> JointPMF:
    """Joint law over (U, A1, X1, Z1, X2, Y)."""
    k, na = f.p_ua.shape
    nz1 = f.k1.shape[3]
    if f.k1.shape[2] != ch.x1_size:
        raise ValueError("k1 x1 axis does not match the channel")
    if f.k2.shape[-1] != ch.x2_size:
        raise ValueError("k2 x2 axis does not match the channel")
    if f.case == "A":
        k2b = np.broadcast_to(f.k2[:, :, None, :], (k, na, nz1, ch.x2_size))
    else:
        k2b = f.k2
    mass = np.einsum("uc,ucaz,uczb,aby->ucazby",
                     f.p_ua, f.k1, k2b, ch.transition, optimize=True)
    axes = [
        Alphabet("U", k),
        Alphabet("A1", na),
        Alphabet("X1", ch.x1_size),
        Alphabet("Z1", nz1),
        Alphabet("X2", ch.x2_size),
        Alphabet("Y", ch.y_size),
    ]
    return JointPMF(axes, mass)


def eval_bounds_action(f: ActionFactorization, ch: ChannelSpec) -> ActionBounds:
    """Pentagon bounds of the action region; infeasible laws still report
    bounds, with the flag cleared."""
    j = assemble_joint_action(f, ch)
    ua = ("U", "A1")
    h_z1 = probcore.conditional_entropy(j, "Z1", ua)
    b1 = h_z1 + probcore.mutual_information(j, "X1", "Y", ("X2", "Z1") + ua)
    b2 = probcore.mutual_information(j, "X2", "Y", ("X1",) + ua)
    b_sum_cond = h_z1 + probcore.mutual_information(j, ("X1", "X2"), "Y",
                                                    ua + ("Z1",))
    b_sum_total = probcore.mutual_information(j, ("X1", "X2"), "Y")
    bounds = RateBounds(b1=b1, b2=b2, b_sum_cond=b_sum_cond,
                        b_sum_total=b_sum_total)
    return ActionBounds(bounds=bounds, feasible=f.feasible,
                        expected_cost=f.expected_cost)


# ---------------------------------------------------------------------------
# the binary "crib or not" example
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CribOrNotPoint:
    """Reduced parameters of the binary example: Pr(A=1) = gamma and
    Pr(X1 = X2 | A=a) = alpha_a."""

    gamma: float
    alpha0: float
    alpha1: float

    def __post_init__(self):
        for name in ("gamma", "alpha0", "alpha1"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0,1], got {v}")


def crib_or_not_terms(p: CribOrNotPoint) -> tuple:
    """The two competing bounds of the example.

    boundA = gamma * H_b(alpha1) + (1-gamma) * (H_b((1+alpha0)/2) + alpha0 - 1)
    boundB = gamma * alpha1 + (1-gamma) * alpha0
    """
    g = p.gamma
    bound_a = (g * binary_entropy(p.alpha1)
               + (1.0 - g) * (binary_entropy((1.0 + p.alpha0) / 2.0)
                              + p.alpha0 - 1.0))
    bound_b = g * p.alpha1 + (1.0 - g) * p.alpha0
    return bound_a, bound_b


def _example_value(gamma: float, a0: float, a1: float) -> float:
    ba, bb = crib_or_not_terms(CribOrNotPoint(gamma, a0, a1))
    return min(ba, bb)


def _golden_max(fn, lo: float = 0.0, hi: float = 1.0,
                tol: float = 1e-10) -> tuple:
    """Golden-section maximization of a unimodal function on [lo, hi]."""
    c = hi - GOLDEN * (hi - lo)
    d = lo + GOLDEN * (hi - lo)
    fc, fd = fn(c), fn(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - GOLDEN * (hi - lo)
            fc = fn(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + GOLDEN * (hi - lo)
            fd = fn(d)
    x = 0.5 * (lo + hi)
    return x, fn(x)


def crib_or_not_capacity(gamma: float, grid_resolution: int = 100) -> tuple:
    """C(gamma) of the binary example and the maximizing (alpha0, alpha1).

    A coarse grid guards against multimodality; the min of the two terms is
    concave in (alpha0, alpha1), so nested per-coordinate golden sections
    then converge to the global maximum.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must be in [0,1], got {gamma}")
    if grid_resolution < 10:
        raise ValueError("grid_resolution must be >= 10")

    alphas = np.linspace(0.0, 1.0, grid_resolution + 1)
    term_a1 = np.array([binary_entropy(a) for a in alphas])
    term_a0 = np.array([binary_entropy((1.0 + a) / 2.0) + a - 1.0
                        for a in alphas])
    bound_a = gamma * term_a1[None, :] + (1.0 - gamma) * term_a0[:, None]
    bound_b = gamma * alphas[None, :] + (1.0 - gamma) * alphas[:, None]
    grid_vals = np.minimum(bound_a, bound_b)
    i0, i1 = np.unravel_index(int(grid_vals.argmax()), grid_vals.shape)
    best = (float(grid_vals[i0, i1]), float(alphas[i0]), float(alphas[i1]))

    def inner(a1: float) -> tuple:
        return _golden_max(lambda a0: _example_value(gamma, a0, a1))

    def outer(a1: float) -> float:
        return inner(a1)[1]

    a1_star, _ = _golden_max(outer)
    a0_star, value = inner(a1_star)
    if value < best[0]:
        value, a0_star, a1_star = best
    return value, CribOrNotPoint(gamma=gamma, alpha0=a0_star, alpha1=a1_star)


def crib_or_not_factorization(p: CribOrNotPoint) -> ActionFactorization:
    """General-form law matching the example's reduction on the selector
    channel, with U playing the role of X2.

    Action 1 reveals x1 (z1 = x1); action 0 reveals the dummy symbol 2.
    Cross-checking eval_bounds_action on this law against
    crib_or_not_terms validates the two-parameter reduction.
    """
    p_ua = 0.5 * np.array([[1.0 - p.gamma, p.gamma],
                           [1.0 - p.gamma, p.gamma]])
    g1 = np.array([[2, 2], [0, 1]])
    alphas = (p.alpha0, p.alpha1)
    k1 = np.zeros((2, 2, 2, 3))
    for u in range(2):
        for a in range(2):
            for x1 in range(2):
                k1[u, a, x1, g1[a, x1]] = alphas[a] if x1 == u else 1.0 - alphas[a]
    k2 = np.zeros((2, 2, 2))
    for u in range(2):
        k2[u, :, u] = 1.0
    return ActionFactorization(case="A", p_ua=p_ua, g1=g1, k1=k1, k2=k2,
                               cost=np.array([0.0, 1.0]), gamma=p.gamma)


def crib_or_not_channel() -> ChannelSpec:
    """The example's channel: Y equals X1 or X2 with probability 1/2."""
    return selector_channel()
