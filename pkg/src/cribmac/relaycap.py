"""Semi-deterministic relay special cases: encoder 2 has no message.

With R2 = 0 and a constant Z2 the region collapses to a scalar capacity.
Three evaluations are provided: the with-delay form (max over P(x1,x2)),
the no-delay region form (auxiliary U, stochastic P(x2|u,z1)), and the
no-delay form that sweeps deterministic maps x2 = f(u,z1).  The last two
agree in theory; numerically they are cross-validated under matched
search budgets.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError
from .probcore import entropy_rows
from .regioncore import ChannelSpec, cardinality_cap
from .regionsearch import (
    SearchBudget,
    _ChannelTables,
    _fast_bounds,
    _Params,
    coordinate_ascent,
    restart_rng,
    njit,
)

FUNCTION_SPACE_LIMIT = 10**6


@dataclass(frozen=True)
class RelayInstance:
    """A relay problem: MAC channel with g2 constant, plus the delay case."""

    channel: ChannelSpec
    case: str   # "delay" or "no_delay"

    def __post_init__(self):
        if self.case not in ("delay", "no_delay"):
            raise ValueError(f"case must be 'delay' or 'no_delay', got {self.case!r}")
        if self.channel.z2_size != 1:
            raise ValueError("relay instances need a constant g2 (encoder 2 "
                             "leaks nothing)")


@njit(cache=True, nogil=True)
def _delay_kernel(p, g1, w, hw, nz1):  # pragma: no cover - compiled
    """min(H(Z1|X2) + I(X1;Y|X2,Z1), I(X1,X2;Y)) for a joint p(x1,x2)."""
    n1, n2 = p.shape
    ny = w.shape[2]
    ln2 = 0.6931471805599453

    h_y_in = 0.0
    for a in range(n1):
        for b in range(n2):
            h_y_in += p[a, b] * hw[a, b]

    # H(Z1|X2) over p(z1, x2)
    pzx = np.zeros((nz1, n2))
    px2 = np.zeros(n2)
    for a in range(n1):
        for b in range(n2):
            pzx[g1[a], b] += p[a, b]
            px2[b] += p[a, b]
    h_z_x2 = 0.0
    for b in range(n2):
        if px2[b] > 0.0:
            h_z_x2 += px2[b] * math.log(px2[b])
    for z in range(nz1):
        for b in range(n2):
            v = pzx[z, b]
            if v > 0.0:
                h_z_x2 -= v * math.log(v)
    h_z_x2 /= ln2

    # H(Y|X2,Z1) via p(z1,x2,y)
    q = np.zeros((nz1, n2, ny))
    for a in range(n1):
        for b in range(n2):
            v = p[a, b]
            if v > 0.0:
                z = g1[a]
                for y in range(ny):
                    q[z, b, y] += v * w[a, b, y]
    hj = 0.0
    hm = 0.0
    p_y = np.zeros(ny)
    for z in range(nz1):
        for b in range(n2):
            s = 0.0
            for y in range(ny):
                v = q[z, b, y]
                if v > 0.0:
                    hj -= v * math.log(v)
                s += v
                p_y[y] += v
            if s > 0.0:
                hm -= s * math.log(s)
    term1 = h_z_x2 + (hj - hm) / ln2 - h_y_in

    h_y = 0.0
    for y in range(ny):
        if p_y[y] > 0.0:
            h_y -= p_y[y] * math.log(p_y[y])
    term2 = h_y / ln2 - h_y_in

    return min(max(term1, 0.0), max(term2, 0.0))


@njit(cache=True, nogil=True)
def _elgamal_kernel(t_mass, ftab, g1, w, hw, nz1):  # pragma: no cover
    """min(I(X1;Y,Z1|U), I(U,X1;Y)) for p(u,x1) and x2 = f(u, z1)."""
    k, n1 = t_mass.shape
    ny = w.shape[2]
    ln2 = 0.6931471805599453

    h_y_given_ux1 = 0.0
    p_y = np.zeros(ny)
    q = np.zeros((k, nz1, ny))   # p(u, z1, y)
    p_u = np.zeros(k)
    for u in range(k):
        for a in range(n1):
            v = t_mass[u, a]
            if v <= 0.0:
                continue
            z = g1[a]
            b = ftab[u, z]
            p_u[u] += v
            h_y_given_ux1 += v * hw[a, b]
            for y in range(ny):
                inc = v * w[a, b, y]
                p_y[y] += inc
                q[u, z, y] += inc

    h_y = 0.0
    for y in range(ny):
        if p_y[y] > 0.0:
            h_y -= p_y[y] * math.log(p_y[y])
    term2 = h_y / ln2 - h_y_given_ux1          # I(U,X1;Y)

    h_uq = 0.0
    for u in range(k):
        for z in range(nz1):
            for y in range(ny):
                v = q[u, z, y]
                if v > 0.0:
                    h_uq -= v * math.log(v)
    h_u = 0.0
    for u in range(k):
        if p_u[u] > 0.0:
            h_u -= p_u[u] * math.log(p_u[u])
    h_yz_u = (h_uq - h_u) / ln2                # H(Y,Z1|U)
    term1 = h_yz_u - h_y_given_ux1             # I(X1;Y,Z1|U)

    return min(max(term1, 0.0), max(term2, 0.0))


def relay_delay_capacity(inst: RelayInstance, budget: SearchBudget) -> float:
    """Capacity with strictly causal cribbing at the relay.

    No auxiliary variable is needed; the search runs over the joint input
    law P(x1, x2) directly.
    """
    if inst.case != "delay":
        raise ValueError("instance is not tagged 'delay'")
    ch = inst.channel
    g1 = ch.g1.astype(np.int64)
    hw = entropy_rows(ch.transition)
    n = ch.x1_size * ch.x2_size

    best = 0.0
    for r in range(budget.restarts):
        rng = restart_rng(budget.master_seed, r)
        row = rng.dirichlet(np.ones(n))

        def objective():
            return _delay_kernel(row.reshape(ch.x1_size, ch.x2_size),
                                 g1, ch.transition, hw, ch.z1_size)

        value = coordinate_ascent([row], objective, budget.iters, rng)
        if value > best:
            best = value
    return best


def relay_nodelay_region_form(inst: RelayInstance, budget: SearchBudget) -> float:
    """No-delay capacity: max over P(u)P(x1|u)P(x2|u,z1) of
    min(H(Z1|U) + I(X1;Y|X2,Z1,U), I(X1,X2;Y))."""
    if inst.case != "no_delay":
        raise ValueError("instance is not tagged 'no_delay'")
    ch = inst.channel
    tables = _ChannelTables(ch)
    u_size = budget.resolve_u(ch)

    best = 0.0
    for r in range(budget.restarts):
        rng = restart_rng(budget.master_seed, r)
        params = _Params("B", u_size, ch, rng=rng)

        def objective():
            b1, _, _, bst = _fast_bounds(params.p_u, params.a1,
                                         params.a2_view(), tables)
            return min(b1, bst)

        value = coordinate_ascent(list(params.rows()), objective,
                                  budget.iters, rng)
        if value > best:
            best = value
    return best


def _type_table(type_ids, nz1: int, x2_size: int) -> np.ndarray:
    """Decode per-u type ids into a map table f[u, z1] -> x2."""
    k = len(type_ids)
    ftab = np.zeros((k, nz1), dtype=np.int64)
    for u, t in enumerate(type_ids):
        for z in range(nz1):
            ftab[u, z] = t % x2_size
            t //= x2_size
    return ftab


def relay_nodelay_elgamal_form(inst: RelayInstance, budget: SearchBudget) -> float:
    """No-delay capacity via deterministic relay maps:
    max over P(u,x1) and f: U x Z1 -> X2 of min(I(X1;Y,Z1|U), I(U,X1;Y)).

    The auxiliary alphabet defaults to cardinality_cap + |Z1| to absorb the
    randomization variable that makes deterministic maps sufficient.  Maps
    are swept up to relabeling of U (multisets of per-u types), which loses
    nothing because the objective is invariant to permuting U.
    """
    if inst.case != "no_delay":
        raise ValueError("instance is not tagged 'no_delay'")
    ch = inst.channel
    nz1 = ch.z1_size
    if budget.u_size is not None:
        u_size = budget.u_size
    else:
        u_size = cardinality_cap(ch.y_size, ch.x1_size, ch.x2_size) + nz1
    n_funcs = ch.x2_size ** (u_size * nz1)
    if n_funcs > FUNCTION_SPACE_LIMIT:
        raise BudgetError(
            f"{ch.x2_size}^({u_size}*{nz1}) = {n_funcs} deterministic maps "
            f"exceeds the enumeration limit {FUNCTION_SPACE_LIMIT}")

    g1 = ch.g1.astype(np.int64)
    hw = entropy_rows(ch.transition)
    n_types = ch.x2_size ** nz1

    best = 0.0
    for mi, type_ids in enumerate(
            itertools.combinations_with_replacement(range(n_types), u_size)):
        ftab = _type_table(type_ids, nz1, ch.x2_size)
        for r in range(budget.restarts):
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=budget.master_seed,
                                       spawn_key=(mi, r)))
            # p(u,x1) searched as p(u) and per-u rows P(x1|u); the factored
            # coordinates converge far better than one joint simplex row
            p_u = rng.dirichlet(np.ones(u_size))
            a1 = rng.dirichlet(np.ones(ch.x1_size), size=u_size)

            def objective():
                return _elgamal_kernel(p_u[:, None] * a1, ftab, g1,
                                       ch.transition, hw, nz1)

            value = coordinate_ascent([p_u] + list(a1), objective,
                                      budget.iters, rng)
            if value > best:
                best = value
    return best


def sum_capacity(ch: ChannelSpec, tol: float = 1e-12, max_iter: int = 10000) -> float:
    """max over P(x1,x2) of I(X1,X2;Y) by Blahut-Arimoto on the product input."""
    w = ch.transition.reshape(-1, ch.y_size)
    n = w.shape[0]
    r = np.full(n, 1.0 / n)
    log_w = np.zeros_like(w)
    np.log2(w, out=log_w, where=w > 0.0)
    capacity = 0.0
    for _ in range(max_iter):
        p_y = r @ w
        log_py = np.zeros_like(p_y)
        np.log2(p_y, out=log_py, where=p_y > 0.0)
        d = (w * (log_w - log_py[None, :])).sum(axis=1)
        new_capacity = float(np.log2(np.sum(r * np.exp2(d))))
        r = r * np.exp2(d - d.max())
        r /= r.sum()
        if abs(new_capacity - capacity) < tol:
            capacity = new_capacity
            break
        capacity = new_capacity
    return max(capacity, 0.0)
