"""Frontier search over cribbing factorizations.

The weighted-sum objective is non-concave in the joint kernel parameters,
so the search uses Dirichlet(1) random restarts followed by cyclic
coordinate ascent over the simplex rows, with a projected backtracking
line search.  Per-restart generators are seeded independently from the
master seed so parallel execution order cannot change results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .probcore import entropy_rows
from .regioncore import (
    CribFactorization,
    ChannelSpec,
    RateBounds,
    cardinality_cap,
    factorization_from_inputs,
)

try:
    from numba import njit
except ImportError:      # pragma: no cover - numba is a soft dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(f):
            return f

        return deco

HULL_COLLINEAR_EPS = 1e-12
HULL_MERGE_EPS = 1e-10
CONTAINS_SLACK = 1e-9
BACKTRACK_STEPS = 8


@dataclass(frozen=True)
class SearchBudget:
    """Search effort knobs; results are a deterministic function of these."""

    restarts: int = 8
    iters: int = 60
    u_size: Optional[int] = None   # None: cardinality cap of the channel
    master_seed: int = 0

    def __post_init__(self):
        if self.restarts < 1 or self.iters < 1:
            raise ValueError("restarts and iters must be >= 1")
        if self.u_size is not None and self.u_size < 1:
            raise ValueError(f"u_size must be >= 1, got {self.u_size}")

    def resolve_u(self, ch: ChannelSpec) -> int:
        if self.u_size is not None:
            return self.u_size
        return cardinality_cap(ch.y_size, ch.x1_size, ch.x2_size)


def restart_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent stream for one restart; order-independent across workers."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=master_seed, spawn_key=(index,)))


# ---------------------------------------------------------------------------
# fast bound evaluation on raw parameter arrays
# ---------------------------------------------------------------------------

class _ChannelTables:
    """Precomputed views of a channel used inside the hot loop."""

    def __init__(self, ch: ChannelSpec):
        self.ch = ch
        self.w = ch.transition
        self.g1 = ch.g1.astype(np.int64)
        self.g2 = ch.g2.astype(np.int64)
        self.nz1 = ch.z1_size
        self.nz2 = ch.z2_size
        self.h_w_rows = entropy_rows(self.w)


_LN2 = math.log(2.0)


@njit(cache=True, nogil=True)
def _bounds_kernel(p_u, a1, a2b, g1, g2, w, hw, nz1, nz2):  # pragma: no cover
    """Compiled core of the four region bounds (values in bits).

    a2b holds P(x2|u,z1) with z-depth either nz1 (Case B) or 1 (Case A,
    where the law ignores z1); indexing is modulo that depth.
    """
    k = p_u.shape[0]
    n1 = a1.shape[1]
    za = a2b.shape[1]
    n2 = a2b.shape[2]
    ny = w.shape[2]
    ln2 = 0.6931471805599453

    pj = np.zeros((k, n1, n2))
    h_y_in = 0.0
    for u in range(k):
        for a in range(n1):
            base = p_u[u] * a1[u, a]
            z = g1[a] % za
            for b in range(n2):
                v = base * a2b[u, z, b]
                pj[u, a, b] = v
                h_y_in += v * hw[a, b]

    # H(Z1|U)
    h_z1_u = 0.0
    pz1_u = np.zeros((k, nz1))
    for u in range(k):
        for a in range(n1):
            pz1_u[u, g1[a]] += a1[u, a]
        acc = 0.0
        for z in range(nz1):
            v = pz1_u[u, z]
            if v > 0.0:
                acc -= v * math.log(v)
        h_z1_u += p_u[u] * acc / ln2

    # I(X1;Y|X2,Z1,U) through p(u,z1,x2,y)
    q1 = np.zeros((k, nz1, n2, ny))
    for u in range(k):
        for a in range(n1):
            z = g1[a]
            for b in range(n2):
                v = pj[u, a, b]
                if v > 0.0:
                    for y in range(ny):
                        q1[u, z, b, y] += v * w[a, b, y]
    hj = 0.0
    hm = 0.0
    for u in range(k):
        for z in range(nz1):
            for b in range(n2):
                s = 0.0
                for y in range(ny):
                    v = q1[u, z, b, y]
                    if v > 0.0:
                        hj -= v * math.log(v)
                    s += v
                if s > 0.0:
                    hm -= s * math.log(s)
    b1 = h_z1_u + (hj - hm) / ln2 - h_y_in

    # H(Z2|U), H(Z1,Z2|U)
    pz1z2_u = np.zeros((k, nz1, nz2))
    for u in range(k):
        for z in range(nz1):
            for b in range(n2):
                pz1z2_u[u, z, g2[b]] += pz1_u[u, z] * a2b[u, z % za, b]
    h_z2_u = 0.0
    h_zz_u = 0.0
    for u in range(k):
        acc2 = 0.0
        accz = 0.0
        for t in range(nz2):
            s = 0.0
            for z in range(nz1):
                v = pz1z2_u[u, z, t]
                if v > 0.0:
                    accz -= v * math.log(v)
                s += v
            if s > 0.0:
                acc2 -= s * math.log(s)
        h_z2_u += p_u[u] * acc2 / ln2
        h_zz_u += p_u[u] * accz / ln2

    # I(X2;Y|X1,Z2,U) through p(u,x1,z2,y)
    q2 = np.zeros((k, n1, nz2, ny))
    for u in range(k):
        for a in range(n1):
            for b in range(n2):
                v = pj[u, a, b]
                if v > 0.0:
                    t = g2[b]
                    for y in range(ny):
                        q2[u, a, t, y] += v * w[a, b, y]
    hj = 0.0
    hm = 0.0
    for u in range(k):
        for a in range(n1):
            for t in range(nz2):
                s = 0.0
                for y in range(ny):
                    v = q2[u, a, t, y]
                    if v > 0.0:
                        hj -= v * math.log(v)
                    s += v
                if s > 0.0:
                    hm -= s * math.log(s)
    b2 = h_z2_u + (hj - hm) / ln2 - h_y_in

    # I(X1,X2;Y|U,Z1,Z2) through p(u,z1,z2,y)
    q3 = np.zeros((k, nz1, nz2, ny))
    for u in range(k):
        for z in range(nz1):
            for b in range(n2):
                t = g2[b]
                for y in range(ny):
                    q3[u, z, t, y] += q1[u, z, b, y]
    hj = 0.0
    hm = 0.0
    for u in range(k):
        for z in range(nz1):
            for t in range(nz2):
                s = 0.0
                for y in range(ny):
                    v = q3[u, z, t, y]
                    if v > 0.0:
                        hj -= v * math.log(v)
                    s += v
                if s > 0.0:
                    hm -= s * math.log(s)
    b_sum_cond = h_zz_u + (hj - hm) / ln2 - h_y_in

    # I(X1,X2;Y) through p(y)
    p_y = np.zeros(ny)
    for u in range(k):
        for z in range(nz1):
            for b in range(n2):
                for y in range(ny):
                    p_y[y] += q1[u, z, b, y]
    h_y = 0.0
    for y in range(ny):
        v = p_y[y]
        if v > 0.0:
            h_y -= v * math.log(v)
    b_sum_total = h_y / ln2 - h_y_in

    return (max(b1, 0.0), max(b2, 0.0),
            max(b_sum_cond, 0.0), max(b_sum_total, 0.0))


def _fast_bounds(p_u, a1, a2b, t: _ChannelTables):
    """Four bounds from P(u), P(x1|u) and P(x2|u,z1).

    `a2b` has shape (u, z1, x2); Case A callers pass a broadcast view that
    ignores z1, which makes Case A and its Case B retag bit-identical.
    """
    return _bounds_kernel(np.ascontiguousarray(p_u, dtype=float),
                          np.ascontiguousarray(a1, dtype=float),
                          np.ascontiguousarray(a2b, dtype=float),
                          t.g1, t.g2, t.w, t.h_w_rows, t.nz1, t.nz2)


def pentagon_corners(b: RateBounds) -> list:
    """Vertices of {0 <= R1 <= b1, 0 <= R2 <= b2, R1+R2 <= sum_cap}."""
    s = b.sum_cap
    r1m, r2m = min(b.b1, s), min(b.b2, s)
    pts = [(0.0, 0.0), (r1m, 0.0), (0.0, r2m)]
    if b.b1 + b.b2 <= s:
        pts.append((b.b1, b.b2))
    else:
        if s - b.b1 >= 0.0:
            pts.append((b.b1, s - b.b1))
        if s - b.b2 >= 0.0:
            pts.append((s - b.b2, b.b2))
    out = []
    for p in pts:
        if p not in out:
            out.append(p)
    return out


# ---------------------------------------------------------------------------
# coordinate ascent
# ---------------------------------------------------------------------------

class _Params:
    """Mutable search state: one simplex row per coordinate block."""

    def __init__(self, case: str, u_size: int, ch: ChannelSpec,
                 rng: Optional[np.random.Generator] = None, source=None):
        self.case = case
        n1, n2, nz1 = ch.x1_size, ch.x2_size, ch.z1_size
        if source is not None:
            self.p_u = source.p_u.copy()
            self.a1 = source.a1.copy()
            self.a2 = source.a2.copy()
        elif rng is not None:
            self.p_u = rng.dirichlet(np.ones(u_size))
            self.a1 = rng.dirichlet(np.ones(n1), size=u_size)
            if case == "A":
                self.a2 = rng.dirichlet(np.ones(n2), size=u_size)
            else:
                self.a2 = rng.dirichlet(np.ones(n2), size=(u_size, nz1))
        else:
            raise ValueError("need rng or source")
        self.nz1 = nz1

    def a2_view(self):
        if self.case == "A":
            return self.a2[:, None, :]
        return self.a2

    def rows(self):
        yield self.p_u
        yield from self.a1
        if self.case == "A":
            yield from self.a2
        else:
            for u in range(self.a2.shape[0]):
                yield from self.a2[u]

    def to_factorization(self, ch: ChannelSpec) -> CribFactorization:
        return factorization_from_inputs(self.case, self.p_u, self.a1,
                                         self.a2, ch)


def coordinate_ascent(rows: Sequence[np.ndarray], objective, iters: int,
                      rng: np.random.Generator,
                      backtrack: int = BACKTRACK_STEPS) -> float:
    """Cyclic ascent: move each row toward a random simplex point, halving
    the step until the objective improves (at most `backtrack` trials)."""
    rows = list(rows)
    best = objective()
    for _ in range(iters):
        for row in rows:
            target = rng.dirichlet(np.ones(row.size))
            saved = row.copy()
            t = 1.0
            improved = False
            for _ in range(backtrack):
                row[:] = (1.0 - t) * saved + t * target
                value = objective()
                if value > best + 1e-15:
                    best = value
                    improved = True
                    break
                t *= 0.5
            if not improved:
                row[:] = saved
    return best


# ---------------------------------------------------------------------------
# weighted-sum maximization and frontier tracing
# ---------------------------------------------------------------------------

def _pentagon_support(bounds, mu1: float, mu2: float) -> float:
    b1, b2, sc, st = bounds
    s = min(sc, st)
    best = max(mu1 * min(b1, s), mu2 * min(b2, s), 0.0)
    if b1 + b2 <= s:
        best = max(best, mu1 * b1 + mu2 * b2)
    else:
        if s - b1 >= 0.0:
            best = max(best, mu1 * b1 + mu2 * (s - b1))
        if s - b2 >= 0.0:
            best = max(best, mu1 * (s - b2) + mu2 * b2)
    return best


def _search_once(ch, case, mu1, mu2, u_size, iters, rng, start=None):
    tables = _ChannelTables(ch)
    params = _Params(case, u_size, ch, rng=rng if start is None else None,
                     source=start)

    def objective():
        return _pentagon_support(
            _fast_bounds(params.p_u, params.a1, params.a2_view(), tables),
            mu1, mu2)

    value = coordinate_ascent(list(params.rows()), objective, iters, rng)
    return value, params


def _search_all(ch, case, mu1, mu2, budget: SearchBudget, warm_starts=(),
                threads: int = 1):
    """All restart results, deterministic order: [(value, params), ...].

    Restart streams are seeded by index, so running them on a thread pool
    cannot change the merged outcome."""
    u_size = budget.resolve_u(ch)

    def one(index, start=None):
        rng = restart_rng(budget.master_seed, index)
        return _search_once(ch, case, mu1, mu2, u_size, budget.iters, rng,
                            start=start)

    jobs = [(r, None) for r in range(budget.restarts)]
    jobs += [(budget.restarts + k, start)
             for k, start in enumerate(warm_starts)]
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(one, idx, start) for idx, start in jobs]
            return [f.result() for f in futures]
    return [one(idx, start) for idx, start in jobs]


def weighted_max(ch: ChannelSpec, case: str, mu1: float, mu2: float,
                 budget: SearchBudget, threads: int = 1):
    """Best found value of max{mu1 R1 + mu2 R2 over the pentagon} and its
    argmax factorization.  Ties keep the earliest restart."""
    if mu1 < 0 or mu2 < 0 or (mu1 == 0 and mu2 == 0):
        raise ValueError("weights must be nonnegative and not both zero")
    results = _search_all(ch, case, mu1, mu2, budget, threads=threads)
    best_value, best_params = results[0]
    for value, params in results[1:]:
        if value > best_value:
            best_value, best_params = value, params
    return best_value, best_params.to_factorization(ch)


@dataclass(frozen=True)
class RateRegion:
    """Convex polygon of achievable (R1, R2) pairs, counterclockwise,
    starting at the origin.  `generators` holds, per vertex, whatever
    produced it (a factorization, a parameter dict, or None)."""

    vertices: tuple
    generators: tuple = ()
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        verts = tuple((float(a), float(b)) for a, b in self.vertices)
        gens = tuple(self.generators) if self.generators else (None,) * len(verts)
        if len(gens) != len(verts):
            raise ValueError("generators must align with vertices")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "generators", gens)

    def contains(self, r1: float, r2: float, slack: float = CONTAINS_SLACK) -> bool:
        return contains(self, r1, r2, slack)

    def max_weighted(self, mu1: float, mu2: float) -> float:
        return max(mu1 * a + mu2 * b for a, b in self.vertices)

    def equal_rate_point(self) -> float:
        """Largest t with (t, t) inside the region."""
        lo, hi = 0.0, max(max(a, b) for a, b in self.vertices) + 1.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if contains(self, mid, mid, slack=0.0):
                lo = mid
            else:
                hi = mid
        return lo

    def validate(self):
        """Check the polygon invariants; raises ValueError on failure."""
        v = self.vertices
        if not v:
            raise ValueError("empty region")
        if min(min(a, b) for a, b in v) < -HULL_MERGE_EPS:
            raise ValueError("region leaves the nonnegative quadrant")
        if not any(abs(a) <= HULL_MERGE_EPS and abs(b) <= HULL_MERGE_EPS
                   for a, b in v):
            raise ValueError("region must include the origin")
        if len(v) >= 3:
            n = len(v)
            for i in range(n):
                ax, ay = v[i]
                bx, by = v[(i + 1) % n]
                cx, cy = v[(i + 2) % n]
                cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
                if cross <= HULL_COLLINEAR_EPS:
                    raise ValueError("vertices not strictly counterclockwise")
        return self


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: Iterable) -> list:
    """Monotone-chain hull; collinear points dropped, near-duplicates merged.

    Returns counterclockwise vertices starting at the lexicographic minimum
    (for regions through the origin: the origin itself).  Degenerate inputs
    yield a single point or a segment.
    """
    merged = {}
    for p in points:
        key = (round(p[0] / HULL_MERGE_EPS), round(p[1] / HULL_MERGE_EPS))
        merged.setdefault(key, (float(p[0]), float(p[1])))
    pts = sorted(merged.values())
    if len(pts) <= 2:
        return pts
    lower = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= HULL_COLLINEAR_EPS:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= HULL_COLLINEAR_EPS:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 2:   # all points collinear
        return [pts[0], pts[-1]]
    return hull


def region_hull(ch: ChannelSpec, case: str, mu_grid: Sequence, budget: SearchBudget,
                extra_generators: Sequence[CribFactorization] = (),
                threads: int = 1) -> RateRegion:
    """Union-of-pentagons hull over the weight grid.

    Every restart's final factorization contributes its pentagon, plus the
    `extra_generators` (e.g. a previous region's generators as a warm start,
    which guarantees the new hull contains the old region).  Each weight
    after the first also warm-starts one extra ascent from the previous
    weight's best parameters.
    """
    mu_grid = [tuple(m) for m in mu_grid]
    if not mu_grid:
        raise ValueError("mu_grid must be nonempty")
    from .regioncore import eval_bounds

    candidates = []     # (factorization-or-params, bounds)
    tables = _ChannelTables(ch)
    prev_best = None
    for mu1, mu2 in mu_grid:
        warm = [prev_best] if prev_best is not None else []
        results = _search_all(ch, case, mu1, mu2, budget, warm_starts=warm,
                              threads=threads)
        best_value, best_params = results[0]
        for value, params in results:
            bounds = RateBounds(*_fast_bounds(params.p_u, params.a1,
                                              params.a2_view(), tables))
            candidates.append((params, bounds))
            if value > best_value:
                best_value, best_params = value, params
        prev_best = best_params

    for f in extra_generators:
        candidates.append((f, eval_bounds(f, ch)))

    points = [(0.0, 0.0)]
    origin_gen = [None]
    gen_of_point = {}
    for gen, bounds in candidates:
        for corner in pentagon_corners(bounds):
            points.append(corner)
            key = (round(corner[0] / HULL_MERGE_EPS),
                   round(corner[1] / HULL_MERGE_EPS))
            gen_of_point.setdefault(key, gen)

    hull = convex_hull(points)
    generators = []
    for v in hull:
        key = (round(v[0] / HULL_MERGE_EPS), round(v[1] / HULL_MERGE_EPS))
        gen = gen_of_point.get(key)
        if isinstance(gen, _Params):
            gen = gen.to_factorization(ch)
        generators.append(gen)
    return RateRegion(vertices=tuple(hull), generators=tuple(generators),
                      metadata={"case": case, "mu_grid": mu_grid,
                                "budget": budget})


def contains(region: RateRegion, r1: float, r2: float,
             slack: float = CONTAINS_SLACK) -> bool:
    """Point-in-region test with absolute distance slack."""
    v = region.vertices
    p = (float(r1), float(r2))
    if len(v) == 1:
        return abs(p[0] - v[0][0]) <= slack and abs(p[1] - v[0][1]) <= slack
    if len(v) == 2:
        return _segment_distance(v[0], v[1], p) <= slack
    n = len(v)
    for i in range(n):
        a, b = v[i], v[(i + 1) % n]
        ex, ey = b[0] - a[0], b[1] - a[1]
        norm = np.hypot(ex, ey)
        if norm == 0.0:
            continue
        if _cross(a, b, p) / norm < -slack:
            return False
    return True


def _segment_distance(a, b, p) -> float:
    ax, ay = a
    bx, by = b
    px, py = p
    dx, dy = bx - ax, by - ay
    denom = dx * dx + dy * dy
    if denom == 0.0:
        return float(np.hypot(px - ax, py - ay))
    t = max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / denom))
    return float(np.hypot(px - (ax + t * dx), py - (ay + t * dy)))
