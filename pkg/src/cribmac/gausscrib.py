"""Gaussian MAC with quantized cribbing: Y = X1 + X2 + W, W ~ N(0, N).

Encoder 2 sees a b-bit equiprobable scalar quantization Z1 of X1 and
transmits a mixture: with weight rho an independent standard normal, with
weight 1-rho a fresh draw from the conditional law of X1 given its cell.

Closed forms: a truncated standard normal convolved with a Gaussian has a
density expressible with normal CDFs, so the conditional output densities
for the individual-rate bounds are exact and their differential entropies
are evaluated on a fixed Gauss-Legendre grid.  The two sum-rate entropies
need one extra convolution layer (two truncated normals), so there the
outer expectation is Monte Carlo over channel samples with the density
evaluated by inner quadrature; standard errors are reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import ndtr, ndtri

from .regionsearch import RateRegion, convex_hull, pentagon_corners
from .regioncore import RateBounds

INNER_CELL_NODES = 48      # quadrature nodes per quantizer cell
DENSITY_TABLE_SIZE = 4096  # grid used to interpolate MC densities
SE_WARN_LIMIT = 0.02       # bits; larger standard errors raise a warning
_LOG2_2PIE = math.log2(2.0 * math.pi * math.e)


def inverse_normal_cdf(p):
    """Standard normal quantile; p strictly inside (0, 1)."""
    arr = np.asarray(p, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ValueError("inverse_normal_cdf needs p in (0, 1)")
    out = ndtri(arr)
    return float(out) if np.isscalar(p) or arr.ndim == 0 else out


def gaussian_entropy_bits(variance: float) -> float:
    """Differential entropy of N(0, variance) in bits."""
    return 0.5 * math.log2(variance) + 0.5 * _LOG2_2PIE


@dataclass(frozen=True)
class GaussianMACParams:
    p1: float
    p2: float
    noise: float

    def __post_init__(self):
        if min(self.p1, self.p2, self.noise) <= 0.0:
            raise ValueError("powers and noise variance must be positive")


@dataclass(frozen=True)
class QuantizerSpec:
    """Equiprobable scalar quantizer for a standard normal input."""

    bits: int
    boundaries: np.ndarray
    cell_probs: np.ndarray

    def __post_init__(self):
        if self.bits < 1:
            raise ValueError("quantizer needs at least one bit")
        b = np.asarray(self.boundaries, dtype=float)
        p = np.asarray(self.cell_probs, dtype=float)
        n = 2 ** self.bits
        if b.shape != (n - 1,) or np.any(np.diff(b) <= 0.0):
            raise ValueError("boundaries must be 2^bits - 1 increasing reals")
        if p.shape != (n,):
            raise ValueError("cell_probs must have 2^bits entries")
        edges = ndtr(b)
        masses = np.diff(np.concatenate(([0.0], edges, [1.0])))
        if np.abs(masses - p).max() > 1e-9 or np.abs(p - 1.0 / n).max() > 1e-9:
            raise ValueError("cells are not equiprobable under N(0,1)")
        b.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "boundaries", b)
        object.__setattr__(self, "cell_probs", p)

    @property
    def n_cells(self) -> int:
        return 2 ** self.bits

    def cell_edges(self) -> tuple:
        lo = np.concatenate(([-np.inf], self.boundaries))
        hi = np.concatenate((self.boundaries, [np.inf]))
        return lo, hi


def design_quantizer(bits: int) -> QuantizerSpec:
    """Boundaries at Phi^{-1}(k / 2^bits); every cell carries mass 2^-bits."""
    if not 1 <= bits <= 8:
        raise ValueError(f"bits must be in 1..8, got {bits}")
    n = 2 ** bits
    boundaries = ndtri(np.arange(1, n) / n)
    return QuantizerSpec(bits=bits, boundaries=boundaries,
                         cell_probs=np.full(n, 1.0 / n))


@dataclass(frozen=True)
class MixtureSchemeParams:
    rho: float
    quantizer: QuantizerSpec
    mc_samples: int = 10**6
    quad_points: int = 512
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must be in [0,1], got {self.rho}")
        if self.mc_samples < 1 or self.quad_points < 1:
            raise ValueError("sample and quadrature counts must be >= 1")


# ---------------------------------------------------------------------------
# analytic baselines
# ---------------------------------------------------------------------------

def no_cribbing_caps(params: GaussianMACParams) -> tuple:
    """(R1 cap, R2 cap, sum cap) without any cooperation."""
    return (0.5 * math.log2(1.0 + params.p1 / params.noise),
            0.5 * math.log2(1.0 + params.p2 / params.noise),
            0.5 * math.log2(1.0 + (params.p1 + params.p2) / params.noise))


def no_cribbing_region(params: GaussianMACParams) -> RateRegion:
    r1, r2, rs = no_cribbing_caps(params)
    bounds = RateBounds(b1=r1, b2=r2, b_sum_cond=rs, b_sum_total=rs)
    hull = convex_hull(pentagon_corners(bounds))
    return RateRegion(vertices=tuple(hull),
                      generators=tuple({"scheme": "no_cribbing"}
                                       for _ in hull),
                      metadata={"params": params})


def perfect_cribbing_caps(params: GaussianMACParams, rho: float) -> tuple:
    """(R2 cap, sum cap) under full cooperation with correlation rho."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must be in [0,1]")
    r2 = 0.5 * math.log2(1.0 + params.p2 * (1.0 - rho ** 2) / params.noise)
    rs = 0.5 * math.log2(
        1.0 + (params.p1 + 2.0 * rho * math.sqrt(params.p1 * params.p2)
               + params.p2) / params.noise)
    return r2, rs


def perfect_cribbing_region(params: GaussianMACParams, rho_grid) -> RateRegion:
    points = [(0.0, 0.0)]
    gens = {}
    for rho in rho_grid:
        r2, rs = perfect_cribbing_caps(params, float(rho))
        bounds = RateBounds(b1=rs, b2=r2, b_sum_cond=rs, b_sum_total=rs)
        for c in pentagon_corners(bounds):
            points.append(c)
            gens.setdefault((round(c[0], 12), round(c[1], 12)), float(rho))
    hull = convex_hull(points)
    return RateRegion(
        vertices=tuple(hull),
        generators=tuple({"scheme": "perfect", "rho": gens.get(
            (round(v[0], 12), round(v[1], 12)))} for v in hull),
        metadata={"params": params, "rho_grid": list(map(float, rho_grid))})


# ---------------------------------------------------------------------------
# closed-form conditional densities
# ---------------------------------------------------------------------------

def _normal_pdf(y, variance):
    return np.exp(-np.square(y) / (2.0 * variance)) / math.sqrt(
        2.0 * math.pi * variance)


def _tn_conv_normal_pdf(y, lo, hi, scale, variance, mass):
    """Density of scale * T + N(0, variance), T a standard normal truncated
    to [lo, hi] with probability mass `mass`.  Broadcasts y against cells."""
    tv = scale * scale + variance
    mu = scale * np.asarray(y) / tv
    sigma = math.sqrt(variance / tv)
    weight = ndtr((hi - mu) / sigma) - ndtr((lo - mu) / sigma)
    return _normal_pdf(y, tv) * weight / mass


class _MixtureDensities:
    """Per-cell conditional densities of the quantized cribbing scheme.

    All cell expectations use Gauss-Legendre nodes warped through the normal
    CDF, which handles the two infinite outer cells exactly like the rest.
    """

    def __init__(self, params: GaussianMACParams, scheme: MixtureSchemeParams,
                 causal: bool = True):
        if abs(params.p1 - 1.0) > 1e-12:
            raise ValueError("internal: densities assume unit P1")
        self.params = params
        self.scheme = scheme
        # strictly causal encoders cannot adapt to the current cell, which
        # collapses the scheme to its rho = 1 (independent inputs) member
        self.rho = scheme.rho if causal else 1.0
        self.q = scheme.quantizer
        self.s2 = math.sqrt(params.p2)
        self.noise = params.noise
        self.lo, self.hi = self.q.cell_edges()
        self.mass = 1.0 / self.q.n_cells

        nodes, weights = leggauss(INNER_CELL_NODES)
        u01 = 0.5 * (nodes + 1.0)
        base = (np.arange(self.q.n_cells)[:, None] + u01[None, :]) * self.mass
        self.cell_nodes = ndtri(base)               # (cells, nodes)
        self.cell_weights = 0.5 * weights            # E over the cell

    def x1_plus_noise(self, y):
        """Per-cell density of X1 + W given Z1; shape (..., cells)."""
        return _tn_conv_normal_pdf(np.asarray(y)[..., None], self.lo, self.hi,
                                   1.0, self.noise, self.mass)

    def x2_plus_noise(self, y):
        """Per-cell density of X2 + W given Z1 (the mixture law)."""
        y = np.asarray(y)
        gauss = _normal_pdf(y, self.s2 ** 2 + self.noise)[..., None]
        mimic = _tn_conv_normal_pdf(y[..., None], self.lo, self.hi,
                                    self.s2, self.noise, self.mass)
        return self.rho * gauss + (1.0 - self.rho) * mimic

    def output_given_cell(self, y):
        """Per-cell density of Y = X1 + X2 + W given Z1; shape (..., cells).

        The mimic component needs the convolution of two truncated normals,
        done by cell quadrature over X2 with the X1 + W factor closed-form.
        """
        y = np.asarray(y)
        gauss_part = _tn_conv_normal_pdf(
            y[..., None], self.lo, self.hi, 1.0,
            self.s2 ** 2 + self.noise, self.mass)
        if self.rho == 1.0:
            return gauss_part
        shifted = (y[..., None, None]
                   - self.s2 * self.cell_nodes)      # (..., cells, nodes)
        inner = _tn_conv_normal_pdf(shifted, self.lo[:, None], self.hi[:, None],
                                    1.0, self.noise, self.mass)
        mimic_part = (inner * self.cell_weights).sum(axis=-1)
        return self.rho * gauss_part + (1.0 - self.rho) * mimic_part


def _gl_entropy_bits(density_fn, limit: float, points: int) -> float:
    """-integral f log2 f over [-limit, limit] by Gauss-Legendre."""
    nodes, weights = leggauss(points)
    y = nodes * limit
    f = np.asarray(density_fn(y), dtype=float)
    logs = np.zeros_like(f)
    np.log2(f, out=logs, where=f > 0.0)
    return float(-(weights * limit * f * logs).sum(axis=-1).mean()
                 if f.ndim > 1 else -(weights * limit * f * logs).sum())


def _entropy_per_cell(per_cell_fn, limit: float, points: int) -> np.ndarray:
    nodes, weights = leggauss(points)
    y = nodes * limit
    f = per_cell_fn(y)                                # (points, cells)
    logs = np.zeros_like(f)
    np.log2(f, out=logs, where=f > 0.0)
    return -(weights[:, None] * limit * f * logs).sum(axis=0)


@dataclass(frozen=True)
class MixtureBounds:
    """Pentagon bounds of the quantized scheme at one rho, with the Monte
    Carlo standard errors of the two sum bounds."""

    bounds: RateBounds
    se_sum_cond: float
    se_sum_total: float
    rho: float
    warnings: tuple = ()


def _normalize_power(params: GaussianMACParams):
    """Rescale so the quantized encoder has unit power; rates are invariant."""
    if params.p1 == 1.0:
        return params
    return GaussianMACParams(p1=1.0, p2=params.p2 / params.p1,
                             noise=params.noise / params.p1)


def mixture_bounds(params: GaussianMACParams, scheme: MixtureSchemeParams,
                   causal: bool = True) -> MixtureBounds:
    """Case B bounds of the quantized scheme (U and Z2 constant):

        b1 = H(Z1) + I(X1;Y | X2,Z1)      b2 = I(X2;Y | X1)
        b_sum_cond = H(Z1) + I(X1,X2;Y | Z1)   b_sum_total = I(X1,X2;Y)

    The individual bounds are deterministic quadratures of closed-form
    densities; the sum bounds are Monte Carlo with reported standard errors.
    """
    params = _normalize_power(params)
    dens = _MixtureDensities(params, scheme, causal=causal)
    limit = 8.0 * math.sqrt(params.p1 + params.p2 + params.noise)
    bits = float(scheme.quantizer.bits)
    h_w = gaussian_entropy_bits(params.noise)

    h1_cells = _entropy_per_cell(dens.x1_plus_noise, limit, scheme.quad_points)
    b1 = bits + float(h1_cells.mean()) - h_w
    h2_cells = _entropy_per_cell(dens.x2_plus_noise, limit, scheme.quad_points)
    b2 = float(h2_cells.mean()) - h_w

    h_y_cond, se_cond, h_y, se_tot = _mc_output_entropies(params, scheme, dens,
                                                          limit)
    b_sum_cond = bits + h_y_cond - h_w
    b_sum_total = h_y - h_w

    warnings = []
    if max(se_cond, se_tot) > SE_WARN_LIMIT:
        warnings.append(
            f"mc_samples={scheme.mc_samples} leaves standard error "
            f"{max(se_cond, se_tot):.4f} bits above {SE_WARN_LIMIT}")
    return MixtureBounds(
        bounds=RateBounds(b1=max(b1, 0.0), b2=max(b2, 0.0),
                          b_sum_cond=max(b_sum_cond, 0.0),
                          b_sum_total=max(b_sum_total, 0.0)),
        se_sum_cond=se_cond, se_sum_total=se_tot,
        rho=dens.rho, warnings=tuple(warnings))


def _mc_output_entropies(params, scheme, dens: _MixtureDensities, limit: float):
    """Monte Carlo h(Y|Z1) and h(Y) with inner densities interpolated from a
    dense table; returns (h_cond, se_cond, h_total, se_total) in bits."""
    grid_limit = 1.5 * limit
    grid = np.linspace(-grid_limit, grid_limit, DENSITY_TABLE_SIZE)
    table = dens.output_given_cell(grid)              # (grid, cells)
    log_cond_table = np.full_like(table, -np.inf)
    np.log2(table, out=log_cond_table, where=table > 0.0)
    f_y = table.mean(axis=1)
    log_tot_table = np.zeros_like(f_y)
    np.log2(f_y, out=log_tot_table, where=f_y > 0.0)

    n_cells = dens.q.n_cells
    boundaries = dens.q.boundaries
    rho = dens.rho
    s2 = dens.s2
    sd_w = math.sqrt(params.noise)

    total = scheme.mc_samples
    batch = min(total, 1 << 17)
    sums = np.zeros(2)
    sumsq = np.zeros(2)
    done = 0
    index = 0
    while done < total:
        m = min(batch, total - done)
        rng = np.random.default_rng(np.random.SeedSequence(
            entropy=scheme.seed, spawn_key=(index,)))
        x1 = rng.standard_normal(m)
        z = np.searchsorted(boundaries, x1)
        mimic = ndtri((z + rng.random(m)) / n_cells)
        gauss = rng.standard_normal(m)
        x2t = np.where(rng.random(m) < rho, gauss, mimic)
        y = x1 + s2 * x2t + sd_w * rng.standard_normal(m)

        val_cond = np.empty(m)
        for cell in range(n_cells):
            mask = z == cell
            if mask.any():
                val_cond[mask] = -np.interp(y[mask], grid,
                                            log_cond_table[:, cell])
        val_tot = -np.interp(y, grid, log_tot_table)

        sums += (val_cond.sum(), val_tot.sum())
        sumsq += (np.square(val_cond).sum(), np.square(val_tot).sum())
        done += m
        index += 1

    means = sums / total
    variances = np.maximum(sumsq / total - means ** 2, 0.0)
    ses = np.sqrt(variances / total)
    return means[0], ses[0], means[1], ses[1]


def quantized_achievable_region(params: GaussianMACParams,
                                scheme: MixtureSchemeParams,
                                rho_grid) -> RateRegion:
    """Hull over rho of the mixture-scheme pentagons.

    `scheme.rho` is ignored; each grid value is evaluated with an
    independent seed stream derived from the scheme seed.
    """
    params = _normalize_power(params)
    points = [(0.0, 0.0)]
    per_rho = []
    warnings = []
    gens = {}
    for i, rho in enumerate(rho_grid):
        local = MixtureSchemeParams(
            rho=float(rho), quantizer=scheme.quantizer,
            mc_samples=scheme.mc_samples, quad_points=scheme.quad_points,
            seed=int(np.random.SeedSequence(
                entropy=scheme.seed, spawn_key=(i,)).generate_state(1)[0]))
        mb = mixture_bounds(params, local)
        warnings.extend(f"rho={rho:g}: {w}" for w in mb.warnings)
        row = {"rho": float(rho), "b1": mb.bounds.b1, "b2": mb.bounds.b2,
               "sum_cond": mb.bounds.b_sum_cond,
               "sum_total": mb.bounds.b_sum_total,
               "se_sum_cond": mb.se_sum_cond, "se_sum_total": mb.se_sum_total}
        per_rho.append(row)
        for c in pentagon_corners(mb.bounds):
            points.append(c)
            gens.setdefault((round(c[0], 12), round(c[1], 12)), row)
    hull = convex_hull(points)
    return RateRegion(
        vertices=tuple(hull),
        generators=tuple(gens.get((round(v[0], 12), round(v[1], 12)))
                         for v in hull),
        metadata={"params": params, "bits": scheme.quantizer.bits,
                  "per_rho": per_rho, "warnings": warnings})
