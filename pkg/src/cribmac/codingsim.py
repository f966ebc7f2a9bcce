"""Desk-scale simulator of the block-Markov achievability scheme (Case A).

Rates split as R1 = R1' + R1'' and R2 = R2' + R2''.  Each block carries a
cloud center u^n resolving the previous block's (m1', m2'), satellite
codewords z_l^n for the current m_l' (decodable by the other encoder from
the cribbed signal), and x_l^n for the direct parts m_l''.  The receiver
waits for the whole superblock and decodes blocks in reverse order by
strong joint typicality; each encoder decodes the other's m' by exact
matching on its z-codebook at the end of every block.

Message-index boundary convention: the resolved pair entering block 1 and
the fresh pair of the final block are pinned to index 0, so each private
split rate is effectively scaled by (B-1)/B; the scaling is reported in
the result metadata rather than folded into the configured rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetError
from .probcore import JointPMF
from .regioncore import ChannelSpec, CribFactorization, assemble_joint

MAX_RATE_EXPONENT = 20       # exhaustive decoding bound: 2^20 candidate tuples
MAX_CODEWORDS = 2 ** 24
COUNT_SLACK = 1e-9

ERROR_CLASSES = ("crib_decode", "miss", "x2_codeword", "x1_codeword",
                 "both_private", "cloud_center")


def _ceil_count(n: int, rate: float) -> int:
    return 1 << math.ceil(n * rate - 1e-9) if rate > 0 else 1


@dataclass(frozen=True)
class SimConfig:
    channel: ChannelSpec
    factorization: CribFactorization
    n: int
    blocks: int
    rates: tuple          # (r1_split, r1_direct, r2_split, r2_direct)
    epsilon: float
    trials: int
    seed: int = 0

    def __post_init__(self):
        if self.factorization.case != "A":
            raise ValueError("the simulator covers Case A only")
        if self.blocks < 2:
            raise ValueError("need at least two blocks")
        if not 0.0 < self.epsilon < 0.5:
            raise ValueError("epsilon must be in (0, 0.5)")
        if self.n < 1 or self.trials < 1:
            raise ValueError("n and trials must be >= 1")
        rates = tuple(float(r) for r in self.rates)
        if len(rates) != 4 or min(rates) < 0.0:
            raise ValueError("rates are four nonnegative split values")
        if self.n * sum(rates) > MAX_RATE_EXPONENT + 1e-9:
            raise ValueError(
                f"n * total rate = {self.n * sum(rates):.2f} exceeds the "
                f"exhaustive decoding bound {MAX_RATE_EXPONENT}")
        object.__setattr__(self, "rates", rates)
        counts = self.message_counts
        total = (counts["u"]
                 + counts["u"] * (counts["m1p"] + counts["m2p"])
                 + counts["u"] * counts["m1p"] * counts["m1pp"]
                 + counts["u"] * counts["m2p"] * counts["m2pp"])
        if total > MAX_CODEWORDS:
            raise BudgetError(f"{total} codewords exceed the 2^24 guard")

    @property
    def message_counts(self) -> dict:
        r1p, r1pp, r2p, r2pp = self.rates
        m1p = _ceil_count(self.n, r1p)
        m2p = _ceil_count(self.n, r2p)
        return {
            "m1p": m1p, "m2p": m2p, "u": m1p * m2p,
            "m1pp": _ceil_count(self.n, r1pp),
            "m2pp": _ceil_count(self.n, r2pp),
        }

    @property
    def effective_rates(self) -> tuple:
        """(R1, R2) actually carried per symbol given the index pinning."""
        r1p, r1pp, r2p, r2pp = self.rates
        scale = (self.blocks - 1) / self.blocks
        return (r1pp + scale * r1p, r2pp + scale * r2p)


@dataclass(frozen=True)
class SimResult:
    trials: int
    errors: int
    class_counts: dict
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if sum(self.class_counts.values()) != self.errors:
            raise ValueError("error classes must partition the error count")

    @property
    def error_rate(self) -> float:
        return self.errors / self.trials

    @property
    def wilson_interval(self) -> tuple:
        return wilson_interval(self.errors, self.trials)


def wilson_interval(k: int, n: int, z: float = 1.96) -> tuple:
    """Wilson 95% score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


# ---------------------------------------------------------------------------
# typicality
# ---------------------------------------------------------------------------

def typical_check(sequences: tuple, j: JointPMF, epsilon: float) -> bool:
    """Strong typicality: every cell's empirical frequency is within
    epsilon * p of its probability (zero-probability cells must be empty)."""
    seqs = [np.asarray(s, dtype=np.int64) for s in sequences]
    if len(seqs) != len(j.axes):
        raise ValueError(f"need {len(j.axes)} sequences, got {len(seqs)}")
    n = seqs[0].shape[0]
    if any(s.shape != (n,) for s in seqs):
        raise ValueError("sequences must share one length")
    for s, ax in zip(seqs, j.axes):
        if s.min() < 0 or s.max() >= ax.size:
            raise ValueError(f"symbols out of range for axis {ax.name}")
    cells = np.zeros(n, dtype=np.int64)
    for s, ax in zip(seqs, j.axes):
        cells = cells * ax.size + s
    counts = np.bincount(cells, minlength=j.mass.size)
    target = n * j.mass.ravel()
    return bool(np.all(np.abs(counts - target)
                       <= epsilon * target + COUNT_SLACK))


def _typical_mask(cand_cells: np.ndarray, target: np.ndarray,
                  epsilon: float) -> np.ndarray:
    """Vectorized strong-typicality test for (candidates, n) cell indices."""
    c, n = cand_cells.shape
    ncells = target.shape[0]
    flat = (np.arange(c, dtype=np.int64)[:, None] * ncells
            + cand_cells).ravel()
    counts = np.bincount(flat, minlength=c * ncells).reshape(c, ncells)
    scaled = n * target
    return np.all(np.abs(counts - scaled[None, :])
                  <= epsilon * scaled[None, :] + COUNT_SLACK, axis=1)


# ---------------------------------------------------------------------------
# codebooks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Codebooks:
    u: np.ndarray        # (Mu, n)
    z1: np.ndarray       # (Mu, M1p, n)
    z2: np.ndarray       # (Mu, M2p, n)
    x1: np.ndarray       # (Mu, M1p, M1pp, n)
    x2: np.ndarray       # (Mu, M2p, M2pp, n)


def _sample_rows(rng, cdf_rows: np.ndarray, cond_idx: np.ndarray) -> np.ndarray:
    """Draw one symbol per entry of cond_idx from the row cdf it selects."""
    r = rng.random(cond_idx.shape)
    rows = cdf_rows[cond_idx]
    return (r[..., None] >= rows[..., :-1]).sum(axis=-1)


class _Laws:
    """Sampling tables derived from a Case A factorization."""

    def __init__(self, f: CribFactorization, ch: ChannelSpec):
        self.p_u = f.p_u
        pz1_u = f.k1.sum(axis=1)                      # (k, nz1)
        pz2_u = f.k2.sum(axis=1)                      # (k, nz2)
        with np.errstate(invalid="ignore", divide="ignore"):
            x1_zu = f.k1 / np.where(pz1_u[:, None, :] > 0.0,
                                    pz1_u[:, None, :], 1.0)
            x2_zu = f.k2 / np.where(pz2_u[:, None, :] > 0.0,
                                    pz2_u[:, None, :], 1.0)
        self.cdf_u = np.cumsum(f.p_u)[None, :]
        self.cdf_z1_u = np.cumsum(pz1_u, axis=1)
        self.cdf_z2_u = np.cumsum(pz2_u, axis=1)
        # P(x1 | u, z1) laid out as rows indexed by u * nz1 + z1
        k, n1, nz1 = f.k1.shape
        nz2 = f.k2.shape[2]
        self.nz1, self.nz2 = nz1, nz2
        self.cdf_x1_uz = np.cumsum(
            np.transpose(x1_zu, (0, 2, 1)).reshape(k * nz1, n1), axis=1)
        self.cdf_x2_uz = np.cumsum(
            np.transpose(x2_zu, (0, 2, 1)).reshape(k * nz2, f.k2.shape[1]),
            axis=1)
        self.cdf_y = np.cumsum(
            ch.transition.reshape(-1, ch.y_size), axis=1)
        self.n2 = ch.x2_size


def build_codebooks(cfg: SimConfig, rng: np.random.Generator) -> Codebooks:
    """Superposition codebooks for one block, deterministic given rng state."""
    laws = _Laws(cfg.factorization, cfg.channel)
    counts = cfg.message_counts
    mu, m1p, m2p = counts["u"], counts["m1p"], counts["m2p"]
    m1pp, m2pp = counts["m1pp"], counts["m2pp"]
    n = cfg.n

    u = _sample_rows(rng, laws.cdf_u, np.zeros((mu, n), dtype=np.int64))
    z1 = _sample_rows(rng, laws.cdf_z1_u, np.broadcast_to(u[:, None, :],
                                                          (mu, m1p, n)))
    z2 = _sample_rows(rng, laws.cdf_z2_u, np.broadcast_to(u[:, None, :],
                                                          (mu, m2p, n)))
    uz1 = (u[:, None, :] * laws.nz1 + z1)[:, :, None, :]
    x1 = _sample_rows(rng, laws.cdf_x1_uz,
                      np.broadcast_to(uz1, (mu, m1p, m1pp, n)))
    uz2 = (u[:, None, :] * laws.nz2 + z2)[:, :, None, :]
    x2 = _sample_rows(rng, laws.cdf_x2_uz,
                      np.broadcast_to(uz2, (mu, m2p, m2pp, n)))
    return Codebooks(u=u, z1=z1, z2=z2, x1=x1, x2=x2)


# ---------------------------------------------------------------------------
# one superblock
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrialOutcome:
    error: bool
    error_class: str = ""


def draw_messages(cfg: SimConfig, rng: np.random.Generator) -> dict:
    """Uniform message indices honoring the pinned boundary blocks."""
    counts = cfg.message_counts
    b = cfg.blocks
    m = {
        "m1p": rng.integers(0, counts["m1p"], size=b),
        "m2p": rng.integers(0, counts["m2p"], size=b),
        "m1pp": rng.integers(0, counts["m1pp"], size=b),
        "m2pp": rng.integers(0, counts["m2pp"], size=b),
    }
    m["m1p"][b - 1] = 0
    m["m2p"][b - 1] = 0
    return m


def run_superblock(cfg: SimConfig, messages: dict, seed=None) -> TrialOutcome:
    """Encode, transmit and backward-decode one superblock.

    An encoder-side tie while decoding the cribbed split message counts as
    an error outright (the pessimistic accounting of the scheme analysis).
    Receiver-side failures are attributed to the first erring block in
    decoding order: `miss` when the transmitted tuple is not typical,
    otherwise the class of the first competing typical tuple.
    """
    ch = cfg.channel
    counts = cfg.message_counts
    mu, m2p_count = counts["u"], counts["m2p"]
    m1pp_count, m2pp_count = counts["m1pp"], counts["m2pp"]
    target = assemble_joint(cfg.factorization, ch).mass.ravel()
    sizes = (cfg.factorization.u_size, ch.x1_size, ch.z1_size,
             ch.x2_size, ch.z2_size, ch.y_size)
    laws = _Laws(cfg.factorization, ch)
    root = np.random.SeedSequence(entropy=cfg.seed if seed is None else seed)

    b_total = cfg.blocks
    m1p, m2p = messages["m1p"], messages["m2p"]
    m1pp, m2pp = messages["m1pp"], messages["m2pp"]
    if m1p[b_total - 1] != 0 or m2p[b_total - 1] != 0:
        raise ValueError("final-block split indices are pinned to 0")

    books = []
    ys = []
    prev_pair = 0            # resolved (m1', m2') entering the block
    for b in range(b_total):
        rng = np.random.default_rng(root.spawn(1)[0])
        cb = build_codebooks(cfg, rng)
        books.append(cb)

        x1 = cb.x1[prev_pair, m1p[b], m1pp[b]]
        x2 = cb.x2[prev_pair, m2p[b], m2pp[b]]
        y = _sample_rows(rng, laws.cdf_y, x1 * ch.x2_size + x2)
        ys.append(y)

        # cribbed split-message decoding at both encoders (exact matching);
        # the final block's split indices are pinned, so nothing to decode
        if b < b_total - 1:
            z1_seen = ch.g1[x1]
            z2_seen = ch.g2[x2]
            hits1 = int((cb.z1[prev_pair] == z1_seen[None, :]).all(axis=1).sum())
            hits2 = int((cb.z2[prev_pair] == z2_seen[None, :]).all(axis=1).sum())
            if hits1 != 1 or hits2 != 1:
                return TrialOutcome(error=True, error_class="crib_decode")
        prev_pair = int(m1p[b]) * m2p_count + int(m2p[b])

    # backward decoding
    first_error = ""
    known_m1p, known_m2p = 0, 0      # final-block convention
    for b in range(b_total - 1, -1, -1):
        cb = books[b]
        i_cands = np.arange(mu) if b > 0 else np.zeros(1, dtype=np.int64)
        ii, jj, kk = np.meshgrid(i_cands, np.arange(m1pp_count),
                                 np.arange(m2pp_count), indexing="ij")
        ii, jj, kk = ii.ravel(), jj.ravel(), kk.ravel()

        u_seq = cb.u[ii]
        z1_seq = cb.z1[ii, known_m1p]
        z2_seq = cb.z2[ii, known_m2p]
        x1_seq = cb.x1[ii, known_m1p, jj]
        x2_seq = cb.x2[ii, known_m2p, kk]
        y_seq = ys[b][None, :]

        cells = u_seq
        for arr, size in ((x1_seq, sizes[1]), (z1_seq, sizes[2]),
                          (x2_seq, sizes[3]), (z2_seq, sizes[4])):
            cells = cells * size + arr
        cells = cells * sizes[5] + y_seq
        mask = _typical_mask(cells, target, cfg.epsilon)

        true_prev = (int(m1p[b - 1]) * m2p_count + int(m2p[b - 1])
                     if b > 0 else 0)
        truth = (ii == true_prev) & (jj == m1pp[b]) & (kk == m2pp[b])
        wrong = mask & ~truth
        correct_typical = bool(mask[truth][0]) if truth.any() else False

        if not correct_typical or wrong.any():
            if not first_error:
                if not correct_typical:
                    first_error = "miss"
                else:
                    w = int(np.flatnonzero(wrong)[0])
                    if ii[w] != true_prev:
                        first_error = "cloud_center"
                    elif jj[w] != m1pp[b] and kk[w] != m2pp[b]:
                        first_error = "both_private"
                    elif jj[w] != m1pp[b]:
                        first_error = "x1_codeword"
                    else:
                        first_error = "x2_codeword"

        # the decoder carries its own estimate backward
        hits = np.flatnonzero(mask)
        est_prev = int(ii[hits[0]]) if hits.size else 0
        known_m1p, known_m2p = est_prev // m2p_count, est_prev % m2p_count

    if first_error:
        return TrialOutcome(error=True, error_class=first_error)
    return TrialOutcome(error=False)


def simulate(cfg: SimConfig) -> SimResult:
    """Aggregate cfg.trials superblocks with uniform messages."""
    class_counts = {name: 0 for name in ERROR_CLASSES}
    errors = 0
    for t in range(cfg.trials):
        ss = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(t,))
        rng = np.random.default_rng(ss)
        messages = draw_messages(cfg, rng)
        outcome = run_superblock(cfg, messages,
                                 seed=int(ss.generate_state(1)[0]))
        if outcome.error:
            errors += 1
            class_counts[outcome.error_class] += 1
    lo, hi = wilson_interval(errors, cfg.trials)
    return SimResult(
        trials=cfg.trials, errors=errors,
        class_counts={k: v for k, v in class_counts.items() if v},
        metadata={
            "effective_rates": cfg.effective_rates,
            "message_counts": cfg.message_counts,
            "wilson_95": (lo, hi),
            "epsilon": cfg.epsilon,
            "n": cfg.n,
            "blocks": cfg.blocks,
        })
