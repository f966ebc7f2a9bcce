"""Command-line interface: channel files in, JSON documents and CSV out.

Every invocation emits one self-describing JSON result document (stdout or
--out).  Curve subcommands additionally emit CSV: to --csv when given,
otherwise appended to stdout after the JSON, separated by a blank line.
Exit codes: 0 success, 2 malformed input, 3 tripped search/memory guard.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from importlib import resources

import numpy as np

from . import __version__
from .errors import BudgetError, InputError
from .regioncore import ChannelSpec, constant_crib_factorization, with_cribbing
from .regionsearch import RateRegion, SearchBudget, region_hull
from .relaycap import (
    RelayInstance,
    relay_delay_capacity,
    relay_nodelay_elgamal_form,
    relay_nodelay_region_form,
)
from .actioncrib import crib_or_not_capacity
from .gausscrib import (
    GaussianMACParams,
    MixtureSchemeParams,
    design_quantizer,
    no_cribbing_caps,
    perfect_cribbing_caps,
    quantized_achievable_region,
)
from .codingsim import SimConfig, simulate
from . import fme

GAUSSIAN_CSV_COLUMNS = ("rho", "b1", "b2", "sum_cond", "sum_total",
                        "se_b1", "se_b2", "se_sum_cond", "se_sum_total")
ACTION_CSV_COLUMNS = ("gamma", "capacity", "alpha0", "alpha1")


# ---------------------------------------------------------------------------
# channel files
# ---------------------------------------------------------------------------

def load_channel_file(path: str) -> ChannelSpec:
    """Parse a JSON channel document; falls back to the bundled examples
    (xor.json, selector.json, random222.json) when the path is their name.

    Schema: x1_size, x2_size, y_size, W as a row-major table of
    x1_size * x2_size rows (ordered x1-major) with y_size entries each,
    g1 and g2 as integer arrays.
    """
    text = _read_text(path)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from exc
    for key in ("x1_size", "x2_size", "y_size", "W", "g1", "g2"):
        if key not in doc:
            raise InputError(f"{path}: missing key {key!r}")
    n1, n2, ny = (int(doc[k]) for k in ("x1_size", "x2_size", "y_size"))
    rows = doc["W"]
    if len(rows) != n1 * n2:
        raise InputError(f"{path}: W needs {n1 * n2} rows, found {len(rows)}")
    w = np.zeros((n1, n2, ny))
    for r, row in enumerate(rows):
        if len(row) != ny:
            raise InputError(f"{path}: W row {r} (x1={r // n2}, x2={r % n2}) "
                             f"has {len(row)} entries, expected {ny}")
        total = float(sum(row))
        if abs(total - 1.0) > 1e-9 or min(row) < 0.0:
            raise InputError(f"{path}: W row {r} (x1={r // n2}, x2={r % n2}) "
                             f"is not a distribution (sum {total})")
        w[r // n2, r % n2] = row
    for name, size in (("g1", n1), ("g2", n2)):
        if len(doc[name]) != size:
            raise InputError(f"{path}: {name} needs {size} entries")
    try:
        return ChannelSpec(transition=w, g1=doc["g1"], g2=doc["g2"])
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except FileNotFoundError:
        bundled = resources.files("cribmac").joinpath("data", path)
        if bundled.is_file():
            return bundled.read_text(encoding="utf-8")
        raise InputError(f"no such file: {path}")


def _apply_crib_override(ch: ChannelSpec, crib1: str, crib2: str) -> ChannelSpec:
    def resolve(tag: str, size: int, current):
        if tag == "file":
            return current
        if tag == "const":
            return np.zeros(size, dtype=int)
        if tag == "identity":
            return np.arange(size)
        raise InputError(f"crib override must be file/const/identity, got {tag!r}")
    return with_cribbing(ch,
                         g1=resolve(crib1, ch.x1_size, ch.g1),
                         g2=resolve(crib2, ch.x2_size, ch.g2))


# ---------------------------------------------------------------------------
# inequality-system files
# ---------------------------------------------------------------------------

def parse_system_text(text: str, origin: str = "<string>") -> fme.InequalitySystem:
    """Text format: a `vars:` header then one inequality per line.

        vars: R1 R2 R1pp R2pp
        R1 - R1pp <= H(Z1|U)

    Declared names are rate variables, every other name is an atom.  Terms
    may carry rational coefficients (`2*R1`, `1/2 H(Z1|U)`).
    """
    variables = None
    inequalities = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("vars:"):
            variables = frozenset(line[len("vars:"):].split())
            continue
        if variables is None:
            raise InputError(f"{origin}:{lineno}: missing `vars:` header")
        inequalities.append(_parse_inequality(line, variables, origin, lineno))
    if variables is None:
        raise InputError(f"{origin}: no `vars:` header found")
    try:
        return fme.InequalitySystem(inequalities=tuple(inequalities),
                                    variables=variables)
    except ValueError as exc:
        raise InputError(f"{origin}: {exc}") from exc


def _parse_side(text: str, origin: str, lineno: int) -> dict:
    out = {}
    for chunk in text.replace("-", " + -").split("+"):
        chunk = chunk.strip()
        if not chunk:
            continue
        sign = Fraction(1)
        if chunk.startswith("-"):
            sign = Fraction(-1)
            chunk = chunk[1:].strip()
        parts = [p for p in chunk.replace("*", " ").split() if p]
        if not parts:
            raise InputError(f"{origin}:{lineno}: empty term")
        coef = Fraction(1)
        if len(parts) == 2:
            try:
                coef = Fraction(parts[0])
            except ValueError:
                raise InputError(f"{origin}:{lineno}: bad coefficient "
                                 f"{parts[0]!r}")
            name = parts[1]
        elif len(parts) == 1:
            name = parts[0]
            if name == "0":
                continue
        else:
            raise InputError(f"{origin}:{lineno}: cannot parse term {chunk!r}")
        out[name] = out.get(name, Fraction(0)) + sign * coef
    return out


def _parse_inequality(line: str, variables, origin: str, lineno: int):
    for rel in ("<=", ">="):
        if rel in line:
            left_text, right_text = line.split(rel, 1)
            break
    else:
        raise InputError(f"{origin}:{lineno}: no <= or >= relation")
    left = _parse_side(left_text, origin, lineno)
    right = _parse_side(right_text, origin, lineno)
    if rel == ">=":
        left, right = right, left
    lhs, rhs = {}, {}
    for name, coef in left.items():
        if name in variables:
            lhs[name] = lhs.get(name, Fraction(0)) + coef
        else:
            rhs[name] = rhs.get(name, Fraction(0)) - coef
    for name, coef in right.items():
        if name in variables:
            lhs[name] = lhs.get(name, Fraction(0)) - coef
        else:
            rhs[name] = rhs.get(name, Fraction(0)) + coef
    return fme.LinearInequality(lhs=lhs, rhs=rhs)


# ---------------------------------------------------------------------------
# result documents
# ---------------------------------------------------------------------------

def _emit(args, payload: dict, csv_text: str = "") -> None:
    doc = {
        "command": "cribmac " + " ".join(args.raw_argv),
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "payload": payload,
    }
    body = json.dumps(doc, indent=2, default=_json_default)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(body + "\n")
    else:
        print(body)
    if csv_text:
        if getattr(args, "csv", None):
            with open(args.csv, "w", encoding="utf-8") as fh:
                fh.write(csv_text)
        elif args.out:
            with open(args.out + ".csv", "w", encoding="utf-8") as fh:
                fh.write(csv_text)
        else:
            print()
            print(csv_text, end="")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj)}")


def region_payload(region: RateRegion) -> dict:
    return {
        "vertices": [[float(a), float(b)] for a, b in region.vertices],
        "equal_rate_point": region.equal_rate_point(),
        "metadata": {k: v for k, v in region.metadata.items()
                     if k in ("case", "bits", "per_rho", "warnings")},
    }


def parse_region_payload(payload: dict) -> RateRegion:
    """Rebuild and validate a region from an emitted payload (round trip)."""
    region = RateRegion(vertices=tuple((a, b) for a, b in payload["vertices"]))
    return region.validate()


def _csv(columns, rows) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(repr(float(row[c])) for c in columns))
    return "\n".join(lines) + "\n"


def _parse_grid(spec: str) -> list:
    """`a:b:step` inclusive, or a comma-separated list."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise InputError(f"grid must be start:stop:step, got {spec!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise InputError("grid step must be positive")
        count = int(round((stop - start) / step))
        return [start + i * step for i in range(count + 1)]
    return [float(p) for p in spec.split(",") if p.strip()]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _budget(args) -> SearchBudget:
    return SearchBudget(restarts=args.budget_restarts, iters=args.budget_iters,
                        u_size=args.u_size, master_seed=args.seed)


def _cmd_region(args) -> None:
    ch = _apply_crib_override(load_channel_file(args.channel),
                              args.crib1, args.crib2)
    angles = np.linspace(0.0, np.pi / 2.0, args.mu_points)
    mu_grid = [(float(np.cos(t)), float(np.sin(t))) for t in angles]
    region = region_hull(ch, args.case, mu_grid, _budget(args),
                         threads=args.threads)
    payload = region_payload(region)
    payload["case"] = args.case
    _emit(args, payload)


def _cmd_relay(args) -> None:
    ch = _apply_crib_override(load_channel_file(args.channel),
                              args.crib1, "const")
    budget = _budget(args)
    values = {}
    if args.form in ("delay", "all"):
        values["delay"] = relay_delay_capacity(
            RelayInstance(channel=ch, case="delay"), budget)
    if args.form in ("nodelay-region", "all"):
        values["nodelay_region"] = relay_nodelay_region_form(
            RelayInstance(channel=ch, case="no_delay"), budget)
    if args.form in ("nodelay-elgamal", "all"):
        values["nodelay_elgamal"] = relay_nodelay_elgamal_form(
            RelayInstance(channel=ch, case="no_delay"), budget)
    _emit(args, {"capacities_bits": values})


def _cmd_action_curve(args) -> None:
    gammas = _parse_grid(args.gamma_grid)
    rows = []
    for gamma in gammas:
        value, point = crib_or_not_capacity(gamma, args.grid_resolution)
        rows.append({"gamma": gamma, "capacity": value,
                     "alpha0": point.alpha0, "alpha1": point.alpha1})
    _emit(args, {"curve": rows}, _csv(ACTION_CSV_COLUMNS, rows))


def _cmd_gaussian(args) -> None:
    params = GaussianMACParams(p1=args.p1, p2=args.p2, noise=args.noise)
    scheme = MixtureSchemeParams(rho=0.0, quantizer=design_quantizer(args.bits),
                                 mc_samples=args.mc_samples,
                                 quad_points=args.quad_points, seed=args.seed)
    rho_grid = _parse_grid(args.rho_grid)
    region = quantized_achievable_region(params, scheme, rho_grid)
    rows = [dict(r, se_b1=0.0, se_b2=0.0) for r in region.metadata["per_rho"]]
    nc = no_cribbing_caps(params)
    payload = region_payload(region)
    payload.update({
        "bits": args.bits,
        "no_cribbing_caps": {"r1": nc[0], "r2": nc[1], "sum": nc[2]},
        "perfect_cribbing_rho1_sum": perfect_cribbing_caps(params, 1.0)[1],
        "warnings": region.metadata["warnings"],
    })
    _emit(args, payload, _csv(GAUSSIAN_CSV_COLUMNS, rows))


def _cmd_fme(args) -> None:
    system = parse_system_text(_read_text(args.system), args.system)
    for var in args.eliminate.split(","):
        var = var.strip()
        if var:
            try:
                system = fme.eliminate(system, var)
            except ValueError as exc:
                raise InputError(str(exc)) from exc
    payload = {"system": system.render().splitlines(),
               "variables": sorted(system.variables)}
    if args.check_against:
        target = parse_system_text(_read_text(args.check_against),
                                   args.check_against)
        try:
            equal = fme.canonical_equal(system, target)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        payload["check"] = "EQUAL" if equal else "DIFFERENT"
    _emit(args, payload)


def _parse_law(text: str, size: int, what: str) -> list:
    values = [float(p) for p in text.split(",")]
    if len(values) != size or min(values) < 0 or abs(sum(values) - 1) > 1e-9:
        raise InputError(f"{what} must be {size} nonnegative values summing "
                         f"to 1, got {text!r}")
    return values


def _cmd_simulate(args) -> None:
    ch = _apply_crib_override(load_channel_file(args.channel),
                              args.crib1, args.crib2)
    px1 = (_parse_law(args.px1, ch.x1_size, "--px1") if args.px1
           else [1.0 / ch.x1_size] * ch.x1_size)
    px2 = (_parse_law(args.px2, ch.x2_size, "--px2") if args.px2
           else [1.0 / ch.x2_size] * ch.x2_size)
    f = constant_crib_factorization("A", [1.0], [px1], [px2], ch)
    rates = tuple(float(p) for p in args.rates.split(","))
    if len(rates) != 4:
        raise InputError("--rates must be r1_split,r1_direct,r2_split,r2_direct")
    cfg = SimConfig(channel=ch, factorization=f, n=args.n, blocks=args.blocks,
                    rates=rates, epsilon=args.epsilon, trials=args.trials,
                    seed=args.seed)
    result = simulate(cfg)
    lo, hi = result.wilson_interval
    _emit(args, {
        "trials": result.trials,
        "errors": result.errors,
        "error_rate": result.error_rate,
        "wilson_95": [lo, hi],
        "error_classes": result.class_counts,
        "metadata": result.metadata,
    })


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _add_common(sub, budget: bool = True):
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--threads", type=int, default=1)
    sub.add_argument("--out", default=None)
    if budget:
        sub.add_argument("--budget-restarts", type=int, default=8)
        sub.add_argument("--budget-iters", type=int, default=60)
        sub.add_argument("--u-size", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cribmac",
        description="Rate regions for MACs whose encoders overhear a "
                    "deterministic function of each other's input.")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    p = subs.add_parser("region", help="trace an achievable-region hull")
    p.add_argument("--channel", required=True)
    p.add_argument("--case", choices=("A", "B"), required=True)
    p.add_argument("--crib1", default="file")
    p.add_argument("--crib2", default="file")
    p.add_argument("--mu-points", type=int, default=17)
    _add_common(p)
    p.set_defaults(func=_cmd_region)

    p = subs.add_parser("relay", help="relay special-case capacities")
    p.add_argument("--channel", required=True)
    p.add_argument("--crib1", default="file")
    p.add_argument("--form", default="all",
                   choices=("delay", "nodelay-region", "nodelay-elgamal", "all"))
    _add_common(p)
    p.set_defaults(func=_cmd_relay)

    p = subs.add_parser("action-curve",
                        help="capacity-versus-cost curve of the binary "
                             "crib-or-not example")
    p.add_argument("--gamma-grid", default="0:1:0.05")
    p.add_argument("--grid-resolution", type=int, default=1000)
    p.add_argument("--csv", default=None)
    _add_common(p, budget=False)
    p.set_defaults(func=_cmd_action_curve)

    p = subs.add_parser("gaussian", help="Gaussian quantized-cribbing region")
    p.add_argument("--bits", type=int, default=1)
    p.add_argument("--rho-grid", default="0:1:0.02")
    p.add_argument("--p1", type=float, default=1.0)
    p.add_argument("--p2", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=0.5)
    p.add_argument("--mc-samples", type=int, default=10**6)
    p.add_argument("--quad-points", type=int, default=512)
    p.add_argument("--csv", default=None)
    _add_common(p, budget=False)
    p.set_defaults(func=_cmd_gaussian)

    p = subs.add_parser("fme", help="eliminate rate variables symbolically")
    p.add_argument("--system", required=True)
    p.add_argument("--eliminate", required=True)
    p.add_argument("--check-against", default=None)
    _add_common(p, budget=False)
    p.set_defaults(func=_cmd_fme)

    p = subs.add_parser("simulate", help="block-Markov coding simulation")
    p.add_argument("--channel", required=True)
    p.add_argument("--crib1", default="file")
    p.add_argument("--crib2", default="file")
    p.add_argument("--px1", default=None)
    p.add_argument("--px2", default=None)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--blocks", type=int, default=2)
    p.add_argument("--rates", required=True)
    p.add_argument("--epsilon", type=float, default=0.15)
    p.add_argument("--trials", type=int, default=200)
    _add_common(p, budget=False)
    p.set_defaults(func=_cmd_simulate)

    return parser


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.raw_argv = list(argv)
    try:
        args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BudgetError as exc:
        print(f"guard: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))
