"""Symbolic Fourier-Motzkin elimination over rate inequalities.

An inequality is  sum_v lhs[v] * v  <=  sum_t rhs[t] * t  where the v are
declared rate variables and the t are opaque information-term atoms such
as "H(Z1|U)".  Coefficients are exact rationals: floating point would
litter the projection with spurious near-duplicates.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping


def _clean(mapping: Mapping[str, Fraction]) -> dict:
    out = {}
    for name, coef in mapping.items():
        coef = Fraction(coef)
        if coef != 0:
            out[str(name)] = coef
    return out


@dataclass(frozen=True)
class LinearInequality:
    """lhs (variables) <= rhs (atoms); zero coefficients are not stored."""

    lhs: dict
    rhs: dict

    def __post_init__(self):
        object.__setattr__(self, "lhs", _clean(self.lhs))
        object.__setattr__(self, "rhs", _clean(self.rhs))

    def scaled(self, factor: Fraction) -> "LinearInequality":
        if factor <= 0:
            raise ValueError("inequalities scale by positive rationals only")
        return LinearInequality(
            lhs={v: c * factor for v, c in self.lhs.items()},
            rhs={t: c * factor for t, c in self.rhs.items()})

    def plus(self, other: "LinearInequality") -> "LinearInequality":
        lhs = dict(self.lhs)
        for v, c in other.lhs.items():
            lhs[v] = lhs.get(v, Fraction(0)) + c
        rhs = dict(self.rhs)
        for t, c in other.rhs.items():
            rhs[t] = rhs.get(t, Fraction(0)) + c
        return LinearInequality(lhs=lhs, rhs=rhs)

    def _canonical_key(self) -> tuple:
        terms = ([(("v", name), coef) for name, coef in self.lhs.items()]
                 + [(("a", name), coef) for name, coef in self.rhs.items()])
        terms.sort(key=lambda item: item[0])
        if not terms:
            return ()
        scale = abs(terms[0][1])
        return tuple((kind_name, coef / scale) for kind_name, coef in terms)

    def render(self) -> str:
        def side(mapping):
            if not mapping:
                return "0"
            parts = []
            for name in sorted(mapping):
                coef = mapping[name]
                sign = "-" if coef < 0 else ("+" if parts else "")
                mag = abs(coef)
                coef_txt = "" if mag == 1 else f"{mag}*"
                parts.append(f"{sign} {coef_txt}{name}".strip())
            return " ".join(parts)
        return f"{side(self.lhs)} <= {side(self.rhs)}"


@dataclass(frozen=True)
class InequalitySystem:
    inequalities: tuple
    variables: frozenset

    def __post_init__(self):
        ineqs = tuple(self.inequalities)
        variables = frozenset(self.variables)
        for ineq in ineqs:
            undeclared = set(ineq.lhs) - variables
            if undeclared:
                raise ValueError(f"undeclared variables {sorted(undeclared)} "
                                 f"in {ineq.render()!r}")
            clash = set(ineq.rhs) & variables
            if clash:
                raise ValueError(f"declared variables {sorted(clash)} used "
                                 f"as atoms in {ineq.render()!r}")
        object.__setattr__(self, "inequalities", ineqs)
        object.__setattr__(self, "variables", variables)

    def render(self) -> str:
        return "\n".join(ineq.render() for ineq in self.inequalities)


def eliminate(sys: InequalitySystem, var: str) -> InequalitySystem:
    """Project out `var` by pairing its upper and lower bounds.

    Inequalities bounding var on one side only carry no joint information
    and are dropped, exactly as in the textbook procedure.
    """
    if var not in sys.variables:
        raise ValueError(f"unknown variable {var!r}")
    zeros, uppers, lowers = [], [], []
    for ineq in sys.inequalities:
        coef = ineq.lhs.get(var, Fraction(0))
        if coef == 0:
            zeros.append(ineq)
        elif coef > 0:
            uppers.append(ineq.scaled(Fraction(1, coef)))
        else:
            lowers.append(ineq.scaled(Fraction(1, -coef)))
    combined = list(zeros)
    for up in uppers:
        for low in lowers:
            combined.append(up.plus(low))   # var cancels: +1 and -1
    return InequalitySystem(inequalities=tuple(combined),
                            variables=sys.variables - {var})


def canonical_equal(a: InequalitySystem, b: InequalitySystem) -> bool:
    """Set equality after normalization (sorted terms, positive unit leading
    coefficient, duplicates removed)."""
    if a.variables != b.variables:
        raise ValueError(f"variable namespaces differ: "
                         f"{sorted(a.variables)} vs {sorted(b.variables)}")
    keys_a = {ineq._canonical_key() for ineq in a.inequalities}
    keys_b = {ineq._canonical_key() for ineq in b.inequalities}
    return keys_a == keys_b


def feasible_interval(sys: InequalitySystem, var: str,
                      assignment: Mapping[str, Fraction]) -> tuple:
    """Exact (lower, upper) bounds on `var` given rational values for all
    other variables and atoms; None means unbounded on that side.

    This is the soundness oracle for eliminate(): a point satisfies the
    projected system iff the interval is nonempty and the zero-coefficient
    inequalities hold.
    """
    lower, upper = None, None
    for ineq in sys.inequalities:
        coef = ineq.lhs.get(var, Fraction(0))
        slack = sum((Fraction(c) * Fraction(assignment[t])
                     for t, c in ineq.rhs.items()), Fraction(0))
        slack -= sum((Fraction(c) * Fraction(assignment[v])
                      for v, c in ineq.lhs.items() if v != var), Fraction(0))
        if coef == 0:
            if slack < 0:
                return Fraction(1), Fraction(0)   # empty
        elif coef > 0:
            bound = slack / coef
            upper = bound if upper is None else min(upper, bound)
        else:
            bound = slack / coef
            lower = bound if lower is None else max(lower, bound)
    return lower, upper


def satisfies(sys: InequalitySystem, assignment: Mapping[str, Fraction]) -> bool:
    """Exact check of every inequality under a full rational assignment."""
    for ineq in sys.inequalities:
        lhs = sum((Fraction(c) * Fraction(assignment[v])
                   for v, c in ineq.lhs.items()), Fraction(0))
        rhs = sum((Fraction(c) * Fraction(assignment[t])
                   for t, c in ineq.rhs.items()), Fraction(0))
        if lhs > rhs:
            return False
    return True


# ---------------------------------------------------------------------------
# the rate-splitting derivation shipped as data
# ---------------------------------------------------------------------------

ATOM_H1 = "H(Z1|U)"
ATOM_H2 = "H(Z2|U)"
ATOM_I1 = "I(X1;Y|X2,Z1,U)"
ATOM_I2 = "I(X2;Y|X1,Z2,U)"
ATOM_I12 = "I(X1,X2;Y|Z1,Z2,U)"
ATOM_IT = "I(X1,X2;Y)"


def rate_splitting_system() -> InequalitySystem:
    """Start of the derivation: full rates R1, R2 with split parts R1pp,
    R2pp (the directly decoded shares)."""
    one = Fraction(1)
    ineqs = (
        LinearInequality(lhs={"R1": one, "R1pp": -one}, rhs={ATOM_H1: one}),
        LinearInequality(lhs={"R2": one, "R2pp": -one}, rhs={ATOM_H2: one}),
        LinearInequality(lhs={"R1pp": one}, rhs={ATOM_I1: one}),
        LinearInequality(lhs={"R2pp": one}, rhs={ATOM_I2: one}),
        LinearInequality(lhs={"R1pp": one, "R2pp": one}, rhs={ATOM_I12: one}),
        LinearInequality(lhs={"R1": one, "R2": one}, rhs={ATOM_IT: one}),
    )
    return InequalitySystem(inequalities=ineqs,
                            variables=frozenset({"R1", "R2", "R1pp", "R2pp"}))


def strictly_causal_region_system() -> InequalitySystem:
    """Target of the derivation: the four inequalities in R1 and R2 only.

    Declared over the same four variables as rate_splitting_system so the
    two sides share a namespace after eliminating the split rates.
    """
    one = Fraction(1)
    ineqs = (
        LinearInequality(lhs={"R1": one}, rhs={ATOM_H1: one, ATOM_I1: one}),
        LinearInequality(lhs={"R2": one}, rhs={ATOM_H2: one, ATOM_I2: one}),
        LinearInequality(lhs={"R1": one, "R2": one},
                         rhs={ATOM_H1: one, ATOM_H2: one, ATOM_I12: one}),
        LinearInequality(lhs={"R1": one, "R2": one}, rhs={ATOM_IT: one}),
    )
    return InequalitySystem(inequalities=ineqs,
                            variables=frozenset({"R1", "R2"}))
