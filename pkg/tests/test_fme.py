import random
from fractions import Fraction

import pytest

from cribmac import fme

ONE = Fraction(1)


def ineq(lhs, rhs):
    return fme.LinearInequality(lhs=lhs, rhs=rhs)


class TestLinearInequality:
    def test_zero_coefficients_dropped(self):
        i = ineq({"x": ONE, "y": Fraction(0)}, {"a": Fraction(0), "b": ONE})
        assert set(i.lhs) == {"x"} and set(i.rhs) == {"b"}

    def test_scaling_requires_positive_factor(self):
        i = ineq({"x": ONE}, {"a": ONE})
        with pytest.raises(ValueError):
            i.scaled(Fraction(-1))

    def test_canonical_key_collapses_positive_multiples(self):
        a = ineq({"x": Fraction(2)}, {"t": Fraction(3)})
        b = ineq({"x": Fraction(4)}, {"t": Fraction(6)})
        c = ineq({"x": Fraction(-2)}, {"t": Fraction(3)})
        assert a._canonical_key() == b._canonical_key()
        assert a._canonical_key() != c._canonical_key()


class TestSystemValidation:
    def test_undeclared_variable_rejected(self):
        with pytest.raises(ValueError):
            fme.InequalitySystem(
                inequalities=(ineq({"x": ONE}, {}),),
                variables=frozenset({"y"}))

    def test_variable_as_atom_rejected(self):
        with pytest.raises(ValueError):
            fme.InequalitySystem(
                inequalities=(ineq({"x": ONE}, {"y": ONE}),),
                variables=frozenset({"x", "y"}))


class TestEliminate:
    def test_paper_pipeline_reaches_region(self):
        sys0 = fme.rate_splitting_system()
        step1 = fme.eliminate(sys0, "R1pp")
        # intermediate system: five inequalities, R1pp gone
        assert len(step1.inequalities) == 5
        assert all("R1pp" not in i.lhs for i in step1.inequalities)
        step2 = fme.eliminate(step1, "R2pp")
        target = fme.strictly_causal_region_system()
        assert fme.canonical_equal(step2, target)

    def test_elimination_order_independent(self):
        sys0 = fme.rate_splitting_system()
        ab = fme.eliminate(fme.eliminate(sys0, "R1pp"), "R2pp")
        ba = fme.eliminate(fme.eliminate(sys0, "R2pp"), "R1pp")
        assert fme.canonical_equal(ab, ba)

    def test_one_sided_bounds_dropped(self):
        s = fme.InequalitySystem(
            inequalities=(ineq({"x": ONE}, {"a": ONE}),
                          ineq({"y": ONE}, {"b": ONE})),
            variables=frozenset({"x", "y"}))
        out = fme.eliminate(s, "x")
        assert len(out.inequalities) == 1
        assert out.inequalities[0].lhs == {"y": ONE}

    def test_canonical_pairing(self):
        s = fme.InequalitySystem(
            inequalities=(ineq({"x": ONE}, {"a": ONE}),
                          ineq({"x": -ONE}, {})),
            variables=frozenset({"x"}))
        out = fme.eliminate(s, "x")
        assert len(out.inequalities) == 1
        assert out.inequalities[0].lhs == {}
        assert out.inequalities[0].rhs == {"a": ONE}

    def test_unknown_variable(self):
        with pytest.raises(ValueError):
            fme.eliminate(fme.rate_splitting_system(), "R3")


class TestCanonicalEqual:
    def test_reordered_system_equal(self):
        sys0 = fme.strictly_causal_region_system()
        flipped = fme.InequalitySystem(
            inequalities=tuple(reversed(sys0.inequalities)),
            variables=sys0.variables)
        assert fme.canonical_equal(sys0, flipped)

    def test_scaled_duplicates_equal(self):
        sys0 = fme.strictly_causal_region_system()
        doubled = fme.InequalitySystem(
            inequalities=sys0.inequalities + tuple(
                i.scaled(Fraction(2)) for i in sys0.inequalities),
            variables=sys0.variables)
        assert fme.canonical_equal(sys0, doubled)

    def test_coefficient_change_detected(self):
        sys0 = fme.strictly_causal_region_system()
        altered = list(sys0.inequalities)
        first = altered[0]
        rhs = dict(first.rhs)
        rhs[fme.ATOM_H1] = Fraction(2)
        altered[0] = ineq(first.lhs, rhs)
        other = fme.InequalitySystem(inequalities=tuple(altered),
                                     variables=sys0.variables)
        assert not fme.canonical_equal(sys0, other)

    def test_namespace_mismatch_raises(self):
        with pytest.raises(ValueError):
            fme.canonical_equal(fme.rate_splitting_system(),
                                fme.strictly_causal_region_system())


class TestSoundness:
    def test_projection_preserves_feasibility(self):
        # 100 random rational assignments: a point satisfies the projected
        # system iff some value of the eliminated variable satisfies the
        # original (checked by exact interval intersection)
        sys0 = fme.rate_splitting_system()
        projected = fme.eliminate(sys0, "R1pp")
        names = ["R1", "R2", "R2pp", fme.ATOM_H1, fme.ATOM_H2, fme.ATOM_I1,
                 fme.ATOM_I2, fme.ATOM_I12, fme.ATOM_IT]
        rng = random.Random(99)
        satisfied = 0
        for _ in range(100):
            assignment = {n: Fraction(rng.randint(-8, 12), rng.randint(1, 6))
                          for n in names}
            lo, hi = fme.feasible_interval(sys0, "R1pp", assignment)
            exists = not (lo is not None and hi is not None and lo > hi)
            assert exists == fme.satisfies(projected, assignment)
            satisfied += exists
        assert 0 < satisfied < 100   # both branches exercised
