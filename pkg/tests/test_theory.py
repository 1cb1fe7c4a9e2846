"""Estimators, the cooperation bound, ERM/VC oracles, concentration checks."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from guesslab.errors import (
    ConfigError,
    DomainError,
    InfeasibleError,
    PreconditionError,
    UndefinedConditionalError,
)
from guesslab.game import CoopLabel
from guesslab.theory import (
    FiniteHypothesisClass,
    LabeledSample,
    alpha_improvement,
    cer,
    coop_gap,
    erm,
    improvement_concentration_check,
    oer,
    oer_conditional,
    p_hat,
    phat_concentration_check,
    policy_improvement_check,
    random_bound_instance,
    run_bound_battery,
    sym_diff_class,
    cooperation_bound_check,
    triangle_inequality_check,
    triangle_inequality_exhaustive,
    vc_dimension_exact,
    vc_confidence_term,
)

CP, NC = CoopLabel.CP, CoopLabel.NC


def sample_of(zs, ys=None, xs=None):
    m = len(zs)
    return LabeledSample(
        xs=tuple(range(m)) if xs is None else tuple(xs),
        ys=tuple([0] * m) if ys is None else tuple(ys),
        zs=tuple(zs),
    )


class TestEstimators:
    def test_p_hat_examples(self):
        assert p_hat(sample_of([NC, CP, NC, CP])) == 0.5
        assert p_hat(sample_of([CP, CP, CP])) == 0.0
        assert p_hat(sample_of([NC, CP, CP, CP, NC])) == pytest.approx(0.4)

    def test_oer_examples(self):
        s = sample_of([CP] * 4, ys=[0, 1, 2, 3])
        assert oer(s, lambda x: x) == 0.0
        assert oer(s, lambda x: -1) == 1.0
        assert oer(s, lambda x: x if x else 9) == 0.25

    def test_cer_constant_classifiers(self):
        s = sample_of([NC, CP, NC, CP, NC])
        assert cer(s, lambda x: CP) == p_hat(s)
        assert cer(s, lambda x: NC) == pytest.approx(1 - p_hat(s))
        assert cer(s, lambda x: s.zs[x]) == 0.0

    def test_conditional_oer(self):
        s = sample_of([CP, CP, NC], ys=[0, 1, 2])
        wrong_only_on_nc = lambda x: x if s.zs[x] is CP else -1
        assert oer_conditional(s, wrong_only_on_nc, CP) == 0.0
        assert oer_conditional(s, wrong_only_on_nc, NC) == 1.0

    def test_empty_conditional_is_an_error(self):
        s = sample_of([CP, CP])
        with pytest.raises(UndefinedConditionalError):
            oer_conditional(s, lambda x: 0, NC)

    def test_coop_gap_arithmetic(self):
        # p=0.5, oer|NC=0.8, oer|CP=0.4 -> 0.5*0.8 - 0.5*0.4 = 0.2
        ys = [0, 0, 0, 0, 0, 0, 0, 0, 0, 0]
        zs = [NC] * 5 + [CP] * 5
        nc_wrong = {0, 1, 2, 3}  # 4/5 = 0.8
        cp_wrong = {5, 6}  # 2/5 = 0.4
        s = sample_of(zs, ys=ys)
        h = lambda x: -1 if (x in nc_wrong or x in cp_wrong) else 0
        assert coop_gap(s, h) == pytest.approx(0.2)

    def test_coop_gap_zero_and_negative(self):
        zs = [NC] * 5 + [CP] * 5
        s = sample_of(zs, ys=[0] * 10)
        balanced = lambda x: -1 if x in {0, 5} else 0  # 0.2 both sides
        assert coop_gap(s, balanced) == pytest.approx(0.0)
        # oer|NC=0.2, oer|CP=0.6 -> 0.5*0.2 - 0.5*0.6 = -0.2
        tilted = lambda x: -1 if x in {0, 5, 6, 7} else 0
        assert coop_gap(s, tilted) == pytest.approx(-0.2)

    @given(
        m=st.integers(2, 40),
        seed=st.integers(0, 10_000),
    )
    @settings(max_examples=100, deadline=None)
    def test_decomposition_identity(self, m, seed):
        """oer = p_hat * oer(|NC) + (1 - p_hat) * oer(|CP), exactly, whenever
        both labels are present."""
        rng = np.random.default_rng(seed)
        zs = [NC if v else CP for v in rng.integers(0, 2, m)]
        zs[0], zs[-1] = CP, NC
        ys = [int(v) for v in rng.integers(0, 3, m)]
        guesses = [int(v) for v in rng.integers(0, 3, m)]
        s = sample_of(zs, ys=ys)
        h = lambda x: guesses[x]
        lhs = oer(s, h)
        rhs = p_hat(s) * oer_conditional(s, h, NC) + (1 - p_hat(s)) * oer_conditional(s, h, CP)
        assert abs(lhs - rhs) < 1e-12

    @given(m=st.integers(1, 30), seed=st.integers(0, 9999))
    @settings(max_examples=60, deadline=None)
    def test_estimator_ranges(self, m, seed):
        rng = np.random.default_rng(seed)
        zs = [NC if v else CP for v in rng.integers(0, 2, m)]
        ys = [int(v) for v in rng.integers(0, 3, m)]
        s = sample_of(zs, ys=ys)
        h = lambda x: 0
        assert 0.0 <= p_hat(s) <= 1.0
        assert 0.0 <= oer(s, h) <= 1.0
        assert 0.0 <= cer(s, lambda x: CP) <= 1.0


class TestVcTerm:
    def test_boundary_value(self):
        # d=1, m=2, delta=1 -> (4 + sqrt(ln(4e))) / 2 ~ 2.772
        assert vc_confidence_term(1, 2, 1.0) == pytest.approx(2.772, abs=5e-4)

    def test_typical_value(self):
        assert vc_confidence_term(3, 1000, 0.1) == pytest.approx(1.955, abs=5e-4)

    def test_vanishes_with_sample_size(self):
        assert vc_confidence_term(3, 10**9, 0.1) < 0.01

    def test_monotone_decreasing_in_m(self):
        values = [vc_confidence_term(3, m, 0.1) for m in (10, 100, 1000, 10_000)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_preconditions(self):
        with pytest.raises(ConfigError):
            vc_confidence_term(0, 10, 0.1)
        with pytest.raises(ConfigError):
            vc_confidence_term(5, 4, 0.1)
        with pytest.raises(ConfigError):
            vc_confidence_term(1, 10, 0.0)


def binary_class(domain, tables):
    return FiniteHypothesisClass(
        domain=tuple(domain),
        tables=tuple(tuple(NC if v else CP for v in t) for t in tables),
        output_space="Z",
    )


class TestSymDiff:
    def test_singleton_gives_constant_cp(self):
        O = FiniteHypothesisClass(domain=(0, 1), tables=((0, 1),), output_space="Y")
        C = sym_diff_class(O)
        assert C.tables == ((CP, CP),)

    def test_size_bound(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            O, _, _ = random_bound_instance(rng, max_domain=5, max_hypotheses=5)
            assert len(sym_diff_class(O)) <= len(O) ** 2

    def test_two_hypotheses_differing_at_one_point(self):
        O = FiniteHypothesisClass(domain=(0, 1), tables=((0, 1), (2, 1)), output_space="Y")
        C = sym_diff_class(O)
        assert set(C.tables) == {(CP, CP), (NC, CP)}

    def test_symmetric_and_contains_constant_cp(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            O, _, _ = random_bound_instance(rng, max_domain=6, max_hypotheses=4)
            C = sym_diff_class(O)
            tables = set(C.tables)
            assert tuple([CP] * len(O.domain)) in tables
            for t1 in O.tables:
                for t2 in O.tables:
                    fwd = tuple(NC if a != b else CP for a, b in zip(t1, t2))
                    rev = tuple(NC if b != a else CP for a, b in zip(t1, t2))
                    assert fwd in tables and rev in tables


class TestErm:
    def test_realizable_class_reaches_zero(self):
        C = binary_class((0, 1, 2), [(0, 0, 0), (0, 1, 0), (1, 1, 1)])
        s = sample_of([CP, NC, CP], xs=(0, 1, 2))
        h = erm(C, s)
        assert cer(s, h) == 0.0
        assert h.index == 1

    def test_tie_breaks_to_lowest_index(self):
        C = binary_class((0, 1), [(0, 1), (1, 0)])
        s = sample_of([CP, CP], xs=(0, 1))  # both hypotheses err once
        assert erm(C, s).index == 0

    def test_point_outside_domain(self):
        C = binary_class((0, 1), [(0, 1)])
        s = sample_of([CP], xs=(7,))
        with pytest.raises(DomainError):
            erm(C, s)

    def test_matches_independent_exhaustive_scan(self):
        """200 random instances: the returned hypothesis achieves the same
        minimal error found by an independent reversed-order scan and is the
        lowest index achieving it."""
        rng = np.random.default_rng(42)
        for _ in range(200):
            _, C, s = random_bound_instance(rng, max_domain=8, max_hypotheses=6, max_m=32)
            chosen = erm(C, s)
            chosen_err = cer(s, chosen)
            best_err, best_idx = None, None
            for idx in reversed(range(len(C))):
                e = cer(s, C.hypothesis(idx))
                if best_err is None or e <= best_err:
                    best_err, best_idx = e, idx
            assert chosen_err == pytest.approx(best_err, abs=0)
            assert chosen.index == best_idx

    def test_erm_never_beaten(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            _, C, s = random_bound_instance(rng, max_domain=6, max_hypotheses=5, max_m=24)
            best = cer(s, erm(C, s))
            for idx in range(len(C)):
                assert best <= cer(s, C.hypothesis(idx)) + 1e-15


class TestVcDimension:
    def test_full_binary_class(self):
        for k in (1, 2, 3, 4):
            domain = tuple(range(k))
            tables = [
                tuple((mask >> i) & 1 for i in range(k)) for mask in range(2**k)
            ]
            C = binary_class(domain, tables)
            assert vc_dimension_exact(C) == k

    def test_singleton_class_zero(self):
        C = binary_class((0, 1, 2), [(0, 1, 0)])
        assert vc_dimension_exact(C) == 0

    def test_thresholds_on_ordered_points(self):
        points = (0, 1, 2, 3, 4)
        tables = [tuple(1 if x >= t else 0 for x in points) for t in range(6)]
        C = binary_class(points, tables)
        assert vc_dimension_exact(C) == 1

    def test_infeasible_domain_rejected(self):
        domain = tuple(range(20))
        C = binary_class(domain, [tuple(0 for _ in domain), tuple(1 for _ in domain)])
        with pytest.raises(InfeasibleError):
            vc_dimension_exact(C, max_check=16)

    def test_log2_upper_bound(self):
        rng = np.random.default_rng(9)
        for _ in range(30):
            _, C, _ = random_bound_instance(rng, max_domain=6, max_hypotheses=5)
            d = vc_dimension_exact(C)
            assert 2**d <= len(C)


class TestCooperationBound:
    def test_battery_no_violations(self):
        result = run_bound_battery(200, np.random.default_rng(7))
        assert result.all_hold, f"{result.violations} violations"

    def test_singleton_pool_specialization(self):
        """With one object hypothesis the bound reduces to
        cer(chat) <= p_hat + oer(o) - gap(o)."""
        rng = np.random.default_rng(21)
        for _ in range(50):
            O, C, s = random_bound_instance(rng, max_hypotheses=1)
            reports = cooperation_bound_check(O, C, s, delta=0.1)
            assert len(reports) == 1
            r = reports[0]
            assert r.holds_empirical
            assert r.cer_chat <= r.p_hat + r.oer_o - r.delta_oprime + 1e-12

    def test_superset_class_never_worse(self):
        """ERM over a superset of the disagreement class cannot have larger
        empirical error than ERM over the class itself."""
        rng = np.random.default_rng(33)
        for _ in range(50):
            O, _, s = random_bound_instance(rng, superset_prob=0.0)
            C = sym_diff_class(O)
            extra = list(C.tables)
            t = tuple(NC if v else CP for v in rng.integers(0, 2, len(C.domain)))
            if t not in extra:
                extra.append(t)
            C_sup = FiniteHypothesisClass(domain=C.domain, tables=tuple(extra), output_space="Z")
            assert cer(s, erm(C_sup, s)) <= cer(s, erm(C, s)) + 1e-15

    def test_containment_precondition(self):
        O = FiniteHypothesisClass(domain=(0, 1), tables=((0, 1), (1, 0)), output_space="Y")
        C_bad = binary_class((0, 1), [(0, 0)])
        s = sample_of([CP, NC], xs=(0, 1))
        with pytest.raises(PreconditionError):
            cooperation_bound_check(O, C_bad, s, delta=0.1)

    def test_report_invariant(self):
        rng = np.random.default_rng(5)
        O, C, s = random_bound_instance(rng)
        for r in cooperation_bound_check(O, C, s, delta=0.1):
            assert r.rhs == pytest.approx(
                r.p_hat + r.oer_o - r.delta_oprime + r.C_term, abs=1e-12
            )
            for v in (r.p_hat, r.oer_o, r.oer_o_nc, r.oer_o_cp, r.cer_chat):
                assert 0.0 <= v <= 1.0
            assert -1.0 <= r.delta_oprime <= 1.0


class TestTriangleInequality:
    def test_equal_hypotheses(self):
        pts = [(x, x % 2) for x in range(10)]
        assert triangle_inequality_check(lambda x: x % 2, lambda x: x % 2, pts)

    def test_exhaustive_three_labels(self):
        assert triangle_inequality_exhaustive(3)

    def test_randomized_sweep(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            table_o = rng.integers(0, 3, 20)
            table_op = rng.integers(0, 3, 20)
            ys = rng.integers(0, 3, 20)
            pts = [(x, int(ys[x])) for x in range(20)]
            assert triangle_inequality_check(
                lambda x: int(table_o[x]), lambda x: int(table_op[x]), pts
            )


class TestAlphaImprovement:
    def test_values(self):
        assert alpha_improvement(0.7, 0.5) == pytest.approx(0.2)
        assert alpha_improvement(0.5, 0.5) == 0.0
        assert alpha_improvement(0.5, 0.7) == pytest.approx(-alpha_improvement(0.7, 0.5))


class TestImprovementConcentration:
    def test_bound_formula(self):
        report = improvement_concentration_check(0.3, 0.1, 200, trials=2000, rng=np.random.default_rng(1))
        assert report.bound == pytest.approx(math.exp(-4.0), rel=1e-12)
        assert report.within_bound

    def test_m_one_formula_only(self):
        report = improvement_concentration_check(0.4, 0.1, 1, trials=500, rng=np.random.default_rng(2))
        assert report.bound == pytest.approx(math.exp(-0.045), rel=1e-9)

    def test_vacuous_near_equality(self):
        report = improvement_concentration_check(
            0.3, 0.2999, 10, trials=200, rng=np.random.default_rng(3)
        )
        assert report.bound > 0.999
        assert report.within_bound

    def test_alpha_must_exceed_epsilon(self):
        with pytest.raises(PreconditionError):
            improvement_concentration_check(0.1, 0.1, 100, trials=10, rng=np.random.default_rng(0))

    def test_custom_generator(self):
        def gen(m, rng):
            return np.zeros(m), np.full(m, 0.5)

        report = improvement_concentration_check(
            0.5, 0.1, 50, trials=200, rng=np.random.default_rng(4), generator=gen
        )
        assert report.violation_freq == 0.0


class TestPhatConcentration:
    def test_formula_value(self):
        report = phat_concentration_check(0.5, 100, 0.3, trials=2000, rng=np.random.default_rng(5))
        assert report.C == pytest.approx(math.sqrt(math.log(20) / 200), rel=1e-12)
        assert report.C == pytest.approx(0.1224, abs=5e-4)
        assert report.within_bound

    def test_delta_one_boundary_formula(self):
        # As delta -> 1, C -> sqrt(ln 6 / (2m)); check the formula directly.
        m = 50
        c_near_one = math.sqrt((math.log(6) - math.log(0.999999)) / (2 * m))
        assert c_near_one == pytest.approx(math.sqrt(math.log(6) / (2 * m)), rel=1e-5)

    def test_large_m_violations_far_below_bound(self):
        """C sits at ~2.45 binomial sigmas for every m, so the true violation
        rate is ~1.4%: far below the delta/3 = 0.1 bound."""
        report = phat_concentration_check(
            0.5, 100_000, 0.3, trials=300, rng=np.random.default_rng(6)
        )
        assert report.violation_freq < report.bound / 3
        assert report.within_bound


class TestPolicyImprovementCheck:
    def _sample(self, zs, ys, guesses):
        s = sample_of(zs, ys=ys)
        return s, (lambda x: guesses[x])

    def test_identical_samples_margin_equals_slack(self):
        rng = np.random.default_rng(8)
        zs = [NC if v else CP for v in rng.integers(0, 2, 40)]
        zs[0], zs[-1] = CP, NC
        ys = [int(v) for v in rng.integers(0, 3, 40)]
        guesses = [int(v) for v in rng.integers(0, 3, 40)]
        s, h = self._sample(zs, ys, guesses)
        report = policy_improvement_check(s, s, h, h, delta=0.1, epsilon=0.05)
        assert report.holds
        assert report.margin == pytest.approx(report.slack, abs=1e-12)
        assert report.slack == pytest.approx(4 * report.C + 0.05, abs=1e-15)

    def test_worse_policy_flags_assumption(self):
        zs = [CP, CP, NC, NC] * 5
        ys = [0] * 20
        good = [0] * 20
        bad = [1] * 20
        s_base, h_good = self._sample(zs, ys, good)
        t_worse, h_bad = self._sample(zs, ys, bad)
        report = policy_improvement_check(s_base, t_worse, h_bad, h_bad, delta=0.1)
        assert not report.assumption_ok

    def test_unequal_sizes_rejected(self):
        s1 = sample_of([CP, NC], ys=[0, 1])
        s2 = sample_of([CP, NC, CP], ys=[0, 1, 0])
        with pytest.raises(ConfigError):
            policy_improvement_check(s1, s2, lambda x: 0, lambda x: 0, delta=0.1)


class TestRandomInstances:
    def test_both_labels_present(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            _, _, s = random_bound_instance(rng)
            assert CP in s.zs and NC in s.zs

    def test_bounds_respected(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            O, C, s = random_bound_instance(rng, max_domain=8, max_hypotheses=6, max_m=64)
            assert len(O.domain) <= 8
            assert len(O) <= 6
            assert s.m <= 64
            assert set(sym_diff_class(O).tables).issubset(set(C.tables))
