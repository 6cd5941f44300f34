import pytest
from hypothesis import given, settings, strategies as st

from oracles import exact_two_of_three
from test_faulttree import TWO_OF_THREE, ccf, figure_one, ind
from ccfbeta._backend import BACKENDS
from ccfbeta.bfm import solve_all
from ccfbeta.domain import Domain
from ccfbeta.faulttree import analytic_marginal, expand_events
from ccfbeta.simulate import (McConfig, McEstimate, estimate_from_counts,
                              simulate_component_marginals,
                              simulate_pair, simulate_system)

DEMO = [ind(c, 0.1) for c in "ABC"] + [ccf("ABC", 0.05)]


class TestConfig:
    @pytest.mark.parametrize("kwargs", [{"replications": 0}, {"confidence_level": 1.0},
                                        {"workers": 0}])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            McConfig(**kwargs)


class TestSystem:
    def test_demo_within_three_sigma(self):
        est = simulate_system(TWO_OF_THREE, DEMO, McConfig(seed=42, replications=10 ** 6))
        exact = exact_two_of_three(0.1, 0.05)
        assert abs(est.point - exact) <= 3 * est.stderr
        assert est.covers(exact)

    def test_deterministic(self):
        cfg = McConfig(seed=7, replications=50_000)
        assert simulate_system(TWO_OF_THREE, DEMO, cfg) == simulate_system(TWO_OF_THREE, DEMO, cfg)

    def test_seed_matters(self):
        a = simulate_system(TWO_OF_THREE, DEMO, McConfig(seed=1, replications=50_000))
        b = simulate_system(TWO_OF_THREE, DEMO, McConfig(seed=2, replications=50_000))
        assert a.successes != b.successes

    @pytest.mark.parametrize("workers", [2, 3, 8])
    def test_partition_invariant(self, workers):
        serial = simulate_system(TWO_OF_THREE, DEMO, McConfig(seed=11, replications=123_457))
        parallel = simulate_system(TWO_OF_THREE, DEMO,
                                   McConfig(seed=11, replications=123_457, workers=workers))
        assert serial == parallel

    @pytest.mark.skipif("compiled" not in BACKENDS, reason="extension not built")
    def test_backends_identical(self):
        cfg = dict(seed=5, replications=200_001)
        py = simulate_system(TWO_OF_THREE, DEMO, McConfig(backend="python", **cfg))
        cc = simulate_system(TWO_OF_THREE, DEMO, McConfig(backend="compiled", **cfg))
        assert py == cc

    def test_all_zero(self):
        est = simulate_system(TWO_OF_THREE, figure_one(0.0, 0.0, 0.0), McConfig(replications=1000))
        assert est.point == 0.0
        assert est.ci_low == est.ci_high == 0.0

    def test_all_one(self):
        est = simulate_system(TWO_OF_THREE, figure_one(1.0, 1.0, 1.0), McConfig(replications=1000))
        assert est.point == 1.0
        assert est.ci_low == est.ci_high == 1.0

    def test_stderr_formula(self):
        est = simulate_system(TWO_OF_THREE, DEMO, McConfig(replications=20_000))
        p = est.point
        assert est.stderr == pytest.approx((p * (1 - p) / 20_000) ** 0.5, rel=1e-15)
        assert est.ci_low <= p <= est.ci_high


class TestEstimate:
    def test_normal_interval(self):
        est = estimate_from_counts(500, 10_000, 1)
        assert est.method == "normal"
        assert est.ci_high - est.point == pytest.approx(1.959964 * est.stderr, rel=1e-6)

    @pytest.mark.parametrize("successes", [0, 3, 9, 9_995, 10_000])
    def test_exact_bounds_for_sparse_counts(self, successes):
        est = estimate_from_counts(successes, 10_000, 1)
        assert est.method == "clopper-pearson"
        assert 0.0 <= est.ci_low <= est.point <= est.ci_high <= 1.0
        assert est.ci_high > est.ci_low

    def test_zero_successes_upper_bound(self):
        est = estimate_from_counts(0, 1000, 1)
        assert est.ci_low == 0.0
        assert est.ci_high == pytest.approx(1 - 0.025 ** (1 / 1000), rel=1e-9)

    @given(st.integers(0, 10 ** 6), st.integers(1, 10 ** 6), st.floats(0.5, 0.999))
    def test_interval_ordering(self, k, n, cl):
        k = k % (n + 1)
        est = estimate_from_counts(k, n, 3, cl)
        assert est.ci_low <= est.point <= est.ci_high

    def test_record_round_trip(self):
        est = estimate_from_counts(7662, 100_000, 42, name="system")
        back = McEstimate.parse_record(est.record())
        assert back.record() == est.record()
        assert (back.replications, back.seed, back.name) == (100_000, 42, "system")
        assert est.record().split(",")[0] == "system"


class TestMarginals:
    def test_composition_example(self):
        events = [ind("A", 0.3), ccf("AB", 0.2), ind("B", 0.0)]
        est = simulate_component_marginals(events, McConfig(seed=3, replications=200_000))
        assert analytic_marginal(events, "A") == pytest.approx(0.44)
        assert est["A"].covers(0.44)
        assert est["B"].covers(0.2)

    def test_no_ccf(self):
        est = simulate_component_marginals([ind("A", 0.25)], McConfig(replications=100_000))
        assert est["A"].covers(0.25)

    def test_case_study_bp_software(self, case_study):
        events = expand_events(case_study.model, solve_all(case_study.model))
        sw = Domain.SOFTWARE
        analytic = analytic_marginal(events, "BP-A1", sw)
        assert analytic == pytest.approx(1.871e-4, rel=2e-3)
        est = simulate_component_marginals(
            [e for e in events if e.domain is sw and e.covered & {"BP-A1", "BP-A2"}],
            McConfig(seed=9, replications=2_000_000), domain=sw)
        assert est["BP-A1"].covers(analytic)

    @given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 0.4), st.floats(0.05, 0.4))
    @settings(max_examples=15, deadline=None)
    def test_positive_dependence(self, seed, q, p_ccf):
        events = [ind("A", q), ind("B", q), ccf("AB", p_ccf)]
        pa, pb, pab = simulate_pair(events, "A", "B", McConfig(seed=seed, replications=100_000))
        assert pab.point >= pa.point * pb.point
