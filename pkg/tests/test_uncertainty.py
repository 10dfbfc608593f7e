import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from plantedbisection import (
    ClassAssignment,
    Graph,
    ModelParams,
    ball_prior_mass,
    coverage_lower_bound,
    enlarge,
    enumerate_assignments,
    exact_posterior,
    k_distance,
    minimal_diameter_credible,
    minimal_order_credible,
    num_assignments,
    sample_assignment,
    sample_graph,
    set_diameter,
)
from plantedbisection.graphmodel import assignment_matrix
from plantedbisection.uncertainty import binomial_interval


def table_for(n, p, q, seed):
    params = ModelParams(n, p, q)
    return exact_posterior(sample_graph(params, sample_assignment(n, seed), seed), params)


def oracle_min_order(table, level):
    """Members of the smallest set of heaviest assignments with mass >= level."""
    pairs = sorted(zip(table.weights.tolist(), table.assignments), key=lambda x: -x[0])
    total, out = 0.0, set()
    for w, a in pairs:
        out.add(a)
        total += w
        if total >= level * sum(table.weights):
            break
    return out


def oracle_min_diameter(table, level):
    """Exhaustive (radius, centre) search using the brute-force distance."""
    weights = dict(zip(table.assignments, table.weights.tolist()))
    total = sum(weights.values())
    for r in range(table.n // 2 + 1):
        for c in table.assignments:
            mass = sum(w for a, w in weights.items() if oracles.pair_swaps(a.bits, c.bits) <= r)
            if mass >= level * total:
                return c, r
    raise AssertionError("unreachable")


class TestMinimalOrder:
    def test_hand_example(self):
        g = Graph.from_edges(2, [(0, 1), (2, 3)])
        table = exact_posterior(g, ModelParams(2, 0.8, 0.2))
        cred = minimal_order_credible(table, 0.9)
        assert cred.members == {ClassAssignment.from_string("0011")}
        assert cred.members == oracle_min_order(table, 0.9)
        assert cred.diameter == 0
        assert cred.level_achieved == pytest.approx(256 / 258)

    @pytest.mark.parametrize("seed", range(8))
    @pytest.mark.parametrize("level", [0.5, 0.9, 0.99])
    def test_matches_oracle(self, seed, level):
        table = table_for(4, 0.7, 0.3, seed)
        cred = minimal_order_credible(table, level)
        # ties could in principle break differently; weights here are distinct enough
        assert cred.members == oracle_min_order(table, level)
        assert cred.level_achieved >= level

    def test_level_one_is_everything(self):
        table = table_for(3, 0.8, 0.2, 0)
        cred = minimal_order_credible(table, 1.0)
        assert len(cred) == num_assignments(3)

    def test_level_validation(self):
        table = table_for(2, 0.8, 0.2, 0)
        for bad in (0.0, 1.5, -0.1):
            with pytest.raises(ValueError):
                minimal_order_credible(table, bad)

    def test_ties_lexicographic(self):
        table = exact_posterior(Graph.empty(3), ModelParams(3, 0.4, 0.4))
        cred = minimal_order_credible(table, 0.25)
        assert sorted(cred.members) == enumerate_assignments(3)[:3]


class TestMinimalDiameter:
    @pytest.mark.parametrize("seed", range(6))
    @pytest.mark.parametrize("level", [0.5, 0.8])
    def test_matches_exhaustive_oracle(self, seed, level):
        table = table_for(3, 0.8, 0.2, seed)
        cred = minimal_diameter_credible(table, level)
        center, radius = oracle_min_diameter(table, level)
        assert (cred.center, cred.radius) == (center, radius)
        assert cred.level_achieved >= level
        assert all(k_distance(a, center) <= radius for a in cred.members)

    def test_sampled_centres(self):
        table = table_for(5, 0.8, 0.2, 3)
        exact = minimal_diameter_credible(table, 0.9)
        sampled = minimal_diameter_credible(table, 0.9, centers="sampled", n_centers=16, seed=1)
        assert sampled.approximate and not exact.approximate
        assert sampled.level_achieved >= 0.9
        assert sampled.radius >= exact.radius

    def test_unknown_centre_mode(self):
        with pytest.raises(ValueError):
            minimal_diameter_credible(table_for(2, 0.8, 0.2, 0), 0.9, centers="all")


class TestDiameter:
    def test_small(self):
        rows = assignment_matrix(4)
        assert set_diameter(rows[:1], 4) == 0
        assert set_diameter(rows, 4) == 2

    @given(st.lists(st.integers(0, 34), min_size=1, max_size=12, unique=True))
    @settings(max_examples=50, deadline=None)
    def test_matches_pairwise(self, idx):
        thetas = enumerate_assignments(4)
        rows = assignment_matrix(4)[sorted(idx)]
        ref = max(k_distance(thetas[i], thetas[j]) for i in idx for j in idx)
        assert set_diameter(rows, 4) == ref


class TestEnlargement:
    def test_zero_radius_unchanged(self):
        cred = minimal_order_credible(table_for(4, 0.8, 0.2, 1), 0.9)
        rep = enlarge(cred, 0)
        assert rep.confidence_members == cred.members

    def test_half_radius_is_everything(self):
        cred = minimal_order_credible(table_for(4, 0.8, 0.2, 1), 0.5)
        assert enlarge(cred, 2).member_count == num_assignments(4)

    @pytest.mark.parametrize("seed", range(5))
    def test_union_of_balls(self, seed):
        n = 5
        table = table_for(n, 0.7, 0.2, seed)
        cred = minimal_order_credible(table, 0.8)
        rep = enlarge(cred, 1)
        ref = {a for a in enumerate_assignments(n) if any(k_distance(a, c) <= 1 for c in cred.members)}
        assert rep.confidence_members == ref
        assert cred.members <= rep.confidence_members
        assert rep.diameter <= cred.diameter + 2

    def test_report_fields(self):
        cred = minimal_order_credible(table_for(3, 0.8, 0.2, 0), 0.95)
        d = enlarge(cred, 1).to_dict()
        for key in ("level_requested", "level_achieved", "diameter", "k_n", "member_count",
                    "coverage_lower_bound", "vacuous_flag", "members"):
            assert key in d
        assert d["members"] == sorted(d["members"])
        assert d["prior_mass_b"] == pytest.approx(ball_prior_mass(3, 1))

    def test_radius_out_of_range(self):
        cred = minimal_order_credible(table_for(3, 0.8, 0.2, 0), 0.9)
        with pytest.raises(ValueError):
            enlarge(cred, 2)


class TestCoverageBound:
    def test_example(self):
        assert coverage_lower_bound(2, 0.1).value == pytest.approx(0.7)
        assert not coverage_lower_bound(2, 0.1).vacuous

    def test_vacuous(self):
        bound = coverage_lower_bound(3, 0.5)
        assert bound == (0.0, True)

    def test_zero_deficit(self):
        assert coverage_lower_bound(6, 0.0) == (1.0, False)

    def test_ball_prior_mass(self):
        assert ball_prior_mass(4, 0) == pytest.approx(1 / 35)
        assert ball_prior_mass(4, 2) == pytest.approx(1.0)
        assert ball_prior_mass(4, 1) == pytest.approx(17 / 35)


class TestBinomialInterval:
    def test_known_value(self):
        lo, hi = binomial_interval(90, 100)
        assert lo == pytest.approx(0.8256, abs=1e-4)
        assert hi == pytest.approx(0.9448, abs=1e-4)

    def test_extremes(self):
        lo, hi = binomial_interval(0, 20)
        assert lo == 0.0 and 0 < hi < 0.2
        assert binomial_interval(20, 20)[1] == 1.0
        assert all(math.isnan(x) for x in binomial_interval(0, 0))
