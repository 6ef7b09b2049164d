"""
組み込みモデル・部分和インスタンスでの判定と全列挙オラクルの突き合わせ
"""
from fractions import Fraction

import pytest

from src.encodings.achievability import PsmaStatus, psma_check
from src.evaluation.brute_force import brute_force_achievable, brute_force_pareto, enumerate_value_vectors
from src.instances.subset_sum import SubsetSumInstance, gen_subset_sum, subset_sum_exists
from src.milp.branch_and_bound import solve
from src.pareto.pareto_approximator import approximate_pareto, to_gain
from src.parsers.lp_parser import LpParser

F = Fraction

pytestmark = pytest.mark.integration


class TestBuiltinModels:
    """組み込みモデルの判定"""

    def test_fig1_points_match_oracle(self, fig1_file, solver_options):
        m = fig1_file.mdp
        q = fig1_file.query("q0")
        for point in fig1_file.points["q0"]:
            result = psma_check(m, q, point, options=solver_options)
            assert result.achievable is brute_force_achievable(m, q, point), point

    @pytest.mark.parametrize(
        "query_id, point, expected",
        [
            ("min", (F(0),), PsmaStatus.ACHIEVABLE),
            ("max", (F(1),), PsmaStatus.ACHIEVABLE),
            ("max", (F(2),), PsmaStatus.NOT_ACHIEVABLE),
        ],
    )
    def test_fig5a(self, fig5a_file, solver_options, query_id, point, expected):
        m = fig5a_file.mdp
        result = psma_check(m, fig5a_file.query(query_id), point, options=solver_options)
        assert result.status is expected

    @pytest.mark.parametrize(
        "point, expected",
        [((F(1), F(0)), True), ((F(0), F(1)), True), ((F(1, 2), F(1, 2)), False)],
    )
    def test_fig5b_stationary(self, fig5b, solver_options, point, expected):
        m, q = fig5b
        assert psma_check(m, q, point, options=solver_options).achievable is expected


class TestSubsetSumReduction:
    """部分和問題の帰着と動的計画法の一致"""

    @pytest.mark.parametrize(
        "weights, target",
        [
            ((1, 2, 3), 3),
            ((2, 2, 2), 3),
            ((3, 5, 7), 8),
            ((3, 5, 7), 4),
            ((1, 1), 1),
            ((4, 6, 9), 11),
            ((4, 6, 9), 19),
        ],
    )
    def test_verdict_matches_dynamic_programming(self, solver_options, weights, target):
        m, q, point = gen_subset_sum(SubsetSumInstance(weights, target))
        result = psma_check(m, q, point, options=solver_options)
        assert result.achievable is subset_sum_exists(weights, target)
        if result.achievable:
            assert sum(result.values) == 1


class TestParetoAgainstOracle:
    """パレート近似と全列挙の一致"""

    @pytest.mark.parametrize("fixture_name", ["fig1", "coin_with_cost"])
    def test_front_matches_oracle(self, request, solver_options, fixture_name):
        m, q = request.getfixturevalue(fixture_name)
        approx = approximate_pareto(m, q, eps=0.01, options=solver_options)
        assert set(approx.points()) == brute_force_pareto(m, q)

    def test_unachievable_regions_hold_no_strategy(self, fig1, solver_options):
        m, q = fig1
        approx = approximate_pareto(m, q, eps=0.01, options=solver_options)
        gains = [to_gain(q, values) for _, values in enumerate_value_vectors(m, q)]
        for region in approx.unachievable:
            assert not any(region.contains(g) for g in gains)


class TestLpExport:
    """書き出した LP を読み戻して同じ判定になること"""

    @pytest.mark.parametrize(
        "point, feasible",
        [((F(7, 10), F(7, 10)), True), ((F(1), F(4, 5)), False)],
    )
    def test_round_trip_verdict(self, fig1, solver_options, tmp_path, point, feasible):
        m, q = fig1
        path = tmp_path / "fig1.lp"
        psma_check(m, q, point, "base", solver_options, export_lp=str(path))
        model = LpParser().parse(str(path))
        assert solve(model, solver_options).is_feasible is feasible
