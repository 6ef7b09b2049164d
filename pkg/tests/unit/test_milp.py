"""
MILP モデル・シンプレックス法・分枝限定法・LP 形式入出力のテスト
"""
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from src.core.exceptions import InvalidModelError, IterationLimitError, NumericalTroubleError
from src.milp.branch_and_bound import lp_relax, solve
from src.milp.lp_writer import EXACT_PREFIX, export_lp, format_decimal, sanitize_names, write_lp
from src.milp.model import MilpModel, Sense, SolveStatus, SolverOptions, add_strict_epsilon
from src.milp.simplex import LpProblem, LpStatus, SimplexSolver
from src.parsers.lp_parser import read_lp
from src.utils.monitoring import performance_monitor


@pytest.fixture
def knapsack():
    """最適値9 (x1 = x2 = 1) の0-1ナップサック問題"""
    model = MilpModel("knapsack")
    x = [model.add_binary(f"x{i}") for i in range(1, 4)]
    model.add_constraint({x[0]: 2, x[1]: 3, x[2]: 1}, Sense.LE, 5, "capacity")
    model.set_objective({x[0]: 5, x[1]: 4, x[2]: 3})
    return model


class TestMilpModel:
    """モデル構築"""

    def test_duplicate_variable(self):
        model = MilpModel()
        model.add_binary("a")
        with pytest.raises(InvalidModelError):
            model.add_continuous("a")

    def test_inverted_bounds(self):
        with pytest.raises(InvalidModelError):
            MilpModel().add_continuous("x", 2, 1)

    def test_constraint_merges_and_drops_zero(self):
        model = MilpModel()
        x = model.add_continuous("x")
        y = model.add_continuous("y")
        row = model.add_constraint({y: 0, x: "1/2"}, Sense.GE, "1/4")
        con = model.constraints[row]
        assert con.coeffs == {x: Fraction(1, 2)}
        assert con.rhs == Fraction(1, 4)
        assert con.name == "c0"

    def test_add_terms_keeps_position(self):
        model = MilpModel()
        x = model.add_continuous("x")
        y = model.add_continuous("y")
        model.add_constraint({x: 1}, Sense.LE, 1, "first")
        model.add_constraint({y: 1}, Sense.LE, 1, "second")
        model.add_terms(0, {y: 2, x: -1})
        assert model.constraints[0].name == "first"
        assert model.constraints[0].coeffs == {y: Fraction(2)}

    def test_strict_epsilon(self):
        model = MilpModel()
        x = model.add_continuous("x")
        model.set_objective({x: 2})
        eps = add_strict_epsilon(model)
        assert model.objective == {x: Fraction(2), eps: Fraction(1)}
        assert model.variables[eps].upper == 1

    def test_copy_is_independent(self, knapsack):
        clone = knapsack.copy()
        clone.add_constraint({0: 1}, Sense.EQ, 0, "extra")
        assert knapsack.num_constraints == 1
        assert clone.num_constraints == 2

    def test_sense_parse(self):
        assert Sense.parse("=<") is Sense.LE
        assert Sense.parse("==") is Sense.EQ
        with pytest.raises(InvalidModelError):
            Sense.parse("!=")

    def test_max_violation(self, knapsack):
        assert knapsack.max_violation([1.0, 1.0, 0.0]) == 0.0
        assert knapsack.max_violation([1.0, 1.0, 1.0]) == pytest.approx(1.0)

    def test_to_arrays(self, knapsack):
        a, senses, rhs, cost, lower, upper = knapsack.to_arrays()
        assert a.shape == (1, 3)
        assert senses == [Sense.LE]
        assert np.allclose(cost, [5, 4, 3])
        assert np.allclose(upper, [1, 1, 1])


class TestSimplex:
    """LP の求解"""

    @pytest.fixture
    def two_constraints(self):
        """最適値 2.8 (x = 1.6, y = 1.2)"""
        return LpProblem(
            np.array([[1.0, 2.0], [3.0, 1.0]]),
            [Sense.LE, Sense.LE],
            np.array([4.0, 6.0]),
            np.array([1.0, 1.0]),
            np.zeros(2),
            np.full(2, 10.0),
        )

    def test_two_constraints(self, two_constraints, solver_options):
        result = SimplexSolver(solver_options).solve(two_constraints)
        assert result.status is LpStatus.OPTIMAL
        assert result.objective == pytest.approx(2.8)
        assert result.x == pytest.approx([1.6, 1.2])

    def test_stable_mode_matches_default(self, two_constraints, solver_options):
        result = SimplexSolver(solver_options.stabilized()).solve(two_constraints)
        assert result.status is LpStatus.OPTIMAL
        assert result.objective == pytest.approx(2.8)
        assert result.x == pytest.approx([1.6, 1.2])

    @pytest.mark.parametrize("stable", [False, True])
    def test_big_m_rows(self, solver_options, stable):
        """係数の桁が大きく異なる行 (x ≤ 10^6 a) でも最適解を求める"""
        problem = LpProblem(
            np.array([[1.0, -1e6, 0.0], [0.0, 1.0, 1.0], [1.0, 0.0, 0.0]]),
            [Sense.LE, Sense.LE, Sense.LE],
            np.array([0.0, 1.0, 2.5e5]),
            np.array([2e-6, 0.0, 1.0]),
            np.zeros(3),
            np.array([1e6, 1.0, 1.0]),
        )
        result = SimplexSolver(replace(solver_options, stable=stable)).solve(problem)
        assert result.status is LpStatus.OPTIMAL
        assert result.objective == pytest.approx(1.25)
        assert result.x == pytest.approx([2.5e5, 0.25, 0.75])

    def test_recovers_from_singular_refactor(self, two_constraints, solver_options, monkeypatch):
        """分解に一度失敗しても最後に分解できた基底から解き直す"""
        real_solve = np.linalg.solve
        failures = []

        def fail_once(a, b):
            if not failures:
                failures.append(a.shape)
                raise np.linalg.LinAlgError("Singular matrix")
            return real_solve(a, b)

        monkeypatch.setattr(np.linalg, "solve", fail_once)
        result = SimplexSolver(solver_options).solve(two_constraints)
        assert len(failures) == 1
        assert result.status is LpStatus.OPTIMAL
        assert result.objective == pytest.approx(2.8)
        assert result.x == pytest.approx([1.6, 1.2])

    def test_persistent_singularity_raises(self, two_constraints, solver_options, monkeypatch):
        def always_fail(a, b):
            raise np.linalg.LinAlgError("Singular matrix")

        monkeypatch.setattr(np.linalg, "solve", always_fail)
        with pytest.raises(NumericalTroubleError):
            SimplexSolver(solver_options).solve(two_constraints)

    def test_equality_and_infeasible(self, solver_options):
        problem = LpProblem(
            np.array([[1.0, 1.0], [1.0, 1.0]]),
            [Sense.EQ, Sense.GE],
            np.array([1.0, 3.0]),
            np.zeros(2),
            np.zeros(2),
            np.ones(2),
        )
        assert SimplexSolver(solver_options).solve(problem).status is LpStatus.INFEASIBLE


class TestBranchAndBound:
    """MILP の求解"""

    def test_knapsack(self, knapsack, solver_options):
        solution = solve(knapsack, solver_options)
        assert solution.status is SolveStatus.OPTIMAL
        assert solution.objective == pytest.approx(9.0)
        assert solution.values == pytest.approx((1.0, 1.0, 0.0))
        assert solution.max_violation <= 1e-9

    def test_relaxation_bound(self, knapsack, solver_options):
        relaxed = lp_relax(knapsack, solver_options)
        assert relaxed.objective >= 9.0 - 1e-9

    def test_infeasible(self, solver_options):
        model = MilpModel()
        x = model.add_binary("x")
        model.add_constraint({x: 1}, Sense.GE, 2)
        solution = solve(model, solver_options)
        assert solution.status is SolveStatus.INFEASIBLE
        assert not solution.is_feasible
        with pytest.raises(InvalidModelError):
            solution.value(x)

    def test_feasibility_only(self, solver_options):
        model = MilpModel()
        x = model.add_binary("x")
        y = model.add_binary("y")
        model.add_constraint({x: 1, y: 1}, Sense.EQ, 1)
        solution = solve(model, solver_options)
        assert solution.is_feasible
        assert solution.value(x) + solution.value(y) == pytest.approx(1.0)

    def test_node_limit_without_incumbent(self, knapsack, solver_options):
        with pytest.raises(IterationLimitError):
            solve(knapsack, replace(solver_options, node_limit=0))

    def test_records_metrics(self, knapsack, solver_options):
        solve(knapsack, solver_options)
        assert performance_monitor.get_metric_stats("milp.nodes")["count"] == 1

    @pytest.fixture
    def tiny_indicator(self):
        """緩和解 b = 10^-7 は整数に見えるが、丸めた b = 0 は実行不能"""
        model = MilpModel("tiny_indicator")
        b = model.add_binary("b")
        model.add_constraint({b: 10**7}, Sense.GE, 1, "indicator")
        return model

    def test_near_integral_relaxation_keeps_branching(self, tiny_indicator, solver_options):
        tiny_indicator.set_objective({0: -1})
        solution = solve(tiny_indicator, solver_options)
        assert solution.status is SolveStatus.OPTIMAL
        assert solution.value(0) == pytest.approx(1.0)
        assert solution.objective == pytest.approx(-1.0)

    def test_near_integral_feasibility_only(self, tiny_indicator, solver_options):
        solution = solve(tiny_indicator, solver_options)
        assert solution.is_feasible
        assert solution.value(0) == pytest.approx(1.0)

    def test_stable_options(self, knapsack, solver_options):
        solution = solve(knapsack, solver_options.stabilized())
        assert solution.objective == pytest.approx(9.0)
        assert solution.values == pytest.approx((1.0, 1.0, 0.0))


class TestLpFormat:
    """LP 形式の書き出しと読み込み"""

    @pytest.fixture
    def rational_model(self):
        model = MilpModel("rational")
        x = model.add_continuous("x", 0, Fraction(1, 3))
        b = model.add_binary("b")
        model.add_constraint({x: Fraction(1, 3), b: 1}, Sense.LE, 1, "row")
        model.add_constraint({x: 1, b: -2}, Sense.GE, Fraction(-1, 2), "neg")
        model.set_objective({x: 1, b: 2})
        return model

    def test_format_decimal(self):
        assert format_decimal(Fraction(1, 4)) == ("0.25", True)
        assert format_decimal(Fraction(1, 3))[1] is False

    def test_sanitize_names(self):
        assert sanitize_names(["a|b", "a_b", "1x"]) == ["a_b", "a_b_1", "v1x"]

    def test_sections(self, rational_model):
        text = export_lp(rational_model)
        lines = text.splitlines()
        assert lines[0] == "Maximize"
        assert "Subject To" in lines
        assert "Binaries" in lines
        assert lines[-1] == "End"
        assert f"{EXACT_PREFIX}row: 1/3 x + b <= 1" in lines
        assert " neg: x - 2 b >= -0.5" in lines

    def test_feasibility_model_uses_zero_objective(self):
        model = MilpModel()
        model.add_binary("x")
        assert export_lp(model).startswith("Minimize\n obj: 0\n")

    def test_read_back_keeps_exact_coefficients(self, rational_model):
        parsed = read_lp(export_lp(rational_model))
        x = parsed.index_of("x")
        b = parsed.index_of("b")
        assert parsed.variables[x].upper == Fraction(1, 3)
        assert parsed.variables[b].is_binary
        assert parsed.constraints[0].coeffs == {x: Fraction(1, 3), b: Fraction(1)}
        assert parsed.constraints[1].rhs == Fraction(-1, 2)
        assert parsed.objective == {x: Fraction(1), b: Fraction(2)}

    def test_read_back_solves_the_same(self, rational_model, solver_options):
        original = solve(rational_model, solver_options)
        parsed = solve(read_lp(export_lp(rational_model)), solver_options)
        assert parsed.objective == pytest.approx(original.objective)

    def test_write_lp(self, rational_model, tmp_path):
        path = tmp_path / "model.lp"
        write_lp(rational_model, str(path))
        assert path.read_text(encoding="utf-8").endswith("End\n")
