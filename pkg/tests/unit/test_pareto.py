"""
パレート近似 (候補領域・近似ループ・出力) のテスト
"""
import json
from fractions import Fraction

import pandas as pd
import pytest

from src.core.exceptions import UnboundedRewardError
from src.core.mdp import Mdp
from src.core.objectives import Objective, Query, Relation, RewardStructure
from src.memory.mealy import evaluate_mealy_query
from src.pareto.export import approx_to_dict, objective_columns, output_paths, write_approximation
from src.pareto.pareto_approximator import (
    COMPLETE,
    approximate_pareto,
    approximate_pareto_with_memory,
    optimize_in_region,
    scale_eps,
    to_gain,
)
from src.pareto.regions import (
    Halfspace,
    box_region,
    choose_direction,
    clip_polygon,
    covered,
    polygon_area,
    split_region,
    upper_hull,
)

F = Fraction
EPS = (F(1, 100), F(1, 100))


@pytest.fixture
def unit_square():
    return box_region(0, (F(0), F(0)), (F(1), F(1)))


class TestRegions:
    """利得空間の領域操作"""

    def test_box(self, unit_square):
        assert unit_square.area() == 1
        assert unit_square.centroid() == (F(1, 2), F(1, 2))
        assert unit_square.axis_bounds() == ([F(0), F(0)], [F(1), F(1)])
        assert unit_square.contains((F(1, 3), F(1)))
        assert not unit_square.contains((F(-1, 10), F(0)))

    def test_clip_to_triangle(self, unit_square):
        triangle = clip_polygon(unit_square.vertices, Halfspace((F(1), F(1)), F(1)))
        assert polygon_area(triangle) == F(1, 2)
        assert clip_polygon(unit_square.vertices, Halfspace((F(1), F(0)), F(2))) == ()

    def test_upper_hull_drops_inner_points(self):
        below = [(F(0), F(1)), (F(1, 2), F(1, 4)), (F(1), F(0))]
        assert upper_hull(below) == [(F(0), F(1)), (F(1), F(0))]
        above = [(F(0), F(1)), (F(1, 2), F(3, 4)), (F(1), F(0))]
        assert upper_hull(above) == above

    def test_split_keeps_uncovered_part(self, unit_square):
        split = split_region(unit_square, (F(1), F(3, 10)), (F(1), F(0)), F(1), EPS, 1)
        assert len(split.candidates) == 1
        child = split.candidates[0]
        assert child.area() == F(69, 100)
        assert child.focus == 1
        assert split.unachievable.rid == 1

    def test_split_at_corner_leaves_nothing(self, unit_square):
        split = split_region(unit_square, (F(1), F(1)), (F(1, 2), F(1, 2)), F(1), EPS, 1)
        assert split.candidates == ()

    def test_direction_without_points(self, unit_square):
        assert choose_direction([], unit_square, (F(0), F(0)), (F(1), F(1))) == (F(1, 2), F(1, 2))

    def test_direction_in_three_dimensions(self):
        lo, hi = (F(0),) * 3, (F(1),) * 3
        region = box_region(0, lo, hi)
        assert choose_direction([], region, lo, hi) == (F(1, 3),) * 3
        focused = region.restrict(1, [], focus=0)
        assert choose_direction([], focused, lo, hi) == (F(2, 3), F(1, 6), F(1, 6))

    def test_covered(self, unit_square):
        assert covered(unit_square, [(F(1), F(1))], (F(0), F(0)))
        assert not covered(unit_square, [(F(1), F(1, 2))], EPS)
        box3 = box_region(0, (F(0),) * 3, (F(1),) * 3)
        assert covered(box3, [(F(99, 100),) * 3], (F(1, 100),) * 3)


class TestApproximation:
    """ε 近似のループ"""

    def test_scale_eps(self):
        assert scale_eps(0.01, (F(0), F(0)), (F(1), F(2))) == (F(1, 100), F(1, 50))
        assert scale_eps(0.01, (F(0), F(3)), (F(1), F(3)), absolute=True) == EPS
        assert scale_eps(0.5, (F(2),), (F(2),)) == (F(1, 2),)
        with pytest.raises(ValueError):
            scale_eps(0, (F(0),), (F(1),))

    def test_to_gain(self, coin_with_cost):
        _, q = coin_with_cost
        assert to_gain(q, (F(1, 2), F(1))) == (F(1, 2), F(-1))

    def test_fig1_front(self, fig1, solver_options):
        m, q = fig1
        approx = approximate_pareto(m, q, eps=0.01, options=solver_options)
        assert approx.status == COMPLETE
        assert set(approx.points()) == {(F(7, 10), F(7, 10)), (F(1), F(0)), (F(0), F(1))}
        assert all(lo <= 0 for lo in approx.lower)
        assert all(hi >= 1 for hi in approx.upper)
        assert approx.solves >= 4

    def test_optimize_in_region(self, fig1, unit_square, solver_options):
        """全体の箱では (0.7, 0.7)、g0 + g1 >= 3/2 の領域には戦略がない"""
        m, q = fig1
        found = optimize_in_region(m, q, unit_square, (F(1, 2), F(1, 2)), solver_options)
        assert found.values == (F(7, 10), F(7, 10))
        assert found.strategy.choices[0] == 1
        above = unit_square.restrict(1, [Halfspace((F(1), F(1)), F(3, 2))])
        assert optimize_in_region(m, q, above, (F(1, 2), F(1, 2)), solver_options) is None

    def test_minimizing_objective(self, coin_with_cost, solver_options):
        m, q = coin_with_cost
        approx = approximate_pareto(m, q, eps=0.01, options=solver_options)
        assert set(approx.points()) == {(F(1, 2), F(1)), (F(0), F(0))}

    def test_unbounded(self, solver_options):
        m = Mdp.from_dict(["s0"], {"s0": {"loop": {"s0": "1"}}}, "s0")
        q = Query((Objective(RewardStructure("r", {(0, 0, 0): F(1)}), Relation.AT_LEAST),))
        with pytest.raises(UnboundedRewardError):
            approximate_pareto(m, q, options=solver_options)

    def test_with_memory(self, fig5b, solver_options):
        m, q = fig5b
        approx = approximate_pareto_with_memory(m, q, 3, "counter", eps=0.05, options=solver_options)
        assert approx.pareto_points()
        for point in approx.pareto_points():
            assert point.mealy is not None
            assert sum(point.values) == 1
            assert evaluate_mealy_query(m, point.mealy, q) == point.values


class TestExport:
    """近似結果の出力"""

    @pytest.fixture
    def fig1_approx(self, fig1, solver_options):
        m, q = fig1
        return m, approximate_pareto(m, q, eps=0.01, options=solver_options)

    def test_columns(self, coin_with_cost):
        _, q = coin_with_cost
        assert objective_columns(q) == ["obj0_max_reach", "obj1_min_cost"]

    def test_output_paths(self):
        json_path, csv_path, dat_path = output_paths("out/front.txt")
        assert (json_path.name, csv_path.name, dat_path.name) == ("front.json", "front.csv", "front.dat")

    def test_dict(self, fig1_approx):
        m, approx = fig1_approx
        doc = approx_to_dict(m, approx)
        assert doc["status"] == "complete"
        assert len(doc["points"]) == 3
        assert doc["points"][1]["values"] == ["7/10", "7/10"]
        assert doc["points"][1]["strategy"]["s1"] == "beta"
        assert all(set(p["strategy"]) == set(m.states) for p in doc["points"])

    def test_write_files(self, fig1_approx, tmp_path):
        m, approx = fig1_approx
        paths = write_approximation(m, approx, str(tmp_path / "front"))
        assert len(paths) == 3
        doc = json.loads((tmp_path / "front.json").read_text(encoding="utf-8"))
        assert doc["found"] >= 3
        df = pd.read_csv(tmp_path / "front.csv")
        assert list(df.columns) == ["obj0_max_reach", "obj1_max_reach"]
        assert len(df) == 3
        header = (tmp_path / "front.dat").read_text(encoding="utf-8").splitlines()[0]
        assert header == "# obj0_max_reach obj1_max_reach"
