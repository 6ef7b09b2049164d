"""
MILP エンコーディングと PSMA 判定のテスト
"""
from fractions import Fraction

import pytest

from src.analysis.bounds import Bounds, compute_reward_upper_bounds
from src.analysis.state_sets import compute_zero_states
from src.core.exceptions import (
    AmbiguousSelectionError,
    InfinitePointError,
    NotTotalRewardError,
    NumericalTroubleError,
)
from src.core.mdp import Mdp
from src.core.numbers import INF
from src.core.objectives import Objective, Query, Relation, RewardStructure, reachability_to_reward
from src.encodings import achievability
from src.encodings.achievability import (
    PsmaStatus,
    extract_strategy,
    prepare_encoding,
    psma_check,
)
from src.encodings.artifacts import BASE, FLOW
from src.encodings.base_encoding import base_variable_count, encode_base
from src.encodings.conversion import convert_to_total_reward, is_closed_goal
from src.encodings.ec_encoding import encode_ec_constraints, zero_reward_mecs
from src.encodings.flow_encoding import common_zero_states, flow_variable_count
from src.encodings.infinite_encoding import can_be_infinite, encode_infinite_max
from src.milp.branch_and_bound import solve
from src.milp.model import MilpSolution, Sense, SolveStatus

F = Fraction


@pytest.fixture
def reward_loop():
    """報酬1の自己ループを持つ1状態モデルと総報酬の最大化クエリ"""
    m = Mdp.from_dict(["s0"], {"s0": {"loop": {"s0": "1"}}}, "s0")
    q = Query((Objective(RewardStructure("r", {(0, 0, 0): F(1)}), Relation.AT_LEAST),))
    return m, q


def _sets(m, q):
    return [compute_zero_states(m, obj) for obj in q.objectives]


class TestBaseEncoding:
    """基本エンコーディングの構造"""

    def test_variable_count(self, coin_with_cost):
        m, q = coin_with_cost
        sets = _sets(m, q)
        bounds = Bounds(reward_upper={(0, 0): F(1), (0, 1): F(1)})
        art = encode_base(m, q, (F(1, 2), F(1)), bounds, sets)
        assert art.flavor == BASE
        assert base_variable_count(m, sets) == 10
        assert art.model.num_variables == 10
        assert art.model.num_binaries == 4

    def test_lp_names(self, fig1):
        m, q = fig1
        prepared = prepare_encoding(m, q, (F(7, 10), F(7, 10)), "base")
        model = prepared.artifacts.model
        assert model.has_variable("a_s1_alpha")
        assert model.has_variable("x_s1_0")
        assert model.has_variable("xa_s2_delta_1")

    def test_infinite_threshold_rejected(self, coin_with_cost):
        m, q = coin_with_cost
        bounds = Bounds(reward_upper={(0, 0): F(1), (0, 1): F(1)})
        with pytest.raises(InfinitePointError):
            encode_base(m, q, (INF, F(1)), bounds, _sets(m, q))

    def test_end_component_constraints_cut_spurious_values(self, fig5a_file, solver_options):
        """自己ループ alpha を選んだまま値1を主張する解は EC 制約で除かれる"""
        m = fig5a_file.mdp
        q = fig5a_file.query("max")
        sets = _sets(m, q)
        bounds = Bounds(reward_upper={(0, 0): compute_reward_upper_bounds(m, q[0])[0]})

        plain = encode_base(m, q, (F(1),), bounds, sets)
        plain.model.add_constraint({plain.a_vars[(0, 0)]: 1}, Sense.EQ, 1, "force_alpha")
        assert solve(plain.model, solver_options).is_feasible

        guarded = encode_base(m, q, (F(1),), bounds, sets)
        encode_ec_constraints(guarded, m, q)
        assert (0, 0) in guarded.e_vars
        guarded.model.add_constraint({guarded.a_vars[(0, 0)]: 1}, Sense.EQ, 1, "force_alpha")
        assert not solve(guarded.model, solver_options).is_feasible

    def test_end_component_constraints_on_minimizing_objective(self, fig5a_file, solver_options):
        """最小化目的に EC 制約を加えても、alpha の自己ループで値0に留まる解は残る"""
        m = fig5a_file.mdp
        q = fig5a_file.query("min")
        sets = _sets(m, q)
        bounds = Bounds(reward_upper={(0, 0): compute_reward_upper_bounds(m, q[0])[0]})

        default = encode_base(m, q, (F(0),), bounds, sets)
        encode_ec_constraints(default, m, q)
        assert (0, 0) not in default.e_vars

        art = encode_base(m, q, (F(0),), bounds, sets)
        encode_ec_constraints(art, m, q, objectives=range(q.dimension))
        assert (0, 0) in art.e_vars
        solution = solve(art.model, solver_options)
        assert solution.is_feasible
        assert extract_strategy(art, solution).choices == (0, 0)

    @pytest.mark.parametrize("encoding", ["auto", "base"])
    def test_minimizing_verdict(self, fig5a_file, solver_options, encoding):
        m = fig5a_file.mdp
        result = psma_check(m, fig5a_file.query("min"), (F(0),), encoding, solver_options)
        assert result.status is PsmaStatus.ACHIEVABLE
        assert result.strategy.choices[0] == 0
        assert result.values == (F(0),)


class TestConversion:
    """総報酬目的への変換"""

    def test_fig1_not_convertible(self, fig1):
        m, q = fig1
        assert not is_closed_goal(m, frozenset({3, 5}))
        assert convert_to_total_reward(q, m) is None

    def test_closed_goals(self, coin_with_cost):
        m, q = coin_with_cost
        conversion = convert_to_total_reward(q, m)
        assert conversion.rule == "closed_goals"
        assert conversion.mdp is m
        assert conversion.query[0].is_total_reward
        # ゴール s1 の自己ループの報酬は除かれる
        assert conversion.query[0].reward.entries == {(0, 0, 1): F(1)}

    def test_identity(self, reward_loop):
        m, q = reward_loop
        assert convert_to_total_reward(q, m).rule == "identity"

    def test_common_goal(self, fig1):
        m, _ = fig1
        goal = {3, 5}
        q = Query((reachability_to_reward(m, goal), reachability_to_reward(m, goal)))
        conversion = convert_to_total_reward(q, m)
        assert conversion.rule == "common_goal"
        assert conversion.mdp.transitions[5] == (((5, F(1)),),)
        assert all(key[0] not in goal for key in conversion.query[0].reward.entries)


class TestFlowEncoding:
    """フローエンコーディングの構造"""

    def test_variable_count(self, coin_with_cost):
        m, q = coin_with_cost
        prepared = prepare_encoding(m, q, (F(1, 2), F(1)))
        art = prepared.artifacts
        assert art.flavor == FLOW
        sets = _sets(prepared.mdp, prepared.query)
        assert common_zero_states(prepared.mdp, sets) == frozenset({1, 2})
        assert flow_variable_count(prepared.mdp, sets) == 8
        assert art.model.num_variables == 8
        assert art.summary()["core_variables"] == 8

    def test_gain_terms_negate_minimizing(self, coin_with_cost):
        m, q = coin_with_cost
        art = prepare_encoding(m, q, None).artifacts
        x1 = art.value_var(1)
        assert art.gain_terms(1) == {x1: F(-1)}
        assert art.gain_terms(0) == {art.value_var(0): F(1)}

    def test_zero_reward_end_components(self, fig5a_file):
        m = fig5a_file.mdp
        q = fig5a_file.query("max")
        mecs = zero_reward_mecs(m, q.objectives, [0])
        assert list(mecs) == [frozenset({(0, 0)})]
        art = prepare_encoding(m, q, (F(1),), "flow").artifacts
        assert 0 in art.fec_vars

    def test_flow_requires_total_reward(self, fig1):
        m, q = fig1
        with pytest.raises(NotTotalRewardError):
            prepare_encoding(m, q, (F(1), F(0)), "flow")


class TestInfiniteEncoding:
    """無限の値を取り得る最大化目的"""

    def test_detection(self, reward_loop, fig5a_file):
        m, q = reward_loop
        assert can_be_infinite(m, q[0], compute_zero_states(m, q[0]))
        fig5a = fig5a_file.mdp
        obj = fig5a_file.query("max")[0]
        assert not can_be_infinite(fig5a, obj, compute_zero_states(fig5a, obj))

    def test_infinite_point_achievable(self, reward_loop, solver_options):
        m, q = reward_loop
        result = psma_check(m, q, (INF,), options=solver_options)
        assert result.status is PsmaStatus.ACHIEVABLE
        assert result.values == (INF,)
        assert result.flavor == BASE

    def test_finite_objective_cannot_reach_infinity(self, fig5a_file, solver_options):
        result = psma_check(fig5a_file.mdp, fig5a_file.query("max"), (INF,), options=solver_options)
        assert result.status is PsmaStatus.NOT_ACHIEVABLE
        assert result.reason

    def test_requires_base_flavor(self, coin_with_cost):
        m, q = coin_with_cost
        art = prepare_encoding(m, q, None).artifacts
        with pytest.raises(ValueError):
            encode_infinite_max(art, m, q, None)


class TestPsmaCheck:
    """PSMA の判定と厳密な再検証"""

    @pytest.mark.parametrize("encoding", ["auto", "base"])
    @pytest.mark.parametrize(
        "point, status",
        [
            ((F(1, 2), F(1)), PsmaStatus.ACHIEVABLE),
            ((F(0), F(0)), PsmaStatus.ACHIEVABLE),
            ((F(1, 2), F(1, 2)), PsmaStatus.NOT_ACHIEVABLE),
            ((F(3, 4), F(1)), PsmaStatus.NOT_ACHIEVABLE),
        ],
    )
    def test_coin_with_cost(self, coin_with_cost, solver_options, encoding, point, status):
        m, q = coin_with_cost
        result = psma_check(m, q, point, encoding, solver_options)
        assert result.status is status
        if status is PsmaStatus.ACHIEVABLE:
            assert all(obj.meets(v, t) for obj, v, t in zip(q.objectives, result.values, point))

    def test_minimizing_infinity_is_dropped(self, coin_with_cost, solver_options):
        m, q = coin_with_cost
        result = psma_check(m, q, (F(1, 2), INF), options=solver_options)
        assert result.status is PsmaStatus.ACHIEVABLE
        assert result.values[0] == F(1, 2)

    def test_all_thresholds_trivial(self, coin_with_cost):
        m, _ = coin_with_cost
        q = Query((Objective(RewardStructure("c", {(0, 0, 1): F(1)}), Relation.AT_MOST),))
        result = psma_check(m, q, (INF,))
        assert result.status is PsmaStatus.ACHIEVABLE

    def test_initial_infinite(self, reward_loop):
        m, q = reward_loop
        q_min = Query((Objective(q[0].reward, Relation.AT_MOST),))
        result = psma_check(m, q_min, (F(5),))
        assert result.status is PsmaStatus.NOT_ACHIEVABLE

    def test_export_lp(self, fig1, solver_options, tmp_path):
        m, q = fig1
        path = tmp_path / "fig1.lp"
        result = psma_check(m, q, (F(7, 10), F(7, 10)), "base", solver_options, export_lp=str(path))
        assert result.achievable
        text = path.read_text(encoding="utf-8")
        assert "a_s1_beta" in text
        assert result.encoding_size["variables"] > 0

    def test_extract_ambiguous(self, coin_with_cost):
        m, q = coin_with_cost
        art = prepare_encoding(m, q, None).artifacts
        ones = MilpSolution(SolveStatus.OPTIMAL, tuple(1.0 for _ in range(art.model.num_variables)))
        with pytest.raises(AmbiguousSelectionError):
            extract_strategy(art, ones)


class TestNumericalFallback:
    """単体法が数値的に行き詰まったときの解き直し"""

    def test_retries_with_stable_simplex(self, coin_with_cost, solver_options, monkeypatch):
        m, q = coin_with_cost
        modes = []

        def unstable_default(model, opts):
            modes.append(opts.stable)
            if not opts.stable:
                raise NumericalTroubleError("基底行列が特異になりました")
            return solve(model, opts)

        monkeypatch.setattr(achievability, "solve", unstable_default)
        result = psma_check(m, q, (F(1, 2), F(1)), options=solver_options)
        assert result.status is PsmaStatus.ACHIEVABLE
        assert result.flavor == FLOW
        assert modes == [False, True]

    @pytest.mark.parametrize(
        "point, status",
        [((F(1, 2), F(1)), PsmaStatus.ACHIEVABLE), ((F(3, 4), F(1)), PsmaStatus.NOT_ACHIEVABLE)],
    )
    def test_falls_back_to_other_encoding(self, coin_with_cost, solver_options, monkeypatch, point, status):
        m, q = coin_with_cost
        failing = []

        def first_model_fails(model, opts):
            if not failing:
                failing.append(model)
            if model is failing[0]:
                raise NumericalTroubleError("基底行列が悪条件です")
            return solve(model, opts)

        monkeypatch.setattr(achievability, "solve", first_model_fails)
        result = psma_check(m, q, point, options=solver_options)
        assert result.status is status
        assert result.flavor == BASE

    def test_gives_up_without_a_verdict(self, coin_with_cost, solver_options, monkeypatch):
        m, q = coin_with_cost
        calls = []

        def always_fails(model, opts):
            calls.append(opts.stable)
            raise NumericalTroubleError("基底行列が特異になりました")

        monkeypatch.setattr(achievability, "solve", always_fails)
        result = psma_check(m, q, (F(1, 2), F(1)), options=solver_options)
        assert result.status is PsmaStatus.VERIFICATION_FAILED
        assert result.strategy is None
        assert "数値的" in result.reason
        assert calls == [False, True, False, True]
