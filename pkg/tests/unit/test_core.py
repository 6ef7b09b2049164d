"""
MDP・数値・目的・戦略のテスト
"""
from fractions import Fraction

import pytest

from src.core.exceptions import (
    DimensionMismatchError,
    InvalidModelError,
    InvalidStrategyError,
    ModelFormatError,
    NotClosedError,
    StartOutsideError,
)
from src.core.mdp import Mdp, all_pairs, sub_mdp
from src.core.numbers import INF, format_rational, is_infinite, parse_extended, parse_rational, to_float
from src.core.objectives import (
    Objective,
    Query,
    Relation,
    RewardStructure,
    dominates,
    finite_point,
    project_query,
    reachability_to_reward,
)
from src.core.strategy import PureStationaryStrategy, induce_chain


class TestNumbers:
    """厳密有理数のパース・整形"""

    def test_decimal_is_exact(self):
        assert parse_rational("0.7") == Fraction(7, 10)
        assert parse_rational("7/10") == Fraction(7, 10)
        assert parse_rational(0.1) == Fraction(1, 10)
        assert parse_rational(3) == Fraction(3)

    def test_invalid_text(self):
        with pytest.raises(ModelFormatError):
            parse_rational("seven")
        with pytest.raises(ModelFormatError):
            parse_rational(True)
        with pytest.raises(ModelFormatError):
            parse_rational(float("nan"))

    @pytest.mark.parametrize("text", ["inf", "INF", "∞", "+inf", "infinity"])
    def test_infinity_spellings(self, text):
        assert is_infinite(parse_extended(text))

    def test_format(self):
        assert format_rational(Fraction(7, 10)) == "7/10"
        assert format_rational(Fraction(3)) == "3"
        assert format_rational(INF) == "inf"
        assert to_float(Fraction(1, 4)) == 0.25


class TestMdp:
    """Mdp の構築と検証"""

    def test_from_dict(self, fig1):
        m, _ = fig1
        assert m.num_states == 6
        assert m.num_pairs == 8
        s1 = m.state_index("s1")
        beta = m.action_index(s1, "beta")
        assert m.probability(s1, beta, m.state_index("s4")) == Fraction(7, 10)
        assert m.probability(s1, beta, m.state_index("s2")) == 0
        assert m.initial == s1

    def test_probabilities_must_sum_to_one(self):
        with pytest.raises(InvalidModelError):
            Mdp.from_dict(["a", "b"], {"a": {"x": {"b": "1/2"}}, "b": {"y": {"b": "1"}}}, "a")

    def test_state_without_action(self):
        with pytest.raises(InvalidModelError):
            Mdp.from_dict(["a", "b"], {"a": {"x": {"b": "1"}}}, "a")

    def test_duplicate_state_names(self):
        with pytest.raises(InvalidModelError):
            Mdp(("a", "a"), (("x",), ("y",)), ((((0, 1),),), (((1, 1),),)), 0)

    def test_empty_model(self):
        with pytest.raises(InvalidModelError):
            Mdp((), (), (), 0)

    def test_unknown_successor(self):
        with pytest.raises(InvalidModelError):
            Mdp.from_dict(["a"], {"a": {"x": {"z": "1"}}}, "a")

    def test_predecessors(self, chain_mdp):
        preds = chain_mdp.predecessors(2)
        assert (0, 0, Fraction(1, 2)) in preds
        assert (0, 1, Fraction(1)) in preds
        assert (2, 0, Fraction(1)) in preds

    def test_reachable_states_with_pairs(self, chain_mdp):
        assert chain_mdp.reachable_states() == frozenset({0, 1, 2})
        assert chain_mdp.reachable_states(pairs=[(0, 1), (1, 0), (2, 0)]) == frozenset({0, 2})


class TestSubMdp:
    """部分MDP M↓(E, s)"""

    def test_closed_subset(self, chain_mdp):
        sub = sub_mdp(chain_mdp, [(0, 1), (2, 0)], 0)
        assert sub.states == ("s0", "s2")
        assert sub.actions == (("b",), ("loop",))
        assert sub.initial == 0

    def test_not_closed(self, chain_mdp):
        with pytest.raises(NotClosedError):
            sub_mdp(chain_mdp, [(0, 0), (1, 0)], 0)

    def test_start_outside(self, chain_mdp):
        with pytest.raises(StartOutsideError):
            sub_mdp(chain_mdp, [(1, 0)], 0)

    def test_all_pairs_is_identity(self, chain_mdp):
        assert sub_mdp(chain_mdp, all_pairs(chain_mdp), chain_mdp.initial) == chain_mdp


class TestObjectives:
    """報酬構造・目的・クエリ"""

    def test_negative_reward_rejected(self):
        with pytest.raises(InvalidModelError):
            RewardStructure("r", {(0, 0, 0): Fraction(-1)})

    def test_zero_entries_dropped(self):
        r = RewardStructure("r", {(0, 0, 0): Fraction(0), (0, 0, 1): Fraction(2)})
        assert r.entries == {(0, 0, 1): Fraction(2)}
        assert r.max_value() == 2

    def test_reward_on_missing_transition(self, chain_mdp):
        r = RewardStructure("r", {(0, 1, 1): Fraction(1)})
        with pytest.raises(InvalidModelError):
            r.validate(chain_mdp)

    def test_reachability_reward(self, chain_mdp):
        obj = reachability_to_reward(chain_mdp, {1})
        assert obj.reward.entries == {(0, 0, 1): Fraction(1), (1, 0, 1): Fraction(1)}
        assert obj.maximizing
        assert not obj.is_total_reward
        assert obj.reward.expected(chain_mdp, 0, 0) == Fraction(1, 2)

    def test_relation_parse(self):
        assert Relation.parse("<=") is Relation.AT_MOST
        with pytest.raises(InvalidModelError):
            Relation.parse("<")

    def test_empty_query(self):
        with pytest.raises(InvalidModelError):
            Query(())

    def test_dimension_mismatch(self, coin_with_cost):
        _, q = coin_with_cost
        with pytest.raises(DimensionMismatchError):
            q.check_point((Fraction(1),))

    def test_dominates_respects_direction(self, coin_with_cost):
        _, q = coin_with_cost
        # 到達確率は大きいほど、コストは小さいほど良い
        assert dominates(q, (Fraction(1, 2), Fraction(0)), (Fraction(1, 4), Fraction(1)))
        assert not dominates(q, (Fraction(1, 2), Fraction(1)), (Fraction(1, 4), Fraction(0)))
        assert dominates(q, (INF, Fraction(0)), (Fraction(5), Fraction(0)))

    def test_meets_with_infinity(self):
        obj = Objective(RewardStructure("r"), Relation.AT_LEAST)
        assert obj.meets(INF, INF)
        assert not obj.meets(Fraction(10), INF)
        assert not finite_point((Fraction(1), INF))

    def test_indices(self, coin_with_cost):
        _, q = coin_with_cost
        assert q.maximizing_indices == (0,)
        assert q.minimizing_indices == (1,)

    def test_project_query_onto_sub_mdp(self, coin_with_cost):
        m, q = coin_with_cost
        sub = sub_mdp(m, [(0, 0), (1, 0), (2, 0)], 0)
        projected = project_query(q, m, sub)
        assert projected[0].goal == frozenset({1})
        assert projected[1].reward.entries == {(0, 0, 1): Fraction(1), (0, 0, 2): Fraction(1)}


class TestStrategy:
    """純粋定常戦略と誘導連鎖"""

    def test_from_labels(self, fig1):
        m, _ = fig1
        sigma = PureStationaryStrategy.from_labels(m, {"s1": "beta", "s2": "delta"}, default_lowest=True)
        assert sigma.choices == (1, 1, 0, 0, 0, 0)
        assert sigma.to_labels(m)["s1"] == "beta"

    def test_missing_state(self, fig1):
        m, _ = fig1
        with pytest.raises(InvalidStrategyError):
            PureStationaryStrategy.from_labels(m, {"s1": "beta"})

    def test_unknown_label(self, chain_mdp):
        with pytest.raises(InvalidStrategyError):
            PureStationaryStrategy.from_labels(chain_mdp, {"s0": "zzz", "s1": "loop", "s2": "loop"})

    def test_unknown_state(self, chain_mdp):
        with pytest.raises(InvalidStrategyError):
            PureStationaryStrategy.from_labels(
                chain_mdp, {"s0": "a", "s1": "loop", "s2": "loop", "s9": "loop"}
            )

    def test_validate_length(self, chain_mdp):
        with pytest.raises(InvalidStrategyError):
            PureStationaryStrategy((0,)).validate(chain_mdp)

    def test_induced_chain_keeps_reachable_states(self, chain_mdp):
        induced = induce_chain(chain_mdp, PureStationaryStrategy((1, 0, 0)))
        assert induced.chain.states == ("s0", "s2")
        assert induced.state_map == (0, 2)
        assert induced.original_action(0) == 1
