"""
総報酬目的のフローエンコーディング

f_{s,α} は戦略のもとでの (s, α) の期待実行回数を表す。S0 = ∩_j S0^j への
流出が1になるフロー保存則を課し、目的の値は Σ f_{s,α}·ER_j(s, α) で与える。
変数数は目的数 ℓ にほぼ依存しない。

多重連鎖の場合は、全目的で報酬0の EC 上の状態に流出変数 fec_s を置き、
EC 検出の制約 (値の行を除く) と組み合わせる。
"""
import logging
from fractions import Fraction
from typing import Dict, FrozenSet, Mapping, Optional, Sequence

from src.analysis.bounds import Bounds, compute_visit_upper_bounds
from src.analysis.state_sets import ObjectiveStateSets
from src.core.exceptions import DimensionMismatchError, NotTotalRewardError
from src.core.mdp import Mdp
from src.core.numbers import Extended
from src.core.objectives import Query
from src.encodings.artifacts import (
    FLOW, EncodingArtifacts, add_action_selection, fresh_name, pair_name, require_finite, state_name,
)
from src.encodings.ec_encoding import add_ec_block, zero_reward_mecs
from src.milp.model import MilpModel, Sense

logger = logging.getLogger(__name__)

FLOW_EXIT_STATE = "__ec_exit__"
FLOW_EXIT_ACTION = "__ec_exit__"


def common_zero_states(m: Mdp, sets: Sequence[ObjectiveStateSets]) -> FrozenSet[int]:
    """S0 = ∩_j S0^j"""
    zero = frozenset(range(m.num_states))
    for st in sets:
        zero &= st.zero
    return zero


def flow_variable_count(m: Mdp, sets: Sequence[ObjectiveStateSets]) -> int:
    """Σ_s |Act(s)| + Σ_{s∈S?} |Act(s)| + ℓ (初期状態が S0 にない場合)"""
    zero = common_zero_states(m, sets)
    if m.initial in zero:
        return m.num_pairs + len(sets)
    return m.num_pairs + sum(len(m.actions[s]) for s in range(m.num_states) if s not in zero) + len(sets)


def flow_visit_bounds(m: Mdp, q: Query, sets: Sequence[ObjectiveStateSets]) -> Dict[int, Fraction]:
    """
    F_s (S0 か、全目的で報酬0の EC からの脱出で終わる戦略についての訪問回数の上界)

    報酬0の MEC の状態に新しい吸収状態への脱出行動を加えたモデルで計算する。
    """
    zero = common_zero_states(m, sets)
    maybe = [s for s in range(m.num_states) if s not in zero]
    mecs = zero_reward_mecs(m, q.objectives, maybe)
    if not len(mecs):
        return compute_visit_upper_bounds(m, zero)

    ec_states = {s for mec in mecs for s, _ in mec}
    exit_index = m.num_states
    name = FLOW_EXIT_STATE
    while name in m.states:
        name += "'"
    actions = []
    transitions = []
    for s in range(m.num_states):
        labels = list(m.actions[s])
        dists = list(m.transitions[s])
        if s in ec_states:
            label = FLOW_EXIT_ACTION
            while label in labels:
                label += "'"
            labels.append(label)
            dists.append(((exit_index, Fraction(1)),))
        actions.append(tuple(labels))
        transitions.append(tuple(dists))
    actions.append((FLOW_EXIT_ACTION,))
    transitions.append((((exit_index, Fraction(1)),),))
    extended = Mdp(m.states + (name,), tuple(actions), tuple(transitions), m.initial)
    bounds = compute_visit_upper_bounds(extended, set(zero) | {exit_index})
    return {s: bounds[s] for s in range(m.num_states)}


def encode_total_reward(
    m: Mdp,
    q: Query,
    p: Optional[Sequence[Extended]],
    visit_bounds: Mapping[int, Fraction],
    sets: Sequence[ObjectiveStateSets],
    name: str = "psma_flow",
) -> EncodingArtifacts:
    """
    総報酬目的のフローエンコーディングを構築する

    Args:
        p: 閾値。None の場合は閾値の行を加えない
        visit_bounds: F_s
        sets: 目的ごとの S0^j / S?^j

    Raises:
        NotTotalRewardError: ゴール集合が空でない目的がある
    """
    require_finite(p)
    if p is not None:
        q.check_point(p)
    if len(sets) != q.dimension:
        raise DimensionMismatchError(f"状態集合の数 {len(sets)} が目的数 {q.dimension} と一致しません")
    for j, obj in enumerate(q.objectives):
        if not obj.is_total_reward:
            raise NotTotalRewardError(f"目的 {j} はゴール集合を持つため総報酬目的ではありません")

    zero = common_zero_states(m, sets)
    maybe = [s for s in range(m.num_states) if s not in zero]
    model = MilpModel(name)
    bounds = Bounds(visit_upper=dict(visit_bounds))
    art = EncodingArtifacts(model, m, q, None if p is None else tuple(p), FLOW, tuple(sets), bounds)
    art.a_vars = add_action_selection(model, m)
    initial = m.initial

    if initial in zero:
        for j in range(q.dimension):
            art.x_vars[(initial, j)] = model.add_continuous(fresh_name(model, state_name(m, "x", initial, j)), 0, 0)
        logger.debug("Initial state lies in S0; all objective values are 0")
    else:
        for s in maybe:
            f_s = Fraction(visit_bounds.get(s, 1))
            for a in range(len(m.actions[s])):
                var = model.add_continuous(fresh_name(model, pair_name(m, "f", s, a)), 0, f_s)
                art.flow_vars[(s, a)] = var
                model.add_constraint(
                    {var: 1, art.a_vars[(s, a)]: -f_s}, Sense.LE, 0, f"flow_select_{m.states[s]}_{m.actions[s][a]}"
                )

        rows: Dict[int, Dict[int, Fraction]] = {s: {} for s in maybe}
        outflow: Dict[int, Fraction] = {}
        for (s, a), var in art.flow_vars.items():
            rows[s][var] = rows[s].get(var, Fraction(0)) + 1
            to_zero = Fraction(0)
            for t, prob in m.transitions[s][a]:
                if t in zero:
                    to_zero += prob
                else:
                    rows[t][var] = rows[t].get(var, Fraction(0)) - prob
            if to_zero:
                outflow[var] = to_zero
        for s in maybe:
            art.conservation_rows[s] = model.add_constraint(
                rows[s], Sense.EQ, 1 if s == initial else 0, f"flow_{m.states[s]}"
            )
        art.outflow_row = model.add_constraint(outflow, Sense.EQ, 1, "outflow")

        for j, obj in enumerate(q.objectives):
            per_state = {
                s: max(obj.reward.expected(m, s, a) for a in range(len(m.actions[s]))) for s in maybe
            }
            upper = sum((Fraction(visit_bounds.get(s, 1)) * r for s, r in per_state.items()), Fraction(0))
            x = model.add_continuous(fresh_name(model, state_name(m, "x", initial, j)), 0, upper)
            art.x_vars[(initial, j)] = x
            row: Dict[int, Fraction] = {x: Fraction(1)}
            for (s, a), var in art.flow_vars.items():
                reward = obj.reward.expected(m, s, a)
                if reward:
                    row[var] = -reward
            model.add_constraint(row, Sense.EQ, 0, f"value_{j}")

    if p is not None:
        for j, obj in enumerate(q.objectives):
            sense = Sense.GE if obj.maximizing else Sense.LE
            model.add_constraint({art.x_vars[(initial, j)]: 1}, sense, Fraction(p[j]), f"threshold_{j}")

    logger.debug(f"Flow encoding with |S0| = {len(zero)}: {model}")
    return art


def encode_ec_constraints_flow(
    art: EncodingArtifacts, m: Mdp, q: Query, visit_bounds: Mapping[int, Fraction]
) -> EncodingArtifacts:
    """
    フローエンコーディングを多重連鎖MDPへ拡張する

    全目的で報酬0のペアからなる MEC の状態 s に fec_s ∈ [0, F_s] (fec_s ≤ F_s·e_s) を置き、
    フロー保存則と流出の式に加える。e 変数は EC 検出の制約 (値の行を除く) で定める。
    """
    if art.flavor != FLOW:
        raise NotTotalRewardError("encode_ec_constraints_flow はフローエンコーディングにのみ適用できます")
    if m.initial not in art.conservation_rows:
        return art
    zero = common_zero_states(m, art.sets)
    maybe = [s for s in range(m.num_states) if s not in zero]
    model = art.model
    mecs = zero_reward_mecs(m, q.objectives, maybe)
    for mec in mecs:
        e_state = add_ec_block(art, mec, None)
        for s, e in e_state.items():
            f_s = Fraction(visit_bounds.get(s, 1))
            fec = model.add_continuous(fresh_name(model, state_name(m, "fec", s)), 0, f_s)
            art.fec_vars[s] = fec
            model.add_constraint({fec: 1, e: -f_s}, Sense.LE, 0, f"fec_gate_{m.states[s]}")
            model.add_terms(art.conservation_rows[s], {fec: 1})
            model.add_terms(art.outflow_row, {fec: 1})
    logger.debug(f"Flow encoding extended with {len(mecs)} zero-reward end components")
    return art
