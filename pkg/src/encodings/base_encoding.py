"""
期待報酬目的の基本エンコーディング (単一連鎖・有限報酬)

目的 j ごとに S?^j の各状態へ値変数 x_s^j と行動別の値変数 x_{s,α}^j を置く。
最大化目的は x = E、最小化目的は x = -E として、どちらも上から押さえる形の
不等式だけで値を表す。S0^j の状態の値は定数0なので変数を作らない。
"""
import logging
from fractions import Fraction
from typing import Dict, Iterable, Optional, Sequence

from src.analysis.bounds import Bounds
from src.analysis.state_sets import ObjectiveStateSets
from src.core.exceptions import DimensionMismatchError, UnboundedRewardError
from src.core.mdp import Mdp
from src.core.numbers import Extended
from src.core.objectives import Query
from src.encodings.artifacts import (
    BASE, EncodingArtifacts, add_action_selection, fresh_name, pair_name, require_finite, state_name,
)
from src.milp.model import MilpModel, Sense

logger = logging.getLogger(__name__)


def base_variable_count(m: Mdp, sets: Sequence[ObjectiveStateSets]) -> int:
    """Σ_s |Act(s)| + Σ_j Σ_{s∈S?^j} (1 + |Act(s)|)"""
    count = m.num_pairs
    for st in sets:
        count += sum(1 + len(m.actions[s]) for s in st.maybe)
    return count


def encode_base(
    m: Mdp,
    q: Query,
    p: Optional[Sequence[Extended]],
    bounds: Bounds,
    sets: Sequence[ObjectiveStateSets],
    name: str = "psma_base",
    free: Iterable[int] = (),
) -> EncodingArtifacts:
    """
    行動選択と目的ごとの値の不等式系を構築する

    Args:
        p: 閾値。None の場合は閾値の行を加えない (パレート近似で使用)
        bounds: S?^j の全状態について u_s^j を持つ上界
        sets: 目的ごとの S0^j / S?^j
        free: 閾値の行を加えない目的 (無限報酬のエンコーディングが閾値を扱う)。p のこれらの座標は ∞ でもよい

    Raises:
        InfinitePointError: p に ∞ が含まれる
        UnboundedRewardError: 必要な上界が欠けている
    """
    free = frozenset(free)
    if p is not None:
        q.check_point(p)
        require_finite([v for j, v in enumerate(p) if j not in free])
    if len(sets) != q.dimension:
        raise DimensionMismatchError(f"状態集合の数 {len(sets)} が目的数 {q.dimension} と一致しません")

    model = MilpModel(name)
    art = EncodingArtifacts(model, m, q, None if p is None else tuple(p), BASE, tuple(sets), bounds)
    art.a_vars = add_action_selection(model, m)

    for j, obj in enumerate(q.objectives):
        maybe = sets[j].maybe
        sign = Fraction(1) if obj.maximizing else Fraction(-1)
        minimizing = 0 if obj.maximizing else 1

        for s in sorted(maybe):
            u = bounds.u(s, j)
            lo, hi = (Fraction(0), u) if obj.maximizing else (-u, Fraction(0))
            art.x_vars[(s, j)] = model.add_continuous(fresh_name(model, state_name(m, "x", s, j)), lo, hi)
            for a in range(len(m.actions[s])):
                art.xa_vars[(s, a, j)] = model.add_continuous(
                    fresh_name(model, pair_name(m, "xa", s, a, j)), lo, hi
                )

        for s in sorted(maybe):
            u = bounds.u(s, j)
            k = len(m.actions[s])
            aggregate: Dict[int, Fraction] = {art.x_vars[(s, j)]: Fraction(1)}
            for a in range(k):
                xa = art.xa_vars[(s, a, j)]
                row: Dict[int, Fraction] = {xa: Fraction(1)}
                for t, prob in m.transitions[s][a]:
                    if t in maybe:
                        row[art.x_vars[(t, j)]] = row.get(art.x_vars[(t, j)], Fraction(0)) - prob
                label = f"{m.states[s]}_{m.actions[s][a]}_{j}"
                model.add_constraint(row, Sense.LE, sign * obj.reward.expected(m, s, a), f"bellman_{label}")
                model.add_constraint(
                    {xa: 1, art.a_vars[(s, a)]: -u}, Sense.LE, -u * minimizing, f"disable_{label}"
                )
                aggregate[xa] = Fraction(-1)
            model.add_constraint(aggregate, Sense.LE, minimizing * (k - 1) * u, f"aggregate_{m.states[s]}_{j}")

        if p is not None and j not in free:
            _add_threshold(art, j, p[j])

    logger.debug(
        f"Base encoding for {m.num_states} states, {q.dimension} objectives: {model}"
    )
    return art


def _add_threshold(art: EncodingArtifacts, j: int, threshold: Extended) -> None:
    """±x_{sI}^j ∼ p[j] (x は既に符号調整済みのため常に x ≥ ±p の形になる)"""
    obj = art.query[j]
    rhs = Fraction(threshold) if obj.maximizing else -Fraction(threshold)
    var = art.value_var(j)
    coeffs = {} if var is None else {var: 1}
    if var is None:
        satisfied = 0 >= rhs
        logger.debug(f"Objective {j} is constant 0 at the initial state (threshold satisfied: {satisfied})")
    art.model.add_constraint(coeffs, Sense.GE, rhs, f"threshold_{j}")


def check_bounds_cover(bounds: Bounds, sets: Sequence[ObjectiveStateSets]) -> None:
    """S?^j の全状態に u_s^j があることを確認する"""
    for j, st in enumerate(sets):
        missing = [s for s in st.maybe if (s, j) not in bounds.reward_upper]
        if missing:
            raise UnboundedRewardError(f"目的 {j} の状態 {sorted(missing)} に上界がありません")
