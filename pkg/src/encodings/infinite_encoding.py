"""
期待報酬が無限になり得る最大化目的のエンコーディング

目的 j ごとに二値変数 b_j を置く。b_j = 1 なら通常の閾値 x_{sI}^j ≥ p_j を課し、
b_j = 0 なら「S0^j か報酬0の EC (e = 1) に到達する確率 w_{sI}^j が1未満」を課す。
後者の下では正の報酬を持つ BSCC に正の確率で留まるため値は ∞ となる。
狭義不等式は共有の ε 変数 (目的関数で最大化) で表す。
"""
import logging
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence

from src.analysis.state_sets import ObjectiveStateSets
from src.core.mdp import Mdp
from src.core.numbers import Extended, is_infinite
from src.core.objectives import Objective, Query
from src.encodings.artifacts import BASE, EncodingArtifacts, fresh_name, pair_name, state_name
from src.encodings.ec_encoding import positive_reward_mecs
from src.milp.model import Sense, add_strict_epsilon

logger = logging.getLogger(__name__)


def can_be_infinite(m: Mdp, obj: Objective, sets: ObjectiveStateSets) -> bool:
    """最大化目的 obj がある戦略で無限の値を取り得るか"""
    if not obj.maximizing or m.initial not in sets.maybe:
        return False
    return bool(positive_reward_mecs(m, obj, sets.maybe))


def infinite_objectives(m: Mdp, q: Query, sets: Sequence[ObjectiveStateSets]) -> List[int]:
    return [j for j, obj in enumerate(q.objectives) if can_be_infinite(m, obj, sets[j])]


def encode_infinite_max(
    art: EncodingArtifacts,
    m: Mdp,
    q: Query,
    p: Optional[Sequence[Extended]],
    indices: Optional[Iterable[int]] = None,
) -> EncodingArtifacts:
    """
    無限の値を許す最大化目的の制約を加える

    encode_base を free=indices で呼び出し、encode_ec_constraints を適用した後に使う。

    Args:
        p: 閾値。p_j = ∞ の座標は b_j = 0 (値が無限であること) を強制する
        indices: 対象の目的 (省略時は can_be_infinite な目的全て)
    """
    if art.flavor != BASE:
        raise ValueError("encode_infinite_max は基本エンコーディングにのみ適用できます")
    indices = infinite_objectives(m, q, art.sets) if indices is None else list(indices)
    if not indices:
        return art
    model = art.model
    initial = m.initial

    for j in indices:
        maybe = art.sets[j].maybe
        zero = art.sets[j].zero
        x = art.value_var(j)
        if x is None or initial not in maybe:
            logger.debug(f"Objective {j} cannot be infinite from the initial state")
            continue

        b = model.add_binary(fresh_name(model, f"b_{j}"))
        art.b_vars[j] = b
        if p is not None:
            if is_infinite(p[j]):
                model.set_bounds(b, 0, 0)
            else:
                model.add_constraint({x: 1, b: -Fraction(p[j])}, Sense.GE, 0, f"threshold_{j}")

        for s in sorted(maybe):
            art.w_vars[(s, j)] = model.add_continuous(fresh_name(model, state_name(m, "w", s, j)), 0, 1)
        for s in sorted(maybe):
            k = len(m.actions[s])
            total: Dict[int, Fraction] = {art.w_vars[(s, j)]: Fraction(1)}
            for a in range(k):
                wa = model.add_continuous(fresh_name(model, pair_name(m, "wa", s, a, j)), 0, 1)
                art.wa_vars[(s, a, j)] = wa
                label = f"{m.states[s]}_{m.actions[s][a]}_{j}"
                model.add_constraint({wa: 1, art.a_vars[(s, a)]: 1}, Sense.GE, 1, f"reach_idle_{label}")
                ea = art.ea_vars.get((s, a, j))
                if ea is not None:
                    model.add_constraint({wa: 1, ea: -1}, Sense.GE, 0, f"reach_ec_{label}")
                row: Dict[int, Fraction] = {wa: Fraction(1)}
                to_zero = Fraction(0)
                for t, prob in m.transitions[s][a]:
                    if t in zero:
                        to_zero += prob
                    elif t in maybe:
                        row[art.w_vars[(t, j)]] = row.get(art.w_vars[(t, j)], Fraction(0)) - prob
                model.add_constraint(row, Sense.GE, to_zero, f"reach_{label}")
                total[wa] = Fraction(-1)
            model.add_constraint(total, Sense.EQ, -(k - 1), f"reach_state_{m.states[s]}_{j}")

        if art.eps is None:
            art.eps = add_strict_epsilon(model, fresh_name(model, "eps"))
        model.add_constraint(
            {art.w_vars[(initial, j)]: 1, art.eps: 1, b: -1}, Sense.LE, 1, f"infinite_{j}"
        )

    logger.debug(f"Infinite reward constraints for objectives {list(art.b_vars)}")
    return art
