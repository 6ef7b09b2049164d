"""
エンドコンポーネント検出の制約

報酬0のペアからなる MEC E ごとに、誘導連鎖の BSCC が E の内部にできた場合に
その状態へ e_s = 1 を立てることを強制する。

- e_{s,α} ≤ a_{s,α}、e_{s,α} ≤ e_{s'} (後続状態)、e_s = Σ_{α∈E} e_{s,α}
- M^E 上のフロー: 各状態へ 1/|S_E| を流し込み、E 外の行動か e_s = 1 の状態の
  脱出行動 ⊥ からしか流出できない。E 内の BSCC は e_s = 1 の状態を持たないと流出できない。
"""
import logging
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from src.analysis.bounds import compute_visit_upper_bounds
from src.analysis.end_components import MecDecomposition, compute_mecs, largest_closed_subset
from src.core.mdp import Mdp, Pair
from src.core.objectives import Objective, Query
from src.encodings.artifacts import BASE, EncodingArtifacts, fresh_name, pair_name, state_name
from src.milp.model import Sense

logger = logging.getLogger(__name__)

EC_INIT = "__ec_init__"
EC_BOTTOM = "__ec_bottom__"
EC_EXIT = "__exit__"


def _zero_for(m: Mdp, objectives: Iterable[Objective], s: int, a: int) -> bool:
    return all(obj.reward.reward(s, a, t) == 0 for obj in objectives for t, _ in m.transitions[s][a])


def zero_reward_mecs(m: Mdp, objectives: Sequence[Objective], states: Iterable[int]) -> MecDecomposition:
    """
    states × Act のうち objectives 全ての報酬が0のペアについて、最大閉部分集合の MEC 分解

    Args:
        states: 対象状態 (S?^j または S?)
    """
    pairs = [
        (s, a) for s in states for a in range(len(m.actions[s])) if _zero_for(m, objectives, s, a)
    ]
    return compute_mecs(m, largest_closed_subset(m, pairs))


def positive_reward_mecs(m: Mdp, obj: Objective, states: Iterable[int]) -> List[frozenset]:
    """states × Act の最大閉部分集合の MEC のうち、正の報酬を持つペアを含むもの"""
    states = list(states)
    closed = largest_closed_subset(m, [(s, a) for s in states for a in range(len(m.actions[s]))])
    positive = obj.reward.positive_pairs()
    return [mec for mec in compute_mecs(m, closed) if mec & positive]


def end_component_mdp(m: Mdp, mec: Iterable[Pair]) -> Tuple[Mdp, Dict[int, int]]:
    """
    M^E を構築する

    状態は S_E と新しい初期状態・底状態。S_E の各状態は元の全行動を持ち、E 内の行動は
    元の遷移、E 外の行動は底状態へ確率1で移る。さらに底状態へ移る脱出行動 ⊥ を加える。
    初期状態は S_E の各状態へ一様に遷移する。

    Returns:
        (M^E, 元の状態インデックス -> M^E の状態インデックス)
    """
    mec = frozenset(mec)
    members = sorted({s for s, _ in mec})
    local = {s: i for i, s in enumerate(members)}
    init, bottom = len(members), len(members) + 1

    def unique(name: str) -> str:
        while name in m.states:
            name += "'"
        return name

    states = tuple(m.states[s] for s in members) + (unique(EC_INIT), unique(EC_BOTTOM))
    actions = []
    transitions = []
    for s in members:
        labels = list(m.actions[s])
        dists = []
        for a in range(len(m.actions[s])):
            if (s, a) in mec:
                dists.append(tuple((local[t], p) for t, p in m.transitions[s][a]))
            else:
                dists.append(((bottom, Fraction(1)),))
        exit_label = EC_EXIT
        while exit_label in labels:
            exit_label += "'"
        labels.append(exit_label)
        dists.append(((bottom, Fraction(1)),))
        actions.append(tuple(labels))
        transitions.append(tuple(dists))
    share = Fraction(1, len(members))
    actions.append((EC_INIT,))
    transitions.append((tuple((i, share) for i in range(len(members))),))
    actions.append((EC_EXIT,))
    transitions.append((((bottom, Fraction(1)),),))
    return Mdp(states, tuple(actions), tuple(transitions), init), local


def end_component_visit_bounds(m: Mdp, mec: Iterable[Pair]) -> Dict[int, Fraction]:
    """M^E の底状態を吸収先とする訪問回数の上界 (元の状態インデックスで返す)"""
    ec_mdp, local = end_component_mdp(m, mec)
    bottom = ec_mdp.num_states - 1
    bounds = compute_visit_upper_bounds(ec_mdp, {bottom})
    return {s: bounds[i] for s, i in local.items()}


def add_ec_block(art: EncodingArtifacts, mec: Iterable[Pair], j: Optional[int]) -> Dict[int, int]:
    """
    1つの MEC について e 変数と M^E のフロー制約を加える

    j が None の場合は目的に依存しない (名前に目的番号を付けない) 変数を作る。

    Returns:
        状態 -> e_s の変数インデックス
    """
    m = art.mdp
    model = art.model
    mec = frozenset(mec)
    members = sorted({s for s, _ in mec})
    visit = end_component_visit_bounds(m, mec)
    tag = "" if j is None else f"_{j}"

    e_state: Dict[int, int] = {}
    for s in members:
        e_state[s] = model.add_binary(fresh_name(model, state_name(m, "e", s, j)))
        art.e_vars[(s, j)] = e_state[s]

    for s in members:
        row = {e_state[s]: Fraction(1)}
        for a in range(len(m.actions[s])):
            if (s, a) not in mec:
                continue
            ea = model.add_binary(fresh_name(model, pair_name(m, "ea", s, a, j)))
            art.ea_vars[(s, a, j)] = ea
            label = f"{m.states[s]}_{m.actions[s][a]}{tag}"
            model.add_constraint({ea: 1, art.a_vars[(s, a)]: -1}, Sense.LE, 0, f"ec_select_{label}")
            for t, _ in m.transitions[s][a]:
                model.add_constraint({ea: 1, e_state[t]: -1}, Sense.LE, 0, f"ec_succ_{label}_{m.states[t]}")
            row[ea] = Fraction(-1)
        model.add_constraint(row, Sense.EQ, 0, f"ec_state_{m.states[s]}{tag}")

    inflow: Dict[int, Dict[int, Fraction]] = {s: {} for s in members}
    leaving: Dict[int, Fraction] = {}
    for s in members:
        f_s = visit[s]
        fb = model.add_continuous(fresh_name(model, state_name(m, "fb", s, j)), 0, f_s)
        art.fb_vars[(s, j)] = fb
        model.add_constraint({fb: 1, e_state[s]: -f_s}, Sense.LE, 0, f"ec_exit_{m.states[s]}{tag}")
        inflow[s][fb] = inflow[s].get(fb, Fraction(0)) + 1
        leaving[fb] = Fraction(1)
        for a in range(len(m.actions[s])):
            fe = model.add_continuous(fresh_name(model, pair_name(m, "fe", s, a, j)), 0, f_s)
            art.fe_vars[(s, a, j)] = fe
            model.add_constraint(
                {fe: 1, art.a_vars[(s, a)]: -f_s}, Sense.LE, 0,
                f"ec_flow_{m.states[s]}_{m.actions[s][a]}{tag}",
            )
            inflow[s][fe] = inflow[s].get(fe, Fraction(0)) + 1
            if (s, a) in mec:
                for t, p in m.transitions[s][a]:
                    inflow[t][fe] = inflow[t].get(fe, Fraction(0)) - p
            else:
                leaving[fe] = Fraction(1)

    share = Fraction(1, len(members))
    for s in members:
        model.add_constraint(inflow[s], Sense.EQ, share, f"ec_inout_{m.states[s]}{tag}")
    model.add_constraint(leaving, Sense.EQ, 1, f"ec_end_{m.states[members[0]]}{tag}")
    return e_state


def encode_ec_constraints(
    art: EncodingArtifacts, m: Mdp, q: Query, bounds=None, objectives: Optional[Iterable[int]] = None
) -> EncodingArtifacts:
    """
    基本エンコーディングに EC 検出の制約を加える

    目的 j の S?^j 上で報酬0のペアからなる MEC ごとに e 変数とフロー制約を置き、
    e_s^j = 1 の状態の値を ±x_s^j ≤ u_s^j·(1 - e_s^j) で0に固定する。

    Args:
        bounds: u_s^j の上界 (省略時は art.bounds)
        objectives: 対象の目的 (省略時は最大化目的のみ。最小化目的は値の不等式だけで
            BSCC 上の値が上から押さえられる)
    """
    if art.flavor != BASE:
        raise ValueError("encode_ec_constraints は基本エンコーディングにのみ適用できます")
    bounds = bounds or art.bounds
    indices = q.maximizing_indices if objectives is None else tuple(objectives)
    added = 0
    for j in indices:
        obj = q[j]
        sign = 1 if obj.maximizing else -1
        for mec in zero_reward_mecs(m, [obj], art.sets[j].maybe):
            e_state = add_ec_block(art, mec, j)
            for s, e in e_state.items():
                u = bounds.u(s, j)
                art.model.add_constraint(
                    {art.x_vars[(s, j)]: sign, e: u}, Sense.LE, u, f"ec_value_{m.states[s]}_{j}"
                )
            added += 1
    logger.debug(f"Added end component constraints for {added} MECs")
    return art
