"""
純粋定常戦略の厳密評価

誘導連鎖上でゴール状態を吸収的とみなし、BSCC を検出する。
- 正の報酬を持つ BSCC に到達しうる状態の値は ∞
- ゴール状態と報酬0の BSCC の値は 0
- 残りの過渡状態は線形方程式系を厳密に解く
"""
import logging
from fractions import Fraction
from typing import Callable, Dict, FrozenSet, Iterable, List, Sequence, Set, Tuple

import networkx as nx

from src.core.mdp import Mdp
from src.core.numbers import INF, Extended
from src.core.objectives import Objective, Query
from src.core.strategy import InducedChain, PureStationaryStrategy, induce_chain
from src.evaluation.linear_solver import solve_linear_system

logger = logging.getLogger(__name__)

ChainReward = Callable[[int, int], Fraction]


def chain_values(chain: Mdp, reward: ChainReward, goal: Iterable[int]) -> List[Extended]:
    """
    各状態に1つの行動しかない連鎖について、ゴール到達までの期待累積報酬を返す

    Args:
        chain: 行動が1つずつのMDP
        reward: reward(i, t) = 状態 i から t への遷移の報酬
        goal: ゴール状態 (chain のインデックス)
    """
    goal = frozenset(goal)
    n = chain.num_states
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    for i in range(n):
        if i in goal:
            continue
        for t, _ in chain.transitions[i][0]:
            g.add_edge(i, t)

    zero: Set[int] = set(goal)
    infinite_bottom: Set[int] = set()
    for component in nx.attracting_components(g):
        if component & goal:
            continue
        positive = any(
            reward(i, t) > 0 for i in component for t, _ in chain.transitions[i][0]
        )
        if positive:
            infinite_bottom |= component
        else:
            zero |= component

    infinite: Set[int] = set(infinite_bottom)
    for i in infinite_bottom:
        infinite |= nx.ancestors(g, i)

    transient = [i for i in range(n) if i not in zero and i not in infinite]
    values = _solve_transient(chain, reward, transient)

    result: List[Extended] = []
    for i in range(n):
        if i in infinite:
            result.append(INF)
        elif i in zero:
            result.append(Fraction(0))
        else:
            result.append(values[i])
    return result


def _solve_transient(chain: Mdp, reward: ChainReward, states: Sequence[int]) -> Dict[int, Fraction]:
    index = {i: k for k, i in enumerate(states)}
    a_rows = []
    b = []
    for i in states:
        row = [Fraction(0)] * len(states)
        row[index[i]] += 1
        rhs = Fraction(0)
        for t, p in chain.transitions[i][0]:
            rhs += p * reward(i, t)
            if t in index:
                row[index[t]] -= p
        a_rows.append(row)
        b.append(rhs)
    solution = solve_linear_system(a_rows, b)
    return {i: solution[index[i]] for i in states}


def _chain_reward(induced: InducedChain, obj: Objective) -> ChainReward:
    state_map = induced.state_map

    def reward(i: int, t: int) -> Fraction:
        s = state_map[i]
        return obj.reward.reward(s, induced.strategy.action(s), state_map[t])

    return reward


def _chain_goal(induced: InducedChain, obj: Objective) -> FrozenSet[int]:
    return frozenset(i for i, s in enumerate(induced.state_map) if s in obj.goal)


def solve_value_system(induced: InducedChain, obj: Objective, zero: Iterable[int]) -> Dict[int, Fraction]:
    """
    x_s = 0 (s ∈ zero ∪ G)、それ以外は x_s = Σ P(s,σ(s),s')·(x_{s'} + R(s,σ(s),s')) を解く

    zero は元MDPの状態インデックス。戻り値も元MDPの状態インデックスをキーとする。

    Raises:
        SingularSystemError: zero ∪ G に確率1で到達しない状態がある
    """
    zero = frozenset(zero) | obj.goal
    interior = [i for i, s in enumerate(induced.state_map) if s not in zero]
    values = _solve_transient(induced.chain, _chain_reward(induced, obj), interior)
    result = {s: Fraction(0) for s in induced.state_map if s in zero}
    for i, value in values.items():
        result[induced.state_map[i]] = value
    return result


def evaluate_induced(induced: InducedChain, obj: Objective) -> Dict[int, Extended]:
    """誘導連鎖の到達可能な全状態 (元インデックス) の値"""
    values = chain_values(induced.chain, _chain_reward(induced, obj), _chain_goal(induced, obj))
    return {s: values[i] for i, s in enumerate(induced.state_map)}


def evaluate_strategy(m: Mdp, sigma: PureStationaryStrategy, obj: Objective) -> Extended:
    """初期状態における E^σ(R ◊ G) の厳密値 (∞ を含む)"""
    induced = induce_chain(m, sigma)
    return evaluate_induced(induced, obj)[m.initial]


def evaluate_query(m: Mdp, sigma: PureStationaryStrategy, q: Query) -> Tuple[Extended, ...]:
    """クエリの全目的について初期状態の値ベクトルを返す"""
    induced = induce_chain(m, sigma)
    return tuple(evaluate_induced(induced, obj)[m.initial] for obj in q.objectives)


def meets_point(q: Query, values: Sequence[Extended], p: Sequence[Extended]) -> bool:
    q.check_point(values)
    q.check_point(p)
    return all(obj.meets(v, t) for obj, v, t in zip(q.objectives, values, p))


def check_achieves(m: Mdp, sigma: PureStationaryStrategy, q: Query, p: Sequence[Extended]) -> bool:
    """⟨M, σ, p⟩ ⊨ Q を厳密に判定する"""
    q.check_point(p)
    values = evaluate_query(m, sigma, q)
    result = meets_point(q, values, p)
    logger.debug(f"Exact check of {sigma.choices}: values={values}, point={tuple(p)}, result={result}")
    return result
