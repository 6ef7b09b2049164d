"""
MDP とメモリ構造の積

積の状態は (s, m)、行動は (α, m')。P'((s,m),(α,m'),(s',m')) = P(s,α,s')·[m' ∈ δ(m)]。
初期状態 (s_I, m_I) から到達可能な部分のみを構築する。
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, FrozenSet, List, Optional, Tuple

from src.config import Config
from src.core.exceptions import ProductTooLargeError
from src.core.mdp import Mdp
from src.core.objectives import Objective, Query, RewardStructure
from src.memory.memory_structure import MemoryStructure, build_goal_memory, goal_indices, goal_masks

logger = logging.getLogger(__name__)

SEPARATOR = "|"

ProductKey = Tuple[int, int]


@dataclass(frozen=True)
class ProductMdp:
    """
    積MDPと元のモデルへの対応

    state_pairs[i] = (s, m): 積の状態 i の元の状態とメモリ状態
    action_pairs[i][b] = (α, m'): 積の状態 i の行動 b の元の行動と更新先メモリ
        (ゴール訪問の積では更新先が遷移先で決まるため m' は None)
    """
    mdp: Mdp
    original: Mdp
    memory: MemoryStructure
    state_pairs: Tuple[ProductKey, ...]
    action_pairs: Tuple[Tuple[Tuple[int, Optional[int]], ...], ...]

    @property
    def num_states(self) -> int:
        return self.mdp.num_states

    def index_of(self, s: int, m: int) -> Optional[int]:
        try:
            return self.state_pairs.index((s, m))
        except ValueError:
            return None


def _explore(
    m: Mdp,
    mem: MemoryStructure,
    start: ProductKey,
    moves: Callable[[int, int], List[Tuple[int, Optional[int], str, Callable[[int], int]]]],
) -> ProductMdp:
    """
    start から到達可能な積の状態を幅優先で列挙する

    moves(s, k) は (元の行動, 更新先メモリ, 行動ラベル, 遷移先 t -> 遷移先メモリ) の列を返す。
    """
    cap = Config.PRODUCT_STATE_CAP
    index: Dict[ProductKey, int] = {start: 0}
    order: List[ProductKey] = [start]
    actions: List[Tuple[str, ...]] = []
    transitions: List[Tuple] = []
    action_pairs: List[Tuple[Tuple[int, Optional[int]], ...]] = []

    i = 0
    while i < len(order):
        s, k = order[i]
        labels, dists, pairs = [], [], []
        for a, k_next, label, memory_of in moves(s, k):
            dist = []
            for t, prob in m.transitions[s][a]:
                key = (t, memory_of(t))
                if key not in index:
                    if len(order) >= cap:
                        raise ProductTooLargeError(
                            f"積MDPの状態数が上限 {cap} を超えます ({m.num_states} 状態 × {mem.size} メモリ)"
                        )
                    index[key] = len(order)
                    order.append(key)
                dist.append((index[key], prob))
            labels.append(label)
            dists.append(tuple(dist))
            pairs.append((a, k_next))
        actions.append(tuple(labels))
        transitions.append(tuple(dists))
        action_pairs.append(tuple(pairs))
        i += 1

    names = tuple(f"{m.states[s]}{SEPARATOR}{mem.names[k]}" for s, k in order)
    mdp = Mdp(names, tuple(actions), tuple(transitions), 0)
    logger.info(f"Built product with {mdp.num_states} states from {m.num_states} states and {mem.size} memory states")
    return ProductMdp(mdp, m, mem, tuple(order), tuple(action_pairs))


def product(m: Mdp, mem: MemoryStructure) -> ProductMdp:
    """M ⋉ N の到達可能部分"""

    def moves(s: int, k: int):
        result = []
        for a in range(len(m.actions[s])):
            for k_next in mem.successors(k):
                label = f"{m.actions[s][a]}{SEPARATOR}{mem.names[k_next]}"
                result.append((a, k_next, label, lambda t, k_next=k_next: k_next))
        return result

    return _explore(m, mem, (m.initial, mem.initial), moves)


def goal_product(m: Mdp, q: Query) -> ProductMdp:
    """
    訪問済みゴールを決定的に記録する積

    積の状態 (s, mask) の mask は s 自身を含めて訪問したゴールを持つ目的の集合。
    行動は元の行動と同じラベルを使う。
    """
    mem = build_goal_memory(q)
    indices = goal_indices(q)
    masks = goal_masks(q)
    position = {mask: i for i, mask in enumerate(masks)}

    def goals_of(s: int) -> FrozenSet[int]:
        return frozenset(j for j in indices if s in q[j].goal)

    def moves(s: int, k: int):
        mask = masks[k]
        return [
            (a, None, m.actions[s][a], lambda t, mask=mask: position[mask | goals_of(t)])
            for a in range(len(m.actions[s]))
        ]

    return _explore(m, mem, (m.initial, position[goals_of(m.initial)]), moves)


def lift_objective(obj: Objective, prod: ProductMdp) -> Objective:
    """R'((s,m),(α,m'),(s',m')) = R(s,α,s')、G' = G × M"""
    pm = prod.mdp
    entries: Dict[Tuple[int, int, int], Fraction] = {}
    for i in range(pm.num_states):
        s = prod.state_pairs[i][0]
        for b, (a, _) in enumerate(prod.action_pairs[i]):
            for t_index, _ in pm.transitions[i][b]:
                value = obj.reward.reward(s, a, prod.state_pairs[t_index][0])
                if value:
                    entries[(i, b, t_index)] = value
    goal = frozenset(i for i, (s, _) in enumerate(prod.state_pairs) if s in obj.goal)
    return Objective(RewardStructure(obj.reward.name, entries), obj.relation, goal)


def lift_query(q: Query, prod: ProductMdp) -> Query:
    return Query(tuple(lift_objective(obj, prod) for obj in q.objectives))
