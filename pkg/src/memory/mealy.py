"""
Mealy 機械による有限メモリ戦略

next_action[(s, m)] = α、update[(m, s, α)] = m'。状態 s でメモリ m のとき α を選び、
次の状態ではメモリ m' を使う。未指定の更新はメモリを変えない。
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, FrozenSet, List, Mapping, Tuple

from src.core.exceptions import InvalidStrategyError
from src.core.mdp import Mdp
from src.core.numbers import Extended
from src.core.objectives import Objective, Query
from src.core.strategy import PureStationaryStrategy
from src.evaluation.exact_evaluator import chain_values
from src.memory.memory_structure import GOAL, goal_indices, goal_masks, mask_name
from src.memory.product import ProductMdp

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MealyStrategy:
    memory: Tuple[str, ...]
    initial: int
    next_action: Mapping[Tuple[int, int], int]
    update: Mapping[Tuple[int, int, int], int] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.memory)

    def action(self, s: int, m: int) -> int:
        return self.next_action.get((s, m), 0)

    def next_memory(self, m: int, s: int, a: int) -> int:
        return self.update.get((m, s, a), m)

    def validate(self, mdp: Mdp) -> None:
        if not 0 <= self.initial < self.size:
            raise InvalidStrategyError(f"初期メモリ {self.initial} が範囲外です")
        for (s, m), a in self.next_action.items():
            if not 0 <= s < mdp.num_states or not 0 <= m < self.size:
                raise InvalidStrategyError(f"次行動関数の引数 ({s}, {m}) が範囲外です")
            if not 0 <= a < len(mdp.actions[s]):
                raise InvalidStrategyError(f"状態 {mdp.states[s]} で行動 {a} は有効ではありません")
        for (m, s, a), m2 in self.update.items():
            if not 0 <= m2 < self.size:
                raise InvalidStrategyError(f"更新先メモリ {m2} が範囲外です")

    @classmethod
    def stationary(cls, sigma: PureStationaryStrategy) -> "MealyStrategy":
        """メモリ1の Mealy 機械として純粋定常戦略を表す"""
        return cls(("m1",), 0, {(s, 0): a for s, a in sigma.pairs()})

    def to_dict(self, mdp: Mdp) -> Dict[str, Any]:
        next_action: Dict[str, Dict[str, str]] = {}
        for (s, m), a in sorted(self.next_action.items()):
            next_action.setdefault(mdp.states[s], {})[self.memory[m]] = mdp.actions[s][a]
        update: Dict[str, Dict[str, Dict[str, str]]] = {}
        for (m, s, a), m2 in sorted(self.update.items()):
            update.setdefault(self.memory[m], {}).setdefault(mdp.states[s], {})[mdp.actions[s][a]] = self.memory[m2]
        return {
            "memory": list(self.memory),
            "initial": self.memory[self.initial],
            "next_action": next_action,
            "update": update,
        }

    @classmethod
    def from_dict(cls, mdp: Mdp, doc: Mapping[str, Any]) -> "MealyStrategy":
        memory = tuple(str(m) for m in doc["memory"])
        position = {name: i for i, name in enumerate(memory)}

        def mem_index(name: str) -> int:
            if name not in position:
                raise InvalidStrategyError(f"未定義のメモリ状態です: {name}")
            return position[name]

        try:
            next_action = {}
            for s_name, per_memory in doc.get("next_action", {}).items():
                s = mdp.state_index(s_name)
                for m_name, label in per_memory.items():
                    next_action[(s, mem_index(m_name))] = mdp.action_index(s, label)
            update = {}
            for m_name, per_state in doc.get("update", {}).items():
                for s_name, per_action in per_state.items():
                    s = mdp.state_index(s_name)
                    for label, m2 in per_action.items():
                        update[(mem_index(m_name), s, mdp.action_index(s, label))] = mem_index(m2)
        except KeyError as e:
            raise InvalidStrategyError(f"Mealy 戦略の必須フィールドがありません: {e}") from e
        mealy = cls(memory, mem_index(doc.get("initial", memory[0])), next_action, update)
        mealy.validate(mdp)
        return mealy


def translate_product_strategy(prod: ProductMdp, sigma: PureStationaryStrategy) -> MealyStrategy:
    """
    積MDP上の純粋定常戦略を元のMDP上の Mealy 戦略に変換する

    σ'(s,m) = (α, m') のとき σ_a(s,m) = α、σ_u(m,s,α) = m'、他の行動では σ_u(m,s,α') = m。
    積に現れない (s, m) は最小の行動を選ぶ。
    """
    if prod.memory.kind == GOAL:
        raise ValueError("ゴール訪問の積には translate_goal_strategy を使用してください")
    next_action: Dict[Tuple[int, int], int] = {}
    update: Dict[Tuple[int, int, int], int] = {}
    for i, (s, m) in enumerate(prod.state_pairs):
        a, m_next = prod.action_pairs[i][sigma.action(i)]
        next_action[(s, m)] = a
        if m_next != m:
            update[(m, s, a)] = m_next
    return MealyStrategy(prod.memory.names, prod.memory.initial, next_action, update)


def translate_goal_strategy(prod: ProductMdp, q: Query, sigma: PureStationaryStrategy) -> MealyStrategy:
    """
    ゴール訪問の積上の戦略を Mealy 戦略に変換する

    メモリは現在の状態より前に訪問したゴールの集合。積の状態 (s, mask) の行動を
    メモリ mask \\ (s のゴール) で選ぶ。
    """
    masks = goal_masks(q)
    position = {mask: i for i, mask in enumerate(masks)}
    indices = goal_indices(q)
    m = prod.original

    def goals_of(s: int) -> FrozenSet[int]:
        return frozenset(j for j in indices if s in q[j].goal)

    next_action: Dict[Tuple[int, int], int] = {}
    update: Dict[Tuple[int, int, int], int] = {}
    for i, (s, k) in enumerate(prod.state_pairs):
        a = prod.action_pairs[i][sigma.action(i)][0]
        after = masks[k]
        own = goals_of(s)
        # (s, after) に到達し得る直前のメモリは after \ own と after の間の全て
        for before in masks:
            if not before <= after or not after - own <= before:
                continue
            b = position[before]
            next_action[(s, b)] = a
            for a2 in range(len(m.actions[s])):
                if position[after] != b:
                    update[(b, s, a2)] = position[after]
    return MealyStrategy(tuple(mask_name(mask) for mask in masks), 0, next_action, update)


def mealy_chain(m: Mdp, mealy: MealyStrategy) -> Tuple[Mdp, List[Tuple[int, int]], List[int]]:
    """
    Mealy 戦略が誘導する連鎖 (S × M の到達可能部分)

    Returns:
        (連鎖, 連鎖の状態 -> (s, m), 連鎖の状態 -> 選ばれた元の行動)
    """
    start = (m.initial, mealy.initial)
    index = {start: 0}
    order = [start]
    chosen: List[int] = []
    transitions = []
    i = 0
    while i < len(order):
        s, k = order[i]
        a = mealy.action(s, k)
        k_next = mealy.next_memory(k, s, a)
        chosen.append(a)
        dist = []
        for t, prob in m.transitions[s][a]:
            key = (t, k_next)
            if key not in index:
                index[key] = len(order)
                order.append(key)
            dist.append((index[key], prob))
        transitions.append((tuple(dist),))
        i += 1
    names = tuple(f"{m.states[s]}|{mealy.memory[k]}" for s, k in order)
    chain = Mdp(names, tuple(("σ",) for _ in order), tuple(transitions), 0)
    return chain, order, chosen


def evaluate_mealy(m: Mdp, mealy: MealyStrategy, obj: Objective) -> Extended:
    """初期状態における E^σ(R ◊ G) の厳密値"""
    chain, order, chosen = mealy_chain(m, mealy)

    def reward(i: int, t: int) -> Fraction:
        return obj.reward.reward(order[i][0], chosen[i], order[t][0])

    goal = [i for i, (s, _) in enumerate(order) if s in obj.goal]
    return chain_values(chain, reward, goal)[0]


def evaluate_mealy_query(m: Mdp, mealy: MealyStrategy, q: Query) -> Tuple[Extended, ...]:
    mealy.validate(m)
    values = tuple(evaluate_mealy(m, mealy, obj) for obj in q.objectives)
    logger.debug(f"Mealy strategy with {mealy.size} memory states has values {values}")
    return values
