"""
メモリ構造 (メモリ状態、初期メモリ、非決定的な更新関数 δ: M → 2^M \\ ∅)
"""
from dataclasses import dataclass
from itertools import combinations
from typing import FrozenSet, List, Tuple

from src.core.exceptions import InvalidModelError, ZeroMemoryError
from src.core.objectives import Query

COMPLETE = "complete"
COUNTER = "counter"
GOAL = "goal"
MEMORY_KINDS = (COMPLETE, COUNTER, GOAL)


@dataclass(frozen=True)
class MemoryStructure:
    names: Tuple[str, ...]
    initial: int
    update: Tuple[FrozenSet[int], ...]
    kind: str = COMPLETE

    def __post_init__(self):
        if not self.names:
            raise ZeroMemoryError("メモリ状態が1つもありません")
        if len(set(self.names)) != len(self.names):
            raise InvalidModelError(f"メモリ状態名が重複しています: {self.names}")
        if len(self.update) != len(self.names):
            raise InvalidModelError("更新関数がメモリ状態の数と一致しません")
        if not 0 <= self.initial < len(self.names):
            raise InvalidModelError(f"初期メモリ {self.initial} が範囲外です")
        for m, targets in enumerate(self.update):
            if not targets:
                raise InvalidModelError(f"メモリ状態 {self.names[m]} の更新先が空です")
            if any(not 0 <= t < len(self.names) for t in targets):
                raise InvalidModelError(f"メモリ状態 {self.names[m]} の更新先が範囲外です")

    @property
    def size(self) -> int:
        return len(self.names)

    def successors(self, m: int) -> Tuple[int, ...]:
        return tuple(sorted(self.update[m]))


def _check_size(k: int) -> None:
    if k < 1:
        raise ZeroMemoryError(f"メモリサイズ K は1以上である必要があります (K={k})")


def build_complete_memory(k: int) -> MemoryStructure:
    """δ(m) = M の完全メモリ構造"""
    _check_size(k)
    everything = frozenset(range(k))
    return MemoryStructure(tuple(f"m{i + 1}" for i in range(k)), 0, tuple(everything for _ in range(k)), COMPLETE)


def build_counter_memory(k: int) -> MemoryStructure:
    """δ(m_i) = {m_i, m_{i+1}}、最後の状態は吸収的なカウンタ"""
    _check_size(k)
    update = tuple(frozenset({i, i + 1}) if i + 1 < k else frozenset({i}) for i in range(k))
    return MemoryStructure(tuple(f"m{i + 1}" for i in range(k)), 0, update, COUNTER)


def goal_indices(q: Query) -> Tuple[int, ...]:
    return tuple(j for j, obj in enumerate(q.objectives) if obj.goal)


def mask_name(mask: FrozenSet[int]) -> str:
    return "g" + "".join(f"_{j}" for j in sorted(mask)) if mask else "g"


def goal_masks(q: Query) -> List[FrozenSet[int]]:
    """ゴールを持つ目的の番号の部分集合 (要素数の昇順)"""
    indices = goal_indices(q)
    return [frozenset(c) for r in range(len(indices) + 1) for c in combinations(indices, r)]


def build_goal_memory(q: Query) -> MemoryStructure:
    """
    訪問済みゴール集合を記録するメモリ構造

    M はゴールを持つ目的の番号の部分集合、δ(m) は m の上位集合全体。
    実際にどの上位集合へ進むかは goal_product が遷移先の状態から決める。
    """
    masks = goal_masks(q)
    position = {mask: i for i, mask in enumerate(masks)}
    update = tuple(frozenset(position[other] for other in masks if mask <= other) for mask in masks)
    return MemoryStructure(tuple(mask_name(mask) for mask in masks), 0, update, GOAL)
