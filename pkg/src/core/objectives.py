"""
報酬構造・目的・クエリ・点

目的 E∼(R ◊ G) はゴール集合 G に初めて到達するまでの累積期待報酬を
閾値と比較する。G が空なら総報酬目的となる。
"""
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, Mapping, Sequence, Tuple

from src.core.exceptions import DimensionMismatchError, InvalidModelError
from src.core.mdp import Mdp
from src.core.numbers import Extended, is_infinite

Point = Tuple[Extended, ...]
RewardKey = Tuple[int, int, int]


@dataclass(frozen=True)
class RewardStructure:
    """遷移 (s, a, t) に非負の報酬を割り当てる疎な構造 (未登録は0)"""
    name: str
    entries: Mapping[RewardKey, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        cleaned: Dict[RewardKey, Fraction] = {}
        for key, value in self.entries.items():
            value = Fraction(value)
            if value < 0:
                raise InvalidModelError(f"報酬 {self.name} に負の値があります: {key} -> {value}")
            if value != 0:
                cleaned[tuple(key)] = value
        object.__setattr__(self, "entries", cleaned)

    def reward(self, s: int, a: int, t: int) -> Fraction:
        return self.entries.get((s, a, t), Fraction(0))

    def expected(self, m: Mdp, s: int, a: int) -> Fraction:
        """Σ_t P(s,a,t)·R(s,a,t)"""
        return sum((p * self.reward(s, a, t) for t, p in m.transitions[s][a]), Fraction(0))

    def is_zero(self) -> bool:
        return not self.entries

    def positive_pairs(self) -> FrozenSet[Tuple[int, int]]:
        return frozenset((s, a) for s, a, _ in self.entries)

    def max_value(self) -> Fraction:
        return max(self.entries.values(), default=Fraction(0))

    def validate(self, m: Mdp) -> None:
        """全てのキーが確率正の遷移を指すことを検証する"""
        for s, a, t in self.entries:
            if not 0 <= s < m.num_states or not 0 <= a < len(m.actions[s]):
                raise InvalidModelError(f"報酬 {self.name}: 存在しない行動 ({s}, {a})")
            if m.probability(s, a, t) == 0:
                raise InvalidModelError(
                    f"報酬 {self.name}: 遷移 {m.states[s]}/{m.actions[s][a]} -> {t} は確率0です"
                )


class Relation(Enum):
    AT_LEAST = ">="
    AT_MOST = "<="

    @classmethod
    def parse(cls, text: str) -> "Relation":
        for member in cls:
            if member.value == text:
                return member
        raise InvalidModelError(f"不明な比較関係です: {text}")


@dataclass(frozen=True)
class Objective:
    reward: RewardStructure
    relation: Relation
    goal: FrozenSet[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "goal", frozenset(self.goal))

    @property
    def maximizing(self) -> bool:
        return self.relation is Relation.AT_LEAST

    @property
    def is_total_reward(self) -> bool:
        return not self.goal

    def meets(self, value: Extended, threshold: Extended) -> bool:
        """value が閾値を満たすか (∞ を含む厳密比較)"""
        if self.maximizing:
            return value >= threshold
        return value <= threshold


@dataclass(frozen=True)
class Query:
    """ℓ 個の目的の順序付き組"""
    objectives: Tuple[Objective, ...]

    def __post_init__(self):
        objectives = tuple(self.objectives)
        if not objectives:
            raise InvalidModelError("クエリには少なくとも1つの目的が必要です")
        object.__setattr__(self, "objectives", objectives)

    @property
    def dimension(self) -> int:
        return len(self.objectives)

    def __iter__(self):
        return iter(self.objectives)

    def __getitem__(self, j: int) -> Objective:
        return self.objectives[j]

    def check_point(self, p: Sequence[Extended]) -> None:
        if len(p) != self.dimension:
            raise DimensionMismatchError(f"点の次元 {len(p)} がクエリの次元 {self.dimension} と一致しません")

    def validate(self, m: Mdp) -> None:
        for obj in self.objectives:
            obj.reward.validate(m)
            for g in obj.goal:
                if not 0 <= g < m.num_states:
                    raise InvalidModelError(f"ゴール状態 {g} が範囲外です")

    @property
    def minimizing_indices(self) -> Tuple[int, ...]:
        return tuple(j for j, obj in enumerate(self.objectives) if not obj.maximizing)

    @property
    def maximizing_indices(self) -> Tuple[int, ...]:
        return tuple(j for j, obj in enumerate(self.objectives) if obj.maximizing)


def reachability_to_reward(
    m: Mdp, goal: Iterable[int], relation: Relation = Relation.AT_LEAST
) -> Objective:
    """
    到達確率 P(◊G) を期待報酬 E(R^G ◊ G) に変換する

    R^G(s, α, s') = [s' ∈ G]
    """
    goal = frozenset(goal)
    entries = {}
    for s, a in m.pairs():
        for t, _ in m.transitions[s][a]:
            if t in goal:
                entries[(s, a, t)] = Fraction(1)
    return Objective(RewardStructure("reach", entries), relation, goal)


def dominates(q: Query, p: Sequence[Extended], p2: Sequence[Extended]) -> bool:
    """p2 が cl_Q({p}) に含まれるか (各座標で p が p2 を ∼_j の意味で支配する)"""
    q.check_point(p)
    q.check_point(p2)
    for obj, a, b in zip(q.objectives, p, p2):
        if obj.maximizing and not a >= b:
            return False
        if not obj.maximizing and not a <= b:
            return False
    return True


def finite_point(p: Sequence[Extended]) -> bool:
    return not any(is_infinite(v) for v in p)


def project_objective(obj: Objective, source: Mdp, target: Mdp) -> Objective:
    """
    状態名・行動ラベルで対応付けて目的を target 上へ写す

    target の状態・行動は source に同名で存在する必要がある (部分MDPなど)。
    """
    entries = {}
    for s, a in target.pairs():
        src_s = source.state_index(target.states[s])
        src_a = source.action_index(src_s, target.actions[s][a])
        for t, _ in target.transitions[s][a]:
            value = obj.reward.reward(src_s, src_a, source.state_index(target.states[t]))
            if value:
                entries[(s, a, t)] = value
    goal = frozenset(
        i for i, name in enumerate(target.states) if source.state_index(name) in obj.goal
    )
    return Objective(RewardStructure(obj.reward.name, entries), obj.relation, goal)


def project_query(q: Query, source: Mdp, target: Mdp) -> Query:
    return Query(tuple(project_objective(obj, source, target) for obj in q.objectives))
