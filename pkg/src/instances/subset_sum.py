"""
部分和問題からの帰着で作るインスタンス

状態 sI から確率 a_i/Σa で s_i へ移り、s_i で Y (g1 へ) か N (g2 へ) を選ぶ。
純粋定常戦略で点 (z/Σa, 1 - z/Σa) を達成できるのは、和が z となる部分集合がある場合に限る。
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Tuple

from src.core.exceptions import InvalidModelError
from src.core.mdp import Mdp
from src.core.objectives import Point, Query, reachability_to_reward

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SubsetSumInstance:
    weights: Tuple[int, ...]
    target: int

    def __post_init__(self):
        weights = tuple(int(a) for a in self.weights)
        object.__setattr__(self, "weights", weights)
        if not weights:
            raise InvalidModelError("部分和インスタンスには1つ以上の重みが必要です")
        if any(a < 1 for a in weights):
            raise InvalidModelError(f"重みは1以上である必要があります: {weights}")
        if not 0 <= self.target <= sum(weights):
            raise InvalidModelError(f"目標値 {self.target} は 0 以上 {sum(weights)} 以下である必要があります")

    @property
    def n(self) -> int:
        return len(self.weights)


def gen_subset_sum(inst: SubsetSumInstance) -> Tuple[Mdp, Query, Point]:
    """インスタンスから (MDP, 2つの到達確率目的, 点) を作る"""
    total = sum(inst.weights)
    items = [f"s{i + 1}" for i in range(inst.n)]
    transitions = {
        "sI": {"alpha": {s: Fraction(a, total) for s, a in zip(items, inst.weights)}},
        "g1": {"loop": {"g1": 1}},
        "g2": {"loop": {"g2": 1}},
    }
    for s in items:
        transitions[s] = {"Y": {"g1": 1}, "N": {"g2": 1}}
    states = ["sI"] + items + ["g1", "g2"]
    mdp = Mdp.from_dict(states, transitions, "sI")
    g1, g2 = mdp.state_index("g1"), mdp.state_index("g2")
    query = Query((reachability_to_reward(mdp, {g1}), reachability_to_reward(mdp, {g2})))
    z = Fraction(inst.target, total)
    logger.debug(f"Subset sum instance with n={inst.n}, total={total}, target={inst.target}")
    return mdp, query, (z, 1 - z)


def subset_sum_exists(weights: Sequence[int], target: int) -> bool:
    """動的計画法による部分和の判定"""
    reachable = {0}
    for a in weights:
        reachable |= {v + a for v in reachable if v + a <= target}
    return target in reachable
