"""
ゴール付き目的から総報酬目的への変換
"""
import logging
from dataclasses import dataclass
from typing import FrozenSet, Optional

from src.analysis.end_components import make_absorbing
from src.core.mdp import Mdp
from src.core.objectives import Objective, Query, RewardStructure

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TotalRewardConversion:
    """
    変換後のモデルと総報酬クエリ

    状態インデックスは元のモデルと同じ。ゴール状態を吸収的にした場合は
    その状態の行動が先頭ラベルの1つだけになる。
    """
    mdp: Mdp
    query: Query
    rule: str


def is_closed_goal(m: Mdp, goal: FrozenSet[int]) -> bool:
    """ゴール集合から出られないか (全行動の後続がゴール内)"""
    return all(t in goal for s in goal for dist in m.transitions[s] for t, _ in dist)


def _without_goal_rewards(obj: Objective, goal: FrozenSet[int]) -> Objective:
    entries = {key: value for key, value in obj.reward.entries.items() if key[0] not in goal}
    return Objective(RewardStructure(obj.reward.name, entries), obj.relation)


def convert_to_total_reward(q: Query, m: Mdp) -> Optional[TotalRewardConversion]:
    """
    同値な総報酬クエリへの変換 (十分条件が成り立たない場合は None)

    - 全てのゴールが空: そのまま
    - 各ゴールが空か閉集合: ゴールからの遷移の報酬を0にしてゴールを外す
    - 全てのゴールが等しい: ゴールを吸収的にし、ゴールからの報酬を除いてゴールを外す
    """
    goals = [obj.goal for obj in q.objectives]
    if all(not g for g in goals):
        return TotalRewardConversion(m, q, "identity")

    if all(not g or is_closed_goal(m, g) for g in goals):
        objectives = tuple(_without_goal_rewards(obj, obj.goal) for obj in q.objectives)
        logger.debug("Goal sets cannot be left; rewards from goal states zeroed")
        return TotalRewardConversion(m, Query(objectives), "closed_goals")

    if all(g == goals[0] for g in goals):
        goal = goals[0]
        absorbing = make_absorbing(m, goal)
        objectives = tuple(_without_goal_rewards(obj, goal) for obj in q.objectives)
        logger.debug(f"Common goal set of {len(goal)} states made absorbing")
        return TotalRewardConversion(absorbing, Query(objectives), "common_goal")

    logger.debug("Goal sets differ and can be left; no total reward conversion")
    return None
