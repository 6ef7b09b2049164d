"""
JSONモデルファイルの読み書き

形式:
    {
      "states": ["s0", "s1"],
      "initial": "s0",
      "actions": {"s0": ["a", "b"], "s1": ["loop"]},          (省略可)
      "transitions": {"s0": {"a": {"s0": "1"}, "b": {"s1": "1"}}, "s1": {"loop": {"s1": "1"}}},
      "rewards": {"cost": {"s0": {"b": {"s1": "1"}}}},          (省略可)
      "queries": {"q0": [{"reward": "cost", "relation": "<=", "goal": ["s1"]}]},
      "points": {"q0": [["0"]]}                                  (省略可)
    }

確率・報酬は "7/10" または "0.7" のような文字列 (数値も可) で厳密に解釈する。
reward に "reach" を指定するとゴール集合への到達確率を表す。
"""
import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Tuple

from src.core.exceptions import InvalidModelError, ModelFormatError, UnknownNameError
from src.core.mdp import Mdp
from src.core.numbers import format_rational, parse_extended, parse_rational
from src.core.objectives import Objective, Point, Query, Relation, RewardStructure, reachability_to_reward
from src.parsers.base_parser import BaseParser

REACH = "reach"

_TOP_LEVEL_KEYS = {"states", "initial", "actions", "transitions", "rewards", "queries", "points"}
_OBJECTIVE_KEYS = {"reward", "relation", "goal"}


@dataclass
class ModelFile:
    """モデルファイルの内容 (MDP、名前付き報酬、クエリ、点)"""
    mdp: Mdp
    rewards: Dict[str, RewardStructure] = field(default_factory=dict)
    queries: Dict[str, Query] = field(default_factory=dict)
    points: Dict[str, List[Point]] = field(default_factory=dict)

    def query(self, query_id: str) -> Query:
        if query_id not in self.queries:
            raise UnknownNameError(f"クエリ {query_id} は定義されていません (定義済み: {sorted(self.queries)})")
        return self.queries[query_id]

    def to_dict(self) -> Dict[str, Any]:
        """JSON互換の辞書へ変換する"""
        m = self.mdp
        doc: Dict[str, Any] = {
            "states": list(m.states),
            "initial": m.states[m.initial],
            "actions": {m.states[s]: list(m.actions[s]) for s in range(m.num_states)},
            "transitions": {
                m.states[s]: {
                    m.actions[s][a]: {m.states[t]: format_rational(p) for t, p in m.transitions[s][a]}
                    for a in range(len(m.actions[s]))
                }
                for s in range(m.num_states)
            },
        }
        if self.rewards:
            doc["rewards"] = {name: _reward_to_dict(m, r) for name, r in self.rewards.items()}
        if self.queries:
            doc["queries"] = {
                qid: [_objective_to_dict(m, obj) for obj in q.objectives] for qid, q in self.queries.items()
            }
        if self.points:
            doc["points"] = {
                qid: [[format_rational(v) for v in p] for p in pts] for qid, pts in self.points.items()
            }
        return doc

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)


def _reward_to_dict(m: Mdp, reward: RewardStructure) -> Dict[str, Any]:
    out: Dict[str, Dict[str, Dict[str, str]]] = {}
    for (s, a, t), value in sorted(reward.entries.items()):
        out.setdefault(m.states[s], {}).setdefault(m.actions[s][a], {})[m.states[t]] = format_rational(value)
    return out


def _objective_to_dict(m: Mdp, obj: Objective) -> Dict[str, Any]:
    return {
        "reward": obj.reward.name,
        "relation": obj.relation.value,
        "goal": [m.states[g] for g in sorted(obj.goal)],
    }


class ModelParser(BaseParser):
    """JSONモデルファイルのパーサー"""

    def parse_text(self, text: str, source: str = "<string>") -> ModelFile:
        doc = self.loads_json(text, source)
        try:
            return self.parse_dict(doc)
        except (ModelFormatError, InvalidModelError) as e:
            self.logger.error(f"Invalid model file {source}: {e}")
            raise

    def parse_dict(self, doc: Mapping[str, Any]) -> ModelFile:
        if not isinstance(doc, Mapping):
            raise ModelFormatError("モデルファイルのトップレベルはオブジェクトである必要があります")
        unknown = set(doc) - _TOP_LEVEL_KEYS
        if unknown:
            raise ModelFormatError(f"未知のフィールドがあります: {sorted(unknown)}")
        for key in ("states", "initial", "transitions"):
            if key not in doc:
                raise ModelFormatError(f"必須フィールド {key} がありません")

        states = [str(s) for s in doc["states"]]
        transitions = doc["transitions"]
        if not isinstance(transitions, Mapping):
            raise ModelFormatError("transitions はオブジェクトである必要があります")
        extra = set(transitions) - set(states)
        if extra:
            raise ModelFormatError(f"transitions に未定義の状態があります: {sorted(extra)}")
        transitions = self._order_actions(states, transitions, doc.get("actions"))
        mdp = Mdp.from_dict(states, transitions, str(doc["initial"]))

        rewards = {
            name: self._parse_reward(mdp, name, entries) for name, entries in doc.get("rewards", {}).items()
        }
        if REACH in rewards:
            raise ModelFormatError(f"報酬名 {REACH} は予約されています")

        queries = {
            qid: Query(tuple(self._parse_objective(mdp, rewards, qid, o) for o in objectives))
            for qid, objectives in doc.get("queries", {}).items()
        }

        points: Dict[str, List[Point]] = {}
        for qid, pts in doc.get("points", {}).items():
            if qid not in queries:
                raise ModelFormatError(f"points が未定義のクエリ {qid} を参照しています")
            parsed = []
            for p in pts:
                point = tuple(parse_extended(v) for v in p)
                queries[qid].check_point(point)
                parsed.append(point)
            points[qid] = parsed

        self.logger.debug(
            f"Parsed model with {mdp.num_states} states, {mdp.num_pairs} actions, {len(queries)} queries"
        )
        return ModelFile(mdp, rewards, queries, points)

    @staticmethod
    def _order_actions(states, transitions, actions) -> Dict[str, Dict[str, Any]]:
        if actions is None:
            return {s: dict(transitions.get(s, {})) for s in states}
        ordered = {}
        for s in states:
            labels = [str(a) for a in actions.get(s, [])]
            given = transitions.get(s, {})
            if set(labels) != set(given):
                raise ModelFormatError(f"状態 {s}: actions と transitions の行動が一致しません")
            ordered[s] = {label: given[label] for label in labels}
        return ordered

    @staticmethod
    def _parse_reward(mdp: Mdp, name: str, entries: Mapping[str, Any]) -> RewardStructure:
        values = {}
        for s_name, per_action in entries.items():
            s = mdp.state_index(s_name)
            for label, per_succ in per_action.items():
                a = mdp.action_index(s, label)
                for t_name, value in per_succ.items():
                    values[(s, a, mdp.state_index(t_name))] = parse_rational(value)
        reward = RewardStructure(str(name), values)
        reward.validate(mdp)
        return reward

    @staticmethod
    def _parse_objective(mdp: Mdp, rewards: Mapping[str, RewardStructure], qid: str, o: Mapping[str, Any]) -> Objective:
        if not isinstance(o, Mapping):
            raise ModelFormatError(f"クエリ {qid}: 目的はオブジェクトである必要があります")
        unknown = set(o) - _OBJECTIVE_KEYS
        if unknown:
            raise ModelFormatError(f"クエリ {qid}: 未知のフィールド {sorted(unknown)}")
        relation = Relation.parse(str(o.get("relation", ">=")))
        goal = frozenset(mdp.state_index(g) for g in o.get("goal", []))
        reward_name = o.get("reward")
        if reward_name == REACH:
            return reachability_to_reward(mdp, goal, relation)
        if reward_name not in rewards:
            raise ModelFormatError(f"クエリ {qid}: 未定義の報酬 {reward_name}")
        return Objective(rewards[reward_name], relation, goal)


def load_model(file_path: str) -> ModelFile:
    return ModelParser().parse(file_path)


def model_file_from_query(mdp: Mdp, query: Query, query_id: str = "q0") -> ModelFile:
    """生成器の出力 (MDP, クエリ) をモデルファイルにまとめる"""
    rewards = {}
    for obj in query.objectives:
        if obj.reward.name != REACH:
            rewards[obj.reward.name] = obj.reward
    return ModelFile(mdp, rewards, {query_id: query})


def point_from_text(text: str) -> Tuple:
    """"7/10,0.7" 形式の点を解釈する"""
    return tuple(parse_extended(v) for v in text.split(",") if v.strip())
