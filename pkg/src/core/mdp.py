"""
MDP ドメインモデル

状態・行動はインデックスで扱い、名前(ラベル)は入出力と
モデル間の対応付けにのみ使用する。確率は全て Fraction で保持する。
"""
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Set, Tuple

import networkx as nx

from src.core.exceptions import InvalidModelError, NotClosedError, StartOutsideError
from src.core.numbers import parse_rational

Distribution = Tuple[Tuple[int, Fraction], ...]
Pair = Tuple[int, int]


@dataclass(frozen=True)
class Mdp:
    """
    有限状態MDP

    Attributes:
        states: 状態名 (インデックス順)
        actions: 状態ごとの有効行動ラベル
        transitions: transitions[s][a] = ((後続状態, 確率), ...) 後続状態の昇順
        initial: 初期状態のインデックス
    """
    states: Tuple[str, ...]
    actions: Tuple[Tuple[str, ...], ...]
    transitions: Tuple[Tuple[Distribution, ...], ...]
    initial: int

    _state_index: Dict[str, int] = field(init=False, repr=False, compare=False)
    _action_index: Tuple[Dict[str, int], ...] = field(init=False, repr=False, compare=False)
    _predecessors: Tuple[Tuple[Tuple[int, int, Fraction], ...], ...] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self):
        states = tuple(str(s) for s in self.states)
        n = len(states)
        if n == 0:
            raise InvalidModelError("状態が1つも定義されていません")
        if len(set(states)) != n:
            raise InvalidModelError("状態名が重複しています")
        if len(self.actions) != n or len(self.transitions) != n:
            raise InvalidModelError("actions / transitions の長さが状態数と一致しません")
        if not 0 <= self.initial < n:
            raise InvalidModelError(f"初期状態のインデックスが範囲外です: {self.initial}")

        actions = []
        transitions = []
        for s in range(n):
            labels = tuple(str(a) for a in self.actions[s])
            if not labels:
                raise InvalidModelError(f"状態 {states[s]} に有効な行動がありません")
            if len(set(labels)) != len(labels):
                raise InvalidModelError(f"状態 {states[s]} の行動ラベルが重複しています")
            if len(self.transitions[s]) != len(labels):
                raise InvalidModelError(f"状態 {states[s]} の遷移数が行動数と一致しません")
            dists = []
            for a, dist in enumerate(self.transitions[s]):
                dists.append(self._normalize_distribution(states, s, labels[a], dist))
            actions.append(labels)
            transitions.append(tuple(dists))

        object.__setattr__(self, "states", states)
        object.__setattr__(self, "actions", tuple(actions))
        object.__setattr__(self, "transitions", tuple(transitions))
        object.__setattr__(self, "_state_index", {name: i for i, name in enumerate(states)})
        object.__setattr__(
            self, "_action_index", tuple({lab: a for a, lab in enumerate(labs)} for labs in actions)
        )
        preds: List[List[Tuple[int, int, Fraction]]] = [[] for _ in range(n)]
        for s in range(n):
            for a, dist in enumerate(transitions[s]):
                for t, p in dist:
                    preds[t].append((s, a, p))
        object.__setattr__(self, "_predecessors", tuple(tuple(p) for p in preds))

    @staticmethod
    def _normalize_distribution(states, s: int, label: str, dist) -> Distribution:
        n = len(states)
        merged: Dict[int, Fraction] = {}
        for t, p in dist:
            t = int(t)
            if not 0 <= t < n:
                raise InvalidModelError(f"{states[s]}/{label}: 存在しない後続状態 {t}")
            p = Fraction(p)
            if p <= 0 or p > 1:
                raise InvalidModelError(f"{states[s]}/{label}: 確率 {p} が (0, 1] の範囲外です")
            if t in merged:
                raise InvalidModelError(f"{states[s]}/{label}: 後続状態 {states[t]} が重複しています")
            merged[t] = p
        if not merged:
            raise InvalidModelError(f"{states[s]}/{label}: 遷移先がありません")
        total = sum(merged.values())
        if total != 1:
            raise InvalidModelError(f"{states[s]}/{label}: 確率の総和が {total} です (1 である必要があります)")
        return tuple(sorted(merged.items()))

    @classmethod
    def from_dict(
        cls,
        states: Iterable[str],
        transitions: Mapping[str, Mapping[str, Mapping[str, object]]],
        initial: str,
    ) -> "Mdp":
        """
        名前ベースの辞書からMDPを構築する

        Args:
            states: 状態名の並び (この順序がインデックスになる)
            transitions: {状態: {行動: {後続状態: 確率}}}。確率は "7/10" / "0.7" / Fraction
            initial: 初期状態名
        """
        states = list(states)
        index = {name: i for i, name in enumerate(states)}
        if initial not in index:
            raise InvalidModelError(f"初期状態 {initial} が状態集合にありません")
        actions = []
        dists = []
        for name in states:
            per_state = transitions.get(name, {})
            actions.append(tuple(per_state.keys()))
            row = []
            for label, succ in per_state.items():
                dist = []
                for succ_name, prob in succ.items():
                    if succ_name not in index:
                        raise InvalidModelError(f"{name}/{label}: 未定義の後続状態 {succ_name}")
                    dist.append((index[succ_name], parse_rational(prob)))
                row.append(tuple(dist))
            dists.append(tuple(row))
        return cls(tuple(states), tuple(actions), tuple(dists), index[initial])

    @property
    def num_states(self) -> int:
        return len(self.states)

    @property
    def num_pairs(self) -> int:
        return sum(len(a) for a in self.actions)

    def state_index(self, name: str) -> int:
        try:
            return self._state_index[name]
        except KeyError:
            raise InvalidModelError(f"未定義の状態です: {name}") from None

    def action_index(self, s: int, label: str) -> int:
        try:
            return self._action_index[s][label]
        except KeyError:
            raise InvalidModelError(f"状態 {self.states[s]} に行動 {label} はありません") from None

    def has_action(self, s: int, label: str) -> bool:
        return label in self._action_index[s]

    def successors(self, s: int, a: int) -> Distribution:
        return self.transitions[s][a]

    def probability(self, s: int, a: int, t: int) -> Fraction:
        for succ, p in self.transitions[s][a]:
            if succ == t:
                return p
        return Fraction(0)

    def pairs(self) -> Iterator[Pair]:
        """全ての (状態, 行動) ペアをインデックス順に列挙する"""
        for s in range(self.num_states):
            for a in range(len(self.actions[s])):
                yield (s, a)

    def predecessors(self, t: int) -> Tuple[Tuple[int, int, Fraction], ...]:
        """t に確率正で遷移する (s, a, P(s,a,t)) の一覧"""
        return self._predecessors[t]

    def graph(self, pairs: Optional[Iterable[Pair]] = None) -> nx.DiGraph:
        """状態遷移グラフ (pairs 指定時はその行動のみ) を構築する"""
        g = nx.DiGraph()
        g.add_nodes_from(range(self.num_states))
        for s, a in (self.pairs() if pairs is None else pairs):
            for t, _ in self.transitions[s][a]:
                g.add_edge(s, t)
        return g

    def reachable_states(
        self, start: Optional[Iterable[int]] = None, pairs: Optional[Iterable[Pair]] = None
    ) -> FrozenSet[int]:
        """start (既定: 初期状態) から到達可能な状態集合"""
        sources = [self.initial] if start is None else list(start)
        g = self.graph(pairs)
        result: Set[int] = set(sources)
        for s in sources:
            result |= nx.descendants(g, s)
        return frozenset(result)

    def is_closed(self, pairs: Iterable[Pair]) -> bool:
        pairs = set(pairs)
        covered = {s for s, _ in pairs}
        return all(t in covered for s, a in pairs for t, _ in self.transitions[s][a])


def sub_mdp(m: Mdp, pairs: Iterable[Pair], start: int) -> Mdp:
    """
    ペア集合 E と開始状態 s に対する部分MDP M↓(E, s) を返す

    状態はペア集合が覆う状態 (元の順序)、各状態の行動は E に含まれるものに限る。
    状態名・行動ラベルは保持されるため、元モデルへの対応付けは名前で行える。

    Raises:
        NotClosedError: 行動が無効、または後続状態が E の外に出る
        StartOutsideError: start が E に覆われていない
    """
    pairs = set(pairs)
    for s, a in pairs:
        if not 0 <= s < m.num_states or not 0 <= a < len(m.actions[s]):
            raise NotClosedError(f"ペア ({s}, {a}) はMDPに存在しません")
    covered = sorted({s for s, _ in pairs})
    covered_set = set(covered)
    for s, a in sorted(pairs):
        for t, _ in m.transitions[s][a]:
            if t not in covered_set:
                raise NotClosedError(
                    f"{m.states[s]}/{m.actions[s][a]} の後続状態 {m.states[t]} がペア集合の外にあります"
                )
    if start not in covered_set:
        raise StartOutsideError(f"開始状態 {m.states[start]} がペア集合に含まれていません")

    new_index = {s: i for i, s in enumerate(covered)}
    actions = []
    transitions = []
    for s in covered:
        kept = [a for a in range(len(m.actions[s])) if (s, a) in pairs]
        actions.append(tuple(m.actions[s][a] for a in kept))
        transitions.append(
            tuple(tuple((new_index[t], p) for t, p in m.transitions[s][a]) for a in kept)
        )
    return Mdp(
        tuple(m.states[s] for s in covered),
        tuple(actions),
        tuple(transitions),
        new_index[start],
    )


def all_pairs(m: Mdp) -> FrozenSet[Pair]:
    return frozenset(m.pairs())
