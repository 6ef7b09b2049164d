"""
純粋定常戦略と誘導マルコフ連鎖
"""
from dataclasses import dataclass
from typing import Dict, Mapping, Tuple

from src.core.exceptions import InvalidStrategyError
from src.core.mdp import Mdp


@dataclass(frozen=True)
class PureStationaryStrategy:
    """各状態に行動インデックスを1つ割り当てる全域写像"""
    choices: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "choices", tuple(int(c) for c in self.choices))

    def action(self, s: int) -> int:
        return self.choices[s]

    def validate(self, m: Mdp) -> None:
        if len(self.choices) != m.num_states:
            raise InvalidStrategyError(
                f"戦略の長さ {len(self.choices)} が状態数 {m.num_states} と一致しません"
            )
        for s, a in enumerate(self.choices):
            if not 0 <= a < len(m.actions[s]):
                raise InvalidStrategyError(f"状態 {m.states[s]} で行動 {a} は有効ではありません")

    def pairs(self) -> Tuple[Tuple[int, int], ...]:
        return tuple(enumerate(self.choices))

    @classmethod
    def from_labels(cls, m: Mdp, mapping: Mapping[str, str], default_lowest: bool = False) -> "PureStationaryStrategy":
        """
        {状態名: 行動ラベル} から戦略を作る

        default_lowest が True の場合、未指定の状態にはインデックス最小の行動を割り当てる。
        """
        choices = []
        for s, name in enumerate(m.states):
            if name not in mapping:
                if default_lowest:
                    choices.append(0)
                    continue
                raise InvalidStrategyError(f"状態 {name} の行動が指定されていません")
            label = mapping[name]
            if not m.has_action(s, label):
                raise InvalidStrategyError(f"状態 {name} で行動 {label} は有効ではありません")
            choices.append(m.action_index(s, label))
        unknown = set(mapping) - set(m.states)
        if unknown:
            raise InvalidStrategyError(f"未定義の状態が指定されています: {sorted(unknown)}")
        return cls(tuple(choices))

    def to_labels(self, m: Mdp) -> Dict[str, str]:
        return {m.states[s]: m.actions[s][a] for s, a in enumerate(self.choices)}


@dataclass(frozen=True)
class InducedChain:
    """
    戦略 σ が誘導するマルコフ連鎖 M^σ

    chain は初期状態から到達可能な状態のみを持ち、各状態の行動は1つ。
    state_map[i] は chain の状態 i に対応する元MDPの状態。
    """
    chain: Mdp
    state_map: Tuple[int, ...]
    strategy: PureStationaryStrategy

    def original_action(self, i: int) -> int:
        return self.strategy.action(self.state_map[i])


def induce_chain(m: Mdp, sigma: PureStationaryStrategy) -> InducedChain:
    """M↓(E^σ, s_I) を到達可能部分に制限した誘導連鎖を構築する"""
    sigma.validate(m)
    reachable = sorted(m.reachable_states(pairs=sigma.pairs()))
    index = {s: i for i, s in enumerate(reachable)}
    actions = []
    transitions = []
    for s in reachable:
        a = sigma.action(s)
        actions.append((m.actions[s][a],))
        transitions.append((tuple((index[t], p) for t, p in m.transitions[s][a]),))
    chain = Mdp(
        tuple(m.states[s] for s in reachable),
        tuple(actions),
        tuple(transitions),
        index[m.initial],
    )
    return InducedChain(chain, tuple(reachable), sigma)
