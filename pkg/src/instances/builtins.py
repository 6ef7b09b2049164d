"""
組み込みの例題モデル

- fig1: 2つの到達確率目的を持つ6状態のMDP (ゴール集合 {s4, s6} と {s3})
- fig5a: β に報酬1を持つ2状態の多重連鎖MDP
- fig5b: 有限メモリの戦略が必要な4状態のMDP
"""
import copy
from typing import Any, Dict, Tuple

from src.core.exceptions import UnknownNameError
from src.core.mdp import Mdp
from src.core.objectives import Query
from src.parsers.model_parser import ModelFile, ModelParser

_FIG1: Dict[str, Any] = {
    "states": ["s1", "s2", "s3", "s4", "s5", "s6"],
    "initial": "s1",
    "actions": {
        "s1": ["alpha", "beta"],
        "s2": ["gamma", "delta"],
        "s3": ["loop"],
        "s4": ["tau"],
        "s5": ["loop"],
        "s6": ["tau"],
    },
    "transitions": {
        "s1": {"alpha": {"s2": "1"}, "beta": {"s5": "3/10", "s4": "7/10"}},
        "s2": {"gamma": {"s6": "1"}, "delta": {"s3": "1"}},
        "s3": {"loop": {"s3": "1"}},
        "s4": {"tau": {"s3": "1"}},
        "s5": {"loop": {"s5": "1"}},
        "s6": {"tau": {"s2": "4/5", "s5": "1/5"}},
    },
    "queries": {
        "q0": [
            {"reward": "reach", "relation": ">=", "goal": ["s4", "s6"]},
            {"reward": "reach", "relation": ">=", "goal": ["s3"]},
        ],
    },
    "points": {"q0": [["7/10", "7/10"], ["0", "1"], ["1", "0"], ["1/2", "9/10"], ["1", "4/5"]]},
}

_FIG5A: Dict[str, Any] = {
    "states": ["s0", "s1"],
    "initial": "s0",
    "actions": {"s0": ["alpha", "beta"], "s1": ["loop"]},
    "transitions": {
        "s0": {"alpha": {"s0": "1"}, "beta": {"s1": "1"}},
        "s1": {"loop": {"s1": "1"}},
    },
    "rewards": {"r": {"s0": {"beta": {"s1": "1"}}}},
    "queries": {
        "min": [{"reward": "r", "relation": "<=", "goal": ["s1"]}],
        "max": [{"reward": "r", "relation": ">=", "goal": ["s1"]}],
    },
    "points": {"min": [["0"]], "max": [["1"]]},
}

_FIG5B: Dict[str, Any] = {
    "states": ["s1", "s2", "s3", "s4"],
    "initial": "s1",
    "actions": {"s1": ["tau"], "s2": ["alpha", "beta"], "s3": ["loop"], "s4": ["loop"]},
    "transitions": {
        "s1": {"tau": {"s2": "1/2", "s1": "1/2"}},
        "s2": {"alpha": {"s3": "1"}, "beta": {"s4": "1"}},
        "s3": {"loop": {"s3": "1"}},
        "s4": {"loop": {"s4": "1"}},
    },
    "queries": {
        "q0": [
            {"reward": "reach", "relation": ">=", "goal": ["s3"]},
            {"reward": "reach", "relation": ">=", "goal": ["s4"]},
        ],
    },
    "points": {"q0": [["1/2", "1/2"], ["1", "0"], ["0", "1"]]},
}

BUILTINS: Dict[str, Dict[str, Any]] = {"fig1": _FIG1, "fig5a": _FIG5A, "fig5b": _FIG5B}
DEFAULT_QUERY = {"fig1": "q0", "fig5a": "min", "fig5b": "q0"}


def builtin_model_file(name: str) -> ModelFile:
    """組み込みモデルをモデルファイルとして返す"""
    if name not in BUILTINS:
        raise UnknownNameError(f"組み込みモデル {name} はありません (定義済み: {sorted(BUILTINS)})")
    return ModelParser().parse_dict(copy.deepcopy(BUILTINS[name]))


def builtin(name: str) -> Tuple[Mdp, Query]:
    """
    組み込みモデルと既定のクエリ

    Raises:
        UnknownNameError: 未定義の名前
    """
    model_file = builtin_model_file(name)
    return model_file.mdp, model_file.query(DEFAULT_QUERY[name])
