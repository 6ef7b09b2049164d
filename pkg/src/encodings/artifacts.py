"""
エンコーディングの成果物

MILP モデル本体と、論理変数 (a_{s,α}, x_s^j など) からモデル変数インデックスへの対応表をまとめて保持する。
変数名は LP 出力時の命名規則 (a_<s>_<α>, x_<s>_<j>, ...) に従う。
"""
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Sequence, Tuple

from src.analysis.bounds import Bounds
from src.analysis.state_sets import ObjectiveStateSets
from src.core.exceptions import InfinitePointError
from src.core.mdp import Mdp, Pair
from src.core.numbers import Extended, is_infinite
from src.core.objectives import Query
from src.milp.model import MilpModel, Sense

BASE = "base"
FLOW = "flow"

StateObj = Tuple[int, int]
PairObj = Tuple[int, int, int]


@dataclass
class EncodingArtifacts:
    """
    エンコーディング済みの MILP と変数対応表

    base フレーバーでは x_vars は S?^j の全状態を持ち、値は ±E (最小化目的は符号反転)。
    flow フレーバーでは x_vars は初期状態のみを持ち、値は E そのもの。
    flow フレーバーの EC 変数は目的に依存しないため、キーの j を None とする。
    """
    model: MilpModel
    mdp: Mdp
    query: Query
    point: Optional[Tuple[Extended, ...]]
    flavor: str
    sets: Tuple[ObjectiveStateSets, ...]
    bounds: Bounds
    a_vars: Dict[Pair, int] = field(default_factory=dict)
    x_vars: Dict[StateObj, int] = field(default_factory=dict)
    xa_vars: Dict[PairObj, int] = field(default_factory=dict)
    flow_vars: Dict[Pair, int] = field(default_factory=dict)
    fec_vars: Dict[int, int] = field(default_factory=dict)
    e_vars: Dict[Tuple[int, Optional[int]], int] = field(default_factory=dict)
    ea_vars: Dict[Tuple[int, int, Optional[int]], int] = field(default_factory=dict)
    fe_vars: Dict[Tuple[int, int, Optional[int]], int] = field(default_factory=dict)
    fb_vars: Dict[Tuple[int, Optional[int]], int] = field(default_factory=dict)
    b_vars: Dict[int, int] = field(default_factory=dict)
    w_vars: Dict[StateObj, int] = field(default_factory=dict)
    wa_vars: Dict[PairObj, int] = field(default_factory=dict)
    eps: Optional[int] = None
    conservation_rows: Dict[int, int] = field(default_factory=dict)
    outflow_row: Optional[int] = None

    @property
    def maximizing(self) -> Tuple[bool, ...]:
        return tuple(obj.maximizing for obj in self.query.objectives)

    def value_var(self, j: int) -> Optional[int]:
        """初期状態における目的 j の値変数 (S0^j に属し値が定数0の場合は None)"""
        return self.x_vars.get((self.mdp.initial, j))

    def gain_terms(self, j: int) -> Dict[int, Fraction]:
        """
        利得 (最大化目的は値、最小化目的は値の符号反転) を表す線形式

        パレート近似は全ての目的を利得空間で最大化として扱う。
        """
        var = self.value_var(j)
        if var is None:
            return {}
        if self.flavor == BASE or self.query[j].maximizing:
            return {var: Fraction(1)}
        return {var: Fraction(-1)}

    def core_variable_count(self) -> int:
        """行動選択・値・フロー変数の数 (EC 検出と無限報酬用の変数を除く)"""
        return len(self.a_vars) + len(self.x_vars) + len(self.xa_vars) + len(self.flow_vars)

    def summary(self) -> Dict[str, int]:
        return {
            "variables": self.model.num_variables,
            "binaries": self.model.num_binaries,
            "constraints": self.model.num_constraints,
            "core_variables": self.core_variable_count(),
        }


def require_finite(p: Optional[Sequence[Extended]]) -> None:
    if p is not None and any(is_infinite(v) for v in p):
        raise InfinitePointError(f"閾値に ∞ を含む点 {tuple(p)} はエンコードできません")


def fresh_name(model: MilpModel, name: str) -> str:
    """モデル内で重複しない変数名 (衝突時は '#k' を付ける)"""
    candidate = name
    k = 1
    while model.has_variable(candidate):
        candidate = f"{name}#{k}"
        k += 1
    return candidate


def pair_name(m: Mdp, prefix: str, s: int, a: int, j: Optional[int] = None) -> str:
    name = f"{prefix}_{m.states[s]}_{m.actions[s][a]}"
    return name if j is None else f"{name}_{j}"


def state_name(m: Mdp, prefix: str, s: int, j: Optional[int] = None) -> str:
    name = f"{prefix}_{m.states[s]}"
    return name if j is None else f"{name}_{j}"


def add_action_selection(model: MilpModel, m: Mdp) -> Dict[Pair, int]:
    """a_{s,α} ∈ {0,1} と Σ_α a_{s,α} = 1 (全状態)"""
    a_vars: Dict[Pair, int] = {}
    for s in range(m.num_states):
        row = {}
        for a in range(len(m.actions[s])):
            var = model.add_binary(fresh_name(model, pair_name(m, "a", s, a)))
            a_vars[(s, a)] = var
            row[var] = 1
        model.add_constraint(row, Sense.EQ, 1, f"select_{m.states[s]}")
    return a_vars
