"""
MILP モデル表現

変数は二値 または 有界連続、制約は有理数係数の線形式、目的関数は任意の最大化。
係数は Fraction で保持し、ソルバーに渡す時点でのみ浮動小数点に変換する。
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.config import Config
from src.core.exceptions import InvalidModelError
from src.core.numbers import parse_rational


class VarKind(Enum):
    BINARY = "binary"
    CONTINUOUS = "continuous"


class Sense(Enum):
    LE = "<="
    EQ = "="
    GE = ">="

    @classmethod
    def parse(cls, text: str) -> "Sense":
        aliases = {"<=": cls.LE, "=<": cls.LE, "<": cls.LE, "=": cls.EQ, "==": cls.EQ,
                   ">=": cls.GE, "=>": cls.GE, ">": cls.GE}
        if text not in aliases:
            raise InvalidModelError(f"不明な制約の向きです: {text}")
        return aliases[text]


LinearExpr = Dict[int, Fraction]


@dataclass(frozen=True)
class Variable:
    index: int
    name: str
    kind: VarKind
    lower: Fraction
    upper: Fraction

    @property
    def is_binary(self) -> bool:
        return self.kind is VarKind.BINARY


@dataclass(frozen=True)
class Constraint:
    coeffs: LinearExpr
    sense: Sense
    rhs: Fraction
    name: str


class MilpModel:
    """
    MILP モデル

    目的関数は常に最大化として保持する (None の場合は実行可能性のみ)。
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: List[Variable] = []
        self.constraints: List[Constraint] = []
        self.objective: Optional[LinearExpr] = None
        self._by_name: Dict[str, int] = {}

    # --- 変数 ---

    def _add_variable(self, name: str, kind: VarKind, lower, upper) -> int:
        if name in self._by_name:
            raise InvalidModelError(f"変数名が重複しています: {name}")
        lower = parse_rational(lower)
        upper = parse_rational(upper)
        if lower > upper:
            raise InvalidModelError(f"変数 {name} の下界 {lower} が上界 {upper} を超えています")
        index = len(self.variables)
        self.variables.append(Variable(index, name, kind, lower, upper))
        self._by_name[name] = index
        return index

    def add_binary(self, name: str) -> int:
        return self._add_variable(name, VarKind.BINARY, 0, 1)

    def add_continuous(self, name: str, lower=0, upper=1) -> int:
        return self._add_variable(name, VarKind.CONTINUOUS, lower, upper)

    def set_bounds(self, index: int, lower=None, upper=None) -> None:
        var = self.variables[index]
        new = replace(
            var,
            lower=var.lower if lower is None else parse_rational(lower),
            upper=var.upper if upper is None else parse_rational(upper),
        )
        if new.lower > new.upper:
            raise InvalidModelError(f"変数 {var.name} の下界が上界を超えています")
        self.variables[index] = new

    def index_of(self, name: str) -> int:
        try:
            return self._by_name[name]
        except KeyError:
            raise InvalidModelError(f"未定義の変数です: {name}") from None

    def has_variable(self, name: str) -> bool:
        return name in self._by_name

    # --- 制約・目的 ---

    def add_constraint(self, coeffs: Mapping[int, object], sense: Sense, rhs, name: Optional[str] = None) -> int:
        cleaned: LinearExpr = {}
        for var, coef in coeffs.items():
            if not 0 <= var < len(self.variables):
                raise InvalidModelError(f"制約が未定義の変数 {var} を参照しています")
            coef = parse_rational(coef)
            if coef != 0:
                cleaned[var] = cleaned.get(var, Fraction(0)) + coef
        cleaned = {v: c for v, c in sorted(cleaned.items()) if c != 0}
        index = len(self.constraints)
        self.constraints.append(Constraint(cleaned, sense, parse_rational(rhs), name or f"c{index}"))
        return index

    def add_terms(self, index: int, coeffs: Mapping[int, object]) -> None:
        """既存の制約 index の左辺に項を加える"""
        con = self.constraints[index]
        merged: Dict[int, object] = dict(con.coeffs)
        for var, coef in coeffs.items():
            merged[var] = parse_rational(merged.get(var, 0)) + parse_rational(coef)
        self.constraints.pop(index)
        self.add_constraint(merged, con.sense, con.rhs, con.name)
        self.constraints.insert(index, self.constraints.pop())

    def set_objective(self, coeffs: Optional[Mapping[int, object]]) -> None:
        """最大化する線形式を設定する (None で実行可能性問題)"""
        if coeffs is None:
            self.objective = None
            return
        objective: LinearExpr = {}
        for var, coef in coeffs.items():
            if not 0 <= var < len(self.variables):
                raise InvalidModelError(f"目的関数が未定義の変数 {var} を参照しています")
            coef = parse_rational(coef)
            if coef != 0:
                objective[var] = objective.get(var, Fraction(0)) + coef
        self.objective = dict(sorted(objective.items()))

    def add_to_objective(self, var: int, coef) -> None:
        objective = dict(self.objective or {})
        objective[var] = objective.get(var, Fraction(0)) + parse_rational(coef)
        self.set_objective(objective)

    # --- 情報 ---

    @property
    def num_variables(self) -> int:
        return len(self.variables)

    @property
    def num_binaries(self) -> int:
        return sum(1 for v in self.variables if v.is_binary)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def binary_indices(self) -> Tuple[int, ...]:
        return tuple(v.index for v in self.variables if v.is_binary)

    def copy(self) -> "MilpModel":
        clone = MilpModel(self.name)
        clone.variables = list(self.variables)
        clone.constraints = list(self.constraints)
        clone.objective = None if self.objective is None else dict(self.objective)
        clone._by_name = dict(self._by_name)
        return clone

    def to_arrays(self) -> Tuple[np.ndarray, List[Sense], np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(A, senses, b, c, lower, upper) の浮動小数点表現"""
        n = self.num_variables
        a = np.zeros((self.num_constraints, n))
        rhs = np.zeros(self.num_constraints)
        senses = []
        for i, con in enumerate(self.constraints):
            for var, coef in con.coeffs.items():
                a[i, var] = float(coef)
            rhs[i] = float(con.rhs)
            senses.append(con.sense)
        cost = np.zeros(n)
        for var, coef in (self.objective or {}).items():
            cost[var] = float(coef)
        lower = np.array([float(v.lower) for v in self.variables])
        upper = np.array([float(v.upper) for v in self.variables])
        return a, senses, rhs, cost, lower, upper

    def max_violation(self, values: Sequence[float]) -> float:
        """割当が制約・変数境界に違反する量の最大値 (絶対値)"""
        worst = 0.0
        for var in self.variables:
            x = values[var.index]
            worst = max(worst, float(var.lower) - x, x - float(var.upper))
        for con in self.constraints:
            lhs = sum(float(c) * values[v] for v, c in con.coeffs.items())
            rhs = float(con.rhs)
            if con.sense is Sense.LE:
                worst = max(worst, lhs - rhs)
            elif con.sense is Sense.GE:
                worst = max(worst, rhs - lhs)
            else:
                worst = max(worst, abs(lhs - rhs))
        return worst

    def evaluate_objective(self, values: Sequence[float]) -> float:
        return sum(float(c) * values[v] for v, c in (self.objective or {}).items())

    def __repr__(self) -> str:
        return (
            f"MilpModel({self.name!r}, variables={self.num_variables}, "
            f"binaries={self.num_binaries}, constraints={self.num_constraints})"
        )


def add_strict_epsilon(model: MilpModel, name: str = "eps", upper=1) -> int:
    """
    狭義不等式 a < b を a + ε ≤ b として扱うための変数 ε ∈ [0, upper] を追加し、
    目的関数に +ε を加える

    Returns:
        ε の変数インデックス
    """
    eps = model.add_continuous(name, 0, upper)
    model.add_to_objective(eps, 1)
    return eps


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class MilpSolution:
    """
    ソルバーの判定と割当

    INFEASIBLE の場合 values は空。二値変数は 0.0 / 1.0 に丸められている。
    """
    status: SolveStatus
    values: Tuple[float, ...] = ()
    objective: float = 0.0
    nodes: int = 0
    lp_iterations: int = 0
    max_violation: float = 0.0

    @property
    def is_feasible(self) -> bool:
        return self.status is not SolveStatus.INFEASIBLE

    def value(self, var: int) -> float:
        if not self.is_feasible:
            raise InvalidModelError("実行不能な解には割当がありません")
        return self.values[var]

    def assignment(self, model: MilpModel) -> Dict[str, float]:
        return {var.name: self.values[var.index] for var in model.variables} if self.is_feasible else {}


@dataclass(frozen=True)
class SolverOptions:
    feasibility_tol: float = field(default_factory=lambda: Config.FEASIBILITY_TOL)
    integrality_tol: float = field(default_factory=lambda: Config.INTEGRALITY_TOL)
    node_limit: int = field(default_factory=lambda: Config.NODE_LIMIT)
    time_limit: Optional[float] = field(default_factory=lambda: Config.get_solver_config()["time_limit"])
    lp_iteration_limit: int = field(default_factory=lambda: Config.LP_ITERATION_LIMIT)
    stable: bool = False

    @classmethod
    def from_config(cls) -> "SolverOptions":
        return cls(**Config.get_solver_config())

    def tightened(self, factor: float = 100.0) -> "SolverOptions":
        """許容誤差を factor 分の1にした設定"""
        return replace(
            self,
            feasibility_tol=self.feasibility_tol / factor,
            integrality_tol=self.integrality_tol / factor,
        )

    def stabilized(self) -> "SolverOptions":
        """単体法を最初から安全モードで動かす設定"""
        return replace(self, stable=True)
