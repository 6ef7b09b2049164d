"""
有界変数の主シンプレックス法 (密なタブロー)

制約 A x {≤,=,≥} b, l ≤ x ≤ u のもとで c·x を最大化する。
不等式にはスラック変数、全行に人工変数を加えて2段階法で解く。
非基底変数は下界か上界のどちらかに置かれる。
各行は最大係数が 1 前後になるよう 2 の冪で割ってから解く。

入る変数は Dantzig 規則 (被約費用の絶対値最大) で選び、退化ピボットが
続いた場合は Bland 規則 (最小インデックス) に切り替えて巡回を防ぐ。
出る変数は Harris の2段階比率テストで選び、列の最大成分に対して
小さすぎる要素ではピボットしない。

基底行列が特異または悪条件になったときは、最後に分解できた基底に戻して
安全モード (Bland 規則、ピボットごとの再分解、厳しいピボット許容誤差) で続ける。
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from src.core.exceptions import IterationLimitError, NumericalTroubleError
from src.milp.model import Sense, SolverOptions

PIVOT_TOL = 1e-9
PIVOT_REL_TOL = 1e-9
SAFE_PIVOT_REL_TOL = 1e-7
SMALL_PIVOT = 1e-5
COST_TOL = 1e-9
HARRIS_FACTOR = 0.5
GROWTH_LIMIT = 1e14
DEGENERATE_STREAK = 50
REFACTOR_INTERVAL = 100
MAX_RECOVERIES = 10


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"


@dataclass
class LpProblem:
    a: np.ndarray
    senses: Sequence[Sense]
    rhs: np.ndarray
    cost: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


@dataclass
class LpResult:
    status: LpStatus
    x: Optional[np.ndarray]
    objective: float
    iterations: int


class _SingularBasis(Exception):
    """基底行列を分解できない (安全モードでの復旧の対象)"""


class SimplexSolver:
    """密なタブローによる有界変数シンプレックス法"""

    def __init__(self, options: Optional[SolverOptions] = None):
        self.logger = logging.getLogger(__name__)
        self.options = options or SolverOptions()

    def solve(self, problem: LpProblem) -> LpResult:
        return _SimplexRun(problem, self.options, self.logger).run()


def _row_scale(a: np.ndarray) -> np.ndarray:
    row_max = np.abs(a).max(axis=1, initial=0.0)
    safe = np.where(row_max > 0, row_max, 1.0)
    return np.exp2(-np.round(np.log2(safe)))


class _SimplexRun:
    def __init__(self, problem: LpProblem, options: SolverOptions, logger: logging.Logger):
        self.options = options
        self.logger = logger
        a = np.asarray(problem.a, dtype=float)
        m, n = a.shape
        self.m, self.n = m, n
        scale = _row_scale(a)
        a = a * scale[:, None]
        self.rhs = np.asarray(problem.rhs, dtype=float) * scale
        self.cost = np.asarray(problem.cost, dtype=float)

        slack_rows = [i for i, sense in enumerate(problem.senses) if sense is not Sense.EQ]
        ns = len(slack_rows)
        self.num_columns = n + ns + m
        self.art_start = n + ns
        full = np.zeros((m, self.num_columns))
        full[:, :n] = a
        for k, i in enumerate(slack_rows):
            full[i, n + k] = 1.0 if problem.senses[i] is Sense.LE else -1.0

        self.lower = np.concatenate([np.asarray(problem.lower, dtype=float), np.zeros(ns + m)])
        self.upper = np.concatenate([np.asarray(problem.upper, dtype=float), np.full(ns + m, np.inf)])

        x = np.zeros(self.num_columns)
        x[:n] = self.lower[:n]
        residual = self.rhs - full[:, :self.art_start] @ x[:self.art_start]
        sign = np.where(residual >= 0, 1.0, -1.0)
        for i in range(m):
            full[i, self.art_start + i] = sign[i]
        x[self.art_start:] = np.abs(residual)

        self.full = full
        self.x = x
        self.basis = np.arange(self.art_start, self.num_columns)
        self.is_basic = np.zeros(self.num_columns, dtype=bool)
        self.is_basic[self.basis] = True
        self.at_upper = np.zeros(self.num_columns, dtype=bool)
        self.tableau = full * sign[:, None]
        self.iterations = 0
        self.since_refactor = 0
        self.safe = options.stable
        self.recoveries = 0
        self.rejected = np.zeros(self.num_columns, dtype=bool)
        self._save()

    def run(self) -> LpResult:
        phase1 = np.zeros(self.num_columns)
        phase1[self.art_start:] = 1.0
        self._solve_phase(phase1)

        infeasibility = float(self.x[self.art_start:].sum())
        threshold = max(self.options.feasibility_tol, 1e-11) * (1.0 + float(np.abs(self.rhs).max(initial=0.0)))
        if infeasibility > threshold:
            self.logger.debug(f"LP infeasible (phase 1 residual {infeasibility:.3e})")
            return LpResult(LpStatus.INFEASIBLE, None, float("-inf"), self.iterations)

        self.upper[self.art_start:] = 0.0
        self.at_upper[self.art_start:] = False
        self._save()
        phase2 = np.zeros(self.num_columns)
        phase2[:self.n] = -self.cost
        self._solve_phase(phase2)

        if self.recoveries:
            self.logger.debug(f"LP solved after {self.recoveries} basis recoveries")
        x = np.clip(self.x[:self.n], self.lower[:self.n], self.upper[:self.n])
        objective = float(self.cost @ x)
        return LpResult(LpStatus.OPTIMAL, x, objective, self.iterations)

    def _solve_phase(self, c: np.ndarray) -> None:
        # 復旧で古い基底に戻った場合はその段階を解き直す
        while True:
            self._iterate(c)
            if self._refresh():
                return

    def _iterate(self, c: np.ndarray) -> None:
        """c·x を最小化するまでピボットを繰り返す (最適性は分解し直したタブローで判定する)"""
        degenerate = 0
        movable = self.upper > self.lower + PIVOT_TOL
        while True:
            if self.iterations >= self.options.lp_iteration_limit:
                raise IterationLimitError(f"シンプレックス法の反復回数が上限 {self.options.lp_iteration_limit} に達しました")
            if self.since_refactor >= (1 if self.safe else REFACTOR_INTERVAL):
                self._refresh()

            reduced = c - c[self.basis] @ self.tableau
            free = ~self.is_basic & movable
            increase = free & ~self.at_upper & (reduced < -COST_TOL)
            decrease = free & self.at_upper & (reduced > COST_TOL)
            eligible = (increase | decrease) & ~self.rejected
            if not eligible.any():
                if self.since_refactor > 0:
                    self._refresh()
                    continue
                if ((increase | decrease) & self.rejected).any():
                    raise NumericalTroubleError("悪条件のため改善方向の列でピボットできません")
                return

            bland = self.safe or degenerate >= DEGENERATE_STREAK
            if bland:
                j = int(np.flatnonzero(eligible)[0])
            else:
                j = int(np.argmax(np.where(eligible, np.abs(reduced), -1.0)))
            direction = 1.0 if increase[j] else -1.0
            step, row, to_upper = self._ratio_test(j, direction, bland)
            if not np.isfinite(step):
                raise NumericalTroubleError("LP が非有界です (全ての変数は有界である必要があります)")

            alpha = direction * self.tableau[:, j]
            self.x[self.basis] -= step * alpha
            self.x[j] += direction * step
            self.iterations += 1
            self.since_refactor += 1
            degenerate = degenerate + 1 if step <= 1e-12 else 0
            if row < 0:
                self.at_upper[j] = not self.at_upper[j]
                self.x[j] = self.upper[j] if self.at_upper[j] else self.lower[j]
                continue

            small = abs(alpha[row]) < SMALL_PIVOT * float(np.abs(alpha).max())
            self._pivot(row, j, to_upper)
            if small or self.safe:
                if small:
                    self.logger.debug(f"Small pivot {alpha[row]:.3e} on column {j}; refactoring")
                self._refresh(entering=j)

    def _ratio_test(self, j: int, direction: float, bland: bool):
        """(ステップ幅, 出る行 (-1 は境界の反転), 出る変数が上界に置かれるか)"""
        alpha = direction * self.tableau[:, j]
        flip = self.upper[j] - self.lower[j]
        rel = SAFE_PIVOT_REL_TOL if self.safe else PIVOT_REL_TOL
        tol = max(PIVOT_TOL, rel * float(np.abs(alpha).max(initial=0.0)))
        falling = alpha > tol
        rising = alpha < -tol
        if not (falling.any() or rising.any()):
            return flip, -1, False

        xb = self.x[self.basis]
        lb = self.lower[self.basis]
        ub = self.upper[self.basis]
        ratios = self._ratios(alpha, xb - lb, ub - xb, falling, rising)

        if bland:
            best = float(ratios.min())
            if flip <= best:
                return flip, -1, False
            ties = np.flatnonzero(ratios <= best + 1e-12)
            row = int(ties[np.argmin(self.basis[ties])])
            return best, row, bool(rising[row])

        # 境界を delta だけ緩めた比率の最小値までの行から、ピボット要素が最大の行を選ぶ
        delta = HARRIS_FACTOR * self.options.feasibility_tol
        relaxed = self._ratios(alpha, xb - lb + delta, ub - xb + delta, falling, rising)
        bound = float(relaxed.min())
        candidates = np.flatnonzero(ratios <= bound)
        if candidates.size == 0:
            candidates = np.flatnonzero(ratios <= float(ratios.min()))
        row = int(candidates[np.argmax(np.abs(alpha[candidates]))])
        step = float(ratios[row])
        if flip <= step:
            return flip, -1, False
        return step, row, bool(rising[row])

    def _ratios(self, alpha, room_down, room_up, falling, rising) -> np.ndarray:
        ratios = np.full(self.m, np.inf)
        ratios[falling] = room_down[falling] / alpha[falling]
        with np.errstate(invalid="ignore"):
            ratios[rising] = room_up[rising] / (-alpha[rising])
        return np.maximum(ratios, 0.0)

    def _pivot(self, row: int, j: int, to_upper: bool) -> None:
        leaving = int(self.basis[row])
        self.x[leaving] = self.upper[leaving] if to_upper else self.lower[leaving]
        self.at_upper[leaving] = to_upper
        self.is_basic[leaving] = False
        self.basis[row] = j
        self.is_basic[j] = True
        self.at_upper[j] = False

        column = self.tableau[:, j].copy()
        pivot_row = self.tableau[row] / column[row]
        self.tableau -= np.outer(column, pivot_row)
        self.tableau[row] = pivot_row

    def _refactor(self) -> None:
        """基底行列からタブローと基底変数の値を再計算する"""
        self.since_refactor = 0
        if self.m == 0:
            return
        basis_matrix = self.full[:, self.basis]
        nonbasic_x = np.where(self.is_basic, 0.0, self.x)
        try:
            tableau = np.linalg.solve(basis_matrix, self.full)
            values = np.linalg.solve(basis_matrix, self.rhs - self.full @ nonbasic_x)
        except np.linalg.LinAlgError as e:
            raise _SingularBasis("基底行列が特異になりました") from e
        if not (np.isfinite(tableau).all() and np.isfinite(values).all()):
            raise _SingularBasis("基底行列の分解で非有限の値が出ました")
        if float(np.abs(tableau).max()) > GROWTH_LIMIT:
            raise _SingularBasis("基底行列が悪条件です")
        self.tableau = tableau
        self.x[self.basis] = values
        self._save()

    def _refresh(self, entering: Optional[int] = None) -> bool:
        """分解し直す。失敗したら最後に分解できた基底へ戻し、False を返す"""
        try:
            self._refactor()
        except _SingularBasis as e:
            self._recover(e, entering)
            return False
        if entering is not None:
            self.rejected[:] = False
        return True

    def _recover(self, cause: _SingularBasis, entering: Optional[int]) -> None:
        self.recoveries += 1
        if self.recoveries > MAX_RECOVERIES:
            raise NumericalTroubleError(f"{cause} (基底の復旧を {MAX_RECOVERIES} 回試みました)") from cause
        self.logger.debug(f"{cause}; restoring last factored basis in safe mode (recovery {self.recoveries})")
        self._restore()
        self.safe = True
        if entering is not None:
            self.rejected[entering] = True
        try:
            self._refactor()
        except _SingularBasis as e:
            raise NumericalTroubleError(str(e)) from e

    def _save(self) -> None:
        self.saved = (self.basis.copy(), self.is_basic.copy(), self.at_upper.copy(), self.x.copy())

    def _restore(self) -> None:
        basis, is_basic, at_upper, x = self.saved
        self.basis = basis.copy()
        self.is_basic = is_basic.copy()
        self.at_upper = at_upper.copy()
        self.x = x.copy()
