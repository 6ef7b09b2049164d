"""
有理数係数の線形方程式系ソルバー (Bareiss の分数なしガウス消去)
"""
import math
from fractions import Fraction
from typing import List, Sequence

from src.core.exceptions import SingularSystemError


def solve_linear_system(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> List[Fraction]:
    """
    A x = b を厳密に解く

    各行を分母の最小公倍数で整数化した後、Bareiss 法で上三角化し、
    後退代入のみ Fraction で行う。

    Raises:
        SingularSystemError: A が正則でない
    """
    n = len(a)
    if len(b) != n or any(len(row) != n for row in a):
        raise SingularSystemError(f"係数行列の形状が不正です ({n} 行)")
    if n == 0:
        return []

    rows: List[List[int]] = []
    for row, rhs in zip(a, b):
        values = [Fraction(v) for v in row] + [Fraction(rhs)]
        scale = math.lcm(*(v.denominator for v in values))
        rows.append([int(v * scale) for v in values])

    prev = 1
    for k in range(n):
        pivot = next((i for i in range(k, n) if rows[i][k] != 0), None)
        if pivot is None:
            raise SingularSystemError(f"列 {k} にピボットがありません (係数行列が特異です)")
        if pivot != k:
            rows[k], rows[pivot] = rows[pivot], rows[k]
        pk = rows[k]
        for i in range(k + 1, n):
            ri = rows[i]
            factor = ri[k]
            for j in range(k + 1, n + 1):
                ri[j] = (ri[j] * pk[k] - factor * pk[j]) // prev
            ri[k] = 0
        prev = pk[k]

    x = [Fraction(0)] * n
    for i in reversed(range(n)):
        ri = rows[i]
        acc = Fraction(ri[n])
        for j in range(i + 1, n):
            if ri[j]:
                acc -= ri[j] * x[j]
        x[i] = acc / ri[i]
    return x


def residuals(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction], x: Sequence[Fraction]) -> List[Fraction]:
    """各式の残差 (A x - b)"""
    return [sum((c * v for c, v in zip(row, x)), Fraction(0)) - rhs for row, rhs in zip(a, b)]
