"""
CPLEX LP 形式への書き出し

係数は10進表記で出力し、10進表記で正確に表せない行の直前には
有理数表記の注釈行 (\\ exact: ...) を置く。
"""
import re
from fractions import Fraction
from typing import Dict, Iterable, List, Tuple

from src.milp.model import MilpModel

_INVALID = re.compile(r"[^A-Za-z0-9_]")
EXACT_PREFIX = "\\ exact: "


def format_decimal(value: Fraction) -> Tuple[str, bool]:
    """(10進表記, その表記が値と厳密に一致するか)"""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator), True
    text = repr(float(value))
    return text, Fraction(text) == value


def format_rational(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def sanitize_names(names: Iterable[str]) -> List[str]:
    """LP 形式で使える名前に置き換え、衝突を連番で解消する"""
    used = set()
    result = []
    for name in names:
        clean = _INVALID.sub("_", name) or "v"
        if clean[0].isdigit():
            clean = "v" + clean
        candidate = clean
        k = 1
        while candidate in used:
            candidate = f"{clean}_{k}"
            k += 1
        used.add(candidate)
        result.append(candidate)
    return result


def _expression(coeffs: Dict[int, Fraction], names: List[str], render) -> str:
    parts = []
    for var, coef in coeffs.items():
        sign = "-" if coef < 0 else "+"
        magnitude = abs(coef)
        term = names[var] if magnitude == 1 else f"{render(magnitude)} {names[var]}"
        if not parts:
            parts.append(term if sign == "+" else f"- {term}")
        else:
            parts.append(f"{sign} {term}")
    return " ".join(parts) if parts else "0"


def _decimal(value: Fraction) -> str:
    return format_decimal(value)[0]


def _is_exact(coeffs: Dict[int, Fraction], *extra: Fraction) -> bool:
    return all(format_decimal(c)[1] for c in list(coeffs.values()) + list(extra))


def export_lp(model: MilpModel) -> str:
    """MilpModel を CPLEX LP 形式のテキストに変換する"""
    names = sanitize_names(v.name for v in model.variables)
    row_names = sanitize_names(c.name for c in model.constraints)
    lines: List[str] = []

    if model.objective is None:
        lines += ["Minimize", " obj: 0"]
    else:
        if not _is_exact(model.objective):
            lines.append(EXACT_PREFIX + "obj: " + _expression(model.objective, names, format_rational))
        lines += ["Maximize", " obj: " + _expression(model.objective, names, _decimal)]

    lines.append("Subject To")
    for con, row in zip(model.constraints, row_names):
        if not _is_exact(con.coeffs, con.rhs):
            exact = f"{row}: {_expression(con.coeffs, names, format_rational)} {con.sense.value} {format_rational(con.rhs)}"
            lines.append(EXACT_PREFIX + exact)
        lines.append(f" {row}: {_expression(con.coeffs, names, _decimal)} {con.sense.value} {_decimal(con.rhs)}")

    lines.append("Bounds")
    for var, name in zip(model.variables, names):
        if not _is_exact({}, var.lower, var.upper):
            lines.append(EXACT_PREFIX + f"{format_rational(var.lower)} <= {name} <= {format_rational(var.upper)}")
        lines.append(f" {_decimal(var.lower)} <= {name} <= {_decimal(var.upper)}")

    binaries = [name for var, name in zip(model.variables, names) if var.is_binary]
    if binaries:
        lines.append("Binaries")
        lines += [f" {name}" for name in binaries]
    lines.append("End")
    return "\n".join(lines) + "\n"


def write_lp(model: MilpModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(export_lp(model))
