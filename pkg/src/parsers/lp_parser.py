"""
CPLEX LP 形式の読み込み

export_lp が出力する部分集合 (Maximize/Minimize, Subject To, Bounds, Binaries, End) を
MilpModel に戻す。直前に "\\ exact: " 注釈がある行は注釈側の有理数を採用する。
"""
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from src.core.exceptions import ModelFormatError
from src.core.numbers import parse_rational
from src.milp.lp_writer import EXACT_PREFIX
from src.milp.model import MilpModel, Sense
from src.parsers.base_parser import BaseParser

_SECTIONS = {
    "maximize": "objective", "maximise": "objective", "max": "objective",
    "minimize": "minimize", "minimise": "minimize", "min": "minimize",
    "subject to": "constraints", "such that": "constraints", "st": "constraints", "s.t.": "constraints",
    "bounds": "bounds", "binaries": "binaries", "binary": "binaries", "bin": "binaries", "end": "end",
}
EXACT_MARK = EXACT_PREFIX.rstrip()
_RELATIONS = ("<=", ">=", "=<", "=>", "=")


def _split_terms(text: str) -> List[Tuple[Fraction, str]]:
    """"2 x + 1/3 y - z" を [(2, x), (1/3, y), (-1, z)] に分解する"""
    tokens = text.split()
    terms = []
    sign = Fraction(1)
    coef: Optional[Fraction] = None
    for token in tokens:
        if token == "+":
            continue
        if token == "-":
            sign = -sign
            continue
        try:
            coef = (coef or Fraction(1)) * parse_rational(token)
            continue
        except ModelFormatError:
            pass
        terms.append((sign * (coef if coef is not None else Fraction(1)), token))
        sign, coef = Fraction(1), None
    if coef is not None:
        if coef != 0:
            raise ModelFormatError(f"変数のない項があります: {text}")
    return terms


def _split_relation(text: str) -> Tuple[str, str, str]:
    for rel in _RELATIONS:
        if rel in text:
            left, right = text.split(rel, 1)
            return left, rel, right
    raise ModelFormatError(f"制約に比較演算子がありません: {text}")


class LpParser(BaseParser):
    """LP ファイルを MilpModel に変換するパーサー"""

    def parse_text(self, text: str, source: str = "<string>") -> MilpModel:
        model = MilpModel(source)
        section = None
        maximize = False
        objective_text: Optional[str] = None
        rows: List[Tuple[str, str]] = []
        bounds: List[str] = []
        binaries: List[str] = []
        pending_exact: Optional[str] = None

        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith(EXACT_MARK):
                pending_exact = line[len(EXACT_MARK):].strip()
                continue
            if line.startswith("\\"):
                continue
            key = line.lower()
            if key in _SECTIONS:
                section = _SECTIONS[key]
                if section == "objective":
                    maximize = True
                if section == "end":
                    break
                continue
            content = pending_exact if pending_exact is not None else line
            pending_exact = None
            if section in ("objective", "minimize"):
                objective_text = content.split(":", 1)[1] if ":" in content else content
            elif section == "constraints":
                name, body = content.split(":", 1) if ":" in content else (f"c{len(rows)}", content)
                rows.append((name.strip(), body))
            elif section == "bounds":
                bounds.append(content)
            elif section == "binaries":
                binaries.extend(content.split())
            else:
                raise ModelFormatError(f"{source}: セクション外の行です: {line}")

        binary_set = set(binaries)
        declared: Dict[str, int] = {}

        def variable(name: str) -> int:
            if name not in declared:
                if name in binary_set:
                    declared[name] = model.add_binary(name)
                else:
                    declared[name] = model.add_continuous(name, 0, 0)
            return declared[name]

        for line in bounds:
            self._apply_bound(model, line, variable, binary_set)
        for name in binaries:
            variable(name)

        for name, body in rows:
            left, rel, right = _split_relation(body)
            coeffs: Dict[int, Fraction] = {}
            for coef, var_name in _split_terms(left):
                var = variable(var_name)
                coeffs[var] = coeffs.get(var, Fraction(0)) + coef
            model.add_constraint(coeffs, Sense.parse(rel), parse_rational(right.strip()), name)

        if objective_text is not None:
            terms = _split_terms(objective_text)
            if maximize and terms:
                model.set_objective({variable(n): c for c, n in terms})
            elif terms:
                model.set_objective({variable(n): -c for c, n in terms})

        self.logger.debug(f"Parsed LP {source}: {model}")
        return model

    @staticmethod
    def _apply_bound(model: MilpModel, line: str, variable, binary_set) -> None:
        parts = line.replace("=<", "<=").split("<=")
        if len(parts) == 3:
            lower, name, upper = (p.strip() for p in parts)
            var = variable(name)
            if name not in binary_set:
                model.set_bounds(var, lower=parse_rational(lower), upper=parse_rational(upper))
            return
        if "=" in line and "<" not in line and ">" not in line:
            name, value = (p.strip() for p in line.split("=", 1))
            var = variable(name)
            model.set_bounds(var, lower=parse_rational(value), upper=parse_rational(value))
            return
        raise ModelFormatError(f"解釈できない境界指定です: {line}")


def read_lp(text: str) -> MilpModel:
    """LP テキストから MilpModel を構築する"""
    return LpParser().parse_text(text)
