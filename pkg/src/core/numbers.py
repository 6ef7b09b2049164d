"""
厳密有理数と拡張有理数 (有限有理数 または +∞) のユーティリティ
"""
import math
from fractions import Fraction
from typing import Union

from src.core.exceptions import ModelFormatError

INF = math.inf

Extended = Union[Fraction, float]

_INFINITY_SPELLINGS = {"inf", "+inf", "infinity", "∞", "+∞"}


def parse_rational(text: Union[str, int, float, Fraction]) -> Fraction:
    """
    "7/10" や "0.7" を厳密な有理数に変換する

    小数は10進表記のまま解釈する (0.7 -> 7/10)。float が渡された場合は
    repr を経由するため 0.1 は 1/10 になる。
    """
    if isinstance(text, Fraction):
        return text
    if isinstance(text, bool):
        raise ModelFormatError(f"数値ではありません: {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        if not math.isfinite(text):
            raise ModelFormatError(f"有限の数値ではありません: {text!r}")
        return Fraction(repr(text))
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ModelFormatError(f"有理数として解釈できません: {text!r}") from e


def parse_extended(text: Union[str, int, float, Fraction]) -> Extended:
    """有理数に加えて inf / ∞ を受け付ける"""
    if isinstance(text, float) and math.isinf(text) and text > 0:
        return INF
    if isinstance(text, str) and text.strip().lower() in _INFINITY_SPELLINGS:
        return INF
    return parse_rational(text)


def is_infinite(value: Extended) -> bool:
    return isinstance(value, float) and math.isinf(value)


def format_rational(value: Extended) -> str:
    """JSON出力用の文字列表現 ("7/10", "3", "inf")"""
    if is_infinite(value):
        return "inf"
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def to_float(value: Extended) -> float:
    if is_infinite(value):
        return INF
    return float(value)
