"""
戦略ファイルのパーサー

{"状態名": "行動ラベル"} の純粋定常戦略、または
{"memory": [...], "initial": ..., "next_action": {...}, "update": {...}} の Mealy 戦略を読む。
"""
from typing import Any, Mapping, Union

from src.core.exceptions import InvalidStrategyError
from src.core.mdp import Mdp
from src.core.strategy import PureStationaryStrategy
from src.memory.mealy import MealyStrategy
from src.parsers.base_parser import BaseParser

Strategy = Union[PureStationaryStrategy, MealyStrategy]


def is_mealy_document(doc: Mapping[str, Any]) -> bool:
    return "memory" in doc and "next_action" in doc


class StrategyParser(BaseParser):
    """モデルに対して戦略ファイルを解釈する"""

    def __init__(self, mdp: Mdp):
        super().__init__()
        self.mdp = mdp

    def parse_text(self, text: str, source: str = "<string>") -> Strategy:
        return self.parse_dict(self.loads_json(text, source))

    def parse_dict(self, doc: Any) -> Strategy:
        if not isinstance(doc, dict):
            raise InvalidStrategyError("戦略はJSONオブジェクトである必要があります")
        if is_mealy_document(doc):
            mealy = MealyStrategy.from_dict(self.mdp, doc)
            self.logger.debug(f"Parsed Mealy strategy with {mealy.size} memory states")
            return mealy
        if not all(isinstance(v, str) for v in doc.values()):
            raise InvalidStrategyError("定常戦略の値は行動ラベル (文字列) である必要があります")
        sigma = PureStationaryStrategy.from_labels(self.mdp, doc)
        self.logger.debug(f"Parsed stationary strategy {sigma.choices}")
        return sigma


def load_strategy(mdp: Mdp, file_path: str) -> Strategy:
    return StrategyParser(mdp).parse(file_path)
