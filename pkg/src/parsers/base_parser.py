import json
import logging
from abc import ABC, abstractmethod
from typing import Any

from src.core.exceptions import ModelFormatError


class BaseParser(ABC):
    """
    全てのパーサーの基底クラス
    """

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def read_text(self, file_path: str) -> str:
        """ファイルをUTF-8テキストとして読み込む"""
        try:
            with open(file_path, encoding="utf-8") as f:
                return f.read()
        except OSError as e:
            self.logger.error(f"Failed to read {file_path}: {e}", exc_info=True)
            raise ModelFormatError(f"ファイルを読み込めません: {file_path} ({e})") from e

    def read_json(self, file_path: str) -> Any:
        return self.loads_json(self.read_text(file_path), source=file_path)

    def loads_json(self, text: str, source: str = "<string>") -> Any:
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            self.logger.error(f"Invalid JSON in {source}: {e}")
            raise ModelFormatError(f"JSONとして解釈できません: {source} (行 {e.lineno}, 列 {e.colno})") from e

    def parse(self, file_path: str) -> Any:
        """
        ファイルをパースしてドメインオブジェクトを返す

        Args:
            file_path: パース対象のファイルパス
        """
        return self.parse_text(self.read_text(file_path), source=file_path)

    @abstractmethod
    def parse_text(self, text: str, source: str = "<string>") -> Any:
        """テキストをパースする (サブクラスで実装)"""
        pass
