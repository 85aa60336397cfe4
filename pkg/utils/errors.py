# utils/errors.py
"""
整個分析流程共用的例外類別。
每個例外都帶有一個穩定的錯誤代碼 (code，例如 "empty_zone")、發生的階段 (stage) 與補充資訊 (details)，
CLI 會依例外的種類決定結束代碼：
- ConfigurationError → 1（設定檔、欄位對應、參數錯誤）
- DataError 及其子類別 → 2（資料本身不足以完成計算）
- 其他未預期的例外 → 3
"""
from typing import Any


class AnalysisError(Exception):
    """所有分析流程例外的基底類別。"""

    exit_code = 3

    def __init__(self, code: str, message: str = "", *, stage: str | None = None, details: dict[str, Any] | None = None):
        self.code = code
        self.message = message or code
        self.stage = stage
        self.details = dict(details or {})
        super().__init__(self.message)

    def with_stage(self, stage: str) -> "AnalysisError":
        # 只在還沒有標記階段時補上，保留最內層的階段資訊
        if self.stage is None:
            self.stage = stage
        return self

    def __str__(self) -> str:
        prefix = f"[{self.stage}] " if self.stage else ""
        return f"{prefix}{self.code}: {self.message}" if self.message != self.code else f"{prefix}{self.code}"


class ConfigurationError(AnalysisError):
    exit_code = 1


class DataError(AnalysisError):
    exit_code = 2


class SignatureError(DataError):
    pass


class ClusteringError(DataError):
    pass


class RegressionError(DataError):
    pass


class PipelineError(DataError):
    pass


# --- 將任意例外轉換為 CLI 的結束代碼 ---
def exit_code_for(error: BaseException) -> int:
    if isinstance(error, AnalysisError):
        return error.exit_code
    return 3
