# regress/eval_report.py
"""
各群集、各模型種類的交叉驗證結果（保留資料 R²），也就是 eval_report.csv。
無法訓練或無法評分的組合（例如 singular_design、too_few_rows、zero_variance_target）
r_squared 為 None，報表顯示 n/a，並在 error 欄位記錄錯誤代碼。
"""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from utils.csv_utils import format_float, read_table, write_rows

EVAL_HEADER = ("cluster", "model", "r_squared", "params", "n_rows", "best", "error")
NOT_AVAILABLE = "n/a"


@dataclass(frozen=True)
class EvalEntry:
    cluster: str
    model_kind: str
    r_squared: float | None
    params: dict[str, Any] | None
    n_rows: int
    is_best: bool = False
    error: str | None = None

    def __post_init__(self):
        if self.r_squared is not None and self.r_squared > 1.0:
            raise ValueError(f"R² 不可能大於 1: {self.r_squared}")


@dataclass(frozen=True)
class EvalReport:
    entries: tuple[EvalEntry, ...] = field(default=())

    def clusters(self) -> list[str]:
        return list(dict.fromkeys(entry.cluster for entry in self.entries))

    def for_cluster(self, cluster: str) -> list[EvalEntry]:
        return [entry for entry in self.entries if entry.cluster == cluster]

    def best_for(self, cluster: str) -> EvalEntry | None:
        for entry in self.for_cluster(cluster):
            if entry.is_best:
                return entry
        return None


def mark_best(entries: list[EvalEntry]) -> list[EvalEntry]:
    """R² 最高的模型種類標記為最佳；相同時取列表中較前面的種類。沒有任何可用分數時不標記。"""
    scored = [i for i, entry in enumerate(entries) if entry.r_squared is not None]
    if not scored:
        return list(entries)
    best = max(scored, key=lambda i: (entries[i].r_squared, -i))
    return [
        EvalEntry(e.cluster, e.model_kind, e.r_squared, e.params, e.n_rows, i == best, e.error)
        for i, e in enumerate(entries)
    ]


def params_to_text(params: dict[str, Any] | None) -> str:
    return "" if params is None else json.dumps(params, sort_keys=True)


def write_eval_report(path: Path, report: EvalReport) -> Path:
    rows = [
        (
            entry.cluster,
            entry.model_kind,
            NOT_AVAILABLE if entry.r_squared is None else format_float(entry.r_squared),
            params_to_text(entry.params),
            str(entry.n_rows),
            "true" if entry.is_best else "false",
            entry.error or "",
        )
        for entry in report.entries
    ]
    return write_rows(Path(path), EVAL_HEADER, rows)


def read_eval_report(path: Path) -> EvalReport:
    table = read_table(Path(path))
    entries = tuple(
        EvalEntry(
            cluster=record["cluster"],
            model_kind=record["model"],
            r_squared=None if record["r_squared"] == NOT_AVAILABLE else float(record["r_squared"]),
            params=json.loads(record["params"]) if record["params"] else None,
            n_rows=int(record["n_rows"]),
            is_best=record["best"] == "true",
            error=record["error"] or None,
        )
        for record in table.to_dict(orient="records")
    )
    return EvalReport(entries)
