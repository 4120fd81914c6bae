"""
报告生成器 - 从场景输出目录（config.json / summary.json / CSV）与归档库生成 HTML 摘要。
"""
import json
import logging
import math
from datetime import datetime
from pathlib import Path
from typing import Any

import pandas as pd
from jinja2 import Environment, FileSystemLoader

from polytail.database import ArchiveDatabase

logger = logging.getLogger(__name__)

# HTML 模板所在目录
_TEMPLATE_DIR = Path(__file__).resolve().parent

_STATUS_COLORS = {"ok": "#27ae60", "invariant_violation": "#e74c3c", "failed": "#f39c12"}


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "NaN"
        return f"{value:.4g}"
    return str(value)


class ReportGenerator:
    """场景 HTML 摘要生成器。"""

    def __init__(self, db: ArchiveDatabase | None = None) -> None:
        self.db = db
        self.env = Environment(
            loader=FileSystemLoader(str(_TEMPLATE_DIR)),
            autoescape=True,
        )
        self.env.filters["fmt"] = _fmt

    # --------------------------------------------------------
    # 数据获取
    # --------------------------------------------------------

    @staticmethod
    def _read_json(path: Path) -> dict[str, Any]:
        if not path.exists():
            return {}
        return json.loads(path.read_text(encoding="utf-8"))

    def load_scenario(self, out_dir: str | Path) -> dict[str, Any]:
        """
        读取一个场景输出目录。

        Returns:
            {config, summary, failure, table}，table 为 DataFrame（可能为空）。
        """
        out_dir = Path(out_dir)
        config = self._read_json(out_dir / "config.json")
        csvs = sorted(out_dir.glob("*.csv"))
        table = pd.read_csv(csvs[0]) if csvs else pd.DataFrame()
        return {
            "config": config,
            "summary": self._read_json(out_dir / "summary.json"),
            "failure": self._read_json(out_dir / "failure.json"),
            "table": table,
        }

    def recent_runs(self, limit: int = 20) -> list[dict[str, Any]]:
        """归档库中最近的场景运行记录。"""
        if self.db is None:
            return []
        return self.db.query("SELECT * FROM scenario_runs ORDER BY rowid DESC LIMIT ?", (limit,))

    # --------------------------------------------------------
    # HTML 生成
    # --------------------------------------------------------

    def generate_html(self, out_dir: str | Path) -> str:
        """
        生成场景摘要 HTML。

        Args:
            out_dir: run_scenario 的输出目录。

        Returns:
            渲染后的 HTML 字符串。
        """
        data = self.load_scenario(out_dir)
        summary, failure = data["summary"], data["failure"]
        invariants = summary.get("invariants", {"violations": [], "warnings": []})
        if failure:
            status = "failed"
        elif invariants.get("violations"):
            status = "invariant_violation"
        else:
            status = "ok"

        table: pd.DataFrame = data["table"]
        template = self.env.get_template("scenario_template.html")
        html = template.render(
            scenario=data["config"].get("scenario", "?"),
            config=data["config"],
            config_hash=summary.get("config_hash", failure.get("config_hash", "")),
            status=status,
            status_color=_STATUS_COLORS[status],
            mu=summary.get("mu", []),
            checks=summary.get("checks", {}),
            invariants=invariants,
            failure=failure,
            columns=list(table.columns),
            rows=table.to_dict(orient="records"),
            recent_runs=self.recent_runs(),
            generated_at=datetime.now().strftime("%Y-%m-%d %H:%M:%S"),
        )
        logger.info("HTML 摘要生成完成 (%s, 状态: %s)", out_dir, status)
        return html
