"""
多项式集中不等式工具箱 - 结果归档模块

负责 SQLite 归档库的初始化（自动建表）、批量插入与查询。
所有表均设置 UNIQUE 约束，使用 INSERT OR REPLACE 保证重跑幂等。
"""
import logging
import sqlite3
from pathlib import Path
from typing import Any

from polytail.census import CensusResult, format_vector
from polytail.settings import DB_PATH

logger = logging.getLogger(__name__)

# ============================================================
# 建表 SQL（3 张表）
# ============================================================

_CREATE_TABLES_SQL: list[str] = [
    # 1. 超图普查记录
    """
    CREATE TABLE IF NOT EXISTS census_records (
        k           INTEGER NOT NULL,
        l           INTEGER NOT NULL,
        q           INTEGER NOT NULL,
        eta         INTEGER NOT NULL,
        gamma       INTEGER NOT NULL,
        c           INTEGER NOT NULL,
        dbar        TEXT    NOT NULL,
        Dtotal      TEXT    NOT NULL,
        deltabar    TEXT    NOT NULL,
        nubar       TEXT    NOT NULL,
        count       INTEGER NOT NULL,
        implied_R0  REAL,
        UNIQUE(k, l, q, eta, gamma, c, dbar, Dtotal, deltabar, nubar)
    )
    """,
    # 2. 常数校准
    """
    CREATE TABLE IF NOT EXISTS calibration_runs (
        suite_hash      TEXT    NOT NULL,
        constant        TEXT    NOT NULL,
        implied_max     REAL,
        power_of_two    REAL,
        shipped_value   REAL,
        n_instances     INTEGER,
        created_at      TEXT    DEFAULT CURRENT_TIMESTAMP,
        UNIQUE(suite_hash, constant)
    )
    """,
    # 3. 场景运行
    """
    CREATE TABLE IF NOT EXISTS scenario_runs (
        scenario        TEXT    NOT NULL,
        config_hash     TEXT    NOT NULL,
        output_path     TEXT,
        status          TEXT    CHECK(status IN ('ok','failed','invariant_violation')),
        n_rows          INTEGER,
        created_at      TEXT    DEFAULT CURRENT_TIMESTAMP,
        UNIQUE(scenario, config_hash)
    )
    """,
]


class ArchiveDatabase:
    """SQLite 归档库。"""

    def __init__(self, db_path: str | None = None) -> None:
        """
        初始化数据库连接并自动建表。

        Args:
            db_path: 数据库文件路径，默认使用 settings 中的配置。
        """
        self.db_path = db_path or DB_PATH
        Path(self.db_path).parent.mkdir(parents=True, exist_ok=True)
        self._init_tables()
        logger.debug("归档库初始化完成: %s", self.db_path)

    # --------------------------------------------------------
    # 内部方法
    # --------------------------------------------------------

    def _get_conn(self) -> sqlite3.Connection:
        conn = sqlite3.connect(self.db_path)
        conn.row_factory = sqlite3.Row
        return conn

    def _init_tables(self) -> None:
        conn = self._get_conn()
        try:
            for sql in _CREATE_TABLES_SQL:
                conn.execute(sql)
            conn.commit()
        finally:
            conn.close()

    # --------------------------------------------------------
    # 公共接口
    # --------------------------------------------------------

    def insert_batch(self, table: str, records: list[dict[str, Any]]) -> int:
        """
        批量插入/更新记录（INSERT OR REPLACE），单个事务内完成。

        Args:
            table: 目标表名。
            records: 字典列表，键集合与第一条记录一致。

        Returns:
            写入的记录数。
        """
        if not records:
            return 0

        columns = list(records[0].keys())
        placeholders = ", ".join(["?"] * len(columns))
        sql = f"INSERT OR REPLACE INTO {table} ({', '.join(columns)}) VALUES ({placeholders})"

        conn = self._get_conn()
        try:
            conn.executemany(sql, [tuple(rec[c] for c in columns) for rec in records])
            conn.commit()
            logger.info("表 %s 插入/更新 %d 条记录", table, len(records))
        except Exception:
            conn.rollback()
            logger.exception("表 %s 批量插入失败", table)
            raise
        finally:
            conn.close()
        return len(records)

    def query(self, sql: str, params: tuple[Any, ...] = ()) -> list[dict[str, Any]]:
        conn = self._get_conn()
        try:
            return [dict(row) for row in conn.execute(sql, params).fetchall()]
        finally:
            conn.close()

    def get_latest(self, table: str, key: str, value: Any) -> dict[str, Any] | None:
        """
        按插入顺序取 key = value 的最后一条记录。

        Returns:
            记录字典，无数据时返回 None。
        """
        result = self.query(f"SELECT * FROM {table} WHERE {key} = ? ORDER BY rowid DESC LIMIT 1", (value,))
        return result[0] if result else None

    def tables(self) -> list[str]:
        rows = self.query("SELECT name FROM sqlite_master WHERE type='table' ORDER BY name")
        return [r["name"] for r in rows]


def census_rows(result: CensusResult) -> list[dict[str, Any]]:
    """CensusResult 转为 census_records 行（SQLite 列名不分大小写，D̄ 存为 Dtotal）。"""
    return [
        {
            "k": r.k, "l": r.ell, "q": result.q, "eta": result.eta, "gamma": result.gamma, "c": r.c,
            "dbar": format_vector(r.dbar), "Dtotal": format_vector(r.Dbar),
            "deltabar": format_vector(r.deltabar), "nubar": format_vector(r.nubar),
            "count": r.count, "implied_R0": r.implied_R0,
        }
        for r in result.records
    ]


if __name__ == "__main__":
    db = ArchiveDatabase()
    print("归档库建表成功，路径:", db.db_path)
    for name in db.tables():
        print(f"  - {name}")
