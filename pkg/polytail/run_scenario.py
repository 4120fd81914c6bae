"""
多项式集中不等式工具箱 - 实验场景主入口

完整流程：
1. 初始化日志 & 归档库 & 输出目录
2. 构造实例（线性和 / G(n,p) 环计数 / 随机矩阵积和式 / 自定义多项式）
3. 计算 μ 剖面
4. 计算各 λ 上的上界表，能枚举时给出精确尾概率，否则给出蒙特卡洛估计
5. 不变量检查（上界不低于精确尾概率、随 λ 单调不增）
6. 写出 CSV / JSON 并归档
7. 生成 HTML 摘要

用法：
    python -m polytail.run_scenario scenario.json
    python -m polytail.run_scenario scenario.json --threads 4
"""
import argparse
import hashlib
import json
import logging
import logging.config
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import pandas as pd

from polytail.database import ArchiveDatabase
from polytail.errors import InvariantViolation, ParameterError, PolytailError
from polytail.mc import estimate_tail, permanent_tail_table
from polytail.poly import cycle_count_through_vertex, cycles_poly, expectation, gnp_cycle_dists, linear, load_poly
from polytail.rv import bernoulli, dists_from_json, load_dists
from polytail.settings import LOGGING_CONFIG, OUTPUT_DIR
from polytail.smoothness import mu_profile
from polytail.tailbounds import (
    ConstantsConfig,
    compare_bounds,
    cycles_epsilon,
    cycles_markov,
    evaluate_bound,
    load_constants,
    permanent_markov,
)

logger = logging.getLogger("polytail.scenario")

SCENARIOS = ("linear", "cycles", "permanent", "poly")
FLOAT_FORMAT = "%.17g"
_NON_BOUND_COLUMNS = {"lambda", "t", "exact_tail", "mc_phat", "mc_ci_low", "mc_ci_high", "p_hat", "ci_low", "ci_high"}


@dataclass
class ExperimentConfig:
    """场景配置；seed 必须显式给出，λ 网格严格递增。"""

    scenario: str
    seed: int
    lam_grid: list[float] = field(default_factory=list)
    params: dict[str, Any] = field(default_factory=dict)
    samples: int = 0
    constants_path: str | None = None
    output_dir: str | None = None

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ParameterError(f"未知场景: {self.scenario}")
        if any(b <= a for a, b in zip(self.lam_grid, self.lam_grid[1:])):
            raise ParameterError("λ 网格必须严格递增")
        if self.samples < 0:
            raise ParameterError("样本数不能为负")

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "ExperimentConfig":
        if "seed" not in data:
            raise ParameterError("场景配置必须显式给出 seed")
        known = {"scenario", "seed", "lam_grid", "params", "samples", "constants_path", "output_dir"}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"场景配置含未知字段: {sorted(unknown)}")
        return cls(**data)

    def to_json(self) -> dict[str, Any]:
        return asdict(self)

    def config_hash(self) -> str:
        """除输出目录外的规范 JSON 的 sha256。"""
        payload = {k: v for k, v in self.to_json().items() if k != "output_dir"}
        return hashlib.sha256(json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")).hexdigest()


def load_config(path: str | Path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return ExperimentConfig.from_json(json.load(fh))


@dataclass
class ScenarioResult:
    config: ExperimentConfig
    output_dir: Path
    table: pd.DataFrame
    summary: dict[str, Any]
    stages: list[str]

    @property
    def csv_path(self) -> Path:
        return self.output_dir / f"{self.config.scenario}.csv"


# ============================================================
# 场景构造
# ============================================================

def _cycles_checks(n: int, q: int, p: float, poly, dists) -> dict[str, Any]:
    """E[X(q)] 与 项数·p^q 的比较，以及 1 ≤ t < q 时 μ_t ≤ ln^{q−t} n / n（仅在 p = ln n / n 时检查）。"""
    count = cycle_count_through_vertex(n, q)
    closed_form = count * p**q
    mean = expectation(poly, dists)
    profile = mu_profile(poly, dists)
    checks: dict[str, Any] = {
        "term_count": count,
        "term_count_matches": count == len(poly),
        "mean_closed_form": closed_form,
        "mean": mean,
        "mean_matches": math.isclose(mean, closed_form, rel_tol=1e-9),
        "mu": list(profile.values),
    }
    if math.isclose(p, math.log(n) / n, rel_tol=1e-12):
        caps = [math.log(n) ** (q - t) / n for t in range(q + 1)]
        checks["mu_caps"] = caps
        checks["mu_caps_hold"] = [profile[t] <= caps[t] * (1 + 1e-12) for t in range(1, q)]
    return checks


def _poly_scenario(config: ExperimentConfig, constants: ConstantsConfig, threads: int | None):
    params = config.params
    extra_checks: dict[str, Any] = {}
    if config.scenario == "linear":
        n = int(params.get("n", 4))
        poly = linear(n, params.get("weights"))
        dists = [bernoulli(float(params.get("p", 0.5)))] * n
    elif config.scenario == "cycles":
        n, q = int(params["n"]), int(params.get("q", 3))
        p = float(params.get("p", math.log(n) / n))
        poly = cycles_poly(n, q)
        dists = gnp_cycle_dists(n, p)
        extra_checks = _cycles_checks(n, q, p, poly, dists)
    else:
        poly = load_poly(params["poly"])
        dists = load_dists(params["dists"], poly.n) if isinstance(params["dists"], str) else dists_from_json(params["dists"], poly.n)

    table = compare_bounds(poly, dists, config.lam_grid, constants, params.get("kimvu_E"))
    if config.scenario == "cycles":
        n, q = int(params["n"]), int(params.get("q", 3))
        eps = params.get("eps")
        table["cycles"] = [evaluate_bound("cycles", {"n": n, "q": q, "eps": eps}, lam, constants).bound
                           for lam in config.lam_grid]
        table["cycles_markov"] = [math.exp(cycles_markov(n, q, lam, constants.R_main).log_bound) if lam > 0 else 1.0
                                  for lam in config.lam_grid]
        extra_checks["epsilon"] = eps if eps is not None else cycles_epsilon(n, q)
    if "exact_tail" not in table.columns and config.samples > 0:
        estimates = [estimate_tail(poly, dists, lam, config.samples, config.seed, threads=threads)
                     for lam in config.lam_grid]
        table["mc_phat"] = [e.p_hat for e in estimates]
        table["mc_ci_low"] = [e.ci_low for e in estimates]
        table["mc_ci_high"] = [e.ci_high for e in estimates]
    summary = {"mu": list(mu_profile(poly, dists).values), "n_vars": poly.n, "q": poly.q, "checks": extra_checks}
    return table, summary


def _permanent_scenario(config: ExperimentConfig, constants: ConstantsConfig, threads: int | None):
    params = config.params
    n = int(params["n"])
    symmetric = bool(params.get("symmetric", False))
    dist = dists_from_json(params.get("dist", {"family": "rademacher"}), 1)[0]
    t_grid = [float(t) for t in params["t_grid"]]
    table = permanent_tail_table(n, dist, symmetric, config.samples, t_grid, config.seed, constants, threads)
    table["permanent_markov"] = [math.exp(permanent_markov(n, t, constants.R_main).log_bound) for t in t_grid]
    summary = {"n": n, "symmetric": symmetric, "entry_dist": dist.to_json(), "checks": {}}
    return table, summary


# ============================================================
# 不变量检查
# ============================================================

def bound_columns(table: pd.DataFrame) -> list[str]:
    return [c for c in table.columns if c not in _NON_BOUND_COLUMNS]


def check_invariants(table: pd.DataFrame) -> dict[str, Any]:
    """
    上界列不超过 1、随 λ 单调不增；有精确尾概率时上界不低于它。
    三者均计为违反项；仅 bblm 低于双侧精确尾概率时记为提示。

    Returns:
        {"violations": [...], "warnings": [...]}，违反项会导致退出码 2。
    """
    violations, warnings = [], []
    if "lambda" in table.columns:
        table = table.sort_values("lambda")
    for col in bound_columns(table):
        values = table[col].dropna().tolist()
        if any(v > 1.0 for v in values):
            violations.append(f"{col}: 上界超过 1")
        if any(b > a * (1 + 1e-12) for a, b in zip(values, values[1:])):
            violations.append(f"{col}: 随 λ 不单调")
        if "exact_tail" in table.columns:
            below = table[table[col] < table["exact_tail"] * (1 - 1e-12)]
            # bblm 为单侧不等式，与双侧精确尾概率比较仅作提示
            target = warnings if col == "bblm" else violations
            for _, row in below.iterrows():
                target.append(f"{col}: λ={row['lambda']:.6g} 上界 {row[col]:.6g} < 精确尾概率 {row['exact_tail']:.6g}")
    return {"violations": violations, "warnings": warnings}


# ============================================================
# 主流程
# ============================================================

def _write_manifest(path: Path, payload: dict[str, Any]) -> None:
    path.write_text(json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=True, default=str), encoding="utf-8")


def run_scenario(
    config: ExperimentConfig,
    threads: int | None = None,
    db: ArchiveDatabase | None = None,
    render_report: bool = True,
) -> ScenarioResult:
    """
    执行一个场景的完整流程。失败时写出 failure.json（已完成阶段 + 错误）后重新抛出。

    Raises:
        InvariantViolation: 上界低于精确尾概率等不变量被破坏。
        PolytailError: 其它已知错误。
    """
    start_time = time.time()
    config_hash = config.config_hash()
    out_dir = Path(config.output_dir) if config.output_dir else OUTPUT_DIR / f"{config.scenario}-{config_hash[:12]}"
    out_dir.mkdir(parents=True, exist_ok=True)
    stages: list[str] = []
    logger.info("=" * 60)
    logger.info("场景 %s 启动 | 配置 %s | 输出 %s", config.scenario, config_hash[:12], out_dir)
    logger.info("=" * 60)

    db = db or ArchiveDatabase()
    try:
        # --------------------------------------------------
        # 1. 初始化
        # --------------------------------------------------
        constants = load_constants(config.constants_path)
        _write_manifest(out_dir / "config.json", config.to_json())
        stages.append("init")

        # --------------------------------------------------
        # 2-4. 构造实例、μ 剖面与上界表
        # --------------------------------------------------
        logger.info("[阶段2] 构造实例并计算上界表...")
        if config.scenario == "permanent":
            table, summary = _permanent_scenario(config, constants, threads)
        else:
            table, summary = _poly_scenario(config, constants, threads)
        stages.append("bounds")
        logger.info("  上界表: %d 行, 列 %s", len(table), list(table.columns))

        # --------------------------------------------------
        # 5. 不变量检查
        # --------------------------------------------------
        logger.info("[阶段3] 不变量检查...")
        outcome = check_invariants(table)
        summary["invariants"] = outcome
        for msg in outcome["warnings"]:
            logger.warning("  %s", msg)
        stages.append("invariants")

        # --------------------------------------------------
        # 6. 写出与归档
        # --------------------------------------------------
        logger.info("[阶段4] 写出结果...")
        result = ScenarioResult(config, out_dir, table, summary, stages)
        table.to_csv(result.csv_path, index=False, float_format=FLOAT_FORMAT)
        summary["columns"] = list(table.columns)
        summary["config_hash"] = config_hash
        _write_manifest(out_dir / "summary.json", summary)
        status = "invariant_violation" if outcome["violations"] else "ok"
        db.insert_batch("scenario_runs", [{
            "scenario": config.scenario, "config_hash": config_hash, "output_path": str(result.csv_path),
            "status": status, "n_rows": len(table),
        }])
        stages.append("write")

        # --------------------------------------------------
        # 7. HTML 摘要
        # --------------------------------------------------
        if render_report:
            from polytail.reporter import ReportGenerator

            html = ReportGenerator(db).generate_html(out_dir)
            (out_dir / "report.html").write_text(html, encoding="utf-8")
            stages.append("report")

        if outcome["violations"]:
            for msg in outcome["violations"]:
                logger.error("  %s", msg)
            raise InvariantViolation(f"{len(outcome['violations'])} 处不变量被破坏，详见 {out_dir / 'summary.json'}")
    except InvariantViolation:
        raise
    except Exception as exc:
        logger.exception("场景 %s 失败", config.scenario)
        _write_manifest(out_dir / "failure.json", {
            "scenario": config.scenario, "config_hash": config_hash,
            "completed_stages": stages, "error": f"{type(exc).__name__}: {exc}",
        })
        db.insert_batch("scenario_runs", [{
            "scenario": config.scenario, "config_hash": config_hash, "output_path": str(out_dir),
            "status": "failed", "n_rows": 0,
        }])
        raise

    logger.info("场景完成 | 耗时: %.1f 秒", time.time() - start_time)
    return result


def main() -> None:
    """命令行入口。"""
    parser = argparse.ArgumentParser(description="多项式集中不等式工具箱 - 实验场景")
    parser.add_argument("config", help="场景配置 JSON")
    parser.add_argument("--threads", type=int, default=None, help="工作线程数上限")
    parser.add_argument("--no-report", action="store_true", help="跳过 HTML 摘要")
    args = parser.parse_args()

    logging.config.dictConfig(LOGGING_CONFIG)

    try:
        run_scenario(load_config(args.config), threads=args.threads, render_report=not args.no_report)
    except KeyboardInterrupt:
        logger.info("用户中断")
        sys.exit(1)
    except PolytailError as exc:
        sys.exit(exc.exit_code)
    except Exception:
        logger.exception("未捕获的异常")
        sys.exit(1)


if __name__ == "__main__":
    main()
