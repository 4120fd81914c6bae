"""
命令行前端 - 子命令：mu, bound, compare, moment, tail-mc, tail-exact, census, lowerbound,
perm, cycles, check-rv, run, calibrate, report。

JSON 结果写到标准输出（键排序，重复运行字节一致），CSV 写到 --out 或标准输出。
退出码：0 成功，2 不变量被破坏，3 超出预算，1 其它错误。

用法：
    python -m polytail mu --poly f.json --dists d.json --r 2
    python -m polytail --seed 7 tail-mc --poly f.json --dists d.json --lambda 3 --samples 100000
    python -m polytail run scenario.json
"""
import argparse
import json
import logging
import logging.config
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import pandas as pd

from polytail import census as census_mod
from polytail import lowerbounds, mc, moments, rv, smoothness, suite, tailbounds
from polytail.database import ArchiveDatabase, census_rows
from polytail.errors import InvariantViolation, ParameterError, PolytailError
from polytail.poly import PoweredPolynomial, cycle_count_through_vertex, cycles_poly, expectation, gnp_cycle_dists, load_poly
from polytail.settings import BUDGETS, LOGGING_CONFIG

logger = logging.getLogger("polytail.cli")


# ============================================================
# 输出辅助
# ============================================================

def _jsonable(value: Any) -> Any:
    if isinstance(value, Fraction):
        return float(value)
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "item"):
        return value.item()
    return value


def emit_json(payload: Any) -> None:
    sys.stdout.write(json.dumps(_jsonable(payload), indent=2, sort_keys=True, ensure_ascii=False) + "\n")


def emit_csv(df: pd.DataFrame, out: str | None) -> None:
    if out:
        df.to_csv(out, index=False, float_format="%.17g")
        logger.info("已写出 %s (%d 行)", out, len(df))
    else:
        df.to_csv(sys.stdout, index=False, float_format="%.17g")


def _parse_grid(text: str) -> list[float]:
    """逗号分隔的数值列表，或 start:stop:num 线性网格。"""
    if ":" in text:
        start, stop, num = text.split(":")
        num = int(num)
        if num < 2:
            return [float(start)]
        step = (float(stop) - float(start)) / (num - 1)
        return [float(start) + i * step for i in range(num)]
    return [float(x) for x in text.split(",") if x.strip()]


def _apply_budget(items: Sequence[str] | None) -> None:
    """--budget key=value 覆盖 BUDGETS。"""
    for item in items or []:
        key, _, raw = item.partition("=")
        if key not in BUDGETS or not raw:
            raise ParameterError(f"未知预算项或缺少取值: {item}")
        BUDGETS[key] = int(float(raw))


def _load_instance(args: argparse.Namespace) -> tuple[PoweredPolynomial, list[rv.DistributionSpec]]:
    poly = load_poly(args.poly)
    return poly, rv.load_dists(args.dists, poly.n)


def _require_seed(args: argparse.Namespace) -> int:
    if args.seed is None:
        raise ParameterError("该子命令需要显式 --seed")
    return args.seed


# ============================================================
# 子命令
# ============================================================

def cmd_mu(args: argparse.Namespace) -> int:
    poly, dists = _load_instance(args)
    if args.r is None:
        emit_json(smoothness.mu_profile(poly, dists).to_json())
        return 0
    value, witness = smoothness.mu(poly, dists, args.r)
    emit_json({"r": args.r, "value": value, "witness": witness.to_json() if witness is not None else None})
    return 0


def cmd_bound(args: argparse.Namespace) -> int:
    poly, dists = _load_instance(args)
    inputs = tailbounds.bound_inputs(poly, dists)
    if args.kimvu_e:
        inputs["E"] = _parse_grid(args.kimvu_e)
    if args.variant:
        inputs["variant"] = args.variant
    report = tailbounds.evaluate_bound(args.theorem, inputs, args.lam, args.constants_config)
    emit_json(report.to_json())
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    poly, dists = _load_instance(args)
    kimvu_e = _parse_grid(args.kimvu_e) if args.kimvu_e else None
    table = tailbounds.compare_bounds(poly, dists, _parse_grid(args.lam_grid), args.constants_config, kimvu_e)
    emit_csv(table, args.out)
    if "exact_tail" in table.columns:
        from polytail.run_scenario import check_invariants

        outcome = check_invariants(table)
        if outcome["violations"]:
            for msg in outcome["violations"]:
                logger.error("%s", msg)
            return InvariantViolation.exit_code
    return 0


def cmd_moment(args: argparse.Namespace) -> int:
    poly, dists = _load_instance(args)
    payload: dict[str, Any] = {"k": args.k, "central": args.central, "oracle": args.oracle}
    if args.oracle == "enum":
        table = moments.enumerate_outcomes(poly, dists, exact=args.exact)
        payload["value"] = table.abs_central_moment(args.k) if args.central else table.raw_moment(args.k)
        payload["mean"] = table.mean
    elif args.central:
        payload["value"] = moments.central_moment(poly, dists, args.k, exact=args.exact)
    else:
        payload["value"] = moments.exact_moment_expansion(poly, dists, args.k, exact=args.exact)
    if args.k % 2 == 0 and args.k >= 2:
        mus = smoothness.mu_profile(poly, dists)
        L = tailbounds.common_L(dists)
        variant = args.variant or "general"
        log_bound = moments.moment_lemma_bound(poly.q, float(poly.gamma), L, list(mus.values), args.k,
                                               variant, args.constants_config.R3_moment)
        payload["lemma_log_bound"] = log_bound
        payload["lemma_variant"] = variant
    if args.central and args.k == 2:
        try:
            payload["second_moment_check"] = moments.elementary_second_moment(poly, dists)
        except ParameterError as exc:
            logger.debug("跳过二阶矩检查: %s", exc)
    emit_json(payload)
    return 0


def cmd_tail_mc(args: argparse.Namespace) -> int:
    poly, dists = _load_instance(args)
    estimate = mc.estimate_tail(poly, dists, args.lam, args.samples, _require_seed(args),
                                direction=args.direction, threads=args.threads)
    emit_json(estimate.to_json())
    return 0


def cmd_tail_exact(args: argparse.Namespace) -> int:
    poly, dists = _load_instance(args)
    table = moments.enumerate_outcomes(poly, dists, exact=args.exact)
    emit_json({
        "lambda": args.lam,
        "mean": table.mean,
        "tail_two_sided": table.tail(args.lam),
        "tail_upper": table.tail(args.lam, "upper"),
        "support_size": len(table.values),
    })
    return 0


def cmd_census(args: argparse.Namespace) -> int:
    result = census_mod.run_census(args.k, args.l, args.q, args.eta, args.gamma)
    table = census_mod.census_table(result)
    if args.dump:
        table.to_csv(args.dump, index=False, float_format="%.17g")
    if args.archive:
        ArchiveDatabase().insert_batch("census_records", census_rows(result))
    emit_json({
        "k": result.k, "l": result.ell, "q": result.q, "eta": result.eta, "gamma": result.gamma,
        "n_graphs": result.n_graphs, "n_classes": len(result.records),
        "max_implied_R0": result.max_implied_R0, "ok": result.ok,
        "failures": {"nu0": result.nu0_failures, "ziq1": result.ziq1_failures,
                     "facts": result.fact_failures, "s0": result.s0_failures},
    })
    return 0 if result.ok else InvariantViolation.exit_code


def cmd_lowerbound(args: argparse.Namespace) -> int:
    with open(args.mustar, encoding="utf-8") as fh:
        mu_star = [float(x) for x in json.load(fh)]
    instance = lowerbounds.construct_thm_LB(args.q, mu_star, args.lam)
    report = lowerbounds.certify(instance)
    emit_json({"instance": instance.to_json(), "certification": report})
    ok = report["lower_bound_holds"] and report["case_bound_holds"] and report["caps"]["ok"]
    return 0 if ok else InvariantViolation.exit_code


def cmd_perm(args: argparse.Namespace) -> int:
    with open(args.dist, encoding="utf-8") as fh:
        dist = rv.dists_from_json(json.load(fh), 1)[0]
    table = mc.permanent_tail_table(args.n, dist, args.symmetric, args.samples, _parse_grid(args.t_grid),
                                    _require_seed(args), args.constants_config, args.threads)
    table["permanent_markov"] = [
        math.exp(tailbounds.permanent_markov(args.n, t, args.constants_config.R_main).log_bound) for t in table["t"]
    ]
    emit_csv(table, args.out)
    return 0


def cmd_cycles(args: argparse.Namespace) -> int:
    n, q = args.n, args.q
    p = args.p if args.p is not None else math.log(n) / n
    poly = cycles_poly(n, q)
    dists = gnp_cycle_dists(n, p)
    profile = smoothness.mu_profile(poly, dists)
    count = cycle_count_through_vertex(n, q)
    payload: dict[str, Any] = {
        "n": n, "q": q, "p": p, "term_count": count, "n_terms": len(poly),
        "mean": expectation(poly, dists), "mean_closed_form": count * p**q, "mu": list(profile.values),
        "epsilon": args.eps if args.eps is not None else tailbounds.cycles_epsilon(n, q),
    }
    if args.lam_grid:
        rows = []
        for lam in _parse_grid(args.lam_grid):
            bound = tailbounds.evaluate_bound("cycles", {"n": n, "q": q, "eps": args.eps}, lam, args.constants_config)
            markov = tailbounds.cycles_markov(n, q, lam, args.constants_config.R_main) if lam > 0 else None
            rows.append({"lambda": lam, "cycles": bound.bound,
                         "cycles_markov": math.exp(markov.log_bound) if markov else 1.0,
                         "k_star": markov.k_star if markov else None})
        payload["bounds"] = rows
    emit_json(payload)
    return 0


def cmd_check_rv(args: argparse.Namespace) -> int:
    with open(args.dist, encoding="utf-8") as fh:
        dist = rv.dists_from_json(json.load(fh), 1)[0]
    if args.L is not None:
        report = rv.check_moment_bounded(dist, args.L, args.i_max)
    else:
        report = rv.certify(dist, args.i_max)
    payload = report.to_json()
    payload["factorial"] = [
        {"i": i, "log_lhs": lhs, "log_rhs": rhs}
        for i, lhs, rhs in rv.factorial_moment_check(dist, report.L, args.i_max)
    ]
    emit_json(payload)
    return 0 if report.holds else InvariantViolation.exit_code


def cmd_run(args: argparse.Namespace) -> int:
    from polytail.run_scenario import load_config, run_scenario

    config = load_config(args.config)
    if args.constants and config.constants_path is None:
        config.constants_path = args.constants
    result = run_scenario(config, threads=args.threads, render_report=not args.no_report)
    logger.info("结果: %s", result.csv_path)
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    report = suite.calibrate()
    drift = report.drift(args.constants_config)
    if drift:
        logger.warning("常数与套件推荐值不一致: %s", drift)
    if args.archive:
        ArchiveDatabase().insert_batch("calibration_runs", report.rows())
    if args.out:
        Path(args.out).write_text(json.dumps(report.recommended(), indent=2, sort_keys=True), encoding="utf-8")
    emit_json({"suite_hash": report.suite_hash, "n_instances": report.n_instances,
               "implied": report.implied, "worst": report.worst, "recommended": report.recommended(),
               "drift": {k: list(v) for k, v in drift.items()}})
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    from polytail.reporter import ReportGenerator

    html = ReportGenerator(ArchiveDatabase()).generate_html(args.dir)
    out = Path(args.out) if args.out else Path(args.dir) / "report.html"
    out.write_text(html, encoding="utf-8")
    logger.info("HTML 摘要已写出: %s", out)
    return 0


# ============================================================
# 参数解析
# ============================================================

def _add_instance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--poly", required=True, help="多项式 JSON")
    p.add_argument("--dists", required=True, help="分布 JSON（列表，或单个对象广播）")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polytail", description="多项式集中不等式工具箱")
    parser.add_argument("--seed", type=int, default=None, help="随机种子（蒙特卡洛子命令必填）")
    parser.add_argument("--threads", type=int, default=None, help="工作线程数上限（优先于 POLYTAIL_THREADS）")
    parser.add_argument("--constants", default=None, help="常数 JSON，逐键覆盖默认值")
    parser.add_argument("--budget", action="append", metavar="KEY=VALUE", help="覆盖计算预算，可重复")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mu", help="μ_r 或整条 μ 剖面")
    _add_instance_args(p)
    p.add_argument("--r", type=int, default=None)
    p.set_defaults(func=cmd_mu)

    p = sub.add_parser("bound", help="单个定理在单个 λ 上的上界")
    _add_instance_args(p)
    p.add_argument("--theorem", required=True, choices=tailbounds.THEOREM_IDS)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--kimvu-e", default=None, help="Kim–Vu 的 E_0,…,E_q，逗号分隔")
    p.add_argument("--variant", choices=("general", "gamma_variant"), default=None)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("compare", help="λ 网格上所有适用上界的对比 CSV")
    _add_instance_args(p)
    p.add_argument("--lambda-grid", dest="lam_grid", required=True, help="逗号分隔或 start:stop:num")
    p.add_argument("--kimvu-e", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("moment", help="精确矩（展开或全支撑枚举）")
    _add_instance_args(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--central", action="store_true")
    p.add_argument("--oracle", choices=("enum", "expand"), default="expand")
    p.add_argument("--exact", action="store_true", help="有理数精确模式")
    p.add_argument("--variant", choices=("general", "gamma_variant"), default=None)
    p.set_defaults(func=cmd_moment)

    p = sub.add_parser("tail-mc", help="蒙特卡洛尾概率")
    _add_instance_args(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--direction", choices=mc.DIRECTIONS, default="two_sided")
    p.set_defaults(func=cmd_tail_mc)

    p = sub.add_parser("tail-exact", help="全支撑枚举的精确尾概率")
    _add_instance_args(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--exact", action="store_true")
    p.set_defaults(func=cmd_tail_exact)

    p = sub.add_parser("census", help="S₂ 超图普查")
    for name in ("k", "l", "q", "eta", "gamma"):
        p.add_argument(f"--{name}", type=int, required=True)
    p.add_argument("--dump", default=None, help="普查 CSV 输出路径")
    p.add_argument("--archive", action="store_true", help="写入归档库")
    p.set_defaults(func=cmd_census)

    p = sub.add_parser("lowerbound", help="构造并校验下界实例")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--mustar", required=True, help="μ*_0..μ*_q 的 JSON 数组")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.set_defaults(func=cmd_lowerbound)

    p = sub.add_parser("perm", help="随机矩阵积和式的经验尾概率")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dist", required=True, help="元素分布 JSON（单个对象）")
    p.add_argument("--symmetric", action="store_true")
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--t-grid", dest="t_grid", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_perm)

    p = sub.add_parser("cycles", help="G(n,p) 中经过固定顶点的 q-环计数")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=int, default=3)
    p.add_argument("--p", type=float, default=None, help="默认 ln n / n")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--lambda-grid", dest="lam_grid", default=None)
    p.set_defaults(func=cmd_cycles)

    p = sub.add_parser("check-rv", help="矩有界性检查")
    p.add_argument("--dist", required=True)
    p.add_argument("--L", type=float, default=None, help="待检查的 L，缺省使用分布族自身的值")
    p.add_argument("--i-max", dest="i_max", type=int, default=20)
    p.set_defaults(func=cmd_check_rv)

    p = sub.add_parser("run", help="执行场景文件")
    p.add_argument("config")
    p.add_argument("--no-report", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("calibrate", help="在冻结套件上校准常数")
    p.add_argument("--archive", action="store_true")
    p.add_argument("--out", default=None, help="推荐常数 JSON 输出路径")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("report", help="为已完成的场景目录生成 HTML 摘要")
    p.add_argument("dir")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    """解析参数并执行子命令，返回退出码。"""
    args = build_parser().parse_args(argv)
    try:
        _apply_budget(args.budget)
        args.constants_config = tailbounds.load_constants(args.constants)
        return args.func(args)
    except PolytailError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    except KeyboardInterrupt:
        logger.info("用户中断")
        return 1
    except Exception:
        logger.exception("未捕获的异常")
        return 1


def main() -> None:
    logging.config.dictConfig(LOGGING_CONFIG)
    sys.exit(run())


if __name__ == "__main__":
    main()
