"""
尾概率上界求值器 - 主定理与各对比不等式，全部在对数空间中计算并截断到 1。

支持的定理编号见 THEOREM_IDS。
"""
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
import pandas as pd

from polytail.errors import BudgetExceeded, KimVuConditionViolated, MissingInput, NonFiniteSupport, ParameterError
from polytail.moments import (
    MarkovParameters,
    MarkovResult,
    best_even_k,
    central_moment,
    enumerate_outcomes,
    even_k_star,
    markov_optimize,
)
from polytail.poly import PoweredPolynomial
from polytail.rv import DistributionSpec, moment_bound_parameter
from polytail.settings import DEFAULT_CONSTANTS
from polytail.smoothness import MuProfile, mu_profile

logger = logging.getLogger(__name__)

THEOREM_IDS = (
    "main1special",
    "main1",
    "main2",
    "kimvu",
    "bblm",
    "hyper",
    "carbery_wright",
    "permanent",
    "permanent_symmetric",
    "cycles",
    "markov",
)

_REQUIRED: dict[str, tuple[str, ...]] = {
    "main1special": ("mu", "L", "q"),
    "main1": ("mu", "L", "q", "gamma"),
    "main2": ("mu", "L", "q", "gamma"),
    "kimvu": ("E", "n"),
    "bblm": ("mu", "q"),
    "hyper": ("variance", "q"),
    "carbery_wright": ("variance", "q"),
    "permanent": ("n",),
    "permanent_symmetric": ("n",),
    "cycles": ("n", "q"),
    "markov": ("mu", "L", "q", "gamma"),
}


@dataclass(frozen=True)
class ConstantsConfig:
    """各定理中的绝对常数，全部为正。"""

    R_main: float = DEFAULT_CONSTANTS["R_main"]
    Q_main2: float = DEFAULT_CONSTANTS["Q_main2"]
    R3_moment: float = DEFAULT_CONSTANTS["R3_moment"]
    R_hyper: float = DEFAULT_CONSTANTS["R_hyper"]
    R_bblm: float = DEFAULT_CONSTANTS["R_bblm"]
    R_cw: float = DEFAULT_CONSTANTS["R_cw"]
    c_perm: float = DEFAULT_CONSTANTS["c_perm"]
    c_cycles: float = DEFAULT_CONSTANTS["c_cycles"]

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not (isinstance(value, (int, float)) and value > 0 and math.isfinite(value)):
                raise ParameterError(f"常数 {f.name} 必须为有限正数: {value}")

    def to_json(self) -> dict[str, float]:
        return asdict(self)

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "ConstantsConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"未知常数: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})


def load_constants(path: str | Path | None) -> ConstantsConfig:
    """读取常数文件，未给出的键使用默认值。"""
    if path is None:
        return ConstantsConfig()
    with open(path, encoding="utf-8") as fh:
        return ConstantsConfig.from_json(json.load(fh))


@dataclass
class TailBoundReport:
    """一次上界求值结果。log_bound ≤ 0。"""

    theorem_id: str
    lam: float
    log_bound: float
    terms: dict[str, list[float]] = field(default_factory=dict)
    constants: dict[str, float] = field(default_factory=dict)
    k_star: int | None = None
    notes: list[str] = field(default_factory=list)
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def bound(self) -> float:
        return math.exp(self.log_bound)

    def to_json(self) -> dict[str, Any]:
        return {
            "theorem": self.theorem_id,
            "lambda": self.lam,
            "log_bound": self.log_bound,
            "bound": self.bound,
            "terms": self.terms,
            "constants": self.constants,
            "k_star": self.k_star,
            "notes": self.notes,
            **self.extra,
        }


# ============================================================
# 辅助
# ============================================================

def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def _mus(inputs: Mapping[str, Any]) -> list[float]:
    mu = inputs["mu"]
    return list(mu.values) if isinstance(mu, MuProfile) else [float(x) for x in mu]


def _neg_pow(log_base: float, exponent: float) -> float:
    """−exp(exponent·log_base)，底数为 0 时返回 0，无穷时返回 -inf。"""
    if log_base == -math.inf:
        return 0.0
    scaled = exponent * log_base
    return -math.exp(scaled) if scaled < 700 else -math.inf


def _e2_capped(values: Sequence[float]) -> float:
    return min(0.0, 2.0 + max(values, default=-math.inf))


def _require(theorem_id: str, inputs: Mapping[str, Any]) -> None:
    missing = [k for k in _REQUIRED[theorem_id] if inputs.get(k) is None]
    if missing:
        raise MissingInput(f"{theorem_id} 缺少输入: {missing}")


# ============================================================
# 主定理
# ============================================================

def _main_terms(lam: float, mus: list[float], q: int, L: float, gamma: float, R: float, power_of_R: str):
    """
    两族指数项（对数）：−λ²/(μ₀μ_r L^r Γ^r R^·) 与 −(λ/(μ_r L^r Γ^r R^·))^{1/r}。
    power_of_R 为 "r" 或 "q"。
    """
    sqrt_terms, power_terms = [], []
    log_lam = _log(lam)
    for r in range(1, q + 1):
        r_exp = r if power_of_R == "r" else q
        log_scale = _log(mus[r]) + r * (_log(L) + _log(gamma)) + r_exp * _log(R)
        if lam == 0:
            sqrt_terms.append(0.0)
            power_terms.append(0.0)
            continue
        sqrt_terms.append(_neg_pow(2 * log_lam - log_scale - _log(mus[0]), 1.0))
        power_terms.append(_neg_pow(log_lam - log_scale, 1.0 / r))
    return sqrt_terms, power_terms


def _main_bound(theorem_id: str, inputs: Mapping[str, Any], lam: float, constants: ConstantsConfig) -> TailBoundReport:
    mus = _mus(inputs)
    q, L = int(inputs["q"]), float(inputs["L"])
    if len(mus) < q + 1:
        raise ParameterError(f"μ 剖面长度 {len(mus)} 不足 q+1")
    if theorem_id == "main1special":
        gamma, R, placement, used = 1.0, constants.R_main, "r", {"R_main": constants.R_main}
    elif theorem_id == "main1":
        gamma, R, placement, used = float(inputs["gamma"]), constants.R_main, "q", {"R_main": constants.R_main}
    else:
        gamma = float(inputs["gamma"])
        R, placement = constants.Q_main2 ** (gamma + 1), "r"
        used = {"Q_main2": constants.Q_main2, "R": R}
    if lam == 0 or q == 0:
        log_bound = 0.0 if lam == 0 else -math.inf
        return TailBoundReport(theorem_id, lam, log_bound, {}, used)
    sqrt_terms, power_terms = _main_terms(lam, mus, q, L, gamma, R, placement)
    return TailBoundReport(
        theorem_id, lam, _e2_capped(sqrt_terms + power_terms),
        {"sqrt": sqrt_terms, "power": power_terms}, used,
    )


def threshold_form(inputs: Mapping[str, Any], tau: float, constants: ConstantsConfig) -> float:
    """
    main1 的阈值形式：偏差 max_r max{√(τμ₀μ_r L^rΓ^rR^q), τ^r μ_r L^rΓ^rR^q} 处概率至多 e²e^{−τ}。
    """
    mus = _mus(inputs)
    q, L = int(inputs["q"]), float(inputs["L"])
    gamma = float(inputs.get("gamma") or 1.0)
    R = constants.R_main
    best = 0.0
    for r in range(1, q + 1):
        scale = mus[r] * L**r * gamma**r * R**q
        best = max(best, math.sqrt(tau * mus[0] * scale), tau**r * scale)
    return best


# ============================================================
# Kim–Vu
# ============================================================

def kimvu_constants(q: int) -> tuple[float, float]:
    """c_q = q^{q/2}, d_q = q^q。"""
    return float(q) ** (q / 2.0), float(q) ** q


def _kimvu(inputs: Mapping[str, Any], lam: float) -> TailBoundReport:
    E = [float(x) for x in inputs["E"]]
    n = int(inputs["n"])
    q = len(E) - 1
    if q < 1:
        raise ParameterError("E 向量至少需要两个分量")
    if any(E[j] < E[j + 1] for j in range(q)) or E[q] != 1.0:
        raise ParameterError("E 向量必须非增且 E_q = 1")
    mu = inputs.get("mu")
    if mu is not None:
        mus = list(mu.values) if isinstance(mu, MuProfile) else list(mu)
        for j in range(min(len(mus), q + 1)):
            if E[j] < mus[j]:
                raise KimVuConditionViolated(1, j, f"条件 (1) 不成立: E_{j}={E[j]:.6g} < μ_{j}={mus[j]:.6g}")
    for j in range(q):
        need = lam + 4 * j * math.log(n)
        if E[j] / E[j + 1] < need:
            raise KimVuConditionViolated(2, j, f"条件 (2) 不成立: E_{j}/E_{j + 1}={E[j] / E[j + 1]:.6g} < {need:.6g}")
    c_q, d_q = kimvu_constants(q)
    threshold = c_q * math.sqrt(lam * E[0] * E[1])
    log_bound = min(0.0, math.log(d_q) - lam / 4.0)
    return TailBoundReport(
        "kimvu", lam, log_bound, {"exponent": [-lam / 4.0]}, {"c_q": c_q, "d_q": d_q},
        extra={"threshold": threshold},
    )


def kimvu_dominance(E: Sequence[float], mu: MuProfile | Sequence[float], lam: float) -> tuple[float, float]:
    """
    (c_q√(λE₀E₁), max_r max(√(λμ₀μ_r), λ^r μ_r))；当 E_j ≥ μ_j 且条件成立时左边不小于右边。
    """
    mus = list(mu.values) if isinstance(mu, MuProfile) else list(mu)
    q = len(E) - 1
    c_q, _ = kimvu_constants(q)
    lhs = c_q * math.sqrt(lam * E[0] * E[1])
    rhs = max(max(math.sqrt(lam * mus[0] * mus[r]), lam**r * mus[r]) for r in range(1, q + 1))
    return lhs, rhs


# ============================================================
# 其它对比不等式
# ============================================================

def _bblm(inputs: Mapping[str, Any], lam: float, constants: ConstantsConfig) -> TailBoundReport:
    """单侧：exp(−(1/(Rq))·min_r min{(λ²/(16q²μ₀μ_r))^{1/r}, (λ/(4qμ_r))^{1/r}})。"""
    mus = _mus(inputs)
    q = int(inputs["q"])
    R = constants.R_bblm
    used = {"R_bblm": R}
    if lam == 0 or q == 0:
        return TailBoundReport("bblm", lam, 0.0 if lam == 0 else -math.inf, {}, used)
    sqrt_terms, power_terms = [], []
    for r in range(1, q + 1):
        a = _neg_pow(2 * math.log(lam) - math.log(16 * q * q) - _log(mus[0]) - _log(mus[r]), 1.0 / r)
        b = _neg_pow(math.log(lam) - math.log(4 * q) - _log(mus[r]), 1.0 / r)
        sqrt_terms.append(a / (R * q))
        power_terms.append(b / (R * q))
    log_bound = min(0.0, max(sqrt_terms + power_terms))
    return TailBoundReport("bblm", lam, log_bound, {"sqrt": sqrt_terms, "power": power_terms}, used,
                           notes=["one-sided"])


def _variance_bound(theorem_id: str, inputs: Mapping[str, Any], lam: float, constants: ConstantsConfig) -> TailBoundReport:
    var = float(inputs["variance"])
    q = int(inputs["q"])
    if theorem_id == "hyper":
        R, used = constants.R_hyper, {"R_hyper": constants.R_hyper}
    else:
        R, used = constants.R_cw, {"R_cw": constants.R_cw}
    if lam == 0:
        return TailBoundReport(theorem_id, lam, 0.0, {}, used)
    if q == 0 or var <= 0:
        return TailBoundReport(theorem_id, lam, -math.inf, {}, used)
    if theorem_id == "hyper":
        term = _neg_pow(2 * math.log(lam) - math.log(R) - math.log(var), 1.0 / q)
    else:
        term = _neg_pow(math.log(lam) - math.log(R) - 0.5 * math.log(var), 1.0 / q)
    return TailBoundReport(theorem_id, lam, _e2_capped([term]), {"exponent": [term]}, used)


def _permanent(theorem_id: str, inputs: Mapping[str, Any], lam: float, constants: ConstantsConfig) -> TailBoundReport:
    """max{e^{−n}, e² e^{−c t^{2/n}}}，λ = t√n!。"""
    n = int(inputs["n"])
    t = float(inputs["t"]) if inputs.get("t") is not None else lam / math.sqrt(math.factorial(n))
    c = constants.c_perm
    if t == 0:
        return TailBoundReport(theorem_id, lam, 0.0, {}, {"c_perm": c}, extra={"t": t})
    term = 2.0 - c * t ** (2.0 / n)
    return TailBoundReport(
        theorem_id, lam, min(0.0, max(-float(n), term)), {"exponent": [term], "floor": [-float(n)]},
        {"c_perm": c}, extra={"t": t},
    )


def cycles_epsilon(n: int, q: int) -> float:
    """由 q = ε·ln n / ln ln n 反解 ε。"""
    return q * math.log(math.log(n)) / math.log(n)


def _cycles(inputs: Mapping[str, Any], lam: float, constants: ConstantsConfig) -> TailBoundReport:
    """e² e^{−c λ^{1/q} log^{1/ε} n}。"""
    n, q = int(inputs["n"]), int(inputs["q"])
    eps = float(inputs["eps"]) if inputs.get("eps") is not None else cycles_epsilon(n, q)
    notes = []
    if not 0 < eps < 1:
        notes.append(f"epsilon={eps:.6g} outside (0,1)")
        logger.warning("环定理参数 ε=%.4g 不在 (0,1) 内，上界仅作参考", eps)
    c = constants.c_cycles
    if lam == 0:
        return TailBoundReport("cycles", lam, 0.0, {}, {"c_cycles": c}, notes=notes, extra={"eps": eps})
    term = -c * lam ** (1.0 / q) * math.exp(math.log(math.log(n)) / eps)
    return TailBoundReport("cycles", lam, _e2_capped([term]), {"exponent": [term]}, {"c_cycles": c},
                           notes=notes, extra={"eps": eps})


def markov_bound(inputs: Mapping[str, Any], lam: float, constants: ConstantsConfig) -> TailBoundReport:
    """矩引理 + Markov：k* 取 (K−2, K] 内最大偶数。"""
    variant = inputs.get("variant") or "general"
    used = {"R3_moment": constants.R3_moment}
    if lam == 0:
        return TailBoundReport("markov", lam, 0.0, {}, used, k_star=None)
    params = MarkovParameters(int(inputs["q"]), float(inputs["gamma"]), float(inputs["L"]),
                              tuple(_mus(inputs)), variant, constants.R3_moment)
    result = markov_optimize(params, lam)
    return TailBoundReport("markov", lam, result.log_bound, {}, used, k_star=result.k_star,
                           extra={"K": result.K, "variant": variant})


# ============================================================
# 统一入口
# ============================================================

def evaluate_bound(
    theorem_id: str,
    inputs: Mapping[str, Any],
    lam: float,
    constants: ConstantsConfig | None = None,
) -> TailBoundReport:
    """
    按定理编号求值尾概率上界。

    Args:
        theorem_id: THEOREM_IDS 之一。
        inputs: 该定理需要的符号（mu/L/q/gamma、E/n、variance、n/t、n/q/eps）。
        lam: 偏差 λ ≥ 0。
        constants: 绝对常数，缺省为默认值。

    Returns:
        TailBoundReport。

    Raises:
        MissingInput: 缺少所需符号。
        KimVuConditionViolated: Kim–Vu 条件不成立。
    """
    if theorem_id not in THEOREM_IDS:
        raise ParameterError(f"未知定理编号: {theorem_id}")
    if lam < 0:
        raise ParameterError(f"λ 必须非负: {lam}")
    constants = constants or ConstantsConfig()
    _require(theorem_id, inputs)
    if theorem_id in ("main1special", "main1", "main2"):
        return _main_bound(theorem_id, inputs, lam, constants)
    if theorem_id == "kimvu":
        if lam == 0:
            return TailBoundReport("kimvu", lam, 0.0)
        return _kimvu(inputs, lam)
    if theorem_id == "bblm":
        return _bblm(inputs, lam, constants)
    if theorem_id in ("hyper", "carbery_wright"):
        return _variance_bound(theorem_id, inputs, lam, constants)
    if theorem_id in ("permanent", "permanent_symmetric"):
        return _permanent(theorem_id, inputs, lam, constants)
    if theorem_id == "cycles":
        return _cycles(inputs, lam, constants)
    return markov_bound(inputs, lam, constants)


# ============================================================
# Markov 路径（积和式 / 环计数）
# ============================================================

def permanent_markov(n: int, t: float, R: float) -> MarkovResult:
    """
    积和式的矩 + Markov 路径：E|P|^k ≤ R^{nk} k^{nk/2} n^{nk/2}，
    K = (λ/e)^{2/n}/(R² n)，λ = t√n!；在 2..k*(K) 的偶数上取最小值，
    λ > e R^n n^n 时候选阶数为 2..n 的偶数与 n 本身。
    """
    if t <= 0:
        raise ParameterError("t 必须为正")
    log_lam = math.log(t) + 0.5 * math.lgamma(n + 1)

    def log_moment(ks: np.ndarray) -> np.ndarray:
        ks = ks.astype(float)
        return n * ks * math.log(R) + 0.5 * n * ks * (np.log(ks) + math.log(n))

    if log_lam > 1.0 + n * math.log(R) + n * math.log(n):
        K = math.inf
        k_star, log_bound = best_even_k(log_moment, n, log_lam, extra=(n,))
    else:
        K = math.exp((2.0 / n) * (log_lam - 1.0) - 2 * math.log(R) - math.log(n))
        k_star, log_bound = best_even_k(log_moment, even_k_star(K), log_lam)
    return MarkovResult(k_star, min(0.0, log_bound), K)


def cycles_markov(n: int, q: int, lam: float, R: float) -> MarkovResult:
    """
    环计数的不中心化矩 + Markov 路径：
    E[X^k] ≤ (R^q k^q / n)^k · max_{q≤ℓ≤qk} (ln n / k)^ℓ，K = (λn/e)^{1/q}/R；
    在 2..k*(K) 的偶数上取最小值。
    """
    if lam <= 0:
        raise ParameterError("λ 必须为正")
    K = math.exp((math.log(lam) + math.log(n) - 1.0) / q - math.log(R))
    log_log_n = math.log(math.log(n))

    def log_moment(ks: np.ndarray) -> np.ndarray:
        ks = ks.astype(float)
        ratio = log_log_n - np.log(ks)
        ell = np.where(ratio <= 0, q, q * ks)
        return ks * (q * math.log(R) + q * np.log(ks) - math.log(n)) + ell * ratio

    k_star, log_bound = best_even_k(log_moment, even_k_star(K), math.log(lam))
    return MarkovResult(k_star, min(0.0, log_bound), K)


# ============================================================
# 对比表
# ============================================================

def common_L(dists: Sequence[DistributionSpec]) -> float:
    """所有变量共用的矩有界参数（取最大值）。"""
    return max((moment_bound_parameter(d) for d in dists), default=1.0)


def applicable_theorems(poly: PoweredPolynomial, dists: Sequence[DistributionSpec]) -> list[str]:
    """根据多项式与分布族判断哪些定理适用。"""
    families = {d.family for d in dists}
    nonneg = all(float(w) >= 0 for w in poly.weights())
    ids = []
    if poly.multilinear and nonneg:
        ids.append("main1special")
    ids += ["main1", "main2", "markov"]
    if poly.multilinear and families <= {"bernoulli"}:
        ids.append("bblm")
    centered_gauss = all(d.family == "normal" and d.param("mean") == 0 for d in dists)
    if families <= {"rademacher"} or centered_gauss:
        ids.append("hyper")
    if families <= {"normal", "uniform", "exponential"}:
        ids.append("carbery_wright")
    return ids


def bound_inputs(poly: PoweredPolynomial, dists: Sequence[DistributionSpec], variance: float | None = None) -> dict[str, Any]:
    """构造 evaluate_bound 的输入字典。"""
    profile = mu_profile(poly, dists)
    needs_variance = {"hyper", "carbery_wright"} & set(applicable_theorems(poly, dists))
    if variance is None and poly.q > 0 and needs_variance:
        variance = central_moment(poly, dists, 2)
    return {
        "mu": profile,
        "L": common_L(dists),
        "q": poly.q,
        "gamma": float(poly.gamma),
        "variance": variance or 0.0,
        "n": poly.n,
    }


def compare_bounds(
    poly: PoweredPolynomial,
    dists: Sequence[DistributionSpec],
    lam_grid: Sequence[float],
    constants: ConstantsConfig | None = None,
    kimvu_E: Sequence[float] | None = None,
) -> pd.DataFrame:
    """
    每个 λ 一行：所有适用上界，以及实例足够小时的精确尾概率。

    Returns:
        DataFrame，列为 lambda、exact_tail（可选）与各定理编号。
    """
    constants = constants or ConstantsConfig()
    inputs = bound_inputs(poly, dists)
    theorem_ids = applicable_theorems(poly, dists)
    if kimvu_E is not None:
        inputs["E"] = list(kimvu_E)

    table = None
    try:
        table = enumerate_outcomes(poly, dists)
    except (NonFiniteSupport, BudgetExceeded) as exc:
        logger.info("实例不适合全支撑枚举，省略 exact_tail 列: %s", exc)

    rows = []
    for lam in lam_grid:
        row: dict[str, Any] = {"lambda": float(lam)}
        if table is not None:
            row["exact_tail"] = table.tail(lam)
        for tid in theorem_ids:
            row[tid] = evaluate_bound(tid, inputs, lam, constants).bound
        if kimvu_E is not None:
            try:
                report = evaluate_bound("kimvu", inputs, lam, constants)
                row["kimvu"] = report.bound
            except KimVuConditionViolated:
                row["kimvu"] = float("nan")
        rows.append(row)
    return pd.DataFrame(rows)
