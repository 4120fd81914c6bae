"""
下界构造 - 构造尾概率下界的紧实例（0/1 变量上的非负多项式），并用精确二项分布计算验证。

实例的取值分布总是 "二项基底 × 若干对称线性因子" 的乘积形式，
因此尾概率可以不经采样地精确计算。
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.special import logsumexp
from scipy.stats import binom

from polytail.errors import BudgetExceeded, ParameterError, SizeLimit
from polytail.poly import PoweredHyperedge, PoweredPolynomial, complete_multilinear, linear, product, scale
from polytail.rv import DistributionSpec, bernoulli
from polytail.settings import BUDGETS, TOLERANCES
from polytail.smoothness import mu_profile, product_profile

logger = logging.getLogger(__name__)

CASE_IDS = ("lb_one_small", "lb_one_large", "lb_two", "lifted")
_TAIL_WINDOW = 4096
_CEIL_TOL = 1e-9


# ============================================================
# 二项分布工具
# ============================================================

def log_binom_sf(k0: int, n: int, p: float) -> float:
    """
    ln Pr[Bin(n, p) ≥ k0]，在对数空间逐块累加 pmf，极小尾概率不下溢。
    """
    if k0 <= 0:
        return 0.0
    if k0 > n or p <= 0.0:
        return -math.inf
    if p >= 1.0:
        return 0.0
    if k0 <= n * p:
        return math.log(binom.sf(k0 - 1, n, p))
    parts = []
    start = k0
    while start <= n:
        ks = np.arange(start, min(n, start + _TAIL_WINDOW - 1) + 1)
        logs = binom.logpmf(ks, n, p)
        parts.append(float(logsumexp(logs)))
        # 众数之后 pmf 单调递减，块尾已可忽略时停止
        if logs[-1] < max(parts) - 40.0:
            break
        start += _TAIL_WINDOW
    return float(logsumexp(parts))


def _ceil(x: float) -> int:
    return math.ceil(x - _CEIL_TOL)


@dataclass(frozen=True)
class BinomialTailCheck:
    log_lhs: float
    log_rhs: float

    @property
    def holds(self) -> bool:
        return self.log_lhs >= self.log_rhs


def binom_tail_lb(mu: float, lam: float, n: int) -> BinomialTailCheck:
    """
    Z ~ Bin(n, μ/n) 时 Pr[Z ≥ EZ + λ] 与 e^{−100−λ²/μ} 的对数比较。

    Raises:
        ParameterError: μ < 27、λ 不在 (0, μ] 或 n < μ。
    """
    if mu < 27:
        raise ParameterError(f"二项尾下界需要 μ ≥ 27: {mu}")
    if not 0 < lam <= mu:
        raise ParameterError(f"需要 0 < λ ≤ μ: λ={lam}, μ={mu}")
    if n < mu:
        raise ParameterError(f"需要 n ≥ μ: n={n}, μ={mu}")
    lhs = log_binom_sf(_ceil(mu + lam), n, mu / n)
    return BinomialTailCheck(lhs, -100.0 - lam * lam / mu)


def pmf_lower_bound_check(n: int, p: float, c: int) -> BinomialTailCheck:
    """精确 ln Pr[Bin(n,p) = c] 与 −2np + c·ln(np/c) 的比较（p ≤ 1/2）。"""
    if not 0 < p <= 0.5:
        raise ParameterError(f"需要 0 < p ≤ 1/2: {p}")
    if not 0 <= c <= n:
        raise ParameterError(f"需要 0 ≤ c ≤ n: c={c}, n={n}")
    rhs = -2 * n * p + (c * math.log(n * p / c) if c > 0 else 0.0)
    return BinomialTailCheck(float(binom.logpmf(c, n, p)), rhs)


# ============================================================
# 实例
# ============================================================

@dataclass(frozen=True)
class BinomialBase:
    """
    二项基底。kind="complete": μ*·C(S, q)，S ~ Bin(m, p)；
    kind="blocks": μ*·S，S ~ Bin(m, p^q)（m 个互不相交的 q 元块）。
    """

    kind: str
    q: int
    weight: float
    m: int
    p: float

    @property
    def n_vars(self) -> int:
        return self.m if self.kind == "complete" else self.m * self.q

    @property
    def count_p(self) -> float:
        return self.p if self.kind == "complete" else self.p ** self.q

    def values(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s)
        if self.kind == "complete":
            return self.weight * np.array([math.comb(int(x), self.q) for x in s], dtype=float)
        return self.weight * s.astype(float)

    def mean(self) -> float:
        if self.kind == "complete":
            return self.weight * math.comb(self.m, self.q) * self.p ** self.q
        return self.weight * self.m * self.p ** self.q

    def min_count(self, threshold: float) -> int:
        """基底取值 ≥ threshold 所需的最小 S。"""
        if threshold <= 0:
            return 0
        target = threshold / self.weight
        if self.kind == "blocks":
            return _ceil(target)
        s = self.q
        while s <= self.m and math.comb(s, self.q) < target * (1 - _CEIL_TOL):
            s += 1
        return s

    def mu_profile(self) -> list[float]:
        if self.kind == "complete":
            return [self.weight * math.comb(self.m - j, self.q - j) * self.p ** (self.q - j) for j in range(self.q + 1)]
        return [self.mean()] + [self.weight * self.p ** (self.q - j) for j in range(1, self.q + 1)]

    def polynomial(self) -> PoweredPolynomial:
        if self.kind == "complete":
            return complete_multilinear(self.m, self.q, self.weight)
        ones = (1,) * self.q
        terms = [(PoweredHyperedge(tuple(range(b * self.q, (b + 1) * self.q)), ones), self.weight) for b in range(self.m)]
        return PoweredPolynomial(self.m * self.q, terms)

    def n_terms(self) -> int:
        return math.comb(self.m, self.q) if self.kind == "complete" else self.m


@dataclass
class LowerBoundInstance:
    """
    下界实例：基底乘以 lift_count 个线性因子 (2/lift_m)·Σ_i Y_{j,i}，Y ~ Bernoulli(1/2)。

    log_lower_bound 是各引理链给出的下界，log_case_bound 是分情形的常数形式下界。
    """

    case_id: str
    base: BinomialBase
    lam: float
    eps: float
    lift_m: int = 0
    lift_count: int = 0
    caps: tuple[float, ...] = ()
    log_lower_bound: float = -math.inf
    log_case_bound: float = -math.inf
    dominant_index: int | None = None
    constants: dict[str, float] = field(default_factory=dict)
    parameters: dict[str, Any] = field(default_factory=dict)

    @property
    def q(self) -> int:
        return self.base.q + self.lift_count

    @property
    def n_vars(self) -> int:
        return self.base.n_vars + self.lift_count * self.lift_m

    def dists(self) -> list[DistributionSpec]:
        return [bernoulli(self.base.p)] * self.base.n_vars + [bernoulli(0.5)] * (self.lift_count * self.lift_m)

    def mean(self) -> float:
        return self.base.mean()

    def mu_profile(self) -> list[float]:
        """解析 μ 剖面：基底剖面与每个线性因子 (1, 2/m) 的最大乘积卷积。"""
        profile = self.base.mu_profile()
        for _ in range(self.lift_count):
            profile = product_profile(profile, [1.0, 2.0 / self.lift_m])
        return profile

    def n_terms(self) -> int:
        return self.base.n_terms() * self.lift_m ** self.lift_count

    def polynomial(self, max_terms: int | None = None) -> PoweredPolynomial:
        """
        实例化多项式。

        Raises:
            SizeLimit: 项数超过上限。
        """
        cap = max_terms or BUDGETS["cycles_terms"]
        if self.n_terms() > cap:
            raise SizeLimit(f"下界实例共 {self.n_terms()} 项，超过上限 {cap}")
        poly = self.base.polynomial()
        for _ in range(self.lift_count):
            poly = product(poly, scale(linear(self.lift_m), 2.0 / self.lift_m))
        return poly

    def to_json(self) -> dict[str, Any]:
        return {
            "case_id": self.case_id,
            "q": self.q,
            "lambda": self.lam,
            "epsilon": self.eps,
            "base": {
                "kind": self.base.kind, "q": self.base.q, "weight": self.base.weight,
                "m": self.base.m, "p": self.base.p,
            },
            "lift_m": self.lift_m,
            "lift_count": self.lift_count,
            "n_vars": self.n_vars,
            "caps": list(self.caps),
            "mu_profile": self.mu_profile(),
            "log_lower_bound": self.log_lower_bound,
            "log_case_bound": self.log_case_bound,
            "dominant_index": self.dominant_index,
            "constants": self.constants,
            "parameters": self.parameters,
        }


def _check_eps(eps: float) -> None:
    if not 0 < eps <= 1:
        raise ParameterError(f"需要 0 < ε ≤ 1: {eps}")


def lb_one(q: int, eps: float, lam: float, mu_q_star: float) -> LowerBoundInstance:
    """
    完全多线性实例 f = μ_q*·Σ_{|I|=q} Π x_i，m = ⌈4q(λ/μ_q*)^{1/q}⌉，P[X_i=1] = ε/m。

    λ = μ_q* 时给出 Pr[f − Ef ≥ μ_q*] ≥ e^{−2ε}(ε/(q+1))^{q+1}；
    λ > μ_q* 时给出 e^{−2ε}(ε/M)^M，M = 4q(λ/μ_q*)^{1/q}。
    """
    _check_eps(eps)
    if q < 1 or mu_q_star <= 0:
        raise ParameterError("需要 q ≥ 1 且 μ_q* > 0")
    if lam < mu_q_star:
        raise ParameterError(f"需要 λ ≥ μ_q*: λ={lam}, μ_q*={mu_q_star}")
    ratio = (lam / mu_q_star) ** (1.0 / q)
    m = _ceil(4 * q * ratio)
    base = BinomialBase("complete", q, mu_q_star, m, eps / m)
    if lam == mu_q_star:
        case_id = "lb_one_small"
        log_lb = -2 * eps + (q + 1) * math.log(eps / (q + 1))
    else:
        case_id = "lb_one_large"
        big_m = 4 * q * ratio
        log_lb = -2 * eps + big_m * math.log(eps / big_m)
    caps = tuple(eps ** (q - j) * mu_q_star for j in range(q + 1))
    return LowerBoundInstance(
        case_id, base, lam, eps, caps=caps, log_lower_bound=log_lb,
        parameters={"m": m, "p": eps / m, "mu_q_star": mu_q_star},
    )


def lb_two_blocks(q: int, mu0_star: float, mu_q_star: float, eps: float) -> int:
    """满足 (μ₀*/(nμ_q*))^{1/q} ≤ min(ε, 1/2) 的最小 2 的幂 n。"""
    target = min(eps, 0.5)
    n = 1
    while (mu0_star / (n * mu_q_star)) ** (1.0 / q) > target:
        n *= 2
    return n


def lb_two(q: int, mu0_star: float, mu_q_star: float, lam: float, eps: float) -> LowerBoundInstance:
    """
    n 个互不相交的 q 元块，每块权重 μ_q*，P[X=1] = (μ₀*/(nμ_q*))^{1/q}，
    f/μ_q* ~ Bin(n, μ₀*/(nμ_q*))。
    """
    _check_eps(eps)
    if q < 1 or mu_q_star <= 0:
        raise ParameterError("需要 q ≥ 1 且 μ_q* > 0")
    if mu0_star < 27 * mu_q_star:
        raise ParameterError(f"需要 μ₀* ≥ 27μ_q*: μ₀*={mu0_star}, μ_q*={mu_q_star}")
    if not 0 < lam <= mu0_star:
        raise ParameterError(f"需要 0 < λ ≤ μ₀*: {lam}")
    n = lb_two_blocks(q, mu0_star, mu_q_star, eps)
    p = (mu0_star / (n * mu_q_star)) ** (1.0 / q)
    base = BinomialBase("blocks", q, mu_q_star, n, p)
    caps = (mu0_star,) + tuple(eps * mu_q_star for _ in range(1, q)) + (mu_q_star,)
    return LowerBoundInstance(
        "lb_two", base, lam, eps, caps=caps,
        log_lower_bound=-100.0 - lam * lam / (mu0_star * mu_q_star),
        parameters={"n_blocks": n, "p": p, "mu0_star": mu0_star, "mu_q_star": mu_q_star},
    )


def lift_size(profile: Sequence[float], eps: float) -> int:
    """
    m = ⌈max(2/ε, 2·max_{i,j} μ_j/μ_i)⌉。

    Raises:
        BudgetExceeded: m 超过 BUDGETS["lift_m"]。
    """
    positive = [v for v in profile if v > 0]
    if len(positive) != len(profile):
        raise ParameterError("提升要求 μ 剖面全部为正")
    m = _ceil(max(2.0 / eps, 2.0 * max(positive) / min(positive)))
    if m > BUDGETS["lift_m"]:
        raise BudgetExceeded(f"提升因子试验数 m={m} 超过预算 {BUDGETS['lift_m']}")
    return m


def lift_degree(instance: LowerBoundInstance, q_prime: int, eps: float) -> LowerBoundInstance:
    """
    乘以 q′−q 个线性因子 (2/m)Σ_i Y_{j,i} 把次数提升到 q′；尾概率下界乘以 2^{−(q′−q)}。
    """
    _check_eps(eps)
    if instance.lift_count:
        raise ParameterError("实例已经提升过")
    q = instance.q
    if q_prime < q:
        raise ParameterError(f"需要 q′ ≥ q: q′={q_prime}, q={q}")
    base_profile = instance.mu_profile()
    extra = q_prime - q
    m = lift_size(base_profile, eps) if extra else 0
    caps = tuple(base_profile) + tuple(eps * base_profile[q] for _ in range(extra))
    lifted = LowerBoundInstance(
        instance.case_id if not extra else "lifted",
        instance.base, instance.lam, eps,
        lift_m=m, lift_count=extra, caps=caps,
        log_lower_bound=instance.log_lower_bound - extra * math.log(2.0),
        constants=dict(instance.constants),
        parameters={**instance.parameters, "base_case": instance.case_id, "q_prime": q_prime},
    )
    return lifted


# ============================================================
# 精确尾概率
# ============================================================

@dataclass(frozen=True)
class TailComputation:
    log_tail: float
    tail_method: str  # exact / factored

    @property
    def tail(self) -> float:
        return math.exp(self.log_tail)


def _base_support(base: BinomialBase) -> tuple[np.ndarray, np.ndarray]:
    s = np.arange(base.m + 1)
    logp = binom.logpmf(s, base.m, base.count_p)
    keep = np.isfinite(logp)
    return base.values(s[keep]), logp[keep]


def _lift_log_sf(m: int) -> np.ndarray:
    """下标 k 处为 ln Pr[Bin(m, 1/2) ≥ k]，k = 0..m+1。"""
    logpmf = binom.logpmf(np.arange(m + 1), m, 0.5)
    tail = np.minimum(np.logaddexp.accumulate(logpmf[::-1])[::-1], 0.0)
    return np.append(tail, -np.inf)


def exact_upper_tail(instance: LowerBoundInstance, lam: float | None = None) -> TailComputation:
    """
    精确计算 Pr[f − Ef ≥ λ]：枚举除最后一个因子外的全部取值，最后一个因子用生存函数。
    联合支撑超过上限时退化为可证明的乘积下界 Pr[基底尾]·Π Pr[g_j ≥ 1]，并标记为 factored。
    """
    lam = instance.lam if lam is None else lam
    base = instance.base
    threshold = instance.mean() + lam

    if instance.lift_count == 0:
        return TailComputation(log_binom_sf(base.min_count(threshold), base.m, base.count_p), "exact")

    m = instance.lift_m
    support = (base.m + 1) * (m + 1) ** (instance.lift_count - 1)
    lift_sf = _lift_log_sf(m)
    if support > BUDGETS["lb_support"]:
        logger.warning("下界实例联合支撑 %d 超过上限，改用乘积下界", support)
        log_tail = log_binom_sf(base.min_count(threshold), base.m, base.count_p)
        log_tail += instance.lift_count * lift_sf[_ceil(m / 2)]
        return TailComputation(log_tail, "factored")

    values, logp = _base_support(base)
    lift_values = 2.0 * np.arange(m + 1) / m
    lift_logp = binom.logpmf(np.arange(m + 1), m, 0.5)
    for _ in range(instance.lift_count - 1):
        values = np.outer(values, lift_values).ravel()
        logp = np.add.outer(logp, lift_logp).ravel()

    positive = values > 0
    if not positive.any():
        return TailComputation(-math.inf, "exact")
    needed = threshold / values[positive] * m / 2.0
    k0 = np.clip(np.ceil(needed - _CEIL_TOL), 0, m + 1).astype(int)
    log_tail = float(logsumexp(logp[positive] + lift_sf[k0]))
    return TailComputation(log_tail, "exact")


def lift_factor_probability(m: int) -> float:
    """单个线性因子 (2/m)·Bin(m, 1/2) ≥ 1 的精确概率（按对称性 ≥ 1/2）。"""
    return math.exp(log_binom_sf(_ceil(m / 2), m, 0.5))


# ============================================================
# 分情形构造
# ============================================================

def dominant_index(mu_star: Sequence[float], lam: float) -> int:
    """使 min(λ²/(μ₀*μ_i*), (λ/μ_i*)^{1/i}) 最小的 i ∈ [1, q]（并列取最小 i）。"""
    q = len(mu_star) - 1
    best, best_i = math.inf, 1
    for i in range(1, q + 1):
        value = min(lam * lam / (mu_star[0] * mu_star[i]), (lam / mu_star[i]) ** (1.0 / i))
        if value < best:
            best, best_i = value, i
    return best_i


def _safe_exp(x: float) -> float:
    return math.exp(x) if x < 700 else math.inf


def _case_bound(log_c: float, lam: float, mu_star: Sequence[float], i: int) -> float:
    """max{e^{−(λ²/(μ₀*μ_i*)+1)·ln C}, e^{−((λ/μ_i*)^{1/i}+1)·ln C}}，对数形式。"""
    a = lam * lam / (mu_star[0] * mu_star[i])
    b = (lam / mu_star[i]) ** (1.0 / i)
    return max(-(a + 1) * log_c, -(b + 1) * log_c)


def construct_thm_LB(q: int, mu_star: Sequence[float], lam: float) -> LowerBoundInstance:
    """
    给定 μ* 上界向量和 λ，构造 μ_j(f) ≤ μ_j* 且尾概率有显式下界的 q 次实例。

    情形一 λ ≤ μ_i*：在 λ′ = μ_i* 处构造完全多线性实例并提升；
    情形二 λ > μ_i* 且 27λ²/(μ₀*μ_i*) ≥ (λ/μ_i*)^{1/i}：在 λ 处构造完全多线性实例并提升；
    其余为情形三：分块二项实例并提升。

    Args:
        q: 目标次数。
        mu_star: (μ₀*, …, μ_q*)，全部为正。
        lam: λ > 0。

    Raises:
        ParameterError: 向量长度不符或存在非正值。
    """
    mu_star = [float(v) for v in mu_star]
    if q < 1 or len(mu_star) != q + 1:
        raise ParameterError(f"μ* 向量长度应为 q+1={q + 1}")
    if min(mu_star) <= 0 or lam <= 0:
        raise ParameterError("需要全部 μ_i* > 0 且 λ > 0")

    eps = min(mu_star) / max(mu_star)
    i = dominant_index(mu_star, lam)
    mu_i = mu_star[i]
    constants = {
        "Lambda1": eps ** (-q),
        "Lambda2": max(lam / v for v in mu_star[1:]),
        "Lambda3": float(q ** q),
    }

    if lam <= mu_i:
        base = lb_one(i, eps, mu_i, mu_i)
        log_c = q * math.log(2) + 2 + (q + 1) * math.log((q + 1) / eps)
        constants["C1"] = math.exp(log_c)
        case = "one"
    elif 27 * lam * lam / (mu_star[0] * mu_i) >= (lam / mu_i) ** (1.0 / i):
        base = lb_one(i, eps, lam, mu_i)
        log_c2 = 2 + q * math.log(2)
        log_c3 = 4 * math.log(lam / mu_i) + 4 * i * math.log(4 * i / eps)
        log_c = max(log_c2, 27 * log_c3)
        constants.update({"C2": math.exp(log_c2), "C3": _safe_exp(log_c3), "C4": _safe_exp(27 * log_c3)})
        case = "two"
    else:
        base = lb_two(i, mu_star[0], mu_i, lam, eps)
        log_c = 100 + q * math.log(2)
        constants["C5"] = math.exp(log_c)
        case = "three"

    inst = lift_degree(base, q, eps)
    inst.lam = lam
    inst.caps = tuple(mu_star)
    inst.dominant_index = i
    inst.constants.update(constants)
    inst.parameters.update({"case": case, "mu_star": mu_star})
    inst.log_case_bound = _case_bound(log_c, lam, mu_star, i)
    logger.info("构造下界实例: 情形%s, i=%d, ε=%.6g, 变量数 %d", case, i, eps, inst.n_vars)
    return inst


# ============================================================
# 校验
# ============================================================

def check_caps(instance: LowerBoundInstance, verify: bool = False) -> dict[str, Any]:
    """
    比较实例 μ 剖面与上界。verify=True 时实例化多项式并用 smoothness 精确重算。
    """
    analytic = instance.mu_profile()
    computed = analytic
    if verify:
        computed = list(mu_profile(instance.polynomial(), instance.dists()).values)
    tol = TOLERANCES["mu_relative"]
    holds = [computed[j] <= instance.caps[j] * (1 + tol) + tol for j in range(len(instance.caps))]
    return {"mu": computed, "analytic": analytic, "caps": list(instance.caps), "holds": holds, "ok": all(holds)}


def certify(instance: LowerBoundInstance) -> dict[str, Any]:
    """精确尾概率与两个下界的比较报告。"""
    tail = exact_upper_tail(instance)
    caps = check_caps(instance)
    report = {
        "log_tail": tail.log_tail,
        "tail_method": tail.tail_method,
        "log_lower_bound": instance.log_lower_bound,
        "log_case_bound": instance.log_case_bound,
        "lower_bound_holds": tail.log_tail >= instance.log_lower_bound - 1e-9,
        "case_bound_holds": tail.log_tail >= instance.log_case_bound - 1e-9,
        "caps": caps,
    }
    if not (report["lower_bound_holds"] and report["case_bound_holds"] and caps["ok"]):
        logger.error("下界实例 %s 校验失败: %s", instance.case_id, report)
    return report
