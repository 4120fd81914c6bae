"""
矩计算 - 中心化分解、精确矩预言机、矩引理上界公式以及 Markov 步骤的 k* 选择。

所有上界均在自然对数空间中计算。
"""
import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterator, Sequence

import numpy as np

from polytail.errors import BudgetExceeded, DimensionMismatch, NonFiniteSupport, ParameterError
from polytail.poly import (
    PoweredHyperedge,
    PoweredPolynomial,
    add_constant,
    evaluate,
    evaluate_many,
    expectation,
    to_exact,
)
from polytail.rv import DistributionSpec, moment_bound_parameter, raw_moment
from polytail.settings import BUDGETS, DEFAULT_CONSTANTS
from polytail.smoothness import MuProfile, mu_profile

logger = logging.getLogger(__name__)

_OUTCOME_CHUNK = 1 << 16


def exact_raw_moment(dist: DistributionSpec, d: int) -> Fraction:
    """有限支撑分布的精确有理矩 E[Y^d]。"""
    if not dist.is_finite:
        raise NonFiniteSupport(f"{dist.family} 不是有限支撑，无法精确计算")
    return sum((p * v**d for v, p in dist.exact_support()), Fraction(0))


def _moment_fn(dists: Sequence[DistributionSpec], exact: bool):
    cache: dict[tuple[int, int], Any] = {}

    def moment(v: int, t: int) -> Any:
        key = (v, t)
        if key not in cache:
            cache[key] = exact_raw_moment(dists[v], t) if exact else raw_moment(dists[v], t)
        return cache[key]

    return moment


def _check_dists(poly: PoweredPolynomial, dists: Sequence[DistributionSpec]) -> None:
    if len(dists) != poly.n:
        raise DimensionMismatch(f"分布列表长度 {len(dists)} 与变量数 {poly.n} 不一致")


# ============================================================
# 中心化分解
# ============================================================

@dataclass(frozen=True)
class CenteredComponent:
    """
    中心化后按 (基数 η, 总幂次 q, 符号) 分组的一个分量。

    poly 的项 (v, τ) 表示中心化变量 X_{vτ} = Y_v^τ − E[Y_v^τ]。
    """

    poly: PoweredPolynomial
    eta: int
    q: int
    sign: int


@dataclass
class CenteredDecomposition:
    """f(Y) = constant + Σ_i g^{(i)}(X)。"""

    constant: Any
    components: list[CenteredComponent]
    means: dict[tuple[int, int], Any] = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.components)


def center(poly: PoweredPolynomial, dists: Sequence[DistributionSpec], exact: bool = False) -> CenteredDecomposition:
    """
    计算 w′_{h′} = Σ_{h ⊒ h′} w_h Π_{v∈h∖h′} E[Y_v^{τ_hv}]，并按 (η, q, 符号) 分组。

    Args:
        poly: 多项式。
        dists: 逐顶点分布。
        exact: 使用有理数精确计算（要求有限支撑分布）。

    Returns:
        CenteredDecomposition，constant = E[f]。
    """
    _check_dists(poly, dists)
    if exact:
        poly = to_exact(poly)
    moment = _moment_fn(dists, exact)
    budget = BUDGETS["center_subedges"]
    seen = 0
    weights: dict[tuple, Any] = defaultdict(lambda: Fraction(0) if exact else 0.0)
    means: dict[tuple[int, int], Any] = {}

    for edge, w in poly.terms:
        items = edge.items()
        seen += 1 << len(items)
        if seen > budget:
            raise BudgetExceeded(f"中心化子超边数超过预算 {budget}")
        for v, t in items:
            means[(v, t)] = moment(v, t)
        for size in range(len(items) + 1):
            for chosen in itertools.combinations(range(len(items)), size):
                value = w
                for i in range(len(items)):
                    if i not in chosen:
                        value = value * means[items[i]]
                weights[tuple(items[i] for i in chosen)] += value

    constant = weights.pop((), Fraction(0) if exact else 0.0)
    groups: dict[tuple[int, int, int], list] = defaultdict(list)
    for key, value in weights.items():
        if value == 0:
            continue
        edge = PoweredHyperedge.from_items(key)
        sign = 1 if value > 0 else -1
        groups[(edge.eta, edge.total_power, sign)].append((edge, value))

    components = [
        CenteredComponent(PoweredPolynomial(poly.n, terms), eta, q, sign)
        for (eta, q, sign), terms in sorted(groups.items())
    ]
    logger.debug("中心化: 常数项 %s, %d 个分量", constant, len(components))
    return CenteredDecomposition(constant, components, means)


def evaluate_component(poly: PoweredPolynomial, assignment: Sequence[Any], means: dict) -> Any:
    """在 X_{vτ} = y_v^τ − E[Y_v^τ] 处对中心化分量求值。"""
    total: Any = 0
    for edge, w in poly.terms:
        value: Any = w
        for v, t in edge.items():
            value = value * (assignment[v] ** t - means[(v, t)])
        total = total + value
    return total


def evaluate_component_many(poly: PoweredPolynomial, samples: np.ndarray, means: dict) -> np.ndarray:
    out = np.zeros(samples.shape[0])
    for edge, w in poly.terms:
        term = np.full(samples.shape[0], float(w))
        for v, t in edge.items():
            term *= samples[:, v] ** t - float(means[(v, t)])
        out += term
    return out


def reconstruct(decomp: CenteredDecomposition, assignment: Sequence[Any]) -> Any:
    """constant + Σ_i g^{(i)}(x)，应等于 f(y)。"""
    total = decomp.constant
    for comp in decomp.components:
        total = total + evaluate_component(comp.poly, assignment, decomp.means)
    return total


def component_mu_profiles(decomp: CenteredDecomposition, dists: Sequence[DistributionSpec]) -> list[MuProfile]:
    """
    各中心化分量的 μ 剖面，按原始变量的 E|Y^τ| 计算。
    """
    return [mu_profile(comp.poly, dists) for comp in decomp.components]


# ============================================================
# 精确矩
# ============================================================

def exact_moment_expansion(
    poly: PoweredPolynomial,
    dists: Sequence[DistributionSpec],
    k: int,
    method: str = "profile",
    exact: bool = False,
) -> Any:
    """
    E[f(Y)^k] 的精确展开。

    profile 方法把 k 元项组合逐步折叠为逐顶点幂次剖面并累加系数；
    naive 方法直接枚举 (#项)^k 个组合，仅用于交叉验证。

    Args:
        poly: 多项式。
        dists: 逐顶点分布。
        k: 非负整数。
        method: "profile" 或 "naive"。
        exact: 有理数精确模式。

    Returns:
        E[f^k]（exact=True 时为 Fraction）。
    """
    _check_dists(poly, dists)
    if k < 0:
        raise ParameterError(f"k 必须非负: {k}")
    if exact:
        poly = to_exact(poly)
    moment = _moment_fn(dists, exact)
    budget = BUDGETS["expansion_profiles"]

    if method == "naive":
        if len(poly.terms) ** k > budget:
            raise BudgetExceeded(f"(#项)^k = {len(poly.terms)}^{k} 超过预算 {budget}")
        profiles: dict[tuple, Any] = defaultdict(int)
        for combo in itertools.product(poly.terms, repeat=k):
            merged: dict[int, int] = defaultdict(int)
            coef: Any = 1
            for edge, w in combo:
                coef = coef * w
                for v, t in edge.items():
                    merged[v] += t
            profiles[tuple(sorted(merged.items()))] += coef
    elif method == "profile":
        profiles = {(): 1}
        for _ in range(k):
            nxt: dict[tuple, Any] = defaultdict(int)
            for prof, coef in profiles.items():
                base = dict(prof)
                for edge, w in poly.terms:
                    merged = dict(base)
                    for v, t in edge.items():
                        merged[v] = merged.get(v, 0) + t
                    nxt[tuple(sorted(merged.items()))] += coef * w
            if len(nxt) > budget:
                raise BudgetExceeded(f"幂次剖面数 {len(nxt)} 超过预算 {budget}")
            profiles = nxt
    else:
        raise ParameterError(f"未知展开方法: {method}")

    parts = []
    for prof, coef in profiles.items():
        value = coef
        for v, t in prof:
            value = value * moment(v, t)
        parts.append(value)
    if exact:
        return sum(parts, Fraction(0))
    return math.fsum(float(p) for p in parts)


def central_moment(poly: PoweredPolynomial, dists: Sequence[DistributionSpec], k: int, exact: bool = False) -> Any:
    """
    偶数阶中心矩 E[(f − Ef)^k]：把 −Ef 作为常数项并入多项式后做精确展开。

    Raises:
        ParameterError: k 为奇数或小于 2。
    """
    if k < 2 or k % 2:
        raise ParameterError(f"中心矩只支持偶数阶 k ≥ 2: {k}")
    if exact:
        mean = exact_moment_expansion(poly, dists, 1, exact=True)
        shifted = add_constant(to_exact(poly), -mean)
    else:
        shifted = add_constant(poly, -expectation(poly, dists))
    return exact_moment_expansion(shifted, dists, k, exact=exact)


# ============================================================
# 全支撑枚举预言机
# ============================================================

@dataclass(frozen=True)
class OracleResult:
    moment: Any
    central_moment: Any
    tail_two_sided: Any
    mean: Any


@dataclass
class OutcomeTable:
    """f(Y) 的完整取值分布。"""

    values: Any
    probs: Any
    mean: Any
    exact: bool

    def deviations(self) -> Any:
        if self.exact:
            return [abs(v - self.mean) for v in self.values]
        return np.abs(self.values - self.mean)

    def max_deviation(self) -> float:
        devs = self.deviations()
        return float(max(devs)) if len(devs) else 0.0

    def tail(self, lam: Any, direction: str = "two_sided") -> Any:
        """Pr[|f − Ef| ≥ λ]（或单侧 Pr[f − Ef ≥ λ]）。"""
        if self.exact:
            lam = Fraction(lam)
            if direction == "upper":
                hits = (p for v, p in zip(self.values, self.probs) if v - self.mean >= lam)
            else:
                hits = (p for v, p in zip(self.values, self.probs) if abs(v - self.mean) >= lam)
            return sum(hits, Fraction(0))
        diff = self.values - self.mean
        mask = diff >= lam if direction == "upper" else np.abs(diff) >= lam
        return math.fsum(self.probs[mask].tolist())

    def raw_moment(self, k: int) -> Any:
        if self.exact:
            return sum((p * v**k for v, p in zip(self.values, self.probs)), Fraction(0))
        return math.fsum((self.probs * self.values**k).tolist())

    def abs_central_moment(self, k: int) -> Any:
        if self.exact:
            return sum((p * abs(v - self.mean) ** k for v, p in zip(self.values, self.probs)), Fraction(0))
        return math.fsum((self.probs * np.abs(self.values - self.mean) ** k).tolist())


def _support_sizes(dists: Sequence[DistributionSpec]) -> list[int]:
    for dist in dists:
        if not dist.is_finite:
            raise NonFiniteSupport(f"{dist.family} 不是有限支撑，无法做全支撑枚举")
    sizes = [len(d.support()) for d in dists]
    total = math.prod(sizes)
    if total > BUDGETS["enum_support"]:
        raise BudgetExceeded(f"联合支撑大小 {total} 超过预算 {BUDGETS['enum_support']}")
    return sizes


def outcome_grid(dists: Sequence[DistributionSpec]) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """
    分块产生全部联合取值及其概率（浮点模式）。

    Yields:
        (样本矩阵 (m, n), 概率向量 (m,))。
    """
    sizes = _support_sizes(dists)
    supports = [d.support() for d in dists]
    values = [np.array([v for v, _ in s]) for s in supports]
    probs = [np.array([p for _, p in s]) for s in supports]
    total = math.prod(sizes)
    for start in range(0, total, _OUTCOME_CHUNK):
        flat = np.arange(start, min(total, start + _OUTCOME_CHUNK))
        idx = np.unravel_index(flat, sizes) if sizes else ()
        samples = np.column_stack([values[v][idx[v]] for v in range(len(dists))]) if dists else np.zeros((len(flat), 0))
        weight = np.ones(len(flat))
        for v in range(len(dists)):
            weight *= probs[v][idx[v]]
        yield samples, weight


def enumerate_outcomes(poly: PoweredPolynomial, dists: Sequence[DistributionSpec], exact: bool = False) -> OutcomeTable:
    """
    枚举 f(Y) 在联合支撑上的全部取值。

    Raises:
        NonFiniteSupport: 存在无限支撑分布。
        BudgetExceeded: 联合支撑超过预算。
    """
    _check_dists(poly, dists)
    if exact:
        _support_sizes(dists)
        exact_poly = to_exact(poly)
        supports = [d.exact_support() for d in dists]
        values, probs = [], []
        for combo in itertools.product(*supports):
            prob = math.prod((p for _, p in combo), start=Fraction(1))
            values.append(evaluate(exact_poly, [v for v, _ in combo]) if exact_poly.terms else Fraction(0))
            probs.append(prob)
        mean = sum((p * v for v, p in zip(values, probs)), Fraction(0))
        return OutcomeTable(values, probs, mean, True)

    value_chunks, prob_chunks = [], []
    for samples, weight in outcome_grid(dists):
        value_chunks.append(evaluate_many(poly, samples))
        prob_chunks.append(weight)
    values = np.concatenate(value_chunks) if value_chunks else np.zeros(1)
    probs = np.concatenate(prob_chunks) if prob_chunks else np.ones(1)
    mean = math.fsum((values * probs).tolist())
    return OutcomeTable(values, probs, mean, False)


def enumerate_oracle(
    poly: PoweredPolynomial,
    dists: Sequence[DistributionSpec],
    k: int,
    lam: Any,
    exact: bool = False,
) -> OracleResult:
    """
    全支撑枚举得到 E[f^k]、E|f − Ef|^k 与 Pr[|f − Ef| ≥ λ]。
    """
    table = enumerate_outcomes(poly, dists, exact)
    return OracleResult(table.raw_moment(k), table.abs_central_moment(k), table.tail(lam), table.mean)


def sum_moment_check(decomp: CenteredDecomposition, dists: Sequence[DistributionSpec], k: int) -> tuple[float, float]:
    """
    E[(Σ_i |g_i|)^k] ≤ (Σ_i (E|g_i|^k)^{1/k})^k 在有限支撑上的数值验证。

    Returns:
        (左边, 右边)。
    """
    lhs_parts: list[float] = []
    comp_parts: list[list[float]] = [[] for _ in decomp.components]
    for samples, weight in outcome_grid(dists):
        values = [np.abs(evaluate_component_many(c.poly, samples, decomp.means)) for c in decomp.components]
        total = np.sum(values, axis=0) if values else np.zeros(len(weight))
        lhs_parts.extend((weight * total**k).tolist())
        for i, vals in enumerate(values):
            comp_parts[i].extend((weight * vals**k).tolist())
    rhs = sum(math.fsum(parts) ** (1.0 / k) for parts in comp_parts) ** k
    return math.fsum(lhs_parts), rhs


def elementary_second_moment(poly: PoweredPolynomial, dists: Sequence[DistributionSpec]) -> dict[str, float]:
    """
    零均值多线性、各项总幂次同为 q 时：E[(f − Ef)²] ≤ (2L)^q μ_q μ_0。
    """
    _check_dists(poly, dists)
    if not poly.multilinear or len({e.total_power for e, _ in poly.terms}) > 1:
        raise ParameterError("需要各项总幂次相同的多线性多项式")
    if any(raw_moment(d, 1) != 0 for d in dists):
        raise ParameterError("需要所有变量零均值")
    L = max(moment_bound_parameter(d) for d in dists)
    profile = mu_profile(poly, dists)
    q = poly.q
    return {
        "variance": central_moment(poly, dists, 2),
        "bound": (2 * L) ** q * profile[q] * profile[0],
    }


# ============================================================
# 矩引理上界（对数空间）
# ============================================================

def _mu_values(mu: MuProfile | Sequence[float]) -> list[float]:
    return list(mu.values) if isinstance(mu, MuProfile) else [float(x) for x in mu]


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def _log_constant(variant: str, q: int, t: int, gamma: float, constant: float) -> float:
    """general 为 ln R₃^q；gamma_variant 为 ln R₃^t，R₃ = C^{Γ+1}。"""
    if variant == "general":
        return q * _log(constant)
    if variant == "gamma_variant":
        return t * (gamma + 1) * _log(constant)
    raise ParameterError(f"未知变体: {variant}")


def _lemma_log_curve(q: int, gamma: float, L: float, mus: list[float], ks: np.ndarray, variant: str,
                     constant: float) -> np.ndarray:
    """逐个 k 的 ln 矩上界：k · max_t max{½(ln k + c_t + ln μ_0), t ln k + c_t}。"""
    ks = np.asarray(ks, dtype=float)
    log_k = np.log(ks)
    best = np.full(ks.shape, -np.inf)
    for t in range(1, q + 1):
        common = _log_constant(variant, q, t, gamma, constant) + t * (_log(gamma) + _log(L)) + _log(mus[t])
        if common == -math.inf:
            continue
        best = np.maximum(best, t * log_k + common)
        if mus[0] > 0:
            best = np.maximum(best, 0.5 * (log_k + common + math.log(mus[0])))
    return ks * best


def best_even_k(
    log_moment: Callable[[np.ndarray], np.ndarray],
    k_max: int,
    log_lam: float,
    extra: Sequence[int] = (),
) -> tuple[int, float]:
    """
    在 2..k_max 的全部偶数（以及 extra）上最小化 ln(矩上界(k) / λ^k)。

    候选集合随 k_max 单调扩大，因此结果随 λ 单调不增。
    k_max 超过 BUDGETS["markov_k"] 时截断到该上限。

    Args:
        log_moment: 接受 k 数组、返回 ln 矩上界数组的函数。
        k_max: 最大候选阶数。
        log_lam: ln λ。
        extra: 额外候选阶数。

    Returns:
        (取到最小值的 k（并列取最小 k）, 对应的对数上界)。
    """
    cap = min(int(k_max), BUDGETS["markov_k"])
    ks = np.arange(2, max(cap, 2) + 1, 2)
    if extra:
        ks = np.union1d(ks, np.asarray(extra, dtype=ks.dtype))
    values = log_moment(ks) - ks * log_lam
    i = int(np.argmin(values))
    return int(ks[i]), float(values[i])


def moment_lemma_bound(
    q: int,
    gamma: float,
    L: float,
    mu: MuProfile | Sequence[float],
    k: int,
    variant: str = "general",
    constant: float = DEFAULT_CONSTANTS["R3_moment"],
) -> float:
    """
    一般偶数阶矩引理上界的对数：
    max{ max_t (√(k R₃^q Γ^t L^t μ_t μ_0))^k, max_t (k^t R₃^q L^t Γ^t μ_t)^k }。
    gamma_variant 以 R₃^t 代替 R₃^q，且 R₃ = C^{Γ+1}。

    Returns:
        ln 上界；全部 μ_t 为零时为 -inf。
    """
    if k < 2 or k % 2:
        raise ParameterError(f"矩引理只对偶数 k ≥ 2 成立: {k}")
    if constant <= 0:
        raise ParameterError("常数必须为正")
    mus = _mu_values(mu)
    if len(mus) < q + 1:
        raise ParameterError(f"μ 剖面长度 {len(mus)} 不足 q+1={q + 1}")
    return float(_lemma_log_curve(q, gamma, L, mus, np.array([k]), variant, constant)[0])


@dataclass(frozen=True)
class MarkovParameters:
    q: int
    gamma: float
    L: float
    mu: tuple[float, ...]
    variant: str = "general"
    constant: float = DEFAULT_CONSTANTS["R3_moment"]


@dataclass(frozen=True)
class MarkovResult:
    k_star: int
    log_bound: float
    K: float


def markov_parameters(
    poly: PoweredPolynomial,
    dists: Sequence[DistributionSpec],
    constant: float,
    variant: str = "general",
    L: float | None = None,
) -> MarkovParameters:
    """由多项式与分布得到 Markov 步骤所需参数（L 取各顶点的最大值）。"""
    _check_dists(poly, dists)
    if L is None:
        L = max((moment_bound_parameter(d) for d in dists), default=1.0)
    profile = mu_profile(poly, dists)
    return MarkovParameters(poly.q, float(poly.gamma), L, profile.values, variant, constant)


def even_k_star(K: float) -> int:
    """(K−2, K] 内最大的偶数；K < 2 时取 2。"""
    if not K >= 2:
        return 2
    return 2 * int(math.floor(K / 2.0))


def markov_optimize(params: MarkovParameters, lam: float) -> MarkovResult:
    """
    K = min{ min_t λ²/(e² R^q Γ^t L^t μ_t μ_0), min_t (λ/(e R^q L^t Γ^t μ_t))^{1/t} }，
    候选阶数为 2..k_max 的全部偶数，k_max 为 (K−2, K] 内最大偶数；
    上界 = min(1, min_k 矩上界(k)/λ^k)，k_star 为取到最小值的阶数。

    Args:
        params: MarkovParameters。
        lam: λ > 0。

    Returns:
        MarkovResult。
    """
    if lam <= 0:
        raise ParameterError(f"λ 必须为正: {lam}")
    q, gamma, L, mus = params.q, params.gamma, params.L, list(params.mu)
    if all(m == 0 for m in mus[1:]):
        return MarkovResult(2, -math.inf, math.inf)

    log_lam = math.log(lam)
    candidates = []
    for t in range(1, q + 1):
        if mus[t] <= 0:
            continue
        common = (_log_constant(params.variant, q, t, gamma, params.constant)
                  + t * (math.log(gamma) + math.log(L)) + math.log(mus[t]))
        if mus[0] > 0:
            candidates.append(2 * log_lam - 2.0 - common - math.log(mus[0]))
        candidates.append((log_lam - 1.0 - common) / t)
    K = math.exp(min(min(candidates), 700.0))
    k_star, log_bound = best_even_k(
        lambda ks: _lemma_log_curve(q, gamma, L, mus, ks, params.variant, params.constant),
        even_k_star(K), log_lam,
    )
    log_bound = min(0.0, log_bound)
    if K < 2:
        logger.debug("K=%.4g < 2，取 k*=2 并把上界截断到 1", K)
    return MarkovResult(k_star, log_bound, K)


# ============================================================
# 初始矩引理与不中心化矩引理
# ============================================================

def _nu_vectors(k: int, q: int) -> Iterator[tuple[int, ...]]:
    """Σ_{t=0..q} ν_t = k 的所有非负整数向量。"""
    for cuts in itertools.combinations(range(k + q), q):
        bounds = (-1,) + cuts + (k + q,)
        yield tuple(b - a - 1 for a, b in zip(bounds, bounds[1:]))


def _log_mu_product(nu: Sequence[int], mus: Sequence[float]) -> float:
    total = 0.0
    for n_t, m in zip(nu, mus):
        if n_t:
            total += n_t * _log(m)
    return total


def initial_moment_bound(q: int, gamma: float, L: float, mu: MuProfile | Sequence[float], k: int, R2: float) -> float:
    """
    初始矩引理的对数上界：
    max over ν̄（Σν_t=k, ν_0 ≤ ν_q, qk−(q−1)ν_0−Δ ≥ 1）of
    R₂^{qk}(LΓ)^{qk−Δ} k^{qk−(q−1)ν_0−Δ} Π μ_t^{ν_t}，其中 Δ = Σ(q−t)ν_t。
    """
    mus = _mu_values(mu)
    best = -math.inf
    for nu in _nu_vectors(k, q):
        if nu[0] > nu[q]:
            continue
        delta = sum((q - t) * n_t for t, n_t in enumerate(nu))
        k_exp = q * k - (q - 1) * nu[0] - delta
        if k_exp < 1:
            continue
        value = (q * k * math.log(R2) + (q * k - delta) * (_log(L) + _log(gamma))
                 + k_exp * math.log(k) + _log_mu_product(nu, mus))
        best = max(best, value)
    return best


def uncentered_moment_bound(q: int, L: float, mu: MuProfile | Sequence[float], k: int, R: float) -> float:
    """
    不中心化矩引理的对数上界（非负系数、每项总幂次恰为 q 的多线性多项式）：
    max over ν̄（Σν_t=k, q ≤ ℓ = Σ(q−t)ν_t ≤ qk）of R^{qk} L^{qk−ℓ} k^{qk−ℓ} Π μ_t^{ν_t}。
    """
    mus = _mu_values(mu)
    best = -math.inf
    for nu in _nu_vectors(k, q):
        ell = sum((q - t) * n_t for t, n_t in enumerate(nu))
        if not q <= ell <= q * k:
            continue
        value = q * k * math.log(R) + (q * k - ell) * (_log(L) + math.log(k)) + _log_mu_product(nu, mus)
        best = max(best, value)
    return best
