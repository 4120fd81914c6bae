"""
光滑性参数 μ_r - 精确计算及其取最大值的见证子超边 h₀。

μ_r = max_{q(h₀)=r} Σ_{h ⊒ h₀} |w_h| Π_{v ∈ h∖h₀} E|Y_v^{τ_hv}|，
其中 h ⊒ h₀ 要求顶点包含且 h₀ 上幂次完全相等。
"""
import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Sequence

from polytail.errors import BudgetExceeded, DimensionMismatch, ParameterError
from polytail.poly import PoweredHyperedge, PoweredPolynomial
from polytail.rv import DistributionSpec, abs_moment
from polytail.settings import BUDGETS

logger = logging.getLogger(__name__)

AbsFactor = Callable[[int, int], float]


@dataclass(frozen=True)
class MuProfile:
    """(μ_0, …, μ_q) 及每个 r 的见证子超边（并列时取字典序最小）。"""

    values: tuple[float, ...]
    witnesses: tuple[PoweredHyperedge | None, ...]
    q: int

    def __getitem__(self, r: int) -> float:
        return self.values[r]

    def __len__(self) -> int:
        return len(self.values)

    def to_json(self) -> dict:
        return {
            "q": self.q,
            "values": list(self.values),
            "witnesses": [w.to_json() if w is not None else None for w in self.witnesses],
        }


def _abs_factor(dists: Sequence[DistributionSpec]) -> AbsFactor:
    cache: dict[tuple[int, int], float] = {}

    def factor(v: int, t: int) -> float:
        key = (v, t)
        if key not in cache:
            cache[key] = abs_moment(dists[v], t)
        return cache[key]

    return factor


def _accumulate(poly: PoweredPolynomial, factor: AbsFactor, powers: set[int]) -> dict[int, dict]:
    """
    逐项枚举子超边并按总幂次分桶累加贡献。

    Returns:
        {r: {canonical h₀ items: [贡献, ...]}}。
    """
    budget = BUDGETS["mu_subedges"]
    seen = 0
    buckets: dict[int, dict] = {r: defaultdict(list) for r in powers}
    for edge, w in poly.terms:
        items = edge.items()
        weight = abs(float(w))
        for size in range(len(items) + 1):
            for chosen in itertools.combinations(range(len(items)), size):
                r = sum(items[i][1] for i in chosen)
                if r not in buckets:
                    continue
                seen += 1
                if seen > budget:
                    raise BudgetExceeded(f"μ 子超边枚举数超过预算 {budget}")
                value = weight
                rest = set(range(len(items))) - set(chosen)
                for i in rest:
                    value *= factor(*items[i])
                buckets[r][tuple(items[i] for i in chosen)].append(value)
    return buckets


def _best(bucket: dict) -> tuple[float, PoweredHyperedge | None]:
    best_value, best_key = 0.0, None
    for key in sorted(bucket):
        value = math.fsum(bucket[key])
        if best_key is None or value > best_value:
            best_value, best_key = value, key
    if best_key is None:
        return 0.0, None
    return best_value, PoweredHyperedge.from_items(best_key)


def _check_inputs(poly: PoweredPolynomial, dists: Sequence[DistributionSpec]) -> None:
    if len(dists) != poly.n:
        raise DimensionMismatch(f"分布列表长度 {len(dists)} 与变量数 {poly.n} 不一致")


def mu(poly: PoweredPolynomial, dists: Sequence[DistributionSpec], r: int) -> tuple[float, PoweredHyperedge | None]:
    """
    计算单个 μ_r 及见证 h₀。

    只枚举各项自身的子超边；不是任何项子超边的 h₀ 贡献为 0，从不实例化。

    Args:
        poly: 多项式。
        dists: 逐顶点分布。
        r: 0 ≤ r ≤ q。

    Returns:
        (μ_r, 见证)；没有任何候选时见证为 None。
    """
    _check_inputs(poly, dists)
    if not 0 <= r <= max(poly.q, 0):
        raise ParameterError(f"r 需在 [0, {poly.q}] 内: {r}")
    buckets = _accumulate(poly, _abs_factor(dists), {r})
    return _best(buckets[r])


def mu_profile_with(poly: PoweredPolynomial, factor: AbsFactor) -> MuProfile:
    """用给定的绝对矩因子 (v, τ) → E|·| 计算完整剖面。"""
    powers = set(range(poly.q + 1))
    buckets = _accumulate(poly, factor, powers)
    pairs = [_best(buckets[r]) for r in range(poly.q + 1)]
    return MuProfile(tuple(v for v, _ in pairs), tuple(w for _, w in pairs), poly.q)


def mu_profile(poly: PoweredPolynomial, dists: Sequence[DistributionSpec]) -> MuProfile:
    """
    一次遍历得到 r = 0..q 的全部 μ_r；μ_0 对应空超边。
    """
    _check_inputs(poly, dists)
    profile = mu_profile_with(poly, _abs_factor(dists))
    logger.debug("μ 剖面: %s", ", ".join(f"{v:.6g}" for v in profile.values))
    return profile


def mu_bruteforce(poly: PoweredPolynomial, dists: Sequence[DistributionSpec], r: int) -> float:
    """
    在整个顶点集上枚举所有候选 h₀（不限于项的子超边），作为等价性检验的基准。
    仅用于 n ≤ 8。
    """
    _check_inputs(poly, dists)
    if poly.n > 8:
        raise ParameterError("暴力 μ 仅支持 n ≤ 8")
    factor = _abs_factor(dists)
    best = 0.0
    for size in range(min(r, poly.n) + 1):
        for verts in itertools.combinations(range(poly.n), size):
            for powers in _compositions(r, size):
                h0 = PoweredHyperedge(verts, powers)
                parts = []
                for edge, w in poly.terms:
                    if not edge.contains(h0):
                        continue
                    value = abs(float(w))
                    for v, t in edge.items():
                        if v not in h0.vertices:
                            value *= factor(v, t)
                    parts.append(value)
                best = max(best, math.fsum(parts))
    return best


def _compositions(total: int, parts: int) -> list[tuple[int, ...]]:
    """把 total 拆成 parts 个正整数的有序拆分，按字典序。"""
    if parts == 0:
        return [()] if total == 0 else []
    out = []
    for cut in itertools.combinations(range(1, total), parts - 1):
        bounds = (0,) + cut + (total,)
        out.append(tuple(b - a for a, b in zip(bounds, bounds[1:])))
    return sorted(out)


def product_profile(mu_f: Sequence[float], mu_g: Sequence[float]) -> list[float]:
    """
    乘积多项式（变量不相交）的 μ：μ_i(fg) = max_{i₁+i₂=i} μ_{i₁}(f)·μ_{i₂}(g)。
    """
    qf, qg = len(mu_f) - 1, len(mu_g) - 1
    out = []
    for i in range(qf + qg + 1):
        out.append(max(mu_f[a] * mu_g[i - a] for a in range(max(0, i - qg), min(i, qf) + 1)))
    return out
