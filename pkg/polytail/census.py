"""
超图普查 - 穷举度数 ≥ 2 的带标号带幂超图，构造不增加连通分量的删除顺序，
并在精确整数上验证各计数引理。
"""
import itertools
import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterator

import networkx as nx
import pandas as pd

from polytail.errors import BudgetExceeded, ParameterError
from polytail.poly import PoweredHyperedge
from polytail.settings import BUDGETS, CENSUS_CONFIG

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["k", "l", "c", "dbar", "Dbar", "deltabar", "nubar", "count", "implied_R0"]


@dataclass(frozen=True)
class LabeledHypergraph:
    """顶点集 [ℓ] 上 k 条有序带幂超边。"""

    ell: int
    edges: tuple[PoweredHyperedge, ...]

    @property
    def k(self) -> int:
        return len(self.edges)

    def degrees(self) -> tuple[int, ...]:
        deg = [0] * self.ell
        for edge in self.edges:
            for v in edge.vertices:
                deg[v] += 1
        return tuple(deg)

    def total_powers(self) -> tuple[int, ...]:
        tot = [0] * self.ell
        for edge in self.edges:
            for v, t in edge.items():
                tot[v] += t
        return tuple(tot)

    def line_graph(self) -> nx.Graph:
        """每条超边一个结点，顶点集相交的超边之间连边。"""
        graph = nx.Graph()
        graph.add_nodes_from(range(self.k))
        vertex_sets = [set(e.vertices) for e in self.edges]
        for i, j in itertools.combinations(range(self.k), 2):
            if vertex_sets[i] & vertex_sets[j]:
                graph.add_edge(i, j)
        return graph

    def components(self) -> list[tuple[set[int], list[int]]]:
        """连通分量：(顶点集, 超边下标列表)，按最小超边下标排序。"""
        out = []
        for nodes in nx.connected_components(self.line_graph()):
            edge_ids = sorted(nodes)
            verts = set().union(*(self.edges[i].vertices for i in edge_ids))
            out.append((verts, edge_ids))
        return sorted(out, key=lambda item: item[1][0])


@dataclass(frozen=True)
class OrderingResult:
    """删除顺序及其诱导量。order[s] 为第 s+1 步删除的超边下标。"""

    order: tuple[int, ...]
    deltas: tuple[int, ...]
    v_sets: tuple[frozenset[int], ...]
    nu: tuple[int, ...]

    @property
    def delta_sum(self) -> int:
        return sum(self.deltas)


@dataclass(frozen=True)
class CensusRecord:
    k: int
    ell: int
    c: int
    dbar: tuple[int, ...]
    Dbar: tuple[int, ...]
    deltabar: tuple[int, ...]
    nubar: tuple[int, ...]
    count: int
    implied_R0: float

    @property
    def Delta(self) -> int:
        q = len(self.nubar) - 1
        return sum((q - t) * n for t, n in enumerate(self.nubar))


# ============================================================
# 枚举
# ============================================================

def power_vectors(q: int, eta: int, gamma: int) -> list[tuple[int, ...]]:
    """q 拆成 η 个取值在 [1, Γ] 内的有序部分，按字典序。"""
    out = []
    for cut in itertools.combinations(range(1, q), eta - 1):
        bounds = (0,) + cut + (q,)
        parts = tuple(b - a for a, b in zip(bounds, bounds[1:]))
        if max(parts) <= gamma:
            out.append(parts)
    return sorted(out)


def edge_slots(ell: int, q: int, eta: int, gamma: int) -> list[PoweredHyperedge]:
    """[ℓ] 上所有基数 η、总幂次 q、最大幂次 ≤ Γ 的超边。"""
    vectors = power_vectors(q, eta, gamma)
    return [PoweredHyperedge(verts, powers) for verts in itertools.combinations(range(ell), eta) for powers in vectors]


def _iter_S2(ell: int, k: int, slots: list[PoweredHyperedge], eta: int) -> Iterator[tuple[PoweredHyperedge, ...]]:
    """深度优先生成，剩余超边不足以把所有顶点补到度数 2 时剪枝。"""
    degree = [0] * ell
    chosen: list[PoweredHyperedge] = []

    def deficit() -> int:
        return sum(max(0, 2 - d) for d in degree)

    def rec(pos: int) -> Iterator[tuple[PoweredHyperedge, ...]]:
        if pos == k:
            if deficit() == 0:
                yield tuple(chosen)
            return
        for slot in slots:
            for v in slot.vertices:
                degree[v] += 1
            if deficit() <= eta * (k - pos - 1):
                chosen.append(slot)
                yield from rec(pos + 1)
                chosen.pop()
            for v in slot.vertices:
                degree[v] -= 1

    yield from rec(0)


def enumerate_S2(k: int, ell: int, q: int, eta: int, gamma: int) -> list[LabeledHypergraph]:
    """
    顶点集 [ℓ] 上 k 条有序超边、覆盖全部顶点且每个顶点度数 ≥ 2 的全部带标号超图。

    Raises:
        BudgetExceeded: (每位可选超边数)^k 超过预算。
    """
    if not 1 <= eta <= q:
        raise ParameterError(f"需要 1 ≤ η ≤ q: η={eta}, q={q}")
    if k < 1 or ell < 1 or gamma < 1:
        raise ParameterError("k、ℓ、Γ 必须为正")
    slots = edge_slots(ell, q, eta, gamma)
    space = len(slots) ** k
    if space > BUDGETS["census_space"]:
        raise BudgetExceeded(f"普查原始空间 {space} 超过预算 {BUDGETS['census_space']}")
    return [LabeledHypergraph(ell, edges) for edges in _iter_S2(ell, k, slots, eta)]


# ============================================================
# 删除顺序
# ============================================================

def ordering_nu0(g: LabeledHypergraph) -> OrderingResult:
    """
    在线图上逐步删除结点且不增加连通分量数：优先删除孤立结点，
    否则删除包含最小剩余下标的分量上 DFS 树的一个叶子。保证 ν_0 = c。
    """
    if g.k == 0:
        raise ParameterError("空超图没有删除顺序")
    q = max(e.total_power for e in g.edges)
    line = g.line_graph()
    remaining = line.copy()
    order: list[int] = []
    while remaining.number_of_nodes():
        isolated = sorted(n for n in remaining.nodes if remaining.degree(n) == 0)
        if isolated:
            pick = isolated[0]
        else:
            root = min(remaining.nodes)
            tree = nx.dfs_tree(remaining, source=root)
            leaves = sorted(n for n in tree.nodes if tree.out_degree(n) == 0 and n != root)
            pick = leaves[0]
        order.append(pick)
        remaining.remove_node(pick)

    deltas = [0] * g.ell
    v_sets = []
    nu = [0] * (q + 1)
    for s, idx in enumerate(order):
        later = set().union(*(g.edges[j].vertices for j in order[s + 1:])) if s + 1 < len(order) else set()
        edge = g.edges[idx]
        leaving = frozenset(v for v in edge.vertices if v not in later)
        v_sets.append(leaving)
        removed = 0
        for v, t in edge.items():
            if v in leaving:
                deltas[v] = t
                removed += t
        nu[edge.total_power - removed] += 1
    return OrderingResult(tuple(order), tuple(deltas), tuple(v_sets), tuple(nu))


def verify_ziq1(g: LabeledHypergraph, ordering: OrderingResult) -> list[bool]:
    """每个连通分量上检查 (q−1)k_i − Σ_{v∈C_i} δ_v ≥ q−2。"""
    q = max(e.total_power for e in g.edges)
    results = []
    for verts, edge_ids in g.components():
        lhs = (q - 1) * len(edge_ids) - sum(ordering.deltas[v] for v in verts)
        results.append(lhs >= q - 2)
    return results


def elementary_facts(g: LabeledHypergraph, ordering: OrderingResult) -> dict[str, bool]:
    """η ≤ ℓ_i ≤ ηk_i/2；ηc ≤ ℓ ≤ ηk/2；1 ≤ c ≤ k/2；ν_q ≥ c。"""
    eta = g.edges[0].eta
    q = len(ordering.nu) - 1
    comps = g.components()
    c = len(comps)
    return {
        "component_sizes": all(eta <= len(v) and 2 * len(v) <= eta * len(e) for v, e in comps),
        "vertex_count": eta * c <= g.ell and 2 * g.ell <= eta * g.k,
        "component_count": 1 <= c and 2 * c <= g.k,
        "nu_q_at_least_c": ordering.nu[q] >= c,
    }


def s0_bound(k: int, q: int, eta: int, dbar: tuple[int, ...]) -> int:
    """C(q−1, η−1)^k · Π_v C(k, d_v)。"""
    return math.comb(q - 1, eta - 1) ** k * math.prod(math.comb(k, d) for d in dbar)


def check_S0_bound(graphs: list[LabeledHypergraph], k: int, q: int, eta: int) -> dict[tuple[int, ...], tuple[int, int, bool]]:
    """
    按度数向量分组，检查计数 ≤ C(q−1,η−1)^k Π C(k,d_v)（精确整数比较）。

    Returns:
        {d̄: (计数, 上界, 是否成立)}。
    """
    counts = Counter(g.degrees() for g in graphs)
    out = {}
    for dbar, count in sorted(counts.items()):
        bound = s0_bound(k, q, eta, dbar)
        out[dbar] = (count, bound, count <= bound)
    return out


# ============================================================
# 主计数引理隐含常数
# ============================================================

def implied_R0(count: int, k: int, ell: int, c: int, q: int, gamma: int,
               Dbar: tuple[int, ...], deltabar: tuple[int, ...]) -> float:
    """
    使 |S|·Π D_v!/δ_v! ≤ R₀^{qk} Γ^{qk−ℓ−Σδ_v} k^{qk−c(q−1)−Σ(δ_v−1)} 成立的最小 R₀。
    空类返回 0；k=1 时 k 的幂按 1 处理。
    """
    if count == 0:
        return 0.0
    log_lhs = math.log(count) + sum(math.lgamma(D + 1) - math.lgamma(d + 1) for D, d in zip(Dbar, deltabar))
    gamma_exp = q * k - ell - sum(deltabar)
    k_exp = q * k - c * (q - 1) - sum(d - 1 for d in deltabar)
    log_rhs = gamma_exp * math.log(gamma) + (k_exp * math.log(k) if k > 1 else 0.0)
    return math.exp((log_lhs - log_rhs) / (q * k))


def implied_maincount_constant(census: "CensusResult | SweepSummary") -> float:
    """所有已枚举类上隐含 R₀ 的最大值。"""
    return census.max_implied_R0


@dataclass
class CensusResult:
    """一次 (k, ℓ, q, η, Γ) 普查的全部结论。"""

    k: int
    ell: int
    q: int
    eta: int
    gamma: int
    n_graphs: int
    records: list[CensusRecord]
    nu0_failures: int
    ziq1_failures: int
    fact_failures: int
    s0_failures: int

    @property
    def max_implied_R0(self) -> float:
        return max((r.implied_R0 for r in self.records), default=0.0)

    @property
    def ok(self) -> bool:
        return not (self.nu0_failures or self.ziq1_failures or self.fact_failures or self.s0_failures)


def run_census(k: int, ell: int, q: int, eta: int, gamma: int) -> CensusResult:
    """
    枚举并逐图检查 ν_0 = c、分量不等式与基本事实，按类汇总计数和隐含 R₀。
    """
    graphs = enumerate_S2(k, ell, q, eta, gamma)
    rows: dict[tuple, int] = Counter()
    class_counts: dict[tuple, int] = Counter()
    nu0_fail = ziq1_fail = fact_fail = 0
    for g in graphs:
        ordering = ordering_nu0(g)
        c = len(g.components())
        if ordering.nu[0] != c:
            nu0_fail += 1
        if not all(verify_ziq1(g, ordering)):
            ziq1_fail += 1
        if not all(elementary_facts(g, ordering).values()):
            fact_fail += 1
        key = (c, g.degrees(), g.total_powers(), ordering.deltas)
        class_counts[key] += 1
        rows[key + (ordering.nu,)] += 1

    s0 = check_S0_bound(graphs, k, q, eta)
    s0_fail = sum(1 for _, _, ok in s0.values() if not ok)

    records = []
    for (c, dbar, Dbar, deltabar, nubar), count in sorted(rows.items()):
        r0 = implied_R0(class_counts[(c, dbar, Dbar, deltabar)], k, ell, c, q, gamma, Dbar, deltabar)
        records.append(CensusRecord(k, ell, c, dbar, Dbar, deltabar, nubar, count, r0))

    result = CensusResult(k, ell, q, eta, gamma, len(graphs), records, nu0_fail, ziq1_fail, fact_fail, s0_fail)
    if not result.ok:
        logger.error("普查 k=%d ℓ=%d q=%d η=%d Γ=%d 发现不变量失败", k, ell, q, eta, gamma)
    logger.debug("普查 k=%d ℓ=%d q=%d η=%d Γ=%d: %d 个超图, %d 类", k, ell, q, eta, gamma, len(graphs), len(records))
    return result


def format_vector(vec: tuple[int, ...]) -> str:
    return " ".join(str(x) for x in vec)


def census_table(results: list[CensusResult] | CensusResult) -> pd.DataFrame:
    """普查记录转为 CSV 列顺序的 DataFrame。"""
    if isinstance(results, CensusResult):
        results = [results]
    rows = [
        {
            "k": r.k, "l": r.ell, "c": r.c, "dbar": format_vector(r.dbar), "Dbar": format_vector(r.Dbar),
            "deltabar": format_vector(r.deltabar), "nubar": format_vector(r.nubar), "count": r.count, "implied_R0": r.implied_R0,
        }
        for res in results
        for r in res.records
    ]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


@dataclass
class SweepSummary:
    results: list[CensusResult]

    @property
    def n_graphs(self) -> int:
        return sum(r.n_graphs for r in self.results)

    @property
    def max_implied_R0(self) -> float:
        return max((r.max_implied_R0 for r in self.results), default=0.0)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)

    def failures(self) -> dict[str, int]:
        totals: dict[str, int] = defaultdict(int)
        for r in self.results:
            totals["nu0"] += r.nu0_failures
            totals["ziq1"] += r.ziq1_failures
            totals["facts"] += r.fact_failures
            totals["s0"] += r.s0_failures
        return dict(totals)


def census_sweep(k_max: int | None = None, q_max: int | None = None) -> SweepSummary:
    """
    全范围普查：k ≤ k_max, q ≤ q_max, η ≤ q, Γ ≤ q, ℓ ≤ ηk/2。
    """
    k_max = k_max or CENSUS_CONFIG["k_max"]
    q_max = q_max or CENSUS_CONFIG["q_max"]
    results = []
    for k in range(1, k_max + 1):
        for q in range(1, q_max + 1):
            for eta in range(1, q + 1):
                for gamma in range(1, q + 1):
                    if not power_vectors(q, eta, gamma):
                        continue
                    for ell in range(1, eta * k // 2 + 1):
                        results.append(run_census(k, ell, q, eta, gamma))
    summary = SweepSummary(results)
    logger.info("普查完成: %d 个参数组合, %d 个超图, 最大隐含 R₀=%.6g",
                len(results), summary.n_graphs, summary.max_implied_R0)
    if summary.max_implied_R0 > CENSUS_CONFIG["R0_cap"]:
        logger.warning("最大隐含 R₀ %.6g 超过上限 %.6g", summary.max_implied_R0, CENSUS_CONFIG["R0_cap"])
    return summary
