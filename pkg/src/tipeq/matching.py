"""Exact matching and flow kernels.

All routines accept :class:`~fractions.Fraction` (or int) weights and never
round. Assignment problems are solved with the potential-based Hungarian
method; min-cost flow uses successive shortest paths with Johnson potentials.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Mapping, Sequence

Node = Hashable


def _assign(cost: list[list]) -> list[int]:
    """Min-cost assignment of every row to a distinct column (rows <= cols).

    Returns ``col_of_row``. Classic O(n^2 m) Hungarian algorithm with row/column
    potentials; ties resolve towards lower column indices.
    """
    n = len(cost)
    if n == 0:
        return []
    m = len(cost[0])
    assert n <= m
    inf = math.inf
    u = [Fraction(0)] * (n + 1)
    v = [Fraction(0)] * (m + 1)
    row_of = [0] * (m + 1)  # 1-based row matched to column j; 0 = free
    way = [0] * (m + 1)
    for i in range(1, n + 1):
        row_of[0] = i
        j0 = 0
        minv = [inf] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = row_of[j0]
            delta, j1 = inf, 0
            for j in range(1, m + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1][j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j], way[j] = cur, j0
                if minv[j] < delta:
                    delta, j1 = minv[j], j
            for j in range(m + 1):
                if used[j]:
                    u[row_of[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if row_of[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            row_of[j0] = row_of[j1]
            j0 = j1
    col_of = [0] * n
    for j in range(1, m + 1):
        if row_of[j]:
            col_of[row_of[j] - 1] = j - 1
    return col_of


@dataclass(frozen=True)
class WeightedBipartiteGraph:
    """Left/right node ids and a sparse weight map; absent keys are absent edges."""

    left: tuple
    right: tuple
    weight: Mapping[tuple, Fraction]

    def __post_init__(self):
        object.__setattr__(self, "left", tuple(self.left))
        object.__setattr__(self, "right", tuple(self.right))
        if len(set(self.left)) != len(self.left) or len(set(self.right)) != len(self.right):
            raise ValueError("duplicate node ids")
        ls, rs = set(self.left), set(self.right)
        for a, b in self.weight:
            if a not in ls or b not in rs:
                raise ValueError(f"edge ({a!r}, {b!r}) references an unknown node")
        object.__setattr__(self, "weight", {k: Fraction(w) for k, w in self.weight.items()})

    @classmethod
    def dense(cls, left, right, fn) -> "WeightedBipartiteGraph":
        return cls(left, right, {(a, b): fn(a, b) for a in left for b in right})


def _lcd(values) -> int:
    d = 1
    for x in values:
        d = d * x.denominator // math.gcd(d, x.denominator)
    return d


def max_weight_matching(g: WeightedBipartiteGraph) -> tuple[dict, Fraction]:
    """Maximum-weight matching over all partial matchings of ``g``.

    Only edges of positive weight are ever returned; among maximum-weight
    matchings one with the fewest edges is chosen. Returns ``(left -> right, weight)``.
    """
    nl, nr = len(g.left), len(g.right)
    positive = {k: w for k, w in g.weight.items() if w > 0}
    if not positive:
        return {}, Fraction(0)
    # A perturbation below the weight resolution prefers fewer edges without
    # changing which total weights are optimal.
    eps = Fraction(1, _lcd(positive.values()) * (min(nl, nr) + 1))
    cols = max(nl, nr)
    cost = [[Fraction(0)] * cols for _ in range(nl)]
    for i, a in enumerate(g.left):
        for j, b in enumerate(g.right):
            w = positive.get((a, b))
            if w is not None:
                cost[i][j] = eps - w
    col_of = _assign(cost)
    matching = {}
    for i, j in enumerate(col_of):
        if j < nr and (g.left[i], g.right[j]) in positive:
            matching[g.left[i]] = g.right[j]
    total = sum((positive[(a, b)] for a, b in matching.items()), Fraction(0))
    return matching, total


def min_cost_cover(g: WeightedBipartiteGraph, targets, excluded=None):
    """Cheapest matching that covers every node in ``targets``.

    ``excluded`` optionally removes one right node. Weights are read as costs.
    Returns ``(target -> right, cost)`` or ``None`` when no covering matching exists.
    """
    targets = list(targets)
    known = set(g.left)
    for t in targets:
        if t not in known:
            raise KeyError(f"unknown left node {t!r}")
    if excluded is not None and excluded not in set(g.right):
        raise KeyError(f"unknown right node {excluded!r}")
    if len(set(targets)) != len(targets):
        raise ValueError("duplicate targets")
    right = [r for r in g.right if r != excluded]
    if len(targets) > len(right):
        return None
    if not targets:
        return {}, Fraction(0)
    finite = [abs(w) for w in g.weight.values()]
    big = 1 + sum(finite, Fraction(0))
    cost = [[g.weight.get((t, r), big) for r in right] for t in targets]
    col_of = _assign(cost)
    assignment = {}
    total = Fraction(0)
    for i, j in enumerate(col_of):
        key = (targets[i], right[j])
        if key not in g.weight:
            return None
        assignment[targets[i]] = right[j]
        total += g.weight[key]
    return assignment, total


def min_cost_cover_all_but_one(g: WeightedBipartiteGraph, targets, excluded=None):
    """Cheapest matching covering all but one of ``targets``; ``None`` if impossible."""
    targets = list(targets)
    if not targets:
        raise ValueError("targets must be nonempty")
    best = None
    for dropped in targets:
        res = min_cost_cover(g, [t for t in targets if t != dropped], excluded)
        if res is not None and (best is None or res[1] < best):
            best = res[1]
    return best


def min_walrasian_prices(buyers: Sequence, items: Sequence, value: Mapping, matching: Mapping):
    """Buyer-optimal (minimum) supporting prices for a maximum-weight ``matching``.

    Each buyer receives her marginal contribution ``SW - SW(without b)``; a matched
    item is priced at value minus that utility, unmatched items at zero.
    ``matching`` must be maximum-weight for ``value``; negative values act as absent edges.
    """
    g = WeightedBipartiteGraph(buyers, items, dict(value))
    _, sw = max_weight_matching(g)
    prices = {i: Fraction(0) for i in items}
    for b, i in matching.items():
        rest = [x for x in buyers if x != b]
        sub = WeightedBipartiteGraph(rest, items,
                                     {k: w for k, w in g.weight.items() if k[0] != b})
        _, sw_minus = max_weight_matching(sub)
        utility = sw - sw_minus
        prices[i] = g.weight[(b, i)] - utility
    return prices


def walrasian_two_sided(buyers: Sequence, items: Sequence, value: Mapping):
    """Walrasian equilibrium of a unit-demand, unit-supply market at minimum prices.

    Returns ``(prices, matching)`` where ``matching`` maps buyer -> item.
    """
    for k, v in value.items():
        if v < 0:
            raise ValueError(f"negative value for {k}")
    g = WeightedBipartiteGraph(buyers, items, dict(value))
    matching, _ = max_weight_matching(g)
    return min_walrasian_prices(buyers, items, value, matching), matching


def supports(value: Mapping, buyers, items, prices: Mapping, matching: Mapping) -> bool:
    """Walrasian support predicate, with absent values read as zero."""
    for b in buyers:
        best = max([Fraction(0)] + [value.get((b, j), 0) - prices[j] for j in items])
        if b in matching:
            i = matching[b]
            if value.get((b, i), 0) - prices[i] < best:
                return False
        elif best > 0:
            return False
    matched = set(matching.values())
    return all(prices[j] >= 0 for j in items) and all(prices[j] == 0 for j in items
                                                        if j not in matched)


@dataclass(frozen=True)
class Arc:
    tail: Node
    head: Node
    capacity: int
    cost: Fraction


@dataclass
class FlowNetwork:
    """Directed network with integral capacities and rational costs."""

    source: Node
    sink: Node
    nodes: list = field(default_factory=list)
    arcs: list[Arc] = field(default_factory=list)

    def __post_init__(self):
        self._known = set(self.nodes)
        for node in (self.source, self.sink):
            self.add_node(node)
        arcs, self.arcs = self.arcs, []
        for a in arcs:
            self.add_arc(a.tail, a.head, a.capacity, a.cost)

    def add_node(self, node) -> None:
        if node not in self._known:
            self._known.add(node)
            self.nodes.append(node)

    def add_arc(self, tail, head, capacity=1, cost=0) -> int:
        if tail == head:
            raise ValueError(f"self-loop at {tail!r}")
        if not isinstance(capacity, int) or capacity < 0:
            raise ValueError("capacities must be nonnegative integers")
        if head == self.source or tail == self.sink:
            raise ValueError("source may not have in-arcs and sink may not have out-arcs")
        self.add_node(tail)
        self.add_node(head)
        self.arcs.append(Arc(tail, head, capacity, Fraction(cost)))
        return len(self.arcs) - 1

    def to_dot(self) -> str:
        """Debug rendering; the format is not stable."""
        lines = ["digraph flow {"]
        for a in self.arcs:
            lines.append(f'  "{a.tail}" -> "{a.head}" [label="cap={a.capacity} cost={a.cost}"];')
        lines.append("}")
        return "\n".join(lines)


@dataclass(frozen=True)
class FlowResult:
    flow: tuple[int, ...]  # per arc, aligned with ``FlowNetwork.arcs``
    cost: Fraction


def min_cost_flow(net: FlowNetwork, supply: int) -> FlowResult | None:
    """Integral min-cost flow of exactly ``supply`` units; ``None`` if infeasible.

    Raises ``ValueError`` when the network has a negative-cost cycle.
    """
    if supply < 0:
        raise ValueError("supply must be nonnegative")
    index = {v: i for i, v in enumerate(net.nodes)}
    N = len(net.nodes)
    # residual graph: edge e and its reverse e ^ 1
    to, cap, cst = [], [], []
    adj = [[] for _ in range(N)]
    for a in net.arcs:
        u, v = index[a.tail], index[a.head]
        adj[u].append(len(to)); to.append(v); cap.append(a.capacity); cst.append(a.cost)
        adj[v].append(len(to)); to.append(u); cap.append(0); cst.append(-a.cost)
    s, t = index[net.source], index[net.sink]

    # Bellman-Ford potentials from the source over arcs with capacity.
    inf = math.inf
    pot = [inf] * N
    pot[s] = Fraction(0)
    for it in range(N):
        changed = False
        for u in range(N):
            if pot[u] == inf:
                continue
            for e in adj[u]:
                if cap[e] > 0 and pot[u] + cst[e] < pot[to[e]]:
                    pot[to[e]] = pot[u] + cst[e]
                    changed = True
        if not changed:
            break
    else:
        raise ValueError("network contains a negative-cost cycle")
    pot = [p if p != inf else Fraction(0) for p in pot]

    sent, total = 0, Fraction(0)
    while sent < supply:
        dist = [inf] * N
        prev = [-1] * N
        dist[s] = Fraction(0)
        heap = [(dist[s], s)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for e in adj[u]:
                if cap[e] <= 0:
                    continue
                v = to[e]
                nd = d + cst[e] + pot[u] - pot[v]
                if nd < dist[v]:
                    dist[v], prev[v] = nd, e
                    heapq.heappush(heap, (nd, v))
        if dist[t] == inf:
            return None
        for v in range(N):
            if dist[v] != inf:
                pot[v] += dist[v]
        push, v = supply - sent, t
        while v != s:
            e = prev[v]
            push = min(push, cap[e])
            v = to[e ^ 1]
        v = t
        while v != s:
            e = prev[v]
            cap[e] -= push
            cap[e ^ 1] += push
            total += push * cst[e]
            v = to[e ^ 1]
        sent += push
    flow = tuple(cap[2 * i + 1] for i in range(len(net.arcs)))
    return FlowResult(flow, total)
