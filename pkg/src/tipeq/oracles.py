"""Independent exact oracles for small markets.

Most equilibrium conditions at fixed allocation are systems of difference
constraints ``x_j - x_i <= c`` over prices or compensations. They are solved
here with Bellman-Ford, which shares no code with the matching-based
constructors and so serves as an independent check on them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Hashable

from .market import Allocation, Market, PriceSystem, feasible_allocations, welfare
from .tips import min_tip

ZERO = Fraction(0)
Z = "__zero__"  # reference variable pinned to 0


@dataclass
class DifferenceSystem:
    """Constraints ``x[head] - x[tail] <= bound`` with an implicit variable ``Z == 0``."""

    variables: list = field(default_factory=list)
    edges: list = field(default_factory=list)

    def add_var(self, v: Hashable) -> None:
        if v not in self.variables:
            self.variables.append(v)

    def less_eq(self, head, tail, bound) -> None:
        """Record ``x[head] - x[tail] <= bound``; use ``Z`` for the constant 0."""
        for v in (head, tail):
            if v != Z:
                self.add_var(v)
        self.edges.append((tail, head, Fraction(bound)))

    def equal(self, a, b, value) -> None:
        self.less_eq(a, b, value)
        self.less_eq(b, a, -value)

    def _distances(self, start):
        nodes = [Z, *self.variables]
        dist = {v: None for v in nodes}
        dist[start] = ZERO
        for _ in range(len(nodes)):
            changed = False
            for u, v, c in self.edges:
                if dist[u] is not None and (dist[v] is None or dist[u] + c < dist[v]):
                    dist[v] = dist[u] + c
                    changed = True
            if not changed:
                return dist
        return None  # negative cycle

    def solve(self) -> dict | None:
        """A feasible assignment with ``Z = 0``, or ``None``."""
        # virtual source reaching every variable at distance 0
        nodes = [Z, *self.variables]
        dist = {v: ZERO for v in nodes}
        for _ in range(len(nodes) + 1):
            changed = False
            for u, v, c in self.edges:
                if dist[u] + c < dist[v]:
                    dist[v] = dist[u] + c
                    changed = True
            if not changed:
                return {v: dist[v] - dist[Z] for v in self.variables}
        return None

    def upper(self, v) -> Fraction | None:
        """Supremum of ``x[v]``; ``None`` if unbounded. Assumes feasibility."""
        dist = self._distances(Z)
        return None if dist is None else dist[v]

    def lower(self, v) -> Fraction | None:
        """Infimum of ``x[v]``; ``None`` if unbounded below. Assumes feasibility."""
        dist = self._distances(v)
        return None if dist is None or dist[Z] is None else -dist[Z]


def buyer_price_system(market: Market, x: Allocation, discount=None) -> DifferenceSystem:
    """Constraints on prices ``p`` making ``x``'s buyer side a best response.

    ``discount[(b, s)]`` is subtracted from each valuation (minimum tips).
    Unsold stores are pinned to price zero; all prices are nonnegative.
    """
    discount = discount or {}
    val = {o: market.valuation[o] - discount.get(o, ZERO) for o in market.orders}
    sysm = DifferenceSystem()
    sold = {s for _, s, _ in x.triples}
    var = {s: (("p", s) if s in sold else Z) for s in market.stores}
    for s in sold:
        sysm.less_eq(Z, var[s], 0)  # p_s >= 0
    for b in market.buyers:
        mine = x.store_of(b)
        for s in market.stores:
            if mine is None:
                sysm.less_eq(Z, var[s], -val[(b, s)])  # v - p_s <= 0
            elif s != mine:
                # v_mine - p_mine >= v_s - p_s
                if var[mine] != var[s]:
                    sysm.less_eq(var[mine], var[s], val[(b, mine)] - val[(b, s)])
                elif val[(b, mine)] < val[(b, s)]:
                    sysm.less_eq(Z, Z, -1)  # infeasible marker
        if mine is not None:
            sysm.less_eq(var[mine], Z, val[(b, mine)])  # v - p >= 0
    return sysm


def courier_comp_system(market: Market, x: Allocation) -> DifferenceSystem:
    """Constraints on compensations ``w`` making ``x``'s couriers best-respond.

    Undelivered orders are pinned to zero.
    """
    sysm = DifferenceSystem()
    delivered = x.orders
    var = {o: (("w", o) if o in delivered else Z) for o in market.orders}
    for o in delivered:
        sysm.less_eq(Z, var[o], 0)
    for d in market.couriers:
        mine = x.order_of(d)
        for o in market.orders:
            c = market.cost[(d, *o)]
            if mine is None:
                sysm.less_eq(var[o], Z, c)  # w_o - c <= 0
            elif o != mine:
                cm = market.cost[(d, *mine)]
                if var[mine] != var[o]:
                    sysm.less_eq(var[o], var[mine], c - cm)
                elif cm > c:
                    sysm.less_eq(Z, Z, -1)
        if mine is not None:
            sysm.less_eq(Z, var[mine], -market.cost[(d, *mine)])  # w - c >= 0
    return sysm


def _unpack(sol, prefix, keys):
    return {k: sol.get((prefix, k), ZERO) for k in keys}


def without_tip_prices(market: Market, x: Allocation) -> PriceSystem | None:
    """Some without-tip equilibrium price system for ``x``, or ``None`` if none exists."""
    ps = buyer_price_system(market, x).solve()
    if ps is None:
        return None
    ws = courier_comp_system(market, x).solve()
    if ws is None:
        return None
    return PriceSystem(_unpack(ps, "p", market.stores), _unpack(ws, "w", market.orders))


def best_without_tip_bruteforce(market: Market):
    """Highest-welfare allocation admitting a without-tip equilibrium.

    Returns ``(welfare, allocation, prices)`` or ``None``; ties keep the first
    allocation in lexicographic order.
    """
    best = None
    for x in feasible_allocations(market):
        w = welfare(market, x)
        if best is not None and w <= best[0]:
            continue
        prices = without_tip_prices(market, x)
        if prices is not None:
            best = (w, x, prices)
    return best


def without_tip_bounds(market: Market, x: Allocation):
    """Exact ranges of each price and compensation over all without-tip equilibria at ``x``.

    Returns ``(price_ranges, comp_ranges)`` mapping ids to ``(low, high)`` or ``None``
    if ``x`` admits no equilibrium.
    """
    bsys, csys = buyer_price_system(market, x), courier_comp_system(market, x)
    if bsys.solve() is None or csys.solve() is None:
        return None
    sold = {s for _, s, _ in x.triples}
    pr = {s: ((bsys.lower(("p", s)), bsys.upper(("p", s))) if s in sold else (ZERO, ZERO))
          for s in market.stores}
    cr = {o: ((csys.lower(("w", o)), csys.upper(("w", o))) if o in x.orders else (ZERO, ZERO))
          for o in market.orders}
    return pr, cr


def supportable_with_plan(market: Market, x: Allocation, w_bar) -> PriceSystem | None:
    """Prices making ``x`` a with-tip equilibrium at compensations ``w_bar`` and zero tips.

    Minimum tips come from the general closed form, not from courier utilities.
    """
    from .equilibrium import verify_with_tip  # local: avoid import cycle
    zero = {}
    t_low = {(b, s): min_tip(market, w_bar, zero, b, s) for b, s in market.orders}
    if any(t_low[o] for o in x.orders):
        return None
    sol = buyer_price_system(market, x, discount=t_low).solve()
    if sol is None:
        return None
    prices = PriceSystem(_unpack(sol, "p", market.stores), dict(w_bar))
    return prices if verify_with_tip(market, prices, x).ok else None


def courier_bound_oracle(market: Market, omega) -> dict:
    """Supremum of each courier's utility over all courier plans serving ``omega``.

    Enumerates every injection of ``omega`` into couriers and maximizes each
    courier's utility over the compensation polytope of that injection.
    Compensations on other orders are zero.
    """
    omega = list(omega)
    sup = {d: None for d in market.couriers}
    for ds in permutations(market.couriers, len(omega)):
        x = Allocation(frozenset((b, s, d) for (b, s), d in zip(omega, ds)))
        sysm = courier_comp_system(market, x)
        if sysm.solve() is None:
            continue
        for d in market.couriers:
            o = x.order_of(d)
            if o is None:
                u = ZERO
            else:
                hi = sysm.upper(("w", o))
                u = None if hi is None else hi - market.cost[(d, *o)]
            if u is None:
                sup[d] = "unbounded"
            elif sup[d] != "unbounded" and (sup[d] is None or u > sup[d]):
                sup[d] = u
    return sup


def has_perfect_3dm(hyperedges, q: int) -> bool:
    """Exhaustive search for ``q`` pairwise disjoint hyperedges."""
    edges = sorted(set(map(tuple, hyperedges)))

    def rec(start, used_a, used_b, used_c, k):
        if k == q:
            return True
        for i in range(start, len(edges)):
            a, b, c = edges[i]
            if a in used_a or b in used_b or c in used_c:
                continue
            if rec(i + 1, used_a | {a}, used_b | {b}, used_c | {c}, k + 1):
                return True
        return False

    return rec(0, frozenset(), frozenset(), frozenset(), 0)
