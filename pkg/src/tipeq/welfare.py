"""Optimal welfare: exhaustive search, flow solvers for structured costs, and
efficient equilibria for those structured markets."""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .equilibrium import EquilibriumCertificate, supports_equilibrium
from .market import Allocation, InternalInvariantError, Market, MarketError, \
    feasible_allocations, welfare
from .matching import FlowNetwork, min_cost_flow

ZERO = Fraction(0)
DEFAULT_CAP = 6
CAP_ENV = "TIPEQ_BRUTE_CAP"


class CapExceededError(RuntimeError):
    pass


class StructureKind(str, enum.Enum):
    COURIER_STORE = "courier-store"
    COURIER_BUYER = "courier-buyer"
    SINGLE_MINDED = "single-minded-buyers"
    UNSTRUCTURED = "unstructured"


@dataclass(frozen=True)
class CostStructure:
    """``base`` is c(b, s); ``courier_part`` is keyed (d, s) or (d, b) by kind."""

    kind: StructureKind
    base: Mapping = field(default_factory=dict)
    courier_part: Mapping = field(default_factory=dict)

    def recompose(self, d: str, b: str, s: str) -> Fraction:
        key = (d, s) if self.kind is StructureKind.COURIER_STORE else (d, b)
        return self.base[(b, s)] + self.courier_part[key]


def _residuals(market: Market):
    base = {(b, s): min(market.cost[(d, b, s)] for d in market.couriers) for b, s in market.orders}
    res = {(d, b, s): market.cost[(d, b, s)] - base[(b, s)] for d, b, s in market.cost}
    return base, res


def _courier_store(market, base, res):
    part = {}
    for d in market.couriers:
        for s in market.stores:
            vals = {res[(d, b, s)] for b in market.buyers}
            if len(vals) != 1:
                return None
            part[(d, s)] = vals.pop()
    return CostStructure(StructureKind.COURIER_STORE, base, part)


def _courier_buyer(market, base, res):
    part = {}
    for d in market.couriers:
        for b in market.buyers:
            vals = {res[(d, b, s)] for s in market.stores}
            if len(vals) != 1:
                return None
            part[(d, b)] = vals.pop()
    return CostStructure(StructureKind.COURIER_BUYER, base, part)


def is_single_minded(market: Market) -> bool:
    return all(sum(1 for s in market.stores if market.valuation[(b, s)] > 0) <= 1
               for b in market.buyers)


def applicable_structures(market: Market) -> list[CostStructure]:
    """Every structure the market satisfies, in detection order."""
    base, res = _residuals(market)
    out = [c for c in (_courier_store(market, base, res), _courier_buyer(market, base, res))
           if c is not None]
    if is_single_minded(market):
        out.append(CostStructure(StructureKind.SINGLE_MINDED))
    return out


def detect_cost_structure(market: Market) -> CostStructure:
    found = applicable_structures(market)
    return found[0] if found else CostStructure(StructureKind.UNSTRUCTURED)


def brute_cap() -> int:
    raw = os.environ.get(CAP_ENV)
    if raw is None:
        return DEFAULT_CAP
    try:
        return int(raw)
    except ValueError:
        raise MarketError(f"{CAP_ENV} must be an integer, got {raw!r}") from None


def _check_cap(market: Market, cap: int | None) -> None:
    cap = brute_cap() if cap is None else cap
    if max(market.dims) > cap:
        raise CapExceededError(
            f"market dims {market.dims} exceed the brute-force cap {cap}; "
            "use a structured solver or raise the cap")


def optimal_welfare_bruteforce(market: Market, cap: int | None = None):
    """Exact optimum over all feasible allocations.

    Ties go to the lexicographically first sorted triple list.
    """
    _check_cap(market, cap)
    m, n, l = market.dims
    B, S, D = market.buyers, market.stores, market.couriers
    surplus = [[[market.surplus(b, s, d) for d in D] for s in S] for b in B]
    scale = 1
    for row in surplus:
        for col in row:
            for x in col:
                scale = scale * x.denominator // math.gcd(scale, x.denominator)
    g = [[[int(x * scale) for x in col] for col in row] for row in surplus]
    best = [0, ()]
    acc = []

    def rec(start, used_s, used_d, total):
        if total > best[0]:
            best[0], best[1] = total, tuple(acc)
        for i in range(start, m):
            gi = g[i]
            for j in range(n):
                if used_s >> j & 1:
                    continue
                gij = gi[j]
                for k in range(l):
                    if used_d >> k & 1:
                        continue
                    acc.append((i, j, k))
                    rec(i + 1, used_s | 1 << j, used_d | 1 << k, total + gij[k])
                    acc.pop()

    rec(0, 0, 0, 0)
    x = Allocation(frozenset((B[i], S[j], D[k]) for i, j, k in best[1]))
    return Fraction(best[0], scale), x


def _sweep(market: Market, net: FlowNetwork, decode):
    best_w, best_x = ZERO, Allocation()
    for f in range(1, min(market.dims) + 1):
        res = min_cost_flow(net, f)
        if res is None:
            break
        if -res.cost > best_w:
            best_w, best_x = -res.cost, decode(res.flow)
    if welfare(market, best_x) != best_w:
        raise InternalInvariantError("decoded flow does not match its cost")
    return best_w, best_x


def _gain(market, b, s):
    return market.valuation[(b, s)] - market.store_cost[s]


def optimal_welfare_flow(market: Market, structure: CostStructure | None = None):
    """Optimal welfare for courier-store or courier-buyer decomposable costs."""
    return _sweep(market, *decomposable_network(market, structure))


def decomposable_network(market: Market, structure: CostStructure | None = None):
    """Flow network whose ``f``-unit min-cost flow is the best ``f``-trade allocation.

    Returns ``(network, decode)`` where ``decode(flow)`` rebuilds the allocation.
    """
    structure = structure or detect_cost_structure(market)
    kind = structure.kind
    if kind not in (StructureKind.COURIER_STORE, StructureKind.COURIER_BUYER):
        raise ValueError(f"flow solver needs decomposable costs, got {kind.value}")
    net = FlowNetwork("source", "sink")
    # mid is the side whose dummy node feeds the couriers
    if kind is StructureKind.COURIER_STORE:
        first, mid = market.buyers, market.stores
    else:
        first, mid = market.stores, market.buyers
    for a in first:
        net.add_arc("source", ("first", a))
    order_arcs = {}
    for b, s in market.orders:
        a, z = (b, s) if kind is StructureKind.COURIER_STORE else (s, b)
        net.add_arc(("first", a), ("order", b, s), 1, -_gain(market, b, s))
        order_arcs[net.add_arc(("order", b, s), ("mid", z), 1, structure.base[(b, s)])] = (b, s)
    courier_arcs = {}
    for z in mid:
        net.add_arc(("mid", z), ("dummy", z))
        for d in market.couriers:
            courier_arcs[net.add_arc(("dummy", z), ("courier", d), 1,
                                     structure.courier_part[(d, z)])] = (z, d)
    for d in market.couriers:
        net.add_arc(("courier", d), "sink")

    def decode(flow):
        by_mid = {}
        for i, (z, d) in courier_arcs.items():
            if flow[i]:
                by_mid[z] = d
        triples = []
        for i, (b, s) in order_arcs.items():
            if flow[i]:
                z = s if kind is StructureKind.COURIER_STORE else b
                triples.append((b, s, by_mid[z]))
        return Allocation(frozenset(triples))

    return net, decode


def optimal_welfare_single_minded(market: Market):
    """Optimal welfare when each buyer values at most one store positively."""
    return _sweep(market, *single_minded_network(market))


def single_minded_network(market: Market):
    if not is_single_minded(market):
        raise ValueError("some buyer values more than one store positively")
    net = FlowNetwork("source", "sink")
    for s in market.stores:
        net.add_arc("source", ("store", s))
    arcs = {}
    for b, s in market.orders:
        if market.valuation[(b, s)] <= 0:
            continue
        net.add_arc(("store", s), ("bs", b, s), 1, -_gain(market, b, s))
        for d in market.couriers:
            arcs[net.add_arc(("bs", b, s), ("courier", d), 1, market.cost[(d, b, s)])] = (b, s, d)
    for d in market.couriers:
        net.add_arc(("courier", d), "sink")

    def decode(flow):
        return Allocation(frozenset(t for i, t in arcs.items() if flow[i]))

    return net, decode


def optimal_welfare_structured(market: Market, structure: CostStructure | None = None):
    structure = structure or detect_cost_structure(market)
    if structure.kind is StructureKind.SINGLE_MINDED:
        return optimal_welfare_single_minded(market)
    return optimal_welfare_flow(market, structure)


def efficient_equilibrium_structured(market: Market) -> EquilibriumCertificate:
    """With-tip equilibrium attaining the optimal welfare of a structured market."""
    structure = detect_cost_structure(market)
    if structure.kind is StructureKind.UNSTRUCTURED:
        raise ValueError("market has no exploitable cost structure")
    _, x = optimal_welfare_structured(market, structure)
    cert = supports_equilibrium(market, x)
    if cert is None:
        raise InternalInvariantError("optimal allocation of a structured market is not supportable")
    return cert


def optimal_equilibrium_welfare_bruteforce(market: Market, cap: int | None = None):
    """Best welfare over allocations some with-tip equilibrium supports.

    The empty allocation is a candidate. Returns ``(welfare, certificate)`` or
    ``None`` when nothing is supportable.
    """
    _check_cap(market, cap)
    ranked = sorted(((welfare(market, x), i, x) for i, x in enumerate(feasible_allocations(market))),
                    key=lambda r: (-r[0], r[1]))
    for w, _, x in ranked:
        cert = supports_equilibrium(market, x)
        if cert is not None:
            return w, cert
    return None


def hardness_instance_from_3dm(hyperedges, buyers=None, stores=None, couriers=None) -> Market:
    """Market whose optimal equilibrium welfare is ``q`` iff the 3DM instance is solvable.

    Hyperedges ``(a, b, c)`` name a buyer, a store and a courier; vertex sets
    default to the coordinates that appear. Valuations are 1; a courier's cost
    is 0 on hyperedges and 1 elsewhere.
    """
    edges = [tuple(e) for e in hyperedges]
    if any(len(e) != 3 for e in edges):
        raise MarketError("hyperedges must be triples", "hyperedges")
    sides = [list(v) if v is not None else sorted({e[i] for e in edges}, key=str)
             for i, v in enumerate((buyers, stores, couriers))]
    if len({len(v) for v in sides}) != 1 or not sides[0]:
        raise MarketError(f"vertex sets must be nonempty and equal-sized, got "
                          f"{[len(v) for v in sides]}", "hyperedges")
    for e in edges:
        for i in range(3):
            if e[i] not in sides[i]:
                raise MarketError(f"hyperedge {e} uses an unknown vertex", "hyperedges")
    name = [{v: f"{p}{v}" for v in side} for p, side in zip("bsd", sides)]
    B, S, D = ([name[i][v] for v in sides[i]] for i in range(3))
    T = {(name[2][c], name[0][a], name[1][b]) for a, b, c in edges}
    valuation = {(b, s): Fraction(1) for b in B for s in S}
    cost = {(d, b, s): Fraction(0 if (d, b, s) in T else 1) for d in D for b in B for s in S}
    return Market(B, S, D, valuation, cost)
