"""Verification and construction of equilibria with and without tips.

Verifiers return a :class:`Verdict` listing every violated condition. Every
constructor checks its own output with the matching verifier before returning.
Markets with store costs are verified in the store-cost sense: unsold stores
must be priced at their cost and buyers trade off ``v - p``. Constructors work
on zero-store-cost markets; normalize first with
:func:`tipeq.market.normalize_store_costs`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations

from .courier import build_courier_plan, courier_graph, courier_utilities, max_courier_utilities
from .market import (Allocation, InternalInvariantError, Market, MarketError, PriceSystem,
                     best_response, distinct_orders, require_feasible, validate_allocation,
                     welfare)
from .matching import WeightedBipartiteGraph, max_weight_matching, min_cost_cover, \
    min_walrasian_prices, walrasian_two_sided
from .serialize import allocation_from_list, allocation_to_list, dumps, encode_rational, \
    prices_from_dict, prices_to_dict, _parse
from .tips import buyer_min_tips, equilibrium_min_tips

ZERO = Fraction(0)
CERTIFICATE_SCHEMA = "tipeq.certificate/1"


class Condition(str, enum.Enum):
    BUYER_BR = "buyer-br"
    BUYER_MIN_TIP = "buyer-min-tip"
    COURIER_BR = "courier-br"
    UNSOLD_PRICE = "unsold-price"
    UNDELIVERED_COMPENSATION = "undelivered-compensation"
    UNDELIVERED_TIP = "undelivered-tip"
    INFEASIBLE_ALLOCATION = "infeasible-allocation"


class Mode(str, enum.Enum):
    WITH_TIP = "with-tip"
    WITHOUT_TIP = "without-tip"


@dataclass(frozen=True)
class Violation:
    condition: Condition
    agent: object
    witness: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def enc(v):
            if isinstance(v, Fraction):
                return encode_rational(v)
            if isinstance(v, tuple):
                return list(v)
            return v
        return {"condition": self.condition.value, "agent": enc(self.agent),
                "witness": {k: enc(v) for k, v in self.witness.items()}}


@dataclass(frozen=True)
class Verdict:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def tags(self) -> list[str]:
        return [v.condition.value for v in self.violations]


@dataclass(frozen=True)
class EquilibriumCertificate:
    prices: PriceSystem
    allocation: Allocation
    mode: Mode
    market_clearing: bool = True

    def welfare(self, market: Market) -> Fraction:
        return welfare(market, self.allocation)


def _check_structure(market: Market, prices: PriceSystem) -> PriceSystem:
    dense = prices.dense(market)
    for s in market.stores:
        if dense.p[s] < market.store_cost[s]:
            raise MarketError("price below store cost", f"p[{s}]")
    return dense


def _courier_checks(market, x, pay, out):
    for d in market.couriers:
        util = courier_utilities(market, pay, d)
        mine = x.order_of(d)
        if mine not in best_response(util):
            top = max(util, key=util.get)
            out.append(Violation(Condition.COURIER_BR, d, {
                "assigned": mine, "utility": util[mine] if mine else ZERO,
                "preferred": top, "preferred_utility": util[top]}))


def _buyer_check(b, mine, util, out):
    if mine not in best_response(util):
        top = max(util, key=util.get)
        out.append(Violation(Condition.BUYER_BR, b, {
            "assigned": mine, "utility": util[mine] if mine else ZERO,
            "preferred": top, "preferred_utility": util[top]}))


def _clearing_checks(market, x, dense, out, tips):
    sold = {s for _, s, _ in x.triples}
    delivered = x.orders
    for s in market.stores:
        if s not in sold and dense.p[s] != market.store_cost[s]:
            out.append(Violation(Condition.UNSOLD_PRICE, s, {"price": dense.p[s]}))
    for o in market.orders:
        if o in delivered:
            continue
        if dense.w[o]:
            out.append(Violation(Condition.UNDELIVERED_COMPENSATION, o, {"w": dense.w[o]}))
        if tips and dense.t[o]:
            out.append(Violation(Condition.UNDELIVERED_TIP, o, {"t": dense.t[o]}))


def verify_without_tip(market: Market, prices: PriceSystem, x: Allocation,
                       market_clearing: bool = True) -> Verdict:
    dense = _check_structure(market, prices)
    if not dense.tip_free:
        raise MarketError("without-tip verification requires zero tips", "t")
    if not validate_allocation(market, x):
        return Verdict((Violation(Condition.INFEASIBLE_ALLOCATION, None),))
    out: list[Violation] = []
    _courier_checks(market, x, dense.w, out)
    for b in market.buyers:
        util = {s: market.valuation[(b, s)] - dense.p[s] for s in market.stores}
        _buyer_check(b, x.store_of(b), util, out)
    if market_clearing:
        _clearing_checks(market, x, dense, out, tips=False)
    return Verdict(tuple(out))


def verify_with_tip(market: Market, prices: PriceSystem, x: Allocation,
                    market_clearing: bool = True) -> Verdict:
    dense = _check_structure(market, prices)
    if not validate_allocation(market, x):
        return Verdict((Violation(Condition.INFEASIBLE_ALLOCATION, None),))
    out: list[Violation] = []
    pay = {o: dense.w[o] + dense.t[o] for o in market.orders}
    _courier_checks(market, x, pay, out)
    for b in market.buyers:
        t_low = buyer_min_tips(market, dense.w, dense.t, b)
        util = {s: market.valuation[(b, s)] - dense.p[s] - t_low[s] for s in market.stores}
        mine = x.store_of(b)
        _buyer_check(b, mine, util, out)
        if mine is not None and dense.t[(b, mine)] != t_low[mine]:
            out.append(Violation(Condition.BUYER_MIN_TIP, b, {
                "store": mine, "tip": dense.t[(b, mine)], "min_tip": t_low[mine]}))
    if market_clearing:
        _clearing_checks(market, x, dense, out, tips=True)
    return Verdict(tuple(out))


def verify(market: Market, cert: EquilibriumCertificate) -> Verdict:
    fn = verify_with_tip if cert.mode is Mode.WITH_TIP else verify_without_tip
    return fn(market, cert.prices, cert.allocation, cert.market_clearing)


def _checked(market: Market, cert: EquilibriumCertificate) -> EquilibriumCertificate:
    verdict = verify(market, cert)
    if not verdict.ok:
        raise InternalInvariantError(f"constructed certificate fails: {verdict.tags()}")
    return cert


def _require_verified(market, cert, mode):
    if cert.mode is not mode or not cert.market_clearing:
        raise ValueError(f"expected a market-clearing {mode.value} certificate")
    verdict = verify(market, cert)
    if not verdict.ok:
        raise ValueError(f"certificate does not verify: {verdict.tags()}")


def lift_without_to_with(market: Market, cert: EquilibriumCertificate) -> EquilibriumCertificate:
    """A without-tip equilibrium is also a with-tip equilibrium at zero tips."""
    _require_verified(market, cert, Mode.WITHOUT_TIP)
    out = EquilibriumCertificate(cert.prices, cert.allocation, Mode.WITH_TIP)
    return _checked(market, out)


def to_zero_tip(market: Market, cert: EquilibriumCertificate) -> EquilibriumCertificate:
    """Fold tips into prices and compensations of the delivered orders."""
    _require_verified(market, cert, Mode.WITH_TIP)
    dense = cert.prices.dense(market)
    x = cert.allocation
    p = dict(dense.p)  # unsold stores keep their price: zero, or the store cost
    w = {o: ZERO for o in market.orders}
    for b, s, _ in x.triples:
        p[s] = dense.p[s] + dense.t[(b, s)]
        w[(b, s)] = dense.w[(b, s)] + dense.t[(b, s)]
    return _checked(market, EquilibriumCertificate(PriceSystem(p, w), x, Mode.WITH_TIP))


def _no_store_costs(market):
    if market.has_store_costs:
        raise MarketError("normalize store costs before constructing equilibria", "store_costs")


def supports_equilibrium(market: Market, x: Allocation) -> EquilibriumCertificate | None:
    """Certificate showing ``x`` is a with-tip equilibrium allocation, or ``None``.

    Couriers are paid the utility-maximal plan for the delivered orders, tips are
    zero, and the buyer side must be a maximum-weight matching once each order is
    discounted by its minimum tip.
    """
    require_feasible(market, x)
    _no_store_costs(market)
    omega = sorted(x.orders, key=lambda o: (market.buyer_index[o[0]], market.store_index[o[1]]))
    own = {(b, s): d for b, s, d in x.triples}
    # couriers must already form a cheapest cover of the orders they serve
    _, cheapest = min_cost_cover(courier_graph(market, omega), omega)
    if sum((market.cost[(d, *o)] for o, d in own.items()), ZERO) != cheapest:
        return None
    u_bar = max_courier_utilities(market, omega)
    t_low = equilibrium_min_tips(market, omega, u_bar)
    weight = {o: market.valuation[o] - t_low[o] for o in market.orders}
    g_x = WeightedBipartiteGraph(market.buyers, market.stores, weight)
    _, best = max_weight_matching(g_x)
    z = {b: s for b, s in omega}
    if sum((weight[o] for o in omega), ZERO) != best:
        return None
    plan = build_courier_plan(market, omega, own)
    p = min_walrasian_prices(market.buyers, market.stores, weight, z)
    cert = EquilibriumCertificate(PriceSystem(p, plan.w_bar), x, Mode.WITH_TIP)
    return _checked(market, cert)


def _plan_allocation(plan) -> Allocation:
    return Allocation(frozenset((b, s, d) for (b, s), d in plan.order_to_courier().items()))


def _cheapest_optimal_matching(market: Market, z: dict) -> dict:
    """Among buyer-store matchings of the same total value as ``z``, one whose
    cheapest courier cover leaves the most welfare. Exhaustive."""
    target = sum((market.valuation[(b, s)] for b, s in z.items()), ZERO)
    l = len(market.couriers)
    best, best_w = z, None
    for k in range(min(len(market.buyers), len(market.stores), l) + 1):
        for bs in combinations(market.buyers, k):
            for ss in permutations(market.stores, k):
                omega = list(zip(bs, ss))
                value = sum((market.valuation[o] for o in omega), ZERO)
                if value != target:
                    continue
                w = value - min_cost_cover(courier_graph(market, omega), omega)[1]
                if best_w is None or w > best_w:
                    best, best_w = dict(omega), w
    return best


def construct_without_tip(market: Market, omega_strategy: str = "greedy"
                          ) -> EquilibriumCertificate | None:
    """Walrasian prices for the buyer side plus a maximal courier plan.

    Returns ``None`` when the Walrasian matching needs more couriers than exist.
    With ``omega_strategy="exhaustive"`` the buyer matching is chosen among all
    value-maximal ones to leave the most welfare after delivery; every
    without-tip equilibrium has this form, so the result is the best one.
    """
    _no_store_costs(market)
    _check_strategy(omega_strategy)
    p, z = walrasian_two_sided(market.buyers, market.stores, market.valuation)
    if omega_strategy == "exhaustive":
        z = _cheapest_optimal_matching(market, z)
    if len(z) > len(market.couriers):
        return None
    omega = [(b, z[b]) for b in market.buyers if b in z]
    plan = build_courier_plan(market, omega)
    cert = EquilibriumCertificate(PriceSystem(p, plan.w_bar), _plan_allocation(plan),
                                  Mode.WITHOUT_TIP)
    return _checked(market, cert)


def _check_strategy(omega_strategy):
    if omega_strategy not in ("greedy", "exhaustive"):
        raise ValueError(f"unknown omega strategy {omega_strategy!r}")


def _greedy_omega(market: Market) -> list:
    def gain(o):
        return market.valuation[o] - min(market.cost[(d, *o)] for d in market.couriers)
    ranked = sorted(market.orders, key=lambda o: -gain(o))  # stable: declaration order on ties
    chosen, buyers, stores = [], set(), set()
    for b, s in ranked:
        if len(chosen) == len(market.couriers):
            break
        if b not in buyers and s not in stores:
            chosen.append((b, s))
            buyers.add(b)
            stores.add(s)
    return chosen


def _exhaustive_omega(market: Market) -> list:
    l = len(market.couriers)
    best, best_w = None, None
    for bs in combinations(market.buyers, l):
        for ss in permutations(market.stores, l):
            omega = list(zip(bs, ss))
            cover = min_cost_cover(courier_graph(market, omega), omega)[1]
            w = sum((market.valuation[o] for o in omega), ZERO) - cover
            if best_w is None or w > best_w:
                best, best_w = omega, w
    return best


def construct_with_tip(market: Market, omega_strategy: str = "greedy") -> EquilibriumCertificate:
    """A with-tip equilibrium; one always exists.

    When couriers are too scarce for a without-tip equilibrium, exactly ``l``
    orders are served, each buyer pays her full valuation, and couriers are paid
    enough that any other order would need a prohibitive tip.
    ``omega_strategy`` is ``"greedy"`` or ``"exhaustive"`` (best welfare, small markets).
    """
    cert = construct_without_tip(market, omega_strategy)
    if cert is not None:
        return lift_without_to_with(market, cert)
    omega = _greedy_omega(market) if omega_strategy == "greedy" else _exhaustive_omega(market)
    assert len(omega) == len(market.couriers) and distinct_orders(omega)
    plan = build_courier_plan(market, omega)
    p = {s: ZERO for s in market.stores}
    for b, s in omega:
        p[s] = market.valuation[(b, s)]
    out = EquilibriumCertificate(PriceSystem(p, plan.w_bar), _plan_allocation(plan), Mode.WITH_TIP)
    return _checked(market, out)


def best_single_trade_equilibrium(market: Market) -> EquilibriumCertificate:
    """Non-clearing equilibrium around the single best trade.

    Every other store is priced out at the highest valuation.
    """
    _no_store_costs(market)
    best, best_gain = None, ZERO
    for b in market.buyers:
        for s in market.stores:
            for d in market.couriers:
                g = market.surplus(b, s, d)
                if g > best_gain:
                    best, best_gain = (b, s, d), g
    if best is None:
        cert = EquilibriumCertificate(PriceSystem.zeros(market), Allocation(), Mode.WITH_TIP,
                                      market_clearing=False)
        return _checked(market, cert)
    b, s, d = best
    top = market.max_valuation
    p = {s2: top for s2 in market.stores}
    p[s] = market.valuation[(b, s)]
    w = {(b, s): market.cost[(d, b, s)]}
    cert = EquilibriumCertificate(PriceSystem(p, w), Allocation.of(best), Mode.WITH_TIP,
                                  market_clearing=False)
    return _checked(market, cert)


def certificate_to_dict(cert: EquilibriumCertificate, market: Market) -> dict:
    return {
        "schema": CERTIFICATE_SCHEMA,
        "mode": cert.mode.value,
        "market_clearing": cert.market_clearing,
        "allocation": allocation_to_list(cert.allocation, market),
        **prices_to_dict(cert.prices, market),
    }


def certificate_from_dict(doc) -> EquilibriumCertificate:
    if not isinstance(doc, dict):
        raise MarketError("certificate document must be an object")
    try:
        mode = Mode(doc["mode"])
    except (KeyError, ValueError):
        raise MarketError("expected 'with-tip' or 'without-tip'", "mode") from None
    clearing = doc.get("market_clearing", True)
    if not isinstance(clearing, bool):
        raise MarketError("expected a boolean", "market_clearing")
    return EquilibriumCertificate(prices_from_dict(doc), allocation_from_list(doc.get("allocation")),
                                  mode, clearing)


def save_certificate(cert: EquilibriumCertificate, market: Market) -> bytes:
    return dumps(certificate_to_dict(cert, market))


def load_certificate(data) -> EquilibriumCertificate:
    return certificate_from_dict(_parse(data))
