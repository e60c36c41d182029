"""Courier plans: compensations under which couriers voluntarily serve a fixed order set.

For a target set Ω the compensation of each served order is pushed as high as
possible, giving every courier the largest utility any plan serving Ω allows.
These maximal utilities feed straight into the minimum-tip formulas.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .market import InternalInvariantError, Market, MarketError, Order, best_response, distinct_orders
from .matching import WeightedBipartiteGraph, min_cost_cover, min_cost_cover_all_but_one


@dataclass(frozen=True)
class CourierPlan:
    target_orders: tuple[Order, ...]
    w_bar: Mapping[Order, Fraction]  # zero outside the target orders
    assignment: Mapping[str, Order | None]
    u_bar: Mapping[str, Fraction]

    def order_to_courier(self) -> dict[Order, str]:
        return {o: d for d, o in self.assignment.items() if o is not None}


def _check_omega(market: Market, omega) -> tuple[Order, ...]:
    omega = tuple(omega)
    for b, s in omega:
        market.check_ids(buyer=b, store=s)
    if not distinct_orders(omega):
        raise MarketError("target orders must use distinct buyers and stores", "omega")
    if len(omega) > len(market.couriers):
        raise MarketError(f"{len(omega)} target orders but only {len(market.couriers)} couriers",
                          "omega")
    return omega


def courier_graph(market: Market, omega) -> WeightedBipartiteGraph:
    """Orders of ``omega`` against all couriers, weighted by delivery cost."""
    return WeightedBipartiteGraph(
        tuple(omega), market.couriers,
        {((b, s), d): market.cost[(d, b, s)] for b, s in omega for d in market.couriers},
    )


def big_h(market: Market) -> Fraction:
    """Constant exceeding every valuation; used when all couriers are busy."""
    return 1 + sum(market.valuation.values(), Fraction(0)) + sum(market.cost.values(), Fraction(0))


def max_courier_utilities(market: Market, omega) -> dict[str, Fraction]:
    """Per-courier maximum utility over all courier plans serving ``omega``."""
    omega = _check_omega(market, omega)
    g = courier_graph(market, omega)
    _, base = min_cost_cover(g, omega)
    if len(omega) < len(market.couriers):
        return {d: min_cost_cover(g, omega, excluded=d)[1] - base for d in market.couriers}
    h = big_h(market)
    return {d: h + min_cost_cover_all_but_one(g, omega, excluded=d) - base
            for d in market.couriers}


def courier_utilities(market: Market, pay: Mapping[Order, Fraction], d: str) -> dict:
    """Utility of courier ``d`` for every order given per-order payments (w + t)."""
    return {(b, s): pay.get((b, s), Fraction(0)) - market.cost[(d, b, s)]
            for b, s in market.orders}


def build_courier_plan(market: Market, omega, assignment: Mapping[Order, str] | None = None
                       ) -> CourierPlan:
    """Courier plan serving ``omega`` that attains the maximal utilities.

    ``assignment`` (order -> courier) may pin which courier serves which order;
    it must then be a minimum-cost cover of ``omega``.
    """
    omega = _check_omega(market, omega)
    g = courier_graph(market, omega)
    cover, cost = min_cost_cover(g, omega)
    if assignment is not None:
        assignment = dict(assignment)
        if set(assignment) != set(omega) or len(set(assignment.values())) != len(omega):
            raise MarketError("assignment must map each target order to a distinct courier")
        for d in assignment.values():
            market.check_ids(courier=d)
        pinned = sum((market.cost[(d, b, s)] for (b, s), d in assignment.items()), Fraction(0))
        if pinned != cost:
            raise MarketError("assignment is not a minimum-cost cover of the target orders")
        cover = assignment
    u_bar = max_courier_utilities(market, omega)
    w_bar = {o: u_bar[d] + market.cost[(d, *o)] for o, d in cover.items()}
    by_courier = {d: None for d in market.couriers}
    for o, d in cover.items():
        by_courier[d] = o
    plan = CourierPlan(omega, w_bar, by_courier, u_bar)
    for d, o in by_courier.items():
        if o not in best_response(courier_utilities(market, w_bar, d)):
            raise InternalInvariantError(f"courier {d} does not best-respond in the plan")
    return plan
