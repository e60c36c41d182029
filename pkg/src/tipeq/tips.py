"""Minimum tips a buyer must add so that some courier is willing to deliver."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .market import Market, Order

ZERO = Fraction(0)


@dataclass(frozen=True)
class TipMatrix:
    t_lower: Mapping[Order, Fraction]

    def __getitem__(self, order: Order) -> Fraction:
        return self.t_lower[order]


def min_tip_for_courier(market: Market, w: Mapping, t_others: Mapping, b: str, s: str,
                        d: str) -> Fraction:
    """Smallest tip on ``(b, s)`` that puts it in courier ``d``'s best responses.

    Buyer ``b``'s tips on other stores are taken as zero; everything else is fixed.
    """
    market.check_ids(b, s, d)
    w_bs = w.get((b, s), ZERO)
    c_bs = market.cost[(d, b, s)]
    best = max(ZERO, c_bs - w_bs)
    for b2, s2 in market.orders:
        if (b2, s2) == (b, s):
            continue
        tip = ZERO if b2 == b else t_others.get((b2, s2), ZERO)
        rival = w.get((b2, s2), ZERO) + tip - market.cost[(d, b2, s2)] - w_bs + c_bs
        if rival > best:
            best = rival
    return best


def min_tip(market: Market, w: Mapping, t_others: Mapping, b: str, s: str) -> Fraction:
    return min(min_tip_for_courier(market, w, t_others, b, s, d) for d in market.couriers)


def buyer_min_tips(market: Market, w: Mapping, t: Mapping, b: str) -> dict[str, Fraction]:
    """Minimum tip for every store of buyer ``b``, with her own tips removed."""
    return {s: min_tip(market, w, t, b, s) for s in market.stores}


def equilibrium_min_tips(market: Market, omega, u_bar: Mapping[str, Fraction]) -> TipMatrix:
    """Minimum tips against the utility-maximal courier plan for ``omega``.

    Zero on ``omega``; elsewhere the cheapest courier must be paid her cost plus
    the utility she gives up.
    """
    omega = set(omega)
    table = {}
    for b, s in market.orders:
        if (b, s) in omega:
            table[(b, s)] = ZERO
        else:
            table[(b, s)] = min(market.cost[(d, b, s)] + u_bar[d] for d in market.couriers)
    return TipMatrix(table)
