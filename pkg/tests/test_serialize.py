import json
from fractions import Fraction

import pytest
from hypothesis import given, settings

from tipeq.market import Market, MarketError, PriceSystem, feasible_allocations
from tipeq.serialize import (load_allocation, load_market, load_prices, market_to_dict,
                             save_allocation, save_market, save_prices)

from conftest import markets


def test_round_trip_is_bit_exact(fig1):
    doc = save_market(fig1)
    assert save_market(load_market(doc)) == doc
    assert load_market(doc) == fig1


def test_thirds_survive():
    m = Market.from_arrays([[Fraction(1, 3)]], [[[Fraction(2, 7)]]])
    doc = save_market(m)
    assert b'"1/3"' in doc
    assert load_market(doc).valuation[("b1", "s1")] == Fraction(1, 3)


def test_missing_cost_entry_names_the_triple(fig1):
    doc = market_to_dict(fig1)
    doc["costs"] = [c for c in doc["costs"] if (c["courier"], c["buyer"]) != ("d2", "b2")]
    with pytest.raises(MarketError, match="d2,b2,s1"):
        load_market(json.dumps(doc))


def test_parse_errors_carry_paths(fig1):
    with pytest.raises(MarketError, match="malformed JSON"):
        load_market(b"{not json")
    doc = market_to_dict(fig1)
    doc["valuations"][1]["value"] = -4
    with pytest.raises(MarketError, match=r"valuations\[1\]\.value"):
        load_market(json.dumps(doc))
    doc = market_to_dict(fig1)
    doc["valuations"][0]["value"] = 1.5
    with pytest.raises(MarketError, match=r"valuations\[0\]\.value"):
        load_market(json.dumps(doc))


def test_store_costs_serialized_only_when_present(fig1):
    from tipeq.market import with_store_costs
    assert "store_costs" not in market_to_dict(fig1)
    costly = with_store_costs(fig1, {"s1": Fraction(1, 2)})
    assert load_market(save_market(costly)) == costly


@settings(max_examples=40, deadline=None)
@given(markets(denominator=3))
def test_round_trips(market):
    assert load_market(save_market(market)) == market
    x = list(feasible_allocations(market))[-1]
    assert load_allocation(save_allocation(x, market)) == x
    prices = PriceSystem({s: Fraction(i, 3) for i, s in enumerate(market.stores)},
                         {o: Fraction(1, 2) for o in market.orders}).dense(market)
    assert load_prices(save_prices(prices, market)) == prices
