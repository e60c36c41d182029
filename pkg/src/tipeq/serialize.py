"""Canonical JSON for markets, allocations, price systems and certificates.

Rationals are written as JSON integers when integral and as ``"num/den"``
strings otherwise, so every document round-trips exactly.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .market import Allocation, Market, MarketError, PriceSystem, as_fraction

MARKET_KEYS = ("buyers", "stores", "couriers", "valuations", "costs", "store_costs")


def encode_rational(x: Fraction):
    x = Fraction(x)
    return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def dumps(obj) -> bytes:
    return (json.dumps(obj, indent=2) + "\n").encode()


def _parse(data):
    if isinstance(data, (bytes, bytearray)):
        data = data.decode()
    if isinstance(data, str):
        try:
            return json.loads(data)
        except json.JSONDecodeError as e:
            raise MarketError(f"malformed JSON: {e.msg} at line {e.lineno}") from None
    return data


def _ids(doc, key):
    ids = doc.get(key)
    if not isinstance(ids, list) or not all(isinstance(x, str) for x in ids):
        raise MarketError("expected an array of strings", key)
    return ids


def _entries(doc, key, fields):
    rows = doc.get(key, [])
    if not isinstance(rows, list):
        raise MarketError("expected an array", key)
    out = {}
    for i, row in enumerate(rows):
        path = f"{key}[{i}]"
        if not isinstance(row, dict):
            raise MarketError("expected an object", path)
        missing = [f for f in (*fields, "value") if f not in row]
        if missing:
            raise MarketError(f"missing fields {missing}", path)
        ident = tuple(row[f] for f in fields)
        if ident in out:
            raise MarketError(f"duplicate entry {ident}", path)
        v = as_fraction(row["value"], f"{path}.value")
        if v < 0:
            raise MarketError("value must be nonnegative", f"{path}.value")
        out[ident] = v
    return out


def market_to_dict(market: Market) -> dict:
    doc = {
        "buyers": list(market.buyers),
        "stores": list(market.stores),
        "couriers": list(market.couriers),
        "valuations": [
            {"buyer": b, "store": s, "value": encode_rational(market.valuation[(b, s)])}
            for b, s in market.orders
        ],
        "costs": [
            {"courier": d, "buyer": b, "store": s, "value": encode_rational(market.cost[(d, b, s)])}
            for d in market.couriers for b, s in market.orders
        ],
    }
    if market.has_store_costs:
        doc["store_costs"] = [
            {"store": s, "value": encode_rational(market.store_cost[s])} for s in market.stores
        ]
    return doc


def market_from_dict(doc) -> Market:
    if not isinstance(doc, dict):
        raise MarketError("market document must be an object")
    unknown = set(doc) - set(MARKET_KEYS) - {"schema"}
    if unknown:
        raise MarketError(f"unknown keys {sorted(unknown)}")
    buyers, stores, couriers = _ids(doc, "buyers"), _ids(doc, "stores"), _ids(doc, "couriers")
    valuation = _entries(doc, "valuations", ("buyer", "store"))
    cost = _entries(doc, "costs", ("courier", "buyer", "store"))
    store_cost = {k[0]: v for k, v in _entries(doc, "store_costs", ("store",)).items()}
    return Market(buyers, stores, couriers, valuation, cost, store_cost)


def save_market(market: Market) -> bytes:
    return dumps(market_to_dict(market))


def load_market(data) -> Market:
    return market_from_dict(_parse(data))


def allocation_to_list(x: Allocation, market: Market | None = None) -> list:
    triples = x.sorted_in(market) if market is not None else sorted(x.triples)
    return [{"buyer": b, "store": s, "courier": d} for b, s, d in triples]


def allocation_from_list(rows) -> Allocation:
    if not isinstance(rows, list):
        raise MarketError("expected an array", "allocation")
    triples = []
    for i, row in enumerate(rows):
        try:
            triples.append((row["buyer"], row["store"], row["courier"]))
        except (KeyError, TypeError):
            raise MarketError("expected {buyer, store, courier}", f"allocation[{i}]") from None
    if len(set(triples)) != len(triples):
        raise MarketError("duplicate trade", "allocation")
    return Allocation(frozenset(triples))


def prices_to_dict(prices: PriceSystem, market: Market) -> dict:
    dense = prices.dense(market)
    return {
        "prices": [{"store": s, "value": encode_rational(dense.p[s])} for s in market.stores],
        "compensations": [
            {"buyer": b, "store": s, "value": encode_rational(dense.w[(b, s)])}
            for b, s in market.orders
        ],
        "tips": [
            {"buyer": b, "store": s, "value": encode_rational(dense.t[(b, s)])}
            for b, s in market.orders
        ],
    }


def prices_from_dict(doc) -> PriceSystem:
    p = {k[0]: v for k, v in _entries(doc, "prices", ("store",)).items()}
    w = _entries(doc, "compensations", ("buyer", "store"))
    t = _entries(doc, "tips", ("buyer", "store"))
    return PriceSystem(p, w, t)


def save_allocation(x: Allocation, market: Market | None = None) -> bytes:
    return dumps(allocation_to_list(x, market))


def load_allocation(data) -> Allocation:
    return allocation_from_list(_parse(data))


def save_prices(prices: PriceSystem, market: Market) -> bytes:
    return dumps(prices_to_dict(prices, market))


def load_prices(data) -> PriceSystem:
    return prices_from_dict(_parse(data))
