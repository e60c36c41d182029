"""Market instances, allocations, price systems and the store-cost transform.

Everything here is exact: values are :class:`fractions.Fraction` and ids are
opaque strings whose declaration order fixes every downstream iteration order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

Order = tuple[str, str]
Triple = tuple[str, str, str]


class MarketError(ValueError):
    """Structured input error; ``path`` names the offending field."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class InfeasibleAllocationError(ValueError):
    pass


class InternalInvariantError(RuntimeError):
    """A construction that is guaranteed to succeed did not; always a bug."""


def as_fraction(value, path: str = "") -> Fraction:
    """Coerce ints, Fractions and ``"num/den"`` strings; floats are rejected."""
    if isinstance(value, bool):
        raise MarketError(f"expected a rational, got {value!r}", path)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise MarketError(f"cannot parse rational {value!r}", path) from None
    raise MarketError(f"expected int or 'num/den' string, got {type(value).__name__}", path)


@dataclass(frozen=True)
class Market:
    """A three-sided market: unit-demand buyers, unit-supply stores, unit-capacity couriers.

    ``valuation`` maps ``(buyer, store)`` and ``cost`` maps ``(courier, buyer, store)``;
    both must be total. ``store_cost`` defaults to zero everywhere.
    """

    buyers: tuple[str, ...]
    stores: tuple[str, ...]
    couriers: tuple[str, ...]
    valuation: Mapping[Order, Fraction]
    cost: Mapping[Triple, Fraction]
    store_cost: Mapping[str, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("buyers", "stores", "couriers"):
            ids = tuple(getattr(self, name))
            object.__setattr__(self, name, ids)
            if not ids:
                raise MarketError("at least one id required", name)
            if len(set(ids)) != len(ids):
                raise MarketError("duplicate ids", name)
            for i, x in enumerate(ids):
                if not isinstance(x, str):
                    raise MarketError(f"ids must be strings, got {x!r}", f"{name}[{i}]")

        val = {}
        for b in self.buyers:
            for s in self.stores:
                if (b, s) not in self.valuation:
                    raise MarketError(f"missing valuation for ({b},{s})", "valuations")
                v = as_fraction(self.valuation[(b, s)], f"valuations[{b},{s}]")
                if v < 0:
                    raise MarketError("valuation must be nonnegative", f"valuations[{b},{s}]")
                val[(b, s)] = v
        if len(self.valuation) != len(val):
            extra = sorted(set(self.valuation) - set(val))
            raise MarketError(f"unknown orders {extra}", "valuations")

        cost = {}
        for d in self.couriers:
            for b in self.buyers:
                for s in self.stores:
                    key = (d, b, s)
                    if key not in self.cost:
                        raise MarketError(f"missing cost entry ({d},{b},{s})", "costs")
                    c = as_fraction(self.cost[key], f"costs[{d},{b},{s}]")
                    if c < 0:
                        raise MarketError("cost must be nonnegative", f"costs[{d},{b},{s}]")
                    cost[key] = c
        if len(self.cost) != len(cost):
            extra = sorted(set(self.cost) - set(cost))
            raise MarketError(f"unknown cost keys {extra}", "costs")

        sc = {}
        for s in self.stores:
            c = as_fraction(self.store_cost.get(s, 0), f"store_costs[{s}]")
            if c < 0:
                raise MarketError("store cost must be nonnegative", f"store_costs[{s}]")
            sc[s] = c
        if set(self.store_cost) - set(self.stores):
            raise MarketError("unknown stores", "store_costs")

        object.__setattr__(self, "valuation", val)
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "store_cost", sc)

    @classmethod
    def from_arrays(cls, values, costs, store_costs=None, *, buyers=None, stores=None,
                    couriers=None) -> "Market":
        """Build from nested sequences ``values[b][s]`` and ``costs[d][b][s]``.

        Default ids are ``b1..bm``, ``s1..sn``, ``d1..dl``.
        """
        m, n, l = len(values), len(values[0]), len(costs)
        buyers = tuple(buyers or (f"b{i + 1}" for i in range(m)))
        stores = tuple(stores or (f"s{j + 1}" for j in range(n)))
        couriers = tuple(couriers or (f"d{k + 1}" for k in range(l)))
        valuation = {(buyers[i], stores[j]): values[i][j] for i in range(m) for j in range(n)}
        cost = {
            (couriers[k], buyers[i], stores[j]): costs[k][i][j]
            for k in range(l) for i in range(m) for j in range(n)
        }
        sc = {} if store_costs is None else dict(zip(stores, store_costs))
        return cls(buyers, stores, couriers, valuation, cost, sc)

    @property
    def dims(self) -> tuple[int, int, int]:
        return len(self.buyers), len(self.stores), len(self.couriers)

    @cached_property
    def orders(self) -> tuple[Order, ...]:
        return tuple((b, s) for b in self.buyers for s in self.stores)

    @cached_property
    def buyer_index(self) -> dict[str, int]:
        return {b: i for i, b in enumerate(self.buyers)}

    @cached_property
    def store_index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.stores)}

    @cached_property
    def courier_index(self) -> dict[str, int]:
        return {d: i for i, d in enumerate(self.couriers)}

    @property
    def has_store_costs(self) -> bool:
        return any(self.store_cost.values())

    @cached_property
    def max_valuation(self) -> Fraction:
        return max(self.valuation.values())

    def surplus(self, b: str, s: str, d: str) -> Fraction:
        """Welfare of the single trade ``(b, s, d)``."""
        return self.valuation[(b, s)] - self.store_cost[s] - self.cost[(d, b, s)]

    def check_ids(self, buyer=None, store=None, courier=None) -> None:
        if buyer is not None and buyer not in self.buyer_index:
            raise MarketError(f"unknown buyer {buyer!r}", "buyer")
        if store is not None and store not in self.store_index:
            raise MarketError(f"unknown store {store!r}", "store")
        if courier is not None and courier not in self.courier_index:
            raise MarketError(f"unknown courier {courier!r}", "courier")


@dataclass(frozen=True)
class Allocation:
    """A set of ``(buyer, store, courier)`` trades."""

    triples: frozenset[Triple] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "triples", frozenset(tuple(t) for t in self.triples))

    @classmethod
    def of(cls, *triples: Triple) -> "Allocation":
        return cls(frozenset(triples))

    def __iter__(self):
        return iter(sorted(self.triples))

    def __len__(self):
        return len(self.triples)

    @property
    def orders(self) -> frozenset[Order]:
        """The delivered order set."""
        return frozenset((b, s) for b, s, _ in self.triples)

    def store_of(self, buyer: str) -> str | None:
        for b, s, _ in self.triples:
            if b == buyer:
                return s
        return None

    def order_of(self, courier: str) -> Order | None:
        for b, s, d in self.triples:
            if d == courier:
                return (b, s)
        return None

    def courier_of(self, order: Order) -> str | None:
        for b, s, d in self.triples:
            if (b, s) == order:
                return d
        return None

    def sorted_in(self, market: Market) -> list[Triple]:
        """Triples in declaration-index order."""
        bi, si, di = market.buyer_index, market.store_index, market.courier_index
        return sorted(self.triples, key=lambda t: (bi[t[0]], si[t[1]], di[t[2]]))


@dataclass(frozen=True)
class PriceSystem:
    """Purchase prices ``p``, delivery compensations ``w`` and tips ``t``.

    Missing entries are read as zero; :meth:`dense` fills them in explicitly.
    """

    p: Mapping[str, Fraction] = field(default_factory=dict)
    w: Mapping[Order, Fraction] = field(default_factory=dict)
    t: Mapping[Order, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("p", "w", "t"):
            table = {}
            for key, value in getattr(self, name).items():
                v = as_fraction(value, f"{name}[{key}]")
                if v < 0:
                    raise MarketError("prices must be nonnegative", f"{name}[{key}]")
                table[key] = v
            object.__setattr__(self, name, table)

    def dense(self, market: Market) -> "PriceSystem":
        extra = (set(self.p) - set(market.stores)) | (
            (set(self.w) | set(self.t)) - set(market.orders))
        if extra:
            raise MarketError(f"price entries for unknown ids {sorted(map(str, extra))}")
        return PriceSystem(
            {s: self.p.get(s, Fraction(0)) for s in market.stores},
            {o: self.w.get(o, Fraction(0)) for o in market.orders},
            {o: self.t.get(o, Fraction(0)) for o in market.orders},
        )

    @classmethod
    def zeros(cls, market: Market) -> "PriceSystem":
        return cls().dense(market)

    @property
    def tip_free(self) -> bool:
        return not any(self.t.values())


def validate_allocation(market: Market, x: Allocation) -> bool:
    """True iff every buyer, store and courier appears in at most one trade.

    Unknown ids raise :class:`MarketError` rather than returning False.
    """
    for b, s, d in x.triples:
        market.check_ids(b, s, d)
    buyers = [b for b, _, _ in x.triples]
    stores = [s for _, s, _ in x.triples]
    couriers = [d for _, _, d in x.triples]
    return all(len(set(a)) == len(a) for a in (buyers, stores, couriers))


def require_feasible(market: Market, x: Allocation) -> None:
    if not validate_allocation(market, x):
        raise InfeasibleAllocationError("allocation reuses a buyer, store or courier")


def welfare(market: Market, x: Allocation) -> Fraction:
    """Sum of ``v_b(s) - store_cost(s) - c_d(b, s)`` over the trades of ``x``."""
    require_feasible(market, x)
    return sum((market.surplus(b, s, d) for b, s, d in x.triples), Fraction(0))


@dataclass(frozen=True)
class PriceShift:
    """Per-store offsets mapping prices of a normalized market back to the original."""

    offsets: Mapping[str, Fraction]

    def apply(self, prices: PriceSystem) -> PriceSystem:
        p = {s: prices.p.get(s, Fraction(0)) + self.offsets.get(s, Fraction(0))
             for s in set(prices.p) | set(self.offsets)}
        return PriceSystem(p, prices.w, prices.t)

    def undo(self, prices: PriceSystem) -> PriceSystem:
        p = {}
        for s in set(prices.p) | set(self.offsets):
            v = prices.p.get(s, Fraction(0)) - self.offsets.get(s, Fraction(0))
            if v < 0:
                raise MarketError("price below store cost", f"p[{s}]")
            p[s] = v
        return PriceSystem(p, prices.w, prices.t)


def normalize_store_costs(market: Market) -> tuple[Market, PriceShift]:
    """Fold store costs into valuations: ``v_b(s) <- v_b(s) - c_s``.

    Raises :class:`MarketError` if some valuation falls below its store cost.
    """
    val = {}
    for (b, s), v in market.valuation.items():
        adjusted = v - market.store_cost[s]
        if adjusted < 0:
            raise MarketError("valuation below store cost", f"valuations[{b},{s}]")
        val[(b, s)] = adjusted
    normalized = Market(market.buyers, market.stores, market.couriers, val, market.cost)
    return normalized, PriceShift(dict(market.store_cost))


def with_store_costs(market: Market, store_costs: Mapping[str, object]) -> Market:
    """Inverse transform: raise each valuation by its store's cost and record the cost."""
    sc = {s: as_fraction(store_costs.get(s, 0)) for s in market.stores}
    val = {(b, s): v + sc[s] for (b, s), v in market.valuation.items()}
    return Market(market.buyers, market.stores, market.couriers, val, market.cost, sc)


def feasible_allocations(market: Market) -> Iterable[Allocation]:
    """Every feasible allocation, in lexicographic order of sorted index triples."""
    m, n, l = market.dims
    B, S, D = market.buyers, market.stores, market.couriers

    def rec(start, used_s, used_d, acc):
        yield Allocation(frozenset(acc))
        for i in range(start, m):
            for j in range(n):
                if used_s >> j & 1:
                    continue
                for k in range(l):
                    if used_d >> k & 1:
                        continue
                    acc.append((B[i], S[j], D[k]))
                    yield from rec(i + 1, used_s | 1 << j, used_d | 1 << k, acc)
                    acc.pop()

    yield from rec(0, 0, 0, [])


def distinct_orders(omega: Sequence[Order]) -> bool:
    buyers = [b for b, _ in omega]
    stores = [s for _, s in omega]
    return len(set(buyers)) == len(buyers) and len(set(stores)) == len(stores)


def best_response(utility: Mapping) -> frozenset:
    """Best-response set over ``utility``; ``None`` stands for the null option.

    With some strictly positive option the set is the argmax. Otherwise it is
    the null option plus every option of utility exactly zero.
    """
    if utility:
        top = max(utility.values())
        if top > 0:
            return frozenset(k for k, u in utility.items() if u == top)
    return frozenset([None, *(k for k, u in utility.items() if u == 0)])
