"""Named example markets and seeded random families."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .market import Market, MarketError, as_fraction, with_store_costs
from .welfare import hardness_instance_from_3dm

FAMILIES = ("fig1", "fig2", "fig3", "random-unstructured", "random-courier-store",
            "random-courier-buyer", "random-single-minded", "from-3dm")


@dataclass(frozen=True)
class InstanceSpec:
    family: str
    seed: int = 0
    dims: tuple[int, int, int] = (3, 3, 3)
    kappa: Fraction | None = None
    grid: tuple[int, int] = (0, 20)
    denominator: int = 1
    hyperedges: tuple = ()
    store_costs: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise MarketError(f"unknown family {self.family!r}; choose from {FAMILIES}", "family")
        if self.family == "fig3":
            if self.kappa is None:
                raise MarketError("fig3 needs kappa", "kappa")
            k = as_fraction(self.kappa, "kappa")
            if k <= 2:
                raise MarketError("kappa must exceed 2", "kappa")
            object.__setattr__(self, "kappa", k)
        dims = tuple(int(x) for x in self.dims)
        if len(dims) != 3 or min(dims) < 1:
            raise MarketError("dims must be three positive integers", "dims")
        object.__setattr__(self, "dims", dims)
        lo, hi = self.grid
        if not (0 <= lo <= hi) or self.denominator < 1:
            raise MarketError("grid must satisfy 0 <= lo <= hi and denominator >= 1", "grid")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise MarketError("seed must be a 64-bit unsigned integer", "seed")

    @classmethod
    def from_dict(cls, doc: dict) -> "InstanceSpec":
        if not isinstance(doc, dict) or "family" not in doc:
            raise MarketError("spec needs a 'family'", "family")
        known = {"family", "seed", "dims", "kappa", "grid", "denominator", "hyperedges",
                 "store_costs"}
        if set(doc) - known:
            raise MarketError(f"unknown keys {sorted(set(doc) - known)}")
        kw = dict(doc)
        if "dims" in kw:
            kw["dims"] = tuple(kw["dims"])
        if "grid" in kw:
            kw["grid"] = tuple(kw["grid"])
        if "hyperedges" in kw:
            kw["hyperedges"] = tuple(tuple(e) for e in kw["hyperedges"])
        return cls(**kw)

    @classmethod
    def from_json(cls, data) -> "InstanceSpec":
        try:
            return cls.from_dict(json.loads(data))
        except json.JSONDecodeError as e:
            raise MarketError(f"malformed spec JSON: {e.msg}") from None


def fig1() -> Market:
    return Market.from_arrays([[3], [10]], [[[0], [11]], [[1], [12]]])


def fig2() -> Market:
    return Market.from_arrays([[4, 2], [1, 3]], [[[0, 0], [0, 0]]])


def fig3(kappa=3) -> Market:
    k = as_fraction(kappa, "kappa")
    if k <= 2:
        raise MarketError("kappa must exceed 2", "kappa")
    half, near = Fraction(1, 2), Fraction(49, 100)
    d1 = [[0, k], [k, half]]
    d2 = [[k, near], [half, k]]
    return Market.from_arrays([[1, 1], [1, 1]], [d1, d2])


def _draw(rng, shape, spec: InstanceSpec):
    lo, hi = spec.grid
    raw = rng.integers(lo, hi + 1, size=shape)
    return np.vectorize(lambda v: Fraction(int(v), spec.denominator), otypes=[object])(raw)


def _random(spec: InstanceSpec) -> Market:
    m, n, l = spec.dims
    rng = np.random.default_rng(spec.seed)
    values = _draw(rng, (m, n), spec)
    fam = spec.family
    if fam == "random-unstructured":
        costs = _draw(rng, (l, m, n), spec)
    elif fam == "random-courier-store":
        costs = _draw(rng, (1, m, n), spec) + _draw(rng, (l, 1, n), spec)
    elif fam == "random-courier-buyer":
        costs = _draw(rng, (1, m, n), spec) + _draw(rng, (l, m, 1), spec)
    else:  # random-single-minded
        favourite = rng.integers(0, n, size=m)
        mask = np.zeros((m, n), dtype=bool)
        mask[np.arange(m), favourite] = True
        values = np.where(mask, values, Fraction(0))
        costs = _draw(rng, (l, m, n), spec)
    market = Market.from_arrays(values.tolist(), costs.tolist())
    if spec.store_costs:
        # raising valuations by the store cost keeps every trade's welfare intact
        sc = _draw(rng, (n,), spec)
        market = with_store_costs(market, dict(zip(market.stores, sc)))
    return market


def generate(spec: InstanceSpec) -> Market:
    if spec.family == "fig1":
        return fig1()
    if spec.family == "fig2":
        return fig2()
    if spec.family == "fig3":
        return fig3(spec.kappa)
    if spec.family == "from-3dm":
        if not spec.hyperedges:
            raise MarketError("from-3dm needs hyperedges", "hyperedges")
        return hardness_instance_from_3dm(spec.hyperedges)
    return _random(spec)


def random_3dm(rng, q: int, density: float = 0.3) -> list:
    """Random hyperedge set over ``{1..q}^3``, always touching every vertex."""
    edges = [(a, b, c) for a in range(1, q + 1) for b in range(1, q + 1) for c in range(1, q + 1)
             if rng.random() < density]
    for i in range(1, q + 1):
        edges.append((i, int(rng.integers(1, q + 1)), int(rng.integers(1, q + 1))))
        edges.append((int(rng.integers(1, q + 1)), i, int(rng.integers(1, q + 1))))
        edges.append((int(rng.integers(1, q + 1)), int(rng.integers(1, q + 1)), i))
    return sorted(set(edges))
