from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings

from tipeq.courier import build_courier_plan, courier_graph
from tipeq.equilibrium import (EquilibriumCertificate, Mode,
                               best_single_trade_equilibrium, construct_with_tip,
                               construct_without_tip, lift_without_to_with, load_certificate,
                               save_certificate, supports_equilibrium, to_zero_tip, verify,
                               verify_with_tip, verify_without_tip)
from tipeq.market import (Allocation, InfeasibleAllocationError, Market, MarketError,
                          PriceSystem, feasible_allocations, welfare)
from tipeq.matching import min_cost_cover
from tipeq.oracles import supportable_with_plan
from tipeq.tips import min_tip
from tipeq.welfare import optimal_welfare_bruteforce

from conftest import markets, random_market

ZERO = Fraction(0)

B1S1D1 = ("b1", "s1", "d1")


def test_fig1_without_tip_equilibrium(fig1):
    x = Allocation.of(("b2", "s1", "d1"))
    assert verify_without_tip(fig1, PriceSystem({"s1": 5}, {("b2", "s1"): 11}), x).ok
    bad = verify_without_tip(fig1, PriceSystem({"s1": 2}, {("b2", "s1"): 11}), x)
    assert bad.tags() == ["buyer-br"]
    assert bad.violations[0].agent == "b1"


def test_zero_market_empty_allocation():
    m = Market.from_arrays([[0, 0]], [[[3, 1]], [[0, 2]]])
    assert verify_without_tip(m, PriceSystem(), Allocation()).ok
    assert verify_with_tip(m, PriceSystem(), Allocation()).ok


def test_published_with_tip_equilibria(fig1, fig2, fig3):
    assert verify_with_tip(fig1, PriceSystem({"s1": 1}, {("b1", "s1"): 1}),
                           Allocation.of(B1S1D1)).ok
    assert verify_with_tip(fig2, PriceSystem({"s1": 1, "s2": 0}, {("b1", "s1"): 4}),
                           Allocation.of(B1S1D1)).ok
    both = Allocation.of(B1S1D1, ("b2", "s2", "d2"))
    assert verify_with_tip(fig3, PriceSystem({"s1": 1, "s2": 1},
                                             {("b1", "s1"): 3, ("b2", "s2"): 3}), both).ok


def test_all_violations_reported(fig1):
    prices = PriceSystem({"s1": 0}, {("b2", "s1"): 7}, {("b2", "s1"): 1})
    verdict = verify_with_tip(fig1, prices, Allocation())
    assert set(verdict.tags()) == {"buyer-br", "undelivered-compensation", "undelivered-tip"}
    assert verdict == verify_with_tip(fig1, prices, Allocation())
    assert verify_with_tip(fig1, PriceSystem({"s1": 4}), Allocation()).tags() == ["unsold-price"]


def test_infeasible_and_structural(fig1):
    x = Allocation.of(B1S1D1, ("b2", "s1", "d2"))
    assert verify_with_tip(fig1, PriceSystem(), x).tags() == ["infeasible-allocation"]
    with pytest.raises(MarketError):
        verify_without_tip(fig1, PriceSystem(t={("b1", "s1"): 1}), Allocation())
    with pytest.raises(MarketError):
        verify_with_tip(fig1, PriceSystem({"s9": 1}), Allocation())


def test_min_tip_must_be_paid_exactly():
    m = Market.from_arrays([[5]], [[[2]]])
    x = Allocation.of(B1S1D1)
    good = PriceSystem({"s1": 1}, {}, {("b1", "s1"): 2})
    assert verify_with_tip(m, good, x).ok
    over = PriceSystem({"s1": 1}, {}, {("b1", "s1"): 3})
    assert "buyer-min-tip" in verify_with_tip(m, over, x).tags()
    lifted = to_zero_tip(m, EquilibriumCertificate(good, x, Mode.WITH_TIP))
    assert lifted.prices.p == {"s1": 3} and lifted.prices.w == {("b1", "s1"): 2}
    assert lifted.prices.tip_free and lifted.allocation == x


def test_lift_rejects_unverified(fig1):
    bogus = EquilibriumCertificate(PriceSystem({"s1": 2}, {("b2", "s1"): 11}),
                                   Allocation.of(("b2", "s1", "d1")), Mode.WITHOUT_TIP)
    with pytest.raises(ValueError):
        lift_without_to_with(fig1, bogus)
    with pytest.raises(ValueError):
        to_zero_tip(fig1, bogus)


def test_fig1_constructions(fig1):
    cert = construct_without_tip(fig1)
    assert cert.welfare(fig1) == -1
    lifted = lift_without_to_with(fig1, cert)
    assert lifted.prices == cert.prices and lifted.mode is Mode.WITH_TIP
    assert verify(fig1, construct_with_tip(fig1)).ok
    cert = supports_equilibrium(fig1, Allocation.of(B1S1D1))
    assert cert is not None and cert.welfare(fig1) == 3


def test_fig2_constructions(fig2):
    assert construct_without_tip(fig2) is None
    cert = construct_with_tip(fig2)
    assert verify(fig2, cert).ok and len(cert.allocation) == 1
    best = construct_with_tip(fig2, omega_strategy="exhaustive")
    assert best.welfare(fig2) == 4


def test_fig3_supportability(fig3):
    for x in feasible_allocations(fig3):
        if len(x) == 1:
            assert supports_equilibrium(fig3, x) is None
    assert supports_equilibrium(fig3, Allocation.of(B1S1D1, ("b2", "s2", "d2")))


def test_tiny_market():
    m = Market.from_arrays([[5]], [[[2]]])
    cert = construct_with_tip(m)
    assert verify(m, cert).ok and cert.welfare(m) == 3


def test_best_single_trade(fig1, fig3):
    cert = best_single_trade_equilibrium(fig1)
    assert cert.allocation == Allocation.of(B1S1D1) and not cert.market_clearing
    assert verify(fig1, cert).ok
    cert = best_single_trade_equilibrium(fig3)
    assert cert.welfare(fig3) == 1 and verify(fig3, cert).ok
    harmful = Market.from_arrays([[1, 2]], [[[5, 5]]])
    cert = best_single_trade_equilibrium(harmful)
    assert len(cert.allocation) == 0 and verify(harmful, cert).ok


def test_constructors_refuse_store_costs(fig1):
    from tipeq.market import with_store_costs
    with pytest.raises(MarketError):
        construct_with_tip(with_store_costs(fig1, {"s1": 1}))


def test_supports_requires_feasible(fig1):
    with pytest.raises(InfeasibleAllocationError):
        supports_equilibrium(fig1, Allocation.of(B1S1D1, ("b2", "s1", "d2")))


def test_certificate_json_round_trip(fig2):
    cert = construct_with_tip(fig2)
    doc = save_certificate(cert, fig2)
    back = load_certificate(doc)
    assert back.allocation == cert.allocation and back.mode is cert.mode
    assert back.prices == cert.prices.dense(fig2)
    assert b'"market_clearing": true' in doc
    with pytest.raises(MarketError):
        load_certificate(b'{"mode": "sideways"}')


@settings(max_examples=80, deadline=None)
@given(markets(max_dim=4))
def test_with_tip_always_exists(market):
    cert = construct_with_tip(market)
    assert verify_with_tip(market, cert.prices, cert.allocation).ok
    again = construct_with_tip(market)
    assert again == cert


@settings(max_examples=60, deadline=None)
@given(markets())
def test_without_tip_when_couriers_are_plentiful(market):
    cert = construct_without_tip(market)
    if len(market.couriers) >= min(len(market.buyers), len(market.stores)):
        assert cert is not None
    if cert is not None:
        assert verify(market, cert).ok


@settings(max_examples=60, deadline=None)
@given(markets())
def test_single_trade_bound(market):
    cert = best_single_trade_equilibrium(market)
    assert verify(market, cert).ok
    opt, _ = optimal_welfare_bruteforce(market)
    assert cert.welfare(market) * min(market.dims) >= opt


def _tipped_variants(market, cert, rng):
    """Shift each delivered order onto a tip equal to its minimum tip.

    With ``need`` the minimum tip at zero compensation, paying ``need - delta``
    as compensation makes the minimum tip exactly ``delta``; the price drops by
    ``delta`` so the buyer pays the same.
    """
    dense = cert.prices.dense(market)
    p, w, t = dict(dense.p), dict(dense.w), {}
    for b, s, _ in cert.allocation:
        need = min_tip(market, {**w, (b, s): ZERO}, t, b, s)
        delta = min(p[s], need) * Fraction(int(rng.integers(1, 4)), 3)
        if delta <= 0:
            continue
        w[(b, s)] = need - delta
        t[(b, s)] = delta
        p[s] -= delta
    return EquilibriumCertificate(PriceSystem(p, w, t), cert.allocation, Mode.WITH_TIP)


def test_zero_tip_fold_on_tipped_certificates():
    rng = np.random.default_rng(5)
    folded = 0
    for seed in range(200):
        market = random_market(seed, max_dim=3)
        tipped = _tipped_variants(market, construct_with_tip(market), rng)
        if not verify(market, tipped).ok:
            continue
        out = to_zero_tip(market, tipped)
        assert verify(market, out).ok and out.prices.tip_free
        assert out.allocation == tipped.allocation
        assert out.welfare(market) == tipped.welfare(market)
        folded += not tipped.prices.tip_free
    assert folded >= 20


def test_supports_agrees_with_restricted_oracle():
    for seed in range(40):
        market = random_market(900 + seed, max_dim=3)
        for x in feasible_allocations(market):
            cert = supports_equilibrium(market, x)
            omega = sorted(x.orders)
            own = {(b, s): d for b, s, d in x.triples}
            cheapest = min_cost_cover(courier_graph(market, omega), omega)[1]
            if sum(market.cost[(d, *o)] for o, d in own.items()) != cheapest:
                assert cert is None
                continue
            plan = build_courier_plan(market, omega, own)
            oracle = supportable_with_plan(market, x, plan.w_bar)
            assert (cert is None) == (oracle is None)
            if cert is not None:
                assert verify(market, cert).ok
                assert cert.welfare(market) == welfare(market, x)


def test_exhaustive_with_tip_beats_every_without_tip_equilibrium():
    from tipeq.oracles import best_without_tip_bruteforce
    for seed in range(200):
        market = random_market(1500 + seed, max_dim=3)
        cert = construct_with_tip(market, omega_strategy="exhaustive")
        assert verify(market, cert).ok
        best = best_without_tip_bruteforce(market)
        if best is not None:
            assert cert.welfare(market) >= best[0]
            tipless = construct_without_tip(market, omega_strategy="exhaustive")
            assert tipless is not None and tipless.welfare(market) == best[0]


def test_greedy_lift_can_miss_the_best_without_tip_welfare():
    # one buyer indifferent between two stores; the tie-broken Walrasian pick
    # is the one with the dearer delivery
    market = Market.from_arrays([[1, 4, 4]], [[[4, 1, 0]], [[6, 4, 1]]])
    assert construct_with_tip(market).welfare(market) == 3
    assert construct_with_tip(market, omega_strategy="exhaustive").welfare(market) == 4


def test_best_without_tip_welfare_encodes_3dm():
    # with unit valuations the best without-tip welfare is the side size
    # exactly when a perfect 3D matching exists, so no fast exact constructor
    from tipeq.instances import random_3dm
    from tipeq.oracles import best_without_tip_bruteforce, has_perfect_3dm
    from tipeq.welfare import hardness_instance_from_3dm
    rng = np.random.default_rng(3)
    for _ in range(20):
        q = int(rng.integers(1, 4))
        edges = random_3dm(rng, q, density=0.05)
        side = list(range(1, q + 1))
        market = hardness_instance_from_3dm(edges, side, side, side)
        best = best_without_tip_bruteforce(market)
        assert (best[0] == q) == has_perfect_3dm(edges, q)


def test_unknown_strategy(fig2):
    with pytest.raises(ValueError):
        construct_with_tip(fig2, omega_strategy="lucky")
