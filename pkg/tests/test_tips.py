from fractions import Fraction

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from tipeq.courier import build_courier_plan, max_courier_utilities
from tipeq.market import Market
from tipeq.tips import equilibrium_min_tips, min_tip, min_tip_for_courier

from conftest import markets


def test_fig1_minimum_tip(fig1):
    w = {("b1", "s1"): 1}
    assert min_tip_for_courier(fig1, w, {}, "b2", "s1", "d1") == 12
    assert min_tip_for_courier(fig1, w, {}, "b2", "s1", "d2") == 12
    assert min_tip(fig1, w, {}, "b2", "s1") == 12
    assert min_tip(fig1, w, {}, "b1", "s1") == 0


def test_single_order_cases():
    m = Market.from_arrays([[9]], [[[5]]])
    assert min_tip(m, {("b1", "s1"): 6}, {}, "b1", "s1") == 0
    assert min_tip(m, {}, {}, "b1", "s1") == 5


def test_own_tips_on_other_stores_are_ignored():
    m = Market.from_arrays([[9, 9]], [[[1, 1]]])
    assert min_tip(m, {}, {("b1", "s2"): 50}, "b1", "s1") == 1
    assert min_tip(m, {}, {("b1", "s2"): 50}, "b1", "s2") == 1


def test_equilibrium_tips_fig1(fig1):
    omega = [("b1", "s1")]
    table = equilibrium_min_tips(fig1, omega, max_courier_utilities(fig1, omega))
    assert table[("b1", "s1")] == 0
    assert table[("b2", "s1")] == 12


def test_equilibrium_tips_exceed_valuations_when_couriers_busy(fig3):
    omega = [("b1", "s1"), ("b2", "s2")]
    table = equilibrium_min_tips(fig3, omega, max_courier_utilities(fig3, omega))
    for o in fig3.orders:
        if o not in omega:
            assert table[o] > fig3.max_valuation
        else:
            assert table[o] == 0


def _dense(market, draw, strat):
    return {o: draw(strat) for o in market.orders}


@settings(max_examples=80, deadline=None)
@given(markets(), st.data())
def test_min_tip_is_minimum_over_couriers(market, data):
    amounts = st.integers(0, 6).map(Fraction)
    w, t = _dense(market, data.draw, amounts), _dense(market, data.draw, amounts)
    for b, s in market.orders:
        each = [min_tip_for_courier(market, w, t, b, s, d) for d in market.couriers]
        assert all(x >= 0 for x in each)
        assert min_tip(market, w, t, b, s) == min(each)


@settings(max_examples=60, deadline=None)
@given(markets(), st.data())
def test_min_tip_is_tight(market, data):
    # at t_low some courier weakly prefers (b, s) to every rival; just below, none does
    amounts = st.integers(0, 6).map(Fraction)
    w, t = _dense(market, data.draw, amounts), _dense(market, data.draw, amounts)
    b, s = data.draw(st.sampled_from(market.orders))
    low = min_tip(market, w, t, b, s)
    from tipeq.courier import courier_utilities
    from tipeq.market import best_response

    def someone_accepts(tip):
        pay = {o: w[o] + (t[o] if o[0] != b else 0) for o in market.orders}
        pay[(b, s)] = w[(b, s)] + tip
        return any((b, s) in best_response(courier_utilities(market, pay, d))
                   for d in market.couriers)

    assert someone_accepts(low)
    if low > 0:
        assert not someone_accepts(low - Fraction(1, 7))


@settings(max_examples=60, deadline=None)
@given(markets(), st.data())
def test_raising_a_rival_compensation_never_lowers_the_tip(market, data):
    amounts = st.integers(0, 6).map(Fraction)
    w, t = _dense(market, data.draw, amounts), _dense(market, data.draw, amounts)
    target = data.draw(st.sampled_from(market.orders))
    rival = data.draw(st.sampled_from(market.orders))
    if rival == target:
        return
    before = min_tip(market, w, t, *target)
    w[rival] += data.draw(st.integers(1, 5))
    assert min_tip(market, w, t, *target) >= before


def test_closed_form_matches_equilibrium_tips_off_target():
    from conftest import random_market
    rng = np.random.default_rng(11)
    for seed in range(120):
        market = random_market(500 + seed)
        m, n, l = market.dims
        k = int(rng.integers(0, min(m, n, l) + 1))
        omega = [(market.buyers[i], market.stores[j])
                 for i, j in zip(rng.permutation(m)[:k], rng.permutation(n)[:k])]
        plan = build_courier_plan(market, omega)
        table = equilibrium_min_tips(market, omega, plan.u_bar)
        for o in market.orders:
            assert min_tip(market, plan.w_bar, {}, *o) == table[o]
