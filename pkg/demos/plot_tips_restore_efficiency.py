"""
Tips restore efficiency in a one-store market
==============================================

Two buyers want the only store. The cheap buyer is the efficient one, yet
without tips the store goes to the rich buyer, whose delivery costs more than
the purchase is worth.
"""

from fractions import Fraction

from tipeq import (Allocation, PriceSystem, fig1, min_tip, optimal_welfare_bruteforce,
                   verify_with_tip, welfare)
from tipeq.equilibrium import construct_with_tip
from tipeq.welfare import efficient_equilibrium_structured
from tipeq.oracles import best_without_tip_bruteforce, without_tip_bounds

market = fig1()
print("valuations:", {k: str(v) for k, v in market.valuation.items()})

# The best possible outcome: b1 buys and d1 delivers at no cost.
opt, x_opt = optimal_welfare_bruteforce(market)
print("optimal welfare", opt, "via", sorted(x_opt))

# Exhaustive search over allocations and price polytopes finds the best
# equilibrium without tips.
w, x, prices = best_without_tip_bruteforce(market)
price_ranges, comp_ranges = without_tip_bounds(market, x)
print("best without-tip welfare", w, "via", sorted(x))
print("price range", *map(str, price_ranges["s1"]),
      "; compensation range", *map(str, comp_ranges[("b2", "s1")]))

# With tips the efficient trade is an equilibrium. To steal the courier,
# b2 would have to tip at least this much, which outweighs the store.
eq_prices = PriceSystem({"s1": Fraction(1)}, {("b1", "s1"): Fraction(1)})
x1 = Allocation.of(("b1", "s1", "d1"))
print("efficient trade verifies:", verify_with_tip(market, eq_prices, x1).ok)
print("b2 must tip", min_tip(market, eq_prices.w, {}, "b2", "s1"))

# The generic constructor just reuses the tip-free equilibrium, so it keeps
# the bad outcome. The costs here split by store, and the structured solver
# finds the efficient one.
print("generic constructor welfare", welfare(market, construct_with_tip(market).allocation))
print("structured constructor welfare", efficient_equilibrium_structured(market).welfare(market))
