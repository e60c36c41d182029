"""
When every equilibrium is inefficient
=====================================

In this two-by-two market a single cheap trade is optimal, but any
equilibrium serves both buyers and pays for an expensive delivery. Sweeping
the expensive cost shows the equilibrium welfare falling without bound while
the optimum stays at 1.
"""

from fractions import Fraction

from tipeq import fig3, optimal_equilibrium_welfare_bruteforce, optimal_welfare_bruteforce
from tipeq.equilibrium import best_single_trade_equilibrium, supports_equilibrium
from tipeq.market import feasible_allocations

for kappa in (Fraction(5, 2), 3, 5, 10):
    market = fig3(kappa)
    opt, _ = optimal_welfare_bruteforce(market)
    eq_w, cert = optimal_equilibrium_welfare_bruteforce(market)
    print(f"kappa={kappa}: OPT={opt}, best equilibrium welfare={eq_w}")

# Which allocations can be supported at all?
market = fig3(3)
for x in feasible_allocations(market):
    if x.triples:
        ok = supports_equilibrium(market, x) is not None
        print(sorted(x), "supportable" if ok else "-")

# Dropping market clearing lets the platform price unsold stores out of reach,
# and then the single best trade is an equilibrium.
relaxed = best_single_trade_equilibrium(market)
print("non-clearing equilibrium:", sorted(relaxed.allocation),
      "welfare", relaxed.welfare(market))
