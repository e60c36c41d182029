"""Pricing equilibria with and without tips in three-sided delivery markets."""

from .courier import CourierPlan, build_courier_plan, max_courier_utilities
from .equilibrium import (Condition, EquilibriumCertificate, Mode, Verdict, Violation,
                          best_single_trade_equilibrium, construct_with_tip,
                          construct_without_tip, lift_without_to_with, supports_equilibrium,
                          to_zero_tip, verify, verify_with_tip, verify_without_tip)
from .instances import InstanceSpec, fig1, fig2, fig3, generate
from .market import (Allocation, InfeasibleAllocationError, InternalInvariantError, Market,
                     MarketError, PriceShift, PriceSystem, normalize_store_costs,
                     validate_allocation, welfare, with_store_costs)
from .serialize import load_market, save_market
from .tips import TipMatrix, equilibrium_min_tips, min_tip, min_tip_for_courier
from .welfare import (CapExceededError, CostStructure, StructureKind, detect_cost_structure,
                      efficient_equilibrium_structured, hardness_instance_from_3dm,
                      optimal_equilibrium_welfare_bruteforce, optimal_welfare_bruteforce,
                      optimal_welfare_flow, optimal_welfare_single_minded)

__version__ = "0.1.0"
