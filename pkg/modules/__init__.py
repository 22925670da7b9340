from modules.auction import MarketParams, BeliefProfile, AuctionOutcome, ValuationContext, EquilibriumVerdict, \
    OracleScaleError, equilibrium_price, brute_force_equilibrium_check, run_auction_trial, \
    final_prices_from_beliefs, simulate_final_prices
from modules.liquidity import LiquidityQuery, SeriesControl, LiquidityPoint, MonteCarloEstimate, SignReport, \
    ConsistencyError, DegenerateStepError, g_s0, dg_dcm, valuation_context, f_s0, mc_estimate_f, \
    delta_lambda_ill, delta_cm_ill, cross_partial_signs
