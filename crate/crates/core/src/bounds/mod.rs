//! Closed-form analytics: range bounds, the sensing/communication coupling,
//! and the bandwidth-split trade-off.

mod coupling;
mod fisher;
mod tradeoff;

pub use coupling::{
    coupling_report, coupling_xi, coupling_xi_from_freq_var, effective_rate, freq_error_variance,
    phase_variance, phase_variance_approx, symbol_snr, CouplingReport,
};
pub use fisher::{crb_sensing_only, fisher_closed_form, fisher_oracle, mcrb_tau, FisherBreakdown};
pub use tradeoff::{
    fisher_coefficients, fisher_coefficients_raw, frontier_slope, optimal_beta, pareto_frontier,
    ratio_ba, s_norm, validate_phase_constraint, FisherCoefficients, PhaseCheck, TradeoffPoint,
};
