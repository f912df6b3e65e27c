//! Limiting spectrum of the normalized modularity operator: Stieltjes fixed
//! points, bulk edge, detectability threshold and isolated eigenvalues.

mod edge;
mod fixed_point;
mod spikes;

pub use edge::{
    alpha_opt, support_edge, support_edge_with, AlphaGrid, AlphaOpt, EdgeConfig, SupportEstimate,
};
pub use fixed_point::{
    e_moment, e_moment2, e_moment3, solve_fixed_point, solve_fixed_point_complex,
    solve_fixed_point_with, spectral_density, ComplexSolution, FixedPointConfig, StieltjesSolution,
};
pub use spikes::{
    mbar_spectrum, orient, phase_ratio, predict_spikes, predict_spikes_with_edge, spike_location,
    theta, MbarSpectrum, Spike, SpikeReport, INFORMATIVE_TOL,
};
