//! Truncations, eigenvalue counts, Green's functions, bands and gaps.

pub mod bands;
pub mod gaps;
pub mod green;
pub mod truncation;

pub use bands::{bands_on_grid, bands_rational, dual_band_pair, linspace, period_trace, spectral_bound, BandOptions};
pub use gaps::{gap_edges, ids, label_gap, spacing_gaps, EdgeSource, GapStatus, RhoConfig, SpectralGap, EDGE_SPREAD, M_MAX};
pub use green::{green_entry, green_local, poisson_residual, Endpoint};
pub use truncation::{
    complex_off_diagonal, eig_count, leading_minors, pk_determinant, pk_growth_rate, tridiag_eigs, truncation, Flavor,
    JacobiTruncation, LogSigned,
};
