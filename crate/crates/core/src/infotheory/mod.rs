//! Entropy and mutual-information kernels.

pub mod constellation;
pub mod discrete;
pub mod extremal;
pub mod gaussian;

pub use constellation::{constellation_mi, gauss_hermite, Constellation, InterferenceTerm, MiEstimate, MiMethod};
pub use discrete::{binary_entropy, channel_mutual_information, entropy, JointPmf, Kernel, Pmf};
pub use extremal::{extremal_gap_check, extremal_gap_check_parallel, ExtremalGap};
pub use gaussian::{gaussian_conditional_mi, gaussian_extremal_optimum, gaussian_sum_rate, GaussianLaw, LinkTable, SumRate};
