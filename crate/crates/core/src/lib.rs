//! Tunnelling of multi-mode ("cat") wave-packet states through 1-D barriers.
//!
//! Units have ħ = 1 throughout. A cat state is `N` copies of one Gaussian
//! wave packet launched at delays `t_1 = 0 ≤ t_2 ≤ … ≤ t_N`; its transmission
//! probability follows from the overlap matrices in [`overlap`], and the
//! narrow-resonance closed forms live in [`analytic`].

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod barrier;
pub mod diagnostics;
pub mod error;
pub mod overlap;
pub mod par;
pub mod quadrature;
pub mod resonances;
mod scattering;
pub mod sweep;
pub mod wavepacket;

pub use barrier::{
    BarrierModel, PiecewiseConstantPotential, RectangularBarrier, Resonance, Segment,
};
pub use error::{Error, Result};
pub use overlap::{MixedCatSpec, MomentumGrid, OverlapMatrix, QuadratureConfig};
pub use par::Execution;
pub use sweep::{run_sweep, run_sweep_with, SweepResult, SweepSpec};
pub use wavepacket::{CatStateSpec, DispersionRelation, GaussianProfile};
