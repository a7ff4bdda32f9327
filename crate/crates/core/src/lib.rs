//! Energy-efficient hybrid beamforming for integrated sensing and communication (ISAC) at a
//! mmWave MIMO base station.
//!
//! The design pipeline runs a Dinkelbach price loop over a semidefinite relaxation of the
//! fully-digital problem ([`dinkelbach`], [`sdpcore`]) and then factors the digital beamformer into
//! a unit-modulus analog stage and a baseband stage ([`hbf`]). [`baselines`] holds the OMP and
//! fully-digital comparison schemes and [`pipeline`] wires everything into one call per method.

// Negated comparisons such as `!(x > 0.0)` deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod dinkelbach;
pub mod error;
pub mod hbf;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod sdpcore;

pub use error::{ConstraintId, Error, Result};
pub use metrics::{DesignReport, DigitalBeamformer};
pub use model::{ChannelSet, ScenarioConfig};

/// Chapters of the guide under `book/`, compiled here so their snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/system-model.md")]
    mod system_model {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/sdr.md")]
    mod sdr {}
    #[doc = include_str!("../../../book/src/hybrid.md")]
    mod hybrid {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
