//! Channel synthesis and compressive channel estimation for RIS-assisted
//! cell-free uplinks.
//!
//! Several base stations (BSs) are served by several reconfigurable intelligent
//! surfaces (RISs) and single-antenna users. The crate covers the whole
//! training pipeline:
//!
//! * [`geometry`]: ULA steering vectors and multipath BS–RIS, RIS–user and
//!   cascaded channels.
//! * [`dictionary`]: over-complete DFT grids and sparse reconstruction.
//! * [`measurement`]: orthogonal pilots, time-switched RIS reflection
//!   schedules, received signals and despreading.
//! * [`tensor`]: the third-order tensor used to pool all users of one BS.
//! * [`estimators`]: LS, oracle LS, OMP, LAOMP, simultaneous OMP, the
//!   tensor look-ahead pursuit for cascaded channels and the per-BS and
//!   cooperative two-timescale solvers.
//!
//! The companion guide under `book/` walks through each step; its code
//! listings are compiled and run as doc-tests of this crate.

pub mod dictionary;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod linalg;
pub mod measurement;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/channel-model.md")]
    mod channel_model {}
    #[doc = include_str!("../../../book/src/dictionaries.md")]
    mod dictionaries {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/tensors.md")]
    mod tensors {}
    #[doc = include_str!("../../../book/src/greedy-pursuit.md")]
    mod greedy_pursuit {}
    #[doc = include_str!("../../../book/src/cascaded-estimation.md")]
    mod cascaded_estimation {}
    #[doc = include_str!("../../../book/src/two-timescale.md")]
    mod two_timescale {}
}
