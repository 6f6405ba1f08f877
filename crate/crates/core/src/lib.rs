//! Bayesian estimation of the ratio of two binned Poisson intensities.
//!
//! Each intensity gets a permanental-process prior (`Λ = (c/2) f²` with `f` a
//! Gaussian field), is fitted by MAP plus a Laplace approximation, and is
//! summarized per bin by a Gamma law. The ratio of two independent Gamma laws
//! is a Beta Prime law, and so is any quantity of interest `T` related to the
//! ratio by `Z = (mT + z0)^p`, up to a shift.

pub mod betaprime;
pub mod cli;
pub mod counts;
pub mod error;
pub mod io;
pub mod kernel;
pub mod permanental;
pub mod ratio;
pub mod synthetic;
pub mod uq;

pub use betaprime::GenBetaPrime;
pub use counts::CountData;
pub use error::{Error, Result};
pub use kernel::{equivalent_kernel, wendland_kernel, BinGrid, EquivalentKernel, KernelMatrix};
pub use permanental::{permprocest, GammaPosterior, PermanentalFit, PermanentalOptions};
pub use ratio::{
    qoi_posterior, ratio_estimation_permproc, t_given_ab, zbetaprime, ConjugatePriors, GammaPrior, QoiModel,
    QoiPosterior, RatioModel, RatioOptions, RatioPosterior,
};
pub use uq::{crps, crps_gaussian, hpd_interval_gaussian, hpd_set, GriddedDensity, HpdSet};
