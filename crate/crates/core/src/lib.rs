pub mod ccnorm;
pub mod config;
pub mod error;
pub mod fraclap;
pub mod heatkernel;
pub mod hgroup;
pub mod jets;
pub mod polar;
pub mod quadrature;
pub mod riesz;
pub mod special;
pub mod testfn;

pub use config::{Estimate, QuadratureSpec, SamplerSpec};
pub use error::{Error, Result};
pub use hgroup::{GroupConfig, Point};
pub use testfn::{Field, TestFunction};
