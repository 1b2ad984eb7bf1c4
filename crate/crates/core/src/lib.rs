//! Large-N spectral curves, the multi-trace fundamental bidifferential and
//! blobbed topological recursion for type-(1,0) Dirac ensembles, with an
//! exact Wick oracle and a Metropolis sampler for cross-validation.

pub mod algebra;
pub mod btr;
pub mod curve;
pub mod error;
pub mod model;
pub mod omega2;
pub mod sampler;
pub mod wick;

pub use error::{Error, Result};

use num_traits::{Float, FloatConst, FromPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Scalar used by the analytic modules.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + Sum + 'static
{
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal fits scalar")
    }
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + Sum + 'static
{
}

pub type Scalar = f64;
pub type Complex = num_complex::Complex<f64>;
pub type LaurentSeries = algebra::LaurentSeries<f64>;
pub type RationalFunction = algebra::RationalFunction<f64>;
pub type PoleBasisForm = algebra::PoleBasisForm<f64>;



pub type SpectralData = curve::SpectralData<f64>;
pub type Omega02 = omega2::Omega02<f64>;
pub type OmegaTable = btr::OmegaTable<f64>;
