//! Pointwise regularity analysis for planar elliptic equations
//! `a u_xx + b u_xy + c u_yy = 0` whose coefficients are close to the
//! identity at the origin.
//!
//! The numerical core (`coeff`, `quadrature`, `moments`, `dynsys`) is generic
//! over [`scalar::Real`]; the aliases below fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod linalg;
pub mod quadrature;
pub mod scalar;
pub mod tail;
pub mod coeff;
pub mod moments;
pub mod dynsys;
pub mod criteria;
pub mod pdelab;
pub mod cli;

pub use error::{Error, Result};

pub type Field = coeff::CoefficientField<f64>;
pub type Modulus = coeff::ModulusOfContinuity<f64>;
pub type Moments = moments::MomentVector<f64>;
pub type Blocks = moments::BlockTable<f64>;
pub type Reduced = dynsys::ReducedSystem<f64>;
pub type Full = dynsys::FullSystem<f64>;
pub type Transition<const N: usize> = dynsys::TransitionMatrix<f64, N>;
