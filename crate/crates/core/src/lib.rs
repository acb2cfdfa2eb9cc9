//! Minorizing metrics, Orlicz norms and explicit chaining certificates on finite
//! metric-measure spaces, with deterministic and Monte Carlo verification of the
//! resulting Hölder-type bounds.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod error;
pub mod mc;
pub mod minorize;
pub mod mspace;
pub mod orlicz;
pub mod verify;
pub mod young;

pub use error::{Error, Result};
