// SPDX-License-Identifier: Apache-2.0

pub mod atom;
pub mod engine;
pub mod error;
pub mod mode_field;
pub mod mode_solver;
pub mod ode;
pub mod quad;
pub mod specfun;
pub mod units;

pub use error::{Error, Result};
