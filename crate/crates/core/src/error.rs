// SPDX-License-Identifier: Apache-2.0

//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain on which the operation is defined.
    #[error("{quantity} = {value:e} is outside the valid domain ({expected})")]
    Domain {
        quantity: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// The eigenvalue scan found no sign change of the dispersion residual.
    #[error(
        "no guided HE11 root for D = {diameter:e} m, lambda = {wavelength:e} m \
         (V = {v:.4}); the mode is too close to cutoff for the scan grid"
    )]
    NoGuidedRoot { diameter: f64, wavelength: f64, v: f64 },

    /// A quadrature did not reach its tolerance.
    #[error("quadrature did not converge on [{lower:e}, {upper:e}]: {detail}")]
    Quadrature { lower: f64, upper: f64, detail: String },

    /// The adaptive integrator could not make progress.
    #[error("step size collapsed to {step:e} s at t = {time:e} s")]
    StepSizeCollapse { time: f64, step: f64 },

    /// Closed-form P2 has a removable singularity here.
    #[error(
        "closed-form P2 denominator (G2 - G1)^2 + 4 Delta^2 = {value:e} is degenerate; \
         use the perturbative integration instead"
    )]
    DegenerateDenominator { value: f64 },

    /// A scenario-level failure, with the physical context attached.
    #[error("{context}: {source}")]
    Scenario {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(quantity: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain {
            quantity,
            value,
            expected,
        }
    }

    pub(crate) fn with_context(self, context: impl Into<String>) -> Self {
        Error::Scenario {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error beneath any scenario context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Scenario { source, .. } => source.root(),
            other => other,
        }
    }
}
