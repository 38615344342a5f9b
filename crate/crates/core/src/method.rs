//! Provenance tags attached to numerical results.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Inversion,
    Quadrature,
    MonteCarlo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::Inversion => "inversion",
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

/// A value with its error estimate and the method that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub method: Method,
}

impl Estimate {
    pub fn new(value: f64, error: f64, method: Method) -> Self {
        Self { value, error, method }
    }

    pub fn exact(value: f64) -> Self {
        Self::new(value, 0.0, Method::ClosedForm)
    }
}
