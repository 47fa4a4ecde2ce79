use std::time::Duration;

use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    /// `|ln μ − ln μ̃| ≤ δ`.
    Relative,
    /// `|μ − μ̃| ≤ δ`.
    Additive,
}

/// Per-run quantities reported next to an estimate; unused fields stay `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell1: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell2: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell4: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_bound: Option<f64>,
    /// Truncation order of the log-Taylor series.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subset_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subset_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_bound: Option<f64>,
    /// Degree of the damping polynomial.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_abs_g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub term_count: Option<u128>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_bond: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bond_bound: Option<usize>,
    #[serde(skip)]
    pub runtime: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanEstimate {
    /// Serialized as `[re, im]`.
    pub value: Complex64,
    pub kind: ErrorKind,
    pub delta: f64,
    /// Probability with which the error bound holds (1 for deterministic methods).
    pub confidence: f64,
    pub diagnostics: Diagnostics,
}

impl MeanEstimate {
    pub fn new(value: Complex64, kind: ErrorKind, delta: f64, confidence: f64) -> Self {
        Self {
            value,
            kind,
            delta,
            confidence,
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn with_diagnostics(mut self, diagnostics: Diagnostics) -> Self {
        self.diagnostics = diagnostics;
        self
    }
}
