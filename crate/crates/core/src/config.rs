//! Every numeric knob of the measurement pipeline, with defaults that
//! reproduce the reference behavior. Loadable from JSON.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Convergence threshold on the max per-sweep potential change,
    /// relative to the potential range (inner - outer).
    pub tolerance: f64,
    /// Sweep cap; hitting it flags the field unconverged instead of erroring.
    pub max_iterations: usize,
    /// Successive over-relaxation factor, must lie in (0, 2).
    pub omega: f64,
    /// Streamline Euler step in pixels.
    pub step_px: f64,
    /// Shared step budget per streamline (both legs).
    pub max_steps: usize,
    /// Gradient magnitudes below this (relative to the potential range)
    /// leave the tangent undefined.
    pub grad_epsilon: f64,
    /// Neighbor count for inverse-distance fill; ties at the k-th distance
    /// are all included.
    pub fill_k: usize,
    /// Potential-mismatch penalty in the fill weights.
    pub fill_lambda: f64,
    /// Dirichlet value on the cavity side; the exterior side is 0.
    pub inner_potential: f64,
    /// Master seed picked up by dataset generation when no flag overrides it.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-5,
            max_iterations: 20_000,
            omega: 1.9,
            step_px: 0.1,
            max_steps: 100_000,
            grad_epsilon: 1e-8,
            fill_k: 8,
            fill_lambda: 10.0,
            inner_potential: 1.0,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
            }
        }
        positive("tolerance", self.tolerance)?;
        positive("step_px", self.step_px)?;
        positive("grad_epsilon", self.grad_epsilon)?;
        positive("fill_lambda", self.fill_lambda)?;
        positive("inner_potential", self.inner_potential)?;
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return Err(Error::Config(format!("omega must lie in (0, 2), got {}", self.omega)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be at least 1".into()));
        }
        if self.fill_k == 0 {
            return Err(Error::Config("fill_k must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SolverConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
