//! Central finite-difference validation of analytic gradients.

use super::params::ParameterSet;

/// Magnitude below which both gradients are compared on an absolute scale.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    /// Central-difference step.
    pub step: f64,
    pub tolerance: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradMismatch {
    pub parameter: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub tolerance: f64,
    /// Entries whose relative error exceeds the tolerance.
    pub failures: Vec<GradMismatch>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// `|a - n| / max(|a|, |n|, REL_ERROR_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
    (analytic - numeric).abs() / denom
}

/// Compares `analytic` against central differences of `loss` around
/// `params`, perturbing one scalar at a time.
pub fn gradient_check<F>(params: &ParameterSet, analytic: &ParameterSet, mut loss: F, config: GradCheckConfig) -> GradCheckReport
where
    F: FnMut(&ParameterSet) -> f64,
{
    let mut probe = params.clone();
    let mut report = GradCheckReport {
        checked: 0,
        max_rel_error: 0.0,
        tolerance: config.tolerance,
        failures: Vec::new(),
    };
    for t in 0..params.len() {
        for j in 0..params.values(t).len() {
            let orig = params.values(t)[j];
            probe.values_mut(t)[j] = orig + config.step;
            let plus = loss(&probe);
            probe.values_mut(t)[j] = orig - config.step;
            let minus = loss(&probe);
            probe.values_mut(t)[j] = orig;
            let numeric = (plus - minus) / (2.0 * config.step);
            let a = analytic.values(t)[j];
            let rel = relative_error(a, numeric);
            report.checked += 1;
            report.max_rel_error = report.max_rel_error.max(rel);
            if !(rel <= config.tolerance) {
                report.failures.push(GradMismatch {
                    parameter: params.tensor(t).name.clone(),
                    index: j,
                    analytic: a,
                    numeric,
                    rel_error: rel,
                });
            }
        }
    }
    report
}

/// Same check for a gradient with respect to a plain input vector.
pub fn gradient_check_input<F>(input: &[f64], analytic: &[f64], mut loss: F, config: GradCheckConfig) -> GradCheckReport
where
    F: FnMut(&[f64]) -> f64,
{
    let mut params = ParameterSet::new();
    params.push(super::Tensor {
        name: "input".into(),
        shape: vec![input.len()],
        values: input.to_vec(),
    });
    let mut grads = params.zeros_like();
    grads.values_mut(0).copy_from_slice(analytic);
    gradient_check(&params, &grads, |p| loss(p.values(0)), config)
}
