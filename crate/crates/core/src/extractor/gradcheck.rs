//! Central finite-difference check of the analytic gradient.

use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{example_loss, loss_and_gradient, ExtractorError, ModelParams};
use crate::datasets::LabeledWindow;

/// Which parameter coordinates to perturb.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordinateSet {
    All,
    /// Only the start/end/verdict heads; the encoder stays frozen.
    HeadsOnly,
    Random {
        count: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    /// max |g_a - g_n| / max(1e-8, |g_a| + |g_n|)
    pub max_relative_error: f64,
    pub worst_coordinate: usize,
    pub analytic_at_worst: f64,
    pub numeric_at_worst: f64,
    pub checked: usize,
}

/// Checks the model's own backward pass.
pub fn grad_check(
    params: &ModelParams,
    example: &LabeledWindow,
    eps: f64,
    coords: CoordinateSet,
) -> Result<GradCheckReport, ExtractorError> {
    grad_check_with(params, example, eps, coords, |p, ex| loss_and_gradient(p, ex).map(|(_, g)| g))
}

/// Compares `analytic` against central differences of the loss.
pub fn grad_check_with<F>(
    params: &ModelParams,
    example: &LabeledWindow,
    eps: f64,
    coords: CoordinateSet,
    analytic: F,
) -> Result<GradCheckReport, ExtractorError>
where
    F: FnOnce(&ModelParams, &LabeledWindow) -> Result<Vec<f64>, ExtractorError>,
{
    let grads = analytic(params, example)?;
    let indices: Vec<usize> = match coords {
        CoordinateSet::All => (0..params.len()).collect(),
        CoordinateSet::HeadsOnly => params.layout().heads().collect(),
        CoordinateSet::Random { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut v = sample(&mut rng, params.len(), count.min(params.len())).into_vec();
            v.sort_unstable();
            v
        }
    };
    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_coordinate: 0,
        analytic_at_worst: 0.0,
        numeric_at_worst: 0.0,
        checked: indices.len(),
    };
    for &i in &indices {
        let orig = probe.values()[i];
        probe.values_mut()[i] = orig + eps;
        let plus = example_loss(&probe, example)?;
        probe.values_mut()[i] = orig - eps;
        let minus = example_loss(&probe, example)?;
        probe.values_mut()[i] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        let a = grads[i];
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
        if rel > report.max_relative_error {
            report.max_relative_error = rel;
            report.worst_coordinate = i;
            report.analytic_at_worst = a;
            report.numeric_at_worst = numeric;
        }
    }
    Ok(report)
}
