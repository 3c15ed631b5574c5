//! Central finite-difference checks of tape gradients.

use super::tape::{ParamId, ParamStore, Tape, Var};
use crate::Result;

/// Step used for the central differences.
pub const FD_STEP: f64 = 1e-5;

/// Denominator floor of the relative error, so entries whose true gradient
/// is essentially zero are compared on an absolute scale.
pub const REL_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub checked: usize,
}

/// `|a - n| / max(|a|, |n|, REL_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Compares `backward` against central differences of `loss_fn`.
///
/// At most `max_per_param` entries of each tensor are perturbed, spread evenly
/// across it; pass `usize::MAX` to check everything.
pub fn check<F>(store: &ParamStore, loss_fn: F, max_per_param: usize) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<'_>) -> Result<Var>,
{
    let analytic = {
        let mut tape = Tape::new(store);
        let loss = loss_fn(&mut tape)?;
        tape.backward(loss)?
    };
    let eval = |s: &ParamStore| -> Result<f64> {
        let mut tape = Tape::new(s);
        let loss = loss_fn(&mut tape)?;
        tape.value(loss).item()
    };

    let mut work = store.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        checked: 0,
    };
    for id in store.ids() {
        let n = store.get(id).len();
        let stride = n.div_ceil(max_per_param.max(1)).max(1);
        for k in (0..n).step_by(stride) {
            let numeric = central_difference(&mut work, id, k, &eval)?;
            let a = analytic.get(id).map_or(0.0, |g| g.data()[k]);
            let err = relative_error(a, numeric);
            report.checked += 1;
            if err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst_param = store.name(id).to_string();
                report.worst_index = k;
            }
        }
    }
    Ok(report)
}

fn central_difference(
    work: &mut ParamStore,
    id: ParamId,
    k: usize,
    eval: &impl Fn(&ParamStore) -> Result<f64>,
) -> Result<f64> {
    let orig = work.get(id).data()[k];
    work.get_mut(id).data_mut()[k] = orig + FD_STEP;
    let up = eval(work)?;
    work.get_mut(id).data_mut()[k] = orig - FD_STEP;
    let down = eval(work)?;
    work.get_mut(id).data_mut()[k] = orig;
    Ok((up - down) / (2.0 * FD_STEP))
}
