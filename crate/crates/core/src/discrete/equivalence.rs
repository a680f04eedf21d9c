//! The seven-form agreement suite: run every momentum form side by side and
//! measure, in hub coordinates, how far each pair drifts apart.

use nalgebra::{DMatrix, DVector};

use super::{maps, matched_params, step_method, Form, HyperParams, MethodState};
use crate::error::{Error, Result};
use crate::objectives::Objective;

/// The forms that share a trajectory under [`matched_params`].
pub const EQUIVALENT_FORMS: [Form; 7] = [
    Form::NesterovFormI,
    Form::NesterovFormII,
    Form::Sutskever,
    Form::ModernMomentum,
    Form::AuslenderTeboulle,
    Form::Lan,
    Form::BregmanAgm,
];

/// Outcome of an equivalence run.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub forms: Vec<Form>,
    /// max over iterations of the pairwise hub-coordinate distance.
    pub max_deviation: DMatrix<f64>,
    pub tolerance: f64,
    /// First (pair, iteration) exceeding the tolerance, if any.
    pub first_failure: Option<(Form, Form, usize)>,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }

    pub fn worst(&self) -> f64 {
        self.max_deviation.max()
    }
}

/// Hub-coordinate distance between two states. When beta is (numerically)
/// zero the x_prev slot is excluded: the degenerate completions cannot
/// recover it and no update reads it.
fn hub_distance(
    a: &MethodState,
    b: &MethodState,
    pa: &HyperParams,
    pb: &HyperParams,
) -> Result<f64> {
    let (ax, axp, ay) = maps::to_hub(a, pa)?;
    let (bx, bxp, by) = maps::to_hub(b, pb)?;
    let mut d = (ax - bx).norm().max((ay - by).norm());
    if pa.beta > 1e-12 {
        d = d.max((axp - bxp).norm());
    }
    Ok(d)
}

/// Run all seven momentum forms for `k_max` iterations from x0, each with
/// its own matched constants and a hub-consistent start, and record the
/// maximum pairwise deviation in hub coordinates at every iteration.
///
/// `overrides` substitutes the parameter set of individual forms, which
/// deliberately breaks the agreement — the negative control.
pub fn equivalence_suite(
    obj: &Objective,
    x0: &DVector<f64>,
    k_max: usize,
    tolerance: f64,
    overrides: &[(Form, HyperParams)],
) -> Result<EquivalenceReport> {
    let (mu, l) = crate::objectives::strong_convexity_bounds(obj)?;
    if k_max == 0 {
        return Err(Error::InvalidInput("k_max must be at least 1".into()));
    }

    let forms = EQUIVALENT_FORMS.to_vec();
    let mut params = Vec::with_capacity(forms.len());
    for &form in &forms {
        let p = overrides
            .iter()
            .find(|(f, _)| *f == form)
            .map(|(_, p)| *p)
            .unwrap_or(matched_params(form, mu, l)?);
        params.push(p);
    }

    // Hub-consistent start: every form receives the image of the hub state
    // (x0, x0, x0). For the Bregman form this puts a zero in the gradient
    // slot, which is what agreement at step 1 requires.
    let hub = MethodState::NesterovFormII {
        x: x0.clone(),
        x_prev: x0.clone(),
        y: x0.clone(),
    };
    let mut states: Vec<MethodState> = forms
        .iter()
        .zip(&params)
        .map(|(&form, p)| maps::map_state(form, &hub, p))
        .collect::<Result<_>>()?;

    let m = forms.len();
    let mut max_deviation = DMatrix::zeros(m, m);
    let mut first_failure = None;

    for k in 1..=k_max {
        for (state, p) in states.iter_mut().zip(&params) {
            *state = step_method(obj, p, state)?;
        }
        for i in 0..m {
            for j in i + 1..m {
                let d = hub_distance(&states[i], &states[j], &params[i], &params[j])?;
                if d > max_deviation[(i, j)] {
                    max_deviation[(i, j)] = d;
                    max_deviation[(j, i)] = d;
                }
                if d > tolerance && first_failure.is_none() {
                    first_failure = Some((forms[i], forms[j], k));
                }
            }
        }
    }

    Ok(EquivalenceReport {
        forms,
        max_deviation,
        tolerance,
        first_failure,
    })
}
