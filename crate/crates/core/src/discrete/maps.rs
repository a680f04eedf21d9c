//! Exact state transports between the seven momentum forms.
//!
//! Every map routes through form II as the hub: its (x, x_prev, y) tuple is
//! recoverable from each of the other forms, and each of the other forms'
//! states can be completed from it. Two completions are genuinely
//! underdetermined and use a convention that provably leaves all future
//! iterates unchanged:
//!
//! * hub → Lan needs an iterate from two steps back; we set both
//!   x_prev and the last evaluation point to the hub's x_prev, which
//!   satisfies the one combination of them the next step actually reads.
//! * degenerate momentum (beta = 0, i.e. mu = L): form I's v and the
//!   Auslender–Teboulle z coincide with x and the hub's x_prev cannot be
//!   recovered; it is set to x, which the beta-weighted updates never see.

use nalgebra::DVector;

use super::{Form, HyperParams, MethodState};
use crate::error::{Error, Result};

const DEGENERATE_EPS: f64 = 1e-14;

/// Transport a state between forms so that stepping either side keeps the
/// correspondence. Supported forms are the seven momentum methods; the
/// proximal-point family and heavy ball have no hub representation.
pub fn map_state(to: Form, state: &MethodState, params: &HyperParams) -> Result<MethodState> {
    if state.form() == to {
        return Ok(state.clone());
    }
    let (x, x_prev, y) = to_hub(state, params)?;
    from_hub(to, &x, &x_prev, &y, params)
}

fn unsupported(form: Form) -> Error {
    Error::Unsupported(format!(
        "{form} has no state map onto the momentum-form hub"
    ))
}

/// Hub coordinates (x, x_prev, y) of any momentum-form state.
pub(crate) fn to_hub(
    state: &MethodState,
    params: &HyperParams,
) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>)> {
    match state {
        MethodState::NesterovFormII { x, x_prev, y } => {
            Ok((x.clone(), x_prev.clone(), y.clone()))
        }
        MethodState::NesterovFormI { x, v, y } => {
            // v = x_prev + (1/alpha)(x − x_prev) inverts unless alpha = 1.
            let a = params.alpha;
            let x_prev = if (1.0 - a).abs() < DEGENERATE_EPS {
                x.clone()
            } else {
                (x - v * a) / (1.0 - a)
            };
            Ok((x.clone(), x_prev, y.clone()))
        }
        MethodState::Sutskever { x, p } => {
            Ok((x.clone(), x - p, x + p * params.beta))
        }
        MethodState::ModernMomentum { x, p } => {
            // Through Sutskever: p_s = −p/L, x_s = x + (beta/L) p.
            let p_s = -p / params.l;
            let x_s = x + p * (params.beta / params.l);
            let state = MethodState::Sutskever { x: x_s, p: p_s };
            to_hub(&state, params)
        }
        MethodState::AuslenderTeboulle { x_hat, z, y } => {
            let th = params.theta;
            let x_prev = if (1.0 - th).abs() < DEGENERATE_EPS {
                x_hat.clone()
            } else {
                (x_hat - z * th) / (1.0 - th)
            };
            Ok((x_hat.clone(), x_prev, y.clone()))
        }
        MethodState::Lan { x, x_prev, x_md } => {
            let th = params.theta;
            let hub_x = (x - x_prev) * th + x_md;
            let hub_x_prev = if (1.0 - th).abs() < DEGENERATE_EPS {
                hub_x.clone()
            } else {
                (x_md - x_prev * th) / (1.0 - th)
            };
            let hub_y = &hub_x + &hub_x * (1.0 - th) - x_md + x_prev * th;
            Ok((hub_x, hub_x_prev, hub_y))
        }
        MethodState::BregmanAgm { x, y, g } => {
            // Through Lan: x stays, the pre-step iterate is x + g/eta, and y
            // is the last evaluation point.
            let state = MethodState::Lan {
                x: x.clone(),
                x_prev: x + g / params.eta,
                x_md: y.clone(),
            };
            to_hub(&state, params)
        }
        MethodState::ProxPoint { .. }
        | MethodState::PrimalDualPp { .. }
        | MethodState::InertialPp { .. }
        | MethodState::HeavyBall { .. } => Err(unsupported(state.form())),
    }
}

/// Complete a target form's state from hub coordinates.
pub(crate) fn from_hub(
    to: Form,
    x: &DVector<f64>,
    x_prev: &DVector<f64>,
    y: &DVector<f64>,
    params: &HyperParams,
) -> Result<MethodState> {
    match to {
        Form::NesterovFormII => Ok(MethodState::NesterovFormII {
            x: x.clone(),
            x_prev: x_prev.clone(),
            y: y.clone(),
        }),
        Form::NesterovFormI => Ok(MethodState::NesterovFormI {
            x: x.clone(),
            v: x_prev + (x - x_prev) / params.alpha,
            y: y.clone(),
        }),
        Form::Sutskever => Ok(MethodState::Sutskever {
            x: x.clone(),
            p: x - x_prev,
        }),
        Form::ModernMomentum => Ok(MethodState::ModernMomentum {
            x: x + (x - x_prev) * params.beta,
            p: (x_prev - x) * params.l,
        }),
        Form::AuslenderTeboulle => Ok(MethodState::AuslenderTeboulle {
            x_hat: x.clone(),
            z: (x - x_prev * (1.0 - params.theta)) / params.theta,
            y: y.clone(),
        }),
        Form::Lan => Ok(MethodState::Lan {
            x: (x - x_prev * (1.0 - params.theta)) / params.theta,
            x_prev: x_prev.clone(),
            x_md: x_prev.clone(),
        }),
        Form::BregmanAgm => {
            let lan = from_hub(Form::Lan, x, x_prev, y, params)?;
            let MethodState::Lan { x, x_prev, x_md } = lan else {
                unreachable!()
            };
            Ok(MethodState::BregmanAgm {
                g: (x_prev - &x) * params.eta,
                x,
                y: x_md,
            })
        }
        Form::ProxPoint | Form::PrimalDualPp | Form::InertialPp | Form::HeavyBall => {
            Err(unsupported(to))
        }
    }
}
