//! The discrete methods: proximal point (primal, primal-dual, inertial),
//! the Bregman-divergence form of the accelerated gradient method, heavy
//! ball, and the six classical momentum forms — plus the exact state maps
//! that transport an iterate of one form into any other.

mod equivalence;
mod maps;
mod steps;

pub use equivalence::{equivalence_suite, EquivalenceReport, EQUIVALENT_FORMS};
pub use maps::map_state;
pub use steps::*;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::Objective;

/// Method selector, also the config-file spelling of each form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    NesterovFormI,
    // rename_all would split the Roman numeral into `..._i_i`.
    #[serde(rename = "nesterov_form_ii")]
    NesterovFormII,
    Sutskever,
    ModernMomentum,
    AuslenderTeboulle,
    Lan,
    BregmanAgm,
    ProxPoint,
    PrimalDualPp,
    InertialPp,
    HeavyBall,
}

impl Form {
    pub const ALL: [Form; 11] = [
        Form::NesterovFormI,
        Form::NesterovFormII,
        Form::Sutskever,
        Form::ModernMomentum,
        Form::AuslenderTeboulle,
        Form::Lan,
        Form::BregmanAgm,
        Form::ProxPoint,
        Form::PrimalDualPp,
        Form::InertialPp,
        Form::HeavyBall,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Form::NesterovFormI => "nesterov_form_i",
            Form::NesterovFormII => "nesterov_form_ii",
            Form::Sutskever => "sutskever",
            Form::ModernMomentum => "modern_momentum",
            Form::AuslenderTeboulle => "auslender_teboulle",
            Form::Lan => "lan",
            Form::BregmanAgm => "bregman_agm",
            Form::ProxPoint => "prox_point",
            Form::PrimalDualPp => "primal_dual_pp",
            Form::InertialPp => "inertial_pp",
            Form::HeavyBall => "heavy_ball",
        }
    }
}

impl std::fmt::Display for Form {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Every constant any of the methods consumes. Each stepper reads only its
/// own subset; [`default_params`] fills the whole record consistently for a
/// given form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub mu: f64,
    #[serde(rename = "L")]
    pub l: f64,
    /// Inverse step size of the x/z update.
    pub eta: f64,
    /// Proximal penalty weight.
    pub tau: f64,
    /// Extrapolation weight in front of the previous gradient.
    pub alpha: f64,
    /// Momentum.
    pub beta: f64,
    /// Form-specific step constant: the v-mixing weight in form I (= mu),
    /// the dual step in the Auslender–Teboulle form (= 1/L), the step size
    /// for heavy ball.
    pub gamma: f64,
    /// Mixing weight of the Auslender–Teboulle / Lan family (= 1 − beta).
    pub theta: f64,
}

fn check_constants(mu: f64, l: f64) -> Result<()> {
    if !(mu.is_finite() && l.is_finite()) || mu <= 0.0 || l <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "need finite positive constants, got mu={mu}, L={l}"
        )));
    }
    if mu > l {
        return Err(Error::InvalidParams(format!(
            "mu must not exceed L, got mu={mu}, L={l}"
        )));
    }
    Ok(())
}

/// Canonical constants for a form given the objective's (mu, L).
///
/// Momentum forms get beta = (sqrt L − sqrt mu)/(sqrt L + sqrt mu) and their
/// published companions (alpha = sqrt(mu/L), gamma = mu for form I, theta =
/// 1 − beta and gamma = 1/L for Auslender–Teboulle, eta = theta L with
/// tau = (1−theta)/theta and alpha = 1−theta for Lan). The Bregman AGM gets
/// the rate-tuned setting eta = sqrt(mu L), tau = L/eta, alpha = tau/(1+tau);
/// the proximal-point family gets eta = sqrt(mu L), tau = 1/eta, alpha = 1.
/// Heavy ball gets its tuned constants, beta as above and step gamma =
/// 4/(sqrt L + sqrt mu)^2.
pub fn default_params(form: Form, mu: f64, l: f64) -> Result<HyperParams> {
    check_constants(mu, l)?;
    let (sm, sl) = (mu.sqrt(), l.sqrt());
    let beta = (sl - sm) / (sl + sm);
    let theta = 1.0 - beta;
    let eta_geo = (mu * l).sqrt();
    let mut p = HyperParams {
        mu,
        l,
        eta: eta_geo,
        tau: l / eta_geo,
        alpha: (mu / l).sqrt(),
        beta,
        gamma: mu,
        theta,
    };
    match form {
        Form::NesterovFormI
        | Form::NesterovFormII
        | Form::Sutskever
        | Form::ModernMomentum => {}
        Form::AuslenderTeboulle => p.gamma = 1.0 / l,
        Form::Lan => {
            p.eta = theta * l;
            p.tau = (1.0 - theta) / theta;
            p.alpha = 1.0 - theta;
            p.gamma = 1.0 / l;
        }
        Form::BregmanAgm => p.alpha = p.tau / (1.0 + p.tau),
        Form::ProxPoint | Form::PrimalDualPp | Form::InertialPp => {
            p.tau = 1.0 / eta_geo;
            p.alpha = 1.0;
        }
        Form::HeavyBall => p.gamma = 4.0 / (sl + sm).powi(2),
    }
    Ok(p)
}

/// Constants under which all seven momentum forms generate the *same*
/// trajectory (used by the equivalence suite). Identical to
/// [`default_params`] except that the Bregman AGM shares Lan's constants
/// eta = theta L, tau = (1−theta)/theta, alpha = 1−theta — the unique
/// setting of its (eta, tau, alpha) that reproduces the other forms
/// step-for-step. The rate-tuned default (eta = sqrt(mu L), tau = L/eta,
/// alpha = tau/(1+tau)) is a *different* method with its own decay factor
/// of roughly 1 − sqrt(mu/L)/2.
pub fn matched_params(form: Form, mu: f64, l: f64) -> Result<HyperParams> {
    if form == Form::BregmanAgm {
        let mut p = default_params(Form::Lan, mu, l)?;
        p.gamma = mu;
        Ok(p)
    } else {
        default_params(form, mu, l)
    }
}

/// Momentum and step size for the tuned heavy-ball iteration:
/// beta = (sqrt L − sqrt mu)/(sqrt L + sqrt mu), step = 4/(sqrt L + sqrt mu)^2.
pub fn heavy_ball_tuned_constants(mu: f64, l: f64) -> Result<(f64, f64)> {
    check_constants(mu, l)?;
    let (sm, sl) = (mu.sqrt(), l.sqrt());
    Ok(((sl - sm) / (sl + sm), 4.0 / (sl + sm).powi(2)))
}

/// Heavy-ball constants induced by the alpha = 0 reduction of the Bregman
/// AGM: momentum beta = tau/(1+tau), step (1−beta)/eta.
pub fn heavy_ball_from_reduction(eta: f64, tau: f64) -> (f64, f64) {
    let beta = tau / (1.0 + tau);
    (beta, (1.0 - beta) / eta)
}

/// One form's iterate tuple. Vector names follow each method's published
/// presentation; `g` entries always hold the most recent gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum MethodState {
    NesterovFormI {
        x: DVector<f64>,
        v: DVector<f64>,
        y: DVector<f64>,
    },
    #[serde(rename = "nesterov_form_ii")]
    NesterovFormII {
        x: DVector<f64>,
        x_prev: DVector<f64>,
        y: DVector<f64>,
    },
    Sutskever {
        x: DVector<f64>,
        p: DVector<f64>,
    },
    ModernMomentum {
        x: DVector<f64>,
        p: DVector<f64>,
    },
    AuslenderTeboulle {
        x_hat: DVector<f64>,
        z: DVector<f64>,
        y: DVector<f64>,
    },
    Lan {
        x: DVector<f64>,
        x_prev: DVector<f64>,
        /// The point the gradient was last evaluated at.
        x_md: DVector<f64>,
    },
    BregmanAgm {
        x: DVector<f64>,
        y: DVector<f64>,
        g: DVector<f64>,
    },
    ProxPoint {
        x: DVector<f64>,
    },
    PrimalDualPp {
        x: DVector<f64>,
        g: DVector<f64>,
    },
    InertialPp {
        z: DVector<f64>,
        g: DVector<f64>,
    },
    HeavyBall {
        y: DVector<f64>,
        y_prev: DVector<f64>,
    },
}

impl MethodState {
    pub fn form(&self) -> Form {
        match self {
            MethodState::NesterovFormI { .. } => Form::NesterovFormI,
            MethodState::NesterovFormII { .. } => Form::NesterovFormII,
            MethodState::Sutskever { .. } => Form::Sutskever,
            MethodState::ModernMomentum { .. } => Form::ModernMomentum,
            MethodState::AuslenderTeboulle { .. } => Form::AuslenderTeboulle,
            MethodState::Lan { .. } => Form::Lan,
            MethodState::BregmanAgm { .. } => Form::BregmanAgm,
            MethodState::ProxPoint { .. } => Form::ProxPoint,
            MethodState::PrimalDualPp { .. } => Form::PrimalDualPp,
            MethodState::InertialPp { .. } => Form::InertialPp,
            MethodState::HeavyBall { .. } => Form::HeavyBall,
        }
    }

    /// The iterate whose convergence the trajectory tracks.
    pub fn position(&self) -> &DVector<f64> {
        match self {
            MethodState::NesterovFormI { x, .. }
            | MethodState::NesterovFormII { x, .. }
            | MethodState::Sutskever { x, .. }
            | MethodState::ModernMomentum { x, .. }
            | MethodState::Lan { x, .. }
            | MethodState::BregmanAgm { x, .. }
            | MethodState::ProxPoint { x }
            | MethodState::PrimalDualPp { x, .. } => x,
            MethodState::AuslenderTeboulle { x_hat, .. } => x_hat,
            MethodState::InertialPp { z, .. } => z,
            MethodState::HeavyBall { y, .. } => y,
        }
    }

    /// Named vector components in a fixed order (for serialization).
    pub fn components(&self) -> Vec<(&'static str, &DVector<f64>)> {
        match self {
            MethodState::NesterovFormI { x, v, y } => vec![("x", x), ("v", v), ("y", y)],
            MethodState::NesterovFormII { x, x_prev, y } => {
                vec![("x", x), ("x_prev", x_prev), ("y", y)]
            }
            MethodState::Sutskever { x, p } | MethodState::ModernMomentum { x, p } => {
                vec![("x", x), ("p", p)]
            }
            MethodState::AuslenderTeboulle { x_hat, z, y } => {
                vec![("x_hat", x_hat), ("z", z), ("y", y)]
            }
            MethodState::Lan { x, x_prev, x_md } => {
                vec![("x", x), ("x_prev", x_prev), ("x_md", x_md)]
            }
            MethodState::BregmanAgm { x, y, g } => vec![("x", x), ("y", y), ("g", g)],
            MethodState::ProxPoint { x } => vec![("x", x)],
            MethodState::PrimalDualPp { x, g } => vec![("x", x), ("g", g)],
            MethodState::InertialPp { z, g } => vec![("z", z), ("g", g)],
            MethodState::HeavyBall { y, y_prev } => vec![("y", y), ("y_prev", y_prev)],
        }
    }

    pub fn dimension(&self) -> usize {
        self.position().len()
    }
}

/// Standard starting state from a single point x0: companion iterates copy
/// x0, momenta start at zero, gradient slots hold the gradient at x0, and
/// the inertial z absorbs its -(alpha/eta) g shift.
pub fn initial_state(
    form: Form,
    obj: &Objective,
    params: &HyperParams,
    x0: &DVector<f64>,
) -> MethodState {
    let x = x0.clone();
    match form {
        Form::NesterovFormI => MethodState::NesterovFormI {
            x: x.clone(),
            v: x.clone(),
            y: x,
        },
        Form::NesterovFormII => MethodState::NesterovFormII {
            x: x.clone(),
            x_prev: x.clone(),
            y: x,
        },
        Form::Sutskever => MethodState::Sutskever {
            p: DVector::zeros(x.len()),
            x,
        },
        Form::ModernMomentum => MethodState::ModernMomentum {
            p: DVector::zeros(x.len()),
            x,
        },
        Form::AuslenderTeboulle => MethodState::AuslenderTeboulle {
            x_hat: x.clone(),
            z: x.clone(),
            y: x,
        },
        Form::Lan => MethodState::Lan {
            x: x.clone(),
            x_prev: x.clone(),
            x_md: x,
        },
        Form::BregmanAgm => MethodState::BregmanAgm {
            g: obj.gradient(&x),
            y: x.clone(),
            x,
        },
        Form::ProxPoint => MethodState::ProxPoint { x },
        Form::PrimalDualPp => MethodState::PrimalDualPp {
            g: obj.gradient(&x),
            x,
        },
        Form::InertialPp => {
            let g = obj.gradient(&x);
            MethodState::InertialPp {
                z: &x - &g * (params.alpha / params.eta),
                g,
            }
        }
        Form::HeavyBall => MethodState::HeavyBall {
            y: x.clone(),
            y_prev: x,
        },
    }
}

/// Advance any form's state by one iteration.
pub fn step_method(
    obj: &Objective,
    params: &HyperParams,
    state: &MethodState,
) -> Result<MethodState> {
    Ok(match state {
        MethodState::NesterovFormI { x, v, y } => {
            let (x, v, y) = steps::nesterov_form_i_step(obj, params, x, v, y);
            MethodState::NesterovFormI { x, v, y }
        }
        MethodState::NesterovFormII { x, y, .. } => {
            let (x, x_prev, y) = steps::nesterov_form_ii_step(obj, params, x, y);
            MethodState::NesterovFormII { x, x_prev, y }
        }
        MethodState::Sutskever { x, p } => {
            let (x, p) = steps::sutskever_step(obj, params, x, p);
            MethodState::Sutskever { x, p }
        }
        MethodState::ModernMomentum { x, p } => {
            let (x, p) = steps::modern_momentum_step(obj, params, x, p);
            MethodState::ModernMomentum { x, p }
        }
        MethodState::AuslenderTeboulle { x_hat, z, y } => {
            let (x_hat, z, y) = steps::auslender_teboulle_step(obj, params, x_hat, z, y);
            MethodState::AuslenderTeboulle { x_hat, z, y }
        }
        MethodState::Lan { x, x_prev, x_md } => {
            let (x, x_prev, x_md) = steps::lan_step(obj, params, x, x_prev, x_md);
            MethodState::Lan { x, x_prev, x_md }
        }
        MethodState::BregmanAgm { x, y, g } => {
            let (x, y, g) = steps::bregman_agm_step(obj, params, x, y, g);
            MethodState::BregmanAgm { x, y, g }
        }
        MethodState::ProxPoint { x } => MethodState::ProxPoint {
            x: steps::prox_point_step(obj, params.eta, x)?,
        },
        MethodState::PrimalDualPp { x, g } => {
            let (x, g) = steps::primal_dual_pp_step(obj, params.eta, x, g)?;
            MethodState::PrimalDualPp { x, g }
        }
        MethodState::InertialPp { z, g } => {
            let (z, g) = steps::inertial_pp_step(obj, params, z, g)?;
            MethodState::InertialPp { z, g }
        }
        MethodState::HeavyBall { y, y_prev } => {
            let (y, y_prev) = steps::heavy_ball_step(obj, params.beta, params.gamma, y, y_prev);
            MethodState::HeavyBall { y, y_prev }
        }
    })
}

/// One logged iteration: the state *after* step k (index 0 = initial state).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub k: usize,
    pub state: MethodState,
    pub f_value: f64,
    pub grad_norm: f64,
}

/// A full run of one method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub form: Form,
    pub records: Vec<TrajectoryRecord>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn final_record(&self) -> &TrajectoryRecord {
        self.records.last().expect("trajectory has index 0")
    }

    /// Tracked position at iteration k.
    pub fn position(&self, k: usize) -> &DVector<f64> {
        self.records[k].state.position()
    }

    /// CSV with header `k,f,grad_norm,<name>_1..<name>_n,...` where the
    /// names are the form's state components.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,f,grad_norm");
        let first = &self.records[0].state;
        let n = first.dimension();
        for (name, _) in first.components() {
            for j in 1..=n {
                out.push_str(&format!(",{name}_{j}"));
            }
        }
        out.push('\n');
        for rec in &self.records {
            out.push_str(&format!("{},{},{}", rec.k, rec.f_value, rec.grad_norm));
            for (_, vec) in rec.state.components() {
                for v in vec.iter() {
                    out.push_str(&format!(",{v}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Run `form` for `k_max` iterations from x0 with the standard
/// initialization, recording f and the gradient norm at the tracked
/// position each iteration.
pub fn run(
    form: Form,
    obj: &Objective,
    params: &HyperParams,
    x0: &DVector<f64>,
    k_max: usize,
) -> Result<Trajectory> {
    if k_max == 0 {
        return Err(Error::InvalidInput("k_max must be at least 1".into()));
    }
    let mut state = initial_state(form, obj, params, x0);
    let mut records = Vec::with_capacity(k_max + 1);
    let record = |k: usize, state: &MethodState| -> Result<TrajectoryRecord> {
        let pos = state.position();
        let f_value = obj.value(pos);
        let grad_norm = obj.gradient(pos).norm();
        if !f_value.is_finite() || !grad_norm.is_finite() {
            return Err(Error::Divergence { t: k as f64 });
        }
        Ok(TrajectoryRecord {
            k,
            state: state.clone(),
            f_value,
            grad_norm,
        })
    };
    records.push(record(0, &state)?);
    for k in 1..=k_max {
        state = step_method(obj, params, &state)?;
        records.push(record(k, &state)?);
    }
    Ok(Trajectory { form, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::make_quadratic;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn fig_objective() -> Objective {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        make_quadratic(h, DVector::zeros(2)).unwrap()
    }

    #[test]
    fn default_params_frozen_examples() {
        // Condition number 1: everything degenerates cleanly.
        let p = default_params(Form::NesterovFormI, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(p.beta, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.eta, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.alpha, 1.0, epsilon = 1e-15);

        // mu=1, L=4.
        let p = default_params(Form::BregmanAgm, 1.0, 4.0).unwrap();
        assert_abs_diff_eq!(p.beta, 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.eta, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.tau, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.alpha, 2.0 / 3.0, epsilon = 1e-15);

        let p = default_params(Form::ProxPoint, 1.0, 4.0).unwrap();
        assert_abs_diff_eq!(p.tau, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.alpha, 1.0, epsilon = 1e-15);

        let p = default_params(Form::Lan, 1.0, 4.0).unwrap();
        assert_abs_diff_eq!(p.theta, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.eta, 8.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.tau, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(p.alpha, 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn default_params_rejects_bad_constants() {
        assert!(default_params(Form::ProxPoint, 4.0, 1.0).is_err());
        assert!(default_params(Form::ProxPoint, 0.0, 1.0).is_err());
        assert!(default_params(Form::ProxPoint, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn heavy_ball_tuned_constants_frozen() {
        let (beta, step) = heavy_ball_tuned_constants(1.0, 4.0).unwrap();
        assert_abs_diff_eq!(beta, 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(step, 4.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn run_records_are_consecutive_and_match_manual_step() {
        let obj = fig_objective();
        let params = default_params(Form::NesterovFormII, obj.mu(), obj.lipschitz()).unwrap();
        let x0 = DVector::from_vec(vec![1.0, 1.0]);
        let traj = run(Form::NesterovFormII, &obj, &params, &x0, 1).unwrap();
        assert_eq!(traj.len(), 2);
        assert_eq!(traj.records[0].k, 0);
        assert_eq!(traj.records[1].k, 1);

        let manual = step_method(
            &obj,
            &params,
            &initial_state(Form::NesterovFormII, &obj, &params, &x0),
        )
        .unwrap();
        assert_eq!(traj.records[1].state, manual);
    }

    #[test]
    fn run_from_minimizer_stays_stationary() {
        let obj = fig_objective();
        for form in Form::ALL {
            let params = default_params(form, obj.mu(), obj.lipschitz()).unwrap();
            let traj = run(form, &obj, &params, obj.minimizer(), 20).unwrap();
            for rec in &traj.records {
                assert!(
                    rec.grad_norm <= 1e-12,
                    "{form}: gradient norm {:.3e} at k={}",
                    rec.grad_norm,
                    rec.k
                );
            }
        }
    }

    #[test]
    fn all_forms_converge_on_the_figure_quadratic() {
        let obj = fig_objective();
        let x0 = DVector::from_vec(vec![1.0, 1.0]);
        for form in Form::ALL {
            let params = default_params(form, obj.mu(), obj.lipschitz()).unwrap();
            let traj = run(form, &obj, &params, &x0, 500).unwrap();
            let gap = (traj.final_record().state.position() - obj.minimizer()).norm();
            assert!(gap <= 1e-8, "{form} did not converge: gap {gap:.3e}");
        }
    }

    #[test]
    fn trajectory_csv_shape() {
        let obj = fig_objective();
        let params = default_params(Form::BregmanAgm, obj.mu(), obj.lipschitz()).unwrap();
        let x0 = DVector::from_vec(vec![1.0, 1.0]);
        let traj = run(Form::BregmanAgm, &obj, &params, &x0, 100).unwrap();
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next(),
            Some("k,f,grad_norm,x_1,x_2,y_1,y_2,g_1,g_2")
        );
        assert_eq!(lines.count(), 101);
    }

    #[test]
    fn trajectory_json_round_trip() {
        let obj = fig_objective();
        let params = default_params(Form::PrimalDualPp, obj.mu(), obj.lipschitz()).unwrap();
        let x0 = DVector::from_vec(vec![1.0, 1.0]);
        let traj = run(Form::PrimalDualPp, &obj, &params, &x0, 3).unwrap();
        let json = serde_json::to_string(&traj).unwrap();
        let back: Trajectory = serde_json::from_str(&json).unwrap();
        assert_eq!(back.len(), traj.len());
        assert_eq!(back.final_record().state, traj.final_record().state);
    }
}
