//! Continuous-time counterparts of the discrete methods: the proximal-point
//! ODE, the accelerated-gradient ODE (same system with the dual-geometry
//! coordinate change on the g block), and the heavy-ball ODE, integrated by
//! classical RK4 or by the block-implicit Euler scheme whose h = 1 step is
//! the discrete Bregman AGM.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::discrete::HyperParams;
use crate::error::{Error, Result};
use crate::objectives::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OdeKind {
    ProxPoint,
    Agm,
    HeavyBall,
}

impl OdeKind {
    pub fn name(&self) -> &'static str {
        match self {
            OdeKind::ProxPoint => "prox_point",
            OdeKind::Agm => "agm",
            OdeKind::HeavyBall => "heavy_ball",
        }
    }

    /// Names of the two state blocks, in storage order.
    pub fn block_names(&self) -> (&'static str, &'static str) {
        match self {
            OdeKind::ProxPoint | OdeKind::Agm => ("z", "g"),
            OdeKind::HeavyBall => ("x", "p"),
        }
    }
}

impl std::fmt::Display for OdeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One of the three flows, bundled with its objective and constants.
/// State is a stacked 2n-vector: [z; g] for the proximal/AGM systems,
/// [x; p] for heavy ball. The fixed point is [x*; 0] in both layouts.
#[derive(Clone)]
pub struct OdeSystem {
    pub kind: OdeKind,
    pub params: HyperParams,
    obj: Objective,
    u_star: DVector<f64>,
}

impl OdeSystem {
    pub fn new(kind: OdeKind, obj: Objective, params: HyperParams) -> Result<Self> {
        if kind == OdeKind::HeavyBall && !obj.is_quadratic() {
            return Err(Error::Unsupported(
                "the heavy-ball flow is defined for quadratic objectives".into(),
            ));
        }
        if params.eta <= 0.0 || params.tau <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "eta and tau must be positive, got eta={}, tau={}",
                params.eta, params.tau
            )));
        }
        let n = obj.dimension();
        let mut u_star = DVector::zeros(2 * n);
        u_star.rows_mut(0, n).copy_from(obj.minimizer());
        Ok(OdeSystem {
            kind,
            obj,
            params,
            u_star,
        })
    }

    pub fn dimension(&self) -> usize {
        self.obj.dimension()
    }

    pub fn objective(&self) -> &Objective {
        &self.obj
    }

    pub fn fixed_point(&self) -> &DVector<f64> {
        &self.u_star
    }

    /// Time derivative of the stacked state.
    pub fn rhs(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.dimension();
        if u.len() != 2 * n {
            return Err(Error::InvalidInput(format!(
                "state has length {}, expected {}",
                u.len(),
                2 * n
            )));
        }
        let p = &self.params;
        let a = u.rows(0, n).into_owned();
        let b = u.rows(n, n).into_owned();
        let (da, db) = match self.kind {
            // z' = -(1/eta) g - (alpha/eta) g'; g' = -(1/tau)(grad f*(g) - z).
            OdeKind::ProxPoint => {
                let y = self.obj.conjugate_gradient(&b)?;
                let dg = (&a - y) / p.tau;
                let dz = -&b / p.eta - &dg * (p.alpha / p.eta);
                (dz, dg)
            }
            // Same flow with the g-block velocity read in dual tangent
            // coordinates: g' = hess f(grad f*(g)) [-(1/tau)(grad f*(g) - z)].
            OdeKind::Agm => {
                let y = self.obj.conjugate_gradient(&b)?;
                let v = (&a - &y) / p.tau;
                let dg = self.obj.hessian(&y) * v;
                let dz = -&b / p.eta - &dg * (p.alpha / p.eta);
                (dz, dg)
            }
            // x' = p; p' = -(1-beta) p - gamma grad f(x).
            OdeKind::HeavyBall => {
                let dp = -&b * (1.0 - p.beta) - self.obj.gradient(&a) * p.gamma;
                (b.clone(), dp)
            }
        };
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&da);
        out.rows_mut(n, n).copy_from(&db);
        Ok(out)
    }
}

/// Conservative default step: dt = 0.01 · min(tau, 1/eta).
pub fn default_dt(params: &HyperParams) -> f64 {
    0.01 * params.tau.min(1.0 / params.eta)
}

/// A sampled solution on a uniform time grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuousTrajectory {
    pub kind: OdeKind,
    pub dt: f64,
    pub integrator: String,
    pub samples: Vec<(f64, DVector<f64>)>,
}

impl ContinuousTrajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn final_state(&self) -> &DVector<f64> {
        &self.samples[self.samples.len() - 1].1
    }

    /// CSV with header `t,z_1..z_n,g_1..g_n` (or `t,x_...,p_...`).
    pub fn to_csv(&self) -> String {
        let n = self.samples[0].1.len() / 2;
        let (a, b) = self.kind.block_names();
        let mut out = String::from("t");
        for j in 1..=n {
            out.push_str(&format!(",{a}_{j}"));
        }
        for j in 1..=n {
            out.push_str(&format!(",{b}_{j}"));
        }
        out.push('\n');
        for (t, u) in &self.samples {
            out.push_str(&format!("{t}"));
            for v in u.iter() {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

fn check_finite(u: &DVector<f64>, t: f64) -> Result<()> {
    if u.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence { t })
    }
}

/// Classical fourth-order Runge–Kutta on a uniform grid covering [0, t_max].
pub fn integrate_rk4(
    sys: &OdeSystem,
    u0: &DVector<f64>,
    dt: f64,
    t_max: f64,
) -> Result<ContinuousTrajectory> {
    if dt <= 0.0 || t_max <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "need dt > 0 and t_max > 0, got dt={dt}, t_max={t_max}"
        )));
    }
    let p = &sys.params;
    if dt > 0.1 * p.tau || dt > 0.1 / p.eta {
        return Err(Error::InvalidParams(format!(
            "dt={dt} too coarse for tau={}, eta={} (limit 0.1*min(tau, 1/eta))",
            p.tau, p.eta
        )));
    }
    let steps = (t_max / dt).ceil() as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    let mut u = u0.clone();
    check_finite(&u, 0.0)?;
    samples.push((0.0, u.clone()));
    for i in 1..=steps {
        let k1 = sys.rhs(&u)?;
        let k2 = sys.rhs(&(&u + &k1 * (dt / 2.0)))?;
        let k3 = sys.rhs(&(&u + &k2 * (dt / 2.0)))?;
        let k4 = sys.rhs(&(&u + &k3 * dt))?;
        u += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        let t = i as f64 * dt;
        check_finite(&u, t)?;
        samples.push((t, u.clone()));
    }
    Ok(ContinuousTrajectory {
        kind: sys.kind,
        dt,
        integrator: "rk4".into(),
        samples,
    })
}

/// One block-implicit Euler step of the AGM flow: the g block is advanced
/// implicitly (the proximal solve in the flat dual geometry, closed-form in
/// y = grad f*(g)), then z explicitly with the new g and the difference
/// quotient for g'. At h = 1 this is exactly one discrete Bregman AGM step
/// expressed in (z, g) variables.
pub fn block_implicit_euler_step(
    sys: &OdeSystem,
    u: &DVector<f64>,
    h: f64,
) -> Result<DVector<f64>> {
    if sys.kind != OdeKind::Agm {
        return Err(Error::Unsupported(
            "the block-implicit scheme targets the accelerated-gradient flow".into(),
        ));
    }
    if h <= 0.0 {
        return Err(Error::InvalidParams(format!("need h > 0, got {h}")));
    }
    let n = sys.dimension();
    if u.len() != 2 * n {
        return Err(Error::InvalidInput(format!(
            "state has length {}, expected {}",
            u.len(),
            2 * n
        )));
    }
    let p = &sys.params;
    let z = u.rows(0, n).into_owned();
    let g_old = u.rows(n, n).into_owned();
    // (y_new - y_old)/h = -(1/tau)(y_new - z) with y = grad f*(g).
    let y_old = sys.obj.conjugate_gradient(&g_old)?;
    let y_new = (y_old * p.tau + &z * h) / (p.tau + h);
    let g_new = sys.obj.gradient(&y_new);
    let z_new = &z - &g_new * (h / p.eta) - (&g_new - &g_old) * (p.alpha / p.eta);
    let mut out = DVector::zeros(2 * n);
    out.rows_mut(0, n).copy_from(&z_new);
    out.rows_mut(n, n).copy_from(&g_new);
    Ok(out)
}

/// Iterate the block-implicit scheme; sample i sits at t = i·h.
pub fn integrate_implicit_euler(
    sys: &OdeSystem,
    u0: &DVector<f64>,
    h: f64,
    steps: usize,
) -> Result<ContinuousTrajectory> {
    let mut samples = Vec::with_capacity(steps + 1);
    let mut u = u0.clone();
    check_finite(&u, 0.0)?;
    samples.push((0.0, u.clone()));
    for i in 1..=steps {
        u = block_implicit_euler_step(sys, &u, h)?;
        let t = i as f64 * h;
        check_finite(&u, t)?;
        samples.push((t, u.clone()));
    }
    Ok(ContinuousTrajectory {
        kind: sys.kind,
        dt: h,
        integrator: "block_implicit_euler".into(),
        samples,
    })
}

/// Decay rate fitted to a trajectory.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecayEstimate {
    /// Largest rho such that |u(t)-u*| <= exp(-rho t)|u(0)-u*| at every
    /// sample past the burn-in.
    pub rho: f64,
    /// False when the trajectory fails to contract (rho <= 0).
    pub decaying: bool,
}

/// Fraction of the horizon excluded from the decay fit (avoids the t -> 0
/// limit, where the ratio is uninformative).
pub const DECAY_BURN_IN: f64 = 0.05;

pub fn decay_rate_estimate(traj: &ContinuousTrajectory, u_star: &DVector<f64>) -> DecayEstimate {
    let r0 = (&traj.samples[0].1 - u_star).norm();
    let t_max = traj.samples[traj.samples.len() - 1].0;
    if r0 == 0.0 || t_max <= 0.0 {
        return DecayEstimate {
            rho: 0.0,
            decaying: false,
        };
    }
    let mut rho = f64::INFINITY;
    for (t, u) in &traj.samples {
        if *t <= DECAY_BURN_IN * t_max {
            continue;
        }
        let r = (u - u_star).norm() / r0;
        let bound = if r <= 0.0 {
            f64::INFINITY
        } else {
            -r.ln() / t
        };
        rho = rho.min(bound);
    }
    if !rho.is_finite() {
        // Reached the fixed point exactly: any rate certifies.
        return DecayEstimate {
            rho: f64::INFINITY,
            decaying: true,
        };
    }
    DecayEstimate {
        rho,
        decaying: rho > 0.0,
    }
}

/// Worst ratio of |u(t)-u*| against the envelope exp(-rho t)|u(0)-u*|;
/// a value <= 1 + slack means the envelope holds at every sample.
pub fn envelope_max_ratio(
    traj: &ContinuousTrajectory,
    u_star: &DVector<f64>,
    rho: f64,
) -> f64 {
    let r0 = (&traj.samples[0].1 - u_star).norm();
    if r0 == 0.0 {
        return 0.0;
    }
    traj.samples
        .iter()
        .map(|(t, u)| (u - u_star).norm() / (r0 * (-rho * t).exp()))
        .fold(0.0, f64::max)
}
