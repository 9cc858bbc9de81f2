//! The triple-collision manifold and its dynamics.
//!
//! At r = 0 the regularized flow leaves invariant the two-dimensional
//! surface w^2 + cos^6(theta) v^2/U = 2 cos^3(theta), on which the flow is
//! gradient-like with respect to -v. Six equilibria organize it: a spiral
//! source/sink pair on the planar axis (Q, Q*) and four saddles at the
//! critical angles +-theta_w (E+-, E+-*). Which saddle separatrices connect
//! to the double-collision edges decides how near-collision orbits behave;
//! the connection condition below settles this for large mass ratios.

use nalgebra::{Matrix3, Matrix4};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;

use crate::charts::{self, RegState};
use crate::error::{Error, Result};
use crate::flow::{
    self, dopri5::Dopri5, dopri5::StepResult, dopri5::StepperOpts, Chart, EventKind, EventSpec,
    FieldCtx, IntegrateOpts, RecordMode, Sample, Status, Trajectory,
};
use crate::model::{self, Convention, ModelParams};
use crate::numerics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CmName {
    Q,
    Qstar,
    Eplus,
    Eminus,
    EplusStar,
    EminusStar,
}

impl std::fmt::Display for CmName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CmName::Q => "Q",
            CmName::Qstar => "Qstar",
            CmName::Eplus => "Eplus",
            CmName::Eminus => "Eminus",
            CmName::EplusStar => "EplusStar",
            CmName::EminusStar => "EminusStar",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CmClass {
    SpiralSource,
    SpiralSink,
    Saddle,
}

/// An equilibrium of the collision-manifold flow with its spectral data.
#[derive(Debug, Clone, Serialize)]
pub struct CmEquilibrium {
    pub name: CmName,
    /// Location (r = 0, w = 0, v = +-sqrt(2 W(theta_c))).
    pub state: RegState,
    /// Spectrum of the flow restricted to the tangent space of the energy
    /// constraint, sorted by (re, im). Three values: the saddle/spiral pair
    /// plus one radial-type direction inside the level set.
    #[serde(serialize_with = "ser_complex_vec")]
    pub eigenvalues: Vec<Complex64>,
    /// Eigenvalue of the radial direction d(r')/dr = v cos^3/sqrt(U),
    /// reported separately; +-sqrt(2 cos^3 theta_c) in closed form.
    pub lambda_r: f64,
    pub classification: CmClass,
    /// (dim W_u, dim W_s) counted on the constraint tangent space.
    pub dims: (usize, usize),
}

pub(crate) fn ser_complex_vec<S: serde::Serializer>(
    v: &[Complex64],
    ser: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = ser.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

/// Regularized flow without the energy substitution in the v equation: the
/// raw change of variables from the polar chart, whose restriction to any
/// energy level agrees with the level-specific field. Used for Jacobians so
/// that the constraint itself supplies no spurious coupling.
fn raw_reg_field(params: &ModelParams, c_ang: f64, y: &[f64]) -> Vec<f64> {
    let (r, v, theta, w) = (y[0], y[1], y[2], y[3]);
    let ang = model::eval_angular(params, theta).expect("interior angle");
    let (c, s) = model::cos_sin(theta);
    let (c2, c3) = (c * c, c * c * c);
    let su = ang.u.sqrt();
    let csq = c_ang * c_ang;
    let tan_term = if w == 0.0 { 0.0 } else { 3.0 * s * w * w / c };
    vec![
        r * v * c3 / su,
        1.5 * v * v * c3 / su + w * w * su / c3 + csq * r * c / su
            - r * r * ang.v * c3 / su
            - 3.0 * su,
        w,
        0.5 * v * w * c3 / su + r * r * ang.dv * c3 * c3 / ang.u
            + (ang.du / ang.u) * (c3 - 0.5 * w * w)
            + 3.0 * s * c2
            - csq * r * s * c3 / ang.u
            - tan_term,
    ]
}

/// How the tangent basis of the energy constraint is built at a collision
/// equilibrium. With C = 0 the constraint gradient points along v and the
/// coordinate directions (r, theta, w) span the tangent space; with C != 0
/// the gradient tilts into the (r, v) plane and the basis must rotate with
/// it. Both must produce the same spectrum wherever both apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangentBasis {
    Coordinate,
    ConstraintAdapted,
}

/// Spectrum of the raw regularized field restricted to the constraint
/// tangent space at a collision equilibrium, plus the radial eigenvalue.
pub fn restricted_spectrum(
    params: &ModelParams,
    c_ang: f64,
    state: &RegState,
    basis: TangentBasis,
) -> Result<(Vec<Complex64>, f64)> {
    if basis == TangentBasis::Coordinate && c_ang != 0.0 {
        return Err(Error::Domain(
            "coordinate tangent basis is only valid at C = 0".into(),
        ));
    }
    let x = [state.r, state.v, state.theta, state.w];
    let jac = numerics::fd_jacobian(|y| raw_reg_field(params, c_ang, y), &x, 1e-4);
    let j = Matrix4::from_fn(|i, k| jac[i][k]);

    // Gradient of the energy relation at an equilibrium (r = 0, w = 0,
    // critical angle): (C^2 c^4, 2 v c^6, 0, 0).
    let c = model::cos_sin(state.theta).0;
    let s_cols: [nalgebra::Vector4<f64>; 3] = match basis {
        TangentBasis::Coordinate => [
            nalgebra::Vector4::new(1.0, 0.0, 0.0, 0.0),
            nalgebra::Vector4::new(0.0, 0.0, 1.0, 0.0),
            nalgebra::Vector4::new(0.0, 0.0, 0.0, 1.0),
        ],
        TangentBasis::ConstraintAdapted => {
            let f_r = c_ang * c_ang * c.powi(4);
            let f_v = 2.0 * state.v * c.powi(6);
            let n = f_r.hypot(f_v);
            [
                nalgebra::Vector4::new(f_v / n, -f_r / n, 0.0, 0.0),
                nalgebra::Vector4::new(0.0, 0.0, 1.0, 0.0),
                nalgebra::Vector4::new(0.0, 0.0, 0.0, 1.0),
            ]
        }
    };
    let mut rest = Matrix3::zeros();
    for (col, sc) in s_cols.iter().enumerate() {
        let img = j * sc;
        for (row, sr) in s_cols.iter().enumerate() {
            rest[(row, col)] = sr.dot(&img);
        }
    }
    let mut eig: Vec<Complex64> = rest.complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok((eig, j[(0, 0)]))
}

/// The six equilibria of the collision-manifold flow with numerically
/// computed spectra (closed forms are checked against these in the test
/// suite; the numerical result is authoritative).
pub fn cm_equilibria(params: &ModelParams, c_ang: f64) -> Result<Vec<CmEquilibrium>> {
    let dc = model::derive(params)?;
    let theta_w = dc.theta_w.ok_or_else(|| {
        Error::Regime("no interior critical angle theta_w: mu <= 1 + B/(16 B1)".into())
    })?;
    let v_of = |theta: f64| -> Result<f64> {
        Ok((2.0 * model::eval_angular(params, theta)?.w).sqrt())
    };
    let v_q = v_of(0.0)?;
    let v_e = v_of(theta_w)?;
    let table: [(CmName, f64, f64); 6] = [
        (CmName::Q, 0.0, v_q),
        (CmName::Qstar, 0.0, -v_q),
        (CmName::Eplus, theta_w, v_e),
        (CmName::Eminus, -theta_w, v_e),
        (CmName::EplusStar, theta_w, -v_e),
        (CmName::EminusStar, -theta_w, -v_e),
    ];

    table
        .iter()
        .map(|&(name, theta, v)| {
            let state = RegState {
                r: 0.0,
                v,
                theta,
                w: 0.0,
            };
            let basis = if c_ang == 0.0 {
                TangentBasis::Coordinate
            } else {
                TangentBasis::ConstraintAdapted
            };
            let (eigenvalues, lambda_r) = restricted_spectrum(params, c_ang, &state, basis)?;
            let scale = eigenvalues
                .iter()
                .map(|e| e.norm())
                .fold(0.0_f64, f64::max);
            let spiral = eigenvalues.iter().any(|e| e.im.abs() > 1e-8 * scale);
            let n_unstable = eigenvalues.iter().filter(|e| e.re > 0.0).count();
            let n_stable = eigenvalues.iter().filter(|e| e.re < 0.0).count();
            let classification = if spiral {
                if v > 0.0 {
                    CmClass::SpiralSource
                } else {
                    CmClass::SpiralSink
                }
            } else {
                CmClass::Saddle
            };
            Ok(CmEquilibrium {
                name,
                state,
                eigenvalues,
                lambda_r,
                classification,
                dims: (n_unstable, n_stable),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceBranch {
    WPos,
    WNeg,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceClass {
    /// Fell into the upper double-collision edge theta -> +pi/2, v -> -inf.
    BPlus0,
    /// Fell into the lower edge theta -> -pi/2.
    BMinus0,
    /// Entered the basin of the spiral sink.
    Qstar,
    /// Passed close to another saddle.
    SaddleConnection(CmName),
    Undetermined,
}

#[derive(Debug, Clone)]
pub struct TraceOpts {
    /// Offset along the unstable eigenvector, in (1e-10, 1e-4).
    pub eps: f64,
    /// "v -> -inf" proxy: v < -k_factor * sqrt(2 W(0)).
    pub k_factor: f64,
    /// ... together with |theta| > pi/2 - ray_window.
    pub ray_window: f64,
    /// Proximity radius for Q* and saddle-connection classification.
    pub prox: f64,
    /// Budget in the evolution parameter sigma.
    pub sigma_max: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Re-run at eps/10 and require the same classification.
    pub confirm: bool,
}

impl Default for TraceOpts {
    fn default() -> Self {
        TraceOpts {
            eps: 1e-7,
            k_factor: 5.0,
            ray_window: 0.05,
            prox: 0.05,
            sigma_max: 200.0,
            rtol: 1e-10,
            atol: 1e-12,
            confirm: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceOutcome {
    pub class: TraceClass,
    pub trajectory: Trajectory,
    /// Classification of the eps/10 control trace, when requested.
    pub confirm_class: Option<TraceClass>,
}

/// Shoots the unstable manifold of a collision-manifold saddle.
///
/// Offsets `eps` along the unstable eigenvector of the on-manifold
/// linearization, oriented into the requested w half-space, and follows the
/// collision flow until it commits to a double-collision edge, the spiral
/// sink, or another saddle.
pub fn trace_manifold(
    params: &ModelParams,
    eq: &CmEquilibrium,
    branch: TraceBranch,
    opts: &TraceOpts,
) -> Result<TraceOutcome> {
    if eq.classification != CmClass::Saddle {
        return Err(Error::Domain(format!(
            "{} is not a saddle; only saddles have 1D unstable manifolds on the surface",
            eq.name
        )));
    }
    if !(opts.eps > 1e-10 && opts.eps < 1e-4) {
        return Err(Error::Domain(format!(
            "eps = {} outside (1e-10, 1e-4)",
            opts.eps
        )));
    }
    let others = cm_equilibria(params, 0.0)?;
    let direction = unstable_direction(params, eq, branch)?;
    let run = |eps: f64| -> Result<(TraceClass, Trajectory)> {
        let x0 = [
            eq.state.v + eps * direction[0],
            eq.state.theta + eps * direction[1],
            eq.state.w + eps * direction[2],
        ];
        trace_run(params, eq.name, &others, &x0, opts)
    };
    let (class, trajectory) = run(opts.eps)?;
    let confirm_class = if opts.confirm {
        Some(run(opts.eps / 10.0)?.0)
    } else {
        None
    };
    Ok(TraceOutcome {
        class,
        trajectory,
        confirm_class,
    })
}

/// Unit unstable eigenvector of the collision-flow Jacobian at a saddle,
/// oriented into the requested w half-space.
fn unstable_direction(
    params: &ModelParams,
    eq: &CmEquilibrium,
    branch: TraceBranch,
) -> Result<[f64; 3]> {
    let ctx = FieldCtx::new(params, Convention::OverM, 0.0, 0.0)?;
    let field = |y: &[f64]| {
        let mut dy = vec![0.0; 3];
        ctx.collision(y, &mut dy);
        dy
    };
    let x = [eq.state.v, eq.state.theta, eq.state.w];
    let jac = numerics::fd_jacobian(field, &x, 1e-4);
    let j = Matrix3::from_fn(|i, k| jac[i][k]);
    let eig = j.complex_eigenvalues();
    // The tangent saddle eigenvalue is the largest positive real one.
    let lambda = eig
        .iter()
        .filter(|e| e.im.abs() < 1e-8 * e.re.abs() && e.re > 0.0)
        .map(|e| e.re)
        .fold(f64::NAN, f64::max);
    if !lambda.is_finite() {
        return Err(Error::Domain(format!(
            "no positive real eigenvalue at {}",
            eq.name
        )));
    }
    // Null vector of (J - lambda I) from the smallest singular direction.
    let shifted = j - Matrix3::identity() * lambda;
    let svd = shifted.svd(true, true);
    let v_t = svd.v_t.expect("svd vectors requested");
    let mut dir = [v_t[(2, 0)], v_t[(2, 1)], v_t[(2, 2)]];
    let want_pos = branch == TraceBranch::WPos;
    if dir[2] == 0.0 {
        return Err(Error::Domain(
            "unstable eigenvector has no w component; cannot orient by branch".into(),
        ));
    }
    if (dir[2] > 0.0) != want_pos {
        for d in &mut dir {
            *d = -*d;
        }
    }
    Ok(dir)
}

fn trace_run(
    params: &ModelParams,
    from: CmName,
    equilibria: &[CmEquilibrium],
    x0: &[f64; 3],
    opts: &TraceOpts,
) -> Result<(TraceClass, Trajectory)> {
    let dc = model::derive(params)?;
    let v_deep = -opts.k_factor * (2.0 * dc.w0).sqrt();
    let ctx = FieldCtx::new(params, Convention::OverM, 0.0, 0.0)?;
    let field = |t: f64, y: &[f64], dy: &mut [f64]| ctx.eval(Chart::Collision, t, y, dy);
    let mut stepper = Dopri5::new(
        field,
        0.0,
        x0,
        opts.sigma_max,
        StepperOpts {
            rtol: opts.rtol,
            atol: opts.atol,
            h_max: f64::INFINITY,
        },
    );

    let mut samples = vec![Sample {
        param: 0.0,
        state: x0.to_vec(),
    }];
    let mut stats = flow::IntegStats::default();
    let track_residual = |stats: &mut flow::IntegStats, y: &[f64]| {
        let res = charts::residual_collision(
            params,
            &RegState {
                r: 0.0,
                v: y[0],
                theta: y[1],
                w: y[2],
            },
        )
        .unwrap_or(f64::NAN);
        stats.max_residual = stats.max_residual.max(res.abs());
    };
    track_residual(&mut stats, x0);

    let mut class = TraceClass::Undetermined;
    let mut status = Status::CompletedSpan;
    while !stepper.finished() {
        match stepper.step() {
            StepResult::Accepted => {}
            StepResult::Underflow => {
                status = Status::StepUnderflow;
                break;
            }
            StepResult::Finished => break,
        }
        let y = stepper.y().to_vec();
        track_residual(&mut stats, &y);
        samples.push(Sample {
            param: stepper.t(),
            state: y.clone(),
        });
        let (v, theta, w) = (y[0], y[1], y[2]);
        if v < v_deep && FRAC_PI_2 - theta.abs() < opts.ray_window {
            class = if theta > 0.0 {
                TraceClass::BPlus0
            } else {
                TraceClass::BMinus0
            };
            break;
        }
        let mut found = None;
        for other in equilibria {
            if other.name == from {
                continue;
            }
            let d = ((v - other.state.v).powi(2)
                + (theta - other.state.theta).powi(2)
                + (w - other.state.w).powi(2))
            .sqrt();
            if d < opts.prox {
                found = Some(other.name);
                break;
            }
        }
        if let Some(name) = found {
            class = if name == CmName::Qstar {
                TraceClass::Qstar
            } else {
                TraceClass::SaddleConnection(name)
            };
            break;
        }
        if theta.abs() > FRAC_PI_2 {
            break;
        }
    }
    stats.n_accept = stepper.n_accept;
    stats.n_reject = stepper.n_reject;
    stats.n_fev = stepper.n_fev;
    Ok((
        class,
        Trajectory {
            chart: Chart::Collision,
            c_ang: 0.0,
            h: 0.0,
            samples,
            events: vec![],
            status,
            stats,
        },
    ))
}

/// Double-collision connection criterion.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConnectionReport {
    /// sqrt(W(0)/2).
    pub lhs: f64,
    /// sqrt(2 W(theta_w)) / theta_w.
    pub rhs: f64,
    /// lhs <= rhs, evaluated directly from W.
    pub cond_up_holds: bool,
    /// The same condition rewritten purely through mu and gamma = 16 B1/B.
    pub cond_param_holds: bool,
    pub agree: bool,
}

/// Evaluates whether the profile solution through the origin stays above
/// the saddle corner, both directly (compare sqrt(W(0)/2) against
/// sqrt(2 W(theta_w))/theta_w) and in its parameter-only reformulation.
pub fn connection_condition(params: &ModelParams) -> Result<ConnectionReport> {
    let dc = model::derive(params)?;
    let theta_w = dc.theta_w.ok_or_else(|| {
        Error::Regime("no interior critical angle theta_w: mu <= 1 + B/(16 B1)".into())
    })?;
    let w_at = model::eval_angular(params, theta_w)?.w;
    let lhs = (dc.w0 / 2.0).sqrt();
    let rhs = (2.0 * w_at).sqrt() / theta_w;

    // Parameter-only form: with x = theta_w * sqrt(W(0)/(2 W(theta_w))) the
    // condition reads x <= 1; expressed through mu and gamma via
    // cos^2(theta_w) = mu/((mu-1) + ((mu-1) gamma)^{2/5}) and the ratio
    // W(0)/W(theta_w).
    let mu = dc.mu;
    let gamma = dc.gamma;
    let g = gamma.powf(0.4) / (mu - 1.0).powf(0.6);
    let x = (4.0 / (1.0 + gamma)).sqrt() * (1.0 - 1.0 / mu).powf(0.75) * (1.0 + g).powf(1.25);
    let cond_param = x.cos().powi(2) <= 1.0 / ((1.0 - 1.0 / mu) * (1.0 + g));

    let cond_up = lhs <= rhs;
    Ok(ConnectionReport {
        lhs,
        rhs,
        cond_up_holds: cond_up,
        cond_param_holds: cond_param,
        agree: cond_up == cond_param,
    })
}

/// Monotonicity audit of v along a collision-manifold trajectory.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GradientAudit {
    /// v non-increasing up to integrator tolerance (1e-9).
    pub monotone: bool,
    /// Largest positive increment of v between consecutive samples.
    pub max_violation: f64,
}

pub fn gradient_like_audit(traj: &Trajectory) -> Result<GradientAudit> {
    if traj.chart != Chart::Collision {
        return Err(Error::Domain(
            "gradient-like audit applies to collision-chart trajectories".into(),
        ));
    }
    let mut max_violation: f64 = 0.0;
    for pair in traj.samples.windows(2) {
        let forward = pair[1].param >= pair[0].param;
        let dv = if forward {
            pair[1].state[0] - pair[0].state[0]
        } else {
            pair[0].state[0] - pair[1].state[0]
        };
        max_violation = max_violation.max(dv);
    }
    Ok(GradientAudit {
        monotone: max_violation <= 1e-9,
        max_violation,
    })
}

/// Integrates the profile equation dv/dtheta = -sqrt((W - v^2/2)/2) forward
/// from (0, v_at_zero) until the curve meets the boundary v^2 = 2 W(theta)
/// or theta reaches pi/2.
pub fn profile_curve(params: &ModelParams, v_at_zero: f64) -> Result<Trajectory> {
    let dc = model::derive(params)?;
    if !(v_at_zero.abs() < (2.0 * dc.w0).sqrt()) {
        return Err(Error::Domain(format!(
            "|v(0)| = {} not below sqrt(2 W(0)) = {}",
            v_at_zero.abs(),
            (2.0 * dc.w0).sqrt()
        )));
    }
    flow::integrate(
        params,
        Convention::OverM,
        Chart::Profile,
        0.0,
        0.0,
        &[v_at_zero],
        (0.0, FRAC_PI_2 - 1e-6),
        &[EventSpec::halt_when(EventKind::ProfileBoundary, -1)],
        &IntegrateOpts {
            record: RecordMode::All,
            ..Default::default()
        },
    )
}
