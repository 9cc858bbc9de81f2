//! Vector fields for every chart, event-aware integration, and trajectory
//! records.
//!
//! Independent variables differ by chart: physical time t in the cylindrical
//! chart, the collision-rescaled parameter tau in the polar and planar
//! charts, the double-collision parameter sigma in the regularized and
//! collision-manifold charts, and the angle theta for the profile equation.

pub mod dopri5;

use serde::Serialize;
use std::f64::consts::FRAC_PI_2;

use crate::charts::{self, CylState, McGeheeState, RegState};
use crate::error::{Error, Result};
use crate::model::{self, Convention, ModelParams};
use dopri5::{Dopri5, StepResult, StepperOpts};

/// Chart selector. `dim` states per chart:
/// Reduced [R, z, P_R, P_z]; McGehee [r, v, theta, u];
/// Regularized [r, v, theta, w]; Collision [v, theta, w];
/// Planar [r, v]; Profile [v].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    Reduced,
    McGehee,
    Regularized,
    Collision,
    Planar,
    Profile,
}

impl Chart {
    pub fn dim(self) -> usize {
        match self {
            Chart::Reduced | Chart::McGehee | Chart::Regularized => 4,
            Chart::Collision => 3,
            Chart::Planar => 2,
            Chart::Profile => 1,
        }
    }
}

/// Precomputed coefficients shared by all field evaluations.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FieldCtx {
    pub params: ModelParams,
    pub mu: f64,
    /// sqrt(M/2).
    pub sq: f64,
    /// (M/2)^{3/2}.
    pub cb: f64,
    pub c_ang: f64,
    /// Mechanical energy level (only the regularized field needs it).
    pub h: f64,
    pub v0: f64,
    pub w0: f64,
}

impl FieldCtx {
    pub fn new(params: &ModelParams, conv: Convention, c_ang: f64, h: f64) -> Result<Self> {
        let dc = model::derive(params)?;
        let half_m = 0.5 * params.M;
        Ok(FieldCtx {
            params: *params,
            mu: dc.mu,
            sq: half_m.sqrt(),
            cb: half_m.powf(1.5),
            c_ang,
            h: charts::physical_h(params, conv, h),
            v0: dc.v0,
            w0: dc.w0,
        })
    }

    /// d/dt of [R, z, P_R, P_z] under the reduced Hamiltonian.
    pub fn reduced(&self, y: &[f64], dy: &mut [f64]) {
        let p = &self.params;
        let (r, z, pr, pz) = (y[0], y[1], y[2], y[3]);
        let rho = r * r + 4.0 * z * z;
        let (r32, r52) = (rho.powf(1.5), rho.powf(2.5));
        dy[0] = 2.0 * pr / p.M;
        dy[1] = (2.0 * p.M + p.m) / (2.0 * p.M * p.m) * pz;
        dy[2] = 2.0 * self.c_ang * self.c_ang / (p.M * r.powi(3))
            - p.A / (r * r)
            - 3.0 * p.B / r.powi(4)
            - 4.0 * p.A1 * r / r32
            - 48.0 * p.B1 * r / r52;
        dy[3] = -(16.0 * p.A1 * z / r32 + 192.0 * p.B1 * z / r52);
    }

    /// d/dtau of [r, v, theta, u]; valid away from theta = +-pi/2.
    pub fn mcgehee(&self, y: &[f64], dy: &mut [f64]) {
        let p = &self.params;
        let (r, v, theta, u) = (y[0], y[1], y[2], y[3]);
        let (c, s) = model::cos_sin(theta);
        let pp = c * c + self.mu * s * s;
        let v_ang = self.sq * (p.A / c + 4.0 * p.A1 / pp.sqrt());
        let w_ang = self.cb * (p.B / c.powi(3) + 16.0 * p.B1 / pp.powf(1.5));
        let dv_ang = self.sq
            * (p.A * s / (c * c) - 4.0 * p.A1 * (self.mu - 1.0) * s * c / pp.powf(1.5));
        let dw_ang = self.cb
            * (3.0 * p.B * s / c.powi(4)
                - 48.0 * p.B1 * (self.mu - 1.0) * s * c / pp.powf(2.5));
        let csq = self.c_ang * self.c_ang;
        dy[0] = r * v;
        dy[1] = 1.5 * v * v + u * u + csq * r / (c * c) - r * r * v_ang - 3.0 * w_ang;
        dy[2] = u;
        dy[3] = 0.5 * u * v - csq * r * s / c.powi(3) + r * r * dv_ang + dw_ang;
    }

    /// d/dsigma of [r, v, theta, w], regular on the whole closed strip.
    ///
    /// Energy has been substituted into the v equation, so the field is
    /// specific to the level h. All angular combinations are written in the
    /// forms that stay finite at theta = +-pi/2 (U, V cos^3, V' cos^6).
    pub fn regularized(&self, y: &[f64], dy: &mut [f64]) {
        let p = &self.params;
        let (r, v, theta, w) = (y[0], y[1], y[2], y[3]);
        let (c, s) = model::cos_sin(theta);
        let pp = c * c + self.mu * s * s;
        let c2 = c * c;
        let c3 = c2 * c;
        let u_ang = self.cb * (p.B + 16.0 * p.B1 * c3 / pp.powf(1.5));
        let du_ang = -48.0 * p.B1 * self.mu * self.cb * s * c2 / pp.powf(2.5);
        let vc3 = self.sq * (p.A * c2 + 4.0 * p.A1 * c3 / pp.sqrt());
        let dvc6 = self.sq
            * (p.A * s * c2 * c2
                - 4.0 * p.A1 * (self.mu - 1.0) * s * c3 * c2 * c2 / pp.powf(1.5));
        let su = u_ang.sqrt();
        let csq = self.c_ang * self.c_ang;
        dy[0] = r * v * c3 / su;
        dy[1] = 0.5 * c3 * v * v / su - su + r * r * (2.0 * self.h * r * c3 + vc3) / su;
        dy[2] = w;
        let tan_term = if w == 0.0 { 0.0 } else { 3.0 * s * w * w / c };
        dy[3] = 0.5 * v * w * c3 / su
            + r * r * dvc6 / u_ang
            + (du_ang / u_ang) * (c3 - 0.5 * w * w)
            + 3.0 * s * c2
            - csq * r * s * c3 / u_ang
            - tan_term;
    }

    /// d/dsigma of [v, theta, w] on the triple-collision manifold r = 0.
    pub fn collision(&self, y: &[f64], dy: &mut [f64]) {
        let p = &self.params;
        let (v, theta, w) = (y[0], y[1], y[2]);
        let (c, s) = model::cos_sin(theta);
        let pp = c * c + self.mu * s * s;
        let c2 = c * c;
        let c3 = c2 * c;
        let u_ang = self.cb * (p.B + 16.0 * p.B1 * c3 / pp.powf(1.5));
        let du_ang = -48.0 * p.B1 * self.mu * self.cb * s * c2 / pp.powf(2.5);
        let su = u_ang.sqrt();
        dy[0] = 0.5 * c3 * v * v / su - su;
        dy[1] = w;
        let tan_term = if w == 0.0 { 0.0 } else { 3.0 * s * w * w / c };
        dy[2] = 0.5 * v * w * c3 / su + (du_ang / u_ang) * (c3 - 0.5 * w * w) + 3.0 * s * c2
            - tan_term;
    }

    /// d/dtau of [r, v] on the planar invariant set theta = 0, u = 0.
    pub fn planar(&self, y: &[f64], dy: &mut [f64]) {
        let (r, v) = (y[0], y[1]);
        dy[0] = r * v;
        dy[1] = 1.5 * v * v + self.c_ang * self.c_ang * r - r * r * self.v0 - 3.0 * self.w0;
    }

    /// dv/dtheta of the profile equation v' = -sqrt((W - v^2/2)/2).
    ///
    /// The radicand is clamped at zero; integrations stop it at the boundary
    /// W = v^2/2 with an event.
    pub fn profile(&self, theta: f64, y: &[f64], dy: &mut [f64]) {
        let p = &self.params;
        let (c, s) = model::cos_sin(theta);
        let pp = c * c + self.mu * s * s;
        let w_ang = self.cb * (p.B / c.powi(3) + 16.0 * p.B1 / pp.powf(1.5));
        dy[0] = -((w_ang - 0.5 * y[0] * y[0]).max(0.0) * 0.5).sqrt();
    }

    pub fn eval(&self, chart: Chart, t: f64, y: &[f64], dy: &mut [f64]) {
        match chart {
            Chart::Reduced => self.reduced(y, dy),
            Chart::McGehee => self.mcgehee(y, dy),
            Chart::Regularized => self.regularized(y, dy),
            Chart::Collision => self.collision(y, dy),
            Chart::Planar => self.planar(y, dy),
            Chart::Profile => self.profile(t, y, dy),
        }
    }
}

/// Right-hand side of the chart's evolution equation at a single state.
///
/// `h` enters only the regularized chart (whose v equation carries the
/// energy substitution); it is interpreted under `conv`.
pub fn vector_field(
    params: &ModelParams,
    conv: Convention,
    chart: Chart,
    c_ang: f64,
    h: f64,
    state: &[f64],
) -> Result<Vec<f64>> {
    if state.len() != chart.dim() {
        return Err(Error::Domain(format!(
            "{chart:?} expects {} state components, got {}",
            chart.dim(),
            state.len()
        )));
    }
    let ctx = FieldCtx::new(params, conv, c_ang, h)?;
    match chart {
        Chart::Reduced if !(state[0] > 0.0) => {
            return Err(Error::Domain(format!("R = {} must be positive", state[0])));
        }
        Chart::McGehee if FRAC_PI_2 - state[2].abs() < charts::THETA_MARGIN => {
            return Err(Error::Domain(format!(
                "theta = {} too close to a double-collision ray for the polar chart",
                state[2]
            )));
        }
        Chart::Regularized | Chart::Collision => {
            let theta = if chart == Chart::Regularized {
                state[2]
            } else {
                state[1]
            };
            if !(theta.abs() <= FRAC_PI_2) {
                return Err(Error::Domain(format!(
                    "theta = {theta} outside [-pi/2, pi/2]"
                )));
            }
        }
        _ => {}
    }
    let mut dy = vec![0.0; state.len()];
    ctx.eval(chart, 0.0, state, &mut dy);
    Ok(dy)
}

/// Built-in event functions. `direction` restricts to sign changes of the
/// given orientation (-1: positive to negative, +1: the reverse, 0: any);
/// `halt` stops the integration at the localized crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    /// r (or R) falls to the threshold.
    RBelow(f64),
    /// r (or R) grows to the threshold.
    RAbove(f64),
    /// v falls to the threshold (radial momentum in the reduced chart).
    VBelow(f64),
    /// pi/2 - |theta| falls to the margin.
    ThetaNearRay(f64),
    /// theta (or z) crosses zero: the orbit crosses the planar set.
    PlaneCrossing,
    /// Profile radicand W - v^2/2 vanishes.
    ProfileBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventSpec {
    pub kind: EventKind,
    pub direction: i8,
    pub halt: bool,
}

impl EventSpec {
    pub fn halt_when(kind: EventKind, direction: i8) -> Self {
        EventSpec {
            kind,
            direction,
            halt: true,
        }
    }

    pub fn record_when(kind: EventKind, direction: i8) -> Self {
        EventSpec {
            kind,
            direction,
            halt: false,
        }
    }
}

fn event_value(ctx: &FieldCtx, chart: Chart, kind: EventKind, t: f64, y: &[f64]) -> Result<f64> {
    let radial = || -> Result<f64> {
        match chart {
            Chart::Reduced => {
                let s = CylState {
                    R: y[0],
                    z: y[1],
                    P_R: y[2],
                    P_z: y[3],
                };
                Ok(charts::cyl_to_mcgehee(&ctx.params, &s)?.r)
            }
            Chart::McGehee | Chart::Regularized | Chart::Planar => Ok(y[0]),
            Chart::Collision | Chart::Profile => Err(Error::Domain(
                "no radial coordinate in this chart".into(),
            )),
        }
    };
    match kind {
        EventKind::RBelow(th) | EventKind::RAbove(th) => Ok(radial()? - th),
        EventKind::VBelow(th) => match chart {
            Chart::Reduced => {
                let s = CylState {
                    R: y[0],
                    z: y[1],
                    P_R: y[2],
                    P_z: y[3],
                };
                Ok(charts::cyl_to_mcgehee(&ctx.params, &s)?.v - th)
            }
            Chart::McGehee | Chart::Regularized | Chart::Planar => Ok(y[1] - th),
            Chart::Collision => Ok(y[0] - th),
            Chart::Profile => Ok(y[0] - th),
        },
        EventKind::ThetaNearRay(margin) => {
            let theta = match chart {
                Chart::Reduced => {
                    let s = CylState {
                        R: y[0],
                        z: y[1],
                        P_R: y[2],
                        P_z: y[3],
                    };
                    charts::cyl_to_mcgehee(&ctx.params, &s)?.theta
                }
                Chart::McGehee | Chart::Regularized => y[2],
                Chart::Collision => y[1],
                Chart::Planar | Chart::Profile => {
                    return Err(Error::Domain("no theta in this chart".into()))
                }
            };
            Ok(FRAC_PI_2 - theta.abs() - margin)
        }
        EventKind::PlaneCrossing => match chart {
            Chart::Reduced => Ok(y[1]),
            Chart::McGehee | Chart::Regularized => Ok(y[2]),
            Chart::Collision => Ok(y[1]),
            Chart::Planar | Chart::Profile => {
                Err(Error::Domain("no plane crossing in this chart".into()))
            }
        },
        EventKind::ProfileBoundary => match chart {
            Chart::Profile => {
                let ang = model::eval_angular(&ctx.params, t.clamp(-FRAC_PI_2, FRAC_PI_2))?;
                Ok(ang.w - 0.5 * y[0] * y[0])
            }
            _ => Err(Error::Domain("profile boundary needs the profile chart".into())),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RecordMode {
    /// Keep every accepted step.
    All,
    /// Keep every n-th accepted step (endpoints always kept).
    Stride(usize),
    /// Keep only the endpoints.
    EndpointsOnly,
}

#[derive(Debug, Clone)]
pub struct IntegrateOpts {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: u64,
    pub h_max: f64,
    pub record: RecordMode,
}

impl Default for IntegrateOpts {
    fn default() -> Self {
        IntegrateOpts {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 10_000_000,
            h_max: f64::INFINITY,
            record: RecordMode::All,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Reached the end of the requested span.
    CompletedSpan,
    /// Stopped by the halting event with this index.
    Halted(usize),
    /// Step budget exhausted.
    MaxSteps,
    /// Step size underflowed; the flow could not be continued.
    StepUnderflow,
}

#[derive(Debug, Clone, Serialize)]
pub struct EventHit {
    /// Value of the chart's evolution parameter at the crossing.
    pub param: f64,
    pub state: Vec<f64>,
    /// Index into the event list passed to `integrate`.
    pub index: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct IntegStats {
    pub n_accept: u64,
    pub n_reject: u64,
    pub n_fev: u64,
    /// Largest energy-relation residual seen across accepted steps.
    pub max_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Sample {
    pub param: f64,
    pub state: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub chart: Chart,
    pub c_ang: f64,
    /// Energy level as given by the caller (in the caller's convention).
    pub h: f64,
    pub samples: Vec<Sample>,
    pub events: Vec<EventHit>,
    pub status: Status,
    pub stats: IntegStats,
}

impl Trajectory {
    pub fn last_state(&self) -> &[f64] {
        &self.samples.last().expect("trajectory has samples").state
    }

    pub fn last_param(&self) -> f64 {
        self.samples.last().expect("trajectory has samples").param
    }
}

/// Integrates the chart's flow over `span`, localizing event crossings on
/// the dense output to 1e-12 in the evolution parameter.
///
/// The energy residual of every accepted step is folded into
/// `stats.max_residual`: it audits, on the fly, that the integration stayed
/// on its invariant set.
pub fn integrate(
    params: &ModelParams,
    conv: Convention,
    chart: Chart,
    c_ang: f64,
    h: f64,
    y0: &[f64],
    span: (f64, f64),
    events: &[EventSpec],
    opts: &IntegrateOpts,
) -> Result<Trajectory> {
    if y0.len() != chart.dim() {
        return Err(Error::Domain(format!(
            "{chart:?} expects {} state components, got {}",
            chart.dim(),
            y0.len()
        )));
    }
    let ctx = FieldCtx::new(params, conv, c_ang, h)?;
    let field = |t: f64, y: &[f64], dy: &mut [f64]| ctx.eval(chart, t, y, dy);
    let sopts = StepperOpts {
        rtol: opts.rtol,
        atol: opts.atol,
        h_max: opts.h_max,
    };
    let mut stepper = Dopri5::new(field, span.0, y0, span.1, sopts);

    let residual_of = |t: f64, y: &[f64]| -> f64 { residual(&ctx, conv, chart, h, t, y) };
    let mut samples = vec![Sample {
        param: span.0,
        state: y0.to_vec(),
    }];
    let mut hits: Vec<EventHit> = Vec::new();
    let mut stats = IntegStats {
        max_residual: residual_of(span.0, y0).abs(),
        ..Default::default()
    };

    let mut g_old: Vec<f64> = Vec::with_capacity(events.len());
    for ev in events {
        g_old.push(event_value(&ctx, chart, ev.kind, span.0, y0)?);
    }

    let mut status = Status::CompletedSpan;
    let mut steps: u64 = 0;
    'outer: while !stepper.finished() {
        if steps >= opts.max_steps {
            status = Status::MaxSteps;
            break;
        }
        match stepper.step() {
            StepResult::Accepted => {}
            StepResult::Underflow => {
                status = Status::StepUnderflow;
                break;
            }
            StepResult::Finished => break,
        }
        steps += 1;
        let (t, y) = (stepper.t(), stepper.y());
        stats.max_residual = stats.max_residual.max(residual_of(t, y).abs());

        // Event scan on this step.
        let mut halt_at: Option<(f64, usize)> = None;
        let mut recorded: Vec<(f64, usize)> = Vec::new();
        for (i, ev) in events.iter().enumerate() {
            let g_new = event_value(&ctx, chart, ev.kind, t, y)?;
            let crossed = g_old[i] != 0.0
                && (g_old[i] < 0.0) != (g_new < 0.0)
                && match ev.direction {
                    d if d > 0 => g_new > g_old[i],
                    d if d < 0 => g_new < g_old[i],
                    _ => true,
                };
            if crossed {
                let t_star = locate(&ctx, chart, ev.kind, &stepper, stepper.t_old(), t, g_old[i])?;
                if ev.halt {
                    if halt_at.map_or(true, |(tb, _)| (t_star - tb) * (t - stepper.t_old()) < 0.0)
                    {
                        halt_at = Some((t_star, i));
                    }
                } else {
                    recorded.push((t_star, i));
                }
            }
            g_old[i] = g_new;
        }
        for (t_star, i) in recorded {
            if halt_at.map_or(true, |(tb, _)| (t_star - tb) * (t - stepper.t_old()) <= 0.0) {
                let mut ys = vec![0.0; y0.len()];
                stepper.dense(t_star, &mut ys);
                hits.push(EventHit {
                    param: t_star,
                    state: ys,
                    index: i,
                });
            }
        }
        if let Some((t_star, i)) = halt_at {
            let mut ys = vec![0.0; y0.len()];
            stepper.dense(t_star, &mut ys);
            hits.push(EventHit {
                param: t_star,
                state: ys.clone(),
                index: i,
            });
            samples.push(Sample {
                param: t_star,
                state: ys,
            });
            status = Status::Halted(i);
            break 'outer;
        }

        let keep = match opts.record {
            RecordMode::All => true,
            RecordMode::Stride(n) => steps % n.max(1) as u64 == 0,
            RecordMode::EndpointsOnly => false,
        };
        if keep || stepper.finished() {
            samples.push(Sample {
                param: t,
                state: y.to_vec(),
            });
        }
    }

    if !matches!(status, Status::Halted(_)) {
        let (t, y) = (stepper.t(), stepper.y());
        if samples.last().map_or(true, |s| s.param != t) {
            samples.push(Sample {
                param: t,
                state: y.to_vec(),
            });
        }
    }
    stats.n_accept = stepper.n_accept;
    stats.n_reject = stepper.n_reject;
    stats.n_fev = stepper.n_fev;
    Ok(Trajectory {
        chart,
        c_ang,
        h,
        samples,
        events: hits,
        status,
        stats,
    })
}

/// Energy-relation residual for the chart (collision chart: the manifold
/// relation; profile chart: zero, it has no conserved quantity).
fn residual(ctx: &FieldCtx, conv: Convention, chart: Chart, h: f64, _t: f64, y: &[f64]) -> f64 {
    let p = &ctx.params;
    match chart {
        Chart::Reduced => charts::residual_cyl(
            p,
            conv,
            ctx.c_ang,
            h,
            &CylState {
                R: y[0],
                z: y[1],
                P_R: y[2],
                P_z: y[3],
            },
        )
        .unwrap_or(f64::NAN),
        Chart::McGehee => charts::residual_mcgehee(
            p,
            conv,
            ctx.c_ang,
            h,
            &McGeheeState {
                r: y[0],
                v: y[1],
                theta: y[2],
                u: y[3],
            },
        )
        .unwrap_or(f64::NAN),
        Chart::Regularized => charts::residual_reg(
            p,
            conv,
            ctx.c_ang,
            h,
            &RegState {
                r: y[0],
                v: y[1],
                theta: y[2],
                w: y[3],
            },
        )
        .unwrap_or(f64::NAN),
        Chart::Collision => charts::residual_collision(
            p,
            &RegState {
                r: 0.0,
                v: y[0],
                theta: y[1],
                w: y[2],
            },
        )
        .unwrap_or(f64::NAN),
        Chart::Planar => {
            charts::residual_planar(p, conv, ctx.c_ang, h, y[0], y[1]).unwrap_or(f64::NAN)
        }
        Chart::Profile => 0.0,
    }
}

/// Bisects the dense output for the event zero inside [t_lo, t_hi].
fn locate<F: FnMut(f64, &[f64], &mut [f64])>(
    ctx: &FieldCtx,
    chart: Chart,
    kind: EventKind,
    stepper: &Dopri5<F>,
    t_lo: f64,
    t_hi: f64,
    g_lo: f64,
) -> Result<f64> {
    let mut buf = vec![0.0; stepper.y().len()];
    let (mut a, mut b) = (t_lo, t_hi);
    let mut ga = g_lo;
    let tol = 1e-12 * t_hi.abs().max(1.0);
    while (b - a).abs() > tol {
        let mid = 0.5 * (a + b);
        stepper.dense(mid, &mut buf);
        let gm = event_value(ctx, chart, kind, mid, &buf)?;
        if gm == 0.0 {
            return Ok(mid);
        }
        if (ga < 0.0) != (gm < 0.0) {
            b = mid;
        } else {
            a = mid;
            ga = gm;
        }
    }
    Ok(0.5 * (a + b))
}
