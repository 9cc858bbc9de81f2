//! Planar motions, homographic admissibility and orbit-fate classification.
//!
//! The planar set theta = 0, w = 0 carries all homographic solutions of the
//! model; `homographic_admissible` certifies that no other constant-shape
//! motion exists. `classify_fate` integrates a general initial condition
//! with chart switching and decides between triple collision (through the
//! funnels at Q*, E+-* or the ray endpoints), double collision at positive
//! radius, escape, and recurrent bounded motion, while accumulating the
//! azimuthal winding that makes the small angular momentum levels behave
//! like black holes.

use std::collections::VecDeque;
use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charts::{self, CylState, RegState};
use crate::error::{Error, Result};
use crate::flow::dopri5::{Dopri5, StepResult, StepperOpts};
use crate::flow::{Chart, FieldCtx};
use crate::manifold::ser_complex_vec;
use crate::model::{self, Convention, ModelParams};

/// One sample of a planar phase curve v(r) = sqrt(2hr^3 + 2V(0)r^2 - C^2 r
/// + 2W(0)). `v` is the non-negative branch; the curve is symmetric under
/// v -> -v. None marks radii where the level set is empty.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurvePoint {
    pub r: f64,
    pub v: Option<f64>,
}

/// Samples the planar energy level at `n` radii spanning `r_range`.
///
/// Curves for every (C, h) funnel into v = +-sqrt(2 W(0)) as r -> 0; for
/// h < 0 the radicand turns negative at large r and the curve is bounded.
pub fn planar_curve(
    params: &ModelParams,
    conv: Convention,
    c_ang: f64,
    h: f64,
    r_range: (f64, f64),
    n: usize,
) -> Result<Vec<CurvePoint>> {
    let dc = model::derive(params)?;
    let h = charts::physical_h(params, conv, h);
    if !(r_range.0 > 0.0 && r_range.1 > r_range.0) || n < 2 {
        return Err(Error::Domain(format!(
            "need 0 < r_min < r_max and n >= 2, got ({}, {}) with n = {n}",
            r_range.0, r_range.1
        )));
    }
    let step = (r_range.1 - r_range.0) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| {
            let r = r_range.0 + step * i as f64;
            let rad = 2.0 * h * r.powi(3) + 2.0 * dc.v0 * r * r - c_ang * c_ang * r
                + 2.0 * dc.w0;
            CurvePoint {
                r,
                v: (rad >= 0.0).then(|| rad.sqrt()),
            }
        })
        .collect())
}

/// Phase-portrait case of the planar system, split by the angular momentum
/// against C0 and by the sign of the energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanarCase {
    /// C < C0, h < 0: every orbit ejects from and falls back into triple
    /// collision; for C > 0 these are the black-hole orbits.
    #[serde(rename = "A_a")]
    Aa,
    /// C < C0, h >= 0: every orbit is unbounded.
    #[serde(rename = "A_b")]
    Ab,
    /// C = C0: the fold case with a single degenerate rest point.
    #[serde(rename = "B_case")]
    BCase,
    /// C > C0, h < 0.
    #[serde(rename = "C_a")]
    Ca,
    /// C > C0, h >= 0.
    #[serde(rename = "C_b")]
    Cb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanarKind {
    Saddle,
    Center,
    Degenerate,
}

/// Rest point of the planar system with its linearized spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct PlanarPoint {
    pub r: f64,
    pub kind: PlanarKind,
    #[serde(serialize_with = "ser_complex_vec")]
    pub eigenvalues: Vec<Complex64>,
}

/// Planar regime at one angular momentum level: the case label (when an
/// energy is supplied) and the rest points with their types.
#[derive(Debug, Clone, Serialize)]
pub struct PlanarRegime {
    pub case: Option<PlanarCase>,
    pub equilibria: Vec<PlanarPoint>,
}

/// Rest points of the planar system at angular momentum `c_ang`, with the
/// case label when `h` is given (the a/b split depends on the energy sign,
/// which no convention factor can change).
///
/// Roots of V(0) r^2 - C^2 r + 3 W(0): none for C < C0, one degenerate
/// point at C = C0, and for C > C0 a saddle r1 below a center r2. The
/// 2x2 linearization [[0, r], [C^2 - 2 r V(0), 0]] supplies the spectra.
pub fn planar_equilibria(
    params: &ModelParams,
    c_ang: f64,
    h: Option<f64>,
) -> Result<PlanarRegime> {
    if c_ang < 0.0 {
        return Err(Error::Domain(format!("c_ang = {c_ang} must be >= 0")));
    }
    let dc = model::derive(params)?;
    let c0p4 = dc.c0.powi(4);
    let disc = c_ang.powi(4) - c0p4;
    let tol = 1e-12 * c0p4;

    let point = |r: f64| -> PlanarPoint {
        // d(r')/dv = r and d(v')/dr = C^2 - 2 r V(0); the diagonal vanishes
        // since v = 0 at a rest point.
        let prod = r * (c_ang * c_ang - 2.0 * r * dc.v0);
        if prod.abs() <= 1e-10 * (1.0 + r * c_ang * c_ang) {
            PlanarPoint {
                r,
                kind: PlanarKind::Degenerate,
                eigenvalues: vec![Complex64::new(0.0, 0.0); 2],
            }
        } else if prod > 0.0 {
            let l = prod.sqrt();
            PlanarPoint {
                r,
                kind: PlanarKind::Saddle,
                eigenvalues: vec![Complex64::new(-l, 0.0), Complex64::new(l, 0.0)],
            }
        } else {
            let l = (-prod).sqrt();
            PlanarPoint {
                r,
                kind: PlanarKind::Center,
                eigenvalues: vec![Complex64::new(0.0, -l), Complex64::new(0.0, l)],
            }
        }
    };

    let (case_lo, case_hi, equilibria) = if disc.abs() <= tol {
        let pts = vec![point(c_ang * c_ang / (2.0 * dc.v0))];
        (PlanarCase::BCase, PlanarCase::BCase, pts)
    } else if disc < 0.0 {
        (PlanarCase::Aa, PlanarCase::Ab, Vec::new())
    } else {
        let s = disc.sqrt();
        let pts = vec![
            point((c_ang * c_ang - s) / (2.0 * dc.v0)),
            point((c_ang * c_ang + s) / (2.0 * dc.v0)),
        ];
        (PlanarCase::Ca, PlanarCase::Cb, pts)
    };
    let case = h.map(|h| if h < 0.0 { case_lo } else { case_hi });
    Ok(PlanarRegime { case, equilibria })
}

/// Positive radii where the planar radicand 2hr^3 + 2V(0)r^2 - C^2 r
/// + 2W(0) vanishes, sorted ascending. For h < 0 the largest root is the
/// turning point of the bounded orbits.
pub fn planar_turning_points(
    params: &ModelParams,
    conv: Convention,
    c_ang: f64,
    h: f64,
) -> Result<Vec<f64>> {
    let dc = model::derive(params)?;
    let h = charts::physical_h(params, conv, h);
    let g = |r: f64| {
        2.0 * h * r.powi(3) + 2.0 * dc.v0 * r * r - c_ang * c_ang * r + 2.0 * dc.w0
    };
    // g is a cubic (quadratic at h = 0): split (0, inf) at the critical
    // points of g and bisect each monotone piece that changes sign. The
    // Cauchy bound caps every root, so the last piece can be truncated.
    let r_far = if h == 0.0 {
        1.0 + (c_ang * c_ang).max(2.0 * dc.w0) / (2.0 * dc.v0)
    } else {
        1.0 + (2.0 * dc.v0).max(c_ang * c_ang).max(2.0 * dc.w0) / (2.0 * h.abs())
    };
    let mut cuts = vec![0.0];
    if h == 0.0 {
        let rc = c_ang * c_ang / (4.0 * dc.v0);
        if rc > 0.0 && rc < r_far {
            cuts.push(rc);
        }
    } else {
        // Roots of g' = 6 h r^2 + 4 V(0) r - C^2.
        let disc = 4.0 * dc.v0 * dc.v0 + 6.0 * h * c_ang * c_ang;
        if disc >= 0.0 {
            for rc in [
                (-2.0 * dc.v0 - disc.sqrt()) / (6.0 * h),
                (-2.0 * dc.v0 + disc.sqrt()) / (6.0 * h),
            ] {
                if rc > 0.0 && rc < r_far {
                    cuts.push(rc);
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.push(r_far);
    let mut roots = Vec::new();
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (ga, gb) = (g(a), g(b));
        if ga == 0.0 && a > 0.0 {
            roots.push(a);
        } else if ga * gb < 0.0 {
            roots.push(crate::numerics::bisect_root(&g, a, b, 1e-15 * r_far));
        }
    }
    roots.retain(|&r| r > 0.0);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * r_far);
    Ok(roots)
}

/// Case of the homographic classification a constant-angle solution falls
/// into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HomographicCase {
    /// theta0 = 0: the shape equation holds identically and the motion is
    /// planar; this is the only admissible case.
    #[serde(rename = "planar")]
    Planar,
    /// theta0 = +-theta_v with C = 0: requires W'(theta_v) = 0, excluded by
    /// genericity.
    #[serde(rename = "theta_v_C0")]
    ThetaVC0,
    /// theta0 = +-theta_v with C != 0: the forced radius satisfies r0^2 < 0.
    #[serde(rename = "theta_v_Cnonzero")]
    ThetaVCnonzero,
    /// Any other interior angle: the coefficient matching V'/V = tan(theta)
    /// = W'/(3W) has no solution.
    #[serde(rename = "generic_theta")]
    GenericTheta,
}

/// Verdict on whether a constant-shape (homographic) solution can sit at
/// the angle theta0, with the numeric obstruction as witness.
#[derive(Debug, Clone, Serialize)]
pub struct HomographicReport {
    pub admissible: bool,
    pub case: HomographicCase,
    /// Planar: 0. theta_v with C = 0: the value W'(theta0) that would have
    /// to vanish. theta_v with C != 0: the forced r0^2 (negative). Generic:
    /// the largest mismatch in the coefficient-matching conditions.
    pub witness: f64,
    pub detail: String,
}

/// Decides whether a motion of constant shape angle theta0 is possible at
/// angular momentum `c_ang`. Only theta0 = 0 survives; the report carries
/// the obstruction for every other angle.
pub fn homographic_admissible(
    params: &ModelParams,
    c_ang: f64,
    theta0: f64,
) -> Result<HomographicReport> {
    let dc = model::derive(params)?;
    if !(theta0.abs() < FRAC_PI_2) {
        return Err(Error::Domain(format!(
            "theta0 = {theta0} outside (-pi/2, pi/2)"
        )));
    }
    if theta0.abs() <= 1e-12 {
        return Ok(HomographicReport {
            admissible: true,
            case: HomographicCase::Planar,
            witness: 0.0,
            detail: "shape equation holds identically; the motion is planar".into(),
        });
    }
    let ang = model::eval_angular(params, theta0)?;
    let (c, s) = model::cos_sin(theta0);
    if dc
        .theta_v
        .is_some_and(|tv| (theta0.abs() - tv).abs() <= 1e-9)
    {
        if c_ang.abs() <= 1e-12 {
            return Ok(HomographicReport {
                admissible: false,
                case: HomographicCase::ThetaVC0,
                witness: ang.dw,
                detail: "requires W'(theta_v) = 0, excluded by genericity".into(),
            });
        }
        // Eliminating C^2 between the shape and radial equations forces
        // r0^2 = (W/V) cot(theta) (W'/W - 3 tan(theta)), which is negative
        // for mu > 1; the expression is even in theta0.
        let r0_sq = ang.w / ang.v * (c / s) * (ang.dw / ang.w - 3.0 * s / c);
        return Ok(HomographicReport {
            admissible: false,
            case: HomographicCase::ThetaVCnonzero,
            witness: r0_sq,
            detail: "forced squared radius is negative".into(),
        });
    }
    let t = s / c;
    let witness = (ang.dv / ang.v - t).abs().max((ang.dw / (3.0 * ang.w) - t).abs());
    Ok(HomographicReport {
        admissible: false,
        case: HomographicCase::GenericTheta,
        witness,
        detail: "coefficient matching V'/V = tan(theta) = W'/(3W) fails".into(),
    })
}

/// True iff 2 r^2 V(0) < C^2/2 and v < 0: inside this region the radial
/// coordinate and v both keep decreasing, so the orbit can only end in a
/// double collision at positive radius or reach triple collision.
pub fn sink_predicate(params: &ModelParams, c_ang: f64, state: &RegState) -> Result<bool> {
    let dc = model::derive(params)?;
    Ok(2.0 * state.r * state.r * dc.v0 < 0.5 * c_ang * c_ang && state.v < 0.0)
}

/// Terminal behaviour of an orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fate {
    /// Triple collision through the spiral funnel at Q* (theta oscillating
    /// or pinned to the planar set).
    #[serde(rename = "triple_collision_Qstar")]
    TripleCollisionQstar,
    /// Triple collision along the stable set of E+* or E-*, theta pinned
    /// near +-theta_w.
    #[serde(rename = "triple_collision_Estar")]
    TripleCollisionEstar,
    /// Triple collision with theta pinned at a double-collision ray: the
    /// orbit is asymptotic to B+(0) or B-(0).
    #[serde(rename = "triple_collision_Bpm0")]
    TripleCollisionBpm0,
    /// Binary collision at positive radius: asymptotic to B+-(r) with
    /// r > 0 recorded in `double_r`.
    #[serde(rename = "double_collision_Bpm_r")]
    DoubleCollisionBpmR,
    #[serde(rename = "escape")]
    Escape,
    #[serde(rename = "bounded")]
    Bounded,
    #[serde(rename = "undetermined")]
    Undetermined,
}

impl std::fmt::Display for Fate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Fate::TripleCollisionQstar => "triple_collision_Qstar",
            Fate::TripleCollisionEstar => "triple_collision_Estar",
            Fate::TripleCollisionBpm0 => "triple_collision_Bpm0",
            Fate::DoubleCollisionBpmR => "double_collision_Bpm_r",
            Fate::Escape => "escape",
            Fate::Bounded => "bounded",
            Fate::Undetermined => "undetermined",
        };
        f.write_str(s)
    }
}

/// Why the classification loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// A terminal criterion fired.
    Detection,
    /// The accepted-step budget ran out.
    Budget,
    /// The step size underflowed (or a chart conversion broke down).
    Underflow,
}

/// Integrator-facing diagnostics attached to a fate report.
#[derive(Debug, Clone, Serialize)]
pub struct FateDiagnostics {
    /// Evolution parameter at the stop, counted within the final chart
    /// segment (physical time in the reduced chart, the regularized
    /// parameter otherwise).
    pub terminal_param: f64,
    pub terminal_chart: Chart,
    pub terminal_state: RegState,
    /// Largest energy-relation residual across all accepted steps.
    pub max_residual: f64,
    /// Total accepted steps across chart segments.
    pub steps: u64,
    pub stop: StopReason,
    /// Largest increase of r between consecutive accepted steps (0 on a
    /// monotone trajectory).
    pub r_max_increase: f64,
    /// Largest increase of v between consecutive accepted steps.
    pub v_max_increase: f64,
    /// Plane crossings recorded at radii within a factor 10 of the
    /// terminal radius.
    pub crossings_last_decade: u64,
}

/// Fate of one orbit with the funnel data: limiting shape angle, azimuthal
/// winding and plane-crossing count.
#[derive(Debug, Clone, Serialize)]
pub struct FateReport {
    pub fate: Fate,
    /// Time average of theta over the terminal decade of r; None when the
    /// orbit does not end at a collision.
    pub limiting_theta: Option<f64>,
    /// Total azimuthal angle accumulated against each chart's own
    /// evolution parameter. Diverges logarithmically toward collisions for
    /// C != 0 and is exactly 0 for C = 0.
    pub winding: f64,
    /// Sign changes of theta (crossings of the planar set).
    pub plane_crossings: u64,
    /// Radius of the double collision for `double_collision_Bpm_r`.
    pub double_r: Option<f64>,
    pub diagnostics: FateDiagnostics,
}

/// Thresholds and budgets of the fate classifier. Radius thresholds
/// stated as factors are relative to the initial radius.
#[derive(Debug, Clone)]
pub struct ClassifyOpts {
    pub rtol: f64,
    pub atol: f64,
    /// Accepted-step budget across all chart segments.
    pub budget: u64,
    /// Triple collision fires at r below this with v below
    /// -triple_v_frac sqrt(2 W(0)).
    pub triple_r: f64,
    pub triple_v_frac: f64,
    /// Double collision fires at |theta| > pi/2 - double_theta with
    /// |w| < double_w and r > double_r_min.
    pub double_theta: f64,
    pub double_w: f64,
    pub double_r_min: f64,
    /// Escape fires at r > escape_factor * r_init with v > 0.
    pub escape_factor: f64,
    /// Switch from the reduced to the regularized chart when r drops below
    /// switch_r_factor * r_init or |theta| exceeds pi/2 - switch_theta.
    pub switch_r_factor: f64,
    pub switch_theta: f64,
    /// Tolerance of the (state0, h, C) consistency check, relative to the
    /// magnitude of the energy-relation terms.
    pub consistency_tol: f64,
    /// E* detection bands around theta_w and -sqrt(2 W(theta_w)).
    pub estar_theta_tol: f64,
    pub estar_v_tol: f64,
}

impl Default for ClassifyOpts {
    fn default() -> Self {
        ClassifyOpts {
            rtol: 1e-10,
            atol: 1e-12,
            budget: 10_000_000,
            triple_r: 1e-6,
            triple_v_frac: 0.9,
            double_theta: 1e-4,
            double_w: 1e-6,
            double_r_min: 1e-4,
            escape_factor: 1e3,
            switch_r_factor: 0.05,
            switch_theta: 0.1,
            consistency_tol: 1e-6,
            estar_theta_tol: 0.05,
            estar_v_tol: 0.1,
        }
    }
}

/// One batch job: an initial condition with its energy and angular
/// momentum.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FateJob {
    pub C: f64,
    pub h: f64,
    pub state0: RegState,
}

// Working charts of the classification loop. The reduced chart runs in
// physical time and is fast in the far field; the regularized chart is the
// only one that survives the approach to either collision.
#[derive(Clone, Copy, PartialEq)]
enum Leg {
    Reduced,
    Regularized,
}

// Per-step probe of the phase point in collision-adapted variables,
// regardless of the working chart.
struct Probe {
    r: f64,
    v: f64,
    theta: f64,
    w: Option<f64>,
}

// Sliding window of (weight, r, theta) used for the terminal-decade theta
// average; capped so that stalls near a double collision cannot grow it
// without bound.
const THETA_WINDOW: usize = 65_536;
// Upper bound on retained plane-crossing radii.
const CROSSING_WINDOW: usize = 100_000;

fn theta_average(window: &VecDeque<(f64, f64, f64)>, r_term: f64) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for &(wt, r, theta) in window {
        if r <= 10.0 * r_term {
            num += wt * theta;
            den += wt;
        }
    }
    (den > 0.0).then(|| num / den)
}

/// Classifies the fate of the orbit through `state0` on the level (h, C).
///
/// The loop integrates in the reduced chart away from collisions and in the
/// regularized chart near them, accumulating the azimuthal winding as an
/// extra component. Triple collision is sub-classified by the plane
/// crossings and the limiting angle: a crossing within the last decade of r
/// (or a pinned angle near 0) means the Q* funnel, a pinned angle at a ray
/// means B+-(0), and a pinned angle near +-theta_w with the matching
/// shallow v means the stable set of E+-*.
pub fn classify_fate(
    params: &ModelParams,
    conv: Convention,
    c_ang: f64,
    h: f64,
    state0: &RegState,
    opts: &ClassifyOpts,
) -> Result<FateReport> {
    let dc = model::derive(params)?;
    if !(state0.r > 0.0) {
        return Err(Error::Domain(format!("r = {} must be > 0", state0.r)));
    }

    // The report is only meaningful if (state0, h, C) actually lie on one
    // energy level; compare the residual against the size of its terms.
    let res = charts::residual_reg(params, conv, c_ang, h, state0)?;
    let scale = {
        let ang = model::eval_angular(params, state0.theta)?;
        let (c, _) = model::cos_sin(state0.theta);
        let hp = charts::physical_h(params, conv, h);
        let c3 = c.powi(3);
        1.0 + (ang.u * state0.w * state0.w).abs()
            + ((state0.v * state0.v * c3 - 2.0 * ang.u) * c3).abs()
            + (c_ang * c_ang * state0.r * c.powi(4)).abs()
            + (2.0 * hp * state0.r.powi(3) * c3 * c3).abs()
    };
    if res.abs() > opts.consistency_tol * scale {
        return Err(Error::Inconsistent(format!(
            "state0 violates the energy relation: residual {res:.3e} against scale {scale:.3e}"
        )));
    }

    let ctx = FieldCtx::new(params, conv, c_ang, h)?;
    let stepper_opts = StepperOpts {
        rtol: opts.rtol,
        atol: opts.atol,
        h_max: f64::INFINITY,
    };
    let r_init = state0.r;
    let sqrt_2w0 = (2.0 * dc.w0).sqrt();
    let v_deep = -opts.triple_v_frac * sqrt_2w0;
    let estar_v = dc
        .theta_w
        .map(|tw| {
            let w_tw = model::eval_angular(params, tw).expect("interior angle").w;
            -(2.0 * w_tw).sqrt()
        })
        .unwrap_or(f64::NEG_INFINITY);

    let r_lo = opts.switch_r_factor * r_init;
    let theta_band = FRAC_PI_2 - opts.switch_theta;

    let mut leg = if state0.theta.abs() < theta_band {
        Leg::Reduced
    } else {
        Leg::Regularized
    };
    let mut y: Vec<f64> = match leg {
        Leg::Reduced => {
            let cyl = charts::reg_to_cyl(params, state0)?;
            vec![cyl.R, cyl.z, cyl.P_R, cyl.P_z, 0.0]
        }
        Leg::Regularized => vec![state0.r, state0.v, state0.theta, state0.w, 0.0],
    };

    let mut steps: u64 = 0;
    let mut max_residual: f64 = 0.0;
    let mut r_max_increase: f64 = 0.0;
    let mut v_max_increase: f64 = 0.0;
    let mut plane_crossings: u64 = 0;
    let mut v_sign_changes: u64 = 0;
    let mut r_max_seen = r_init;
    let mut crossing_radii: VecDeque<f64> = VecDeque::new();
    let mut theta_window: VecDeque<(f64, f64, f64)> = VecDeque::new();

    let probe_of = |leg: Leg, y: &[f64]| -> Result<Probe> {
        match leg {
            Leg::Reduced => {
                let cyl = CylState {
                    R: y[0],
                    z: y[1],
                    P_R: y[2],
                    P_z: y[3],
                };
                let mc = charts::cyl_to_mcgehee(params, &cyl)?;
                Ok(Probe {
                    r: mc.r,
                    v: mc.v,
                    theta: mc.theta,
                    w: None,
                })
            }
            Leg::Regularized => Ok(Probe {
                r: y[0],
                v: y[1],
                theta: y[2],
                w: Some(y[3]),
            }),
        }
    };

    let start = probe_of(leg, &y)?;
    let mut prev = Probe { w: None, ..start };
    let mut theta_sign: i8 = if prev.theta > 0.0 {
        1
    } else if prev.theta < 0.0 {
        -1
    } else {
        0
    };
    let mut v_sign: i8 = if prev.v > 0.0 {
        1
    } else if prev.v < 0.0 {
        -1
    } else {
        0
    };

    let mut fate = Fate::Undetermined;
    let mut stop = StopReason::Budget;
    let mut double_r = None;
    let mut terminal_param = 0.0;
    let mut winding = 0.0;

    'legs: loop {
        let leg_now = leg;
        let field = |_t: f64, y: &[f64], dy: &mut [f64]| match leg_now {
            Leg::Reduced => {
                ctx.reduced(y, dy);
                dy[4] = if c_ang == 0.0 {
                    0.0
                } else {
                    2.0 * c_ang / (ctx.params.M * y[0] * y[0])
                };
            }
            Leg::Regularized => {
                ctx.regularized(y, dy);
                dy[4] = if c_ang == 0.0 {
                    0.0
                } else {
                    let c = model::cos_sin(y[2]).0;
                    c_ang / (y[0] * y[0] * c * c)
                };
            }
        };
        let mut stepper = Dopri5::new(field, 0.0, &y, f64::INFINITY, stepper_opts.clone());

        loop {
            if steps >= opts.budget {
                break 'legs;
            }
            match stepper.step() {
                StepResult::Accepted => {}
                StepResult::Underflow | StepResult::Finished => {
                    stop = StopReason::Underflow;
                    terminal_param = stepper.t();
                    y.copy_from_slice(stepper.y());
                    break 'legs;
                }
            }
            steps += 1;
            terminal_param = stepper.t();
            y.copy_from_slice(stepper.y());

            let cur = match probe_of(leg, &y) {
                Ok(p) => p,
                Err(_) => {
                    stop = StopReason::Underflow;
                    break 'legs;
                }
            };
            let res = match leg {
                Leg::Reduced => charts::residual_cyl(
                    params,
                    conv,
                    c_ang,
                    h,
                    &CylState {
                        R: y[0],
                        z: y[1],
                        P_R: y[2],
                        P_z: y[3],
                    },
                ),
                Leg::Regularized => charts::residual_reg(
                    params,
                    conv,
                    c_ang,
                    h,
                    &RegState {
                        r: y[0],
                        v: y[1],
                        theta: y[2],
                        w: y[3],
                    },
                ),
            };
            if let Ok(res) = res {
                max_residual = max_residual.max(res.abs());
            }

            r_max_increase = r_max_increase.max(cur.r - prev.r);
            v_max_increase = v_max_increase.max(cur.v - prev.v);
            r_max_seen = r_max_seen.max(cur.r);

            let s_new: i8 = if cur.theta > 0.0 {
                1
            } else if cur.theta < 0.0 {
                -1
            } else {
                0
            };
            if s_new != 0 {
                if theta_sign != 0 && s_new != theta_sign {
                    plane_crossings += 1;
                    crossing_radii.push_back(cur.r);
                    if crossing_radii.len() > CROSSING_WINDOW {
                        crossing_radii.pop_front();
                    }
                }
                theta_sign = s_new;
            }
            // Crossings more than a decade above the current radius can no
            // longer count as recent on a shrinking orbit; dropping them
            // bounds the memory of spiralling trajectories.
            while crossing_radii.front().is_some_and(|&rc| rc > 10.0 * cur.r) {
                crossing_radii.pop_front();
            }
            let sv: i8 = if cur.v > 0.0 {
                1
            } else if cur.v < 0.0 {
                -1
            } else {
                0
            };
            if sv != 0 {
                if v_sign != 0 && sv != v_sign {
                    v_sign_changes += 1;
                }
                v_sign = sv;
            }

            theta_window.push_back((stepper.t() - stepper.t_old(), cur.r, cur.theta));
            if theta_window.len() > THETA_WINDOW {
                theta_window.pop_front();
            }

            // Terminal criteria, checked on every accepted step.
            if cur.r < opts.triple_r {
                let crossed_recently = crossing_radii
                    .back()
                    .is_some_and(|&rc| rc <= 10.0 * cur.r);
                let theta_bar =
                    theta_average(&theta_window, cur.r).unwrap_or(cur.theta);
                if cur.v < v_deep {
                    fate = if crossed_recently {
                        Fate::TripleCollisionQstar
                    } else if theta_bar.abs() < FRAC_PI_2 - theta_bar.abs() {
                        // Pinned nearer the planar set than the rays: the
                        // orbit sits in the Q* funnel without oscillating
                        // (exactly planar infall).
                        Fate::TripleCollisionQstar
                    } else {
                        Fate::TripleCollisionBpm0
                    };
                    stop = StopReason::Detection;
                    break 'legs;
                }
                if let Some(tw) = dc.theta_w {
                    if (theta_bar.abs() - tw).abs() < opts.estar_theta_tol
                        && (cur.v - estar_v).abs() < opts.estar_v_tol
                    {
                        fate = Fate::TripleCollisionEstar;
                        stop = StopReason::Detection;
                        break 'legs;
                    }
                }
                // r is already below the detection radius but v has not
                // settled into any funnel: force a verdict two decades
                // further down rather than integrating into denormals.
                if cur.r < 1e-6 * opts.triple_r {
                    fate = if crossed_recently
                        || theta_bar.abs() < FRAC_PI_2 - theta_bar.abs()
                    {
                        Fate::TripleCollisionQstar
                    } else {
                        Fate::TripleCollisionBpm0
                    };
                    stop = StopReason::Detection;
                    break 'legs;
                }
            }
            if let Some(w) = cur.w {
                if cur.theta.abs() > FRAC_PI_2 - opts.double_theta
                    && w.abs() < opts.double_w
                    && cur.r > opts.double_r_min
                {
                    fate = Fate::DoubleCollisionBpmR;
                    double_r = Some(cur.r);
                    stop = StopReason::Detection;
                    break 'legs;
                }
            }
            if cur.r > opts.escape_factor * r_init && cur.v > 0.0 {
                fate = Fate::Escape;
                stop = StopReason::Detection;
                break 'legs;
            }

            // Chart switching with hysteresis so the legs cannot thrash.
            match leg {
                Leg::Reduced => {
                    if cur.r < r_lo || cur.theta.abs() > theta_band {
                        let cyl = CylState {
                            R: y[0],
                            z: y[1],
                            P_R: y[2],
                            P_z: y[3],
                        };
                        match charts::cyl_to_reg(params, &cyl) {
                            Ok(reg) => {
                                winding += y[4];
                                y = vec![reg.r, reg.v, reg.theta, reg.w, 0.0];
                                leg = Leg::Regularized;
                                prev = cur;
                                continue 'legs;
                            }
                            Err(_) => {
                                stop = StopReason::Underflow;
                                break 'legs;
                            }
                        }
                    }
                }
                Leg::Regularized => {
                    if cur.r >= 2.0 * r_lo && cur.theta.abs() < theta_band - opts.switch_theta
                    {
                        let reg = RegState {
                            r: y[0],
                            v: y[1],
                            theta: y[2],
                            w: y[3],
                        };
                        match charts::reg_to_cyl(params, &reg) {
                            Ok(cyl) => {
                                winding += y[4];
                                y = vec![cyl.R, cyl.z, cyl.P_R, cyl.P_z, 0.0];
                                leg = Leg::Reduced;
                                prev = cur;
                                continue 'legs;
                            }
                            Err(_) => {
                                stop = StopReason::Underflow;
                                break 'legs;
                            }
                        }
                    }
                }
            }
            prev = cur;
        }
    }

    winding += y[4];
    let last = probe_of(leg, &y).unwrap_or(Probe {
        r: f64::NAN,
        v: f64::NAN,
        theta: f64::NAN,
        w: None,
    });
    let terminal_state = match leg {
        Leg::Reduced => charts::cyl_to_reg(
            params,
            &CylState {
                R: y[0],
                z: y[1],
                P_R: y[2],
                P_z: y[3],
            },
        )
        .unwrap_or(RegState {
            r: last.r,
            v: last.v,
            theta: last.theta,
            w: f64::NAN,
        }),
        Leg::Regularized => RegState {
            r: y[0],
            v: y[1],
            theta: y[2],
            w: y[3],
        },
    };

    if stop == StopReason::Budget {
        // Recurrence heuristic: the orbit stayed well inside the escape
        // radius and kept turning around in r.
        fate = if r_max_seen <= opts.escape_factor * r_init && v_sign_changes >= 4 {
            Fate::Bounded
        } else {
            Fate::Undetermined
        };
    }

    let collision = matches!(
        fate,
        Fate::TripleCollisionQstar
            | Fate::TripleCollisionEstar
            | Fate::TripleCollisionBpm0
            | Fate::DoubleCollisionBpmR
    );
    let limiting_theta = collision
        .then(|| theta_average(&theta_window, terminal_state.r))
        .flatten();
    let crossings_last_decade = crossing_radii
        .iter()
        .filter(|&&rc| rc <= 10.0 * terminal_state.r)
        .count() as u64;

    Ok(FateReport {
        fate,
        limiting_theta,
        winding,
        plane_crossings,
        double_r,
        diagnostics: FateDiagnostics {
            terminal_param,
            terminal_chart: match leg {
                Leg::Reduced => Chart::Reduced,
                Leg::Regularized => Chart::Regularized,
            },
            terminal_state,
            max_residual,
            steps,
            stop,
            r_max_increase,
            v_max_increase,
            crossings_last_decade,
        },
    })
}

/// Classifies a batch of jobs concurrently. Jobs are independent and the
/// output order matches the input order.
pub fn classify_batch(
    params: &ModelParams,
    conv: Convention,
    jobs: &[FateJob],
    opts: &ClassifyOpts,
) -> Result<Vec<FateReport>> {
    jobs.par_iter()
        .enumerate()
        .map(|(i, job)| {
            classify_fate(params, conv, job.C, job.h, &job.state0, opts)
                .map_err(|e| Error::Inconsistent(format!("job {i}: {e}")))
        })
        .collect()
}

/// Integrates a planar orbit from (r0, v0) until r drops below `r_stop`,
/// returning the azimuthal winding accumulated along the way. The winding
/// of the C = 0 (rectilinear) orbits is exactly 0; for 0 < C < C0 it grows
/// without bound as r_stop -> 0, which is the black-hole behaviour.
pub fn planar_collision_winding(
    params: &ModelParams,
    conv: Convention,
    c_ang: f64,
    h: f64,
    r0: f64,
    v0: f64,
    r_stop: f64,
) -> Result<f64> {
    if !(r0 > r_stop && r_stop > 0.0) {
        return Err(Error::Domain(format!(
            "need r0 > r_stop > 0, got r0 = {r0}, r_stop = {r_stop}"
        )));
    }
    let res = charts::residual_planar(params, conv, c_ang, h, r0, v0)?;
    let hp = charts::physical_h(params, conv, h);
    let dc = model::derive(params)?;
    let scale = 1.0
        + v0 * v0
        + (2.0 * hp * r0.powi(3)).abs()
        + 2.0 * dc.v0 * r0 * r0
        + c_ang * c_ang * r0
        + 2.0 * dc.w0;
    if res.abs() > 1e-6 * scale {
        return Err(Error::Inconsistent(format!(
            "(r0, v0) violates the planar energy relation: residual {res:.3e}"
        )));
    }
    let ctx = FieldCtx::new(params, conv, c_ang, h)?;
    let field = |_t: f64, y: &[f64], dy: &mut [f64]| {
        ctx.planar(y, dy);
        dy[2] = if c_ang == 0.0 {
            0.0
        } else {
            c_ang / (y[0] * y[0])
        };
    };
    let mut stepper = Dopri5::new(
        field,
        0.0,
        &[r0, v0, 0.0],
        f64::INFINITY,
        StepperOpts::default(),
    );
    for _ in 0..10_000_000u64 {
        match stepper.step() {
            StepResult::Accepted => {}
            StepResult::Underflow | StepResult::Finished => {
                return Err(Error::Domain(format!(
                    "planar orbit stalled at r = {} before reaching r = {r_stop}",
                    stepper.y()[0]
                )));
            }
        }
        if stepper.y()[0] < r_stop {
            return Ok(stepper.y()[2]);
        }
        if stepper.y()[0] > 1e6 * r0 {
            return Err(Error::Domain(
                "planar orbit escaped instead of collapsing".into(),
            ));
        }
    }
    Err(Error::Domain(format!(
        "planar orbit did not reach r = {r_stop} within the step budget"
    )))
}
