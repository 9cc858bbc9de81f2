//! Relative equilibria of the reduced flow (circular solutions of the full
//! problem) and the energy-momentum diagram they trace.
//!
//! Circular solutions sit at z = 0, P_R = P_z = 0 with the radius solving
//! alpha R^2 - 2 C^2 R + 3 beta = 0. For |C| > c0 = (3 alpha beta)^{1/4}
//! there are two, the larger elliptic and the smaller hyperbolic; they merge
//! at |C| = c0 and disappear below it.

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::model::{self, Convention, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    /// Linearly stable: two purely imaginary eigenvalue pairs, positive
    /// definite restricted Hessian.
    Stable,
    /// One real eigenvalue pair; saddle of the effective potential.
    Unstable,
    /// Double root at |C| = c0.
    Degenerate,
}

/// A relative equilibrium with its reported energy and linearization data.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Serialize)]
pub struct RelativeEquilibrium {
    /// Cylindrical radius of the circular solution.
    pub R: f64,
    /// Energy at the equilibrium under the requested convention.
    pub h: f64,
    pub kind: EquilibriumKind,
    /// Eigenvalues of the linearized reduced flow, sorted by (re, im).
    #[serde(serialize_with = "crate::manifold::ser_complex_vec")]
    pub eigenvalues: Vec<Complex64>,
}

/// Linearization of the reduced flow at (R, 0, 0, 0): block matrix pairing
/// the kinetic weights with the Hessian of the effective potential. The
/// dynamics always carries the mechanical centrifugal term, independent of
/// any reporting convention.
fn linearization(params: &ModelParams, c_ang: f64, r: f64) -> Result<Matrix4<f64>> {
    let eff = model::eval_effective(params, Convention::OverM, c_ang, r, 0.0)?;
    let [[h_rr, h_rz], [_, h_zz]] = eff.hess;
    let kp = 2.0 / params.M;
    let kz = (2.0 * params.M + params.m) / (2.0 * params.M * params.m);
    Ok(Matrix4::new(
        0.0, 0.0, kp, 0.0, //
        0.0, 0.0, 0.0, kz, //
        -h_rr, -h_rz, 0.0, 0.0, //
        -h_rz, -h_zz, 0.0, 0.0,
    ))
}

fn sorted_eigenvalues(m: &Matrix4<f64>) -> Vec<Complex64> {
    let mut eig: Vec<Complex64> = m.complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    eig
}

/// Relative equilibria for angular momentum C, sorted by increasing radius.
///
/// Returns an empty list for |C| < c0, the single degenerate equilibrium at
/// |C| = c0 (to round-off) and the hyperbolic/elliptic pair above. Kinds are
/// decided from the numerically computed spectrum, not from the closed-form
/// discriminant.
pub fn relative_equilibria(
    params: &ModelParams,
    conv: Convention,
    c_ang: f64,
) -> Result<Vec<RelativeEquilibrium>> {
    let dc = model::derive(params)?;
    let c2 = c_ang * c_ang;
    let disc = c2 * c2 - dc.c0.powi(4);
    let tol = 1e-12 * dc.c0.powi(4);

    let radii: Vec<f64> = if disc < -tol {
        vec![]
    } else if disc.abs() <= tol {
        vec![c2 / dc.alpha]
    } else {
        let sq = disc.sqrt();
        vec![(c2 - sq) / dc.alpha, (c2 + sq) / dc.alpha]
    };
    let degenerate = radii.len() == 1;

    radii
        .into_iter()
        .map(|r| {
            let h = model::eval_effective(params, conv, c_ang, r, 0.0)?.value;
            let eigenvalues = sorted_eigenvalues(&linearization(params, c_ang, r)?);
            let scale = eigenvalues
                .iter()
                .map(|e| e.norm())
                .fold(0.0_f64, f64::max)
                .max(1e-300);
            let re_max = eigenvalues.iter().map(|e| e.re).fold(f64::MIN, f64::max);
            let kind = if degenerate {
                EquilibriumKind::Degenerate
            } else if re_max > 1e-8 * scale {
                EquilibriumKind::Unstable
            } else {
                EquilibriumKind::Stable
            };
            Ok(RelativeEquilibrium {
                R: r,
                h,
                kind,
                eigenvalues,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Stable,
    Unstable,
}

/// One point of the energy-momentum diagram: the circular solution of
/// radius R with its angular momentum and energy.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EmPoint {
    pub R: f64,
    pub C: f64,
    pub h: f64,
    pub branch: Branch,
}

/// Sweeps the family of relative equilibria over a logarithmic radius grid
/// and reports (R, C, h) sorted by increasing C.
///
/// Along the family C^2(R) = (alpha R^2 + 3 beta)/(2R); both C and h reach
/// their minimum at R = sqrt(3 beta / alpha) (where C = c0), the stable
/// branch lying at larger radii. The two branches never cross in the (C, h)
/// plane: equal C and equal h across branches would force equal R.
pub fn em_diagram(
    params: &ModelParams,
    conv: Convention,
    r_min: f64,
    r_max: f64,
    n: usize,
) -> Result<Vec<EmPoint>> {
    let dc = model::derive(params)?;
    if !(r_min > 0.0 && r_max > r_min) {
        return Err(crate::error::Error::Domain(format!(
            "need 0 < r_min < r_max, got [{r_min}, {r_max}]"
        )));
    }
    if n < 2 {
        return Err(crate::error::Error::Domain("need at least 2 points".into()));
    }
    let r_fold = (3.0 * dc.beta / dc.alpha).sqrt();
    let (lo, hi) = (r_min.ln(), r_max.ln());
    let mut points: Vec<EmPoint> = (0..n)
        .map(|i| {
            let r = (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp();
            let c = ((dc.alpha * r * r + 3.0 * dc.beta) / (2.0 * r)).sqrt();
            let h = model::eval_effective(params, conv, c, r, 0.0)?.value;
            Ok(EmPoint {
                R: r,
                C: c,
                h,
                branch: if r >= r_fold {
                    Branch::Stable
                } else {
                    Branch::Unstable
                },
            })
        })
        .collect::<Result<_>>()?;
    points.sort_by(|a, b| a.C.total_cmp(&b.C).then(a.R.total_cmp(&b.R)));
    Ok(points)
}
