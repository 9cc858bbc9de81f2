//! Parameters, derived constants and potentials of the isosceles three-body
//! problem with Schwarzschild-type pair interactions -A/d - B/d^3.
//!
//! Two bodies of mass M sit symmetrically about a vertical axis on which a
//! third body of mass m moves; the configuration stays isosceles for all
//! time. After reduction by the rotational symmetry the problem has two
//! degrees of freedom, an effective potential in cylindrical coordinates
//! (R, z), and a pair of angular potentials V, W on the half-circle
//! |theta| <= pi/2 that control the collision dynamics.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Physical parameters. M, m are masses; A, B shape the equal-pair
/// interaction -A/d - B/d^3; A1, B1 the interaction of each equal body with
/// the third. All six must be strictly positive.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Mass of each of the two equal bodies.
    pub M: f64,
    /// Mass of the third body on the symmetry axis.
    pub m: f64,
    /// Newtonian coefficient of the equal-pair interaction.
    pub A: f64,
    /// Inverse-cube coefficient of the equal-pair interaction.
    pub B: f64,
    /// Newtonian coefficient of each equal-third interaction.
    pub A1: f64,
    /// Inverse-cube coefficient of each equal-third interaction.
    pub B1: f64,
}

impl Default for ModelParams {
    /// Reference parameter set used throughout the examples: M = 1, m = 0.01
    /// (mu = 201), A = A1 = 1, B = B1 = 0.2, giving alpha = 5, beta = 3.4.
    fn default() -> Self {
        ModelParams {
            M: 1.0,
            m: 0.01,
            A: 1.0,
            B: 0.2,
            A1: 1.0,
            B1: 0.2,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("M", self.M),
            ("m", self.m),
            ("A", self.A),
            ("B", self.B),
            ("A1", self.A1),
            ("B1", self.B1),
        ];
        for (name, val) in fields {
            if !(val > 0.0) || !val.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "{name} must be strictly positive and finite, got {val}"
                )));
            }
        }
        Ok(())
    }

    /// Mass ratio mu = (2M + m)/m.
    pub fn mu(&self) -> f64 {
        (2.0 * self.M + self.m) / self.m
    }
}

/// Centrifugal-term convention used when reporting energies.
///
/// The reduced Hamiltonian carries C^2/(M R^2); a common shorthand writes
/// the centrifugal term as C^2/R^2, which is consistent only if every energy
/// is scaled by the overall factor M. `Bare` adopts that scaling: reported
/// energies (values, gradients, Hessians of the effective potential and
/// Hamiltonian levels) are M times the mechanical ones. The two conventions
/// coincide at M = 1 and vector fields are unaffected either way.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// Centrifugal term C^2/(M R^2), the mechanically consistent reading.
    #[default]
    OverM,
    /// Centrifugal term C^2/R^2.
    Bare,
}

/// Constants derived from a parameter set.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DerivedConstants {
    /// Mass ratio mu = (2M + m)/m; always > 1.
    pub mu: f64,
    /// alpha = M (A + 4 A1), combined Newtonian strength.
    pub alpha: f64,
    /// beta = M (B + 16 B1), combined inverse-cube strength.
    pub beta: f64,
    /// gamma = 16 B1 / B.
    pub gamma: f64,
    /// c0 = (3 alpha beta)^{1/4}; angular momenta |C| <= c0 admit no
    /// relative equilibria. Equals (12 V(0) W(0))^{1/4} for every M.
    pub c0: f64,
    /// V(0) = sqrt(M/2) (A + 4 A1), equatorial value of V.
    pub v0: f64,
    /// W(0) = (M/2)^{3/2} (B + 16 B1), equatorial value of W.
    pub w0: f64,
    /// Interior critical angle of V, present only when mu > 1 + A/(4 A1).
    pub theta_v: Option<f64>,
    /// Interior critical angle of W, present only when mu > 1 + B/(16 B1).
    pub theta_w: Option<f64>,
}

/// Predicates describing where the parameter set sits relative to the
/// large-mass-ratio regime in which the interior critical angles exist.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegimeReport {
    pub mu: f64,
    /// mu > 1 + A/(4 A1): V has an interior critical angle theta_v.
    pub cond_a: bool,
    /// mu > 1 + B/(16 B1): W has an interior critical angle theta_w.
    pub cond_b: bool,
    /// theta_v != theta_w, i.e. (mu-1)^{4/15} (4 A1/A)^{2/3} differs from
    /// (16 B1/B)^{2/5}.
    pub generic: bool,
    /// mu exceeds the caller-supplied threshold.
    pub mu_exceeds_threshold: bool,
}

/// Derives mu, alpha, beta, c0, the equatorial potential values and the
/// interior critical angles (when the regime admits them).
pub fn derive(params: &ModelParams) -> Result<DerivedConstants> {
    params.validate()?;
    let mu = params.mu();
    let alpha = params.M * (params.A + 4.0 * params.A1);
    let beta = params.M * (params.B + 16.0 * params.B1);
    let gamma = 16.0 * params.B1 / params.B;
    let half_m = 0.5 * params.M;
    Ok(DerivedConstants {
        mu,
        alpha,
        beta,
        gamma,
        c0: (3.0 * alpha * beta).powf(0.25),
        v0: half_m.sqrt() * (params.A + 4.0 * params.A1),
        w0: half_m.powf(1.5) * (params.B + 16.0 * params.B1),
        theta_v: critical_angle(mu, 4.0 * params.A1 / params.A, 2.0 / 3.0),
        theta_w: critical_angle(mu, 16.0 * params.B1 / params.B, 2.0 / 5.0),
    })
}

/// Interior critical angle solving cos^2 = mu / ((mu-1) + ((mu-1) k)^p).
/// Exists iff (mu-1) k > 1; `p` is 2/3 for V and 2/5 for W.
fn critical_angle(mu: f64, k: f64, p: f64) -> Option<f64> {
    let kr = ((mu - 1.0) * k).powf(p);
    if kr <= 1.0 {
        return None;
    }
    let cos2 = mu / (mu - 1.0 + kr);
    Some(cos2.sqrt().acos())
}

/// Regime predicates for the given parameters and mass-ratio threshold.
pub fn regime(params: &ModelParams, mu_threshold: f64) -> Result<RegimeReport> {
    params.validate()?;
    let mu = params.mu();
    let lhs = (mu - 1.0).powf(4.0 / 15.0) * (4.0 * params.A1 / params.A).powf(2.0 / 3.0);
    let rhs = (16.0 * params.B1 / params.B).powf(2.0 / 5.0);
    Ok(RegimeReport {
        mu,
        cond_a: mu > 1.0 + params.A / (4.0 * params.A1),
        cond_b: mu > 1.0 + params.B / (16.0 * params.B1),
        generic: (lhs - rhs).abs() > 1e-12 * lhs.abs().max(rhs.abs()),
        mu_exceeds_threshold: mu > mu_threshold,
    })
}

/// cos and sin with the half-circle endpoints snapped exactly: at
/// |theta| == pi/2 (bit-exact) returns cos = 0, sin = +-1, so that the
/// boundary identities U = (M/2)^{3/2} B and dU = 0 hold without round-off.
pub(crate) fn cos_sin(theta: f64) -> (f64, f64) {
    if theta.abs() == FRAC_PI_2 {
        (0.0, 1.0_f64.copysign(theta))
    } else {
        (theta.cos(), theta.sin())
    }
}

/// Angular potentials and first derivatives at a single angle.
///
/// V carries the Newtonian parts, W the inverse-cube parts, and
/// U = W cos^3(theta) is the boundary-regular combination: at theta = +-pi/2
/// the potentials V, W blow up while U tends to (M/2)^{3/2} B with dU = 0.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AngularEval {
    pub v: f64,
    pub w: f64,
    pub u: f64,
    pub dv: f64,
    pub dw: f64,
    pub du: f64,
}

/// Evaluates V, W, U and their theta-derivatives on |theta| <= pi/2.
///
/// At the endpoints the singular quantities are reported as infinities of
/// the correct sign while u and du take their exact finite limits.
pub fn eval_angular(params: &ModelParams, theta: f64) -> Result<AngularEval> {
    params.validate()?;
    if !(theta.abs() <= FRAC_PI_2) {
        return Err(Error::Domain(format!(
            "theta = {theta} outside [-pi/2, pi/2]"
        )));
    }
    let (c, s) = cos_sin(theta);
    let mu = params.mu();
    let half_m = 0.5 * params.M;
    let sq = half_m.sqrt();
    let cb = half_m.powf(1.5);
    let p = c * c + mu * s * s;

    // u and du stay regular through the endpoints.
    let u = cb * (params.B + 16.0 * params.B1 * c.powi(3) / p.powf(1.5));
    let du = -48.0 * params.B1 * mu * cb * s * c * c / p.powf(2.5);

    if c == 0.0 {
        return Ok(AngularEval {
            v: f64::INFINITY,
            w: f64::INFINITY,
            u,
            dv: f64::INFINITY.copysign(s),
            dw: f64::INFINITY.copysign(s),
            du,
        });
    }

    let v = sq * (params.A / c + 4.0 * params.A1 / p.sqrt());
    let w = cb * (params.B / c.powi(3) + 16.0 * params.B1 / p.powf(1.5));
    let dv = sq * (params.A * s / (c * c) - 4.0 * params.A1 * (mu - 1.0) * s * c / p.powf(1.5));
    let dw = cb
        * (3.0 * params.B * s / c.powi(4)
            - 48.0 * params.B1 * (mu - 1.0) * s * c / p.powf(2.5));
    Ok(AngularEval { v, w, u, dv, dw, du })
}

/// Second derivative W''(theta), finite only in the open interval.
pub fn d2w(params: &ModelParams, theta: f64) -> Result<f64> {
    params.validate()?;
    if !(theta.abs() < FRAC_PI_2) {
        return Err(Error::Domain(format!(
            "theta = {theta} outside (-pi/2, pi/2)"
        )));
    }
    let (c, s) = cos_sin(theta);
    let mu = params.mu();
    let p = c * c + mu * s * s;
    let cb = (0.5 * params.M).powf(1.5);
    Ok(cb
        * (3.0 * params.B * (c * c + 4.0 * s * s) / c.powi(5)
            - 48.0 * params.B1 * (mu - 1.0)
                * ((c * c - s * s) / p.powf(2.5)
                    - 5.0 * (mu - 1.0) * s * s * c * c / p.powf(3.5))))
}

/// Value, gradient and Hessian of the effective potential
/// U_eff(R, z) = C^2/(M R^2) + U(R, z) in cylindrical coordinates, where
/// U(R, z) = -A/R - B/R^3 - 4 A1/l - 16 B1/l^3 with l = sqrt(R^2 + 4 z^2).
/// Under `Convention::Bare` the centrifugal term is C^2/R^2 instead.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EffectiveEval {
    pub value: f64,
    /// (d/dR, d/dz).
    pub grad: [f64; 2],
    /// Row-major symmetric 2x2 matrix of second derivatives.
    pub hess: [[f64; 2]; 2],
}

#[allow(non_snake_case)]
pub fn eval_effective(
    params: &ModelParams,
    conv: Convention,
    c_ang: f64,
    R: f64,
    z: f64,
) -> Result<EffectiveEval> {
    params.validate()?;
    if !(R > 0.0) {
        return Err(Error::Domain(format!("R = {R} must be positive")));
    }
    // Bare reports M times the mechanical potential, so the centrifugal term
    // reads c^2/R^2 while everything else picks up the factor M.
    let scale = match conv {
        Convention::OverM => 1.0,
        Convention::Bare => params.M,
    };
    let m_div = params.M;
    let c2 = c_ang * c_ang;
    let (A, B, A1, B1) = (params.A, params.B, params.A1, params.B1);
    let rho = R * R + 4.0 * z * z;
    let (r32, r52, r72) = (rho.powf(1.5), rho.powf(2.5), rho.powf(3.5));

    let value =
        c2 / (m_div * R * R) - A / R - B / R.powi(3) - 4.0 * A1 / rho.sqrt() - 16.0 * B1 / r32;
    let g_r = -2.0 * c2 / (m_div * R.powi(3))
        + A / (R * R)
        + 3.0 * B / R.powi(4)
        + 4.0 * A1 * R / r32
        + 48.0 * B1 * R / r52;
    let g_z = 16.0 * A1 * z / r32 + 192.0 * B1 * z / r52;
    let h_rr = 6.0 * c2 / (m_div * R.powi(4)) - 2.0 * A / R.powi(3) - 12.0 * B / R.powi(5)
        + 4.0 * A1 * (1.0 / r32 - 3.0 * R * R / r52)
        + 48.0 * B1 * (1.0 / r52 - 5.0 * R * R / r72);
    let h_rz = -48.0 * A1 * R * z / r52 - 960.0 * B1 * R * z / r72;
    let h_zz = 16.0 * A1 / r32 - 192.0 * A1 * z * z / r52 + 192.0 * B1 / r52
        - 3840.0 * B1 * z * z / r72;

    Ok(EffectiveEval {
        value: scale * value,
        grad: [scale * g_r, scale * g_z],
        hess: [
            [scale * h_rr, scale * h_rz],
            [scale * h_rz, scale * h_zz],
        ],
    })
}
