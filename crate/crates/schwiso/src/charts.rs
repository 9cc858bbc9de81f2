//! Coordinate charts for the reduced problem and the transformations
//! between them.
//!
//! Three charts are used. The cylindrical chart (R, z, P_R, P_z) carries the
//! reduced Hamiltonian flow in physical time t. The polar blow-up chart
//! (r, v, theta, u) rescales by the mass metric so that r = 0 is the triple
//! collision; its flow runs in a parameter tau with dt = r^{5/2} dtau. The
//! regularized chart (r, v, theta, w) substitutes w = cos^3(theta) u /
//! sqrt(U) and a further parameter sigma with dtau = (cos^3(theta)/sqrt(U))
//! dsigma, which extends the flow through double collisions at
//! theta = +-pi/2.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::model::{self, Convention, ModelParams};

/// Transformations into and out of the regularized chart are rejected this
/// close to the double-collision rays theta = +-pi/2, where u and w cease to
/// determine each other.
pub const THETA_MARGIN: f64 = 1e-6;

/// Cylindrical chart: R > 0 is the half-separation coordinate of the equal
/// pair, z the axial offset of the third body (in reduced coordinates), with
/// conjugate momenta P_R, P_z.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylState {
    pub R: f64,
    pub z: f64,
    pub P_R: f64,
    pub P_z: f64,
}

/// Polar blow-up chart: r is the configuration norm in the mass metric,
/// theta in [-pi/2, pi/2] the configuration angle (theta = 0 is the planar
/// invariant set, theta = +-pi/2 the double-collision rays), v the scaled
/// radial and u the scaled tangential velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McGeheeState {
    pub r: f64,
    pub v: f64,
    pub theta: f64,
    pub u: f64,
}

/// Regularized chart: as the polar chart but with w = cos^3(theta) u /
/// sqrt(U(theta)) in place of u, which stays finite through theta = +-pi/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegState {
    pub r: f64,
    pub v: f64,
    pub theta: f64,
    pub w: f64,
}

/// Mass-metric weights (M/2, 2Mm/(2M+m)) for the (R, z) directions.
fn metric(params: &ModelParams) -> (f64, f64) {
    (
        0.5 * params.M,
        2.0 * params.M * params.m / (2.0 * params.M + params.m),
    )
}

/// Converts an energy value given under `conv` to the mechanical one
/// (centrifugal term C^2/(M R^2)). Bare energies are M times larger.
pub fn physical_h(params: &ModelParams, conv: Convention, h: f64) -> f64 {
    match conv {
        Convention::OverM => h,
        Convention::Bare => h / params.M,
    }
}

pub fn cyl_to_mcgehee(params: &ModelParams, s: &CylState) -> Result<McGeheeState> {
    params.validate()?;
    if !(s.R > 0.0) {
        return Err(Error::Domain(format!("R = {} must be positive", s.R)));
    }
    let (kr, kz) = metric(params);
    let (qr, qz) = (kr.sqrt() * s.R, kz.sqrt() * s.z);
    let r = qr.hypot(qz);
    let theta = qz.atan2(qr);
    let (c, sn) = model::cos_sin(theta);
    let (pr, pz) = (s.P_R / kr.sqrt(), s.P_z / kz.sqrt());
    let r32 = r.powf(1.5);
    Ok(McGeheeState {
        r,
        v: r32 * (c * pr + sn * pz),
        theta,
        u: r32 * (-sn * pr + c * pz),
    })
}

pub fn mcgehee_to_cyl(params: &ModelParams, s: &McGeheeState) -> Result<CylState> {
    params.validate()?;
    if !(s.r > 0.0) {
        return Err(Error::Domain(format!("r = {} must be positive", s.r)));
    }
    if FRAC_PI_2 - s.theta.abs() < THETA_MARGIN {
        return Err(Error::Domain(format!(
            "theta = {} too close to a double-collision ray for the cylindrical chart",
            s.theta
        )));
    }
    let (kr, kz) = metric(params);
    let (c, sn) = model::cos_sin(s.theta);
    let rm32 = s.r.powf(-1.5);
    let (pr, pz) = (
        rm32 * (s.v * c - s.u * sn),
        rm32 * (s.v * sn + s.u * c),
    );
    Ok(CylState {
        R: s.r * c / kr.sqrt(),
        z: s.r * sn / kz.sqrt(),
        P_R: kr.sqrt() * pr,
        P_z: kz.sqrt() * pz,
    })
}

pub fn mcgehee_to_reg(params: &ModelParams, s: &McGeheeState) -> Result<RegState> {
    params.validate()?;
    if FRAC_PI_2 - s.theta.abs() < THETA_MARGIN {
        return Err(Error::Domain(format!(
            "theta = {} too close to a double-collision ray to fix w from u",
            s.theta
        )));
    }
    let ang = model::eval_angular(params, s.theta)?;
    let c = model::cos_sin(s.theta).0;
    Ok(RegState {
        r: s.r,
        v: s.v,
        theta: s.theta,
        w: c.powi(3) * s.u / ang.u.sqrt(),
    })
}

pub fn reg_to_mcgehee(params: &ModelParams, s: &RegState) -> Result<McGeheeState> {
    params.validate()?;
    if FRAC_PI_2 - s.theta.abs() < THETA_MARGIN {
        return Err(Error::Domain(format!(
            "theta = {} too close to a double-collision ray to fix u from w",
            s.theta
        )));
    }
    let ang = model::eval_angular(params, s.theta)?;
    let c = model::cos_sin(s.theta).0;
    Ok(McGeheeState {
        r: s.r,
        v: s.v,
        theta: s.theta,
        u: s.w * ang.u.sqrt() / c.powi(3),
    })
}

pub fn cyl_to_reg(params: &ModelParams, s: &CylState) -> Result<RegState> {
    mcgehee_to_reg(params, &cyl_to_mcgehee(params, s)?)
}

pub fn reg_to_cyl(params: &ModelParams, s: &RegState) -> Result<CylState> {
    mcgehee_to_cyl(params, &reg_to_mcgehee(params, s)?)
}

/// Reduced Hamiltonian in the cylindrical chart under the given convention.
pub fn hamiltonian_cyl(
    params: &ModelParams,
    conv: Convention,
    c_ang: f64,
    s: &CylState,
) -> Result<f64> {
    let eff = model::eval_effective(params, conv, c_ang, s.R, s.z)?;
    let kinetic = s.P_R * s.P_R / params.M
        + (2.0 * params.M + params.m) / (4.0 * params.M * params.m) * s.P_z * s.P_z;
    let scale = match conv {
        Convention::OverM => 1.0,
        Convention::Bare => params.M,
    };
    Ok(scale * kinetic + eff.value)
}

/// Rotation rate dphi/dt = 2C/(M R^2) of the equal pair about the axis.
pub fn phi_rate_cyl(params: &ModelParams, c_ang: f64, s: &CylState) -> f64 {
    2.0 * c_ang / (params.M * s.R * s.R)
}

/// The same rate expressed through polar variables: 2C/(M R^2) with
/// R^2 = (2/M) r^2 cos^2(theta), i.e. C / (r^2 cos^2(theta)).
pub fn phi_rate_polar(r: f64, theta: f64, c_ang: f64) -> f64 {
    let c = model::cos_sin(theta).0;
    c_ang / (r * r * c * c)
}

/// Energy-relation residual in the cylindrical chart: H(state) - h.
pub fn residual_cyl(
    params: &ModelParams,
    conv: Convention,
    c_ang: f64,
    h: f64,
    s: &CylState,
) -> Result<f64> {
    Ok(hamiltonian_cyl(params, conv, c_ang, s)? - h)
}

/// Energy-relation residual in the polar chart:
/// (u^2 + v^2)/2 + C^2 r/(2 cos^2) - r^2 V - W - h r^3, with h interpreted
/// under `conv`. Finite at r = 0 for any theta; infinite when r > 0 and
/// theta sits exactly on a double-collision ray with C != 0.
pub fn residual_mcgehee(
    params: &ModelParams,
    conv: Convention,
    c_ang: f64,
    h: f64,
    s: &McGeheeState,
) -> Result<f64> {
    let h = physical_h(params, conv, h);
    let ang = model::eval_angular(params, s.theta)?;
    let c = model::cos_sin(s.theta).0;
    let centrifugal = if s.r == 0.0 {
        0.0
    } else {
        c_ang * c_ang * s.r / (2.0 * c * c)
    };
    Ok(0.5 * (s.u * s.u + s.v * s.v) + centrifugal
        - s.r * s.r * ang.v
        - ang.w
        - h * s.r.powi(3))
}

/// Energy-relation residual in the regularized chart:
/// U w^2 + (v^2 c^3 - 2U) c^3 + (C^2 - 2 r V c^2) r c^4 - 2 h r^3 c^6,
/// written with the boundary-regular combinations U and V c^2 so that it is
/// finite on the whole closed strip including theta = +-pi/2.
pub fn residual_reg(
    params: &ModelParams,
    conv: Convention,
    c_ang: f64,
    h: f64,
    s: &RegState,
) -> Result<f64> {
    let h = physical_h(params, conv, h);
    params.validate()?;
    if !(s.theta.abs() <= FRAC_PI_2) {
        return Err(Error::Domain(format!(
            "theta = {} outside [-pi/2, pi/2]",
            s.theta
        )));
    }
    let (c, sn) = model::cos_sin(s.theta);
    let mu = params.mu();
    let p = c * c + mu * sn * sn;
    let u_val = (0.5 * params.M).powf(1.5)
        * (params.B + 16.0 * params.B1 * c.powi(3) / p.powf(1.5));
    // V cos^2 stays finite at the rays: sqrt(M/2) (A c + 4 A1 c^2 / sqrt(P)).
    let vc2 = (0.5 * params.M).sqrt() * (params.A * c + 4.0 * params.A1 * c * c / p.sqrt());
    let c3 = c.powi(3);
    Ok(u_val * s.w * s.w + (s.v * s.v * c3 - 2.0 * u_val) * c3
        + (c_ang * c_ang - 2.0 * s.r * vc2) * s.r * c.powi(4)
        - 2.0 * h * s.r.powi(3) * c3.powi(2))
}

/// Residual of the collision-manifold relation w^2 + cos^6 v^2/U = 2 cos^3,
/// which replaces the energy relation at r = 0.
pub fn residual_collision(params: &ModelParams, s: &RegState) -> Result<f64> {
    params.validate()?;
    let ang = model::eval_angular(params, s.theta)?;
    let c = model::cos_sin(s.theta).0;
    Ok(s.w * s.w + c.powi(6) * s.v * s.v / ang.u - 2.0 * c.powi(3))
}

/// Residual of the planar energy relation
/// v^2 = 2 h r^3 + 2 V(0) r^2 - C^2 r + 2 W(0).
pub fn residual_planar(
    params: &ModelParams,
    conv: Convention,
    c_ang: f64,
    h: f64,
    r: f64,
    v: f64,
) -> Result<f64> {
    let h = physical_h(params, conv, h);
    let dc = model::derive(params)?;
    Ok(v * v
        - (2.0 * h * r.powi(3) + 2.0 * dc.v0 * r * r - c_ang * c_ang * r + 2.0 * dc.w0))
}
