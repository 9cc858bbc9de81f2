use approx::assert_relative_eq;
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_2;

use schwiso::charts::{self, CylState, McGeheeState, RegState};
use schwiso::model::{self, Convention, ModelParams};

fn canonical() -> ModelParams {
    ModelParams::default()
}

#[test]
fn radial_infall_worked_example() {
    // R = 1, z = 0, P_R = -1: configuration norm r = 2^{-1/2} and scaled
    // radial velocity v = -2^{-1/4}.
    let mc = charts::cyl_to_mcgehee(
        &canonical(),
        &CylState {
            R: 1.0,
            z: 0.0,
            P_R: -1.0,
            P_z: 0.0,
        },
    )
    .unwrap();
    assert_relative_eq!(mc.r, 0.5_f64.sqrt(), max_relative = 1e-15);
    assert_eq!(mc.theta, 0.0);
    assert_relative_eq!(mc.v, -(2.0_f64.powf(-0.25)), max_relative = 1e-15);
    assert_relative_eq!(mc.v, -0.8408964152537145, max_relative = 1e-12);
    assert_eq!(mc.u, 0.0);
}

#[test]
fn configuration_norm_uses_the_mass_metric() {
    let params = canonical();
    let s = CylState {
        R: 1.7,
        z: -0.8,
        P_R: 0.3,
        P_z: 0.9,
    };
    let mc = charts::cyl_to_mcgehee(&params, &s).unwrap();
    let kz = 2.0 * params.M * params.m / (2.0 * params.M + params.m);
    assert_relative_eq!(
        mc.r * mc.r,
        0.5 * params.M * s.R * s.R + kz * s.z * s.z,
        max_relative = 1e-13
    );
    // Scaled kinetic energy (u^2 + v^2)/(2 r^3) equals the physical one.
    let kinetic = s.P_R * s.P_R / params.M
        + (2.0 * params.M + params.m) / (4.0 * params.M * params.m) * s.P_z * s.P_z;
    assert_relative_eq!(
        (mc.u * mc.u + mc.v * mc.v) / (2.0 * mc.r.powi(3)),
        kinetic,
        max_relative = 1e-12
    );
}

#[test]
fn ray_guards_and_domain_errors() {
    let params = canonical();
    assert!(charts::cyl_to_mcgehee(
        &params,
        &CylState {
            R: 0.0,
            z: 1.0,
            P_R: 0.0,
            P_z: 0.0
        }
    )
    .is_err());
    let near_ray = McGeheeState {
        r: 1.0,
        v: 0.0,
        theta: FRAC_PI_2 - 1e-7,
        u: 0.5,
    };
    assert!(charts::mcgehee_to_cyl(&params, &near_ray).is_err());
    assert!(charts::mcgehee_to_reg(&params, &near_ray).is_err());
    assert!(charts::reg_to_mcgehee(
        &params,
        &RegState {
            r: 1.0,
            v: 0.0,
            theta: -FRAC_PI_2 + 1e-7,
            w: 0.1
        }
    )
    .is_err());
}

#[test]
fn regularized_residual_is_finite_on_the_rays() {
    let params = canonical();
    let s = RegState {
        r: 1.0,
        v: 0.3,
        theta: FRAC_PI_2,
        w: 0.2,
    };
    let res = charts::residual_reg(&params, Convention::OverM, 1.5, -0.4, &s).unwrap();
    // Every term except U w^2 carries a positive power of cos(theta).
    let u_boundary = (0.5 * params.M).powf(1.5) * params.B;
    assert_relative_eq!(res, u_boundary * s.w * s.w, max_relative = 1e-14);
    let coll = charts::residual_collision(&params, &s).unwrap();
    assert_relative_eq!(coll, s.w * s.w, max_relative = 1e-14);
}

#[test]
fn energy_conventions() {
    let params = ModelParams {
        M: 2.0,
        ..canonical()
    };
    assert_eq!(charts::physical_h(&params, Convention::OverM, -0.6), -0.6);
    assert_eq!(charts::physical_h(&params, Convention::Bare, -0.6), -0.3);

    let s = CylState {
        R: 1.3,
        z: 0.4,
        P_R: -0.2,
        P_z: 0.7,
    };
    let c_ang = 1.7;
    let over = charts::hamiltonian_cyl(&params, Convention::OverM, c_ang, &s).unwrap();
    let bare = charts::hamiltonian_cyl(&params, Convention::Bare, c_ang, &s).unwrap();
    assert_relative_eq!(bare, params.M * over, max_relative = 1e-14);
    assert_relative_eq!(
        charts::physical_h(&params, Convention::Bare, bare),
        over,
        max_relative = 1e-14
    );
}

#[test]
fn planar_residual_vanishes_on_the_level_set() {
    let params = canonical();
    let dc = model::derive(&params).unwrap();
    let (c_ang, h, r): (f64, f64, f64) = (2.0, -1.0, 0.7);
    let g = 2.0 * h * r.powi(3) + 2.0 * dc.v0 * r * r - c_ang * c_ang * r + 2.0 * dc.w0;
    let res =
        charts::residual_planar(&params, Convention::OverM, c_ang, h, r, g.sqrt()).unwrap();
    assert!(res.abs() < 1e-14);
}

proptest! {
    #[test]
    fn cylindrical_round_trip(
        big_r in 0.05_f64..4.0,
        z in -3.0_f64..3.0,
        p_r in -3.0_f64..3.0,
        p_z in -3.0_f64..3.0,
    ) {
        let params = canonical();
        let s = CylState { R: big_r, z, P_R: p_r, P_z: p_z };
        let mc = charts::cyl_to_mcgehee(&params, &s).unwrap();
        let back = charts::mcgehee_to_cyl(&params, &mc).unwrap();
        for (a, b) in [(s.R, back.R), (s.z, back.z), (s.P_R, back.P_R), (s.P_z, back.P_z)] {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
        let reg = charts::cyl_to_reg(&params, &s).unwrap();
        let back2 = charts::reg_to_cyl(&params, &reg).unwrap();
        for (a, b) in [(s.R, back2.R), (s.z, back2.z), (s.P_R, back2.P_R), (s.P_z, back2.P_z)] {
            prop_assert!((a - b).abs() <= 1e-11 * a.abs().max(1.0));
        }
    }

    #[test]
    fn regularized_round_trip(
        r in 0.01_f64..5.0,
        v in -3.0_f64..3.0,
        theta in -1.5_f64..1.5,
        w in -2.0_f64..2.0,
    ) {
        let params = canonical();
        let s = RegState { r, v, theta, w };
        let mc = charts::reg_to_mcgehee(&params, &s).unwrap();
        let back = charts::mcgehee_to_reg(&params, &mc).unwrap();
        prop_assert!((s.w - back.w).abs() <= 1e-12 * s.w.abs().max(1.0));
        prop_assert_eq!(s.r, back.r);
        prop_assert_eq!(s.v, back.v);
        prop_assert_eq!(s.theta, back.theta);
    }

    #[test]
    fn energy_agrees_across_charts(
        big_r in 0.1_f64..3.0,
        z in -2.0_f64..2.0,
        p_r in -2.0_f64..2.0,
        p_z in -2.0_f64..2.0,
        c_ang in 0.0_f64..3.0,
    ) {
        let params = canonical();
        let s = CylState { R: big_r, z, P_R: p_r, P_z: p_z };
        let h = charts::hamiltonian_cyl(&params, Convention::OverM, c_ang, &s).unwrap();
        let mc = charts::cyl_to_mcgehee(&params, &s).unwrap();
        let reg = charts::mcgehee_to_reg(&params, &mc).unwrap();
        let res_cyl = charts::residual_cyl(&params, Convention::OverM, c_ang, h, &s).unwrap();
        let res_mc = charts::residual_mcgehee(&params, Convention::OverM, c_ang, h, &mc).unwrap();
        let res_reg = charts::residual_reg(&params, Convention::OverM, c_ang, h, &reg).unwrap();
        prop_assert_eq!(res_cyl, 0.0);
        prop_assert!(res_mc.abs() <= 1e-9 * (1.0 + h.abs()));
        prop_assert!(res_reg.abs() <= 1e-9 * (1.0 + h.abs()));
    }

    #[test]
    fn rotation_rates_agree(
        big_r in 0.1_f64..3.0,
        z in -2.0_f64..2.0,
        c_ang in 0.0_f64..3.0,
    ) {
        let params = canonical();
        let s = CylState { R: big_r, z, P_R: 0.0, P_z: 0.0 };
        let mc = charts::cyl_to_mcgehee(&params, &s).unwrap();
        let lhs = charts::phi_rate_cyl(&params, c_ang, &s);
        let rhs = charts::phi_rate_polar(mc.r, mc.theta, c_ang);
        prop_assert!((lhs - rhs).abs() <= 1e-11 * lhs.abs().max(1e-300));
    }
}
