use approx::assert_relative_eq;
use std::f64::consts::PI;

use schwiso::charts::RegState;
use schwiso::equilibria;
use schwiso::error::Error;
use schwiso::model::{self, Convention, ModelParams};
use schwiso::orbits::{
    self, ClassifyOpts, Fate, FateJob, HomographicCase, PlanarCase, PlanarKind, StopReason,
};

fn canonical() -> ModelParams {
    ModelParams::default()
}

#[test]
fn level_curves_funnel_into_the_collision_corridor() {
    let params = canonical();
    let dc = model::derive(&params).unwrap();
    let c = dc.c0 - 0.5;

    let pts = orbits::planar_curve(&params, Convention::OverM, c, 0.0, (0.5, 1.5), 3).unwrap();
    assert_eq!(pts.len(), 3);
    assert_eq!(pts[1].r, 1.0);
    assert_relative_eq!(pts[1].v.unwrap(), 2.180859362072822, max_relative = 1e-12);

    // Every level curve enters r = 0 at v = +-sqrt(2 W(0)).
    for (c, h) in [(0.0, -1.0), (2.0, 0.5), (3.1, -2.0)] {
        let pts =
            orbits::planar_curve(&params, Convention::OverM, c, h, (1e-10, 1.0), 2).unwrap();
        assert_relative_eq!(
            pts[0].v.unwrap(),
            (2.0 * dc.w0).sqrt(),
            max_relative = 1e-6
        );
    }

    // For h < 0 the curve is cut off at the outermost turning point.
    let tp = orbits::planar_turning_points(&params, Convention::OverM, c, -1.0).unwrap();
    assert_eq!(tp.len(), 1);
    assert_relative_eq!(tp[0], 2.8569050956747155, max_relative = 1e-10);
    let pts = orbits::planar_curve(&params, Convention::OverM, c, -1.0, (0.1, 5.0), 200).unwrap();
    for p in &pts {
        let rad = -2.0 * p.r.powi(3) + 2.0 * dc.v0 * p.r * p.r - c * c * p.r + 2.0 * dc.w0;
        match p.v {
            Some(v) => {
                assert!(p.r < tp[0] + 1e-9);
                assert_relative_eq!(v * v, rad, max_relative = 1e-12, epsilon = 1e-12);
            }
            None => assert!(p.r > tp[0] - 1e-9),
        }
    }

    // The convention flag only rescales the energy argument.
    let heavy = ModelParams {
        M: 2.0,
        ..canonical()
    };
    let a = orbits::planar_curve(&heavy, Convention::Bare, 2.0, -1.0, (0.2, 3.0), 40).unwrap();
    let b = orbits::planar_curve(&heavy, Convention::OverM, 2.0, -0.5, (0.2, 3.0), 40).unwrap();
    for (pa, pb) in a.iter().zip(&b) {
        assert_eq!(pa.r, pb.r);
        assert_eq!(pa.v.is_some(), pb.v.is_some());
        if let (Some(va), Some(vb)) = (pa.v, pb.v) {
            assert_relative_eq!(va, vb, max_relative = 1e-14);
        }
    }

    assert!(orbits::planar_curve(&params, Convention::OverM, 2.0, 0.0, (0.0, 1.0), 5).is_err());
    assert!(orbits::planar_curve(&params, Convention::OverM, 2.0, 0.0, (1.0, 0.5), 5).is_err());
    assert!(orbits::planar_curve(&params, Convention::OverM, 2.0, 0.0, (0.5, 1.0), 1).is_err());
}

#[test]
fn rest_points_split_by_angular_momentum() {
    let params = canonical();
    let dc = model::derive(&params).unwrap();

    let reg = orbits::planar_equilibria(&params, 2.0, Some(-1.0)).unwrap();
    assert!(reg.equilibria.is_empty());
    assert_eq!(reg.case, Some(PlanarCase::Aa));
    let reg = orbits::planar_equilibria(&params, 2.0, Some(0.0)).unwrap();
    assert_eq!(reg.case, Some(PlanarCase::Ab));
    assert_eq!(orbits::planar_equilibria(&params, 2.0, None).unwrap().case, None);

    let reg = orbits::planar_equilibria(&params, dc.c0, Some(-1.0)).unwrap();
    assert_eq!(reg.case, Some(PlanarCase::BCase));
    assert_eq!(reg.equilibria.len(), 1);
    assert_eq!(reg.equilibria[0].kind, PlanarKind::Degenerate);
    assert_relative_eq!(
        reg.equilibria[0].r,
        dc.c0 * dc.c0 / (2.0 * dc.v0),
        max_relative = 1e-12
    );

    let reg = orbits::planar_equilibria(&params, 3.0, Some(-0.5)).unwrap();
    assert_eq!(reg.case, Some(PlanarCase::Ca));
    assert_eq!(
        orbits::planar_equilibria(&params, 3.0, Some(0.1)).unwrap().case,
        Some(PlanarCase::Cb)
    );
    assert_eq!(reg.equilibria.len(), 2);
    let (saddle, center) = (&reg.equilibria[0], &reg.equilibria[1]);
    assert_eq!(saddle.kind, PlanarKind::Saddle);
    assert_eq!(center.kind, PlanarKind::Center);
    assert_relative_eq!(saddle.r, 0.4981955368943023, max_relative = 1e-10);
    assert_relative_eq!(center.r, 2.0473888753772687, max_relative = 1e-10);
    for p in &reg.equilibria {
        let prod = p.r * (9.0 - 2.0 * p.r * dc.v0);
        for lam in &p.eigenvalues {
            let sq = lam * lam;
            assert_relative_eq!(sq.re, prod, max_relative = 1e-10);
            assert!(sq.im.abs() <= 1e-12);
        }
    }

    // The rest points are the circular solutions seen through the scaled
    // radius r = sqrt(M/2) R, at the same energies.
    let rel = equilibria::relative_equilibria(&params, Convention::OverM, 3.0).unwrap();
    assert_relative_eq!(saddle.r, 0.5_f64.sqrt() * rel[0].R, max_relative = 1e-10);
    assert_relative_eq!(center.r, 0.5_f64.sqrt() * rel[1].R, max_relative = 1e-10);
    let level =
        |r: f64| (9.0 * r / 2.0 - dc.v0 * r * r - dc.w0) / r.powi(3);
    assert_relative_eq!(level(saddle.r), rel[0].h, max_relative = 1e-10);
    assert_relative_eq!(level(center.r), rel[1].h, max_relative = 1e-10);

    assert!(orbits::planar_equilibria(&params, -1.0, None).is_err());
}

#[test]
fn constant_shape_angles_are_excluded() {
    let params = canonical();
    let dc = model::derive(&params).unwrap();

    let rep = orbits::homographic_admissible(&params, 1.3, 0.0).unwrap();
    assert!(rep.admissible);
    assert_eq!(rep.case, HomographicCase::Planar);
    assert_eq!(rep.witness, 0.0);

    let tv = dc.theta_v.unwrap();
    for t in [tv, -tv] {
        let rep = orbits::homographic_admissible(&params, 1.0, t).unwrap();
        assert!(!rep.admissible);
        assert_eq!(rep.case, HomographicCase::ThetaVCnonzero);
        assert!(rep.witness < 0.0, "forced r0^2 = {}", rep.witness);

        let rep = orbits::homographic_admissible(&params, 0.0, t).unwrap();
        assert!(!rep.admissible);
        assert_eq!(rep.case, HomographicCase::ThetaVC0);
        assert!(rep.witness.abs() > 1e-3);
    }

    let rep = orbits::homographic_admissible(&params, 1.0, 0.2).unwrap();
    assert!(!rep.admissible);
    assert_eq!(rep.case, HomographicCase::GenericTheta);
    assert!(rep.witness > 1e-3);

    // Scan across the interior: only the planar angle survives.
    for k in 0..=100 {
        let theta0 = (k as f64 - 50.0) * 0.028;
        let rep = orbits::homographic_admissible(&params, 1.0, theta0).unwrap();
        assert_eq!(rep.admissible, theta0 == 0.0, "theta0 = {theta0}");
    }

    assert!(orbits::homographic_admissible(&params, 1.0, 1.6).is_err());
}

#[test]
fn sink_region_examples() {
    let params = canonical();
    let state = |r: f64, v: f64| RegState {
        r,
        v,
        theta: 0.3,
        w: -0.1,
    };
    assert!(orbits::sink_predicate(&params, 2.0, &state(0.5, -1.0)).unwrap());
    assert!(!orbits::sink_predicate(&params, 2.0, &state(1.0, -1.0)).unwrap());
    assert!(!orbits::sink_predicate(&params, 2.0, &state(0.5, 1.0)).unwrap());
}

#[test]
fn winding_blows_up_toward_collision() {
    let params = canonical();
    let dc = model::derive(&params).unwrap();
    let c = dc.c0 - 0.5;
    let apex = orbits::planar_turning_points(&params, Convention::OverM, c, -1.0).unwrap()[0];

    let shallow =
        orbits::planar_collision_winding(&params, Convention::OverM, c, -1.0, apex, 0.0, 1e-4)
            .unwrap();
    let deep =
        orbits::planar_collision_winding(&params, Convention::OverM, c, -1.0, apex, 0.0, 1e-5)
            .unwrap();
    assert!(deep > 20.0 * PI, "winding {deep} too small");
    assert!(deep > shallow && shallow > 0.0);

    // Rectilinear orbits accumulate no angle at all.
    let straight = orbits::planar_collision_winding(
        &params,
        Convention::OverM,
        0.0,
        -1.0,
        1.0,
        -2.7340868435182775,
        1e-6,
    )
    .unwrap();
    assert_eq!(straight, 0.0);

    assert!(matches!(
        orbits::planar_collision_winding(&params, Convention::OverM, c, -1.0, 1e-6, 0.0, 1e-5),
        Err(Error::Domain(_))
    ));
    assert!(matches!(
        orbits::planar_collision_winding(&params, Convention::OverM, c, -1.0, 1.0, 0.0, 1e-5),
        Err(Error::Inconsistent(_))
    ));
}

#[test]
fn planar_infall_spirals_into_the_funnel() {
    let params = canonical();
    let dc = model::derive(&params).unwrap();
    let c = dc.c0 - 0.5;
    let apex = orbits::planar_turning_points(&params, Convention::OverM, c, -1.0).unwrap()[0];
    let state = RegState {
        r: apex,
        v: 0.0,
        theta: 0.0,
        w: 0.0,
    };
    let rep = orbits::classify_fate(
        &params,
        Convention::OverM,
        c,
        -1.0,
        &state,
        &ClassifyOpts::default(),
    )
    .unwrap();
    assert_eq!(rep.fate, Fate::TripleCollisionQstar);
    assert_eq!(rep.diagnostics.stop, StopReason::Detection);
    assert_eq!(rep.plane_crossings, 0);
    assert!(rep.limiting_theta.unwrap().abs() < 1e-9);
    assert!(rep.winding > 1.0);
    assert!(rep.double_r.is_none());
    assert!(rep.diagnostics.r_max_increase <= 1e-12);
    // Raw residual drift against energy terms of size ~50.
    assert!(
        rep.diagnostics.max_residual < 1e-6,
        "max_residual = {:.3e}",
        rep.diagnostics.max_residual
    );
}

// Level energy of a state with w = 0 on the plane-orthogonal slice, read
// off the regularized energy relation.
fn level_h(params: &ModelParams, c_ang: f64, state: &RegState) -> f64 {
    let ang = model::eval_angular(params, state.theta).unwrap();
    let ct = state.theta.cos();
    ((ang.u * state.w * state.w / ct.powi(6) + state.v * state.v) / 2.0
        + c_ang * c_ang * state.r / (2.0 * ct * ct)
        - state.r * state.r * ang.v
        - ang.w)
        / state.r.powi(3)
}

#[test]
fn double_collision_from_the_absorbing_region() {
    let params = canonical();
    // Close to the ray the pull of the binary beats the centrifugal push
    // as long as C^2 < 3 U(theta)/(r cos theta); C = 1.2 at r = 0.3 sits
    // inside both that bound and the sink region.
    let c = 1.2;
    let state = RegState {
        r: 0.3,
        v: -0.5,
        theta: 1.5,
        w: 0.0,
    };
    let h = level_h(&params, c, &state);
    assert!(orbits::sink_predicate(&params, c, &state).unwrap());

    let rep =
        orbits::classify_fate(&params, Convention::OverM, c, h, &state, &ClassifyOpts::default())
            .unwrap();
    assert_eq!(rep.fate, Fate::DoubleCollisionBpmR);
    let double_r = rep.double_r.unwrap();
    assert!(double_r > 0.0 && double_r < state.r);
    assert!(rep.limiting_theta.unwrap() > 1.4);
    assert_eq!(rep.plane_crossings, 0);
    assert_eq!(rep.diagnostics.crossings_last_decade, 0);
    // Inside the absorbing region both r and v keep falling.
    assert!(rep.diagnostics.r_max_increase <= 1e-9);
    assert!(rep.diagnostics.v_max_increase <= 1e-9);
}

#[test]
fn fates_mirror_under_reflection() {
    let params = canonical();

    let cases = [
        // A double-collision infall and a shallow off-plane launch.
        (
            1.2,
            RegState {
                r: 0.3,
                v: -0.5,
                theta: 1.5,
                w: 0.0,
            },
        ),
        (
            2.0,
            RegState {
                r: 0.2,
                v: -0.3,
                theta: 0.4,
                w: 0.0,
            },
        ),
    ];

    for (c, state) in cases {
        let h = level_h(&params, c, &state);
        let mirror = RegState {
            r: state.r,
            v: state.v,
            theta: -state.theta,
            w: -state.w,
        };
        let rep = orbits::classify_fate(
            &params,
            Convention::OverM,
            c,
            h,
            &state,
            &ClassifyOpts::default(),
        )
        .unwrap();
        let rep_m = orbits::classify_fate(
            &params,
            Convention::OverM,
            c,
            h,
            &mirror,
            &ClassifyOpts::default(),
        )
        .unwrap();
        assert_eq!(rep.fate, rep_m.fate);
        assert_eq!(rep.plane_crossings, rep_m.plane_crossings);
        assert_relative_eq!(rep.winding, rep_m.winding, max_relative = 1e-9);
        if let (Some(a), Some(b)) = (rep.limiting_theta, rep_m.limiting_theta) {
            assert_relative_eq!(a, -b, max_relative = 1e-9, epsilon = 1e-12);
        }
    }
}

#[test]
fn librating_orbit_reports_bounded() {
    let params = canonical();
    let h = -0.7933920751733298 + 0.05;
    let tp = orbits::planar_turning_points(&params, Convention::OverM, 3.0, h).unwrap();
    assert_eq!(tp.len(), 3);
    let state = RegState {
        r: tp[2],
        v: 0.0,
        theta: 0.0,
        w: 0.0,
    };
    let opts = ClassifyOpts {
        budget: 20_000,
        ..ClassifyOpts::default()
    };
    let rep = orbits::classify_fate(&params, Convention::OverM, 3.0, h, &state, &opts).unwrap();
    assert_eq!(rep.fate, Fate::Bounded);
    assert_eq!(rep.diagnostics.stop, StopReason::Budget);
    assert!(rep.limiting_theta.is_none());
    let r_end = rep.diagnostics.terminal_state.r;
    assert!(r_end > 0.9 * tp[1] && r_end < 1.1 * tp[2]);
}

#[test]
fn classifier_rejects_off_level_states() {
    let params = canonical();
    let bad = RegState {
        r: 1.0,
        v: 0.0,
        theta: 0.0,
        w: 0.0,
    };
    assert!(matches!(
        orbits::classify_fate(
            &params,
            Convention::OverM,
            0.0,
            -1.0,
            &bad,
            &ClassifyOpts::default()
        ),
        Err(Error::Inconsistent(_))
    ));
    let negative_r = RegState {
        r: -1.0,
        v: 0.0,
        theta: 0.0,
        w: 0.0,
    };
    assert!(matches!(
        orbits::classify_fate(
            &params,
            Convention::OverM,
            0.0,
            -1.0,
            &negative_r,
            &ClassifyOpts::default()
        ),
        Err(Error::Domain(_))
    ));
}

#[test]
fn batch_preserves_order_and_reports_the_failing_job() {
    let params = canonical();
    let dc = model::derive(&params).unwrap();
    let c = dc.c0 - 0.5;
    let apex = orbits::planar_turning_points(&params, Convention::OverM, c, -1.0).unwrap()[0];
    let slow = FateJob {
        C: c,
        h: -1.0,
        state0: RegState {
            r: apex,
            v: 0.0,
            theta: 0.0,
            w: 0.0,
        },
    };
    let infall = RegState {
        r: 0.3,
        v: -0.5,
        theta: 1.5,
        w: 0.0,
    };
    let fast = FateJob {
        C: 1.2,
        h: level_h(&params, 1.2, &infall),
        state0: infall,
    };

    let reports = orbits::classify_batch(
        &params,
        Convention::OverM,
        &[slow, fast],
        &ClassifyOpts::default(),
    )
    .unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0].fate, Fate::TripleCollisionQstar);
    assert_eq!(reports[1].fate, Fate::DoubleCollisionBpmR);

    let bad = FateJob {
        C: 0.0,
        h: -1.0,
        state0: RegState {
            r: 1.0,
            v: 0.0,
            theta: 0.0,
            w: 0.0,
        },
    };
    let err = orbits::classify_batch(
        &params,
        Convention::OverM,
        &[slow, bad],
        &ClassifyOpts::default(),
    )
    .unwrap_err();
    match err {
        Error::Inconsistent(msg) => assert!(msg.contains("job 1"), "{msg}"),
        other => panic!("unexpected error {other}"),
    }
}
