use approx::assert_relative_eq;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use schwiso::flow::{self, Chart, IntegrateOpts, Status};
use schwiso::manifold::{self, CmClass, CmName, TangentBasis, TraceBranch, TraceClass, TraceOpts};
use schwiso::model::{self, Convention, ModelParams};

fn canonical() -> ModelParams {
    ModelParams::default()
}

/// Spectrum of the restricted linearization at a collision equilibrium:
/// the radial eigenvalue sign(v) sqrt(2 c^3) next to the roots of
/// lambda^2 - sign(v) sqrt(c^3/2) lambda - (W''(theta_c)/W(theta_c)) c^3.
fn closed_spectrum(params: &ModelParams, theta_c: f64, v: f64) -> Vec<Complex64> {
    let ang = model::eval_angular(params, theta_c).unwrap();
    let c3 = theta_c.cos().powi(3);
    let s_v = v.signum();
    let b = s_v * (c3 / 2.0).sqrt();
    let d = model::d2w(params, theta_c).unwrap() / ang.w * c3;
    let disc = Complex64::from(b * b + 4.0 * d).sqrt();
    vec![
        Complex64::from(s_v * (2.0 * c3).sqrt()),
        (Complex64::from(b) + disc) / 2.0,
        (Complex64::from(b) - disc) / 2.0,
    ]
}

fn assert_spectra_match(numerical: &[Complex64], closed: &[Complex64], tol: f64) {
    let scale: f64 = closed.iter().map(|e| e.norm()).fold(0.0, f64::max);
    let mut remaining = numerical.to_vec();
    for cf in closed {
        let (i, gap) = remaining
            .iter()
            .enumerate()
            .map(|(i, num)| (i, (num - cf).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!(
            gap <= tol * scale,
            "no partner for {cf} within {tol:e} of scale {scale}"
        );
        remaining.swap_remove(i);
    }
}

#[test]
fn six_equilibria_with_closed_spectra() {
    let params = canonical();
    let dc = model::derive(&params).unwrap();
    let theta_w = dc.theta_w.unwrap();
    let v_q = (2.0 * dc.w0).sqrt();
    let v_e = (2.0 * model::eval_angular(&params, theta_w).unwrap().w).sqrt();
    assert_relative_eq!(v_q, 1.5505, max_relative = 1e-4);
    assert_relative_eq!(v_e, 0.43466, max_relative = 1e-4);

    let eqs = manifold::cm_equilibria(&params, 0.0).unwrap();
    let expect = [
        (CmName::Q, 0.0, v_q, CmClass::SpiralSource, (3, 0)),
        (CmName::Qstar, 0.0, -v_q, CmClass::SpiralSink, (0, 3)),
        (CmName::Eplus, theta_w, v_e, CmClass::Saddle, (2, 1)),
        (CmName::Eminus, -theta_w, v_e, CmClass::Saddle, (2, 1)),
        (CmName::EplusStar, theta_w, -v_e, CmClass::Saddle, (1, 2)),
        (CmName::EminusStar, -theta_w, -v_e, CmClass::Saddle, (1, 2)),
    ];
    assert_eq!(eqs.len(), expect.len());
    for (eq, (name, theta, v, class, dims)) in eqs.iter().zip(expect) {
        assert_eq!(eq.name, name);
        assert_eq!(eq.state.r, 0.0);
        assert_eq!(eq.state.w, 0.0);
        assert_relative_eq!(eq.state.theta, theta, max_relative = 1e-12, epsilon = 1e-15);
        assert_relative_eq!(eq.state.v, v, max_relative = 1e-12);
        assert_eq!(eq.classification, class);
        assert_eq!(eq.dims, dims);

        let c3 = theta.cos().powi(3);
        assert_relative_eq!(
            eq.lambda_r,
            v.signum() * (2.0 * c3).sqrt(),
            max_relative = 1e-8
        );
        assert_spectra_match(&eq.eigenvalues, &closed_spectrum(&params, theta, v), 1e-8);
    }

    // The spiral pair sits at Re = +-sqrt(2)/4 for every admissible mass set.
    for eq in &eqs[..2] {
        for lam in eq.eigenvalues.iter().filter(|e| e.im.abs() > 1e-8) {
            assert_relative_eq!(
                lam.re.abs(),
                2.0_f64.sqrt() / 4.0,
                max_relative = 1e-8
            );
        }
    }

    // Outside the regime with an interior critical angle there is no table.
    let flat = ModelParams {
        m: 5.0,
        B: 5.0,
        B1: 0.05,
        ..canonical()
    };
    assert!(manifold::cm_equilibria(&flat, 0.0).is_err());
}

#[test]
fn tangent_bases_agree_where_both_apply() {
    let params = canonical();
    let eqs = manifold::cm_equilibria(&params, 0.0).unwrap();
    for eq in &eqs {
        let (coord, lr_c) =
            manifold::restricted_spectrum(&params, 0.0, &eq.state, TangentBasis::Coordinate)
                .unwrap();
        let (adapted, lr_a) = manifold::restricted_spectrum(
            &params,
            0.0,
            &eq.state,
            TangentBasis::ConstraintAdapted,
        )
        .unwrap();
        assert_eq!(lr_c, lr_a);
        assert_spectra_match(&coord, &adapted, 1e-9);
    }
    assert!(manifold::restricted_spectrum(
        &params,
        1.0,
        &eqs[0].state,
        TangentBasis::Coordinate
    )
    .is_err());
}

#[test]
fn angular_momentum_leaves_the_surface_spectrum_alone() {
    // The collision manifold sits at r = 0 where every C-dependent term of
    // the field carries a factor of r; its flow cannot see C.
    let params = canonical();
    let at0 = manifold::cm_equilibria(&params, 0.0).unwrap();
    let at1 = manifold::cm_equilibria(&params, 1.0).unwrap();
    for (a, b) in at0.iter().zip(&at1) {
        assert_eq!(a.name, b.name);
        assert_eq!(a.state.v, b.state.v);
        assert_eq!(a.state.theta, b.state.theta);
        assert_eq!(a.classification, b.classification);
        assert_eq!(a.dims, b.dims);
        assert_spectra_match(&a.eigenvalues, &b.eigenvalues, 1e-6);
    }
}

#[test]
fn connection_condition_for_the_reference_masses() {
    let params = canonical();
    let rep = manifold::connection_condition(&params).unwrap();
    assert_relative_eq!(rep.lhs, 0.7752681884409843, max_relative = 1e-12);
    assert_relative_eq!(rep.rhs, 1.3004754867574155, max_relative = 1e-12);
    assert_relative_eq!(rep.lhs, (canonicals_w0() / 2.0).sqrt(), max_relative = 1e-12);
    assert!(rep.cond_up_holds);
    assert!(rep.cond_param_holds);
    assert!(rep.agree);

    // The direct comparison and its parameter-only rewrite agree across the
    // admissible region, both where the condition holds and where it fails.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut holds = 0usize;
    for _ in 0..200 {
        let b: f64 = rng.random_range(0.05..5.0);
        let b1: f64 = rng.random_range(0.05..5.0);
        let mu_min = 1.0 + b / (16.0 * b1);
        let mu = mu_min.max(1.5) * (1.0 + rng.random_range(0.01_f64..1.0).powi(2) * 100.0);
        let params = ModelParams {
            m: 2.0 / (mu - 1.0),
            B: b,
            B1: b1,
            ..canonical()
        };
        let rep = manifold::connection_condition(&params).unwrap();
        assert!(rep.agree, "B = {b}, B1 = {b1}, mu = {mu}");
        holds += rep.cond_up_holds as usize;
    }
    assert!(holds > 0 && holds < 200);
}

fn canonicals_w0() -> f64 {
    model::derive(&canonical()).unwrap().w0
}

#[test]
fn saddle_branches_fall_to_the_matching_edge() {
    let params = canonical();
    let eqs = manifold::cm_equilibria(&params, 0.0).unwrap();
    let opts = TraceOpts::default();

    // Outward branches fall straight to the adjacent edge. Inward branches
    // from the upper saddles pass above the spiral sink and still reach the
    // far edge (the connection the condition above certifies); the starred
    // saddles sit below, so their inward branches wind into the sink.
    let expect = [
        (CmName::Eplus, TraceBranch::WPos, TraceClass::BPlus0),
        (CmName::Eplus, TraceBranch::WNeg, TraceClass::BMinus0),
        (CmName::Eminus, TraceBranch::WPos, TraceClass::BPlus0),
        (CmName::Eminus, TraceBranch::WNeg, TraceClass::BMinus0),
        (CmName::EplusStar, TraceBranch::WPos, TraceClass::BPlus0),
        (CmName::EplusStar, TraceBranch::WNeg, TraceClass::Qstar),
        (CmName::EminusStar, TraceBranch::WPos, TraceClass::Qstar),
        (CmName::EminusStar, TraceBranch::WNeg, TraceClass::BMinus0),
    ];
    for (name, branch, class) in expect {
        let eq = eqs.iter().find(|e| e.name == name).unwrap();
        assert_eq!(eq.classification, CmClass::Saddle);
        let out = manifold::trace_manifold(&params, eq, branch, &opts).unwrap();
        assert_eq!(out.class, class, "{name} {branch:?}");
        assert_eq!(out.confirm_class, Some(class), "{name} {branch:?}");

        let audit = manifold::gradient_like_audit(&out.trajectory).unwrap();
        assert!(
            audit.monotone,
            "{name} {branch:?}: v rose by {}",
            audit.max_violation
        );
    }

    // Only saddles carry a one-dimensional unstable manifold on the surface.
    assert!(manifold::trace_manifold(&params, &eqs[0], TraceBranch::WPos, &opts).is_err());
    let bad_eps = TraceOpts {
        eps: 1e-3,
        ..TraceOpts::default()
    };
    assert!(manifold::trace_manifold(&params, &eqs[2], TraceBranch::WPos, &bad_eps).is_err());
}

#[test]
fn profile_through_the_origin_clears_the_corner() {
    let params = canonical();
    let dc = model::derive(&params).unwrap();
    let theta_w = dc.theta_w.unwrap();

    // Slope at the origin in closed form.
    let slope = flow::vector_field(&params, Convention::OverM, Chart::Profile, 0.0, 0.0, &[0.0])
        .unwrap()[0];
    assert_relative_eq!(slope, -(dc.w0 / 2.0).sqrt(), max_relative = 1e-13);

    let traj = manifold::profile_curve(&params, 0.0).unwrap();
    assert_eq!(traj.status, Status::CompletedSpan);

    let f = |theta: f64, v: f64| -> f64 {
        let w = model::eval_angular(&params, theta).unwrap().w;
        -((w - v * v / 2.0) / 2.0).sqrt()
    };
    let mut checked = 0usize;
    for pair in traj.samples.windows(2) {
        let (t0, v0) = (pair[0].param, pair[0].state[0]);
        let (t1, v1) = (pair[1].param, pair[1].state[0]);
        assert!(t1 > t0);
        assert!(v1 < v0, "profile not strictly decreasing at theta = {t0}");
        let boundary = -(2.0 * model::eval_angular(&params, t0).unwrap().w).sqrt();
        assert!(v0 > boundary);
        if t1 - t0 < 0.02 {
            let mid = f((t0 + t1) / 2.0, (v0 + v1) / 2.0);
            assert!(
                ((v1 - v0) / (t1 - t0) - mid).abs() <= 1e-2 * (1.0 + mid.abs()),
                "slope off the defining equation near theta = {t0}"
            );
            checked += 1;
        }
    }
    assert!(checked > 50);

    // Above the saddle corner with room to spare, as the connection
    // condition promises for these masses.
    let at_corner = traj
        .samples
        .windows(2)
        .find(|p| p[0].param <= theta_w && theta_w < p[1].param)
        .map(|p| {
            let frac = (theta_w - p[0].param) / (p[1].param - p[0].param);
            p[0].state[0] + frac * (p[1].state[0] - p[0].state[0])
        })
        .unwrap();
    let corner = -(2.0 * model::eval_angular(&params, theta_w).unwrap().w).sqrt();
    assert!(
        at_corner - corner > 0.3,
        "margin {} too small",
        at_corner - corner
    );

    assert!(manifold::profile_curve(&params, (2.0 * dc.w0).sqrt()).is_err());
    assert!(manifold::profile_curve(&params, -2.0).is_err());
}

#[test]
fn audit_rejects_other_charts() {
    let params = canonical();
    let traj = flow::integrate(
        &params,
        Convention::OverM,
        Chart::Reduced,
        3.0,
        0.0,
        &[2.9, 0.0, 0.0, 0.0],
        (0.0, 0.1),
        &[],
        &IntegrateOpts::default(),
    )
    .unwrap();
    assert!(manifold::gradient_like_audit(&traj).is_err());
}
