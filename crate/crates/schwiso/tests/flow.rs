use approx::assert_relative_eq;
use std::f64::consts::FRAC_PI_2;

use schwiso::charts::{self, CylState, McGeheeState};
use schwiso::flow::dopri5::{Dopri5, StepResult, StepperOpts};
use schwiso::flow::{self, Chart, EventKind, EventSpec, IntegrateOpts, RecordMode, Status};
use schwiso::model::{self, Convention, ModelParams};
use schwiso::numerics;

fn canonical() -> ModelParams {
    ModelParams::default()
}

#[test]
fn stepper_reproduces_the_exponential() {
    let opts = StepperOpts {
        rtol: 1e-12,
        atol: 1e-14,
        ..StepperOpts::default()
    };
    let mut st = Dopri5::new(|_, y, dy| dy[0] = y[0], 0.0, &[1.0], 1.0, opts);
    while !st.finished() {
        match st.step() {
            StepResult::Accepted | StepResult::Finished => {}
            StepResult::Underflow => panic!("underflow on a smooth problem"),
        }
    }
    assert_relative_eq!(st.y()[0], 1.0_f64.exp(), max_relative = 1e-11);
    // Dense output inside the last step window.
    let mut out = [0.0];
    let t_mid = 0.5 * (st.t_old() + st.t());
    st.dense(t_mid, &mut out);
    assert_relative_eq!(out[0], t_mid.exp(), max_relative = 1e-9);
}

#[test]
fn stepper_underflows_at_a_blowup() {
    let opts = StepperOpts::default();
    // y' = y^2 from y(0) = 1 blows up at t = 1; the span extends past it.
    let mut st = Dopri5::new(|_, y, dy| dy[0] = y[0] * y[0], 0.0, &[1.0], 2.0, opts);
    let mut underflowed = false;
    for _ in 0..1_000_000 {
        match st.step() {
            StepResult::Underflow => {
                underflowed = true;
                break;
            }
            StepResult::Finished => break,
            StepResult::Accepted => {}
        }
    }
    assert!(underflowed, "expected step underflow before the singularity");
    assert!(st.t() <= 1.0 + 1e-6);
}

// The energy-relation function scales along the polar flow: off the level
// set it obeys dF/dtau = 3 v F, so F = 0 is invariant but not attracting.
#[test]
fn energy_relation_scales_along_the_flow() {
    let params = canonical();
    let h = -0.4;
    for (c_ang, state) in [
        (0.0, [0.7, -0.3, 0.25, 0.6]),
        (1.5, [0.9, 0.2, -0.8, -0.4]),
        (2.5, [1.4, -0.6, 1.1, 0.3]),
    ] {
        let f = |y: &[f64]| {
            charts::residual_mcgehee(
                &params,
                Convention::OverM,
                c_ang,
                h,
                &McGeheeState {
                    r: y[0],
                    v: y[1],
                    theta: y[2],
                    u: y[3],
                },
            )
            .unwrap()
        };
        let field =
            flow::vector_field(&params, Convention::OverM, Chart::McGehee, c_ang, h, &state)
                .unwrap();
        let df = numerics::fd_directional(f, &state, &field, 1e-6);
        let expected = 3.0 * state[1] * f(&state);
        assert_relative_eq!(df, expected, max_relative = 1e-5, epsilon = 1e-8);
    }
}

#[test]
fn double_collision_rays_are_invariant_lines() {
    let params = canonical();
    for sign in [1.0, -1.0] {
        let state = [0.8, 0.7, sign * FRAC_PI_2, 0.0];
        let field = flow::vector_field(
            &params,
            Convention::OverM,
            Chart::Regularized,
            1.3,
            -0.2,
            &state,
        )
        .unwrap();
        assert_eq!(field[0], 0.0);
        assert_eq!(field[2], 0.0);
        assert_eq!(field[3], 0.0);
        // v decreases at the exact boundary rate -sqrt(U(pi/2)).
        let u_boundary = (0.5 * params.M).powf(1.5) * params.B;
        assert_relative_eq!(field[1], -u_boundary.sqrt(), max_relative = 1e-13);
    }
}

#[test]
fn planar_set_is_invariant() {
    let params = canonical();
    let state = [0.5, -0.3, 0.0, 0.0];
    for chart in [Chart::McGehee, Chart::Regularized] {
        let field =
            flow::vector_field(&params, Convention::OverM, chart, 1.2, -0.5, &state).unwrap();
        assert_eq!(field[2], 0.0);
        assert_eq!(field[3], 0.0);
    }
}

#[test]
fn halting_event_is_localized() {
    let params = canonical();
    // Collision-manifold start on the constraint set with v = 0.
    let theta: f64 = 0.3;
    let c3 = theta.cos().powi(3);
    let y0 = [0.0, theta, (2.0 * c3).sqrt()];
    let traj = flow::integrate(
        &params,
        Convention::OverM,
        Chart::Collision,
        0.0,
        0.0,
        &y0,
        (0.0, 100.0),
        &[EventSpec::halt_when(EventKind::VBelow(-0.5), -1)],
        &IntegrateOpts::default(),
    )
    .unwrap();
    assert_eq!(traj.status, Status::Halted(0));
    let hit = &traj.events[0];
    assert!((hit.state[0] + 0.5).abs() < 1e-9, "v at hit: {}", hit.state[0]);
    assert_eq!(traj.last_param(), hit.param);
}

#[test]
fn recorded_events_do_not_halt() {
    let params = canonical();
    let theta: f64 = -0.2;
    let c3 = theta.cos().powi(3);
    let y0 = [0.5, theta, -(2.0 * c3 * (1.0 - 0.5_f64 * 0.5)).sqrt()];
    // v starts at half the local funnel speed; record plane crossings.
    let v0 = 0.5 * (2.0 * model::eval_angular(&params, theta).unwrap().w).sqrt();
    let y0 = [v0, y0[1], y0[2]];
    let traj = flow::integrate(
        &params,
        Convention::OverM,
        Chart::Collision,
        0.0,
        0.0,
        &y0,
        (0.0, 30.0),
        &[EventSpec::record_when(EventKind::PlaneCrossing, 0)],
        &IntegrateOpts::default(),
    )
    .unwrap();
    assert_eq!(traj.status, Status::CompletedSpan);
    for hit in &traj.events {
        assert!(hit.state[1].abs() < 1e-9);
    }
}

#[test]
fn span_completion_and_step_budget() {
    let params = canonical();
    let cyl = CylState {
        R: 3.0,
        z: 0.2,
        P_R: 0.0,
        P_z: 0.0,
    };
    let h = charts::hamiltonian_cyl(&params, Convention::OverM, 3.0, &cyl).unwrap();
    let y0 = [cyl.R, cyl.z, cyl.P_R, cyl.P_z];
    let traj = flow::integrate(
        &params,
        Convention::OverM,
        Chart::Reduced,
        3.0,
        h,
        &y0,
        (0.0, 5.0),
        &[],
        &IntegrateOpts::default(),
    )
    .unwrap();
    assert_eq!(traj.status, Status::CompletedSpan);
    assert!(traj.stats.max_residual < 1e-8);
    assert!(traj.samples.len() as u64 == traj.stats.n_accept + 1);

    let clipped = flow::integrate(
        &params,
        Convention::OverM,
        Chart::Reduced,
        3.0,
        h,
        &y0,
        (0.0, 5.0),
        &[],
        &IntegrateOpts {
            max_steps: 3,
            ..IntegrateOpts::default()
        },
    )
    .unwrap();
    assert_eq!(clipped.status, Status::MaxSteps);
    assert_eq!(clipped.stats.n_accept, 3);
}

#[test]
fn record_stride_keeps_endpoints() {
    let params = canonical();
    let cyl = CylState {
        R: 3.0,
        z: 0.0,
        P_R: 0.1,
        P_z: 0.0,
    };
    let h = charts::hamiltonian_cyl(&params, Convention::OverM, 3.0, &cyl).unwrap();
    let y0 = [cyl.R, cyl.z, cyl.P_R, cyl.P_z];
    let full = flow::integrate(
        &params,
        Convention::OverM,
        Chart::Reduced,
        3.0,
        h,
        &y0,
        (0.0, 2.0),
        &[],
        &IntegrateOpts::default(),
    )
    .unwrap();
    let strided = flow::integrate(
        &params,
        Convention::OverM,
        Chart::Reduced,
        3.0,
        h,
        &y0,
        (0.0, 2.0),
        &[],
        &IntegrateOpts {
            record: RecordMode::Stride(7),
            ..IntegrateOpts::default()
        },
    )
    .unwrap();
    let ends = flow::integrate(
        &params,
        Convention::OverM,
        Chart::Reduced,
        3.0,
        h,
        &y0,
        (0.0, 2.0),
        &[],
        &IntegrateOpts {
            record: RecordMode::EndpointsOnly,
            ..IntegrateOpts::default()
        },
    )
    .unwrap();
    assert!(strided.samples.len() < full.samples.len());
    assert_eq!(ends.samples.len(), 2);
    for traj in [&full, &strided, &ends] {
        assert_eq!(traj.samples.first().unwrap().param, 0.0);
        assert_relative_eq!(traj.samples.last().unwrap().param, 2.0, max_relative = 1e-12);
        assert_eq!(traj.last_state(), ends.last_state());
    }
}
