//! Classify the asymptotic fates of a handful of initial conditions:
//! planar infall into the spiral sink, binary collision at positive
//! radius, a librating bounded orbit and a hyperbolic escape.
//!
//! Run with: cargo run --release --example classify_fates

use schwiso::charts::RegState;
use schwiso::model::{self, Convention, ModelParams};
use schwiso::orbits::{self, ClassifyOpts, FateJob};

/// Energy of a regularized state read off the level relation.
fn level_h(params: &ModelParams, c_ang: f64, s: &RegState) -> f64 {
    let ang = model::eval_angular(params, s.theta).unwrap();
    let ct = s.theta.cos();
    ((ang.u * s.w * s.w / ct.powi(6) + s.v * s.v) / 2.0
        + c_ang * c_ang * s.r / (2.0 * ct * ct)
        - s.r * s.r * ang.v
        - ang.w)
        / s.r.powi(3)
}

fn main() -> schwiso::Result<()> {
    let params = ModelParams::default();
    let dc = model::derive(&params)?;

    let mut jobs = Vec::new();
    let mut labels = Vec::new();

    // Planar release from rest below the fold: falls into triple collision.
    let c = dc.c0 - 0.5;
    let apex = orbits::planar_turning_points(&params, Convention::OverM, c, -1.0)?[0];
    jobs.push(FateJob {
        C: c,
        h: -1.0,
        state0: RegState { r: apex, v: 0.0, theta: 0.0, w: 0.0 },
    });
    labels.push(format!("planar infall from r = {apex:.4}"));

    // Deep in the sink region near a ray: the binary collides first.
    let infall = RegState { r: 0.3, v: -0.5, theta: 1.5, w: 0.0 };
    jobs.push(FateJob { C: 1.2, h: level_h(&params, 1.2, &infall), state0: infall });
    labels.push("ray-bound infall at theta = 1.5".into());

    // Released at the outer turning point of the oval around the center.
    let h_lib = -0.7434;
    let tp = orbits::planar_turning_points(&params, Convention::OverM, 3.0, h_lib)?;
    let lib = RegState { r: tp[2], v: 0.0, theta: 0.0, w: 0.0 };
    jobs.push(FateJob { C: 3.0, h: h_lib, state0: lib });
    labels.push(format!("libration between r = {:.4} and {:.4}", tp[1], tp[2]));

    // Positive energy moving outward.
    let esc = RegState { r: 2.0, v: 4.0, theta: 0.1, w: 0.0 };
    jobs.push(FateJob { C: 2.0, h: level_h(&params, 2.0, &esc), state0: esc });
    labels.push("outward launch at h > 0".into());

    let opts = ClassifyOpts { budget: 200_000, ..ClassifyOpts::default() };
    let reports = orbits::classify_batch(&params, Convention::OverM, &jobs, &opts)?;

    for (label, rep) in labels.iter().zip(&reports) {
        println!("{label}");
        println!(
            "  fate {:?} after {} steps ({:?}), winding {:.3} rad, {} plane crossings",
            rep.fate,
            rep.diagnostics.steps,
            rep.diagnostics.stop,
            rep.winding,
            rep.plane_crossings
        );
        if let Some(theta) = rep.limiting_theta {
            println!("  limiting theta {theta:+.6}");
        }
        if let Some(r) = rep.double_r {
            println!("  binary collision at r = {r:.6}");
        }
    }
    Ok(())
}
