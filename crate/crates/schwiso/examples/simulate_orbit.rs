//! Integrate one librating orbit in the reduced chart, record its plane
//! crossings and check how well the integrator preserves the energy level.
//!
//! Run with: cargo run --release --example simulate_orbit

use std::fs;
use std::path::Path;

use schwiso::charts::{self, CylState};
use schwiso::export;
use schwiso::flow::{self, Chart, EventKind, EventSpec, IntegrateOpts, RecordMode};
use schwiso::model::{Convention, ModelParams};

fn main() -> schwiso::Result<()> {
    let params = ModelParams::default();
    let c_ang = 3.0;

    // Start near the stable circular solution, displaced radially and
    // kicked out of the plane.
    let y0 = CylState { R: 3.2, z: 0.05, P_R: 0.0, P_z: 0.0 };
    let h = charts::hamiltonian_cyl(&params, Convention::OverM, c_ang, &y0)?;
    println!("energy level h = {h:.12}");

    let events = [EventSpec::record_when(EventKind::PlaneCrossing, 0)];
    let opts = IntegrateOpts {
        record: RecordMode::Stride(10),
        ..IntegrateOpts::default()
    };
    let traj = flow::integrate(
        &params,
        Convention::OverM,
        Chart::Reduced,
        c_ang,
        h,
        &[y0.R, y0.z, y0.P_R, y0.P_z],
        (0.0, 200.0),
        &events,
        &opts,
    )?;

    println!(
        "{:?} after {} accepted steps, max energy residual {:.3e}",
        traj.status, traj.stats.n_accept, traj.stats.max_residual
    );
    println!(
        "{} plane crossings, final state {:?}",
        traj.events.len(),
        traj.last_state()
    );

    fs::create_dir_all("out")?;
    let path = Path::new("out/simulate_orbit.csv");
    export::write_csv_trajectory(path, &traj)?;
    println!("wrote {}", path.display());
    Ok(())
}
