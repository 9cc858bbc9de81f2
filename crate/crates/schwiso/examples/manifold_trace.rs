//! Shoot both unstable branches of each double-collision saddle along the
//! collision-manifold flow and report where they land: the adjacent edge,
//! the far edge past the spiral sink, or the sink itself.
//!
//! Run with: cargo run --release --example manifold_trace

use schwiso::manifold::{self, CmClass, CmName, TraceBranch, TraceOpts};
use schwiso::model::ModelParams;

fn main() -> schwiso::Result<()> {
    let params = ModelParams::default();
    let eqs = manifold::cm_equilibria(&params, 0.0)?;

    let saddles = [CmName::Eplus, CmName::Eminus, CmName::EplusStar, CmName::EminusStar];
    for name in saddles {
        let eq = eqs
            .iter()
            .find(|e| e.name == name && e.classification == CmClass::Saddle)
            .expect("saddle present");
        for branch in [TraceBranch::WPos, TraceBranch::WNeg] {
            let outcome = manifold::trace_manifold(&params, eq, branch, &TraceOpts::default())?;
            println!(
                "{:<11} {:?}: {} samples, lands in {:?} (confirmation {:?})",
                name.to_string(),
                branch,
                outcome.trajectory.samples.len(),
                outcome.class,
                outcome.confirm_class
            );
        }
    }

    println!("\nthe inward branches of the starred saddles spiral into Q*,");
    println!("the inward branches of the upper saddles cross to the far edge");
    Ok(())
}
