//! Circular solutions of the reduced problem on both sides of the fold:
//! radii, energies and the linearized spectra that decide their stability.
//!
//! Run with: cargo run --release --example relative_equilibria

use schwiso::equilibria;
use schwiso::model::{self, Convention, ModelParams};

fn main() -> schwiso::Result<()> {
    let params = ModelParams::default();
    let dc = model::derive(&params)?;
    println!("alpha = {}, beta = {}, fold at C0 = {:.12}", dc.alpha, dc.beta, dc.c0);

    for c in [0.8 * dc.c0, dc.c0, 3.0, 4.5] {
        let eqs = equilibria::relative_equilibria(&params, Convention::OverM, c)?;
        println!("\nC = {c:.6}");
        if eqs.is_empty() {
            println!("  no relative equilibria (below the fold)");
            continue;
        }
        for eq in &eqs {
            let lams: Vec<String> = eq
                .eigenvalues
                .iter()
                .map(|l| format!("{:+.3e}{:+.3e}i", l.re, l.im))
                .collect();
            println!(
                "  R = {:<20.15} h = {:<20.15} {:<10} [{}]",
                eq.R,
                eq.h,
                format!("{:?}", eq.kind),
                lams.join(", ")
            );
        }
    }
    Ok(())
}
