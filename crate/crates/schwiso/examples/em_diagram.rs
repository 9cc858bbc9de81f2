//! Energy-momentum diagram of the circular solutions: sweep the radius,
//! collect the (C, h) locus with its branch labels and write it as CSV.
//! The cusp of the locus sits exactly at the fold C0.
//!
//! Run with: cargo run --release --example em_diagram

use std::fs;
use std::path::Path;

use schwiso::equilibria;
use schwiso::export;
use schwiso::model::{self, Convention, ModelParams};

fn main() -> schwiso::Result<()> {
    let params = ModelParams::default();
    let dc = model::derive(&params)?;

    let pts = equilibria::em_diagram(&params, Convention::OverM, 0.05, 50.0, 4000)?;
    fs::create_dir_all("out")?;
    let path = Path::new("out/em_diagram.csv");
    export::write_csv_em(path, &pts)?;

    let cusp = pts
        .iter()
        .min_by(|a, b| a.C.total_cmp(&b.C))
        .expect("non-empty sweep");
    println!("{} points, wrote {}", pts.len(), path.display());
    println!(
        "cusp at C = {:.12} (fold C0 = {:.12}), h = {:.12}, R = {:.12}",
        cusp.C, dc.c0, cusp.h, cusp.R
    );

    // Energies along the two branches near the cusp.
    for p in pts.iter().filter(|p| (p.C - dc.c0).abs() < 0.02).take(6) {
        println!("  {:?}: R = {:.6}, C = {:.8}, h = {:.8}", p.branch, p.R, p.C, p.h);
    }
    Ok(())
}
