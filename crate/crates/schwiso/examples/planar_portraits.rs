//! Phase portraits of the planar subsystem on both sides of the fold:
//! below C0 every negative-energy orbit ejects from and falls back into
//! triple collision; above C0 a saddle and a center appear and the
//! separatrix bounds an oval of librating orbits.
//!
//! Run with: cargo run --release --example planar_portraits

use std::fs;
use std::path::Path;

use schwiso::export::{self, SvgSeries};
use schwiso::model::{self, Convention, ModelParams};
use schwiso::orbits;

fn main() -> schwiso::Result<()> {
    let params = ModelParams::default();
    let dc = model::derive(&params)?;
    fs::create_dir_all("out")?;

    let families = [
        ("below the fold", "out/planar_below_c0", dc.c0 - 0.5, vec![1.0, 0.0, -1.0, -5.0]),
        ("above the fold", "out/planar_above_c0", 3.0, vec![0.5, 0.0, -0.5, -0.7434, -0.9]),
    ];

    for (label, stem, c, levels) in families {
        let regime = orbits::planar_equilibria(&params, c, Some(levels[0]))?;
        println!("C = {c:.6} ({label}): {} rest points", regime.equilibria.len());
        for p in &regime.equilibria {
            println!("  r = {:.12} {:?}", p.r, p.kind);
        }

        let r_hi = levels
            .iter()
            .filter_map(|&h| {
                orbits::planar_turning_points(&params, Convention::OverM, c, h)
                    .ok()
                    .and_then(|tp| tp.last().copied())
            })
            .fold(4.0_f64, f64::max);
        let mut curves = Vec::new();
        for &h in &levels {
            let pts =
                orbits::planar_curve(&params, Convention::OverM, c, h, (1e-3, 1.3 * r_hi), 1500)?;
            curves.push((h, pts));
        }
        let csv = format!("{stem}.csv");
        export::write_csv_curves(Path::new(&csv), &curves)?;

        // Close each curve across the v -> -v symmetry for the sketch.
        let series: Vec<SvgSeries> = curves
            .iter()
            .map(|(h, pts)| {
                let mut loop_pts = Vec::new();
                for p in pts {
                    if let Some(v) = p.v {
                        loop_pts.push((p.r, v));
                    }
                }
                for p in pts.iter().rev() {
                    if let Some(v) = p.v {
                        loop_pts.push((p.r, -v));
                    }
                }
                SvgSeries {
                    label: format!("h = {h}"),
                    points: loop_pts,
                }
            })
            .collect();
        let svg = format!("{stem}.svg");
        export::write_svg(Path::new(&svg), &format!("planar curves, C = {c:.4}"), &series)?;
        println!("  wrote {csv} and {svg}");
    }
    Ok(())
}
