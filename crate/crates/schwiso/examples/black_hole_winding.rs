//! Below the fold with 0 < C < C0 every negative-energy planar orbit falls
//! into triple collision while its azimuthal angle diverges: the binary
//! acts as a rotating trap. The accumulated angle grows without bound as
//! the inner cutoff radius shrinks; for C = 0 it is exactly zero.
//!
//! Run with: cargo run --release --example black_hole_winding

use std::f64::consts::PI;

use schwiso::model::{self, Convention, ModelParams};
use schwiso::orbits;

fn main() -> schwiso::Result<()> {
    let params = ModelParams::default();
    let dc = model::derive(&params)?;
    let c = dc.c0 - 0.5;
    let h = -1.0;

    let apex = orbits::planar_turning_points(&params, Convention::OverM, c, h)?[0];
    println!("C = {c:.6} (C0 = {:.6}), h = {h}, release from rest at r = {apex:.12}", dc.c0);
    println!("{:>10}  {:>18}  {:>12}", "r_stop", "winding [rad]", "turns");
    for k in 1..=7 {
        let r_stop = 10f64.powi(-k);
        let phi =
            orbits::planar_collision_winding(&params, Convention::OverM, c, h, apex, 0.0, r_stop)?;
        println!("{:>10.0e}  {:>18.6}  {:>12.3}", r_stop, phi, phi / (2.0 * PI));
    }

    let v0 = -(2.0 * h + 2.0 * dc.v0 + 2.0 * dc.w0).sqrt();
    let straight =
        orbits::planar_collision_winding(&params, Convention::OverM, 0.0, h, 1.0, v0, 1e-7)?;
    println!("\nC = 0 rectilinear infall winds {straight} rad");
    Ok(())
}
