//! The flow on the triple-collision manifold: its six rest points with
//! their spectra, and the inequality that certifies the heteroclinic
//! connection between the double-collision saddles above the sink.
//!
//! Run with: cargo run --release --example collision_manifold

use schwiso::manifold;
use schwiso::model::ModelParams;

fn main() -> schwiso::Result<()> {
    let params = ModelParams::default();

    for eq in manifold::cm_equilibria(&params, 0.0)? {
        let lams: Vec<String> = eq
            .eigenvalues
            .iter()
            .map(|l| format!("{:+.4}{:+.4}i", l.re, l.im))
            .collect();
        println!(
            "{:<11} theta = {:+.8}  v = {:+.8}  {:<12} dims (u, s) = {:?}",
            eq.name.to_string(),
            eq.state.theta,
            eq.state.v,
            format!("{:?}", eq.classification),
            eq.dims
        );
        println!("            spectrum [{}]", lams.join(", "));
    }

    let conn = manifold::connection_condition(&params)?;
    println!(
        "\nconnection condition: sqrt(W(0)/2) = {:.10} {} sqrt(2 W(theta_w))/theta_w = {:.10}",
        conn.lhs,
        if conn.cond_up_holds { "<" } else { ">=" },
        conn.rhs
    );
    println!(
        "parameter form {}: the upper saddle branches pass above the spiral sink",
        if conn.cond_param_holds { "holds" } else { "fails" }
    );
    Ok(())
}
