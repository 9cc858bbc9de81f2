//! Command-line front end. Every analysis is a subcommand writing CSV/JSON
//! (and optional SVG) under the configured output directory; numbers in
//! files carry 17 significant digits so identical configurations reproduce
//! byte-identical artifacts.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use schwiso::charts::{self, CylState, McGeheeState, RegState};
use schwiso::equilibria;
use schwiso::export::{self, SvgSeries};
use schwiso::flow::{self, Chart, IntegrateOpts, RecordMode};
use schwiso::manifold::{self, CmName, TraceBranch, TraceOpts};
use schwiso::model::{self, Convention, ModelParams};
use schwiso::numerics;
use schwiso::orbits::{self, ClassifyOpts, FateJob};
use schwiso::verify;
use schwiso::{Error, Result};

/// Run-wide configuration, read from a single JSON file. Unknown keys are
/// rejected; missing keys take the defaults below.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    params: ModelParams,
    convention: Convention,
    tolerances: Tolerances,
    output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: ModelParams::default(),
            convention: Convention::default(),
            tolerances: Tolerances::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Tolerances {
    rtol: f64,
    atol: f64,
    max_steps: u64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Parser)]
#[command(name = "schwiso", version, about = "Schwarzschild isosceles three-body analyses")]
struct Cli {
    /// JSON run configuration (model parameters, energy convention,
    /// tolerances, output directory)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for the randomized sweeps of `verify`
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the relative equilibria and their stability at fixed angular momentum
    Equilibria {
        #[arg(long, default_value_t = 3.0)]
        c_ang: f64,
    },
    /// Sweep radii and emit the (C, h) locus of relative equilibria as CSV
    EmDiagram {
        #[arg(long, default_value_t = 0.05)]
        r_min: f64,
        #[arg(long, default_value_t = 50.0)]
        r_max: f64,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
    },
    /// Emit the six collision-manifold equilibria with spectra and the
    /// double-collision connection verdict
    Manifold {
        #[arg(long, default_value_t = 0.0)]
        c_ang: f64,
    },
    /// Shoot an invariant-manifold branch of a collision-manifold saddle
    Trace {
        /// Saddle name: Eplus, Eminus, EplusStar or EminusStar
        #[arg(long)]
        name: String,
        /// Branch by initial sign of w: pos or neg
        #[arg(long, default_value = "pos")]
        branch: String,
        #[arg(long, default_value_t = 1e-7)]
        eps: f64,
        #[arg(long, default_value_t = 200.0)]
        sigma_max: f64,
    },
    /// Emit planar phase curves for a list of energies at fixed angular
    /// momentum (defaults reproduce both reference families)
    Planar {
        #[arg(long)]
        c_ang: Option<f64>,
        /// Comma-separated energy levels
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        h_list: Option<Vec<f64>>,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        /// Also write an SVG sketch next to each CSV
        #[arg(long)]
        svg: bool,
    },
    /// Integrate one initial condition and write the trajectory CSV
    Simulate {
        /// Chart: reduced, mcgehee, regularized, collision or planar
        #[arg(long, default_value = "reduced")]
        chart: String,
        #[arg(long, default_value_t = 0.0)]
        c_ang: f64,
        /// Comma-separated state in chart order
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        state: Vec<f64>,
        #[arg(long, default_value_t = 100.0)]
        span: f64,
        /// Keep every n-th accepted step in the CSV
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
    /// Classify the fates of a batch of initial conditions from a JSON file
    Classify {
        /// JSON array of jobs: {"C": .., "h": .., "state0": {"r": .., "v": .., "theta": .., "w": ..}}
        #[arg(long)]
        jobs: PathBuf,
    },
    /// Run the full verification suite; nonzero exit if any check fails
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => Ok(serde_json::from_str(&fs::read_to_string(p)?)?),
        None => Ok(RunConfig::default()),
    }
}

/// Converts a mechanical energy value back to the configured convention.
fn from_physical_h(params: &ModelParams, conv: Convention, h_phys: f64) -> f64 {
    match conv {
        Convention::OverM => h_phys,
        Convention::Bare => h_phys * params.M,
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = load_config(&cli.config)?;
    cfg.params.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let out = |name: &str| cfg.output_dir.join(name);

    match cli.cmd {
        Cmd::Equilibria { c_ang } => {
            let eqs = equilibria::relative_equilibria(&cfg.params, cfg.convention, c_ang)?;
            if eqs.is_empty() {
                println!("no relative equilibria at C = {c_ang} (below the fold)");
            }
            for eq in &eqs {
                let lams: Vec<String> = eq
                    .eigenvalues
                    .iter()
                    .map(|e| format!("{:.6e}{:+.6e}i", e.re, e.im))
                    .collect();
                println!(
                    "R = {:.10e}  h = {:.10e}  {:?}  eigenvalues [{}]",
                    eq.R,
                    eq.h,
                    eq.kind,
                    lams.join(", ")
                );
            }
            let path = out("equilibria.json");
            export::write_json(&path, &json!({ "c_ang": c_ang, "equilibria": eqs }))?;
            println!("wrote {}", path.display());
        }
        Cmd::EmDiagram { r_min, r_max, n } => {
            let pts = equilibria::em_diagram(&cfg.params, cfg.convention, r_min, r_max, n)?;
            let path = out("em_diagram.csv");
            export::write_csv_em(&path, &pts)?;
            println!("{} points, wrote {}", pts.len(), path.display());
        }
        Cmd::Manifold { c_ang } => {
            let eqs = manifold::cm_equilibria(&cfg.params, c_ang)?;
            let conn = manifold::connection_condition(&cfg.params)?;
            for eq in &eqs {
                println!(
                    "{:<11} theta = {:+.6}  v = {:+.6}  {:?}  dims (u, s) = {:?}",
                    eq.name.to_string(),
                    eq.state.theta,
                    eq.state.v,
                    eq.classification,
                    eq.dims
                );
            }
            println!(
                "connection condition: lhs = {:.6} {} rhs = {:.6} (parameter form {})",
                conn.lhs,
                if conn.cond_up_holds { "<" } else { ">=" },
                conn.rhs,
                if conn.cond_param_holds { "holds" } else { "fails" }
            );
            let path = out("manifold.json");
            export::write_json(&path, &json!({ "equilibria": eqs, "connection": conn }))?;
            println!("wrote {}", path.display());
        }
        Cmd::Trace {
            name,
            branch,
            eps,
            sigma_max,
        } => {
            let target = match name.to_ascii_lowercase().as_str() {
                "eplus" | "e+" => CmName::Eplus,
                "eminus" | "e-" => CmName::Eminus,
                "eplusstar" | "e+*" => CmName::EplusStar,
                "eminusstar" | "e-*" => CmName::EminusStar,
                other => {
                    return Err(Error::Config(format!(
                        "no saddle named '{other}' (expected Eplus, Eminus, EplusStar or EminusStar)"
                    )))
                }
            };
            let branch = match branch.to_ascii_lowercase().as_str() {
                "pos" | "wpos" | "+" => TraceBranch::WPos,
                "neg" | "wneg" | "-" => TraceBranch::WNeg,
                other => return Err(Error::Config(format!("branch '{other}' is not pos/neg"))),
            };
            let eqs = manifold::cm_equilibria(&cfg.params, 0.0)?;
            let eq = eqs.iter().find(|e| e.name == target).expect("table complete");
            let opts = TraceOpts {
                eps,
                sigma_max,
                rtol: cfg.tolerances.rtol,
                atol: cfg.tolerances.atol,
                ..TraceOpts::default()
            };
            let outcome = manifold::trace_manifold(&cfg.params, eq, branch, &opts)?;
            let tag = format!(
                "trace_{}_{}",
                target,
                if branch == TraceBranch::WPos { "wpos" } else { "wneg" }
            );
            let csv = out(&format!("{tag}.csv"));
            export::write_csv_trajectory(&csv, &outcome.trajectory)?;
            let meta = out(&format!("{tag}.json"));
            export::write_json(
                &meta,
                &json!({
                    "class": outcome.class,
                    "confirm_class": outcome.confirm_class,
                    "eps": eps,
                }),
            )?;
            println!(
                "{} branch {:?} lands in {:?} (confirmation {:?})",
                target, branch, outcome.class, outcome.confirm_class
            );
            println!("wrote {} and {}", csv.display(), meta.display());
        }
        Cmd::Planar {
            c_ang,
            h_list,
            n,
            svg,
        } => {
            let dc = model::derive(&cfg.params)?;
            let families: Vec<(String, f64, Vec<f64>)> = match (c_ang, h_list) {
                (Some(c), Some(hs)) => vec![("planar".into(), c, hs)],
                (Some(c), None) => vec![("planar".into(), c, default_levels(&cfg, c)?)],
                (None, None) => {
                    // Reference families: below the fold the spread
                    // {1, 0, -1, -5}; above it the spread {1, 0, -0.5,
                    // -0.71, -0.9} at the angular momentum whose separatrix
                    // sits exactly at -0.71.
                    let fam_b = match c_for_separatrix(&cfg, -0.71)? {
                        Some(c) => (c, vec![1.0, 0.0, -0.5, -0.71, -0.9]),
                        None => (1.1 * dc.c0, default_levels(&cfg, 1.1 * dc.c0)?),
                    };
                    vec![
                        (
                            "planar_below_c0".into(),
                            dc.c0 - 0.5,
                            vec![1.0, 0.0, -1.0, -5.0],
                        ),
                        ("planar_above_c0".into(), fam_b.0, fam_b.1),
                    ]
                }
                (None, Some(_)) => {
                    return Err(Error::Config("--h-list requires --c-ang".into()))
                }
            };
            for (tag, c, levels) in families {
                let r_hi = grid_extent(&cfg, c, &levels);
                let mut curves = Vec::new();
                for &h in &levels {
                    curves.push((
                        h,
                        orbits::planar_curve(
                            &cfg.params,
                            cfg.convention,
                            c,
                            h,
                            (1e-3, r_hi),
                            n,
                        )?,
                    ));
                }
                let path = out(&format!("{tag}.csv"));
                export::write_csv_curves(&path, &curves)?;
                println!(
                    "C = {c:.6}, h in {:?}: wrote {}",
                    levels,
                    path.display()
                );
                if svg {
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
                    let spath = out(&format!("{tag}.svg"));
                    export::write_svg(
                        &spath,
                        &format!("planar phase curves, C = {c:.4}"),
                        &series,
                    )?;
                    println!("wrote {}", spath.display());
                }
            }
        }
        Cmd::Simulate {
            chart,
            c_ang,
            state,
            span,
            stride,
        } => {
            let chart = match chart.to_ascii_lowercase().as_str() {
                "reduced" => Chart::Reduced,
                "mcgehee" => Chart::McGehee,
                "regularized" => Chart::Regularized,
                "collision" => Chart::Collision,
                "planar" => Chart::Planar,
                other => {
                    return Err(Error::Config(format!(
                        "chart '{other}' is not reduced/mcgehee/regularized/collision/planar"
                    )))
                }
            };
            if state.len() != chart.dim() {
                return Err(Error::Config(format!(
                    "{:?} needs {} state components, got {}",
                    chart,
                    chart.dim(),
                    state.len()
                )));
            }
            // The energy level is read off the state itself, so the
            // trajectory is consistent by construction.
            let h = simulate_level(&cfg, chart, c_ang, &state)?;
            let opts = IntegrateOpts {
                rtol: cfg.tolerances.rtol,
                atol: cfg.tolerances.atol,
                max_steps: cfg.tolerances.max_steps,
                record: if stride <= 1 {
                    RecordMode::All
                } else {
                    RecordMode::Stride(stride)
                },
                ..IntegrateOpts::default()
            };
            let traj = flow::integrate(
                &cfg.params,
                cfg.convention,
                chart,
                c_ang,
                h,
                &state,
                (0.0, span),
                &[],
                &opts,
            )?;
            let path = out("simulate.csv");
            export::write_csv_trajectory(&path, &traj)?;
            let end = traj.last_state();
            println!(
                "h = {h:.10e}, {:?} after {} steps at parameter {:.6e}, final state {:?}",
                traj.status,
                traj.stats.n_accept,
                traj.last_param(),
                end
            );
            println!(
                "max energy residual {:.3e}, wrote {}",
                traj.stats.max_residual,
                path.display()
            );
        }
        Cmd::Classify { jobs } => {
            let jobs: Vec<FateJob> = serde_json::from_str(&fs::read_to_string(&jobs)?)?;
            if jobs.is_empty() {
                return Err(Error::Config("job list is empty".into()));
            }
            let opts = ClassifyOpts {
                rtol: cfg.tolerances.rtol,
                atol: cfg.tolerances.atol,
                budget: cfg.tolerances.max_steps,
                ..ClassifyOpts::default()
            };
            let reports = orbits::classify_batch(&cfg.params, cfg.convention, &jobs, &opts)?;
            let csv = out("fates.csv");
            export::write_csv_fates(&csv, &jobs, &reports)?;
            let jsonp = out("fates.json");
            export::write_json(&jsonp, &reports)?;
            let mut counts = std::collections::BTreeMap::new();
            for rep in &reports {
                *counts.entry(rep.fate.to_string()).or_insert(0usize) += 1;
            }
            for (fate, n) in &counts {
                println!("{fate}: {n}");
            }
            println!("wrote {} and {}", csv.display(), jsonp.display());
        }
        Cmd::Verify => {
            let results = verify::run_all(cli.seed);
            let mut all = true;
            for r in &results {
                println!(
                    "criterion {:02} {}: {} - {}",
                    r.id,
                    r.name,
                    if r.pass { "PASS" } else { "FAIL" },
                    r.detail
                );
                all &= r.pass;
            }
            export::write_json(&out("verify.json"), &results)?;
            if !all {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Default energy levels: below the fold the reference spread, above it the
/// same spread with the separatrix level through the planar saddle included.
fn default_levels(cfg: &RunConfig, c_ang: f64) -> Result<Vec<f64>> {
    let dc = model::derive(&cfg.params)?;
    if c_ang <= dc.c0 {
        return Ok(vec![1.0, 0.0, -1.0, -5.0]);
    }
    let regime = orbits::planar_equilibria(&cfg.params, c_ang, None)?;
    let r1 = regime.equilibria[0].r;
    let h_sep = (c_ang * c_ang * r1 - 2.0 * dc.v0 * r1 * r1 - 2.0 * dc.w0)
        / (2.0 * r1.powi(3));
    Ok(vec![
        1.0,
        0.0,
        -0.5,
        from_physical_h(&cfg.params, cfg.convention, h_sep),
        -0.9,
    ])
}

/// Angular momentum above the fold at which the planar separatrix (the
/// level through the saddle) sits exactly at `h_target`.
fn c_for_separatrix(cfg: &RunConfig, h_target: f64) -> Result<Option<f64>> {
    let dc = model::derive(&cfg.params)?;
    let target = charts::physical_h(&cfg.params, cfg.convention, h_target);
    let gap = |c: f64| -> f64 {
        let disc = (c.powi(4) - dc.c0.powi(4)).max(0.0);
        let r1 = (c * c - disc.sqrt()) / (2.0 * dc.v0);
        (c * c * r1 - 2.0 * dc.v0 * r1 * r1 - 2.0 * dc.w0) / (2.0 * r1.powi(3)) - target
    };
    let (a, b) = (dc.c0 * (1.0 + 1e-9), dc.c0 * 10.0);
    if gap(a) * gap(b) > 0.0 {
        return Ok(None);
    }
    Ok(Some(numerics::bisect_root(gap, a, b, 1e-13)))
}

/// Radial extent for curve grids: past the outermost turning point of the
/// bounded levels, or a fixed window if every level is unbounded.
fn grid_extent(cfg: &RunConfig, c_ang: f64, levels: &[f64]) -> f64 {
    let mut r_hi: f64 = 0.0;
    for &h in levels {
        if let Ok(tps) = orbits::planar_turning_points(&cfg.params, cfg.convention, c_ang, h)
        {
            if let Some(&apex) = tps.last() {
                r_hi = r_hi.max(1.3 * apex);
            }
        }
    }
    if r_hi > 0.0 {
        r_hi
    } else {
        6.0
    }
}

/// Energy level defined by a chart state (zero for the collision manifold).
fn simulate_level(cfg: &RunConfig, chart: Chart, c_ang: f64, s: &[f64]) -> Result<f64> {
    let p = &cfg.params;
    let conv = cfg.convention;
    Ok(match chart {
        Chart::Reduced => charts::hamiltonian_cyl(
            p,
            conv,
            c_ang,
            &CylState {
                R: s[0],
                z: s[1],
                P_R: s[2],
                P_z: s[3],
            },
        )?,
        Chart::McGehee => {
            let h_phys = charts::residual_mcgehee(
                p,
                Convention::OverM,
                c_ang,
                0.0,
                &McGeheeState {
                    r: s[0],
                    v: s[1],
                    theta: s[2],
                    u: s[3],
                },
            )?;
            from_physical_h(p, conv, h_phys)
        }
        Chart::Regularized => {
            let st = RegState {
                r: s[0],
                v: s[1],
                theta: s[2],
                w: s[3],
            };
            if !(st.r > 0.0) || st.theta.cos() <= 0.0 {
                return Err(Error::Domain(
                    "regularized simulate needs r > 0 and |theta| < pi/2".into(),
                ));
            }
            let base = charts::residual_reg(p, Convention::OverM, c_ang, 0.0, &st)?;
            let h_phys = base / (2.0 * st.r.powi(3) * st.theta.cos().powi(6));
            from_physical_h(p, conv, h_phys)
        }
        Chart::Planar => {
            if !(s[0] > 0.0) {
                return Err(Error::Domain("planar simulate needs r > 0".into()));
            }
            let base =
                charts::residual_planar(p, Convention::OverM, c_ang, 0.0, s[0], s[1])?;
            let h_phys = base / (2.0 * s[0].powi(3));
            from_physical_h(p, conv, h_phys)
        }
        Chart::Collision | Chart::Profile => 0.0,
    })
}
