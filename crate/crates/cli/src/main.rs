//! `extspec`: spectra of self-adjoint extensions on metric graphs.
//!
//! Exit codes: 0 on success with every bound satisfied, 1 on a violated bound
//! or numerical failure, 2 on malformed input.

mod problem;

use clap::{Parser, Subcommand};
use extspec_core::comparison::{counting_diff_bound, interlace_check, weyl_deviation};
use extspec_core::graph::random_extension;
use extspec_core::oracle::fd::fd_graph_eigenvalues;
use extspec_core::oracle::minmax::{
    finite_dim_minmax_check, make_minmax_model, make_unconstrained_model,
};
use extspec_core::seba::{location_sweep, seba_solve};
use extspec_core::solver::full_spectrum;
use extspec_core::{Error, Spectrum};
use problem::{read_problem, unitary_fragment};
use serde_json::json;
use std::io::Write;
use std::process::ExitCode;

/// Relative disagreement tolerated between the solver and the finite-difference oracle.
const FD_TOL: f64 = 1e-4;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Failure(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Failure(e.to_string())
        }
    }
}

#[derive(Parser)]
#[command(name = "extspec", version, about = "Spectra of self-adjoint extensions on metric graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues on (-inf, EMAX] as CSV.
    Spectrum {
        #[arg(short, long)]
        input: String,
        #[arg(long, allow_hyphen_values = true)]
        emax: f64,
    },
    /// Counting function N(E).
    Count {
        #[arg(short, long)]
        input: String,
        #[arg(long, allow_hyphen_values = true)]
        at: f64,
    },
    /// Deviation of N(E) from the Weyl term on a grid.
    WeylSweep {
        #[arg(short, long)]
        input: String,
        #[arg(long)]
        emax: f64,
        #[arg(long, default_value_t = 1000)]
        grid: usize,
    },
    /// Shifted interlacing and sup |N1 - N0| <= d for two extensions.
    Interlace {
        /// Two problem files.
        #[arg(short, long, num_args = 1, required = true)]
        input: Vec<String>,
        #[arg(short)]
        d: usize,
        #[arg(long, default_value_t = 100.0)]
        emax: f64,
    },
    /// Point perturbation of a rectangle: perturbed spectrum and comparison.
    Seba {
        #[arg(short, long)]
        input: String,
        #[arg(long)]
        emax: f64,
        /// Also sweep the point over an interior G x G grid.
        #[arg(long)]
        sweep: Option<usize>,
    },
    /// Compare the solver with finite differences for classical conditions.
    OracleFd {
        #[arg(short, long)]
        input: String,
        /// Mesh width; defaults to the shortest edge over 200.
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Finite-dimensional min-max check.
    OracleMinmax {
        #[arg(short, long)]
        input: String,
        /// Use a perturbation without form agreement (expected to fail).
        #[arg(long)]
        unconstrained: bool,
    },
    /// Haar-random extension unitary as a problem-file fragment.
    RandomExtension {
        #[arg(short = 'K')]
        k: usize,
        #[arg(long)]
        seed: u64,
    },
}

/// Lines to print and whether every checked bound held.
struct Output {
    text: String,
    ok: bool,
}

impl Output {
    fn ok(text: String) -> Self {
        Self { text, ok: true }
    }
}

fn spectrum_csv(s: &Spectrum) -> String {
    let mut out = String::from("eigenvalue,multiplicity\n");
    for e in s.entries() {
        out.push_str(&format!("{:.16e},{}\n", e.value, e.multiplicity));
    }
    out
}

fn run(command: Command) -> Result<Output, CliError> {
    match command {
        Command::Spectrum { input, emax } => {
            let p = read_problem(&input)?.into_graph()?;
            let s = full_spectrum(&p.graph, &p.unitary, emax)?;
            Ok(Output::ok(spectrum_csv(&s)))
        }
        Command::Count { input, at } => {
            let p = read_problem(&input)?.into_graph()?;
            if !at.is_finite() {
                return Err(CliError::Input(format!("energy {at} is not finite")));
            }
            let s = full_spectrum(&p.graph, &p.unitary, at.max(1.0))?;
            Ok(Output::ok(format!("{}\n", s.counting(at)?)))
        }
        Command::WeylSweep { input, emax, grid } => {
            let p = read_problem(&input)?.into_graph()?;
            let r = weyl_deviation(&p.graph, &p.unitary, emax, grid)?;
            let v = json!({
                "sup_deviation": r.sup_deviation,
                "argmax_E": r.argmax_e,
                "bound": r.bound,
                "satisfied": r.satisfied,
            });
            Ok(Output {
                text: format!("{v}\n"),
                ok: r.satisfied,
            })
        }
        Command::Interlace { input, d, emax } => {
            let [f0, f1] = input.as_slice() else {
                return Err(CliError::Input(format!(
                    "interlace takes exactly two -i files, got {}",
                    input.len()
                )));
            };
            let p0 = read_problem(f0)?.into_graph()?;
            let p1 = read_problem(f1)?.into_graph()?;
            let s0 = full_spectrum(&p0.graph, &p0.unitary, emax)?;
            let s1 = full_spectrum(&p1.graph, &p1.unitary, emax)?;
            let interlaced = interlace_check(&s0, &s1, d)?;
            let bounded = counting_diff_bound(&s0, &s1, d, &[])?.satisfied;
            let v = json!({ "interlaced": interlaced, "counting_bound_satisfied": bounded });
            Ok(Output {
                text: format!("{v}\n"),
                ok: interlaced && bounded,
            })
        }
        Command::Seba { input, emax, sweep } => {
            let spec = read_problem(&input)?.into_seba()?;
            let sol = seba_solve(&spec, emax)?;
            let dev = sol.deviation()?;
            let gaps = sol.gap_violations();
            let mut ok = dev.satisfied && gaps == 0;
            let mut text = spectrum_csv(&sol.perturbed);
            let mut v = json!({
                "sup_deviation": dev.sup_deviation,
                "argmax_E": dev.argmax_e,
                "bound": dev.bound,
                "satisfied": dev.satisfied,
                "gap_violations": gaps,
                "truncation_shift": sol.truncation_shift,
                "degenerate": sol.degenerate,
            });
            if let Some(g) = sweep {
                if g == 0 {
                    return Err(CliError::Input("--sweep needs a positive grid size".into()));
                }
                let (a, b) = spec.sides;
                let step = |i: usize| i as f64 / (g + 1) as f64;
                let points: Vec<(f64, f64)> = (1..=g)
                    .flat_map(|i| (1..=g).map(move |j| (a * step(i), b * step(j))))
                    .collect();
                let r = location_sweep(&spec, &points, emax)?;
                ok &= r.max_deviation <= 1 && r.gap_violations == 0;
                v["sweep"] = json!({
                    "points": points.len(),
                    "max_deviation": r.max_deviation,
                    "gap_violations": r.gap_violations,
                    "max_truncation_shift": r.max_truncation_shift,
                    "satisfied": r.max_deviation <= 1 && r.gap_violations == 0,
                });
            }
            text.push_str(&format!("{v}\n"));
            Ok(Output { text, ok })
        }
        Command::OracleFd { input, h, count } => {
            let p = read_problem(&input)?.into_graph()?;
            let Some(condition) = p.classical else {
                return Err(CliError::Input(
                    "oracle-fd needs a dirichlet, neumann or kirchhoff extension".into(),
                ));
            };
            if count == 0 {
                return Err(CliError::Input("--count must be positive".into()));
            }
            let h = h.unwrap_or(p.graph.min_length() / 200.0);
            let fd = fd_graph_eigenvalues(&p.graph, &condition, h, count)?;
            let e_max = fd[count - 1] * 1.2 + 1.0;
            let solver = full_spectrum(&p.graph, &p.unitary, e_max)?.expanded();
            if solver.len() < count {
                return Err(CliError::Failure(format!(
                    "solver found {} eigenvalues below {e_max}, expected {count}",
                    solver.len()
                )));
            }
            let worst = solver
                .iter()
                .zip(&fd)
                .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
                .fold(0.0, f64::max);
            let agree = worst <= FD_TOL;
            let v = json!({
                "h": h,
                "solver": &solver[..count],
                "fd": fd,
                "max_relative_disagreement": worst,
                "tolerance": FD_TOL,
                "agree": agree,
            });
            Ok(Output {
                text: format!("{v}\n"),
                ok: agree,
            })
        }
        Command::OracleMinmax {
            input,
            unconstrained,
        } => {
            let m = read_problem(&input)?.into_minmax()?;
            let model = if unconstrained {
                make_unconstrained_model(m.n, m.d, m.seed)?
            } else {
                make_minmax_model(m.n, m.d, m.seed)?
            };
            let passed = finite_dim_minmax_check(&model);
            let v = json!({
                "N": m.n,
                "d": m.d,
                "seed": m.seed,
                "form_defect": model.form_defect(),
                "passed": passed,
            });
            Ok(Output {
                text: format!("{v}\n"),
                ok: passed,
            })
        }
        Command::RandomExtension { k, seed } => {
            if k == 0 {
                return Err(CliError::Input("-K must be positive".into()));
            }
            Ok(Output::ok(format!(
                "{}\n",
                unitary_fragment(&random_extension(k, seed))
            )))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.text.as_bytes());
            let _ = stdout.flush();
            ExitCode::from(if out.ok { 0 } else { 1 })
        }
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
