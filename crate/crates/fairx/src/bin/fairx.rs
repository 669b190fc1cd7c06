//! Command-line front end. Exit codes: 0 success, 1 negative domain
//! verdict (verification failed / unstable / not an equilibrium), 2 bad
//! input.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use fairx::equilibrium::{is_exchange_equilibrium, proportionalize};
use fairx::io;
use fairx::lexopt::solve_lex_optimal;
use fairx::market::MarketGraph;
use fairx::oracle::{hall_minimum, oracle_maxmin_value, oracle_ratio_vector};
use fairx::rational::{render_rational, to_f64};
use fairx::sim::{convergence_report, simulate, SimConfig};
use fairx::stability::{
    strong_stability_check_with_cap, weak_stability_check_with_cap, StabilityVerdict,
    DEFAULT_COALITION_CAP,
};
use fairx::structure::verify_structure;

#[derive(Parser)]
#[command(name = "fairx", about = "Graph service-exchange market toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Strong,
    Weak,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the lex-optimal allocation and level structure
    Solve {
        market: PathBuf,
        /// Write the solution JSON here instead of stdout
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a third-party allocation against the structural certificate
    Verify {
        market: PathBuf,
        #[arg(long)]
        alloc: PathBuf,
        /// Include counterexample details in the report
        #[arg(long)]
        explain: bool,
    },
    /// Check or construct an exchange equilibrium
    Equilibrium {
        market: PathBuf,
        /// Check this allocation instead of constructing one
        #[arg(long)]
        check: Option<PathBuf>,
        /// Solve and rebalance into an equilibrium allocation
        #[arg(long)]
        make: bool,
    },
    /// Coalitional stability of a received vector
    Stability {
        market: PathBuf,
        received: PathBuf,
        #[arg(long, value_enum, default_value = "strong")]
        mode: Mode,
        /// Node-count cap for the exponential subset enumeration
        #[arg(long, default_value_t = DEFAULT_COALITION_CAP)]
        cap: usize,
        /// Include the blocking allocation in the verdict
        #[arg(long)]
        explain: bool,
    },
    /// Run the asynchronous token-exchange dynamic
    Simulate {
        market: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        tokens: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Compare trailing-window ratios against the static solution
        #[arg(long = "ref")]
        reference: bool,
        /// Relative tolerance for the convergence check
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
        /// Write the time,node,ratio trace here
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        sample_every: u64,
    },
    /// Brute-force reference results for cross-checking the solver
    Oracle { market: PathBuf },
}

fn load_market(path: &PathBuf) -> Result<MarketGraph, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    io::market_from_json(&text).map_err(|errs| {
        errs.iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join("\n")
    })
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<(), String> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run() -> Result<ExitCode, String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve { market, output } => {
            let m = load_market(&market)?;
            let sol = solve_lex_optimal(&m).map_err(|e| e.to_string())?;
            emit(&output, &io::solution_to_json(&m, &sol))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { market, alloc, explain } => {
            let m = load_market(&market)?;
            let text = fs::read_to_string(&alloc).map_err(|e| format!("{}: {e}", alloc.display()))?;
            let allocation = io::allocation_from_json(&m, &text).map_err(|e| e.to_string())?;
            let report = verify_structure(&m, &allocation).map_err(|e| e.to_string())?;
            let mut value = serde_json::to_value(&report).map_err(|e| e.to_string())?;
            if !explain {
                strip_details(&mut value);
            }
            println!("{}", serde_json::to_string_pretty(&value).unwrap());
            Ok(if report.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Equilibrium { market, check, make } => {
            let m = load_market(&market)?;
            match (check, make) {
                (Some(path), false) => {
                    let text =
                        fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                    let allocation =
                        io::allocation_from_json(&m, &text).map_err(|e| e.to_string())?;
                    let report =
                        is_exchange_equilibrium(&m, &allocation).map_err(|e| e.to_string())?;
                    println!("{}", serde_json::to_string_pretty(&report).unwrap());
                    Ok(if report.is_equilibrium {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    })
                }
                (None, true) => {
                    let sol = solve_lex_optimal(&m).map_err(|e| e.to_string())?;
                    let alloc = proportionalize(&m, &sol).map_err(|e| e.to_string())?;
                    println!("{}", io::allocation_to_json(&m, &alloc));
                    Ok(ExitCode::SUCCESS)
                }
                _ => Err("pass exactly one of --check <alloc.json> or --make".into()),
            }
        }
        Command::Stability { market, received, mode, cap, explain } => {
            let m = load_market(&market)?;
            let text =
                fs::read_to_string(&received).map_err(|e| format!("{}: {e}", received.display()))?;
            let baseline = io::received_from_json(&m, &text).map_err(|e| e.to_string())?;
            let verdict = match mode {
                Mode::Strong => strong_stability_check_with_cap(&m, &baseline, cap),
                Mode::Weak => weak_stability_check_with_cap(&m, &baseline, cap),
            }
            .map_err(|e| e.to_string())?;
            println!(
                "{}",
                serde_json::to_string_pretty(&verdict_json(&m, &verdict, explain)).unwrap()
            );
            Ok(if verdict.stable { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Simulate { market, tokens, seed, reference, tol, csv, sample_every } => {
            let m = load_market(&market)?;
            let mut config = SimConfig::from_market(&m, tokens, seed);
            config.sample_every = sample_every;
            let trace = simulate(&m, &config);
            if let Some(path) = &csv {
                fs::write(path, io::trace_to_csv(&m, &trace))
                    .map_err(|e| format!("{}: {e}", path.display()))?;
            }
            let final_ratios: serde_json::Map<String, serde_json::Value> = (0..m.node_count())
                .map(|i| (m.id(i).to_string(), json!(trace.final_state.ratio(i))))
                .collect();
            let mut summary = json!({
                "events": trace.final_state.events,
                "clock": trace.final_state.clock,
                "seed": seed,
                "rng": "chacha8",
                "ratios": final_ratios,
            });
            let mut ok = true;
            if reference {
                let sol = solve_lex_optimal(&m).map_err(|e| e.to_string())?;
                let report =
                    convergence_report(&trace, Some(&sol), tol).map_err(|e| e.to_string())?;
                ok = report.pass;
                summary["convergence"] = json!({
                    "pass": report.pass,
                    "tolerance": report.tolerance,
                    "deviations": (0..m.node_count())
                        .map(|i| (m.id(i).to_string(), json!(report.deviations[i])))
                        .collect::<serde_json::Map<_, _>>(),
                });
            }
            println!("{}", serde_json::to_string_pretty(&summary).unwrap());
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Oracle { market } => {
            let m = load_market(&market)?;
            let lambda = oracle_maxmin_value(&m).map_err(|e| e.to_string())?;
            let ratios = oracle_ratio_vector(&m).map_err(|e| e.to_string())?;
            let (hall, hall_set) = hall_minimum(&m).map_err(|e| e.to_string())?;
            let out = json!({
                "lambda_star": render_rational(&lambda),
                "lambda_star_float": to_f64(&lambda),
                "ratios": (0..m.node_count())
                    .map(|i| (m.id(i).to_string(), json!(render_rational(&ratios.rho[i]))))
                    .collect::<serde_json::Map<_, _>>(),
                "hall_ratio": render_rational(&hall),
                "hall_set": hall_set.iter().map(|&i| m.id(i)).collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn strip_details(value: &mut serde_json::Value) {
    if let serde_json::Value::Object(map) = value {
        for v in map.values_mut() {
            if let serde_json::Value::Object(inner) = v {
                inner.remove("detail");
            }
        }
    }
}

fn verdict_json(m: &MarketGraph, verdict: &StabilityVerdict, explain: bool) -> serde_json::Value {
    let mut out = json!({
        "stable": verdict.stable,
        "mode": verdict.mode,
    });
    if let Some(blocking) = &verdict.blocking {
        let mut b = json!({
            "members": blocking.coalition.members.iter().map(|&i| m.id(i)).collect::<Vec<_>>(),
            "received": blocking
                .received
                .iter()
                .map(|(i, r)| (m.id(*i).to_string(), json!(render_rational(r))))
                .collect::<serde_json::Map<_, _>>(),
        });
        if explain {
            b["allocation"] =
                serde_json::from_str(&io::allocation_to_json(m, &blocking.allocation)).unwrap();
        }
        out["blocking"] = b;
    }
    out
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
