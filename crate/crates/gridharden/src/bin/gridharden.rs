//! Command-line front end: validate case files, run any engine, print
//! resilience indices, and benchmark engines side by side.
//!
//! Exit codes: 0 success, 2 parse/validation failure, 3 enumeration cap
//! refusal, 4 solver failure, 1 anything else.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use gridharden::io::{self, Case};
use gridharden::model::{validate_network, validate_scenarios, Budget};
use gridharden::pccg::SolveReport;
use gridharden::recourse::Recourse;
use gridharden::{baseline, oracle, pccg};

#[derive(Parser)]
#[command(
    name = "gridharden",
    version,
    about = "Proactive hardening planner for radial distribution feeders"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Engine {
    Pccg,
    PccgEnhanced,
    BasicCcg,
    Oracle,
}

/// Config knobs that override whatever the case file carries.
#[derive(Debug, Args)]
struct Overrides {
    /// N-k limit on simultaneously damaged lines.
    #[arg(long)]
    k_lines: Option<usize>,
    /// N-k limit on simultaneously damaged DGs.
    #[arg(long)]
    k_dgs: Option<usize>,
    /// Replace the budget with a cardinality cap.
    #[arg(long, conflicts_with = "budget_cost")]
    budget_cardinality: Option<u32>,
    /// Replace the budget with a cost cap.
    #[arg(long)]
    budget_cost: Option<f64>,
    /// Relative optimality gap for the outer loop.
    #[arg(long)]
    gap_tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Scenario fan-out threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Initial dual box for the worst-case subproblem.
    #[arg(long)]
    m_dual: Option<f64>,
    /// Voltage-drop disconnection constant.
    #[arg(long)]
    m_volt: Option<f64>,
}

impl Overrides {
    fn apply(&self, case: &mut Case) {
        if let Some(k) = self.k_lines {
            case.ddu.k_lines = k;
        }
        if let Some(k) = self.k_dgs {
            case.ddu.k_dgs = k;
        }
        if let Some(c) = self.budget_cardinality {
            case.ddu.budget = Budget::Cardinality(c);
        }
        if let Some(b) = self.budget_cost {
            case.ddu.budget = Budget::Cost(b);
        }
        let a = &mut case.algorithm;
        if let Some(v) = self.gap_tol {
            a.gap_tol = v;
        }
        if let Some(v) = self.max_iters {
            a.max_iters = v;
        }
        if let Some(v) = self.seed {
            a.seed = v;
        }
        if let Some(v) = self.threads {
            a.threads = v;
        }
        if let Some(v) = self.m_dual {
            a.m_dual = v;
        }
        if let Some(v) = self.m_volt {
            a.m_volt = Some(v);
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and validate case files without solving anything.
    Validate { cases: Vec<PathBuf> },
    /// Solve one case with the chosen engine.
    Solve {
        case: PathBuf,
        #[arg(long, value_enum, default_value_t = Engine::PccgEnhanced)]
        engine: Engine,
        /// Write the full report as TOML.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Oracle only: refuse more hardening plans than this.
        #[arg(long, default_value_t = oracle::DEFAULT_PLAN_CAP)]
        plan_cap: u128,
        /// Oracle only: refuse more contingencies than this.
        #[arg(long, default_value_t = oracle::DEFAULT_CONTINGENCY_CAP)]
        contingency_cap: u128,
        /// Dump the intact scenario-0 recourse LP as text (debugging).
        #[arg(long)]
        dump_model: Option<PathBuf>,
        #[command(flatten)]
        ovr: Overrides,
    },
    /// Print resilience importance indices and the intact dispatch.
    Indices {
        case: PathBuf,
        #[command(flatten)]
        ovr: Overrides,
    },
    /// Run several engines over several cases; optionally export CSV.
    Bench {
        cases: Vec<PathBuf>,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Engine::PccgEnhanced, Engine::BasicCcg])]
        engines: Vec<Engine>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        ovr: Overrides,
    },
}

#[derive(Debug, thiserror::Error)]
#[error("case {0} failed validation:\n{1}")]
struct ValidationFailed(String, String);

fn load_valid(path: &Path, ovr: Option<&Overrides>) -> anyhow::Result<Case> {
    let mut case = io::load_case(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(ovr) = ovr {
        ovr.apply(&mut case);
    }
    let mut msgs = validate_network(&case.network);
    msgs.extend(validate_scenarios(&case.network, &case.scenarios));
    if !msgs.is_empty() {
        return Err(ValidationFailed(path.display().to_string(), msgs.join("\n")).into());
    }
    Ok(case)
}

fn run_engine(case: &Case, engine: Engine, plan_cap: u128, contingency_cap: u128) -> gridharden::Result<SolveReport> {
    match engine {
        Engine::Pccg => pccg::run(&case.network, &case.scenarios, &case.ddu, &case.algorithm, false),
        Engine::PccgEnhanced => {
            pccg::run(&case.network, &case.scenarios, &case.ddu, &case.algorithm, true)
        }
        Engine::BasicCcg => baseline::run(&case.network, &case.scenarios, &case.ddu, &case.algorithm),
        Engine::Oracle => oracle::solve_exhaustive(
            &case.network,
            &case.scenarios,
            &case.ddu,
            &case.algorithm,
            plan_cap,
            contingency_cap,
        ),
    }
}

fn cmd_validate(cases: &[PathBuf]) -> anyhow::Result<()> {
    anyhow::ensure!(!cases.is_empty(), "no case files given");
    for path in cases {
        let case = load_valid(path, None)?;
        println!(
            "{}: ok ({} nodes, {} lines, {} scenarios)",
            path.display(),
            case.network.nodes.len(),
            case.network.lines.len(),
            case.scenarios.len()
        );
    }
    Ok(())
}

fn cmd_solve(
    path: &Path,
    engine: Engine,
    report_path: Option<&Path>,
    plan_cap: u128,
    contingency_cap: u128,
    dump_model: Option<&Path>,
    ovr: &Overrides,
) -> anyhow::Result<()> {
    let case = load_valid(path, Some(ovr))?;
    if let Some(dump) = dump_model {
        let rec = Recourse::new(&case.network, &case.scenarios, &case.algorithm);
        let u = vec![1.0; rec.idx.dim()];
        let model = rec.build_lp(0, &u);
        let mut f = std::fs::File::create(dump)
            .with_context(|| format!("creating {}", dump.display()))?;
        model.dump_lp(&mut f)?;
        println!("wrote recourse LP to {}", dump.display());
    }
    let report = run_engine(&case, engine, plan_cap, contingency_cap)?;
    print!("{}", report.summary(&case.network));
    if let Some(out) = report_path {
        let text = toml::to_string_pretty(&report)?;
        std::fs::write(out, text).with_context(|| format!("writing {}", out.display()))?;
        println!("report written to {}", out.display());
    }
    Ok(())
}

fn cmd_indices(path: &Path, ovr: &Overrides) -> anyhow::Result<()> {
    let case = load_valid(path, Some(ovr))?;
    let rec = Recourse::new(&case.network, &case.scenarios, &case.algorithm);
    let xi = rec.resilience_indices()?;
    println!("{:<12} {:>14}", "component", "importance");
    let mut order: Vec<usize> = (0..xi.len()).collect();
    order.sort_by(|&a, &b| xi[b].total_cmp(&xi[a]));
    for k in order {
        println!("{:<12} {:>14.4}", case.network.u_label(&rec.idx, k), xi[k]);
    }
    let (sol, _) = rec.solve_flat(&vec![1.0; rec.idx.dim()])?;
    println!("\nintact dispatch:\n{}", sol.table());
    Ok(())
}

fn cmd_bench(
    cases: &[PathBuf],
    engines: &[Engine],
    csv_path: Option<&Path>,
    ovr: &Overrides,
) -> anyhow::Result<()> {
    anyhow::ensure!(!cases.is_empty(), "no case files given");
    anyhow::ensure!(!engines.is_empty(), "no engines given");
    let mut rows = Vec::new();
    println!(
        "{:<12} {:<14} {:>12} {:>8} {:>6} {:>9} {:>10}",
        "case", "engine", "objective", "shed%", "iters", "gap", "secs"
    );
    for path in cases {
        let case = load_valid(path, Some(ovr))?;
        for &engine in engines {
            let r = run_engine(
                &case,
                engine,
                oracle::DEFAULT_PLAN_CAP,
                oracle::DEFAULT_CONTINGENCY_CAP,
            )?;
            println!(
                "{:<12} {:<14} {:>12.4} {:>8.2} {:>6} {:>9.2e} {:>10.2}",
                case.name,
                r.engine.to_string(),
                r.objective,
                100.0 * r.shedding_ratio,
                r.iterations.len(),
                r.gap,
                r.wall_secs
            );
            rows.push((case.name.clone(), r));
        }
    }
    if let Some(out) = csv_path {
        let mut w = csv::Writer::from_path(out)
            .with_context(|| format!("creating {}", out.display()))?;
        w.write_record([
            "case",
            "engine",
            "objective",
            "shedding_ratio",
            "iterations",
            "gap",
            "wall_secs",
            "hardened",
        ])?;
        for (name, r) in &rows {
            let hardened: Vec<String> = r
                .hardened_lines
                .iter()
                .chain(&r.hardened_dgs)
                .cloned()
                .collect();
            w.write_record([
                name.clone(),
                r.engine.to_string(),
                format!("{:.6}", r.objective),
                format!("{:.6}", r.shedding_ratio),
                r.iterations.len().to_string(),
                format!("{:.3e}", r.gap),
                format!("{:.3}", r.wall_secs),
                hardened.join(" "),
            ])?;
        }
        w.flush()?;
        println!("csv written to {}", out.display());
    }
    Ok(())
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<ValidationFailed>().is_some()
            || cause.downcast_ref::<io::IoError>().is_some()
        {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<gridharden::Error>() {
            return match e {
                gridharden::Error::OracleCap { .. }
                | gridharden::Error::Model(gridharden::model::ModelError::EnumerationCap {
                    ..
                }) => 3,
                gridharden::Error::Backend(_)
                | gridharden::Error::ScenarioSolve { .. }
                | gridharden::Error::MasterNotOptimal { .. }
                | gridharden::Error::SubproblemNotOptimal { .. }
                | gridharden::Error::DualBoundTooSmall { .. } => 4,
                _ => 1,
            };
        }
        if cause.downcast_ref::<gridharden::model::ModelError>().is_some() {
            return 3;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Validate { cases } => cmd_validate(cases),
        Cmd::Solve {
            case,
            engine,
            report,
            plan_cap,
            contingency_cap,
            dump_model,
            ovr,
        } => cmd_solve(
            case,
            *engine,
            report.as_deref(),
            *plan_cap,
            *contingency_cap,
            dump_model.as_deref(),
            ovr,
        ),
        Cmd::Indices { case, ovr } => cmd_indices(case, ovr),
        Cmd::Bench {
            cases,
            engines,
            csv,
            ovr,
        } => cmd_bench(cases, engines, csv.as_deref(), ovr),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
