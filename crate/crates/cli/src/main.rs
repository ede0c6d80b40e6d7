#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand};

use band_core::harness::{
    brute_force_optimum, compare, gap, render_csv, report_energy, CompareConfig, CompareReport, SolutionDoc,
};
use band_core::instance::{generate_instance, BanInstance, GeneratorConfig};
use band_core::mip::{MipOptions, MipStatus};
use band_core::model::{build_rob_band_blp, check_feasibility, variable_label, write_mps, CoupleSet};
use band_core::netgraph::build_graph;
use band_core::robuband::{self, RobuParams};

/// Robust body area network design.
#[derive(Parser)]
#[command(name = "band", version, about)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug, -vvv trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random instances.
    Gen(GenArgs),
    /// Solve the robust program with branch and bound.
    SolveExact(SolveExactArgs),
    /// Run the RobuBAND matheuristic.
    SolveRobuband(SolveRobubandArgs),
    /// Benchmark both solvers on a set of instances under equal budgets.
    Compare(CompareArgs),
    /// Check a solution file against an instance; exits 1 when infeasible.
    Validate(ValidateArgs),
    /// Exhaustive optimum of a tiny instance.
    Oracle(OracleArgs),
    /// Print the link graph of an instance as CSV.
    DumpGraph(InstanceArg),
    /// Write the robust program of an instance in MPS format.
    ExportLp(ExportLpArgs),
}

#[derive(Args)]
struct InstanceArg {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of instances, seeded `seed`, `seed + 1`, ...
    #[arg(long, default_value_t = 1)]
    count: u64,
    /// Output file (single instance) or directory (several).
    #[arg(long)]
    out: PathBuf,
    /// Generator configuration JSON; the flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    biosensors: Option<usize>,
    #[arg(long)]
    sinks: Option<usize>,
    #[arg(long)]
    relays: Option<usize>,
    #[arg(long)]
    scenarios: Option<usize>,
    /// Meters.
    #[arg(long)]
    tx_range: Option<f64>,
    /// Bit/s per relay.
    #[arg(long)]
    relay_capacity: Option<f64>,
    /// Defaults to the number of relays.
    #[arg(long)]
    relay_budget: Option<usize>,
    #[arg(long)]
    p_nlos: Option<f64>,
}

#[derive(Args)]
struct SolveExactArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<usize>,
    /// Solution file to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Default)]
struct RobuArgs {
    /// RobuBAND parameters as JSON; the flags below override it.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    candidate_paths: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    ants: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    gamma0: Option<usize>,
    #[arg(long)]
    delta_step: Option<usize>,
    #[arg(long)]
    outer_time_limit: Option<f64>,
    #[arg(long)]
    vns_improve_limit: Option<f64>,
    #[arg(long)]
    vns_repair_limit: Option<f64>,
    #[arg(long)]
    sub_mip_time_limit: Option<f64>,
    #[arg(long)]
    sub_mip_repair_time_limit: Option<f64>,
    #[arg(long)]
    pheromone_floor: Option<f64>,
    #[arg(long)]
    raw_support_weights: bool,
    #[arg(long)]
    max_outer_iterations: Option<usize>,
    #[arg(long)]
    eta_iteration_cap: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SolveRobubandArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    robu: RobuArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Instance JSON files.
    #[arg(required = true)]
    instances: Vec<PathBuf>,
    /// Seconds per arm and instance.
    #[arg(long, default_value_t = 2400.0)]
    budget: f64,
    /// Share of the RobuBAND budget spent in the final improvement search.
    #[arg(long, default_value_t = 0.25)]
    improve_share: f64,
    #[command(flatten)]
    robu: RobuArgs,
    /// Worker threads across instances (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    solution: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportLpArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn read_instance(path: &Path) -> Result<BanInstance> {
    BanInstance::read(path).with_context(|| format!("reading instance {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

impl RobuArgs {
    fn resolve(&self) -> Result<RobuParams> {
        let mut p: RobuParams = match &self.params {
            Some(path) => read_json(path)?,
            None => RobuParams::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { p.$f = v; } )* };
        }
        set!(
            candidate_paths,
            alpha,
            ants,
            window,
            epsilon,
            outer_time_limit,
            vns_improve_limit,
            vns_repair_limit,
            sub_mip_time_limit,
            sub_mip_repair_time_limit,
            pheromone_floor,
            seed
        );
        macro_rules! set_opt {
            ($($f:ident),*) => { $( if self.$f.is_some() { p.$f = self.$f; } )* };
        }
        set_opt!(gamma0, delta_step, max_outer_iterations, eta_iteration_cap);
        p.raw_support_weights |= self.raw_support_weights;
        p.validate()?;
        Ok(p)
    }
}

fn gen(args: &GenArgs) -> Result<()> {
    let mut cfg: GeneratorConfig = match &args.config {
        Some(path) => read_json(path)?,
        None => GeneratorConfig::default(),
    };
    macro_rules! set {
        ($($arg:ident => $f:ident),*) => { $( if let Some(v) = args.$arg { cfg.$f = v; } )* };
    }
    set!(biosensors => n_biosensors, sinks => n_sinks, relays => n_relays, scenarios => n_scenarios,
         tx_range => tx_range, relay_capacity => relay_capacity, p_nlos => p_nlos);
    if args.relay_budget.is_some() {
        cfg.relay_budget = args.relay_budget;
    }
    if args.count == 1 {
        let inst = generate_instance(&cfg, args.seed)?;
        inst.write(&args.out)?;
        println!("{}", args.out.display());
        return Ok(());
    }
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    for seed in args.seed..args.seed + args.count {
        let inst = generate_instance(&cfg, seed)?;
        let path = args.out.join(format!("{}.json", inst.name));
        inst.write(&path)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn solve_exact(args: &SolveExactArgs) -> Result<ExitCode> {
    let inst = read_instance(&args.instance)?;
    let graph = build_graph(&inst)?;
    let built = Instant::now();
    let model = build_rob_band_blp(&graph, &inst.scenarios, inst.relay_budget)?;
    log::info!("model: {} variables, {} rows, built in {:.2?}", model.lp.n_variables(), model.lp.n_constraints(), built.elapsed());
    let opts = MipOptions {
        time_limit: args.time_limit.map(Duration::from_secs_f64),
        node_limit: args.node_limit,
        ..Default::default()
    };
    let r = model.solve(&graph, &opts)?;
    let mut doc = SolutionDoc::empty(&inst.name, "exact", &format!("{:?}", r.status));
    doc.best_bound = r.best_bound.is_finite().then_some(r.best_bound);
    if let Some(values) = &r.values {
        let (x, y) = model.decode(values);
        doc.set_design(&graph, &model.couples, &x, &y);
        doc.e_avg = Some(report_energy(&graph, &model.couples, &x)?.e_avg);
        doc.gap_percent = doc.objective.and_then(|o| gap(o, r.best_bound).ok());
    }
    println!(
        "status {:?} objective {} bound {} gap% {} nodes {}",
        r.status,
        fmt_opt(doc.objective),
        r.best_bound,
        fmt_opt(doc.gap_percent),
        r.nodes
    );
    if let Some(out) = &args.out {
        write_text(out, &doc.to_json())?;
    }
    Ok(match r.status {
        MipStatus::Optimal => ExitCode::SUCCESS,
        MipStatus::Feasible | MipStatus::TimeLimit if r.values.is_some() => ExitCode::SUCCESS,
        _ => ExitCode::from(2),
    })
}

fn solve_robuband(args: &SolveRobubandArgs) -> Result<ExitCode> {
    let inst = read_instance(&args.instance)?;
    let params = args.robu.resolve()?;
    let out = robuband::run(&inst, &params)?;
    let status = if out.best.is_some() { "feasible" } else { "no_solution" };
    let mut doc = SolutionDoc::empty(&inst.name, "robuband", status);
    doc.best_bound = Some(out.stats.best_bound);
    if let Some(best) = &out.best {
        let graph = build_graph(&inst)?;
        let couples = CoupleSet::new(&graph, &inst.scenarios);
        doc.set_design(&graph, &couples, &best.routing, &best.relays);
        doc.e_avg = Some(report_energy(&graph, &couples, &best.routing)?.e_avg);
        doc.gap_percent = out.stats.gap_percent;
    }
    println!(
        "status {status} objective {} bound {} gap% {} iterations {} repairs {}/{}",
        fmt_opt(doc.objective),
        out.stats.best_bound,
        fmt_opt(doc.gap_percent),
        out.stats.iterations,
        out.stats.repairs_succeeded,
        out.stats.repairs_attempted
    );
    if let Some(path) = &args.out {
        write_text(path, &doc.to_json())?;
    }
    Ok(if out.best.is_some() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn run_compare(args: &CompareArgs) -> Result<ExitCode> {
    let instances = args.instances.iter().map(|p| read_instance(p)).collect::<Result<Vec<_>>>()?;
    let config = CompareConfig { budget: args.budget, improve_share: args.improve_share, robu: args.robu.resolve()? };
    if !(config.budget > 0.0) || !(0.0..=1.0).contains(&config.improve_share) {
        bail!("budget must be positive and improve-share within [0, 1]");
    }
    let rows = match args.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(|| compare(&instances, &config)),
        None => compare(&instances, &config),
    };
    let csv = render_csv(&rows, &config)?;
    match &args.csv {
        Some(path) => write_text(path, &csv)?,
        None => print!("{csv}"),
    }
    let report = CompareReport::new(&config, rows);
    if let Some(path) = &args.json {
        write_text(path, &report.to_json())?;
    }
    eprintln!(
        "mean gap% robuband {} exact {} over {} instances",
        fmt_opt(report.mean_gap_rb),
        fmt_opt(report.mean_gap_blp),
        report.rows.len()
    );
    let failed = report.rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} instance(s) failed");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(args: &ValidateArgs) -> Result<ExitCode> {
    let inst = read_instance(&args.instance)?;
    let text = fs::read_to_string(&args.solution).with_context(|| format!("reading {}", args.solution.display()))?;
    let doc = SolutionDoc::from_json(&text)?;
    let graph = build_graph(&inst)?;
    let couples = CoupleSet::new(&graph, &inst.scenarios);
    let (x, y) = doc.design(&graph, &couples)?;
    let report = check_feasibility(&graph, &inst, &x, &y);
    for v in &report.capacity_violations {
        println!("capacity: relay {} scenario {} load {} > {}", v.relay, v.scenario, v.load, v.capacity);
    }
    if let Some((count, budget)) = report.budget_violation {
        println!("budget: {count} relays active, limit {budget}");
    }
    for v in &report.conservation_violations {
        println!("conservation: couple ({}, {}) at {}", v.biosensor, v.sink, v.vertex);
    }
    if !report.is_empty() {
        println!("infeasible");
        return Ok(ExitCode::from(1));
    }
    let energy = couples.scenario_energies(&graph, &x).into_iter().fold(0.0, f64::max);
    if let Some(obj) = doc.objective {
        if (obj - energy).abs() > 1e-6 * energy.abs().max(1.0) {
            println!("warning: stated objective {obj} differs from recomputed {energy}");
        }
    }
    println!("feasible objective {energy} e_avg {}", report_energy(&graph, &couples, &x)?.e_avg);
    Ok(ExitCode::SUCCESS)
}

fn oracle(args: &OracleArgs) -> Result<ExitCode> {
    let inst = read_instance(&args.instance)?;
    let Some(sol) = brute_force_optimum(&inst)? else {
        println!("infeasible");
        if let Some(path) = &args.out {
            write_text(path, &SolutionDoc::empty(&inst.name, "oracle", "infeasible").to_json())?;
        }
        return Ok(ExitCode::from(2));
    };
    let graph = build_graph(&inst)?;
    let couples = CoupleSet::new(&graph, &inst.scenarios);
    let mut doc = SolutionDoc::empty(&inst.name, "oracle", "optimal");
    doc.set_design(&graph, &couples, &sol.routing, &sol.relays);
    doc.best_bound = doc.objective;
    doc.gap_percent = Some(0.0);
    doc.e_avg = Some(report_energy(&graph, &couples, &sol.routing)?.e_avg);
    println!("optimal objective {} over {} combinations", sol.energy, sol.combinations);
    if let Some(path) = &args.out {
        write_text(path, &doc.to_json())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn export_lp(args: &ExportLpArgs) -> Result<()> {
    let inst = read_instance(&args.instance)?;
    let graph = build_graph(&inst)?;
    let model = build_rob_band_blp(&graph, &inst.scenarios, inst.relay_budget)?;
    let text = write_mps(&model.lp, &inst.name, |k| variable_label(&graph, k));
    write_text(&args.out, &text)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Gen(a) => gen(a).map(|_| ExitCode::SUCCESS),
        Command::SolveExact(a) => solve_exact(a),
        Command::SolveRobuband(a) => solve_robuband(a),
        Command::Compare(a) => run_compare(a),
        Command::Validate(a) => validate(a),
        Command::Oracle(a) => oracle(a),
        Command::DumpGraph(a) => {
            let graph = build_graph(&read_instance(&a.instance)?)?;
            for w in &graph.warnings {
                eprintln!("warning: no path from {} to {}", w.biosensor, w.sink);
            }
            print!("{}", graph.dump());
            Ok(ExitCode::SUCCESS)
        }
        Command::ExportLp(a) => export_lp(a).map(|_| ExitCode::SUCCESS),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
