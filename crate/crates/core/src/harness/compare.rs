//! Side-by-side benchmark of the exact solver and RobuBAND under equal budgets.

use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::instance::BanInstance;
use crate::mip::{MipOptions, MipStatus};
use crate::model::{build_rob_band_blp, check_feasibility, CoupleSet};
use crate::netgraph::build_graph;
use crate::robuband::{self, Context, RobuParams};

use super::{delta_gap, gap, report_energy, HarnessError};

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// One instance's results. Energies: `e_avg_*` in uJ/bit, `e_max_*` is the
/// worst-scenario objective E in nJ/s. Gaps are percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub instance: String,
    pub e_avg_rb: Option<f64>,
    pub gap_rb: Option<f64>,
    pub e_avg_blp: Option<f64>,
    pub gap_blp: Option<f64>,
    pub delta_gap: Option<f64>,
    pub e_max_rb: Option<f64>,
    pub e_max_blp: Option<f64>,
    /// Root relaxation value the RobuBAND gap is measured against.
    pub root_bound: Option<f64>,
    /// Best bound of the exact arm.
    pub bound_blp: Option<f64>,
    pub status_blp: Option<String>,
    pub feasible_rb: Option<bool>,
    pub feasible_blp: Option<bool>,
    /// Failure description when an arm could not run.
    pub error: Option<String>,
}

impl BenchmarkRow {
    fn empty(instance: &str) -> Self {
        BenchmarkRow {
            instance: instance.to_string(),
            e_avg_rb: None,
            gap_rb: None,
            e_avg_blp: None,
            gap_blp: None,
            delta_gap: None,
            e_max_rb: None,
            e_max_blp: None,
            root_bound: None,
            bound_blp: None,
            status_blp: None,
            feasible_rb: None,
            feasible_blp: None,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    /// Wall-clock seconds per arm and instance.
    pub budget: f64,
    /// Share of the RobuBAND budget given to the final improvement VNS.
    pub improve_share: f64,
    /// RobuBAND parameters; the two time limits are overwritten from `budget`.
    pub robu: RobuParams,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig { budget: 2400.0, improve_share: 0.25, robu: RobuParams::default() }
    }
}

impl CompareConfig {
    /// RobuBAND parameters with the budget split applied.
    pub fn robu_params(&self) -> RobuParams {
        RobuParams {
            outer_time_limit: self.budget * (1.0 - self.improve_share),
            vns_improve_limit: self.budget * self.improve_share,
            ..self.robu.clone()
        }
    }
}

/// Runs both arms on every instance (instances in parallel, arms in sequence).
/// Rows come back in input order; failures are recorded in `error`.
pub fn compare(instances: &[BanInstance], config: &CompareConfig) -> Vec<BenchmarkRow> {
    instances.par_iter().map(|inst| compare_one(inst, config)).collect()
}

fn compare_one(inst: &BanInstance, config: &CompareConfig) -> BenchmarkRow {
    let mut row = BenchmarkRow::empty(&inst.name);
    let mut errors = Vec::new();
    if let Err(e) = exact_arm(inst, config, &mut row) {
        errors.push(format!("exact: {e}"));
    }
    if let Err(e) = robuband_arm(inst, config, &mut row) {
        errors.push(format!("robuband: {e}"));
    }
    if let (Some(blp), Some(rb)) = (row.gap_blp, row.gap_rb) {
        row.delta_gap = Some(delta_gap(blp, rb));
    }
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    row
}

fn exact_arm(inst: &BanInstance, config: &CompareConfig, row: &mut BenchmarkRow) -> Result<(), String> {
    let built = Instant::now();
    let graph = build_graph(inst).map_err(|e| e.to_string())?;
    let model = build_rob_band_blp(&graph, &inst.scenarios, inst.relay_budget).map_err(|e| e.to_string())?;
    log::info!("{}: exact model built in {:.2?}", inst.name, built.elapsed());
    let opts = MipOptions { time_limit: Some(Duration::from_secs_f64(config.budget)), ..Default::default() };
    let r = model.solve(&graph, &opts).map_err(|e| e.to_string())?;
    row.status_blp = Some(format!("{:?}", r.status));
    row.bound_blp = r.best_bound.is_finite().then_some(r.best_bound);
    let Some(values) = r.values else {
        return match r.status {
            MipStatus::Infeasible => Err("model is infeasible".into()),
            _ => Ok(()),
        };
    };
    let (x, y) = model.decode(&values);
    row.feasible_blp = Some(check_feasibility(&graph, inst, &x, &y).is_empty());
    let report = report_energy(&graph, &model.couples, &x).map_err(|e| e.to_string())?;
    row.e_avg_blp = Some(report.e_avg);
    row.e_max_blp = Some(report.e_max);
    row.gap_blp = Some(gap(report.e_max, r.best_bound).map_err(|e| e.to_string())?);
    Ok(())
}

fn robuband_arm(inst: &BanInstance, config: &CompareConfig, row: &mut BenchmarkRow) -> Result<(), String> {
    let start = Instant::now();
    let ctx = Context::new(inst).map_err(|e| e.to_string())?;
    row.root_bound = Some(ctx.lower_bound);
    let out = robuband::run_with_context(&ctx, &config.robu_params(), start).map_err(|e| e.to_string())?;
    let Some(best) = out.best else {
        return Ok(());
    };
    row.feasible_rb = Some(check_feasibility(&ctx.graph, inst, &best.routing, &best.relays).is_empty());
    let couples = CoupleSet::new(&ctx.graph, &inst.scenarios);
    let report = report_energy(&ctx.graph, &couples, &best.routing).map_err(|e| e.to_string())?;
    row.e_avg_rb = Some(report.e_avg);
    row.e_max_rb = Some(report.e_max);
    row.gap_rb = Some(gap(report.e_max, ctx.lower_bound).map_err(|e| e.to_string())?);
    Ok(())
}

fn header_lines(config: &CompareConfig) -> Vec<String> {
    let params = serde_json::to_string(config).expect("configs always serialize");
    vec![format!("format_version: {REPORT_FORMAT_VERSION}"), format!("config: {params}")]
}

/// Comma-separated table preceded by `#` lines echoing the configuration.
pub fn render_csv(rows: &[BenchmarkRow], config: &CompareConfig) -> Result<String, HarnessError> {
    let mut out = Vec::new();
    for line in header_lines(config) {
        writeln!(out, "# {line}").map_err(|e| HarnessError::Report(e.to_string()))?;
    }
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for row in rows {
            w.serialize(row).map_err(|e| HarnessError::Report(e.to_string()))?;
        }
        w.flush().map_err(|e| HarnessError::Report(e.to_string()))?;
    }
    String::from_utf8(out).map_err(|e| HarnessError::Report(e.to_string()))
}

/// Rows of a table produced by [`render_csv`]; comment lines are skipped.
pub fn parse_csv(text: &str) -> Result<Vec<BenchmarkRow>, HarnessError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    r.deserialize().collect::<Result<_, _>>().map_err(|e| HarnessError::Report(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub format_version: u32,
    pub config: CompareConfig,
    pub rows: Vec<BenchmarkRow>,
    /// Means over rows where both gaps exist.
    pub mean_gap_rb: Option<f64>,
    pub mean_gap_blp: Option<f64>,
}

impl CompareReport {
    pub fn new(config: &CompareConfig, rows: Vec<BenchmarkRow>) -> Self {
        let both: Vec<(f64, f64)> = rows.iter().filter_map(|r| Some((r.gap_rb?, r.gap_blp?))).collect();
        let mean = |f: fn(&(f64, f64)) -> f64| (!both.is_empty()).then(|| both.iter().map(f).sum::<f64>() / both.len() as f64);
        CompareReport {
            format_version: REPORT_FORMAT_VERSION,
            config: config.clone(),
            mean_gap_rb: mean(|p| p.0),
            mean_gap_blp: mean(|p| p.1),
            rows,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize") + "\n"
    }
}
