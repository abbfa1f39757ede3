//! Full-pipeline runs and the JSON report.
//!
//! `report.json` carries ledgers rounded to cents and per-zone grids at full
//! precision, so a reader can recompute any ledger line from the grids to
//! within a cent. The grid CSVs next to it are display copies: nitrogen and
//! yield to one decimal, money to cents.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::adversary::{assess_scenario, optimize, Optimality, OptimizerConfig};
use crate::agronomy::{
    harvest, prescribe_field, EconParams, ResponseCoefficients, SplitFractions, YieldBounds,
};
use crate::attack::{simulate_pass, AttackScenario, StealthMetrics, Traversal};
use crate::economics::{round_cents, Ledger};
use crate::error::{Error, Result};
use crate::field::FieldGrid;
use crate::interface::config::FORMAT_VERSION;
use crate::interface::grid_csv::{format_fixed, format_number, write_grid_csv_with};
use crate::zone::Grid;

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioTag {
    Control,
    Builtin,
    Custom,
    Optimized,
}

/// Inputs to one pipeline run.
#[derive(Debug, Clone)]
pub struct RunInputs {
    pub field: FieldGrid,
    pub econ: EconParams,
    pub split: SplitFractions,
    pub yield_bounds: YieldBounds,
    pub scenarios: Vec<(AttackScenario, ScenarioTag)>,
    pub traversal: Traversal,
    pub optimizer: Option<OptimizerConfig>,
    pub metadata: RunMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub tool: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub config_digest: String,
    pub field_source: String,
}

impl RunMetadata {
    pub fn new(seed: Option<u64>, config_digest: String, field_source: String) -> Self {
        Self {
            tool: TOOL_NAME.into(),
            tool_version: TOOL_VERSION.into(),
            seed,
            config_digest,
            field_source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Parameters {
    pub econ: EconParams,
    pub split: SplitFractions,
    pub yield_bounds: YieldBounds,
    pub coefficients: ResponseCoefficients,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlGrids {
    pub prescribed_n: Grid<f64>,
    pub planting_n: Grid<f64>,
    pub inseason_n: Grid<f64>,
    pub expected_yield: Grid<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlReport {
    /// lb, one decimal.
    pub planting_n_total: f64,
    pub inseason_n_total: f64,
    pub prescribed_n_total: f64,
    /// bu, one decimal.
    pub expected_yield_total: f64,
    pub grids: ControlGrids,
}

/// Ledger with money rounded to cents and quantities to one decimal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LedgerReport {
    pub expected_yield_total: f64,
    pub actual_yield_total: f64,
    pub expected_n_total: f64,
    pub actual_n_total: f64,
    pub expected_revenue: f64,
    pub expected_cost: f64,
    pub expected_profit: f64,
    pub actual_revenue: f64,
    pub actual_cost: f64,
    pub actual_profit: f64,
    pub profit_loss_gain: f64,
    pub sales_loss: f64,
    pub extra_fertilizer_cost: f64,
}

pub fn round_tenths(v: f64) -> f64 {
    (v * 10.0 + 0.5).floor() / 10.0
}

impl From<&Ledger> for LedgerReport {
    fn from(l: &Ledger) -> Self {
        Self {
            expected_yield_total: round_tenths(l.expected_yield_total),
            actual_yield_total: round_tenths(l.actual_yield_total),
            expected_n_total: round_tenths(l.expected_n_total),
            actual_n_total: round_tenths(l.actual_n_total),
            expected_revenue: round_cents(l.expected_revenue),
            expected_cost: round_cents(l.expected_cost),
            expected_profit: round_cents(l.expected_profit),
            actual_revenue: round_cents(l.actual_revenue),
            actual_cost: round_cents(l.actual_cost),
            actual_profit: round_cents(l.actual_profit),
            profit_loss_gain: round_cents(l.profit_loss_gain),
            sales_loss: round_cents(l.sales_loss()),
            extra_fertilizer_cost: round_cents(l.extra_fertilizer_cost()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioGrids {
    pub multipliers: Grid<f64>,
    /// In-season nitrogen actually applied, lb/acre.
    pub applied_inseason_n: Grid<f64>,
    /// Planting plus applied in-season nitrogen, lb/acre.
    pub applied_n: Grid<f64>,
    #[serde(rename = "yield")]
    pub yield_: Grid<f64>,
    /// Farmer loss per zone, dollars.
    pub zone_loss: Grid<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub tag: ScenarioTag,
    pub spoof_display: bool,
    pub ledger: LedgerReport,
    pub stealth: StealthMetrics,
    pub grids: ScenarioGrids,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerReport {
    pub config: OptimizerConfig,
    pub optimality: Optimality,
    /// Dollars, full precision.
    pub loss: f64,
    pub net_fertilizer_delta: f64,
}

/// One line of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub tag: ScenarioTag,
    pub expected_profit: f64,
    pub actual_profit: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDocument {
    pub format_version: u32,
    pub metadata: RunMetadata,
    pub parameters: Parameters,
    pub control: ControlReport,
    pub scenarios: Vec<ScenarioReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerReport>,
    pub summary: Vec<SummaryRow>,
}

impl ReportDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn scenario(&self, name: &str) -> Option<&ScenarioReport> {
        self.scenarios.iter().find(|s| s.name == name)
    }
}

fn scenario_report(
    inputs: &RunInputs,
    rx: &crate::agronomy::Prescription,
    scenario: &AttackScenario,
    tag: ScenarioTag,
) -> Result<ScenarioReport> {
    let outcome = assess_scenario(
        &inputs.field,
        rx,
        scenario,
        &inputs.econ,
        &inputs.yield_bounds,
    )?;
    let pass = simulate_pass(rx, scenario, &inputs.traversal)?;
    if pass.applied_totals != outcome.applied {
        return Err(Error::Invariant(format!(
            "pass replay and direct application disagree for {:?}",
            scenario.name
        )));
    }
    let records = pass.record_grid(rx.zones.rows(), rx.zones.cols())?;
    Ok(ScenarioReport {
        name: scenario.name.clone(),
        tag,
        spoof_display: scenario.spoof_display,
        ledger: LedgerReport::from(&outcome.ledger),
        stealth: pass.metrics,
        grids: ScenarioGrids {
            multipliers: scenario.multipliers.clone(),
            applied_inseason_n: records.map(|r| r.applied),
            applied_n: outcome.applied,
            yield_: outcome.yields,
            zone_loss: outcome.zone_loss,
        },
    })
}

/// Runs control, every scenario and (if configured) the optimizer.
pub fn run_report(inputs: &RunInputs) -> Result<ReportDocument> {
    let rx = prescribe_field(&inputs.field, &inputs.econ, inputs.split)?;
    let n_rec = rx.n_rec();
    let expected = harvest(
        &inputs.field,
        &n_rec,
        &inputs.yield_bounds,
        &rx.coefficients,
    )?;
    let control = ControlReport {
        planting_n_total: round_tenths(rx.planting_total()),
        inseason_n_total: round_tenths(rx.inseason_total()),
        prescribed_n_total: round_tenths(n_rec.total()),
        expected_yield_total: round_tenths(expected.total),
        grids: ControlGrids {
            prescribed_n: n_rec,
            planting_n: rx.planting(),
            inseason_n: rx.inseason(),
            expected_yield: expected.yields,
        },
    };

    let (rows, cols) = inputs.field.shape();
    let mut scenarios = vec![scenario_report(
        inputs,
        &rx,
        &AttackScenario::identity(rows, cols)?,
        ScenarioTag::Control,
    )?];
    scenarios[0].name = "control".into();
    for (scenario, tag) in &inputs.scenarios {
        scenarios.push(scenario_report(inputs, &rx, scenario, *tag)?);
    }

    let optimizer = match &inputs.optimizer {
        Some(config) => {
            let solution = optimize(
                &inputs.field,
                &rx,
                &inputs.econ,
                &inputs.yield_bounds,
                config,
            )?;
            let report = scenario_report(inputs, &rx, &solution.scenario, ScenarioTag::Optimized)?;
            let reported = round_cents(solution.loss);
            if (report.ledger.profit_loss_gain - reported).abs() > 0.011 {
                return Err(Error::Invariant(format!(
                    "optimizer loss {reported} disagrees with the evaluated ledger {}",
                    report.ledger.profit_loss_gain
                )));
            }
            scenarios.push(report);
            Some(OptimizerReport {
                config: config.clone(),
                optimality: solution.optimality,
                loss: solution.loss,
                net_fertilizer_delta: solution.net_fertilizer_delta,
            })
        }
        None => None,
    };

    let summary = scenarios
        .iter()
        .map(|s| SummaryRow {
            scenario: s.name.clone(),
            tag: s.tag,
            expected_profit: s.ledger.expected_profit,
            actual_profit: s.ledger.actual_profit,
            loss: s.ledger.profit_loss_gain,
        })
        .collect();

    Ok(ReportDocument {
        format_version: FORMAT_VERSION,
        metadata: inputs.metadata.clone(),
        parameters: Parameters {
            econ: inputs.econ,
            split: inputs.split,
            yield_bounds: inputs.yield_bounds,
            coefficients: rx.coefficients,
        },
        control,
        scenarios,
        optimizer,
        summary,
    })
}

/// File-name stem: lowercase ASCII letters, digits and dashes.
pub fn slug(name: &str) -> String {
    let mut out = String::new();
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    let trimmed = out.trim_matches('-');
    if trimmed.is_empty() {
        "scenario".into()
    } else {
        trimmed.into()
    }
}

fn tenths(v: f64) -> String {
    format_fixed(round_tenths(v), 1)
}

fn cents(v: f64) -> String {
    format_fixed(round_cents(v), 2)
}

pub fn summary_csv(report: &ReportDocument) -> String {
    let mut out = String::from("scenario,tag,expected_profit,actual_profit,loss\n");
    for row in &report.summary {
        let tag = serde_json::to_value(row.tag).expect("tag serializes");
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.scenario,
            tag.as_str().expect("tag is a string"),
            cents(row.expected_profit),
            cents(row.actual_profit),
            cents(row.loss)
        ));
    }
    out
}

/// Fixed-width summary table for terminals.
pub fn summary_table(report: &ReportDocument) -> String {
    let mut out = format!(
        "{:<24} {:>10} {:>16} {:>16} {:>14}\n",
        "scenario", "tag", "expected profit", "actual profit", "loss"
    );
    for row in &report.summary {
        let tag = serde_json::to_value(row.tag).expect("tag serializes");
        out.push_str(&format!(
            "{:<24} {:>10} {:>16} {:>16} {:>14}\n",
            row.scenario,
            tag.as_str().expect("tag is a string"),
            cents(row.expected_profit),
            cents(row.actual_profit),
            cents(row.loss)
        ));
    }
    out
}

/// Writes `report.json`, `summary.csv` and one CSV per grid into `dir`.
/// Returns the written paths in write order.
pub fn emit_report(report: &ReportDocument, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<(String, String)> = vec![
        ("report.json".into(), report.to_json()),
        ("summary.csv".into(), summary_csv(report)),
    ];
    let g = &report.control.grids;
    files.push((
        "control_prescribed_n.csv".into(),
        write_grid_csv_with(&g.prescribed_n, tenths),
    ));
    files.push((
        "control_planting_n.csv".into(),
        write_grid_csv_with(&g.planting_n, tenths),
    ));
    files.push((
        "control_inseason_n.csv".into(),
        write_grid_csv_with(&g.inseason_n, tenths),
    ));
    files.push((
        "control_expected_yield.csv".into(),
        write_grid_csv_with(&g.expected_yield, tenths),
    ));

    let mut used: Vec<String> = Vec::new();
    for s in report
        .scenarios
        .iter()
        .filter(|s| s.tag != ScenarioTag::Control)
    {
        let base = slug(&s.name);
        let mut stem = base.clone();
        let mut k = 2;
        while used.contains(&stem) || stem == "control" {
            stem = format!("{base}-{k}");
            k += 1;
        }
        used.push(stem.clone());
        let g = &s.grids;
        files.push((
            format!("{stem}_multipliers.csv"),
            write_grid_csv_with(&g.multipliers, format_number),
        ));
        files.push((
            format!("{stem}_inseason_n.csv"),
            write_grid_csv_with(&g.applied_inseason_n, tenths),
        ));
        files.push((
            format!("{stem}_applied_n.csv"),
            write_grid_csv_with(&g.applied_n, tenths),
        ));
        files.push((
            format!("{stem}_yield.csv"),
            write_grid_csv_with(&g.yield_, tenths),
        ));
        files.push((
            format!("{stem}_zone_loss.csv"),
            write_grid_csv_with(&g.zone_loss, cents),
        ));
    }

    files
        .into_iter()
        .map(|(name, body)| {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}
