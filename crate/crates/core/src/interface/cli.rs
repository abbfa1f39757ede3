//! Command-line front end.
//!
//! Field selection for every subcommand, first match wins: `--field <csv>`,
//! `--seed <n>` (10x10, default ranges unless `--rows/--cols` are given), the
//! `[field]` section of `--config`, the bundled calibrated field.
//!
//! Exit codes: 0 success, 1 usage, 2 configuration or data, 3 internal
//! invariant.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::adversary::{optimize, OptimizerConfig};
use crate::agronomy::{harvest, prescribe_field, EconParams};
use crate::attack::{apply_attack, simulate_pass, AttackScenario};
use crate::economics::{compile_ledger, round_cents, Totals};
use crate::error::{Error, Result};
use crate::field::generate_field;
use crate::interface::calibration::assess_calibration;
use crate::interface::config::{
    load_config, FieldSource, ResolvedConfig, RunConfig, ScenarioRef, TraversalKind,
};
use crate::interface::fixtures::{
    fixture_checksums, ReferenceAggregates, CONTROL_PLANTING_N, REFERENCE_CONTROL,
    REFERENCE_SCENARIOS, SCENARIO1_EXTRA_FERTILIZER, SCENARIO1_SALES_LOSS,
};
use crate::interface::grid_csv::{read_grid_csv, write_field_csv, write_grid_csv};
use crate::interface::report::{
    emit_report, run_report, summary_table, RunInputs, RunMetadata, ScenarioTag,
};

#[derive(Debug, Parser)]
#[command(
    name = "sidedress",
    version,
    about = "Simulate rate-tampering attacks on side-dress nitrogen applications"
)]
pub struct Cli {
    /// Seed for a generated field.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct FieldArgs {
    /// Field CSV (`EY|NO3|OM|credits` cells).
    #[arg(long)]
    pub field: Option<PathBuf>,
    /// Rows of a seeded field (needs --seed).
    #[arg(long)]
    pub rows: Option<usize>,
    /// Columns of a seeded field (needs --seed).
    #[arg(long)]
    pub cols: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TraversalArg {
    Serpentine,
    RowMajor,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded field CSV.
    GenField {
        #[arg(long, default_value_t = 10)]
        rows: usize,
        #[arg(long, default_value_t = 10)]
        cols: usize,
    },
    /// Per-zone recommendation, planting and in-season grids.
    Prescribe {
        #[command(flatten)]
        field: FieldArgs,
    },
    /// Apply one scenario and report applied grids and stealth metrics.
    Attack {
        #[command(flatten)]
        field: FieldArgs,
        /// identity, 1, 2, 3 or a scenario document.
        #[arg(long)]
        scenario: String,
        /// Show commanded rates on the operator display.
        #[arg(long)]
        spoof: bool,
        #[arg(long, value_enum)]
        traversal: Option<TraversalArg>,
    },
    /// Yield grid for a field and an applied-nitrogen grid.
    Harvest {
        #[command(flatten)]
        field: FieldArgs,
        /// Total applied nitrogen per zone (grid CSV).
        #[arg(long)]
        applied: PathBuf,
    },
    /// Full pipeline: control, configured scenarios, optional optimizer.
    Report {
        #[command(flatten)]
        field: FieldArgs,
    },
    /// Worst-case tampering map under an optional stealth budget.
    Optimize {
        #[command(flatten)]
        field: FieldArgs,
        /// Comma-separated multiplier set.
        #[arg(long, value_delimiter = ',')]
        multipliers: Option<Vec<f64>>,
        /// Bound on |net in-season change|, lb.
        #[arg(long)]
        budget: Option<f64>,
        /// lb per budget unit.
        #[arg(long)]
        resolution: Option<f64>,
    },
    /// Compare the bundled calibrated field with the reported aggregates.
    ReproducePaper,
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let mut stdout = std::io::stdout().lock();
    match execute(&cli, &mut stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) => 1,
        Error::Invariant(_) => 3,
        _ => 2,
    }
}

fn config(cli: &Cli) -> Result<ResolvedConfig> {
    match &cli.config {
        Some(path) => load_config(path),
        None => RunConfig::default().resolve(Path::new(".")),
    }
}

fn field_source(cli: &Cli, args: &FieldArgs, config: &ResolvedConfig) -> Result<FieldSource> {
    if (args.rows.is_some() || args.cols.is_some()) && cli.seed.is_none() {
        return Err(Error::Usage("--rows and --cols need --seed".into()));
    }
    if let Some(path) = &args.field {
        return Ok(FieldSource::File(path.clone()));
    }
    if let Some(seed) = cli.seed {
        let mut source = FieldSource::seeded(seed);
        if let FieldSource::Seeded {
            rows, cols, ranges, ..
        } = &mut source
        {
            if let FieldSource::Seeded {
                ranges: configured, ..
            } = &config.field
            {
                *ranges = *configured;
            }
            *rows = args.rows.unwrap_or(*rows);
            *cols = args.cols.unwrap_or(*cols);
        }
        return Ok(source);
    }
    Ok(config.field.clone())
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Runs a parsed command, writing human output to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let config = config(cli)?;
    match &cli.command {
        Command::GenField { rows, cols } => {
            let seed = cli.seed.or(config.field.seed()).ok_or_else(|| {
                Error::Usage("gen-field needs --seed or a seeded [field] config".into())
            })?;
            let ranges = match &config.field {
                FieldSource::Seeded { ranges, .. } => *ranges,
                _ => Default::default(),
            };
            let doc = write_field_csv(&generate_field(seed, *rows, *cols, &ranges)?);
            match &cli.out {
                Some(dir) => write_file(&dir.join("field.csv"), &doc)?,
                None => emit(out, &doc)?,
            }
        }
        Command::Prescribe { field } => {
            let f = field_source(cli, field, &config)?.load()?;
            let rx = prescribe_field(&f, &config.econ, config.split)?;
            match &cli.out {
                Some(dir) => {
                    write_file(&dir.join("prescribed_n.csv"), &write_grid_csv(&rx.n_rec()))?;
                    write_file(&dir.join("planting_n.csv"), &write_grid_csv(&rx.planting()))?;
                    write_file(&dir.join("inseason_n.csv"), &write_grid_csv(&rx.inseason()))?;
                    emit(
                        out,
                        &format!(
                            "planting {:.1} lb, in-season {:.1} lb, total {:.1} lb\n",
                            rx.planting_total(),
                            rx.inseason_total(),
                            rx.total()
                        ),
                    )?;
                }
                None => emit(out, &write_grid_csv(&rx.n_rec()))?,
            }
        }
        Command::Attack {
            field,
            scenario,
            spoof,
            traversal,
        } => {
            let f = field_source(cli, field, &config)?.load()?;
            let rx = prescribe_field(&f, &config.econ, config.split)?;
            let mut s: AttackScenario =
                ScenarioRef::parse_cli(scenario).load(f.rows(), f.cols())?;
            s.spoof_display |= *spoof;
            let traversal = match traversal {
                Some(TraversalArg::Serpentine) => TraversalKind::Serpentine,
                Some(TraversalArg::RowMajor) => TraversalKind::RowMajor,
                None => config.traversal,
            }
            .traversal();
            let pass = simulate_pass(&rx, &s, &traversal)?;
            if pass.applied_totals != apply_attack(&rx, &s)? {
                return Err(Error::Invariant(
                    "pass replay disagrees with apply_attack".into(),
                ));
            }
            if let Some(dir) = &cli.out {
                let records = pass.record_grid(f.rows(), f.cols())?;
                write_file(
                    &dir.join("applied_n.csv"),
                    &write_grid_csv(&pass.applied_totals),
                )?;
                write_file(
                    &dir.join("inseason_n.csv"),
                    &write_grid_csv(&records.map(|r| r.applied)),
                )?;
                write_file(
                    &dir.join("displayed_n.csv"),
                    &write_grid_csv(&records.map(|r| r.displayed)),
                )?;
                write_file(&dir.join("stealth.json"), &json(&pass.metrics))?;
            }
            emit(out, &json(&pass.metrics))?;
        }
        Command::Harvest { field, applied } => {
            let f = field_source(cli, field, &config)?.load()?;
            let text = fs::read_to_string(applied).map_err(|e| Error::io(applied, e))?;
            let applied = read_grid_csv(&text)?;
            let coeffs = config.econ.response()?;
            let h = harvest(&f, &applied, &config.yield_bounds, &coeffs)?;
            let doc = write_grid_csv(&h.yields);
            match &cli.out {
                Some(dir) => {
                    write_file(&dir.join("yield.csv"), &doc)?;
                    emit(out, &format!("total yield {:.1} bu\n", h.total))?;
                }
                None => emit(out, &doc)?,
            }
        }
        Command::Report { field } => {
            let source = field_source(cli, field, &config)?;
            let report = run_report(&run_inputs(&config, &source, config.optimizer.clone())?)?;
            let dir = cli.out.clone().unwrap_or_else(|| config.output_dir.clone());
            emit_report(&report, &dir)?;
            emit(out, &summary_table(&report))?;
        }
        Command::Optimize {
            field,
            multipliers,
            budget,
            resolution,
        } => {
            let source = field_source(cli, field, &config)?;
            let mut opt = config.optimizer.clone().unwrap_or_default();
            if let Some(set) = multipliers {
                opt.multiplier_set = set.clone();
            }
            if budget.is_some() {
                opt.stealth_budget = *budget;
            }
            if let Some(r) = resolution {
                opt.budget_resolution = *r;
            }
            opt.validate()?;
            let inputs = run_inputs(&config, &source, Some(opt.clone()))?;
            let report = run_report(&inputs)?;
            let dir = cli.out.clone().unwrap_or_else(|| config.output_dir.clone());
            emit_report(&report, &dir)?;
            let solution = optimize(
                &inputs.field,
                &prescribe_field(&inputs.field, &config.econ, config.split)?,
                &config.econ,
                &config.yield_bounds,
                &opt,
            )?;
            write_file(
                &dir.join("optimized_solution.json"),
                &json(&SolutionDoc::from(&solution)),
            )?;
            emit(out, &summary_table(&report))?;
        }
        Command::ReproducePaper => {
            let source = match cli.seed {
                Some(seed) => FieldSource::seeded(seed),
                None => FieldSource::Calibrated,
            };
            let (table, ok) = reproduce_paper(&source, &config)?;
            emit(out, &table)?;
            if let Some(dir) = &cli.out {
                let report = run_report(&run_inputs(&config, &source, config.optimizer.clone())?)?;
                emit_report(&report, dir)?;
                write_file(&dir.join("reproduce.txt"), &table)?;
            }
            return Ok(if ok { 0 } else { 3 });
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct SolutionDoc {
    format_version: u32,
    optimality: crate::adversary::Optimality,
    loss: f64,
    net_fertilizer_delta: f64,
    multipliers: crate::zone::Grid<f64>,
}

impl From<&crate::adversary::AttackSolution> for SolutionDoc {
    fn from(s: &crate::adversary::AttackSolution) -> Self {
        Self {
            format_version: crate::interface::config::FORMAT_VERSION,
            optimality: s.optimality,
            loss: round_cents(s.loss),
            net_fertilizer_delta: s.net_fertilizer_delta,
            multipliers: s.scenario.multipliers.clone(),
        }
    }
}

pub fn run_inputs(
    config: &ResolvedConfig,
    source: &FieldSource,
    optimizer: Option<OptimizerConfig>,
) -> Result<RunInputs> {
    let field = source.load()?;
    let scenarios = config
        .scenarios
        .iter()
        .map(|r| {
            let tag = if r.is_builtin() {
                ScenarioTag::Builtin
            } else {
                ScenarioTag::Custom
            };
            Ok((r.load(field.rows(), field.cols())?, tag))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunInputs {
        field,
        econ: config.econ,
        split: config.split,
        yield_bounds: config.yield_bounds,
        scenarios,
        traversal: config.traversal.traversal(),
        optimizer,
        metadata: RunMetadata::new(source.seed(), config.digest.clone(), source.describe()),
    })
}

struct Row {
    item: String,
    computed: f64,
    target: f64,
    tolerance: f64,
    /// Counts toward the exit status.
    strict: bool,
}

impl Row {
    fn pass(&self) -> bool {
        (self.computed - self.target).abs() <= self.tolerance
    }
}

/// Relative tolerance for aggregates that depend on the exact input field.
const FIXTURE_TOLERANCE: f64 = 0.05;

fn ledger_rows(case: &ReferenceAggregates, econ: &EconParams, rows: &mut Vec<Row>) -> Result<()> {
    let l = compile_ledger(
        Totals::new(REFERENCE_CONTROL.yield_total, REFERENCE_CONTROL.n_total),
        Totals::new(case.yield_total, case.n_total),
        econ,
    )?;
    let mut push = |what: &str, computed: f64, target: f64| {
        rows.push(Row {
            item: format!("{} {what}", case.name),
            computed: round_cents(computed),
            target,
            tolerance: 0.01 + 1e-9,
            strict: true,
        })
    };
    push("revenue", l.actual_revenue, case.revenue);
    push("cost", l.actual_cost, case.cost);
    push("profit", l.actual_profit, case.profit);
    if case.loss > 0.0 {
        push("loss", l.profit_loss_gain, case.loss);
    }
    if case.name == "scenario-1" {
        push("sales loss", l.sales_loss(), SCENARIO1_SALES_LOSS);
        push(
            "extra fertilizer",
            l.extra_fertilizer_cost(),
            SCENARIO1_EXTRA_FERTILIZER,
        );
    }
    Ok(())
}

/// The comparison table and whether every strict row passed.
pub fn reproduce_paper(source: &FieldSource, config: &ResolvedConfig) -> Result<(String, bool)> {
    let econ = EconParams::default();
    let mut rows = Vec::new();

    let coeff = crate::agronomy::price_adjustment(econ.corn_price, econ.nitrogen_price)?;
    rows.push(Row {
        item: "price adjustment".into(),
        computed: coeff,
        target: 0.926,
        tolerance: 0.0005,
        strict: true,
    });
    ledger_rows(&REFERENCE_CONTROL, &econ, &mut rows)?;
    for case in &REFERENCE_SCENARIOS {
        ledger_rows(case, &econ, &mut rows)?;
    }
    for c in fixture_checksums()? {
        rows.push(Row {
            item: format!("{} grid sum", c.name),
            computed: c.sum,
            target: c.stated_total,
            tolerance: crate::interface::fixtures::CHECKSUM_SLACK,
            strict: true,
        });
    }

    let field = source.load()?;
    let fit = assess_calibration(&field)?;
    let rx = prescribe_field(&field, &econ, config.split)?;
    let mut fixture = |item: &str, computed: f64, target: f64| {
        rows.push(Row {
            item: item.into(),
            computed,
            target,
            tolerance: FIXTURE_TOLERANCE * target.abs(),
            strict: false,
        })
    };
    fixture(
        "control planting N",
        rx.planting_total(),
        CONTROL_PLANTING_N,
    );
    fixture(
        "control in-season N",
        rx.inseason_total(),
        REFERENCE_CONTROL.inseason_n,
    );
    fixture("control total N", fit.control_n, REFERENCE_CONTROL.n_total);
    fixture(
        "control yield",
        fit.control_yield,
        REFERENCE_CONTROL.yield_total,
    );
    for (i, case) in REFERENCE_SCENARIOS.iter().enumerate() {
        let s = crate::attack::builtin_scenario(
            crate::attack::BuiltinScenario::all_attacks()[i],
            field.rows(),
            field.cols(),
        )?;
        let outcome = crate::adversary::assess_scenario(
            &field,
            &rx,
            &s,
            &econ,
            &crate::agronomy::YieldBounds::default(),
        )?;
        fixture(
            &format!("{} in-season N", case.name),
            apply_attack(&rx, &s)?.total() - rx.planting_total(),
            case.inseason_n,
        );
        fixture(
            &format!("{} yield", case.name),
            fit.scenario_yields[i],
            case.yield_total,
        );
        fixture(
            &format!("{} loss", case.name),
            outcome.ledger.profit_loss_gain,
            case.loss,
        );
    }

    let mut table = format!(
        "{:<32} {:>14} {:>14} {:>12}  {}\n",
        "item", "computed", "reported", "difference", "status"
    );
    let mut ok = true;
    for r in &rows {
        let status = match (r.pass(), r.strict) {
            (true, true) => "PASS",
            (false, true) => "FAIL",
            (true, false) => "pass (fixture)",
            (false, false) => "off (fixture)",
        };
        ok &= r.pass() || !r.strict;
        let decimals = if r.tolerance < 0.001 { 4 } else { 2 };
        table.push_str(&format!(
            "{:<32} {:>14.d$} {:>14.d$} {:>12.d$}  {status}\n",
            r.item,
            r.computed,
            r.target,
            r.computed - r.target,
            d = decimals
        ));
    }
    table.push_str(&format!(
        "field: {}; strict rows {}\n",
        source.describe(),
        if ok { "all pass" } else { "FAILED" }
    ));
    Ok((table, ok))
}
