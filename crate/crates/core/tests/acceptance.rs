//! Acceptance suite. Runs every criterion, prints one line each, and exits
//! nonzero if any failed.

use std::fs;
use std::path::Path;
use std::process::Command;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sidedress::adversary::{
    evaluate_scenario, worst_case_budgeted, worst_case_unconstrained, zone_loss_table,
};
use sidedress::agronomy::{
    prescribe_field, price_adjustment, recommend_nitrogen, yield_from_rate, EconParams,
    SplitFractions, YieldBounds,
};
use sidedress::attack::{builtin_scenario, BuiltinScenario};
use sidedress::economics::{compile_ledger, round_cents, Totals};
use sidedress::field::{generate_field, FieldGrid, GenerationRanges, Zone};
use sidedress::interface::fixtures::{
    calibrated_field, fixture_checksums, reference_grid, ReferenceAggregates, REFERENCE_CONTROL,
    REFERENCE_SCENARIOS,
};
use sidedress::zone::ZoneId;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

// Independent re-statement of the agronomic model, used as an oracle.
mod oracle {
    pub const CORN: f64 = 7.53;
    pub const NITROGEN: f64 = 1.10;
    pub const TIMING: f64 = 0.95;

    pub fn factor() -> f64 {
        let r = CORN / NITROGEN;
        (0.263 + 0.1256 * r - 0.00421 * r * r) * TIMING
    }

    /// (EY, NO3, OM) -> lb/acre.
    pub fn n_rec(z: (f64, f64, f64)) -> f64 {
        ((35.0 + 1.2 * z.0 - 8.0 * z.1 - 0.14 * z.0 * z.2) * factor()).max(0.0)
    }

    pub fn yield_at(n: f64, z: (f64, f64, f64)) -> f64 {
        let raw = (n / factor() + 8.0 * z.1 - 35.0) / (1.2 - 0.14 * z.2);
        raw.clamp(100.0, z.0 + 30.0)
    }
}

fn criterion_1() -> Outcome {
    let v = price_adjustment(7.53, 1.10).map_err(|e| e.to_string())?;
    check((v - 0.926).abs() <= 0.0005, format!("coefficient {v:.6}"))?;
    Ok(format!("price_adjustment(7.53, 1.10) = {v:.6}"))
}

fn criterion_2() -> Outcome {
    let econ = EconParams::default();
    let control = Totals::new(REFERENCE_CONTROL.yield_total, REFERENCE_CONTROL.n_total);
    let near = |a: f64, b: f64| (round_cents(a) - b).abs() <= 0.01 + 1e-9;
    let mut cases: Vec<&ReferenceAggregates> = vec![&REFERENCE_CONTROL];
    cases.extend(REFERENCE_SCENARIOS.iter());
    for case in cases {
        let l = compile_ledger(control, Totals::new(case.yield_total, case.n_total), &econ)
            .map_err(|e| e.to_string())?;
        // independent arithmetic
        let revenue = case.yield_total * 7.53;
        let cost = case.n_total * 1.10;
        let expected_profit =
            REFERENCE_CONTROL.yield_total * 7.53 - REFERENCE_CONTROL.n_total * 1.10;
        for (what, got, oracle, reported) in [
            ("revenue", l.actual_revenue, revenue, case.revenue),
            ("cost", l.actual_cost, cost, case.cost),
            ("profit", l.actual_profit, revenue - cost, case.profit),
            (
                "loss",
                l.profit_loss_gain,
                expected_profit - (revenue - cost),
                case.loss,
            ),
        ] {
            check(
                near(got, reported),
                format!("{} {what}: {got:.4} vs {reported}", case.name),
            )?;
            check(
                (got - oracle).abs() < 1e-6,
                format!("{} {what} drifts from oracle", case.name),
            )?;
        }
    }
    let s1 = &REFERENCE_SCENARIOS[0];
    let l = compile_ledger(control, Totals::new(s1.yield_total, s1.n_total), &econ)
        .map_err(|e| e.to_string())?;
    check(
        near(l.sales_loss(), 13_102.20),
        format!("sales loss {}", l.sales_loss()),
    )?;
    check(
        near(l.extra_fertilizer_cost(), 26.40),
        format!("fertilizer {}", l.extra_fertilizer_cost()),
    )?;
    // The reported scenario-3 sales-loss line (14,476.66) is $4.00 above the
    // difference of the reported revenues.
    let s3 = &REFERENCE_SCENARIOS[2];
    let s3_sales = REFERENCE_CONTROL.revenue - s3.revenue;
    check(
        (s3_sales - 14_472.66).abs() < 0.005,
        format!("scenario-3 sales loss {s3_sales}"),
    )?;
    Ok("control and scenarios 1-3 to the cent; scenario-3 sales loss is 14,472.66 (reported line 14,476.66 is off by $4.00)".into())
}

fn criterion_3() -> Outcome {
    let pinned = [11_094.0, 15_244.0, 11_049.0, 12_696.0, 11_109.0, 15_061.0];
    let stated = [11_093.0, 15_243.0, 11_044.0, 12_692.0, 11_106.0, 15_061.0];
    let sums = fixture_checksums().map_err(|e| e.to_string())?;
    for ((c, p), s) in sums.iter().zip(pinned).zip(stated) {
        check(
            c.stated_total == s,
            format!("{} stated total {}", c.name, c.stated_total),
        )?;
        check(
            (c.sum - s).abs() <= 50.0,
            format!("{} sum {} vs {s}", c.name, c.sum),
        )?;
        check(
            c.sum == p,
            format!("{} sum {} not pinned {p}", c.name, c.sum),
        )?;
    }
    let cell = |grid: &str, id: &str| -> Result<f64, String> {
        let g = reference_grid(grid)
            .ok_or("missing fixture")?
            .grid()
            .map_err(|e| e.to_string())?;
        Ok(*g
            .get(id.parse::<ZoneId>().map_err(|e| e.to_string())?)
            .ok_or("bad zone")?)
    };
    for (grid, id, want) in [
        ("s1_inseason_n", "A1", 110.0),
        ("s1_inseason_n", "B5", 48.0),
        ("s3_inseason_n", "B5", 24.0),
        ("s3_inseason_n", "C10", 232.0),
        ("s3_yield", "A1", 175.0),
    ] {
        let got = cell(grid, id)?;
        check(got == want, format!("{grid} {id} = {got}, expected {want}"))?;
    }
    Ok(format!(
        "sums {:?} within ±50 of {:?}; spot cells match",
        sums.iter().map(|c| c.sum).collect::<Vec<_>>(),
        stated
    ))
}

fn interior_zones(n: usize) -> Vec<Zone> {
    let field = generate_field(2024, 1, n, &GenerationRanges::default()).expect("field");
    field.zones().to_vec()
}

fn criterion_4() -> Outcome {
    let econ = EconParams::default();
    let coeffs = econ.response().map_err(|e| e.to_string())?;
    let bounds = YieldBounds::default();
    let zones = interior_zones(1000);
    let mut worst: f64 = 0.0;
    for z in &zones {
        let n = recommend_nitrogen(z, coeffs.price_adj, coeffs.timing_adj);
        check(n > 0.0, format!("{} recommendation not interior", z.id))?;
        let oracle_n = oracle::n_rec((z.yield_goal, z.soil_nitrate, z.organic_matter));
        check(
            (n - oracle_n).abs() <= 1e-9 * oracle_n,
            format!("{} n_rec {n} vs oracle {oracle_n}", z.id),
        )?;
        let y = yield_from_rate(n, z, &bounds, &coeffs).map_err(|e| e.to_string())?;
        let rel = (y - z.yield_goal).abs() / z.yield_goal;
        worst = worst.max(rel);
        check(rel <= 1e-9, format!("{}: {y} vs {}", z.id, z.yield_goal))?;
    }
    Ok(format!("1000 zones, worst relative error {worst:.2e}"))
}

fn criterion_5() -> Outcome {
    let coeffs = EconParams::default()
        .response()
        .map_err(|e| e.to_string())?;
    let bounds = YieldBounds::default();
    let zones = interior_zones(1000);
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut pairs = 0;
    for z in &zones {
        let mut rates: Vec<f64> = (0..10).map(|_| 400.0 * unit(&mut rng)).collect();
        rates.sort_by(f64::total_cmp);
        let mut prev = f64::NEG_INFINITY;
        for n in rates {
            let y = yield_from_rate(n, z, &bounds, &coeffs).map_err(|e| e.to_string())?;
            pairs += 1;
            check(
                (100.0..=z.yield_goal + 30.0).contains(&y),
                format!("{} rate {n}: yield {y} outside [100, EY+30]", z.id),
            )?;
            check(
                y >= prev,
                format!("{} rate {n}: yield {y} dropped below {prev}", z.id),
            )?;
            let o = oracle::yield_at(n, (z.yield_goal, z.soil_nitrate, z.organic_matter));
            check(
                (y - o).abs() <= 1e-9 * o,
                format!("{} rate {n}: {y} vs oracle {o}", z.id),
            )?;
            prev = y;
        }
    }
    Ok(format!("{pairs} (zone, rate) pairs"))
}

fn criterion_6() -> Outcome {
    let base = price_adjustment(7.53, 1.10).map_err(|e| e.to_string())?;
    for k in [0.1, 3.0, 10.0] {
        let v = price_adjustment(7.53 * k, 1.10 * k).map_err(|e| e.to_string())?;
        check((v - base).abs() <= 1e-12, format!("k = {k}: {v} vs {base}"))?;
    }
    Ok("k in {0.1, 3, 10} within 1e-12".into())
}

/// Exhaustive search over every multiplier map with the oracle model.
fn brute_force(field: &FieldGrid, set: &[f64], budget_units: i64) -> (f64, usize) {
    let zones: Vec<(f64, f64, f64)> = field
        .zones()
        .iter()
        .map(|z| (z.yield_goal, z.soil_nitrate, z.organic_matter))
        .collect();
    let per_zone: Vec<Vec<(f64, i64)>> = zones
        .iter()
        .map(|&z| {
            let n = oracle::n_rec(z);
            let planting = 0.25 * n;
            let ins = n - planting;
            let y0 = oracle::yield_at(n, z);
            set.iter()
                .map(|&m| {
                    let delta = (m - 1.0) * ins;
                    let loss = 7.53 * (y0 - oracle::yield_at(planting + m * ins, z)) + 1.10 * delta;
                    (loss, delta.trunc() as i64)
                })
                .collect()
        })
        .collect();
    let k = set.len();
    let total = k.pow(zones.len() as u32);
    let mut best = f64::NEG_INFINITY;
    for code in 0..total {
        let (mut c, mut loss, mut units) = (code, 0.0, 0i64);
        for options in &per_zone {
            let (l, u) = options[c % k];
            loss += l;
            units += u;
            c /= k;
        }
        if units.abs() <= budget_units && loss > best {
            best = loss;
        }
    }
    (best, total)
}

fn criterion_7() -> Outcome {
    let set = [0.0, 0.5, 1.0, 2.0, 2.8];
    let econ = EconParams::default();
    let bounds = YieldBounds::default();
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let field = generate_field(1_000 + seed, 2, 3, &GenerationRanges::default())
            .map_err(|e| e.to_string())?;
        let rx =
            prescribe_field(&field, &econ, SplitFractions::default()).map_err(|e| e.to_string())?;
        let table =
            zone_loss_table(&field, &rx, &econ, &bounds, &set).map_err(|e| e.to_string())?;
        let dp = worst_case_budgeted(&table, Some(50.0), 1.0).map_err(|e| e.to_string())?;
        let (oracle_loss, maps) = brute_force(&field, &set, 50);
        check(maps == 15_625, format!("{maps} maps"))?;
        let gap = (dp.loss - oracle_loss).abs();
        worst = worst.max(gap);
        check(
            gap <= 0.01,
            format!("seed {seed}: DP {} vs brute force {oracle_loss}", dp.loss),
        )?;
        let ledger = evaluate_scenario(&field, &rx, &dp.scenario, &econ, &bounds)
            .map_err(|e| e.to_string())?;
        check(
            (ledger.profit_loss_gain - dp.loss).abs() <= 0.01,
            format!(
                "seed {seed}: ledger {} vs DP {}",
                ledger.profit_loss_gain, dp.loss
            ),
        )?;
    }
    Ok(format!("20 fields x 15,625 maps, worst gap ${worst:.2e}"))
}

fn criterion_8() -> Outcome {
    let field = calibrated_field().map_err(|e| e.to_string())?;
    let econ = EconParams::default();
    let bounds = YieldBounds::default();
    let rx =
        prescribe_field(&field, &econ, SplitFractions::default()).map_err(|e| e.to_string())?;
    let set = [0.0, 0.5, 1.0, 1.5, 2.0];
    let table = zone_loss_table(&field, &rx, &econ, &bounds, &set).map_err(|e| e.to_string())?;
    let opt = worst_case_unconstrained(&table).map_err(|e| e.to_string())?;
    let over = opt
        .scenario
        .multipliers
        .cells()
        .iter()
        .filter(|&&m| m > 1.0)
        .count();
    check(over == 0, format!("{over} zones over-fertilized"))?;
    let mut builtin_losses = Vec::new();
    for which in BuiltinScenario::all_attacks() {
        let s = builtin_scenario(which, field.rows(), field.cols()).map_err(|e| e.to_string())?;
        let l = evaluate_scenario(&field, &rx, &s, &econ, &bounds).map_err(|e| e.to_string())?;
        check(
            opt.loss > l.profit_loss_gain,
            format!(
                "optimum {} does not exceed {} loss {}",
                opt.loss,
                which.name(),
                l.profit_loss_gain
            ),
        )?;
        builtin_losses.push(round_cents(l.profit_loss_gain));
    }
    let cut = opt
        .scenario
        .multipliers
        .cells()
        .iter()
        .filter(|&&m| m < 1.0)
        .count();
    Ok(format!(
        "optimum ${:.2} cuts {cut}/100 zones, raises none; builtin losses {builtin_losses:?}",
        opt.loss
    ))
}

fn run_report(dir: &Path, config: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_sidedress"))
        .arg("--config")
        .arg(config)
        .arg("--seed")
        .arg("77")
        .arg("--out")
        .arg(dir)
        .arg("report")
        .output()
        .map_err(|e| e.to_string())?;
    check(
        out.status.success(),
        format!(
            "report exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ),
    )
}

fn criterion_9() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = tmp.path().join("run.toml");
    fs::write(
        &config,
        "format_version = 1\nscenarios = [\"builtin:1\", \"builtin:2\", \"builtin:3\", \"identity\"]\n\
         [field]\nseed = 77\n[optimizer]\nmultiplier_set = [0.0, 0.5, 1.0, 1.5, 2.0]\nstealth_budget = 40.0\n",
    )
    .map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_report(&a, &config)?;
    run_report(&b, &config)?;
    let mut names: Vec<_> = fs::read_dir(&a)
        .map_err(|e| e.to_string())?
        .map(|e| e.map(|e| e.file_name()).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    names.sort();
    let b_count = fs::read_dir(&b).map_err(|e| e.to_string())?.count();
    check(names.len() == b_count, "different file sets")?;
    for name in &names {
        let x = fs::read(a.join(name)).map_err(|e| e.to_string())?;
        let y = fs::read(b.join(name)).map_err(|e| e.to_string())?;
        check(x == y, format!("{} differs", name.to_string_lossy()))?;
    }
    Ok(format!(
        "{} files byte-identical across two runs",
        names.len()
    ))
}

fn main() {
    // libtest-style flags (e.g. --nocapture) are accepted and ignored.
    let criteria: [Criterion; 9] = [
        ("price coefficient", criterion_1),
        ("cent-exact ledgers", criterion_2),
        ("fixture grids", criterion_3),
        ("yield round-trip", criterion_4),
        ("clamp and monotonicity", criterion_5),
        ("price homogeneity", criterion_6),
        ("optimizer vs brute force", criterion_7),
        ("under-fertilization", criterion_8),
        ("report determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "criterion 10 NOTE  per-zone reproduction of the reference grids needs an input field that is not available; \
         criteria 2 and 3 stand in for it"
    );
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
