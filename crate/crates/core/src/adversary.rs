//! Worst-case attack search.
//!
//! Farmer loss decomposes into independent per-zone terms once a multiplier is
//! fixed for every zone:
//!
//! ```text
//! loss(z, m)  = corn_price * (Y0_z - AY_z(m)) + nitrogen_price * delta(z, m)
//! delta(z, m) = (m - 1) * inseason_z
//! ```
//!
//! where `Y0_z` is the control yield. Without a stealth budget the optimum is
//! a per-zone argmax. With a budget on the net in-season deviation
//! `|sum delta| <= budget` the search is a knapsack-style dynamic program over
//! zones, with deltas measured in whole units of `budget_resolution`
//! (truncated toward zero). Truncation lets the true net deviation exceed the
//! budget by less than one resolution step per zone; use a finer resolution
//! to tighten it. The budget is a stand-in for detectability; no
//! richer detection model is attempted.
//!
//! Equal-loss maps are ranked by how close each multiplier is to 1 (then by
//! the smaller multiplier), comparing zones from the last to the first.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::agronomy::{harvest, EconParams, Prescription, YieldBounds};
use crate::attack::{apply_attack, AttackScenario};
use crate::economics::{compile_ledger, Ledger, Totals};
use crate::error::{Error, Result};
use crate::field::FieldGrid;
use crate::zone::Grid;

/// DP tables larger than this fall back to the greedy search.
pub const MAX_DP_CELLS: u64 = 500_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Allowed multipliers, strictly ascending, must contain 1.
    pub multiplier_set: Vec<f64>,
    /// Bound on `|net in-season deviation|` in lb; `None` is unbounded.
    pub stealth_budget: Option<f64>,
    /// lb per DP unit.
    pub budget_resolution: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            multiplier_set: vec![0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 2.8],
            stealth_budget: None,
            budget_resolution: 1.0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        validate_multiplier_set(&self.multiplier_set)?;
        if let Some(b) = self.stealth_budget {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::Negative {
                    what: "stealth budget",
                    value: b,
                });
            }
        }
        if !(self.budget_resolution.is_finite() && self.budget_resolution > 0.0) {
            return Err(Error::NonPositive {
                what: "budget resolution",
                value: self.budget_resolution,
            });
        }
        Ok(())
    }
}

fn validate_multiplier_set(set: &[f64]) -> Result<()> {
    if set.is_empty() {
        return Err(Error::InvalidParameter("multiplier set is empty".into()));
    }
    if set.len() > u8::MAX as usize {
        return Err(Error::InvalidParameter(
            "multiplier set has more than 255 entries".into(),
        ));
    }
    if set.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "multipliers must be finite and >= 0: {set:?}"
        )));
    }
    if set.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(format!(
            "multiplier set must be strictly ascending: {set:?}"
        )));
    }
    if !set.contains(&1.0) {
        return Err(Error::InvalidParameter(format!(
            "multiplier set must contain 1.0 (the no-attack option): {set:?}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimality {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackSolution {
    pub scenario: AttackScenario,
    /// Farmer loss in dollars.
    pub loss: f64,
    /// Net in-season nitrogen change, lb.
    pub net_fertilizer_delta: f64,
    pub optimality: Optimality,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossEntry {
    /// Dollars lost by the farmer in this zone.
    pub loss: f64,
    /// In-season nitrogen change in this zone, lb.
    pub delta: f64,
}

/// Per-zone loss and nitrogen delta for every allowed multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneLossTable {
    pub multipliers: Vec<f64>,
    /// Row-major; each entry lists one [`LossEntry`] per multiplier.
    pub entries: Grid<Vec<LossEntry>>,
}

impl ZoneLossTable {
    pub fn shape(&self) -> (usize, usize) {
        self.entries.shape()
    }

    /// Option indices from most to least preferred on ties.
    fn preference(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.multipliers.len()).collect();
        idx.sort_by(|&a, &b| prefer(self.multipliers[a], self.multipliers[b]));
        idx
    }

    fn ranks(&self) -> Vec<usize> {
        let mut rank = vec![0; self.multipliers.len()];
        for (r, i) in self.preference().into_iter().enumerate() {
            rank[i] = r;
        }
        rank
    }

    fn solution(
        &self,
        name: &str,
        choice: &[usize],
        optimality: Optimality,
    ) -> Result<AttackSolution> {
        let (rows, cols) = self.shape();
        let mut loss = 0.0;
        let mut delta = 0.0;
        for (entries, &c) in self.entries.cells().iter().zip(choice) {
            loss += entries[c].loss;
            delta += entries[c].delta;
        }
        let multipliers = Grid::new(
            rows,
            cols,
            choice.iter().map(|&c| self.multipliers[c]).collect(),
        )?;
        Ok(AttackSolution {
            scenario: AttackScenario::new(name, multipliers, false)?,
            loss,
            net_fertilizer_delta: delta,
            optimality,
        })
    }
}

/// Tie-break order on multipliers: nearest to 1 first, then smaller.
pub fn prefer(a: f64, b: f64) -> Ordering {
    (a - 1.0)
        .abs()
        .total_cmp(&(b - 1.0).abs())
        .then(a.total_cmp(&b))
}

pub fn zone_loss_table(
    field: &FieldGrid,
    prescription: &Prescription,
    econ: &EconParams,
    bounds: &YieldBounds,
    multiplier_set: &[f64],
) -> Result<ZoneLossTable> {
    validate_multiplier_set(multiplier_set)?;
    prescription
        .zones
        .ensure_shape(field.rows(), field.cols())?;
    let coeffs = prescription.coefficients;
    let cells = field
        .zones()
        .iter()
        .zip(prescription.zones.cells())
        .map(|(zone, rx)| {
            let baseline = crate::agronomy::yield_from_rate(rx.n_rec, zone, bounds, &coeffs)?;
            multiplier_set
                .iter()
                .map(|&m| {
                    let applied = rx.planting + m * rx.inseason;
                    let actual = crate::agronomy::yield_from_rate(applied, zone, bounds, &coeffs)?;
                    let delta = (m - 1.0) * rx.inseason;
                    Ok(LossEntry {
                        loss: econ.corn_price * (baseline - actual) + econ.nitrogen_price * delta,
                        delta,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ZoneLossTable {
        multipliers: multiplier_set.to_vec(),
        entries: Grid::new(field.rows(), field.cols(), cells)?,
    })
}

pub fn worst_case_unconstrained(table: &ZoneLossTable) -> Result<AttackSolution> {
    let order = table.preference();
    let choice: Vec<usize> = table
        .entries
        .cells()
        .iter()
        .map(|entries| {
            // Strict improvement only, so the preferred option keeps ties.
            let mut best = order[0];
            for &i in &order[1..] {
                if entries[i].loss > entries[best].loss {
                    best = i;
                }
            }
            best
        })
        .collect();
    table.solution("optimized", &choice, Optimality::Exact)
}

/// Maximizes loss subject to `|sum of in-season deltas| <= budget`.
pub fn worst_case_budgeted(
    table: &ZoneLossTable,
    stealth_budget: Option<f64>,
    budget_resolution: f64,
) -> Result<AttackSolution> {
    worst_case_budgeted_with_limit(table, stealth_budget, budget_resolution, MAX_DP_CELLS)
}

pub(crate) fn delta_units(delta: f64, resolution: f64) -> i64 {
    (delta / resolution).trunc() as i64
}

pub(crate) fn worst_case_budgeted_with_limit(
    table: &ZoneLossTable,
    stealth_budget: Option<f64>,
    budget_resolution: f64,
    max_cells: u64,
) -> Result<AttackSolution> {
    let Some(budget) = stealth_budget else {
        return worst_case_unconstrained(table);
    };
    OptimizerConfig {
        multiplier_set: table.multipliers.clone(),
        stealth_budget,
        budget_resolution,
    }
    .validate()?;
    let limit = (budget / budget_resolution).floor() as i64;
    let units: Vec<Vec<i64>> = table
        .entries
        .cells()
        .iter()
        .map(|es| {
            es.iter()
                .map(|e| delta_units(e.delta, budget_resolution))
                .collect()
        })
        .collect();

    let n = units.len();
    // Reachable partial-sum window before each zone, trimmed to sums that can
    // still end inside [-limit, limit].
    let mut suffix_min = vec![0i64; n + 1];
    let mut suffix_max = vec![0i64; n + 1];
    for z in (0..n).rev() {
        suffix_min[z] = suffix_min[z + 1] + units[z].iter().min().expect("nonempty");
        suffix_max[z] = suffix_max[z + 1] + units[z].iter().max().expect("nonempty");
    }
    let mut windows = Vec::with_capacity(n + 1);
    let (mut pre_min, mut pre_max) = (0i64, 0i64);
    for z in 0..=n {
        let lo = pre_min.max(-limit - suffix_max[z]);
        let hi = pre_max.min(limit - suffix_min[z]);
        windows.push((lo, hi));
        if z < n {
            pre_min += units[z].iter().min().expect("nonempty");
            pre_max += units[z].iter().max().expect("nonempty");
        }
    }
    let cells: u64 = windows
        .iter()
        .map(|&(lo, hi)| (hi - lo + 1).max(0) as u64)
        .sum::<u64>()
        .saturating_mul(table.multipliers.len() as u64);
    if cells > max_cells {
        return greedy_budgeted(table, &units, limit);
    }

    let order = table.preference();
    let ranks = table.ranks();
    let mut prev: Vec<f64> = vec![0.0];
    let mut prev_lo = 0i64;
    // choices[z][s - lo_{z+1}] = option taken at zone z to land on partial sum s.
    let mut choices: Vec<Vec<u8>> = Vec::with_capacity(n);
    for z in 0..n {
        let (lo, hi) = windows[z + 1];
        let width = (hi - lo + 1).max(0) as usize;
        let mut cur = vec![f64::NEG_INFINITY; width];
        let mut pick = vec![u8::MAX; width];
        let entries = &table.entries.cells()[z];
        for &opt in &order {
            let u = units[z][opt];
            let loss = entries[opt].loss;
            for (i, &v) in prev.iter().enumerate() {
                if v == f64::NEG_INFINITY {
                    continue;
                }
                let s = prev_lo + i as i64 + u;
                if s < lo || s > hi {
                    continue;
                }
                let j = (s - lo) as usize;
                let cand = v + loss;
                if cand > cur[j] {
                    cur[j] = cand;
                    pick[j] = opt as u8;
                }
            }
        }
        choices.push(pick);
        prev = cur;
        prev_lo = lo;
    }

    let reconstruct = |end: i64| -> Vec<usize> {
        let mut choice = vec![0usize; n];
        let mut s = end;
        for z in (0..n).rev() {
            let (lo, _) = windows[z + 1];
            let opt = choices[z][(s - lo) as usize] as usize;
            choice[z] = opt;
            s -= units[z][opt];
        }
        choice
    };

    let mut best: Option<(f64, Vec<usize>)> = None;
    for (i, &v) in prev.iter().enumerate() {
        if v == f64::NEG_INFINITY {
            continue;
        }
        let end = prev_lo + i as i64;
        if end.abs() > limit {
            continue;
        }
        let better = match &best {
            None => true,
            Some((bv, bc)) => {
                v > *bv
                    || (v == *bv && compare_maps(&reconstruct(end), bc, &ranks) == Ordering::Less)
            }
        };
        if better {
            best = Some((v, reconstruct(end)));
        }
    }
    let (_, choice) = best.ok_or_else(|| {
        Error::Invariant("no feasible attack map; the no-attack map should always fit".into())
    })?;
    table.solution("optimized", &choice, Optimality::Exact)
}

/// Reverse-lexicographic preference between two equal-loss maps.
pub(crate) fn compare_maps(a: &[usize], b: &[usize], ranks: &[usize]) -> Ordering {
    for (x, y) in a.iter().rev().zip(b.iter().rev()) {
        match ranks[*x].cmp(&ranks[*y]) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Greedy repair from the unconstrained optimum: repeatedly take the single
/// zone change that shrinks `|sum units|` at the least loss per unit.
fn greedy_budgeted(
    table: &ZoneLossTable,
    units: &[Vec<i64>],
    limit: i64,
) -> Result<AttackSolution> {
    let unconstrained = worst_case_unconstrained(table)?;
    let mut choice: Vec<usize> = unconstrained
        .scenario
        .multipliers
        .cells()
        .iter()
        .map(|m| {
            table
                .multipliers
                .iter()
                .position(|x| x == m)
                .expect("from table")
        })
        .collect();
    let mut sum: i64 = choice.iter().enumerate().map(|(z, &c)| units[z][c]).sum();
    while sum.abs() > limit {
        let mut best: Option<(f64, usize, usize)> = None;
        for (z, entries) in table.entries.cells().iter().enumerate() {
            for opt in 0..entries.len() {
                let new_sum = sum - units[z][choice[z]] + units[z][opt];
                let reduction = sum.abs() - new_sum.abs();
                if reduction <= 0 {
                    continue;
                }
                let cost = (entries[choice[z]].loss - entries[opt].loss) / reduction as f64;
                if best.is_none_or(|(c, _, _)| cost < c) {
                    best = Some((cost, z, opt));
                }
            }
        }
        let Some((_, z, opt)) = best else {
            let one = table
                .multipliers
                .iter()
                .position(|&m| m == 1.0)
                .expect("validated");
            choice.iter_mut().for_each(|c| *c = one);
            break;
        };
        sum = sum - units[z][choice[z]] + units[z][opt];
        choice[z] = opt;
    }
    table.solution("optimized", &choice, Optimality::Heuristic)
}

/// Everything computed for one scenario on one field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub scenario: AttackScenario,
    /// Total nitrogen reaching each zone, lb/acre.
    pub applied: Grid<f64>,
    /// Control yield per zone, bu/acre.
    pub expected_yields: Grid<f64>,
    /// Post-attack yield per zone, bu/acre.
    pub yields: Grid<f64>,
    /// Per-zone farmer loss, dollars.
    pub zone_loss: Grid<f64>,
    pub ledger: Ledger,
}

/// Attack, harvest and ledger in one pass.
pub fn assess_scenario(
    field: &FieldGrid,
    prescription: &Prescription,
    scenario: &AttackScenario,
    econ: &EconParams,
    bounds: &YieldBounds,
) -> Result<ScenarioOutcome> {
    let coeffs = prescription.coefficients;
    let control_n = prescription.n_rec();
    let expected = harvest(field, &control_n, bounds, &coeffs)?;
    let applied = apply_attack(prescription, scenario)?;
    let actual = harvest(field, &applied, bounds, &coeffs)?;
    let ledger = compile_ledger(
        Totals::new(expected.total, control_n.total()),
        Totals::new(actual.total, applied.total()),
        econ,
    )?;
    let yield_gap = expected.yields.zip_with(&actual.yields, |e, a| e - a)?;
    let n_gap = applied.zip_with(&control_n, |a, c| a - c)?;
    let zone_loss =
        yield_gap.zip_with(&n_gap, |y, n| econ.corn_price * y + econ.nitrogen_price * n)?;
    Ok(ScenarioOutcome {
        scenario: scenario.clone(),
        applied,
        expected_yields: expected.yields,
        yields: actual.yields,
        zone_loss,
        ledger,
    })
}

pub fn evaluate_scenario(
    field: &FieldGrid,
    prescription: &Prescription,
    scenario: &AttackScenario,
    econ: &EconParams,
    bounds: &YieldBounds,
) -> Result<Ledger> {
    Ok(assess_scenario(field, prescription, scenario, econ, bounds)?.ledger)
}

/// Builds the loss table and runs the search `config` asks for.
pub fn optimize(
    field: &FieldGrid,
    prescription: &Prescription,
    econ: &EconParams,
    bounds: &YieldBounds,
    config: &OptimizerConfig,
) -> Result<AttackSolution> {
    config.validate()?;
    let table = zone_loss_table(field, prescription, econ, bounds, &config.multiplier_set)?;
    worst_case_budgeted(&table, config.stealth_budget, config.budget_resolution)
}
