//! Construction of the calibrated reference field.
//!
//! The reported per-zone inputs are not available, so the reference field is a
//! seeded stand-in chosen to land near the reported aggregates. Each candidate
//! seed draws a 10x10 field with [`generate_field_by_column`]; columns E and J
//! draw from a high-demand slice of the agronomic ranges, the rest from a
//! slice with slightly lower yield goals and higher nitrate. Both slices sit
//! inside 150-190 bu, 2-4 ppm and 1.8-2.2 % OM. The split is needed because
//! the reported scenario-2 net change (-25 lb) requires columns E and J to
//! carry about 23 % of the in-season nitrogen; a field drawn from a single
//! range puts that share near 20 % and the net change near -900 lb.
//!
//! The chosen seed minimizes [`CalibrationFit::score`] over a seed range and is
//! pinned in [`CALIBRATED_SEED`]; the resulting field is bundled as
//! `fixtures/calibrated_field.csv`. Regenerate with
//! `cargo run --release --example calibrate`.

use std::ops::Range;

use serde::Serialize;

use crate::agronomy::{harvest, prescribe_field, EconParams, SplitFractions, YieldBounds};
use crate::attack::{apply_attack, builtin_scenario, BuiltinScenario};
use crate::error::Result;
use crate::field::{generate_field_by_column, FieldGrid, GenerationRanges, Interval};
use crate::interface::fixtures::{REFERENCE_CONTROL, REFERENCE_SCENARIOS};

/// Best admissible seed in `0..6_000_000`.
pub const CALIBRATED_SEED: u64 = 5_373_615;

pub fn calibration_ranges(column: usize) -> GenerationRanges {
    if column == 4 || column == 9 {
        GenerationRanges {
            yield_goal: Interval::new(186.0, 190.0),
            nitrate: Interval::new(2.0, 2.4),
            organic_matter: Interval::new(1.8, 1.9),
            n_credits: 0.0,
        }
    } else {
        GenerationRanges {
            yield_goal: Interval::new(150.0, 180.0),
            nitrate: Interval::new(2.4, 4.0),
            organic_matter: Interval::new(1.8, 2.2),
            n_credits: 0.0,
        }
    }
}

pub fn generate_calibration_candidate(seed: u64) -> Result<FieldGrid> {
    generate_field_by_column(seed, 10, 10, calibration_ranges)
}

/// Aggregates of a candidate field under the reference prices, next to the
/// reported values they are matched against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationFit {
    pub control_yield: f64,
    pub control_n: f64,
    /// Net in-season change under scenarios 1-3, lb.
    pub scenario_deltas: [f64; 3],
    /// Post-attack yield totals under scenarios 1-3, bu.
    pub scenario_yields: [f64; 3],
    /// Distance from the closest zone recommendation to the 147 lb/acre
    /// reference zone.
    pub reference_zone_gap: f64,
}

pub const REFERENCE_ZONE_N: f64 = 147.0;
pub const REFERENCE_ZONE_TOL: f64 = 0.5;
/// Largest acceptable |net change| under scenario 2, lb.
pub const SCENARIO2_DELTA_LIMIT: f64 = 30.0;

// Score tolerances. Scenario 2's yield is left out: its reported per-zone grid
// is not consistent with the other scenarios' control.
const YIELD_TOL: f64 = 1.0;
const N_TOL: f64 = 1.0;
const DELTA_TOL: f64 = 3.0;
const ATTACK_YIELD_TOL: f64 = 100.0;

impl CalibrationFit {
    /// Hard requirements on the calibrated field.
    pub fn admissible(&self) -> bool {
        self.scenario_deltas[1].abs() <= SCENARIO2_DELTA_LIMIT
            && self.reference_zone_gap <= REFERENCE_ZONE_TOL
    }

    /// Weighted squared distance to the reported aggregates; infinite when
    /// not [`admissible`](Self::admissible).
    pub fn score(&self) -> f64 {
        if !self.admissible() {
            return f64::INFINITY;
        }
        let sq = |v: f64, target: f64, tol: f64| ((v - target) / tol).powi(2);
        let mut s = sq(self.control_yield, REFERENCE_CONTROL.yield_total, YIELD_TOL)
            + sq(self.control_n, REFERENCE_CONTROL.n_total, N_TOL);
        for (case, delta) in REFERENCE_SCENARIOS.iter().zip(self.scenario_deltas) {
            s += sq(
                delta,
                case.inseason_n - REFERENCE_CONTROL.inseason_n,
                DELTA_TOL,
            );
        }
        s += sq(
            self.scenario_yields[0],
            REFERENCE_SCENARIOS[0].yield_total,
            ATTACK_YIELD_TOL,
        );
        s += sq(
            self.scenario_yields[2],
            REFERENCE_SCENARIOS[2].yield_total,
            ATTACK_YIELD_TOL,
        );
        s
    }
}

pub fn assess_calibration(field: &FieldGrid) -> Result<CalibrationFit> {
    let econ = EconParams::default();
    let bounds = YieldBounds::default();
    let rx = prescribe_field(field, &econ, SplitFractions::default())?;
    let control_n = rx.n_rec();
    let reference_zone_gap = control_n
        .cells()
        .iter()
        .map(|n| (n - REFERENCE_ZONE_N).abs())
        .fold(f64::INFINITY, f64::min);
    let control_yield = harvest(field, &control_n, &bounds, &rx.coefficients)?.total;
    let mut scenario_deltas = [0.0; 3];
    let mut scenario_yields = [0.0; 3];
    for (i, which) in BuiltinScenario::all_attacks().into_iter().enumerate() {
        let s = builtin_scenario(which, 10, 10)?;
        let applied = apply_attack(&rx, &s)?;
        scenario_deltas[i] = applied.total() - control_n.total();
        scenario_yields[i] = harvest(field, &applied, &bounds, &rx.coefficients)?.total;
    }
    Ok(CalibrationFit {
        control_yield,
        control_n: control_n.total(),
        scenario_deltas,
        scenario_yields,
        reference_zone_gap,
    })
}

/// Best-scoring admissible seed in `seeds`; the lowest seed wins ties.
pub fn search_calibration(seeds: Range<u64>) -> Result<Option<(u64, CalibrationFit)>> {
    let mut best: Option<(u64, CalibrationFit)> = None;
    for seed in seeds {
        let fit = assess_calibration(&generate_calibration_candidate(seed)?)?;
        if fit.admissible() && best.as_ref().is_none_or(|(_, b)| fit.score() < b.score()) {
            best = Some((seed, fit));
        }
    }
    Ok(best)
}
