//! Bundled reference data.
//!
//! * Transcribed post-attack grids for the three reference scenarios (in-season
//!   nitrogen and yield, integers as printed, 10x10).
//! * The scenario-1 multiplier map. It is rebuilt from the scenario-1 in-season
//!   grid by snapping each printed rate to the nearest plausible multiple of a
//!   ~95-130 lb control rate: below 67 lb is 0.5, below 97 is 0.75, below 135
//!   is 1, below 197 is 1.5, otherwise 2.
//! * The aggregate totals reported for the control case and each scenario.
//! * The calibrated field (see [`super::calibration`]).

use serde::Serialize;

use crate::error::Result;
use crate::field::FieldGrid;
use crate::interface::grid_csv::{read_field_csv, read_grid_csv};
use crate::zone::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    InseasonNitrogen,
    Yield,
}

#[derive(Debug, Clone, Copy)]
pub struct ReferenceGrid {
    pub name: &'static str,
    pub scenario: u32,
    pub kind: FixtureKind,
    /// Unrounded field total quoted alongside the printed grid.
    pub stated_total: f64,
    pub csv: &'static str,
}

impl ReferenceGrid {
    pub fn grid(&self) -> Result<Grid<f64>> {
        read_grid_csv(self.csv)
    }
}

pub const REFERENCE_GRIDS: [ReferenceGrid; 6] = [
    ReferenceGrid {
        name: "s1_inseason_n",
        scenario: 1,
        kind: FixtureKind::InseasonNitrogen,
        stated_total: 11_093.0,
        csv: include_str!("../../fixtures/reference_inseason_n_scenario1.csv"),
    },
    ReferenceGrid {
        name: "s1_yield",
        scenario: 1,
        kind: FixtureKind::Yield,
        stated_total: 15_243.0,
        csv: include_str!("../../fixtures/reference_yield_scenario1.csv"),
    },
    ReferenceGrid {
        name: "s2_inseason_n",
        scenario: 2,
        kind: FixtureKind::InseasonNitrogen,
        stated_total: 11_044.0,
        csv: include_str!("../../fixtures/reference_inseason_n_scenario2.csv"),
    },
    ReferenceGrid {
        name: "s2_yield",
        scenario: 2,
        kind: FixtureKind::Yield,
        stated_total: 12_692.0,
        csv: include_str!("../../fixtures/reference_yield_scenario2.csv"),
    },
    ReferenceGrid {
        name: "s3_inseason_n",
        scenario: 3,
        kind: FixtureKind::InseasonNitrogen,
        stated_total: 11_106.0,
        csv: include_str!("../../fixtures/reference_inseason_n_scenario3.csv"),
    },
    ReferenceGrid {
        name: "s3_yield",
        scenario: 3,
        kind: FixtureKind::Yield,
        stated_total: 15_061.0,
        csv: include_str!("../../fixtures/reference_yield_scenario3.csv"),
    },
];

pub fn reference_grid(name: &str) -> Option<&'static ReferenceGrid> {
    REFERENCE_GRIDS.iter().find(|f| f.name == name)
}

/// Rounding slack when comparing a printed integer grid with an unrounded total.
pub const CHECKSUM_SLACK: f64 = 50.0;

#[derive(Debug, Clone, Serialize)]
pub struct FixtureChecksum {
    pub name: &'static str,
    pub sum: f64,
    pub min: f64,
    pub max: f64,
    pub stated_total: f64,
}

impl FixtureChecksum {
    pub fn within_slack(&self) -> bool {
        (self.sum - self.stated_total).abs() <= CHECKSUM_SLACK
    }
}

pub fn fixture_checksums() -> Result<Vec<FixtureChecksum>> {
    REFERENCE_GRIDS
        .iter()
        .map(|f| {
            let g = f.grid()?;
            Ok(FixtureChecksum {
                name: f.name,
                sum: g.total(),
                min: g.min(),
                max: g.max(),
                stated_total: f.stated_total,
            })
        })
        .collect()
}

const SCENARIO1_MULTIPLIERS: &str = include_str!("../../fixtures/scenario1_multipliers.csv");

pub fn scenario1_multipliers() -> Result<Grid<f64>> {
    read_grid_csv(SCENARIO1_MULTIPLIERS)
}

const CALIBRATED_FIELD: &str = include_str!("../../fixtures/calibrated_field.csv");

pub fn calibrated_field() -> Result<FieldGrid> {
    read_field_csv(CALIBRATED_FIELD)
}

pub fn calibrated_field_csv() -> &'static str {
    CALIBRATED_FIELD
}

/// Reported aggregates for one case.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReferenceAggregates {
    pub name: &'static str,
    /// bu.
    pub yield_total: f64,
    /// lb, planting plus in-season.
    pub n_total: f64,
    /// lb.
    pub inseason_n: f64,
    pub revenue: f64,
    pub cost: f64,
    pub profit: f64,
    pub loss: f64,
}

pub const CONTROL_PLANTING_N: f64 = 3_690.0;

pub const REFERENCE_CONTROL: ReferenceAggregates = ReferenceAggregates {
    name: "control",
    yield_total: 16_983.0,
    n_total: 14_759.0,
    inseason_n: 11_069.0,
    revenue: 127_881.99,
    cost: 16_234.90,
    profit: 111_647.09,
    loss: 0.0,
};

pub const REFERENCE_SCENARIOS: [ReferenceAggregates; 3] = [
    ReferenceAggregates {
        name: "scenario-1",
        yield_total: 15_243.0,
        n_total: 14_783.0,
        inseason_n: 11_093.0,
        revenue: 114_779.79,
        cost: 16_261.30,
        profit: 98_518.49,
        loss: 13_128.60,
    },
    ReferenceAggregates {
        name: "scenario-2",
        yield_total: 12_692.0,
        n_total: 14_734.0,
        inseason_n: 11_044.0,
        revenue: 95_570.76,
        cost: 16_207.40,
        profit: 79_363.36,
        loss: 32_283.73,
    },
    ReferenceAggregates {
        name: "scenario-3",
        yield_total: 15_061.0,
        n_total: 14_796.0,
        inseason_n: 11_106.0,
        revenue: 113_409.33,
        cost: 16_275.60,
        profit: 97_133.73,
        loss: 14_513.36,
    },
];

/// Scenario-1 decomposition of the loss: lost sales and extra fertilizer.
pub const SCENARIO1_SALES_LOSS: f64 = 13_102.20;
pub const SCENARIO1_EXTRA_FERTILIZER: f64 = 26.40;
