//! Rate-tampering attacks on the in-season application pass.
//!
//! An attack is a per-zone multiplier on the in-season rate command as it
//! travels from the tractor to the implement. The at-planting share is never
//! touched. With display spoofing the operator sees the commanded rate while
//! the implement applies the tampered one.

use serde::Serialize;

use crate::agronomy::Prescription;
use crate::error::{Error, Result};
use crate::interface::fixtures;
use crate::zone::{Grid, ZoneId, ZoneRange};

/// Rows and columns of the reference field the builtin scenarios are drawn on.
pub const BUILTIN_GRID: (usize, usize) = (10, 10);

#[derive(Debug, Clone, PartialEq)]
pub struct AttackScenario {
    pub name: String,
    pub multipliers: Grid<f64>,
    pub spoof_display: bool,
}

/// One rectangle of zones and the multiplier assigned to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierRule {
    pub zones: ZoneRange,
    pub multiplier: f64,
}

impl MultiplierRule {
    pub fn new(zones: &str, multiplier: f64) -> Result<Self> {
        Ok(Self {
            zones: zones.parse()?,
            multiplier,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinScenario {
    Identity,
    /// Mixed -50% / -25% / 0 / +50% / +100% map.
    Scenario1,
    /// 45% on columns A-D and F-I, 280% on E and J.
    Scenario2,
    /// 25% on B, D, F, H; 100% on A, E, J; 200% on C, G, I.
    Scenario3,
}

impl std::str::FromStr for BuiltinScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "identity" | "control" | "0" => Ok(Self::Identity),
            "1" | "scenario1" | "scenario-1" => Ok(Self::Scenario1),
            "2" | "scenario2" | "scenario-2" => Ok(Self::Scenario2),
            "3" | "scenario3" | "scenario-3" => Ok(Self::Scenario3),
            _ => Err(Error::UnknownScenario(s.to_string())),
        }
    }
}

impl BuiltinScenario {
    pub fn from_id(id: u32) -> Result<Self> {
        match id {
            1 => Ok(Self::Scenario1),
            2 => Ok(Self::Scenario2),
            3 => Ok(Self::Scenario3),
            _ => Err(Error::UnknownScenario(id.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::Scenario1 => "scenario-1",
            Self::Scenario2 => "scenario-2",
            Self::Scenario3 => "scenario-3",
        }
    }

    pub fn all_attacks() -> [BuiltinScenario; 3] {
        [Self::Scenario1, Self::Scenario2, Self::Scenario3]
    }
}

pub fn scenario2_rules() -> Vec<MultiplierRule> {
    [
        ("A1:D10", 0.45),
        ("F1:I10", 0.45),
        ("E1:E10", 2.8),
        ("J1:J10", 2.8),
    ]
    .into_iter()
    .map(|(z, m)| MultiplierRule::new(z, m).expect("static rule"))
    .collect()
}

pub fn scenario3_rules() -> Vec<MultiplierRule> {
    let by_column = [
        ("A", 1.0),
        ("B", 0.25),
        ("C", 2.0),
        ("D", 0.25),
        ("E", 1.0),
        ("F", 0.25),
        ("G", 2.0),
        ("H", 0.25),
        ("I", 2.0),
        ("J", 1.0),
    ];
    by_column
        .into_iter()
        .map(|(c, m)| MultiplierRule::new(&format!("{c}1:{c}10"), m).expect("static rule"))
        .collect()
}

pub fn builtin_scenario(
    which: BuiltinScenario,
    rows: usize,
    cols: usize,
) -> Result<AttackScenario> {
    if which == BuiltinScenario::Identity {
        return AttackScenario::identity(rows, cols);
    }
    if (rows, cols) != BUILTIN_GRID {
        return Err(Error::ShapeMismatch {
            expected_rows: BUILTIN_GRID.0,
            expected_cols: BUILTIN_GRID.1,
            rows,
            cols,
        });
    }
    match which {
        BuiltinScenario::Identity => unreachable!(),
        BuiltinScenario::Scenario1 => Ok(AttackScenario {
            name: which.name().into(),
            multipliers: fixtures::scenario1_multipliers()?,
            spoof_display: false,
        }),
        BuiltinScenario::Scenario2 => {
            AttackScenario::from_rules(which.name(), rows, cols, &scenario2_rules(), false)
        }
        BuiltinScenario::Scenario3 => {
            AttackScenario::from_rules(which.name(), rows, cols, &scenario3_rules(), false)
        }
    }
}

impl AttackScenario {
    pub fn identity(rows: usize, cols: usize) -> Result<Self> {
        Ok(Self {
            name: "identity".into(),
            multipliers: Grid::filled(rows, cols, 1.0)?,
            spoof_display: false,
        })
    }

    pub fn new(
        name: impl Into<String>,
        multipliers: Grid<f64>,
        spoof_display: bool,
    ) -> Result<Self> {
        let s = Self {
            name: name.into(),
            multipliers,
            spoof_display,
        };
        s.validate()?;
        Ok(s)
    }

    /// Expands rectangle rules over an all-ones map. Later rules win.
    pub fn from_rules(
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        rules: &[MultiplierRule],
        spoof_display: bool,
    ) -> Result<Self> {
        let mut multipliers = Grid::filled(rows, cols, 1.0)?;
        for rule in rules {
            if !rule.zones.fits(rows, cols) {
                return Err(Error::InvalidZoneRange(format!(
                    "{}:{} lies outside the {rows}x{cols} grid",
                    rule.zones.first, rule.zones.last
                )));
            }
            check_multiplier(rule.multiplier)?;
            for r in 0..rows {
                for c in 0..cols {
                    let id = ZoneId::from_index(r, c);
                    if rule.zones.contains(id) {
                        *multipliers.get_mut(id).expect("in bounds") = rule.multiplier;
                    }
                }
            }
        }
        Self::new(name, multipliers, spoof_display)
    }

    pub fn validate(&self) -> Result<()> {
        self.multipliers
            .cells()
            .iter()
            .try_for_each(|&m| check_multiplier(m))
    }

    pub fn multiplier(&self, id: ZoneId) -> Option<f64> {
        self.multipliers.get(id).copied()
    }

    pub fn is_identity(&self) -> bool {
        self.multipliers.cells().iter().all(|&m| m == 1.0)
    }

    /// Tampering by `self` followed by tampering by `next`.
    pub fn then(&self, next: &AttackScenario) -> Result<AttackScenario> {
        Ok(AttackScenario {
            name: format!("{}+{}", self.name, next.name),
            multipliers: self.multipliers.zip_with(&next.multipliers, |a, b| a * b)?,
            spoof_display: self.spoof_display || next.spoof_display,
        })
    }
}

fn check_multiplier(m: f64) -> Result<()> {
    if m.is_finite() && m >= 0.0 {
        Ok(())
    } else {
        Err(Error::Negative {
            what: "rate multiplier",
            value: m,
        })
    }
}

/// Applies `scenario` to an in-season rate grid.
pub fn tamper_rates(inseason: &Grid<f64>, scenario: &AttackScenario) -> Result<Grid<f64>> {
    inseason.zip_with(&scenario.multipliers, |n, m| m * n)
}

/// Total nitrogen reaching each zone: planting share plus tampered in-season share.
pub fn apply_attack(prescription: &Prescription, scenario: &AttackScenario) -> Result<Grid<f64>> {
    scenario.validate()?;
    prescription
        .zones
        .zip_with(&scenario.multipliers, |z, m| z.planting + m * z.inseason)
}

/// Visiting order of the implement across the field.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Traversal {
    /// Row 1 left to right, row 2 right to left, and so on.
    #[default]
    Serpentine,
    RowMajor,
    Custom(Vec<ZoneId>),
}

impl Traversal {
    pub fn order(&self, rows: usize, cols: usize) -> Result<Vec<ZoneId>> {
        match self {
            Traversal::RowMajor => Ok((0..rows)
                .flat_map(|r| (0..cols).map(move |c| ZoneId::from_index(r, c)))
                .collect()),
            Traversal::Serpentine => Ok((0..rows)
                .flat_map(|r| {
                    let cols_iter: Box<dyn Iterator<Item = usize>> = if r % 2 == 0 {
                        Box::new(0..cols)
                    } else {
                        Box::new((0..cols).rev())
                    };
                    cols_iter.map(move |c| ZoneId::from_index(r, c))
                })
                .collect()),
            Traversal::Custom(ids) => {
                if ids.len() != rows * cols {
                    return Err(Error::BadTraversal(format!(
                        "{} zones listed for a {rows}x{cols} grid",
                        ids.len()
                    )));
                }
                let mut seen = vec![false; rows * cols];
                for id in ids {
                    if !id.fits(rows, cols) {
                        return Err(Error::BadTraversal(format!("{id} is outside the grid")));
                    }
                    let i = id.row_index() * cols + id.column;
                    if std::mem::replace(&mut seen[i], true) {
                        return Err(Error::BadTraversal(format!("{id} visited twice")));
                    }
                }
                Ok(ids.clone())
            }
        }
    }
}

/// One zone's rate command as seen at each point of the pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AppliedRecord {
    pub zone: ZoneId,
    /// In-season rate the operator commanded, lb/acre.
    pub commanded: f64,
    /// Rate the implement actually applied, lb/acre.
    pub applied: f64,
    /// Rate shown on the cab display, lb/acre.
    pub displayed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StealthMetrics {
    /// Applied minus commanded in-season nitrogen over the field, lb.
    pub total_delta: f64,
    /// Largest per-zone `|applied - commanded| / commanded`.
    pub max_zone_deviation: f64,
    /// The delta an operator could compute from the display, lb.
    pub visible_delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassResult {
    /// Records in traversal order.
    pub records: Vec<AppliedRecord>,
    pub metrics: StealthMetrics,
    /// Planting plus applied in-season nitrogen per zone.
    pub applied_totals: Grid<f64>,
}

impl PassResult {
    /// Records rearranged into a row-major grid.
    pub fn record_grid(&self, rows: usize, cols: usize) -> Result<Grid<AppliedRecord>> {
        records_to_grid(&self.records, rows, cols)
    }
}

fn records_to_grid(
    records: &[AppliedRecord],
    rows: usize,
    cols: usize,
) -> Result<Grid<AppliedRecord>> {
    let mut slots: Vec<Option<AppliedRecord>> = vec![None; rows * cols];
    for r in records {
        slots[r.zone.row_index() * cols + r.zone.column] = Some(*r);
    }
    let cells = slots
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Invariant("pass did not cover every zone".into()))?;
    Grid::new(rows, cols, cells)
}

/// Replays the in-season pass zone by zone, tampering each rate command.
///
/// Totals and metrics are reduced in row-major order so they do not depend on
/// the traversal.
pub fn simulate_pass(
    prescription: &Prescription,
    scenario: &AttackScenario,
    traversal: &Traversal,
) -> Result<PassResult> {
    let (rows, cols) = prescription.shape();
    scenario.multipliers.ensure_shape(rows, cols)?;
    scenario.validate()?;
    let order = traversal.order(rows, cols)?;
    let records: Vec<AppliedRecord> = order
        .into_iter()
        .map(|zone| {
            let rx = prescription.zones.get(zone).expect("validated traversal");
            let m = scenario.multiplier(zone).expect("validated shape");
            let commanded = rx.inseason;
            let applied = m * commanded;
            AppliedRecord {
                zone,
                commanded,
                applied,
                displayed: if scenario.spoof_display {
                    commanded
                } else {
                    applied
                },
            }
        })
        .collect();
    let grid = records_to_grid(&records, rows, cols)?;
    let commanded = grid.map(|r| r.commanded).total();
    let applied = grid.map(|r| r.applied).total();
    let displayed = grid.map(|r| r.displayed).total();
    let max_zone_deviation = grid
        .cells()
        .iter()
        .filter(|r| r.commanded > 0.0)
        .map(|r| (r.applied - r.commanded).abs() / r.commanded)
        .fold(0.0, f64::max);
    let applied_totals = prescription
        .zones
        .zip_with(&grid, |rx, rec| rx.planting + rec.applied)?;
    Ok(PassResult {
        metrics: StealthMetrics {
            total_delta: applied - commanded,
            max_zone_deviation,
            visible_delta: displayed - commanded,
        },
        applied_totals,
        records,
    })
}
