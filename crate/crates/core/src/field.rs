//! Field grid and per-zone agronomic state.
//!
//! Random fields are drawn from ChaCha8 (`rand_chacha::ChaCha8Rng`, seeded via
//! `seed_from_u64`), whose output stream is value-stable across releases. Each
//! attribute is an independent continuous uniform draw
//! `lo + (hi - lo) * u`, with `u = (next_u64() >> 11) * 2^-53`. Zones are filled
//! in row-major order and, within a zone, draws happen in the order yield goal,
//! soil nitrate, organic matter. Nitrogen credits are a fixed value.

use std::collections::HashSet;
use std::fmt;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::zone::{Grid, ZoneId};

/// Valid organic matter range for the recommendation formula, percent.
pub const ORGANIC_MATTER_MIN: f64 = 0.5;
pub const ORGANIC_MATTER_MAX: f64 = 3.0;

/// One management acre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: ZoneId,
    /// Expected yield goal, bu/acre.
    pub yield_goal: f64,
    /// Root-zone nitrate-N, ppm.
    pub soil_nitrate: f64,
    /// Soil organic matter, percent.
    pub organic_matter: f64,
    /// Other nitrogen credits (legumes, manure, irrigation water), lb/acre.
    pub n_credits: f64,
}

impl Zone {
    pub fn new(
        id: ZoneId,
        yield_goal: f64,
        soil_nitrate: f64,
        organic_matter: f64,
        n_credits: f64,
    ) -> Self {
        Self {
            id,
            yield_goal,
            soil_nitrate,
            organic_matter,
            n_credits,
        }
    }
}

/// Rectangular field of zones stored row-major.
///
/// Zone ids are carried on each zone; [`validate_field`] checks that they
/// match their grid positions.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    zones: Grid<Zone>,
}

impl FieldGrid {
    pub fn new(rows: usize, cols: usize, zones: Vec<Zone>) -> Result<Self> {
        Ok(Self {
            zones: Grid::new(rows, cols, zones)?,
        })
    }

    pub fn rows(&self) -> usize {
        self.zones.rows()
    }

    pub fn cols(&self) -> usize {
        self.zones.cols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.zones.shape()
    }

    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn zones(&self) -> &[Zone] {
        self.zones.cells()
    }

    pub fn grid(&self) -> &Grid<Zone> {
        &self.zones
    }

    pub fn zone(&self, id: ZoneId) -> Option<&Zone> {
        self.zones.get(id)
    }

    pub fn zone_mut(&mut self, id: ZoneId) -> Option<&mut Zone> {
        self.zones.get_mut(id)
    }

    /// Per-zone projection onto a numeric grid.
    pub fn map(&self, f: impl FnMut(&Zone) -> f64) -> Grid<f64> {
        self.zones.map(f)
    }
}

/// Closed `[lo, hi]` interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationRanges {
    pub yield_goal: Interval,
    pub nitrate: Interval,
    pub organic_matter: Interval,
    pub n_credits: f64,
}

impl Default for GenerationRanges {
    fn default() -> Self {
        Self {
            yield_goal: Interval::new(150.0, 190.0),
            nitrate: Interval::new(2.0, 4.0),
            organic_matter: Interval::new(1.8, 2.2),
            n_credits: 0.0,
        }
    }
}

impl GenerationRanges {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("yield goal", self.yield_goal),
            ("nitrate", self.nitrate),
            ("organic matter", self.organic_matter),
        ] {
            if !(r.lo.is_finite() && r.hi.is_finite()) || r.lo > r.hi {
                return Err(Error::InvalidRange {
                    name,
                    lo: r.lo,
                    hi: r.hi,
                });
            }
        }
        if !(self.n_credits.is_finite() && self.n_credits >= 0.0) {
            return Err(Error::Negative {
                what: "nitrogen credits",
                value: self.n_credits,
            });
        }
        Ok(())
    }
}

struct UniformSource(ChaCha8Rng);

impl UniformSource {
    fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn draw(&mut self, range: Interval) -> f64 {
        range.lo + (range.hi - range.lo) * self.unit()
    }
}

/// Seeded random field with every zone drawn from `ranges`.
pub fn generate_field(
    seed: u64,
    rows: usize,
    cols: usize,
    ranges: &GenerationRanges,
) -> Result<FieldGrid> {
    generate_field_by_column(seed, rows, cols, |_| *ranges)
}

/// Like [`generate_field`], with ranges chosen per column index. The draw
/// sequence is identical, so a constant selector reproduces `generate_field`.
pub fn generate_field_by_column(
    seed: u64,
    rows: usize,
    cols: usize,
    ranges_for: impl Fn(usize) -> GenerationRanges,
) -> Result<FieldGrid> {
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyGrid { rows, cols });
    }
    let per_column: Vec<GenerationRanges> = (0..cols).map(&ranges_for).collect();
    for r in &per_column {
        r.validate()?;
    }
    let mut rng = UniformSource::new(seed);
    let zones = Grid::from_fn(rows, cols, |id| {
        let r = &per_column[id.column];
        let yield_goal = rng.draw(r.yield_goal);
        let soil_nitrate = rng.draw(r.nitrate);
        let organic_matter = rng.draw(r.organic_matter);
        Zone::new(id, yield_goal, soil_nitrate, organic_matter, r.n_credits)
    })?;
    Ok(FieldGrid { zones })
}

/// A single failed field or zone constraint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// `None` for structural problems that are not tied to one zone.
    pub zone: Option<ZoneId>,
    pub constraint: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.zone {
            Some(z) => write!(f, "zone {z}: {}", self.constraint),
            None => write!(f, "field: {}", self.constraint),
        }
    }
}

pub fn validate_zone(zone: &Zone) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut fail = |constraint: String| {
        out.push(Violation {
            zone: Some(zone.id),
            constraint,
        })
    };
    if !(zone.yield_goal.is_finite() && zone.yield_goal > 0.0) {
        fail(format!("yield goal must be > 0 (got {})", zone.yield_goal));
    }
    if !(zone.soil_nitrate.is_finite() && zone.soil_nitrate >= 0.0) {
        fail(format!(
            "soil nitrate must be >= 0 (got {})",
            zone.soil_nitrate
        ));
    }
    if !(zone.organic_matter >= ORGANIC_MATTER_MIN && zone.organic_matter <= ORGANIC_MATTER_MAX) {
        fail(format!(
            "organic matter must be within {ORGANIC_MATTER_MIN}-{ORGANIC_MATTER_MAX}% (got {})",
            zone.organic_matter
        ));
    }
    if !(zone.n_credits.is_finite() && zone.n_credits >= 0.0) {
        fail(format!(
            "nitrogen credits must be >= 0 (got {})",
            zone.n_credits
        ));
    }
    out
}

/// All zone and structural violations; empty means the field is usable.
pub fn validate_field(field: &FieldGrid) -> Vec<Violation> {
    let mut out = Vec::new();
    let (rows, cols) = field.shape();
    let mut seen = HashSet::new();
    for (pos, zone) in field.grid().iter() {
        if !zone.id.fits(rows, cols) {
            out.push(Violation {
                zone: Some(zone.id),
                constraint: format!("zone id lies outside the {rows}x{cols} grid"),
            });
        } else if zone.id != pos {
            out.push(Violation {
                zone: Some(zone.id),
                constraint: format!("zone stored at position {pos}"),
            });
        }
        if !seen.insert(zone.id) {
            out.push(Violation {
                zone: None,
                constraint: format!("duplicate zone id {}", zone.id),
            });
        }
        out.extend(validate_zone(zone));
    }
    out
}

pub(crate) fn ensure_valid(field: &FieldGrid) -> Result<()> {
    let violations = validate_field(field);
    if violations.is_empty() {
        return Ok(());
    }
    let listed: Vec<String> = violations.iter().take(5).map(|v| v.to_string()).collect();
    Err(Error::InvalidField(format!(
        "{} violation(s): {}",
        violations.len(),
        listed.join("; ")
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_ranges_match_control_case() {
        let r = GenerationRanges::default();
        assert_eq!((r.yield_goal.lo, r.yield_goal.hi), (150.0, 190.0));
        assert_eq!((r.nitrate.lo, r.nitrate.hi), (2.0, 4.0));
        assert_eq!((r.organic_matter.lo, r.organic_matter.hi), (1.8, 2.2));
        assert_eq!(r.n_credits, 0.0);
    }

    #[test]
    fn seed_42_field_respects_ranges() {
        let ranges = GenerationRanges::default();
        let f = generate_field(42, 10, 10, &ranges).unwrap();
        assert_eq!(f.len(), 100);
        for z in f.zones() {
            assert!(ranges.yield_goal.contains(z.yield_goal));
            assert!(ranges.nitrate.contains(z.soil_nitrate));
            assert!(ranges.organic_matter.contains(z.organic_matter));
            assert_eq!(z.n_credits, 0.0);
        }
        assert!(validate_field(&f).is_empty());
    }

    #[test]
    fn generation_is_deterministic() {
        let r = GenerationRanges::default();
        assert_eq!(
            generate_field(42, 10, 10, &r).unwrap(),
            generate_field(42, 10, 10, &r).unwrap()
        );
        assert_ne!(
            generate_field(42, 10, 10, &r).unwrap(),
            generate_field(43, 10, 10, &r).unwrap()
        );
    }

    #[test]
    fn seed_7_mean_yield_near_midpoint() {
        // Uniform(150, 190): mean 170, sd 40/sqrt(12) = 11.55, se over 100 zones = 1.15.
        let f = generate_field(7, 10, 10, &GenerationRanges::default()).unwrap();
        let mean = f.zones().iter().map(|z| z.yield_goal).sum::<f64>() / 100.0;
        assert!((mean - 170.0).abs() <= 4.0, "mean {mean}");
    }

    #[test]
    fn degenerate_range_is_a_constant() {
        let r = GenerationRanges {
            yield_goal: Interval::new(175.0, 175.0),
            ..Default::default()
        };
        let f = generate_field(1, 2, 2, &r).unwrap();
        assert!(f.zones().iter().all(|z| z.yield_goal == 175.0));
    }

    #[test]
    fn invalid_ranges_and_shapes_rejected() {
        let bad = GenerationRanges {
            nitrate: Interval::new(4.0, 2.0),
            ..Default::default()
        };
        assert!(matches!(
            generate_field(1, 10, 10, &bad),
            Err(Error::InvalidRange { .. })
        ));
        let r = GenerationRanges::default();
        assert!(matches!(
            generate_field(1, 0, 10, &r),
            Err(Error::EmptyGrid { .. })
        ));
        assert!(matches!(
            generate_field(1, 10, 0, &r),
            Err(Error::EmptyGrid { .. })
        ));
    }

    #[test]
    fn column_selector_matches_plain_generation() {
        let r = GenerationRanges::default();
        let a = generate_field(99, 4, 5, &r).unwrap();
        let b = generate_field_by_column(99, 4, 5, |_| r).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn organic_matter_out_of_bounds_is_reported() {
        let mut f = generate_field(42, 10, 10, &GenerationRanges::default()).unwrap();
        let id: ZoneId = "C4".parse().unwrap();
        f.zone_mut(id).unwrap().organic_matter = 4.0;
        let v = validate_field(&f);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].zone, Some(id));
        assert!(v[0].constraint.contains("0.5-3"), "{}", v[0].constraint);
    }

    #[test]
    fn duplicate_zone_id_is_structural() {
        let mut f = generate_field(42, 2, 2, &GenerationRanges::default()).unwrap();
        f.zone_mut("B2".parse().unwrap()).unwrap().id = "A1".parse().unwrap();
        let v = validate_field(&f);
        assert!(v
            .iter()
            .any(|x| x.zone.is_none() && x.constraint.contains("duplicate zone id A1")));
    }

    #[test]
    fn other_zone_violations() {
        let z = Zone::new(ZoneId::new(0, 1), 0.0, -1.0, 2.0, -5.0);
        assert_eq!(validate_zone(&z).len(), 3);
    }
}
