//! Nitrogen recommendation and yield response.
//!
//! The recommendation is the Nebraska corn nitrogen formula:
//!
//! ```text
//! N_rec = max(0, [35 + 1.2*EY - 8*NO3 - 0.14*EY*OM - credits] * price_adj * timing_adj)
//! price_adj = 0.263 + 0.1256*r - 0.00421*r^2,   r = corn_price / nitrogen_price
//! ```
//!
//! Yield response is the same formula solved for yield and clamped to
//! `[floor, EY + boost]`. The recommendation curve therefore doubles as the
//! crop's response curve: applying exactly `N_rec` returns the yield goal,
//! applying less or more moves yield along the same line until a clamp is hit.
//! Expected and actual yields differ only in which rate is passed in.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ensure_valid, FieldGrid, Zone};
use crate::zone::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EconParams {
    /// $/bu.
    pub corn_price: f64,
    /// $/lb N.
    pub nitrogen_price: f64,
    pub timing_adj: f64,
}

impl Default for EconParams {
    fn default() -> Self {
        Self {
            corn_price: 7.53,
            nitrogen_price: 1.10,
            timing_adj: 0.95,
        }
    }
}

impl EconParams {
    pub fn validate(&self) -> Result<()> {
        positive("corn price", self.corn_price)?;
        positive("nitrogen price", self.nitrogen_price)?;
        positive("timing adjustment", self.timing_adj)?;
        if self.timing_adj > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "timing adjustment must be <= 1 (got {})",
                self.timing_adj
            )));
        }
        Ok(())
    }

    pub fn response(&self) -> Result<ResponseCoefficients> {
        self.validate()?;
        Ok(ResponseCoefficients {
            price_adj: price_adjustment(self.corn_price, self.nitrogen_price)?,
            timing_adj: self.timing_adj,
        })
    }
}

fn positive(what: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositive { what, value })
    }
}

/// The two multiplicative adjustments applied to the formula bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseCoefficients {
    pub price_adj: f64,
    pub timing_adj: f64,
}

impl ResponseCoefficients {
    pub fn factor(&self) -> f64 {
        self.price_adj * self.timing_adj
    }

    fn validate(&self) -> Result<()> {
        positive("price adjustment", self.price_adj)?;
        positive("timing adjustment", self.timing_adj)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct YieldBounds {
    /// Minimum attainable yield, bu/acre.
    pub floor: f64,
    /// Maximum gain above a zone's yield goal, bu/acre.
    pub boost: f64,
}

impl Default for YieldBounds {
    fn default() -> Self {
        Self {
            floor: 100.0,
            boost: 30.0,
        }
    }
}

impl YieldBounds {
    pub fn validate(&self) -> Result<()> {
        for (what, v) in [("yield floor", self.floor), ("yield boost", self.boost)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Negative { what, value: v });
            }
        }
        Ok(())
    }

    pub fn cap(&self, zone: &Zone) -> f64 {
        zone.yield_goal + self.boost
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitFractions {
    pub at_planting: f64,
    pub in_season: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self::from_planting(0.25).expect("valid default")
    }
}

impl SplitFractions {
    pub fn from_planting(at_planting: f64) -> Result<Self> {
        let s = Self {
            at_planting,
            in_season: 1.0 - at_planting,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.at_planting)
            && (0.0..=1.0).contains(&self.in_season)
            && (self.at_planting + self.in_season - 1.0).abs() <= 1e-12;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "split fractions must lie in [0, 1] and sum to 1 (got {} / {})",
                self.at_planting, self.in_season
            )))
        }
    }
}

/// Quadratic price adjustment in the corn-to-nitrogen price ratio.
pub fn price_adjustment(corn_price: f64, nitrogen_price: f64) -> Result<f64> {
    positive("corn price", corn_price)?;
    positive("nitrogen price", nitrogen_price)?;
    let r = corn_price / nitrogen_price;
    Ok(0.263 + 0.1256 * r - 0.00421 * r * r)
}

/// The unadjusted formula bracket, lb/acre. May be negative.
pub fn recommendation_bracket(zone: &Zone) -> f64 {
    35.0 + 1.2 * zone.yield_goal
        - 8.0 * zone.soil_nitrate
        - 0.14 * zone.yield_goal * zone.organic_matter
        - zone.n_credits
}

/// Recommended nitrogen, lb/acre. Negative brackets clamp to zero.
pub fn recommend_nitrogen(zone: &Zone, price_adj: f64, timing_adj: f64) -> f64 {
    (recommendation_bracket(zone) * price_adj * timing_adj).max(0.0)
}

/// Splits a recommendation so that `planting + inseason == n_rec` exactly.
pub fn split_prescription(n_rec: f64, fractions: SplitFractions) -> (f64, f64) {
    let planting = fractions.at_planting * n_rec;
    let inseason = n_rec - planting;
    if planting + inseason == n_rec {
        return (planting, inseason);
    }
    // n_rec - planting can round; one ulp either way restores the identity.
    for candidate in [inseason.next_up(), inseason.next_down()] {
        if planting + candidate == n_rec {
            return (planting, candidate);
        }
    }
    (n_rec - inseason, inseason)
}

/// Yield produced by `n_rate` lb/acre on `zone`, clamped to `[floor, EY + boost]`.
///
/// Serves as both the expected-yield and actual-yield relation.
pub fn yield_from_rate(
    n_rate: f64,
    zone: &Zone,
    bounds: &YieldBounds,
    coeffs: &ResponseCoefficients,
) -> Result<f64> {
    if !(n_rate.is_finite() && n_rate >= 0.0) {
        return Err(Error::Negative {
            what: "nitrogen rate",
            value: n_rate,
        });
    }
    coeffs.validate()?;
    let denom = 1.2 - 0.14 * zone.organic_matter;
    if denom <= 0.0 {
        return Err(Error::DegenerateDenominator {
            organic_matter: zone.organic_matter,
        });
    }
    let raw = (n_rate / (coeffs.price_adj * coeffs.timing_adj) + 8.0 * zone.soil_nitrate - 35.0
        + zone.n_credits)
        / denom;
    Ok(raw.min(bounds.cap(zone)).max(bounds.floor))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZonePrescription {
    pub n_rec: f64,
    pub planting: f64,
    pub inseason: f64,
}

/// Per-zone prescription for a whole field.
#[derive(Debug, Clone, PartialEq)]
pub struct Prescription {
    pub coefficients: ResponseCoefficients,
    pub fractions: SplitFractions,
    pub zones: Grid<ZonePrescription>,
}

impl Prescription {
    pub fn shape(&self) -> (usize, usize) {
        self.zones.shape()
    }

    pub fn n_rec(&self) -> Grid<f64> {
        self.zones.map(|z| z.n_rec)
    }

    pub fn planting(&self) -> Grid<f64> {
        self.zones.map(|z| z.planting)
    }

    pub fn inseason(&self) -> Grid<f64> {
        self.zones.map(|z| z.inseason)
    }

    pub fn planting_total(&self) -> f64 {
        self.planting().total()
    }

    pub fn inseason_total(&self) -> f64 {
        self.inseason().total()
    }

    pub fn total(&self) -> f64 {
        self.n_rec().total()
    }
}

pub fn prescribe_field(
    field: &FieldGrid,
    econ: &EconParams,
    fractions: SplitFractions,
) -> Result<Prescription> {
    ensure_valid(field)?;
    fractions.validate()?;
    let coefficients = econ.response()?;
    let zones = field.grid().map(|zone| {
        let n_rec = recommend_nitrogen(zone, coefficients.price_adj, coefficients.timing_adj);
        let (planting, inseason) = split_prescription(n_rec, fractions);
        ZonePrescription {
            n_rec,
            planting,
            inseason,
        }
    });
    Ok(Prescription {
        coefficients,
        fractions,
        zones,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Harvest {
    pub yields: Grid<f64>,
    pub total: f64,
}

/// Per-zone yield for the total nitrogen actually applied to each zone.
pub fn harvest(
    field: &FieldGrid,
    applied: &Grid<f64>,
    bounds: &YieldBounds,
    coeffs: &ResponseCoefficients,
) -> Result<Harvest> {
    applied.ensure_shape(field.rows(), field.cols())?;
    bounds.validate()?;
    let cells = field
        .zones()
        .iter()
        .zip(applied.cells())
        .map(|(zone, &n)| yield_from_rate(n, zone, bounds, coeffs))
        .collect::<Result<Vec<_>>>()?;
    let yields = Grid::new(field.rows(), field.cols(), cells)?;
    let total = yields.total();
    Ok(Harvest { yields, total })
}
