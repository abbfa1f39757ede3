//! Revenue, cost and profit ledger for a control/attack comparison.
//!
//! Amounts stay at full precision; rounding to cents is a display concern.
//! A positive `profit_loss_gain` is a loss to the farmer.

use serde::{Deserialize, Serialize};

use crate::agronomy::EconParams;
use crate::error::{Error, Result};

pub fn revenue(yield_total: f64, corn_price: f64) -> f64 {
    yield_total * corn_price
}

pub fn cost(n_total: f64, nitrogen_price: f64) -> f64 {
    n_total * nitrogen_price
}

pub fn profit(revenue: f64, cost: f64) -> f64 {
    revenue - cost
}

pub fn profit_loss_gain(expected_profit: f64, actual_profit: f64) -> f64 {
    expected_profit - actual_profit
}

/// Field-level yield and nitrogen totals for one outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    /// bu.
    pub yield_total: f64,
    /// lb.
    pub n_total: f64,
}

impl Totals {
    pub fn new(yield_total: f64, n_total: f64) -> Self {
        Self {
            yield_total,
            n_total,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
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
}

impl Ledger {
    /// Revenue lost to the yield shortfall (negative when yield rose).
    pub fn sales_loss(&self) -> f64 {
        self.expected_revenue - self.actual_revenue
    }

    /// Extra fertilizer spend (negative when less was applied).
    pub fn extra_fertilizer_cost(&self) -> f64 {
        self.actual_cost - self.expected_cost
    }
}

pub fn compile_ledger(expected: Totals, actual: Totals, econ: &EconParams) -> Result<Ledger> {
    for (what, v) in [
        ("expected yield total", expected.yield_total),
        ("actual yield total", actual.yield_total),
        ("expected nitrogen total", expected.n_total),
        ("actual nitrogen total", actual.n_total),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::Negative { what, value: v });
        }
    }
    let expected_revenue = revenue(expected.yield_total, econ.corn_price);
    let expected_cost = cost(expected.n_total, econ.nitrogen_price);
    let expected_profit = profit(expected_revenue, expected_cost);
    let actual_revenue = revenue(actual.yield_total, econ.corn_price);
    let actual_cost = cost(actual.n_total, econ.nitrogen_price);
    let actual_profit = profit(actual_revenue, actual_cost);
    Ok(Ledger {
        expected_yield_total: expected.yield_total,
        actual_yield_total: actual.yield_total,
        expected_n_total: expected.n_total,
        actual_n_total: actual.n_total,
        expected_revenue,
        expected_cost,
        expected_profit,
        actual_revenue,
        actual_cost,
        actual_profit,
        profit_loss_gain: profit_loss_gain(expected_profit, actual_profit),
    })
}

/// Half-up rounding to whole cents.
pub fn round_cents(amount: f64) -> f64 {
    (amount * 100.0 + 0.5).floor() / 100.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cents_eq(a: f64, b: f64) -> bool {
        (a - b).abs() <= 0.01
    }

    #[test]
    fn revenue_cost_profit_examples() {
        assert!(cents_eq(revenue(16_983.0, 7.53), 127_881.99));
        assert!(cents_eq(revenue(15_243.0, 7.53), 114_779.79));
        assert_eq!(revenue(0.0, 7.53), 0.0);
        assert!(cents_eq(cost(14_759.0, 1.10), 16_234.90));
        assert!(cents_eq(cost(14_734.0, 1.10), 16_207.40));
        assert_eq!(cost(0.0, 1.10), 0.0);
        assert!(cents_eq(profit(127_881.99, 16_234.90), 111_647.09));
        assert!(cents_eq(profit(95_570.76, 16_207.40), 79_363.36));
        assert_eq!(profit(1234.5, 1234.5), 0.0);
    }

    #[test]
    fn loss_gain_examples() {
        assert!(cents_eq(profit_loss_gain(111_647.09, 98_518.49), 13_128.60));
        assert!(cents_eq(profit_loss_gain(111_647.09, 79_363.36), 32_283.73));
        assert_eq!(profit_loss_gain(111_647.09, 111_647.09), 0.0);
    }

    #[test]
    fn ledgers_for_stated_totals() {
        let econ = EconParams::default();
        let control = Totals::new(16_983.0, 14_759.0);
        let l = compile_ledger(control, control, &econ).unwrap();
        assert_eq!(l.profit_loss_gain, 0.0);

        let l = compile_ledger(control, Totals::new(15_061.0, 14_796.0), &econ).unwrap();
        assert!(cents_eq(l.actual_profit, 97_133.73));
        assert!(cents_eq(l.profit_loss_gain, 14_513.36));
        // Revenue difference is 14,472.66, not the 14,476.66 sometimes quoted.
        assert!(cents_eq(l.sales_loss(), 14_472.66));

        let l = compile_ledger(control, Totals::new(12_692.0, 14_734.0), &econ).unwrap();
        assert!(cents_eq(l.actual_profit, 79_363.36));
        assert!(cents_eq(l.profit_loss_gain, 32_283.73));
    }

    #[test]
    fn loss_decomposes_into_sales_and_fertilizer() {
        let econ = EconParams::default();
        let l = compile_ledger(
            Totals::new(16_983.0, 14_759.0),
            Totals::new(15_243.0, 14_783.0),
            &econ,
        )
        .unwrap();
        assert!(cents_eq(l.sales_loss(), 13_102.20));
        assert!(cents_eq(l.extra_fertilizer_cost(), 26.40));
        assert!(cents_eq(l.profit_loss_gain, 13_128.60));
    }

    #[test]
    fn negative_totals_rejected() {
        let econ = EconParams::default();
        assert!(compile_ledger(Totals::new(-1.0, 0.0), Totals::new(0.0, 0.0), &econ).is_err());
    }

    #[test]
    fn cents_rounding_is_half_up() {
        assert_eq!(round_cents(127_881.989_999_999_99), 127_881.99);
        assert_eq!(round_cents(0.125), 0.13);
        assert_eq!(round_cents(-0.125), -0.12);
        assert_eq!(round_cents(2.0), 2.0);
    }
}
