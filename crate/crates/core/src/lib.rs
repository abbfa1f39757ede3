//! Agronomic and financial impact of rate-tampering attacks on variable-rate
//! side-dress nitrogen.
//!
//! The pipeline runs field → prescription → (tampered) application → harvest →
//! ledger. [`adversary`] searches for the worst-case tampering map.

pub mod adversary;
pub mod agronomy;
pub mod attack;
pub mod economics;
pub mod error;
pub mod field;
pub mod interface;
pub mod zone;

pub use adversary::{optimize, AttackSolution, OptimizerConfig};
pub use agronomy::{
    harvest, prescribe_field, EconParams, Prescription, SplitFractions, YieldBounds,
};
pub use attack::{apply_attack, simulate_pass, AttackScenario, BuiltinScenario, Traversal};
pub use economics::{compile_ledger, Ledger, Totals};
pub use error::{Error, Result};
pub use field::{generate_field, FieldGrid, GenerationRanges, Zone};
pub use zone::{Grid, ZoneId, ZoneRange};
