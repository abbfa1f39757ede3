//! Searches seeds for the calibrated reference field.
//!
//! `cargo run --release --example calibrate -- [START] [COUNT]`

use sidedress::interface::calibration::{generate_calibration_candidate, search_calibration};
use sidedress::interface::grid_csv::write_field_csv;

fn main() {
    let mut args = std::env::args().skip(1);
    let start: u64 = args.next().map_or(0, |a| a.parse().expect("START"));
    let count: u64 = args.next().map_or(1_000_000, |a| a.parse().expect("COUNT"));
    let (seed, fit) = search_calibration(start..start + count)
        .expect("search failed")
        .expect("empty seed range");
    eprintln!("seed {seed} score {:.4}", fit.score());
    eprintln!("{fit:#?}");
    let field = generate_calibration_candidate(seed).expect("regenerate");
    print!("{}", write_field_csv(&field));
}
