//! Grid CSV documents.
//!
//! ```text
//! ,A,B,C
//! 1,110,153,57
//! 2,213,76,95
//! ```
//!
//! The header row is an empty corner cell followed by column letters in order;
//! each following row starts with its 1-based row number. LF line endings, no
//! trailing commas. Numeric cells are written in Rust's shortest round-trip
//! form, so reading and re-writing a canonical document is byte-identical.
//! Field documents use the same layout with `EY|NO3|OM|credits` cells.

use crate::error::{Error, Result};
use crate::field::{FieldGrid, Zone};
use crate::zone::{column_label, Grid};

/// Parses the layout and returns the raw cell strings.
pub fn read_cells(text: &str) -> Result<Grid<String>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(csv_error)?,
        None => return Err(Error::Csv("missing header row".into())),
    };
    if header.is_empty() || !header[0].trim().is_empty() {
        return Err(Error::Csv(
            "header must start with an empty corner cell".into(),
        ));
    }
    let cols = header.len() - 1;
    if cols == 0 {
        return Err(Error::Csv("header names no columns".into()));
    }
    for (i, label) in header.iter().skip(1).enumerate() {
        if label.trim() != column_label(i) {
            return Err(Error::Csv(format!(
                "header column {} is {:?}, expected {:?}",
                i + 1,
                label,
                column_label(i)
            )));
        }
    }
    let mut cells = Vec::new();
    let mut rows = 0;
    for record in records {
        let record = record.map_err(csv_error)?;
        rows += 1;
        let label = record[0].trim();
        if label != rows.to_string() {
            return Err(Error::Csv(format!("row {rows} is labelled {label:?}")));
        }
        cells.extend(record.iter().skip(1).map(|c| c.trim().to_string()));
    }
    if rows == 0 {
        return Err(Error::Csv("no data rows".into()));
    }
    Grid::new(rows, cols, cells)
}

fn csv_error(e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::UnequalLengths {
            pos,
            expected_len,
            len,
        } => Error::Csv(format!(
            "ragged row{}: expected {expected_len} cells, found {len}",
            pos.as_ref()
                .map(|p| format!(" at line {}", p.line()))
                .unwrap_or_default()
        )),
        _ => Error::Csv(e.to_string()),
    }
}

fn parse_number(cell: &str, at: impl std::fmt::Display) -> Result<f64> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Csv(format!("non-numeric cell {cell:?} at {at}"))),
    }
}

pub fn read_grid_csv(text: &str) -> Result<Grid<f64>> {
    let raw = read_cells(text)?;
    let values = raw
        .iter()
        .map(|(id, cell)| parse_number(cell, id))
        .collect::<Result<Vec<_>>>()?;
    Grid::new(raw.rows(), raw.cols(), values)
}

/// Writes cells already rendered to text.
pub fn write_cells(grid: &Grid<String>) -> String {
    let mut out = String::new();
    for c in 0..grid.cols() {
        out.push(',');
        out.push_str(&column_label(c));
    }
    out.push('\n');
    for r in 0..grid.rows() {
        out.push_str(&(r + 1).to_string());
        for cell in grid.row_slice(r) {
            out.push(',');
            out.push_str(cell);
        }
        out.push('\n');
    }
    out
}

/// Full-precision numeric grid.
pub fn write_grid_csv(grid: &Grid<f64>) -> String {
    write_grid_csv_with(grid, format_number)
}

pub fn write_grid_csv_with(grid: &Grid<f64>, render: impl Fn(f64) -> String) -> String {
    write_cells(&grid.map(|&v| render(v)))
}

/// Shortest round-trip decimal; negative zero is written as `0`.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        v.to_string()
    }
}

/// Fixed decimals with negative zero normalized away.
pub fn format_fixed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

pub fn read_field_csv(text: &str) -> Result<FieldGrid> {
    let raw = read_cells(text)?;
    let zones = raw
        .iter()
        .map(|(id, cell)| {
            let parts: Vec<&str> = cell.split('|').collect();
            if parts.len() != 4 {
                return Err(Error::Csv(format!(
                    "field cell at {id} must be EY|NO3|OM|credits, got {cell:?}"
                )));
            }
            Ok(Zone::new(
                id,
                parse_number(parts[0], id)?,
                parse_number(parts[1], id)?,
                parse_number(parts[2], id)?,
                parse_number(parts[3], id)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    FieldGrid::new(raw.rows(), raw.cols(), zones)
}

pub fn write_field_csv(field: &FieldGrid) -> String {
    write_cells(&field.grid().map(|z| {
        format!(
            "{}|{}|{}|{}",
            format_number(z.yield_goal),
            format_number(z.soil_nitrate),
            format_number(z.organic_matter),
            format_number(z.n_credits)
        )
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{generate_field, GenerationRanges};

    #[test]
    fn single_cell_document() {
        let g = read_grid_csv(",A\n1,0\n").unwrap();
        assert_eq!(g.shape(), (1, 1));
        assert_eq!(g.cells(), &[0.0]);
        assert_eq!(write_grid_csv(&g), ",A\n1,0\n");
    }

    #[test]
    fn canonical_round_trip_is_byte_exact() {
        let doc = ",A,B,C\n1,0.45,2.8,1\n2,110.25,36.75,0\n";
        assert_eq!(write_grid_csv(&read_grid_csv(doc).unwrap()), doc);
    }

    #[test]
    fn missing_final_newline_is_accepted() {
        let g = read_grid_csv(",A,B\n1,1,2").unwrap();
        assert_eq!(g.cells(), &[1.0, 2.0]);
    }

    #[test]
    fn malformed_documents() {
        assert!(read_grid_csv("").is_err());
        assert!(read_grid_csv(",A,B\n").is_err());
        let ragged = read_grid_csv(",A,B\n1,1,2\n2,3\n").unwrap_err();
        assert!(ragged.to_string().contains("ragged"), "{ragged}");
        let nan = read_grid_csv(",A\n1,abc\n").unwrap_err();
        assert!(nan.to_string().contains("non-numeric"), "{nan}");
        assert!(read_grid_csv(",A\n1,\n").is_err());
        assert!(read_grid_csv("x,A\n1,1\n").is_err());
        assert!(read_grid_csv(",B\n1,1\n").is_err());
        assert!(read_grid_csv(",A\n2,1\n").is_err());
        assert!(read_grid_csv("1,1\n").is_err());
        // trailing comma makes the row ragged against the header
        assert!(read_grid_csv(",A\n1,1,\n").is_err());
    }

    #[test]
    fn field_documents_round_trip() {
        let f = generate_field(42, 3, 4, &GenerationRanges::default()).unwrap();
        let doc = write_field_csv(&f);
        assert!(doc.starts_with(",A,B,C,D\n1,"));
        let back = read_field_csv(&doc).unwrap();
        assert_eq!(back, f);
        assert_eq!(write_field_csv(&back), doc);
    }

    #[test]
    fn field_cell_syntax_errors() {
        assert!(read_field_csv(",A\n1,175|3|2\n").is_err());
        assert!(read_field_csv(",A\n1,175|3|x|0\n").is_err());
        let f = read_field_csv(",A\n1,175|3|2|0\n").unwrap();
        assert_eq!(f.zones()[0].yield_goal, 175.0);
    }

    #[test]
    fn fixed_formatting() {
        assert_eq!(format_fixed(-0.001, 1), "0.0");
        assert_eq!(format_fixed(-1.26, 1), "-1.3");
        assert_eq!(format_fixed(110.25, 0), "110");
        assert_eq!(format_number(-0.0), "0");
    }
}
