//! Zone addressing and the row-major grid container shared by every module.
//!
//! Columns are lettered spreadsheet-style (`A`..`Z`, then `AA`, `AB`, ...) and
//! rows are numbered from 1, so the zone in the second column of the fifth
//! row is `B5`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A management zone address: zero-based column index, one-based row number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ZoneId {
    pub column: usize,
    pub row: usize,
}

impl ZoneId {
    pub fn new(column: usize, row: usize) -> Self {
        Self { column, row }
    }

    /// Zone for zero-based `(row, col)` grid coordinates.
    pub fn from_index(row: usize, col: usize) -> Self {
        Self {
            column: col,
            row: row + 1,
        }
    }

    pub fn row_index(&self) -> usize {
        self.row - 1
    }

    pub fn fits(&self, rows: usize, cols: usize) -> bool {
        self.row >= 1 && self.row <= rows && self.column < cols
    }
}

/// Spreadsheet-style letters for a zero-based column index.
pub fn column_label(mut index: usize) -> String {
    let mut letters = Vec::new();
    loop {
        letters.push(b'A' + (index % 26) as u8);
        if index < 26 {
            break;
        }
        index = index / 26 - 1;
    }
    letters.reverse();
    String::from_utf8(letters).expect("ascii")
}

/// Inverse of [`column_label`].
pub fn parse_column_label(label: &str) -> Option<usize> {
    if label.is_empty() || !label.bytes().all(|b| b.is_ascii_uppercase()) {
        return None;
    }
    let mut index: usize = 0;
    for b in label.bytes() {
        index = index
            .checked_mul(26)?
            .checked_add((b - b'A') as usize + 1)?;
    }
    Some(index - 1)
}

impl fmt::Display for ZoneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", column_label(self.column), self.row)
    }
}

impl FromStr for ZoneId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let split = s
            .find(|c: char| c.is_ascii_digit())
            .ok_or_else(|| Error::InvalidZoneId(s.to_string()))?;
        let (letters, digits) = s.split_at(split);
        let column = parse_column_label(&letters.to_ascii_uppercase())
            .ok_or_else(|| Error::InvalidZoneId(s.to_string()))?;
        let row: usize = digits
            .parse()
            .map_err(|_| Error::InvalidZoneId(s.to_string()))?;
        if row == 0 {
            return Err(Error::InvalidZoneId(s.to_string()));
        }
        Ok(ZoneId { column, row })
    }
}

impl Serialize for ZoneId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ZoneId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Inclusive rectangle of zones such as `A1:D10`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZoneRange {
    pub first: ZoneId,
    pub last: ZoneId,
}

impl ZoneRange {
    pub fn contains(&self, id: ZoneId) -> bool {
        let (c0, c1) = min_max(self.first.column, self.last.column);
        let (r0, r1) = min_max(self.first.row, self.last.row);
        (c0..=c1).contains(&id.column) && (r0..=r1).contains(&id.row)
    }

    pub fn fits(&self, rows: usize, cols: usize) -> bool {
        self.first.fits(rows, cols) && self.last.fits(rows, cols)
    }
}

fn min_max(a: usize, b: usize) -> (usize, usize) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl FromStr for ZoneRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidZoneRange(s.to_string());
        let mut parts = s.split(':');
        let first: ZoneId = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let last = match parts.next() {
            Some(p) => p.parse().map_err(|_| bad())?,
            None => first,
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(ZoneRange { first, last })
    }
}

/// Rectangular row-major grid of per-zone values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    rows: usize,
    cols: usize,
    cells: Vec<T>,
}

impl<T> Grid<T> {
    pub fn new(rows: usize, cols: usize, cells: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyGrid { rows, cols });
        }
        if cells.len() != rows * cols {
            return Err(Error::InvalidField(format!(
                "{}x{} grid needs {} cells, got {}",
                rows,
                cols,
                rows * cols,
                cells.len()
            )));
        }
        Ok(Self { rows, cols, cells })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(ZoneId) -> T) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyGrid { rows, cols });
        }
        let cells = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| ZoneId::from_index(r, c)))
            .map(&mut f)
            .collect();
        Ok(Self { rows, cols, cells })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn cells(&self) -> &[T] {
        &self.cells
    }

    pub fn into_cells(self) -> Vec<T> {
        self.cells
    }

    pub fn get(&self, id: ZoneId) -> Option<&T> {
        if id.fits(self.rows, self.cols) {
            Some(&self.cells[id.row_index() * self.cols + id.column])
        } else {
            None
        }
    }

    pub fn get_mut(&mut self, id: ZoneId) -> Option<&mut T> {
        if id.fits(self.rows, self.cols) {
            Some(&mut self.cells[id.row_index() * self.cols + id.column])
        } else {
            None
        }
    }

    /// Zone id of the cell at row-major position `index`.
    pub fn zone_at(&self, index: usize) -> ZoneId {
        ZoneId::from_index(index / self.cols, index % self.cols)
    }

    /// Zone ids in row-major order.
    pub fn zone_ids(&self) -> impl Iterator<Item = ZoneId> + '_ {
        (0..self.cells.len()).map(|i| self.zone_at(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ZoneId, &T)> {
        self.cells
            .iter()
            .enumerate()
            .map(|(i, v)| (ZoneId::from_index(i / self.cols, i % self.cols), v))
    }

    pub fn row_slice(&self, row_index: usize) -> &[T] {
        &self.cells[row_index * self.cols..(row_index + 1) * self.cols]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            rows: self.rows,
            cols: self.cols,
            cells: self.cells.iter().map(f).collect(),
        }
    }

    pub fn ensure_shape(&self, rows: usize, cols: usize) -> Result<()> {
        if self.rows != rows || self.cols != cols {
            return Err(Error::ShapeMismatch {
                expected_rows: rows,
                expected_cols: cols,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }

    pub fn zip_with<U, V>(
        &self,
        other: &Grid<U>,
        mut f: impl FnMut(&T, &U) -> V,
    ) -> Result<Grid<V>> {
        other.ensure_shape(self.rows, self.cols)?;
        Ok(Grid {
            rows: self.rows,
            cols: self.cols,
            cells: self
                .cells
                .iter()
                .zip(&other.cells)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }
}

impl Grid<f64> {
    /// Sequential row-major sum; every reported total goes through here so
    /// results do not depend on how per-zone values were computed.
    pub fn total(&self) -> f64 {
        self.cells.iter().fold(0.0, |acc, v| acc + v)
    }

    pub fn min(&self) -> f64 {
        self.cells.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.cells.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Grid::from_fn(rows, cols, |_| value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zone_id_text_form() {
        let id: ZoneId = "B5".parse().unwrap();
        assert_eq!(id, ZoneId::new(1, 5));
        assert_eq!(id.to_string(), "B5");
        assert_eq!(ZoneId::new(9, 10).to_string(), "J10");
        assert!("B0".parse::<ZoneId>().is_err());
        assert!("5".parse::<ZoneId>().is_err());
        assert!("B".parse::<ZoneId>().is_err());
        assert!("B5x".parse::<ZoneId>().is_err());
    }

    #[test]
    fn column_labels_past_z() {
        assert_eq!(column_label(0), "A");
        assert_eq!(column_label(25), "Z");
        assert_eq!(column_label(26), "AA");
        assert_eq!(column_label(27), "AB");
        assert_eq!(column_label(701), "ZZ");
        assert_eq!(column_label(702), "AAA");
        for i in 0..2000 {
            assert_eq!(parse_column_label(&column_label(i)), Some(i));
        }
    }

    #[test]
    fn range_parsing_and_membership() {
        let r: ZoneRange = "A1:D10".parse().unwrap();
        assert!(r.contains("C7".parse().unwrap()));
        assert!(!r.contains("E1".parse().unwrap()));
        let single: ZoneRange = "A1".parse().unwrap();
        assert!(single.contains(ZoneId::new(0, 1)));
        let reversed: ZoneRange = "D10:A1".parse().unwrap();
        assert!(reversed.contains("B2".parse().unwrap()));
        assert!("A1:B2:C3".parse::<ZoneRange>().is_err());
        assert!("A1-B2".parse::<ZoneRange>().is_err());
    }

    #[test]
    fn grid_addressing_is_row_major() {
        let g = Grid::from_fn(3, 4, |id| id.to_string()).unwrap();
        assert_eq!(g.cells()[0], "A1");
        assert_eq!(g.cells()[5], "B2");
        assert_eq!(g.get("D3".parse().unwrap()).unwrap(), "D3");
        assert!(g.get("E1".parse().unwrap()).is_none());
        assert!(g.get("A4".parse().unwrap()).is_none());
        assert!(Grid::<f64>::new(0, 3, vec![]).is_err());
        assert!(Grid::new(2, 2, vec![1.0; 3]).is_err());
    }
}
