use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    /// Column does not apply to this row.
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) if x.is_nan() => "NaN".into(),
            Cell::Num(x) => format!("{x:e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Num(x) => Some(x),
            Cell::Int(i) => Some(i as f64),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

/// Rectangular table of results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.header.len() {
            bail!("row of {} cells for {} columns", row.len(), self.header.len());
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Values of a column, `None` where the cell is not numeric.
    pub fn numbers(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let c = self.column(name).with_context(|| format!("no column {name}"))?;
        Ok(self.rows.iter().map(|r| r[c].as_f64()).collect())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        self.write_to(&mut w)?;
        Ok(String::from_utf8(w.into_inner().context("flushing CSV")?)?)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    fn write_to<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_rectangular_csv() {
        let mut t = ResultTable::new(&["a", "b", "c"]);
        t.push(vec![1.5e-7.into(), 3usize.into(), "x".into()]).unwrap();
        t.push(vec![f64::NAN.into(), Cell::Empty, Option::<f64>::None.into()]).unwrap();
        assert!(t.push(vec![Cell::Empty]).is_err());
        assert_eq!(t.to_csv_string().unwrap(), "a,b,c\n1.5e-7,3,x\nNaN,,\n");
        assert_eq!(t.numbers("a").unwrap()[0], Some(1.5e-7));
    }
}
