use crate::dynamics::TrajectoryBundle;
use crate::error::{Error, Result};
use std::fs;
use std::path::Path;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    /// Scientific notation with 17 significant digits; text verbatim.
    pub fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Cell {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Cell {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Cell {
        Cell::Text(s)
    }
}

/// Named table with a fixed header.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Table {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_columns(name: impl Into<String>, columns: Vec<String>) -> Table {
        Table { name: name.into(), columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Format(format!("table {}: row of {} cells for {} columns", self.name, row.len(), self.columns.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fmt = |e: csv::Error| Error::Format(format!("table {}: {e}", self.name));
        w.write_record(&self.columns).map_err(fmt)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).map_err(fmt)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }

    /// Parse CSV text; cells that parse as floats become numbers.
    pub fn from_csv(name: &str, text: &str) -> Result<Table> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let fmt = |e: csv::Error| Error::Format(format!("table {name}: {e}"));
        let columns = r.headers().map_err(fmt)?.iter().map(String::from).collect();
        let mut t = Table::with_columns(name, columns);
        for rec in r.records() {
            let rec = rec.map_err(fmt)?;
            t.push(rec.iter().map(|s| s.parse::<f64>().map(Cell::Num).unwrap_or_else(|_| Cell::Text(s.into()))).collect())?;
        }
        Ok(t)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()?).map_err(|e| Error::io(path.display().to_string(), e))
    }
}

/// Column names of [`trajectory_table`] in dimension `d`.
pub fn trajectory_columns(d: usize, frames: bool) -> Vec<String> {
    let mut c = vec!["t".to_string()];
    c.extend((1..=d).map(|i| format!("x{i}")));
    c.extend((1..=d).map(|i| format!("xi{i}")));
    if frames {
        for m in ["Y", "Z"] {
            for i in 1..=d {
                for j in 1..=d {
                    c.push(format!("re_{m}{i}{j}"));
                    c.push(format!("im_{m}{i}{j}"));
                }
            }
        }
    }
    c.push("delta".into());
    c.push("energy".into());
    c
}

/// One row per stored sample: time, centre, frame entries (if integrated), action phase, energy.
pub fn trajectory_table(name: &str, traj: &TrajectoryBundle) -> Result<Table> {
    let d = traj.states.first().map(|s| s.d()).unwrap_or(0);
    let mut t = Table::with_columns(name, trajectory_columns(d, traj.frames.is_some()));
    for k in 0..traj.len() {
        let s = &traj.states[k];
        let mut row: Vec<Cell> = vec![traj.times[k].into()];
        row.extend(s.x.iter().map(|&v| Cell::Num(v)));
        row.extend(s.xi.iter().map(|&v| Cell::Num(v)));
        if let Some(f) = &traj.frames {
            for m in [&f[k].y, &f[k].z] {
                for v in m.iter() {
                    row.push(v.re.into());
                    row.push(v.im.into());
                }
            }
        }
        row.push(traj.delta[k].into());
        row.push(traj.energy[k].into());
        t.push(row)?;
    }
    Ok(t)
}
