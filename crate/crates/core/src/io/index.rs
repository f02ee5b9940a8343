use super::table::{Cell, Table};
use crate::error::Result;
use std::path::Path;

pub const INDEX_FILE: &str = "index.csv";

/// One file produced by a run, relative to the output directory.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub path: String,
    /// `table`, `field`, `metadata`, `config` or `report`.
    pub kind: String,
    pub description: String,
}

/// Listing of every artifact of a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ArtifactIndex {
    pub entries: Vec<Artifact>,
}

impl ArtifactIndex {
    pub fn add(&mut self, path: impl Into<String>, kind: &str, description: impl Into<String>) {
        self.entries.push(Artifact { path: path.into(), kind: kind.into(), description: description.into() });
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new("index", &["path", "kind", "description"]);
        for a in &self.entries {
            t.rows.push(vec![Cell::Text(a.path.clone()), Cell::Text(a.kind.clone()), Cell::Text(a.description.clone())]);
        }
        t
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        self.to_table().write(&dir.join(INDEX_FILE))
    }

    pub fn read(dir: &Path) -> Result<ArtifactIndex> {
        let p = dir.join(INDEX_FILE);
        let text = std::fs::read_to_string(&p).map_err(|e| crate::error::Error::io(p.display().to_string(), e))?;
        let t = Table::from_csv("index", &text)?;
        let mut idx = ArtifactIndex::default();
        for r in t.rows {
            idx.add(r[0].render(), &r[1].render(), r[2].render());
        }
        Ok(idx)
    }
}
