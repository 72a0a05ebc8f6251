//! CSV tables with `#`-prefixed provenance lines.

use std::io::Write;

use crate::error::Result;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    provenance: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        CsvTable { provenance: Vec::new(), columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn provenance(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.provenance.push((key.into(), value.to_string()));
        self
    }

    pub fn push_provenance(&mut self, key: impl Into<String>, value: impl ToString) {
        self.provenance.push((key.into(), value.to_string()));
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in &self.provenance {
            writeln!(out, "# {k}: {v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_then_rows() {
        let mut t = CsvTable::new(["rank", "magnitude"]).provenance("alpha", 1.5);
        t.push_row(vec!["1".into(), "0.25".into()]);
        assert_eq!(t.to_csv_string().unwrap(), "# alpha: 1.5\nrank,magnitude\n1,0.25\n");
    }
}
