use std::io::Write;

use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Columns of the solve and sweep tables, in order.
pub const SWEEP_COLUMNS: [&str; 16] = [
    "rho",
    "t_star",
    "p_star",
    "a",
    "P_theta",
    "P_phi",
    "S",
    "B",
    "pi_breve",
    "r_bar",
    "pi_bar",
    "M_e",
    "M",
    "phi_tilde",
    "W",
    "status",
];

/// Identifies the run that produced a table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub version: String,
    /// Leading hex digits of the SHA-256 of the canonical config text.
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(canonical_config: &str, seed: u64) -> Self {
        let digest = Sha256::digest(canonical_config.as_bytes());
        let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        Self {
            version: env!("CARGO_PKG_VERSION").to_owned(),
            config_hash: hex,
            seed,
        }
    }

    pub fn header_line(&self) -> String {
        format!(
            "# gatekeep {} config={} seed={}",
            self.version, self.config_hash, self.seed
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl ResultTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    /// Appends a row.
    ///
    /// # Panics
    ///
    /// If the row width differs from the header.
    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width must match the header"
        );
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, mut out: W, provenance: &Provenance) -> Result<(), CliError> {
        let io = |source| CliError::Io {
            path: "<output>".into(),
            source,
        };
        writeln!(out, "{}", provenance.header_line()).map_err(io)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(io)?;
        Ok(())
    }
}

/// Shortest round-trip decimal, switching to exponent form for very large
/// or very small magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(0.89), "0.89");
        assert_eq!(num(2.5e-7), "2.5e-7");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(f64::NAN), "NaN");
    }

    #[test]
    fn csv_with_header() {
        let mut t = ResultTable::new(["x", "status"]);
        t.push(vec![num(1.5), "no bracket, at all".into()]);
        let p = Provenance::new("cfg", 9);
        let mut buf = Vec::new();
        t.write_csv(&mut buf, &p).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# gatekeep ") && lines[0].ends_with(" seed=9"));
        assert_eq!(lines[1], "x,status");
        assert_eq!(lines[2], "1.5,\"no bracket, at all\"");
    }

    #[test]
    #[should_panic(expected = "row width")]
    fn ragged_rows_rejected() {
        ResultTable::new(["a", "b"]).push(vec!["1".into()]);
    }
}
