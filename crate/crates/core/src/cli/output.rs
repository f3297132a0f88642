use std::io::Write;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Round-trip form: 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Provenance written as `#` lines ahead of every CSV table.
#[derive(Clone, Debug)]
pub struct Metadata {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub threads: usize,
    pub tolerances: Vec<(String, f64)>,
}

impl Metadata {
    pub fn new<S: Serialize>(command: &str, settings: &S, seed: u64, threads: usize) -> Self {
        let text = toml::to_string(settings).unwrap_or_default();
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        hasher.update(text.as_bytes());
        hasher.update(seed.to_le_bytes());
        let config_hash = hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        Self {
            command: command.to_owned(),
            config_hash,
            seed,
            threads,
            tolerances: Vec::new(),
        }
    }

    pub fn tolerance(mut self, name: &str, value: f64) -> Self {
        self.tolerances.push((name.to_owned(), value));
        self
    }

    pub fn write_header(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "# gridtensor {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(w, "# command: {}", self.command)?;
        writeln!(w, "# config-sha256: {}", self.config_hash)?;
        writeln!(w, "# seed: {}", self.seed)?;
        writeln!(w, "# threads: {}", self.threads)?;
        for (name, v) in &self.tolerances {
            writeln!(w, "# tolerance {name}: {v:e}")?;
        }
        Ok(())
    }
}

/// Writes the metadata header followed by a CSV table.
pub fn write_table(
    w: &mut dyn Write,
    meta: &Metadata,
    header: &[&str],
    rows: &[Vec<String>],
) -> std::io::Result<()> {
    meta.write_header(w)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(header)?;
    for r in rows {
        csv.write_record(r)?;
    }
    csv.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for x in [0.1, -1.0 / 3.0, 6.02214076e23, 1e-300] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn hash_depends_on_settings() {
        #[derive(Serialize)]
        struct S {
            n: usize,
        }
        let a = Metadata::new("k", &S { n: 1 }, 0, 1);
        let b = Metadata::new("k", &S { n: 2 }, 0, 1);
        assert_eq!(a.config_hash.len(), 64);
        assert_ne!(a.config_hash, b.config_hash);
        assert_eq!(
            a.config_hash,
            Metadata::new("k", &S { n: 1 }, 0, 4).config_hash
        );
    }
}
