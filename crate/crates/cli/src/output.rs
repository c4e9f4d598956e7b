//! Run directories, CSV tables and the metadata document.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use slitlab_core::field::ComplexField2D;

use crate::error::CliError;

/// A freshly created directory owned by one study run.
#[derive(Debug)]
pub struct RunDir {
    path: PathBuf,
    header: Vec<String>,
}

impl RunDir {
    /// Creates `root/study`; an existing directory is a collision, never
    /// overwritten.
    pub fn create(root: &Path, study: &str, resolved_toml: &str) -> Result<Self, CliError> {
        let path = root.join(study);
        if path.exists() {
            return Err(CliError::Io(format!(
                "output directory {} already exists; refusing to overwrite",
                path.display()
            )));
        }
        fs::create_dir_all(&path)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
        let mut header = vec![format!(
            "slitlab {} study={study}",
            env!("CARGO_PKG_VERSION")
        )];
        header.push("resolved configuration:".into());
        header.extend(resolved_toml.lines().map(|l| format!("  {l}")));
        Ok(Self { path, header })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn open(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let p = self.path.join(name);
        File::create(&p)
            .map(BufWriter::new)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))
    }

    /// Comma-separated table with the resolved configuration as a `#`
    /// header.
    pub fn write_csv<I>(&self, name: &str, columns: &[&str], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        let mut w = self.open(name)?;
        let io = |e: std::io::Error| CliError::Io(format!("{name}: {e}"));
        for line in &self.header {
            writeln!(w, "# {line}").map_err(io)?;
        }
        writeln!(w, "{}", columns.join(",")).map_err(io)?;
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", cells.join(",")).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// `metadata.toml`: the resolved configuration plus a `[results]` table.
    pub fn write_metadata(
        &self,
        resolved_toml: &str,
        results: &toml::Table,
    ) -> Result<(), CliError> {
        let mut doc: toml::Table = resolved_toml
            .parse()
            .map_err(|e| CliError::Io(format!("resolved configuration does not reparse: {e}")))?;
        let mut run = toml::Table::new();
        run.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        run.insert(
            "threads".into(),
            (rayon::current_num_threads() as i64).into(),
        );
        doc.insert("run".into(), run.into());
        doc.insert("results".into(), results.clone().into());
        let mut w = self.open("metadata.toml")?;
        w.write_all(toml::to_string(&doc).expect("tables serialize").as_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| CliError::Io(format!("metadata.toml: {e}")))
    }

    pub fn dump_field(&self, name: &str, field: &ComplexField2D) -> Result<(), CliError> {
        let w = self.open(name)?;
        slitlab_core::dump::write_field(w, field).map_err(CliError::from)
    }
}

/// Converts an optional float into a TOML value, NaN-free.
pub fn opt_value(v: Option<f64>) -> toml::Value {
    match v {
        Some(x) if x.is_finite() => x.into(),
        _ => "none".into(),
    }
}

pub fn float_array(vs: &[f64]) -> toml::Value {
    toml::Value::Array(vs.iter().map(|&v| v.into()).collect())
}
