//! Artifact writers. Every file names the code version and config hash.

use crate::error::CliError;
use qbm_core::grid::GridOperator;
use qbm_core::PhysicalParams;
use serde_json::{json, Map, Value};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One CSV cell.
#[derive(Debug, Clone, Copy)]
pub enum Cell {
    Int(usize),
    Num(f64),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

/// 17 significant digits, so values round-trip exactly.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub struct OutputDir {
    dir: PathBuf,
    hash: String,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path, hash: &str) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(OutputDir { dir: dir.to_path_buf(), hash: hash.to_string(), written: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let p = self.dir.join(name);
        fs::write(&p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn header_line(&self) -> String {
        format!("# qbm {VERSION} config_hash={}\n", self.hash)
    }

    pub fn write_csv(&mut self, name: &str, columns: &[&str], rows: &[Vec<Cell>]) -> Result<(), CliError> {
        let mut s = self.header_line();
        s.push_str(&columns.join(","));
        s.push('\n');
        for row in rows {
            debug_assert_eq!(row.len(), columns.len());
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                match c {
                    Cell::Int(v) => write!(s, "{v}").unwrap(),
                    Cell::Num(v) => s.push_str(&fmt_num(*v)),
                }
            }
            s.push('\n');
        }
        self.put(name, s.as_bytes())
    }

    /// JSON document with `version` and `config_hash` added at the top level.
    pub fn write_json(&mut self, name: &str, body: Value) -> Result<(), CliError> {
        let mut map = Map::new();
        map.insert("version".into(), json!(VERSION));
        map.insert("config_hash".into(), json!(self.hash));
        if let Value::Object(fields) = body {
            map.extend(fields);
        } else {
            map.insert("value".into(), body);
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(map)).expect("JSON values always serialise");
        text.push('\n');
        self.put(name, text.as_bytes())
    }

    /// Raw little-endian `(re, im)` float64 pairs, row-major over `(u, s)`,
    /// plus a JSON sidecar describing the lattice and the physics.
    pub fn write_snapshot(
        &mut self,
        stem: &str,
        k: &GridOperator,
        params: &PhysicalParams,
        t: f64,
    ) -> Result<(), CliError> {
        let mut bytes = Vec::with_capacity(16 * k.values().len());
        for z in k.values() {
            bytes.extend_from_slice(&z.re.to_le_bytes());
            bytes.extend_from_slice(&z.im.to_le_bytes());
        }
        self.put(&format!("{stem}.bin"), &bytes)?;
        let spec = k.spec();
        self.write_json(
            &format!("{stem}.json"),
            json!({
                "n_u": spec.n_u(),
                "n_s": spec.n_s(),
                "l_u": spec.l_u(),
                "l_s": spec.l_s(),
                "t": t,
                "hbar": params.hbar(),
                "mass": params.mass(),
                "gamma": params.gamma(),
                "kT": params.kt(),
                "eta": params.eta(),
            }),
        )
    }

    /// Minimal gnuplot script plotting columns of a CSV written earlier.
    pub fn write_gnuplot(
        &mut self,
        name: &str,
        csv: &str,
        x: usize,
        ys: &[(usize, &str)],
        logscale: bool,
    ) -> Result<(), CliError> {
        let mut s = format!(
            "# qbm {VERSION} config_hash={}\nset datafile separator ','\nset key autotitle columnhead\n",
            self.hash
        );
        if logscale {
            s.push_str("set logscale xy\n");
        }
        let plots: Vec<String> =
            ys.iter().map(|(c, t)| format!("'{csv}' using {x}:{c} with lines title '{t}'")).collect();
        writeln!(s, "plot {}", plots.join(", \\\n     ")).unwrap();
        self.put(name, s.as_bytes())
    }
}

/// Failure report left in the output directory when a run aborts.
pub fn write_diagnostic(dir: &Path, hash: &str, err: &CliError) -> Result<(), CliError> {
    let mut out = OutputDir::create(dir, hash)?;
    out.write_json("diagnostic.json", json!({ "exit_code": err.exit_code(), "error": err.to_string() }))
}
