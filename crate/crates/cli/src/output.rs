//! CSV tables with a comment header block, and gnuplot scripts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use shapelab_core::energy::EnergyParams;

use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance written at the top of every output file.
#[derive(Debug, Clone)]
pub struct Header {
    pub command: &'static str,
    pub config_hash: String,
    pub h: f64,
    pub seed: Option<u64>,
    pub energy: EnergyParams,
}

impl Header {
    pub fn new(command: &'static str, canonical_config: &str, h: f64, seed: Option<u64>, energy: EnergyParams) -> Self {
        let digest = Sha256::digest(canonical_config.as_bytes());
        let config_hash = digest.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        Self { command, config_hash, h, seed, energy }
    }

    pub fn render(&self) -> String {
        let p = &self.energy;
        let c0 = p.c0.map_or_else(|| "auto".to_string(), |c| c.to_string());
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        format!(
            "# shapelab {VERSION} {}\n# config_sha256 {}\n# h {}\n# seed {seed}\n\
             # energy v={} vmax={} eta={} tfrak={} tau={} c_nl={} c0={c0} h_scale={} gap_min={}\n",
            self.command, self.config_hash, self.h, p.v, p.vmax, p.eta, p.tfrak, p.tau, p.c_nl, p.h_scale, p.gap_min
        )
    }
}

pub struct Table {
    pub name: String,
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&'static str]) -> Self {
        Self { name: name.to_string(), columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, header: &Header) -> Result<Vec<u8>, CliError> {
        let mut buf = header.render().into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&self.columns).map_err(io)?;
            for r in &self.rows {
                w.write_record(r).map_err(io)?;
            }
            w.flush().map_err(|e| CliError::Io(e.to_string()))?;
        }
        Ok(buf)
    }
}

fn io(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// Shortest round-trip representation; scientific outside `[1e-4, 1e9)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e9).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

/// One gnuplot panel: columns of `table` plotted against column `x`
/// (`0` is the row index).
pub struct Plot {
    pub table: String,
    pub x: usize,
    pub ys: Vec<(usize, &'static str)>,
    pub logy: bool,
    pub xlabel: &'static str,
}

pub fn gnuplot_script(stem: &str, plots: &[Plot]) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\nset datafile commentschars '#'\n");
    s.push_str("set key autotitle columnhead\nset grid\n");
    let _ = writeln!(s, "set terminal pngcairo size 900,{}", 450 * plots.len().max(1));
    let _ = writeln!(s, "set output '{stem}.png'");
    let _ = writeln!(s, "set multiplot layout {},1", plots.len().max(1));
    for p in plots {
        let _ = writeln!(s, "{}", if p.logy { "set logscale y" } else { "unset logscale y" });
        let _ = writeln!(s, "set xlabel '{}'", p.xlabel);
        let series: Vec<String> =
            p.ys.iter().map(|(y, style)| format!("'{}' using {}:{} with {style}", p.table, p.x, y)).collect();
        let _ = writeln!(s, "plot {}", series.join(", \\\n     "));
    }
    s.push_str("unset multiplot\n");
    s
}

/// Files produced by a subcommand, written only after the whole pipeline
/// has succeeded.
#[derive(Default)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: String,
}

impl Artifacts {
    pub fn table(&mut self, t: &Table, header: &Header) -> Result<(), CliError> {
        self.files.push((t.name.clone(), t.render(header)?));
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), body.into_bytes()));
    }

    pub fn write_all(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Validation(format!("cannot create {}: {e}", dir.display())))?;
        for (name, body) in &self.files {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }
}
