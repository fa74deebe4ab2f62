//! CSV files written by the commands. Numbers use `{:.16e}`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::multilayer::{vertical_velocity, Environment, GridState, LayerPartition};
use crate::runs::DiagnosticRow;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// CSV writer with a header row already written.
pub struct Table {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl Table {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(header)?;
        Ok(Self {
            path: path.to_path_buf(),
            writer,
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn write_snapshots(path: &Path, snapshots: &[GridState]) -> Result<()> {
    let n = snapshots.first().map_or(0, |s| s.layers());
    let mut header = vec!["t".to_string(), "x".to_string(), "h".to_string()];
    header.extend((1..=n).map(|k| format!("u_{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::create(path, &header)?;
    for s in snapshots {
        for i in 0..s.nx() {
            let mut row = vec![num(s.t), num(s.x[i]), num(s.h[i])];
            row.extend(s.column(i).iter().map(|&u| num(u)));
            t.row(&row)?;
        }
    }
    t.finish()
}

/// Layer velocities and the vertical velocity at both layer faces, in the
/// cell containing each station.
pub fn write_w_profiles(
    path: &Path,
    snapshots: &[GridState],
    stations: &[f64],
    partition: &LayerPartition,
    env: &Environment,
) -> Result<()> {
    let mut t = Table::create(path, &["t", "x", "layer_index", "z_mid", "u", "w_lower", "w_upper"])?;
    for s in snapshots {
        let w = vertical_velocity(s, partition, env);
        let n = s.layers();
        for &x in stations {
            let lo = s.x[0] - 0.5 * s.dx;
            let i = ((x - lo) / s.dx).floor();
            if !(i >= 0.0 && (i as usize) < s.nx()) {
                continue;
            }
            let i = i as usize;
            for k in 0..n {
                let mid = 0.5 * (partition.cumulative(k) + partition.cumulative(k + 1));
                let (w_lower, w_upper) = w[i * n + k];
                t.row([
                    num(s.t),
                    num(s.x[i]),
                    (k + 1).to_string(),
                    num(s.z_b[i] + mid * s.h[i]),
                    num(s.column(i)[k]),
                    num(w_lower),
                    num(w_upper),
                ])?;
            }
        }
    }
    t.finish()
}

pub fn write_diagnostics(path: &Path, rows: &[DiagnosticRow]) -> Result<()> {
    let mut t = Table::create(path, &["t", "x_front", "max_speed", "mass", "energy"])?;
    for r in rows {
        t.row([num(r.t), num(r.x_front), num(r.max_speed), num(r.mass), num(r.energy)])?;
    }
    t.finish()
}

pub fn write_deposit(path: &Path, x: &[f64], h: &[f64]) -> Result<()> {
    let mut t = Table::create(path, &["x", "h"])?;
    for (x, h) in x.iter().zip(h) {
        t.row([num(*x), num(*h)])?;
    }
    t.finish()
}

pub fn write_summary(path: &Path, r_f: f64, t_f: f64, h_f: f64) -> Result<()> {
    let mut t = Table::create(path, &["r_f", "t_f", "h_f"])?;
    t.row([num(r_f), num(t_f), num(h_f)])?;
    t.finish()
}
