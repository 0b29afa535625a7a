//! CSV writers. Floats use Rust's shortest round-trip formatting, so equal
//! values always produce equal bytes.

use std::io::Write;

use crate::dynamics::ReturnPath;
use crate::error::Result;
use crate::experiments::{MseSeries, TableRow};
use crate::kw::Trajectory;
use crate::oracle::GrowthCurve;

fn num(x: f64) -> String {
    format!("{x}")
}

fn cell(series: &[f64], i: usize) -> String {
    series.get(i).map(|x| num(*x)).unwrap_or_default()
}

/// `t,h,eps,eta,nu` with empty cells for absent series.
pub fn write_path<W: Write>(out: W, path: &ReturnPath) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "h", "eps", "eta", "nu"])?;
    for i in 0..path.len() {
        w.write_record([
            (i + 1).to_string(),
            num(path.h[i]),
            cell(&path.eps, i),
            cell(&path.eta, i),
            cell(&path.nu, i),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `theta,g_hat,se`.
pub fn write_curve<W: Write>(out: W, curve: &GrowthCurve) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta", "g_hat", "se"])?;
    for i in 0..curve.len() {
        w.write_record([num(curve.grid[i]), num(curve.g_hat[i]), num(curve.se[i])])?;
    }
    w.flush()?;
    Ok(())
}

/// `t,theta1` or `t,theta1,theta2`.
pub fn write_trajectory<W: Write>(out: W, traj: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match &traj.theta2 {
        None => w.write_record(["t", "theta1"])?,
        Some(_) => w.write_record(["t", "theta1", "theta2"])?,
    }
    for (i, theta1) in traj.theta1.iter().enumerate() {
        let t = (traj.start_t + i).to_string();
        match &traj.theta2 {
            None => w.write_record([t, num(*theta1)])?,
            Some(t2) => w.write_record([t, num(*theta1), num(t2[i])])?,
        }
    }
    w.flush()?;
    Ok(())
}

/// `t,mse`.
pub fn write_mse<W: Write>(out: W, series: &MseSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "mse"])?;
    for (t, m) in series.t.iter().zip(&series.mse) {
        w.write_record([t.to_string(), num(*m)])?;
    }
    w.flush()?;
    Ok(())
}

/// `dynamics,dataset,scaling,mse_at_T`.
pub fn write_table<W: Write>(out: W, rows: &[TableRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["dynamics", "dataset", "scaling", "mse_at_T"])?;
    for r in rows {
        w.write_record([
            r.dynamics.as_str().to_string(),
            r.dataset.as_str().to_string(),
            r.scaling.name().to_string(),
            num(r.mse_at_t),
        ])?;
    }
    w.flush()?;
    Ok(())
}
