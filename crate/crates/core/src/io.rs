//! File formats: binary wave function dumps, CSV tables, and JSON reports.

use crate::density::DensityGrid;
use crate::eigen::EigenSystem;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::lab::EquivarianceReport;
use crate::trajectory::{Ensemble, Trajectory};
use crate::wavefunction::WaveFunction;
use num_complex::Complex64;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Binary dump, little-endian: u64 dim, u64 n per axis, f64 L per axis,
/// f64 hbar, f64 mass per axis (dim entries), then interleaved re/im f64
/// pairs in row-major order.
pub fn write_wavefunction(path: &Path, psi: &WaveFunction) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    let grid = psi.grid();
    w.write_all(&(grid.dim() as u64).to_le_bytes())?;
    w.write_all(&(grid.n() as u64).to_le_bytes())?;
    w.write_all(&grid.length().to_le_bytes())?;
    w.write_all(&psi.hbar().to_le_bytes())?;
    for k in 0..grid.dim() {
        w.write_all(&psi.mass()[k].to_le_bytes())?;
    }
    for z in psi.amplitudes() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_wavefunction(path: &Path) -> Result<WaveFunction> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut u64buf = [0u8; 8];
    let mut read_u64 = |r: &mut BufReader<std::fs::File>| -> Result<u64> {
        r.read_exact(&mut u64buf)?;
        Ok(u64::from_le_bytes(u64buf))
    };
    let dim = read_u64(&mut r)? as usize;
    let n = read_u64(&mut r)? as usize;
    let mut f64buf = [0u8; 8];
    let mut read_f64 = |r: &mut BufReader<std::fs::File>| -> Result<f64> {
        r.read_exact(&mut f64buf)?;
        Ok(f64::from_le_bytes(f64buf))
    };
    let length = read_f64(&mut r)?;
    let hbar = read_f64(&mut r)?;
    let mut mass = [1.0; 2];
    for m in mass.iter_mut().take(dim) {
        *m = read_f64(&mut r)?;
    }
    let grid = Grid::new(dim, n, length)?;
    let mut amplitudes = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = read_f64(&mut r)?;
        let im = read_f64(&mut r)?;
        amplitudes.push(Complex64::new(re, im));
    }
    WaveFunction::new(grid, amplitudes, mass, hbar)
}

/// CSV rows `q_1[,q_2],value`.
pub fn write_density_csv(path: &Path, p: &DensityGrid) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    let grid = p.grid();
    match grid.dim() {
        1 => {
            writeln!(w, "q_1,value")?;
            for i in 0..grid.len() {
                writeln!(w, "{},{}", grid.coord(i), p.value(i))?;
            }
        }
        _ => {
            writeln!(w, "q_1,q_2,value")?;
            for i in 0..grid.len() {
                let q = grid.point(i);
                writeln!(w, "{},{},{}", q[0], q[1], p.value(i))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV rows `t,Q_1[,Q_2]`.
pub fn write_trajectory_csv(path: &Path, dim: usize, traj: &Trajectory) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    if dim == 1 {
        writeln!(w, "t,Q_1")?;
    } else {
        writeln!(w, "t,Q_1,Q_2")?;
    }
    for (t, q) in traj.times().iter().zip(traj.positions()) {
        if dim == 1 {
            writeln!(w, "{},{}", t, q[0])?;
        } else {
            writeln!(w, "{},{},{}", t, q[0], q[1])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV with one row per member: `Q_1[,Q_2],node_degenerate`.
pub fn write_ensemble_csv(path: &Path, dim: usize, e: &Ensemble) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    if dim == 1 {
        writeln!(w, "Q_1,node_degenerate")?;
    } else {
        writeln!(w, "Q_1,Q_2,node_degenerate")?;
    }
    for (q, flag) in e.points().iter().zip(e.node_degenerate()) {
        if dim == 1 {
            writeln!(w, "{},{}", q[0], *flag as u8)?;
        } else {
            writeln!(w, "{},{},{}", q[0], q[1], *flag as u8)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `index,eigenvalue` CSV plus one binary grid dump per eigenvector next to
/// it (suffix `_mode<j>.wf`).
pub fn write_eigensystem(csv_path: &Path, es: &EigenSystem) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(csv_path)?);
    writeln!(w, "index,eigenvalue")?;
    for j in 0..es.count() {
        writeln!(w, "{},{}", j, es.eigenvalue(j))?;
    }
    w.flush()?;
    let stem = csv_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("eigensystem");
    for j in 0..es.count() {
        let path = csv_path.with_file_name(format!("{stem}_mode{j}.wf"));
        write_wavefunction(&path, &es.state(j))?;
    }
    Ok(())
}

/// Potential tabulation CSV `q,value` (1D); values must land on the grid.
pub fn read_potential_csv(path: &Path, grid: &Grid) -> Result<Vec<f64>> {
    if grid.dim() != 1 {
        return Err(Error::DimensionUnsupported {
            required: 1,
            actual: grid.dim(),
        });
    }
    let r = BufReader::new(std::fs::File::open(path)?);
    let mut values = vec![f64::NAN; grid.len()];
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with('q')) {
            continue;
        }
        let (qs, vs) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("line {}: expected `q,value`", lineno + 1)))?;
        let q: f64 = qs
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad q `{qs}`", lineno + 1)))?;
        let v: f64 = vs
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad value `{vs}`", lineno + 1)))?;
        let i = ((q + 0.5 * grid.length()) / grid.spacing()).round() as i64;
        if i < 0 || i >= grid.len() as i64 {
            return Err(Error::Parse(format!(
                "line {}: q = {q} outside the grid",
                lineno + 1
            )));
        }
        values[i as usize] = v;
    }
    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::Parse(format!(
            "potential tabulation is missing grid point {} (q = {})",
            i,
            grid.coord(i)
        )));
    }
    Ok(values)
}

/// Norm time series CSV `t,l2_norm_sq`.
pub fn write_norms_csv(path: &Path, rows: &[(f64, f64)]) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "t,l2_norm_sq")?;
    for (t, n) in rows {
        writeln!(w, "{t},{n}")?;
    }
    w.flush()?;
    Ok(())
}

/// Equivariance metric series CSV `t,ks,l1` (ks empty for 2D records).
pub fn write_report_series_csv(path: &Path, report: &EquivarianceReport) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "t,ks,l1")?;
    for m in &report.series {
        match m.ks {
            Some(ks) => writeln!(w, "{},{},{}", m.t, ks, m.l1)?,
            None => writeln!(w, "{},,{}", m.t, m.l1)?,
        }
    }
    w.flush()?;
    Ok(())
}

/// Report as pretty JSON.
pub fn write_report_json(path: &Path, report: &EquivarianceReport) -> Result<()> {
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Parse(format!("report serialization failed: {e}")))?;
    std::fs::write(path, json)?;
    Ok(())
}
