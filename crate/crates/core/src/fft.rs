//! Cached FFT plans and transform helpers.
//!
//! rustfft transforms are unnormalized; the inverse here divides by the
//! length so that `inverse(forward(x)) == x` up to rounding.

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

struct PlanCache {
    forward: HashMap<usize, Arc<dyn Fft<f64>>>,
    inverse: HashMap<usize, Arc<dyn Fft<f64>>>,
    planner: FftPlanner<f64>,
}

static CACHE: Lazy<Mutex<PlanCache>> = Lazy::new(|| {
    Mutex::new(PlanCache {
        forward: HashMap::new(),
        inverse: HashMap::new(),
        planner: FftPlanner::new(),
    })
});

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut cache = CACHE.lock().unwrap();
    let PlanCache {
        forward: fw,
        inverse: inv,
        planner,
    } = &mut *cache;
    let map = if forward { fw } else { inv };
    map.entry(n)
        .or_insert_with(|| {
            if forward {
                planner.plan_fft_forward(n)
            } else {
                planner.plan_fft_inverse(n)
            }
        })
        .clone()
}

/// In-place forward DFT (unnormalized).
pub fn forward(data: &mut [Complex64]) {
    plan(data.len(), true).process(data);
}

/// In-place inverse DFT, normalized by 1/n.
pub fn inverse(data: &mut [Complex64]) {
    let n = data.len();
    plan(n, false).process(data);
    let scale = 1.0 / n as f64;
    for z in data.iter_mut() {
        *z *= scale;
    }
}

/// Angular wavenumber for DFT bin `i` of an `n`-point grid with spacing `h`:
/// k = 2π m / (n h) with m = i for i <= n/2 and m = i - n otherwise.
pub fn wavenumber(i: usize, n: usize, h: f64) -> f64 {
    let m = if i <= n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    };
    2.0 * std::f64::consts::PI * m / (n as f64 * h)
}

/// Apply `op` to every spectral coefficient of a row-major `dim`-dimensional
/// array with `n` points per axis, transforming in and out. `op` receives the
/// per-axis wavenumbers.
pub fn map_spectrum<F>(data: &mut [Complex64], dim: usize, n: usize, h: f64, mut op: F)
where
    F: FnMut(&[f64; 2], &mut Complex64),
{
    match dim {
        1 => {
            forward(data);
            for (i, z) in data.iter_mut().enumerate() {
                op(&[wavenumber(i, n, h), 0.0], z);
            }
            inverse(data);
        }
        2 => {
            // Rows (axis 1), then columns (axis 0).
            for row in data.chunks_exact_mut(n) {
                forward(row);
            }
            let mut col = vec![Complex64::default(); n];
            for j in 0..n {
                for i in 0..n {
                    col[i] = data[i * n + j];
                }
                forward(&mut col);
                for i in 0..n {
                    data[i * n + j] = col[i];
                }
            }
            for i in 0..n {
                let k0 = wavenumber(i, n, h);
                for j in 0..n {
                    op(&[k0, wavenumber(j, n, h)], &mut data[i * n + j]);
                }
            }
            for j in 0..n {
                for i in 0..n {
                    col[i] = data[i * n + j];
                }
                inverse(&mut col);
                for i in 0..n {
                    data[i * n + j] = col[i];
                }
            }
            for row in data.chunks_exact_mut(n) {
                inverse(row);
            }
        }
        _ => unreachable!("grid dims are validated to 1 or 2"),
    }
}
