//! Density functionals ψ ↦ p^ψ: quantum equilibrium, strictly local
//! candidates, and the 1D CDF-transport family.

use crate::density::{CdfTable, DensityGrid};
use crate::error::{Error, Result};
use crate::record::EvolutionRecord;
use crate::wavefunction::WaveFunction;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Cells used to tabulate transport measures on (0,1).
const MEASURE_CELLS: usize = 4096;

/// Probability density on (0,1) driving the CDF-transport family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransportMeasure {
    Lebesgue,
    /// Density 2u.
    Tilt,
    /// Density ∝ u^(a-1) (1-u)^(b-1), a, b >= 1, normalized numerically.
    BetaLike { a: f64, b: f64 },
    /// Piecewise-constant density over uniform cells, normalized at build.
    Tabulated { values: Vec<f64> },
}

impl TransportMeasure {
    pub fn beta_like(a: f64, b: f64) -> Result<Self> {
        if !(a >= 1.0) || !(b >= 1.0) {
            return Err(Error::InvalidMeasure(format!(
                "beta-like parameters must be >= 1, got a={a}, b={b}"
            )));
        }
        Ok(TransportMeasure::BetaLike { a, b })
    }

    pub fn tabulated(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidMeasure(
                "tabulated measure needs nonnegative finite values".into(),
            ));
        }
        let mean: f64 = values.iter().sum::<f64>() / values.len() as f64;
        if mean < 1e-300 {
            return Err(Error::InvalidMeasure("tabulated measure is all zero".into()));
        }
        let values = values.iter().map(|v| v / mean).collect();
        Ok(TransportMeasure::Tabulated { values })
    }

    fn beta_norm(a: f64, b: f64) -> f64 {
        // Midpoint quadrature over the same lattice the density uses.
        let m = MEASURE_CELLS as f64;
        (0..MEASURE_CELLS)
            .map(|i| {
                let u = (i as f64 + 0.5) / m;
                u.powf(a - 1.0) * (1.0 - u).powf(b - 1.0)
            })
            .sum::<f64>()
            / m
    }

    /// Density at u in (0,1).
    pub fn density(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            TransportMeasure::Lebesgue => 1.0,
            TransportMeasure::Tilt => 2.0 * u,
            TransportMeasure::BetaLike { a, b } => {
                let z = Self::beta_norm(*a, *b);
                u.powf(a - 1.0) * (1.0 - u).powf(b - 1.0) / z
            }
            TransportMeasure::Tabulated { values } => {
                let i = ((u * values.len() as f64) as usize).min(values.len() - 1);
                values[i]
            }
        }
    }

    /// Integral over (0,1); equals 1 by construction. Tabulated measures
    /// integrate cell-exactly, the named ones by the midpoint rule on the
    /// same lattice their normalizer uses.
    pub fn integral(&self) -> f64 {
        match self {
            TransportMeasure::Tabulated { values } => {
                values.iter().sum::<f64>() / values.len() as f64
            }
            _ => {
                let m = MEASURE_CELLS as f64;
                (0..MEASURE_CELLS)
                    .map(|i| self.density((i as f64 + 0.5) / m))
                    .sum::<f64>()
                    / m
            }
        }
    }
}

impl fmt::Display for TransportMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransportMeasure::Lebesgue => write!(f, "lebesgue"),
            TransportMeasure::Tilt => write!(f, "tilt"),
            TransportMeasure::BetaLike { a, b } => write!(f, "beta({a},{b})"),
            TransportMeasure::Tabulated { .. } => write!(f, "tabulated"),
        }
    }
}

/// The families of ψ ↦ p^ψ under test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum DensityFunctional {
    /// p_e = |ψ|² / ∫|ψ|².
    Equilibrium,
    /// g = |ψ|^α, α > 0.
    PowerLaw { alpha: f64 },
    /// g = |ψ|² + β Σ_k λ_k² |∂_k ψ|², β >= 0.
    GradientMix { beta: f64, lambda: [f64; 2] },
    /// 1D only: p(q) = μ(F(ψ,q)) p_e^ψ(q).
    CdfTransport { mu: TransportMeasure },
}

impl DensityFunctional {
    pub fn power_law(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Parse(format!("power-law alpha must be positive, got {alpha}")));
        }
        Ok(DensityFunctional::PowerLaw { alpha })
    }

    pub fn gradient_mix(beta: f64) -> Result<Self> {
        if !(beta >= 0.0) {
            return Err(Error::Parse(format!("gradient-mix beta must be nonnegative, got {beta}")));
        }
        Ok(DensityFunctional::GradientMix {
            beta,
            lambda: [1.0, 1.0],
        })
    }

    /// Strictly local part g^ψ on the grid (the CDF-transport variant
    /// returns its full integrand, whose normalizer is already ~1).
    pub fn g_values(&self, psi: &WaveFunction) -> Result<Vec<f64>> {
        match self {
            DensityFunctional::Equilibrium => {
                Ok(psi.amplitudes().iter().map(|z| z.norm_sqr()).collect())
            }
            DensityFunctional::PowerLaw { alpha } => Ok(psi
                .amplitudes()
                .iter()
                .map(|z| z.norm_sqr().powf(alpha / 2.0))
                .collect()),
            DensityFunctional::GradientMix { beta, lambda } => {
                let mut g: Vec<f64> = psi.amplitudes().iter().map(|z| z.norm_sqr()).collect();
                for axis in 0..psi.grid().dim() {
                    let d = psi.spectral_derivative(axis, 1)?;
                    let w = beta * lambda[axis] * lambda[axis];
                    for (gi, dz) in g.iter_mut().zip(d.amplitudes()) {
                        *gi += w * dz.norm_sqr();
                    }
                }
                Ok(g)
            }
            DensityFunctional::CdfTransport { mu } => {
                if psi.grid().dim() != 1 {
                    return Err(Error::DimensionUnsupported {
                        required: 1,
                        actual: psi.grid().dim(),
                    });
                }
                let p_e = psi.density_of().normalize()?;
                let cdf = CdfTable::from_density(&p_e)?;
                let grid = psi.grid();
                Ok((0..grid.len())
                    .map(|i| mu.density(cdf.eval(grid.coord(i))) * p_e.value(i))
                    .collect())
            }
        }
    }

    /// Normalized density p^ψ = N_g g^ψ.
    pub fn eval_density(&self, psi: &WaveFunction) -> Result<DensityGrid> {
        let g = self.g_values(psi)?;
        DensityGrid::from_values(*psi.grid(), g)?.normalize()
    }

    pub fn is_local(&self) -> bool {
        !matches!(self, DensityFunctional::CdfTransport { .. })
    }
}

impl fmt::Display for DensityFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityFunctional::Equilibrium => write!(f, "equilibrium"),
            DensityFunctional::PowerLaw { alpha } => write!(f, "power:alpha={alpha}"),
            DensityFunctional::GradientMix { beta, .. } => write!(f, "gradmix:beta={beta}"),
            DensityFunctional::CdfTransport { mu } => write!(f, "cdf:mu={mu}"),
        }
    }
}

impl FromStr for DensityFunctional {
    type Err = Error;

    /// Accepts `equilibrium`, `power:alpha=A`, `gradmix:beta=B`,
    /// `cdf:mu=lebesgue|tilt|beta(A,B)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::Parse(msg);
        let s = s.trim();
        if s == "equilibrium" {
            return Ok(DensityFunctional::Equilibrium);
        }
        if let Some(rest) = s.strip_prefix("power:alpha=") {
            let alpha: f64 = rest
                .parse()
                .map_err(|_| bad(format!("bad alpha in `{s}`")))?;
            return DensityFunctional::power_law(alpha);
        }
        if let Some(rest) = s.strip_prefix("gradmix:beta=") {
            let beta: f64 = rest
                .parse()
                .map_err(|_| bad(format!("bad beta in `{s}`")))?;
            return DensityFunctional::gradient_mix(beta);
        }
        if let Some(rest) = s.strip_prefix("cdf:mu=") {
            let mu = match rest {
                "lebesgue" => TransportMeasure::Lebesgue,
                "tilt" => TransportMeasure::Tilt,
                other => {
                    let inner = other
                        .strip_prefix("beta(")
                        .and_then(|r| r.strip_suffix(')'))
                        .ok_or_else(|| bad(format!("unknown measure `{other}`")))?;
                    let (a, b) = inner
                        .split_once(',')
                        .ok_or_else(|| bad(format!("beta measure needs two parameters: `{other}`")))?;
                    TransportMeasure::beta_like(
                        a.trim().parse().map_err(|_| bad(format!("bad beta a in `{s}`")))?,
                        b.trim().parse().map_err(|_| bad(format!("bad beta b in `{s}`")))?,
                    )?
                }
            };
            return Ok(DensityFunctional::CdfTransport { mu });
        }
        Err(bad(format!("unknown functional `{s}`")))
    }
}

/// Cumulative equilibrium probability F(ψ, q) = P_e^ψ((-∞, q]), with the
/// box's left edge standing in for -∞. Build [`equilibrium_cdf`] once when
/// evaluating many points.
pub fn cdf_f(psi: &WaveFunction, q: f64) -> Result<f64> {
    Ok(equilibrium_cdf(psi)?.eval(q))
}

/// The full piecewise-linear equilibrium CDF of a 1D state.
pub fn equilibrium_cdf(psi: &WaveFunction) -> Result<CdfTable> {
    if psi.grid().dim() != 1 {
        return Err(Error::DimensionUnsupported {
            required: 1,
            actual: psi.grid().dim(),
        });
    }
    let p_e = psi.density_of().normalize()?;
    CdfTable::from_density(&p_e)
}

/// p(q) = μ(F(ψ,q)) p_e^ψ(q), normalized.
pub fn cdf_transport_density(mu: &TransportMeasure, psi: &WaveFunction) -> Result<DensityGrid> {
    DensityFunctional::CdfTransport { mu: mu.clone() }.eval_density(psi)
}

/// Time series of h^{ψ_t} = d/dt ln N_g^{ψ_t} across a record's frames
/// (centered differences; the endpoints are dropped).
pub fn estimate_h(f: &DensityFunctional, record: &EvolutionRecord) -> Result<Vec<(f64, f64)>> {
    if record.frame_count() < 3 {
        return Err(Error::TooFewFrames(record.frame_count(), 3));
    }
    let cell = record.grid().cell_volume();
    let ln_n: Vec<f64> = (0..record.frame_count())
        .map(|i| {
            let g = f.g_values(record.frame(i).psi())?;
            let integral: f64 = g.iter().sum::<f64>() * cell;
            Ok(-integral.ln())
        })
        .collect::<Result<_>>()?;
    let dt = record.dt_frame();
    Ok((1..record.frame_count() - 1)
        .map(|i| {
            (
                record.frame_time(i),
                (ln_n[i + 1] - ln_n[i - 1]) / (2.0 * dt),
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::potential::PotentialSpec;
    use crate::record::{EvolutionRecord, Provenance};
    use num_complex::Complex64;

    fn gaussian(n: usize, l: f64) -> WaveFunction {
        let grid = Grid::new(1, n, l).unwrap();
        WaveFunction::gaussian(grid, [0.0, 0.0], [1.0, 1.0], [0.0, 0.0])
            .unwrap()
            .normalize()
    }

    #[test]
    fn equilibrium_of_normalized_state_is_density() {
        let psi = gaussian(256, 20.0);
        let p = DensityFunctional::Equilibrium.eval_density(&psi).unwrap();
        let d = psi.density_of();
        for (a, b) in p.values().iter().zip(d.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn functionals_are_projective() {
        let psi = gaussian(256, 20.0);
        let scaled = psi.scaled(Complex64::new(3.0, -4.0));
        let variants = [
            DensityFunctional::Equilibrium,
            DensityFunctional::power_law(1.0).unwrap(),
            DensityFunctional::power_law(4.0).unwrap(),
            DensityFunctional::gradient_mix(0.25).unwrap(),
            DensityFunctional::CdfTransport {
                mu: TransportMeasure::Tilt,
            },
        ];
        for f in &variants {
            let p0 = f.eval_density(&psi).unwrap();
            let p1 = f.eval_density(&scaled).unwrap();
            for (a, b) in p0.values().iter().zip(p1.values()) {
                assert!((a - b).abs() < 1e-10, "{f}");
            }
        }
    }

    #[test]
    fn power_two_matches_equilibrium() {
        let psi = gaussian(256, 20.0);
        let p2 = DensityFunctional::power_law(2.0)
            .unwrap()
            .eval_density(&psi)
            .unwrap();
        let pe = DensityFunctional::Equilibrium.eval_density(&psi).unwrap();
        for (a, b) in p2.values().iter().zip(pe.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cdf_endpoints_and_scale_invariance() {
        let psi = gaussian(512, 20.0);
        assert!(cdf_f(&psi, -10.0).unwrap() <= 1e-9);
        assert!((cdf_f(&psi, 10.0).unwrap() - 1.0).abs() <= 1e-9);
        assert!((cdf_f(&psi, 0.0).unwrap() - 0.5).abs() < 1e-9);
        let scaled = psi.scaled(Complex64::new(7.0, 0.0));
        for &q in &[-3.0, -0.4, 1.7] {
            let a = cdf_f(&psi, q).unwrap();
            let b = cdf_f(&scaled, q).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cdf_is_monotone_in_q() {
        let psi = gaussian(256, 20.0);
        let cdf = equilibrium_cdf(&psi).unwrap();
        let mut prev = 0.0;
        for i in 0..=500 {
            let q = -10.0 + 20.0 * i as f64 / 500.0;
            let f = cdf.eval(q);
            assert!(f >= prev);
            prev = f;
        }
    }

    #[test]
    fn lebesgue_transport_is_equilibrium() {
        let psi = gaussian(512, 20.0);
        let p = cdf_transport_density(&TransportMeasure::Lebesgue, &psi).unwrap();
        let pe = DensityFunctional::Equilibrium.eval_density(&psi).unwrap();
        for (a, b) in p.values().iter().zip(pe.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn tilt_transport_shape_and_mass() {
        let psi = gaussian(512, 20.0);
        let p = cdf_transport_density(&TransportMeasure::Tilt, &psi).unwrap();
        assert!((p.total_mass() - 1.0).abs() < 1e-9);
        // p(q) = 2 F(q) p_e(q) up to the (≈1) normalizer.
        let pe = DensityFunctional::Equilibrium.eval_density(&psi).unwrap();
        let cdf = equilibrium_cdf(&psi).unwrap();
        let grid = psi.grid();
        for i in (0..grid.len()).step_by(37) {
            let expected = 2.0 * cdf.eval(grid.coord(i)) * pe.value(i);
            assert!((p.value(i) - expected).abs() < 1e-9 * (1.0 + expected));
        }
    }

    #[test]
    fn tilt_transport_puts_three_quarters_right_of_center() {
        // Quadrature oracle: ∫_{1/2}^{1} 2u du = 3/4. The half-cell split
        // at q = 0 carries an O((p h)²) quadrature term, so the grid must
        // be fine.
        let psi = gaussian(8192, 20.0);
        let p = cdf_transport_density(&TransportMeasure::Tilt, &psi).unwrap();
        let grid = psi.grid();
        let h = grid.spacing();
        // Node-centered cells: the node at q=0 contributes half a cell to
        // each side.
        let mut right = 0.0;
        for i in 0..grid.len() {
            let q = grid.coord(i);
            if q > 0.0 {
                right += p.value(i) * h;
            } else if q == 0.0 {
                right += 0.5 * p.value(i) * h;
            }
        }
        assert!((right - 0.75).abs() < 1e-6, "right mass {right}");
    }

    #[test]
    fn measures_integrate_to_one() {
        let measures = [
            TransportMeasure::Lebesgue,
            TransportMeasure::Tilt,
            TransportMeasure::beta_like(2.0, 3.0).unwrap(),
            TransportMeasure::tabulated((0..100).map(|i| 1.0 + (i % 7) as f64).collect()).unwrap(),
        ];
        for m in &measures {
            assert!((m.integral() - 1.0).abs() < 1e-9, "{m}");
        }
    }

    #[test]
    fn functional_strings_round_trip() {
        for s in [
            "equilibrium",
            "power:alpha=1",
            "power:alpha=4",
            "gradmix:beta=0.25",
            "cdf:mu=tilt",
            "cdf:mu=lebesgue",
        ] {
            let f: DensityFunctional = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
        }
        assert!("power:alpha=-1".parse::<DensityFunctional>().is_err());
        assert!("nonsense".parse::<DensityFunctional>().is_err());
    }

    #[test]
    fn estimate_h_vanishes_for_equilibrium() {
        let grid = Grid::new(1, 256, 20.0).unwrap();
        let psi = WaveFunction::gaussian(grid, [0.0, 0.0], [1.0, 1.0], [1.0, 0.0])
            .unwrap()
            .normalize();
        let rec = EvolutionRecord::from_split_step(
            "h-test",
            psi,
            PotentialSpec::Harmonic { omega: 1.0 },
            1e-3,
            10,
            51,
        )
        .unwrap();
        for f in [
            DensityFunctional::Equilibrium,
            DensityFunctional::power_law(2.0).unwrap(),
        ] {
            let series = estimate_h(&f, &rec).unwrap();
            for (t, h) in series {
                assert!(h.abs() < 1e-8, "{f}: h({t}) = {h}");
            }
        }
    }

    #[test]
    fn estimate_h_negative_for_spreading_powerlaw_one() {
        // For the spreading Gaussian, ∫|ψ_t| grows like sqrt(σ_t), so
        // N₁ = 1/∫|ψ_t| shrinks and h = d/dt ln N₁ < 0 for t > 0.
        let grid = Grid::new(1, 1024, 30.0).unwrap();
        let sigma0 = 0.5f64.sqrt();
        let frames: Vec<WaveFunction> = (0..=40)
            .map(|i| {
                let t = i as f64 * 0.05;
                let denom = Complex64::new(1.0, t);
                let norm = (2.0 * std::f64::consts::PI * sigma0 * sigma0).powf(-0.25);
                let pref = norm / denom.sqrt();
                WaveFunction::from_fn(grid, [1.0, 1.0], 1.0, |q| {
                    pref * (-q[0] * q[0] / (4.0 * sigma0 * sigma0) / denom).exp()
                })
                .unwrap()
            })
            .collect();
        let rec = EvolutionRecord::from_frames(
            "gauss-h",
            frames,
            0.05,
            PotentialSpec::Free,
            Provenance::Analytic,
        )
        .unwrap();
        let series = estimate_h(&DensityFunctional::power_law(1.0).unwrap(), &rec).unwrap();
        for (t, h) in series.iter().skip(2) {
            assert!(*h < 0.0, "h({t}) = {h} should be negative");
        }
    }

    #[test]
    fn degenerate_g_is_an_error() {
        let grid = Grid::new(1, 64, 10.0).unwrap();
        let mut amps = vec![Complex64::default(); grid.len()];
        amps[0] = Complex64::new(1e-160, 0.0);
        let psi = WaveFunction::with_units(grid, amps).unwrap();
        // |ψ|² underflows below 1e-300.
        assert!(matches!(
            DensityFunctional::Equilibrium.eval_density(&psi),
            Err(Error::DegenerateDensity(_))
        ));
    }
}
