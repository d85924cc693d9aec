//! Interior spectra two ways: dense full diagonalization for sectors that
//! fit in memory, and Chebyshev polynomial filter diagonalization for
//! window-restricted eigenvalues of larger sparse operators.

mod bounds;
mod chebyshev;
mod filter;

pub use bounds::spectral_bounds;
pub use chebyshev::{chebyshev_filter_apply, clenshaw, window_coefficients, AffineMap};
pub use filter::{filter_diagonalize, filter_diagonalize_with_vectors};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

/// Default dimension cap for the dense path.
pub const DENSE_DIM_CAP: usize = 1 << 14;

/// Energy window selecting part of a spectrum.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralWindow {
    /// Central fraction of the estimated spectral span (energy units, not
    /// level rank), in `(0, 1]`.
    CenterFraction(f64),
    /// Explicit energy interval; must sit inside the estimated bounds.
    Bounds { lo: f64, hi: f64 },
}

impl SpectralWindow {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SpectralWindow::CenterFraction(f) => {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(Error::validation(format!(
                        "center fraction {f} must lie in (0, 1]"
                    )));
                }
            }
            SpectralWindow::Bounds { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                    return Err(Error::validation(format!(
                        "window bounds [{lo}, {hi}] must be finite with lo < hi"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Concrete `[lo, hi]` relative to estimated spectral bounds. Explicit
    /// bounds are checked against them; a center fraction is resolved as
    /// that fraction of the bounded span.
    pub fn resolve(&self, spectral: (f64, f64)) -> Result<(f64, f64)> {
        self.validate()?;
        let (blo, bhi) = spectral;
        match *self {
            SpectralWindow::CenterFraction(f) => {
                let center = 0.5 * (blo + bhi);
                let half = 0.5 * f * (bhi - blo);
                Ok((center - half, center + half))
            }
            SpectralWindow::Bounds { lo, hi } => {
                if lo < blo || hi > bhi {
                    return Err(Error::validation(format!(
                        "window [{lo}, {hi}] exceeds the estimated spectral bounds [{blo}, {bhi}]"
                    )));
                }
                Ok((lo, hi))
            }
        }
    }
}

/// Damping kernel applied to the truncated Chebyshev expansion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DampingKernel {
    /// Suppresses Gibbs oscillations; the default.
    Jackson,
    /// No damping (raw truncated expansion).
    Flat,
    /// Lanczos sigma factors raised to the given power.
    LanczosSigma(u32),
}

impl DampingKernel {
    /// Damping factors `g_0..g_degree`.
    pub fn factors(self, degree: usize) -> Vec<f64> {
        let d = degree as f64;
        match self {
            DampingKernel::Flat => vec![1.0; degree + 1],
            DampingKernel::Jackson => {
                let denom = d + 1.0;
                let cot = 1.0 / (std::f64::consts::PI / denom).tan();
                (0..=degree)
                    .map(|j| {
                        let x = std::f64::consts::PI * j as f64 / denom;
                        ((d - j as f64 + 1.0) * x.cos() + x.sin() * cot) / denom
                    })
                    .collect()
            }
            DampingKernel::LanczosSigma(power) => (0..=degree)
                .map(|j| {
                    if j == 0 {
                        1.0
                    } else {
                        let x = std::f64::consts::PI * j as f64 / (d + 1.0);
                        (x.sin() / x).powi(power as i32)
                    }
                })
                .collect(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            DampingKernel::Jackson => "jackson".into(),
            DampingKernel::Flat => "flat".into(),
            DampingKernel::LanczosSigma(p) => format!("lanczos{p}"),
        }
    }
}

/// Knobs of the filter diagonalizer. `polynomial_degree` and `block_size`
/// are starting values; the loop escalates them (degree first) when the
/// window count fails its completeness cross-check.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    pub polynomial_degree: usize,
    pub block_size: usize,
    pub damping: DampingKernel,
    pub residual_tol: f64,
    /// Total budget of filter-and-project iterations, across escalations.
    pub max_iterations: usize,
    /// Relative inflation of the estimated spectral interval.
    pub bound_margin: f64,
    /// Stochastic probes for the window eigenvalue-count estimate.
    pub probes: usize,
    pub max_degree: usize,
    pub max_block: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            polynomial_degree: 200,
            block_size: 32,
            damping: DampingKernel::Jackson,
            residual_tol: 1e-8,
            max_iterations: 60,
            bound_margin: 0.01,
            probes: 12,
            max_degree: 12_800,
            max_block: 1024,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.polynomial_degree == 0 {
            return Err(Error::validation("polynomial_degree must be at least 1"));
        }
        if self.block_size == 0 {
            return Err(Error::validation("block_size must be at least 1"));
        }
        if !(self.residual_tol > 0.0 && self.residual_tol.is_finite()) {
            return Err(Error::validation("residual_tol must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::validation("max_iterations must be at least 1"));
        }
        if !(self.bound_margin >= 0.0 && self.bound_margin.is_finite()) {
            return Err(Error::validation("bound_margin must be non-negative"));
        }
        if self.probes == 0 {
            return Err(Error::validation("probes must be at least 1"));
        }
        if self.max_degree < self.polynomial_degree || self.max_block < self.block_size {
            return Err(Error::validation(
                "escalation caps must be at least the starting degree and block size",
            ));
        }
        Ok(())
    }
}

/// A computed set of eigenvalues, possibly restricted to a window.
#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Per-eigenvalue residual norms, for iterative runs; `None` for dense.
    pub residuals: Option<Vec<f64>>,
    /// Resolved energy window, or `None` for the full spectrum.
    pub window: Option<(f64, f64)>,
    /// Whether the list provably holds every eigenvalue of its range: always
    /// for the dense path, and for filtered runs when the stabilized count
    /// passed the stochastic cross-check.
    pub complete: bool,
    /// Stochastic estimate of the window's eigenvalue count, when computed.
    pub count_estimate: Option<f64>,
    /// Provenance: seeds, sector, method, solver settings.
    pub metadata: BTreeMap<String, String>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Keep only eigenvalues in `[lo, hi]`, recording the window.
    pub fn restrict_to_window(&self, lo: f64, hi: f64) -> Result<Spectrum> {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::validation("window must be finite with lo < hi"));
        }
        let mut eigenvalues = Vec::new();
        let mut residuals = self.residuals.as_ref().map(|_| Vec::new());
        for (i, &e) in self.eigenvalues.iter().enumerate() {
            if e >= lo && e <= hi {
                eigenvalues.push(e);
                if let (Some(out), Some(src)) = (residuals.as_mut(), self.residuals.as_ref()) {
                    out.push(src[i]);
                }
            }
        }
        Ok(Spectrum {
            eigenvalues,
            residuals,
            window: Some((lo, hi)),
            complete: self.complete,
            count_estimate: self.count_estimate,
            metadata: self.metadata.clone(),
        })
    }
}

/// Full dense diagonalization with the default dimension cap.
pub fn dense_eigh(h: &CsrMatrix) -> Result<Spectrum> {
    dense_eigh_with_cap(h, DENSE_DIM_CAP)
}

/// Full dense diagonalization. All eigenvalues, ascending; fails with a
/// capability error above `cap`.
pub fn dense_eigh_with_cap(h: &CsrMatrix, cap: usize) -> Result<Spectrum> {
    if h.dim() > cap {
        return Err(Error::capability(format!(
            "dimension {} exceeds the dense cap {cap}; use filter_diagonalize for a window instead",
            h.dim()
        )));
    }
    let dense = h.to_dense();
    let eigenvalues = crate::linalg::hermitian_eigenvalues(&dense)?;
    let mut metadata = BTreeMap::new();
    metadata.insert("method".to_string(), "dense".to_string());
    Ok(Spectrum {
        eigenvalues,
        residuals: None,
        window: None,
        complete: true,
        count_estimate: None,
        metadata,
    })
}

#[cfg(test)]
pub(crate) fn diagonal_csr(entries: &[f64]) -> CsrMatrix {
    use num_complex::Complex64;
    let rows = entries
        .iter()
        .enumerate()
        .map(|(i, &v)| vec![(i as u32, Complex64::new(v, 0.0))])
        .collect();
    CsrMatrix::from_rows(entries.len(), rows).unwrap()
}

#[cfg(test)]
pub(crate) fn random_sparse_hermitian(dim: usize, per_row: usize, seed: u64) -> CsrMatrix {
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut upper: Vec<Vec<(u32, Complex64)>> = vec![Vec::new(); dim];
    for (r, row) in upper.iter_mut().enumerate() {
        row.push((
            r as u32,
            Complex64::new(rng.random::<f64>() - 0.5, 0.0),
        ));
        for _ in 0..per_row {
            let c = rng.random_range(0..dim);
            if c > r && !row.iter().any(|(cc, _)| *cc == c as u32) {
                let v = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                row.push((c as u32, v));
            }
        }
    }
    // mirror to the lower triangle
    let mut rows: Vec<Vec<(u32, Complex64)>> = vec![Vec::new(); dim];
    for r in 0..dim {
        for &(c, v) in &upper[r] {
            rows[r].push((c, v));
            if c as usize != r {
                rows[c as usize].push((r as u32, v.conj()));
            }
        }
    }
    for row in rows.iter_mut() {
        row.sort_by_key(|(c, _)| *c);
    }
    CsrMatrix::from_rows(dim, rows).unwrap()
}
