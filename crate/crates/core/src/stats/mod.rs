//! Level-spacing r-ratio statistics, reference ensemble values, sampling
//! helpers for calibration, histograms, and eigenvector localization.

mod dip;

pub use dip::dip_statistic;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use crate::eigensolve::Spectrum;
use crate::error::{Error, Result};

/// Mean r-ratio references for the standard ensembles, rounded as commonly
/// quoted.
#[derive(Clone, Copy, Debug)]
pub struct ReferenceValues {
    pub poisson: f64,
    pub goe: f64,
    pub gue: f64,
    pub gse: f64,
}

pub const REFERENCE: ReferenceValues = ReferenceValues {
    poisson: 0.38,
    goe: 0.53,
    gue: 0.60,
    gse: 0.67,
};

/// Analytic Poisson mean r: `2 ln 2 - 1`.
pub const POISSON_MEAN_R: f64 = 2.0 * std::f64::consts::LN_2 - 1.0;

/// Result of an r-ratio computation over one level sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct RStatistics {
    pub mean_r: f64,
    /// Number of r values entering the mean.
    pub count: usize,
    /// Central fraction of levels the statistics were restricted to
    /// (1.0 when the spectrum's own window was the restriction).
    pub window_fraction: f64,
    /// Adjacent equal levels among those entering the ratios.
    pub degenerate_pairs: usize,
    /// Per-realization means, when aggregating several sequences.
    pub per_realization: Option<Vec<f64>>,
}

/// The r values of one sorted level sequence, plus the count of adjacent
/// equal levels (each a degenerate pair).
#[derive(Clone, Debug, PartialEq)]
pub struct RRatioSeries {
    pub values: Vec<f64>,
    pub degenerate_pairs: usize,
}

fn ensure_sorted(levels: &[f64]) -> Result<()> {
    if levels.iter().any(|x| !x.is_finite()) {
        return Err(Error::validation("levels must be finite"));
    }
    if levels.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::validation("levels must be sorted ascending"));
    }
    Ok(())
}

/// Ratios `min(s_i, s_{i+1}) / max(s_i, s_{i+1})` of consecutive spacings
/// of a sorted sequence. Two adjacent zero spacings yield r = 1 by the
/// 0/0 convention; a single zero spacing yields r = 0. Every zero spacing
/// (a pair of equal levels) is counted in `degenerate_pairs`.
pub fn r_ratios(levels: &[f64]) -> Result<RRatioSeries> {
    if levels.len() < 3 {
        return Err(Error::validation(format!(
            "need at least 3 levels for r ratios, got {}",
            levels.len()
        )));
    }
    ensure_sorted(levels)?;
    let mut values = Vec::with_capacity(levels.len() - 2);
    for w in levels.windows(3) {
        let s0 = w[1] - w[0];
        let s1 = w[2] - w[1];
        let r = if s0 == 0.0 && s1 == 0.0 {
            1.0
        } else {
            s0.min(s1) / s0.max(s1)
        };
        values.push(r);
    }
    let degenerate_pairs = levels.windows(2).filter(|w| w[1] == w[0]).count();
    Ok(RRatioSeries {
        values,
        degenerate_pairs,
    })
}

/// Mean r over the central `fraction` of `levels`, selected by rank.
pub fn mean_r_of_levels(levels: &[f64], fraction: f64) -> Result<RStatistics> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::validation(format!(
            "central fraction {fraction} must lie in (0, 1]"
        )));
    }
    ensure_sorted(levels)?;
    let n = levels.len();
    let m = (fraction * n as f64).round() as usize;
    let m = m.min(n);
    if m < 3 {
        return Err(Error::validation(format!(
            "central fraction {fraction} of {n} levels keeps {m} < 3 levels"
        )));
    }
    let start = (n - m) / 2;
    let series = r_ratios(&levels[start..start + m])?;
    let mean_r = series.values.iter().sum::<f64>() / series.values.len() as f64;
    Ok(RStatistics {
        mean_r,
        count: series.values.len(),
        window_fraction: fraction,
        degenerate_pairs: series.degenerate_pairs,
        per_realization: None,
    })
}

/// Mean r of a spectrum's central `fraction` of levels. For a windowed
/// spectrum the window already is the restriction, so all levels enter and
/// the recorded fraction is 1.
pub fn mean_r_central(spectrum: &Spectrum, fraction: f64) -> Result<RStatistics> {
    if spectrum.window.is_some() {
        mean_r_of_levels(&spectrum.eigenvalues, 1.0)
    } else {
        mean_r_of_levels(&spectrum.eigenvalues, fraction)
    }
}

/// r statistics of a symmetric single-particle spectrum, given its
/// non-negative half (mode energies, ascending). The smallest
/// `exclude_fraction` of the energies is dropped first: the spectrum is
/// symmetric about zero, so spacings there are an artifact of folding, and
/// the zero-energy region follows its own statistics. The central
/// `central_fraction` of what remains enters the mean.
///
/// Levels closer than `1e-12` of the energy scale are snapped together, so
/// exact degeneracies that an eigensolver resolves only to rounding still
/// trigger the 0/0 convention and are reported in `degenerate_pairs`.
pub fn positive_half_rstats(
    energies: &[f64],
    exclude_fraction: f64,
    central_fraction: f64,
) -> Result<RStatistics> {
    if !(0.0..1.0).contains(&exclude_fraction) {
        return Err(Error::validation(format!(
            "exclude fraction {exclude_fraction} must lie in [0, 1)"
        )));
    }
    ensure_sorted(energies)?;
    if energies.first().is_some_and(|&e| e < 0.0) {
        return Err(Error::validation(
            "expected the non-negative half of a symmetric spectrum",
        ));
    }
    let drop = (exclude_fraction * energies.len() as f64).ceil() as usize;
    if energies.len() <= drop {
        return Err(Error::validation("exclusion removes every level"));
    }
    let mut kept = energies[drop..].to_vec();
    let snap = 1e-12 * kept.last().copied().unwrap_or(0.0);
    for i in 1..kept.len() {
        if kept[i] - kept[i - 1] <= snap {
            kept[i] = kept[i - 1];
        }
    }
    mean_r_of_levels(&kept, central_fraction)
}

/// Combine per-realization means into one summary (simple average of the
/// realization means, counts accumulated).
pub fn pool_realizations(stats: &[RStatistics]) -> Result<RStatistics> {
    if stats.is_empty() {
        return Err(Error::validation("no realizations to pool"));
    }
    let per: Vec<f64> = stats.iter().map(|s| s.mean_r).collect();
    let mean_r = per.iter().sum::<f64>() / per.len() as f64;
    Ok(RStatistics {
        mean_r,
        count: stats.iter().map(|s| s.count).sum(),
        window_fraction: stats[0].window_fraction,
        degenerate_pairs: stats.iter().map(|s| s.degenerate_pairs).sum(),
        per_realization: Some(per),
    })
}

/// Eigenvalues of one GUE matrix: real `N(0, 1)` diagonal, off-diagonal
/// entries with independent `N(0, 1/2)` real and imaginary parts (so
/// `E|H_ij|^2 = 1` off the diagonal).
pub fn gue_sample(dim: usize, seed: u64) -> Result<Spectrum> {
    if dim < 2 {
        return Err(Error::validation("GUE dimension must be at least 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::StandardNormal;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut h = faer::Mat::<Complex64>::zeros(dim, dim);
    for i in 0..dim {
        let d: f64 = normal.sample(&mut rng);
        h[(i, i)] = Complex64::new(d, 0.0);
        for j in (i + 1)..dim {
            let re: f64 = normal.sample(&mut rng);
            let im: f64 = normal.sample(&mut rng);
            let v = Complex64::new(re * inv_sqrt2, im * inv_sqrt2);
            h[(i, j)] = v;
            h[(j, i)] = v.conj();
        }
    }
    let eigenvalues = crate::linalg::hermitian_eigenvalues(&h)?;
    let mut metadata = std::collections::BTreeMap::new();
    metadata.insert("method".into(), "gue_sample".into());
    metadata.insert("seed".into(), seed.to_string());
    Ok(Spectrum {
        eigenvalues,
        residuals: None,
        window: None,
        complete: true,
        count_estimate: None,
        metadata,
    })
}

/// Levels with independent Exp(1) spacings (a Poisson point process),
/// ascending.
pub fn poisson_sample(count: usize, seed: u64) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::validation("need a positive level count"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut levels = Vec::with_capacity(count);
    let mut acc = 0.0;
    for _ in 0..count {
        let s: f64 = rand_distr::Exp1.sample(&mut rng);
        acc += s;
        levels.push(acc);
    }
    Ok(levels)
}

/// Fixed-width histogram.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    /// `bin_count + 1` edges, ascending.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Values outside `[range.0, range.1]`, reported rather than dropped.
    pub out_of_range: u64,
}

/// Left-closed bins over `range`, the final bin right-closed.
pub fn histogram(values: &[f64], bin_count: usize, range: (f64, f64)) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::validation("cannot histogram an empty vector"));
    }
    if bin_count == 0 {
        return Err(Error::validation("need at least one bin"));
    }
    let (lo, hi) = range;
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::validation(format!(
            "range [{lo}, {hi}] must be finite with lo < hi"
        )));
    }
    let width = (hi - lo) / bin_count as f64;
    let edges: Vec<f64> = (0..=bin_count).map(|i| lo + i as f64 * width).collect();
    let mut counts = vec![0u64; bin_count];
    let mut out_of_range = 0u64;
    for &v in values {
        if !v.is_finite() || v < lo || v > hi {
            out_of_range += 1;
            continue;
        }
        let idx = (((v - lo) / width) as usize).min(bin_count - 1);
        counts[idx] += 1;
    }
    Ok(Histogram {
        edges,
        counts,
        out_of_range,
    })
}

/// Inverse participation ratio `sum |psi_v|^4` of a unit vector.
pub fn ipr(psi: &[Complex64]) -> Result<f64> {
    if psi.is_empty() {
        return Err(Error::validation("empty vector"));
    }
    let norm_sq: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if (norm_sq - 1.0).abs() > 1e-10 {
        return Err(Error::validation(format!(
            "vector must be normalized (|psi|^2 = {norm_sq})"
        )));
    }
    Ok(psi.iter().map(|z| z.norm_sqr() * z.norm_sqr()).sum())
}
