//! Filter diagonalization: repeatedly apply the window filter polynomial to
//! a block, Rayleigh-Ritz project, and lock converged pairs until the
//! window's eigenvalue count stabilizes and passes a stochastic count
//! cross-check.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm2, scale, HermitianOp};
use crate::seeds::{derive_seed, StreamTag};

use super::chebyshev::{apply_series_column, damped_window_coefficients, AffineMap};
use super::{spectral_bounds, FilterConfig, Spectrum, SpectralWindow};

/// Eigenvalues of `op` inside `window`, with residuals. See
/// [`filter_diagonalize_with_vectors`] for the variant that also returns
/// the converged eigenvectors.
pub fn filter_diagonalize<Op>(
    op: &Op,
    window: &SpectralWindow,
    cfg: &FilterConfig,
    seed: u64,
) -> Result<Spectrum>
where
    Op: HermitianOp + ?Sized,
{
    filter_diagonalize_with_vectors(op, window, cfg, seed).map(|(s, _)| s)
}

/// As [`filter_diagonalize`], also returning the locked orthonormal
/// eigenvectors, ordered like the eigenvalues.
pub fn filter_diagonalize_with_vectors<Op>(
    op: &Op,
    window: &SpectralWindow,
    cfg: &FilterConfig,
    seed: u64,
) -> Result<(Spectrum, Vec<Vec<Complex64>>)>
where
    Op: HermitianOp + ?Sized,
{
    cfg.validate()?;
    window.validate()?;
    let dim = op.dim();
    let bounds = spectral_bounds(op, cfg.bound_margin, derive_seed(seed, StreamTag::Solver, 0))?;
    let (wlo, whi) = window.resolve(bounds)?;
    let map = AffineMap::from_bounds(bounds.0, bounds.1)?;

    let mut probe_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, StreamTag::Solver, 1));
    let mut block_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, StreamTag::Solver, 2));

    let mut degree = cfg.polynomial_degree;
    let mut block_size = cfg.block_size.min(dim);
    let mut coeffs = damped_window_coefficients(bounds, (wlo, whi), degree, cfg.damping)?;
    let (mut estimate, mut est_se) =
        count_estimate(op, map, &coeffs, cfg.probes, &mut probe_rng);

    let mut locked_vals: Vec<f64> = Vec::new();
    let mut locked_res: Vec<f64> = Vec::new();
    let mut locked_vecs: Vec<Vec<Complex64>> = Vec::new();
    let mut carry: Vec<Vec<Complex64>> = Vec::new();
    let mut prev_count: Option<usize> = None;
    let mut escalate_degree_next = true;
    let mut complete = false;
    let mut iterations = 0usize;

    while iterations < cfg.max_iterations {
        iterations += 1;

        // Assemble the active block: carried candidates first, fresh random
        // columns after, all orthogonal to the locked set.
        let mut block: Vec<Vec<Complex64>> = Vec::with_capacity(block_size);
        for mut col in carry.drain(..) {
            if orthonormalize_into(&mut col, &locked_vecs, &block) {
                block.push(col);
            }
            if block.len() == block_size {
                break;
            }
        }
        let mut attempts = 0;
        while block.len() < block_size && attempts < 8 * block_size {
            attempts += 1;
            let mut col = random_column(&mut block_rng, dim);
            if orthonormalize_into(&mut col, &locked_vecs, &block) {
                block.push(col);
            }
        }
        if block.is_empty() {
            // the locked space exhausts the operator
            complete = true;
            break;
        }

        // Filter, then orthonormalize the images.
        let filtered: Vec<Vec<Complex64>> = {
            let columns: Vec<&Vec<Complex64>> = block.iter().collect();
            crate::par_iter!(columns)
                .map(|col| apply_series_column(op, map, &coeffs, col))
                .collect()
        };
        let mut q: Vec<Vec<Complex64>> = Vec::with_capacity(filtered.len());
        for mut col in filtered {
            if orthonormalize_into(&mut col, &locked_vecs, &q) {
                q.push(col);
            }
        }
        let r = q.len();
        if r == 0 {
            // filter annihilated the whole block: nothing lives in the window
            let count = locked_vals.len();
            if stabilized(prev_count, count) {
                if passes_count_check(count, estimate, est_se) {
                    complete = true;
                    break;
                }
                let e = escalate(
                    &mut degree,
                    &mut block_size,
                    &mut escalate_degree_next,
                    cfg,
                    dim,
                );
                if !e {
                    break;
                }
                coeffs = damped_window_coefficients(bounds, (wlo, whi), degree, cfg.damping)?;
                let (ne, ns) = count_estimate(op, map, &coeffs, cfg.probes, &mut probe_rng);
                estimate = ne;
                est_se = ns;
            }
            prev_count = Some(count);
            continue;
        }

        // Rayleigh-Ritz on the filtered subspace.
        let hq: Vec<Vec<Complex64>> = {
            let columns: Vec<&Vec<Complex64>> = q.iter().collect();
            crate::par_iter!(columns)
                .map(|col| {
                    let mut out = vec![Complex64::default(); dim];
                    op.apply_to(col, &mut out);
                    out
                })
                .collect()
        };
        let mut s = faer::Mat::<Complex64>::zeros(r, r);
        for i in 0..r {
            for j in 0..r {
                s[(i, j)] = dot(&q[i], &hq[j]);
            }
        }
        // exact Hermitization so the facade's checks never trip on rounding
        for i in 0..r {
            for j in (i + 1)..r {
                let m = 0.5 * (s[(i, j)] + s[(j, i)].conj());
                s[(i, j)] = m;
                s[(j, i)] = m.conj();
            }
            let d = s[(i, i)].re;
            s[(i, i)] = Complex64::new(d, 0.0);
        }
        let (theta, u) = crate::linalg::hermitian_eigen(&s)?;

        let ritz: Vec<(f64, Vec<Complex64>, f64)> = (0..r)
            .map(|k| {
                let mut v = vec![Complex64::default(); dim];
                let mut hv = vec![Complex64::default(); dim];
                for i in 0..r {
                    let c = u[(i, k)];
                    axpy(c, &q[i], &mut v);
                    axpy(c, &hq[i], &mut hv);
                }
                axpy(Complex64::new(-theta[k], 0.0), &v, &mut hv);
                let res = norm2(&hv);
                (theta[k], v, res)
            })
            .collect();

        for (value, vector, res) in ritz {
            let in_window = value >= wlo && value <= whi;
            if in_window && res <= cfg.residual_tol {
                let mut col = vector;
                if orthonormalize_into(&mut col, &locked_vecs, &[]) {
                    locked_vals.push(value);
                    locked_res.push(res);
                    locked_vecs.push(col);
                }
            } else if in_window {
                carry.push(vector);
            }
        }

        let count = locked_vals.len();
        if stabilized(prev_count, count) {
            if passes_count_check(count, estimate, est_se) {
                complete = true;
                break;
            }
            let escalated = escalate(
                &mut degree,
                &mut block_size,
                &mut escalate_degree_next,
                cfg,
                dim,
            );
            if !escalated {
                break; // nothing left to expand; report the partial result
            }
            coeffs = damped_window_coefficients(bounds, (wlo, whi), degree, cfg.damping)?;
            let (ne, ns) = count_estimate(op, map, &coeffs, cfg.probes, &mut probe_rng);
            estimate = ne;
            est_se = ns;
        }
        prev_count = Some(count);
    }

    // Locked basis must be orthonormal; a violation means the locking logic
    // mishandled the numerics, not the input.
    let gram_defect = locked_gram_defect(&locked_vecs);
    if gram_defect > 1e-10 {
        return Err(Error::numerical(format!(
            "locked Ritz basis lost orthonormality (defect {gram_defect:.3e})"
        )));
    }

    let mut order: Vec<usize> = (0..locked_vals.len()).collect();
    order.sort_by(|&a, &b| {
        locked_vals[a]
            .partial_cmp(&locked_vals[b])
            .expect("Ritz values are finite")
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| locked_vals[i]).collect();
    let residuals: Vec<f64> = order.iter().map(|&i| locked_res[i]).collect();
    let vectors: Vec<Vec<Complex64>> = order.iter().map(|&i| locked_vecs[i].clone()).collect();

    let mut metadata = BTreeMap::new();
    metadata.insert("method".into(), "filter".into());
    metadata.insert("kernel".into(), cfg.damping.name());
    metadata.insert("degree".into(), degree.to_string());
    metadata.insert("block_size".into(), block_size.to_string());
    metadata.insert("iterations".into(), iterations.to_string());
    metadata.insert("probes".into(), cfg.probes.to_string());
    metadata.insert("solver_seed".into(), seed.to_string());
    metadata.insert("bounds_lo".into(), format!("{:.17e}", bounds.0));
    metadata.insert("bounds_hi".into(), format!("{:.17e}", bounds.1));

    let spectrum = Spectrum {
        eigenvalues,
        residuals: Some(residuals),
        window: Some((wlo, whi)),
        complete,
        count_estimate: Some(estimate),
        metadata,
    };
    Ok((spectrum, vectors))
}

fn stabilized(prev: Option<usize>, count: usize) -> bool {
    prev == Some(count)
}

fn passes_count_check(count: usize, estimate: f64, se: f64) -> bool {
    let slack = (3.0 * se).max(1.0);
    count as f64 >= estimate - slack
}

fn escalate(
    degree: &mut usize,
    block_size: &mut usize,
    degree_next: &mut bool,
    cfg: &FilterConfig,
    dim: usize,
) -> bool {
    let can_degree = *degree * 2 <= cfg.max_degree;
    let can_block = *block_size * 2 <= cfg.max_block.min(dim);
    if *degree_next && can_degree {
        *degree *= 2;
        *degree_next = false;
        true
    } else if can_block {
        *block_size *= 2;
        *degree_next = true;
        true
    } else if can_degree {
        *degree *= 2;
        true
    } else {
        false
    }
}

/// Stochastic estimate of `tr p(H~)` with unimodular-phase probes: the
/// expected number of eigenvalues the filter passes. Returns the mean and
/// its standard error.
fn count_estimate<Op>(
    op: &Op,
    map: AffineMap,
    coeffs: &[f64],
    probes: usize,
    rng: &mut ChaCha8Rng,
) -> (f64, f64)
where
    Op: HermitianOp + ?Sized,
{
    use rand::Rng;
    let dim = op.dim();
    let mut samples = Vec::with_capacity(probes);
    for _ in 0..probes {
        let z: Vec<Complex64> = (0..dim)
            .map(|_| {
                let phi: f64 = rng.random::<f64>() * std::f64::consts::TAU;
                Complex64::new(phi.cos(), phi.sin())
            })
            .collect();
        let pz = apply_series_column(op, map, coeffs, &z);
        samples.push(dot(&z, &pz).re);
    }
    let mean = samples.iter().sum::<f64>() / probes as f64;
    let var = if probes > 1 {
        samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (probes as f64 - 1.0)
    } else {
        0.0
    };
    (mean, (var / probes as f64).sqrt())
}

/// Two-pass MGS of `col` against two fixed sets and normalization. Returns
/// false when the column collapses (linearly dependent on the sets).
fn orthonormalize_into(
    col: &mut [Complex64],
    set_a: &[Vec<Complex64>],
    set_b: &[Vec<Complex64>],
) -> bool {
    let initial = norm2(col);
    if initial <= 0.0 {
        return false;
    }
    for _ in 0..2 {
        for q in set_a.iter().chain(set_b.iter()) {
            let c = dot(q, col);
            axpy(-c, q, col);
        }
    }
    let n = norm2(col);
    if n <= 1e-10 * initial.max(1.0) {
        return false;
    }
    scale(1.0 / n, col);
    true
}

fn random_column(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Complex64> {
    let normal = rand_distr::StandardNormal;
    (0..dim)
        .map(|_| {
            let re: f64 = rand_distr::Distribution::sample(&normal, rng);
            let im: f64 = rand_distr::Distribution::sample(&normal, rng);
            Complex64::new(re, im)
        })
        .collect()
}

fn locked_gram_defect(vecs: &[Vec<Complex64>]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..vecs.len() {
        for j in i..vecs.len() {
            let g = dot(&vecs[i], &vecs[j]);
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - Complex64::new(want, 0.0)).norm());
        }
    }
    worst
}
