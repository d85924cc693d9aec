//! Estimated spectral interval of a Hermitian operator, inflated by a
//! relative margin so the true spectrum is safely inside. Required before
//! the Chebyshev rescaling: the affine map must push every eigenvalue into
//! [-1, 1].

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm2, scale, HermitianOp};

/// Dimensions up to this are handled by an exact dense solve.
const DENSE_BOUNDS_DIM: usize = 64;

/// Krylov steps per start vector.
const MAX_STEPS: usize = 64;

/// Fresh start vectors tried after an iteration breaks down.
const MAX_RESTARTS: usize = 3;

/// `(lo, hi)` containing the spectrum of `op`, from extremal Ritz values of
/// a short fully reorthogonalized Krylov iteration, inflated by
/// `margin` (relative to the observed span). Deterministic for a given seed.
///
/// Breakdown of the iteration (an exactly invariant Krylov subspace, common
/// for operators with few distinct eigenvalues) triggers a restart with a
/// fresh start vector orthogonal to everything already explored; after
/// [`MAX_RESTARTS`] the union of captured Ritz intervals is used as is.
pub fn spectral_bounds<Op>(op: &Op, margin: f64, seed: u64) -> Result<(f64, f64)>
where
    Op: HermitianOp + ?Sized,
{
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(Error::validation("bound margin must be non-negative"));
    }
    let dim = op.dim();
    if dim == 0 {
        return Err(Error::validation("operator dimension must be positive"));
    }

    let (mut lo, mut hi) = if dim <= DENSE_BOUNDS_DIM {
        dense_extremes(op)?
    } else {
        krylov_extremes(op, seed)?
    };

    let span = hi - lo;
    let pad = margin * span + 1e-12 * (lo.abs() + hi.abs() + 1.0);
    lo -= pad;
    hi += pad;
    Ok((lo, hi))
}

fn dense_extremes<Op: HermitianOp + ?Sized>(op: &Op) -> Result<(f64, f64)> {
    let dim = op.dim();
    let mut dense = faer::Mat::<Complex64>::zeros(dim, dim);
    let mut basis = vec![Complex64::default(); dim];
    let mut column = vec![Complex64::default(); dim];
    for c in 0..dim {
        basis[c] = Complex64::new(1.0, 0.0);
        op.apply_to(&basis, &mut column);
        basis[c] = Complex64::default();
        for r in 0..dim {
            dense[(r, c)] = column[r];
        }
    }
    let vals = crate::linalg::hermitian_eigenvalues(&dense)?;
    Ok((vals[0], vals[dim - 1]))
}

fn krylov_extremes<Op: HermitianOp + ?Sized>(op: &Op, seed: u64) -> Result<(f64, f64)> {
    let dim = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut explored: Vec<Vec<Complex64>> = Vec::new();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut captured = false;

    for _restart in 0..=MAX_RESTARTS {
        let mut v = random_unit(&mut rng, dim);
        orthogonalize(&mut v, &explored);
        let nv = norm2(&v);
        if nv < 1e-8 {
            break; // explored space exhausts the operator
        }
        scale(1.0 / nv, &mut v);

        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut chain: Vec<Vec<Complex64>> = vec![v.clone()];
        let mut w = vec![Complex64::default(); dim];
        let steps = MAX_STEPS.min(dim);
        let mut op_scale = 0.0f64;
        let mut broke_down = false;
        for j in 0..steps {
            op.apply_to(&chain[j], &mut w);
            op_scale = op_scale.max(norm2(&w));
            let alpha = dot(&chain[j], &w).re;
            alphas.push(alpha);
            axpy(Complex64::new(-alpha, 0.0), &chain[j], &mut w);
            if j > 0 {
                let beta_prev = betas[j - 1];
                axpy(Complex64::new(-beta_prev, 0.0), &chain[j - 1], &mut w);
            }
            // full reorthogonalization against this chain and everything
            // explored before, twice for numerical hygiene
            for _ in 0..2 {
                orthogonalize(&mut w, &chain);
                orthogonalize(&mut w, &explored);
            }
            let beta = norm2(&w);
            if beta <= 1e-12 * op_scale.max(1e-300) {
                broke_down = true;
                break;
            }
            if j + 1 == steps {
                break;
            }
            betas.push(beta);
            let mut next = w.clone();
            scale(1.0 / beta, &mut next);
            chain.push(next);
        }

        if !alphas.is_empty() {
            let (rlo, rhi) = tridiagonal_extremes(&alphas, &betas)?;
            lo = lo.min(rlo);
            hi = hi.max(rhi);
            captured = true;
        }
        explored.append(&mut chain);
        if !broke_down || explored.len() >= dim {
            // a full-budget chain already gives sharp extremal Ritz values;
            // restarts are only for recovering from invariant subspaces
            break;
        }
    }

    if !captured {
        return Err(Error::numerical(
            "Krylov iteration broke down repeatedly without capturing Ritz values",
        ));
    }
    Ok((lo, hi))
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Complex64> {
    let normal = rand_distr::StandardNormal;
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| {
            let re: f64 = rand_distr::Distribution::sample(&normal, rng);
            let im: f64 = rand_distr::Distribution::sample(&normal, rng);
            Complex64::new(re, im)
        })
        .collect();
    let n = norm2(&v);
    if n > 0.0 {
        scale(1.0 / n, &mut v);
    }
    v
}

fn orthogonalize(v: &mut [Complex64], against: &[Vec<Complex64>]) {
    for q in against {
        let c = dot(q, v);
        axpy(-c, q, v);
    }
}

fn tridiagonal_extremes(alphas: &[f64], betas: &[f64]) -> Result<(f64, f64)> {
    let m = alphas.len();
    let t = faer::Mat::<f64>::from_fn(m, m, |r, c| {
        if r == c {
            alphas[r]
        } else if r + 1 == c || c + 1 == r {
            betas[r.min(c)]
        } else {
            0.0
        }
    });
    let vals = crate::linalg::symmetric_eigenvalues(&t)?;
    Ok((vals[0], vals[m - 1]))
}
