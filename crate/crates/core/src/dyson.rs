//! Single-particle analysis: Bogoliubov canonical form of the antisymmetric
//! coupling matrix, rotation of the quartic impurity into the eigenmode
//! basis, and the extensivity measures of the rotated tensor.
//!
//! A real antisymmetric `A` (even dimension `n`) is brought to canonical form
//! by a real orthogonal `O`:
//!
//! ```text
//! O A O^T = diag([[0, eps_k], [-eps_k, 0]]),   eps_k >= 0 ascending.
//! ```
//!
//! The factorization runs on the real symmetric matrix `-A^2`, whose
//! eigenspaces group the canonical planes. Each near-degenerate eigenvalue
//! cluster is projected to a small antisymmetric block and paired there;
//! clusters whose internal structure sits below the noise floor of the
//! squared spectrum (energies down at `~1e-8` of the spectral scale) are
//! resolved by recursing on the projected block, which restores full relative
//! precision because the block is computed directly from `A`.

use nalgebra::DMatrix;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::couplings::{faer_from_nalgebra, CouplingSet, SingleParticleMatrix};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::symmetric_eigen;
use crate::stats::RStatistics;

/// Relative gap (against the largest squared energy) below which adjacent
/// eigenvalues of -A^2 are treated as one cluster. Plane structure inside a
/// cluster is recovered by greedy pairing or recursion on the projected
/// block, never from the squared spectrum itself.
const CLUSTER_REL: f64 = 1e-8;

/// Recursion guard for pathological eps hierarchies.
const MAX_CLUSTER_DEPTH: usize = 4;

/// Result of the canonical factorization. Rows `2k` and `2k+1` of `o`
/// (0-based) span the k-th plane; `eps[k]` is its energy.
#[derive(Clone, Debug)]
pub struct BogoliubovFactorization {
    pub o: DMatrix<f64>,
    pub eps: Vec<f64>,
}

impl BogoliubovFactorization {
    pub fn n_modes(&self) -> usize {
        self.eps.len()
    }

    /// Sign of `det O` (`+1.0` or `-1.0`).
    pub fn determinant_sign(&self) -> Result<f64> {
        let det = self.o.clone().lu().determinant();
        if !det.is_finite() || det.abs() < 0.5 {
            return Err(Error::numerical(format!(
                "orthogonal factor has implausible determinant {det}"
            )));
        }
        Ok(det.signum())
    }

    /// Worst deviation from the two defining properties: orthogonality of
    /// `O` and canonical block structure of `O A O^T`. Returns
    /// `(orthogonality_defect, canonical_defect)`.
    pub fn verify(&self, a: &DMatrix<f64>) -> (f64, f64) {
        let n = self.o.nrows();
        let gram = &self.o * self.o.transpose();
        let mut ortho = 0.0f64;
        for r in 0..n {
            for c in 0..n {
                let want = if r == c { 1.0 } else { 0.0 };
                ortho = ortho.max((gram[(r, c)] - want).abs());
            }
        }
        let m = &self.o * a * self.o.transpose();
        let mut canon = 0.0f64;
        for r in 0..n {
            for c in 0..n {
                let want = if r / 2 == c / 2 {
                    let k = r / 2;
                    if r % 2 == 0 && c == r + 1 {
                        self.eps[k]
                    } else if r % 2 == 1 && c + 1 == r {
                        -self.eps[k]
                    } else {
                        0.0
                    }
                } else {
                    0.0
                };
                canon = canon.max((m[(r, c)] - want).abs());
            }
        }
        (ortho, canon)
    }
}

fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

/// Canonical factorization of a real antisymmetric matrix of even dimension.
pub fn bogoliubov(a: &DMatrix<f64>) -> Result<BogoliubovFactorization> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::validation("matrix must be square"));
    }
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::validation(format!(
            "dimension {n} must be even and positive"
        )));
    }
    let scale = max_abs(a);
    let asym = (0..n)
        .flat_map(|r| (0..n).map(move |c| (r, c)))
        .fold(0.0f64, |m, (r, c)| m.max((a[(r, c)] + a[(c, r)]).abs()));
    if asym > 1e-12 * scale.max(1.0) {
        return Err(Error::validation(format!(
            "matrix is not antisymmetric (defect {asym:.3e})"
        )));
    }

    let mut planes = canonical_planes(a, 0)?;
    // eps ascending; pairing order within a cluster is arbitrary, so sort.
    planes.sort_by(|x, y| x.eps.partial_cmp(&y.eps).expect("energies are finite"));

    let mut o = DMatrix::zeros(n, n);
    let mut eps = Vec::with_capacity(n / 2);
    for (k, plane) in planes.into_iter().enumerate() {
        for c in 0..n {
            o[(2 * k, c)] = plane.w[c];
            o[(2 * k + 1, c)] = plane.u[c];
        }
        eps.push(plane.eps);
    }

    // Polar cleanup. Planes with nearby small energies sit in separate
    // clusters whose eigenvectors contaminate each other by up to
    // eps_mach * (scale / eps)^2, which can push the Gram defect past the
    // 1e-10 contract. Each Newton step toward the orthogonal polar factor
    // squares the defect, and perturbs O J O^T only at the order of
    // defect * eps of the affected planes.
    let mut fo = faer_from_nalgebra(&o);
    for _ in 0..3 {
        let g = &fo * fo.transpose();
        let mut defect = 0.0f64;
        for r in 0..n {
            for c in 0..n {
                let target = if r == c { 1.0 } else { 0.0 };
                defect = defect.max((g[(r, c)] - target).abs());
            }
        }
        if defect <= 1e-13 {
            break;
        }
        let mut f = faer::Mat::from_fn(n, n, |r, c| -0.5 * g[(r, c)]);
        for d in 0..n {
            f[(d, d)] += 1.5;
        }
        fo = f * fo;
    }
    for r in 0..n {
        for c in 0..n {
            o[(r, c)] = fo[(r, c)];
        }
    }

    // deterministic gauge: first significant component of each w row
    // is nonnegative
    for k in 0..n / 2 {
        let negate = o
            .row(2 * k)
            .iter()
            .find(|x| x.abs() > 1e-8)
            .is_some_and(|x| *x < 0.0);
        if negate {
            for c in 0..n {
                o[(2 * k, c)] = -o[(2 * k, c)];
                o[(2 * k + 1, c)] = -o[(2 * k + 1, c)];
            }
        }
    }
    Ok(BogoliubovFactorization { o, eps })
}

struct Plane {
    w: Vec<f64>,
    u: Vec<f64>,
    eps: f64,
}

/// Extract canonical planes of `a`, recursing into clusters that the squared
/// spectrum cannot resolve.
fn canonical_planes(a: &DMatrix<f64>, depth: usize) -> Result<Vec<Plane>> {
    let n = a.nrows();
    let fa = faer_from_nalgebra(a);
    let m = fa.transpose() * &fa; // -A^2
    let (lambda, v) = symmetric_eigen(&m)?;
    let eps_est: Vec<f64> = lambda.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let scale = eps_est.last().copied().unwrap_or(0.0);
    // cluster on the squared spectrum: its eigenvalue noise stays linear in
    // machine epsilon, whereas the square root amplifies noise near zero to
    // sqrt(eps_mach), which would split the zero cluster. Over-merging is
    // harmless because the recursion below resolves cluster structure.
    let ctol = CLUSTER_REL * scale * scale;

    let mut planes = Vec::with_capacity(n / 2);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && lambda[end] - lambda[end - 1] <= ctol {
            end += 1;
        }
        let width = end - start;
        if width % 2 != 0 {
            return Err(Error::numerical(format!(
                "odd eigenvalue cluster of width {width}; spectrum of -A^2 lost its pairing"
            )));
        }
        // columns of the cluster basis
        let vc = DMatrix::from_fn(n, width, |r, c| v[(r, start + c)]);
        let spread = lambda[end - 1] - lambda[start];
        let away_from_zero = lambda[start] > ctol;
        let whole_matrix = width == n;
        if width == 2 || whole_matrix || depth >= MAX_CLUSTER_DEPTH {
            pair_cluster(a, &vc, &mut planes)?;
        } else if spread <= n as f64 * f64::EPSILON * scale * scale && away_from_zero {
            // exactly degenerate away from zero: any pairing works
            pair_cluster(a, &vc, &mut planes)?;
        } else {
            // unresolved structure (typically the near-zero cluster):
            // project and recurse at the cluster's own scale
            let b_small = vc.transpose() * a * &vc;
            // enforce exact antisymmetry of the projected block so the
            // recursion's validation never trips on rounding
            let b_small = 0.5 * (&b_small - b_small.transpose());
            let sub = canonical_planes(&b_small, depth + 1)?;
            for p in sub {
                let w = &vc * DMatrix::from_column_slice(p.w.len(), 1, &p.w);
                let u = &vc * DMatrix::from_column_slice(p.u.len(), 1, &p.u);
                planes.push(Plane {
                    w: w.column(0).iter().copied().collect(),
                    u: u.column(0).iter().copied().collect(),
                    eps: p.eps,
                });
            }
        }
        start = end;
    }
    Ok(planes)
}

/// Greedy pairing inside one cluster subspace: take a basis vector `u`, set
/// `w = A u / |A u|`, remove both from the working basis, repeat. Valid when
/// the cluster is a single canonical plane, exactly degenerate, or has had
/// its structure resolved by recursion.
fn pair_cluster(a: &DMatrix<f64>, vc: &DMatrix<f64>, planes: &mut Vec<Plane>) -> Result<()> {
    let width = vc.ncols();
    let mut basis: Vec<nalgebra::DVector<f64>> =
        (0..width).map(|c| vc.column(c).into_owned()).collect();
    // zero modes are judged against the whole matrix, not the image of the
    // cluster basis: for a genuine kernel cluster the latter is pure noise
    let matrix_scale = max_abs(a).max(f64::MIN_POSITIVE);
    while let Some(u) = basis.pop() {
        let w_raw = a * &u;
        let nu = w_raw.norm();
        if nu <= 1e-12 * matrix_scale {
            // zero mode: partner with any remaining basis vector
            let w = basis.pop().ok_or_else(|| {
                Error::numerical("zero mode without a partner in its cluster")
            })?;
            planes.push(Plane {
                w: w.iter().copied().collect(),
                u: u.iter().copied().collect(),
                eps: 0.0,
            });
            continue;
        }
        let mut w = w_raw / nu;
        // w is orthogonal to u up to rounding (u^T A u = 0); clean residue
        let overlap = u.dot(&w);
        w -= &u * overlap;
        w /= w.norm();
        // remove the new plane from the remaining basis
        for q in basis.iter_mut() {
            let cu = u.dot(q);
            let cw = w.dot(q);
            *q -= &u * cu + &w * cw;
        }
        // re-orthonormalize survivors (modified Gram-Schmidt, two passes)
        let mut survivors: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(basis.len());
        for mut q in basis.drain(..) {
            for _ in 0..2 {
                for s in &survivors {
                    let c = s.dot(&q);
                    q -= s * c;
                }
                let cu = u.dot(&q);
                let cw = w.dot(&q);
                q -= &u * cu + &w * cw;
            }
            let nq = q.norm();
            if nq > 1e-8 {
                survivors.push(q / nq);
            }
        }
        basis = survivors;
        planes.push(Plane {
            w: w.iter().copied().collect(),
            u: u.iter().copied().collect(),
            eps: nu,
        });
    }
    Ok(())
}

/// Fully antisymmetric rank-4 tensor obtained by rotating a quartic vertex
/// on `sites` into the mode basis: `T_{abcd} = det O[(a,b,c,d), sites]`,
/// rows taken from the canonical factor `O`.
///
/// The full quadruple enumeration is always streamed for the scalar
/// accumulators (norms, max); the entry list keeps coefficients at or above
/// `tau_store * max|T|` (two passes). `tau_store = 0` stores everything.
#[derive(Clone, Debug)]
pub struct QuarticTensor {
    pub n_modes: usize,
    pub sites: [usize; 4],
    pub tau_store: f64,
    /// `sum T^2` over strictly increasing quadruples.
    pub norm_sq: f64,
    /// `sum T^4` over strictly increasing quadruples.
    pub sum_fourth: f64,
    pub max_abs: f64,
    /// `(a, b, c, d, value)` with `a < b < c < d` (0-based modes), ascending
    /// lexicographically; only entries with `|value| >= tau_store * max_abs`.
    pub entries: Vec<([u32; 4], f64)>,
}

/// Derived concentration measures of the rotated tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtensivityMeasures {
    /// Number of coefficients with `|T| > tau * max|T|`.
    pub support_count: usize,
    /// `(sum T^2)^2 / sum T^4`: effective number of participating
    /// coefficients, threshold-free.
    pub participation_ratio: f64,
}

/// Default relative threshold for support counting.
pub const DEFAULT_SUPPORT_TAU: f64 = 1e-3;

/// 4x4 determinant by two-row Laplace expansion.
#[inline]
fn det4(r: &[[f64; 4]; 4]) -> f64 {
    let m01 = r[0][0] * r[1][1] - r[0][1] * r[1][0];
    let m02 = r[0][0] * r[1][2] - r[0][2] * r[1][0];
    let m03 = r[0][0] * r[1][3] - r[0][3] * r[1][0];
    let m12 = r[0][1] * r[1][2] - r[0][2] * r[1][1];
    let m13 = r[0][1] * r[1][3] - r[0][3] * r[1][1];
    let m23 = r[0][2] * r[1][3] - r[0][3] * r[1][2];
    let n01 = r[2][0] * r[3][1] - r[2][1] * r[3][0];
    let n02 = r[2][0] * r[3][2] - r[2][2] * r[3][0];
    let n03 = r[2][0] * r[3][3] - r[2][3] * r[3][0];
    let n12 = r[2][1] * r[3][2] - r[2][2] * r[3][1];
    let n13 = r[2][1] * r[3][3] - r[2][3] * r[3][1];
    let n23 = r[2][2] * r[3][3] - r[2][3] * r[3][2];
    m01 * n23 - m02 * n13 + m03 * n12 + m12 * n03 - m13 * n02 + m23 * n01
}

struct QuadrupleScan {
    sum_sq: f64,
    sum_4: f64,
    max_abs: f64,
}

/// Stream all quadruples with first index `a`, calling `visit` per value.
fn scan_first_index<F: FnMut([u32; 4], f64)>(
    cols: &DMatrix<f64>,
    n: usize,
    a: usize,
    visit: &mut F,
) {
    for b in (a + 1)..n {
        for c_ix in (b + 1)..n {
            for d in (c_ix + 1)..n {
                let rows = [
                    [cols[(a, 0)], cols[(a, 1)], cols[(a, 2)], cols[(a, 3)]],
                    [cols[(b, 0)], cols[(b, 1)], cols[(b, 2)], cols[(b, 3)]],
                    [cols[(c_ix, 0)], cols[(c_ix, 1)], cols[(c_ix, 2)], cols[(c_ix, 3)]],
                    [cols[(d, 0)], cols[(d, 1)], cols[(d, 2)], cols[(d, 3)]],
                ];
                visit([a as u32, b as u32, c_ix as u32, d as u32], det4(&rows));
            }
        }
    }
}

fn rotate_quartic_impl(
    o: &DMatrix<f64>,
    sites: [usize; 4],
    tau_store: f64,
    sequential: bool,
) -> Result<QuarticTensor> {
    let n = o.nrows();
    if o.ncols() != n {
        return Err(Error::validation("orthogonal factor must be square"));
    }
    if n < 4 {
        return Err(Error::validation(format!(
            "need at least 4 modes, got {n}"
        )));
    }
    let mut sorted = sites;
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) || sorted[3] >= n {
        return Err(Error::validation(format!(
            "sites {sites:?} must be distinct and within 0..{n}"
        )));
    }
    if !(0.0..1.0).contains(&tau_store) {
        return Err(Error::validation("tau_store must lie in [0, 1)"));
    }
    let gram_defect = {
        let gram = o * o.transpose();
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in 0..n {
                let want = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((gram[(r, c)] - want).abs());
            }
        }
        worst
    };
    if gram_defect > 1e-10 {
        return Err(Error::validation(format!(
            "input is not orthogonal (Gram defect {gram_defect:.3e})"
        )));
    }

    // Narrow to the four site columns once; the inner loop then touches a
    // dense n x 4 panel.
    let cols = DMatrix::from_fn(n, 4, |r, c| o[(r, sites[c])]);

    let scan_one = |a: usize| {
        let mut acc = QuadrupleScan {
            sum_sq: 0.0,
            sum_4: 0.0,
            max_abs: 0.0,
        };
        scan_first_index(&cols, n, a, &mut |_, t| {
            let t2 = t * t;
            acc.sum_sq += t2;
            acc.sum_4 += t2 * t2;
            acc.max_abs = acc.max_abs.max(t.abs());
        });
        acc
    };
    // Pass 1: scalar accumulators, combined in fixed index order so the
    // sums are independent of thread count.
    let partials: Vec<QuadrupleScan> = if sequential {
        (0..n).map(scan_one).collect()
    } else {
        crate::par_iter!(0..n).map(scan_one).collect()
    };
    let (mut norm_sq, mut sum_fourth, mut max_abs) = (0.0, 0.0, 0.0f64);
    for p in &partials {
        norm_sq += p.sum_sq;
        sum_fourth += p.sum_4;
        max_abs = max_abs.max(p.max_abs);
    }

    // Pass 2: collect entries above the storage threshold, in order.
    let cutoff = tau_store * max_abs;
    let collect_one = |a: usize| {
        let mut kept = Vec::new();
        scan_first_index(&cols, n, a, &mut |q, t| {
            if t.abs() >= cutoff {
                kept.push((q, t));
            }
        });
        kept
    };
    let chunks: Vec<Vec<([u32; 4], f64)>> = if sequential {
        (0..n).map(collect_one).collect()
    } else {
        crate::par_iter!(0..n).map(collect_one).collect()
    };
    let entries: Vec<([u32; 4], f64)> = chunks.into_iter().flatten().collect();

    Ok(QuarticTensor {
        n_modes: n,
        sites,
        tau_store,
        norm_sq,
        sum_fourth,
        max_abs,
        entries,
    })
}

/// Rotate the quartic vertex on `sites` (0-based) into the mode basis of `o`.
pub fn rotate_quartic(o: &DMatrix<f64>, sites: [usize; 4], tau_store: f64) -> Result<QuarticTensor> {
    rotate_quartic_impl(o, sites, tau_store, false)
}

/// Sequential variant of [`rotate_quartic`]; benchmark reference.
pub fn rotate_quartic_seq(
    o: &DMatrix<f64>,
    sites: [usize; 4],
    tau_store: f64,
) -> Result<QuarticTensor> {
    rotate_quartic_impl(o, sites, tau_store, true)
}

/// Rotate the standard impurity vertex (first four sites).
pub fn rotate_impurity(o: &DMatrix<f64>) -> Result<QuarticTensor> {
    rotate_quartic(o, [0, 1, 2, 3], DEFAULT_SUPPORT_TAU)
}

impl QuarticTensor {
    /// Support count and participation ratio at relative threshold `tau`.
    /// `tau` may not dip below the storage threshold: entries that small
    /// were never kept.
    pub fn extensivity_measures(&self, tau: f64) -> Result<ExtensivityMeasures> {
        if !(0.0..1.0).contains(&tau) {
            return Err(Error::validation("tau must lie in [0, 1)"));
        }
        if tau < self.tau_store {
            return Err(Error::validation(format!(
                "tau = {tau} is below the stored resolution {}",
                self.tau_store
            )));
        }
        if self.sum_fourth <= 0.0 {
            return Err(Error::validation(
                "tensor is identically zero; participation ratio undefined",
            ));
        }
        let cutoff = tau * self.max_abs;
        let support_count = self.entries.iter().filter(|(_, t)| t.abs() > cutoff).count();
        Ok(ExtensivityMeasures {
            support_count,
            participation_ratio: self.norm_sq * self.norm_sq / self.sum_fourth,
        })
    }
}

/// Level statistics of the single-particle spectrum: positive energies,
/// with the smallest 1% of magnitudes excluded (the spectrum is symmetric
/// about zero and the near-zero region follows its own statistics), then a
/// rank-central `fraction` window.
pub fn single_particle_rstats(
    graph: &Graph,
    couplings: &CouplingSet,
    fraction: f64,
) -> Result<RStatistics> {
    let sp = crate::couplings::single_particle_matrix(graph, couplings)?;
    single_particle_rstats_of(&sp, fraction)
}

/// As [`single_particle_rstats`], from an assembled matrix.
pub fn single_particle_rstats_of(
    sp: &SingleParticleMatrix,
    fraction: f64,
) -> Result<RStatistics> {
    let eps = sp.mode_energies()?;
    crate::stats::positive_half_rstats(&eps, 0.01, fraction)
}
