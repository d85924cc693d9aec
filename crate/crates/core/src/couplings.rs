//! Gaussian edge couplings and the single-particle matrix.
//!
//! Couplings are i.i.d. normal with mean zero and variance
//! `sigma^2 = (n - 1) / (2 n_E)`, which keeps the total many-body bandwidth
//! comparable across graph sizes. They are keyed by edge index, so the same
//! coupling vector can be applied to a rewired graph and to its unrewired
//! base (the edge at a given index carries the same coupling in both).
//!
//! The quadratic Hamiltonian `H = i * sum_{u<v} J_uv g_u g_v` over Majorana
//! operators is encoded single-particle-side as the real antisymmetric matrix
//! `A` with `A[u][v] = J_uv` for `u < v`; the Hermitian form is `i A`, whose
//! spectrum is symmetric about zero. Mode energies are recovered from the
//! real symmetric matrix `-A^2 = A^T A`, avoiding complex arithmetic in the
//! large dense solves.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// One disorder realization: couplings in graph edge-index order.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingSet {
    values: Vec<f64>,
    /// Standard deviation the values were drawn with; zero for externally
    /// supplied value lists.
    pub sigma: f64,
    /// Seed the values were drawn from; zero for externally supplied lists.
    pub seed: u64,
}

/// Sampling width for a graph with `n_vertices` and `n_edges`.
pub fn coupling_sigma(n_vertices: usize, n_edges: usize) -> f64 {
    ((n_vertices as f64 - 1.0) / (2.0 * n_edges as f64)).sqrt()
}

/// Draw couplings for every edge of `graph`, keyed by edge index.
pub fn sample_couplings(graph: &Graph, seed: u64) -> Result<CouplingSet> {
    if graph.n_edges() == 0 {
        return Err(Error::validation("graph has no edges to couple"));
    }
    if graph.n_vertices() < 2 {
        return Err(Error::validation("need at least two vertices"));
    }
    let sigma = coupling_sigma(graph.n_vertices(), graph.n_edges());
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| Error::validation(format!("invalid coupling width: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..graph.n_edges())
        .map(|_| normal.sample(&mut rng))
        .collect();
    Ok(CouplingSet {
        values,
        sigma,
        seed,
    })
}

impl CouplingSet {
    /// Wrap an externally supplied coupling vector (tests, file input).
    pub fn from_values(values: Vec<f64>) -> Self {
        CouplingSet {
            values,
            sigma: 0.0,
            seed: 0,
        }
    }

    /// Wrap values together with the sampling metadata they came with.
    pub fn with_metadata(values: Vec<f64>, sigma: f64, seed: u64) -> Self {
        CouplingSet {
            values,
            sigma,
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, edge: usize) -> f64 {
        self.values[edge]
    }
}

/// Real antisymmetric single-particle matrix; the physical Hermitian
/// operator is `i A`.
#[derive(Clone, Debug)]
pub struct SingleParticleMatrix {
    a: DMatrix<f64>,
}

/// Assemble `A` from a graph and its couplings (matched by edge index).
pub fn single_particle_matrix(graph: &Graph, couplings: &CouplingSet) -> Result<SingleParticleMatrix> {
    if couplings.len() != graph.n_edges() {
        return Err(Error::validation(format!(
            "coupling count {} does not match edge count {}",
            couplings.len(),
            graph.n_edges()
        )));
    }
    let n = graph.n_vertices();
    let mut a = DMatrix::zeros(n, n);
    for (e, &(u, v)) in graph.edges().iter().enumerate() {
        let j = couplings.value(e);
        a[(u as usize, v as usize)] = j;
        a[(v as usize, u as usize)] = -j;
    }
    Ok(SingleParticleMatrix { a })
}

impl SingleParticleMatrix {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn antisymmetric(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Dense Hermitian form `i A`.
    pub fn hermitian(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |r, c| Complex64::new(0.0, self.a[(r, c)]))
    }

    /// Nonnegative mode energies, ascending: the positive half of the
    /// spectrum of `i A`, computed from the real symmetric matrix `-A^2`.
    pub fn mode_energies(&self) -> Result<Vec<f64>> {
        let n = self.dim();
        if !n.is_multiple_of(2) {
            return Err(Error::validation(format!(
                "single-particle dimension {n} must be even"
            )));
        }
        let fa = faer_from_nalgebra(&self.a);
        // -A^2 = A^T A is symmetric positive semidefinite with doubly
        // degenerate eigenvalues eps_k^2.
        let m = fa.transpose() * &fa;
        let sq = crate::linalg::symmetric_eigenvalues(&m)?;
        // Take one representative per +- pair: the even ranks of the
        // ascending list of eps^2 values.
        let mut eps: Vec<f64> = sq
            .iter()
            .step_by(2)
            .map(|&x| x.max(0.0).sqrt())
            .collect();
        eps.sort_by(|a, b| a.partial_cmp(b).expect("energies are finite"));
        Ok(eps)
    }

    /// Full spectrum of `i A`, ascending: `{-eps}` mirrored onto `{+eps}`,
    /// exactly symmetric by construction.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let eps = self.mode_energies()?;
        let mut all = Vec::with_capacity(2 * eps.len());
        all.extend(eps.iter().rev().map(|&e| -e));
        all.extend(eps.iter().copied());
        Ok(all)
    }
}

/// Copy a nalgebra matrix into the dense backend's layout.
pub(crate) fn faer_from_nalgebra(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{base_circulant, GraphSpec};
    use approx::assert_abs_diff_eq;

    fn ring(n: usize) -> Graph {
        base_circulant(&GraphSpec {
            n_vertices: n,
            k: 1,
            p: 0.0,
            seed: 0,
        })
        .unwrap()
    }

    #[test]
    fn sigma_follows_the_scaling_rule() {
        // n = 10, k = 2: n_E = 20, sigma^2 = 9/40
        assert_abs_diff_eq!(coupling_sigma(10, 20).powi(2), 9.0 / 40.0, epsilon = 1e-15);
    }

    #[test]
    fn sampling_is_deterministic_and_seed_sensitive() {
        let g = ring(12);
        let a = sample_couplings(&g, 5).unwrap();
        let b = sample_couplings(&g, 5).unwrap();
        let c = sample_couplings(&g, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values(), c.values());
        assert_eq!(a.len(), 12);
    }

    #[test]
    fn sample_variance_is_consistent_with_sigma() {
        let g = base_circulant(&GraphSpec {
            n_vertices: 500,
            k: 2,
            p: 0.0,
            seed: 0,
        })
        .unwrap();
        let c = sample_couplings(&g, 123).unwrap();
        let n = c.len() as f64;
        let mean: f64 = c.values().iter().sum::<f64>() / n;
        let var: f64 = c.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // chi-square concentration: relative error ~ sqrt(2/n) ~ 4.5% here
        let rel = (var / c.sigma.powi(2) - 1.0).abs();
        assert!(rel < 0.2, "sample variance off by {rel}");
    }

    #[test]
    fn single_particle_matrix_is_antisymmetric_with_edge_couplings_in_place() {
        let g = ring(6);
        let c = sample_couplings(&g, 9).unwrap();
        let sp = single_particle_matrix(&g, &c).unwrap();
        let a = sp.antisymmetric();
        for r in 0..6 {
            for s in 0..6 {
                assert_eq!(a[(r, s)], -a[(s, r)]);
            }
        }
        for (e, &(u, v)) in g.edges().iter().enumerate() {
            assert_eq!(a[(u as usize, v as usize)], c.value(e));
        }
        assert!(single_particle_matrix(&ring(8), &c).is_err());
    }

    #[test]
    fn uniform_ring_mode_energies_are_known() {
        // Ring of n sites with all couplings 1: eigenvalues of i A are
        // 2 sin(2 pi m / n) over modes m, so the positive energies for n = 4
        // are {sqrt(2), sqrt(2)} (doubly degenerate: -A^2 = 2 I).
        let g = ring(4);
        let c = CouplingSet::from_values(vec![1.0; 4]);
        let sp = single_particle_matrix(&g, &c).unwrap();
        let eps = sp.mode_energies().unwrap();
        assert_eq!(eps.len(), 2);
        assert_abs_diff_eq!(eps[0], 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(eps[1], 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn mode_energies_match_the_hermitian_eigensolve() {
        let g = base_circulant(&GraphSpec {
            n_vertices: 16,
            k: 2,
            p: 0.0,
            seed: 0,
        })
        .unwrap();
        let c = sample_couplings(&g, 77).unwrap();
        let sp = single_particle_matrix(&g, &c).unwrap();
        let eps = sp.mode_energies().unwrap();

        // independent route: dense complex Hermitian eigensolve of i A
        let h = sp.hermitian();
        let fa = faer::Mat::from_fn(16, 16, |r, s| h[(r, s)]);
        let all = crate::linalg::hermitian_eigenvalues(&fa).unwrap();
        for (k, &e) in eps.iter().enumerate() {
            assert_abs_diff_eq!(all[16 / 2 + k], e, epsilon = 1e-10);
            assert_abs_diff_eq!(all[16 / 2 - 1 - k], -e, epsilon = 1e-10);
        }

        let full = sp.eigenvalues().unwrap();
        assert_eq!(full.len(), 16);
        for (k, &e) in full.iter().enumerate() {
            // exact mirror symmetry by construction
            assert_eq!(e, -full[16 - 1 - k]);
        }
    }
}
