//! Many-body Hamiltonians: Majorana bilinears and the quartic impurity as
//! Pauli strings, restricted to one parity sector, assembled sparsely or
//! applied matrix-free, plus the exact free-fermion oracle.

pub mod pauli;
pub mod sector;

pub use pauli::{edge_term, impurity_term, PauliTerm};
pub use sector::{Parity, SectorBasis};

use num_complex::Complex64;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::couplings::{CouplingSet, SingleParticleMatrix};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{CsrMatrix, HermitianOp};

/// Explicit sparse storage is the right tool up to this many Majorana
/// operators (2^16 sector states); larger systems go through
/// [`TermOperator`].
pub const ASSEMBLE_MAX_MAJORANAS: usize = 34;

/// Free-fermion enumeration cap: 2^(N/2) sign patterns.
pub const ORACLE_MAX_MAJORANAS: usize = 26;

fn validate_system(graph: &Graph, couplings: &CouplingSet, impurity: bool) -> Result<usize> {
    let n = graph.n_vertices();
    if !n.is_multiple_of(2) {
        return Err(Error::validation(format!(
            "need an even number of majorana operators, got {n}"
        )));
    }
    if impurity && n < 4 {
        return Err(Error::validation(format!(
            "the quartic impurity needs at least 4 majorana operators, got {n}"
        )));
    }
    if couplings.len() != graph.n_edges() {
        return Err(Error::validation(format!(
            "{} couplings for {} edges",
            couplings.len(),
            graph.n_edges()
        )));
    }
    Ok(n / 2)
}

/// Pauli terms of the full Hamiltonian: one hopping term per edge, plus the
/// quartic impurity when enabled. Vertex `v` of the graph carries Majorana
/// operator `v + 1` (1-based Jordan-Wigner ordering).
pub fn hamiltonian_terms(
    graph: &Graph,
    couplings: &CouplingSet,
    impurity: bool,
) -> Result<Vec<PauliTerm>> {
    let n_qubits = validate_system(graph, couplings, impurity)?;
    let mut terms = Vec::with_capacity(graph.n_edges() + usize::from(impurity));
    for (&(u, v), &j) in graph.edges().iter().zip(couplings.values()) {
        terms.push(edge_term(u as usize + 1, v as usize + 1, j, n_qubits)?);
    }
    if impurity {
        terms.push(impurity_term(n_qubits)?);
    }
    debug_assert!(terms.iter().all(|t| t.is_hermitian() && t.preserves_parity()));
    Ok(terms)
}

/// A parity-sector Hamiltonian in compressed sparse row form.
pub struct SparseHamiltonian {
    parity: Parity,
    n_majoranas: usize,
    matrix: CsrMatrix,
}

impl SparseHamiltonian {
    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn n_majoranas(&self) -> usize {
        self.n_majoranas
    }

    pub fn dimension(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CsrMatrix {
        self.matrix
    }
}

impl HermitianOp for SparseHamiltonian {
    fn dim(&self) -> usize {
        self.matrix.dim()
    }

    fn apply_to(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.matrix.apply_to(x, y);
    }
}

/// Assemble the sector-restricted Hamiltonian explicitly.
///
/// Row `r` holds `<state_r| H |state_c>` for every column `c` reachable by a
/// term's X mask; contributions landing on the same column are merged in
/// term order, and merged-to-zero entries are kept, so the sparsity pattern
/// depends only on the graph and the defect `max |H - H^dagger|` is exactly
/// zero (each (r, c)/(c, r) pair sums elementwise-conjugate sequences).
pub fn assemble_hamiltonian(
    graph: &Graph,
    couplings: &CouplingSet,
    impurity: bool,
    parity: Parity,
) -> Result<SparseHamiltonian> {
    let n = graph.n_vertices();
    if n > ASSEMBLE_MAX_MAJORANAS {
        return Err(Error::capability(format!(
            "explicit assembly is capped at {ASSEMBLE_MAX_MAJORANAS} majorana operators \
             (requested {n}); use the matrix-free TermOperator instead"
        )));
    }
    let terms = hamiltonian_terms(graph, couplings, impurity)?;
    let basis = SectorBasis::new(n / 2, parity)?;
    let dim = basis.dimension();
    let rows: Vec<Vec<(u32, Complex64)>> = crate::par_iter!(0..dim)
        .map(|r| {
            let state = basis.state(r);
            let mut entries: Vec<(u32, Complex64)> = Vec::with_capacity(terms.len());
            for t in &terms {
                let source = state ^ t.x_mask;
                let c = basis
                    .index_of(source)
                    .expect("parity-preserving terms stay inside the sector");
                entries.push((c as u32, t.amplitude_from(source)));
            }
            // stable sort: equal columns stay in term order, so the merged
            // sums are reduction-order deterministic
            entries.sort_by_key(|&(c, _)| c);
            let mut merged: Vec<(u32, Complex64)> = Vec::with_capacity(entries.len());
            for (c, amp) in entries {
                match merged.last_mut() {
                    Some((lc, acc)) if *lc == c => *acc += amp,
                    _ => merged.push((c, amp)),
                }
            }
            merged
        })
        .collect();
    let matrix = CsrMatrix::from_rows(dim, rows)?;
    Ok(SparseHamiltonian {
        parity,
        n_majoranas: n,
        matrix,
    })
}

/// Matrix-free application of the same Hamiltonian: no stored matrix, one
/// term scan per output row. This is the path past the explicit-assembly
/// cap; memory is the sector lookup table alone.
pub struct TermOperator {
    terms: Vec<PauliTerm>,
    basis: SectorBasis,
}

impl TermOperator {
    pub fn new(
        graph: &Graph,
        couplings: &CouplingSet,
        impurity: bool,
        parity: Parity,
    ) -> Result<Self> {
        let terms = hamiltonian_terms(graph, couplings, impurity)?;
        let basis = SectorBasis::new(graph.n_vertices() / 2, parity)?;
        Ok(TermOperator { terms, basis })
    }

    pub fn parity(&self) -> Parity {
        self.basis.parity()
    }
}

impl HermitianOp for TermOperator {
    fn dim(&self) -> usize {
        self.basis.dimension()
    }

    fn apply_to(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.basis.dimension());
        assert_eq!(y.len(), self.basis.dimension());
        let chunk = 1024.min(y.len()).max(1);
        crate::par_chunks_mut!(&mut y[..], chunk)
            .enumerate()
            .for_each(|(ci, block)| {
                let base = ci * chunk;
                for (off, out) in block.iter_mut().enumerate() {
                    let state = self.basis.state(base + off);
                    let mut acc = Complex64::default();
                    for t in &self.terms {
                        let source = state ^ t.x_mask;
                        let c = self
                            .basis
                            .index_of(source)
                            .expect("parity-preserving terms stay inside the sector");
                        acc += t.amplitude_from(source) * x[c];
                    }
                    *out = acc;
                }
            });
    }
}

/// Exact free-fermion spectrum of the quadratic Hamiltonian in one parity
/// sector: all sums `sum_k sigma_k eps_k / 2` over sign patterns whose
/// parity `det(O) * prod_k sigma_k` matches the requested sector. The
/// canonical factorization supplies both the mode energies and the
/// reference parity `det(O)`.
pub fn quadratic_spectrum_oracle(
    sp: &SingleParticleMatrix,
    parity: Parity,
) -> Result<Vec<f64>> {
    let n = sp.antisymmetric().nrows();
    if n > ORACLE_MAX_MAJORANAS {
        return Err(Error::capability(format!(
            "free-fermion enumeration is capped at {ORACLE_MAX_MAJORANAS} majorana operators \
             (requested {n})"
        )));
    }
    let f = crate::dyson::bogoliubov(sp.antisymmetric())?;
    let reference = f.determinant_sign()?;
    let m = f.n_modes();
    let want = parity.sign();
    let mut levels = Vec::with_capacity(1 << (m - 1));
    for mask in 0u64..(1 << m) {
        // bit k set: sigma_k = +1
        let minus_count = m - mask.count_ones() as usize;
        let state_parity = if minus_count.is_multiple_of(2) {
            reference
        } else {
            -reference
        };
        if state_parity != want {
            continue;
        }
        let e: f64 = (0..m)
            .map(|k| {
                let sign = if mask & (1 << k) != 0 { 0.5 } else { -0.5 };
                sign * f.eps[k]
            })
            .sum();
        levels.push(e);
    }
    levels.sort_by(|a, b| a.partial_cmp(b).expect("energies are finite"));
    Ok(levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::{sample_couplings, single_particle_matrix};
    use crate::eigensolve::dense_eigh;
    use crate::graph::{base_circulant, watts_strogatz, Graph, GraphSpec};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line_graph(n_vertices: usize) -> Graph {
        let edges = (0..n_vertices as u32 - 1).map(|i| (i, i + 1)).collect();
        Graph::from_edges(n_vertices, edges).unwrap()
    }

    #[test]
    fn single_edge_even_sector_is_half_z() {
        // N=4, one edge (1,2), J=1: H = (1/2) Z_1 on the 2-qubit even
        // sector {|00>, |11>} -> eigenvalues {+1/2, -1/2}
        let g = Graph::from_edges(4, vec![(0, 1)]).unwrap();
        let c = CouplingSet::from_values(vec![1.0]);
        let h = assemble_hamiltonian(&g, &c, false, Parity::Even).unwrap();
        assert_eq!(h.dimension(), 2);
        let spec = dense_eigh(h.matrix()).unwrap();
        assert_abs_diff_eq!(spec.eigenvalues[0], -0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(spec.eigenvalues[1], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn impurity_alone_splits_the_sector_in_half() {
        let g = Graph::from_edges(12, vec![(0, 1), (4, 5)]).unwrap();
        let c = CouplingSet::from_values(vec![0.0, 0.0]);
        for parity in [Parity::Even, Parity::Odd] {
            let h = assemble_hamiltonian(&g, &c, true, parity).unwrap();
            let d = h.dimension();
            let spec = dense_eigh(h.matrix()).unwrap();
            let lo = spec.eigenvalues.iter().filter(|&&e| e < 0.0).count();
            assert_eq!(lo, d / 2);
            for &e in &spec.eigenvalues {
                assert_abs_diff_eq!(e.abs(), 0.25, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn hermiticity_defect_is_exactly_zero() {
        let spec = GraphSpec {
            n_vertices: 16,
            k: 2,
            p: 0.5,
            seed: 3,
        };
        let g = watts_strogatz(&spec).unwrap();
        let c = sample_couplings(&g, 11).unwrap();
        let h = assemble_hamiltonian(&g, &c, true, Parity::Even).unwrap();
        assert_eq!(h.matrix().hermiticity_defect(), 0.0);
    }

    #[test]
    fn all_terms_preserve_parity_and_hermiticity() {
        let spec = GraphSpec {
            n_vertices: 12,
            k: 2,
            p: 1.0,
            seed: 9,
        };
        let g = watts_strogatz(&spec).unwrap();
        let c = sample_couplings(&g, 4).unwrap();
        for t in hamiltonian_terms(&g, &c, true).unwrap() {
            assert!(t.is_hermitian());
            assert!(t.preserves_parity());
        }
    }

    #[test]
    fn quadratic_form_is_real_for_random_vectors() {
        let spec = GraphSpec {
            n_vertices: 12,
            k: 2,
            p: 0.3,
            seed: 21,
        };
        let g = watts_strogatz(&spec).unwrap();
        let c = sample_couplings(&g, 5).unwrap();
        let h = assemble_hamiltonian(&g, &c, true, Parity::Even).unwrap();
        let d = h.dimension();
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for _ in 0..5 {
            let x: Vec<Complex64> = (0..d)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let mut y = vec![Complex64::default(); d];
            h.apply_to(&x, &mut y);
            let form: Complex64 = x.iter().zip(&y).map(|(a, b)| a.conj() * b).sum();
            let norm_sq: f64 = x.iter().map(|z| z.norm_sqr()).sum();
            assert!(form.im.abs() < 1e-12 * norm_sq, "form {form}");
        }
    }

    #[test]
    fn term_operator_matches_the_assembled_matrix() {
        let spec = GraphSpec {
            n_vertices: 14,
            k: 2,
            p: 0.7,
            seed: 30,
        };
        let g = watts_strogatz(&spec).unwrap();
        let c = sample_couplings(&g, 31).unwrap();
        let h = assemble_hamiltonian(&g, &c, true, Parity::Odd).unwrap();
        let op = TermOperator::new(&g, &c, true, Parity::Odd).unwrap();
        assert_eq!(op.dim(), h.dimension());
        let d = h.dimension();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x: Vec<Complex64> = (0..d)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let mut ya = vec![Complex64::default(); d];
        let mut yb = vec![Complex64::default(); d];
        h.apply_to(&x, &mut ya);
        op.apply_to(&x, &mut yb);
        for (a, b) in ya.iter().zip(&yb) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-13);
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-13);
        }
    }

    #[test]
    fn free_spectrum_matches_the_assembled_quadratic_hamiltonian() {
        // 20 random instances across sizes and sectors, no impurity
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..20u64 {
            let n = [8, 12, 16][trial as usize % 3];
            let spec = GraphSpec {
                n_vertices: n,
                k: 2,
                p: rng.random::<f64>(),
                seed: 500 + trial,
            };
            let g = watts_strogatz(&spec).unwrap();
            let c = sample_couplings(&g, 600 + trial).unwrap();
            let sp = single_particle_matrix(&g, &c).unwrap();
            let parity = if trial % 2 == 0 {
                Parity::Even
            } else {
                Parity::Odd
            };
            let want = quadratic_spectrum_oracle(&sp, parity).unwrap();
            let h = assemble_hamiltonian(&g, &c, false, parity).unwrap();
            let got = dense_eigh(h.matrix()).unwrap().eigenvalues;
            assert_eq!(want.len(), got.len());
            for (w, g) in want.iter().zip(&got) {
                assert_abs_diff_eq!(w, g, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn two_majorana_oracle_splits_by_sector() {
        let g = Graph::from_edges(2, vec![(0, 1)]).unwrap();
        let c = CouplingSet::from_values(vec![1.0]);
        let sp = single_particle_matrix(&g, &c).unwrap();
        let even = quadratic_spectrum_oracle(&sp, Parity::Even).unwrap();
        let odd = quadratic_spectrum_oracle(&sp, Parity::Odd).unwrap();
        assert_eq!(even.len(), 1);
        assert_eq!(odd.len(), 1);
        assert_abs_diff_eq!(even[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(odd[0], -0.5, epsilon = 1e-12);
    }

    #[test]
    fn zero_couplings_give_a_flat_zero_spectrum() {
        let g = line_graph(8);
        let c = CouplingSet::from_values(vec![0.0; 7]);
        let sp = single_particle_matrix(&g, &c).unwrap();
        for parity in [Parity::Even, Parity::Odd] {
            let levels = quadratic_spectrum_oracle(&sp, parity).unwrap();
            assert_eq!(levels.len(), 8);
            for &e in &levels {
                assert_abs_diff_eq!(e, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sparsity_stays_within_the_term_budget_at_the_assembly_cap() {
        // largest explicitly stored system: 68 edge terms + impurity = 69
        let spec = GraphSpec {
            n_vertices: 34,
            k: 2,
            p: 0.9,
            seed: 44,
        };
        let g = watts_strogatz(&spec).unwrap();
        assert_eq!(g.n_edges(), 68);
        let c = sample_couplings(&g, 45).unwrap();
        let h = assemble_hamiltonian(&g, &c, true, Parity::Even).unwrap();
        assert_eq!(h.dimension(), 1 << 16);
        for r in 0..h.dimension() {
            let (cols, _) = h.matrix().row(r);
            assert!(cols.len() <= 69, "row {r} has {} entries", cols.len());
        }
    }

    #[test]
    fn caps_and_validation_errors() {
        let g = line_graph(3);
        let c = CouplingSet::from_values(vec![1.0, 1.0]);
        assert!(hamiltonian_terms(&g, &c, false).is_err()); // odd N

        let g = Graph::from_edges(2, vec![(0, 1)]).unwrap();
        let c = CouplingSet::from_values(vec![1.0]);
        assert!(hamiltonian_terms(&g, &c, true).is_err()); // impurity needs N >= 4

        let g = line_graph(36);
        let c = CouplingSet::from_values(vec![1.0; 35]);
        assert!(matches!(
            assemble_hamiltonian(&g, &c, false, Parity::Even),
            Err(Error::Capability(_))
        ));

        let g = line_graph(28);
        let c = CouplingSet::from_values(vec![1.0; 27]);
        let sp = single_particle_matrix(&g, &c).unwrap();
        assert!(matches!(
            quadratic_spectrum_oracle(&sp, Parity::Even),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn impurity_commutes_with_distant_edge_terms() {
        // explicit matrices at N=12 (6 qubits): the impurity touches
        // qubits 1..2 only, edges among majoranas 5..12 touch 3..6
        let n_qubits = 6;
        let imp = impurity_term(n_qubits).unwrap().to_dense(n_qubits);
        for (a, b) in [(5usize, 6usize), (5, 9), (7, 12), (9, 10), (11, 12)] {
            let t = edge_term(a, b, 1.0, n_qubits).unwrap().to_dense(n_qubits);
            let comm = &imp * &t - &t * &imp;
            let worst = comm.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
            assert_eq!(worst, 0.0, "edge ({a}, {b})");
        }
    }

    #[test]
    fn assembly_is_deterministic() {
        let spec = GraphSpec {
            n_vertices: 12,
            k: 2,
            p: 0.4,
            seed: 50,
        };
        let g = watts_strogatz(&spec).unwrap();
        let c = sample_couplings(&g, 51).unwrap();
        let h1 = assemble_hamiltonian(&g, &c, true, Parity::Even).unwrap();
        let h2 = assemble_hamiltonian(&g, &c, true, Parity::Even).unwrap();
        assert_eq!(h1.dimension(), h2.dimension());
        for r in 0..h1.dimension() {
            let (c1, v1) = h1.matrix().row(r);
            let (c2, v2) = h2.matrix().row(r);
            assert_eq!(c1, c2);
            assert_eq!(v1, v2);
        }
    }

    #[test]
    fn ring_spectrum_with_impurity_from_reference_matrix() {
        // independent dense reference: build H from to_dense sums on the
        // full space, project onto the sector rows, compare eigenvalues
        let g = base_circulant(&GraphSpec {
            n_vertices: 8,
            k: 1,
            p: 0.0,
            seed: 0,
        })
        .unwrap();
        let c = sample_couplings(&g, 7).unwrap();
        let n_qubits = 4;
        let terms = hamiltonian_terms(&g, &c, true).unwrap();
        let mut full = nalgebra::DMatrix::<Complex64>::zeros(16, 16);
        for t in &terms {
            full += t.to_dense(n_qubits);
        }
        let basis = SectorBasis::new(n_qubits, Parity::Even).unwrap();
        let d = basis.dimension();
        let projected = faer::Mat::from_fn(d, d, |r, c_| {
            full[(basis.state(r) as usize, basis.state(c_) as usize)]
        });
        let want = crate::linalg::hermitian_eigenvalues(&projected).unwrap();
        let h = assemble_hamiltonian(&g, &c, true, Parity::Even).unwrap();
        let got = dense_eigh(h.matrix()).unwrap().eigenvalues;
        for (w, g) in want.iter().zip(&got) {
            assert_abs_diff_eq!(w, g, epsilon = 1e-12);
        }
    }
}
