//! Pauli strings with exact phase bookkeeping.
//!
//! A term is stored in the normal form `coeff * X^x Z^z` over bit masks
//! (qubit `q` <-> bit `q`). Acting on a computational basis state `b`:
//!
//! ```text
//! (X^x Z^z) |b> = (-1)^popcount(b & z) |b ^ x>
//! ```
//!
//! Majorana operators enter through the Jordan-Wigner chain
//!
//! ```text
//! g_{2q-1} = Z_1 .. Z_{q-1} X_q / sqrt(2)
//! g_{2q}   = Z_1 .. Z_{q-1} Y_q / sqrt(2)
//! ```
//!
//! (1-based indices, `{g_i, g_j} = delta_ij`). Products of Majorana strings
//! are reduced symbolically: the phase is tracked as an integer power of `i`
//! and the normalization as a count of `1/sqrt(2)` factors, which is folded
//! into the coefficient only once the count is even. Coefficients of
//! physical terms are therefore exact dyadic multiples of the input
//! couplings; no irrational factor is ever rounded.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// `coeff * X^x_mask Z^z_mask`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliTerm {
    pub x_mask: u64,
    pub z_mask: u64,
    pub coeff: Complex64,
}

impl PauliTerm {
    /// Action on a basis state: target state and amplitude.
    #[inline]
    pub fn apply(&self, state: u64) -> (u64, Complex64) {
        let sign = if (state & self.z_mask).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        (state ^ self.x_mask, self.coeff * sign)
    }

    /// Amplitude `<state ^ x_mask| T |state>` without forming the target.
    #[inline]
    pub fn amplitude_from(&self, source_state: u64) -> Complex64 {
        let sign = if (source_state & self.z_mask).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        self.coeff * sign
    }

    /// A term is Hermitian iff `conj(coeff) * (-1)^popcount(x & z) == coeff`.
    pub fn is_hermitian(&self) -> bool {
        let sign = if (self.x_mask & self.z_mask).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        self.coeff.conj() * sign == self.coeff
    }

    /// Even X-weight terms preserve basis-state parity (they commute with
    /// the global Z string).
    pub fn preserves_parity(&self) -> bool {
        self.x_mask.count_ones().is_multiple_of(2)
    }

    /// Dense matrix on the full `2^n_qubits` space; reference path for
    /// small-system verification.
    pub fn to_dense(&self, n_qubits: usize) -> DMatrix<Complex64> {
        let dim = 1usize << n_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for s in 0..dim as u64 {
            let (t, amp) = self.apply(s);
            m[(t as usize, s as usize)] += amp;
        }
        m
    }
}

/// Symbolic product of Jordan-Wigner strings: `i^ipow * (1/sqrt(2))^halves * X^x Z^z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct ProtoString {
    x: u64,
    z: u64,
    ipow: u8,
    halves: u32,
}

impl ProtoString {
    fn identity() -> Self {
        ProtoString {
            x: 0,
            z: 0,
            ipow: 0,
            halves: 0,
        }
    }

    /// Normal-form product: moving `Z^z1` through `X^x2` picks up
    /// `(-1)^popcount(z1 & x2)`.
    fn multiply(self, rhs: ProtoString) -> ProtoString {
        let crossings = (self.z & rhs.x).count_ones();
        ProtoString {
            x: self.x ^ rhs.x,
            z: self.z ^ rhs.z,
            ipow: (self.ipow + rhs.ipow + 2 * (crossings as u8 & 1)) & 3,
            halves: self.halves + rhs.halves,
        }
    }
}

/// Jordan-Wigner masks for Majorana `index` (1-based, `1..=2*n_qubits`):
/// the string is `i^ipow * X^x Z^z / sqrt(2)`.
pub fn majorana_masks(index: usize, n_qubits: usize) -> Result<(u64, u64, u8)> {
    if index == 0 || index > 2 * n_qubits {
        return Err(Error::validation(format!(
            "majorana index {index} out of range 1..={}",
            2 * n_qubits
        )));
    }
    if n_qubits > 63 {
        return Err(Error::capability("more than 63 qubits not representable"));
    }
    let q = index.div_ceil(2); // 1-based qubit
    let chain = (1u64 << (q - 1)) - 1; // Z_1 .. Z_{q-1}
    let xq = 1u64 << (q - 1);
    if index % 2 == 1 {
        // Z-chain then X_q
        Ok((xq, chain, 0))
    } else {
        // Z-chain then Y_q = i X_q Z_q
        Ok((xq, chain | xq, 1))
    }
}

fn majorana_proto(index: usize, n_qubits: usize) -> Result<ProtoString> {
    let (x, z, ipow) = majorana_masks(index, n_qubits)?;
    Ok(ProtoString {
        x,
        z,
        ipow,
        halves: 1,
    })
}

/// Multiply out `g_{i1} g_{i2} ...` symbolically.
pub(crate) fn majorana_product(indices: &[usize], n_qubits: usize) -> Result<ProtoString> {
    let mut acc = ProtoString::identity();
    for &i in indices {
        acc = acc.multiply(majorana_proto(i, n_qubits)?);
    }
    Ok(acc)
}

/// Finalize a proto string carrying an even count of `1/sqrt(2)` factors and
/// an extra explicit power of `i` into an exact-coefficient term scaled by
/// `scale`.
fn finalize(proto: ProtoString, extra_ipow: u8, scale: f64) -> PauliTerm {
    assert!(
        proto.halves.is_multiple_of(2),
        "odd number of 1/sqrt(2) factors cannot be represented exactly"
    );
    let dyadic = scale / f64::powi(2.0, (proto.halves / 2) as i32);
    let coeff = match (proto.ipow + extra_ipow) & 3 {
        0 => Complex64::new(dyadic, 0.0),
        1 => Complex64::new(0.0, dyadic),
        2 => Complex64::new(-dyadic, 0.0),
        _ => Complex64::new(0.0, -dyadic),
    };
    PauliTerm {
        x_mask: proto.x,
        z_mask: proto.z,
        coeff,
    }
}

/// Hopping term `-i * j * g_a g_b` for Majorana indices `a < b` (1-based).
/// The coefficient is exactly `(+-j/2)` or `(+-i*j/2)`.
pub fn edge_term(a: usize, b: usize, j: f64, n_qubits: usize) -> Result<PauliTerm> {
    if a >= b {
        return Err(Error::validation(format!(
            "edge term needs ordered majorana indices, got ({a}, {b})"
        )));
    }
    let proto = majorana_product(&[a, b], n_qubits)?;
    // i^3 = -i
    let term = finalize(proto, 3, j);
    debug_assert!(term.is_hermitian());
    debug_assert!(term.preserves_parity());
    Ok(term)
}

/// The quartic impurity `g_1 g_2 g_3 g_4` with unit prefactor; reduces to
/// `-(1/4) Z_1 Z_2`.
pub fn impurity_term(n_qubits: usize) -> Result<PauliTerm> {
    if n_qubits < 2 {
        return Err(Error::validation(
            "impurity needs at least 4 majorana operators (2 qubits)",
        ));
    }
    let proto = majorana_product(&[1, 2, 3, 4], n_qubits)?;
    let term = finalize(proto, 0, 1.0);
    debug_assert!(term.is_hermitian());
    debug_assert!(term.preserves_parity());
    Ok(term)
}

/// Global parity operator `Z_1 .. Z_n`.
pub fn parity_operator(n_qubits: usize) -> PauliTerm {
    PauliTerm {
        x_mask: 0,
        z_mask: (1u64 << n_qubits) - 1,
        coeff: Complex64::new(1.0, 0.0),
    }
}

/// Dense scaled Majorana `sqrt(2) * g_index` built by explicit Kronecker
/// products of 2x2 blocks. Entries are integers in `{0, +-1, +-i}`, so
/// algebraic identities checked on these matrices hold exactly in floating
/// point. This is a deliberately independent construction (no mask algebra)
/// used to cross-validate the symbolic path.
pub fn dense_majorana_scaled(index: usize, n_qubits: usize) -> Result<DMatrix<Complex64>> {
    if index == 0 || index > 2 * n_qubits {
        return Err(Error::validation(format!(
            "majorana index {index} out of range 1..={}",
            2 * n_qubits
        )));
    }
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let eye = DMatrix::from_diagonal_element(2, 2, one);
    let z = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![one, -one]));
    let x = DMatrix::from_row_slice(2, 2, &[0.0.into(), one, one, 0.0.into()]);
    let y = DMatrix::from_row_slice(2, 2, &[0.0.into(), -i, i, 0.0.into()]);

    let q = index.div_ceil(2);
    let local = if index % 2 == 1 { &x } else { &y };
    let mut m = DMatrix::from_element(1, 1, one);
    // leftmost Kronecker factor is the most significant bit, so walk sites
    // high to low to keep qubit q on bit q-1
    for site in (1..=n_qubits).rev() {
        let factor = if site < q {
            &z
        } else if site == q {
            local
        } else {
            &eye
        };
        m = m.kronecker(factor);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn nearest_neighbor_pair_reduces_to_a_local_z() {
        // -i * j * g1 g2 = (j/2) Z_1, exactly.
        let t = edge_term(1, 2, 0.75, 3).unwrap();
        assert_eq!(t.x_mask, 0);
        assert_eq!(t.z_mask, 0b001);
        assert_eq!(t.coeff, c(0.375, 0.0));
    }

    #[test]
    fn impurity_reduces_to_quarter_zz() {
        let t = impurity_term(4).unwrap();
        assert_eq!(t.x_mask, 0);
        assert_eq!(t.z_mask, 0b0011);
        assert_eq!(t.coeff, c(-0.25, 0.0));
    }

    #[test]
    fn cross_qubit_term_is_hermitian_with_imaginary_coefficient() {
        // g1 g3 spans qubits 1..2 with odd X-Z overlap.
        let t = edge_term(1, 3, 1.0, 2).unwrap();
        assert!(t.is_hermitian());
        assert!(t.preserves_parity());
        assert_eq!(t.coeff.re, 0.0);
        assert_ne!(t.coeff.im, 0.0);
    }

    #[test]
    fn scaled_majoranas_anticommute_exactly() {
        // {sqrt(2) g_i, sqrt(2) g_j} = 2 delta_ij * Id with *bitwise* equality:
        // all entries are small Gaussian integers.
        let n_qubits = 3;
        let dim = 1 << n_qubits;
        let gammas: Vec<_> = (1..=2 * n_qubits)
            .map(|i| dense_majorana_scaled(i, n_qubits).unwrap())
            .collect();
        for (ia, ga) in gammas.iter().enumerate() {
            for (ib, gb) in gammas.iter().enumerate() {
                let anti = ga * gb + gb * ga;
                let expected = if ia == ib { 2.0 } else { 0.0 };
                for r in 0..dim {
                    for s in 0..dim {
                        let want = if r == s { c(expected, 0.0) } else { c(0.0, 0.0) };
                        assert_eq!(anti[(r, s)], want, "pair ({ia}, {ib}) at ({r}, {s})");
                    }
                }
            }
        }
    }

    #[test]
    fn symbolic_terms_match_the_dense_reference_exactly() {
        // -i * j * g_a g_b == (-i*j/2) * (sqrt(2) g_a)(sqrt(2) g_b); with j a
        // dyadic rational both sides are exact, so equality is bitwise.
        let n_qubits = 3;
        let j = 1.25;
        for a in 1..=2 * n_qubits {
            for b in (a + 1)..=2 * n_qubits {
                let term = edge_term(a, b, j, n_qubits).unwrap().to_dense(n_qubits);
                let ga = dense_majorana_scaled(a, n_qubits).unwrap();
                let gb = dense_majorana_scaled(b, n_qubits).unwrap();
                let reference = (ga * gb) * c(0.0, -j / 2.0);
                assert_eq!(term, reference, "pair ({a}, {b})");
            }
        }
    }

    #[test]
    fn impurity_matches_the_dense_reference_exactly() {
        let n_qubits = 3;
        let term = impurity_term(n_qubits).unwrap().to_dense(n_qubits);
        let g: Vec<_> = (1..=4)
            .map(|i| dense_majorana_scaled(i, n_qubits).unwrap())
            .collect();
        let reference = (&g[0] * &g[1] * &g[2] * &g[3]) * c(0.25, 0.0);
        assert_eq!(term, reference);
    }

    #[test]
    fn parity_operator_grades_by_popcount() {
        let p = parity_operator(3);
        for s in 0u64..8 {
            let (t, amp) = p.apply(s);
            assert_eq!(t, s);
            let want = if s.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(amp, c(want, 0.0));
        }
    }

    #[test]
    fn apply_matches_to_dense_entrywise() {
        let t = edge_term(2, 5, -0.5, 3).unwrap();
        let dense = t.to_dense(3);
        for s in 0u64..8 {
            let (target, amp) = t.apply(s);
            for r in 0u64..8 {
                let want = if r == target { amp } else { c(0.0, 0.0) };
                assert_eq!(dense[(r as usize, s as usize)], want);
            }
        }
    }

    proptest! {
        #[test]
        fn random_majorana_pairs_are_hermitian_and_traceless(
            a in 1usize..=8,
            b in 1usize..=8,
            j in -2.0f64..2.0,
        ) {
            prop_assume!(a < b);
            let t = edge_term(a, b, j, 4).unwrap();
            prop_assert!(t.is_hermitian());
            prop_assert!(t.preserves_parity());
            // a nonidentity pauli string is traceless
            let dense = t.to_dense(4);
            let tr: Complex64 = (0..16).map(|d| dense[(d, d)]).sum();
            prop_assert!(tr.norm() < 1e-12);
        }
    }
}
