//! Parity-sector basis bookkeeping.
//!
//! The Hamiltonians built here commute with the global Z string, so the full
//! `2^n` space splits into even and odd subsectors of basis-state popcount,
//! each of dimension `2^(n-1)`. Sector states are kept in ascending integer
//! order; a full-width lookup table maps a computational basis state back to
//! its sector row.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    #[default]
    Even,
    Odd,
}

impl Parity {
    pub fn matches(self, state: u64) -> bool {
        let even = state.count_ones().is_multiple_of(2);
        match self {
            Parity::Even => even,
            Parity::Odd => !even,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Parity::Even => write!(f, "even"),
            Parity::Odd => write!(f, "odd"),
        }
    }
}

impl std::str::FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "even" => Ok(Parity::Even),
            "odd" => Ok(Parity::Odd),
            other => Err(Error::parse(format!(
                "unknown parity sector '{other}' (expected 'even' or 'odd')"
            ))),
        }
    }
}

/// Index table appetite doubles per qubit; beyond this the table alone would
/// pass a gigabyte and dense enumeration stops being the right tool.
const MAX_QUBITS: usize = 28;

pub struct SectorBasis {
    n_qubits: usize,
    parity: Parity,
    states: Vec<u64>,
    index: Vec<u32>,
}

impl SectorBasis {
    pub fn new(n_qubits: usize, parity: Parity) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::validation("need at least one qubit"));
        }
        if n_qubits > MAX_QUBITS {
            return Err(Error::capability(format!(
                "sector basis for {n_qubits} qubits exceeds the {MAX_QUBITS}-qubit enumeration cap"
            )));
        }
        let full = 1usize << n_qubits;
        let mut states = Vec::with_capacity(full / 2);
        let mut index = vec![u32::MAX; full];
        for s in 0..full as u64 {
            if parity.matches(s) {
                index[s as usize] = states.len() as u32;
                states.push(s);
            }
        }
        Ok(SectorBasis {
            n_qubits,
            parity,
            states,
            index,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn dimension(&self) -> usize {
        self.states.len()
    }

    /// Basis state of sector row `row`.
    pub fn state(&self, row: usize) -> u64 {
        self.states[row]
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    /// Sector row of a basis state, if it belongs to this sector.
    pub fn index_of(&self, state: u64) -> Option<usize> {
        let raw = *self.index.get(state as usize)?;
        (raw != u32::MAX).then_some(raw as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions_halve_the_space() {
        for n in 1..=10 {
            let even = SectorBasis::new(n, Parity::Even).unwrap();
            let odd = SectorBasis::new(n, Parity::Odd).unwrap();
            assert_eq!(even.dimension(), 1 << (n - 1));
            assert_eq!(odd.dimension(), 1 << (n - 1));
        }
    }

    #[test]
    fn states_are_ascending_and_indexed_consistently() {
        let basis = SectorBasis::new(6, Parity::Odd).unwrap();
        for row in 0..basis.dimension() {
            let s = basis.state(row);
            assert_eq!(s.count_ones() % 2, 1);
            assert_eq!(basis.index_of(s), Some(row));
            if row > 0 {
                assert!(basis.state(row - 1) < s);
            }
        }
        // even states do not resolve in the odd sector
        assert_eq!(basis.index_of(0), None);
        assert_eq!(basis.index_of(0b11), None);
    }

    #[test]
    fn caps_and_validation() {
        assert!(SectorBasis::new(0, Parity::Even).is_err());
        assert!(matches!(
            SectorBasis::new(40, Parity::Even),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn parity_parses_and_formats() {
        assert_eq!("even".parse::<Parity>().unwrap(), Parity::Even);
        assert_eq!("odd".parse::<Parity>().unwrap(), Parity::Odd);
        assert!("both".parse::<Parity>().is_err());
        assert_eq!(Parity::Even.to_string(), "even");
    }
}
