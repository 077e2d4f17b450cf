use std::fmt;

use crate::error::{Error, Result};

/// Tag for one tensor factor of a composite space. Indices are 1-based to
/// match the usual resonator/qubit numbering of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subsystem {
    Resonator(usize),
    Qubit(usize),
    /// A factor with no network role (single-mode operators, test spaces).
    Mode(usize),
}

impl fmt::Display for Subsystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subsystem::Resonator(m) => write!(f, "a{m}"),
            Subsystem::Qubit(n) => write!(f, "q{n}"),
            Subsystem::Mode(k) => write!(f, "mode{k}"),
        }
    }
}

/// Ordered list of tensor factors. Index 0 is the most significant digit of
/// the flattened basis index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HilbertSpec {
    dims: Vec<usize>,
    labels: Vec<Subsystem>,
}

impl HilbertSpec {
    pub fn new(dims: Vec<usize>, labels: Vec<Subsystem>) -> Result<Self> {
        if dims.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                context: "HilbertSpec labels",
                expected: dims.len(),
                found: labels.len(),
            });
        }
        if dims.is_empty() {
            return Err(Error::param("subsystem_dims", "at least one subsystem"));
        }
        if let Some(&d) = dims.iter().find(|&&d| d == 0) {
            return Err(Error::param("subsystem_dims", format!("dimension {d}")));
        }
        Ok(Self { dims, labels })
    }

    /// A single factor of dimension `dim`.
    pub fn single(dim: usize) -> Self {
        Self {
            dims: vec![dim],
            labels: vec![Subsystem::Mode(0)],
        }
    }

    /// The reset network with `n_qubits` qubits: resonators `1..=2N+2`
    /// (each truncated to `fock_levels`) followed by qubits `1..=N`.
    pub fn network(n_qubits: usize, fock_levels: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::param("n_qubits", "must be at least 1"));
        }
        if fock_levels < 2 {
            return Err(Error::InvalidCutoff(fock_levels));
        }
        let n_res = 2 * n_qubits + 2;
        let mut dims = vec![fock_levels; n_res];
        dims.extend(std::iter::repeat_n(2, n_qubits));
        let labels = (1..=n_res)
            .map(Subsystem::Resonator)
            .chain((1..=n_qubits).map(Subsystem::Qubit))
            .collect();
        Ok(Self { dims, labels })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[Subsystem] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn slot_of(&self, label: Subsystem) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    pub fn qubit_slot(&self, n: usize) -> Result<usize> {
        self.slot_of(Subsystem::Qubit(n))
            .ok_or_else(|| Error::param("qubit", format!("no qubit {n} in this space")))
    }

    pub fn resonator_slot(&self, m: usize) -> Result<usize> {
        self.slot_of(Subsystem::Resonator(m))
            .ok_or_else(|| Error::param("resonator", format!("no resonator {m} in this space")))
    }

    pub fn n_qubits(&self) -> usize {
        self.labels.iter().filter(|l| matches!(l, Subsystem::Qubit(_))).count()
    }

    pub fn n_resonators(&self) -> usize {
        self.labels
            .iter()
            .filter(|l| matches!(l, Subsystem::Resonator(_)))
            .count()
    }

    /// Sub-space made of the given slots, in the given order.
    pub fn subspace(&self, slots: &[usize]) -> Result<Self> {
        for &s in slots {
            self.check_slot(s)?;
        }
        Ok(Self {
            dims: slots.iter().map(|&s| self.dims[s]).collect(),
            labels: slots.iter().map(|&s| self.labels[s]).collect(),
        })
    }

    /// Concatenation `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Self { dims, labels }
    }

    pub(crate) fn check_slot(&self, slot: usize) -> Result<()> {
        if slot >= self.dims.len() {
            Err(Error::InvalidSlot {
                slot,
                len: self.dims.len(),
            })
        } else {
            Ok(())
        }
    }

    /// Split a flat basis index into per-slot digits.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (k, &d) in self.dims.iter().enumerate().rev() {
            out[k] = index % d;
            index /= d;
        }
        out
    }

    /// Inverse of [`HilbertSpec::digits`].
    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.dims).fold(0, |acc, (&x, &d)| acc * d + x)
    }
}
