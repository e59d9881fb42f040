//! Truncated Hilbert spaces and the fixed basis ordering.
//!
//! Composite basis index: `(n_a * (cutoff_b + 1) + n_b) * atom_dim + level`,
//! i.e. mode A is the slowest index, then mode B, then the atom.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{invalid, Result};

/// Atomic level labels used by the two beam schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    /// Λ-scheme ground level coupled to mode A.
    One,
    /// Λ-scheme ground level coupled to mode B.
    Two,
    /// Λ-scheme excited level.
    Three,
    OnePrime,
    TwoPrime,
    ThreePrime,
    /// Extra level of the `h'` correction.
    E,
    OneAux,
    TwoAux,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Level::One => "1",
            Level::Two => "2",
            Level::Three => "3",
            Level::OnePrime => "1'",
            Level::TwoPrime => "2'",
            Level::ThreePrime => "3'",
            Level::E => "e",
            Level::OneAux => "1aux",
            Level::TwoAux => "2aux",
        };
        f.write_str(s)
    }
}

/// Two truncated cavity modes, optionally tensored with one atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HilbertSpec {
    cutoff_a: usize,
    cutoff_b: usize,
    atom_levels: Vec<Level>,
}

impl HilbertSpec {
    pub fn new(cutoff_a: usize, cutoff_b: usize, atom_levels: Vec<Level>) -> Result<Self> {
        if cutoff_a < 1 || cutoff_b < 1 {
            return Err(invalid("mode cutoffs must be at least 1"));
        }
        for (i, l) in atom_levels.iter().enumerate() {
            if atom_levels[..i].contains(l) {
                return Err(invalid("duplicate atomic level label"));
            }
        }
        Ok(Self { cutoff_a, cutoff_b, atom_levels })
    }

    /// Field-only space of the two modes.
    pub fn field(cutoff_a: usize, cutoff_b: usize) -> Result<Self> {
        Self::new(cutoff_a, cutoff_b, Vec::new())
    }

    pub fn cutoff_a(&self) -> usize {
        self.cutoff_a
    }

    pub fn cutoff_b(&self) -> usize {
        self.cutoff_b
    }

    pub fn atom_levels(&self) -> &[Level] {
        &self.atom_levels
    }

    pub fn has_atom(&self) -> bool {
        !self.atom_levels.is_empty()
    }

    pub fn dim_a(&self) -> usize {
        self.cutoff_a + 1
    }

    pub fn dim_b(&self) -> usize {
        self.cutoff_b + 1
    }

    pub fn atom_dim(&self) -> usize {
        self.atom_levels.len().max(1)
    }

    pub fn field_dim(&self) -> usize {
        self.dim_a() * self.dim_b()
    }

    pub fn dim(&self) -> usize {
        self.field_dim() * self.atom_dim()
    }

    /// The same cutoffs without the atom.
    pub fn field_part(&self) -> Self {
        Self { cutoff_a: self.cutoff_a, cutoff_b: self.cutoff_b, atom_levels: Vec::new() }
    }

    pub fn slot_dim(&self, slot: Slot) -> usize {
        match slot {
            Slot::ModeA => self.dim_a(),
            Slot::ModeB => self.dim_b(),
            Slot::Atom => self.atom_dim(),
        }
    }

    pub fn level_index(&self, level: Level) -> Option<usize> {
        self.atom_levels.iter().position(|&l| l == level)
    }

    pub fn index(&self, n_a: usize, n_b: usize, level: usize) -> usize {
        (n_a * self.dim_b() + n_b) * self.atom_dim() + level
    }

    pub fn field_index(&self, n_a: usize, n_b: usize) -> usize {
        n_a * self.dim_b() + n_b
    }
}

/// Tensor factor of a [`HilbertSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    ModeA,
    ModeB,
    Atom,
}

/// What an operator or state acts on.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Space {
    /// One truncated mode with the given cutoff.
    Mode(usize),
    /// One atom with the listed levels.
    Atom(Vec<Level>),
    /// Two modes, optionally with an atom.
    Product(HilbertSpec),
}

impl Space {
    pub fn dim(&self) -> usize {
        match self {
            Space::Mode(cutoff) => cutoff + 1,
            Space::Atom(levels) => levels.len(),
            Space::Product(spec) => spec.dim(),
        }
    }

    pub fn product(&self) -> Option<&HilbertSpec> {
        match self {
            Space::Product(spec) => Some(spec),
            _ => None,
        }
    }

    /// The product spec, when it carries no atom.
    pub fn field(&self) -> Option<&HilbertSpec> {
        self.product().filter(|s| !s.has_atom())
    }
}

impl From<HilbertSpec> for Space {
    fn from(spec: HilbertSpec) -> Self {
        Space::Product(spec)
    }
}
