//! Truncated bosonic algebra for the two cavity modes.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, BlockSpectrum, CMatrix, CVector, C64};
use crate::space::{HilbertSpec, Level, Slot, Space};
use crate::state::{Operator, StateVector};

/// Lowering operator `a` on one mode truncated at `cutoff` photons.
pub fn annihilation_op(cutoff: usize) -> Result<Operator> {
    if cutoff < 1 {
        return Err(invalid("cutoff must be at least 1"));
    }
    let dim = cutoff + 1;
    let mut m = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Operator::new(Space::Mode(cutoff), m)
}

/// `a†a` on one truncated mode.
pub fn number_op(cutoff: usize) -> Result<Operator> {
    if cutoff < 1 {
        return Err(invalid("cutoff must be at least 1"));
    }
    let m = CMatrix::from_diagonal(&CVector::from_fn(cutoff + 1, |n, _| C64::new(n as f64, 0.0)));
    Operator::hermitian(Space::Mode(cutoff), m)
}

/// Atomic flip `σ_{j,k} = |j⟩⟨k|`.
pub fn transition(levels: &[Level], j: Level, k: Level) -> Result<Operator> {
    let pos = |l: Level| levels.iter().position(|&x| x == l).ok_or_else(|| invalid(format!("level {l} not in the atomic level set")));
    let (row, col) = (pos(j)?, pos(k)?);
    let mut m = CMatrix::zeros(levels.len(), levels.len());
    m[(row, col)] = linalg::ONE;
    Operator::new(Space::Atom(levels.to_vec()), m)
}

/// `op` on `slot`, identity on every other factor of `spec`.
pub fn embed(op: &Operator, slot: Slot, spec: &HilbertSpec) -> Result<Operator> {
    if op.dim() != spec.slot_dim(slot) {
        return Err(invalid(format!(
            "operator dimension {} does not match slot {:?} of dimension {}",
            op.dim(),
            slot,
            spec.slot_dim(slot)
        )));
    }
    let id = |n: usize| linalg::identity(n);
    let (da, db, dat) = (spec.dim_a(), spec.dim_b(), spec.atom_dim());
    let m = op.matrix();
    let full = match slot {
        Slot::ModeA => linalg::kron(m, &id(db * dat)),
        Slot::ModeB => linalg::kron(&linalg::kron(&id(da), m), &id(dat)),
        Slot::Atom => linalg::kron(&id(da * db), m),
    };
    let space = Space::Product(spec.clone());
    if op.is_hermitian_expected() {
        Operator::hermitian(space, full)
    } else {
        Operator::new(space, full)
    }
}

/// Embedded `(a, b)`.
pub fn mode_operators(spec: &HilbertSpec) -> Result<(Operator, Operator)> {
    let a = embed(&annihilation_op(spec.cutoff_a())?, Slot::ModeA, spec)?;
    let b = embed(&annihilation_op(spec.cutoff_b())?, Slot::ModeB, spec)?;
    Ok((a, b))
}

/// Embedded `(a†a, b†b)`.
pub fn number_operators(spec: &HilbertSpec) -> Result<(Operator, Operator)> {
    let na = embed(&number_op(spec.cutoff_a())?, Slot::ModeA, spec)?;
    let nb = embed(&number_op(spec.cutoff_b())?, Slot::ModeB, spec)?;
    Ok((na, nb))
}

/// `(c₋, c₊)` with `c± = (a ± b)/√2`.
pub fn collective_modes(spec: &HilbertSpec) -> Result<(Operator, Operator)> {
    let (a, b) = mode_operators(spec)?;
    let s = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
    Ok(((&a - &b).scale(s), (&a + &b).scale(s)))
}

/// Truncation acceptance rule for coherent amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum TailTolerance {
    /// Require `|α|² ≤ cutoff/4`.
    #[default]
    QuarterCutoff,
    /// Require the Poisson weight beyond the cutoff to stay below the value.
    Weight(f64),
}

/// A renormalized truncated coherent state and the probability it lost.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentState {
    pub state: StateVector,
    /// `Σ_{n>cutoff} e^{-|α|²} |α|^{2n}/n!`
    pub tail_weight: f64,
}

fn poisson_tail(mean: f64, cutoff: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    // p_n built recursively from p_0 = e^{-mean}; summing forward from the
    // cutoff avoids cancellation in 1 - Σ_{n≤cutoff} p_n
    let mut p = libm::exp(-mean);
    for n in 1..=cutoff {
        p *= mean / n as f64;
    }
    let mut tail = 0.0;
    let mut n = cutoff + 1;
    loop {
        p *= mean / n as f64;
        tail += p;
        if p < tail * 1e-17 || p == 0.0 {
            break;
        }
        n += 1;
    }
    tail
}

pub fn coherent_state(alpha: C64, cutoff: usize) -> Result<CoherentState> {
    coherent_state_with(alpha, cutoff, TailTolerance::default())
}

pub fn coherent_state_with(alpha: C64, cutoff: usize, tol: TailTolerance) -> Result<CoherentState> {
    if cutoff < 1 {
        return Err(invalid("cutoff must be at least 1"));
    }
    let mean = alpha.norm_sqr();
    let tail_weight = poisson_tail(mean, cutoff);
    match tol {
        TailTolerance::QuarterCutoff if mean > cutoff as f64 / 4.0 => {
            return Err(Error::Truncation(format!(
                "|alpha|^2 = {mean} exceeds cutoff/4 = {} (tail weight {tail_weight:e})",
                cutoff as f64 / 4.0
            )));
        }
        TailTolerance::Weight(w) if tail_weight > w => {
            return Err(Error::Truncation(format!("tail weight {tail_weight:e} exceeds {w:e}")));
        }
        _ => {}
    }
    let mut amps = CVector::zeros(cutoff + 1);
    amps[0] = C64::new(libm::exp(-mean / 2.0), 0.0);
    for n in 1..=cutoff {
        amps[n] = amps[n - 1] * alpha / (n as f64).sqrt();
    }
    let state = StateVector::new(Space::Mode(cutoff), amps)?.normalized()?;
    Ok(CoherentState { state, tail_weight })
}

/// `|β_a⟩_A |β_b⟩_B` on the field part of `spec`.
pub fn coherent_product(beta_a: C64, beta_b: C64, spec: &HilbertSpec) -> Result<StateVector> {
    let ca = coherent_state(beta_a, spec.cutoff_a())?.state;
    let cb = coherent_state(beta_b, spec.cutoff_b())?.state;
    let amps = ca.amplitudes().kronecker(cb.amplitudes());
    StateVector::new(Space::Product(spec.field_part()), amps)
}

/// Even two-mode cat `(|α,α⟩ + |−α,−α⟩)/N`, renormalized on the truncation.
pub fn cat_state(alpha: C64, spec: &HilbertSpec) -> Result<StateVector> {
    let plus = coherent_product(alpha, alpha, spec)?;
    let minus = coherent_product(-alpha, -alpha, spec)?;
    plus.add(&minus)?.normalized()
}

/// Odd companion `(|α,α⟩ − |−α,−α⟩)/N′`. Undefined at `α = 0`.
pub fn odd_cat_state(alpha: C64, spec: &HilbertSpec) -> Result<StateVector> {
    let plus = coherent_product(alpha, alpha, spec)?;
    let minus = coherent_product(-alpha, -alpha, spec)?;
    plus.add(&minus.scale(C64::new(-1.0, 0.0)))?.normalized()
}

/// Untruncated cat normalization `N = sqrt(2[1 + exp(-4|α|²)])`.
pub fn cat_normalization(alpha: C64) -> f64 {
    libm::sqrt(2.0 * (1.0 + libm::exp(-4.0 * alpha.norm_sqr())))
}

/// `(C₁, C₂) = ((a − b)/√2, 2(ab − α²))` on the field part of `spec`.
pub fn jump_operators(alpha: C64, spec: &HilbertSpec) -> Result<(Operator, Operator)> {
    let field = spec.field_part();
    let (a, b) = mode_operators(&field)?;
    let s = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
    let c1 = (&a - &b).scale(s);
    let ab = &a * &b;
    let shift = Operator::identity(Space::Product(field)).scale(alpha * alpha);
    let c2 = (&ab - &shift).scale(C64::new(2.0, 0.0));
    Ok((c1, c2))
}

/// Tolerance beyond which a `c₊†c₊` eigenvalue is flagged as off-integer.
pub const PARITY_INTEGER_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct ParityOperator {
    pub operator: Operator,
    /// Largest distance of a `c₊†c₊` eigenvalue from its rounded integer.
    pub max_integer_deviation: f64,
    /// Number of eigenvalues further than [`PARITY_INTEGER_TOL`] from an integer.
    pub off_integer_count: usize,
}

/// `Π₊ = (−1)^{c₊†c₊}` on the field part of `spec`.
///
/// `Π₊` flips `c₊` and fixes `c₋`, i.e. it maps `a → −b`, `b → −a`. With equal
/// cutoffs it is therefore the signed swap `|n_a,n_b⟩ → (−1)^{n_a+n_b}|n_b,n_a⟩`,
/// which leaves the truncated space invariant and commutes exactly with the
/// truncated jump operators. Unequal cutoffs fall back to
/// [`parity_plus_with_diagnostics`].
pub fn parity_plus(spec: &HilbertSpec) -> Result<Operator> {
    let field = spec.field_part();
    if field.cutoff_a() != field.cutoff_b() {
        return Ok(parity_plus_with_diagnostics(spec)?.operator);
    }
    let n = field.dim_a();
    let mut m = CMatrix::zeros(field.field_dim(), field.field_dim());
    for na in 0..n {
        for nb in 0..n {
            let sign = if (na + nb) % 2 == 0 { 1.0 } else { -1.0 };
            m[(field.field_index(nb, na), field.field_index(na, nb))] = C64::new(sign, 0.0);
        }
    }
    Operator::hermitian(Space::Product(field), m)
}

/// `Π₊` from rounding the spectrum of the truncated `c₊†c₊`, with the
/// truncation-edge diagnostics of the rounding.
pub fn parity_plus_with_diagnostics(spec: &HilbertSpec) -> Result<ParityOperator> {
    let field = spec.field_part();
    let (_, c_plus) = collective_modes(&field)?;
    let n_plus = c_plus.adjoint().matrix() * c_plus.matrix();
    let spectrum = BlockSpectrum::new(&n_plus)?;
    let mut max_dev = 0.0f64;
    let mut off = 0usize;
    for e in spectrum.eigenvalues() {
        let dev = (e - libm::round(e)).abs();
        max_dev = max_dev.max(dev);
        if dev > PARITY_INTEGER_TOL {
            off += 1;
        }
    }
    if off > 0 {
        log::warn!("c+ number operator has {off} off-integer eigenvalues (max deviation {max_dev:.3e}); truncation edge");
    }
    let pi = spectrum.map(|e| {
        let k = libm::round(e) as i64;
        C64::new(if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 }, 0.0)
    });
    let mut pi = pi;
    linalg::hermitize(&mut pi);
    Ok(ParityOperator { operator: Operator::hermitian(Space::Product(field), pi)?, max_integer_deviation: max_dev, off_integer_count: off })
}

/// Field basis indices with `n_a + n_b ≤ max_total`.
pub fn low_photon_indices(spec: &HilbertSpec, max_total: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for na in 0..spec.dim_a() {
        for nb in 0..spec.dim_b() {
            if na + nb <= max_total {
                out.push(spec.field_index(na, nb));
            }
        }
    }
    out
}
