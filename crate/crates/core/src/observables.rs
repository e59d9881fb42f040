//! Scalar diagnostics of field states.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::fock;
use crate::linalg::{self, CMatrix, C64};
use crate::space::{HilbertSpec, Space};
use crate::state::{DensityMatrix, Operator, StateVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableSample {
    /// In units of the inverse injection rate.
    pub time: f64,
    /// Number of atom events applied before the sample.
    pub event_index: usize,
    pub fidelity: f64,
    pub purity: f64,
    pub n_a: f64,
    pub n_b: f64,
    pub parity: f64,
    /// `|tr ρ − 1|`
    pub trace_error: f64,
}

/// Observables sampled along one run, plus run diagnostics.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub samples: Vec<ObservableSample>,
    /// Truncation and validity warnings, each reported once.
    pub warnings: Vec<String>,
    pub alpha: C64,
    pub events_applied: usize,
    pub events_dropped: usize,
    /// Largest `|Δ tr ρ|` caused by a single atom.
    pub max_event_trace_change: f64,
    /// Largest `|Δ⟨Π₊⟩|` caused by a single atom.
    pub max_event_parity_change: f64,
    /// Smallest eigenvalue seen at the periodic positivity checks.
    pub min_eigenvalue: f64,
    pub final_state: DensityMatrix,
}

impl TrajectoryRecord {
    /// Sample with the largest fidelity (the earliest on ties).
    pub fn peak(&self) -> Option<&ObservableSample> {
        self.samples.iter().fold(None, |best: Option<&ObservableSample>, s| match best {
            Some(b) if b.fidelity >= s.fidelity => Some(b),
            _ => Some(s),
        })
    }

    pub fn last(&self) -> Option<&ObservableSample> {
        self.samples.last()
    }

    /// Fidelity at the sample closest to `time`.
    pub fn fidelity_at(&self, time: f64) -> Option<f64> {
        self.samples.iter().min_by(|a, b| (a.time - time).abs().total_cmp(&(b.time - time).abs())).map(|s| s.fidelity)
    }
}

fn field_spec(rho: &DensityMatrix) -> Result<&HilbertSpec> {
    match rho.space() {
        Space::Product(spec) if !spec.has_atom() => Ok(spec),
        _ => Err(invalid("expected a field-space density matrix")),
    }
}

/// `⟨ψ|ρ|ψ⟩`
pub fn fidelity(rho: &DensityMatrix, target: &StateVector) -> Result<f64> {
    if rho.space() != target.space() {
        return Err(invalid("state and target live on different spaces"));
    }
    let psi = target.amplitudes();
    let v = rho.matrix() * psi;
    Ok(psi.dotc(&v).re)
}

/// `tr(ρ|ψ⟩⟨ψ|)`, the same quantity evaluated through the projector.
pub fn fidelity_trace_formula(rho: &DensityMatrix, target: &StateVector) -> Result<f64> {
    let proj = target.projector();
    let op = Operator::new(target.space().clone(), proj.into_matrix())?;
    Ok(rho.expectation(&op)?.re)
}

/// `(tr ρ n_a, tr ρ n_b)` read off the diagonal.
pub fn mean_photons(rho: &DensityMatrix) -> Result<(f64, f64)> {
    let spec = field_spec(rho)?;
    let m = rho.matrix();
    let (mut na, mut nb) = (0.0, 0.0);
    for a in 0..spec.dim_a() {
        for b in 0..spec.dim_b() {
            let p = m[(spec.field_index(a, b), spec.field_index(a, b))].re;
            na += a as f64 * p;
            nb += b as f64 * p;
        }
    }
    Ok((na, nb))
}

/// `tr(ρΠ₊)`
pub fn parity_expectation(rho: &DensityMatrix) -> Result<f64> {
    let spec = field_spec(rho)?;
    let pi = fock::parity_plus(spec)?;
    Ok(rho.expectation(&pi)?.re)
}

/// `tr(ρ²)`
pub fn purity(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    // ρ is Hermitian, so tr(ρ²) = Σ|ρ_ij|².
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Population in the two highest Fock levels of either mode.
pub fn edge_population(rho: &DensityMatrix) -> Result<f64> {
    let spec = field_spec(rho)?;
    let m = rho.matrix();
    let mut p = 0.0;
    for a in 0..spec.dim_a() {
        for b in 0..spec.dim_b() {
            if a + 2 >= spec.dim_a() || b + 2 >= spec.dim_b() {
                p += m[(spec.field_index(a, b), spec.field_index(a, b))].re;
            }
        }
    }
    Ok(p)
}

/// Precomputed target and parity operator for repeated sampling on one space.
#[derive(Debug, Clone)]
pub struct FieldObservables {
    spec: HilbertSpec,
    target: StateVector,
    parity: CMatrix,
}

impl FieldObservables {
    pub fn new(spec: &HilbertSpec, target: StateVector) -> Result<Self> {
        let field = spec.field_part();
        if target.space() != &Space::Product(field.clone()) {
            return Err(invalid("target must live on the field space"));
        }
        let parity = fock::parity_plus(&field)?.into_matrix();
        Ok(Self { spec: field, target, parity })
    }

    /// Observables against the even cat of amplitude `alpha`.
    pub fn for_cat(spec: &HilbertSpec, alpha: C64) -> Result<Self> {
        let target = fock::cat_state(alpha, &spec.field_part())?;
        Self::new(spec, target)
    }

    pub fn spec(&self) -> &HilbertSpec {
        &self.spec
    }

    pub fn target(&self) -> &StateVector {
        &self.target
    }

    pub fn parity(&self, rho: &DensityMatrix) -> f64 {
        let m = rho.matrix();
        let n = m.nrows();
        let mut acc = linalg::ZERO;
        for j in 0..n {
            for i in 0..n {
                acc += self.parity[(i, j)] * m[(j, i)];
            }
        }
        acc.re
    }

    pub fn sample(&self, rho: &DensityMatrix, time: f64, event_index: usize) -> Result<ObservableSample> {
        let (n_a, n_b) = mean_photons(rho)?;
        Ok(ObservableSample {
            time,
            event_index,
            fidelity: fidelity(rho, &self.target)?,
            purity: purity(rho),
            n_a,
            n_b,
            parity: self.parity(rho),
            trace_error: (rho.trace() - linalg::ONE).norm(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{cat_normalization, cat_state, odd_cat_state};
    use crate::linalg::CVector;

    fn spec() -> HilbertSpec {
        HilbertSpec::field(14, 14).unwrap()
    }

    fn vacuum(spec: &HilbertSpec) -> DensityMatrix {
        StateVector::basis(Space::Product(spec.clone()), 0).unwrap().projector()
    }

    #[test]
    fn fidelity_of_target_is_one() {
        let s = spec();
        let psi = cat_state(C64::new(1.0, 0.0), &s).unwrap();
        assert!((fidelity(&psi.projector(), &psi).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vacuum_overlap_matches_closed_form() {
        let s = spec();
        let alpha = C64::new(1.0, 0.0);
        let psi = cat_state(alpha, &s).unwrap();
        let f = fidelity(&vacuum(&s), &psi).unwrap();
        let expected = (2.0 * libm::exp(-1.0) / cat_normalization(alpha)).powi(2);
        assert!((f - expected).abs() < 1e-10, "{f} vs {expected}");
        assert!((f - 0.2658).abs() < 1e-4);
    }

    #[test]
    fn odd_cat_is_orthogonal() {
        let s = spec();
        let alpha = C64::new(1.0, 0.0);
        let f = fidelity(&odd_cat_state(alpha, &s).unwrap().projector(), &cat_state(alpha, &s).unwrap()).unwrap();
        assert!(f.abs() < 1e-10);
    }

    #[test]
    fn vacuum_diagnostics() {
        let s = spec();
        let rho = vacuum(&s);
        assert_eq!(mean_photons(&rho).unwrap(), (0.0, 0.0));
        assert!((parity_expectation(&rho).unwrap() - 1.0).abs() < 1e-12);
        assert!((purity(&rho) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cat_photon_number() {
        let s = spec();
        let rho = cat_state(C64::new(1.0, 0.0), &s).unwrap().projector();
        let (na, nb) = mean_photons(&rho).unwrap();
        let e = libm::exp(-4.0);
        let expected = (1.0 - e) / (1.0 + e);
        assert!((na - expected).abs() < 1e-8 && (nb - expected).abs() < 1e-8);
        assert!((na - 0.9640).abs() < 1e-4);
        assert!((parity_expectation(&rho).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn maximally_mixed_pair_has_half_purity() {
        let s = HilbertSpec::field(1, 1).unwrap();
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = C64::new(0.5, 0.0);
        m[(3, 3)] = C64::new(0.5, 0.0);
        let rho = DensityMatrix::new(Space::Product(s), m).unwrap();
        assert!((purity(&rho) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_fidelity_paths_agree() {
        let s = HilbertSpec::field(4, 4).unwrap();
        let mut seed = 7u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let raw = CMatrix::from_fn(25, 25, |_, _| C64::new(next(), next()));
        let m = &raw * raw.adjoint();
        let tr = linalg::trace(&m);
        let rho = DensityMatrix::new(Space::Product(s.clone()), m / tr).unwrap();
        let psi = StateVector::new(Space::Product(s), CVector::from_fn(25, |_, _| C64::new(next(), next()))).unwrap().normalized().unwrap();
        let f1 = fidelity(&rho, &psi).unwrap();
        let f2 = fidelity_trace_formula(&rho, &psi).unwrap();
        assert!((f1 - f2).abs() < 1e-12);
    }

    #[test]
    fn cached_sample_matches_free_functions() {
        let s = spec();
        let alpha = C64::new(1.0, 0.0);
        let obs = FieldObservables::for_cat(&s, alpha).unwrap();
        let rho = vacuum(&s);
        let sample = obs.sample(&rho, 2.0, 3).unwrap();
        assert_eq!(sample.event_index, 3);
        assert!((sample.parity - parity_expectation(&rho).unwrap()).abs() < 1e-12);
        assert!((sample.fidelity - fidelity(&rho, obs.target()).unwrap()).abs() < 1e-15);
        assert!(sample.trace_error < 1e-15);
    }
}
