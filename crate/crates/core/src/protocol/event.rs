//! The field map of a single atom crossing the cavity.

use alloc::vec::Vec;

use crate::dynamics::Propagator;
use crate::error::{invalid, Result};
use crate::linalg::{self, CMatrix, SparseMatrix};
use crate::protocol::scheme::AtomScheme;
use crate::space::{HilbertSpec, Space};
use crate::state::{DensityMatrix, StateVector};

/// Kraus form `ρ ↦ Σ_k K_k ρ K_k†` of `Tr_at[U(ρ ⊗ |init⟩⟨init|)U†]`,
/// with `K_k = ⟨k|U|init⟩` restricted to the field.
#[derive(Debug, Clone)]
pub struct TransitMap {
    field: HilbertSpec,
    kraus: Vec<SparseMatrix>,
}

impl TransitMap {
    pub fn new(propagator: &Propagator, atom_state: &StateVector) -> Result<Self> {
        let spec = match propagator.unitary.space() {
            Space::Product(spec) if spec.has_atom() => spec.clone(),
            _ => return Err(invalid("transit propagator must act on field ⊗ atom")),
        };
        if atom_state.space() != &Space::Atom(spec.atom_levels().to_vec()) {
            return Err(invalid("atom state does not match the propagator's atomic levels"));
        }
        let u = propagator.unitary.matrix();
        let init = atom_state.amplitudes();
        let la = spec.atom_dim();
        let df = spec.field_dim();
        let mut kraus = Vec::with_capacity(la);
        for k in 0..la {
            let mut m = CMatrix::zeros(df, df);
            for f in 0..df {
                for (j, c) in init.iter().enumerate() {
                    if *c == linalg::ZERO {
                        continue;
                    }
                    let col = f * la + j;
                    for fp in 0..df {
                        m[(fp, f)] += u[(fp * la + k, col)] * c;
                    }
                }
            }
            // entries outside the conserved-number blocks are exact zeros
            let s = SparseMatrix::from_dense(&m, 0.0);
            if s.nnz() > 0 {
                kraus.push(s);
            }
        }
        Ok(Self { field: spec.field_part(), kraus })
    }

    pub fn from_scheme<S: AtomScheme>(scheme: &S, propagator: &Propagator) -> Result<Self> {
        Self::new(propagator, &scheme.atom_state()?)
    }

    pub fn field(&self) -> &HilbertSpec {
        &self.field
    }

    pub fn kraus_operators(&self) -> &[SparseMatrix] {
        &self.kraus
    }

    /// `‖Σ_k K_k†K_k − I‖_F`
    pub fn completeness_error(&self) -> f64 {
        let n = self.field.field_dim();
        let mut acc = CMatrix::zeros(n, n);
        for k in &self.kraus {
            let d = k.to_dense();
            acc += d.adjoint() * d;
        }
        linalg::frobenius(&(acc - linalg::identity(n)))
    }

    pub fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        let n = rho.nrows();
        let mut out = CMatrix::zeros(n, n);
        for k in &self.kraus {
            out += k.sandwich(rho);
        }
        linalg::hermitize(&mut out);
        out
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.space() != &Space::Product(self.field.clone()) {
            return Err(invalid("field state does not match the transit map"));
        }
        DensityMatrix::new(rho.space().clone(), self.apply_matrix(rho.matrix()))
    }
}

/// `ρ ⊗ |init⟩⟨init|` on the composite space of `spec`.
pub fn attach_atom(rho_field: &DensityMatrix, atom_state: &StateVector, spec: &HilbertSpec) -> Result<DensityMatrix> {
    if rho_field.space() != &Space::Product(spec.field_part()) {
        return Err(invalid("field state does not match the composite space"));
    }
    let p = atom_state.projector();
    DensityMatrix::new(Space::Product(spec.clone()), linalg::kron(rho_field.matrix(), p.matrix()))
}

/// Partial trace over the atomic factor.
pub fn trace_out_atom(chi: &DensityMatrix) -> Result<DensityMatrix> {
    let spec = match chi.space() {
        Space::Product(spec) if spec.has_atom() => spec,
        _ => return Err(invalid("partial trace needs a field ⊗ atom state")),
    };
    let la = spec.atom_dim();
    let df = spec.field_dim();
    let m = chi.matrix();
    let out = CMatrix::from_fn(df, df, |i, j| (0..la).map(|k| m[(i * la + k, j * la + k)]).sum());
    DensityMatrix::new(Space::Product(spec.field_part()), out)
}

/// `Tr_at[U(ρ ⊗ |init⟩⟨init|)U†]` evaluated literally on the composite space.
/// [`TransitMap`] computes the same map much faster.
pub fn atom_event<S: AtomScheme>(rho_field: &DensityMatrix, scheme: &S, propagator: &Propagator) -> Result<DensityMatrix> {
    let spec = match propagator.unitary.space() {
        Space::Product(spec) if spec.has_atom() => spec.clone(),
        _ => return Err(invalid("transit propagator must act on field ⊗ atom")),
    };
    if spec.atom_levels() != scheme.levels().as_slice() {
        return Err(invalid("propagator levels do not match the scheme"));
    }
    let chi = attach_atom(rho_field, &scheme.atom_state()?, &spec)?;
    let u = propagator.unitary.matrix();
    let evolved = u * chi.matrix() * u.adjoint();
    let mut out = trace_out_atom(&DensityMatrix::new(chi.space().clone(), evolved)?)?;
    out.hermitize();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::transit_propagator;
    use crate::fock::{cat_state, collective_modes};
    use crate::linalg::C64;
    use crate::protocol::scheme::{L2Variant, SchemeL1Params, SchemeL2Params};

    fn vacuum(spec: &HilbertSpec) -> DensityMatrix {
        StateVector::basis(Space::Product(spec.field_part()), 0).unwrap().projector()
    }

    fn random_state(spec: &HilbertSpec, seed: u64) -> DensityMatrix {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let n = spec.field_dim();
        let raw = CMatrix::from_fn(n, n, |_, _| C64::new(next(), next()));
        let m = &raw * raw.adjoint();
        let tr = linalg::trace(&m);
        DensityMatrix::new(Space::Product(spec.field_part()), m / tr).unwrap()
    }

    #[test]
    fn kraus_map_equals_literal_trace() {
        let l1 = SchemeL1Params::new(0.4, 0.25, 1.0).unwrap();
        let spec1 = l1.spec(4, 3).unwrap();
        let u1 = transit_propagator(&l1.hamiltonian(&spec1).unwrap(), 1.0).unwrap();
        let l2 = SchemeL2Params {
            gb_tau2: 3.0,
            gb_over_delta: 0.5,
            ga_over_gb: 0.7,
            omega_tau2: 0.4,
            r2: 1.0,
            variant: L2Variant::matched_h_aux(0.7),
        };
        let spec2 = l2.spec(3, 4).unwrap();
        let u2 = transit_propagator(&l2.hamiltonian(&spec2).unwrap(), 1.3).unwrap();

        let rho = random_state(&spec1, 1);
        let fast = TransitMap::from_scheme(&l1, &u1).unwrap().apply(&rho).unwrap();
        let slow = atom_event(&rho, &l1, &u1).unwrap();
        assert!(linalg::frobenius(&(fast.matrix() - slow.matrix())) < 1e-13);

        let rho = random_state(&spec2, 2);
        let map = TransitMap::from_scheme(&l2, &u2).unwrap();
        assert!(map.completeness_error() < 1e-12);
        let fast = map.apply(&rho).unwrap();
        let slow = atom_event(&rho, &l2, &u2).unwrap();
        assert!(linalg::frobenius(&(fast.matrix() - slow.matrix())) < 1e-13);
        assert!((fast.trace() - rho.trace()).norm() < 1e-12);
    }

    #[test]
    fn vacuum_is_dark_for_l1() {
        let l1 = SchemeL1Params::new(0.1, 0.1, 1.0).unwrap();
        let spec = l1.spec(3, 3).unwrap();
        let u = transit_propagator(&l1.hamiltonian(&spec).unwrap(), 1.0).unwrap();
        let rho = vacuum(&spec);
        let out = atom_event(&rho, &l1, &u).unwrap();
        assert!(linalg::frobenius(&(out.matrix() - rho.matrix())) < 1e-14);
    }

    #[test]
    fn cat_is_dark_for_l1() {
        let l1 = SchemeL1Params::new(0.1, 0.1, 1.0).unwrap();
        // the truncated cat is dark up to its weight at the cutoff, ~1e-9 here
        let spec = l1.spec(18, 18).unwrap();
        let u = transit_propagator(&l1.hamiltonian(&spec).unwrap(), 1.0).unwrap();
        let rho = cat_state(C64::new(1.0, 0.0), &spec).unwrap().projector();
        let out = atom_event(&rho, &l1, &u).unwrap();
        assert!(linalg::frobenius(&(out.matrix() - rho.matrix())) < 1e-8);
    }

    #[test]
    fn odd_photon_is_absorbed() {
        let l1 = SchemeL1Params::new(0.1, 0.1, 1.0).unwrap();
        let spec = l1.spec(3, 3).unwrap();
        let u = transit_propagator(&l1.hamiltonian(&spec).unwrap(), 1.0).unwrap();
        let field = spec.field_part();
        let (cm, _) = collective_modes(&field).unwrap();
        let vac = StateVector::basis(Space::Product(field.clone()), 0).unwrap();
        let one = cm.adjoint().apply(&vac).unwrap();
        let out = TransitMap::from_scheme(&l1, &u).unwrap().apply(&one.projector()).unwrap();
        // half the amplitude sits in the bright pair coupled to |0,0;3⟩ at frequency g
        let expected = 0.5 * libm::sin(0.1 * libm::sqrt(2.0)).powi(2);
        assert!((out.matrix()[(0, 0)].re - expected).abs() < 1e-12);
    }

    #[test]
    fn mismatched_spaces_are_rejected() {
        let l1 = SchemeL1Params::new(0.1, 0.1, 1.0).unwrap();
        let spec = l1.spec(3, 3).unwrap();
        let u = transit_propagator(&l1.hamiltonian(&spec).unwrap(), 1.0).unwrap();
        let other = HilbertSpec::field(2, 3).unwrap();
        assert!(atom_event(&vacuum(&other), &l1, &u).is_err());
        assert!(TransitMap::from_scheme(&l1, &u).unwrap().apply(&vacuum(&other)).is_err());
    }
}
