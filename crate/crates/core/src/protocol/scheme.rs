//! Atom-level schemes of the two beams and their transit Hamiltonians.
//!
//! Hamiltonians are dimensionless: the L1 Hamiltonian is in units of `1/τ₁`,
//! the L2 one in units of `1/τ₂`, so a nominal transit is a propagation over
//! unit time.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::fock;
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::space::{HilbertSpec, Level, Space};
use crate::state::{Operator, StateVector};

/// How well one of the scheme's `≪`/`≫` inequalities holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Off by at least a factor of ten.
    Satisfied,
    /// Within a factor of ten of the boundary.
    Marginal,
    /// On the wrong side of one.
    Violated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inequality {
    pub description: &'static str,
    pub value: f64,
    /// `true` for `value ≪ 1`, `false` for `value ≫ 1`.
    pub small: bool,
}

impl Inequality {
    fn small(description: &'static str, value: f64) -> Self {
        Self { description, value, small: true }
    }

    fn large(description: &'static str, value: f64) -> Self {
        Self { description, value, small: false }
    }

    pub fn regime(&self) -> Regime {
        // slack so that a value landing on 1 through rounding is not rejected
        let edge = 1e-9;
        if !self.value.is_finite() {
            return Regime::Violated;
        }
        if self.small {
            if self.value <= 0.1 * (1.0 + edge) {
                Regime::Satisfied
            } else if self.value <= 1.0 + edge {
                Regime::Marginal
            } else {
                Regime::Violated
            }
        } else if self.value >= 10.0 * (1.0 - edge) {
            Regime::Satisfied
        } else if self.value >= 1.0 - edge {
            Regime::Marginal
        } else {
            Regime::Violated
        }
    }
}

/// Common interface of the two beam schemes.
pub trait AtomScheme {
    fn levels(&self) -> Vec<Level>;
    /// State in which every atom of this beam enters the cavity.
    fn atom_state(&self) -> Result<StateVector>;
    fn hamiltonian(&self, spec: &HilbertSpec) -> Result<Operator>;

    fn spec(&self, cutoff_a: usize, cutoff_b: usize) -> Result<HilbertSpec> {
        HilbertSpec::new(cutoff_a, cutoff_b, self.levels())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum L1InitialState {
    /// `|−⟩ = (g_b|1⟩ − g_a|2⟩)/g`
    #[default]
    Minus,
    One,
}

/// Λ atoms `{1, 2, 3}` that pump the odd mode `c₋` towards vacuum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeL1Params {
    pub g_a_tau1: f64,
    pub g_b_tau1: f64,
    /// Injection rate in units of the reference rate.
    pub r1: f64,
    pub initial_atom_state: L1InitialState,
}

impl SchemeL1Params {
    pub const LEVELS: [Level; 3] = [Level::One, Level::Two, Level::Three];

    pub fn new(g_a_tau1: f64, g_b_tau1: f64, r1: f64) -> Result<Self> {
        let p = Self { g_a_tau1, g_b_tau1, r1, initial_atom_state: L1InitialState::Minus };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g_a_tau1 >= 0.0 && self.g_b_tau1 >= 0.0) || !self.g_a_tau1.is_finite() || !self.g_b_tau1.is_finite() {
            return Err(invalid("L1 couplings must be finite and non-negative"));
        }
        if self.g_tau1() == 0.0 {
            return Err(invalid("L1 couplings cannot both vanish"));
        }
        if !(self.r1 >= 0.0) || !self.r1.is_finite() {
            return Err(invalid("r1 must be finite and non-negative"));
        }
        Ok(())
    }

    /// `g τ₁` with `g = sqrt(g_a² + g_b²)`.
    pub fn g_tau1(&self) -> f64 {
        libm::hypot(self.g_a_tau1, self.g_b_tau1)
    }

    /// Validity conditions given the odd-mode population `N₋` and `r₁τ₁`.
    pub fn inequalities(&self, n_minus: f64, r_tau1: f64) -> Vec<Inequality> {
        vec![
            Inequality::small("g*tau1*sqrt(N_minus + 1/2) << 1", self.g_tau1() * libm::sqrt(n_minus.max(0.0) + 0.5)),
            Inequality::small("r1*tau1 << 1", self.r1 * r_tau1),
        ]
    }

    pub fn with_couplings_scaled(&self, factor: f64) -> Self {
        Self { g_a_tau1: self.g_a_tau1 * factor, g_b_tau1: self.g_b_tau1 * factor, ..*self }
    }
}

impl AtomScheme for SchemeL1Params {
    fn levels(&self) -> Vec<Level> {
        Self::LEVELS.to_vec()
    }

    fn atom_state(&self) -> Result<StateVector> {
        let space = Space::Atom(self.levels());
        match self.initial_atom_state {
            L1InitialState::One => StateVector::basis(space, 0),
            L1InitialState::Minus => {
                let g = self.g_tau1();
                let amps = CVector::from_vec(vec![C64::new(self.g_b_tau1 / g, 0.0), C64::new(-self.g_a_tau1 / g, 0.0), linalg::ZERO]);
                StateVector::new(space, amps)
            }
        }
    }

    fn hamiltonian(&self, spec: &HilbertSpec) -> Result<Operator> {
        build_hamiltonian_l1(self, spec)
    }
}

/// Correction attached to the L2 scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum L2Variant {
    Bare,
    /// Extra level `e` coupled to `1'` through mode A.
    HPrime {
        ga2_over_gb: f64,
        deltap_over_delta: f64,
    },
    /// Auxiliary pair `{1aux, 2aux}`; the atom enters in `cos φ|1'⟩ + sin φ|1aux⟩`.
    HAux {
        g_aux_over_gb: f64,
        delta_aux_over_delta: f64,
        phi: f64,
    },
}

impl L2Variant {
    /// `h'` tuned so that its Stark shift cancels the bare one.
    pub fn matched_h_prime(ga_over_gb: f64) -> Self {
        L2Variant::HPrime { ga2_over_gb: ga_over_gb, deltap_over_delta: -1.0 }
    }

    /// `h_aux` with `φ = π/4`, `g_aux = g_a'`, `Δ_aux = −Δ`.
    pub fn matched_h_aux(ga_over_gb: f64) -> Self {
        L2Variant::HAux { g_aux_over_gb: ga_over_gb, delta_aux_over_delta: -1.0, phi: core::f64::consts::FRAC_PI_4 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            L2Variant::Bare => "bare",
            L2Variant::HPrime { .. } => "h_prime",
            L2Variant::HAux { .. } => "h_aux",
        }
    }
}

/// Driven ladder atoms `{1', 2', 3'}` that pump the two-photon jump `C₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeL2Params {
    /// `g_b' τ₂`
    pub gb_tau2: f64,
    /// `g_b'/Δ`, negative for a negative detuning.
    pub gb_over_delta: f64,
    /// `g_a'/g_b'`
    pub ga_over_gb: f64,
    /// `Ω τ₂`
    pub omega_tau2: f64,
    pub r2: f64,
    pub variant: L2Variant,
}

impl SchemeL2Params {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.gb_tau2, self.gb_over_delta, self.ga_over_gb, self.omega_tau2, self.r2];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(invalid("L2 parameters must be finite"));
        }
        if !(self.gb_tau2 > 0.0) || !(self.ga_over_gb > 0.0) {
            return Err(invalid("L2 couplings g_a', g_b' must be positive"));
        }
        if self.gb_over_delta == 0.0 {
            return Err(invalid("gb_over_delta must be nonzero"));
        }
        if self.omega_tau2 < 0.0 {
            return Err(invalid("omega_tau2 must be non-negative"));
        }
        if self.r2 < 0.0 {
            return Err(invalid("r2 must be non-negative"));
        }
        match self.variant {
            L2Variant::Bare => {}
            L2Variant::HPrime { ga2_over_gb, deltap_over_delta } => {
                if !ga2_over_gb.is_finite() || !deltap_over_delta.is_finite() || deltap_over_delta == 0.0 {
                    return Err(invalid("h_prime needs finite g_a'' and a nonzero detuning"));
                }
            }
            L2Variant::HAux { g_aux_over_gb, delta_aux_over_delta, phi } => {
                if !g_aux_over_gb.is_finite() || !phi.is_finite() || !delta_aux_over_delta.is_finite() || delta_aux_over_delta == 0.0 {
                    return Err(invalid("h_aux needs finite g_aux, phi and a nonzero detuning"));
                }
            }
        }
        Ok(())
    }

    /// `Δ τ₂`
    pub fn delta_tau2(&self) -> f64 {
        self.gb_tau2 / self.gb_over_delta
    }

    /// `g_a' τ₂`
    pub fn ga_tau2(&self) -> f64 {
        self.ga_over_gb * self.gb_tau2
    }

    /// Drive giving the requested cat amplitude, `Ω = α²g_a'g_b'/Δ`.
    pub fn omega_for_alpha(&self, alpha: f64) -> f64 {
        alpha * alpha * self.ga_tau2() * self.gb_tau2 / self.delta_tau2()
    }

    /// Same scheme with `Δτ₂` moved to the nearest nonzero multiple of `2π`.
    pub fn snapped_to_resonance(&self) -> Self {
        let two_pi = 2.0 * core::f64::consts::PI;
        let d = self.delta_tau2();
        let n = libm::round(d.abs() / two_pi).max(1.0);
        let snapped = libm::copysign(n * two_pi, d);
        Self { gb_over_delta: self.gb_tau2 / snapped, ..*self }
    }

    /// Validity conditions given mean photon numbers and `r₂τ₂`.
    pub fn inequalities(&self, n_a: f64, n_b: f64, r_tau2: f64) -> Vec<Inequality> {
        let d = self.delta_tau2().abs();
        let ga = self.ga_tau2();
        let gb = self.gb_tau2;
        let mut out = vec![
            Inequality::large("|Delta|*tau2 >> 1", d),
            Inequality::small("g_a'^2 <n_a> tau2/|Delta| << 1", ga * ga * n_a / d),
            Inequality::small("g_b'^2 <n_b> tau2/|Delta| << 1", gb * gb * n_b / d),
            Inequality::small("Omega*tau2 << 1", self.omega_tau2),
            Inequality::large("(|Delta|*tau2)*(Omega*tau2) >> 1", d * self.omega_tau2),
            Inequality::small("r2*tau2 << 1", self.r2 * r_tau2),
        ];
        match self.variant {
            L2Variant::Bare => {}
            L2Variant::HPrime { ga2_over_gb, deltap_over_delta } => {
                let g = ga2_over_gb * gb;
                out.push(Inequality::large("|Delta'|*tau2 >> 1", (d * deltap_over_delta).abs()));
                out.push(Inequality::small("g_a''^2 <n_a> tau2/|Delta'| << 1", g * g * n_a / (d * deltap_over_delta).abs()));
            }
            L2Variant::HAux { g_aux_over_gb, delta_aux_over_delta, .. } => {
                let g = g_aux_over_gb * gb;
                out.push(Inequality::large("|Delta_aux|*tau2 >> 1", (d * delta_aux_over_delta).abs()));
                out.push(Inequality::small("g_aux^2 <n_a> tau2/|Delta_aux| << 1", g * g * n_a / (d * delta_aux_over_delta).abs()));
            }
        }
        out
    }
}

impl AtomScheme for SchemeL2Params {
    fn levels(&self) -> Vec<Level> {
        let mut l = vec![Level::OnePrime, Level::TwoPrime, Level::ThreePrime];
        match self.variant {
            L2Variant::Bare => {}
            L2Variant::HPrime { .. } => l.push(Level::E),
            L2Variant::HAux { .. } => {
                l.push(Level::OneAux);
                l.push(Level::TwoAux);
            }
        }
        l
    }

    fn atom_state(&self) -> Result<StateVector> {
        let levels = self.levels();
        let space = Space::Atom(levels.clone());
        match self.variant {
            L2Variant::HAux { phi, .. } => {
                let mut amps = CVector::zeros(levels.len());
                amps[0] = C64::new(libm::cos(phi), 0.0);
                amps[3] = C64::new(libm::sin(phi), 0.0);
                StateVector::new(space, amps)
            }
            _ => StateVector::basis(space, 0),
        }
    }

    fn hamiltonian(&self, spec: &HilbertSpec) -> Result<Operator> {
        build_hamiltonian_l2(self, spec)
    }
}

fn require_levels(spec: &HilbertSpec, levels: &[Level]) -> Result<()> {
    let have = spec.atom_levels();
    if have.len() != levels.len() || levels.iter().any(|l| !have.contains(l)) {
        return Err(invalid(format!("atom slot has levels {have:?}, scheme needs {levels:?}")));
    }
    Ok(())
}

/// Builds Hamiltonians term by term as `A ⊗ B ⊗ atom` Kronecker products.
struct TermBuilder<'a> {
    spec: &'a HilbertSpec,
    adag: CMatrix,
    bdag: CMatrix,
    id_a: CMatrix,
    id_b: CMatrix,
    h: CMatrix,
}

impl<'a> TermBuilder<'a> {
    fn new(spec: &'a HilbertSpec) -> Result<Self> {
        let adag = fock::annihilation_op(spec.cutoff_a())?.into_matrix().adjoint();
        let bdag = fock::annihilation_op(spec.cutoff_b())?.into_matrix().adjoint();
        Ok(Self {
            spec,
            adag,
            bdag,
            id_a: linalg::identity(spec.dim_a()),
            id_b: linalg::identity(spec.dim_b()),
            h: CMatrix::zeros(spec.dim(), spec.dim()),
        })
    }

    fn flip(&self, j: Level, k: Level) -> Result<CMatrix> {
        Ok(fock::transition(self.spec.atom_levels(), j, k)?.into_matrix())
    }

    /// `coef·(field ⊗ σ_jk) + h.c.`
    fn exchange(&mut self, coef: f64, photon: Option<bool>, j: Level, k: Level) -> Result<()> {
        let sigma = self.flip(j, k)? * C64::new(coef, 0.0);
        let field = match photon {
            Some(true) => linalg::kron(&self.adag, &self.id_b),
            Some(false) => linalg::kron(&self.id_a, &self.bdag),
            None => linalg::kron(&self.id_a, &self.id_b),
        };
        let term = linalg::kron(&field, &sigma);
        self.h += &term;
        self.h += term.adjoint();
        Ok(())
    }

    /// `coef·σ_jj`
    fn energy(&mut self, coef: f64, j: Level) -> Result<()> {
        let sigma = self.flip(j, j)? * C64::new(coef, 0.0);
        self.h += linalg::kron(&linalg::kron(&self.id_a, &self.id_b), &sigma);
        Ok(())
    }

    fn finish(self) -> Result<Operator> {
        let mut h = self.h;
        linalg::hermitize(&mut h);
        Operator::hermitian(Space::Product(self.spec.clone()), h)
    }
}

/// `g_aτ₁(a†σ₁₃ + h.c.) + g_bτ₁(b†σ₂₃ + h.c.)` on resonance, units of `1/τ₁`.
pub fn build_hamiltonian_l1(params: &SchemeL1Params, spec: &HilbertSpec) -> Result<Operator> {
    require_levels(spec, &SchemeL1Params::LEVELS)?;
    let mut t = TermBuilder::new(spec)?;
    t.exchange(params.g_a_tau1, Some(true), Level::One, Level::Three)?;
    t.exchange(params.g_b_tau1, Some(false), Level::Two, Level::Three)?;
    t.finish()
}

/// Ladder Hamiltonian plus the variant correction, units of `1/τ₂`:
/// `Δσ₂'₂' + g_a'(a†σ₁'₂' + h.c.) + g_b'(b†σ₂'₃' + h.c.) + Ω(σ₁'₃' + h.c.)`.
pub fn build_hamiltonian_l2(params: &SchemeL2Params, spec: &HilbertSpec) -> Result<Operator> {
    params.validate()?;
    require_levels(spec, &params.levels())?;
    let delta = params.delta_tau2();
    let mut t = TermBuilder::new(spec)?;
    t.energy(delta, Level::TwoPrime)?;
    t.exchange(params.ga_tau2(), Some(true), Level::OnePrime, Level::TwoPrime)?;
    t.exchange(params.gb_tau2, Some(false), Level::TwoPrime, Level::ThreePrime)?;
    t.exchange(params.omega_tau2, None, Level::OnePrime, Level::ThreePrime)?;
    match params.variant {
        L2Variant::Bare => {}
        L2Variant::HPrime { ga2_over_gb, deltap_over_delta } => {
            t.energy(delta * deltap_over_delta, Level::E)?;
            t.exchange(ga2_over_gb * params.gb_tau2, Some(true), Level::OnePrime, Level::E)?;
        }
        L2Variant::HAux { g_aux_over_gb, delta_aux_over_delta, .. } => {
            t.energy(delta * delta_aux_over_delta, Level::TwoAux)?;
            t.exchange(g_aux_over_gb * params.gb_tau2, Some(true), Level::OneAux, Level::TwoAux)?;
        }
    }
    t.finish()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CancellationReport {
    /// Net Stark coefficient of mode A in units of `1/τ₂`.
    pub residual: f64,
    /// Sum of the magnitudes of the cancelling terms.
    pub scale: f64,
    pub relative: f64,
    pub pass: bool,
}

pub const CANCELLATION_TOL: f64 = 1e-12;

/// Residual of the Stark-shift cancellation of the `h'` or `h_aux` variant:
/// `g_a'²/Δ + g_a''²/Δ'` or `cos²φ g_a'²/Δ + sin²φ g_aux²/Δ_aux`.
pub fn cancellation_check(params: &SchemeL2Params) -> Result<CancellationReport> {
    let ga = params.ga_tau2();
    let delta = params.delta_tau2();
    let bare = ga * ga / delta;
    let (first, second) = match params.variant {
        L2Variant::Bare => return Err(Error::NotApplicable("the bare scheme has no cancellation condition".into())),
        L2Variant::HPrime { ga2_over_gb, deltap_over_delta } => {
            let g = ga2_over_gb * params.gb_tau2;
            (bare, g * g / (delta * deltap_over_delta))
        }
        L2Variant::HAux { g_aux_over_gb, delta_aux_over_delta, phi } => {
            let g = g_aux_over_gb * params.gb_tau2;
            let c = libm::cos(phi);
            let s = libm::sin(phi);
            (c * c * bare, s * s * g * g / (delta * delta_aux_over_delta))
        }
    };
    let residual = first + second;
    let scale = first.abs() + second.abs();
    let relative = if scale > 0.0 { residual.abs() / scale } else { 0.0 };
    Ok(CancellationReport { residual, scale, relative, pass: relative <= CANCELLATION_TOL })
}

/// Principal square root of `α² = ΩΔ/(g_a'g_b')`; a negative detuning
/// gives a purely imaginary `α`.
pub fn alpha_from_drive(params: &SchemeL2Params) -> C64 {
    let alpha_sq = params.omega_tau2 * params.delta_tau2() / (params.ga_tau2() * params.gb_tau2);
    C64::new(alpha_sq, 0.0).sqrt()
}
