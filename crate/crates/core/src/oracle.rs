//! Independent cross-checks: the ideal master equation, the perturbative
//! single-atom maps, and the dark subspace of the jump operators.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Matrix4, Vector4};

use crate::dynamics::{self, dissipator, transit_propagator};
use crate::error::{invalid, numeric, Error, Result};
use crate::fock::{self, cat_state, coherent_product, jump_operators, odd_cat_state};
use crate::linalg::{self, CMatrix, C64};
use crate::observables::{FieldObservables, TrajectoryRecord};
use crate::protocol::event::TransitMap;
use crate::protocol::scheme::{alpha_from_drive, AtomScheme, L1InitialState, L2Variant, SchemeL1Params, SchemeL2Params};
use crate::space::{HilbertSpec, Space};
use crate::state::{DensityMatrix, Operator, StateVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealOptions {
    /// RK4 step; by default half the largest stable step.
    pub dt: Option<f64>,
    pub sample_interval: f64,
}

impl Default for IdealOptions {
    fn default() -> Self {
        Self { dt: None, sample_interval: 1.0 }
    }
}

fn field_of(rho: &DensityMatrix) -> Result<HilbertSpec> {
    match rho.space() {
        Space::Product(spec) if !spec.has_atom() => Ok(spec.clone()),
        _ => Err(invalid("expected a field-space density matrix")),
    }
}

/// RK4 integration of `γ₁D[C₁] + γ₂D[C₂] + κ(D[a] + D[b])` from `rho0`.
pub fn ideal_evolution(
    alpha: C64,
    gamma1: f64,
    gamma2: f64,
    kappa: f64,
    rho0: &DensityMatrix,
    duration: f64,
    opts: IdealOptions,
) -> Result<TrajectoryRecord> {
    if !(duration >= 0.0) || !(opts.sample_interval > 0.0) {
        return Err(invalid("duration and sample interval must be positive"));
    }
    let field = field_of(rho0)?;
    let gen = dynamics::ideal_generator(alpha, gamma1, gamma2, kappa, &field)?;
    let obs = FieldObservables::for_cat(&field, alpha)?;

    let bound = gen.dissipative_rate_bound();
    let dt_max = match opts.dt {
        Some(dt) => dt,
        None if bound > 0.0 => 0.5 * dynamics::MAX_DECAY_PER_STEP / bound,
        None => opts.sample_interval,
    };
    let per_sample = libm::ceil(opts.sample_interval / dt_max - 1e-9).max(1.0) as usize;
    let dt = opts.sample_interval / per_sample as f64;
    let n_samples = libm::round(duration / opts.sample_interval) as usize;
    let total = n_samples as f64 * opts.sample_interval;

    let mut samples = Vec::with_capacity(n_samples + 1);
    let space = Space::Product(field.clone());
    let evo = dynamics::rk4_evolve_observed(&gen, rho0, total, dt, per_sample, |_, t, m| {
        let rho = DensityMatrix::new(space.clone(), m.clone())?;
        samples.push(obs.sample(&rho, t, 0)?);
        Ok(())
    })?;
    let state = evo.state;
    let min_eigenvalue = state.min_eigenvalue();
    let mut warnings = Vec::new();
    let edge = crate::observables::edge_population(&state)?;
    if edge > crate::protocol::run::LEAKAGE_WARN {
        warnings.push(format!("truncation warning: top-two Fock level population {edge:.3e} at t = {total}"));
    }
    Ok(TrajectoryRecord {
        samples,
        warnings,
        alpha,
        events_applied: 0,
        events_dropped: 0,
        max_event_trace_change: 0.0,
        max_event_parity_change: 0.0,
        min_eigenvalue,
        final_state: state,
    })
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct L1StepReport {
    /// Largest elementwise deviation per test state at the given couplings.
    pub differences: Vec<f64>,
    pub max_difference: f64,
    /// Same, with both couplings halved.
    pub halved_max_difference: f64,
    /// `log₂(max_difference / halved_max_difference)`, when both are resolvable.
    pub scaling_exponent: Option<f64>,
}

/// Below this a difference is treated as numerically zero.
const RESOLVABLE: f64 = 1e-14;

fn l1_differences(params: &SchemeL1Params, field: &HilbertSpec, states: &[DensityMatrix]) -> Result<Vec<f64>> {
    // the perturbative map is derived for atoms prepared in |−⟩
    let p = SchemeL1Params { initial_atom_state: L1InitialState::Minus, ..*params };
    let spec = p.spec(field.cutoff_a(), field.cutoff_b())?;
    let map = TransitMap::from_scheme(&p, &transit_propagator(&p.hamiltonian(&spec)?, 1.0)?)?;
    let (c_minus, _) = fock::collective_modes(field)?;
    let (ga, gb) = (p.g_a_tau1, p.g_b_tau1);
    let rate = ga * ga * gb * gb / (ga * ga + gb * gb);
    let mut out = Vec::with_capacity(states.len());
    for rho in states {
        let exact = map.apply(rho)?;
        let predicted = rho.matrix() + dissipator(&c_minus, rho)? * C64::new(rate, 0.0);
        out.push(max_abs(&(exact.matrix() - predicted)));
    }
    Ok(out)
}

/// Exact single-atom L1 map against `ρ + (g_a²g_b²/g²)τ₁² D[c₋]ρ`.
pub fn perturbative_step_check_l1(params: &SchemeL1Params, test_states: &[DensityMatrix]) -> Result<L1StepReport> {
    let first = test_states.first().ok_or_else(|| invalid("no test states"))?;
    let field = field_of(first)?;
    if test_states.iter().any(|r| r.space() != first.space()) {
        return Err(invalid("test states live on different spaces"));
    }
    let differences = l1_differences(params, &field, test_states)?;
    let halved = l1_differences(&params.with_couplings_scaled(0.5), &field, test_states)?;
    let max_difference = differences.iter().copied().fold(0.0, f64::max);
    let halved_max_difference = halved.iter().copied().fold(0.0, f64::max);
    let scaling_exponent = if max_difference > RESOLVABLE && halved_max_difference > RESOLVABLE {
        Some(libm::log2(max_difference / halved_max_difference))
    } else {
        None
    };
    Ok(L1StepReport { differences, max_difference, halved_max_difference, scaling_exponent })
}

/// Names of the four structures fitted by [`perturbative_step_check_l2`].
pub const L2_STRUCTURES: [&str; 4] =
    ["two-photon D[C2]", "Stark i[n_a, rho]", "one-photon loss D[a]", "two-photon dephasing [n_a,[n_a, rho]]"];

#[derive(Debug, Clone, PartialEq)]
pub struct L2StepReport {
    /// Least-squares coefficients of the structures in [`L2_STRUCTURES`].
    pub fitted: [f64; 4],
    /// Perturbative prediction for the same coefficients.
    pub predicted: [f64; 4],
    /// `‖Δρ − Σ c_k S_k‖_F` summed over test states.
    pub residual: f64,
    pub relative_residual: f64,
}

/// Single-branch coefficients `(stark, loss, θ)` for coupling `g` and detuning `d`, both times `τ`.
fn branch(g: f64, d: f64) -> (f64, f64, f64) {
    let r = g * g / (d * d);
    let s = libm::sin(0.5 * d);
    (r * (d - libm::sin(d)), 2.0 * r * s * s, g * g / d)
}

/// Perturbative coefficients of the L2 map, including the variant correction.
pub fn predicted_l2_coefficients(params: &SchemeL2Params) -> [f64; 4] {
    let d = params.delta_tau2();
    let ga = params.ga_tau2();
    let gb = params.gb_tau2;
    let x = ga * gb / d;
    let gamma20 = x * x / 8.0;
    let (stark, loss, theta) = branch(ga, d);
    match params.variant {
        L2Variant::Bare => [gamma20, stark, loss, -0.5 * theta * theta],
        L2Variant::HPrime { ga2_over_gb, deltap_over_delta } => {
            let (s2, l2, t2) = branch(ga2_over_gb * gb, d * deltap_over_delta);
            // both Stark phases act on the same atom, so they add before squaring
            [gamma20, stark + s2, loss + l2, -0.5 * (theta + t2) * (theta + t2)]
        }
        L2Variant::HAux { g_aux_over_gb, delta_aux_over_delta, phi } => {
            let (s2, l2, t2) = branch(g_aux_over_gb * gb, d * delta_aux_over_delta);
            let c = libm::cos(phi) * libm::cos(phi);
            let s = 1.0 - c;
            // the two branches end in orthogonal atomic states and mix incoherently
            [c * gamma20, c * stark + s * s2, c * loss + s * l2, -0.5 * (c * theta * theta + s * t2 * t2)]
        }
    }
}

/// Low-photon states on which the four L2 structures are independent.
pub fn default_l2_test_states(field: &HilbertSpec) -> Result<Vec<DensityMatrix>> {
    let space = Space::Product(field.clone());
    let mut out = vec![
        coherent_product(C64::new(0.6, 0.0), C64::new(0.0, 0.4), field)?.projector(),
        coherent_product(C64::new(0.3, -0.5), C64::new(0.7, 0.2), field)?.projector(),
        cat_state(C64::new(0.8, 0.0), field)?.projector(),
    ];
    let mut amps = linalg::CVector::zeros(field.field_dim());
    amps[field.field_index(0, 0)] = C64::new(0.6, 0.0);
    amps[field.field_index(1, 1)] = C64::new(0.0, 0.5);
    amps[field.field_index(2, 0)] = C64::new(0.5, 0.2);
    amps[field.field_index(1, 2)] = C64::new(-0.3, 0.0);
    out.push(StateVector::new(space, amps)?.normalized()?.projector());
    Ok(out)
}

/// Fit the exact single-atom L2 map onto the perturbative structures.
pub fn perturbative_step_check_l2(params: &SchemeL2Params, test_states: &[DensityMatrix]) -> Result<L2StepReport> {
    params.validate()?;
    let first = test_states.first().ok_or_else(|| invalid("no test states"))?;
    let field = field_of(first)?;
    if test_states.iter().any(|r| r.space() != first.space()) {
        return Err(invalid("test states live on different spaces"));
    }
    let spec = params.spec(field.cutoff_a(), field.cutoff_b())?;
    let map = TransitMap::from_scheme(params, &transit_propagator(&params.hamiltonian(&spec)?, 1.0)?)?;
    let alpha = alpha_from_drive(params);
    let (_, c2) = jump_operators(alpha, &field)?;
    let (a, _) = fock::mode_operators(&field)?;
    let (na, _) = fock::number_operators(&field)?;

    let mut columns: [Vec<f64>; 4] = Default::default();
    let mut target = Vec::new();
    let push = |dst: &mut Vec<f64>, m: &CMatrix| {
        for z in m.iter() {
            dst.push(z.re);
            dst.push(z.im);
        }
    };
    for rho in test_states {
        let delta = map.apply(rho)?.matrix() - rho.matrix();
        push(&mut target, &delta);
        let stark = linalg::commutator(na.matrix(), rho.matrix()) * linalg::I;
        let nn = linalg::commutator(na.matrix(), &linalg::commutator(na.matrix(), rho.matrix()));
        push(&mut columns[0], &dissipator(&c2, rho)?);
        push(&mut columns[1], &stark);
        push(&mut columns[2], &dissipator(&a, rho)?);
        push(&mut columns[3], &nn);
    }

    // normal equations on column-normalized structures
    let norms: Vec<f64> = columns.iter().map(|c| libm::sqrt(c.iter().map(|x| x * x).sum::<f64>())).collect();
    if norms.iter().any(|&n| !(n > 0.0)) {
        return Err(numeric("a fitted structure vanishes on every test state"));
    }
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let gram = Matrix4::from_fn(|i, j| dot(&columns[i], &columns[j]) / (norms[i] * norms[j]));
    let rhs = Vector4::from_fn(|i, _| dot(&columns[i], &target) / norms[i]);
    let eig = gram.symmetric_eigenvalues();
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    if !(lo > 1e-12 * hi) {
        return Err(numeric(format!("perturbative structures are degenerate on the test states (condition {lo:.3e}/{hi:.3e})")));
    }
    let sol = gram.cholesky().ok_or_else(|| numeric("fit matrix is not positive definite"))?.solve(&rhs);
    let fitted = [sol[0] / norms[0], sol[1] / norms[1], sol[2] / norms[2], sol[3] / norms[3]];

    let mut residual_sq = 0.0;
    for (i, t) in target.iter().enumerate() {
        let model: f64 = (0..4).map(|k| fitted[k] * columns[k][i]).sum();
        residual_sq += (t - model) * (t - model);
    }
    let target_norm = libm::sqrt(dot(&target, &target));
    let residual = libm::sqrt(residual_sq);
    Ok(L2StepReport {
        fitted,
        predicted: predicted_l2_coefficients(params),
        residual,
        relative_residual: if target_norm > 0.0 { residual / target_norm } else { 0.0 },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DarkCandidate {
    pub name: &'static str,
    /// `‖C₁|φ⟩‖`
    pub c1_residual: f64,
    /// `‖C₂|φ⟩‖`
    pub c2_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DarkSubspaceReport {
    pub candidates: Vec<DarkCandidate>,
    /// `⟨Π₊⟩` of the even cat.
    pub even_parity: f64,
    /// `⟨Π₊⟩` of the odd cat; `None` when the odd cat vanishes (α = 0).
    pub odd_parity: Option<f64>,
    /// Whether all four candidates coincide with the vacuum.
    pub collapsed: bool,
    pub tolerance: f64,
    pub pass: bool,
    pub failures: Vec<String>,
}

pub const DARK_TOL: f64 = 1e-6;

/// Check that `|α,α⟩`, `|−α,−α⟩` and both cats are annihilated by `C₁` and `C₂`
/// and that the cats carry parity ±1.
pub fn dark_subspace_check(alpha: C64, spec: &HilbertSpec) -> Result<DarkSubspaceReport> {
    let field = spec.field_part();
    let (c1, c2) = jump_operators(alpha, &field)?;
    let pi = fock::parity_plus(&field)?;
    let residual = |op: &Operator, psi: &StateVector| -> Result<f64> { Ok(op.apply(psi)?.norm()) };

    let plus = coherent_product(alpha, alpha, &field)?;
    let minus = coherent_product(-alpha, -alpha, &field)?;
    let even = cat_state(alpha, &field)?;
    let odd = match odd_cat_state(alpha, &field) {
        Ok(s) => Some(s),
        Err(Error::Numeric(_)) => None,
        Err(e) => return Err(e),
    };

    let mut candidates = Vec::new();
    let mut list: Vec<(&'static str, &StateVector)> = vec![("|alpha,alpha>", &plus), ("|-alpha,-alpha>", &minus), ("even cat", &even)];
    if let Some(o) = &odd {
        list.push(("odd cat", o));
    }
    for (name, psi) in list {
        candidates.push(DarkCandidate { name, c1_residual: residual(&c1, psi)?, c2_residual: residual(&c2, psi)? });
    }
    let expect = |psi: &StateVector| -> Result<f64> { Ok(psi.inner(&pi.apply(psi)?)?.re) };
    let even_parity = expect(&even)?;
    let odd_parity = match &odd {
        Some(o) => Some(expect(o)?),
        None => None,
    };
    let collapsed = alpha.norm() == 0.0;

    let mut failures = Vec::new();
    for c in &candidates {
        if c.c1_residual >= DARK_TOL || c.c2_residual >= DARK_TOL {
            failures.push(format!("{}: residuals {:.3e}, {:.3e}", c.name, c.c1_residual, c.c2_residual));
        }
    }
    if (even_parity - 1.0).abs() >= DARK_TOL {
        failures.push(format!("even cat parity {even_parity}"));
    }
    if let Some(p) = odd_parity {
        if (p + 1.0).abs() >= DARK_TOL {
            failures.push(format!("odd cat parity {p}"));
        }
    }
    if collapsed && odd_parity.is_some() {
        failures.push(String::from("odd cat should vanish at alpha = 0"));
    }
    Ok(DarkSubspaceReport { candidates, even_parity, odd_parity, collapsed, tolerance: DARK_TOL, pass: failures.is_empty(), failures })
}
