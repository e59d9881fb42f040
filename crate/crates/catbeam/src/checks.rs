//! The invariant suite behind `catbeam check`.

use catbeam_core::dynamics::{ideal_generator, steady_state_residual};
use catbeam_core::fock::{self, cat_state, collective_modes, jump_operators, low_photon_indices};
use catbeam_core::oracle::{
    dark_subspace_check, default_l2_test_states, ideal_evolution, perturbative_step_check_l1, perturbative_step_check_l2, IdealOptions,
};
use catbeam_core::protocol::{cancellation_check, effective_rates, L2Variant, SchemeL2Params};
use catbeam_core::{HilbertSpec, Space, StateVector};

use crate::config::RunConfig;

/// Residual bound on `‖(L₁+L₂)ρ∞‖` with unit rates.
pub const FIXED_POINT_TOL: f64 = 1e-5;
/// Bound on `‖[Π₊, C_j]‖` restricted to states away from the truncation edge.
pub const COMMUTATOR_TOL: f64 = 1e-10;
/// Allowed parity drift of an ideal trajectory from the vacuum.
pub const PARITY_DRIFT_TOL: f64 = 1e-6;
/// Required Stark-line suppression of a corrected L2 scheme relative to the bare one.
pub const STARK_SUPPRESSION: f64 = 1e3;

/// Cutoff and duration of the short ideal run used for the parity check.
const PARITY_RUN_CUTOFF: usize = 8;
const PARITY_RUN_DURATION: f64 = 200.0;
/// Field used for the single-atom map checks.
const MAP_CHECK_CUTOFF: usize = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, pass: bool, detail: String) -> Self {
        Self { name, pass, detail }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

type Check<'a> = (&'static str, Box<dyn Fn() -> catbeam_core::Result<CheckOutcome> + 'a>);

/// Run every check; an error inside one check becomes a failure of that check.
pub fn run_checks(config: &RunConfig) -> Vec<CheckOutcome> {
    let p = &config.protocol;
    let checks: [Check; 7] = [
        ("dark subspace", Box::new(|| dark(config))),
        ("parity commutes with jumps", Box::new(|| commutation(config))),
        ("cat is a fixed point", Box::new(|| fixed_point(config))),
        ("ideal dynamics keep parity", Box::new(|| ideal_parity(config))),
        ("stark cancellation", Box::new(|| cancellation(&p.l2))),
        ("L1 map error scaling", Box::new(|| l1_scaling(config))),
        ("L2 map structures", Box::new(|| l2_structures(&p.l2))),
    ];
    checks.iter().map(|(name, check)| check().unwrap_or_else(|e| CheckOutcome::new(name, false, e.to_string()))).collect()
}

fn field(config: &RunConfig) -> catbeam_core::Result<HilbertSpec> {
    config.protocol.field()
}

fn dark(config: &RunConfig) -> catbeam_core::Result<CheckOutcome> {
    let r = dark_subspace_check(config.alpha(), &field(config)?)?;
    let worst = r.candidates.iter().map(|c| c.c1_residual.max(c.c2_residual)).fold(0.0, f64::max);
    let odd = r.odd_parity.map_or_else(|| "n/a".to_string(), |x| format!("{x:.9}"));
    let mut detail = format!("max residual {worst:.3e}, even parity {:.9}, odd parity {odd}", r.even_parity);
    if !r.failures.is_empty() {
        detail.push_str(&format!(" ({})", r.failures.join("; ")));
    }
    Ok(CheckOutcome::new("dark subspace", r.pass, detail))
}

fn commutation(config: &RunConfig) -> catbeam_core::Result<CheckOutcome> {
    let field = field(config)?;
    let (c1, c2) = jump_operators(config.alpha(), &field)?;
    let pi = fock::parity_plus(&field)?;
    let inner = low_photon_indices(&field, field.cutoff_a().min(field.cutoff_b()).saturating_sub(1));
    let mut worst = 0.0f64;
    for c in [&c1, &c2] {
        let comm = pi.commutator(c);
        for &j in &inner {
            worst = worst.max(comm.matrix().column(j).norm());
        }
    }
    Ok(CheckOutcome::new("parity commutes with jumps", worst < COMMUTATOR_TOL, format!("max commutator column {worst:.3e}")))
}

fn fixed_point(config: &RunConfig) -> catbeam_core::Result<CheckOutcome> {
    let field = field(config)?;
    let alpha = config.alpha();
    let gen = ideal_generator(alpha, 1.0, 1.0, 0.0, &field)?;
    let rho = cat_state(alpha, &field)?.projector();
    let res = steady_state_residual(&gen, &rho)?;
    Ok(CheckOutcome::new("cat is a fixed point", res < FIXED_POINT_TOL, format!("|(L1+L2) rho_inf| = {res:.3e} at unit rates")))
}

fn ideal_parity(config: &RunConfig) -> catbeam_core::Result<CheckOutcome> {
    let p = &config.protocol;
    let rates = effective_rates(&p.l1, &p.l2, &p.tau_distribution)?;
    let cutoff = PARITY_RUN_CUTOFF.min(p.cutoff_a).min(p.cutoff_b);
    let small = HilbertSpec::field(cutoff, cutoff)?;
    let vac = StateVector::basis(Space::Product(small), 0)?.projector();
    let opts = IdealOptions { dt: None, sample_interval: PARITY_RUN_DURATION / 10.0 };
    let rec = ideal_evolution(config.alpha(), rates.gamma1, rates.gamma2, 0.0, &vac, PARITY_RUN_DURATION, opts)?;
    let drift = rec.samples.iter().map(|s| (s.parity - 1.0).abs()).fold(0.0, f64::max);
    Ok(CheckOutcome::new(
        "ideal dynamics keep parity",
        drift < PARITY_DRIFT_TOL,
        format!("max |<Pi+> - 1| = {drift:.3e} over t <= {PARITY_RUN_DURATION} at cutoff {cutoff}"),
    ))
}

fn cancellation(l2: &SchemeL2Params) -> catbeam_core::Result<CheckOutcome> {
    if l2.variant == L2Variant::Bare {
        return Ok(CheckOutcome::new("stark cancellation", true, "skipped for the bare variant".into()));
    }
    let r = cancellation_check(l2)?;
    Ok(CheckOutcome::new("stark cancellation", r.pass, format!("relative residual {:.3e}", r.relative)))
}

fn l1_scaling(config: &RunConfig) -> catbeam_core::Result<CheckOutcome> {
    let field = HilbertSpec::field(4, 4)?;
    let (c_minus, _) = collective_modes(&field)?;
    let one = c_minus.adjoint().apply(&StateVector::basis(Space::Product(field), 0)?)?;
    let r = perturbative_step_check_l1(&config.protocol.l1, &[one.projector()])?;
    let pass = r.scaling_exponent.is_some_and(|e| (e - 4.0).abs() <= 1.0);
    let e = r.scaling_exponent.map_or_else(|| "unresolved".to_string(), |e| format!("{e:.3}"));
    Ok(CheckOutcome::new("L1 map error scaling", pass, format!("max difference {:.3e}, exponent {e}", r.max_difference)))
}

fn l2_structures(l2: &SchemeL2Params) -> catbeam_core::Result<CheckOutcome> {
    let field = HilbertSpec::field(MAP_CHECK_CUTOFF, MAP_CHECK_CUTOFF)?;
    let states = default_l2_test_states(&field)?;
    let r = perturbative_step_check_l2(l2, &states)?;
    let g0 = r.predicted[0];
    let rate_ok = (r.fitted[0] - g0).abs() <= 0.2 * g0;
    let mut detail = format!("two-photon coefficient {:.4e} vs predicted {g0:.4e}", r.fitted[0]);
    let mut pass = rate_ok;
    if l2.variant != L2Variant::Bare {
        let bare = perturbative_step_check_l2(&SchemeL2Params { variant: L2Variant::Bare, ..*l2 }, &states)?;
        let ratio = bare.fitted[1].abs() / r.fitted[1].abs();
        pass &= ratio >= STARK_SUPPRESSION;
        detail.push_str(&format!(", stark line suppressed {ratio:.3e}x"));
    }
    Ok(CheckOutcome::new("L2 map structures", pass, detail))
}
