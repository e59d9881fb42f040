//! Event-driven simulation of the cavity pumped by both beams.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::dynamics::{self, Generator, HamiltonianSpectrum};
use crate::error::{invalid, numeric, Result};
use crate::fock;
use crate::linalg::{self, SparseMatrix, C64};
use crate::observables::{self, FieldObservables, TrajectoryRecord};
use crate::protocol::event::TransitMap;
use crate::protocol::rates::{TauDistribution, TauKind};
use crate::protocol::schedule::{make_schedule, AtomType, BeamRequest, BeamSchedule, ScheduleMode};
use crate::protocol::scheme::{alpha_from_drive, AtomScheme, Regime, SchemeL1Params, SchemeL2Params};
use crate::space::{HilbertSpec, Space};
use crate::state::{DensityMatrix, StateVector, DENSITY_MIN_EIGENVALUE};

/// Per-atom trace change above which a run is aborted.
pub const EVENT_TRACE_TOL: f64 = 1e-12;
/// Top-two-Fock-level population that triggers a truncation warning.
pub const LEAKAGE_WARN: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayMethod {
    /// Closed-form amplitude damping.
    Exact,
    /// RK4 integration of `κ(D[a] + D[b])` with the given step.
    Rk4 { dt: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayTiming {
    /// No decay while an atom is inside; the field decays in the gaps.
    BetweenEvents,
    /// Decay also during a transit, split symmetrically around the atom map.
    DuringTransit,
}

/// Everything a protocol run needs. Times are in units of the inverse injection rate.
#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    pub cutoff_a: usize,
    pub cutoff_b: usize,
    pub l1: SchemeL1Params,
    pub l2: SchemeL2Params,
    pub tau_distribution: TauDistribution,
    pub schedule_mode: ScheduleMode,
    pub seed: u64,
    pub horizon: f64,
    /// Nominal L1 transit time.
    pub tau1: f64,
    /// Nominal L2 transit time.
    pub tau2: f64,
    /// `κ/r`
    pub kappa: f64,
    pub sample_interval: f64,
    pub decay_method: DecayMethod,
    pub decay_timing: DecayTiming,
    /// Check positivity of ρ after every this many atoms.
    pub positivity_every: usize,
    /// Overrides the cat amplitude implied by the L2 drive.
    pub target_alpha: Option<C64>,
    /// Defaults to the field vacuum.
    pub initial_state: Option<DensityMatrix>,
}

impl ProtocolConfig {
    pub fn new(l1: SchemeL1Params, l2: SchemeL2Params) -> Self {
        Self {
            cutoff_a: 16,
            cutoff_b: 16,
            l1,
            l2,
            tau_distribution: TauDistribution::delta(),
            schedule_mode: ScheduleMode::Poisson,
            seed: 0,
            horizon: 1000.0,
            tau1: 1e-3,
            tau2: 1e-3,
            kappa: 0.0,
            sample_interval: 1.0,
            decay_method: DecayMethod::Exact,
            decay_timing: DecayTiming::BetweenEvents,
            positivity_every: 100,
            target_alpha: None,
            initial_state: None,
        }
    }

    pub fn field(&self) -> Result<HilbertSpec> {
        HilbertSpec::field(self.cutoff_a, self.cutoff_b)
    }

    pub fn alpha(&self) -> C64 {
        self.target_alpha.unwrap_or_else(|| alpha_from_drive(&self.l2))
    }

    pub fn beam_request(&self) -> BeamRequest {
        BeamRequest {
            r1: self.l1.r1,
            r2: self.l2.r2,
            horizon: self.horizon,
            mode: self.schedule_mode,
            seed: self.seed,
            tau1: self.tau1,
            tau2: self.tau2,
            dist: self.tau_distribution,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.l1.validate()?;
        self.l2.validate()?;
        self.tau_distribution.validate()?;
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return Err(invalid("kappa must be finite and non-negative"));
        }
        if !(self.sample_interval > 0.0) || !self.sample_interval.is_finite() {
            return Err(invalid("sample interval must be positive"));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(invalid("horizon must be positive"));
        }
        if !(self.tau1 >= 0.0 && self.tau2 >= 0.0) {
            return Err(invalid("transit times must be non-negative"));
        }
        if self.positivity_every == 0 {
            return Err(invalid("positivity check interval must be at least 1"));
        }
        if let DecayMethod::Rk4 { dt } = self.decay_method {
            if !(dt > 0.0) {
                return Err(invalid("RK4 decay step must be positive"));
            }
        }
        Ok(())
    }
}

/// Collects each distinct warning once.
#[derive(Default)]
struct Warnings {
    seen: BTreeSet<String>,
    list: Vec<String>,
}

impl Warnings {
    fn push(&mut self, key: &str, message: String) {
        if self.seen.insert(String::from(key)) {
            log::warn!("{message}");
            self.list.push(message);
        }
    }
}

struct FieldDecay {
    kappa: f64,
    method: DecayMethod,
    generator: Option<Generator>,
}

impl FieldDecay {
    fn new(field: &HilbertSpec, kappa: f64, method: DecayMethod) -> Result<Self> {
        let generator = match method {
            DecayMethod::Rk4 { .. } if kappa > 0.0 => Some(Generator::new(Space::Product(field.clone())).with_cavity_decay(kappa)?),
            _ => None,
        };
        Ok(Self { kappa, method, generator })
    }

    fn advance(&self, rho: &mut DensityMatrix, duration: f64) -> Result<()> {
        if self.kappa == 0.0 || duration <= 0.0 {
            return Ok(());
        }
        match (self.method, &self.generator) {
            (DecayMethod::Rk4 { dt }, Some(gen)) => {
                *rho = dynamics::rk4_evolve(gen, rho, duration, dt)?.state;
                Ok(())
            }
            _ => dynamics::damp_field(rho, self.kappa, duration),
        }
    }
}

/// Transit maps of one beam: cached when every transit has the same length.
struct Beam {
    spectrum: HamiltonianSpectrum,
    atom: StateVector,
    fixed: Option<(f64, TransitMap)>,
}

impl Beam {
    fn new<S: AtomScheme>(scheme: &S, field: &HilbertSpec, fixed_factor: Option<f64>) -> Result<Self> {
        let spec = scheme.spec(field.cutoff_a(), field.cutoff_b())?;
        let spectrum = HamiltonianSpectrum::new(&scheme.hamiltonian(&spec)?)?;
        let atom = scheme.atom_state()?;
        let fixed = match fixed_factor {
            Some(x) => Some((x, TransitMap::new(&spectrum.propagator(x)?, &atom)?)),
            None => None,
        };
        Ok(Self { spectrum, atom, fixed })
    }

    fn apply(&self, rho: &DensityMatrix, tau_factor: f64) -> Result<DensityMatrix> {
        match &self.fixed {
            Some((x, map)) if *x == tau_factor => map.apply(rho),
            _ => TransitMap::new(&self.spectrum.propagator(tau_factor)?, &self.atom)?.apply(rho),
        }
    }
}

fn sparse_expectation(op: &SparseMatrix, rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    op.entries().map(|(i, j, v)| v * m[(j, i)]).sum::<C64>().re
}

/// Draw the schedule from the config and run it.
pub fn run_protocol(config: &ProtocolConfig) -> Result<TrajectoryRecord> {
    config.validate()?;
    let schedule = make_schedule(&config.beam_request())?;
    run_protocol_with_schedule(config, &schedule)
}

/// Run a given event list; decay, sampling and checks follow `config`.
pub fn run_protocol_with_schedule(config: &ProtocolConfig, schedule: &BeamSchedule) -> Result<TrajectoryRecord> {
    config.validate()?;
    let field = config.field()?;
    let alpha = config.alpha();
    let obs = FieldObservables::for_cat(&field, alpha)?;
    let decay = FieldDecay::new(&field, config.kappa, config.decay_method)?;

    let has = |ty| schedule.events.iter().any(|e| e.atom_type == ty);
    let beam1 = if has(AtomType::L1) { Some(Beam::new(&config.l1, &field, Some(1.0))?) } else { None };
    let fixed2 = match config.tau_distribution.kind {
        TauKind::Delta => Some(config.tau_distribution.mean),
        _ => None,
    };
    let beam2 = if has(AtomType::L2) { Some(Beam::new(&config.l2, &field, fixed2)?) } else { None };

    let n_minus = {
        let (cm, _) = fock::collective_modes(&field)?;
        SparseMatrix::from_dense(&(cm.adjoint().matrix() * cm.matrix()), 0.0)
    };

    let mut rho = match &config.initial_state {
        Some(r) => {
            if r.space() != &Space::Product(field.clone()) {
                return Err(invalid("initial state does not live on the configured field space"));
            }
            r.clone()
        }
        None => StateVector::basis(Space::Product(field.clone()), 0)?.projector(),
    };

    let mut warnings = Warnings::default();
    let mut samples = Vec::new();
    let mut now = 0.0;
    let mut sample_k = 0usize;
    let mut applied = 0usize;
    let mut max_trace = 0.0f64;
    let mut max_parity = 0.0f64;
    let mut min_eig = f64::INFINITY;

    let mut record = |rho: &DensityMatrix, t: f64, applied: usize, warnings: &mut Warnings| -> Result<()> {
        let s = obs.sample(rho, t, applied)?;
        let edge = observables::edge_population(rho)?;
        if edge > LEAKAGE_WARN {
            warnings.push("truncation", format!("truncation warning: top-two Fock level population {edge:.3e} at t = {t}"));
        }
        let nm = sparse_expectation(&n_minus, rho);
        let mut checks = config.l1.inequalities(nm, config.tau1);
        checks.extend(config.l2.inequalities(s.n_a, s.n_b, config.tau2));
        for c in checks {
            if c.regime() == Regime::Violated {
                warnings.push(c.description, format!("validity warning: {} violated (value {:.3e}) at t = {t}", c.description, c.value));
            }
        }
        samples.push(s);
        Ok(())
    };

    let interval = config.sample_interval;
    let sample_time = |k: usize| k as f64 * interval;
    let horizon_edge = schedule.horizon * (1.0 + 1e-12);

    for (idx, ev) in schedule.events.iter().enumerate() {
        while sample_time(sample_k) <= ev.arrival_time && sample_time(sample_k) <= horizon_edge {
            let t = sample_time(sample_k);
            if t > now {
                decay.advance(&mut rho, t - now)?;
                now = t;
            }
            record(&rho, t, applied, &mut warnings)?;
            sample_k += 1;
        }
        if ev.arrival_time > now {
            decay.advance(&mut rho, ev.arrival_time - now)?;
        }
        let half = 0.5 * ev.transit_time;
        if config.decay_timing == DecayTiming::DuringTransit {
            decay.advance(&mut rho, half)?;
        }

        let tr0 = rho.trace();
        let p0 = obs.parity(&rho);
        let beam = match ev.atom_type {
            AtomType::L1 => beam1.as_ref(),
            AtomType::L2 => beam2.as_ref(),
        }
        .expect("beam built for every atom type present");
        rho = beam.apply(&rho, ev.tau_factor)?;
        let dtr = (rho.trace() - tr0).norm();
        if dtr > EVENT_TRACE_TOL {
            return Err(numeric(format!("atom {idx} changed the trace by {dtr:.3e}")));
        }
        max_trace = max_trace.max(dtr);
        max_parity = max_parity.max((obs.parity(&rho) - p0).abs());
        applied += 1;

        if config.decay_timing == DecayTiming::DuringTransit {
            decay.advance(&mut rho, half)?;
        }
        now = ev.arrival_time + ev.transit_time;

        if applied.is_multiple_of(config.positivity_every) {
            let e = rho.min_eigenvalue();
            min_eig = min_eig.min(e);
            if e < DENSITY_MIN_EIGENVALUE {
                return Err(numeric(format!("field state lost positivity (eigenvalue {e:.3e}) after atom {idx}")));
            }
        }
    }
    while sample_time(sample_k) <= horizon_edge {
        let t = sample_time(sample_k);
        if t > now {
            decay.advance(&mut rho, t - now)?;
            now = t;
        }
        record(&rho, t, applied, &mut warnings)?;
        sample_k += 1;
    }
    if !min_eig.is_finite() {
        min_eig = rho.min_eigenvalue();
    }
    linalg::hermitize(rho.matrix_mut());

    Ok(TrajectoryRecord {
        samples,
        warnings: warnings.list,
        alpha,
        events_applied: applied,
        events_dropped: schedule.dropped,
        max_event_trace_change: max_trace,
        max_event_parity_change: max_parity,
        min_eigenvalue: min_eig,
        final_state: rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::schedule::AtomEvent;
    use crate::protocol::scheme::L2Variant;

    fn config() -> ProtocolConfig {
        let l1 = SchemeL1Params::new(0.1, 0.1, 1.0).unwrap();
        let l2 = SchemeL2Params {
            gb_tau2: 100.0,
            gb_over_delta: 1e-3,
            ga_over_gb: 1.0,
            omega_tau2: 0.1,
            r2: 1.0,
            variant: L2Variant::matched_h_prime(1.0),
        };
        let mut c = ProtocolConfig::new(l1, l2);
        c.cutoff_a = 8;
        c.cutoff_b = 8;
        c
    }

    fn empty_schedule(horizon: f64) -> BeamSchedule {
        BeamSchedule { events: Vec::new(), horizon, mode: ScheduleMode::Poisson, seed: 0, dropped: 0 }
    }

    #[test]
    fn free_decay_of_one_photon() {
        let mut c = config();
        c.kappa = 0.05;
        c.horizon = 10.0;
        let field = c.field().unwrap();
        c.initial_state = Some(StateVector::basis(Space::Product(field.clone()), field.field_index(1, 0)).unwrap().projector());
        let rec = run_protocol_with_schedule(&c, &empty_schedule(10.0)).unwrap();
        assert_eq!(rec.samples.len(), 11);
        for s in &rec.samples {
            assert!((s.n_a - libm::exp(-2.0 * 0.05 * s.time)).abs() < 1e-12);
        }
        c.decay_method = DecayMethod::Rk4 { dt: 0.01 };
        let rk = run_protocol_with_schedule(&c, &empty_schedule(10.0)).unwrap();
        for (a, b) in rec.samples.iter().zip(&rk.samples) {
            assert!((a.n_a - b.n_a).abs() < 1e-9);
        }
    }

    #[test]
    fn samples_count_events_before_them() {
        let c = config();
        let events = alloc::vec![
            AtomEvent { arrival_time: 0.5, atom_type: AtomType::L1, transit_time: 1e-3, tau_factor: 1.0 },
            AtomEvent { arrival_time: 1.5, atom_type: AtomType::L2, transit_time: 1e-3, tau_factor: 1.0 },
            AtomEvent { arrival_time: 1.7, atom_type: AtomType::L2, transit_time: 1e-3, tau_factor: 1.0 },
        ];
        let sched = BeamSchedule { events, ..empty_schedule(3.0) };
        let rec = run_protocol_with_schedule(&c, &sched).unwrap();
        let idx: Vec<usize> = rec.samples.iter().map(|s| s.event_index).collect();
        assert_eq!(idx, alloc::vec![0, 1, 3, 3]);
        assert_eq!(rec.events_applied, 3);
        // mostly photon pairs; single-photon emission is suppressed by (g'/Δ)²
        assert!(rec.samples[2].n_a > 0.0);
        assert!((rec.samples[2].parity - 1.0).abs() < 1e-4);
    }

    #[test]
    fn beams_raise_fidelity_from_vacuum() {
        let mut c = config();
        c.horizon = 200.0;
        c.sample_interval = 50.0;
        c.schedule_mode = ScheduleMode::Uniform;
        let rec = run_protocol(&c).unwrap();
        let first = rec.samples.first().unwrap().fidelity;
        let last = rec.samples.last().unwrap().fidelity;
        assert!(last > first + 0.05, "{first} -> {last}");
        assert!(rec.max_event_trace_change < EVENT_TRACE_TOL);
        assert!(rec.min_eigenvalue > DENSITY_MIN_EIGENVALUE);
        assert!(rec.warnings.is_empty(), "{:?}", rec.warnings);
    }

    #[test]
    fn jittered_transits_build_maps_per_event() {
        let mut c = config();
        c.horizon = 20.0;
        c.sample_interval = 10.0;
        c.tau_distribution = TauDistribution::gaussian(0.05);
        let a = run_protocol(&c).unwrap();
        let b = run_protocol(&c).unwrap();
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn leakage_is_reported() {
        let mut c = config();
        c.cutoff_a = 3;
        c.cutoff_b = 3;
        c.target_alpha = Some(C64::new(0.5, 0.0));
        c.horizon = 2.0;
        let field = c.field().unwrap();
        c.initial_state = Some(StateVector::basis(Space::Product(field.clone()), field.field_index(3, 0)).unwrap().projector());
        let rec = run_protocol_with_schedule(&c, &empty_schedule(2.0)).unwrap();
        assert!(rec.warnings.iter().any(|w| w.starts_with("truncation")));
    }

    #[test]
    fn bad_config_is_rejected() {
        let mut c = config();
        c.kappa = -1.0;
        assert!(run_protocol(&c).is_err());
    }
}
