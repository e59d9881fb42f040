//! Liouvillian generators, fixed-step integration and exact transit propagators.
//!
//! Conventions: `ħ = 1`, dissipators are written without the usual ½,
//! `D[C]ρ = 2CρC† − {C†C, ρ}`, and the cavity decay superoperator at rate
//! `κ` is `κ(D[a] + D[b])`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, numeric, Error, Result};
use crate::fock;
use crate::linalg::{self, BlockSpectrum, CMatrix, SparseMatrix, C64, I, ONE, ZERO};
use crate::space::{HilbertSpec, Space};
use crate::state::{DensityMatrix, Operator};

/// `2CρC† − {C†C, ρ}`
pub fn dissipator(jump: &Operator, rho: &DensityMatrix) -> Result<CMatrix> {
    if jump.space() != rho.space() {
        return Err(invalid("dissipator jump operator and state live on different spaces"));
    }
    let c = jump.matrix();
    let r = rho.matrix();
    let cdc = c.adjoint() * c;
    Ok(c * r * c.adjoint() * C64::new(2.0, 0.0) - linalg::anticommutator(&cdc, r))
}

/// Field lowering operators present in `space`.
fn field_lowering(space: &Space) -> Result<Vec<Operator>> {
    match space {
        Space::Mode(cutoff) => Ok(alloc::vec![fock::annihilation_op(*cutoff)?]),
        Space::Product(spec) => {
            let (a, b) = fock::mode_operators(spec)?;
            Ok(alloc::vec![a, b])
        }
        Space::Atom(_) => Err(invalid("cavity decay needs field modes")),
    }
}

/// `κ K ρ` with `K ρ = 2aρa† + 2bρb† − {a†a, ρ} − {b†b, ρ}`.
pub fn cavity_decay_term(rho: &DensityMatrix, kappa: f64) -> Result<CMatrix> {
    if !(kappa >= 0.0) {
        return Err(invalid("kappa must be non-negative"));
    }
    let mut out = CMatrix::zeros(rho.dim(), rho.dim());
    for a in field_lowering(rho.space())? {
        out += dissipator(&a, rho)? * C64::new(kappa, 0.0);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Channel {
    pub rate: f64,
    pub jump: Operator,
}

#[derive(Debug, Clone)]
struct CompiledChannel {
    rate: f64,
    jump: SparseMatrix,
    jump_dag_jump: SparseMatrix,
}

impl CompiledChannel {
    fn new(rate: f64, jump: &Operator) -> Self {
        let m = jump.matrix();
        Self { rate, jump: SparseMatrix::from_dense(m, 0.0), jump_dag_jump: SparseMatrix::from_dense(&(m.adjoint() * m), 0.0) }
    }
}

/// `Lρ = −i[H, ρ] + Σ_j γ_j D[C_j]ρ + κ(D[a] + D[b])ρ`.
#[derive(Debug, Clone)]
pub struct Generator {
    space: Space,
    hamiltonian: Option<Operator>,
    channels: Vec<Channel>,
    decay_kappa: f64,
    compiled: Vec<CompiledChannel>,
    /// `K = iH + Σ γ C†C`, so that `Lρ = −Kρ − ρK† + Σ 2γ CρC†`.
    effective: Option<SparseMatrix>,
}

impl Generator {
    /// The zero generator on `space`.
    pub fn new(space: Space) -> Self {
        Self { space, hamiltonian: None, channels: Vec::new(), decay_kappa: 0.0, compiled: Vec::new(), effective: None }
    }

    fn recompile(&mut self) {
        let dim = self.space.dim();
        let mut k = match &self.hamiltonian {
            Some(h) => h.matrix() * I,
            None => CMatrix::zeros(dim, dim),
        };
        for ch in &self.compiled {
            if ch.rate != 0.0 {
                ch.jump_dag_jump.add_mul_dense(&linalg::identity(dim), C64::new(ch.rate, 0.0), &mut k);
            }
        }
        self.effective = Some(SparseMatrix::from_dense(&k, 0.0));
    }

    pub fn with_hamiltonian(mut self, h: Operator) -> Result<Self> {
        if h.space() != &self.space {
            return Err(invalid("Hamiltonian lives on a different space than the generator"));
        }
        if linalg::hermitian_deviation(h.matrix()) > 1e-10 {
            return Err(invalid("Hamiltonian is not Hermitian"));
        }
        self.hamiltonian = Some(h);
        self.recompile();
        Ok(self)
    }

    pub fn with_channel(mut self, rate: f64, jump: Operator) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(invalid("dissipation rates must be finite and non-negative"));
        }
        if jump.space() != &self.space {
            return Err(invalid("jump operator lives on a different space than the generator"));
        }
        self.compiled.push(CompiledChannel::new(rate, &jump));
        self.channels.push(Channel { rate, jump });
        self.recompile();
        Ok(self)
    }

    /// Adds `κ(D[a] + D[b])` (or `κD[a]` on a single mode).
    pub fn with_cavity_decay(mut self, kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(invalid("kappa must be finite and non-negative"));
        }
        for a in field_lowering(&self.space)? {
            self.compiled.push(CompiledChannel::new(kappa, &a));
        }
        self.decay_kappa += kappa;
        self.recompile();
        Ok(self)
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn hamiltonian(&self) -> Option<&Operator> {
        self.hamiltonian.as_ref()
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn decay_kappa(&self) -> f64 {
        self.decay_kappa
    }

    pub fn is_empty(&self) -> bool {
        self.hamiltonian.is_none() && self.compiled.iter().all(|c| c.rate == 0.0)
    }

    /// Spectral-norm bound of the Hamiltonian (zero without one).
    pub fn hamiltonian_norm(&self) -> f64 {
        self.hamiltonian.as_ref().map_or(0.0, |h| linalg::spectral_norm_bound(h.matrix()))
    }

    /// Bound on the decay rates of the dissipative part, `2 Σ γ ‖C†C‖`.
    pub fn dissipative_rate_bound(&self) -> f64 {
        self.compiled.iter().map(|c| 2.0 * c.rate * linalg::spectral_norm_bound(&c.jump_dag_jump.to_dense())).sum()
    }

    /// `Lρ` on a raw matrix of matching dimension.
    pub fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
        let mut scratch = CMatrix::zeros(rho.nrows(), rho.ncols());
        self.apply_into(rho, &mut out, &mut scratch);
        out
    }

    /// `out = Lρ` without allocating; `scratch` must have the shape of `rho`.
    pub fn apply_into(&self, rho: &CMatrix, out: &mut CMatrix, scratch: &mut CMatrix) {
        out.fill(ZERO);
        let minus = C64::new(-1.0, 0.0);
        if let Some(k) = &self.effective {
            k.add_mul_dense(rho, minus, out);
            k.add_dense_mul_adjoint(rho, minus, out);
        }
        for ch in &self.compiled {
            if ch.rate == 0.0 {
                continue;
            }
            scratch.fill(ZERO);
            ch.jump.add_mul_dense(rho, ONE, scratch);
            ch.jump.add_dense_mul_adjoint(scratch, C64::new(2.0 * ch.rate, 0.0), out);
        }
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<CMatrix> {
        if rho.space() != &self.space {
            return Err(invalid("state and generator live on different spaces"));
        }
        Ok(self.apply_matrix(rho.matrix()))
    }
}

/// Frobenius norm of `Lρ`; zero at a fixed point.
pub fn steady_state_residual(gen: &Generator, rho: &DensityMatrix) -> Result<f64> {
    Ok(linalg::frobenius(&gen.apply(rho)?))
}

/// Largest allowed `dt·‖H‖`.
pub const MAX_PHASE_PER_STEP: f64 = 0.1;
/// Largest allowed `dt` times [`Generator::dissipative_rate_bound`].
pub const MAX_DECAY_PER_STEP: f64 = 2.5;

#[derive(Debug, Clone)]
pub struct Evolution {
    pub state: DensityMatrix,
    pub steps: usize,
    pub dt: f64,
    /// `|tr ρ(T) − tr ρ(0)|`
    pub trace_drift: f64,
}

/// Step size actually used for `duration` with requested `dt`.
pub fn step_plan(duration: f64, dt: f64) -> (usize, f64) {
    if duration <= 0.0 {
        return (0, dt);
    }
    let n = libm::ceil(duration / dt - 1e-9).max(1.0) as usize;
    (n, duration / n as f64)
}

fn check_stability(gen: &Generator, dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid("dt must be positive"));
    }
    let phase = dt * gen.hamiltonian_norm();
    if phase >= MAX_PHASE_PER_STEP {
        return Err(Error::Stability(format!("dt·‖H‖ = {phase:.3e} does not resolve the fastest frequency (limit {MAX_PHASE_PER_STEP})")));
    }
    let decay = dt * gen.dissipative_rate_bound();
    if decay > MAX_DECAY_PER_STEP {
        return Err(Error::Stability(format!("dt times the dissipative rate bound is {decay:.3e} (limit {MAX_DECAY_PER_STEP})")));
    }
    Ok(())
}

/// Buffers reused across RK4 steps.
struct Rk4Workspace {
    k: [CMatrix; 4],
    stage: CMatrix,
    scratch: CMatrix,
}

impl Rk4Workspace {
    fn new(rows: usize, cols: usize) -> Self {
        let z = || CMatrix::zeros(rows, cols);
        Self { k: [z(), z(), z(), z()], stage: z(), scratch: z() }
    }
}

fn rk4_step(gen: &Generator, rho: &mut CMatrix, h: f64, ws: &mut Rk4Workspace) {
    let Rk4Workspace { k, stage, scratch } = ws;
    let [k1, k2, k3, k4] = k;
    gen.apply_into(rho, k1, scratch);
    let mut stage_from = |src: &CMatrix, frac: f64, dst: &mut CMatrix| {
        stage.copy_from(rho);
        linalg::add_scaled(stage, C64::new(frac * h, 0.0), src);
        gen.apply_into(stage, dst, scratch);
    };
    stage_from(k1, 0.5, k2);
    stage_from(k2, 0.5, k3);
    stage_from(k3, 1.0, k4);
    let sixth = C64::new(h / 6.0, 0.0);
    linalg::add_scaled(rho, sixth, k1);
    linalg::add_scaled(rho, sixth * 2.0, k2);
    linalg::add_scaled(rho, sixth * 2.0, k3);
    linalg::add_scaled(rho, sixth, k4);
}

/// Fixed-step fourth-order Runge–Kutta integration of `dρ/dt = Lρ`.
pub fn rk4_evolve(gen: &Generator, rho: &DensityMatrix, duration: f64, dt: f64) -> Result<Evolution> {
    rk4_evolve_observed(gen, rho, duration, dt, 0, |_, _, _| Ok(()))
}

/// [`rk4_evolve`] calling `observe(step, t, ρ)` at step 0 and every
/// `observe_every` steps (never when `observe_every == 0`).
pub fn rk4_evolve_observed<F>(
    gen: &Generator,
    rho: &DensityMatrix,
    duration: f64,
    dt: f64,
    observe_every: usize,
    mut observe: F,
) -> Result<Evolution>
where
    F: FnMut(usize, f64, &CMatrix) -> Result<()>,
{
    if rho.space() != gen.space() {
        return Err(invalid("state and generator live on different spaces"));
    }
    if !(duration >= 0.0) {
        return Err(invalid("duration must be non-negative"));
    }
    check_stability(gen, dt)?;
    let (steps, h) = step_plan(duration, dt);
    let tr0 = rho.trace();
    let mut m = rho.matrix().clone();
    if observe_every > 0 {
        observe(0, 0.0, &m)?;
    }
    if !gen.is_empty() {
        let mut ws = Rk4Workspace::new(m.nrows(), m.ncols());
        for step in 1..=steps {
            rk4_step(gen, &mut m, h, &mut ws);
            let tr = linalg::trace(&m);
            if !tr.re.is_finite() || !tr.im.is_finite() {
                return Err(numeric(format!("non-finite state at step {step}")));
            }
            if observe_every > 0 && step % observe_every == 0 {
                observe(step, step as f64 * h, &m)?;
            }
        }
    } else if observe_every > 0 {
        for step in (observe_every..=steps).step_by(observe_every) {
            observe(step, step as f64 * h, &m)?;
        }
    }
    linalg::hermitize(&mut m);
    let state = DensityMatrix::new(rho.space().clone(), m)?;
    let trace_drift = (state.trace() - tr0).norm();
    Ok(Evolution { state, steps, dt: h, trace_drift })
}

/// Eigendecomposition of a time-independent Hamiltonian, reusable for any
/// transit time.
#[derive(Debug, Clone)]
pub struct HamiltonianSpectrum {
    space: Space,
    spectrum: BlockSpectrum,
}

impl HamiltonianSpectrum {
    pub fn new(h: &Operator) -> Result<Self> {
        if linalg::hermitian_deviation(h.matrix()) > 1e-10 {
            return Err(invalid("transit Hamiltonian is not Hermitian"));
        }
        let spectrum = BlockSpectrum::new(h.matrix())?;
        Ok(Self { space: h.space().clone(), spectrum })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn block_count(&self) -> usize {
        self.spectrum.block_count()
    }

    /// `exp(−iHτ)`
    pub fn propagator(&self, tau: f64) -> Result<Propagator> {
        if !tau.is_finite() {
            return Err(invalid("transit time must be finite"));
        }
        let u = self.spectrum.map(|e| (-I * (e * tau)).exp());
        Ok(Propagator { unitary: Operator::new(self.space.clone(), u)?, transit_time: tau })
    }
}

/// Exact evolution `exp(−iHτ)` over one transit.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub unitary: Operator,
    pub transit_time: f64,
}

impl Propagator {
    /// `‖U†U − I‖_F`
    pub fn unitarity_error(&self) -> f64 {
        let u = self.unitary.matrix();
        linalg::frobenius(&(u.adjoint() * u - linalg::identity(u.nrows())))
    }
}

pub fn transit_propagator(h: &Operator, tau: f64) -> Result<Propagator> {
    HamiltonianSpectrum::new(h)?.propagator(tau)
}

/// Exact amplitude damping of both field modes over `duration`, the
/// solution of `dρ/dt = κKρ` with no other dynamics.
pub fn damp_field(rho: &mut DensityMatrix, kappa: f64, duration: f64) -> Result<()> {
    if !(kappa >= 0.0) || !(duration >= 0.0) {
        return Err(invalid("kappa and duration must be non-negative"));
    }
    if kappa == 0.0 || duration == 0.0 {
        return Ok(());
    }
    let eta = libm::exp(-2.0 * kappa * duration);
    match rho.space().clone() {
        Space::Mode(cutoff) => {
            let m = damp_slot(rho.matrix(), eta, cutoff + 1, 1);
            *rho.matrix_mut() = m;
        }
        Space::Product(spec) if !spec.has_atom() => {
            let da = spec.dim_a();
            let db = spec.dim_b();
            let m = damp_slot(rho.matrix(), eta, da, db);
            let m = damp_slot_fast(&m, eta, da, db);
            *rho.matrix_mut() = m;
        }
        _ => return Err(invalid("exact damping is defined on field-only spaces")),
    }
    Ok(())
}

/// `e[n][k] = sqrt(C(n,k) η^{n−k} (1−η)^k)`, the `|n⟩ → |n−k⟩` Kraus amplitude.
fn damping_amplitudes(eta: f64, dim: usize) -> Vec<Vec<f64>> {
    let mut table = Vec::with_capacity(dim);
    for n in 0..dim {
        let mut row = Vec::with_capacity(n + 1);
        let mut binom = 1.0f64;
        for k in 0..=n {
            if k > 0 {
                binom *= (n + 1 - k) as f64 / k as f64;
            }
            let w = binom * libm::pow(eta, (n - k) as f64) * libm::pow(1.0 - eta, k as f64);
            row.push(libm::sqrt(w));
        }
        table.push(row);
    }
    table
}

/// Damp the slow tensor factor (dimension `ds`) of a `ds·df` space.
fn damp_slot(rho: &CMatrix, eta: f64, ds: usize, df: usize) -> CMatrix {
    let e = damping_amplitudes(eta, ds);
    let mut out = CMatrix::zeros(ds * df, ds * df);
    for m in 0..ds {
        for mp in 0..ds {
            for k in 0..ds - m.max(mp) {
                let c = e[m + k][k] * e[mp + k][k];
                if c == 0.0 {
                    continue;
                }
                for jp in 0..df {
                    for j in 0..df {
                        out[(m * df + j, mp * df + jp)] += rho[((m + k) * df + j, (mp + k) * df + jp)] * c;
                    }
                }
            }
        }
    }
    out
}

/// Damp the fast tensor factor (dimension `df`) of a `ds·df` space.
fn damp_slot_fast(rho: &CMatrix, eta: f64, ds: usize, df: usize) -> CMatrix {
    let e = damping_amplitudes(eta, df);
    let mut out = CMatrix::zeros(ds * df, ds * df);
    for m in 0..df {
        for mp in 0..df {
            for k in 0..df - m.max(mp) {
                let c = e[m + k][k] * e[mp + k][k];
                if c == 0.0 {
                    continue;
                }
                for ip in 0..ds {
                    for i in 0..ds {
                        out[(i * df + m, ip * df + mp)] += rho[(i * df + m + k, ip * df + mp + k)] * c;
                    }
                }
            }
        }
    }
    out
}

/// Field-space generator `γ₁D[C₁] + γ₂D[C₂] + κ(D[a] + D[b])`.
pub fn ideal_generator(alpha: C64, gamma1: f64, gamma2: f64, kappa: f64, spec: &HilbertSpec) -> Result<Generator> {
    let field = spec.field_part();
    let (c1, c2) = fock::jump_operators(alpha, &field)?;
    Generator::new(Space::Product(field)).with_channel(gamma1, c1)?.with_channel(gamma2, c2)?.with_cavity_decay(kappa)
}
