//! Transit-time distributions and the effective rates of the coarse-grained
//! master equation.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::error::{invalid, numeric, Result};
use crate::protocol::scheme::{SchemeL1Params, SchemeL2Params};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauKind {
    Delta,
    /// Uniform on `[mean − √3·spread, mean + √3·spread]`.
    Flat,
    /// Normal, clipped to `[max(0, mean − 10·spread), mean + 10·spread]` and renormalized.
    Gaussian,
}

/// Distribution of the L2 transit time in units of the nominal `τ₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauDistribution {
    pub kind: TauKind,
    pub mean: f64,
    /// Standard deviation `δτ/τ₂`.
    pub spread: f64,
}

/// Half-width of the gaussian support in standard deviations.
const GAUSSIAN_CLIP: f64 = 10.0;

impl TauDistribution {
    pub fn delta() -> Self {
        Self { kind: TauKind::Delta, mean: 1.0, spread: 0.0 }
    }

    pub fn gaussian(spread: f64) -> Self {
        Self { kind: TauKind::Gaussian, mean: 1.0, spread }
    }

    pub fn flat(spread: f64) -> Self {
        Self { kind: TauKind::Flat, mean: 1.0, spread }
    }

    /// Flat over one full detuning period `[0, 2π/Δ]`.
    pub fn flat_period(delta_tau2: f64) -> Self {
        let half = PI / delta_tau2.abs();
        Self { kind: TauKind::Flat, mean: half, spread: half / libm::sqrt(3.0) }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean.is_finite() || !(self.mean > 0.0) {
            return Err(invalid("transit-time mean must be positive"));
        }
        if !self.spread.is_finite() || self.spread < 0.0 {
            return Err(invalid("transit-time spread must be non-negative"));
        }
        if self.kind == TauKind::Flat && self.mean - libm::sqrt(3.0) * self.spread < -1e-12 * self.mean {
            return Err(invalid("flat transit-time distribution extends below zero"));
        }
        Ok(())
    }

    /// `(lo, hi)` of the support, `None` for a point mass.
    fn support(&self) -> Option<(f64, f64)> {
        if self.spread == 0.0 || self.kind == TauKind::Delta {
            return None;
        }
        match self.kind {
            TauKind::Flat => {
                let w = libm::sqrt(3.0) * self.spread;
                Some(((self.mean - w).max(0.0), self.mean + w))
            }
            _ => Some(((self.mean - GAUSSIAN_CLIP * self.spread).max(0.0), self.mean + GAUSSIAN_CLIP * self.spread)),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let Some((lo, hi)) = self.support() else {
            return self.mean;
        };
        match self.kind {
            TauKind::Flat => Uniform::new_inclusive(lo, hi).map(|u| u.sample(rng)).unwrap_or(self.mean),
            _ => {
                let normal = Normal::new(self.mean, self.spread).expect("spread checked positive");
                loop {
                    let x = normal.sample(rng);
                    if x >= lo && x <= hi {
                        return x;
                    }
                }
            }
        }
    }

    /// `⟨f(x)⟩` for a smooth `f`, with `phase_rate` the angular frequency of
    /// its oscillation in `x` (used to size quadrature panels).
    pub fn average<F: Fn(f64) -> f64>(&self, f: F, phase_rate: f64) -> Result<f64> {
        self.validate()?;
        let Some((lo, hi)) = self.support() else {
            return Ok(f(self.mean));
        };
        let mut panel = 1.0 / phase_rate.abs().max(1e-300);
        if self.kind == TauKind::Gaussian {
            panel = panel.min(self.spread / 2.0);
        }
        let density = |x: f64| match self.kind {
            TauKind::Flat => 1.0,
            _ => {
                let z = (x - self.mean) / self.spread;
                libm::exp(-0.5 * z * z)
            }
        };
        let norm = integrate(&density, lo, hi, panel)?;
        let num = integrate(&|x| f(x) * density(x), lo, hi, panel)?;
        Ok(num / norm)
    }
}

const GL_ORDER: usize = 16;
const MAX_PANELS: usize = 1 << 22;
const QUAD_TOL: f64 = 1e-11;

/// Gauss–Legendre nodes and weights on `[−1, 1]` by Newton iteration.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

fn composite(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, panels: usize, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let h = (hi - lo) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * h;
        for (x, w) in rule.0.iter().zip(&rule.1) {
            acc += w * f(mid + 0.5 * h * x);
        }
    }
    acc * 0.5 * h
}

/// Composite Gauss–Legendre with panel doubling until two successive
/// estimates agree.
fn integrate(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, max_panel_width: f64) -> Result<f64> {
    let rule = gauss_legendre(GL_ORDER);
    let mut panels = libm::ceil((hi - lo) / max_panel_width).max(1.0) as usize;
    if panels > MAX_PANELS {
        return Err(numeric("transit-time quadrature needs too many panels"));
    }
    let mut prev = composite(f, lo, hi, panels, &rule);
    while panels <= MAX_PANELS {
        panels *= 2;
        let next = composite(f, lo, hi, panels, &rule);
        if (next - prev).abs() <= QUAD_TOL * next.abs().max(1.0) {
            return Ok(next);
        }
        prev = next;
    }
    Err(numeric("transit-time quadrature did not converge"))
}

/// Rates of the coarse-grained master equation in units of the injection rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveRates {
    pub gamma1: f64,
    pub gamma2: f64,
    /// Stark-phase fluctuation coefficient `r₂(g_a'/Δ)²⟨sin Δτ⟩`.
    pub f1: f64,
    /// One-photon loss coefficient `r₂(g_a'/Δ)²⟨sin²(Δτ/2)⟩`.
    pub f2: f64,
    /// `⟨sin Δτ⟩`
    pub sin_average: f64,
    /// `⟨sin²(Δτ/2)⟩`
    pub sin_sq_half_average: f64,
}

/// `γ₁ = r₁(g_a²g_b²/g²)τ₁²`.
pub fn gamma1(l1: &SchemeL1Params) -> f64 {
    let (ga, gb) = (l1.g_a_tau1, l1.g_b_tau1);
    l1.r1 * ga * ga * gb * gb / (ga * ga + gb * gb)
}

/// `γ₂ = (r₂/8)(g_a'g_b'/Δ)²(τ₂² + δτ²)` with the transit-time moments of `dist`.
pub fn gamma2(l2: &SchemeL2Params, dist: &TauDistribution) -> f64 {
    let x = l2.ga_tau2() * l2.gb_tau2 / l2.delta_tau2();
    let second_moment = match dist.kind {
        TauKind::Delta => dist.mean * dist.mean,
        _ => dist.mean * dist.mean + dist.spread * dist.spread,
    };
    l2.r2 / 8.0 * x * x * second_moment
}

/// `(γ₁, γ₂, f₁, f₂)`. The `f` averages are taken by quadrature over `dist`.
pub fn effective_rates(l1: &SchemeL1Params, l2: &SchemeL2Params, dist: &TauDistribution) -> Result<EffectiveRates> {
    l1.validate()?;
    l2.validate()?;
    dist.validate()?;
    let d = l2.delta_tau2();
    let sin_average = dist.average(|x| libm::sin(d * x), d)?;
    let sin_sq_half_average = dist.average(
        |x| {
            let s = libm::sin(0.5 * d * x);
            s * s
        },
        d,
    )?;
    let ratio = l2.ga_over_gb * l2.gb_over_delta;
    let pref = l2.r2 * ratio * ratio;
    Ok(EffectiveRates {
        gamma1: gamma1(l1),
        gamma2: gamma2(l2, dist),
        f1: pref * sin_average,
        f2: pref * sin_sq_half_average,
        sin_average,
        sin_sq_half_average,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::scheme::L2Variant;

    fn l1() -> SchemeL1Params {
        SchemeL1Params::new(0.1, 0.1, 1.0).unwrap()
    }

    fn l2() -> SchemeL2Params {
        SchemeL2Params { gb_tau2: 100.0, gb_over_delta: 1e-3, ga_over_gb: 1.0, omega_tau2: 0.1, r2: 1.0, variant: L2Variant::Bare }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = gauss_legendre(GL_ORDER);
        let s: f64 = rule.1.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let x30: f64 = rule.0.iter().zip(&rule.1).map(|(x, w)| w * x.powi(30)).sum();
        assert!((x30 - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn closed_form_rates() {
        let r = effective_rates(&l1(), &l2(), &TauDistribution::delta()).unwrap();
        assert!((r.gamma1 - 0.005).abs() < 1e-15);
        assert!((r.gamma2 - 1.25e-3).abs() < 1e-15);
    }

    #[test]
    fn resonant_delta_kills_f() {
        let p = l2().snapped_to_resonance();
        let r = effective_rates(&l1(), &p, &TauDistribution::delta()).unwrap();
        assert!(r.f1.abs() < 1e-12 && r.f2.abs() < 1e-12);
    }

    #[test]
    fn flat_over_one_period() {
        let p = l2();
        let dist = TauDistribution::flat_period(p.delta_tau2());
        let r = effective_rates(&l1(), &p, &dist).unwrap();
        assert!(r.sin_average.abs() < 1e-12, "{}", r.sin_average);
        assert!((r.sin_sq_half_average - 0.5).abs() < 1e-12);
        assert!(r.f1.abs() < 1e-12);
    }

    #[test]
    fn narrow_gaussian_matches_small_epsilon_limit() {
        let p = l2().snapped_to_resonance();
        let eps = 0.1;
        let dist = TauDistribution::gaussian(eps / p.delta_tau2());
        let r = effective_rates(&l1(), &p, &dist).unwrap();
        assert!((r.sin_sq_half_average - eps * eps / 4.0).abs() < 1e-4);
        // exact average of sin²(u/2) over N(2πn, ε²)
        let exact = 0.5 * (1.0 - libm::exp(-eps * eps / 2.0));
        assert!((r.sin_sq_half_average - exact).abs() < 1e-10);
    }

    #[test]
    fn gaussian_converges_to_delta() {
        let p = SchemeL2Params { gb_over_delta: 100.0 / 1234.5, ..l2() };
        let d = p.delta_tau2();
        for spread in [1e-6, 1e-8] {
            let r = effective_rates(&l1(), &p, &TauDistribution::gaussian(spread)).unwrap();
            let pref = p.r2 * (p.ga_over_gb * p.gb_over_delta).powi(2);
            assert!((r.f1 - pref * libm::sin(d)).abs() < 10.0 * pref * d * spread);
            assert!((r.f2 - pref * libm::sin(d / 2.0).powi(2)).abs() < 10.0 * pref * d * spread);
        }
    }

    #[test]
    fn jitter_raises_gamma2() {
        let r = effective_rates(&l1(), &l2(), &TauDistribution::gaussian(0.1)).unwrap();
        assert!((r.gamma2 - 1.25e-3 * 1.01).abs() < 1e-12);
    }

    #[test]
    fn samples_respect_support() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let flat = TauDistribution::flat(0.2);
        let g = TauDistribution::gaussian(0.5);
        for _ in 0..1000 {
            let x = flat.sample(&mut rng);
            assert!((x - 1.0).abs() <= libm::sqrt(3.0) * 0.2 + 1e-12);
            assert!(g.sample(&mut rng) >= 0.0);
        }
        assert_eq!(TauDistribution::delta().sample(&mut rng), 1.0);
    }

    #[test]
    fn invalid_distributions() {
        assert!(TauDistribution { kind: TauKind::Flat, mean: 1.0, spread: 1.0 }.validate().is_err());
        assert!(TauDistribution { kind: TauKind::Gaussian, mean: 1.0, spread: -1.0 }.validate().is_err());
    }
}
