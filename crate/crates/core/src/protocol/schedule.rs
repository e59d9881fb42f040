//! Arrival times of the two atom beams.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{invalid, Result};
use crate::protocol::rates::TauDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleMode {
    Poisson,
    /// Evenly spaced arrivals at `1/(r₁ + r₂)`, types interleaved in proportion to their rates.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomType {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomEvent {
    pub arrival_time: f64,
    pub atom_type: AtomType,
    /// In units of the inverse injection rate.
    pub transit_time: f64,
    /// Transit time relative to the nominal one of its beam.
    pub tau_factor: f64,
}

/// Inputs of [`make_schedule`]. Times are in units of the inverse injection rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamRequest {
    pub r1: f64,
    pub r2: f64,
    pub horizon: f64,
    pub mode: ScheduleMode,
    pub seed: u64,
    /// Nominal transit time of the L1 atoms.
    pub tau1: f64,
    /// Nominal transit time of the L2 atoms.
    pub tau2: f64,
    /// Jitter of the L2 transit time.
    pub dist: TauDistribution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamSchedule {
    pub events: Vec<AtomEvent>,
    pub horizon: f64,
    pub mode: ScheduleMode,
    pub seed: u64,
    /// Arrivals discarded because the previous atom was still inside.
    pub dropped: usize,
}

impl BeamSchedule {
    pub fn count(&self, atom_type: AtomType) -> usize {
        self.events.iter().filter(|e| e.atom_type == atom_type).count()
    }
}

fn poisson_arrivals(rate: f64, horizon: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut out = Vec::new();
    if rate == 0.0 {
        return out;
    }
    let exp = Exp::new(rate).expect("rate checked positive");
    let mut t = 0.0;
    loop {
        t += exp.sample(rng);
        if t >= horizon {
            return out;
        }
        out.push(t);
    }
}

/// Draw the event list. The same request always yields the same schedule.
pub fn make_schedule(req: &BeamRequest) -> Result<BeamSchedule> {
    if !(req.r1 >= 0.0 && req.r2 >= 0.0) || !req.r1.is_finite() || !req.r2.is_finite() {
        return Err(invalid("injection rates must be finite and non-negative"));
    }
    if !(req.horizon > 0.0) || !req.horizon.is_finite() {
        return Err(invalid("horizon must be positive"));
    }
    if !(req.tau1 >= 0.0 && req.tau2 >= 0.0) {
        return Err(invalid("transit times must be non-negative"));
    }
    req.dist.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(req.seed);

    let mut arrivals: Vec<(f64, AtomType)> = Vec::new();
    match req.mode {
        ScheduleMode::Poisson => {
            arrivals.extend(poisson_arrivals(req.r1, req.horizon, &mut rng).into_iter().map(|t| (t, AtomType::L1)));
            arrivals.extend(poisson_arrivals(req.r2, req.horizon, &mut rng).into_iter().map(|t| (t, AtomType::L2)));
            arrivals.sort_by(|x, y| x.0.total_cmp(&y.0));
        }
        ScheduleMode::Uniform => {
            let total = req.r1 + req.r2;
            if total > 0.0 {
                let spacing = 1.0 / total;
                let (w1, w2) = (req.r1 / total, req.r2 / total);
                let (mut c1, mut c2) = (0.0, 0.0);
                let mut k = 0usize;
                loop {
                    let t = (k as f64 + 0.5) * spacing;
                    if t >= req.horizon {
                        break;
                    }
                    c1 += w1;
                    c2 += w2;
                    let ty = if c1 >= c2 { AtomType::L1 } else { AtomType::L2 };
                    match ty {
                        AtomType::L1 => c1 -= 1.0,
                        AtomType::L2 => c2 -= 1.0,
                    }
                    arrivals.push((t, ty));
                    k += 1;
                }
            }
        }
    }

    let mut events = Vec::with_capacity(arrivals.len());
    let mut dropped = 0usize;
    let mut busy_until = f64::NEG_INFINITY;
    let mut last_arrival = f64::NEG_INFINITY;
    for (t, ty) in arrivals {
        let (tau_factor, transit_time) = match ty {
            AtomType::L1 => (1.0, req.tau1),
            AtomType::L2 => {
                let x = req.dist.sample(&mut rng);
                (x, req.tau2 * x)
            }
        };
        if t < busy_until || t <= last_arrival {
            dropped += 1;
            continue;
        }
        events.push(AtomEvent { arrival_time: t, atom_type: ty, transit_time, tau_factor });
        busy_until = t + transit_time;
        last_arrival = t;
    }
    if dropped > 0 {
        log::info!("dropped {dropped} overlapping transits");
    }
    Ok(BeamSchedule { events, horizon: req.horizon, mode: req.mode, seed: req.seed, dropped })
}
