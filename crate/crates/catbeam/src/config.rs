//! Plain `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment. Every figure parameter is a
//! dimensionless product; times are in units of `1/r`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;

use catbeam_core::protocol::{
    DecayMethod, DecayTiming, Inequality, L1InitialState, L2Variant, ProtocolConfig, Regime, ScheduleMode, SchemeL1Params, SchemeL2Params,
    TauDistribution,
};
use catbeam_core::C64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required keys: {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error("bad value for `{key}`: {message}")]
    Value { key: String, message: String },
    #[error("validation error: {0}")]
    Validation(String),
}

type Result<T> = std::result::Result<T, ConfigError>;

/// Keys that must be present. `alpha` and `omega_tau2` are alternatives.
const REQUIRED: [&str; 8] =
    ["scheme_variant", "g_a_tau1", "g_b_tau1", "gb_tau2", "gb_over_delta", "ga_over_gb", "alpha|omega_tau2", "kappa_over_r"];

const OPTIONAL: [&str; 26] = [
    "cutoff_a",
    "cutoff_b",
    "seed",
    "sample_interval",
    "schedule_mode",
    "tau_distribution",
    "delta_tau",
    "horizon",
    "n_events",
    "phi",
    "g_aux_over_gb",
    "delta_aux_over_delta",
    "ga2_over_gb",
    "deltap_over_delta",
    "r1",
    "r2",
    "tau1",
    "tau2",
    "resonant_tau",
    "l1_initial_state",
    "decay_method",
    "rk4_dt",
    "decay_timing",
    "positivity_every",
    "alpha",
    "omega_tau2",
];

/// Used by `check` when no config is given.
pub const DEFAULT_CONFIG: &str = include_str!("../examples/default.conf");

pub const DEFAULT_CUTOFF: usize = 16;
pub const DEFAULT_HORIZON: f64 = 1000.0;
pub const DEFAULT_TRANSIT: f64 = 1e-3;
pub const DEFAULT_RK4_DT: f64 = 0.01;

fn is_known(key: &str) -> bool {
    OPTIONAL.contains(&key) || REQUIRED.iter().any(|r| !r.contains('|') && *r == key)
}

/// Unresolved assignments, kept so that sweeps can override single keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(ConfigError::Syntax { line, message: format!("expected `key = value`, got `{body}`") });
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax { line, message: "empty key or value".into() });
            }
            if !is_known(key) {
                return Err(ConfigError::UnknownKey { line, key: key.into() });
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(ConfigError::DuplicateKey { line, key: key.into() });
            }
        }
        Ok(Self { entries })
    }

    /// Replace or add one assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !is_known(key) {
            return Err(ConfigError::UnknownKey { line: 0, key: key.into() });
        }
        if key == "alpha" {
            self.entries.remove("omega_tau2");
        } else if key == "omega_tau2" {
            self.entries.remove("alpha");
        } else if key == "n_events" {
            self.entries.remove("horizon");
        } else if key == "horizon" {
            self.entries.remove("n_events");
        }
        self.entries.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn missing(&self) -> Vec<String> {
        REQUIRED.iter().filter(|r| !r.split('|').any(|k| self.entries.contains_key(k))).map(|r| r.replace('|', " or ")).collect()
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| ConfigError::Value { key: key.into(), message: format!("`{v}` is not a finite number") })
            })
            .transpose()
    }

    fn required_number(&self, key: &str) -> Result<f64> {
        self.number(key)?.ok_or_else(|| ConfigError::Missing(vec![key.into()]))
    }

    fn integer(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|_| ConfigError::Value { key: key.into(), message: format!("`{v}` is not a non-negative integer") })
            })
            .transpose()
    }

    fn choice<'a>(&'a self, key: &str, allowed: &[&str], default: &'a str) -> Result<&'a str> {
        let v = self.get(key).unwrap_or(default);
        if allowed.contains(&v) {
            Ok(v)
        } else {
            Err(ConfigError::Value { key: key.into(), message: format!("`{v}` is not one of {}", allowed.join(", ")) })
        }
    }

    fn reject(&self, keys: &[&str], reason: &str) -> Result<()> {
        match keys.iter().find(|k| self.entries.contains_key(**k)) {
            Some(k) => Err(ConfigError::Value { key: (*k).into(), message: reason.into() }),
            None => Ok(()),
        }
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        let missing = self.missing();
        if !missing.is_empty() {
            return Err(ConfigError::Missing(missing));
        }
        if self.entries.contains_key("alpha") && self.entries.contains_key("omega_tau2") {
            return Err(ConfigError::Value { key: "alpha".into(), message: "give either alpha or omega_tau2, not both".into() });
        }
        if self.entries.contains_key("horizon") && self.entries.contains_key("n_events") {
            return Err(ConfigError::Value { key: "n_events".into(), message: "give either horizon or n_events, not both".into() });
        }

        let ga_over_gb = self.required_number("ga_over_gb")?;
        let variant = match self.choice("scheme_variant", &["bare", "h_prime", "h_aux"], "")? {
            "bare" => {
                self.reject(
                    &["phi", "g_aux_over_gb", "delta_aux_over_delta", "ga2_over_gb", "deltap_over_delta"],
                    "only used by h_prime or h_aux",
                )?;
                L2Variant::Bare
            }
            "h_prime" => {
                self.reject(&["phi", "g_aux_over_gb", "delta_aux_over_delta"], "only used by h_aux")?;
                L2Variant::HPrime {
                    ga2_over_gb: self.number("ga2_over_gb")?.unwrap_or(ga_over_gb),
                    deltap_over_delta: self.number("deltap_over_delta")?.unwrap_or(-1.0),
                }
            }
            _ => {
                self.reject(&["ga2_over_gb", "deltap_over_delta"], "only used by h_prime")?;
                L2Variant::HAux {
                    g_aux_over_gb: self.number("g_aux_over_gb")?.unwrap_or(ga_over_gb),
                    delta_aux_over_delta: self.number("delta_aux_over_delta")?.unwrap_or(-1.0),
                    phi: self.number("phi")?.unwrap_or(FRAC_PI_4),
                }
            }
        };

        let r1 = self.number("r1")?.unwrap_or(1.0);
        let r2 = self.number("r2")?.unwrap_or(1.0);
        let initial_atom_state = match self.choice("l1_initial_state", &["minus", "one"], "minus")? {
            "one" => L1InitialState::One,
            _ => L1InitialState::Minus,
        };
        let l1 = SchemeL1Params {
            g_a_tau1: self.required_number("g_a_tau1")?,
            g_b_tau1: self.required_number("g_b_tau1")?,
            r1,
            initial_atom_state,
        };
        let mut l2 = SchemeL2Params {
            gb_tau2: self.required_number("gb_tau2")?,
            gb_over_delta: self.required_number("gb_over_delta")?,
            ga_over_gb,
            omega_tau2: self.number("omega_tau2")?.unwrap_or(0.0),
            r2,
            variant,
        };
        let resonant = self.choice("resonant_tau", &["true", "false"], "false")? == "true";
        let validation = |e: catbeam_core::Error| ConfigError::Validation(e.to_string());
        l2.validate().map_err(validation)?;
        if resonant {
            l2 = l2.snapped_to_resonance();
        }
        let explicit_alpha = self.number("alpha")?;
        let mut target_alpha = None;
        if let Some(a) = explicit_alpha {
            if !(a >= 0.0) {
                return Err(ConfigError::Validation("alpha must be non-negative".into()));
            }
            l2.omega_tau2 = l2.omega_for_alpha(a);
            target_alpha = Some(C64::new(a, 0.0));
        }

        let tau_distribution = match self.choice("tau_distribution", &["delta", "flat", "gaussian"], "delta")? {
            "delta" => {
                if self.number("delta_tau")?.unwrap_or(0.0) != 0.0 {
                    return Err(ConfigError::Value { key: "delta_tau".into(), message: "must be 0 for the delta distribution".into() });
                }
                TauDistribution::delta()
            }
            "flat" => {
                self.reject(&["delta_tau"], "the flat distribution always spans one detuning period [0, 2 pi/Delta]")?;
                TauDistribution::flat_period(l2.delta_tau2())
            }
            _ => TauDistribution::gaussian(self.number("delta_tau")?.unwrap_or(0.0)),
        };

        let schedule_mode = match self.choice("schedule_mode", &["poisson", "uniform"], "poisson")? {
            "uniform" => ScheduleMode::Uniform,
            _ => ScheduleMode::Poisson,
        };
        let horizon = match (self.number("horizon")?, self.integer("n_events")?) {
            (Some(h), _) => h,
            (None, Some(n)) if r1 + r2 > 0.0 => n as f64 / (r1 + r2),
            (None, Some(_)) => return Err(ConfigError::Validation("n_events needs a positive total rate".into())),
            (None, None) => DEFAULT_HORIZON,
        };
        let decay_method = match self.choice("decay_method", &["exact", "rk4"], "exact")? {
            "rk4" => DecayMethod::Rk4 { dt: self.number("rk4_dt")?.unwrap_or(DEFAULT_RK4_DT) },
            _ => {
                self.reject(&["rk4_dt"], "only used with decay_method = rk4")?;
                DecayMethod::Exact
            }
        };
        let decay_timing = match self.choice("decay_timing", &["between_events", "during_transit"], "between_events")? {
            "during_transit" => DecayTiming::DuringTransit,
            _ => DecayTiming::BetweenEvents,
        };
        let cutoff = |key: &str| -> Result<usize> {
            let c = self.integer(key)?.unwrap_or(DEFAULT_CUTOFF as u64);
            usize::try_from(c)
                .ok()
                .filter(|&c| c >= 1)
                .ok_or_else(|| ConfigError::Value { key: key.into(), message: "cutoff must be at least 1".into() })
        };

        let mut protocol = ProtocolConfig::new(l1, l2);
        protocol.cutoff_a = cutoff("cutoff_a")?;
        protocol.cutoff_b = cutoff("cutoff_b")?;
        protocol.tau_distribution = tau_distribution;
        protocol.schedule_mode = schedule_mode;
        protocol.seed = self.integer("seed")?.unwrap_or(0);
        protocol.horizon = horizon;
        protocol.tau1 = self.number("tau1")?.unwrap_or(DEFAULT_TRANSIT);
        protocol.tau2 = self.number("tau2")?.unwrap_or(DEFAULT_TRANSIT);
        protocol.kappa = self.required_number("kappa_over_r")?;
        protocol.sample_interval = self.number("sample_interval")?.unwrap_or(1.0);
        protocol.decay_method = decay_method;
        protocol.decay_timing = decay_timing;
        protocol.positivity_every = self.integer("positivity_every")?.unwrap_or(100) as usize;
        protocol.target_alpha = target_alpha;
        protocol.validate().map_err(validation)?;

        let config = RunConfig { protocol, explicit_alpha: explicit_alpha.is_some(), resonant_tau: resonant };
        for q in config.inequalities() {
            if q.regime() == Regime::Violated {
                return Err(ConfigError::Validation(format!("violated: {} (value {:.6e})", q.description, q.value)));
            }
        }
        Ok(config)
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    RawConfig::parse(text)?.resolve()
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub protocol: ProtocolConfig,
    /// Whether the cat amplitude was given directly rather than through `Ωτ₂`.
    pub explicit_alpha: bool,
    pub resonant_tau: bool,
}

impl RunConfig {
    pub fn alpha(&self) -> C64 {
        self.protocol.alpha()
    }

    /// Scheme validity conditions evaluated for a run that starts in the
    /// vacuum and ends near the cat, i.e. `⟨n_a⟩ = ⟨n_b⟩ = |α|²` and `N₋ = 0`.
    pub fn inequalities(&self) -> Vec<Inequality> {
        let p = &self.protocol;
        let n = self.alpha().norm_sqr();
        let mut out = p.l1.inequalities(0.0, p.l1.r1 * p.tau1);
        out.extend(p.l2.inequalities(n, n, p.l2.r2 * p.tau2));
        out
    }

    /// Every resolved parameter, defaults included, in a fixed order.
    pub fn resolved(&self) -> Vec<(&'static str, String)> {
        let p = &self.protocol;
        let mut out = vec![
            ("scheme_variant", p.l2.variant.name().to_string()),
            ("g_a_tau1", p.l1.g_a_tau1.to_string()),
            ("g_b_tau1", p.l1.g_b_tau1.to_string()),
            (
                "l1_initial_state",
                match p.l1.initial_atom_state {
                    L1InitialState::Minus => "minus".to_string(),
                    L1InitialState::One => "one".to_string(),
                },
            ),
            ("gb_tau2", p.l2.gb_tau2.to_string()),
            ("gb_over_delta", p.l2.gb_over_delta.to_string()),
            ("ga_over_gb", p.l2.ga_over_gb.to_string()),
            ("omega_tau2", p.l2.omega_tau2.to_string()),
        ];
        match p.l2.variant {
            L2Variant::Bare => {}
            L2Variant::HPrime { ga2_over_gb, deltap_over_delta } => {
                out.push(("ga2_over_gb", ga2_over_gb.to_string()));
                out.push(("deltap_over_delta", deltap_over_delta.to_string()));
            }
            L2Variant::HAux { g_aux_over_gb, delta_aux_over_delta, phi } => {
                out.push(("g_aux_over_gb", g_aux_over_gb.to_string()));
                out.push(("delta_aux_over_delta", delta_aux_over_delta.to_string()));
                out.push(("phi", phi.to_string()));
            }
        }
        let alpha = self.alpha();
        out.extend([
            ("alpha", format!("{}{:+}i", alpha.re, alpha.im)),
            ("alpha_source", if self.explicit_alpha { "alpha" } else { "omega_tau2" }.to_string()),
            ("delta_tau2", p.l2.delta_tau2().to_string()),
            ("resonant_tau", self.resonant_tau.to_string()),
            ("kappa_over_r", p.kappa.to_string()),
            ("r1", p.l1.r1.to_string()),
            ("r2", p.l2.r2.to_string()),
            ("tau1", p.tau1.to_string()),
            ("tau2", p.tau2.to_string()),
            ("tau_distribution", format!("{:?}", p.tau_distribution.kind).to_lowercase()),
            ("tau_mean", p.tau_distribution.mean.to_string()),
            ("delta_tau", p.tau_distribution.spread.to_string()),
            ("schedule_mode", format!("{:?}", p.schedule_mode).to_lowercase()),
            ("horizon", p.horizon.to_string()),
            ("sample_interval", p.sample_interval.to_string()),
            ("seed", p.seed.to_string()),
            ("cutoff_a", p.cutoff_a.to_string()),
            ("cutoff_b", p.cutoff_b.to_string()),
            (
                "decay_method",
                match p.decay_method {
                    DecayMethod::Exact => "exact".to_string(),
                    DecayMethod::Rk4 { dt } => format!("rk4(dt={dt})"),
                },
            ),
            (
                "decay_timing",
                match p.decay_timing {
                    DecayTiming::BetweenEvents => "between_events".to_string(),
                    DecayTiming::DuringTransit => "during_transit".to_string(),
                },
            ),
            ("positivity_every", p.positivity_every.to_string()),
        ]);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines() {
        let raw = RawConfig::parse("# header\n\n  seed = 3  # trailing\n").unwrap();
        assert_eq!(raw.get("seed"), Some("3"));
    }

    #[test]
    fn malformed_line() {
        assert!(matches!(RawConfig::parse("seed 3"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(RawConfig::parse("seed ="), Err(ConfigError::Syntax { .. })));
    }

    #[test]
    fn set_replaces_alternatives() {
        let mut raw = RawConfig::parse("alpha = 1\nhorizon = 10").unwrap();
        raw.set("omega_tau2", "0.1").unwrap();
        raw.set("n_events", "20").unwrap();
        assert_eq!(raw.get("alpha"), None);
        assert_eq!(raw.get("horizon"), None);
        assert!(raw.set("bogus", "1").is_err());
    }
}
