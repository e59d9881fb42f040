use catbeam::config::{parse_config, ConfigError, RawConfig, DEFAULT_CONFIG};
use catbeam_core::protocol::{L2Variant, Regime, ScheduleMode, TauKind};
use proptest::prelude::*;

const EXAMPLES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/examples");

fn example(name: &str) -> String {
    std::fs::read_to_string(format!("{EXAMPLES}/{name}")).unwrap()
}

fn with(extra: &str) -> String {
    format!("{DEFAULT_CONFIG}\n{extra}\n")
}

#[test]
fn default_file_parses_with_alpha_one() {
    let c = parse_config(DEFAULT_CONFIG).unwrap();
    let alpha = c.alpha();
    assert!((alpha.re - 1.0).abs() < 1e-12 && alpha.im == 0.0);
    let p = &c.protocol;
    assert_eq!((p.cutoff_a, p.cutoff_b, p.seed), (16, 16, 0));
    assert_eq!(p.sample_interval, 1.0);
    assert_eq!(p.schedule_mode, ScheduleMode::Poisson);
    assert_eq!(p.tau_distribution.kind, TauKind::Delta);
    assert!(
        matches!(p.l2.variant, L2Variant::HPrime { ga2_over_gb, deltap_over_delta } if ga2_over_gb == 1.0 && deltap_over_delta == -1.0)
    );
}

#[test]
fn empty_file_lists_every_missing_key() {
    match parse_config("") {
        Err(ConfigError::Missing(keys)) => assert_eq!(
            keys,
            ["scheme_variant", "g_a_tau1", "g_b_tau1", "gb_tau2", "gb_over_delta", "ga_over_gb", "alpha or omega_tau2", "kappa_over_r"]
        ),
        other => panic!("{other:?}"),
    }
}

#[test]
fn negative_kappa_is_rejected() {
    let text = DEFAULT_CONFIG.replace("kappa_over_r = 0", "kappa_over_r = -1");
    assert!(matches!(parse_config(&text), Err(ConfigError::Validation(_))));
}

#[test]
fn unknown_and_duplicate_keys_are_rejected() {
    assert!(matches!(parse_config(&with("colour = blue")), Err(ConfigError::UnknownKey { key, .. }) if key == "colour"));
    assert!(matches!(parse_config(&with("seed = 1\nseed = 2")), Err(ConfigError::DuplicateKey { .. })));
}

#[test]
fn violated_inequality_is_a_validation_error() {
    let text = DEFAULT_CONFIG.replace("omega_tau2 = 0.1", "omega_tau2 = 2");
    match parse_config(&text) {
        Err(ConfigError::Validation(msg)) => assert!(msg.starts_with("violated"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn figure_files_parse() {
    for name in [
        "default.conf",
        "fig4_h_prime.conf",
        "fig4_h_aux_10.conf",
        "fig4_h_aux_3.conf",
        "fig5_strong_detuning.conf",
        "fig5_inset_formula.conf",
        "fig5_inset_label.conf",
        "fig6_losses.conf",
        "fig6_losses_half.conf",
    ] {
        let c = parse_config(&example(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(c.inequalities().iter().all(|q| q.regime() != Regime::Violated), "{name}");
    }
}

#[test]
fn middle_curve_sits_on_the_dispersive_boundary() {
    let c = parse_config(&example("fig4_h_aux_10.conf")).unwrap();
    let q = c.inequalities().into_iter().find(|q| q.description.starts_with("g_b'^2")).unwrap();
    assert!((q.value - 1.0).abs() < 1e-9);
    assert_eq!(q.regime(), Regime::Marginal);
    assert!((c.alpha().re - 1.0).abs() < 1e-12);
}

#[test]
fn both_inset_readings() {
    let formula = parse_config(&example("fig5_inset_formula.conf")).unwrap();
    assert!((formula.alpha().re - 0.5f64.sqrt()).abs() < 1e-12);
    let label = parse_config(&example("fig5_inset_label.conf")).unwrap();
    assert_eq!(label.alpha().re, 0.5);
    assert!((label.protocol.l2.omega_tau2 - 0.025).abs() < 1e-15);
}

#[test]
fn alpha_and_omega_are_exclusive() {
    assert!(matches!(parse_config(&with("alpha = 1")), Err(ConfigError::Value { .. })));
}

#[test]
fn n_events_sets_the_horizon() {
    let c = parse_config(&with("n_events = 500")).unwrap();
    assert_eq!(c.protocol.horizon, 250.0);
}

#[test]
fn resonant_tau_snaps_the_detuning() {
    let c = parse_config(&with("resonant_tau = true")).unwrap();
    let d = c.protocol.l2.delta_tau2();
    let n = d / (2.0 * std::f64::consts::PI);
    assert!((n - n.round()).abs() < 1e-9, "{d}");
}

#[test]
fn distribution_keys() {
    let c = parse_config(&with("tau_distribution = gaussian\ndelta_tau = 0.01")).unwrap();
    assert_eq!(c.protocol.tau_distribution.kind, TauKind::Gaussian);
    assert_eq!(c.protocol.tau_distribution.spread, 0.01);
    let flat = parse_config(&with("tau_distribution = flat")).unwrap();
    assert_eq!(flat.protocol.tau_distribution.kind, TauKind::Flat);
    assert!(parse_config(&with("tau_distribution = flat\ndelta_tau = 0.1")).is_err());
    assert!(parse_config(&with("delta_tau = 0.1")).is_err());
}

#[test]
fn variant_keys_must_match_the_variant() {
    assert!(parse_config(&with("phi = 0.3")).is_err());
    let aux = DEFAULT_CONFIG.replace("h_prime", "h_aux");
    let c = parse_config(&format!("{aux}\nphi = 0.3")).unwrap();
    assert!(matches!(c.protocol.l2.variant, L2Variant::HAux { phi, .. } if phi == 0.3));
}

#[test]
fn resolved_echo_covers_overrides() {
    let mut raw = RawConfig::parse(DEFAULT_CONFIG).unwrap();
    raw.set("seed", "42").unwrap();
    let c = raw.resolve().unwrap();
    let echo = c.resolved();
    assert!(echo.contains(&("seed", "42".to_string())));
    assert!(echo.contains(&("cutoff_a", "16".to_string())));
}

proptest! {
    #[test]
    fn valid_couplings_round_trip(ga in 0.01f64..0.2, gb in 0.01f64..0.2, kappa in 0.0f64..1e-2, seed in any::<u64>()) {
        let text = DEFAULT_CONFIG
            .replace("g_a_tau1 = 0.1", &format!("g_a_tau1 = {ga}"))
            .replace("g_b_tau1 = 0.1", &format!("g_b_tau1 = {gb}"))
            .replace("kappa_over_r = 0", &format!("kappa_over_r = {kappa}\nseed = {seed}"));
        let c = parse_config(&text).unwrap();
        prop_assert_eq!(c.protocol.l1.g_a_tau1, ga);
        prop_assert_eq!(c.protocol.l1.g_b_tau1, gb);
        prop_assert_eq!(c.protocol.kappa, kappa);
        prop_assert_eq!(c.protocol.seed, seed);
    }

    #[test]
    fn lines_without_assignment_are_syntax_errors(word in "[a-z_]{1,12}") {
        let is_syntax_error = matches!(RawConfig::parse(&word), Err(ConfigError::Syntax { line: 1, .. }));
        prop_assert!(is_syntax_error);
    }
}
