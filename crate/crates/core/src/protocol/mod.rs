//! Atom-beam injection protocol: schemes, rates, schedules and the run loop.

pub mod event;
pub mod rates;
pub mod run;
pub mod schedule;
pub mod scheme;

pub use event::{atom_event, TransitMap};
pub use rates::{effective_rates, EffectiveRates, TauDistribution, TauKind};
pub use run::{run_protocol, run_protocol_with_schedule, DecayMethod, DecayTiming, ProtocolConfig};
pub use schedule::{make_schedule, AtomEvent, AtomType, BeamRequest, BeamSchedule, ScheduleMode};
pub use scheme::{
    alpha_from_drive, build_hamiltonian_l1, build_hamiltonian_l2, cancellation_check, AtomScheme, CancellationReport, Inequality,
    L1InitialState, L2Variant, Regime, SchemeL1Params, SchemeL2Params,
};
