//! Generative models for signatures and activations: parameters are
//! inferred from measured power (transition tables, templates) and then
//! sampled under explicit seeds.

mod arma;
mod markov;
mod multistate;
mod partition;
mod signature;
mod template;

pub use arma::{is_stationary, sample_arma, ArmaParams};
pub use markov::{
    infer_transitions, sample_onoff, threshold_onoff, TransitionTable, DEFAULT_THRESHOLD,
};
pub use multistate::{sample_multistate_activation, MultiStateTable};
pub use partition::{day_number, DayCalendar, TimePartition, HALF_MINUTES_PER_DAY};
pub use signature::{default_sigma, sample_signature, SignatureTemplate};
pub use template::{
    learn_template, sample_complex_activation, sample_dirichlet, sample_multisig_activation,
    ActivationTemplate, DeltaMode, LearnedTemplate,
};
