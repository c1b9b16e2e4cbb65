//! Domain logic for the smart cooking stack.
//!
//! Nothing in this crate does I/O beyond parsing documents handed to it;
//! the networked control plane and assistant gateway live in
//! `smartcook-service`.

pub mod doneness;
pub mod intent;
pub mod predictor;
pub mod thermal;
pub mod wire;

/// Canonical doneness knowledge file shipped with the crate.
pub const DONENESS_KB: &str = include_str!("../data/doneness.toml");

/// Interaction model with the four thermometer intents and slot types.
pub const INTERACTION_MODEL: &str = include_str!("../data/interaction_model.json");

/// Additional sample utterances covering the spoken phrasings of the
/// thermometer use cases that the base interaction model does not.
pub const UTTERANCE_EXTENSIONS: &str = include_str!("../data/utterance_extensions.json");

/// Lowest temperature accepted as a target or alarm threshold, °F.
pub const MIN_SETTABLE_F: f64 = 32.0;
/// Highest temperature accepted as a target or alarm threshold, °F.
pub const MAX_SETTABLE_F: f64 = 572.0;

/// True when `temp_f` is an acceptable target or alarm threshold.
pub fn settable(temp_f: f64) -> bool {
    temp_f.is_finite() && (MIN_SETTABLE_F..=MAX_SETTABLE_F).contains(&temp_f)
}
