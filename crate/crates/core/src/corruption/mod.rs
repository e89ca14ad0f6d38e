//! Artificial corruption of clean speech: reverberation, additive noise at a target
//! SNR and the telephone channel.

pub mod aweight;
pub mod noise;
pub mod pipeline;
pub mod pools;
pub mod recipe;
pub mod rir;
pub mod snr;
pub mod telephone;

pub use aweight::{a_weight_filter, a_weight_gain_db};
pub use noise::{synth_babble, synth_hum, synth_shaped_white, NoiseCategory, NoiseSample, SpectralShape, Split};
pub use pipeline::{corrupt, fit_noise, reverberate, Corrupted, CorruptionPlan};
pub use pools::{disjoint_ids, NoisePool, PoolSet, ReverbSource, RirEntry, RirPool};
pub use recipe::{apply_recipe, draw_recipe, parse_recipes, write_recipes, Recipe};
pub use rir::{generate_rir, RirPair, RoomSpec, SPEED_OF_SOUND};
pub use snr::{measure_snr, snr_scale};
pub use telephone::{telephone_filter, telephone_gain_db};
