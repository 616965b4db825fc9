//! Trials, campaigns and their configuration.

pub mod campaign;
pub mod config;
pub mod rng;
pub mod trial;

pub use campaign::{run_campaign, simulate, with_jobs, CampaignResult, MdFaRow};
pub use config::{CampaignConfig, PepSettings, DEFAULT_SLOTS};
pub use trial::{md_fa, run_trial, TrialKnobs, TrialOutcome};
