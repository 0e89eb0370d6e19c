//! Trials, the on-disk trial-set format, epoching and splitting rules, and a
//! synthetic signal generator.

mod csv_import;
mod epoch;
mod store;
mod synth;
mod trial;

pub use csv_import::import_csv_trial;
pub use epoch::{filter_rejected, stratified_counts, train_test_split, window_split, window_split_set, AcceptanceReport};
pub use store::{blob_path_for, load_trialset, read_manifest, save_trialset, Manifest, TrialRecord, MANIFEST_VERSION};
pub use synth::{default_channel_names, synth_generate, SynthConfig};
pub use trial::{Split, Trial, TrialSet};
