//! High-pass filter design, filtering and noise-swap augmentation.

mod augment;
mod butterworth;
mod filter;

pub use augment::{augment, draw_donors, extract_noise, noise_swap, swap_pairs, AugmentConfig, NoiseCandidate, Provenance};
pub use butterworth::{design_butterworth_highpass, Biquad, SosFilter};
