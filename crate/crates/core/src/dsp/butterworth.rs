use std::f64::consts::PI;
use std::fmt::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Second-order section `(b0 + b1 z⁻¹ + b2 z⁻²) / (1 + a1 z⁻¹ + a2 z⁻²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    /// Transfer function at `z`.
    pub fn response(&self, z: Complex64) -> Complex64 {
        let zi = z.inv();
        let zi2 = zi * zi;
        (self.b0 + self.b1 * zi + self.b2 * zi2) / (1.0 + self.a1 * zi + self.a2 * zi2)
    }

    pub fn poles(&self) -> [Complex64; 2] {
        let disc = Complex64::new(self.a1 * self.a1 - 4.0 * self.a2, 0.0).sqrt();
        [(-self.a1 + disc) / 2.0, (-self.a1 - disc) / 2.0]
    }

    /// Stability triangle: `|a2| < 1` and `|a1| < 1 + a2`.
    pub fn is_stable(&self) -> bool {
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }
}

/// Cascade of biquads with its design metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
    pub order: usize,
    pub cutoff_hz: f64,
    pub sample_rate_hz: f64,
}

/// Butterworth high-pass of even `order` as second-order sections.
///
/// Analog prototype poles are placed on the unit circle, mapped to a
/// high-pass with the prewarped cutoff, then through the bilinear transform.
/// Each section has its double zero at `z = 1` and unity gain at Nyquist.
pub fn design_butterworth_highpass(order: usize, cutoff_hz: f64, sample_rate_hz: f64) -> Result<SosFilter> {
    if order == 0 || order % 2 != 0 {
        return Err(Error::InvalidArgument(format!("filter order {order} must be even and positive")));
    }
    if !(sample_rate_hz > 0.0) || !(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0) {
        return Err(Error::InvalidArgument(format!(
            "cutoff {cutoff_hz} Hz must lie strictly between 0 and Nyquist ({} Hz)",
            sample_rate_hz / 2.0
        )));
    }
    let fs2 = 2.0 * sample_rate_hz;
    let warped = fs2 * (PI * cutoff_hz / sample_rate_hz).tan();
    let n = order as f64;
    let sections = (0..order / 2)
        .map(|k| {
            let theta = PI * (2.0 * k as f64 + n + 1.0) / (2.0 * n);
            let prototype = Complex64::from_polar(1.0, theta);
            let analog = warped / prototype;
            let z = (fs2 + analog) / (fs2 - analog);
            let (re, mag2) = (z.re, z.norm_sqr());
            let gain = (1.0 + 2.0 * re + mag2) / 4.0;
            Biquad {
                b0: gain,
                b1: -2.0 * gain,
                b2: gain,
                a1: -2.0 * re,
                a2: mag2,
            }
        })
        .collect();
    Ok(SosFilter {
        sections,
        order,
        cutoff_hz,
        sample_rate_hz,
    })
}

impl SosFilter {
    /// Complex response at `freq_hz`.
    pub fn response(&self, freq_hz: f64) -> Complex64 {
        let z = Complex64::from_polar(1.0, 2.0 * PI * freq_hz / self.sample_rate_hz);
        self.sections.iter().map(|s| s.response(z)).product()
    }

    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        self.response(freq_hz).norm()
    }

    pub fn magnitude_db(&self, freq_hz: f64) -> f64 {
        20.0 * self.magnitude(freq_hz).log10()
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.sections.iter().flat_map(|s| s.poles()).collect()
    }

    pub fn is_stable(&self) -> bool {
        self.sections.iter().all(Biquad::is_stable) && self.poles().iter().all(|p| p.norm() < 1.0)
    }

    /// Plain-text coefficient table: `#` comment lines with the design
    /// metadata, then one `b0 b1 b2 a1 a2` line per section.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# butterworth highpass").unwrap();
        writeln!(out, "# order {}", self.order).unwrap();
        writeln!(out, "# cutoff_hz {}", self.cutoff_hz).unwrap();
        writeln!(out, "# sample_rate_hz {}", self.sample_rate_hz).unwrap();
        writeln!(out, "# b0 b1 b2 a1 a2").unwrap();
        for s in &self.sections {
            writeln!(out, "{:.17e} {:.17e} {:.17e} {:.17e} {:.17e}", s.b0, s.b1, s.b2, s.a1, s.a2).unwrap();
        }
        out
    }

    /// Parses the section lines of a coefficient table.
    pub fn parse_table(text: &str) -> Result<Vec<Biquad>> {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|line| {
                let v: Vec<f64> = line
                    .split_whitespace()
                    .map(|x| x.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::InvalidArgument(format!("coefficient line {line:?}: {e}")))?;
                match v[..] {
                    [b0, b1, b2, a1, a2] => Ok(Biquad { b0, b1, b2, a1, a2 }),
                    _ => Err(Error::InvalidArgument(format!("expected 5 coefficients, got {line:?}"))),
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn augmentation_filter() -> SosFilter {
        design_butterworth_highpass(8, 100.0, 250.0).unwrap()
    }

    #[test]
    fn cutoff_stopband_and_nyquist_levels() {
        let f = augmentation_filter();
        assert_eq!(f.sections.len(), 4);
        assert!((f.magnitude_db(100.0) + 3.0103).abs() <= 0.1, "{}", f.magnitude_db(100.0));
        assert!(f.magnitude_db(10.0) <= -80.0, "{}", f.magnitude_db(10.0));
        assert!(f.magnitude_db(125.0).abs() <= 0.1);
    }

    #[test]
    fn magnitude_matches_digital_butterworth_formula() {
        // |H|² = 1 / (1 + (tan(πfc/fs)/tan(πf/fs))^(2n)) for the bilinear design
        let f = augmentation_filter();
        for hz in [5.0, 40.0, 80.0, 95.0, 100.0, 105.0, 110.0, 124.0] {
            let ratio = (PI * 100.0 / 250.0).tan() / (PI * hz / 250.0).tan();
            let expected = 1.0 / (1.0 + ratio.powi(16)).sqrt();
            let got = f.magnitude(hz);
            assert!((got - expected).abs() <= 1e-9 * expected.max(1e-300) + 1e-15, "{hz}: {got} vs {expected}");
        }
    }

    #[test]
    fn poles_inside_unit_circle() {
        let f = augmentation_filter();
        assert!(f.is_stable());
        for p in f.poles() {
            assert!(p.norm() < 1.0);
        }
        for order in [2, 4, 6, 10] {
            for cutoff in [1.0, 30.0, 100.0, 120.0] {
                assert!(design_butterworth_highpass(order, cutoff, 250.0).unwrap().is_stable());
            }
        }
    }

    #[test]
    fn invalid_designs_are_rejected() {
        assert!(design_butterworth_highpass(8, 125.0, 250.0).is_err());
        assert!(design_butterworth_highpass(7, 100.0, 250.0).is_err());
        assert!(design_butterworth_highpass(8, 0.0, 250.0).is_err());
    }

    #[test]
    fn coefficient_table_round_trips() {
        let f = augmentation_filter();
        let table = f.to_table();
        let parsed = SosFilter::parse_table(&table).unwrap();
        assert_eq!(parsed, f.sections);
        let first = table.lines().find(|l| !l.starts_with('#')).unwrap();
        let mantissa = first.split_whitespace().next().unwrap().split('e').next().unwrap();
        assert!(mantissa.chars().filter(char::is_ascii_digit).count() >= 15);
    }
}
