use super::butterworth::{Biquad, SosFilter};
use crate::error::{Error, Result};

fn run_section(s: &Biquad, data: &mut [f64]) {
    // transposed direct form II
    let (mut z1, mut z2) = (0.0, 0.0);
    for x in data.iter_mut() {
        let input = *x;
        let y = s.b0 * input + z1;
        z1 = s.b1 * input - s.a1 * y + z2;
        z2 = s.b2 * input - s.a2 * y;
        *x = y;
    }
}

fn check_finite(signal: &[f64]) -> Result<()> {
    match signal.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(format!("filter input sample {i} is {}", signal[i]))),
        None => Ok(()),
    }
}

impl SosFilter {
    /// Causal cascade with zero initial conditions, in place.
    pub fn apply_in_place(&self, signal: &mut [f64]) -> Result<()> {
        check_finite(signal)?;
        for s in &self.sections {
            run_section(s, signal);
        }
        Ok(())
    }

    /// Causal cascade with zero initial conditions.
    pub fn apply(&self, signal: &[f64]) -> Result<Vec<f64>> {
        let mut out = signal.to_vec();
        self.apply_in_place(&mut out)?;
        Ok(out)
    }

    /// Forward then backward pass: zero phase, squared magnitude.
    pub fn apply_zero_phase(&self, signal: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.apply(signal)?;
        out.reverse();
        self.apply_in_place(&mut out)?;
        out.reverse();
        Ok(out)
    }
}
