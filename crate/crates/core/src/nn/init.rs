use rand::Rng;

use crate::scalar::Scalar;

/// `n` draws from U(−√(1/fan_in), +√(1/fan_in)).
pub fn fan_in_uniform<S: Scalar, R: Rng + ?Sized>(rng: &mut R, fan_in: usize, n: usize) -> Vec<S> {
    let bound = (1.0 / fan_in.max(1) as f64).sqrt();
    (0..n)
        .map(|_| S::of(rng.gen_range(-bound..=bound)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn draws_stay_within_fan_in_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w: Vec<f64> = fan_in_uniform(&mut rng, 25, 1000);
        assert!(w.iter().all(|v| v.abs() <= 0.2));
        assert!(w.iter().any(|v| v.abs() > 0.15));
    }
}
