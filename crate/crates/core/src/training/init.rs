use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};

/// Half-width of the Xavier uniform interval, `sqrt(6 / (fan_in + fan_out))`.
pub fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Draws `len` Xavier-uniform samples. Biases are zero-initialized by callers.
pub fn xavier_init<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, len: usize, rng: &mut R) -> Result<Vec<f64>> {
    if fan_in == 0 || fan_out == 0 {
        return Err(Error::Validation(format!(
            "fans must be positive, got fan_in={fan_in} fan_out={fan_out}"
        )));
    }
    let bound = xavier_bound(fan_in, fan_out);
    let dist = Uniform::new_inclusive(-bound, bound).expect("finite positive bound");
    Ok((0..len).map(|_| dist.sample(rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bound_closed_form() {
        assert_eq!(xavier_bound(3, 3), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = xavier_init(3, 3, 1000, &mut rng).unwrap();
        assert!(v.iter().all(|x| x.abs() <= 1.0));
    }

    #[test]
    fn variance_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let v = xavier_init(50, 50, 100_000, &mut rng).unwrap();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        assert!((var - 0.02).abs() < 0.002, "{var}");
    }

    #[test]
    fn deterministic_and_validated() {
        let a = xavier_init(4, 7, 64, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = xavier_init(4, 7, 64, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        assert!(xavier_init(0, 3, 1, &mut ChaCha8Rng::seed_from_u64(5)).is_err());
    }
}
