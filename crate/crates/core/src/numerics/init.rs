//! Seed-deterministic Glorot-uniform initialization.

use rand::Rng;

use crate::numerics::{Matrix, Real};

/// Half-width `sqrt(6 / (fan_in + fan_out))` of the Glorot-uniform law.
pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// `rows x cols` matrix drawn i.i.d. from `U(-s, s)`, `s = glorot_limit(fan_in, fan_out)`.
pub fn glorot_uniform<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    fan_in: usize,
    fan_out: usize,
    rng: &mut R,
) -> Matrix {
    let data = glorot_vec(rows * cols, fan_in, fan_out, rng);
    Matrix::from_vec(rows, cols, data).expect("length matches by construction")
}

pub fn glorot_vec<R: Rng + ?Sized>(len: usize, fan_in: usize, fan_out: usize, rng: &mut R) -> Vec<Real> {
    let s = glorot_limit(fan_in, fan_out);
    (0..len).map(|_| rng.random_range(-s..s) as Real).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn same_seed_same_bytes() {
        let a = glorot_uniform(7, 5, 5, 7, &mut ChaCha8Rng::seed_from_u64(42));
        let b = glorot_uniform(7, 5, 5, 7, &mut ChaCha8Rng::seed_from_u64(42));
        let bits = |m: &Matrix| m.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn different_seed_differs() {
        let a = glorot_uniform(4, 4, 4, 4, &mut ChaCha8Rng::seed_from_u64(1));
        let b = glorot_uniform(4, 4, 4, 4, &mut ChaCha8Rng::seed_from_u64(2));
        assert_ne!(a.data()[0], b.data()[0]);
    }

    #[test]
    fn empirical_std_matches_uniform_law() {
        // U(-s, s) has standard deviation s / sqrt(3).
        let v = glorot_vec(10_000, 30, 70, &mut ChaCha8Rng::seed_from_u64(3));
        let n = v.len() as f64;
        let mean = v.iter().map(|&x| x as f64).sum::<f64>() / n;
        let var = v.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / n;
        let expected = glorot_limit(30, 70) / 3f64.sqrt();
        assert!((var.sqrt() - expected).abs() / expected < 0.1);
        let s = glorot_limit(30, 70);
        assert!(v.iter().all(|&x| (x as f64).abs() < s));
    }
}
