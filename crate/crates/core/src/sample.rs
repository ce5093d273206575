//! Deterministic quasi-random point sets (Halton sequences). Used for
//! involution checks and property suites so every run is reproducible.

use crate::scalar::{real, Real};
use nalgebra::DVector;

const PRIMES: [u64; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

/// `k`-th element of the van der Corput sequence in the given base.
fn van_der_corput(mut k: u64, base: u64) -> f64 {
    let mut denom = 1.0;
    let mut out = 0.0;
    while k > 0 {
        denom *= base as f64;
        out += (k % base) as f64 / denom;
        k /= base;
    }
    out
}

/// Points of the Halton sequence scaled into the box `[lo, hi]^dim`.
/// Indexing starts at 1 so the first point is interior.
pub fn halton_box<F: Real>(count: usize, dim: usize, lo: f64, hi: f64) -> Vec<DVector<F>> {
    assert!(dim <= PRIMES.len(), "dimension too large for prime table");
    (1..=count as u64)
        .map(|k| {
            DVector::from_fn(dim, |d, _| {
                real::<F>(lo + (hi - lo) * van_der_corput(k, PRIMES[d]))
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_fill_the_box() {
        let pts = halton_box::<f64>(128, 3, -1.0, 1.0);
        assert_eq!(pts.len(), 128);
        for p in &pts {
            assert!(p.iter().all(|x| (-1.0..=1.0).contains(x)));
        }
        // Coordinates are not all clustered: mean close to box centre.
        let mean = pts.iter().map(|p| p[0]).sum::<f64>() / 128.0;
        assert!(mean.abs() < 0.1);
    }

    #[test]
    fn deterministic() {
        let a = halton_box::<f64>(16, 4, 0.0, 1.0);
        let b = halton_box::<f64>(16, 4, 0.0, 1.0);
        assert_eq!(a, b);
    }
}
