use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `(S(10⁶) - S(10⁵)) / (S(10⁵) - S(10⁴))` for the series `Σ t^{-r}`:
/// about `10^{1-r}`, so below one exactly when the series converges.
pub fn increment_ratio(r: f64) -> f64 {
    let block = |lo: u64, hi: u64| -> f64 { (lo..hi).map(|t| (t as f64).powf(-r)).sum() };
    block(100_000, 1_000_000) / block(10_000, 100_000)
}

pub fn converges_numerically(r: f64) -> bool {
    increment_ratio(r) < 1.0
}

/// Random `(p, q)` whose series exponents all sit at least `margin` away from
/// the convergence boundary.
pub fn random_pairs(n: usize, margin: f64, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < n {
        let p: f64 = rng.random_range(0.2..1.6);
        let q: f64 = rng.random_range(-0.3..0.9);
        let clear = q.abs() >= margin
            && (p - 1.0).abs() >= margin
            && (p + q - 1.0).abs() >= margin
            && (2.0 * (p - q) - 1.0).abs() >= margin;
        if clear {
            out.push((p, q));
        }
    }
    out
}

/// Independent verdict on each step-size condition from partial sums.
pub fn numerical_verdict(p: f64, q: f64) -> [bool; 4] {
    let width_vanishes = 1_000_000f64.powf(-q) < 10_000f64.powf(-q);
    [
        width_vanishes,
        !converges_numerically(p),
        converges_numerically(p + q),
        converges_numerically(2.0 * (p - q)),
    ]
}
