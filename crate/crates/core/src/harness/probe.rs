use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};

/// Largest `positions x alphabet` product probed exhaustively.
pub const EXHAUSTIVE_PROBE_LIMIT: usize = 10_000;

/// Largest change of `estimator` when a single sample is replaced by a symbol
/// of `alphabet`.
///
/// Every (position, symbol) replacement is tried when
/// `samples.len() * alphabet.len() <= EXHAUSTIVE_PROBE_LIMIT`; otherwise
/// `swaps` replacements are drawn with the given seed.
pub fn bounded_difference_probe<T, F>(
    estimator: F,
    samples: &[T],
    swaps: usize,
    alphabet: &[T],
    seed: u64,
) -> Result<f64>
where
    T: Clone + PartialEq,
    F: Fn(&[T]) -> Result<f64>,
{
    if samples.is_empty() {
        return invalid("probe needs a nonempty sample");
    }
    if alphabet.is_empty() {
        return invalid("probe needs a nonempty replacement alphabet");
    }
    let base = estimator(samples)?;
    let mut work = samples.to_vec();
    let mut worst = 0.0f64;
    let mut try_swap = |pos: usize, sym: &T, work: &mut Vec<T>| -> Result<()> {
        if work[pos] == *sym {
            return Ok(());
        }
        let old = std::mem::replace(&mut work[pos], sym.clone());
        let v = estimator(work);
        work[pos] = old;
        worst = worst.max((v? - base).abs());
        Ok(())
    };
    if samples.len().saturating_mul(alphabet.len()) <= EXHAUSTIVE_PROBE_LIMIT {
        for pos in 0..samples.len() {
            for sym in alphabet {
                try_swap(pos, sym, &mut work)?;
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..swaps {
            let pos = rng.random_range(0..samples.len());
            let sym = alphabet.choose(&mut rng).expect("nonempty alphabet");
            try_swap(pos, sym, &mut work)?;
        }
    }
    Ok(worst)
}
