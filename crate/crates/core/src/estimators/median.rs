use crate::error::{invalid, Result};

/// Splits `samples` into `blocks` equal consecutive blocks, applies `base` to
/// each and returns the median of the block estimates (the lower median for
/// an even number of blocks).
pub fn median_boost<T, F>(base: F, samples: &[T], blocks: usize) -> Result<f64>
where
    F: Fn(&[T]) -> Result<f64>,
{
    if blocks == 0 {
        return invalid("blocks must be positive");
    }
    if blocks > samples.len() {
        return invalid(format!(
            "{blocks} blocks requested for {} samples",
            samples.len()
        ));
    }
    if !samples.len().is_multiple_of(blocks) {
        return invalid(format!(
            "{} samples do not split into {blocks} equal blocks",
            samples.len()
        ));
    }
    let mut estimates = samples
        .chunks_exact(samples.len() / blocks)
        .map(&base)
        .collect::<Result<Vec<f64>>>()?;
    estimates.sort_by(f64::total_cmp);
    Ok(estimates[(estimates.len() - 1) / 2])
}
