use crate::{Error, Result};

/// Weights for `n` ranked candidates: 30% extra to the best match, 10% extra
/// to the second, and 60% spread evenly over all `n`.
///
/// Computed as exact integer ratios `(6 + 3n·[i=1] + n·[i=2]) / 10n`, so that
/// `n = 3` gives exactly `[0.5, 0.3, 0.2]`. A single candidate takes all the
/// weight.
pub fn compute_weights(n: usize) -> Result<Vec<f64>> {
    match n {
        0 => Err(Error::Validation("cannot weight zero candidates".to_owned())),
        1 => Ok(vec![1.0]),
        _ => {
            let denom = (10 * n) as f64;
            Ok((0..n)
                .map(|i| {
                    let bonus = match i {
                        0 => 3 * n,
                        1 => n,
                        _ => 0,
                    };
                    (6 + bonus) as f64 / denom
                })
                .collect())
        }
    }
}
