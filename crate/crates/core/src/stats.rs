//! Within-group normalizations and index-stable argmax/argmin.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Spread below which min-max normalization treats a group as constant.
pub const MIN_MAX_SPREAD_GUARD: f64 = 1e-12;

/// Population standard deviation below which z-scores collapse to zero.
pub const STD_GUARD: f64 = 1e-8;

pub(crate) fn check_finite<T: Scalar>(what: &'static str, values: &[T]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            what,
            index,
            value: values[index].as_f64(),
        }),
        None => Ok(()),
    }
}

/// Min-max scaling to `[0, 1]`; a group whose spread is under [`MIN_MAX_SPREAD_GUARD`] maps to 0.5.
pub fn min_max<T: Scalar>(values: &[T]) -> Result<Vec<T>> {
    if values.is_empty() {
        return Err(Error::EmptyGroup);
    }
    check_finite("values", values)?;
    let (lo, hi) = values.iter().fold((values[0], values[0]), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let spread = hi - lo;
    if spread < T::lit(MIN_MAX_SPREAD_GUARD) {
        return Ok(vec![T::lit(0.5); values.len()]);
    }
    Ok(values.iter().map(|&v| (v - lo) / spread).collect())
}

pub fn mean<T: Scalar>(values: &[T]) -> T {
    values.iter().copied().sum::<T>() / T::from_usize(values.len()).unwrap()
}

/// Standard deviation with divisor `G`.
pub fn population_std<T: Scalar>(values: &[T]) -> T {
    let m = mean(values);
    let var =
        values.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / T::from_usize(values.len()).unwrap();
    var.sqrt()
}

/// Z-score with population std; all zeros when the std is below `guard`.
pub fn z_score_with_guard<T: Scalar>(values: &[T], guard: T) -> Result<Vec<T>> {
    if values.is_empty() {
        return Err(Error::EmptyGroup);
    }
    check_finite("values", values)?;
    let m = mean(values);
    let sd = population_std(values);
    if sd < guard {
        return Ok(vec![T::zero(); values.len()]);
    }
    Ok(values.iter().map(|&v| (v - m) / sd).collect())
}

pub fn z_score<T: Scalar>(values: &[T]) -> Result<Vec<T>> {
    z_score_with_guard(values, T::lit(STD_GUARD))
}

/// Index of the largest value among `candidates`, lowest index on ties.
pub fn argmax_among<T: Scalar>(
    values: &[T],
    candidates: impl IntoIterator<Item = usize>,
) -> Option<usize> {
    candidates.into_iter().fold(None, |best, i| match best {
        Some(b) if values[b] > values[i] || (values[b] == values[i] && b < i) => Some(b),
        _ => Some(i),
    })
}

/// Index of the smallest value among `candidates`, lowest index on ties.
pub fn argmin_among<T: Scalar>(
    values: &[T],
    candidates: impl IntoIterator<Item = usize>,
) -> Option<usize> {
    candidates.into_iter().fold(None, |best, i| match best {
        Some(b) if values[b] < values[i] || (values[b] == values[i] && b < i) => Some(b),
        _ => Some(i),
    })
}

pub fn argmax<T: Scalar>(values: &[T]) -> Option<usize> {
    argmax_among(values, 0..values.len())
}
