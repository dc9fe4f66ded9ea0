//! Exact integer combinatorics: binomials, factorials, Hilbert-space
//! dimensions, and measurement-outcome counting.

use crate::error::{CoreError, Result};

/// Binomial coefficient `C(n, k)` with checked 128-bit arithmetic.
pub fn binomial(n: u64, k: u64) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc
            .checked_mul((n - i) as u128)
            .ok_or(CoreError::Overflow("binomial"))?;
        // (n-i) runs over k consecutive factors, so division is exact here.
        acc /= (i + 1) as u128;
    }
    Ok(acc)
}

/// Dimension of the space of `photons` indistinguishable photons spread over
/// `modes` modes: `C(modes + photons - 1, photons)`.
pub fn hilbert_dim(modes: u64, photons: u64) -> Result<u128> {
    if modes == 0 {
        return Err(CoreError::ParameterRange {
            name: "modes",
            value: 0.0,
            range: ">= 1",
        });
    }
    binomial(modes + photons - 1, photons)
}

/// Dimension of the space with any photon number from 0 through `photons`,
/// i.e. the cumulative sum of [`hilbert_dim`]: `C(modes + photons, photons)`.
pub fn hilbert_dim_up_to(modes: u64, photons: u64) -> Result<u128> {
    if modes == 0 {
        return Err(CoreError::ParameterRange {
            name: "modes",
            value: 0.0,
            range: ">= 1",
        });
    }
    binomial(modes + photons, photons)
}

/// `n!` as `u128` (exact through `n = 33`).
pub fn factorial(n: u8) -> Result<u128> {
    let mut acc: u128 = 1;
    for i in 2..=n as u128 {
        acc = acc.checked_mul(i).ok_or(CoreError::Overflow("factorial"))?;
    }
    Ok(acc)
}

/// Multinomial coefficient `(sum parts)! / prod(part!)`.
pub fn multinomial(parts: &[u8]) -> Result<u128> {
    let mut acc: u128 = 1;
    let mut total: u64 = 0;
    for &p in parts {
        for i in 1..=p as u64 {
            total += 1;
            acc = acc
                .checked_mul(total as u128)
                .ok_or(CoreError::Overflow("multinomial"))?;
            acc /= i as u128;
        }
    }
    Ok(acc)
}

/// Product of `occ[m]!` over all modes.
pub fn occupancy_factorial(occ: &[u8]) -> Result<u128> {
    let mut acc: u128 = 1;
    for &n in occ {
        acc = acc
            .checked_mul(factorial(n)?)
            .ok_or(CoreError::Overflow("occupancy factorial"))?;
    }
    Ok(acc)
}

/// Number of distinct photon-count outcome patterns over `modes` detection
/// modes when the underlying state holds at most `photons` photons and each
/// mode may gain at most one dark count.
///
/// A pattern `m` is reachable exactly when `sum_i max(m_i - 1, 0) <= photons`,
/// which counts to `sum_s C(modes, s) * C(photons, s) * 2^(modes - s)`.
pub fn counting_outcome_patterns(modes: u64, photons: u64) -> Result<u128> {
    let mut total: u128 = 0;
    for s in 0..=photons.min(modes) {
        let pow2 = 1u128
            .checked_shl((modes - s) as u32)
            .ok_or(CoreError::Overflow("outcome pattern count"))?;
        let term = binomial(modes, s)?
            .checked_mul(binomial(photons, s)?)
            .and_then(|v| v.checked_mul(pow2))
            .ok_or(CoreError::Overflow("outcome pattern count"))?;
        total = total
            .checked_add(term)
            .ok_or(CoreError::Overflow("outcome pattern count"))?;
    }
    Ok(total)
}
