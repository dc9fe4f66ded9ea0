//! Amplitude scalars for the sparse Fock-state engine.
//!
//! States are stored as coefficients of creation-operator monomials, so every
//! ideal-parameter amplitude in this problem is a Gaussian rational times a
//! power of 1/sqrt(2). Two scalar types realize that observation:
//!
//! * [`Cf64`] — `Complex<f64>`, used for every run involving generic loss
//!   rates or dark counts.
//! * [`ExactAmp`] — `(re + i*im) * 2^(-k/2)` with 128-bit integer parts,
//!   used to reproduce ideal-parameter results as exact rationals.
//!
//! Probabilities come out as the matching [`Prob`] type (`f64` or
//! `Ratio<i128>`). Exact arithmetic reports overflow and never wraps.

use num_complex::Complex64;
use num_rational::Ratio;

use crate::error::{CoreError, Result};

/// Stored terms with squared magnitude below this are dropped (float engine).
pub const PRUNE_THRESHOLD: f64 = 1e-24;

/// Probabilities at or below this floor are treated as "does not occur" when
/// building post-selection plans from float-engine runs.
pub const OCCURRENCE_FLOOR: f64 = 1e-14;

/// Probability scalar attached to an amplitude type.
pub trait Prob: Clone + PartialEq + PartialOrd + std::fmt::Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn div(&self, rhs: &Self) -> Self;
    fn from_integer(v: u128) -> Self;
    fn to_f64(&self) -> f64;
    /// True when the value is large enough to count as a real occurrence
    /// rather than floating-point residue.
    fn occurs(&self) -> bool;
}

impl Prob for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(&self, rhs: &Self) -> Self {
        self / rhs
    }
    fn from_integer(v: u128) -> Self {
        v as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn occurs(&self) -> bool {
        *self > OCCURRENCE_FLOOR
    }
}

/// Exact probability: a reduced ratio of 128-bit integers.
pub type ExactProb = Ratio<i128>;

impl Prob for ExactProb {
    fn zero() -> Self {
        Ratio::from_integer(0)
    }
    fn one() -> Self {
        Ratio::from_integer(1)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(&self, rhs: &Self) -> Self {
        self / rhs
    }
    fn from_integer(v: u128) -> Self {
        Ratio::from_integer(i128::try_from(v).expect("integer too large for exact probability"))
    }
    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
    fn occurs(&self) -> bool {
        *self.numer() > 0
    }
}

/// Complex amplitude scalar used by [`crate::state::PureState`].
pub trait Amp: Clone + PartialEq + std::fmt::Debug + Send + Sync + 'static {
    type Prob: Prob;

    fn zero() -> Self;
    fn one() -> Self;
    /// Builds `(re + i*im) * 2^(-half_pow2/2)`.
    fn from_parts(re: i64, im: i64, half_pow2: u32) -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, rhs: &Self) -> Result<Self>;
    fn mul(&self, rhs: &Self) -> Result<Self>;
    /// Multiplies by a non-negative integer (multinomial coefficients).
    fn scale_int(&self, k: u128) -> Result<Self>;
    fn neg(&self) -> Self;
    fn conj(&self) -> Self;
    fn norm_sqr(&self) -> Self::Prob;
    /// True when the stored term should be dropped from a sparse state.
    fn should_prune(&self) -> bool;
}

/// `Complex<f64>` amplitude.
pub type Cf64 = Complex64;

impl Amp for Cf64 {
    type Prob = f64;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_parts(re: i64, im: i64, half_pow2: u32) -> Self {
        let scale = 2f64.powf(-(half_pow2 as f64) / 2.0);
        Complex64::new(re as f64 * scale, im as f64 * scale)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn add(&self, rhs: &Self) -> Result<Self> {
        Ok(self + rhs)
    }
    fn mul(&self, rhs: &Self) -> Result<Self> {
        Ok(self * rhs)
    }
    fn scale_int(&self, k: u128) -> Result<Self> {
        Ok(self * k as f64)
    }
    fn neg(&self) -> Self {
        -self
    }
    fn conj(&self) -> Self {
        Complex64::new(self.re, -self.im)
    }
    fn norm_sqr(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }
    fn should_prune(&self) -> bool {
        self.norm_sqr() < PRUNE_THRESHOLD
    }
}

/// Exact amplitude `(re + i*im) * 2^(-half/2)` with `re, im: i128`.
///
/// The representation is canonical: `half` is reduced while both parts are
/// even, and the zero amplitude is `(0, 0, 0)`. Sums of amplitudes whose
/// scales differ by an odd power of sqrt(2) are not representable and
/// report [`CoreError::ScaleMismatch`]; they cannot arise when transforming
/// states of definite photon number.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ExactAmp {
    re: i128,
    im: i128,
    half: u32,
}

/// Largest supported half-power of two; `2^MAX_HALF` must fit in `i128`.
const MAX_HALF: u32 = 120;

impl ExactAmp {
    fn canonical(mut re: i128, mut im: i128, mut half: u32) -> Self {
        if re == 0 && im == 0 {
            return ExactAmp { re: 0, im: 0, half: 0 };
        }
        while half >= 2 && re % 2 == 0 && im % 2 == 0 {
            re /= 2;
            im /= 2;
            half -= 2;
        }
        ExactAmp { re, im, half }
    }

    pub fn gaussian_parts(&self) -> (i128, i128, u32) {
        (self.re, self.im, self.half)
    }
}

impl Amp for ExactAmp {
    type Prob = ExactProb;

    fn zero() -> Self {
        ExactAmp { re: 0, im: 0, half: 0 }
    }
    fn one() -> Self {
        ExactAmp { re: 1, im: 0, half: 0 }
    }
    fn from_parts(re: i64, im: i64, half_pow2: u32) -> Self {
        Self::canonical(re as i128, im as i128, half_pow2)
    }
    fn is_zero(&self) -> bool {
        self.re == 0 && self.im == 0
    }

    fn add(&self, rhs: &Self) -> Result<Self> {
        if self.is_zero() {
            return Ok(*rhs);
        }
        if rhs.is_zero() {
            return Ok(*self);
        }
        let (lo, hi) = if self.half <= rhs.half {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let diff = hi.half - lo.half;
        if diff % 2 != 0 {
            return Err(CoreError::ScaleMismatch(self.half, rhs.half));
        }
        let factor = 1i128
            .checked_shl(diff / 2)
            .ok_or(CoreError::Overflow("exact amplitude rescale"))?;
        let re = lo
            .re
            .checked_mul(factor)
            .and_then(|v| v.checked_add(hi.re))
            .ok_or(CoreError::Overflow("exact amplitude add"))?;
        let im = lo
            .im
            .checked_mul(factor)
            .and_then(|v| v.checked_add(hi.im))
            .ok_or(CoreError::Overflow("exact amplitude add"))?;
        Ok(Self::canonical(re, im, hi.half))
    }

    fn mul(&self, rhs: &Self) -> Result<Self> {
        let half = self
            .half
            .checked_add(rhs.half)
            .filter(|h| *h <= MAX_HALF)
            .ok_or(CoreError::Overflow("exact amplitude scale"))?;
        let re = self
            .re
            .checked_mul(rhs.re)
            .zip(self.im.checked_mul(rhs.im))
            .and_then(|(a, b)| a.checked_sub(b))
            .ok_or(CoreError::Overflow("exact amplitude mul"))?;
        let im = self
            .re
            .checked_mul(rhs.im)
            .zip(self.im.checked_mul(rhs.re))
            .and_then(|(a, b)| a.checked_add(b))
            .ok_or(CoreError::Overflow("exact amplitude mul"))?;
        Ok(Self::canonical(re, im, half))
    }

    fn scale_int(&self, k: u128) -> Result<Self> {
        let k = i128::try_from(k).map_err(|_| CoreError::Overflow("exact amplitude scale_int"))?;
        let re = self
            .re
            .checked_mul(k)
            .ok_or(CoreError::Overflow("exact amplitude scale_int"))?;
        let im = self
            .im
            .checked_mul(k)
            .ok_or(CoreError::Overflow("exact amplitude scale_int"))?;
        Ok(Self::canonical(re, im, self.half))
    }

    fn neg(&self) -> Self {
        ExactAmp { re: -self.re, im: -self.im, half: self.half }
    }
    fn conj(&self) -> Self {
        ExactAmp { re: self.re, im: -self.im, half: self.half }
    }

    fn norm_sqr(&self) -> ExactProb {
        let num = self.re * self.re + self.im * self.im;
        let den = 1i128 << self.half;
        Ratio::new(num, den)
    }

    fn should_prune(&self) -> bool {
        self.is_zero()
    }
}
