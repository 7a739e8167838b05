//! Measurement series, synthetic level-shift testbenches, and error metrics.
//!
//! The step-candidate dictionary is the lower-triangular all-ones matrix, so
//! its action on a coefficient vector is a running prefix sum and the matrix
//! itself is never materialized (see [`candidate_matvec`]). Indices are
//! 1-based at every public boundary.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Errors from signal construction, generation, and metrics.
#[derive(Clone, Debug, PartialEq)]
pub enum SignalError {
    /// Signals and coefficient vectors must hold at least one sample.
    Empty,
    /// Scaling an all-zero signal is undefined.
    AllZero,
    /// Vector lengths must agree with the profile length.
    LengthMismatch { expected: usize, got: usize },
    /// Break index outside `[1, n]`.
    IndexOutOfRange { index: usize, n: usize },
    /// The same break index was given twice.
    DuplicateBreak { index: usize },
    /// More breaks requested than available positions.
    TooManyBreaks { requested: usize, n: usize },
    /// Magnitude interval must satisfy `0 <= low <= high`.
    InvalidMagnitudeRange { low: f64, high: f64 },
    /// Noise standard deviation must be non-negative and finite.
    InvalidNoiseSigma { sigma: f64 },
}

impl fmt::Display for SignalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalError::Empty => write!(f, "signal must contain at least one sample"),
            SignalError::AllZero => write!(f, "cannot scale an all-zero signal"),
            SignalError::LengthMismatch { expected, got } => {
                write!(f, "length mismatch: expected {expected}, got {got}")
            }
            SignalError::IndexOutOfRange { index, n } => {
                write!(f, "break index {index} outside [1, {n}]")
            }
            SignalError::DuplicateBreak { index } => {
                write!(f, "duplicate break index {index}")
            }
            SignalError::TooManyBreaks { requested, n } => {
                write!(f, "{requested} breaks requested for {n} positions")
            }
            SignalError::InvalidMagnitudeRange { low, high } => {
                write!(f, "invalid magnitude range [{low}, {high}]")
            }
            SignalError::InvalidNoiseSigma { sigma } => {
                write!(f, "invalid noise sigma {sigma}")
            }
        }
    }
}

impl core::error::Error for SignalError {}

/// A measurement series plus the divisor applied during pre-scaling.
///
/// `scale_factor` is 1.0 for unscaled data and multiplies back to the
/// original units after solving.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    scale_factor: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>) -> Result<Self, SignalError> {
        Self::with_scale_factor(samples, 1.0)
    }

    pub fn with_scale_factor(samples: Vec<f64>, scale_factor: f64) -> Result<Self, SignalError> {
        if samples.is_empty() {
            return Err(SignalError::Empty);
        }
        Ok(Signal {
            samples,
            scale_factor,
        })
    }

    /// Number of samples N.
    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn scale_factor(&self) -> f64 {
        self.scale_factor
    }

    /// Divides every sample by the maximum absolute sample so that
    /// `max |sample| == 1`, composing the divisor into `scale_factor`.
    /// Scaling an already scaled signal changes nothing.
    pub fn scaled(&self) -> Result<Signal, SignalError> {
        let max_abs = self.samples.iter().fold(0.0f64, |acc, s| acc.max(s.abs()));
        if max_abs == 0.0 {
            return Err(SignalError::AllZero);
        }
        Ok(Signal {
            samples: self.samples.iter().map(|s| s / max_abs).collect(),
            scale_factor: self.scale_factor * max_abs,
        })
    }
}

#[cfg(feature = "serde")]
mod signal_serde {
    use super::*;
    use serde::de::Error as _;
    use serde::ser::SerializeStruct;

    #[derive(serde::Deserialize)]
    struct SignalRecord {
        n: usize,
        scale_factor: f64,
        samples: Vec<f64>,
    }

    impl serde::Serialize for Signal {
        fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
            let mut s = serializer.serialize_struct("Signal", 3)?;
            s.serialize_field("n", &self.n())?;
            s.serialize_field("scale_factor", &self.scale_factor)?;
            s.serialize_field("samples", &self.samples)?;
            s.end()
        }
    }

    impl<'de> serde::Deserialize<'de> for Signal {
        fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
            let record = SignalRecord::deserialize(deserializer)?;
            if record.n != record.samples.len() {
                return Err(D::Error::custom("field n does not match sample count"));
            }
            Signal::with_scale_factor(record.samples, record.scale_factor)
                .map_err(D::Error::custom)
        }
    }
}

/// Sparse ideal break profile: 1-based index -> magnitude.
#[derive(Clone, Debug, PartialEq)]
pub struct BreakProfile {
    n: usize,
    breaks: BTreeMap<usize, f64>,
}

impl BreakProfile {
    pub fn new(n: usize) -> Result<Self, SignalError> {
        if n == 0 {
            return Err(SignalError::Empty);
        }
        Ok(BreakProfile {
            n,
            breaks: BTreeMap::new(),
        })
    }

    pub fn with_breaks(
        n: usize,
        breaks: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<Self, SignalError> {
        let mut profile = Self::new(n)?;
        for (index, magnitude) in breaks {
            profile.insert(index, magnitude)?;
        }
        Ok(profile)
    }

    /// Adds a break, rejecting out-of-range or duplicate indices.
    pub fn insert(&mut self, index: usize, magnitude: f64) -> Result<(), SignalError> {
        if index < 1 || index > self.n {
            return Err(SignalError::IndexOutOfRange { index, n: self.n });
        }
        if self.breaks.contains_key(&index) {
            return Err(SignalError::DuplicateBreak { index });
        }
        self.breaks.insert(index, magnitude);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_breaks(&self) -> usize {
        self.breaks.len()
    }

    /// Breaks in index order.
    pub fn breaks(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.breaks.iter().map(|(&i, &m)| (i, m))
    }

    /// Dense coefficient vector (0-based storage of the 1-based profile).
    pub fn dense(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.n];
        for (&index, &magnitude) in &self.breaks {
            out[index - 1] = magnitude;
        }
        out
    }
}

#[cfg(feature = "serde")]
mod profile_serde {
    use super::*;
    use serde::de::Error as _;
    use serde::ser::SerializeStruct;

    #[derive(serde::Serialize, serde::Deserialize)]
    struct BreakRecord {
        index: usize,
        magnitude: f64,
    }

    #[derive(serde::Deserialize)]
    struct ProfileRecord {
        n: usize,
        breaks: Vec<BreakRecord>,
    }

    impl serde::Serialize for BreakProfile {
        fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
            let breaks: Vec<BreakRecord> = self
                .breaks()
                .map(|(index, magnitude)| BreakRecord { index, magnitude })
                .collect();
            let mut s = serializer.serialize_struct("BreakProfile", 2)?;
            s.serialize_field("n", &self.n)?;
            s.serialize_field("breaks", &breaks)?;
            s.end()
        }
    }

    impl<'de> serde::Deserialize<'de> for BreakProfile {
        fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
            let record = ProfileRecord::deserialize(deserializer)?;
            BreakProfile::with_breaks(
                record.n,
                record.breaks.into_iter().map(|b| (b.index, b.magnitude)),
            )
            .map_err(D::Error::custom)
        }
    }
}

/// Squared error norm between an estimate and an ideal profile.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimationError {
    pub squared_error_norm: f64,
}

/// Applies the step-candidate dictionary: `out[r] = sum(beta[1..=r])`.
///
/// Row r of the dictionary holds r ones, so the product is the prefix sum
/// and the dense matrix never needs to exist.
pub fn candidate_matvec(beta: &[f64]) -> Result<Vec<f64>, SignalError> {
    if beta.is_empty() {
        return Err(SignalError::Empty);
    }
    let mut acc = 0.0;
    Ok(beta
        .iter()
        .map(|b| {
            acc += b;
            acc
        })
        .collect())
}

/// Builds the measurement series for a profile: prefix sum of the dense
/// coefficients plus white Gaussian noise of the given standard deviation.
/// Deterministic in the seed; `scale_factor` stays 1.0.
pub fn synthesize_profile(
    profile: &BreakProfile,
    noise_sigma: f64,
    seed: u64,
) -> Result<Signal, SignalError> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(SignalError::InvalidNoiseSigma { sigma: noise_sigma });
    }
    let mut samples = candidate_matvec(&profile.dense())?;
    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_sigma).expect("sigma validated");
        for s in &mut samples {
            *s += normal.sample(&mut rng);
        }
    }
    Signal::new(samples)
}

/// Draws a random testbench: `num_breaks` positions uniform without
/// replacement in `[1, n]`, magnitudes uniform in `magnitude_range` with a
/// random sign, then the synthesized noisy signal. Deterministic in the seed.
pub fn generate_testbench(
    n: usize,
    num_breaks: usize,
    magnitude_range: (f64, f64),
    noise_sigma: f64,
    seed: u64,
) -> Result<(BreakProfile, Signal), SignalError> {
    if n == 0 {
        return Err(SignalError::Empty);
    }
    if num_breaks > n {
        return Err(SignalError::TooManyBreaks {
            requested: num_breaks,
            n,
        });
    }
    let (low, high) = magnitude_range;
    if !(low.is_finite() && high.is_finite()) || low < 0.0 || low > high {
        return Err(SignalError::InvalidMagnitudeRange { low, high });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut profile = BreakProfile::new(n)?;
    for position in rand::seq::index::sample(&mut rng, n, num_breaks) {
        let magnitude = rng.random_range(low..=high);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        profile.insert(position + 1, sign * magnitude)?;
    }
    let noise_seed = rng.next_u64();
    let signal = synthesize_profile(&profile, noise_sigma, noise_seed)?;
    Ok((profile, signal))
}

/// Squared error norm between a dense estimate and the ideal profile.
pub fn squared_error(
    estimate: &[f64],
    ideal: &BreakProfile,
) -> Result<EstimationError, SignalError> {
    if estimate.len() != ideal.n() {
        return Err(SignalError::LengthMismatch {
            expected: ideal.n(),
            got: estimate.len(),
        });
    }
    let dense = ideal.dense();
    let squared_error_norm = estimate
        .iter()
        .zip(&dense)
        .map(|(e, i)| (e - i) * (e - i))
        .sum();
    Ok(EstimationError { squared_error_norm })
}
