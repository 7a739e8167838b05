//! Closed-form clock-cycle and processing-time estimates.
//!
//! One iteration with cyclic row index `k` costs
//! `3 * (ceil(k/M) + 2) + ceil(log2 M)` cycles on the banked datapath, and a
//! whole run adds a fixed overhead `F` for reset, memory handover, and
//! reciprocal-pipeline prefill. [`estimate_cycles`] evaluates the sum over
//! all `L` iterations in closed form by grouping equal `ceil(k/M)` runs;
//! [`estimate_cycles_literal`] is the O(L) reference evaluation.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Fixed pre/post overhead cycles of the reference design.
pub const DEFAULT_F_OVERHEAD: u64 = 21;

/// Errors from estimator and sweep parameter validation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CycleError {
    /// `n`, `m`, and `l` must all be at least 1.
    InvalidParameter { name: &'static str, value: u64 },
    /// Sweep range is empty or inverted.
    EmptyRange { low: u64, high: u64 },
    /// Cycle count exceeds u64.
    Overflow,
}

impl fmt::Display for CycleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CycleError::InvalidParameter { name, value } => {
                write!(f, "parameter {name} = {value} must be at least 1")
            }
            CycleError::EmptyRange { low, high } => {
                write!(f, "empty sweep range [{low}, {high}]")
            }
            CycleError::Overflow => write!(f, "cycle count overflows u64"),
        }
    }
}

impl core::error::Error for CycleError {}

/// Total clock cycles for a run, split into overhead and iteration cost.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CycleEstimate {
    pub total_cycles: u64,
    pub f_overhead: u64,
}

impl CycleEstimate {
    /// Wall-clock seconds at the given clock frequency.
    pub fn processing_time_s(&self, clock_mhz: f64) -> f64 {
        debug_assert!(clock_mhz > 0.0);
        self.total_cycles as f64 / (clock_mhz * 1e6)
    }
}

/// Seconds taken by `estimate` at `clock_mhz`.
pub fn estimate_time(estimate: &CycleEstimate, clock_mhz: f64) -> f64 {
    estimate.processing_time_s(clock_mhz)
}

pub(crate) fn ceil_log2(m: u64) -> u32 {
    debug_assert!(m >= 1);
    m.next_power_of_two().trailing_zeros()
}

pub(crate) fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// Cycles of a single iteration with cyclic index `k` over `m` banks.
pub fn per_iteration_cycles(k: u64, m: u64) -> u64 {
    3 * (ceil_div(k, m) + 2) + ceil_log2(m) as u64
}

/// `sum_{k=1..=x} ceil(k/m)` in closed form.
fn prefix_row_sum(x: u128, m: u128) -> u128 {
    if x == 0 {
        return 0;
    }
    let t = x.div_ceil(m);
    // Full groups contribute m * (1 + .. + t-1); the last, possibly partial
    // group contributes t per remaining index.
    m * t * (t - 1) / 2 + t * (x - (t - 1) * m)
}

fn validate(n: u64, m: u64, l: u64) -> Result<(), CycleError> {
    for (name, value) in [("n", n), ("m", m), ("l", l)] {
        if value == 0 {
            return Err(CycleError::InvalidParameter { name, value });
        }
    }
    Ok(())
}

/// Closed-form total cycle count for `l` iterations over `n` samples and `m`
/// banks, plus the fixed overhead.
pub fn estimate_cycles(n: u64, m: u64, l: u64, f_overhead: u64) -> Result<CycleEstimate, CycleError> {
    validate(n, m, l)?;
    let full_laps = (l / n) as u128;
    let remainder = l % n;
    let row_sum = full_laps * prefix_row_sum(n as u128, m as u128)
        + prefix_row_sum(remainder as u128, m as u128);
    let total =
        f_overhead as u128 + 3 * (row_sum + 2 * l as u128) + ceil_log2(m) as u128 * l as u128;
    let total_cycles = u64::try_from(total).map_err(|_| CycleError::Overflow)?;
    Ok(CycleEstimate {
        total_cycles,
        f_overhead,
    })
}

/// Literal O(L) evaluation of the same sum; the reference for the closed form.
pub fn estimate_cycles_literal(
    n: u64,
    m: u64,
    l: u64,
    f_overhead: u64,
) -> Result<CycleEstimate, CycleError> {
    validate(n, m, l)?;
    let mut total = f_overhead as u128;
    for i in 1..=l {
        let k = (i - 1) % n + 1;
        total += per_iteration_cycles(k, m) as u128;
    }
    let total_cycles = u64::try_from(total).map_err(|_| CycleError::Overflow)?;
    Ok(CycleEstimate {
        total_cycles,
        f_overhead,
    })
}

/// Clock frequencies a synthesized device reaches at given bank counts.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DevicePreset {
    pub name: String,
    pub max_bram_banks: u64,
    /// `(banks, MHz)` pairs from synthesis timing results.
    pub clock_mhz_by_banks: Vec<(u64, f64)>,
}

impl DevicePreset {
    pub fn clock_mhz(&self, banks: u64) -> Option<f64> {
        self.clock_mhz_by_banks
            .iter()
            .find(|(b, _)| *b == banks)
            .map(|(_, mhz)| *mhz)
    }

    /// True when a configuration asks for more banks than the device offers.
    pub fn exceeds_banks(&self, banks: u64) -> bool {
        banks > self.max_bram_banks
    }
}

/// Which parameter a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    /// Vary the number of parallel banks M at fixed N.
    Banks,
    /// Vary the number of data points N at fixed M.
    DataPoints,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepPoint {
    pub x: u64,
    pub cycles: u64,
}

/// Evaluates the estimator across an inclusive range of the chosen axis.
///
/// The iteration budget scales with the data length (`l = per_sample * n`),
/// so bank sweeps hold `l` fixed while data-point sweeps grow it.
pub fn sweep(
    axis: SweepAxis,
    range: (u64, u64),
    fixed: u64,
    iterations_per_sample: u64,
    f_overhead: u64,
) -> Result<Vec<SweepPoint>, CycleError> {
    let (low, high) = range;
    if low > high || low == 0 {
        return Err(CycleError::EmptyRange { low, high });
    }
    if iterations_per_sample == 0 {
        return Err(CycleError::InvalidParameter {
            name: "iterations_per_sample",
            value: 0,
        });
    }
    let mut points = Vec::with_capacity((high - low + 1) as usize);
    for x in low..=high {
        let estimate = match axis {
            SweepAxis::Banks => estimate_cycles(fixed, x, iterations_per_sample * fixed, f_overhead),
            SweepAxis::DataPoints => {
                estimate_cycles(x, fixed, iterations_per_sample * x, f_overhead)
            }
        }?;
        points.push(SweepPoint {
            x,
            cycles: estimate.total_cycles,
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn validation_table_cells() {
        let cases = [
            (10u64, 4u64, 100u64, 1_361u64),
            (1_000, 128, 1_000, 26_269),
            (5_000, 1_024, 5_000, 124_301),
        ];
        for (n, m, l, expect) in cases {
            let estimate = estimate_cycles(n, m, l, DEFAULT_F_OVERHEAD).unwrap();
            assert_eq!(estimate.total_cycles, expect, "n={n} m={m} l={l}");
        }
    }

    #[test]
    fn processing_time_examples() {
        let estimate = estimate_cycles(10_000, 1_024, 6_500_000, DEFAULT_F_OVERHEAD).unwrap();
        let t = estimate.processing_time_s(109.9);
        assert!((t - 1.91).abs() <= 0.01, "got {t}");
        let estimate = estimate_cycles(10_000, 512, 6_500_000, DEFAULT_F_OVERHEAD).unwrap();
        let t = estimate_time(&estimate, 166.97);
        assert!((t - 1.78).abs() <= 0.01, "got {t}");
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(estimate_cycles(0, 4, 10, 21).is_err());
        assert!(estimate_cycles(10, 0, 10, 21).is_err());
        assert!(estimate_cycles(10, 4, 0, 21).is_err());
    }

    #[test]
    fn tree_depth_steps_at_powers_of_two() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(64), 6);
        assert_eq!(ceil_log2(65), 7);
        assert_eq!(ceil_log2(2048), 11);
        // Crossing 64 -> 65 raises the per-iteration tree term by one.
        let at_64 = per_iteration_cycles(1, 64);
        let at_65 = per_iteration_cycles(1, 65);
        assert_eq!(at_65, at_64 + 1);
    }

    #[test]
    fn doubling_banks_reduces_cycles() {
        let c4 = estimate_cycles(100, 4, 1_000, 21).unwrap().total_cycles;
        let c8 = estimate_cycles(100, 8, 1_000, 21).unwrap().total_cycles;
        assert!(c8 < c4);
    }

    #[test]
    fn sweep_banks_and_points() {
        let by_m = sweep(SweepAxis::Banks, (1, 64), 100, 650, 21).unwrap();
        assert_eq!(by_m.len(), 64);
        assert_eq!(by_m[0].x, 1);
        // Strictly increasing in the number of data points.
        let by_n = sweep(SweepAxis::DataPoints, (100, 200), 16, 650, 21).unwrap();
        for pair in by_n.windows(2) {
            assert!(pair[1].cycles > pair[0].cycles);
        }
        assert!(sweep(SweepAxis::Banks, (5, 4), 100, 650, 21).is_err());
        assert!(sweep(SweepAxis::Banks, (0, 4), 100, 650, 21).is_err());
    }

    #[test]
    fn preset_lookup() {
        let preset = DevicePreset {
            name: String::from("test"),
            max_bram_banks: 2_000,
            clock_mhz_by_banks: alloc::vec![(1_024, 109.9), (512, 166.97)],
        };
        assert_eq!(preset.clock_mhz(512), Some(166.97));
        assert_eq!(preset.clock_mhz(256), None);
        assert!(preset.exceeds_banks(2_048));
        assert!(!preset.exceeds_banks(1_024));
    }

    proptest! {
        #[test]
        fn closed_form_matches_literal(
            n in 1u64..2_000,
            m in 1u64..3_000,
            l in 1u64..20_000,
        ) {
            let fast = estimate_cycles(n, m, l, DEFAULT_F_OVERHEAD).unwrap();
            let slow = estimate_cycles_literal(n, m, l, DEFAULT_F_OVERHEAD).unwrap();
            prop_assert_eq!(fast, slow);
        }
    }
}
