//! Property checks shared between the standalone `properties` suite and the
//! `acceptance` suite.

use lbi_core::cycle;
use lbi_core::fixed::{FixedFormat, FixedScalar};
use lbi_core::hwsim::{pat_reduce, pmt_select, HwConfig, HwSimulator, SliceLayout, VectorSlice};
use lbi_core::signal::{generate_testbench, Signal};
use lbi_core::solver::{shrink, LbiSolver};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn scaled_testbench(n: usize, breaks: usize, sigma: f64, seed: u64) -> Signal {
    let (_, signal) = generate_testbench(n, breaks, (0.5, 1.5), sigma, seed).unwrap();
    signal.scaled().unwrap()
}

/// Shrink is firmly non-expansive and the identity at lambda = 0, in both
/// scalar domains.
pub fn check_shrink_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa11ce);
    let fmt = FixedFormat::S4_16;
    for _ in 0..20_000 {
        let a = rng.random_range(-8.0..8.0);
        let b = rng.random_range(-8.0..8.0);
        let lambda = rng.random_range(0.0..4.0);
        let gap = (shrink(a, lambda) - shrink(b, lambda)).abs();
        assert!(gap <= (a - b).abs() + 1e-15);
        assert_eq!(shrink(a, 0.0), a);

        let qa = FixedScalar::quantize(a, fmt);
        let qb = FixedScalar::quantize(b, fmt);
        let ql = FixedScalar::quantize(lambda, fmt);
        let qgap = qa.shrink(ql).unwrap().raw() - qb.shrink(ql).unwrap().raw();
        assert!(qgap.abs() <= (qa.raw() - qb.raw()).abs());
        assert_eq!(qa.shrink(FixedScalar::zero(fmt)).unwrap(), qa);
    }
}

/// Masked tree reduction equals the direct masked sum for every thermometer
/// mask over every width up to 32, with the logarithmic latency.
pub fn check_pat_masked_sum_exhaustive() {
    let fmt = FixedFormat::S4_16;
    let mut rng = ChaCha8Rng::seed_from_u64(0x9a7);
    for m in 1..=32usize {
        let expected_latency = (m.next_power_of_two().trailing_zeros()) as u64;
        for active in 0..=m {
            let values: Vec<FixedScalar> = (0..m)
                .map(|_| FixedScalar::quantize(rng.random_range(-1.0..1.0), fmt))
                .collect();
            let mask: Vec<bool> = (0..m).map(|lane| lane < active).collect();
            let result = pat_reduce(&values, &mask).unwrap();
            let expect: i64 = values[..active].iter().map(|w| w.raw()).sum();
            assert_eq!(result.value.raw(), expect, "m={m} active={active}");
            assert_eq!(result.latency, expected_latency);
        }
    }
}

/// The multiplexer tree returns the stored `y[k]` for every index of every
/// signal length up to 64.
pub fn check_pmt_exhaustive_selection() {
    for n in 1..=64usize {
        let signal = scaled_testbench(n, (n / 4).max(1), 0.1, 7_000 + n as u64);
        for m in [1usize, 2, 3, 4, 8, 16, 64] {
            let sim = HwSimulator::from_signal(HwConfig::new(m), &signal, 0.0).unwrap();
            let depth = (m.next_power_of_two().trailing_zeros()) as u64;
            for k in 1..=n {
                let row = (k - 1) / m;
                let values: Vec<FixedScalar> = (0..m)
                    .map(|lane| {
                        let index = row * m + lane + 1;
                        if index <= n {
                            sim.read_entry(VectorSlice::Y, index)
                        } else {
                            FixedScalar::zero(FixedFormat::S4_16)
                        }
                    })
                    .collect();
                let selection = pmt_select(&values, k, row).unwrap();
                assert_eq!(selection.value, sim.read_entry(VectorSlice::Y, k));
                assert_eq!(selection.latency, depth);
            }
        }
    }
}

/// The (bank, slice, row) mapping is a bijection over all 3N cells.
pub fn check_layout_bijectivity(trials: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a9);
    for _ in 0..trials {
        let n = rng.random_range(1..=500);
        let m = rng.random_range(1..=128);
        let layout = SliceLayout::new(n, m).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for bank in 0..m {
            for address in 0..layout.bank_depth() {
                if let Some((slice, index)) = layout.entry_at(bank, address) {
                    assert!(seen.insert((slice as u8, index)), "n={n} m={m}");
                    assert_eq!(layout.address(slice, index), (bank, address));
                }
            }
        }
        assert_eq!(seen.len(), 3 * n, "n={n} m={m}");
    }
}

/// The grouped closed form equals the literal per-iteration summation.
pub fn check_estimator_fast_path(triples: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xe95);
    for _ in 0..triples {
        let n = rng.random_range(1..=3_000u64);
        let m = rng.random_range(1..=4_096u64);
        let l = rng.random_range(1..=30_000u64);
        let fast = cycle::estimate_cycles(n, m, l, cycle::DEFAULT_F_OVERHEAD).unwrap();
        let literal = cycle::estimate_cycles_literal(n, m, l, cycle::DEFAULT_F_OVERHEAD).unwrap();
        assert_eq!(fast, literal, "n={n} m={m} l={l}");
    }
}

/// Scaled testbench runs never saturate, in the solver or the simulator.
pub fn check_zero_saturation_on_scaled_runs() {
    for (n, breaks, seed) in [(100usize, 3usize, 1u64), (257, 8, 2), (500, 10, 3)] {
        let signal = scaled_testbench(n, breaks, 0.05, seed);
        let mut solver = LbiSolver::fixed(&signal, 1.0, FixedFormat::S4_16).unwrap();
        solver.run(20 * n as u64);
        assert_eq!(solver.saturation_events(), 0, "solver n={n}");
        assert!(solver.max_abs_beta_sum() <= 2.0);

        let mut sim = HwSimulator::from_signal(HwConfig::new(8), &signal, 1.0).unwrap();
        sim.run(5 * n as u64).unwrap();
        assert_eq!(sim.saturation_events(), 0, "sim n={n}");
    }
}
