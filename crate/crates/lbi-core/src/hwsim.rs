//! Cycle-accurate simulator of the banked-memory iteration datapath.
//!
//! The memory holds the three working vectors in `M` parallel banks, each
//! split into three address slices (`beta` at offset 0, `y` at `T`, `v` at
//! `2T` with `T = ceil(N/M)`); entry `i` of a vector lives in bank
//! `(i-1) mod M` at row `(i-1) div M` of its slice, so a whole *parallel
//! row* of `M` consecutive entries is readable in one cycle.
//!
//! An iteration with cyclic index `k` and `t_hat = ceil(k/M)` runs in two
//! phases:
//!
//! - **read** (`t_hat + ceil(log2 M) + 2` cycles): the beta rows stream
//!   through a pipelined adder tree, the last row masked by a unary
//!   (thermometer) code; a multiplexer tree of the same depth delivers
//!   `y[k]`; one cycle each for the subtraction and the multiply by the
//!   pipelined reciprocal `1/k`.
//! - **store** (`2 * t_hat + 4` cycles): two handshake cycles, then a
//!   two-cycle-per-row schedule where port B reads a `v` row while port A
//!   writes back the updated `v` row and its shrunk `beta` row on alternate
//!   cycles. Port A only ever writes and port B only ever reads; a same-cycle
//!   write and read to one address is an internal error.
//!
//! The resulting `beta`/`v` words are bit-identical to the fixed-point
//! [`LbiSolver`](crate::solver::LbiSolver), which is asserted by the tests
//! rather than assumed.

use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::fmt;

use crate::fixed::{FixedFormat, FixedScalar};
use crate::signal::Signal;

/// Errors from simulator construction and datapath invariants.
#[derive(Clone, Debug, PartialEq)]
pub enum HwError {
    /// The loaded vectors must hold at least one element.
    EmptyInput,
    /// Loaded vectors must share the signal length.
    LengthMismatch { expected: usize, got: usize },
    /// A loaded word does not use the configured format.
    FormatMismatch,
    /// Bank count and pipeline depth must be at least 1.
    InvalidConfig { what: &'static str },
    /// Shrink threshold must be non-negative.
    NegativeLambda,
    /// PAT input mask is not of ones-then-zeros form.
    NonThermometerMask,
    /// Selection index is not inside the presented parallel row.
    RowSelectionOutOfRange { k: usize, row: usize },
    /// A write and a read hit the same bank address in one cycle.
    PortCollision { slice: VectorSlice, row: usize },
    /// An internal synchronization contract was violated.
    Desync { what: &'static str },
}

impl fmt::Display for HwError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HwError::EmptyInput => write!(f, "cannot load an empty vector"),
            HwError::LengthMismatch { expected, got } => {
                write!(f, "length mismatch: expected {expected}, got {got}")
            }
            HwError::FormatMismatch => write!(f, "word format does not match configuration"),
            HwError::InvalidConfig { what } => write!(f, "invalid configuration: {what}"),
            HwError::NegativeLambda => write!(f, "shrink threshold must be non-negative"),
            HwError::NonThermometerMask => write!(f, "mask is not a unary (thermometer) code"),
            HwError::RowSelectionOutOfRange { k, row } => {
                write!(f, "index {k} is not inside parallel row {row}")
            }
            HwError::PortCollision { slice, row } => {
                write!(f, "write/read port collision on {slice:?} row {row}")
            }
            HwError::Desync { what } => write!(f, "internal desynchronization: {what}"),
        }
    }
}

impl core::error::Error for HwError {}

/// The three vector slices sharing each bank's address space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VectorSlice {
    Beta,
    Y,
    V,
}

/// Placement of vector entries across banks, slices, and rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SliceLayout {
    n: usize,
    banks: usize,
    t_rows: usize,
}

impl SliceLayout {
    pub fn new(n: usize, banks: usize) -> Result<Self, HwError> {
        if n == 0 {
            return Err(HwError::EmptyInput);
        }
        if banks == 0 {
            return Err(HwError::InvalidConfig { what: "banks == 0" });
        }
        Ok(SliceLayout {
            n,
            banks,
            t_rows: n.div_ceil(banks),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn banks(&self) -> usize {
        self.banks
    }

    /// Parallel rows per slice, `T = ceil(N/M)`.
    pub fn t_rows(&self) -> usize {
        self.t_rows
    }

    /// Address depth of each bank (three slices).
    pub fn bank_depth(&self) -> usize {
        3 * self.t_rows
    }

    /// Row offset of a slice: beta at 0, y at T, v at 2T.
    pub fn slice_base(&self, slice: VectorSlice) -> usize {
        match slice {
            VectorSlice::Beta => 0,
            VectorSlice::Y => self.t_rows,
            VectorSlice::V => 2 * self.t_rows,
        }
    }

    /// Bank and slice-relative row of 1-based vector index `i`:
    /// bank `(i-1) mod M`, row `(i-1) div M`.
    pub fn position(&self, index: usize) -> (usize, usize) {
        debug_assert!(index >= 1 && index <= self.n);
        ((index - 1) % self.banks, (index - 1) / self.banks)
    }

    /// Bank and absolute address of a vector entry.
    pub fn address(&self, slice: VectorSlice, index: usize) -> (usize, usize) {
        let (bank, row) = self.position(index);
        (bank, self.slice_base(slice) + row)
    }

    /// Inverse mapping; `None` for padding cells past the vector length.
    pub fn entry_at(&self, bank: usize, address: usize) -> Option<(VectorSlice, usize)> {
        if bank >= self.banks || address >= self.bank_depth() {
            return None;
        }
        let slice = match address / self.t_rows {
            0 => VectorSlice::Beta,
            1 => VectorSlice::Y,
            _ => VectorSlice::V,
        };
        let row = address % self.t_rows;
        let index = row * self.banks + bank + 1;
        (index <= self.n).then_some((slice, index))
    }
}

/// One dual-port memory bank holding raw words.
#[derive(Clone, Debug)]
pub struct BramBank {
    cells: Vec<i64>,
}

impl BramBank {
    pub fn new(depth: usize) -> Self {
        BramBank {
            cells: alloc::vec![0; depth],
        }
    }

    pub fn depth(&self) -> usize {
        self.cells.len()
    }

    pub fn read(&self, address: usize) -> i64 {
        self.cells[address]
    }

    pub fn write(&mut self, address: usize, raw: i64) {
        self.cells[address] = raw;
    }
}

fn tree_depth(width: usize) -> u32 {
    width.next_power_of_two().trailing_zeros()
}

/// Pipelined parallel adder tree over one word format.
///
/// `feed` presents a masked parallel row; the reduced sum emerges
/// `ceil(log2 M)` ticks later (immediately for a single lane). Masked lanes
/// contribute an exact zero word.
pub struct AdderTree {
    width: usize,
    depth: u32,
    format: FixedFormat,
    input: Option<Vec<FixedScalar>>,
    stages: Vec<Option<Vec<FixedScalar>>>,
    output: Option<FixedScalar>,
    saturations: u64,
}

impl AdderTree {
    pub fn new(width: usize, format: FixedFormat) -> Result<Self, HwError> {
        if width == 0 {
            return Err(HwError::InvalidConfig { what: "width == 0" });
        }
        let depth = tree_depth(width);
        Ok(AdderTree {
            width,
            depth,
            format,
            input: None,
            stages: alloc::vec![None; depth as usize],
            output: None,
            saturations: 0,
        })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn saturation_events(&self) -> u64 {
        self.saturations
    }

    /// Presents a row with the first `active` lanes unmasked.
    pub fn feed(&mut self, values: &[FixedScalar], active: usize) -> Result<(), HwError> {
        if values.len() != self.width || active > self.width {
            return Err(HwError::LengthMismatch {
                expected: self.width,
                got: values.len(),
            });
        }
        if values.iter().any(|v| v.format() != self.format) {
            return Err(HwError::FormatMismatch);
        }
        // Mask, then pad the row to the power-of-two tree width with null
        // lanes; zero is the additive identity so the sum is unaffected.
        let padded = 1usize << self.depth;
        let mut row = Vec::with_capacity(padded);
        for (lane, value) in values.iter().enumerate() {
            row.push(if lane < active {
                *value
            } else {
                FixedScalar::zero(self.format)
            });
        }
        row.resize(padded, FixedScalar::zero(self.format));
        if self.depth == 0 {
            if self.output.is_some() {
                return Err(HwError::Desync {
                    what: "adder tree output overrun",
                });
            }
            self.output = Some(row[0]);
        } else {
            if self.input.is_some() {
                return Err(HwError::Desync {
                    what: "adder tree fed twice in one cycle",
                });
            }
            self.input = Some(row);
        }
        Ok(())
    }

    fn reduce_once(&mut self, row: Vec<FixedScalar>) -> Vec<FixedScalar> {
        let mut out = Vec::with_capacity(row.len() / 2);
        for pair in row.chunks_exact(2) {
            let (sum, sat) = pair[0]
                .overflowing_add(pair[1])
                .expect("tree lanes share one format");
            self.saturations += sat as u64;
            out.push(sum);
        }
        out
    }

    /// One clock edge: every in-flight row advances one reduction level.
    pub fn tick(&mut self) {
        if self.depth == 0 {
            return;
        }
        let depth = self.depth as usize;
        for s in (1..depth).rev() {
            if let Some(row) = self.stages[s - 1].take() {
                self.stages[s] = Some(self.reduce_once(row));
            }
        }
        if let Some(row) = self.input.take() {
            self.stages[0] = Some(self.reduce_once(row));
        }
        if let Some(done) = self.stages[depth - 1].take() {
            debug_assert_eq!(done.len(), 1);
            self.output = Some(done[0]);
        }
    }

    pub fn take_output(&mut self) -> Option<FixedScalar> {
        self.output.take()
    }
}

/// Pipelined multiplexer tree: selects one lane of a parallel row with the
/// same latency as the adder tree, so both outputs stay synchronized.
pub struct MuxTree {
    width: usize,
    depth: u32,
    format: FixedFormat,
    input: Option<FixedScalar>,
    stages: Vec<Option<FixedScalar>>,
    output: Option<FixedScalar>,
}

impl MuxTree {
    pub fn new(width: usize, format: FixedFormat) -> Result<Self, HwError> {
        if width == 0 {
            return Err(HwError::InvalidConfig { what: "width == 0" });
        }
        let depth = tree_depth(width);
        Ok(MuxTree {
            width,
            depth,
            format,
            input: None,
            stages: alloc::vec![None; depth as usize],
            output: None,
        })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Presents a row; the selection key is the lane index derived from `k`.
    pub fn feed(&mut self, values: &[FixedScalar], lane: usize) -> Result<(), HwError> {
        if values.len() != self.width {
            return Err(HwError::LengthMismatch {
                expected: self.width,
                got: values.len(),
            });
        }
        if values.iter().any(|v| v.format() != self.format) {
            return Err(HwError::FormatMismatch);
        }
        if lane >= self.width {
            return Err(HwError::RowSelectionOutOfRange { k: lane + 1, row: 0 });
        }
        let selected = values[lane];
        if self.depth == 0 {
            self.output = Some(selected);
        } else {
            self.input = Some(selected);
        }
        Ok(())
    }

    pub fn tick(&mut self) {
        if self.depth == 0 {
            return;
        }
        let depth = self.depth as usize;
        for s in (1..depth).rev() {
            if self.stages[s - 1].is_some() {
                self.stages[s] = self.stages[s - 1].take();
            }
        }
        if self.input.is_some() {
            self.stages[0] = self.input.take();
        }
        if self.stages[depth - 1].is_some() {
            self.output = self.stages[depth - 1].take();
        }
    }

    pub fn take_output(&mut self) -> Option<FixedScalar> {
        self.output.take()
    }
}

/// Result of a standalone masked tree reduction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatReduction {
    pub value: FixedScalar,
    /// Cycles from feed to output, `ceil(log2 M)`.
    pub latency: u64,
    pub saturation_events: u64,
}

/// Reduces one parallel row under a unary mask through the pipelined tree.
///
/// The mask must be a thermometer code: a run of ones followed by zeros.
pub fn pat_reduce(values: &[FixedScalar], mask: &[bool]) -> Result<PatReduction, HwError> {
    if values.is_empty() {
        return Err(HwError::EmptyInput);
    }
    if mask.len() != values.len() {
        return Err(HwError::LengthMismatch {
            expected: values.len(),
            got: mask.len(),
        });
    }
    let active = mask.iter().take_while(|&&bit| bit).count();
    if mask[active..].iter().any(|&bit| bit) {
        return Err(HwError::NonThermometerMask);
    }
    let format = values[0].format();
    let mut tree = AdderTree::new(values.len(), format)?;
    tree.feed(values, active)?;
    let mut latency = 0u64;
    loop {
        if let Some(value) = tree.take_output() {
            return Ok(PatReduction {
                value,
                latency,
                saturation_events: tree.saturation_events(),
            });
        }
        if latency > tree.depth() as u64 {
            return Err(HwError::Desync {
                what: "adder tree failed to drain",
            });
        }
        tree.tick();
        latency += 1;
    }
}

/// Result of a standalone pipelined selection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PmtSelection {
    pub value: FixedScalar,
    pub latency: u64,
}

/// Selects `y[k]` from the parallel row with index `row` (rows are 0-based;
/// row `t` spans 1-based indices `tM+1 ..= tM+M`).
pub fn pmt_select(values: &[FixedScalar], k: usize, row: usize) -> Result<PmtSelection, HwError> {
    if values.is_empty() {
        return Err(HwError::EmptyInput);
    }
    let m = values.len();
    if k == 0 || (k - 1) / m != row {
        return Err(HwError::RowSelectionOutOfRange { k, row });
    }
    let lane = (k - 1) % m;
    let mut tree = MuxTree::new(m, values[0].format())?;
    tree.feed(values, lane)?;
    let mut latency = 0u64;
    loop {
        if let Some(value) = tree.take_output() {
            return Ok(PmtSelection { value, latency });
        }
        if latency > tree.depth() as u64 {
            return Err(HwError::Desync {
                what: "mux tree failed to drain",
            });
        }
        tree.tick();
        latency += 1;
    }
}

/// Shift pipeline delivering exactly rounded `1/k` words.
///
/// The stages are prefilled during initialization and advance once per
/// iteration, so the head always carries the reciprocal of the current
/// cyclic index.
struct ReciprocalPipeline {
    stages: VecDeque<FixedScalar>,
    fed: u64,
    n: usize,
    format: FixedFormat,
}

impl ReciprocalPipeline {
    fn cyclic_index(n: usize, iteration: u64) -> u64 {
        (iteration - 1) % n as u64 + 1
    }

    fn new(depth: usize, n: usize, format: FixedFormat) -> Self {
        let mut stages = VecDeque::with_capacity(depth);
        for i in 1..=depth as u64 {
            let k = Self::cyclic_index(n, i);
            stages.push_back(FixedScalar::reciprocal(k, format).expect("k >= 1"));
        }
        ReciprocalPipeline {
            stages,
            fed: depth as u64,
            n,
            format,
        }
    }

    fn advance(&mut self) -> FixedScalar {
        let out = self.stages.pop_front().expect("depth >= 1");
        self.fed += 1;
        let k = Self::cyclic_index(self.n, self.fed);
        self.stages
            .push_back(FixedScalar::reciprocal(k, self.format).expect("k >= 1"));
        out
    }
}

/// Architectural parameters of the datapath.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HwConfig {
    /// Number of parallel memory banks M.
    pub banks: usize,
    pub word_format: FixedFormat,
    /// Fixed pre/post cycles: reset, memory handover, pipeline prefill.
    pub f_overhead: u64,
    /// Stage count of the reciprocal pipeline.
    pub cordic_depth: usize,
}

impl HwConfig {
    pub fn new(banks: usize) -> Self {
        HwConfig {
            banks,
            word_format: FixedFormat::S4_16,
            f_overhead: crate::cycle::DEFAULT_F_OVERHEAD,
            cordic_depth: 16,
        }
    }

    pub fn with_word_format(mut self, format: FixedFormat) -> Self {
        self.word_format = format;
        self
    }

    pub fn with_f_overhead(mut self, f_overhead: u64) -> Self {
        self.f_overhead = f_overhead;
        self
    }

    pub fn with_cordic_depth(mut self, depth: usize) -> Self {
        self.cordic_depth = depth;
        self
    }
}

/// Cycle cost of one simulated iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationCycles {
    pub iteration: u64,
    pub k: usize,
    pub t_hat: usize,
    pub c_read: u64,
    pub c_store: u64,
    pub c_total: u64,
}

/// Cycle accounting of a whole run.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CycleTrace {
    pub f_consumed: u64,
    pub total_cycles: u64,
    pub per_iteration: Vec<IterationCycles>,
}

/// The simulator: banked memory, control counters, and datapath pipelines.
pub struct HwSimulator {
    config: HwConfig,
    layout: SliceLayout,
    lambda: FixedScalar,
    banks: Vec<BramBank>,
    recip: ReciprocalPipeline,
    iteration: u64,
    cycles: u64,
    records: Vec<IterationCycles>,
    saturations: u64,
}

impl HwSimulator {
    /// Loads quantized vectors into the banked memory and prefills the
    /// reciprocal pipeline. Consumes the fixed overhead `F`.
    pub fn load(
        config: HwConfig,
        y: &[FixedScalar],
        beta0: &[FixedScalar],
        v0: &[FixedScalar],
        lambda: FixedScalar,
    ) -> Result<Self, HwError> {
        if y.is_empty() {
            return Err(HwError::EmptyInput);
        }
        if config.banks == 0 {
            return Err(HwError::InvalidConfig { what: "banks == 0" });
        }
        if config.cordic_depth == 0 {
            return Err(HwError::InvalidConfig {
                what: "cordic_depth == 0",
            });
        }
        let n = y.len();
        for vector in [beta0, v0] {
            if vector.len() != n {
                return Err(HwError::LengthMismatch {
                    expected: n,
                    got: vector.len(),
                });
            }
        }
        let format = config.word_format;
        if lambda.format() != format
            || [y, beta0, v0]
                .iter()
                .any(|vec| vec.iter().any(|w| w.format() != format))
        {
            return Err(HwError::FormatMismatch);
        }
        if lambda.raw() < 0 {
            return Err(HwError::NegativeLambda);
        }

        let layout = SliceLayout::new(n, config.banks)?;
        let mut banks: Vec<BramBank> = (0..config.banks)
            .map(|_| BramBank::new(layout.bank_depth()))
            .collect();
        for (slice, vector) in [
            (VectorSlice::Beta, beta0),
            (VectorSlice::Y, y),
            (VectorSlice::V, v0),
        ] {
            for (j, word) in vector.iter().enumerate() {
                let (bank, address) = layout.address(slice, j + 1);
                banks[bank].write(address, word.raw());
            }
        }
        let recip = ReciprocalPipeline::new(config.cordic_depth, n, format);
        Ok(HwSimulator {
            layout,
            lambda,
            banks,
            recip,
            iteration: 0,
            cycles: config.f_overhead,
            records: Vec::new(),
            saturations: 0,
            config,
        })
    }

    /// Quantizes a signal and starts from zero coefficient vectors.
    pub fn from_signal(config: HwConfig, y: &Signal, lambda: f64) -> Result<Self, HwError> {
        let format = config.word_format;
        let words: Vec<FixedScalar> = y
            .samples()
            .iter()
            .map(|&s| FixedScalar::quantize(s, format))
            .collect();
        let zeros = alloc::vec![FixedScalar::zero(format); y.n()];
        Self::load(
            config,
            &words,
            &zeros,
            &zeros,
            FixedScalar::quantize(lambda, format),
        )
    }

    pub fn config(&self) -> &HwConfig {
        &self.config
    }

    pub fn layout(&self) -> &SliceLayout {
        &self.layout
    }

    pub fn n(&self) -> usize {
        self.layout.n()
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    /// Cycles consumed so far, including the fixed overhead.
    pub fn cycles(&self) -> u64 {
        self.cycles
    }

    pub fn saturation_events(&self) -> u64 {
        self.saturations
    }

    /// Reads a whole vector back out of the banks.
    pub fn read_vector(&self, slice: VectorSlice) -> Vec<FixedScalar> {
        (1..=self.layout.n())
            .map(|index| self.read_entry(slice, index))
            .collect()
    }

    pub fn read_entry(&self, slice: VectorSlice, index: usize) -> FixedScalar {
        let (bank, address) = self.layout.address(slice, index);
        FixedScalar::from_raw(self.banks[bank].read(address), self.config.word_format)
            .expect("loaded words stay in range")
    }

    pub fn beta_raw(&self) -> Vec<i64> {
        (1..=self.layout.n())
            .map(|index| {
                let (bank, address) = self.layout.address(VectorSlice::Beta, index);
                self.banks[bank].read(address)
            })
            .collect()
    }

    pub fn v_raw(&self) -> Vec<i64> {
        (1..=self.layout.n())
            .map(|index| {
                let (bank, address) = self.layout.address(VectorSlice::V, index);
                self.banks[bank].read(address)
            })
            .collect()
    }

    /// All parallel-row lanes of a slice row; lanes past N read as zero.
    fn read_row(&self, slice: VectorSlice, row: usize) -> Vec<FixedScalar> {
        let base = self.layout.slice_base(slice) + row;
        (0..self.layout.banks())
            .map(|bank| {
                let index = row * self.layout.banks() + bank + 1;
                if index <= self.layout.n() {
                    FixedScalar::from_raw(self.banks[bank].read(base), self.config.word_format)
                        .expect("loaded words stay in range")
                } else {
                    FixedScalar::zero(self.config.word_format)
                }
            })
            .collect()
    }

    /// Writes the unmasked lanes of a parallel row.
    fn write_row(&mut self, slice: VectorSlice, row: usize, lanes: &[Option<FixedScalar>]) {
        let base = self.layout.slice_base(slice) + row;
        for (bank, lane) in lanes.iter().enumerate() {
            if let Some(word) = lane {
                self.banks[bank].write(base, word.raw());
            }
        }
    }

    fn track(&mut self, result: (FixedScalar, bool)) -> FixedScalar {
        self.saturations += result.1 as u64;
        result.0
    }

    /// Executes one full iteration and returns its cycle record.
    pub fn run_iteration(&mut self) -> Result<IterationCycles, HwError> {
        let n = self.layout.n();
        let m = self.layout.banks();
        let format = self.config.word_format;
        let iteration = self.iteration + 1;
        let k = ((iteration - 1) % n as u64) as usize + 1;
        let t_hat = k.div_ceil(m);
        // Thermometer width for the final parallel row.
        let active_last = k - (t_hat - 1) * m;

        // ---- read phase: stream beta rows through the PAT, select y[k]. ----
        let mut pat = AdderTree::new(m, format)?;
        let mut pmt = MuxTree::new(m, format)?;
        let depth = pat.depth() as usize;
        let y_row = (k - 1) / m;
        let y_lane = (k - 1) % m;

        let mut acc = FixedScalar::zero(format);
        let mut rows_summed = 0usize;
        let mut y_selected = None;
        let mut residual = None;
        let mut update = None;

        let c_read = (t_hat + depth + 2) as u64;
        for cycle in 1..=(t_hat + depth + 2) {
            pat.tick();
            pmt.tick();
            // Port B carries every read: beta rows first, then the y row
            // once the streaming is done (the mux depth equals the adder
            // depth, so both outputs land together at the subtract cycle).
            if cycle <= t_hat {
                let row = self.read_row(VectorSlice::Beta, cycle - 1);
                let active = if cycle == t_hat { active_last } else { m };
                pat.feed(&row, active)?;
            } else if cycle == t_hat + 1 {
                let row = self.read_row(VectorSlice::Y, y_row);
                pmt.feed(&row, y_lane)?;
            }
            if let Some(partial) = pat.take_output() {
                let r = acc
                    .overflowing_add(partial)
                    .expect("datapath words share one format");
                acc = self.track(r);
                rows_summed += 1;
            }
            if let Some(selected) = pmt.take_output() {
                y_selected = Some(selected);
            }
            if cycle == t_hat + depth + 1 {
                if rows_summed != t_hat {
                    return Err(HwError::Desync {
                        what: "adder tree did not deliver every row",
                    });
                }
                let y_k = y_selected.take().ok_or(HwError::Desync {
                    what: "mux output missing at subtract cycle",
                })?;
                if y_k != self.read_entry(VectorSlice::Y, k) {
                    return Err(HwError::Desync {
                        what: "mux selection does not match memory",
                    });
                }
                let r = y_k
                    .overflowing_sub(acc)
                    .expect("datapath words share one format");
                residual = Some(self.track(r));
            }
            if cycle == t_hat + depth + 2 {
                let mu = self.recip.advance();
                if mu != FixedScalar::reciprocal(k as u64, format).expect("k >= 1") {
                    return Err(HwError::Desync {
                        what: "reciprocal pipeline out of phase",
                    });
                }
                let e = residual.expect("subtract cycle precedes multiply cycle");
                let r = mu
                    .overflowing_mul(e)
                    .expect("datapath words share one format");
                update = Some(self.track(r));
            }
        }
        self.saturations += pat.saturation_events();
        let update = update.expect("multiply cycle ran");

        // ---- store phase: two handshake cycles, then two cycles per row. ----
        // Row r: port B reads the v row at cycle 2r+1; the full adder applies
        // the update and the shrink unit (lambda = 0 first, then lambda)
        // yields the v and beta words, written through port A at cycles
        // 2r+3 and 2r+4.
        let mut v_regs: Vec<Option<Vec<Option<FixedScalar>>>> = alloc::vec![None; t_hat];
        let mut b_regs: Vec<Option<Vec<Option<FixedScalar>>>> = alloc::vec![None; t_hat];
        let store_window = 2 * t_hat + 2;
        let c_store = (store_window + 2) as u64;
        for cycle in 1..=store_window {
            let mut port_a: Option<(VectorSlice, usize)> = None;
            let mut port_b: Option<(VectorSlice, usize)> = None;
            if cycle % 2 == 1 && (cycle - 1) / 2 < t_hat {
                port_b = Some((VectorSlice::V, (cycle - 1) / 2));
            }
            if cycle % 2 == 1 && cycle >= 3 {
                port_a = Some((VectorSlice::V, (cycle - 3) / 2));
            } else if cycle % 2 == 0 && cycle >= 4 {
                port_a = Some((VectorSlice::Beta, (cycle - 4) / 2));
            }

            // Dual-port contract: A writes, B reads, never the same address.
            if let (Some(a), Some(b)) = (port_a, port_b) {
                if a == b {
                    return Err(HwError::PortCollision {
                        slice: a.0,
                        row: a.1,
                    });
                }
            }

            if let Some((slice, row)) = port_b {
                let old = self.read_row(slice, row);
                let active = if row == t_hat - 1 { active_last } else { m };
                let mut v_new = Vec::with_capacity(m);
                let mut b_new = Vec::with_capacity(m);
                for (lane, word) in old.iter().enumerate() {
                    if lane < active {
                        let r = word
                            .overflowing_add(update)
                            .expect("datapath words share one format");
                        let vj = self.track(r);
                        // Shrink with lambda = 0 is the identity, so the v
                        // word is stored as computed.
                        let bj = vj.shrink(self.lambda).expect("lambda checked at load");
                        v_new.push(Some(vj));
                        b_new.push(Some(bj));
                    } else {
                        v_new.push(None);
                        b_new.push(None);
                    }
                }
                v_regs[row] = Some(v_new);
                b_regs[row] = Some(b_new);
            }

            if let Some((slice, row)) = port_a {
                let lanes = match slice {
                    VectorSlice::V => v_regs[row].take(),
                    VectorSlice::Beta => b_regs[row].take(),
                    VectorSlice::Y => None,
                }
                .ok_or(HwError::Desync {
                    what: "write scheduled before its row was computed",
                })?;
                self.write_row(slice, row, &lanes);
            }
        }

        let record = IterationCycles {
            iteration,
            k,
            t_hat,
            c_read,
            c_store,
            c_total: c_read + c_store,
        };
        self.cycles += record.c_total;
        self.iteration = iteration;
        self.records.push(record);
        Ok(record)
    }

    /// Runs `iterations` further iterations and returns the full trace.
    pub fn run(&mut self, iterations: u64) -> Result<CycleTrace, HwError> {
        for _ in 0..iterations {
            self.run_iteration()?;
        }
        Ok(self.trace())
    }

    /// Cycle accounting so far.
    pub fn trace(&self) -> CycleTrace {
        CycleTrace {
            f_consumed: self.config.f_overhead,
            total_cycles: self.cycles,
            per_iteration: self.records.clone(),
        }
    }
}
