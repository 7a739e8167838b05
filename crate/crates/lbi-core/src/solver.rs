//! The linearized Bregman iteration core, plus support extraction and
//! least-squares debiasing.
//!
//! One iteration with cyclic row index `k` computes the instantaneous
//! residual `e = y[k] - sum(beta[1..=k])`, scales it by `1/k`, adds the
//! result to `v[1..=k]`, and soft-thresholds each touched `v[j]` back into
//! `beta[j]`. Entries past `k` are untouched. The same engine runs over
//! plain `f64` or over [`FixedScalar`] words via the [`ScalarDomain`] trait,
//! and the fixed-point run is the bit-true golden model for the hardware
//! simulator in [`crate::hwsim`].

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::fixed::{FixedError, FixedFormat, FixedScalar};
use crate::flt;
use crate::signal::{Signal, SignalError};

/// Errors from solver configuration and post-processing.
#[derive(Clone, Debug, PartialEq)]
pub enum SolverError {
    /// Lambda must be finite and non-negative.
    InvalidLambda { lambda: f64 },
    /// At least one iteration is required.
    ZeroIterations,
    /// Start vectors must match the signal length.
    LengthMismatch { expected: usize, got: usize },
    /// Debiasing needs a non-empty support.
    EmptySupport,
    /// Support index outside `[1, n]`.
    IndexOutOfRange { index: usize, n: usize },
    /// Duplicate support indices make the design rank deficient.
    RankDeficient { index: usize },
    Signal(SignalError),
    Fixed(FixedError),
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::InvalidLambda { lambda } => write!(f, "invalid lambda {lambda}"),
            SolverError::ZeroIterations => write!(f, "iteration budget must be at least 1"),
            SolverError::LengthMismatch { expected, got } => {
                write!(f, "length mismatch: expected {expected}, got {got}")
            }
            SolverError::EmptySupport => write!(f, "support is empty"),
            SolverError::IndexOutOfRange { index, n } => {
                write!(f, "support index {index} outside [1, {n}]")
            }
            SolverError::RankDeficient { index } => {
                write!(f, "rank-deficient design (duplicate support index {index})")
            }
            SolverError::Signal(e) => write!(f, "{e}"),
            SolverError::Fixed(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SolverError {}

impl From<SignalError> for SolverError {
    fn from(e: SignalError) -> Self {
        SolverError::Signal(e)
    }
}

impl From<FixedError> for SolverError {
    fn from(e: FixedError) -> Self {
        SolverError::Fixed(e)
    }
}

/// Soft threshold over `f64`: `max(|v| - lambda, 0) * sign(v)`.
///
/// The identity map when `lambda == 0`.
pub fn shrink(v: f64, lambda: f64) -> f64 {
    let magnitude = v.abs() - lambda;
    if magnitude <= 0.0 {
        0.0
    } else {
        magnitude * v.signum()
    }
}

/// The scalar arithmetic a solver run is expressed over.
///
/// Methods take `&mut self` so that implementations can count renormalization
/// events (the fixed-point domain counts saturations).
pub trait ScalarDomain {
    type Value: Copy + PartialEq + fmt::Debug;

    fn encode(&self, x: f64) -> Self::Value;
    fn decode(&self, v: Self::Value) -> f64;
    fn zero(&self) -> Self::Value;
    fn add(&mut self, a: Self::Value, b: Self::Value) -> Self::Value;
    fn sub(&mut self, a: Self::Value, b: Self::Value) -> Self::Value;
    fn mul(&mut self, a: Self::Value, b: Self::Value) -> Self::Value;
    /// Exactly rounded `1/k`.
    fn reciprocal(&mut self, k: usize) -> Self::Value;
    fn shrink(&mut self, v: Self::Value, lambda: Self::Value) -> Self::Value;
    /// Number of results so far whose exact value left the representable
    /// range. Always zero for `f64`.
    fn saturation_events(&self) -> u64 {
        0
    }
    /// Short label for reports, e.g. `"double"` or `"fixed:s4.16"`.
    fn label(&self) -> String;
}

/// IEEE double precision.
#[derive(Clone, Copy, Debug, Default)]
pub struct DoubleDomain;

impl ScalarDomain for DoubleDomain {
    type Value = f64;

    fn encode(&self, x: f64) -> f64 {
        x
    }

    fn decode(&self, v: f64) -> f64 {
        v
    }

    fn zero(&self) -> f64 {
        0.0
    }

    fn add(&mut self, a: f64, b: f64) -> f64 {
        a + b
    }

    fn sub(&mut self, a: f64, b: f64) -> f64 {
        a - b
    }

    fn mul(&mut self, a: f64, b: f64) -> f64 {
        a * b
    }

    fn reciprocal(&mut self, k: usize) -> f64 {
        1.0 / k as f64
    }

    fn shrink(&mut self, v: f64, lambda: f64) -> f64 {
        shrink(v, lambda)
    }

    fn label(&self) -> String {
        String::from("double")
    }
}

/// Saturating fixed-point arithmetic in one format, with saturation counting.
#[derive(Clone, Debug)]
pub struct FixedDomain {
    format: FixedFormat,
    saturations: u64,
}

impl FixedDomain {
    pub fn new(format: FixedFormat) -> Self {
        FixedDomain {
            format,
            saturations: 0,
        }
    }

    pub fn format(&self) -> FixedFormat {
        self.format
    }

    fn track(&mut self, result: (FixedScalar, bool)) -> FixedScalar {
        self.saturations += result.1 as u64;
        result.0
    }
}

impl ScalarDomain for FixedDomain {
    type Value = FixedScalar;

    fn encode(&self, x: f64) -> FixedScalar {
        FixedScalar::quantize(x, self.format)
    }

    fn decode(&self, v: FixedScalar) -> f64 {
        v.to_f64()
    }

    fn zero(&self) -> FixedScalar {
        FixedScalar::zero(self.format)
    }

    #[inline]
    fn add(&mut self, a: FixedScalar, b: FixedScalar) -> FixedScalar {
        let r = a.add_unchecked(b);
        self.track(r)
    }

    #[inline]
    fn sub(&mut self, a: FixedScalar, b: FixedScalar) -> FixedScalar {
        let r = a.sub_unchecked(b);
        self.track(r)
    }

    #[inline]
    fn mul(&mut self, a: FixedScalar, b: FixedScalar) -> FixedScalar {
        let r = a.mul_unchecked(b);
        self.track(r)
    }

    fn reciprocal(&mut self, k: usize) -> FixedScalar {
        let r = FixedScalar::overflowing_reciprocal(k as u64, self.format)
            .expect("k >= 1 inside the iteration loop");
        self.track(r)
    }

    #[inline]
    fn shrink(&mut self, v: FixedScalar, lambda: FixedScalar) -> FixedScalar {
        v.shrink_unchecked(lambda)
    }

    fn saturation_events(&self) -> u64 {
        self.saturations
    }

    fn label(&self) -> String {
        let mut s = String::from("fixed:");
        s.push_str(&alloc::format!("{}", self.format));
        s
    }
}

/// Iterate pair `(beta, v)` plus the iteration counters.
///
/// `iteration` counts completed iterations (the pseudo-index `i`); `row` is
/// the cyclic row index `k = ((i - 1) mod N) + 1` of the last completed
/// iteration, or 0 before the first one.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientState<V> {
    beta: Vec<V>,
    v: Vec<V>,
    iteration: u64,
    row: usize,
}

impl<V: Copy> CoefficientState<V> {
    pub fn beta(&self) -> &[V] {
        &self.beta
    }

    pub fn v(&self) -> &[V] {
        &self.v
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn row(&self) -> usize {
        self.row
    }
}

/// Per-iteration intermediates, for diagnostics and cross-checks.
#[derive(Clone, Copy, Debug)]
pub struct StepInfo<V> {
    pub iteration: u64,
    pub row: usize,
    /// `sum(beta[1..=k])` entering the residual.
    pub beta_sum: V,
    /// Instantaneous residual `e = y[k] - beta_sum`.
    pub residual: V,
    /// Scaled update `d = e / k` added to `v[1..=k]`.
    pub update: V,
}

/// A solver run over one scalar domain.
pub struct LbiSolver<D: ScalarDomain> {
    domain: D,
    y: Vec<D::Value>,
    lambda: D::Value,
    state: CoefficientState<D::Value>,
    max_abs_beta_sum: f64,
}

impl LbiSolver<DoubleDomain> {
    pub fn double(y: &Signal, lambda: f64) -> Result<Self, SolverError> {
        Self::with_domain(DoubleDomain, y.samples(), lambda, None, None)
    }
}

impl LbiSolver<FixedDomain> {
    pub fn fixed(y: &Signal, lambda: f64, format: FixedFormat) -> Result<Self, SolverError> {
        Self::with_domain(FixedDomain::new(format), y.samples(), lambda, None, None)
    }
}

impl<D: ScalarDomain> LbiSolver<D> {
    /// Starts a run from optional warm-start vectors (defaults are zeros).
    pub fn with_domain(
        domain: D,
        samples: &[f64],
        lambda: f64,
        beta_start: Option<&[f64]>,
        v_start: Option<&[f64]>,
    ) -> Result<Self, SolverError> {
        if samples.is_empty() {
            return Err(SolverError::Signal(SignalError::Empty));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(SolverError::InvalidLambda { lambda });
        }
        let n = samples.len();
        let encode_vec = |src: Option<&[f64]>| -> Result<Vec<D::Value>, SolverError> {
            match src {
                Some(values) => {
                    if values.len() != n {
                        return Err(SolverError::LengthMismatch {
                            expected: n,
                            got: values.len(),
                        });
                    }
                    Ok(values.iter().map(|&x| domain.encode(x)).collect())
                }
                None => Ok(alloc::vec![domain.zero(); n]),
            }
        };
        let beta = encode_vec(beta_start)?;
        let v = encode_vec(v_start)?;
        let y = samples.iter().map(|&x| domain.encode(x)).collect();
        let lambda = domain.encode(lambda);
        Ok(LbiSolver {
            domain,
            y,
            lambda,
            state: CoefficientState {
                beta,
                v,
                iteration: 0,
                row: 0,
            },
            max_abs_beta_sum: 0.0,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn domain(&self) -> &D {
        &self.domain
    }

    pub fn state(&self) -> &CoefficientState<D::Value> {
        &self.state
    }

    pub fn lambda(&self) -> D::Value {
        self.lambda
    }

    /// Largest `|sum(beta[1..=k])|` observed across iterations so far.
    pub fn max_abs_beta_sum(&self) -> f64 {
        self.max_abs_beta_sum
    }

    pub fn saturation_events(&self) -> u64 {
        self.domain.saturation_events()
    }

    /// Runs one iteration: rows cycle `1..=N`, only `beta[1..=k]` and
    /// `v[1..=k]` are touched.
    pub fn step(&mut self) -> StepInfo<D::Value> {
        let n = self.y.len();
        let iteration = self.state.iteration + 1;
        let k = ((iteration - 1) % n as u64) as usize + 1;
        let domain = &mut self.domain;
        let lambda = self.lambda;

        let mu = domain.reciprocal(k);
        let mut beta_sum = domain.zero();
        for &b in &self.state.beta[..k] {
            beta_sum = domain.add(beta_sum, b);
        }
        let residual = domain.sub(self.y[k - 1], beta_sum);
        let update = domain.mul(mu, residual);
        for (vj, bj) in self.state.v[..k]
            .iter_mut()
            .zip(self.state.beta[..k].iter_mut())
        {
            let moved = domain.add(*vj, update);
            *vj = moved;
            *bj = domain.shrink(moved, lambda);
        }
        self.state.iteration = iteration;
        self.state.row = k;

        let sum_mag = self.domain.decode(beta_sum).abs();
        if sum_mag > self.max_abs_beta_sum {
            self.max_abs_beta_sum = sum_mag;
        }
        StepInfo {
            iteration,
            row: k,
            beta_sum,
            residual,
            update,
        }
    }

    /// Runs `iterations` further iterations.
    pub fn run(&mut self, iterations: u64) {
        for _ in 0..iterations {
            self.step();
        }
    }

    pub fn beta_f64(&self) -> Vec<f64> {
        self.state
            .beta
            .iter()
            .map(|&b| self.domain.decode(b))
            .collect()
    }

    pub fn v_f64(&self) -> Vec<f64> {
        self.state.v.iter().map(|&v| self.domain.decode(v)).collect()
    }

    /// Sorted 1-based indices with `|beta[j]| > threshold`.
    ///
    /// The default threshold 0 keeps exact nonzeros, which in the fixed
    /// domain means nonzero raw words.
    pub fn support(&self, threshold: f64) -> Vec<usize> {
        extract_support(&self.beta_f64(), threshold)
    }
}

/// Sorted 1-based indices of entries with magnitude strictly above the
/// threshold.
pub fn extract_support(beta: &[f64], threshold: f64) -> Vec<usize> {
    beta.iter()
        .enumerate()
        .filter(|(_, b)| b.abs() > threshold)
        .map(|(j, _)| j + 1)
        .collect()
}

/// Iteration budget: either a total count or a per-sample multiplier.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum IterationBudget {
    Total(u64),
    PerSample(u64),
}

impl IterationBudget {
    pub fn total_for(&self, n: usize) -> u64 {
        match self {
            IterationBudget::Total(l) => *l,
            IterationBudget::PerSample(per) => per * n as u64,
        }
    }
}

/// Which scalar arithmetic to solve in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainKind {
    Double,
    Fixed(FixedFormat),
}

/// Full configuration of a solver run.
#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    pub lambda: f64,
    pub budget: IterationBudget,
    pub domain: DomainKind,
}

/// A finished run over either domain.
pub enum Solution {
    Double(LbiSolver<DoubleDomain>),
    Fixed(LbiSolver<FixedDomain>),
}

impl Solution {
    pub fn beta_f64(&self) -> Vec<f64> {
        match self {
            Solution::Double(s) => s.beta_f64(),
            Solution::Fixed(s) => s.beta_f64(),
        }
    }

    /// Raw fixed-point words of the estimate, if this was a fixed run.
    pub fn beta_raw(&self) -> Option<Vec<i64>> {
        match self {
            Solution::Double(_) => None,
            Solution::Fixed(s) => Some(s.state().beta().iter().map(|b| b.raw()).collect()),
        }
    }

    pub fn support(&self, threshold: f64) -> Vec<usize> {
        match self {
            Solution::Double(s) => s.support(threshold),
            Solution::Fixed(s) => s.support(threshold),
        }
    }

    pub fn iterations(&self) -> u64 {
        match self {
            Solution::Double(s) => s.state().iteration(),
            Solution::Fixed(s) => s.state().iteration(),
        }
    }

    pub fn saturation_events(&self) -> u64 {
        match self {
            Solution::Double(s) => s.saturation_events(),
            Solution::Fixed(s) => s.saturation_events(),
        }
    }

    pub fn max_abs_beta_sum(&self) -> f64 {
        match self {
            Solution::Double(s) => s.max_abs_beta_sum(),
            Solution::Fixed(s) => s.max_abs_beta_sum(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Solution::Double(s) => s.domain().label(),
            Solution::Fixed(s) => s.domain().label(),
        }
    }
}

/// Runs the configured iteration budget from zero starts.
pub fn solve(y: &Signal, config: &SolverConfig) -> Result<Solution, SolverError> {
    let total = config.budget.total_for(y.n());
    if total == 0 {
        return Err(SolverError::ZeroIterations);
    }
    match config.domain {
        DomainKind::Double => {
            let mut solver = LbiSolver::double(y, config.lambda)?;
            solver.run(total);
            Ok(Solution::Double(solver))
        }
        DomainKind::Fixed(format) => {
            let mut solver = LbiSolver::fixed(y, config.lambda, format)?;
            solver.run(total);
            Ok(Solution::Fixed(solver))
        }
    }
}

/// Magnitudes refit by ordinary least squares on a fixed support.
#[derive(Clone, Debug, PartialEq)]
pub struct OlsFit {
    /// Sorted 1-based support indices.
    pub support: Vec<usize>,
    /// Refit magnitudes in the signal's original (de-scaled) units.
    pub magnitudes: Vec<f64>,
}

/// Least-squares refit of `y` against the step candidates on `support`,
/// removing the shrinkage bias of the iteration. Solved in double precision
/// by Householder QR; magnitudes are multiplied by the signal's scale factor
/// so they come back in original units.
pub fn ols_debias(y: &Signal, support: &[usize]) -> Result<OlsFit, SolverError> {
    let n = y.n();
    if support.is_empty() {
        return Err(SolverError::EmptySupport);
    }
    let mut sorted: Vec<usize> = support.to_vec();
    sorted.sort_unstable();
    for pair in sorted.windows(2) {
        if pair[0] == pair[1] {
            return Err(SolverError::RankDeficient { index: pair[0] });
        }
    }
    if sorted[0] < 1 || sorted[sorted.len() - 1] > n {
        let bad = if sorted[0] < 1 {
            sorted[0]
        } else {
            sorted[sorted.len() - 1]
        };
        return Err(SolverError::IndexOutOfRange { index: bad, n });
    }

    // Step candidate j is 1 from row j on; build the dense restriction.
    let mut columns: Vec<Vec<f64>> = sorted
        .iter()
        .map(|&j| {
            let mut col = alloc::vec![0.0; n];
            for value in col.iter_mut().skip(j - 1) {
                *value = 1.0;
            }
            col
        })
        .collect();
    let mut rhs: Vec<f64> = y.samples().to_vec();
    let mut coeffs = householder_lstsq(&mut columns, &mut rhs)?;
    for c in &mut coeffs {
        *c *= y.scale_factor();
    }
    Ok(OlsFit {
        support: sorted,
        magnitudes: coeffs,
    })
}

/// In-place Householder QR least squares: minimizes `||X b - y||` for the
/// dense columns of X. Requires `p <= n` and full column rank.
fn householder_lstsq(columns: &mut [Vec<f64>], rhs: &mut [f64]) -> Result<Vec<f64>, SolverError> {
    let n = rhs.len();
    let p = columns.len();
    debug_assert!(p >= 1 && p <= n);

    let mut diag = alloc::vec![0.0; p];
    for j in 0..p {
        let norm_sq: f64 = columns[j][j..].iter().map(|x| x * x).sum();
        let norm = flt::sqrt(norm_sq);
        if norm == 0.0 {
            return Err(SolverError::RankDeficient { index: j });
        }
        let x0 = columns[j][j];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        diag[j] = alpha;
        // Reflector v = x - alpha * e1 stored in place of the column tail.
        columns[j][j] = x0 - alpha;
        let vtv = 2.0 * (norm_sq - alpha * x0);
        if vtv == 0.0 {
            return Err(SolverError::RankDeficient { index: j });
        }
        for t in (j + 1)..p {
            let dot: f64 = columns[j][j..]
                .iter()
                .zip(&columns[t][j..])
                .map(|(v, x)| v * x)
                .sum();
            let scale = 2.0 * dot / vtv;
            for r in j..n {
                columns[t][r] -= scale * columns[j][r];
            }
        }
        let dot: f64 = columns[j][j..]
            .iter()
            .zip(&rhs[j..])
            .map(|(v, x)| v * x)
            .sum();
        let scale = 2.0 * dot / vtv;
        for r in j..n {
            rhs[r] -= scale * columns[j][r];
        }
    }

    // Back substitution on the implicit R (strict upper part lives in the
    // transformed columns, the diagonal in `diag`).
    let mut coeffs = alloc::vec![0.0; p];
    for j in (0..p).rev() {
        let mut value = rhs[j];
        for t in (j + 1)..p {
            value -= columns[t][j] * coeffs[t];
        }
        if diag[j].abs() < 1e-12 {
            return Err(SolverError::RankDeficient { index: j });
        }
        coeffs[j] = value / diag[j];
    }
    Ok(coeffs)
}

/// Detection outcome: support and magnitudes plus run metadata.
///
/// The wire format carries exactly the fields below minus `beta_raw`, which
/// is the biased in-memory estimate (in original units) kept for diagnostics.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BreakReport {
    pub support: Vec<usize>,
    /// Refit magnitudes when debiasing ran, otherwise the biased estimates,
    /// always in original (de-scaled) units.
    pub magnitudes: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub beta_raw: Vec<f64>,
    pub scale_factor: f64,
    pub iterations: u64,
    pub lambda: f64,
    pub domain: String,
    pub saturation_events: u64,
}

impl BreakReport {
    /// Assembles a report from a finished run. `debias` refits magnitudes by
    /// OLS on the extracted support (skipped when the support is empty).
    pub fn from_solution(
        solution: &Solution,
        y: &Signal,
        lambda: f64,
        threshold: f64,
        debias: bool,
    ) -> Result<BreakReport, SolverError> {
        let support = solution.support(threshold);
        let beta = solution.beta_f64();
        let beta_raw: Vec<f64> = beta.iter().map(|b| b * y.scale_factor()).collect();
        let magnitudes = if debias && !support.is_empty() {
            ols_debias(y, &support)?.magnitudes
        } else {
            support.iter().map(|&j| beta_raw[j - 1]).collect()
        };
        Ok(BreakReport {
            support,
            magnitudes,
            beta_raw,
            scale_factor: y.scale_factor(),
            iterations: solution.iterations(),
            lambda,
            domain: solution.label(),
            saturation_events: solution.saturation_events(),
        })
    }
}
