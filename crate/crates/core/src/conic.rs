//! LP and SOCP solving behind one small interface, plus helpers that lift
//! complex decision vectors to real variables.
//!
//! Programs are stated as maximizations. The interior-point backend is
//! Clarabel; everything it sees is assembled here, and every outcome is
//! re-checked against the original rows so callers get a violation figure
//! that does not depend on the backend's own scaling.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use serde::{Deserialize, Serialize};

use crate::Complex64;

pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Sparse affine expression `Σ coeffs[i].1 · x[coeffs[i].0] + constant`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AffineExpr {
    pub coeffs: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn new(coeffs: Vec<(usize, f64)>, constant: f64) -> Self {
        Self { coeffs, constant }
    }

    pub fn var(i: usize) -> Self {
        Self::new(vec![(i, 1.0)], 0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(Vec::new(), c)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(i, a)| a * x[i]).sum::<f64>() + self.constant
    }
}

/// `Σ coeffs · x ≤ bound`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub coeffs: Vec<(usize, f64)>,
    pub bound: f64,
}

impl LinearRow {
    pub fn new(coeffs: Vec<(usize, f64)>, bound: f64) -> Self {
        Self { coeffs, bound }
    }

    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(i, a)| a * x[i]).sum()
    }

    /// Positive part of the row residual, relative to `1 + |bound|`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        ((self.lhs(x) - self.bound) / (1.0 + self.bound.abs())).max(0.0)
    }
}

/// Maximize `objective · x` subject to `rows` and `lower ≤ x ≤ upper`.
/// Infinite bounds are allowed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearProgramSpec {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<LinearRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgramSpec {
    /// A program with `n` variables in `[lo, hi]` and zero objective.
    pub fn new(n: usize, lo: f64, hi: f64) -> Self {
        Self {
            n_vars: n,
            objective: vec![0.0; n],
            rows: Vec::new(),
            lower: vec![lo; n],
            upper: vec![hi; n],
        }
    }

    /// Appends a variable and returns its index.
    pub fn add_var(&mut self, lo: f64, hi: f64, objective: f64) -> usize {
        self.n_vars += 1;
        self.objective.push(objective);
        self.lower.push(lo);
        self.upper.push(hi);
        self.n_vars - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, bound: f64) {
        self.rows.push(LinearRow::new(coeffs, bound));
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    fn validate(&self) -> Result<(), String> {
        if self.objective.len() != self.n_vars
            || self.lower.len() != self.n_vars
            || self.upper.len() != self.n_vars
        {
            return Err("objective/bound lengths differ from the variable count".into());
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err("non-finite objective coefficient".into());
        }
        for (k, row) in self.rows.iter().enumerate() {
            if !row.bound.is_finite() && row.bound != f64::INFINITY {
                return Err(format!("row {k}: bound {}", row.bound));
            }
            for &(i, a) in &row.coeffs {
                if i >= self.n_vars || !a.is_finite() {
                    return Err(format!("row {k}: bad coefficient ({i}, {a})"));
                }
            }
        }
        Ok(())
    }

    /// Largest relative violation of rows and bounds at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.rows {
            worst = worst.max(row.violation(x));
        }
        for i in 0..self.n_vars {
            let lo = self.lower[i];
            let hi = self.upper[i];
            if lo.is_finite() {
                worst = worst.max((lo - x[i]) / (1.0 + lo.abs()));
            }
            if hi.is_finite() {
                worst = worst.max((x[i] - hi) / (1.0 + hi.abs()));
            }
        }
        worst
    }
}

/// `‖head‖₂ ≤ tail`, all parts affine in the decision vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeBlock {
    pub tail: AffineExpr,
    pub head: Vec<AffineExpr>,
}

impl ConeBlock {
    pub fn violation(&self, x: &[f64]) -> f64 {
        let t = self.tail.eval(x);
        let h = self.head.iter().map(|e| e.eval(x).powi(2)).sum::<f64>().sqrt();
        ((h - t) / (1.0 + t.abs())).max(0.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConeProgramSpec {
    pub lp: LinearProgramSpec,
    pub cones: Vec<ConeBlock>,
}

impl ConeProgramSpec {
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.cones
            .iter()
            .map(|c| c.violation(x))
            .fold(self.lp.max_violation(x), f64::max)
    }

    /// Structured-text dump for offline cross-checks with another solver.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cone program serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    /// Objective recomputed from `x` (maximization sense).
    pub objective: f64,
    pub max_violation: f64,
    pub iterations: u32,
}

impl SolveOutcome {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    fn failed(status: SolveStatus, n: usize) -> Self {
        Self {
            status,
            x: vec![0.0; n],
            objective: f64::NAN,
            max_violation: f64::INFINITY,
            iterations: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Feasibility and duality-gap tolerance.
    pub tolerance: f64,
    pub max_iter: u32,
    /// Reduced-accuracy results are accepted when their violation stays
    /// below this value.
    pub accept_violation: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            max_iter: 200,
            accept_violation: 1e-6,
        }
    }
}

pub fn solve_lp(spec: &LinearProgramSpec) -> SolveOutcome {
    solve_lp_with(spec, &SolverOptions::default())
}

pub fn solve_lp_with(spec: &LinearProgramSpec, opts: &SolverOptions) -> SolveOutcome {
    solve_impl(spec, &[], opts)
}

pub fn solve_socp(spec: &ConeProgramSpec) -> SolveOutcome {
    solve_socp_with(spec, &SolverOptions::default())
}

pub fn solve_socp_with(spec: &ConeProgramSpec, opts: &SolverOptions) -> SolveOutcome {
    solve_impl(&spec.lp, &spec.cones, opts)
}

struct Assembly {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
}

impl Assembly {
    fn push_row(&mut self, coeffs: impl IntoIterator<Item = (usize, f64)>, b: f64) {
        let r = self.b.len();
        for (i, a) in coeffs {
            if a != 0.0 {
                self.rows.push(r);
                self.cols.push(i);
                self.vals.push(a);
            }
        }
        self.b.push(b);
    }

    fn push_cone(&mut self, cone: SupportedConeT<f64>) {
        use SupportedConeT::*;
        // merge consecutive orthant / zero blocks
        match (self.cones.last_mut(), &cone) {
            (Some(NonnegativeConeT(n)), NonnegativeConeT(k)) => *n += k,
            (Some(ZeroConeT(n)), ZeroConeT(k)) => *n += k,
            _ => self.cones.push(cone),
        }
    }
}

fn solve_impl(spec: &LinearProgramSpec, cones: &[ConeBlock], opts: &SolverOptions) -> SolveOutcome {
    let n = spec.n_vars;
    if let Err(msg) = spec.validate() {
        log::warn!("malformed program: {msg}");
        return SolveOutcome::failed(SolveStatus::NumericalFailure, n);
    }
    for c in cones {
        let bad = std::iter::once(&c.tail)
            .chain(&c.head)
            .any(|e| e.coeffs.iter().any(|&(i, a)| i >= n || !a.is_finite()) || !e.constant.is_finite());
        if bad {
            log::warn!("malformed cone block");
            return SolveOutcome::failed(SolveStatus::NumericalFailure, n);
        }
    }
    if (0..n).any(|i| spec.lower[i] > spec.upper[i]) {
        return SolveOutcome::failed(SolveStatus::Infeasible, n);
    }

    let mut asm = Assembly {
        rows: Vec::new(),
        cols: Vec::new(),
        vals: Vec::new(),
        b: Vec::new(),
        cones: Vec::new(),
    };
    // fixed variables as equalities
    let mut fixed = 0;
    for i in 0..n {
        if spec.lower[i] == spec.upper[i] {
            asm.push_row([(i, 1.0)], spec.lower[i]);
            fixed += 1;
        }
    }
    if fixed > 0 {
        asm.push_cone(SupportedConeT::ZeroConeT(fixed));
    }
    let mut ineq = 0;
    for row in &spec.rows {
        if row.bound == f64::INFINITY {
            continue;
        }
        asm.push_row(row.coeffs.iter().copied(), row.bound);
        ineq += 1;
    }
    for i in 0..n {
        if spec.lower[i] == spec.upper[i] {
            continue;
        }
        if spec.lower[i].is_finite() {
            asm.push_row([(i, -1.0)], -spec.lower[i]);
            ineq += 1;
        }
        if spec.upper[i].is_finite() {
            asm.push_row([(i, 1.0)], spec.upper[i]);
            ineq += 1;
        }
    }
    if ineq > 0 {
        asm.push_cone(SupportedConeT::NonnegativeConeT(ineq));
    }
    for c in cones {
        // s = b - A x must equal (tail, head...)
        for e in std::iter::once(&c.tail).chain(&c.head) {
            asm.push_row(e.coeffs.iter().map(|&(i, a)| (i, -a)), e.constant);
        }
        asm.push_cone(SupportedConeT::SecondOrderConeT(1 + c.head.len()));
    }

    // with every variable boxed an unbounded verdict can only be numerical
    let boxed = (0..n).all(|i| spec.lower[i].is_finite() && spec.upper[i].is_finite());
    let m = asm.b.len();
    let a = CscMatrix::new_from_triplets(m, n, asm.rows, asm.cols, asm.vals);
    let p = CscMatrix::<f64>::zeros((n, n));
    // penalty weights can dwarf the rest of the objective by many orders of
    // magnitude; a unit-norm objective keeps the dual well scaled
    let q_norm = spec.objective.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let q_scale = if q_norm > 0.0 { 1.0 / q_norm } else { 1.0 };
    let q: Vec<f64> = spec.objective.iter().map(|c| -c * q_scale).collect();
    let settings = DefaultSettings {
        verbose: false,
        max_iter: opts.max_iter,
        tol_gap_abs: opts.tolerance,
        tol_gap_rel: opts.tolerance,
        tol_feas: opts.tolerance,
        ..DefaultSettings::default()
    };
    let mut solver = match DefaultSolver::new(&p, &q, &a, &asm.b, &asm.cones, settings) {
        Ok(s) => s,
        Err(e) => {
            log::warn!("solver setup failed: {e}");
            return SolveOutcome::failed(SolveStatus::NumericalFailure, n);
        }
    };
    solver.solve();
    let sol = &solver.solution;
    let x = sol.x.clone();
    let violation = cones
        .iter()
        .map(|c| c.violation(&x))
        .fold(spec.max_violation(&x), f64::max);
    let status = match sol.status {
        SolverStatus::Solved => SolveStatus::Optimal,
        SolverStatus::AlmostSolved
        | SolverStatus::MaxIterations
        | SolverStatus::InsufficientProgress
        | SolverStatus::NumericalError
            if violation <= opts.accept_violation && x.iter().all(|v| v.is_finite()) =>
        {
            SolveStatus::Optimal
        }
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            SolveStatus::Infeasible
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible if !boxed => SolveStatus::Unbounded,
        _ => SolveStatus::NumericalFailure,
    };
    let objective = spec.objective_value(&x);
    SolveOutcome {
        status,
        x,
        objective,
        max_violation: violation,
        iterations: sol.iterations,
    }
}

/// Real layout of a block of complex variables: slot `n` occupies
/// `offset + 2n` (real part) and `offset + 2n + 1` (imaginary part).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexLayout {
    pub offset: usize,
    pub len: usize,
}

impl ComplexLayout {
    pub fn new(offset: usize, len: usize) -> Self {
        Self { offset, len }
    }

    /// Reserves `len` unbounded complex slots at the end of `spec`.
    pub fn append(spec: &mut LinearProgramSpec, len: usize) -> Self {
        let offset = spec.n_vars;
        for _ in 0..2 * len {
            spec.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0);
        }
        Self { offset, len }
    }

    pub fn n_real(&self) -> usize {
        2 * self.len
    }

    pub fn re(&self, n: usize) -> usize {
        self.offset + 2 * n
    }

    pub fn im(&self, n: usize) -> usize {
        self.offset + 2 * n + 1
    }

    pub fn lift(v: &[Complex64]) -> Vec<f64> {
        v.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn unlift(&self, x: &[f64]) -> Vec<Complex64> {
        (0..self.len)
            .map(|n| Complex64::new(x[self.re(n)], x[self.im(n)]))
            .collect()
    }

    /// Coefficients of `Re{c^H v}` in the real variables.
    pub fn real_inner(&self, c: &[Complex64]) -> Vec<(usize, f64)> {
        assert_eq!(c.len(), self.len);
        let mut out = Vec::with_capacity(2 * self.len);
        for (n, cn) in c.iter().enumerate() {
            out.push((self.re(n), cn.re));
            out.push((self.im(n), cn.im));
        }
        out
    }

    /// `|v_n| ≤ 1`.
    pub fn unit_disc(&self, n: usize) -> ConeBlock {
        ConeBlock {
            tail: AffineExpr::constant(1.0),
            head: vec![AffineExpr::var(self.re(n)), AffineExpr::var(self.im(n))],
        }
    }
}
