//! Optimal first-order scheme driven by a delta-accurate gradient oracle
//! over a prox-capable feasible set.
//!
//! One iteration queries the oracle at x_k, takes a projected gradient step
//! to get y_k, solves the accumulated linear model against the prox-function
//! to get z_k, and mixes: x_{k+1} = tau_k z_k + (1 - tau_k) y_k. With a
//! gradient error certified at delta per call, the objective gap at y_k is
//! bounded by L d(x*)/(sigma A_k) + 3 delta.

use std::time::Instant;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// (x, g, l) -> a projected gradient step from x along g with curvature l.
pub type GradStepMap = Box<dyn Fn(&DVector<f64>, &DVector<f64>, f64) -> DVector<f64> + Sync>;
/// (s, ratio) -> the prox-model minimizer for accumulated gradients s.
pub type ModelMap = Box<dyn Fn(&DVector<f64>, f64) -> DVector<f64> + Sync>;
/// x -> d(x), the prox-function value.
pub type ProxValue = Box<dyn Fn(&DVector<f64>) -> f64 + Sync>;
/// (x, tol) -> whether x lies in Q within tol.
pub type Membership = Box<dyn Fn(&DVector<f64>, f64) -> bool + Sync>;

/// Prox setup for a feasible set Q: prox center, strong-convexity parameter
/// of the prox-function d, and the two projection maps the scheme needs.
pub struct FeasibleSet {
    pub dimension: usize,
    /// Minimizer of d over Q; d(prox_center) = 0.
    pub prox_center: DVector<f64>,
    /// Strong-convexity parameter sigma of d.
    pub sigma: f64,
    /// Finite upper bound on d over Q, used for iteration budgeting.
    pub diameter_bound: f64,
    /// (x, g, l) -> argmin_{y in Q} { <g, y - x> + (l/2) ||y - x||^2 }.
    pub project_grad_step: GradStepMap,
    /// (s, ratio) -> argmin_{x in Q} { ratio * d(x) + <s, x> } with ratio = L/sigma.
    pub project_model: ModelMap,
    pub d_of: ProxValue,
    /// Membership check within the given tolerance.
    pub contains: Membership,
}

/// Step sequence alpha_k with its running sum A_k. The default
/// alpha_k = (k+1)/2 gives A_k = (k+1)(k+2)/4 and satisfies the validity
/// conditions 0 < alpha_0 <= 1, alpha_k^2 <= A_k.
pub struct StepSchedule {
    alpha_rule: Box<dyn Fn(usize) -> f64 + Sync>,
    cumulative_rule: Box<dyn Fn(usize) -> f64 + Sync>,
}

impl StepSchedule {
    pub fn new(
        alpha: impl Fn(usize) -> f64 + Sync + 'static,
        cumulative: impl Fn(usize) -> f64 + Sync + 'static,
    ) -> Self {
        Self {
            alpha_rule: Box::new(alpha),
            cumulative_rule: Box::new(cumulative),
        }
    }

    /// alpha_k = (k+1)/2.
    pub fn standard() -> Self {
        Self::new(
            |k| (k as f64 + 1.0) / 2.0,
            |k| (k as f64 + 1.0) * (k as f64 + 2.0) / 4.0,
        )
    }

    pub fn alpha(&self, k: usize) -> f64 {
        (self.alpha_rule)(k)
    }

    /// A_k = sum_{i<=k} alpha_i.
    pub fn cumulative(&self, k: usize) -> f64 {
        (self.cumulative_rule)(k)
    }

    /// tau_k = alpha_{k+1} / A_{k+1}, in [0, 1].
    pub fn tau(&self, k: usize) -> f64 {
        self.alpha(k + 1) / self.cumulative(k + 1)
    }

    /// Checks 0 < alpha_0 <= 1 and alpha_k^2 <= A_k for k < horizon.
    pub fn validate(&self, horizon: usize) -> bool {
        let a0 = self.alpha(0);
        if !(a0 > 0.0 && a0 <= 1.0) {
            return false;
        }
        (0..horizon).all(|k| {
            let a = self.alpha(k);
            a >= 0.0 && a * a <= self.cumulative(k) * (1.0 + 1e-12)
        })
    }
}

impl Default for StepSchedule {
    fn default() -> Self {
        Self::standard()
    }
}

/// One oracle evaluation in the solver's vector geometry.
#[derive(Debug, Clone)]
pub struct OracleEval {
    /// Smoothed objective estimate at the query point (logging only).
    pub value: f64,
    pub gradient: DVector<f64>,
    /// Certified bound on the delta of this gradient.
    pub delta_cert: f64,
    pub m_used: usize,
    /// Ambient eigendecomposition size (for percentage-of-eigenvalues stats).
    pub matrix_dim: usize,
    pub eig_gap: Option<f64>,
    /// Primal gradient matrix (PSD, trace 1) when the problem has one.
    pub primal: Option<SymMatrix>,
}

/// A problem the solver can drive: a delta-accurate smoothed-gradient oracle
/// plus a computable duality gap built from the primal gradient matrix.
pub trait SmoothProblem {
    /// Gradient oracle at `x`; `delta <= 0` requests the exact gradient.
    fn oracle(&self, x: &DVector<f64>, delta: f64) -> Result<OracleEval>;

    /// Unsmoothed objective at a feasible point (used for the gap and the
    /// incumbent).
    fn objective(&self, x: &DVector<f64>) -> Result<f64>;

    /// Lower bound on the optimal value built from a feasible primal matrix.
    fn lower_bound(&self, primal: &SymMatrix) -> f64;
}

/// Per-iteration record; the CSV row schema of the benchmark harness.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    pub k: usize,
    pub wall_seconds: f64,
    pub gap: f64,
    pub value_estimate: f64,
    pub m_used: usize,
    pub pct_eigs: f64,
    pub delta_cert: f64,
    pub eig_gap: Option<f64>,
}

/// Mutable state of one solve.
pub struct SolverState {
    pub k: usize,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub z: DVector<f64>,
    /// Accumulated alpha-weighted approximate gradients.
    pub s: DVector<f64>,
    /// Accumulated error term g(k, delta) from the recursion
    /// g(k+1) = (1 - tau_k) g(k) + 3 tau_k delta, g(0) = alpha_0 delta.
    pub g_err: f64,
    pub best_y: DVector<f64>,
    pub best_objective: f64,
    pub best_lower_bound: f64,
    /// alpha-weighted running average of primal gradient matrices.
    avg_primal: Option<SymMatrix>,
    avg_weight: f64,
    pub history: Vec<HistoryRow>,
    pub g_history: Vec<f64>,
    pub iterates_y: Vec<DVector<f64>>,
    started: Instant,
}

impl SolverState {
    pub fn new(set: &FeasibleSet) -> Self {
        Self::starting_at(set.prox_center.clone())
    }

    pub fn starting_at(x0: DVector<f64>) -> Self {
        let n = x0.len();
        Self {
            k: 0,
            y: x0.clone(),
            z: x0.clone(),
            x: x0,
            s: DVector::zeros(n),
            g_err: 0.0,
            best_y: DVector::zeros(n),
            best_objective: f64::INFINITY,
            best_lower_bound: f64::NEG_INFINITY,
            avg_primal: None,
            avg_weight: 0.0,
            history: Vec::new(),
            g_history: Vec::new(),
            iterates_y: Vec::new(),
            started: Instant::now(),
        }
    }
}

/// Stopping rule applied to the incumbent duality gap.
#[derive(Debug, Clone, Copy)]
pub enum StopRule {
    /// Stop when gap <= the given absolute value.
    GapBelow(f64),
    /// Stop when gap <= factor * (gap at iteration 0).
    GapReduction(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub delta: f64,
    pub stop: StopRule,
    pub max_iter: usize,
    /// Record the y_k sequence (for convergence-envelope checks).
    pub record_iterates: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    GapReached,
    BudgetExhausted,
}

pub struct SolveResult {
    pub best_point: DVector<f64>,
    pub best_objective: f64,
    pub final_gap: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    pub history: Vec<HistoryRow>,
    pub g_history: Vec<f64>,
    pub iterates_y: Vec<DVector<f64>>,
    /// Count of Lanczos runs that fell back to a full decomposition.
    pub lanczos_fallbacks: usize,
}

/// ceil(sqrt(8 L d* / (sigma eps))): iterations to an eps-solution with the
/// standard step sequence.
pub fn iteration_budget(l: f64, d_star_bound: f64, sigma: f64, eps: f64) -> usize {
    assert!(l > 0.0 && d_star_bound > 0.0 && sigma > 0.0 && eps > 0.0);
    (8.0 * l * d_star_bound / (sigma * eps)).sqrt().ceil() as usize
}

pub struct Solver<'a> {
    pub set: &'a FeasibleSet,
    pub sched: &'a StepSchedule,
    pub lipschitz: f64,
}

impl<'a> Solver<'a> {
    pub fn new(set: &'a FeasibleSet, sched: &'a StepSchedule, lipschitz: f64) -> Self {
        Self {
            set,
            sched,
            lipschitz,
        }
    }

    /// One full iteration. Returns the duality gap recorded for this step.
    pub fn step(
        &self,
        state: &mut SolverState,
        problem: &dyn SmoothProblem,
        delta: f64,
        record_iterates: bool,
    ) -> Result<f64> {
        let k = state.k;
        let eval = problem.oracle(&state.x, delta)?;
        if delta > 0.0 && eval.delta_cert > delta * (1.0 + 1e-9) {
            return Err(Error::CertificateViolation {
                iteration: k,
                cert: eval.delta_cert,
                delta,
            });
        }

        let alpha = self.sched.alpha(k);
        let y = (self.set.project_grad_step)(&state.x, &eval.gradient, self.lipschitz);

        let obj_y = problem.objective(&y)?;
        if obj_y < state.best_objective {
            state.best_objective = obj_y;
            state.best_y = y.clone();
        }
        if let Some(primal) = &eval.primal {
            state.best_lower_bound = state.best_lower_bound.max(problem.lower_bound(primal));
            match &mut state.avg_primal {
                Some(avg) => avg.add_scaled(primal, alpha),
                None => state.avg_primal = Some(primal.scale(alpha)),
            }
            state.avg_weight += alpha;
            if let Some(avg) = &state.avg_primal {
                let avg_scaled = avg.scale(1.0 / state.avg_weight);
                state.best_lower_bound =
                    state.best_lower_bound.max(problem.lower_bound(&avg_scaled));
            }
        }
        let gap = state.best_objective - state.best_lower_bound;

        state.s.axpy(alpha, &eval.gradient, 1.0);
        let z = (self.set.project_model)(&state.s, self.lipschitz / self.set.sigma);
        let tau = self.sched.tau(k);
        state.x = &z * tau + &y * (1.0 - tau);

        if k == 0 {
            state.g_err = self.sched.alpha(0) * delta;
        }
        state.g_history.push(state.g_err);
        state.g_err = (1.0 - tau) * state.g_err + 3.0 * tau * delta;

        state.history.push(HistoryRow {
            k,
            wall_seconds: state.started.elapsed().as_secs_f64(),
            gap,
            value_estimate: eval.value,
            m_used: eval.m_used,
            pct_eigs: eval.m_used as f64 / eval.matrix_dim.max(1) as f64,
            delta_cert: eval.delta_cert,
            eig_gap: eval.eig_gap,
        });
        if record_iterates {
            state.iterates_y.push(y.clone());
        }
        state.y = y;
        state.z = z;
        state.k += 1;
        Ok(gap)
    }

    /// Iterates until the stopping rule fires or the budget is exhausted.
    pub fn solve(&self, problem: &dyn SmoothProblem, opts: &SolveOptions) -> Result<SolveResult> {
        let mut state = SolverState::new(self.set);
        let mut status = SolveStatus::BudgetExhausted;
        let mut initial_gap = f64::INFINITY;
        for _ in 0..opts.max_iter {
            let gap = self.step(&mut state, problem, opts.delta, opts.record_iterates)?;
            if state.k == 1 {
                initial_gap = gap;
            }
            let threshold = match opts.stop {
                StopRule::GapBelow(eps) => eps,
                StopRule::GapReduction(factor) => factor * initial_gap,
            };
            if gap <= threshold {
                status = SolveStatus::GapReached;
                break;
            }
        }
        let final_gap = state.best_objective - state.best_lower_bound;
        Ok(SolveResult {
            best_point: state.best_y.clone(),
            best_objective: state.best_objective,
            final_gap,
            iterations: state.k,
            status,
            history: state.history,
            g_history: state.g_history,
            iterates_y: state.iterates_y,
            lanczos_fallbacks: 0,
        })
    }
}

/// Euclidean ball of radius beta centered at the origin, with prox-function
/// ||x||^2 / 2 (sigma = 1).
pub fn ball_feasible_set(dimension: usize, beta: f64) -> FeasibleSet {
    ball_feasible_set_centered(dimension, beta, DVector::zeros(dimension))
}

/// Ball feasible set with the prox-function ||x - center||^2 / 2 recentered
/// at a feasible warm-start point (for restarted solves).
pub fn ball_feasible_set_centered(
    dimension: usize,
    beta: f64,
    center: DVector<f64>,
) -> FeasibleSet {
    assert!(beta > 0.0);
    assert!(center.norm() <= beta * (1.0 + 1e-12));
    let clip = move |mut v: DVector<f64>| {
        let nrm = v.norm();
        if nrm > beta {
            v *= beta / nrm;
        }
        v
    };
    let c1 = center.clone();
    let c2 = center.clone();
    let diameter = (beta + center.norm()).powi(2) / 2.0;
    FeasibleSet {
        dimension,
        prox_center: center.clone(),
        sigma: 1.0,
        diameter_bound: diameter,
        project_grad_step: Box::new(move |x, g, l| clip(x - g / l)),
        project_model: Box::new(move |s, ratio| clip(&c1 - s / ratio)),
        d_of: Box::new(move |x| 0.5 * (x - &c2).norm_squared()),
        contains: Box::new(move |x, tol| x.norm() <= beta + tol),
    }
}

/// Entrywise box [-rho, rho]^dimension with prox-function ||x||^2 / 2.
pub fn box_feasible_set(dimension: usize, rho: f64) -> FeasibleSet {
    assert!(rho > 0.0);
    let clamp = move |v: &DVector<f64>| v.map(|e| e.clamp(-rho, rho));
    FeasibleSet {
        dimension,
        prox_center: DVector::zeros(dimension),
        sigma: 1.0,
        diameter_bound: rho * rho * dimension as f64 / 2.0,
        project_grad_step: Box::new(move |x, g, l| clamp(&(x - g / l))),
        project_model: Box::new(move |s, ratio| clamp(&(-s / ratio))),
        d_of: Box::new(|x| 0.5 * x.norm_squared()),
        contains: Box::new(move |x, tol| x.iter().all(|&e| e.abs() <= rho + tol)),
    }
}
