//! Entropic balanced and unbalanced optimal transport.
//!
//! The unbalanced problem minimises
//!
//! ```text
//! Σ C_ij T_ij + ε H(T) + λ1 KL(T1, a) + λ2 KL(Tᵀ1, b)
//! H(T)    = Σ T_ij (log T_ij - 1)
//! KL(x,y) = Σ x_i log(x_i / y_i) - x_i + y_i
//! ```
//!
//! over nonnegative `T`. Both solvers run generalised Sinkhorn scaling with
//! exponents `λ/(λ+ε)` (1 for the balanced case) and absorb large scalings into
//! dual potentials, so the kernel never overflows. Kernel rows that underflow
//! completely fall back to a log-sum-exp evaluation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UotError {
    #[error("non-finite dual potential after {0} iterations")]
    Numerical(usize),
    #[error("total masses differ: {0} vs {1}")]
    MassMismatch(f64, f64),
    #[error("brute force handles at most 4 cells, got {0}x{1}")]
    TooLarge(usize, usize),
    #[error("cost matrix is {got:?}, masses need {want:?}")]
    ShapeMismatch { got: (usize, usize), want: (usize, usize) },
    #[error("invalid input: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UotConfig {
    pub epsilon: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub max_iters: usize,
    /// Stop once no plan marginal moves by more than this between iterations.
    pub tol: f64,
    pub absorb_threshold: f64,
}

impl Default for UotConfig {
    fn default() -> Self {
        UotConfig {
            epsilon: 0.1,
            lambda1: 0.1,
            lambda2: 0.1,
            max_iters: 1000,
            tol: 1e-9,
            absorb_threshold: 1e10,
        }
    }
}

impl UotConfig {
    pub fn validate(&self) -> Result<(), UotError> {
        let pos = |x: f64| x.is_finite() && x > 0.0;
        if !pos(self.epsilon) || !pos(self.lambda1) || !pos(self.lambda2) {
            return Err(UotError::Invalid("epsilon and lambdas must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(UotError::Invalid("max_iters must be at least 1".into()));
        }
        if !(self.tol > 0.0) || !(self.absorb_threshold > 1.0) {
            return Err(UotError::Invalid("tol must be positive and absorb_threshold > 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub plan: Matrix,
    pub converged: bool,
    pub iterations: usize,
    pub objective: f64,
}

impl TransportPlan {
    pub fn total_mass(&self) -> f64 {
        self.plan.sum()
    }
}

fn xlogx_minus_x(x: f64) -> f64 {
    if x > 0.0 {
        x * (x.ln() - 1.0)
    } else {
        0.0
    }
}

fn kl(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let head = if xi > 0.0 { xi * (xi / yi).ln() } else { 0.0 };
            head - xi + yi
        })
        .sum()
}

/// Transport cost plus entropy, without marginal penalties.
fn entropic_cost(t: &Matrix, c: &Matrix, epsilon: f64) -> f64 {
    t.as_slice()
        .iter()
        .zip(c.as_slice())
        .map(|(&tij, &cij)| cij * tij + epsilon * xlogx_minus_x(tij))
        .sum()
}

/// Exact value of the unbalanced objective at `t`.
pub fn objective(t: &Matrix, a: &[f64], b: &[f64], c: &Matrix, cfg: &UotConfig) -> f64 {
    entropic_cost(t, c, cfg.epsilon)
        + cfg.lambda1 * kl(&t.row_sums(), a)
        + cfg.lambda2 * kl(&t.col_sums(), b)
}

fn check_inputs(a: &[f64], b: &[f64], c: &Matrix) -> Result<(), UotError> {
    if c.shape() != (a.len(), b.len()) {
        return Err(UotError::ShapeMismatch {
            got: c.shape(),
            want: (a.len(), b.len()),
        });
    }
    if a.iter().chain(b).any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(UotError::Invalid("masses must be finite and strictly positive".into()));
    }
    if c.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(UotError::Invalid("cost matrix must be finite".into()));
    }
    Ok(())
}

/// Marginal relaxation of one side. `None` means a hard constraint.
#[derive(Clone, Copy)]
struct Side {
    exponent: f64,
    damping: f64,
}

impl Side {
    fn new(lambda: Option<f64>, epsilon: f64) -> Self {
        match lambda {
            Some(l) => Side {
                exponent: l / (l + epsilon),
                damping: 1.0 / (l + epsilon),
            },
            None => Side {
                exponent: 1.0,
                damping: 0.0,
            },
        }
    }
}

struct Sinkhorn<'a> {
    a: &'a [f64],
    b: &'a [f64],
    c: &'a Matrix,
    eps: f64,
    rows: Side,
    cols: Side,
    log_absorb: f64,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    log_u: Vec<f64>,
    log_v: Vec<f64>,
    kernel: Matrix,
}

impl<'a> Sinkhorn<'a> {
    fn new(a: &'a [f64], b: &'a [f64], c: &'a Matrix, eps: f64, rows: Side, cols: Side, absorb: f64) -> Self {
        let (n, m) = c.shape();
        let mut s = Sinkhorn {
            a,
            b,
            c,
            eps,
            rows,
            cols,
            log_absorb: absorb.ln(),
            alpha: vec![0.0; n],
            beta: vec![0.0; m],
            log_u: vec![0.0; n],
            log_v: vec![0.0; m],
            kernel: Matrix::zeros(n, m),
        };
        s.rebuild_kernel();
        s
    }

    fn log_kernel(&self, i: usize, j: usize) -> f64 {
        (self.alpha[i] + self.beta[j] - self.c.get(i, j)) / self.eps
    }

    fn rebuild_kernel(&mut self) {
        let (n, m) = self.c.shape();
        self.kernel = Matrix::from_fn(n, m, |i, j| self.log_kernel(i, j).exp());
    }

    /// `log Σ_j K̃_ij v_j`, or its column counterpart when `transpose` is set.
    fn log_apply(&self, idx: usize, transpose: bool) -> f64 {
        let (n, m) = self.c.shape();
        let len = if transpose { n } else { m };
        let mut direct = 0.0;
        for k in 0..len {
            let (i, j, lw) = if transpose {
                (k, idx, self.log_u[k])
            } else {
                (idx, k, self.log_v[k])
            };
            direct += self.kernel.get(i, j) * lw.exp();
        }
        if direct.is_normal() {
            return direct.ln();
        }
        // Underflow (or overflow): evaluate in the log domain.
        let terms: Vec<f64> = (0..len)
            .map(|k| {
                if transpose {
                    self.log_kernel(k, idx) + self.log_u[k]
                } else {
                    self.log_kernel(idx, k) + self.log_v[k]
                }
            })
            .collect();
        let mx = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !mx.is_finite() {
            return mx;
        }
        mx + terms.iter().map(|t| (t - mx).exp()).sum::<f64>().ln()
    }

    fn absorb(&mut self) {
        for (al, lu) in self.alpha.iter_mut().zip(self.log_u.iter_mut()) {
            *al += self.eps * *lu;
            *lu = 0.0;
        }
        for (be, lv) in self.beta.iter_mut().zip(self.log_v.iter_mut()) {
            *be += self.eps * *lv;
            *lv = 0.0;
        }
        self.rebuild_kernel();
    }

    fn update_rows(&mut self) {
        for i in 0..self.a.len() {
            let lk = self.log_apply(i, false);
            self.log_u[i] = self.rows.exponent * (self.a[i].ln() - lk) - self.rows.damping * self.alpha[i];
        }
        if self.log_u.iter().any(|&x| x > self.log_absorb) {
            self.absorb();
        }
    }

    fn update_cols(&mut self) {
        for j in 0..self.b.len() {
            let lk = self.log_apply(j, true);
            self.log_v[j] = self.cols.exponent * (self.b[j].ln() - lk) - self.cols.damping * self.beta[j];
        }
        if self.log_v.iter().any(|&x| x > self.log_absorb) {
            self.absorb();
        }
    }

    fn finite(&self) -> bool {
        self.alpha
            .iter()
            .chain(&self.beta)
            .chain(&self.log_u)
            .chain(&self.log_v)
            .all(|x| x.is_finite())
    }

    fn plan(&self) -> Matrix {
        let (n, m) = self.c.shape();
        Matrix::from_fn(n, m, |i, j| (self.log_u[i] + self.log_v[j] + self.log_kernel(i, j)).exp())
    }

    fn run(mut self, max_iters: usize, tol: f64) -> Result<(Matrix, bool, usize), UotError> {
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
        for it in 1..=max_iters {
            self.update_rows();
            self.update_cols();
            if !self.finite() {
                return Err(UotError::Numerical(it));
            }
            let t = self.plan();
            let (r, c) = (t.row_sums(), t.col_sums());
            if let Some((pr, pc)) = &prev {
                let change = r
                    .iter()
                    .zip(pr)
                    .chain(c.iter().zip(pc))
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max);
                if change < tol {
                    return Ok((t, true, it));
                }
            }
            prev = Some((r, c));
        }
        Ok((self.plan(), false, max_iters))
    }
}

/// Entropic unbalanced transport between `a` (rows) and `b` (columns).
///
/// Non-convergence within `max_iters` is reported through
/// [`TransportPlan::converged`], not as an error.
pub fn solve_uot(a: &[f64], b: &[f64], c: &Matrix, cfg: &UotConfig) -> Result<TransportPlan, UotError> {
    cfg.validate()?;
    if a.is_empty() || b.is_empty() {
        if c.shape() != (a.len(), b.len()) {
            return Err(UotError::ShapeMismatch {
                got: c.shape(),
                want: (a.len(), b.len()),
            });
        }
        let plan = Matrix::zeros(a.len(), b.len());
        let objective = objective(&plan, a, b, c, cfg);
        return Ok(TransportPlan {
            plan,
            converged: true,
            iterations: 0,
            objective,
        });
    }
    check_inputs(a, b, c)?;
    let engine = Sinkhorn::new(
        a,
        b,
        c,
        cfg.epsilon,
        Side::new(Some(cfg.lambda1), cfg.epsilon),
        Side::new(Some(cfg.lambda2), cfg.epsilon),
        cfg.absorb_threshold,
    );
    let (plan, converged, iterations) = engine.run(cfg.max_iters, cfg.tol)?;
    let objective = objective(&plan, a, b, c, cfg);
    Ok(TransportPlan {
        plan,
        converged,
        iterations,
        objective,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BotConfig {
    pub epsilon: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub absorb_threshold: f64,
}

impl BotConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        BotConfig {
            epsilon,
            max_iters: 10_000,
            tol: 1e-10,
            absorb_threshold: 1e10,
        }
    }
}

/// Entropic balanced transport. The returned objective is `Σ C T + ε H(T)`.
pub fn solve_bot(a: &[f64], b: &[f64], c: &Matrix, cfg: &BotConfig) -> Result<TransportPlan, UotError> {
    check_inputs(a, b, c)?;
    if a.is_empty() || b.is_empty() {
        return Err(UotError::Invalid("balanced transport needs mass on both sides".into()));
    }
    if !(cfg.epsilon > 0.0) || cfg.max_iters == 0 {
        return Err(UotError::Invalid("epsilon must be positive and max_iters at least 1".into()));
    }
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if (sa - sb).abs() > 1e-9 {
        return Err(UotError::MassMismatch(sa, sb));
    }
    let hard = Side::new(None, cfg.epsilon);
    let engine = Sinkhorn::new(a, b, c, cfg.epsilon, hard, hard, cfg.absorb_threshold);
    let (plan, converged, iterations) = engine.run(cfg.max_iters, cfg.tol)?;
    let objective = entropic_cost(&plan, c, cfg.epsilon);
    Ok(TransportPlan {
        plan,
        converged,
        iterations,
        objective,
    })
}

/// Dense grid search followed by coordinate-wise golden-section refinement.
///
/// A test oracle for tiny instances (at most four cells). The objective is convex,
/// so coordinate descent from the best grid point reaches the global minimum. The
/// grid spans `[0, 1.5·max(Σa, Σb)]` per cell; refinement widens each coordinate's
/// bracket as needed, since sub-unit masses can have optimal cells above that range.
pub fn brute_force_uot(
    a: &[f64],
    b: &[f64],
    c: &Matrix,
    cfg: &UotConfig,
    grid_steps: usize,
) -> Result<TransportPlan, UotError> {
    let (n, m) = (a.len(), b.len());
    if n * m > 4 {
        return Err(UotError::TooLarge(n, m));
    }
    if c.shape() != (n, m) {
        return Err(UotError::ShapeMismatch {
            got: c.shape(),
            want: (n, m),
        });
    }
    let cells = n * m;
    let f = |x: &[f64]| objective(&Matrix::from_fn(n, m, |i, j| x[i * m + j]), a, b, c, cfg);
    if cells == 0 {
        let x: Vec<f64> = Vec::new();
        return Ok(TransportPlan {
            plan: Matrix::zeros(n, m),
            converged: true,
            iterations: 0,
            objective: f(&x),
        });
    }

    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    let upper = 1.5 * sa.max(sb);
    let steps = grid_steps.max(2);
    let grid: Vec<f64> = (0..steps).map(|k| upper * k as f64 / (steps - 1) as f64).collect();

    let mut best = vec![0.0; cells];
    let mut best_val = f(&best);
    let mut idx = vec![0usize; cells];
    let mut x = vec![0.0; cells];
    'grid: loop {
        for (xi, &k) in x.iter_mut().zip(&idx) {
            *xi = grid[k];
        }
        let val = f(&x);
        if val < best_val {
            best_val = val;
            best.copy_from_slice(&x);
        }
        for d in 0..cells {
            idx[d] += 1;
            if idx[d] < steps {
                continue 'grid;
            }
            idx[d] = 0;
        }
        break;
    }

    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut moved = 0.0f64;
        for d in 0..cells {
            let start = best[d];
            let mut eval = |t: f64| {
                let saved = best[d];
                best[d] = t;
                let v = f(&best);
                best[d] = saved;
                v
            };
            let mut hi = upper.max(2.0 * start).max(1e-6);
            while eval(hi) < eval(hi / 2.0) && hi < 1e12 {
                hi *= 2.0;
            }
            let t = golden_section(&mut eval, 0.0, hi, 1e-14);
            let val = eval(t);
            if val <= best_val {
                best_val = val;
                best[d] = t;
                moved = moved.max((t - start).abs());
            }
        }
        if moved < 1e-13 || sweeps >= 20_000 {
            break;
        }
    }
    Ok(TransportPlan {
        plan: Matrix::from_fn(n, m, |i, j| best[i * m + j]),
        converged: true,
        iterations: sweeps,
        objective: best_val,
    })
}

fn golden_section(f: &mut impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol * (1.0 + hi.abs()) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    // The minimiser may sit on the boundary at zero.
    if f(0.0) <= f(mid) {
        0.0
    } else {
        mid
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn closed_form(a: f64, b: f64, c: f64, cfg: &UotConfig) -> f64 {
        let s = cfg.epsilon + cfg.lambda1 + cfg.lambda2;
        a.powf(cfg.lambda1 / s) * b.powf(cfg.lambda2 / s) * (-c / s).exp()
    }

    #[test]
    fn one_by_one_zero_cost() {
        for (eps, lam) in [(0.1, 0.1), (0.5, 0.05), (0.05, 1.0)] {
            let cfg = UotConfig { epsilon: eps, lambda1: lam, lambda2: lam, ..Default::default() };
            let t = solve_uot(&[1.0], &[1.0], &Matrix::from_rows(&[vec![0.0]]), &cfg).unwrap();
            assert_relative_eq!(t.plan.get(0, 0), 1.0, epsilon = 1e-9);
            assert!(t.converged);
        }
    }

    #[test]
    fn one_by_one_with_cost() {
        let cfg = UotConfig::default();
        let t = solve_uot(&[1.0], &[1.0], &Matrix::from_rows(&[vec![0.7]]), &cfg).unwrap();
        assert_relative_eq!(t.plan.get(0, 0), (-0.7f64 / 0.3).exp(), max_relative = 1e-8);
        assert_relative_eq!(t.plan.get(0, 0), closed_form(1.0, 1.0, 0.7, &cfg), max_relative = 1e-8);
    }

    #[test]
    fn empty_side() {
        let cfg = UotConfig::default();
        let t = solve_uot(&[], &[0.5, 0.25], &Matrix::zeros(0, 2), &cfg).unwrap();
        assert_eq!(t.plan.shape(), (0, 2));
        assert_relative_eq!(t.objective, 0.1 * 0.75);
        let t = solve_uot(&[2.0], &[], &Matrix::zeros(1, 0), &cfg).unwrap();
        assert_relative_eq!(t.objective, 0.2);
    }

    #[test]
    fn objective_reference_points() {
        let cfg = UotConfig { epsilon: 0.3, lambda1: 0.2, lambda2: 0.7, ..Default::default() };
        let a = [0.4, 1.1];
        let b = [0.9, 0.6];
        let c = Matrix::from_rows(&[vec![0.5, 1.0], vec![2.0, 0.1]]);
        assert_relative_eq!(objective(&Matrix::zeros(2, 2), &a, &b, &c, &cfg), 0.2 * 1.5 + 0.7 * 1.5);
        // A plan whose marginals equal a and b, with zero cost: only entropy remains.
        let t = Matrix::from_rows(&[vec![0.25, 0.15], vec![0.65, 0.45]]);
        let expected: f64 = t.as_slice().iter().map(|x| 0.3 * x * (x.ln() - 1.0)).sum();
        assert_relative_eq!(objective(&t, &a, &b, &Matrix::zeros(2, 2), &cfg), expected, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = UotConfig::default();
        let c = Matrix::zeros(1, 1);
        assert!(matches!(solve_uot(&[0.0], &[1.0], &c, &cfg), Err(UotError::Invalid(_))));
        assert!(matches!(solve_uot(&[1.0, 1.0], &[1.0], &c, &cfg), Err(UotError::ShapeMismatch { .. })));
        let bad = UotConfig { epsilon: 0.0, ..cfg };
        assert!(solve_uot(&[1.0], &[1.0], &c, &bad).is_err());
        assert!(matches!(
            brute_force_uot(&[1.0; 3], &[1.0; 2], &Matrix::zeros(3, 2), &cfg, 3),
            Err(UotError::TooLarge(3, 2))
        ));
    }

    #[test]
    fn bot_examples() {
        let cfg = BotConfig::with_epsilon(0.1);
        let t = solve_bot(&[0.5, 0.5], &[0.5, 0.5], &Matrix::zeros(2, 2), &cfg).unwrap();
        for x in t.plan.as_slice() {
            assert_relative_eq!(*x, 0.25, epsilon = 1e-12);
        }
        let t = solve_bot(&[1.0], &[1.0], &Matrix::from_rows(&[vec![3.0]]), &cfg).unwrap();
        assert_relative_eq!(t.plan.get(0, 0), 1.0, epsilon = 1e-12);
        let c = Matrix::from_rows(&[vec![0.0, 10.0], vec![10.0, 0.0]]);
        let t = solve_bot(&[0.5, 0.5], &[0.5, 0.5], &c, &BotConfig::with_epsilon(0.05)).unwrap();
        assert_relative_eq!(t.plan.get(0, 0), 0.5, epsilon = 1e-6);
        assert!(t.plan.get(0, 1) < 1e-6);
        assert!(matches!(
            solve_bot(&[1.0], &[0.5], &Matrix::zeros(1, 1), &cfg),
            Err(UotError::MassMismatch(..))
        ));
    }

    #[test]
    fn bot_diagonal_matches_feasible_family() {
        // Feasible 2x2 plans with uniform marginals are [[x, .5-x], [.5-x, x]], x in [0, .5].
        // Minimising the entropic objective over that one-parameter family is the oracle.
        let eps = 0.05;
        let c = Matrix::from_rows(&[vec![0.0, 10.0], vec![10.0, 0.0]]);
        let family = |x: f64| {
            let t = Matrix::from_rows(&[vec![x, 0.5 - x], vec![0.5 - x, x]]);
            entropic_cost(&t, &c, eps)
        };
        let best = (0..=50_000)
            .map(|k| 0.5 * k as f64 / 50_000.0)
            .min_by(|p, q| family(*p).total_cmp(&family(*q)))
            .unwrap();
        let t = solve_bot(&[0.5, 0.5], &[0.5, 0.5], &c, &BotConfig::with_epsilon(eps)).unwrap();
        assert!((t.plan.get(0, 0) - best).abs() < 1e-4);
    }

    #[test]
    fn oracle_reproduces_closed_form() {
        for (a, b, c) in [(1.0, 1.0, 0.0), (0.3, 0.8, 0.4), (0.1, 0.1, 0.0), (2.0, 0.5, 1.5)] {
            let cfg = UotConfig::default();
            let o = brute_force_uot(&[a], &[b], &Matrix::from_rows(&[vec![c]]), &cfg, 41).unwrap();
            assert!((o.plan.get(0, 0) - closed_form(a, b, c, &cfg)).abs() < 1e-4, "{a} {b} {c}");
        }
    }

    #[test]
    fn oracle_prefers_free_column() {
        let cfg = UotConfig::default();
        let c = Matrix::from_rows(&[vec![0.0, 50.0], vec![0.0, 50.0]]);
        let o = brute_force_uot(&[0.5, 0.5], &[0.6, 0.6], &c, &cfg, 11).unwrap();
        let cols = o.plan.col_sums();
        assert!(cols[1] < 1e-6 * cols[0]);
    }

    #[test]
    fn absorption_threshold_is_invisible() {
        let a = [0.3, 1.2, 0.7];
        let b = [0.9, 0.4];
        let c = Matrix::from_rows(&[vec![0.0, 50.0], vec![20.0, 3.0], vec![45.0, 0.5]]);
        for eps in [0.1, 0.01] {
            let base = UotConfig { epsilon: eps, max_iters: 20_000, ..Default::default() };
            let lo = solve_uot(&a, &b, &c, &UotConfig { absorb_threshold: 1e6, ..base }).unwrap();
            let hi = solve_uot(&a, &b, &c, &base).unwrap();
            assert!(lo.plan.max_abs_diff(&hi.plan) < 1e-8);
        }
    }

    #[test]
    fn extreme_costs_stay_finite() {
        let cfg = UotConfig { epsilon: 0.001, ..Default::default() };
        let c = Matrix::from_rows(&[vec![40.0, 900.0], vec![800.0, 60.0]]);
        let t = solve_uot(&[1.0, 2.0], &[1.5, 0.5], &c, &cfg).unwrap();
        assert!(t.plan.as_slice().iter().all(|x| x.is_finite() && *x >= 0.0));
        assert!(t.objective.is_finite());
    }

    fn instance(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Matrix)> {
        (1..=max, 1..=max).prop_flat_map(|(n, m)| {
            (
                prop::collection::vec(0.1f64..1.0, n),
                prop::collection::vec(0.1f64..1.0, m),
                prop::collection::vec(0.0f64..2.0, n * m),
            )
                .prop_map(move |(a, b, c)| {
                    let m_ = b.len();
                    let c = Matrix::from_fn(a.len(), m_, |i, j| c[i * m_ + j]);
                    (a, b, c)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn transpose_symmetry((a, b, c) in instance(4)) {
            let cfg = UotConfig::default();
            let t1 = solve_uot(&a, &b, &c, &cfg).unwrap();
            let t2 = solve_uot(&b, &a, &c.transpose(), &cfg).unwrap();
            prop_assert!(t1.plan.max_abs_diff(&t2.plan.transpose()) < 1e-7);
        }

        #[test]
        fn large_lambda_recovers_balanced_marginals((a, b, c) in instance(3)) {
            let sa: f64 = a.iter().sum();
            let sb: f64 = b.iter().sum();
            let b: Vec<f64> = b.iter().map(|x| x * sa / sb).collect();
            // Residual marginal error grows like C/λ; costs are kept in [0, 0.5].
            let c = Matrix::from_fn(c.rows(), c.cols(), |i, j| c.get(i, j) / 4.0);
            let cfg = UotConfig { epsilon: 0.01, lambda1: 100.0, lambda2: 100.0, max_iters: 200_000, ..Default::default() };
            let t = solve_uot(&a, &b, &c, &cfg).unwrap();
            for (x, y) in t.plan.row_sums().iter().zip(&a) { prop_assert!((x - y).abs() < 1e-2); }
            for (x, y) in t.plan.col_sums().iter().zip(&b) { prop_assert!((x - y).abs() < 1e-2); }
        }

        #[test]
        fn plans_are_nonnegative_and_finite((a, b, c) in instance(5)) {
            let t = solve_uot(&a, &b, &c, &UotConfig::default()).unwrap();
            prop_assert!(t.plan.as_slice().iter().all(|x| x.is_finite() && *x >= 0.0));
            prop_assert!(t.objective.is_finite());
            prop_assert!(t.converged);
        }
    }
}
