//! Revised primal simplex for `min c.x  s.t.  A x = b,  x >= 0`.
//!
//! Dense arithmetic with an explicit basis inverse that is refreshed from a
//! factorization every `refactor_interval` pivots.  Phase one starts from
//! an artificial basis; artificials still basic (at zero) after phase one
//! are barred from growing in phase two by pivoting them out with a zero
//! step as soon as the entering column touches their row.
//!
//! Pricing is Dantzig's most-negative reduced cost with a Harris ratio
//! test.  After `stall_limit` consecutive degenerate pivots the right-hand
//! side is perturbed so that later pivots make progress; once the phase
//! ends the perturbation is removed and a short dual simplex pass restores
//! exact feasibility.  Past the perturbation budget, stalls fall back to
//! random entering columns, which cannot cycle forever.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("constraint matrix has {rows} rows but right-hand side has {rhs}")]
    RhsMismatch { rows: usize, rhs: usize },

    #[error("constraint matrix has {cols} columns but {costs} costs were given")]
    CostMismatch { cols: usize, costs: usize },

    #[error("infeasible: phase one stalled with total infeasibility {infeasibility:e}")]
    Infeasible { infeasibility: f64 },

    #[error("unbounded along column {column}")]
    Unbounded { column: usize },

    #[error("iteration budget of {iterations} pivots exhausted")]
    IterationLimit { iterations: usize },

    #[error("basis became numerically singular")]
    SingularBasis,

    #[error("solution residual {residual:e} exceeds tolerance {tolerance:e}")]
    Inaccurate { residual: f64, tolerance: f64 },
}

/// Column access for the solver; lets structured problems avoid
/// materializing `A`.
pub trait Columns {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// Writes column `j` into `out` (length `rows`).
    fn column_into(&self, j: usize, out: &mut [f64]);
    /// `out[j] = a_j . y` for every column.
    fn dot_columns(&self, y: &[f64], out: &mut [f64]) {
        let mut col = vec![0.0; self.rows()];
        for (j, o) in out.iter_mut().enumerate() {
            self.column_into(j, &mut col);
            *o = dot(&col, y);
        }
    }
}

impl Columns for DMatrix<f64> {
    fn rows(&self) -> usize {
        self.nrows()
    }

    fn cols(&self) -> usize {
        self.ncols()
    }

    fn column_into(&self, j: usize, out: &mut [f64]) {
        out.copy_from_slice(self.column(j).as_slice());
    }

    fn dot_columns(&self, y: &[f64], out: &mut [f64]) {
        let m = self.nrows();
        for (o, col) in out.iter_mut().zip(self.as_slice().chunks_exact(m.max(1))) {
            *o = dot(col, y);
        }
    }
}

/// Reduced costs above `-NOISE_REDUCED_COST` on columns without a pivot
/// are treated as rounding noise.
const NOISE_REDUCED_COST: f64 = 1e-7;

/// Size of the anti-degeneracy lift, relative to the largest `|b_i|`.
const PERTURBATION: f64 = 1e-7;

/// Perturbation rounds per phase before plain pricing takes over.
const MAX_PERTURBATIONS: usize = 3;

/// A column without pivot and a reduced cost below this is an unbounded ray.
const UNBOUNDED_REDUCED_COST: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct SimplexOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    /// Required `||A x - b||_inf` of the returned point.
    pub residual_tol: f64,
    pub max_iterations: Option<usize>,
    pub refactor_interval: Option<usize>,
    pub stall_limit: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            pivot_tol: 1e-7,
            residual_tol: 1e-8,
            max_iterations: None,
            refactor_interval: None,
            stall_limit: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// `||A x - b||_inf`.
    pub residual: f64,
    pub iterations: usize,
}

/// Solves `min costs.x  s.t.  a x = b,  x >= 0` with default options.
pub fn lp_solve(a: &DMatrix<f64>, b: &[f64], costs: &[f64]) -> Result<LpSolution, LpError> {
    solve(a, b, costs, &SimplexOptions::default())
}

pub fn solve<C: Columns + ?Sized>(
    a: &C,
    b: &[f64],
    costs: &[f64],
    options: &SimplexOptions,
) -> Result<LpSolution, LpError> {
    if b.len() != a.rows() {
        return Err(LpError::RhsMismatch {
            rows: a.rows(),
            rhs: b.len(),
        });
    }
    if costs.len() != a.cols() {
        return Err(LpError::CostMismatch {
            cols: a.cols(),
            costs: costs.len(),
        });
    }
    if a.rows() == 0 {
        return Ok(LpSolution {
            x: vec![0.0; a.cols()],
            objective: 0.0,
            residual: 0.0,
            iterations: 0,
        });
    }
    let mut s = Simplex::new(a, b, costs, options);
    s.run()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

struct Simplex<'a, C: ?Sized> {
    a: &'a C,
    b: &'a [f64],
    costs: &'a [f64],
    opts: &'a SimplexOptions,
    m: usize,
    ncols: usize,
    /// Sign of artificial column `r`: `art_sign[r] * e_r`.
    art_sign: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    /// Row-major `m x m`.
    binv: Vec<f64>,
    xb: Vec<f64>,
    /// Right-hand side the basis currently solves for: `b`, or `b` plus a
    /// perturbation while one is active.
    rhs: Vec<f64>,
    perturbed: bool,
    iterations: usize,
    since_refactor: usize,
    scale: f64,
}

/// Dot product with independent partial sums so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 8];
    let chunks = n / 8;
    for (ca, cb) in a.chunks_exact(8).zip(b.chunks_exact(8)) {
        for k in 0..8 {
            acc[k] += ca[k] * cb[k];
        }
    }
    let mut tail = 0.0;
    for i in chunks * 8..n {
        tail += a[i] * b[i];
    }
    acc.iter().sum::<f64>() + tail
}

impl<'a, C: Columns + ?Sized> Simplex<'a, C> {
    fn new(a: &'a C, b: &'a [f64], costs: &'a [f64], opts: &'a SimplexOptions) -> Self {
        let m = a.rows();
        let ncols = a.cols();
        let art_sign: Vec<f64> = b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
        let mut binv = vec![0.0; m * m];
        for r in 0..m {
            binv[r * m + r] = art_sign[r];
        }
        let scale = b.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        Self {
            a,
            b,
            costs,
            opts,
            m,
            ncols,
            basis: (ncols..ncols + m).collect(),
            in_basis: vec![false; ncols],
            xb: b.iter().map(|v| v.abs()).collect(),
            rhs: b.to_vec(),
            perturbed: false,
            art_sign,
            binv,
            iterations: 0,
            since_refactor: 0,
            scale,
        }
    }

    fn is_artificial(&self, var: usize) -> bool {
        var >= self.ncols
    }

    fn column(&self, var: usize, out: &mut [f64]) {
        if self.is_artificial(var) {
            out.iter_mut().for_each(|x| *x = 0.0);
            let r = var - self.ncols;
            out[r] = self.art_sign[r];
        } else {
            self.a.column_into(var, out);
        }
    }

    fn cost(&self, var: usize, phase: Phase) -> f64 {
        match (phase, self.is_artificial(var)) {
            (Phase::One, true) => 1.0,
            (Phase::One, false) => 0.0,
            (Phase::Two, true) => 0.0,
            (Phase::Two, false) => self.costs[var],
        }
    }

    fn budget(&self) -> usize {
        self.opts
            .max_iterations
            .unwrap_or(50 * (self.m + self.ncols) + 1000)
    }

    fn refactor_interval(&self) -> usize {
        self.opts.refactor_interval.unwrap_or(self.m.max(64))
    }

    fn run(&mut self) -> Result<LpSolution, LpError> {
        for round in 0.. {
            self.iterate(Phase::One, round < MAX_PERTURBATIONS)?;
            if self.perturbed {
                self.unperturb(Phase::One)?;
            }
            if self.infeasibility() <= self.opts.feasibility_tol * self.scale || round >= MAX_PERTURBATIONS {
                break;
            }
        }
        let infeasibility = self.infeasibility();
        if infeasibility > self.opts.feasibility_tol * self.scale {
            return Err(LpError::Infeasible { infeasibility });
        }
        for round in 0.. {
            self.iterate(Phase::Two, round < MAX_PERTURBATIONS)?;
            if !self.perturbed {
                break;
            }
            // the cleanup leaves an optimal basis unless it had to move
            // along an improving edge; a further pass settles that
            self.unperturb(Phase::Two)?;
        }

        let mut x = self.primal();
        let mut residual = self.residual(&x);
        if residual > self.opts.residual_tol * self.scale && self.since_refactor > 0 {
            self.refactor()?;
            x = self.primal();
            residual = self.residual(&x);
        }
        if residual > self.opts.residual_tol * self.scale {
            return Err(LpError::Inaccurate {
                residual,
                tolerance: self.opts.residual_tol * self.scale,
            });
        }
        let objective = dot(&x, self.costs);
        Ok(LpSolution {
            x,
            objective,
            residual,
            iterations: self.iterations,
        })
    }

    fn infeasibility(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.xb)
            .filter(|(&v, _)| self.is_artificial(v))
            .map(|(_, x)| x)
            .sum()
    }

    fn primal(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.ncols];
        for (&var, &val) in self.basis.iter().zip(&self.xb) {
            if !self.is_artificial(var) {
                x[var] = val.max(0.0);
            }
        }
        x
    }

    fn residual(&self, x: &[f64]) -> f64 {
        let mut r: Vec<f64> = self.b.iter().map(|v| -v).collect();
        let mut col = vec![0.0; self.m];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                self.a.column_into(j, &mut col);
                r.iter_mut().zip(&col).for_each(|(ri, ci)| *ri += xj * ci);
            }
        }
        r.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    fn iterate(&mut self, phase: Phase, may_perturb: bool) -> Result<(), LpError> {
        let m = self.m;
        let mut y = vec![0.0; m];
        let mut dots = vec![0.0; self.ncols];
        let mut col = vec![0.0; m];
        let mut alpha = vec![0.0; m];
        let mut stalled = 0usize;
        let mut rejected = vec![false; self.ncols];
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);

        loop {
            if phase == Phase::One && self.infeasibility() <= self.opts.feasibility_tol * self.scale {
                return Ok(());
            }
            // duals y = B^-T c_B
            y.iter_mut().for_each(|v| *v = 0.0);
            for (i, &var) in self.basis.iter().enumerate() {
                let c = self.cost(var, phase);
                if c != 0.0 {
                    let row = &self.binv[i * m..(i + 1) * m];
                    y.iter_mut().zip(row).for_each(|(yk, bk)| *yk += c * bk);
                }
            }
            self.a.dot_columns(&y, &mut dots);

            if stalled >= self.opts.stall_limit && may_perturb && !self.perturbed {
                self.perturb(phase, &mut rng);
                stalled = 0;
            }
            let stalling = stalled >= self.opts.stall_limit;
            let mut entering: Option<(usize, f64)> = None;
            let mut improving = 0usize;
            for j in 0..self.ncols {
                if self.in_basis[j] || rejected[j] {
                    continue;
                }
                let d = self.cost(j, phase) - dots[j];
                if d < -self.opts.optimality_tol {
                    improving += 1;
                    let take = if stalling {
                        // reservoir sample: uniform over improving columns
                        rng.gen_range(0..improving) == 0
                    } else {
                        entering.map_or(true, |(_, best)| d < best)
                    };
                    if take {
                        entering = Some((j, d));
                    }
                }
            }
            let Some((q, _)) = entering else {
                if self.since_refactor > 0 {
                    // confirm optimality against a fresh inverse
                    self.refactor_clamped()?;
                    rejected.iter_mut().for_each(|r| *r = false);
                    continue;
                }
                return Ok(());
            };

            self.column(q, &mut col);
            for (i, a) in alpha.iter_mut().enumerate() {
                *a = dot(&self.binv[i * m..(i + 1) * m], &col);
            }

            let Some((r, theta)) = self.ratio_test(&alpha, phase) else {
                let d = entering.map_or(0.0, |e| e.1);
                if d <= -NOISE_REDUCED_COST && self.since_refactor > 0 {
                    // drift in the inverse can fake an unbounded ray
                    self.refactor_clamped()?;
                    continue;
                }
                if d <= -UNBOUNDED_REDUCED_COST {
                    return Err(LpError::Unbounded { column: q });
                }
                // no usable pivot on a column whose reduced cost is at
                // rounding level for this basis
                log::trace!("rejecting column {q} with reduced cost {d:e}");
                rejected[q] = true;
                continue;
            };
            rejected.iter_mut().for_each(|r| *r = false);

            for i in 0..m {
                if i != r {
                    let v = self.xb[i] - theta * alpha[i];
                    self.xb[i] = if v < 0.0 { 0.0 } else { v };
                }
            }
            self.xb[r] = theta;
            self.pivot(r, &alpha);

            let out = self.basis[r];
            if !self.is_artificial(out) {
                self.in_basis[out] = false;
            }
            self.basis[r] = q;
            self.in_basis[q] = true;

            // an artificial leaving at zero is progress of its own: it
            // never comes back
            if theta > 1e-12 {
                stalled = 0;
            } else if !self.is_artificial(out) {
                stalled += 1;
            }

            self.iterations += 1;
            if self.iterations >= self.budget() {
                return Err(LpError::IterationLimit {
                    iterations: self.iterations,
                });
            }
            self.since_refactor += 1;
            if self.since_refactor >= self.refactor_interval() {
                self.refactor_clamped()?;
            }
        }
    }

    /// Harris two-pass ratio test.  Returns the leaving row and step length.
    ///
    /// The first pass finds the largest step that keeps every basic
    /// variable above `-feasibility_tol`; the second picks, among rows whose
    /// exact ratio fits under that step, the largest pivot.
    fn ratio_test(&self, alpha: &[f64], phase: Phase) -> Option<(usize, f64)> {
        let tol = self.opts.pivot_tol;
        let delta = self.opts.feasibility_tol;
        // (row, exact ratio, pivot magnitude)
        let mut candidates: Vec<(usize, f64, f64)> = Vec::new();
        let mut bound = f64::INFINITY;
        for (i, &a) in alpha.iter().enumerate() {
            let art = self.is_artificial(self.basis[i]);
            if phase == Phase::Two && art {
                // artificials stuck at zero may not move in either direction
                if a.abs() > tol {
                    candidates.push((i, 0.0, a.abs()));
                    bound = bound.min(delta / a.abs());
                }
            } else if a > tol {
                candidates.push((i, self.xb[i] / a, a));
                bound = bound.min((self.xb[i] + delta) / a);
            }
        }
        candidates
            .into_iter()
            .filter(|c| c.1 <= bound)
            .max_by(|a, b| a.2.total_cmp(&b.2))
            .map(|(i, ratio, _)| (i, ratio.max(0.0)))
    }

    fn pivot(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let inv = 1.0 / alpha[r];
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (prow, after) = rest.split_at_mut(m);
        prow.iter_mut().for_each(|v| *v *= inv);
        for (i, row) in before.chunks_exact_mut(m).enumerate() {
            let f = alpha[i];
            if f != 0.0 {
                row.iter_mut().zip(prow.iter()).for_each(|(x, p)| *x -= f * p);
            }
        }
        for (k, row) in after.chunks_exact_mut(m).enumerate() {
            let f = alpha[r + 1 + k];
            if f != 0.0 {
                row.iter_mut().zip(prow.iter()).for_each(|(x, p)| *x -= f * p);
            }
        }
    }

    /// Lifts the basic variables by small random amounts and moves the
    /// right-hand side to match, so later pivots are not degenerate.
    /// Phase two leaves artificials at zero.
    fn perturb(&mut self, phase: Phase, rng: &mut ChaCha8Rng) {
        let m = self.m;
        let size = PERTURBATION * self.scale;
        for i in 0..m {
            if phase == Phase::One || !self.is_artificial(self.basis[i]) {
                self.xb[i] += size * (1.0 + rng.gen::<f64>());
            }
        }
        let mut rhs = vec![0.0; m];
        let mut col = vec![0.0; m];
        for i in 0..m {
            self.column(self.basis[i], &mut col);
            rhs.iter_mut().zip(&col).for_each(|(r, c)| *r += self.xb[i] * c);
        }
        self.rhs = rhs;
        self.perturbed = true;
        log::trace!("perturbed right-hand side after {} pivots", self.iterations);
    }

    /// Restores the true right-hand side.  Duals do not depend on it, so a
    /// dual-feasible basis stays dual feasible and a few dual pivots bring
    /// back primal feasibility.
    fn unperturb(&mut self, phase: Phase) -> Result<(), LpError> {
        self.rhs.copy_from_slice(self.b);
        self.perturbed = false;
        self.refactor()?;
        self.dual_cleanup(phase)
    }

    /// Dual simplex until every basic variable is non-negative and, in
    /// phase two, every basic artificial is zero.
    fn dual_cleanup(&mut self, phase: Phase) -> Result<(), LpError> {
        let m = self.m;
        let tol = self.opts.feasibility_tol * self.scale;
        let mut y = vec![0.0; m];
        let mut dots = vec![0.0; self.ncols];
        let mut row_dots = vec![0.0; self.ncols];
        let mut col = vec![0.0; m];
        let mut alpha = vec![0.0; m];
        loop {
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let v = self.xb[i];
                let violation = if phase == Phase::Two && self.is_artificial(self.basis[i]) {
                    v.abs()
                } else {
                    -v
                };
                if violation > leave.map_or(tol, |l| l.1) {
                    leave = Some((i, violation));
                }
            }
            let Some((r, _)) = leave else {
                for v in self.xb.iter_mut() {
                    *v = v.max(0.0);
                }
                return Ok(());
            };
            // a negative value must grow, a positive artificial must shrink
            let grow = self.xb[r] < 0.0;

            y.iter_mut().for_each(|v| *v = 0.0);
            for (i, &var) in self.basis.iter().enumerate() {
                let c = self.cost(var, phase);
                if c != 0.0 {
                    let row = &self.binv[i * m..(i + 1) * m];
                    y.iter_mut().zip(row).for_each(|(yk, bk)| *yk += c * bk);
                }
            }
            self.a.dot_columns(&y, &mut dots);
            self.a.dot_columns(&self.binv[r * m..(r + 1) * m], &mut row_dots);

            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..self.ncols {
                if self.in_basis[j] {
                    continue;
                }
                let s = if grow { -row_dots[j] } else { row_dots[j] };
                if s <= self.opts.pivot_tol {
                    continue;
                }
                let ratio = (self.cost(j, phase) - dots[j]).max(0.0) / s;
                let better = match entering {
                    None => true,
                    Some((_, best, best_s)) => ratio < best || (ratio == best && s > best_s),
                };
                if better {
                    entering = Some((j, ratio, s));
                }
            }
            let Some((q, _, _)) = entering else {
                return Err(LpError::Infeasible {
                    infeasibility: self.xb[r].abs(),
                });
            };

            self.column(q, &mut col);
            for (i, a) in alpha.iter_mut().enumerate() {
                *a = dot(&self.binv[i * m..(i + 1) * m], &col);
            }
            if alpha[r].abs() <= self.opts.pivot_tol {
                self.refactor()?;
                continue;
            }
            let theta = self.xb[r] / alpha[r];
            for i in 0..m {
                if i != r {
                    self.xb[i] -= theta * alpha[i];
                }
            }
            self.xb[r] = theta;
            self.pivot(r, &alpha);
            let out = self.basis[r];
            if !self.is_artificial(out) {
                self.in_basis[out] = false;
            }
            self.basis[r] = q;
            self.in_basis[q] = true;

            self.iterations += 1;
            if self.iterations >= self.budget() {
                return Err(LpError::IterationLimit {
                    iterations: self.iterations,
                });
            }
            self.since_refactor += 1;
            if self.since_refactor >= self.refactor_interval() {
                self.refactor()?;
            }
        }
    }

    fn refactor_clamped(&mut self) -> Result<(), LpError> {
        self.refactor()?;
        for v in self.xb.iter_mut() {
            *v = v.max(0.0);
        }
        Ok(())
    }

    /// Rebuilds `B^-1` from scratch.
    ///
    /// Artificial slots are signed unit columns, so only the `k` structural
    /// slots need a dense solve: on the `k` rows not covered by an
    /// artificial, `C_N z = rhs_N`, and each artificial slot then takes the
    /// remainder of its own row.  Cost is `O(m k^2 + k^3)` plus filling the
    /// inverse.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut row_covered = vec![false; m];
        let mut structural = Vec::new();
        for (slot, &var) in self.basis.iter().enumerate() {
            if self.is_artificial(var) {
                row_covered[var - self.ncols] = true;
            } else {
                structural.push(slot);
            }
        }
        let free_rows: Vec<usize> = (0..m).filter(|&r| !row_covered[r]).collect();
        let k = structural.len();
        if free_rows.len() != k {
            return Err(LpError::SingularBasis);
        }

        let mut cmat = DMatrix::<f64>::zeros(m, k);
        let mut col = vec![0.0; m];
        for (c, &slot) in structural.iter().enumerate() {
            self.a.column_into(self.basis[slot], &mut col);
            cmat.column_mut(c).copy_from_slice(&col);
        }
        let cn = DMatrix::from_fn(k, k, |i, j| cmat[(free_rows[i], j)]);
        let cn_inv = if k == 0 {
            cn
        } else {
            cn.lu().try_inverse().ok_or(LpError::SingularBasis)?
        };
        let w = &cmat * &cn_inv;

        self.binv.iter_mut().for_each(|v| *v = 0.0);
        for (c, &slot) in structural.iter().enumerate() {
            let row = &mut self.binv[slot * m..(slot + 1) * m];
            for (j, &r) in free_rows.iter().enumerate() {
                row[r] = cn_inv[(c, j)];
            }
        }
        for (slot, &var) in self.basis.iter().enumerate() {
            if !self.is_artificial(var) {
                continue;
            }
            let r = var - self.ncols;
            let sign = self.art_sign[r];
            let row = &mut self.binv[slot * m..(slot + 1) * m];
            row[r] = sign;
            for (j, &fr) in free_rows.iter().enumerate() {
                row[fr] = -sign * w[(r, j)];
            }
        }

        for i in 0..m {
            self.xb[i] = dot(&self.binv[i * m..(i + 1) * m], &self.rhs);
        }
        self.since_refactor = 0;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_variable() {
        let a = DMatrix::from_row_slice(1, 1, &[1.0]);
        let s = lp_solve(&a, &[1.0], &[1.0]).unwrap();
        assert_abs_diff_eq!(s.x[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.objective, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn picks_negated_column() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let s = lp_solve(&a, &[-1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(s.x, vec![0.0, 1.0]);
        assert_abs_diff_eq!(s.objective, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn textbook_problem() {
        // min -x1 - 2x2  s.t.  x1 + x2 + s1 = 4, x1 + 3x2 + s2 = 6
        let a = DMatrix::from_row_slice(2, 4, &[1.0, 1.0, 1.0, 0.0, 1.0, 3.0, 0.0, 1.0]);
        let s = lp_solve(&a, &[4.0, 6.0], &[-1.0, -2.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(s.objective, -5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.x[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.x[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn detects_infeasibility() {
        // x1 + x2 = 1 and x1 + x2 = 2
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            lp_solve(&a, &[1.0, 2.0], &[1.0, 1.0]),
            Err(LpError::Infeasible { .. })
        ));
        // x >= 0 cannot reach a negative target
        let a = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(matches!(lp_solve(&a, &[-1.0], &[1.0]), Err(LpError::Infeasible { .. })));
    }

    #[test]
    fn detects_unboundedness() {
        // min -x1  s.t.  x1 - x2 = 0
        let a = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        assert!(matches!(lp_solve(&a, &[0.0], &[-1.0, 0.0]), Err(LpError::Unbounded { .. })));
    }

    #[test]
    fn redundant_rows_are_fine() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 2.0, 2.0, 2.0, 4.0]);
        let s = lp_solve(&a, &[2.0, 4.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(s.objective, 1.0, epsilon = 1e-12);
        assert!(s.residual <= 1e-12);
    }

    #[test]
    fn dimension_errors() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        assert!(matches!(lp_solve(&a, &[1.0, 2.0], &[1.0, 1.0]), Err(LpError::RhsMismatch { .. })));
        assert!(matches!(lp_solve(&a, &[1.0], &[1.0]), Err(LpError::CostMismatch { .. })));
    }

    #[test]
    fn beale_cycling_example_terminates() {
        // Beale's classic problem that cycles under naive Dantzig pricing.
        #[rustfmt::skip]
        let a = DMatrix::from_row_slice(3, 7, &[
            0.25, -60.0, -0.04, 9.0, 1.0, 0.0, 0.0,
            0.5, -90.0, -0.02, 3.0, 0.0, 1.0, 0.0,
            0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0,
        ]);
        let c = [-0.75, 150.0, -0.02, 6.0, 0.0, 0.0, 0.0];
        let opts = SimplexOptions {
            stall_limit: 2,
            ..Default::default()
        };
        let s = solve(&a, &[0.0, 0.0, 1.0], &c, &opts).unwrap();
        assert_abs_diff_eq!(s.objective, -0.05, epsilon = 1e-12);
    }

    /// Minimum over every basic feasible solution.
    fn vertex_enumeration(a: &DMatrix<f64>, b: &[f64], c: &[f64]) -> Option<f64> {
        let (m, k) = a.shape();
        let mut best: Option<f64> = None;
        let mut subset: Vec<usize> = (0..m).collect();
        loop {
            let basis = DMatrix::from_fn(m, m, |i, j| a[(i, subset[j])]);
            if basis.determinant().abs() > 1e-10 {
                let x = basis.lu().solve(&nalgebra::DVector::from_column_slice(b)).unwrap();
                if x.iter().all(|&v| v >= -1e-12) {
                    let obj: f64 = subset.iter().zip(x.iter()).map(|(&j, v)| c[j] * v).sum();
                    best = Some(best.map_or(obj, |b: f64| b.min(obj)));
                }
            }
            // next m-subset of 0..k in lexicographic order
            let Some(i) = (0..m).rev().find(|&i| subset[i] < k - m + i) else {
                return best;
            };
            subset[i] += 1;
            for j in i + 1..m {
                subset[j] = subset[j - 1] + 1;
            }
        }
    }

    fn random_instance(seed: u64, degenerate: bool) -> (DMatrix<f64>, Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.gen_range(1..=5);
        let k = rng.gen_range(m + 1..=m + 5);
        let a = DMatrix::from_fn(m, k, |_, _| rng.gen_range(-1.0..1.0));
        // b in the cone of a few columns keeps the problem feasible
        let support = if degenerate { 1 } else { m };
        let mut x0 = vec![0.0; k];
        for _ in 0..support {
            x0[rng.gen_range(0..k)] = rng.gen_range(0.1..2.0);
        }
        let b = (&a * nalgebra::DVector::from_vec(x0)).as_slice().to_vec();
        let c = (0..k).map(|_| rng.gen_range(0.5..2.0)).collect();
        (a, b, c)
    }

    #[test]
    fn matches_vertex_enumeration() {
        for seed in 0..10 {
            let (a, b, c) = random_instance(seed, false);
            let expected = vertex_enumeration(&a, &b, &c).unwrap();
            let s = lp_solve(&a, &b, &c).unwrap();
            assert_abs_diff_eq!(s.objective, expected, epsilon = 1e-9);
            assert!(s.residual <= 1e-9);
        }
    }

    #[test]
    fn heavily_degenerate_problem() {
        // b lies on a single column, so most pivots are degenerate and a
        // stall limit of one sends every solve down the perturbation path
        let opts = SimplexOptions {
            stall_limit: 1,
            ..Default::default()
        };
        for seed in 0..20 {
            let (a, b, c) = random_instance(100 + seed, true);
            let expected = vertex_enumeration(&a, &b, &c).unwrap();
            let s = solve(&a, &b, &c, &opts).unwrap();
            assert_abs_diff_eq!(s.objective, expected, epsilon = 1e-9);
            assert!(s.residual <= 1e-9);
        }
    }

    proptest::proptest! {
        #[test]
        fn agrees_with_vertex_enumeration(seed in 0u64..10_000, degenerate: bool) {
            let (a, b, c) = random_instance(seed, degenerate);
            let expected = vertex_enumeration(&a, &b, &c).unwrap();
            let s = lp_solve(&a, &b, &c).unwrap();
            proptest::prop_assert!((s.objective - expected).abs() <= 1e-9 * expected.max(1.0));
            proptest::prop_assert!(s.x.iter().all(|&v| v >= 0.0));
        }
    }
}
