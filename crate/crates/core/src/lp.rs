//! Dense bounded dual simplex in tableau form, with rows added after a solve
//! (warm start for cutting-plane loops).
//!
//! Problem: maximize `c^T x` subject to `lo_i <= a_i^T x <= hi_i` and box bounds
//! on `x`. Every row `i` gets a slack `s_i = a_i^T x` carrying the row bounds, so
//! the constraint matrix is `[A, -I]` and all variables are bounded. The
//! structural variables must have finite bounds, which makes the all-slack basis
//! dual feasible from the start.

use nalgebra::DMatrix;

use crate::error::{QinvError, Result};

const PIVOT_TOL: f64 = 1e-9;
const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-10;
/// Reduced costs of the wrong sign below this are tolerated after reinversion.
const FLIP_TOL: f64 = 1e-7;
const MAX_CONFIRMS: usize = 20;
const REINVERT_EVERY: usize = 150;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Status {
    Basic(usize),
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct DualSimplex {
    n: usize,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<Vec<f64>>,
    tab: Vec<Vec<f64>>,
    dj: Vec<f64>,
    basis: Vec<usize>,
    status: Vec<Status>,
    x: Vec<f64>,
    pivots: usize,
    since_reinvert: usize,
}

impl DualSimplex {
    /// `lower`/`upper` bound the structural variables and must be finite.
    pub fn new(cost: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = cost.len();
        if lower.len() != n || upper.len() != n {
            return Err(QinvError::InvalidArgument("bound vectors differ in length from cost".into()));
        }
        if lower.iter().chain(&upper).any(|b| !b.is_finite()) || lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(QinvError::InvalidArgument("structural bounds must be finite with lo <= hi".into()));
        }
        let mut status = Vec::with_capacity(n);
        let mut x = Vec::with_capacity(n);
        for j in 0..n {
            if cost[j] > 0.0 {
                status.push(Status::Upper);
                x.push(upper[j]);
            } else {
                status.push(Status::Lower);
                x.push(lower[j]);
            }
        }
        Ok(Self {
            n,
            dj: cost.clone(),
            cost,
            lower,
            upper,
            rows: Vec::new(),
            tab: Vec::new(),
            basis: Vec::new(),
            status,
            x,
            pivots: 0,
            since_reinvert: 0,
        })
    }

    pub fn num_structural(&self) -> usize {
        self.n
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> usize {
        self.pivots
    }

    fn ncols(&self) -> usize {
        self.n + self.rows.len()
    }

    /// Adds `lo <= a^T x <= hi` (`hi` may be infinite) and returns its row index.
    pub fn add_row(&mut self, a: Vec<f64>, lo: f64, hi: f64) -> Result<usize> {
        if a.len() != self.n {
            return Err(QinvError::DimensionMismatch {
                expected: self.n,
                found: a.len(),
            });
        }
        let slack = self.ncols();
        for row in &mut self.tab {
            row.push(0.0);
        }
        self.dj.push(0.0);
        self.cost.push(0.0);
        // s = a^T x with basic x substituted: T_new = -a + sum_i a_B(i) T_i
        let mut new = vec![0.0; slack + 1];
        for (j, &aj) in a.iter().enumerate() {
            new[j] = -aj;
        }
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n && a[b] != 0.0 {
                let f = a[b];
                for (t, v) in new.iter_mut().zip(&self.tab[i]) {
                    *t += f * v;
                }
            }
        }
        new[slack] = 1.0;
        let value: f64 = a.iter().zip(&self.x).map(|(p, q)| p * q).sum();
        self.tab.push(new);
        self.rows.push(a);
        self.lower.push(lo);
        self.upper.push(hi);
        let r = self.basis.len();
        self.basis.push(slack);
        self.status.push(Status::Basic(r));
        self.x.push(value);
        Ok(r)
    }

    /// Adds a structural column with coefficients `a` (one per row) and returns
    /// its index. The column enters nonbasic at the bound its reduced cost
    /// favours, which keeps the basis dual feasible.
    pub fn add_column(&mut self, a: &[f64], cost: f64, lo: f64, hi: f64) -> Result<usize> {
        let m = self.rows.len();
        if a.len() != m {
            return Err(QinvError::DimensionMismatch { expected: m, found: a.len() });
        }
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(QinvError::InvalidArgument("column bounds must be finite with lo <= hi".into()));
        }
        let j = self.n;
        // B^-1 = -T[:, slacks]
        let col: Vec<f64> = (0..m)
            .map(|i| -(0..m).map(|k| self.tab[i][j + k] * a[k]).sum::<f64>())
            .collect();
        let reduced = cost - self.basis.iter().zip(&col).map(|(&b, t)| self.cost[b] * t).sum::<f64>();
        let (status, value) = if reduced > 0.0 { (Status::Upper, hi) } else { (Status::Lower, lo) };
        for (i, row) in self.tab.iter_mut().enumerate() {
            row.insert(j, col[i]);
        }
        for (row, &v) in self.rows.iter_mut().zip(a) {
            row.push(v);
        }
        for b in self.basis.iter_mut() {
            if *b >= j {
                *b += 1;
            }
        }
        self.cost.insert(j, cost);
        self.lower.insert(j, lo);
        self.upper.insert(j, hi);
        self.dj.insert(j, reduced);
        self.status.insert(j, status);
        self.x.insert(j, value);
        self.n += 1;
        if value != 0.0 {
            for (i, &b) in self.basis.iter().enumerate() {
                self.x[b] -= col[i] * value;
            }
        }
        Ok(j)
    }

    /// Row duals `pi` with reduced costs `c_j - pi^T a_j`.
    pub fn duals(&self) -> Vec<f64> {
        self.dj[self.n..].to_vec()
    }

    pub fn objective(&self) -> f64 {
        self.cost[..self.n].iter().zip(&self.x).map(|(c, x)| c * x).sum()
    }

    pub fn solution(&self) -> &[f64] {
        &self.x[..self.n]
    }

    /// Value of row `i`'s slack, `a_i^T x`.
    pub fn row_activity(&self, i: usize) -> f64 {
        self.x[self.n + i]
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lower[j] {
            self.lower[j] - v
        } else if v > self.upper[j] {
            v - self.upper[j]
        } else {
            0.0
        }
    }

    fn choose_row(&self) -> Option<usize> {
        let mut best = None;
        let mut worst = PRIMAL_TOL;
        for (r, &b) in self.basis.iter().enumerate() {
            let inf = self.infeasibility(b);
            if inf > worst {
                worst = inf;
                best = Some(r);
            }
        }
        best
    }

    /// Harris two-pass ratio test on row `r`; `increase` tells whether the
    /// leaving basic variable has to grow.
    fn choose_column(&self, r: usize, increase: bool) -> Option<usize> {
        let row = &self.tab[r];
        let eligible = |j: usize| -> Option<f64> {
            let t = row[j];
            if t.abs() <= PIVOT_TOL {
                return None;
            }
            match self.status[j] {
                Status::Basic(_) => None,
                _ if self.lower[j] == self.upper[j] => None,
                Status::Lower if (t < 0.0) == increase => Some(t),
                Status::Upper if (t > 0.0) == increase => Some(t),
                _ => None,
            }
        };
        let mut bound = f64::INFINITY;
        for j in 0..row.len() {
            if let Some(t) = eligible(j) {
                bound = bound.min((self.dj[j].abs() + DUAL_TOL) / t.abs());
            }
        }
        if !bound.is_finite() {
            return None;
        }
        let mut best = None;
        let mut best_mag = 0.0;
        for j in 0..row.len() {
            if let Some(t) = eligible(j) {
                if self.dj[j].abs() / t.abs() <= bound && t.abs() > best_mag {
                    best_mag = t.abs();
                    best = Some(j);
                }
            }
        }
        best
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let leaving = self.basis[r];
        let target = if self.x[leaving] < self.lower[leaving] {
            self.lower[leaving]
        } else {
            self.upper[leaving]
        };
        // primal update: x_B = -T x_N, move x_q so that x_leaving hits target
        let tq = self.tab[r][q];
        let step = (target - self.x[leaving]) / -tq;
        for (i, &b) in self.basis.iter().enumerate() {
            self.x[b] -= self.tab[i][q] * step;
        }
        self.x[q] += step;
        self.x[leaving] = target;

        let inv = 1.0 / tq;
        for v in self.tab[r].iter_mut() {
            *v *= inv;
        }
        let prow = std::mem::take(&mut self.tab[r]);
        for (i, row) in self.tab.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[q];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&prow) {
                    *v -= f * p;
                }
                row[q] = 0.0;
            }
        }
        let f = self.dj[q];
        if f != 0.0 {
            for (v, p) in self.dj.iter_mut().zip(&prow) {
                *v -= f * p;
            }
            self.dj[q] = 0.0;
        }
        self.tab[r] = prow;
        self.status[leaving] = if target == self.lower[leaving] {
            Status::Lower
        } else {
            Status::Upper
        };
        self.status[q] = Status::Basic(r);
        self.basis[r] = q;
        self.pivots += 1;
        self.since_reinvert += 1;
    }

    /// Rebuilds `T = B^-1 [A, -I]`, the reduced costs and basic values from
    /// scratch.
    pub fn reinvert(&mut self) -> Result<()> {
        self.since_reinvert = 0;
        let m = self.rows.len();
        if m == 0 {
            return Ok(());
        }
        let ncols = self.ncols();
        let column = |j: usize, i: usize| -> f64 {
            if j < self.n {
                self.rows[i][j]
            } else if j - self.n == i {
                -1.0
            } else {
                0.0
            }
        };
        let b = DMatrix::from_fn(m, m, |i, k| column(self.basis[k], i));
        let full = DMatrix::from_fn(m, ncols, |i, j| column(j, i));
        let lu = b.lu();
        let t = lu
            .solve(&full)
            .ok_or_else(|| QinvError::Infeasible("singular basis during reinversion".into()))?;
        for (i, row) in self.tab.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = t[(i, j)];
            }
            row[self.basis[i]] = 1.0;
        }
        for j in 0..ncols {
            let mut d = self.cost[j];
            for (i, &bi) in self.basis.iter().enumerate() {
                d -= self.cost[bi] * self.tab[i][j];
            }
            self.dj[j] = if matches!(self.status[j], Status::Basic(_)) { 0.0 } else { d };
        }
        self.recompute_basics();
        Ok(())
    }

    fn recompute_basics(&mut self) {
        for i in 0..self.basis.len() {
            let mut v = 0.0;
            for (j, t) in self.tab[i].iter().enumerate() {
                if !matches!(self.status[j], Status::Basic(_)) && *t != 0.0 {
                    v -= t * self.x[j];
                }
            }
            self.x[self.basis[i]] = v;
        }
    }

    /// Flips nonbasic variables whose reduced cost drifted to the wrong sign.
    fn restore_dual_feasibility(&mut self) -> bool {
        let mut flipped = false;
        for j in 0..self.ncols() {
            let s = self.status[j];
            if matches!(s, Status::Basic(_)) || self.lower[j] == self.upper[j] {
                continue;
            }
            if s == Status::Lower && self.dj[j] > FLIP_TOL && self.upper[j].is_finite() {
                self.status[j] = Status::Upper;
                self.x[j] = self.upper[j];
                flipped = true;
            } else if s == Status::Upper && self.dj[j] < -FLIP_TOL {
                self.status[j] = Status::Lower;
                self.x[j] = self.lower[j];
                flipped = true;
            }
        }
        if flipped {
            self.recompute_basics();
        }
        flipped
    }

    pub fn solve(&mut self, max_pivots: usize) -> Result<LpStatus> {
        let start = self.pivots;
        let mut confirms = 0;
        loop {
            if self.since_reinvert >= REINVERT_EVERY {
                self.reinvert()?;
                self.restore_dual_feasibility();
            }
            let Some(r) = self.choose_row() else {
                // confirm on a fresh factorization before declaring optimality
                if self.since_reinvert == 0 {
                    return Ok(LpStatus::Optimal);
                }
                self.reinvert()?;
                self.restore_dual_feasibility();
                if self.choose_row().is_none() {
                    return Ok(LpStatus::Optimal);
                }
                confirms += 1;
                if confirms > MAX_CONFIRMS {
                    return Ok(LpStatus::IterationLimit);
                }
                continue;
            };
            if self.pivots - start >= max_pivots {
                return Ok(LpStatus::IterationLimit);
            }
            let leaving = self.basis[r];
            let increase = self.x[leaving] < self.lower[leaving];
            match self.choose_column(r, increase) {
                Some(q) => self.pivot(r, q),
                None => {
                    if self.since_reinvert > 0 {
                        self.reinvert()?;
                        self.restore_dual_feasibility();
                        continue;
                    }
                    return Err(QinvError::Infeasible(format!(
                        "row {r} cannot be made feasible (infeasibility {:e})",
                        self.infeasibility(leaving)
                    )));
                }
            }
        }
    }

    /// Longest feasible move along nonbasic `j` (in its allowed direction),
    /// measured as the max-norm change of the structural solution.
    fn primal_ray_length(&self, j: usize) -> f64 {
        let dir = match self.status[j] {
            Status::Lower => 1.0,
            Status::Upper => -1.0,
            Status::Basic(_) => return 0.0,
        };
        let mut t = self.upper[j] - self.lower[j];
        for (i, &b) in self.basis.iter().enumerate() {
            // dx_b = -T_ij * dir * t
            let rate = -self.tab[i][j] * dir;
            if rate > PIVOT_TOL && self.upper[b].is_finite() {
                t = t.min(((self.upper[b] - self.x[b]) / rate).max(0.0));
            } else if rate < -PIVOT_TOL {
                t = t.min(((self.x[b] - self.lower[b]) / -rate).max(0.0));
            }
        }
        if !t.is_finite() {
            return f64::INFINITY;
        }
        let mut change: f64 = if j < self.n { t } else { 0.0 };
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                change = change.max((self.tab[i][j] * t).abs());
            }
        }
        change
    }

    /// Whether some zero-reduced-cost nonbasic direction moves the optimal
    /// solution by more than `min_change`, i.e. another optimal vertex exists.
    pub fn has_alternative_optimum(&self, cost_tol: f64, min_change: f64) -> bool {
        (0..self.ncols()).any(|j| {
            !matches!(self.status[j], Status::Basic(_))
                && self.lower[j] != self.upper[j]
                && self.dj[j].abs() <= cost_tol
                && self.primal_ray_length(j) > min_change
        })
    }
}
