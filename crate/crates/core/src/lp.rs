//! Dense two-phase primal simplex for the small, well-scaled programs this
//! crate generates (transportation oracles, sufficiency and deficiency LPs).
//! All variables are nonnegative; constraints are equalities or <= rows.

use crate::error::{invalid, Error, Result};

const EPS_PIVOT: f64 = 1e-11;
const EPS_RC: f64 = 1e-9;
const EPS_FEAS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Structural variable values; meaningful only when status is Optimal.
    pub x: Vec<f64>,
    pub objective: f64,
}

/// minimize c.x subject to eq rows a.x = b, le rows a.x <= b, x >= 0.
#[derive(Debug, Clone)]
pub struct Lp {
    n: usize,
    c: Vec<f64>,
    eq: Vec<(Vec<f64>, f64)>,
    le: Vec<(Vec<f64>, f64)>,
}

impl Lp {
    pub fn minimize(c: Vec<f64>) -> Lp {
        Lp { n: c.len(), c, eq: Vec::new(), le: Vec::new() }
    }

    pub fn eq(&mut self, a: Vec<f64>, b: f64) -> &mut Lp {
        assert_eq!(a.len(), self.n);
        self.eq.push((a, b));
        self
    }

    pub fn le(&mut self, a: Vec<f64>, b: f64) -> &mut Lp {
        assert_eq!(a.len(), self.n);
        self.le.push((a, b));
        self
    }

    pub fn solve(&self) -> Result<LpSolution> {
        if self.n == 0 {
            return Err(invalid("lp has no variables"));
        }
        Tableau::build(self).solve()
    }
}

struct Tableau {
    /// rows x cols; cols = structural + slacks + artificials + rhs.
    t: Vec<Vec<f64>>,
    rows: usize,
    n_struct: usize,
    n_total: usize,
    art_start: usize,
    basis: Vec<usize>,
    c: Vec<f64>,
}

impl Tableau {
    fn build(lp: &Lp) -> Tableau {
        let rows = lp.eq.len() + lp.le.len();
        let n_slack = lp.le.len();
        let art_start = lp.n + n_slack;
        let n_total = art_start + rows;
        let mut t = vec![vec![0.0; n_total + 1]; rows];
        let mut basis = vec![0usize; rows];
        let mut r = 0usize;
        for (a, b) in lp.eq.iter().chain(lp.le.iter()) {
            let le_slot = r.checked_sub(lp.eq.len());
            let sign = if *b < 0.0 { -1.0 } else { 1.0 };
            for (j, v) in a.iter().enumerate() {
                t[r][j] = sign * v;
            }
            if let Some(s) = le_slot {
                t[r][lp.n + s] = sign;
            }
            t[r][n_total] = sign * b;
            // A slack with +1 coefficient and nonnegative rhs can start
            // basic; otherwise the row gets an artificial.
            if le_slot.is_some() && sign > 0.0 {
                basis[r] = lp.n + le_slot.unwrap();
            } else {
                t[r][art_start + r] = 1.0;
                basis[r] = art_start + r;
            }
            r += 1;
        }
        let mut c = vec![0.0; n_total];
        c[..lp.n].copy_from_slice(&lp.c);
        Tableau { t, rows, n_struct: lp.n, n_total, art_start, basis, c }
    }

    fn solve(mut self) -> Result<LpSolution> {
        // Phase 1: minimize the sum of artificials.
        let phase1_cost: Vec<f64> = (0..self.n_total)
            .map(|j| if j >= self.art_start { 1.0 } else { 0.0 })
            .collect();
        let p1 = self.run(&phase1_cost, self.n_total)?;
        if p1 == RunOutcome::Unbounded {
            return Err(Error::Internal("phase-1 simplex reported unbounded".into()));
        }
        let p1_obj = self.objective_of(&phase1_cost);
        let scale = self
            .t
            .iter()
            .map(|row| row[self.n_total].abs())
            .fold(1.0f64, f64::max);
        if p1_obj > EPS_FEAS * scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; self.n_struct],
                objective: f64::NAN,
            });
        }
        self.evict_artificials();
        // Phase 2 over structural + slack columns only.
        let cost = self.c.clone();
        let outcome = self.run(&cost, self.art_start)?;
        if outcome == RunOutcome::Unbounded {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                x: vec![0.0; self.n_struct],
                objective: f64::NEG_INFINITY,
            });
        }
        let x = self.extract();
        let objective = x
            .iter()
            .zip(&self.c[..self.n_struct])
            .map(|(a, b)| a * b)
            .sum();
        Ok(LpSolution { status: LpStatus::Optimal, x, objective })
    }

    /// Reduced costs for `cost` given the current basis.
    fn reduced_costs(&self, cost: &[f64], limit: usize) -> Vec<f64> {
        let mut rc = cost[..limit].to_vec();
        for (r, &bj) in self.basis.iter().enumerate() {
            let cb = cost[bj];
            if cb != 0.0 {
                for (j, dst) in rc.iter_mut().enumerate() {
                    *dst -= cb * self.t[r][j];
                }
            }
        }
        rc
    }

    fn objective_of(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .map(|(r, &bj)| cost[bj] * self.t[r][self.n_total])
            .sum()
    }

    /// Primal simplex over columns `0..limit`. Dantzig rule with a permanent
    /// switch to Bland after a long degenerate streak.
    fn run(&mut self, cost: &[f64], limit: usize) -> Result<RunOutcome> {
        let cap = 2000 + 200 * (self.rows + limit);
        let mut bland = false;
        let mut stall = 0usize;
        let mut last_obj = self.objective_of(cost);
        for _ in 0..cap {
            let rc = self.reduced_costs(cost, limit);
            let enter = if bland {
                (0..limit).find(|&j| rc[j] < -EPS_RC)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for (j, &v) in rc.iter().enumerate() {
                    if v < -EPS_RC && best.map_or(true, |(_, bv)| v < bv) {
                        best = Some((j, v));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(enter) = enter else {
                return Ok(RunOutcome::Optimal);
            };
            // Ratio test; ties break toward the smallest basis index.
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.t[r][enter];
                if a > EPS_PIVOT {
                    let ratio = self.t[r][self.n_total] / a;
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-12
                                || (ratio < lratio + 1e-12 && self.basis[r] < self.basis[lr])
                            {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((leave, _)) = leave else {
                return Ok(RunOutcome::Unbounded);
            };
            self.pivot(leave, enter);
            let obj = self.objective_of(cost);
            if obj > last_obj - 1e-13 {
                stall += 1;
                if stall > 50 + self.rows {
                    bland = true;
                }
            } else {
                stall = 0;
            }
            last_obj = obj;
        }
        Err(Error::Internal(format!(
            "simplex exceeded {cap} iterations ({} rows, {limit} cols)",
            self.rows
        )))
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let piv = self.t[r][j];
        for v in self.t[r].iter_mut() {
            *v /= piv;
        }
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i][j];
            if f != 0.0 {
                for col in 0..=self.n_total {
                    let delta = f * self.t[r][col];
                    self.t[i][col] -= delta;
                }
            }
        }
        self.basis[r] = j;
    }

    /// Pivots leftover zero-level artificials out of the basis; a row with no
    /// eligible pivot is redundant and gets dropped.
    fn evict_artificials(&mut self) {
        let mut r = 0;
        while r < self.rows {
            if self.basis[r] >= self.art_start {
                let enter = (0..self.art_start).find(|&j| self.t[r][j].abs() > 1e-9);
                match enter {
                    Some(j) => self.pivot(r, j),
                    None => {
                        self.t.remove(r);
                        self.basis.remove(r);
                        self.rows -= 1;
                        continue;
                    }
                }
            }
            r += 1;
        }
        // Artificial columns must never re-enter.
        for row in self.t.iter_mut() {
            for j in self.art_start..self.n_total {
                row[j] = 0.0;
            }
        }
    }

    fn extract(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n_struct];
        for (r, &bj) in self.basis.iter().enumerate() {
            if bj < self.n_struct {
                x[bj] = self.t[r][self.n_total].max(0.0);
            }
        }
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RunOutcome {
    Optimal,
    Unbounded,
}

/// Exact solution of the transportation problem: minimize sum cost[i][j] q[i][j]
/// with row sums `r`, column sums `c`. `cost` is row-major `nr x nc`. The
/// marginals must have equal totals.
pub fn transportation(cost: &[f64], r: &[f64], c: &[f64]) -> Result<Vec<f64>> {
    let (nr, nc) = (r.len(), c.len());
    if cost.len() != nr * nc {
        return Err(invalid("transportation cost shape mismatch"));
    }
    let (sr, sc): (f64, f64) = (r.iter().sum(), c.iter().sum());
    if (sr - sc).abs() > 1e-9 {
        return Err(invalid(format!(
            "transportation marginals disagree: {sr} vs {sc}"
        )));
    }
    let mut lp = Lp::minimize(cost.to_vec());
    for (i, &ri) in r.iter().enumerate() {
        let mut a = vec![0.0; nr * nc];
        for j in 0..nc {
            a[i * nc + j] = 1.0;
        }
        lp.eq(a, ri);
    }
    for (j, &cj) in c.iter().enumerate() {
        let mut a = vec![0.0; nr * nc];
        for i in 0..nr {
            a[i * nc + j] = 1.0;
        }
        lp.eq(a, cj);
    }
    let sol = lp.solve()?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.x),
        s => Err(Error::Internal(format!(
            "transportation LP ended {s:?}; marginals were consistent"
        ))),
    }
}
