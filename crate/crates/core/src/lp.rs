//! Dense two-phase revised simplex.
//!
//! The core works on `maximize cᵀx subject to Ax = b, x >= 0`. The basis inverse
//! is kept explicitly and updated by elementary row operations, with a full
//! Gauss–Jordan refactorization at a fixed cadence. Pricing is Dantzig's rule
//! with lowest-index tie breaking; after a run of degenerate pivots the solver
//! switches to Bland's rule until progress resumes. The ratio test is Harris's
//! two-pass rule, which prefers large pivots among nearly tied rows.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("the linear program is infeasible (phase one residual {0:e})")]
    Infeasible(f64),
    #[error("the linear program is unbounded")]
    Unbounded,
    #[error("iteration limit of {0} reached")]
    IterationLimit(usize),
    #[error("basis matrix became singular")]
    Singular,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Clone, Debug)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    pub refactor_every: usize,
    /// Reduced costs below `optimality_tol · (1 + |c_j|)` count as nonpositive.
    pub optimality_tol: f64,
    /// Smallest admissible pivot, relative to the largest entry of the pivot column.
    pub pivot_tol: f64,
    /// Primal infeasibility tolerated by the ratio test.
    pub feasibility_tol: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_iterations: 200_000,
            refactor_every: 64,
            optimality_tol: 1e-13,
            pivot_tol: 1e-9,
            feasibility_tol: 1e-10,
            bland_after: 50,
        }
    }
}

/// `maximize cᵀx subject to Ax = b, x >= 0`, with `A` stored column by column.
#[derive(Clone, Debug)]
pub struct StandardForm {
    rows: usize,
    columns: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl StandardForm {
    pub fn new(b: Vec<f64>) -> Self {
        StandardForm {
            rows: b.len(),
            columns: Vec::new(),
            b,
            c: Vec::new(),
        }
    }

    /// Appends a variable with objective coefficient `cost` and constraint column `column`.
    pub fn push_column(&mut self, cost: f64, column: &[f64]) -> usize {
        assert_eq!(column.len(), self.rows, "column length must equal the row count");
        self.columns.extend_from_slice(column);
        self.c.push(cost);
        self.c.len() - 1
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.c.len()
    }

    fn column(&self, j: usize) -> &[f64] {
        &self.columns[j * self.rows..(j + 1) * self.rows]
    }

    pub fn solve(&self, options: &SimplexOptions) -> Result<StandardSolution, LpError> {
        Simplex::new(self, options).run()
    }

    /// Like [`solve`](Self::solve), starting from the basis `start` (one column
    /// per row) when it is nonsingular and primal feasible. Otherwise the
    /// usual artificial start is used.
    pub fn solve_from(&self, options: &SimplexOptions, start: &[usize]) -> Result<StandardSolution, LpError> {
        let mut simplex = Simplex::new(self, options);
        simplex.try_start(start);
        simplex.run()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StandardSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Simplex multipliers `y = c_Bᵀ B⁻¹`; at the optimum `Aᵀy >= c` and `bᵀy` equals the objective.
    pub duals: Vec<f64>,
    pub iterations: usize,
    /// Basic variable per row (indices past `cols()` are leftover artificials of redundant rows).
    pub basis: Vec<usize>,
}

struct Simplex<'a> {
    lp: &'a StandardForm,
    opts: &'a SimplexOptions,
    m: usize,
    n: usize,
    row_sign: Vec<f64>,
    b: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    iterations: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a StandardForm, opts: &'a SimplexOptions) -> Self {
        let m = lp.rows;
        let n = lp.cols();
        let row_sign: Vec<f64> = lp.b.iter().map(|v| if *v < 0.0 { -1.0 } else { 1.0 }).collect();
        let b: Vec<f64> = lp.b.iter().zip(&row_sign).map(|(v, s)| v * s).collect();
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        let mut is_basic = vec![false; n + m];
        for flag in is_basic.iter_mut().skip(n) {
            *flag = true;
        }
        Simplex {
            lp,
            opts,
            m,
            n,
            row_sign,
            xb: b.clone(),
            b,
            basis: (n..n + m).collect(),
            is_basic,
            binv,
            iterations: 0,
        }
    }

    fn try_start(&mut self, start: &[usize]) {
        let mut seen = vec![false; self.n];
        if start.len() != self.m
            || start
                .iter()
                .any(|&j| j >= self.n || std::mem::replace(&mut seen[j], true))
        {
            return;
        }
        let saved = (
            self.basis.clone(),
            self.is_basic.clone(),
            self.binv.clone(),
            self.xb.clone(),
        );
        for flag in self.is_basic.iter_mut() {
            *flag = false;
        }
        for &j in start {
            self.is_basic[j] = true;
        }
        self.basis = start.to_vec();
        let feasible = self.refactor().is_ok() && self.xb.iter().all(|v| *v >= -self.opts.feasibility_tol);
        if feasible {
            for v in self.xb.iter_mut() {
                *v = v.max(0.0);
            }
        } else {
            (self.basis, self.is_basic, self.binv, self.xb) = saved;
        }
    }

    /// Column `j` of the sign-normalized system; artificials are unit columns.
    fn column_into(&self, j: usize, out: &mut [f64]) {
        if j < self.n {
            for ((o, a), s) in out.iter_mut().zip(self.lp.column(j)).zip(&self.row_sign) {
                *o = a * s;
            }
        } else {
            out.fill(0.0);
            out[j - self.n] = 1.0;
        }
    }

    fn dot_column(&self, y: &[f64], j: usize) -> f64 {
        if j < self.n {
            self.lp
                .column(j)
                .iter()
                .zip(y)
                .zip(&self.row_sign)
                .map(|((a, y), s)| a * y * s)
                .sum()
        } else {
            y[j - self.n]
        }
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        // Gauss–Jordan on [B | I] with partial pivoting
        let mut work = vec![0.0; m * m];
        let mut col = vec![0.0; m];
        for (k, &j) in self.basis.iter().enumerate() {
            self.column_into(j, &mut col);
            for i in 0..m {
                work[i * m + k] = col[i];
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for k in 0..m {
            let p = (k..m)
                .max_by(|&a, &b| work[a * m + k].abs().partial_cmp(&work[b * m + k].abs()).unwrap())
                .unwrap();
            let pivot = work[p * m + k];
            if pivot.abs() < 1e-14 {
                return Err(LpError::Singular);
            }
            if p != k {
                for c in 0..m {
                    work.swap(p * m + c, k * m + c);
                    inv.swap(p * m + c, k * m + c);
                }
            }
            let scale = 1.0 / pivot;
            for c in 0..m {
                work[k * m + c] *= scale;
                inv[k * m + c] *= scale;
            }
            for i in 0..m {
                if i == k {
                    continue;
                }
                let f = work[i * m + k];
                if f == 0.0 {
                    continue;
                }
                for c in 0..m {
                    work[i * m + c] -= f * work[k * m + c];
                    inv[i * m + c] -= f * inv[k * m + c];
                }
            }
        }
        // rows of inv now correspond to basis positions
        self.binv = inv;
        for i in 0..m {
            self.xb[i] = (0..m).map(|c| self.binv[i * m + c] * self.b[c]).sum();
        }
        Ok(())
    }

    fn multipliers(&self, cost: &dyn Fn(usize) -> f64) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (k, &j) in self.basis.iter().enumerate() {
            let cb = cost(j);
            if cb != 0.0 {
                for i in 0..m {
                    y[i] += cb * self.binv[k * m + i];
                }
            }
        }
        y
    }

    fn pivot(&mut self, row: usize, entering: usize, alpha: &[f64]) {
        let m = self.m;
        let inv_p = 1.0 / alpha[row];
        for c in 0..m {
            self.binv[row * m + c] *= inv_p;
        }
        self.xb[row] *= inv_p;
        for i in 0..m {
            if i == row || alpha[i] == 0.0 {
                continue;
            }
            let f = alpha[i];
            for c in 0..m {
                self.binv[i * m + c] -= f * self.binv[row * m + c];
            }
            self.xb[i] -= f * self.xb[row];
            if self.xb[i] < 0.0 && self.xb[i] > -self.opts.feasibility_tol {
                self.xb[i] = 0.0;
            }
        }
        self.is_basic[self.basis[row]] = false;
        self.is_basic[entering] = true;
        self.basis[row] = entering;
    }

    fn iterate(&mut self, cost: &dyn Fn(usize) -> f64, candidates: usize) -> Result<Outcome, LpError> {
        let m = self.m;
        let mut degenerate_run = 0usize;
        let mut alpha = vec![0.0; m];
        let mut col = vec![0.0; m];
        let mut since_refactor = 0usize;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Err(LpError::IterationLimit(self.iterations));
            }
            if since_refactor >= self.opts.refactor_every {
                self.refactor()?;
                since_refactor = 0;
            }
            let y = self.multipliers(cost);
            let bland = degenerate_run >= self.opts.bland_after;
            let mut entering = None;
            let mut best = 0.0;
            for j in 0..candidates {
                if self.is_basic[j] {
                    continue;
                }
                let cj = cost(j);
                let d = cj - self.dot_column(&y, j);
                if d > self.opts.optimality_tol * (1.0 + cj.abs()) {
                    if bland {
                        entering = Some(j);
                        break;
                    }
                    if d > best {
                        best = d;
                        entering = Some(j);
                    }
                }
            }
            let Some(q) = entering else {
                return Ok(Outcome::Optimal);
            };
            self.column_into(q, &mut col);
            for i in 0..m {
                alpha[i] = (0..m).map(|c| self.binv[i * m + c] * col[c]).sum();
            }
            // Harris two-pass ratio test with a pivot threshold relative to the column
            let amax = alpha.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let tol = self.opts.pivot_tol * amax.max(1.0);
            let mut bound = f64::INFINITY;
            for i in 0..m {
                if alpha[i] > tol {
                    bound = bound.min((self.xb[i].max(0.0) + self.opts.feasibility_tol) / alpha[i]);
                }
            }
            let mut row: Option<usize> = None;
            if bound.is_finite() {
                for i in 0..m {
                    if alpha[i] <= tol || self.xb[i].max(0.0) / alpha[i] > bound {
                        continue;
                    }
                    let better = match row {
                        None => true,
                        Some(r) if bland => self.basis[i] < self.basis[r],
                        Some(r) => alpha[i] > alpha[r],
                    };
                    if better {
                        row = Some(i);
                    }
                }
            }
            let Some(r) = row else {
                return Ok(Outcome::Unbounded);
            };
            let step = self.xb[r].max(0.0) / alpha[r];
            if step <= 1e-15 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, q, &alpha);
            self.iterations += 1;
            since_refactor += 1;
        }
    }

    fn run(mut self) -> Result<StandardSolution, LpError> {
        let n = self.n;
        let m = self.m;
        if self.lp.columns.len() != n * m {
            return Err(LpError::Dimension("column storage".into()));
        }
        // phase one: maximize minus the sum of artificials
        let phase1 = |j: usize| if j >= n { -1.0 } else { 0.0 };
        match self.iterate(&phase1, n + m)? {
            Outcome::Optimal => {}
            Outcome::Unbounded => return Err(LpError::Unbounded),
        }
        self.refactor()?;
        let residual: f64 = self
            .basis
            .iter()
            .zip(&self.xb)
            .filter(|(j, _)| **j >= n)
            .map(|(_, v)| v.abs())
            .sum();
        let scale = 1.0 + self.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if residual > 1e-9 * scale {
            return Err(LpError::Infeasible(residual));
        }
        self.drive_out_artificials();
        let cost = |j: usize| if j < n { self.lp.c[j] } else { 0.0 };
        let costs: Vec<f64> = (0..n + m).map(cost).collect();
        let cost_fn = |j: usize| costs[j];
        match self.iterate(&cost_fn, n)? {
            Outcome::Optimal => {}
            Outcome::Unbounded => return Err(LpError::Unbounded),
        }
        self.refactor()?;
        let mut x = vec![0.0; n];
        for (k, &j) in self.basis.iter().enumerate() {
            if j < n {
                x[j] = self.xb[k].max(0.0);
            }
        }
        let y = self.multipliers(&cost_fn);
        let duals: Vec<f64> = y.iter().zip(&self.row_sign).map(|(v, s)| v * s).collect();
        let objective = x.iter().zip(&self.lp.c).map(|(a, b)| a * b).sum();
        Ok(StandardSolution {
            x,
            objective,
            duals,
            iterations: self.iterations,
            basis: self.basis,
        })
    }

    fn drive_out_artificials(&mut self) {
        let m = self.m;
        let mut col = vec![0.0; m];
        let mut alpha = vec![0.0; m];
        for r in 0..m {
            if self.basis[r] < self.n {
                continue;
            }
            let mut choice = None;
            let mut best = 1e-9;
            for j in 0..self.n {
                if self.is_basic[j] {
                    continue;
                }
                let v: f64 = {
                    self.column_into(j, &mut col);
                    (0..m).map(|c| self.binv[r * m + c] * col[c]).sum()
                };
                if v.abs() > best {
                    best = v.abs();
                    choice = Some(j);
                }
            }
            if let Some(j) = choice {
                self.column_into(j, &mut col);
                for i in 0..m {
                    alpha[i] = (0..m).map(|c| self.binv[i * m + c] * col[c]).sum();
                }
                self.pivot(r, j, &alpha);
                self.iterations += 1;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    NonNegative,
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// A small general-form linear program over dense rows.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    sense: Sense,
    objective: Vec<f64>,
    kinds: Vec<VarKind>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>, kinds: Vec<VarKind>) -> Self {
        assert_eq!(objective.len(), kinds.len());
        LinearProgram {
            sense,
            objective,
            kinds,
            rows: Vec::new(),
        }
    }

    pub fn constrain(&mut self, row: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        assert_eq!(row.len(), self.objective.len());
        self.rows.push((row, relation, rhs));
        self
    }

    pub fn solve(&self, options: &SimplexOptions) -> Result<LpSolution, LpError> {
        let nv = self.objective.len();
        let sign = match self.sense {
            Sense::Maximize => 1.0,
            Sense::Minimize => -1.0,
        };
        let mut sf = StandardForm::new(self.rows.iter().map(|r| r.2).collect());
        let m = self.rows.len();
        let mut map = Vec::with_capacity(nv);
        for v in 0..nv {
            let column: Vec<f64> = self.rows.iter().map(|r| r.0[v]).collect();
            let plus = sf.push_column(sign * self.objective[v], &column);
            let minus = match self.kinds[v] {
                VarKind::Free => {
                    let neg: Vec<f64> = column.iter().map(|a| -a).collect();
                    Some(sf.push_column(-sign * self.objective[v], &neg))
                }
                VarKind::NonNegative => None,
            };
            map.push((plus, minus));
        }
        for (i, (_, rel, _)) in self.rows.iter().enumerate() {
            let mut e = vec![0.0; m];
            match rel {
                Relation::Le => e[i] = 1.0,
                Relation::Ge => e[i] = -1.0,
                Relation::Eq => continue,
            }
            sf.push_column(0.0, &e);
        }
        let sol = sf.solve(options)?;
        let x: Vec<f64> = map
            .iter()
            .map(|(p, q)| sol.x[*p] - q.map(|q| sol.x[q]).unwrap_or(0.0))
            .collect();
        let objective = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
        Ok(LpSolution {
            x,
            objective,
            iterations: sol.iterations,
        })
    }
}
