//! Bounded-variable primal revised simplex.
//!
//! Every row gets a logical variable `r_i = a_i·x` whose bounds encode the row
//! sense, so the working system is `[A  -I] (x, r) = 0` with all variables
//! boxed. Phase 1 minimises the sum of bound violations of basic variables,
//! phase 2 the scaled objective. Pricing is Dantzig on the scaled problem with
//! Bland's rule after a run of non-improving pivots. The ratio test is the
//! two-pass Harris test.

use crate::lu::BasisFactor;
use crate::scaling::Scaling;
use crate::{LinearProgram, LpError, LpSolution, LpStatus, RowSense, SolverOptions};

const PIVOT_TOL: f64 = 1e-9;
const MAX_SINGULAR_REPAIRS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Free nonbasic variable resting at zero.
    Zero,
}

struct Simplex<'a> {
    opts: &'a SolverOptions,
    m: usize,
    n: usize,
    a_start: Vec<usize>,
    a_row: Vec<usize>,
    a_val: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    head: Vec<usize>,
    factor: BasisFactor,
    // scratch
    work_m: Vec<f64>,
    work_m2: Vec<f64>,
    alpha: Vec<f64>,
    duals: Vec<f64>,
    phase_cost: Vec<f64>,
    iterations: usize,
}

enum Step {
    Optimal,
    Infeasible,
    Unbounded,
    Continue,
}

pub(crate) fn solve(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let scaling = if opts.scaling {
        Scaling::equilibrate(lp)
    } else {
        Scaling::identity(lp)
    };
    let mut sx = Simplex::new(lp, &scaling, opts);
    let status = sx.run()?;
    let n = lp.num_vars();
    let m = lp.num_rows();

    let mut x: Vec<f64> = (0..n).map(|j| sx.x[j] * scaling.col[j]).collect();
    // Nonbasic variables sit exactly on their original bounds.
    for j in 0..n {
        match sx.state[j] {
            VarState::AtLower => x[j] = lp.lower()[j],
            VarState::AtUpper => x[j] = lp.upper()[j],
            _ => {}
        }
    }
    sx.compute_duals(false);
    let row_duals: Vec<f64> = (0..m)
        .map(|i| sx.duals[i] * scaling.row[i] / scaling.obj)
        .collect();
    let objective_value = lp.objective_value(&x);
    Ok(LpSolution {
        status,
        objective_value: if status == LpStatus::Optimal {
            objective_value
        } else {
            f64::NAN
        },
        x,
        row_duals,
        iterations: sx.iterations,
    })
}

impl<'a> Simplex<'a> {
    fn new(lp: &LinearProgram, sc: &Scaling, opts: &'a SolverOptions) -> Self {
        let n = lp.num_vars();
        let m = lp.num_rows();
        // Compressed columns of the scaled matrix.
        let mut counts = vec![0usize; n + 1];
        for &(_, j, _) in lp.triplets() {
            counts[j + 1] += 1;
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let a_start = counts.clone();
        let mut fill = counts;
        let nnz = lp.num_nonzeros();
        let mut a_row = vec![0; nnz];
        let mut a_val = vec![0.0; nnz];
        for &(i, j, v) in lp.triplets() {
            let k = fill[j];
            a_row[k] = i;
            a_val[k] = v * sc.row[i] * sc.col[j];
            fill[j] += 1;
        }
        // Merge duplicate entries inside each column.
        let (a_start, a_row, a_val) = merge_duplicates(n, &a_start, &a_row, &a_val);

        let nt = n + m;
        let mut lo = vec![0.0; nt];
        let mut hi = vec![0.0; nt];
        let mut cost = vec![0.0; nt];
        for j in 0..n {
            lo[j] = lp.lower()[j] / sc.col[j];
            hi[j] = lp.upper()[j] / sc.col[j];
            cost[j] = lp.objective()[j] * sc.col[j] * sc.obj;
        }
        for i in 0..m {
            let b = lp.rhs()[i] * sc.row[i];
            let (l, h) = match lp.senses()[i] {
                RowSense::Le => (f64::NEG_INFINITY, b),
                RowSense::Ge => (b, f64::INFINITY),
                RowSense::Eq => (b, b),
            };
            lo[n + i] = l;
            hi[n + i] = h;
        }

        let mut x = vec![0.0; nt];
        let mut state = vec![VarState::Zero; nt];
        for j in 0..n {
            state[j] = initial_state(lo[j], hi[j]);
            x[j] = match state[j] {
                VarState::AtLower => lo[j],
                VarState::AtUpper => hi[j],
                _ => 0.0,
            };
        }
        let mut head = Vec::with_capacity(m);
        for i in 0..m {
            state[n + i] = VarState::Basic(i);
            head.push(n + i);
        }

        Simplex {
            opts,
            m,
            n,
            a_start,
            a_row,
            a_val,
            lo,
            hi,
            cost,
            x,
            state,
            head,
            factor: BasisFactor::default(),
            work_m: vec![0.0; m],
            work_m2: vec![0.0; m],
            alpha: vec![0.0; m],
            duals: vec![0.0; m],
            phase_cost: vec![0.0; m],
            iterations: 0,
        }
    }

    fn scatter_column(&self, var: usize, out: &mut [f64]) {
        if var < self.n {
            for k in self.a_start[var]..self.a_start[var + 1] {
                out[self.a_row[k]] += self.a_val[k];
            }
        } else {
            out[var - self.n] -= 1.0;
        }
    }

    fn dot_column(&self, var: usize, y: &[f64]) -> f64 {
        if var < self.n {
            let mut s = 0.0;
            for k in self.a_start[var]..self.a_start[var + 1] {
                s += self.a_val[k] * y[self.a_row[k]];
            }
            s
        } else {
            -y[var - self.n]
        }
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        for _ in 0..MAX_SINGULAR_REPAIRS {
            let cols: Vec<Vec<(usize, f64)>> = self
                .head
                .iter()
                .map(|&v| {
                    if v < self.n {
                        (self.a_start[v]..self.a_start[v + 1])
                            .map(|k| (self.a_row[k], self.a_val[k]))
                            .collect()
                    } else {
                        vec![(v - self.n, -1.0)]
                    }
                })
                .collect();
            match BasisFactor::factorize(self.m, &cols) {
                Ok(f) => {
                    self.factor = f;
                    self.recompute_basics();
                    return Ok(());
                }
                Err(sing) => {
                    // Swap the unpivoted positions for logicals of unpivoted rows.
                    for (&pos, &row) in sing.positions.iter().zip(&sing.rows) {
                        let out = self.head[pos];
                        let logical = self.n + row;
                        if matches!(self.state[logical], VarState::Basic(_)) {
                            continue;
                        }
                        self.state[out] = initial_state(self.lo[out], self.hi[out]);
                        self.x[out] = self.nonbasic_value(out);
                        self.head[pos] = logical;
                        self.state[logical] = VarState::Basic(pos);
                    }
                }
            }
        }
        Err(LpError::Numerical(
            "basis remained singular after repairs".into(),
        ))
    }

    fn nonbasic_value(&self, var: usize) -> f64 {
        match self.state[var] {
            VarState::AtLower => self.lo[var],
            VarState::AtUpper => self.hi[var],
            _ => 0.0,
        }
    }

    fn recompute_basics(&mut self) {
        let mut rhs = std::mem::take(&mut self.work_m);
        rhs.iter_mut().for_each(|v| *v = 0.0);
        for var in 0..self.n + self.m {
            if matches!(self.state[var], VarState::Basic(_)) {
                continue;
            }
            let xv = self.x[var];
            if xv == 0.0 {
                continue;
            }
            if var < self.n {
                for k in self.a_start[var]..self.a_start[var + 1] {
                    rhs[self.a_row[k]] -= self.a_val[k] * xv;
                }
            } else {
                rhs[var - self.n] += xv;
            }
        }
        let mut xb = std::mem::take(&mut self.work_m2);
        self.factor.ftran(&mut rhs, &mut xb);
        for (pos, &var) in self.head.iter().enumerate() {
            self.x[var] = xb[pos];
        }
        self.work_m = rhs;
        self.work_m2 = xb;
    }

    /// Sets phase-1 costs on basic variables; returns the total infeasibility.
    fn phase_one_costs(&mut self) -> f64 {
        let tol = self.opts.feasibility_tol;
        let mut total = 0.0;
        for (pos, &var) in self.head.iter().enumerate() {
            let v = self.x[var];
            self.phase_cost[pos] = if v < self.lo[var] - tol {
                total += self.lo[var] - v;
                -1.0
            } else if v > self.hi[var] + tol {
                total += v - self.hi[var];
                1.0
            } else {
                0.0
            };
        }
        total
    }

    fn compute_duals(&mut self, phase_one: bool) {
        let mut d = std::mem::take(&mut self.work_m);
        for (pos, &var) in self.head.iter().enumerate() {
            d[pos] = if phase_one {
                self.phase_cost[pos]
            } else {
                self.cost[var]
            };
        }
        let mut y = std::mem::take(&mut self.duals);
        self.factor.btran(&mut d, &mut y);
        self.duals = y;
        self.work_m = d;
    }

    fn reduced_cost(&self, var: usize, phase_one: bool) -> f64 {
        let c = if phase_one { 0.0 } else { self.cost[var] };
        c - self.dot_column(var, &self.duals)
    }

    /// Chooses the entering variable and its direction (+1 up, -1 down).
    fn price(&self, phase_one: bool, bland: bool) -> Option<(usize, f64, f64)> {
        let tol = self.opts.optimality_tol;
        let mut best: Option<(usize, f64, f64)> = None;
        for var in 0..self.n + self.m {
            let st = self.state[var];
            if matches!(st, VarState::Basic(_)) || self.lo[var] == self.hi[var] {
                continue;
            }
            let d = self.reduced_cost(var, phase_one);
            let dir = match st {
                VarState::AtLower if d < -tol => 1.0,
                VarState::AtUpper if d > tol => -1.0,
                VarState::Zero if d < -tol => 1.0,
                VarState::Zero if d > tol => -1.0,
                _ => continue,
            };
            if bland {
                return Some((var, dir, d));
            }
            if best.map_or(true, |b| d.abs() > b.2.abs()) {
                best = Some((var, dir, d));
            }
        }
        best
    }

    fn run(&mut self) -> Result<LpStatus, LpError> {
        self.refactor()?;
        let max_iter = self
            .opts
            .max_iterations
            .unwrap_or(20 * (self.n + self.m) + 10_000);
        let mut stall = 0usize;
        loop {
            if self.factor.num_etas() >= self.opts.refactor_interval
                || self.factor.eta_nonzeros() > 2 * self.factor.factor_nonzeros() + 10 * self.m
            {
                self.refactor()?;
            }
            if self.iterations >= max_iter {
                return Err(LpError::IterationLimit {
                    iterations: self.iterations,
                });
            }
            let bland = stall >= self.opts.bland_after;
            match self.iterate(bland, &mut stall)? {
                Step::Continue => {}
                Step::Optimal => {
                    // Confirm on a fresh factorisation before declaring optimality.
                    if self.factor.num_etas() > 0 {
                        self.refactor()?;
                        continue;
                    }
                    return Ok(LpStatus::Optimal);
                }
                Step::Infeasible => {
                    if self.factor.num_etas() > 0 {
                        self.refactor()?;
                        continue;
                    }
                    return Ok(LpStatus::Infeasible);
                }
                Step::Unbounded => return Ok(LpStatus::Unbounded),
            }
        }
    }

    fn iterate(&mut self, bland: bool, stall: &mut usize) -> Result<Step, LpError> {
        let infeas = self.phase_one_costs();
        let phase_one = infeas > 0.0;
        self.compute_duals(phase_one);
        let Some((q, dir, dq)) = self.price(phase_one, bland) else {
            return Ok(if phase_one {
                Step::Infeasible
            } else {
                Step::Optimal
            });
        };

        // alpha = B^-1 a_q
        let mut rhs = std::mem::take(&mut self.work_m);
        rhs.iter_mut().for_each(|v| *v = 0.0);
        self.scatter_column(q, &mut rhs);
        let mut alpha = std::mem::take(&mut self.alpha);
        self.factor.ftran(&mut rhs, &mut alpha);
        self.work_m = rhs;

        let ftol = self.opts.feasibility_tol;
        let range = self.hi[q] - self.lo[q];

        // Harris pass 1: relaxed step bound.
        let mut theta_max = range;
        for pos in 0..self.m {
            let a = alpha[pos];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let var = self.head[pos];
            let rate = -dir * a;
            if let Some(t) = self.relaxed_ratio(var, rate, phase_one, ftol) {
                theta_max = theta_max.min(t);
            }
        }

        // Pass 2: among candidates within the relaxed bound take the largest pivot.
        let mut leave: Option<(usize, f64, bool)> = None;
        let mut best_pivot = 0.0;
        for pos in 0..self.m {
            let a = alpha[pos];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let var = self.head[pos];
            let rate = -dir * a;
            if let Some((t, to_upper)) = self.exact_ratio(var, rate, phase_one, ftol) {
                if t <= theta_max {
                    let better = if bland {
                        leave.map_or(true, |(p, tt, _)| {
                            t < tt || (t == tt && self.head[pos] < self.head[p])
                        })
                    } else {
                        a.abs() > best_pivot
                    };
                    if better {
                        best_pivot = a.abs();
                        leave = Some((pos, t.max(0.0), to_upper));
                    }
                }
            }
        }

        self.iterations += 1;
        let flip = range.is_finite() && leave.map_or(true, |(_, t, _)| range <= t);
        if leave.is_none() && !flip {
            self.alpha = alpha;
            if phase_one {
                return Err(LpError::Numerical(
                    "phase-one direction without blocking variable".into(),
                ));
            }
            return Ok(Step::Unbounded);
        }

        let theta = if flip { range } else { leave.unwrap().1 };
        if theta * dq.abs() > 1e-12 {
            *stall = 0;
        } else {
            *stall += 1;
        }
        if theta != 0.0 {
            for pos in 0..self.m {
                let a = alpha[pos];
                if a != 0.0 {
                    let var = self.head[pos];
                    self.x[var] -= dir * theta * a;
                }
            }
        }
        if flip {
            let (new_state, value) = if dir > 0.0 {
                (VarState::AtUpper, self.hi[q])
            } else {
                (VarState::AtLower, self.lo[q])
            };
            self.state[q] = new_state;
            self.x[q] = value;
        } else {
            let (pos, _, to_upper) = leave.unwrap();
            let out = self.head[pos];
            self.x[q] += dir * theta;
            if to_upper {
                self.state[out] = VarState::AtUpper;
                self.x[out] = self.hi[out];
            } else {
                self.state[out] = VarState::AtLower;
                self.x[out] = self.lo[out];
            }
            self.head[pos] = q;
            self.state[q] = VarState::Basic(pos);
            self.factor.push_eta(pos, &alpha);
        }
        self.alpha = alpha;
        Ok(Step::Continue)
    }

    fn relaxed_ratio(&self, var: usize, rate: f64, phase_one: bool, tol: f64) -> Option<f64> {
        let v = self.x[var];
        let (l, h) = (self.lo[var], self.hi[var]);
        if phase_one && v < l - tol {
            return (rate > 0.0).then(|| (l - v + tol) / rate);
        }
        if phase_one && v > h + tol {
            return (rate < 0.0).then(|| (v - h + tol) / -rate);
        }
        if rate < 0.0 && l.is_finite() {
            Some(((v - l).max(0.0) + tol) / -rate)
        } else if rate > 0.0 && h.is_finite() {
            Some(((h - v).max(0.0) + tol) / rate)
        } else {
            None
        }
    }

    /// Step at which `var` reaches the bound it is heading for, and whether
    /// that bound is the upper one.
    fn exact_ratio(&self, var: usize, rate: f64, phase_one: bool, tol: f64) -> Option<(f64, bool)> {
        let v = self.x[var];
        let (l, h) = (self.lo[var], self.hi[var]);
        if phase_one && v < l - tol {
            return (rate > 0.0).then(|| ((l - v) / rate, false));
        }
        if phase_one && v > h + tol {
            return (rate < 0.0).then(|| ((v - h) / -rate, true));
        }
        if rate < 0.0 && l.is_finite() {
            Some(((v - l).max(0.0) / -rate, false))
        } else if rate > 0.0 && h.is_finite() {
            Some(((h - v).max(0.0) / rate, true))
        } else {
            None
        }
    }
}

fn initial_state(lo: f64, hi: f64) -> VarState {
    if lo.is_finite() {
        VarState::AtLower
    } else if hi.is_finite() {
        VarState::AtUpper
    } else {
        VarState::Zero
    }
}

fn merge_duplicates(
    n: usize,
    start: &[usize],
    rows: &[usize],
    vals: &[f64],
) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let mut out_start = Vec::with_capacity(n + 1);
    let mut out_rows = Vec::with_capacity(rows.len());
    let mut out_vals = Vec::with_capacity(vals.len());
    out_start.push(0);
    let mut entries: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        entries.clear();
        entries.extend((start[j]..start[j + 1]).map(|k| (rows[k], vals[k])));
        entries.sort_by_key(|e| e.0);
        let mut k = 0;
        while k < entries.len() {
            let r = entries[k].0;
            let mut s = 0.0;
            while k < entries.len() && entries[k].0 == r {
                s += entries[k].1;
                k += 1;
            }
            if s != 0.0 {
                out_rows.push(r);
                out_vals.push(s);
            }
        }
        out_start.push(out_rows.len());
    }
    (out_start, out_rows, out_vals)
}
