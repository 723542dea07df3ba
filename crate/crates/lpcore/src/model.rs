use std::io::{self, Write};

use crate::LpError;

/// Relation between a constraint row activity and its right-hand side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

impl RowSense {
    fn symbol(self) -> &'static str {
        match self {
            RowSense::Le => "<=",
            RowSense::Eq => "=",
            RowSense::Ge => ">=",
        }
    }
}

/// A minimisation problem `min c·x` subject to sparse rows `a_i·x (<=|=|>=) b_i`
/// and per-variable bounds `l_j <= x_j <= u_j`.
///
/// Coefficients are kept as triplets; the solver converts them to compressed
/// column and row storage once per solve.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    triplets: Vec<(usize, usize, f64)>,
    senses: Vec<RowSense>,
    rhs: Vec<f64>,
}

impl LinearProgram {
    /// Creates a problem with `num_vars` variables, zero objective and bounds `[0, +inf)`.
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; num_vars],
            lower: vec![0.0; num_vars],
            upper: vec![f64::INFINITY; num_vars],
            triplets: Vec::new(),
            senses: Vec::new(),
            rhs: Vec::new(),
        }
    }

    /// Builds a problem from raw parts, validating dimensions and values.
    pub fn from_parts(
        objective: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        triplets: Vec<(usize, usize, f64)>,
        senses: Vec<RowSense>,
        rhs: Vec<f64>,
    ) -> Result<Self, LpError> {
        let lp = LinearProgram {
            objective,
            lower,
            upper,
            triplets,
            senses,
            rhs,
        };
        lp.validate()?;
        Ok(lp)
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.senses.len()
    }

    pub fn num_nonzeros(&self) -> usize {
        self.triplets.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn senses(&self) -> &[RowSense] {
        &self.senses
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// `(row, col, value)` triplets in insertion order.
    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.triplets
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) -> Result<(), LpError> {
        self.check_var(var)?;
        check_finite("objective coefficient", coeff)?;
        self.objective[var] = coeff;
        Ok(())
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> Result<(), LpError> {
        self.check_var(var)?;
        check_bounds(var, lower, upper)?;
        self.lower[var] = lower;
        self.upper[var] = upper;
        Ok(())
    }

    /// Appends a row and returns its index.
    pub fn add_row(
        &mut self,
        coeffs: &[(usize, f64)],
        sense: RowSense,
        rhs: f64,
    ) -> Result<usize, LpError> {
        check_finite("right-hand side", rhs)?;
        for &(var, coeff) in coeffs {
            self.check_var(var)?;
            check_finite("constraint coefficient", coeff)?;
        }
        let row = self.senses.len();
        self.triplets
            .extend(coeffs.iter().map(|&(var, coeff)| (row, var, coeff)));
        self.senses.push(sense);
        self.rhs.push(rhs);
        Ok(row)
    }

    /// Checks every structural invariant of the model.
    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        let m = self.senses.len();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Dimension(format!(
                "{} variables but {} lower / {} upper bounds",
                n,
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.rhs.len() != m {
            return Err(LpError::Dimension(format!(
                "{} rows but {} right-hand sides",
                m,
                self.rhs.len()
            )));
        }
        for (j, &c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(LpError::InvalidValue(format!(
                    "objective coefficient of variable {j} is {c}"
                )));
            }
        }
        for j in 0..n {
            check_bounds(j, self.lower[j], self.upper[j])?;
        }
        for (i, &b) in self.rhs.iter().enumerate() {
            if !b.is_finite() {
                return Err(LpError::InvalidValue(format!("rhs of row {i} is {b}")));
            }
        }
        for &(i, j, v) in &self.triplets {
            if i >= m || j >= n {
                return Err(LpError::Dimension(format!(
                    "triplet ({i}, {j}) outside {m}x{n}"
                )));
            }
            if !v.is_finite() {
                return Err(LpError::InvalidValue(format!(
                    "coefficient ({i}, {j}) is {v}"
                )));
            }
        }
        Ok(())
    }

    /// Row activities `A·x`.
    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        let mut act = vec![0.0; self.num_rows()];
        for &(i, j, v) in &self.triplets {
            act[i] += v * x[j];
        }
        act
    }

    /// Largest violation of any row or bound by `x` (absolute, unscaled).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let act = self.row_activity(x);
        let mut worst: f64 = 0.0;
        for (i, (&a, &b)) in act.iter().zip(&self.rhs).enumerate() {
            let v = match self.senses[i] {
                RowSense::Le => a - b,
                RowSense::Ge => b - a,
                RowSense::Eq => (a - b).abs(),
            };
            worst = worst.max(v);
        }
        for j in 0..self.num_vars() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Lagrangian lower bound on the optimum for arbitrary row multipliers.
    ///
    /// For any `y` this is `min over the bound box of c·x - y·(A·x - r)` with
    /// the row activity `r` ranging over its own admissible interval, so it never
    /// exceeds the optimal objective. Reduced costs smaller than `zero_tol` in
    /// magnitude are treated as zero when the matching bound is infinite.
    pub fn dual_bound(&self, row_duals: &[f64], zero_tol: f64) -> f64 {
        let mut reduced = self.objective.clone();
        for &(i, j, v) in &self.triplets {
            reduced[j] -= row_duals[i] * v;
        }
        let mut bound = 0.0;
        for j in 0..self.num_vars() {
            bound += box_min(reduced[j], self.lower[j], self.upper[j], zero_tol);
        }
        for i in 0..self.num_rows() {
            let (lo, hi) = match self.senses[i] {
                RowSense::Le => (f64::NEG_INFINITY, self.rhs[i]),
                RowSense::Ge => (self.rhs[i], f64::INFINITY),
                RowSense::Eq => (self.rhs[i], self.rhs[i]),
            };
            bound += box_min(row_duals[i], lo, hi, zero_tol);
        }
        bound
    }

    /// Writes a plain-text dump: a header line, then `obj`, `bnd`, `row` and
    /// `nz` records, one per line. Intended for offline inspection only.
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "lp vars={} rows={} nnz={}",
            self.num_vars(),
            self.num_rows(),
            self.num_nonzeros()
        )?;
        for (j, c) in self.objective.iter().enumerate() {
            if *c != 0.0 {
                writeln!(out, "obj {j} {c:e}")?;
            }
        }
        for j in 0..self.num_vars() {
            writeln!(out, "bnd {j} {:e} {:e}", self.lower[j], self.upper[j])?;
        }
        for (i, s) in self.senses.iter().enumerate() {
            writeln!(out, "row {i} {} {:e}", s.symbol(), self.rhs[i])?;
        }
        for &(i, j, v) in &self.triplets {
            writeln!(out, "nz {i} {j} {v:e}")?;
        }
        Ok(())
    }

    fn check_var(&self, var: usize) -> Result<(), LpError> {
        if var >= self.num_vars() {
            return Err(LpError::Dimension(format!(
                "variable {var} out of range (num_vars = {})",
                self.num_vars()
            )));
        }
        Ok(())
    }
}

fn box_min(coeff: f64, lo: f64, hi: f64, zero_tol: f64) -> f64 {
    if coeff > 0.0 {
        if lo.is_finite() {
            coeff * lo
        } else if coeff <= zero_tol {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else if coeff < 0.0 {
        if hi.is_finite() {
            coeff * hi
        } else if -coeff <= zero_tol {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        0.0
    }
}

fn check_finite(what: &str, v: f64) -> Result<(), LpError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(LpError::InvalidValue(format!("{what} is {v}")))
    }
}

fn check_bounds(var: usize, lower: f64, upper: f64) -> Result<(), LpError> {
    if lower.is_nan() || upper.is_nan() || lower == f64::INFINITY || upper == f64::NEG_INFINITY
    {
        return Err(LpError::InvalidValue(format!(
            "bounds of variable {var} are [{lower}, {upper}]"
        )));
    }
    if lower > upper {
        return Err(LpError::InvalidValue(format!(
            "lower bound {lower} exceeds upper bound {upper} for variable {var}"
        )));
    }
    Ok(())
}
