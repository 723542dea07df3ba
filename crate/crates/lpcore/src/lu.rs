//! Sparse LU factorisation of the simplex basis with product-form updates.
//!
//! The factorisation is a right-looking Markowitz elimination with threshold
//! partial pivoting. Basis changes between refactorisations are appended as
//! eta columns.

const PIVOT_THRESHOLD: f64 = 0.01;
const SINGULAR_TOL: f64 = 1e-11;
const DROP_TOL: f64 = 1e-14;
const SEARCH_LIMIT: usize = 4;

/// Rows and basis positions left unpivoted when the basis is singular.
#[derive(Debug)]
pub(crate) struct Singular {
    pub rows: Vec<usize>,
    pub positions: Vec<usize>,
}

#[derive(Debug, Default)]
pub(crate) struct BasisFactor {
    m: usize,
    pivot_row: Vec<usize>,
    pivot_pos: Vec<usize>,
    pivot_val: Vec<f64>,
    // Column k of L (multipliers), original row indices.
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    // Row k of U without the pivot, basis positions.
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    // Product-form etas.
    eta_pos: Vec<usize>,
    eta_piv: Vec<f64>,
    eta_start: Vec<usize>,
    eta_idx: Vec<usize>,
    eta_val: Vec<f64>,
}

impl BasisFactor {
    /// Factorises the `m x m` matrix whose column `p` is `columns[p]` as `(row, value)` pairs.
    pub fn factorize(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self, Singular> {
        debug_assert_eq!(columns.len(), m);
        let mut cols: Vec<Vec<(usize, f64)>> = columns
            .iter()
            .map(|c| c.iter().copied().filter(|e| e.1 != 0.0).collect())
            .collect();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (p, col) in cols.iter().enumerate() {
            for &(i, _) in col {
                rows[i].push(p);
            }
        }
        let mut row_done = vec![false; m];
        let mut col_done = vec![false; m];
        let mut col_bucket: Vec<Vec<usize>> = vec![Vec::new(); m + 2];
        let mut row_bucket: Vec<Vec<usize>> = vec![Vec::new(); m + 2];
        for p in 0..m {
            col_bucket[cols[p].len().min(m + 1)].push(p);
        }
        for i in 0..m {
            row_bucket[rows[i].len().min(m + 1)].push(i);
        }

        let mut f = BasisFactor {
            m,
            l_start: vec![0],
            u_start: vec![0],
            eta_start: vec![0],
            ..Default::default()
        };

        let mut stalled = false;
        for _ in 0..m {
            let choice = if stalled {
                None
            } else {
                find_pivot(
                    &cols,
                    &rows,
                    &col_done,
                    &row_done,
                    &mut col_bucket,
                    &mut row_bucket,
                )
            };
            let (r, c) = match choice {
                Some(rc) => rc,
                None => match fallback_pivot(&cols, &col_done) {
                    Some(rc) => rc,
                    None => {
                        stalled = true;
                        break;
                    }
                },
            };
            let piv = col_value(&cols[c], r);
            if piv.abs() < SINGULAR_TOL {
                stalled = true;
                break;
            }

            // Pivot row entries (excluding the pivot column).
            let prow: Vec<(usize, f64)> = rows[r]
                .iter()
                .filter(|&&j| j != c)
                .map(|&j| (j, col_value(&cols[j], r)))
                .collect();
            let pcol: Vec<(usize, f64)> =
                cols[c].iter().copied().filter(|&(i, _)| i != r).collect();

            for &(i, a_ic) in &pcol {
                let l = a_ic / piv;
                f.l_idx.push(i);
                f.l_val.push(l);
                for &(j, a_rj) in &prow {
                    let delta = -l * a_rj;
                    let col = &mut cols[j];
                    match col.iter_mut().find(|e| e.0 == i) {
                        Some(e) => e.1 += delta,
                        None => {
                            col.push((i, delta));
                            rows[i].push(j);
                        }
                    }
                }
            }
            f.l_start.push(f.l_idx.len());
            for &(j, a_rj) in &prow {
                f.u_idx.push(j);
                f.u_val.push(a_rj);
            }
            f.u_start.push(f.u_idx.len());
            f.pivot_row.push(r);
            f.pivot_pos.push(c);
            f.pivot_val.push(piv);

            // Remove the pivot row and column from the active submatrix.
            row_done[r] = true;
            col_done[c] = true;
            for &(i, _) in &pcol {
                let row = &mut rows[i];
                if let Some(k) = row.iter().position(|&j| j == c) {
                    row.swap_remove(k);
                }
            }
            for &(j, _) in &prow {
                let col = &mut cols[j];
                if let Some(k) = col.iter().position(|e| e.0 == r) {
                    col.swap_remove(k);
                }
            }
            // Drop cancellation zeros in touched columns and refresh buckets.
            for &(j, _) in &prow {
                let col = &mut cols[j];
                let mut removed = Vec::new();
                col.retain(|&(i, v)| {
                    if v.abs() <= DROP_TOL {
                        removed.push(i);
                        false
                    } else {
                        true
                    }
                });
                for i in removed {
                    let row = &mut rows[i];
                    if let Some(k) = row.iter().position(|&jj| jj == j) {
                        row.swap_remove(k);
                    }
                    row_bucket[row.len().min(m + 1)].push(i);
                }
                col_bucket[col.len().min(m + 1)].push(j);
            }
            for &(i, _) in &pcol {
                row_bucket[rows[i].len().min(m + 1)].push(i);
            }
        }

        if stalled || f.pivot_row.len() < m {
            let rows = (0..m).filter(|&i| !row_done[i]).collect();
            let positions = (0..m).filter(|&p| !col_done[p]).collect();
            return Err(Singular { rows, positions });
        }
        Ok(f)
    }

    pub fn num_etas(&self) -> usize {
        self.eta_pos.len()
    }

    pub fn eta_nonzeros(&self) -> usize {
        self.eta_idx.len()
    }

    pub fn factor_nonzeros(&self) -> usize {
        self.l_idx.len() + self.u_idx.len() + self.m
    }

    /// Records that basis position `pos` was replaced by a column whose
    /// representation in the current basis is `alpha` (indexed by position).
    pub fn push_eta(&mut self, pos: usize, alpha: &[f64]) {
        self.eta_pos.push(pos);
        self.eta_piv.push(alpha[pos]);
        for (i, &a) in alpha.iter().enumerate() {
            if i != pos && a.abs() > DROP_TOL {
                self.eta_idx.push(i);
                self.eta_val.push(a);
            }
        }
        self.eta_start.push(self.eta_idx.len());
    }

    /// Solves `B x = b`. `b` is indexed by row and is destroyed; `x` is indexed
    /// by basis position.
    pub fn ftran(&self, b: &mut [f64], x: &mut [f64]) {
        for k in 0..self.pivot_row.len() {
            let v = b[self.pivot_row[k]];
            if v != 0.0 {
                for e in self.l_start[k]..self.l_start[k + 1] {
                    b[self.l_idx[e]] -= self.l_val[e] * v;
                }
            }
        }
        for k in (0..self.pivot_row.len()).rev() {
            let mut s = b[self.pivot_row[k]];
            for e in self.u_start[k]..self.u_start[k + 1] {
                s -= self.u_val[e] * x[self.u_idx[e]];
            }
            x[self.pivot_pos[k]] = s / self.pivot_val[k];
        }
        for k in 0..self.eta_pos.len() {
            let p = self.eta_pos[k];
            let xp = x[p] / self.eta_piv[k];
            x[p] = xp;
            if xp != 0.0 {
                for e in self.eta_start[k]..self.eta_start[k + 1] {
                    x[self.eta_idx[e]] -= self.eta_val[e] * xp;
                }
            }
        }
    }

    /// Solves `B^T y = d`. `d` is indexed by basis position and is destroyed;
    /// `y` is indexed by row.
    pub fn btran(&self, d: &mut [f64], y: &mut [f64]) {
        for k in (0..self.eta_pos.len()).rev() {
            let p = self.eta_pos[k];
            let mut s = d[p];
            for e in self.eta_start[k]..self.eta_start[k + 1] {
                s -= self.eta_val[e] * d[self.eta_idx[e]];
            }
            d[p] = s / self.eta_piv[k];
        }
        for k in 0..self.pivot_row.len() {
            let z = d[self.pivot_pos[k]] / self.pivot_val[k];
            y[self.pivot_row[k]] = z;
            if z != 0.0 {
                for e in self.u_start[k]..self.u_start[k + 1] {
                    d[self.u_idx[e]] -= self.u_val[e] * z;
                }
            }
        }
        for k in (0..self.pivot_row.len()).rev() {
            let r = self.pivot_row[k];
            let mut s = y[r];
            for e in self.l_start[k]..self.l_start[k + 1] {
                s -= self.l_val[e] * y[self.l_idx[e]];
            }
            y[r] = s;
        }
    }
}

fn col_value(col: &[(usize, f64)], row: usize) -> f64 {
    col.iter().find(|e| e.0 == row).map_or(0.0, |e| e.1)
}

fn col_max(col: &[(usize, f64)]) -> f64 {
    col.iter().fold(0.0_f64, |acc, e| acc.max(e.1.abs()))
}

/// Markowitz search over the sparsest columns and rows.
fn find_pivot(
    cols: &[Vec<(usize, f64)>],
    rows: &[Vec<usize>],
    col_done: &[bool],
    row_done: &[bool],
    col_bucket: &mut [Vec<usize>],
    row_bucket: &mut [Vec<usize>],
) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut best_cost = usize::MAX;
    let mut searched = 0;
    let max_count = col_bucket.len() - 1;
    for count in 1..=max_count {
        // Columns with `count` active entries.
        let bucket = &mut col_bucket[count];
        let mut k = bucket.len();
        while k > 0 {
            k -= 1;
            let c = bucket[k];
            if col_done[c] || cols[c].len() != count {
                bucket.swap_remove(k);
                continue;
            }
            let cmax = col_max(&cols[c]);
            for &(i, v) in &cols[c] {
                if v.abs() >= PIVOT_THRESHOLD * cmax {
                    let cost = (rows[i].len() - 1) * (count - 1);
                    if cost < best_cost {
                        best_cost = cost;
                        best = Some((i, c));
                    }
                }
            }
            searched += 1;
            if best.is_some() && (best_cost <= (count - 1) * (count - 1) || searched >= SEARCH_LIMIT)
            {
                return best;
            }
        }
        // Rows with `count` active entries.
        let bucket = &mut row_bucket[count];
        let mut k = bucket.len();
        while k > 0 {
            k -= 1;
            let r = bucket[k];
            if row_done[r] || rows[r].len() != count {
                bucket.swap_remove(k);
                continue;
            }
            for &j in &rows[r] {
                let v = col_value(&cols[j], r);
                if v.abs() >= PIVOT_THRESHOLD * col_max(&cols[j]) {
                    let cost = (count - 1) * (cols[j].len() - 1);
                    if cost < best_cost {
                        best_cost = cost;
                        best = Some((r, j));
                    }
                }
            }
            searched += 1;
            if best.is_some() && (best_cost <= count * (count - 1) || searched >= SEARCH_LIMIT) {
                return best;
            }
        }
        if best.is_some() && best_cost <= count * count {
            return best;
        }
    }
    best
}

fn fallback_pivot(cols: &[Vec<(usize, f64)>], col_done: &[bool]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for (c, col) in cols.iter().enumerate() {
        if col_done[c] {
            continue;
        }
        for &(i, v) in col {
            if best.map_or(true, |b| v.abs() > b.2) {
                best = Some((i, c, v.abs()));
            }
        }
    }
    best.map(|(i, c, _)| (i, c))
}
