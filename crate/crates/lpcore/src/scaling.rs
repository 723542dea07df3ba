use crate::LinearProgram;

const PASSES: usize = 6;

/// Row, column and objective scale factors (powers of two).
///
/// The solver works on `A' = R·A·S`, `c' = obj·S·c`, bounds `l/S`, and row
/// bounds `R·b`.
pub(crate) struct Scaling {
    pub row: Vec<f64>,
    pub col: Vec<f64>,
    pub obj: f64,
}

impl Scaling {
    pub fn identity(lp: &LinearProgram) -> Self {
        Scaling {
            row: vec![1.0; lp.num_rows()],
            col: vec![1.0; lp.num_vars()],
            obj: 1.0,
        }
    }

    /// Alternating geometric-mean equilibration of rows and columns.
    pub fn equilibrate(lp: &LinearProgram) -> Self {
        let m = lp.num_rows();
        let n = lp.num_vars();
        let mut row = vec![1.0; m];
        let mut col = vec![1.0; n];
        for _ in 0..PASSES {
            let mut rmin = vec![f64::INFINITY; m];
            let mut rmax = vec![0.0_f64; m];
            for &(i, j, v) in lp.triplets() {
                let a = (v * col[j]).abs();
                if a > 0.0 {
                    rmin[i] = rmin[i].min(a);
                    rmax[i] = rmax[i].max(a);
                }
            }
            for i in 0..m {
                if rmax[i] > 0.0 {
                    row[i] = pow2(1.0 / (rmin[i] * rmax[i]).sqrt());
                }
            }
            let mut cmin = vec![f64::INFINITY; n];
            let mut cmax = vec![0.0_f64; n];
            for &(i, j, v) in lp.triplets() {
                let a = (v * row[i]).abs();
                if a > 0.0 {
                    cmin[j] = cmin[j].min(a);
                    cmax[j] = cmax[j].max(a);
                }
            }
            for j in 0..n {
                if cmax[j] > 0.0 {
                    col[j] = pow2(1.0 / (cmin[j] * cmax[j]).sqrt());
                }
            }
        }
        let cmax = lp
            .objective()
            .iter()
            .zip(&col)
            .fold(0.0_f64, |acc, (c, s)| acc.max((c * s).abs()));
        let obj = if cmax > 0.0 { pow2(1.0 / cmax) } else { 1.0 };
        Scaling { row, col, obj }
    }
}

fn pow2(v: f64) -> f64 {
    2f64.powi(v.log2().round() as i32)
}
