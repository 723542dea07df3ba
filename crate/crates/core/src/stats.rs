//! Ordinary least squares with t and F tests, single-predictor ANOVA and
//! Pearson correlation.

use nalgebra::{DMatrix, DVector};
use statrs::function::beta::beta_reg;
use thiserror::Error;

use crate::profiles::BuildingType;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need more rows ({rows}) than columns ({cols})")]
    TooFewRows { rows: usize, cols: usize },
    #[error("column lengths differ from the response length {0}")]
    Ragged(usize),
    #[error("column {0:?} is constant")]
    ConstantColumn(String),
    #[error("column {0:?} is a linear combination of earlier columns")]
    RankDeficient(String),
    #[error("response is constant")]
    ConstantResponse,
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("inputs need equal lengths of at least 2")]
    Length,
}

/// Regression design with an intercept as first column.
#[derive(Clone, Debug)]
pub struct DesignMatrix {
    names: Vec<String>,
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl DesignMatrix {
    /// Builds `[1 | columns]`. Rejects constant and collinear columns.
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self, StatsError> {
        let n = y.len();
        let k = columns.len() + 1;
        if columns.len() != names.len() || columns.iter().any(|c| c.len() != n) {
            return Err(StatsError::Ragged(n));
        }
        if n <= k {
            return Err(StatsError::TooFewRows { rows: n, cols: k });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite("response".into()));
        }
        for (name, col) in names.iter().zip(&columns) {
            if col.iter().any(|v| !v.is_finite()) {
                return Err(StatsError::NonFinite(name.clone()));
            }
            if col.iter().all(|v| *v == col[0]) {
                return Err(StatsError::ConstantColumn(name.clone()));
            }
        }
        let mut all_names = Vec::with_capacity(k);
        all_names.push("intercept".to_string());
        all_names.extend(names);
        let x = DMatrix::from_fn(n, k, |i, j| if j == 0 { 1.0 } else { columns[j - 1][i] });
        let design = DesignMatrix {
            names: all_names,
            x,
            y: DVector::from_vec(y),
        };
        design.check_rank()?;
        Ok(design)
    }

    /// Property-level design: building-type dummies (reference `school`, or
    /// the first type present when there are no schools), annual consumption
    /// in MWh, and summer and daytime shares in percent.
    pub fn from_features(rows: &[FeatureRow], y: Vec<f64>) -> Result<Self, StatsError> {
        let mut present: Vec<BuildingType> = rows.iter().map(|r| r.building_type).collect();
        present.sort();
        present.dedup();
        let reference = if present.contains(&BuildingType::School) {
            BuildingType::School
        } else {
            present.first().copied().unwrap_or(BuildingType::School)
        };
        let mut names = Vec::new();
        let mut columns = Vec::new();
        for t in present.iter().filter(|t| **t != reference) {
            names.push(format!("type_{}", t.name()));
            columns.push(rows.iter().map(|r| f64::from(u8::from(r.building_type == *t))).collect());
        }
        names.push("ec_mwh".into());
        columns.push(rows.iter().map(|r| r.annual_consumption_mwh).collect());
        names.push("sc_pct".into());
        columns.push(rows.iter().map(|r| 100.0 * r.summer_share).collect());
        names.push("dc_pct".into());
        columns.push(rows.iter().map(|r| 100.0 * r.daytime_share).collect());
        Self::new(names, columns, y)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn cols(&self) -> usize {
        self.x.ncols()
    }

    pub fn response(&self) -> &[f64] {
        self.y.as_slice()
    }

    /// Value of column `j` (0 is the intercept) in row `i`.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.x[(i, j)]
    }

    fn check_rank(&self) -> Result<(), StatsError> {
        let r = self.x.clone().qr().r();
        for j in 0..self.cols() {
            let norm = self.x.column(j).norm();
            if r[(j, j)].abs() <= 1e-10 * norm {
                return Err(StatsError::RankDeficient(self.names[j].clone()));
            }
        }
        Ok(())
    }
}

/// Building features of one property.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureRow {
    pub building_type: BuildingType,
    pub annual_consumption_mwh: f64,
    /// Fractions in [0, 1].
    pub summer_share: f64,
    pub daytime_share: f64,
}

#[derive(Clone, Debug)]
pub struct RegressionFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub tss: f64,
    /// Residual standard deviation, `sqrt(RSS / (n - k))`.
    pub sigma: f64,
    pub r_squared: f64,
    /// Overall F test of all non-intercept columns.
    pub f_statistic: f64,
    pub f_p_value: f64,
    /// Gaussian AIC, `n·ln(RSS/n) + 2(k+1)`.
    pub aic: f64,
    pub n: usize,
    pub k: usize,
}

/// Least squares through a Householder QR factorisation.
pub fn fit_ols(design: &DesignMatrix) -> Result<RegressionFit, StatsError> {
    let n = design.rows();
    let k = design.cols();
    let y = &design.y;
    let mean = y.mean();
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if tss == 0.0 {
        return Err(StatsError::ConstantResponse);
    }
    let qr = design.x.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let qty = q.transpose() * y;
    let r_inv = upper_inverse(&r).ok_or_else(|| StatsError::RankDeficient(design.names[k - 1].clone()))?;
    let beta = &r_inv * qty;
    let fitted = &design.x * &beta;
    let residuals = y - &fitted;
    let rss = residuals.norm_squared();
    let df = (n - k) as f64;
    let sigma2 = rss / df;
    let mut std_errors = Vec::with_capacity(k);
    let mut t_stats = Vec::with_capacity(k);
    let mut p_values = Vec::with_capacity(k);
    for j in 0..k {
        // Diagonal of (XᵀX)⁻¹ = R⁻¹R⁻ᵀ is the squared row norm of R⁻¹.
        let se = (sigma2 * r_inv.row(j).norm_squared()).sqrt();
        let t = beta[j] / se;
        std_errors.push(se);
        t_stats.push(t);
        p_values.push(t_two_sided_p(t, df));
    }
    let r_squared = (1.0 - rss / tss).clamp(0.0, 1.0);
    let df1 = (k - 1) as f64;
    let (f_statistic, f_p_value) = if k > 1 {
        let f = (r_squared / df1) / ((1.0 - r_squared) / df);
        (f, f_sf(f, df1, df))
    } else {
        (0.0, 1.0)
    };
    Ok(RegressionFit {
        names: design.names.clone(),
        coefficients: beta.as_slice().to_vec(),
        std_errors,
        t_stats,
        p_values,
        fitted: fitted.as_slice().to_vec(),
        residuals: residuals.as_slice().to_vec(),
        rss,
        tss,
        sigma: sigma2.sqrt(),
        r_squared,
        f_statistic,
        f_p_value,
        aic: n as f64 * (rss / n as f64).ln() + 2.0 * (k as f64 + 1.0),
        n,
        k,
    })
}

fn upper_inverse(r: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let k = r.ncols();
    let mut inv = DMatrix::zeros(k, k);
    for col in 0..k {
        for i in (0..=col).rev() {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for j in i + 1..=col {
                s -= r[(i, j)] * inv[(j, col)];
            }
            if r[(i, i)] == 0.0 {
                return None;
            }
            inv[(i, col)] = s / r[(i, i)];
        }
    }
    Some(inv)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnovaResult {
    pub r_squared: f64,
    pub f_statistic: f64,
    pub p_value: f64,
    pub df1: usize,
    pub df2: usize,
}

/// Variance explained by one predictor (a numeric column, or the dummy
/// columns of a categorical one) with an F test against the intercept-only
/// model.
pub fn anova_single(name: &str, predictor: Vec<Vec<f64>>, y: Vec<f64>) -> Result<AnovaResult, StatsError> {
    let names = (0..predictor.len()).map(|i| format!("{name}_{i}")).collect();
    let design = DesignMatrix::new(names, predictor, y)?;
    let fit = fit_ols(&design)?;
    Ok(AnovaResult {
        r_squared: fit.r_squared,
        f_statistic: fit.f_statistic,
        p_value: fit.f_p_value,
        df1: fit.k - 1,
        df2: fit.n - fit.k,
    })
}

/// One predictor's share of the response variance.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictorAnova {
    pub predictor: String,
    pub anova: AnovaResult,
    /// Pearson correlation with the response; `None` for building type.
    pub correlation: Option<f64>,
}

/// Single-predictor ANOVA for building type (skipped when only one type is
/// present), annual consumption, summer share and daytime share.
pub fn feature_anova(rows: &[FeatureRow], y: &[f64]) -> Result<Vec<PredictorAnova>, StatsError> {
    let mut out = Vec::new();
    let mut present: Vec<BuildingType> = rows.iter().map(|r| r.building_type).collect();
    present.sort();
    present.dedup();
    if present.len() > 1 {
        let dummies = present[1..]
            .iter()
            .map(|t| rows.iter().map(|r| f64::from(u8::from(r.building_type == *t))).collect())
            .collect();
        out.push(PredictorAnova {
            predictor: "building_type".into(),
            anova: anova_single("building_type", dummies, y.to_vec())?,
            correlation: None,
        });
    }
    let numeric: [(&str, fn(&FeatureRow) -> f64); 3] = [
        ("ec_mwh", |r| r.annual_consumption_mwh),
        ("sc_pct", |r| 100.0 * r.summer_share),
        ("dc_pct", |r| 100.0 * r.daytime_share),
    ];
    for (name, get) in numeric {
        let x: Vec<f64> = rows.iter().map(get).collect();
        out.push(PredictorAnova {
            predictor: name.into(),
            correlation: Some(pearson(&x, y)?),
            anova: anova_single(name, vec![x], y.to_vec())?,
        });
    }
    Ok(out)
}

/// Two-sided p-value of a Student-t statistic.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    beta_reg(0.5 * df, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

/// Upper tail `P(F > f)` of the F distribution.
pub fn f_sf(f: f64, d1: f64, d2: f64) -> f64 {
    if f.is_nan() {
        return f64::NAN;
    }
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    beta_reg(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f)).clamp(0.0, 1.0)
}

/// Product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(StatsError::Length);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 {
        return Err(StatsError::ConstantColumn("x".into()));
    }
    if syy == 0.0 {
        return Err(StatsError::ConstantColumn("y".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
