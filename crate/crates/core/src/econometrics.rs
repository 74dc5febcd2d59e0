//! Least squares with Newey-West standard errors, and the Chow break test.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    /// Intercept first, then one coefficient per regressor column.
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub lag: usize,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub n: usize,
    pub chow_f: Option<f64>,
}

/// Relative pivot size below which the design is treated as rank deficient.
const RANK_TOL: f64 = 1e-10;

fn design(y: &[f64], columns: &[&[f64]]) -> Result<DMatrix<f64>> {
    let n = y.len();
    for (k, c) in columns.iter().enumerate() {
        if c.len() != n {
            return Err(Error::Regression(format!(
                "regressor {k} has {} rows, response has {n}",
                c.len()
            )));
        }
    }
    if y.iter().chain(columns.iter().flat_map(|c| c.iter())).any(|v| !v.is_finite()) {
        return Err(Error::Regression("non-finite value in regression data".into()));
    }
    Ok(DMatrix::from_fn(n, columns.len() + 1, |t, j| {
        if j == 0 {
            1.0
        } else {
            columns[j - 1][t]
        }
    }))
}

struct Fit {
    beta: DVector<f64>,
    resid: DVector<f64>,
    /// `(X'X)⁻¹`.
    bread: DMatrix<f64>,
}

fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Fit> {
    let p = x.ncols();
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..p).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    for j in 0..p {
        if !(r[(j, j)].abs() > RANK_TOL * scale.max(f64::MIN_POSITIVE)) {
            return Err(Error::Singular(format!(
                "column {j} of the design (0 = intercept) is collinear with earlier columns"
            )));
        }
    }
    let qty = qr.q().transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::Singular("triangular inverse failed".into()))?;
    let bread = &r_inv * r_inv.transpose();
    let resid = y - x * &beta;
    Ok(Fit { beta, resid, bread })
}

fn rss_of(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
    Ok(least_squares(x, y)?.resid.norm_squared())
}

/// OLS of `y` on an intercept and `columns`, with Bartlett-kernel HAC
/// covariance `n/(n-k) · (X'X)⁻¹ S (X'X)⁻¹`,
/// `S = Σ_s w_s Σ_t e_t e_{t-s} (x_t x_{t-s}' + x_{t-s} x_t')`,
/// `w_s = 1 - s/(lag+1)` (the `s = 0` term counted once).
pub fn ols_nw(y: &[f64], columns: &[&[f64]], lag: usize) -> Result<RegressionResult> {
    let x = design(y, columns)?;
    let (n, p) = x.shape();
    if n <= p {
        return Err(Error::Regression(format!(
            "{n} observations for {p} coefficients; need more rows than coefficients"
        )));
    }
    let yv = DVector::from_column_slice(y);
    let fit = least_squares(&x, &yv)?;
    let e = &fit.resid;

    let mut meat = DMatrix::<f64>::zeros(p, p);
    for s in 0..=lag.min(n - 1) {
        let w = 1.0 - s as f64 / (lag as f64 + 1.0);
        let mut gamma = DMatrix::<f64>::zeros(p, p);
        for t in s..n {
            let xt = x.row(t);
            let xs = x.row(t - s);
            gamma += (e[t] * e[t - s]) * xt.transpose() * xs;
        }
        if s == 0 {
            meat += gamma;
        } else {
            meat += w * (&gamma + gamma.transpose());
        }
    }
    let cov = (n as f64 / (n - p) as f64) * &fit.bread * meat * &fit.bread;
    let std_errors = (0..p).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();

    let mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let rss = e.norm_squared();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n - 1) as f64 / (n - p) as f64;

    Ok(RegressionResult {
        coefficients: fit.beta.iter().copied().collect(),
        std_errors,
        lag,
        r_squared,
        adj_r_squared,
        residuals: e.iter().copied().collect(),
        rss,
        n,
        chow_f: None,
    })
}

/// Relative size below which a residual sum of squares counts as zero.
const ZERO_RSS: f64 = 1e-18;

/// Chow F statistic for breaks in every coefficient (intercept included)
/// at the given start indices of the later segments.
///
/// The unrestricted model interacts every column with segment dummies. When
/// it fits exactly the statistic is `+∞` if the pooled fit does not, and `0`
/// if both fit exactly.
pub fn chow_f(y: &[f64], columns: &[&[f64]], breaks: &[usize]) -> Result<f64> {
    let x = design(y, columns)?;
    let (n, p) = x.shape();
    let mut edges = vec![0];
    for &b in breaks {
        if b <= *edges.last().unwrap() || b >= n {
            return Err(Error::Regression(format!(
                "break indices must be strictly increasing inside (0, {n}); got {breaks:?}"
            )));
        }
        edges.push(b);
    }
    edges.push(n);
    for w in edges.windows(2) {
        if w[1] - w[0] <= p {
            return Err(Error::Regression(format!(
                "segment [{}, {}) has {} rows for {p} coefficients",
                w[0],
                w[1],
                w[1] - w[0]
            )));
        }
    }
    let segments = edges.len() - 1;
    let wide = DMatrix::from_fn(n, p * segments, |t, c| {
        let seg = c / p;
        if t >= edges[seg] && t < edges[seg + 1] {
            x[(t, c % p)]
        } else {
            0.0
        }
    });
    let yv = DVector::from_column_slice(y);
    let rss_r = rss_of(&x, &yv)?;
    let rss_u = rss_of(&wide, &yv)?;
    let mean = yv.mean();
    let tss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let zero = ZERO_RSS * tss.max(f64::MIN_POSITIVE);
    let q = (breaks.len() * p) as f64;
    let df = (n - segments * p) as f64;
    if rss_u <= zero {
        return Ok(if rss_r - rss_u <= zero { 0.0 } else { f64::INFINITY });
    }
    Ok((((rss_r - rss_u) / q) / (rss_u / df)).max(0.0))
}
