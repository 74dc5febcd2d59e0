#![allow(dead_code)]

use moneymult::{Equilibrium, Model, Regime};

pub const A: f64 = 0.0017;
pub const CURV: f64 = 1.2;
pub const E: f64 = 0.001;
pub const K: f64 = 0.0011;

pub fn model() -> Model {
    Model::calibrated()
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Reserves per bank on the binding entry locus, written out by hand.
pub fn oracle_r_hat(chi: f64) -> f64 {
    let kappa = (1.0 - chi) / chi;
    bisect(
        |r| A * (CURV - 1.0) * r.powf(CURV) + E * kappa * kappa * r * r - K,
        1e-12,
        100.0,
    )
}

/// Solve the slack and the binding bank systems independently and keep the
/// one whose lending is consistent with the reserve limit.
pub fn brute_force_regime(i: f64, i_r: f64, chi: f64) -> Regime {
    let kappa = (1.0 - chi) / chi;
    let r_hat = oracle_r_hat(chi);
    let gp = |r: f64| A * CURV * r.powf(CURV - 1.0);

    // Slack system, parametrized by lending: reserves from the entry locus,
    // then the pricing condition.
    let r_of_l = |l: f64| ((K - E * l * l) / (A * (CURV - 1.0))).powf(1.0 / CURV);
    let pricing = |l: f64| (1.0 + 2.0 * E * l) * (1.0 + i_r - gp(r_of_l(l))) - (1.0 + i);
    let l_max = kappa * r_hat;
    let (p0, p1) = (pricing(0.0), pricing(l_max));
    let ample = if p0 <= 0.0 && p1 > 0.0 {
        let l = bisect(pricing, 0.0, l_max);
        let r = r_of_l(l);
        let i_d = i_r - gp(r);
        i_d > 0.0 && l < kappa * r
    } else {
        false
    };

    // Binding system at r̂: deposit rate from the bank's reserve condition.
    let eta_p = 2.0 * E * kappa * r_hat;
    let g = |x: f64| i_r - gp(r_hat) + kappa * ((1.0 + i) / (1.0 + x) - 1.0 - eta_p) - x;
    let scarce = if g(0.0) > 0.0 {
        let i_d = bisect(g, 0.0, 10.0);
        let i_l = (1.0 + i) / (1.0 + i_d) - 1.0;
        let l_star = i_l / (2.0 * E);
        i_d > 0.0 && l_star >= kappa * r_hat
    } else {
        false
    };

    assert!(!(ample && scarce), "both banking systems admissible at i={i}, i_r={i_r}");
    if ample {
        Regime::Ample
    } else if scarce {
        Regime::Scarce
    } else {
        Regime::NoBanking
    }
}

/// Deposit rate of the slack bank system, solved along the entry locus by
/// bisection on lending.
pub fn oracle_ample_deposit_rate(i: f64, i_r: f64, chi: f64) -> f64 {
    let kappa = (1.0 - chi) / chi;
    let gp = |r: f64| A * CURV * r.powf(CURV - 1.0);
    let r_of_l = |l: f64| ((K - E * l * l) / (A * (CURV - 1.0))).powf(1.0 / CURV);
    let pricing = |l: f64| (1.0 + 2.0 * E * l) * (1.0 + i_r - gp(r_of_l(l))) - (1.0 + i);
    let l = bisect(pricing, 0.0, kappa * oracle_r_hat(chi));
    i_r - gp(r_of_l(l))
}

/// Equilibrium conditions recomputed from the cost formulas directly.
pub fn max_residual(eq: &Equilibrium) -> f64 {
    let p = &eq.policy;
    let s = p.sigma.as_array();
    let b = &eq.bank;
    let kappa = (1.0 - p.chi) / p.chi;
    let ms = &eq.meetings;
    let mut worst: f64 = 0.0;
    let r: f64 = (1..3).map(|j| s[j] * ms[j].d).sum();
    let l: f64 = (1..3).map(|j| s[j] * ms[j].l).sum();
    let m: f64 = (0..3).map(|j| s[j] * ms[j].m).sum();
    worst = worst.max((r - eq.r).abs()).max((l - eq.l).abs()).max((m - eq.m).abs());
    if eq.regime != Regime::NoBanking {
        let gp = A * CURV * b.r_tilde.powf(CURV - 1.0);
        let foc_r = p.i_r - b.i_d - gp + kappa * b.lambda_l;
        let foc_l = b.i_l - 2.0 * E * b.l_tilde - b.lambda_l;
        let profit = (p.i_r - b.i_d) * b.r_tilde + b.i_l * b.l_tilde
            - A * b.r_tilde.powf(CURV)
            - E * b.l_tilde * b.l_tilde
            - K;
        let slack = b.lambda_l * (kappa * b.r_tilde - b.l_tilde);
        worst = worst
            .max(foc_r.abs())
            .max(foc_l.abs())
            .max(profit.abs())
            .max(slack.abs())
            .max((b.n * b.r_tilde - eq.r).abs())
            .max((b.n * b.l_tilde - eq.l).abs());
        assert!(b.l_tilde <= kappa * b.r_tilde * (1.0 + 1e-12));
        assert!(b.lambda_l >= 0.0);
    }
    worst
}

pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Dense solve of `M x = v` by Gaussian elimination with partial pivoting.
fn gauss_solve(mut m: Vec<Vec<f64>>, mut v: Vec<f64>) -> Vec<f64> {
    let n = v.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        m.swap(c, piv);
        v.swap(c, piv);
        let (top, rest) = m.split_at_mut(c + 1);
        let pivot = &top[c];
        for (off, row) in rest.iter_mut().enumerate() {
            let f = row[c] / pivot[c];
            for (a, b) in row[c..].iter_mut().zip(&pivot[c..]) {
                *a -= f * b;
            }
            v[c + 1 + off] -= f * v[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| m[r][k] * x[k]).sum();
        x[r] = (v[r] - s) / m[r][r];
    }
    x
}

fn rows_with_intercept(columns: &[&[f64]], n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|t| std::iter::once(1.0).chain(columns.iter().map(|c| c[t])).collect())
        .collect()
}

/// Coefficients and residuals from the normal equations `X'X β = X'y`.
pub fn oracle_ols(y: &[f64], columns: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
    let n = y.len();
    let x = rows_with_intercept(columns, n);
    let p = x[0].len();
    let xtx: Vec<Vec<f64>> = (0..p)
        .map(|a| (0..p).map(|b| (0..n).map(|t| x[t][a] * x[t][b]).sum()).collect())
        .collect();
    let xty: Vec<f64> = (0..p).map(|a| (0..n).map(|t| x[t][a] * y[t]).sum()).collect();
    let beta = gauss_solve(xtx, xty);
    let resid = (0..n)
        .map(|t| y[t] - (0..p).map(|a| x[t][a] * beta[a]).sum::<f64>())
        .collect();
    (beta, resid)
}

/// Newey-West standard errors with Bartlett weights and `n/(n-p)` scaling,
/// built as explicit nested sums.
pub fn oracle_nw_se(y: &[f64], columns: &[&[f64]], lag: usize) -> Vec<f64> {
    let n = y.len();
    let x = rows_with_intercept(columns, n);
    let p = x[0].len();
    let (_, e) = oracle_ols(y, columns);
    let mut s = vec![vec![0.0; p]; p];
    for lag_s in 0..=lag {
        let w = 1.0 - lag_s as f64 / (lag as f64 + 1.0);
        for t in lag_s..n {
            for a in 0..p {
                for b in 0..p {
                    let term = e[t] * e[t - lag_s] * x[t][a] * x[t - lag_s][b];
                    if lag_s == 0 {
                        s[a][b] += term;
                    } else {
                        s[a][b] += w * term;
                        s[b][a] += w * term;
                    }
                }
            }
        }
    }
    let xtx: Vec<Vec<f64>> = (0..p)
        .map(|a| (0..p).map(|b| (0..n).map(|t| x[t][a] * x[t][b]).sum()).collect())
        .collect();
    let inv: Vec<Vec<f64>> = (0..p)
        .map(|c| gauss_solve(xtx.clone(), (0..p).map(|r| if r == c { 1.0 } else { 0.0 }).collect()))
        .collect();
    // `inv[c]` is column c of the inverse; the inverse is symmetric.
    let scale = n as f64 / (n - p) as f64;
    (0..p)
        .map(|a| {
            let mut v = 0.0;
            for b in 0..p {
                for c in 0..p {
                    v += inv[a][b] * s[b][c] * inv[c][a];
                }
            }
            (scale * v).sqrt()
        })
        .collect()
}

/// Chow statistic from one pooled and one regression per segment.
pub fn oracle_chow(y: &[f64], columns: &[&[f64]], breaks: &[usize]) -> f64 {
    let rss = |e: &[f64]| e.iter().map(|v| v * v).sum::<f64>();
    let (_, pooled) = oracle_ols(y, columns);
    let mut edges = vec![0];
    edges.extend_from_slice(breaks);
    edges.push(y.len());
    let mut rss_u = 0.0;
    for w in edges.windows(2) {
        let cols: Vec<&[f64]> = columns.iter().map(|c| &c[w[0]..w[1]]).collect();
        rss_u += rss(&oracle_ols(&y[w[0]..w[1]], &cols).1);
    }
    let p = columns.len() + 1;
    let segs = edges.len() - 1;
    let q = (breaks.len() * p) as f64;
    let df = (y.len() - segs * p) as f64;
    ((rss(&pooled) - rss_u) / q) / (rss_u / df)
}

/// Deterministic synthetic regression data: two regressors with serially
/// correlated noise.
pub fn synthetic_regression(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let x1: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x2: Vec<f64> = (0..n).map(|t| (t as f64 * 0.3).sin() + rng.random_range(-0.5..0.5)).collect();
    let mut u = 0.0;
    let y = (0..n)
        .map(|t| {
            u = 0.5 * u + rng.random_range(-0.3..0.3);
            1.5 - 2.0 * x1[t] + 0.7 * x2[t] + u
        })
        .collect();
    (y, x1, x2)
}
