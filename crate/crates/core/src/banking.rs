//! Bank cost technology and the free-entry loci.
//!
//! Deposit handling costs `γ(d) = A d^a` and loan enforcement costs
//! `η(ℓ) = E ℓ²`. Every bank holds reserves equal to its deposits, so the
//! entry condition reduces to a locus in `(r̃, ℓ̃)`:
//! `γ'(r̃)r̃ - γ(r̃) + η'(ℓ̃)ℓ̃ - η(ℓ̃) = k`.

use crate::error::{Error, Result};
use crate::roots;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BankCostParams {
    deposit_scale: f64,
    deposit_curvature: f64,
    enforcement_scale: f64,
    entry_cost: f64,
}

/// Per-bank balance sheet and prices at a candidate equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BankAllocation {
    pub r_tilde: f64,
    pub l_tilde: f64,
    pub i_d: f64,
    pub i_l: f64,
    pub lambda_l: f64,
    pub n: f64,
}

fn check_nonneg(what: &'static str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: x,
            domain: "[0, inf)",
        })
    }
}

/// `(1-χ)/χ`, the lending capacity per unit of reserves.
pub fn leverage(chi: f64) -> f64 {
    (1.0 - chi) / chi
}

impl BankCostParams {
    pub fn new(a_scale: f64, a: f64, e: f64, k: f64) -> Result<Self> {
        let positive = |name, v: f64, reason| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason,
                })
            }
        };
        positive("A", a_scale, "deposit-cost scale must be positive")?;
        positive("E", e, "enforcement-cost scale must be positive")?;
        positive("k", k, "entry cost must be positive")?;
        if !(a > 1.0 && a.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "a",
                value: a,
                reason: "deposit-cost curvature must exceed 1",
            });
        }
        Ok(BankCostParams {
            deposit_scale: a_scale,
            deposit_curvature: a,
            enforcement_scale: e,
            entry_cost: k,
        })
    }

    pub fn deposit_scale(&self) -> f64 {
        self.deposit_scale
    }

    pub fn deposit_curvature(&self) -> f64 {
        self.deposit_curvature
    }

    pub fn enforcement_scale(&self) -> f64 {
        self.enforcement_scale
    }

    pub fn entry_cost(&self) -> f64 {
        self.entry_cost
    }

    pub(crate) fn g(&self, d: f64) -> f64 {
        self.deposit_scale * d.powf(self.deposit_curvature)
    }

    pub(crate) fn gp(&self, d: f64) -> f64 {
        let a = self.deposit_curvature;
        self.deposit_scale * a * d.powf(a - 1.0)
    }

    fn gpp(&self, d: f64) -> f64 {
        let a = self.deposit_curvature;
        self.deposit_scale * a * (a - 1.0) * d.powf(a - 2.0)
    }

    pub(crate) fn h(&self, l: f64) -> f64 {
        self.enforcement_scale * l * l
    }

    pub(crate) fn hp(&self, l: f64) -> f64 {
        2.0 * self.enforcement_scale * l
    }

    pub fn gamma(&self, d: f64) -> Result<f64> {
        check_nonneg("d", d)?;
        Ok(self.g(d))
    }

    pub fn gamma_prime(&self, d: f64) -> Result<f64> {
        check_nonneg("d", d)?;
        Ok(self.gp(d))
    }

    pub fn gamma_prime_inverse(&self, y: f64) -> Result<f64> {
        check_nonneg("gamma'", y)?;
        let a = self.deposit_curvature;
        Ok((y / (self.deposit_scale * a)).powf(1.0 / (a - 1.0)))
    }

    pub fn eta(&self, l: f64) -> Result<f64> {
        check_nonneg("l", l)?;
        Ok(self.h(l))
    }

    pub fn eta_prime(&self, l: f64) -> Result<f64> {
        check_nonneg("l", l)?;
        Ok(self.hp(l))
    }

    pub fn eta_prime_inverse(&self, y: f64) -> Result<f64> {
        check_nonneg("eta'", y)?;
        Ok(y / (2.0 * self.enforcement_scale))
    }

    /// Deposit side of the entry locus, `γ'(r)r - γ(r) = A(a-1)r^a`.
    pub(crate) fn deposit_rent(&self, r: f64) -> f64 {
        self.deposit_scale * (self.deposit_curvature - 1.0) * r.powf(self.deposit_curvature)
    }

    /// Left side of the entry locus at `(r, ℓ)`.
    pub fn entry_locus(&self, r: f64, l: f64) -> f64 {
        self.gp(r) * r - self.g(r) + self.hp(l) * l - self.h(l)
    }

    /// Lending that puts `(r, ℓ)` on the entry locus, or `None` when the
    /// deposit side alone already exceeds `k`.
    pub fn lending_on_locus(&self, r: f64) -> Option<f64> {
        let slack = self.entry_cost - self.deposit_rent(r);
        if slack < 0.0 {
            None
        } else {
            Some((slack / self.enforcement_scale).sqrt())
        }
    }

    /// Reserves per bank when the lending constraint binds: the positive root
    /// of the entry locus along `ℓ = (1-χ)/χ · r`.
    pub fn r_hat(&self, chi: f64) -> Result<f64> {
        if !(chi > 0.0 && chi <= 1.0) {
            return Err(Error::Domain {
                what: "chi",
                value: chi,
                domain: "(0, 1]",
            });
        }
        if chi == 1.0 {
            return Ok(self.r_lower());
        }
        let kappa = leverage(chi);
        let a = self.deposit_curvature;
        let f = |r: f64| self.entry_locus(r, kappa * r) - self.entry_cost;
        let df = |r: f64| {
            self.deposit_scale * a * (a - 1.0) * r.powf(a - 1.0)
                + 2.0 * self.enforcement_scale * kappa * kappa * r
        };
        let lo = 1e-10;
        let hi = roots::expand_upper(f, lo, 1.0, "reserve entry locus")?;
        let r = roots::bisect(f, lo, hi, 0.0, "reserve entry locus")?;
        Ok(roots::polish(f, df, r, lo, hi))
    }

    /// Reserves per bank when the bank makes no loans:
    /// `γ'(r̲)r̲ - γ(r̲) = k`, solved in closed form.
    pub fn r_lower(&self) -> f64 {
        let a = self.deposit_curvature;
        (self.entry_cost / (self.deposit_scale * (a - 1.0))).powf(1.0 / a)
    }

    /// Residuals of the two bank first-order conditions.
    pub fn bank_foc_residuals(&self, alloc: &BankAllocation, i_r: f64, chi: f64) -> (f64, f64) {
        let kappa = leverage(chi);
        let foc_reserves = i_r - alloc.i_d - self.gp(alloc.r_tilde) + alloc.lambda_l * kappa;
        let foc_loans = alloc.i_l - self.hp(alloc.l_tilde) - alloc.lambda_l;
        (foc_reserves, foc_loans)
    }

    /// Bank profit net of the entry cost.
    pub fn entry_profit(&self, alloc: &BankAllocation, i_r: f64) -> f64 {
        (i_r - alloc.i_d) * alloc.r_tilde + alloc.i_l * alloc.l_tilde
            - self.g(alloc.r_tilde)
            - self.h(alloc.l_tilde)
            - self.entry_cost
    }

    /// Residual of the ample-regime pricing equation at reserves `r`, with
    /// lending taken from the entry locus. Increasing in `r`.
    pub(crate) fn ample_pricing(&self, i: f64, i_r: f64, r: f64) -> f64 {
        let l = self.lending_on_locus(r).unwrap_or(0.0);
        (1.0 + i) / (1.0 + i_r - self.gp(r)) - 1.0 - self.hp(l)
    }

    pub(crate) fn ample_pricing_slope(&self, i: f64, i_r: f64, r: f64) -> f64 {
        let den = 1.0 + i_r - self.gp(r);
        let first = (1.0 + i) * self.gpp(r) / (den * den);
        let l = self.lending_on_locus(r).unwrap_or(0.0);
        if l == 0.0 {
            return f64::INFINITY;
        }
        let a = self.deposit_curvature;
        let dl = -self.deposit_scale * a * (a - 1.0) * r.powf(a - 1.0)
            / (2.0 * self.enforcement_scale * l);
        first - 2.0 * self.enforcement_scale * dl
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn calibrated() -> BankCostParams {
        BankCostParams::new(0.0017, 1.2, 0.001, 0.0011).unwrap()
    }

    #[test]
    fn validation() {
        assert!(BankCostParams::new(0.0, 1.2, 0.001, 0.001).is_err());
        assert!(BankCostParams::new(0.001, 1.0, 0.001, 0.001).is_err());
        assert!(BankCostParams::new(0.001, 1.2, -1.0, 0.001).is_err());
        assert!(BankCostParams::new(0.001, 1.2, 0.001, 0.0).is_err());
    }

    #[test]
    fn gamma_hand_values() {
        let p = calibrated();
        assert_eq!(p.gamma(0.0).unwrap(), 0.0);
        assert_eq!(p.gamma_prime(0.0).unwrap(), 0.0);
        assert_relative_eq!(p.gamma(1.0).unwrap(), 0.0017, max_relative = 1e-15);
        assert_relative_eq!(p.gamma_prime(1.0).unwrap(), 0.00204, max_relative = 1e-14);
        assert!(p.gamma(-1.0).is_err());
        assert!(p.gamma_prime_inverse(-1e-3).is_err());
    }

    #[test]
    fn eta_hand_values() {
        let p = calibrated();
        assert_eq!(p.eta(0.0).unwrap(), 0.0);
        assert_relative_eq!(p.eta_prime_inverse(0.04).unwrap(), 20.0, max_relative = 1e-15);
        assert!(p.eta(-0.5).is_err());
    }

    #[test]
    fn inverses_round_trip() {
        let p = calibrated();
        for k in 0..=100 {
            let x = 10.0 * k as f64;
            let g = p.gamma_prime_inverse(p.gamma_prime(x).unwrap()).unwrap();
            assert!((g - x).abs() <= 1e-12 * x.max(1.0), "x={x}");
            let h = p.eta_prime_inverse(p.eta_prime(x).unwrap()).unwrap();
            assert!((h - x).abs() <= 1e-12 * x.max(1.0));
        }
    }

    #[test]
    fn r_lower_closed_form_and_oracle() {
        let p = calibrated();
        let r = p.r_lower();
        assert!((r - 2.660).abs() < 5e-4, "{r}");
        assert!((p.entry_locus(r, 0.0) - p.entry_cost()).abs() <= 1e-12);
        let oracle = roots::bisect(
            |x| 0.0017 * 1.2 * x.powf(0.2) * x - 0.0017 * x.powf(1.2) - 0.0011,
            1e-8,
            100.0,
            0.0,
            "oracle",
        )
        .unwrap();
        assert_relative_eq!(r, oracle, max_relative = 1e-12);
        assert_eq!(p.r_hat(1.0).unwrap(), r);
        let tiny = BankCostParams::new(0.0017, 1.2, 0.001, 1e-30).unwrap();
        assert!(tiny.r_lower() < 1e-20);
    }

    #[test]
    fn r_hat_at_calibration() {
        let p = calibrated();
        let r = p.r_hat(0.1).unwrap();
        // Independent oracle: bisection of the locus written out by hand.
        let oracle = roots::bisect(
            |x| {
                let l = 9.0 * x;
                0.0017 * 0.2 * x.powf(1.2) + 0.001 * l * l - 0.0011
            },
            1e-8,
            10.0,
            0.0,
            "oracle",
        )
        .unwrap();
        assert_relative_eq!(r, oracle, max_relative = 1e-12);
        assert!((r - 0.115).abs() < 5e-4, "{r}");
        assert!((p.entry_locus(r, 9.0 * r) - p.entry_cost()).abs() <= 1e-12);
        assert!(r < p.r_hat(0.5).unwrap());
        assert!(p.r_hat(0.0).is_err());
        assert!(p.r_hat(1.5).is_err());
    }

    #[test]
    fn locus_increasing_in_reserves() {
        let p = calibrated();
        let kappa = leverage(0.1);
        let mut prev = 0.0;
        for k in 1..=500 {
            let r = k as f64 * 0.01;
            let v = p.entry_locus(r, kappa * r);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn foc_residuals_linear_in_deposit_rate() {
        let p = calibrated();
        let r = 1.0;
        let l = 0.5;
        let alloc = BankAllocation {
            r_tilde: r,
            l_tilde: l,
            i_d: 0.03 - p.gp(r),
            i_l: p.hp(l),
            lambda_l: 0.0,
            n: 1.0,
        };
        let (f1, f2) = p.bank_foc_residuals(&alloc, 0.03, 0.1);
        assert!(f1.abs() < 1e-15 && f2 == 0.0);
        let bumped = BankAllocation {
            i_d: alloc.i_d + 1e-3,
            ..alloc
        };
        let (g1, f2) = p.bank_foc_residuals(&bumped, 0.03, 0.1);
        assert!((g1 - f1 + 1e-3).abs() < 1e-15);
        assert_eq!(f2, 0.0);
    }

    #[test]
    fn zero_allocation_loses_entry_cost() {
        let p = calibrated();
        assert_eq!(p.entry_profit(&BankAllocation::default(), 0.01), -0.0011);
    }

    #[test]
    fn lending_on_locus_hits_zero_at_r_lower() {
        let p = calibrated();
        let l = p.lending_on_locus(p.r_lower()).unwrap_or(0.0);
        assert!(l < 1e-6);
        assert!(p.lending_on_locus(p.r_lower() * 1.01).is_none());
        let r = 1.0;
        let l = p.lending_on_locus(r).unwrap();
        assert!((p.entry_locus(r, l) - p.entry_cost()).abs() < 1e-15);
    }

    #[test]
    fn pricing_slope_matches_difference() {
        let p = calibrated();
        let (i, i_r, r) = (0.03, 0.01, 1.0);
        let h = 1e-6;
        let fd = (p.ample_pricing(i, i_r, r + h) - p.ample_pricing(i, i_r, r - h)) / (2.0 * h);
        assert_relative_eq!(fd, p.ample_pricing_slope(i, i_r, r), max_relative = 1e-6);
        assert!(fd > 0.0);
    }
}
