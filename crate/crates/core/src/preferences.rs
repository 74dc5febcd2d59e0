//! Decentralized-market preferences and Kalai-bargaining terms of trade.
//!
//! Utility is `u(q) = B q^(1-b) / (1-b)` and cost is linear, `c(q) = q`, so the
//! efficient quantity is `q* = B^(1/b)`. Under proportional bargaining the
//! buyer pays `v(q) = (1-θ) u(q) + θ c(q)`, and the liquidity premium
//! `λ(q) = u'(q)/v'(q) - 1` is the return an asset must forgo to be held as
//! means of payment. `L = λ ∘ v⁻¹` expresses that premium in real balances.

use crate::error::{Error, Result};
use crate::roots;

/// DM preference block: utility scale `B`, curvature `b`, buyer bargaining
/// power `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preferences {
    scale: f64,
    curvature: f64,
    theta: f64,
    q_star: f64,
    p_star: f64,
}

/// Result of a single bilateral DM trade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeOutcome {
    pub q: f64,
    pub p: f64,
}

impl Preferences {
    pub fn new(scale: f64, curvature: f64, theta: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "B",
                value: scale,
                reason: "utility scale must be positive and finite",
            });
        }
        if !(curvature > 0.0 && curvature < 1.0) {
            return Err(Error::InvalidParameter {
                name: "b",
                value: curvature,
                reason: "curvature must lie in (0, 1) so that u(0) = 0",
            });
        }
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "theta",
                value: theta,
                reason: "bargaining power must lie in (0, 1]",
            });
        }
        let q_star = scale.powf(1.0 / curvature);
        if !(q_star.is_finite() && q_star > 0.0) {
            return Err(Error::InvalidParameter {
                name: "B",
                value: scale,
                reason: "implied efficient quantity B^(1/b) is not finite",
            });
        }
        let mut prefs = Preferences {
            scale,
            curvature,
            theta,
            q_star,
            p_star: 0.0,
        };
        prefs.p_star = prefs.v(q_star);
        Ok(prefs)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Efficient DM quantity, solving `u'(q) = c'(q) = 1`.
    pub fn q_star(&self) -> f64 {
        self.q_star
    }

    /// Payment for the efficient quantity, `v(q*)`.
    pub fn p_star(&self) -> f64 {
        self.p_star
    }

    pub fn utility(&self, q: f64) -> f64 {
        self.scale * q.powf(1.0 - self.curvature) / (1.0 - self.curvature)
    }

    pub fn marginal_utility(&self, q: f64) -> f64 {
        self.scale * q.powf(-self.curvature)
    }

    /// DM trade surplus `u(q) - c(q)`.
    pub fn surplus(&self, q: f64) -> f64 {
        self.utility(q) - q
    }

    fn v(&self, q: f64) -> f64 {
        (1.0 - self.theta) * self.utility(q) + self.theta * q
    }

    /// `v'(q) = (1-θ) u'(q) + θ`.
    pub fn payment_slope(&self, q: f64) -> f64 {
        (1.0 - self.theta) * self.marginal_utility(q) + self.theta
    }

    /// Kalai payment `v(q)` for `q` in `[0, q*]`.
    pub fn payment(&self, q: f64) -> Result<f64> {
        if !(0.0..=self.q_star).contains(&q) {
            return Err(Error::Domain {
                what: "q",
                value: q,
                domain: "[0, q*]",
            });
        }
        Ok(self.v(q))
    }

    /// Inverse of [`payment`](Self::payment) on `[0, p*]`.
    pub fn payment_inverse(&self, p: f64) -> Result<f64> {
        if !(0.0..=self.p_star).contains(&p) {
            return Err(Error::Domain {
                what: "p",
                value: p,
                domain: "[0, p*]",
            });
        }
        if p == 0.0 {
            return Ok(0.0);
        }
        if self.theta == 1.0 {
            return Ok(p);
        }
        roots::bisect_newton(
            |q| self.v(q) - p,
            |q| self.payment_slope(q),
            0.0,
            self.q_star,
            "payment inverse",
        )
    }

    /// Trade given total liquidity `z`: `q = min{q*, v⁻¹(z)}`, `p = v(q)`.
    pub fn trade(&self, z: f64) -> Result<TradeOutcome> {
        if !(z >= 0.0) {
            return Err(Error::Domain {
                what: "z",
                value: z,
                domain: "[0, inf)",
            });
        }
        if z >= self.p_star {
            return Ok(TradeOutcome {
                q: self.q_star,
                p: self.p_star,
            });
        }
        let q = self.payment_inverse(z)?;
        Ok(TradeOutcome { q, p: z })
    }

    fn lambda(&self, q: f64) -> f64 {
        if q >= self.q_star {
            return 0.0;
        }
        let mu = self.marginal_utility(q);
        self.theta * (mu - 1.0) / ((1.0 - self.theta) * mu + self.theta)
    }

    fn lambda_slope(&self, q: f64) -> f64 {
        let mu = self.marginal_utility(q);
        let mu_prime = -self.curvature * mu / q;
        let den = (1.0 - self.theta) * mu + self.theta;
        self.theta * mu_prime / (den * den)
    }

    /// Liquidity premium `λ(q)`; zero at `q*`, strictly decreasing below it.
    pub fn liquidity_premium(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q <= self.q_star) {
            return Err(Error::Domain {
                what: "q",
                value: q,
                domain: "(0, q*]",
            });
        }
        Ok(self.lambda(q))
    }

    /// Supremum of `λ` as `q → 0`: `θ/(1-θ)`, infinite when `θ = 1`.
    pub fn max_premium(&self) -> f64 {
        if self.theta < 1.0 {
            self.theta / (1.0 - self.theta)
        } else {
            f64::INFINITY
        }
    }

    /// `L(z) = λ(v⁻¹(z))`, extended by zero above `p*`.
    pub fn liquidity(&self, z: f64) -> Result<f64> {
        if !(z > 0.0) {
            return Err(Error::Domain {
                what: "z",
                value: z,
                domain: "(0, inf)",
            });
        }
        if z >= self.p_star {
            return Ok(0.0);
        }
        Ok(self.lambda(self.payment_inverse(z)?))
    }

    /// Quantity `q` with `λ(q) = i`. Zero when `i` reaches the premium's
    /// supremum (no balances are worth holding at that cost).
    pub fn quantity_at_rate(&self, i: f64) -> Result<f64> {
        if !(i >= 0.0) {
            return Err(Error::Domain {
                what: "i",
                value: i,
                domain: "[0, inf)",
            });
        }
        if i == 0.0 {
            return Ok(self.q_star);
        }
        if i >= self.max_premium() {
            return Ok(0.0);
        }
        // Near q = 0 the premium approaches its supremum, so a tiny positive
        // lower end always carries the positive sign.
        let lo = self.q_star * 1e-200;
        roots::bisect_newton(
            |q| self.lambda(q) - i,
            |q| self.lambda_slope(q),
            lo,
            self.q_star,
            "liquidity premium inverse",
        )
    }

    /// `L⁻¹(i)`: real balances a buyer carries when liquidity costs `i`.
    pub fn liquidity_inverse(&self, i: f64) -> Result<f64> {
        Ok(self.liquidity_demand(i)?.p)
    }

    /// Balances `L⁻¹(i)` together with the quantity they buy.
    pub fn liquidity_demand(&self, i: f64) -> Result<TradeOutcome> {
        let q = self.quantity_at_rate(i)?;
        let p = if q >= self.q_star { self.p_star } else { self.v(q) };
        Ok(TradeOutcome { q, p })
    }
}
