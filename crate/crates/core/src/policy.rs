use crate::error::{Error, Result};

/// Meeting-type probabilities: cash only (1), cash or inside money (2),
/// inside money plus unsecured credit (3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sigma {
    s: [f64; 3],
}

impl Sigma {
    pub fn new(s1: f64, s2: f64, s3: f64) -> Result<Self> {
        for (name, v) in [("sigma1", s1), ("sigma2", s2), ("sigma3", s3)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "meeting probability must lie in [0, 1]",
                });
            }
        }
        let total = s1 + s2 + s3;
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: total,
                reason: "meeting probabilities must sum to 1",
            });
        }
        Ok(Sigma { s: [s1, s2, s3] })
    }

    /// Builds `(σ₁, 1-σ₁-σ₃, σ₃)`.
    pub fn from_outer(s1: f64, s3: f64) -> Result<Self> {
        Sigma::new(s1, 1.0 - s1 - s3, s3)
    }

    pub fn s1(&self) -> f64 {
        self.s[0]
    }

    pub fn s2(&self) -> f64 {
        self.s[1]
    }

    pub fn s3(&self) -> f64 {
        self.s[2]
    }

    /// Probability of meeting type `j` (1-based).
    pub fn get(&self, j: usize) -> f64 {
        self.s[j - 1]
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.s
    }
}

/// Monetary policy `(i, i_r, χ)` together with the credit environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyPoint {
    pub i: f64,
    pub i_r: f64,
    pub chi: f64,
    pub delta_bar: f64,
    pub sigma: Sigma,
}

impl PolicyPoint {
    pub fn validate(&self) -> Result<()> {
        if !(self.i >= 0.0 && self.i.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "i",
                value: self.i,
                reason: "nominal rate must be >= 0; a stationary monetary equilibrium requires i >= 0",
            });
        }
        if !(self.i_r >= 0.0 && self.i_r.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "i_r",
                value: self.i_r,
                reason: "interest on reserves must be >= 0",
            });
        }
        if !(self.chi > 0.0 && self.chi <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "chi",
                value: self.chi,
                reason: "reserve requirement must lie in (0, 1]",
            });
        }
        if !(self.delta_bar >= 0.0 && self.delta_bar.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "delta_bar",
                value: self.delta_bar,
                reason: "credit limit must be >= 0",
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_must_sum_to_one() {
        assert!(Sigma::new(0.2, 0.2, 0.2).is_err());
        assert!(Sigma::new(-0.1, 0.4, 0.7).is_err());
        let s = Sigma::from_outer(0.187, 0.69).unwrap();
        assert!((s.s2() - 0.123).abs() < 1e-12);
        assert_eq!(s.get(3), 0.69);
    }

    #[test]
    fn negative_rate_rejected() {
        let p = PolicyPoint {
            i: -0.01,
            i_r: 0.0,
            chi: 0.1,
            delta_bar: 0.0,
            sigma: Sigma::from_outer(0.2, 0.5).unwrap(),
        };
        let msg = p.validate().unwrap_err().to_string();
        assert!(msg.contains("i >= 0"), "{msg}");
        assert!(PolicyPoint { i: 0.0, chi: 0.0, ..p }.validate().is_err());
        assert!(PolicyPoint { i: 0.0, ..p }.validate().is_ok());
    }
}
