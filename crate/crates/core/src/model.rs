use crate::aggregates::{self, AggregateStats, OutputDef, WelfareReport, WelfareShare};
use crate::banking::BankCostParams;
use crate::equilibrium::{self, Equilibrium};
use crate::error::Result;
use crate::policy::{PolicyPoint, Sigma};
use crate::preferences::Preferences;

/// Structural parameters plus measurement switches: everything needed to
/// turn a policy point into statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    pub prefs: Preferences,
    pub costs: BankCostParams,
    pub sigma: Sigma,
    pub output: OutputDef,
    pub share: WelfareShare,
}

impl Model {
    /// The calibrated parameter set (θ, A, a, E, k, B, b, σ₁, σ₃) =
    /// (0.454, 0.0017, 1.2, 0.001, 0.0011, 0.825, 0.398, 0.187, 0.69).
    pub fn calibrated() -> Model {
        Model {
            prefs: Preferences::new(0.825, 0.398, 0.454).expect("valid preferences"),
            costs: BankCostParams::new(0.0017, 1.2, 0.001, 0.0011).expect("valid costs"),
            sigma: Sigma::from_outer(0.187, 0.69).expect("valid sigma"),
            output: OutputDef::Literal,
            share: WelfareShare::OneMinusTheta,
        }
    }

    pub fn policy(&self, i: f64, i_r: f64, chi: f64, delta_bar: f64) -> PolicyPoint {
        PolicyPoint {
            i,
            i_r,
            chi,
            delta_bar,
            sigma: self.sigma,
        }
    }

    pub fn solve(&self, policy: &PolicyPoint) -> Result<Equilibrium> {
        equilibrium::solve(&self.prefs, &self.costs, policy)
    }

    pub fn aggregates(&self, eq: &Equilibrium) -> AggregateStats {
        aggregates::aggregates(eq, &self.prefs, &self.costs, self.output)
    }

    pub fn welfare(&self, eq: &Equilibrium) -> WelfareReport {
        aggregates::welfare(eq, &self.prefs, self.share)
    }
}
