//! Observable statistics and welfare of a solved equilibrium.

use crate::banking::BankCostParams;
use crate::equilibrium::{Equilibrium, Regime};
use crate::preferences::Preferences;

/// How model output `Y` is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputDef {
    /// `Y = B + Σ σ_j z_j`, the literal back-out denominator.
    #[default]
    Literal,
    /// `Y = X* + Σ σ_j z_j` with `X* = 1`.
    Unit,
}

/// Surplus share credited to buyers in the welfare measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WelfareShare {
    /// `(1-θ)`, the default weight on buyer surplus.
    #[default]
    OneMinusTheta,
    /// `θ`, the buyer's Kalai share.
    Theta,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateStats {
    pub m0: f64,
    pub m1: f64,
    pub zeta: f64,
    /// `m/(r+ℓ)`; absent without banks.
    pub cd_ratio: Option<f64>,
    /// Required reserves `χ(r+ℓ)`.
    pub required: f64,
    pub excess: f64,
    pub excess_ratio: Option<f64>,
    pub y: f64,
    pub c_over_y: f64,
    pub r_over_y: f64,
    pub uc_over_y: f64,
    pub uc_over_dm: f64,
    pub markup: f64,
    pub pi_over_y: f64,
    /// Bank net income over deposits; absent without banks.
    pub pi_over_d: Option<f64>,
}

pub fn output(eq: &Equilibrium, prefs: &Preferences, def: OutputDef) -> f64 {
    let dm: f64 = eq
        .meetings
        .iter()
        .map(|mt| eq.policy.sigma.get(mt.j) * mt.z)
        .sum();
    match def {
        OutputDef::Literal => prefs.scale() + dm,
        OutputDef::Unit => 1.0 + dm,
    }
}

pub fn aggregates(
    eq: &Equilibrium,
    prefs: &Preferences,
    costs: &BankCostParams,
    def: OutputDef,
) -> AggregateStats {
    let sigma = eq.policy.sigma;
    let chi = eq.policy.chi;
    let (m, r, l) = (eq.m, eq.r, eq.l);
    let deposits = r + l;
    let m0 = m + r;
    let m1 = m0 + l;
    let zeta = if m0 > 0.0 { m1 / m0 } else { 1.0 };
    let required = chi * deposits;
    // The binding constraint makes excess reserves zero by construction; the
    // subtraction would only reintroduce rounding noise.
    let excess = if eq.regime == Regime::Scarce {
        0.0
    } else {
        r - required
    };
    let banked = deposits > 0.0;
    let y = output(eq, prefs, def);
    let credit = sigma.s3() * eq.meetings[2].credit_used;
    let dm: f64 = eq.meetings.iter().map(|mt| sigma.get(mt.j) * mt.z).sum();

    let mut weight = 0.0;
    let mut markup = 0.0;
    for mt in &eq.meetings {
        let s = sigma.get(mt.j);
        if mt.q > 0.0 && s > 0.0 {
            markup += s * mt.z / mt.q;
            weight += s;
        }
    }
    let markup = if weight > 0.0 { markup / weight } else { f64::NAN };
    let income = eq.bank.n * costs.entry_cost();

    AggregateStats {
        m0,
        m1,
        zeta,
        cd_ratio: banked.then(|| m / deposits),
        required,
        excess,
        excess_ratio: banked.then(|| excess / deposits),
        y,
        c_over_y: m / y,
        r_over_y: r / y,
        uc_over_y: credit / y,
        uc_over_dm: if dm > 0.0 { credit / dm } else { 0.0 },
        markup,
        pi_over_y: income / y,
        pi_over_d: banked.then(|| income / deposits),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelfareReport {
    pub jb: [f64; 3],
    pub js: [f64; 3],
    pub total: f64,
    pub dispersion: f64,
}

/// Per-meeting buyer and seller welfare. Buyers pay the nominal rate on
/// cash and the rate spread `i - i_d` on deposits.
pub fn welfare(eq: &Equilibrium, prefs: &Preferences, share: WelfareShare) -> WelfareReport {
    let theta = prefs.theta();
    let buyer_share = match share {
        WelfareShare::OneMinusTheta => 1.0 - theta,
        WelfareShare::Theta => theta,
    };
    let i = eq.policy.i;
    let i_d = eq.bank.i_d;
    let mut jb = [0.0; 3];
    let mut js = [0.0; 3];
    let mut total = 0.0;
    for (k, mt) in eq.meetings.iter().enumerate() {
        let s = prefs.surplus(mt.q);
        js[k] = (1.0 - theta) * s;
        jb[k] = -i * mt.m - (i - i_d) * mt.d + buyer_share * s;
        total += eq.policy.sigma.get(mt.j) * (jb[k] + js[k]);
    }
    let all = [jb[0], jb[1], jb[2], js[0], js[1], js[2]];
    let mean = all.iter().sum::<f64>() / 6.0;
    let var = all.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 6.0;
    WelfareReport {
        jb,
        js,
        total,
        dispersion: var.sqrt(),
    }
}
