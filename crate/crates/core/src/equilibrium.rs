//! Regime classification and the three stationary-equilibrium solvers.
//!
//! Solving is split in two steps. [`solve_core`] finds everything that does
//! not depend on the credit limit δ̄ (regime, bank prices and per-bank
//! balance sheet, the liquidity need δ̂). [`Core::assemble`] then distributes
//! balances across meeting types for a given δ̄ and clears markets. The
//! split keeps the δ̄ back-out cheap: only the second step is repeated.

use crate::banking::{leverage, BankAllocation, BankCostParams};
use crate::error::{Error, Result};
use crate::policy::PolicyPoint;
use crate::preferences::Preferences;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    NoBanking,
    Scarce,
    Ample,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::NoBanking => "no_banking",
            Regime::Scarce => "scarce",
            Regime::Ample => "ample",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Regime thresholds for a given `(i_r, χ)`.
///
/// `i_entry` is the nominal rate at which banks become active when
/// `i_r > γ'(r̂)`. It equals `i_lower` once `i_r ≥ γ'(r̲)`; below that the
/// ample system would otherwise imply a negative deposit rate, so entry
/// happens at the rate where the ample deposit rate reaches zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub i_lower: f64,
    pub i_hat: f64,
    pub i_bar: f64,
    pub r_hat: f64,
    pub r_lower: f64,
    pub gamma_prime_r_hat: f64,
    pub i_entry: f64,
}

/// One meeting type's balances. `l` holds banknotes, `credit_used` the
/// unsecured credit drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeetingOutcome {
    pub j: usize,
    pub q: f64,
    pub z: f64,
    pub m: f64,
    pub d: f64,
    pub l: f64,
    pub credit_used: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub regime: Regime,
    pub policy: PolicyPoint,
    pub bank: BankAllocation,
    pub meetings: [MeetingOutcome; 3],
    pub m: f64,
    pub r: f64,
    pub l: f64,
    pub delta_hat: f64,
}

/// The δ̄-independent part of an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Core {
    pub regime: Regime,
    /// Bank allocation with `n` left at zero; fixed by [`Core::assemble`].
    pub bank: BankAllocation,
    /// Real balances of a buyer paying the nominal rate, `L⁻¹(i)`.
    pub cash: f64,
    /// Liquidity need of a deposit-using buyer. `L⁻¹(i_ℓ)` in the banking
    /// regimes, `L⁻¹(i)` without banks.
    pub delta_hat: f64,
    /// Quantities bought with `cash` and with `delta_hat`.
    pub q_cash: f64,
    pub q_need: f64,
}

pub fn thresholds(costs: &BankCostParams, i_r: f64, chi: f64) -> Result<Thresholds> {
    if chi == 1.0 {
        return Err(Error::DegeneratePolicy(
            "chi = 1 leaves no lending capacity; the scarce-reserve threshold divides by 1 - chi"
                .into(),
        ));
    }
    let r_hat = costs.r_hat(chi)?;
    let r_lower = costs.r_lower();
    let kappa = leverage(chi);
    let gp_hat = costs.gp(r_hat);
    let hp_hat = costs.hp(kappa * r_hat);
    let i_hat = (gp_hat - i_r) / kappa + hp_hat;
    let i_bar = (1.0 + i_r - gp_hat) * (1.0 + hp_hat) - 1.0;
    let i_lower = i_r - costs.gp(r_lower);
    let i_entry = if i_r >= costs.gp(r_lower) {
        i_lower
    } else if i_r > gp_hat {
        let r0 = costs.gamma_prime_inverse(i_r)?;
        costs.hp(costs.lending_on_locus(r0).unwrap_or(0.0))
    } else {
        i_hat
    };
    Ok(Thresholds {
        i_lower,
        i_hat,
        i_bar,
        r_hat,
        r_lower,
        gamma_prime_r_hat: gp_hat,
        i_entry,
    })
}

impl Thresholds {
    /// Regime for nominal rate `i` at the `i_r` these thresholds were built
    /// for. Ties go to the regime with fewer banks.
    pub fn regime_at(&self, i: f64, i_r: f64) -> Regime {
        if i_r > self.gamma_prime_r_hat {
            if i <= self.i_entry {
                if i > self.i_lower && i < self.i_bar {
                    log::debug!(
                        "i = {i}, i_r = {i_r}: inside (i_lower, i_bar) but below deposit-rate entry {}; no banking",
                        self.i_entry
                    );
                }
                Regime::NoBanking
            } else if i < self.i_bar {
                Regime::Ample
            } else {
                Regime::Scarce
            }
        } else if i <= self.i_hat {
            Regime::NoBanking
        } else {
            Regime::Scarce
        }
    }
}

pub fn classify(costs: &BankCostParams, policy: &PolicyPoint) -> Result<Regime> {
    policy.validate()?;
    let th = thresholds(costs, policy.i_r, policy.chi)?;
    Ok(th.regime_at(policy.i, policy.i_r))
}

fn no_banking_core(prefs: &Preferences, policy: &PolicyPoint) -> Result<Core> {
    let cash = prefs.liquidity_demand(policy.i)?;
    Ok(Core {
        regime: Regime::NoBanking,
        bank: BankAllocation::default(),
        cash: cash.p,
        delta_hat: cash.p,
        q_cash: cash.q,
        q_need: cash.q,
    })
}

fn scarce_core(
    prefs: &Preferences,
    costs: &BankCostParams,
    policy: &PolicyPoint,
    th: &Thresholds,
) -> Result<Core> {
    let (i, i_r) = (policy.i, policy.i_r);
    let kappa = leverage(policy.chi);
    let r_tilde = th.r_hat;
    let l_tilde = kappa * r_tilde;
    let gp = th.gamma_prime_r_hat;
    let hp = costs.hp(l_tilde);
    // i_d² + (1 - c1) i_d - c0 = 0 with c0 = c1 + κ(1+i) = i_r - γ' + κ(i - η').
    let c1 = i_r - gp - (1.0 + hp) * kappa;
    let c0 = i_r - gp + kappa * (i - hp);
    let lin = 1.0 - c1;
    let disc = lin * lin + 4.0 * c0;
    if !(disc >= 0.0) {
        return Err(Error::Inconsistency(format!(
            "scarce deposit-rate quadratic has negative discriminant {disc} at i = {i}, i_r = {i_r}"
        )));
    }
    let root = disc.sqrt();
    let i_d = if lin + root > 0.0 {
        2.0 * c0 / (lin + root)
    } else {
        0.5 * (root - lin)
    };
    if !(i_d > 0.0) {
        return Err(Error::Inconsistency(format!(
            "scarce regime with non-positive deposit rate {i_d} at i = {i}, i_r = {i_r}, chi = {}",
            policy.chi
        )));
    }
    let i_l = (1.0 + i) / (1.0 + i_d) - 1.0;
    let lambda_l = i_l - hp;
    if !(lambda_l > 0.0) {
        return Err(Error::Inconsistency(format!(
            "scarce regime with slack lending constraint (multiplier {lambda_l}) at i = {i}, i_r = {i_r}"
        )));
    }
    Ok(Core {
        regime: Regime::Scarce,
        bank: BankAllocation {
            r_tilde,
            l_tilde,
            i_d,
            i_l,
            lambda_l,
            n: 0.0,
        },
        ..Core::priced(prefs, i, i_l)?
    })
}

/// Boundary slack when checking that a rate lies in the ample interval.
const EDGE_TOL: f64 = 1e-12;

fn ample_core(
    prefs: &Preferences,
    costs: &BankCostParams,
    policy: &PolicyPoint,
    th: &Thresholds,
) -> Result<Core> {
    let (i, i_r) = (policy.i, policy.i_r);
    if !(i_r > th.gamma_prime_r_hat)
        || i < th.i_entry - EDGE_TOL
        || i > th.i_bar + EDGE_TOL
    {
        return Err(Error::Inconsistency(format!(
            "ample system requested outside [{}, {}] (i = {i}, i_r = {i_r})",
            th.i_entry, th.i_bar
        )));
    }
    let f = |r: f64| costs.ample_pricing(i, i_r, r);
    let df = |r: f64| costs.ample_pricing_slope(i, i_r, r);
    let (lo, hi) = (th.r_hat, th.r_lower);
    let r_tilde = if f(lo) >= 0.0 {
        lo
    } else if f(hi) <= 0.0 {
        hi
    } else {
        let r = crate::roots::bisect(f, lo, hi, 0.0, "ample reserves")?;
        crate::roots::polish(f, df, r, lo, hi)
    };
    let l_tilde = costs.lending_on_locus(r_tilde).unwrap_or(0.0);
    let mut i_d = i_r - costs.gp(r_tilde);
    if i_d < 0.0 {
        if i_d < -EDGE_TOL {
            return Err(Error::Inconsistency(format!(
                "ample regime with negative deposit rate {i_d} at i = {i}, i_r = {i_r}"
            )));
        }
        i_d = 0.0;
    }
    let i_l = costs.hp(l_tilde);
    Ok(Core {
        regime: Regime::Ample,
        bank: BankAllocation {
            r_tilde,
            l_tilde,
            i_d,
            i_l,
            lambda_l: 0.0,
            n: 0.0,
        },
        ..Core::priced(prefs, i, i_l)?
    })
}

/// Classifies the policy and solves the δ̄-independent system.
pub fn solve_core(
    prefs: &Preferences,
    costs: &BankCostParams,
    policy: &PolicyPoint,
) -> Result<Core> {
    policy.validate()?;
    let th = thresholds(costs, policy.i_r, policy.chi)?;
    match th.regime_at(policy.i, policy.i_r) {
        Regime::NoBanking => no_banking_core(prefs, policy),
        Regime::Scarce => scarce_core(prefs, costs, policy, &th),
        Regime::Ample => ample_core(prefs, costs, policy, &th),
    }
}

/// Every buyer carries exactly the balances behind `q`, so no payment needs
/// inverting here.
fn meeting(j: usize, q: f64, m: f64, d: f64, l: f64, credit: f64, i_d: f64) -> MeetingOutcome {
    let z = m + (1.0 + i_d) * d + l + credit;
    MeetingOutcome {
        j,
        q,
        z,
        m,
        d,
        l,
        credit_used: credit,
    }
}

impl Core {
    /// Cash and liquidity need priced at `i` and `i_ℓ`; bank fields are
    /// filled in by the caller.
    fn priced(prefs: &Preferences, i: f64, i_l: f64) -> Result<Core> {
        let cash = prefs.liquidity_demand(i)?;
        let need = prefs.liquidity_demand(i_l)?;
        Ok(Core {
            regime: Regime::NoBanking,
            bank: BankAllocation::default(),
            cash: cash.p,
            delta_hat: need.p,
            q_cash: cash.q,
            q_need: need.q,
        })
    }

    /// Distributes balances across meeting types for the policy's δ̄ and
    /// clears the asset markets.
    pub fn assemble(&self, policy: &PolicyPoint) -> Equilibrium {
        let sigma = policy.sigma;
        let delta_bar = policy.delta_bar;
        let need = self.delta_hat;
        let credit3 = delta_bar.min(need);
        let own3 = (need - delta_bar).max(0.0);
        let mut bank = self.bank;
        let (meetings, m, r, l) = match self.regime {
            Regime::NoBanking => {
                let ms = [
                    meeting(1, self.q_cash, self.cash, 0.0, 0.0, 0.0, 0.0),
                    meeting(2, self.q_cash, self.cash, 0.0, 0.0, 0.0, 0.0),
                    meeting(3, self.q_cash, own3, 0.0, 0.0, credit3, 0.0),
                ];
                let m = sigma.s1() * ms[0].m + sigma.s2() * ms[1].m + sigma.s3() * ms[2].m;
                (ms, m, 0.0, 0.0)
            }
            Regime::Scarce | Regime::Ample => {
                let i_d = bank.i_d;
                let rho = bank.l_tilde / bank.r_tilde;
                let per = 1.0 + i_d + rho;
                let d2 = need / per;
                let d3 = own3 / per;
                let ms = [
                    meeting(1, self.q_cash, self.cash, 0.0, 0.0, 0.0, i_d),
                    meeting(2, self.q_need, 0.0, d2, rho * d2, 0.0, i_d),
                    meeting(3, self.q_need, 0.0, d3, rho * d3, credit3, i_d),
                ];
                let r = sigma.s2() * ms[1].d + sigma.s3() * ms[2].d;
                let l = sigma.s2() * ms[1].l + sigma.s3() * ms[2].l;
                bank.n = r / bank.r_tilde;
                (ms, sigma.s1() * self.cash, r, l)
            }
        };
        Equilibrium {
            regime: self.regime,
            policy: *policy,
            bank,
            meetings,
            m,
            r,
            l,
            delta_hat: need,
        }
    }
}

pub fn solve_no_banking(prefs: &Preferences, policy: &PolicyPoint) -> Result<Equilibrium> {
    policy.validate()?;
    Ok(no_banking_core(prefs, policy)?.assemble(policy))
}

pub fn solve_scarce(
    prefs: &Preferences,
    costs: &BankCostParams,
    policy: &PolicyPoint,
) -> Result<Equilibrium> {
    policy.validate()?;
    let th = thresholds(costs, policy.i_r, policy.chi)?;
    Ok(scarce_core(prefs, costs, policy, &th)?.assemble(policy))
}

/// Solves the ample system on the closed interval `[i_entry, ī]`, so it can
/// be evaluated at the regime boundaries as well.
pub fn solve_ample(
    prefs: &Preferences,
    costs: &BankCostParams,
    policy: &PolicyPoint,
) -> Result<Equilibrium> {
    policy.validate()?;
    let th = thresholds(costs, policy.i_r, policy.chi)?;
    Ok(ample_core(prefs, costs, policy, &th)?.assemble(policy))
}

/// Classifies, solves, and runs the residual battery before returning.
pub fn solve(
    prefs: &Preferences,
    costs: &BankCostParams,
    policy: &PolicyPoint,
) -> Result<Equilibrium> {
    let eq = solve_core(prefs, costs, policy)?.assemble(policy);
    verify(&eq, prefs, costs)?;
    Ok(eq)
}

/// Largest absolute residuals of an equilibrium, grouped by condition.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    /// Bank first-order conditions and the pricing identity
    /// `(1+i) = (1+i_d)(1+i_ℓ)`.
    pub bank_foc: f64,
    pub entry: f64,
    pub clearing: f64,
    /// Complementary slackness plus any violation of the lending constraint.
    pub slackness: f64,
    /// Liquidity identities `z = m + (1+i_d)d + ℓ + credit`.
    pub liquidity: f64,
    /// Buyer first-order conditions `λ(q₁) = i` and, with banks, `λ(q₂) = i_ℓ`.
    pub buyer: f64,
}

pub const RESIDUAL_TOL: f64 = 1e-10;
pub const BUYER_TOL: f64 = 1e-8;

pub fn residuals(eq: &Equilibrium, prefs: &Preferences, costs: &BankCostParams) -> Residuals {
    let p = &eq.policy;
    let s = p.sigma;
    let b = &eq.bank;
    let kappa = leverage(p.chi);
    let mut res = Residuals::default();
    let ms = &eq.meetings;

    let r_sum = s.s2() * ms[1].d + s.s3() * ms[2].d;
    let l_sum = s.s2() * ms[1].l + s.s3() * ms[2].l;
    let m_sum = s.s1() * ms[0].m + s.s2() * ms[1].m + s.s3() * ms[2].m;
    res.clearing = (r_sum - eq.r).abs().max((l_sum - eq.l).abs()).max((m_sum - eq.m).abs());

    for mt in ms {
        let z = mt.m + (1.0 + b.i_d) * mt.d + mt.l + mt.credit_used;
        res.liquidity = res.liquidity.max((z - mt.z).abs());
    }

    let lambda1 = if ms[0].q > 0.0 {
        prefs.liquidity_premium(ms[0].q).map_or(f64::INFINITY, |l| (l - p.i).abs())
    } else {
        0.0
    };
    res.buyer = lambda1;

    if eq.regime != Regime::NoBanking {
        let (f1, f2) = costs.bank_foc_residuals(b, p.i_r, p.chi);
        let pricing = (1.0 + p.i) - (1.0 + b.i_d) * (1.0 + b.i_l);
        res.bank_foc = f1.abs().max(f2.abs()).max(pricing.abs());
        res.entry = costs.entry_profit(b, p.i_r).abs();
        res.clearing = res
            .clearing
            .max((b.n * b.r_tilde - eq.r).abs())
            .max((b.n * b.l_tilde - eq.l).abs());
        let capacity = kappa * b.r_tilde;
        res.slackness = (b.lambda_l * (capacity - b.l_tilde))
            .abs()
            .max((b.l_tilde - capacity).max(0.0));
        if ms[1].q > 0.0 {
            let l2 = prefs
                .liquidity_premium(ms[1].q)
                .map_or(f64::INFINITY, |l| (l - b.i_l).abs());
            res.buyer = res.buyer.max(l2);
        }
    }
    res
}

/// Checks every equilibrium condition and the regime's defining
/// inequalities. Failures are reported as internal inconsistencies.
pub fn verify(eq: &Equilibrium, prefs: &Preferences, costs: &BankCostParams) -> Result<Residuals> {
    let res = residuals(eq, prefs, costs);
    let p = &eq.policy;
    let b = &eq.bank;
    let fail = |what: &str, v: f64| {
        Err(Error::Inconsistency(format!(
            "{} equilibrium at i = {}, i_r = {}, chi = {}, delta_bar = {}: {what} = {v:e}",
            eq.regime, p.i, p.i_r, p.chi, p.delta_bar
        )))
    };
    for (what, v, tol) in [
        ("bank FOC residual", res.bank_foc, RESIDUAL_TOL),
        ("entry profit residual", res.entry, RESIDUAL_TOL),
        ("market clearing residual", res.clearing, RESIDUAL_TOL),
        ("complementary slackness residual", res.slackness, RESIDUAL_TOL),
        ("liquidity identity residual", res.liquidity, RESIDUAL_TOL),
        ("buyer FOC residual", res.buyer, BUYER_TOL),
    ] {
        if !(v <= tol) {
            return fail(what, v);
        }
    }
    for mt in &eq.meetings {
        let parts = [mt.q, mt.z, mt.m, mt.d, mt.l, mt.credit_used];
        if parts.iter().any(|x| !(*x >= 0.0)) {
            return fail("negative balance in meeting", mt.j as f64);
        }
        if mt.credit_used > p.delta_bar || mt.q > prefs.q_star() {
            return fail("credit or quantity above its bound in meeting", mt.j as f64);
        }
    }
    let kappa = leverage(p.chi);
    match eq.regime {
        Regime::NoBanking => {
            if eq.r != 0.0 || eq.l != 0.0 || b.n != 0.0 {
                return fail("active banking", eq.r);
            }
        }
        Regime::Scarce => {
            if !(b.lambda_l > 0.0) {
                return fail("lending multiplier", b.lambda_l);
            }
            if !((eq.l - kappa * eq.r).abs() <= RESIDUAL_TOL) {
                return fail("binding-constraint gap", eq.l - kappa * eq.r);
            }
        }
        Regime::Ample => {
            if b.lambda_l != 0.0 {
                return fail("lending multiplier", b.lambda_l);
            }
            if !(b.l_tilde < kappa * b.r_tilde) {
                return fail("lending slack", kappa * b.r_tilde - b.l_tilde);
            }
        }
    }
    if eq.regime != Regime::NoBanking && !(b.i_d >= 0.0) {
        return fail("deposit rate", b.i_d);
    }
    Ok(res)
}
