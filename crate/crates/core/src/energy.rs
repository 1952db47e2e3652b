//! Cumulative energy budgets: spend up to step `k` may not exceed
//! `kappa + rho * k`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::ActionTriple;

/// Slack allowed when comparing a cost against the available energy.
/// Recharge amounts such as 1.1 are not exact in binary, so a budget that is
/// exactly met on paper can land a few ulps short.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("{0}: need kappa >= rho > 0, got kappa={1}, rho={2}")]
    Supply(&'static str, f64, f64),
    #[error("attacker costs need beta_strong > beta_normal > 0, got {0} and {1}")]
    AttackerCosts(f64, f64),
    #[error("defender cost must be positive, got {0}")]
    DefenderCost(f64),
    #[error("charging {cost} at step {k} exceeds the available {available}")]
    Overdraft { cost: f64, available: f64, k: u64 },
    #[error("ledger is at step {ledger}, cannot act at earlier step {k}")]
    StepRegression { ledger: u64, k: u64 },
}

/// Anything with an initial stock and a per-step recharge.
pub trait EnergySupply {
    fn kappa(&self) -> f64;
    fn rho(&self) -> f64;

    /// Total energy supplied by step `k`.
    fn supplied(&self, k: u64) -> f64 {
        self.kappa() + self.rho() * k as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackerParams {
    pub kappa: f64,
    pub rho: f64,
    pub beta_normal: f64,
    pub beta_strong: f64,
}

impl AttackerParams {
    pub fn validate(&self) -> Result<(), EnergyError> {
        check_supply("attacker", self.kappa, self.rho)?;
        if !(self.beta_normal > 0.0 && self.beta_strong > self.beta_normal && self.beta_strong.is_finite())
        {
            return Err(EnergyError::AttackerCosts(self.beta_strong, self.beta_normal));
        }
        Ok(())
    }

    pub fn cost(&self, strong: usize, normal: usize) -> f64 {
        self.beta_strong * strong as f64 + self.beta_normal * normal as f64
    }

    /// `rho / beta_strong`, the number of edges that can be strongly attacked
    /// at every step indefinitely.
    pub fn strong_ratio(&self) -> f64 {
        self.rho / self.beta_strong
    }
}

impl EnergySupply for AttackerParams {
    fn kappa(&self) -> f64 {
        self.kappa
    }
    fn rho(&self) -> f64 {
        self.rho
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefenderParams {
    pub kappa: f64,
    pub rho: f64,
    pub beta: f64,
}

impl DefenderParams {
    pub fn validate(&self) -> Result<(), EnergyError> {
        check_supply("defender", self.kappa, self.rho)?;
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(EnergyError::DefenderCost(self.beta));
        }
        Ok(())
    }

    pub fn cost(&self, recovered: usize) -> f64 {
        self.beta * recovered as f64
    }
}

impl EnergySupply for DefenderParams {
    fn kappa(&self) -> f64 {
        self.kappa
    }
    fn rho(&self) -> f64 {
        self.rho
    }
}

fn check_supply(who: &'static str, kappa: f64, rho: f64) -> Result<(), EnergyError> {
    if rho > 0.0 && kappa >= rho && kappa.is_finite() {
        Ok(())
    } else {
        Err(EnergyError::Supply(who, kappa, rho))
    }
}

/// Energy consumed so far and the step of the most recent charge.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub spent: f64,
    pub k: u64,
}

impl EnergyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Energy that may still be spent at step `k`.
    pub fn available<S: EnergySupply>(&self, params: &S, k: u64) -> f64 {
        params.supplied(k) - self.spent
    }

    /// Records a spend of `cost` at step `k`.
    pub fn charge<S: EnergySupply>(
        &self,
        params: &S,
        cost: f64,
        k: u64,
    ) -> Result<EnergyLedger, EnergyError> {
        if k < self.k {
            return Err(EnergyError::StepRegression { ledger: self.k, k });
        }
        let available = self.available(params, k);
        if cost > available + FEASIBILITY_TOLERANCE {
            return Err(EnergyError::Overdraft { cost, available, k });
        }
        Ok(EnergyLedger {
            spent: self.spent + cost,
            k,
        })
    }
}

/// Energy each player spends on one step's action.
pub fn action_cost(act: &ActionTriple, ap: &AttackerParams, dp: &DefenderParams) -> (f64, f64) {
    (
        ap.cost(act.strong().len(), act.normal().len()),
        dp.cost(act.recovered().len()),
    )
}
