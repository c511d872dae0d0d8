use core::fmt;
use core::ops::{Add, AddAssign, Mul};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An amount in minor currency units (cents).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Money(pub u64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub const fn cents(amount: u64) -> Self {
        Money(amount)
    }

    pub const fn get(self) -> u64 {
        self.0
    }
}

impl Add for Money {
    type Output = Money;

    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl Mul<u64> for Money {
    type Output = Money;

    fn mul(self, rhs: u64) -> Money {
        Money(self.0 * rhs)
    }
}

impl fmt::Display for Money {
    /// Formats as dollars, e.g. `$0.12`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "${}.{:02}", self.0 / 100, self.0 % 100)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PayoffError {
    #[error("payoff `{field}` must be a non-negative integer number of cents, got {value}")]
    Negative { field: &'static str, value: i64 },
}

/// Incentives for one round: unconditional base pay plus the bonuses for
/// proposing (`pi`), voting (`nu`) and abstaining (`alpha`).
///
/// Fixed for the lifetime of a round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PayoffStructure {
    #[serde(default)]
    pub base: Money,
    #[serde(rename = "pi")]
    pub propose: Money,
    #[serde(rename = "nu")]
    pub vote: Money,
    #[serde(rename = "alpha")]
    pub abstain: Money,
}

impl PayoffStructure {
    /// Bonuses in cents, zero base pay.
    pub const fn new(propose: u64, vote: u64, abstain: u64) -> Self {
        PayoffStructure {
            base: Money(0),
            propose: Money(propose),
            vote: Money(vote),
            abstain: Money(abstain),
        }
    }

    pub const fn with_base(mut self, base: u64) -> Self {
        self.base = Money(base);
        self
    }

    /// Validates signed inputs, as received from a request body or CLI.
    pub fn from_signed(base: i64, propose: i64, vote: i64, abstain: i64) -> Result<Self, PayoffError> {
        let check = |field, value: i64| {
            u64::try_from(value)
                .map(Money)
                .map_err(|_| PayoffError::Negative { field, value })
        };
        Ok(PayoffStructure {
            base: check("base", base)?,
            propose: check("pi", propose)?,
            vote: check("nu", vote)?,
            abstain: check("alpha", abstain)?,
        })
    }

    /// Multiplies the three bonuses (not the base) by `k`.
    pub fn scaled(self, k: u64) -> Self {
        PayoffStructure {
            base: self.base,
            propose: self.propose * k,
            vote: self.vote * k,
            abstain: self.abstain * k,
        }
    }

    pub(crate) fn triple(&self) -> (u64, u64, u64) {
        (self.propose.0, self.vote.0, self.abstain.0)
    }
}

impl fmt::Display for PayoffStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(pi={}, nu={}, alpha={})",
            self.propose.0, self.vote.0, self.abstain.0
        )
    }
}
