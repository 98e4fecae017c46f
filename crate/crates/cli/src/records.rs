use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Quantities a sweep can produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// 1-summing ratio of the identity into ℓ₂²ⁿ.
    Pi1L2,
    /// Same family measured in ℓ∞²ⁿ.
    Pi1Linf,
    /// `‖I: Z → ℓ₂²ⁿ‖`, witnessed lower bound.
    IdNorm,
    /// `‖I⁻¹: ℓ₂²ⁿ → Z‖`, witnessed lower bound.
    IdInvNorm,
    /// Empirical quasi-linearity defect.
    Qlc,
    /// Haar mean of `‖g‖` over a group.
    Asym,
    /// `sup ‖F(u)‖₂` over the unit sphere, lower bound.
    Phi,
    /// `‖I⁻¹: ℓ∞²ⁿ → Z‖`, witnessed lower bound.
    LinfInv,
}

impl Quantity {
    pub const ALL: [Quantity; 8] = [
        Quantity::Pi1L2,
        Quantity::Pi1Linf,
        Quantity::IdNorm,
        Quantity::IdInvNorm,
        Quantity::Qlc,
        Quantity::Asym,
        Quantity::Phi,
        Quantity::LinfInv,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Quantity::Pi1L2 => "pi1_l2",
            Quantity::Pi1Linf => "pi1_linf",
            Quantity::IdNorm => "id_norm",
            Quantity::IdInvNorm => "id_inv_norm",
            Quantity::Qlc => "qlc",
            Quantity::Asym => "asym",
            Quantity::Phi => "phi",
            Quantity::LinfInv => "linf_inv",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Quantity {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.tag() == s)
            .ok_or_else(|| CliError::UnknownTag {
                kind: "quantity",
                value: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordDirection {
    Lower,
    Upper,
    /// An estimate with no one-sided guarantee (sample means, measured sups).
    Point,
}

impl RecordDirection {
    pub fn tag(&self) -> &'static str {
        match self {
            RecordDirection::Lower => "lower",
            RecordDirection::Upper => "upper",
            RecordDirection::Point => "point",
        }
    }
}

impl From<twistlab_core::Direction> for RecordDirection {
    fn from(d: twistlab_core::Direction) -> Self {
        match d {
            twistlab_core::Direction::Lower => RecordDirection::Lower,
            twistlab_core::Direction::Upper => RecordDirection::Upper,
        }
    }
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub quantity: Quantity,
    pub n: usize,
    pub value: f64,
    pub direction: RecordDirection,
    pub seed: u64,
    pub wall_time_ms: u64,
}
