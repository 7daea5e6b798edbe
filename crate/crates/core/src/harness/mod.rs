//! Kernel families and four-moment verification.
//!
//! A [`KernelFamily`] is a deterministic sequence `n ↦ f_n^{(i)}` with a
//! declared limit. [`verify`] compares every joint moment up to a given
//! order against that limit along a list of indices and evaluates the
//! low-order moment and contraction-norm conditions alongside.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chaos::Flavor;
use crate::error::ChaosError;

pub mod conditions;
pub mod family;
pub mod verify;

pub use conditions::{
    check_contraction_conditions, check_em_vanishing, check_fmt_conditions, contraction_list,
    ContractionKind, ContractionNorm, FmtCondition, FmtResidual,
};
pub use family::{Builder, FamilyConfig, KernelFamily, LambdaParam, TargetShape};
pub use verify::{
    estimate_run_words, series_passes, verify, ConvergenceReport, Verdict, VerifyOptions,
};

/// The four limit theorems the harness checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    /// Wigner chaos of even order converging to a free family of free
    /// Poisson laws.
    WignerFreeFamily,
    /// Poisson chaos converging to a free family of free Poisson laws.
    PoissonFreeFamily,
    /// Wigner chaos of even order converging to `Z(λ, α)`.
    WignerEqualParam,
    /// Poisson chaos converging to `Z(λ, α)`.
    PoissonEqualParam,
}

impl Theorem {
    pub const ALL: [Theorem; 4] = [
        Theorem::WignerFreeFamily,
        Theorem::PoissonFreeFamily,
        Theorem::WignerEqualParam,
        Theorem::PoissonEqualParam,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Theorem::WignerFreeFamily => "wigner_free_family",
            Theorem::PoissonFreeFamily => "poisson_free_family",
            Theorem::WignerEqualParam => "wigner_equal_param",
            Theorem::PoissonEqualParam => "poisson_equal_param",
        }
    }

    /// Short numeric code accepted on the command line.
    pub fn code(self) -> &'static str {
        match self {
            Theorem::WignerFreeFamily => "2.7",
            Theorem::PoissonFreeFamily => "3.3",
            Theorem::WignerEqualParam => "4.2",
            Theorem::PoissonEqualParam => "4.4",
        }
    }

    pub fn flavor(self) -> Flavor {
        match self {
            Theorem::WignerFreeFamily | Theorem::WignerEqualParam => Flavor::Wigner,
            _ => Flavor::Poisson,
        }
    }

    pub fn shape(self) -> TargetShape {
        match self {
            Theorem::WignerFreeFamily | Theorem::PoissonFreeFamily => TargetShape::FreeFamily,
            _ => TargetShape::EqualParam,
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Theorem {
    type Err = ChaosError;

    fn from_str(s: &str) -> Result<Self, ChaosError> {
        let s = s.trim().trim_start_matches(['T', 't']);
        Theorem::ALL
            .into_iter()
            .find(|t| t.code() == s || t.name() == s)
            .ok_or_else(|| ChaosError::Parse(format!("unknown theorem {s:?}")))
    }
}
