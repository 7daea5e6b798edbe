//! Low-order moment conditions and contraction-norm conditions for a family.

use serde::{Deserialize, Serialize};

use super::family::{KernelFamily, TargetShape};
use super::Theorem;
use crate::chaos::Flavor;
use crate::error::{ChaosError, Result};
use crate::kernel::StepKernel;
use crate::moments::{eval_arc_word, moment, MomentOptions};
use crate::partition::LabelWord;
use crate::words::{enumerate_words, WordSet};
use crate::Kernel;

/// Which low-order moment a residual refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FmtCondition {
    /// `⟨f_i, f_j⟩`.
    Covariance,
    /// `φ(I_i^4)`.
    FourthMoment,
    /// `φ(I_i^3)`.
    ThirdMoment,
    /// `φ(I_i^2 I_j^2)`.
    MixedFourth,
    /// `φ(I_i I_j^2)`.
    MixedThird,
}

impl FmtCondition {
    pub fn name(self) -> &'static str {
        match self {
            FmtCondition::Covariance => "covariance",
            FmtCondition::FourthMoment => "fourth_moment",
            FmtCondition::ThirdMoment => "third_moment",
            FmtCondition::MixedFourth => "mixed_fourth",
            FmtCondition::MixedThird => "mixed_third",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FmtResidual {
    pub condition: FmtCondition,
    pub i: usize,
    pub j: usize,
    pub computed: f64,
    pub target: f64,
    /// `|computed - target|`.
    pub residual: f64,
}

impl FmtResidual {
    fn new(condition: FmtCondition, i: usize, j: usize, computed: f64, target: f64) -> Self {
        FmtResidual {
            condition,
            i,
            j,
            computed,
            target,
            residual: (computed - target).abs(),
        }
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}

fn check_theorem_fits(family: &KernelFamily, theorem: Theorem) -> Result<()> {
    if family.flavor() != theorem.flavor() {
        return Err(ChaosError::Domain(format!(
            "{} concerns {} integrals but the family is {}",
            theorem.name(),
            theorem.flavor(),
            family.flavor()
        )));
    }
    if theorem.flavor() == Flavor::Wigner && family.q() % 2 != 0 {
        return Err(ChaosError::Domain(format!(
            "{} requires an even order q, got {}",
            theorem.name(),
            family.q()
        )));
    }
    if theorem.shape() != family_shape(family) {
        return Err(ChaosError::Domain(format!(
            "{} needs a {:?} target but the family declares {}",
            theorem.name(),
            theorem.shape(),
            family.target().kind()
        )));
    }
    Ok(())
}

pub(crate) fn family_shape(family: &KernelFamily) -> TargetShape {
    match family.target() {
        crate::distributions::LimitSpec::FreeFamily(_) => TargetShape::FreeFamily,
        crate::distributions::LimitSpec::EqualParam(_) => TargetShape::EqualParam,
    }
}

fn lambda_of(family: &KernelFamily, label: usize) -> Result<f64> {
    match family.target() {
        crate::distributions::LimitSpec::FreeFamily(s) => s.lambda(label),
        crate::distributions::LimitSpec::EqualParam(s) => Ok(s.lambda()),
    }
}

fn mom(flavor: Flavor, ks: &[&Kernel]) -> Result<f64> {
    let opts = MomentOptions {
        parallel: false,
        ..MomentOptions::default()
    };
    Ok(moment(flavor, ks, &opts)?.value)
}

/// Residuals of the low-order moment conditions of `theorem` for the pair
/// `(i, j)` at index `n`.
pub fn check_fmt_conditions(
    family: &KernelFamily,
    i: usize,
    j: usize,
    n: usize,
    theorem: Theorem,
) -> Result<Vec<FmtResidual>> {
    check_theorem_fits(family, theorem)?;
    let flavor = family.flavor();
    let fi = family.kernel(n, i)?;
    let fj = family.kernel(n, j)?;
    let (ai, aj) = (family.alpha(i)?, family.alpha(j)?);
    let cov = fi.inner(&fj)?;
    let mut out = Vec::new();
    match theorem.shape() {
        TargetShape::FreeFamily => {
            let li = lambda_of(family, i)?;
            let lj = lambda_of(family, j)?;
            let cov_target = if i == j { li * ai * ai } else { 0.0 };
            out.push(FmtResidual::new(FmtCondition::Covariance, i, j, cov, cov_target));
            if i == j {
                let m4 = mom(flavor, &[&fi, &fi, &fi, &fi])?;
                out.push(FmtResidual::new(
                    FmtCondition::FourthMoment,
                    i,
                    j,
                    m4,
                    (2.0 * li * li + li) * ai.powi(4),
                ));
                let m3 = mom(flavor, &[&fi, &fi, &fi])?;
                out.push(FmtResidual::new(FmtCondition::ThirdMoment, i, j, m3, li * ai.powi(3)));
            } else {
                let m22 = mom(flavor, &[&fi, &fi, &fj, &fj])?;
                out.push(FmtResidual::new(
                    FmtCondition::MixedFourth,
                    i,
                    j,
                    m22,
                    li * lj * ai * ai * aj * aj,
                ));
                let m12 = mom(flavor, &[&fi, &fj, &fj])?;
                out.push(FmtResidual::new(FmtCondition::MixedThird, i, j, m12, 0.0));
            }
        }
        TargetShape::EqualParam => {
            let l = lambda_of(family, i)?;
            out.push(FmtResidual::new(FmtCondition::Covariance, i, j, cov, ai * aj * l));
            let m22 = mom(flavor, &[&fi, &fi, &fj, &fj])?;
            out.push(FmtResidual::new(
                FmtCondition::MixedFourth,
                i,
                j,
                m22,
                (2.0 * l * l + l) * ai * ai * aj * aj,
            ));
            let m12 = mom(flavor, &[&fi, &fj, &fj])?;
            out.push(FmtResidual::new(FmtCondition::MixedThird, i, j, m12, l * ai * aj * aj));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractionKind {
    /// `‖g_i ⌢^r g_j‖`.
    Arc,
    /// `‖g_i ⋆_r^{r-1} g_j‖`.
    Star,
    /// `‖g_i ⌢^r g_j - g_j‖`.
    ArcFixedPoint,
    /// `‖g_i ⋆_r^{r-1} g_j - g_j‖`.
    StarFixedPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionNorm {
    pub kind: ContractionKind,
    pub r: usize,
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Contractions that must vanish (or reach a fixed point) for a pair, as
/// `(kind, r)`. `paired` selects the list used for equal labels and for
/// equal-parameter targets.
pub fn contraction_list(flavor: Flavor, q: usize, paired: bool) -> Result<Vec<(ContractionKind, usize)>> {
    use ContractionKind::*;
    let mut out = Vec::new();
    if q == 0 {
        return Ok(out);
    }
    match (flavor, q % 2 == 0) {
        (Flavor::Wigner, false) => {
            return Err(ChaosError::Domain(format!(
                "Wigner contraction conditions need an even order, got q = {q}"
            )))
        }
        (_, true) => {
            let half = q / 2;
            if paired {
                out.push((ArcFixedPoint, half));
            }
            out.extend((1..q).filter(|&r| !paired || r != half).map(|r| (Arc, r)));
            if flavor == Flavor::Poisson {
                out.extend((1..=q).map(|r| (Star, r)));
            }
        }
        (Flavor::Poisson, false) => {
            let mid = (q + 1) / 2;
            if paired {
                out.push((StarFixedPoint, mid));
            }
            out.extend((1..q).map(|r| (Arc, r)));
            out.extend((1..=q).filter(|&r| !paired || r != mid).map(|r| (Star, r)));
        }
    }
    Ok(out)
}

/// Contraction norms for `(i, j)` at index `n`, evaluated on the normalized
/// kernels `g = f / α`.
pub fn check_contraction_conditions(
    family: &KernelFamily,
    i: usize,
    j: usize,
    n: usize,
) -> Result<Vec<ContractionNorm>> {
    let paired = i == j || family_shape(family) == TargetShape::EqualParam;
    let list = contraction_list(family.flavor(), family.q(), paired)?;
    let gi = family.kernel(n, i)?.scale(&(1.0 / family.alpha(i)?));
    let gj = family.kernel(n, j)?.scale(&(1.0 / family.alpha(j)?));
    list.into_iter()
        .map(|(kind, r)| {
            let value = contraction_value(&gi, &gj, kind, r)?;
            Ok(ContractionNorm { kind, r, i, j, value })
        })
        .collect()
}

fn contraction_value(gi: &Kernel, gj: &Kernel, kind: ContractionKind, r: usize) -> Result<f64> {
    let k: StepKernel<f64> = match kind {
        ContractionKind::Arc => gi.arc_contract(gj, r)?,
        ContractionKind::Star => gi.star_contract(gj, r)?,
        ContractionKind::ArcFixedPoint => gi.arc_contract(gj, r)?.sub(gj)?,
        ContractionKind::StarFixedPoint => gi.star_contract(gj, r)?.sub(gj)?,
    };
    Ok(k.norm())
}

/// Largest `|value|` over the words of `E_m` evaluated on the kernels
/// selected by `chi` at index `n`.
pub fn check_em_vanishing(family: &KernelFamily, chi: &LabelWord, n: usize) -> Result<f64> {
    let q = family.q();
    if family.flavor() != Flavor::Wigner || q % 2 != 0 {
        return Err(ChaosError::Domain(
            "E_m words are defined for Wigner families of even order".into(),
        ));
    }
    let ks = family.kernels_at(n)?;
    let kernels: Vec<&Kernel> = chi
        .labels()
        .iter()
        .map(|l| ks.get(l).ok_or(ChaosError::UnknownLabel(*l)))
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for w in enumerate_words(q, chi.len(), WordSet::E)? {
        let v = eval_arc_word(&kernels, &w)?
            .scalar_value()
            .unwrap_or(0.0)
            .abs();
        worst = worst.max(v);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::family::{Builder, FamilyConfig};

    fn fam(builder: Builder, q: usize, lambdas: &[f64], shape: TargetShape) -> KernelFamily {
        KernelFamily::from_config(&FamilyConfig::new(builder, q, lambdas), shape).unwrap()
    }

    #[test]
    fn exact_family_residuals_vanish() {
        let f = fam(Builder::ExactWigner, 2, &[3.0], TargetShape::FreeFamily);
        for r in check_fmt_conditions(&f, 1, 1, 4, Theorem::WignerFreeFamily).unwrap() {
            assert!(r.residual < 1e-9, "{r:?}");
        }
        for c in check_contraction_conditions(&f, 1, 1, 4).unwrap() {
            assert!(c.value < 1e-12);
        }
        assert!(check_fmt_conditions(&f, 1, 1, 4, Theorem::PoissonFreeFamily).is_err());
        assert!(check_fmt_conditions(&f, 1, 1, 4, Theorem::WignerEqualParam).is_err());
    }

    #[test]
    fn q1_poisson_fourth_moment() {
        let f = fam(Builder::PoissonSpread, 1, &[1.0], TargetShape::FreeFamily);
        let res = check_fmt_conditions(&f, 1, 1, 3, Theorem::PoissonFreeFamily).unwrap();
        let m4 = res.iter().find(|r| r.condition == FmtCondition::FourthMoment).unwrap();
        assert!((m4.computed - 3.0).abs() < 1e-12 && m4.target == 3.0);
    }

    #[test]
    fn spread_star_norms() {
        let f = fam(Builder::PoissonSpread, 2, &[1.0], TargetShape::FreeFamily);
        for n in [4usize, 16] {
            let norms = check_contraction_conditions(&f, 1, 1, n).unwrap();
            for c in norms {
                match c.kind {
                    ContractionKind::Star => {
                        assert!((c.value - (1.0 / n as f64).sqrt()).abs() < 1e-12)
                    }
                    _ => assert!(c.value < 1e-12),
                }
            }
        }
    }

    #[test]
    fn lists() {
        use ContractionKind::*;
        assert_eq!(contraction_list(Flavor::Wigner, 2, true).unwrap(), vec![(ArcFixedPoint, 1)]);
        assert_eq!(contraction_list(Flavor::Wigner, 2, false).unwrap(), vec![(Arc, 1)]);
        assert_eq!(
            contraction_list(Flavor::Poisson, 3, true).unwrap(),
            vec![(StarFixedPoint, 2), (Arc, 1), (Arc, 2), (Star, 1), (Star, 3)]
        );
        assert!(contraction_list(Flavor::Wigner, 3, true).is_err());
    }

    #[test]
    fn em_for_q2_is_empty() {
        let f = fam(Builder::PerturbedWigner, 2, &[2.0], TargetShape::FreeFamily);
        assert_eq!(check_em_vanishing(&f, &LabelWord::new(vec![1; 6]), 8).unwrap(), 0.0);
    }
}
