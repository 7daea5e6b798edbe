//! Joint-moment convergence runs and their reports.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::conditions::{
    check_contraction_conditions, check_fmt_conditions, ContractionKind, FmtCondition,
};
use super::family::{Builder, KernelFamily};
use super::Theorem;
use crate::chaos::Flavor;
use crate::distributions::LimitSpec;
use crate::error::{ChaosError, Result};
use crate::moments::{estimate_word_count, moment, MomentOptions};
use crate::partition::LabelWord;
use crate::Kernel;

/// Cap on the total number of balanced words one run may evaluate.
pub const DEFAULT_VERIFY_WORD_CAP: u128 = 200_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    /// Absolute tolerance; exact families must meet it at the largest `n`.
    pub abs_tol: f64,
    /// A decaying series must shrink by `(n_last / n_first)^rate`.
    pub decay_rate: f64,
    pub word_cap: u128,
    pub parallel: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            abs_tol: 1e-9,
            decay_rate: 2.0 / 3.0,
            word_cap: DEFAULT_VERIFY_WORD_CAP,
            parallel: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// One error value per entry of `n_list`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesCheck {
    pub values: Vec<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FmtSeries {
    pub condition: FmtCondition,
    pub i: usize,
    pub j: usize,
    pub target: f64,
    pub computed: Vec<f64>,
    pub residuals: SeriesCheck,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionSeries {
    pub kind: ContractionKind,
    pub r: usize,
    pub i: usize,
    pub j: usize,
    pub norms: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub label_word: String,
    pub n: usize,
    pub computed: f64,
    pub target: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSeries {
    pub label_word: String,
    pub target: f64,
    pub computed: Vec<f64>,
    pub errors: SeriesCheck,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportRecord {
    pub n: usize,
    pub label: usize,
    pub support_measure: f64,
    pub sup_bound: f64,
}

/// Status of the boundedness hypotheses on the kernels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub uniform_support_declared: bool,
    /// Support measures do not grow along `n_list`.
    pub uniform_support_observed: bool,
    pub supports: Vec<SupportRecord>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_seconds: f64,
    pub moments_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub theorem: Theorem,
    pub builder: Builder,
    pub flavor: Flavor,
    pub q: usize,
    pub target: LimitSpec,
    pub exact_family: bool,
    pub n_list: Vec<usize>,
    pub max_order: usize,
    pub abs_tol: f64,
    pub decay_rate: f64,
    pub word_count: u128,
    pub hypotheses: HypothesisReport,
    pub fmt: Vec<FmtSeries>,
    pub contractions: Vec<ContractionSeries>,
    pub moments: Vec<MomentSeries>,
    pub verdict: Verdict,
    /// Human-readable reasons for a failing verdict.
    pub failures: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn moment_rows(&self) -> Vec<MomentRow> {
        let mut rows = Vec::new();
        for s in &self.moments {
            for (k, &n) in self.n_list.iter().enumerate() {
                rows.push(MomentRow {
                    label_word: s.label_word.clone(),
                    n,
                    computed: s.computed[k],
                    target: s.target,
                    error: s.errors.values[k],
                });
            }
        }
        rows
    }

    /// Moment-error table as CSV with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label_word,n,computed,target,error\n");
        for r in self.moment_rows() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.label_word, r.n, r.computed, r.target, r.error
            ));
        }
        out
    }

    pub fn max_final_moment_error(&self) -> f64 {
        self.moments
            .iter()
            .filter_map(|s| s.errors.values.last().copied())
            .fold(0.0, f64::max)
    }
}

/// Pass rule for one error series. Exact families must reach `abs_tol` at
/// the last `n`. Otherwise a series passes if it already sits below
/// `abs_tol`, or if it never increases and its last value is at most
/// `first · (n_first / n_last)^rate`.
pub fn series_passes(values: &[f64], n_list: &[usize], exact: bool, opts: &VerifyOptions) -> bool {
    let Some(&last) = values.last() else {
        return true;
    };
    if !last.is_finite() {
        return false;
    }
    if last <= opts.abs_tol {
        return true;
    }
    if exact || values.len() < 2 {
        return false;
    }
    let first = values[0];
    let monotone = values
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-12) + opts.abs_tol);
    let ratio = n_list[0] as f64 / n_list[n_list.len() - 1] as f64;
    monotone && last <= first * ratio.powf(opts.decay_rate)
}

fn check_series(values: Vec<f64>, n_list: &[usize], exact: bool, opts: &VerifyOptions) -> SeriesCheck {
    let pass = series_passes(&values, n_list, exact, opts);
    SeriesCheck { values, pass }
}

fn validate_inputs(family: &KernelFamily, theorem: Theorem, n_list: &[usize], max_order: usize) -> Result<()> {
    if max_order < 2 {
        return Err(ChaosError::Domain(format!("max_order must be at least 2, got {max_order}")));
    }
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(ChaosError::Domain("n_list must be nonempty with positive entries".into()));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ChaosError::Domain("n_list must be strictly increasing".into()));
    }
    if family.flavor() != theorem.flavor() {
        return Err(ChaosError::Domain(format!(
            "{} concerns {} integrals but the family is {}",
            theorem.name(),
            theorem.flavor(),
            family.flavor()
        )));
    }
    Ok(())
}

/// Total balanced words a run will evaluate.
pub fn estimate_run_words(family: &KernelFamily, n_list: &[usize], max_order: usize) -> u128 {
    let labels = family.labels().len() as u128;
    let per_n: u128 = (2..=max_order)
        .map(|m| {
            labels
                .saturating_pow(m as u32)
                .saturating_mul(estimate_word_count(family.flavor(), &vec![family.q(); m]))
        })
        .fold(0u128, u128::saturating_add);
    per_n.saturating_mul(n_list.len() as u128)
}

fn hypothesis_notes(family: &KernelFamily, theorem: Theorem) -> Vec<String> {
    let q = family.q();
    let mut notes = Vec::new();
    match theorem {
        Theorem::PoissonFreeFamily => {
            if q % 2 == 1 {
                notes.push(format!(
                    "q = {q} is odd; the theorem is stated for even q, only its conclusion is checked"
                ));
            }
            if !family.uniform_support() {
                notes.push(
                    "kernel supports grow with n, so the uniform support bound is not met; \
                     only the conclusion is checked"
                        .into(),
                );
            }
        }
        Theorem::PoissonEqualParam if q < 2 => notes.push(format!(
            "q = {q}; the theorem is stated for q >= 2, only its conclusion is checked"
        )),
        _ => {}
    }
    notes
}

fn supports(n_list: &[usize], kernels: &[BTreeMap<usize, Kernel>]) -> Vec<SupportRecord> {
    let mut out = Vec::new();
    for (&n, ks) in n_list.iter().zip(kernels) {
        for (&label, k) in ks {
            let b = k.bounds();
            out.push(SupportRecord {
                n,
                label,
                support_measure: b.support_measure,
                sup_bound: b.sup_bound,
            });
        }
    }
    out
}

/// Runs every check of `theorem` on `family` along `n_list`.
pub fn verify(
    family: &KernelFamily,
    theorem: Theorem,
    max_order: usize,
    n_list: &[usize],
    opts: &VerifyOptions,
) -> Result<ConvergenceReport> {
    let started = Instant::now();
    validate_inputs(family, theorem, n_list, max_order)?;
    let word_count = estimate_run_words(family, n_list, max_order);
    if word_count > opts.word_cap {
        return Err(ChaosError::ResourceGuard {
            estimated: word_count,
            cap: opts.word_cap,
        });
    }
    let exact = family.is_exact();
    let labels = family.labels();
    let target = family.target().clone();
    let kernels: Vec<BTreeMap<usize, Kernel>> = n_list
        .iter()
        .map(|&n| family.kernels_at(n))
        .collect::<Result<_>>()?;

    let pairs: Vec<(usize, usize)> = labels
        .iter()
        .flat_map(|&i| labels.iter().map(move |&j| (i, j)))
        .collect();

    // Low-order conditions, keyed by (condition, i, j) in first-seen order.
    let mut fmt_rows: Vec<FmtSeries> = Vec::new();
    let mut contraction_rows: Vec<ContractionSeries> = Vec::new();
    for &(i, j) in &pairs {
        let mut per_n = Vec::with_capacity(n_list.len());
        let mut norms_per_n = Vec::with_capacity(n_list.len());
        for &n in n_list {
            per_n.push(check_fmt_conditions(family, i, j, n, theorem)?);
            norms_per_n.push(check_contraction_conditions(family, i, j, n)?);
        }
        for (k, first) in per_n[0].iter().enumerate() {
            let computed: Vec<f64> = per_n.iter().map(|rs| rs[k].computed).collect();
            let residuals: Vec<f64> = per_n.iter().map(|rs| rs[k].residual).collect();
            fmt_rows.push(FmtSeries {
                condition: first.condition,
                i,
                j,
                target: first.target,
                computed,
                residuals: check_series(residuals, n_list, exact, opts),
            });
        }
        for (k, first) in norms_per_n[0].iter().enumerate() {
            contraction_rows.push(ContractionSeries {
                kind: first.kind,
                r: first.r,
                i,
                j,
                norms: norms_per_n.iter().map(|ns| ns[k].value).collect(),
            });
        }
    }

    let moment_start = Instant::now();
    let words: Vec<LabelWord> = (2..=max_order).flat_map(|m| LabelWord::all(&labels, m)).collect();
    let inner = MomentOptions {
        parallel: false,
        word_cap: opts.word_cap,
        ..MomentOptions::default()
    };
    let eval = |w: &LabelWord| -> Result<MomentSeries> {
        let t = target.target_moment(w)?;
        let mut computed = Vec::with_capacity(n_list.len());
        for ks in &kernels {
            let row: Vec<&Kernel> = w.labels().iter().map(|l| &ks[l]).collect();
            computed.push(moment(family.flavor(), &row, &inner)?.value);
        }
        let errors = computed.iter().map(|c| (c - t).abs()).collect();
        Ok(MomentSeries {
            label_word: w.to_string(),
            target: t,
            computed,
            errors: check_series(errors, n_list, exact, opts),
        })
    };
    let moments: Vec<MomentSeries> = if opts.parallel {
        words.par_iter().map(eval).collect::<Result<_>>()?
    } else {
        words.iter().map(eval).collect::<Result<_>>()?
    };
    let moments_seconds = moment_start.elapsed().as_secs_f64();

    let supports = supports(n_list, &kernels);
    let measures_at = |n: usize| {
        supports
            .iter()
            .filter(|s| s.n == n)
            .map(|s| s.support_measure)
            .fold(0.0, f64::max)
    };
    let first_measure = measures_at(n_list[0]);
    let uniform_support_observed = n_list
        .iter()
        .all(|&n| measures_at(n) <= first_measure * (1.0 + 1e-12));

    let mut failures = Vec::new();
    for s in &fmt_rows {
        if !s.residuals.pass {
            failures.push(format!(
                "{} residual for ({}, {}) did not converge: {:?}",
                s.condition.name(),
                s.i,
                s.j,
                s.residuals.values
            ));
        }
    }
    for s in &moments {
        if !s.errors.pass {
            failures.push(format!(
                "moment {} did not converge to {}: errors {:?}",
                s.label_word, s.target, s.errors.values
            ));
        }
    }
    let verdict = if failures.is_empty() { Verdict::Pass } else { Verdict::Fail };
    Ok(ConvergenceReport {
        theorem,
        builder: family.builder(),
        flavor: family.flavor(),
        q: family.q(),
        target,
        exact_family: exact,
        n_list: n_list.to_vec(),
        max_order,
        abs_tol: opts.abs_tol,
        decay_rate: opts.decay_rate,
        word_count,
        hypotheses: HypothesisReport {
            uniform_support_declared: family.uniform_support(),
            uniform_support_observed,
            supports,
            notes: hypothesis_notes(family, theorem),
        },
        fmt: fmt_rows,
        contractions: contraction_rows,
        moments,
        verdict,
        failures,
        timings: Some(Timings {
            total_seconds: started.elapsed().as_secs_f64(),
            moments_seconds,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::family::{FamilyConfig, TargetShape};

    fn run(cfg: &FamilyConfig, theorem: Theorem) -> ConvergenceReport {
        let fam = KernelFamily::from_config(cfg, theorem.shape()).unwrap();
        verify(&fam, theorem, cfg.max_order, &cfg.n_list, &VerifyOptions::default()).unwrap()
    }

    #[test]
    fn exact_wigner_passes() {
        let cfg = FamilyConfig::new(Builder::ExactWigner, 2, &[3.0]).with_n_list(&[1, 4]);
        let rep = run(&cfg, Theorem::WignerFreeFamily);
        assert!(rep.passed(), "{:?}", rep.failures);
        assert!(rep.max_final_moment_error() < 1e-9);
        assert_eq!(rep.moment_rows().len(), 5 * 2);
    }

    #[test]
    fn counterexample_fails() {
        let cfg = FamilyConfig::new(Builder::Counterexample, 2, &[1.0]).with_n_list(&[8, 64]);
        let rep = run(&cfg, Theorem::WignerFreeFamily);
        assert!(!rep.passed());
        let cov = rep.fmt.iter().find(|s| s.condition == FmtCondition::Covariance).unwrap();
        assert!(cov.residuals.pass);
        let m4 = rep.fmt.iter().find(|s| s.condition == FmtCondition::FourthMoment).unwrap();
        assert!(!m4.residuals.pass);
    }

    #[test]
    fn spread_q2_passes_with_flag() {
        let cfg = FamilyConfig::new(Builder::PoissonSpread, 2, &[1.0, 2.0])
            .with_n_list(&[8, 64])
            .with_max_order(5);
        let rep = run(&cfg, Theorem::PoissonFreeFamily);
        assert!(rep.passed(), "{:?}", rep.failures);
        assert!(!rep.hypotheses.uniform_support_observed);
        assert!(!rep.hypotheses.notes.is_empty());
    }

    #[test]
    fn resource_guard_trips() {
        let cfg = FamilyConfig::new(Builder::ExactWigner, 2, &[1.0, 1.0, 1.0]);
        let fam = KernelFamily::from_config(&cfg, TargetShape::FreeFamily).unwrap();
        let opts = VerifyOptions {
            word_cap: 10,
            ..VerifyOptions::default()
        };
        assert!(matches!(
            verify(&fam, Theorem::WignerFreeFamily, 6, &[1], &opts),
            Err(ChaosError::ResourceGuard { .. })
        ));
        assert!(verify(&fam, Theorem::WignerFreeFamily, 1, &[1], &opts).is_err());
    }

    #[test]
    fn series_rule() {
        let o = VerifyOptions::default();
        assert!(series_passes(&[1.0, 0.2], &[8, 64], false, &o));
        assert!(!series_passes(&[1.0, 0.3], &[8, 64], false, &o));
        assert!(!series_passes(&[1.0, 0.2], &[8, 64], true, &o));
        assert!(series_passes(&[0.0, 0.0], &[8, 64], true, &o));
        assert!(!series_passes(&[1.0, 2.0, 0.1], &[8, 16, 64], false, &o));
    }

    #[test]
    fn parallel_matches_sequential() {
        let cfg = FamilyConfig::new(Builder::PerturbedWigner, 2, &[1.0, 2.0])
            .with_n_list(&[8, 64])
            .with_max_order(4)
            .with_seed(3);
        let fam = KernelFamily::from_config(&cfg, TargetShape::FreeFamily).unwrap();
        let seq = VerifyOptions {
            parallel: false,
            ..VerifyOptions::default()
        };
        let mut a = verify(&fam, Theorem::WignerFreeFamily, 4, &cfg.n_list, &seq).unwrap();
        let mut b = verify(&fam, Theorem::WignerFreeFamily, 4, &cfg.n_list, &VerifyOptions::default()).unwrap();
        a.timings = None;
        b.timings = None;
        assert_eq!(a, b);
    }
}
