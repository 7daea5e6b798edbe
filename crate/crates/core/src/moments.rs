//! Mixed moments `φ(I(f_1)…I(f_m))` by word enumeration or repeated products.
//!
//! The word path walks the tree of fold prefixes depth first, so every
//! prefix contraction is computed once and shared by all words extending it.
//! Subtrees that cannot reach a scalar, or whose prefix kernel is zero, are
//! skipped. Sums are formed child by child in canonical step order, which
//! makes the parallel and sequential evaluations bit-identical.

use std::borrow::Borrow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chaos::{ChaosElement, Flavor};
use crate::error::{ChaosError, Result};
use crate::json::KernelJson;
use crate::kernel::StepKernel;
use crate::scalar::Scalar;
use crate::words::{steps_for, ContractionWord, StarWord, Step, WordCounter};

/// Default cap on the number of balanced words one moment may enumerate.
pub const DEFAULT_WORD_CAP: u128 = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentPath {
    Words,
    Product,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MomentOptions {
    pub path: MomentPath,
    pub word_cap: u128,
    pub parallel: bool,
}

impl Default for MomentOptions {
    fn default() -> Self {
        MomentOptions {
            path: MomentPath::Words,
            word_cap: DEFAULT_WORD_CAP,
            parallel: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentResult<S> {
    pub value: S,
    pub path: MomentPath,
    /// Number of balanced words for the factor orders.
    pub word_count: u128,
}

fn flavor_allows_star(flavor: Flavor) -> bool {
    flavor == Flavor::Poisson
}

/// Applies one fold step.
pub fn contract_step<S: Scalar>(
    h: &StepKernel<S>,
    f: &StepKernel<S>,
    step: Step,
) -> Result<StepKernel<S>> {
    if step.star {
        h.star_contract(f, step.r)
    } else {
        h.arc_contract(f, step.r)
    }
}

fn validate<S: Scalar, K: Borrow<StepKernel<S>>>(kernels: &[K]) -> Result<Vec<usize>> {
    let first = kernels
        .first()
        .ok_or_else(|| ChaosError::Domain("moment of an empty product".into()))?
        .borrow();
    for k in kernels {
        if k.borrow().grid() != first.grid() {
            return Err(ChaosError::GridMismatch);
        }
    }
    Ok(kernels.iter().map(|k| k.borrow().order()).collect())
}

/// Number of balanced words for the given flavor and factor orders.
pub fn estimate_word_count(flavor: Flavor, orders: &[usize]) -> u128 {
    WordCounter::new(orders, flavor_allows_star(flavor)).total()
}

/// Left-to-right fold of `kernels` along `steps`.
pub fn eval_steps<S: Scalar, K: Borrow<StepKernel<S>>>(
    kernels: &[K],
    steps: &[Step],
) -> Result<StepKernel<S>> {
    validate(kernels)?;
    if steps.len() + 1 != kernels.len() {
        return Err(ChaosError::Domain(format!(
            "{} steps cannot fold {} kernels",
            steps.len(),
            kernels.len()
        )));
    }
    let mut h = kernels[0].borrow().clone();
    for (step, f) in steps.iter().zip(&kernels[1..]) {
        h = contract_step(&h, f.borrow(), *step)?;
    }
    Ok(h)
}

/// `(…(f_1 ⌢^{r_1} f_2) ⌢^{r_2} …) ⌢^{r_{m-1}} f_m`.
pub fn eval_arc_word<S: Scalar, K: Borrow<StepKernel<S>>>(
    kernels: &[K],
    w: &ContractionWord,
) -> Result<StepKernel<S>> {
    check_word_shape(kernels, w.q(), w.m())?;
    eval_steps(kernels, &w.steps())
}

/// Scalar value of a balanced Poisson word.
pub fn eval_star_word<S: Scalar, K: Borrow<StepKernel<S>>>(
    kernels: &[K],
    w: &StarWord,
) -> Result<S> {
    check_word_shape(kernels, w.q(), w.m())?;
    let h = eval_steps(kernels, &w.steps())?;
    h.scalar_value().ok_or_else(|| {
        ChaosError::Domain(format!("word {w} does not end in a scalar (order {})", h.order()))
    })
}

fn check_word_shape<S: Scalar, K: Borrow<StepKernel<S>>>(
    kernels: &[K],
    q: usize,
    m: usize,
) -> Result<()> {
    if kernels.len() != m {
        return Err(ChaosError::Domain(format!(
            "word for {m} factors applied to {} kernels",
            kernels.len()
        )));
    }
    for k in kernels {
        if k.borrow().order() != q {
            return Err(ChaosError::OrderMismatch {
                expected: q,
                found: k.borrow().order(),
            });
        }
    }
    Ok(())
}

fn subtree_sum<S: Scalar, K: Borrow<StepKernel<S>>>(
    kernels: &[K],
    counter: &WordCounter,
    p: usize,
    h: &StepKernel<S>,
) -> Result<S> {
    if p == kernels.len() {
        return Ok(h.scalar_value().unwrap_or_else(S::zero));
    }
    let mut sum = S::zero();
    for (_, step) in children(counter, p, h.order()) {
        let next = contract_step(h, kernels[p].borrow(), step)?;
        if !next.is_zero() {
            sum += subtree_sum(kernels, counter, p + 1, &next)?;
        }
    }
    Ok(sum)
}

fn children(counter: &WordCounter, p: usize, d: usize) -> Vec<(usize, Step)> {
    let q = counter.orders()[p];
    steps_for(d, q, counter.allow_star())
        .into_iter()
        .filter_map(|s| s.apply(d, q).map(|nd| (nd, s)))
        .filter(|&(nd, _)| counter.count(p + 1, nd) > 0)
        .collect()
}

fn words_moment<S: Scalar, K: Borrow<StepKernel<S>> + Sync>(
    kernels: &[K],
    counter: &WordCounter,
    parallel: bool,
) -> Result<S> {
    let root = kernels[0].borrow();
    if kernels.len() == 1 {
        return Ok(root.scalar_value().unwrap_or_else(S::zero));
    }
    let kids = children(counter, 1, root.order());
    let eval = |&(_, step): &(usize, Step)| -> Result<S> {
        let next = contract_step(root, kernels[1].borrow(), step)?;
        if next.is_zero() {
            return Ok(S::zero());
        }
        subtree_sum(kernels, counter, 2, &next)
    };
    let parts: Vec<Result<S>> = if parallel {
        kids.par_iter().map(eval).collect()
    } else {
        kids.iter().map(eval).collect()
    };
    let mut sum = S::zero();
    for part in parts {
        let v = part?;
        if !v.is_zero() {
            sum += v;
        }
    }
    Ok(sum)
}

/// `φ` of the product computed by multiplying chaos elements and reading the
/// constant term.
pub fn product_moment<S: Scalar, K: Borrow<StepKernel<S>>>(
    flavor: Flavor,
    kernels: &[K],
) -> Result<S> {
    validate(kernels)?;
    let mut acc = ChaosElement::integral(flavor, kernels[0].borrow().clone());
    for k in &kernels[1..] {
        acc = acc.multiply(&ChaosElement::integral(flavor, k.borrow().clone()))?;
    }
    Ok(acc.expectation())
}

/// Moment with explicit path selection and resource guard.
pub fn moment<S: Scalar, K: Borrow<StepKernel<S>> + Sync>(
    flavor: Flavor,
    kernels: &[K],
    opts: &MomentOptions,
) -> Result<MomentResult<S>> {
    let orders = validate(kernels)?;
    let counter = WordCounter::new(&orders, flavor_allows_star(flavor));
    let word_count = counter.total();
    if word_count > opts.word_cap {
        return Err(ChaosError::ResourceGuard {
            estimated: word_count,
            cap: opts.word_cap,
        });
    }
    let value = match opts.path {
        MomentPath::Words => words_moment(kernels, &counter, opts.parallel)?,
        MomentPath::Product => product_moment(flavor, kernels)?,
    };
    Ok(MomentResult {
        value,
        path: opts.path,
        word_count,
    })
}

/// `φ(I(f_1)…I(f_m))` in the Wigner algebra, by word enumeration.
pub fn wigner_moment<S: Scalar, K: Borrow<StepKernel<S>> + Sync>(kernels: &[K]) -> Result<S> {
    Ok(moment(Flavor::Wigner, kernels, &MomentOptions::default())?.value)
}

/// `φ(I(f_1)…I(f_m))` in the Poisson algebra, by word enumeration.
pub fn poisson_moment<S: Scalar, K: Borrow<StepKernel<S>> + Sync>(kernels: &[K]) -> Result<S> {
    Ok(moment(Flavor::Poisson, kernels, &MomentOptions::default())?.value)
}

/// A kernel given inline or as a path to a kernel JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelRef {
    Path(String),
    Inline(KernelJson),
}

/// `{ "flavor", "kernels", "m" }`. A single kernel is repeated `m` times;
/// otherwise the list must have exactly `m` entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRequest {
    pub flavor: Flavor,
    pub kernels: Vec<KernelRef>,
    pub m: usize,
}

impl MomentRequest {
    /// Expands the kernel list to exactly `m` positions.
    pub fn positions(&self) -> Result<Vec<usize>> {
        match self.kernels.len() {
            0 => Err(ChaosError::Domain("no kernels given".into())),
            1 => Ok(vec![0; self.m]),
            n if n == self.m => Ok((0..n).collect()),
            n => Err(ChaosError::Domain(format!(
                "{n} kernels given for a moment of order {}",
                self.m
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentResponse {
    pub value: f64,
    pub path: MomentPath,
    pub word_count: u64,
}

impl MomentResponse {
    pub fn from_result<S: Scalar>(r: &MomentResult<S>) -> Self {
        MomentResponse {
            value: r.value.to_f64_lossy(),
            path: r.path,
            word_count: u64::try_from(r.word_count).unwrap_or(u64::MAX),
        }
    }
}
