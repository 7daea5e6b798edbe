//! Target laws: free cumulants, the moment–cumulant formula over `NC(n)`,
//! semicircle and free Poisson moments, and multidimensional free Poisson
//! families.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{ChaosError, Result};
use crate::partition::{count_r_row, enumerate_nc, LabelWord, NCPartition};

/// Free family `{a_i}` with `κ_n(a_i) = λ_i α_i^n` and vanishing mixed
/// cumulants.
#[derive(Clone, Debug, PartialEq)]
pub struct FreeFamilySpec {
    params: BTreeMap<usize, (f64, f64)>,
    centered: bool,
}

/// `Z(λ, α)`: `κ_n(b_{i_1}, …, b_{i_n}) = λ α_{i_1} ⋯ α_{i_n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct EqualParamSpec {
    lambda: f64,
    alphas: BTreeMap<usize, f64>,
    centered: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LimitSpecJson", into = "LimitSpecJson")]
pub enum LimitSpec {
    FreeFamily(FreeFamilySpec),
    EqualParam(EqualParamSpec),
}

fn check_lambda(l: f64) -> Result<()> {
    if !(l.is_finite() && l > 0.0) {
        return Err(ChaosError::Domain(format!("lambda must be positive, got {l}")));
    }
    Ok(())
}

fn check_alpha(a: f64) -> Result<()> {
    if !a.is_finite() || a == 0.0 {
        return Err(ChaosError::Domain(format!("alpha must be finite and nonzero, got {a}")));
    }
    Ok(())
}

impl FreeFamilySpec {
    /// `params` maps label to `(λ, α)`.
    pub fn new(params: BTreeMap<usize, (f64, f64)>, centered: bool) -> Result<Self> {
        if params.is_empty() {
            return Err(ChaosError::Domain("free family needs at least one label".into()));
        }
        for &(l, a) in params.values() {
            check_lambda(l)?;
            check_alpha(a)?;
        }
        Ok(FreeFamilySpec { params, centered })
    }

    /// Labels `1..=k` with the given `λ` and `α = 1`.
    pub fn unit_alpha(lambdas: &[f64], centered: bool) -> Result<Self> {
        Self::new(
            lambdas
                .iter()
                .enumerate()
                .map(|(i, &l)| (i + 1, (l, 1.0)))
                .collect(),
            centered,
        )
    }

    pub fn params(&self) -> &BTreeMap<usize, (f64, f64)> {
        &self.params
    }

    pub fn lambda(&self, label: usize) -> Result<f64> {
        self.params.get(&label).map(|p| p.0).ok_or(ChaosError::UnknownLabel(label))
    }

    pub fn alpha(&self, label: usize) -> Result<f64> {
        self.params.get(&label).map(|p| p.1).ok_or(ChaosError::UnknownLabel(label))
    }
}

impl EqualParamSpec {
    pub fn new(lambda: f64, alphas: BTreeMap<usize, f64>, centered: bool) -> Result<Self> {
        check_lambda(lambda)?;
        if alphas.is_empty() {
            return Err(ChaosError::Domain("equal-parameter family needs at least one label".into()));
        }
        for &a in alphas.values() {
            check_alpha(a)?;
        }
        Ok(EqualParamSpec {
            lambda,
            alphas,
            centered,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alphas(&self) -> &BTreeMap<usize, f64> {
        &self.alphas
    }

    pub fn alpha(&self, label: usize) -> Result<f64> {
        self.alphas.get(&label).copied().ok_or(ChaosError::UnknownLabel(label))
    }
}

impl LimitSpec {
    pub fn centered(&self) -> bool {
        match self {
            LimitSpec::FreeFamily(s) => s.centered,
            LimitSpec::EqualParam(s) => s.centered,
        }
    }

    pub fn labels(&self) -> Vec<usize> {
        match self {
            LimitSpec::FreeFamily(s) => s.params.keys().copied().collect(),
            LimitSpec::EqualParam(s) => s.alphas.keys().copied().collect(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LimitSpec::FreeFamily(_) => "free_family",
            LimitSpec::EqualParam(_) => "equal_param",
        }
    }

    /// Free cumulant `κ_n(a_{l_1}, …, a_{l_n})`.
    pub fn cumulant(&self, labels: &[usize]) -> Result<f64> {
        let n = labels.len();
        if n == 0 {
            return Err(ChaosError::Domain("cumulant of order 0".into()));
        }
        for &l in labels {
            let known = match self {
                LimitSpec::FreeFamily(s) => s.params.contains_key(&l),
                LimitSpec::EqualParam(s) => s.alphas.contains_key(&l),
            };
            if !known {
                return Err(ChaosError::UnknownLabel(l));
            }
        }
        if n == 1 && self.centered() {
            return Ok(0.0);
        }
        match self {
            LimitSpec::FreeFamily(s) => {
                let l = labels[0];
                if labels.iter().any(|&x| x != l) {
                    return Ok(0.0);
                }
                let (lambda, alpha) = s.params[&l];
                Ok(lambda * alpha.powi(n as i32))
            }
            LimitSpec::EqualParam(s) => {
                Ok(labels.iter().fold(s.lambda, |acc, l| acc * s.alphas[l]))
            }
        }
    }

    /// `φ(a_{χ(1)} ⋯ a_{χ(n)}) = Σ_{π ∈ NC(n)} Π_{V ∈ π} κ_{|V|}`.
    pub fn target_moment(&self, chi: &LabelWord) -> Result<f64> {
        let labels = chi.labels();
        if labels.is_empty() {
            return Ok(1.0);
        }
        nc_sum(&enumerate_nc(labels.len()), labels, |sub| self.cumulant(sub))
    }
}

fn nc_sum<F>(partitions: &[NCPartition], labels: &[usize], mut kappa: F) -> Result<f64>
where
    F: FnMut(&[usize]) -> Result<f64>,
{
    let mut total = 0.0;
    let mut sub = Vec::with_capacity(labels.len());
    for p in partitions {
        let mut prod = 1.0;
        for block in p.blocks() {
            sub.clear();
            sub.extend(block.iter().map(|&x| labels[x - 1]));
            prod *= kappa(&sub)?;
            if prod == 0.0 {
                break;
            }
        }
        total += prod;
    }
    Ok(total)
}

/// Shorthand for [`LimitSpec::cumulant`].
pub fn cumulant(spec: &LimitSpec, labels: &[usize]) -> Result<f64> {
    spec.cumulant(labels)
}

/// Shorthand for [`LimitSpec::target_moment`].
pub fn target_moment(spec: &LimitSpec, chi: &LabelWord) -> Result<f64> {
    spec.target_moment(chi)
}

/// Recovers `κ(l_1, …, l_n)` from a moment functional by solving the
/// moment–cumulant relation triangularly over `NC(n)`.
pub fn cumulant_from_moments<F>(moment: F, labels: &[usize]) -> Result<f64>
where
    F: Fn(&[usize]) -> Result<f64>,
{
    fn solve<F: Fn(&[usize]) -> Result<f64>>(
        moment: &F,
        labels: &[usize],
        memo: &mut HashMap<Vec<usize>, f64>,
        lattices: &mut HashMap<usize, Vec<NCPartition>>,
    ) -> Result<f64> {
        if let Some(&v) = memo.get(labels) {
            return Ok(v);
        }
        let n = labels.len();
        let nc = lattices.entry(n).or_insert_with(|| enumerate_nc(n)).clone();
        let mut rest = 0.0;
        for p in nc.iter().filter(|p| p.num_blocks() > 1) {
            let mut prod = 1.0;
            for block in p.blocks() {
                let sub: Vec<usize> = block.iter().map(|&x| labels[x - 1]).collect();
                prod *= solve(moment, &sub, memo, lattices)?;
            }
            rest += prod;
        }
        let k = moment(labels)? - rest;
        memo.insert(labels.to_vec(), k);
        Ok(k)
    }
    if labels.is_empty() {
        return Err(ChaosError::Domain("cumulant of order 0".into()));
    }
    solve(&moment, labels, &mut HashMap::new(), &mut HashMap::new())
}

/// `Σ_j λ^j R(m, j)`: the `m`-th moment of any word over a centered `Z(λ)`
/// with unit weights.
pub fn equalparam_moment_closed(lambda: f64, m: usize) -> f64 {
    count_r_row(m)
        .iter()
        .enumerate()
        .map(|(j, &r)| r as f64 * lambda.powi(j as i32))
        .sum()
}

/// Catalan number `C_n`.
pub fn catalan(n: usize) -> u128 {
    let mut c: u128 = 1;
    for k in 0..n as u128 {
        c = c * 2 * (2 * k + 1) / (k + 2);
    }
    c
}

/// Moments of the semicircle law of variance `t`.
pub fn semicircle_moment(t: f64, n: usize) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    catalan(n / 2) as f64 * t.powi((n / 2) as i32)
}

/// Number of partitions in `NC(n)` (or `NC≥2(n)` when `no_singletons`) by
/// block count.
pub fn nc_block_counts(n: usize, no_singletons: bool) -> Vec<u64> {
    let mut row = vec![0u64; n + 1];
    for p in enumerate_nc(n) {
        if !(no_singletons && p.has_singleton()) {
            row[p.num_blocks()] += 1;
        }
    }
    row
}

/// `n`-th moment of the free Poisson law with rate `λ` and unit jump,
/// centered or not.
pub fn free_poisson_moment_single(lambda: f64, n: usize, centered: bool) -> f64 {
    nc_block_counts(n, centered)
        .iter()
        .enumerate()
        .map(|(j, &c)| c as f64 * lambda.powi(j as i32))
        .sum()
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum LimitSpecJson {
    FreeFamily {
        centered: bool,
        lambda: BTreeMap<String, f64>,
        #[serde(default)]
        alphas: BTreeMap<String, f64>,
    },
    EqualParam {
        centered: bool,
        lambda: f64,
        alphas: BTreeMap<String, f64>,
    },
}

/// Label maps travel as JSON objects, whose keys are strings.
pub fn parse_label_map(map: &BTreeMap<String, f64>) -> Result<BTreeMap<usize, f64>> {
    map.iter()
        .map(|(k, &v)| {
            k.trim()
                .parse::<usize>()
                .map(|l| (l, v))
                .map_err(|_| ChaosError::Parse(format!("label {k:?} is not a nonnegative integer")))
        })
        .collect()
}

/// Inverse of [`parse_label_map`].
pub fn label_map_to_json(map: &BTreeMap<usize, f64>) -> BTreeMap<String, f64> {
    map.iter().map(|(k, &v)| (k.to_string(), v)).collect()
}

impl TryFrom<LimitSpecJson> for LimitSpec {
    type Error = ChaosError;

    fn try_from(j: LimitSpecJson) -> Result<Self> {
        match j {
            LimitSpecJson::FreeFamily {
                centered,
                lambda,
                alphas,
            } => {
                let lambda = parse_label_map(&lambda)?;
                let alphas = parse_label_map(&alphas)?;
                if let Some(l) = alphas.keys().find(|l| !lambda.contains_key(l)) {
                    return Err(ChaosError::UnknownLabel(*l));
                }
                let params = lambda
                    .iter()
                    .map(|(&l, &lam)| (l, (lam, alphas.get(&l).copied().unwrap_or(1.0))))
                    .collect();
                Ok(LimitSpec::FreeFamily(FreeFamilySpec::new(params, centered)?))
            }
            LimitSpecJson::EqualParam {
                centered,
                lambda,
                alphas,
            } => Ok(LimitSpec::EqualParam(EqualParamSpec::new(
                lambda,
                parse_label_map(&alphas)?,
                centered,
            )?)),
        }
    }
}

impl From<LimitSpec> for LimitSpecJson {
    fn from(s: LimitSpec) -> Self {
        match s {
            LimitSpec::FreeFamily(f) => LimitSpecJson::FreeFamily {
                centered: f.centered,
                lambda: f.params.iter().map(|(l, p)| (l.to_string(), p.0)).collect(),
                alphas: f.params.iter().map(|(l, p)| (l.to_string(), p.1)).collect(),
            },
            LimitSpec::EqualParam(e) => LimitSpecJson::EqualParam {
                centered: e.centered,
                lambda: e.lambda,
                alphas: label_map_to_json(&e.alphas),
            },
        }
    }
}
