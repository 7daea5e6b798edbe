//! Explicit kernel sequences `n ↦ f_n^{(i)}`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chaos::Flavor;
use crate::distributions::{
    label_map_to_json, parse_label_map, EqualParamSpec, FreeFamilySpec, LimitSpec,
};
use crate::error::{ChaosError, Result};
use crate::kernel::{Grid, StepKernel};
use crate::Kernel;

/// Shape of the limit a family is built for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetShape {
    /// Free family, `κ_n(a_i) = λ_i α_i^n`.
    FreeFamily,
    /// Equal-parameter family `Z(λ, α)`.
    EqualParam,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builder {
    ExactWigner,
    PerturbedWigner,
    PoissonSpread,
    Counterexample,
}

impl Builder {
    pub fn name(self) -> &'static str {
        match self {
            Builder::ExactWigner => "exact_wigner",
            Builder::PerturbedWigner => "perturbed_wigner",
            Builder::PoissonSpread => "poisson_spread",
            Builder::Counterexample => "counterexample",
        }
    }

    pub fn flavor(self) -> Flavor {
        match self {
            Builder::PoissonSpread => Flavor::Poisson,
            _ => Flavor::Wigner,
        }
    }
}

impl fmt::Display for Builder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Builder {
    type Err = ChaosError;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.trim().to_string()))
            .map_err(|_| ChaosError::Parse(format!("unknown builder {s:?}")))
    }
}

/// `λ` given once for all labels or per label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaParam {
    Common(f64),
    PerLabel(BTreeMap<String, f64>),
}

fn default_max_order() -> usize {
    6
}

fn default_n_list() -> Vec<usize> {
    vec![8, 64]
}

/// Family configuration as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyConfig {
    pub builder: Builder,
    pub q: usize,
    pub lambda: LambdaParam,
    #[serde(default)]
    pub alpha: BTreeMap<String, f64>,
    #[serde(default = "default_n_list")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_max_order")]
    pub max_order: usize,
    #[serde(default)]
    pub seed: u64,
    /// Sub-cells per block side for the spread family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells_per_block: Option<usize>,
}

impl FamilyConfig {
    pub fn new(builder: Builder, q: usize, lambdas: &[f64]) -> Self {
        FamilyConfig {
            builder,
            q,
            lambda: LambdaParam::PerLabel(
                lambdas
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| ((i + 1).to_string(), l))
                    .collect(),
            ),
            alpha: BTreeMap::new(),
            n_list: default_n_list(),
            max_order: default_max_order(),
            seed: 0,
            cells_per_block: None,
        }
    }

    pub fn with_alpha(mut self, alphas: &[(usize, f64)]) -> Self {
        self.alpha = label_map_to_json(&alphas.iter().copied().collect());
        self
    }

    pub fn with_n_list(mut self, n_list: &[usize]) -> Self {
        self.n_list = n_list.to_vec();
        self
    }

    pub fn with_max_order(mut self, m: usize) -> Self {
        self.max_order = m;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Resolves labels, `λ_i` and `α_i`.
    fn params(&self) -> Result<BTreeMap<usize, (f64, f64)>> {
        let alphas = parse_label_map(&self.alpha)?;
        let lambdas: BTreeMap<usize, f64> = match &self.lambda {
            LambdaParam::PerLabel(m) => parse_label_map(m)?,
            LambdaParam::Common(l) => {
                let labels: Vec<usize> = if alphas.is_empty() {
                    vec![1]
                } else {
                    alphas.keys().copied().collect()
                };
                labels.into_iter().map(|i| (i, *l)).collect()
            }
        };
        if lambdas.is_empty() {
            return Err(ChaosError::Domain("no labels given".into()));
        }
        if let Some(l) = alphas.keys().find(|l| !lambdas.contains_key(l)) {
            return Err(ChaosError::UnknownLabel(*l));
        }
        Ok(lambdas
            .into_iter()
            .map(|(i, l)| (i, (l, alphas.get(&i).copied().unwrap_or(1.0))))
            .collect())
    }
}

type Generator = dyn Fn(usize, usize) -> Result<Kernel> + Send + Sync;

/// A deterministic kernel sequence with its declared limit.
#[derive(Clone)]
pub struct KernelFamily {
    builder: Builder,
    flavor: Flavor,
    q: usize,
    target: LimitSpec,
    exact: bool,
    uniform_support: bool,
    alphas: BTreeMap<usize, f64>,
    generator: Arc<Generator>,
}

impl fmt::Debug for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelFamily")
            .field("builder", &self.builder)
            .field("flavor", &self.flavor)
            .field("q", &self.q)
            .field("target", &self.target)
            .field("exact", &self.exact)
            .field("uniform_support", &self.uniform_support)
            .finish()
    }
}

impl KernelFamily {
    pub fn builder(&self) -> Builder {
        self.builder
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn target(&self) -> &LimitSpec {
        &self.target
    }

    pub fn labels(&self) -> Vec<usize> {
        self.target.labels()
    }

    /// True when every `f_n` has exactly the target moments.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn uniform_support(&self) -> bool {
        self.uniform_support
    }

    pub fn alpha(&self, label: usize) -> Result<f64> {
        self.alphas.get(&label).copied().ok_or(ChaosError::UnknownLabel(label))
    }

    /// `f_n^{(i)}`; fails on unknown labels, `n = 0`, or an asymmetric kernel.
    pub fn kernel(&self, n: usize, label: usize) -> Result<Kernel> {
        if !self.alphas.contains_key(&label) {
            return Err(ChaosError::UnknownLabel(label));
        }
        if n == 0 {
            return Err(ChaosError::Domain("sequence index n must be at least 1".into()));
        }
        let k = (self.generator)(n, label)?;
        if !k.is_symmetric() {
            return Err(ChaosError::Inconsistency(format!(
                "{} produced an asymmetric kernel at n = {n}, label {label}",
                self.builder
            )));
        }
        Ok(k)
    }

    /// All labelled kernels at index `n`.
    pub fn kernels_at(&self, n: usize) -> Result<BTreeMap<usize, Kernel>> {
        self.labels()
            .into_iter()
            .map(|i| Ok((i, self.kernel(n, i)?)))
            .collect()
    }

    /// Builds the family described by `cfg` for the given target shape.
    pub fn from_config(cfg: &FamilyConfig, shape: TargetShape) -> Result<Self> {
        let params = cfg.params()?;
        match cfg.builder {
            Builder::ExactWigner => exact_wigner(cfg.q, &params, shape),
            Builder::PerturbedWigner => perturbed_wigner(cfg.q, &params, shape, cfg.seed),
            Builder::PoissonSpread => {
                poisson_spread(cfg.q, &params, shape, cfg.cells_per_block.unwrap_or(1))
            }
            Builder::Counterexample => counterexample(cfg.q, &params, shape),
        }
    }
}

fn target_for(params: &BTreeMap<usize, (f64, f64)>, shape: TargetShape) -> Result<LimitSpec> {
    match shape {
        TargetShape::FreeFamily => Ok(LimitSpec::FreeFamily(FreeFamilySpec::new(params.clone(), true)?)),
        TargetShape::EqualParam => {
            let lambda = common_lambda(params)?;
            Ok(LimitSpec::EqualParam(EqualParamSpec::new(
                lambda,
                params.iter().map(|(&i, p)| (i, p.1)).collect(),
                true,
            )?))
        }
    }
}

fn common_lambda(params: &BTreeMap<usize, (f64, f64)>) -> Result<f64> {
    let first = params.values().next().map(|p| p.0).unwrap_or(1.0);
    if params.values().any(|p| p.0 != first) {
        return Err(ChaosError::Domain(
            "an equal-parameter target needs one common lambda".into(),
        ));
    }
    Ok(first)
}

fn integer_lambda(l: f64) -> Result<usize> {
    if l >= 1.0 && l.fract() == 0.0 && l <= 1e6 {
        Ok(l as usize)
    } else {
        Err(ChaosError::Domain(format!(
            "this family realizes lambda as a projection rank and needs a positive integer, got {l}"
        )))
    }
}

fn require_q(q: usize, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(ChaosError::Domain(format!("{what} does not support q = {q}")))
    }
}

/// Cell blocks per label: disjoint ranges for a free family, one shared
/// range for an equal-parameter family.
fn cell_layout(
    params: &BTreeMap<usize, (f64, f64)>,
    shape: TargetShape,
) -> Result<(BTreeMap<usize, Vec<usize>>, usize)> {
    let mut layout = BTreeMap::new();
    let mut next = 0usize;
    match shape {
        TargetShape::FreeFamily => {
            for (&i, &(l, _)) in params {
                let r = integer_lambda(l)?;
                layout.insert(i, (next..next + r).collect());
                next += r;
            }
        }
        TargetShape::EqualParam => {
            let r = integer_lambda(common_lambda(params)?)?;
            for &i in params.keys() {
                layout.insert(i, (0..r).collect());
            }
            next = r;
        }
    }
    Ok((layout, next))
}

fn alphas_of(params: &BTreeMap<usize, (f64, f64)>) -> BTreeMap<usize, f64> {
    params.iter().map(|(&i, p)| (i, p.1)).collect()
}

/// `α_i Σ_{k ∈ cells_i} e_k^{⊗q}` with orthonormal cell vectors `e_k`.
///
/// For `q = 2` this is `α_i` times a rank-`λ_i` projection and reproduces the
/// target moments exactly at every `n`. For even `q ≥ 4` the same diagonal
/// tensor still satisfies `f ⌢^{q/2} f = f` but its other self-contractions
/// do not vanish, so the family is not exact.
pub fn exact_wigner(
    q: usize,
    params: &BTreeMap<usize, (f64, f64)>,
    shape: TargetShape,
) -> Result<KernelFamily> {
    require_q(q, q >= 2 && q % 2 == 0, "exact_wigner")?;
    let target = target_for(params, shape)?;
    let (layout, cells) = cell_layout(params, shape)?;
    let grid = Grid::new(1.0f64, cells)?;
    let alphas = alphas_of(params);
    let a2 = alphas.clone();
    let value = (1.0 / grid.width()).powf(q as f64 / 2.0);
    let generator = move |_n: usize, i: usize| -> Result<Kernel> {
        let a = a2[&i];
        StepKernel::from_entries(grid.clone(), q, layout[&i].iter().map(|&k| (vec![k; q], a * value)))
    };
    Ok(KernelFamily {
        builder: Builder::ExactWigner,
        flavor: Flavor::Wigner,
        q,
        target,
        exact: q == 2,
        uniform_support: true,
        alphas,
        generator: Arc::new(generator),
    })
}

/// `α_i ((1+ε) P_i + ε S_i)` with `ε = 1/n`, where `P_i` is the exact
/// projection and `S_i` couples each of its cells to a shared spare cell with
/// seeded weights in `[1/2, 1]`. All entries of `P_i + S_i` are nonnegative.
pub fn perturbed_wigner(
    q: usize,
    params: &BTreeMap<usize, (f64, f64)>,
    shape: TargetShape,
    seed: u64,
) -> Result<KernelFamily> {
    require_q(q, q == 2, "perturbed_wigner")?;
    let target = target_for(params, shape)?;
    let (layout, cells) = cell_layout(params, shape)?;
    let spare = cells;
    let grid = Grid::new(1.0f64, cells + 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: BTreeMap<usize, Vec<f64>> = layout
        .iter()
        .map(|(&i, ks)| (i, ks.iter().map(|_| rng.random_range(0.5..=1.0)).collect()))
        .collect();
    let alphas = alphas_of(params);
    let a2 = alphas.clone();
    let inv_w = 1.0 / grid.width();
    let generator = move |n: usize, i: usize| -> Result<Kernel> {
        let eps = 1.0 / n as f64;
        let a = a2[&i];
        let mut entries = Vec::new();
        for (&k, &w) in layout[&i].iter().zip(&weights[&i]) {
            entries.push((vec![k, k], a * (1.0 + eps) * inv_w));
            entries.push((vec![k, spare], a * eps * w * inv_w));
            entries.push((vec![spare, k], a * eps * w * inv_w));
        }
        StepKernel::from_entries(grid.clone(), 2, entries)
    };
    Ok(KernelFamily {
        builder: Builder::PerturbedWigner,
        flavor: Flavor::Wigner,
        q,
        target,
        exact: false,
        uniform_support: true,
        alphas,
        generator: Arc::new(generator),
    })
}

/// Smallest number of cells per unit length (up to 1000) making every `λ_i`
/// a whole number of cells.
fn commensurate_resolution(lambdas: &[f64]) -> Result<usize> {
    (1..=1000usize)
        .find(|&c| {
            lambdas.iter().all(|&l| {
                let x = l * c as f64;
                (x - x.round()).abs() < 1e-9 * x.max(1.0) && x.round() >= 1.0
            })
        })
        .ok_or_else(|| {
            ChaosError::Domain(format!("lambdas {lambdas:?} are not commensurate on a grid of <= 1000 cells per unit"))
        })
}

/// Free Poisson family with spreading support.
///
/// `q = 1`: `f^{(i)} = α_i 1_{A_i}` with `|A_i| = λ_i` (disjoint for a free
/// family, shared for an equal-parameter family); exact at every `n`.
///
/// `q = 2`: `λ_i` disjoint blocks `[b n, (b+1) n)²` per label, each carrying
/// the constant `α_i / n`. Then `⟨f, f⟩ = λ α²`, `f ⌢¹ f = α f`, and both star
/// norms satisfy `‖f ⋆ f‖² = λ α⁴ / n`.
pub fn poisson_spread(
    q: usize,
    params: &BTreeMap<usize, (f64, f64)>,
    shape: TargetShape,
    cells_per_block: usize,
) -> Result<KernelFamily> {
    require_q(q, q == 1 || q == 2, "poisson_spread")?;
    if cells_per_block == 0 {
        return Err(ChaosError::Domain("cells_per_block must be positive".into()));
    }
    let target = target_for(params, shape)?;
    let alphas = alphas_of(params);
    let a2 = alphas.clone();
    if q == 1 {
        let lambdas: Vec<f64> = params.values().map(|p| p.0).collect();
        let c = commensurate_resolution(&lambdas)?;
        let mut sets = BTreeMap::new();
        let mut next = 0usize;
        for (&i, &(l, _)) in params {
            let len = (l * c as f64).round() as usize;
            match shape {
                TargetShape::FreeFamily => {
                    sets.insert(i, next..next + len);
                    next += len;
                }
                TargetShape::EqualParam => {
                    sets.insert(i, 0..len);
                    next = next.max(len);
                }
            }
        }
        let grid = Grid::new(next as f64 / c as f64, next)?;
        let generator = move |_n: usize, i: usize| -> Result<Kernel> {
            let a = a2[&i];
            StepKernel::from_entries(grid.clone(), 1, sets[&i].clone().map(|k| (vec![k], a)))
        };
        return Ok(KernelFamily {
            builder: Builder::PoissonSpread,
            flavor: Flavor::Poisson,
            q,
            target,
            exact: true,
            uniform_support: true,
            alphas,
            generator: Arc::new(generator),
        });
    }
    let (layout, blocks) = cell_layout(params, shape)?;
    let c = cells_per_block;
    let generator = move |n: usize, i: usize| -> Result<Kernel> {
        let grid = Grid::new((n * blocks) as f64, blocks * c)?;
        let v = a2[&i] / n as f64;
        let entries = layout[&i].iter().flat_map(|&b| {
            (0..c).flat_map(move |x| (0..c).map(move |y| (vec![b * c + x, b * c + y], v)))
        });
        StepKernel::from_entries(grid, 2, entries)
    };
    Ok(KernelFamily {
        builder: Builder::PoissonSpread,
        flavor: Flavor::Poisson,
        q,
        target,
        exact: false,
        uniform_support: false,
        alphas,
        generator: Arc::new(generator),
    })
}

/// Matched covariance with the wrong higher moments:
/// `f = α sqrt(λ/K) Σ_{k=1}^{K} e_k ⊗ e_k` with `K = n + 1` cells, so
/// `⟨f, f⟩ = λ α²` for all `n` while `I(f)` tends to a semicircle.
pub fn counterexample(
    q: usize,
    params: &BTreeMap<usize, (f64, f64)>,
    shape: TargetShape,
) -> Result<KernelFamily> {
    require_q(q, q == 2, "counterexample")?;
    let target = target_for(params, shape)?;
    let labels: Vec<usize> = params.keys().copied().collect();
    let lambdas: BTreeMap<usize, f64> = params.iter().map(|(&i, p)| (i, p.0)).collect();
    let alphas = alphas_of(params);
    let a2 = alphas.clone();
    let generator = move |n: usize, i: usize| -> Result<Kernel> {
        let big_k = n + 1;
        let slot = match shape {
            TargetShape::FreeFamily => labels.iter().position(|&l| l == i).unwrap(),
            TargetShape::EqualParam => 0,
        };
        let slots = match shape {
            TargetShape::FreeFamily => labels.len(),
            TargetShape::EqualParam => 1,
        };
        let grid = Grid::new(1.0, big_k * slots)?;
        let v = a2[&i] * (lambdas[&i] / big_k as f64).sqrt() / grid.width();
        StepKernel::from_entries(
            grid,
            2,
            (0..big_k).map(|k| {
                let c = slot * big_k + k;
                (vec![c, c], v)
            }),
        )
    };
    Ok(KernelFamily {
        builder: Builder::Counterexample,
        flavor: Flavor::Wigner,
        q,
        target,
        exact: false,
        uniform_support: true,
        alphas,
        generator: Arc::new(generator),
    })
}
