//! Step-function kernels on a uniform grid and the contraction calculus.
//!
//! A kernel of order `q` is a function on `[0, t_max)^q` that is constant on
//! every grid cell. Arc and star contractions of step functions are again
//! step functions on the same grid, so every identity between contractions
//! holds up to floating-point rounding only.

use std::collections::BTreeMap;

use crate::error::{ChaosError, Result};
use crate::scalar::{Real, Scalar, IDENTITY_TOL};

/// Fill ratio above which a kernel switches to dense storage.
pub const DEFAULT_DENSE_THRESHOLD: f64 = 0.25;

/// Dense storage is never used above this many cells.
const DENSE_CAPACITY: usize = 1 << 22;

/// Uniform partition of `[0, t_max)` into `cells` intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<S> {
    t_max: S,
    cells: usize,
}

impl<S: Scalar> Grid<S> {
    pub fn new(t_max: S, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(ChaosError::InvalidGrid("cells must be at least 1".into()));
        }
        if t_max <= S::zero() {
            return Err(ChaosError::InvalidGrid(format!(
                "t_max must be positive, got {t_max:?}"
            )));
        }
        Ok(Grid { t_max, cells })
    }

    pub fn t_max(&self) -> &S {
        &self.t_max
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Cell width `t_max / cells`.
    pub fn width(&self) -> S {
        self.t_max.clone() / S::from_count(self.cells)
    }

    /// Measure of the full box `[0, t_max)^order`.
    pub fn box_measure(&self, order: usize) -> S {
        self.t_max.powu(order)
    }

    /// Same window, every cell split into `factor` equal parts.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Grid::new(self.t_max.clone(), self.cells * factor)
    }
}

#[derive(Clone, Debug)]
enum Coeffs<S> {
    Sparse(BTreeMap<Vec<usize>, S>),
    Dense(Vec<S>),
}

/// Piecewise-constant kernel of a fixed order on a [`Grid`].
///
/// Storage never holds explicit zeros in sparse mode; dense mode is chosen
/// when the fill ratio exceeds [`DEFAULT_DENSE_THRESHOLD`]. Entries are always
/// visited in lexicographic index order regardless of storage, which keeps
/// every reduction deterministic.
#[derive(Clone, Debug)]
pub struct StepKernel<S> {
    grid: Grid<S>,
    order: usize,
    coeffs: Coeffs<S>,
}

/// Sup norm and support measures of a kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelBounds<S> {
    pub sup_bound: S,
    pub support_measure: S,
    pub box_measure: S,
}

/// Outcome of an inequality check: both sides and the verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct InequalityCheck<S> {
    pub lhs: S,
    pub rhs: S,
    pub holds: bool,
}

/// Star-contraction bound evaluated with the enclosing grid box; the tight
/// support measures of both factors are reported alongside.
#[derive(Clone, Debug, PartialEq)]
pub struct StarBoundCheck<S> {
    pub lhs: S,
    pub rhs: S,
    pub holds: bool,
    pub support_measures: (S, S),
}

fn cell_count(cells: usize, order: usize) -> Option<usize> {
    let mut total: usize = 1;
    for _ in 0..order {
        total = total.checked_mul(cells)?;
    }
    Some(total)
}

fn decode(mut linear: usize, cells: usize, order: usize) -> Vec<usize> {
    let mut idx = vec![0; order];
    for slot in idx.iter_mut().rev() {
        *slot = linear % cells;
        linear /= cells;
    }
    idx
}

fn encode(idx: &[usize], cells: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * cells + i)
}

impl<S: Scalar> StepKernel<S> {
    /// The zero kernel of the given order.
    pub fn zero(grid: Grid<S>, order: usize) -> Self {
        StepKernel {
            grid,
            order,
            coeffs: Coeffs::Sparse(BTreeMap::new()),
        }
    }

    /// Order-0 kernel holding a single scalar.
    pub fn scalar(grid: Grid<S>, value: S) -> Self {
        let mut map = BTreeMap::new();
        map.insert(Vec::new(), value);
        Self::from_map(grid, 0, map)
    }

    /// Builds a kernel from `(index, value)` pairs. Repeated indices are
    /// summed; zeros are dropped.
    pub fn from_entries<I>(grid: Grid<S>, order: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, S)>,
    {
        let mut map: BTreeMap<Vec<usize>, S> = BTreeMap::new();
        for (idx, val) in entries {
            if idx.len() != order || idx.iter().any(|&i| i >= grid.cells) {
                return Err(ChaosError::IndexOutOfRange {
                    idx,
                    cells: grid.cells,
                    order,
                });
            }
            *map.entry(idx).or_insert_with(S::zero) += val;
        }
        Ok(Self::from_map(grid, order, map))
    }

    /// Single-cell kernel: `value` on the cell `idx`, zero elsewhere.
    pub fn cell(grid: Grid<S>, idx: Vec<usize>, value: S) -> Result<Self> {
        let order = idx.len();
        Self::from_entries(grid, order, [(idx, value)])
    }

    fn from_map(grid: Grid<S>, order: usize, mut map: BTreeMap<Vec<usize>, S>) -> Self {
        map.retain(|_, v| !v.is_zero());
        let mut kernel = StepKernel {
            grid,
            order,
            coeffs: Coeffs::Sparse(map),
        };
        kernel.repack(DEFAULT_DENSE_THRESHOLD);
        kernel
    }

    /// Re-chooses storage: dense when `nnz / cells^order > threshold`.
    pub fn repack(&mut self, threshold: f64) {
        let Some(total) = cell_count(self.grid.cells, self.order) else {
            return self.make_sparse();
        };
        let fill = self.nnz() as f64 / total as f64;
        if fill > threshold && total <= DENSE_CAPACITY {
            self.make_dense(total);
        } else {
            self.make_sparse();
        }
    }

    fn make_dense(&mut self, total: usize) {
        if let Coeffs::Sparse(map) = &self.coeffs {
            let mut dense = vec![S::zero(); total];
            for (idx, v) in map {
                dense[encode(idx, self.grid.cells)] = v.clone();
            }
            self.coeffs = Coeffs::Dense(dense);
        }
    }

    fn make_sparse(&mut self) {
        if let Coeffs::Dense(_) = &self.coeffs {
            let map = self.entries().into_iter().collect();
            self.coeffs = Coeffs::Sparse(map);
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.coeffs, Coeffs::Dense(_))
    }

    pub fn grid(&self) -> &Grid<S> {
        &self.grid
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of nonzero cells.
    pub fn nnz(&self) -> usize {
        match &self.coeffs {
            Coeffs::Sparse(map) => map.len(),
            Coeffs::Dense(v) => v.iter().filter(|x| !x.is_zero()).count(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.nnz() == 0
    }

    /// Coefficient at `idx` (zero when absent or out of range).
    pub fn get(&self, idx: &[usize]) -> S {
        if idx.len() != self.order || idx.iter().any(|&i| i >= self.grid.cells) {
            return S::zero();
        }
        match &self.coeffs {
            Coeffs::Sparse(map) => map.get(idx).cloned().unwrap_or_else(S::zero),
            Coeffs::Dense(v) => v[encode(idx, self.grid.cells)].clone(),
        }
    }

    /// Value of an order-0 kernel.
    pub fn scalar_value(&self) -> Option<S> {
        (self.order == 0).then(|| self.get(&[]))
    }

    /// Visits nonzero entries in lexicographic index order.
    pub fn for_each_nonzero<F: FnMut(&[usize], &S)>(&self, mut f: F) {
        match &self.coeffs {
            Coeffs::Sparse(map) => map.iter().for_each(|(k, v)| f(k, v)),
            Coeffs::Dense(values) => {
                for (linear, v) in values.iter().enumerate() {
                    if !v.is_zero() {
                        f(&decode(linear, self.grid.cells, self.order), v);
                    }
                }
            }
        }
    }

    /// Nonzero entries in lexicographic index order.
    pub fn entries(&self) -> Vec<(Vec<usize>, S)> {
        let mut out = Vec::with_capacity(self.nnz());
        self.for_each_nonzero(|idx, v| out.push((idx.to_vec(), v.clone())));
        out
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(ChaosError::GridMismatch);
        }
        Ok(())
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        self.check_grid(other)?;
        if self.order != other.order {
            return Err(ChaosError::OrderMismatch {
                expected: self.order,
                found: other.order,
            });
        }
        Ok(())
    }

    fn map_values<F: Fn(&S) -> S>(&self, f: F) -> Self {
        let mut map = BTreeMap::new();
        self.for_each_nonzero(|idx, v| {
            map.insert(idx.to_vec(), f(v));
        });
        Self::from_map(self.grid.clone(), self.order, map)
    }

    pub fn scale(&self, c: &S) -> Self {
        self.map_values(|v| v.clone() * c.clone())
    }

    pub fn neg(&self) -> Self {
        self.map_values(|v| -v.clone())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut map: BTreeMap<Vec<usize>, S> = self.entries().into_iter().collect();
        other.for_each_nonzero(|idx, v| {
            *map.entry(idx.to_vec()).or_insert_with(S::zero) += v.clone();
        });
        Ok(Self::from_map(self.grid.clone(), self.order, map))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    /// `f*(t_1..t_q) = f(t_q..t_1)` (real coefficients: no conjugation).
    pub fn mirror_adjoint(&self) -> Self {
        let mut map = BTreeMap::new();
        self.for_each_nonzero(|idx, v| {
            let rev: Vec<usize> = idx.iter().rev().copied().collect();
            map.insert(rev, v.clone());
        });
        Self::from_map(self.grid.clone(), self.order, map)
    }

    pub fn is_symmetric(&self) -> bool {
        let mut symmetric = true;
        self.for_each_nonzero(|idx, v| {
            if symmetric {
                let rev: Vec<usize> = idx.iter().rev().copied().collect();
                symmetric = self.get(&rev) == *v;
            }
        });
        symmetric
    }

    /// `⟨f, g⟩ = Σ f(i) g(i) Δ^q`.
    pub fn inner(&self, other: &Self) -> Result<S> {
        self.check_same_shape(other)?;
        let mut acc = S::zero();
        self.for_each_nonzero(|idx, v| {
            let w = other.get(idx);
            if !w.is_zero() {
                acc += v.clone() * w;
            }
        });
        Ok(acc * self.grid.width().powu(self.order))
    }

    pub fn norm_squared(&self) -> S {
        let mut acc = S::zero();
        self.for_each_nonzero(|_, v| acc += v.clone() * v.clone());
        acc * self.grid.width().powu(self.order)
    }

    /// `f ⊗ g`, the order-0 arc contraction.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        self.arc_contract(other, 0)
    }

    /// Arc contraction `f ⌢ʳ g`: integrates the last `r` variables of `f`
    /// (in reverse) against the first `r` variables of `g`.
    pub fn arc_contract(&self, other: &Self, r: usize) -> Result<Self> {
        self.check_grid(other)?;
        let max = self.order.min(other.order);
        if r > max {
            return Err(ChaosError::ContractionRange {
                index: r,
                min: 0,
                max,
            });
        }
        let keep = self.order - r;
        let mut left: BTreeMap<Vec<usize>, Vec<(Vec<usize>, S)>> = BTreeMap::new();
        self.for_each_nonzero(|idx, v| {
            let (u, tail) = idx.split_at(keep);
            let s: Vec<usize> = tail.iter().rev().copied().collect();
            left.entry(s).or_default().push((u.to_vec(), v.clone()));
        });
        let mut right: BTreeMap<Vec<usize>, Vec<(Vec<usize>, S)>> = BTreeMap::new();
        other.for_each_nonzero(|idx, v| {
            let (s, rest) = idx.split_at(r);
            right
                .entry(s.to_vec())
                .or_default()
                .push((rest.to_vec(), v.clone()));
        });
        let out = join_groups(&left, &right, |u, _s, v| {
            let mut key = Vec::with_capacity(u.len() + v.len());
            key.extend_from_slice(u);
            key.extend_from_slice(v);
            key
        });
        let order = self.order + other.order - 2 * r;
        Ok(self.finish_contraction(order, out, r))
    }

    /// Star contraction `f ⋆_p^{p-1} g`: variable `m-p+1` of `f` is identified
    /// with variable `p` of `g`, and `p-1` variables are integrated out.
    pub fn star_contract(&self, other: &Self, p: usize) -> Result<Self> {
        self.check_grid(other)?;
        let max = self.order.min(other.order);
        if p == 0 || p > max {
            return Err(ChaosError::ContractionRange {
                index: p,
                min: 1,
                max,
            });
        }
        let keep = self.order - p;
        // key = (shared variable, integrated variables in g's order)
        let mut left: BTreeMap<Vec<usize>, Vec<(Vec<usize>, S)>> = BTreeMap::new();
        self.for_each_nonzero(|idx, v| {
            let (t, rest) = idx.split_at(keep);
            let mut key = Vec::with_capacity(p);
            key.push(rest[0]);
            key.extend(rest[1..].iter().rev());
            left.entry(key).or_default().push((t.to_vec(), v.clone()));
        });
        let mut right: BTreeMap<Vec<usize>, Vec<(Vec<usize>, S)>> = BTreeMap::new();
        other.for_each_nonzero(|idx, v| {
            let (s, rest) = idx.split_at(p - 1);
            let mut key = Vec::with_capacity(p);
            key.push(rest[0]);
            key.extend_from_slice(s);
            right
                .entry(key)
                .or_default()
                .push((rest[1..].to_vec(), v.clone()));
        });
        let out = join_groups(&left, &right, |t, key, v| {
            let mut idx = Vec::with_capacity(t.len() + 1 + v.len());
            idx.extend_from_slice(t);
            idx.push(key[0]);
            idx.extend_from_slice(v);
            idx
        });
        let order = self.order + other.order - 2 * p + 1;
        Ok(self.finish_contraction(order, out, p - 1))
    }

    fn finish_contraction(
        &self,
        order: usize,
        mut out: BTreeMap<Vec<usize>, S>,
        integrated: usize,
    ) -> Self {
        if integrated > 0 {
            let w = self.grid.width().powu(integrated);
            for v in out.values_mut() {
                *v *= w.clone();
            }
        }
        Self::from_map(self.grid.clone(), order, out)
    }

    /// The same step function on a grid with every cell split `factor` ways.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        let grid = self.grid.refined(factor)?;
        let subs = cell_count(factor, self.order)
            .ok_or_else(|| ChaosError::Domain("refinement too large".into()))?;
        let mut map = BTreeMap::new();
        self.for_each_nonzero(|idx, v| {
            for sub in 0..subs {
                let offsets = decode(sub, factor, self.order);
                let fine: Vec<usize> = idx
                    .iter()
                    .zip(&offsets)
                    .map(|(&i, &o)| i * factor + o)
                    .collect();
                map.insert(fine, v.clone());
            }
        });
        Ok(Self::from_map(grid, self.order, map))
    }

    /// Sup norm, tight support measure and enclosing box measure.
    pub fn bounds(&self) -> KernelBounds<S> {
        let mut sup = S::zero();
        self.for_each_nonzero(|_, v| {
            let a = v.abs();
            if a > sup {
                sup = a;
            }
        });
        let cell_volume = self.grid.width().powu(self.order);
        KernelBounds {
            sup_bound: sup,
            support_measure: S::from_count(self.nnz()) * cell_volume,
            box_measure: self.grid.box_measure(self.order),
        }
    }
}

fn join_groups<S: Scalar, K>(
    left: &BTreeMap<Vec<usize>, Vec<(Vec<usize>, S)>>,
    right: &BTreeMap<Vec<usize>, Vec<(Vec<usize>, S)>>,
    make_key: K,
) -> BTreeMap<Vec<usize>, S>
where
    K: Fn(&[usize], &[usize], &[usize]) -> Vec<usize>,
{
    let mut out: BTreeMap<Vec<usize>, S> = BTreeMap::new();
    for (key, fs) in left {
        let Some(gs) = right.get(key) else { continue };
        for (a, fv) in fs {
            for (b, gv) in gs {
                *out.entry(make_key(a, key, b)).or_insert_with(S::zero) +=
                    fv.clone() * gv.clone();
            }
        }
    }
    out
}

impl<S: Scalar> PartialEq for StepKernel<S> {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.order == other.order && self.entries() == other.entries()
    }
}

fn inequality_tol<S: Real>() -> S {
    let floor = S::from(IDENTITY_TOL).unwrap();
    let eps = S::epsilon() * S::from(64.0).unwrap();
    if eps > floor {
        eps
    } else {
        floor
    }
}

impl<S: Real> StepKernel<S> {
    /// Normalized cell indicator `Δ^{-1/2} · 1_cell` (order 1, unit norm).
    pub fn unit_cell(grid: Grid<S>, cell: usize) -> Result<Self> {
        let value = grid.width().sqrt().recip();
        Self::cell(grid, vec![cell], value)
    }

    pub fn norm(&self) -> S {
        self.norm_squared().sqrt()
    }

    /// `‖f ⌢ʳ g‖ ≤ ‖f‖·‖g‖`.
    pub fn check_arc_cauchy_schwarz(&self, other: &Self, r: usize) -> Result<InequalityCheck<S>> {
        let lhs = self.arc_contract(other, r)?.norm();
        let rhs = self.norm() * other.norm();
        let tol = inequality_tol::<S>();
        let holds = lhs <= rhs + tol * rhs.max(S::one());
        Ok(InequalityCheck { lhs, rhs, holds })
    }

    /// `‖f ⋆_r^{r-1} g‖ ≤ sqrt(M(f)M(g)(μ(S_f)μ(S_g))^{(q-1)/(2q)}‖f‖‖g‖)` with
    /// `S_f`, `S_g` the full grid box.
    pub fn check_star_bound(&self, other: &Self, r: usize) -> Result<StarBoundCheck<S>> {
        if self.order != other.order {
            return Err(ChaosError::OrderMismatch {
                expected: self.order,
                found: other.order,
            });
        }
        let lhs = self.star_contract(other, r)?.norm();
        let q = S::from_count(self.order);
        let bf = self.bounds();
        let bg = other.bounds();
        let exponent = (q - S::one()) / (q + q);
        let volume = (bf.box_measure * bg.box_measure).powf(exponent);
        let rhs = (bf.sup_bound * bg.sup_bound * volume * self.norm() * other.norm()).sqrt();
        let tol = inequality_tol::<S>();
        let holds = lhs <= rhs + tol * rhs.max(S::one());
        Ok(StarBoundCheck {
            lhs,
            rhs,
            holds,
            support_measures: (bf.support_measure, bg.support_measure),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ratio, rational_int, Rational};

    fn grid(t: f64, cells: usize) -> Grid<f64> {
        Grid::new(t, cells).unwrap()
    }

    fn rank_one_diag(g: &Grid<f64>, cells: &[usize]) -> StepKernel<f64> {
        let inv_w = 1.0 / g.width();
        StepKernel::from_entries(g.clone(), 2, cells.iter().map(|&k| (vec![k, k], inv_w))).unwrap()
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(Grid::new(0.0, 3).is_err());
        assert!(Grid::new(1.0, 0).is_err());
        assert!(Grid::new(-1.0, 3).is_err());
        assert_eq!(grid(2.0, 4).width(), 0.5);
    }

    #[test]
    fn from_entries_validates_and_drops_zeros() {
        let g = grid(1.0, 2);
        assert!(StepKernel::from_entries(g.clone(), 2, [(vec![0, 2], 1.0)]).is_err());
        assert!(StepKernel::from_entries(g.clone(), 2, [(vec![0], 1.0)]).is_err());
        let k = StepKernel::from_entries(g, 1, [(vec![0], 1.0), (vec![0], -1.0), (vec![1], 2.0)])
            .unwrap();
        assert_eq!(k.nnz(), 1);
        assert_eq!(k.get(&[1]), 2.0);
    }

    #[test]
    fn mirror_adjoint_examples() {
        let g = grid(1.0, 2);
        let f = StepKernel::cell(g.clone(), vec![0, 1], 2.0).unwrap();
        let fs = f.mirror_adjoint();
        assert_eq!(fs.entries(), vec![(vec![1, 0], 2.0)]);
        assert_eq!(fs.mirror_adjoint(), f);

        let sym = rank_one_diag(&g, &[0, 1]);
        assert_eq!(sym.mirror_adjoint(), sym);
        assert!(sym.is_symmetric());
        assert!(!f.is_symmetric());

        let s = StepKernel::scalar(g, 5.0);
        assert_eq!(s.mirror_adjoint().scalar_value(), Some(5.0));
    }

    #[test]
    fn inner_examples() {
        let g = grid(1.0, 4);
        let ind = StepKernel::from_entries(g.clone(), 1, (0..4).map(|i| (vec![i], 1.0))).unwrap();
        assert!((ind.inner(&ind).unwrap() - 1.0).abs() < 1e-15);

        let e0 = StepKernel::unit_cell(g.clone(), 0).unwrap();
        let e1 = StepKernel::unit_cell(g.clone(), 1).unwrap();
        assert!((e0.inner(&e0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(e0.inner(&e1).unwrap(), 0.0);

        let f = rank_one_diag(&g, &[0, 1, 2]);
        assert!((f.inner(&f).unwrap() - 3.0).abs() < 1e-12);

        let h = StepKernel::zero(g.clone(), 2);
        assert!(f.inner(&ind).is_err());
        let other = StepKernel::zero(grid(2.0, 4), 2);
        assert_eq!(h.inner(&other), Err(ChaosError::GridMismatch));
    }

    #[test]
    fn arc_contract_examples() {
        let g = grid(1.0, 4);
        let ind = StepKernel::from_entries(g.clone(), 1, (0..4).map(|i| (vec![i], 1.0))).unwrap();
        let full = ind.arc_contract(&ind, 1).unwrap();
        assert_eq!(full.order(), 0);
        assert!((full.scalar_value().unwrap() - 1.0).abs() < 1e-15);

        let ee = rank_one_diag(&g, &[2]);
        let c = ee.arc_contract(&ee, 1).unwrap();
        assert_eq!(c.order(), 2);
        assert!((c.get(&[2, 2]) - ee.get(&[2, 2])).abs() < 1e-12);
        assert_eq!(c.nnz(), 1);

        let a = StepKernel::from_entries(g.clone(), 1, [(vec![0], 2.0), (vec![3], -1.0)]).unwrap();
        let b = StepKernel::from_entries(g.clone(), 1, [(vec![1], 5.0)]).unwrap();
        let t = a.arc_contract(&b, 0).unwrap();
        assert_eq!(t.entries(), vec![(vec![0, 1], 10.0), (vec![3, 1], -5.0)]);

        assert!(matches!(
            ee.arc_contract(&ee, 3),
            Err(ChaosError::ContractionRange { .. })
        ));
    }

    #[test]
    fn full_arc_contraction_is_inner_with_adjoint() {
        let g = grid(2.0, 3);
        let f = StepKernel::from_entries(g.clone(), 2, [(vec![0, 1], 1.5), (vec![2, 0], -2.0)]).unwrap();
        let h = StepKernel::from_entries(g, 2, [(vec![1, 0], 3.0), (vec![0, 2], 0.5)]).unwrap();
        let lhs = f.arc_contract(&h, 2).unwrap().scalar_value().unwrap();
        let rhs = h.inner(&f.mirror_adjoint()).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn star_contract_examples() {
        let g = grid(1.0, 3);
        let f = StepKernel::from_entries(g.clone(), 1, [(vec![0], 2.0), (vec![1], 3.0)]).unwrap();
        let h = StepKernel::from_entries(g.clone(), 1, [(vec![1], 4.0), (vec![2], 1.0)]).unwrap();
        let s = f.star_contract(&h, 1).unwrap();
        assert_eq!(s.entries(), vec![(vec![1], 12.0)]);

        // e ⊗ e with e = √c 1_cell: ∫ f(t,s) f(s,t) ds = e(t)^2
        let c = 3.0;
        let ee = rank_one_diag(&g, &[1]);
        let r = ee.star_contract(&ee, 2).unwrap();
        assert_eq!(r.order(), 1);
        assert!((r.get(&[1]) - c).abs() < 1e-12);

        let f2 = StepKernel::from_entries(g.clone(), 2, [(vec![0, 1], 2.0), (vec![1, 2], 5.0)]).unwrap();
        let p1 = f2.star_contract(&f2, 1).unwrap();
        assert_eq!(p1.order(), 3);
        assert_eq!(p1.entries(), vec![(vec![0, 1, 2], 10.0)]);

        assert!(f2.star_contract(&f2, 0).is_err());
        assert!(f2.star_contract(&f2, 3).is_err());
    }

    #[test]
    fn bounds_examples() {
        let g = grid(1.0, 2);
        let z: StepKernel<f64> = StepKernel::zero(g.clone(), 2);
        assert_eq!(
            z.bounds(),
            KernelBounds { sup_bound: 0.0, support_measure: 0.0, box_measure: 1.0 }
        );
        let full = StepKernel::from_entries(
            g,
            2,
            [(vec![0, 0], 1.0), (vec![0, 1], 1.0), (vec![1, 0], 1.0), (vec![1, 1], 1.0)],
        )
        .unwrap();
        let b = full.bounds();
        assert_eq!(b.sup_bound, 1.0);
        assert_eq!(b.support_measure, 1.0);

        let n = 5usize;
        let gn = grid(n as f64, n);
        let spread = StepKernel::from_entries(
            gn,
            2,
            (0..n).flat_map(|i| (0..n).map(move |j| (vec![i, j], 1.0 / n as f64))),
        )
        .unwrap();
        let b = spread.bounds();
        assert!((b.sup_bound - 0.2).abs() < 1e-15);
        assert!((b.support_measure - 25.0).abs() < 1e-12);
    }

    #[test]
    fn cauchy_schwarz_examples() {
        let g = grid(1.0, 4);
        let ee = rank_one_diag(&g, &[0]);
        let chk = ee.check_arc_cauchy_schwarz(&ee, 1).unwrap();
        assert!((chk.lhs - 1.0).abs() < 1e-12 && (chk.rhs - 1.0).abs() < 1e-12 && chk.holds);
        let z = StepKernel::zero(g, 2);
        let chk = ee.check_arc_cauchy_schwarz(&z, 1).unwrap();
        assert_eq!((chk.lhs, chk.rhs, chk.holds), (0.0, 0.0, true));
    }

    #[test]
    fn star_bound_examples() {
        for n in [1usize, 4, 9] {
            let g = grid(n as f64, n);
            let f = StepKernel::from_entries(
                g.clone(),
                2,
                (0..n).flat_map(|i| (0..n).map(move |j| (vec![i, j], 1.0 / n as f64))),
            )
            .unwrap();
            let chk = f.check_star_bound(&f, 2).unwrap();
            assert!((chk.lhs - 1.0 / (n as f64).sqrt()).abs() < 1e-12);
            assert!(chk.rhs.is_finite() && chk.holds);
            let z = StepKernel::zero(g, 2);
            let chk = f.check_star_bound(&z, 2).unwrap();
            assert!(chk.lhs == 0.0 && chk.rhs == 0.0 && chk.holds);
        }
    }

    #[test]
    fn dense_and_sparse_storage_agree() {
        let g = grid(1.0, 3);
        let entries: Vec<_> = (0..3)
            .flat_map(|i| (0..3).map(move |j| (vec![i, j], (i * 3 + j + 1) as f64)))
            .collect();
        let mut k = StepKernel::from_entries(g, 2, entries.clone()).unwrap();
        assert!(k.is_dense());
        let dense = k.clone();
        k.repack(1.1);
        assert!(!k.is_dense());
        assert_eq!(k, dense);
        assert_eq!(k.entries(), entries);
        assert_eq!(k.arc_contract(&k, 1).unwrap(), dense.arc_contract(&dense, 1).unwrap());
    }

    #[test]
    fn refinement_is_exact_on_rationals() {
        let g = Grid::new(rational_int(2), 2).unwrap();
        let f = StepKernel::from_entries(
            g.clone(),
            2,
            [(vec![0, 1], ratio(3, 2)), (vec![1, 1], ratio(-1, 3))],
        )
        .unwrap();
        let h = StepKernel::from_entries(g, 2, [(vec![1, 0], ratio(2, 1)), (vec![1, 1], ratio(5, 7))])
            .unwrap();
        let (fr, hr) = (f.refine(2).unwrap(), h.refine(2).unwrap());
        assert_eq!(f.inner(&h).unwrap(), fr.inner(&hr).unwrap());
        for r in 0..=2 {
            assert_eq!(
                f.arc_contract(&h, r).unwrap().refine(2).unwrap(),
                fr.arc_contract(&hr, r).unwrap()
            );
        }
        for p in 1..=2 {
            assert_eq!(
                f.star_contract(&h, p).unwrap().refine(2).unwrap(),
                fr.star_contract(&hr, p).unwrap()
            );
        }
        let _: Rational = f.norm_squared();
    }
}
