//! Wigner and Poisson chaos elements and their product formulas.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ChaosError, Result};
use crate::kernel::{Grid, StepKernel};
use crate::scalar::Scalar;

/// Which stochastic-integral algebra an element lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    /// Integrals against free Brownian motion: `I(f)I(g) = Σ_k I(f ⌢^k g)`.
    Wigner,
    /// Integrals against a centered free Poisson measure; the product adds
    /// `Σ_{k≥1} I(f ⋆_k^{k-1} g)`.
    Poisson,
}

impl Flavor {
    pub fn name(self) -> &'static str {
        match self {
            Flavor::Wigner => "wigner",
            Flavor::Poisson => "poisson",
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Flavor {
    type Err = ChaosError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wigner" => Ok(Flavor::Wigner),
            "poisson" => Ok(Flavor::Poisson),
            other => Err(ChaosError::Parse(format!("unknown flavor {other:?}"))),
        }
    }
}

/// Finite sum `Σ_q I(f_q)` of multiple integrals on one grid.
#[derive(Clone, Debug)]
pub struct ChaosElement<S> {
    flavor: Flavor,
    grid: Grid<S>,
    parts: BTreeMap<usize, StepKernel<S>>,
}

impl<S: Scalar> ChaosElement<S> {
    pub fn zero(flavor: Flavor, grid: Grid<S>) -> Self {
        ChaosElement {
            flavor,
            grid,
            parts: BTreeMap::new(),
        }
    }

    /// The constant `c·1`.
    pub fn scalar(flavor: Flavor, grid: Grid<S>, c: S) -> Self {
        Self::integral(flavor, StepKernel::scalar(grid, c))
    }

    /// `I(f)`.
    pub fn integral(flavor: Flavor, f: StepKernel<S>) -> Self {
        let mut el = Self::zero(flavor, f.grid().clone());
        if !f.is_zero() {
            el.parts.insert(f.order(), f);
        }
        el
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn grid(&self) -> &Grid<S> {
        &self.grid
    }

    pub fn part(&self, order: usize) -> Option<&StepKernel<S>> {
        self.parts.get(&order)
    }

    pub fn parts(&self) -> impl Iterator<Item = (usize, &StepKernel<S>)> {
        self.parts.iter().map(|(&q, k)| (q, k))
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn max_order(&self) -> Option<usize> {
        self.parts.keys().next_back().copied()
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.flavor != other.flavor {
            return Err(ChaosError::FlavorMismatch(self.flavor.name(), other.flavor.name()));
        }
        if self.grid != other.grid {
            return Err(ChaosError::GridMismatch);
        }
        Ok(())
    }

    fn accumulate(&mut self, k: StepKernel<S>) -> Result<()> {
        if k.is_zero() {
            return Ok(());
        }
        let q = k.order();
        let merged = match self.parts.remove(&q) {
            Some(existing) => existing.add(&k)?,
            None => k,
        };
        if !merged.is_zero() {
            self.parts.insert(q, merged);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for k in other.parts.values() {
            out.accumulate(k.clone())?;
        }
        Ok(out)
    }

    pub fn scale(&self, c: &S) -> Self {
        let mut out = Self::zero(self.flavor, self.grid.clone());
        for (&q, k) in &self.parts {
            let s = k.scale(c);
            if !s.is_zero() {
                out.parts.insert(q, s);
            }
        }
        out
    }

    /// Product in the element's own algebra.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let with_star = self.flavor == Flavor::Poisson;
        let mut out = Self::zero(self.flavor, self.grid.clone());
        for f in self.parts.values() {
            for g in other.parts.values() {
                let top = f.order().min(g.order());
                for k in 0..=top {
                    out.accumulate(f.arc_contract(g, k)?)?;
                }
                if with_star {
                    for k in 1..=top {
                        out.accumulate(f.star_contract(g, k)?)?;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Product in the Wigner algebra; both factors must be Wigner elements.
    pub fn wigner_multiply(&self, other: &Self) -> Result<Self> {
        self.require(Flavor::Wigner)?;
        self.multiply(other)
    }

    /// Product in the Poisson algebra; both factors must be Poisson elements.
    pub fn poisson_multiply(&self, other: &Self) -> Result<Self> {
        self.require(Flavor::Poisson)?;
        self.multiply(other)
    }

    fn require(&self, flavor: Flavor) -> Result<()> {
        if self.flavor != flavor {
            return Err(ChaosError::FlavorMismatch(self.flavor.name(), flavor.name()));
        }
        Ok(())
    }

    /// `I(f)* = I(f*)` part by part.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(self.flavor, self.grid.clone());
        for (&q, k) in &self.parts {
            out.parts.insert(q, k.mirror_adjoint());
        }
        out
    }

    /// The trace `φ`: the order-0 coefficient.
    pub fn expectation(&self) -> S {
        self.parts
            .get(&0)
            .and_then(StepKernel::scalar_value)
            .unwrap_or_else(S::zero)
    }
}

impl<S: Scalar> PartialEq for ChaosElement<S> {
    fn eq(&self, other: &Self) -> bool {
        self.flavor == other.flavor && self.grid == other.grid && self.parts == other.parts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid<f64> {
        Grid::new(1.0, 4).unwrap()
    }

    fn diag(g: &Grid<f64>, cells: &[usize]) -> StepKernel<f64> {
        let v = 1.0 / g.width();
        StepKernel::from_entries(g.clone(), 2, cells.iter().map(|&k| (vec![k, k], v))).unwrap()
    }

    #[test]
    fn wigner_square_of_unit_vector() {
        let g = grid();
        let e = StepKernel::unit_cell(g.clone(), 1).unwrap();
        let x = ChaosElement::integral(Flavor::Wigner, e.clone());
        let sq = x.wigner_multiply(&x).unwrap();
        assert!((sq.expectation() - 1.0).abs() < 1e-14);
        let two = sq.part(2).unwrap();
        assert_eq!(*two, e.tensor(&e).unwrap());
        assert!(sq.part(1).is_none());
    }

    #[test]
    fn scalar_action() {
        let g = grid();
        let f = diag(&g, &[0, 2]);
        let three = ChaosElement::scalar(Flavor::Wigner, g.clone(), 3.0);
        let x = ChaosElement::integral(Flavor::Wigner, f.clone());
        assert_eq!(three.multiply(&x).unwrap(), x.scale(&3.0));
        assert_eq!(three.expectation(), 3.0 * 1.0);
        let p = ChaosElement::integral(Flavor::Poisson, f);
        let c = ChaosElement::scalar(Flavor::Poisson, g.clone(), -2.0);
        assert_eq!(p.multiply(&c).unwrap(), p.scale(&-2.0));
        let z = ChaosElement::zero(Flavor::Poisson, g);
        assert!(z.poisson_multiply(&p).unwrap().is_zero());
    }

    #[test]
    fn isometry_on_rank_three_projection() {
        let g = grid();
        let f = diag(&g, &[0, 1, 2]);
        let x = ChaosElement::integral(Flavor::Wigner, f);
        assert!((x.wigner_multiply(&x).unwrap().expectation() - 3.0).abs() < 1e-12);
        assert_eq!(x.expectation(), 0.0);
    }

    #[test]
    fn poisson_square_of_indicator() {
        let g = grid();
        let f = StepKernel::from_entries(g.clone(), 1, (0..4).map(|i| (vec![i], 1.0))).unwrap();
        let x = ChaosElement::integral(Flavor::Poisson, f.clone());
        let sq = x.poisson_multiply(&x).unwrap();
        let expected = ChaosElement::integral(Flavor::Poisson, f.tensor(&f).unwrap())
            .add(&x)
            .unwrap()
            .add(&ChaosElement::scalar(Flavor::Poisson, g, 1.0))
            .unwrap();
        assert_eq!(sq, expected);
    }

    #[test]
    fn flavor_and_grid_mismatch() {
        let g = grid();
        let f = diag(&g, &[0]);
        let w = ChaosElement::integral(Flavor::Wigner, f.clone());
        let p = ChaosElement::integral(Flavor::Poisson, f);
        assert!(matches!(w.multiply(&p), Err(ChaosError::FlavorMismatch(..))));
        assert!(w.poisson_multiply(&w).is_err());
        let other = ChaosElement::integral(Flavor::Wigner, diag(&Grid::new(2.0, 4).unwrap(), &[0]));
        assert_eq!(w.multiply(&other), Err(ChaosError::GridMismatch));
    }

    #[test]
    fn adjoint_examples() {
        let g = grid();
        let sym = ChaosElement::integral(Flavor::Wigner, diag(&g, &[1, 3]));
        assert_eq!(sym.adjoint(), sym);
        let asym = StepKernel::cell(g, vec![0, 2], 1.5).unwrap();
        let a = ChaosElement::integral(Flavor::Poisson, asym.clone());
        assert_eq!(a.adjoint().part(2).unwrap().entries(), vec![(vec![2, 0], 1.5)]);
        assert_eq!(a.adjoint().adjoint(), a);
    }

    #[test]
    fn flavor_parse() {
        assert_eq!("Wigner".parse::<Flavor>().unwrap(), Flavor::Wigner);
        assert!("gauss".parse::<Flavor>().is_err());
        assert_eq!(serde_json::to_string(&Flavor::Poisson).unwrap(), "\"poisson\"");
    }
}
