//! Seeded random kernels shared by the integration suites.
#![allow(dead_code)]

use freechaos::scalar::{ratio, Rational};
use freechaos::{Grid, Kernel, StepKernel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_index<R: Rng>(rng: &mut R, q: usize, cells: usize) -> Vec<usize> {
    (0..q).map(|_| rng.random_range(0..cells)).collect()
}

/// Sparse kernel with up to `nnz` random entries in `[-2, 2]`; symmetric when
/// asked (each entry is mirrored onto its reversed index).
pub fn random_kernel<R: Rng>(rng: &mut R, grid: &Grid<f64>, q: usize, nnz: usize, symmetric: bool) -> Kernel {
    let cells = grid.cells();
    let mut entries = Vec::new();
    for _ in 0..nnz {
        let idx = random_index(rng, q, cells);
        let v: f64 = rng.random_range(-2.0..2.0);
        if symmetric {
            let mut rev = idx.clone();
            rev.reverse();
            entries.push((rev, v));
        }
        entries.push((idx, v));
    }
    StepKernel::from_entries(grid.clone(), q, entries).unwrap()
}

/// Same shape with small rational entries.
pub fn random_rational_kernel<R: Rng>(
    rng: &mut R,
    grid: &Grid<Rational>,
    q: usize,
    nnz: usize,
    symmetric: bool,
) -> StepKernel<Rational> {
    let cells = grid.cells();
    let mut entries = Vec::new();
    for _ in 0..nnz {
        let idx = random_index(rng, q, cells);
        let v = ratio(rng.random_range(-6..=6), rng.random_range(1..=4));
        if symmetric {
            let mut rev = idx.clone();
            rev.reverse();
            entries.push((rev, v.clone()));
        }
        entries.push((idx, v));
    }
    StepKernel::from_entries(grid.clone(), q, entries).unwrap()
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
