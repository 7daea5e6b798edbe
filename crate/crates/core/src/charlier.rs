//! Free Charlier polynomials: `C_0 = 1`, `C_1 = x`,
//! `x C_m = C_{m+1} + C_m + λ C_{m-1}`.
//!
//! They are orthogonal for the centered free Poisson law of rate `λ`, so the
//! constant coefficient of `x^m` expanded in the Charlier basis is the `m`-th
//! moment of that law.

use crate::scalar::Scalar;

/// Coefficients of `C_m(x, λ)`, lowest degree first.
pub fn charlier<S: Scalar>(m: usize, lambda: &S) -> Vec<S> {
    charlier_table(m, lambda).pop().unwrap()
}

/// `[C_0, …, C_m]`.
pub fn charlier_table<S: Scalar>(m: usize, lambda: &S) -> Vec<Vec<S>> {
    let mut table: Vec<Vec<S>> = vec![vec![S::one()]];
    if m == 0 {
        return table;
    }
    table.push(vec![S::zero(), S::one()]);
    for k in 1..m {
        // C_{k+1} = x C_k - C_k - λ C_{k-1}
        let mut next = vec![S::zero(); k + 2];
        for (d, c) in table[k].iter().enumerate() {
            next[d + 1] += c.clone();
            next[d] -= c.clone();
        }
        for (d, c) in table[k - 1].iter().enumerate() {
            next[d] -= lambda.clone() * c.clone();
        }
        table.push(next);
    }
    table
}

/// `x C_m - C_{m+1} - C_m - λ C_{m-1}` coefficient-wise (`m ≥ 1`).
pub fn recurrence_residual<S: Scalar>(m: usize, lambda: &S) -> Vec<S> {
    assert!(m >= 1, "recurrence starts at m = 1");
    let t = charlier_table(m + 1, lambda);
    let mut out = vec![S::zero(); m + 2];
    for (d, c) in t[m].iter().enumerate() {
        out[d + 1] += c.clone();
        out[d] -= c.clone();
    }
    for (d, c) in t[m + 1].iter().enumerate() {
        out[d] -= c.clone();
    }
    for (d, c) in t[m - 1].iter().enumerate() {
        out[d] -= lambda.clone() * c.clone();
    }
    out
}

/// Coordinates of `x^m` in the Charlier basis.
pub fn power_in_charlier_basis<S: Scalar>(m: usize, lambda: &S) -> Vec<S> {
    let mut coords = vec![S::one()];
    for _ in 0..m {
        let mut next = vec![S::zero(); coords.len() + 1];
        for (k, c) in coords.iter().enumerate() {
            next[k + 1] += c.clone();
            if k >= 1 {
                next[k] += c.clone();
                next[k - 1] += lambda.clone() * c.clone();
            }
        }
        coords = next;
    }
    coords
}

/// `m`-th moment of the centered free Poisson law of rate `λ`.
pub fn charlier_moment<S: Scalar>(m: usize, lambda: &S) -> S {
    power_in_charlier_basis(m, lambda).swap_remove(0)
}
