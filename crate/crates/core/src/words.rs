//! Contraction words indexing iterated products.
//!
//! A word prescribes how `m` kernels are folded left to right. In the Wigner
//! algebra each step is an arc contraction `⌢^r`; in the Poisson algebra a
//! step is either an arc contraction (`σ = 0`) or a star contraction
//! `⋆_r^{r-1}` (`σ = 1`). Folding `h` of order `d` with a kernel of order `q`
//! yields order `d + q - 2r + σ`.

use std::fmt;
use std::str::FromStr;

use crate::error::{ChaosError, Result};

/// Which index set to enumerate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WordSet {
    /// Every legal fold (`A_m`).
    A,
    /// Folds ending in a scalar (`B_m`).
    B,
    /// Balanced words over the pairing alphabet (`D_m`).
    D,
    /// `B_m \ D_m`.
    E,
}

impl FromStr for WordSet {
    type Err = ChaosError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(WordSet::A),
            "B" => Ok(WordSet::B),
            "D" => Ok(WordSet::D),
            "E" => Ok(WordSet::E),
            other => Err(ChaosError::Parse(format!("unknown word set {other:?}"))),
        }
    }
}

/// One fold step: `⌢^r` when `star` is false, `⋆_r^{r-1}` otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Step {
    pub star: bool,
    pub r: usize,
}

impl Step {
    pub fn arc(r: usize) -> Self {
        Step { star: false, r }
    }

    pub fn star(r: usize) -> Self {
        Step { star: true, r }
    }

    /// Order after folding an order-`d` prefix with an order-`q` factor,
    /// or `None` when the step is illegal.
    pub fn apply(self, d: usize, q: usize) -> Option<usize> {
        if self.r > d.min(q) || (self.star && self.r == 0) {
            return None;
        }
        Some(d + q - 2 * self.r + usize::from(self.star))
    }
}

/// Counts completions of partial folds to a scalar.
///
/// `count(p, d)` is the number of ways to fold factors `p..m` onto a prefix of
/// order `d` (made of the first `p` factors) so the result has order 0.
#[derive(Clone, Debug)]
pub struct WordCounter {
    orders: Vec<usize>,
    allow_star: bool,
    table: Vec<Vec<u128>>,
}

impl WordCounter {
    pub fn new(orders: &[usize], allow_star: bool) -> Self {
        let m = orders.len();
        let max_d: usize = orders.iter().sum();
        let mut table = vec![vec![0u128; max_d + 1]; m + 1];
        if m > 0 {
            table[m][0] = 1;
        }
        for p in (1..m).rev() {
            let q = orders[p];
            for d in 0..=max_d {
                let mut total = 0u128;
                for step in steps_for(d, q, allow_star) {
                    if let Some(nd) = step.apply(d, q) {
                        if nd <= max_d {
                            total = total.saturating_add(table[p + 1][nd]);
                        }
                    }
                }
                table[p][d] = total;
            }
        }
        WordCounter {
            orders: orders.to_vec(),
            allow_star,
            table,
        }
    }

    pub fn count(&self, p: usize, d: usize) -> u128 {
        self.table
            .get(p)
            .and_then(|row| row.get(d))
            .copied()
            .unwrap_or(0)
    }

    /// Number of balanced words for the whole factor list.
    pub fn total(&self) -> u128 {
        match self.orders.first() {
            Some(&q) if self.orders.len() == 1 => u128::from(q == 0),
            Some(&q) => self.count(1, q),
            None => 0,
        }
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    pub fn allow_star(&self) -> bool {
        self.allow_star
    }
}

/// Candidate steps from order `d` against an order-`q` factor, in canonical
/// order (arc before star, then increasing `r`).
pub fn steps_for(d: usize, q: usize, allow_star: bool) -> Vec<Step> {
    let top = d.min(q);
    let mut out: Vec<Step> = (0..=top).map(Step::arc).collect();
    if allow_star {
        out.extend((1..=top).map(Step::star));
    }
    out.sort();
    out
}

fn enumerate_steps(orders: &[usize], allow_star: bool, balanced: bool) -> Vec<Vec<Step>> {
    let m = orders.len();
    let mut out = Vec::new();
    if m < 2 {
        return out;
    }
    let counter = balanced.then(|| WordCounter::new(orders, allow_star));
    let mut prefix = Vec::with_capacity(m - 1);
    fn rec(
        orders: &[usize],
        allow_star: bool,
        counter: Option<&WordCounter>,
        p: usize,
        d: usize,
        prefix: &mut Vec<Step>,
        out: &mut Vec<Vec<Step>>,
    ) {
        if p == orders.len() {
            out.push(prefix.clone());
            return;
        }
        let q = orders[p];
        for step in steps_for(d, q, allow_star) {
            let Some(nd) = step.apply(d, q) else { continue };
            if let Some(c) = counter {
                if c.count(p + 1, nd) == 0 {
                    continue;
                }
            }
            prefix.push(step);
            rec(orders, allow_star, counter, p + 1, nd, prefix, out);
            prefix.pop();
        }
    }
    rec(orders, allow_star, counter.as_ref(), 1, orders[0], &mut prefix, &mut out);
    out
}

/// Arc-only word `(r_1, …, r_{m-1})` for `m` kernels of common order `q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContractionWord {
    q: usize,
    m: usize,
    r: Vec<usize>,
}

impl ContractionWord {
    pub fn new(q: usize, m: usize, r: Vec<usize>) -> Result<Self> {
        if m < 2 || r.len() != m - 1 {
            return Err(ChaosError::Domain(format!(
                "word of length {} does not fit m = {m}",
                r.len()
            )));
        }
        if let Some(&bad) = r.iter().find(|&&x| x > q) {
            return Err(ChaosError::ContractionRange {
                index: bad,
                min: 0,
                max: q,
            });
        }
        Ok(ContractionWord { q, m, r })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn r(&self) -> &[usize] {
        &self.r
    }

    pub fn steps(&self) -> Vec<Step> {
        self.r.iter().map(|&r| Step::arc(r)).collect()
    }

    /// Order of the fold after all steps, `None` if some step is illegal.
    pub fn final_order(&self) -> Option<usize> {
        self.r
            .iter()
            .try_fold(self.q, |d, &r| Step::arc(r).apply(d, self.q))
    }

    pub fn in_a(&self) -> bool {
        self.final_order().is_some()
    }

    pub fn in_b(&self) -> bool {
        self.in_a() && 2 * self.r.iter().sum::<usize>() == self.m * self.q
    }

    pub fn in_d(&self) -> bool {
        self.in_b() && self.r.iter().all(|&r| matches!(2 * r, x if x == 0 || x == self.q || x == 2 * self.q))
    }

    pub fn in_e(&self) -> bool {
        self.in_b() && !self.in_d()
    }

    pub fn in_set(&self, set: WordSet) -> bool {
        match set {
            WordSet::A => self.in_a(),
            WordSet::B => self.in_b(),
            WordSet::D => self.in_d(),
            WordSet::E => self.in_e(),
        }
    }
}

impl fmt::Display for ContractionWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.r.iter().map(|r| r.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Words of the requested set for `m` kernels of order `q`, in lexicographic
/// order.
pub fn enumerate_words(q: usize, m: usize, which: WordSet) -> Result<Vec<ContractionWord>> {
    if q == 0 || m < 2 {
        return Err(ChaosError::Domain(format!("need q >= 1 and m >= 2, got q = {q}, m = {m}")));
    }
    let orders = vec![q; m];
    let balanced = which != WordSet::A;
    let words = enumerate_steps(&orders, false, balanced)
        .into_iter()
        .map(|steps| ContractionWord {
            q,
            m,
            r: steps.iter().map(|s| s.r).collect(),
        })
        .filter(|w| w.in_set(which))
        .collect();
    Ok(words)
}

/// Poisson word: pairs `(σ_p, r_p)` with `σ_p = 1` marking a star step.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StarWord {
    q: usize,
    m: usize,
    sigma: Vec<u8>,
    r: Vec<usize>,
}

impl StarWord {
    pub fn new(q: usize, m: usize, sigma: Vec<u8>, r: Vec<usize>) -> Result<Self> {
        if m < 2 || r.len() != m - 1 || sigma.len() != m - 1 {
            return Err(ChaosError::Domain(format!(
                "star word with {} / {} entries does not fit m = {m}",
                sigma.len(),
                r.len()
            )));
        }
        if sigma.iter().any(|&s| s > 1) {
            return Err(ChaosError::Domain("sigma entries must be 0 or 1".into()));
        }
        if let Some(&bad) = r.iter().find(|&&x| x > q) {
            return Err(ChaosError::ContractionRange {
                index: bad,
                min: 0,
                max: q,
            });
        }
        Ok(StarWord { q, m, sigma, r })
    }

    fn from_steps(q: usize, m: usize, steps: &[Step]) -> Self {
        StarWord {
            q,
            m,
            sigma: steps.iter().map(|s| u8::from(s.star)).collect(),
            r: steps.iter().map(|s| s.r).collect(),
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn sigma(&self) -> &[u8] {
        &self.sigma
    }

    pub fn r(&self) -> &[usize] {
        &self.r
    }

    /// Number of star steps.
    pub fn stars(&self) -> usize {
        self.sigma.iter().map(|&s| s as usize).sum()
    }

    pub fn steps(&self) -> Vec<Step> {
        self.sigma
            .iter()
            .zip(&self.r)
            .map(|(&s, &r)| Step { star: s == 1, r })
            .collect()
    }

    pub fn final_order(&self) -> Option<usize> {
        self.steps()
            .into_iter()
            .try_fold(self.q, |d, s| s.apply(d, self.q))
    }

    pub fn in_a(&self) -> bool {
        self.final_order().is_some()
    }

    /// Balance `2Σr = mq + Σσ`, equivalently the fold ends in a scalar.
    pub fn in_b(&self) -> bool {
        self.in_a() && 2 * self.r.iter().sum::<usize>() == self.m * self.q + self.stars()
    }

    /// Even `q`: arc steps over `{0, q/2, q}`. Odd `q`: arcs use `{0, q}` and
    /// stars use `(q+1)/2`.
    pub fn in_d(&self) -> bool {
        if !self.in_b() {
            return false;
        }
        let q = self.q;
        self.sigma.iter().zip(&self.r).all(|(&s, &r)| {
            if q % 2 == 0 {
                s == 0 && (r == 0 || 2 * r == q || r == q)
            } else if s == 0 {
                r == 0 || r == q
            } else {
                r == (q + 1) / 2
            }
        })
    }

    pub fn in_e(&self) -> bool {
        self.in_b() && !self.in_d()
    }

    pub fn in_set(&self, set: WordSet) -> bool {
        match set {
            WordSet::A => self.in_a(),
            WordSet::B => self.in_b(),
            WordSet::D => self.in_d(),
            WordSet::E => self.in_e(),
        }
    }
}

impl fmt::Display for StarWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .sigma
            .iter()
            .zip(&self.r)
            .map(|(s, r)| if *s == 1 { format!("*{r}") } else { r.to_string() })
            .collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Poisson words for `m` kernels of order `q`, in canonical step order.
pub fn enumerate_star_words(q: usize, m: usize, which: WordSet) -> Result<Vec<StarWord>> {
    if q == 0 || m < 2 {
        return Err(ChaosError::Domain(format!("need q >= 1 and m >= 2, got q = {q}, m = {m}")));
    }
    let orders = vec![q; m];
    let balanced = which != WordSet::A;
    Ok(enumerate_steps(&orders, true, balanced)
        .iter()
        .map(|steps| StarWord::from_steps(q, m, steps))
        .filter(|w| w.in_set(which))
        .collect())
}
