//! Set partitions of `[n] = {1, …, n}`, the non-crossing lattice and label
//! words.
//!
//! Enumeration walks restricted-growth strings and prunes any prefix that
//! already contains a crossing, so the cost is proportional to the number of
//! non-crossing partitions rather than the Bell number.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{ChaosError, Result};
use crate::words::ContractionWord;

/// A set partition of `[n]`; elements are 1-based, blocks are sorted and
/// ordered by their least element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NCPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl NCPartition {
    /// Validates that `blocks` cover `[n]` disjointly and canonicalizes.
    pub fn new(n: usize, mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n + 1];
        for block in &mut blocks {
            if block.is_empty() {
                return Err(ChaosError::InvalidPartition("empty block".into()));
            }
            block.sort_unstable();
            for &x in block.iter() {
                if x == 0 || x > n {
                    return Err(ChaosError::InvalidPartition(format!(
                        "element {x} outside 1..={n}"
                    )));
                }
                if std::mem::replace(&mut seen[x], true) {
                    return Err(ChaosError::InvalidPartition(format!(
                        "element {x} appears twice"
                    )));
                }
            }
        }
        if let Some(missing) = (1..=n).find(|&x| !seen[x]) {
            return Err(ChaosError::InvalidPartition(format!(
                "element {missing} not covered"
            )));
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(NCPartition { n, blocks })
    }

    /// Builds the partition from a restricted-growth string (0-based block ids).
    pub fn from_rgs(rgs: &[usize]) -> Self {
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (pos, &b) in rgs.iter().enumerate() {
            if b == blocks.len() {
                blocks.push(Vec::new());
            }
            blocks[b].push(pos + 1);
        }
        NCPartition { n: rgs.len(), blocks }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Block index of each element, indexed by `element - 1`.
    pub fn block_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for (b, block) in self.blocks.iter().enumerate() {
            for &x in block {
                out[x - 1] = b;
            }
        }
        out
    }

    pub fn has_singleton(&self) -> bool {
        self.blocks.iter().any(|b| b.len() == 1)
    }

    pub fn is_pairing(&self) -> bool {
        self.blocks.iter().all(|b| b.len() == 2)
    }

    /// False iff some `x_i < x_j < y_i < y_j` has `x_i, y_i` in one block and
    /// `x_j, y_j` in another.
    pub fn is_noncrossing(&self) -> bool {
        let owner = self.block_of();
        let k = self.blocks.len();
        let mut min = vec![0usize; k];
        let mut last = vec![0usize; k];
        for (pos, &b) in owner.iter().enumerate() {
            let x = pos + 1;
            if last[b] == 0 {
                min[b] = x;
            } else {
                let lb = last[b];
                if (0..k).any(|c| c != b && last[c] != 0 && min[c] < lb && last[c] > lb) {
                    return false;
                }
            }
            last[b] = x;
        }
        true
    }

    /// True iff every block of `coarser` is a union of blocks of `self`.
    pub fn leq(&self, coarser: &NCPartition) -> Result<bool> {
        if self.n != coarser.n {
            return Err(ChaosError::SizeMismatch(self.n, coarser.n));
        }
        let owner = coarser.block_of();
        Ok(self
            .blocks
            .iter()
            .all(|b| b.iter().all(|&x| owner[x - 1] == owner[b[0] - 1])))
    }
}

/// `p ≤ s` in refinement order.
pub fn leq_refinement(p: &NCPartition, s: &NCPartition) -> Result<bool> {
    p.leq(s)
}

impl fmt::Display for NCPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, block) in self.blocks.iter().enumerate() {
            if k > 0 {
                f.write_str("|")?;
            }
            for (j, x) in block.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{x}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for NCPartition {
    type Err = ChaosError;

    /// Parses `"1,5,6|2,3,4"`; `n` is the largest element.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return NCPartition::new(0, Vec::new());
        }
        let mut blocks = Vec::new();
        for part in s.split('|') {
            let block = part
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|e| ChaosError::Parse(format!("bad element {t:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            blocks.push(block);
        }
        let n = blocks.iter().flatten().copied().max().unwrap_or(0);
        NCPartition::new(n, blocks)
    }
}

/// A label word `χ: {1..m} → labels`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabelWord {
    labels: Vec<usize>,
}

impl LabelWord {
    pub fn new(labels: Vec<usize>) -> Self {
        LabelWord { labels }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// All words of length `m` over `alphabet`, in lexicographic order.
    pub fn all(alphabet: &[usize], m: usize) -> Vec<LabelWord> {
        let mut out = vec![Vec::new()];
        for _ in 0..m {
            out = out
                .into_iter()
                .flat_map(|w| {
                    alphabet.iter().map(move |&a| {
                        let mut next = w.clone();
                        next.push(a);
                        next
                    })
                })
                .collect();
        }
        out.into_iter().map(LabelWord::new).collect()
    }
}

impl fmt::Display for LabelWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.labels.iter().map(|l| l.to_string()).collect();
        f.write_str(&parts.join("-"))
    }
}

/// Partition of positions grouping equal labels.
pub fn kernel_partition(chi: &LabelWord) -> NCPartition {
    let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
    let rgs: Vec<usize> = chi
        .labels
        .iter()
        .map(|l| {
            let next = ids.len();
            *ids.entry(*l).or_insert(next)
        })
        .collect();
    NCPartition::from_rgs(&rgs)
}

/// All set partitions of `[n]` in restricted-growth-string order.
pub fn enumerate_set_partitions(n: usize) -> Vec<NCPartition> {
    let mut out = Vec::new();
    let mut rgs = Vec::with_capacity(n);
    fn rec(n: usize, rgs: &mut Vec<usize>, blocks: usize, out: &mut Vec<NCPartition>) {
        if rgs.len() == n {
            out.push(NCPartition::from_rgs(rgs));
            return;
        }
        for b in 0..=blocks {
            rgs.push(b);
            rec(n, rgs, blocks.max(b + 1), out);
            rgs.pop();
        }
    }
    rec(n, &mut rgs, 0, &mut out);
    out
}

/// Non-crossing partitions of `[n]`, filtered by `keep`, in RGS order.
fn enumerate_nc_filtered<F: Fn(&NCPartition) -> bool>(n: usize, keep: F) -> Vec<NCPartition> {
    struct State {
        rgs: Vec<usize>,
        min: Vec<usize>,
        last: Vec<usize>,
    }
    fn rec<F: Fn(&NCPartition) -> bool>(
        n: usize,
        st: &mut State,
        keep: &F,
        out: &mut Vec<NCPartition>,
    ) {
        let x = st.rgs.len() + 1;
        if x > n {
            let p = NCPartition::from_rgs(&st.rgs);
            if keep(&p) {
                out.push(p);
            }
            return;
        }
        let blocks = st.min.len();
        for b in 0..=blocks {
            if b < blocks {
                let lb = st.last[b];
                let crosses = (0..blocks).any(|c| c != b && st.min[c] < lb && st.last[c] > lb);
                if crosses {
                    continue;
                }
                let prev = st.last[b];
                st.last[b] = x;
                st.rgs.push(b);
                rec(n, st, keep, out);
                st.rgs.pop();
                st.last[b] = prev;
            } else {
                st.min.push(x);
                st.last.push(x);
                st.rgs.push(b);
                rec(n, st, keep, out);
                st.rgs.pop();
                st.min.pop();
                st.last.pop();
            }
        }
    }
    let mut st = State {
        rgs: Vec::with_capacity(n),
        min: Vec::new(),
        last: Vec::new(),
    };
    let mut out = Vec::new();
    rec(n, &mut st, &keep, &mut out);
    out
}

/// `NC(n)`.
pub fn enumerate_nc(n: usize) -> Vec<NCPartition> {
    enumerate_nc_filtered(n, |_| true)
}

/// Non-crossing pair partitions `NC₂(n)`; empty for odd `n`.
pub fn enumerate_nc2(n: usize) -> Vec<NCPartition> {
    if n % 2 == 1 {
        return Vec::new();
    }
    enumerate_nc_filtered(n, NCPartition::is_pairing)
}

/// Non-crossing partitions without singletons, `NC≥2(n)`.
pub fn enumerate_nc_ge2(n: usize) -> Vec<NCPartition> {
    enumerate_nc_filtered(n, |p| !p.has_singleton())
}

/// `R(m, j)`: partitions in `NC≥2(m)` with exactly `j` blocks.
pub fn count_r(m: usize, j: usize) -> u64 {
    enumerate_nc_ge2(m)
        .iter()
        .filter(|p| p.num_blocks() == j)
        .count() as u64
}

/// `R(m, j)` for all `j` in `0..=m`.
pub fn count_r_row(m: usize) -> Vec<u64> {
    let mut row = vec![0u64; m + 1];
    for p in enumerate_nc_ge2(m) {
        row[p.num_blocks()] += 1;
    }
    row
}

/// Replays a word of `D_m` as a stack of open blocks and returns the
/// resulting partition of `[m]`.
pub fn word_to_partition(w: &ContractionWord) -> Result<NCPartition> {
    if !w.in_d() {
        return Err(ChaosError::Domain(format!(
            "word {:?} is not in D_{} for q = {}",
            w.r(),
            w.m(),
            w.q()
        )));
    }
    let q = w.q();
    let mut closed: Vec<Vec<usize>> = Vec::new();
    let mut open: Vec<Vec<usize>> = vec![vec![1]];
    for (j, &r) in w.r().iter().enumerate() {
        let elem = j + 2;
        if r == 0 {
            open.push(vec![elem]);
            continue;
        }
        let top = open.last_mut().ok_or_else(|| {
            ChaosError::Inconsistency(format!("no open block when reading position {}", j + 1))
        })?;
        top.push(elem);
        if r == q {
            closed.push(open.pop().unwrap());
        }
    }
    if !open.is_empty() {
        return Err(ChaosError::Inconsistency(format!(
            "{} block(s) left open",
            open.len()
        )));
    }
    NCPartition::new(w.m(), closed)
}

/// Inverse of [`word_to_partition`]: each block minimum above 1 opens with
/// `0`, inner links get `q/2` and the closing link gets `q`.
pub fn partition_to_word(p: &NCPartition, q: usize) -> Result<ContractionWord> {
    if q == 0 || q % 2 == 1 {
        return Err(ChaosError::Domain(format!("q must be even and positive, got {q}")));
    }
    if p.has_singleton() {
        return Err(ChaosError::Domain("partition has a singleton block".into()));
    }
    if !p.is_noncrossing() {
        return Err(ChaosError::Domain("partition is crossing".into()));
    }
    if p.n() < 2 {
        return Err(ChaosError::Domain("need at least two elements".into()));
    }
    let mut r = vec![0usize; p.n() - 1];
    for block in p.blocks() {
        let k = block.len();
        for (i, &x) in block.iter().enumerate().skip(1) {
            r[x - 2] = if i == k - 1 { q } else { q / 2 };
        }
    }
    ContractionWord::new(q, p.n(), r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(s: &str) -> NCPartition {
        s.parse().unwrap()
    }

    #[test]
    fn noncrossing_examples() {
        assert!(!part("1,3|2,4").is_noncrossing());
        assert!(part("1,4|2,3").is_noncrossing());
        assert!(part("1,5,6,9,10|2,3,4|7,8").is_noncrossing());
        assert!(!part("1,4|2,5|3").is_noncrossing());
        assert!(!part("1,3|2,5|4,6").is_noncrossing());
        let all = enumerate_set_partitions(4);
        assert_eq!(all.len(), 15);
        assert_eq!(all.iter().filter(|p| p.is_noncrossing()).count(), 14);
    }

    #[test]
    fn brute_force_agrees_with_pruned_enumeration() {
        for n in 0..=8 {
            let brute: Vec<_> = enumerate_set_partitions(n)
                .into_iter()
                .filter(NCPartition::is_noncrossing)
                .collect();
            assert_eq!(brute, enumerate_nc(n), "n = {n}");
        }
    }

    #[test]
    fn crossing_predicate_matches_definition() {
        fn crossing_by_definition(p: &NCPartition) -> bool {
            let owner = p.block_of();
            let n = p.n();
            for a in 0..n {
                for b in a + 1..n {
                    for c in b + 1..n {
                        for d in c + 1..n {
                            if owner[a] == owner[c] && owner[b] == owner[d] && owner[a] != owner[b]
                            {
                                return true;
                            }
                        }
                    }
                }
            }
            false
        }
        for n in 0..=7 {
            for p in enumerate_set_partitions(n) {
                assert_eq!(p.is_noncrossing(), !crossing_by_definition(&p), "{p}");
            }
        }
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_nc(0).len(), 1);
        assert_eq!(enumerate_nc(4).len(), 14);
        assert_eq!(enumerate_nc(10).len(), 16796);
        let nc2: Vec<String> = enumerate_nc2(4).iter().map(|p| p.to_string()).collect();
        assert_eq!(nc2, vec!["1,2|3,4", "1,4|2,3"]);
        let ge2: Vec<String> = enumerate_nc_ge2(4).iter().map(|p| p.to_string()).collect();
        assert_eq!(ge2, vec!["1,2,3,4", "1,2|3,4", "1,4|2,3"]);
        assert!(enumerate_nc2(5).is_empty());
    }

    #[test]
    fn refinement_examples() {
        assert!(leq_refinement(&part("1,2|3,4"), &part("1,2,3,4")).unwrap());
        assert!(!leq_refinement(&part("1,3|2,4"), &part("1,2|3,4")).unwrap());
        for p in enumerate_nc(5) {
            assert!(p.leq(&p).unwrap());
        }
        assert_eq!(
            part("1,2").leq(&part("1,2,3")),
            Err(ChaosError::SizeMismatch(2, 3))
        );
    }

    #[test]
    fn kernel_partition_examples() {
        assert_eq!(kernel_partition(&LabelWord::new(vec![1, 2, 1, 2])), part("1,3|2,4"));
        assert_eq!(kernel_partition(&LabelWord::new(vec![4; 5])), part("1,2,3,4,5"));
        assert_eq!(kernel_partition(&LabelWord::new(vec![7, 7, 9])), part("1,2|3"));
    }

    #[test]
    fn bijection_golden() {
        let w = ContractionWord::new(10, 10, vec![0, 5, 10, 5, 5, 0, 10, 5, 10]).unwrap();
        let p = word_to_partition(&w).unwrap();
        assert_eq!(p.to_string(), "1,5,6,9,10|2,3,4|7,8");
        assert_eq!(partition_to_word(&p, 10).unwrap(), w);

        let w = ContractionWord::new(2, 4, vec![2, 0, 2]).unwrap();
        assert_eq!(word_to_partition(&w).unwrap(), part("1,2|3,4"));
        let w = ContractionWord::new(2, 4, vec![1, 1, 2]).unwrap();
        assert_eq!(word_to_partition(&w).unwrap(), part("1,2,3,4"));

        assert_eq!(partition_to_word(&part("1,2"), 2).unwrap().r(), &[2]);
        assert_eq!(partition_to_word(&part("1,4|2,3"), 2).unwrap().r(), &[0, 2, 2]);
    }

    #[test]
    fn bijection_errors() {
        assert!(partition_to_word(&part("1,2|3"), 2).is_err());
        assert!(partition_to_word(&part("1,3|2,4"), 2).is_err());
        assert!(partition_to_word(&part("1,2"), 3).is_err());
        let not_d = ContractionWord::new(4, 3, vec![3, 3]).unwrap();
        assert!(matches!(word_to_partition(&not_d), Err(ChaosError::Domain(_))));
    }

    #[test]
    fn round_trip_over_nc_ge2() {
        for q in [2, 4, 6] {
            for m in 2..=8 {
                for p in enumerate_nc_ge2(m) {
                    let w = partition_to_word(&p, q).unwrap();
                    assert!(w.in_d() && w.in_a() && w.in_b());
                    assert_eq!(word_to_partition(&w).unwrap(), p);
                }
            }
        }
    }

    #[test]
    fn count_r_examples() {
        assert_eq!(count_r(4, 1), 1);
        assert_eq!(count_r(4, 2), 2);
        assert_eq!(count_r(2, 1), 1);
        assert_eq!(count_r(3, 2), 0);
        for m in 2..=10 {
            let total: u64 = count_r_row(m).iter().sum();
            assert_eq!(total as usize, enumerate_nc_ge2(m).len());
        }
    }

    #[test]
    fn parse_and_display() {
        let p = part("7,8|1,5,6,9,10|2,3,4");
        assert_eq!(p.to_string(), "1,5,6,9,10|2,3,4|7,8");
        assert!("1,2|2".parse::<NCPartition>().is_err());
        assert!("1,3".parse::<NCPartition>().is_err());
        assert!("a".parse::<NCPartition>().is_err());
        assert_eq!("".parse::<NCPartition>().unwrap().n(), 0);
    }
}
