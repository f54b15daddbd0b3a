//! First piggybacking code family, `C1(n, k, m, L)` with `2 <= m <= r`.
//!
//! The `n` nodes are split into `L` consecutive subsets; the parity nodes
//! all fall into the last one. The first `m - i` symbols of each node of
//! subset `i` are protected symbols. Subset `i`'s protected symbols are
//! dealt round-robin (stride `r - 1`) into the piggyback functions
//! `g(1, i) .. g(r - 1, i)`, and `g(a, i)` is added onto the parity cell in
//! row `k + 1 + a`, column `m + 1 - i` (one-based). For the last subset the
//! deal starts with the parity protected symbols, column by column, and
//! continues with the data protected symbols of that subset.
//!
//! Piggybacks only ever sum symbols from columns left of the cell they are
//! added to, so the code stays MDS: the columns can be peeled left to right.

use std::collections::HashMap;

use crate::base_mds::BaseCode;
use crate::code::ArrayCode;
use crate::error::{param_err, Error, Result};
use crate::field::Gf256;
use crate::grid::{Cell, Grid, Stripe};
use crate::repair::{Operand, PlanBuilder, RepairPlan};

/// One piggyback function `g(alpha, beta)`. Both labels are one-based:
/// `alpha` in `1..r` picks the target parity row, `beta` in `1..=L` the
/// subset whose protected symbols it sums.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiggybackFn {
    pub alpha: usize,
    pub beta: usize,
    pub target: Cell,
    /// Summed cells, all with coefficient one, in dealing order.
    pub terms: Vec<Cell>,
}

#[derive(Clone, Debug)]
pub struct C1Spec {
    n: usize,
    k: usize,
    m: usize,
    l: usize,
    base: BaseCode,
    partition: Vec<Vec<usize>>,
    piggybacks: Vec<PiggybackFn>,
    owner: HashMap<Cell, usize>,
}

/// Sizes of `L` consecutive subsets of `total` items: the first
/// `total mod L` get one extra.
pub(crate) fn partition_sizes(total: usize, parts: usize) -> Vec<usize> {
    let base = total / parts;
    let extra = total - base * parts;
    (0..parts).map(|i| if i < extra { base + 1 } else { base }).collect()
}

pub(crate) fn consecutive_partition(total: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut next = 0;
    partition_sizes(total, parts)
        .into_iter()
        .map(|size| {
            let v: Vec<usize> = (next..next + size).collect();
            next += size;
            v
        })
        .collect()
}

impl C1Spec {
    pub fn check_params(n: usize, k: usize, m: usize, l: usize) -> Result<()> {
        if k == 0 || k >= n {
            return Err(param_err(format!("need 0 < k < n, got n = {n}, k = {k}")));
        }
        let r = n - k;
        if r < 4 {
            return Err(param_err(format!("C1 needs r = n - k >= 4, got {r}")));
        }
        if m < 2 || m > r {
            return Err(param_err(format!("C1 needs 2 <= m <= r = {r}, got m = {m}")));
        }
        if l < 1 || l >= m {
            return Err(param_err(format!("C1 needs 1 <= L < m = {m}, got L = {l}")));
        }
        if n / l < r {
            return Err(param_err(format!(
                "C1 needs floor(n / L) >= r: floor({n} / {l}) = {} < {r}",
                n / l
            )));
        }
        if n > 256 {
            return Err(param_err(format!("n = {n} exceeds the field size 256")));
        }
        Ok(())
    }

    pub fn new(n: usize, k: usize, m: usize, l: usize) -> Result<Self> {
        Self::check_params(n, k, m, l)?;
        let base = BaseCode::new(n, k)?;
        let r = n - k;
        let partition = consecutive_partition(n, l);

        let mut piggybacks = Vec::with_capacity((r - 1) * l);
        for beta in 1..=l {
            let target_col = m - beta;
            let first = piggybacks.len();
            for alpha in 1..r {
                piggybacks.push(PiggybackFn {
                    alpha,
                    beta,
                    target: Cell::new(k + alpha, target_col),
                    terms: Vec::new(),
                });
            }
            let mut deal: Vec<Cell> = Vec::new();
            if beta == l {
                for y in 0..m - l {
                    for x in 0..r {
                        deal.push(Cell::new(k + x, y));
                    }
                }
            }
            for &node in partition[beta - 1].iter().filter(|&&v| v < k) {
                for col in 0..m - beta {
                    deal.push(Cell::new(node, col));
                }
            }
            for (q, cell) in deal.into_iter().enumerate() {
                piggybacks[first + q % (r - 1)].terms.push(cell);
            }
        }

        let mut owner = HashMap::new();
        for (idx, g) in piggybacks.iter().enumerate() {
            for &c in &g.terms {
                let prev = owner.insert(c, idx);
                debug_assert!(prev.is_none(), "cell {c} dealt twice");
            }
        }

        Ok(C1Spec {
            n,
            k,
            m,
            l,
            base,
            partition,
            piggybacks,
            owner,
        })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// Node subsets, zero-based node indices.
    pub fn partition(&self) -> &[Vec<usize>] {
        &self.partition
    }

    /// One-based index of the subset containing `node`.
    pub fn subset_of(&self, node: usize) -> usize {
        self.partition
            .iter()
            .position(|p| p.contains(&node))
            .expect("node in partition")
            + 1
    }

    /// Number of protected symbols in subset `i` (one-based).
    pub fn protected_count(&self, i: usize) -> usize {
        self.partition[i - 1].len() * (self.m - i)
    }

    pub fn piggybacks(&self) -> &[PiggybackFn] {
        &self.piggybacks
    }

    pub fn piggyback(&self, alpha: usize, beta: usize) -> &PiggybackFn {
        let r = self.r();
        &self.piggybacks[(beta - 1) * (r - 1) + alpha - 1]
    }

    /// The piggyback function a protected cell is folded into, if any.
    pub fn owner_of(&self, cell: Cell) -> Option<&PiggybackFn> {
        self.owner.get(&cell).map(|&i| &self.piggybacks[i])
    }

    /// `alpha` of the piggyback holding parity `x` (one-based) of column
    /// `y` (one-based), for `y <= m - L`.
    pub fn parity_slot(&self, x: usize, y: usize) -> usize {
        let r = self.r();
        if x + y <= r {
            x + y - 1
        } else {
            x + y - r
        }
    }

    /// Base codewords per column, before any piggyback.
    fn raw_stripe(&self, data: &Grid) -> Result<Stripe> {
        data.check_shape(self.k, self.m)?;
        let mut stripe = Grid::zeros(self.n, self.m);
        for c in 0..self.m {
            let word = self.base.codeword(&data.column(c))?;
            for (v, val) in word.into_iter().enumerate() {
                stripe.set(Cell::new(v, c), val);
            }
        }
        Ok(stripe)
    }

    pub fn plan_repair_data(&self, t: usize) -> Result<RepairPlan> {
        if t >= self.k {
            return Err(Error::NotDataNode(t));
        }
        let (k, m) = (self.k, self.m);
        let i = self.subset_of(t);
        let mut b = PlanBuilder::new(t);
        let mut out = vec![None; m];

        // Last i columns: k - 1 data cells plus the never-piggybacked first
        // parity row give a full decode.
        for c in m - i..m {
            let sources = (0..=k).filter(|&v| v != t).map(|v| (v, Cell::new(v, c))).collect();
            b.decode_column(c, sources);
            out[c] = Some(b.decoded(c, t));
        }

        for (j, slot) in out.iter_mut().enumerate().take(m - i) {
            let cell = Cell::new(t, j);
            let g = self.owner_of(cell).expect("protected symbol");
            debug_assert!(b.is_decoded(g.target.col));
            let mut ops = vec![b.read(g.target), b.decoded(g.target.col, g.target.node)];
            for &term in g.terms.iter().filter(|&&c| c != cell) {
                ops.push(b.read(term));
            }
            *slot = Some(b.sum(ops));
        }
        Ok(b.finish(out.into_iter().map(|o| o.expect("column covered")).collect()))
    }

    pub fn plan_repair_parity(&self, t: usize) -> Result<RepairPlan> {
        if t < self.k || t >= self.n {
            return Err(Error::NotParityNode(t));
        }
        let (k, m, l) = (self.k, self.m, self.l);
        let x = t - k + 1;
        let mut b = PlanBuilder::new(t);
        let mut out: Vec<Option<Operand>> = vec![None; m];
        let data_sources = |c: usize| (0..k).map(|v| (v, Cell::new(v, c))).collect::<Vec<_>>();

        for c in m - l..m {
            b.decode_column(c, data_sources(c));
        }

        // Unpiggybacked columns: each parity symbol sits in exactly one
        // g(., L), whose target lives in the decoded column m - L.
        for y in 0..m - l {
            let cell = Cell::new(t, y);
            let g = self.owner_of(cell).expect("parity protected symbol");
            if g.target.node == t {
                // Only when m - L = r - 1: the piggyback lands on the
                // failed row itself, so decode this column directly.
                b.decode_column(y, data_sources(y));
                out[y] = Some(b.decoded(y, t));
                continue;
            }
            let mut ops = vec![b.read(g.target), b.decoded(g.target.col, g.target.node)];
            for &term in g.terms.iter().filter(|&&c| c != cell) {
                debug_assert_ne!(term.node, t);
                ops.push(b.read(term));
            }
            out[y] = Some(b.sum(ops));
        }

        for c in m - l..m {
            let raw = b.decoded(c, t);
            if x == 1 {
                out[c] = Some(raw);
                continue;
            }
            let beta = m - c;
            let g = self.piggyback(x - 1, beta);
            let mut ops = vec![raw];
            for &term in &g.terms {
                if term.node == t {
                    ops.push(out[term.col].expect("own parity recovered first"));
                } else {
                    ops.push(b.read(term));
                }
            }
            out[c] = Some(b.sum(ops));
        }
        Ok(b.finish(out.into_iter().map(|o| o.expect("column covered")).collect()))
    }
}

impl ArrayCode for C1Spec {
    fn n(&self) -> usize {
        self.n
    }

    fn k(&self) -> usize {
        self.k
    }

    fn m(&self) -> usize {
        self.m
    }

    fn base(&self) -> &BaseCode {
        &self.base
    }

    fn encode(&self, data: &Grid) -> Result<Stripe> {
        let raw = self.raw_stripe(data)?;
        let mut stripe = raw.clone();
        for g in &self.piggybacks {
            let sum: Gf256 = g.terms.iter().map(|&c| raw.get(c)).sum();
            stripe.add_to(g.target, sum);
        }
        Ok(stripe)
    }

    fn plan_repair(&self, node: usize) -> Result<RepairPlan> {
        if node < self.k {
            self.plan_repair_data(node)
        } else {
            self.plan_repair_parity(node)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repair::ErasedStripe;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn random_data(rng: &mut impl Rng, k: usize, m: usize) -> Grid {
        Grid::from_fn(k, m, |_, _| Gf256(rng.gen()))
    }

    #[test]
    fn partition_example() {
        let spec = C1Spec::new(11, 6, 4, 2).unwrap();
        assert_eq!(spec.partition()[0], vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(spec.partition()[1], vec![6, 7, 8, 9, 10]);
        assert_eq!(spec.protected_count(1), 18);
        assert_eq!(spec.protected_count(2), 10);
    }

    #[test]
    fn param_checks() {
        assert!(matches!(C1Spec::new(11, 6, 4, 3), Err(Error::Param(_))));
        assert!(matches!(C1Spec::new(9, 6, 3, 1), Err(Error::Param(_)))); // r = 3
        assert!(matches!(C1Spec::new(11, 6, 6, 2), Err(Error::Param(_)))); // m > r
        assert!(matches!(C1Spec::new(11, 6, 4, 4), Err(Error::Param(_)))); // L >= m
        assert!(matches!(C1Spec::new(11, 6, 1, 1), Err(Error::Param(_))));
        assert!(C1Spec::new(11, 6, 5, 1).is_ok());
    }

    #[test]
    fn zero_data_zero_stripe() {
        let spec = C1Spec::new(11, 6, 4, 2).unwrap();
        assert!(spec.encode(&Grid::zeros(6, 4)).unwrap().is_zero());
        assert!(matches!(spec.encode(&Grid::zeros(6, 3)), Err(Error::Shape { .. })));
    }

    #[test]
    fn unit_data_hits_one_piggyback() {
        let spec = C1Spec::new(11, 6, 4, 2).unwrap();
        let mut data = Grid::zeros(6, 4);
        data.set(Cell::new(0, 0), Gf256::ONE);
        let stripe = spec.encode(&data).unwrap();
        let raw = spec.raw_stripe(&data).unwrap();
        let g = spec.owner_of(Cell::new(0, 0)).unwrap();
        assert_eq!(g.target, Cell::new(7, 3));
        let mut diff = Vec::new();
        for v in 0..11 {
            for c in 0..4 {
                let cell = Cell::new(v, c);
                if stripe.get(cell) != raw.get(cell) {
                    diff.push((cell, stripe.get(cell) + raw.get(cell)));
                }
            }
        }
        // a_{1,1} itself is also a term... only of g(1,1); parity terms of
        // column 1 are in g(., 2) and add into column 3.
        let mut expected = vec![(Cell::new(7, 3), Gf256::ONE)];
        for gg in spec.piggybacks().iter().filter(|g| g.beta == 2) {
            let s: Gf256 = gg.terms.iter().map(|&c| raw.get(c)).sum();
            if !s.is_zero() {
                expected.push((gg.target, s));
            }
        }
        expected.sort();
        diff.sort();
        assert_eq!(diff, expected);
    }

    #[test]
    fn stripping_piggybacks_leaves_codewords() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = C1Spec::new(12, 7, 4, 2).unwrap();
        let data = random_data(&mut rng, 7, 4);
        let mut stripe = spec.encode(&data).unwrap();
        // subtract piggybacks right to left using only stripe values
        for g in spec.piggybacks().iter().rev() {
            let s: Gf256 = g.terms.iter().map(|&c| stripe.get(c)).sum();
            stripe.add_to(g.target, s);
        }
        for c in 0..4 {
            let col = stripe.column(c);
            assert_eq!(spec.base().codeword(&col[..7]).unwrap(), col);
        }
    }

    #[test]
    fn data_bandwidths_golden() {
        let spec = C1Spec::new(11, 6, 4, 2).unwrap();
        let bw: Vec<usize> = (0..6).map(|t| spec.plan_repair_data(t).unwrap().bandwidth()).collect();
        assert_eq!(bw, vec![20, 20, 19, 19, 20, 20]);
        assert!(matches!(spec.plan_repair_data(6), Err(Error::NotDataNode(6))));
        assert!(matches!(spec.plan_repair_parity(5), Err(Error::NotParityNode(5))));
    }

    #[test]
    fn parity_one_reads() {
        let spec = C1Spec::new(11, 6, 4, 2).unwrap();
        let plan = spec.plan_repair_parity(6).unwrap();
        assert_eq!(plan.bandwidth(), 18);
        let data_reads = plan.reads().iter().filter(|c| c.node < 6).count();
        assert_eq!(data_reads, 12);
    }

    #[test]
    fn every_node_repairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (n, k, m, l) in [(11, 6, 4, 2), (12, 7, 4, 2), (10, 6, 4, 1), (9, 5, 4, 1), (14, 8, 5, 2)] {
            let spec = C1Spec::new(n, k, m, l).unwrap();
            for _ in 0..5 {
                let data = random_data(&mut rng, k, m);
                let stripe = spec.encode(&data).unwrap();
                for t in 0..n {
                    let plan = spec.plan_repair(t).unwrap();
                    let got = plan
                        .execute(spec.base(), &ErasedStripe { stripe: &stripe, erased: t })
                        .unwrap();
                    assert_eq!(got, stripe.row(t), "C1({n},{k},{m},{l}) node {t}");
                }
            }
        }
    }

    #[test]
    fn plans_are_deterministic() {
        let spec = C1Spec::new(11, 6, 4, 2).unwrap();
        for t in 0..11 {
            assert_eq!(spec.plan_repair(t).unwrap(), spec.plan_repair(t).unwrap());
        }
    }

    #[test]
    fn full_width_single_subset_corner() {
        // m = r and L = 1: some parity terms land in their own target row
        let spec = C1Spec::new(9, 5, 4, 1).unwrap();
        let self_row = spec
            .piggybacks()
            .iter()
            .any(|g| g.terms.iter().any(|c| c.node == g.target.node));
        assert!(self_row);
        let cells: BTreeSet<Cell> = spec.piggybacks().iter().flat_map(|g| g.terms.clone()).collect();
        assert_eq!(cells.len(), spec.piggybacks().iter().map(|g| g.terms.len()).sum::<usize>());
    }
}
