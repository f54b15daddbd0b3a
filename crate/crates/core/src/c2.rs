//! Second piggybacking code family, `C2(n, k, m = s * r, L)`.
//!
//! Columns are grouped in `s` blocks of `r`. Construction runs in four
//! stages:
//!
//! 1. every column is a base codeword;
//! 2. the parity part of within-group column `i` is cyclically shifted by
//!    `i - 1`, so parity row `x` holds `f_{((x - i) mod r) + 1}` and the
//!    diagonal `x = i` always holds `f_1`;
//! 3. the protected symbols of data subset `i` (the first `(s - i) * r`
//!    symbols of each of its nodes) are dealt round-robin into `r (r - 1)`
//!    slots, one per off-diagonal parity cell of group `s - i + 1`;
//! 4. each off-diagonal pair `{(x, i), (i, x)}`, `x < i`, of every group is
//!    mixed: with `a` the stage-3 value at row `x` / column `i` and `b` the
//!    one at row `i` / column `x`, the stored values are `a + b` and
//!    `theta * a + b`.
//!
//! The piggybacks serve data-node repair, the pair mixing serves
//! parity-node repair.

use std::collections::{BTreeMap, HashMap};

use crate::base_mds::BaseCode;
use crate::c1::consecutive_partition;
use crate::code::{verify_mds, ArrayCode, MdsReport};
use crate::error::{param_err, Error, Result};
use crate::field::Gf256;
use crate::grid::{Cell, Grid, Stripe};
use crate::repair::{Operand, PlanBuilder, RepairPlan};

pub const DEFAULT_THETA: Gf256 = Gf256(0x02);

/// A piggyback slot: one-based subset `subset` and slot number `slot` in
/// `1..=r(r-1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiggybackSlot {
    pub subset: usize,
    pub slot: usize,
    pub target: Cell,
    pub terms: Vec<Cell>,
}

/// Two coupled parity cells of one column group. `low_row < high_row` are
/// one-based within-group indices; `upper` is the cell in parity row
/// `low_row`, column `high_row` of the group, `lower` the mirrored one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TransformPair {
    pub group: usize,
    pub low_row: usize,
    pub high_row: usize,
    pub upper: Cell,
    pub lower: Cell,
}

#[derive(Clone, Debug)]
pub struct C2Spec {
    n: usize,
    k: usize,
    s: usize,
    l: usize,
    theta: Gf256,
    base: BaseCode,
    partition: Vec<Vec<usize>>,
    slots: Vec<PiggybackSlot>,
    slot_at: HashMap<Cell, usize>,
    owner: HashMap<Cell, usize>,
}

impl C2Spec {
    pub fn check_params(n: usize, k: usize, s: usize, l: usize, theta: Gf256) -> Result<()> {
        if k == 0 || k >= n {
            return Err(param_err(format!("need 0 < k < n, got n = {n}, k = {k}")));
        }
        let r = n - k;
        if r < 2 {
            return Err(param_err(format!("C2 needs r >= 2, got {r}")));
        }
        if s < 2 || s > r {
            return Err(param_err(format!("C2 needs 2 <= s <= r = {r}, got s = {s}")));
        }
        if l < 1 || l >= s {
            return Err(param_err(format!("C2 needs 1 <= L < s = {s}, got L = {l}")));
        }
        if l > k {
            return Err(param_err(format!("C2 needs L <= k, got L = {l}, k = {k}")));
        }
        if theta == Gf256::ZERO || theta == Gf256::ONE {
            return Err(param_err("theta must not be 0 or 1"));
        }
        if n > 256 {
            return Err(param_err(format!("n = {n} exceeds the field size 256")));
        }
        Ok(())
    }

    pub fn new(n: usize, k: usize, s: usize, l: usize, theta: Gf256) -> Result<Self> {
        Self::check_params(n, k, s, l, theta)?;
        let base = BaseCode::new(n, k)?;
        let r = n - k;
        let partition = consecutive_partition(k, l);
        let per_group = r * (r - 1);

        let mut slots = Vec::with_capacity(per_group * l);
        for subset in 1..=l {
            let group = s - subset;
            let first = slots.len();
            for slot in 1..=per_group {
                let x = slot.div_ceil(r - 1);
                let o = slot - (x - 1) * (r - 1);
                let c = if o < x { o } else { o + 1 };
                slots.push(PiggybackSlot {
                    subset,
                    slot,
                    target: Cell::new(k + x - 1, group * r + c - 1),
                    terms: Vec::new(),
                });
            }
            let ps_cols = (s - subset) * r;
            let mut q = 0;
            for &node in &partition[subset - 1] {
                for col in 0..ps_cols {
                    slots[first + q % per_group].terms.push(Cell::new(node, col));
                    q += 1;
                }
            }
        }

        let mut slot_at = HashMap::new();
        let mut owner = HashMap::new();
        for (idx, sl) in slots.iter().enumerate() {
            slot_at.insert(sl.target, idx);
            for &c in &sl.terms {
                owner.insert(c, idx);
            }
        }

        Ok(C2Spec {
            n,
            k,
            s,
            l,
            theta,
            base,
            partition,
            slots,
            slot_at,
            owner,
        })
    }

    /// Builds the spec and checks the MDS property. If `theta` fails, the
    /// remaining coefficients `2..=255` are tried in order; the report of
    /// the first passing one is returned alongside it.
    pub fn with_verified_theta(n: usize, k: usize, s: usize, l: usize, theta: Gf256) -> Result<(Self, MdsReport)> {
        let first = Self::new(n, k, s, l, theta)?;
        let report = verify_mds(&first)?;
        if report.passed() {
            return Ok((first, report));
        }
        for t in 2..=255u8 {
            if Gf256(t) == theta {
                continue;
            }
            let spec = Self::new(n, k, s, l, Gf256(t))?;
            let report = verify_mds(&spec)?;
            if report.passed() {
                return Ok((spec, report));
            }
        }
        Err(Error::SingularSystem)
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn theta(&self) -> Gf256 {
        self.theta
    }

    /// Data-node subsets, zero-based node indices.
    pub fn partition(&self) -> &[Vec<usize>] {
        &self.partition
    }

    /// One-based subset index of data node `node`.
    pub fn subset_of(&self, node: usize) -> usize {
        self.partition
            .iter()
            .position(|p| p.contains(&node))
            .expect("data node in partition")
            + 1
    }

    pub fn protected_count(&self, i: usize) -> usize {
        self.partition[i - 1].len() * (self.s - i) * self.r()
    }

    pub fn slots(&self) -> &[PiggybackSlot] {
        &self.slots
    }

    pub fn slot(&self, subset: usize, slot: usize) -> &PiggybackSlot {
        let r = self.r();
        &self.slots[(subset - 1) * r * (r - 1) + slot - 1]
    }

    /// The slot whose sum is added onto `cell`, if any.
    pub fn slot_at(&self, cell: Cell) -> Option<&PiggybackSlot> {
        self.slot_at.get(&cell).map(|&i| &self.slots[i])
    }

    /// The slot a protected data cell is folded into.
    pub fn owner_of(&self, cell: Cell) -> Option<&PiggybackSlot> {
        self.owner.get(&cell).map(|&i| &self.slots[i])
    }

    /// Codeword position whose raw value sits at `cell` after the shift.
    pub fn codeword_position(&self, cell: Cell) -> usize {
        if cell.node < self.k {
            return cell.node;
        }
        let r = self.r();
        let x = cell.node - self.k;
        let i = cell.col % r;
        self.k + (x + r - i) % r
    }

    /// All transform pairs, group by group.
    pub fn transform_pairs(&self) -> Vec<TransformPair> {
        let r = self.r();
        let mut out = Vec::with_capacity(self.s * r * (r - 1) / 2);
        for group in 0..self.s {
            for lo in 1..=r {
                for hi in lo + 1..=r {
                    out.push(self.pair(group, lo, hi));
                }
            }
        }
        out
    }

    fn pair(&self, group: usize, lo: usize, hi: usize) -> TransformPair {
        let (k, r) = (self.k, self.r());
        TransformPair {
            group,
            low_row: lo,
            high_row: hi,
            upper: Cell::new(k + lo - 1, group * r + hi - 1),
            lower: Cell::new(k + hi - 1, group * r + lo - 1),
        }
    }

    /// The pair an off-diagonal parity cell belongs to.
    pub fn pair_of(&self, cell: Cell) -> Option<TransformPair> {
        if cell.node < self.k || cell.node >= self.n {
            return None;
        }
        let r = self.r();
        let x = cell.node - self.k + 1;
        let i = cell.col % r + 1;
        let group = cell.col / r;
        match x.cmp(&i) {
            std::cmp::Ordering::Less => Some(self.pair(group, x, i)),
            std::cmp::Ordering::Greater => Some(self.pair(group, i, x)),
            std::cmp::Ordering::Equal => None,
        }
    }

    /// Stage 2 output: shifted base codewords.
    pub fn raw_stripe(&self, data: &Grid) -> Result<Stripe> {
        data.check_shape(self.k, self.m())?;
        let mut stripe = Grid::zeros(self.n, self.m());
        for c in 0..self.m() {
            let word = self.base.codeword(&data.column(c))?;
            for v in 0..self.n {
                let cell = Cell::new(v, c);
                stripe.set(cell, word[self.codeword_position(cell)]);
            }
        }
        Ok(stripe)
    }

    /// Stage 3 output: shifted codewords plus piggybacks.
    pub fn piggybacked_stripe(&self, data: &Grid) -> Result<Stripe> {
        let mut stripe = self.raw_stripe(data)?;
        for sl in &self.slots {
            let sum: Gf256 = sl.terms.iter().map(|&c| data.get(c)).sum();
            stripe.add_to(sl.target, sum);
        }
        Ok(stripe)
    }

    pub fn plan_repair_data(&self, t: usize) -> Result<RepairPlan> {
        if t >= self.k {
            return Err(Error::NotDataNode(t));
        }
        let (k, r, m) = (self.k, self.r(), self.m());
        let u = self.subset_of(t);
        let split = (self.s - u) * r;
        let mut b = PlanBuilder::new(t);
        let mut out = vec![None; m];

        for c in split..m {
            let diag = Cell::new(k + c % r, c);
            let mut sources: Vec<(usize, Cell)> =
                (0..k).filter(|&v| v != t).map(|v| (v, Cell::new(v, c))).collect();
            sources.push((k, diag));
            b.decode_column(c, sources);
            out[c] = Some(b.decoded(c, t));
        }

        let mut solved: BTreeMap<TransformPair, (Operand, Operand)> = BTreeMap::new();
        for (j, slot_out) in out.iter_mut().enumerate().take(split) {
            let cell = Cell::new(t, j);
            let sl = self.owner_of(cell).expect("protected symbol");
            let pair = self.pair_of(sl.target).expect("slots are off-diagonal");
            let (a, bb) = match solved.get(&pair) {
                Some(v) => *v,
                None => {
                    let hi = b.read(pair.upper);
                    let lo = b.read(pair.lower);
                    let v = b.pair_solve(hi, lo, self.theta);
                    solved.insert(pair, v);
                    v
                }
            };
            let stage3 = if sl.target == pair.upper { a } else { bb };
            let raw = b.decoded(sl.target.col, self.codeword_position(sl.target));
            let mut ops = vec![stage3, raw];
            for &term in sl.terms.iter().filter(|&&c| c != cell) {
                ops.push(b.read(term));
            }
            *slot_out = Some(b.sum(ops));
        }
        Ok(b.finish(out.into_iter().map(|o| o.expect("column covered")).collect()))
    }

    pub fn plan_repair_parity(&self, t: usize) -> Result<RepairPlan> {
        if t < self.k || t >= self.n {
            return Err(Error::NotParityNode(t));
        }
        let (k, r, m) = (self.k, self.r(), self.m());
        let x = t - k + 1;
        let theta = self.theta;
        let theta_inv = theta.inv()?;
        let mut b = PlanBuilder::new(t);
        let mut out = vec![None; m];

        for group in 0..self.s {
            let col = group * r + x - 1;
            b.decode_column(col, (0..k).map(|v| (v, Cell::new(v, col))).collect());
        }

        for group in 0..self.s {
            let own_col = group * r + x - 1;
            for i in 1..=r {
                let failed = Cell::new(t, group * r + i - 1);
                if i == x {
                    out[failed.col] = Some(b.decoded(own_col, k));
                    continue;
                }
                let partner = Cell::new(k + i - 1, own_col);
                let mut ops = vec![b.decoded(own_col, self.codeword_position(partner))];
                if let Some(sl) = self.slot_at(partner) {
                    for &term in &sl.terms {
                        ops.push(b.read(term));
                    }
                }
                let partner_stage3 = b.sum(ops);
                let partner_stored = b.read(partner);
                let terms = if x < i {
                    // failed = a + b with b known and stored partner = theta a + b
                    vec![(theta_inv, partner_stored), (theta_inv + Gf256::ONE, partner_stage3)]
                } else {
                    // failed = theta a + b with a known and stored partner = a + b
                    vec![(Gf256::ONE, partner_stored), (theta + Gf256::ONE, partner_stage3)]
                };
                out[failed.col] = Some(b.combine(terms));
            }
        }
        Ok(b.finish(out.into_iter().map(|o| o.expect("column covered")).collect()))
    }
}

impl ArrayCode for C2Spec {
    fn n(&self) -> usize {
        self.n
    }

    fn k(&self) -> usize {
        self.k
    }

    fn m(&self) -> usize {
        self.s * (self.n - self.k)
    }

    fn base(&self) -> &BaseCode {
        &self.base
    }

    fn encode(&self, data: &Grid) -> Result<Stripe> {
        let mut stripe = self.piggybacked_stripe(data)?;
        for p in self.transform_pairs() {
            let a = stripe.get(p.upper);
            let b = stripe.get(p.lower);
            stripe.set(p.upper, a + b);
            stripe.set(p.lower, self.theta * a + b);
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
