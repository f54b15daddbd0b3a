//! What the two code families have in common: encoding, any-`k` decoding
//! through the composed generator, and MDS verification.

use std::fmt;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::base_mds::BaseCode;
use crate::c1::C1Spec;
use crate::c2::{C2Spec, DEFAULT_THETA};
use crate::error::{param_err, Error, Result};
use crate::field::Gf256;
use crate::grid::{Cell, Grid, Stripe};
use crate::matrix::Matrix;
use crate::repair::RepairPlan;

/// A systematic `(n, k, m)` array code: `k` data nodes, `r = n - k` parity
/// nodes, `m` symbols per node per stripe. Encoding must be linear.
pub trait ArrayCode {
    fn n(&self) -> usize;
    fn k(&self) -> usize;
    fn m(&self) -> usize;
    fn r(&self) -> usize {
        self.n() - self.k()
    }
    fn base(&self) -> &BaseCode;
    fn encode(&self, data: &Grid) -> Result<Stripe>;
    fn plan_repair(&self, node: usize) -> Result<RepairPlan>;
}

/// The `n*m x k*m` matrix of the whole encoder. Row `v*m + c` gives stored
/// cell `(v, c)`; column `i*m + j` is data cell `(i, j)`.
pub fn generator(code: &(impl ArrayCode + ?Sized)) -> Result<Matrix> {
    let (n, k, m) = (code.n(), code.k(), code.m());
    let mut gen = Matrix::zeros(n * m, k * m);
    let mut unit = Grid::zeros(k, m);
    for i in 0..k {
        for j in 0..m {
            let cell = Cell::new(i, j);
            unit.set(cell, Gf256::ONE);
            let stripe = code.encode(&unit)?;
            unit.set(cell, Gf256::ZERO);
            for (idx, v) in stripe.cells().iter().enumerate() {
                gen.set(idx, i * m + j, *v);
            }
        }
    }
    Ok(gen)
}

fn check_nodes(n: usize, k: usize, nodes: &[usize]) -> Result<()> {
    if nodes.len() != k {
        return Err(Error::LengthMismatch {
            expected: k,
            got: nodes.len(),
        });
    }
    for (idx, &v) in nodes.iter().enumerate() {
        if v >= n {
            return Err(param_err(format!("node {v} out of range")));
        }
        if nodes[..idx].contains(&v) {
            return Err(Error::DuplicateRow(v));
        }
    }
    Ok(())
}

fn restrict(gen: &Matrix, m: usize, nodes: &[usize]) -> Matrix {
    let rows: Vec<usize> = nodes.iter().flat_map(|&v| (v * m)..(v * m + m)).collect();
    gen.select_rows(&rows)
}

/// Recovers data from a fixed set of `k` nodes. Build once, decode many
/// stripes.
#[derive(Clone, Debug)]
pub struct Decoder {
    nodes: Vec<usize>,
    k: usize,
    m: usize,
    inverse: Matrix,
}

impl Decoder {
    pub fn new(code: &(impl ArrayCode + ?Sized), nodes: &[usize]) -> Result<Self> {
        check_nodes(code.n(), code.k(), nodes)?;
        let gen = generator(code)?;
        Self::from_generator(&gen, code.k(), code.m(), nodes)
    }

    pub fn from_generator(gen: &Matrix, k: usize, m: usize, nodes: &[usize]) -> Result<Self> {
        let inverse = restrict(gen, m, nodes).inverse()?;
        Ok(Decoder {
            nodes: nodes.to_vec(),
            k,
            m,
            inverse,
        })
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// `rows[i]` is the `m`-symbol row of node `self.nodes()[i]`.
    pub fn decode(&self, rows: &[&[Gf256]]) -> Result<Grid> {
        if rows.len() != self.nodes.len() {
            return Err(Error::LengthMismatch {
                expected: self.nodes.len(),
                got: rows.len(),
            });
        }
        let mut obs = Vec::with_capacity(self.k * self.m);
        for row in rows {
            if row.len() != self.m {
                return Err(Error::LengthMismatch {
                    expected: self.m,
                    got: row.len(),
                });
            }
            obs.extend_from_slice(row);
        }
        let flat = self.inverse.mul_vec(&obs)?;
        Ok(Grid::from_fn(self.k, self.m, |i, j| flat[i * self.m + j]))
    }
}

/// One-shot any-`k` decode.
pub fn decode_any_k(code: &(impl ArrayCode + ?Sized), nodes: &[usize], rows: &[&[Gf256]]) -> Result<Grid> {
    Decoder::new(code, nodes)?.decode(rows)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MdsReport {
    pub subsets_checked: usize,
    pub exhaustive: bool,
    /// First `k`-subset of nodes whose system is singular.
    pub witness: Option<Vec<usize>>,
}

impl MdsReport {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

impl fmt::Display for MdsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = if self.exhaustive { "exhaustive" } else { "sampled" };
        match &self.witness {
            None => write!(f, "pass ({} subsets, {mode})", self.subsets_checked),
            Some(w) => {
                let w: Vec<String> = w.iter().map(|v| (v + 1).to_string()).collect();
                write!(
                    f,
                    "FAIL after {} subsets ({mode}); singular node set {{{}}}",
                    self.subsets_checked,
                    w.join(",")
                )
            }
        }
    }
}

pub const EXHAUSTIVE_LIMIT: u128 = 100_000;
pub const SAMPLED_SUBSETS: usize = 10_000;

pub fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Lexicographic enumeration of `k`-subsets of `0..n`.
pub struct Subsets {
    n: usize,
    cur: Option<Vec<usize>>,
}

impl Subsets {
    pub fn new(n: usize, k: usize) -> Self {
        Subsets {
            n,
            cur: (k <= n).then(|| (0..k).collect()),
        }
    }
}

impl Iterator for Subsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.cur.as_mut()?;
        let out = cur.clone();
        let k = cur.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.cur = None;
                break;
            }
            i -= 1;
            if cur[i] < self.n - k + i {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// Checks that every `k`-subset of nodes yields an invertible system:
/// exhaustively when there are at most [`EXHAUSTIVE_LIMIT`] subsets, on
/// [`SAMPLED_SUBSETS`] seeded random subsets otherwise.
pub fn verify_mds(code: &(impl ArrayCode + ?Sized)) -> Result<MdsReport> {
    verify_mds_seeded(code, DEFAULT_SAMPLE_SEED)
}

pub const DEFAULT_SAMPLE_SEED: u64 = 0x5eed;

/// [`verify_mds`] with the seed for sampled subsets given explicitly.
pub fn verify_mds_seeded(code: &(impl ArrayCode + ?Sized), seed: u64) -> Result<MdsReport> {
    let (n, k, m) = (code.n(), code.k(), code.m());
    let gen = generator(code)?;
    let check = |nodes: &[usize]| restrict(&gen, m, nodes).is_invertible();
    if binomial(n, k) <= EXHAUSTIVE_LIMIT {
        let mut checked = 0;
        for nodes in Subsets::new(n, k) {
            checked += 1;
            if !check(&nodes) {
                return Ok(MdsReport {
                    subsets_checked: checked,
                    exhaustive: true,
                    witness: Some(nodes),
                });
            }
        }
        Ok(MdsReport {
            subsets_checked: checked,
            exhaustive: true,
            witness: None,
        })
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for checked in 1..=SAMPLED_SUBSETS {
            let mut nodes = sample(&mut rng, n, k).into_vec();
            nodes.sort_unstable();
            if !check(&nodes) {
                return Ok(MdsReport {
                    subsets_checked: checked,
                    exhaustive: false,
                    witness: Some(nodes),
                });
            }
        }
        Ok(MdsReport {
            subsets_checked: SAMPLED_SUBSETS,
            exhaustive: false,
            witness: None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    C1 = 1,
    C2 = 2,
}

impl Variant {
    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Variant::C1),
            2 => Ok(Variant::C2),
            _ => Err(param_err(format!("unknown variant {v}"))),
        }
    }
}

/// Raw parameter bundle, as it appears on the command line and in shard
/// headers. `s` and `theta` are ignored for C1; for C2, `m` must equal
/// `s * r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CodeParams {
    pub variant: Variant,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub l: usize,
    pub s: usize,
    pub theta: Gf256,
}

impl CodeParams {
    pub fn c1(n: usize, k: usize, m: usize, l: usize) -> Self {
        CodeParams {
            variant: Variant::C1,
            n,
            k,
            m,
            l,
            s: 0,
            theta: Gf256::ZERO,
        }
    }

    pub fn c2(n: usize, k: usize, s: usize, l: usize, theta: Gf256) -> Self {
        CodeParams {
            variant: Variant::C2,
            n,
            k,
            m: s * n.saturating_sub(k),
            l,
            s,
            theta,
        }
    }

    pub fn c2_default(n: usize, k: usize, s: usize, l: usize) -> Self {
        Self::c2(n, k, s, l, DEFAULT_THETA)
    }

    pub fn build(&self) -> Result<CodeSpec> {
        match self.variant {
            Variant::C1 => Ok(CodeSpec::C1(C1Spec::new(self.n, self.k, self.m, self.l)?)),
            Variant::C2 => {
                let r = self.n.saturating_sub(self.k);
                if self.m != self.s * r {
                    return Err(param_err(format!(
                        "C2 needs m = s * r, got m = {}, s = {}, r = {r}",
                        self.m, self.s
                    )));
                }
                Ok(CodeSpec::C2(C2Spec::new(self.n, self.k, self.s, self.l, self.theta)?))
            }
        }
    }
}

impl fmt::Display for CodeParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.variant {
            Variant::C1 => write!(f, "C1({},{},{},{})", self.n, self.k, self.m, self.l),
            Variant::C2 => write!(
                f,
                "C2({},{},{},{}) theta={}",
                self.n, self.k, self.m, self.l, self.theta
            ),
        }
    }
}

/// Either code family behind one type.
#[derive(Clone, Debug)]
pub enum CodeSpec {
    C1(C1Spec),
    C2(C2Spec),
}

impl CodeSpec {
    pub fn params(&self) -> CodeParams {
        match self {
            CodeSpec::C1(c) => CodeParams::c1(c.n(), c.k(), c.m(), c.l()),
            CodeSpec::C2(c) => CodeParams::c2(c.n(), c.k(), c.s(), c.l(), c.theta()),
        }
    }

    pub fn variant(&self) -> Variant {
        match self {
            CodeSpec::C1(_) => Variant::C1,
            CodeSpec::C2(_) => Variant::C2,
        }
    }
}

impl ArrayCode for CodeSpec {
    fn n(&self) -> usize {
        match self {
            CodeSpec::C1(c) => c.n(),
            CodeSpec::C2(c) => c.n(),
        }
    }

    fn k(&self) -> usize {
        match self {
            CodeSpec::C1(c) => c.k(),
            CodeSpec::C2(c) => c.k(),
        }
    }

    fn m(&self) -> usize {
        match self {
            CodeSpec::C1(c) => c.m(),
            CodeSpec::C2(c) => c.m(),
        }
    }

    fn base(&self) -> &BaseCode {
        match self {
            CodeSpec::C1(c) => c.base(),
            CodeSpec::C2(c) => c.base(),
        }
    }

    fn encode(&self, data: &Grid) -> Result<Stripe> {
        match self {
            CodeSpec::C1(c) => c.encode(data),
            CodeSpec::C2(c) => c.encode(data),
        }
    }

    fn plan_repair(&self, node: usize) -> Result<RepairPlan> {
        match self {
            CodeSpec::C1(c) => c.plan_repair(node),
            CodeSpec::C2(c) => c.plan_repair(node),
        }
    }
}
