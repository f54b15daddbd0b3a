//! Repair plans: which cells to download and the linear program that turns
//! them back into the failed node's row.
//!
//! A plan is plain data. The program is an ordered list of [`Step`]s that
//! write numbered registers; operands are either downloaded cells or
//! registers written by an earlier step. Executing a plan only ever asks the
//! [`CellSource`] for cells in the plan's read set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use crate::analysis::Rational;
use crate::base_mds::BaseCode;
use crate::code::ArrayCode;
use crate::error::{Error, Result};
use crate::field::Gf256;
use crate::grid::{Cell, Grid};
use crate::matrix::Matrix;

pub type Reg = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operand {
    /// A downloaded cell.
    Read(Cell),
    /// A value produced by an earlier step.
    Reg(Reg),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Read(c) => write!(f, "{c}"),
            Operand::Reg(r) => write!(f, "r{r}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    /// Decode one base-code column from `k` cells whose stored values equal
    /// the raw codeword symbols at the given positions, and emit the raw
    /// symbols at the requested codeword positions.
    DecodeColumn {
        column: usize,
        sources: Vec<(usize, Cell)>,
        outputs: Vec<(usize, Reg)>,
    },
    /// `out = sum coeff * operand`.
    Combine {
        terms: Vec<(Gf256, Operand)>,
        out: Reg,
    },
    /// Undo one pairwise transformation: given `high = a + b` and
    /// `low = theta * a + b`, write `a` to `a_out` and `b` to `b_out`.
    PairSolve {
        high: Operand,
        low: Operand,
        theta: Gf256,
        a_out: Reg,
        b_out: Reg,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepairPlan {
    failed: usize,
    reads: BTreeSet<Cell>,
    steps: Vec<Step>,
    outputs: Vec<Operand>,
    registers: usize,
}

impl RepairPlan {
    pub fn failed_node(&self) -> usize {
        self.failed
    }

    pub fn reads(&self) -> &BTreeSet<Cell> {
        &self.reads
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// One operand per column of the failed row.
    pub fn outputs(&self) -> &[Operand] {
        &self.outputs
    }

    /// Repair bandwidth in symbols: the number of distinct cells read.
    pub fn bandwidth(&self) -> usize {
        self.reads.len()
    }

    /// Nodes that have to be contacted.
    pub fn helper_nodes(&self) -> BTreeSet<usize> {
        self.reads.iter().map(|c| c.node).collect()
    }

    /// Checks the structural invariants: no read from the failed row, every
    /// cell operand is in the read set, and registers are written before
    /// they are used.
    pub fn validate(&self) -> Result<()> {
        if let Some(c) = self.reads.iter().find(|c| c.node == self.failed) {
            return Err(Error::ProgramFault(format!("plan reads failed cell {c}")));
        }
        let mut written = vec![false; self.registers];
        let check = |op: &Operand, written: &[bool]| -> Result<()> {
            match *op {
                Operand::Read(c) if !self.reads.contains(&c) => {
                    Err(Error::ProgramFault(format!("cell {c} used but not in read set")))
                }
                Operand::Reg(r) if r >= written.len() || !written[r] => {
                    Err(Error::ProgramFault(format!("register r{r} used before written")))
                }
                _ => Ok(()),
            }
        };
        let write = |r: Reg, written: &mut Vec<bool>| -> Result<()> {
            if r >= written.len() || written[r] {
                return Err(Error::ProgramFault(format!("register r{r} written twice")));
            }
            written[r] = true;
            Ok(())
        };
        for step in &self.steps {
            match step {
                Step::DecodeColumn { sources, outputs, .. } => {
                    for (_, c) in sources {
                        check(&Operand::Read(*c), &written)?;
                    }
                    for (_, r) in outputs {
                        write(*r, &mut written)?;
                    }
                }
                Step::Combine { terms, out } => {
                    for (_, op) in terms {
                        check(op, &written)?;
                    }
                    write(*out, &mut written)?;
                }
                Step::PairSolve {
                    high,
                    low,
                    a_out,
                    b_out,
                    ..
                } => {
                    check(high, &written)?;
                    check(low, &written)?;
                    write(*a_out, &mut written)?;
                    write(*b_out, &mut written)?;
                }
            }
        }
        for op in &self.outputs {
            check(op, &written)?;
        }
        Ok(())
    }

    /// Runs the plan once. For many stripes build a [`PlanExecutor`].
    pub fn execute(&self, base: &BaseCode, source: &impl CellSource) -> Result<Vec<Gf256>> {
        PlanExecutor::new(self, base)?.run(source)
    }

    /// Human-readable listing; node and column numbers are one-based.
    pub fn listing(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "repair plan for node {} ({} symbols)",
            self.failed + 1,
            self.bandwidth()
        );
        let _ = writeln!(s, "reads:");
        let mut by_node: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for c in &self.reads {
            by_node.entry(c.node).or_default().push(c.col + 1);
        }
        for (node, cols) in by_node {
            let cols: Vec<String> = cols.iter().map(usize::to_string).collect();
            let _ = writeln!(s, "  node {:>3}: columns {}", node + 1, cols.join(","));
        }
        let _ = writeln!(s, "program:");
        for step in &self.steps {
            match step {
                Step::DecodeColumn {
                    column,
                    sources,
                    outputs,
                } => {
                    let outs: Vec<String> = outputs
                        .iter()
                        .map(|(p, r)| format!("r{r}=c[{}]", p + 1))
                        .collect();
                    let srcs: Vec<String> = sources
                        .iter()
                        .map(|(p, c)| format!("c[{}]={c}", p + 1))
                        .collect();
                    let _ = writeln!(
                        s,
                        "  decode column {} from {} -> {}",
                        column + 1,
                        srcs.join(" "),
                        outs.join(" ")
                    );
                }
                Step::Combine { terms, out } => {
                    let ts: Vec<String> = terms
                        .iter()
                        .map(|(c, op)| {
                            if *c == Gf256::ONE {
                                op.to_string()
                            } else {
                                format!("{c}*{op}")
                            }
                        })
                        .collect();
                    let _ = writeln!(s, "  r{out} = {}", ts.join(" + "));
                }
                Step::PairSolve {
                    high,
                    low,
                    theta,
                    a_out,
                    b_out,
                } => {
                    let _ = writeln!(
                        s,
                        "  r{a_out}, r{b_out} = pair-solve(high {high}, low {low}, theta {theta})"
                    );
                }
            }
        }
        let _ = writeln!(s, "outputs:");
        for (col, op) in self.outputs.iter().enumerate() {
            let _ = writeln!(s, "  column {} <- {op}", col + 1);
        }
        s
    }
}

/// Where a plan gets its downloaded cells from.
pub trait CellSource {
    fn cell(&self, cell: Cell) -> Option<Gf256>;
}

impl CellSource for Grid {
    fn cell(&self, cell: Cell) -> Option<Gf256> {
        (cell.node < self.rows() && cell.col < self.cols()).then(|| self.get(cell))
    }
}

/// A stripe with one node's row missing.
pub struct ErasedStripe<'a> {
    pub stripe: &'a Grid,
    pub erased: usize,
}

impl CellSource for ErasedStripe<'_> {
    fn cell(&self, cell: Cell) -> Option<Gf256> {
        if cell.node == self.erased {
            None
        } else {
            self.stripe.cell(cell)
        }
    }
}

/// A plan with its column-decoding matrices precomputed, for running the
/// same repair over many stripes.
pub struct PlanExecutor<'p> {
    plan: &'p RepairPlan,
    decoders: Vec<Option<Matrix>>,
}

impl<'p> PlanExecutor<'p> {
    pub fn new(plan: &'p RepairPlan, base: &BaseCode) -> Result<Self> {
        let mut cache: BTreeMap<(Vec<usize>, Vec<usize>), Matrix> = BTreeMap::new();
        let mut decoders = Vec::with_capacity(plan.steps.len());
        for step in &plan.steps {
            match step {
                Step::DecodeColumn {
                    sources, outputs, ..
                } => {
                    let src: Vec<usize> = sources.iter().map(|s| s.0).collect();
                    let dst: Vec<usize> = outputs.iter().map(|o| o.0).collect();
                    let key = (src, dst);
                    let mat = match cache.get(&key) {
                        Some(m) => m.clone(),
                        None => {
                            let m = base.reconstruction_matrix(&key.0, &key.1)?;
                            cache.insert(key, m.clone());
                            m
                        }
                    };
                    decoders.push(Some(mat));
                }
                _ => decoders.push(None),
            }
        }
        Ok(PlanExecutor { plan, decoders })
    }

    pub fn run(&self, source: &impl CellSource) -> Result<Vec<Gf256>> {
        let plan = self.plan;
        let mut regs: Vec<Option<Gf256>> = vec![None; plan.registers];
        let fetch = |op: Operand, regs: &[Option<Gf256>]| -> Result<Gf256> {
            match op {
                Operand::Read(c) => {
                    if !plan.reads.contains(&c) || c.node == plan.failed {
                        return Err(Error::ProgramFault(format!("unplanned read of {c}")));
                    }
                    source.cell(c).ok_or(Error::MissingCell(c))
                }
                Operand::Reg(r) => regs
                    .get(r)
                    .copied()
                    .flatten()
                    .ok_or_else(|| Error::ProgramFault(format!("register r{r} not set"))),
            }
        };
        for (step, decoder) in plan.steps.iter().zip(&self.decoders) {
            match step {
                Step::DecodeColumn {
                    sources, outputs, ..
                } => {
                    let obs = sources
                        .iter()
                        .map(|(_, c)| fetch(Operand::Read(*c), &regs))
                        .collect::<Result<Vec<_>>>()?;
                    let mat = decoder.as_ref().expect("decoder for decode step");
                    let vals = mat.mul_vec(&obs)?;
                    for ((_, r), v) in outputs.iter().zip(vals) {
                        regs[*r] = Some(v);
                    }
                }
                Step::Combine { terms, out } => {
                    let mut acc = Gf256::ZERO;
                    for (coeff, op) in terms {
                        acc += *coeff * fetch(*op, &regs)?;
                    }
                    regs[*out] = Some(acc);
                }
                Step::PairSolve {
                    high,
                    low,
                    theta,
                    a_out,
                    b_out,
                } => {
                    let h = fetch(*high, &regs)?;
                    let l = fetch(*low, &regs)?;
                    let d = (Gf256::ONE + *theta)
                        .inv()
                        .map_err(|_| Error::ProgramFault("theta = 1 in pair solve".into()))?;
                    let a = (h + l) * d;
                    regs[*a_out] = Some(a);
                    regs[*b_out] = Some(h + a);
                }
            }
        }
        plan.outputs.iter().map(|op| fetch(*op, &regs)).collect()
    }
}

/// Incremental construction of a [`RepairPlan`]. Column decodes are
/// collected per column and emitted ahead of every other step, so an output
/// of a decode may be requested at any time.
pub(crate) struct PlanBuilder {
    failed: usize,
    reads: BTreeSet<Cell>,
    decodes: BTreeMap<usize, (Vec<(usize, Cell)>, Vec<(usize, Reg)>)>,
    steps: Vec<Step>,
    next_reg: Reg,
}

impl PlanBuilder {
    pub(crate) fn new(failed: usize) -> Self {
        PlanBuilder {
            failed,
            reads: BTreeSet::new(),
            decodes: BTreeMap::new(),
            steps: Vec::new(),
            next_reg: 0,
        }
    }

    fn fresh(&mut self) -> Reg {
        let r = self.next_reg;
        self.next_reg += 1;
        r
    }

    pub(crate) fn read(&mut self, cell: Cell) -> Operand {
        debug_assert_ne!(cell.node, self.failed, "read from failed node");
        self.reads.insert(cell);
        Operand::Read(cell)
    }

    pub(crate) fn is_decoded(&self, col: usize) -> bool {
        self.decodes.contains_key(&col)
    }

    /// Registers a decode of `col` from the given (codeword position, cell)
    /// sources. Idempotent per column.
    pub(crate) fn decode_column(&mut self, col: usize, sources: Vec<(usize, Cell)>) {
        if self.decodes.contains_key(&col) {
            return;
        }
        for (_, c) in &sources {
            self.read(*c);
        }
        self.decodes.insert(col, (sources, Vec::new()));
    }

    /// The raw base-code symbol at codeword position `pos` of a decoded column.
    pub(crate) fn decoded(&mut self, col: usize, pos: usize) -> Operand {
        if let Some(&(_, r)) = self.decodes[&col].1.iter().find(|(p, _)| *p == pos) {
            return Operand::Reg(r);
        }
        let r = self.fresh();
        self.decodes.get_mut(&col).expect("column decoded").1.push((pos, r));
        Operand::Reg(r)
    }

    pub(crate) fn combine(&mut self, terms: Vec<(Gf256, Operand)>) -> Operand {
        let out = self.fresh();
        self.steps.push(Step::Combine { terms, out });
        Operand::Reg(out)
    }

    /// Sum with unit coefficients.
    pub(crate) fn sum(&mut self, ops: impl IntoIterator<Item = Operand>) -> Operand {
        let terms = ops.into_iter().map(|o| (Gf256::ONE, o)).collect();
        self.combine(terms)
    }

    pub(crate) fn pair_solve(&mut self, high: Operand, low: Operand, theta: Gf256) -> (Operand, Operand) {
        let a_out = self.fresh();
        let b_out = self.fresh();
        self.steps.push(Step::PairSolve {
            high,
            low,
            theta,
            a_out,
            b_out,
        });
        (Operand::Reg(a_out), Operand::Reg(b_out))
    }

    pub(crate) fn finish(self, outputs: Vec<Operand>) -> RepairPlan {
        let mut steps: Vec<Step> = self
            .decodes
            .into_iter()
            .map(|(column, (sources, outputs))| Step::DecodeColumn {
                column,
                sources,
                outputs,
            })
            .collect();
        steps.extend(self.steps);
        let plan = RepairPlan {
            failed: self.failed,
            reads: self.reads,
            steps,
            outputs,
            registers: self.next_reg,
        };
        debug_assert!(plan.validate().is_ok(), "{:?}", plan.validate());
        plan
    }
}

/// Per-node repair bandwidths of a whole code, in symbols per stripe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BandwidthTable {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub per_node: Vec<usize>,
}

impl BandwidthTable {
    pub fn data(&self) -> &[usize] {
        &self.per_node[..self.k]
    }

    pub fn parity(&self) -> &[usize] {
        &self.per_node[self.k..]
    }

    pub fn data_average(&self) -> Rational {
        ratio(self.data().iter().sum(), self.k)
    }

    pub fn parity_average(&self) -> Rational {
        ratio(self.parity().iter().sum(), self.n - self.k)
    }

    /// Average over all nodes, normalised by the `k m` data symbols.
    pub fn gamma_all(&self) -> Rational {
        ratio(self.per_node.iter().sum(), self.n * self.k * self.m)
    }

    pub fn gamma_sys(&self) -> Rational {
        ratio(self.data().iter().sum(), self.k * self.k * self.m)
    }

    pub fn gamma_parity(&self) -> Rational {
        ratio(self.parity().iter().sum(), (self.n - self.k) * self.k * self.m)
    }
}

fn ratio(num: usize, den: usize) -> Rational {
    Rational::new(num as i128, den as i128)
}

pub fn bandwidth_table(code: &(impl ArrayCode + ?Sized)) -> Result<BandwidthTable> {
    let per_node = (0..code.n())
        .map(|v| code.plan_repair(v).map(|p| p.bandwidth()))
        .collect::<Result<Vec<_>>>()?;
    Ok(BandwidthTable {
        n: code.n(),
        k: code.k(),
        m: code.m(),
        per_node,
    })
}
