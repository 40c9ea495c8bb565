//! The abstract domain: per-qubit basis flags paired with a partition of the
//! register, the lattice operations on both components, and the abstract
//! transfer functions with a Kleene fixpoint for loops.
//!
//! A flag records what is known about a qubit's basis: `Std`/`Diag` mean the
//! qubit is a classical state of the standard or diagonal basis, `Bot` means
//! both (only the maximally mixed qubit qualifies), `Top` means no information.
//! A partition over-approximates entanglement: the state is separable across
//! its blocks.

use crate::syntax::{Command, PathStep, Program, ProgramPoint, QubitId};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AbstractError {
    #[error("mismatched qubit sets: {left} vs {right} qubits")]
    MismatchedQubitSets { left: usize, right: usize },
    #[error("partition is not a partition of the register: {reason}")]
    MalformedPartition { reason: String },
}

// ---------------------------------------------------------------------------
// Basis flags
// ---------------------------------------------------------------------------

/// The four-point basis lattice: `Bot ≤ Std ≤ Top`, `Bot ≤ Diag ≤ Top`,
/// with `Std` and `Diag` incomparable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasisFlag {
    Bot,
    Std,
    Diag,
    Top,
}

impl BasisFlag {
    pub const ALL: [BasisFlag; 4] = [BasisFlag::Bot, BasisFlag::Std, BasisFlag::Diag, BasisFlag::Top];

    pub fn leq(self, other: BasisFlag) -> bool {
        self == BasisFlag::Bot || other == BasisFlag::Top || self == other
    }

    pub fn join(self, other: BasisFlag) -> BasisFlag {
        if self.leq(other) {
            other
        } else if other.leq(self) {
            self
        } else {
            BasisFlag::Top
        }
    }

    pub fn meet(self, other: BasisFlag) -> BasisFlag {
        if self.leq(other) {
            self
        } else if other.leq(self) {
            other
        } else {
            BasisFlag::Bot
        }
    }

    pub fn text(self) -> &'static str {
        match self {
            BasisFlag::Bot => "bot",
            BasisFlag::Std => "s",
            BasisFlag::Diag => "d",
            BasisFlag::Top => "top",
        }
    }

    pub fn parse(text: &str) -> Option<BasisFlag> {
        Some(match text {
            "bot" | "⊥" => BasisFlag::Bot,
            "s" => BasisFlag::Std,
            "d" => BasisFlag::Diag,
            "top" | "⊤" => BasisFlag::Top,
            _ => return None,
        })
    }
}

impl fmt::Display for BasisFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.text())
    }
}

/// A total flag map over the register, indexed by qubit ordinal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisMap {
    flags: Vec<BasisFlag>,
}

impl BasisMap {
    pub fn uniform(count: usize, flag: BasisFlag) -> Self {
        BasisMap { flags: vec![flag; count] }
    }

    pub fn from_flags(flags: Vec<BasisFlag>) -> Self {
        BasisMap { flags }
    }

    pub fn count(&self) -> usize {
        self.flags.len()
    }

    pub fn get(&self, qubit: usize) -> BasisFlag {
        self.flags[qubit]
    }

    pub fn flags(&self) -> &[BasisFlag] {
        &self.flags
    }

    /// Functional update `b^{q ↦ flag}`.
    pub fn with(&self, qubit: usize, flag: BasisFlag) -> Self {
        let mut flags = self.flags.clone();
        flags[qubit] = flag;
        BasisMap { flags }
    }

    pub fn leq(&self, other: &BasisMap) -> Result<bool, AbstractError> {
        check_counts(self.count(), other.count())?;
        Ok(self.flags.iter().zip(&other.flags).all(|(a, b)| a.leq(*b)))
    }

    pub fn join(&self, other: &BasisMap) -> Result<BasisMap, AbstractError> {
        check_counts(self.count(), other.count())?;
        Ok(BasisMap {
            flags: self.flags.iter().zip(&other.flags).map(|(a, b)| a.join(*b)).collect(),
        })
    }

    pub fn meet(&self, other: &BasisMap) -> Result<BasisMap, AbstractError> {
        check_counts(self.count(), other.count())?;
        Ok(BasisMap {
            flags: self.flags.iter().zip(&other.flags).map(|(a, b)| a.meet(*b)).collect(),
        })
    }
}

fn check_counts(left: usize, right: usize) -> Result<(), AbstractError> {
    if left == right {
        Ok(())
    } else {
        Err(AbstractError::MismatchedQubitSets { left, right })
    }
}

// ---------------------------------------------------------------------------
// Partitions
// ---------------------------------------------------------------------------

/// A partition of the qubit ordinals `0..count` into disjoint non-empty
/// blocks. Canonical form: members ascending within a block, blocks sorted by
/// least member.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    count: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// The finest partition: every qubit in its own block.
    pub fn singletons(count: usize) -> Self {
        Partition { count, blocks: (0..count).map(|q| vec![q]).collect() }
    }

    /// The coarsest partition: one block holding the whole register.
    pub fn full(count: usize) -> Self {
        if count == 0 {
            return Partition { count, blocks: Vec::new() };
        }
        Partition { count, blocks: vec![(0..count).collect()] }
    }

    /// Build from explicit blocks, validating the partition conditions.
    pub fn from_blocks(count: usize, blocks: Vec<Vec<usize>>) -> Result<Self, AbstractError> {
        let mut seen = vec![false; count];
        for block in &blocks {
            if block.is_empty() {
                return Err(AbstractError::MalformedPartition { reason: "empty block".to_string() });
            }
            for &q in block {
                if q >= count {
                    return Err(AbstractError::MalformedPartition {
                        reason: format!("ordinal {q} out of range for {count} qubits"),
                    });
                }
                if seen[q] {
                    return Err(AbstractError::MalformedPartition {
                        reason: format!("ordinal {q} appears in two blocks"),
                    });
                }
                seen[q] = true;
            }
        }
        if let Some(q) = seen.iter().position(|s| !s) {
            return Err(AbstractError::MalformedPartition {
                reason: format!("ordinal {q} is not covered"),
            });
        }
        let mut blocks: Vec<Vec<usize>> = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        blocks.sort_by_key(|b| b[0]);
        Ok(Partition { count, blocks })
    }

    /// Rebuild the canonical form from a block-representative assignment.
    fn from_representatives(count: usize, mut rep_of: impl FnMut(usize) -> usize) -> Self {
        let mut by_rep: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for q in 0..count {
            by_rep.entry(rep_of(q)).or_default().push(q);
        }
        let mut blocks: Vec<Vec<usize>> = by_rep.into_values().collect();
        blocks.sort_by_key(|b| b[0]);
        Partition { count, blocks }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_of(&self, qubit: usize) -> &[usize] {
        self.blocks
            .iter()
            .find(|b| b.contains(&qubit))
            .expect("qubit ordinal within range")
    }

    fn block_index_of(&self) -> Vec<usize> {
        let mut index = vec![0usize; self.count];
        for (i, block) in self.blocks.iter().enumerate() {
            for &q in block {
                index[q] = i;
            }
        }
        index
    }

    /// Refinement order: true iff every block of `self` is contained in some
    /// block of `other`.
    pub fn leq(&self, other: &Partition) -> Result<bool, AbstractError> {
        check_counts(self.count, other.count)?;
        let other_index = other.block_index_of();
        Ok(self
            .blocks
            .iter()
            .all(|block| block.iter().all(|&q| other_index[q] == other_index[block[0]])))
    }

    /// Finest partition coarser than both: connected components of the union
    /// of the two same-block relations.
    pub fn join(&self, other: &Partition) -> Result<Partition, AbstractError> {
        check_counts(self.count, other.count)?;
        let mut uf = UnionFind::new(self.count);
        for block in self.blocks.iter().chain(&other.blocks) {
            for pair in block.windows(2) {
                uf.union(pair[0], pair[1]);
            }
        }
        Ok(Partition::from_representatives(self.count, |q| uf.find(q)))
    }

    /// Coarsest common refinement: blockwise pairwise intersections.
    pub fn meet(&self, other: &Partition) -> Result<Partition, AbstractError> {
        check_counts(self.count, other.count)?;
        let mut blocks = Vec::new();
        for a in &self.blocks {
            for b in &other.blocks {
                let inter: Vec<usize> = a.iter().copied().filter(|q| b.contains(q)).collect();
                if !inter.is_empty() {
                    blocks.push(inter);
                }
            }
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(Partition { count: self.count, blocks })
    }

    /// Extract `qubit` into its own singleton block.
    pub fn remove(&self, qubit: usize) -> Result<Partition, AbstractError> {
        if qubit >= self.count {
            return Err(AbstractError::MismatchedQubitSets { left: qubit + 1, right: self.count });
        }
        let mut blocks: Vec<Vec<usize>> = self
            .blocks
            .iter()
            .map(|b| b.iter().copied().filter(|&q| q != qubit).collect())
            .filter(|b: &Vec<usize>| !b.is_empty())
            .collect();
        blocks.push(vec![qubit]);
        blocks.sort_by_key(|b| b[0]);
        Ok(Partition { count: self.count, blocks })
    }

    /// The partition with block `{q1, q2}` and every other qubit a singleton.
    pub fn pair(count: usize, q1: usize, q2: usize) -> Result<Partition, AbstractError> {
        if q1 == q2 || q1 >= count || q2 >= count {
            return Err(AbstractError::MismatchedQubitSets {
                left: q1.max(q2) + 1,
                right: count,
            });
        }
        let mut blocks: Vec<Vec<usize>> =
            (0..count).filter(|&q| q != q1 && q != q2).map(|q| vec![q]).collect();
        blocks.push(vec![q1.min(q2), q1.max(q2)]);
        blocks.sort_by_key(|b| b[0]);
        Ok(Partition { count, blocks })
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(count: usize) -> Self {
        UnionFind { parent: (0..count).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

/// All partitions of `0..count`, in a deterministic order (used by the
/// exhaustive lattice suites; 15 partitions for a 4-element set).
pub fn enumerate_partitions(count: usize) -> Vec<Partition> {
    fn go(count: usize, next: usize, blocks: &mut Vec<Vec<usize>>, out: &mut Vec<Partition>) {
        if next == count {
            out.push(
                Partition::from_blocks(count, blocks.clone()).expect("enumerated blocks are valid"),
            );
            return;
        }
        for i in 0..blocks.len() {
            blocks[i].push(next);
            go(count, next + 1, blocks, out);
            blocks[i].pop();
        }
        blocks.push(vec![next]);
        go(count, next + 1, blocks, out);
        blocks.pop();
    }
    let mut out = Vec::new();
    if count == 0 {
        return vec![Partition { count: 0, blocks: Vec::new() }];
    }
    go(count, 0, &mut Vec::new(), &mut out);
    out
}

// ---------------------------------------------------------------------------
// Abstract elements
// ---------------------------------------------------------------------------

/// One point of the abstract domain: a flag map and a partition over the same
/// register, ordered componentwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractElement {
    pub flags: BasisMap,
    pub partition: Partition,
}

impl AbstractElement {
    pub fn new(flags: BasisMap, partition: Partition) -> Result<Self, AbstractError> {
        check_counts(flags.count(), partition.count())?;
        Ok(AbstractElement { flags, partition })
    }

    /// Least element: all flags `Bot`, all qubits separate.
    pub fn bottom(count: usize) -> Self {
        AbstractElement {
            flags: BasisMap::uniform(count, BasisFlag::Bot),
            partition: Partition::singletons(count),
        }
    }

    /// Greatest element: all flags `Top`, one block.
    pub fn top(count: usize) -> Self {
        AbstractElement {
            flags: BasisMap::uniform(count, BasisFlag::Top),
            partition: Partition::full(count),
        }
    }

    pub fn count(&self) -> usize {
        self.flags.count()
    }

    pub fn leq(&self, other: &AbstractElement) -> Result<bool, AbstractError> {
        Ok(self.flags.leq(&other.flags)? && self.partition.leq(&other.partition)?)
    }

    pub fn join(&self, other: &AbstractElement) -> Result<AbstractElement, AbstractError> {
        Ok(AbstractElement {
            flags: self.flags.join(&other.flags)?,
            partition: self.partition.join(&other.partition)?,
        })
    }

    pub fn meet(&self, other: &AbstractElement) -> Result<AbstractElement, AbstractError> {
        Ok(AbstractElement {
            flags: self.flags.meet(&other.flags)?,
            partition: self.partition.meet(&other.partition)?,
        })
    }
}

// ---------------------------------------------------------------------------
// Transfer functions
// ---------------------------------------------------------------------------

/// Which CNot rule fires for a pair of control/target flags, and whether more
/// than one guard matched (the rules overlap; the first match wins).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CnotCase {
    pub case_index: usize,
    pub overlapping: bool,
}

/// Classify the CNot transfer case for `(control, target)` flags.
///
/// Guards in match order:
/// 1. control is `Std` or target is `Diag`: no entanglement, flags preserved.
/// 2. control `Bot`, target above `Bot`: control becomes `Std`.
/// 3. control above `Bot`, target `Bot`: target becomes `Diag`.
/// 4. both `Bot`: both qubits are maximally mixed and decoupled, so the gate
///    leaves the state invariant; flags preserved (see `apply_cnot`).
/// 5. otherwise: both flags to `Top`, blocks of the two qubits merged.
pub fn classify_cnot(control: BasisFlag, target: BasisFlag) -> CnotCase {
    use BasisFlag::*;
    let guards = [
        control == Std || target == Diag,
        control == Bot && target != Bot,
        control != Bot && target == Bot,
        control == Bot && target == Bot,
    ];
    let matched = guards.iter().filter(|&&g| g).count();
    let case_index = guards.iter().position(|&g| g).map(|i| i + 1).unwrap_or(5);
    CnotCase { case_index, overlapping: matched > 1 }
}

fn apply_cnot(
    elem: &AbstractElement,
    control: usize,
    target: usize,
) -> Result<AbstractElement, AbstractError> {
    let b = &elem.flags;
    let case = classify_cnot(b.get(control), b.get(target));
    Ok(match case.case_index {
        1 => elem.clone(),
        2 => AbstractElement { flags: b.with(control, BasisFlag::Std), partition: elem.partition.clone() },
        3 => AbstractElement { flags: b.with(target, BasisFlag::Diag), partition: elem.partition.clone() },
        // Two `Bot` flags pin both qubits to the maximally mixed state
        // decoupled from the rest; CNot fixes that state exactly.
        4 => elem.clone(),
        _ => {
            let flags = b.with(control, BasisFlag::Top).with(target, BasisFlag::Top);
            let merged = elem
                .partition
                .join(&Partition::pair(elem.count(), control, target)?)?;
            AbstractElement { flags, partition: merged }
        }
    })
}

fn apply_h(elem: &AbstractElement, q: usize) -> AbstractElement {
    let flag = match elem.flags.get(q) {
        BasisFlag::Std => BasisFlag::Diag,
        BasisFlag::Diag => BasisFlag::Std,
        other => other,
    };
    AbstractElement { flags: elem.flags.with(q, flag), partition: elem.partition.clone() }
}

fn apply_t(elem: &AbstractElement, q: usize) -> AbstractElement {
    let flag = match elem.flags.get(q) {
        BasisFlag::Diag => BasisFlag::Top,
        BasisFlag::Bot => BasisFlag::Std,
        other => other,
    };
    AbstractElement { flags: elem.flags.with(q, flag), partition: elem.partition.clone() }
}

/// Abstract effect of measuring `q`: the qubit collapses to the standard
/// basis and separates from the rest of the register.
fn measure_step(elem: &AbstractElement, q: usize) -> Result<AbstractElement, AbstractError> {
    Ok(AbstractElement {
        flags: elem.flags.with(q, BasisFlag::Std),
        partition: elem.partition.remove(q)?,
    })
}

fn ordinal(elem: &AbstractElement, q: &QubitId) -> Result<usize, AbstractError> {
    if q.index < elem.count() {
        Ok(q.index)
    } else {
        Err(AbstractError::MismatchedQubitSets { left: q.index + 1, right: elem.count() })
    }
}

/// The abstract semantics of a command.
pub fn abstract_eval(
    cmd: &Command,
    elem: &AbstractElement,
) -> Result<AbstractElement, AbstractError> {
    match cmd {
        Command::Skip => Ok(elem.clone()),
        Command::Seq(a, b) => {
            let mid = abstract_eval(a, elem)?;
            abstract_eval(b, &mid)
        }
        // Pauli gates preserve both bases.
        Command::X(_) | Command::Y(_) | Command::Z(_) => Ok(elem.clone()),
        Command::H(q) => Ok(apply_h(elem, ordinal(elem, q)?)),
        Command::T(q) => Ok(apply_t(elem, ordinal(elem, q)?)),
        Command::CNot { control, target } => {
            apply_cnot(elem, ordinal(elem, control)?, ordinal(elem, target)?)
        }
        Command::If { cond, then_cmd, else_cmd } => {
            let inner = measure_step(elem, ordinal(elem, cond)?)?;
            let t = abstract_eval(then_cmd, &inner)?;
            let e = abstract_eval(else_cmd, &inner)?;
            t.join(&e)
        }
        Command::While { cond, body } => eval_while(cond, body, elem),
    }
}

/// Increasing Kleene iteration for loops:
/// `r₀ = F(a)`, `r_{k+1} = r_k ∨ F(⟦body⟧(r_k))` where `F` is the
/// measurement step on the guard. Stops at stability; the finite lattice
/// guarantees termination.
fn eval_while(
    cond: &QubitId,
    body: &Command,
    elem: &AbstractElement,
) -> Result<AbstractElement, AbstractError> {
    let q = ordinal(elem, cond)?;
    let mut r = measure_step(elem, q)?;
    loop {
        let after_body = abstract_eval(body, &r)?;
        let next = r.join(&measure_step(&after_body, q)?)?;
        if next == r {
            return Ok(r);
        }
        r = next;
    }
}

/// Per-program-point record of an abstract run: the element flowing into
/// every sub-command, plus the final result. Loop bodies record the stable
/// fixpoint entry value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractTrace {
    pub points: BTreeMap<ProgramPoint, AbstractElement>,
    pub exit: AbstractElement,
}

pub fn trace_eval(
    cmd: &Command,
    elem: &AbstractElement,
) -> Result<AbstractTrace, AbstractError> {
    let mut points = BTreeMap::new();
    let exit = trace_cmd(cmd, &ProgramPoint::root(), elem, &mut points)?;
    Ok(AbstractTrace { points, exit })
}

fn trace_cmd(
    cmd: &Command,
    point: &ProgramPoint,
    entry: &AbstractElement,
    points: &mut BTreeMap<ProgramPoint, AbstractElement>,
) -> Result<AbstractElement, AbstractError> {
    points.insert(point.clone(), entry.clone());
    match cmd {
        Command::Seq(a, b) => {
            let mid = trace_cmd(a, &point.child(PathStep::First), entry, points)?;
            trace_cmd(b, &point.child(PathStep::Second), &mid, points)
        }
        Command::If { cond, then_cmd, else_cmd } => {
            let inner = measure_step(entry, ordinal(entry, cond)?)?;
            let t = trace_cmd(then_cmd, &point.child(PathStep::Then), &inner, points)?;
            let e = trace_cmd(else_cmd, &point.child(PathStep::Else), &inner, points)?;
            t.join(&e)
        }
        Command::While { cond, body } => {
            let result = eval_while(cond, body, entry)?;
            // Re-run the body once on the stable value to record its points.
            trace_cmd(body, &point.child(PathStep::Body), &result, points)?;
            Ok(result)
        }
        other => abstract_eval(other, entry),
    }
}

/// Convenience: run the abstract semantics of a whole program.
pub fn analyze_program(
    program: &Program,
    init: &AbstractElement,
) -> Result<AbstractElement, AbstractError> {
    check_counts(init.count(), program.qubit_count())?;
    abstract_eval(&program.body, init)
}
