//! Exact concrete semantics over density matrices, plus a pure-state
//! branch-ensemble evaluator whose mixture reproduces the density-matrix run.
//!
//! Every command denotes a trace-decreasing map: unitaries conjugate the
//! state, `if`/`while` measure their guard in the computational basis and sum
//! the projected branches. The infinite loop sum is truncated once the
//! pending mass drops below `LoopConfig::epsilon` or after
//! `LoopConfig::max_iterations` body runs; truncated mass is reported, never
//! dropped silently.

use crate::linalg::{
    self, conjugate_gate, embed_table, project, trace, CMatrix, LinalgError, QubitIndexing, C_ZERO,
};
use crate::syntax::{Command, Program};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use thiserror::Error;

/// Branches whose absolute weight falls below this are folded into the
/// ensemble residual.
pub const BRANCH_DROP_WEIGHT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConcreteError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("ensemble branch count {count} exceeds the cap of {cap}")]
    BranchExplosion { count: usize, cap: usize },
    #[error("bad initial state: {reason}")]
    BadInit { reason: String },
}

/// Truncation policy for `while` loops and ensemble evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopConfig {
    /// Stop iterating once the pending true-branch trace falls below this.
    pub epsilon: f64,
    /// Hard cap on loop body executions.
    pub max_iterations: usize,
    /// Hard cap on live + emitted ensemble branches.
    pub branch_cap: usize,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig { epsilon: 1e-9, max_iterations: 1000, branch_cap: 4096 }
    }
}

/// Non-fatal observations made during evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalWarning {
    /// A loop was cut off at `max_iterations` with this much pending mass.
    NonTermination { residual: f64, iterations: usize },
}

/// A density matrix over the program's register.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    pub matrix: CMatrix,
    pub indexing: QubitIndexing,
}

impl DensityState {
    pub fn new(matrix: CMatrix) -> Self {
        let indexing = QubitIndexing::new(matrix.qubits());
        DensityState { matrix, indexing }
    }

    pub fn qubits(&self) -> usize {
        self.indexing.count()
    }

    pub fn trace(&self) -> f64 {
        trace(&self.matrix).re
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        linalg::is_density(&self.matrix, tol)
    }
}

/// One pure branch of an ensemble: an amplitude vector, its probability
/// weight, and the sequence of measurement outcomes that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct PureBranch {
    pub amplitudes: Vec<Complex64>,
    pub weight: f64,
    pub outcomes: Vec<bool>,
}

impl PureBranch {
    pub fn new(amplitudes: Vec<Complex64>, weight: f64) -> Self {
        PureBranch { amplitudes, weight, outcomes: Vec::new() }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// A weighted list of pure branches; `residual` is the probability mass that
/// was truncated (loop cutoffs and dropped near-zero branches).
#[derive(Debug, Clone, PartialEq)]
pub struct PureEnsemble {
    count: usize,
    pub branches: Vec<PureBranch>,
    pub residual: f64,
}

impl PureEnsemble {
    pub fn new(count: usize, branches: Vec<PureBranch>) -> Self {
        PureEnsemble { count, branches, residual: 0.0 }
    }

    /// The ensemble holding a single unit-weight pure state.
    pub fn pure_state(amplitudes: Vec<Complex64>) -> Self {
        let count = amplitudes.len().trailing_zeros() as usize;
        PureEnsemble { count, branches: vec![PureBranch::new(amplitudes, 1.0)], residual: 0.0 }
    }

    pub fn qubits(&self) -> usize {
        self.count
    }

    pub fn total_weight(&self) -> f64 {
        self.branches.iter().map(|b| b.weight).sum()
    }
}

/// Reassemble the density matrix `Σ_k p_k ψ_k ψ_k†` of an ensemble.
pub fn mixture(ensemble: &PureEnsemble) -> DensityState {
    let dim = 1usize << ensemble.count;
    let mut acc = CMatrix::zeros(dim);
    for branch in &ensemble.branches {
        acc = &acc + &CMatrix::outer(&branch.amplitudes).scale_re(branch.weight);
    }
    DensityState::new(acc)
}

// ---------------------------------------------------------------------------
// Density-matrix semantics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutput {
    pub state: DensityState,
    pub warnings: Vec<EvalWarning>,
}

/// Evaluate a command on a density state.
pub fn eval(cmd: &Command, rho: &DensityState, cfg: &LoopConfig) -> Result<EvalOutput, ConcreteError> {
    let mut warnings = Vec::new();
    let matrix = eval_matrix(cmd, rho.matrix.clone(), cfg, &mut warnings)?;
    Ok(EvalOutput { state: DensityState::new(matrix), warnings })
}

fn gate_matrix(cmd: &Command) -> Option<(CMatrix, Vec<usize>)> {
    Some(match cmd {
        Command::H(q) => (linalg::hadamard(), vec![q.index]),
        Command::T(q) => (linalg::phase_t(), vec![q.index]),
        Command::X(q) => (linalg::pauli_x(), vec![q.index]),
        Command::Y(q) => (linalg::pauli_y(), vec![q.index]),
        Command::Z(q) => (linalg::pauli_z(), vec![q.index]),
        Command::CNot { control, target } => (linalg::cnot(), vec![control.index, target.index]),
        _ => return None,
    })
}

fn eval_matrix(
    cmd: &Command,
    rho: CMatrix,
    cfg: &LoopConfig,
    warnings: &mut Vec<EvalWarning>,
) -> Result<CMatrix, ConcreteError> {
    match cmd {
        Command::Skip => Ok(rho),
        Command::Seq(a, b) => {
            let mid = eval_matrix(a, rho, cfg, warnings)?;
            eval_matrix(b, mid, cfg, warnings)
        }
        Command::If { cond, then_cmd, else_cmd } => {
            let q = cond.index;
            let t = eval_matrix(then_cmd, project(&rho, q, true)?, cfg, warnings)?;
            let f = eval_matrix(else_cmd, project(&rho, q, false)?, cfg, warnings)?;
            Ok(&t + &f)
        }
        Command::While { cond, body } => {
            let q = cond.index;
            let mut acc = CMatrix::zeros(rho.dim());
            let mut cur = rho;
            let mut iterations = 0usize;
            loop {
                acc = &acc + &project(&cur, q, false)?;
                let pending = project(&cur, q, true)?;
                let pending_trace = trace(&pending).re;
                if pending_trace < cfg.epsilon {
                    break;
                }
                if iterations >= cfg.max_iterations {
                    warnings.push(EvalWarning::NonTermination {
                        residual: pending_trace,
                        iterations,
                    });
                    break;
                }
                cur = eval_matrix(body, pending, cfg, warnings)?;
                iterations += 1;
            }
            Ok(acc)
        }
        gate => {
            let (u, targets) = gate_matrix(gate).expect("non-composite commands are gates");
            Ok(conjugate_gate(&rho, &u, &targets)?)
        }
    }
}

// ---------------------------------------------------------------------------
// Ensemble semantics
// ---------------------------------------------------------------------------

fn apply_gate_vec(v: &mut [Complex64], u: &CMatrix, targets: &[usize], idx: QubitIndexing) {
    let k = targets.len();
    let subdim = 1usize << k;
    let emb = embed_table(idx, targets);
    let mask: usize = targets.iter().map(|&t| idx.mask(t)).sum();
    let mut scratch = vec![C_ZERO; subdim];
    for frame in 0..v.len() {
        if frame & mask != 0 {
            continue;
        }
        for (x, slot) in scratch.iter_mut().enumerate() {
            let mut acc = C_ZERO;
            for y in 0..subdim {
                acc += u.get(x, y) * v[frame | emb[y]];
            }
            *slot = acc;
        }
        for (x, value) in scratch.iter().enumerate() {
            v[frame | emb[x]] = *value;
        }
    }
}

/// Project a pure vector on a measurement outcome; returns the renormalized
/// vector and the outcome probability.
fn project_vec(v: &[Complex64], qubit: usize, outcome: bool, idx: QubitIndexing) -> (Vec<Complex64>, f64) {
    let want = !outcome; // outcome=true keeps bit 0
    let mut out = vec![C_ZERO; v.len()];
    let mut prob = 0.0;
    for (i, &a) in v.iter().enumerate() {
        if idx.bit(i, qubit) == want {
            out[i] = a;
            prob += a.norm_sqr();
        }
    }
    if prob > 0.0 {
        let scale = 1.0 / prob.sqrt();
        for a in &mut out {
            *a *= scale;
        }
    }
    (out, prob)
}

struct EnsembleRun<'a> {
    cfg: &'a LoopConfig,
    idx: QubitIndexing,
    residual: f64,
    warnings: Vec<EvalWarning>,
}

impl EnsembleRun<'_> {
    fn check_cap(&self, count: usize) -> Result<(), ConcreteError> {
        if count > self.cfg.branch_cap {
            Err(ConcreteError::BranchExplosion { count, cap: self.cfg.branch_cap })
        } else {
            Ok(())
        }
    }

    /// Split a branch on a guard measurement; a `None` child fell below the
    /// drop threshold and its mass moved to the residual.
    fn split(&mut self, branch: &PureBranch, qubit: usize, outcome: bool) -> Option<PureBranch> {
        let (v, p) = project_vec(&branch.amplitudes, qubit, outcome, self.idx);
        let weight = branch.weight * p;
        if weight < BRANCH_DROP_WEIGHT {
            self.residual += weight;
            return None;
        }
        let mut outcomes = branch.outcomes.clone();
        outcomes.push(outcome);
        Some(PureBranch { amplitudes: v, weight, outcomes })
    }

    fn eval(&mut self, cmd: &Command, branches: Vec<PureBranch>) -> Result<Vec<PureBranch>, ConcreteError> {
        match cmd {
            Command::Skip => Ok(branches),
            Command::Seq(a, b) => {
                let mid = self.eval(a, branches)?;
                self.eval(b, mid)
            }
            Command::If { cond, then_cmd, else_cmd } => {
                let q = cond.index;
                let mut true_branches = Vec::new();
                let mut false_branches = Vec::new();
                for branch in &branches {
                    if let Some(b) = self.split(branch, q, true) {
                        true_branches.push(b);
                    }
                    if let Some(b) = self.split(branch, q, false) {
                        false_branches.push(b);
                    }
                }
                self.check_cap(true_branches.len() + false_branches.len())?;
                let mut out = self.eval(then_cmd, true_branches)?;
                out.extend(self.eval(else_cmd, false_branches)?);
                self.check_cap(out.len())?;
                Ok(out)
            }
            Command::While { cond, body } => {
                let q = cond.index;
                let mut out = Vec::new();
                let mut live = branches;
                let mut iterations = 0usize;
                loop {
                    let mut next_live = Vec::new();
                    for branch in &live {
                        if let Some(b) = self.split(branch, q, false) {
                            out.push(b);
                        }
                        if let Some(b) = self.split(branch, q, true) {
                            next_live.push(b);
                        }
                    }
                    self.check_cap(out.len() + next_live.len())?;
                    if next_live.is_empty() {
                        break;
                    }
                    if iterations >= self.cfg.max_iterations {
                        let pending: f64 = next_live.iter().map(|b| b.weight).sum();
                        self.residual += pending;
                        self.warnings
                            .push(EvalWarning::NonTermination { residual: pending, iterations });
                        break;
                    }
                    live = self.eval(body, next_live)?;
                    iterations += 1;
                }
                Ok(out)
            }
            gate => {
                let (u, targets) = gate_matrix(gate).expect("non-composite commands are gates");
                let mut out = branches;
                for branch in &mut out {
                    apply_gate_vec(&mut branch.amplitudes, &u, &targets, self.idx);
                }
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleOutput {
    pub ensemble: PureEnsemble,
    pub warnings: Vec<EvalWarning>,
}

/// Evaluate a command branch by branch. Measurements split each branch into
/// the renormalized projected branches weighted by the squared projected
/// norm; branches below `BRANCH_DROP_WEIGHT` move into the residual.
pub fn eval_ensemble(
    cmd: &Command,
    init: &PureEnsemble,
    cfg: &LoopConfig,
) -> Result<EnsembleOutput, ConcreteError> {
    let mut run = EnsembleRun {
        cfg,
        idx: QubitIndexing::new(init.count),
        residual: init.residual,
        warnings: Vec::new(),
    };
    let branches = run.eval(cmd, init.branches.clone())?;
    Ok(EnsembleOutput {
        ensemble: PureEnsemble { count: init.count, branches, residual: run.residual },
        warnings: run.warnings,
    })
}

// ---------------------------------------------------------------------------
// Initial states
// ---------------------------------------------------------------------------

/// Named single-qubit preparations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QubitPreset {
    True,
    False,
    Plus,
    Minus,
    Mixed,
    TState,
}

impl QubitPreset {
    pub const ALL: [QubitPreset; 6] = [
        QubitPreset::True,
        QubitPreset::False,
        QubitPreset::Plus,
        QubitPreset::Minus,
        QubitPreset::Mixed,
        QubitPreset::TState,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QubitPreset::True => "true",
            QubitPreset::False => "false",
            QubitPreset::Plus => "plus",
            QubitPreset::Minus => "minus",
            QubitPreset::Mixed => "mixed",
            QubitPreset::TState => "tstate",
        }
    }

    pub fn parse(text: &str) -> Option<QubitPreset> {
        QubitPreset::ALL.into_iter().find(|p| p.name() == text)
    }

    /// Weighted pure 2-vectors whose mixture is the preset state.
    pub fn branch_factors(self) -> Vec<(Complex64, Complex64, f64)> {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        match self {
            QubitPreset::True => vec![(Complex64::ONE, C_ZERO, 1.0)],
            QubitPreset::False => vec![(C_ZERO, Complex64::ONE, 1.0)],
            QubitPreset::Plus => vec![(h, h, 1.0)],
            QubitPreset::Minus => vec![(h, -h, 1.0)],
            QubitPreset::Mixed => {
                vec![(Complex64::ONE, C_ZERO, 0.5), (C_ZERO, Complex64::ONE, 0.5)]
            }
            // T H |0⟩ = (|0⟩ + e^{iπ/4}|1⟩)/√2, a pure state in neither basis.
            QubitPreset::TState => {
                vec![(h, Complex64::from_polar(FRAC_1_SQRT_2, std::f64::consts::FRAC_PI_4), 1.0)]
            }
        }
    }

    /// The preset's 2×2 density matrix.
    pub fn density(self) -> CMatrix {
        let mut acc = CMatrix::zeros(2);
        for (a0, a1, w) in self.branch_factors() {
            acc = &acc + &CMatrix::outer(&[a0, a1]).scale_re(w);
        }
        acc
    }
}

/// A per-qubit initial state: presets for single qubits plus disjoint
/// maximally entangled pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    count: usize,
    presets: BTreeMap<usize, QubitPreset>,
    bells: Vec<(usize, usize)>,
}

impl InitialState {
    pub fn build(
        count: usize,
        presets: BTreeMap<usize, QubitPreset>,
        bells: Vec<(usize, usize)>,
    ) -> Result<InitialState, ConcreteError> {
        let mut covered = vec![false; count];
        let mut cover = |q: usize| -> Result<(), ConcreteError> {
            if q >= count {
                return Err(ConcreteError::BadInit {
                    reason: format!("qubit ordinal {q} out of range"),
                });
            }
            if covered[q] {
                return Err(ConcreteError::BadInit {
                    reason: format!("qubit ordinal {q} initialized twice"),
                });
            }
            covered[q] = true;
            Ok(())
        };
        for &q in presets.keys() {
            cover(q)?;
        }
        for &(a, b) in &bells {
            if a == b {
                return Err(ConcreteError::BadInit {
                    reason: format!("bell pair uses qubit {a} twice"),
                });
            }
            cover(a)?;
            cover(b)?;
        }
        if let Some(q) = covered.iter().position(|c| !c) {
            return Err(ConcreteError::BadInit { reason: format!("qubit ordinal {q} not covered") });
        }
        Ok(InitialState { count, presets, bells })
    }

    /// All-`true` register (every qubit prepared in the top-left projector).
    pub fn all_true(count: usize) -> InitialState {
        let presets = (0..count).map(|q| (q, QubitPreset::True)).collect();
        InitialState { count, presets, bells: Vec::new() }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn presets(&self) -> &BTreeMap<usize, QubitPreset> {
        &self.presets
    }

    pub fn bells(&self) -> &[(usize, usize)] {
        &self.bells
    }

    /// Expand into a pure ensemble (one branch per assignment of the mixed
    /// qubits).
    pub fn ensemble(&self) -> PureEnsemble {
        let idx = QubitIndexing::new(self.count);
        let dim = idx.dim();
        // Per-branch choice lists: mixed qubits contribute two options.
        let mut branches: Vec<(BTreeMap<usize, (Complex64, Complex64)>, f64)> =
            vec![(BTreeMap::new(), 1.0)];
        for (&q, preset) in &self.presets {
            let factors = preset.branch_factors();
            let mut next = Vec::with_capacity(branches.len() * factors.len());
            for (assign, w) in &branches {
                for &(a0, a1, fw) in &factors {
                    let mut assign = assign.clone();
                    assign.insert(q, (a0, a1));
                    next.push((assign, w * fw));
                }
            }
            branches = next;
        }
        let bell_amp = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let result = branches
            .into_iter()
            .map(|(assign, weight)| {
                let mut v = vec![C_ZERO; dim];
                'outer: for (k, slot) in v.iter_mut().enumerate() {
                    let mut amp = Complex64::ONE;
                    for (&q, &(a0, a1)) in &assign {
                        amp *= if idx.bit(k, q) { a1 } else { a0 };
                        if amp == C_ZERO {
                            continue 'outer;
                        }
                    }
                    for &(a, b) in &self.bells {
                        // (|00⟩ + |11⟩)/√2 on the pair.
                        if idx.bit(k, a) != idx.bit(k, b) {
                            continue 'outer;
                        }
                        amp *= bell_amp;
                    }
                    *slot = amp;
                }
                PureBranch::new(v, weight)
            })
            .collect();
        PureEnsemble::new(self.count, result)
    }

    /// The density matrix of the initial state.
    pub fn density(&self) -> DensityState {
        mixture(&self.ensemble())
    }
}

// ---------------------------------------------------------------------------
// JSON dumps
// ---------------------------------------------------------------------------

/// State-dump JSON: `{"qubits": [...], "trace": t, "matrix": [[[re,im],...],...]}`.
pub fn state_json(state: &DensityState, program: &Program) -> serde_json::Value {
    let qubits: Vec<&str> = program.qubits.iter().map(|q| q.name.as_str()).collect();
    serde_json::json!({
        "qubits": qubits,
        "trace": state.trace(),
        "matrix": linalg::matrix_json(&state.matrix),
    })
}

/// Ensemble dump: branches with weights, outcome paths and amplitudes.
pub fn ensemble_json(ensemble: &PureEnsemble) -> serde_json::Value {
    let branches: Vec<serde_json::Value> = ensemble
        .branches
        .iter()
        .map(|b| {
            let amps: Vec<serde_json::Value> =
                b.amplitudes.iter().map(|a| serde_json::json!([a.re, a.im])).collect();
            serde_json::json!({
                "weight": b.weight,
                "outcomes": b.outcomes,
                "amplitudes": amps,
            })
        })
        .collect();
    serde_json::json!({
        "branches": branches,
        "residual": ensemble.residual,
    })
}

/// Helpers shared by golden tests: the teleportation output block
/// `(1/4 Σ_{k,l} P^k ⊗ P^l) ⊗ ρ` for a 1-qubit `ρ`.
pub fn teleportation_expected(rho: &CMatrix) -> CMatrix {
    let quarter = CMatrix::identity(4).scale_re(0.25);
    linalg::kron(&quarter, rho, 1 << 3).expect("3-qubit result fits any capacity")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{approx_eq, kron, proj_false, proj_true, DEFAULT_MAX_QUBITS};
    use crate::syntax::{parse, teleportation_source, trap_source};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-9;
    const MAX_DIM: usize = 1 << DEFAULT_MAX_QUBITS;

    fn random_density(rng: &mut ChaCha8Rng, qubits: usize) -> CMatrix {
        let dim = 1usize << qubits;
        let mut a = CMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                a.set(i, j, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            }
        }
        let psd = &a * &a.adjoint();
        psd.scale_re(1.0 / trace(&psd).re)
    }

    fn run(source: &str, rho: CMatrix) -> EvalOutput {
        let program = parse(source).unwrap();
        eval(&program.body, &DensityState::new(rho), &LoopConfig::default()).unwrap()
    }

    #[test]
    fn teleportation_moves_the_state() {
        let program = parse(teleportation_source()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..5 {
            let rho = random_density(&mut rng, 1);
            let init = kron(&kron(&rho, &proj_true(), MAX_DIM).unwrap(), &proj_true(), MAX_DIM)
                .unwrap();
            let out = eval(&program.body, &DensityState::new(init), &LoopConfig::default()).unwrap();
            assert!(out.warnings.is_empty());
            assert!(approx_eq(&out.state.matrix, &teleportation_expected(&rho), TOL));
        }
    }

    #[test]
    fn measure_then_flip_yields_true_projector() {
        // if q then skip else X(q) maps every ρ to tr(ρ)·P^true.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let rho = random_density(&mut rng, 1);
            let out = run("qubits q; if q then { skip } else { X(q) }", rho.clone());
            let expected = proj_true().scale_re(trace(&rho).re);
            assert!(approx_eq(&out.state.matrix, &expected, TOL));
        }
    }

    #[test]
    fn while_hadamard_converges_to_false_projector() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..5 {
            let rho = random_density(&mut rng, 1);
            let out = run("qubits q; while q do { H(q) }", rho.clone());
            let expected = proj_false().scale_re(trace(&rho).re);
            assert!(approx_eq(&out.state.matrix, &expected, TOL));
            assert!(out.warnings.is_empty(), "loop must converge below epsilon");
        }
    }

    #[test]
    fn while_converges_loewner_monotonically() {
        // Partial sums grow in the Löwner order as the iteration cap rises.
        let program = parse("qubits q; while q do { H(q) }").unwrap();
        let rho = DensityState::new(proj_true());
        let mut previous = CMatrix::zeros(2);
        for cap in 0..6 {
            let cfg = LoopConfig { epsilon: 1e-300, max_iterations: cap, ..Default::default() };
            let out = eval(&program.body, &rho, &cfg).unwrap();
            assert!(linalg::loewner_leq(&previous, &out.state.matrix, 1e-12).unwrap());
            previous = out.state.matrix;
        }
    }

    #[test]
    fn stuck_loop_reports_residual() {
        // Z fixes the looping component, so the pending mass never drains.
        let out = run("qubits q; while q do { Z(q) }", proj_true());
        assert!(approx_eq(&out.state.matrix, &CMatrix::zeros(2), TOL));
        match &out.warnings[..] {
            [EvalWarning::NonTermination { residual, iterations }] => {
                assert!((residual - 1.0).abs() < TOL);
                assert_eq!(*iterations, LoopConfig::default().max_iterations);
            }
            other => panic!("expected a non-termination warning, got {other:?}"),
        }
    }

    #[test]
    fn trap_is_the_identity() {
        let program = parse(trap_source()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..5 {
            let rho = random_density(&mut rng, 2);
            let out =
                eval(&program.body, &DensityState::new(rho.clone()), &LoopConfig::default()).unwrap();
            assert!(approx_eq(&out.state.matrix, &rho, TOL));
        }
    }

    #[test]
    fn eval_is_trace_decreasing_and_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let program = parse(
            "qubits a, b;\nH(a);\nif a then { CNot(a, b) } else { T(b) };\nwhile b do { H(b) }",
        )
        .unwrap();
        for _ in 0..5 {
            let rho = random_density(&mut rng, 2);
            let before = trace(&rho).re;
            let out = eval(&program.body, &DensityState::new(rho), &LoopConfig::default()).unwrap();
            assert!(out.state.trace() <= before + 1e-9);
            assert!(out.state.is_valid(1e-8));
        }
    }

    #[test]
    fn unitary_programs_preserve_trace_and_reverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let program = parse("qubits a, b;\nH(a);\nT(b);\nCNot(a, b);\nY(a);\nT(a)").unwrap();
        // Reversed dagger program: T† = T;T;T;T;T;T;T, every other gate is
        // self-inverse.
        let reversed = parse(
            "qubits a, b;\nT(a);T(a);T(a);T(a);T(a);T(a);T(a);\nY(a);\nCNot(a, b);\n\
             T(b);T(b);T(b);T(b);T(b);T(b);T(b);\nH(a)",
        )
        .unwrap();
        for _ in 0..5 {
            let rho = random_density(&mut rng, 2);
            let out = eval(&program.body, &DensityState::new(rho.clone()), &LoopConfig::default())
                .unwrap();
            assert!((out.state.trace() - trace(&rho).re).abs() < 1e-10);
            let back = eval(&reversed.body, &out.state, &LoopConfig::default()).unwrap();
            assert!(approx_eq(&back.state.matrix, &rho, 1e-8));
        }
    }

    #[test]
    fn linearity_of_eval() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let program = parse("qubits a, b;\nH(a);\nif a then { X(b) } else { while b do { H(b) } }")
            .unwrap();
        let cfg = LoopConfig { epsilon: 1e-300, max_iterations: 64, ..Default::default() };
        for _ in 0..5 {
            let r1 = random_density(&mut rng, 2);
            let r2 = random_density(&mut rng, 2);
            let alpha = rng.random_range(0.0..1.0);
            let blend = &r1.scale_re(alpha) + &r2.scale_re(1.0 - alpha);
            let out_blend = eval(&program.body, &DensityState::new(blend), &cfg).unwrap();
            let out1 = eval(&program.body, &DensityState::new(r1), &cfg).unwrap();
            let out2 = eval(&program.body, &DensityState::new(r2), &cfg).unwrap();
            let combined =
                &out1.state.matrix.scale_re(alpha) + &out2.state.matrix.scale_re(1.0 - alpha);
            assert!(approx_eq(&out_blend.state.matrix, &combined, 1e-9));
        }
    }

    // -- ensembles ------------------------------------------------------------

    fn ensemble_of(program: &str, init: &InitialState) -> EnsembleOutput {
        let program = parse(program).unwrap();
        eval_ensemble(&program.body, &init.ensemble(), &LoopConfig::default()).unwrap()
    }

    #[test]
    fn hadamard_on_true_gives_uniform_branch() {
        let init = InitialState::all_true(1);
        let out = ensemble_of("qubits q; H(q)", &init);
        assert_eq!(out.ensemble.branches.len(), 1);
        let b = &out.ensemble.branches[0];
        assert!((b.weight - 1.0).abs() < TOL);
        assert!((b.amplitudes[0] - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < TOL);
        assert!((b.amplitudes[1] - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < TOL);
    }

    #[test]
    fn measuring_plus_splits_half_half() {
        let init = InitialState::build(
            1,
            [(0, QubitPreset::Plus)].into_iter().collect(),
            Vec::new(),
        )
        .unwrap();
        let out = ensemble_of("qubits q; if q then { skip } else { skip }", &init);
        assert_eq!(out.ensemble.branches.len(), 2);
        for b in &out.ensemble.branches {
            assert!((b.weight - 0.5).abs() < TOL);
            assert!((b.norm() - 1.0).abs() < TOL);
        }
        assert_eq!(out.ensemble.branches[0].outcomes, vec![true]);
        assert_eq!(out.ensemble.branches[1].outcomes, vec![false]);
    }

    #[test]
    fn teleportation_ensemble_has_four_quarter_branches() {
        let init = InitialState::build(
            3,
            [(0, QubitPreset::TState), (1, QubitPreset::True), (2, QubitPreset::True)]
                .into_iter()
                .collect(),
            Vec::new(),
        )
        .unwrap();
        let out = ensemble_of(teleportation_source(), &init);
        assert_eq!(out.ensemble.branches.len(), 4);
        for b in &out.ensemble.branches {
            assert!((b.weight - 0.25).abs() < TOL);
        }
        // The mixture agrees with the density-matrix run.
        let program = parse(teleportation_source()).unwrap();
        let direct = eval(&program.body, &init.density(), &LoopConfig::default()).unwrap();
        assert!(approx_eq(&mixture(&out.ensemble).matrix, &direct.state.matrix, 1e-7));
    }

    #[test]
    fn mixture_golden() {
        // Single unit branch: a rank-1 projector.
        let e = PureEnsemble::pure_state(vec![Complex64::ONE, C_ZERO]);
        assert!(approx_eq(&mixture(&e).matrix, &proj_true(), TOL));
        // Empty ensemble: the zero matrix.
        let empty = PureEnsemble::new(2, Vec::new());
        assert!(approx_eq(&mixture(&empty).matrix, &CMatrix::zeros(4), TOL));
    }

    #[test]
    fn mixture_matches_outer_product_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut branches = Vec::new();
        for _ in 0..4 {
            let mut v: Vec<Complex64> = (0..4)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            v.iter_mut().for_each(|a| *a /= norm);
            branches.push(PureBranch::new(v, rng.random_range(0.01..0.25)));
        }
        let e = PureEnsemble::new(2, branches.clone());
        // Oracle: direct per-entry summation.
        let mut expected = CMatrix::zeros(4);
        for b in &branches {
            for i in 0..4 {
                for j in 0..4 {
                    let v = expected.get(i, j)
                        + b.amplitudes[i] * b.amplitudes[j].conj() * b.weight;
                    expected.set(i, j, v);
                }
            }
        }
        assert!(approx_eq(&mixture(&e).matrix, &expected, 1e-10));
    }

    #[test]
    fn mixture_commutes_with_eval() {
        let sources = [
            "qubits a, b;\nH(a);\nCNot(a, b);\nif b then { X(a) } else { skip }",
            "qubits a, b;\nT(a);\nwhile a do { H(a); X(b) }",
            "qubits a, b, c;\nH(b);\nCNot(b, c);\nif a then { CNot(b, a) } else { Z(c) }",
        ];
        let cfg = LoopConfig::default();
        for source in sources {
            let program = parse(source).unwrap();
            let n = program.qubit_count();
            let init = InitialState::build(
                n,
                (0..n).map(|q| (q, [QubitPreset::TState, QubitPreset::Plus, QubitPreset::Mixed][q % 3])).collect(),
                Vec::new(),
            )
            .unwrap();
            let via_matrix = eval(&program.body, &init.density(), &cfg).unwrap();
            let via_branches = eval_ensemble(&program.body, &init.ensemble(), &cfg).unwrap();
            assert!(
                approx_eq(
                    &mixture(&via_branches.ensemble).matrix,
                    &via_matrix.state.matrix,
                    1e-7
                ),
                "mixture mismatch for {source}"
            );
        }
    }

    #[test]
    fn branch_cap_is_enforced() {
        // Each iteration re-mixes and measures, doubling live branches.
        let program = parse("qubits a, b;\nwhile a do { H(b); if b then { skip } else { skip }; H(a) }")
            .unwrap();
        let init = InitialState::all_true(2);
        let cfg = LoopConfig { branch_cap: 8, ..Default::default() };
        match eval_ensemble(&program.body, &init.ensemble(), &cfg) {
            Err(ConcreteError::BranchExplosion { cap: 8, .. }) => {}
            other => panic!("expected branch explosion, got {other:?}"),
        }
    }

    #[test]
    fn ensemble_weights_plus_residual_account_for_everything() {
        let program = parse("qubits q; while q do { T(q) }").unwrap();
        let init = InitialState::build(
            1,
            [(0, QubitPreset::Plus)].into_iter().collect(),
            Vec::new(),
        )
        .unwrap();
        let cfg = LoopConfig { max_iterations: 16, ..Default::default() };
        let out = eval_ensemble(&program.body, &init.ensemble(), &cfg).unwrap();
        let total = out.ensemble.total_weight() + out.ensemble.residual;
        assert!((total - 1.0).abs() < 1e-9);
        assert!(!out.warnings.is_empty(), "T fixes the looping component");
    }

    #[test]
    fn bell_pair_initial_state() {
        let init = InitialState::build(
            3,
            [(1, QubitPreset::True)].into_iter().collect(),
            vec![(0, 2)],
        )
        .unwrap();
        let e = init.ensemble();
        assert_eq!(e.branches.len(), 1);
        let v = &e.branches[0].amplitudes;
        // (|0 t 0⟩ + |1 t 1⟩)/√2 with q2 = true: indices 000 and 101.
        assert!((v[0b000] - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < TOL);
        assert!((v[0b101] - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < TOL);
        assert!((mixture(&e).trace() - 1.0).abs() < TOL);
    }

    #[test]
    fn initial_state_rejects_double_cover() {
        let err = InitialState::build(
            2,
            [(0, QubitPreset::True), (1, QubitPreset::True)].into_iter().collect(),
            vec![(0, 1)],
        );
        assert!(matches!(err, Err(ConcreteError::BadInit { .. })));
    }

    #[test]
    fn state_json_schema() {
        let program = parse("qubits a; skip").unwrap();
        let v = state_json(&DensityState::new(proj_true()), &program);
        assert_eq!(v["qubits"], serde_json::json!(["a"]));
        assert_eq!(v["trace"], serde_json::json!(1.0));
        assert!(v["matrix"].is_array());
    }
}
