//! The bridge between the two semantics: β basis extraction from concrete
//! states, π-separability witnessing via the pure-branch ensemble, and the
//! end-to-end check that abstract results over-approximate concrete runs.
//!
//! A concrete state `ρ` is covered by an abstract element `(b, π)` when `ρ`
//! is π-separable and `β(ρ) ≤ b`. The checker verifies this relation on the
//! inputs (as a precondition) and on the outputs of both interpreters. A
//! separability witness is an explicit per-branch, per-block factorization;
//! when a branch fails to factor we report the failure rather than claim
//! entanglement of the mixture, since a different decomposition might still
//! be π-separable.

use crate::abstract_domain::{
    abstract_eval, AbstractElement, AbstractError, BasisFlag, BasisMap, Partition,
};
use crate::concrete::{
    eval_ensemble, mixture, ConcreteError, DensityState, EvalWarning, InitialState, LoopConfig,
    PureBranch, PureEnsemble, QubitPreset,
};
use crate::linalg::{conjugate_gate, hadamard, CMatrix, QubitIndexing, C_ZERO};
use crate::syntax::{Command, Program, QubitId};
use num_complex::Complex64;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use thiserror::Error;

/// Tolerance for witness reassembly against the concrete mixture.
pub const REASSEMBLY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SoundnessError {
    #[error("precondition violated: {reason}")]
    PreconditionViolated { reason: String },
    #[error(transparent)]
    Concrete(#[from] ConcreteError),
    #[error(transparent)]
    Abstract(#[from] AbstractError),
}

// ---------------------------------------------------------------------------
// β extraction
// ---------------------------------------------------------------------------

fn cross_norms(rho: &CMatrix, qubit: usize) -> (f64, f64) {
    let idx = QubitIndexing::new(rho.qubits());
    let mut upper = 0.0; // P^true ρ P^false block
    let mut lower = 0.0; // P^false ρ P^true block
    for i in 0..rho.dim() {
        for j in 0..rho.dim() {
            match (idx.bit(i, qubit), idx.bit(j, qubit)) {
                (false, true) => upper += rho.get(i, j).norm_sqr(),
                (true, false) => lower += rho.get(i, j).norm_sqr(),
                _ => {}
            }
        }
    }
    (upper.sqrt(), lower.sqrt())
}

/// True iff the qubit is a standard-basis state: both cross-projected blocks
/// vanish.
fn standard_test(rho: &CMatrix, qubit: usize, tol: f64) -> bool {
    let (upper, lower) = cross_norms(rho, qubit);
    upper <= tol && lower <= tol
}

/// Per-qubit basis flags of a concrete state: `Bot` when the qubit passes
/// both the standard and the diagonal test, `Std`/`Diag` when exactly one
/// holds, `Top` otherwise. The diagonal test is the standard test after
/// conjugating the qubit by Hadamard.
pub fn beta(state: &DensityState, tol: f64) -> BasisMap {
    let n = state.qubits();
    let mut flags = Vec::with_capacity(n);
    for q in 0..n {
        let std_ok = standard_test(&state.matrix, q, tol);
        let conjugated =
            conjugate_gate(&state.matrix, &hadamard(), &[q]).expect("qubit ordinal is in range");
        let diag_ok = standard_test(&conjugated, q, tol);
        flags.push(match (std_ok, diag_ok) {
            (true, true) => BasisFlag::Bot,
            (true, false) => BasisFlag::Std,
            (false, true) => BasisFlag::Diag,
            (false, false) => BasisFlag::Top,
        });
    }
    BasisMap::from_flags(flags)
}

/// The flag a preset derives under β, computed from its actual density
/// matrix rather than hard-coded.
pub fn preset_flag(preset: QubitPreset, tol: f64) -> BasisFlag {
    beta(&DensityState::new(preset.density()), tol).get(0)
}

// ---------------------------------------------------------------------------
// Separability witnessing
// ---------------------------------------------------------------------------

/// Reduced density matrix of a pure vector on a block of qubits.
fn reduced_pure(v: &[Complex64], block: &[usize], idx: QubitIndexing) -> CMatrix {
    let k = block.len();
    let rest: Vec<usize> = (0..idx.count()).filter(|q| !block.contains(q)).collect();
    let out_dim = 1usize << k;
    let rest_dim = 1usize << rest.len();
    let compose = |bits: usize, qubits: &[usize]| -> usize {
        let mut full = 0usize;
        for (m, &q) in qubits.iter().enumerate() {
            if (bits >> (qubits.len() - 1 - m)) & 1 == 1 {
                full |= idx.mask(q);
            }
        }
        full
    };
    let mut out = CMatrix::zeros(out_dim);
    for x in 0..out_dim {
        for y in 0..out_dim {
            let mut acc = C_ZERO;
            for f in 0..rest_dim {
                let frame = compose(f, &rest);
                acc += v[compose(x, block) | frame] * v[compose(y, block) | frame].conj();
            }
            out.set(x, y, acc);
        }
    }
    out
}

/// Does a pure branch factor across every block of the partition?
///
/// A unit vector factors between a block and its complement exactly when its
/// reduced density matrix on the block is rank one; applied to each block
/// this certifies the full product structure.
pub fn pure_block_separable(branch: &PureBranch, partition: &Partition, tol: f64) -> bool {
    let idx = QubitIndexing::new(partition.count());
    partition.blocks().iter().all(|block| {
        if block.len() == idx.count() {
            return true;
        }
        let reduced = reduced_pure(&branch.amplitudes, block, idx);
        let (top, _) = reduced.hermitian_top_eigenpair();
        top >= 1.0 - tol
    })
}

/// The per-block factors of one witnessed branch.
#[derive(Debug, Clone)]
pub struct BranchFactors {
    pub weight: f64,
    /// `(block qubits, unit factor vector over the block)` per block.
    pub blocks: Vec<(Vec<usize>, Vec<Complex64>)>,
}

/// An explicit decomposition `Σ_k p_k ⊗_j ρ_k^{B_j}` certifying
/// π-separability of the ensemble's mixture.
#[derive(Debug, Clone)]
pub struct Witness {
    pub branches: Vec<BranchFactors>,
}

#[derive(Debug, Clone)]
pub enum SeparabilityVerdict {
    /// Every branch factors across the partition; the stored decomposition
    /// reassembles to the mixture within [`REASSEMBLY_TOL`].
    Witnessed(Witness),
    /// A pure branch is entangled across the partition. Decisive only when
    /// the ensemble itself is a single pure state.
    RefutedBranch { branch: usize },
    /// No witness was produced (incomplete evaluation or numeric drift).
    Inconclusive { reason: String },
}

impl SeparabilityVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            SeparabilityVerdict::Witnessed(_) => "witnessed",
            SeparabilityVerdict::RefutedBranch { .. } => "refuted_branch",
            SeparabilityVerdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

/// Search for a π-separability witness by factoring every branch.
pub fn witness_separability(
    ensemble: &PureEnsemble,
    partition: &Partition,
    tol: f64,
) -> SeparabilityVerdict {
    let idx = QubitIndexing::new(partition.count());
    let mut branches = Vec::with_capacity(ensemble.branches.len());
    for (index, branch) in ensemble.branches.iter().enumerate() {
        let mut blocks = Vec::with_capacity(partition.blocks().len());
        for block in partition.blocks() {
            let reduced = reduced_pure(&branch.amplitudes, block, idx);
            let (top, vector) = reduced.hermitian_top_eigenpair();
            if top < 1.0 - tol {
                return SeparabilityVerdict::RefutedBranch { branch: index };
            }
            blocks.push((block.clone(), vector));
        }
        branches.push(BranchFactors { weight: branch.weight, blocks });
    }
    let witness = Witness { branches };
    // The decomposition must reassemble to the mixture it claims to describe.
    let rebuilt = reassemble(&witness, idx);
    let drift = (&rebuilt - &mixture(ensemble).matrix).frobenius_norm();
    if drift > REASSEMBLY_TOL {
        return SeparabilityVerdict::Inconclusive {
            reason: format!("witness reassembly drifted by {drift:.3e}"),
        };
    }
    SeparabilityVerdict::Witnessed(witness)
}

/// Rebuild `Σ_k p_k ψ'_k ψ'_k†` from the stored block factors.
pub fn reassemble(witness: &Witness, idx: QubitIndexing) -> CMatrix {
    let dim = idx.dim();
    let mut acc = CMatrix::zeros(dim);
    for branch in &witness.branches {
        let mut v = vec![Complex64::ONE; dim];
        for (block, factor) in &branch.blocks {
            for (k, amp) in v.iter_mut().enumerate() {
                let mut local = 0usize;
                for (m, &q) in block.iter().enumerate() {
                    if idx.bit(k, q) {
                        local |= 1 << (block.len() - 1 - m);
                    }
                }
                *amp *= factor[local];
            }
        }
        acc = &acc + &CMatrix::outer(&v).scale_re(branch.weight);
    }
    acc
}

// ---------------------------------------------------------------------------
// End-to-end checking
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SoundnessReport {
    pub verdict: Verdict,
    /// β(concrete output) ≤ claimed flags.
    pub beta_ok: bool,
    pub beta: BasisMap,
    /// The abstract output the concrete run is checked against.
    pub claimed: AbstractElement,
    pub witness: SeparabilityVerdict,
    /// Truncated probability mass of the concrete run.
    pub residual: f64,
    pub warnings: Vec<EvalWarning>,
    pub seed: Option<u64>,
    pub program_source: String,
}

fn sigma_holds(ensemble: &PureEnsemble, element: &AbstractElement, tol: f64) -> Result<(), String> {
    let state = mixture(ensemble);
    let b = beta(&state, tol);
    if !b.leq(&element.flags).map_err(|e| e.to_string())? {
        return Err(format!(
            "β = {} is not below the claimed flags {}",
            flags_text(&b),
            flags_text(&element.flags)
        ));
    }
    match witness_separability(ensemble, &element.partition, tol) {
        SeparabilityVerdict::Witnessed(_) => Ok(()),
        other => Err(format!("no separability witness: {}", other.label())),
    }
}

fn flags_text(map: &BasisMap) -> String {
    map.flags().iter().map(|f| f.text()).collect::<Vec<_>>().join(",")
}

/// Run both semantics and check that the abstract output covers the concrete
/// one: β of the output mixture stays below the claimed flags and the output
/// ensemble witnesses separability across the claimed partition.
///
/// The pair `(mixture(init), init_abstract)` must itself satisfy the
/// relation; otherwise the property being checked promises nothing.
pub fn check_sound(
    program: &Program,
    init_concrete: &PureEnsemble,
    init_abstract: &AbstractElement,
    cfg: &LoopConfig,
    tol: f64,
) -> Result<SoundnessReport, SoundnessError> {
    if init_concrete.qubits() != program.qubit_count()
        || init_abstract.count() != program.qubit_count()
    {
        return Err(SoundnessError::PreconditionViolated {
            reason: "initial state does not match the program register".to_string(),
        });
    }
    sigma_holds(init_concrete, init_abstract, tol)
        .map_err(|reason| SoundnessError::PreconditionViolated { reason })?;

    let claimed = abstract_eval(&program.body, init_abstract)?;
    let source = crate::syntax::unparse(program);

    let (ensemble, warnings) = match eval_ensemble(&program.body, init_concrete, cfg) {
        Ok(out) => (out.ensemble, out.warnings),
        Err(err @ ConcreteError::BranchExplosion { .. }) => {
            // The concrete run could not be completed; nothing to certify.
            return Ok(SoundnessReport {
                verdict: Verdict::Inconclusive,
                beta_ok: false,
                beta: BasisMap::uniform(program.qubit_count(), BasisFlag::Top),
                claimed,
                witness: SeparabilityVerdict::Inconclusive { reason: err.to_string() },
                residual: 0.0,
                warnings: Vec::new(),
                seed: None,
                program_source: source,
            });
        }
        Err(other) => return Err(other.into()),
    };

    let out_state = mixture(&ensemble);
    let out_beta = beta(&out_state, tol);
    let beta_ok = out_beta.leq(&claimed.flags)?;
    let witness = witness_separability(&ensemble, &claimed.partition, tol);

    let verdict = if !beta_ok {
        Verdict::Fail
    } else {
        match &witness {
            SeparabilityVerdict::Witnessed(_) => Verdict::Pass,
            SeparabilityVerdict::RefutedBranch { .. } => {
                // For a genuinely pure output the branch refutation is exact:
                // a rank-one state is π-separable only if its vector factors.
                if ensemble.branches.len() == 1 && ensemble.residual <= tol {
                    Verdict::Fail
                } else {
                    Verdict::Inconclusive
                }
            }
            SeparabilityVerdict::Inconclusive { .. } => Verdict::Inconclusive,
        }
    };

    Ok(SoundnessReport {
        verdict,
        beta_ok,
        beta: out_beta,
        claimed,
        witness,
        residual: ensemble.residual,
        warnings,
        seed: None,
        program_source: source,
    })
}

/// Check the convexity of the covering relation: two covered states with
/// witnesses combine, under summation and abstract join, into a covered
/// state.
pub fn sigma_convexity_check(
    e1: &PureEnsemble,
    a1: &AbstractElement,
    e2: &PureEnsemble,
    a2: &AbstractElement,
    tol: f64,
) -> Result<bool, SoundnessError> {
    sigma_holds(e1, a1, tol).map_err(|reason| SoundnessError::PreconditionViolated { reason })?;
    sigma_holds(e2, a2, tol).map_err(|reason| SoundnessError::PreconditionViolated { reason })?;
    let total = e1.total_weight() + e1.residual + e2.total_weight() + e2.residual;
    if total > 1.0 + tol {
        return Err(SoundnessError::PreconditionViolated {
            reason: format!("combined trace {total} exceeds 1"),
        });
    }
    if e1.qubits() != e2.qubits() {
        return Err(SoundnessError::PreconditionViolated {
            reason: "ensembles cover different registers".to_string(),
        });
    }
    // Concatenated witnesses carry the summed state; the abstract side joins.
    let mut branches = e1.branches.clone();
    branches.extend(e2.branches.clone());
    let mut combined = PureEnsemble::new(e1.qubits(), branches);
    combined.residual = e1.residual + e2.residual;
    let joined = a1.join(a2)?;
    Ok(sigma_holds(&combined, &joined, tol).is_ok())
}

/// Report JSON per the documented schema.
pub fn report_json(report: &SoundnessReport, program: &Program) -> serde_json::Value {
    let flag_map = |map: &BasisMap| -> serde_json::Value {
        let mut obj = serde_json::Map::new();
        for (q, flag) in program.qubits.iter().zip(map.flags()) {
            obj.insert(q.name.clone(), serde_json::json!(flag.text()));
        }
        serde_json::Value::Object(obj)
    };
    let blocks: Vec<Vec<String>> = report
        .claimed
        .partition
        .blocks()
        .iter()
        .map(|b| b.iter().map(|&q| program.qubits[q].name.clone()).collect())
        .collect();
    serde_json::json!({
        "verdict": report.verdict.label(),
        "beta_ok": report.beta_ok,
        "beta": flag_map(&report.beta),
        "claimed_flags": flag_map(&report.claimed.flags),
        "claimed_blocks": blocks,
        "witness": report.witness.label(),
        "residual": report.residual,
        "seed": report.seed,
        "program": report.program_source,
    })
}

// ---------------------------------------------------------------------------
// Random program generation
// ---------------------------------------------------------------------------

/// Constructor weights for the random program generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenWeights {
    pub skip: f64,
    pub seq: f64,
    pub if_: f64,
    pub while_: f64,
    pub h: f64,
    pub t: f64,
    pub pauli: f64,
    pub cnot: f64,
}

impl Default for GenWeights {
    fn default() -> Self {
        GenWeights {
            skip: 0.4,
            seq: 3.0,
            if_: 1.2,
            while_: 0.7,
            h: 1.5,
            t: 0.9,
            pauli: 1.5,
            cnot: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenConfig {
    pub max_qubits: usize,
    pub max_depth: usize,
    /// Cap on the number of `if`/`while` nodes in one program.
    pub max_measurements: usize,
    pub weights: GenWeights,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_qubits: 4,
            max_depth: 8,
            max_measurements: usize::MAX,
            weights: GenWeights::default(),
        }
    }
}

struct Generator {
    rng: ChaCha8Rng,
    qubits: Vec<QubitId>,
    weights: GenWeights,
    measurements_left: usize,
}

impl Generator {
    fn random_qubit(&mut self) -> QubitId {
        self.qubits.choose(&mut self.rng).expect("register is non-empty").clone()
    }

    fn random_pair(&mut self) -> (QubitId, QubitId) {
        let n = self.qubits.len();
        let a = self.rng.random_range(0..n);
        let mut b = self.rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        (self.qubits[a].clone(), self.qubits[b].clone())
    }

    fn command(&mut self, depth: usize, allow_measure: bool) -> Command {
        let w = self.weights;
        let n = self.qubits.len();
        let measurable = allow_measure && self.measurements_left > 0;
        let mut choices: Vec<(f64, u8)> =
            vec![(w.skip, 0), (w.h, 1), (w.t, 2), (w.pauli, 3)];
        if n >= 2 {
            choices.push((w.cnot, 4));
        }
        if depth > 1 {
            choices.push((w.seq, 5));
            if measurable {
                choices.push((w.if_, 6));
                choices.push((w.while_, 7));
            }
        }
        let total: f64 = choices.iter().map(|(weight, _)| weight).sum();
        let mut pick = self.rng.random_range(0.0..total);
        let mut selected = choices[0].1;
        for (weight, kind) in &choices {
            if pick < *weight {
                selected = *kind;
                break;
            }
            pick -= weight;
        }
        match selected {
            0 => Command::Skip,
            1 => Command::H(self.random_qubit()),
            2 => Command::T(self.random_qubit()),
            3 => {
                let q = self.random_qubit();
                match self.rng.random_range(0..3) {
                    0 => Command::X(q),
                    1 => Command::Y(q),
                    _ => Command::Z(q),
                }
            }
            4 => {
                let (control, target) = self.random_pair();
                Command::CNot { control, target }
            }
            5 => {
                let first = self.command(depth - 1, allow_measure);
                let second = self.command(depth - 1, allow_measure);
                Command::Seq(Box::new(first), Box::new(second))
            }
            6 => {
                self.measurements_left -= 1;
                let cond = self.random_qubit();
                let then_cmd = self.command(depth - 1, allow_measure);
                let else_cmd = self.command(depth - 1, allow_measure);
                Command::If { cond, then_cmd: Box::new(then_cmd), else_cmd: Box::new(else_cmd) }
            }
            _ => {
                self.measurements_left -= 1;
                let cond = self.random_qubit();
                // Loop bodies are measurement-free and always touch the
                // guard, so most generated loops drain their pending mass.
                let mut body = self.command(depth - 1, false);
                if !touches(&body, &cond) {
                    body = Command::Seq(Box::new(body), Box::new(Command::H(cond.clone())));
                }
                Command::While { cond, body: Box::new(body) }
            }
        }
    }
}

fn touches(cmd: &Command, qubit: &QubitId) -> bool {
    match cmd {
        Command::Skip => false,
        Command::Seq(a, b) => touches(a, qubit) || touches(b, qubit),
        Command::If { cond, then_cmd, else_cmd } => {
            cond == qubit || touches(then_cmd, qubit) || touches(else_cmd, qubit)
        }
        Command::While { cond, body } => cond == qubit || touches(body, qubit),
        Command::H(q) | Command::T(q) | Command::X(q) | Command::Y(q) | Command::Z(q) => q == qubit,
        Command::CNot { control, target } => control == qubit || target == qubit,
    }
}

/// Deterministically generate a well-formed random program.
pub fn generate_program(seed: u64, config: &GenConfig) -> Program {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(1..=config.max_qubits.max(1));
    let qubits: Vec<QubitId> = (0..count).map(|i| QubitId::new(format!("q{}", i + 1), i)).collect();
    let mut generator = Generator {
        rng,
        qubits: qubits.clone(),
        weights: config.weights,
        measurements_left: config.max_measurements,
    };
    let body = generator.command(config.max_depth.max(1), true);
    Program { qubits, body }
}

/// A random per-qubit preset assignment (a product state).
pub fn random_product_init(seed: u64, count: usize) -> InitialState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let presets: BTreeMap<usize, QubitPreset> = (0..count)
        .map(|q| (q, *QubitPreset::ALL.choose(&mut rng).expect("presets are non-empty")))
        .collect();
    InitialState::build(count, presets, Vec::new())
        .expect("product assignment covers the register")
}

/// The abstract element a product init derives: β flags per preset, bell
/// pairs as blocks, every other qubit separate.
pub fn derived_abstract_init(init: &InitialState, tol: f64) -> AbstractElement {
    let state = init.density();
    AbstractElement::new(beta(&state, tol), derived_partition(init))
        .expect("flag map and partition cover the same register")
}

/// Bell pairs become blocks, everything else is a singleton.
pub fn derived_partition(init: &InitialState) -> Partition {
    let mut partition = Partition::singletons(init.count());
    for &(a, b) in init.bells() {
        partition = partition
            .join(&Partition::pair(init.count(), a, b).expect("bell pair is valid"))
            .expect("same register");
    }
    partition
}

/// A uniformly random abstract element over `count` qubits.
pub fn random_abstract_element(seed: u64, count: usize) -> AbstractElement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flags: Vec<BasisFlag> =
        (0..count).map(|_| *BasisFlag::ALL.choose(&mut rng).expect("flags are non-empty")).collect();
    let mut partition = Partition::singletons(count);
    if count >= 2 {
        for _ in 0..rng.random_range(0..count) {
            let a = rng.random_range(0..count);
            let mut b = rng.random_range(0..count - 1);
            if b >= a {
                b += 1;
            }
            partition = partition
                .join(&Partition::pair(count, a, b).expect("pair is valid"))
                .expect("same register");
        }
    }
    AbstractElement::new(BasisMap::from_flags(flags), partition).expect("same register")
}

/// A random element below the given one: flags lowered pointwise, partition
/// refined blockwise.
pub fn random_lowering(seed: u64, upper: &AbstractElement) -> AbstractElement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flags: Vec<BasisFlag> = upper
        .flags
        .flags()
        .iter()
        .map(|&f| {
            let below: Vec<BasisFlag> = BasisFlag::ALL.into_iter().filter(|&g| g.leq(f)).collect();
            *below.choose(&mut rng).expect("every flag has a lower set")
        })
        .collect();
    let mut blocks = Vec::new();
    for block in upper.partition.blocks() {
        // Scatter block members over random sub-groups.
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &q in block {
            groups.entry(rng.random_range(0..block.len())).or_default().push(q);
        }
        blocks.extend(groups.into_values());
    }
    let partition =
        Partition::from_blocks(upper.count(), blocks).expect("refinement covers the register");
    AbstractElement::new(BasisMap::from_flags(flags), partition).expect("same register")
}

// ---------------------------------------------------------------------------
// Randomized suite
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub cases: usize,
    pub seed: u64,
    pub gen: GenConfig,
    pub loop_cfg: LoopConfig,
    pub tol: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            cases: 1000,
            seed: 7,
            gen: GenConfig::default(),
            loop_cfg: LoopConfig { max_iterations: 64, ..Default::default() },
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteSummary {
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
    /// Reports for every non-PASS case, for reproduction.
    pub defects: Vec<SoundnessReport>,
}

impl SuiteSummary {
    pub fn cases(&self) -> usize {
        self.pass + self.fail + self.inconclusive
    }
}

/// Run `cases` seeded random soundness checks; any FAIL is a defect in one of
/// the semantics, not a property of the generated program.
pub fn run_random_suite(cfg: &SuiteConfig) -> Result<SuiteSummary, SoundnessError> {
    let mut summary = SuiteSummary::default();
    for case in 0..cfg.cases {
        let case_seed = cfg.seed.wrapping_add(case as u64);
        let program = generate_program(case_seed, &cfg.gen);
        let init = random_product_init(case_seed ^ 0x9e3779b97f4a7c15, program.qubit_count());
        let abstract_init = derived_abstract_init(&init, cfg.tol);
        let mut report =
            check_sound(&program, &init.ensemble(), &abstract_init, &cfg.loop_cfg, cfg.tol)?;
        report.seed = Some(case_seed);
        match report.verdict {
            Verdict::Pass => summary.pass += 1,
            Verdict::Fail => {
                summary.fail += 1;
                summary.defects.push(report);
            }
            Verdict::Inconclusive => {
                summary.inconclusive += 1;
                summary.defects.push(report);
            }
        }
    }
    Ok(summary)
}
