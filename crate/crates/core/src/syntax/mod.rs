//! AST, concrete grammar, parser and well-formedness checks for programs.
//!
//! A program declares a fixed, ordered qubit register and a single command.
//! The declaration order fixes the tensor-factor order used everywhere else:
//! the first declared qubit is the most significant bit of a basis index.

mod lexer;
mod parser;

pub use parser::parse;

use std::fmt;
use thiserror::Error;

/// A declared qubit: its source name and its ordinal in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QubitId {
    pub name: String,
    pub index: usize,
}

impl QubitId {
    pub fn new(name: impl Into<String>, index: usize) -> Self {
        QubitId { name: name.into(), index }
    }
}

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Skip,
    Seq(Box<Command>, Box<Command>),
    If { cond: QubitId, then_cmd: Box<Command>, else_cmd: Box<Command> },
    While { cond: QubitId, body: Box<Command> },
    H(QubitId),
    T(QubitId),
    X(QubitId),
    Y(QubitId),
    Z(QubitId),
    CNot { control: QubitId, target: QubitId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub qubits: Vec<QubitId>,
    pub body: Command,
}

impl Program {
    pub fn qubit_count(&self) -> usize {
        self.qubits.len()
    }

    /// Ordinal of a qubit name, if declared.
    pub fn ordinal(&self, name: &str) -> Option<usize> {
        self.qubits.iter().position(|q| q.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: expected {expected}, found {found}")]
    Syntax { line: usize, col: usize, expected: String, found: String },
    #[error("{line}:{col}: undeclared qubit `{name}`")]
    UndeclaredQubit { name: String, line: usize, col: usize },
    #[error("{line}:{col}: duplicate qubit `{name}`")]
    DuplicateQubit { name: String, line: usize, col: usize },
    #[error("{line}:{col}: CNot control and target must differ")]
    SelfTargetCNot { line: usize, col: usize },
}

// ---------------------------------------------------------------------------
// Program points
// ---------------------------------------------------------------------------

/// One child-selection step on the path from the root command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PathStep {
    First,
    Second,
    Then,
    Else,
    Body,
}

impl PathStep {
    fn label(&self) -> &'static str {
        match self {
            PathStep::First => "first",
            PathStep::Second => "second",
            PathStep::Then => "then",
            PathStep::Else => "else",
            PathStep::Body => "body",
        }
    }
}

/// A sub-command address: the sequence of child selectors from the root.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ProgramPoint {
    pub path: Vec<PathStep>,
}

impl ProgramPoint {
    pub fn root() -> Self {
        ProgramPoint::default()
    }

    pub fn child(&self, step: PathStep) -> Self {
        let mut path = self.path.clone();
        path.push(step);
        ProgramPoint { path }
    }

    /// Resolve the point inside a command tree.
    pub fn resolve<'a>(&self, root: &'a Command) -> Option<&'a Command> {
        let mut cur = root;
        for step in &self.path {
            cur = match (cur, step) {
                (Command::Seq(a, _), PathStep::First) => a,
                (Command::Seq(_, b), PathStep::Second) => b,
                (Command::If { then_cmd, .. }, PathStep::Then) => then_cmd,
                (Command::If { else_cmd, .. }, PathStep::Else) => else_cmd,
                (Command::While { body, .. }, PathStep::Body) => body,
                _ => return None,
            };
        }
        Some(cur)
    }
}

impl fmt::Display for ProgramPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            return f.write_str("/");
        }
        for step in &self.path {
            write!(f, "/{}", step.label())?;
        }
        Ok(())
    }
}

/// Total number of nodes in a command tree.
pub fn node_count(cmd: &Command) -> usize {
    match cmd {
        Command::Seq(a, b) => 1 + node_count(a) + node_count(b),
        Command::If { then_cmd, else_cmd, .. } => 1 + node_count(then_cmd) + node_count(else_cmd),
        Command::While { body, .. } => 1 + node_count(body),
        _ => 1,
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    EmptyRegister,
    DuplicateQubit { name: String },
    /// Declared index does not match the declaration position.
    BadDeclarationIndex { name: String, index: usize, position: usize },
    UndeclaredQubit { name: String },
    SelfTargetCNot { name: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::EmptyRegister => write!(f, "program declares no qubits"),
            Diagnostic::DuplicateQubit { name } => write!(f, "duplicate qubit `{name}`"),
            Diagnostic::BadDeclarationIndex { name, index, position } => {
                write!(f, "qubit `{name}` declares index {index} at position {position}")
            }
            Diagnostic::UndeclaredQubit { name } => write!(f, "undeclared qubit `{name}`"),
            Diagnostic::SelfTargetCNot { name } => {
                write!(f, "CNot on `{name}` uses the same control and target")
            }
        }
    }
}

/// Check every structural invariant; an empty list means the program is
/// well formed. Diagnostics are data, not errors: ASTs built by hand may
/// violate any invariant.
pub fn validate(program: &Program) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    if program.qubits.is_empty() {
        diags.push(Diagnostic::EmptyRegister);
    }
    for (position, q) in program.qubits.iter().enumerate() {
        if program.qubits[..position].iter().any(|p| p.name == q.name) {
            diags.push(Diagnostic::DuplicateQubit { name: q.name.clone() });
        }
        if q.index != position {
            diags.push(Diagnostic::BadDeclarationIndex {
                name: q.name.clone(),
                index: q.index,
                position,
            });
        }
    }
    validate_cmd(&program.body, program, &mut diags);
    diags
}

fn check_ref(q: &QubitId, program: &Program, diags: &mut Vec<Diagnostic>) {
    let declared = program
        .qubits
        .get(q.index)
        .is_some_and(|declared| declared.name == q.name);
    if !declared {
        diags.push(Diagnostic::UndeclaredQubit { name: q.name.clone() });
    }
}

fn validate_cmd(cmd: &Command, program: &Program, diags: &mut Vec<Diagnostic>) {
    match cmd {
        Command::Skip => {}
        Command::Seq(a, b) => {
            validate_cmd(a, program, diags);
            validate_cmd(b, program, diags);
        }
        Command::If { cond, then_cmd, else_cmd } => {
            check_ref(cond, program, diags);
            validate_cmd(then_cmd, program, diags);
            validate_cmd(else_cmd, program, diags);
        }
        Command::While { cond, body } => {
            check_ref(cond, program, diags);
            validate_cmd(body, program, diags);
        }
        Command::H(q) | Command::T(q) | Command::X(q) | Command::Y(q) | Command::Z(q) => {
            check_ref(q, program, diags);
        }
        Command::CNot { control, target } => {
            check_ref(control, program, diags);
            check_ref(target, program, diags);
            if control == target {
                diags.push(Diagnostic::SelfTargetCNot { name: control.name.clone() });
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Unparsing
// ---------------------------------------------------------------------------

/// Render a program back to source text such that `parse(unparse(p))`
/// structurally equals `p`. Left-nested sequences are braced to survive the
/// parser's right-associated folding.
pub fn unparse(program: &Program) -> String {
    let names: Vec<&str> = program.qubits.iter().map(|q| q.name.as_str()).collect();
    format!("qubits {};\n{}", names.join(", "), render_spine(&program.body, ";\n"))
}

/// Flatten the right spine of a sequence into separator-joined statements.
fn render_spine(cmd: &Command, sep: &str) -> String {
    let mut parts = Vec::new();
    let mut cur = cmd;
    while let Command::Seq(first, second) = cur {
        parts.push(render_stmt(first));
        cur = second;
    }
    parts.push(render_stmt(cur));
    parts.join(sep)
}

fn render_block(cmd: &Command) -> String {
    format!("{{ {} }}", render_spine(cmd, "; "))
}

fn render_stmt(cmd: &Command) -> String {
    match cmd {
        Command::Skip => "skip".to_string(),
        // A sequence in statement position must be braced to keep its shape.
        Command::Seq(..) => render_block(cmd),
        Command::If { cond, then_cmd, else_cmd } => {
            format!("if {cond} then {} else {}", render_block(then_cmd), render_block(else_cmd))
        }
        Command::While { cond, body } => format!("while {cond} do {}", render_block(body)),
        Command::H(q) => format!("H({q})"),
        Command::T(q) => format!("T({q})"),
        Command::X(q) => format!("X({q})"),
        Command::Y(q) => format!("Y({q})"),
        Command::Z(q) => format!("Z({q})"),
        Command::CNot { control, target } => format!("CNot({control}, {target})"),
    }
}

/// The three-qubit teleportation program used throughout the test corpus.
pub fn teleportation_source() -> &'static str {
    "qubits q1, q2, q3;\n\
     H(q2);\n\
     CNot(q2, q3);\n\
     CNot(q1, q2);\n\
     H(q1);\n\
     if q1 then { if q2 then { skip } else { X(q3) } } else { if q2 then { Z(q3) } else { Y(q3) } }"
}

/// Teleportation with a fourth bystander qubit declared last.
pub fn teleportation4_source() -> &'static str {
    "qubits q1, q2, q3, q4;\n\
     H(q2);\n\
     CNot(q2, q3);\n\
     CNot(q1, q2);\n\
     H(q1);\n\
     if q1 then { if q2 then { skip } else { X(q3) } } else { if q2 then { Z(q3) } else { Y(q3) } }"
}

/// Double CNot: the concrete semantics is the identity, the abstract one is not.
pub fn trap_source() -> &'static str {
    "qubits q1, q2;\nCNot(q1, q2);\nCNot(q1, q2)"
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(name: &str, index: usize) -> QubitId {
        QubitId::new(name, index)
    }

    #[test]
    fn parse_smallest_program() {
        let p = parse("qubits q; skip").unwrap();
        assert_eq!(p, Program { qubits: vec![q("q", 0)], body: Command::Skip });
    }

    #[test]
    fn parse_teleportation_matches_expected_ast() {
        let p = parse(teleportation_source()).unwrap();
        assert_eq!(p.qubits, vec![q("q1", 0), q("q2", 1), q("q3", 2)]);
        let q1 = q("q1", 0);
        let q2 = q("q2", 1);
        let q3 = q("q3", 2);
        let inner_then = Command::If {
            cond: q2.clone(),
            then_cmd: Box::new(Command::Skip),
            else_cmd: Box::new(Command::X(q3.clone())),
        };
        let inner_else = Command::If {
            cond: q2.clone(),
            then_cmd: Box::new(Command::Z(q3.clone())),
            else_cmd: Box::new(Command::Y(q3.clone())),
        };
        let expected = Command::Seq(
            Box::new(Command::H(q2.clone())),
            Box::new(Command::Seq(
                Box::new(Command::CNot { control: q2.clone(), target: q3.clone() }),
                Box::new(Command::Seq(
                    Box::new(Command::CNot { control: q1.clone(), target: q2.clone() }),
                    Box::new(Command::Seq(
                        Box::new(Command::H(q1.clone())),
                        Box::new(Command::If {
                            cond: q1,
                            then_cmd: Box::new(inner_then),
                            else_cmd: Box::new(inner_else),
                        }),
                    )),
                )),
            )),
        );
        assert_eq!(p.body, expected);
    }

    #[test]
    fn parse_rejects_self_target_cnot() {
        assert!(matches!(
            parse("qubits q; CNot(q, q)"),
            Err(ParseError::SelfTargetCNot { .. })
        ));
    }

    #[test]
    fn parse_rejects_undeclared_and_duplicate() {
        assert!(matches!(
            parse("qubits a; H(b)"),
            Err(ParseError::UndeclaredQubit { name, .. }) if name == "b"
        ));
        assert!(matches!(
            parse("qubits a, a; skip"),
            Err(ParseError::DuplicateQubit { name, .. }) if name == "a"
        ));
    }

    #[test]
    fn parse_reports_position() {
        match parse("qubits a;\nH(a) skip") {
            Err(ParseError::Syntax { line: 2, col, .. }) => assert_eq!(col, 6),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn parse_sequencing_is_right_associated() {
        let p = parse("qubits a; skip; skip; skip").unwrap();
        let skip = Box::new(Command::Skip);
        assert_eq!(
            p.body,
            Command::Seq(skip.clone(), Box::new(Command::Seq(skip.clone(), skip)))
        );
    }

    #[test]
    fn parse_allows_comments_and_trailing_semicolon() {
        let p = parse("qubits a; // register\nX(a); // flip\n").unwrap();
        assert_eq!(p.body, Command::X(q("a", 0)));
    }

    #[test]
    fn parse_is_deterministic() {
        let src = teleportation_source();
        assert_eq!(parse(src).unwrap(), parse(src).unwrap());
    }

    #[test]
    fn validate_accepts_teleportation() {
        let p = parse(teleportation_source()).unwrap();
        assert!(validate(&p).is_empty());
    }

    #[test]
    fn validate_flags_undeclared_reference() {
        let p = Program { qubits: vec![q("q1", 0)], body: Command::H(q("q2", 1)) };
        assert_eq!(validate(&p), vec![Diagnostic::UndeclaredQubit { name: "q2".to_string() }]);
    }

    #[test]
    fn validate_flags_duplicate_declaration() {
        let p = Program {
            qubits: vec![q("q1", 0), QubitId::new("q1", 1)],
            body: Command::Skip,
        };
        assert_eq!(validate(&p), vec![Diagnostic::DuplicateQubit { name: "q1".to_string() }]);
    }

    #[test]
    fn unparse_smallest_program() {
        let p = Program { qubits: vec![q("q", 0)], body: Command::Skip };
        assert_eq!(unparse(&p), "qubits q;\nskip");
    }

    #[test]
    fn unparse_round_trips_teleportation() {
        let p = parse(teleportation_source()).unwrap();
        assert_eq!(parse(&unparse(&p)).unwrap(), p);
    }

    #[test]
    fn unparse_braces_left_nested_sequences() {
        let a = Command::X(q("a", 0));
        let left_nested = Command::Seq(
            Box::new(Command::Seq(Box::new(a.clone()), Box::new(a.clone()))),
            Box::new(a.clone()),
        );
        let p = Program { qubits: vec![q("a", 0)], body: left_nested };
        assert_eq!(unparse(&p), "qubits a;\n{ X(a); X(a) };\nX(a)");
        assert_eq!(parse(&unparse(&p)).unwrap(), p);
    }

    #[test]
    fn program_point_resolution() {
        let p = parse(teleportation_source()).unwrap();
        let root = ProgramPoint::root();
        assert_eq!(root.resolve(&p.body), Some(&p.body));
        let h2 = root.child(PathStep::First);
        assert_eq!(h2.resolve(&p.body), Some(&Command::H(q("q2", 1))));
        let deep = ProgramPoint {
            path: vec![
                PathStep::Second,
                PathStep::Second,
                PathStep::Second,
                PathStep::Second,
                PathStep::Then,
                PathStep::Else,
            ],
        };
        assert_eq!(deep.resolve(&p.body), Some(&Command::X(q("q3", 2))));
        assert_eq!(root.child(PathStep::Then).resolve(&p.body), None);
        assert_eq!(format!("{deep}"), "/second/second/second/second/then/else");
    }

    #[test]
    fn teleportation_node_count() {
        let p = parse(teleportation_source()).unwrap();
        assert_eq!(node_count(&p.body), 15);
    }

    // Random well-formed ASTs over a fixed two-qubit register.
    fn arb_command(depth: u32) -> impl Strategy<Value = Command> {
        let qubit = prop_oneof![Just(q("a", 0)), Just(q("b", 1))];
        let leaf = prop_oneof![
            Just(Command::Skip),
            qubit.clone().prop_map(Command::H),
            qubit.clone().prop_map(Command::T),
            qubit.clone().prop_map(Command::X),
            qubit.clone().prop_map(Command::Y),
            qubit.clone().prop_map(Command::Z),
            Just(Command::CNot { control: q("a", 0), target: q("b", 1) }),
            Just(Command::CNot { control: q("b", 1), target: q("a", 0) }),
        ];
        leaf.prop_recursive(depth, 64, 8, move |inner| {
            let qubit = prop_oneof![Just(q("a", 0)), Just(q("b", 1))];
            prop_oneof![
                (inner.clone(), inner.clone())
                    .prop_map(|(x, y)| Command::Seq(Box::new(x), Box::new(y))),
                (qubit.clone(), inner.clone(), inner.clone()).prop_map(|(c, x, y)| Command::If {
                    cond: c,
                    then_cmd: Box::new(x),
                    else_cmd: Box::new(y),
                }),
                (qubit, inner)
                    .prop_map(|(c, x)| Command::While { cond: c, body: Box::new(x) }),
            ]
        })
    }

    proptest! {
        #[test]
        fn parse_unparse_identity(body in arb_command(5)) {
            let program = Program { qubits: vec![q("a", 0), q("b", 1)], body };
            prop_assert!(validate(&program).is_empty());
            let source = unparse(&program);
            let reparsed = parse(&source).unwrap();
            prop_assert_eq!(reparsed, program);
        }
    }
}
