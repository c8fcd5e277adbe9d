//! The imperative quantum language: AST, concrete syntax, and typechecker.
//!
//! Programs act on a fixed ambient register of variables. Sequencing is
//! associative with `skip` as its neutral element, which the AST enforces by
//! construction: `Seq` nodes are flattened and never contain `Skip`.

mod builtins;
mod lexer;
mod parser;
mod pretty;

pub use builtins::{builtin_matrix, proj_lt, proj_state, rot, shift, MatParam};
pub use lexer::ParseError;
pub use parser::{parse, parse_file, parse_statements};
pub use pretty::pretty;

use crate::error::{Error, Result};
use crate::linalg::{
    check_isometry, check_kraus_pair, BinaryMeasurement, LabeledOperator, PureState, Register,
};

/// The fixed set of program variables all programs range over.
#[derive(Clone, Debug, PartialEq)]
pub struct Ambient {
    reg: Register,
}

impl Ambient {
    pub fn new(reg: Register) -> Result<Self> {
        if reg.is_empty() {
            return Err(Error::SideCondition(
                "ambient register must be nonempty".into(),
            ));
        }
        Ok(Ambient {
            reg: reg.canonical(),
        })
    }

    pub fn register(&self) -> &Register {
        &self.reg
    }
}

/// Program syntax. `Seq` is kept flat and `Skip`-free.
#[derive(Clone, Debug, PartialEq)]
pub enum Program {
    Skip,
    /// Apply an isometry to the variables it is labeled with.
    Apply(LabeledOperator),
    /// Initialize a register with a fresh state, discarding its old content.
    Init(PureState),
    If {
        meas: BinaryMeasurement,
        then_branch: Box<Program>,
        else_branch: Box<Program>,
    },
    While {
        meas: BinaryMeasurement,
        body: Box<Program>,
    },
    Seq(Vec<Program>),
}

impl Program {
    /// Sequence a list of programs, flattening nested sequences and dropping
    /// `skip`s.
    pub fn seq(items: Vec<Program>) -> Program {
        let mut flat = Vec::new();
        for item in items {
            match item {
                Program::Skip => {}
                Program::Seq(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Program::Skip,
            1 => flat.pop().unwrap(),
            _ => Program::Seq(flat),
        }
    }

    pub fn then(self, next: Program) -> Program {
        Program::seq(vec![self, next])
    }

    pub fn if_skip(meas: BinaryMeasurement) -> Program {
        Program::If {
            meas,
            then_branch: Box::new(Program::Skip),
            else_branch: Box::new(Program::Skip),
        }
    }

    /// Union of all registers the program mentions.
    pub fn free_register(&self) -> Result<Register> {
        fn merge(acc: Register, reg: &Register) -> Result<Register> {
            acc.union(&reg.difference(&acc))
        }
        fn walk(p: &Program, acc: Register) -> Result<Register> {
            match p {
                Program::Skip => Ok(acc),
                Program::Apply(op) => merge(acc, op.register()),
                Program::Init(state) => merge(acc, state.register()),
                Program::If {
                    meas,
                    then_branch,
                    else_branch,
                } => {
                    let acc = merge(acc, &meas.register)?;
                    let acc = walk(then_branch, acc)?;
                    walk(else_branch, acc)
                }
                Program::While { meas, body } => {
                    let acc = merge(acc, &meas.register)?;
                    walk(body, acc)
                }
                Program::Seq(items) => {
                    let mut acc = acc;
                    for item in items {
                        acc = walk(item, acc)?;
                    }
                    Ok(acc)
                }
            }
        }
        Ok(walk(self, Register::empty())?.canonical())
    }

    /// Structural equality with entrywise tolerance on embedded matrices.
    pub fn approx_eq(&self, other: &Program, tol: f64) -> bool {
        match (self, other) {
            (Program::Skip, Program::Skip) => true,
            (Program::Apply(a), Program::Apply(b)) => a.approx_eq(b, tol),
            (Program::Init(a), Program::Init(b)) => {
                a.register() == b.register() && (a.vector() - b.vector()).norm() <= tol
            }
            (
                Program::If {
                    meas: m1,
                    then_branch: t1,
                    else_branch: e1,
                },
                Program::If {
                    meas: m2,
                    then_branch: t2,
                    else_branch: e2,
                },
            ) => meas_approx_eq(m1, m2, tol) && t1.approx_eq(t2, tol) && e1.approx_eq(e2, tol),
            (
                Program::While { meas: m1, body: b1 },
                Program::While { meas: m2, body: b2 },
            ) => meas_approx_eq(m1, m2, tol) && b1.approx_eq(b2, tol),
            (Program::Seq(a), Program::Seq(b)) => {
                a.len() == b.len() && a.iter().zip(b.iter()).all(|(x, y)| x.approx_eq(y, tol))
            }
            _ => false,
        }
    }
}

fn meas_approx_eq(a: &BinaryMeasurement, b: &BinaryMeasurement, tol: f64) -> bool {
    a.register == b.register
        && (&a.m_true - &b.m_true).norm() <= tol
        && (&a.m_false - &b.m_false).norm() <= tol
}

/// A well-formedness finding from [`typecheck`].
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub message: String,
}

impl Diagnostic {
    fn new(message: impl Into<String>) -> Self {
        Diagnostic {
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

/// Check the well-typedness constraints: every `apply` carries an isometry,
/// every `init` a normalized state, every guard a complete Kraus pair, and
/// all registers live inside the ambient. Returns all findings; an empty list
/// means the program is well typed.
pub fn typecheck(p: &Program, ambient: &Ambient, tol: f64) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    check_program(p, ambient, tol, &mut out);
    out
}

fn check_register(reg: &Register, ambient: &Ambient, what: &str, out: &mut Vec<Diagnostic>) {
    if !reg.is_subset_of(ambient.register()) {
        out.push(Diagnostic::new(format!(
            "{what} register {:?} is not contained in the ambient {:?}",
            reg.names(),
            ambient.register().names()
        )));
    }
}

fn check_program(p: &Program, ambient: &Ambient, tol: f64, out: &mut Vec<Diagnostic>) {
    match p {
        Program::Skip => {}
        Program::Apply(op) => {
            check_register(op.register(), ambient, "apply", out);
            if !check_isometry(op.matrix(), tol) {
                out.push(Diagnostic::new(format!(
                    "apply on {:?}: matrix is not an isometry",
                    op.register().names()
                )));
            }
        }
        Program::Init(state) => {
            check_register(state.register(), ambient, "init", out);
            if state.check_normalized(tol).is_err() {
                out.push(Diagnostic::new(format!(
                    "init on {:?}: state is not normalized (norm {})",
                    state.register().names(),
                    state.norm()
                )));
            }
        }
        Program::If {
            meas,
            then_branch,
            else_branch,
        } => {
            check_register(&meas.register, ambient, "if guard", out);
            if !check_kraus_pair(meas, tol) {
                out.push(Diagnostic::new(format!(
                    "if guard on {:?}: Kraus completeness defect {:.3e}",
                    meas.register.names(),
                    meas.kraus_defect()
                )));
            }
            check_program(then_branch, ambient, tol, out);
            check_program(else_branch, ambient, tol, out);
        }
        Program::While { meas, body } => {
            check_register(&meas.register, ambient, "while guard", out);
            if !check_kraus_pair(meas, tol) {
                out.push(Diagnostic::new(format!(
                    "while guard on {:?}: Kraus completeness defect {:.3e}",
                    meas.register.names(),
                    meas.kraus_defect()
                )));
            }
            check_program(body, ambient, tol, out);
        }
        Program::Seq(items) => {
            for item in items {
                check_program(item, ambient, tol, out);
            }
        }
    }
}
