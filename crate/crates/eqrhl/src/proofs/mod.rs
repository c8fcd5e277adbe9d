//! Judgments `{A} c ~ d {B}`, derivations, and the proof rules.
//!
//! Every rule constructor checks its side conditions numerically at
//! construction time and synthesizes the conclusion exactly as the rule
//! states it. Each derivation carries an executable coupling witness (in
//! [`witness`]) obtained by transcribing the rule's constructive soundness
//! proof: a map from pure product inputs to an explicit separable ensemble
//! whose marginals are the two program outputs and whose post-expectation
//! value dominates the input's pre-expectation value.

mod rules;

pub mod witness;

pub use rules::{
    mirror, rule_apply1, rule_apply2, rule_conseq, rule_exfalso, rule_if1, rule_if2, rule_init1,
    rule_init2, rule_jointif, rule_jointif4, rule_jointwhile, rule_seq, rule_skip, rule_sym,
    rule_while1, rule_while2,
};
pub use witness::{witness_extend, CouplingWitness, WitnessCtx};

use crate::expectations::Expectation;
use crate::lang::Program;
use crate::linalg::{BinaryMeasurement, LabeledOperator, PureState};
use crate::semantics::TruncationPolicy;

/// A relational judgment `{pre} left ~ right {post}`.
#[derive(Clone, Debug)]
pub struct Judgment {
    pub pre: Expectation,
    pub left: Program,
    pub right: Program,
    pub post: Expectation,
}

/// Which rule concluded a derivation node, with the rule's own parameters.
#[derive(Clone, Debug)]
pub enum Rule {
    Skip,
    Sym,
    Seq,
    Conseq,
    ExFalso {
        policy: TruncationPolicy,
    },
    Apply1 {
        u: LabeledOperator,
    },
    Init1 {
        state: PureState,
    },
    If1 {
        meas: BinaryMeasurement,
    },
    While1 {
        meas: BinaryMeasurement,
        policy: TruncationPolicy,
    },
    JointIf4 {
        m: BinaryMeasurement,
        n: BinaryMeasurement,
    },
    JointWhile {
        m: BinaryMeasurement,
        n: BinaryMeasurement,
        policy: TruncationPolicy,
    },
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::Skip => "skip",
            Rule::Sym => "sym",
            Rule::Seq => "seq",
            Rule::Conseq => "conseq",
            Rule::ExFalso { .. } => "exfalso",
            Rule::Apply1 { .. } => "apply1",
            Rule::Init1 { .. } => "init1",
            Rule::If1 { .. } => "if1",
            Rule::While1 { .. } => "while1",
            Rule::JointIf4 { .. } => "jointif4",
            Rule::JointWhile { .. } => "jointwhile",
        }
    }
}

/// A proof tree. The conclusion is computed by the rule constructor from the
/// premises and parameters; it is never stored separately from them.
#[derive(Clone, Debug)]
pub struct Derivation {
    rule: Rule,
    premises: Vec<Derivation>,
    conclusion: Judgment,
}

impl Derivation {
    pub(crate) fn new(rule: Rule, premises: Vec<Derivation>, conclusion: Judgment) -> Self {
        Derivation {
            rule,
            premises,
            conclusion,
        }
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    pub fn premises(&self) -> &[Derivation] {
        &self.premises
    }

    pub fn conclusion(&self) -> &Judgment {
        &self.conclusion
    }

    pub fn pre(&self) -> &Expectation {
        &self.conclusion.pre
    }

    pub fn post(&self) -> &Expectation {
        &self.conclusion.post
    }

    pub fn left(&self) -> &Program {
        &self.conclusion.left
    }

    pub fn right(&self) -> &Program {
        &self.conclusion.right
    }

    /// The executable coupling witness carried by this derivation.
    pub fn witness(&self, ctx: WitnessCtx) -> CouplingWitness<'_> {
        CouplingWitness::new(self, ctx)
    }

    /// One-line rendering of the tree structure (rule names only).
    pub fn tree_summary(&self) -> String {
        if self.premises.is_empty() {
            self.rule.name().to_string()
        } else {
            let inner: Vec<String> = self.premises.iter().map(|p| p.tree_summary()).collect();
            format!("{}({})", self.rule.name(), inner.join(", "))
        }
    }
}
