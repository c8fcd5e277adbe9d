//! Rule constructors. Each checks its side conditions and produces the
//! conclusion judgment stated by the rule.

use crate::error::{Error, Result};
use crate::expectations::{restrict_star, restrict_star2, Expectation, Side};
use crate::lang::Program;
use crate::linalg::{
    check_isometry, check_kraus_pair, loewner_leq, BinaryMeasurement, LabeledOperator, PureState,
};
use crate::semantics::{is_terminating, Termination, TruncationPolicy};

use super::{Derivation, Judgment, Rule};

/// Frobenius tolerance for "the same expectation" checks between premises.
const EXP_EQ_TOL: f64 = 1e-9;
/// Structural tolerance for "the same program" checks between premises.
const PROG_EQ_TOL: f64 = 1e-9;
/// Operator-norm tolerance for the termination side conditions.
const TERM_TOL: f64 = 1e-8;

fn scaled(tol: f64, a: &Expectation, b: &Expectation) -> f64 {
    tol * (1.0 + a.op().matrix().norm().max(b.op().matrix().norm()))
}

fn require_same_expectation(a: &Expectation, b: &Expectation, what: &str) -> Result<()> {
    if !a.approx_eq(b, scaled(EXP_EQ_TOL, a, b)) {
        return Err(Error::SideCondition(format!(
            "{what}: expectations differ (Frobenius distance {:.3e})",
            a.op()
                .frob_distance(b.op())
                .unwrap_or(f64::INFINITY)
        )));
    }
    Ok(())
}

fn require_same_program(a: &Program, b: &Program, what: &str) -> Result<()> {
    if !a.approx_eq(b, PROG_EQ_TOL) {
        return Err(Error::SideCondition(format!("{what}: programs differ")));
    }
    Ok(())
}

fn require_terminating(c: &Program, exp: &Expectation, policy: &TruncationPolicy) -> Result<()> {
    let ambient = exp.ambient().ambient();
    let check = is_terminating(c, ambient, policy, TERM_TOL)?;
    match check.verdict {
        Termination::Terminating => Ok(()),
        Termination::NonTerminating => Err(Error::TerminationRequired(format!(
            "non-terminating (trace-loss {:.3e})",
            check.defect
        ))),
        Termination::Unknown => Err(Error::TerminationRequired(format!(
            "unknown (loop residual {:.3e})",
            check.residual
        ))),
    }
}

/// `{A} skip ~ skip {A}`.
pub fn rule_skip(a: &Expectation) -> Derivation {
    Derivation::new(
        Rule::Skip,
        Vec::new(),
        Judgment {
            pre: a.clone(),
            left: Program::Skip,
            right: Program::Skip,
            post: a.clone(),
        },
    )
}

/// From `{A} c ~ d {B}` conclude `{SWAP.A.SWAP} d ~ c {SWAP.B.SWAP}`.
pub fn rule_sym(d: Derivation) -> Derivation {
    let conclusion = Judgment {
        pre: d.conclusion.pre.swap_conjugated(),
        left: d.conclusion.right.clone(),
        right: d.conclusion.left.clone(),
        post: d.conclusion.post.swap_conjugated(),
    };
    Derivation::new(Rule::Sym, vec![d], conclusion)
}

/// From `{A} c1 ~ d1 {B}` and `{B} c2 ~ d2 {C}` conclude
/// `{A} c1;c2 ~ d1;d2 {C}`. The middle expectations must agree exactly (at
/// tolerance level); weakening must be spelled out with `conseq`.
pub fn rule_seq(d1: Derivation, d2: Derivation) -> Result<Derivation> {
    require_same_expectation(&d1.conclusion.post, &d2.conclusion.pre, "seq middle")?;
    let conclusion = Judgment {
        pre: d1.conclusion.pre.clone(),
        left: d1.conclusion.left.clone().then(d2.conclusion.left.clone()),
        right: d1
            .conclusion
            .right
            .clone()
            .then(d2.conclusion.right.clone()),
        post: d2.conclusion.post.clone(),
    };
    Ok(Derivation::new(Rule::Seq, vec![d1, d2], conclusion))
}

/// From `A' <= A`, `{A} c ~ d {B}`, `B <= B'` conclude `{A'} c ~ d {B'}`.
/// The witness is unchanged.
pub fn rule_conseq(
    a_new: &Expectation,
    d: Derivation,
    b_new: &Expectation,
    tol: f64,
) -> Result<Derivation> {
    for (lo, hi, what) in [
        (a_new, &d.conclusion.pre, "precondition weakening"),
        (&d.conclusion.post, b_new, "postcondition strengthening"),
    ] {
        if !loewner_leq(lo.op(), hi.op(), tol)? {
            let gap = crate::linalg::matrix::min_eigenvalue(
                &(hi.op().matrix() - lo.op().matrix()),
            );
            return Err(Error::SideCondition(format!(
                "conseq {what} fails the Loewner check (min eigenvalue {gap:.3e})"
            )));
        }
    }
    let conclusion = Judgment {
        pre: a_new.clone(),
        left: d.conclusion.left.clone(),
        right: d.conclusion.right.clone(),
        post: b_new.clone(),
    };
    Ok(Derivation::new(Rule::Conseq, vec![d], conclusion))
}

/// `{0} c ~ d {B}` for terminating `c`, `d`.
pub fn rule_exfalso(
    c: Program,
    d: Program,
    b: &Expectation,
    policy: TruncationPolicy,
) -> Result<Derivation> {
    require_terminating(&c, b, &policy)?;
    require_terminating(&d, b, &policy)?;
    let conclusion = Judgment {
        pre: Expectation::zero(b.ambient()),
        left: c,
        right: d,
        post: b.clone(),
    };
    Ok(Derivation::new(
        Rule::ExFalso { policy },
        Vec::new(),
        conclusion,
    ))
}

/// `{(U on X_1)^dag A (U on X_1)} apply U to X ~ skip {A}`.
pub fn rule_apply1(u: &LabeledOperator, a: &Expectation) -> Result<Derivation> {
    if !check_isometry(u.matrix(), 1e-9) {
        let gram = u.matrix().adjoint() * u.matrix();
        let defect = (gram - crate::linalg::matrix::identity(u.matrix().ncols())).norm();
        return Err(Error::NotIsometry(defect));
    }
    let lifted = a.ambient().lift_side(u.matrix(), u.register(), Side::Left)?;
    let pre = Expectation::new(
        a.ambient(),
        lifted.adjoint().mul(a.op())?.mul(&lifted)?,
    )?;
    let conclusion = Judgment {
        pre,
        left: Program::Apply(u.clone()),
        right: Program::Skip,
        post: a.clone(),
    };
    Ok(Derivation::new(
        Rule::Apply1 { u: u.clone() },
        Vec::new(),
        conclusion,
    ))
}

/// `{id_{X_1} (x) (psi^dag (x) id) A (psi (x) id)} init X psi ~ skip {A}`.
pub fn rule_init1(psi: &PureState, a: &Expectation) -> Result<Derivation> {
    psi.check_normalized(1e-9)?;
    let pre = crate::expectations::init_pre(a, psi.register(), Side::Left, psi)?;
    let conclusion = Judgment {
        pre,
        left: Program::Init(psi.clone()),
        right: Program::Skip,
        post: a.clone(),
    };
    Ok(Derivation::new(
        Rule::Init1 { state: psi.clone() },
        Vec::new(),
        conclusion,
    ))
}

/// From `{A_T} c_T ~ d {B}` and `{A_F} c_F ~ d {B}` conclude
/// `{E*_true(A_T) + E*_false(A_F)} if M[X] then c_T else c_F ~ d {B}`.
pub fn rule_if1(
    meas: &BinaryMeasurement,
    d_then: Derivation,
    d_else: Derivation,
) -> Result<Derivation> {
    if !check_kraus_pair(meas, 1e-9) {
        return Err(Error::KrausDefect(meas.kraus_defect()));
    }
    require_same_program(&d_then.conclusion.right, &d_else.conclusion.right, "if1 right program")?;
    require_same_expectation(&d_then.conclusion.post, &d_else.conclusion.post, "if1 post")?;
    let pre_t = restrict_star(meas, Side::Left, true, &d_then.conclusion.pre)?;
    let pre_f = restrict_star(meas, Side::Left, false, &d_else.conclusion.pre)?;
    let conclusion = Judgment {
        pre: pre_t.add(&pre_f)?,
        left: Program::If {
            meas: meas.clone(),
            then_branch: Box::new(d_then.conclusion.left.clone()),
            else_branch: Box::new(d_else.conclusion.left.clone()),
        },
        right: d_then.conclusion.right.clone(),
        post: d_then.conclusion.post.clone(),
    };
    Ok(Derivation::new(
        Rule::If1 { meas: meas.clone() },
        vec![d_then, d_else],
        conclusion,
    ))
}

/// From `{A} c ~ skip {E*_true(A) + E*_false(B)}` conclude
/// `{E*_true(A) + E*_false(B)} while M[X] do c ~ skip {B}`, provided the
/// body and the loop terminate.
pub fn rule_while1(
    meas: &BinaryMeasurement,
    b: &Expectation,
    body: Derivation,
    policy: TruncationPolicy,
) -> Result<Derivation> {
    if !check_kraus_pair(meas, 1e-9) {
        return Err(Error::KrausDefect(meas.kraus_defect()));
    }
    require_same_program(&body.conclusion.right, &Program::Skip, "while1 right program")?;
    let pre_t = restrict_star(meas, Side::Left, true, &body.conclusion.pre)?;
    let pre_f = restrict_star(meas, Side::Left, false, b)?;
    let invariant_post = pre_t.add(&pre_f)?;
    require_same_expectation(&body.conclusion.post, &invariant_post, "while1 body post")?;
    let loop_prog = Program::While {
        meas: meas.clone(),
        body: Box::new(body.conclusion.left.clone()),
    };
    require_terminating(&body.conclusion.left, b, &policy)?;
    require_terminating(&loop_prog, b, &policy)?;
    let conclusion = Judgment {
        pre: invariant_post,
        left: loop_prog,
        right: Program::Skip,
        post: b.clone(),
    };
    Ok(Derivation::new(
        Rule::While1 {
            meas: meas.clone(),
            policy,
        },
        vec![body],
        conclusion,
    ))
}

/// The mirrored forms of the one-sided rules, obtained through `sym`. For
/// `apply1`/`init1` the inner rule is re-instantiated with the
/// swap-conjugated postcondition, so the mirrored conclusion ends in the
/// original `A` (the swap conjugations cancel bitwise); for `if1`/`while1`
/// the premises are proofs and cannot be re-instantiated, so the conclusion
/// is the sym-conjugated judgment.
pub fn mirror(d: &Derivation) -> Result<Derivation> {
    match d.rule() {
        Rule::Apply1 { u } => rule_apply2(u, &d.conclusion.post),
        Rule::Init1 { state } => rule_init2(state, &d.conclusion.post),
        Rule::If1 { .. } | Rule::While1 { .. } => Ok(rule_sym(d.clone())),
        other => Err(Error::SideCondition(format!(
            "mirror expects an apply1/init1/if1/while1 root, got {}",
            other.name()
        ))),
    }
}

/// `{(U on X_2)^dag A (U on X_2)} skip ~ apply U to X {A}`.
pub fn rule_apply2(u: &LabeledOperator, a: &Expectation) -> Result<Derivation> {
    Ok(rule_sym(rule_apply1(u, &a.swap_conjugated())?))
}

/// `{id_{X_2} (x) (psi^dag (x) id) A (psi (x) id)} skip ~ init X psi {A}`.
pub fn rule_init2(psi: &PureState, a: &Expectation) -> Result<Derivation> {
    Ok(rule_sym(rule_init1(psi, &a.swap_conjugated())?))
}

/// From `{A_T} c ~ d_T {B}` and `{A_F} c ~ d_F {B}` conclude
/// `{E*_true(A_T) + E*_false(A_F)} c ~ if N[Y] then d_T else d_F {B}` with
/// the measurement dual acting on the right copy.
pub fn rule_if2(
    meas: &BinaryMeasurement,
    d_then: Derivation,
    d_else: Derivation,
) -> Result<Derivation> {
    Ok(rule_sym(rule_if1(
        meas,
        rule_sym(d_then),
        rule_sym(d_else),
    )?))
}

/// Mirror of `while1`: loop on the right program.
pub fn rule_while2(
    meas: &BinaryMeasurement,
    b: &Expectation,
    body: Derivation,
    policy: TruncationPolicy,
) -> Result<Derivation> {
    Ok(rule_sym(rule_while1(
        meas,
        &b.swap_conjugated(),
        rule_sym(body),
        policy,
    )?))
}

/// From the four premises `{A_tu} c_t ~ d_u {B}` conclude
/// `{sum_tu E*_{t,u}(A_tu)} if M[X] ... ~ if N[Y] ... {B}`.
///
/// Premises are ordered `(true,true), (true,false), (false,true),
/// (false,false)`.
pub fn rule_jointif4(
    m: &BinaryMeasurement,
    n: &BinaryMeasurement,
    premises: [Derivation; 4],
) -> Result<Derivation> {
    for meas in [m, n] {
        if !check_kraus_pair(meas, 1e-9) {
            return Err(Error::KrausDefect(meas.kraus_defect()));
        }
    }
    let [tt, tf, ft, ff] = &premises;
    require_same_expectation(&tt.conclusion.post, &tf.conclusion.post, "jointif4 post")?;
    require_same_expectation(&tt.conclusion.post, &ft.conclusion.post, "jointif4 post")?;
    require_same_expectation(&tt.conclusion.post, &ff.conclusion.post, "jointif4 post")?;
    require_same_program(&tt.conclusion.left, &tf.conclusion.left, "jointif4 c_true")?;
    require_same_program(&ft.conclusion.left, &ff.conclusion.left, "jointif4 c_false")?;
    require_same_program(&tt.conclusion.right, &ft.conclusion.right, "jointif4 d_true")?;
    require_same_program(&tf.conclusion.right, &ff.conclusion.right, "jointif4 d_false")?;

    let mut pre = Expectation::zero(tt.conclusion.pre.ambient());
    for (deriv, t, u) in [
        (tt, true, true),
        (tf, true, false),
        (ft, false, true),
        (ff, false, false),
    ] {
        pre = pre.add(&restrict_star2(m, n, t, u, &deriv.conclusion.pre)?)?;
    }
    let conclusion = Judgment {
        pre,
        left: Program::If {
            meas: m.clone(),
            then_branch: Box::new(tt.conclusion.left.clone()),
            else_branch: Box::new(ft.conclusion.left.clone()),
        },
        right: Program::If {
            meas: n.clone(),
            then_branch: Box::new(tt.conclusion.right.clone()),
            else_branch: Box::new(tf.conclusion.right.clone()),
        },
        post: tt.conclusion.post.clone(),
    };
    Ok(Derivation::new(
        Rule::JointIf4 {
            m: m.clone(),
            n: n.clone(),
        },
        premises.into(),
        conclusion,
    ))
}

/// From the diagonal premises `{A_T} c_T ~ d_T {B}` and `{A_F} c_F ~ d_F {B}`
/// conclude `{E*_{t,t}(A_T) + E*_{f,f}(A_F)} if ~ if {B}`. The off-diagonal
/// premises are filled with `exfalso`, which needs all four branch programs
/// to terminate.
pub fn rule_jointif(
    m: &BinaryMeasurement,
    n: &BinaryMeasurement,
    d_tt: Derivation,
    d_ff: Derivation,
    policy: TruncationPolicy,
) -> Result<Derivation> {
    let b = d_tt.conclusion.post.clone();
    require_same_expectation(&b, &d_ff.conclusion.post, "jointif post")?;
    let c_true = d_tt.conclusion.left.clone();
    let c_false = d_ff.conclusion.left.clone();
    let d_true = d_tt.conclusion.right.clone();
    let d_false = d_ff.conclusion.right.clone();
    for prog in [&c_true, &c_false, &d_true, &d_false] {
        require_terminating(prog, &b, &policy)?;
    }
    let tf = rule_exfalso(c_true, d_false, &b, policy)?;
    let ft = rule_exfalso(c_false, d_true, &b, policy)?;
    rule_jointif4(m, n, [d_tt, tf, ft, d_ff])
}

/// From `{A} c ~ d {E*_{t,t}(A) + E*_{f,f}(B)}` conclude
/// `{E*_{t,t}(A) + E*_{f,f}(B)} while M[X] c ~ while N[Y] d {B}`, provided
/// both bodies and both loops terminate.
pub fn rule_jointwhile(
    m: &BinaryMeasurement,
    n: &BinaryMeasurement,
    b: &Expectation,
    body: Derivation,
    policy: TruncationPolicy,
) -> Result<Derivation> {
    for meas in [m, n] {
        if !check_kraus_pair(meas, 1e-9) {
            return Err(Error::KrausDefect(meas.kraus_defect()));
        }
    }
    let invariant = &body.conclusion.pre;
    let post_tt = restrict_star2(m, n, true, true, invariant)?;
    let post_ff = restrict_star2(m, n, false, false, b)?;
    let expected_post = post_tt.add(&post_ff)?;
    require_same_expectation(&body.conclusion.post, &expected_post, "jointwhile body post")?;

    let left_loop = Program::While {
        meas: m.clone(),
        body: Box::new(body.conclusion.left.clone()),
    };
    let right_loop = Program::While {
        meas: n.clone(),
        body: Box::new(body.conclusion.right.clone()),
    };
    require_terminating(&body.conclusion.left, b, &policy)?;
    require_terminating(&body.conclusion.right, b, &policy)?;
    require_terminating(&left_loop, b, &policy)?;
    require_terminating(&right_loop, b, &policy)?;

    let conclusion = Judgment {
        pre: expected_post,
        left: left_loop,
        right: right_loop,
        post: b.clone(),
    };
    Ok(Derivation::new(
        Rule::JointWhile {
            m: m.clone(),
            n: n.clone(),
            policy,
        },
        vec![body],
        conclusion,
    ))
}
