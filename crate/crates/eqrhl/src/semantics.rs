//! Denotational semantics on density operators, its Heisenberg dual, and the
//! termination check.
//!
//! While-loops denote an infinite series; here the series is truncated under
//! an explicit policy and the un-exited mass is always surfaced in a
//! [`TailReport`], never dropped silently. The dual carries its own
//! certificate: the truncated dual of a loop reports (an upper bound on) the
//! mass that can still be inside the loop after the last unrolled iteration,
//! taken over all input states.

use crate::error::{Error, Result};
use crate::lang::{Ambient, Program};
use crate::linalg::matrix::{self as mx, CMat};
use crate::linalg::{DensityOperator, LabeledOperator, Register};

/// Truncation policy for while-loops.
#[derive(Clone, Copy, Debug)]
pub struct TruncationPolicy {
    pub max_iters: usize,
    pub tail_tol: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            max_iters: 10_000,
            tail_tol: 1e-9,
        }
    }
}

/// Accounting for truncated loop tails. `residual_trace` accumulates over
/// every loop encountered; `iterations_used` is the deepest loop's count.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TailReport {
    pub iterations_used: usize,
    pub residual_trace: f64,
}

impl TailReport {
    fn merge(&mut self, other: TailReport) {
        self.iterations_used = self.iterations_used.max(other.iterations_used);
        self.residual_trace += other.residual_trace;
    }

    pub fn converged(&self, policy: &TruncationPolicy) -> bool {
        self.residual_trace <= policy.tail_tol
    }
}

/// A program together with the policy under which it is run.
#[derive(Clone, Debug)]
pub struct Superop {
    pub program: Program,
    pub policy: TruncationPolicy,
}

impl Superop {
    pub fn new(program: Program, policy: TruncationPolicy) -> Result<Self> {
        if policy.max_iters < 1 || policy.tail_tol <= 0.0 {
            return Err(Error::SideCondition(
                "truncation policy needs max_iters >= 1 and tail_tol > 0".into(),
            ));
        }
        Ok(Superop { program, policy })
    }

    pub fn apply(
        &self,
        rho: &DensityOperator,
        ambient: &Ambient,
    ) -> Result<(DensityOperator, TailReport)> {
        denote(&self.program, rho, ambient, &self.policy)
    }

    pub fn dual_apply(
        &self,
        a: &LabeledOperator,
        ambient: &Ambient,
    ) -> Result<(LabeledOperator, TailReport)> {
        dual_denote(&self.program, a, ambient, &self.policy)
    }
}

fn lift_to(ambient: &Ambient, m: &CMat, on: &Register) -> Result<CMat> {
    Ok(LabeledOperator::lift(m, on, ambient.register())?.into_matrix())
}

fn conj(m: &CMat, rho: &CMat) -> CMat {
    m * rho * m.adjoint()
}

/// Forward semantics: apply `c` to `rho`. Linear, positivity-preserving and
/// trace-nonincreasing; trace-preserving exactly when `c` terminates.
pub fn denote(
    c: &Program,
    rho: &DensityOperator,
    ambient: &Ambient,
    policy: &TruncationPolicy,
) -> Result<(DensityOperator, TailReport)> {
    if rho.register() != ambient.register() {
        return Err(Error::RegisterMismatch(
            rho.register().names(),
            ambient.register().names(),
        ));
    }
    let mut report = TailReport::default();
    let out = denote_mat(c, rho.matrix().clone(), ambient, policy, &mut report)?;
    Ok((
        DensityOperator::new(ambient.register().clone(), out)?,
        report,
    ))
}

fn denote_mat(
    c: &Program,
    rho: CMat,
    ambient: &Ambient,
    policy: &TruncationPolicy,
    report: &mut TailReport,
) -> Result<CMat> {
    match c {
        Program::Skip => Ok(rho),
        Program::Apply(op) => {
            let u = lift_to(ambient, op.matrix(), op.register())?;
            Ok(conj(&u, &rho))
        }
        Program::Init(state) => {
            let rho_op = DensityOperator::new(ambient.register().clone(), rho)?;
            let rest = rho_op.partial_trace(state.register())?;
            let fresh = state.density();
            Ok(rest.tensor(&fresh)?.matrix().clone())
        }
        Program::If {
            meas,
            then_branch,
            else_branch,
        } => {
            let mt = lift_to(ambient, &meas.m_true, &meas.register)?;
            let mf = lift_to(ambient, &meas.m_false, &meas.register)?;
            let t = denote_mat(then_branch, conj(&mt, &rho), ambient, policy, report)?;
            let f = denote_mat(else_branch, conj(&mf, &rho), ambient, policy, report)?;
            Ok(t + f)
        }
        Program::While { meas, body } => {
            let mt = lift_to(ambient, &meas.m_true, &meas.register)?;
            let mf = lift_to(ambient, &meas.m_false, &meas.register)?;
            let mut cur = rho;
            let mut acc = mx::zeros(cur.nrows());
            let mut local = TailReport::default();
            for k in 0..policy.max_iters {
                acc += conj(&mf, &cur);
                cur = denote_mat(body, conj(&mt, &cur), ambient, policy, &mut local)?;
                local.iterations_used = k + 1;
                if mx::trace(&cur).re <= policy.tail_tol {
                    break;
                }
            }
            local.residual_trace += mx::trace(&cur).re.max(0.0);
            report.merge(local);
            Ok(acc)
        }
        Program::Seq(items) => {
            let mut cur = rho;
            for item in items {
                cur = denote_mat(item, cur, ambient, policy, report)?;
            }
            Ok(cur)
        }
    }
}

/// Heisenberg dual: returns `A'` with `tr(A * denote(c, rho)) = tr(A' * rho)`
/// for every `rho`, up to the reported truncation residual (scaled by the
/// operator norm of `A`).
pub fn dual_denote(
    c: &Program,
    a: &LabeledOperator,
    ambient: &Ambient,
    policy: &TruncationPolicy,
) -> Result<(LabeledOperator, TailReport)> {
    if a.register() != ambient.register() {
        return Err(Error::RegisterMismatch(
            a.register().names(),
            ambient.register().names(),
        ));
    }
    let mut report = TailReport::default();
    let out = dual_mat(c, a.matrix().clone(), ambient, policy, &mut report)?;
    Ok((
        LabeledOperator::new(ambient.register().clone(), out)?,
        report,
    ))
}

fn dual_conj(m: &CMat, a: &CMat) -> CMat {
    m.adjoint() * a * m
}

fn dual_mat(
    c: &Program,
    a: CMat,
    ambient: &Ambient,
    policy: &TruncationPolicy,
    report: &mut TailReport,
) -> Result<CMat> {
    match c {
        Program::Skip => Ok(a),
        Program::Apply(op) => {
            let u = lift_to(ambient, op.matrix(), op.register())?;
            Ok(dual_conj(&u, &a))
        }
        Program::Init(state) => {
            let full = LabeledOperator::new(ambient.register().clone(), a)?;
            let contracted = full.sandwich_vector(state.register(), state.vector())?;
            let id_x = LabeledOperator::identity(state.register());
            Ok(contracted.tensor(&id_x)?.into_matrix())
        }
        Program::If {
            meas,
            then_branch,
            else_branch,
        } => {
            let mt = lift_to(ambient, &meas.m_true, &meas.register)?;
            let mf = lift_to(ambient, &meas.m_false, &meas.register)?;
            let t = dual_mat(then_branch, a.clone(), ambient, policy, report)?;
            let f = dual_mat(else_branch, a, ambient, policy, report)?;
            Ok(dual_conj(&mt, &t) + dual_conj(&mf, &f))
        }
        Program::While { meas, body } => {
            let mt = lift_to(ambient, &meas.m_true, &meas.register)?;
            let mf = lift_to(ambient, &meas.m_false, &meas.register)?;
            // sum of (E*_true . dual(body))^k (E*_false(A)); the iterate
            // starting from the identity certifies how much mass any state
            // can still keep inside the loop.
            let mut term = dual_conj(&mf, &a);
            let mut acc = mx::zeros(a.nrows());
            let mut cert = mx::identity(a.nrows());
            let mut local = TailReport::default();
            for k in 0..policy.max_iters {
                acc += &term;
                let body_term = dual_mat(body, term, ambient, policy, &mut local)?;
                term = dual_conj(&mt, &body_term);
                let body_cert = dual_mat(body, dual_conj(&mt, &cert), ambient, policy, &mut local)?;
                cert = body_cert;
                local.iterations_used = k + 1;
                // Frobenius bounds the operator norm from above: sound stop
                if cert.norm() <= policy.tail_tol {
                    break;
                }
            }
            local.residual_trace += mx::op_norm_hermitian(&mx::hermitize(&cert));
            report.merge(local);
            Ok(acc)
        }
        Program::Seq(items) => {
            let mut cur = a;
            for item in items.iter().rev() {
                cur = dual_mat(item, cur, ambient, policy, report)?;
            }
            Ok(cur)
        }
    }
}

/// Three-valued termination verdict with its numeric certificate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Terminating,
    NonTerminating,
    /// Loop truncation was inconclusive; soundness forbids claiming either.
    Unknown,
}

#[derive(Clone, Copy, Debug)]
pub struct TerminationCheck {
    pub verdict: Termination,
    /// `|dual(id) - id|` in operator norm.
    pub defect: f64,
    /// Tail residual of the dual computation.
    pub residual: f64,
}

/// A program terminates iff its superoperator preserves the trace of every
/// state, equivalently iff its dual fixes the identity. One operator
/// computation quantifies the trace loss over all states.
pub fn is_terminating(
    c: &Program,
    ambient: &Ambient,
    policy: &TruncationPolicy,
    tol: f64,
) -> Result<TerminationCheck> {
    let id = LabeledOperator::identity(ambient.register());
    let (d, report) = dual_denote(c, &id, ambient, policy)?;
    let defect = mx::op_norm_hermitian(&mx::hermitize(&(d.matrix() - id.matrix())));
    let verdict = if report.residual_trace > policy.tail_tol {
        Termination::Unknown
    } else if defect <= tol {
        Termination::Terminating
    } else {
        Termination::NonTerminating
    };
    Ok(TerminationCheck {
        verdict,
        defect,
        residual: report.residual_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, typecheck};
    use crate::linalg::matrix::{cr, projector, zeros};
    use crate::linalg::{BinaryMeasurement, PureState, Register};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ambient_y() -> Ambient {
        Ambient::new(Register::of(&[("y", 2)]).unwrap()).unwrap()
    }

    fn policy() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    fn random_state(ambient: &Ambient, rng: &mut ChaCha8Rng) -> DensityOperator {
        let d = ambient.register().total_dim();
        let g = CMat::from_fn(d, d, |_, _| {
            mx::c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let psd = g.adjoint() * &g;
        let tr = mx::trace(&psd).re;
        DensityOperator::new(
            ambient.register().clone(),
            psd.map(|x| x / cr(tr)),
        )
        .unwrap()
    }

    #[test]
    fn if_with_skip_branches_is_a_measurement() {
        let amb = ambient_y();
        let y = amb.register().clone();
        let p = projector(PureState::basis(&y, 0).vector());
        let meas = BinaryMeasurement::from_projector(y.clone(), p.clone()).unwrap();
        let prog = Program::if_skip(meas);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_state(&amb, &mut rng);
        let (out, _) = denote(&prog, &rho, &amb, &policy()).unwrap();
        let want = &p * rho.matrix() * &p
            + (mx::identity(2) - &p) * rho.matrix() * (mx::identity(2) - &p);
        assert!((out.matrix() - want).norm() < 1e-12);
    }

    #[test]
    fn while_that_never_runs() {
        let amb = ambient_y();
        let y = amb.register().clone();
        let meas = BinaryMeasurement::new(y, zeros(2), mx::identity(2)).unwrap();
        let prog = Program::While {
            meas,
            body: Box::new(Program::Skip),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_state(&amb, &mut rng);
        let (out, report) = denote(&prog, &rho, &amb, &policy()).unwrap();
        assert!((out.matrix() - rho.matrix()).norm() < 1e-12);
        assert_eq!(report.iterations_used, 1);
        assert!(report.residual_trace < 1e-15);
    }

    #[test]
    fn while_that_never_exits_reports_residual() {
        let amb = ambient_y();
        let y = amb.register().clone();
        let meas = BinaryMeasurement::new(y, mx::identity(2), zeros(2)).unwrap();
        let prog = Program::While {
            meas,
            body: Box::new(Program::Skip),
        };
        let shallow = TruncationPolicy {
            max_iters: 50,
            tail_tol: 1e-9,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_state(&amb, &mut rng);
        let (out, report) = denote(&prog, &rho, &amb, &shallow).unwrap();
        assert!(out.trace() < 1e-12);
        assert!((report.residual_trace - 1.0).abs() < 1e-9);
        assert!(!report.converged(&shallow));

        let check = is_terminating(&prog, &amb, &shallow, 1e-8).unwrap();
        assert_eq!(check.verdict, Termination::Unknown);
    }

    #[test]
    fn init_discards_and_replaces() {
        let amb = Ambient::new(Register::of(&[("x", 3), ("y", 2)]).unwrap()).unwrap();
        let y = Register::of(&[("y", 2)]).unwrap();
        let psi = PureState::basis(&y, 1);
        let prog = Program::Init(psi.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random_state(&amb, &mut rng);
        let (out, _) = denote(&prog, &rho, &amb, &policy()).unwrap();
        let want = rho
            .partial_trace(&y)
            .unwrap()
            .tensor(&psi.density())
            .unwrap();
        assert!((out.matrix() - want.matrix()).norm() < 1e-12);
        // dual of init maps proj(psi) on y to the identity
        let a = LabeledOperator::lift(&projector(psi.vector()), &y, amb.register()).unwrap();
        let (d, _) = dual_denote(&prog, &a, &amb, &policy()).unwrap();
        assert!(d.approx_eq(&LabeledOperator::identity(amb.register()), 1e-12));
    }

    #[test]
    fn dual_of_apply_is_conjugation() {
        let amb = ambient_y();
        let text = "apply rot(0.7) on y";
        let prog = parse(text, &amb).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = CMat::from_fn(2, 2, |_, _| mx::c(rng.gen(), rng.gen()));
        let a = LabeledOperator::new(amb.register().clone(), mx::hermitize(&g)).unwrap();
        let (d, _) = dual_denote(&prog, &a, &amb, &policy()).unwrap();
        let r = crate::lang::rot(0.7);
        let want = r.adjoint() * a.matrix() * &r;
        assert!((d.matrix() - want).norm() < 1e-12);
        // skip dual is the identity map
        let (ds, _) = dual_denote(&Program::Skip, &a, &amb, &policy()).unwrap();
        assert!(ds.approx_eq(&a, 0.0));
    }

    #[test]
    fn duality_linearity_trace_positivity_on_random_programs() {
        let amb = Ambient::new(Register::of(&[("x", 3), ("y", 2)]).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        // shallow loop budget: random guards may never exit, and the duality
        // bound absorbs the reported residual either way. The tail tolerance
        // sits far below the linearity tolerance because truncation stops at
        // an input-dependent iteration count.
        let policy = TruncationPolicy {
            max_iters: 300,
            tail_tol: 1e-13,
        };
        for trial in 0..40 {
            let prog = crate::semantics::tests::random_program(&amb, &mut rng, 3);
            assert!(typecheck(&prog, &amb, 1e-9).is_empty(), "{prog:?}");
            let rho = random_state(&amb, &mut rng);
            let d = amb.register().total_dim();
            let g = CMat::from_fn(d, d, |_, _| mx::c(rng.gen(), rng.gen()));
            let a = LabeledOperator::new(amb.register().clone(), mx::hermitize(&g)).unwrap();

            let (out, rep) = denote(&prog, &rho, &amb, &policy).unwrap();
            let (dual, drep) = dual_denote(&prog, &a, &amb, &policy).unwrap();
            let lhs = mx::trace_product(a.matrix(), out.matrix()).re;
            let rhs = mx::trace_product(dual.matrix(), rho.matrix()).re;
            let slack = a.op_norm() * (rep.residual_trace + drep.residual_trace) + 1e-8;
            assert!(
                (lhs - rhs).abs() <= slack,
                "trial {trial}: duality violated: {lhs} vs {rhs}"
            );

            // trace-nonincreasing, positive
            assert!(out.trace() <= rho.trace() + 1e-10);
            assert!(out.matrix().nrows() == d);
            assert!(mx::min_eigenvalue(out.matrix()) >= -1e-9);

            // linearity on a convex combination
            let rho2 = random_state(&amb, &mut rng);
            let (out2, _) = denote(&prog, &rho2, &amb, &policy).unwrap();
            let mix = DensityOperator::new(
                amb.register().clone(),
                rho.matrix().map(|x| x * cr(0.3)) + rho2.matrix().map(|x| x * cr(0.7)),
            )
            .unwrap();
            let (outm, _) = denote(&prog, &mix, &amb, &policy).unwrap();
            let want = out.matrix().map(|x| x * cr(0.3)) + out2.matrix().map(|x| x * cr(0.7));
            assert!((outm.matrix() - want).norm() < 1e-10);
        }
    }

    /// Random well-typed program over the ambient, for property tests.
    pub(crate) fn random_program(
        ambient: &Ambient,
        rng: &mut ChaCha8Rng,
        depth: usize,
    ) -> Program {
        let pick_reg = |rng: &mut ChaCha8Rng| {
            let vars = ambient.register().vars();
            let k = rng.gen_range(0..vars.len());
            Register::new(vec![vars[k].clone()]).unwrap()
        };
        let random_unitary = |dim: usize, rng: &mut ChaCha8Rng| {
            let g = CMat::from_fn(dim, dim, |_, _| {
                mx::c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            let qr = g.qr();
            qr.q()
        };
        let random_meas = |reg: &Register, rng: &mut ChaCha8Rng| {
            let dim = reg.total_dim();
            let u = random_unitary(dim, rng);
            let rank = rng.gen_range(0..=dim);
            let mut p = zeros(dim);
            for k in 0..rank {
                let col = u.column(k);
                for i in 0..dim {
                    for j in 0..dim {
                        p[(i, j)] += col[i] * col[j].conj();
                    }
                }
            }
            BinaryMeasurement::from_projector(reg.clone(), p).unwrap()
        };
        let choice = if depth == 0 {
            rng.gen_range(0..3)
        } else {
            rng.gen_range(0..6)
        };
        match choice {
            0 => Program::Skip,
            1 => {
                let reg = pick_reg(rng);
                let u = random_unitary(reg.total_dim(), rng);
                Program::Apply(LabeledOperator::new(reg, u).unwrap())
            }
            2 => {
                let reg = pick_reg(rng);
                let dim = reg.total_dim();
                let raw = crate::linalg::matrix::CVec::from_fn(dim, |_, _| {
                    mx::c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
                });
                let v = &raw / cr(raw.norm());
                Program::Init(PureState::new(reg, v).unwrap())
            }
            3 => {
                let reg = pick_reg(rng);
                Program::If {
                    meas: random_meas(&reg, rng),
                    then_branch: Box::new(random_program(ambient, rng, depth - 1)),
                    else_branch: Box::new(random_program(ambient, rng, depth - 1)),
                }
            }
            4 => {
                let reg = pick_reg(rng);
                Program::While {
                    meas: random_meas(&reg, rng),
                    body: Box::new(random_program(ambient, rng, depth - 1)),
                }
            }
            _ => Program::seq(vec![
                random_program(ambient, rng, depth - 1),
                random_program(ambient, rng, depth - 1),
            ]),
        }
    }
}
