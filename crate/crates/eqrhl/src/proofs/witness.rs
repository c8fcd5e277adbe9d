//! Coupling witnesses: every derivation evaluates, on a pure product input
//! pair, to an explicit separable ensemble realizing its judgment.
//!
//! The constructions transcribe the soundness proofs rule by rule. Mixed
//! inputs are handled by spectral decomposition and linear extension, which
//! is also how `seq` chains witnesses through the middle ensemble.

use crate::error::{Error, Result};
use crate::lang::{Ambient, Program};
use crate::linalg::matrix::{self as mx, CMat, CVec};
use crate::linalg::{DensityOperator, LabeledOperator, PureState, Register, SeparableEnsemble};
use crate::semantics::{denote, TruncationPolicy};

use super::{Derivation, Rule};

/// Numeric knobs for witness evaluation.
#[derive(Clone, Copy, Debug)]
pub struct WitnessCtx {
    /// Eigenvalues at or below this are dropped when decomposing ensemble
    /// factors into pure states.
    pub eig_cutoff: f64,
    /// Measurement branches with probability at or below this are dropped.
    pub branch_cutoff: f64,
}

impl Default for WitnessCtx {
    fn default() -> Self {
        WitnessCtx {
            eig_cutoff: 1e-13,
            branch_cutoff: 1e-14,
        }
    }
}

/// The executable coupling witness of a derivation.
pub struct CouplingWitness<'a> {
    deriv: &'a Derivation,
    ctx: WitnessCtx,
}

impl<'a> CouplingWitness<'a> {
    pub(crate) fn new(deriv: &'a Derivation, ctx: WitnessCtx) -> Self {
        CouplingWitness { deriv, ctx }
    }

    /// Map a pure product input pair to the output separable ensemble.
    pub fn evaluate(&self, psi1: &PureState, psi2: &PureState) -> Result<SeparableEnsemble> {
        eval_witness(self.deriv, psi1, psi2, &self.ctx)
    }
}

fn ambient_of(d: &Derivation) -> &Ambient {
    d.pre().ambient().ambient()
}

fn lift_ambient(ambient: &Ambient, m: &CMat, on: &Register) -> Result<CMat> {
    Ok(LabeledOperator::lift(m, on, ambient.register())?.into_matrix())
}

fn density(ambient: &Ambient, m: CMat) -> Result<DensityOperator> {
    DensityOperator::new(ambient.register().clone(), m)
}

fn single_term(
    ambient: &Ambient,
    left: DensityOperator,
    right: DensityOperator,
) -> SeparableEnsemble {
    let mut ens = SeparableEnsemble::empty(
        ambient.register().clone(),
        ambient.register().clone(),
    );
    ens.push(1.0, left, right);
    ens
}

/// Evaluate the witness of `d` on unit states `psi1`, `psi2` over the
/// ambient register.
pub fn eval_witness(
    d: &Derivation,
    psi1: &PureState,
    psi2: &PureState,
    ctx: &WitnessCtx,
) -> Result<SeparableEnsemble> {
    let ambient = ambient_of(d);
    match d.rule() {
        // the states stay unchanged
        Rule::Skip => Ok(single_term(ambient, psi1.density(), psi2.density())),

        // the swapped judgment couples through the swapped ensemble
        Rule::Sym => {
            let inner = eval_witness(&d.premises()[0], psi2, psi1, ctx)?;
            let mut flipped = SeparableEnsemble::empty(
                inner.right_register().clone(),
                inner.left_register().clone(),
            );
            for t in inner.terms() {
                flipped.push(t.weight, t.right.clone(), t.left.clone());
            }
            Ok(flipped)
        }

        // couple through the middle ensemble, extended linearly
        Rule::Seq => {
            let first = eval_witness(&d.premises()[0], psi1, psi2, ctx)?;
            witness_extend(&d.premises()[1], &first, ctx)
        }

        // order weakening never touches the coupling
        Rule::Conseq => eval_witness(&d.premises()[0], psi1, psi2, ctx),

        // any coupling works; take the product of the outputs
        Rule::ExFalso { policy } => {
            let (out1, _) = denote(d.left(), &psi1.density(), ambient, policy)?;
            let (out2, _) = denote(d.right(), &psi2.density(), ambient, policy)?;
            Ok(single_term(ambient, out1, out2))
        }

        // (U on X_1) applied to the product input
        Rule::Apply1 { u } => {
            let lifted = lift_ambient(ambient, u.matrix(), u.register())?;
            let evolved = PureState::new(ambient.register().clone(), &lifted * psi1.vector())?;
            Ok(single_term(ambient, evolved.density(), psi2.density()))
        }

        // proj(psi) (x) tr_X(input) (x) other side
        Rule::Init1 { state } => {
            let rest = psi1.density().partial_trace(state.register())?;
            let left = rest.tensor(&state.density())?;
            Ok(single_term(ambient, left, psi2.density()))
        }

        // mix the branch witnesses with the measured weights
        Rule::If1 { meas } => {
            let mut out = SeparableEnsemble::empty(
                ambient.register().clone(),
                ambient.register().clone(),
            );
            for (outcome, premise) in [(true, &d.premises()[0]), (false, &d.premises()[1])] {
                let kraus = lift_ambient(ambient, meas.kraus(outcome), &meas.register)?;
                let branch = &kraus * psi1.vector();
                let p = branch.norm_squared();
                if p <= ctx.branch_cutoff {
                    continue;
                }
                let normalized =
                    PureState::new(ambient.register().clone(), branch / mx::cr(p.sqrt()))?;
                let sub = eval_witness(premise, &normalized, psi2, ctx)?;
                out.absorb(p, sub);
            }
            Ok(out)
        }

        // run the loop on the left, keep the right state
        Rule::While1 { policy, .. } => {
            let (out1, _) = denote(d.left(), &psi1.density(), ambient, policy)?;
            Ok(single_term(ambient, out1, psi2.density()))
        }

        // measure both sides, mix the four branch witnesses
        Rule::JointIf4 { m, n } => {
            let mut out = SeparableEnsemble::empty(
                ambient.register().clone(),
                ambient.register().clone(),
            );
            // premise order: (t,t), (t,f), (f,t), (f,f)
            for (idx, (t, u)) in [(true, true), (true, false), (false, true), (false, false)]
                .into_iter()
                .enumerate()
            {
                let mk = lift_ambient(ambient, m.kraus(t), &m.register)?;
                let nk = lift_ambient(ambient, n.kraus(u), &n.register)?;
                let b1 = &mk * psi1.vector();
                let b2 = &nk * psi2.vector();
                let p = b1.norm_squared();
                let s = b2.norm_squared();
                if p * s <= ctx.branch_cutoff {
                    continue;
                }
                let n1 = PureState::new(ambient.register().clone(), b1 / mx::cr(p.sqrt()))?;
                let n2 = PureState::new(ambient.register().clone(), b2 / mx::cr(s.sqrt()))?;
                let sub = eval_witness(&d.premises()[idx], &n1, &n2, ctx)?;
                out.absorb(p * s, sub);
            }
            Ok(out)
        }

        Rule::JointWhile { m, n, policy } => {
            jointwhile_witness(d, m, n, policy, psi1, psi2, ctx)
        }
    }
}

/// Iterated coupling for the joint while rule: push the input coupling
/// through guard-true on both sides and the body witness, collecting the
/// guard-false mass each round; pad the remainder with a product term so the
/// marginals come out exactly.
fn jointwhile_witness(
    d: &Derivation,
    m: &crate::linalg::BinaryMeasurement,
    n: &crate::linalg::BinaryMeasurement,
    policy: &TruncationPolicy,
    psi1: &PureState,
    psi2: &PureState,
    ctx: &WitnessCtx,
) -> Result<SeparableEnsemble> {
    let ambient = ambient_of(d);
    let reg = ambient.register().clone();
    let mt = lift_ambient(ambient, &m.m_true, &m.register)?;
    let mf = lift_ambient(ambient, &m.m_false, &m.register)?;
    let nt = lift_ambient(ambient, &n.m_true, &n.register)?;
    let nf = lift_ambient(ambient, &n.m_false, &n.register)?;
    let body = &d.premises()[0];

    let conj = |k: &CMat, rho: &DensityOperator| -> Result<DensityOperator> {
        density(ambient, k * rho.matrix() * k.adjoint())
    };

    let mut eta = single_term(ambient, psi1.density(), psi2.density());
    let mut out = SeparableEnsemble::empty(reg.clone(), reg.clone());
    let mut iters = 0usize;
    loop {
        // exit mass of this round
        for t in eta.terms() {
            out.push(t.weight, conj(&mf, &t.left)?, conj(&nf, &t.right)?);
        }
        // mass that passes both guards
        let mut looping = SeparableEnsemble::empty(reg.clone(), reg.clone());
        for t in eta.terms() {
            looping.push(t.weight, conj(&mt, &t.left)?, conj(&nt, &t.right)?);
        }
        let mass = looping.total_trace();
        if mass <= policy.tail_tol {
            break;
        }
        if iters >= policy.max_iters {
            return Err(Error::NonConvergence {
                residual: mass,
                iters,
            });
        }
        iters += 1;
        eta = witness_extend(body, &looping, ctx)?;
    }

    // remainder product term restoring the exact marginals
    let (rho1, _) = denote(d.left(), &psi1.density(), ambient, policy)?;
    let (rho2, _) = denote(d.right(), &psi2.density(), ambient, policy)?;
    let left_gap = rho1.matrix() - out.left_marginal().matrix();
    let right_gap = rho2.matrix() - out.right_marginal().matrix();
    let t_left = mx::trace(&left_gap).re;
    let t_right = mx::trace(&right_gap).re;
    let r = 0.5 * (t_left + t_right);
    if r > ctx.branch_cutoff {
        let dim = reg.total_dim() as f64;
        let maximally_mixed = || mx::identity(reg.total_dim()).map(|x| x / mx::cr(dim));
        let gamma = if t_left > policy.tail_tol {
            left_gap.map(|x| x / mx::cr(t_left))
        } else {
            maximally_mixed()
        };
        let delta = if t_right > policy.tail_tol {
            right_gap.map(|x| x / mx::cr(t_right))
        } else {
            maximally_mixed()
        };
        out.push(r, density(ambient, gamma)?, density(ambient, delta)?);
    }
    Ok(out)
}

/// Linear extension of a witness to a separable ensemble input: decompose
/// every product term into weighted pure pairs and apply the witness to
/// each. Preserves the marginal and value contracts additively.
pub fn witness_extend(
    d: &Derivation,
    ensemble: &SeparableEnsemble,
    ctx: &WitnessCtx,
) -> Result<SeparableEnsemble> {
    let ambient = ambient_of(d);
    let reg = ambient.register().clone();
    let mut out = SeparableEnsemble::empty(reg.clone(), reg.clone());
    for term in ensemble.terms() {
        let lefts = decompose(term.left.matrix(), &reg, ctx)?;
        let rights = decompose(term.right.matrix(), &reg, ctx)?;
        for (ql, vl) in &lefts {
            for (qr, vr) in &rights {
                let w = term.weight * ql * qr;
                if w <= ctx.branch_cutoff {
                    continue;
                }
                let sub = eval_witness(d, vl, vr, ctx)?;
                out.absorb(w, sub);
            }
        }
    }
    Ok(out)
}

/// Spectral decomposition of a PSD factor into `(weight, unit pure state)`.
fn decompose(m: &CMat, reg: &Register, ctx: &WitnessCtx) -> Result<Vec<(f64, PureState)>> {
    let scale = mx::trace(m).re.abs().max(1.0);
    let mut out = Vec::new();
    for (lambda, v) in mx::hermitian_eigenpairs(m) {
        if lambda <= ctx.eig_cutoff {
            if lambda < -1e-9 * scale {
                return Err(Error::DecompositionFailure(lambda));
            }
            continue;
        }
        let unit = &v / mx::cr(v.norm());
        out.push((lambda, PureState::new(reg.clone(), unit)?));
    }
    Ok(out)
}

/// Convenience: evaluate and package the marginal/value residuals of a
/// witness output against the two program runs and the judgment's
/// expectations.
#[derive(Clone, Copy, Debug)]
pub struct WitnessResiduals {
    /// Trace-norm distance of the left marginal from the left program run.
    pub left_marginal: f64,
    /// Trace-norm distance of the right marginal from the right program run.
    pub right_marginal: f64,
    /// `tr(B rho') - <psi1 (x) psi2| A |psi1 (x) psi2>`; soundness means
    /// this is nonnegative (up to tolerance).
    pub slack: f64,
}

/// Check the witness contracts for one input pair.
pub fn witness_residuals(
    d: &Derivation,
    psi1: &PureState,
    psi2: &PureState,
    rho_prime: &SeparableEnsemble,
    policy: &TruncationPolicy,
) -> Result<WitnessResiduals> {
    let ambient = ambient_of(d);
    let (out1, _) = denote(d.left(), &psi1.density(), ambient, policy)?;
    let (out2, _) = denote(d.right(), &psi2.density(), ambient, policy)?;
    let left_marginal = mx::trace_norm_hermitian(
        &(rho_prime.left_marginal().matrix() - out1.matrix()),
    );
    let right_marginal = mx::trace_norm_hermitian(
        &(rho_prime.right_marginal().matrix() - out2.matrix()),
    );
    let v_pre = d.pre().value_pure_pair(psi1, psi2)?;
    let mut v_post = 0.0;
    for t in rho_prime.terms() {
        v_post += t.weight * d.post().value_product(&t.left, &t.right)?;
    }
    Ok(WitnessResiduals {
        left_marginal,
        right_marginal,
        slack: v_post - v_pre,
    })
}

pub(crate) fn unit_vector_from(raw: CVec, reg: &Register) -> Result<PureState> {
    let n = raw.norm();
    if n == 0.0 {
        return Err(Error::NotNormalized(0.0));
    }
    PureState::new(reg.clone(), raw / mx::cr(n))
}
