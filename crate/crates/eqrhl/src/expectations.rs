//! Expectations over the doubled register: positive operators scoring how
//! much a pair of program runs satisfies a relational condition, with the
//! measurement duals used by the proof rules.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lang::Ambient;
use crate::linalg::matrix::{self as mx, CMat};
use crate::linalg::{
    equality_projector, swap_map, BinaryMeasurement, DensityOperator, LabeledOperator, PureState,
    Register,
};

/// The side of the doubled register a program run lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn suffix(self) -> &'static str {
        match self {
            Side::Left => "1",
            Side::Right => "2",
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// Two disjoint isomorphic copies of the ambient register, with the name
/// isomorphism `x -> x1, x2`.
#[derive(Debug)]
pub struct DoubledAmbient {
    ambient: Ambient,
    left: Register,
    right: Register,
    doubled: Register,
    swap: Vec<usize>,
}

impl PartialEq for DoubledAmbient {
    fn eq(&self, other: &Self) -> bool {
        self.ambient == other.ambient
    }
}

impl DoubledAmbient {
    pub fn new(ambient: Ambient) -> Result<Arc<Self>> {
        let left = ambient.register().renamed(|n| format!("{n}1"))?;
        let right = ambient.register().renamed(|n| format!("{n}2"))?;
        let doubled = left.union(&right)?.canonical();
        let swap = swap_map(&doubled, &left, &right)?;
        Ok(Arc::new(DoubledAmbient {
            ambient,
            left,
            right,
            doubled,
            swap,
        }))
    }

    pub fn ambient(&self) -> &Ambient {
        &self.ambient
    }

    /// The full doubled register in canonical order.
    pub fn register(&self) -> &Register {
        &self.doubled
    }

    pub fn side(&self, side: Side) -> &Register {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    /// Rename a sub-register of the ambient into one side's copy.
    pub fn side_register(&self, reg: &Register, side: Side) -> Result<Register> {
        if !reg.is_subset_of(self.ambient.register()) {
            return Err(Error::NotASubRegister {
                sub: reg.names(),
                sup: self.ambient.register().names(),
            });
        }
        reg.renamed(|n| format!("{n}{}", side.suffix()))
    }

    /// Lift an operator on an ambient sub-register into the doubled space,
    /// acting on the chosen side.
    pub fn lift_side(&self, m: &CMat, on: &Register, side: Side) -> Result<LabeledOperator> {
        let side_reg = self.side_register(on, side)?;
        LabeledOperator::lift(m, &side_reg, &self.doubled)
    }

    /// An operator labeled by one side's copy of an ambient sub-register
    /// (not lifted to the full doubled space).
    pub fn side_operator(&self, m: &CMat, on: &Register, side: Side) -> Result<LabeledOperator> {
        LabeledOperator::new(self.side_register(on, side)?, m.clone())
    }

    pub fn rename_state(&self, psi: &PureState, side: Side) -> Result<PureState> {
        psi.renamed(|n| format!("{n}{}", side.suffix()))
    }

    pub fn rename_density(&self, rho: &DensityOperator, side: Side) -> Result<DensityOperator> {
        Ok(DensityOperator::from_operator(
            rho.as_operator()
                .renamed(|n| format!("{n}{}", side.suffix()))?,
        ))
    }

    /// `left (x) right` as an operator over the doubled register, where both
    /// factors are states over the ambient.
    pub fn product_operator(
        &self,
        left: &DensityOperator,
        right: &DensityOperator,
    ) -> Result<LabeledOperator> {
        let l = self.rename_density(left, Side::Left)?;
        let r = self.rename_density(right, Side::Right)?;
        l.as_operator().tensor(&r.as_operator())
    }

    /// Exact entry relocation implementing `SWAP . op . SWAP` (the swap is an
    /// involutive permutation, so conjugating twice restores `op` bitwise).
    pub fn swap_conjugate(&self, op: &LabeledOperator) -> Result<LabeledOperator> {
        if op.register() != &self.doubled {
            return Err(Error::RegisterMismatch(
                op.register().names(),
                self.doubled.names(),
            ));
        }
        LabeledOperator::new(
            self.doubled.clone(),
            mx::permute_matrix(op.matrix(), &self.swap),
        )
    }
}

/// A positive bounded operator over the doubled register. The value it
/// assigns to a state `rho` is `tr(A rho)`.
#[derive(Clone, Debug)]
pub struct Expectation {
    amb: Arc<DoubledAmbient>,
    op: LabeledOperator,
}

impl PartialEq for Expectation {
    fn eq(&self, other: &Self) -> bool {
        self.amb == other.amb && self.op == other.op
    }
}

impl Expectation {
    /// Wrap an operator over the full doubled register. Hermiticity is
    /// checked here; positivity is checked by [`Expectation::validate`]
    /// (rule constructors preserve it structurally).
    pub fn new(amb: &Arc<DoubledAmbient>, op: LabeledOperator) -> Result<Self> {
        if op.register() != amb.register() {
            return Err(Error::RegisterMismatch(
                op.register().names(),
                amb.register().names(),
            ));
        }
        let defect = mx::hermiticity_defect(op.matrix());
        let scale = 1.0 + op.matrix().norm();
        if defect > 1e-9 * scale {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Expectation {
            amb: Arc::clone(amb),
            op,
        })
    }

    pub fn identity(amb: &Arc<DoubledAmbient>) -> Self {
        Expectation {
            op: LabeledOperator::identity(amb.register()),
            amb: Arc::clone(amb),
        }
    }

    pub fn zero(amb: &Arc<DoubledAmbient>) -> Self {
        Expectation {
            op: LabeledOperator::zero(amb.register()),
            amb: Arc::clone(amb),
        }
    }

    /// `k * id`.
    pub fn scalar(amb: &Arc<DoubledAmbient>, k: f64) -> Self {
        Expectation::identity(amb).scale(k)
    }

    /// The quantum-equality projector on the two copies of `sub`, lifted.
    pub fn equality(amb: &Arc<DoubledAmbient>, sub: &Register) -> Result<Self> {
        let s1 = amb.side_register(sub, Side::Left)?;
        let s2 = amb.side_register(sub, Side::Right)?;
        let eq = equality_projector(&s1, &s2)?;
        let lifted = LabeledOperator::lift(eq.matrix(), eq.register(), amb.register())?;
        Expectation::new(amb, lifted)
    }

    /// Projector onto a pure state of one side's copy of `sub`, lifted.
    pub fn proj_side(
        amb: &Arc<DoubledAmbient>,
        psi: &PureState,
        side: Side,
    ) -> Result<Self> {
        let lifted = amb.lift_side(&mx::projector(psi.vector()), psi.register(), side)?;
        Expectation::new(amb, lifted)
    }

    pub fn ambient(&self) -> &Arc<DoubledAmbient> {
        &self.amb
    }

    pub fn op(&self) -> &LabeledOperator {
        &self.op
    }

    pub fn add(&self, other: &Expectation) -> Result<Expectation> {
        Ok(Expectation {
            amb: Arc::clone(&self.amb),
            op: self.op.add(&other.op)?,
        })
    }

    pub fn scale(&self, k: f64) -> Expectation {
        Expectation {
            amb: Arc::clone(&self.amb),
            op: self.op.scale_re(k),
        }
    }

    pub fn approx_eq(&self, other: &Expectation, tol: f64) -> bool {
        self.amb == other.amb && self.op.approx_eq(&other.op, tol)
    }

    pub fn op_norm(&self) -> f64 {
        self.op.op_norm()
    }

    /// Check the positive-operator invariant at tolerance `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let min = self.op.min_eigenvalue();
        if min < -tol {
            return Err(Error::NotPositive(min));
        }
        Ok(())
    }

    /// `SWAP . A . SWAP` (exact relocation).
    pub fn swap_conjugated(&self) -> Expectation {
        Expectation {
            amb: Arc::clone(&self.amb),
            op: self
                .amb
                .swap_conjugate(&self.op)
                .expect("expectation register always matches its ambient"),
        }
    }

    /// Value on a product of two ambient-side mixed states.
    pub fn value_product(&self, left: &DensityOperator, right: &DensityOperator) -> Result<f64> {
        let prod = self.amb.product_operator(left, right)?;
        Ok(mx::trace_product(self.op.matrix(), prod.matrix()).re)
    }

    /// Value `<psi1 (x) psi2 | A | psi1 (x) psi2>` on a pure product pair.
    pub fn value_pure_pair(&self, psi1: &PureState, psi2: &PureState) -> Result<f64> {
        let l = self.amb.rename_state(psi1, Side::Left)?;
        let r = self.amb.rename_state(psi2, Side::Right)?;
        let v = l.tensor(&r)?;
        Ok((v.vector().adjoint() * self.op.matrix() * v.vector())[(0, 0)].re)
    }
}

/// The Heisenberg dual of the one-sided measurement restriction:
/// `(M_t on X_side)^dag A (M_t on X_side)`, satisfying
/// `tr(A E_t(rho)) = tr(E*_t(A) rho)`.
pub fn restrict_star(
    m: &BinaryMeasurement,
    side: Side,
    outcome: bool,
    a: &Expectation,
) -> Result<Expectation> {
    let lifted = a.amb.lift_side(m.kraus(outcome), &m.register, side)?;
    let conj = lifted
        .adjoint()
        .mul(&a.op)?
        .mul(&lifted)?;
    Expectation::new(&a.amb, conj)
}

/// The two-sided dual `E*_{t,u}`: conjugate by `M_t` on the left copy and
/// `N_u` on the right copy. Equals the two one-sided duals composed in
/// either order.
pub fn restrict_star2(
    m: &BinaryMeasurement,
    n: &BinaryMeasurement,
    t: bool,
    u: bool,
    a: &Expectation,
) -> Result<Expectation> {
    restrict_star(m, Side::Left, t, &restrict_star(n, Side::Right, u, a)?)
}

/// Conjugation `b . a . b^dag` where `b` is labeled by a sub-register of the
/// doubled space (the paper's `B ∘ A` notation reads `B A B^dag`).
pub fn conj_by(b: &LabeledOperator, a: &Expectation) -> Result<Expectation> {
    let conj = a.op.conjugated_by(b.matrix(), b.register())?;
    Expectation::new(&a.amb, conj)
}

/// Free-variable subset check by reconstruction: `A` contains only variables
/// from `y` iff `A = (tr_Z A / dim Z) (x) id_Z` for the complement `Z`.
pub fn fv_subset(a: &Expectation, y: &Register, tol: f64) -> Result<bool> {
    let doubled = a.amb.register().clone();
    if !y.is_subset_of(&doubled) {
        return Err(Error::NotASubRegister {
            sub: y.names(),
            sup: doubled.names(),
        });
    }
    let z = doubled.difference(y);
    if z.is_empty() {
        return Ok(true);
    }
    let reduced = a.op.partial_trace(&z)?.scale_re(1.0 / z.total_dim() as f64);
    let rebuilt = reduced.tensor(&LabeledOperator::identity(&z))?;
    Ok(a.op.frob_distance(&rebuilt)? <= tol)
}

/// The pre-expectation of the init rules:
/// `id_{X_side} (x) (psi^dag (x) id) A (psi (x) id)`.
pub fn init_pre(
    a: &Expectation,
    x: &Register,
    side: Side,
    psi: &PureState,
) -> Result<Expectation> {
    let xs = a.amb.side_register(x, side)?;
    let renamed = a.amb.rename_state(psi, side)?;
    let contracted = a.op.sandwich_vector(&xs, renamed.vector())?;
    let restored = contracted.tensor(&LabeledOperator::identity(&xs))?;
    Expectation::new(&a.amb, restored)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::{cr, projector, zeros};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup() -> Arc<DoubledAmbient> {
        let amb = Ambient::new(Register::of(&[("x", 2), ("y", 2)]).unwrap()).unwrap();
        DoubledAmbient::new(amb).unwrap()
    }

    fn random_expectation(amb: &Arc<DoubledAmbient>, rng: &mut ChaCha8Rng) -> Expectation {
        let d = amb.register().total_dim();
        let g = CMat::from_fn(d, d, |_, _| {
            mx::c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        Expectation::new(
            amb,
            LabeledOperator::new(amb.register().clone(), g.adjoint() * &g).unwrap(),
        )
        .unwrap()
    }

    fn random_doubled_state(amb: &Arc<DoubledAmbient>, rng: &mut ChaCha8Rng) -> CMat {
        let d = amb.register().total_dim();
        let g = CMat::from_fn(d, d, |_, _| {
            mx::c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let psd = g.adjoint() * &g;
        let tr = mx::trace(&psd).re;
        psd.map(|v| v / cr(tr))
    }

    #[test]
    fn doubled_register_naming() {
        let amb = setup();
        assert_eq!(
            amb.register().names(),
            vec!["x1", "x2", "y1", "y2"]
        );
        assert_eq!(amb.side(Side::Left).names(), vec!["x1", "y1"]);
    }

    #[test]
    fn restrict_star_of_identity_with_projector() {
        let amb = setup();
        let x = Register::of(&[("x", 2)]).unwrap();
        let p = projector(PureState::basis(&x, 0).vector());
        let meas = BinaryMeasurement::from_projector(x.clone(), p.clone()).unwrap();
        let id = Expectation::identity(&amb);
        let got = restrict_star(&meas, Side::Left, true, &id).unwrap();
        let want = Expectation::new(
            &amb,
            amb.lift_side(&p, &x, Side::Left).unwrap(),
        )
        .unwrap();
        assert!(got.approx_eq(&want, 1e-12));
        // zero maps to zero
        let zero = Expectation::zero(&amb);
        let z = restrict_star(&meas, Side::Left, true, &zero).unwrap();
        assert!(z.approx_eq(&Expectation::zero(&amb), 0.0));
    }

    #[test]
    fn restrict_star_trace_duality() {
        let amb = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = Register::of(&[("x", 2)]).unwrap();
        for _ in 0..20 {
            let g = CMat::from_fn(2, 2, |_, _| mx::c(rng.gen(), rng.gen()));
            let q = g.qr().q();
            let mut p = zeros(2);
            let col = q.column(0);
            for i in 0..2 {
                for j in 0..2 {
                    p[(i, j)] = col[i] * col[j].conj();
                }
            }
            let meas = BinaryMeasurement::from_projector(x.clone(), p).unwrap();
            let a = random_expectation(&amb, &mut rng);
            let rho = random_doubled_state(&amb, &mut rng);
            for outcome in [true, false] {
                let dual = restrict_star(&meas, Side::Left, outcome, &a).unwrap();
                let kraus = amb
                    .lift_side(meas.kraus(outcome), &x, Side::Left)
                    .unwrap();
                let evolved = kraus.matrix() * &rho * kraus.matrix().adjoint();
                let lhs = mx::trace_product(a.op().matrix(), &evolved).re;
                let rhs = mx::trace_product(dual.op().matrix(), &rho).re;
                assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn restrict_star2_composes_both_ways() {
        let amb = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let x = Register::of(&[("x", 2)]).unwrap();
        let y = Register::of(&[("y", 2)]).unwrap();
        let pm = projector(PureState::basis(&x, 1).vector());
        let pn = projector(PureState::basis(&y, 0).vector());
        let m = BinaryMeasurement::from_projector(x, pm).unwrap();
        let n = BinaryMeasurement::from_projector(y, pn).unwrap();
        let a = random_expectation(&amb, &mut rng);
        for (t, u) in [(true, true), (true, false), (false, true), (false, false)] {
            let two = restrict_star2(&m, &n, t, u, &a).unwrap();
            let way1 = restrict_star(&m, Side::Left, t, &restrict_star(&n, Side::Right, u, &a).unwrap()).unwrap();
            let way2 = restrict_star(&n, Side::Right, u, &restrict_star(&m, Side::Left, t, &a).unwrap()).unwrap();
            assert!(two.approx_eq(&way1, 1e-10));
            assert!(two.approx_eq(&way2, 1e-10));
        }
        // trivial measurement {id, 0} leaves the expectation unchanged
        let reg = Register::of(&[("x", 2)]).unwrap();
        let triv = BinaryMeasurement::new(reg.clone(), mx::identity(2), zeros(2)).unwrap();
        let triv2 = BinaryMeasurement::new(
            Register::of(&[("y", 2)]).unwrap(),
            mx::identity(2),
            zeros(2),
        )
        .unwrap();
        let same = restrict_star2(&triv, &triv2, true, true, &a).unwrap();
        assert!(same.approx_eq(&a, 1e-12));
    }

    #[test]
    fn restrict_star_preserves_order_and_psd() {
        let amb = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let x = Register::of(&[("x", 2)]).unwrap();
        let p = projector(PureState::basis(&x, 0).vector());
        let meas = BinaryMeasurement::from_projector(x, p).unwrap();
        let a = random_expectation(&amb, &mut rng);
        let b = a.add(&random_expectation(&amb, &mut rng)).unwrap(); // a <= b
        let ra = restrict_star(&meas, Side::Left, true, &a).unwrap();
        let rb = restrict_star(&meas, Side::Left, true, &b).unwrap();
        assert!(crate::linalg::loewner_leq(ra.op(), rb.op(), 1e-10).unwrap());
        assert!(ra.validate(1e-10).is_ok());
    }

    #[test]
    fn conj_by_identity_and_column_map() {
        let amb = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let a = random_expectation(&amb, &mut rng);
        let id = LabeledOperator::identity(amb.register());
        assert!(conj_by(&id, &a).unwrap().approx_eq(&a, 0.0));

        // conj by proj(psi) on y1 of proj(psi (x) psi) keeps the projector
        let y = Register::of(&[("y", 2)]).unwrap();
        let raw = crate::linalg::matrix::CVec::from_fn(2, |_, _| mx::c(rng.gen(), rng.gen()));
        let psi = PureState::new(y.clone(), &raw / cr(raw.norm())).unwrap();
        let psi1 = amb.rename_state(&psi, Side::Left).unwrap();
        let psi2 = amb.rename_state(&psi, Side::Right).unwrap();
        let pair = psi1.tensor(&psi2).unwrap();
        let proj_pair = Expectation::new(
            &amb,
            LabeledOperator::lift(&projector(pair.vector()), pair.register(), amb.register())
                .unwrap(),
        )
        .unwrap();
        let b = amb
            .side_operator(&projector(psi.vector()), &y, Side::Left)
            .unwrap();
        let conj = conj_by(&b, &proj_pair).unwrap();
        assert!(conj.approx_eq(&proj_pair, 1e-10));
    }

    #[test]
    fn fv_subset_reconstruction() {
        let amb = setup();
        let y = Register::of(&[("y", 2)]).unwrap();
        let y1 = amb.side_register(&y, Side::Left).unwrap();
        let p = projector(PureState::basis(&y, 0).vector());
        let a = Expectation::new(&amb, amb.lift_side(&p, &y, Side::Left).unwrap()).unwrap();
        assert!(fv_subset(&a, &y1, 1e-10).unwrap());

        // the equality projector on y1 y2 is not an operator on y1 alone
        let eq = Expectation::equality(&amb, &y).unwrap();
        assert!(!fv_subset(&eq, &y1, 1e-10).unwrap());
        let y1y2 = y1
            .union(&amb.side_register(&y, Side::Right).unwrap())
            .unwrap();
        assert!(fv_subset(&eq, &y1y2, 1e-10).unwrap());

        // the identity has free variables in the empty set
        let id = Expectation::identity(&amb);
        assert!(fv_subset(&id, &Register::empty(), 1e-10).unwrap());
    }

    #[test]
    fn fv_subset_implies_commutation_with_outside_operators() {
        let amb = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let y = Register::of(&[("y", 2)]).unwrap();
        let y1 = amb.side_register(&y, Side::Left).unwrap();
        let p = projector(PureState::basis(&y, 1).vector());
        let a = Expectation::new(&amb, amb.lift_side(&p, &y, Side::Left).unwrap()).unwrap();
        assert!(fv_subset(&a, &y1, 1e-10).unwrap());
        for _ in 0..10 {
            let g = CMat::from_fn(2, 2, |_, _| mx::c(rng.gen(), rng.gen()));
            let x = Register::of(&[("x", 2)]).unwrap();
            let outside = amb.lift_side(&g, &x, Side::Right).unwrap();
            let ab = outside.mul(a.op()).unwrap();
            let ba = a.op().mul(&outside).unwrap();
            assert!(ab.approx_eq(&ba, 1e-10));
        }
    }

    #[test]
    fn init_pre_of_matching_projector_is_identity() {
        let amb = setup();
        let y = Register::of(&[("y", 2)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let raw = crate::linalg::matrix::CVec::from_fn(2, |_, _| mx::c(rng.gen(), rng.gen()));
        let psi = PureState::new(y.clone(), &raw / cr(raw.norm())).unwrap();
        let a = Expectation::proj_side(&amb, &psi, Side::Left).unwrap();
        let pre = init_pre(&a, &y, Side::Left, &psi).unwrap();
        assert!(pre.approx_eq(&Expectation::identity(&amb), 1e-10));
    }

    #[test]
    fn swap_conjugation_is_involutive_bitwise() {
        let amb = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let a = random_expectation(&amb, &mut rng);
        let twice = a.swap_conjugated().swap_conjugated();
        assert_eq!(a.op().matrix(), twice.op().matrix());
    }
}
