//! Labeled operators and states over named registers, and the well-formedness
//! predicates for isometries and binary measurements.

use num_complex::Complex64;

use super::matrix::{self as mx, CMat, CVec};
use super::{Register, Tolerances};
use crate::error::{Error, Result};

/// A square operator together with the register labeling its tensor factors.
///
/// The factors are always stored in canonical (name-sorted) order, so two
/// operators over the same variables are directly comparable entry by entry.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledOperator {
    register: Register,
    matrix: CMat,
}

impl LabeledOperator {
    /// Wrap a matrix whose factor order follows `register` as given; the
    /// stored value is permuted into canonical order.
    pub fn new(register: Register, matrix: CMat) -> Result<Self> {
        let dim = register.total_dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: matrix.nrows(),
            });
        }
        if register.is_canonical() {
            return Ok(LabeledOperator { register, matrix });
        }
        let canonical = register.canonical();
        let perm = register.permutation_to(&canonical)?;
        let map = mx::factor_permutation_map(&register.dims(), &perm);
        Ok(LabeledOperator {
            register: canonical,
            matrix: mx::permute_matrix(&matrix, &map),
        })
    }

    pub fn identity(register: &Register) -> Self {
        LabeledOperator {
            matrix: mx::identity(register.total_dim()),
            register: register.canonical(),
        }
    }

    pub fn zero(register: &Register) -> Self {
        LabeledOperator {
            matrix: mx::zeros(register.total_dim()),
            register: register.canonical(),
        }
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn same_register(&self, other: &LabeledOperator) -> Result<()> {
        if self.register != other.register {
            return Err(Error::RegisterMismatch(
                self.register.names(),
                other.register.names(),
            ));
        }
        Ok(())
    }

    /// Named tensor product. The registers must be disjoint; the result is
    /// canonicalized, so `a.tensor(b)` and `b.tensor(a)` agree bitwise.
    pub fn tensor(&self, other: &LabeledOperator) -> Result<LabeledOperator> {
        let combined = self.register.union(&other.register)?;
        LabeledOperator::new(combined, self.matrix.kronecker(&other.matrix))
    }

    /// Interpret `u` as acting on the factors of `on` (in the order `on`
    /// lists them) and as the identity on the rest of `into`.
    pub fn lift(u: &CMat, on: &Register, into: &Register) -> Result<LabeledOperator> {
        if !on.is_subset_of(into) {
            return Err(Error::NotASubRegister {
                sub: on.names(),
                sup: into.names(),
            });
        }
        if u.nrows() != on.total_dim() || u.ncols() != on.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: on.total_dim(),
                got: u.nrows(),
            });
        }
        let rest = into.difference(on);
        let ordered = on.union(&rest)?;
        let full = u.kronecker(&mx::identity(rest.total_dim()));
        LabeledOperator::new(ordered, full)
    }

    pub fn mul(&self, other: &LabeledOperator) -> Result<LabeledOperator> {
        self.same_register(other)?;
        Ok(LabeledOperator {
            register: self.register.clone(),
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn add(&self, other: &LabeledOperator) -> Result<LabeledOperator> {
        self.same_register(other)?;
        Ok(LabeledOperator {
            register: self.register.clone(),
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn sub(&self, other: &LabeledOperator) -> Result<LabeledOperator> {
        self.same_register(other)?;
        Ok(LabeledOperator {
            register: self.register.clone(),
            matrix: &self.matrix - &other.matrix,
        })
    }

    pub fn scale(&self, k: Complex64) -> LabeledOperator {
        LabeledOperator {
            register: self.register.clone(),
            matrix: self.matrix.map(|x| x * k),
        }
    }

    pub fn scale_re(&self, k: f64) -> LabeledOperator {
        self.scale(mx::cr(k))
    }

    pub fn adjoint(&self) -> LabeledOperator {
        LabeledOperator {
            register: self.register.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        mx::trace(&self.matrix)
    }

    /// Conjugation `b * self * b^dagger` where `b` acts on a sub-register.
    pub fn conjugated_by(&self, b: &CMat, on: &Register) -> Result<LabeledOperator> {
        let lifted = LabeledOperator::lift(b, on, &self.register)?;
        Ok(LabeledOperator {
            register: self.register.clone(),
            matrix: &lifted.matrix * &self.matrix * lifted.matrix.adjoint(),
        })
    }

    /// Trace out the variables of `out`; the result keeps the remaining
    /// factors. Tracing the empty register is the identity operation.
    pub fn partial_trace(&self, out: &Register) -> Result<LabeledOperator> {
        let traced = self.register.mask_of(out)?;
        let reduced = mx::partial_trace(&self.matrix, &self.register.dims(), &traced);
        Ok(LabeledOperator {
            register: self.register.difference(out),
            matrix: reduced,
        })
    }

    /// Contract a vector over sub-register `sub`:
    /// `(psi^dagger (x) id) self (psi (x) id)`, an operator over the rest.
    /// `psi` is indexed by `sub` in canonical order.
    pub fn sandwich_vector(&self, sub: &Register, psi: &CVec) -> Result<LabeledOperator> {
        let mask = self.register.mask_of(&sub.canonical())?;
        if psi.len() != sub.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: sub.total_dim(),
                got: psi.len(),
            });
        }
        let reduced = mx::sandwich_vector(&self.matrix, &self.register.dims(), &mask, psi);
        Ok(LabeledOperator {
            register: self.register.difference(sub),
            matrix: reduced,
        })
    }

    /// Rename variables through `f` (dims kept); the result is re-sorted into
    /// canonical order by exact entry relocation.
    pub fn renamed(&self, f: impl Fn(&str) -> String) -> Result<LabeledOperator> {
        let renamed = self.register.renamed(&f)?;
        LabeledOperator::new(renamed, self.matrix.clone())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        mx::hermiticity_defect(&self.matrix) <= tol
    }

    pub fn min_eigenvalue(&self) -> f64 {
        mx::min_eigenvalue(&self.matrix)
    }

    pub fn op_norm(&self) -> f64 {
        mx::op_norm_hermitian(&self.matrix)
    }

    pub fn frob_distance(&self, other: &LabeledOperator) -> Result<f64> {
        self.same_register(other)?;
        Ok((&self.matrix - &other.matrix).norm())
    }

    pub fn approx_eq(&self, other: &LabeledOperator, tol: f64) -> bool {
        self.register == other.register && (&self.matrix - &other.matrix).norm() <= tol
    }
}

/// Loewner order check: `a <= b` iff the minimum eigenvalue of `b - a` is
/// at least `-tol`. Both operands must be Hermitian over the same register.
pub fn loewner_leq(a: &LabeledOperator, b: &LabeledOperator, tol: f64) -> Result<bool> {
    if a.register != b.register {
        return Err(Error::RegisterMismatch(
            a.register.names(),
            b.register.names(),
        ));
    }
    let herm_tol = 1e-8 * (1.0 + a.op_norm().max(b.op_norm()));
    for op in [a, b] {
        let defect = mx::hermiticity_defect(&op.matrix);
        if defect > herm_tol {
            return Err(Error::NotHermitian(defect));
        }
    }
    Ok(mx::min_eigenvalue(&(&b.matrix - &a.matrix)) >= -tol)
}

/// Index permutation that exchanges the paired variables of `x1` and `x2`
/// inside `ambient` (pairing is by position; dims must match).
pub fn swap_map(ambient: &Register, x1: &Register, x2: &Register) -> Result<Vec<usize>> {
    if !x1.is_disjoint(x2) {
        return Err(Error::OverlappingVariables(
            x1.names()
                .into_iter()
                .find(|n| x2.contains(n))
                .unwrap_or_default(),
        ));
    }
    if x1.dims() != x2.dims() {
        return Err(Error::ProfileMismatch(x1.dims(), x2.dims()));
    }
    let canonical = ambient.canonical();
    for sub in [x1, x2] {
        if !sub.is_subset_of(&canonical) {
            return Err(Error::NotASubRegister {
                sub: sub.names(),
                sup: canonical.names(),
            });
        }
    }
    // position permutation on factors: exchange each pair, fix the rest
    let mut factor_perm: Vec<usize> = (0..canonical.len()).collect();
    for (a, b) in x1.vars().iter().zip(x2.vars().iter()) {
        let pa = canonical.position(&a.name).unwrap();
        let pb = canonical.position(&b.name).unwrap();
        factor_perm.swap(pa, pb);
    }
    Ok(mx::factor_permutation_map(&canonical.dims(), &factor_perm))
}

/// The unitary that swaps registers `x1` and `x2` as a labeled operator over
/// their union.
pub fn swap_operator(x1: &Register, x2: &Register) -> Result<LabeledOperator> {
    let joint = x1.union(x2)?.canonical();
    let map = swap_map(&joint, x1, x2)?;
    Ok(LabeledOperator {
        register: joint,
        matrix: mx::permutation_matrix(&map),
    })
}

/// The quantum-equality projector `(id + SWAP)/2` onto the SWAP-symmetric
/// subspace of the two register copies.
pub fn equality_projector(x1: &Register, x2: &Register) -> Result<LabeledOperator> {
    let swap = swap_operator(x1, x2)?;
    let id = LabeledOperator::identity(swap.register());
    Ok(swap.add(&id)?.scale_re(0.5))
}

/// True iff `u^dagger u = id` within `tol` (Frobenius defect).
pub fn check_isometry(u: &CMat, tol: f64) -> bool {
    if u.nrows() < u.ncols() {
        return false;
    }
    let gram = u.adjoint() * u;
    (gram - mx::identity(u.ncols())).norm() <= tol
}

/// A binary measurement given by its Kraus operators.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryMeasurement {
    pub register: Register,
    pub m_true: CMat,
    pub m_false: CMat,
}

impl BinaryMeasurement {
    /// Kraus matrices are indexed by `register` in the order given and are
    /// stored canonicalized, like every other labeled value.
    pub fn new(register: Register, m_true: CMat, m_false: CMat) -> Result<Self> {
        let t = LabeledOperator::new(register.clone(), m_true)?;
        let f = LabeledOperator::new(register, m_false)?;
        Ok(BinaryMeasurement {
            register: t.register,
            m_true: t.matrix,
            m_false: f.matrix,
        })
    }

    /// Desugar a single projector `P` into the pair `{P, id - P}`.
    pub fn from_projector(register: Register, p: CMat) -> Result<Self> {
        let id = mx::identity(register.total_dim());
        let complement = &id - &p;
        BinaryMeasurement::new(register, p, complement)
    }

    pub fn kraus(&self, outcome: bool) -> &CMat {
        if outcome {
            &self.m_true
        } else {
            &self.m_false
        }
    }

    /// Completeness defect `|m_true^dag m_true + m_false^dag m_false - id|`.
    pub fn kraus_defect(&self) -> f64 {
        let sum = self.m_true.adjoint() * &self.m_true + self.m_false.adjoint() * &self.m_false;
        (sum - mx::identity(self.m_true.nrows())).norm()
    }
}

/// True iff the measurement's Kraus operators are complete within `tol`.
pub fn check_kraus_pair(m: &BinaryMeasurement, tol: f64) -> bool {
    m.kraus_defect() <= tol
}

/// A mixed state (density operator) over a register. The trace is not forced
/// to 1: program semantics produce sub-normalized branches.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    register: Register,
    matrix: CMat,
}

impl DensityOperator {
    pub fn new(register: Register, matrix: CMat) -> Result<Self> {
        let op = LabeledOperator::new(register, matrix)?;
        Ok(DensityOperator {
            register: op.register,
            matrix: op.matrix,
        })
    }

    pub fn from_pure(psi: &PureState) -> Self {
        DensityOperator {
            register: psi.register.clone(),
            matrix: mx::projector(&psi.vector),
        }
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        mx::trace(&self.matrix).re
    }

    pub fn as_operator(&self) -> LabeledOperator {
        LabeledOperator {
            register: self.register.clone(),
            matrix: self.matrix.clone(),
        }
    }

    pub fn from_operator(op: LabeledOperator) -> Self {
        DensityOperator {
            register: op.register,
            matrix: op.matrix,
        }
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        Ok(DensityOperator::from_operator(
            self.as_operator().tensor(&other.as_operator())?,
        ))
    }

    /// Trace out `out`; trace-preserving and linear.
    pub fn partial_trace(&self, out: &Register) -> Result<DensityOperator> {
        Ok(DensityOperator::from_operator(
            self.as_operator().partial_trace(out)?,
        ))
    }

    /// Check the density-operator invariants at the given tolerances.
    pub fn validate(&self, tols: &Tolerances, require_normalized: bool) -> Result<()> {
        let defect = mx::hermiticity_defect(&self.matrix);
        if defect > tols.herm {
            return Err(Error::NotHermitian(defect));
        }
        let min = mx::min_eigenvalue(&self.matrix);
        if min < -tols.psd {
            return Err(Error::NotPositive(min));
        }
        let tr = self.trace();
        if tr < -tols.norm || (require_normalized && (tr - 1.0).abs() > tols.norm) {
            return Err(Error::NotNormalized(tr));
        }
        Ok(())
    }
}

/// A vector state over a register (not necessarily normalized).
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    register: Register,
    vector: CVec,
}

impl PureState {
    pub fn new(register: Register, vector: CVec) -> Result<Self> {
        let dim = register.total_dim();
        if vector.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: vector.len(),
            });
        }
        if register.is_canonical() {
            return Ok(PureState { register, vector });
        }
        let canonical = register.canonical();
        let perm = register.permutation_to(&canonical)?;
        let map = mx::factor_permutation_map(&register.dims(), &perm);
        Ok(PureState {
            register: canonical,
            vector: mx::permute_vector(&vector, &map),
        })
    }

    /// Basis state `|k>` over the register.
    pub fn basis(register: &Register, k: usize) -> Self {
        let mut v = CVec::zeros(register.total_dim());
        v[k] = mx::cr(1.0);
        PureState {
            register: register.canonical(),
            vector: v,
        }
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    pub fn vector(&self) -> &CVec {
        &self.vector
    }

    pub fn norm(&self) -> f64 {
        self.vector.norm()
    }

    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > tol {
            return Err(Error::NotNormalized(n));
        }
        Ok(())
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let combined = self.register.union(&other.register)?;
        PureState::new(combined, self.vector.kronecker(&other.vector))
    }

    pub fn renamed(&self, f: impl Fn(&str) -> String) -> Result<PureState> {
        PureState::new(self.register.renamed(&f)?, self.vector.clone())
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator::from_pure(self)
    }
}

/// One weighted product term of a separable ensemble.
#[derive(Clone, Debug)]
pub struct Term {
    pub weight: f64,
    pub left: DensityOperator,
    pub right: DensityOperator,
}

/// An explicit separable state: a list of weighted product terms
/// `sum_j p_j * left_j (x) right_j` with all lefts over one register and all
/// rights over another. This is the only representation of separable
/// couplings the library manipulates; separability of opaque matrices is
/// never decided.
#[derive(Clone, Debug)]
pub struct SeparableEnsemble {
    left_register: Register,
    right_register: Register,
    terms: Vec<Term>,
}

/// Terms with weight (times factor traces) below this fraction of the total
/// are dropped when ensembles are assembled.
pub const ENSEMBLE_PRUNE_EPS: f64 = 1e-14;

impl SeparableEnsemble {
    pub fn empty(left_register: Register, right_register: Register) -> Self {
        SeparableEnsemble {
            left_register: left_register.canonical(),
            right_register: right_register.canonical(),
            terms: Vec::new(),
        }
    }

    pub fn push(&mut self, weight: f64, left: DensityOperator, right: DensityOperator) {
        debug_assert!(weight >= 0.0);
        debug_assert_eq!(left.register(), &self.left_register);
        debug_assert_eq!(right.register(), &self.right_register);
        if weight * left.trace().abs() * right.trace().abs() <= ENSEMBLE_PRUNE_EPS {
            return;
        }
        self.terms.push(Term {
            weight,
            left,
            right,
        });
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn left_register(&self) -> &Register {
        &self.left_register
    }

    pub fn right_register(&self) -> &Register {
        &self.right_register
    }

    /// Absorb all terms of `other`, rescaled by `weight`.
    pub fn absorb(&mut self, weight: f64, other: SeparableEnsemble) {
        for t in other.terms {
            self.push(weight * t.weight, t.left, t.right);
        }
    }

    /// `sum_j p_j tr(right_j) left_j`
    pub fn left_marginal(&self) -> DensityOperator {
        let dim = self.left_register.total_dim();
        let mut acc = mx::zeros(dim);
        for t in &self.terms {
            let w = mx::cr(t.weight * t.right.trace());
            acc += t.left.matrix().map(|x| x * w);
        }
        DensityOperator {
            register: self.left_register.clone(),
            matrix: acc,
        }
    }

    /// `sum_j p_j tr(left_j) right_j`
    pub fn right_marginal(&self) -> DensityOperator {
        let dim = self.right_register.total_dim();
        let mut acc = mx::zeros(dim);
        for t in &self.terms {
            let w = mx::cr(t.weight * t.left.trace());
            acc += t.right.matrix().map(|x| x * w);
        }
        DensityOperator {
            register: self.right_register.clone(),
            matrix: acc,
        }
    }

    /// `sum_j p_j tr(left_j) tr(right_j)`
    pub fn total_trace(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.weight * t.left.trace() * t.right.trace())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mx::{c, cr};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_psd(dim: usize, rng: &mut ChaCha8Rng) -> CMat {
        let g = CMat::from_fn(dim, dim, |_, _| {
            c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        g.adjoint() * g
    }

    fn qubit(name: &str) -> Register {
        Register::of(&[(name, 2)]).unwrap()
    }

    #[test]
    fn tensor_trace_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a = LabeledOperator::new(qubit("x"), random_psd(2, &mut rng)).unwrap();
            let b = LabeledOperator::new(qubit("y"), random_psd(2, &mut rng)).unwrap();
            let t = a.tensor(&b).unwrap();
            assert!((t.trace() - a.trace() * b.trace()).norm() < 1e-12);
        }
    }

    #[test]
    fn tensor_identity_case() {
        let ix = LabeledOperator::identity(&qubit("x"));
        let iy = LabeledOperator::identity(&qubit("y"));
        let t = ix.tensor(&iy).unwrap();
        assert_eq!(t.matrix(), &mx::identity(4));
        assert_eq!(t.register().names(), vec!["x", "y"]);
    }

    #[test]
    fn tensor_is_order_insensitive_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = LabeledOperator::new(qubit("x"), random_psd(2, &mut rng)).unwrap();
        let b = LabeledOperator::new(Register::of(&[("y", 3)]).unwrap(), random_psd(3, &mut rng))
            .unwrap();
        let ab = a.tensor(&b).unwrap();
        let ba = b.tensor(&a).unwrap();
        assert_eq!(ab.matrix(), ba.matrix());
        assert_eq!(ab.register(), ba.register());
    }

    #[test]
    fn tensor_basis_states() {
        let x0 = PureState::basis(&qubit("x"), 0);
        let y1 = PureState::basis(&qubit("y"), 1);
        let t = x0.tensor(&y1).unwrap();
        assert_eq!(t.vector()[1], cr(1.0));
        assert_eq!(t.vector().iter().filter(|v| v.norm() > 0.0).count(), 1);
    }

    #[test]
    fn tensor_rejects_overlap() {
        let a = LabeledOperator::identity(&qubit("x"));
        assert!(matches!(
            a.tensor(&a),
            Err(Error::OverlappingVariables(_))
        ));
    }

    fn hadamard() -> CMat {
        let s = cr(1.0 / 2.0f64.sqrt());
        CMat::from_row_slice(2, 2, &[s, s, s, -s])
    }

    #[test]
    fn lift_product_action() {
        let xy = Register::of(&[("x", 2), ("y", 2)]).unwrap();
        let h = LabeledOperator::lift(&hadamard(), &qubit("x"), &xy).unwrap();
        let x0 = PureState::basis(&qubit("x"), 0);
        let y1 = PureState::basis(&qubit("y"), 1);
        let input = x0.tensor(&y1).unwrap();
        let got = h.matrix() * input.vector();
        let hx0 = hadamard() * x0.vector();
        let want = PureState::new(qubit("x"), hx0)
            .unwrap()
            .tensor(&y1)
            .unwrap();
        assert!((got - want.vector()).norm() < 1e-12);
    }

    #[test]
    fn lift_identity_case() {
        let xy = Register::of(&[("x", 2), ("y", 2)]).unwrap();
        let i = LabeledOperator::lift(&mx::identity(2), &qubit("x"), &xy).unwrap();
        assert_eq!(i.matrix(), &mx::identity(4));
    }

    #[test]
    fn lift_cnot_truth_table() {
        // CNOT|x,y> = |x, x xor y> with control listed first
        let cnot = CMat::from_row_slice(
            4,
            4,
            &[
                cr(1.0),
                cr(0.0),
                cr(0.0),
                cr(0.0),
                cr(0.0),
                cr(1.0),
                cr(0.0),
                cr(0.0),
                cr(0.0),
                cr(0.0),
                cr(0.0),
                cr(1.0),
                cr(0.0),
                cr(0.0),
                cr(1.0),
                cr(0.0),
            ],
        );
        let xy = Register::of(&[("x", 2), ("y", 2)]).unwrap();
        let lifted = LabeledOperator::lift(&cnot, &xy, &xy).unwrap();
        for x in 0..2usize {
            for y in 0..2usize {
                let input = PureState::basis(&xy, 2 * x + y);
                let out = lifted.matrix() * input.vector();
                let want = PureState::basis(&xy, 2 * x + (x ^ y));
                assert!((out - want.vector()).norm() < 1e-12, "x={x} y={y}");
            }
        }
    }

    #[test]
    fn lift_respects_composition_and_commutes_on_disjoint_supports() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xy = Register::of(&[("x", 2), ("y", 3)]).unwrap();
        let u = random_psd(2, &mut rng);
        let v = random_psd(2, &mut rng);
        let w = random_psd(3, &mut rng);
        let lu = LabeledOperator::lift(&u, &qubit("x"), &xy).unwrap();
        let lv = LabeledOperator::lift(&v, &qubit("x"), &xy).unwrap();
        let luv = LabeledOperator::lift(&(&u * &v), &qubit("x"), &xy).unwrap();
        assert!(lu.mul(&lv).unwrap().approx_eq(&luv, 1e-10));
        let lw = LabeledOperator::lift(&w, &Register::of(&[("y", 3)]).unwrap(), &xy).unwrap();
        let ab = lu.mul(&lw).unwrap();
        let ba = lw.mul(&lu).unwrap();
        assert!(ab.approx_eq(&ba, 1e-10));
    }

    #[test]
    fn partial_trace_of_labeled_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = LabeledOperator::new(qubit("x"), random_psd(2, &mut rng)).unwrap();
        let b = LabeledOperator::new(qubit("y"), random_psd(2, &mut rng)).unwrap();
        let t = a.tensor(&b).unwrap();
        let reduced = t.partial_trace(&qubit("y")).unwrap();
        let want = a.scale(b.trace());
        assert!(reduced.approx_eq(&want, 1e-10));
        // empty trace is the identity operation
        let same = t.partial_trace(&Register::empty()).unwrap();
        assert!(same.approx_eq(&t, 0.0));
    }

    #[test]
    fn equality_projector_properties() {
        let y1 = qubit("y1");
        let y2 = qubit("y2");
        let eq = equality_projector(&y1, &y2).unwrap();
        let swap = swap_operator(&y1, &y2).unwrap();
        // SWAP^2 = id, eq^2 = eq = eq^dagger, eq*SWAP = eq
        let id = LabeledOperator::identity(eq.register());
        assert!(swap.mul(&swap).unwrap().approx_eq(&id, 1e-12));
        assert!(eq.mul(&eq).unwrap().approx_eq(&eq, 1e-12));
        assert!(eq.adjoint().approx_eq(&eq, 1e-12));
        assert!(eq.mul(&swap).unwrap().approx_eq(&eq, 1e-12));
        // trace = (d^2 + d)/2 = 3 for qubits
        assert!((eq.trace().re - 3.0).abs() < 1e-12);
        // <01| eq |01> = 1/2
        let b01 = PureState::basis(eq.register(), 1);
        let val = (b01.vector().adjoint() * eq.matrix() * b01.vector())[(0, 0)];
        assert!((val.re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn equality_projector_fixes_symmetric_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let y1 = qubit("y1");
        let y2 = qubit("y2");
        let eq = equality_projector(&y1, &y2).unwrap();
        for _ in 0..10 {
            let raw = CVec::from_fn(2, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
            let phi = &raw / cr(raw.norm());
            let p1 = PureState::new(y1.clone(), phi.clone()).unwrap();
            let p2 = PureState::new(y2.clone(), phi.clone()).unwrap();
            let prod = p1.tensor(&p2).unwrap();
            let out = eq.matrix() * prod.vector();
            assert!((out - prod.vector()).norm() < 1e-12);
        }
    }

    #[test]
    fn loewner_order_basics() {
        let y = qubit("y");
        let zero = LabeledOperator::zero(&y);
        let id = LabeledOperator::identity(&y);
        let half = id.scale_re(0.5);
        let psi = PureState::basis(&y, 0);
        let proj = LabeledOperator::new(y.clone(), mx::projector(psi.vector())).unwrap();
        assert!(loewner_leq(&zero, &proj, 1e-12).unwrap());
        assert!(!loewner_leq(&id, &half, 1e-12).unwrap());
        // reflexive, and a preorder under tolerance accumulation
        assert!(loewner_leq(&proj, &proj, 1e-12).unwrap());
    }

    #[test]
    fn kraus_and_isometry_checks() {
        let y = qubit("y");
        let p = mx::projector(PureState::basis(&y, 0).vector());
        let meas = BinaryMeasurement::from_projector(y.clone(), p).unwrap();
        assert!(check_kraus_pair(&meas, 1e-12));
        let bad = BinaryMeasurement::new(y.clone(), mx::identity(2), mx::identity(2)).unwrap();
        assert!(!check_kraus_pair(&bad, 1e-9));

        assert!(check_isometry(&hadamard(), 1e-12));
        let theta: f64 = 0.73;
        let rot = CMat::from_row_slice(
            2,
            2,
            &[
                cr(theta.cos()),
                cr(-theta.sin()),
                cr(theta.sin()),
                cr(theta.cos()),
            ],
        );
        assert!(check_isometry(&rot, 1e-12));
        let diag = CMat::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(0.5)]);
        assert!(!check_isometry(&diag, 1e-9));
    }

    #[test]
    fn truncated_counter_guard_is_projective() {
        // {P_<n, id - P_<n} on a counter of dim n+1
        let n = 4usize;
        let reg = Register::of(&[("x", n + 1)]).unwrap();
        let mut p = mx::zeros(n + 1);
        for i in 0..n {
            p[(i, i)] = cr(1.0);
        }
        let meas = BinaryMeasurement::from_projector(reg, p).unwrap();
        assert!(check_kraus_pair(&meas, 1e-12));
    }

    #[test]
    fn ensemble_marginals() {
        let x = qubit("x");
        let y = qubit("y");
        let mut ens = SeparableEnsemble::empty(x.clone(), y.clone());
        ens.push(
            0.5,
            PureState::basis(&x, 0).density(),
            PureState::basis(&y, 1).density(),
        );
        ens.push(
            0.5,
            PureState::basis(&x, 1).density(),
            PureState::basis(&y, 0).density(),
        );
        assert!((ens.total_trace() - 1.0).abs() < 1e-12);
        let lm = ens.left_marginal();
        assert!((lm.matrix() - mx::identity(2).map(|v| v * cr(0.5))).norm() < 1e-12);
    }
}
