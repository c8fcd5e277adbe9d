//! Finite-dimensional complex linear algebra over named registers.
//!
//! A [`Register`] is an ordered list of named, finite-dimensional variables;
//! operators and states are always labeled by the register they act on.
//! Labeled values are stored with their tensor factors in canonical order
//! (sorted by variable name), which makes named tensor products insensitive
//! to the order they were written in: `a (x) b` and `b (x) a` produce the
//! same labeled operator.

pub mod matrix;
mod operator;

pub use matrix::{c, cr, CMat, CVec};
pub use operator::{
    check_isometry, check_kraus_pair, equality_projector, loewner_leq, swap_map, swap_operator,
    BinaryMeasurement, DensityOperator, LabeledOperator, PureState, SeparableEnsemble, Term,
};

use crate::error::{Error, Result};

/// Default numeric tolerances for well-formedness checks.
///
/// Double-precision dense algebra at the dimensions this library targets
/// keeps roundoff comfortably below 1e-9.
#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub herm: f64,
    pub psd: f64,
    pub kraus: f64,
    pub norm: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            herm: 1e-9,
            psd: 1e-9,
            kraus: 1e-9,
            norm: 1e-9,
        }
    }
}

/// A named variable with the dimension of its type (2 for a bit/qubit).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Variable {
    pub name: String,
    pub dim: usize,
}

impl Variable {
    pub fn new(name: impl Into<String>, dim: usize) -> Result<Self> {
        let name = name.into();
        if dim == 0 {
            return Err(Error::ZeroDimension(name));
        }
        Ok(Variable { name, dim })
    }
}

/// An ordered list of distinct variables; the quantum memory over it has
/// dimension equal to the product of the variable dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Register {
    vars: Vec<Variable>,
}

impl Register {
    pub fn new(vars: Vec<Variable>) -> Result<Self> {
        for (i, v) in vars.iter().enumerate() {
            if v.dim == 0 {
                return Err(Error::ZeroDimension(v.name.clone()));
            }
            if vars[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::DuplicateVariable(v.name.clone()));
            }
        }
        Ok(Register { vars })
    }

    /// Convenience constructor from `(name, dim)` pairs.
    pub fn of(pairs: &[(&str, usize)]) -> Result<Self> {
        Register::new(
            pairs
                .iter()
                .map(|(n, d)| Variable::new(*n, *d))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn empty() -> Self {
        Register { vars: Vec::new() }
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.vars.iter().map(|v| v.dim).product()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.vars.iter().map(|v| v.dim).collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.vars.iter().map(|v| v.name.clone()).collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.vars.iter().any(|v| v.name == name)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    /// True when every variable of `self` occurs in `other` with equal dim.
    pub fn is_subset_of(&self, other: &Register) -> bool {
        self.vars.iter().all(|v| {
            other
                .position(&v.name)
                .is_some_and(|p| other.vars[p].dim == v.dim)
        })
    }

    pub fn is_disjoint(&self, other: &Register) -> bool {
        self.vars.iter().all(|v| !other.contains(&v.name))
    }

    /// Concatenation; errors on a shared variable name.
    pub fn union(&self, other: &Register) -> Result<Register> {
        for v in &other.vars {
            if self.contains(&v.name) {
                return Err(Error::OverlappingVariables(v.name.clone()));
            }
        }
        let mut vars = self.vars.clone();
        vars.extend(other.vars.iter().cloned());
        Ok(Register { vars })
    }

    /// Variables of `self` not named in `other`, original order kept.
    pub fn difference(&self, other: &Register) -> Register {
        Register {
            vars: self
                .vars
                .iter()
                .filter(|v| !other.contains(&v.name))
                .cloned()
                .collect(),
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.vars.windows(2).all(|w| w[0].name < w[1].name)
    }

    /// The same variables sorted by name.
    pub fn canonical(&self) -> Register {
        let mut vars = self.vars.clone();
        vars.sort_by(|a, b| a.name.cmp(&b.name));
        Register { vars }
    }

    /// `perm[t]` = position in `self` of `target.vars[t]`; errors if the
    /// registers do not hold the same variables.
    pub fn permutation_to(&self, target: &Register) -> Result<Vec<usize>> {
        if self.len() != target.len() || !self.is_subset_of(target) {
            return Err(Error::RegisterMismatch(self.names(), target.names()));
        }
        Ok(target
            .vars
            .iter()
            .map(|v| self.position(&v.name).unwrap())
            .collect())
    }

    /// Mask over `self` marking variables that occur in `sub`.
    pub fn mask_of(&self, sub: &Register) -> Result<Vec<bool>> {
        if !sub.is_subset_of(self) {
            return Err(Error::NotASubRegister {
                sub: sub.names(),
                sup: self.names(),
            });
        }
        Ok(self.vars.iter().map(|v| sub.contains(&v.name)).collect())
    }

    /// Rename every variable through `f`, keeping order and dims.
    pub fn renamed(&self, f: impl Fn(&str) -> String) -> Result<Register> {
        Register::new(
            self.vars
                .iter()
                .map(|v| Variable::new(f(&v.name), v.dim))
                .collect::<Result<Vec<_>>>()?,
        )
    }
}
