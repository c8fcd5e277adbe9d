//! The standard matrices the language's concrete syntax can name.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::matrix::{cr, projector, zeros, CMat, CVec};

/// `rot(theta)`: the 2x2 rotation by `theta`.
pub fn rot(theta: f64) -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[
            cr(theta.cos()),
            cr(-theta.sin()),
            cr(theta.sin()),
            cr(theta.cos()),
        ],
    )
}

/// `shift(m)`: the cyclic increment `|i> -> |i+1 mod m>` on dimension `m`.
pub fn shift(m: usize) -> CMat {
    let mut s = zeros(m);
    for i in 0..m {
        s[((i + 1) % m, i)] = cr(1.0);
    }
    s
}

/// `proj_lt(k)`: the diagonal projector onto basis states `|i>` with `i < k`.
pub fn proj_lt(k: usize, dim: usize) -> CMat {
    let mut p = zeros(dim);
    for i in 0..k.min(dim) {
        p[(i, i)] = cr(1.0);
    }
    p
}

/// `proj_state(v)`: the projector `v v^dagger / |v|^2`.
pub fn proj_state(v: &CVec) -> Result<CMat> {
    let n2 = v.norm_squared();
    if n2 == 0.0 {
        return Err(Error::NotNormalized(0.0));
    }
    Ok(projector(v).map(|x| x / cr(n2)))
}

/// Argument to [`builtin_matrix`].
#[derive(Clone, Debug, PartialEq)]
pub enum MatParam {
    Num(f64),
    Vector(Vec<Complex64>),
    Matrix(Vec<Vec<Complex64>>),
}

fn num(name: &str, params: &[MatParam], k: usize) -> Result<f64> {
    match params.get(k) {
        Some(MatParam::Num(x)) => Ok(*x),
        _ => Err(Error::SideCondition(format!(
            "builtin `{name}` expects a numeric argument at position {k}"
        ))),
    }
}

/// Resolve a named matrix builder. `dim_context` is the total dimension of
/// the register the matrix is applied to (used by `proj_lt`, and checked for
/// the others where the dimension is intrinsic).
pub fn builtin_matrix(name: &str, params: &[MatParam], dim_context: usize) -> Result<CMat> {
    match name {
        "rot" => {
            if params.len() != 1 {
                return Err(bad_arity(name, 1, params.len()));
            }
            Ok(rot(num(name, params, 0)?))
        }
        "shift" => {
            if params.len() != 1 {
                return Err(bad_arity(name, 1, params.len()));
            }
            let m = num(name, params, 0)? as usize;
            Ok(shift(m))
        }
        "proj_lt" => {
            if params.len() != 1 {
                return Err(bad_arity(name, 1, params.len()));
            }
            let k = num(name, params, 0)? as usize;
            Ok(proj_lt(k, dim_context))
        }
        "proj_state" => match params {
            [MatParam::Vector(v)] => proj_state(&CVec::from_vec(v.clone())),
            _ => Err(Error::SideCondition(format!(
                "builtin `proj_state` expects one vector argument, got {params:?}"
            ))),
        },
        "lit" => match params {
            [MatParam::Matrix(rows)] => {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(Error::SideCondition(
                        "matrix literal must be square".into(),
                    ));
                }
                Ok(CMat::from_fn(n, n, |i, j| rows[i][j]))
            }
            _ => Err(Error::SideCondition(format!(
                "builtin `lit` expects one matrix argument, got {params:?}"
            ))),
        },
        other => Err(Error::SideCondition(format!("unknown builtin `{other}`"))),
    }
}

fn bad_arity(name: &str, expected: usize, got: usize) -> Error {
    Error::SideCondition(format!(
        "builtin `{name}` expects {expected} argument(s), got {got}"
    ))
}
