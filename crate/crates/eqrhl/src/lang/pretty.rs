//! Printer for programs; output parses back to the same AST.

use num_complex::Complex64;

use super::Program;
use crate::linalg::matrix::CMat;
use crate::linalg::Register;

fn fmt_f(x: f64) -> String {
    format!("{x:?}")
}

pub(crate) fn fmt_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        fmt_f(z.re)
    } else if z.re == 0.0 {
        if z.im < 0.0 {
            format!("-{}i", fmt_f(-z.im))
        } else {
            format!("{}i", fmt_f(z.im))
        }
    } else if z.im < 0.0 {
        format!("{}-{}i", fmt_f(z.re), fmt_f(-z.im))
    } else {
        format!("{}+{}i", fmt_f(z.re), fmt_f(z.im))
    }
}

pub(crate) fn fmt_matrix(m: &CMat) -> String {
    let rows: Vec<String> = (0..m.nrows())
        .map(|i| {
            let cells: Vec<String> = (0..m.ncols()).map(|j| fmt_complex(m[(i, j)])).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("lit([{}])", rows.join(", "))
}

fn fmt_vars(reg: &Register) -> String {
    reg.names().join(", ")
}

fn indent(buf: &mut String, depth: usize) {
    for _ in 0..depth {
        buf.push_str("  ");
    }
}

fn emit(p: &Program, buf: &mut String, depth: usize) {
    match p {
        Program::Skip => {
            indent(buf, depth);
            buf.push_str("skip");
        }
        Program::Apply(op) => {
            indent(buf, depth);
            buf.push_str(&format!(
                "apply {} on {}",
                fmt_matrix(op.matrix()),
                fmt_vars(op.register())
            ));
        }
        Program::Init(state) => {
            indent(buf, depth);
            let cells: Vec<String> = state.vector().iter().map(|z| fmt_complex(*z)).collect();
            buf.push_str(&format!(
                "init {} := vec([{}])",
                fmt_vars(state.register()),
                cells.join(", ")
            ));
        }
        Program::If {
            meas,
            then_branch,
            else_branch,
        } => {
            indent(buf, depth);
            buf.push_str(&format!(
                "if meas({}, {}) on {} {{\n",
                fmt_matrix(&meas.m_true),
                fmt_matrix(&meas.m_false),
                fmt_vars(&meas.register)
            ));
            emit(then_branch, buf, depth + 1);
            buf.push('\n');
            indent(buf, depth);
            buf.push_str("} else {\n");
            emit(else_branch, buf, depth + 1);
            buf.push('\n');
            indent(buf, depth);
            buf.push('}');
        }
        Program::While { meas, body } => {
            indent(buf, depth);
            buf.push_str(&format!(
                "while meas({}, {}) on {} {{\n",
                fmt_matrix(&meas.m_true),
                fmt_matrix(&meas.m_false),
                fmt_vars(&meas.register)
            ));
            emit(body, buf, depth + 1);
            buf.push('\n');
            indent(buf, depth);
            buf.push('}');
        }
        Program::Seq(items) => {
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    buf.push_str(";\n");
                }
                emit(item, buf, depth);
            }
        }
    }
}

/// Render a program as DSL text; `parse(pretty(p)) == p`.
pub fn pretty(p: &Program) -> String {
    let mut buf = String::new();
    emit(p, &mut buf, 0);
    buf.push('\n');
    buf
}
