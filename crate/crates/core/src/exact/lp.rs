//! LP-format export of the assignment MILP.
//!
//! Variables: continuous `b >= 0` and binaries `x_v{v}_i{i}` (vertex `v` at
//! position `i`). Rows:
//!
//! * `pos{i}`: one vertex per position,
//! * `vtx{v}`: one position per vertex,
//! * `bw_{u}_{v}` for every ordered pair `u != v`:
//!   `sum_i i x_u_i - sum_i i x_v_i - d_uv^6 b <= 0`, where `d_uv^6 = 1/u_uv`.
//!   Both orientations are written so together they bound `|pi(u) - pi(v)|`.
//! * `lb`: `b >= max u_uv` when the lower bound is enabled,
//! * `sym`: `sum_i i x_a_i <= ceil(n/2)` for the anchor when symmetry
//!   breaking is enabled.
//!
//! A zero interaction leaves its pair unconstrained; such pairs get the
//! trivial row `-b <= 0` so the row count stays fixed.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{ExactError, SolveConfig};
use crate::instance::InteractionMatrix;

const TERMS_PER_LINE: usize = 8;

/// Writes `terms` joined by signs, wrapping long rows onto continuation lines.
fn push_row(out: &mut String, name: &str, terms: &[(f64, String)], rhs: &str) {
    let _ = write!(out, " {name}:");
    for (k, (coef, var)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if *coef < 0.0 { '-' } else { '+' };
        let mag = coef.abs();
        if k == 0 && sign == '+' {
            out.push(' ');
        } else {
            let _ = write!(out, " {sign} ");
        }
        if mag != 1.0 {
            let _ = write!(out, "{mag} ");
        }
        out.push_str(var);
    }
    let _ = writeln!(out, " {rhs}");
}

fn x(v: usize, i: usize) -> String {
    format!("x_v{v}_i{i}")
}

/// The model as LP text.
pub fn lp_string(u: &InteractionMatrix, cfg: &SolveConfig) -> Result<String, ExactError> {
    let n = u.n();
    if n < 2 {
        return Err(ExactError::TooFewVertices(n));
    }
    cfg.validate(n)?;
    let mut out = String::new();
    let _ = writeln!(out, "\\ weighted bandwidth minimization, n = {n}");
    out.push_str("Minimize\n obj: b\nSubject To\n");

    for i in 1..=n {
        let terms: Vec<_> = (0..n).map(|v| (1.0, x(v, i))).collect();
        push_row(&mut out, &format!("pos{i}"), &terms, "= 1");
    }
    for v in 0..n {
        let terms: Vec<_> = (1..=n).map(|i| (1.0, x(v, i))).collect();
        push_row(&mut out, &format!("vtx{v}"), &terms, "= 1");
    }
    for a in 0..n {
        for c in 0..n {
            if a == c {
                continue;
            }
            let weight = u.get(a, c);
            let mut terms = Vec::with_capacity(2 * n + 1);
            if weight > 0.0 {
                terms.extend((1..=n).map(|i| (i as f64, x(a, i))));
                terms.extend((1..=n).map(|i| (-(i as f64), x(c, i))));
                terms.push((-(1.0 / weight), "b".to_owned()));
            } else {
                terms.push((-1.0, "b".to_owned()));
            }
            push_row(&mut out, &format!("bw_{a}_{c}"), &terms, "<= 0");
        }
    }
    if cfg.use_lower_bound {
        let bound = u.max_off_diagonal().expect("n >= 2");
        push_row(&mut out, "lb", &[(1.0, "b".to_owned())], &format!(">= {bound}"));
    }
    if cfg.use_symmetry_breaking {
        let anchor = cfg.anchor(u);
        let terms: Vec<_> = (1..=n).map(|i| (i as f64, x(anchor, i))).collect();
        push_row(&mut out, "sym", &terms, &format!("<= {}", n.div_ceil(2)));
    }

    out.push_str("Bounds\n b >= 0\nBinaries\n");
    for v in 0..n {
        let vars: Vec<_> = (1..=n).map(|i| x(v, i)).collect();
        let _ = writeln!(out, " {}", vars.join(" "));
    }
    out.push_str("End\n");
    Ok(out)
}

pub fn write_lp<W: Write>(
    u: &InteractionMatrix,
    cfg: &SolveConfig,
    mut w: W,
) -> Result<(), ExactError> {
    w.write_all(lp_string(u, cfg)?.as_bytes())?;
    Ok(())
}

pub fn export_lp(
    u: &InteractionMatrix,
    cfg: &SolveConfig,
    path: impl AsRef<Path>,
) -> Result<(), ExactError> {
    let text = lp_string(u, cfg)?;
    fs::write(path, text)?;
    Ok(())
}
