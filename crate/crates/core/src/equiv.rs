//! Linear and coordinate-shift (CS) equivalence with replayable witnesses.
//!
//! A witness is a list of steps applied left to right:
//! - `LeftLinear(M)`: `G_i = sum_j M[i][j] F_j`.
//! - `RightLinear(M)`: `G = F o sigma_M`, i.e. `x_j := sum_l M[j][l] x_l`.
//! - `CsShift(h)`: `G_i = F_i + h_i`, all coordinates at once.
//! - `Relabel(pi)`: variables renamed by `x_{pi(i)} := x_i` (1-based `pi`).
//!
//! A shift vector is accepted when either
//! - (a) with `k` the first shifted coordinate, `F_1..F_{k-1}` only use
//!   `x_1..x_{k-1}`, every later `F_j - x_j` only uses `x_1..x_{j-1}`, and each
//!   `h_i` only uses `x_1..x_{i-1}`; or
//! - (b) every variable `x_v` in `h_i` is pinned by an earlier coordinate
//!   `F_j = c x_v^e` with `c != 0` and `gcd(e, q - 1) = 1`.
//!
//! Both make the change of coordinates a triangular bijection on values.

use std::sync::Arc;

use serde_json::{json, Value};
use thiserror::Error;

use crate::gf::Field;
use crate::linalg::Matrix;
use crate::mpoly::{MultiPoly, PolyError, PolySystem};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EquivError {
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("shift on coordinate {coordinate} depends on variables it may not use")]
    IllegalShiftDependency { coordinate: usize },
    #[error("{0:?} is not a permutation of 1..n")]
    BadRelabel(Vec<usize>),
    #[error("witness step has {got} entries, system has {expected} coordinates")]
    Arity { expected: usize, got: usize },
    #[error("malformed witness: {0}")]
    Malformed(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EquivStep {
    LeftLinear(Matrix),
    RightLinear(Matrix),
    CsShift(Vec<MultiPoly>),
    Relabel(Vec<usize>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EquivWitness {
    pub steps: Vec<EquivStep>,
}

impl EquivWitness {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, step: EquivStep) {
        self.steps.push(step);
    }

    pub fn extend(&mut self, other: EquivWitness) {
        self.steps.extend(other.steps);
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn to_json(&self, field: &Field) -> Value {
        let mat = |m: &Matrix| -> Value {
            Value::Array(
                m.rows()
                    .iter()
                    .map(|r| Value::Array(r.iter().map(|&e| field.elem_json(e)).collect()))
                    .collect(),
            )
        };
        let steps = self
            .steps
            .iter()
            .map(|s| match s {
                EquivStep::LeftLinear(m) => json!({ "left_linear": mat(m) }),
                EquivStep::RightLinear(m) => json!({ "right_linear": mat(m) }),
                EquivStep::CsShift(h) => {
                    json!({ "cs_shift": Value::Array(h.iter().map(MultiPoly::to_json).collect()) })
                }
                EquivStep::Relabel(p) => json!({ "relabel": p }),
            })
            .collect();
        json!({ "steps": Value::Array(steps) })
    }

    pub fn from_json(field: &Arc<Field>, n: usize, v: &Value) -> Result<Self, EquivError> {
        let bad = |m: &str| EquivError::Malformed(m.to_string());
        let steps = v
            .get("steps")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("expected {\"steps\": [...]}"))?;
        let mat = |v: &Value| -> Result<Matrix, EquivError> {
            let rows = v.as_array().ok_or_else(|| bad("matrix must be a list of rows"))?;
            let rows = rows
                .iter()
                .map(|r| {
                    r.as_array()
                        .ok_or_else(|| bad("row must be a list"))?
                        .iter()
                        .map(|e| field.elem_from_json(e).map_err(|e| EquivError::Poly(e.into())))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            Matrix::from_rows(rows).ok_or_else(|| bad("matrix must be square"))
        };
        let mut out = EquivWitness::new();
        for s in steps {
            let obj = s.as_object().filter(|o| o.len() == 1).ok_or_else(|| bad("step must have one key"))?;
            let (k, body) = obj.iter().next().expect("one key");
            let step = match k.as_str() {
                "left_linear" => EquivStep::LeftLinear(mat(body)?),
                "right_linear" => EquivStep::RightLinear(mat(body)?),
                "cs_shift" => EquivStep::CsShift(
                    body.as_array()
                        .ok_or_else(|| bad("cs_shift must be a list"))?
                        .iter()
                        .map(|p| MultiPoly::from_json(field, n, p))
                        .collect::<Result<_, _>>()?,
                ),
                "relabel" => EquivStep::Relabel(
                    body.as_array()
                        .ok_or_else(|| bad("relabel must be a list"))?
                        .iter()
                        .map(|x| x.as_u64().map(|x| x as usize).ok_or_else(|| bad("bad index")))
                        .collect::<Result<_, _>>()?,
                ),
                other => return Err(bad(&format!("unknown step {other}"))),
            };
            out.push(step);
        }
        Ok(out)
    }
}

/// `rho o F o sigma`.
pub fn apply_linear(f: &PolySystem, rho: &Matrix, sigma: &Matrix) -> Result<PolySystem, EquivError> {
    let field = f.field();
    if !rho.is_invertible(field) || !sigma.is_invertible(field) {
        return Err(EquivError::SingularMatrix);
    }
    Ok(f.compose_linear(sigma)?.left_linear(rho)?)
}

fn check_shifts(f: &PolySystem, shifts: &[MultiPoly]) -> Result<(), EquivError> {
    if shifts.len() != f.n() {
        return Err(EquivError::Arity { expected: f.n(), got: shifts.len() });
    }
    for h in shifts {
        if h.field() != f.field() {
            return Err(PolyError::FieldMismatch.into());
        }
        if h.nvars() != f.n() {
            return Err(PolyError::ArityMismatch { expected: f.n(), got: h.nvars() }.into());
        }
    }
    Ok(())
}

fn only_vars_below(p: &MultiPoly, bound: usize) -> bool {
    p.variables().iter().all(|&v| v < bound)
}

fn rule_shape(f: &PolySystem, shifts: &[MultiPoly]) -> bool {
    let Some(k) = shifts.iter().position(|h| !h.is_zero()) else {
        return true;
    };
    let field = f.field();
    let n = f.n();
    f.polys().iter().enumerate().all(|(j, fj)| {
        if j < k {
            only_vars_below(fj, k)
        } else {
            let rest = fj.sub(&MultiPoly::var(field, n, j)).expect("same field");
            only_vars_below(&rest, j)
        }
    }) && shifts.iter().enumerate().all(|(i, h)| only_vars_below(h, i))
}

/// Variable pinned by `F_j = c x_v^e` with `gcd(e, q-1) = 1`.
fn pinned_var(fj: &MultiPoly) -> Option<usize> {
    let r = fj.reduce();
    if r.len() != 1 {
        return None;
    }
    let (e, _) = r.terms().next()?;
    let vars: Vec<usize> = (0..e.len()).filter(|&i| e[i] > 0).collect();
    let [v] = vars[..] else {
        return None;
    };
    let order = r.field().q() - 1;
    (gcd(e[v], order) == 1).then_some(v)
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn rule_pinned(f: &PolySystem, shifts: &[MultiPoly]) -> Result<(), usize> {
    let pins: Vec<Option<usize>> = f.polys().iter().map(pinned_var).collect();
    for (i, h) in shifts.iter().enumerate() {
        if h.is_zero() {
            continue;
        }
        let ok = h.variables().iter().all(|v| pins[..i].contains(&Some(*v)));
        if !ok {
            return Err(i);
        }
    }
    Ok(())
}

pub fn shift_is_legal(f: &PolySystem, shifts: &[MultiPoly]) -> bool {
    check_shifts(f, shifts).is_ok() && (rule_shape(f, shifts) || rule_pinned(f, shifts).is_ok())
}

/// `F + h`, coordinate by coordinate.
pub fn apply_cs_shift(f: &PolySystem, shifts: &[MultiPoly]) -> Result<PolySystem, EquivError> {
    check_shifts(f, shifts)?;
    if !rule_shape(f, shifts) {
        if let Err(i) = rule_pinned(f, shifts) {
            return Err(EquivError::IllegalShiftDependency { coordinate: i + 1 });
        }
    }
    let polys = f
        .polys()
        .iter()
        .zip(shifts)
        .map(|(p, h)| p.add(h))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PolySystem::new(polys)?)
}

/// Renames variables by `x_{pi(i)} := x_i`.
pub fn apply_relabel(f: &PolySystem, pi: &[usize]) -> Result<PolySystem, EquivError> {
    let n = f.n();
    let mut seen = vec![false; n];
    for &v in pi {
        if v == 0 || v > n || seen[v - 1] {
            return Err(EquivError::BadRelabel(pi.to_vec()));
        }
        seen[v - 1] = true;
    }
    if pi.len() != n {
        return Err(EquivError::BadRelabel(pi.to_vec()));
    }
    let field = f.field();
    let mut args = vec![MultiPoly::zero(field, n); n];
    for (i, &v) in pi.iter().enumerate() {
        args[v - 1] = MultiPoly::var(field, n, i);
    }
    let polys = f.polys().iter().map(|p| p.substitute(&args)).collect::<Result<Vec<_>, _>>()?;
    Ok(PolySystem::new(polys)?)
}

pub fn apply_step(f: &PolySystem, step: &EquivStep) -> Result<PolySystem, EquivError> {
    let field = f.field();
    match step {
        EquivStep::LeftLinear(m) => {
            if m.n() != f.n() {
                return Err(EquivError::Arity { expected: f.n(), got: m.n() });
            }
            if !m.is_invertible(field) {
                return Err(EquivError::SingularMatrix);
            }
            Ok(f.left_linear(m)?)
        }
        EquivStep::RightLinear(m) => {
            if m.n() != f.n() {
                return Err(EquivError::Arity { expected: f.n(), got: m.n() });
            }
            if !m.is_invertible(field) {
                return Err(EquivError::SingularMatrix);
            }
            Ok(f.compose_linear(m)?)
        }
        EquivStep::CsShift(h) => apply_cs_shift(f, h),
        EquivStep::Relabel(pi) => apply_relabel(f, pi),
    }
}

pub fn apply_witness(f: &PolySystem, w: &EquivWitness) -> Result<PolySystem, EquivError> {
    w.steps.iter().try_fold(f.reduce(), |acc, s| apply_step(&acc, s))
}

/// Replays `w` on `f` and compares with `g` after reduction.
pub fn verify_witness(f: &PolySystem, g: &PolySystem, w: &EquivWitness) -> bool {
    match apply_witness(f, w) {
        Ok(h) => h.reduce() == g.reduce(),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::{build_field, FieldElem};
    use crate::text::{parse_poly, parse_system};

    #[test]
    fn rho1_example() {
        // F1 = (a5 y, b4 x) with rho1(x, y) = (y/b4, x/a5) over F_5.
        let f5 = build_field(5, 1, None).unwrap();
        let (a5, b4) = (f5.from_int(2), f5.from_int(3));
        let f = parse_system(&f5, "(2y, 3x)").unwrap();
        let rho = Matrix::from_rows(vec![
            vec![FieldElem::ZERO, f5.inv(b4).unwrap()],
            vec![f5.inv(a5).unwrap(), FieldElem::ZERO],
        ])
        .unwrap();
        let g = apply_linear(&f, &rho, &Matrix::identity(2)).unwrap();
        assert_eq!(g, PolySystem::identity(&f5, 2));
        let sing = Matrix::zeros(2);
        assert_eq!(apply_linear(&f, &sing, &Matrix::identity(2)), Err(EquivError::SingularMatrix));
    }

    #[test]
    fn shift_examples() {
        let f5 = build_field(5, 1, None).unwrap();
        let f = parse_system(&f5, "(y, x)").unwrap();
        let zero = vec![MultiPoly::zero(&f5, 2); 2];
        assert_eq!(apply_cs_shift(&f, &zero).unwrap(), f);
        // b3/b4 = 2, b5/b4 = 3.
        let h = vec![MultiPoly::zero(&f5, 2), parse_poly(&f5, 2, "2y^2 + 3y").unwrap()];
        let g = apply_cs_shift(&f, &h).unwrap();
        assert_eq!(g, parse_system(&f5, "(y, x + 2y^2 + 3y)").unwrap());
        // x cannot be absorbed into the second coordinate of (y, x).
        let bad = vec![MultiPoly::zero(&f5, 2), parse_poly(&f5, 2, "x^2").unwrap()];
        assert_eq!(apply_cs_shift(&f, &bad), Err(EquivError::IllegalShiftDependency { coordinate: 2 }));
    }

    #[test]
    fn example_33_chain() {
        let f3 = build_field(3, 1, None).unwrap();
        let base = parse_system(&f3, "(x3, x1, x2)").unwrap();
        let h = vec![
            MultiPoly::zero(&f3, 3),
            parse_poly(&f3, 3, "x3^2").unwrap(),
            parse_poly(&f3, 3, "x1 x3").unwrap(),
        ];
        let g = apply_cs_shift(&base, &h).unwrap();
        assert_eq!(g, parse_system(&f3, "(x3, x1 + x3^2, x2 + x1 x3)").unwrap());

        let relabeled = apply_relabel(&g, &[3, 1, 2]).unwrap();
        assert_eq!(relabeled, parse_system(&f3, "(x1, x2 + x1^2, x3 + x1 x2)").unwrap());

        let mut w = EquivWitness::new();
        w.push(EquivStep::Relabel(vec![3, 1, 2]));
        w.push(EquivStep::CsShift(vec![
            MultiPoly::zero(&f3, 3),
            parse_poly(&f3, 3, "-x1^2").unwrap(),
            parse_poly(&f3, 3, "-x1 x2").unwrap(),
        ]));
        let id = PolySystem::identity(&f3, 3);
        assert!(verify_witness(&g, &id, &w));
        assert!(verify_witness(&id, &id, &EquivWitness::new()));

        let mut wrong = w.clone();
        wrong.steps.insert(0, EquivStep::LeftLinear(Matrix::diag(&[f3.from_int(2), FieldElem::ONE, FieldElem::ONE])));
        assert!(!verify_witness(&g, &id, &wrong));

        let v = w.to_json(&f3);
        assert_eq!(EquivWitness::from_json(&f3, 3, &v).unwrap(), w);
    }

    #[test]
    fn relabel_validation() {
        let f3 = build_field(3, 1, None).unwrap();
        let id = PolySystem::identity(&f3, 3);
        assert!(matches!(apply_relabel(&id, &[1, 1, 2]), Err(EquivError::BadRelabel(_))));
        assert!(matches!(apply_relabel(&id, &[1, 2]), Err(EquivError::BadRelabel(_))));
    }
}
