//! Satisfiability of constraint networks over the reals.
//!
//! Two back ends: an exact rational simplex for networks whose constraints
//! are all affine, and an interval branch-and-prune solver for everything
//! else. Verdicts from the nonlinear path are approximate ("unknown" on
//! budget exhaustion); "infeasible" is only reported when propagation empties
//! the whole search space, which is a proof.

mod interval;
mod simplex;

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

pub use crate::pddl::CmpOp;

pub type VarId = usize;

pub const DEFAULT_DOMAIN: f64 = 1e9;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Expression tree over network variables.
#[derive(Debug, Clone, PartialEq)]
pub enum NumExpr {
    Const(BigRational),
    Var(VarId),
    Add(Box<NumExpr>, Box<NumExpr>),
    Sub(Box<NumExpr>, Box<NumExpr>),
    Mul(Box<NumExpr>, Box<NumExpr>),
    Div(Box<NumExpr>, Box<NumExpr>),
    Sqrt(Box<NumExpr>),
    Pow(Box<NumExpr>, Box<NumExpr>),
}

impl NumExpr {
    pub fn int(n: i64) -> Self {
        NumExpr::Const(BigRational::from_integer(n.into()))
    }

    pub fn vars(&self, out: &mut Vec<VarId>) {
        match self {
            NumExpr::Const(_) => {}
            NumExpr::Var(v) => out.push(*v),
            NumExpr::Add(a, b)
            | NumExpr::Sub(a, b)
            | NumExpr::Mul(a, b)
            | NumExpr::Div(a, b)
            | NumExpr::Pow(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            NumExpr::Sqrt(a) => a.vars(out),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub op: CmpOp,
    pub lhs: NumExpr,
    pub rhs: NumExpr,
    /// Human-readable provenance, carried through to diagnostics.
    pub label: String,
}

#[derive(Debug, Clone)]
pub struct VarDecl {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ConstraintNetwork {
    pub vars: Vec<VarDecl>,
    pub constraints: Vec<Constraint>,
    index: BTreeMap<String, VarId>,
}

impl ConstraintNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `name` if new and returns its id; repeated calls with the
    /// same name return the same id.
    pub fn var(&mut self, name: &str) -> VarId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.vars.len();
        self.vars.push(VarDecl {
            name: name.to_string(),
            lo: -DEFAULT_DOMAIN,
            hi: DEFAULT_DOMAIN,
        });
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    pub fn set_domain(&mut self, v: VarId, lo: f64, hi: f64) {
        self.vars[v].lo = lo;
        self.vars[v].hi = hi;
    }

    pub fn add(&mut self, op: CmpOp, lhs: NumExpr, rhs: NumExpr, label: impl Into<String>) {
        self.constraints.push(Constraint {
            op,
            lhs,
            rhs,
            label: label.into(),
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linearity {
    Linear,
    Nonlinear,
}

/// One solved value. Linear networks get exact rationals; the interval path
/// produces floats.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Exact(BigRational),
    Approx(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Value::Approx(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Value::Exact(r) => Some(r),
            Value::Approx(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NumericSolution {
    /// Indexed by `VarId`, total over the network's variables.
    pub values: Vec<Value>,
    pub max_residual: f64,
}

impl NumericSolution {
    pub fn get(&self, v: VarId) -> f64 {
        self.values[v].to_f64()
    }
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Sat(NumericSolution),
    /// Best-effort conflict: indices into `constraints` that together cannot
    /// be satisfied (empty when no core was isolated).
    Infeasible { core: Vec<usize> },
    Unknown,
}

impl Outcome {
    pub fn solution(&self) -> Option<&NumericSolution> {
        match self {
            Outcome::Sat(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveConfig {
    pub tol: f64,
    pub budget: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tol: DEFAULT_TOL,
            budget: DEFAULT_BUDGET,
        }
    }
}

/// Affine form const + Σ coeff·var, or `None` when the expression is not
/// affine in the variables.
pub(crate) fn affine(expr: &NumExpr, nvars: usize) -> Option<(Vec<BigRational>, BigRational)> {
    let zero = || vec![BigRational::zero(); nvars];
    match expr {
        NumExpr::Const(c) => Some((zero(), c.clone())),
        NumExpr::Var(v) => {
            let mut c = zero();
            c[*v] = BigRational::from_integer(1.into());
            Some((c, BigRational::zero()))
        }
        NumExpr::Add(a, b) => {
            let (ca, ka) = affine(a, nvars)?;
            let (cb, kb) = affine(b, nvars)?;
            Some((
                ca.into_iter().zip(cb).map(|(x, y)| x + y).collect(),
                ka + kb,
            ))
        }
        NumExpr::Sub(a, b) => {
            let (ca, ka) = affine(a, nvars)?;
            let (cb, kb) = affine(b, nvars)?;
            Some((
                ca.into_iter().zip(cb).map(|(x, y)| x - y).collect(),
                ka - kb,
            ))
        }
        NumExpr::Mul(a, b) => {
            let (ca, ka) = affine(a, nvars)?;
            let (cb, kb) = affine(b, nvars)?;
            if ca.iter().all(Zero::is_zero) {
                Some((cb.into_iter().map(|x| x * &ka).collect(), kb * &ka))
            } else if cb.iter().all(Zero::is_zero) {
                Some((ca.into_iter().map(|x| x * &kb).collect(), ka * &kb))
            } else {
                None
            }
        }
        NumExpr::Div(a, b) => {
            let (ca, ka) = affine(a, nvars)?;
            let (cb, kb) = affine(b, nvars)?;
            if cb.iter().all(Zero::is_zero) && !kb.is_zero() {
                Some((ca.into_iter().map(|x| x / &kb).collect(), ka / &kb))
            } else {
                None
            }
        }
        NumExpr::Sqrt(_) | NumExpr::Pow(_, _) => None,
    }
}

pub fn classify(net: &ConstraintNetwork) -> Linearity {
    let n = net.vars.len();
    for c in &net.constraints {
        if affine(&c.lhs, n).is_none() || affine(&c.rhs, n).is_none() {
            return Linearity::Nonlinear;
        }
    }
    Linearity::Linear
}

pub fn solve(net: &ConstraintNetwork, cfg: &SolveConfig) -> Outcome {
    match classify(net) {
        Linearity::Linear => solve_linear(net),
        Linearity::Nonlinear => solve_nonlinear(net, cfg.tol, cfg.budget),
    }
}

pub fn solve_linear(net: &ConstraintNetwork) -> Outcome {
    simplex::solve(net)
}

pub fn solve_nonlinear(net: &ConstraintNetwork, tol: f64, budget: u64) -> Outcome {
    interval::solve(net, tol, budget)
}

/// Exact evaluation where possible (`None` when a value is approximate or the
/// expression leaves the rationals).
fn eval_exact(expr: &NumExpr, values: &[Value]) -> Option<BigRational> {
    match expr {
        NumExpr::Const(c) => Some(c.clone()),
        NumExpr::Var(v) => values[*v].exact().cloned(),
        NumExpr::Add(a, b) => Some(eval_exact(a, values)? + eval_exact(b, values)?),
        NumExpr::Sub(a, b) => Some(eval_exact(a, values)? - eval_exact(b, values)?),
        NumExpr::Mul(a, b) => Some(eval_exact(a, values)? * eval_exact(b, values)?),
        NumExpr::Div(a, b) => {
            let d = eval_exact(b, values)?;
            if d.is_zero() {
                None
            } else {
                Some(eval_exact(a, values)? / d)
            }
        }
        NumExpr::Sqrt(_) | NumExpr::Pow(_, _) => None,
    }
}

pub fn eval_f64(expr: &NumExpr, values: &[Value]) -> f64 {
    match expr {
        NumExpr::Const(c) => c.to_f64().unwrap_or(f64::NAN),
        NumExpr::Var(v) => values[*v].to_f64(),
        NumExpr::Add(a, b) => eval_f64(a, values) + eval_f64(b, values),
        NumExpr::Sub(a, b) => eval_f64(a, values) - eval_f64(b, values),
        NumExpr::Mul(a, b) => eval_f64(a, values) * eval_f64(b, values),
        NumExpr::Div(a, b) => eval_f64(a, values) / eval_f64(b, values),
        NumExpr::Sqrt(a) => eval_f64(a, values).sqrt(),
        NumExpr::Pow(a, b) => eval_f64(a, values).powf(eval_f64(b, values)),
    }
}

/// How far one constraint is from holding at a point; 0 when satisfied.
pub fn residual(c: &Constraint, values: &[Value], tol: f64) -> f64 {
    if let (Some(l), Some(r)) = (eval_exact(&c.lhs, values), eval_exact(&c.rhs, values)) {
        let d = l - r;
        let sat = match c.op {
            CmpOp::Lt => d.is_negative(),
            CmpOp::Le => !d.is_positive(),
            CmpOp::Eq => d.is_zero(),
            CmpOp::Ne => !d.is_zero(),
            CmpOp::Ge => !d.is_negative(),
            CmpOp::Gt => d.is_positive(),
        };
        return if sat {
            0.0
        } else {
            d.abs().to_f64().unwrap_or(f64::INFINITY).max(f64::MIN_POSITIVE)
        };
    }
    let d = eval_f64(&c.lhs, values) - eval_f64(&c.rhs, values);
    if d.is_nan() {
        return f64::INFINITY;
    }
    match c.op {
        CmpOp::Lt | CmpOp::Le => d.max(0.0),
        CmpOp::Ge | CmpOp::Gt => (-d).max(0.0),
        CmpOp::Eq => d.abs(),
        // Floating-point inequation: require separation beyond tolerance.
        CmpOp::Ne => (tol - d.abs()).max(0.0),
    }
}

/// Worst constraint violation of `values` over the whole network.
pub fn check_solution(net: &ConstraintNetwork, values: &[Value], tol: f64) -> f64 {
    net.constraints
        .iter()
        .map(|c| residual(c, values, tol))
        .fold(0.0, f64::max)
}
