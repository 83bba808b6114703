//! Interval branch-and-prune for nonlinear networks.
//!
//! Each box is narrowed by forward-backward propagation over the constraint
//! expression trees (hull consistency), then tested at its low corner and
//! midpoint; a box that can neither be accepted nor emptied is bisected on
//! its widest relative dimension, lower half first, so accepted assignments
//! prefer small values — in planning networks that keeps times early.
//!
//! "Infeasible" is returned only when every box is emptied by propagation,
//! which is a proof modulo outward rounding. Strict inequalities are
//! propagated with a margin of tol·10 since floating intervals cannot
//! witness strictness.

use num_traits::ToPrimitive;

use super::{
    eval_f64, residual, CmpOp, ConstraintNetwork, NumExpr, NumericSolution, Outcome, Value,
};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Iv {
    lo: f64,
    hi: f64,
}

const EMPTY: Iv = Iv {
    lo: f64::INFINITY,
    hi: f64::NEG_INFINITY,
};
const WHOLE: Iv = Iv {
    lo: f64::NEG_INFINITY,
    hi: f64::INFINITY,
};

impl Iv {
    fn new(lo: f64, hi: f64) -> Self {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            EMPTY
        } else {
            Iv { lo, hi }
        }
    }

    fn point(x: f64) -> Self {
        Iv::new(x, x)
    }

    fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    /// Outward rounding by one ulp on each finite endpoint; keeps every
    /// pruning step conservative.
    fn widen(self) -> Self {
        if self.is_empty() {
            return self;
        }
        let lo = if self.lo.is_finite() { self.lo.next_down() } else { self.lo };
        let hi = if self.hi.is_finite() { self.hi.next_up() } else { self.hi };
        Iv { lo, hi }
    }

    fn meet(self, o: Iv) -> Iv {
        Iv::new(self.lo.max(o.lo), self.hi.min(o.hi))
    }

    fn add(self, o: Iv) -> Iv {
        Iv::new(self.lo + o.lo, self.hi + o.hi).widen()
    }

    fn sub(self, o: Iv) -> Iv {
        Iv::new(self.lo - o.hi, self.hi - o.lo).widen()
    }

    fn mul(self, o: Iv) -> Iv {
        if self.is_empty() || o.is_empty() {
            return EMPTY;
        }
        let cands = [
            mul_ext(self.lo, o.lo),
            mul_ext(self.lo, o.hi),
            mul_ext(self.hi, o.lo),
            mul_ext(self.hi, o.hi),
        ];
        let lo = cands.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = cands.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Iv::new(lo, hi).widen()
    }

    /// Division as multiplication by the hull of 1/o; whole line when the
    /// divisor straddles zero (no pruning, still sound).
    fn div(self, o: Iv) -> Iv {
        if self.is_empty() || o.is_empty() {
            return EMPTY;
        }
        if o.lo <= 0.0 && o.hi >= 0.0 {
            if o.lo == 0.0 && o.hi == 0.0 {
                return EMPTY;
            }
            return WHOLE;
        }
        let inv = Iv::new(1.0 / o.hi, 1.0 / o.lo).widen();
        self.mul(inv)
    }

    fn sqrt(self) -> Iv {
        let s = self.meet(Iv::new(0.0, f64::INFINITY));
        if s.is_empty() {
            return EMPTY;
        }
        Iv::new(s.lo.sqrt(), s.hi.sqrt()).widen()
    }

    fn sq(self) -> Iv {
        if self.is_empty() {
            return EMPTY;
        }
        if self.lo >= 0.0 {
            Iv::new(self.lo * self.lo, self.hi * self.hi).widen()
        } else if self.hi <= 0.0 {
            Iv::new(self.hi * self.hi, self.lo * self.lo).widen()
        } else {
            Iv::new(0.0, (self.lo * self.lo).max(self.hi * self.hi)).widen()
        }
    }

    fn powi(self, k: i64) -> Iv {
        if self.is_empty() {
            return EMPTY;
        }
        match k {
            0 => Iv::point(1.0),
            1 => self,
            2 => self.sq(),
            _ if k > 0 && k % 2 == 0 => self.sq().powi(k / 2).meet(Iv::new(0.0, f64::INFINITY)),
            _ if k > 0 => {
                // Odd power: monotone.
                Iv::new(powi_f(self.lo, k), powi_f(self.hi, k)).widen()
            }
            _ => Iv::point(1.0).div(self.powi(-k)),
        }
    }

    fn width(&self) -> f64 {
        self.hi - self.lo
    }

    fn mid(&self) -> f64 {
        if !self.lo.is_finite() && !self.hi.is_finite() {
            0.0
        } else if !self.lo.is_finite() {
            self.hi
        } else if !self.hi.is_finite() {
            self.lo
        } else {
            0.5 * (self.lo + self.hi)
        }
    }
}

fn mul_ext(a: f64, b: f64) -> f64 {
    // IEEE gives inf·0 = NaN; interval convention says 0.
    if (a == 0.0 && b.is_infinite()) || (b == 0.0 && a.is_infinite()) {
        0.0
    } else {
        a * b
    }
}

fn powi_f(x: f64, k: i64) -> f64 {
    let mut r = 1.0;
    for _ in 0..k {
        r *= x;
    }
    r
}

fn const_int(e: &NumExpr) -> Option<i64> {
    match e {
        NumExpr::Const(c) if c.is_integer() => c.to_integer().to_i64(),
        _ => None,
    }
}

/// Forward interval evaluation of an expression over a box.
fn fwd(e: &NumExpr, bx: &[Iv]) -> Iv {
    match e {
        NumExpr::Const(c) => Iv::point(c.to_f64().unwrap_or(f64::NAN)).widen(),
        NumExpr::Var(v) => bx[*v],
        NumExpr::Add(a, b) => fwd(a, bx).add(fwd(b, bx)),
        NumExpr::Sub(a, b) => fwd(a, bx).sub(fwd(b, bx)),
        NumExpr::Mul(a, b) => fwd(a, bx).mul(fwd(b, bx)),
        NumExpr::Div(a, b) => fwd(a, bx).div(fwd(b, bx)),
        NumExpr::Sqrt(a) => fwd(a, bx).sqrt(),
        NumExpr::Pow(a, b) => match const_int(b) {
            Some(k) => fwd(a, bx).powi(k),
            None => WHOLE,
        },
    }
}

/// Backward (HC4) narrowing: shrink the box so `e` can still take a value in
/// `target`. Returns false when some variable domain empties.
fn bwd(e: &NumExpr, target: Iv, bx: &mut [Iv]) -> bool {
    if target.is_empty() {
        return false;
    }
    match e {
        NumExpr::Const(c) => {
            let v = Iv::point(c.to_f64().unwrap_or(f64::NAN)).widen();
            !v.meet(target).is_empty()
        }
        NumExpr::Var(v) => {
            bx[*v] = bx[*v].meet(target);
            !bx[*v].is_empty()
        }
        NumExpr::Add(a, b) => {
            let (ia, ib) = (fwd(a, bx), fwd(b, bx));
            bwd(a, ia.meet(target.sub(ib)), bx) && {
                let ia = fwd(a, bx);
                bwd(b, ib.meet(target.sub(ia)), bx)
            }
        }
        NumExpr::Sub(a, b) => {
            let (ia, ib) = (fwd(a, bx), fwd(b, bx));
            bwd(a, ia.meet(target.add(ib)), bx) && {
                let ia = fwd(a, bx);
                bwd(b, ib.meet(ia.sub(target)), bx)
            }
        }
        NumExpr::Mul(a, b) => {
            let (ia, ib) = (fwd(a, bx), fwd(b, bx));
            let na = ia.meet(target.div(ib));
            bwd(a, na, bx) && {
                let ia = fwd(a, bx);
                bwd(b, ib.meet(target.div(ia)), bx)
            }
        }
        NumExpr::Div(a, b) => {
            let (ia, ib) = (fwd(a, bx), fwd(b, bx));
            let na = ia.meet(target.mul(ib));
            bwd(a, na, bx) && {
                let ia = fwd(a, bx);
                bwd(b, ib.meet(ia.div(target)), bx)
            }
        }
        NumExpr::Sqrt(a) => {
            let t = target.meet(Iv::new(0.0, f64::INFINITY));
            if t.is_empty() {
                return false;
            }
            let ia = fwd(a, bx);
            bwd(a, ia.meet(t.sq()), bx)
        }
        NumExpr::Pow(a, b) => match const_int(b) {
            Some(k) if k > 0 && k % 2 == 1 => {
                let ia = fwd(a, bx);
                let root = Iv::new(rootn(target.lo, k), rootn(target.hi, k)).widen();
                bwd(a, ia.meet(root), bx)
            }
            Some(k) if k > 0 => {
                let t = target.meet(Iv::new(0.0, f64::INFINITY));
                if t.is_empty() {
                    return false;
                }
                let ia = fwd(a, bx);
                let m = rootn(t.hi, k);
                bwd(a, ia.meet(Iv::new(-m, m).widen()), bx)
            }
            _ => true, // no pruning through exotic exponents
        },
    }
}

fn rootn(x: f64, k: i64) -> f64 {
    if k % 2 == 1 {
        x.signum() * x.abs().powf(1.0 / k as f64)
    } else {
        x.max(0.0).powf(1.0 / k as f64)
    }
}

/// Target interval for `lhs − rhs` under the comparison (≠ is not propagated).
fn target_of(op: CmpOp, margin: f64) -> Option<Iv> {
    Some(match op {
        CmpOp::Lt => Iv::new(f64::NEG_INFINITY, -margin),
        CmpOp::Le => Iv::new(f64::NEG_INFINITY, 0.0),
        CmpOp::Eq => Iv::point(0.0),
        CmpOp::Ge => Iv::new(0.0, f64::INFINITY),
        CmpOp::Gt => Iv::new(margin, f64::INFINITY),
        CmpOp::Ne => return None,
    })
}

/// Propagates all constraints to a fixpoint (bounded rounds). Returns false
/// when the box is proven empty.
fn propagate(diffs: &[(NumExpr, Iv)], bx: &mut [Iv]) -> bool {
    for _ in 0..30 {
        let before = bx.to_vec();
        for (e, target) in diffs {
            if !bwd(e, *target, bx) {
                return false;
            }
        }
        let changed = bx.iter().zip(&before).any(|(a, b)| {
            (a.lo - b.lo).abs() > 1e-12 * (1.0 + b.lo.abs())
                || (a.hi - b.hi).abs() > 1e-12 * (1.0 + b.hi.abs())
        });
        if !changed {
            break;
        }
    }
    true
}

/// Deterministic xorshift64* generator for polish restarts.
struct Rng(u64);

impl Rng {
    fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in [0, 1).
    fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn eval_pt(e: &NumExpr, pt: &[f64]) -> f64 {
    match e {
        NumExpr::Const(c) => c.to_f64().unwrap_or(f64::NAN),
        NumExpr::Var(v) => pt[*v],
        NumExpr::Add(a, b) => eval_pt(a, pt) + eval_pt(b, pt),
        NumExpr::Sub(a, b) => eval_pt(a, pt) - eval_pt(b, pt),
        NumExpr::Mul(a, b) => eval_pt(a, pt) * eval_pt(b, pt),
        NumExpr::Div(a, b) => eval_pt(a, pt) / eval_pt(b, pt),
        NumExpr::Sqrt(a) => eval_pt(a, pt).sqrt(),
        NumExpr::Pow(a, b) => eval_pt(a, pt).powf(eval_pt(b, pt)),
    }
}

fn contains_var(e: &NumExpr, v: usize) -> bool {
    let mut vs = Vec::new();
    e.vars(&mut vs);
    vs.contains(&v)
}

/// Substitutes definitional variables by their defining expressions, bottoming
/// out at free variables. `count` guards against blowup.
fn expand(e: &NumExpr, defs: &[Option<NumExpr>], count: &mut usize) -> Option<NumExpr> {
    *count += 1;
    if *count > 50_000 {
        return None;
    }
    let bin = |a: &NumExpr, b: &NumExpr, count: &mut usize| -> Option<(Box<NumExpr>, Box<NumExpr>)> {
        Some((
            Box::new(expand(a, defs, count)?),
            Box::new(expand(b, defs, count)?),
        ))
    };
    Some(match e {
        NumExpr::Const(_) => e.clone(),
        NumExpr::Var(v) => match &defs[*v] {
            Some(d) => expand(d, defs, count)?,
            None => e.clone(),
        },
        NumExpr::Add(a, b) => {
            let (a, b) = bin(a, b, count)?;
            NumExpr::Add(a, b)
        }
        NumExpr::Sub(a, b) => {
            let (a, b) = bin(a, b, count)?;
            NumExpr::Sub(a, b)
        }
        NumExpr::Mul(a, b) => {
            let (a, b) = bin(a, b, count)?;
            NumExpr::Mul(a, b)
        }
        NumExpr::Div(a, b) => {
            let (a, b) = bin(a, b, count)?;
            NumExpr::Div(a, b)
        }
        NumExpr::Sqrt(a) => NumExpr::Sqrt(Box::new(expand(a, defs, count)?)),
        NumExpr::Pow(a, b) => {
            let (a, b) = bin(a, b, count)?;
            NumExpr::Pow(a, b)
        }
    })
}

/// Structure extracted from the network for point polishing. Planning
/// networks are mostly triangular: chains of definitional equalities
/// (`var == expr`) grounded in a handful of free variables (typically the
/// time points). Polishing samples the free variables, evaluates the
/// definitions exactly, and repairs the remaining constraints — goals,
/// durations, bounds — by projecting onto one free variable at a time
/// through the fully substituted expression.
struct PolishPlan {
    /// Defining expression per variable, if any.
    defs: Vec<Option<NumExpr>>,
    /// Evaluation order for defined variables (dependencies first).
    order: Vec<usize>,
    /// Non-definitional constraints: substituted difference expression,
    /// target interval for it, and the free variables it mentions.
    repair: Vec<(NumExpr, Iv, Vec<usize>)>,
}

impl PolishPlan {
    fn build(net: &ConstraintNetwork, margin: f64) -> Self {
        let n = net.vars.len();
        let mut defs: Vec<Option<NumExpr>> = vec![None; n];
        let mut def_cid: Vec<Option<usize>> = vec![None; n];
        for (ci, c) in net.constraints.iter().enumerate() {
            if c.op != CmpOp::Eq {
                continue;
            }
            let cand = match (&c.lhs, &c.rhs) {
                (NumExpr::Var(v), rhs) if !contains_var(rhs, *v) => Some((*v, rhs)),
                (lhs, NumExpr::Var(v)) if !contains_var(lhs, *v) => Some((*v, lhs)),
                _ => None,
            };
            if let Some((v, e)) = cand {
                if defs[v].is_none() {
                    defs[v] = Some(e.clone());
                    def_cid[v] = Some(ci);
                }
            }
        }
        // Break definition cycles: repeatedly drop a definition that cannot
        // be ordered. Kahn's algorithm over defined-variable dependencies.
        let order = loop {
            let mut indeg: Vec<usize> = vec![0; n];
            let mut users: Vec<Vec<usize>> = vec![Vec::new(); n];
            let mut defined: Vec<usize> = Vec::new();
            for v in 0..n {
                if let Some(d) = &defs[v] {
                    defined.push(v);
                    let mut vs = Vec::new();
                    d.vars(&mut vs);
                    vs.sort_unstable();
                    vs.dedup();
                    for u in vs {
                        if defs[u].is_some() {
                            indeg[v] += 1;
                            users[u].push(v);
                        }
                    }
                }
            }
            let mut queue: Vec<usize> = defined.iter().copied().filter(|&v| indeg[v] == 0).collect();
            let mut order = Vec::new();
            let mut qi = 0;
            while qi < queue.len() {
                let v = queue[qi];
                qi += 1;
                order.push(v);
                for &u in &users[v] {
                    indeg[u] -= 1;
                    if indeg[u] == 0 {
                        queue.push(u);
                    }
                }
            }
            if order.len() == defined.len() {
                break order;
            }
            // Some cycle remains: undefine the lowest-numbered stuck variable.
            let stuck = defined
                .iter()
                .copied()
                .find(|v| !order.contains(v))
                .expect("cycle implies a stuck variable");
            defs[stuck] = None;
            def_cid[stuck] = None;
        };
        let def_cids: std::collections::BTreeSet<usize> =
            def_cid.iter().flatten().copied().collect();
        let mut repair = Vec::new();
        for (ci, c) in net.constraints.iter().enumerate() {
            if def_cids.contains(&ci) {
                continue;
            }
            let Some(target) = target_of(c.op, margin) else {
                continue;
            };
            let diff = NumExpr::Sub(Box::new(c.lhs.clone()), Box::new(c.rhs.clone()));
            let mut count = 0;
            let e = expand(&diff, &defs, &mut count).unwrap_or(diff);
            let mut vs = Vec::new();
            e.vars(&mut vs);
            vs.sort_unstable();
            vs.dedup();
            repair.push((e, target, vs));
        }
        PolishPlan { defs, order, repair }
    }

    fn eval_defs(&self, pt: &mut [f64]) {
        for &v in &self.order {
            pt[v] = eval_pt(self.defs[v].as_ref().expect("ordered var is defined"), pt);
        }
    }
}

/// Projection polishing: sample the free variables, satisfy the definitional
/// chains exactly by substitution, then repair each remaining violated
/// constraint by solving it for one free variable (the backward operator on
/// an otherwise-degenerate box), clamping into the current box. The repaired
/// variable is rotated pseudo-randomly to break repair cycles.
fn polish(
    net: &ConstraintNetwork,
    plan: &PolishPlan,
    bx: &[Iv],
    tol: f64,
    start: &[f64],
    rng: &mut Rng,
) -> Option<(Vec<f64>, f64)> {
    let mut pt: Vec<f64> = start.to_vec();
    plan.eval_defs(&mut pt);
    for _ in 0..40 {
        let mut changed = false;
        for (e, target, vs) in &plan.repair {
            let val = eval_pt(e, &pt);
            if val >= target.lo - tol && val <= target.hi + tol {
                continue;
            }
            let off = if vs.len() > 1 {
                (rng.next_u64() as usize) % vs.len()
            } else {
                0
            };
            for k in 0..vs.len() {
                let v = vs[(off + k) % vs.len()];
                let mut tmp: Vec<Iv> = pt.iter().map(|&x| Iv::point(x).widen()).collect();
                tmp[v] = bx[v];
                if !bwd(e, *target, &mut tmp) || tmp[v].is_empty() {
                    continue;
                }
                let nv = pt[v].clamp(tmp[v].lo, tmp[v].hi);
                if nv.is_finite() && (nv - pt[v]).abs() > 0.0 {
                    pt[v] = nv;
                    plan.eval_defs(&mut pt);
                    changed = true;
                    break;
                }
            }
        }
        if let Some(worst) = accepts(net, &pt, tol) {
            return Some((pt, worst));
        }
        if !changed {
            return None;
        }
    }
    None
}

/// Polish from the box midpoint plus random interior samples at growing
/// scales: small magnitudes are tried first so feasible points with modest
/// values (well separated in time, numerically benign) win over far corners
/// of huge default domains.
fn polish_restarts(
    net: &ConstraintNetwork,
    plan: &PolishPlan,
    bx: &[Iv],
    tol: f64,
    rng: &mut Rng,
) -> Option<(Vec<f64>, f64)> {
    for r in 0..9usize {
        let start: Vec<f64> = bx
            .iter()
            .map(|iv| {
                let lo = iv.lo.max(-1e12);
                let hi = iv.hi.min(1e12);
                if r == 8 {
                    (lo + hi) / 2.0
                } else {
                    let span = (hi - lo).min(10f64.powi(r as i32 + 1));
                    lo + rng.unit() * span
                }
            })
            .collect();
        if let Some(found) = polish(net, plan, bx, tol, &start, rng) {
            return Some(found);
        }
    }
    None
}

fn accepts(net: &ConstraintNetwork, point: &[f64], tol: f64) -> Option<f64> {
    let values: Vec<Value> = point.iter().map(|&x| Value::Approx(x)).collect();
    let mut worst = 0.0f64;
    for c in &net.constraints {
        let r = residual(c, &values, tol);
        if r > tol {
            return None;
        }
        // Strict comparisons must actually separate.
        let d = eval_f64(&c.lhs, &values) - eval_f64(&c.rhs, &values);
        let ok = match c.op {
            CmpOp::Lt => d < 0.0,
            CmpOp::Gt => d > 0.0,
            CmpOp::Ne => d != 0.0,
            _ => true,
        };
        if !ok {
            return None;
        }
        worst = worst.max(r);
    }
    Some(worst)
}

pub fn solve(net: &ConstraintNetwork, tol: f64, budget: u64) -> Outcome {
    let margin = tol * 10.0;
    let diffs: Vec<(NumExpr, Iv)> = net
        .constraints
        .iter()
        .filter_map(|c| {
            target_of(c.op, margin).map(|t| {
                (
                    NumExpr::Sub(Box::new(c.lhs.clone()), Box::new(c.rhs.clone())),
                    t,
                )
            })
        })
        .collect();
    let polish_plan = PolishPlan::build(net, margin);
    let root: Vec<Iv> = net.vars.iter().map(|v| Iv::new(v.lo, v.hi)).collect();
    let mut stack = vec![root];
    let mut rng = Rng(0x9E37_79B9_7F4A_7C15);
    let mut nodes: u64 = 0;
    let mut exhausted = false;
    // Set when a box is abandoned without an emptiness proof; downgrades a
    // would-be "infeasible" verdict to "unknown".
    let mut dropped_unproven = false;

    while let Some(mut bx) = stack.pop() {
        nodes += 1;
        if nodes > budget {
            exhausted = true;
            break;
        }
        if !propagate(&diffs, &mut bx) {
            continue;
        }
        let low: Vec<f64> = bx.iter().map(|iv| iv.lo).collect();
        let mid: Vec<f64> = bx.iter().map(|iv| iv.mid()).collect();
        for point in [low, mid] {
            if let Some(worst) = accepts(net, &point, tol) {
                let values = point.into_iter().map(Value::Approx).collect();
                return Outcome::Sat(NumericSolution {
                    values,
                    max_residual: worst,
                });
            }
        }
        if nodes == 1 || nodes % 64 == 0 {
            if let Some((point, worst)) = polish_restarts(net, &polish_plan, &bx, tol, &mut rng) {
                let values = point.into_iter().map(Value::Approx).collect();
                return Outcome::Sat(NumericSolution {
                    values,
                    max_residual: worst,
                });
            }
        }
        // Bisect the widest dimension relative to magnitude.
        let (mut best, mut score) = (None, 0.0f64);
        for (i, iv) in bx.iter().enumerate() {
            let w = iv.width() / (1.0 + iv.mid().abs());
            if w > score {
                score = w;
                best = Some(i);
            }
        }
        let i = match best {
            Some(i) if score > tol * 1e-3 => i,
            // Box is (near-)degenerate and still rejected: give up on it.
            _ => {
                dropped_unproven = true;
                continue;
            }
        };
        let m = bx[i].mid();
        let mut lo_half = bx.clone();
        lo_half[i] = Iv::new(bx[i].lo, m);
        let mut hi_half = bx;
        hi_half[i] = Iv::new(m, hi_half[i].hi);
        stack.push(hi_half);
        stack.push(lo_half);
    }

    if exhausted || dropped_unproven {
        Outcome::Unknown
    } else {
        Outcome::Infeasible { core: Vec::new() }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{check_solution, solve_nonlinear, NumExpr, Outcome};
    use super::*;
    use crate::pddl::parser::parse_rational;

    fn c(s: &str) -> NumExpr {
        NumExpr::Const(parse_rational(s).unwrap())
    }

    fn v(id: usize) -> NumExpr {
        NumExpr::Var(id)
    }

    #[test]
    fn torricelli_velocity() {
        // x = sqrt(2·9.8·h), h = 5  ⇒  x = sqrt(98) ≈ 9.899494936...
        let mut net = ConstraintNetwork::new();
        let x = net.var("x");
        let h = net.var("h");
        net.set_domain(x, 0.0, 100.0);
        net.set_domain(h, 0.0, 100.0);
        net.add(
            CmpOp::Eq,
            v(x),
            NumExpr::Sqrt(Box::new(NumExpr::Mul(
                Box::new(NumExpr::Mul(Box::new(c("2")), Box::new(c("9.8")))),
                Box::new(v(h)),
            ))),
            "x=sqrt(2*9.8*h)",
        );
        net.add(CmpOp::Eq, v(h), c("5"), "h=5");
        let s = match solve_nonlinear(&net, 1e-6, 1_000_000) {
            Outcome::Sat(s) => s,
            o => panic!("expected sat, got {o:?}"),
        };
        assert!((s.get(x) - 98f64.sqrt()).abs() <= 1e-6);
        assert!(check_solution(&net, &s.values, 1e-6) <= 1e-6);
    }

    #[test]
    fn negative_square_is_infeasible() {
        let mut net = ConstraintNetwork::new();
        let x = net.var("x");
        net.add(
            CmpOp::Eq,
            NumExpr::Mul(Box::new(v(x)), Box::new(v(x))),
            c("-1"),
            "x*x=-1",
        );
        assert!(matches!(
            solve_nonlinear(&net, 1e-6, 100_000),
            Outcome::Infeasible { .. }
        ));
    }

    #[test]
    fn quadratic_system_picks_low_branch() {
        // x·y = 6, x + y = 5, x ≤ y, x ≥ 0  ⇒  x=2, y=3.
        let mut net = ConstraintNetwork::new();
        let x = net.var("x");
        let y = net.var("y");
        net.set_domain(x, -100.0, 100.0);
        net.set_domain(y, -100.0, 100.0);
        net.add(
            CmpOp::Eq,
            NumExpr::Mul(Box::new(v(x)), Box::new(v(y))),
            c("6"),
            "xy=6",
        );
        net.add(
            CmpOp::Eq,
            NumExpr::Add(Box::new(v(x)), Box::new(v(y))),
            c("5"),
            "x+y=5",
        );
        net.add(CmpOp::Le, v(x), v(y), "x<=y");
        net.add(CmpOp::Ge, v(x), c("0"), "x>=0");
        let s = match solve_nonlinear(&net, 1e-6, 1_000_000) {
            Outcome::Sat(s) => s,
            o => panic!("expected sat, got {o:?}"),
        };
        assert!((s.get(x) - 2.0).abs() < 1e-4, "x={}", s.get(x));
        assert!((s.get(y) - 3.0).abs() < 1e-4, "y={}", s.get(y));
    }

    #[test]
    fn pow_even_and_odd_backward() {
        // x^2 = 9 with x ≤ 0 ⇒ x = −3; y^3 = −8 ⇒ y = −2.
        let mut net = ConstraintNetwork::new();
        let x = net.var("x");
        let y = net.var("y");
        net.set_domain(x, -10.0, 10.0);
        net.set_domain(y, -10.0, 10.0);
        net.add(
            CmpOp::Eq,
            NumExpr::Pow(Box::new(v(x)), Box::new(c("2"))),
            c("9"),
            "x^2=9",
        );
        net.add(CmpOp::Le, v(x), c("0"), "x<=0");
        net.add(
            CmpOp::Eq,
            NumExpr::Pow(Box::new(v(y)), Box::new(c("3"))),
            c("-8"),
            "y^3=-8",
        );
        let s = match solve_nonlinear(&net, 1e-6, 1_000_000) {
            Outcome::Sat(s) => s,
            o => panic!("expected sat, got {o:?}"),
        };
        assert!((s.get(x) + 3.0).abs() < 1e-4);
        assert!((s.get(y) + 2.0).abs() < 1e-4);
    }

    #[test]
    fn interval_arithmetic_is_outward() {
        let a = Iv::new(0.1, 0.2);
        let b = Iv::new(0.3, 0.4);
        let s = a.add(b);
        assert!(s.lo <= 0.4 && s.hi >= 0.6);
        let p = a.mul(b);
        assert!(p.lo <= 0.03 && p.hi >= 0.08);
        let sq = Iv::new(-2.0, 3.0).sq();
        assert!(sq.lo <= 0.0 && sq.lo >= -f64::MIN_POSITIVE && sq.hi >= 9.0);
        assert!(Iv::new(1.0, 2.0).div(Iv::new(-1.0, 1.0)) == WHOLE);
    }
}
