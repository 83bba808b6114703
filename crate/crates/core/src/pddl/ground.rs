//! Instantiation of parameterized constructs over typed object tuples.
//!
//! Ordering is lexicographic by declared symbol then object tuple, so two
//! identical inputs always produce identical `GroundInstance`s.

use std::collections::BTreeMap;

use num_rational::BigRational;

use super::ast::*;
use super::PddlError;

pub type BoolId = usize;
pub type NumId = usize;

/// Ground comparison between two expressions over numeric fluents.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundCmp {
    pub op: CmpOp,
    pub lhs: GExpr,
    pub rhs: GExpr,
}

impl GroundCmp {
    /// The same comparison with its operator complemented.
    pub fn complemented(&self) -> GroundCmp {
        GroundCmp {
            op: self.op.complement(),
            lhs: self.lhs.clone(),
            rhs: self.rhs.clone(),
        }
    }
}

/// Ground numeric expression. `Duration` only appears inside durative action
/// duration expressions.
#[derive(Debug, Clone, PartialEq)]
pub enum GExpr {
    Const(BigRational),
    Fluent(NumId),
    Duration,
    Add(Box<GExpr>, Box<GExpr>),
    Sub(Box<GExpr>, Box<GExpr>),
    Mul(Box<GExpr>, Box<GExpr>),
    Div(Box<GExpr>, Box<GExpr>),
    Sqrt(Box<GExpr>),
    Pow(Box<GExpr>, Box<GExpr>),
}

impl GExpr {
    pub fn fluents(&self, out: &mut Vec<NumId>) {
        match self {
            GExpr::Const(_) | GExpr::Duration => {}
            GExpr::Fluent(n) => out.push(*n),
            GExpr::Add(a, b) | GExpr::Sub(a, b) | GExpr::Mul(a, b) | GExpr::Div(a, b) | GExpr::Pow(a, b) => {
                a.fluents(out);
                b.fluents(out);
            }
            GExpr::Sqrt(a) => a.fluents(out),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct GroundAction {
    pub name: String,
    pub pre_bool: Vec<(BoolId, bool)>,
    pub pre_num: Vec<GroundCmp>,
    pub eff_bool: Vec<(BoolId, bool)>,
    pub eff_assign: Vec<(NumId, GExpr)>,
    pub eff_step: Vec<(NumId, Dir, GExpr)>,
}

#[derive(Debug, Clone)]
pub struct GroundDurative {
    pub name: String,
    pub duration_op: CmpOp,
    pub duration: GExpr,
    pub cond_start_bool: Vec<(BoolId, bool)>,
    pub cond_start_num: Vec<GroundCmp>,
    pub cond_over_bool: Vec<(BoolId, bool)>,
    pub cond_over_num: Vec<GroundCmp>,
    pub cond_end_bool: Vec<(BoolId, bool)>,
    pub cond_end_num: Vec<GroundCmp>,
    pub eff_start_bool: Vec<(BoolId, bool)>,
    pub eff_start_assign: Vec<(NumId, GExpr)>,
    pub eff_start_step: Vec<(NumId, Dir, GExpr)>,
    pub eff_end_bool: Vec<(BoolId, bool)>,
    pub eff_end_assign: Vec<(NumId, GExpr)>,
    pub eff_end_step: Vec<(NumId, Dir, GExpr)>,
    pub eff_cont: Vec<(NumId, Dir, GExpr)>,
}

#[derive(Debug, Clone)]
pub struct GroundProcess {
    pub name: String,
    pub pre_bool: Vec<(BoolId, bool)>,
    pub pre_num: Vec<GroundCmp>,
    pub eff_cont: Vec<(NumId, Dir, GExpr)>,
}

#[derive(Debug, Clone)]
pub struct GroundEvent {
    pub name: String,
    pub pre_bool: Vec<(BoolId, bool)>,
    pub pre_num: Vec<GroundCmp>,
    pub eff_bool: Vec<(BoolId, bool)>,
    pub eff_assign: Vec<(NumId, GExpr)>,
    pub eff_step: Vec<(NumId, Dir, GExpr)>,
}

#[derive(Debug, Clone, Default)]
pub struct GroundInstance {
    /// Canonical names like `unused(tank1)`, sorted.
    pub bool_fluents: Vec<String>,
    pub num_fluents: Vec<String>,
    pub actions: Vec<GroundAction>,
    pub duratives: Vec<GroundDurative>,
    pub processes: Vec<GroundProcess>,
    pub events: Vec<GroundEvent>,
    /// Total over `bool_fluents` (closed world: unmentioned is false).
    pub init_bool: Vec<bool>,
    /// Total over `num_fluents`.
    pub init_num: Vec<BigRational>,
    pub goal_bool: Vec<(BoolId, bool)>,
    pub goal_num: Vec<GroundCmp>,
}

impl GroundInstance {
    pub fn bool_id(&self, name: &str) -> Option<BoolId> {
        self.bool_fluents.binary_search_by(|f| f.as_str().cmp(name)).ok()
    }

    pub fn num_id(&self, name: &str) -> Option<NumId> {
        self.num_fluents.binary_search_by(|f| f.as_str().cmp(name)).ok()
    }
}

struct Grounder {
    /// object -> declared type
    objects: BTreeMap<String, String>,
    /// type -> transitive supertypes (including itself and `object`)
    supertypes: BTreeMap<String, Vec<String>>,
    bool_index: BTreeMap<String, BoolId>,
    num_index: BTreeMap<String, NumId>,
}

pub fn ground(domain: &DomainAst, problem: &ProblemAst) -> Result<GroundInstance, PddlError> {
    let file = "<ground>";
    let mut supertypes: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let declared: BTreeMap<String, String> = domain.types.iter().cloned().collect();
    let mut all_types: Vec<String> = declared.keys().cloned().collect();
    all_types.push("object".to_string());
    for (ty, sup) in &declared {
        if *sup != "object" && !declared.contains_key(sup) {
            return Err(PddlError::Semantic {
                file: file.into(),
                msg: format!("type `{ty}` has undeclared supertype `{sup}`"),
            });
        }
    }
    for ty in &all_types {
        let mut chain = vec![ty.clone()];
        let mut cur = ty.clone();
        while let Some(sup) = declared.get(&cur) {
            if chain.contains(sup) {
                return Err(PddlError::Semantic {
                    file: file.into(),
                    msg: format!("cyclic type hierarchy at `{sup}`"),
                });
            }
            chain.push(sup.clone());
            cur = sup.clone();
        }
        if !chain.contains(&"object".to_string()) {
            chain.push("object".to_string());
        }
        supertypes.insert(ty.clone(), chain);
    }

    let mut objects = BTreeMap::new();
    for o in &problem.objects {
        if !supertypes.contains_key(&o.ty) {
            return Err(PddlError::TypeMismatch {
                file: file.into(),
                line: o.span.line,
                col: o.span.col,
                msg: format!("object `{}` has undeclared type `{}`", o.name, o.ty),
            });
        }
        objects.insert(o.name.clone(), o.ty.clone());
    }

    let mut g = Grounder {
        objects,
        supertypes,
        bool_index: BTreeMap::new(),
        num_index: BTreeMap::new(),
    };

    // Enumerate all ground fluents first so ids are stable.
    let mut bool_names = Vec::new();
    for p in &domain.predicates {
        for tuple in g.tuples(&p.params) {
            bool_names.push(ground_name(&p.name, &tuple));
        }
    }
    bool_names.sort();
    bool_names.dedup();
    let mut num_names = Vec::new();
    for f in &domain.functions {
        for tuple in g.tuples(&f.params) {
            num_names.push(ground_name(&f.name, &tuple));
        }
    }
    num_names.sort();
    num_names.dedup();
    g.bool_index = bool_names.iter().cloned().enumerate().map(|(i, n)| (n, i)).collect();
    g.num_index = num_names.iter().cloned().enumerate().map(|(i, n)| (n, i)).collect();

    let mut inst = GroundInstance {
        bool_fluents: bool_names,
        num_fluents: num_names,
        ..Default::default()
    };

    for a in &domain.actions {
        for tuple in g.tuples(&a.params) {
            let sub = bind(&a.params, &tuple);
            let name = ground_name(&a.name, &tuple);
            let (pre_bool, pre_num) = g.ground_conds(&a.pre, &sub, file)?;
            if statically_false(&pre_num) {
                continue;
            }
            let (eff_bool, eff_assign, eff_step, rates) = g.ground_effects(&a.eff, &sub, file)?;
            if !rates.is_empty() {
                return Err(PddlError::Semantic {
                    file: file.into(),
                    msg: format!("instantaneous action `{name}` has a continuous effect"),
                });
            }
            inst.actions.push(GroundAction {
                name,
                pre_bool,
                pre_num,
                eff_bool,
                eff_assign,
                eff_step,
            });
        }
    }

    for d in &domain.duratives {
        for tuple in g.tuples(&d.params) {
            let sub = bind(&d.params, &tuple);
            let name = ground_name(&d.name, &tuple);
            let (cond_start_bool, cond_start_num) = g.ground_conds(&d.cond_start, &sub, file)?;
            if statically_false(&cond_start_num) {
                continue;
            }
            let (cond_over_bool, cond_over_num) = g.ground_conds(&d.cond_over, &sub, file)?;
            let (cond_end_bool, cond_end_num) = g.ground_conds(&d.cond_end, &sub, file)?;
            let (eff_start_bool, eff_start_assign, eff_start_step, r1) =
                g.ground_effects(&d.eff_start, &sub, file)?;
            let (eff_end_bool, eff_end_assign, eff_end_step, r2) =
                g.ground_effects(&d.eff_end, &sub, file)?;
            let (eb, ea, es, eff_cont) = g.ground_effects(&d.eff_cont, &sub, file)?;
            if !r1.is_empty() || !r2.is_empty() || !eb.is_empty() || !ea.is_empty() || !es.is_empty() {
                return Err(PddlError::Semantic {
                    file: file.into(),
                    msg: format!("misplaced effect in durative action `{name}`"),
                });
            }
            inst.duratives.push(GroundDurative {
                name,
                duration_op: d.duration_op,
                duration: g.ground_expr(&d.duration, &sub, file, true)?,
                cond_start_bool,
                cond_start_num,
                cond_over_bool,
                cond_over_num,
                cond_end_bool,
                cond_end_num,
                eff_start_bool,
                eff_start_assign,
                eff_start_step,
                eff_end_bool,
                eff_end_assign,
                eff_end_step,
                eff_cont,
            });
        }
    }

    for p in &domain.processes {
        for tuple in g.tuples(&p.params) {
            let sub = bind(&p.params, &tuple);
            let name = ground_name(&p.name, &tuple);
            let (pre_bool, pre_num) = g.ground_conds(&p.pre, &sub, file)?;
            if statically_false(&pre_num) {
                continue;
            }
            let (eb, ea, es, eff_cont) = g.ground_effects(&p.eff_cont, &sub, file)?;
            debug_assert!(eb.is_empty() && ea.is_empty() && es.is_empty());
            inst.processes.push(GroundProcess {
                name,
                pre_bool,
                pre_num,
                eff_cont,
            });
        }
    }

    for e in &domain.events {
        for tuple in g.tuples(&e.params) {
            let sub = bind(&e.params, &tuple);
            let name = ground_name(&e.name, &tuple);
            let (pre_bool, pre_num) = g.ground_conds(&e.pre, &sub, file)?;
            if statically_false(&pre_num) {
                continue;
            }
            let (eff_bool, eff_assign, eff_step, rates) = g.ground_effects(&e.eff, &sub, file)?;
            debug_assert!(rates.is_empty());
            inst.events.push(GroundEvent {
                name,
                pre_bool,
                pre_num,
                eff_bool,
                eff_assign,
                eff_step,
            });
        }
    }

    // Initial state: closed world on Booleans, total on numerics.
    inst.init_bool = vec![false; inst.bool_fluents.len()];
    for atom in &problem.init_bool {
        let name = ground_atom_name(atom);
        match inst.bool_id(&name) {
            Some(id) => inst.init_bool[id] = true,
            None => return Err(PddlError::undeclared(file, atom.span, name)),
        }
    }
    let mut init_num: Vec<Option<BigRational>> = vec![None; inst.num_fluents.len()];
    for ((f, args), v, span) in &problem.init_num {
        let name = ground_name(
            f,
            &args.iter().map(|t| t.name().to_string()).collect::<Vec<_>>(),
        );
        match inst.num_id(&name) {
            Some(id) => {
                if init_num[id].is_some() {
                    return Err(PddlError::Semantic {
                        file: file.into(),
                        msg: format!("numeric fluent `{name}` initialized twice"),
                    });
                }
                init_num[id] = Some(v.clone());
            }
            None => return Err(PddlError::undeclared(file, *span, name)),
        }
    }
    for (i, v) in init_num.into_iter().enumerate() {
        match v {
            Some(v) => inst.init_num.push(v),
            None => {
                return Err(PddlError::Semantic {
                    file: file.into(),
                    msg: format!(
                        "numeric fluent `{}` has no initial value",
                        inst.num_fluents[i]
                    ),
                })
            }
        }
    }

    let empty = BTreeMap::new();
    let (goal_bool, goal_num) = g.ground_conds(&problem.goal, &empty, file)?;
    inst.goal_bool = goal_bool;
    inst.goal_num = goal_num;

    Ok(inst)
}

fn ground_name(sym: &str, tuple: &[String]) -> String {
    if tuple.is_empty() {
        sym.to_string()
    } else {
        format!("{sym}({})", tuple.join(","))
    }
}

fn ground_atom_name(atom: &AtomAst) -> String {
    ground_name(
        &atom.pred,
        &atom
            .args
            .iter()
            .map(|t| t.name().to_string())
            .collect::<Vec<_>>(),
    )
}

fn bind(params: &[TypedName], tuple: &[String]) -> BTreeMap<String, String> {
    params
        .iter()
        .zip(tuple)
        .map(|(p, o)| (p.name.clone(), o.clone()))
        .collect()
}

/// A ground comparison between two constants that is false regardless of
/// fluent values (used to prune trivially-false instantiations).
fn statically_false(conds: &[GroundCmp]) -> bool {
    conds.iter().any(|c| {
        let (l, r) = match (&c.lhs, &c.rhs) {
            (GExpr::Const(l), GExpr::Const(r)) => (l, r),
            _ => return false,
        };
        !eval_cmp(c.op, l, r)
    })
}

fn eval_cmp(op: CmpOp, l: &BigRational, r: &BigRational) -> bool {
    match op {
        CmpOp::Lt => l < r,
        CmpOp::Le => l <= r,
        CmpOp::Eq => l == r,
        CmpOp::Ne => l != r,
        CmpOp::Ge => l >= r,
        CmpOp::Gt => l > r,
    }
}

impl Grounder {
    /// All type-compatible object tuples for a parameter list, in
    /// lexicographic object order.
    fn tuples(&self, params: &[TypedName]) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new()];
        for p in params {
            let candidates: Vec<&String> = self
                .objects
                .iter()
                .filter(|(_, ty)| {
                    self.supertypes
                        .get(*ty)
                        .map(|sups| sups.contains(&p.ty))
                        .unwrap_or(false)
                })
                .map(|(o, _)| o)
                .collect();
            let mut next = Vec::new();
            for prefix in &out {
                for c in &candidates {
                    let mut t = prefix.clone();
                    t.push((*c).clone());
                    next.push(t);
                }
            }
            out = next;
        }
        out
    }

    fn ground_conds(
        &self,
        conds: &[CondAst],
        sub: &BTreeMap<String, String>,
        file: &str,
    ) -> Result<(Vec<(BoolId, bool)>, Vec<GroundCmp>), PddlError> {
        let mut bools = Vec::new();
        let mut nums = Vec::new();
        for c in conds {
            match c {
                CondAst::Lit { atom, positive } => {
                    let name = self.subst_atom(atom, sub, file)?;
                    let id = self
                        .bool_index
                        .get(&name)
                        .copied()
                        .ok_or_else(|| PddlError::undeclared(file, atom.span, name.clone()))?;
                    bools.push((id, *positive));
                }
                CondAst::Cmp { op, lhs, rhs, .. } => {
                    nums.push(GroundCmp {
                        op: *op,
                        lhs: self.ground_expr(lhs, sub, file, false)?,
                        rhs: self.ground_expr(rhs, sub, file, false)?,
                    });
                }
            }
        }
        Ok((bools, nums))
    }

    #[allow(clippy::type_complexity)]
    fn ground_effects(
        &self,
        effs: &[EffAst],
        sub: &BTreeMap<String, String>,
        file: &str,
    ) -> Result<
        (
            Vec<(BoolId, bool)>,
            Vec<(NumId, GExpr)>,
            Vec<(NumId, Dir, GExpr)>,
            Vec<(NumId, Dir, GExpr)>,
        ),
        PddlError,
    > {
        let mut bools = Vec::new();
        let mut assigns = Vec::new();
        let mut steps = Vec::new();
        let mut rates = Vec::new();
        for e in effs {
            match e {
                EffAst::Bool { atom, positive } => {
                    let name = self.subst_atom(atom, sub, file)?;
                    let id = self
                        .bool_index
                        .get(&name)
                        .copied()
                        .ok_or_else(|| PddlError::undeclared(file, atom.span, name.clone()))?;
                    bools.push((id, *positive));
                }
                EffAst::Assign { fluent, expr, span } => {
                    let id = self.fluent_id(fluent, sub, file, *span)?;
                    assigns.push((id, self.ground_expr(expr, sub, file, false)?));
                }
                EffAst::Step { fluent, dir, expr, span } => {
                    let id = self.fluent_id(fluent, sub, file, *span)?;
                    steps.push((id, *dir, self.ground_expr(expr, sub, file, false)?));
                }
                EffAst::Rate { fluent, dir, expr, span } => {
                    let id = self.fluent_id(fluent, sub, file, *span)?;
                    rates.push((id, *dir, self.ground_expr(expr, sub, file, false)?));
                }
            }
        }
        Ok((bools, assigns, steps, rates))
    }

    fn fluent_id(
        &self,
        fluent: &(String, Vec<Term>),
        sub: &BTreeMap<String, String>,
        file: &str,
        span: Span,
    ) -> Result<NumId, PddlError> {
        let args = self.subst_terms(&fluent.1, sub, file, span)?;
        let name = ground_name(&fluent.0, &args);
        self.num_index
            .get(&name)
            .copied()
            .ok_or_else(|| PddlError::undeclared(file, span, name))
    }

    fn subst_atom(
        &self,
        atom: &AtomAst,
        sub: &BTreeMap<String, String>,
        file: &str,
    ) -> Result<String, PddlError> {
        let args = self.subst_terms(&atom.args, sub, file, atom.span)?;
        Ok(ground_name(&atom.pred, &args))
    }

    fn subst_terms(
        &self,
        terms: &[Term],
        sub: &BTreeMap<String, String>,
        file: &str,
        span: Span,
    ) -> Result<Vec<String>, PddlError> {
        terms
            .iter()
            .map(|t| match t {
                Term::Obj(o) => {
                    if self.objects.contains_key(o) {
                        Ok(o.clone())
                    } else {
                        Err(PddlError::undeclared(file, span, o.clone()))
                    }
                }
                Term::Var(v) => sub
                    .get(v)
                    .cloned()
                    .ok_or_else(|| PddlError::parse(file, span, format!("unbound variable `?{v}`"))),
            })
            .collect()
    }

    fn ground_expr(
        &self,
        expr: &NumExprAst,
        sub: &BTreeMap<String, String>,
        file: &str,
        allow_duration: bool,
    ) -> Result<GExpr, PddlError> {
        Ok(match expr {
            NumExprAst::Const(r) => GExpr::Const(r.clone()),
            NumExprAst::Duration => {
                if allow_duration {
                    GExpr::Duration
                } else {
                    return Err(PddlError::Semantic {
                        file: file.into(),
                        msg: "`?duration` outside a duration constraint".into(),
                    });
                }
            }
            NumExprAst::Fluent(f, args) => {
                let args = self.subst_terms(args, sub, file, Span::ZERO)?;
                let name = ground_name(f, &args);
                let id = self
                    .num_index
                    .get(&name)
                    .copied()
                    .ok_or_else(|| PddlError::undeclared(file, Span::ZERO, name))?;
                GExpr::Fluent(id)
            }
            NumExprAst::Add(a, b) => GExpr::Add(
                Box::new(self.ground_expr(a, sub, file, allow_duration)?),
                Box::new(self.ground_expr(b, sub, file, allow_duration)?),
            ),
            NumExprAst::Sub(a, b) => GExpr::Sub(
                Box::new(self.ground_expr(a, sub, file, allow_duration)?),
                Box::new(self.ground_expr(b, sub, file, allow_duration)?),
            ),
            NumExprAst::Mul(a, b) => GExpr::Mul(
                Box::new(self.ground_expr(a, sub, file, allow_duration)?),
                Box::new(self.ground_expr(b, sub, file, allow_duration)?),
            ),
            NumExprAst::Div(a, b) => GExpr::Div(
                Box::new(self.ground_expr(a, sub, file, allow_duration)?),
                Box::new(self.ground_expr(b, sub, file, allow_duration)?),
            ),
            NumExprAst::Sqrt(a) => GExpr::Sqrt(Box::new(self.ground_expr(a, sub, file, allow_duration)?)),
            NumExprAst::Pow(a, b) => GExpr::Pow(
                Box::new(self.ground_expr(a, sub, file, allow_duration)?),
                Box::new(self.ground_expr(b, sub, file, allow_duration)?),
            ),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::parser::{parse_domain, parse_problem};

    const DOM: &str = r#"
        (define (domain cells)
          (:types cell battery - object)
          (:predicates (charged ?b - battery) (linked ?c - cell ?b - battery))
          (:functions (charge ?b - battery) (rate ?c - cell))
          (:action link
            :parameters (?c - cell ?b - battery)
            :precondition (and (not (linked ?c ?b)) (> (charge ?b) 0))
            :effect (linked ?c ?b))
          (:process drain
            :parameters (?c - cell ?b - battery)
            :precondition (and (linked ?c ?b))
            :effect (decrease (charge ?b) (* #t (rate ?c))))
          (:event dead
            :parameters (?b - battery)
            :precondition (and (<= (charge ?b) 0) (charged ?b))
            :effect (not (charged ?b))))
    "#;

    const PROB: &str = r#"
        (define (problem p) (:domain cells)
          (:objects c1 c2 - cell b1 - battery)
          (:init (charged b1) (= (charge b1) 10)
                 (= (rate c1) 1) (= (rate c2) 2))
          (:goal (and (linked c1 b1))))
    "#;

    fn instance() -> GroundInstance {
        let d = parse_domain(DOM).unwrap();
        let p = parse_problem(PROB, &d).unwrap();
        ground(&d, &p).unwrap()
    }

    #[test]
    fn fluent_tables_are_sorted_and_complete() {
        let g = instance();
        assert_eq!(
            g.bool_fluents,
            vec!["charged(b1)", "linked(c1,b1)", "linked(c2,b1)"]
        );
        assert_eq!(g.num_fluents, vec!["charge(b1)", "rate(c1)", "rate(c2)"]);
        assert_eq!(g.bool_id("linked(c2,b1)"), Some(2));
        assert_eq!(g.num_id("charge(b1)"), Some(0));
        assert_eq!(g.num_id("missing"), None);
    }

    #[test]
    fn grounds_in_lexicographic_tuple_order() {
        let g = instance();
        let names: Vec<&str> = g.actions.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, vec!["link(c1,b1)", "link(c2,b1)"]);
        let procs: Vec<&str> = g.processes.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(procs, vec!["drain(c1,b1)", "drain(c2,b1)"]);
        assert_eq!(g.events.len(), 1);
        assert_eq!(g.events[0].name, "dead(b1)");
    }

    #[test]
    fn closed_world_init_and_total_numerics() {
        let g = instance();
        assert_eq!(g.init_bool, vec![true, false, false]);
        assert_eq!(
            g.init_num,
            vec![
                BigRational::from_integer(10.into()),
                BigRational::from_integer(1.into()),
                BigRational::from_integer(2.into()),
            ]
        );
        assert_eq!(g.goal_bool, vec![(1, true)]);
        assert!(g.goal_num.is_empty());
    }

    #[test]
    fn ground_conditions_and_effects_resolve_ids() {
        let g = instance();
        let link = &g.actions[0];
        assert_eq!(link.pre_bool, vec![(1, false)]);
        assert_eq!(link.pre_num.len(), 1);
        assert_eq!(link.pre_num[0].op, CmpOp::Gt);
        assert_eq!(link.pre_num[0].lhs, GExpr::Fluent(0));
        assert_eq!(link.eff_bool, vec![(1, true)]);

        let drain = &g.processes[1];
        assert_eq!(drain.name, "drain(c2,b1)");
        let (target, dir, rate) = &drain.eff_cont[0];
        assert_eq!(*target, 0);
        assert_eq!(*dir, Dir::Decr);
        assert_eq!(*rate, GExpr::Fluent(2));
    }

    #[test]
    fn missing_numeric_init_is_an_error() {
        let d = parse_domain(DOM).unwrap();
        let prob = PROB.replace("(= (rate c2) 2)", "");
        let p = parse_problem(&prob, &d).unwrap();
        let err = ground(&d, &p).unwrap_err();
        assert!(err.to_string().contains("rate(c2)"), "got: {err}");
    }

    #[test]
    fn prunes_statically_false_instantiations() {
        let d = parse_domain(
            r#"(define (domain d)
                 (:predicates (done))
                 (:action impossible
                   :parameters ()
                   :precondition (and (> 1 2))
                   :effect (done)))"#,
        )
        .unwrap();
        let p = parse_problem(
            r#"(define (problem p) (:domain d) (:init) (:goal (and (done))))"#,
            &d,
        )
        .unwrap();
        let g = ground(&d, &p).unwrap();
        assert!(g.actions.is_empty());
    }
}
