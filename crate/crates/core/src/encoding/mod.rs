//! Compilation of a ground instance into a program of Boolean rules plus
//! numerical constraints over a bounded timeline.
//!
//! The timeline has states 0..=horizon, each spanning real times
//! [start(i), end(i)], and occurrence boundaries 0..horizon-1: an occurrence
//! at step i takes effect at the transition into state i+1, at global time
//! end(i). Durative actions compile into start/end instantaneous actions with
//! one independent copy per start step; processes and events get must-
//! semantics choices with `is_false` witness atoms carrying the complement
//! constraint. Numeric change routes through per-source contribution
//! variables: continuous sources contribute rate·(end(i)-start(i)) while in
//! progress, discrete sources contribute at boundaries.
//!
//! Rule and variable order is fixed by construction, so emission is
//! byte-identical across runs for the same instance and horizon.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::numeric::{ConstraintNetwork, NumExpr, VarId, DEFAULT_DOMAIN};
use crate::pddl::ast::{CmpOp, Dir};
use crate::pddl::ground::{GExpr, GroundCmp, GroundInstance, NumId};

pub type AtomId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lit {
    Pos(AtomId),
    /// Default negation (`not a`).
    Neg(AtomId),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Head {
    Atom(AtomId),
    /// Denial (constraint rule with empty head).
    False,
    Choice { atoms: Vec<AtomId>, lo: u32, hi: u32 },
    /// Index into `CaspProgram::constraints`.
    Constraint(usize),
}

#[derive(Debug, Clone)]
pub struct CaspRule {
    pub head: Head,
    pub body: Vec<Lit>,
}

/// A numerical constraint template over the program's constraint variables.
#[derive(Debug, Clone)]
pub struct CaspConstraint {
    pub op: CmpOp,
    pub lhs: NumExpr,
    pub rhs: NumExpr,
}

/// Boolean state components tracked by the encoding: the instance's own
/// fluents plus synthetic in-progress markers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BFluent {
    Base(usize),
    /// Copy of durative action `d` started at step `i1`.
    DurCopy(usize, usize),
    Proc(usize),
}

/// Semantic atom/variable tables consumed by the candidate search.
#[derive(Debug, Clone, Default)]
pub struct EncodingIndex {
    pub holds: BTreeMap<(BFluent, usize), AtomId>,
    pub nholds: BTreeMap<(BFluent, usize), AtomId>,
    pub occ_action: BTreeMap<(usize, usize), AtomId>,
    pub occ_start_dur: BTreeMap<(usize, usize), AtomId>,
    /// (durative, start step, end step) -> occurs(end(d,i1),i2).
    pub occ_end_dur: BTreeMap<(usize, usize, usize), AtomId>,
    pub occ_start_proc: BTreeMap<(usize, usize), AtomId>,
    pub occ_end_proc: BTreeMap<(usize, usize), AtomId>,
    pub occ_event: BTreeMap<(usize, usize), AtomId>,
    /// Some copy of durative `d` in progress during state `i`.
    pub agg_inprogr: BTreeMap<(usize, usize), AtomId>,
    pub ab: BTreeMap<(NumId, usize), AtomId>,
    pub assigned: BTreeMap<(NumId, usize), AtomId>,
    /// Witness atoms: numeric condition k of the owner chosen false.
    pub proc_start_wit: BTreeMap<(usize, usize, usize), AtomId>,
    pub proc_stay: BTreeMap<(usize, usize), AtomId>,
    pub proc_end_wit: BTreeMap<(usize, usize, usize), AtomId>,
    pub event_wit: BTreeMap<(usize, usize, usize), AtomId>,
    pub tstart: Vec<VarId>,
    pub tend: Vec<VarId>,
    pub v_initial: BTreeMap<(NumId, usize), VarId>,
    pub v_final: BTreeMap<(NumId, usize), VarId>,
    pub stime: BTreeMap<(usize, usize), VarId>,
}

#[derive(Debug, Clone, Default)]
pub struct CaspProgram {
    pub horizon: usize,
    /// The instance this program encodes; drives the candidate search.
    pub instance: GroundInstance,
    pub atom_names: Vec<String>,
    pub rules: Vec<CaspRule>,
    pub cvar_names: Vec<String>,
    pub cvar_domains: Vec<(f64, f64)>,
    pub constraints: Vec<CaspConstraint>,
    pub index: EncodingIndex,
    atom_map: BTreeMap<String, AtomId>,
    cvar_map: BTreeMap<String, VarId>,
}

impl CaspProgram {
    pub fn atom(&mut self, name: &str) -> AtomId {
        if let Some(&id) = self.atom_map.get(name) {
            return id;
        }
        let id = self.atom_names.len();
        self.atom_names.push(name.to_string());
        self.atom_map.insert(name.to_string(), id);
        id
    }

    /// Like `atom` but guaranteed fresh: appends a disambiguator when the
    /// preferred name is already taken by another entity.
    fn fresh_atom(&mut self, preferred: &str) -> AtomId {
        if !self.atom_map.contains_key(preferred) {
            return self.atom(preferred);
        }
        let mut n = 2;
        loop {
            let name = format!("{preferred}#{n}");
            if !self.atom_map.contains_key(&name) {
                return self.atom(&name);
            }
            n += 1;
        }
    }

    pub fn atom_id(&self, name: &str) -> Option<AtomId> {
        self.atom_map.get(name).copied()
    }

    pub fn cvar(&mut self, name: &str, lo: f64, hi: f64) -> VarId {
        if let Some(&id) = self.cvar_map.get(name) {
            return id;
        }
        let id = self.cvar_names.len();
        self.cvar_names.push(name.to_string());
        self.cvar_domains.push((lo, hi));
        self.cvar_map.insert(name.to_string(), id);
        id
    }

    pub fn fact(&mut self, atom: AtomId) {
        self.rules.push(CaspRule {
            head: Head::Atom(atom),
            body: Vec::new(),
        });
    }

    pub fn rule(&mut self, head: AtomId, body: Vec<Lit>) {
        self.rules.push(CaspRule {
            head: Head::Atom(head),
            body,
        });
    }

    pub fn denial(&mut self, body: Vec<Lit>) {
        self.rules.push(CaspRule {
            head: Head::False,
            body,
        });
    }

    pub fn choice(&mut self, atoms: Vec<AtomId>, lo: u32, hi: u32, body: Vec<Lit>) {
        self.rules.push(CaspRule {
            head: Head::Choice { atoms, lo, hi },
            body,
        });
    }

    pub fn constraint(&mut self, op: CmpOp, lhs: NumExpr, rhs: NumExpr, body: Vec<Lit>) {
        let idx = self.constraints.len();
        self.constraints.push(CaspConstraint { op, lhs, rhs });
        self.rules.push(CaspRule {
            head: Head::Constraint(idx),
            body,
        });
    }

    /// Builds an empty constraint network sharing this program's variable
    /// space (same `VarId`s, same domains).
    pub fn network_skeleton(&self) -> ConstraintNetwork {
        let mut net = ConstraintNetwork::new();
        for (name, (lo, hi)) in self.cvar_names.iter().zip(&self.cvar_domains) {
            let v = net.var(name);
            net.set_domain(v, *lo, *hi);
        }
        net
    }
}

// --- expression helpers -----------------------------------------------------

pub(crate) fn eadd(a: NumExpr, b: NumExpr) -> NumExpr {
    match (&a, &b) {
        (NumExpr::Const(x), _) if x.is_zero() => b,
        (_, NumExpr::Const(x)) if x.is_zero() => a,
        _ => NumExpr::Add(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn esub(a: NumExpr, b: NumExpr) -> NumExpr {
    match &b {
        NumExpr::Const(x) if x.is_zero() => a,
        _ => NumExpr::Sub(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn emul(a: NumExpr, b: NumExpr) -> NumExpr {
    match (&a, &b) {
        (NumExpr::Const(x), _) if x.is_one() => b,
        (_, NumExpr::Const(x)) if x.is_one() => a,
        (NumExpr::Const(x), _) | (_, NumExpr::Const(x)) if x.is_zero() => NumExpr::int(0),
        _ => NumExpr::Mul(Box::new(a), Box::new(b)),
    }
}

/// Conservative syntactic nonnegativity of a ground rate expression; used to
/// decide whether to emit the contribution-nonnegativity constraint.
fn nonneg(e: &GExpr) -> bool {
    match e {
        GExpr::Const(c) => !c.is_negative(),
        GExpr::Sqrt(_) => true,
        GExpr::Add(a, b) | GExpr::Mul(a, b) | GExpr::Div(a, b) => nonneg(a) && nonneg(b),
        _ => false,
    }
}

// --- the encoder ------------------------------------------------------------

/// One continuous or boundary source of change for a numeric fluent.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Source {
    /// Durative action `d` (all copies share the contribution variable; a
    /// denial forbids overlapping copies of the same ground action).
    Dur(usize),
    Proc(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum BSource {
    Action(usize),
    StartDur(usize),
    EndDur(usize),
    Event(usize),
}

struct Enc<'a> {
    g: &'a GroundInstance,
    h: usize,
    p: CaspProgram,
    /// Continuous sources by fluent: (dir, source, rate expression).
    cont: BTreeMap<NumId, Vec<(Dir, Source, GExpr)>>,
    /// Boundary sources by fluent: (dir, source, step expression).
    disc: BTreeMap<NumId, Vec<(Dir, BSource, GExpr)>>,
}

pub fn encode_instance(g: &GroundInstance, horizon: usize) -> CaspProgram {
    let mut e = Enc {
        g,
        h: horizon,
        p: CaspProgram {
            horizon,
            instance: g.clone(),
            ..Default::default()
        },
        cont: BTreeMap::new(),
        disc: BTreeMap::new(),
    };
    e.collect_sources();
    e.declare_variables();
    e.timeline();
    e.initial_state();
    e.consistency_and_inertia();
    e.numeric_frame();
    e.actions();
    e.duratives();
    e.processes();
    e.events();
    e.goal();
    e.p
}

/// The planning module: a free choice over every plannable occurrence atom.
/// Composable with `encode_instance` output via [`compose`].
pub fn encode_planning_module(g: &GroundInstance, horizon: usize) -> CaspProgram {
    let mut p = CaspProgram {
        horizon,
        ..Default::default()
    };
    let mut atoms = Vec::new();
    for (ai, a) in g.actions.iter().enumerate() {
        for i in 0..horizon {
            let id = p.atom(&format!("occurs({},{})", a.name, i));
            p.index.occ_action.insert((ai, i), id);
            atoms.push(id);
        }
    }
    for (di, d) in g.duratives.iter().enumerate() {
        // A copy started at the last step could never end.
        for i1 in 0..horizon.saturating_sub(1) {
            let id = p.atom(&format!("occurs(start({},{}),{})", d.name, i1, i1));
            p.index.occ_start_dur.insert((di, i1), id);
            atoms.push(id);
        }
    }
    if !atoms.is_empty() {
        let n = atoms.len() as u32;
        p.choice(atoms, 0, n, Vec::new());
    }
    p
}

/// Union of two programs, merging atoms and variables by name.
pub fn compose(a: &CaspProgram, b: &CaspProgram) -> CaspProgram {
    let mut out = a.clone();
    let atom_map: Vec<AtomId> = b.atom_names.iter().map(|n| out.atom(n)).collect();
    let cvar_map: Vec<VarId> = b
        .cvar_names
        .iter()
        .zip(&b.cvar_domains)
        .map(|(n, (lo, hi))| out.cvar(n, *lo, *hi))
        .collect();
    let remap_lit = |l: &Lit| match l {
        Lit::Pos(x) => Lit::Pos(atom_map[*x]),
        Lit::Neg(x) => Lit::Neg(atom_map[*x]),
    };
    for r in &b.rules {
        let body: Vec<Lit> = r.body.iter().map(remap_lit).collect();
        match &r.head {
            Head::Atom(x) => out.rules.push(CaspRule {
                head: Head::Atom(atom_map[*x]),
                body,
            }),
            Head::False => out.rules.push(CaspRule {
                head: Head::False,
                body,
            }),
            Head::Choice { atoms, lo, hi } => out.rules.push(CaspRule {
                head: Head::Choice {
                    atoms: atoms.iter().map(|x| atom_map[*x]).collect(),
                    lo: *lo,
                    hi: *hi,
                },
                body,
            }),
            Head::Constraint(ci) => {
                let c = &b.constraints[*ci];
                out.constraint(
                    c.op,
                    remap_expr(&c.lhs, &cvar_map),
                    remap_expr(&c.rhs, &cvar_map),
                    body,
                );
            }
        }
    }
    // Index entries of b (the planning module only defines occurrence atoms).
    for (k, v) in &b.index.occ_action {
        out.index.occ_action.insert(*k, atom_map[*v]);
    }
    for (k, v) in &b.index.occ_start_dur {
        out.index.occ_start_dur.insert(*k, atom_map[*v]);
    }
    out
}

fn remap_expr(e: &NumExpr, map: &[VarId]) -> NumExpr {
    match e {
        NumExpr::Const(c) => NumExpr::Const(c.clone()),
        NumExpr::Var(v) => NumExpr::Var(map[*v]),
        NumExpr::Add(a, b) => NumExpr::Add(Box::new(remap_expr(a, map)), Box::new(remap_expr(b, map))),
        NumExpr::Sub(a, b) => NumExpr::Sub(Box::new(remap_expr(a, map)), Box::new(remap_expr(b, map))),
        NumExpr::Mul(a, b) => NumExpr::Mul(Box::new(remap_expr(a, map)), Box::new(remap_expr(b, map))),
        NumExpr::Div(a, b) => NumExpr::Div(Box::new(remap_expr(a, map)), Box::new(remap_expr(b, map))),
        NumExpr::Sqrt(a) => NumExpr::Sqrt(Box::new(remap_expr(a, map))),
        NumExpr::Pow(a, b) => NumExpr::Pow(Box::new(remap_expr(a, map)), Box::new(remap_expr(b, map))),
    }
}

/// Canonical order of Boolean state components for a given horizon: base
/// fluents, then durative copies, then process in-progress markers.
pub fn bfluents(g: &GroundInstance, h: usize) -> Vec<BFluent> {
    let mut out: Vec<BFluent> = (0..g.bool_fluents.len()).map(BFluent::Base).collect();
    for d in 0..g.duratives.len() {
        for i1 in 0..h.saturating_sub(1) {
            out.push(BFluent::DurCopy(d, i1));
        }
    }
    for pi in 0..g.processes.len() {
        out.push(BFluent::Proc(pi));
    }
    out
}

impl<'a> Enc<'a> {
    fn bf_name(&self, f: BFluent) -> String {
        match f {
            BFluent::Base(i) => self.g.bool_fluents[i].clone(),
            BFluent::DurCopy(d, i1) => format!("inprogr({},{})", self.g.duratives[d].name, i1),
            BFluent::Proc(pi) => format!("inprogr({})", self.g.processes[pi].name),
        }
    }

    fn all_bfluents(&self) -> Vec<BFluent> {
        bfluents(self.g, self.h)
    }

    fn holds(&mut self, f: BFluent, i: usize) -> AtomId {
        if let Some(&id) = self.p.index.holds.get(&(f, i)) {
            return id;
        }
        let id = self.p.atom(&format!("holds({},{})", self.bf_name(f), i));
        self.p.index.holds.insert((f, i), id);
        id
    }

    fn nholds(&mut self, f: BFluent, i: usize) -> AtomId {
        if let Some(&id) = self.p.index.nholds.get(&(f, i)) {
            return id;
        }
        let id = self.p.atom(&format!("-holds({},{})", self.bf_name(f), i));
        self.p.index.nholds.insert((f, i), id);
        id
    }

    /// Literal for one Boolean condition at state `i` (totality of the holds
    /// relation makes -holds equivalent to default negation here).
    fn cond_lit(&mut self, f: usize, positive: bool, i: usize) -> Lit {
        if positive {
            Lit::Pos(self.holds(BFluent::Base(f), i))
        } else {
            Lit::Pos(self.nholds(BFluent::Base(f), i))
        }
    }

    fn v_initial(&mut self, n: NumId, i: usize) -> VarId {
        if let Some(&v) = self.p.index.v_initial.get(&(n, i)) {
            return v;
        }
        let v = self.p.cvar(
            &format!("v_initial({},{})", self.g.num_fluents[n], i),
            -DEFAULT_DOMAIN,
            DEFAULT_DOMAIN,
        );
        self.p.index.v_initial.insert((n, i), v);
        v
    }

    fn v_final(&mut self, n: NumId, i: usize) -> VarId {
        if let Some(&v) = self.p.index.v_final.get(&(n, i)) {
            return v;
        }
        let v = self.p.cvar(
            &format!("v_final({},{})", self.g.num_fluents[n], i),
            -DEFAULT_DOMAIN,
            DEFAULT_DOMAIN,
        );
        self.p.index.v_final.insert((n, i), v);
        v
    }

    /// Maps a ground expression to constraint variables at state `i`, using
    /// final values when `at_final` (occurrence-time evaluation) and initial
    /// values otherwise (state-entry evaluation).
    fn gexpr(&mut self, e: &GExpr, i: usize, at_final: bool) -> NumExpr {
        match e {
            GExpr::Const(c) => NumExpr::Const(c.clone()),
            GExpr::Fluent(n) => NumExpr::Var(if at_final {
                self.v_final(*n, i)
            } else {
                self.v_initial(*n, i)
            }),
            GExpr::Duration => unreachable!("?duration outside a duration constraint"),
            GExpr::Add(a, b) => eadd(self.gexpr(a, i, at_final), self.gexpr(b, i, at_final)),
            GExpr::Sub(a, b) => esub(self.gexpr(a, i, at_final), self.gexpr(b, i, at_final)),
            GExpr::Mul(a, b) => emul(self.gexpr(a, i, at_final), self.gexpr(b, i, at_final)),
            GExpr::Div(a, b) => NumExpr::Div(
                Box::new(self.gexpr(a, i, at_final)),
                Box::new(self.gexpr(b, i, at_final)),
            ),
            GExpr::Sqrt(a) => NumExpr::Sqrt(Box::new(self.gexpr(a, i, at_final))),
            GExpr::Pow(a, b) => NumExpr::Pow(
                Box::new(self.gexpr(a, i, at_final)),
                Box::new(self.gexpr(b, i, at_final)),
            ),
        }
    }

    /// Emits `cmp` (or its complement) over values at state `i`.
    fn cmp_constraint(&mut self, cmp: &GroundCmp, i: usize, complement: bool, body: Vec<Lit>) {
        let op = if complement { cmp.op.complement() } else { cmp.op };
        let lhs = self.gexpr(&cmp.lhs, i, true);
        let rhs = self.gexpr(&cmp.rhs, i, true);
        self.p.constraint(op, lhs, rhs, body);
    }

    // -- source collection ----------------------------------------------

    fn collect_sources(&mut self) {
        for (di, d) in self.g.duratives.iter().enumerate() {
            for (n, dir, r) in &d.eff_cont {
                self.cont
                    .entry(*n)
                    .or_default()
                    .push((*dir, Source::Dur(di), r.clone()));
            }
            for (n, dir, e) in &d.eff_start_step {
                self.disc
                    .entry(*n)
                    .or_default()
                    .push((*dir, BSource::StartDur(di), e.clone()));
            }
            for (n, dir, e) in &d.eff_end_step {
                self.disc
                    .entry(*n)
                    .or_default()
                    .push((*dir, BSource::EndDur(di), e.clone()));
            }
        }
        for (pi, pr) in self.g.processes.iter().enumerate() {
            for (n, dir, r) in &pr.eff_cont {
                self.cont
                    .entry(*n)
                    .or_default()
                    .push((*dir, Source::Proc(pi), r.clone()));
            }
        }
        for (ai, a) in self.g.actions.iter().enumerate() {
            for (n, dir, e) in &a.eff_step {
                self.disc
                    .entry(*n)
                    .or_default()
                    .push((*dir, BSource::Action(ai), e.clone()));
            }
        }
        for (ei, ev) in self.g.events.iter().enumerate() {
            for (n, dir, e) in &ev.eff_step {
                self.disc
                    .entry(*n)
                    .or_default()
                    .push((*dir, BSource::Event(ei), e.clone()));
            }
        }
        for v in self.cont.values_mut() {
            v.sort_by(|a, b| (&a.1, a.0).cmp(&(&b.1, b.0)));
        }
        for v in self.disc.values_mut() {
            v.sort_by(|a, b| (&a.1, a.0).cmp(&(&b.1, b.0)));
        }
    }

    fn source_name(&self, s: &Source) -> String {
        match s {
            Source::Dur(d) => self.g.duratives[*d].name.clone(),
            Source::Proc(p) => self.g.processes[*p].name.clone(),
        }
    }

    fn bsource_name(&self, s: &BSource) -> String {
        match s {
            BSource::Action(a) => self.g.actions[*a].name.clone(),
            BSource::StartDur(d) => format!("start({})", self.g.duratives[*d].name),
            BSource::EndDur(d) => format!("end({})", self.g.duratives[*d].name),
            BSource::Event(e) => self.g.events[*e].name.clone(),
        }
    }

    fn contrib_var(&mut self, n: NumId, dir: Dir, src_name: &str, i: usize) -> VarId {
        self.p.cvar(
            &format!(
                "v(contrib({},{},{}),{})",
                self.g.num_fluents[n],
                dir.text(),
                src_name,
                i
            ),
            -DEFAULT_DOMAIN,
            DEFAULT_DOMAIN,
        )
    }

    /// The atom meaning "continuous source s is active in state i".
    fn source_active(&mut self, s: &Source, i: usize) -> AtomId {
        match s {
            Source::Proc(pi) => self.holds(BFluent::Proc(*pi), i),
            Source::Dur(di) => self.agg_inprogr(*di, i),
        }
    }

    fn agg_inprogr(&mut self, d: usize, i: usize) -> AtomId {
        if let Some(&id) = self.p.index.agg_inprogr.get(&(d, i)) {
            return id;
        }
        let id = self
            .p
            .atom(&format!("holds(inprogr({}),{})", self.g.duratives[d].name, i));
        self.p.index.agg_inprogr.insert((d, i), id);
        id
    }

    // -- rule families ----------------------------------------------------

    fn declare_variables(&mut self) {
        for i in 0..=self.h {
            let ts = self.p.cvar(&format!("start({i})"), 0.0, DEFAULT_DOMAIN);
            let te = self.p.cvar(&format!("end({i})"), 0.0, DEFAULT_DOMAIN);
            self.p.index.tstart.push(ts);
            self.p.index.tend.push(te);
        }
        for n in 0..self.g.num_fluents.len() {
            for i in 0..=self.h {
                self.v_initial(n, i);
                self.v_final(n, i);
            }
        }
    }

    fn timeline(&mut self) {
        let ts0 = self.p.index.tstart[0];
        self.p
            .constraint(CmpOp::Eq, NumExpr::Var(ts0), NumExpr::int(0), Vec::new());
        for i in 0..=self.h {
            let (ts, te) = (self.p.index.tstart[i], self.p.index.tend[i]);
            self.p
                .constraint(CmpOp::Ge, NumExpr::Var(te), NumExpr::Var(ts), Vec::new());
        }
        for i in 0..self.h {
            let (te, ts1) = (self.p.index.tend[i], self.p.index.tstart[i + 1]);
            self.p
                .constraint(CmpOp::Eq, NumExpr::Var(ts1), NumExpr::Var(te), Vec::new());
        }
    }

    fn initial_state(&mut self) {
        for f in self.all_bfluents() {
            let true_at_0 = match f {
                BFluent::Base(b) => self.g.init_bool[b],
                _ => false,
            };
            let a = if true_at_0 {
                self.holds(f, 0)
            } else {
                self.nholds(f, 0)
            };
            self.p.fact(a);
        }
        for n in 0..self.g.num_fluents.len() {
            let v = self.v_initial(n, 0);
            let init = self.g.init_num[n].clone();
            self.p.constraint(
                CmpOp::Eq,
                NumExpr::Var(v),
                NumExpr::Const(init),
                Vec::new(),
            );
        }
    }

    fn consistency_and_inertia(&mut self) {
        for f in self.all_bfluents() {
            for i in 0..=self.h {
                let (h, nh) = (self.holds(f, i), self.nholds(f, i));
                self.p.denial(vec![Lit::Pos(h), Lit::Pos(nh)]);
            }
            for i in 0..self.h {
                let (h0, nh0) = (self.holds(f, i), self.nholds(f, i));
                let (h1, nh1) = (self.holds(f, i + 1), self.nholds(f, i + 1));
                self.p.rule(h1, vec![Lit::Pos(h0), Lit::Neg(nh1)]);
                self.p.rule(nh1, vec![Lit::Pos(nh0), Lit::Neg(h1)]);
            }
        }
    }

    /// Contribution variables, balance, numeric inertia, and boundary value
    /// propagation.
    fn numeric_frame(&mut self) {
        let cont = self.cont.clone();
        let disc = self.disc.clone();
        // Per-state continuous frame.
        for n in 0..self.g.num_fluents.len() {
            let sources = cont.get(&n).cloned().unwrap_or_default();
            for i in 0..=self.h {
                // ab(n,i) holds when some continuous source is active.
                let ab = self
                    .p
                    .atom(&format!("ab({},{})", self.g.num_fluents[n], i));
                self.p.index.ab.insert((n, i), ab);
                for (_, s, _) in &sources {
                    let act = self.source_active(s, i);
                    self.p.rule(ab, vec![Lit::Pos(act)]);
                }
                let (vi, vf) = (self.v_initial(n, i), self.v_final(n, i));
                self.p.constraint(
                    CmpOp::Eq,
                    NumExpr::Var(vf),
                    NumExpr::Var(vi),
                    vec![Lit::Neg(ab)],
                );
                if sources.is_empty() {
                    continue;
                }
                // Contribution variables and their defining rules.
                let mut balance = NumExpr::Var(vi);
                for (dir, s, rate) in &sources {
                    let sname = self.source_name(s);
                    let cv = self.contrib_var(n, *dir, &sname, i);
                    let act = self.source_active(s, i);
                    let (ts, te) = (self.p.index.tstart[i], self.p.index.tend[i]);
                    let span = esub(NumExpr::Var(te), NumExpr::Var(ts));
                    let amount = emul(self.gexpr(rate, i, false), span);
                    if nonneg(rate) {
                        self.p.constraint(
                            CmpOp::Ge,
                            NumExpr::Var(cv),
                            NumExpr::int(0),
                            Vec::new(),
                        );
                    }
                    self.p
                        .constraint(CmpOp::Eq, NumExpr::Var(cv), amount, vec![Lit::Pos(act)]);
                    self.p.constraint(
                        CmpOp::Eq,
                        NumExpr::Var(cv),
                        NumExpr::int(0),
                        vec![Lit::Neg(act)],
                    );
                    balance = match dir {
                        Dir::Incr => eadd(balance, NumExpr::Var(cv)),
                        Dir::Decr => esub(balance, NumExpr::Var(cv)),
                    };
                }
                self.p
                    .constraint(CmpOp::Eq, NumExpr::Var(vf), balance, Vec::new());
            }
        }
        // Boundary propagation with discrete contributions.
        for n in 0..self.g.num_fluents.len() {
            let sources = disc.get(&n).cloned().unwrap_or_default();
            for i in 0..self.h {
                let asg = self
                    .p
                    .atom(&format!("assigned({},{})", self.g.num_fluents[n], i));
                self.p.index.assigned.insert((n, i), asg);
                let vf = self.v_final(n, i);
                let vi1 = self.v_initial(n, i + 1);
                let mut total = NumExpr::Var(vf);
                for (dir, s, step) in &sources {
                    let occ = self.bsource_occurs(s, i);
                    if occ.is_empty() {
                        continue; // source cannot occur at this boundary
                    }
                    let sname = self.bsource_name(s);
                    let cv = self.contrib_var(n, *dir, &sname, i);
                    let amount = self.gexpr(step, i, true);
                    if nonneg(step) {
                        self.p.constraint(
                            CmpOp::Ge,
                            NumExpr::Var(cv),
                            NumExpr::int(0),
                            Vec::new(),
                        );
                    }
                    for &o in &occ {
                        self.p.constraint(
                            CmpOp::Eq,
                            NumExpr::Var(cv),
                            amount.clone(),
                            vec![Lit::Pos(o)],
                        );
                    }
                    self.p.constraint(
                        CmpOp::Eq,
                        NumExpr::Var(cv),
                        NumExpr::int(0),
                        occ.iter().map(|&o| Lit::Neg(o)).collect(),
                    );
                    total = match dir {
                        Dir::Incr => eadd(total, NumExpr::Var(cv)),
                        Dir::Decr => esub(total, NumExpr::Var(cv)),
                    };
                }
                self.p
                    .constraint(CmpOp::Eq, NumExpr::Var(vi1), total, vec![Lit::Neg(asg)]);
            }
        }
    }

    /// Occurrence atoms through which a boundary source can fire at step `i`
    /// (durative ends have one per live copy).
    fn bsource_occurs(&mut self, s: &BSource, i: usize) -> Vec<AtomId> {
        match s {
            BSource::Action(a) => vec![self.occ_action(*a, i)],
            BSource::Event(e) => vec![self.occ_event(*e, i)],
            BSource::StartDur(d) => {
                if i + 1 < self.h {
                    vec![self.occ_start_dur(*d, i)]
                } else {
                    Vec::new()
                }
            }
            BSource::EndDur(d) => (0..i).map(|i1| self.occ_end_dur(*d, i1, i)).collect(),
        }
    }

    fn occ_action(&mut self, a: usize, i: usize) -> AtomId {
        if let Some(&id) = self.p.index.occ_action.get(&(a, i)) {
            return id;
        }
        let id = self
            .p
            .atom(&format!("occurs({},{})", self.g.actions[a].name, i));
        self.p.index.occ_action.insert((a, i), id);
        id
    }

    fn occ_event(&mut self, e: usize, i: usize) -> AtomId {
        if let Some(&id) = self.p.index.occ_event.get(&(e, i)) {
            return id;
        }
        let id = self
            .p
            .atom(&format!("occurs({},{})", self.g.events[e].name, i));
        self.p.index.occ_event.insert((e, i), id);
        id
    }

    fn occ_start_dur(&mut self, d: usize, i1: usize) -> AtomId {
        if let Some(&id) = self.p.index.occ_start_dur.get(&(d, i1)) {
            return id;
        }
        let id = self.p.atom(&format!(
            "occurs(start({},{}),{})",
            self.g.duratives[d].name, i1, i1
        ));
        self.p.index.occ_start_dur.insert((d, i1), id);
        id
    }

    fn occ_end_dur(&mut self, d: usize, i1: usize, i2: usize) -> AtomId {
        if let Some(&id) = self.p.index.occ_end_dur.get(&(d, i1, i2)) {
            return id;
        }
        let id = self.p.atom(&format!(
            "occurs(end({},{}),{})",
            self.g.duratives[d].name, i1, i2
        ));
        self.p.index.occ_end_dur.insert((d, i1, i2), id);
        id
    }

    fn actions(&mut self) {
        for ai in 0..self.g.actions.len() {
            for i in 0..self.h {
                let occ = self.occ_action(ai, i);
                let a = self.g.actions[ai].clone();
                // Boolean preconditions as denials.
                for (f, pos) in &a.pre_bool {
                    let lit = self.cond_lit(*f, !*pos, i); // complement literal
                    self.p.denial(vec![Lit::Pos(occ), lit]);
                }
                for cmp in &a.pre_num {
                    self.cmp_constraint(cmp, i, false, vec![Lit::Pos(occ)]);
                }
                self.discrete_effects(occ, i, &a.eff_bool, &a.eff_assign);
            }
        }
    }

    /// Boolean and assignment effects of an occurrence at step `i`, landing
    /// in state `i+1`. Step (increase/decrease) effects are handled by the
    /// contribution frame.
    fn discrete_effects(
        &mut self,
        occ: AtomId,
        i: usize,
        eff_bool: &[(usize, bool)],
        eff_assign: &[(NumId, GExpr)],
    ) {
        for (f, pos) in eff_bool {
            let head = if *pos {
                self.holds(BFluent::Base(*f), i + 1)
            } else {
                self.nholds(BFluent::Base(*f), i + 1)
            };
            self.p.rule(head, vec![Lit::Pos(occ)]);
        }
        for (n, e) in eff_assign {
            let asg = self.p.index.assigned[&(*n, i)];
            self.p.rule(asg, vec![Lit::Pos(occ)]);
            let vi1 = self.v_initial(*n, i + 1);
            let rhs = self.gexpr(e, i, true);
            self.p
                .constraint(CmpOp::Eq, NumExpr::Var(vi1), rhs, vec![Lit::Pos(occ)]);
        }
    }

    fn duratives(&mut self) {
        for di in 0..self.g.duratives.len() {
            let d = self.g.duratives[di].clone();
            // Overlapping copies of one ground action would share contribution
            // variables, so forbid them outright.
            for i in 1..=self.h {
                for i1 in 0..self.h.saturating_sub(1) {
                    for i2 in (i1 + 1)..self.h.saturating_sub(1) {
                        let a = self.holds(BFluent::DurCopy(di, i1), i);
                        let b = self.holds(BFluent::DurCopy(di, i2), i);
                        self.p.denial(vec![Lit::Pos(a), Lit::Pos(b)]);
                    }
                }
            }
            // Aggregate in-progress marker feeding the contribution frame.
            for i in 0..=self.h {
                for i1 in 0..self.h.saturating_sub(1) {
                    let agg = self.agg_inprogr(di, i);
                    let c = self.holds(BFluent::DurCopy(di, i1), i);
                    self.p.rule(agg, vec![Lit::Pos(c)]);
                }
            }
            for i1 in 0..self.h.saturating_sub(1) {
                let start = self.occ_start_dur(di, i1);
                for (f, pos) in &d.cond_start_bool {
                    let lit = self.cond_lit(*f, !*pos, i1);
                    self.p.denial(vec![Lit::Pos(start), lit]);
                }
                for cmp in &d.cond_start_num {
                    self.cmp_constraint(cmp, i1, false, vec![Lit::Pos(start)]);
                }
                self.discrete_effects(start, i1, &d.eff_start_bool, &d.eff_start_assign);
                let inprog1 = self.holds(BFluent::DurCopy(di, i1), i1 + 1);
                self.p.rule(inprog1, vec![Lit::Pos(start)]);
                // Start-time recording.
                let st = self.p.cvar(
                    &format!("stime({},{})", d.name, i1),
                    0.0,
                    DEFAULT_DOMAIN,
                );
                self.p.index.stime.insert((di, i1), st);
                let te = self.p.index.tend[i1];
                self.p.constraint(
                    CmpOp::Eq,
                    NumExpr::Var(st),
                    NumExpr::Var(te),
                    vec![Lit::Pos(start)],
                );
                // The end must be triggered at exactly one later step.
                let ends: Vec<AtomId> = (i1 + 1..self.h)
                    .map(|i2| self.occ_end_dur(di, i1, i2))
                    .collect();
                self.p.choice(ends.clone(), 1, 1, vec![Lit::Pos(start)]);
                for (k, i2) in (i1 + 1..self.h).enumerate() {
                    let end = ends[k];
                    for (f, pos) in &d.cond_end_bool {
                        let lit = self.cond_lit(*f, !*pos, i2);
                        self.p.denial(vec![Lit::Pos(end), lit]);
                    }
                    for cmp in &d.cond_end_num {
                        self.cmp_constraint(cmp, i2, false, vec![Lit::Pos(end)]);
                    }
                    self.discrete_effects(end, i2, &d.eff_end_bool, &d.eff_end_assign);
                    let ninprog = self.nholds(BFluent::DurCopy(di, i1), i2 + 1);
                    self.p.rule(ninprog, vec![Lit::Pos(end)]);
                    // Duration: tend(i2) − stime ⋈ δ with δ evaluated at the
                    // values current when the action started.
                    let te2 = self.p.index.tend[i2];
                    let span = esub(NumExpr::Var(te2), NumExpr::Var(st));
                    let delta = self.gexpr(&d.duration, i1, true);
                    self.p
                        .constraint(d.duration_op, span, delta, vec![Lit::Pos(end)]);
                }
                // Over-all conditions in every state the copy is in progress.
                for s in (i1 + 1)..self.h {
                    let inp = self.holds(BFluent::DurCopy(di, i1), s);
                    for (f, pos) in &d.cond_over_bool {
                        let lit = self.cond_lit(*f, !*pos, s);
                        self.p.denial(vec![Lit::Pos(inp), lit]);
                    }
                    for cmp in &d.cond_over_num {
                        // Checked at both ends of the state.
                        let op = cmp.op;
                        let l0 = self.gexpr(&cmp.lhs, s, false);
                        let r0 = self.gexpr(&cmp.rhs, s, false);
                        self.p.constraint(op, l0, r0, vec![Lit::Pos(inp)]);
                        self.cmp_constraint(cmp, s, false, vec![Lit::Pos(inp)]);
                    }
                }
            }
        }
    }

    /// Rendered text of a ground comparison, used in witness atom names.
    fn cmp_text(&self, cmp: &GroundCmp) -> String {
        format!(
            "{}{}{}",
            gexpr_text(&cmp.lhs, self.g),
            cmp.op.text(),
            gexpr_text(&cmp.rhs, self.g)
        )
    }

    fn processes(&mut self) {
        for pi in 0..self.g.processes.len() {
            let pr = self.g.processes[pi].clone();
            for i in 0..self.h {
                let f = BFluent::Proc(pi);
                let inprog = self.holds(f, i);
                let pre_lits: Vec<Lit> = pr
                    .pre_bool
                    .iter()
                    .map(|(b, pos)| self.cond_lit(*b, *pos, i))
                    .collect();

                // Must-start: when inactive with Boolean preconditions true,
                // either the process starts or some numeric precondition is
                // chosen false.
                let start = self.p.atom(&format!("occurs(start({}),{})", pr.name, i));
                self.p.index.occ_start_proc.insert((pi, i), start);
                let mut alts = vec![start];
                for (k, cmp) in pr.pre_num.iter().enumerate() {
                    let wit = self
                        .p
                        .fresh_atom(&format!("is_false({},{})", self.cmp_text(cmp), i));
                    self.p.index.proc_start_wit.insert((pi, i, k), wit);
                    alts.push(wit);
                    self.cmp_constraint(cmp, i, true, vec![Lit::Pos(wit)]);
                }
                let mut body = vec![Lit::Neg(inprog)];
                body.extend(pre_lits.iter().cloned());
                self.p.choice(alts, 1, 1, body);
                for cmp in &pr.pre_num {
                    self.cmp_constraint(cmp, i, false, vec![Lit::Pos(start)]);
                }
                let h1 = self.holds(f, i + 1);
                self.p.rule(h1, vec![Lit::Pos(start)]);

                // Must-end: forced when a Boolean precondition fails...
                let end = self.p.atom(&format!("occurs(end({}),{})", pr.name, i));
                self.p.index.occ_end_proc.insert((pi, i), end);
                for (b, pos) in &pr.pre_bool {
                    let fail = self.cond_lit(*b, !*pos, i);
                    self.p.rule(end, vec![Lit::Pos(inprog), fail]);
                }
                // ...otherwise a choice between continuing (numeric
                // preconditions enforced) and ending with a witness.
                let stay = self.p.atom(&format!("stays({},{})", pr.name, i));
                self.p.index.proc_stay.insert((pi, i), stay);
                let mut alts = vec![stay];
                for (k, cmp) in pr.pre_num.iter().enumerate() {
                    let wit = self
                        .p
                        .fresh_atom(&format!("is_false({},{})", self.cmp_text(cmp), i));
                    self.p.index.proc_end_wit.insert((pi, i, k), wit);
                    alts.push(wit);
                    self.cmp_constraint(cmp, i, true, vec![Lit::Pos(wit)]);
                    self.p.rule(end, vec![Lit::Pos(wit)]);
                }
                let mut body = vec![Lit::Pos(inprog)];
                body.extend(pre_lits);
                self.p.choice(alts, 1, 1, body);
                for cmp in &pr.pre_num {
                    self.cmp_constraint(cmp, i, false, vec![Lit::Pos(stay)]);
                }
                let nh1 = self.nholds(f, i + 1);
                self.p.rule(nh1, vec![Lit::Pos(end)]);
            }
        }
    }

    fn events(&mut self) {
        for ei in 0..self.g.events.len() {
            let ev = self.g.events[ei].clone();
            for i in 0..self.h {
                let occ = self.occ_event(ei, i);
                let pre_lits: Vec<Lit> = ev
                    .pre_bool
                    .iter()
                    .map(|(b, pos)| self.cond_lit(*b, *pos, i))
                    .collect();
                let mut alts = vec![occ];
                for (k, cmp) in ev.pre_num.iter().enumerate() {
                    let wit = self
                        .p
                        .fresh_atom(&format!("is_false({},{})", self.cmp_text(cmp), i));
                    self.p.index.event_wit.insert((ei, i, k), wit);
                    alts.push(wit);
                    self.cmp_constraint(cmp, i, true, vec![Lit::Pos(wit)]);
                }
                self.p.choice(alts, 1, 1, pre_lits);
                for cmp in &ev.pre_num {
                    self.cmp_constraint(cmp, i, false, vec![Lit::Pos(occ)]);
                }
                self.discrete_effects(occ, i, &ev.eff_bool, &ev.eff_assign);
            }
        }
    }

    fn goal(&mut self) {
        for (f, pos) in self.g.goal_bool.clone() {
            let lit = self.cond_lit(f, !pos, self.h);
            self.p.denial(vec![lit]);
        }
        for cmp in self.g.goal_num.clone() {
            self.cmp_constraint(&cmp, self.h, false, Vec::new());
        }
    }
}

// --- text rendering ----------------------------------------------------------

fn rational_plain(r: &BigRational) -> String {
    if r.is_integer() {
        return r.to_integer().to_string();
    }
    // Decimal when the reduced denominator is 2^a·5^b, else p/q.
    let d = crate::pddl::render::rational_text(r);
    if d.starts_with("(/") {
        format!("{}/{}", r.numer(), r.denom())
    } else {
        d
    }
}

fn gexpr_text(e: &GExpr, g: &GroundInstance) -> String {
    match e {
        GExpr::Const(c) => rational_plain(c),
        GExpr::Fluent(n) => g.num_fluents[*n].clone(),
        GExpr::Duration => "?duration".to_string(),
        GExpr::Add(a, b) => format!("({}+{})", gexpr_text(a, g), gexpr_text(b, g)),
        GExpr::Sub(a, b) => format!("({}-{})", gexpr_text(a, g), gexpr_text(b, g)),
        GExpr::Mul(a, b) => format!("({}*{})", gexpr_text(a, g), gexpr_text(b, g)),
        GExpr::Div(a, b) => format!("({}/{})", gexpr_text(a, g), gexpr_text(b, g)),
        GExpr::Sqrt(a) => format!("sqrt({})", gexpr_text(a, g)),
        GExpr::Pow(a, b) => format!("pow({},{})", gexpr_text(a, g), gexpr_text(b, g)),
    }
}

pub fn op_text(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Lt => "<",
        CmpOp::Le => "<=",
        CmpOp::Eq => "==",
        CmpOp::Ne => "!=",
        CmpOp::Ge => ">=",
        CmpOp::Gt => ">",
    }
}

/// Renders a constraint expression with minimal parentheses.
pub fn expr_text(e: &NumExpr, names: &[String]) -> String {
    fn prec(e: &NumExpr) -> u8 {
        match e {
            NumExpr::Add(..) | NumExpr::Sub(..) => 1,
            NumExpr::Mul(..) | NumExpr::Div(..) => 2,
            _ => 3,
        }
    }
    fn go(e: &NumExpr, names: &[String], parent: u8) -> String {
        let s = match e {
            NumExpr::Const(c) => rational_plain(c),
            NumExpr::Var(v) => names[*v].clone(),
            NumExpr::Add(a, b) => format!("{}+{}", go(a, names, 1), go(b, names, 1)),
            NumExpr::Sub(a, b) => format!("{}-{}", go(a, names, 1), go(b, names, 2)),
            NumExpr::Mul(a, b) => format!("{}*{}", go(a, names, 2), go(b, names, 2)),
            NumExpr::Div(a, b) => format!("{}/{}", go(a, names, 2), go(b, names, 3)),
            NumExpr::Sqrt(a) => format!("sqrt({})", go(a, names, 0)),
            NumExpr::Pow(a, b) => format!("pow({},{})", go(a, names, 0), go(b, names, 0)),
        };
        if prec(e) < parent {
            format!("({s})")
        } else {
            s
        }
    }
    go(e, names, 0)
}


/// Deterministic solver-style text: `cspvar` declarations for every numeric
/// variable, then one rule per line with constraints wrapped in `required`.
pub fn emit_text(p: &CaspProgram) -> String {
    let mut out = String::new();
    for name in &p.cvar_names {
        out.push_str(&format!("cspvar({name}).\n"));
    }
    for r in &p.rules {
        let body: Vec<String> = r
            .body
            .iter()
            .map(|l| match l {
                Lit::Pos(a) => p.atom_names[*a].clone(),
                Lit::Neg(a) => format!("not {}", p.atom_names[*a]),
            })
            .collect();
        let body_text = body.join(", ");
        let head = match &r.head {
            Head::Atom(a) => p.atom_names[*a].clone(),
            Head::False => String::new(),
            Head::Choice { atoms, lo, hi } => {
                let names: Vec<String> = atoms.iter().map(|a| p.atom_names[*a].clone()).collect();
                format!("{lo}{{{}}}{hi}", names.join(", "))
            }
            Head::Constraint(ci) => {
                let c = &p.constraints[*ci];
                format!(
                    "required({}{}{})",
                    expr_text(&c.lhs, &p.cvar_names),
                    op_text(c.op),
                    expr_text(&c.rhs, &p.cvar_names)
                )
            }
        };
        match (head.is_empty(), body.is_empty()) {
            (true, _) => out.push_str(&format!(":- {body_text}.\n")),
            (false, true) => out.push_str(&format!("{head}.\n")),
            (false, false) => out.push_str(&format!("{head} :- {body_text}.\n")),
        }
    }
    out
}
