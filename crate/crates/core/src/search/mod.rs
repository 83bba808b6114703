//! Candidate enumeration: chronological step-by-step construction of Boolean
//! answer-set candidates with backtracking.
//!
//! Rather than solving the encoded program with a general-purpose engine, the
//! search walks the timeline boundary by boundary. At each boundary it
//! enumerates the subset of plannable occurrences (instantaneous actions,
//! durative starts, durative ends) ordered by cardinality then
//! lexicographically, combined with the must-semantics alternatives for every
//! enabled process and event (trigger first, then each numeric-condition
//! witness in declaration order). Boolean denials prune branches immediately;
//! numeric feasibility is the caller's job via [`induced_constraints`]. A
//! resumable cursor makes `next_candidate` restartable after a numeric
//! rejection.

use std::collections::BTreeMap;

use crate::encoding::{bfluents, BFluent, CaspProgram, Head, Lit};
use crate::numeric::ConstraintNetwork;
use crate::pddl::ground::GroundInstance;

/// Search tuning. Heuristic hooks only prune; they never add candidates.
#[derive(Debug, Clone, Default)]
pub struct SearchConfig {
    /// Stop after yielding this many candidates.
    pub candidate_limit: Option<u64>,
    /// Prune occurrence subsets larger than this per boundary.
    pub max_occurrences_per_step: Option<usize>,
    /// Forbid boundaries with no occurrence and no process/event activity
    /// before the last boundary (prunes idle prefixes).
    pub no_idle_steps: bool,
}

impl SearchConfig {
    /// Parses `KEY=VAL` heuristic settings (unknown keys are errors).
    pub fn apply_heuristic(&mut self, key: &str, val: &str) -> Result<(), String> {
        match key {
            "max_occurrences_per_step" => {
                self.max_occurrences_per_step =
                    Some(val.parse().map_err(|e| format!("{key}: {e}"))?);
            }
            "no_idle_steps" => {
                self.no_idle_steps = val.parse().map_err(|e| format!("{key}: {e}"))?;
            }
            _ => return Err(format!("unknown heuristic `{key}`")),
        }
        Ok(())
    }
}

/// What happened at one boundary, in instance index space.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepDecision {
    pub actions: Vec<usize>,
    pub dur_starts: Vec<usize>,
    /// (durative, step it started at)
    pub dur_ends: Vec<(usize, usize)>,
    pub proc_starts: Vec<usize>,
    pub proc_ends: Vec<usize>,
    pub events: Vec<usize>,
    /// Chosen witnesses: (owner kind, owner index, condition index).
    pub witnesses: Vec<(WitnessOwner, usize, usize)>,
    pub proc_stays: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum WitnessOwner {
    ProcStart,
    ProcEnd,
    Event,
}

/// One Boolean candidate: a total truth assignment over the program's atoms
/// plus the structured per-boundary decisions it came from.
#[derive(Debug, Clone)]
pub struct CandidateTrace {
    pub atoms: Vec<bool>,
    pub horizon: usize,
    pub steps: Vec<StepDecision>,
}

impl CandidateTrace {
    pub fn holds(&self, l: &Lit) -> bool {
        match l {
            Lit::Pos(a) => self.atoms[*a],
            Lit::Neg(a) => !self.atoms[*a],
        }
    }
}

// --- decision enumeration -----------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Cand {
    Action(usize),
    Start(usize),
    End(usize, usize),
}

/// Alternatives of one must-semantics choice; index 0 is the trigger.
#[derive(Debug, Clone)]
struct MustChoice {
    owner: WitnessOwner,
    idx: usize,
    /// Number of alternatives: 1 (trigger) + number of numeric conditions.
    alts: usize,
}

#[derive(Debug, Clone)]
struct Frame {
    /// Boolean state at this boundary's state index.
    bools: Vec<bool>,
    /// Occurrence subsets in (cardinality, lex) order.
    subsets: Vec<Vec<Cand>>,
    /// Forced process ends at this boundary (Boolean precondition failed).
    forced_proc_ends: Vec<usize>,
    choices: Vec<MustChoice>,
    /// Flattened decision counter: subset index * product(alts) + choice code.
    next: u64,
    total: u64,
}

#[derive(Debug, Clone, Default)]
pub struct Cursor {
    stack: Vec<Frame>,
    started: bool,
    exhausted: bool,
    pub yielded: u64,
}

struct Ctx<'a> {
    g: &'a GroundInstance,
    h: usize,
    bfs: Vec<BFluent>,
    bf_pos: BTreeMap<BFluent, usize>,
}

impl<'a> Ctx<'a> {
    fn new(p: &'a CaspProgram) -> Self {
        let bfs = bfluents(&p.instance, p.horizon);
        let bf_pos = bfs.iter().enumerate().map(|(i, f)| (*f, i)).collect();
        Ctx {
            g: &p.instance,
            h: p.horizon,
            bfs,
            bf_pos,
        }
    }

    fn init_bools(&self) -> Vec<bool> {
        self.bfs
            .iter()
            .map(|f| match f {
                BFluent::Base(b) => self.g.init_bool[*b],
                _ => false,
            })
            .collect()
    }

    fn base(&self, b: usize) -> usize {
        self.bf_pos[&BFluent::Base(b)]
    }

    fn sat_bool(&self, bools: &[bool], conds: &[(usize, bool)]) -> bool {
        conds.iter().all(|(b, pos)| bools[self.base(*b)] == *pos)
    }

    /// Open durative copies: (durative, started at).
    fn open_copies(&self, bools: &[bool]) -> Vec<(usize, usize)> {
        self.bfs
            .iter()
            .enumerate()
            .filter_map(|(i, f)| match f {
                BFluent::DurCopy(d, i1) if bools[i] => Some((*d, *i1)),
                _ => None,
            })
            .collect()
    }

    fn make_frame(&self, boundary: usize, bools: Vec<bool>, cfg: &SearchConfig) -> Frame {
        let open = self.open_copies(&bools);
        // Over-all Boolean invariants of open copies must hold in this state.
        for &(d, _) in &open {
            if !self.sat_bool(&bools, &self.g.duratives[d].cond_over_bool) {
                return Frame {
                    bools,
                    subsets: Vec::new(),
                    forced_proc_ends: Vec::new(),
                    choices: Vec::new(),
                    next: 0,
                    total: 0,
                };
            }
        }

        let mut cands = Vec::new();
        for (ai, a) in self.g.actions.iter().enumerate() {
            if self.sat_bool(&bools, &a.pre_bool) {
                cands.push(Cand::Action(ai));
            }
        }
        for (di, d) in self.g.duratives.iter().enumerate() {
            if boundary + 1 < self.h && self.sat_bool(&bools, &d.cond_start_bool) {
                cands.push(Cand::Start(di));
            }
        }
        for &(d, i1) in &open {
            if self.sat_bool(&bools, &self.g.duratives[d].cond_end_bool) {
                cands.push(Cand::End(d, i1));
            }
        }
        cands.sort();

        // Enumerate subsets ordered by cardinality, then lexicographically by
        // member list; drop subsets violating structural denials.
        let mut subsets: Vec<Vec<Cand>> = Vec::new();
        let m = cands.len();
        for mask in 0u64..(1u64 << m) {
            let subset: Vec<Cand> = (0..m).filter(|k| mask >> k & 1 == 1).map(|k| cands[k]).collect();
            if let Some(cap) = cfg.max_occurrences_per_step {
                if subset.len() > cap {
                    continue;
                }
            }
            // At the last boundary every open copy must end.
            if boundary + 1 == self.h
                && open
                    .iter()
                    .any(|&(d, i1)| !subset.contains(&Cand::End(d, i1)))
            {
                continue;
            }
            // A new copy may not overlap a still-open copy of the same action.
            let overlaps = subset.iter().any(|c| {
                matches!(c, Cand::Start(d)
                    if open.iter().any(|&(od, oi1)| od == *d && !subset.contains(&Cand::End(od, oi1))))
            });
            if overlaps {
                continue;
            }
            subsets.push(subset);
        }
        subsets.sort_by(|a, b| (a.len(), a.as_slice()).cmp(&(b.len(), b.as_slice())));

        // Must-semantics components.
        let mut forced_proc_ends = Vec::new();
        let mut choices = Vec::new();
        for (pi, pr) in self.g.processes.iter().enumerate() {
            let inprogr = bools[self.bf_pos[&BFluent::Proc(pi)]];
            let pre = self.sat_bool(&bools, &pr.pre_bool);
            match (inprogr, pre) {
                (true, false) => forced_proc_ends.push(pi),
                (true, true) => choices.push(MustChoice {
                    owner: WitnessOwner::ProcEnd,
                    idx: pi,
                    alts: 1 + pr.pre_num.len(),
                }),
                (false, true) => choices.push(MustChoice {
                    owner: WitnessOwner::ProcStart,
                    idx: pi,
                    alts: 1 + pr.pre_num.len(),
                }),
                (false, false) => {}
            }
        }
        for (ei, ev) in self.g.events.iter().enumerate() {
            if self.sat_bool(&bools, &ev.pre_bool) {
                choices.push(MustChoice {
                    owner: WitnessOwner::Event,
                    idx: ei,
                    alts: 1 + ev.pre_num.len(),
                });
            }
        }
        let combos: u64 = choices.iter().map(|c| c.alts as u64).product();
        let total = subsets.len() as u64 * combos;
        Frame {
            bools,
            subsets,
            forced_proc_ends,
            choices,
            next: 0,
            total,
        }
    }

    /// Decodes flattened decision `code` of `f` into a step decision.
    fn decode(&self, f: &Frame, code: u64) -> StepDecision {
        let combos: u64 = f.choices.iter().map(|c| c.alts as u64).product();
        let subset = &f.subsets[(code / combos.max(1)) as usize];
        let mut rest = code % combos.max(1);
        let mut dec = StepDecision::default();
        for c in subset {
            match c {
                Cand::Action(a) => dec.actions.push(*a),
                Cand::Start(d) => dec.dur_starts.push(*d),
                Cand::End(d, i1) => dec.dur_ends.push((*d, *i1)),
            }
        }
        dec.proc_ends.extend(f.forced_proc_ends.iter().copied());
        // Rightmost choice varies fastest.
        let mut picks = vec![0usize; f.choices.len()];
        for (k, c) in f.choices.iter().enumerate().rev() {
            picks[k] = (rest % c.alts as u64) as usize;
            rest /= c.alts as u64;
        }
        for (c, &pick) in f.choices.iter().zip(&picks) {
            match (c.owner, pick) {
                (WitnessOwner::ProcStart, 0) => dec.proc_starts.push(c.idx),
                (WitnessOwner::ProcStart, k) => {
                    dec.witnesses.push((WitnessOwner::ProcStart, c.idx, k - 1))
                }
                (WitnessOwner::ProcEnd, 0) => dec.proc_stays.push(c.idx),
                (WitnessOwner::ProcEnd, k) => {
                    dec.proc_ends.push(c.idx);
                    dec.witnesses.push((WitnessOwner::ProcEnd, c.idx, k - 1));
                }
                (WitnessOwner::Event, 0) => dec.events.push(c.idx),
                (WitnessOwner::Event, k) => {
                    dec.witnesses.push((WitnessOwner::Event, c.idx, k - 1))
                }
            }
        }
        dec
    }

    /// Applies `dec` to the state at `boundary`; `None` when opposing Boolean
    /// effects collide (consistency denial).
    fn apply(&self, boundary: usize, bools: &[bool], dec: &StepDecision) -> Option<Vec<bool>> {
        let mut set: BTreeMap<usize, bool> = BTreeMap::new();
        let put = |set: &mut BTreeMap<usize, bool>, pos: usize, val: bool| -> bool {
            match set.insert(pos, val) {
                Some(old) if old != val => false,
                _ => true,
            }
        };
        let eff_bool = |set: &mut BTreeMap<usize, bool>, effs: &[(usize, bool)]| -> bool {
            effs.iter().all(|(b, pos)| put(set, self.base(*b), *pos))
        };
        let mut ok = true;
        for &a in &dec.actions {
            ok &= eff_bool(&mut set, &self.g.actions[a].eff_bool);
        }
        for &d in &dec.dur_starts {
            ok &= eff_bool(&mut set, &self.g.duratives[d].eff_start_bool);
            ok &= put(&mut set, self.bf_pos[&BFluent::DurCopy(d, boundary)], true);
        }
        for &(d, i1) in &dec.dur_ends {
            ok &= eff_bool(&mut set, &self.g.duratives[d].eff_end_bool);
            ok &= put(&mut set, self.bf_pos[&BFluent::DurCopy(d, i1)], false);
        }
        for &p in &dec.proc_starts {
            ok &= put(&mut set, self.bf_pos[&BFluent::Proc(p)], true);
        }
        for &p in &dec.proc_ends {
            ok &= put(&mut set, self.bf_pos[&BFluent::Proc(p)], false);
        }
        for &e in &dec.events {
            ok &= eff_bool(&mut set, &self.g.events[e].eff_bool);
        }
        if !ok {
            return None;
        }
        let mut out = bools.to_vec();
        for (pos, val) in set {
            out[pos] = val;
        }
        Some(out)
    }

    fn is_idle(dec: &StepDecision) -> bool {
        dec.actions.is_empty()
            && dec.dur_starts.is_empty()
            && dec.dur_ends.is_empty()
            && dec.proc_starts.is_empty()
            && dec.proc_ends.is_empty()
            && dec.events.is_empty()
    }
}

/// Yields the next Boolean-consistent candidate, or `None` when the space at
/// this horizon is exhausted or the candidate limit is hit.
pub fn next_candidate(
    p: &CaspProgram,
    cfg: &SearchConfig,
    cursor: &mut Cursor,
) -> Option<CandidateTrace> {
    if cursor.exhausted {
        return None;
    }
    if let Some(limit) = cfg.candidate_limit {
        if cursor.yielded >= limit {
            cursor.exhausted = true;
            return None;
        }
    }
    let ctx = Ctx::new(p);

    if !cursor.started {
        cursor.started = true;
        if ctx.h == 0 {
            cursor.exhausted = true;
            let bools = ctx.init_bools();
            if ctx.sat_bool(&bools, &p.instance.goal_bool) {
                cursor.yielded += 1;
                return Some(build_trace(p, &ctx, &[], &[bools]));
            }
            return None;
        }
        let f = ctx.make_frame(0, ctx.init_bools(), cfg);
        cursor.stack.push(f);
    }

    loop {
        let depth = cursor.stack.len();
        if depth == 0 {
            cursor.exhausted = true;
            return None;
        }
        let boundary = depth - 1;
        if cursor.stack.last().unwrap().next >= cursor.stack.last().unwrap().total {
            cursor.stack.pop();
            continue;
        }
        let frame = cursor.stack.last_mut().unwrap();
        let code = frame.next;
        frame.next += 1;
        let dec = ctx.decode(frame, code);
        if cfg.no_idle_steps && boundary + 1 < ctx.h && Ctx::is_idle(&dec) {
            continue;
        }
        let frame = cursor.stack.last().unwrap();
        let Some(next_bools) = ctx.apply(boundary, &frame.bools, &dec) else {
            continue;
        };
        if boundary + 1 == ctx.h {
            if !ctx.sat_bool(&next_bools, &p.instance.goal_bool) {
                continue;
            }
            let decisions: Vec<StepDecision> = cursor
                .stack
                .iter()
                .map(|f| ctx.decode(f, f.next - 1))
                .collect();
            let mut states = vec![ctx.init_bools()];
            for (i, d) in decisions.iter().enumerate() {
                let s = ctx.apply(i, states.last().unwrap(), d).unwrap();
                states.push(s);
            }
            cursor.yielded += 1;
            return Some(build_trace(p, &ctx, &decisions, &states));
        }
        let f = ctx.make_frame(boundary + 1, next_bools, cfg);
        cursor.stack.push(f);
    }
}

/// Assembles the total atom assignment for a decided timeline: state atoms
/// and chosen occurrences directly, then a least fixpoint over the program's
/// definite rules for derived atoms (aggregated in-progress markers, `ab`,
/// `assigned`, forced process ends, ...).
fn build_trace(
    p: &CaspProgram,
    ctx: &Ctx,
    decisions: &[StepDecision],
    states: &[Vec<bool>],
) -> CandidateTrace {
    let mut atoms = vec![false; p.atom_names.len()];
    for (i, bools) in states.iter().enumerate() {
        for (k, f) in ctx.bfs.iter().enumerate() {
            let id = if bools[k] {
                p.index.holds[&(*f, i)]
            } else {
                p.index.nholds[&(*f, i)]
            };
            atoms[id] = true;
        }
    }
    for (i, dec) in decisions.iter().enumerate() {
        for &a in &dec.actions {
            atoms[p.index.occ_action[&(a, i)]] = true;
        }
        for &d in &dec.dur_starts {
            atoms[p.index.occ_start_dur[&(d, i)]] = true;
        }
        for &(d, i1) in &dec.dur_ends {
            atoms[p.index.occ_end_dur[&(d, i1, i)]] = true;
        }
        for &pr in &dec.proc_starts {
            atoms[p.index.occ_start_proc[&(pr, i)]] = true;
        }
        for &pr in &dec.proc_ends {
            atoms[p.index.occ_end_proc[&(pr, i)]] = true;
        }
        for &e in &dec.events {
            atoms[p.index.occ_event[&(e, i)]] = true;
        }
        for &pr in &dec.proc_stays {
            atoms[p.index.proc_stay[&(pr, i)]] = true;
        }
        for &(owner, idx, k) in &dec.witnesses {
            let id = match owner {
                WitnessOwner::ProcStart => p.index.proc_start_wit[&(idx, i, k)],
                WitnessOwner::ProcEnd => p.index.proc_end_wit[&(idx, i, k)],
                WitnessOwner::Event => p.index.event_wit[&(idx, i, k)],
            };
            atoms[id] = true;
        }
    }
    // Close under definite rules. The only negative literals in Atom-headed
    // rules mention holds atoms, which are already at their final values.
    loop {
        let mut changed = false;
        for r in &p.rules {
            if let Head::Atom(a) = r.head {
                if !atoms[a]
                    && r.body.iter().all(|l| match l {
                        Lit::Pos(x) => atoms[*x],
                        Lit::Neg(x) => !atoms[*x],
                    })
                {
                    atoms[a] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    CandidateTrace {
        atoms,
        horizon: p.horizon,
        steps: decisions.to_vec(),
    }
}

/// The numerical constraints a candidate commits to: exactly those whose rule
/// bodies the trace satisfies, over the program's full variable space.
pub fn induced_constraints(t: &CandidateTrace, p: &CaspProgram) -> ConstraintNetwork {
    let mut net = p.network_skeleton();
    for r in &p.rules {
        if let Head::Constraint(ci) = r.head {
            if r.body.iter().all(|l| t.holds(l)) {
                let c = &p.constraints[ci];
                let label = format!(
                    "{}{}{}",
                    crate::encoding::expr_text(&c.lhs, &p.cvar_names),
                    crate::encoding::op_text(c.op),
                    crate::encoding::expr_text(&c.rhs, &p.cvar_names)
                );
                net.add(c.op, c.lhs.clone(), c.rhs.clone(), label);
            }
        }
    }
    net
}

/// Checks every Boolean rule of the program against a trace; returns the
/// rendered rules that are violated. Search output must always be clean.
pub fn violated_rules(t: &CandidateTrace, p: &CaspProgram) -> Vec<String> {
    let mut out = Vec::new();
    for r in &p.rules {
        let body_sat = r.body.iter().all(|l| t.holds(l));
        let bad = match &r.head {
            Head::False => body_sat,
            Head::Atom(a) => body_sat && !t.atoms[*a],
            Head::Choice { atoms, lo, hi } => {
                let n = atoms.iter().filter(|a| t.atoms[**a]).count() as u32;
                body_sat && !(*lo <= n && n <= *hi)
            }
            Head::Constraint(_) => false,
        };
        if bad {
            let body: Vec<String> = r
                .body
                .iter()
                .map(|l| match l {
                    Lit::Pos(a) => p.atom_names[*a].clone(),
                    Lit::Neg(a) => format!("not {}", p.atom_names[*a]),
                })
                .collect();
            out.push(format!("{:?} :- {}", r.head, body.join(", ")));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{compose, encode_instance, encode_planning_module};
    use crate::pddl::{ground, parse_domain, parse_problem};

    fn program(domain: &str, problem: &str, h: usize) -> CaspProgram {
        let d = parse_domain(domain).unwrap();
        let pr = parse_problem(problem, &d).unwrap();
        let g = ground(&d, &pr).unwrap();
        compose(&encode_instance(&g, h), &encode_planning_module(&g, h))
    }

    const BALL_DOMAIN: &str = r#"
        (define (domain ball)
          (:requirements :typing :fluents :time)
          (:predicates (held))
          (:functions (height) (velocity))
          (:process falling
            :parameters ()
            :precondition (and (not (held)) (> (height) 0))
            :effect (decrease (height) (* #t (velocity)))))
    "#;
    const BALL_PROBLEM: &str = r#"
        (define (problem drop) (:domain ball)
          (:init (= (height) 10) (= (velocity) 2))
          (:goal (not (held))))
    "#;

    #[test]
    fn falling_ball_horizon_one_has_exactly_two_candidates() {
        let p = program(BALL_DOMAIN, BALL_PROBLEM, 1);
        let cfg = SearchConfig::default();
        let mut cur = Cursor::default();
        let mut got = Vec::new();
        while let Some(t) = next_candidate(&p, &cfg, &mut cur) {
            assert!(violated_rules(&t, &p).is_empty(), "{:?}", violated_rules(&t, &p));
            got.push(t);
        }
        assert_eq!(got.len(), 2);
        // First candidate: process starts (trigger-first ordering).
        assert_eq!(got[0].steps[0].proc_starts, vec![0]);
        assert!(got[0].steps[0].witnesses.is_empty());
        // Second: the numeric precondition is chosen false instead.
        assert!(got[1].steps[0].proc_starts.is_empty());
        assert_eq!(got[1].steps[0].witnesses, vec![(WitnessOwner::ProcStart, 0, 0)]);
    }

    #[test]
    fn induced_constraints_differ_between_branches() {
        let p = program(BALL_DOMAIN, BALL_PROBLEM, 1);
        let cfg = SearchConfig::default();
        let mut cur = Cursor::default();
        let a = next_candidate(&p, &cfg, &mut cur).unwrap();
        let b = next_candidate(&p, &cfg, &mut cur).unwrap();
        let na = induced_constraints(&a, &p);
        let nb = induced_constraints(&b, &p);
        let labels = |n: &ConstraintNetwork| -> Vec<String> {
            n.constraints.iter().map(|c| c.label.clone()).collect()
        };
        // Branch a commits to height > 0 at state 0; branch b to its complement.
        assert!(labels(&na).iter().any(|l| l == "v_final(height,0)>0"));
        assert!(labels(&nb).iter().any(|l| l == "v_final(height,0)<=0"));
    }

    #[test]
    fn horizon_zero_network_is_frame_plus_init() {
        const D: &str = r#"
            (define (domain tiny)
              (:requirements :fluents)
              (:predicates (p))
              (:functions (n))
              (:action noop :parameters () :precondition (p) :effect (not (p))))
        "#;
        const P: &str = r#"
            (define (problem t0) (:domain tiny)
              (:init (p) (= (n) 5))
              (:goal (p)))
        "#;
        let p = program(D, P, 0);
        let mut cur = Cursor::default();
        let t = next_candidate(&p, &SearchConfig::default(), &mut cur).unwrap();
        assert!(t.steps.is_empty());
        let net = induced_constraints(&t, &p);
        let labels: Vec<&str> = net.constraints.iter().map(|c| c.label.as_str()).collect();
        assert_eq!(
            labels,
            vec![
                "start(0)==0",
                "end(0)>=start(0)",
                "v_initial(n,0)==5",
                "v_final(n,0)==v_initial(n,0)",
            ]
        );
        assert!(next_candidate(&p, &SearchConfig::default(), &mut cur).is_none());
    }

    #[test]
    fn enumeration_orders_fewer_occurrences_first() {
        const D: &str = r#"
            (define (domain acts)
              (:requirements :fluents)
              (:predicates (g))
              (:action a :parameters () :effect (g))
              (:action b :parameters () :effect (g)))
        "#;
        const P: &str = r#"
            (define (problem one) (:domain acts) (:init) (:goal (g)))
        "#;
        let p = program(D, P, 1);
        let cfg = SearchConfig::default();
        let mut cur = Cursor::default();
        let mut seen = Vec::new();
        while let Some(t) = next_candidate(&p, &cfg, &mut cur) {
            seen.push(t.steps[0].actions.clone());
        }
        // Goal needs at least one action; order: {a}, {b}, {a,b}.
        assert_eq!(seen, vec![vec![0], vec![1], vec![0, 1]]);
    }

    #[test]
    fn candidate_limit_stops_enumeration() {
        let p = program(BALL_DOMAIN, BALL_PROBLEM, 1);
        let cfg = SearchConfig {
            candidate_limit: Some(1),
            ..Default::default()
        };
        let mut cur = Cursor::default();
        assert!(next_candidate(&p, &cfg, &mut cur).is_some());
        assert!(next_candidate(&p, &cfg, &mut cur).is_none());
    }

    #[test]
    fn durative_copy_must_close_before_horizon() {
        const D: &str = r#"
            (define (domain dur)
              (:requirements :fluents :durative-actions)
              (:predicates (done))
              (:functions (x))
              (:durative-action work
                :parameters ()
                :duration (= ?duration 4)
                :condition (and)
                :effect (and (at end (done)))))
        "#;
        const P: &str = r#"
            (define (problem w) (:domain dur) (:init (= (x) 0)) (:goal (done)))
        "#;
        let p = program(D, P, 2);
        let cfg = SearchConfig::default();
        let mut cur = Cursor::default();
        let mut n = 0;
        while let Some(t) = next_candidate(&p, &cfg, &mut cur) {
            assert!(violated_rules(&t, &p).is_empty());
            // Every candidate reaching the goal must have start at 0, end at 1.
            assert_eq!(t.steps[0].dur_starts, vec![0]);
            assert_eq!(t.steps[1].dur_ends, vec![(0, 0)]);
            n += 1;
        }
        assert_eq!(n, 1);
    }
}
