//! Continuous validation of timed plans, constraint expansion, and
//! ε-separation.
//!
//! The search and the numeric layer only check conditions at state
//! boundaries. [`simulate`] replays a plan against the continuous semantics:
//! between happenings, numeric fluents evolve by explicit Euler integration
//! with sub-steps no larger than the granularity (exact for constant rates),
//! processes activate and deactivate exactly when their preconditions hold,
//! and over-all invariants, event enabledness, and the goal are audited at
//! every sub-step. On a violation, [`expand`] synthesizes fresh variables for
//! the fluent values at the violation timepoint and asserts the broken
//! invariant over them, so the numeric layer can repair the plan.
//! [`epsilon_separate`] shifts interfering simultaneous happenings apart.

use std::collections::BTreeSet;

use num_rational::BigRational;
use serde::Serialize;
use thiserror::Error;

use crate::encoding::CaspProgram;
use crate::numeric::{ConstraintNetwork, NumExpr, DEFAULT_DOMAIN};
use crate::pddl::ast::{CmpOp, Dir};
use crate::pddl::ground::{GExpr, GroundCmp, GroundInstance, NumId};

#[derive(Debug, Error)]
pub enum ValidateError {
    #[error("malformed plan: {0}")]
    MalformedPlan(String),
    #[error("separation failed: {0}")]
    SeparationFailed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PlanActionKind {
    /// Index into `GroundInstance::actions`.
    Instant(usize),
    /// Index into `GroundInstance::duratives`.
    Durative(usize),
}

#[derive(Debug, Clone)]
pub struct Happening {
    pub time: f64,
    pub kind: PlanActionKind,
    /// Canonical ground name, e.g. `refuel(tank1)`.
    pub name: String,
    /// 0 for instantaneous actions.
    pub duration: f64,
    /// (boundary step, ordinal within the step) in the originating trace.
    pub provenance: Option<(usize, usize)>,
}

/// A finite set of timed happenings plus, when extracted from a solved
/// candidate, the solved end times of each discretization state.
#[derive(Debug, Clone, Default)]
pub struct TimedPlan {
    pub happenings: Vec<Happening>,
    /// Solved `end(i)` for states 0..=H; empty when loaded from a file.
    pub state_times: Vec<f64>,
}

impl TimedPlan {
    pub fn makespan(&self) -> f64 {
        self.happenings
            .iter()
            .map(|h| h.time + h.duration)
            .fold(0.0, f64::max)
    }

    /// The discretization state containing global time `t`.
    fn enclosing_step(&self, t: f64) -> usize {
        if self.state_times.is_empty() {
            return 0;
        }
        // State i spans [end(i-1), end(i)] with end(-1) = 0.
        for (i, &e) in self.state_times.iter().enumerate() {
            if t <= e + 1e-9 {
                return i;
            }
        }
        self.state_times.len() - 1
    }
}

/// A continuous source active during a simulated segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum ContSourceRef {
    Proc(usize),
    Dur(usize),
}

#[derive(Debug, Clone)]
pub struct Violation {
    /// The constraint that must hold at `t_star`; `None` when the failure is
    /// purely Boolean (not repairable by expansion).
    pub condition: Option<GroundCmp>,
    pub condition_text: String,
    /// Which invariant broke: an action/process/event name or `goal`.
    pub owner: String,
    pub t_star: f64,
    /// Enclosing discretization state.
    pub step: usize,
    /// Continuous sources active when the violation was observed.
    pub active: Vec<ContSourceRef>,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violation: Option<Violation>,
    /// Sampled (time, numeric fluent values) trajectory.
    pub samples: Vec<(f64, Vec<f64>)>,
}

impl ValidationReport {
    pub fn valid(&self) -> bool {
        self.violation.is_none()
    }

    pub fn to_json(&self, g: &GroundInstance) -> serde_json::Value {
        serde_json::json!({
            "verdict": if self.valid() { "valid" } else { "invalid" },
            "violation": self.violation.as_ref().map(|v| serde_json::json!({
                "condition": v.condition_text,
                "owner": v.owner,
                "time": v.t_star,
                "step": v.step,
            })),
            "fluents": g.num_fluents,
            "samples": self.samples.iter().map(|(t, vals)| {
                serde_json::json!({ "t": t, "values": vals })
            }).collect::<Vec<_>>(),
        })
    }
}

// --- plan text format --------------------------------------------------------

/// Renders `refuel(tank1)` as `(refuel tank1)`.
fn paren_form(name: &str) -> String {
    match name.split_once('(') {
        None => format!("({name})"),
        Some((head, rest)) => {
            let args = rest.trim_end_matches(')').replace(',', " ");
            format!("({head} {args})")
        }
    }
}

/// One happening per line: `t: (action args) [d]`, 3 decimals.
pub fn write_plan(plan: &TimedPlan) -> String {
    let mut out = String::new();
    for h in &plan.happenings {
        out.push_str(&format!(
            "{:.3}: {} [{:.3}]\n",
            h.time,
            paren_form(&h.name),
            h.duration
        ));
    }
    out
}

/// Parses the plan text format, resolving names against the instance.
pub fn parse_plan(text: &str, g: &GroundInstance) -> Result<TimedPlan, ValidateError> {
    let mut happenings = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        let bad = || ValidateError::MalformedPlan(format!("line {}: `{line}`", lineno + 1));
        let (t, rest) = line.split_once(':').ok_or_else(bad)?;
        let t: f64 = t.trim().parse().map_err(|_| bad())?;
        let rest = rest.trim();
        let (act, dur) = match rest.rsplit_once('[') {
            Some((a, d)) => {
                let d: f64 = d.trim_end_matches(']').trim().parse().map_err(|_| bad())?;
                (a.trim(), d)
            }
            None => (rest, 0.0),
        };
        let inner = act
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(bad)?;
        let mut parts = inner.split_whitespace();
        let head = parts.next().ok_or_else(bad)?;
        let args: Vec<&str> = parts.collect();
        let name = if args.is_empty() {
            head.to_string()
        } else {
            format!("{head}({})", args.join(","))
        };
        let kind = if let Some(i) = g.actions.iter().position(|a| a.name == name) {
            PlanActionKind::Instant(i)
        } else if let Some(i) = g.duratives.iter().position(|d| d.name == name) {
            PlanActionKind::Durative(i)
        } else {
            return Err(ValidateError::MalformedPlan(format!(
                "unknown action `{name}`"
            )));
        };
        happenings.push(Happening {
            time: t,
            kind,
            name,
            duration: dur,
            provenance: None,
        });
    }
    Ok(TimedPlan {
        happenings,
        state_times: Vec::new(),
    })
}

// --- numeric evaluation helpers ----------------------------------------------

fn geval(e: &GExpr, vals: &[f64]) -> f64 {
    match e {
        GExpr::Const(c) => rat_f64(c),
        GExpr::Fluent(n) => vals[*n],
        GExpr::Duration => f64::NAN,
        GExpr::Add(a, b) => geval(a, vals) + geval(b, vals),
        GExpr::Sub(a, b) => geval(a, vals) - geval(b, vals),
        GExpr::Mul(a, b) => geval(a, vals) * geval(b, vals),
        GExpr::Div(a, b) => geval(a, vals) / geval(b, vals),
        GExpr::Sqrt(a) => geval(a, vals).sqrt(),
        GExpr::Pow(a, b) => geval(a, vals).powf(geval(b, vals)),
    }
}

fn rat_f64(c: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    c.to_f64().unwrap_or(f64::NAN)
}

/// A condition is treated as satisfied when it fails by at most `tol`
/// (boundary dust tolerance).
pub fn cmp_sat(cmp: &GroundCmp, vals: &[f64], tol: f64) -> bool {
    let d = geval(&cmp.lhs, vals) - geval(&cmp.rhs, vals);
    match cmp.op {
        CmpOp::Lt | CmpOp::Le => d <= tol,
        CmpOp::Gt | CmpOp::Ge => d >= -tol,
        CmpOp::Eq => d.abs() <= tol,
        CmpOp::Ne => d.abs() > tol,
    }
}

/// Strict satisfaction with margin, used for the must-semantics audit: a
/// value inside the tolerance band counts as "at the boundary", not enabled.
fn cmp_margin(cmp: &GroundCmp, vals: &[f64], tol: f64) -> bool {
    let d = geval(&cmp.lhs, vals) - geval(&cmp.rhs, vals);
    match cmp.op {
        CmpOp::Lt | CmpOp::Le => d < -tol,
        CmpOp::Gt | CmpOp::Ge => d > tol,
        CmpOp::Eq => false,
        CmpOp::Ne => d.abs() > tol,
    }
}

fn cmp_text(cmp: &GroundCmp, g: &GroundInstance) -> String {
    fn go(e: &GExpr, g: &GroundInstance) -> String {
        match e {
            GExpr::Const(c) => crate::pddl::render::rational_text(c),
            GExpr::Fluent(n) => g.num_fluents[*n].clone(),
            GExpr::Duration => "?duration".into(),
            GExpr::Add(a, b) => format!("({}+{})", go(a, g), go(b, g)),
            GExpr::Sub(a, b) => format!("({}-{})", go(a, g), go(b, g)),
            GExpr::Mul(a, b) => format!("({}*{})", go(a, g), go(b, g)),
            GExpr::Div(a, b) => format!("({}/{})", go(a, g), go(b, g)),
            GExpr::Sqrt(a) => format!("sqrt({})", go(a, g)),
            GExpr::Pow(a, b) => format!("pow({},{})", go(a, g), go(b, g)),
        }
    }
    format!("{}{}{}", go(&cmp.lhs, g), cmp.op.text(), go(&cmp.rhs, g))
}

/// Default integration granularity: min(0.1, shortest inter-happening gap/10).
pub fn default_granularity(plan: &TimedPlan) -> f64 {
    let mut times: Vec<f64> = plan
        .happenings
        .iter()
        .flat_map(|h| [h.time, h.time + h.duration])
        .collect();
    times.sort_by(f64::total_cmp);
    let mut gap = f64::INFINITY;
    for w in times.windows(2) {
        let d = w[1] - w[0];
        if d > 1e-9 {
            gap = gap.min(d);
        }
    }
    f64::min(0.1, gap / 10.0).max(1e-9)
}

// --- simulation ----------------------------------------------------------------

const DEFAULT_SIM_TOL: f64 = 1e-6;

struct Sim<'a> {
    g: &'a GroundInstance,
    tol: f64,
    bools: Vec<bool>,
    vals: Vec<f64>,
    /// Durative happenings currently executing (index into plan.happenings).
    executing: Vec<usize>,
    report: ValidationReport,
}

impl<'a> Sim<'a> {
    fn bool_sat(&self, conds: &[(usize, bool)]) -> bool {
        conds.iter().all(|(b, pos)| self.bools[*b] == *pos)
    }

    fn num_sat(&self, conds: &[GroundCmp]) -> bool {
        conds.iter().all(|c| cmp_sat(c, &self.vals, self.tol))
    }

    fn active_processes(&self) -> Vec<usize> {
        self.g
            .processes
            .iter()
            .enumerate()
            .filter(|(_, p)| self.bool_sat(&p.pre_bool) && self.num_sat(&p.pre_num))
            .map(|(i, _)| i)
            .collect()
    }

    fn active_sources(&self, plan: &TimedPlan) -> Vec<ContSourceRef> {
        let mut out: Vec<ContSourceRef> = self
            .active_processes()
            .into_iter()
            .map(ContSourceRef::Proc)
            .collect();
        for &hi in &self.executing {
            if let PlanActionKind::Durative(d) = plan.happenings[hi].kind {
                out.push(ContSourceRef::Dur(d));
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Current time derivative of every numeric fluent.
    fn derivatives(&self, plan: &TimedPlan) -> Vec<f64> {
        let mut dv = vec![0.0; self.g.num_fluents.len()];
        let add = |dv: &mut Vec<f64>, effs: &[(NumId, Dir, GExpr)], vals: &[f64]| {
            for (n, dir, rate) in effs {
                let r = geval(rate, vals);
                match dir {
                    Dir::Incr => dv[*n] += r,
                    Dir::Decr => dv[*n] -= r,
                }
            }
        };
        for p in self.active_processes() {
            add(&mut dv, &self.g.processes[p].eff_cont, &self.vals);
        }
        for &hi in &self.executing {
            if let PlanActionKind::Durative(d) = plan.happenings[hi].kind {
                add(&mut dv, &self.g.duratives[d].eff_cont, &self.vals);
            }
        }
        dv
    }

    fn fail(
        &mut self,
        plan: &TimedPlan,
        cond: Option<&GroundCmp>,
        owner: &str,
        t: f64,
    ) {
        let text = match cond {
            Some(c) => cmp_text(c, self.g),
            None => format!("Boolean condition of {owner}"),
        };
        self.report.violation = Some(Violation {
            condition: cond.cloned(),
            condition_text: text,
            owner: owner.to_string(),
            t_star: t,
            step: plan.enclosing_step(t),
            active: self.active_sources(plan),
        });
    }

    fn apply_bool(&mut self, effs: &[(usize, bool)]) {
        for (b, pos) in effs {
            self.bools[*b] = *pos;
        }
    }

    fn apply_num(&mut self, assigns: &[(NumId, GExpr)], steps: &[(NumId, Dir, GExpr)]) {
        let snapshot = self.vals.clone();
        for (n, e) in assigns {
            self.vals[*n] = geval(e, &snapshot);
        }
        for (n, dir, e) in steps {
            let v = geval(e, &snapshot);
            match dir {
                Dir::Incr => self.vals[*n] += v,
                Dir::Decr => self.vals[*n] -= v,
            }
        }
    }

    /// Fires enabled events to quiescence; reports a violation on a cascade
    /// that does not settle.
    fn fire_events(&mut self, plan: &TimedPlan, t: f64) {
        for _round in 0..100 {
            let mut fired = false;
            for ei in 0..self.g.events.len() {
                let ev = &self.g.events[ei];
                if self.bool_sat(&ev.pre_bool)
                    && ev.pre_num.iter().all(|c| cmp_margin(c, &self.vals, self.tol))
                {
                    let ev = ev.clone();
                    self.apply_bool(&ev.eff_bool);
                    self.apply_num(&ev.eff_assign, &ev.eff_step);
                    fired = true;
                }
            }
            if !fired {
                return;
            }
        }
        let name = self
            .g
            .events
            .first()
            .map(|e| e.name.clone())
            .unwrap_or_default();
        self.fail(plan, None, &format!("event cascade {name}"), t);
    }
}

/// Replays the plan under continuous semantics; the first violated invariant
/// ends the simulation.
pub fn simulate(
    g: &GroundInstance,
    plan: &TimedPlan,
    granularity: f64,
) -> Result<ValidationReport, ValidateError> {
    assert!(granularity > 0.0, "granularity must be positive");
    for h in &plan.happenings {
        let known = match h.kind {
            PlanActionKind::Instant(i) => g.actions.get(i).map(|a| &a.name),
            PlanActionKind::Durative(i) => g.duratives.get(i).map(|d| &d.name),
        };
        if known != Some(&h.name) {
            return Err(ValidateError::MalformedPlan(format!(
                "unknown happening `{}`",
                h.name
            )));
        }
        if h.time < 0.0 || h.duration < 0.0 {
            return Err(ValidateError::MalformedPlan(format!(
                "negative time in `{}`",
                h.name
            )));
        }
    }

    let mut sim = Sim {
        g,
        tol: DEFAULT_SIM_TOL,
        bools: g.init_bool.clone(),
        vals: g.init_num.iter().map(rat_f64).collect(),
        executing: Vec::new(),
        report: ValidationReport::default(),
    };

    // Boundary times: plan happening starts, durative ends, and the declared
    // state boundaries. The last state boundary may lie past every happening
    // (the goal can be reached during a trailing passive phase), so the plan's
    // own timeline decides when the simulation ends.
    let mut boundaries: Vec<f64> = vec![0.0];
    for h in &plan.happenings {
        boundaries.push(h.time);
        if matches!(h.kind, PlanActionKind::Durative(_)) {
            boundaries.push(h.time + h.duration);
        }
    }
    for &t in &plan.state_times {
        if t.is_finite() && t >= 0.0 {
            boundaries.push(t);
        }
    }
    boundaries.sort_by(f64::total_cmp);
    boundaries.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);
    let end_time = *boundaries.last().unwrap();

    let record = |sim: &Sim, t: f64| (t, sim.vals.clone());
    sim.report.samples.push(record(&sim, 0.0));

    for bi in 0..boundaries.len() {
        let t = boundaries[bi];
        // 1. Durative ends.
        for hi in 0..plan.happenings.len() {
            let h = &plan.happenings[hi];
            if let PlanActionKind::Durative(d) = h.kind {
                if (h.time + h.duration - t).abs() <= 1e-9 && sim.executing.contains(&hi) {
                    let d = g.duratives[d].clone();
                    if !sim.bool_sat(&d.cond_end_bool) {
                        sim.fail(plan, None, &d.name, t);
                        return Ok(sim.report);
                    }
                    if let Some(c) = d.cond_end_num.iter().find(|c| !cmp_sat(c, &sim.vals, sim.tol)) {
                        sim.fail(plan, Some(c), &d.name, t);
                        return Ok(sim.report);
                    }
                    sim.executing.retain(|&x| x != hi);
                    sim.apply_bool(&d.eff_end_bool);
                    sim.apply_num(&d.eff_end_assign, &d.eff_end_step);
                }
            }
        }
        // 2. Instantaneous actions and durative starts, in plan order.
        for hi in 0..plan.happenings.len() {
            let h = plan.happenings[hi].clone();
            if (h.time - t).abs() > 1e-9 {
                continue;
            }
            match h.kind {
                PlanActionKind::Instant(a) => {
                    let a = g.actions[a].clone();
                    if !sim.bool_sat(&a.pre_bool) {
                        sim.fail(plan, None, &a.name, t);
                        return Ok(sim.report);
                    }
                    if let Some(c) = a.pre_num.iter().find(|c| !cmp_sat(c, &sim.vals, sim.tol)) {
                        sim.fail(plan, Some(c), &a.name, t);
                        return Ok(sim.report);
                    }
                    sim.apply_bool(&a.eff_bool);
                    sim.apply_num(&a.eff_assign, &a.eff_step);
                }
                PlanActionKind::Durative(d) => {
                    let d = g.duratives[d].clone();
                    if !sim.bool_sat(&d.cond_start_bool) {
                        sim.fail(plan, None, &d.name, t);
                        return Ok(sim.report);
                    }
                    if let Some(c) = d.cond_start_num.iter().find(|c| !cmp_sat(c, &sim.vals, sim.tol)) {
                        sim.fail(plan, Some(c), &d.name, t);
                        return Ok(sim.report);
                    }
                    sim.apply_bool(&d.eff_start_bool);
                    sim.apply_num(&d.eff_start_assign, &d.eff_start_step);
                    sim.executing.push(hi);
                }
            }
        }
        // 3. Events triggered by the boundary effects.
        sim.fire_events(plan, t);
        if sim.report.violation.is_some() {
            return Ok(sim.report);
        }
        sim.report.samples.push(record(&sim, t));

        // 4. Integrate to the next boundary.
        let Some(&t_next) = boundaries.get(bi + 1) else {
            break;
        };
        let len = t_next - t;
        if len <= 1e-12 {
            continue;
        }
        // Keep a single simulation bounded: granularity is a request, not a
        // promise, when a segment would need an absurd number of sub-steps.
        const MAX_SUBSTEPS: f64 = 4_000_000.0;
        let n = (len / granularity).ceil().clamp(1.0, MAX_SUBSTEPS) as usize;
        let h_step = len / n as f64;
        let sample_every = (n / 100).max(1);
        for k in 1..=n {
            let dv = sim.derivatives(plan);
            for (v, d) in sim.vals.iter_mut().zip(&dv) {
                *v += h_step * d;
            }
            let tk = t + h_step * k as f64;
            // Over-all invariants of executing duratives.
            for &hi in &sim.executing.clone() {
                if let PlanActionKind::Durative(di) = plan.happenings[hi].kind {
                    let d = g.duratives[di].clone();
                    if !sim.bool_sat(&d.cond_over_bool) {
                        sim.fail(plan, None, &d.name, tk);
                        return Ok(sim.report);
                    }
                    if let Some(c) = d.cond_over_num.iter().find(|c| !cmp_sat(c, &sim.vals, sim.tol)) {
                        sim.fail(plan, Some(c), &d.name, tk);
                        return Ok(sim.report);
                    }
                }
            }
            // An event enabled strictly between boundaries should have fired.
            if k < n {
                for ev in g.events.clone() {
                    if sim.bool_sat(&ev.pre_bool)
                        && !ev.pre_num.is_empty()
                        && ev.pre_num.iter().all(|c| cmp_margin(c, &sim.vals, sim.tol))
                    {
                        let c = ev.pre_num[0].clone().complemented();
                        sim.fail(plan, Some(&c), &ev.name, tk);
                        return Ok(sim.report);
                    }
                    if sim.bool_sat(&ev.pre_bool) && ev.pre_num.is_empty() {
                        sim.fail(plan, None, &ev.name, tk);
                        return Ok(sim.report);
                    }
                }
            }
            if k % sample_every == 0 || k == n {
                sim.report.samples.push(record(&sim, tk));
            }
        }
    }

    // Goal at the end of the plan.
    if !sim.bool_sat(&g.goal_bool) {
        sim.fail(plan, None, "goal", end_time);
        return Ok(sim.report);
    }
    if let Some(c) = g.goal_num.iter().find(|c| !cmp_sat(c, &sim.vals, sim.tol)) {
        let c = c.clone();
        sim.fail(plan, Some(&c), "goal", end_time);
        return Ok(sim.report);
    }
    Ok(sim.report)
}

// --- expansion -----------------------------------------------------------------

/// Extends the network with fresh variables pinning each fluent of the
/// violated condition to its value at the violation timepoint, plus the
/// violated invariant over those variables. Original constraints untouched.
pub fn expand(
    report: &ValidationReport,
    net: &ConstraintNetwork,
    p: &CaspProgram,
) -> ConstraintNetwork {
    let viol = report
        .violation
        .as_ref()
        .expect("expand requires an invalid report");
    let cond = viol
        .condition
        .as_ref()
        .expect("expand requires a numeric condition");
    let g = &p.instance;
    let i = viol.step.min(p.horizon);
    let t_star = BigRational::from_float(viol.t_star).expect("finite violation time");

    let mut out = net.clone();
    let mut fls: Vec<NumId> = Vec::new();
    cond.lhs.fluents(&mut fls);
    cond.rhs.fluents(&mut fls);
    fls.sort();
    fls.dedup();

    let tstart_i = p.index.tstart[i];
    let mut fresh: Vec<(NumId, usize)> = Vec::new();
    for &n in &fls {
        let mut name = format!("v_at({},{},{:.6})", g.num_fluents[n], i, viol.t_star);
        while out.lookup(&name).is_some() {
            name.push('\'');
        }
        let v = out.var(&name);
        out.set_domain(v, -DEFAULT_DOMAIN, DEFAULT_DOMAIN);
        // v_at = v_initial(n,i) ± Σ rate·(t* − tstart(i)) over active sources.
        let mut rhs = NumExpr::Var(p.index.v_initial[&(n, i)]);
        let span = NumExpr::Sub(
            Box::new(NumExpr::Const(t_star.clone())),
            Box::new(NumExpr::Var(tstart_i)),
        );
        for src in &viol.active {
            let effs = match src {
                ContSourceRef::Proc(pi) => &g.processes[*pi].eff_cont,
                ContSourceRef::Dur(di) => &g.duratives[*di].eff_cont,
            };
            for (fn_, dir, rate) in effs {
                if *fn_ != n {
                    continue;
                }
                let rate_e = gexpr_at_initial(rate, i, p);
                let amount = crate::encoding::emul(rate_e, span.clone());
                rhs = match dir {
                    Dir::Incr => crate::encoding::eadd(rhs, amount),
                    Dir::Decr => crate::encoding::esub(rhs, amount),
                };
            }
        }
        let label = format!("{}==value@{:.6}", out.vars[v].name, viol.t_star);
        out.add(CmpOp::Eq, NumExpr::Var(v), rhs, label);
        fresh.push((n, v));
    }
    // The violated invariant over the fresh variables.
    let lhs = gexpr_subst(&cond.lhs, &fresh, i, p);
    let rhs = gexpr_subst(&cond.rhs, &fresh, i, p);
    out.add(
        cond.op,
        lhs,
        rhs,
        format!("invariant@{:.6}", viol.t_star),
    );
    out
}

/// Maps a ground expression to `v_initial` variables at state `i`.
fn gexpr_at_initial(e: &GExpr, i: usize, p: &CaspProgram) -> NumExpr {
    gexpr_subst(e, &[], i, p)
}

/// Like `gexpr_at_initial` but redirecting the listed fluents to fresh vars.
fn gexpr_subst(e: &GExpr, fresh: &[(NumId, usize)], i: usize, p: &CaspProgram) -> NumExpr {
    match e {
        GExpr::Const(c) => NumExpr::Const(c.clone()),
        GExpr::Fluent(n) => {
            let v = fresh
                .iter()
                .find(|(m, _)| m == n)
                .map(|(_, v)| *v)
                .unwrap_or_else(|| p.index.v_initial[&(*n, i)]);
            NumExpr::Var(v)
        }
        GExpr::Duration => unreachable!("?duration in an invariant"),
        GExpr::Add(a, b) => NumExpr::Add(
            Box::new(gexpr_subst(a, fresh, i, p)),
            Box::new(gexpr_subst(b, fresh, i, p)),
        ),
        GExpr::Sub(a, b) => NumExpr::Sub(
            Box::new(gexpr_subst(a, fresh, i, p)),
            Box::new(gexpr_subst(b, fresh, i, p)),
        ),
        GExpr::Mul(a, b) => NumExpr::Mul(
            Box::new(gexpr_subst(a, fresh, i, p)),
            Box::new(gexpr_subst(b, fresh, i, p)),
        ),
        GExpr::Div(a, b) => NumExpr::Div(
            Box::new(gexpr_subst(a, fresh, i, p)),
            Box::new(gexpr_subst(b, fresh, i, p)),
        ),
        GExpr::Sqrt(a) => NumExpr::Sqrt(Box::new(gexpr_subst(a, fresh, i, p))),
        GExpr::Pow(a, b) => NumExpr::Pow(
            Box::new(gexpr_subst(a, fresh, i, p)),
            Box::new(gexpr_subst(b, fresh, i, p)),
        ),
    }
}

// --- epsilon separation ----------------------------------------------------------

/// Boolean and numeric fluents a happening's conditions and effects touch.
fn footprint(g: &GroundInstance, h: &Happening) -> (BTreeSet<usize>, BTreeSet<usize>, BTreeSet<usize>, BTreeSet<usize>) {
    // (bool read, bool written, num read, num written)
    let mut br = BTreeSet::new();
    let mut bw = BTreeSet::new();
    let mut nr = BTreeSet::new();
    let mut nw = BTreeSet::new();
    let cmps = |cs: &[GroundCmp], nr: &mut BTreeSet<usize>| {
        for c in cs {
            let mut f = Vec::new();
            c.lhs.fluents(&mut f);
            c.rhs.fluents(&mut f);
            nr.extend(f);
        }
    };
    match h.kind {
        PlanActionKind::Instant(a) => {
            let a = &g.actions[a];
            br.extend(a.pre_bool.iter().map(|(b, _)| *b));
            cmps(&a.pre_num, &mut nr);
            bw.extend(a.eff_bool.iter().map(|(b, _)| *b));
            nw.extend(a.eff_assign.iter().map(|(n, _)| *n));
            nw.extend(a.eff_step.iter().map(|(n, _, _)| *n));
        }
        PlanActionKind::Durative(d) => {
            let d = &g.duratives[d];
            for conds in [&d.cond_start_bool, &d.cond_over_bool, &d.cond_end_bool] {
                br.extend(conds.iter().map(|(b, _)| *b));
            }
            for conds in [&d.cond_start_num, &d.cond_over_num, &d.cond_end_num] {
                cmps(conds, &mut nr);
            }
            for effs in [&d.eff_start_bool, &d.eff_end_bool] {
                bw.extend(effs.iter().map(|(b, _)| *b));
            }
            for effs in [&d.eff_start_assign, &d.eff_end_assign] {
                nw.extend(effs.iter().map(|(n, _)| *n));
            }
            for effs in [&d.eff_start_step, &d.eff_end_step] {
                nw.extend(effs.iter().map(|(n, _, _)| *n));
            }
            nw.extend(d.eff_cont.iter().map(|(n, _, _)| *n));
        }
    }
    (br, bw, nr, nw)
}

/// Two happenings interfere when one's effects touch a fluent the other's
/// conditions or effects mention.
pub fn interferes(g: &GroundInstance, a: &Happening, b: &Happening) -> bool {
    let (abr, abw, anr, anw) = footprint(g, a);
    let (bbr, bbw, bnr, bnw) = footprint(g, b);
    let hit = |w: &BTreeSet<usize>, r: &BTreeSet<usize>, ow: &BTreeSet<usize>| {
        w.intersection(r).next().is_some() || w.intersection(ow).next().is_some()
    };
    hit(&abw, &bbr, &bbw) || hit(&bbw, &abr, &abw) || hit(&anw, &bnr, &bnw) || hit(&bnw, &anr, &anw)
}

/// Shifts interfering simultaneous happenings forward by minimal amounts, in
/// provenance order, so every interfering pair is at least `eps` apart.
pub fn epsilon_separate(
    plan: &TimedPlan,
    eps: f64,
    g: &GroundInstance,
) -> Result<TimedPlan, ValidateError> {
    assert!(eps > 0.0, "eps must be positive");
    let mut order: Vec<usize> = (0..plan.happenings.len()).collect();
    order.sort_by(|&x, &y| {
        let hx = &plan.happenings[x];
        let hy = &plan.happenings[y];
        hx.time
            .total_cmp(&hy.time)
            .then(hx.provenance.cmp(&hy.provenance))
            .then(hx.name.cmp(&hy.name))
    });
    let mut out = plan.clone();
    let mut placed: Vec<usize> = Vec::new();
    for &idx in &order {
        let mut t = out.happenings[idx].time;
        for &p in &placed {
            if interferes(g, &plan.happenings[p], &plan.happenings[idx]) {
                let tp = out.happenings[p].time;
                if (t - tp).abs() < eps {
                    t = tp + eps;
                    // At large magnitudes `tp + eps` can round to a value
                    // whose gap from `tp` is still below eps; bump upward.
                    while t - tp < eps {
                        t = t.next_up();
                    }
                }
            }
        }
        out.happenings[idx].time = t;
        placed.push(idx);
    }
    // Verify the separation invariant outright.
    for (k, &x) in order.iter().enumerate() {
        for &y in &order[k + 1..] {
            if interferes(g, &plan.happenings[x], &plan.happenings[y])
                && (out.happenings[x].time - out.happenings[y].time).abs() < eps - 1e-12
            {
                return Err(ValidateError::SeparationFailed(format!(
                    "{} and {} remain closer than eps",
                    out.happenings[x].name, out.happenings[y].name
                )));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchdomains::{generate_instance, Family, InstanceSpec};
    use crate::pddl::{ground, parse_domain, parse_problem};

    fn instance(family: Family, k: usize) -> GroundInstance {
        let (d, p) = generate_instance(&InstanceSpec { family, k });
        let d = parse_domain(&d).unwrap();
        let p = parse_problem(&p, &d).unwrap();
        ground(&d, &p).unwrap()
    }

    fn happening(g: &GroundInstance, name: &str, time: f64, duration: f64) -> Happening {
        let kind = if let Some(i) = g.actions.iter().position(|a| a.name == name) {
            PlanActionKind::Instant(i)
        } else {
            PlanActionKind::Durative(g.duratives.iter().position(|d| d.name == name).unwrap())
        };
        Happening {
            time,
            kind,
            name: name.to_string(),
            duration,
            provenance: None,
        }
    }

    #[test]
    fn generator_plan_with_refuel_is_valid() {
        let g = instance(Family::GenLinear, 1);
        let plan = TimedPlan {
            happenings: vec![
                happening(&g, "generate", 0.0, 1000.0),
                happening(&g, "refuel(tank1)", 0.0, 12.5),
            ],
            state_times: Vec::new(),
        };
        let report = simulate(&g, &plan, 0.05).unwrap();
        assert!(report.valid(), "{:?}", report.violation);
        // Final fuel level: 980 − 1000·1 + 12.5·2 = 5.
        let (_, last) = report.samples.last().unwrap();
        let fuel = g.num_id("fuel_level").unwrap();
        assert!((last[fuel] - 5.0).abs() < 1e-6, "fuel {}", last[fuel]);
    }

    #[test]
    fn generator_without_refuel_breaks_invariant_near_980() {
        let g = instance(Family::GenLinear, 1);
        let plan = TimedPlan {
            happenings: vec![happening(&g, "generate", 0.0, 1000.0)],
            state_times: Vec::new(),
        };
        let report = simulate(&g, &plan, 0.05).unwrap();
        let v = report.violation.expect("invariant must break");
        assert_eq!(v.owner, "generate");
        assert!(v.condition.is_some(), "numeric violation is expandable");
        // fuel_level hits 0 at t = 980; detection within one granularity step.
        assert!((v.t_star - 980.0).abs() <= 0.05 + 1e-9, "t* = {}", v.t_star);
    }

    #[test]
    fn empty_plan_with_goal_true_initially_is_valid() {
        let d = parse_domain(
            "(define (domain trivial) (:requirements :fluents) (:functions (x))
             (:action bump :parameters () :precondition (>= (x) 0)
                      :effect (increase (x) 1)))",
        )
        .unwrap();
        let p = parse_problem(
            "(define (problem t1) (:domain trivial) (:init (= (x) 3))
             (:goal (>= (x) 2)))",
            &d,
        )
        .unwrap();
        let g = ground(&d, &p).unwrap();
        let report = simulate(&g, &TimedPlan::default(), 0.1).unwrap();
        assert!(report.valid());
    }

    #[test]
    fn plan_text_round_trips_with_three_decimals() {
        let g = instance(Family::GenLinear, 1);
        let plan = TimedPlan {
            happenings: vec![
                happening(&g, "generate", 0.0, 1000.0),
                happening(&g, "refuel(tank1)", 1.25, 12.5),
            ],
            state_times: Vec::new(),
        };
        let text = write_plan(&plan);
        assert_eq!(
            text,
            "0.000: (generate) [0.000]\n1.250: (refuel tank1) [12.500]\n"
                .replace("(generate) [0.000]", "(generate) [1000.000]")
        );
        let back = parse_plan(&text, &g).unwrap();
        assert_eq!(back.happenings.len(), 2);
        assert_eq!(back.happenings[1].name, "refuel(tank1)");
        assert!((back.happenings[1].time - 1.25).abs() < 1e-9);
        assert!((back.happenings[1].duration - 12.5).abs() < 1e-9);
    }

    #[test]
    fn parse_plan_rejects_unknown_action_and_garbage() {
        let g = instance(Family::GenLinear, 1);
        assert!(parse_plan("0.0: (warp drive) [1.0]", &g).is_err());
        assert!(parse_plan("not a plan line", &g).is_err());
        // Comments and blank lines are fine.
        let ok = parse_plan("; comment\n\n0.0: (generate) [1000.0]\n", &g).unwrap();
        assert_eq!(ok.happenings.len(), 1);
    }

    #[test]
    fn interfering_simultaneous_happenings_get_separated() {
        let g = instance(Family::CarLinear, 1);
        let plan = TimedPlan {
            happenings: vec![
                happening(&g, "accelerate", 1.0, 0.0),
                happening(&g, "decelerate", 1.0, 0.0),
            ],
            state_times: Vec::new(),
        };
        let sep = epsilon_separate(&plan, 0.001, &g).unwrap();
        let gap = (sep.happenings[0].time - sep.happenings[1].time).abs();
        assert!(gap >= 0.001, "gap {gap}");
    }

    #[test]
    fn separation_respects_eps_at_large_magnitudes() {
        let g = instance(Family::CarLinear, 1);
        let t = 500029996.80829775;
        let plan = TimedPlan {
            happenings: vec![
                happening(&g, "accelerate", t, 0.0),
                happening(&g, "decelerate", t + 1e-7, 0.0),
            ],
            state_times: Vec::new(),
        };
        let sep = epsilon_separate(&plan, 0.001, &g).unwrap();
        let gap = (sep.happenings[0].time - sep.happenings[1].time).abs();
        assert!(gap >= 0.001, "gap {gap}");
    }

    #[test]
    fn non_interfering_simultaneity_is_preserved() {
        let d = parse_domain(
            "(define (domain pair) (:requirements :fluents) (:functions (x) (y))
             (:action setx :parameters () :precondition (>= (x) 0) :effect (assign (x) 1))
             (:action sety :parameters () :precondition (>= (y) 0) :effect (assign (y) 1)))",
        )
        .unwrap();
        let p = parse_problem(
            "(define (problem p1) (:domain pair) (:init (= (x) 0) (= (y) 0))
             (:goal (and (>= (x) 1) (>= (y) 1))))",
            &d,
        )
        .unwrap();
        let g = ground(&d, &p).unwrap();
        let plan = TimedPlan {
            happenings: vec![
                happening(&g, "setx", 2.0, 0.0),
                happening(&g, "sety", 2.0, 0.0),
            ],
            state_times: Vec::new(),
        };
        let sep = epsilon_separate(&plan, 0.001, &g).unwrap();
        assert_eq!(sep.happenings[0].time, 2.0);
        assert_eq!(sep.happenings[1].time, 2.0);
    }

    #[test]
    fn default_granularity_tracks_shortest_gap() {
        let g = instance(Family::CarLinear, 1);
        let plan = TimedPlan {
            happenings: vec![
                happening(&g, "accelerate", 0.0, 0.0),
                happening(&g, "decelerate", 0.004, 0.0),
            ],
            state_times: Vec::new(),
        };
        let gran = default_granularity(&plan);
        assert!(gran <= 0.0004 + 1e-12, "gran {gran}");
        assert!(gran >= 1e-9);
    }
}
