//! The outer planning loop: candidate generation, numeric solving, continuous
//! validation, constraint expansion, and ε-separation, under a fixed-horizon
//! or iterative-deepening protocol.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use serde::Serialize;

use crate::encoding::{compose, emit_text, encode_instance, encode_planning_module, CaspProgram};
use crate::numeric::{
    solve, ConstraintNetwork, NumExpr, NumericSolution, Outcome as NumOutcome, SolveConfig,
};
use crate::pddl::ground::{GroundCmp, GroundInstance};
use crate::pddl::CmpOp;
use crate::search::{
    induced_constraints, next_candidate, CandidateTrace, Cursor, SearchConfig, StepDecision,
};
use crate::validate::{
    default_granularity, epsilon_separate, expand, simulate, Happening, PlanActionKind,
    TimedPlan, ValidationReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Enumerate candidates at exactly this horizon.
    Fixed(usize),
    /// Try horizons 0..=H_max, returning the first that admits a plan.
    Iterative(usize),
}

#[derive(Debug, Clone)]
pub struct PlannerConfig {
    pub protocol: Protocol,
    pub eps: f64,
    /// `None` selects min(0.1, shortest inter-happening gap / 10) per plan.
    pub granularity: Option<f64>,
    pub tol: f64,
    /// Node budget per numeric solve.
    pub solve_budget: u64,
    /// Expansion iterations per candidate before it is abandoned.
    pub expansion_cap: usize,
    pub timeout: Duration,
    pub search: SearchConfig,
    /// Collect the emitted program text in the result.
    pub collect_casp_text: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            protocol: Protocol::Iterative(30),
            eps: 0.001,
            granularity: None,
            tol: 1e-6,
            solve_budget: 20_000,
            expansion_cap: 20,
            timeout: Duration::from_secs(600),
            search: SearchConfig::default(),
            collect_casp_text: false,
        }
    }
}

/// Statistics schema `casplan-stats/1`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PlannerStats {
    pub schema: String,
    pub candidates: u64,
    pub csp_solves: u64,
    pub expansions: u64,
    pub numeric_unknowns: u64,
    pub horizons_tried: Vec<usize>,
    pub search_seconds: f64,
    pub solve_seconds: f64,
    pub validate_seconds: f64,
    pub wall_seconds: f64,
}

#[derive(Debug)]
pub enum PlanOutcome {
    Plan {
        plan: TimedPlan,
        report: ValidationReport,
        horizon: usize,
    },
    NoPlanAtBound,
    ResourceExhausted,
}

#[derive(Debug)]
pub struct PlannerResult {
    pub outcome: PlanOutcome,
    pub stats: PlannerStats,
    pub casp_text: Option<String>,
}

/// Projects the trace's occurrence atoms through the solved timeline into a
/// timed plan: instantaneous actions happen at `end(i)`; a durative copy
/// started at step i1 and ended at i2 becomes one triple at `end(i1)` with
/// duration `end(i2) − end(i1)`.
pub fn extract_plan(t: &CandidateTrace, s: &NumericSolution, p: &CaspProgram) -> TimedPlan {
    let tend: Vec<f64> = p.index.tend.iter().map(|&v| s.get(v)).collect();
    let g = &p.instance;
    let mut happenings = Vec::new();
    for (i, dec) in t.steps.iter().enumerate() {
        let mut ordinal = 0;
        for &a in &dec.actions {
            happenings.push(Happening {
                time: tend[i],
                kind: PlanActionKind::Instant(a),
                name: g.actions[a].name.clone(),
                duration: 0.0,
                provenance: Some((i, ordinal)),
            });
            ordinal += 1;
        }
        for &d in &dec.dur_starts {
            let i2 = t
                .steps
                .iter()
                .enumerate()
                .skip(i + 1)
                .find(|(_, later)| later.dur_ends.contains(&(d, i)))
                .map(|(j, _)| j)
                .expect("every started copy ends within the horizon");
            happenings.push(Happening {
                time: tend[i],
                kind: PlanActionKind::Durative(d),
                name: g.duratives[d].name.clone(),
                duration: tend[i2] - tend[i],
                provenance: Some((i, ordinal)),
            });
            ordinal += 1;
        }
    }
    happenings.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.provenance.cmp(&b.provenance)));
    TimedPlan {
        happenings,
        state_times: tend,
    }
}

pub fn plan(g: &GroundInstance, cfg: &PlannerConfig) -> PlannerResult {
    let start = Instant::now();
    let mut stats = PlannerStats {
        schema: "casplan-stats/1".to_string(),
        ..Default::default()
    };
    let mut casp_text = None;

    let horizons: Vec<usize> = match cfg.protocol {
        Protocol::Fixed(h) => vec![h],
        Protocol::Iterative(hmax) => (0..=hmax).collect(),
    };

    for h in horizons {
        stats.horizons_tried.push(h);
        match plan_at_horizon(g, cfg, h, start, &mut stats, &mut casp_text) {
            HorizonResult::Plan(plan, report) => {
                stats.wall_seconds = start.elapsed().as_secs_f64();
                return PlannerResult {
                    outcome: PlanOutcome::Plan {
                        plan,
                        report,
                        horizon: h,
                    },
                    stats,
                    casp_text,
                };
            }
            HorizonResult::Exhausted => continue,
            HorizonResult::OutOfResources => {
                stats.wall_seconds = start.elapsed().as_secs_f64();
                return PlannerResult {
                    outcome: PlanOutcome::ResourceExhausted,
                    stats,
                    casp_text,
                };
            }
        }
    }
    stats.wall_seconds = start.elapsed().as_secs_f64();
    PlannerResult {
        outcome: PlanOutcome::NoPlanAtBound,
        stats,
        casp_text,
    }
}

enum HorizonResult {
    Plan(TimedPlan, ValidationReport),
    Exhausted,
    OutOfResources,
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

    #[test]
    fn goal_true_initially_yields_empty_plan_at_horizon_zero() {
        const D: &str = r#"
            (define (domain triv) (:requirements :fluents) (:predicates (ok))
              (:action noop :parameters () :precondition (ok) :effect (ok)))
        "#;
        const P: &str = r#"
            (define (problem t) (:domain triv) (:init (ok)) (:goal (ok)))
        "#;
        let d = parse_domain(D).unwrap();
        let p = parse_problem(P, &d).unwrap();
        let g = ground(&d, &p).unwrap();
        let res = plan(&g, &PlannerConfig::default());
        match res.outcome {
            PlanOutcome::Plan { plan, horizon, .. } => {
                assert_eq!(horizon, 0);
                assert!(plan.happenings.is_empty());
            }
            o => panic!("expected plan, got {o:?}"),
        }
    }

    #[test]
    fn gen_linear_k1_refuel_duration_is_12_5() {
        let g = instance(Family::GenLinear, 1);
        let res = plan(&g, &PlannerConfig::default());
        match &res.outcome {
            PlanOutcome::Plan { plan, .. } => {
                let refuel = plan
                    .happenings
                    .iter()
                    .find(|h| h.name.starts_with("refuel"))
                    .expect("plan refuels");
                assert!((refuel.duration - 12.5).abs() <= 1e-6, "{}", refuel.duration);
                let generate = plan
                    .happenings
                    .iter()
                    .find(|h| h.name == "generate")
                    .expect("plan generates");
                assert!((generate.duration - 1000.0).abs() <= 1e-6);
            }
            o => panic!("expected plan, got {o:?}"),
        }
    }

    #[test]
    fn car_linear_k1_plan_validates() {
        let g = instance(Family::CarLinear, 1);
        let res = plan(&g, &PlannerConfig::default());
        match &res.outcome {
            PlanOutcome::Plan { plan, report, .. } => {
                assert!(report.valid());
                // Only instantaneous actions; never the moving process.
                assert!(plan.happenings.iter().all(|h| h.duration == 0.0));
                assert!(plan.happenings.iter().all(|h| !h.name.contains("moving")));
            }
            o => panic!("expected plan, got {o:?}"),
        }
    }
}

/// Read/write footprint of the plan-visible occurrences (actions, durative
/// starts and ends) of one step. `None` when the step has no such occurrence.
#[derive(Default)]
struct StepFootprint {
    bool_read: BTreeSet<usize>,
    bool_write: BTreeSet<usize>,
    num_read: BTreeSet<usize>,
    num_write: BTreeSet<usize>,
}

impl StepFootprint {
    fn read_cmps(&mut self, cs: &[GroundCmp]) {
        for c in cs {
            let mut f = Vec::new();
            c.lhs.fluents(&mut f);
            c.rhs.fluents(&mut f);
            self.num_read.extend(f);
        }
    }

    fn interferes(&self, o: &StepFootprint) -> bool {
        let hit = |w: &BTreeSet<usize>, r: &BTreeSet<usize>, ow: &BTreeSet<usize>| {
            w.intersection(r).next().is_some() || w.intersection(ow).next().is_some()
        };
        hit(&self.bool_write, &o.bool_read, &o.bool_write)
            || hit(&o.bool_write, &self.bool_read, &self.bool_write)
            || hit(&self.num_write, &o.num_read, &o.num_write)
            || hit(&o.num_write, &self.num_read, &self.num_write)
    }
}

fn step_footprint(g: &GroundInstance, dec: &StepDecision) -> Option<StepFootprint> {
    if dec.actions.is_empty() && dec.dur_starts.is_empty() && dec.dur_ends.is_empty() {
        return None;
    }
    let mut fp = StepFootprint::default();
    let exprs = |fp: &mut StepFootprint, assigns: &[(usize, crate::pddl::ground::GExpr)]| {
        for (n, e) in assigns {
            fp.num_write.insert(*n);
            let mut f = Vec::new();
            e.fluents(&mut f);
            fp.num_read.extend(f);
        }
    };
    for &a in &dec.actions {
        let a = &g.actions[a];
        fp.bool_read.extend(a.pre_bool.iter().map(|x| x.0));
        fp.read_cmps(&a.pre_num);
        fp.bool_write.extend(a.eff_bool.iter().map(|x| x.0));
        exprs(&mut fp, &a.eff_assign);
        for (n, _, e) in &a.eff_step {
            fp.num_write.insert(*n);
            let mut f = Vec::new();
            e.fluents(&mut f);
            fp.num_read.extend(f);
        }
    }
    let durative = |fp: &mut StepFootprint,
                        d: &crate::pddl::ground::GroundDurative,
                        start: bool| {
        let (cb, cn, eb, ea, es) = if start {
            (&d.cond_start_bool, &d.cond_start_num, &d.eff_start_bool, &d.eff_start_assign, &d.eff_start_step)
        } else {
            (&d.cond_end_bool, &d.cond_end_num, &d.eff_end_bool, &d.eff_end_assign, &d.eff_end_step)
        };
        fp.bool_read.extend(cb.iter().map(|x| x.0));
        fp.read_cmps(cn);
        fp.bool_read.extend(d.cond_over_bool.iter().map(|x| x.0));
        fp.read_cmps(&d.cond_over_num);
        fp.bool_write.extend(eb.iter().map(|x| x.0));
        let mut f = Vec::new();
        d.duration.fluents(&mut f);
        fp.num_read.extend(f);
        for (n, e) in ea {
            fp.num_write.insert(*n);
            let mut f = Vec::new();
            e.fluents(&mut f);
            fp.num_read.extend(f);
        }
        for (n, _, e) in es {
            fp.num_write.insert(*n);
            let mut f = Vec::new();
            e.fluents(&mut f);
            fp.num_read.extend(f);
        }
        for (n, _, e) in &d.eff_cont {
            fp.num_write.insert(*n);
            let mut f = Vec::new();
            e.fluents(&mut f);
            fp.num_read.extend(f);
        }
    };
    for &d in &dec.dur_starts {
        durative(&mut fp, &g.duratives[d], true);
    }
    for &(d, _) in &dec.dur_ends {
        durative(&mut fp, &g.duratives[d], false);
    }
    Some(fp)
}

/// Requires consecutive occupied steps with interfering occurrences to be at
/// least `eps` apart in time, so accepted assignments survive ε-separation
/// unchanged instead of being found valid only at degenerate zero gaps.
pub fn add_separation_constraints(
    g: &GroundInstance,
    trace: &CandidateTrace,
    prog: &CaspProgram,
    eps: f64,
    net: &mut ConstraintNetwork,
) {
    if eps <= 0.0 {
        return;
    }
    let Some(eps_rat) = BigRational::from_float(eps) else {
        return;
    };
    let mut prev: Option<(usize, StepFootprint)> = None;
    for (i, dec) in trace.steps.iter().enumerate() {
        let Some(fp) = step_footprint(g, dec) else {
            continue;
        };
        if let Some((j, pf)) = &prev {
            if pf.interferes(&fp) {
                let a = net.lookup(&prog.cvar_names[prog.index.tend[i]]);
                let b = net.lookup(&prog.cvar_names[prog.index.tend[*j]]);
                if let (Some(a), Some(b)) = (a, b) {
                    net.add(
                        CmpOp::Ge,
                        NumExpr::Sub(Box::new(NumExpr::Var(a)), Box::new(NumExpr::Var(b))),
                        NumExpr::Const(eps_rat.clone()),
                        format!("end({i})-end({j})>={eps}"),
                    );
                }
            }
        }
        prev = Some((i, fp));
    }
}

fn plan_at_horizon(
    g: &GroundInstance,
    cfg: &PlannerConfig,
    h: usize,
    start: Instant,
    stats: &mut PlannerStats,
    casp_text: &mut Option<String>,
) -> HorizonResult {
    let prog = compose(&encode_instance(g, h), &encode_planning_module(g, h));
    if cfg.collect_casp_text {
        *casp_text = Some(emit_text(&prog));
    }
    let solve_cfg = SolveConfig {
        tol: cfg.tol,
        budget: cfg.solve_budget,
    };
    let mut cursor = Cursor::default();
    loop {
        if start.elapsed() >= cfg.timeout {
            return HorizonResult::OutOfResources;
        }
        let t0 = Instant::now();
        let Some(trace) = next_candidate(&prog, &cfg.search, &mut cursor) else {
            stats.search_seconds += t0.elapsed().as_secs_f64();
            return HorizonResult::Exhausted;
        };
        stats.search_seconds += t0.elapsed().as_secs_f64();
        stats.candidates += 1;

        let mut net = induced_constraints(&trace, &prog);
        add_separation_constraints(g, &trace, &prog, cfg.eps, &mut net);
        for round in 0..=cfg.expansion_cap {
            if start.elapsed() >= cfg.timeout {
                return HorizonResult::OutOfResources;
            }
            let t1 = Instant::now();
            stats.csp_solves += 1;
            let solved = solve(&net, &solve_cfg);
            stats.solve_seconds += t1.elapsed().as_secs_f64();
            let sol = match solved {
                NumOutcome::Sat(sol) => sol,
                NumOutcome::Infeasible { .. } => break,
                NumOutcome::Unknown => {
                    stats.numeric_unknowns += 1;
                    break;
                }
            };
            let candidate_plan = extract_plan(&trace, &sol, &prog);
            let gran = cfg
                .granularity
                .unwrap_or_else(|| default_granularity(&candidate_plan));
            let t2 = Instant::now();
            let report = match simulate(g, &candidate_plan, gran) {
                Ok(r) => r,
                Err(_) => break,
            };
            stats.validate_seconds += t2.elapsed().as_secs_f64();
            if report.valid() {
                // ε-separate interfering simultaneous happenings, then
                // re-validate; failure resumes the candidate search.
                let Ok(separated) = epsilon_separate(&candidate_plan, cfg.eps, g) else {
                    break;
                };
                let Ok(final_report) = simulate(g, &separated, gran) else {
                    break;
                };
                if final_report.valid() {
                    return HorizonResult::Plan(separated, final_report);
                }
                break;
            }
            let expandable = report
                .violation
                .as_ref()
                .is_some_and(|v| v.condition.is_some());
            if !expandable || round == cfg.expansion_cap {
                break;
            }
            net = expand(&report, &net, &prog);
            stats.expansions += 1;
        }
    }
}
