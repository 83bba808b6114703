//! Acceptance suite: one test per acceptance criterion, each printing a
//! single pass line on success (run with `--nocapture` to see them).

use std::collections::BTreeSet;
use std::time::Duration;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use casplan_core::benchdomains::{
    generate_instance, run_harness, Family, HarnessConfig, HarnessProtocol, InstanceSpec,
};
use casplan_core::driver::{
    add_separation_constraints, extract_plan, plan, PlanOutcome, PlannerConfig, Protocol,
};
use casplan_core::encoding::{
    compose, emit_text, encode_instance, encode_planning_module, CaspProgram, Head, Lit,
};
use casplan_core::numeric::{
    check_solution, solve, solve_linear, solve_nonlinear, CmpOp, ConstraintNetwork, NumExpr,
    Outcome, SolveConfig, Value,
};
use casplan_core::search::{induced_constraints, next_candidate, violated_rules, Cursor, SearchConfig};
use casplan_core::validate::{
    default_granularity, epsilon_separate, expand, simulate, write_plan, Happening,
    PlanActionKind, TimedPlan,
};
use casplan_core::{ground, parse_domain, parse_problem, GroundInstance};

fn instance(domain: &str, problem: &str) -> GroundInstance {
    let d = parse_domain(domain).expect("domain parses");
    let p = parse_problem(problem, &d).expect("problem parses");
    ground(&d, &p).expect("grounds")
}

fn program(domain: &str, problem: &str, h: usize) -> CaspProgram {
    let g = instance(domain, problem);
    compose(&encode_instance(&g, h), &encode_planning_module(&g, h))
}

fn bench_instance(family: Family, k: usize) -> GroundInstance {
    let (d, p) = generate_instance(&InstanceSpec { family, k });
    instance(&d, &p)
}

const GEN_DOMAIN: &str = r#"
    (define (domain generator)
      (:requirements :typing :fluents :durative-actions :time)
      (:predicates (generate_ran))
      (:functions (fuel_level) (capacity))
      (:durative-action generate
        :parameters ()
        :duration (= ?duration 10)
        :condition (and (over all (>= (fuel_level) 0))
                        (over all (<= (fuel_level) (capacity))))
        :effect (and (decrease (fuel_level) (* #t 1))
                     (at end (generate_ran)))))
"#;

const GEN_PROBLEM: &str = r#"
    (define (problem gen1) (:domain generator)
      (:init (= (fuel_level) 980) (= (capacity) 1000))
      (:goal (generate_ran)))
"#;

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

const BALL_PROBLEM_H5: &str = r#"
    (define (problem drop) (:domain ball)
      (:init (= (height) 5) (= (velocity) 2))
      (:goal (not (held))))
"#;

/// 1. The emitted program for the generator domain contains, for `generate`,
/// the contribution variable declaration, its nonnegativity constraint, and
/// the elapsed-time equality, at every step.
#[test]
fn acceptance_01_encoding_golden_fragment() {
    let g = instance(GEN_DOMAIN, GEN_PROBLEM);
    let p = encode_instance(&g, 3);
    let text = emit_text(&p);
    for i in 0..=3 {
        let decl = format!("cspvar(v(contrib(fuel_level,decr,generate),{i})).");
        let nonneg = format!("required(v(contrib(fuel_level,decr,generate),{i})>=0).");
        let amount = format!(
            "required(v(contrib(fuel_level,decr,generate),{i})==end({i})-start({i})) \
             :- holds(inprogr(generate),{i})."
        );
        for line in [&decl, &nonneg, &amount] {
            assert!(
                text.lines().any(|l| l == line.as_str()),
                "missing line at step {i}: {line}"
            );
        }
    }
    println!("acceptance 01 encoding golden fragment: pass");
}

/// 2. Falling ball at horizon 1: exactly two candidates (trigger vs witness);
/// with height 5 the witness branch is numerically infeasible and the
/// surviving candidate starts the process.
#[test]
fn acceptance_02_must_semantics() {
    let p = program(BALL_DOMAIN, BALL_PROBLEM_H5, 1);
    let cfg = SearchConfig::default();
    let mut cur = Cursor::default();
    let mut got = Vec::new();
    while let Some(t) = next_candidate(&p, &cfg, &mut cur) {
        assert!(violated_rules(&t, &p).is_empty());
        got.push(t);
    }
    assert_eq!(got.len(), 2, "expected exactly two candidates");
    // Trigger branch starts the process; witness branch chooses is_false.
    assert_eq!(got[0].steps[0].proc_starts, vec![0]);
    assert!(got[1].steps[0].proc_starts.is_empty());
    assert!(!got[1].steps[0].witnesses.is_empty());

    let sc = SolveConfig::default();
    let trigger = solve(&induced_constraints(&got[0], &p), &sc);
    let witness = solve(&induced_constraints(&got[1], &p), &sc);
    assert!(
        matches!(trigger, Outcome::Sat(_)),
        "trigger branch must be satisfiable"
    );
    assert!(
        matches!(witness, Outcome::Infeasible { .. }),
        "witness branch must be infeasible at height 5"
    );
    println!("acceptance 02 must-semantics falling ball: pass");
}

// --- criterion 3: stable-model oracle ------------------------------------

struct MaskRule {
    pos: u32,
    neg: u32,
    head: MaskHead,
}

enum MaskHead {
    Atom(u32),
    False,
    Choice { mask: u32, lo: u32, hi: u32 },
}

fn mask_rules(p: &CaspProgram) -> Vec<MaskRule> {
    let lit_masks = |body: &[Lit]| -> (u32, u32) {
        let mut pos = 0u32;
        let mut neg = 0u32;
        for l in body {
            match l {
                Lit::Pos(a) => pos |= 1 << a,
                Lit::Neg(a) => neg |= 1 << a,
            }
        }
        (pos, neg)
    };
    let mut out = Vec::new();
    for r in &p.rules {
        let (pos, neg) = lit_masks(&r.body);
        let head = match &r.head {
            Head::Atom(a) => MaskHead::Atom(1 << a),
            Head::False => MaskHead::False,
            Head::Choice { atoms, lo, hi } => MaskHead::Choice {
                mask: atoms.iter().fold(0u32, |m, a| m | 1 << a),
                lo: *lo,
                hi: *hi,
            },
            // Numeric constraint guards carry no Boolean content.
            Head::Constraint(_) => continue,
        };
        out.push(MaskRule { pos, neg, head });
    }
    out
}

/// Brute-force stable models: every truth assignment that is a model of the
/// program (denials unviolated, choice bounds respected, atom heads
/// supported) and equals the least model of its reduct.
fn stable_models(p: &CaspProgram) -> BTreeSet<u32> {
    let n = p.atom_names.len();
    assert!(n <= 20, "oracle needs micro-programs");
    let rules = mask_rules(p);
    let mut out = BTreeSet::new();
    'outer: for x in 0..(1u32 << n) {
        for r in &rules {
            let body_sat = x & r.pos == r.pos && x & r.neg == 0;
            if !body_sat {
                continue;
            }
            match &r.head {
                MaskHead::False => continue 'outer,
                MaskHead::Atom(b) => {
                    if x & b == 0 {
                        continue 'outer;
                    }
                }
                MaskHead::Choice { mask, lo, hi } => {
                    let c = (x & mask).count_ones();
                    if c < *lo || c > *hi {
                        continue 'outer;
                    }
                }
            }
        }
        // Least model of the reduct w.r.t. x; choice rules justify exactly
        // their members that are in x.
        let mut m = 0u32;
        loop {
            let mut next = m;
            for r in &rules {
                if x & r.neg != 0 || m & r.pos != r.pos {
                    continue;
                }
                match &r.head {
                    MaskHead::Atom(b) => next |= b,
                    MaskHead::Choice { mask, .. } => next |= mask & x,
                    MaskHead::False => {}
                }
            }
            if next == m {
                break;
            }
            m = next;
        }
        if m == x {
            out.insert(x);
        }
    }
    out
}

fn micro_pddl(rng: &mut ChaCha8Rng) -> (String, String) {
    let nb = rng.gen_range(1..=2usize);
    let use_num = rng.gen_bool(0.5);
    let lit = |rng: &mut ChaCha8Rng| -> String {
        let p = rng.gen_range(0..nb);
        if rng.gen_bool(0.5) {
            format!("(p{p})")
        } else {
            format!("(not (p{p}))")
        }
    };
    let mut ops = String::new();
    for a in 0..rng.gen_range(0..=2usize) {
        let pre = lit(rng);
        let p = rng.gen_range(0..nb);
        let eff = if rng.gen_bool(0.5) {
            format!("(p{p})")
        } else {
            format!("(not (p{p}))")
        };
        ops += &format!("(:action a{a} :parameters () :precondition {pre} :effect {eff})\n");
    }
    if use_num && rng.gen_bool(0.6) {
        let pre = lit(rng);
        let thr = rng.gen_range(-2..=2);
        let eff = lit(rng);
        ops += &format!(
            "(:event e0 :parameters () :precondition (and {pre} (> (x) {thr})) :effect {eff})\n"
        );
    }
    if use_num && rng.gen_bool(0.5) {
        let pre = lit(rng);
        ops += &format!(
            "(:process pr0 :parameters () :precondition {pre} \
             :effect (increase (x) (* #t 1)))\n"
        );
    }
    let preds: Vec<String> = (0..nb).map(|i| format!("(p{i})")).collect();
    let funcs = if use_num { "(:functions (x))" } else { "" };
    let domain = format!(
        "(define (domain micro) (:requirements :fluents :time) (:predicates {}) {} {})",
        preds.join(" "),
        funcs,
        ops
    );
    let mut init = String::new();
    for i in 0..nb {
        if rng.gen_bool(0.5) {
            init += &format!("(p{i}) ");
        }
    }
    if use_num {
        init += &format!("(= (x) {})", rng.gen_range(-2..=2));
    }
    let goal = lit(rng);
    let problem =
        format!("(define (problem q) (:domain micro) (:init {init}) (:goal {goal}))");
    (domain, problem)
}

/// 3. On randomized micro-programs drawn from the encoding's rule classes,
/// the candidate enumeration equals the brute-force stable-model set.
#[test]
fn acceptance_03_stable_model_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0usize;
    let mut attempts = 0usize;
    while checked < 120 {
        attempts += 1;
        assert!(attempts < 10_000, "generator failed to produce programs");
        let (dom, prob) = micro_pddl(&mut rng);
        let d = match parse_domain(&dom) {
            Ok(d) => d,
            Err(e) => panic!("generated domain rejected: {e}\n{dom}"),
        };
        let pr = parse_problem(&prob, &d).expect("problem parses");
        let g = match ground(&d, &pr) {
            Ok(g) => g,
            Err(_) => continue,
        };
        let h = rng.gen_range(1..=2usize);
        let p = compose(&encode_instance(&g, h), &encode_planning_module(&g, h));
        if p.atom_names.len() > 18 {
            continue;
        }
        let oracle = stable_models(&p);
        let mut found = BTreeSet::new();
        let cfg = SearchConfig::default();
        let mut cur = Cursor::default();
        while let Some(t) = next_candidate(&p, &cfg, &mut cur) {
            let mut x = 0u32;
            for (i, &b) in t.atoms.iter().enumerate() {
                if b {
                    x |= 1 << i;
                }
            }
            found.insert(x);
        }
        assert_eq!(
            found,
            oracle,
            "stable-model mismatch on program with atoms {:?}\n{dom}\n{prob}\nhorizon {h}",
            p.atom_names
        );
        checked += 1;
    }
    println!("acceptance 03 stable-model oracle: pass ({checked} programs)");
}

// --- criterion 4: linear solver vs Fourier-Motzkin ------------------------

type Row = (Vec<BigRational>, BigRational, bool); // sum coef*x <= b (strict?)

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Fourier-Motzkin elimination; `None` when intermediate systems blow up.
fn fm_feasible(mut rows: Vec<Row>, nv: usize) -> Option<bool> {
    for k in 0..nv {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let mut rest = Vec::new();
        for r in rows {
            if r.0[k].is_positive() {
                pos.push(r);
            } else if r.0[k].is_negative() {
                neg.push(r);
            } else {
                rest.push(r);
            }
        }
        let mut seen: BTreeSet<(Vec<BigRational>, BigRational, bool)> = BTreeSet::new();
        for r in rest {
            seen.insert(normalize(r));
        }
        for p in &pos {
            for q in &neg {
                let a = -q.0[k].clone(); // positive multiplier for p
                let b = p.0[k].clone(); // positive multiplier for q
                let coef: Vec<BigRational> = (0..nv)
                    .map(|j| &p.0[j] * &a + &q.0[j] * &b)
                    .collect();
                let c = &p.1 * &a + &q.1 * &b;
                seen.insert(normalize((coef, c, p.2 || q.2)));
                if seen.len() > 4000 {
                    return None;
                }
            }
        }
        rows = seen.into_iter().collect();
    }
    Some(rows.iter().all(|(_, b, strict)| {
        if *strict {
            b.is_positive()
        } else {
            !b.is_negative()
        }
    }))
}

fn normalize(mut r: Row) -> Row {
    let scale = r
        .0
        .iter()
        .find(|c| !c.is_zero())
        .map(|c| c.abs())
        .unwrap_or_else(|| {
            if r.1.is_zero() {
                rat(1)
            } else {
                r.1.abs()
            }
        });
    for c in &mut r.0 {
        *c /= &scale;
    }
    r.1 /= &scale;
    r
}

/// 5. From a network constraint, the oracle rows (Eq becomes two).
fn oracle_rows(op: CmpOp, coef: &[i64], b: i64, nv: usize) -> Vec<Row> {
    let up: Vec<BigRational> = (0..nv).map(|j| rat(coef[j])).collect();
    let down: Vec<BigRational> = (0..nv).map(|j| rat(-coef[j])).collect();
    match op {
        CmpOp::Le => vec![(up, rat(b), false)],
        CmpOp::Lt => vec![(up, rat(b), true)],
        CmpOp::Ge => vec![(down, rat(-b), false)],
        CmpOp::Gt => vec![(down, rat(-b), true)],
        CmpOp::Eq => vec![(up, rat(b), false), (down, rat(-b), false)],
        CmpOp::Ne => unreachable!("not generated"),
    }
}

/// 4. On random affine networks, solve_linear verdicts match the
/// Fourier-Motzkin oracle exactly, and Sat assignments have residual 0.
#[test]
fn acceptance_04_linear_solver_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ops = [CmpOp::Le, CmpOp::Lt, CmpOp::Ge, CmpOp::Gt, CmpOp::Eq];
    let mut checked = 0usize;
    let mut sat_seen = 0usize;
    let mut infeasible_seen = 0usize;
    while checked < 220 {
        let nv = rng.gen_range(1..=6usize);
        let mut net = ConstraintNetwork::new();
        let mut rows: Vec<Row> = Vec::new();
        for v in 0..nv {
            let id = net.var(&format!("x{v}"));
            net.set_domain(id, -50.0, 50.0);
            // Domain bounds participate in feasibility; mirror them.
            let mut up = vec![0i64; nv];
            up[v] = 1;
            rows.extend(oracle_rows(CmpOp::Le, &up, 50, nv));
            rows.extend(oracle_rows(CmpOp::Ge, &up, -50, nv));
        }
        for c in 0..rng.gen_range(1..=7usize) {
            let mut coef = vec![0i64; nv];
            while coef.iter().all(|&c| c == 0) {
                for x in coef.iter_mut() {
                    *x = rng.gen_range(-3..=3);
                }
            }
            let b = rng.gen_range(-10..=10i64);
            let op = ops[rng.gen_range(0..ops.len())];
            let mut lhs = NumExpr::Const(BigRational::zero());
            for (v, &cf) in coef.iter().enumerate() {
                if cf != 0 {
                    let term = NumExpr::Mul(
                        Box::new(NumExpr::int(cf)),
                        Box::new(NumExpr::Var(v)),
                    );
                    lhs = NumExpr::Add(Box::new(lhs), Box::new(term));
                }
            }
            net.add(op, lhs, NumExpr::int(b), format!("c{c}"));
            rows.extend(oracle_rows(op, &coef, b, nv));
        }
        let Some(feasible) = fm_feasible(rows, nv) else {
            continue; // oracle blow-up; draw another network
        };
        match solve_linear(&net) {
            Outcome::Sat(sol) => {
                assert!(feasible, "solver Sat but oracle infeasible");
                assert!(sol.values.iter().all(|v| matches!(v, Value::Exact(_))));
                assert_eq!(sol.max_residual, 0.0);
                assert_eq!(check_solution(&net, &sol.values, 0.0), 0.0);
                sat_seen += 1;
            }
            Outcome::Infeasible { .. } => {
                assert!(!feasible, "solver Infeasible but oracle feasible");
                infeasible_seen += 1;
            }
            Outcome::Unknown => panic!("solve_linear returned Unknown on affine input"),
        }
        checked += 1;
    }
    assert!(sat_seen > 20 && infeasible_seen > 20, "verdict mix too thin");
    println!(
        "acceptance 04 linear solver oracle: pass ({checked} networks, {sat_seen} sat / {infeasible_seen} infeasible)"
    );
}

/// 5. Nonlinear spot checks within a 10^4-node budget.
#[test]
fn acceptance_05_nonlinear_spot_checks() {
    // x == sqrt(2 * 9.8 * 5)
    let mut net = ConstraintNetwork::new();
    let x = net.var("x");
    net.set_domain(x, 0.0, 100.0);
    let inner = NumExpr::Const(BigRational::from_float(2.0 * 9.8 * 5.0).unwrap());
    net.add(
        CmpOp::Eq,
        NumExpr::Var(x),
        NumExpr::Sqrt(Box::new(inner)),
        "x==sqrt(98)",
    );
    match solve_nonlinear(&net, 1e-9, 10_000) {
        Outcome::Sat(sol) => {
            let got = sol.get(x);
            assert!(
                (got - 98f64.sqrt()).abs() <= 1e-6,
                "x = {got}, want sqrt(98) = {}",
                98f64.sqrt()
            );
        }
        other => panic!("expected Sat, got {other:?}"),
    }

    // x * x == -1 is infeasible
    let mut net2 = ConstraintNetwork::new();
    let y = net2.var("x");
    net2.set_domain(y, -100.0, 100.0);
    net2.add(
        CmpOp::Eq,
        NumExpr::Mul(Box::new(NumExpr::Var(y)), Box::new(NumExpr::Var(y))),
        NumExpr::int(-1),
        "x^2==-1",
    );
    assert!(
        matches!(solve_nonlinear(&net2, 1e-9, 10_000), Outcome::Infeasible { .. }),
        "x^2 == -1 must be proven infeasible"
    );
    println!("acceptance 05 nonlinear spot checks: pass");
}

fn assert_plan_clean(g: &GroundInstance, plan: &TimedPlan) {
    for h in &plan.happenings {
        let known = match h.kind {
            PlanActionKind::Instant(i) => g.actions.get(i).map(|a| a.name.as_str()),
            PlanActionKind::Durative(i) => g.duratives.get(i).map(|d| d.name.as_str()),
        };
        assert_eq!(known, Some(h.name.as_str()), "happening must be an action");
        assert!(
            !g.processes.iter().any(|p| p.name == h.name)
                && !g.events.iter().any(|e| e.name == h.name),
            "plan must not contain process/event happenings"
        );
    }
}

fn solve_bench(family: Family, k: usize) -> (GroundInstance, TimedPlan) {
    let g = bench_instance(family, k);
    let cfg = PlannerConfig {
        protocol: Protocol::Iterative(30),
        timeout: Duration::from_secs(600),
        ..PlannerConfig::default()
    };
    let t0 = std::time::Instant::now();
    let r = plan(&g, &cfg);
    match r.outcome {
        PlanOutcome::Plan { plan, report, .. } => {
            assert!(report.valid());
            println!(
                "  {:?} k={k}: plan with {} happenings in {:.1}s",
                family,
                plan.happenings.len(),
                t0.elapsed().as_secs_f64()
            );
            (g, plan)
        }
        other => panic!("{family:?} k={k}: expected a plan, got {other:?}"),
    }
}

/// 6. Benchmark coverage: car-linear and car-nonlinear at k = 1..8 and
/// gen-linear at k = 1..2 all solve within the per-instance timeout; every
/// plan re-validates at half granularity and contains only action happenings.
#[test]
fn acceptance_06_benchmark_coverage() {
    let mut targets: Vec<(Family, usize)> = Vec::new();
    for k in 1..=8 {
        targets.push((Family::CarLinear, k));
    }
    for k in 1..=8 {
        targets.push((Family::CarNonlinear, k));
    }
    for k in 1..=2 {
        targets.push((Family::GenLinear, k));
    }
    for (family, k) in targets {
        let (g, plan) = solve_bench(family, k);
        assert_plan_clean(&g, &plan);
        let gran = default_granularity(&plan) / 2.0;
        let rep = simulate(&g, &plan, gran).expect("simulation runs");
        assert!(
            rep.valid(),
            "{family:?} k={k}: plan fails re-validation at half granularity: {:?}",
            rep.violation
        );
    }
    println!("acceptance 06 benchmark coverage: pass");
}

/// 7. The gen-linear k=1 plan refuels for exactly 12.5 time units.
#[test]
fn acceptance_07_generator_worked_value() {
    let (_, plan) = solve_bench(Family::GenLinear, 1);
    let refuel = plan
        .happenings
        .iter()
        .find(|h| h.name.starts_with("refuel"))
        .expect("plan contains a refuel happening");
    assert!(
        (refuel.duration - 12.5).abs() <= 1e-6,
        "refuel duration {} != 12.5",
        refuel.duration
    );
    println!("acceptance 07 generator worked value: pass");
}

// --- criterion 8: the expansion loop --------------------------------------

/// Two fluents rise at unit rate during `sweep`; the over-all invariant is on
/// their product, which dips below its bound strictly between the step
/// boundaries. `lift`, only possible before the sweep starts, raises `g`
/// enough that the dip clears the bound.
const DIP_DOMAIN: &str = r#"
    (define (domain dip)
      (:requirements :fluents :durative-actions :time)
      (:predicates (swept) (ready))
      (:functions (f) (g))
      (:durative-action sweep
        :parameters ()
        :duration (= ?duration 8)
        :condition (over all (>= (* (f) (g)) -0.5))
        :effect (and (at start (not (ready)))
                     (at end (swept))
                     (increase (f) (* #t 1))
                     (increase (g) (* #t 1))))
      (:action lift
        :parameters ()
        :precondition (ready)
        :effect (increase (g) 2.5)))
"#;

const DIP_PROBLEM: &str = r#"
    (define (problem dip1) (:domain dip)
      (:init (ready) (= (f) -3) (= (g) -5))
      (:goal (swept)))
"#;

/// 8. Boundary checks pass but the mid-state invariant fails; the simulator
/// reports t* within granularity of the analytic crossing, expand adds
/// exactly the fresh-variable constraints, and the planner converges to a
/// valid plan within 3 expansion iterations.
#[test]
fn acceptance_08_expansion_loop() {
    let p = program(DIP_DOMAIN, DIP_PROBLEM, 2);
    let g = &p.instance;

    // The sweep-only candidate: boundary product values are 15 at both ends.
    let scfg = SearchConfig::default();
    let mut cur = Cursor::default();
    let mut cand = None;
    while let Some(t) = next_candidate(&p, &scfg, &mut cur) {
        if t.steps[0].actions.is_empty() && t.steps[0].dur_starts == vec![0] {
            cand = Some(t);
            break;
        }
    }
    let cand = cand.expect("sweep-only candidate exists");
    let mut net = induced_constraints(&cand, &p);
    add_separation_constraints(g, &cand, &p, 0.001, &mut net);
    let sol = match solve(&net, &SolveConfig::default()) {
        Outcome::Sat(s) => s,
        other => panic!("boundary checks should pass: {other:?}"),
    };
    let tplan = extract_plan(&cand, &sol, &p);
    let start = tplan.happenings[0].time;
    let gran = default_granularity(&tplan);
    let rep = simulate(g, &tplan, gran).expect("simulation runs");
    let viol = rep.violation.as_ref().expect("mid-state invariant fails");
    assert_eq!(viol.owner, "sweep");
    // Analytic first crossing of (f*g)(t) = -0.5: start + 4 - sqrt(1/2).
    let crossing = start + 4.0 - 0.5f64.sqrt();
    assert!(
        (viol.t_star - crossing).abs() <= gran,
        "t* = {} not within granularity {gran} of analytic crossing {crossing}",
        viol.t_star
    );

    // Expansion adds one fresh variable + defining equality per fluent in the
    // violated condition, plus the invariant over the fresh variables.
    let expanded = expand(&rep, &net, &p);
    assert_eq!(expanded.vars.len(), net.vars.len() + 2);
    assert_eq!(expanded.constraints.len(), net.constraints.len() + 3);
    let new_names: Vec<&str> = expanded.vars[net.vars.len()..]
        .iter()
        .map(|v| v.name.as_str())
        .collect();
    assert!(new_names[0].starts_with("v_at(f,1,"));
    assert!(new_names[1].starts_with("v_at(g,1,"));
    let new_labels: Vec<&str> = expanded.constraints[net.constraints.len()..]
        .iter()
        .map(|c| c.label.as_str())
        .collect();
    assert!(new_labels[0].starts_with("v_at(f,1,") && new_labels[0].contains("==value@"));
    assert!(new_labels[1].starts_with("v_at(g,1,") && new_labels[1].contains("==value@"));
    assert!(new_labels[2].starts_with("invariant@"));

    // End to end: the expansion loop abandons the sweep-only candidate within
    // the cap and the lift+sweep candidate yields a valid plan.
    let cfg = PlannerConfig {
        protocol: Protocol::Iterative(3),
        expansion_cap: 3,
        ..PlannerConfig::default()
    };
    let r = plan(g, &cfg);
    let (tplan, report) = match r.outcome {
        PlanOutcome::Plan { plan, report, .. } => (plan, report),
        other => panic!("expected a plan, got {other:?}"),
    };
    assert!(report.valid());
    assert!(
        (1..=3).contains(&(r.stats.expansions as usize)),
        "expected 1..=3 expansion iterations, got {}",
        r.stats.expansions
    );
    assert!(tplan.happenings.iter().any(|h| h.name == "lift"));
    assert!(tplan.happenings.iter().any(|h| h.name == "sweep"));
    let rep2 = simulate(g, &tplan, default_granularity(&tplan) / 2.0).unwrap();
    assert!(rep2.valid(), "returned plan must re-validate");
    println!("acceptance 08 expansion loop: pass");
}

// --- criterion 9: epsilon separation ---------------------------------------

const PAIR_DOMAIN: &str = r#"
    (define (domain pair)
      (:requirements :fluents)
      (:predicates (dummy))
      (:functions (x) (y))
      (:action setx :parameters () :precondition (not (dummy)) :effect (assign (x) 1))
      (:action sety :parameters () :precondition (not (dummy)) :effect (assign (y) 1)))
"#;

const PAIR_PROBLEM: &str = r#"
    (define (problem p) (:domain pair)
      (:init (= (x) 0) (= (y) 0))
      (:goal (and (>= (x) 1) (>= (y) 1))))
"#;

fn happening(
    g: &GroundInstance,
    name: &str,
    time: f64,
    duration: f64,
    prov: (usize, usize),
) -> Happening {
    if let Some(i) = g.actions.iter().position(|a| a.name == name) {
        return Happening {
            time,
            kind: PlanActionKind::Instant(i),
            name: name.to_string(),
            duration: 0.0,
            provenance: Some(prov),
        };
    }
    let i = g.duratives.iter().position(|d| d.name == name).unwrap();
    Happening {
        time,
        kind: PlanActionKind::Durative(i),
        name: name.to_string(),
        duration,
        provenance: Some(prov),
    }
}

/// 9. Interfering simultaneous happenings end up at least eps apart and the
/// shifted plan re-validates; non-interfering simultaneity is preserved.
#[test]
fn acceptance_09_epsilon_separation() {
    let eps = 0.001;

    // Interfering: `lift` writes g, which `sweep` reads and integrates.
    let g = instance(DIP_DOMAIN, DIP_PROBLEM);
    let plan = TimedPlan {
        happenings: vec![
            happening(&g, "lift", 0.0, 0.0, (0, 0)),
            happening(&g, "sweep", 0.0, 8.0, (0, 1)),
        ],
        state_times: vec![],
    };
    let sep = epsilon_separate(&plan, eps, &g).expect("separation succeeds");
    let gap = (sep.happenings[0].time - sep.happenings[1].time).abs();
    assert!(gap >= eps, "interfering pair must be >= eps apart, got {gap}");
    let rep = simulate(&g, &sep, default_granularity(&sep)).unwrap();
    assert!(rep.valid(), "separated plan must re-validate: {:?}", rep.violation);

    // Non-interfering: writes to disjoint fluents keep their common time.
    let g2 = instance(PAIR_DOMAIN, PAIR_PROBLEM);
    let plan2 = TimedPlan {
        happenings: vec![
            happening(&g2, "setx", 2.0, 0.0, (0, 0)),
            happening(&g2, "sety", 2.0, 0.0, (0, 1)),
        ],
        state_times: vec![],
    };
    let sep2 = epsilon_separate(&plan2, eps, &g2).expect("separation succeeds");
    assert!(
        sep2.happenings.iter().all(|h| h.time == 2.0),
        "non-interfering simultaneity must be preserved"
    );
    let rep2 = simulate(&g2, &sep2, 0.1).unwrap();
    assert!(rep2.valid());
    println!("acceptance 09 epsilon separation: pass");
}

/// 10. Two consecutive harness runs with identical configuration produce
/// byte-identical plan files and JSON results (timings excluded).
#[test]
fn acceptance_10_determinism() {
    let run_all = || -> (String, String) {
        let mut stripped = Vec::new();
        for (family, lo, hi) in [
            (Family::GenLinear, 1, 2),
            (Family::CarLinear, 1, 2),
        ] {
            let cfg = HarnessConfig {
                family,
                scale_lo: lo,
                scale_hi: hi,
                protocol: HarnessProtocol::Cumulative,
                timeout: Duration::from_secs(600),
                planner: PlannerConfig::default(),
            };
            let mut json = run_harness(&cfg).to_json();
            for row in json["rows"].as_array_mut().unwrap() {
                row.as_object_mut().unwrap().remove("seconds");
            }
            stripped.push(json);
        }
        let results = serde_json::to_string_pretty(&stripped).unwrap();

        let g = bench_instance(Family::GenLinear, 1);
        let r = plan(&g, &PlannerConfig::default());
        let plan_text = match r.outcome {
            PlanOutcome::Plan { plan, .. } => write_plan(&plan),
            other => panic!("expected plan, got {other:?}"),
        };
        (results, plan_text)
    };
    let (res_a, plan_a) = run_all();
    let (res_b, plan_b) = run_all();
    assert_eq!(res_a, res_b, "JSON results must be byte-identical");
    assert_eq!(plan_a, plan_b, "plan files must be byte-identical");
    assert!(!plan_a.is_empty());
    println!("acceptance 10 determinism: pass");
}
