//! Canonical text rendering of the AST. `parse(render(parse(x)))` is
//! structurally identical to `parse(x)`, which is what the round-trip
//! property test checks.

use std::fmt::Write;

use num_traits::Signed;

use super::ast::*;

pub fn render_domain(d: &DomainAst) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "(define (domain {})", d.name);
    if !d.requirements.is_empty() {
        let flags: Vec<String> = d.requirements.iter().map(|r| format!(":{r}")).collect();
        let _ = writeln!(s, "  (:requirements {})", flags.join(" "));
    }
    if !d.types.is_empty() {
        let mut line = String::new();
        for (ty, sup) in &d.types {
            let _ = write!(line, "{ty} - {sup} ");
        }
        let _ = writeln!(s, "  (:types {})", line.trim_end());
    }
    if !d.predicates.is_empty() {
        let _ = writeln!(s, "  (:predicates");
        for p in &d.predicates {
            let _ = writeln!(s, "    ({}{})", p.name, params_text(&p.params));
        }
        let _ = writeln!(s, "  )");
    }
    if !d.functions.is_empty() {
        let _ = writeln!(s, "  (:functions");
        for f in &d.functions {
            let _ = writeln!(s, "    ({}{})", f.name, params_text(&f.params));
        }
        let _ = writeln!(s, "  )");
    }
    for a in &d.actions {
        let _ = writeln!(s, "  (:action {}", a.name);
        let _ = writeln!(s, "    :parameters ({})", params_text(&a.params).trim_start());
        let _ = writeln!(s, "    :precondition {}", cond_text(&a.pre));
        let _ = writeln!(s, "    :effect {}", eff_text(&a.eff));
        let _ = writeln!(s, "  )");
    }
    for d2 in &d.duratives {
        let _ = writeln!(s, "  (:durative-action {}", d2.name);
        let _ = writeln!(s, "    :parameters ({})", params_text(&d2.params).trim_start());
        let _ = writeln!(
            s,
            "    :duration ({} ?duration {})",
            match d2.duration_op {
                CmpOp::Eq => "=",
                CmpOp::Le => "<=",
                CmpOp::Ge => ">=",
                _ => unreachable!(),
            },
            expr_text(&d2.duration)
        );
        let mut groups = Vec::new();
        for c in &d2.cond_start {
            groups.push(format!("(at start {})", cond_text(std::slice::from_ref(c))));
        }
        for c in &d2.cond_over {
            groups.push(format!("(over all {})", cond_text(std::slice::from_ref(c))));
        }
        for c in &d2.cond_end {
            groups.push(format!("(at end {})", cond_text(std::slice::from_ref(c))));
        }
        let _ = writeln!(s, "    :condition (and {})", groups.join(" "));
        let mut effs = Vec::new();
        for e in &d2.eff_start {
            effs.push(format!("(at start {})", eff_text(std::slice::from_ref(e))));
        }
        for e in &d2.eff_end {
            effs.push(format!("(at end {})", eff_text(std::slice::from_ref(e))));
        }
        for e in &d2.eff_cont {
            effs.push(one_eff_text(e));
        }
        let _ = writeln!(s, "    :effect (and {})", effs.join(" "));
        let _ = writeln!(s, "  )");
    }
    for p in &d.processes {
        let _ = writeln!(s, "  (:process {}", p.name);
        let _ = writeln!(s, "    :parameters ({})", params_text(&p.params).trim_start());
        let _ = writeln!(s, "    :precondition {}", cond_text(&p.pre));
        let _ = writeln!(s, "    :effect {}", eff_text(&p.eff_cont));
        let _ = writeln!(s, "  )");
    }
    for e in &d.events {
        let _ = writeln!(s, "  (:event {}", e.name);
        let _ = writeln!(s, "    :parameters ({})", params_text(&e.params).trim_start());
        let _ = writeln!(s, "    :precondition {}", cond_text(&e.pre));
        let _ = writeln!(s, "    :effect {}", eff_text(&e.eff));
        let _ = writeln!(s, "  )");
    }
    s.push_str(")\n");
    s
}

pub fn render_problem(p: &ProblemAst) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "(define (problem {})", p.name);
    let _ = writeln!(s, "  (:domain {})", p.domain);
    if !p.objects.is_empty() {
        let mut line = String::new();
        for o in &p.objects {
            let _ = write!(line, "{} - {} ", o.name, o.ty);
        }
        let _ = writeln!(s, "  (:objects {})", line.trim_end());
    }
    let _ = writeln!(s, "  (:init");
    for a in &p.init_bool {
        let _ = writeln!(s, "    {}", atom_text(a));
    }
    for ((f, args), v, _) in &p.init_num {
        let _ = writeln!(
            s,
            "    (= ({}{}) {})",
            f,
            terms_text(args),
            rational_text(v)
        );
    }
    let _ = writeln!(s, "  )");
    let _ = writeln!(s, "  (:goal {})", cond_text(&p.goal));
    s.push_str(")\n");
    s
}

fn params_text(params: &[TypedName]) -> String {
    let mut s = String::new();
    for p in params {
        let _ = write!(s, " ?{} - {}", p.name, p.ty);
    }
    s
}

fn terms_text(terms: &[Term]) -> String {
    let mut s = String::new();
    for t in terms {
        match t {
            Term::Var(v) => {
                let _ = write!(s, " ?{v}");
            }
            Term::Obj(o) => {
                let _ = write!(s, " {o}");
            }
        }
    }
    s
}

fn atom_text(a: &AtomAst) -> String {
    format!("({}{})", a.pred, terms_text(&a.args))
}

pub fn cond_text(conds: &[CondAst]) -> String {
    if conds.len() == 1 {
        return one_cond_text(&conds[0]);
    }
    let parts: Vec<String> = conds.iter().map(one_cond_text).collect();
    format!("(and {})", parts.join(" "))
}

fn one_cond_text(c: &CondAst) -> String {
    match c {
        CondAst::Lit { atom, positive: true } => atom_text(atom),
        CondAst::Lit { atom, positive: false } => format!("(not {})", atom_text(atom)),
        CondAst::Cmp { op, lhs, rhs, .. } => {
            let op = match op {
                CmpOp::Eq => "=",
                other => other.text(),
            };
            format!("({} {} {})", op, expr_text(lhs), expr_text(rhs))
        }
    }
}

pub fn eff_text(effs: &[EffAst]) -> String {
    if effs.len() == 1 {
        return one_eff_text(&effs[0]);
    }
    let parts: Vec<String> = effs.iter().map(one_eff_text).collect();
    format!("(and {})", parts.join(" "))
}

fn one_eff_text(e: &EffAst) -> String {
    match e {
        EffAst::Bool { atom, positive: true } => atom_text(atom),
        EffAst::Bool { atom, positive: false } => format!("(not {})", atom_text(atom)),
        EffAst::Assign { fluent, expr, .. } => format!(
            "(assign ({}{}) {})",
            fluent.0,
            terms_text(&fluent.1),
            expr_text(expr)
        ),
        EffAst::Step { fluent, dir, expr, .. } => format!(
            "({} ({}{}) {})",
            dir_word(*dir),
            fluent.0,
            terms_text(&fluent.1),
            expr_text(expr)
        ),
        EffAst::Rate { fluent, dir, expr, .. } => format!(
            "({} ({}{}) (* #t {}))",
            dir_word(*dir),
            fluent.0,
            terms_text(&fluent.1),
            expr_text(expr)
        ),
    }
}

fn dir_word(d: Dir) -> &'static str {
    match d {
        Dir::Incr => "increase",
        Dir::Decr => "decrease",
    }
}

pub fn expr_text(e: &NumExprAst) -> String {
    match e {
        NumExprAst::Const(r) => rational_text(r),
        NumExprAst::Fluent(f, args) => format!("({f}{})", terms_text(args)),
        NumExprAst::Duration => "?duration".to_string(),
        NumExprAst::Add(a, b) => format!("(+ {} {})", expr_text(a), expr_text(b)),
        NumExprAst::Sub(a, b) => format!("(- {} {})", expr_text(a), expr_text(b)),
        NumExprAst::Mul(a, b) => format!("(* {} {})", expr_text(a), expr_text(b)),
        NumExprAst::Div(a, b) => format!("(/ {} {})", expr_text(a), expr_text(b)),
        NumExprAst::Sqrt(a) => format!("(sqrt {})", expr_text(a)),
        NumExprAst::Pow(a, b) => format!("(pow {} {})", expr_text(a), expr_text(b)),
    }
}

/// Exact decimal when the (reduced) denominator has only factors 2 and 5;
/// falls back to a division form otherwise.
pub fn rational_text(r: &num_rational::BigRational) -> String {
    use num_bigint::BigInt;
    use num_traits::{One, Zero};

    let neg = r.is_negative();
    let r_abs = r.abs();
    let mut denom = r_abs.denom().clone();
    let two = BigInt::from(2u32);
    let five = BigInt::from(5u32);
    let mut twos = 0u32;
    let mut fives = 0u32;
    while (&denom % &two).is_zero() {
        denom /= &two;
        twos += 1;
    }
    while (&denom % &five).is_zero() {
        denom /= &five;
        fives += 1;
    }
    let sign = if neg { "-" } else { "" };
    if !denom.is_one() {
        return format!("(/ {sign}{} {})", r_abs.numer(), r_abs.denom());
    }
    let tens = twos.max(fives);
    let scale = two.pow(tens - twos) * five.pow(tens - fives);
    let digits = (r_abs.numer() * scale).to_string();
    if tens == 0 {
        return format!("{sign}{digits}");
    }
    let tens = tens as usize;
    let scaled = if digits.len() <= tens {
        format!("0.{}{}", "0".repeat(tens - digits.len()), digits)
    } else {
        let (int, frac) = digits.split_at(digits.len() - tens);
        format!("{int}.{frac}")
    };
    format!("{sign}{scaled}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::parser::{parse_domain, parse_problem, parse_rational};

    #[test]
    fn rational_text_is_exact() {
        assert_eq!(rational_text(&parse_rational("12.5").unwrap()), "12.5");
        assert_eq!(rational_text(&parse_rational("-0.25").unwrap()), "-0.25");
        assert_eq!(rational_text(&parse_rational("1000").unwrap()), "1000");
        assert_eq!(rational_text(&parse_rational("19.6").unwrap()), "19.6");
        // Denominators with factors other than 2 and 5 fall back to a quotient.
        let third = num_rational::BigRational::new(1.into(), 3.into());
        assert_eq!(rational_text(&third), "(/ 1 3)");
    }

    #[test]
    fn domain_round_trips() {
        let text = r#"
            (define (domain car)
              (:predicates (running) (stopped))
              (:functions (d) (v) (a))
              (:action accelerate
                :parameters ()
                :precondition (and (running) (< (a) 1))
                :effect (increase (a) 1))
              (:durative-action cruise
                :parameters ()
                :duration (>= ?duration 1)
                :condition (and (at start (running)) (over all (>= (v) 0)))
                :effect (and (increase (d) (* #t (v))) (at end (stopped))))
              (:process moving
                :parameters ()
                :precondition (and (running))
                :effect (and (increase (v) (* #t (a)))
                             (increase (d) (* #t (v)))))
              (:event stall
                :parameters ()
                :precondition (and (running) (<= (v) -1))
                :effect (not (running))))
        "#;
        let d1 = parse_domain(text).unwrap();
        let r1 = render_domain(&d1);
        let d2 = parse_domain(&r1).unwrap();
        assert_eq!(render_domain(&d2), r1);
    }

    #[test]
    fn problem_round_trips() {
        let dom = parse_domain(
            r#"(define (domain d)
                 (:types car - object)
                 (:predicates (going ?c - car))
                 (:functions (pos ?c - car))
                 (:action go :parameters (?c - car)
                   :precondition (and) :effect (going ?c)))"#,
        )
        .unwrap();
        let text = r#"
            (define (problem race) (:domain d)
              (:objects c1 c2 - car)
              (:init (going c1) (= (pos c1) 0.5) (= (pos c2) -3))
              (:goal (and (going c2) (>= (pos c1) 30))))
        "#;
        let p1 = parse_problem(text, &dom).unwrap();
        let r1 = render_problem(&p1);
        let p2 = parse_problem(&r1, &dom).unwrap();
        assert_eq!(render_problem(&p2), r1);
    }
}
