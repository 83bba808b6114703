//! Recursive-descent parser over the s-expression token stream.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::pow::Pow;

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::PddlError;

struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
    file: &'a str,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn span(&self) -> Span {
        self.peek()
            .map(|t| t.span)
            .or_else(|| self.toks.last().map(|t| t.span))
            .unwrap_or(Span::ZERO)
    }

    fn next(&mut self) -> Result<&'a Token, PddlError> {
        let t = self.toks.get(self.pos).ok_or_else(|| {
            PddlError::parse(self.file, self.span(), "unexpected end of input")
        })?;
        self.pos += 1;
        Ok(t)
    }

    fn err(&self, msg: impl Into<String>) -> PddlError {
        PddlError::parse(self.file, self.span(), msg)
    }

    fn expect_lparen(&mut self) -> Result<Span, PddlError> {
        let t = self.next()?;
        if t.tok == Tok::LParen {
            Ok(t.span)
        } else {
            Err(PddlError::parse(self.file, t.span, "expected `(`"))
        }
    }

    fn expect_rparen(&mut self) -> Result<(), PddlError> {
        let t = self.next()?;
        if t.tok == Tok::RParen {
            Ok(())
        } else {
            Err(PddlError::parse(self.file, t.span, "expected `)`"))
        }
    }

    fn expect_sym(&mut self, want: &str) -> Result<(), PddlError> {
        let t = self.next()?;
        match &t.tok {
            Tok::Sym(s) if s == want => Ok(()),
            _ => Err(PddlError::parse(self.file, t.span, format!("expected `{want}`"))),
        }
    }

    fn sym(&mut self) -> Result<(String, Span), PddlError> {
        let t = self.next()?;
        match &t.tok {
            Tok::Sym(s) => Ok((s.clone(), t.span)),
            _ => Err(PddlError::parse(self.file, t.span, "expected a name")),
        }
    }

    fn at_rparen(&self) -> bool {
        matches!(self.peek().map(|t| &t.tok), Some(Tok::RParen))
    }

}

pub fn parse_rational(text: &str) -> Option<BigRational> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, text),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).ok()?;
    let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
    let mut r = BigRational::new(numer, denom);
    if neg {
        r = -r;
    }
    Some(r)
}

pub fn parse_domain(text: &str) -> Result<DomainAst, PddlError> {
    parse_domain_named(text, "<domain>")
}

pub fn parse_domain_named(text: &str, file: &str) -> Result<DomainAst, PddlError> {
    let toks = lex(text).map_err(|(span, msg)| PddlError::parse(file, span, msg))?;
    let mut c = Cursor {
        toks: &toks,
        pos: 0,
        file,
    };
    let mut dom = DomainAst::default();

    c.expect_lparen()?;
    c.expect_sym("define")?;
    c.expect_lparen()?;
    c.expect_sym("domain")?;
    dom.name = c.sym()?.0;
    c.expect_rparen()?;

    while !c.at_rparen() {
        c.expect_lparen()?;
        let t = c.next()?;
        let key = match &t.tok {
            Tok::Key(k) => k.clone(),
            _ => return Err(PddlError::parse(file, t.span, "expected a `:section` keyword")),
        };
        match key.as_str() {
            "requirements" => {
                while !c.at_rparen() {
                    let t = c.next()?;
                    match &t.tok {
                        Tok::Key(k) => dom.requirements.push(k.clone()),
                        _ => return Err(PddlError::parse(file, t.span, "expected a requirement flag")),
                    }
                }
                c.expect_rparen()?;
            }
            "types" => {
                let names = parse_typed_names(&mut c)?;
                for n in names {
                    dom.types.push((n.name, n.ty));
                }
                c.expect_rparen()?;
            }
            "predicates" => {
                while !c.at_rparen() {
                    let span = c.expect_lparen()?;
                    let (name, _) = c.sym()?;
                    let params = parse_typed_vars(&mut c)?;
                    c.expect_rparen()?;
                    dom.predicates.push(PredicateDecl { name, params, span });
                }
                c.expect_rparen()?;
            }
            "functions" => {
                while !c.at_rparen() {
                    let span = c.expect_lparen()?;
                    let (name, _) = c.sym()?;
                    let params = parse_typed_vars(&mut c)?;
                    c.expect_rparen()?;
                    dom.functions.push(FunctionDecl { name, params, span });
                }
                c.expect_rparen()?;
            }
            "action" => {
                let a = parse_action(&mut c, t.span)?;
                for e in &a.eff {
                    if let EffAst::Rate { span, .. } = e {
                        return Err(PddlError::unsupported(
                            file,
                            *span,
                            "continuous effect in an instantaneous action",
                        ));
                    }
                }
                dom.actions.push(a);
            }
            "durative-action" => dom.duratives.push(parse_durative(&mut c, t.span)?),
            "process" => {
                let (name, params, pre, eff, span) = parse_proc_like(&mut c, t.span)?;
                let mut eff_cont = Vec::new();
                for e in eff {
                    match e {
                        EffAst::Rate { .. } => eff_cont.push(e),
                        EffAst::Bool { atom, .. } => {
                            return Err(PddlError::unsupported(
                                file,
                                atom.span,
                                "discrete effect in a process (processes carry only continuous effects)",
                            ))
                        }
                        EffAst::Assign { span, .. } | EffAst::Step { span, .. } => {
                            return Err(PddlError::unsupported(
                                file,
                                span,
                                "discrete numeric effect in a process",
                            ))
                        }
                    }
                }
                dom.processes.push(ProcessAst {
                    name,
                    params,
                    pre,
                    eff_cont,
                    span,
                });
            }
            "event" => {
                let (name, params, pre, eff, span) = parse_proc_like(&mut c, t.span)?;
                for e in &eff {
                    if let EffAst::Rate { span, .. } = e {
                        return Err(PddlError::unsupported(
                            file,
                            *span,
                            "continuous effect in an event (events carry only discrete effects)",
                        ));
                    }
                }
                dom.events.push(EventAst {
                    name,
                    params,
                    pre,
                    eff,
                    span,
                });
            }
            "constraints" | "derived" => {
                return Err(PddlError::unsupported(file, t.span, format!(":{key}")))
            }
            other => return Err(PddlError::parse(file, t.span, format!("unknown section `:{other}`"))),
        }
    }
    c.expect_rparen()?;
    if c.peek().is_some() {
        return Err(c.err("trailing input after domain definition"));
    }
    Ok(dom)
}

fn parse_typed_names(c: &mut Cursor) -> Result<Vec<TypedName>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Span)> = Vec::new();
    loop {
        match c.peek().map(|t| t.tok.clone()) {
            Some(Tok::Sym(s)) if s == "-" => {
                c.next()?;
                let (ty, _) = c.sym()?;
                for (name, span) in pending.drain(..) {
                    out.push(TypedName { name, ty: ty.clone(), span });
                }
            }
            Some(Tok::Sym(_)) => {
                let (name, span) = c.sym()?;
                pending.push((name, span));
            }
            _ => break,
        }
    }
    for (name, span) in pending {
        out.push(TypedName {
            name,
            ty: "object".into(),
            span,
        });
    }
    Ok(out)
}

fn parse_typed_vars(c: &mut Cursor) -> Result<Vec<TypedName>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Span)> = Vec::new();
    loop {
        match c.peek().map(|t| t.tok.clone()) {
            Some(Tok::Var(v)) => {
                let span = c.next()?.span;
                pending.push((v, span));
            }
            Some(Tok::Sym(s)) if s == "-" => {
                c.next()?;
                let (ty, _) = c.sym()?;
                for (name, span) in pending.drain(..) {
                    out.push(TypedName { name, ty: ty.clone(), span });
                }
            }
            _ => break,
        }
    }
    for (name, span) in pending {
        out.push(TypedName {
            name,
            ty: "object".into(),
            span,
        });
    }
    Ok(out)
}

fn parse_action(c: &mut Cursor, span: Span) -> Result<ActionAst, PddlError> {
    let (name, _) = c.sym()?;
    let mut params = Vec::new();
    let mut pre = Vec::new();
    let mut eff = Vec::new();
    while !c.at_rparen() {
        let t = c.next()?;
        let key = match &t.tok {
            Tok::Key(k) => k.clone(),
            _ => return Err(PddlError::parse(c.file, t.span, "expected `:parameters`, `:precondition` or `:effect`")),
        };
        match key.as_str() {
            "parameters" => {
                c.expect_lparen()?;
                params = parse_typed_vars(c)?;
                c.expect_rparen()?;
            }
            "precondition" => pre = parse_condition(c)?,
            "effect" => eff = parse_effects(c)?,
            other => return Err(PddlError::parse(c.file, t.span, format!("unknown action field `:{other}`"))),
        }
    }
    c.expect_rparen()?;
    Ok(ActionAst {
        name,
        params,
        pre,
        eff,
        span,
    })
}

fn parse_proc_like(
    c: &mut Cursor,
    span: Span,
) -> Result<(String, Vec<TypedName>, Vec<CondAst>, Vec<EffAst>, Span), PddlError> {
    let a = parse_action(c, span)?;
    Ok((a.name, a.params, a.pre, a.eff, a.span))
}

fn parse_durative(c: &mut Cursor, span: Span) -> Result<DurativeAst, PddlError> {
    let (name, _) = c.sym()?;
    let mut d = DurativeAst {
        name,
        params: Vec::new(),
        duration_op: CmpOp::Eq,
        duration: NumExprAst::Const(BigRational::from(BigInt::from(0))),
        cond_start: Vec::new(),
        cond_over: Vec::new(),
        cond_end: Vec::new(),
        eff_start: Vec::new(),
        eff_end: Vec::new(),
        eff_cont: Vec::new(),
        span,
    };
    let mut saw_duration = false;
    while !c.at_rparen() {
        let t = c.next()?;
        let key = match &t.tok {
            Tok::Key(k) => k.clone(),
            _ => return Err(PddlError::parse(c.file, t.span, "expected a durative-action field")),
        };
        match key.as_str() {
            "parameters" => {
                c.expect_lparen()?;
                d.params = parse_typed_vars(c)?;
                c.expect_rparen()?;
            }
            "duration" => {
                c.expect_lparen()?;
                let (op_s, op_span) = c.sym()?;
                let op = match op_s.as_str() {
                    "=" => CmpOp::Eq,
                    "<=" => CmpOp::Le,
                    ">=" => CmpOp::Ge,
                    other => {
                        return Err(PddlError::unsupported(
                            c.file,
                            op_span,
                            format!("duration constraint operator `{other}`"),
                        ))
                    }
                };
                let t = c.next()?;
                if !matches!(&t.tok, Tok::Var(v) if v == "duration") {
                    return Err(PddlError::parse(c.file, t.span, "expected `?duration`"));
                }
                d.duration_op = op;
                d.duration = parse_num_expr(c, false)?;
                c.expect_rparen()?;
                saw_duration = true;
            }
            "condition" => {
                let groups = parse_timed_groups(c)?;
                for (when, cond) in groups {
                    match when.as_str() {
                        "at-start" => d.cond_start.extend(cond),
                        "over-all" => d.cond_over.extend(cond),
                        "at-end" => d.cond_end.extend(cond),
                        _ => unreachable!(),
                    }
                }
            }
            "effect" => {
                let groups = parse_timed_effect_groups(c)?;
                for (when, effs) in groups {
                    match when.as_str() {
                        "at-start" => d.eff_start.extend(effs),
                        "at-end" => d.eff_end.extend(effs),
                        "continuous" => d.eff_cont.extend(effs),
                        _ => unreachable!(),
                    }
                }
            }
            other => {
                return Err(PddlError::parse(
                    c.file,
                    t.span,
                    format!("unknown durative-action field `:{other}`"),
                ))
            }
        }
    }
    c.expect_rparen()?;
    if !saw_duration {
        return Err(PddlError::parse(c.file, span, "durative action without a `:duration` field"));
    }
    Ok(d)
}

/// `(and (at start C) (over all C) ...)` or a single timed group.
fn parse_timed_groups(c: &mut Cursor) -> Result<Vec<(String, Vec<CondAst>)>, PddlError> {
    let mut out = Vec::new();
    c.expect_lparen()?;
    let (head, head_span) = c.sym()?;
    if head == "and" {
        while !c.at_rparen() {
            c.expect_lparen()?;
            let (h, s) = c.sym()?;
            out.push(parse_timed_group_body(c, &h, s)?);
        }
        c.expect_rparen()?;
    } else {
        out.push(parse_timed_group_body(c, &head, head_span)?);
    }
    Ok(out)
}

fn parse_timed_group_body(
    c: &mut Cursor,
    head: &str,
    span: Span,
) -> Result<(String, Vec<CondAst>), PddlError> {
    let when = match head {
        "at" => {
            let (w, wspan) = c.sym()?;
            match w.as_str() {
                "start" => "at-start".to_string(),
                "end" => "at-end".to_string(),
                other => return Err(PddlError::parse(c.file, wspan, format!("expected `start` or `end`, got `{other}`"))),
            }
        }
        "over" => {
            let (w, wspan) = c.sym()?;
            if w != "all" {
                return Err(PddlError::parse(c.file, wspan, "expected `all`"));
            }
            "over-all".to_string()
        }
        other => return Err(PddlError::parse(c.file, span, format!("expected a timed condition, got `{other}`"))),
    };
    let cond = parse_condition(c)?;
    c.expect_rparen()?;
    Ok((when, cond))
}

/// `(and (at start E) (at end E) (increase f (* #t e)) ...)`.
fn parse_timed_effect_groups(c: &mut Cursor) -> Result<Vec<(String, Vec<EffAst>)>, PddlError> {
    let mut out = Vec::new();
    c.expect_lparen()?;
    let (head, head_span) = c.sym()?;
    if head == "and" {
        while !c.at_rparen() {
            c.expect_lparen()?;
            let (h, s) = c.sym()?;
            out.push(parse_timed_effect_body(c, &h, s)?);
        }
        c.expect_rparen()?;
    } else {
        out.push(parse_timed_effect_body(c, &head, head_span)?);
    }
    Ok(out)
}

fn parse_timed_effect_body(
    c: &mut Cursor,
    head: &str,
    span: Span,
) -> Result<(String, Vec<EffAst>), PddlError> {
    match head {
        "at" => {
            let (w, wspan) = c.sym()?;
            let when = match w.as_str() {
                "start" => "at-start",
                "end" => "at-end",
                other => return Err(PddlError::parse(c.file, wspan, format!("expected `start` or `end`, got `{other}`"))),
            };
            let effs = parse_effect_body(c)?;
            c.expect_rparen()?;
            Ok((when.to_string(), effs))
        }
        "increase" | "decrease" => {
            let eff = parse_numeric_effect(c, head, span)?;
            match eff {
                EffAst::Rate { .. } => Ok(("continuous".to_string(), vec![eff])),
                _ => Err(PddlError::unsupported(
                    c.file,
                    span,
                    "discrete numeric effect outside `(at start ...)`/`(at end ...)` in a durative action",
                )),
            }
        }
        other => Err(PddlError::parse(c.file, span, format!("expected a timed effect, got `{other}`"))),
    }
}

/// A conjunction of literals and comparisons; a single literal/comparison; or `(and)`.
fn parse_condition(c: &mut Cursor) -> Result<Vec<CondAst>, PddlError> {
    let span = c.expect_lparen()?;
    parse_condition_after_lparen(c, span)
}

fn parse_condition_after_lparen(c: &mut Cursor, span: Span) -> Result<Vec<CondAst>, PddlError> {
    if c.at_rparen() {
        c.expect_rparen()?;
        return Ok(Vec::new());
    }
    let t = c.next()?;
    let head = match &t.tok {
        Tok::Sym(s) => s.clone(),
        _ => return Err(PddlError::parse(c.file, t.span, "expected a condition")),
    };
    match head.as_str() {
        "and" => {
            let mut out = Vec::new();
            while !c.at_rparen() {
                let inner_span = c.expect_lparen()?;
                out.extend(parse_condition_after_lparen(c, inner_span)?);
            }
            c.expect_rparen()?;
            Ok(out)
        }
        "or" | "imply" | "exists" | "forall" | "when" | "preference" => {
            Err(PddlError::unsupported(c.file, t.span, format!("`{head}` condition")))
        }
        "not" => {
            c.expect_lparen()?;
            let (pred, pspan) = c.sym()?;
            let args = parse_terms(c)?;
            c.expect_rparen()?;
            c.expect_rparen()?;
            Ok(vec![CondAst::Lit {
                atom: AtomAst {
                    pred,
                    args,
                    span: pspan,
                },
                positive: false,
            }])
        }
        "<" | "<=" | "=" | ">=" | ">" | "!=" => {
            let op = cmp_op(&head);
            let lhs = parse_num_expr(c, false)?;
            let rhs = parse_num_expr(c, false)?;
            c.expect_rparen()?;
            Ok(vec![CondAst::Cmp {
                op,
                lhs,
                rhs,
                span: t.span,
            }])
        }
        _ => {
            let args = parse_terms(c)?;
            c.expect_rparen()?;
            Ok(vec![CondAst::Lit {
                atom: AtomAst {
                    pred: head,
                    args,
                    span,
                },
                positive: true,
            }])
        }
    }
}

fn cmp_op(s: &str) -> CmpOp {
    match s {
        "<" => CmpOp::Lt,
        "<=" => CmpOp::Le,
        "=" => CmpOp::Eq,
        "!=" => CmpOp::Ne,
        ">=" => CmpOp::Ge,
        ">" => CmpOp::Gt,
        _ => unreachable!(),
    }
}

fn parse_terms(c: &mut Cursor) -> Result<Vec<Term>, PddlError> {
    let mut out = Vec::new();
    loop {
        match c.peek().map(|t| t.tok.clone()) {
            Some(Tok::Var(v)) => {
                c.next()?;
                out.push(Term::Var(v));
            }
            Some(Tok::Sym(s)) => {
                c.next()?;
                out.push(Term::Obj(s));
            }
            _ => break,
        }
    }
    Ok(out)
}

fn parse_effects(c: &mut Cursor) -> Result<Vec<EffAst>, PddlError> {
    c.expect_lparen()?;
    let t = c.next()?;
    let head = match &t.tok {
        Tok::Sym(s) => s.clone(),
        _ => return Err(PddlError::parse(c.file, t.span, "expected an effect")),
    };
    if head == "and" {
        let mut out = Vec::new();
        while !c.at_rparen() {
            out.extend(parse_one_effect(c)?);
        }
        c.expect_rparen()?;
        Ok(out)
    } else {
        let e = parse_one_effect_after_head(c, &head, t.span)?;
        Ok(vec![e])
    }
}

fn parse_effect_body(c: &mut Cursor) -> Result<Vec<EffAst>, PddlError> {
    parse_effects(c)
}

fn parse_one_effect(c: &mut Cursor) -> Result<Vec<EffAst>, PddlError> {
    let span = c.expect_lparen()?;
    let t = c.next()?;
    let head = match &t.tok {
        Tok::Sym(s) => s.clone(),
        _ => return Err(PddlError::parse(c.file, span, "expected an effect")),
    };
    Ok(vec![parse_one_effect_after_head(c, &head, t.span)?])
}

fn parse_one_effect_after_head(c: &mut Cursor, head: &str, span: Span) -> Result<EffAst, PddlError> {
    match head {
        "not" => {
            c.expect_lparen()?;
            let (pred, pspan) = c.sym()?;
            let args = parse_terms(c)?;
            c.expect_rparen()?;
            c.expect_rparen()?;
            Ok(EffAst::Bool {
                atom: AtomAst {
                    pred,
                    args,
                    span: pspan,
                },
                positive: false,
            })
        }
        "assign" => {
            let fluent = parse_fluent_ref(c)?;
            let expr = parse_num_expr(c, false)?;
            c.expect_rparen()?;
            Ok(EffAst::Assign { fluent, expr, span })
        }
        "increase" | "decrease" => parse_numeric_effect(c, head, span),
        "when" | "forall" => Err(PddlError::unsupported(c.file, span, format!("`{head}` effect"))),
        "scale-up" | "scale-down" => {
            Err(PddlError::unsupported(c.file, span, format!("`{head}` effect")))
        }
        _ => {
            let args = parse_terms(c)?;
            c.expect_rparen()?;
            Ok(EffAst::Bool {
                atom: AtomAst {
                    pred: head.to_string(),
                    args,
                    span,
                },
                positive: true,
            })
        }
    }
}

/// Handles `(increase f e)` and `(increase f (* #t e))`; caller consumed the head.
fn parse_numeric_effect(c: &mut Cursor, head: &str, span: Span) -> Result<EffAst, PddlError> {
    let dir = if head == "increase" { Dir::Incr } else { Dir::Decr };
    let fluent = parse_fluent_ref(c)?;
    // Look for the rate form (* #t e) / (* e #t).
    let save = c.pos;
    if let Some(Token { tok: Tok::LParen, .. }) = c.peek() {
        c.next()?;
        if let Some(Token { tok: Tok::Sym(s), .. }) = c.peek() {
            if s == "*" {
                c.next()?;
                // first factor
                let first_is_t = matches!(c.peek().map(|t| &t.tok), Some(Tok::Sym(s)) if s == "#t");
                if first_is_t {
                    c.next()?;
                    let expr = parse_num_expr(c, false)?;
                    c.expect_rparen()?;
                    c.expect_rparen()?;
                    return Ok(EffAst::Rate { fluent, dir, expr, span });
                }
                let lhs = parse_num_expr(c, false)?;
                let second_is_t = matches!(c.peek().map(|t| &t.tok), Some(Tok::Sym(s)) if s == "#t");
                if second_is_t {
                    c.next()?;
                    c.expect_rparen()?;
                    c.expect_rparen()?;
                    return Ok(EffAst::Rate { fluent, dir, expr: lhs, span });
                }
                let rhs = parse_num_expr(c, false)?;
                c.expect_rparen()?;
                c.expect_rparen()?;
                return Ok(EffAst::Step {
                    fluent,
                    dir,
                    expr: NumExprAst::Mul(Box::new(lhs), Box::new(rhs)),
                    span,
                });
            }
        }
        c.pos = save;
    }
    let expr = parse_num_expr(c, false)?;
    c.expect_rparen()?;
    Ok(EffAst::Step { fluent, dir, expr, span })
}

fn parse_fluent_ref(c: &mut Cursor) -> Result<(String, Vec<Term>), PddlError> {
    c.expect_lparen()?;
    let (name, _) = c.sym()?;
    let args = parse_terms(c)?;
    c.expect_rparen()?;
    Ok((name, args))
}

fn parse_num_expr(c: &mut Cursor, in_rate: bool) -> Result<NumExprAst, PddlError> {
    let t = c.next()?;
    match &t.tok {
        Tok::Num(raw) => parse_rational(raw)
            .map(NumExprAst::Const)
            .ok_or_else(|| PddlError::parse(c.file, t.span, format!("malformed number `{raw}`"))),
        Tok::Var(v) if v == "duration" => Ok(NumExprAst::Duration),
        Tok::Var(v) => Err(PddlError::parse(
            c.file,
            t.span,
            format!("unexpected variable `?{v}` in a numeric expression"),
        )),
        Tok::Sym(s) if s == "#t" => Err(PddlError::unsupported(
            c.file,
            t.span,
            "`#t` outside a `(* #t expr)` rate effect",
        )),
        Tok::LParen => {
            let (op, op_span) = c.sym()?;
            match op.as_str() {
                "+" | "*" => {
                    let mut args = Vec::new();
                    while !c.at_rparen() {
                        args.push(parse_num_expr(c, in_rate)?);
                    }
                    c.expect_rparen()?;
                    if args.is_empty() {
                        return Err(PddlError::parse(c.file, op_span, format!("`{op}` needs arguments")));
                    }
                    let mut it = args.into_iter();
                    let mut acc = it.next().unwrap();
                    for a in it {
                        acc = if op == "+" {
                            NumExprAst::Add(Box::new(acc), Box::new(a))
                        } else {
                            NumExprAst::Mul(Box::new(acc), Box::new(a))
                        };
                    }
                    Ok(acc)
                }
                "-" => {
                    let first = parse_num_expr(c, in_rate)?;
                    if c.at_rparen() {
                        c.expect_rparen()?;
                        return Ok(NumExprAst::Sub(
                            Box::new(NumExprAst::Const(BigRational::from(BigInt::from(0)))),
                            Box::new(first),
                        ));
                    }
                    let second = parse_num_expr(c, in_rate)?;
                    c.expect_rparen()?;
                    Ok(NumExprAst::Sub(Box::new(first), Box::new(second)))
                }
                "/" => {
                    let a = parse_num_expr(c, in_rate)?;
                    let b = parse_num_expr(c, in_rate)?;
                    c.expect_rparen()?;
                    Ok(NumExprAst::Div(Box::new(a), Box::new(b)))
                }
                "sqrt" => {
                    let a = parse_num_expr(c, in_rate)?;
                    c.expect_rparen()?;
                    Ok(NumExprAst::Sqrt(Box::new(a)))
                }
                "pow" | "^" => {
                    let a = parse_num_expr(c, in_rate)?;
                    let b = parse_num_expr(c, in_rate)?;
                    c.expect_rparen()?;
                    Ok(NumExprAst::Pow(Box::new(a), Box::new(b)))
                }
                name => {
                    let args = parse_terms(c)?;
                    c.expect_rparen()?;
                    Ok(NumExprAst::Fluent(name.to_string(), args))
                }
            }
        }
        _ => Err(PddlError::parse(c.file, t.span, "expected a numeric expression")),
    }
}

pub fn parse_problem(text: &str, domain: &DomainAst) -> Result<ProblemAst, PddlError> {
    parse_problem_named(text, domain, "<problem>")
}

pub fn parse_problem_named(
    text: &str,
    domain: &DomainAst,
    file: &str,
) -> Result<ProblemAst, PddlError> {
    let toks = lex(text).map_err(|(span, msg)| PddlError::parse(file, span, msg))?;
    let mut c = Cursor {
        toks: &toks,
        pos: 0,
        file,
    };
    c.expect_lparen()?;
    c.expect_sym("define")?;
    c.expect_lparen()?;
    c.expect_sym("problem")?;
    let name = c.sym()?.0;
    c.expect_rparen()?;

    let mut prob = ProblemAst {
        name,
        domain: String::new(),
        objects: Vec::new(),
        init_bool: Vec::new(),
        init_num: Vec::new(),
        goal: Vec::new(),
    };

    while !c.at_rparen() {
        c.expect_lparen()?;
        let t = c.next()?;
        let key = match &t.tok {
            Tok::Key(k) => k.clone(),
            _ => return Err(PddlError::parse(file, t.span, "expected a `:section` keyword")),
        };
        match key.as_str() {
            "domain" => {
                prob.domain = c.sym()?.0;
                c.expect_rparen()?;
                if prob.domain != domain.name {
                    return Err(PddlError::Semantic {
                        file: file.into(),
                        msg: format!(
                            "problem references domain `{}` but `{}` was parsed",
                            prob.domain, domain.name
                        ),
                    });
                }
            }
            "objects" => {
                prob.objects = parse_typed_names(&mut c)?;
                c.expect_rparen()?;
            }
            "init" => {
                while !c.at_rparen() {
                    let span = c.expect_lparen()?;
                    let t = c.next()?;
                    match &t.tok {
                        Tok::Sym(s) if s == "=" => {
                            let fluent = parse_fluent_ref(&mut c)?;
                            let t = c.next()?;
                            let value = match &t.tok {
                                Tok::Num(raw) => parse_rational(raw).ok_or_else(|| {
                                    PddlError::parse(file, t.span, format!("malformed number `{raw}`"))
                                })?,
                                _ => return Err(PddlError::parse(file, t.span, "expected a numeric literal in `:init`")),
                            };
                            c.expect_rparen()?;
                            prob.init_num.push((fluent, value, span));
                        }
                        Tok::Sym(pred) => {
                            let pred = pred.clone();
                            let args = parse_terms(&mut c)?;
                            c.expect_rparen()?;
                            prob.init_bool.push(AtomAst { pred, args, span });
                        }
                        _ => return Err(PddlError::parse(file, t.span, "expected an init element")),
                    }
                }
                c.expect_rparen()?;
            }
            "goal" => {
                prob.goal = parse_condition(&mut c)?;
                c.expect_rparen()?;
            }
            "metric" => {
                return Err(PddlError::unsupported(file, t.span, ":metric"));
            }
            other => return Err(PddlError::parse(file, t.span, format!("unknown section `:{other}`"))),
        }
    }
    c.expect_rparen()?;
    if c.peek().is_some() {
        return Err(c.err("trailing input after problem definition"));
    }

    check_problem(&prob, domain, file)?;
    Ok(prob)
}

/// Cross-checks problem symbols against the domain declarations.
fn check_problem(prob: &ProblemAst, domain: &DomainAst, file: &str) -> Result<(), PddlError> {
    let preds: std::collections::BTreeMap<&str, usize> = domain
        .predicates
        .iter()
        .map(|p| (p.name.as_str(), p.params.len()))
        .collect();
    let funcs: std::collections::BTreeMap<&str, usize> = domain
        .functions
        .iter()
        .map(|f| (f.name.as_str(), f.params.len()))
        .collect();
    let objects: std::collections::BTreeSet<&str> =
        prob.objects.iter().map(|o| o.name.as_str()).collect();

    let check_obj = |t: &Term, span: Span| -> Result<(), PddlError> {
        match t {
            Term::Obj(o) if !objects.contains(o.as_str()) => {
                Err(PddlError::undeclared(file, span, o.clone()))
            }
            Term::Var(v) => Err(PddlError::parse(
                file,
                span,
                format!("free variable `?{v}` in problem"),
            )),
            _ => Ok(()),
        }
    };

    for atom in &prob.init_bool {
        match preds.get(atom.pred.as_str()) {
            None => return Err(PddlError::undeclared(file, atom.span, atom.pred.clone())),
            Some(&n) if n != atom.args.len() => {
                return Err(PddlError::parse(
                    file,
                    atom.span,
                    format!("predicate `{}` expects {n} arguments", atom.pred),
                ))
            }
            _ => {}
        }
        for arg in &atom.args {
            check_obj(arg, atom.span)?;
        }
    }
    for ((fname, args), _, span) in &prob.init_num {
        match funcs.get(fname.as_str()) {
            None => return Err(PddlError::undeclared(file, *span, fname.clone())),
            Some(&n) if n != args.len() => {
                return Err(PddlError::parse(
                    file,
                    *span,
                    format!("function `{fname}` expects {n} arguments"),
                ))
            }
            _ => {}
        }
        for arg in args {
            check_obj(arg, *span)?;
        }
    }
    for cond in &prob.goal {
        check_cond(cond, &preds, &funcs, &objects, file)?;
    }
    Ok(())
}

fn check_cond(
    cond: &CondAst,
    preds: &std::collections::BTreeMap<&str, usize>,
    funcs: &std::collections::BTreeMap<&str, usize>,
    objects: &std::collections::BTreeSet<&str>,
    file: &str,
) -> Result<(), PddlError> {
    match cond {
        CondAst::Lit { atom, .. } => {
            match preds.get(atom.pred.as_str()) {
                None => return Err(PddlError::undeclared(file, atom.span, atom.pred.clone())),
                Some(&n) if n != atom.args.len() => {
                    return Err(PddlError::parse(
                        file,
                        atom.span,
                        format!("predicate `{}` expects {n} arguments", atom.pred),
                    ))
                }
                _ => {}
            }
            for arg in &atom.args {
                if let Term::Obj(o) = arg {
                    if !objects.contains(o.as_str()) {
                        return Err(PddlError::undeclared(file, atom.span, o.clone()));
                    }
                }
            }
            Ok(())
        }
        CondAst::Cmp { lhs, rhs, span, .. } => {
            check_expr(lhs, funcs, objects, file, *span)?;
            check_expr(rhs, funcs, objects, file, *span)
        }
    }
}

fn check_expr(
    expr: &NumExprAst,
    funcs: &std::collections::BTreeMap<&str, usize>,
    objects: &std::collections::BTreeSet<&str>,
    file: &str,
    span: Span,
) -> Result<(), PddlError> {
    match expr {
        NumExprAst::Const(_) | NumExprAst::Duration => Ok(()),
        NumExprAst::Fluent(name, args) => {
            match funcs.get(name.as_str()) {
                None => return Err(PddlError::undeclared(file, span, name.clone())),
                Some(&n) if n != args.len() => {
                    return Err(PddlError::parse(
                        file,
                        span,
                        format!("function `{name}` expects {n} arguments"),
                    ))
                }
                _ => {}
            }
            for arg in args {
                if let Term::Obj(o) = arg {
                    if !objects.contains(o.as_str()) {
                        return Err(PddlError::undeclared(file, span, o.clone()));
                    }
                }
            }
            Ok(())
        }
        NumExprAst::Add(a, b)
        | NumExprAst::Sub(a, b)
        | NumExprAst::Mul(a, b)
        | NumExprAst::Div(a, b)
        | NumExprAst::Pow(a, b) => {
            check_expr(a, funcs, objects, file, span)?;
            check_expr(b, funcs, objects, file, span)
        }
        NumExprAst::Sqrt(a) => check_expr(a, funcs, objects, file, span),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    const GEN_DOMAIN: &str = r#"
        (define (domain generator)
          (:requirements :typing :fluents :durative-actions :processes)
          (:types tank - object)
          (:predicates (generate_ran) (refueling ?t - tank) (unused ?t - tank))
          (:functions (fuel_level) (capacity) (tank_level ?t - tank))
          (:durative-action generate
            :parameters ()
            :duration (= ?duration 1000)
            :condition (and (over all (> (fuel_level) 0))
                            (over all (<= (fuel_level) (capacity))))
            :effect (and (decrease (fuel_level) (* #t 1))
                         (at end (generate_ran))))
          (:durative-action refuel
            :parameters (?t - tank)
            :duration (= ?duration (/ (tank_level ?t) 2))
            :condition (and (at start (unused ?t)))
            :effect (and (at start (not (unused ?t)))
                         (at start (refueling ?t))
                         (at end (not (refueling ?t)))
                         (increase (fuel_level) (* #t 2))
                         (decrease (tank_level ?t) (* #t 2)))))
    "#;

    #[test]
    fn parses_generator_domain() {
        let d = parse_domain(GEN_DOMAIN).unwrap();
        assert_eq!(d.name, "generator");
        assert_eq!(d.types, vec![("tank".to_string(), "object".to_string())]);
        assert_eq!(d.predicates.len(), 3);
        assert_eq!(d.functions.len(), 3);
        assert_eq!(d.duratives.len(), 2);

        let gen = &d.duratives[0];
        assert_eq!(gen.name, "generate");
        assert_eq!(gen.duration_op, CmpOp::Eq);
        assert!(matches!(gen.duration, NumExprAst::Const(_)));
        assert_eq!(gen.cond_over.len(), 2);
        assert_eq!(gen.eff_cont.len(), 1);
        assert!(matches!(
            &gen.eff_cont[0],
            EffAst::Rate { dir: Dir::Decr, .. }
        ));
        assert_eq!(gen.eff_end.len(), 1);

        let refuel = &d.duratives[1];
        assert_eq!(refuel.params.len(), 1);
        assert_eq!(refuel.eff_cont.len(), 2);
        assert!(matches!(refuel.duration, NumExprAst::Div(_, _)));
    }

    #[test]
    fn parses_process_and_event() {
        let text = r#"
            (define (domain water)
              (:predicates (draining) (empty))
              (:functions (level) (flow))
              (:process drain
                :parameters ()
                :precondition (and (draining) (> (level) 0))
                :effect (decrease (level) (* #t (sqrt (* 19.6 (level))))))
              (:event hit_bottom
                :parameters ()
                :precondition (and (draining) (<= (level) 0))
                :effect (and (not (draining)) (empty))))
        "#;
        let d = parse_domain(text).unwrap();
        assert_eq!(d.processes.len(), 1);
        assert_eq!(d.events.len(), 1);
        let p = &d.processes[0];
        assert_eq!(p.pre.len(), 2);
        assert!(matches!(&p.eff_cont[0], EffAst::Rate { .. }));
        let e = &d.events[0];
        assert_eq!(e.eff.len(), 2);
    }

    #[test]
    fn rate_factor_order_is_commutative() {
        let text = r#"
            (define (domain d)
              (:functions (x) (v))
              (:process p1 :parameters ()
                :precondition (and)
                :effect (increase (x) (* #t (v))))
              (:process p2 :parameters ()
                :precondition (and)
                :effect (increase (x) (* (v) #t))))
        "#;
        let d = parse_domain(text).unwrap();
        let r1 = match &d.processes[0].eff_cont[0] {
            EffAst::Rate { expr, .. } => expr.clone(),
            e => panic!("expected rate effect, got {e:?}"),
        };
        let r2 = match &d.processes[1].eff_cont[0] {
            EffAst::Rate { expr, .. } => expr.clone(),
            e => panic!("expected rate effect, got {e:?}"),
        };
        assert_eq!(r1, r2);
    }

    #[test]
    fn rejects_disjunctive_conditions() {
        let text = r#"
            (define (domain d)
              (:predicates (a) (b))
              (:action act :parameters ()
                :precondition (or (a) (b))
                :effect (a)))
        "#;
        assert!(matches!(
            parse_domain(text),
            Err(PddlError::Unsupported { .. })
        ));
    }

    #[test]
    fn rejects_rate_effect_in_instantaneous_action() {
        let text = r#"
            (define (domain d)
              (:functions (x))
              (:action act :parameters ()
                :precondition (and)
                :effect (increase (x) (* #t 1))))
        "#;
        assert!(parse_domain(text).is_err());
    }

    #[test]
    fn exact_decimal_rationals() {
        use num_bigint::BigInt;
        let r = parse_rational("12.5").unwrap();
        assert_eq!(r, BigRational::new(BigInt::from(25), BigInt::from(2)));
        let r = parse_rational("0.1").unwrap();
        assert_eq!(r, BigRational::new(BigInt::from(1), BigInt::from(10)));
        assert_eq!(parse_rational("3"), Some(BigRational::from(BigInt::from(3))));
        assert_eq!(parse_rational("-1.0"), Some(-BigRational::one()));
        assert_eq!(parse_rational("."), None);
    }

    #[test]
    fn problem_checks_against_domain() {
        let d = parse_domain(GEN_DOMAIN).unwrap();
        let good = r#"
            (define (problem p1) (:domain generator)
              (:objects tank1 - tank)
              (:init (unused tank1)
                     (= (fuel_level) 980) (= (capacity) 1000)
                     (= (tank_level tank1) 25))
              (:goal (and (generate_ran))))
        "#;
        let p = parse_problem(good, &d).unwrap();
        assert_eq!(p.objects.len(), 1);
        assert_eq!(p.init_bool.len(), 1);
        assert_eq!(p.init_num.len(), 3);
        assert_eq!(p.goal.len(), 1);

        let bad_pred = good.replace("(generate_ran)", "(all_done)");
        assert!(matches!(
            parse_problem(&bad_pred, &d),
            Err(PddlError::UndeclaredSymbol { .. })
        ));

        let bad_obj = good.replace("(unused tank1)", "(unused tank9)");
        assert!(parse_problem(&bad_obj, &d).is_err());

        let bad_domain = good.replace("(:domain generator)", "(:domain reactor)");
        assert!(parse_problem(&bad_domain, &d).is_err());
    }
}
