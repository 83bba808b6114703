//! Abstract syntax for the supported PDDL+ subset.

use num_rational::BigRational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub const ZERO: Span = Span { line: 0, col: 0 };
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Var(String),
    Obj(String),
}

impl Term {
    pub fn name(&self) -> &str {
        match self {
            Term::Var(s) | Term::Obj(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedName {
    pub name: String,
    pub ty: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<TypedName>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDecl {
    pub name: String,
    pub params: Vec<TypedName>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Copy)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn text(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }

    /// The complement used when a numeric condition is chosen to be false.
    pub fn complement(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Gt => CmpOp::Le,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NumExprAst {
    Const(BigRational),
    /// Reference to a numeric fluent, e.g. `(tank_level ?t)`.
    Fluent(String, Vec<Term>),
    /// `?duration` inside durative action bodies.
    Duration,
    Add(Box<NumExprAst>, Box<NumExprAst>),
    Sub(Box<NumExprAst>, Box<NumExprAst>),
    Mul(Box<NumExprAst>, Box<NumExprAst>),
    Div(Box<NumExprAst>, Box<NumExprAst>),
    Sqrt(Box<NumExprAst>),
    Pow(Box<NumExprAst>, Box<NumExprAst>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomAst {
    pub pred: String,
    pub args: Vec<Term>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CondAst {
    Lit { atom: AtomAst, positive: bool },
    Cmp {
        op: CmpOp,
        lhs: NumExprAst,
        rhs: NumExprAst,
        span: Span,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Dir {
    Incr,
    Decr,
}

impl Dir {
    pub fn text(self) -> &'static str {
        match self {
            Dir::Incr => "incr",
            Dir::Decr => "decr",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EffAst {
    Bool { atom: AtomAst, positive: bool },
    Assign {
        fluent: (String, Vec<Term>),
        expr: NumExprAst,
        span: Span,
    },
    /// Discrete `(increase f e)` / `(decrease f e)`.
    Step {
        fluent: (String, Vec<Term>),
        dir: Dir,
        expr: NumExprAst,
        span: Span,
    },
    /// Continuous `(increase f (* #t e))` / `(decrease f (* #t e))`.
    Rate {
        fluent: (String, Vec<Term>),
        dir: Dir,
        expr: NumExprAst,
        span: Span,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionAst {
    pub name: String,
    pub params: Vec<TypedName>,
    pub pre: Vec<CondAst>,
    pub eff: Vec<EffAst>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DurativeAst {
    pub name: String,
    pub params: Vec<TypedName>,
    pub duration_op: CmpOp,
    pub duration: NumExprAst,
    pub cond_start: Vec<CondAst>,
    pub cond_over: Vec<CondAst>,
    pub cond_end: Vec<CondAst>,
    pub eff_start: Vec<EffAst>,
    pub eff_end: Vec<EffAst>,
    /// Continuous effects only; always `EffAst::Rate`.
    pub eff_cont: Vec<EffAst>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessAst {
    pub name: String,
    pub params: Vec<TypedName>,
    pub pre: Vec<CondAst>,
    pub eff_cont: Vec<EffAst>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventAst {
    pub name: String,
    pub params: Vec<TypedName>,
    pub pre: Vec<CondAst>,
    pub eff: Vec<EffAst>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DomainAst {
    pub name: String,
    pub requirements: Vec<String>,
    /// `(type, supertype)` pairs; supertype defaults to `object`.
    pub types: Vec<(String, String)>,
    pub predicates: Vec<PredicateDecl>,
    pub functions: Vec<FunctionDecl>,
    pub actions: Vec<ActionAst>,
    pub duratives: Vec<DurativeAst>,
    pub processes: Vec<ProcessAst>,
    pub events: Vec<EventAst>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemAst {
    pub name: String,
    pub domain: String,
    pub objects: Vec<TypedName>,
    pub init_bool: Vec<AtomAst>,
    pub init_num: Vec<((String, Vec<Term>), BigRational, Span)>,
    pub goal: Vec<CondAst>,
}
