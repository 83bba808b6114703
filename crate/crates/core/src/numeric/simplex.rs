//! Exact feasibility for affine networks.
//!
//! General simplex over the rationals with bound pairs (value, δ-coefficient)
//! so strict inequalities are handled without leaving exact arithmetic: x > c
//! becomes x ≥ c + δ for a symbolic infinitesimal δ > 0. After a model is
//! found a concrete positive δ is computed that realizes every bound, so the
//! returned assignment satisfies the original strict constraints exactly.
//! Pivoting uses Bland's rule, which guarantees termination.
//! Inequations (≠) are removed up front by case splitting into < and >.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{affine, CmpOp, ConstraintNetwork, NumericSolution, Outcome, Value};

/// Rational plus a δ-multiple: r + k·δ, ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct DRat {
    r: BigRational,
    k: BigRational,
}

impl DRat {
    fn rat(r: BigRational) -> Self {
        DRat {
            r,
            k: BigRational::zero(),
        }
    }

    fn with_delta(r: BigRational, k: i64) -> Self {
        DRat {
            r,
            k: BigRational::from_integer(k.into()),
        }
    }

    fn zero() -> Self {
        DRat::rat(BigRational::zero())
    }

    fn add(&self, o: &DRat) -> Self {
        DRat {
            r: &self.r + &o.r,
            k: &self.k + &o.k,
        }
    }

    fn sub(&self, o: &DRat) -> Self {
        DRat {
            r: &self.r - &o.r,
            k: &self.k - &o.k,
        }
    }

    fn scale(&self, c: &BigRational) -> Self {
        DRat {
            r: &self.r * c,
            k: &self.k * c,
        }
    }
}

/// A bound together with the constraint index that introduced it (`None` for
/// declared variable domains).
type Bound = Option<(DRat, Option<usize>)>;

struct Tableau {
    /// Row-major coefficients over all variables; row r encodes
    /// x_basic[r] = Σ_j tab[r][j]·x_j with tab[r][basic[r]] = 0.
    tab: Vec<Vec<BigRational>>,
    basic: Vec<usize>,
    /// var -> row when basic.
    row_of: Vec<Option<usize>>,
    beta: Vec<DRat>,
    lo: Vec<Bound>,
    hi: Vec<Bound>,
}

impl Tableau {
    fn nvars(&self) -> usize {
        self.beta.len()
    }

    fn update_nonbasic(&mut self, j: usize, v: DRat) {
        let d = v.sub(&self.beta[j]);
        for (r, row) in self.tab.iter().enumerate() {
            if !row[j].is_zero() {
                let b = self.basic[r];
                self.beta[b] = self.beta[b].add(&d.scale(&row[j]));
            }
        }
        self.beta[j] = v;
    }

    /// Moves basic variable of row `r` to value `v`, entering `j` into the
    /// basis in its place.
    fn pivot_and_update(&mut self, r: usize, j: usize, v: DRat) {
        let b = self.basic[r];
        let a = self.tab[r][j].clone();
        let theta = v.sub(&self.beta[b]).scale(&(BigRational::one() / &a));
        self.beta[b] = v;
        self.beta[j] = self.beta[j].add(&theta);
        for (r2, row) in self.tab.iter().enumerate() {
            if r2 != r && !row[j].is_zero() {
                let b2 = self.basic[r2];
                self.beta[b2] = self.beta[b2].add(&theta.scale(&row[j]));
            }
        }
        self.pivot(r, j);
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let b = self.basic[r];
        let a = self.tab[r][j].clone();
        let inv = BigRational::one() / &a;
        // Rewrite row r as a definition of x_j.
        let old = self.tab[r].clone();
        let n = self.nvars();
        let mut newrow = vec![BigRational::zero(); n];
        for (k, c) in old.iter().enumerate() {
            if k != j && !c.is_zero() {
                newrow[k] = -(c * &inv);
            }
        }
        newrow[b] = inv;
        // Substitute x_j in every other row.
        for r2 in 0..self.tab.len() {
            if r2 == r {
                continue;
            }
            let c = self.tab[r2][j].clone();
            if c.is_zero() {
                continue;
            }
            self.tab[r2][j] = BigRational::zero();
            for k in 0..n {
                if !newrow[k].is_zero() {
                    let add = &newrow[k] * &c;
                    self.tab[r2][k] += add;
                }
            }
        }
        self.tab[r] = newrow;
        self.basic[r] = j;
        self.row_of[b] = None;
        self.row_of[j] = Some(r);
    }

    /// Bland-rule feasibility loop; `Err(core)` lists conflicting constraint
    /// indices when no pivot can fix an out-of-bounds basic variable.
    fn check(&mut self) -> Result<(), Vec<usize>> {
        loop {
            let viol = (0..self.nvars())
                .filter(|&v| self.row_of[v].is_some())
                .find(|&v| {
                    matches!(&self.lo[v], Some((b, _)) if self.beta[v] < *b)
                        || matches!(&self.hi[v], Some((b, _)) if self.beta[v] > *b)
                });
            let b = match viol {
                None => return Ok(()),
                Some(v) => v,
            };
            let r = self.row_of[b].unwrap();
            let below = matches!(&self.lo[b], Some((bound, _)) if self.beta[b] < *bound);
            let target = if below {
                self.lo[b].as_ref().unwrap().0.clone()
            } else {
                self.hi[b].as_ref().unwrap().0.clone()
            };
            let mut entering = None;
            for j in 0..self.nvars() {
                if self.row_of[j].is_some() || self.tab[r][j].is_zero() {
                    continue;
                }
                let a_pos = self.tab[r][j].is_positive();
                // To raise x_b we need a_j>0 with slack above, or a_j<0 with
                // slack below (mirrored when lowering).
                let can = if below == a_pos {
                    self.hi[j]
                        .as_ref()
                        .map(|(u, _)| self.beta[j] < *u)
                        .unwrap_or(true)
                } else {
                    self.lo[j]
                        .as_ref()
                        .map(|(l, _)| self.beta[j] > *l)
                        .unwrap_or(true)
                };
                if can {
                    entering = Some(j);
                    break;
                }
            }
            match entering {
                Some(j) => self.pivot_and_update(r, j, target),
                None => {
                    // Conflict: the violated bound of b plus the binding
                    // bounds of every nonbasic in its row.
                    let mut core = Vec::new();
                    let own = if below { &self.lo[b] } else { &self.hi[b] };
                    if let Some((_, Some(ci))) = own {
                        core.push(*ci);
                    }
                    for j in 0..self.nvars() {
                        if self.row_of[j].is_some() || self.tab[r][j].is_zero() {
                            continue;
                        }
                        let a_pos = self.tab[r][j].is_positive();
                        let blocking = if below == a_pos { &self.hi[j] } else { &self.lo[j] };
                        if let Some((_, Some(ci))) = blocking {
                            core.push(*ci);
                        }
                    }
                    core.sort_unstable();
                    core.dedup();
                    return Err(core);
                }
            }
        }
    }
}

fn tighten_lo(slot: &mut Bound, b: DRat, src: Option<usize>) {
    if slot.as_ref().map(|(cur, _)| b > *cur).unwrap_or(true) {
        *slot = Some((b, src));
    }
}

fn tighten_hi(slot: &mut Bound, b: DRat, src: Option<usize>) {
    if slot.as_ref().map(|(cur, _)| b < *cur).unwrap_or(true) {
        *slot = Some((b, src));
    }
}

pub fn solve(net: &ConstraintNetwork) -> Outcome {
    let n = net.vars.len();
    // Affine rows (coeffs, op, rhs-constant, constraint index); ≠ deferred.
    let mut rows = Vec::new();
    let mut disequalities = Vec::new();
    for (ci, c) in net.constraints.iter().enumerate() {
        let (cl, kl) = match affine(&c.lhs, n) {
            Some(a) => a,
            None => return Outcome::Unknown,
        };
        let (cr, kr) = match affine(&c.rhs, n) {
            Some(a) => a,
            None => return Outcome::Unknown,
        };
        let coeffs: Vec<BigRational> = cl.into_iter().zip(cr).map(|(a, b)| a - b).collect();
        let rhs = kr - kl; // Σ coeffs·x ⋈ rhs
        if c.op == CmpOp::Ne {
            disequalities.push((coeffs, rhs, ci));
        } else {
            rows.push((coeffs, c.op, rhs, ci));
        }
    }
    if disequalities.len() > 20 {
        return Outcome::Unknown;
    }
    solve_split(net, &rows, &disequalities)
}

fn solve_split(
    net: &ConstraintNetwork,
    rows: &[(Vec<BigRational>, CmpOp, BigRational, usize)],
    disequalities: &[(Vec<BigRational>, BigRational, usize)],
) -> Outcome {
    match disequalities.split_first() {
        None => solve_base(net, rows),
        Some(((coeffs, rhs, ci), rest)) => {
            let mut first_core = None;
            for op in [CmpOp::Lt, CmpOp::Gt] {
                let mut ext = rows.to_vec();
                ext.push((coeffs.clone(), op, rhs.clone(), *ci));
                match solve_split(net, &ext, rest) {
                    Outcome::Sat(s) => return Outcome::Sat(s),
                    Outcome::Infeasible { core } => {
                        first_core.get_or_insert(core);
                    }
                    Outcome::Unknown => return Outcome::Unknown,
                }
            }
            Outcome::Infeasible {
                core: first_core.unwrap_or_default(),
            }
        }
    }
}

fn solve_base(
    net: &ConstraintNetwork,
    rows: &[(Vec<BigRational>, CmpOp, BigRational, usize)],
) -> Outcome {
    let n = net.vars.len();
    let total = n + rows.len();
    let mut lo: Vec<Bound> = vec![None; total];
    let mut hi: Vec<Bound> = vec![None; total];
    for (v, d) in net.vars.iter().enumerate() {
        if d.lo.is_finite() {
            if let Some(r) = BigRational::from_float(d.lo) {
                tighten_lo(&mut lo[v], DRat::rat(r), None);
            }
        }
        if d.hi.is_finite() {
            if let Some(r) = BigRational::from_float(d.hi) {
                tighten_hi(&mut hi[v], DRat::rat(r), None);
            }
        }
    }

    let mut tab = Vec::new();
    let mut basic = Vec::new();
    for (ri, (coeffs, op, rhs, ci)) in rows.iter().enumerate() {
        if coeffs.iter().all(Zero::is_zero) {
            // Ground comparison between constants.
            let zero = BigRational::zero();
            let sat = match op {
                CmpOp::Lt => zero < *rhs,
                CmpOp::Le => zero <= *rhs,
                CmpOp::Eq => zero == *rhs,
                CmpOp::Ge => zero >= *rhs,
                CmpOp::Gt => zero > *rhs,
                CmpOp::Ne => unreachable!("split before solve_base"),
            };
            if !sat {
                return Outcome::Infeasible { core: vec![*ci] };
            }
            // Keep the slack variable anyway so indices stay aligned.
        }
        let slack = n + ri;
        let mut row = vec![BigRational::zero(); total];
        row[..n].clone_from_slice(coeffs);
        tab.push(row);
        basic.push(slack);
        match op {
            CmpOp::Lt => tighten_hi(&mut hi[slack], DRat::with_delta(rhs.clone(), -1), Some(*ci)),
            CmpOp::Le => tighten_hi(&mut hi[slack], DRat::rat(rhs.clone()), Some(*ci)),
            CmpOp::Ge => tighten_lo(&mut lo[slack], DRat::rat(rhs.clone()), Some(*ci)),
            CmpOp::Gt => tighten_lo(&mut lo[slack], DRat::with_delta(rhs.clone(), 1), Some(*ci)),
            CmpOp::Eq => {
                tighten_lo(&mut lo[slack], DRat::rat(rhs.clone()), Some(*ci));
                tighten_hi(&mut hi[slack], DRat::rat(rhs.clone()), Some(*ci));
            }
            CmpOp::Ne => unreachable!("split before solve_base"),
        }
    }

    let mut row_of = vec![None; total];
    for (r, &b) in basic.iter().enumerate() {
        row_of[b] = Some(r);
    }
    let mut t = Tableau {
        tab,
        basic,
        row_of,
        beta: vec![DRat::zero(); total],
        lo,
        hi,
    };

    // Clamp nonbasic (original) variables into their declared domains.
    for v in 0..n {
        let b = &t.beta[v];
        let want = if matches!(&t.lo[v], Some((l, _)) if *b < *l) {
            Some(t.lo[v].as_ref().unwrap().0.clone())
        } else if matches!(&t.hi[v], Some((h, _)) if *b > *h) {
            Some(t.hi[v].as_ref().unwrap().0.clone())
        } else {
            None
        };
        if let Some(w) = want {
            t.update_nonbasic(v, w);
        }
    }

    match t.check() {
        Err(core) => Outcome::Infeasible { core },
        Ok(()) => {
            // Pick a concrete δ > 0 compatible with every bound.
            let mut delta = BigRational::one();
            for v in 0..t.nvars() {
                if let Some((b, _)) = &t.lo[v] {
                    let gap = &t.beta[v].r - &b.r;
                    let dk = &b.k - &t.beta[v].k;
                    if gap.is_positive() && dk.is_positive() {
                        delta = delta.min(gap / dk);
                    }
                }
                if let Some((b, _)) = &t.hi[v] {
                    let gap = &b.r - &t.beta[v].r;
                    let dk = &t.beta[v].k - &b.k;
                    if gap.is_positive() && dk.is_positive() {
                        delta = delta.min(gap / dk);
                    }
                }
            }
            let two = BigRational::from_integer(2.into());
            delta /= two;
            let values: Vec<Value> = (0..n)
                .map(|v| Value::Exact(&t.beta[v].r + &t.beta[v].k * &delta))
                .collect();
            Outcome::Sat(NumericSolution {
                values,
                max_residual: 0.0,
            })
        }
    }
}
