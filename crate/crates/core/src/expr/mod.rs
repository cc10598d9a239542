//! Symbolic expression kernel.
//!
//! Every [`Expr`] is kept in a canonical expanded form: a sorted sum of
//! monomials with exact rational coefficients. A monomial is a sorted product
//! of atoms raised to nonzero integer powers, where an atom is a chart
//! symbol, an elementary function application, or a sum raised to a negative
//! power. Products distribute over sums, so two polynomials that are equal as
//! polynomials are structurally equal. One identity is applied during
//! normalization: `tanh(u)^2 = 1 - sech(u)^2`, which keeps soliton profiles
//! in a unique form.

mod calculus;
mod display;
mod eval;
mod parse;
mod subst;
mod symbol;

use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub use eval::{Assignment, CompiledExpr};
pub use parse::parse_expr;
pub use subst::FuncRule;
pub use symbol::{Chart, Coord, FuncDecl, FuncSym, Name, Symbol, Var, MAX_JET_ORDER};

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("suffix `{suffix}` of `{ident}` does not name base coordinates or function arguments")]
    BadSuffix { ident: String, suffix: String },
    #[error("jet order overflow: `{symbol}` exceeds order {MAX_JET_ORDER}")]
    OrderOverflow { symbol: String },
    #[error("invalid name `{0}`")]
    InvalidName(String),
    #[error("name `{0}` is already declared or reserved")]
    DuplicateName(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("no value assigned to `{0}`")]
    MissingAssignment(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Elementary functions known to the kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElemFn {
    Sin,
    Cos,
    Exp,
    Tanh,
    Sech,
}

impl ElemFn {
    pub fn name(self) -> &'static str {
        match self {
            ElemFn::Sin => "sin",
            ElemFn::Cos => "cos",
            ElemFn::Exp => "exp",
            ElemFn::Tanh => "tanh",
            ElemFn::Sech => "sech",
        }
    }

    pub fn from_name(s: &str) -> Option<ElemFn> {
        Some(match s {
            "sin" => ElemFn::Sin,
            "cos" => ElemFn::Cos,
            "exp" => ElemFn::Exp,
            "tanh" => ElemFn::Tanh,
            "sech" => ElemFn::Sech,
            _ => return None,
        })
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            ElemFn::Sin => x.sin(),
            ElemFn::Cos => x.cos(),
            ElemFn::Exp => x.exp(),
            ElemFn::Tanh => x.tanh(),
            ElemFn::Sech => 1.0 / x.cosh(),
        }
    }

    /// Value at zero.
    fn at_zero(self) -> i64 {
        match self {
            ElemFn::Sin | ElemFn::Tanh => 0,
            ElemFn::Cos | ElemFn::Exp | ElemFn::Sech => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Atom {
    Sym(Symbol),
    App(ElemFn, Expr),
    /// A sum of at least two terms with unit leading coefficient; only ever
    /// raised to negative powers.
    Group(Expr),
}

pub(crate) type Monomial = Vec<(Atom, i32)>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct Term {
    pub(crate) mono: Monomial,
    pub(crate) coeff: Rational,
}

/// Immutable canonical symbolic expression.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(Arc<Vec<Term>>);

fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn rat_pow(q: &Rational, n: i32) -> Rational {
    let mut acc = Rational::one();
    for _ in 0..n.unsigned_abs() {
        acc *= q;
    }
    if n < 0 {
        acc.recip()
    } else {
        acc
    }
}

fn mono_mul(a: &Monomial, b: &Monomial) -> Monomial {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let k = a[i].1 + b[j].1;
                if k != 0 {
                    out.push((a[i].0.clone(), k));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn needs_normalize(m: &Monomial) -> bool {
    m.iter().any(|(a, k)| match a {
        Atom::App(ElemFn::Tanh, _) => *k >= 2,
        Atom::Group(_) => *k > 0,
        _ => false,
    })
}

/// Accumulates terms, then emits a canonical sum.
#[derive(Default)]
struct TermAcc {
    terms: BTreeMap<Monomial, Rational>,
}

impl TermAcc {
    fn push(&mut self, mono: Monomial, coeff: Rational) {
        if coeff.is_zero() {
            return;
        }
        if needs_normalize(&mono) {
            let e = normalize_monomial(mono);
            for t in e.0.iter() {
                self.push_raw(t.mono.clone(), &t.coeff * &coeff);
            }
        } else {
            self.push_raw(mono, coeff);
        }
    }

    fn push_raw(&mut self, mono: Monomial, coeff: Rational) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(mono) {
            Entry::Vacant(v) => {
                v.insert(coeff);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn finish(self) -> Expr {
        Expr(Arc::new(
            self.terms
                .into_iter()
                .map(|(mono, coeff)| Term { mono, coeff })
                .collect(),
        ))
    }
}

/// Rewrite a monomial that holds `tanh^k` (k ≥ 2) or a group with a positive
/// power into canonical form.
fn normalize_monomial(mut mono: Monomial) -> Expr {
    let pos = mono
        .iter()
        .position(|(a, k)| matches!(a, Atom::App(ElemFn::Tanh, _)) && *k >= 2 || matches!(a, Atom::Group(_)) && *k > 0)
        .expect("normalize_monomial called on a normal monomial");
    let (atom, k) = mono[pos].clone();
    match atom {
        Atom::App(ElemFn::Tanh, u) => {
            if k == 2 {
                mono.remove(pos);
            } else {
                mono[pos].1 = k - 2;
            }
            let rest = Expr::from_monomial(mono, Rational::one());
            let sech2 = Expr::apply(ElemFn::Sech, u).pow_u(2);
            rest * (Expr::one() - sech2)
        }
        Atom::Group(s) => {
            mono.remove(pos);
            let rest = Expr::from_monomial(mono, Rational::one());
            rest * s.pow_u(k as u32)
        }
        _ => unreachable!(),
    }
}

impl Expr {
    pub fn zero() -> Expr {
        Expr(Arc::new(Vec::new()))
    }

    pub fn one() -> Expr {
        Expr::constant(Rational::one())
    }

    pub fn constant(q: Rational) -> Expr {
        if q.is_zero() {
            return Expr::zero();
        }
        Expr(Arc::new(vec![Term {
            mono: Vec::new(),
            coeff: q,
        }]))
    }

    pub fn int(n: i64) -> Expr {
        Expr::constant(rat(n))
    }

    /// The rational `n/d`. Panics if `d == 0`.
    pub fn rational(n: i64, d: i64) -> Expr {
        assert!(d != 0, "zero denominator");
        Expr::constant(Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn symbol(s: Symbol) -> Expr {
        Expr::from_monomial(vec![(Atom::Sym(s), 1)], Rational::one())
    }

    pub(crate) fn from_monomial(mono: Monomial, coeff: Rational) -> Expr {
        let mut acc = TermAcc::default();
        acc.push(mono, coeff);
        acc.finish()
    }

    pub(crate) fn terms(&self) -> &[Term] {
        &self.0
    }

    /// Elementary function application with exact values at zero.
    pub fn apply(f: ElemFn, arg: Expr) -> Expr {
        if arg.is_zero() {
            return Expr::int(f.at_zero());
        }
        Expr::from_monomial(vec![(Atom::App(f, arg), 1)], Rational::one())
    }

    pub fn sin(self) -> Expr {
        Expr::apply(ElemFn::Sin, self)
    }
    pub fn cos(self) -> Expr {
        Expr::apply(ElemFn::Cos, self)
    }
    pub fn exp(self) -> Expr {
        Expr::apply(ElemFn::Exp, self)
    }
    pub fn tanh(self) -> Expr {
        Expr::apply(ElemFn::Tanh, self)
    }
    pub fn sech(self) -> Expr {
        Expr::apply(ElemFn::Sech, self)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|q| q.is_one())
    }

    /// The rational value if this expression is constant.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.0.as_slice() {
            [] => Some(Rational::zero()),
            [t] if t.mono.is_empty() => Some(t.coeff.clone()),
            _ => None,
        }
    }

    /// The symbol if this expression is exactly one bare symbol.
    pub fn as_symbol(&self) -> Option<&Symbol> {
        match self.0.as_slice() {
            [t] if t.coeff.is_one() => match t.mono.as_slice() {
                [(Atom::Sym(s), 1)] => Some(s),
                _ => None,
            },
            _ => None,
        }
    }

    /// `(k, s)` if this expression is `k * s` for a rational `k` and symbol `s`.
    pub fn as_scaled_symbol(&self) -> Option<(Rational, &Symbol)> {
        match self.0.as_slice() {
            [t] => match t.mono.as_slice() {
                [(Atom::Sym(s), 1)] => Some((t.coeff.clone(), s)),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn num_terms(&self) -> usize {
        self.0.len()
    }

    /// Split into single-term expressions, in canonical order.
    pub fn summands(&self) -> Vec<Expr> {
        self.0.iter().map(|t| Expr(Arc::new(vec![t.clone()]))).collect()
    }

    pub fn scale(&self, q: &Rational) -> Expr {
        if q.is_zero() {
            return Expr::zero();
        }
        Expr(Arc::new(
            self.0
                .iter()
                .map(|t| Term {
                    mono: t.mono.clone(),
                    coeff: &t.coeff * q,
                })
                .collect(),
        ))
    }

    pub fn scale_int(&self, k: i64) -> Expr {
        self.scale(&rat(k))
    }

    pub fn pow_u(&self, n: u32) -> Expr {
        if n == 0 {
            return Expr::one();
        }
        if let [t] = self.0.as_slice() {
            let mono: Monomial = t.mono.iter().map(|(a, k)| (a.clone(), k * n as i32)).collect();
            return Expr::from_monomial(mono, rat_pow(&t.coeff, n as i32));
        }
        let mut base = self.clone();
        let mut acc = Expr::one();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Integer power; negative exponents of zero are a division by zero.
    pub fn pow(&self, n: i32) -> Result<Expr, ExprError> {
        if n >= 0 {
            return Ok(self.pow_u(n as u32));
        }
        Ok(self.recip()?.pow_u(n.unsigned_abs()))
    }

    pub fn recip(&self) -> Result<Expr, ExprError> {
        match self.0.as_slice() {
            [] => Err(ExprError::DivisionByZero),
            [t] => {
                let mono: Monomial = t.mono.iter().map(|(a, k)| (a.clone(), -k)).collect();
                Ok(Expr::from_monomial(mono, t.coeff.recip()))
            }
            terms => {
                let lead = terms[0].coeff.clone();
                let monic = self.scale(&lead.recip());
                Ok(Expr::from_monomial(vec![(Atom::Group(monic), -1)], lead.recip()))
            }
        }
    }

    pub fn checked_div(&self, rhs: &Expr) -> Result<Expr, ExprError> {
        Ok(self * &rhs.recip()?)
    }

    /// All symbols occurring anywhere in the expression.
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        for t in self.0.iter() {
            for (a, _) in &t.mono {
                match a {
                    Atom::Sym(s) => {
                        out.insert(s.clone());
                    }
                    Atom::App(_, e) | Atom::Group(e) => e.collect_symbols(out),
                }
            }
        }
    }

    /// Coordinates, fields and jets the expression depends on, including the
    /// arguments of opaque functions.
    pub fn variables(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for s in self.symbols() {
            match &s {
                Symbol::Func(f) => {
                    for a in f.args() {
                        out.insert(a.to_symbol());
                    }
                }
                Symbol::Param(_) => {}
                _ => {
                    out.insert(s.clone());
                }
            }
        }
        out
    }

    /// Highest jet order among the symbols present.
    pub fn jet_order(&self) -> usize {
        self.symbols().iter().map(Symbol::jet_order).max().unwrap_or(0)
    }

    pub fn any_symbol(&self, pred: impl Fn(&Symbol) -> bool) -> bool {
        self.symbols().iter().any(pred)
    }

    /// The summands whose symbols satisfy `pred` somewhere.
    pub fn terms_where(&self, pred: impl Fn(&Symbol) -> bool) -> Expr {
        let mut acc = TermAcc::default();
        for t in self.0.iter() {
            let single = Expr(Arc::new(vec![t.clone()]));
            if single.symbols().iter().any(&pred) {
                acc.push_raw(t.mono.clone(), t.coeff.clone());
            }
        }
        acc.finish()
    }

    /// Solve `self = 0` for `s` when `self` is affine in `s` with an
    /// `s`-free coefficient.
    pub fn solve_linear(&self, s: &Symbol) -> Option<Expr> {
        let a = self.diff_partial(s);
        if a.is_zero() || a.symbols().contains(s) {
            return None;
        }
        let b = self - &(&a * &Expr::symbol(s.clone()));
        if b.symbols().contains(s) {
            return None;
        }
        (-b).checked_div(&a).ok()
    }

    /// Normalize so that the leading term has coefficient 1, returning the
    /// factor removed. Zero is returned unchanged with factor 1.
    pub fn monic(&self) -> (Rational, Expr) {
        match self.0.first() {
            None => (Rational::one(), self.clone()),
            Some(t) => (t.coeff.clone(), self.scale(&t.coeff.recip())),
        }
    }

    /// Rational `k` with `self == k * other`, if one exists.
    pub fn ratio_to(&self, other: &Expr) -> Option<Rational> {
        if other.is_zero() {
            return self.is_zero().then(Rational::one);
        }
        let k = match (self.0.first(), other.0.first()) {
            (Some(a), Some(b)) if a.mono == b.mono => &a.coeff / &b.coeff,
            _ => return None,
        };
        (*self == other.scale(&k)).then_some(k)
    }
}

impl From<Symbol> for Expr {
    fn from(s: Symbol) -> Expr {
        Expr::symbol(s)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

fn add_exprs(a: &Expr, b: &Expr) -> Expr {
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    let (x, y) = (a.terms(), b.terms());
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() && j < y.len() {
        match x[i].mono.cmp(&y[j].mono) {
            std::cmp::Ordering::Less => {
                out.push(x[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(y[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let c = &x[i].coeff + &y[j].coeff;
                if !c.is_zero() {
                    out.push(Term {
                        mono: x[i].mono.clone(),
                        coeff: c,
                    });
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&x[i..]);
    out.extend_from_slice(&y[j..]);
    Expr(Arc::new(out))
}

fn mul_exprs(a: &Expr, b: &Expr) -> Expr {
    if a.is_zero() || b.is_zero() {
        return Expr::zero();
    }
    if let Some(q) = a.as_constant() {
        return b.scale(&q);
    }
    if let Some(q) = b.as_constant() {
        return a.scale(&q);
    }
    let mut acc = TermAcc::default();
    for ta in a.terms() {
        for tb in b.terms() {
            acc.push(mono_mul(&ta.mono, &tb.mono), &ta.coeff * &tb.coeff);
        }
    }
    acc.finish()
}

macro_rules! binop {
    ($tr:ident, $m:ident, $f:expr) => {
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                $f(self, rhs)
            }
        }
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                $f(&self, &rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                $f(&self, rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                $f(self, &rhs)
            }
        }
    };
}

binop!(Add, add, add_exprs);
binop!(Mul, mul, mul_exprs);
binop!(Sub, sub, |a: &Expr, b: &Expr| add_exprs(a, &-b));

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.scale(&-Rational::one())
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        iter.fold(Expr::zero(), |a, b| a + b)
    }
}

/// `true` when the rational is negative; used by printers.
pub(crate) fn is_negative(q: &Rational) -> bool {
    q.is_negative()
}
