use std::collections::{BTreeMap, HashMap};

use num_traits::ToPrimitive;

use super::{Atom, ElemFn, Expr, ExprError, Symbol};

/// Source of numeric values for symbols.
pub trait Assignment {
    fn value(&self, s: &Symbol) -> Option<f64>;
}

impl Assignment for HashMap<Symbol, f64> {
    fn value(&self, s: &Symbol) -> Option<f64> {
        self.get(s).copied()
    }
}

impl Assignment for BTreeMap<Symbol, f64> {
    fn value(&self, s: &Symbol) -> Option<f64> {
        self.get(s).copied()
    }
}

/// Lookup by printed symbol name, e.g. `[("phi_x", 2.0)]`.
impl Assignment for [(&str, f64)] {
    fn value(&self, s: &Symbol) -> Option<f64> {
        let name = s.to_string();
        self.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

impl<F: Fn(&Symbol) -> Option<f64>> Assignment for F {
    fn value(&self, s: &Symbol) -> Option<f64> {
        self(s)
    }
}

impl Expr {
    /// Numeric value in IEEE double precision. A canonical zero evaluates to
    /// exactly `0.0`.
    pub fn evaluate<A: Assignment + ?Sized>(&self, assignment: &A) -> Result<f64, ExprError> {
        let mut sum = 0.0;
        for t in self.terms() {
            let mut prod = t.coeff.to_f64().unwrap_or(f64::NAN);
            for (a, k) in &t.mono {
                let v = match a {
                    Atom::Sym(s) => assignment
                        .value(s)
                        .ok_or_else(|| ExprError::MissingAssignment(s.to_string()))?,
                    Atom::App(f, u) => f.eval(u.evaluate(assignment)?),
                    Atom::Group(g) => g.evaluate(assignment)?,
                };
                if *k < 0 && v == 0.0 {
                    return Err(ExprError::Domain(format!("division by zero in `{}`", self)));
                }
                prod *= v.powi(*k);
            }
            sum += prod;
        }
        Ok(sum)
    }
}

/// An expression lowered to floating-point coefficients and numbered
/// symbol slots, for repeated evaluation (e.g. at every grid point).
#[derive(Clone, Debug)]
pub struct CompiledExpr {
    terms: Vec<(f64, Vec<(Factor, i32)>)>,
}

#[derive(Clone, Debug)]
enum Factor {
    Slot(usize),
    App(ElemFn, CompiledExpr),
    Group(CompiledExpr),
}

impl Expr {
    /// Lower the expression; `slot` numbers each symbol or rejects it.
    pub fn compile(&self, slot: &dyn Fn(&Symbol) -> Option<usize>) -> Result<CompiledExpr, ExprError> {
        let mut terms = Vec::with_capacity(self.num_terms());
        for t in self.terms() {
            let mut factors = Vec::with_capacity(t.mono.len());
            for (a, k) in &t.mono {
                let f = match a {
                    Atom::Sym(s) => Factor::Slot(slot(s).ok_or_else(|| ExprError::MissingAssignment(s.to_string()))?),
                    Atom::App(func, u) => Factor::App(*func, u.compile(slot)?),
                    Atom::Group(g) => Factor::Group(g.compile(slot)?),
                };
                factors.push((f, *k));
            }
            terms.push((t.coeff.to_f64().unwrap_or(f64::NAN), factors));
        }
        Ok(CompiledExpr { terms })
    }
}

impl CompiledExpr {
    /// Value with symbol slot `i` bound to `values[i]`. Division by zero
    /// yields a non-finite result rather than an error.
    pub fn eval(&self, values: &[f64]) -> f64 {
        let mut sum = 0.0;
        for (c, factors) in &self.terms {
            let mut prod = *c;
            for (f, k) in factors {
                let v = match f {
                    Factor::Slot(i) => values[*i],
                    Factor::App(func, u) => func.eval(u.eval(values)),
                    Factor::Group(g) => g.eval(values),
                };
                prod *= v.powi(*k);
            }
            sum += prod;
        }
        sum
    }
}
