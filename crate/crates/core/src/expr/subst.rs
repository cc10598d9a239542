//! Substitution of symbols and of opaque functions together with all of
//! their derivatives.

use super::{Atom, Coord, Expr, ExprError, FuncSym, Name, Symbol, Var};

impl Expr {
    /// Replace symbols for which `f` returns a value; everything else is kept.
    pub fn substitute(&self, f: &dyn Fn(&Symbol) -> Option<Expr>) -> Result<Expr, ExprError> {
        self.try_substitute(&|s| Ok(f(s)))
    }

    /// [`Expr::substitute`] with a fallible replacement function.
    pub fn try_substitute(&self, f: &dyn Fn(&Symbol) -> Result<Option<Expr>, ExprError>) -> Result<Expr, ExprError> {
        let mut acc = Expr::zero();
        for t in self.terms() {
            let mut prod = Expr::constant(t.coeff.clone());
            for (a, k) in &t.mono {
                let base = match a {
                    Atom::Sym(s) => f(s)?.unwrap_or_else(|| Expr::symbol(s.clone())),
                    Atom::App(func, u) => Expr::apply(*func, u.try_substitute(f)?),
                    Atom::Group(g) => g.try_substitute(f)?,
                };
                prod = prod * base.pow(*k)?;
            }
            acc = acc + prod;
        }
        Ok(acc)
    }

    /// Replace one symbol by an expression.
    pub fn substitute_symbol(&self, s: &Symbol, by: &Expr) -> Result<Expr, ExprError> {
        self.substitute(&|t| (t == s).then(|| by.clone()))
    }

    /// Apply `rules` repeatedly until nothing changes (at most `16` passes).
    pub fn apply_rules(&self, rules: &[FuncRule]) -> Result<Expr, ExprError> {
        let mut cur = self.clone();
        for _ in 0..16 {
            let next = cur.try_substitute(&|s| {
                for r in rules {
                    if let Some(e) = r.rewrite(s)? {
                        return Ok(Some(e));
                    }
                }
                Ok(None)
            })?;
            if next == cur {
                return Ok(cur);
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Replace fields and their jets by opaque functions of the base
    /// coordinates, i.e. evaluate along an unspecified section.
    pub fn jets_to_sections(&self, fields: &[Name], coords: &[Coord]) -> Expr {
        let args: Vec<Var> = coords.iter().cloned().map(Var::Coord).collect();
        let section = |name: &Name, idx: &[Coord]| {
            let mut f = FuncSym::new(name.clone(), args.clone());
            for c in idx {
                f = f.differentiated(c.index());
            }
            Expr::symbol(Symbol::Func(f))
        };
        self.substitute(&|s| match s {
            Symbol::Field(n) if fields.contains(n) => Some(section(n, &[])),
            Symbol::Jet { field, index } if fields.contains(field) => Some(section(field, index)),
            _ => None,
        })
        .expect("section substitution introduces no division")
    }
}

/// Rewrite rule for an opaque function: `name` differentiated at least along
/// `derivs` is replaced by the corresponding derivative of `replacement`.
/// Remaining coordinate derivatives are taken as total derivatives, field
/// derivatives as partial ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuncRule {
    pub name: Name,
    pub derivs: Vec<Var>,
    pub replacement: Expr,
}

impl FuncRule {
    pub fn new(target: &FuncSym, replacement: Expr) -> FuncRule {
        FuncRule {
            name: target.name_arc().clone(),
            derivs: target.deriv_vars().cloned().collect(),
            replacement,
        }
    }

    /// `Ok(None)` when the rule does not match `s`.
    fn rewrite(&self, s: &Symbol) -> Result<Option<Expr>, ExprError> {
        let Symbol::Func(f) = s else {
            return Ok(None);
        };
        if f.name_arc() != &self.name {
            return Ok(None);
        }
        let mut remaining: Vec<Var> = f.deriv_vars().cloned().collect();
        for d in &self.derivs {
            match remaining.iter().position(|v| v == d) {
                Some(p) => {
                    remaining.remove(p);
                }
                None => return Ok(None),
            }
        }
        let mut out = self.replacement.clone();
        for v in remaining {
            out = match v {
                Var::Coord(c) => out.total_derivative(&c)?,
                Var::Field(_) => out.diff_partial(&v.to_symbol()),
            };
        }
        Ok(Some(out))
    }
}
