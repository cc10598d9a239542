//! Partial and total derivatives.

use num_bigint::BigInt;

use super::{Atom, Coord, ElemFn, Expr, ExprError, Rational, Symbol, Var};

/// Derivative of a bare symbol `t` with respect to `s`.
fn symbol_partial(t: &Symbol, s: &Symbol) -> Expr {
    if t == s {
        return Expr::one();
    }
    if let (Symbol::Func(f), Some(v)) = (t, Var::of_symbol(s)) {
        if let Some(pos) = f.position_of(&v) {
            return Expr::symbol(Symbol::Func(f.differentiated(pos)));
        }
    }
    Expr::zero()
}

fn atom_partial(a: &Atom, s: &Symbol) -> Expr {
    match a {
        Atom::Sym(t) => symbol_partial(t, s),
        Atom::App(f, u) => {
            let du = u.diff_partial(s);
            if du.is_zero() {
                return Expr::zero();
            }
            let outer = match f {
                ElemFn::Sin => u.clone().cos(),
                ElemFn::Cos => -u.clone().sin(),
                ElemFn::Exp => u.clone().exp(),
                ElemFn::Tanh => u.clone().sech().pow_u(2),
                ElemFn::Sech => -(u.clone().sech() * u.clone().tanh()),
            };
            outer * du
        }
        Atom::Group(g) => g.diff_partial(s),
    }
}

impl Expr {
    /// Partial derivative treating every other chart symbol as independent.
    /// Opaque functions are differentiated in the matching argument slot.
    pub fn diff_partial(&self, s: &Symbol) -> Expr {
        let mut acc = Expr::zero();
        for t in self.terms() {
            for (i, (a, k)) in t.mono.iter().enumerate() {
                let da = atom_partial(a, s);
                if da.is_zero() {
                    continue;
                }
                let mut mono = t.mono.clone();
                if *k == 1 {
                    mono.remove(i);
                } else {
                    mono[i].1 = k - 1;
                }
                let coeff = &t.coeff * Rational::from_integer(BigInt::from(*k));
                acc = acc + Expr::from_monomial(mono, coeff) * da;
            }
        }
        acc
    }

    /// Total derivative `D_i` along prolonged sections:
    /// `D_i e = ∂e/∂x^i + Σ u^a_i ∂e/∂u^a + Σ u^a_{ij} ∂e/∂u^a_j`.
    pub fn total_derivative(&self, coord: &Coord) -> Result<Expr, ExprError> {
        let mut acc = Expr::zero();
        for v in self.variables() {
            let lift = match &v {
                Symbol::Coord(c) if c == coord => Expr::one(),
                Symbol::Coord(_) => continue,
                Symbol::Field(f) => Expr::symbol(Symbol::jet(f.clone(), std::slice::from_ref(coord))?),
                Symbol::Jet { field, index } => {
                    let partial = self.diff_partial(&v);
                    if partial.is_zero() {
                        continue;
                    }
                    let mut idx = index.clone();
                    idx.push(coord.clone());
                    acc = acc + partial * Expr::symbol(Symbol::jet(field.clone(), &idx)?);
                    continue;
                }
                Symbol::Param(_) | Symbol::Func(_) => continue,
            };
            acc = acc + self.diff_partial(&v) * lift;
        }
        Ok(acc)
    }

    /// Divergence-style sum `Σ_i D_i(components[i])`.
    pub fn total_divergence(components: &[Expr], coords: &[Coord]) -> Result<Expr, ExprError> {
        let mut acc = Expr::zero();
        for (e, c) in components.iter().zip(coords) {
            acc = acc + e.total_derivative(c)?;
        }
        Ok(acc)
    }
}
