use std::fmt;

use num_traits::{One, Signed};

use super::{is_negative, Atom, Expr, Rational, Term};

fn write_rational(f: &mut fmt::Formatter<'_>, q: &Rational) -> fmt::Result {
    if q.denom().is_one() {
        write!(f, "{}", q.numer())
    } else {
        write!(f, "{}/{}", q.numer(), q.denom())
    }
}

fn write_atom(f: &mut fmt::Formatter<'_>, atom: &Atom, k: i32) -> fmt::Result {
    match atom {
        Atom::Sym(s) => write!(f, "{s}")?,
        Atom::App(func, arg) => write!(f, "{}({arg})", func.name())?,
        Atom::Group(e) => write!(f, "({e})")?,
    }
    if k != 1 {
        write!(f, "^{k}")?;
    }
    Ok(())
}

fn write_term(f: &mut fmt::Formatter<'_>, t: &Term, first: bool) -> fmt::Result {
    let neg = is_negative(&t.coeff);
    match (first, neg) {
        (true, true) => f.write_str("-")?,
        (false, true) => f.write_str(" - ")?,
        (false, false) => f.write_str(" + ")?,
        (true, false) => {}
    }
    let abs = t.coeff.abs();
    if t.mono.is_empty() {
        return write_rational(f, &abs);
    }
    if !abs.is_one() {
        write_rational(f, &abs)?;
        f.write_str("*")?;
    }
    for (i, (a, k)) in t.mono.iter().enumerate() {
        if i > 0 {
            f.write_str("*")?;
        }
        write_atom(f, a, *k)?;
    }
    Ok(())
}

/// Canonical print form; re-parsing it yields the same expression.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, t) in self.terms().iter().enumerate() {
            write_term(f, t, i == 0)?;
        }
        Ok(())
    }
}
