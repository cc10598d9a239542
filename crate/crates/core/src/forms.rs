//! Exterior algebra over a chart with coefficients in [`Expr`].
//!
//! Generators are `dx^i`, `du^a` and `du^a_J`; a form is a finite map from
//! strictly sorted generator lists to nonzero coefficients.

use std::collections::BTreeMap;
use std::fmt;

use crate::expr::{Coord, Expr, Name, Symbol};

/// A 1-form generator `ds` for a coordinate, field or jet symbol.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Generator {
    Base(Coord),
    Field(Name),
    Jet(Name, Vec<Coord>),
}

impl Generator {
    /// The generator `ds`, if `s` carries one.
    pub fn of(s: &Symbol) -> Option<Generator> {
        match s {
            Symbol::Coord(c) => Some(Generator::Base(c.clone())),
            Symbol::Field(f) => Some(Generator::Field(f.clone())),
            Symbol::Jet { field, index } => Some(Generator::Jet(field.clone(), index.clone())),
            Symbol::Param(_) | Symbol::Func(_) => None,
        }
    }

    pub fn symbol(&self) -> Symbol {
        match self {
            Generator::Base(c) => Symbol::Coord(c.clone()),
            Generator::Field(f) => Symbol::Field(f.clone()),
            Generator::Jet(f, idx) => Symbol::Jet {
                field: f.clone(),
                index: idx.clone(),
            },
        }
    }

    pub fn field_name(&self) -> Option<&str> {
        match self {
            Generator::Base(_) => None,
            Generator::Field(f) | Generator::Jet(f, _) => Some(f),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{}", self.symbol())
    }
}

/// Sort `gens` in place, returning the permutation sign, or `None` if a
/// generator repeats.
fn sort_with_sign(gens: &mut [Generator]) -> Option<i64> {
    let mut sign = 1;
    for i in 1..gens.len() {
        let mut j = i;
        while j > 0 && gens[j - 1] > gens[j] {
            gens.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
        if j > 0 && gens[j - 1] == gens[j] {
            return None;
        }
    }
    Some(sign)
}

/// A homogeneous differential form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DifferentialForm {
    degree: usize,
    terms: BTreeMap<Vec<Generator>, Expr>,
}

impl DifferentialForm {
    pub fn zero(degree: usize) -> Self {
        DifferentialForm {
            degree,
            terms: BTreeMap::new(),
        }
    }

    /// A 0-form.
    pub fn scalar(f: Expr) -> Self {
        DifferentialForm::term(Vec::new(), f)
    }

    /// `coeff * g_1 ∧ … ∧ g_k` for generators in any order.
    pub fn term(mut gens: Vec<Generator>, coeff: Expr) -> Self {
        let degree = gens.len();
        let mut out = DifferentialForm::zero(degree);
        if let Some(sign) = sort_with_sign(&mut gens) {
            out.add_term(gens, coeff.scale_int(sign));
        }
        out
    }

    /// The exact 1-form `ds`, or zero for symbols without a generator.
    pub fn differential(s: &Symbol) -> Self {
        match Generator::of(s) {
            Some(g) => DifferentialForm::term(vec![g], Expr::one()),
            None => DifferentialForm::zero(1),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[Generator], &Expr)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), v))
    }

    /// Coefficient of the sorted generator list `gens` (zero if absent).
    pub fn coefficient(&self, gens: &[Generator]) -> Expr {
        self.terms.get(gens).cloned().unwrap_or_else(Expr::zero)
    }

    /// Coefficient of a 0-form.
    pub fn as_scalar(&self) -> Expr {
        self.coefficient(&[])
    }

    fn add_term(&mut self, gens: Vec<Generator>, coeff: Expr) {
        debug_assert_eq!(gens.len(), self.degree);
        if coeff.is_zero() {
            return;
        }
        let sum = match self.terms.remove(&gens) {
            Some(c) => c + coeff,
            None => coeff,
        };
        if !sum.is_zero() {
            self.terms.insert(gens, sum);
        }
    }

    pub fn add(&self, other: &DifferentialForm) -> DifferentialForm {
        if self.is_zero() && self.degree != other.degree {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        assert_eq!(self.degree, other.degree, "adding forms of different degree");
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.add_term(k.clone(), v.clone());
        }
        out
    }

    pub fn neg(&self) -> DifferentialForm {
        self.scale(&-Expr::one())
    }

    pub fn sub(&self, other: &DifferentialForm) -> DifferentialForm {
        self.add(&other.neg())
    }

    /// Multiply every coefficient by a function.
    pub fn scale(&self, f: &Expr) -> DifferentialForm {
        let mut out = DifferentialForm::zero(self.degree);
        for (k, v) in &self.terms {
            out.add_term(k.clone(), v * f);
        }
        out
    }

    /// Map every coefficient, keeping generators.
    pub fn map_coefficients<E>(&self, mut f: impl FnMut(&Expr) -> Result<Expr, E>) -> Result<DifferentialForm, E> {
        let mut out = DifferentialForm::zero(self.degree);
        for (k, v) in &self.terms {
            out.add_term(k.clone(), f(v)?);
        }
        Ok(out)
    }

    /// Graded-antisymmetric product.
    pub fn wedge(&self, other: &DifferentialForm) -> DifferentialForm {
        let mut out = DifferentialForm::zero(self.degree + other.degree);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let mut gens: Vec<Generator> = ka.iter().chain(kb.iter()).cloned().collect();
                if let Some(sign) = sort_with_sign(&mut gens) {
                    out.add_term(gens, (ca * cb).scale_int(sign));
                }
            }
        }
        out
    }

    /// Exterior derivative `d(f·g) = Σ_s ∂f/∂s ds ∧ g` over every coordinate,
    /// field and jet the coefficient depends on.
    pub fn exterior_derivative(&self) -> DifferentialForm {
        let mut out = DifferentialForm::zero(self.degree + 1);
        for (k, c) in &self.terms {
            for v in c.variables() {
                let Some(g) = Generator::of(&v) else { continue };
                let partial = c.diff_partial(&v);
                if partial.is_zero() {
                    continue;
                }
                let mut gens = Vec::with_capacity(k.len() + 1);
                gens.push(g);
                gens.extend(k.iter().cloned());
                if let Some(sign) = sort_with_sign(&mut gens) {
                    out.add_term(gens, partial.scale_int(sign));
                }
            }
        }
        out
    }

    /// Interior product with the coordinate vector field dual to `v`.
    pub fn contract(&self, v: &Generator) -> DifferentialForm {
        let mut out = DifferentialForm::zero(self.degree.saturating_sub(1));
        for (k, c) in &self.terms {
            if let Some(pos) = k.iter().position(|g| g == v) {
                let mut gens = k.clone();
                gens.remove(pos);
                let c = if pos % 2 == 1 { -c } else { c.clone() };
                out.add_term(gens, c);
            }
        }
        out
    }

    /// Whether some term contains a generator matching `pred`.
    pub fn has_generator(&self, pred: impl Fn(&Generator) -> bool) -> bool {
        self.terms.keys().any(|k| k.iter().any(&pred))
    }
}

impl fmt::Display for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (k, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({c})")?;
            if !k.is_empty() {
                f.write_str(" ")?;
                for (j, g) in k.iter().enumerate() {
                    if j > 0 {
                        f.write_str("∧")?;
                    }
                    write!(f, "{g}")?;
                }
            }
        }
        Ok(())
    }
}

/// The base volume form `η = dx^1 ∧ … ∧ dx^m` with the horizontal
/// (m−1)-forms `η_i = ∂_{x^i} ⌟ η`.
#[derive(Clone, Debug)]
pub struct HorizontalBasis {
    coords: Vec<Coord>,
    eta: DifferentialForm,
    eta_i: Vec<DifferentialForm>,
}

impl HorizontalBasis {
    pub fn new(coords: &[Coord]) -> Self {
        let gens: Vec<Generator> = coords.iter().cloned().map(Generator::Base).collect();
        let eta = DifferentialForm::term(gens.clone(), Expr::one());
        let eta_i = gens.iter().map(|g| eta.contract(g)).collect();
        HorizontalBasis {
            coords: coords.to_vec(),
            eta,
            eta_i,
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Coord] {
        &self.coords
    }

    pub fn eta(&self) -> &DifferentialForm {
        &self.eta
    }

    pub fn eta_i(&self, i: usize) -> &DifferentialForm {
        &self.eta_i[i]
    }

    /// `ε = (−1)^{m−1}`.
    pub fn epsilon(&self) -> i64 {
        if self.dim() % 2 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn dx(&self, i: usize) -> DifferentialForm {
        DifferentialForm::term(vec![Generator::Base(self.coords[i].clone())], Expr::one())
    }

    /// `Σ_i c_i η_i`.
    pub fn horizontal(&self, components: &[Expr]) -> DifferentialForm {
        components
            .iter()
            .zip(&self.eta_i)
            .fold(DifferentialForm::zero(self.dim().saturating_sub(1)), |acc, (c, e)| {
                acc.add(&e.scale(c))
            })
    }

    /// Coefficient of `η` in an m-form that is a multiple of `η`.
    pub fn eta_coefficient(&self, form: &DifferentialForm) -> Expr {
        self.eta
            .terms()
            .next()
            .map_or_else(Expr::zero, |(k, _)| form.coefficient(k))
    }

    /// Components in the `η_i` basis of a horizontal (m−1)-form.
    pub fn components(&self, form: &DifferentialForm) -> Vec<Expr> {
        self.eta_i
            .iter()
            .map(|e| {
                let (k, sign) = e.terms().next().expect("η_i is a single term");
                form.coefficient(k) * sign
            })
            .collect()
    }
}
