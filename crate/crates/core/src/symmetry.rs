//! Translation symmetries of cyclic fields, the momentum map, conserved
//! momentum values and the momentum level set.

use std::fmt;

use thiserror::Error;

use crate::expr::{Coord, Expr, ExprError, FuncRule, Name, Symbol, Var};
use crate::forms::{DifferentialForm, Generator, HorizontalBasis};
use crate::model::{legendre_multipliers, FieldModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymmetryError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("`{0}` is not a field of the model")]
    UnknownField(String),
    #[error("`{0}` is not a cyclic field of the action")]
    NotCyclic(String),
    #[error("{location} is not invariant under translation of `{field}`: offending term {term}")]
    NotInvariant {
        field: String,
        location: String,
        term: String,
    },
    #[error("momentum component for `{field}` depends on `{symbol}`; momentum values must be basic")]
    MomentumNotBasic { field: String, symbol: String },
    #[error("momentum for `{field}` is not closed: divergence {divergence}")]
    NotClosed { field: String, divergence: String },
    #[error("momentum entry `{0}` does not name m-1 distinct base coordinates")]
    BadMomentumKey(String),
}

/// The abelian group `ℝ^|S|` translating the cyclic fields `S`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicAction {
    cyclic: Vec<Name>,
}

impl CyclicAction {
    /// Cyclic fields are kept in chart order.
    pub fn new(model: &FieldModel, cyclic: &[&str]) -> Result<Self, SymmetryError> {
        for c in cyclic {
            if !model.chart().has_field(c) {
                return Err(SymmetryError::UnknownField(c.to_string()));
            }
        }
        let cyclic = model
            .fields()
            .iter()
            .filter(|f| cyclic.contains(&&***f))
            .cloned()
            .collect();
        Ok(CyclicAction { cyclic })
    }

    pub fn cyclic_fields(&self) -> &[Name] {
        &self.cyclic
    }

    pub fn is_cyclic(&self, field: &str) -> bool {
        self.cyclic.iter().any(|c| &**c == field)
    }

    /// Fields of the model not acted on.
    pub fn shape_fields(&self, model: &FieldModel) -> Vec<Name> {
        model.fields().iter().filter(|f| !self.is_cyclic(f)).cloned().collect()
    }
}

/// Whether `s` depends on the undifferentiated field `a` (jets excluded).
pub(crate) fn depends_on_value(s: &Symbol, a: &str) -> bool {
    match s {
        Symbol::Field(f) => &**f == a,
        Symbol::Func(f) => f.args().iter().any(|v| matches!(v, Var::Field(x) if &**x == a)),
        _ => false,
    }
}

/// Passes iff neither `L` nor the force depend on the cyclic fields.
pub fn check_invariance(model: &FieldModel, action: &CyclicAction) -> Result<(), SymmetryError> {
    for a in action.cyclic_fields() {
        let offending = model.lagrangian().terms_where(|s| depends_on_value(s, a));
        if !offending.is_zero() {
            return Err(SymmetryError::NotInvariant {
                field: a.to_string(),
                location: "lagrangian".into(),
                term: offending.to_string(),
            });
        }
        for (label, e) in model.force().entries() {
            let offending = e.terms_where(|s| depends_on_value(s, a));
            if !offending.is_zero() {
                return Err(SymmetryError::NotInvariant {
                    field: a.to_string(),
                    location: format!("force {label}"),
                    term: offending.to_string(),
                });
            }
        }
    }
    Ok(())
}

/// `J_a = Σ_i p^i_a η_i` for every cyclic field, in action order.
pub fn momentum_map(model: &FieldModel, action: &CyclicAction) -> Vec<(Name, DifferentialForm)> {
    let basis = model.basis();
    let p = legendre_multipliers(model);
    action
        .cyclic_fields()
        .iter()
        .map(|a| (a.clone(), basis.horizontal(p.for_field(a))))
        .collect()
}

/// A momentum value `μ_a = Σ_i μ̂^i_a η_i` for each cyclic field, with
/// components depending on the base only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentumValue {
    coords: Vec<Coord>,
    components: Vec<(Name, Vec<Expr>)>,
    assume_closed: bool,
}

fn check_basic(field: &str, e: &Expr) -> Result<(), SymmetryError> {
    let bad = e.symbols().into_iter().find(|s| match s {
        Symbol::Coord(_) | Symbol::Param(_) => false,
        Symbol::Func(f) => f.depends_on_fields(),
        _ => true,
    });
    match bad {
        Some(s) => Err(SymmetryError::MomentumNotBasic {
            field: field.to_string(),
            symbol: s.to_string(),
        }),
        None => Ok(()),
    }
}

impl MomentumValue {
    /// Zero momentum for every cyclic field.
    pub fn zero(coords: &[Coord], action: &CyclicAction) -> Self {
        MomentumValue {
            coords: coords.to_vec(),
            components: action
                .cyclic_fields()
                .iter()
                .map(|a| (a.clone(), vec![Expr::zero(); coords.len()]))
                .collect(),
            assume_closed: false,
        }
    }

    /// Set the η-components `μ̂^i_a` of one cyclic field.
    pub fn set_eta(&mut self, field: &str, components: Vec<Expr>) -> Result<(), SymmetryError> {
        assert_eq!(components.len(), self.coords.len(), "one component per base coordinate");
        for e in &components {
            check_basic(field, e)?;
        }
        let slot = self
            .components
            .iter_mut()
            .find(|(a, _)| &**a == field)
            .ok_or_else(|| SymmetryError::NotCyclic(field.to_string()))?;
        slot.1 = components;
        Ok(())
    }

    /// Set `μ_a` from its coefficients in the covector basis: each entry
    /// names `m − 1` base coordinates (sorted or not) and the coefficient of
    /// their wedge product, e.g. `(["t"], μ_1)` for `μ_1 dt` when `m = 2`.
    pub fn set_covector(&mut self, field: &str, entries: &[(Vec<Coord>, Expr)]) -> Result<(), SymmetryError> {
        let m = self.coords.len();
        let mut form = DifferentialForm::zero(m.saturating_sub(1));
        for (key, value) in entries {
            let label = || SymmetryError::BadMomentumKey(key.iter().map(Coord::name).collect::<Vec<_>>().join(","));
            let mut idx: Vec<usize> = key.iter().map(Coord::index).collect();
            idx.sort_unstable();
            idx.dedup();
            if idx.len() != key.len() || key.len() + 1 != m {
                return Err(label());
            }
            let gens = key.iter().cloned().map(Generator::Base).collect();
            form = form.add(&DifferentialForm::term(gens, value.clone()));
        }
        self.set_form(field, &form)
    }

    /// Set `μ_a` from a horizontal `(m − 1)`-form.
    pub fn set_form(&mut self, field: &str, form: &DifferentialForm) -> Result<(), SymmetryError> {
        let basis = HorizontalBasis::new(&self.coords);
        let comps = basis.components(form);
        self.set_eta(field, comps)
    }

    /// Declare the abstract components closed; see [`check_momentum_closed`].
    pub fn assume_closed(mut self, yes: bool) -> Self {
        self.assume_closed = yes;
        self
    }

    pub fn assumes_closed(&self) -> bool {
        self.assume_closed
    }

    pub fn coords(&self) -> &[Coord] {
        &self.coords
    }

    pub fn eta(&self, field: &str) -> &[Expr] {
        self.components
            .iter()
            .find(|(a, _)| &**a == field)
            .map(|(_, c)| c.as_slice())
            .unwrap_or_else(|| panic!("`{field}` is not cyclic"))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Expr])> {
        self.components.iter().map(|(a, c)| (&**a, c.as_slice()))
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|(_, c)| c.iter().all(Expr::is_zero))
    }

    /// `μ_a` as a horizontal `(m − 1)`-form.
    pub fn form(&self, field: &str) -> DifferentialForm {
        HorizontalBasis::new(&self.coords).horizontal(self.eta(field))
    }

    /// `Σ_i ∂μ̂^i_a/∂x^i`.
    pub fn divergence(&self, field: &str) -> Result<Expr, ExprError> {
        Expr::total_divergence(self.eta(field), &self.coords)
    }
}

impl fmt::Display for MomentumValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (a, comps) in &self.components {
            write!(f, "mu[{a}] = {}", HorizontalBasis::new(&self.coords).horizontal(comps))?;
            write!(f, "   (eta components:")?;
            for (c, e) in self.coords.iter().zip(comps) {
                write!(f, " {}: {e};", c.name())?;
            }
            writeln!(f, ")")?;
        }
        Ok(())
    }
}

/// How closedness of a momentum value was established.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Closedness {
    /// Every divergence is identically zero.
    Identically,
    /// The divergences vanish once these rewrite rules, solved from the
    /// declared closedness of abstract components, are applied.
    ByAssumption(Vec<FuncRule>),
}

impl Closedness {
    pub fn rules(&self) -> &[FuncRule] {
        match self {
            Closedness::Identically => &[],
            Closedness::ByAssumption(r) => r,
        }
    }
}

impl fmt::Display for Closedness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Closedness::Identically => write!(f, "closed (identically)"),
            Closedness::ByAssumption(rules) => {
                write!(f, "closed (by assumption:")?;
                for r in rules {
                    let d: Vec<&str> = r.derivs.iter().map(Var::name).collect();
                    write!(f, " {}_{} = {};", r.name, d.join(""), r.replacement)?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Checks `Σ_i ∂μ̂^i_a/∂x^i = 0` for every cyclic field. For declared-closed
/// abstract components, the vanishing divergence is solved for one
/// derivative of an opaque function, giving a rewrite rule.
pub fn check_momentum_closed(mu: &MomentumValue) -> Result<Closedness, SymmetryError> {
    let mut rules = Vec::new();
    for (a, _) in mu.iter() {
        let div = mu.divergence(a)?.apply_rules(&rules)?;
        if div.is_zero() {
            continue;
        }
        let fail = || SymmetryError::NotClosed {
            field: a.to_string(),
            divergence: div.to_string(),
        };
        if !mu.assume_closed {
            return Err(fail());
        }
        let rule = div
            .symbols()
            .into_iter()
            .filter_map(|s| {
                let f = s.as_func()?;
                if f.derivs().is_empty() {
                    return None;
                }
                let sol = div.solve_linear(&s)?;
                let rule = FuncRule::new(f, sol);
                // the rule must not feed back into itself
                let back = rule.replacement.apply_rules(std::slice::from_ref(&rule)).ok()?;
                (back == rule.replacement).then_some(rule)
            })
            .next()
            .ok_or_else(fail)?;
        rules.push(rule);
    }
    Ok(if rules.is_empty() {
        Closedness::Identically
    } else {
        Closedness::ByAssumption(rules)
    })
}

/// One level-set equation `∂L/∂u^a_i − μ̂^i_a = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub field: Name,
    pub index: usize,
    pub equation: Expr,
}

pub fn momentum_constraint(model: &FieldModel, action: &CyclicAction, mu: &MomentumValue) -> Vec<Constraint> {
    let p = legendre_multipliers(model);
    let mut out = Vec::new();
    for a in action.cyclic_fields() {
        for (i, (pi, m)) in p.for_field(a).iter().zip(mu.eta(a)).enumerate() {
            out.push(Constraint {
                field: a.clone(),
                index: i,
                equation: pi - m,
            });
        }
    }
    out
}
