//! First-order field theories with force and their unreduced variational
//! derivations: Euler–Lagrange residuals, Legendre multipliers and the
//! Cartan form.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::{Chart, Coord, Expr, ExprError, Name, Symbol};
use crate::forms::{DifferentialForm, Generator, HorizontalBasis};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("lagrangian contains second-order jet `{0}`")]
    SecondJetInLagrangian(String),
    #[error("force coefficient {entry} depends on jet `{symbol}`; forces must be basic")]
    ForceNotBasic { entry: String, symbol: String },
    #[error("force entry F^{coord}_{{{a}{b}}} is not antisymmetric")]
    ForceNotAntisymmetric { coord: String, a: String, b: String },
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("unknown base coordinate `{0}`")]
    UnknownCoord(String),
    #[error("form term {0} is not of the shape F^j_ab du^a∧du^b∧η_j + F_a du^a∧η")]
    NotAForce(String),
}

/// Force coefficients `F^j_{ab}` (antisymmetric in `a, b`) and `F_a`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Force {
    single: BTreeMap<Name, Expr>,
    pair: BTreeMap<(usize, Name, Name), Expr>,
}

fn check_basic(entry: &str, e: &Expr) -> Result<(), ModelError> {
    if let Some(s) = e.symbols().into_iter().find(|s| s.jet_order() > 0) {
        return Err(ModelError::ForceNotBasic {
            entry: entry.to_string(),
            symbol: s.to_string(),
        });
    }
    Ok(())
}

impl Force {
    pub fn new() -> Self {
        Force::default()
    }

    pub fn is_zero(&self) -> bool {
        self.single.is_empty() && self.pair.is_empty()
    }

    /// Add `F_a`.
    pub fn add_single(&mut self, a: &str, value: Expr) -> Result<(), ModelError> {
        check_basic(&format!("F_{a}"), &value)?;
        let entry = self.single.entry(a.into()).or_insert_with(Expr::zero);
        *entry = &*entry + &value;
        if entry.is_zero() {
            self.single.remove(a);
        }
        Ok(())
    }

    /// Declare `F^j_{ab}`; the `F^j_{ba}` entry is implied. Declaring both is
    /// allowed only when they are negatives of each other.
    pub fn set_pair(&mut self, j: &Coord, a: &str, b: &str, value: Expr) -> Result<(), ModelError> {
        check_basic(&format!("F^{}_{a}{b}", j.name()), &value)?;
        let anti = || ModelError::ForceNotAntisymmetric {
            coord: j.name().to_string(),
            a: a.to_string(),
            b: b.to_string(),
        };
        if a == b {
            return if value.is_zero() { Ok(()) } else { Err(anti()) };
        }
        let key = (j.index(), Name::from(a), Name::from(b));
        let rev = (j.index(), Name::from(b), Name::from(a));
        if let Some(existing) = self.pair.get(&key) {
            if *existing != value {
                return Err(anti());
            }
            return Ok(());
        }
        if value.is_zero() {
            return Ok(());
        }
        self.pair.insert(key, value.clone());
        self.pair.insert(rev, -value);
        Ok(())
    }

    pub fn single(&self, a: &str) -> Expr {
        self.single.get(a).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn pair(&self, j: usize, a: &str, b: &str) -> Expr {
        self.pair
            .get(&(j, Name::from(a), Name::from(b)))
            .cloned()
            .unwrap_or_else(Expr::zero)
    }

    /// All coefficient expressions, labelled.
    pub fn entries(&self) -> Vec<(String, Expr)> {
        let mut out: Vec<(String, Expr)> = self.single.iter().map(|(a, e)| (format!("F_{a}"), e.clone())).collect();
        out.extend(
            self.pair
                .iter()
                .filter(|((_, a, b), _)| a < b)
                .map(|((j, a, b), e)| (format!("F^{j}_{a}{b}"), e.clone())),
        );
        out
    }

    /// Fields that appear as an index of some coefficient.
    pub fn involves_field(&self, name: &str) -> bool {
        self.single.keys().any(|a| &**a == name) || self.pair.keys().any(|(_, a, _)| &**a == name)
    }

    /// Keep only the components whose indices all satisfy `keep`.
    pub fn restrict(&self, keep: impl Fn(&str) -> bool) -> Force {
        Force {
            single: self
                .single
                .iter()
                .filter(|(a, _)| keep(a))
                .map(|(a, e)| (a.clone(), e.clone()))
                .collect(),
            pair: self
                .pair
                .iter()
                .filter(|((_, a, b), _)| keep(a) && keep(b))
                .map(|(k, e)| (k.clone(), e.clone()))
                .collect(),
        }
    }

    pub fn merged(&self, other: &Force) -> Force {
        let mut out = self.clone();
        for (a, e) in &other.single {
            let entry = out.single.entry(a.clone()).or_insert_with(Expr::zero);
            *entry = &*entry + e;
        }
        for (k, e) in &other.pair {
            let entry = out.pair.entry(k.clone()).or_insert_with(Expr::zero);
            *entry = &*entry + e;
        }
        out.single.retain(|_, e| !e.is_zero());
        out.pair.retain(|_, e| !e.is_zero());
        out
    }

    /// `Σ_{b,j} F^j_{ab} u^b_j + F_a`, the right-hand side of the forced
    /// Euler–Lagrange equation for field `a`.
    pub fn generalized_force(&self, a: &str, coords: &[Coord]) -> Expr {
        let mut acc = self.single(a);
        for ((j, x, b), e) in &self.pair {
            if &**x == a {
                let jet = Symbol::Jet {
                    field: b.clone(),
                    index: vec![coords[*j].clone()],
                };
                acc = acc + e * Expr::symbol(jet);
            }
        }
        acc
    }

    /// `½ F^j_{ab} du^a∧du^b∧η_j + F_a du^a∧η`.
    pub fn to_form(&self, basis: &HorizontalBasis) -> DifferentialForm {
        let m = basis.dim();
        let mut acc = DifferentialForm::zero(m + 1);
        for (a, e) in &self.single {
            let du = DifferentialForm::differential(&Symbol::Field(a.clone()));
            acc = acc.add(&du.wedge(basis.eta()).scale(e));
        }
        for ((j, a, b), e) in &self.pair {
            if a < b {
                let dua = DifferentialForm::differential(&Symbol::Field(a.clone()));
                let dub = DifferentialForm::differential(&Symbol::Field(b.clone()));
                acc = acc.add(&dua.wedge(&dub).wedge(basis.eta_i(*j)).scale(e));
            }
        }
        acc
    }

    /// Read force coefficients off an (m+1)-form.
    pub fn from_form(form: &DifferentialForm, basis: &HorizontalBasis) -> Result<Force, ModelError> {
        let m = basis.dim();
        let mut force = Force::new();
        for (gens, coeff) in form.terms() {
            let fields: Vec<&Generator> = gens.iter().filter(|g| !matches!(g, Generator::Base(_))).collect();
            let bad = || ModelError::NotAForce(DifferentialForm::term(gens.to_vec(), coeff.clone()).to_string());
            if fields.iter().any(|g| matches!(g, Generator::Jet(..))) {
                return Err(bad());
            }
            let names: Vec<Name> = fields.iter().map(|g| g.field_name().unwrap().into()).collect();
            let (template, slot) = match names.len() {
                1 => {
                    let du = DifferentialForm::differential(&Symbol::Field(names[0].clone()));
                    (du.wedge(basis.eta()), None)
                }
                2 if m >= 1 => {
                    let present: Vec<usize> = gens
                        .iter()
                        .filter_map(|g| match g {
                            Generator::Base(c) => Some(c.index()),
                            _ => None,
                        })
                        .collect();
                    let Some(j) = (0..m).find(|i| !present.contains(i)) else {
                        return Err(bad());
                    };
                    let dua = DifferentialForm::differential(&Symbol::Field(names[0].clone()));
                    let dub = DifferentialForm::differential(&Symbol::Field(names[1].clone()));
                    (dua.wedge(&dub).wedge(basis.eta_i(j)), Some(j))
                }
                _ => return Err(bad()),
            };
            let sign = template.coefficient(gens);
            if sign.is_zero() {
                return Err(bad());
            }
            let value = coeff.checked_div(&sign)?;
            match slot {
                None => force.add_single(&names[0], value)?,
                Some(j) => {
                    let prev = force.pair(j, &names[0], &names[1]);
                    force.pair.remove(&(j, names[0].clone(), names[1].clone()));
                    force.pair.remove(&(j, names[1].clone(), names[0].clone()));
                    force.set_pair(&basis.coords()[j], &names[0], &names[1], prev + value)?;
                }
            }
        }
        Ok(force)
    }
}

/// A first-order Lagrangian field theory over a trivial bundle.
#[derive(Clone, Debug)]
pub struct FieldModel {
    chart: Chart,
    lagrangian: Expr,
    force: Force,
}

impl FieldModel {
    pub fn new(chart: Chart, lagrangian: Expr) -> Result<Self, ModelError> {
        FieldModel::with_force(chart, lagrangian, Force::new())
    }

    pub fn with_force(chart: Chart, lagrangian: Expr, force: Force) -> Result<Self, ModelError> {
        if let Some(s) = lagrangian.symbols().into_iter().find(|s| s.jet_order() > 1) {
            return Err(ModelError::SecondJetInLagrangian(s.to_string()));
        }
        for (label, e) in force.entries() {
            check_basic(&label, &e)?;
        }
        for a in force.single.keys().chain(force.pair.keys().map(|(_, a, _)| a)) {
            if !chart.has_field(a) {
                return Err(ModelError::UnknownField(a.to_string()));
            }
        }
        Ok(FieldModel {
            chart,
            lagrangian,
            force,
        })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn coords(&self) -> &[Coord] {
        self.chart.coords()
    }

    pub fn fields(&self) -> &[Name] {
        self.chart.fields()
    }

    pub fn lagrangian(&self) -> &Expr {
        &self.lagrangian
    }

    pub fn force(&self) -> &Force {
        &self.force
    }

    pub fn basis(&self) -> HorizontalBasis {
        HorizontalBasis::new(self.coords())
    }

    pub fn field_symbol(&self, a: &str) -> Symbol {
        Symbol::Field(a.into())
    }

    pub fn jet(&self, a: &str, i: usize) -> Symbol {
        self.chart.jet1(a, &self.coords()[i])
    }

    /// The same model with `Σ_i D_i f_i` added to the Lagrangian. Each `f_i`
    /// must have jet order 0 so the result stays first order.
    pub fn with_null_divergence(&self, f: &[Expr]) -> Result<FieldModel, ModelError> {
        if let Some(s) = f.iter().flat_map(Expr::symbols).find(|s| s.jet_order() > 0) {
            return Err(ModelError::SecondJetInLagrangian(s.to_string()));
        }
        let div = Expr::total_divergence(f, self.coords())?;
        FieldModel::with_force(self.chart.clone(), &self.lagrangian + &div, self.force.clone())
    }
}

/// Euler–Lagrange residuals, one per field, in chart field order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ELSystem {
    fields: Vec<Name>,
    residuals: Vec<Expr>,
}

impl ELSystem {
    pub fn new(fields: Vec<Name>, residuals: Vec<Expr>) -> Self {
        assert_eq!(fields.len(), residuals.len());
        ELSystem { fields, residuals }
    }

    pub fn fields(&self) -> &[Name] {
        &self.fields
    }

    pub fn residuals(&self) -> &[Expr] {
        &self.residuals
    }

    pub fn get(&self, field: &str) -> Option<&Expr> {
        self.fields
            .iter()
            .position(|f| &**f == field)
            .map(|i| &self.residuals[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Expr)> {
        self.fields.iter().map(|f| &**f).zip(&self.residuals)
    }
}

/// `p^i_a = ∂L/∂u^a_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LegendreMultipliers {
    fields: Vec<Name>,
    values: Vec<Vec<Expr>>,
}

impl LegendreMultipliers {
    pub fn get(&self, field: &str, i: usize) -> &Expr {
        &self.for_field(field)[i]
    }

    pub fn for_field(&self, field: &str) -> &[Expr] {
        let pos = self
            .fields
            .iter()
            .position(|f| &**f == field)
            .unwrap_or_else(|| panic!("unknown field `{field}`"));
        &self.values[pos]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Expr])> {
        self.fields
            .iter()
            .map(|f| &**f)
            .zip(self.values.iter().map(Vec::as_slice))
    }
}

pub fn legendre_multipliers(model: &FieldModel) -> LegendreMultipliers {
    let values = model
        .fields()
        .iter()
        .map(|a| {
            (0..model.coords().len())
                .map(|i| model.lagrangian.diff_partial(&model.jet(a, i)))
                .collect()
        })
        .collect();
    LegendreMultipliers {
        fields: model.fields().to_vec(),
        values,
    }
}

/// Residuals `D_k(∂L/∂u^a_k) − ∂L/∂u^a − Σ F^j_{ab} u^b_j − F_a`.
pub fn euler_lagrange(model: &FieldModel) -> Result<ELSystem, ExprError> {
    let p = legendre_multipliers(model);
    let residuals = model
        .fields()
        .iter()
        .map(|a| {
            let div = Expr::total_divergence(p.for_field(a), model.coords())?;
            let dl = model.lagrangian.diff_partial(&model.field_symbol(a));
            Ok(div - dl - model.force.generalized_force(a, model.coords()))
        })
        .collect::<Result<_, ExprError>>()?;
    Ok(ELSystem::new(model.fields().to_vec(), residuals))
}

/// On-shell Cartan form `Lη + p^i_a du^a∧η_i − p^i_a u^a_i η`.
pub fn cartan_form(model: &FieldModel) -> DifferentialForm {
    let basis = model.basis();
    let p = legendre_multipliers(model);
    let mut acc = basis.eta().scale(&model.lagrangian);
    for (a, ps) in p.iter() {
        let du = DifferentialForm::differential(&model.field_symbol(a));
        for (i, pi) in ps.iter().enumerate() {
            if pi.is_zero() {
                continue;
            }
            acc = acc.add(&du.wedge(basis.eta_i(i)).scale(pi));
            let ui = Expr::symbol(model.jet(a, i));
            acc = acc.sub(&basis.eta().scale(&(pi * ui)));
        }
    }
    acc
}
