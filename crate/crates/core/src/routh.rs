//! Routh reduction: principal connections on the cyclic directions, the
//! Routhian, the reduced field theory with its gyroscopic force, and the
//! chart-level consistency check between reduced and unreduced equations.

use thiserror::Error;

use crate::expr::{Chart, Coord, Expr, ExprError, FuncDecl, FuncRule, Name, Symbol, Var};
use crate::forms::{DifferentialForm, Generator, HorizontalBasis};
use crate::model::{euler_lagrange, ELSystem, FieldModel, Force, ModelError};
use crate::symmetry::{
    check_invariance, check_momentum_closed, depends_on_value, momentum_constraint, Closedness, CyclicAction,
    MomentumValue, SymmetryError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RouthError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error(
        "connection coefficient {entry} depends on `{symbol}`; only base coordinates and non-cyclic fields are allowed"
    )]
    ConnectionNotInvariant { entry: String, symbol: String },
    #[error("connection entry {0} does not name a cyclic field and a base coordinate or non-cyclic field")]
    BadConnectionKey(String),
    #[error(
        "the model force has a component along cyclic field `{0}`; reduction needs forces on the shape fields only"
    )]
    CyclicForce(String),
    #[error("reduced name `{0}` clashes with an existing symbol")]
    NameClash(String),
    #[error("internal consistency: {0}")]
    Internal(String),
    #[error("round-trip check unavailable: {0}")]
    RoundTripUnavailable(String),
}

/// A principal connection for the translation action,
/// `ω^a = du^a − Γ^a_i dx^i − Σ_b Γ^a_b du^b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectionData {
    coords: Vec<Coord>,
    shape: Vec<Name>,
    entries: Vec<ConnectionEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct ConnectionEntry {
    cyclic: Name,
    base: Vec<Expr>,
    fiber: Vec<Expr>,
}

impl ConnectionData {
    /// All coefficients zero.
    pub fn flat(model: &FieldModel, action: &CyclicAction) -> Self {
        let shape = action.shape_fields(model);
        let m = model.coords().len();
        ConnectionData {
            coords: model.coords().to_vec(),
            entries: action
                .cyclic_fields()
                .iter()
                .map(|a| ConnectionEntry {
                    cyclic: a.clone(),
                    base: vec![Expr::zero(); m],
                    fiber: vec![Expr::zero(); shape.len()],
                })
                .collect(),
            shape,
        }
    }

    fn validate(&self, label: &str, e: &Expr) -> Result<(), RouthError> {
        let cyclic: Vec<&Name> = self.entries.iter().map(|x| &x.cyclic).collect();
        let bad = e
            .symbols()
            .into_iter()
            .find(|s| s.jet_order() > 0 || cyclic.iter().any(|a| depends_on_value(s, a)));
        match bad {
            Some(s) => Err(RouthError::ConnectionNotInvariant {
                entry: label.to_string(),
                symbol: s.to_string(),
            }),
            None => Ok(()),
        }
    }

    fn entry_mut(&mut self, a: &str, key: &str) -> Result<&mut ConnectionEntry, RouthError> {
        self.entries
            .iter_mut()
            .find(|e| &*e.cyclic == a)
            .ok_or_else(|| RouthError::BadConnectionKey(format!("{a}.{key}")))
    }

    fn entry(&self, a: &str) -> &ConnectionEntry {
        self.entries
            .iter()
            .find(|e| &*e.cyclic == a)
            .unwrap_or_else(|| panic!("`{a}` is not cyclic"))
    }

    /// Set `Γ^a_key`, where `key` names a base coordinate or a shape field.
    pub fn set(&mut self, a: &str, key: &str, value: Expr) -> Result<(), RouthError> {
        self.validate(&format!("Gamma^{a}_{key}"), &value)?;
        if let Some(i) = self.coords.iter().position(|c| c.name() == key) {
            self.entry_mut(a, key)?.base[i] = value;
        } else if let Some(b) = self.shape.iter().position(|f| &**f == key) {
            self.entry_mut(a, key)?.fiber[b] = value;
        } else {
            return Err(RouthError::BadConnectionKey(format!("{a}.{key}")));
        }
        Ok(())
    }

    pub fn base(&self, a: &str, i: usize) -> &Expr {
        &self.entry(a).base[i]
    }

    pub fn fiber(&self, a: &str, b: &str) -> Expr {
        let pos = self.shape.iter().position(|f| &**f == b);
        pos.map_or_else(Expr::zero, |p| self.entry(a).fiber[p].clone())
    }

    pub fn is_flat(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.base.iter().chain(&e.fiber).all(Expr::is_zero))
    }

    pub fn cyclic_fields(&self) -> impl Iterator<Item = &Name> {
        self.entries.iter().map(|e| &e.cyclic)
    }

    pub fn shape_fields(&self) -> &[Name] {
        &self.shape
    }

    pub fn coords(&self) -> &[Coord] {
        &self.coords
    }

    /// The connection 1-form `ω^a`.
    pub fn omega(&self, a: &str) -> DifferentialForm {
        let e = self.entry(a);
        let basis = HorizontalBasis::new(&self.coords);
        let mut w = DifferentialForm::differential(&Symbol::Field(e.cyclic.clone()));
        for (i, g) in e.base.iter().enumerate() {
            w = w.sub(&basis.dx(i).scale(g));
        }
        for (b, g) in self.shape.iter().zip(&e.fiber) {
            w = w.sub(&DifferentialForm::differential(&Symbol::Field(b.clone())).scale(g));
        }
        w
    }

    /// `u^a_i − Γ^a_i − Σ_b Γ^a_b u^b_i`, the vertical part of the jet.
    pub fn vertical_jet(&self, a: &str, i: usize) -> Expr {
        let e = self.entry(a);
        let c = &self.coords[i];
        let jet = |f: &Name| {
            Expr::symbol(Symbol::Jet {
                field: f.clone(),
                index: vec![c.clone()],
            })
        };
        let mut v = jet(&e.cyclic) - &e.base[i];
        for (b, g) in self.shape.iter().zip(&e.fiber) {
            v = v - g * jet(b);
        }
        v
    }

    /// `Γ^a_i + Σ_b Γ^a_b u^b_i`, the horizontal part of the jet.
    pub fn horizontal_jet(&self, a: &str, i: usize) -> Expr {
        let jet = Expr::symbol(Symbol::Jet {
            field: self.entry(a).cyclic.clone(),
            index: vec![self.coords[i].clone()],
        });
        jet - self.vertical_jet(a, i)
    }
}

fn preflight(model: &FieldModel, action: &CyclicAction, mu: &MomentumValue) -> Result<Closedness, RouthError> {
    check_invariance(model, action)?;
    Ok(check_momentum_closed(mu)?)
}

/// `R_μ = L − Σ_{a,i} μ̂^i_a (u^a_i − Γ^a_i − Σ_b Γ^a_b u^b_i)`.
pub fn routhian(
    model: &FieldModel,
    action: &CyclicAction,
    connection: &ConnectionData,
    mu: &MomentumValue,
) -> Result<Expr, RouthError> {
    preflight(model, action, mu)?;
    Ok(routhian_unchecked(model, action, connection, mu))
}

fn routhian_unchecked(
    model: &FieldModel,
    action: &CyclicAction,
    connection: &ConnectionData,
    mu: &MomentumValue,
) -> Expr {
    let mut r = model.lagrangian().clone();
    for a in action.cyclic_fields() {
        for (i, m) in mu.eta(a).iter().enumerate() {
            if !m.is_zero() {
                r = r - m * connection.vertical_jet(a, i);
            }
        }
    }
    r
}

/// The Routhian computed from forms: `L − ⌜ε Σ_a μ_a ∧ (j¹s)^*ω^a⌝_η`.
pub fn routhian_from_forms(
    model: &FieldModel,
    action: &CyclicAction,
    connection: &ConnectionData,
    mu: &MomentumValue,
) -> Result<Expr, RouthError> {
    preflight(model, action, mu)?;
    let basis = model.basis();
    let m = basis.dim();
    let mut acc = DifferentialForm::zero(m);
    for a in action.cyclic_fields() {
        let pulled = (0..m).fold(DifferentialForm::zero(1), |w, i| {
            w.add(&basis.dx(i).scale(&connection.vertical_jet(a, i)))
        });
        acc = acc.add(&mu.form(a).wedge(&pulled));
    }
    let pairing = basis.eta_coefficient(&acc).scale_int(basis.epsilon());
    Ok(model.lagrangian() - &pairing)
}

/// `ω_μ = ε Σ_a μ_a ∧ ω^a`, its exterior derivative and the force it induces
/// on the shape fields.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GyroscopicForce {
    /// `ω_μ`.
    pub connection_form: DifferentialForm,
    /// `dω_μ` without using closedness of `μ`.
    pub raw_form: DifferentialForm,
    /// `dω_μ` after closedness of `μ` is imposed.
    pub form: DifferentialForm,
    /// Coefficients extracted from `form`.
    pub force: Force,
    /// Coefficients extracted from the shape-field part of `raw_form`.
    pub raw_force: Force,
}

pub fn gyroscopic_force(
    action: &CyclicAction,
    connection: &ConnectionData,
    mu: &MomentumValue,
) -> Result<GyroscopicForce, RouthError> {
    let closedness = check_momentum_closed(mu)?;
    let basis = HorizontalBasis::new(connection.coords());
    let mut wmu = DifferentialForm::zero(basis.dim());
    for a in action.cyclic_fields() {
        wmu = wmu.add(&mu.form(a).wedge(&connection.omega(a)));
    }
    let wmu = wmu.scale(&Expr::int(basis.epsilon()));
    let raw_form = wmu.exterior_derivative();
    let form = raw_form.map_coefficients(|c| c.apply_rules(closedness.rules()))?;
    let is_cyclic = |g: &Generator| matches!(g, Generator::Field(f) | Generator::Jet(f, _) if action.is_cyclic(f));
    if form.has_generator(is_cyclic) {
        return Err(RouthError::Internal(format!(
            "dω_μ has components along cyclic fields after closedness: {form}"
        )));
    }
    let force = Force::from_form(&form, &basis)?;
    let mut shape_part = DifferentialForm::zero(raw_form.degree());
    for (gens, c) in raw_form.terms() {
        if !gens.iter().any(is_cyclic) {
            shape_part = shape_part.add(&DifferentialForm::term(gens.to_vec(), c.clone()));
        }
    }
    let raw_force = Force::from_form(&shape_part, &basis)?;
    Ok(GyroscopicForce {
        connection_form: wmu,
        raw_form,
        form,
        force,
        raw_force,
    })
}

/// Names of the reduced fields `σ^a_i`; defaults to `sigma_<a>_<coord>`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SigmaNames {
    aliases: Vec<(Name, Name, Name)>,
}

impl SigmaNames {
    pub fn new() -> Self {
        SigmaNames::default()
    }

    pub fn alias(mut self, cyclic: &str, coord: &str, name: &str) -> Self {
        self.aliases.retain(|(a, c, _)| !(&**a == cyclic && &**c == coord));
        self.aliases.push((cyclic.into(), coord.into(), name.into()));
        self
    }

    pub fn name(&self, cyclic: &str, coord: &str) -> Name {
        self.aliases
            .iter()
            .find(|(a, c, _)| &**a == cyclic && &**c == coord)
            .map(|(_, _, n)| n.clone())
            .unwrap_or_else(|| format!("sigma_{cyclic}_{coord}").into())
    }
}

/// The quotient field theory: shape fields plus `σ^a_i`, Lagrangian
/// `R^red` and the gyroscopic force.
#[derive(Clone, Debug)]
pub struct ReducedModel {
    model: FieldModel,
    routhian: Expr,
    sigma: Vec<(Name, Vec<Name>)>,
    shape: Vec<Name>,
    gyro: GyroscopicForce,
    shape_force: Force,
    closedness: Closedness,
}

impl ReducedModel {
    /// The reduced theory with the closedness-reduced gyroscopic force.
    pub fn model(&self) -> &FieldModel {
        &self.model
    }

    pub fn lagrangian(&self) -> &Expr {
        self.model.lagrangian()
    }

    /// `R_μ` on the unreduced jet space.
    pub fn routhian(&self) -> &Expr {
        &self.routhian
    }

    pub fn gyroscopic(&self) -> &GyroscopicForce {
        &self.gyro
    }

    pub fn closedness(&self) -> &Closedness {
        &self.closedness
    }

    pub fn shape_fields(&self) -> &[Name] {
        &self.shape
    }

    /// `σ^a_i` names per cyclic field, in base-coordinate order.
    pub fn sigma_fields(&self) -> &[(Name, Vec<Name>)] {
        &self.sigma
    }

    pub fn sigma(&self, cyclic: &str, i: usize) -> &Name {
        &self
            .sigma
            .iter()
            .find(|(a, _)| &**a == cyclic)
            .unwrap_or_else(|| panic!("`{cyclic}` is not cyclic"))
            .1[i]
    }

    /// The reduced theory with the raw `dω_μ` force (closedness not used).
    pub fn model_with_raw_force(&self) -> Result<FieldModel, RouthError> {
        Ok(FieldModel::with_force(
            self.model.chart().clone(),
            self.model.lagrangian().clone(),
            self.shape_force.merged(&self.gyro.raw_force),
        )?)
    }
}

pub fn reduce_model(
    model: &FieldModel,
    action: &CyclicAction,
    connection: &ConnectionData,
    mu: &MomentumValue,
    names: &SigmaNames,
) -> Result<ReducedModel, RouthError> {
    let closedness = preflight(model, action, mu)?;
    if let Some(a) = action.cyclic_fields().iter().find(|a| model.force().involves_field(a)) {
        return Err(RouthError::CyclicForce(a.to_string()));
    }
    let coords = model.coords();
    let shape = action.shape_fields(model);

    let mut sigma = Vec::new();
    for a in action.cyclic_fields() {
        let list: Vec<Name> = coords.iter().map(|c| names.name(a, c.name())).collect();
        sigma.push((a.clone(), list));
    }

    // reduced chart: same base, shape fields, σ fields, parameters and the
    // functions that do not involve cyclic fields
    let coord_names: Vec<&str> = coords.iter().map(Coord::name).collect();
    let shape_names: Vec<&str> = shape.iter().map(|s| &**s).collect();
    let mut chart = Chart::new(&coord_names, &shape_names)?;
    let clash = |n: &str| RouthError::NameClash(n.to_string());
    for n in model.chart().params() {
        chart.add_param(n).map_err(|_| clash(n))?;
    }
    let keep: Vec<FuncDecl> = model
        .chart()
        .functions()
        .iter()
        .filter(|d| !d.args.iter().any(|v| matches!(v, Var::Field(f) if action.is_cyclic(f))))
        .cloned()
        .collect();
    for d in keep {
        let n = d.name.clone();
        chart.add_function_decl(d).map_err(|_| clash(&n))?;
    }
    for (_, list) in &sigma {
        for n in list {
            if model.chart().resolve(n).is_ok() {
                return Err(clash(n));
            }
            chart.add_field(n).map_err(|_| clash(n))?;
        }
    }

    let r_mu = routhian_unchecked(model, action, connection, mu);
    let reduced = r_mu.substitute(&|s| match s {
        Symbol::Jet { field, index } if index.len() == 1 && action.is_cyclic(field) => {
            let i = index[0].index();
            let sig = sigma.iter().find(|(a, _)| a == field).map(|(_, l)| l[i].clone())?;
            Some(Expr::symbol(Symbol::Field(sig)) + connection.horizontal_jet(field, i))
        }
        _ => None,
    })?;
    if let Some(s) = reduced
        .symbols()
        .into_iter()
        .find(|s| action.cyclic_fields().iter().any(|a| s.involves_field(a)))
    {
        return Err(RouthError::Internal(format!("reduced Lagrangian still contains `{s}`")));
    }

    let gyro = gyroscopic_force(action, connection, mu)?;
    let shape_force = model.force().clone();
    let force = shape_force.merged(&gyro.force);
    let rm = FieldModel::with_force(chart, reduced, force)?;
    Ok(ReducedModel {
        model: rm,
        routhian: r_mu,
        sigma,
        shape,
        gyro,
        shape_force,
        closedness,
    })
}

/// Euler–Lagrange equations (with gyroscopic force) of the reduced theory.
pub fn reduced_euler_lagrange(rm: &ReducedModel) -> Result<ELSystem, RouthError> {
    Ok(euler_lagrange(rm.model())?)
}

/// How the momentum constraints were imposed in [`round_trip_remainders`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConstraintElimination {
    /// Abstract momentum components were replaced by the multipliers they
    /// equal on the level set.
    MomentumByMultipliers,
    /// The constraints were solved for first jets of the cyclic fields.
    JetsSolved,
}

/// For every shape field `b`, the canonical remainder of
/// `E_b(R^red) − F_b` minus `E_b(L)` after substituting
/// `σ^a_i = u^a_i − Γ^a_i − Σ Γ^a_b u^b_i` and imposing the momentum
/// constraints. All remainders vanish when reduction is consistent.
pub fn round_trip_remainders(
    model: &FieldModel,
    action: &CyclicAction,
    connection: &ConnectionData,
    mu: &MomentumValue,
    rm: &ReducedModel,
) -> Result<(ConstraintElimination, Vec<(Name, Expr)>), RouthError> {
    let unreduced = euler_lagrange(model)?;
    let reduced = euler_lagrange(&rm.model_with_raw_force()?)?;

    // σ^a_i and its jets back to the unreduced jet space
    let back = |e: &Expr| -> Result<Expr, ExprError> {
        e.try_substitute(&|s| {
            for (a, list) in rm.sigma_fields() {
                for (i, n) in list.iter().enumerate() {
                    let v = connection.vertical_jet(a, i);
                    match s {
                        Symbol::Field(f) if f == n => return Ok(Some(v)),
                        Symbol::Jet { field, index } if field == n => {
                            let mut out = v;
                            for c in index {
                                out = out.total_derivative(c)?;
                            }
                            return Ok(Some(out));
                        }
                        _ => {}
                    }
                }
            }
            Ok(None)
        })
    };

    type Impose = Box<dyn Fn(&Expr) -> Result<Expr, ExprError>>;
    let (mode, impose): (ConstraintElimination, Impose) = match multiplier_rules(model, action, mu) {
        Some(rules) => (
            ConstraintElimination::MomentumByMultipliers,
            Box::new(move |e: &Expr| e.apply_rules(&rules)),
        ),
        None => {
            let sol = solve_cyclic_jets(model, action, mu)?;
            (
                ConstraintElimination::JetsSolved,
                Box::new(move |e: &Expr| substitute_jets(e, &sol)),
            )
        }
    };

    let mut out = Vec::new();
    for b in rm.shape_fields() {
        let red = reduced
            .get(b)
            .ok_or_else(|| RouthError::Internal(format!("no reduced equation for `{b}`")))?;
        let full = unreduced.get(b).expect("shape field of the model");
        let diff = impose(&back(red)?)? - impose(full)?;
        out.push((b.clone(), diff));
    }
    Ok((mode, out))
}

/// Rules `F → p^i_a / k` when every nonzero `μ̂^i_a` is `k·F` for distinct
/// underived functions `F`.
fn multiplier_rules(model: &FieldModel, action: &CyclicAction, mu: &MomentumValue) -> Option<Vec<FuncRule>> {
    let cons = momentum_constraint(model, action, mu);
    let mut rules: Vec<FuncRule> = Vec::new();
    for (a, comps) in mu.iter() {
        for (i, m) in comps.iter().enumerate() {
            if m.is_zero() {
                continue;
            }
            let (k, s) = m.as_scaled_symbol()?;
            let f = s.as_func().filter(|f| f.derivs().is_empty())?;
            if rules.iter().any(|r| &r.name == f.name_arc()) {
                return None;
            }
            let p = cons.iter().find(|c| &*c.field == a && c.index == i)?.equation.clone() + m;
            rules.push(FuncRule::new(f, p.scale(&k.recip())));
        }
    }
    if rules.is_empty() {
        return None;
    }
    Some(rules)
}

type JetSolution = Vec<(Name, usize, Expr)>;

/// Solve the level-set equations for first jets of the cyclic fields.
fn solve_cyclic_jets(model: &FieldModel, action: &CyclicAction, mu: &MomentumValue) -> Result<JetSolution, RouthError> {
    let coords = model.coords();
    let mut sol: JetSolution = Vec::new();
    for c in momentum_constraint(model, action, mu) {
        let eq = substitute_first_jets(&c.equation, &sol)?;
        if eq.is_zero() {
            continue;
        }
        let order: Vec<usize> = std::iter::once(c.index).chain(0..coords.len()).collect();
        let found = action.cyclic_fields().iter().find_map(|a| {
            order.iter().find_map(|&i| {
                if sol.iter().any(|(f, j, _)| f == a && *j == i) {
                    return None;
                }
                let jet = model.jet(a, i);
                let v = eq.solve_linear(&jet)?;
                (!v.any_symbol(|s| action.cyclic_fields().iter().any(|x| s.involves_field(x))))
                    .then(|| (a.clone(), i, v))
            })
        });
        let Some((a, i, v)) = found else {
            return Err(RouthError::RoundTripUnavailable(format!(
                "constraint `{} = 0` cannot be solved linearly for a cyclic jet",
                c.equation
            )));
        };
        for entry in sol.iter_mut() {
            entry.2 = entry.2.substitute_symbol(&model.jet(&a, i), &v)?;
        }
        sol.push((a, i, v));
    }
    Ok(sol)
}

fn substitute_first_jets(e: &Expr, sol: &JetSolution) -> Result<Expr, ExprError> {
    e.substitute(&|s| match s {
        Symbol::Jet { field, index } if index.len() == 1 => sol
            .iter()
            .find(|(f, i, _)| f == field && *i == index[0].index())
            .map(|(_, _, v)| v.clone()),
        _ => None,
    })
}

/// First jets by their solutions, second jets `u_{ij}` by `D_j` of the
/// solution for `u_i` (or `D_i` of that for `u_j`).
fn substitute_jets(e: &Expr, sol: &JetSolution) -> Result<Expr, ExprError> {
    e.try_substitute(&|s| {
        let Symbol::Jet { field, index } = s else {
            return Ok(None);
        };
        let find = |c: &Coord| sol.iter().find(|(f, i, _)| f == field && *i == c.index()).map(|x| &x.2);
        match index.as_slice() {
            [c] => Ok(find(c).cloned()),
            [c1, c2] => match (find(c1), find(c2)) {
                (Some(v), _) => Ok(Some(v.total_derivative(c2)?)),
                (None, Some(v)) => Ok(Some(v.total_derivative(c1)?)),
                _ => Ok(None),
            },
            _ => Ok(None),
        }
    })
}

/// Rewrite rule obtained by solving `eq = 0` for the opaque function (or
/// function derivative) `target`; later derivatives of `target` follow.
pub fn solve_for_function(eq: &Expr, target: &Symbol) -> Option<FuncRule> {
    let f = target.as_func()?;
    let sol = eq.solve_linear(target)?;
    Some(FuncRule::new(f, sol))
}
