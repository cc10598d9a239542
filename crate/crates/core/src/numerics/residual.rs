use std::collections::BTreeMap;
use std::sync::Arc;

use crate::expr::{Expr, Symbol, Var};
use crate::model::ELSystem;

use super::{fd_partial_with, interior_norms, Exec, Grid, GridField, Norms, NumericsError};

/// Named samples on one grid plus numeric parameter values. Symbols are
/// looked up by printed name first (so closed-form derivatives such as
/// `rho_x` can be supplied); missing derivatives are taken by finite
/// differences of the underived samples.
#[derive(Clone, Debug)]
pub struct SampledFields {
    grid: Arc<Grid>,
    fields: BTreeMap<String, GridField>,
    params: BTreeMap<String, f64>,
}

impl SampledFields {
    pub fn new(grid: Arc<Grid>) -> Self {
        SampledFields {
            grid,
            fields: BTreeMap::new(),
            params: BTreeMap::new(),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn insert(&mut self, name: impl Into<String>, field: GridField) -> Result<(), NumericsError> {
        if *field.grid() != self.grid {
            return Err(NumericsError::BadGrid("field sampled on a different grid".into()));
        }
        self.fields.insert(name.into(), field);
        Ok(())
    }

    pub fn with(mut self, name: impl Into<String>, field: GridField) -> Result<Self, NumericsError> {
        self.insert(name, field)?;
        Ok(self)
    }

    pub fn set_param(&mut self, name: impl Into<String>, value: f64) {
        self.params.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<&GridField> {
        self.fields.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.fields.keys().map(String::as_str)
    }

    /// Samples for `s` and whether finite differences were needed.
    pub fn resolve(&self, s: &Symbol, exec: Exec) -> Result<(GridField, bool), NumericsError> {
        let name = s.to_string();
        if let Some(f) = self.fields.get(&name) {
            return Ok((f.clone(), false));
        }
        let unresolvable = || NumericsError::Unresolvable(name.clone());
        let axis_of = |n: &str| self.grid.axis_index(n).ok_or_else(unresolvable);
        let (base, axes): (String, Vec<usize>) = match s {
            Symbol::Coord(c) => {
                let a = axis_of(c.name())?;
                let g = self.grid.clone();
                return Ok((GridField::from_fn_with(exec, g, move |p| p[a])?, false));
            }
            Symbol::Param(p) => {
                let v = *self.params.get(&**p).ok_or_else(unresolvable)?;
                return Ok((GridField::constant(self.grid.clone(), v), false));
            }
            Symbol::Field(_) => return Err(unresolvable()),
            Symbol::Jet { field, index } => (
                field.to_string(),
                index.iter().map(|c| axis_of(c.name())).collect::<Result<_, _>>()?,
            ),
            Symbol::Func(f) => {
                if f.derivs().is_empty() {
                    return Err(unresolvable());
                }
                let axes = f
                    .deriv_vars()
                    .map(|v| match v {
                        Var::Coord(c) => axis_of(c.name()),
                        Var::Field(_) => Err(unresolvable()),
                    })
                    .collect::<Result<_, _>>()?;
                (Symbol::Func(f.base()).to_string(), axes)
            }
        };
        let mut cur = self.fields.get(&base).ok_or_else(unresolvable)?.clone();
        for axis in 0..self.grid.dim() {
            let mut count = axes.iter().filter(|a| **a == axis).count();
            while count > 0 {
                let step = count.min(3);
                cur = fd_partial_with(exec, &cur, axis, step)?;
                count -= step;
            }
        }
        Ok((cur, true))
    }
}

/// Pointwise value of an expression and whether any input needed finite
/// differences.
#[derive(Clone, Debug)]
pub struct Evaluated {
    pub field: GridField,
    pub fd_limited: bool,
}

pub fn evaluate_on_grid(e: &Expr, fields: &SampledFields, exec: Exec) -> Result<Evaluated, NumericsError> {
    let syms: Vec<Symbol> = e.symbols().into_iter().collect();
    let mut inputs = Vec::with_capacity(syms.len());
    let mut fd_limited = false;
    for s in &syms {
        let (f, fd) = fields.resolve(s, exec)?;
        fd_limited |= fd;
        inputs.push(f);
    }
    let compiled = e.compile(&|s| syms.iter().position(|x| x == s))?;
    let grid = fields.grid().clone();
    let mut out = vec![0.0; grid.len()];
    exec.for_rows(&mut out, grid.row_len(), |start, chunk| {
        let mut vals = vec![0.0; inputs.len()];
        for (k, v) in chunk.iter_mut().enumerate() {
            for (slot, f) in vals.iter_mut().zip(&inputs) {
                *slot = f.data()[start + k];
            }
            *v = compiled.eval(&vals);
        }
    });
    Ok(Evaluated {
        field: GridField::new(grid, out)?,
        fd_limited,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualNorm {
    pub equation: String,
    pub norms: Norms,
    pub fd_limited: bool,
}

/// Interior norms of every residual of `eqs` evaluated on `fields`.
pub fn equation_residual_norms(
    eqs: &ELSystem,
    fields: &SampledFields,
    exec: Exec,
) -> Result<Vec<ResidualNorm>, NumericsError> {
    eqs.iter()
        .map(|(name, e)| {
            let ev = evaluate_on_grid(e, fields, exec)?;
            Ok(ResidualNorm {
                equation: name.to_string(),
                norms: interior_norms(&ev.field),
                fd_limited: ev.fd_limited,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, Chart};
    use crate::model::{euler_lagrange, FieldModel};

    #[test]
    fn zero_fields_into_wave_equation() {
        let c = Chart::new(&["t", "x"], &["phi"]).unwrap();
        let l = parse_expr("1/2*phi_t^2 - 1/2*phi_x^2", &c).unwrap();
        let el = euler_lagrange(&FieldModel::new(c, l).unwrap()).unwrap();
        let g = Arc::new(Grid::tx(9, 0.0, 1.0, 9, 0.0, 1.0).unwrap());
        let f = SampledFields::new(g.clone())
            .with("phi", GridField::constant(g, 0.0))
            .unwrap();
        let r = equation_residual_norms(&el, &f, Exec::default()).unwrap();
        assert_eq!(r[0].norms, Norms { max: 0.0, l2: 0.0 });
        assert!(r[0].fd_limited);
    }

    #[test]
    fn lookup_prefers_supplied_samples() {
        let c = Chart::new(&["t", "x"], &["phi"]).unwrap();
        let e = parse_expr("phi_x - 2*x + k", &{
            let mut c = c.clone();
            c.add_param("k").unwrap();
            c
        })
        .unwrap();
        let g = Arc::new(Grid::tx(9, 0.0, 1.0, 9, 0.0, 1.0).unwrap());
        let mut f = SampledFields::new(g.clone())
            .with("phi", GridField::from_fn(g.clone(), |p| p[1] * p[1]).unwrap())
            .unwrap();
        f.set_param("k", 0.0);
        let fd = evaluate_on_grid(&e, &f, Exec::Sequential).unwrap();
        assert!(fd.fd_limited);
        assert!(fd.field.data().iter().all(|v| v.abs() < 1e-12));
        f.insert("phi_x", GridField::from_fn(g, |p| 2.0 * p[1]).unwrap())
            .unwrap();
        let exact = evaluate_on_grid(&e, &f, Exec::default()).unwrap();
        assert!(!exact.fd_limited);
        let missing = parse_expr("phi_t", &c).unwrap();
        assert!(evaluate_on_grid(&missing, &SampledFields::new(f.grid().clone()), Exec::default()).is_err());
    }
}
