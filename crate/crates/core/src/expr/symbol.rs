//! Chart symbols: base coordinates, fields, jet coordinates, parameters and
//! opaque functions of declared arguments.

use std::fmt;
use std::sync::Arc;

use super::ExprError;

/// Shared, cheaply clonable identifier.
pub type Name = Arc<str>;

/// Highest jet order a symbol may carry.
pub const MAX_JET_ORDER: usize = 2;

const RESERVED: [&str; 5] = ["sin", "cos", "exp", "tanh", "sech"];

/// A base coordinate `x^i`. Ordered by its position in the chart.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coord {
    index: usize,
    name: Name,
}

impl Coord {
    pub fn new(index: usize, name: impl Into<Name>) -> Self {
        Coord {
            index,
            name: name.into(),
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

/// An argument slot of an opaque function: a base coordinate or a field.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Coord(Coord),
    Field(Name),
}

impl Var {
    pub fn name(&self) -> &str {
        match self {
            Var::Coord(c) => c.name(),
            Var::Field(f) => f,
        }
    }

    pub fn to_symbol(&self) -> Symbol {
        match self {
            Var::Coord(c) => Symbol::Coord(c.clone()),
            Var::Field(f) => Symbol::Field(f.clone()),
        }
    }

    /// The argument slot a symbol occupies, if it can be one.
    pub fn of_symbol(s: &Symbol) -> Option<Var> {
        match s {
            Symbol::Coord(c) => Some(Var::Coord(c.clone())),
            Symbol::Field(f) => Some(Var::Field(f.clone())),
            _ => None,
        }
    }
}

/// An unspecified smooth function of its arguments, possibly differentiated.
///
/// `derivs` holds sorted positions into `args`; `Gpsi_t` is `Gpsi` with a
/// single derivative in the slot of `t`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FuncSym {
    name: Name,
    args: Arc<[Var]>,
    derivs: Vec<usize>,
}

impl FuncSym {
    pub fn new(name: impl Into<Name>, args: impl Into<Arc<[Var]>>) -> Self {
        FuncSym {
            name: name.into(),
            args: args.into(),
            derivs: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn name_arc(&self) -> &Name {
        &self.name
    }

    pub fn args(&self) -> &[Var] {
        &self.args
    }

    pub fn derivs(&self) -> &[usize] {
        &self.derivs
    }

    /// Derivative variables as argument values, in sorted order.
    pub fn deriv_vars(&self) -> impl Iterator<Item = &Var> {
        self.derivs.iter().map(move |&p| &self.args[p])
    }

    pub fn position_of(&self, v: &Var) -> Option<usize> {
        self.args.iter().position(|a| a == v)
    }

    /// The same function with one more derivative in slot `pos`.
    pub fn differentiated(&self, pos: usize) -> FuncSym {
        let mut derivs = self.derivs.clone();
        derivs.push(pos);
        derivs.sort_unstable();
        FuncSym {
            name: self.name.clone(),
            args: self.args.clone(),
            derivs,
        }
    }

    /// The undifferentiated function.
    pub fn base(&self) -> FuncSym {
        FuncSym {
            name: self.name.clone(),
            args: self.args.clone(),
            derivs: Vec::new(),
        }
    }

    /// Whether this function depends on any field argument.
    pub fn depends_on_fields(&self) -> bool {
        self.args.iter().any(|a| matches!(a, Var::Field(_)))
    }
}

/// A chart symbol.
///
/// The derived order (variant, then name, then index) is the canonical
/// ordering used for term sorting and printing.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Coord(Coord),
    Field(Name),
    Jet { field: Name, index: Vec<Coord> },
    Param(Name),
    Func(FuncSym),
}

impl Symbol {
    pub fn coord(c: &Coord) -> Symbol {
        Symbol::Coord(c.clone())
    }

    pub fn field(name: impl Into<Name>) -> Symbol {
        Symbol::Field(name.into())
    }

    pub fn param(name: impl Into<Name>) -> Symbol {
        Symbol::Param(name.into())
    }

    /// Jet coordinate `u_{J}`; the multi-index is sorted so mixed partials coincide.
    pub fn jet(field: impl Into<Name>, index: &[Coord]) -> Result<Symbol, ExprError> {
        let field = field.into();
        if index.is_empty() {
            return Ok(Symbol::Field(field));
        }
        if index.len() > MAX_JET_ORDER {
            return Err(ExprError::OrderOverflow {
                symbol: format!("{}_{}", field, index.iter().map(Coord::name).collect::<String>()),
            });
        }
        let mut index = index.to_vec();
        index.sort();
        Ok(Symbol::Jet { field, index })
    }

    /// Jet order: 0 for fields and non-jet symbols.
    pub fn jet_order(&self) -> usize {
        match self {
            Symbol::Jet { index, .. } => index.len(),
            _ => 0,
        }
    }

    /// Field name for a field or jet symbol.
    pub fn field_name(&self) -> Option<&str> {
        match self {
            Symbol::Field(f) => Some(f),
            Symbol::Jet { field, .. } => Some(field),
            _ => None,
        }
    }

    /// Whether this symbol is a field, jet or a function of the named field.
    pub fn involves_field(&self, name: &str) -> bool {
        match self {
            Symbol::Field(f) => &**f == name,
            Symbol::Jet { field, .. } => &**field == name,
            Symbol::Func(f) => f.args().iter().any(|a| matches!(a, Var::Field(x) if &**x == name)),
            _ => false,
        }
    }

    pub fn as_func(&self) -> Option<&FuncSym> {
        match self {
            Symbol::Func(f) => Some(f),
            _ => None,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Coord(c) => f.write_str(c.name()),
            Symbol::Field(n) | Symbol::Param(n) => f.write_str(n),
            Symbol::Jet { field, index } => {
                write!(f, "{field}_")?;
                for c in index {
                    f.write_str(c.name())?;
                }
                Ok(())
            }
            Symbol::Func(func) => {
                f.write_str(func.name())?;
                if !func.derivs.is_empty() {
                    f.write_str("_")?;
                    for v in func.deriv_vars() {
                        f.write_str(v.name())?;
                    }
                }
                Ok(())
            }
        }
    }
}

/// Declared opaque function: name and argument list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuncDecl {
    pub name: Name,
    pub args: Arc<[Var]>,
}

/// Symbol table over one coordinate patch.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Chart {
    coords: Vec<Coord>,
    fields: Vec<Name>,
    params: Vec<Name>,
    funcs: Vec<FuncDecl>,
}

impl Chart {
    pub fn new(coords: &[&str], fields: &[&str]) -> Result<Chart, ExprError> {
        let mut chart = Chart::default();
        for c in coords {
            chart.check_fresh(c)?;
            let idx = chart.coords.len();
            chart.coords.push(Coord::new(idx, *c));
        }
        for f in fields {
            chart.add_field(f)?;
        }
        Ok(chart)
    }

    fn check_fresh(&self, name: &str) -> Result<(), ExprError> {
        let valid = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid {
            return Err(ExprError::InvalidName(name.to_string()));
        }
        if RESERVED.contains(&name) || self.lookup_exact(name).is_some() {
            return Err(ExprError::DuplicateName(name.to_string()));
        }
        Ok(())
    }

    pub fn add_field(&mut self, name: &str) -> Result<(), ExprError> {
        self.check_fresh(name)?;
        self.fields.push(name.into());
        Ok(())
    }

    pub fn add_param(&mut self, name: &str) -> Result<(), ExprError> {
        self.check_fresh(name)?;
        self.params.push(name.into());
        Ok(())
    }

    /// Declare an opaque function of the named coordinates and fields.
    pub fn add_function(&mut self, name: &str, args: &[&str]) -> Result<(), ExprError> {
        self.check_fresh(name)?;
        let mut vars = Vec::with_capacity(args.len());
        for a in args {
            let v = if let Some(c) = self.coord(a) {
                Var::Coord(c.clone())
            } else if self.has_field(a) {
                Var::Field((*a).into())
            } else {
                return Err(ExprError::UnknownIdentifier(a.to_string()));
            };
            if vars.contains(&v) {
                return Err(ExprError::DuplicateName(a.to_string()));
            }
            vars.push(v);
        }
        self.funcs.push(FuncDecl {
            name: name.into(),
            args: vars.into(),
        });
        Ok(())
    }

    /// Re-declare an existing function verbatim (used when deriving charts).
    pub fn add_function_decl(&mut self, decl: FuncDecl) -> Result<(), ExprError> {
        self.check_fresh(&decl.name)?;
        self.funcs.push(decl);
        Ok(())
    }

    pub fn coords(&self) -> &[Coord] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn fields(&self) -> &[Name] {
        &self.fields
    }

    pub fn params(&self) -> &[Name] {
        &self.params
    }

    pub fn functions(&self) -> &[FuncDecl] {
        &self.funcs
    }

    pub fn coord(&self, name: &str) -> Option<&Coord> {
        self.coords.iter().find(|c| c.name() == name)
    }

    pub fn has_field(&self, name: &str) -> bool {
        self.fields.iter().any(|f| &**f == name)
    }

    pub fn function(&self, name: &str) -> Option<FuncSym> {
        self.funcs
            .iter()
            .find(|d| &*d.name == name)
            .map(|d| FuncSym::new(d.name.clone(), d.args.clone()))
    }

    pub fn field_symbol(&self, name: &str) -> Option<Symbol> {
        self.fields
            .iter()
            .find(|f| &***f == name)
            .map(|f| Symbol::Field(f.clone()))
    }

    /// First-order jet `u^a_i`.
    pub fn jet1(&self, field: &str, coord: &Coord) -> Symbol {
        Symbol::Jet {
            field: field.into(),
            index: vec![coord.clone()],
        }
    }

    fn lookup_exact(&self, name: &str) -> Option<Symbol> {
        if let Some(c) = self.coord(name) {
            return Some(Symbol::Coord(c.clone()));
        }
        if let Some(s) = self.field_symbol(name) {
            return Some(s);
        }
        if let Some(p) = self.params.iter().find(|p| &***p == name) {
            return Some(Symbol::Param(p.clone()));
        }
        self.function(name).map(Symbol::Func)
    }

    /// Resolve an identifier, including the derivative suffix convention
    /// `phi_tx` (jets of fields) and `Gpsi_t` (derivatives of functions).
    pub fn resolve(&self, ident: &str) -> Result<Symbol, ExprError> {
        if let Some(s) = self.lookup_exact(ident) {
            return Ok(s);
        }
        let Some(split) = ident.rfind('_') else {
            return Err(ExprError::UnknownIdentifier(ident.to_string()));
        };
        let (head, suffix) = (&ident[..split], &ident[split + 1..]);
        let bad_suffix = || ExprError::BadSuffix {
            ident: ident.to_string(),
            suffix: suffix.to_string(),
        };
        if self.has_field(head) {
            let names: Vec<&str> = self.coords.iter().map(Coord::name).collect();
            let parts = split_names(suffix, &names).ok_or_else(bad_suffix)?;
            let index: Vec<Coord> = parts.iter().map(|&i| self.coords[i].clone()).collect();
            return Symbol::jet(head, &index);
        }
        if let Some(func) = self.function(head) {
            let names: Vec<&str> = func.args().iter().map(Var::name).collect();
            let parts = split_names(suffix, &names).ok_or_else(bad_suffix)?;
            let mut out = func;
            for p in parts {
                out = out.differentiated(p);
            }
            return Ok(Symbol::Func(out));
        }
        Err(ExprError::UnknownIdentifier(head.to_string()))
    }
}

/// Split `s` into a concatenation of the given names (longest match first,
/// with backtracking). Returns positions into `names`.
fn split_names(s: &str, names: &[&str]) -> Option<Vec<usize>> {
    if s.is_empty() {
        return None;
    }
    fn go(s: &str, names: &[&str], acc: &mut Vec<usize>) -> bool {
        if s.is_empty() {
            return true;
        }
        let mut order: Vec<usize> = (0..names.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(names[i].len()));
        for i in order {
            if let Some(rest) = s.strip_prefix(names[i]) {
                acc.push(i);
                if go(rest, names, acc) {
                    return true;
                }
                acc.pop();
            }
        }
        false
    }
    let mut acc = Vec::new();
    go(s, names, &mut acc).then_some(acc)
}
