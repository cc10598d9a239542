//! The INI-like model file format.
//!
//! ```text
//! [base]        coords = t, x
//! [fields]      names = phi, psi
//! [parameters]  names = c
//! [functions]   mu1 = t, x
//! [lagrangian]  L = <expr>        div.<coord> = <expr>
//! [force]       F.<field> = <expr>    F.<coord>.<a>.<b> = <expr>
//! [symmetry]    cyclic = phi
//! [connection]  <cyclic>.<coord or field> = <expr>
//! [momentum]    <cyclic>.<m-1 coords> = <expr>    closed = assume
//! [reduced-names]  <cyclic>.<coord> = <name>
//! ```

use std::collections::BTreeMap;
use std::fmt;

use crate::expr::{parse_expr, Chart, Coord, Expr, ExprError};
use crate::model::{FieldModel, Force};
use crate::routh::{ConnectionData, SigmaNames};
use crate::symmetry::{check_invariance, check_momentum_closed, CyclicAction, MomentumValue};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFileError {
    /// 1-based line, or 0 when the problem is not tied to a line.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ModelFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ModelFileError {}

fn err(line: usize, message: impl fmt::Display) -> ModelFileError {
    ModelFileError {
        line,
        message: message.to_string(),
    }
}

const SECTIONS: &[&str] = &[
    "base",
    "fields",
    "parameters",
    "functions",
    "lagrangian",
    "force",
    "symmetry",
    "connection",
    "momentum",
    "reduced-names",
];

#[derive(Clone, Debug)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

/// Everything a model file declares, validated.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub model: FieldModel,
    pub action: CyclicAction,
    pub connection: ConnectionData,
    pub momentum: MomentumValue,
    pub names: SigmaNames,
    /// Declared null-divergence terms `f_i` already added as `Σ D_i f_i`.
    pub null_divergence: Vec<Expr>,
}

fn split_list(v: &str) -> Vec<&str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn sections(text: &str) -> Result<BTreeMap<&'static str, Vec<Entry>>, ModelFileError> {
    let mut out: BTreeMap<&'static str, Vec<Entry>> = BTreeMap::new();
    let mut current: Option<&'static str> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line, "section header must end with `]`"))?
                .trim();
            let known = SECTIONS
                .iter()
                .find(|s| **s == name)
                .ok_or_else(|| err(line, format!("unknown section [{name}]")))?;
            if out.contains_key(known) {
                return Err(err(line, format!("section [{name}] appears twice")));
            }
            out.insert(known, Vec::new());
            current = Some(known);
            continue;
        }
        let section = current.ok_or_else(|| err(line, "entry before any section header"))?;
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, "expected `key = value`"))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(err(line, "empty key"));
        }
        let entries = out.get_mut(section).expect("section registered");
        if entries.iter().any(|e| e.key == key) {
            return Err(err(line, format!("duplicate key `{key}` in [{section}]")));
        }
        entries.push(Entry {
            key: key.to_string(),
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(out)
}

fn only_keys(entries: &[Entry], section: &str, allowed: &[&str]) -> Result<(), ModelFileError> {
    match entries.iter().find(|e| !allowed.contains(&e.key.as_str())) {
        Some(e) => Err(err(e.line, format!("unexpected key `{}` in [{section}]", e.key))),
        None => Ok(()),
    }
}

fn expr(chart: &Chart, e: &Entry) -> Result<Expr, ModelFileError> {
    parse_expr(&e.value, chart).map_err(|x| match x {
        ExprError::Syntax { pos, msg } => err(e.line, format!("column {} of `{}`: {msg}", pos + 1, e.value)),
        other => err(e.line, other),
    })
}

/// Parse and validate a model file.
pub fn parse_model_file(text: &str) -> Result<ModelSpec, ModelFileError> {
    let secs = sections(text)?;
    let empty = Vec::new();
    let get = |s: &str| secs.get(s).unwrap_or(&empty);

    let base = get("base");
    only_keys(base, "base", &["coords"])?;
    let coords_entry = base
        .iter()
        .find(|e| e.key == "coords")
        .ok_or_else(|| err(0, "[base] must declare `coords`"))?;
    let coords = split_list(&coords_entry.value);
    if coords.is_empty() {
        return Err(err(coords_entry.line, "at least one base coordinate is required"));
    }
    let fields = get("fields");
    only_keys(fields, "fields", &["names"])?;
    let field_names: Vec<&str> = fields
        .iter()
        .find(|e| e.key == "names")
        .map_or(Vec::new(), |e| split_list(&e.value));
    let fline = fields.first().map_or(0, |e| e.line);
    let mut chart = Chart::new(&coords, &[]).map_err(|e| err(coords_entry.line, e))?;
    for f in &field_names {
        chart.add_field(f).map_err(|e| err(fline, e))?;
    }
    let params = get("parameters");
    only_keys(params, "parameters", &["names"])?;
    for e in params {
        for p in split_list(&e.value) {
            chart.add_param(p).map_err(|x| err(e.line, x))?;
        }
    }
    for e in get("functions") {
        chart
            .add_function(&e.key, &split_list(&e.value))
            .map_err(|x| err(e.line, x))?;
    }

    // lagrangian
    let lag = get("lagrangian");
    let mut lagrangian = Expr::zero();
    let mut divs = vec![Expr::zero(); chart.dim()];
    let mut have_l = false;
    for e in lag {
        if e.key == "L" {
            lagrangian = expr(&chart, e)?;
            have_l = true;
        } else if let Some(c) = e.key.strip_prefix("div.") {
            let coord = chart
                .coord(c)
                .ok_or_else(|| err(e.line, format!("`{c}` is not a base coordinate")))?;
            divs[coord.index()] = expr(&chart, e)?;
        } else {
            return Err(err(e.line, format!("unexpected key `{}` in [lagrangian]", e.key)));
        }
    }
    if !have_l {
        return Err(err(0, "[lagrangian] must declare `L`"));
    }

    // force
    let mut force = Force::new();
    for e in get("force") {
        let parts: Vec<&str> = e.key.split('.').collect();
        let named = match parts.len() {
            2 => &parts[1..],
            4 => &parts[2..],
            _ => &[][..],
        };
        if let Some(n) = named.iter().find(|n| !chart.has_field(n)) {
            return Err(err(e.line, format!("`{n}` is not a field")));
        }
        match parts.as_slice() {
            ["F", a] => force.add_single(a, expr(&chart, e)?).map_err(|x| err(e.line, x))?,
            ["F", j, a, b] => {
                let c = chart
                    .coord(j)
                    .ok_or_else(|| err(e.line, format!("`{j}` is not a base coordinate")))?
                    .clone();
                force.set_pair(&c, a, b, expr(&chart, e)?).map_err(|x| err(e.line, x))?;
            }
            _ => {
                return Err(err(
                    e.line,
                    format!("force keys are `F.<field>` or `F.<coord>.<a>.<b>`, got `{}`", e.key),
                ))
            }
        }
    }
    let model = FieldModel::with_force(chart.clone(), lagrangian, force)
        .map_err(|x| err(lag.first().map_or(0, |e| e.line), x))?;
    let null_divergence: Vec<Expr> = if divs.iter().all(Expr::is_zero) {
        Vec::new()
    } else {
        divs
    };
    let model = if null_divergence.is_empty() {
        model
    } else {
        model
            .with_null_divergence(&null_divergence)
            .map_err(|x| err(lag.iter().find(|e| e.key.starts_with("div.")).map_or(0, |e| e.line), x))?
    };

    // symmetry
    let sym = get("symmetry");
    only_keys(sym, "symmetry", &["cyclic"])?;
    let cyclic: Vec<&str> = sym
        .iter()
        .find(|e| e.key == "cyclic")
        .map_or(Vec::new(), |e| split_list(&e.value));
    let sline = sym.first().map_or(0, |e| e.line);
    let action = CyclicAction::new(&model, &cyclic).map_err(|x| err(sline, x))?;
    check_invariance(&model, &action).map_err(|x| err(sline, format!("invariance: {x}")))?;

    // connection
    let mut connection = ConnectionData::flat(&model, &action);
    for e in get("connection") {
        let (a, key) = e
            .key
            .split_once('.')
            .ok_or_else(|| err(e.line, "connection keys are `<cyclic>.<coord or field>`"))?;
        if !action.is_cyclic(a) {
            return Err(err(e.line, format!("`{a}` is not a cyclic field")));
        }
        connection
            .set(a, key, expr(&chart, e)?)
            .map_err(|x| err(e.line, format!("invariance: {x}")))?;
    }

    // momentum
    let mut momentum = MomentumValue::zero(model.coords(), &action);
    let mut covectors: BTreeMap<String, Vec<(Vec<Coord>, Expr)>> = BTreeMap::new();
    let mut assume = false;
    let mut mline = 0;
    for e in get("momentum") {
        mline = mline.max(e.line);
        if e.key == "closed" {
            match e.value.as_str() {
                "assume" => assume = true,
                "check" => assume = false,
                other => return Err(err(e.line, format!("`closed` is `assume` or `check`, got `{other}`"))),
            }
            continue;
        }
        let mut parts = e.key.split('.');
        let a = parts.next().unwrap_or_default();
        if !action.is_cyclic(a) {
            return Err(err(e.line, format!("`{a}` is not a cyclic field")));
        }
        let key: Vec<Coord> = parts
            .map(|c| {
                chart
                    .coord(c)
                    .cloned()
                    .ok_or_else(|| err(e.line, format!("`{c}` is not a base coordinate")))
            })
            .collect::<Result<_, _>>()?;
        if key.len() + 1 != chart.dim() {
            return Err(err(
                e.line,
                format!(
                    "momentum keys list {} base coordinate(s) after the field",
                    chart.dim() - 1
                ),
            ));
        }
        covectors
            .entry(a.to_string())
            .or_default()
            .push((key, expr(&chart, e)?));
    }
    for (a, entries) in &covectors {
        momentum.set_covector(a, entries).map_err(|x| err(mline, x))?;
    }
    let momentum = momentum.assume_closed(assume);
    check_momentum_closed(&momentum).map_err(|x| err(mline, format!("closedness: {x}")))?;

    // reduced names
    let mut names = SigmaNames::new();
    for e in get("reduced-names") {
        let (a, c) = e
            .key
            .split_once('.')
            .ok_or_else(|| err(e.line, "reduced-name keys are `<cyclic>.<coord>`"))?;
        if !action.is_cyclic(a) || chart.coord(c).is_none() {
            return Err(err(
                e.line,
                format!("`{}` does not name a cyclic field and a coordinate", e.key),
            ));
        }
        names = names.alias(a, c, &e.value);
    }

    Ok(ModelSpec {
        model,
        action,
        connection,
        momentum,
        names,
        null_divergence,
    })
}
