//! Seeded random charts, polynomials, forms and invariant models.
#![allow(dead_code)]

pub mod props;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use routh::expr::{Chart, Expr, Symbol};
use routh::forms::{DifferentialForm, Generator};
use routh::model::FieldModel;
use routh::symmetry::CyclicAction;

pub const COORDS: [&str; 3] = ["t", "x", "y"];
pub const FIELDS: [&str; 3] = ["u", "v", "w"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `m` coordinates and `n` fields.
pub fn chart(m: usize, n: usize) -> Chart {
    Chart::new(&COORDS[..m], &FIELDS[..n]).unwrap()
}

pub fn random_chart(rng: &mut ChaCha8Rng) -> Chart {
    chart(rng.random_range(1..=3), rng.random_range(1..=3))
}

/// Coordinates and field values.
pub fn base_symbols(c: &Chart) -> Vec<Symbol> {
    let mut out: Vec<Symbol> = c.coords().iter().map(Symbol::coord).collect();
    out.extend(c.fields().iter().map(|f| Symbol::Field(f.clone())));
    out
}

pub fn first_jets(c: &Chart, fields: &[&str]) -> Vec<Symbol> {
    let mut out = Vec::new();
    for f in fields {
        for x in c.coords() {
            out.push(c.jet1(f, x));
        }
    }
    out
}

pub fn small_rational(rng: &mut ChaCha8Rng) -> Expr {
    let mut n: i64 = rng.random_range(-4..=4);
    if n == 0 {
        n = 1;
    }
    Expr::rational(n, rng.random_range(1..=3))
}

/// A random polynomial with `terms` monomials of degree `1..=max_deg`
/// over `vars`, plus a constant now and then.
pub fn random_poly(rng: &mut ChaCha8Rng, vars: &[Symbol], terms: usize, max_deg: usize) -> Expr {
    let mut acc = Expr::zero();
    if vars.is_empty() {
        return small_rational(rng);
    }
    for _ in 0..terms {
        let deg = rng.random_range(1..=max_deg);
        let mut m = small_rational(rng);
        for _ in 0..deg {
            let s = vars[rng.random_range(0..vars.len())].clone();
            m = m * Expr::symbol(s);
        }
        acc = acc + m;
    }
    if rng.random_bool(0.3) {
        acc = acc + small_rational(rng);
    }
    acc
}

/// Like [`random_poly`] but sometimes wrapping monomials in an elementary
/// function, so that chain rules get exercised.
pub fn random_smooth(rng: &mut ChaCha8Rng, vars: &[Symbol], terms: usize) -> Expr {
    let mut acc = random_poly(rng, vars, terms, 2);
    if rng.random_bool(0.5) {
        let inner = random_poly(rng, vars, 1, 2);
        let f = match rng.random_range(0..5) {
            0 => inner.sin(),
            1 => inner.cos(),
            2 => inner.exp(),
            3 => inner.tanh(),
            _ => inner.sech(),
        };
        acc = acc + small_rational(rng) * f;
    }
    acc
}

fn generators(c: &Chart) -> Vec<Generator> {
    base_symbols(c).iter().filter_map(Generator::of).collect()
}

/// A random `degree`-form over `dx^i, du^a` with jet-order-0 coefficients.
pub fn random_form(rng: &mut ChaCha8Rng, c: &Chart, degree: usize) -> DifferentialForm {
    let gens = generators(c);
    let vars = base_symbols(c);
    let mut acc = DifferentialForm::zero(degree);
    if degree > gens.len() {
        return acc;
    }
    for _ in 0..rng.random_range(1..=3) {
        let mut pick = Vec::new();
        while pick.len() < degree {
            let g = gens[rng.random_range(0..gens.len())].clone();
            if !pick.contains(&g) {
                pick.push(g);
            }
        }
        let coeff = random_smooth(rng, &vars, 2);
        acc = acc.add(&DifferentialForm::term(pick, coeff));
    }
    acc
}

/// A first-order Lagrangian in which the first field is cyclic: it depends
/// on the jets of every field but only on the values of the others.
pub struct InvariantModel {
    pub model: FieldModel,
    pub action: CyclicAction,
    pub cyclic: String,
}

pub fn random_invariant_model(rng: &mut ChaCha8Rng) -> InvariantModel {
    let m = rng.random_range(1..=3);
    let n = rng.random_range(1..=3);
    let c = chart(m, n);
    let mut vars: Vec<Symbol> = c.coords().iter().map(Symbol::coord).collect();
    vars.extend(c.fields().iter().skip(1).map(|f| Symbol::Field(f.clone())));
    vars.extend(first_jets(&c, &FIELDS[..n]));
    let cyc_jets = first_jets(&c, &FIELDS[..1]);
    // make sure the cyclic field actually enters
    let k = rng.random_range(0..cyc_jets.len());
    let lead = small_rational(rng) * Expr::symbol(cyc_jets[k].clone()).pow_u(2);
    let terms = rng.random_range(2..=5);
    let l = lead + random_poly(rng, &vars, terms, 3);
    let model = FieldModel::new(c, l).unwrap();
    let action = CyclicAction::new(&model, &[FIELDS[0]]).unwrap();
    InvariantModel {
        model,
        action,
        cyclic: FIELDS[0].to_string(),
    }
}

/// An arbitrary first-order model (no symmetry).
pub fn random_model(rng: &mut ChaCha8Rng) -> FieldModel {
    let c = random_chart(rng);
    let names: Vec<&str> = c.fields().iter().map(|f| &**f).collect();
    let mut vars = base_symbols(&c);
    vars.extend(first_jets(&c, &names));
    let terms = rng.random_range(2..=5);
    let l = random_poly(rng, &vars, terms, 3);
    FieldModel::new(c, l).unwrap()
}
