//! Kernel properties as seed-driven checks, shared by the proptest suites
//! and the acceptance runner.

use rand::Rng;

use routh::expr::{parse_expr, Expr, Symbol};
use routh::model::{euler_lagrange, legendre_multipliers};
use routh::routh::{gyroscopic_force, routhian, ConnectionData};
use routh::symmetry::MomentumValue;

use super::*;

pub type Check = fn(u64) -> Result<(), String>;

fn fail(what: &str, detail: impl std::fmt::Display) -> Result<(), String> {
    Err(format!("{what}: {detail}"))
}

pub fn dd_zero(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let c = random_chart(&mut r);
    let deg = r.random_range(0..=2);
    let f = random_form(&mut r, &c, deg);
    let dd = f.exterior_derivative().exterior_derivative();
    if dd.is_zero() {
        Ok(())
    } else {
        fail("d(d f) != 0", format!("f = {f}, ddf = {dd}"))
    }
}

pub fn wedge_graded(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let c = random_chart(&mut r);
    let (p, q) = (r.random_range(0..=2), r.random_range(0..=2));
    let a = random_form(&mut r, &c, p);
    let b = random_form(&mut r, &c, q);
    let lhs = a.wedge(&b);
    let rhs = b.wedge(&a).scale(&Expr::int(if p * q % 2 == 0 { 1 } else { -1 }));
    if lhs == rhs {
        Ok(())
    } else {
        fail("a∧b != (-1)^pq b∧a", format!("a = {a}, b = {b}"))
    }
}

pub fn antiderivation(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let c = random_chart(&mut r);
    let p = r.random_range(0..=2);
    let a = random_form(&mut r, &c, p);
    let q = r.random_range(0..=1);
    let b = random_form(&mut r, &c, q);
    let lhs = a.wedge(&b).exterior_derivative();
    let sign = Expr::int(if p % 2 == 0 { 1 } else { -1 });
    let rhs = a
        .exterior_derivative()
        .wedge(&b)
        .add(&a.wedge(&b.exterior_derivative()).scale(&sign));
    if lhs == rhs {
        Ok(())
    } else {
        fail("Leibniz rule for d", format!("a = {a}, b = {b}"))
    }
}

pub fn total_derivatives_commute(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let c = random_chart(&mut r);
    let e = random_smooth(&mut r, &base_symbols(&c), 3);
    for i in c.coords() {
        for j in c.coords() {
            let ij = e
                .total_derivative(i)
                .and_then(|d| d.total_derivative(j))
                .map_err(|x| x.to_string())?;
            let ji = e
                .total_derivative(j)
                .and_then(|d| d.total_derivative(i))
                .map_err(|x| x.to_string())?;
            if ij != ji {
                return fail(
                    "D_i D_j != D_j D_i",
                    format!("e = {e}, i = {}, j = {}", i.name(), j.name()),
                );
            }
        }
    }
    Ok(())
}

pub fn null_divergence_invariance(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let m = random_model(&mut r);
    let vars = base_symbols(m.chart());
    let f: Vec<Expr> = m.coords().iter().map(|_| random_smooth(&mut r, &vars, 2)).collect();
    let shifted = m.with_null_divergence(&f).map_err(|e| e.to_string())?;
    let a = euler_lagrange(&m).map_err(|e| e.to_string())?;
    let b = euler_lagrange(&shifted).map_err(|e| e.to_string())?;
    if a == b {
        Ok(())
    } else {
        fail("EL changed by a null divergence", format!("L = {}", m.lagrangian()))
    }
}

pub fn noether_identity(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let im = random_invariant_model(&mut r);
    let el = euler_lagrange(&im.model).map_err(|e| e.to_string())?;
    let p = legendre_multipliers(&im.model);
    let div = Expr::total_divergence(p.for_field(&im.cyclic), im.model.coords()).map_err(|e| e.to_string())?;
    match el.get(&im.cyclic) {
        Some(e) if *e == div => Ok(()),
        _ => fail("cyclic EL != Σ D_i p^i", format!("L = {}", im.model.lagrangian())),
    }
}

fn random_connection(r: &mut ChaCha8Rng, im: &InvariantModel) -> ConnectionData {
    let mut conn = ConnectionData::flat(&im.model, &im.action);
    let c = im.model.chart();
    let mut vars: Vec<Symbol> = c.coords().iter().map(Symbol::coord).collect();
    let shape: Vec<String> = c.fields().iter().skip(1).map(|f| f.to_string()).collect();
    vars.extend(shape.iter().map(|f| Symbol::field(f.as_str())));
    let mut keys: Vec<String> = c.coords().iter().map(|x| x.name().to_string()).collect();
    keys.extend(shape);
    for k in keys {
        if r.random_bool(0.7) {
            conn.set(&im.cyclic, &k, random_poly(r, &vars, 2, 2))
                .expect("basic, invariant coefficient");
        }
    }
    conn
}

pub fn routhian_at_zero_momentum(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let im = random_invariant_model(&mut r);
    let conn = random_connection(&mut r, &im);
    let mu = MomentumValue::zero(im.model.coords(), &im.action);
    let rr = routhian(&im.model, &im.action, &conn, &mu).map_err(|e| e.to_string())?;
    if &rr == im.model.lagrangian() {
        Ok(())
    } else {
        fail("R_0 != L", format!("L = {}, R_0 = {rr}", im.model.lagrangian()))
    }
}

/// A closed basic momentum: constants plus, for `m ≥ 2`, the divergence-free
/// pair `(∂_2 g, −∂_1 g)` of a random `g(x)`.
fn random_closed_momentum(r: &mut ChaCha8Rng, im: &InvariantModel) -> MomentumValue {
    let coords = im.model.coords();
    let mut comps: Vec<Expr> = coords.iter().map(|_| small_rational(r)).collect();
    if coords.len() >= 2 {
        let vars: Vec<Symbol> = coords.iter().map(Symbol::coord).collect();
        let g = random_smooth(r, &vars, 2);
        comps[0] = &comps[0] + &g.diff_partial(&vars[1]);
        comps[1] = &comps[1] - &g.diff_partial(&vars[0]);
    }
    let mut mu = MomentumValue::zero(coords, &im.action);
    mu.set_eta(&im.cyclic, comps).expect("basic components");
    mu
}

pub fn flat_gyroscopic_force_vanishes(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let im = random_invariant_model(&mut r);
    let conn = ConnectionData::flat(&im.model, &im.action);
    let mu = random_closed_momentum(&mut r, &im);
    let g = gyroscopic_force(&im.action, &conn, &mu).map_err(|e| e.to_string())?;
    if g.form.is_zero() && g.force.is_zero() {
        Ok(())
    } else {
        fail("flat connection gave a force", format!("{mu}, dω = {}", g.form))
    }
}

pub fn print_parse_round_trip(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let c = random_chart(&mut r);
    let names: Vec<&str> = c.fields().iter().map(|f| &**f).collect();
    let mut vars = base_symbols(&c);
    vars.extend(first_jets(&c, &names));
    let e = random_smooth(&mut r, &vars, 4);
    let back = parse_expr(&e.to_string(), &c).map_err(|x| format!("`{e}` does not parse: {x}"))?;
    if back == e {
        Ok(())
    } else {
        fail("print/parse round trip", format!("{e} -> {back}"))
    }
}
