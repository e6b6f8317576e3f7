//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] holds the Taylor coefficients of a smooth function of `n`
//! variables around an expansion point, up to a total degree. Arithmetic and
//! the elementary functions propagate the coefficients exactly (up to
//! rounding), so a chart written once over jets yields all of its partial
//! derivatives to the requested order.
//!
//! Coefficients are stored in graded order: every monomial of degree `d`
//! comes before every monomial of degree `d + 1`, so a jet that is only
//! valid to order `k < K` simply uses a prefix of the coefficient vector.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

use once_cell::race::OnceBox;

/// Highest derivative order supported by the engine.
pub const MAX_ORDER: usize = 4;

/// Monomial tables shared by every jet of a given (variables, order) pair.
pub struct JetSpace {
    nvars: usize,
    order: usize,
    exponents: Vec<Vec<u8>>,
    /// `prefix[d]` = number of monomials of degree `< d`.
    prefix: Vec<usize>,
    /// (lhs, rhs, out) index triples, grouped by the degree of `out`.
    products: Vec<(u32, u32, u32)>,
    /// `product_end[d]` = number of triples whose output degree is `<= d`.
    product_end: Vec<usize>,
    /// `raise[i][m]` = index of `m + e_i`, when that monomial is in range.
    raise: Vec<Vec<Option<u32>>>,
}

impl fmt::Debug for JetSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JetSpace")
            .field("nvars", &self.nvars)
            .field("order", &self.order)
            .finish()
    }
}

fn monomials_of_degree(nvars: usize, degree: usize) -> Vec<Vec<u8>> {
    if nvars == 0 {
        return if degree == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in (0..=degree).rev() {
        for mut tail in monomials_of_degree(nvars - 1, degree - first) {
            let mut m = Vec::with_capacity(nvars);
            m.push(first as u8);
            m.append(&mut tail);
            out.push(m);
        }
    }
    out
}

impl JetSpace {
    pub fn new(nvars: usize, order: usize) -> Arc<Self> {
        let mut exponents = Vec::new();
        let mut prefix = Vec::with_capacity(order + 2);
        for d in 0..=order {
            prefix.push(exponents.len());
            exponents.extend(monomials_of_degree(nvars, d));
        }
        prefix.push(exponents.len());

        let table: BTreeMap<Vec<u8>, usize> =
            exponents.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let lookup = |m: &[u8]| -> Option<usize> { table.get(m).copied() };

        let mut products = Vec::new();
        let mut product_end = Vec::with_capacity(order + 1);
        for d in 0..=order {
            for k in prefix[d]..prefix[d + 1] {
                let target = &exponents[k];
                for i in 0..=k {
                    let a = &exponents[i];
                    if a.iter().zip(target).all(|(x, y)| x <= y) {
                        let b: Vec<u8> = target.iter().zip(a).map(|(t, x)| t - x).collect();
                        let j = lookup(&b).expect("complementary monomial");
                        products.push((i as u32, j as u32, k as u32));
                    }
                }
            }
            product_end.push(products.len());
        }

        let raise = (0..nvars)
            .map(|v| {
                exponents
                    .iter()
                    .map(|m| {
                        let deg: usize = m.iter().map(|&e| e as usize).sum();
                        if deg >= order {
                            return None;
                        }
                        let mut up = m.clone();
                        up[v] += 1;
                        lookup(&up).map(|x| x as u32)
                    })
                    .collect()
            })
            .collect();

        Arc::new(Self {
            nvars,
            order,
            exponents,
            prefix,
            products,
            product_end,
            raise,
        })
    }

    /// Process-wide shared space; falls back to a fresh one for very wide jets.
    pub fn shared(nvars: usize, order: usize) -> Arc<Self> {
        const MAX_SHARED_VARS: usize = 8;
        static TABLE: [[OnceBox<Arc<JetSpace>>; MAX_ORDER + 1]; MAX_SHARED_VARS + 1] =
            [const { [const { OnceBox::new() }; MAX_ORDER + 1] }; MAX_SHARED_VARS + 1];
        if nvars > MAX_SHARED_VARS || order > MAX_ORDER {
            return Self::new(nvars, order);
        }
        Arc::clone(TABLE[nvars][order].get_or_init(|| Box::new(Self::new(nvars, order))))
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of coefficients of a jet valid to order `k`.
    pub fn len(&self, k: usize) -> usize {
        self.prefix[k + 1]
    }

    pub fn exponents(&self, index: usize) -> &[u8] {
        &self.exponents[index]
    }

    /// Index of the monomial with the given exponents, if it is in range.
    pub fn index_of(&self, exponents: &[u8]) -> Option<usize> {
        if exponents.len() != self.nvars {
            return None;
        }
        let deg: usize = exponents.iter().map(|&e| e as usize).sum();
        if deg > self.order {
            return None;
        }
        (self.prefix[deg]..self.prefix[deg + 1]).find(|&i| self.exponents[i] == exponents)
    }

    pub fn constant(self: &Arc<Self>, value: f64) -> Jet {
        let mut c = vec![0.0; self.len(self.order)];
        c[0] = value;
        Jet {
            space: Arc::clone(self),
            ord: self.order,
            c,
        }
    }

    /// The coordinate function `x_i` expanded around `x_i = at`.
    pub fn variable(self: &Arc<Self>, i: usize, at: f64) -> Jet {
        assert!(i < self.nvars, "variable index out of range");
        let mut jet = self.constant(at);
        if self.order >= 1 {
            // degree-one monomials are ordered x_0, x_1, ...
            jet.c[1 + i] = 1.0;
        }
        jet
    }

    /// Identity jets for every coordinate around `point`.
    pub fn variables(self: &Arc<Self>, point: &[f64]) -> Vec<Jet> {
        assert_eq!(point.len(), self.nvars);
        point.iter().enumerate().map(|(i, &p)| self.variable(i, p)).collect()
    }
}

/// A truncated Taylor expansion in several variables.
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    ord: usize,
    c: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet").field("ord", &self.ord).field("c", &self.c).finish()
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, x| acc * x as f64)
}

impl Jet {
    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    /// Order up to which the coefficients are exact.
    pub fn order(&self) -> usize {
        self.ord
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }

    /// A constant with the same space and order as `self`.
    pub fn constant_like(&self, value: f64) -> Jet {
        let mut c = vec![0.0; self.c.len()];
        c[0] = value;
        Jet {
            space: Arc::clone(&self.space),
            ord: self.ord,
            c,
        }
    }

    /// Drop everything above order `k`.
    pub fn truncate(&self, k: usize) -> Jet {
        let k = k.min(self.ord);
        Jet {
            space: Arc::clone(&self.space),
            ord: k,
            c: self.c[..self.space.len(k)].to_vec(),
        }
    }

    /// Partial derivative `∂^α f` at the expansion point for the multi-index `α`.
    pub fn partial(&self, multi_index: &[u8]) -> Option<f64> {
        let deg: usize = multi_index.iter().map(|&e| e as usize).sum();
        if deg > self.ord {
            return None;
        }
        let idx = self.space.index_of(multi_index)?;
        let scale: f64 = multi_index.iter().map(|&e| factorial(e as usize)).product();
        Some(self.c[idx] * scale)
    }

    /// First partial derivative value `∂f/∂x_i` at the expansion point.
    pub fn d1(&self, i: usize) -> f64 {
        if self.ord == 0 {
            return f64::NAN;
        }
        self.c[1 + i]
    }

    /// The jet of `∂f/∂x_i`, valid to one order less.
    pub fn derivative(&self, i: usize) -> Jet {
        assert!(self.ord >= 1, "cannot differentiate an order-0 jet");
        let ord = self.ord - 1;
        let len = self.space.len(ord);
        let raise = &self.space.raise[i];
        let mut c = vec![0.0; len];
        for (m, slot) in c.iter_mut().enumerate() {
            if let Some(up) = raise[m] {
                let up = up as usize;
                *slot = self.c[up] * self.space.exponents[up][i] as f64;
            }
        }
        Jet {
            space: Arc::clone(&self.space),
            ord,
            c,
        }
    }

    fn check_space(&self, other: &Jet) {
        debug_assert!(
            Arc::ptr_eq(&self.space, &other.space)
                || (self.space.nvars == other.space.nvars && self.space.order == other.space.order),
            "jets from different spaces"
        );
    }

    fn zip(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        self.check_space(other);
        let ord = self.ord.min(other.ord);
        let len = self.space.len(ord);
        let c = (0..len).map(|i| f(self.c[i], other.c[i])).collect();
        Jet {
            space: Arc::clone(&self.space),
            ord,
            c,
        }
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Jet {
        Jet {
            space: Arc::clone(&self.space),
            ord: self.ord,
            c: self.c.iter().map(|&x| f(x)).collect(),
        }
    }

    fn mul_jet(&self, other: &Jet) -> Jet {
        self.check_space(other);
        let ord = self.ord.min(other.ord);
        let len = self.space.len(ord);
        let mut c = vec![0.0; len];
        let end = self.space.product_end[ord];
        for &(i, j, k) in &self.space.products[..end] {
            c[k as usize] += self.c[i as usize] * other.c[j as usize];
        }
        Jet {
            space: Arc::clone(&self.space),
            ord,
            c,
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        self.map(|x| x * s)
    }

    /// `Σ_k derivs[k]/k! · (self − self(0))^k`, i.e. `f(self)` given the
    /// derivatives of `f` at the constant term.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        let mut d = self.clone();
        d.c[0] = 0.0;
        let mut out = self.constant_like(derivs[0]);
        let mut power = self.constant_like(1.0);
        for (k, &dk) in derivs.iter().enumerate().take(self.ord + 1).skip(1) {
            power = power.mul_jet(&d);
            if dk != 0.0 {
                let w = dk / factorial(k);
                for (o, p) in out.c.iter_mut().zip(&power.c) {
                    *o += w * p;
                }
            }
        }
        out
    }

    pub fn recip(&self) -> Jet {
        let a = self.c[0];
        let mut derivs = [0.0; MAX_ORDER + 1];
        // d^k/da^k (1/a) = (-1)^k k! / a^(k+1)
        let mut term = 1.0 / a;
        for (k, slot) in derivs.iter_mut().enumerate() {
            *slot = term;
            term *= -((k + 1) as f64) / a;
        }
        self.compose(&derivs[..=self.ord.min(MAX_ORDER)])
    }

    pub fn powf(&self, p: f64) -> Jet {
        let a = self.c[0];
        let mut derivs = [0.0; MAX_ORDER + 1];
        let mut coef = 1.0;
        for (k, slot) in derivs.iter_mut().enumerate() {
            *slot = coef * libm::pow(a, p - k as f64);
            coef *= p - k as f64;
        }
        self.compose(&derivs[..=self.ord.min(MAX_ORDER)])
    }

    /// Integer power by repeated multiplication (valid for negative bases).
    pub fn powi(&self, e: i32) -> Jet {
        if e < 0 {
            return self.powi(-e).recip();
        }
        let mut out = self.constant_like(1.0);
        let mut base = self.clone();
        let mut e = e as u32;
        while e > 0 {
            if e & 1 == 1 {
                out = out.mul_jet(&base);
            }
            base = base.mul_jet(&base);
            e >>= 1;
        }
        out
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn exp(&self) -> Jet {
        let e = libm::exp(self.c[0]);
        self.compose(&[e; MAX_ORDER + 1][..=self.ord.min(MAX_ORDER)])
    }

    pub fn ln(&self) -> Jet {
        let a = self.c[0];
        let mut derivs = [0.0; MAX_ORDER + 1];
        derivs[0] = libm::log(a);
        let mut term = 1.0 / a;
        for (k, slot) in derivs.iter_mut().enumerate().skip(1) {
            *slot = term;
            term *= -(k as f64) / a;
        }
        self.compose(&derivs[..=self.ord.min(MAX_ORDER)])
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = (libm::sin(self.c[0]), libm::cos(self.c[0]));
        self.compose(&[s, c, -s, -c, s][..=self.ord.min(MAX_ORDER)])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = (libm::sin(self.c[0]), libm::cos(self.c[0]));
        self.compose(&[c, -s, -c, s, c][..=self.ord.min(MAX_ORDER)])
    }

    pub fn cosh(&self) -> Jet {
        let (s, c) = (libm::sinh(self.c[0]), libm::cosh(self.c[0]));
        self.compose(&[c, s, c, s, c][..=self.ord.min(MAX_ORDER)])
    }

    pub fn sinh(&self) -> Jet {
        let (s, c) = (libm::sinh(self.c[0]), libm::cosh(self.c[0]));
        self.compose(&[s, c, s, c, s][..=self.ord.min(MAX_ORDER)])
    }

    /// General power `self^exponent`; integer constant exponents keep negative
    /// bases valid.
    pub fn pow(&self, exponent: &Jet) -> Jet {
        let is_const = exponent.c.iter().skip(1).all(|&x| x == 0.0);
        let e = exponent.c[0];
        if is_const {
            if libm::fabs(e - libm::round(e)) == 0.0 && libm::fabs(e) <= 64.0 {
                return self.powi(e as i32);
            }
            return self.powf(e);
        }
        (exponent * &self.ln()).exp()
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                $body(self, rhs)
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                $body(&self, &rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                $body(&self, rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                $body(self, &rhs)
            }
        }
    };
}

forward_binop!(Add, add, |a: &Jet, b: &Jet| a.zip(b, |x, y| x + y));
forward_binop!(Sub, sub, |a: &Jet, b: &Jet| a.zip(b, |x, y| x - y));
forward_binop!(Mul, mul, |a: &Jet, b: &Jet| a.mul_jet(b));
forward_binop!(Div, div, |a: &Jet, b: &Jet| a.mul_jet(&b.recip()));

macro_rules! scalar_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<f64> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                $body(self, rhs)
            }
        }
        impl $trait<f64> for Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                $body(&self, rhs)
            }
        }
    };
}

scalar_binop!(Add, add, |a: &Jet, s: f64| {
    let mut out = a.clone();
    out.c[0] += s;
    out
});
scalar_binop!(Sub, sub, |a: &Jet, s: f64| {
    let mut out = a.clone();
    out.c[0] -= s;
    out
});
scalar_binop!(Mul, mul, |a: &Jet, s: f64| a.scale(s));
scalar_binop!(Div, div, |a: &Jet, s: f64| a.scale(1.0 / s));

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Sum of products `Σ a_i b_i`.
pub fn dot(a: &[Jet], b: &[Jet]) -> Jet {
    let mut acc = a[0].mul_jet(&b[0]);
    for (x, y) in a.iter().zip(b).skip(1) {
        acc = &acc + &x.mul_jet(y);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_counts_match_binomials() {
        let s = JetSpace::new(3, 4);
        assert_eq!(s.len(4), 35);
        assert_eq!(s.len(2), 10);
        let s = JetSpace::new(5, 4);
        assert_eq!(s.len(4), 126);
        assert_eq!(s.products.len(), 1001);
    }

    #[test]
    fn polynomial_partials() {
        let s = JetSpace::new(2, 4);
        let v = s.variables(&[1.0, 2.0]);
        // f = x^3 y^2
        let f = v[0].powi(3) * v[1].powi(2);
        assert_eq!(f.value(), 4.0);
        assert!((f.partial(&[1, 0]).unwrap() - 12.0).abs() < 1e-12);
        assert!((f.partial(&[2, 1]).unwrap() - 24.0).abs() < 1e-12);
        assert!((f.partial(&[3, 1]).unwrap() - 24.0).abs() < 1e-12);
        assert!((f.partial(&[1, 2]).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_of_jet_matches_partials() {
        let s = JetSpace::new(2, 4);
        let v = s.variables(&[0.3, -0.7]);
        let f = (v[0].sin() * v[1].exp()) / (&v[0] * &v[0] + 2.0);
        let fx = f.derivative(0);
        assert_eq!(fx.order(), 3);
        for m in [[0u8, 0], [1, 0], [0, 2], [2, 1], [1, 2]] {
            let mut up = m;
            up[0] += 1;
            assert!((fx.partial(&m).unwrap() - f.partial(&up).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn elementary_functions_at_zero() {
        let s = JetSpace::new(1, 4);
        let x = s.variable(0, 0.0);
        let e = x.exp();
        assert!((e.coefficients()[4] - 1.0 / 24.0).abs() < 1e-15);
        let l = (x.clone() + 1.0).ln();
        assert!((l.coefficients()[4] + 0.25).abs() < 1e-15);
        let c = x.cos();
        assert!((c.coefficients()[2] + 0.5).abs() < 1e-15);
        let r = (x.clone() + 1.0).sqrt();
        assert!((r.coefficients()[2] + 0.125).abs() < 1e-15);
    }

    #[test]
    fn negative_base_integer_power() {
        let s = JetSpace::new(1, 3);
        let x = s.variable(0, -2.0);
        let f = x.pow(&x.constant_like(3.0));
        assert_eq!(f.value(), -8.0);
        assert!((f.partial(&[1]).unwrap() - 12.0).abs() < 1e-12);
    }
}
