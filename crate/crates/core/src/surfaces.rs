//! Closed-form hypersurface charts used as references throughout the kernel.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::chart::{Chart, DomainBox};
use crate::error::Result;
use crate::jet::Jet;

/// Inset applied to angular coordinates to stay clear of coordinate poles.
pub const POLE_MARGIN: f64 = 1e-2;

/// Unit-sphere point in hyperspherical coordinates `(φ₁, …, φ_k)`:
/// `u₁ = cos φ₁`, `u₂ = sin φ₁ cos φ₂`, …, `u_{k+1} = sin φ₁ ⋯ sin φ_k`.
pub fn hypersphere(angles: &[Jet]) -> Vec<Jet> {
    let k = angles.len();
    let mut out = Vec::with_capacity(k + 1);
    let mut sin_prod: Option<Jet> = None;
    for (j, a) in angles.iter().enumerate() {
        let c = a.cos();
        let term = match &sin_prod {
            Some(s) => s * &c,
            None => c,
        };
        out.push(term);
        let s = a.sin();
        sin_prod = Some(match sin_prod {
            Some(p) => &p * &s,
            None => s,
        });
        if j == k - 1 {
            out.push(sin_prod.clone().unwrap());
        }
    }
    out
}

/// Inverse of [`hypersphere`] on the principal branch.
pub fn hypersphere_angles(u: &[f64]) -> Vec<f64> {
    let k = u.len() - 1;
    let mut angles = Vec::with_capacity(k);
    for j in 0..k {
        if j == k - 1 {
            angles.push(libm::atan2(u[k], u[k - 1]));
        } else {
            let tail: f64 = u[j + 1..].iter().map(|x| x * x).sum();
            angles.push(libm::atan2(libm::sqrt(tail), u[j]));
        }
    }
    angles
}

/// Domain box of [`hypersphere`] with `k` angles, inset from the poles.
pub fn hypersphere_box(k: usize, margin: f64) -> DomainBox {
    let mut lo = vec![margin; k];
    let mut hi = vec![PI - margin; k];
    lo[k - 1] = -PI + margin;
    hi[k - 1] = PI - margin;
    DomainBox::new(lo, hi)
}

/// The flat chart `x ↦ (x, 0)` of a hyperplane in E^{n+1}.
#[derive(Debug, Clone)]
pub struct Plane {
    n: usize,
    domain: DomainBox,
}

impl Plane {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            domain: DomainBox::cube(n, -2.0, 2.0),
        }
    }
}

impl Chart for Plane {
    fn dim_domain(&self) -> usize {
        self.n
    }
    fn dim_ambient(&self) -> usize {
        self.n + 1
    }
    fn domain(&self) -> &DomainBox {
        &self.domain
    }
    fn eval(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        let mut out: Vec<Jet> = x.to_vec();
        out.push(x[0].constant_like(0.0));
        Ok(out)
    }
    fn normal_hint(&self, _p: &[f64]) -> Option<Vec<f64>> {
        let mut v = vec![0.0; self.n + 1];
        v[self.n] = 1.0;
        Some(v)
    }
    fn convention(&self) -> &'static str {
        "upward (+e_{n+1})"
    }
    fn label(&self) -> String {
        format!("plane:n={}", self.n)
    }
}

/// Round sphere `Sⁿ(r) ⊂ E^{n+1}` centred at the origin, inward normal.
#[derive(Debug, Clone)]
pub struct RoundSphere {
    pub n: usize,
    pub r: f64,
    domain: DomainBox,
}

impl RoundSphere {
    pub fn new(n: usize, r: f64) -> Self {
        Self {
            n,
            r,
            domain: hypersphere_box(n, POLE_MARGIN),
        }
    }
}

impl Chart for RoundSphere {
    fn dim_domain(&self) -> usize {
        self.n
    }
    fn dim_ambient(&self) -> usize {
        self.n + 1
    }
    fn domain(&self) -> &DomainBox {
        &self.domain
    }
    fn eval(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        Ok(hypersphere(x).into_iter().map(|c| c * self.r).collect())
    }
    fn normal_hint(&self, p: &[f64]) -> Option<Vec<f64>> {
        let pos = crate::chart::eval_point(self, p).ok()?;
        Some(pos.into_iter().map(|x| -x).collect())
    }
    fn convention(&self) -> &'static str {
        "inward"
    }
    fn label(&self) -> String {
        format!("sphere-chart:n={},r={}", self.n, self.r)
    }
}

/// Cylinder `S^p(r) × R^q ⊂ E^{p+q+1}` with the inward normal.
#[derive(Debug, Clone)]
pub struct RoundCylinder {
    pub p: usize,
    pub q: usize,
    pub r: f64,
    domain: DomainBox,
}

impl RoundCylinder {
    pub fn new(p: usize, q: usize, r: f64) -> Self {
        let domain = hypersphere_box(p, POLE_MARGIN).product(&DomainBox::cube(q, -1.0, 1.0));
        Self { p, q, r, domain }
    }
}

impl Chart for RoundCylinder {
    fn dim_domain(&self) -> usize {
        self.p + self.q
    }
    fn dim_ambient(&self) -> usize {
        self.p + self.q + 1
    }
    fn domain(&self) -> &DomainBox {
        &self.domain
    }
    fn eval(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        let mut out: Vec<Jet> = hypersphere(&x[..self.p]).into_iter().map(|c| c * self.r).collect();
        out.extend_from_slice(&x[self.p..]);
        Ok(out)
    }
    fn normal_hint(&self, p: &[f64]) -> Option<Vec<f64>> {
        let pos = crate::chart::eval_point(self, p).ok()?;
        let mut v: Vec<f64> = pos[..=self.p].iter().map(|x| -x).collect();
        v.extend(core::iter::repeat(0.0).take(self.q));
        Some(v)
    }
    fn convention(&self) -> &'static str {
        "inward"
    }
    fn label(&self) -> String {
        format!("cylinder-chart:p={},q={},r={}", self.p, self.q, self.r)
    }
}

/// Catenoid `(c cosh(v/c) cos u, c cosh(v/c) sin u, v)` in E³.
#[derive(Debug, Clone)]
pub struct Catenoid {
    pub c: f64,
    domain: DomainBox,
}

impl Catenoid {
    pub fn new(c: f64) -> Self {
        Self {
            c,
            domain: DomainBox::new(vec![-PI + POLE_MARGIN, -1.5], vec![PI - POLE_MARGIN, 1.5]),
        }
    }
}

impl Chart for Catenoid {
    fn dim_domain(&self) -> usize {
        2
    }
    fn dim_ambient(&self) -> usize {
        3
    }
    fn domain(&self) -> &DomainBox {
        &self.domain
    }
    fn eval(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        let rho = (&x[1] / self.c).cosh() * self.c;
        Ok(vec![&rho * &x[0].cos(), &rho * &x[0].sin(), x[1].clone()])
    }
    fn label(&self) -> String {
        format!("catenoid-chart:c={}", self.c)
    }
}

/// Torus of revolution with tube radius `r` around a circle of radius `big_r`.
#[derive(Debug, Clone)]
pub struct Torus {
    pub big_r: f64,
    pub r: f64,
    domain: DomainBox,
}

impl Torus {
    pub fn new(big_r: f64, r: f64) -> Self {
        Self {
            big_r,
            r,
            domain: DomainBox::cube(2, -PI + POLE_MARGIN, PI - POLE_MARGIN),
        }
    }
}

impl Chart for Torus {
    fn dim_domain(&self) -> usize {
        2
    }
    fn dim_ambient(&self) -> usize {
        3
    }
    fn domain(&self) -> &DomainBox {
        &self.domain
    }
    fn eval(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        let rho = x[1].cos() * self.r + self.big_r;
        Ok(vec![&rho * &x[0].cos(), &rho * &x[0].sin(), x[1].sin() * self.r])
    }
    fn label(&self) -> String {
        format!("torus-chart:R={},r={}", self.big_r, self.r)
    }
}
