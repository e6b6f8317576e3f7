//! Isoparametric codimension-2 seeds `U₀ ⊂ E^{n+1}` and related charts.
//!
//! A seed carries its position `Y`, an orthonormal normal frame `(N₀, eₙ)` and
//! the constant principal curvatures `λ₀ᵢ = II^{N₀}(eᵢ,eᵢ)`,
//! `μ₀ᵢ = II^{eₙ}(eᵢ,eᵢ)` in coordinate order. With these signs
//! `D_{eᵢ}N₀ = −λ₀ᵢeᵢ` and `D_{eᵢ}eₙ = −μ₀ᵢeᵢ`.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::chart::{check_point, Chart, DomainBox};
use crate::error::{Error, Result};
use crate::jet::{dot, Jet, JetSpace};
use crate::surfaces::{hypersphere, hypersphere_box, POLE_MARGIN};

#[derive(Debug, Clone, PartialEq)]
pub enum SeedKind {
    /// `S^{n−1}(r)` in the hyperplane `Eⁿ`
    Sphere { r: f64 },
    /// `S^p(r1) × S^q(r2) ⊂ Sⁿ(√(r1²+r2²))`
    Product { p: usize, q: usize, r1: f64, r2: f64 },
    /// `S^p(r) × R^q`
    Cylinder { p: usize, q: usize, r: f64 },
    /// flat `E^{n−1}`; every curvature vanishes (minimal control)
    Hyperplane,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsoparSeed {
    pub n: usize,
    pub kind: SeedKind,
    pub lambda0: Vec<f64>,
    pub mu0: Vec<f64>,
    pub symmetry_tag: String,
    domain: DomainBox,
}

/// Jets of `Y`, `N₀` and `eₙ` at a seed point.
#[derive(Debug, Clone)]
pub struct SeedFrame {
    pub y: Vec<Jet>,
    pub n0: Vec<Jet>,
    pub en: Vec<Jet>,
}

/// `S^{n−1}(r) ⊂ Eⁿ ⊂ E^{n+1}`, `N₀` the outward radial field, `eₙ = e_{n+1}`.
pub fn sphere_seed(n: usize, r: f64) -> Result<IsoparSeed> {
    if n < 2 || !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("sphere seed needs n >= 2 and r > 0 (n={n}, r={r})")));
    }
    Ok(IsoparSeed {
        n,
        kind: SeedKind::Sphere { r },
        lambda0: vec![-1.0 / r; n - 1],
        mu0: vec![0.0; n - 1],
        symmetry_tag: format!("O({n})"),
        domain: hypersphere_box(n - 1, POLE_MARGIN),
    })
}

/// `S^p(r1) × S^q(r2)` with `N₀ = Y/R`, `R = √(r1²+r2²)`, and
/// `eₙ = (r2ω₁, −r1ω₂)/R`.
pub fn product_sphere_seed(p: usize, q: usize, r1: f64, r2: f64) -> Result<IsoparSeed> {
    if p < 1 || q < 1 || !(r1 > 0.0) || !(r2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "product seed needs p, q >= 1 and positive radii (p={p}, q={q}, r1={r1}, r2={r2})"
        )));
    }
    let big_r = libm::sqrt(r1 * r1 + r2 * r2);
    let mut mu0 = vec![-r2 / (r1 * big_r); p];
    mu0.extend(core::iter::repeat(r1 / (r2 * big_r)).take(q));
    Ok(IsoparSeed {
        n: p + q + 1,
        kind: SeedKind::Product { p, q, r1, r2 },
        lambda0: vec![-1.0 / big_r; p + q],
        mu0,
        symmetry_tag: format!("O({})xO({})", p + 1, q + 1),
        domain: hypersphere_box(p, POLE_MARGIN).product(&hypersphere_box(q, POLE_MARGIN)),
    })
}

/// `S^p(r) × R^q ⊂ E^{p+1} × R^q × R`, `N₀ = (ω, 0, 0)`, `eₙ` the last axis.
pub fn cylinder_seed(p: usize, q: usize, r: f64) -> Result<IsoparSeed> {
    if p < 1 || !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("cylinder seed needs p >= 1 and r > 0 (p={p}, r={r})")));
    }
    let mut lambda0 = vec![-1.0 / r; p];
    lambda0.extend(core::iter::repeat(0.0).take(q));
    let domain = hypersphere_box(p, POLE_MARGIN).product(&DomainBox::cube(q, -1.0, 1.0));
    let symmetry_tag = if q == 0 {
        format!("O({})", p + 1)
    } else {
        format!("O({})xE({q})", p + 1)
    };
    Ok(IsoparSeed {
        n: p + q + 1,
        kind: SeedKind::Cylinder { p, q, r },
        lambda0,
        mu0: vec![0.0; p + q],
        symmetry_tag,
        domain,
    })
}

/// Flat `E^{n−1} ⊂ E^{n+1}`. Its curvature sum is zero, so evolving it is rejected.
pub fn hyperplane_seed(n: usize) -> Result<IsoparSeed> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("hyperplane seed needs n >= 2 (n={n})")));
    }
    Ok(IsoparSeed {
        n,
        kind: SeedKind::Hyperplane,
        lambda0: vec![0.0; n - 1],
        mu0: vec![0.0; n - 1],
        symmetry_tag: format!("E({})", n - 1),
        domain: DomainBox::cube(n - 1, -1.0, 1.0),
    })
}

impl IsoparSeed {
    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn dim_seed(&self) -> usize {
        self.n - 1
    }

    pub fn dim_ambient(&self) -> usize {
        self.n + 1
    }

    /// Canonical spec string, e.g. `sphere:n=3,r=2`.
    pub fn spec(&self) -> String {
        match &self.kind {
            SeedKind::Sphere { r } => format!("sphere:n={},r={}", self.n, r),
            SeedKind::Product { p, q, r1, r2 } => format!("product:p={p},q={q},r1={r1},r2={r2}"),
            SeedKind::Cylinder { p, q, r } => format!("cylinder:p={p},q={q},r={r}"),
            SeedKind::Hyperplane => format!("hyperplane:n={}", self.n),
        }
    }

    pub fn lambda_sum(&self) -> f64 {
        self.lambda0.iter().sum()
    }

    /// True when every `μ₀ᵢ` vanishes (the seed lies in a hyperplane).
    pub fn is_planar(&self) -> bool {
        self.mu0.iter().all(|m| *m == 0.0)
    }

    pub fn frame(&self, x: &[Jet]) -> Result<SeedFrame> {
        if x.len() != self.dim_seed() {
            return Err(Error::DimensionMismatch {
                expected: self.dim_seed(),
                got: x.len(),
            });
        }
        let zero = x[0].constant_like(0.0);
        let one = x[0].constant_like(1.0);
        let m = self.dim_ambient();
        let axis = |k: usize| -> Vec<Jet> {
            (0..m).map(|i| if i == k { one.clone() } else { zero.clone() }).collect()
        };
        Ok(match &self.kind {
            SeedKind::Sphere { r } => {
                let mut w = hypersphere(x);
                w.push(zero.clone());
                SeedFrame {
                    y: w.iter().map(|c| c * *r).collect(),
                    n0: w,
                    en: axis(m - 1),
                }
            }
            SeedKind::Product { p, r1, r2, .. } => {
                let w1 = hypersphere(&x[..*p]);
                let w2 = hypersphere(&x[*p..]);
                let big_r = libm::sqrt(r1 * r1 + r2 * r2);
                let mut y: Vec<Jet> = w1.iter().map(|c| c * *r1).collect();
                y.extend(w2.iter().map(|c| c * *r2));
                let n0 = y.iter().map(|c| c / big_r).collect();
                let mut en: Vec<Jet> = w1.iter().map(|c| c * (r2 / big_r)).collect();
                en.extend(w2.iter().map(|c| c * (-r1 / big_r)));
                SeedFrame { y, n0, en }
            }
            SeedKind::Cylinder { p, r, .. } => {
                let w = hypersphere(&x[..*p]);
                let mut y: Vec<Jet> = w.iter().map(|c| c * *r).collect();
                y.extend_from_slice(&x[*p..]);
                y.push(zero.clone());
                let mut n0 = w;
                n0.extend(core::iter::repeat(zero.clone()).take(m - n0.len()));
                SeedFrame { y, n0, en: axis(m - 1) }
            }
            SeedKind::Hyperplane => {
                let mut y = x.to_vec();
                y.push(zero.clone());
                y.push(zero.clone());
                SeedFrame {
                    y,
                    n0: axis(m - 2),
                    en: axis(m - 1),
                }
            }
        })
    }

    pub fn frame_at(&self, p: &[f64], order: usize) -> Result<SeedFrame> {
        if !self.domain.contains(p) {
            return Err(Error::OutsideDomain { point: p.to_vec() });
        }
        let s = JetSpace::shared(self.dim_seed(), order);
        self.frame(&s.variables(p))
    }

    /// Metric weights `v₀ᵢ = |Y_{,i}|` of the (orthogonal) seed coordinates.
    pub fn metric_weights(&self, p: &[f64]) -> Result<Vec<f64>> {
        let f = self.frame_at(p, 1)?;
        Ok((0..self.dim_seed())
            .map(|i| libm::sqrt(f.y.iter().map(|c| c.d1(i) * c.d1(i)).sum()))
            .collect())
    }

    /// Coordinate planes of ambient rotations that preserve the seed and its frame.
    pub fn rotation_planes(&self) -> Vec<(usize, usize)> {
        match &self.kind {
            SeedKind::Sphere { .. } => (1..self.n).map(|j| (0, j)).collect(),
            SeedKind::Product { p, q, .. } => {
                let mut v: Vec<(usize, usize)> = (1..=*p).map(|j| (0, j)).collect();
                v.extend((1..=*q).map(|j| (p + 1, p + 1 + j)));
                v
            }
            SeedKind::Cylinder { p, .. } => (1..=*p).map(|j| (0, j)).collect(),
            SeedKind::Hyperplane => {
                if self.n >= 3 {
                    vec![(0, 1)]
                } else {
                    Vec::new()
                }
            }
        }
    }

    pub fn chart(&self) -> SeedChart<'_> {
        SeedChart { seed: self }
    }
}

/// The seed position `Y` as a codimension-2 chart.
pub struct SeedChart<'a> {
    seed: &'a IsoparSeed,
}

impl Chart for SeedChart<'_> {
    fn dim_domain(&self) -> usize {
        self.seed.dim_seed()
    }
    fn dim_ambient(&self) -> usize {
        self.seed.dim_ambient()
    }
    fn domain(&self) -> &DomainBox {
        &self.seed.domain
    }
    fn eval(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        Ok(self.seed.frame(x)?.y)
    }
    fn label(&self) -> String {
        self.seed.spec()
    }
}

/// Curvature data of a seed recomputed from jets of `Y` and its normal frame.
#[derive(Debug, Clone)]
pub struct SeedInvariants {
    /// `λᵢ = ⟨Y_{,ii}, N₀⟩ / gᵢᵢ`
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    /// Largest `|⟨N₀,eₙ⟩|`, `||N₀|−1|`, `||eₙ|−1|`, `|⟨Y_{,i}, N₀⟩|`, `|⟨Y_{,i}, eₙ⟩|`.
    pub frame_defect: f64,
    /// Largest `|⟨D_{eᵢ}N₀, eₙ⟩|` over unit coordinate directions.
    pub flatness: f64,
    /// `‖[A_{N₀}, A_{eₙ}]‖` (Frobenius).
    pub commutator: f64,
    /// Largest off-diagonal entry of `g`, `II^{N₀}`, `II^{eₙ}` relative to the diagonal.
    pub off_diagonal: f64,
}

pub fn seed_invariants(seed: &IsoparSeed, p: &[f64]) -> Result<SeedInvariants> {
    let f = seed.frame_at(p, 2)?;
    let k = seed.dim_seed();
    let yi: Vec<Vec<Jet>> = (0..k).map(|i| f.y.iter().map(|c| c.derivative(i)).collect()).collect();
    let val = |v: &[Jet]| -> Vec<f64> { v.iter().map(Jet::value).collect() };
    let n0 = val(&f.n0);
    let en = val(&f.en);
    let d = crate::linalg::dot_f;

    let mut frame_defect = libm::fabs(d(&n0, &en))
        .max(libm::fabs(d(&n0, &n0) - 1.0))
        .max(libm::fabs(d(&en, &en) - 1.0));
    let g = DMatrix::from_fn(k, k, |i, j| dot(&yi[i], &yi[j]).value());
    let second = |nu: &[f64]| {
        DMatrix::from_fn(k, k, |i, j| {
            let yij: Vec<f64> = yi[i].iter().map(|c| c.d1(j)).collect();
            d(&yij, nu)
        })
    };
    let ii_n = second(&n0);
    let ii_e = second(&en);
    let mut flatness = 0.0f64;
    let mut off = 0.0f64;
    for i in 0..k {
        let yv = val(&yi[i]);
        frame_defect = frame_defect.max(libm::fabs(d(&yv, &n0))).max(libm::fabs(d(&yv, &en)));
        let dn: Vec<f64> = f.n0.iter().map(|c| c.d1(i)).collect();
        flatness = flatness.max(libm::fabs(d(&dn, &en)) / libm::sqrt(g[(i, i)]));
        for j in 0..k {
            if i != j {
                let s = libm::sqrt(g[(i, i)] * g[(j, j)]);
                off = off
                    .max(libm::fabs(g[(i, j)]) / s)
                    .max(libm::fabs(ii_n[(i, j)]) / s)
                    .max(libm::fabs(ii_e[(i, j)]) / s);
            }
        }
    }
    let g_inv = g.clone().try_inverse().ok_or(Error::DegenerateMetric { det: g.determinant() })?;
    let a_n = &g_inv * &ii_n;
    let a_e = &g_inv * &ii_e;
    let commutator = (&a_n * &a_e - &a_e * &a_n).norm();
    Ok(SeedInvariants {
        lambda: (0..k).map(|i| ii_n[(i, i)] / g[(i, i)]).collect(),
        mu: (0..k).map(|i| ii_e[(i, i)] / g[(i, i)]).collect(),
        frame_defect,
        flatness,
        commutator,
        off_diagonal: off,
    })
}

/// `Σⁿ × Eˡ ⊂ E^{n+l+1}` from a hypersurface chart of `Σⁿ`.
pub struct CylinderExtension {
    pub base: Box<dyn Chart>,
    pub l: usize,
    domain: DomainBox,
}

pub fn extend_cylinder(base: Box<dyn Chart>, l: usize) -> Result<CylinderExtension> {
    if l < 1 {
        return Err(Error::InvalidParameter("extension needs l >= 1".into()));
    }
    if base.dim_ambient() != base.dim_domain() + 1 {
        return Err(Error::NotHypersurface {
            domain: base.dim_domain(),
            ambient: base.dim_ambient(),
        });
    }
    let domain = base.domain().product(&DomainBox::cube(l, -1.0, 1.0));
    Ok(CylinderExtension { base, l, domain })
}

impl Chart for CylinderExtension {
    fn dim_domain(&self) -> usize {
        self.base.dim_domain() + self.l
    }
    fn dim_ambient(&self) -> usize {
        self.base.dim_ambient() + self.l
    }
    fn domain(&self) -> &DomainBox {
        &self.domain
    }
    fn eval(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        let n = self.base.dim_domain();
        let mut out = self.base.eval(&x[..n])?;
        out.extend_from_slice(&x[n..]);
        Ok(out)
    }
    fn normal_hint(&self, p: &[f64]) -> Option<Vec<f64>> {
        let n = self.base.dim_domain();
        let mut v = match self.base.normal_hint(&p[..n]) {
            Some(v) => v,
            None => {
                // match the base orientation explicitly; the determinant rule is
                // not stable under appending coordinates
                let sj = crate::kernel::SurfaceJets::compute(&*self.base, &p[..n], 2).ok()?;
                sj.normal_value()
            }
        };
        v.extend(core::iter::repeat(0.0).take(self.l));
        Some(v)
    }
    fn convention(&self) -> &'static str {
        self.base.convention()
    }
    fn label(&self) -> String {
        format!("{} x E^{}", self.base.label(), self.l)
    }
}

/// Degree-2 embedding of `RP²` in `S⁴(1/√3) ⊂ E⁵`:
/// with `(x,y,z) = (cos θ, sin θ cos φ, sin θ sin φ)`,
/// `X = (yz, xz, xy, (x² − (y²+z²)/2)/√3, (z² − y²)/2)`.
pub fn veronese_rp2(theta: f64, phi: f64) -> [f64; 5] {
    let s = JetSpace::shared(2, 0);
    let v = veronese_jets(&s.variables(&[theta, phi]));
    core::array::from_fn(|i| v[i].value())
}

fn veronese_jets(a: &[Jet]) -> Vec<Jet> {
    let st = a[0].sin();
    let x = a[0].cos();
    let y = &st * &a[1].cos();
    let z = &st * &a[1].sin();
    let (x2, y2, z2) = (&x * &x, &y * &y, &z * &z);
    let s3 = libm::sqrt(3.0);
    vec![
        &y * &z,
        &x * &z,
        &x * &y,
        (&x2 - &((&y2 + &z2) * 0.5)) / s3,
        (&z2 - &y2) * 0.5,
    ]
}

/// [`veronese_rp2`] as a chart on `θ ∈ [m, π−m]`, `φ ∈ [−π, π]`.
#[derive(Debug, Clone)]
pub struct VeroneseChart {
    domain: DomainBox,
}

impl Default for VeroneseChart {
    fn default() -> Self {
        use core::f64::consts::PI;
        Self {
            domain: DomainBox::new(vec![POLE_MARGIN, -PI], vec![PI - POLE_MARGIN, PI]),
        }
    }
}

impl Chart for VeroneseChart {
    fn dim_domain(&self) -> usize {
        2
    }
    fn dim_ambient(&self) -> usize {
        5
    }
    fn domain(&self) -> &DomainBox {
        &self.domain
    }
    fn eval(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        Ok(veronese_jets(x))
    }
    fn label(&self) -> String {
        "veronese".into()
    }
}

/// Rank of the Veronese Jacobian at `(θ, φ)` (singular values above `tol`,
/// taken as square roots of the eigenvalues of `JᵀJ`).
pub fn veronese_jacobian_rank(theta: f64, phi: f64, tol: f64) -> Result<usize> {
    let c = VeroneseChart::default();
    check_point(&c, &[theta, phi])?;
    let j = crate::chart::jet(&c, &[theta, phi], 1)?;
    let m = DMatrix::from_fn(5, 2, |k, i| j.components[k].d1(i));
    let eig = (m.transpose() * &m).symmetric_eigen();
    Ok(eig.eigenvalues.iter().filter(|e| libm::sqrt(e.max(0.0)) > tol).count())
}

/// One catalog line.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub spec: String,
    pub description: String,
    pub lambda0: Vec<f64>,
    pub mu0: Vec<f64>,
    pub symmetry: String,
    pub evolvable: bool,
}

/// Default seeds, sorted by spec string.
pub fn catalog() -> Vec<CatalogEntry> {
    let seeds = [
        (sphere_seed(2, 1.0), "circle in a plane (catenoidal family)"),
        (sphere_seed(3, 1.0), "round 2-sphere in a hyperplane"),
        (sphere_seed(3, 2.0), "round 2-sphere of radius 2 in a hyperplane"),
        (sphere_seed(4, 1.0), "round 3-sphere in a hyperplane"),
        (product_sphere_seed(1, 1, 1.0, 1.0), "Clifford torus S^1 x S^1"),
        (product_sphere_seed(1, 2, 1.0, 1.0), "S^1 x S^2"),
        (cylinder_seed(1, 1, 1.0), "cylinder S^1 x R"),
        (hyperplane_seed(2), "flat seed, minimal control (rejected by build)"),
    ];
    let mut out: Vec<CatalogEntry> = seeds
        .into_iter()
        .map(|(s, d)| {
            let s = s.expect("catalog parameters are valid");
            CatalogEntry {
                spec: s.spec(),
                description: d.into(),
                evolvable: s.lambda_sum() != 0.0,
                lambda0: s.lambda0,
                mu0: s.mu0,
                symmetry: s.symmetry_tag,
            }
        })
        .collect();
    out.push(CatalogEntry {
        spec: "veronese".into(),
        description: "Veronese RP^2 in S^4(1/sqrt 3), verification only".into(),
        lambda0: Vec::new(),
        mu0: Vec::new(),
        symmetry: "SO(3)".into(),
        evolvable: false,
    });
    out.sort_by(|a, b| a.spec.cmp(&b.spec));
    out
}
