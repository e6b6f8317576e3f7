//! Structural checks on constructed hypersurfaces. Every check reduces to one
//! or more [`ResidualReport`]s.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::chart::{eval_point, jet, Chart, DomainBox};
use crate::error::{Error, Result};
use crate::evolve::EvolvedChart;
use crate::jet::Jet;
use crate::kernel::{
    christoffel_jets, curvature_at, delta_h_split_from, eigenframe_from, principal_curvatures, CurvatureData,
    SurfaceJets,
};
use crate::linalg::{dot_f, norm, sub_f, JetMatrix};
use crate::ode::{dopri5, hermite, OdeOptions};
use crate::report::ResidualReport;

macro_rules! tolerances {
    ($($(#[$doc:meta])* $name:ident = $value:expr),* $(,)?) => {
        /// Named pass/fail thresholds of the verification suites.
        #[derive(Debug, Clone, Copy, PartialEq)]
        pub struct Tolerances {
            $($(#[$doc])* pub $name: f64,)*
        }

        impl Default for Tolerances {
            fn default() -> Self {
                Self { $($name: $value,)* }
            }
        }

        impl Tolerances {
            pub const NAMES: &'static [&'static str] = &[$(stringify!($name),)*];

            pub fn get(&self, name: &str) -> Option<f64> {
                match name {
                    $(stringify!($name) => Some(self.$name),)*
                    _ => None,
                }
            }

            pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
                if !(value >= 0.0) || !value.is_finite() {
                    return Err(Error::InvalidParameter(format!("tolerance {name} must be finite and >= 0")));
                }
                match name {
                    $(stringify!($name) => self.$name = value,)*
                    _ => return Err(Error::InvalidParameter(format!("unknown tolerance {name}"))),
                }
                Ok(())
            }
        }
    };
}

tolerances! {
    /// kernel residual `min(‖∇h‖ on block, |nh + 2λ|)`
    eigenframe = 1e-6,
    /// `|nh + 2λₙ|` and `|Σλᵢ + 3λₙ|`
    bch_identity = 1e-6,
    christoffel = 1e-10,
    codazzi = 1e-7,
    /// the perturbed control must exceed this
    codazzi_control = 1e-4,
    umbilicity = 1e-6,
    sphere_fit = 1e-5,
    line_fit = 1e-8,
    h_spread = 1e-8,
    curvature_spread = 1e-8,
    seed_recovery = 1e-7,
    flatness = 1e-8,
    alignment = 1e-6,
    vn_spread = 1e-9,
    geodesy = 1e-8,
    planarity = 1e-8,
    congruence = 1e-8,
    symmetry = 1e-8,
    /// `|(1+α′²) − ∏βᵢ^{2/3}|` along a planar-seed profile
    first_integral = 1e-8,
    /// `|Δh − |A|²h|` must stay above this on proper examples
    bhh_floor = 1e-3,
}

/// Curvature data in orthogonal (curvature-line) coordinates at one point.
#[derive(Debug, Clone)]
pub struct OrthoSample {
    /// `vᵢ` with `gᵢᵢ = vᵢ²`, jets of order ≥ 1.
    pub weights: Vec<Jet>,
    /// `λᵢ` as jets of order ≥ 1.
    pub lambdas: Vec<Jet>,
    /// Largest normalized off-diagonal entry of `g` or `II` (0 for exact data).
    pub off_diagonal: f64,
}

type Sampler<'a> = Box<dyn Fn(&[f64]) -> Result<OrthoSample> + 'a>;

/// A diagonal metric `Σ vᵢ² dxᵢ²` with principal curvature functions.
pub struct OrthoMetric<'a> {
    pub n: usize,
    sampler: Sampler<'a>,
}

impl<'a> OrthoMetric<'a> {
    pub fn new(n: usize, sampler: impl Fn(&[f64]) -> Result<OrthoSample> + 'a) -> Self {
        Self {
            n,
            sampler: Box::new(sampler),
        }
    }

    /// Weights and curvatures `IIᵢᵢ/gᵢᵢ` read off a chart assumed to be in
    /// curvature-line coordinates.
    pub fn from_chart(chart: &'a dyn Chart) -> Self {
        let n = chart.dim_domain();
        Self::new(n, move |p| {
            let sj = SurfaceJets::compute(chart, p, 3)?;
            let g = &sj.metric.g;
            let weights: Vec<Jet> = (0..n).map(|i| g[i][i].sqrt()).collect();
            let lambdas: Vec<Jet> = (0..n).map(|i| &sj.ii[i][i] / &g[i][i]).collect();
            let mut off = 0.0f64;
            for i in 0..n {
                for j in 0..i {
                    let s = libm::sqrt(g[i][i].value() * g[j][j].value());
                    off = off.max(libm::fabs(g[i][j].value()) / s);
                    off = off.max(libm::fabs(sj.ii[i][j].value()) / s);
                }
            }
            Ok(OrthoSample {
                weights,
                lambdas,
                off_diagonal: off,
            })
        })
    }

    /// Add `slope·x₁` to the curvature `λ_index` (a non-realizable control).
    pub fn perturbed(self, index: usize, slope: f64) -> OrthoMetric<'a> {
        let inner = self.sampler;
        OrthoMetric::new(self.n, move |p| {
            let mut s = inner(p)?;
            let x1 = s.lambdas[index].space().variable(0, p[0]);
            s.lambdas[index] = &s.lambdas[index] + &(&x1 - p[0]) * slope;
            Ok(s)
        })
    }

    pub fn sample(&self, p: &[f64]) -> Result<OrthoSample> {
        if p.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: p.len(),
            });
        }
        let s = (self.sampler)(p)?;
        for (i, v) in s.weights.iter().enumerate() {
            if !(v.value() > 0.0) {
                return Err(Error::DegenerateMetric { det: v.value() });
            }
            let _ = i;
        }
        Ok(s)
    }
}

/// `Γⁱⱼₖ` (indexed `[i][j][k]`) of a diagonal metric from the orthogonal formulas
/// `Γⁱᵢₖ = Eᵢ,ₖ/(2Eᵢ)`, `Γⁱⱼⱼ = −Eⱼ,ᵢ/(2Eᵢ)` (`i ≠ j`), zero otherwise.
pub fn christoffel(om: &OrthoMetric<'_>, p: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
    let s = om.sample(p)?;
    Ok(ortho_christoffel(&s))
}

fn ortho_christoffel(s: &OrthoSample) -> Vec<Vec<Vec<f64>>> {
    let n = s.weights.len();
    let v: Vec<f64> = s.weights.iter().map(Jet::value).collect();
    // Eᵢ,ₖ/(2Eᵢ) = vᵢ,ₖ/vᵢ
    let dlog = |i: usize, k: usize| s.weights[i].d1(k) / v[i];
    let mut out = vec![vec![vec![0.0; n]; n]; n];
    for i in 0..n {
        for k in 0..n {
            out[i][i][k] = dlog(i, k);
            out[i][k][i] = dlog(i, k);
        }
        for j in 0..n {
            if j != i {
                out[i][j][j] = -v[j] * s.weights[j].d1(i) / (v[i] * v[i]);
            }
        }
    }
    out
}

/// The same symbols from the general formula applied to `diag(vᵢ²)`.
pub fn christoffel_general(om: &OrthoMetric<'_>, p: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
    let s = om.sample(p)?;
    let n = om.n;
    let zero = s.weights[0].constant_like(0.0);
    let mut g: JetMatrix = vec![vec![zero.clone(); n]; n];
    let mut g_inv = g.clone();
    for i in 0..n {
        g[i][i] = &s.weights[i] * &s.weights[i];
        g_inv[i][i] = g[i][i].recip();
    }
    Ok(christoffel_jets(&g, &g_inv)
        .iter()
        .map(|a| a.iter().map(|b| b.iter().map(Jet::value).collect()).collect())
        .collect())
}

/// `max_{i≠j} |λᵢ,ⱼ − (λⱼ − λᵢ)Γⁱᵢⱼ|`.
pub fn codazzi_residual(om: &OrthoMetric<'_>, p: &[f64]) -> Result<f64> {
    let s = om.sample(p)?;
    let gamma = ortho_christoffel(&s);
    let n = om.n;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let li = s.lambdas[i].value();
            let lj = s.lambdas[j].value();
            let r = s.lambdas[i].d1(j) - (lj - li) * gamma[i][i][j];
            worst = worst.max(libm::fabs(r));
        }
    }
    Ok(worst)
}

/// Codazzi residual of an orthogonal chart over a point set.
pub fn codazzi_report(om: &OrthoMetric<'_>, points: &[Vec<f64>], tol: f64) -> ResidualReport {
    let mut r = ResidualReport::new("codazzi", tol);
    for p in points {
        match codazzi_residual(om, p) {
            Ok(v) => r.push(v, p),
            Err(e) => {
                r.push(f64::NAN, p);
                r.fail(format!("sample failed: {e}"));
            }
        }
    }
    r
}

/// A non-realizable curvature assignment on a round 2-sphere chart.
pub fn codazzi_negative_control(tol: &Tolerances) -> Result<ResidualReport> {
    let sphere = crate::surfaces::RoundSphere::new(2, 1.0);
    let om = OrthoMetric::from_chart(&sphere).perturbed(1, 1e-3);
    let mut r = ResidualReport::at_least("codazzi:perturbed-control", tol.codazzi_control);
    for p in sphere.domain().scaled(0.8).grid(6) {
        r.push(codazzi_residual(&om, &p)?, &p);
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeafOptions {
    /// Arc length of the leaf flows on either side of the base point.
    pub extent: f64,
    /// Samples on each side of the base point per flow direction.
    pub per_side: usize,
    /// Smallest block multiplicity accepted.
    pub min_multiplicity: usize,
    /// Mesh points at which umbilicity is evaluated.
    pub umbilic_samples: usize,
}

impl Default for LeafOptions {
    fn default() -> Self {
        Self {
            extent: 0.4,
            per_side: 4,
            min_multiplicity: 2,
            umbilic_samples: 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LeafShape {
    Sphere { center: Vec<f64>, radius: f64 },
    /// Affine piece of the given dimension (a line or plane).
    Flat { dim: usize },
}

#[derive(Debug, Clone)]
pub struct LeafCheck {
    pub multiplicity: usize,
    pub block_value: f64,
    /// Ambient points of the sampled leaf.
    pub points: Vec<Vec<f64>>,
    pub umbilicity: f64,
    pub fit_defect: f64,
    pub shape: LeafShape,
}

/// Unit (in `g`) projection of the coordinate vector `a` onto the block of `cd`
/// nearest `target`.
fn block_direction(cd: &CurvatureData, target: f64, a: &[f64]) -> Result<Vec<f64>> {
    let b = cd.block_near(target);
    let ga = &cd.g * DVector::from_column_slice(a);
    let mut v = DVector::zeros(cd.n());
    for k in b.start..b.start + b.len {
        let e = cd.frames.column(k);
        v += e * e.dot(&ga);
    }
    let len = libm::sqrt(v.dot(&(&cd.g * &v)));
    if !(len > 1e-12) {
        return Err(Error::Evaluation("flow direction left the curvature block".into()));
    }
    Ok((v / len).iter().copied().collect())
}

/// Points `flow_s(q)` for `s = ±k·extent/m`, `k = 0..m`, of the unit field `P_B a`.
fn flow_samples(chart: &dyn Chart, q: &[f64], target: f64, a: &[f64], opts: &LeafOptions) -> Result<Vec<Vec<f64>>> {
    let m = opts.per_side.max(1);
    let ode = OdeOptions {
        atol: 1e-12,
        rtol: 1e-12,
        h_max: opts.extent / 8.0,
        h_init: opts.extent / 64.0,
        ..OdeOptions::default()
    };
    let domain = chart.domain().clone();
    let f = |_s: f64, y: &[f64]| {
        let cd = curvature_at(chart, y)?;
        block_direction(&cd, target, a)
    };
    let accept = |_s: f64, y: &[f64]| {
        if domain.contains(y) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { point: y.to_vec() })
        }
    };
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(2 * m + 1);
    for dir in [-1.0, 1.0] {
        let t = dopri5(f, 0.0, q, dir * opts.extent, &ode, accept)?;
        let dim = q.len();
        let mut side = Vec::new();
        for k in 1..=m {
            let s = dir * opts.extent * k as f64 / m as f64;
            let mut pt = Vec::with_capacity(dim);
            for d in 0..dim {
                let ys: Vec<f64> = t.ys.iter().map(|y| y[d]).collect();
                let dys: Vec<f64> = t.dys.iter().map(|y| y[d]).collect();
                match hermite(&t.xs, &ys, &dys, s) {
                    Some((v, _)) => pt.push(v),
                    None => break,
                }
            }
            if pt.len() == dim {
                side.push(pt);
            }
        }
        if dir < 0.0 {
            side.reverse();
            out.extend(side);
            out.push(q.to_vec());
        } else {
            out.extend(side);
        }
    }
    Ok(out)
}

/// Umbilicity of the leaf of block `B` inside the hypersurface: with `e_i ∉ B`
/// the components `g(e_i, (∇_u A)v)/(λ − λᵢ)` of its second fundamental form
/// must be proportional to `g(u, v)` on `B`.
fn leaf_umbilicity(chart: &dyn Chart, q: &[f64], target: f64) -> Result<f64> {
    let sj = SurfaceJets::compute(chart, q, 3)?;
    let cd = CurvatureData::from_jets(&sj, q)?;
    let n = cd.n();
    let b = *cd.block_near(target);
    if b.len < 2 {
        return Ok(0.0);
    }
    let gamma: Vec<Vec<Vec<f64>>> = christoffel_jets(&sj.metric.g, &sj.metric.g_inv)
        .iter()
        .map(|a| a.iter().map(|r| r.iter().map(Jet::value).collect()).collect())
        .collect();
    let a = &cd.shape;
    // (∇_j A)^i_k
    let nabla_a = |j: usize, i: usize, k: usize| {
        let mut v = sj.shape[i][k].d1(j);
        for m in 0..n {
            v += gamma[i][j][m] * a[(m, k)] - a[(i, m)] * gamma[m][j][k];
        }
        v
    };
    let col = |k: usize| -> Vec<f64> { cd.frames.column(k).iter().copied().collect() };
    let mut worst = 0.0f64;
    for i in (0..n).filter(|i| *i < b.start || *i >= b.start + b.len) {
        let ei = col(i);
        let gei: Vec<f64> = (&cd.g * DVector::from_column_slice(&ei)).iter().copied().collect();
        let gap = b.value - cd.lambdas[i];
        let t = |u: &[f64], v: &[f64]| {
            let mut s = 0.0;
            for r in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        s += gei[r] * nabla_a(j, r, k) * u[j] * v[k];
                    }
                }
            }
            s / gap
        };
        let basis: Vec<Vec<f64>> = (b.start..b.start + b.len).map(col).collect();
        let diag: Vec<f64> = basis.iter().map(|u| t(u, u)).collect();
        let mean = diag.iter().sum::<f64>() / diag.len() as f64;
        for (x, u) in basis.iter().enumerate() {
            for (y, v) in basis.iter().enumerate() {
                let want = if x == y { mean } else { 0.0 };
                worst = worst.max(libm::fabs(t(u, v) - want));
            }
        }
    }
    Ok(worst)
}

/// Least squares through Householder QR; the system must have full column rank.
fn lstsq(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let qr = a.qr();
    let r = qr.r();
    let big = r.diagonal().iter().fold(0.0f64, |m, x| m.max(libm::fabs(*x)));
    if r.diagonal().iter().any(|x| libm::fabs(*x) <= 1e-13 * big) {
        return Err(Error::Evaluation("rank-deficient least squares".into()));
    }
    r.solve_upper_triangular(&(qr.q().transpose() * b))
        .ok_or_else(|| Error::Evaluation("rank-deficient least squares".into()))
}

/// Fit a round sphere, or an affine piece when the points are flat, in the
/// affine hull of `points`. Returns the shape and the RMS distance.
pub fn fit_leaf(points: &[Vec<f64>], leaf_dim: usize) -> Result<(LeafShape, f64)> {
    let k = points.len();
    let m = points[0].len();
    if k < leaf_dim + 3 {
        return Err(Error::InvalidParameter(format!("{k} points are too few for a fit")));
    }
    let mean: Vec<f64> = (0..m).map(|d| points.iter().map(|p| p[d]).sum::<f64>() / k as f64).collect();
    let centered = DMatrix::from_fn(k, m, |r, c| points[r][c] - mean[c]);
    // principal axes from the scatter matrix
    let eig = (centered.transpose() * &centered).symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));
    let top = eig.eigenvalues[order[0]];
    let hull = order
        .iter()
        .filter(|&&i| eig.eigenvalues[i] > 1e-12 * top)
        .count()
        .min(leaf_dim + 1);
    let basis: Vec<Vec<f64>> = order[..hull].iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect();
    // coordinates in the hull and distance from it
    let mut coords = Vec::with_capacity(k);
    let mut perp2 = Vec::with_capacity(k);
    for r in 0..k {
        let row: Vec<f64> = centered.row(r).iter().copied().collect();
        let c: Vec<f64> = basis.iter().map(|b| dot_f(b, &row)).collect();
        let mut off = row.clone();
        for (cj, b) in c.iter().zip(&basis) {
            for (o, bx) in off.iter_mut().zip(b) {
                *o -= cj * bx;
            }
        }
        perp2.push(dot_f(&off, &off));
        coords.push(c);
    }
    if hull <= leaf_dim {
        let rms = libm::sqrt(perp2.iter().sum::<f64>() / k as f64);
        return Ok((LeafShape::Flat { dim: hull }, rms));
    }
    let d = hull;
    // algebraic fit |y|² = 2c·y + e
    let a = DMatrix::from_fn(k, d + 1, |r, c| if c < d { 2.0 * coords[r][c] } else { 1.0 });
    let rhs = DVector::from_fn(k, |r, _| coords[r].iter().map(|x| x * x).sum());
    let sol = lstsq(a, &rhs)?;
    let mut c: Vec<f64> = sol.iter().take(d).copied().collect();
    let mut radius = libm::sqrt(sol[d] + c.iter().map(|x| x * x).sum::<f64>());
    // one Gauss–Newton step on Σ(|y − c| − r)²
    let mut jac = DMatrix::zeros(k, d + 1);
    let mut res = DVector::zeros(k);
    for r in 0..k {
        let diff = sub_f(&coords[r], &c);
        let dist = norm(&diff);
        res[r] = dist - radius;
        for j in 0..d {
            jac[(r, j)] = -diff[j] / dist;
        }
        jac[(r, d)] = -1.0;
    }
    let step = lstsq(jac, &(-res))?;
    for j in 0..d {
        c[j] += step[j];
    }
    radius += step[d];
    let mut sq = 0.0;
    for r in 0..k {
        let e = norm(&sub_f(&coords[r], &c)) - radius;
        sq += e * e + perp2[r];
    }
    let mut center = mean.clone();
    for (j, b) in basis.iter().enumerate() {
        for (x, bx) in center.iter_mut().zip(b) {
            *x += c[j] * bx;
        }
    }
    Ok((LeafShape::Sphere { center, radius }, libm::sqrt(sq / k as f64)))
}

/// Sample the leaf of the curvature block nearest `target` through `p`, measure
/// its umbilicity and fit a sphere (or a flat piece).
pub fn leaf_umbilic_check(chart: &dyn Chart, target: f64, p: &[f64], opts: &LeafOptions) -> Result<LeafCheck> {
    let cd = curvature_at(chart, p)?;
    let b = *cd.block_near(target);
    if b.len < opts.min_multiplicity.max(1) {
        return Err(Error::MultiplicityTooLow(b.len));
    }
    let n = cd.n();
    // two coordinate directions spanning the block at p
    let e0: Vec<f64> = cd.frames.column(b.start).iter().copied().collect();
    let mut mesh: Vec<Vec<f64>> = Vec::new();
    let first = flow_samples(chart, p, b.value, &e0, opts)?;
    if b.len >= 2 {
        let e1: Vec<f64> = cd.frames.column(b.start + 1).iter().copied().collect();
        for q in &first {
            mesh.extend(flow_samples(chart, q, b.value, &e1, opts)?);
        }
    } else {
        mesh = first;
    }
    let _ = n;
    let points: Vec<Vec<f64>> = mesh.iter().map(|q| eval_point(chart, q)).collect::<Result<_>>()?;
    let sampled_dim = b.len.min(2);
    let (shape, fit_defect) = fit_leaf(&points, sampled_dim)?;
    let stride = (mesh.len() / opts.umbilic_samples.max(1)).max(1);
    let mut umbilicity = 0.0f64;
    for q in mesh.iter().step_by(stride) {
        umbilicity = umbilicity.max(leaf_umbilicity(chart, q, b.value)?);
    }
    Ok(LeafCheck {
        multiplicity: b.len,
        block_value: b.value,
        points,
        umbilicity,
        fit_defect,
        shape,
    })
}

/// Per-level reports of the level sets `{x_axis = t}` of a chart.
///
/// Checks that `h` and the principal curvatures of each level set are constant
/// along it, that its normal bundle is flat, that the remaining principal
/// direction is `∇h` and that `g_{axis,axis}` is constant along it.
pub fn level_set_suite(
    chart: &dyn Chart,
    axis: usize,
    levels: &[f64],
    base_points: &[Vec<f64>],
    tol: &Tolerances,
) -> Result<Vec<ResidualReport>> {
    let n = chart.dim_domain();
    let at = |b: &[f64], t: f64| {
        let mut p = Vec::with_capacity(n);
        p.extend_from_slice(&b[..axis]);
        p.push(t);
        p.extend_from_slice(&b[axis..]);
        p
    };
    let dom = chart.domain();
    let (lo, hi) = (dom.lo[axis], dom.hi[axis]);
    for &t in levels {
        if !(t >= lo && t <= hi) {
            return Err(Error::LevelOutOfRange { t });
        }
    }
    // reject charts on which h has no regular value at all
    let probe = &base_points[0];
    let mut regular = false;
    let mut h0 = 0.0;
    for k in 0..7 {
        let t = lo + (hi - lo) * (0.05 + 0.9 * k as f64 / 6.0);
        let sj = SurfaceJets::compute(chart, &at(probe, t), 3)?;
        h0 = sj.h.value();
        let grad = norm(&sj.metric.gradient(&sj.h));
        if grad > 1e-9 * (1.0 + libm::fabs(h0)) {
            regular = true;
        }
    }
    if !regular {
        return Err(Error::NoRegularValue(h0));
    }

    let mut h_rep = ResidualReport::new("level-set:h-spread", tol.h_spread);
    let mut k_rep = ResidualReport::new("level-set:curvature-spread", tol.curvature_spread);
    let mut f_rep = ResidualReport::new("level-set:normal-flatness", tol.flatness);
    let mut a_rep = ResidualReport::new("level-set:gradient-alignment", tol.alignment);
    let mut v_rep = ResidualReport::new("level-set:vn-spread", tol.vn_spread);
    let mut skipped_alignment = 0usize;
    for &t in levels {
        let mut hs = Vec::new();
        let mut ks: Vec<Vec<f64>> = Vec::new();
        let mut vs = Vec::new();
        for b in base_points {
            let p = at(b, t);
            let sj = SurfaceJets::compute(chart, &p, 3)?;
            let cd = CurvatureData::from_jets(&sj, &p)?;
            hs.push(cd.h);
            vs.push(cd.g[(axis, axis)]);
            // curvatures of the level set: the pencil (g, II) on its tangent space
            let idx: Vec<usize> = (0..n).filter(|i| *i != axis).collect();
            let gs = DMatrix::from_fn(n - 1, n - 1, |r, c| cd.g[(idx[r], idx[c])]);
            let is = DMatrix::from_fn(n - 1, n - 1, |r, c| cd.ii[(idx[r], idx[c])]);
            ks.push(principal_curvatures(&gs, &is)?.0);
            // normal of the level set inside the hypersurface: ν ∝ g⁻¹ e_axis
            let nu: Vec<f64> = (0..n).map(|i| cd.g_inv[(i, axis)]).collect();
            let nu_len = libm::sqrt(cd.g_inv[(axis, axis)]);
            let mut flat = 0.0f64;
            for &i in &idx {
                let s: f64 = (0..n).map(|j| cd.ii[(i, j)] * nu[j]).sum();
                flat = flat.max(libm::fabs(s) / (nu_len * libm::sqrt(cd.g[(i, i)])));
            }
            f_rep.push(flat, &p);
            // ∇h against the principal direction of the remaining curvature
            let dh: Vec<f64> = (0..n).map(|j| sj.h.d1(j)).collect();
            let grad: Vec<f64> = (0..n).map(|i| (0..n).map(|j| cd.g_inv[(i, j)] * dh[j]).sum()).collect();
            let gnorm = libm::sqrt(dot_f(&grad, &dh));
            if gnorm > 1e-9 * (1.0 + libm::fabs(cd.h)) {
                let target = -(n as f64) * cd.h / 2.0;
                let blk = *cd.block_near(target);
                let mut along = 0.0;
                for k in blk.start..blk.start + blk.len {
                    let c: f64 = (0..n).map(|j| cd.frames[(j, k)] * dh[j]).sum();
                    along += c * c;
                }
                let cos2 = (along / (gnorm * gnorm)).min(1.0);
                a_rep.push(libm::sqrt(1.0 - cos2), &p);
            } else {
                skipped_alignment += 1;
            }
        }
        let spread = |v: &[f64]| {
            let (mn, mx) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
            mx - mn
        };
        h_rep.push(spread(&hs), &[t]);
        v_rep.push(spread(&vs) / (1.0 + vs[0].abs()), &[t]);
        let mut kspread = 0.0f64;
        for j in 0..n - 1 {
            let col: Vec<f64> = ks.iter().map(|k| k[j]).collect();
            kspread = kspread.max(spread(&col));
        }
        k_rep.push(kspread, &[t]);
    }
    if skipped_alignment > 0 {
        a_rep = a_rep.with_note(format!("{skipped_alignment} samples skipped where grad h = 0"));
    }
    Ok(vec![h_rep, k_rep, f_rep, a_rep, v_rep])
}

fn seed_grid(ev: &EvolvedChart, per_axis: usize) -> Vec<Vec<f64>> {
    let d = ev.seed.domain().scaled(0.8);
    if d.dim() == 0 {
        return vec![Vec::new()];
    }
    d.grid(per_axis)
}

fn with_level(b: &[f64], t: f64) -> Vec<f64> {
    let mut p = b.to_vec();
    p.push(t);
    p
}

/// Level-set suite of an evolved chart at `levels` (values of `xₙ`), plus the
/// recovery of the seed curvatures on the level `xₙ = 0`.
pub fn evolved_level_suite(ev: &EvolvedChart, levels: &[f64], tol: &Tolerances) -> Result<Vec<ResidualReport>> {
    let base = seed_grid(ev, 3);
    let n = ev.n();
    let mut out = level_set_suite(ev, n - 1, levels, &base, tol)?;
    let mut rec = ResidualReport::new("level-set:seed-recovery", tol.seed_recovery);
    let mut want = ev.seed.lambda0.clone();
    want.sort_by(f64::total_cmp);
    for b in &base {
        let p = with_level(b, 0.0);
        let cd = curvature_at(ev, &p)?;
        let idx: Vec<usize> = (0..n - 1).collect();
        let gs = DMatrix::from_fn(n - 1, n - 1, |r, c| cd.g[(idx[r], idx[c])]);
        let is = DMatrix::from_fn(n - 1, n - 1, |r, c| cd.ii[(idx[r], idx[c])]);
        let got = principal_curvatures(&gs, &is)?.0;
        let worst = got.iter().zip(&want).fold(0.0f64, |m, (a, b)| m.max(libm::fabs(a - b)));
        rec.push(worst, &p);
    }
    out.push(rec);
    Ok(out)
}

/// Geodesy and planarity of the `xₙ`-curves and congruence of the profiles
/// traced from different base points.
pub fn structure_suite(ev: &EvolvedChart, base_count: usize, tol: &Tolerances) -> Result<Vec<ResidualReport>> {
    let n = ev.n();
    let interior = ev.interior(0.8);
    let (lo, hi) = (interior.lo[n - 1], interior.hi[n - 1]);
    let levels = crate::chart::linspace(lo, hi, 21);
    let seed_box = ev.seed.domain().scaled(0.8);
    let bases: Vec<Vec<f64>> = (0..base_count)
        .map(|k| {
            // deterministic spread of base points through the seed box
            let u = (k as f64 + 0.5) / base_count as f64;
            (0..n - 1)
                .map(|d| {
                    let frac = libm::fmod(u * (1.0 + 0.618_033_988_749_895 * d as f64) + 0.37 * d as f64, 1.0);
                    seed_box.lo[d] + frac * (seed_box.hi[d] - seed_box.lo[d])
                })
                .collect()
        })
        .collect();

    let mut geo = ResidualReport::new("structure:geodesy", tol.geodesy);
    let mut plan = ResidualReport::new("structure:planarity", tol.planarity);
    let mut cong = ResidualReport::new("structure:congruence", tol.congruence);
    let mut reference: Option<Vec<(f64, f64)>> = None;
    for b in &bases {
        let p0 = with_level(b, 0.0);
        let x0 = eval_point(ev, &p0)?;
        let cd0 = curvature_at(ev, &p0)?;
        let tn: Vec<f64> = cd0.jacobian.column(n - 1).iter().copied().collect();
        let tl = norm(&tn);
        let tn: Vec<f64> = tn.iter().map(|x| x / tl).collect();
        let nn = &cd0.normal;
        let mut curve = Vec::with_capacity(levels.len());
        for &t in &levels {
            let p = with_level(b, t);
            let cj = jet(ev, &p, 2)?;
            let xn = cj.column(n - 1);
            let mut idx2 = vec![0u8; n];
            idx2[n - 1] = 2;
            let xnn = cj.partial(&idx2).expect("order 2");
            // tangential part of X_nn orthogonal to X_n
            let jac = DMatrix::from_fn(xn.len(), n, |r, c| cj.column(c)[r]);
            let g = jac.transpose() * &jac;
            let gi = g.clone().try_inverse().ok_or(Error::DegenerateMetric { det: g.determinant() })?;
            let a = DVector::from_column_slice(&xnn);
            let tang = &jac * (&gi * (jac.transpose() * &a));
            let xv = DVector::from_column_slice(&xn);
            let rem = &tang - &xv * (tang.dot(&xv) / xv.dot(&xv));
            geo.push(rem.norm() / xv.dot(&xv), &p);
            // distance from the plane through X(b,0) spanned by N and X_n there
            let d = sub_f(&cj.position(), &x0);
            let (u, v) = (dot_f(&d, &tn), dot_f(&d, nn));
            let off: Vec<f64> = d.iter().zip(&tn).zip(nn).map(|((d, t), m)| d - u * t - v * m).collect();
            plan.push(norm(&off), &p);
            curve.push((u, v));
        }
        match &reference {
            None => reference = Some(curve),
            Some(r) => {
                for (k, (a, c)) in r.iter().zip(&curve).enumerate() {
                    let dist = libm::hypot(a.0 - c.0, a.1 - c.1);
                    cong.push(dist, &with_level(b, levels[k]));
                }
            }
        }
    }
    Ok(vec![geo, plan, cong])
}

/// Eigenframe and biconservative identities on a grid over `fraction` of the
/// validity interval.
pub fn eigenframe_suite(ev: &EvolvedChart, fraction: f64, per_axis: usize, tol: &Tolerances) -> Result<Vec<ResidualReport>> {
    let n = ev.n();
    let mut ef = ResidualReport::new("eigenframe", tol.eigenframe);
    let mut nh = ResidualReport::new("bch:nh+2ln", tol.bch_identity);
    let mut sum = ResidualReport::new("bch:sum+3ln", tol.bch_identity);
    for p in ev.interior(fraction).grid(per_axis) {
        let sj = SurfaceJets::compute(ev, &p, 3)?;
        let cd = CurvatureData::from_jets(&sj, &p)?;
        ef.push(eigenframe_from(&sj, &cd).max, &p);
        // λₙ along the xₙ coordinate line
        let ln = cd.ii[(n - 1, n - 1)] / cd.g[(n - 1, n - 1)];
        nh.push(n as f64 * cd.h + 2.0 * ln, &p);
        let c = ev.curvatures(p[n - 1])?;
        sum.push(c.lambdas.iter().sum::<f64>() + 3.0 * c.lambda_n, &p);
    }
    Ok(vec![ef, nh, sum])
}

/// First integral `1 + α′² = ∏βᵢ^{2/3}` at every profile sample. Only planar
/// seeds have it; other seeds give an empty passing report.
pub fn first_integral_report(ev: &EvolvedChart, tol: &Tolerances) -> ResidualReport {
    let mut rep = ResidualReport::new("profile:first-integral", tol.first_integral);
    if !ev.seed.is_planar() {
        return rep.with_note("skipped: seed is not planar");
    }
    for (d, x) in ev.profile.first_integral_defect().iter().zip(&ev.profile.xs) {
        rep.push(*d, &[*x]);
    }
    rep
}

/// `min |Δh − |A|²h|` over `points`: a proper biconservative chart that is not
/// biharmonic keeps this bounded away from zero.
pub fn bhh_properness_check(chart: &dyn Chart, points: &[Vec<f64>], floor: f64) -> Result<ResidualReport> {
    let mut rep = ResidualReport::at_least("bhh:normal-residual", floor);
    let mut minimal = true;
    let mut splits = Vec::with_capacity(points.len());
    for p in points {
        let sj = SurfaceJets::compute(chart, p, 4)?;
        let s = delta_h_split_from(&sj);
        if libm::fabs(s.h) > 1e-12 {
            minimal = false;
        }
        splits.push(s);
    }
    if minimal {
        return Ok(ResidualReport::new("bhh:normal-residual", f64::INFINITY).with_note("skipped: minimal, not proper"));
    }
    for (p, s) in points.iter().zip(&splits) {
        rep.push(s.normal, p);
    }
    let note = if rep.passed() { "not biharmonic" } else { "residual reaches the floor" };
    Ok(rep.with_note(note))
}

/// Rotate chart points in each symmetry plane of the seed and measure their
/// distance back to the chart (Gauss–Newton reprojection).
pub fn symmetry_check(ev: &EvolvedChart, angle: f64, tol: &Tolerances) -> Result<ResidualReport> {
    let mut rep = ResidualReport::new("symmetry", tol.symmetry);
    let planes = ev.seed.rotation_planes();
    if planes.is_empty() {
        return Ok(rep.with_note("seed has no sampled rotations"));
    }
    let domain = ev.interior(0.9);
    let n = ev.n();
    for p in ev.interior(0.5).scaled(0.5).grid(2) {
        let x = eval_point(ev, &p)?;
        for &(i, j) in &planes {
            let mut y = x.clone();
            let (c, s) = (libm::cos(angle), libm::sin(angle));
            y[i] = c * x[i] - s * x[j];
            y[j] = s * x[i] + c * x[j];
            let d = reproject(ev, &domain, &p, &y)?;
            rep.push(d, &p);
        }
    }
    let _ = n;
    Ok(rep)
}

/// Distance from `y` to the chart by Gauss–Newton started at `p0`.
pub fn reproject(chart: &dyn Chart, domain: &DomainBox, p0: &[f64], y: &[f64]) -> Result<f64> {
    let n = chart.dim_domain();
    let mut q = p0.to_vec();
    let mut dist = f64::INFINITY;
    for _ in 0..50 {
        let cj = jet(chart, &q, 1)?;
        let r = sub_f(&cj.position(), y);
        dist = norm(&r);
        let jac = DMatrix::from_fn(r.len(), n, |a, b| cj.column(b)[a]);
        let step = (jac.transpose() * &jac)
            .try_inverse()
            .ok_or(Error::DegenerateMetric { det: 0.0 })?
            * (jac.transpose() * DVector::from_column_slice(&r));
        for k in 0..n {
            q[k] -= step[k];
        }
        if !domain.contains(&q) && !chart.domain().contains(&q) {
            return Err(Error::OutsideDomain { point: q });
        }
        if step.norm() < 1e-15 * (1.0 + norm(&q)) {
            break;
        }
    }
    let final_r = sub_f(&eval_point(chart, &q)?, y);
    Ok(norm(&final_r).min(dist))
}

/// Leaf checks for every seed curvature block of an evolved chart at a few
/// levels. Flat leaves (`λ = 0`) are held to `line_fit`, round ones to
/// `sphere_fit`.
pub fn umbilic_suite(ev: &EvolvedChart, tol: &Tolerances) -> Result<Vec<ResidualReport>> {
    let mut fit = ResidualReport::new("umbilic:sphere-fit", tol.sphere_fit);
    let mut line = ResidualReport::new("umbilic:line-fit", tol.line_fit);
    let mut umb = ResidualReport::new("umbilic:umbilicity", tol.umbilicity);
    let center = ev.seed.domain().center();
    let v = ev.profile.validity.1;
    let opts = LeafOptions {
        min_multiplicity: 1,
        ..LeafOptions::default()
    };
    let mut shapes = Vec::new();
    let mut merged = 0usize;
    // away from xₙ = 0, where factors of a product seed share one curvature
    for t in [-0.3 * v, 0.15 * v, 0.3 * v] {
        let p = with_level(&center, t);
        let c = ev.curvatures(t)?;
        // distinct seed curvatures at this level, skipping a coincidence with λₙ
        let mut seen: Vec<f64> = Vec::new();
        for &l in &c.lambdas {
            if seen.iter().any(|s| libm::fabs(s - l) <= 1e-6 * (1.0 + libm::fabs(l))) {
                continue;
            }
            seen.push(l);
            if libm::fabs(l - c.lambda_n) <= 1e-6 * (1.0 + libm::fabs(l)) {
                continue;
            }
            let chk = leaf_umbilic_check(ev, l, &p, &opts)?;
            let expected = c.lambdas.iter().filter(|m| libm::fabs(*m - l) <= 1e-6 * (1.0 + libm::fabs(l))).count();
            if chk.multiplicity != expected {
                merged += 1;
                continue;
            }
            umb.push(chk.umbilicity, &p);
            match &chk.shape {
                LeafShape::Flat { .. } => line.push(chk.fit_defect, &p),
                LeafShape::Sphere { .. } => fit.push(chk.fit_defect, &p),
            }
            shapes.push(match chk.shape {
                LeafShape::Flat { dim } => format!("flat{dim}"),
                LeafShape::Sphere { radius, .. } => format!("sphere(r={radius:.6})"),
            });
        }
    }
    shapes.dedup();
    let mut note = shapes.join(" ");
    if merged > 0 {
        note.push_str(&format!(" ({merged} merged blocks skipped)"));
    }
    Ok(vec![fit.with_note(note), line, umb])
}

/// Names accepted by [`run_suite`].
pub const SUITES: &[&str] = &["eigenframe", "level-set", "structure", "codazzi", "umbilic", "bhh", "symmetry"];

/// Run one named suite on an evolved chart.
pub fn run_suite(name: &str, ev: &EvolvedChart, tol: &Tolerances) -> Result<Vec<ResidualReport>> {
    let n = ev.n();
    let v = ev.profile.validity.1;
    match name {
        "eigenframe" => {
            let mut out = eigenframe_suite(ev, 0.8, 4, tol)?;
            out.push(first_integral_report(ev, tol));
            Ok(out)
        }
        "level-set" => {
            let levels: Vec<f64> = [-0.6, -0.3, 0.0, 0.3, 0.6].iter().map(|f| f * v).collect();
            evolved_level_suite(ev, &levels, tol)
        }
        "structure" => structure_suite(ev, 10, tol),
        "codazzi" => {
            let om = OrthoMetric::from_chart(ev);
            let pts = ev.interior(0.8).grid(3);
            Ok(vec![codazzi_report(&om, &pts, tol.codazzi), codazzi_negative_control(tol)?])
        }
        "umbilic" => umbilic_suite(ev, tol),
        "bhh" => {
            let mut b = ev.interior(0.8);
            b.lo[n - 1] = b.lo[n - 1].max(-0.5);
            b.hi[n - 1] = b.hi[n - 1].min(0.5);
            let mut counts = vec![3; n];
            counts[n - 1] = 11;
            Ok(vec![bhh_properness_check(ev, &b.grid_with(&counts), tol.bhh_floor)?])
        }
        "symmetry" => Ok(vec![symmetry_check(ev, 0.05, tol)?]),
        other => Err(Error::InvalidParameter(format!(
            "unknown suite {other} (expected one of {})",
            SUITES.join(", ")
        ))),
    }
}
