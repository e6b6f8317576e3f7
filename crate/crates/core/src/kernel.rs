//! Pointwise differential geometry of an immersed hypersurface.
//!
//! Every quantity is obtained by pushing the chart's jet through the
//! curvature pipeline (metric, unit normal, second fundamental form, shape
//! operator, mean curvature). Derivatives of `h` and `N` are therefore exact
//! to rounding; no finite differences are taken.
//!
//! Conventions: `A = g⁻¹ II` with `II_ij = ⟨X_{,ij}, N⟩`, so `N_{,j} = −A^i_j X_{,i}`;
//! `h = tr A / n` and `H = hN`, which gives `ΔX = nH`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::chart::{check_point, Chart, ScalarField};
use crate::error::{Error, Result};
use crate::jet::{dot, Jet, JetSpace};
use crate::linalg::{invert, matmul, norm, values, JetMatrix};

/// Below this determinant the metric is treated as degenerate.
pub const GRAM_EPS: f64 = 1e-10;
/// Relative gap under which principal curvatures form one multiplicity block.
pub const CLUSTER_TOL: f64 = 1e-7;
/// Gaps between `CLUSTER_TOL` and this multiple of it are reported as ambiguous.
const AMBIGUITY_FACTOR: f64 = 10.0;

/// Jets of the induced metric of any immersion (no normal needed).
#[derive(Debug, Clone)]
pub struct MetricJets {
    pub n: usize,
    pub x: Vec<Jet>,
    /// `xi[i]` is the ambient vector `X_{,i}`.
    pub xi: Vec<Vec<Jet>>,
    pub g: JetMatrix,
    pub g_inv: JetMatrix,
    pub det_g: Jet,
    pub sqrt_det: Jet,
}

impl MetricJets {
    pub fn compute(chart: &dyn Chart, p: &[f64], order: usize) -> Result<Self> {
        let cj = crate::chart::jet(chart, p, order)?;
        Self::from_position(cj.components, chart.dim_domain())
    }

    pub fn from_position(x: Vec<Jet>, n: usize) -> Result<Self> {
        let xi: Vec<Vec<Jet>> = (0..n)
            .map(|i| x.iter().map(|c| c.derivative(i)).collect())
            .collect();
        let g: JetMatrix = (0..n)
            .map(|i| (0..n).map(|j| dot(&xi[i], &xi[j])).collect())
            .collect();
        let (g_inv, det_g) = invert(&g).map_err(|_| Error::DegenerateMetric { det: 0.0 })?;
        if det_g.value() <= GRAM_EPS {
            return Err(Error::DegenerateMetric { det: det_g.value() });
        }
        let sqrt_det = det_g.sqrt();
        Ok(Self {
            n,
            x,
            xi,
            g,
            g_inv,
            det_g,
            sqrt_det,
        })
    }

    /// Jacobian (ambient × n) at the point.
    pub fn jacobian(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.x.len(), self.n, |k, i| self.xi[i][k].value())
    }

    /// Coordinate gradient `g^{ij} f_{,j}` at the point.
    pub fn gradient(&self, f: &Jet) -> Vec<f64> {
        let df: Vec<f64> = (0..self.n).map(|j| f.d1(j)).collect();
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.g_inv[i][j].value() * df[j]).sum())
            .collect()
    }

    /// Ambient vector `Σ v^i X_{,i}` of a coordinate tangent vector.
    pub fn push_forward(&self, v: &[f64]) -> Vec<f64> {
        (0..self.x.len())
            .map(|k| (0..self.n).map(|i| v[i] * self.xi[i][k].value()).sum())
            .collect()
    }

    pub fn laplacian(&self, f: &Jet) -> Jet {
        laplace_beltrami_jet(&self.g_inv, &self.sqrt_det, f)
    }
}

/// `(1/√|g|) (√|g| g^{ij} f_{,i})_{,j}` as a jet (two orders lower than `f`).
pub fn laplace_beltrami_jet(g_inv: &JetMatrix, sqrt_det: &Jet, f: &Jet) -> Jet {
    let n = g_inv.len();
    let df: Vec<Jet> = (0..n).map(|i| f.derivative(i)).collect();
    let mut div: Option<Jet> = None;
    for j in 0..n {
        let col: Vec<Jet> = (0..n).map(|i| g_inv[i][j].clone()).collect();
        let flux = sqrt_det * &dot(&col, &df);
        let term = flux.derivative(j);
        div = Some(match div {
            Some(d) => &d + &term,
            None => term,
        });
    }
    &div.expect("n >= 1") / sqrt_det
}

/// Jets of the full extrinsic curvature pipeline of a hypersurface chart.
#[derive(Debug, Clone)]
pub struct SurfaceJets {
    pub metric: MetricJets,
    pub normal: Vec<Jet>,
    pub ii: JetMatrix,
    pub shape: JetMatrix,
    pub h: Jet,
    pub a_norm2: Jet,
    pub convention: &'static str,
}

impl SurfaceJets {
    /// `order` is the chart jet order; `h` comes out two orders lower.
    pub fn compute(chart: &dyn Chart, p: &[f64], order: usize) -> Result<Self> {
        let (n, m) = (chart.dim_domain(), chart.dim_ambient());
        if m != n + 1 {
            return Err(Error::NotHypersurface { domain: n, ambient: m });
        }
        check_point(chart, p)?;
        let metric = MetricJets::compute(chart, p, order)?;
        let normal = unit_normal(&metric, chart.normal_hint(p).as_deref());

        let ii: JetMatrix = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let xij: Vec<Jet> = metric.xi[i].iter().map(|c| c.derivative(j)).collect();
                        dot(&xij, &normal)
                    })
                    .collect()
            })
            .collect();
        let shape = matmul(&metric.g_inv, &ii);
        let mut trace = shape[0][0].clone();
        for (i, row) in shape.iter().enumerate().skip(1) {
            trace = &trace + &row[i];
        }
        let h = trace / n as f64;
        let a2 = matmul(&shape, &shape);
        let mut a_norm2 = a2[0][0].clone();
        for (i, row) in a2.iter().enumerate().skip(1) {
            a_norm2 = &a_norm2 + &row[i];
        }
        Ok(Self {
            metric,
            normal,
            ii,
            shape,
            h,
            a_norm2,
            convention: chart.convention(),
        })
    }

    pub fn n(&self) -> usize {
        self.metric.n
    }

    pub fn normal_value(&self) -> Vec<f64> {
        self.normal.iter().map(Jet::value).collect()
    }
}

/// Unit normal jet, oriented along `hint` when given, else so that
/// `det[X_{,1}, …, X_{,n}, N] > 0`.
fn unit_normal(metric: &MetricJets, hint: Option<&[f64]>) -> Vec<Jet> {
    let n = metric.n;
    let m = metric.x.len();
    // pick the ambient axis least tangent to the surface
    let jac = metric.jacobian();
    let ginv = values(&metric.g_inv);
    let proj = &jac * &ginv * jac.transpose();
    let axis = (0..m)
        .max_by(|&a, &b| (1.0 - proj[(a, a)]).total_cmp(&(1.0 - proj[(b, b)])))
        .unwrap();

    // w = e_axis − Σ X_{,i} g^{ij} ⟨X_{,j}, e_axis⟩
    let coeff: Vec<Jet> = (0..n)
        .map(|i| {
            let col: Vec<Jet> = (0..n).map(|j| metric.xi[j][axis].clone()).collect();
            dot(&metric.g_inv[i], &col)
        })
        .collect();
    let mut w: Vec<Jet> = (0..m)
        .map(|k| {
            let comps: Vec<Jet> = (0..n).map(|i| metric.xi[i][k].clone()).collect();
            -dot(&comps, &coeff)
        })
        .collect();
    w[axis] = &w[axis] + 1.0;
    let len = dot(&w, &w).sqrt();
    let inv_len = len.recip();
    let mut normal: Vec<Jet> = w.iter().map(|c| c * &inv_len).collect();

    let value: Vec<f64> = normal.iter().map(Jet::value).collect();
    let flip = match hint {
        Some(hv) => crate::linalg::dot_f(&value, hv) < 0.0,
        None => {
            let mut frame = jac.clone().insert_column(n, 0.0);
            for k in 0..m {
                frame[(k, n)] = value[k];
            }
            frame.determinant() < 0.0
        }
    };
    if flip {
        normal = normal.into_iter().map(|c| -c).collect();
    }
    normal
}

/// A group of (numerically) equal principal curvatures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub start: usize,
    pub len: usize,
    pub value: f64,
}

/// Pointwise curvature of a hypersurface chart.
#[derive(Debug, Clone)]
pub struct CurvatureData {
    pub point: Vec<f64>,
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub det_g: f64,
    pub sqrt_det: f64,
    pub ii: DMatrix<f64>,
    /// Shape operator `g⁻¹ II` in coordinates.
    pub shape: DMatrix<f64>,
    /// Principal curvatures, ascending.
    pub lambdas: Vec<f64>,
    /// g-orthonormal principal directions (coordinate components), one per column.
    pub frames: DMatrix<f64>,
    pub blocks: Vec<Block>,
    pub h: f64,
    pub a_norm2: f64,
    pub normal: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    pub convention: &'static str,
}

impl CurvatureData {
    pub fn from_jets(sj: &SurfaceJets, point: &[f64]) -> Result<Self> {
        let g = values(&sj.metric.g);
        let ii = values(&sj.ii);
        let (lambdas, frames) = principal_curvatures(&g, &ii)?;
        let blocks = cluster(&lambdas)?;
        Ok(Self {
            point: point.to_vec(),
            g_inv: values(&sj.metric.g_inv),
            det_g: sj.metric.det_g.value(),
            sqrt_det: sj.metric.sqrt_det.value(),
            shape: values(&sj.shape),
            lambdas,
            frames,
            blocks,
            h: sj.h.value(),
            a_norm2: sj.a_norm2.value(),
            normal: sj.normal_value(),
            jacobian: sj.metric.jacobian(),
            convention: sj.convention,
            g,
            ii,
        })
    }

    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    /// Ambient vector of the `k`-th principal direction.
    pub fn frame_ambient(&self, k: usize) -> Vec<f64> {
        let v = &self.jacobian * self.frames.column(k);
        v.iter().copied().collect()
    }

    /// Block containing the eigenvalue closest to `value`.
    pub fn block_near(&self, value: f64) -> &Block {
        self.blocks
            .iter()
            .min_by(|a, b| libm::fabs(a.value - value).total_cmp(&libm::fabs(b.value - value)))
            .expect("at least one block")
    }
}

/// Solve `II v = λ g v` through the Cholesky factor of `g`.
pub fn principal_curvatures(g: &DMatrix<f64>, ii: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = g.nrows();
    let chol = g
        .clone()
        .cholesky()
        .ok_or(Error::DegenerateMetric { det: g.determinant() })?;
    let l = chol.l();
    let left = l.solve_lower_triangular(ii).expect("nonsingular factor");
    let m = l
        .solve_lower_triangular(&left.transpose())
        .expect("nonsingular factor")
        .transpose();
    let sym = (&m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lambdas: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let w = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    let frames = l
        .transpose()
        .solve_upper_triangular(&w)
        .expect("nonsingular factor");
    Ok((lambdas, frames))
}

/// Group sorted eigenvalues into multiplicity blocks.
pub fn cluster(lambdas: &[f64]) -> Result<Vec<Block>> {
    cluster_with(lambdas, CLUSTER_TOL)
}

pub fn cluster_with(lambdas: &[f64], tol: f64) -> Result<Vec<Block>> {
    let scale = 1.0 + lambdas.iter().fold(0.0f64, |m, x| m.max(libm::fabs(*x)));
    let eps = tol * scale;
    let mut blocks: Vec<Block> = Vec::new();
    for (k, &lam) in lambdas.iter().enumerate() {
        if let Some(last) = blocks.last_mut() {
            let gap = lam - lambdas[k - 1];
            if gap <= eps {
                last.len += 1;
                continue;
            }
            if gap <= AMBIGUITY_FACTOR * eps {
                return Err(Error::FrameAmbiguity {
                    a: lambdas[k - 1],
                    b: lam,
                });
            }
        }
        blocks.push(Block {
            start: k,
            len: 1,
            value: lam,
        });
    }
    for b in &mut blocks {
        b.value = lambdas[b.start..b.start + b.len].iter().sum::<f64>() / b.len as f64;
    }
    Ok(blocks)
}

/// Pointwise curvature data of a hypersurface chart.
pub fn curvature_at(chart: &dyn Chart, p: &[f64]) -> Result<CurvatureData> {
    let sj = SurfaceJets::compute(chart, p, 2)?;
    CurvatureData::from_jets(&sj, p)
}

/// Laplace–Beltrami operator of the induced metric applied to `f` at `p`.
pub fn laplace_beltrami(chart: &dyn Chart, f: &dyn ScalarField, p: &[f64]) -> Result<f64> {
    check_point(chart, p)?;
    let space = JetSpace::shared(chart.dim_domain(), 2);
    let vars = space.variables(p);
    let metric = MetricJets::from_position(chart.eval(&vars)?, chart.dim_domain())?;
    let fj = f.eval(&vars)?;
    Ok(metric.laplacian(&fj).value())
}

/// Componentwise `ΔX`.
pub fn position_laplacian(chart: &dyn Chart, p: &[f64]) -> Result<Vec<f64>> {
    let metric = MetricJets::compute(chart, p, 2)?;
    Ok(metric.x.iter().map(|c| metric.laplacian(c).value()).collect())
}

/// Tangential and normal parts of `ΔH`.
#[derive(Debug, Clone)]
pub struct DeltaHSplit {
    /// `2∇_{∇h}N − nh∇h = −(2A + nhI)∇h`, as an ambient vector.
    pub tangential: Vec<f64>,
    pub tangential_norm: f64,
    /// `Δh − |A|²h`.
    pub normal: f64,
    pub h: f64,
    pub grad_h: Vec<f64>,
    pub laplacian_h: f64,
    pub a_norm2: f64,
}

pub fn delta_h_split(chart: &dyn Chart, p: &[f64]) -> Result<DeltaHSplit> {
    let sj = SurfaceJets::compute(chart, p, 4)?;
    Ok(delta_h_split_from(&sj))
}

pub fn delta_h_split_from(sj: &SurfaceJets) -> DeltaHSplit {
    let n = sj.n();
    let h = sj.h.value();
    let grad = sj.metric.gradient(&sj.h);
    let shape = values(&sj.shape);
    let gv = DVector::from_column_slice(&grad);
    let tv = -(&shape * &gv * 2.0 + &gv * (n as f64 * h));
    let tangential = sj.metric.push_forward(tv.as_slice());
    let lap_h = sj.metric.laplacian(&sj.h).value();
    let a2 = sj.a_norm2.value();
    DeltaHSplit {
        tangential_norm: norm(&tangential),
        tangential,
        normal: lap_h - a2 * h,
        h,
        grad_h: grad,
        laplacian_h: lap_h,
        a_norm2: a2,
    }
}

/// Per-direction residuals `min(|∇_{e_i} h|, |nh + 2λ_i|)`.
#[derive(Debug, Clone)]
pub struct EigenframeResidual {
    pub residuals: Vec<f64>,
    pub max: f64,
    pub lambdas: Vec<f64>,
    pub h: f64,
    pub grad_h_norm: f64,
}

pub fn eigenframe_condition(chart: &dyn Chart, p: &[f64]) -> Result<EigenframeResidual> {
    let sj = SurfaceJets::compute(chart, p, 3)?;
    let cd = CurvatureData::from_jets(&sj, p)?;
    Ok(eigenframe_from(&sj, &cd))
}

pub fn eigenframe_from(sj: &SurfaceJets, cd: &CurvatureData) -> EigenframeResidual {
    let n = cd.n();
    let dh: Vec<f64> = (0..n).map(|j| sj.h.d1(j)).collect();
    // ∇_{e_k} h = dh(e_k) for g-orthonormal e_k
    let directional: Vec<f64> = (0..n)
        .map(|k| (0..n).map(|j| dh[j] * cd.frames[(j, k)]).sum())
        .collect();
    let mut residuals = vec![0.0; n];
    for b in &cd.blocks {
        let along = libm::sqrt(directional[b.start..b.start + b.len].iter().map(|x| x * x).sum());
        let cond = libm::fabs(n as f64 * cd.h + 2.0 * b.value);
        for r in &mut residuals[b.start..b.start + b.len] {
            *r = along.min(cond);
        }
    }
    let grad_h_norm = libm::sqrt(directional.iter().map(|x| x * x).sum());
    EigenframeResidual {
        max: residuals.iter().fold(0.0, |m, x| m.max(*x)),
        residuals,
        lambdas: cd.lambdas.clone(),
        h: cd.h,
        grad_h_norm,
    }
}

/// `ΔN` against `−|A|²N − ∇(nh)`.
#[derive(Debug, Clone)]
pub struct NormalLaplacianCheck {
    pub delta_n: Vec<f64>,
    pub predicted: Vec<f64>,
    pub defect: f64,
}

pub fn normal_laplacian_check(chart: &dyn Chart, p: &[f64]) -> Result<NormalLaplacianCheck> {
    let sj = SurfaceJets::compute(chart, p, 3)?;
    Ok(normal_laplacian_from(&sj))
}

pub fn normal_laplacian_from(sj: &SurfaceJets) -> NormalLaplacianCheck {
    let n = sj.n() as f64;
    let delta_n: Vec<f64> = sj.normal.iter().map(|c| sj.metric.laplacian(c).value()).collect();
    let grad = sj.metric.push_forward(&sj.metric.gradient(&sj.h));
    let a2 = sj.a_norm2.value();
    let predicted: Vec<f64> = sj
        .normal
        .iter()
        .zip(&grad)
        .map(|(nk, gk)| -a2 * nk.value() - n * gk)
        .collect();
    let defect = norm(&crate::linalg::sub_f(&delta_n, &predicted));
    NormalLaplacianCheck {
        delta_n,
        predicted,
        defect,
    }
}

/// Christoffel symbols `Γ^i_{jk}` (indexed `[i][j][k]`) of a metric given as jets
/// of order ≥ 1, from the general formula.
pub fn christoffel_jets(g: &JetMatrix, g_inv: &JetMatrix) -> Vec<Vec<Vec<Jet>>> {
    let n = g.len();
    // first-kind symbols Γ_{ljk} = ½(g_{lj,k} + g_{lk,j} − g_{jk,l})
    let first: Vec<Vec<Vec<Jet>>> = (0..n)
        .map(|l| {
            (0..n)
                .map(|j| {
                    (0..n)
                        .map(|k| {
                            (&(&g[l][j].derivative(k) + &g[l][k].derivative(j)) - &g[j][k].derivative(l)) * 0.5
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..n)
                        .map(|k| {
                            let col: Vec<Jet> = (0..n).map(|l| first[l][j][k].clone()).collect();
                            dot(&g_inv[i], &col)
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Christoffel symbols at `p` from the dense formula.
pub fn christoffel_dense(chart: &dyn Chart, p: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
    let metric = MetricJets::compute(chart, p, 2)?;
    let gamma = christoffel_jets(&metric.g, &metric.g_inv);
    Ok(gamma
        .iter()
        .map(|a| a.iter().map(|b| b.iter().map(Jet::value).collect()).collect())
        .collect())
}

/// Intrinsic Gaussian curvature `R_{1212}/det g` of a 2-dimensional chart.
pub fn gaussian_curvature(chart: &dyn Chart, p: &[f64]) -> Result<f64> {
    if chart.dim_domain() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: chart.dim_domain(),
        });
    }
    let metric = MetricJets::compute(chart, p, 3)?;
    let gamma = christoffel_jets(&metric.g, &metric.g_inv);
    let n = 2;
    // R^i_{jkl} = ∂_k Γ^i_{lj} − ∂_l Γ^i_{kj} + Γ^i_{km}Γ^m_{lj} − Γ^i_{lm}Γ^m_{kj}
    let riemann_up = |i: usize, j: usize, k: usize, l: usize| -> f64 {
        let mut r = gamma[i][l][j].d1(k) - gamma[i][k][j].d1(l);
        for m in 0..n {
            r += gamma[i][k][m].value() * gamma[m][l][j].value()
                - gamma[i][l][m].value() * gamma[m][k][j].value();
        }
        r
    };
    let r1212: f64 = (0..n).map(|m| metric.g[0][m].value() * riemann_up(m, 1, 0, 1)).sum();
    Ok(r1212 / metric.det_g.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::FnField;
    use crate::surfaces::{Catenoid, Plane, RoundCylinder, RoundSphere, Torus};

    #[test]
    fn sphere_is_umbilic_with_inward_normal() {
        for (n, r) in [(2, 1.0), (3, 2.0)] {
            let s = RoundSphere::new(n, r);
            let p = vec![0.9; n];
            let cd = curvature_at(&s, &p).unwrap();
            for l in &cd.lambdas {
                assert!((l - 1.0 / r).abs() < 1e-12);
            }
            assert!((cd.h - 1.0 / r).abs() < 1e-12);
            assert_eq!(cd.blocks.len(), 1);
            assert_eq!(cd.convention, "inward");
        }
    }

    #[test]
    fn cylinder_has_zero_and_inverse_radius() {
        let c = RoundCylinder::new(1, 1, 2.0);
        let cd = curvature_at(&c, &[0.3, 0.2]).unwrap();
        assert!(cd.lambdas[0].abs() < 1e-12);
        assert!((cd.lambdas[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn curvature_invariants() {
        let t = Torus::new(2.0, 0.7);
        let cd = curvature_at(&t, &[0.4, 1.1]).unwrap();
        let prod = &cd.g * &cd.g_inv;
        let eye = DMatrix::<f64>::identity(2, 2);
        assert!((prod - eye).norm() <= 1e-12 * cd.g.norm());
        let ga = &cd.g * &cd.shape;
        assert!((&ga - ga.transpose()).norm() <= 1e-10 * ga.norm());
        assert!((cd.shape.trace() - 2.0 * cd.h).abs() < 1e-14);
        let nn: f64 = cd.normal.iter().map(|x| x * x).sum();
        assert!((nn - 1.0).abs() < 1e-12);
        for i in 0..2 {
            let col: Vec<f64> = cd.jacobian.column(i).iter().copied().collect();
            assert!(crate::linalg::dot_f(&col, &cd.normal).abs() < 1e-12);
        }
        // Gauss equation: intrinsic curvature = product of principal curvatures
        let k = gaussian_curvature(&t, &[0.4, 1.1]).unwrap();
        assert!((k - cd.lambdas[0] * cd.lambdas[1]).abs() < 1e-10);
    }

    #[test]
    fn flat_laplacian_of_quadratic() {
        let plane = Plane::new(2);
        let f = FnField(|x: &[Jet]| &x[0] * &x[0] + &x[1] * &x[1]);
        assert!((laplace_beltrami(&plane, &f, &[0.3, -0.4]).unwrap() - 4.0).abs() < 1e-12);
        let c = FnField(|x: &[Jet]| x[0].constant_like(3.0));
        let s = RoundSphere::new(2, 1.0);
        assert!(laplace_beltrami(&s, &c, &[1.0, 0.5]).unwrap().abs() < 1e-14);
    }

    #[test]
    fn sphere_delta_h_split() {
        let r = 1.5;
        let s = RoundSphere::new(3, r);
        let d = delta_h_split(&s, &[1.0, 1.2, 0.3]).unwrap();
        assert!(d.tangential_norm < 1e-8);
        assert!((d.normal + 3.0 / (r * r * r)).abs() < 1e-9);
        let nl = normal_laplacian_check(&s, &[1.0, 1.2, 0.3]).unwrap();
        assert!(nl.defect < 1e-8);
        let cd = curvature_at(&s, &[1.0, 1.2, 0.3]).unwrap();
        for (a, b) in nl.delta_n.iter().zip(&cd.normal) {
            assert!((a + 3.0 / (r * r) * b).abs() < 1e-9);
        }
    }

    #[test]
    fn catenoid_is_minimal() {
        let c = Catenoid::new(1.0);
        for p in [[0.2, 0.3], [-1.0, 1.1], [2.5, -0.9]] {
            let dx = position_laplacian(&c, &p).unwrap();
            assert!(norm(&dx) < 1e-8);
            let d = delta_h_split(&c, &p).unwrap();
            assert!(d.tangential_norm < 1e-8 && d.normal.abs() < 1e-8);
        }
    }

    #[test]
    fn errors_on_bad_points() {
        let s = RoundSphere::new(2, 1.0);
        assert!(matches!(curvature_at(&s, &[5.0, 0.0]), Err(Error::OutsideDomain { .. })));
        assert!(matches!(crate::chart::jet(&s, &[1.0, 0.0], 5), Err(Error::OrderTooHigh(5))));
    }

    #[test]
    fn clustering_groups_and_flags_near_collisions() {
        let b = cluster(&[0.1, 0.1 + 1e-9, 0.5]).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].len, 2);
        assert!(matches!(cluster(&[0.1, 0.1 + 5e-7]), Err(Error::FrameAmbiguity { .. })));
    }
}
