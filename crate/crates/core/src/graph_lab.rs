//! Graphs `x ↦ (x, u(x))` and their minimal / biharmonic residuals.
//!
//! With `Q^l = (1/√|g|)(√|g| g^{kl})_{,k}` the Laplacian reads
//! `Δf = g^{kl} f_{,kl} + Q^l f_{,l}` and the bilaplacian is the same operator
//! applied to `F = Δf`. The horizontal part of `Δ²X` is `ΔQ^m`; the vertical
//! part is `Δ²u`, expanded here in full.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::chart::{check_point, Chart, DomainBox, ScalarField};
use crate::error::{Error, Result};
use crate::jet::{Jet, JetSpace};
use crate::linalg::{invert, JetMatrix};

/// Graph chart of a height function `u` over a box in `Rⁿ`.
#[derive(Clone)]
pub struct GraphChart {
    pub n: usize,
    pub u: Arc<dyn ScalarField>,
    domain: DomainBox,
    name: String,
}

impl core::fmt::Debug for GraphChart {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "GraphChart({})", self.name)
    }
}

impl GraphChart {
    pub fn new(n: usize, u: Arc<dyn ScalarField>, domain: DomainBox) -> Self {
        assert_eq!(domain.dim(), n);
        Self {
            n,
            u,
            domain,
            name: format!("graph:n={n}"),
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    fn u_jet(&self, p: &[f64], order: usize) -> Result<Jet> {
        check_point(self, p)?;
        let s = JetSpace::shared(self.n, order);
        self.u.eval(&s.variables(p))
    }

    /// `W`, `g` and the closed-form `g⁻¹ = I − ∇u∇uᵀ/W²` at `p`.
    pub fn metric(&self, p: &[f64]) -> Result<GraphMetric> {
        let u = self.u_jet(p, 1)?;
        let du: Vec<f64> = (0..self.n).map(|i| u.d1(i)).collect();
        let w2 = 1.0 + du.iter().map(|x| x * x).sum::<f64>();
        let n = self.n;
        let g = (0..n)
            .map(|i| (0..n).map(|j| delta(i, j) + du[i] * du[j]).collect())
            .collect();
        let g_inv = (0..n)
            .map(|i| (0..n).map(|j| delta(i, j) - du[i] * du[j] / w2).collect())
            .collect();
        Ok(GraphMetric {
            w: libm::sqrt(w2),
            g,
            g_inv,
        })
    }
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct GraphMetric {
    pub w: f64,
    pub g: Vec<Vec<f64>>,
    pub g_inv: Vec<Vec<f64>>,
}

impl Chart for GraphChart {
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
        let mut out = x.to_vec();
        out.push(self.u.eval(x)?);
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
        self.name.clone()
    }
}

/// Graph metric jets in closed form, plus `Q^l`.
struct GraphJets {
    n: usize,
    g_inv: JetMatrix,
    /// `Q^l = (1/√|g|)(√|g| g^{kl})_{,k}`, two orders below `u`.
    q: Vec<Jet>,
}

impl GraphJets {
    fn new(u: &Jet, n: usize) -> Result<Self> {
        let du: Vec<Jet> = (0..n).map(|i| u.derivative(i)).collect();
        let one = du[0].constant_like(1.0);
        let mut w2 = one.clone();
        for d in &du {
            w2 = &w2 + &(d * d);
        }
        let w = w2.sqrt();
        let inv_w2 = w2.recip();
        let g_inv: JetMatrix = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let t = &(&du[i] * &du[j]) * &inv_w2;
                        if i == j {
                            &one - &t
                        } else {
                            -t
                        }
                    })
                    .collect()
            })
            .collect();
        let inv_w = w.recip();
        let q = (0..n)
            .map(|l| {
                let mut acc: Option<Jet> = None;
                for k in 0..n {
                    let t = (&w * &g_inv[k][l]).derivative(k);
                    acc = Some(match acc {
                        Some(a) => &a + &t,
                        None => t,
                    });
                }
                &acc.expect("n >= 1") * &inv_w
            })
            .collect();
        Ok(Self { n, g_inv, q })
    }

    /// `g^{kl} f_{,kl} + Q^l f_{,l}`.
    fn laplacian(&self, f: &Jet) -> Jet {
        let n = self.n;
        let df: Vec<Jet> = (0..n).map(|l| f.derivative(l)).collect();
        let mut acc = f.constant_like(0.0).truncate(f.order().saturating_sub(2));
        for k in 0..n {
            let dfk = df[k].clone();
            for l in 0..n {
                acc = &acc + &(&self.g_inv[k][l] * &dfk.derivative(l));
            }
        }
        for l in 0..n {
            acc = &acc + &(&self.q[l] * &df[l]);
        }
        acc
    }
}

/// `(1 + |∇u|²) Δ₀u − u_{,i}u_{,j}u_{,ij}`, the minimal-graph operator with
/// its positive factor `W³` cleared. In two variables this is
/// `(1+u_y²)u_xx − 2u_xu_yu_xy + (1+u_x²)u_yy`.
pub fn minimal_graph_residual(gc: &GraphChart, p: &[f64]) -> Result<f64> {
    let u = gc.u_jet(p, 2)?;
    let n = gc.n;
    let du: Vec<f64> = (0..n).map(|i| u.d1(i)).collect();
    let hess = |i: usize, j: usize| u.derivative(i).d1(j);
    let grad2: f64 = du.iter().map(|x| x * x).sum();
    let lap: f64 = (0..n).map(|i| hess(i, i)).sum();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += du[i] * du[j] * hess(i, j);
        }
    }
    Ok((1.0 + grad2) * lap - quad)
}

/// `div(∇u / W)`, equal to [`minimal_graph_residual`] divided by `W³`.
pub fn minimal_graph_divergence(gc: &GraphChart, p: &[f64]) -> Result<f64> {
    let u = gc.u_jet(p, 2)?;
    let n = gc.n;
    let du: Vec<Jet> = (0..n).map(|i| u.derivative(i)).collect();
    let mut w2 = du[0].constant_like(1.0);
    for d in &du {
        w2 = &w2 + &(d * d);
    }
    let inv_w = w2.sqrt().recip();
    Ok((0..n).map(|i| (&du[i] * &inv_w).d1(i)).sum())
}

/// Components of `Δ²X` for a graph: horizontal `Δ²x_m` and vertical `Δ²u`.
#[derive(Debug, Clone)]
pub struct BiharmonicResiduals {
    pub horizontal: Vec<f64>,
    pub vertical: f64,
    /// `1 + ‖order-4 jet of u‖_∞`, used for scale-free tolerances.
    pub scale: f64,
}

impl BiharmonicResiduals {
    pub fn max_abs(&self) -> f64 {
        self.horizontal
            .iter()
            .chain(core::iter::once(&self.vertical))
            .fold(0.0, |m, x| m.max(libm::fabs(*x)))
    }

    pub fn normalized(&self) -> Self {
        Self {
            horizontal: self.horizontal.iter().map(|x| x / self.scale).collect(),
            vertical: self.vertical / self.scale,
            scale: 1.0,
        }
    }
}

pub fn biharmonic_graph_residuals(gc: &GraphChart, p: &[f64]) -> Result<BiharmonicResiduals> {
    let u = gc.u_jet(p, 4)?;
    let gj = GraphJets::new(&u, gc.n)?;
    // ΔQ^m = g^{ij} Q^m_{,ij} + Q^j Q^m_{,j}
    let horizontal = gj.q.iter().map(|qm| gj.laplacian(qm).value()).collect();
    let vertical = gj.laplacian(&gj.laplacian(&u)).value();
    let scale = 1.0 + u.coefficients().iter().fold(0.0f64, |m, c| m.max(libm::fabs(*c)));
    Ok(BiharmonicResiduals {
        horizontal,
        vertical,
        scale,
    })
}

/// `Δ²f` on the graph metric via the non-divergence expansion.
pub fn bilaplacian_scalar(gc: &GraphChart, f: &dyn ScalarField, p: &[f64]) -> Result<f64> {
    check_point(gc, p)?;
    let s = JetSpace::shared(gc.n, 4);
    let vars = s.variables(p);
    let u = gc.u.eval(&vars)?;
    let fj = f.eval(&vars)?;
    if fj.order() < 4 {
        return Err(Error::OrderTooHigh(4));
    }
    let gj = GraphJets::new(&u, gc.n)?;
    Ok(gj.laplacian(&gj.laplacian(&fj)).value())
}

/// Closed-form graph metric inverse checked against elimination (for tests and suites).
pub fn metric_inverse_defect(gc: &GraphChart, p: &[f64]) -> Result<f64> {
    let m = gc.metric(p)?;
    let s = JetSpace::shared(gc.n, 0);
    let gj: JetMatrix = m
        .g
        .iter()
        .map(|row| row.iter().map(|v| s.constant(*v)).collect())
        .collect();
    let (inv, _) = invert(&gj)?;
    let mut worst = 0.0f64;
    for i in 0..gc.n {
        for j in 0..gc.n {
            worst = worst.max(libm::fabs(inv[i][j].value() - m.g_inv[i][j]));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::FnField;
    use crate::expr::BoundExpr;
    use crate::kernel::{curvature_at, laplace_beltrami_jet, MetricJets};
    use core::f64::consts::FRAC_PI_2;

    fn graph(src: &str, n: usize, lo: f64, hi: f64) -> GraphChart {
        GraphChart::new(n, Arc::new(BoundExpr::parse(src).unwrap()), DomainBox::cube(n, lo, hi))
    }

    fn scherk() -> GraphChart {
        let m = FRAC_PI_2 - 0.2;
        graph("log(cos(x2)) - log(cos(x1))", 2, -m, m)
    }

    /// Δ(Δf) through the divergence-form Laplacian on chart jets.
    fn composed(gc: &GraphChart, f: &dyn ScalarField, p: &[f64]) -> f64 {
        let s = JetSpace::shared(gc.n, 4);
        let vars = s.variables(p);
        let m = MetricJets::from_position(gc.eval(&vars).unwrap(), gc.n).unwrap();
        let f = f.eval(&vars).unwrap();
        laplace_beltrami_jet(&m.g_inv, &m.sqrt_det, &m.laplacian(&f)).value()
    }

    #[test]
    fn saddle_minimal_residual() {
        let gc = graph("x1^2 - x2^2", 2, -2.0, 2.0);
        assert_eq!(minimal_graph_residual(&gc, &[1.0, 0.0]).unwrap(), -8.0);
        let w3 = libm::pow(5.0, 1.5);
        assert!((minimal_graph_divergence(&gc, &[1.0, 0.0]).unwrap() + 8.0 / w3).abs() < 1e-14);
    }

    #[test]
    fn affine_graph_is_exactly_harmonic() {
        let gc = graph("2*x1 - 3*x2 + 1", 2, -1.0, 1.0);
        assert_eq!(minimal_graph_residual(&gc, &[0.3, 0.1]).unwrap(), 0.0);
        let r = biharmonic_graph_residuals(&gc, &[0.3, 0.1]).unwrap();
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn scherk_is_minimal_and_biharmonic() {
        let gc = scherk();
        for p in gc.domain().scaled(0.9).grid(5) {
            assert!(minimal_graph_residual(&gc, &p).unwrap().abs() < 1e-8);
            assert!(biharmonic_graph_residuals(&gc, &p).unwrap().max_abs() < 1e-6);
        }
    }

    #[test]
    fn flat_bilaplacian() {
        let gc = graph("0*x1", 1, -2.0, 2.0);
        let f = BoundExpr::parse("x1^4").unwrap();
        assert!((bilaplacian_scalar(&gc, &f, &[0.7]).unwrap() - 24.0).abs() < 1e-12);
        let flat2 = graph("0*x1 + 0*x2", 2, -2.0, 2.0);
        let harm = BoundExpr::parse("x1^3 - 3*x1*x2^2").unwrap();
        assert!(bilaplacian_scalar(&flat2, &harm, &[0.4, -0.3]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn expansion_matches_composition() {
        let gc = graph("x1^2 + x2^2", 2, -1.0, 1.0);
        let f = BoundExpr::parse("x1").unwrap();
        for p in gc.domain().scaled(0.8).grid(4) {
            let a = bilaplacian_scalar(&gc, &f, &p).unwrap();
            let b = composed(&gc, &f, &p);
            assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn vertical_residual_is_bilaplacian_of_height() {
        let gc = graph("x1^4", 1, -2.0, 2.0);
        let r = biharmonic_graph_residuals(&gc, &[1.0]).unwrap();
        let u = BoundExpr::parse("x1^4").unwrap();
        let x = BoundExpr::parse("x1").unwrap();
        assert!((r.vertical - composed(&gc, &u, &[1.0])).abs() < 1e-8 * (1.0 + r.vertical.abs()));
        assert!((r.horizontal[0] - composed(&gc, &x, &[1.0])).abs() < 1e-8 * (1.0 + r.horizontal[0].abs()));
    }

    #[test]
    fn fd_oracle_for_quartic_curve() {
        // Δ on the curve (x, x⁴) is (1/v)(f'/v)' with v = √(1+16x⁶); apply it twice on
        // a fine grid with central differences.
        let h = 1e-3;
        let v = |x: f64| libm::sqrt(1.0 + 16.0 * libm::pow(x, 6.0));
        let lap = |f: &dyn Fn(f64) -> f64, x: f64| {
            let fp = |y: f64| (f(y + h) - f(y - h)) / (2.0 * h) / v(y);
            (fp(x + h) - fp(x - h)) / (2.0 * h) / v(x)
        };
        let u = |x: f64| libm::pow(x, 4.0);
        let lu = |x: f64| lap(&u, x);
        let fd = lap(&lu, 1.0);
        let gc = graph("x1^4", 1, -2.0, 2.0);
        let r = biharmonic_graph_residuals(&gc, &[1.0]).unwrap();
        assert!((r.vertical - fd).abs() < 1e-4 * (1.0 + fd.abs()), "{} vs {}", r.vertical, fd);
    }

    #[test]
    fn closed_form_inverse_and_second_form_at_critical_point() {
        let gc = graph("x1^2*x2 + sin(x2)", 2, -1.0, 1.0);
        assert!(metric_inverse_defect(&gc, &[0.4, 0.7]).unwrap() < 1e-12);
        assert!(gc.metric(&[0.4, 0.7]).unwrap().w >= 1.0);
        // ∇u = 0 at the origin of x² + 3y² ⇒ II = Hess u, W = 1
        let bowl = GraphChart::new(
            2,
            Arc::new(FnField(|x: &[Jet]| &x[0] * &x[0] + &(&x[1] * &x[1]) * 3.0)),
            DomainBox::cube(2, -1.0, 1.0),
        );
        let cd = curvature_at(&bowl, &[0.0, 0.0]).unwrap();
        assert!((cd.ii[(0, 0)] - 2.0).abs() < 1e-14 && (cd.ii[(1, 1)] - 6.0).abs() < 1e-14);
        assert!((cd.sqrt_det - 1.0).abs() < 1e-14);
    }
}
