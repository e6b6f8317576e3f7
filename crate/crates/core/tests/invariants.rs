//! Property tests across modules: jets against finite differences, chart
//! reparametrization, curvature of round spheres, profile symmetry and
//! affine graphs.

use std::sync::Arc;

use biconserv_core::catalog::sphere_seed;
use biconserv_core::chart::{Chart, DomainBox};
use biconserv_core::evolve::{solve_profile, EvolveOptions};
use biconserv_core::expr::BoundExpr;
use biconserv_core::graph_lab::{biharmonic_graph_residuals, minimal_graph_residual, GraphChart};
use biconserv_core::jet::{Jet, JetSpace};
use biconserv_core::kernel::{curvature_at, position_laplacian};
use biconserv_core::surfaces::{RoundSphere, Torus};
use biconserv_core::Result;
use proptest::prelude::*;

/// `u ↦ base(s⊙u + b)` with positive scales.
struct Affine<C> {
    base: C,
    s: Vec<f64>,
    b: Vec<f64>,
    domain: DomainBox,
}

impl<C: Chart> Affine<C> {
    fn new(base: C, s: Vec<f64>, b: Vec<f64>) -> Self {
        let d = base.domain();
        let lo = (0..s.len()).map(|i| (d.lo[i] - b[i]) / s[i]).collect();
        let hi = (0..s.len()).map(|i| (d.hi[i] - b[i]) / s[i]).collect();
        Self {
            base,
            s,
            b,
            domain: DomainBox::new(lo, hi),
        }
    }

    fn forward(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.s).zip(&self.b).map(|((u, s), b)| s * u + b).collect()
    }
}

impl<C: Chart> Chart for Affine<C> {
    fn dim_domain(&self) -> usize {
        self.base.dim_domain()
    }
    fn dim_ambient(&self) -> usize {
        self.base.dim_ambient()
    }
    fn domain(&self) -> &DomainBox {
        &self.domain
    }
    fn eval(&self, u: &[Jet]) -> Result<Vec<Jet>> {
        let x: Vec<Jet> = u
            .iter()
            .zip(&self.s)
            .zip(&self.b)
            .map(|((u, s), b)| &u.scale(*s) + &u.constant_like(*b))
            .collect();
        self.base.eval(&x)
    }
    fn normal_hint(&self, u: &[f64]) -> Option<Vec<f64>> {
        self.base.normal_hint(&self.forward(u))
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jets_match_finite_differences(x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let f = |v: &[Jet]| &(&v[0].sin() * &v[1].exp()) + &(&v[0].powi(3) / &(&v[1].powi(2) + &v[1].constant_like(1.0)));
        let fv = |a: f64, b: f64| a.sin() * b.exp() + a.powi(3) / (1.0 + b * b);
        let j = f(&JetSpace::shared(2, 2).variables(&[x, y]));
        prop_assert!((j.value() - fv(x, y)).abs() < 1e-14);
        let h = 1e-5;
        let fx = (fv(x + h, y) - fv(x - h, y)) / (2.0 * h);
        let fy = (fv(x, y + h) - fv(x, y - h)) / (2.0 * h);
        prop_assert!((j.d1(0) - fx).abs() < 1e-8);
        prop_assert!((j.d1(1) - fy).abs() < 1e-8);
        let k = 1e-3;
        let fxy = (fv(x + k, y + k) - fv(x + k, y - k) - fv(x - k, y + k) + fv(x - k, y - k)) / (4.0 * k * k);
        prop_assert!((j.partial(&[1, 1]).unwrap() - fxy).abs() < 1e-5);
    }

    #[test]
    fn pythagoras_holds_in_every_coefficient(x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let v = JetSpace::shared(2, 4).variables(&[x, y]);
        let t = &(&v[0] * &v[1]) + &v[1].sin();
        let one = &(&t.sin() * &t.sin()) + &(&t.cos() * &t.cos());
        prop_assert!((one.value() - 1.0).abs() < 1e-14);
        prop_assert!(one.coefficients()[1..].iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn round_spheres_have_curvature_one_over_r(r in 0.2f64..5.0, a in 0.3f64..2.8, b in -3.0f64..3.0) {
        let s = RoundSphere::new(2, r);
        let cd = curvature_at(&s, &[a, b]).unwrap();
        for l in &cd.lambdas {
            prop_assert!((l - 1.0 / r).abs() < 1e-11 * (1.0 + 1.0 / r));
        }
        // ΔX = n h N
        let lap = position_laplacian(&s, &[a, b]).unwrap();
        for (l, nk) in lap.iter().zip(&cd.normal) {
            prop_assert!((l - 2.0 * cd.h * nk).abs() < 1e-9 * (1.0 + 1.0 / r));
        }
    }

    #[test]
    fn curvature_survives_reparametrization(s0 in 0.5f64..2.0, s1 in 0.5f64..2.0, b0 in -0.3f64..0.3, b1 in -0.3f64..0.3,
                                           u0 in -0.5f64..0.5, u1 in -0.5f64..0.5) {
        let torus = Torus::new(2.0, 0.7);
        let re = Affine::new(Torus::new(2.0, 0.7), vec![s0, s1], vec![b0, b1]);
        let u = [u0, u1];
        let x = re.forward(&u);
        let a = curvature_at(&torus, &x).unwrap();
        let c = curvature_at(&re, &u).unwrap();
        prop_assert!((a.h - c.h).abs() < 1e-10);
        for (p, q) in sorted(a.lambdas.clone()).iter().zip(&sorted(c.lambdas.clone())) {
            prop_assert!((p - q).abs() < 1e-10);
        }
        let la = position_laplacian(&torus, &x).unwrap();
        let lc = position_laplacian(&re, &u).unwrap();
        for (p, q) in la.iter().zip(&lc) {
            prop_assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn affine_graphs_are_minimal_and_biharmonic(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0,
                                               x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let u = BoundExpr::parse("a*x1 + b*x2 + c").unwrap().bind("a", a).bind("b", b).bind("c", c);
        let gc = GraphChart::new(2, Arc::new(u), DomainBox::cube(2, -1.0, 1.0));
        prop_assert!(minimal_graph_residual(&gc, &[x, y]).unwrap().abs() < 1e-13);
        prop_assert!(biharmonic_graph_residuals(&gc, &[x, y]).unwrap().max_abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn sphere_profiles_are_even(n in 2usize..4, r in 0.5f64..3.0, t in 0.0f64..0.7) {
        let seed = sphere_seed(n, r).unwrap();
        let p = solve_profile(&seed, 0.8, &EvolveOptions::default()).unwrap();
        let (a, ap) = p.state_at(t).unwrap();
        let (b, bp) = p.state_at(-t).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
        prop_assert!((ap + bp).abs() < 1e-9);
        // convex: the seed curvatures are negative so α″ > 0 near 0
        prop_assert!(a >= 0.0);
    }
}
