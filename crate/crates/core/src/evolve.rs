//! Normal evolution `X = Y + α(xₙ)N₀ + xₙeₙ` of an isoparametric seed.
//!
//! With `βᵢ = 1 − αλ₀ᵢ − xₙμ₀ᵢ` and `γ = 1/√(1+α′²)` the evolved chart has
//! `X_{,i} = βᵢY_{,i}`, unit normal `N = γ(N₀ − α′eₙ)` and principal curvatures
//! `λᵢ = γ(λ₀ᵢ − α′μ₀ᵢ)/βᵢ`, `λₙ = α″γ³`. The biconservative condition
//! `Σλᵢ + 3λₙ = 0` is the profile ODE `α″ = R(xₙ, α, α′)` with
//! `R(x,y,z) = −((1+z²)/3) Σ (λ₀ᵢ − zμ₀ᵢ)/(1 − λ₀ᵢy − xμ₀ᵢ)`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::catalog::IsoparSeed;
use crate::chart::{Chart, DomainBox};
use crate::error::{Error, Result};
use crate::jet::{Jet, JetSpace};
use crate::ode::{dopri5, hermite, OdeOptions, Stop};
use crate::quad::integrate;

/// Evolution stops before any `βᵢ` falls below this.
pub const EPS_FOCAL: f64 = 1e-3;
/// `|α′|` beyond this counts as blow-up of the profile.
const BLOWUP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub atol: f64,
    pub rtol: f64,
    pub eps_focal: f64,
    /// Samples per unit of `x_max` are at least `1/h_max_fraction`.
    pub h_max_fraction: f64,
    /// Target of the closed-form quadrature.
    pub quad_tol: f64,
    /// Integrate seeds with `Σλ₀ᵢ = 0` instead of rejecting them.
    pub allow_minimal: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            atol: 1e-10,
            rtol: 1e-10,
            eps_focal: EPS_FOCAL,
            h_max_fraction: 1.0 / 200.0,
            quad_tol: 1e-11,
            allow_minimal: false,
        }
    }
}

/// The constants of the profile equation, detached from the seed chart so a
/// profile reloaded from disk can still be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRhs {
    pub lambda0: Vec<f64>,
    pub mu0: Vec<f64>,
    pub eps_focal: f64,
}

impl ProfileRhs {
    pub fn from_seed(seed: &IsoparSeed, eps_focal: f64) -> Self {
        Self {
            lambda0: seed.lambda0.clone(),
            mu0: seed.mu0.clone(),
            eps_focal,
        }
    }

    pub fn betas(&self, x: f64, alpha: f64) -> Vec<f64> {
        self.lambda0
            .iter()
            .zip(&self.mu0)
            .map(|(l, m)| 1.0 - alpha * l - x * m)
            .collect()
    }

    fn check_focal(&self, x: f64, y: f64) -> Result<()> {
        for b in self.betas(x, y) {
            if !(b >= self.eps_focal) {
                return Err(Error::Focal { x, beta: b });
            }
        }
        Ok(())
    }

    /// `R(x, y, z)`.
    pub fn eval(&self, x: f64, y: f64, z: f64) -> Result<f64> {
        self.check_focal(x, y)?;
        let s: f64 = self
            .lambda0
            .iter()
            .zip(&self.mu0)
            .map(|(l, m)| (l - z * m) / (1.0 - l * y - x * m))
            .sum();
        Ok(-(1.0 + z * z) / 3.0 * s)
    }

    fn eval_jet(&self, x: &Jet, y: &Jet, z: &Jet) -> Jet {
        let mut s = x.constant_like(0.0);
        for (l, m) in self.lambda0.iter().zip(&self.mu0) {
            let num = &(z * -*m) + *l;
            let den = &(&(y * -*l) - &(x * *m)) + 1.0;
            s = &s + &(&num / &den);
        }
        let w = &(z * z) + 1.0;
        &w * &s * (-1.0 / 3.0)
    }

    /// `α, α′, …, α^{(order)}` at `x` from `(α, α′)` there, by Taylor recursion
    /// through the equation.
    pub fn taylor(&self, x: f64, alpha: f64, alpha_p: f64, order: usize) -> Result<[f64; 5]> {
        self.check_focal(x, alpha)?;
        let mut a = [0.0; 5];
        a[0] = alpha;
        a[1] = alpha_p;
        if order >= 2 {
            let sp = JetSpace::shared(1, order - 2);
            let d = sp.variable(0, 0.0);
            for k in 2..=order {
                // series of α and α′ around x with the coefficients known so far
                let mut al = sp.constant(a[0]);
                let mut ap = sp.constant(a[1]);
                let mut pw = sp.constant(1.0);
                for j in 1..k {
                    pw = &pw * &d;
                    al = &al + &(&pw * a[j]);
                    if j + 1 < k {
                        ap = &ap + &(&pw * (a[j + 1] * (j + 1) as f64));
                    }
                }
                let xs = &d + x;
                let r = self.eval_jet(&xs, &al, &ap);
                a[k] = r.coefficients()[k - 2] / (k * (k - 1)) as f64;
            }
        }
        // Taylor coefficients to derivatives
        let mut fact = 1.0;
        for (k, c) in a.iter_mut().enumerate() {
            if k > 1 {
                fact *= k as f64;
            }
            *c *= fact;
        }
        Ok(a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileMethod {
    Ode,
    ClosedForm,
}

/// Why a side of the validity interval ends where it does.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndReason {
    Reached,
    Focal,
    Blowup,
    Underflow,
    /// shortened to keep the interval symmetric
    Symmetry,
}

impl EndReason {
    pub fn as_str(self) -> &'static str {
        match self {
            EndReason::Reached => "reached",
            EndReason::Focal => "focal",
            EndReason::Blowup => "blowup",
            EndReason::Underflow => "underflow",
            EndReason::Symmetry => "symmetric",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "reached" => EndReason::Reached,
            "focal" => EndReason::Focal,
            "blowup" => EndReason::Blowup,
            "underflow" => EndReason::Underflow,
            "symmetric" => EndReason::Symmetry,
            _ => return None,
        })
    }
}

/// Sampled profile `α(xₙ)` on a symmetric validity interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub seed_spec: String,
    pub rhs: ProfileRhs,
    pub method: ProfileMethod,
    pub xs: Vec<f64>,
    pub alpha: Vec<f64>,
    pub alpha_p: Vec<f64>,
    pub alpha_pp: Vec<f64>,
    /// `[−v, v]`
    pub validity: (f64, f64),
    /// reasons for the (lower, upper) ends
    pub ends: (EndReason, EndReason),
}

impl ProfileCurve {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Sign of `α′` at sample `i` (the branch of the first integral).
    pub fn branch(&self, i: usize) -> i8 {
        let s = self.alpha_p[i];
        if s > 0.0 {
            1
        } else if s < 0.0 {
            -1
        } else {
            0
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.validity.0 && x <= self.validity.1
    }

    /// `(α, α′)` at `x` by cubic Hermite interpolation of the samples.
    pub fn state_at(&self, x: f64) -> Result<(f64, f64)> {
        if !self.contains(x) {
            return Err(Error::OutsideDomain { point: vec![x] });
        }
        let (a, _) = hermite(&self.xs, &self.alpha, &self.alpha_p, x).ok_or(Error::OutsideDomain { point: vec![x] })?;
        let (ap, _) = hermite(&self.xs, &self.alpha_p, &self.alpha_pp, x).ok_or(Error::OutsideDomain { point: vec![x] })?;
        Ok((a, ap))
    }

    /// `α` and its derivatives up to `order` at `x`.
    pub fn derivatives_at(&self, x: f64, order: usize) -> Result<[f64; 5]> {
        let (a, ap) = self.state_at(x)?;
        self.rhs.taylor(x, a, ap, order)
    }

    /// `λₙ = α″/(1+α′²)^{3/2}` at sample `i`.
    pub fn lambda_n(&self, i: usize) -> f64 {
        let w = 1.0 + self.alpha_p[i] * self.alpha_p[i];
        self.alpha_pp[i] / (w * libm::sqrt(w))
    }

    /// `|(1+α′²) − ∏βᵢ^{2/3}|` at every sample (meaningful for planar seeds).
    pub fn first_integral_defect(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let lhs = 1.0 + self.alpha_p[i] * self.alpha_p[i];
                let rhs = energy(&self.rhs.lambda0, self.alpha[i]) + 1.0;
                libm::fabs(lhs - rhs)
            })
            .collect()
    }

    /// Keep the samples inside `[−v, v]`, adding interpolated end points.
    fn clip(&mut self, v: f64) -> Result<()> {
        let mut xs = Vec::new();
        let mut rows: Vec<(f64, f64)> = Vec::new();
        let push = |x: f64, xs: &mut Vec<f64>, rows: &mut Vec<(f64, f64)>, st: (f64, f64)| {
            xs.push(x);
            rows.push(st);
        };
        if self.xs[0] < -v {
            let st = self.interp_unchecked(-v)?;
            push(-v, &mut xs, &mut rows, st);
        }
        for i in 0..self.len() {
            let x = self.xs[i];
            if x >= -v && x <= v {
                push(x, &mut xs, &mut rows, (self.alpha[i], self.alpha_p[i]));
            }
        }
        if *self.xs.last().unwrap() > v {
            let st = self.interp_unchecked(v)?;
            push(v, &mut xs, &mut rows, st);
        }
        let app: Result<Vec<f64>> = xs
            .iter()
            .zip(&rows)
            .map(|(x, (a, ap))| self.rhs.eval(*x, *a, *ap))
            .collect();
        self.alpha_pp = app?;
        self.alpha = rows.iter().map(|r| r.0).collect();
        self.alpha_p = rows.iter().map(|r| r.1).collect();
        self.xs = xs;
        self.validity = (-v, v);
        Ok(())
    }

    fn interp_unchecked(&self, x: f64) -> Result<(f64, f64)> {
        let out = || Error::OutsideDomain { point: vec![x] };
        let (a, _) = hermite(&self.xs, &self.alpha, &self.alpha_p, x).ok_or_else(out)?;
        let (ap, _) = hermite(&self.xs, &self.alpha_p, &self.alpha_pp, x).ok_or_else(out)?;
        Ok((a, ap))
    }
}

/// `R(x, y, z)` for a seed at the default focal threshold.
pub fn ode_rhs(seed: &IsoparSeed, x: f64, y: f64, z: f64) -> Result<f64> {
    ProfileRhs::from_seed(seed, EPS_FOCAL).eval(x, y, z)
}

fn check_proper(seed: &IsoparSeed) -> Result<()> {
    let sum = seed.lambda_sum();
    let scale = seed.lambda0.iter().fold(0.0f64, |m, l| m.max(libm::fabs(*l)));
    if libm::fabs(sum) <= 1e-12 * (1.0 + scale) {
        return Err(Error::MinimalSeed { sum });
    }
    Ok(())
}

/// Integrate `α″ = R(xₙ, α, α′)`, `α(0) = α′(0) = 0` over `[−x_max, x_max]`
/// intersected with the validity interval.
pub fn solve_profile(seed: &IsoparSeed, x_max: f64, opts: &EvolveOptions) -> Result<ProfileCurve> {
    if !(x_max > 0.0) || !x_max.is_finite() {
        return Err(Error::InvalidParameter(format!("x_max must be positive, got {x_max}")));
    }
    if !opts.allow_minimal {
        check_proper(seed)?;
    }
    let rhs = ProfileRhs::from_seed(seed, opts.eps_focal);
    let ode = OdeOptions {
        atol: opts.atol,
        rtol: opts.rtol,
        h_max: x_max * opts.h_max_fraction,
        h_init: 1e-3 * x_max * opts.h_max_fraction,
        ..OdeOptions::default()
    };
    let run = |x_end: f64| -> Result<(crate::ode::Trajectory, EndReason)> {
        let f = |x: f64, y: &[f64]| Ok(vec![y[1], rhs.eval(x, y[0], y[1])?]);
        let accept = |x: f64, y: &[f64]| {
            rhs.check_focal(x, y[0])?;
            if libm::fabs(y[1]) > BLOWUP {
                return Err(Error::ValidityCollapse(x));
            }
            Ok(())
        };
        let t = dopri5(f, 0.0, &[0.0, 0.0], x_end, &ode, accept)?;
        let reason = match &t.stop {
            Stop::Reached => EndReason::Reached,
            Stop::Predicate(Error::Focal { .. }) | Stop::Underflow(Some(Error::Focal { .. })) => EndReason::Focal,
            Stop::Predicate(_) => EndReason::Blowup,
            Stop::Underflow(_) => EndReason::Underflow,
        };
        Ok((t, reason))
    };
    let (fwd, end_hi) = run(x_max)?;
    let (bwd, end_lo) = run(-x_max)?;
    let reach_hi = *fwd.xs.last().unwrap();
    let reach_lo = -*bwd.xs.last().unwrap();
    let v = reach_hi.min(reach_lo);
    if !(v > 1e-8 * x_max) {
        return Err(Error::ValidityCollapse(v));
    }

    let mut xs = Vec::new();
    let mut alpha = Vec::new();
    let mut alpha_p = Vec::new();
    let mut alpha_pp = Vec::new();
    for i in (1..bwd.xs.len()).rev() {
        xs.push(bwd.xs[i]);
        alpha.push(bwd.ys[i][0]);
        alpha_p.push(bwd.ys[i][1]);
        alpha_pp.push(bwd.dys[i][1]);
    }
    for i in 0..fwd.xs.len() {
        xs.push(fwd.xs[i]);
        alpha.push(fwd.ys[i][0]);
        alpha_p.push(fwd.ys[i][1]);
        alpha_pp.push(fwd.dys[i][1]);
    }
    let ends = (
        if reach_lo > v { EndReason::Symmetry } else { end_lo },
        if reach_hi > v { EndReason::Symmetry } else { end_hi },
    );
    let mut curve = ProfileCurve {
        seed_spec: seed.spec(),
        rhs,
        method: ProfileMethod::Ode,
        xs,
        alpha,
        alpha_p,
        alpha_pp,
        validity: (-reach_lo, reach_hi),
        ends,
    };
    curve.clip(v)?;
    Ok(curve)
}

/// `∏(1 − λ₀ᵢt)^{2/3} − 1`, computed without cancellation near `t = 0`.
fn energy(lambda0: &[f64], t: f64) -> f64 {
    let s: f64 = lambda0.iter().map(|l| libm::log1p(-l * t)).sum();
    libm::expm1(2.0 / 3.0 * s)
}

/// Closed-form solution for seeds with every `μ₀ᵢ = 0`: the first integral
/// `1 + α′² = ∏(1 − λ₀ᵢα)^{2/3}` and `x(α) = ∫₀^{√α} 2s/√(P(s²) − 1) ds`.
#[derive(Debug, Clone)]
pub struct ClosedForm {
    lambda0: Vec<f64>,
    tol: f64,
    /// tabulated `s = √α` and `x(s)`
    s_grid: Vec<f64>,
    x_grid: Vec<f64>,
    /// `dx/ds` on the grid
    dxds: Vec<f64>,
    /// largest `|x|` covered
    pub reach: f64,
    pub end: EndReason,
}

impl ClosedForm {
    pub fn new(seed: &IsoparSeed, x_max: f64, opts: &EvolveOptions) -> Result<Self> {
        if !seed.is_planar() {
            return Err(Error::NotClosedForm);
        }
        check_proper(seed)?;
        if seed.lambda_sum() > 0.0 {
            return Err(Error::NotClosedForm);
        }
        let lambda0 = seed.lambda0.clone();
        // s where some βᵢ = 1 − λ₀ᵢs² reaches ε_focal (only for positive λ₀ᵢ)
        let s_focal = lambda0
            .iter()
            .filter(|l| **l > 0.0)
            .map(|l| libm::sqrt((1.0 - opts.eps_focal) / l))
            .fold(f64::INFINITY, f64::min);
        let mut cf = Self {
            lambda0,
            tol: opts.quad_tol,
            s_grid: vec![0.0],
            x_grid: vec![0.0],
            dxds: Vec::new(),
            reach: 0.0,
            end: EndReason::Reached,
        };
        cf.dxds.push(cf.dx_ds(0.0));
        // march in s until x(s) covers x_max
        let mut ds = (x_max * opts.h_max_fraction).min(0.05);
        loop {
            let s0 = *cf.s_grid.last().unwrap();
            let x0 = *cf.x_grid.last().unwrap();
            if x0 >= x_max {
                break;
            }
            let mut s1 = s0 + ds;
            if s1 >= s_focal {
                s1 = s_focal;
                cf.end = EndReason::Focal;
            }
            if s1 <= s0 {
                break;
            }
            let q = integrate(|s| cf.dx_ds(s), s0, s1, cf.tol * 1e-2, 0.0)?;
            cf.s_grid.push(s1);
            cf.x_grid.push(x0 + q.value);
            cf.dxds.push(cf.dx_ds(s1));
            if cf.end == EndReason::Focal {
                break;
            }
            // keep x steps comparable to the requested resolution
            let dx = q.value;
            if dx > 0.0 {
                ds *= ((x_max * opts.h_max_fraction) / dx).clamp(0.5, 2.0);
            }
        }
        cf.reach = cf.x_grid.last().unwrap().min(x_max);
        if !(cf.reach > 0.0) {
            return Err(Error::ValidityCollapse(0.0));
        }
        Ok(cf)
    }

    /// `P(s²) − 1`
    fn p_minus_one(&self, s: f64) -> f64 {
        energy(&self.lambda0, s * s)
    }

    /// `dx/ds = 2s/√(P(s²) − 1)`, with its finite limit at `s = 0`.
    fn dx_ds(&self, s: f64) -> f64 {
        if s == 0.0 {
            let c = -2.0 / 3.0 * self.lambda0.iter().sum::<f64>();
            return 2.0 / libm::sqrt(c);
        }
        2.0 * s / libm::sqrt(self.p_minus_one(s))
    }

    /// `x(s)` by quadrature from the nearest tabulated node.
    fn x_of_s(&self, s: f64) -> Result<f64> {
        let i = self.s_grid.partition_point(|&t| t <= s).clamp(1, self.s_grid.len()) - 1;
        let q = integrate(|t| self.dx_ds(t), self.s_grid[i], s, self.tol * 1e-2, 0.0)?;
        Ok(self.x_grid[i] + q.value)
    }

    /// `(α, α′)` at `x` (even extension with `α′` odd).
    pub fn state(&self, x: f64) -> Result<(f64, f64)> {
        let ax = libm::fabs(x);
        if ax > self.reach * (1.0 + 1e-14) {
            return Err(Error::OutsideDomain { point: vec![x] });
        }
        if ax == 0.0 {
            return Ok((0.0, 0.0));
        }
        // monotone initial guess: Hermite on s(x) with ds/dx = 1/(dx/ds)
        let dsdx: Vec<f64> = self.dxds.iter().map(|d| 1.0 / d).collect();
        let (mut s, _) = hermite(&self.x_grid, &self.s_grid, &dsdx, ax).expect("within table");
        for _ in 0..20 {
            let g = self.x_of_s(s)? - ax;
            let step = g / self.dx_ds(s);
            s -= step;
            if libm::fabs(step) <= 1e-15 * (1.0 + s) {
                break;
            }
        }
        let alpha = s * s;
        let slope = libm::sqrt(self.p_minus_one(s));
        Ok((alpha, if x < 0.0 { -slope } else { slope }))
    }

    /// `α″ = −(P/3) Σ λ₀ᵢ/βᵢ`.
    pub fn alpha_pp(&self, alpha: f64) -> f64 {
        let p = energy(&self.lambda0, alpha) + 1.0;
        -(p / 3.0) * self.lambda0.iter().map(|l| l / (1.0 - l * alpha)).sum::<f64>()
    }

    /// `λₙ = −(1/3)(Σ λ₀ᵢ/βᵢ) ∏ βᵢ^{−1/3}`.
    pub fn lambda_n(&self, alpha: f64) -> f64 {
        let betas: Vec<f64> = self.lambda0.iter().map(|l| 1.0 - l * alpha).collect();
        let s: f64 = self.lambda0.iter().zip(&betas).map(|(l, b)| l / b).sum();
        let log_prod: f64 = betas.iter().map(|b| libm::log(*b)).sum();
        -s / 3.0 * libm::exp(-log_prod / 3.0)
    }
}

/// Closed-form profile sampled on `2·m + 1` equispaced points of `[−v, v]`,
/// `m = 1/h_max_fraction`.
pub fn closed_form_profile(seed: &IsoparSeed, x_max: f64, opts: &EvolveOptions) -> Result<ProfileCurve> {
    if !(x_max > 0.0) || !x_max.is_finite() {
        return Err(Error::InvalidParameter(format!("x_max must be positive, got {x_max}")));
    }
    let cf = ClosedForm::new(seed, x_max, opts)?;
    let v = cf.reach;
    let m = libm::round(1.0 / opts.h_max_fraction) as usize;
    let xs: Vec<f64> = (0..=2 * m).map(|i| -v + v * i as f64 / m as f64).collect();
    let mut alpha = Vec::with_capacity(xs.len());
    let mut alpha_p = Vec::with_capacity(xs.len());
    let mut alpha_pp = Vec::with_capacity(xs.len());
    for &x in &xs {
        let (a, ap) = cf.state(x)?;
        alpha.push(a);
        alpha_p.push(ap);
        alpha_pp.push(cf.alpha_pp(a));
    }
    let end = if v < x_max { cf.end } else { EndReason::Reached };
    Ok(ProfileCurve {
        seed_spec: seed.spec(),
        rhs: ProfileRhs::from_seed(seed, opts.eps_focal),
        method: ProfileMethod::ClosedForm,
        xs,
        alpha,
        alpha_p,
        alpha_pp,
        validity: (-v, v),
        ends: (end, end),
    })
}

/// Closed-form curvature data of the evolved chart at a level `xₙ`.
#[derive(Debug, Clone)]
pub struct EvolvedCurvatures {
    pub x_n: f64,
    pub alpha: f64,
    pub alpha_p: f64,
    pub alpha_pp: f64,
    pub betas: Vec<f64>,
    pub gamma: f64,
    /// `λ₁ … λ_{n−1}` in seed-coordinate order
    pub lambdas: Vec<f64>,
    pub lambda_n: f64,
    /// `h = (Σλᵢ + λₙ)/n`
    pub h: f64,
}

/// The evolved immersion of a seed along a profile.
#[derive(Debug, Clone)]
pub struct EvolvedChart {
    pub seed: IsoparSeed,
    pub profile: ProfileCurve,
    domain: DomainBox,
}

pub fn evolve(seed: &IsoparSeed, profile: &ProfileCurve) -> Result<EvolvedChart> {
    if profile.is_empty() || !(profile.validity.1 > profile.validity.0) {
        return Err(Error::ValidityCollapse(0.0));
    }
    if profile.rhs.lambda0 != seed.lambda0 || profile.rhs.mu0 != seed.mu0 {
        return Err(Error::InvalidParameter(format!(
            "profile was built for {} but the seed is {}",
            profile.seed_spec,
            seed.spec()
        )));
    }
    let domain = seed
        .domain()
        .product(&DomainBox::new(vec![profile.validity.0], vec![profile.validity.1]));
    Ok(EvolvedChart {
        seed: seed.clone(),
        profile: profile.clone(),
        domain,
    })
}

impl EvolvedChart {
    pub fn n(&self) -> usize {
        self.seed.n
    }

    /// Sampling box: the seed box shrunk to 80% around its center (clear of
    /// coordinate poles) times `fraction` of the validity interval.
    pub fn interior(&self, fraction: f64) -> DomainBox {
        let (lo, hi) = self.profile.validity;
        let c = 0.5 * (lo + hi);
        let xn = DomainBox::new(vec![c + fraction * (lo - c)], vec![c + fraction * (hi - c)]);
        self.seed.domain().scaled(0.8).product(&xn)
    }

    pub fn curvatures(&self, x_n: f64) -> Result<EvolvedCurvatures> {
        let d = self.profile.derivatives_at(x_n, 2)?;
        let (alpha, alpha_p, alpha_pp) = (d[0], d[1], d[2]);
        let betas = self.profile.rhs.betas(x_n, alpha);
        let gamma = 1.0 / libm::sqrt(1.0 + alpha_p * alpha_p);
        let lambdas: Vec<f64> = self
            .seed
            .lambda0
            .iter()
            .zip(&self.seed.mu0)
            .zip(&betas)
            .map(|((l, m), b)| gamma * (l - alpha_p * m) / b)
            .collect();
        let lambda_n = alpha_pp * gamma * gamma * gamma;
        let h = (lambdas.iter().sum::<f64>() + lambda_n) / self.n() as f64;
        Ok(EvolvedCurvatures {
            x_n,
            alpha,
            alpha_p,
            alpha_pp,
            betas,
            gamma,
            lambdas,
            lambda_n,
            h,
        })
    }

    /// `N = γ(N₀ − α′eₙ)` at a domain point.
    pub fn closed_form_normal(&self, p: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        let f = self.seed.frame_at(&p[..n - 1], 0)?;
        let (_, ap) = self.profile.state_at(p[n - 1])?;
        let g = 1.0 / libm::sqrt(1.0 + ap * ap);
        Ok(f.n0.iter().zip(&f.en).map(|(a, e)| g * (a.value() - ap * e.value())).collect())
    }

    /// `vᵢ² = v₀ᵢ²βᵢ²` and `vₙ² = 1 + α′²` at a domain point.
    pub fn closed_form_weights(&self, p: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        let v0 = self.seed.metric_weights(&p[..n - 1])?;
        let (a, ap) = self.profile.state_at(p[n - 1])?;
        let betas = self.profile.rhs.betas(p[n - 1], a);
        let mut out: Vec<f64> = v0.iter().zip(&betas).map(|(v, b)| v * v * b * b).collect();
        out.push(1.0 + ap * ap);
        Ok(out)
    }
}

/// `Σᵢ λᵢ = γ Σ (λ₀ᵢ − α′μ₀ᵢ)/βᵢ` over the seed directions.
pub fn mean_curvature_sum(evolved: &EvolvedChart, x_n: f64) -> Result<f64> {
    Ok(evolved.curvatures(x_n)?.lambdas.iter().sum())
}

impl Chart for EvolvedChart {
    fn dim_domain(&self) -> usize {
        self.seed.n
    }
    fn dim_ambient(&self) -> usize {
        self.seed.n + 1
    }
    fn domain(&self) -> &DomainBox {
        &self.domain
    }
    fn eval(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        let n = self.seed.n;
        let f = self.seed.frame(&x[..n - 1])?;
        let xn = &x[n - 1];
        let order = xn.order();
        let d = self.profile.derivatives_at(xn.value(), order)?;
        let alpha = xn.compose(&d[..=order]);
        Ok(f.y
            .iter()
            .zip(&f.n0)
            .zip(&f.en)
            .map(|((y, n0), e)| &(y + &(&alpha * n0)) + &(xn * e))
            .collect())
    }
    fn normal_hint(&self, p: &[f64]) -> Option<Vec<f64>> {
        let f = self.seed.frame_at(&p[..self.seed.n - 1], 0).ok()?;
        Some(f.n0.iter().map(Jet::value).collect())
    }
    fn convention(&self) -> &'static str {
        "along N0 (h < 0)"
    }
    fn label(&self) -> String {
        format!("evolved:{}", self.seed.spec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{cylinder_seed, hyperplane_seed, product_sphere_seed, sphere_seed};
    use crate::kernel::{curvature_at, eigenframe_condition, SurfaceJets};

    fn opts() -> EvolveOptions {
        EvolveOptions::default()
    }

    #[test]
    fn rhs_examples() {
        let s = sphere_seed(2, 1.0).unwrap();
        assert!((ode_rhs(&s, 0.0, 0.0, 0.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        for (y, z) in [(0.5, 0.3), (2.0, -1.5)] {
            let want = (1.0 + z * z) / (3.0 * (1.0 + y));
            assert!((ode_rhs(&s, 0.0, y, z).unwrap() - want).abs() < 1e-15);
            assert_eq!(ode_rhs(&s, 0.7, y, z).unwrap(), ode_rhs(&s, -3.0, y, z).unwrap());
        }
        let p = product_sphere_seed(1, 2, 1.0, 2.0).unwrap();
        assert!((ode_rhs(&p, 0.0, 0.0, 0.0).unwrap() + p.lambda_sum() / 3.0).abs() < 1e-15);
        assert!(matches!(ode_rhs(&s, 0.0, -0.9995, 0.0), Err(Error::Focal { .. })));
    }

    #[test]
    fn taylor_recursion_matches_hand_series() {
        // α″ = (1+α′²)/(3(1+α)): α″(0) = 1/3 and α‴(0) = 0; higher terms are
        // checked against finite differences
        let s = sphere_seed(2, 1.0).unwrap();
        let rhs = ProfileRhs::from_seed(&s, EPS_FOCAL);
        let d = rhs.taylor(0.0, 0.0, 0.0, 4).unwrap();
        assert_eq!(d[0], 0.0);
        assert!((d[2] - 1.0 / 3.0).abs() < 1e-15);
        assert!(d[3].abs() < 1e-15);
        // α⁗ = d²/dx² R along the solution; with α = x²/6 + c x⁴, R = (1+α′²)/(3(1+α))
        // gives R'' (0) = (2α″²)/3 − α″/3 = 2/27 − 1/9 = −1/27
        assert!((d[4] + 1.0 / 27.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_profile_near_origin_and_evenness() {
        let s = sphere_seed(2, 1.0).unwrap();
        let c = solve_profile(&s, 1.0, &opts()).unwrap();
        assert_eq!(c.validity, (-1.0, 1.0));
        assert_eq!(c.ends, (EndReason::Reached, EndReason::Reached));
        let i0 = c.xs.iter().position(|x| *x == 0.0).unwrap();
        assert_eq!((c.alpha[i0], c.alpha_p[i0]), (0.0, 0.0));
        assert!((c.alpha_pp[i0] - 1.0 / 3.0).abs() < 1e-15);
        let (a, _) = c.state_at(0.01).unwrap();
        assert!((a - 1e-4 / 6.0).abs() < 1e-9);
        for x in [0.1, 0.37, 0.9] {
            let (a1, p1) = c.state_at(x).unwrap();
            let (a2, p2) = c.state_at(-x).unwrap();
            assert!((a1 - a2).abs() < 1e-12 && (p1 + p2).abs() < 1e-12);
        }
        assert!(c.first_integral_defect().iter().all(|d| *d < 1e-9));
    }

    #[test]
    fn minimal_seed_and_bad_range_are_rejected() {
        let h = hyperplane_seed(2).unwrap();
        assert!(matches!(solve_profile(&h, 1.0, &opts()), Err(Error::MinimalSeed { .. })));
        let flat = solve_profile(&h, 1.0, &EvolveOptions { allow_minimal: true, ..opts() }).unwrap();
        assert!(flat.alpha.iter().chain(&flat.alpha_p).all(|a| *a == 0.0));
        let s = sphere_seed(2, 1.0).unwrap();
        assert!(solve_profile(&s, 0.0, &opts()).is_err());
        let p = product_sphere_seed(1, 1, 1.0, 1.0).unwrap();
        assert!(matches!(closed_form_profile(&p, 1.0, &opts()), Err(Error::NotClosedForm)));
    }

    #[test]
    fn closed_form_agrees_with_ode() {
        for seed in [sphere_seed(2, 1.0).unwrap(), sphere_seed(4, 2.0).unwrap(), cylinder_seed(1, 1, 1.0).unwrap()] {
            let ode = solve_profile(&seed, 1.5, &opts()).unwrap();
            let cf = ClosedForm::new(&seed, 1.5, &opts()).unwrap();
            for (i, &x) in ode.xs.iter().enumerate() {
                let (a, ap) = cf.state(x).unwrap();
                assert!((a - ode.alpha[i]).abs() < 1e-8, "{} x={x}", seed.spec());
                assert!((ap - ode.alpha_p[i]).abs() < 1e-8);
                let w = 1.0 + ap * ap;
                let ln = cf.alpha_pp(a) / (w * libm::sqrt(w));
                assert!((ln - cf.lambda_n(a)).abs() < 1e-12);
            }
            assert!((cf.lambda_n(0.0) + seed.lambda_sum() / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn catenoidal_slope_formula() {
        // all λ₀ᵢ = −1: α′ = √((1+α)^{2(n−1)/3} − 1)
        let s = sphere_seed(3, 1.0).unwrap();
        let c = closed_form_profile(&s, 1.0, &opts()).unwrap();
        for i in 0..c.len() {
            let want = libm::sqrt(libm::pow(1.0 + c.alpha[i], 4.0 / 3.0) - 1.0);
            assert!((libm::fabs(c.alpha_p[i]) - want).abs() < 1e-12);
            assert_eq!(c.branch(i), if c.xs[i] > 0.0 { 1 } else if c.xs[i] < 0.0 { -1 } else { 0 });
        }
    }

    #[test]
    fn evolved_chart_restricts_to_seed_and_matches_closed_forms() {
        for seed in [
            sphere_seed(2, 1.0).unwrap(),
            sphere_seed(3, 2.0).unwrap(),
            product_sphere_seed(1, 1, 1.0, 1.0).unwrap(),
            product_sphere_seed(1, 2, 1.0, 1.5).unwrap(),
            cylinder_seed(1, 1, 1.0).unwrap(),
        ] {
            let prof = solve_profile(&seed, 0.6, &opts()).unwrap();
            let ev = evolve(&seed, &prof).unwrap();
            let n = seed.n;
            for p in ev.interior(0.8).grid(3) {
                let cd = curvature_at(&ev, &p).unwrap();
                let cf = ev.curvatures(p[n - 1]).unwrap();
                let mut want = cf.lambdas.clone();
                want.push(cf.lambda_n);
                want.sort_by(f64::total_cmp);
                for (a, b) in cd.lambdas.iter().zip(&want) {
                    assert!((a - b).abs() < 1e-7, "{} {p:?}: {a} vs {b}", seed.spec());
                }
                assert!(cf.h < 0.0);
                let nrm = ev.closed_form_normal(&p).unwrap();
                for (a, b) in cd.normal.iter().zip(&nrm) {
                    assert!((a - b).abs() < 1e-8);
                }
                let w = ev.closed_form_weights(&p).unwrap();
                for i in 0..n {
                    assert!((cd.g[(i, i)] - w[i]).abs() < 1e-8 * (1.0 + w[i]));
                }
                let sj = SurfaceJets::compute(&ev, &p, 3).unwrap();
                assert!((sj.h.value() - cf.h).abs() < 1e-8);
                assert!((cf.lambdas.iter().sum::<f64>() + 3.0 * cf.lambda_n).abs() < 1e-12);
                let ef = eigenframe_condition(&ev, &p).unwrap();
                assert!(ef.max < 1e-6, "{}: {}", seed.spec(), ef.max);
            }
            // at xₙ = 0 the chart is the seed
            let q = seed.domain().center();
            let mut p0 = q.clone();
            p0.push(0.0);
            let x = crate::chart::eval_point(&ev, &p0).unwrap();
            let y = crate::chart::eval_point(&seed.chart(), &q).unwrap();
            for (a, b) in x.iter().zip(&y) {
                assert!((a - b).abs() < 1e-15);
            }
            let c0 = ev.curvatures(0.0).unwrap();
            assert_eq!(c0.lambdas, seed.lambda0);
        }
    }
}
