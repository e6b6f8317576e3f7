//! Adaptive Dormand–Prince 5(4) integration and cubic Hermite dense output.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub atol: f64,
    pub rtol: f64,
    /// Largest step magnitude.
    pub h_max: f64,
    pub h_init: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            atol: 1e-10,
            rtol: 1e-10,
            h_max: f64::INFINITY,
            h_init: 1e-4,
            max_steps: 200_000,
        }
    }
}

/// Why an integration ended before `x_end`.
#[derive(Debug, Clone, PartialEq)]
pub enum Stop {
    Reached,
    /// The caller's predicate rejected the state (message attached).
    Predicate(Error),
    /// Steps shrank below the resolvable size; the last right-side error if any.
    Underflow(Option<Error>),
}

/// Accepted steps of an integration, including the initial point.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub xs: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    /// Right side `f(x, y)` at each sample.
    pub dys: Vec<Vec<f64>>,
    pub stop: Stop,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order ones.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate `y' = f(x, y)` from `(x0, y0)` towards `x_end` (either direction).
///
/// `accept` sees every candidate step end; returning `Err` ends the run there
/// (the state is not recorded). Errors from `f` inside a trial step shrink the
/// step; if that drives the step below resolution the run ends with
/// [`Stop::Underflow`].
pub fn dopri5<F, P>(mut f: F, x0: f64, y0: &[f64], x_end: f64, opts: &OdeOptions, mut accept: P) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    P: FnMut(f64, &[f64]) -> Result<()>,
{
    let dim = y0.len();
    let dir = if x_end >= x0 { 1.0 } else { -1.0 };
    let mut x = x0;
    let mut y = y0.to_vec();
    let mut k0 = f(x, &y)?;
    let mut traj = Trajectory {
        xs: vec![x],
        ys: vec![y.clone()],
        dys: vec![k0.clone()],
        stop: Stop::Reached,
    };
    let span = libm::fabs(x_end - x0);
    if span == 0.0 {
        return Ok(traj);
    }
    let mut h = opts.h_init.min(opts.h_max).min(span);
    let mut last_err: Option<Error> = None;
    let mut k = vec![vec![0.0; dim]; 7];
    let mut ytmp = vec![0.0; dim];

    for _ in 0..opts.max_steps {
        let remaining = libm::fabs(x_end - x);
        if remaining <= 1e-15 * (1.0 + libm::fabs(x_end)) {
            return Ok(traj);
        }
        let h_min = 1e-13 * (1.0 + libm::fabs(x));
        if h < h_min {
            traj.stop = Stop::Underflow(last_err);
            return Ok(traj);
        }
        let last_step = h >= remaining;
        let step = if last_step { remaining } else { h };
        let hs = dir * step;

        // stages
        k[0].clone_from(&k0);
        let mut failed: Option<Error> = None;
        for s in 1..7 {
            for d in 0..dim {
                let mut acc = y[d];
                for j in 0..s {
                    acc += hs * A[s][j] * k[j][d];
                }
                ytmp[d] = acc;
            }
            match f(x + C[s] * hs, &ytmp) {
                Ok(v) if v.iter().all(|c| c.is_finite()) => k[s] = v,
                Ok(_) => {
                    failed = Some(Error::Evaluation("non-finite right side".into()));
                    break;
                }
                Err(e) => {
                    failed = Some(e);
                    break;
                }
            }
        }
        if let Some(e) = failed {
            last_err = Some(e);
            h = step * 0.25;
            continue;
        }
        // ytmp holds the fifth-order solution (stage 7 is evaluated there, FSAL)
        let mut err = 0.0f64;
        for d in 0..dim {
            let mut e = 0.0;
            for s in 0..7 {
                e += E[s] * k[s][d];
            }
            let sc = opts.atol + opts.rtol * libm::fabs(y[d]).max(libm::fabs(ytmp[d]));
            let r = hs * e / sc;
            err += r * r;
        }
        let err = libm::sqrt(err / dim as f64);
        if err <= 1.0 {
            let x_new = if last_step { x_end } else { x + hs };
            if let Err(e) = accept(x_new, &ytmp) {
                traj.stop = Stop::Predicate(e);
                return Ok(traj);
            }
            x = x_new;
            y.clone_from(&ytmp);
            k0.clone_from(&k[6]);
            traj.xs.push(x);
            traj.ys.push(y.clone());
            traj.dys.push(k0.clone());
            last_err = None;
            let fac = if err == 0.0 { 5.0 } else { (0.9 * libm::pow(err, -0.2)).clamp(0.2, 5.0) };
            h = (step * fac).min(opts.h_max);
        } else {
            let fac = (0.9 * libm::pow(err, -0.2)).clamp(0.1, 1.0);
            h = step * fac;
        }
    }
    Err(Error::StepUnderflow(x))
}

/// Cubic Hermite interpolation of `(value, slope)` samples on a strictly
/// monotone grid. Returns `None` outside the sampled range.
pub fn hermite(xs: &[f64], ys: &[f64], dys: &[f64], x: f64) -> Option<(f64, f64)> {
    let n = xs.len();
    if n == 0 {
        return None;
    }
    let (lo, hi) = (xs[0].min(xs[n - 1]), xs[0].max(xs[n - 1]));
    if !(x >= lo && x <= hi) {
        return None;
    }
    if n == 1 {
        return Some((ys[0], dys[0]));
    }
    let increasing = xs[n - 1] > xs[0];
    // index i with x in [xs[i], xs[i+1]]
    let i = if increasing {
        xs.partition_point(|&t| t <= x).clamp(1, n - 1) - 1
    } else {
        xs.partition_point(|&t| t >= x).clamp(1, n - 1) - 1
    };
    let (x0, x1) = (xs[i], xs[i + 1]);
    let h = x1 - x0;
    let t = (x - x0) / h;
    let (t2, t3) = (t * t, t * t * t);
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let v = h00 * ys[i] + h10 * h * dys[i] + h01 * ys[i + 1] + h11 * h * dys[i + 1];
    let d00 = (6.0 * t2 - 6.0 * t) / h;
    let d10 = 3.0 * t2 - 4.0 * t + 1.0;
    let d01 = (-6.0 * t2 + 6.0 * t) / h;
    let d11 = 3.0 * t2 - 2.0 * t;
    let dv = d00 * ys[i] + d10 * dys[i] + d01 * ys[i + 1] + d11 * dys[i + 1];
    Some((v, dv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn harmonic_oscillator_over_a_period() {
        let f = |_x: f64, y: &[f64]| Ok(vec![y[1], -y[0]]);
        let tau = 2.0 * core::f64::consts::PI;
        let t = dopri5(f, 0.0, &[1.0, 0.0], tau, &OdeOptions::default(), |_, _| Ok(())).unwrap();
        assert_eq!(t.stop, Stop::Reached);
        assert_eq!(*t.xs.last().unwrap(), tau);
        let y = t.ys.last().unwrap();
        assert!((y[0] - 1.0).abs() < 1e-8 && y[1].abs() < 1e-8);
    }

    #[test]
    fn backward_integration_and_stop_predicate() {
        // y' = y from 0 to −1
        let t = dopri5(|_, y| Ok(vec![y[0]]), 0.0, &[1.0], -1.0, &OdeOptions::default(), |_, _| Ok(())).unwrap();
        assert!((t.ys.last().unwrap()[0] - libm::exp(-1.0)).abs() < 1e-9);
        let t = dopri5(
            |_, y| Ok(vec![y[0]]),
            0.0,
            &[1.0],
            5.0,
            &OdeOptions::default(),
            |_, y| if y[0] > 10.0 { Err(Error::ValidityCollapse(0.0)) } else { Ok(()) },
        )
        .unwrap();
        assert!(matches!(t.stop, Stop::Predicate(_)));
        assert!(t.ys.last().unwrap()[0] <= 10.0);
    }

    #[test]
    fn blowup_ends_in_underflow() {
        // y' = y², y(0) = 1 blows up at x = 1
        let f = |_x: f64, y: &[f64]| {
            if y[0] > 1e12 {
                Err(Error::Evaluation("too large".into()))
            } else {
                Ok(vec![y[0] * y[0]])
            }
        };
        let t = dopri5(f, 0.0, &[1.0], 2.0, &OdeOptions::default(), |_, _| Ok(())).unwrap();
        assert!(matches!(t.stop, Stop::Underflow(_)));
        assert!(*t.xs.last().unwrap() < 1.0 && *t.xs.last().unwrap() > 0.99);
    }

    proptest! {
        #[test]
        fn hermite_reproduces_cubics(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, x in 0.0f64..3.0) {
            let p = |t: f64| a * t * t * t + b * t * t + c * t;
            let dp = |t: f64| 3.0 * a * t * t + 2.0 * b * t + c;
            let xs = [0.0, 0.7, 1.9, 3.0];
            let ys: Vec<f64> = xs.iter().map(|&t| p(t)).collect();
            let ds: Vec<f64> = xs.iter().map(|&t| dp(t)).collect();
            let (v, d) = hermite(&xs, &ys, &ds, x).unwrap();
            prop_assert!((v - p(x)).abs() < 1e-12);
            prop_assert!((d - dp(x)).abs() < 1e-11);
            let rx: Vec<f64> = xs.iter().rev().map(|t| -t).collect();
            let ry: Vec<f64> = ys.iter().rev().copied().collect();
            let rd: Vec<f64> = ds.iter().rev().map(|d| -d).collect();
            let (w, _) = hermite(&rx, &ry, &rd, -x).unwrap();
            prop_assert!((w - v).abs() < 1e-12);
        }
    }
}
