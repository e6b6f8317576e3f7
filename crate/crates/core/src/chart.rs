//! Parametrized patches and their derivative jets.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::jet::{Jet, JetSpace, MAX_ORDER};

/// Axis-aligned validity box of a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        Self { lo, hi }
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (a, b))| *x >= *a && *x <= *b)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// The box shrunk about its center to the given fraction of each side.
    pub fn scaled(&self, fraction: f64) -> Self {
        let c = self.center();
        let lo = self.lo.iter().zip(&c).map(|(a, m)| m + fraction * (a - m)).collect();
        let hi = self.hi.iter().zip(&c).map(|(b, m)| m + fraction * (b - m)).collect();
        Self { lo, hi }
    }

    pub fn product(&self, other: &DomainBox) -> Self {
        let mut lo = self.lo.clone();
        lo.extend_from_slice(&other.lo);
        let mut hi = self.hi.clone();
        hi.extend_from_slice(&other.hi);
        Self { lo, hi }
    }

    /// Tensor grid with `per_axis` points on every axis (endpoints included).
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let counts = vec![per_axis; self.dim()];
        self.grid_with(&counts)
    }

    pub fn grid_with(&self, counts: &[usize]) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = counts
            .iter()
            .enumerate()
            .map(|(i, &k)| linspace(self.lo[i], self.hi[i], k))
            .collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            let mut next = Vec::with_capacity(out.len() * axis.len());
            for prefix in &out {
                for &x in axis {
                    let mut p = prefix.clone();
                    p.push(x);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }
}

pub fn linspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![0.5 * (a + b)],
        _ => (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect(),
    }
}

/// A smooth parametrization `X: box ⊂ Rⁿ → E^m`, written over jets so that
/// every partial derivative up to order 4 is available.
pub trait Chart: Send + Sync {
    fn dim_domain(&self) -> usize;
    fn dim_ambient(&self) -> usize;
    fn domain(&self) -> &DomainBox;

    /// Ambient coordinates of `X(x)` for jet-valued coordinates `x`.
    fn eval(&self, x: &[Jet]) -> Result<Vec<Jet>>;

    /// A vector the unit normal should point along (positive inner product).
    /// `None` falls back to the determinant orientation.
    fn normal_hint(&self, _p: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Human-readable name of the normal convention used by `normal_hint`.
    fn convention(&self) -> &'static str {
        "det[X_1..X_n, N] > 0"
    }

    fn label(&self) -> String {
        String::from("chart")
    }
}

impl<C: Chart + ?Sized> Chart for Box<C> {
    fn dim_domain(&self) -> usize {
        (**self).dim_domain()
    }
    fn dim_ambient(&self) -> usize {
        (**self).dim_ambient()
    }
    fn domain(&self) -> &DomainBox {
        (**self).domain()
    }
    fn eval(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        (**self).eval(x)
    }
    fn normal_hint(&self, p: &[f64]) -> Option<Vec<f64>> {
        (**self).normal_hint(p)
    }
    fn convention(&self) -> &'static str {
        (**self).convention()
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

impl<C: Chart + ?Sized> Chart for &C {
    fn dim_domain(&self) -> usize {
        (**self).dim_domain()
    }
    fn dim_ambient(&self) -> usize {
        (**self).dim_ambient()
    }
    fn domain(&self) -> &DomainBox {
        (**self).domain()
    }
    fn eval(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        (**self).eval(x)
    }
    fn normal_hint(&self, p: &[f64]) -> Option<Vec<f64>> {
        (**self).normal_hint(p)
    }
    fn convention(&self) -> &'static str {
        (**self).convention()
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

/// All ambient partial derivatives of a chart at one point.
#[derive(Debug, Clone)]
pub struct ChartJet {
    pub point: Vec<f64>,
    pub components: Vec<Jet>,
}

impl ChartJet {
    pub fn order(&self) -> usize {
        self.components.iter().map(Jet::order).min().unwrap_or(0)
    }

    pub fn position(&self) -> Vec<f64> {
        self.components.iter().map(Jet::value).collect()
    }

    /// `∂^α X` for the multi-index `α`, one entry per ambient component.
    pub fn partial(&self, multi_index: &[u8]) -> Option<Vec<f64>> {
        self.components.iter().map(|c| c.partial(multi_index)).collect()
    }

    /// Jacobian column `X_{,i}`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.components.iter().map(|c| c.d1(i)).collect()
    }
}

pub(crate) fn check_point(chart: &dyn Chart, p: &[f64]) -> Result<()> {
    if p.len() != chart.dim_domain() {
        return Err(Error::DimensionMismatch {
            expected: chart.dim_domain(),
            got: p.len(),
        });
    }
    if !chart.domain().contains(p) {
        return Err(Error::OutsideDomain { point: p.to_vec() });
    }
    Ok(())
}

/// Jet of `chart` at `p` with every partial derivative up to `order`.
pub fn jet(chart: &dyn Chart, p: &[f64], order: usize) -> Result<ChartJet> {
    if order > MAX_ORDER {
        return Err(Error::OrderTooHigh(order));
    }
    check_point(chart, p)?;
    let space = JetSpace::shared(chart.dim_domain(), order);
    let vars = space.variables(p);
    let components = chart.eval(&vars)?;
    if components.len() != chart.dim_ambient() {
        return Err(Error::DimensionMismatch {
            expected: chart.dim_ambient(),
            got: components.len(),
        });
    }
    Ok(ChartJet {
        point: p.to_vec(),
        components,
    })
}

/// Position only.
pub fn eval_point(chart: &dyn Chart, p: &[f64]) -> Result<Vec<f64>> {
    Ok(jet(chart, p, 0)?.position())
}

/// A scalar function on a chart domain, evaluable on jets.
pub trait ScalarField: Send + Sync {
    fn eval(&self, x: &[Jet]) -> Result<Jet>;
}

/// Adapter turning a closure over jets into a [`ScalarField`].
pub struct FnField<F>(pub F);

impl<F> ScalarField for FnField<F>
where
    F: Fn(&[Jet]) -> Jet + Send + Sync,
{
    fn eval(&self, x: &[Jet]) -> Result<Jet> {
        Ok((self.0)(x))
    }
}

/// The ambient coordinate `X^k` of a chart, viewed as a function on its domain.
pub struct AmbientCoordinate<'a> {
    pub chart: &'a dyn Chart,
    pub component: usize,
}

impl ScalarField for AmbientCoordinate<'_> {
    fn eval(&self, x: &[Jet]) -> Result<Jet> {
        let mut v = self.chart.eval(x)?;
        Ok(v.swap_remove(self.component))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_tensor_product() {
        let b = DomainBox::new(vec![0.0, -1.0], vec![1.0, 1.0]);
        let g = b.grid_with(&[2, 3]);
        assert_eq!(g.len(), 6);
        assert_eq!(g[0], vec![0.0, -1.0]);
        assert_eq!(g[5], vec![1.0, 1.0]);
        assert!(b.contains(&[0.5, 0.0]));
        assert!(!b.contains(&[1.5, 0.0]));
    }
}
