//! Piecewise quintic Hermite interpolation and Gauss-Legendre quadrature.

use crate::propagator::TimeGrid;
use crate::scalar::Real;

/// Interpolant matching value, first and second derivative at every node.
///
/// Local error is `O(dt^6)` for smooth data.
#[derive(Debug, Clone, PartialEq)]
pub struct Quintic<T: Real> {
    grid: TimeGrid<T>,
    y: Vec<T>,
    d1: Vec<T>,
    d2: Vec<T>,
}

impl<T: Real> Quintic<T> {
    /// All three sample vectors must have one entry per grid node.
    pub fn new(grid: TimeGrid<T>, y: Vec<T>, d1: Vec<T>, d2: Vec<T>) -> Self {
        assert!(
            y.len() == grid.len() && d1.len() == grid.len() && d2.len() == grid.len(),
            "quintic samples must match the grid"
        );
        Self { grid, y, d1, d2 }
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    /// `(y, y', y'')` at `t`, clamped to the grid span.
    pub fn eval(&self, t: T) -> (T, T, T) {
        let h = self.grid.dt();
        let steps = self.grid.steps();
        let rel = ((t - self.grid.t0()) / h).max(T::zero());
        let k = rel.floor().to_usize().unwrap_or(0).min(steps - 1);
        let s = (rel - T::count(k)).min(T::one());
        let (y0, y1) = (self.y[k], self.y[k + 1]);
        let (p0, p1) = (self.d1[k] * h, self.d1[k + 1] * h);
        let (a0, a1) = (self.d2[k] * h * h, self.d2[k + 1] * h * h);
        let half = T::lit(0.5);
        let c = [
            y0,
            p0,
            half * a0,
            T::lit(10.0) * (y1 - y0) - T::lit(6.0) * p0 - T::lit(4.0) * p1 - T::lit(1.5) * a0 + half * a1,
            T::lit(15.0) * (y0 - y1) + T::lit(8.0) * p0 + T::lit(7.0) * p1 + T::lit(1.5) * a0 - a1,
            T::lit(6.0) * (y1 - y0) - T::lit(3.0) * (p0 + p1) - half * a0 + half * a1,
        ];
        let mut v = T::zero();
        let mut dv = T::zero();
        let mut ddv = T::zero();
        for i in (0..6).rev() {
            v = v * s + c[i];
            if i >= 1 {
                dv = dv * s + c[i] * T::count(i);
            }
            if i >= 2 {
                ddv = ddv * s + c[i] * T::count(i * (i - 1));
            }
        }
        (v, dv / h, ddv / (h * h))
    }
}

const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Composite 8-point Gauss-Legendre rule over `panels` equal panels of `[a, b]`.
pub fn gauss_legendre<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, panels: usize) -> T {
    let panels = panels.max(1);
    let width = (b - a) / T::count(panels);
    let half = width * T::lit(0.5);
    let mut total = T::zero();
    for p in 0..panels {
        let mid = a + width * (T::count(p) + T::lit(0.5));
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
            let dx = half * T::lit(*x);
            total += T::lit(*w) * (f(mid - dx) + f(mid + dx));
        }
    }
    total * half
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quintic_reproduces_quintic_polynomial() {
        let grid = TimeGrid::new(0.0, 2.0, 7).unwrap();
        let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t.powi(3) - 0.25 * t.powi(5);
        let df = |t: f64| -2.0 + 1.5 * t * t - 1.25 * t.powi(4);
        let ddf = |t: f64| 3.0 * t - 5.0 * t.powi(3);
        let nodes = grid.nodes();
        let q = Quintic::new(
            grid,
            nodes.iter().map(|&t| f(t)).collect(),
            nodes.iter().map(|&t| df(t)).collect(),
            nodes.iter().map(|&t| ddf(t)).collect(),
        );
        for t in [0.0, 0.13, 0.77, 1.5, 2.0] {
            let (v, d, dd) = q.eval(t);
            assert!((v - f(t)).abs() < 1e-12);
            assert!((d - df(t)).abs() < 1e-11);
            assert!((dd - ddf(t)).abs() < 1e-10);
        }
    }

    #[test]
    fn gauss_legendre_integrates_smooth_functions() {
        let v: f64 = gauss_legendre(|x: f64| x.exp(), 0.0, 1.0, 4);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-14);
        let w: f64 = gauss_legendre(|x: f64| x.powi(15), -1.0, 1.0, 1);
        assert!(w.abs() < 1e-15);
    }
}
