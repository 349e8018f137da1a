//! Second-order finite-difference stencils on uniform samples.

use std::ops::{Add, Mul, Sub};

use crate::scalar::Real;

/// First derivative of uniformly spaced samples: central in the interior,
/// one-sided second order at both ends. Needs at least three samples.
pub fn derivative<T, V>(samples: &[V], h: T) -> Vec<V>
where
    T: Real,
    V: Clone + Add<Output = V> + Sub<Output = V> + Mul<T, Output = V>,
{
    let n = samples.len();
    assert!(n >= 3, "derivative needs at least three samples");
    let half_inv = T::one() / (T::lit(2.0) * h);
    let mut out = Vec::with_capacity(n);
    let (s0, s1, s2) = (&samples[0], &samples[1], &samples[2]);
    // (-3 y0 + 4 y1 - y2) / 2h
    out.push((s1.clone() * T::lit(4.0) - s0.clone() * T::lit(3.0) - s2.clone()) * half_inv);
    for k in 1..n - 1 {
        out.push((samples[k + 1].clone() - samples[k - 1].clone()) * half_inv);
    }
    let (a, b, cc) = (&samples[n - 1], &samples[n - 2], &samples[n - 3]);
    // (3 y_n - 4 y_{n-1} + y_{n-2}) / 2h
    out.push((a.clone() * T::lit(3.0) - b.clone() * T::lit(4.0) + cc.clone()) * half_inv);
    out
}

/// Derivative of a function at `t` with step `h`, restricted to `[lo, hi]`:
/// central when both neighbours fit, otherwise one-sided second order.
pub fn derivative_at<T, V, F>(f: &F, t: T, h: T, lo: T, hi: T) -> V
where
    T: Real,
    V: Clone + Add<Output = V> + Sub<Output = V> + Mul<T, Output = V>,
    F: Fn(T) -> V,
{
    let half_inv = T::one() / (T::lit(2.0) * h);
    if t - h >= lo && t + h <= hi {
        (f(t + h) - f(t - h)) * half_inv
    } else if t - h < lo {
        (f(t + h) * T::lit(4.0) - f(t) * T::lit(3.0) - f(t + h + h)) * half_inv
    } else {
        (f(t) * T::lit(3.0) - f(t - h) * T::lit(4.0) + f(t - h - h)) * half_inv
    }
}

/// One-sided first-derivative estimates at an endpoint: a second-order and a
/// third-order stencil. `forward` selects the left end.
pub(crate) fn endpoint_first<T: Real>(y: &[T], h: T, forward: bool) -> (T, T) {
    let s = |k: usize| if forward { y[k] } else { y[y.len() - 1 - k] };
    let sign = if forward { T::one() } else { -T::one() };
    let second = (T::lit(-3.0) * s(0) + T::lit(4.0) * s(1) - s(2)) / (T::lit(2.0) * h);
    let third = (T::lit(-11.0) * s(0) + T::lit(18.0) * s(1) - T::lit(9.0) * s(2) + T::lit(2.0) * s(3))
        / (T::lit(6.0) * h);
    (second * sign, third * sign)
}

/// One-sided second-derivative estimates at an endpoint (second and third order).
pub(crate) fn endpoint_second<T: Real>(y: &[T], h: T, forward: bool) -> (T, T) {
    let s = |k: usize| if forward { y[k] } else { y[y.len() - 1 - k] };
    let h2 = h * h;
    let second = (T::lit(2.0) * s(0) - T::lit(5.0) * s(1) + T::lit(4.0) * s(2) - s(3)) / h2;
    let third = (T::lit(35.0) * s(0) - T::lit(104.0) * s(1) + T::lit(114.0) * s(2) - T::lit(56.0) * s(3)
        + T::lit(11.0) * s(4))
        / (T::lit(12.0) * h2);
    (second, third)
}
