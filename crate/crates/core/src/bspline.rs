//! Central univariate B-splines of arbitrary order.
//!
//! The order-ℓ central B-spline B^(ℓ) is the (ℓ-1)-fold self-convolution of
//! the indicator of [-1/2, 1/2): a nonnegative piecewise polynomial of degree
//! ℓ-1 supported on [-ℓ/2, ℓ/2] with unit-spaced knots that integrates to
//! one. Evaluation uses the Cox–de Boor recursion on the uniform knot
//! sequence, which gives exact per-piece polynomial values; moments are
//! integrated per knot interval with a Gauss–Legendre rule of analytically
//! sufficient order, so they are exact up to rounding.

use crate::error::{Error, Result};
use crate::quadrature;

/// Central B-spline of a given order (order 1 is the unit box).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BSpline {
    order: u32,
}

impl BSpline {
    pub fn new(order: u32) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("B-spline order must be at least 1"));
        }
        Ok(Self { order })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Support interval (-ℓ/2, ℓ/2).
    pub fn support(&self) -> (f64, f64) {
        let half = self.order as f64 / 2.0;
        (-half, half)
    }

    /// The ℓ+1 breakpoints -ℓ/2 + i, i = 0..ℓ, strictly increasing.
    pub fn knots(&self) -> Vec<f64> {
        let half = self.order as f64 / 2.0;
        (0..=self.order).map(|i| -half + i as f64).collect()
    }

    /// Evaluate B^(ℓ)(x) by the Cox–de Boor recursion.
    ///
    /// The knot intervals are half-open, so the value at the right edge of
    /// the support is 0 and shifted translates form an exact partition of
    /// unity.
    pub fn eval(&self, x: f64) -> f64 {
        let ell = self.order as usize;
        let t0 = -(self.order as f64) / 2.0;
        // Order-1 values on each knot interval [t_i, t_{i+1}).
        let mut values: Vec<f64> = (0..ell)
            .map(|i| {
                let lo = t0 + i as f64;
                if x >= lo && x < lo + 1.0 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        // Raise the order; knots are unit spaced so t_{i+m} - t_i = m.
        for m in 2..=ell {
            let mf = m as f64;
            for i in 0..=(ell - m) {
                let t_i = t0 + i as f64;
                let left = (x - t_i) / (mf - 1.0) * values[i];
                let right = (t_i + mf - x) / (mf - 1.0) * values[i + 1];
                values[i] = left + right;
            }
        }
        values[0]
    }

    /// Moment ∫ B^(ℓ)(x - shift) x^m dx.
    ///
    /// Integrated per knot interval with ⌈(ℓ+m)/2⌉ Gauss–Legendre points;
    /// the integrand is polynomial of degree ℓ-1+m on each piece, so the
    /// rule is exact.
    pub fn moment(&self, shift: f64, m: u32) -> f64 {
        let points = ((self.order + m) as usize).div_ceil(2);
        let knots = self.knots();
        let mut acc = 0.0;
        for pair in knots.windows(2) {
            let (a, b) = (pair[0] + shift, pair[1] + shift);
            acc += quadrature::integrate(|x| self.eval(x - shift) * x.powi(m as i32), a, b, points);
        }
        acc
    }
}
