//! Built-in test signals and images for the experiments.

use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Smooth 1-periodic denoising target sin(2πx) + 0.5 cos(4πx)² + 0.5.
pub fn denoise_truth(x: f64) -> f64 {
    (2.0 * PI * x).sin() + 0.5 * (4.0 * PI * x).cos().powi(2) + 0.5
}

/// Advection initial profiles selectable in the convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DgInitial {
    /// sin(2πx)/2 + 1: smooth under the periodic extension of (0, 1); the
    /// convergence-study default.
    SinTwoPi,
    /// sin(πx)/2 + 1: smooth inside (0, 1) but its periodic extension has a
    /// derivative kink at the wrap point, which caps the observable rates.
    SinPi,
}

impl DgInitial {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sin2pi" => Some(DgInitial::SinTwoPi),
            "sinpi" => Some(DgInitial::SinPi),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            DgInitial::SinTwoPi => "sin2pi",
            DgInitial::SinPi => "sinpi",
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            DgInitial::SinTwoPi => (2.0 * PI * x).sin() * 0.5 + 1.0,
            DgInitial::SinPi => (PI * x).sin() * 0.5 + 1.0,
        }
    }
}

/// Deterministic piecewise-smooth n×n test image in [0, 1]: a gentle ramp,
/// a smooth bump, and two sharp-edged shapes.
pub fn synthetic_image(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        let y = (i as f64 + 0.5) / n as f64;
        let x = (j as f64 + 0.5) / n as f64;
        let mut v = 0.15 + 0.2 * x + 0.1 * y;
        // Smooth Gaussian bump.
        let (bx, by, bs) = (0.32, 0.3, 0.13);
        v += 0.35 * (-((x - bx).powi(2) + (y - by).powi(2)) / (2.0 * bs * bs)).exp();
        // Bright disk with a hard edge.
        if (x - 0.68).powi(2) + (y - 0.66).powi(2) < 0.18f64.powi(2) {
            v = 0.85;
        }
        // Mid-gray rectangle.
        if (0.14..0.34).contains(&x) && (0.62..0.82).contains(&y) {
            v = 0.55;
        }
        v.clamp(0.0, 1.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_signal_is_periodic() {
        for i in 0..10 {
            let x = i as f64 / 10.0;
            assert!((denoise_truth(x) - denoise_truth(x + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn image_is_in_range_and_deterministic() {
        let a = synthetic_image(32);
        let b = synthetic_image(32);
        assert_eq!(a, b);
        for v in a.iter() {
            assert!((0.0..=1.0).contains(v));
        }
    }

    #[test]
    fn initial_profiles_parse() {
        assert_eq!(DgInitial::parse("sin2pi"), Some(DgInitial::SinTwoPi));
        assert_eq!(DgInitial::parse("sinpi"), Some(DgInitial::SinPi));
        assert_eq!(DgInitial::parse("other"), None);
    }
}
