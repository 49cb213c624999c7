//! Smooth step functions built from `f(s) = exp(-1/s)`.

#[cfg(not(feature = "std"))]
use num_traits::Float;

fn bump(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// `C^inf` monotone step: 0 for `u <= 0`, 1 for `u >= 1`.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let a = bump(u);
        a / (a + bump(1.0 - u))
    }
}

/// Derivative of [`smooth_step`].
pub fn smooth_step_deriv(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        return 0.0;
    }
    let (a, b) = (bump(u), bump(1.0 - u));
    let da = a / (u * u);
    let db = -b / ((1.0 - u) * (1.0 - u));
    (da * (a + b) - a * (da + db)) / ((a + b) * (a + b))
}

/// 1 below `lo`, 0 above `hi`, smooth in between.
pub fn falling(x: f64, lo: f64, hi: f64) -> f64 {
    1.0 - smooth_step((x - lo) / (hi - lo))
}

/// 0 below `lo`, 1 above `hi`, smooth in between.
pub fn rising(x: f64, lo: f64, hi: f64) -> f64 {
    smooth_step((x - lo) / (hi - lo))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_is_symmetric_and_monotone() {
        let mut last = 0.0;
        for k in 0..=100 {
            let u = k as f64 / 100.0;
            let v = smooth_step(u);
            assert!(v >= last);
            assert!((v + smooth_step(1.0 - u) - 1.0).abs() < 1e-15);
            last = v;
        }
        assert_eq!(smooth_step(0.5), 0.5);
    }

    #[test]
    fn derivative_matches_difference() {
        let h = 1e-6;
        for &u in &[0.1, 0.37, 0.5, 0.93] {
            let fd = (smooth_step(u + h) - smooth_step(u - h)) / (2.0 * h);
            assert!((smooth_step_deriv(u) - fd).abs() < 1e-7);
        }
    }
}
