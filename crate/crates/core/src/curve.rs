//! Time-modulated parameter values.
//!
//! Step and spline parameters are laid out over equal slices of the pulse
//! they belong to: `n` steps each last `span / n`, and `n` spline knots sit at
//! `i * span / (n - 1)` and are joined by a natural cubic spline.

/// A parameter value over a pulse of length `span`.
#[derive(Debug, Clone, PartialEq)]
pub enum Curve {
    Constant(f64),
    Steps(Vec<f64>),
    Spline(NaturalSpline),
}

impl Curve {
    pub fn steps(values: Vec<f64>) -> Self {
        if values.len() == 1 {
            Curve::Constant(values[0])
        } else {
            Curve::Steps(values)
        }
    }

    pub fn spline(knots: Vec<f64>) -> Self {
        Curve::Spline(NaturalSpline::new(knots))
    }

    pub fn value_at(&self, t: f64, span: f64) -> f64 {
        match self {
            Curve::Constant(v) => *v,
            Curve::Steps(values) => {
                if span <= 0.0 {
                    return values[0];
                }
                let width = span / values.len() as f64;
                let idx = ((t / width).floor().max(0.0) as usize).min(values.len() - 1);
                values[idx]
            }
            Curve::Spline(s) => s.value_at(t, span),
        }
    }

    /// Integral of the curve over `[0, t]`.
    pub fn integral(&self, t: f64, span: f64) -> f64 {
        match self {
            Curve::Constant(v) => v * t,
            Curve::Steps(values) => {
                if span <= 0.0 {
                    return values[0] * t;
                }
                let width = span / values.len() as f64;
                let mut acc = 0.0;
                let mut start = 0.0;
                for (i, v) in values.iter().enumerate() {
                    let end = if i + 1 == values.len() {
                        f64::INFINITY
                    } else {
                        (i + 1) as f64 * width
                    };
                    if t <= start {
                        break;
                    }
                    acc += v * (t.min(end) - start);
                    start = end;
                }
                acc
            }
            Curve::Spline(s) => s.integral(t, span),
        }
    }

    pub fn first(&self) -> f64 {
        match self {
            Curve::Constant(v) => *v,
            Curve::Steps(values) => values[0],
            Curve::Spline(s) => s.knots[0],
        }
    }

    pub fn last(&self) -> f64 {
        match self {
            Curve::Constant(v) => *v,
            Curve::Steps(values) => values[values.len() - 1],
            Curve::Spline(s) => s.knots[s.knots.len() - 1],
        }
    }
}

/// Natural cubic spline through equally spaced knots.
///
/// Second derivatives are stored in knot-index coordinates so one solve serves
/// every pulse duration.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalSpline {
    knots: Vec<f64>,
    second: Vec<f64>,
}

impl NaturalSpline {
    pub fn new(knots: Vec<f64>) -> Self {
        assert!(knots.len() >= 2, "a spline needs at least two knots");
        let n = knots.len();
        let mut second = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on M[i-1] + 4 M[i] + M[i+1] = 6 (y[i+1] - 2 y[i] + y[i-1])
            let m = n - 2;
            let mut c_prime = vec![0.0; m];
            let mut d_prime = vec![0.0; m];
            for i in 0..m {
                let rhs = 6.0 * (knots[i + 2] - 2.0 * knots[i + 1] + knots[i]);
                if i == 0 {
                    c_prime[0] = 1.0 / 4.0;
                    d_prime[0] = rhs / 4.0;
                } else {
                    let denom = 4.0 - c_prime[i - 1];
                    c_prime[i] = 1.0 / denom;
                    d_prime[i] = (rhs - d_prime[i - 1]) / denom;
                }
            }
            for i in (0..m).rev() {
                let next = if i + 1 < m { second[i + 2] } else { 0.0 };
                second[i + 1] = d_prime[i] - c_prime[i] * next;
            }
        }
        NaturalSpline { knots, second }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    fn coefficients(&self, seg: usize) -> [f64; 4] {
        let y0 = self.knots[seg];
        let y1 = self.knots[seg + 1];
        let m0 = self.second[seg];
        let m1 = self.second[seg + 1];
        [y0, (y1 - y0) - (2.0 * m0 + m1) / 6.0, m0 / 2.0, (m1 - m0) / 6.0]
    }

    fn locate(&self, t: f64, span: f64) -> (usize, f64) {
        let segments = self.knots.len() - 1;
        if span <= 0.0 {
            return (0, 0.0);
        }
        let s = (t / span * segments as f64).clamp(0.0, segments as f64);
        let seg = (s.floor() as usize).min(segments - 1);
        (seg, s - seg as f64)
    }

    pub fn value_at(&self, t: f64, span: f64) -> f64 {
        let (seg, u) = self.locate(t, span);
        let [a, b, c, d] = self.coefficients(seg);
        a + u * (b + u * (c + u * d))
    }

    pub fn integral(&self, t: f64, span: f64) -> f64 {
        if span <= 0.0 {
            return self.knots[0] * t;
        }
        let segments = self.knots.len() - 1;
        let h = span / segments as f64;
        let (seg, u) = self.locate(t, span);
        let mut acc = 0.0;
        for i in 0..seg {
            let [a, b, c, d] = self.coefficients(i);
            acc += a + b / 2.0 + c / 3.0 + d / 4.0;
        }
        let [a, b, c, d] = self.coefficients(seg);
        acc += u * (a + u * (b / 2.0 + u * (c / 3.0 + u * d / 4.0)));
        // beyond the last knot, hold the final value
        let overshoot = (t - span).max(0.0);
        acc * h + overshoot * self.knots[segments]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_passes_through_knots() {
        let s = NaturalSpline::new(vec![1.0, 2.0, 3.0, 2.0]);
        for (i, k) in [1.0, 2.0, 3.0, 2.0].iter().enumerate() {
            let t = i as f64 / 3.0 * 6e-6;
            assert!((s.value_at(t, 6e-6) - k).abs() < 1e-12, "knot {i}");
        }
    }

    #[test]
    fn two_knot_spline_is_linear() {
        let s = NaturalSpline::new(vec![0.0, 1.0]);
        assert!((s.value_at(0.25, 1.0) - 0.25).abs() < 1e-15);
        assert!((s.integral(1.0, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn spline_integral_matches_midpoint_quadrature() {
        let s = NaturalSpline::new(vec![0.3, -1.0, 2.0, 0.5, 0.0]);
        let span = 2.0;
        let n = 200_000;
        let h = 1.3 / n as f64;
        let quad: f64 = (0..n).map(|i| s.value_at((i as f64 + 0.5) * h, span) * h).sum();
        assert!((s.integral(1.3, span) - quad).abs() < 1e-8);
    }

    #[test]
    fn step_integral_is_piecewise() {
        let c = Curve::Steps(vec![1.0, 3.0]);
        assert_eq!(c.integral(0.5, 2.0), 0.5);
        assert_eq!(c.integral(1.5, 2.0), 1.0 + 1.5);
        assert_eq!(c.value_at(1.0, 2.0), 3.0);
    }
}
