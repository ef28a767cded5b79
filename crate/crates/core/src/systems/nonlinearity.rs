use serde::{Deserialize, Serialize};

/// The closed set of monotone coupling functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityKind {
    /// `gain * slope * x`
    LinearGain,
    /// `gain * tanh(slope * x)`
    TanhSigmoid,
    /// `gain * H(slope * x)` with the Hill function `H(y) = y^nu / (1 + y^nu)`.
    HillIncreasing,
    /// `gain * (1 - H(slope * x))`, i.e. `gain / (1 + (slope x)^nu)` for `slope x >= 0`.
    HillDecreasing,
    /// `gain * (H(slope * x + shift) - H(shift))`, a Hill function translated so that it vanishes at zero.
    ShiftedHill,
}

fn one() -> f64 {
    1.0
}

/// A monotone scalar nonlinearity with analytic derivative.
///
/// Hill kinds are defined for negative arguments by the odd extension
/// `H(-y) = -H(y)`, which keeps them `C^1` (for `nu >= 1`) and strictly
/// monotone on the whole real line. On `slope * x >= 0` they coincide with
/// the classical Hill functions and take values in `gain * [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Nonlinearity {
    pub kind: NonlinearityKind,
    #[serde(default = "one")]
    pub gain: f64,
    #[serde(default = "one")]
    pub slope: f64,
    #[serde(default = "one")]
    pub nu: f64,
    #[serde(default)]
    pub shift: f64,
}

/// Odd extension of `y^nu / (1 + y^nu)`.
pub fn hill_odd(y: f64, nu: f64) -> f64 {
    let a = y.abs();
    let v = if a <= 1.0 {
        let p = a.powf(nu);
        p / (1.0 + p)
    } else {
        1.0 / (1.0 + a.powf(-nu))
    };
    v.copysign(y)
}

/// Derivative of [`hill_odd`]; even in `y`.
pub fn hill_odd_derivative(y: f64, nu: f64) -> f64 {
    let a = y.abs();
    if a <= 1.0 {
        let p = a.powf(nu);
        let num = if nu == 1.0 { 1.0 } else { nu * a.powf(nu - 1.0) };
        num / ((1.0 + p) * (1.0 + p))
    } else {
        let q = a.powf(-nu);
        nu / a * q / ((1.0 + q) * (1.0 + q))
    }
}

fn ln_hill_odd_derivative(y: f64, nu: f64) -> f64 {
    let a = y.abs();
    if a <= 1.0 {
        let ln_a = a.ln();
        let lead = if nu == 1.0 { 0.0 } else { (nu - 1.0) * ln_a };
        nu.ln() + lead - 2.0 * a.powf(nu).ln_1p()
    } else {
        let ln_a = a.ln();
        nu.ln() - ln_a - nu * ln_a - 2.0 * (-nu * ln_a).exp().ln_1p()
    }
}

impl Nonlinearity {
    pub fn new(kind: NonlinearityKind, gain: f64, slope: f64, nu: f64, shift: f64) -> Self {
        Self { kind, gain, slope, nu, shift }
    }

    pub fn linear(gain: f64) -> Self {
        Self::new(NonlinearityKind::LinearGain, gain, 1.0, 1.0, 0.0)
    }

    pub fn tanh(gain: f64) -> Self {
        Self::new(NonlinearityKind::TanhSigmoid, gain, 1.0, 1.0, 0.0)
    }

    pub fn tanh_with_slope(gain: f64, slope: f64) -> Self {
        Self::new(NonlinearityKind::TanhSigmoid, gain, slope, 1.0, 0.0)
    }

    pub fn hill_increasing(gain: f64, slope: f64, nu: f64) -> Self {
        Self::new(NonlinearityKind::HillIncreasing, gain, slope, nu, 0.0)
    }

    pub fn hill_decreasing(gain: f64, slope: f64, nu: f64) -> Self {
        Self::new(NonlinearityKind::HillDecreasing, gain, slope, nu, 0.0)
    }

    pub fn shifted_hill(gain: f64, slope: f64, nu: f64, shift: f64) -> Self {
        Self::new(NonlinearityKind::ShiftedHill, gain, slope, nu, shift)
    }

    pub fn value(&self, x: f64) -> f64 {
        let y = self.slope * x;
        match self.kind {
            NonlinearityKind::LinearGain => self.gain * y,
            NonlinearityKind::TanhSigmoid => self.gain * y.tanh(),
            NonlinearityKind::HillIncreasing => self.gain * hill_odd(y, self.nu),
            NonlinearityKind::HillDecreasing => self.gain * (1.0 - hill_odd(y, self.nu)),
            NonlinearityKind::ShiftedHill => {
                self.gain * (hill_odd(y + self.shift, self.nu) - hill_odd(self.shift, self.nu))
            }
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let y = self.slope * x;
        let gs = self.gain * self.slope;
        match self.kind {
            NonlinearityKind::LinearGain => gs,
            NonlinearityKind::TanhSigmoid => {
                let sech = 1.0 / y.cosh();
                gs * sech * sech
            }
            NonlinearityKind::HillIncreasing => gs * hill_odd_derivative(y, self.nu),
            NonlinearityKind::HillDecreasing => -gs * hill_odd_derivative(y, self.nu),
            NonlinearityKind::ShiftedHill => gs * hill_odd_derivative(y + self.shift, self.nu),
        }
    }

    /// `ln |g'(x)|`, finite wherever the derivative is nonzero even if
    /// `derivative` itself underflows.
    pub fn ln_abs_derivative(&self, x: f64) -> f64 {
        let y = self.slope * x;
        let ln_gs = (self.gain * self.slope).abs().ln();
        match self.kind {
            NonlinearityKind::LinearGain => ln_gs,
            NonlinearityKind::TanhSigmoid => {
                let a = y.abs();
                ln_gs + 2.0 * (std::f64::consts::LN_2 - a - (-2.0 * a).exp().ln_1p())
            }
            NonlinearityKind::HillIncreasing | NonlinearityKind::HillDecreasing => {
                ln_gs + ln_hill_odd_derivative(y, self.nu)
            }
            NonlinearityKind::ShiftedHill => ln_gs + ln_hill_odd_derivative(y + self.shift, self.nu),
        }
    }

    /// `+1` for increasing, `-1` for decreasing, `0` for a degenerate (constant) function.
    pub fn direction(&self) -> f64 {
        let s = self.gain * self.slope;
        if s == 0.0 || !s.is_finite() {
            return 0.0;
        }
        match self.kind {
            NonlinearityKind::HillDecreasing => -s.signum(),
            _ => s.signum(),
        }
    }

    /// Sign of `g'(x)`: the sign of the derivative when representable,
    /// otherwise the analytic direction if `ln |g'(x)|` is finite.
    pub fn slope_sign(&self, x: f64) -> f64 {
        let d = self.derivative(x);
        if d != 0.0 && d.is_finite() {
            return d.signum();
        }
        if self.ln_abs_derivative(x).is_finite() {
            self.direction()
        } else {
            0.0
        }
    }

    /// Limits `(g(-inf), g(+inf))`, infinite for linear kinds.
    pub fn limits(&self) -> (f64, f64) {
        let s = self.slope.signum();
        match self.kind {
            NonlinearityKind::LinearGain => {
                let d = self.gain * self.slope;
                if d == 0.0 {
                    (0.0, 0.0)
                } else {
                    (-f64::INFINITY * d.signum(), f64::INFINITY * d.signum())
                }
            }
            NonlinearityKind::TanhSigmoid => (-self.gain * s, self.gain * s),
            NonlinearityKind::HillIncreasing => (-self.gain * s, self.gain * s),
            NonlinearityKind::HillDecreasing => (self.gain * (1.0 + s), self.gain * (1.0 - s)),
            NonlinearityKind::ShiftedHill => {
                let base = hill_odd(self.shift, self.nu);
                (self.gain * (-s - base), self.gain * (s - base))
            }
        }
    }

    pub fn is_bounded(&self) -> bool {
        let (a, b) = self.limits();
        a.is_finite() && b.is_finite()
    }

    /// Evaluates at `x`, using the limits for infinite arguments.
    pub fn value_extended(&self, x: f64) -> f64 {
        if x == f64::INFINITY {
            self.limits().1
        } else if x == f64::NEG_INFINITY {
            self.limits().0
        } else {
            self.value(x)
        }
    }

    /// Image of the interval `[lo, hi]` under `x -> g(x) / divisor`, endpoints
    /// possibly infinite.
    pub fn image_scaled(&self, lo: f64, hi: f64, divisor: f64) -> (f64, f64) {
        let a = self.value_extended(lo) / divisor;
        let b = self.value_extended(hi) / divisor;
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    pub(crate) fn check(&self) -> Result<(), String> {
        for (name, v) in [("gain", self.gain), ("slope", self.slope), ("nu", self.nu), ("shift", self.shift)] {
            if !v.is_finite() {
                return Err(format!("nonlinearity parameter {name} is not finite"));
            }
        }
        if self.gain == 0.0 || self.slope == 0.0 {
            return Err("nonlinearity has zero gain or slope".into());
        }
        if matches!(
            self.kind,
            NonlinearityKind::HillIncreasing | NonlinearityKind::HillDecreasing | NonlinearityKind::ShiftedHill
        ) && self.nu < 1.0
        {
            return Err(format!("Hill exponent nu = {} must be >= 1", self.nu));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_kinds() -> Vec<Nonlinearity> {
        vec![
            Nonlinearity::linear(2.0),
            Nonlinearity::linear(-0.5),
            Nonlinearity::tanh(1.0),
            Nonlinearity::tanh_with_slope(-3.0, 0.7),
            Nonlinearity::hill_increasing(1.5, 1.0, 2.0),
            Nonlinearity::hill_increasing(1.0, 2.0, 1.0),
            Nonlinearity::hill_decreasing(2.0, 1.0, 3.0),
            Nonlinearity::hill_decreasing(1.0, 0.5, 1.0),
            Nonlinearity::shifted_hill(-6.0, -1.0, 2.0, 0.68),
            Nonlinearity::shifted_hill(2.0, 1.0, 2.5, 1.3),
        ]
    }

    fn log_grid() -> Vec<f64> {
        let mut xs = Vec::new();
        for k in 0..=240 {
            let x = 10f64.powf(-6.0 + 12.0 * k as f64 / 240.0);
            xs.push(x);
            xs.push(-x);
        }
        xs
    }

    #[test]
    fn derivative_sign_is_constant_on_log_grid() {
        for g in all_kinds() {
            let dir = g.direction();
            assert!(dir != 0.0);
            for &x in &log_grid() {
                assert_eq!(g.slope_sign(x), dir, "{g:?} at {x}");
                assert!(g.derivative(x) * dir >= 0.0);
            }
        }
    }

    #[test]
    fn linear_and_tanh_vanish_at_zero() {
        assert_eq!(Nonlinearity::linear(3.0).value(0.0), 0.0);
        assert_eq!(Nonlinearity::tanh_with_slope(-2.0, 4.0).value(0.0), 0.0);
        assert_eq!(Nonlinearity::shifted_hill(5.0, -1.0, 2.0, 0.7).value(0.0), 0.0);
    }

    #[test]
    fn hill_bounded_on_physical_range() {
        let inc = Nonlinearity::hill_increasing(2.0, 1.0, 2.0);
        let dec = Nonlinearity::hill_decreasing(2.0, 1.0, 2.0);
        for k in 0..200 {
            let x = k as f64 * 0.37;
            assert!((0.0..=2.0).contains(&inc.value(x)));
            assert!((0.0..=2.0).contains(&dec.value(x)));
        }
        assert_eq!(dec.value(0.0), 2.0);
        assert!((inc.value(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for g in all_kinds() {
            for &x in &[-3.0, -0.4, 0.2, 0.9, 2.5] {
                let e = 1e-6;
                let fd = (g.value(x + e) - g.value(x - e)) / (2.0 * e);
                assert!((fd - g.derivative(x)).abs() < 1e-6 * (1.0 + fd.abs()), "{g:?} at {x}");
                let ln = g.ln_abs_derivative(x);
                assert!((ln.exp() - g.derivative(x).abs()).abs() < 1e-12 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn limits_match_far_values() {
        for g in all_kinds().into_iter().filter(|g| g.is_bounded()) {
            let (lo, hi) = g.limits();
            assert!((g.value(-1e12) - lo).abs() < 1e-6, "{g:?}");
            assert!((g.value(1e12) - hi).abs() < 1e-6, "{g:?}");
        }
        assert!(!Nonlinearity::linear(1.0).is_bounded());
    }

    #[test]
    fn json_rejects_unknown_fields() {
        let ok: Nonlinearity = serde_json::from_str(r#"{"kind":"tanh_sigmoid","gain":-1}"#).unwrap();
        assert_eq!(ok, Nonlinearity::tanh(-1.0));
        assert!(serde_json::from_str::<Nonlinearity>(r#"{"kind":"tanh_sigmoid","gian":1}"#).is_err());
        assert!(serde_json::from_str::<Nonlinearity>(r#"{"kind":"cubic"}"#).is_err());
    }
}
