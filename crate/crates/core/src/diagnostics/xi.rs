use crate::solver::Deformed;
use crate::spectral::derivative_norm2;

/// Running value of
/// `sup_t (|phi|_{H^2}^2 + |grad w|_{H^2}^2) + c int_0^t (|grad phi|_{H^2}^2 + |grad^2 w|_{H^2}^2)`
/// with the time integral by the trapezoid rule over the accumulated states.
#[derive(Clone, Debug, PartialEq)]
pub struct XiAccumulator {
    c: f64,
    sup: f64,
    integral: f64,
    last: Option<(f64, f64)>,
}

impl Default for XiAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl XiAccumulator {
    pub fn new() -> Self {
        Self::with_constant(1.0)
    }

    pub fn with_constant(c: f64) -> Self {
        XiAccumulator {
            c,
            sup: 0.0,
            integral: 0.0,
            last: None,
        }
    }

    /// Adds a state; states must arrive in increasing time.
    pub fn accumulate<S: Deformed>(&mut self, state: &S) -> f64 {
        let phi = state.species();
        let w = state.displacement();
        let level = derivative_norm2(phi, 0, 2) + derivative_norm2(w, 1, 2);
        let rate = derivative_norm2(phi, 1, 2) + derivative_norm2(w, 2, 2);
        let t = state.time();
        if let Some((t0, r0)) = self.last {
            self.integral += 0.5 * (t - t0) * (r0 + rate);
        }
        self.last = Some((t, rate));
        self.sup = self.sup.max(level);
        self.value()
    }

    pub fn value(&self) -> f64 {
        self.sup + self.c * self.integral
    }

    pub fn sup_part(&self) -> f64 {
        self.sup
    }

    pub fn integral_part(&self) -> f64 {
        self.integral
    }
}

/// Adds `state` to the running estimate and returns the updated value.
pub fn xi_accumulate<S: Deformed>(acc: &mut XiAccumulator, state: &S) -> f64 {
    acc.accumulate(state)
}

/// `|grad^2 w|_{H^1} / |grad phi|_{H^1}` (NaN for a constant species).
pub fn elliptic_regularity_ratio<S: Deformed>(state: &S) -> f64 {
    let num = derivative_norm2(state.displacement(), 2, 1).sqrt();
    let den = derivative_norm2(state.species(), 1, 1).sqrt();
    if den > 0.0 {
        num / den
    } else {
        f64::NAN
    }
}
