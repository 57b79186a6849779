use super::{CVector, ComplexMatrix, C64};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    /// Relative tolerance; the absolute floor is `tol · ‖v0‖∞`.
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_steps: 10_000_000,
        }
    }
}

/// `exp(generator · t) · v0` by adaptive Dormand–Prince 5(4) integration of
/// `v' = generator · v`.
pub fn propagate_ode(generator: &ComplexMatrix, v0: &CVector, t: f64, tol: f64) -> Result<CVector> {
    propagate_ode_with(
        generator,
        v0,
        t,
        &OdeOptions {
            tol,
            ..OdeOptions::default()
        },
    )
}

// Dormand–Prince tableau. The generator is time independent, so the node
// coefficients c_i never enter.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b* (fifth minus embedded fourth order weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

pub fn propagate_ode_with(generator: &ComplexMatrix, v0: &CVector, t: f64, opts: &OdeOptions) -> Result<CVector> {
    if !generator.is_square() || generator.nrows() != v0.len() {
        return Err(Error::DimensionMismatch(format!(
            "generator {}x{} with vector of length {}",
            generator.nrows(),
            generator.ncols(),
            v0.len()
        )));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("propagation time must be finite and >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(v0.clone());
    }
    let g = generator.as_inner();
    let scale = v0.camax();
    if scale == 0.0 {
        return Ok(v0.clone());
    }
    let atol = opts.tol * scale;
    let gnorm = g.norm().max(f64::MIN_POSITIVE);

    let f = |v: &CVector| -> CVector { g * v };
    let mut y = v0.clone();
    let mut time = 0.0;
    let mut h = (opts.tol.powf(0.2) / gnorm).min(t);
    let mut k1 = f(&y);
    let mut steps = 0usize;

    while time < t {
        if steps >= opts.max_steps {
            return Err(Error::Propagation(format!(
                "step budget of {} exhausted at t = {time:.6e} of {t:.6e}",
                opts.max_steps
            )));
        }
        steps += 1;
        let last = time + h >= t;
        if last {
            h = t - time;
        }
        let hc = C64::new(h, 0.0);
        let k2 = f(&(&y + &k1 * (hc * A21)));
        let k3 = f(&(&y + &k1 * (hc * A31) + &k2 * (hc * A32)));
        let k4 = f(&(&y + &k1 * (hc * A41) + &k2 * (hc * A42) + &k3 * (hc * A43)));
        let k5 = f(&(&y + &k1 * (hc * A51) + &k2 * (hc * A52) + &k3 * (hc * A53) + &k4 * (hc * A54)));
        let k6 = f(&(&y
            + &k1 * (hc * A61)
            + &k2 * (hc * A62)
            + &k3 * (hc * A63)
            + &k4 * (hc * A64)
            + &k5 * (hc * A65)));
        let y_new = &y + &k1 * (hc * B1) + &k3 * (hc * B3) + &k4 * (hc * B4) + &k5 * (hc * B5) + &k6 * (hc * B6);
        let k7 = f(&y_new);
        let err_vec = &k1 * (hc * E1) + &k3 * (hc * E3) + &k4 * (hc * E4) + &k5 * (hc * E5) + &k6 * (hc * E6) + &k7 * (hc * E7);

        let mut err: f64 = 0.0;
        for i in 0..y.len() {
            let sc = atol + opts.tol * y[i].norm().max(y_new[i].norm());
            err = err.max(err_vec[i].norm_sqr().sqrt() / sc);
        }
        if !err.is_finite() {
            return Err(Error::Propagation(format!("non-finite error estimate at t = {time:.6e}")));
        }
        if err <= 1.0 {
            time = if last { t } else { time + h };
            y = y_new;
            k1 = k7;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h <= f64::EPSILON * t {
            return Err(Error::Propagation(format!(
                "step size underflow at t = {time:.6e}; tolerance {} unreachable",
                opts.tol
            )));
        }
    }
    Ok(y)
}
