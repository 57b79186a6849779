//! Peak positions, heights and widths of a sampled spectrum, and the split of
//! a composite central line into a broad and a narrow Lorentzian.
//!
//! Grids may be non-uniform.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const MIN_PEAK_POINTS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakOptions {
    /// Maxima with prominence below this fraction of the global maximum are
    /// ignored.
    pub min_prominence: f64,
    /// Grid points required across the full width.
    pub min_points: usize,
}

impl Default for PeakOptions {
    fn default() -> Self {
        Self {
            min_prominence: 1e-4,
            min_points: MIN_PEAK_POINTS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// Sample index of the raw maximum.
    pub index: usize,
    /// Parabola-refined position.
    pub position: f64,
    pub height: f64,
    pub prominence: f64,
    /// Full width at half height; half prominence when the half-height
    /// crossing is shadowed by a neighbouring peak.
    pub fwhm: f64,
    pub points: usize,
}

pub fn peak_analysis(omega: &[f64], values: &[f64]) -> Result<Vec<Peak>> {
    find_peaks_with(omega, values, &PeakOptions::default())
}

fn check_samples(omega: &[f64], values: &[f64]) -> Result<()> {
    if omega.len() != values.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} frequencies with {} samples",
            omega.len(),
            values.len()
        )));
    }
    if omega.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("frequency grid must be strictly ascending".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("spectrum samples"));
    }
    Ok(())
}

pub fn find_peaks_with(omega: &[f64], values: &[f64], opts: &PeakOptions) -> Result<Vec<Peak>> {
    check_samples(omega, values)?;
    let n = values.len();
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if n < 3 || !(top > 0.0) {
        return Ok(Vec::new());
    }
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if values[i] > values[i - 1] {
            // Walk across a flat top, if any.
            let mut j = i;
            while j + 1 < n && values[j + 1] == values[i] {
                j += 1;
            }
            if j + 1 < n && values[j + 1] < values[i] {
                let idx = (i + j) / 2;
                let prominence = prominence(values, idx);
                if prominence >= opts.min_prominence * top {
                    peaks.push(measure(omega, values, idx, prominence, opts)?);
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    Ok(peaks)
}

fn prominence(values: &[f64], idx: usize) -> f64 {
    let h = values[idx];
    let mut left_min = h;
    for k in (0..idx).rev() {
        if values[k] > h {
            break;
        }
        left_min = left_min.min(values[k]);
    }
    let mut right_min = h;
    for &v in &values[idx + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Vertex of the parabola through three (possibly unevenly spaced) points.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let curv = (d2 - d1) / (x[2] - x[0]);
    if curv >= 0.0 {
        return (x[1], y[1]);
    }
    // y = y1 + b (t − x1) + curv (t − x1)²  with b from the divided differences.
    let b = d1 + curv * (x[1] - x[0]);
    let shift = (-b / (2.0 * curv)).clamp(x[0] - x[1], x[2] - x[1]);
    (x[1] + shift, y[1] + b * shift + curv * shift * shift)
}

/// Interpolated crossing of `level` walking outward from `idx`; `None` if a
/// local minimum above `level` is reached first.
fn crossing(omega: &[f64], values: &[f64], idx: usize, level: f64, step: isize) -> Option<f64> {
    let n = values.len() as isize;
    let mut k = idx as isize;
    loop {
        let next = k + step;
        if next < 0 || next >= n {
            return None;
        }
        let (vk, vn) = (values[k as usize], values[next as usize]);
        if vn <= level {
            let t = (vk - level) / (vk - vn);
            let (xk, xn) = (omega[k as usize], omega[next as usize]);
            return Some(xk + t * (xn - xk));
        }
        if vn > vk {
            return None;
        }
        k = next;
    }
}

fn width_at(omega: &[f64], values: &[f64], idx: usize, level: f64) -> Option<(f64, f64)> {
    Some((
        crossing(omega, values, idx, level, -1)?,
        crossing(omega, values, idx, level, 1)?,
    ))
}

fn measure(omega: &[f64], values: &[f64], idx: usize, prominence: f64, opts: &PeakOptions) -> Result<Peak> {
    let (position, height) = parabola_vertex(
        [omega[idx - 1], omega[idx], omega[idx + 1]],
        [values[idx - 1], values[idx], values[idx + 1]],
    );
    let (lo, hi) = width_at(omega, values, idx, 0.5 * height)
        .or_else(|| width_at(omega, values, idx, height - 0.5 * prominence))
        .unwrap_or((omega[idx], omega[idx]));
    let points = omega.iter().filter(|&&w| w >= lo && w <= hi).count();
    if points < opts.min_points {
        return Err(Error::UnderResolved {
            position,
            points,
            required: opts.min_points,
        });
    }
    Ok(Peak {
        index: idx,
        position,
        height,
        prominence,
        fwhm: hi - lo,
        points,
    })
}

/// Broad + narrow Lorentzian split of a line centered at `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositePeak {
    pub center: f64,
    pub broad_height: f64,
    pub broad_fwhm: f64,
    /// Fitted narrow component.
    pub narrow_height: f64,
    pub narrow_fwhm_fit: f64,
    /// FWHM measured on the data after subtracting the broad fit.
    pub narrow_fwhm: f64,
    pub baseline: f64,
    /// RMS fit residual relative to the peak value.
    pub residual: f64,
}

fn lorentz(x: f64, c: f64, hw: f64) -> f64 {
    let u = (x - c) / hw;
    1.0 / (1.0 + u * u)
}

/// Linear least squares for (broad, narrow, baseline) amplitudes at fixed
/// half-widths; returns the amplitudes and the residual sum of squares.
fn amplitudes(x: &[f64], y: &[f64], c: f64, w: f64, v: f64) -> Option<([f64; 3], f64)> {
    let m = x.len();
    let a = DMatrix::from_fn(m, 3, |i, j| match j {
        0 => lorentz(x[i], c, w),
        1 => lorentz(x[i], c, v),
        _ => 1.0,
    });
    let b = DVector::from_column_slice(y);
    let sol = a.clone().svd(true, true).solve(&b, 1e-14).ok()?;
    let r = &a * &sol - &b;
    Some(([sol[0], sol[1], sol[2]], r.norm_squared()))
}

/// Fits `B L(w) + N L(v) + k` on the window between the local minima that
/// bracket the maximum at `idx`, with the center fixed at the refined maximum.
pub fn decompose_central(omega: &[f64], values: &[f64], idx: usize) -> Result<CompositePeak> {
    check_samples(omega, values)?;
    if idx == 0 || idx + 1 >= values.len() {
        return Err(Error::InvalidParameter(format!("no interior maximum at index {idx}")));
    }
    let mut lo = idx;
    while lo > 0 && values[lo - 1] <= values[lo] {
        lo -= 1;
    }
    let mut hi = idx;
    while hi + 1 < values.len() && values[hi + 1] <= values[hi] {
        hi += 1;
    }
    let x = &omega[lo..=hi];
    let y = &values[lo..=hi];
    if x.len() < 2 * MIN_PEAK_POINTS {
        return Err(Error::UnderResolved {
            position: omega[idx],
            points: x.len(),
            required: 2 * MIN_PEAK_POINTS,
        });
    }
    let (center, top) = parabola_vertex(
        [omega[idx - 1], omega[idx], omega[idx + 1]],
        [values[idx - 1], values[idx], values[idx + 1]],
    );
    let reach = (x[x.len() - 1] - center).max(center - x[0]);
    let spacing = x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);

    // Coarse log grid over (broad, narrow) half-widths with v < w.
    let (w_lo, w_hi) = (spacing.ln(), (4.0 * reach).ln());
    let steps = 60;
    let at = |k: usize| (w_lo + (w_hi - w_lo) * k as f64 / steps as f64).exp();
    let mut best: Option<(f64, f64, f64)> = None;
    for iw in 0..=steps {
        for iv in 0..iw {
            let (w, v) = (at(iw), at(iv));
            if let Some((amp, rss)) = amplitudes(x, y, center, w, v) {
                if amp[0] > 0.0 && amp[1] > 0.0 && best.is_none_or(|b| rss < b.2) {
                    best = Some((w, v, rss));
                }
            }
        }
    }
    let (mut lw, mut lv, mut rss) = best
        .map(|(w, v, r)| (w.ln(), v.ln(), r))
        .ok_or_else(|| Error::InvalidParameter("no two-component fit with positive amplitudes".into()))?;

    // Pattern search in log space.
    let mut step = (w_hi - w_lo) / steps as f64;
    while step > 1e-7 {
        let mut improved = false;
        for (dw, dv) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let (nw, nv) = (lw + dw, lv + dv);
            if nv >= nw {
                continue;
            }
            if let Some((amp, r)) = amplitudes(x, y, center, nw.exp(), nv.exp()) {
                if amp[0] > 0.0 && amp[1] > 0.0 && r < rss {
                    lw = nw;
                    lv = nv;
                    rss = r;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    let (w, v) = (lw.exp(), lv.exp());
    let (amp, rss) = amplitudes(x, y, center, w, v)
        .ok_or_else(|| Error::InvalidParameter("composite fit became singular".into()))?;

    // Narrow width from the data with the broad part removed.
    let rest: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| yi - amp[0] * lorentz(xi, center, w) - amp[2])
        .collect();
    let local = idx - lo;
    let peak_rest = rest[local];
    let narrow_fwhm = width_at(x, &rest, local, 0.5 * peak_rest)
        .map(|(a, b)| b - a)
        .unwrap_or(2.0 * v);
    Ok(CompositePeak {
        center,
        broad_height: amp[0],
        broad_fwhm: 2.0 * w,
        narrow_height: amp[1],
        narrow_fwhm_fit: 2.0 * v,
        narrow_fwhm,
        baseline: amp[2],
        residual: (rss / x.len() as f64).sqrt() / top.abs().max(f64::MIN_POSITIVE),
    })
}
