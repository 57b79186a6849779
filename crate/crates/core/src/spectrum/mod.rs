//! Steady state, two-time correlations and the incoherent emission spectrum.
//!
//! The spectrum of a channel with transition operator `σ_lu = |l⟩⟨u|` is
//! `S(ω) = 2 Re Tr{δσ_lu (−L − iω)⁻¹[ρ δσ_ul]}`, the Laplace transform of
//! the regression formula `⟨δσ_ul(t) δσ_lu(t+τ)⟩ = Tr{δσ_lu e^{Lτ}[ρ δσ_ul]}`.
//! `ω` is measured from the channel's own transition frequency, which for the
//! driven transition is the drive frequency.

mod peaks;

pub use peaks::{
    decompose_central, find_peaks_with, peak_analysis, CompositePeak, Peak, PeakOptions, MIN_PEAK_POINTS,
};

use crate::dissipation::{Liouvillian, TransitionTable};
use crate::error::{Error, Result};
use crate::linalg::{general_eig, hermitian_eig, propagate_ode_with, CVector, ComplexMatrix, LuFactor, OdeOptions, C64};
use crate::parallel::{self, ExecMode};

/// Unique stationary state of a Liouvillian.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: ComplexMatrix,
    /// `‖L vec(ρ)‖`.
    pub residual: f64,
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
}

impl SteadyState {
    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn element(&self, m: usize, n: usize) -> C64 {
        self.rho.get(m, n)
    }

    pub fn population(&self, n: usize) -> f64 {
        self.rho.get(n, n).re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.population(n)).collect()
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    /// `Tr(O ρ)`.
    pub fn expectation(&self, op: &ComplexMatrix) -> C64 {
        (op * &self.rho).trace()
    }
}

/// Eigenvalues below this magnitude count as zero modes.
pub const NULL_SPACE_TOL: f64 = 1e-10;

/// Solves `L vec(ρ) = 0` with `Tr ρ = 1` by replacing the first row of `L`
/// with the trace functional.
pub fn steady_state(l: &Liouvillian) -> Result<SteadyState> {
    let n = l.dim;
    let zero_modes = general_eig(&l.matrix)?
        .values
        .iter()
        .filter(|z| z.norm() < NULL_SPACE_TOL)
        .count();
    if zero_modes != 1 {
        return Err(Error::AmbiguousSteadyState {
            count: zero_modes,
            threshold: NULL_SPACE_TOL,
        });
    }
    let mut m = l.matrix.clone();
    for col in 0..n * n {
        m.set(0, col, C64::new(0.0, 0.0));
    }
    for i in 0..n {
        m.set(0, i + n * i, C64::new(1.0, 0.0));
    }
    let mut b = CVector::zeros(n * n);
    b[0] = C64::new(1.0, 0.0);
    let x = LuFactor::new(&m, Some("steady state"))?.solve(&b)?;
    let residual = l.matrix.mul_vec(&x).norm();
    let raw = ComplexMatrix::unvectorize(&x, n)?;
    let hermiticity_defect = raw.hermiticity_defect();
    let rho = (&raw + &raw.adjoint()).scale_real(0.5);
    let min_eigenvalue = hermitian_eig(&rho)?.values.first().copied().unwrap_or(0.0);
    Ok(SteadyState {
        rho,
        residual,
        hermiticity_defect,
        min_eigenvalue,
    })
}

/// `O − Tr(O ρ) I`.
pub fn fluctuation(op: &ComplexMatrix, ss: &SteadyState) -> ComplexMatrix {
    let mean = ss.expectation(op);
    op - &ComplexMatrix::identity(op.nrows()).scale(mean)
}

/// `Tr(B Y)` with `Y` given vectorized.
fn trace_product(b: &ComplexMatrix, y: &CVector) -> C64 {
    let n = b.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += b.get(i, j) * y[j + n * i];
        }
    }
    acc
}

/// `⟨δA(t) δB(t+τ)⟩` in the steady state, by propagating `ρ δA` in time.
pub fn correlation(
    l: &Liouvillian,
    ss: &SteadyState,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    taus: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<C64>> {
    if taus.iter().any(|t| !(*t >= 0.0)) || taus.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("delays must be >= 0 and ascending".into()));
    }
    let da = fluctuation(a, ss);
    let db = fluctuation(b, ss);
    let mut v = (&ss.rho * &da).vectorize();
    let mut now = 0.0;
    let mut out = Vec::with_capacity(taus.len());
    for &tau in taus {
        v = propagate_ode_with(&l.matrix, &v, tau - now, opts)?;
        now = tau;
        out.push(trace_product(&db, &v));
    }
    Ok(out)
}

/// One emission channel `α σ_{lower,upper}` of the field operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub lower: usize,
    pub upper: usize,
    pub alpha: C64,
    /// Transition frequency the channel's spectrum is centered on.
    pub frequency: f64,
    pub label: String,
}

/// Positive-frequency field derivative `Ẋ⁺ = Σ α_lu σ_lu` split by channel;
/// the zero-point amplitude is 1.
#[derive(Debug, Clone)]
pub struct EmissionOperators {
    pub dim: usize,
    pub channels: Vec<Channel>,
}

impl EmissionOperators {
    /// Channels `(lower, upper)` in local indices of `table`, labeled
    /// `S1, S2, …` in the order given.
    pub fn from_channels(table: &TransitionTable, pairs: &[(usize, usize)]) -> Result<Self> {
        let n = table.len();
        let mut channels = Vec::with_capacity(pairs.len());
        for (i, &(lower, upper)) in pairs.iter().enumerate() {
            if lower >= upper || upper >= n {
                return Err(Error::InvalidParameter(format!(
                    "emission channel ({lower}, {upper}) must satisfy lower < upper < {n}"
                )));
            }
            channels.push(Channel {
                lower,
                upper,
                alpha: table.alpha.get(lower, upper),
                frequency: table.gap(lower, upper),
                label: format!("S{}", i + 1),
            });
        }
        Ok(Self { dim: n, channels })
    }

    /// The three channels of the four-level model: `0↔3`, `0↔1`, `1↔3`.
    pub fn four_level(table: &TransitionTable) -> Result<Self> {
        Self::from_channels(table, &[(0, 3), (0, 1), (1, 3)])
    }

    pub fn xdot_plus(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim, self.dim);
        for c in &self.channels {
            m.set(c.lower, c.upper, m.get(c.lower, c.upper) + c.alpha);
        }
        m
    }

    pub fn xdot_minus(&self) -> ComplexMatrix {
        self.xdot_plus().adjoint()
    }
}

/// Sampled incoherent spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    /// Offset from each channel's transition frequency, units of `ω_q`.
    pub omega: Vec<f64>,
    pub total: Vec<f64>,
    /// Per-channel spectra, same order as `labels`.
    pub parts: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    /// Largest channel cross-correlation term relative to `max(total)`.
    pub cross_correlation: f64,
    /// `|α|² |⟨σ_lu⟩|²` per channel: weight of the coherent line that the
    /// incoherent spectrum excludes.
    pub coherent_weight: Vec<f64>,
    /// Factor applied to all values (1 unless normalized).
    pub scale: f64,
}

impl SpectrumResult {
    pub fn max(&self) -> f64 {
        self.total.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Copy with the total maximum scaled to 1.
    pub fn normalized(&self) -> Self {
        let m = self.max();
        if !(m > 0.0) {
            return self.clone();
        }
        let f = 1.0 / m;
        let scale_vec = |v: &Vec<f64>| v.iter().map(|x| x * f).collect::<Vec<_>>();
        Self {
            omega: self.omega.clone(),
            total: scale_vec(&self.total),
            parts: self.parts.iter().map(scale_vec).collect(),
            labels: self.labels.clone(),
            cross_correlation: self.cross_correlation,
            coherent_weight: self.coherent_weight.clone(),
            scale: self.scale * f,
        }
    }

    pub fn peaks(&self) -> Result<Vec<Peak>> {
        peak_analysis(&self.omega, &self.total)
    }
}

struct Prepared {
    /// `vec(ρ δσ_ul)` per channel.
    sources: Vec<CVector>,
    /// `δσ_lu` per channel.
    probes: Vec<ComplexMatrix>,
    alphas: Vec<C64>,
    /// `vec(ρ) vec(I)†`. Sources are traceless, so adding this to `−L − iω`
    /// leaves their solutions unchanged while removing the steady-state null
    /// vector that makes the resolvent singular at `ω = 0`.
    pin: ComplexMatrix,
}

fn prepare(ss: &SteadyState, ops: &EmissionOperators) -> Prepared {
    let n = ops.dim;
    let mut sources = Vec::new();
    let mut probes = Vec::new();
    for c in &ops.channels {
        let raising = ComplexMatrix::unit(n, c.upper, c.lower);
        let lowering = ComplexMatrix::unit(n, c.lower, c.upper);
        sources.push((&ss.rho * &fluctuation(&raising, ss)).vectorize());
        probes.push(fluctuation(&lowering, ss));
    }
    let rho = ss.rho.vectorize();
    let pin = ComplexMatrix::from_fn(n * n, n * n, |r, c| if c % (n + 1) == 0 { rho[r] } else { C64::new(0.0, 0.0) });
    Prepared {
        sources,
        probes,
        pin,
        alphas: ops.channels.iter().map(|c| c.alpha).collect(),
    }
}

/// Per-channel values and the summed cross terms at one frequency.
fn resolvent_point(l: &Liouvillian, prep: &Prepared, omega: f64) -> Result<(Vec<f64>, f64)> {
    let n2 = l.dim * l.dim;
    let shift = ComplexMatrix::identity(n2).scale(C64::new(0.0, omega));
    let m = &(&(-&l.matrix) - &shift) + &prep.pin;
    let lu = LuFactor::new(&m, Some(&format!("resolvent at omega = {omega:.6e}")))?;
    let ys: Vec<CVector> = prep.sources.iter().map(|s| lu.solve(s)).collect::<Result<_>>()?;
    let k = ys.len();
    let mut parts = Vec::with_capacity(k);
    let mut cross = C64::new(0.0, 0.0);
    for (c, y) in ys.iter().enumerate() {
        for d in 0..k {
            let t = prep.alphas[c].conj() * prep.alphas[d] * trace_product(&prep.probes[d], y);
            if c == d {
                parts.push(2.0 * t.re);
            } else {
                cross += t;
            }
        }
    }
    Ok((parts, 2.0 * cross.re))
}

/// Resolvent evaluation of every channel on `grid`; one LU per frequency.
pub fn emission_spectrum(
    l: &Liouvillian,
    ss: &SteadyState,
    ops: &EmissionOperators,
    grid: &[f64],
    mode: ExecMode,
) -> Result<SpectrumResult> {
    if ops.dim != l.dim || ss.dim() != l.dim {
        return Err(Error::DimensionMismatch(format!(
            "Liouvillian on {} levels, steady state on {}, emission operators on {}",
            l.dim,
            ss.dim(),
            ops.dim
        )));
    }
    if grid.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("frequency grid"));
    }
    let prep = prepare(ss, ops);
    let points = parallel::try_map(grid, mode, |&w| resolvent_point(l, &prep, w))?;

    let k = ops.channels.len();
    let mut parts = vec![Vec::with_capacity(grid.len()); k];
    let mut total = Vec::with_capacity(grid.len());
    let mut cross_max: f64 = 0.0;
    for (vals, cross) in &points {
        for (c, v) in vals.iter().enumerate() {
            parts[c].push(*v);
        }
        total.push(vals.iter().sum());
        cross_max = cross_max.max(cross.abs());
    }
    let peak = total.iter().copied().fold(0.0_f64, |m, v: f64| m.max(v.abs()));
    let cross_correlation = if peak > 0.0 { cross_max / peak } else { cross_max };
    let coherent_weight = ops
        .channels
        .iter()
        .map(|c| c.alpha.norm_sqr() * ss.element(c.upper, c.lower).norm_sqr())
        .collect();
    Ok(SpectrumResult {
        omega: grid.to_vec(),
        total,
        parts,
        labels: ops.channels.iter().map(|c| c.label.clone()).collect(),
        cross_correlation,
        coherent_weight,
        scale: 1.0,
    })
}

/// Uniform points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub const GRID_POINTS: usize = 2001;
pub const REFINE_POINTS: usize = 401;

/// 2001 points over `[−1.5 Ω, 1.5 Ω]` merged with 401 points over a window of
/// width `20 · narrow_width` around zero.
pub fn default_grid(omega: f64, narrow_width: f64) -> Vec<f64> {
    let span = 1.5 * omega.abs();
    let half = 10.0 * narrow_width.abs();
    let mut g = linspace(-span, span, GRID_POINTS);
    if half > 0.0 {
        g.extend(linspace(-half, half, REFINE_POINTS));
    }
    g.sort_by(f64::total_cmp);
    let eps = 1e-12 * span.max(half);
    g.dedup_by(|b, a| (*b - *a).abs() <= eps);
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_sorted_and_merged() {
        let g = default_grid(1.0, 0.01);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!(g.len() > GRID_POINTS && g.len() <= GRID_POINTS + REFINE_POINTS);
        assert_eq!(g[0], -1.5);
        assert_eq!(*g.last().unwrap(), 1.5);
    }

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(linspace(2.0, 3.0, 1), vec![2.0]);
    }

    use crate::cli::Preset;
    use crate::testutil::driven;
    use proptest::prelude::*;

    /// `S_c(ω)` summed mode by mode over the eigen-decomposition of `L`.
    fn eigen_expansion(l: &Liouvillian, ss: &SteadyState, ops: &EmissionOperators, grid: &[f64]) -> Vec<Vec<f64>> {
        let eig = general_eig(&l.matrix).unwrap();
        let prep = prepare(ss, ops);
        let n2 = l.dim * l.dim;
        prep.sources
            .iter()
            .zip(&prep.probes)
            .zip(&prep.alphas)
            .map(|((src, probe), alpha)| {
                let weights: Vec<(C64, C64)> = (0..n2)
                    .filter(|&k| eig.values[k].norm() >= NULL_SPACE_TOL)
                    .map(|k| {
                        let proj: C64 = (0..n2).map(|j| eig.left.get(k, j) * src[j]).sum();
                        let mode = eig.right.column(k) * proj;
                        (eig.values[k], trace_product(probe, &mode))
                    })
                    .collect();
                grid.iter()
                    .map(|&w| {
                        let s: C64 = weights.iter().map(|(lam, c)| c / (-lam - C64::new(0.0, w))).sum();
                        2.0 * (alpha.norm_sqr() * s).re
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn resolvent_matches_eigen_expansion_on_presets() {
        for preset in Preset::ALL {
            let run = driven(&preset.params());
            let ops = EmissionOperators::four_level(&run.model.table).unwrap();
            let mut grid = linspace(-1.5 * run.model.omega, 1.5 * run.model.omega, 61);
            grid.push(0.0);
            grid.sort_by(f64::total_cmp);
            let s = emission_spectrum(&run.l, &run.ss, &ops, &grid, ExecMode::Serial).unwrap();
            let oracle = eigen_expansion(&run.l, &run.ss, &ops, &grid);
            let scale = s.max();
            for (part, reference) in s.parts.iter().zip(&oracle) {
                for (a, b) in part.iter().zip(reference) {
                    assert!((a - b).abs() <= 1e-7 * scale, "{preset}: {a} vs {b}");
                }
            }
            assert!(s.cross_correlation <= 1e-10, "{preset}: {}", s.cross_correlation);
        }
    }

    #[test]
    fn steady_state_is_a_density_matrix() {
        for preset in Preset::ALL {
            let ss = driven(&preset.params()).ss;
            assert!((ss.trace() - 1.0).norm() <= 1e-12);
            assert!(ss.hermiticity_defect <= 1e-10 && ss.residual <= 1e-12);
            assert!(ss.min_eigenvalue >= -1e-10, "{preset}: {}", ss.min_eigenvalue);
        }
    }

    #[test]
    fn correlation_starts_at_equal_time_moment() {
        let run = driven(&Preset::Fig4b.params());
        let raising = ComplexMatrix::unit(4, 3, 0);
        let lowering = ComplexMatrix::unit(4, 0, 3);
        let c = correlation(&run.l, &run.ss, &raising, &lowering, &[0.0], &OdeOptions::default()).unwrap();
        let mean = run.ss.element(0, 3) * run.ss.element(3, 0);
        let expected = run.ss.population(3) - mean.re;
        assert!((c[0] - expected).norm() <= 1e-12);
        assert!(correlation(&run.l, &run.ss, &raising, &lowering, &[1.0, 0.5], &OdeOptions::default()).is_err());
    }

    #[test]
    fn undriven_model_has_no_incoherent_emission() {
        let mut p = Preset::Fig4b.params();
        p.epsilon = 0.0;
        let run = driven(&p);
        let ops = EmissionOperators::four_level(&run.model.table).unwrap();
        let grid = linspace(-0.01, 0.01, 21);
        let s = emission_spectrum(&run.l, &run.ss, &ops, &grid, ExecMode::Serial).unwrap();
        assert!(s.total.iter().all(|v| v.abs() < 1e-14));
        assert!(s.peaks().unwrap().is_empty());
    }

    #[test]
    fn narrow_line_sits_on_broad_central_line() {
        let run = driven(&Preset::Fig4c.params());
        let ops = EmissionOperators::four_level(&run.model.table).unwrap();
        let grid = default_grid(run.model.omega, 0.02 * crate::OMEGA_A);
        let s = emission_spectrum(&run.l, &run.ss, &ops, &grid, ExecMode::Parallel).unwrap();
        let centre = s.omega.iter().position(|w| *w == 0.0).unwrap();
        let comp = decompose_central(&s.omega, &s.total, centre).unwrap();
        assert!(comp.narrow_fwhm < 0.1 * comp.broad_fwhm, "{comp:?}");
    }

    #[test]
    fn rejects_mismatched_dimensions() {
        let run = driven(&Preset::Fig4b.params());
        let ops = EmissionOperators { dim: 3, channels: Vec::new() };
        assert!(emission_spectrum(&run.l, &run.ss, &ops, &[0.0], ExecMode::Serial).is_err());
        assert!(EmissionOperators::from_channels(&run.model.table, &[(3, 0)]).is_err());
    }

    #[test]
    fn normalization_tracks_scale() {
        let run = driven(&Preset::Fig6b.params());
        let ops = EmissionOperators::four_level(&run.model.table).unwrap();
        let s = emission_spectrum(&run.l, &run.ss, &ops, &linspace(-0.01, 0.01, 41), ExecMode::Serial).unwrap();
        let n = s.normalized();
        assert!((n.max() - 1.0).abs() < 1e-15);
        assert!((n.scale * s.max() - 1.0).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn spectrum_is_nonnegative_and_mode_independent(
            // Above the level crossing ψ₃ is the dark antisymmetric state.
            g in 0.05f64..0.7,
            kappa_wa in 0.5f64..8.0,
            gamma_wa in 0.005f64..0.3,
            eps_wa in 1.0f64..10.0,
        ) {
            let p = crate::model::SystemParams {
                g,
                kappa: kappa_wa * crate::OMEGA_A,
                gamma: gamma_wa * crate::OMEGA_A,
                epsilon: eps_wa * crate::OMEGA_A,
                n_max: 12,
                ..Default::default()
            };
            let run = driven(&p);
            prop_assert!(run.ss.min_eigenvalue >= -1e-10);
            let ops = EmissionOperators::four_level(&run.model.table).unwrap();
            let grid = linspace(-1.5 * run.model.omega, 1.5 * run.model.omega, 41);
            let serial = emission_spectrum(&run.l, &run.ss, &ops, &grid, ExecMode::Serial).unwrap();
            let par = emission_spectrum(&run.l, &run.ss, &ops, &grid, ExecMode::Parallel).unwrap();
            prop_assert_eq!(&serial, &par);
            let floor = -1e-9 * serial.max();
            for part in &serial.parts {
                prop_assert!(part.iter().all(|v| *v >= floor));
            }
        }
    }
}

