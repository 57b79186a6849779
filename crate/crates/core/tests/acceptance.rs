//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process fails if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;

use ultranarrow::analytic::{self, peak_height_ratios, AnalyticModel, Component, LineLabel, PlusMinusBasis};
use ultranarrow::cli::Preset;
use ultranarrow::dissipation::{build_liouvillian, effective_drive, transition_table, truncation_audit, FourLevelModel, Liouvillian, FOUR_LEVELS};
use ultranarrow::linalg::{ComplexMatrix, OdeOptions};
use ultranarrow::model::{diagonalize, find_anticrossing, SystemParams};
use ultranarrow::spectrum::{self, correlation, decompose_central, default_grid, emission_spectrum, peak_analysis, EmissionOperators, Peak, SpectrumResult, SteadyState};
use ultranarrow::{ExecMode, C64, OMEGA_A};

type Outcome = Result<(bool, String), String>;

struct Run {
    model: FourLevelModel,
    l: Liouvillian,
    ss: SteadyState,
    an: AnalyticModel,
    spec: SpectrumResult,
}

fn run(p: &SystemParams, mode: ExecMode) -> Result<Run, String> {
    let d = diagonalize(p).map_err(|e| e.to_string())?;
    let model = effective_drive(&d, p, 3).map_err(|e| e.to_string())?;
    let l = build_liouvillian(&model).map_err(|e| e.to_string())?;
    let ss = spectrum::steady_state(&l).map_err(|e| e.to_string())?;
    let an = analytic::analyze(&model).map_err(|e| e.to_string())?;
    let grid = default_grid(model.omega, 2.0 * an.lorentzians.lambda1_minus().re);
    let ops = EmissionOperators::four_level(&model.table).map_err(|e| e.to_string())?;
    let spec = emission_spectrum(&l, &ss, &ops, &grid, mode).map_err(|e| e.to_string())?;
    Ok(Run { model, l, ss, an, spec })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn wa(v: f64) -> f64 {
    v / OMEGA_A
}

fn avoided_crossing() -> Outcome {
    let a = find_anticrossing(&SystemParams::default(), (3, 4), (0.05, 0.4)).map_err(|e| e.to_string())?;
    let pass = (a.g - 0.2).abs() <= 0.02 && (a.gap - 2e-2).abs() <= 0.4e-2;
    Ok((pass, format!("minimum E4 - E3 = {:.6e} wq at g = {:.6} wq", a.gap, a.g)))
}

fn level_crossing() -> Outcome {
    let p = SystemParams::default();
    let a = find_anticrossing(&p, (2, 3), (0.6, 0.8)).map_err(|e| e.to_string())?;
    let d = diagonalize(&p.with_g(0.7056)).map_err(|e| e.to_string())?;
    let gap_nominal = d.gap(2, 3);
    let pass = (a.g - 0.7056).abs() <= 0.005 && a.gap <= 1e-3 && gap_nominal.abs() <= 1e-3;
    Ok((
        pass,
        format!(
            "minimum E3 - E2 = {:.3e} wq at g = {:.7} wq; E3 - E2 = {:.3e} wq at g = 0.7056",
            a.gap, a.g, gap_nominal
        ),
    ))
}

fn weak_coupling_rates() -> Outcome {
    let p = SystemParams::default().with_g(1e-6);
    let d = diagonalize(&p).map_err(|e| e.to_string())?;
    let t = transition_table(&d, &p, &FOUR_LEVELS).map_err(|e| e.to_string())?;
    let r30 = t.gamma_total(3, 0) / p.kappa;
    let r10 = t.gamma_total(1, 0) / p.gamma;
    let r20 = t.gamma_total(2, 0) / p.gamma;
    let pass = [r30, r10, r20].iter().all(|r| (r - 1.0).abs() <= 0.01);
    Ok((pass, format!("G30/kappa = {r30:.6}, G10/gamma = {r10:.6}, G20/gamma = {r20:.6}")))
}

fn steady_state_structure() -> Outcome {
    let r = run(&Preset::Fig4b.params(), ExecMode::Parallel)?;
    let rho01 = r.ss.element(0, 1).norm();
    let rho13 = r.ss.element(1, 3).norm();
    let pm = PlusMinusBasis::new().to_pm(&r.ss.rho);
    let split = (pm.get(3, 3) - pm.get(0, 0)).norm();
    let pass = rho01 <= 1e-10 && rho13 <= 1e-10 && split <= 1e-10;
    Ok((pass, format!("|rho01| = {rho01:.2e}, |rho13| = {rho13:.2e}, |rho++ - rho--| = {split:.2e}")))
}

/// Maxima sorted by position, nearest each expected location.
fn match_peaks<'a>(peaks: &'a [Peak], expected: &[f64], tol: f64) -> Option<Vec<&'a Peak>> {
    expected
        .iter()
        .map(|&x| {
            peaks
                .iter()
                .filter(|p| (p.position - x).abs() <= tol)
                .min_by(|a, b| (a.position - x).abs().total_cmp(&(b.position - x).abs()))
        })
        .collect()
}

fn morphology() -> Outcome {
    let r = run(&Preset::Fig4b.params(), ExecMode::Parallel)?;
    let omega = r.model.omega;
    let peaks = r.spec.peaks().map_err(|e| e.to_string())?;
    let expected = [-omega, -0.5 * omega, 0.0, 0.5 * omega, omega];
    let Some(m) = match_peaks(&peaks, &expected, 0.05 * omega) else {
        return Ok((false, format!("{} maxima, not at 0, +-W/2, +-W", peaks.len())));
    };
    let cp = decompose_central(&r.spec.omega, &r.spec.total, m[2].index).map_err(|e| e.to_string())?;
    let width_ratio = cp.narrow_fwhm / cp.broad_fwhm;
    let outer = rel(m[0].height, m[4].height);
    let inner = rel(m[1].height, m[3].height);
    let pass = peaks.len() == 5 && cp.narrow_height > 0.0 && width_ratio < 0.1 && outer <= 0.01 && inner <= 0.01;
    let pos: Vec<String> = peaks.iter().map(|p| format!("{:.3}", wa(p.position))).collect();
    Ok((
        pass,
        format!(
            "{} maxima at [{}] wa (W = {:.4} wa); narrow/broad central FWHM = {:.4} / {:.4} = {:.3}; \
             outer asymmetry {:.1e}, inner asymmetry {:.1e}",
            peaks.len(),
            pos.join(", "),
            wa(omega),
            wa(cp.narrow_fwhm),
            wa(cp.broad_fwhm),
            width_ratio,
            outer,
            inner
        ),
    ))
}

fn linewidth_ratios() -> Outcome {
    let p = Preset::Fig4b.params();
    let d = diagonalize(&p).map_err(|e| e.to_string())?;
    let base = effective_drive(&d, &p, 3).map_err(|e| e.to_string())?;
    let at = |gamma_wa: f64| -> Result<(f64, f64, f64), String> {
        let an = analytic::analyze(&base.with_rates(2.0 * OMEGA_A, gamma_wa * OMEGA_A)).map_err(|e| e.to_string())?;
        let set = &an.lorentzians;
        let h = peak_height_ratios(set);
        Ok((set.lambda1_minus().re / set.lambda0(), h.narrow_over_central, h.narrow_pair_over_central))
    };
    let (ratio_a, height_a, pair_a) = at(0.1)?;
    let (ratio_b, height_b, pair_b) = at(0.02)?;
    let checks = [
        (ratio_a - 0.2).abs() <= 0.05,
        ratio_b <= 0.02,
        (height_a - 1.0 / 16.0).abs() <= 0.5 / 16.0,
        (height_b - 0.25).abs() <= 0.5 * 0.25,
    ];
    let marks: Vec<&str> = checks.iter().map(|&c| if c { "ok" } else { "miss" }).collect();
    Ok((
        checks.iter().all(|&c| c),
        format!(
            "gamma = 0.1 wa: l1-/l0 = {ratio_a:.4} [{}], narrow/central height = {height_a:.3e} [{}] \
             (both narrow lines {pair_a:.3e}); gamma = 0.02 wa: l1-/l0 = {ratio_b:.4} [{}], \
             narrow/central height = {height_b:.3e} [{}] (both narrow lines {pair_b:.3e})",
            marks[0], marks[2], marks[1], marks[3]
        ),
    ))
}

fn degenerate_collapse() -> Outcome {
    let r = run(&Preset::Fig6b.params(), ExecMode::Parallel)?;
    let t = &r.model.table;
    let g32 = t.gamma_total(3, 2);
    let rho22 = r.ss.population(2);
    let set = &r.an.lorentzians;
    let amp = |l| set.entry(Component::S1, l).map(|e| e.amplitude.norm()).unwrap_or(f64::NAN);
    let (c1m, c0) = (amp(LineLabel::NarrowMinus), amp(LineLabel::Central));
    let predicted = (2.0 * t.gamma_total(1, 0) + t.gamma_total(3, 1)) / 2.0;
    let l1p = set.lambda1_plus();
    let dev = (l1p - C64::new(predicted, 0.0)).norm();
    let pass = g32 <= 1e-8 && rho22 <= 1e-8 && c1m <= 1e-8 * c0 && dev <= 1e-10;
    Ok((
        pass,
        format!(
            "G32 = {g32:.2e} wq, rho22 = {rho22:.2e}, |C1-|/|C0| = {:.2e}, |l1+ - (2 G10 + G31)/2| = {dev:.2e} wq",
            c1m / c0
        ),
    ))
}

/// `2 Re ∫₀^T f(τ) e^{iωτ} dτ` by composite Simpson on a uniform grid.
fn simpson_transform(values: &[C64], h: f64, omega: f64) -> f64 {
    let n = values.len() - 1;
    debug_assert!(n.is_multiple_of(2));
    let mut acc = C64::new(0.0, 0.0);
    for (i, v) in values.iter().enumerate() {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += v * C64::from_polar(w, omega * h * i as f64);
    }
    2.0 * (acc * (h / 3.0)).re
}

fn oracle_equivalence() -> Outcome {
    let p = Preset::Fig4b.params();
    let r = run(&p, ExecMode::Parallel)?;
    let peaks = r.spec.peaks().map_err(|e| e.to_string())?;

    let slowest = r
        .l
        .eigenvalues()
        .map_err(|e| e.to_string())?
        .iter()
        .map(|z| -z.re)
        .filter(|&x| x > 1e-10)
        .fold(f64::INFINITY, f64::min);
    let h = 0.05 / r.model.omega;
    let mut steps = (25.0 / slowest / h).ceil() as usize;
    steps += steps % 2;
    let taus: Vec<f64> = (0..=steps).map(|i| i as f64 * h).collect();
    let opts = OdeOptions {
        tol: 1e-12,
        ..OdeOptions::default()
    };
    let ops = EmissionOperators::four_level(&r.model.table).map_err(|e| e.to_string())?;
    let mut correlations = Vec::new();
    for c in &ops.channels {
        let raising = ComplexMatrix::unit(4, c.upper, c.lower);
        let lowering = ComplexMatrix::unit(4, c.lower, c.upper);
        let corr = correlation(&r.l, &r.ss, &raising, &lowering, &taus, &opts).map_err(|e| e.to_string())?;
        correlations.push((c.alpha.norm_sqr(), corr));
    }
    let mut worst: f64 = 0.0;
    for pk in &peaks {
        let w = r.spec.omega[pk.index];
        let qrt: f64 = correlations.iter().map(|(a2, c)| a2 * simpson_transform(c, h, w)).sum();
        worst = worst.max(rel(qrt, r.spec.total[pk.index]));
    }

    let audit = truncation_audit(&diagonalize(&p).map_err(|e| e.to_string())?, &p, 8).map_err(|e| e.to_string())?;
    let spectra_ok = !peaks.is_empty() && worst <= 1e-4;
    let populations_ok = audit.population_deviation <= 1e-3;
    Ok((
        spectra_ok && populations_ok,
        format!(
            "resolvent vs time-domain worst relative difference {worst:.2e} over {} maxima ({} delays) [{}]; \
             4-level vs 8-level population deviation {:.3e} (leaked {:.3e}) [{}]",
            peaks.len(),
            taus.len(),
            if spectra_ok { "ok" } else { "miss" },
            audit.population_deviation,
            audit.leaked_population,
            if populations_ok { "ok" } else { "miss" }
        ),
    ))
}

fn decomposition_agreement() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for preset in [Preset::Fig4b, Preset::Fig6b] {
        let r = run(&preset.params(), ExecMode::Parallel)?;
        let omega = r.model.omega;
        let numeric = r.spec.peaks().map_err(|e| e.to_string())?;
        let curve = r.an.lorentzians.curve(&r.spec.omega);
        let analytic = peak_analysis(&r.spec.omega, &curve).map_err(|e| e.to_string())?;
        let mut worst_h: f64 = 0.0;
        let mut worst_w: f64 = 0.0;
        let mut lines = Vec::new();
        for pk in &numeric {
            let height = rel(curve[pk.index], r.spec.total[pk.index]);
            let width = match_peaks(&analytic, &[pk.position], 0.05 * omega)
                .map(|m| rel(m[0].fwhm, pk.fwhm))
                .unwrap_or(f64::INFINITY);
            worst_h = worst_h.max(height);
            worst_w = worst_w.max(width);
            lines.push(format!("{:.3} wa: {:.1}%/{:.1}%", wa(pk.position), 100.0 * height, 100.0 * width));
        }
        let ok = !numeric.is_empty() && worst_h <= 0.05 && worst_w <= 0.10;
        pass &= ok;
        detail.push(format!(
            "{preset} [{}] height/FWHM differences {}",
            if ok { "ok" } else { "miss" },
            lines.join(", ")
        ));
    }
    Ok((pass, detail.join("; ")))
}

fn property_suites() -> Outcome {
    let mut worst_trace: f64 = 0.0;
    let mut worst_positivity = f64::INFINITY;
    let mut worst_spectrum = f64::INFINITY;
    let mut identical = true;
    for preset in Preset::ALL {
        let par = run(&preset.params(), ExecMode::Parallel)?;
        let ser = run(&preset.params(), ExecMode::Serial)?;
        worst_trace = worst_trace.max(par.l.trace_defect());
        worst_positivity = worst_positivity.min(par.ss.min_eigenvalue);
        let max = par.spec.max();
        let min = par.spec.total.iter().copied().fold(f64::INFINITY, f64::min);
        worst_spectrum = worst_spectrum.min(min / max);
        identical &= par.spec == ser.spec;
    }
    let pass = worst_trace <= 1e-10 && worst_positivity >= -1e-9 && worst_spectrum >= -1e-8 && identical;
    Ok((
        pass,
        format!(
            "{} presets: trace defect {worst_trace:.2e}, min rho eigenvalue {worst_positivity:.2e}, \
             min S/max S {worst_spectrum:.2e}, serial == parallel: {identical}",
            Preset::ALL.len()
        ),
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("avoided crossing of levels 3 and 4", avoided_crossing),
        ("crossing of levels 2 and 3", level_crossing),
        ("weak-coupling rate limits", weak_coupling_rates),
        ("steady-state structure", steady_state_structure),
        ("spectrum morphology", morphology),
        ("narrow-line linewidth and height ratios", linewidth_ratios),
        ("degenerate collapse", degenerate_collapse),
        ("oracle equivalence", oracle_equivalence),
        ("analytic vs numerical decomposition", decomposition_agreement),
        ("property suites on every preset", property_suites),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let (pass, detail) = match outcome {
            Ok(x) => x,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("criterion {:>2} {}: {name}: {detail}", i + 1, if pass { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
