use clap::Args;
use serde_json::json;

use super::config::{CommonArgs, RunConfig, ANTICROSSING_G, CROSSING_G};
use super::output::{Report, Table};
use super::CliError;
use crate::analytic::{self, peak_height_ratios, Component, SweepParam};
use crate::dissipation::{build_liouvillian, effective_drive, transition_table, truncation_audit, FOUR_LEVELS};
use crate::model::{diagonalize, find_anticrossing, ladder_sweep, SystemParams};
use crate::parallel;
use crate::spectrum::{self, decompose_central, default_grid, emission_spectrum, linspace, EmissionOperators};
use crate::OMEGA_A;

fn wa(v: f64) -> f64 {
    v / OMEGA_A
}

fn g_grid(gmin: f64, gmax: f64, npts: usize) -> Result<Vec<f64>, CliError> {
    if npts == 0 || !(gmin >= 0.0) || !(gmax >= gmin) || !gmax.is_finite() {
        return Err(CliError::Config(format!(
            "coupling grid needs 0 <= gmin <= gmax and npts >= 1 (got {gmin}, {gmax}, {npts})"
        )));
    }
    Ok(linspace(gmin, gmax, npts))
}

#[derive(Debug, Clone, Args)]
pub struct LadderArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 0.0)]
    pub gmin: f64,
    #[arg(long, default_value_t = 0.8)]
    pub gmax: f64,
    #[arg(long, default_value_t = 161)]
    pub npts: usize,
    /// Excited levels reported per row.
    #[arg(long, default_value_t = 6)]
    pub levels: usize,
}

/// Located minimum of `E_upper − E_lower` if the search window overlaps the sweep.
fn locate(p: &SystemParams, pair: (usize, usize), window: (f64, f64), sweep: (f64, f64)) -> serde_json::Value {
    let (lo, hi) = (window.0.max(sweep.0), window.1.min(sweep.1));
    if !(lo < hi) {
        return serde_json::Value::Null;
    }
    match find_anticrossing(p, pair, (lo, hi)) {
        Ok(a) => {
            eprintln!("E{} - E{}: minimum gap {:.6e} wq at g = {:.7} wq", a.upper, a.lower, a.gap, a.g);
            json!({"g_over_wq": a.g, "gap_over_wq": a.gap})
        }
        Err(e) => {
            log::warn!("{e}");
            json!({"error": e.to_string()})
        }
    }
}

pub fn cmd_ladder(a: &LadderArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::resolve("ladder", &a.common)?;
    let grid = g_grid(a.gmin, a.gmax, a.npts)?;
    if a.levels == 0 {
        return Err(CliError::Config("levels must be >= 1".into()));
    }
    cfg.option("gmin", a.gmin);
    cfg.option("gmax", a.gmax);
    cfg.option("npts", a.npts);
    cfg.option("levels", a.levels);
    let p = cfg.params;
    let ladder = ladder_sweep(&p, &grid, a.levels, cfg.mode)?;

    let mut table = Table::new();
    table.push("g_over_wq", ladder.g.clone());
    for n in 1..=a.levels {
        table.push(format!("E{n}_over_wq"), ladder.level(n));
    }
    let mut report = Report::new(&cfg, table);
    report.note("anticrossing_3_4", locate(&p, (3, 4), (0.05, 0.4), (a.gmin, a.gmax)));
    report.note("crossing_2_3", locate(&p, (2, 3), (0.6, 0.8), (a.gmin, a.gmax)));
    report.write(&cfg)
}

#[derive(Debug, Clone, Args)]
pub struct RatesArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 0.0)]
    pub gmin: f64,
    #[arg(long, default_value_t = 0.8)]
    pub gmax: f64,
    #[arg(long, default_value_t = 161)]
    pub npts: usize,
}

const RATE_PAIRS: [(usize, usize); 6] = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)];

pub fn cmd_rates(a: &RatesArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::resolve("rates", &a.common)?;
    let grid = g_grid(a.gmin, a.gmax, a.npts)?;
    cfg.option("gmin", a.gmin);
    cfg.option("gmax", a.gmax);
    cfg.option("npts", a.npts);
    let p = cfg.params;
    let rows = parallel::try_map(&grid, cfg.mode, |&g| -> crate::Result<Vec<f64>> {
        let pg = p.with_g(g);
        let t = transition_table(&diagonalize(&pg)?, &pg, &FOUR_LEVELS)?;
        Ok(RATE_PAIRS.iter().map(|&(j, k)| t.gamma_total(j, k)).collect())
    })?;

    let mut table = Table::new();
    table.push("g_over_wq", grid.clone());
    for (i, (j, k)) in RATE_PAIRS.iter().enumerate() {
        table.push(format!("Gamma{j}{k}_over_wa"), rows.iter().map(|r| wa(r[i])).collect());
    }
    let mut report = Report::new(&cfg, table);
    report.note("kappa_over_wa", wa(p.kappa));
    report.note("gamma_over_wa", wa(p.gamma));
    report.write(&cfg)
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Scale every spectrum column so the numerical maximum is 1.
    #[arg(long)]
    pub normalize: bool,
}

pub fn cmd_spectrum(a: &SpectrumArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::resolve("spectrum", &a.common)?;
    cfg.option("normalize", a.normalize);
    let p = cfg.params;
    let d = diagonalize(&p)?;
    let model = effective_drive(&d, &p, 3)?;
    let l = build_liouvillian(&model)?;
    let ss = spectrum::steady_state(&l)?;
    let ops = EmissionOperators::four_level(&model.table)?;
    let driven = model.omega.abs() > 0.0;
    let an = if driven { Some(analytic::analyze(&model)?) } else { None };

    let grid = match &an {
        Some(an) => default_grid(model.omega, 2.0 * an.lorentzians.lambda1_minus().re),
        None => {
            let span = 10.0 * p.kappa.max(p.gamma).max(OMEGA_A);
            linspace(-span, span, spectrum::GRID_POINTS)
        }
    };
    let spec = emission_spectrum(&l, &ss, &ops, &grid, cfg.mode)?;
    let spec = if a.normalize { spec.normalized() } else { spec };

    let mut table = Table::new();
    table.push("omega_over_wa", grid.iter().map(|&w| wa(w)).collect());
    table.push("s_total", spec.total.clone());
    for (label, part) in spec.labels.iter().zip(&spec.parts) {
        table.push(format!("s_{}", label.to_lowercase()), part.clone());
    }
    if let Some(an) = &an {
        let set = &an.lorentzians;
        let scale = spec.scale;
        table.push("analytic_total", grid.iter().map(|&w| scale * set.evaluate(w)).collect());
        for c in [Component::S1, Component::S2, Component::S3] {
            let name = format!("analytic_{}", c.to_string().to_lowercase());
            table.push(name, grid.iter().map(|&w| scale * set.evaluate_component(c, w)).collect());
        }
    }

    let mut report = Report::new(&cfg, table);
    report.note("rabi_frequency_over_wa", wa(model.omega));
    report.note("drive_frequency_over_wq", model.omega_l);
    report.note("populations", ss.populations());
    report.note("steady_state_residual", ss.residual);
    report.note("cross_correlation", spec.cross_correlation);
    report.note("coherent_weight", &spec.coherent_weight);
    report.note("warnings", &model.warnings);
    match spec.peaks() {
        Ok(peaks) => {
            let list: Vec<_> = peaks
                .iter()
                .map(|pk| {
                    json!({
                        "position_over_wa": wa(pk.position),
                        "height": pk.height,
                        "fwhm_over_wa": wa(pk.fwhm),
                    })
                })
                .collect();
            report.note("peaks", list);
            let central = peaks.iter().min_by(|x, y| x.position.abs().total_cmp(&y.position.abs()));
            if let Some(c) = central.filter(|_| driven) {
                match decompose_central(&spec.omega, &spec.total, c.index) {
                    Ok(cp) => report.note(
                        "central_line",
                        json!({
                            "broad_fwhm_over_wa": wa(cp.broad_fwhm),
                            "narrow_fwhm_over_wa": wa(cp.narrow_fwhm),
                            "broad_height": cp.broad_height,
                            "narrow_height": cp.narrow_height,
                            "fit_residual": cp.residual,
                        }),
                    ),
                    Err(e) => report.note("central_line", json!({"error": e.to_string()})),
                }
            }
        }
        Err(e) => report.note("peaks", json!({"error": e.to_string()})),
    }
    if let Some(an) = &an {
        let set = &an.lorentzians;
        let h = peak_height_ratios(set);
        report.note("A_over_wa", wa(an.rates.a));
        report.note("lambda0_over_wa", wa(set.lambda0()));
        report.note("lambda1_minus_over_wa", wa(set.lambda1_minus().re));
        report.note("lambda1_plus_over_wa", wa(set.lambda1_plus().re));
        report.note("narrow_over_central_height", h.narrow_over_central);
        report.note("narrow_pair_over_central_height", h.narrow_pair_over_central);
        report.note("inner_over_outer_height", h.inner_over_outer);
        report.note("imaginary_residue", set.imaginary_residue);
    } else {
        report.note("analytic", "skipped: the drive vanishes");
    }
    report.write(&cfg)
}

#[derive(Debug, Clone, Args)]
pub struct LinewidthArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Points per panel.
    #[arg(long, default_value_t = 20)]
    pub npts: usize,
    #[arg(long = "gamma-min_wa", default_value_t = 0.01)]
    pub gamma_min_wa: f64,
    #[arg(long = "gamma-max_wa", default_value_t = 0.2)]
    pub gamma_max_wa: f64,
    #[arg(long = "kappa-min_wa", default_value_t = 1.0)]
    pub kappa_min_wa: f64,
    #[arg(long = "kappa-max_wa", default_value_t = 10.0)]
    pub kappa_max_wa: f64,
}

pub fn cmd_linewidths(a: &LinewidthArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::resolve("linewidths", &a.common)?;
    let ranges_ok = a.npts >= 2
        && a.gamma_min_wa > 0.0
        && a.gamma_max_wa > a.gamma_min_wa
        && a.kappa_min_wa > 0.0
        && a.kappa_max_wa > a.kappa_min_wa;
    if !ranges_ok {
        return Err(CliError::Config("sweep ranges must be positive and increasing, npts >= 2".into()));
    }
    cfg.option("npts", a.npts);
    cfg.option("gamma_range_wa", [a.gamma_min_wa, a.gamma_max_wa]);
    cfg.option("kappa_range_wa", [a.kappa_min_wa, a.kappa_max_wa]);
    let couplings = if cfg.g_explicit {
        vec![cfg.params.g]
    } else {
        vec![ANTICROSSING_G, CROSSING_G]
    };
    cfg.option("couplings", &couplings);

    let gammas: Vec<f64> = linspace(a.gamma_min_wa, a.gamma_max_wa, a.npts).iter().map(|v| v * OMEGA_A).collect();
    let kappas: Vec<f64> = linspace(a.kappa_min_wa, a.kappa_max_wa, a.npts).iter().map(|v| v * OMEGA_A).collect();
    let names = [
        "g_over_wq",
        "kappa_over_wa",
        "gamma_over_wa",
        "lambda0_over_wa",
        "lambda1_minus_over_wa",
        "lambda1_plus_over_wa",
        "ratio_minus",
        "ratio_plus",
        "narrow_over_central_height",
    ];
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for &g in &couplings {
        let p = cfg.params.with_g(g);
        for (sweep, grid) in [(SweepParam::Gamma, &gammas), (SweepParam::Kappa, &kappas)] {
            let rows = analytic::linewidth_ratio_sweep(&p, sweep, grid, cfg.mode)?;
            for r in rows {
                let (kappa, gamma) = match sweep {
                    SweepParam::Gamma => (p.kappa, r.value),
                    SweepParam::Kappa => (r.value, p.gamma),
                };
                let vals = [
                    g,
                    wa(kappa),
                    wa(gamma),
                    wa(r.lambda0),
                    wa(r.lambda1_minus),
                    wa(r.lambda1_plus),
                    r.ratio_minus,
                    r.ratio_plus,
                    r.narrow_over_central,
                ];
                for (c, v) in cols.iter_mut().zip(vals) {
                    c.push(v);
                }
            }
        }
    }
    let mut table = Table::new();
    for (n, c) in names.iter().zip(cols) {
        table.push(*n, c);
    }
    let mut report = Report::new(&cfg, table);
    report.note("panels", "gamma sweep at the configured kappa, then kappa sweep at the configured gamma");
    report.write(&cfg)
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Levels in the larger model.
    #[arg(long, default_value_t = 8)]
    pub levels: usize,
    /// Exit with the numerical-failure status when the audit fails.
    #[arg(long)]
    pub strict: bool,
}

pub fn cmd_audit(a: &AuditArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::resolve("audit", &a.common)?;
    if a.levels < 5 {
        return Err(CliError::Config(format!("audit needs at least 5 levels, got {}", a.levels)));
    }
    cfg.option("levels", a.levels);
    let p = cfg.params;
    let audit = truncation_audit(&diagonalize(&p)?, &p, a.levels)?;
    let mut table = Table::new();
    table.push("level", (0..a.levels).map(|n| n as f64).collect());
    table.push(
        "population_four_level",
        (0..a.levels).map(|n| audit.populations_small.get(n).copied().unwrap_or(0.0)).collect(),
    );
    table.push("population_enlarged", audit.populations_large.clone());
    let mut report = Report::new(&cfg, table);
    report.note("population_deviation", audit.population_deviation);
    report.note("leaked_population", audit.leaked_population);
    report.note("spectrum_deviation", audit.spectrum_deviation);
    report.note("threshold", audit.threshold);
    report.note("passes", audit.passes());
    eprintln!(
        "audit {}: population deviation {:.3e}, spectrum deviation {:.3e}, threshold {:.1e}",
        if audit.passes() { "PASS" } else { "FAIL" },
        audit.population_deviation,
        audit.spectrum_deviation,
        audit.threshold
    );
    report.write(&cfg)?;
    if a.strict && !audit.passes() {
        return Err(CliError::Audit(format!(
            "deviation {:.3e} exceeds {:.1e}",
            audit.population_deviation.max(audit.spectrum_deviation),
            audit.threshold
        )));
    }
    Ok(())
}
