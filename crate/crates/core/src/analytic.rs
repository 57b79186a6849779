//! Closed-form description of the four-level spectrum in the dressed basis
//! `{|−⟩, ψ₁, ψ₂, |+⟩}` with `|±⟩ = (ψ₃ ± ψ₀)/√2`, where the drive term is
//! `(Ω/2)(σ₊₊ − σ₋₋)`.
//!
//! Every line is a complex Lorentzian `Re[C/(λ − iω)]`. The central-line
//! width `A` is read off the secular part of the Liouvillian rather than
//! taken from a formula.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use crate::dissipation::{build_liouvillian, FourLevelModel, Liouvillian, TransitionTable};
use crate::error::{Error, Result};
use crate::linalg::{kron, CVector, ComplexMatrix, C64};
use crate::model::{diagonalize, SystemParams};
use crate::parallel::{self, ExecMode};
use crate::spectrum::{steady_state, SteadyState};

/// Position of `|−⟩` in the dressed basis.
pub const MINUS: usize = 0;
/// Position of `|+⟩` in the dressed basis.
pub const PLUS: usize = 3;

/// Change of basis `{ψ₀, ψ₁, ψ₂, ψ₃} → {−, ψ₁, ψ₂, +}`.
#[derive(Debug, Clone)]
pub struct PlusMinusBasis {
    /// Columns are the new basis states in the old basis.
    pub u: ComplexMatrix,
}

impl Default for PlusMinusBasis {
    fn default() -> Self {
        let s = FRAC_1_SQRT_2;
        #[rustfmt::skip]
        let u = ComplexMatrix::from_real_row_slice(4, 4, &[
            -s,  0.0, 0.0, s,
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 1.0, 0.0,
            s,   0.0, 0.0, s,
        ])
        .expect("finite entries");
        Self { u }
    }
}

impl PlusMinusBasis {
    pub fn new() -> Self {
        Self::default()
    }

    /// `U† O U`.
    pub fn to_pm(&self, op: &ComplexMatrix) -> ComplexMatrix {
        op.sandwich(&self.u, &self.u)
    }

    pub fn from_pm(&self, op: &ComplexMatrix) -> ComplexMatrix {
        &(&self.u * op) * &self.u.adjoint()
    }

    /// Superoperator `L ↦ T L T⁻¹` with `T = Uᵀ ⊗ U†`, so that
    /// `vec(U†ρU) = T vec(ρ)`.
    pub fn transform_superoperator(&self, l: &ComplexMatrix) -> ComplexMatrix {
        let t = kron(&self.u.transpose(), &self.u.adjoint());
        let t_inv = kron(&self.u.conj(), &self.u);
        &(&t * l) * &t_inv
    }
}

/// Rate combinations of the four-level model (units of `ω_q`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateCombinations {
    pub g10: f64,
    pub g20: f64,
    pub g21: f64,
    pub g30: f64,
    pub g31: f64,
    pub g32: f64,
    /// `(Γ₁₀ ± Γ₂₀)/2`.
    pub gamma12_plus: f64,
    pub gamma12_minus: f64,
    /// `(Γ₃₁ ± Γ₃₂)/2`.
    pub gamma23_plus: f64,
    pub gamma23_minus: f64,
    /// `Γ₃₁ − Γ₂₁ ± 2(Γ₁₀ − Γ₂₀)`.
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    /// `√(Γ₊² + 2Γ₋Γ₃₂ + Γ₃₂²)`, principal branch.
    pub delta: C64,
    /// `2Γ₁₀ + 2Γ₂₀ + Γ₂₁ + Γ₃₁ + Γ₃₂`.
    pub d: f64,
    /// Secular decay constant of `ρ₊₊ − ρ₋₋`.
    pub a: f64,
}

impl RateCombinations {
    pub fn new(g10: f64, g20: f64, g21: f64, g30: f64, g31: f64, g32: f64, a: f64) -> Self {
        let gamma_plus = g31 - g21 + 2.0 * (g10 - g20);
        let gamma_minus = g31 - g21 - 2.0 * (g10 - g20);
        let radicand = gamma_plus * gamma_plus + 2.0 * gamma_minus * g32 + g32 * g32;
        Self {
            g10,
            g20,
            g21,
            g30,
            g31,
            g32,
            gamma12_plus: 0.5 * (g10 + g20),
            gamma12_minus: 0.5 * (g10 - g20),
            gamma23_plus: 0.5 * (g31 + g32),
            gamma23_minus: 0.5 * (g31 - g32),
            gamma_plus,
            gamma_minus,
            delta: C64::new(radicand, 0.0).sqrt(),
            d: 2.0 * g10 + 2.0 * g20 + g21 + g31 + g32,
            a,
        }
    }

    /// Rates of a four-level table combined with an extracted `A`.
    pub fn from_table(table: &TransitionTable, a: f64) -> Result<Self> {
        if table.len() != 4 {
            return Err(Error::DimensionMismatch(format!(
                "rate combinations need a four-level table, got {} levels",
                table.len()
            )));
        }
        let g = |j, k| table.gamma_total(j, k);
        Ok(Self::new(g(1, 0), g(2, 0), g(2, 1), g(3, 0), g(3, 1), g(3, 2), a))
    }
}

/// Superoperator frequencies `f_a − f_b` of `|a⟩⟨b|` in the ± frame.
fn pm_frequencies(omega: f64) -> Vec<f64> {
    let f = [-0.5 * omega, 0.0, 0.0, 0.5 * omega];
    (0..16).map(|i| f[i % 4] - f[i / 4]).collect()
}

/// The Liouvillian in the ± basis with every element that connects
/// components of different frame frequency removed.
pub fn secular_liouvillian(l: &Liouvillian, omega: f64) -> Result<ComplexMatrix> {
    if l.dim != 4 {
        return Err(Error::DimensionMismatch(format!(
            "secular construction needs the four-level Liouvillian, got {} levels",
            l.dim
        )));
    }
    let full = PlusMinusBasis::new().transform_superoperator(&l.matrix);
    let f = pm_frequencies(omega);
    let tol = 1e-9 * omega.abs();
    Ok(ComplexMatrix::from_fn(16, 16, |r, c| {
        if (f[r] - f[c]).abs() <= tol {
            full.get(r, c)
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

fn pm_index(a: usize, b: usize) -> usize {
    a + 4 * b
}

/// `A` from `d/dt(ρ₊₊ − ρ₋₋) = −(A/2)(ρ₊₊ − ρ₋₋)` under the secular Liouvillian.
pub fn extract_a(l: &Liouvillian, omega: f64) -> Result<f64> {
    let sec = secular_liouvillian(l, omega)?;
    let mut d = CVector::zeros(16);
    d[pm_index(PLUS, PLUS)] = C64::new(1.0, 0.0);
    d[pm_index(MINUS, MINUS)] = C64::new(-1.0, 0.0);
    let out = sec.mul_vec(&d);
    Ok(-(out[pm_index(PLUS, PLUS)] - out[pm_index(MINUS, MINUS)]).re)
}

/// `dS/dt = −decay·S + coherence·(ρ₋₊ + ρ₊₋) + imbalance·(ρ₁₁ − ρ₂₂) + constant`
/// for `S = ρ₊₊ + ρ₋₋`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumBlock {
    pub decay: f64,
    pub coherence: f64,
    pub imbalance: f64,
    pub constant: f64,
}

impl SumBlock {
    pub fn max_difference(&self, other: &SumBlock) -> f64 {
        [
            self.decay - other.decay,
            self.coherence - other.coherence,
            self.imbalance - other.imbalance,
            self.constant - other.constant,
        ]
        .iter()
        .fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Population dynamics in the ± basis: the secular decay of `ρ₊₊ − ρ₋₋` and
/// the non-secular block for `ρ₊₊ + ρ₋₋`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecularDynamics {
    /// `A/2`.
    pub difference_decay: f64,
    pub sum: SumBlock,
}

/// The closed form in terms of rate combinations. It has no constant term;
/// the return flow from ψ₁, ψ₂ into ψ₀, which appears once `ρ₁₁ + ρ₂₂` is
/// eliminated through the trace, shows up only in [`numeric_dynamics`].
pub fn secular_dynamics(rates: &RateCombinations, _omega: f64) -> SecularDynamics {
    SecularDynamics {
        difference_decay: 0.5 * rates.a,
        sum: SumBlock {
            decay: rates.gamma12_plus + rates.gamma23_plus,
            coherence: -rates.gamma23_plus,
            imbalance: rates.gamma12_minus,
            constant: 0.0,
        },
    }
}

/// The same blocks read from the full Liouvillian, with `ρ₁₁ + ρ₂₂` eliminated
/// through the trace. `residual` is the largest coefficient the block form
/// leaves unaccounted for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericDynamics {
    pub dynamics: SecularDynamics,
    pub residual: f64,
}

pub fn numeric_dynamics(l: &Liouvillian, omega: f64) -> Result<NumericDynamics> {
    let a = extract_a(l, omega)?;
    let full = PlusMinusBasis::new().transform_superoperator(&l.matrix);
    let (pp, mm) = (pm_index(PLUS, PLUS), pm_index(MINUS, MINUS));
    let f: Vec<C64> = (0..16).map(|c| full.get(pp, c) + full.get(mm, c)).collect();
    let (mp, pm) = (pm_index(MINUS, PLUS), pm_index(PLUS, MINUS));
    let (c11, c22) = (f[pm_index(1, 1)].re, f[pm_index(2, 2)].re);
    let s_coef = 0.5 * (f[pp] + f[mm]).re;
    let sum = SumBlock {
        decay: -(s_coef - 0.5 * (c11 + c22)),
        coherence: 0.5 * (f[mp] + f[pm]).re,
        imbalance: 0.5 * (c11 - c22),
        constant: 0.5 * (c11 + c22),
    };
    let accounted = [pp, mm, mp, pm, pm_index(1, 1), pm_index(2, 2)];
    let mut residual: f64 = 0.5 * (f[pp] - f[mm]).norm();
    residual = residual.max(0.5 * (f[mp] - f[pm]).norm());
    residual = residual.max((f[pp] + f[mm]).im.abs() * 0.5);
    for (c, z) in f.iter().enumerate() {
        if !accounted.contains(&c) {
            residual = residual.max(z.norm());
        }
    }
    Ok(NumericDynamics {
        dynamics: SecularDynamics {
            difference_decay: 0.5 * a,
            sum,
        },
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    S1,
    S2,
    S3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LineLabel {
    Central,
    OuterPlus,
    OuterMinus,
    NarrowPlus,
    NarrowMinus,
    InnerPlus,
    InnerMinus,
}

impl fmt::Display for LineLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Central => "central",
            Self::OuterPlus => "outer+",
            Self::OuterMinus => "outer-",
            Self::NarrowPlus => "narrow+",
            Self::NarrowMinus => "narrow-",
            Self::InnerPlus => "inner+",
            Self::InnerMinus => "inner-",
        };
        f.write_str(s)
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// One complex Lorentzian `Re[amplitude/(lambda − iω)]`; `amplitude`
/// includes the channel prefactor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lorentzian {
    pub component: Component,
    pub label: LineLabel,
    pub lambda: C64,
    pub amplitude: C64,
}

impl Lorentzian {
    pub fn value(&self, omega: f64) -> f64 {
        (self.amplitude / (self.lambda - C64::new(0.0, omega))).re
    }

    /// Value at the line center, `Re C / Re λ`.
    pub fn height(&self) -> f64 {
        self.amplitude.re / self.lambda.re
    }
}

#[derive(Debug, Clone)]
pub struct LorentzianSet {
    pub entries: Vec<Lorentzian>,
    pub rates: RateCombinations,
    pub omega: f64,
    /// Largest `|Im C| / |C|` over the entries.
    pub imaginary_residue: f64,
}

impl LorentzianSet {
    pub fn evaluate(&self, omega: f64) -> f64 {
        self.entries.iter().map(|e| e.value(omega)).sum()
    }

    pub fn evaluate_component(&self, c: Component, omega: f64) -> f64 {
        self.entries.iter().filter(|e| e.component == c).map(|e| e.value(omega)).sum()
    }

    pub fn curve(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&w| self.evaluate(w)).collect()
    }

    pub fn entry(&self, component: Component, label: LineLabel) -> Option<&Lorentzian> {
        self.entries.iter().find(|e| e.component == component && e.label == label)
    }

    fn lambda(&self, label: LineLabel) -> C64 {
        self.entries
            .iter()
            .find(|e| e.label == label)
            .map(|e| e.lambda)
            .unwrap_or(C64::new(f64::NAN, f64::NAN))
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda(LineLabel::Central).re
    }

    pub fn lambda1_minus(&self) -> C64 {
        self.lambda(LineLabel::NarrowMinus)
    }

    pub fn lambda1_plus(&self) -> C64 {
        self.lambda(LineLabel::NarrowPlus)
    }
}

/// Relative cutoff below which `Δ` is treated as zero.
pub const DELTA_GUARD: f64 = 1e-12;

/// Builds all poles and amplitudes from the rates, `Ω`, the four-level steady
/// state (in the ψ basis) and the channel coefficients `α₀₁, α₀₃, α₁₃`.
pub fn lorentzian_decomposition(
    rates: &RateCombinations,
    omega: f64,
    ss: &SteadyState,
    alphas: [C64; 3],
) -> Result<LorentzianSet> {
    if !(omega.abs() > 0.0) || !omega.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Lorentzian decomposition needs a nonzero Rabi frequency, got {omega}"
        )));
    }
    if ss.dim() != 4 {
        return Err(Error::DimensionMismatch(format!("four-level steady state expected, got {}", ss.dim())));
    }
    let pm = PlusMinusBasis::new().to_pm(&ss.rho);
    let rho_pp = pm.get(PLUS, PLUS).re;
    let rho_mm = pm.get(MINUS, MINUS).re;
    let rho_mp = pm.get(MINUS, PLUS);
    let rho_pm = pm.get(PLUS, MINUS);
    let rho11 = ss.population(1);
    let rho22 = ss.population(2);
    let r = rates;
    let i = C64::new(0.0, 1.0);
    let re = |x: f64| C64::new(x, 0.0);

    let lambda0 = re(0.5 * r.a);
    let outer = |sign: f64| C64::new((2.0 * r.a + r.g30) / 4.0, sign * omega);
    let narrow = |sign: f64| (re(r.d) + r.delta * sign) / 4.0;
    let inner = |sign: f64| C64::new((r.a + 2.0 * r.g10) / 4.0, sign * 0.5 * omega);

    let pref = i * r.g30 * (rho_mp - rho_pm) / (2.0 * omega);
    let (c1_plus, c1_minus) = if r.delta.norm() < DELTA_GUARD * r.d.abs() {
        let c = pref * (rho11 + rho22);
        (c, c)
    } else {
        let fp = re(r.gamma_plus + r.g32) / r.delta;
        let fm = re(r.gamma_minus + r.g32) / r.delta;
        let c = |sign: f64| pref * ((re(1.0) + fp * sign) * rho11 + (re(1.0) + fm * sign) * rho22);
        (c(1.0), c(-1.0))
    };

    let s1 = alphas[1].norm_sqr() / 2.0;
    let s2 = alphas[0].norm_sqr();
    let s3 = alphas[2].norm_sqr();
    let line = |component, label, lambda, amplitude: C64, scale: f64| Lorentzian {
        component,
        label,
        lambda,
        amplitude: amplitude * scale,
    };
    use Component::*;
    use LineLabel::*;
    let entries = vec![
        line(S1, Central, lambda0, re(rho_pp + rho_mm), s1),
        line(S1, OuterPlus, outer(1.0), re(rho_pp), s1),
        line(S1, OuterMinus, outer(-1.0), re(rho_mm), s1),
        line(S1, NarrowPlus, narrow(1.0), c1_plus, s1),
        line(S1, NarrowMinus, narrow(-1.0), c1_minus, s1),
        line(S2, InnerPlus, inner(1.0), re(rho11), s2),
        line(S2, InnerMinus, inner(-1.0), re(rho11), s2),
        line(S3, InnerPlus, inner(1.0), re(rho_pp), s3),
        line(S3, InnerMinus, inner(-1.0), re(rho_mm), s3),
    ];
    let imaginary_residue = entries
        .iter()
        .filter(|e| e.amplitude.norm() > 0.0)
        .map(|e| e.amplitude.im.abs() / e.amplitude.norm())
        .fold(0.0, f64::max);
    Ok(LorentzianSet {
        entries,
        rates: *rates,
        omega,
        imaginary_residue,
    })
}

/// Heights `Re C / Re λ` of the main lines and their ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightRatios {
    pub central: f64,
    pub narrow_minus: f64,
    pub narrow_plus: f64,
    /// Every line evaluated at `ω = 0`.
    pub composite_central: f64,
    pub outer_plus: f64,
    pub outer_minus: f64,
    pub inner_plus: f64,
    pub inner_minus: f64,
    /// `narrow_minus / central`.
    pub narrow_over_central: f64,
    /// `(narrow_minus + narrow_plus) / central`.
    pub narrow_pair_over_central: f64,
    pub inner_over_outer: f64,
}

pub fn peak_height_ratios(set: &LorentzianSet) -> HeightRatios {
    let sum_height = |label: LineLabel| -> f64 { set.entries.iter().filter(|e| e.label == label).map(|e| e.height()).sum() };
    let central = sum_height(LineLabel::Central);
    let narrow_minus = sum_height(LineLabel::NarrowMinus);
    let narrow_plus = sum_height(LineLabel::NarrowPlus);
    let outer_plus = sum_height(LineLabel::OuterPlus);
    let outer_minus = sum_height(LineLabel::OuterMinus);
    let inner_plus = sum_height(LineLabel::InnerPlus);
    let inner_minus = sum_height(LineLabel::InnerMinus);
    HeightRatios {
        central,
        narrow_minus,
        narrow_plus,
        composite_central: set.evaluate(0.0),
        outer_plus,
        outer_minus,
        inner_plus,
        inner_minus,
        narrow_over_central: narrow_minus / central,
        narrow_pair_over_central: (narrow_minus + narrow_plus) / central,
        inner_over_outer: 0.5 * (inner_plus + inner_minus) / (0.5 * (outer_plus + outer_minus)),
    }
}

/// Everything the analytic description needs from one driven model.
#[derive(Debug, Clone)]
pub struct AnalyticModel {
    pub liouvillian: Liouvillian,
    pub steady_state: SteadyState,
    pub rates: RateCombinations,
    pub lorentzians: LorentzianSet,
}

pub fn analyze(model: &FourLevelModel) -> Result<AnalyticModel> {
    if model.target != 3 {
        return Err(Error::InvalidParameter(format!(
            "the ± description assumes the drive on 0↔3, got target {}",
            model.target
        )));
    }
    let liouvillian = build_liouvillian(model)?;
    let steady_state = steady_state(&liouvillian)?;
    let a = extract_a(&liouvillian, model.omega)?;
    let rates = RateCombinations::from_table(&model.table, a)?;
    let alpha = &model.table.alpha;
    let lorentzians = lorentzian_decomposition(
        &rates,
        model.omega,
        &steady_state,
        [alpha.get(0, 1), alpha.get(0, 3), alpha.get(1, 3)],
    )?;
    Ok(AnalyticModel {
        liouvillian,
        steady_state,
        rates,
        lorentzians,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Gamma,
    Kappa,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinewidthRow {
    pub value: f64,
    pub lambda0: f64,
    pub lambda1_minus: f64,
    pub lambda1_plus: f64,
    pub ratio_minus: f64,
    pub ratio_plus: f64,
    pub narrow_over_central: f64,
}

/// `λ₁^±/λ₀` along a grid of `γ` or `κ`; everything else from `p`. The
/// dressed basis does not depend on the bath rates, so it is computed once
/// and the rate tables are rescaled per point.
pub fn linewidth_ratio_sweep(p: &SystemParams, sweep: SweepParam, grid: &[f64], mode: ExecMode) -> Result<Vec<LinewidthRow>> {
    if grid.is_empty() || grid.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter("sweep grid must be nonempty and positive".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("sweep grid must be strictly ascending".into()));
    }
    let dressed = diagonalize(p)?;
    let base = crate::dissipation::effective_drive(&dressed, p, 3)?;
    parallel::try_map(grid, mode, |&value| {
        let (kappa, gamma) = match sweep {
            SweepParam::Gamma => (p.kappa, value),
            SweepParam::Kappa => (value, p.gamma),
        };
        let model = base.with_rates(kappa, gamma);
        let an = analyze(&model)?;
        let set = &an.lorentzians;
        let lambda0 = set.lambda0();
        let (l1m, l1p) = (set.lambda1_minus().re, set.lambda1_plus().re);
        Ok(LinewidthRow {
            value,
            lambda0,
            lambda1_minus: l1m,
            lambda1_plus: l1p,
            ratio_minus: l1m / lambda0,
            ratio_plus: l1p / lambda0,
            narrow_over_central: peak_height_ratios(set).narrow_over_central,
        })
    })
}
