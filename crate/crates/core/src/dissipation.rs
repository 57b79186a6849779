//! Dressed-state dissipation and drive: transition matrix elements, zero
//! temperature relaxation rates, the resonantly driven four-level model, its
//! Liouvillian, and an audit of the four-level truncation against a larger
//! rotating-frame model.
//!
//! Density operators are vectorized by column stacking, `vec(ρ)[a + N·b] =
//! ρ[a, b]`, so `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{general_eig, kron, ComplexMatrix, C64};
use crate::model::{DressedBasis, SystemParams};
use crate::spectrum::{self, EmissionOperators};
use crate::parallel::ExecMode;

/// Real `N×N` table of downward rates; entry `[j, k]` is the rate for
/// `|ψ_j⟩ → |ψ_k⟩` and is zero unless `j > k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix(DMatrix<f64>);

impl RateMatrix {
    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    /// Builds from a closure evaluated on `j > k` only.
    pub fn from_downward(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self(DMatrix::from_fn(n, n, |j, k| if j > k { f(j, k) } else { 0.0 }))
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.0[(j, k)]
    }

    /// Sets a downward rate; upward entries are rejected.
    pub fn set(&mut self, j: usize, k: usize, rate: f64) {
        assert!(j > k, "only downward rates (j > k) are stored, got ({j}, {k})");
        self.0[(j, k)] = rate;
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(&self.0 * s)
    }

    pub fn sum(&self, other: &RateMatrix) -> Self {
        Self(&self.0 + &other.0)
    }

    /// `(j, k, rate)` for every `j > k`.
    pub fn downward(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |j| (0..j).map(move |k| (j, k, self.0[(j, k)])))
    }

    /// Total decay rate out of level `j`.
    pub fn out_of(&self, j: usize) -> f64 {
        (0..j).map(|k| self.0[(j, k)]).sum()
    }

    pub fn as_inner(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Matrix elements and relaxation rates over a subset of dressed levels.
/// Local index `i` refers to dressed level `levels[i]`.
#[derive(Debug, Clone)]
pub struct TransitionTable {
    pub levels: Vec<usize>,
    /// Absolute dressed energies of the retained levels.
    pub energies: Vec<f64>,
    /// `Z_mn = ⟨ψ_m|(a + a†)|ψ_n⟩`.
    pub z: ComplexMatrix,
    /// `α_mn = −(E_n − E_m)⟨ψ_m|(a − a†)|ψ_n⟩`.
    pub alpha: ComplexMatrix,
    /// Cavity rates per unit `κ`.
    pub cavity_weight: RateMatrix,
    /// Qubit rates (summed over both qubits) per unit `γ`.
    pub qubit_weight: RateMatrix,
    pub kappa: f64,
    pub gamma: f64,
    pub gamma_cav: RateMatrix,
    pub gamma_qub: RateMatrix,
}

/// Transitions with `|E_jk|` below this are degenerate and carry no rate.
pub const DEGENERATE_GAP: f64 = 1e-12;

impl TransitionTable {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `Γ_jk = Γ^cav_jk + Γ^qub_jk` (local indices).
    pub fn gamma_total(&self, j: usize, k: usize) -> f64 {
        self.gamma_cav.get(j, k) + self.gamma_qub.get(j, k)
    }

    pub fn total(&self) -> RateMatrix {
        self.gamma_cav.sum(&self.gamma_qub)
    }

    /// `E_j − E_k` (local indices).
    pub fn gap(&self, k: usize, j: usize) -> f64 {
        self.energies[j] - self.energies[k]
    }

    /// Same table with different bath rates.
    pub fn with_rates(&self, kappa: f64, gamma: f64) -> Self {
        let mut t = self.clone();
        t.kappa = kappa;
        t.gamma = gamma;
        t.gamma_cav = self.cavity_weight.scaled(kappa);
        t.gamma_qub = self.qubit_weight.scaled(gamma);
        t
    }
}

/// Matrix elements and zero-temperature rates for `levels` (ascending).
pub fn transition_table(d: &DressedBasis, p: &SystemParams, levels: &[usize]) -> Result<TransitionTable> {
    p.validate()?;
    if levels.is_empty() {
        return Err(Error::InvalidParameter("empty level subset".into()));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(format!("level subset {levels:?} must be strictly ascending")));
    }
    if let Some(&last) = levels.last() {
        if last >= d.len() {
            return Err(Error::InvalidParameter(format!(
                "level {last} outside the {}-state dressed basis",
                d.len()
            )));
        }
    }
    let energies: Vec<f64> = levels.iter().map(|&l| d.energies[l]).collect();
    for w in 0..levels.len() {
        for v in 0..w {
            let gap = energies[w] - energies[v];
            if gap < -DEGENERATE_GAP {
                return Err(Error::Ordering {
                    upper: levels[w],
                    lower: levels[v],
                    gap,
                });
            }
        }
    }

    let ops = d.operators();
    let states = d.states.select_columns(levels);
    let local = |op: &ComplexMatrix| op.sandwich(&states, &states);
    let z = local(&ops.x);
    let field = local(&ops.a_minus_a_dag());
    let qubit = [local(&ops.qubit_quadrature(0)), local(&ops.qubit_quadrature(1))];
    let n = levels.len();

    let alpha = ComplexMatrix::from_fn(n, n, |m, nn| field.get(m, nn) * -(energies[nn] - energies[m]));
    let positive_gap = |j: usize, k: usize| {
        let gap = energies[j] - energies[k];
        if gap.abs() <= DEGENERATE_GAP {
            0.0
        } else {
            gap
        }
    };
    let cavity_weight = RateMatrix::from_downward(n, |j, k| {
        positive_gap(j, k) / p.omega_c * field.get(k, j).norm_sqr()
    });
    let qubit_weight = RateMatrix::from_downward(n, |j, k| {
        positive_gap(j, k) / p.omega_q * (qubit[0].get(k, j).norm_sqr() + qubit[1].get(k, j).norm_sqr())
    });
    Ok(TransitionTable {
        levels: levels.to_vec(),
        energies,
        z,
        alpha,
        gamma_cav: cavity_weight.scaled(p.kappa),
        gamma_qub: qubit_weight.scaled(p.gamma),
        cavity_weight,
        qubit_weight,
        kappa: p.kappa,
        gamma: p.gamma,
    })
}

/// A drive coupling `ε Z_mn σ_mn` between two dressed levels and its
/// detuning from the drive.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveTerm {
    pub lower: usize,
    pub upper: usize,
    pub coupling: C64,
    /// `E_upper − E_lower − ω_l`.
    pub detuning: f64,
    /// `|ε Z_mn|`.
    pub strength: f64,
    /// `|Z_mn|` below the zero-coupling cutoff.
    pub vanishing: bool,
    /// `vanishing` or `strength < threshold · |detuning|`.
    pub negligible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveOptions {
    /// A term is resonant if its detuning is below this.
    pub resonance_tol: f64,
    /// `|Z_mn|` below this counts as an exactly vanishing element.
    pub zero_coupling: f64,
    /// Discarded terms must satisfy `|ε Z| < threshold · |detuning|`.
    pub threshold: f64,
    /// Warn when `ε ≥ warn_ratio · (E_4 − E_3)`.
    pub warn_ratio: f64,
    /// Levels above the model checked for leakage terms.
    pub leakage_levels: usize,
}

impl Default for DriveOptions {
    fn default() -> Self {
        Self {
            resonance_tol: 1e-6,
            zero_coupling: 1e-8,
            threshold: 0.1,
            warn_ratio: 0.25,
            leakage_levels: 8,
        }
    }
}

/// Resonantly driven four-level truncation `{ψ₀, ψ₁, ψ₂, ψ₃}` in the frame
/// of the bare dressed energies (interaction picture), keeping only the drive
/// term on the target transition.
#[derive(Debug, Clone)]
pub struct FourLevelModel {
    pub target: usize,
    pub epsilon: f64,
    pub omega_l: f64,
    /// Effective Rabi frequency `ε Z_{0,target}`.
    pub omega: f64,
    /// `(Ω/2)(σ_{0t} + σ_{t0})`, plus `(E_t0 − ω_l)σ_tt` if the drive is detuned.
    pub hamiltonian: ComplexMatrix,
    pub table: TransitionTable,
    pub retained: DriveTerm,
    /// Every other pair `m < n ≤ 3`.
    pub discarded: Vec<DriveTerm>,
    /// Pairs coupling the four levels to higher ones.
    pub leakage: Vec<DriveTerm>,
    pub warnings: Vec<String>,
}

impl FourLevelModel {
    /// Levels 1..3 measured from the ground state.
    pub fn excitation(&self, n: usize) -> f64 {
        self.table.energies[n] - self.table.energies[0]
    }

    /// Same drive geometry with the bath rates replaced.
    pub fn with_rates(&self, kappa: f64, gamma: f64) -> Self {
        Self {
            table: self.table.with_rates(kappa, gamma),
            ..self.clone()
        }
    }
}

pub const FOUR_LEVELS: [usize; 4] = [0, 1, 2, 3];

pub fn effective_drive(d: &DressedBasis, p: &SystemParams, target: usize) -> Result<FourLevelModel> {
    effective_drive_with(d, p, target, &DriveOptions::default())
}

pub fn effective_drive_with(
    d: &DressedBasis,
    p: &SystemParams,
    target: usize,
    opts: &DriveOptions,
) -> Result<FourLevelModel> {
    if !(1..=3).contains(&target) {
        return Err(Error::Undrivable {
            target,
            reason: "the four-level model drives one of levels 1..3".into(),
        });
    }
    let upto = (4 + opts.leakage_levels).min(d.len());
    let levels: Vec<usize> = (0..upto).collect();
    let wide = transition_table(d, p, &levels)?;
    let table = transition_table(d, p, &FOUR_LEVELS)?;

    let target_gap = wide.gap(0, target);
    if target_gap.abs() <= DEGENERATE_GAP {
        return Err(Error::Undrivable {
            target,
            reason: "degenerate with the ground state".into(),
        });
    }
    let omega_l = p.omega_l.unwrap_or(target_gap);
    let term = |m: usize, n: usize| {
        let coupling = wide.z.get(m, n);
        let detuning = wide.gap(m, n) - omega_l;
        let strength = p.epsilon * coupling.norm();
        let vanishing = coupling.norm() <= opts.zero_coupling;
        DriveTerm {
            lower: m,
            upper: n,
            coupling,
            detuning,
            strength,
            vanishing,
            negligible: vanishing || strength < opts.threshold * detuning.abs(),
        }
    };

    let retained = term(0, target);
    if retained.vanishing {
        return Err(Error::Undrivable {
            target,
            reason: format!("vanishing drive element |Z| = {:.3e}", retained.coupling.norm()),
        });
    }
    let mut warnings = Vec::new();
    if retained.detuning.abs() > opts.resonance_tol {
        warnings.push(format!(
            "drive detuned from the 0→{target} transition by {:.3e}",
            retained.detuning
        ));
    }
    let mut discarded = Vec::new();
    for n in 1..4 {
        for m in 0..n {
            if (m, n) != (0, target) {
                discarded.push(term(m, n));
            }
        }
    }
    let leakage: Vec<DriveTerm> = (0..4).flat_map(|m| (4..upto).map(move |n| (m, n))).map(|(m, n)| term(m, n)).collect();

    for t in discarded.iter().chain(&leakage) {
        if t.detuning.abs() <= opts.resonance_tol && !t.vanishing {
            warnings.push(format!(
                "drive term {}→{} is resonant (detuning {:.3e}) with |Z| = {:.3e} but is not retained",
                t.lower,
                t.upper,
                t.detuning,
                t.coupling.norm()
            ));
        } else if !t.negligible {
            warnings.push(format!(
                "discarded drive term {}→{}: |εZ| = {:.3e} is not small against the detuning {:.3e}",
                t.lower, t.upper, t.strength, t.detuning
            ));
        }
    }
    if d.len() > 4 {
        let e43 = d.gap(3, 4);
        if p.epsilon >= opts.warn_ratio * e43 {
            warnings.push(format!(
                "drive amplitude ε = {:.3e} is not weak against E4 − E3 = {e43:.3e} (ratio {:.3})",
                p.epsilon,
                p.epsilon / e43
            ));
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let omega = p.epsilon * retained.coupling.re;
    let mut hamiltonian = ComplexMatrix::zeros(4, 4);
    let half = retained.coupling.scale(0.5 * p.epsilon);
    hamiltonian.set(0, target, half);
    hamiltonian.set(target, 0, half.conj());
    if retained.detuning != 0.0 {
        hamiltonian.set(target, target, C64::new(retained.detuning, 0.0));
    }
    Ok(FourLevelModel {
        target,
        epsilon: p.epsilon,
        omega_l,
        omega,
        hamiltonian,
        table,
        retained,
        discarded,
        leakage,
        warnings,
    })
}

/// Anything with a Hamiltonian and downward rates on the same levels.
pub trait MasterEquation {
    fn hamiltonian(&self) -> &ComplexMatrix;
    fn table(&self) -> &TransitionTable;
}

impl MasterEquation for FourLevelModel {
    fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }
    fn table(&self) -> &TransitionTable {
        &self.table
    }
}

/// Driven model on `n` dressed levels in the frame rotating at the drive:
/// level `n` is assigned to drive manifold `k_n = round((E_n − E_0)/ω_l)`,
/// carries the residual detuning `E_n − E_0 − k_n ω_l`, and every pair with
/// `k_n = k_m + 1` is coupled by `(ε/2) Z_mn`.
#[derive(Debug, Clone)]
pub struct RotatingFrameModel {
    pub omega_l: f64,
    pub manifold: Vec<i64>,
    pub hamiltonian: ComplexMatrix,
    pub table: TransitionTable,
}

impl MasterEquation for RotatingFrameModel {
    fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }
    fn table(&self) -> &TransitionTable {
        &self.table
    }
}

pub fn rotating_frame_model(d: &DressedBasis, p: &SystemParams, n_levels: usize) -> Result<RotatingFrameModel> {
    if n_levels < 4 || n_levels > d.len() {
        return Err(Error::InvalidParameter(format!(
            "rotating-frame model needs 4 ≤ levels ≤ {}, got {n_levels}",
            d.len()
        )));
    }
    let levels: Vec<usize> = (0..n_levels).collect();
    let table = transition_table(d, p, &levels)?;
    let omega_l = p.omega_l.unwrap_or_else(|| table.gap(0, 3));
    if !(omega_l > 0.0) {
        return Err(Error::InvalidParameter(format!("drive frequency must be > 0, got {omega_l}")));
    }
    let manifold: Vec<i64> = (0..n_levels).map(|n| (table.gap(0, n) / omega_l).round() as i64).collect();
    let mut h = ComplexMatrix::zeros(n_levels, n_levels);
    for (n, &k) in manifold.iter().enumerate() {
        h.set(n, n, C64::new(table.gap(0, n) - k as f64 * omega_l, 0.0));
    }
    for n in 0..n_levels {
        for m in 0..n {
            if manifold[n] == manifold[m] + 1 {
                let c = table.z.get(m, n).scale(0.5 * p.epsilon);
                h.set(m, n, c);
                h.set(n, m, c.conj());
            }
        }
    }
    Ok(RotatingFrameModel {
        omega_l,
        manifold,
        hamiltonian: h,
        table,
    })
}

/// Vectorized master-equation generator, with its coherent, cavity and qubit
/// contributions kept separately.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub dim: usize,
    pub matrix: ComplexMatrix,
    pub coherent: ComplexMatrix,
    pub cavity: ComplexMatrix,
    pub qubit: ComplexMatrix,
}

impl Liouvillian {
    /// `L(ρ)` as a matrix.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.nrows() != self.dim || !rho.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} operator for a {}-level Liouvillian",
                rho.nrows(),
                rho.ncols(),
                self.dim
            )));
        }
        ComplexMatrix::unvectorize(&self.matrix.mul_vec(&rho.vectorize()), self.dim)
    }

    /// `‖vec(I)ᵀ L‖`: how far `L` is from preserving the trace.
    pub fn trace_defect(&self) -> f64 {
        let n = self.dim;
        (0..n * n)
            .map(|col| {
                (0..n)
                    .map(|i| self.matrix.get(i + n * i, col))
                    .sum::<C64>()
                    .norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        let mut v = general_eig(&self.matrix)?.values;
        v.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
        Ok(v)
    }
}

/// `L = −i(I⊗H − Hᵀ⊗I) + Σ_{j>k} Γ_jk D[|ψ_k⟩⟨ψ_j|]`.
pub fn build_liouvillian<M: MasterEquation + ?Sized>(m: &M) -> Result<Liouvillian> {
    let t = m.table();
    liouvillian_from_parts(m.hamiltonian(), &t.gamma_cav, &t.gamma_qub)
}

pub fn liouvillian_from_parts(h: &ComplexMatrix, cavity: &RateMatrix, qubit: &RateMatrix) -> Result<Liouvillian> {
    let n = h.nrows();
    if !h.is_square() || cavity.len() != n || qubit.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "Hamiltonian {}x{} with rate tables of size {} and {}",
            h.nrows(),
            h.ncols(),
            cavity.len(),
            qubit.len()
        )));
    }
    let id = ComplexMatrix::identity(n);
    let coherent = (&kron(&id, h) - &kron(&h.transpose(), &id)).scale(C64::new(0.0, -1.0));
    let cav = dissipator_sum(n, cavity);
    let qub = dissipator_sum(n, qubit);
    let matrix = &(&coherent + &cav) + &qub;
    Ok(Liouvillian {
        dim: n,
        matrix,
        coherent,
        cavity: cav,
        qubit: qub,
    })
}

fn dissipator_sum(n: usize, rates: &RateMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(n * n, n * n);
    for (j, k, rate) in rates.downward() {
        if rate == 0.0 {
            continue;
        }
        let jump = ComplexMatrix::unit(n, k, j);
        out = &out + &dissipator(&jump).scale_real(rate);
    }
    out
}

/// `D[O] = O*⊗O − ½ I⊗(O†O) − ½ (O†O)ᵀ⊗I`.
pub fn dissipator(o: &ComplexMatrix) -> ComplexMatrix {
    let n = o.nrows();
    let id = ComplexMatrix::identity(n);
    let odo = &o.adjoint() * o;
    let jump = kron(&o.conj(), o);
    &(&jump - &kron(&id, &odo).scale_real(0.5)) - &kron(&odo.transpose(), &id).scale_real(0.5)
}

/// Four-level model against a larger rotating-frame model.
#[derive(Debug, Clone)]
pub struct TruncationAudit {
    pub n_levels: usize,
    /// Steady-state populations of the four-level model.
    pub populations_small: Vec<f64>,
    pub populations_large: Vec<f64>,
    /// Largest population difference over all levels of the larger model.
    pub population_deviation: f64,
    /// Population found above level 3 in the larger model.
    pub leaked_population: f64,
    /// Largest difference of the 0↔3 emission channel, relative to its peak.
    pub spectrum_deviation: f64,
    pub threshold: f64,
}

impl TruncationAudit {
    pub fn passes(&self) -> bool {
        self.population_deviation < self.threshold && self.spectrum_deviation < self.threshold
    }
}

pub const AUDIT_THRESHOLD: f64 = 1e-3;

pub fn truncation_audit(d: &DressedBasis, p: &SystemParams, n_levels: usize) -> Result<TruncationAudit> {
    let small = effective_drive(d, p, 3)?;
    let large = rotating_frame_model(d, p, n_levels)?;
    let l_small = build_liouvillian(&small)?;
    let l_large = build_liouvillian(&large)?;
    let ss_small = spectrum::steady_state(&l_small)?;
    let ss_large = spectrum::steady_state(&l_large)?;
    let populations_small = ss_small.populations();
    let populations_large = ss_large.populations();
    let population_deviation = (0..n_levels)
        .map(|n| (populations_large[n] - populations_small.get(n).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max);
    let leaked_population = populations_large[4..].iter().sum();

    let span = (1.5 * small.omega.abs()).max(5.0 * p.kappa).max(1e-9);
    let grid: Vec<f64> = (0..401).map(|i| -span + 2.0 * span * i as f64 / 400.0).collect();
    let channel = |t: &TransitionTable| EmissionOperators::from_channels(t, &[(0, 3)]);
    let s_small = spectrum::emission_spectrum(&l_small, &ss_small, &channel(&small.table)?, &grid, ExecMode::default())?;
    let s_large = spectrum::emission_spectrum(&l_large, &ss_large, &channel(&large.table)?, &grid, ExecMode::default())?;
    let peak = s_small.total.iter().chain(&s_large.total).fold(0.0_f64, |m, v| m.max(v.abs()));
    let spectrum_deviation = if peak > 0.0 {
        s_small
            .total
            .iter()
            .zip(&s_large.total)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / peak
    } else {
        0.0
    };
    Ok(TruncationAudit {
        n_levels,
        populations_small,
        populations_large,
        population_deviation,
        leaked_population,
        spectrum_deviation,
        threshold: AUDIT_THRESHOLD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dissipator_is_trace_preserving() {
        let d = dissipator(&ComplexMatrix::unit(3, 0, 2));
        let id = ComplexMatrix::identity(3).vectorize();
        for col in 0..9 {
            let s: C64 = (0..9).map(|r| id[r] * d.get(r, col)).sum();
            assert!(s.norm() < 1e-15);
        }
    }

    #[test]
    fn single_channel_decay_generator() {
        let mut rates = RateMatrix::zeros(4);
        rates.set(3, 0, 0.7);
        let l = liouvillian_from_parts(&ComplexMatrix::zeros(4, 4), &rates, &RateMatrix::zeros(4)).unwrap();
        let rho = ComplexMatrix::unit(4, 3, 3);
        let dr = l.apply(&rho).unwrap();
        assert!((dr.get(3, 3).re + 0.7).abs() < 1e-15);
        assert!((dr.get(0, 0).re - 0.7).abs() < 1e-15);
    }

    #[test]
    fn rate_matrix_rejects_upward_entries() {
        let r = std::panic::catch_unwind(|| RateMatrix::zeros(3).set(0, 2, 1.0));
        assert!(r.is_err());
    }

    use crate::cli::Preset;
    use crate::model::{diagonalize, SystemParams};
    use crate::testutil::driven;
    use crate::OMEGA_A;
    use proptest::prelude::*;

    #[test]
    fn preset_liouvillians_preserve_trace() {
        for preset in Preset::ALL {
            let run = driven(&preset.params());
            assert!(run.l.trace_defect() <= 1e-15, "{preset}: {}", run.l.trace_defect());
            let eig = run.l.eigenvalues().unwrap();
            assert!(eig.iter().all(|z| z.re <= 1e-12), "{preset}");
        }
    }

    #[test]
    fn uncoupled_rates_are_bare_rates() {
        let p = SystemParams::default().with_g(0.0);
        let d = diagonalize(&p).unwrap();
        let t = transition_table(&d, &p, &[0, 1, 2, 3]).unwrap();
        // ψ₁, ψ₂ are single-qubit excitations, ψ₃ is one photon.
        assert!((t.gamma_total(1, 0) - p.gamma).abs() <= 1e-12 * p.gamma);
        assert!((t.gamma_total(2, 0) - p.gamma).abs() <= 1e-12 * p.gamma);
        assert!((t.gamma_total(3, 0) - p.kappa).abs() <= 1e-12 * p.kappa);
        assert!(t.gamma_total(2, 1).abs() <= 1e-15 && t.gamma_total(3, 1).abs() <= 1e-15);
        assert!((t.gamma_total(3, 0) - 2.0 * OMEGA_A).abs() < 1e-15);
    }

    #[test]
    fn rates_scale_linearly_with_couplings() {
        let run = driven(&Preset::Fig4b.params());
        let t = &run.model.table;
        let doubled = t.with_rates(2.0 * t.kappa, 2.0 * t.gamma);
        for j in 0..4 {
            for k in 0..j {
                assert!((doubled.gamma_total(j, k) - 2.0 * t.gamma_total(j, k)).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn drive_targets_requested_level() {
        let p = Preset::Fig4b.params();
        let d = diagonalize(&p).unwrap();
        let m = effective_drive(&d, &p, 3).unwrap();
        let ops = d.operators();
        let x = &ops.a + &ops.a_dag;
        let want = p.epsilon * d.state(0).dotc(&x.mul_vec(&d.state(3))).norm();
        assert!((m.omega.abs() - want.abs()).abs() <= 1e-12 * want.abs());
        assert!(effective_drive(&d, &p, 0).is_err());
    }

    #[test]
    fn truncation_audit_reports_consistent_populations() {
        let p = Preset::Fig4b.params();
        let d = diagonalize(&p).unwrap();
        let a = truncation_audit(&d, &p, 8).unwrap();
        assert_eq!(a.populations_large.len(), 8);
        assert!((a.populations_small.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((a.populations_large.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let leaked: f64 = a.populations_large[4..].iter().sum();
        assert!((leaked - a.leaked_population).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn random_generators_preserve_trace(
            seed in prop::collection::vec(-1.0f64..1.0, 16),
            rates in prop::collection::vec(0.0f64..2.0, 12),
        ) {
            let h = ComplexMatrix::from_fn(4, 4, |i, j| {
                let (a, b) = (seed[4 * i.min(j) + i.max(j)], seed[4 * i.max(j) + i.min(j)]);
                if i == j { C64::new(a, 0.0) } else if i < j { C64::new(a, b) } else { C64::new(a, -b) }
            });
            let cavity = RateMatrix::from_downward(4, |j, k| rates[j * (j - 1) / 2 + k]);
            let qubit = RateMatrix::from_downward(4, |j, k| rates[6 + j * (j - 1) / 2 + k]);
            let l = liouvillian_from_parts(&h, &cavity, &qubit).unwrap();
            prop_assert!(l.trace_defect() <= 1e-14);
            let rho = ComplexMatrix::from_real_diagonal(&[0.4, 0.3, 0.2, 0.1]);
            let dr = l.apply(&rho).unwrap();
            prop_assert!(dr.trace().norm() <= 1e-14);
            prop_assert!(dr.hermiticity_defect() <= 1e-14);
        }
    }
}

