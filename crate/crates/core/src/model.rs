//! Two qubits coupled to one cavity mode beyond the rotating-wave regime:
//! bare operators, the Rabi Hamiltonian, its dressed eigenbasis, and sweeps
//! of the energy ladder over the coupling strength.
//!
//! Bare product states are ordered qubit 1 ⊗ qubit 2 ⊗ cavity with each qubit
//! in `(g, e)` order, so `|q1, q2, n⟩` sits at `(2·q1 + q2)·(n_max + 1) + n`
//! with `g = 0`, `e = 1`.

use std::f64::consts::FRAC_PI_6;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig_with, kron, phase_reference, CVector, ComplexMatrix, Tolerances, C64};
use crate::parallel::{self, ExecMode};

/// Physical inputs. Frequencies and rates are in units of `omega_q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega_q: f64,
    pub omega_c: f64,
    pub g: f64,
    pub theta: f64,
    /// Drive amplitude.
    pub epsilon: f64,
    /// Drive frequency; `None` tunes it to the ground → level-3 transition.
    pub omega_l: Option<f64>,
    pub kappa: f64,
    /// Damping rate shared by both qubits.
    pub gamma: f64,
    pub n_max: usize,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            omega_q: 1.0,
            omega_c: 1.915,
            g: 0.2,
            theta: FRAC_PI_6,
            epsilon: 8e-3,
            omega_l: None,
            kappa: 2e-3,
            gamma: 2e-5,
            n_max: 20,
        }
    }
}

impl SystemParams {
    pub const MIN_N_MAX: usize = 5;

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("omega_c", self.omega_c),
            ("g", self.g),
            ("epsilon", self.epsilon),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
        ];
        for (name, v) in nonneg {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !self.omega_q.is_finite() || self.omega_q <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "omega_q must be finite and > 0, got {}",
                self.omega_q
            )));
        }
        if !self.theta.is_finite() {
            return Err(Error::InvalidParameter(format!("theta must be finite, got {}", self.theta)));
        }
        if let Some(wl) = self.omega_l {
            if !wl.is_finite() || wl < 0.0 {
                return Err(Error::InvalidParameter(format!("omega_l must be finite and >= 0, got {wl}")));
            }
        }
        if self.n_max < Self::MIN_N_MAX {
            return Err(Error::InvalidParameter(format!(
                "n_max must be >= {}, got {}",
                Self::MIN_N_MAX,
                self.n_max
            )));
        }
        Ok(())
    }

    /// Cavity–qubit detuning `omega_c − omega_q`.
    pub fn detuning(&self) -> f64 {
        self.omega_c - self.omega_q
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Qubit {
    G = 0,
    E = 1,
}

/// Index map of the bare product basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BareBasis {
    pub n_max: usize,
}

impl BareBasis {
    pub fn new(n_max: usize) -> Self {
        Self { n_max }
    }

    pub fn dim(&self) -> usize {
        4 * (self.n_max + 1)
    }

    pub fn index(&self, q1: Qubit, q2: Qubit, photons: usize) -> usize {
        assert!(photons <= self.n_max, "photon number {photons} above truncation {}", self.n_max);
        (2 * q1 as usize + q2 as usize) * (self.n_max + 1) + photons
    }

    pub fn state(&self, index: usize) -> (Qubit, Qubit, usize) {
        assert!(index < self.dim(), "index {index} outside basis of size {}", self.dim());
        let nf = self.n_max + 1;
        let q = index / nf;
        let bit = |b: usize| if b == 0 { Qubit::G } else { Qubit::E };
        (bit(q / 2), bit(q % 2), index % nf)
    }

    /// Normalized superposition `Σ c_k |q1, q2, n⟩_k`.
    pub fn superposition(&self, terms: &[(Qubit, Qubit, usize, f64)]) -> CVector {
        let mut v = CVector::zeros(self.dim());
        for &(q1, q2, n, c) in terms {
            v[self.index(q1, q2, n)] += C64::new(c, 0.0);
        }
        let norm = v.norm();
        if norm > 0.0 {
            v /= C64::new(norm, 0.0);
        }
        v
    }
}

/// Operators on the full truncated product space.
#[derive(Debug, Clone)]
pub struct BareOperators {
    pub basis: BareBasis,
    pub a: ComplexMatrix,
    pub a_dag: ComplexMatrix,
    /// Field quadrature `a + a†`.
    pub x: ComplexMatrix,
    pub sigma_x: [ComplexMatrix; 2],
    pub sigma_z: [ComplexMatrix; 2],
    /// Lowering operators `|g⟩⟨e|`.
    pub sigma_minus: [ComplexMatrix; 2],
    pub sigma_plus: [ComplexMatrix; 2],
    /// Swaps the two qubits.
    pub exchange: ComplexMatrix,
}

impl BareOperators {
    pub fn number(&self) -> ComplexMatrix {
        &self.a_dag * &self.a
    }

    /// `a − a†`.
    pub fn a_minus_a_dag(&self) -> ComplexMatrix {
        &self.a - &self.a_dag
    }

    /// `σ₋ − σ₊` of qubit `i`.
    pub fn qubit_quadrature(&self, i: usize) -> ComplexMatrix {
        &self.sigma_minus[i] - &self.sigma_plus[i]
    }
}

pub fn bare_operators(n_max: usize) -> BareOperators {
    let basis = BareBasis::new(n_max);
    let nf = n_max + 1;
    let i2 = ComplexMatrix::identity(2);
    let i_cav = ComplexMatrix::identity(nf);
    let re = |x: f64| C64::new(x, 0.0);

    let a_mode = ComplexMatrix::from_fn(nf, nf, |i, j| if j == i + 1 { re((j as f64).sqrt()) } else { re(0.0) });
    let sx = &ComplexMatrix::unit(2, 0, 1) + &ComplexMatrix::unit(2, 1, 0);
    let sz = ComplexMatrix::from_real_diagonal(&[-1.0, 1.0]);
    let sm = ComplexMatrix::unit(2, 0, 1);

    let on_cavity = |m: &ComplexMatrix| kron(&kron(&i2, &i2), m);
    let on_q1 = |m: &ComplexMatrix| kron(&kron(m, &i2), &i_cav);
    let on_q2 = |m: &ComplexMatrix| kron(&kron(&i2, m), &i_cav);

    let a = on_cavity(&a_mode);
    let a_dag = a.adjoint();
    let x = &a + &a_dag;
    let sp = sm.adjoint();

    let mut swap = ComplexMatrix::zeros(4, 4);
    for (from, to) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
        swap.set(to, from, re(1.0));
    }
    let exchange = kron(&swap, &i_cav);

    BareOperators {
        basis,
        a,
        a_dag,
        x,
        sigma_x: [on_q1(&sx), on_q2(&sx)],
        sigma_z: [on_q1(&sz), on_q2(&sz)],
        sigma_minus: [on_q1(&sm), on_q2(&sm)],
        sigma_plus: [on_q1(&sp), on_q2(&sp)],
        exchange,
    }
}

fn hamiltonian_from(ops: &BareOperators, p: &SystemParams) -> ComplexMatrix {
    let (s, c) = p.theta.sin_cos();
    let mut h = ops.number().scale_real(p.omega_c);
    for i in 0..2 {
        let qubit = ops.sigma_z[i].scale_real(0.5 * p.omega_q);
        let coupling = &ops.x * &(&ops.sigma_x[i].scale_real(c) + &ops.sigma_z[i].scale_real(s));
        h = &(&h + &qubit) + &coupling.scale_real(p.g);
    }
    h
}

/// `ω_c a†a + Σᵢ [ (ω_q/2) σzᵢ + g (a + a†)(cos θ σxᵢ + sin θ σzᵢ) ]`.
///
/// There is no direct qubit–qubit term; the qubits interact only through the
/// field.
pub fn build_rabi_hamiltonian(p: &SystemParams) -> ComplexMatrix {
    hamiltonian_from(&bare_operators(p.n_max), p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagonalizeOptions {
    pub check_truncation: bool,
    /// Photons added for the truncation check.
    pub extra_photons: usize,
    /// Largest accepted shift of the checked energies.
    pub truncation_tol: f64,
    pub checked_levels: usize,
    /// Levels closer than this are relabeled by qubit-exchange symmetry.
    pub degeneracy_tol: f64,
    pub tolerances: Tolerances,
}

impl Default for DiagonalizeOptions {
    fn default() -> Self {
        Self {
            check_truncation: true,
            extra_photons: 5,
            truncation_tol: 1e-8,
            checked_levels: 6,
            degeneracy_tol: 1e-9,
            tolerances: Tolerances::default(),
        }
    }
}

/// Eigenbasis of the Rabi Hamiltonian.
#[derive(Debug, Clone)]
pub struct DressedBasis {
    /// Ascending eigenenergies.
    pub energies: Vec<f64>,
    /// Column `n` is `|ψ_n⟩` in the bare basis.
    pub states: ComplexMatrix,
    /// `⟨ψ_n|P|ψ_n⟩` for the qubit-exchange operator `P`.
    pub exchange_parity: Vec<f64>,
    pub params: SystemParams,
}

impl DressedBasis {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn basis(&self) -> BareBasis {
        BareBasis::new(self.params.n_max)
    }

    /// `E_n − E_m`.
    pub fn gap(&self, m: usize, n: usize) -> f64 {
        self.energies[n] - self.energies[m]
    }

    /// `(E_n − E_0)/ω_q` for `n = 1..=count`.
    pub fn normalized_energies(&self, count: usize) -> Vec<f64> {
        (1..=count)
            .map(|n| (self.energies[n] - self.energies[0]) / self.params.omega_q)
            .collect()
    }

    pub fn state(&self, n: usize) -> CVector {
        self.states.column(n)
    }

    pub fn operators(&self) -> BareOperators {
        bare_operators(self.params.n_max)
    }

    /// Operator in the dressed basis, `V† O V`.
    pub fn transform(&self, op: &ComplexMatrix) -> ComplexMatrix {
        op.sandwich(&self.states, &self.states)
    }

    /// `|⟨ψ_n|v⟩|²`.
    pub fn overlap(&self, n: usize, v: &CVector) -> f64 {
        self.state(n).dotc(v).norm_sqr()
    }
}

pub fn diagonalize(p: &SystemParams) -> Result<DressedBasis> {
    diagonalize_with(p, &DiagonalizeOptions::default())
}

pub fn diagonalize_with(p: &SystemParams, opts: &DiagonalizeOptions) -> Result<DressedBasis> {
    p.validate()?;
    let ops = bare_operators(p.n_max);
    let h = hamiltonian_from(&ops, p);
    let eig = hermitian_eig_with(&h, &opts.tolerances)?;
    let energies = eig.values;
    let mut states = eig.vectors;

    let mut start = 0;
    while start < energies.len() {
        let mut end = start;
        while end + 1 < energies.len() && energies[end + 1] - energies[end] < opts.degeneracy_tol {
            end += 1;
        }
        if end > start {
            relabel_by_exchange(&mut states, &ops.exchange, start, end, &opts.tolerances)?;
        }
        start = end + 1;
    }
    let parity = ops.exchange.sandwich(&states, &states);
    let exchange_parity = (0..energies.len()).map(|k| parity.get(k, k).re).collect();

    if opts.check_truncation {
        check_truncation(p, &energies, opts)?;
    }
    Ok(DressedBasis {
        energies,
        states,
        exchange_parity,
        params: *p,
    })
}

/// Rotates a degenerate block onto exchange eigenstates, symmetric first.
fn relabel_by_exchange(
    states: &mut ComplexMatrix,
    exchange: &ComplexMatrix,
    start: usize,
    end: usize,
    tol: &Tolerances,
) -> Result<()> {
    let idx: Vec<usize> = (start..=end).collect();
    let block = states.select_columns(&idx);
    let p = exchange.sandwich(&block, &block);
    let eig = hermitian_eig_with(&p, tol)?;
    let order: Vec<usize> = (0..idx.len()).rev().collect();
    let rotated = &block * &eig.vectors.select_columns(&order);
    for (k, &col) in idx.iter().enumerate() {
        let mut v = rotated.column(k);
        let norm = v.norm();
        v /= C64::new(norm, 0.0);
        v *= phase_reference(v.as_slice()).conj();
        for (r, z) in v.iter().enumerate() {
            states.set(r, col, *z);
        }
    }
    Ok(())
}

fn check_truncation(p: &SystemParams, energies: &[f64], opts: &DiagonalizeOptions) -> Result<()> {
    let mut bigger = *p;
    bigger.n_max = p.n_max + opts.extra_photons;
    let reference = raw_energies(&bigger, &opts.tolerances)?;
    let shift = energies
        .iter()
        .zip(&reference)
        .take(opts.checked_levels)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if shift > opts.truncation_tol {
        return Err(Error::Truncation {
            n_max: p.n_max,
            extra: opts.extra_photons,
            shift,
        });
    }
    Ok(())
}

fn raw_energies(p: &SystemParams, tol: &Tolerances) -> Result<Vec<f64>> {
    Ok(hermitian_eig_with(&build_rabi_hamiltonian(p), tol)?.values)
}

/// Normalized energy ladder over a coupling grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderTable {
    pub g: Vec<f64>,
    /// `rows[i][n − 1] = (E_n − E_0)/ω_q` at `g[i]`.
    pub rows: Vec<Vec<f64>>,
    pub levels: usize,
}

impl LadderTable {
    /// Column of `(E_n − E_0)/ω_q` for level `n ≥ 1`.
    pub fn level(&self, n: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[n - 1]).collect()
    }
}

pub fn ladder_sweep(p: &SystemParams, g_grid: &[f64], levels: usize, mode: ExecMode) -> Result<LadderTable> {
    if g_grid.is_empty() {
        return Err(Error::InvalidParameter("coupling grid is empty".into()));
    }
    if g_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("coupling grid must be ascending".into()));
    }
    let dim = BareBasis::new(p.n_max).dim();
    if levels == 0 || levels >= dim {
        return Err(Error::InvalidParameter(format!(
            "level count {levels} must lie in 1..{dim}"
        )));
    }
    let rows = parallel::try_map(g_grid, mode, |&g| {
        diagonalize(&p.with_g(g)).map(|d| d.normalized_energies(levels))
    })?;
    Ok(LadderTable {
        g: g_grid.to_vec(),
        rows,
        levels,
    })
}

/// Minimizer of a unimodal function on `[lo, hi]` by golden-section search.
/// Returns `(x*, f(x*))`.
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "golden-section search needs lo < hi and tol > 0 (got [{lo}, {hi}], tol {tol})"
        )));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anticrossing {
    pub lower: usize,
    pub upper: usize,
    pub g: f64,
    /// `E_upper − E_lower` at `g`.
    pub gap: f64,
}

/// Tolerance on the located coupling.
pub const ANTICROSSING_G_TOL: f64 = 1e-7;

/// Locates the minimum of `E_upper − E_lower` over `g` in `bracket`.
pub fn find_anticrossing(p: &SystemParams, levels: (usize, usize), bracket: (f64, f64)) -> Result<Anticrossing> {
    p.validate()?;
    let (lower, upper) = levels;
    if lower >= upper {
        return Err(Error::InvalidParameter(format!(
            "level pair must be ordered (lower < upper), got ({lower}, {upper})"
        )));
    }
    let (lo, hi) = bracket;
    if !(lo >= 0.0) || !(lo < hi) {
        return Err(Error::InvalidParameter(format!("invalid coupling bracket [{lo}, {hi}]")));
    }
    let tol = Tolerances::default();
    let gap_at = |g: f64| -> Result<f64> {
        let e = raw_energies(&p.with_g(g), &tol)?;
        e.get(upper)
            .zip(e.get(lower))
            .map(|(u, l)| u - l)
            .ok_or_else(|| Error::InvalidParameter(format!("level {upper} outside the truncated basis")))
    };
    let (g, gap) = golden_section(gap_at, lo, hi, ANTICROSSING_G_TOL)?;
    let margin = 10.0 * ANTICROSSING_G_TOL;
    if g - lo < margin || hi - g < margin {
        return Err(Error::NoInteriorMinimum {
            lower,
            upper,
            lo,
            hi,
            at: g,
        });
    }
    diagonalize(&p.with_g(g))?;
    Ok(Anticrossing { lower, upper, g, gap })
}
