//! Physical parameters, mode grids, and initial-state moment data.
//!
//! The slab is fully specified by two dimensionless numbers: the lattice
//! phase `delta0 = Omega a / c` and the coupling `g = eta / Omega`, where
//! `eta = a f^2 / (2 c)` is the fundamental radiative rate and
//! `f^2 = 8 pi Omega d^2 / (hbar a^3)`. Optional physical scales are kept
//! only to restore units on output.
//!
//! The exciton state enters all observables through its first and second
//! moments only; the dynamics is linear, so this is exact for every
//! quantity computed here.

use crate::linalg::CMat;
use crate::{Result, SlabError};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Optional physical scales for unit restoration (Gaussian units).
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalScales {
    /// Isolated-atom transition frequency, rad/s.
    pub omega: f64,
    /// Lattice constant, cm.
    pub lattice: f64,
    /// Transition dipole moment, statC cm.
    pub dipole: f64,
    /// Layer area, cm^2.
    pub area: f64,
    /// Reduced Planck constant, erg s.
    pub hbar: f64,
    /// Speed of light, cm/s.
    pub light_speed: f64,
}

/// Dimensionless slab parameters. Internally `Omega = c = hbar = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlabParams {
    pub n_layers: usize,
    /// Lattice phase `delta0 = Omega a / c`.
    pub delta0: f64,
    /// Coupling `g = eta / Omega`.
    pub g: f64,
    pub physical: Option<PhysicalScales>,
}

impl SlabParams {
    /// Build from the dimensionless pair directly.
    pub fn dimensionless(n_layers: usize, delta0: f64, g: f64) -> Result<Self> {
        if n_layers < 1 {
            return Err(SlabError::InvalidParameter(format!(
                "n_layers must be >= 1, got {n_layers}"
            )));
        }
        if !(delta0 > 0.0) || !delta0.is_finite() {
            return Err(SlabError::InvalidParameter(format!("delta0 must be > 0, got {delta0}")));
        }
        if !(g > 0.0) || !g.is_finite() {
            return Err(SlabError::InvalidParameter(format!("g must be > 0, got {g}")));
        }
        Ok(SlabParams { n_layers, delta0, g, physical: None })
    }

    /// Build from physical scales; see [`derive_dimensionless`].
    pub fn from_physical(n_layers: usize, scales: PhysicalScales) -> Result<Self> {
        let (delta0, g) = derive_dimensionless(
            scales.omega,
            scales.lattice,
            scales.dipole,
            scales.hbar,
            scales.light_speed,
        )?;
        let mut p = SlabParams::dimensionless(n_layers, delta0, g)?;
        p.physical = Some(scales);
        Ok(p)
    }

    /// Radiative rate `eta` in units of `Omega`.
    #[inline]
    pub fn eta(&self) -> f64 {
        self.g
    }

    /// Subradiant rate scale `eta' = eta delta0^2 / 4` in units of `Omega`.
    #[inline]
    pub fn eta_prime(&self) -> f64 {
        self.g * self.delta0 * self.delta0 / 4.0
    }

    /// Lattice constant in internal length units (`c/Omega`).
    #[inline]
    pub fn lattice_internal(&self) -> f64 {
        self.delta0
    }

    /// Half-thickness of the slab, `(N-1) a / 2`, internal units.
    pub fn half_thickness(&self) -> f64 {
        (self.n_layers as f64 - 1.0) * self.delta0 / 2.0
    }

    /// Perturbative-validity warnings. These are advisory, never errors:
    /// the exact machinery stays well defined, only the closed-form
    /// approximations degrade.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.delta0 > 0.3 {
            w.push(format!("delta0 = {} is not << 1; perturbative root formulas degrade", self.delta0));
        }
        if self.g > 0.05 {
            w.push(format!("g = {} is not << 1; perturbative root formulas degrade", self.g));
        }
        if let Some(s) = &self.physical {
            let g_check = 4.0 * PI * s.dipole * s.dipole / (s.hbar * s.lattice * s.lattice * s.light_speed);
            let rel = (g_check - self.g).abs() / self.g;
            if rel > 1e-12 {
                w.push(format!("physical scales disagree with g by relative {rel:.3e}"));
            }
        }
        w
    }

    /// Field unit `E0 = sqrt(2 pi eta hbar Omega / (c A))` in physical units,
    /// if physical scales are present.
    pub fn field_unit(&self) -> Option<f64> {
        self.physical.as_ref().map(|s| {
            let eta = self.g * s.omega;
            (2.0 * PI * eta * s.hbar * s.omega / (s.light_speed * s.area)).sqrt()
        })
    }

    /// Flux unit `S0 = eta hbar Omega / A` in physical units, if available.
    pub fn flux_unit(&self) -> Option<f64> {
        self.physical.as_ref().map(|s| self.g * s.omega * s.hbar * s.omega / s.area)
    }
}

/// delta0 = Omega a / c and g = 4 pi d^2 / (hbar a^2 c), from physical scales.
///
/// The pair round-trips: g Omega = eta = a f^2 / (2 c) with
/// f^2 = 8 pi Omega d^2 / (hbar a^3).
pub fn derive_dimensionless(
    omega: f64,
    lattice: f64,
    dipole: f64,
    hbar: f64,
    light_speed: f64,
) -> Result<(f64, f64)> {
    for (name, v) in [
        ("omega", omega),
        ("lattice", lattice),
        ("dipole", dipole),
        ("hbar", hbar),
        ("light_speed", light_speed),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(SlabError::InvalidParameter(format!("{name} must be > 0, got {v}")));
        }
    }
    let delta0 = omega * lattice / light_speed;
    let g = 4.0 * PI * dipole * dipole / (hbar * lattice * lattice * light_speed);
    Ok((delta0, g))
}

/// Wave-vector and layer-index grid for an N-layer slab.
///
/// `m = -(N-1)/2, ..., (N-1)/2` (half-integers for even N), with
/// `k = 2 pi m / (N a)`; layer indices run over the same values.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeGrid {
    n: usize,
    m_values: Vec<f64>,
}

impl ModeGrid {
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m_values(&self) -> &[f64] {
        &self.m_values
    }

    pub fn l_values(&self) -> &[f64] {
        &self.m_values
    }

    /// `k a` for the i-th grid mode (k in units of 1/a).
    #[inline]
    pub fn ka(&self, i: usize) -> f64 {
        2.0 * PI * self.m_values[i] / self.n as f64
    }

    /// Index of the mode with m-value `-m(i)`; grid symmetry makes this a
    /// simple reversal.
    #[inline]
    pub fn neg_index(&self, i: usize) -> usize {
        self.n - 1 - i
    }

    /// Unitary layer -> k transform `U_{kl} = exp(-i k l a) / sqrt(N)`.
    pub fn layer_to_k_matrix(&self) -> CMat {
        let n = self.n;
        let norm = 1.0 / (n as f64).sqrt();
        CMat::from_fn(n, |ki, li| {
            let phase = -self.ka(ki) * self.m_values[li];
            C64::from_polar(norm, phase)
        })
    }
}

/// Symmetric mode grid for an N-layer slab.
pub fn build_mode_grid(n_layers: usize) -> Result<ModeGrid> {
    if n_layers < 1 {
        return Err(SlabError::InvalidParameter(format!("n_layers must be >= 1, got {n_layers}")));
    }
    let half = (n_layers as f64 - 1.0) / 2.0;
    let m_values = (0..n_layers).map(|i| i as f64 - half).collect();
    Ok(ModeGrid { n: n_layers, m_values })
}

/// Complex eigenfrequency `omega_m = Omega_m - i Gamma_m`, units of Omega.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexFrequency {
    /// Shifted frequency `Omega_m`.
    pub re: f64,
    /// `-Gamma_m`; certified eigenfrequencies always have `im < 0`.
    pub im: f64,
    pub label: String,
}

impl ComplexFrequency {
    pub fn new(value: C64, label: impl Into<String>) -> Self {
        ComplexFrequency { re: value.re, im: value.im, label: label.into() }
    }

    #[inline]
    pub fn value(&self) -> C64 {
        C64::new(self.re, self.im)
    }

    #[inline]
    pub fn gamma(&self) -> f64 {
        -self.im
    }
}

/// Basis in which a vector or matrix of exciton data is expressed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    KSpace,
    Layer,
}

/// Initial exciton state, reduced to first and second moments:
/// `mean_k = <B_k(0)>`, `normal_{kk'} = <B_k^+(0) B_k'(0)>`,
/// `anomalous_{kk'} = <B_k(0) B_k'(0)>`, all on the k grid.
#[derive(Clone, Debug)]
pub struct ExcitonMoments {
    pub mean: Vec<C64>,
    pub normal: CMat,
    pub anomalous: CMat,
}

impl ExcitonMoments {
    pub fn n(&self) -> usize {
        self.mean.len()
    }

    pub fn vacuum(n: usize) -> Self {
        ExcitonMoments { mean: vec![ZERO; n], normal: CMat::zeros(n), anomalous: CMat::zeros(n) }
    }

    /// Total initial excitation number, `tr normal`.
    pub fn total_occupation(&self) -> f64 {
        (0..self.n()).map(|i| self.normal.at(i, i).re).sum()
    }

    /// One excitation in the collective mode with k-basis weights `w`
    /// (a Fock state of that mode).
    pub fn single_excitation(weights: &[C64]) -> Result<Self> {
        let norm: f64 = weights.iter().map(|w| w.norm_sqr()).sum();
        if norm <= 0.0 {
            return Err(SlabError::InvalidParameter("zero mode weights".into()));
        }
        let w: Vec<C64> = weights.iter().map(|v| v / norm.sqrt()).collect();
        let n = w.len();
        let normal = CMat::from_fn(n, |i, j| w[i].conj() * w[j]);
        Ok(ExcitonMoments { mean: vec![ZERO; n], normal, anomalous: CMat::zeros(n) })
    }

    /// Smallest eigenvalue of the physicality form; >= 0 (to tolerance)
    /// for any state realizable by bosonic modes.
    ///
    /// The form is `Q = [[n^T + I, m], [conj(m), n]] - u u^+` with
    /// `u = [mu; conj(mu)]`: `v^+ Q v = <C~ C~^+> >= 0` for
    /// `C = x . B + y . B^+` with mean subtracted.
    pub fn physicality_margin(&self) -> f64 {
        let n = self.n();
        let mut q = CMat::zeros(2 * n);
        for i in 0..n {
            for j in 0..n {
                let nt = self.normal.at(j, i);
                q.set(i, j, nt + if i == j { C64::new(1.0, 0.0) } else { ZERO });
                q.set(i, n + j, self.anomalous.at(i, j));
                q.set(n + i, j, self.anomalous.at(i, j).conj());
                q.set(n + i, n + j, self.normal.at(i, j));
            }
        }
        let u: Vec<C64> = self.mean.iter().copied().chain(self.mean.iter().map(|v| v.conj())).collect();
        for i in 0..2 * n {
            for j in 0..2 * n {
                let v = q.at(i, j) - u[i] * u[j].conj();
                q.set(i, j, v);
            }
        }
        let ev = q.hermitian_eigenvalues();
        ev[0]
    }

    /// Validate Hermiticity/symmetry and the physicality form.
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.normal.n() != n || self.anomalous.n() != n {
            return Err(SlabError::InvalidParameter("moment matrix sizes disagree with mean".into()));
        }
        let scale = 1.0 + self.normal.max_norm() + self.anomalous.max_norm();
        if self.normal.sub(&self.normal.adjoint()).max_norm() > 1e-10 * scale {
            return Err(SlabError::UnphysicalState("normal moments not Hermitian".into()));
        }
        if self.anomalous.sub(&self.anomalous.transpose()).max_norm() > 1e-10 * scale {
            return Err(SlabError::UnphysicalState("anomalous moments not symmetric".into()));
        }
        let margin = self.physicality_margin();
        if margin < -1e-9 * scale {
            return Err(SlabError::UnphysicalState(format!(
                "moment matrix violates bosonic positivity (margin {margin:.3e})"
            )));
        }
        Ok(())
    }
}

/// Constructive descriptions of initial exciton states.
#[derive(Clone, Debug)]
pub enum StateSpec {
    /// Coherent state with one complex amplitude per mode.
    Coherent { amplitudes: Vec<C64>, basis: Basis },
    /// Number state per mode; zero mean field.
    Fock { occupations: Vec<u64>, basis: Basis },
    /// Thermal-like diagonal mixture with given mean occupation per mode.
    Chaotic { occupations: Vec<f64>, basis: Basis },
    /// Raw moments, already in the k basis.
    Raw { mean: Vec<C64>, normal: CMat, anomalous: CMat },
}

/// Realize a state spec as validated k-basis moments.
///
/// Occupations are not range-limited; results are physical only for
/// mean occupation per site << 1 (the bosonic description of the
/// excitons is a low-density approximation).
pub fn moments_from_state_spec(spec: &StateSpec, grid: &ModeGrid) -> Result<ExcitonMoments> {
    let n = grid.n();
    let m = match spec {
        StateSpec::Coherent { amplitudes, basis } => {
            check_len(amplitudes.len(), n)?;
            let mu = match basis {
                Basis::KSpace => amplitudes.clone(),
                Basis::Layer => grid.layer_to_k_matrix().matvec(amplitudes),
            };
            let normal = CMat::from_fn(n, |i, j| mu[i].conj() * mu[j]);
            let anomalous = CMat::from_fn(n, |i, j| mu[i] * mu[j]);
            ExcitonMoments { mean: mu, normal, anomalous }
        }
        StateSpec::Fock { occupations, basis } => {
            check_len(occupations.len(), n)?;
            let occ: Vec<f64> = occupations.iter().map(|&o| o as f64).collect();
            diagonal_occupation(&occ, *basis, grid)
        }
        StateSpec::Chaotic { occupations, basis } => {
            check_len(occupations.len(), n)?;
            for &o in occupations {
                if o < 0.0 {
                    return Err(SlabError::UnphysicalState(format!("negative occupation {o}")));
                }
            }
            diagonal_occupation(occupations, *basis, grid)
        }
        StateSpec::Raw { mean, normal, anomalous } => {
            check_len(mean.len(), n)?;
            ExcitonMoments { mean: mean.clone(), normal: normal.clone(), anomalous: anomalous.clone() }
        }
    };
    m.validate()?;
    Ok(m)
}

fn check_len(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(SlabError::InvalidParameter(format!(
            "state spec has {got} mode entries, grid has {want}"
        )));
    }
    Ok(())
}

fn diagonal_occupation(occ: &[f64], basis: Basis, grid: &ModeGrid) -> ExcitonMoments {
    let n = grid.n();
    let diag = CMat::from_fn(n, |i, j| if i == j { C64::new(occ[i], 0.0) } else { ZERO });
    let normal = match basis {
        Basis::KSpace => diag,
        Basis::Layer => {
            // n^k = conj(U) n^L U^T for B_k = sum_l U_{kl} B_l.
            let u = grid.layer_to_k_matrix();
            u.conj().mul(&diag).mul(&u.transpose())
        }
    };
    ExcitonMoments { mean: vec![ZERO; n], normal, anomalous: CMat::zeros(n) }
}
