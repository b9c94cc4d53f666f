//! Independent time-domain validator.
//!
//! Integrates the exact linear first-moment equations of the coupled
//! exciton-photon system against a finite discretized photon bath
//! (`q_j = 2 pi j / L`, vacuum initial state), with no rotating-wave
//! approximation and the two-photon coupling included. Produces detector
//! field traces and fitted decay rates without touching any of the
//! frequency-domain machinery, so it can arbitrate the analytic results.
//!
//! First moments are exact for every observable used here: the Hamiltonian
//! is quadratic, so second-moment observables follow by linearity from the
//! mode-resolved Green columns (one run per basis initial condition).

use crate::dynamics::FieldTrace;
use crate::linalg::CMat;
use crate::model::{build_mode_grid, ExcitonMoments, SlabParams};
use crate::{Result, SlabError};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Discretized photon bath parameters (internal units).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BathConfig {
    /// Quantization length L; mode spacing 2 pi / L.
    pub box_length: f64,
    /// UV cutoff |q| <= q_max.
    pub q_max: f64,
    /// Integrator step (order-4 fixed step).
    pub dt: f64,
}

impl BathConfig {
    /// Default bath for a run reaching `t_max` with a detector at distance z:
    /// no wrap-around within the window, cutoff 40, step at the stability
    /// bound 0.05 / q_max.
    pub fn for_window(t_max: f64, z: f64) -> Self {
        let q_max = 40.0;
        BathConfig {
            box_length: (2.2 * (t_max + z)).max(400.0),
            q_max,
            dt: 0.05 / q_max,
        }
    }

    pub fn validate(&self, t_max: f64, z: f64) -> Result<()> {
        if self.box_length <= 2.0 * (t_max + z) {
            return Err(SlabError::Config(format!(
                "box length {} allows bath wrap-around within the window (need > {})",
                self.box_length,
                2.0 * (t_max + z)
            )));
        }
        if self.q_max < 20.0 {
            return Err(SlabError::Config(format!("q_max = {} below the resolution floor 20", self.q_max)));
        }
        if self.dt > 0.05 / self.q_max {
            return Err(SlabError::Config(format!(
                "dt = {} too large for q_max = {} (need <= {})",
                self.dt,
                self.q_max,
                0.05 / self.q_max
            )));
        }
        Ok(())
    }
}

/// Model-term toggles for ablation runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleOptions {
    pub two_photon: bool,
    pub counter_rotating: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { two_photon: true, counter_rotating: true }
    }
}

/// First-moment state: exciton and photon amplitudes plus their
/// independent conjugate partners (`*_c` tracks the daggered operators,
/// which only coincides with the complex conjugate for physical initial
/// data; Green-function runs break that tie on purpose).
#[derive(Clone, Debug)]
pub struct OracleState {
    pub beta: Vec<C64>,
    pub beta_c: Vec<C64>,
    pub alpha: Vec<C64>,
    pub alpha_c: Vec<C64>,
    pub t: f64,
}

/// The assembled bath + couplings for one slab.
pub struct Oracle {
    params: SlabParams,
    options: OracleOptions,
    bath: BathConfig,
    /// Photon wave numbers q_j, j = +/-1 .. +/-j_max (no q = 0 mode: its
    /// coupling vanishes in measure and diverges pointwise).
    q: Vec<f64>,
    /// mirror[iq] = index of -q.
    q_mirror: Vec<usize>,
    /// coupling[k * nq + iq] = G(q) O(k - q).
    coupling: Vec<f64>,
    n: usize,
}

impl Oracle {
    pub fn new(params: &SlabParams, bath: BathConfig, options: OracleOptions) -> Result<Self> {
        let n = params.n_layers;
        let grid = build_mode_grid(n)?;
        // Half-integer (antiperiodic) mode grid: q = 2 pi (j + 1/2) / L.
        // Midpoint sampling across the omega = |q| cusp at q = 0 kills the
        // leading discretization error of the instantaneous-term
        // cancellation, which otherwise leaves a spurious pre-cone field.
        let j_max = (bath.q_max * bath.box_length / (2.0 * PI) - 0.5).floor() as i64;
        if j_max < 1 {
            return Err(SlabError::Config("bath has no modes below the cutoff".into()));
        }
        let mut q = Vec::with_capacity(2 * (j_max as usize + 1));
        for j in 0..=j_max {
            let qv = 2.0 * PI * (j as f64 + 0.5) / bath.box_length;
            q.push(qv);
            q.push(-qv);
        }
        let nq = q.len();
        let q_mirror: Vec<usize> = (0..nq)
            .map(|iq| {
                let target = -q[iq];
                q.iter().position(|&v| (v - target).abs() < 1e-12).expect("symmetric bath grid")
            })
            .collect();
        // G(q) = sqrt(N g / (2 L |q|)); O in lattice-phase units.
        let mut coupling = vec![0.0; n * nq];
        for k in 0..n {
            let ka = grid.ka(k);
            for (iq, &qv) in q.iter().enumerate() {
                let g_q = (n as f64 * params.g / (2.0 * bath.box_length * qv.abs())).sqrt();
                let o = crate::coupling::matching_factor(
                    C64::new(ka, 0.0),
                    C64::new(qv * params.delta0, 0.0),
                    n,
                    1.0,
                );
                coupling[k * nq + iq] = g_q * o.re;
            }
        }
        Ok(Oracle { params: params.clone(), options, bath, q, q_mirror, coupling, n })
    }

    pub fn n_photon_modes(&self) -> usize {
        self.q.len()
    }

    /// Physical initial condition: excitons with mean amplitudes mu (k basis),
    /// photon vacuum.
    pub fn coherent_start(&self, mu: &[C64]) -> OracleState {
        assert_eq!(mu.len(), self.n);
        let nq = self.q.len();
        OracleState {
            beta: mu.to_vec(),
            beta_c: mu.iter().map(|m| m.conj()).collect(),
            alpha: vec![ZERO; nq],
            alpha_c: vec![ZERO; nq],
            t: 0.0,
        }
    }

    /// Green-function initial condition: a single unit entry in beta
    /// (`conjugate = false`) or beta_c (`conjugate = true`).
    pub fn basis_start(&self, index: usize, conjugate: bool) -> OracleState {
        let nq = self.q.len();
        let mut s = OracleState {
            beta: vec![ZERO; self.n],
            beta_c: vec![ZERO; self.n],
            alpha: vec![ZERO; nq],
            alpha_c: vec![ZERO; nq],
            t: 0.0,
        };
        if conjugate {
            s.beta_c[index] = C64::new(1.0, 0.0);
        } else {
            s.beta[index] = C64::new(1.0, 0.0);
        }
        s
    }

    /// Exact first-moment equations of motion. The daggered amplitudes obey
    /// the conjugate-channel equations, which reuse the same real coupling
    /// array with direct indexing:
    ///
    /// ```text
    /// d beta_k    = -i (beta_k + p_k)
    /// d beta_c_k  = +i (beta_c_k + pc_k)
    /// d alpha_q   = -i (w_q alpha_q   + sum_k C_kq (x_k  + 2 p_k))
    /// d alpha_c_q = +i (w_q alpha_c_q + sum_k C_kq (xc_k + 2 pc_k))
    /// ```
    ///
    /// with `y_q = alpha_q + alpha_c_{-q}`, `p_k = sum_q C_kq y_q`,
    /// `x_k = beta_k + beta_c_{-k}` and the `c` channel mirrored in q/k.
    fn derivative(&self, s: &OracleState, out: &mut OracleState, work: &mut WorkBufs) {
        let n = self.n;
        let nq = self.q.len();
        let grid_rev = |k: usize| n - 1 - k;
        let WorkBufs { y, y_c, p, p_c, x, x_c } = work;
        if self.options.counter_rotating {
            for iq in 0..nq {
                y[iq] = s.alpha[iq] + s.alpha_c[self.q_mirror[iq]];
                y_c[iq] = s.alpha_c[iq] + s.alpha[self.q_mirror[iq]];
            }
        } else {
            y.copy_from_slice(&s.alpha);
            y_c.copy_from_slice(&s.alpha_c);
        }
        for k in 0..n {
            let row = &self.coupling[k * nq..(k + 1) * nq];
            let mut acc = ZERO;
            let mut acc_c = ZERO;
            for iq in 0..nq {
                acc += row[iq] * y[iq];
                acc_c += row[iq] * y_c[iq];
            }
            p[k] = acc;
            p_c[k] = acc_c;
        }
        for k in 0..n {
            out.beta[k] = -I * (s.beta[k] + p[k]);
            out.beta_c[k] = I * (s.beta_c[k] + p_c[k]);
        }
        for k in 0..n {
            if self.options.counter_rotating {
                x[k] = s.beta[k] + s.beta_c[grid_rev(k)];
                x_c[k] = s.beta_c[k] + s.beta[grid_rev(k)];
            } else {
                x[k] = s.beta[k];
                x_c[k] = s.beta_c[k];
            }
        }
        for iq in 0..nq {
            let w_q = self.q[iq].abs();
            let mut drive = ZERO;
            let mut drive_c = ZERO;
            for k in 0..n {
                let cq = self.coupling[k * nq + iq];
                drive += cq * x[k];
                drive_c += cq * x_c[k];
                if self.options.two_photon {
                    drive += 2.0 * cq * p[k];
                    drive_c += 2.0 * cq * p_c[k];
                }
            }
            out.alpha[iq] = -I * (w_q * s.alpha[iq] + drive);
            out.alpha_c[iq] = I * (w_q * s.alpha_c[iq] + drive_c);
        }
    }

    /// One RK4 step of size h.
    pub fn step(&self, s: &mut OracleState, h: f64, scratch: &mut Scratch) {
        let Scratch { k1, k2, k3, k4, tmp, work } = scratch;
        self.derivative(s, k1, work);
        add_scaled(tmp, s, k1, 0.5 * h);
        self.derivative(tmp, k2, work);
        add_scaled(tmp, s, k2, 0.5 * h);
        self.derivative(tmp, k3, work);
        add_scaled(tmp, s, k3, h);
        self.derivative(tmp, k4, work);
        let w = h / 6.0;
        for (dst, (a, (b, (c, d)))) in state_iter_mut(s).zip(
            state_iter(k1).zip(state_iter(k2).zip(state_iter(k3).zip(state_iter(k4)))),
        ) {
            *dst += w * (a + 2.0 * b + 2.0 * c + d);
        }
        s.t += h;
    }

    /// c-number value of the quadratic Hamiltonian for the current toggles;
    /// conserved along the exact flow, to integrator order along the
    /// numerical one.
    pub fn energy_functional(&self, s: &OracleState) -> C64 {
        let n = self.n;
        let nq = self.q.len();
        let grid_rev = |k: usize| n - 1 - k;
        let mut h = ZERO;
        for k in 0..n {
            h += s.beta_c[k] * s.beta[k];
        }
        for iq in 0..nq {
            h += self.q[iq].abs() * s.alpha_c[iq] * s.alpha[iq];
        }
        if self.options.counter_rotating {
            let mut y = vec![ZERO; nq];
            for iq in 0..nq {
                y[iq] = s.alpha[iq] + s.alpha_c[self.q_mirror[iq]];
            }
            let mut p = vec![ZERO; n];
            for k in 0..n {
                let row = &self.coupling[k * nq..(k + 1) * nq];
                p[k] = (0..nq).map(|iq| row[iq] * y[iq]).sum();
            }
            for k in 0..n {
                let x_rev = s.beta[grid_rev(k)] + s.beta_c[k];
                h += x_rev * p[k];
                if self.options.two_photon {
                    h += p[k] * p[grid_rev(k)];
                }
            }
        } else {
            for k in 0..n {
                let row = &self.coupling[k * nq..(k + 1) * nq];
                for iq in 0..nq {
                    h += row[iq] * (s.beta[k] * s.alpha_c[iq] + s.beta_c[k] * s.alpha[iq]);
                }
            }
        }
        h
    }

    /// Complex detector envelope in E0 units from the positive-q photon
    /// amplitudes; the physical field is `2 Re eps`.
    ///
    /// The off-resonant 1/sqrt(q) infrared amplitudes give this half-sum an
    /// instantaneous tail ~ 1/z that cancels against its conjugate in the
    /// real field, so causality statements are made on `2 Re eps`, not on
    /// the envelope magnitude.
    pub fn detector_envelope(&self, s: &OracleState, z: f64) -> C64 {
        let nq = self.q.len();
        let mut eps = ZERO;
        for iq in 0..nq {
            let qv = self.q[iq];
            if qv <= 0.0 {
                continue;
            }
            let weight = (qv / (self.bath.box_length * self.params.g)).sqrt();
            let diff = s.alpha[iq] - s.alpha_c[self.q_mirror[iq]];
            eps += I * weight * diff * C64::from_polar(1.0, qv * z);
        }
        eps
    }

    /// Integrate from t = 0, sampling the detector envelope at the given
    /// times (strictly increasing, starting at >= 0).
    pub fn run_field(&self, start: OracleState, z: f64, t_grid: &[f64]) -> Result<FieldTrace> {
        let t_max = *t_grid.last().ok_or_else(|| SlabError::Config("empty time grid".into()))?;
        self.bath.validate(t_max, z)?;
        let mut s = start;
        let mut scratch = Scratch::like(&s);
        let mut envelope = Vec::with_capacity(t_grid.len());
        let mut t_prev = 0.0f64;
        for &t in t_grid {
            if t < t_prev {
                return Err(SlabError::Config("time grid must be increasing".into()));
            }
            let span = t - t_prev;
            if span > 0.0 {
                let steps = (span / self.bath.dt).ceil() as usize;
                let h = span / steps as f64;
                for _ in 0..steps {
                    self.step(&mut s, h, &mut scratch);
                }
            }
            envelope.push(self.detector_envelope(&s, z));
            t_prev = t;
        }
        Ok(FieldTrace { times: t_grid.to_vec(), envelope, retarded_time_origin: z })
    }

    /// Green columns for second-moment observables: `K[j]` is the detector
    /// envelope for a unit B_j(0) start, `K_c[j]` for a unit B_j^+(0) start.
    #[allow(clippy::type_complexity)]
    pub fn green_functions(
        &self,
        z: f64,
        t_grid: &[f64],
    ) -> Result<(Vec<Vec<C64>>, Vec<Vec<C64>>)> {
        let mut k_cols = Vec::with_capacity(self.n);
        let mut kc_cols = Vec::with_capacity(self.n);
        for j in 0..self.n {
            k_cols.push(self.run_field(self.basis_start(j, false), z, t_grid)?.envelope);
            kc_cols.push(self.run_field(self.basis_start(j, true), z, t_grid)?.envelope);
        }
        Ok((k_cols, kc_cols))
    }
}

/// Normally ordered flux (S0 units) assembled from Green columns and
/// initial moments; the time-domain counterpart of the analytic pair
/// decomposition.
pub fn flux_from_green(
    k_cols: &[Vec<C64>],
    kc_cols: &[Vec<C64>],
    moments: &ExcitonMoments,
) -> Vec<f64> {
    let n = moments.n();
    let steps = k_cols[0].len();
    (0..steps)
        .map(|ti| {
            let mut acc = ZERO;
            for j in 0..n {
                for j2 in 0..n {
                    acc += k_cols[j][ti].conj() * moments.normal.at(j, j2) * k_cols[j2][ti];
                    acc += k_cols[j][ti].conj() * moments.anomalous.at(j, j2).conj() * kc_cols[j2][ti];
                    acc += kc_cols[j][ti].conj() * moments.anomalous.at(j, j2) * k_cols[j2][ti];
                    acc += kc_cols[j][ti].conj() * moments.normal.at(j2, j) * kc_cols[j2][ti];
                }
            }
            acc.re
        })
        .collect()
}

/// RK4 stage storage plus derivative work buffers; reused across steps.
pub struct Scratch {
    k1: OracleState,
    k2: OracleState,
    k3: OracleState,
    k4: OracleState,
    tmp: OracleState,
    work: WorkBufs,
}

struct WorkBufs {
    y: Vec<C64>,
    y_c: Vec<C64>,
    p: Vec<C64>,
    p_c: Vec<C64>,
    x: Vec<C64>,
    x_c: Vec<C64>,
}

impl Scratch {
    /// Stage storage sized for the given state, for callers driving
    /// [`Oracle::step`] directly.
    pub fn like_state(s: &OracleState) -> Self {
        Scratch::like(s)
    }

    fn like(s: &OracleState) -> Self {
        let nq = s.alpha.len();
        let n = s.beta.len();
        Scratch {
            k1: s.clone(),
            k2: s.clone(),
            k3: s.clone(),
            k4: s.clone(),
            tmp: s.clone(),
            work: WorkBufs {
                y: vec![ZERO; nq],
                y_c: vec![ZERO; nq],
                p: vec![ZERO; n],
                p_c: vec![ZERO; n],
                x: vec![ZERO; n],
                x_c: vec![ZERO; n],
            },
        }
    }
}

fn state_iter(s: &OracleState) -> impl Iterator<Item = &C64> {
    s.beta.iter().chain(s.beta_c.iter()).chain(s.alpha.iter()).chain(s.alpha_c.iter())
}

fn state_iter_mut(s: &mut OracleState) -> impl Iterator<Item = &mut C64> {
    s.beta
        .iter_mut()
        .chain(s.beta_c.iter_mut())
        .chain(s.alpha.iter_mut())
        .chain(s.alpha_c.iter_mut())
}

fn add_scaled(dst: &mut OracleState, base: &OracleState, k: &OracleState, h: f64) {
    for ((d, b), kk) in state_iter_mut(dst).zip(state_iter(base)).zip(state_iter(k)) {
        *d = b + h * kk;
    }
    dst.t = base.t;
}

// ---------------------------------------------------------------------------
// Multi-exponential fitting of traces
// ---------------------------------------------------------------------------

/// One fitted decay mode.
#[derive(Clone, Debug)]
pub struct FittedMode {
    pub omega: f64,
    pub gamma: f64,
    pub amplitude: C64,
    /// Crude standard errors (sqrt of covariance diagonal) for (omega, gamma).
    pub std_err: (f64, f64),
}

/// Separable nonlinear least squares for `sum_m A_m e^{-i w_m tau}` on a
/// complex trace: amplitudes solved linearly at each step, the complex
/// frequencies refined by Levenberg-Marquardt.
pub fn extract_rates(trace: &FieldTrace, seeds: &[C64]) -> Result<Vec<FittedMode>> {
    let m = seeds.len();
    if m == 0 {
        return Err(SlabError::Fit("no seed frequencies".into()));
    }
    let taus: Vec<f64> = trace.times.iter().map(|t| t - trace.retarded_time_origin).collect();
    let pts: Vec<(f64, C64)> = taus
        .iter()
        .zip(&trace.envelope)
        .filter(|(tau, _)| **tau >= 0.0)
        .map(|(tau, e)| (*tau, *e))
        .collect();
    if pts.len() < 4 * m {
        return Err(SlabError::Fit(format!("{} samples cannot constrain {m} modes", pts.len())));
    }
    let span = pts.last().unwrap().0 - pts[0].0;
    let gamma_min = seeds.iter().map(|s| -s.im).fold(f64::INFINITY, f64::min);
    if span * gamma_min < 3.0 {
        return Err(SlabError::Resolution(format!(
            "trace spans {:.2} lifetimes of the slowest seeded mode; need >= 3 (enlarge the \
             bath box length and run longer)",
            span * gamma_min
        )));
    }
    let mut theta: Vec<f64> = seeds.iter().flat_map(|s| [s.re, -s.im]).collect();
    let mut lambda = 1e-3;
    let mut best = residual_norm(&theta, &pts)?;
    for _iter in 0..200 {
        // Numerical Jacobian of the stacked real residual w.r.t. theta.
        let r0 = residuals(&theta, &pts)?;
        let npar = theta.len();
        let nres = r0.len();
        let mut jac = vec![0.0; nres * npar];
        for p in 0..npar {
            let h = 1e-7 * theta[p].abs().max(1e-9);
            let mut th = theta.clone();
            th[p] += h;
            let rp = residuals(&th, &pts)?;
            for r in 0..nres {
                jac[r * npar + p] = (rp[r] - r0[r]) / h;
            }
        }
        // Solve (J^T J + lambda diag) step = -J^T r.
        let mut jtj = CMat::zeros(npar);
        let mut jtr = vec![ZERO; npar];
        for a in 0..npar {
            for b in 0..npar {
                let mut acc = 0.0;
                for r in 0..nres {
                    acc += jac[r * npar + a] * jac[r * npar + b];
                }
                jtj.set(a, b, C64::new(acc, 0.0));
            }
            let mut acc = 0.0;
            for r in 0..nres {
                acc += jac[r * npar + a] * r0[r];
            }
            jtr[a] = C64::new(-acc, 0.0);
        }
        let mut damped = jtj.clone();
        for a in 0..npar {
            let d = damped.at(a, a) * (1.0 + lambda);
            damped.set(a, a, d);
        }
        let step = match damped.solve(&jtr) {
            Some(s) => s,
            None => {
                return Err(SlabError::Resolution(
                    "fit normal equations singular (mode below trace resolution; enlarge the bath)"
                        .into(),
                ))
            }
        };
        let trial: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + s.re).collect();
        let trial_norm = residual_norm(&trial, &pts)?;
        if trial_norm < best {
            theta = trial;
            best = trial_norm;
            lambda = (lambda * 0.3).max(1e-12);
            if step.iter().map(|s| s.norm()).fold(0.0, f64::max) < 1e-12 {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e9 {
                break;
            }
        }
    }
    // Amplitudes and covariance at the optimum.
    let (amps, _) = linear_amplitudes(&theta, &pts)?;
    let r = residuals(&theta, &pts)?;
    let nres = r.len();
    let npar = theta.len();
    let dof = (nres - npar).max(1) as f64;
    let sigma2 = r.iter().map(|v| v * v).sum::<f64>() / dof;
    let mut jtj = CMat::zeros(npar);
    {
        let r0 = residuals(&theta, &pts)?;
        let mut jac = vec![0.0; nres * npar];
        for p in 0..npar {
            let h = 1e-7 * theta[p].abs().max(1e-9);
            let mut th = theta.clone();
            th[p] += h;
            let rp = residuals(&th, &pts)?;
            for rr in 0..nres {
                jac[rr * npar + p] = (rp[rr] - r0[rr]) / h;
            }
        }
        for a in 0..npar {
            for b in 0..npar {
                let mut acc = 0.0;
                for rr in 0..nres {
                    acc += jac[rr * npar + a] * jac[rr * npar + b];
                }
                jtj.set(a, b, C64::new(acc, 0.0));
            }
        }
    }
    let mut out = Vec::with_capacity(m);
    for mode in 0..m {
        let mut errs = [0.0f64; 2];
        for (slot, err) in errs.iter_mut().enumerate() {
            let p = 2 * mode + slot;
            let mut e = vec![ZERO; npar];
            e[p] = C64::new(1.0, 0.0);
            *err = match jtj.solve(&e) {
                Some(col) => (sigma2 * col[p].re.max(0.0)).sqrt(),
                None => f64::INFINITY,
            };
        }
        if !errs[1].is_finite() || errs[1] > theta[2 * mode + 1].abs() {
            return Err(SlabError::Resolution(format!(
                "rate {} is unresolved by the trace (std err {:.3e}); enlarge the bath box and \
                 extend the run",
                theta[2 * mode + 1],
                errs[1]
            )));
        }
        out.push(FittedMode {
            omega: theta[2 * mode],
            gamma: theta[2 * mode + 1],
            amplitude: amps[mode],
            std_err: (errs[0], errs[1]),
        });
    }
    Ok(out)
}

fn design_column(theta: &[f64], mode: usize, tau: f64) -> C64 {
    let w = C64::new(theta[2 * mode], -theta[2 * mode + 1]);
    (-I * w * tau).exp()
}

fn linear_amplitudes(theta: &[f64], pts: &[(f64, C64)]) -> Result<(Vec<C64>, Vec<C64>)> {
    let m = theta.len() / 2;
    // Normal equations Phi^H Phi a = Phi^H y.
    let mut gram = CMat::zeros(m);
    let mut rhs = vec![ZERO; m];
    for a in 0..m {
        for b in 0..m {
            let mut acc = ZERO;
            for &(tau, _) in pts {
                acc += design_column(theta, a, tau).conj() * design_column(theta, b, tau);
            }
            gram.set(a, b, acc);
        }
        let mut acc = ZERO;
        for &(tau, y) in pts {
            acc += design_column(theta, a, tau).conj() * y;
        }
        rhs[a] = acc;
    }
    let amps = gram
        .solve(&rhs)
        .ok_or_else(|| SlabError::Resolution("degenerate design matrix in rate fit".into()))?;
    let fitted: Vec<C64> = pts
        .iter()
        .map(|&(tau, _)| (0..m).map(|mm| amps[mm] * design_column(theta, mm, tau)).sum())
        .collect();
    Ok((amps, fitted))
}

fn residuals(theta: &[f64], pts: &[(f64, C64)]) -> Result<Vec<f64>> {
    let (_, fitted) = linear_amplitudes(theta, pts)?;
    let mut r = Vec::with_capacity(2 * pts.len());
    for (f, &(_, y)) in fitted.iter().zip(pts) {
        r.push((y - f).re);
        r.push((y - f).im);
    }
    Ok(r)
}

fn residual_norm(theta: &[f64], pts: &[(f64, C64)]) -> Result<f64> {
    Ok(residuals(theta, pts)?.iter().map(|v| v * v).sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn params(n: usize, delta0: f64, g: f64) -> SlabParams {
        SlabParams::dimensionless(n, delta0, g).unwrap()
    }

    // Small bath for structural tests.
    fn small_bath() -> BathConfig {
        BathConfig { box_length: 60.0, q_max: 20.0, dt: 0.05 / 20.0 }
    }

    #[test]
    fn bath_config_invariants_enforced() {
        let b = BathConfig { box_length: 10.0, q_max: 20.0, dt: 1e-3 };
        assert!(matches!(b.validate(20.0, 1.0), Err(SlabError::Config(_))));
        let b = BathConfig { box_length: 1000.0, q_max: 5.0, dt: 1e-3 };
        assert!(matches!(b.validate(20.0, 1.0), Err(SlabError::Config(_))));
        let b = BathConfig { box_length: 1000.0, q_max: 40.0, dt: 1.0 };
        assert!(matches!(b.validate(20.0, 1.0), Err(SlabError::Config(_))));
        BathConfig::for_window(20.0, 1.0).validate(20.0, 1.0).unwrap();
    }

    #[test]
    fn zero_state_stays_zero() {
        let p = params(2, 0.05, 1e-2);
        let o = Oracle::new(&p, small_bath(), OracleOptions::default()).unwrap();
        let mut s = o.coherent_start(&[ZERO, ZERO]);
        let mut scratch = Scratch::like(&s);
        for _ in 0..100 {
            o.step(&mut s, o.bath.dt, &mut scratch);
        }
        assert!(state_iter(&s).all(|v| v.norm() == 0.0));
    }

    #[test]
    fn decoupled_limit_free_evolution() {
        // g -> 0: beta rotates at -i Omega t, photons untouched.
        let p = params(1, 0.05, 1e-18);
        let o = Oracle::new(&p, small_bath(), OracleOptions::default()).unwrap();
        let mut s = o.coherent_start(&[c(1.0, 0.0)]);
        let mut scratch = Scratch::like(&s);
        let t_end = 3.0;
        let steps = (t_end / o.bath.dt).round() as usize;
        for _ in 0..steps {
            o.step(&mut s, t_end / steps as f64, &mut scratch);
        }
        let expect = (-I * t_end).exp();
        assert!((s.beta[0] - expect).norm() < 1e-8);
        assert!(s.alpha.iter().all(|a| a.norm() < 1e-7));
    }

    #[test]
    fn energy_functional_conserved() {
        let p = params(2, 0.05, 1e-2);
        let o = Oracle::new(&p, small_bath(), OracleOptions::default()).unwrap();
        let s2 = 1.0 / 2.0_f64.sqrt();
        let mut s = o.coherent_start(&[c(s2, 0.0), c(s2, 0.0)]);
        let e0 = o.energy_functional(&s);
        let mut scratch = Scratch::like(&s);
        let steps = 4000;
        for _ in 0..steps {
            o.step(&mut s, o.bath.dt, &mut scratch);
        }
        let e1 = o.energy_functional(&s);
        assert!(
            (e1 - e0).norm() <= 1e-6 * e0.norm(),
            "energy drifted from {e0} to {e1}"
        );
    }

    #[test]
    fn monolayer_decay_rate_near_half_g() {
        // Moderately coupled monolayer: |beta| decays at eta / 2 once the
        // bath is converged; 2% tolerance on a 3-lifetime window.
        let p = params(1, 0.05, 5e-2);
        let t_max = 3.0 / (p.g / 2.0);
        let bath = BathConfig { box_length: 2.05 * t_max, q_max: 20.0, dt: 0.05 / 20.0 };
        let o = Oracle::new(&p, bath, OracleOptions::default()).unwrap();
        let mut s = o.coherent_start(&[c(1.0, 0.0)]);
        let mut scratch = Scratch::like(&s);
        let n_chunks = 60;
        let chunk = t_max / n_chunks as f64;
        let mut samples = Vec::new();
        for i in 0..n_chunks {
            let steps = (chunk / bath.dt).ceil() as usize;
            let h = chunk / steps as f64;
            for _ in 0..steps {
                o.step(&mut s, h, &mut scratch);
            }
            samples.push(((i + 1) as f64 * chunk, s.beta[0].norm()));
        }
        // Fit log|beta| after the initial bath transient.
        let pts: Vec<(f64, f64)> = samples
            .iter()
            .filter(|(t, _)| *t > 0.1 * t_max)
            .map(|(t, v)| (*t, v.ln()))
            .collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let gamma = -slope;
        assert!(
            (gamma / (p.g / 2.0) - 1.0).abs() < 0.02,
            "fitted {gamma} vs eta/2 = {}",
            p.g / 2.0
        );
    }

    #[test]
    fn extract_rates_recovers_synthetic_single_mode() {
        let gamma = 1e-4;
        let omega = 0.9995;
        let times: Vec<f64> = (0..240).map(|i| 1.0 + i as f64 * (3.2 / gamma / 240.0)).collect();
        let envelope: Vec<C64> = times
            .iter()
            .map(|t| {
                let tau = t - 1.0;
                c(0.8, 0.1) * (-I * C64::new(omega, -gamma) * tau).exp()
            })
            .collect();
        let trace = FieldTrace { times, envelope, retarded_time_origin: 1.0 };
        let fit = extract_rates(&trace, &[C64::new(1.0, -1.2e-4)]).unwrap();
        assert!((fit[0].gamma / gamma - 1.0).abs() < 1e-3, "gamma {}", fit[0].gamma);
        assert!((fit[0].omega - omega).abs() < 1e-6);
        assert!((fit[0].amplitude - c(0.8, 0.1)).norm() < 1e-6);
    }

    #[test]
    fn extract_rates_rejects_short_traces() {
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let envelope = vec![c(1.0, 0.0); 50];
        let trace = FieldTrace { times, envelope, retarded_time_origin: 0.0 };
        assert!(matches!(
            extract_rates(&trace, &[C64::new(1.0, -1e-4)]),
            Err(SlabError::Resolution(_))
        ));
    }
}
