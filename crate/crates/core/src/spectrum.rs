//! Complex emission eigenfrequencies of the slab.
//!
//! The eigenfrequencies are the roots of `det S(w) = 0` with
//! `S_{kk'}(w) = (w^2 - Omega^2) delta_{kk'} - (2 w^2 / Omega) F_{kk'}(w)`.
//! The secular function is transcendental (entire apart from the 1/w pole
//! of F), so Newton iteration from approximate seeds can silently miss or
//! merge roots. Roots are therefore *certified*: the zero count inside a
//! rectangle is established by the argument principle (winding number of
//! det S along the boundary), rectangles are subdivided until each holds a
//! single zero, and only then is Newton polishing applied.

use crate::coupling::{coupling_matrix, d_matrix_exact};
use crate::linalg::{dot_h, dot_t, vec_norm, CMat};
use crate::model::{build_mode_grid, ComplexFrequency, ModeGrid, SlabParams};
use crate::{Result, SlabError};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Secular matrix S(w) at a complex frequency.
#[derive(Clone, Debug)]
pub struct SecularMatrix {
    pub omega: C64,
    pub s: CMat,
}

/// Build S(w) = (w^2 - 1) I - 2 w^2 F(w) in internal units.
pub fn secular_matrix(omega: C64, params: &SlabParams) -> Result<SecularMatrix> {
    let f = coupling_matrix(omega, params)?;
    let n = params.n_layers;
    let lambda = omega * omega - 1.0;
    let coef = -2.0 * omega * omega;
    let s = CMat::from_fn(n, |i, j| {
        let mut v = coef * f.f.at(i, j);
        if i == j {
            v += lambda;
        }
        v
    });
    Ok(SecularMatrix { omega, s })
}

/// det S(w).
pub fn secular_det(omega: C64, params: &SlabParams) -> Result<C64> {
    Ok(secular_matrix(omega, params)?.s.det())
}

/// Scale-free residual `|det S(w)| / (hadamard(S(w)) + |w det'(w)|)`.
/// Near a simple root the second term dominates and the residual measures
/// the root-position error relative to |w|.
pub fn det_residual(omega: C64, params: &SlabParams) -> Result<f64> {
    let s = secular_matrix(omega, params)?.s;
    let dprime = secular_det_derivative(omega, params)?;
    let scale = s.hadamard_bound() + (omega * dprime).norm();
    Ok(s.det().norm() / scale.max(1e-300))
}

/// Rectangle in the complex frequency plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl SearchBox {
    pub fn center(&self) -> C64 {
        C64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    pub fn diameter(&self) -> f64 {
        let dr = self.re_max - self.re_min;
        let di = self.im_max - self.im_min;
        (dr * dr + di * di).sqrt()
    }

    fn inflate(&self, factor: f64) -> SearchBox {
        let cr = 0.5 * (self.re_min + self.re_max);
        let ci = 0.5 * (self.im_min + self.im_max);
        let hr = 0.5 * (self.re_max - self.re_min) * factor;
        let hi = 0.5 * (self.im_max - self.im_min) * factor;
        SearchBox { re_min: cr - hr, re_max: cr + hr, im_min: ci - hi, im_max: ci + hi }
    }

    fn split(&self, frac: f64) -> (SearchBox, SearchBox) {
        if self.re_max - self.re_min >= self.im_max - self.im_min {
            let mid = self.re_min + frac * (self.re_max - self.re_min);
            (SearchBox { re_max: mid, ..*self }, SearchBox { re_min: mid, ..*self })
        } else {
            let mid = self.im_min + frac * (self.im_max - self.im_min);
            (SearchBox { im_max: mid, ..*self }, SearchBox { im_min: mid, ..*self })
        }
    }
}

/// Default boxes around +Omega and -Omega containing all perturbative
/// roots with wide margin.
pub fn default_search_boxes(params: &SlabParams) -> (SearchBox, SearchBox) {
    let g = params.g;
    let d0 = params.delta0;
    let half_w = 20.0 * g + 5.0 * g * d0;
    let depth = 20.0 * g * params.n_layers as f64;
    let pos = SearchBox {
        re_min: (1.0 - half_w).max(0.1),
        re_max: 1.0 + half_w,
        im_min: -depth,
        im_max: 0.0,
    };
    let neg = SearchBox {
        re_min: -pos.re_max,
        re_max: -pos.re_min,
        im_min: pos.im_min,
        im_max: pos.im_max,
    };
    (pos, neg)
}

/// Certification record attached to each mode: the final enclosing box and
/// its winding count.
#[derive(Clone, Debug)]
pub struct Certification {
    pub enclosure: SearchBox,
    pub winding: i32,
}

/// One emission eigenmode: certified complex frequency, k-basis weights
/// (null space of S at the root), and bookkeeping.
#[derive(Clone, Debug)]
pub struct Mode {
    pub freq: ComplexFrequency,
    /// Null-space weight vectors, one per multiplicity; unit norm.
    pub weights: Vec<Vec<C64>>,
    pub multiplicity: usize,
    pub certification: Option<Certification>,
}

impl Mode {
    pub fn omega(&self) -> C64 {
        self.freq.value()
    }

    pub fn weight(&self) -> &[C64] {
        &self.weights[0]
    }
}

/// Full set of certified (or seed) eigenmodes.
#[derive(Clone, Debug)]
pub struct EigenModeSet {
    pub modes: Vec<Mode>,
    pub n_expected: usize,
}

impl EigenModeSet {
    /// Total root count, with multiplicity.
    pub fn count(&self) -> usize {
        self.modes.iter().map(|m| m.multiplicity).sum()
    }

    /// Modes with Re w > 0, sorted by decay rate descending.
    pub fn positive_branch(&self) -> Vec<&Mode> {
        let mut v: Vec<&Mode> = self.modes.iter().filter(|m| m.freq.re > 0.0).collect();
        v.sort_by(|a, b| b.freq.gamma().partial_cmp(&a.freq.gamma()).unwrap());
        v
    }

    /// Mode with the largest decay rate on the positive branch.
    pub fn superradiant(&self) -> &Mode {
        self.positive_branch()[0]
    }

    /// Verify that every root has a partner at -conj(w).
    pub fn pairing_ok(&self) -> bool {
        self.modes.iter().all(|m| {
            let target = -m.omega().conj();
            self.modes.iter().any(|p| (p.omega() - target).norm() < 1e-8 * (1.0 + target.norm()))
        })
    }

    /// Verify that every root decays.
    pub fn all_decaying(&self) -> bool {
        self.modes.iter().all(|m| m.freq.im < 0.0)
    }
}

fn mode_label(rank: usize, n_pos: usize, mirrored: bool) -> String {
    let base = if rank == 0 {
        "super".to_string()
    } else if n_pos == 2 {
        "sub".to_string()
    } else {
        format!("sub{rank}")
    };
    if mirrored {
        format!("{base}'")
    } else {
        base
    }
}

/// Closed-form approximate roots (perturbative in g and delta0) for
/// N <= 3, used as seeds and regression targets. Uncertified.
///
/// Positive branch (units of Omega), with mirrored partners at -conj(w):
///
/// ```text
/// N = 1: Omega = 1 - g^2/8,               Gamma = g/2
/// N = 2: Omega_1 = 1 - g^2/2 + g d0/2,    Gamma_1 = g        (superradiant)
///        Omega_2 = 1 - g d0/2,            Gamma_2 = g d0^2/4 (subradiant)
/// N = 3: Omega_0 = 1 - 9g^2/8 + 4g d0/3,  Gamma_0 = 3g/2     (superradiant)
///        Omega_1 = 1 - g d0/3,            Gamma_1 = g d0^2/27
///        Omega_-1 = 1 - g d0,             Gamma_-1 = g d0^2
/// ```
pub fn perturbative_roots(params: &SlabParams) -> Result<EigenModeSet> {
    let g = params.g;
    let d0 = params.delta0;
    let s2 = 1.0 / 2.0_f64.sqrt();
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    // (frequency, label, k-basis weights ascending in m)
    let branch: Vec<(C64, &str, Vec<C64>)> = match params.n_layers {
        1 => vec![(C64::new(1.0 - g * g / 8.0, -g / 2.0), "super", vec![one])],
        2 => vec![
            (
                C64::new(1.0 - g * g / 2.0 + g * d0 / 2.0, -g),
                "super",
                vec![s2 * one, s2 * one],
            ),
            (
                C64::new(1.0 - g * d0 / 2.0, -g * d0 * d0 / 4.0),
                "sub",
                vec![s2 * one, -s2 * one],
            ),
        ],
        3 => vec![
            (
                C64::new(1.0 - 9.0 * g * g / 8.0 + 4.0 * g * d0 / 3.0, -1.5 * g),
                "super",
                vec![zero, one, zero],
            ),
            // Antisymmetric combination of m = +/-1; ranks first among the
            // subradiant pair by decay rate, matching find_modes labels.
            (
                C64::new(1.0 - g * d0, -g * d0 * d0),
                "sub1",
                vec![-s2 * one, zero, s2 * one],
            ),
            // Symmetric combination of m = +/-1; slowest mode.
            (
                C64::new(1.0 - g * d0 / 3.0, -g * d0 * d0 / 27.0),
                "sub2",
                vec![s2 * one, zero, s2 * one],
            ),
        ],
        n => {
            return Err(SlabError::Unsupported(format!(
                "no closed-form roots for {n} layers; use find_modes grid seeding"
            )))
        }
    };
    let mut modes = Vec::new();
    for (w, label, weight) in &branch {
        modes.push(Mode {
            freq: ComplexFrequency::new(*w, *label),
            weights: vec![weight.clone()],
            multiplicity: 1,
            certification: None,
        });
        modes.push(Mode {
            freq: ComplexFrequency::new(-w.conj(), format!("{label}'")),
            weights: vec![weight.clone()],
            multiplicity: 1,
            certification: None,
        });
    }
    Ok(EigenModeSet { modes, n_expected: 2 * params.n_layers })
}

// ---------------------------------------------------------------------------
// Argument-principle machinery
// ---------------------------------------------------------------------------

struct BoundaryWalk {
    winding: i32,
    min_scaled_det: f64,
}

/// Winding number of det S around a box by adaptive phase continuation.
///
/// Each edge starts from a uniform partition and is bisected until two
/// criteria hold on every sub-interval: the phase step is below 0.8 rad
/// and the chord |f1 - f0| is small against min(|f0|, |f1|). The second
/// criterion prevents accepting an interval whose endpoints alias a full
/// extra turn, which a phase test alone cannot see.
fn winding_number(params: &SlabParams, b: &SearchBox) -> Result<BoundaryWalk> {
    const INITIAL_SPLITS: usize = 24;
    const MAX_DEPTH: usize = 52;
    let corners = [
        C64::new(b.re_min, b.im_min),
        C64::new(b.re_max, b.im_min),
        C64::new(b.re_max, b.im_max),
        C64::new(b.re_min, b.im_max),
    ];
    let mut min_scaled = f64::INFINITY;
    let mut eval = |z: C64| -> Result<C64> {
        let s = secular_matrix(z, params)?.s;
        let det = s.det();
        min_scaled = min_scaled.min(det.norm() / s.hadamard_bound().max(1e-300));
        if det.norm() == 0.0 {
            return Err(SlabError::Certification("determinant zero on box boundary".into()));
        }
        Ok(det)
    };
    let mut total_arg = 0.0f64;
    for seg in 0..4 {
        let za = corners[seg];
        let zb = corners[(seg + 1) % 4];
        // (t0, f0, t1, f1, depth) intervals awaiting acceptance.
        let mut stack: Vec<(f64, C64, f64, C64, usize)> = Vec::new();
        let mut prev = eval(za)?;
        for i in 0..INITIAL_SPLITS {
            let t0 = i as f64 / INITIAL_SPLITS as f64;
            let t1 = (i + 1) as f64 / INITIAL_SPLITS as f64;
            let f1 = eval(za + (zb - za) * t1)?;
            stack.push((t0, prev, t1, f1, 0));
            prev = f1;
        }
        while let Some((t0, f0, t1, f1, depth)) = stack.pop() {
            // Every acceptance is validated against the interval midpoint:
            // endpoint-only criteria can be fooled by a pair of nearby
            // root passes that return the function to almost the same
            // value (a hidden 2 pi). The midpoint sits inside such a
            // feature and exposes it.
            let tm = 0.5 * (t0 + t1);
            let fm = eval(za + (zb - za) * tm)?;
            let chord = |a: C64, b2: C64| (b2 - a).norm() <= 0.9 * a.norm().min(b2.norm());
            let dl = (fm / f0).arg();
            let dr = (f1 / fm).arg();
            if dl.abs() <= 0.8 && dr.abs() <= 0.8 && chord(f0, fm) && chord(fm, f1) {
                total_arg += dl + dr;
                continue;
            }
            if depth >= MAX_DEPTH {
                return Err(SlabError::Certification(
                    "winding count unstable under boundary refinement (zero on or near the \
                     boundary)"
                        .into(),
                ));
            }
            stack.push((tm, fm, t1, f1, depth + 1));
            stack.push((t0, f0, tm, fm, depth + 1));
        }
    }
    let winding = (total_arg / (2.0 * PI)).round();
    if (total_arg - winding * 2.0 * PI).abs() > 0.5 {
        return Err(SlabError::Certification(format!(
            "accumulated boundary phase {total_arg:.3} is not close to a multiple of 2 pi"
        )));
    }
    Ok(BoundaryWalk { winding: winding as i32, min_scaled_det: min_scaled })
}


/// Winding number with one retry on an inflated box when the boundary
/// passes suspiciously close to a zero.
fn winding_with_retry(params: &SlabParams, b: &SearchBox) -> Result<(SearchBox, i32)> {
    let mut boxes = vec![*b, b.inflate(1.03), b.inflate(0.97)];
    let mut last_err = None;
    for candidate in boxes.drain(..) {
        match winding_number(params, &candidate) {
            Ok(walk) => {
                if walk.min_scaled_det < 1e-13 {
                    last_err = Some(SlabError::Certification(
                        "determinant vanishes on box boundary".into(),
                    ));
                    continue;
                }
                return Ok((candidate, walk.winding));
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap())
}

/// Newton refinement of a det S root; derivative by central differencing
/// of the holomorphic determinant with step h = 1e-6 |w|, capped by the
/// enclosure size so that clustered roots (separations below 1e-6) still
/// see their local derivative.
fn newton_polish(params: &SlabParams, seed: C64, fence: &SearchBox) -> Result<C64> {
    let mut w = seed;
    let h_cap = (0.05 * fence.diameter()).max(1e-13);
    let fence = fence.inflate(1.5);
    let mut last_step = f64::INFINITY;
    for _ in 0..100 {
        let h = (1e-6 * w.norm()).min(h_cap);
        let d0 = secular_det(w, params)?;
        let dp = secular_det(w + C64::new(h, 0.0), params)?;
        let dm = secular_det(w - C64::new(h, 0.0), params)?;
        let deriv = (dp - dm) / (2.0 * h);
        if deriv.norm() == 0.0 {
            return Err(SlabError::Certification("vanishing determinant derivative".into()));
        }
        let step = d0 / deriv;
        w -= step;
        if !fence.contains(w) {
            return Err(SlabError::Certification(format!(
                "Newton iterate escaped its certification box at {w}"
            )));
        }
        let s = step.norm();
        if s <= 2e-16 * w.norm() || (s >= last_step && s <= 1e-13 * w.norm()) {
            return Ok(w);
        }
        last_step = s;
    }
    Ok(w)
}

fn extract_weights(params: &SlabParams, w: C64, count: usize) -> Result<Vec<Vec<C64>>> {
    let s = secular_matrix(w, params)?.s;
    let svd = s.svd_right();
    Ok(svd.into_iter().take(count).map(|(_, v)| v).collect())
}

/// Locate and certify all roots inside a box. Returns (root, enclosure,
/// multiplicity) triples.
fn certify_box(
    params: &SlabParams,
    b: &SearchBox,
    out: &mut Vec<(C64, SearchBox, usize)>,
    depth: usize,
) -> Result<()> {
    if depth > 60 {
        return Err(SlabError::Certification("subdivision depth exhausted".into()));
    }
    let (enclosure, count) = winding_with_retry(params, b)?;
    if count < 0 {
        return Err(SlabError::Certification(format!(
            "negative winding count {count}: boundary walk inconsistent"
        )));
    }
    if count == 0 {
        return Ok(());
    }
    // Exactly degenerate roots only occur on measure-zero parameter sets;
    // below this resolution report a multiple root instead of splitting.
    let degeneracy_floor = 1e-8;
    if count == 1 {
        // Accept Newton only if it stays inside the certified enclosure;
        // from a distant seed it can escape to a stronger neighboring
        // root, in which case the box is subdivided to tighten the seed.
        if let Ok(root) = newton_polish(params, enclosure.center(), &enclosure) {
            if enclosure.inflate(1.0 + 1e-9).contains(root) {
                out.push((root, enclosure, 1));
                return Ok(());
            }
        }
    }
    if enclosure.diameter() < degeneracy_floor {
        let root = newton_polish(params, enclosure.center(), &enclosure)?;
        out.push((root, enclosure, count as usize));
        return Ok(());
    }
    // Try split fractions that avoid landing the cut on a root.
    let mut last_err = None;
    for frac in [0.5, 0.57, 0.43] {
        let (left, right) = enclosure.split(frac);
        let attempt = (|| -> Result<Vec<(C64, SearchBox, usize)>> {
            let mut tmp = Vec::new();
            certify_box(params, &left, &mut tmp, depth + 1)?;
            certify_box(params, &right, &mut tmp, depth + 1)?;
            let found: usize = tmp.iter().map(|t| t.2).sum();
            if found != count as usize {
                return Err(SlabError::Certification(format!(
                    "children found {found} roots, parent winding {count}"
                )));
            }
            Ok(tmp)
        })();
        match attempt {
            Ok(mut tmp) => {
                out.append(&mut tmp);
                return Ok(());
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap())
}

/// Find and certify all eigenmodes in the given boxes (default: boxes
/// around +/-Omega).
pub fn find_modes(params: &SlabParams, boxes: Option<Vec<SearchBox>>) -> Result<EigenModeSet> {
    let boxes = boxes.unwrap_or_else(|| {
        let (pos, neg) = default_search_boxes(params);
        vec![pos, neg]
    });
    let mut found: Vec<(C64, SearchBox, usize)> = Vec::new();
    for b in &boxes {
        certify_box(params, b, &mut found, 0)?;
    }
    // Polished residual check.
    for (root, _, _) in &found {
        let r = det_residual(*root, params)?;
        if r > 1e-10 {
            return Err(SlabError::Certification(format!(
                "polished root {root} has scaled determinant residual {r:.3e}"
            )));
        }
    }
    // Sort into positive branch (Re > 0, Gamma descending) then mirrors.
    let mut pos: Vec<&(C64, SearchBox, usize)> = found.iter().filter(|t| t.0.re > 0.0).collect();
    let mut neg: Vec<&(C64, SearchBox, usize)> = found.iter().filter(|t| t.0.re <= 0.0).collect();
    pos.sort_by(|a, b| a.0.im.partial_cmp(&b.0.im).unwrap());
    neg.sort_by(|a, b| a.0.im.partial_cmp(&b.0.im).unwrap());
    let n_pos = pos.len();
    let mut modes = Vec::new();
    for (branch, mirrored) in [(&pos, false), (&neg, true)] {
        for (rank, (root, enclosure, mult)) in branch.iter().enumerate() {
            let label = mode_label(rank, n_pos, mirrored);
            let weights = extract_weights(params, *root, *mult)?;
            modes.push(Mode {
                freq: ComplexFrequency::new(*root, label),
                weights,
                multiplicity: *mult,
                certification: Some(Certification {
                    enclosure: *enclosure,
                    winding: *mult as i32,
                }),
            });
        }
    }
    let set = EigenModeSet { modes, n_expected: 2 * params.n_layers };
    if !set.all_decaying() {
        return Err(SlabError::Certification("found a non-decaying root (Im w >= 0)".into()));
    }
    if !set.pairing_ok() {
        return Err(SlabError::Certification("root set is not closed under w -> -conj(w)".into()));
    }
    Ok(set)
}

// ---------------------------------------------------------------------------
// Triple-layer diagonalizing transform
// ---------------------------------------------------------------------------

/// The 3x3 transform T(w) that diagonalizes the triple-layer D(w) to
/// second order in delta, together with its normalization scalar M and
/// the distinct D entries (A, B, C, E).
#[derive(Clone, Debug)]
pub struct TransformT {
    pub t: CMat,
    pub m_scalar: C64,
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub e: C64,
}

/// Build T(w) from the exact D(w):
/// rows `[M/sqrt2, -sqrt2 C M/(B-A-E), M/sqrt2]`,
/// `[C M/(B-A-E), M, C M/(B-A-E)]`, `[1/sqrt2, 0, -1/sqrt2]`,
/// with `M = 1/sqrt(1 + 2 C^2/(B-A-E)^2)`.
pub fn transform_t(omega: C64, params: &SlabParams) -> Result<TransformT> {
    let d = d_matrix_exact(omega, params)?;
    // D = [[A, C, E], [C, B, C], [E, C, A]] on the symmetric grid.
    let (a, b, c, e) = (d.at(0, 0), d.at(1, 1), d.at(0, 1), d.at(0, 2));
    let denom = b - a - e;
    let scale = a.norm() + b.norm() + e.norm();
    if denom.norm() < 1e-10 * scale.max(1e-300) {
        return Err(SlabError::DegenerateTransform(format!(
            "|B - A - E| = {:.3e} too small at omega = {omega}",
            denom.norm()
        )));
    }
    let ratio = c / denom;
    let m = 1.0 / (1.0 + 2.0 * ratio * ratio).sqrt();
    let s2 = C64::new(1.0 / 2.0_f64.sqrt(), 0.0);
    let zero = C64::new(0.0, 0.0);
    let t = CMat::from_rows(&[
        vec![m * s2, -2.0_f64.sqrt() * ratio * m, m * s2],
        vec![ratio * m, m, ratio * m],
        vec![s2, zero, -s2],
    ]);
    Ok(TransformT { t, m_scalar: m, a, b, c, e })
}

impl TransformT {
    /// Max off-diagonal magnitude of T D T^T; O(delta^3) when fed the
    /// matching D(w).
    pub fn diagonalization_residual(&self, d: &CMat) -> f64 {
        let tdt = self.t.mul(d).mul(&self.t.transpose());
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    worst = worst.max(tdt.at(i, j).norm());
                }
            }
        }
        worst
    }
}

// ---------------------------------------------------------------------------
// Layer-basis weights
// ---------------------------------------------------------------------------

/// Layer-basis combination of a k-basis weight vector:
/// `v_l = (1/sqrt N) sum_k w_k e^{-i k l a}`.
pub fn weight_to_layer_basis(weight: &[C64], grid: &ModeGrid) -> Vec<C64> {
    let u = grid.layer_to_k_matrix();
    let n = grid.n();
    let mut v = vec![C64::new(0.0, 0.0); n];
    for (li, item) in v.iter_mut().enumerate() {
        for ki in 0..n {
            *item += u.at(ki, li) * weight[ki];
        }
    }
    v
}

/// Overlap |<v, pattern>| between unit-normalized vectors, insensitive to
/// global phase.
pub fn overlap(v: &[C64], pattern: &[f64]) -> f64 {
    let pat: Vec<C64> = pattern.iter().map(|&x| C64::new(x, 0.0)).collect();
    let np = vec_norm(&pat);
    let nv = vec_norm(v);
    dot_h(&pat, v).norm() / (np * nv)
}

/// Layer-basis weight vectors for every mode of a set, keyed by label.
pub fn eigenmode_weights_to_layer_basis(
    set: &EigenModeSet,
    params: &SlabParams,
) -> Result<Vec<(String, Vec<C64>)>> {
    let grid = build_mode_grid(params.n_layers)?;
    Ok(set
        .modes
        .iter()
        .map(|m| (m.freq.label.clone(), weight_to_layer_basis(m.weight(), &grid)))
        .collect())
}

/// d det / d omega by central differencing (shared with Newton).
pub fn secular_det_derivative(omega: C64, params: &SlabParams) -> Result<C64> {
    let h = 1e-6 * omega.norm().max(1e-3);
    let dp = secular_det(omega + C64::new(h, 0.0), params)?;
    let dm = secular_det(omega - C64::new(h, 0.0), params)?;
    Ok((dp - dm) / (2.0 * h))
}

/// w^T S'(w) w for a null vector w of S(w); the residue denominator of
/// S(w)^{-1} at a simple root. S' by central differencing entrywise.
pub fn residue_denominator(omega: C64, weight: &[C64], params: &SlabParams) -> Result<C64> {
    let h = 1e-6 * omega.norm().max(1e-3);
    let sp = secular_matrix(omega + C64::new(h, 0.0), params)?.s;
    let sm = secular_matrix(omega - C64::new(h, 0.0), params)?.s;
    let sprime = sp.sub(&sm).scale(C64::new(1.0 / (2.0 * h), 0.0));
    Ok(dot_t(weight, &sprime.matvec(weight)))
}

// Re-exported so downstream modules can build the counter-rotating ratio
// (w_m - Omega)/(w_m + Omega) without repeating the convention.
pub fn counter_rotating_ratio(omega_m: C64) -> C64 {
    (omega_m - 1.0) / (omega_m + 1.0)
}
