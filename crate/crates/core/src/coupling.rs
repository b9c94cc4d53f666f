//! Photon-mediated exciton-exciton coupling for an N-layer slab.
//!
//! The coupling matrix in the k basis is the contour-integrated photon
//! exchange kernel
//!
//! ```text
//! F_{kk'}(w) = -i (eta Omega / (2 N w)) sum_{l,l'} e^{i(k l - k' l') a} e^{i d |l-l'|},
//! d = w a / c,
//! ```
//!
//! with the outgoing-wave pole convention (retarded solution). The diagonal
//! and off-diagonal entries are generically of the same order, which is why
//! the full matrix (not its diagonal) feeds the secular problem.

use crate::linalg::CMat;
use crate::model::{build_mode_grid, ModeGrid, SlabParams};
use crate::{Result, SlabError};
use num_complex::Complex64 as C64;

const I: C64 = C64::new(0.0, 1.0);

/// Basis tag for a coupling matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    KSpace,
    Layer,
}

/// N x N coupling matrix at a fixed complex frequency (units of Omega).
#[derive(Clone, Debug)]
pub struct CouplingMatrix {
    pub omega: C64,
    pub f: CMat,
    pub basis: BasisKind,
}

/// Wave-vector matching factor `(1/N) sum_l e^{i (k - q) l a}`.
///
/// Evaluated as the explicit layer sum, which is entire in both arguments
/// and handles the removable singularity of the equivalent sine-ratio form
/// `sin((k-q)Na/2) / (N sin((k-q)a/2))` without special cases. Equals 1 at
/// k = q.
pub fn matching_factor(k: C64, q: C64, n_layers: usize, a: f64) -> C64 {
    let half = (n_layers as f64 - 1.0) / 2.0;
    let theta = (k - q) * a;
    let mut sum = C64::new(0.0, 0.0);
    for i in 0..n_layers {
        let l = i as f64 - half;
        sum += (I * theta * l).exp();
    }
    sum / n_layers as f64
}

fn check_omega(omega: C64) -> Result<()> {
    if omega.norm() == 0.0 {
        return Err(SlabError::SingularFrequency);
    }
    Ok(())
}

/// Layer-basis radiation kernel, scaled so its unitary transform to the
/// k basis is [`coupling_matrix`]:
/// `F^L_{ll'} = -i (eta Omega / (2 w)) e^{i d |l-l'|}`.
///
/// Before scaling the kernel has unit diagonal and off-diagonal phases
/// `e^{i d |l-l'|}` set by the retarded propagation between layers.
pub fn layer_kernel(omega: C64, params: &SlabParams) -> Result<CouplingMatrix> {
    check_omega(omega)?;
    let n_layers = params.n_layers;
    let grid = build_mode_grid(n_layers)?;
    let delta = omega * params.delta0;
    let scale = -I * params.g / (2.0 * omega);
    let f = CMat::from_fn(n_layers, |i, j| {
        let sep = (grid.l_values()[i] - grid.l_values()[j]).abs();
        scale * (I * delta * sep).exp()
    });
    Ok(CouplingMatrix { omega, f, basis: BasisKind::Layer })
}

/// Transform a layer-basis kernel to the k basis with the grid's unitary
/// `U_{kl} = e^{-i k l a} / sqrt(N)`: `F^k = conj(U) F^L U^T`.
pub fn layer_to_k(kernel: &CouplingMatrix, grid: &ModeGrid) -> CouplingMatrix {
    assert_eq!(kernel.basis, BasisKind::Layer);
    let u = grid.layer_to_k_matrix();
    let f = u.conj().mul(&kernel.f).mul(&u.transpose());
    CouplingMatrix { omega: kernel.omega, f, basis: BasisKind::KSpace }
}

/// k-basis coupling matrix F_{kk'}(w) for the slab, from the explicit
/// double layer sum.
pub fn coupling_matrix(omega: C64, params: &SlabParams) -> Result<CouplingMatrix> {
    check_omega(omega)?;
    let n = params.n_layers;
    let grid = build_mode_grid(n)?;
    let delta = omega * params.delta0;
    let scale = -I * params.g / (2.0 * n as f64 * omega);
    let f = CMat::from_fn(n, |ki, kj| {
        let ka = grid.ka(ki);
        let kb = grid.ka(kj);
        let mut sum = C64::new(0.0, 0.0);
        for &l in grid.l_values() {
            for &lp in grid.l_values() {
                let phase = C64::from_polar(1.0, ka * l - kb * lp);
                sum += phase * (I * delta * (l - lp).abs()).exp();
            }
        }
        scale * sum
    });
    Ok(CouplingMatrix { omega, f, basis: BasisKind::KSpace })
}

/// Exact D(w) matrix of the triple layer, `D = -(6 w / (eta Omega)) F(w)`,
/// so that the secular matrix reads `(w^2 - Omega^2) I + (eta w / 3) D`.
pub fn d_matrix_exact(omega: C64, params: &SlabParams) -> Result<CMat> {
    if params.n_layers != 3 {
        return Err(SlabError::Unsupported(format!(
            "D matrix is defined for 3 layers, got {}",
            params.n_layers
        )));
    }
    let f = coupling_matrix(omega, params)?;
    Ok(f.f.scale(-6.0 * omega / params.g))
}

/// Second-order (in d = w a/c) reference expansion of D(w) for the triple
/// layer. The off-center entries are symmetric by construction.
pub fn d_matrix_second_order(delta: C64) -> CMat {
    let d = delta;
    let d2 = delta * delta;
    let corner = 4.0 * d + 3.0 * I * d2;
    let edge = d + 1.5 * I * d2;
    let anti = -2.0 * d - 3.0 * I * d2;
    let center = 9.0 * I - 8.0 * d - 6.0 * I * d2;
    CMat::from_rows(&[
        vec![corner, edge, anti],
        vec![edge, center, edge],
        vec![anti, edge, corner],
    ])
}

/// Max-norm residual between the exact triple-layer D(w) and its
/// second-order expansion; O(delta^3) by construction.
pub fn d_matrix_expansion_check(omega: C64, params: &SlabParams) -> Result<f64> {
    let exact = d_matrix_exact(omega, params)?;
    let approx = d_matrix_second_order(omega * params.delta0);
    Ok(exact.sub(&approx).max_norm())
}
