//! Dirac-representation gamma matrices, relativistic dispersion and helicity
//! spinors.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64 as C64;

pub type M4 = Matrix4<C64>;
pub type V4 = Vector4<C64>;

/// Minkowski metric diagonal, mostly minus.
pub const METRIC: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaSet {
    pub gamma: [M4; 4],
}

impl GammaSet {
    /// gamma^0 = diag(1, 1, -1, -1), gamma^i = [[0, sigma_i], [-sigma_i, 0]].
    pub fn dirac() -> Self {
        let z = c(0.0, 0.0);
        let o = c(1.0, 0.0);
        let i = c(0.0, 1.0);
        let sigma = [[[z, o], [o, z]], [[z, -i], [i, z]], [[o, z], [z, -o]]];
        let mut gamma = [M4::zeros(); 4];
        for k in 0..4 {
            gamma[0][(k, k)] = if k < 2 { o } else { -o };
        }
        for (n, s) in sigma.iter().enumerate() {
            let g = &mut gamma[n + 1];
            for r in 0..2 {
                for col in 0..2 {
                    g[(r, col + 2)] = s[r][col];
                    g[(r + 2, col)] = -s[r][col];
                }
            }
        }
        Self { gamma }
    }

    /// gamma^0 gamma^mu, the matrices sandwiched between a^dagger and a on
    /// the lattice.
    pub fn alpha(&self, mu: usize) -> M4 {
        self.gamma[0] * self.gamma[mu]
    }
}

/// E = sqrt(|k|^2 + m^2).
pub fn dispersion(k: [f64; 3], m: f64) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2] + m * m).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpinorKind {
    U1,
    U2,
    V1,
    V2,
}

impl SpinorKind {
    /// Spin label 1 or 2 to the electron (u) or positron (v) spinor.
    pub fn for_label(positron: bool, sigma: u8) -> SpinorKind {
        match (positron, sigma) {
            (false, 1) => SpinorKind::U1,
            (false, _) => SpinorKind::U2,
            (true, 1) => SpinorKind::V1,
            (true, _) => SpinorKind::V2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HelicitySpinor {
    pub components: V4,
    pub momentum: [f64; 3],
    pub kind: SpinorKind,
}

/// Helicity spinor normalized to u^dagger u = 2E.
pub fn spinor(kind: SpinorKind, p: [f64; 3], m: f64) -> HelicitySpinor {
    let e = dispersion(p, m);
    let d = e + m;
    let s = d.sqrt();
    let (px, py, pz) = (p[0], p[1], p[2]);
    let plus = c(px / d, py / d);
    let minus = c(px / d, -py / d);
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let v = match kind {
        SpinorKind::U1 => V4::new(o, z, c(pz / d, 0.0), plus),
        SpinorKind::U2 => V4::new(z, o, minus, c(-pz / d, 0.0)),
        SpinorKind::V1 => V4::new(minus, c(-pz / d, 0.0), z, o),
        SpinorKind::V2 => V4::new(c(pz / d, 0.0), plus, o, z),
    };
    HelicitySpinor { components: v * c(s, 0.0), momentum: p, kind }
}

/// psi-bar Gamma phi (psi^dagger gamma^0 Gamma phi) when `barred`, otherwise
/// psi^dagger Gamma phi, with Gamma the product of `gammas` in order.
pub fn bilinear(left: &HelicitySpinor, gammas: &[M4], right: &HelicitySpinor, barred: bool) -> C64 {
    let mut g = M4::identity();
    for m in gammas {
        g *= m;
    }
    if barred {
        g = GammaSet::dirac().gamma[0] * g;
    }
    (left.components.adjoint() * g * right.components)[(0, 0)]
}

/// Dirac current psi-bar gamma^mu phi for mu = 0..3.
pub fn current(gs: &GammaSet, left: &HelicitySpinor, right: &HelicitySpinor) -> [C64; 4] {
    let bar = left.components.adjoint() * gs.gamma[0];
    let mut out = [c(0.0, 0.0); 4];
    for (mu, o) in out.iter_mut().enumerate() {
        *o = (bar * gs.gamma[mu] * right.components)[(0, 0)];
    }
    out
}

/// a^mu b_mu with the mostly-minus metric.
pub fn contract(a: &[C64; 4], b: &[C64; 4]) -> C64 {
    (0..4).map(|mu| a[mu] * b[mu] * METRIC[mu]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rest_frame_spinors() {
        let u1 = spinor(SpinorKind::U1, [0.0; 3], 1.0);
        let v1 = spinor(SpinorKind::V1, [0.0; 3], 1.0);
        let r2 = 2f64.sqrt();
        assert!((u1.components - V4::new(c(r2, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0))).norm() < 1e-15);
        assert!((v1.components - V4::new(c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(r2, 0.0))).norm() < 1e-15);
    }

    #[test]
    fn dispersion_examples() {
        assert_eq!(dispersion([0.0; 3], 1.0), 1.0);
        let tau = 2.0 * std::f64::consts::PI;
        assert!((dispersion([tau, 0.0, 0.0], 1.0) - 6.362_265_131_567_328).abs() < 1e-12);
        assert!((dispersion([3.0, 4.0, 0.0], 1e-8) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn u2_third_component() {
        let p = [1.0, 1.0, 1.0];
        let u2 = spinor(SpinorKind::U2, p, 1.0);
        let d = dispersion(p, 1.0) + 1.0;
        let expect = c(1.0, -1.0) / d * d.sqrt();
        assert!((u2.components[2] - expect).norm() < 1e-15);
    }
}
