//! Jacobians of the iteration maps and locally invariant planes at roots.
//!
//! At a root `α` the Jacobian `D(α)` of every iteration map annihilates at
//! least two directions (the real axis and `α`, or `α + b` for Right-Newton).
//! The remaining two eigen-directions span a plane through `α` that the map
//! preserves to first order. When those eigenvalues form a complex pair the
//! plane is spanned by the real and imaginary parts of one eigenvector.

use num_complex::Complex64;
use thiserror::Error;

use crate::iterfun::{step, IterationMethod, StepError};
use crate::qpoly::{QuadraticPoly, RealQuartic};
use crate::quartic::{solve_quartic, QuarticError};
use crate::quat::Quaternion;

pub type Matrix4 = [[f64; 4]; 4];
pub type Vector4 = [f64; 4];

pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// Eigenvalues below this magnitude count as vanishing modes.
pub const ZERO_MODE_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Error, Clone)]
pub enum InvPlaneError {
    #[error("finite-difference stencil hit a singular step: {0}")]
    SingularStencil(StepError),
    #[error("base point is not a fixed point (|f(q) - q| = {0:e})")]
    NotAFixedPoint(f64),
    #[error("cannot separate the two dominant modes: |λ2| - |λ3| = {gap:e}")]
    RankAmbiguous { gap: f64 },
    #[error("anchor projects onto the root; plane orientation undefined")]
    DegenerateOrientation,
    #[error(transparent)]
    Quartic(#[from] QuarticError),
}

/// `d_ij = ∂f_i/∂q_j` at `base_point`, coordinates ordered `(1, i, j, k)`.
#[derive(Debug, Clone, Copy)]
pub struct Jacobian4 {
    pub entries: Matrix4,
    pub base_point: Quaternion,
    pub method: IterationMethod,
}

impl Jacobian4 {
    pub fn apply(&self, v: Vector4) -> Vector4 {
        mat_vec(&self.entries, v)
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius(&self.entries)
    }
}

fn mat_vec(m: &Matrix4, v: Vector4) -> Vector4 {
    std::array::from_fn(|r| (0..4).map(|c| m[r][c] * v[c]).sum())
}

fn frobenius(m: &Matrix4) -> f64 {
    m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: Vector4, b: Vector4) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: Vector4) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(s: f64, x: Vector4, y: Vector4) -> Vector4 {
    std::array::from_fn(|i| s * x[i] + y[i])
}

fn unit(e: usize) -> Vector4 {
    let mut v = [0.0; 4];
    v[e] = 1.0;
    v
}

/// Central-difference Jacobian of `method` at `q`.
pub fn jacobian(method: IterationMethod, p: &QuadraticPoly, q: Quaternion, h: f64) -> Result<Jacobian4, InvPlaneError> {
    let mut entries = [[0.0; 4]; 4];
    for col in 0..4 {
        let e = Quaternion::from_array(unit(col)).scale(h);
        let plus = step(method, p, q + e).map_err(InvPlaneError::SingularStencil)?;
        let minus = step(method, p, q - e).map_err(InvPlaneError::SingularStencil)?;
        let diff = (plus - minus).scale(0.5 / h).to_array();
        for (row, d) in diff.into_iter().enumerate() {
            entries[row][col] = d;
        }
    }
    Ok(Jacobian4 {
        entries,
        base_point: q,
        method,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct EigenPair {
    pub value: Complex64,
    /// Unit 2-norm, phase fixed so the largest component is real and positive.
    pub vector: [Complex64; 4],
    /// `‖D v - λ v‖`.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct Eigen4 {
    /// Sorted by decreasing `|λ|`.
    pub pairs: Vec<EigenPair>,
    /// Null-space extraction could not match an eigenvalue's multiplicity.
    pub defective: bool,
}

impl Eigen4 {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value.norm()).collect()
    }
}

/// `det(λI - A)` by Faddeev–LeVerrier, low degree first.
pub fn characteristic_polynomial(a: &Matrix4) -> RealQuartic {
    let mut coeffs = [0.0; 5];
    coeffs[4] = 1.0;
    let mut m = [[0.0; 4]; 4];
    for k in 1..=4 {
        // M_k = A (M_{k-1} + c_{n-k+1} I)
        let mut shifted = m;
        for (d, row) in shifted.iter_mut().enumerate() {
            row[d] += coeffs[4 - k + 1];
        }
        let next: Matrix4 = std::array::from_fn(|r| std::array::from_fn(|c| (0..4).map(|t| a[r][t] * shifted[t][c]).sum()));
        let trace: f64 = (0..4).map(|d| next[d][d]).sum();
        coeffs[4 - k] = -trace / k as f64;
        m = next;
    }
    RealQuartic::new(coeffs)
}

/// Null space of a complex 4×4 matrix by Gauss–Jordan elimination with
/// partial pivoting; columns whose best pivot is at most `tol` are free.
fn null_space(b: &[[Complex64; 4]; 4], tol: f64) -> Vec<[Complex64; 4]> {
    let mut a = *b;
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut row = 0;
    for col in 0..4 {
        if row == 4 {
            break;
        }
        let (best, mag) = (row..4)
            .map(|r| (r, a[r][col].norm()))
            .fold((row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if mag <= tol {
            continue;
        }
        a.swap(row, best);
        let pivot = a[row][col];
        for c in 0..4 {
            a[row][c] /= pivot;
        }
        for r in 0..4 {
            if r != row {
                let factor = a[r][col];
                if factor.norm() != 0.0 {
                    for c in 0..4 {
                        let sub = factor * a[row][c];
                        a[r][c] -= sub;
                    }
                }
            }
        }
        pivots.push((row, col));
        row += 1;
    }
    let free: Vec<usize> = (0..4).filter(|c| !pivots.iter().any(|p| p.1 == *c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = [Complex64::new(0.0, 0.0); 4];
            x[f] = Complex64::new(1.0, 0.0);
            for &(r, c) in &pivots {
                x[c] = -a[r][f];
            }
            x
        })
        .collect()
}

fn normalize_phase(v: [Complex64; 4]) -> [Complex64; 4] {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let big = v
        .iter()
        .copied()
        .fold(Complex64::new(0.0, 0.0), |m, z| if z.norm() > m.norm() * (1.0 + 1e-12) { z } else { m });
    if n == 0.0 || big.norm() == 0.0 {
        return v;
    }
    let phase = big.conj() / big.norm();
    v.map(|z| z * phase / n)
}

/// Newton on the `(m-1)`-th derivative, where an `m`-fold root is simple.
fn polish_multiple(coeffs: &[f64; 5], z0: Complex64, m: usize) -> Complex64 {
    let mut c: Vec<f64> = coeffs.to_vec();
    for _ in 1..m {
        c = c.iter().enumerate().skip(1).map(|(k, x)| k as f64 * x).collect();
    }
    let eval = |c: &[f64], z: Complex64| c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &x| acc * z + x);
    let dc: Vec<f64> = c.iter().enumerate().skip(1).map(|(k, x)| k as f64 * x).collect();
    let mut z = z0;
    for _ in 0..8 {
        let d = eval(&dc, z);
        if d.norm() == 0.0 {
            break;
        }
        let next = z - eval(&c, z) / d;
        if !next.is_finite() || (next - z0).norm() > 1e-2 * (1.0 + z0.norm()) {
            break;
        }
        z = next;
    }
    if z0.im == 0.0 {
        z.im = 0.0;
    }
    z
}

/// Eigenvalues from the characteristic quartic, eigenvectors by null-space extraction.
pub fn eigen4(a: &Matrix4) -> Result<Eigen4, InvPlaneError> {
    let scale = frobenius(a).max(1.0);
    let charpoly = characteristic_polynomial(a);
    let roots = solve_quartic(&charpoly)?;

    // group numerically equal eigenvalues
    let group_tol = 1e-3 * scale;
    let mut groups: Vec<(Complex64, usize)> = Vec::new();
    for &r in &roots.roots {
        match groups.iter_mut().find(|g| (g.0 / g.1 as f64 - r).norm() <= group_tol) {
            Some(g) => {
                g.0 += r;
                g.1 += 1;
            }
            None => groups.push((r, 1)),
        }
    }

    let mut defective = false;
    let mut pairs = Vec::with_capacity(4);
    for (sum, mult) in groups {
        let lambda = polish_multiple(&charpoly.coeffs, sum / mult as f64, mult);
        let shifted: [[Complex64; 4]; 4] = std::array::from_fn(|r| {
            std::array::from_fn(|c| {
                let d = if r == c { lambda } else { Complex64::new(0.0, 0.0) };
                Complex64::new(a[r][c], 0.0) - d
            })
        });
        let mut tol = 1e-6 * scale;
        let mut basis = null_space(&shifted, tol);
        while basis.len() < mult && tol < 1e-2 * scale {
            tol *= 10.0;
            basis = null_space(&shifted, tol);
        }
        if basis.len() != mult {
            defective = true;
        }
        if basis.is_empty() {
            basis = vec![[Complex64::new(0.0, 0.0); 4]];
        }
        for idx in 0..mult {
            let v = normalize_phase(basis[idx.min(basis.len() - 1)]);
            let residual = (0..4)
                .map(|r| {
                    let dv: Complex64 = (0..4).map(|c| v[c] * a[r][c]).sum();
                    (dv - lambda * v[r]).norm_sqr()
                })
                .sum::<f64>()
                .sqrt();
            pairs.push(EigenPair {
                value: lambda,
                vector: v,
                residual,
            });
        }
    }
    pairs.sort_by(|x, y| {
        y.value
            .norm()
            .total_cmp(&x.value.norm())
            .then(y.value.im.total_cmp(&x.value.im))
    });
    Ok(Eigen4 { pairs, defective })
}

/// A plane `root + x u + y v` with `u ⊥ v` unit vectors.
#[derive(Debug, Clone, Copy)]
pub struct InvariantPlane {
    pub root: Quaternion,
    pub u: Vector4,
    pub v: Vector4,
    /// The two non-vanishing eigenvalues, larger magnitude first.
    pub eigvals: [Complex64; 2],
    pub orientation_anchor: Quaternion,
    pub method: IterationMethod,
}

impl InvariantPlane {
    pub fn point(&self, x: f64, y: f64) -> Quaternion {
        let w = axpy(y, self.v, axpy(x, self.u, [0.0; 4]));
        self.root + Quaternion::from_array(w)
    }

    /// In-plane coordinates of the orthogonal projection of `q`.
    pub fn coordinates(&self, q: Quaternion) -> (f64, f64) {
        let d = (q - self.root).to_array();
        (dot(d, self.u), dot(d, self.v))
    }

    /// Distance from `q` to the plane.
    pub fn distance(&self, q: Quaternion) -> f64 {
        let (x, y) = self.coordinates(q);
        q.distance(self.point(x, y))
    }

    /// In-plane distance from the root to the projection of the anchor.
    pub fn anchor_offset(&self) -> f64 {
        let (x, y) = self.coordinates(self.orientation_anchor);
        x.hypot(y)
    }
}

/// Principal angles (radians, ascending) between two planes' direction spaces.
pub fn principal_angles(a: &InvariantPlane, b: &InvariantPlane) -> [f64; 2] {
    let m = [[dot(a.u, b.u), dot(a.u, b.v)], [dot(a.v, b.u), dot(a.v, b.v)]];
    // singular values of a 2x2 matrix from the eigenvalues of MᵀM
    let p = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    let q = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    let r = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    let mean = 0.5 * (p + q);
    let disc = (0.25 * (p - q) * (p - q) + r * r).sqrt();
    let s_max = (mean + disc).max(0.0).sqrt().min(1.0);
    let s_min = (mean - disc).max(0.0).sqrt().min(1.0);
    [s_max.acos(), s_min.acos()]
}

/// The locally invariant plane of `method` at `root`, oriented so `u` points
/// toward the in-plane projection of `other_root`. Mirror images (flipping
/// `v`) describe the same plane; `v` keeps the orientation of the
/// eigenvector frame.
pub fn invariant_plane(
    method: IterationMethod,
    p: &QuadraticPoly,
    root: Quaternion,
    other_root: Quaternion,
) -> Result<InvariantPlane, InvPlaneError> {
    let moved = step(method, p, root)
        .map_err(InvPlaneError::SingularStencil)?
        .distance(root);
    if moved > 1e-6 {
        return Err(InvPlaneError::NotAFixedPoint(moved));
    }
    let jac = jacobian(method, p, root, DEFAULT_FD_STEP)?;
    let eig = eigen4(&jac.entries)?;
    let mags = eig.magnitudes();
    let gap = mags[1] - mags[2];
    if gap < ZERO_MODE_THRESHOLD {
        return Err(InvPlaneError::RankAmbiguous { gap });
    }
    let (first, second) = (eig.pairs[0], eig.pairs[1]);
    let complex_pair = first.value.im.abs() > 1e-9 * (1.0 + first.value.norm());
    let (a, b) = if complex_pair {
        // the eigenvalue with positive imaginary part fixes the frame orientation
        let chosen = if first.value.im > 0.0 { first } else { second };
        (chosen.vector.map(|z| z.re), chosen.vector.map(|z| z.im))
    } else {
        let mut b = second.vector.map(|z| z.re);
        let big = b.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if big < 0.0 {
            b = b.map(|x| -x);
        }
        (first.vector.map(|z| z.re), b)
    };
    let e1 = a.map(|x| x / norm(a));
    let b_perp = axpy(-dot(b, e1), e1, b);
    let e2 = b_perp.map(|x| x / norm(b_perp));

    let d = (other_root - root).to_array();
    let (x, y) = (dot(d, e1), dot(d, e2));
    let r = x.hypot(y);
    if r <= 1e-12 * (1.0 + norm(d)) {
        return Err(InvPlaneError::DegenerateOrientation);
    }
    let (cos, sin) = (x / r, y / r);
    let u = axpy(sin, e2, e1.map(|t| t * cos));
    let v = axpy(cos, e2, e1.map(|t| -t * sin));

    Ok(InvariantPlane {
        root,
        u,
        v,
        eigvals: [first.value, second.value],
        orientation_anchor: other_root,
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: f64, b: f64, c: f64, d: f64) -> Quaternion {
        Quaternion::new(a, b, c, d)
    }

    fn reference() -> (Quaternion, Quaternion, QuadraticPoly) {
        let alpha = q(-1.3, 2.1, 0.17, -0.31);
        let beta = q(1.4, 0.7, -0.23, 0.28);
        (alpha, beta, QuadraticPoly::from_roots(alpha, beta).unwrap())
    }

    fn diag(d: [f64; 4]) -> Matrix4 {
        std::array::from_fn(|r| std::array::from_fn(|c| if r == c { d[r] } else { 0.0 }))
    }

    #[test]
    fn characteristic_polynomial_of_known_matrices() {
        let f = characteristic_polynomial(&diag([1.0, 2.0, 3.0, 4.0]));
        // (λ-1)(λ-2)(λ-3)(λ-4)
        assert_eq!(f.coeffs, [24.0, -50.0, 35.0, -10.0, 1.0]);
        // rotation block: λ^2 + 1 times λ^2
        let mut m = [[0.0; 4]; 4];
        m[0][1] = -1.0;
        m[1][0] = 1.0;
        assert_eq!(characteristic_polynomial(&m).coeffs, [0.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn eigen_of_identity() {
        let e = eigen4(&diag([1.0; 4])).unwrap();
        assert_eq!(e.pairs.len(), 4);
        assert!(e.pairs.iter().all(|p| (p.value - 1.0).norm() < 1e-12), "{:?}", e.pairs);
        assert!(!e.defective);
        // four independent vectors
        let vs: Vec<Vector4> = e.pairs.iter().map(|p| p.vector.map(|z| z.re)).collect();
        for i in 0..4 {
            for j in 0..i {
                assert!(dot(vs[i], vs[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigen_of_diagonal_with_zero_modes() {
        let e = eigen4(&diag([0.0, 0.0, 2.0, 3.0])).unwrap();
        let vals: Vec<f64> = e.pairs.iter().map(|p| p.value.re).collect();
        assert_eq!(vals.len(), 4);
        assert!((vals[0] - 3.0).abs() < 1e-12 && (vals[1] - 2.0).abs() < 1e-12);
        assert!(vals[2].abs() < 1e-12 && vals[3].abs() < 1e-12);
        assert!((e.pairs[0].vector[3].re - 1.0).abs() < 1e-12);
        assert!((e.pairs[1].vector[2].re - 1.0).abs() < 1e-12);
        let z: Vec<Vector4> = e.pairs[2..].iter().map(|p| p.vector.map(|z| z.re)).collect();
        for v in &z {
            assert!(v[2].abs() < 1e-12 && v[3].abs() < 1e-12);
        }
        assert!(dot(z[0], z[1]).abs() < 1e-12);
    }

    #[test]
    fn defective_matrix_is_flagged() {
        // Jordan block for 0
        let mut m = diag([0.0, 0.0, 1.0, 2.0]);
        m[0][1] = 1.0;
        let e = eigen4(&m).unwrap();
        assert!(e.defective);
        assert_eq!(e.pairs.len(), 4);
    }

    #[test]
    fn classical_newton_derivative_vanishes_at_simple_root() {
        let p = QuadraticPoly::new(Quaternion::ZERO, Quaternion::real(-1.0));
        let jac = jacobian(IterationMethod::LeftNewton, &p, Quaternion::ONE, DEFAULT_FD_STEP).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert!(jac.entries[r][c].abs() < 1e-4, "{:?}", jac.entries);
            }
        }
    }

    #[test]
    fn jacobian_is_stable_under_step_halving() {
        let (alpha, _, p) = reference();
        for m in IterationMethod::ALL {
            let a = jacobian(m, &p, alpha, DEFAULT_FD_STEP).unwrap();
            let b = jacobian(m, &p, alpha, DEFAULT_FD_STEP / 2.0).unwrap();
            for (ra, rb) in a.entries.iter().zip(&b.entries) {
                for (x, y) in ra.iter().zip(rb) {
                    assert!((x - y).abs() < 1e-6, "{m}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn zero_modes_at_root() {
        let (alpha, beta, p) = reference();
        for root in [alpha, beta] {
            for m in IterationMethod::ALL {
                let jac = jacobian(m, &p, root, DEFAULT_FD_STEP).unwrap();
                let commuting = if m == IterationMethod::RightNewton { root + p.b } else { root };
                for w in [unit(0), commuting.to_array()] {
                    let dw = jac.apply(w);
                    assert!(norm(dw) <= 1e-3 * norm(w), "{m} at {root}: {dw:?}");
                }
                let eig = eigen4(&jac.entries).unwrap();
                let small = eig.magnitudes().iter().filter(|&&x| x <= ZERO_MODE_THRESHOLD).count();
                assert!(small >= 2);
                for pair in &eig.pairs {
                    assert!(pair.residual <= 1e-6 * jac.frobenius_norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn left_newton_at_alpha_has_expanding_complex_pair() {
        let (alpha, _, p) = reference();
        let jac = jacobian(IterationMethod::LeftNewton, &p, alpha, DEFAULT_FD_STEP).unwrap();
        let eig = eigen4(&jac.entries).unwrap();
        let mags = eig.magnitudes();
        assert!(mags[2] < 1e-3 && mags[3] < 1e-3);
        assert!(mags[0] > 1.0 && mags[1] > 1.0);
        assert!((eig.pairs[0].value - eig.pairs[1].value.conj()).norm() < 1e-9);
        assert!(eig.pairs[0].value.im.abs() > 1e-3);
    }

    #[test]
    fn planes_agree_for_left_newton_and_halley_only() {
        let (alpha, beta, p) = reference();
        let left = invariant_plane(IterationMethod::LeftNewton, &p, alpha, beta).unwrap();
        let halley = invariant_plane(IterationMethod::Halley, &p, alpha, beta).unwrap();
        let right = invariant_plane(IterationMethod::RightNewton, &p, alpha, beta).unwrap();
        assert!(principal_angles(&left, &halley)[1] < 1e-3);
        assert!(principal_angles(&left, &right)[1] > 1e-2);
    }

    #[test]
    fn plane_frame_is_orthonormal_and_oriented() {
        let (alpha, beta, p) = reference();
        for m in IterationMethod::ALL {
            for (root, other) in [(alpha, beta), (beta, alpha)] {
                let plane = invariant_plane(m, &p, root, other).unwrap();
                assert!((norm(plane.u) - 1.0).abs() < 1e-12);
                assert!((norm(plane.v) - 1.0).abs() < 1e-12);
                assert!(dot(plane.u, plane.v).abs() < 1e-12);
                let (x, y) = plane.coordinates(other);
                assert!(x > 0.0 && y.abs() < 1e-12 * (1.0 + x));
                assert!(plane.point(0.0, 0.0).approx_eq(root, 0.0));

                let jac = jacobian(m, &p, root, DEFAULT_FD_STEP).unwrap();
                for w in [plane.u, plane.v] {
                    let dw = jac.apply(w);
                    let inplane = axpy(dot(dw, plane.v), plane.v, plane.u.map(|t| t * dot(dw, plane.u)));
                    let out = axpy(-1.0, inplane, dw);
                    assert!(norm(out) <= 1e-3, "{m}: {out:?}");
                }
            }
        }
    }

    #[test]
    fn plane_is_invariant_to_first_order() {
        let (alpha, beta, p) = reference();
        for m in IterationMethod::ALL {
            let plane = invariant_plane(m, &p, alpha, beta).unwrap();
            for delta in [1e-2, 1e-3] {
                for (x, y) in [(1.0, 0.0), (0.0, 1.0), (0.6, -0.8)] {
                    let seed = plane.point(delta * x, delta * y);
                    let image = step(m, &p, seed).unwrap();
                    assert!(plane.distance(image) <= 10.0 * delta * delta + 1e-6, "{m} {delta}");
                }
            }
        }
    }

    #[test]
    fn refuses_non_fixed_points() {
        let (alpha, beta, p) = reference();
        let err = invariant_plane(IterationMethod::LeftNewton, &p, alpha + Quaternion::real(0.1), beta).unwrap_err();
        assert!(matches!(err, InvPlaneError::NotAFixedPoint(_)));
    }

    #[test]
    fn real_roots_have_fully_vanishing_jacobian() {
        // both roots real: every direction commutes, the plane is undefined
        let p = QuadraticPoly::from_roots(Quaternion::real(1.0), Quaternion::real(-2.0)).unwrap();
        let err = invariant_plane(IterationMethod::LeftNewton, &p, Quaternion::ONE, Quaternion::real(-2.0)).unwrap_err();
        assert!(matches!(err, InvPlaneError::RankAmbiguous { .. }));
    }
}
