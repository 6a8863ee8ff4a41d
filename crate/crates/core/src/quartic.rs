//! Complex roots of the companion quartic and recovery of quaternion roots
//! of `P` from them.
//!
//! Every complex root `θ` of `F = P conj(P)` carries a root of `P` in its
//! congruence class `[θ]`. If `conj(P)(θ) ≠ 0` that root is the conjugation
//! `conj(P)(θ) θ conj(P)(θ)⁻¹`; otherwise `conj(θ)` is tried, and when both
//! vanish `θ` itself (and every member of `[θ]`) is a root.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::qpoly::{QuadraticPoly, RealQuartic};
use crate::quat::{QuatError, Quaternion};

const MAX_ABERTH_ITERS: usize = 500;

#[derive(Debug, Error, Clone)]
pub enum QuarticError {
    #[error("quartic solver did not converge: max residual {max_residual:e} exceeds {bound:e}")]
    NonConvergence { max_residual: f64, bound: f64 },
    #[error("quartic has non-finite or non-monic coefficients")]
    BadCoefficients,
    #[error("|F(θ)| = {value:e} exceeds eps^2 = {bound:e}")]
    PreconditionViolated { value: f64, bound: f64 },
    #[error(transparent)]
    Quat(#[from] QuatError),
}

/// The four complex roots of a real monic quartic, sorted by `(re, im)`.
#[derive(Debug, Clone)]
pub struct QuarticRoots {
    pub roots: [Complex64; 4],
    pub residuals: [f64; 4],
}

/// A root value with the number of quartic roots merged into it.
#[derive(Debug, Clone, Copy)]
pub struct RootCluster {
    pub value: Complex64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoveryCase {
    /// `conj(P)(θ) θ conj(P)(θ)⁻¹`.
    Conjugation,
    /// Same construction from `conj(θ)`.
    ConjugateConjugation,
    /// Both `θ` and `conj(θ)` annihilate `conj(P)`; the whole class is a root set.
    ComplexPair,
    /// Real `θ`; a root of `P` directly.
    Real,
}

impl RecoveryCase {
    pub fn label(self) -> &'static str {
        match self {
            RecoveryCase::Conjugation => "I",
            RecoveryCase::ConjugateConjugation => "II",
            RecoveryCase::ComplexPair => "III-pair",
            RecoveryCase::Real => "III-real",
        }
    }
}

impl fmt::Display for RecoveryCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RecoveredRoot {
    pub value: Quaternion,
    pub source_theta: Complex64,
    pub case: RecoveryCase,
    /// `|P(value)|`.
    pub residual: f64,
}

impl RecoveredRoot {
    /// True when every member of `[value]` is a root of `P`.
    pub fn is_spherical_family(&self) -> bool {
        self.case == RecoveryCase::ComplexPair
    }
}

/// Outcome of [`certify`].
#[derive(Debug, Clone, Copy)]
pub enum Certificate {
    /// `|P(root.value)| < bound = eps`.
    Root { root: RecoveredRoot, bound: f64 },
    /// `|P(θ)|, |P(conj θ)| < bound = √2 eps`.
    Pair {
        theta: Complex64,
        residuals: [f64; 2],
        bound: f64,
    },
}

impl Certificate {
    pub fn bound(&self) -> f64 {
        match self {
            Certificate::Root { bound, .. } | Certificate::Pair { bound, .. } => *bound,
        }
    }

    pub fn max_residual(&self) -> f64 {
        match self {
            Certificate::Root { root, .. } => root.residual,
            Certificate::Pair { residuals, .. } => residuals[0].max(residuals[1]),
        }
    }
}

fn cmp_complex(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn cluster_tol(z: Complex64) -> f64 {
    1e-7 * (1.0 + z.norm())
}

/// Newton polish of a root of multiplicity `m` using the `(m-1)`-th derivative.
fn polish(coeffs: &[f64; 5], z: Complex64, multiplicity: usize) -> Complex64 {
    // coefficients of the (m-1)-th derivative, low degree first
    let mut d: Vec<f64> = coeffs.to_vec();
    for _ in 1..multiplicity {
        d = d
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &a)| a * i as f64)
            .collect();
    }
    let eval = |p: &[f64], z: Complex64| p.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a);
    let deriv: Vec<f64> = d.iter().enumerate().skip(1).map(|(i, &a)| a * i as f64).collect();
    let mut best = z;
    let mut best_val = eval(&d, z).norm();
    let mut cur = z;
    for _ in 0..8 {
        let dv = eval(&deriv, cur);
        if dv.norm() == 0.0 {
            break;
        }
        cur -= eval(&d, cur) / dv;
        let v = eval(&d, cur).norm();
        if !v.is_finite() || v >= best_val {
            break;
        }
        best = cur;
        best_val = v;
    }
    best
}

/// All four complex roots of a real monic quartic by Aberth–Ehrlich
/// simultaneous iteration from fixed starting points on a circle.
pub fn solve_quartic(f: &RealQuartic) -> Result<QuarticRoots, QuarticError> {
    let e = f.coeffs;
    if e[4] != 1.0 || e.iter().any(|a| !a.is_finite()) {
        return Err(QuarticError::BadCoefficients);
    }

    let center = -e[3] / 4.0;
    // Fujiwara bound on the root moduli
    let radius = (0..4)
        .map(|k| (e[k].abs() / if k == 0 { 2.0 } else { 1.0 }).powf(1.0 / (4 - k) as f64))
        .fold(0.0f64, f64::max)
        .max(1e-3);
    let mut z: [Complex64; 4] = std::array::from_fn(|k| {
        let angle = 2.0 * PI * k as f64 / 4.0 + 0.4;
        Complex64::new(center, 0.0) + Complex64::from_polar(radius, angle)
    });

    for _ in 0..MAX_ABERTH_ITERS {
        let mut max_step = 0.0f64;
        for k in 0..4 {
            let fz = f.eval(z[k]);
            if fz.norm() == 0.0 {
                continue;
            }
            let ratio = fz / f.eval_deriv(z[k]);
            let repulsion: Complex64 = (0..4)
                .filter(|&j| j != k)
                .map(|j| {
                    let d = z[k] - z[j];
                    if d.norm() == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if w.is_finite() {
                z[k] -= w;
                max_step = max_step.max(w.norm() / (1.0 + z[k].norm()));
            }
        }
        if max_step <= 1e-15 {
            break;
        }
    }

    // merge clusters, polish multiple roots through derivatives
    let mut merged = z;
    let mut assigned = [false; 4];
    for a in 0..4 {
        if assigned[a] {
            continue;
        }
        let members: Vec<usize> = (a..4)
            .filter(|&b| !assigned[b] && (z[a] - z[b]).norm() <= cluster_tol(z[a]))
            .collect();
        let mean = members.iter().map(|&m| z[m]).sum::<Complex64>() / members.len() as f64;
        let value = polish(&e, mean, members.len());
        for &m in &members {
            assigned[m] = true;
            merged[m] = value;
        }
    }

    let roots = symmetrize(merged);
    let mut roots = roots;
    roots.sort_by(cmp_complex);
    let residuals = roots.map(|r| f.eval(r).norm());
    let bound = 1e-9 * (1.0 + f.max_coeff());
    let max_residual = residuals.iter().fold(0.0f64, |m, &r| m.max(r));
    if !(max_residual <= bound) {
        return Err(QuarticError::NonConvergence { max_residual, bound });
    }
    Ok(QuarticRoots { roots, residuals })
}

/// Pairs non-real roots into exact conjugates and snaps near-real roots to the axis.
fn symmetrize(mut z: [Complex64; 4]) -> [Complex64; 4] {
    let real_tol = |w: Complex64| 1e-9 * (1.0 + w.norm());
    let mut used = [false; 4];
    for a in 0..4 {
        if used[a] || z[a].im <= real_tol(z[a]) {
            continue;
        }
        let target = z[a].conj();
        let partner = (0..4)
            .filter(|&b| b != a && !used[b] && z[b].im < -real_tol(z[b]))
            .min_by(|&p, &q| (z[p] - target).norm().total_cmp(&(z[q] - target).norm()));
        if let Some(b) = partner {
            if (z[b] - target).norm() <= 1e-6 * (1.0 + target.norm()) {
                let avg = (z[a] + z[b].conj()) * 0.5;
                z[a] = avg;
                z[b] = avg.conj();
                used[a] = true;
                used[b] = true;
            }
        }
    }
    for (w, u) in z.iter_mut().zip(used) {
        if !u && w.im.abs() <= real_tol(*w) {
            w.im = 0.0;
        }
    }
    z
}

impl QuarticRoots {
    /// Roots closer than `1e-7 (1 + |θ|)` merged, with multiplicities; order follows `roots`.
    pub fn clusters(&self) -> Vec<RootCluster> {
        let mut out: Vec<RootCluster> = Vec::new();
        for &r in &self.roots {
            match out.iter_mut().find(|c| (c.value - r).norm() <= cluster_tol(r)) {
                Some(c) => c.multiplicity += 1,
                None => out.push(RootCluster {
                    value: r,
                    multiplicity: 1,
                }),
            }
        }
        out
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0f64, |m, &r| m.max(r))
    }
}

/// Default threshold deciding whether `θ` annihilates `conj(P)`.
pub fn default_eps(p: &QuadraticPoly) -> f64 {
    1e-9 * p.magnitude()
}

fn conjugation(p: &QuadraticPoly, theta: Complex64) -> Result<Quaternion, QuatError> {
    let t = Quaternion::from_complex(theta);
    t.conjugate_by(p.conj_poly().eval(t))
}

/// Quaternion roots of `P` from the roots of its companion quartic, one
/// representative per congruence class (two for a spherical family: `θ`
/// and `conj θ`).
pub fn recover_roots(p: &QuadraticPoly, roots: &QuarticRoots, eps: f64) -> Vec<RecoveredRoot> {
    let pbar = p.conj_poly();
    let mut reps: Vec<Complex64> = Vec::new();
    for cluster in roots.clusters() {
        let upper = Complex64::new(cluster.value.re, cluster.value.im.abs());
        if !reps.iter().any(|r| (r - upper).norm() <= cluster_tol(upper)) {
            reps.push(upper);
        }
    }

    let mut found: Vec<RecoveredRoot> = Vec::new();
    let mut push = |root: RecoveredRoot| {
        let dup = found.iter().any(|f| {
            f.value.distance(root.value) < 1e-6 && f.value.congruent_distance(root.value) < 1e-6
        });
        if !dup {
            found.push(root);
        }
    };
    let make = |value: Quaternion, theta: Complex64, case: RecoveryCase| RecoveredRoot {
        value,
        source_theta: theta,
        case,
        residual: p.eval(value).norm(),
    };

    for theta in reps {
        let t = Quaternion::from_complex(theta);
        let tc = t.conj();
        if pbar.eval(t).norm() > eps {
            if let Ok(v) = conjugation(p, theta) {
                push(make(v, theta, RecoveryCase::Conjugation));
                continue;
            }
        }
        if pbar.eval(tc).norm() > eps {
            if let Ok(v) = conjugation(p, theta.conj()) {
                push(make(v, theta, RecoveryCase::ConjugateConjugation));
                continue;
            }
        }
        if theta.im == 0.0 {
            push(make(t, theta, RecoveryCase::Real));
        } else {
            push(make(t, theta, RecoveryCase::ComplexPair));
            push(make(tc, theta, RecoveryCase::ComplexPair));
        }
    }
    found
}

/// Solves `P` through its companion quartic with the default case-switching threshold.
pub fn solve(p: &QuadraticPoly) -> Result<Vec<RecoveredRoot>, crate::Error> {
    let f = p.companion_quartic()?;
    let roots = solve_quartic(&f)?;
    Ok(recover_roots(p, &roots, default_eps(p)))
}

/// Turns an approximate root `θ` of `F` (`|F(θ)| ≤ eps²`) into a certified
/// approximate root of `P`.
pub fn certify(p: &QuadraticPoly, theta: Complex64, eps: f64) -> Result<Certificate, QuarticError> {
    let f = p
        .companion_quartic()
        .map_err(|_| QuarticError::BadCoefficients)?;
    let value = f.eval(theta).norm();
    if !(value <= eps * eps) {
        return Err(QuarticError::PreconditionViolated {
            value,
            bound: eps * eps,
        });
    }
    let pbar = p.conj_poly();
    let t = Quaternion::from_complex(theta);
    let tc = t.conj();
    let root = |value: Quaternion, case| RecoveredRoot {
        value,
        source_theta: theta,
        case,
        residual: p.eval(value).norm(),
    };
    if pbar.eval(t).norm() > eps {
        let q = conjugation(p, theta)?;
        return Ok(Certificate::Root {
            root: root(q, RecoveryCase::Conjugation),
            bound: eps,
        });
    }
    if pbar.eval(tc).norm() > eps {
        let q = conjugation(p, theta.conj())?;
        return Ok(Certificate::Root {
            root: root(q, RecoveryCase::ConjugateConjugation),
            bound: eps,
        });
    }
    Ok(Certificate::Pair {
        theta,
        residuals: [p.eval(t).norm(), p.eval(tc).norm()],
        bound: std::f64::consts::SQRT_2 * eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn q(a: f64, b: f64, c: f64, d: f64) -> Quaternion {
        Quaternion::new(a, b, c, d)
    }

    fn reference() -> (Quaternion, Quaternion, QuadraticPoly) {
        let alpha = q(-1.3, 2.1, 0.17, -0.31);
        let beta = q(1.4, 0.7, -0.23, 0.28);
        (alpha, beta, QuadraticPoly::from_roots(alpha, beta).unwrap())
    }

    fn assert_roots(got: &QuarticRoots, want: &[Complex64], tol: f64) {
        let mut want = want.to_vec();
        want.sort_by(cmp_complex);
        for (g, w) in got.roots.iter().zip(&want) {
            assert!((g - w).norm() < tol, "got {:?}, want {:?}", got.roots, want);
        }
    }

    #[test]
    fn solve_quartic_examples() {
        let r = solve_quartic(&RealQuartic::new([-1.0, 0.0, 0.0, 0.0, 1.0])).unwrap();
        assert_roots(&r, &[c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)], 1e-12);

        let r = solve_quartic(&RealQuartic::new([1.0, 0.0, 2.0, 0.0, 1.0])).unwrap();
        assert_roots(&r, &[c(0.0, 1.0), c(0.0, 1.0), c(0.0, -1.0), c(0.0, -1.0)], 1e-12);
        let clusters = r.clusters();
        assert_eq!(clusters.len(), 2);
        assert!(clusters.iter().all(|c| c.multiplicity == 2));

        let p = QuadraticPoly::new(-(Quaternion::I + Quaternion::J), Quaternion::K);
        let r = solve_quartic(&p.companion_quartic().unwrap()).unwrap();
        assert_roots(&r, &[c(0.0, 1.0), c(0.0, 1.0), c(0.0, -1.0), c(0.0, -1.0)], 1e-12);
    }

    #[test]
    fn solve_quartic_handles_zero_and_real_multiple_roots() {
        // x^2 (x-1)(x+2)
        let r = solve_quartic(&RealQuartic::new([0.0, 0.0, -2.0, 1.0, 1.0])).unwrap();
        assert_roots(&r, &[c(-2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], 1e-10);
        // (x-1)^4
        let r = solve_quartic(&RealQuartic::new([1.0, -4.0, 6.0, -4.0, 1.0])).unwrap();
        assert!(r.roots.iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-3));
    }

    #[test]
    fn solve_quartic_is_sorted_and_conjugate_paired() {
        let (_, _, p) = reference();
        let r = solve_quartic(&p.companion_quartic().unwrap()).unwrap();
        for w in r.roots.windows(2) {
            assert_ne!(cmp_complex(&w[0], &w[1]), Ordering::Greater);
        }
        for z in r.roots {
            assert!(r.roots.iter().any(|w| (w - z.conj()).norm() < 1e-8));
        }
        assert!(r.max_residual() <= 1e-9 * (1.0 + p.companion_quartic().unwrap().max_coeff()));
    }

    #[test]
    fn rejects_bad_coefficients() {
        assert!(solve_quartic(&RealQuartic::new([1.0, 0.0, 0.0, 0.0, 2.0])).is_err());
        assert!(solve_quartic(&RealQuartic::new([f64::NAN, 0.0, 0.0, 0.0, 1.0])).is_err());
    }

    #[test]
    fn recovers_prescribed_roots() {
        let (alpha, beta, p) = reference();
        let found = solve(&p).unwrap();
        assert_eq!(found.len(), 2);
        for target in [alpha, beta] {
            let hit = found
                .iter()
                .find(|r| r.value.congruent_distance(target) < 1e-6)
                .expect("root recovered");
            assert!(hit.value.distance(target) < 1e-6);
            assert!(hit.residual < 1e-9);
        }
    }

    #[test]
    fn sphere_of_roots_for_x2_plus_1() {
        let p = QuadraticPoly::new(Quaternion::ZERO, Quaternion::ONE);
        let found = solve(&p).unwrap();
        assert!(found
            .iter()
            .any(|r| r.value.approx_eq(Quaternion::I, 1e-12) && r.is_spherical_family()));
        assert!(found.iter().all(|r| r.case == RecoveryCase::ComplexPair));
    }

    #[test]
    fn single_root_of_pathological_example() {
        let p = QuadraticPoly::new(-(Quaternion::I + Quaternion::J), Quaternion::K);
        let found = solve(&p).unwrap();
        assert_eq!(found.len(), 1, "{found:?}");
        assert!(found[0].value.approx_eq(Quaternion::J, 1e-9));
        assert!(found[0].residual < 1e-9);
        assert_eq!(found[0].case, RecoveryCase::Conjugation);
    }

    #[test]
    fn real_roots_are_case_iii_real() {
        let p = QuadraticPoly::from_roots(Quaternion::real(2.0), Quaternion::real(-0.5)).unwrap();
        let found = solve(&p).unwrap();
        assert_eq!(found.len(), 2);
        assert!(found.iter().all(|r| r.case == RecoveryCase::Real && r.residual < 1e-12));
    }

    #[test]
    fn certify_examples() {
        let (_, _, p) = reference();
        let roots = solve_quartic(&p.companion_quartic().unwrap()).unwrap();
        for theta in roots.roots {
            let cert = certify(&p, theta, 1e-4).unwrap();
            assert!(cert.max_residual() < 1e-4);
        }

        let unit = QuadraticPoly::new(Quaternion::ZERO, Quaternion::ONE);
        match certify(&unit, c(0.0, 1.0), 0.5).unwrap() {
            Certificate::Pair { residuals, bound, .. } => {
                assert_eq!(residuals, [0.0, 0.0]);
                assert!((bound - 0.5 * 2f64.sqrt()).abs() < 1e-15);
            }
            other => panic!("expected pair, got {other:?}"),
        }

        let theta = roots.roots[3] + c(1e-6, -1e-6);
        let cert = certify(&p, theta, 1e-2).unwrap();
        assert!(cert.max_residual() < 1e-2);
        assert!(matches!(cert, Certificate::Root { .. }));
    }

    #[test]
    fn certify_checks_precondition() {
        let (_, _, p) = reference();
        let err = certify(&p, c(0.0, 0.0), 1e-3).unwrap_err();
        assert!(matches!(err, QuarticError::PreconditionViolated { .. }));
    }
}
