//! Monic quaternion quadratics `P(x) = x^2 + b x + c`.
//!
//! Coefficients sit to the left of the powers of `x`, so evaluation at a
//! quaternion `q` is `q^2 + b q + c`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quat::{QuatError, Quaternion};

#[derive(Debug, Error, Clone)]
pub enum PolyError {
    #[error("companion quartic coefficient x^{degree} has imaginary part {magnitude:e}")]
    ConjugationAssembly { degree: usize, magnitude: f64 },
    #[error("prescribed roots {alpha} and {beta} lie in the same congruence class")]
    CoincidentClasses { alpha: Quaternion, beta: Quaternion },
    #[error(transparent)]
    Quat(#[from] QuatError),
}

/// `x^2 + b x + c`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadraticPoly {
    pub b: Quaternion,
    pub c: Quaternion,
}

/// Real monic quartic `x^4 + e3 x^3 + e2 x^2 + e1 x + e0`, stored low degree first.
#[derive(Debug, Clone, Copy)]
pub struct RealQuartic {
    pub coeffs: [f64; 5],
}

/// `x^2 - t x + n2` where `t` is the trace and `n2` the squared norm of a quaternion.
#[derive(Debug, Clone, Copy)]
pub struct CharPoly {
    pub trace: f64,
    pub norm_sqr: f64,
}

impl CharPoly {
    pub fn discriminant(&self) -> f64 {
        self.trace * self.trace - 4.0 * self.norm_sqr
    }

    /// The two complex roots, upper-half-plane one first.
    pub fn roots(&self) -> [Complex64; 2] {
        let half = 0.5 * self.trace;
        let d = self.discriminant();
        if d < 0.0 {
            let im = 0.5 * (-d).sqrt();
            [Complex64::new(half, im), Complex64::new(half, -im)]
        } else {
            let r = 0.5 * d.sqrt();
            [Complex64::new(half + r, 0.0), Complex64::new(half - r, 0.0)]
        }
    }
}

/// Characteristic polynomial of `q`; its zero set is the class `[q]`.
pub fn char_poly(q: Quaternion) -> CharPoly {
    CharPoly {
        trace: q.trace(),
        norm_sqr: q.norm_sqr(),
    }
}

impl QuadraticPoly {
    pub fn new(b: Quaternion, c: Quaternion) -> Self {
        QuadraticPoly { b, c }
    }

    /// Builds `(x - γ)(x - α)` with `γ = (β-α) β (β-α)⁻¹`, which vanishes at
    /// both `α` and `β`. `α` is the exact right factor; `β` is reached through `γ`.
    pub fn from_roots(alpha: Quaternion, beta: Quaternion) -> Result<Self, PolyError> {
        if alpha.congruent_distance(beta) <= 1e-9 * (1.0 + alpha.norm().max(beta.norm())) {
            return Err(PolyError::CoincidentClasses { alpha, beta });
        }
        let d = beta - alpha;
        let gamma = d * beta * d.inv()?;
        Ok(QuadraticPoly {
            b: -(gamma + alpha),
            c: gamma * alpha,
        })
    }

    /// Same roots, obtained by subtracting `α² + bα + c = 0` from
    /// `β² + bβ + c = 0`: `b = -(β² - α²)(β - α)⁻¹`, `c = -(α² + bα)`.
    pub fn from_roots_by_subtraction(alpha: Quaternion, beta: Quaternion) -> Result<Self, PolyError> {
        if alpha.congruent_distance(beta) <= 1e-9 * (1.0 + alpha.norm().max(beta.norm())) {
            return Err(PolyError::CoincidentClasses { alpha, beta });
        }
        let b = -((beta * beta - alpha * alpha) * (beta - alpha).inv()?);
        let c = -(alpha * alpha + b * alpha);
        Ok(QuadraticPoly { b, c })
    }

    pub fn eval(&self, q: Quaternion) -> Quaternion {
        q * q + self.b * q + self.c
    }

    /// `P'(q) = 2q + b`.
    pub fn deriv1(&self, q: Quaternion) -> Quaternion {
        q.scale(2.0) + self.b
    }

    /// `P'' = 2`.
    pub fn deriv2(&self) -> Quaternion {
        Quaternion::real(2.0)
    }

    pub fn conj_poly(&self) -> QuadraticPoly {
        QuadraticPoly {
            b: self.b.conj(),
            c: self.c.conj(),
        }
    }

    /// `F(x) = P(x) conj(P)(x)`, a real quartic.
    pub fn companion_quartic(&self) -> Result<RealQuartic, PolyError> {
        let (b, c) = (self.b, self.c);
        let (bc, cc) = (b.conj(), c.conj());
        let assembled = [c * cc, b * cc + c * bc, c + cc + b * bc, b + bc];
        let mut coeffs = [0.0; 5];
        coeffs[4] = 1.0;
        for (degree, value) in assembled.iter().enumerate() {
            let imag = value.imag_norm();
            if imag > 1e-8 * (1.0 + value.norm()) {
                return Err(PolyError::ConjugationAssembly {
                    degree,
                    magnitude: imag,
                });
            }
            coeffs[degree] = value.re;
        }
        Ok(RealQuartic { coeffs })
    }

    /// `Σ_{k=0}^{2} P^{(k)}(q) (ξ - q)^k / k!`. When `ξ` is a root of `P`
    /// this equals `qξ - ξq`.
    pub fn taylor_remainder(&self, xi: Quaternion, q: Quaternion) -> Quaternion {
        let d = xi - q;
        self.eval(q) + self.deriv1(q) * d + (self.deriv2() * d * d).scale(0.5)
    }

    /// Scale used for relative tolerances: `1 + |b| + |c|`.
    pub fn magnitude(&self) -> f64 {
        1.0 + self.b.norm() + self.c.norm()
    }
}

impl RealQuartic {
    pub fn new(coeffs: [f64; 5]) -> Self {
        RealQuartic { coeffs }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
    }

    pub fn eval_deriv(&self, z: Complex64) -> Complex64 {
        self.coeffs[1..]
            .iter()
            .enumerate()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, (i, &a)| acc * z + a * (i + 1) as f64)
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, a| m.max(a.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(a: f64, b: f64, c: f64, d: f64) -> Quaternion {
        Quaternion::new(a, b, c, d)
    }

    fn alpha() -> Quaternion {
        q(-1.3, 2.1, 0.17, -0.31)
    }
    fn beta() -> Quaternion {
        q(1.4, 0.7, -0.23, 0.28)
    }

    fn pathological() -> QuadraticPoly {
        QuadraticPoly::new(-(Quaternion::I + Quaternion::J), Quaternion::K)
    }

    /// Reference coefficients for the roots above, rounded to 4-5 digits.
    /// The j-coordinate of `c` is `+0.71178`: it is forced by `c = -(α² + bα)`.
    fn published() -> QuadraticPoly {
        QuadraticPoly::new(
            -q(0.1, 2.6664, 0.5611, 0.0741),
            q(-2.9569, 2.0171, 0.71178, -1.658),
        )
    }

    #[test]
    fn eval_examples() {
        assert!(pathological().eval(Quaternion::J).approx_eq(Quaternion::ZERO, 1e-15));
        let p = QuadraticPoly::new(Quaternion::ZERO, Quaternion::real(-1.0));
        assert!(p.eval(Quaternion::real(2.0)).approx_eq(Quaternion::real(3.0), 0.0));
        assert!(published().eval(alpha()).norm() < 1e-3);
        assert!(published().eval(beta()).norm() < 1e-3);
        assert!(p.deriv1(Quaternion::real(2.0)).approx_eq(Quaternion::real(4.0), 0.0));
    }

    #[test]
    fn conj_poly_examples() {
        let p = QuadraticPoly::new(Quaternion::I, Quaternion::J).conj_poly();
        assert!(p.b.approx_eq(-Quaternion::I, 0.0) && p.c.approx_eq(-Quaternion::J, 0.0));
        let r = QuadraticPoly::new(Quaternion::real(2.0), Quaternion::real(-3.0)).conj_poly();
        assert!(r.b.approx_eq(Quaternion::real(2.0), 0.0) && r.c.approx_eq(Quaternion::real(-3.0), 0.0));
        let pc = published().conj_poly();
        assert!(pc.b.approx_eq(published().b.conj(), 0.0));
        assert!(pc.c.approx_eq(published().c.conj(), 0.0));
    }

    #[test]
    fn companion_quartic_examples() {
        let f = QuadraticPoly::new(Quaternion::ZERO, Quaternion::ONE).companion_quartic().unwrap();
        assert_eq!(f.coeffs, [1.0, 0.0, 2.0, 0.0, 1.0]);
        // b = -(i+j), c = k: trace b = 0, tr c + |b|^2 = 2, tr(b conj c) = 0, |c|^2 = 1
        let f = pathological().companion_quartic().unwrap();
        for (got, want) in f.coeffs.iter().zip([1.0f64, 0.0, 2.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        let f = published().companion_quartic().unwrap();
        let c = published().c;
        // the sign of any coordinate does not matter here
        let sum_sq = 2.9569f64.powi(2) + 2.0171f64.powi(2) + 0.71178f64.powi(2) + 1.658f64.powi(2);
        assert!((f.coeffs[0] - sum_sq).abs() < 1e-12);
        assert!((f.coeffs[0] - 16.0676).abs() < 1e-3);
        assert!((f.coeffs[0] - c.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn from_roots_examples() {
        let p = QuadraticPoly::from_roots(Quaternion::ONE, Quaternion::real(-1.0)).unwrap();
        assert!(p.b.approx_eq(Quaternion::ZERO, 1e-15));
        assert!(p.c.approx_eq(Quaternion::real(-1.0), 1e-15));

        let p = QuadraticPoly::from_roots(alpha(), beta()).unwrap();
        assert!(p.b.approx_eq(published().b, 1e-3), "b = {}", p.b);
        assert!(p.c.approx_eq(published().c, 1e-3), "c = {}", p.c);

        let (a, b) = (Quaternion::I, q(1.0, 2.0, 0.0, 0.0));
        let p = QuadraticPoly::from_roots(a, b).unwrap();
        assert!(p.eval(a).norm() < 1e-12 && p.eval(b).norm() < 1e-12);
    }

    #[test]
    fn from_roots_rejects_same_class() {
        let err = QuadraticPoly::from_roots(Quaternion::I, Quaternion::J).unwrap_err();
        assert!(matches!(err, PolyError::CoincidentClasses { .. }));
        assert!(QuadraticPoly::from_roots(alpha(), alpha()).is_err());
    }

    #[test]
    fn c_is_forced_by_b_and_a_root() {
        let p = QuadraticPoly::from_roots(alpha(), beta()).unwrap();
        let c = -(alpha() * alpha() + p.b * alpha());
        assert!(c.approx_eq(p.c, 1e-12));
        assert!(c.j > 0.7);
    }

    #[test]
    fn swapping_roots_gives_the_same_polynomial() {
        // a monic quadratic is determined by two roots from distinct classes
        let p = QuadraticPoly::from_roots(alpha(), beta()).unwrap();
        let r = QuadraticPoly::from_roots(beta(), alpha()).unwrap();
        assert!(p.b.approx_eq(r.b, 1e-12) && p.c.approx_eq(r.c, 1e-12));
    }

    #[test]
    fn char_poly_examples() {
        let cp = char_poly(Quaternion::I);
        assert_eq!((cp.trace, cp.norm_sqr), (0.0, 1.0));
        let cp = char_poly(Quaternion::real(3.0));
        assert_eq!((cp.trace, cp.norm_sqr), (6.0, 9.0));
        assert!(cp.discriminant() >= 0.0);
        let cp = char_poly(alpha());
        assert!((cp.trace + 2.6).abs() < 1e-12);
        assert!((cp.norm_sqr - 6.225).abs() < 1e-12);
        assert!(cp.discriminant() < 0.0);
    }

    #[test]
    fn taylor_remainder_examples() {
        // complex P, complex ξ and q commute
        let p = QuadraticPoly::from_roots(q(1.0, 0.5, 0.0, 0.0), q(-1.0, 0.3, 0.0, 0.0)).unwrap();
        let e = p.taylor_remainder(q(1.0, 0.5, 0.0, 0.0), q(0.2, -0.7, 0.0, 0.0));
        assert!(e.approx_eq(Quaternion::ZERO, 1e-14));

        let p = QuadraticPoly::from_roots(alpha(), beta()).unwrap();
        let x = q(1.0, 1.0, 1.0, 0.0);
        let e = p.taylor_remainder(alpha(), x);
        assert!(e.approx_eq(x * alpha() - alpha() * x, 1e-9 * 10.0));

        let e = p.taylor_remainder(x, x);
        assert!(e.approx_eq(p.eval(x), 0.0));
        let root_e = p.taylor_remainder(alpha(), alpha());
        assert!(root_e.approx_eq(Quaternion::ZERO, 1e-12));
    }

    #[test]
    fn serde_uses_quaternion_strings() {
        let p = QuadraticPoly::new(Quaternion::I, q(1.0, 0.0, -2.0, 0.5));
        let text = toml::to_string(&p).unwrap();
        assert!(text.contains("b = \"0+1i+0j+0k\""), "{text}");
        let back: QuadraticPoly = toml::from_str(&text).unwrap();
        assert_eq!(back.c.to_array(), p.c.to_array());
    }

    fn coord() -> impl Strategy<Value = f64> {
        -2.0f64..2.0
    }
    fn quat() -> impl Strategy<Value = Quaternion> {
        (coord(), coord(), coord(), coord()).prop_map(|(a, b, c, d)| q(a, b, c, d))
    }

    /// Coefficients of `P(x) conj(P)(x)` by direct convolution, `x` central.
    fn convolve(p: &QuadraticPoly) -> [Quaternion; 5] {
        let left = [p.c, p.b, Quaternion::ONE];
        let right = [p.c.conj(), p.b.conj(), Quaternion::ONE];
        let mut out = [Quaternion::ZERO; 5];
        for (i, l) in left.iter().enumerate() {
            for (j, r) in right.iter().enumerate() {
                out[i + j] += *l * *r;
            }
        }
        out
    }

    proptest! {
        #[test]
        fn quartic_is_the_product_polynomial(b in quat(), c in quat()) {
            let p = QuadraticPoly::new(b, c);
            let f = p.companion_quartic().unwrap();
            for (got, want) in f.coeffs.iter().zip(convolve(&p)) {
                prop_assert!(Quaternion::real(*got).approx_eq(want, 1e-12 * (1.0 + want.norm())));
            }
        }

        #[test]
        fn quartic_factorizes_at_real_arguments(b in quat(), c in quat(), x in coord()) {
            let p = QuadraticPoly::new(b, c);
            let f = p.companion_quartic().unwrap();
            let t = Quaternion::real(x);
            let prod = p.eval(t) * p.conj_poly().eval(t);
            let fx = f.eval(Complex64::new(x, 0.0));
            prop_assert!(prod.approx_eq(Quaternion::from_complex(fx), 1e-9 * (1.0 + fx.norm())));
        }

        #[test]
        fn prescribed_roots_are_roots((a, b) in (quat(), quat()).prop_filter("distinct classes", |(a, b)| a.congruent_distance(*b) > 1e-3)) {
            let p = QuadraticPoly::from_roots(a, b).unwrap();
            let scale = 1.0 + a.norm_sqr() + b.norm_sqr();
            // residual bound scales with conditioning of (β-α)
            let cond = 1.0 / (b - a).norm();
            prop_assert!(p.eval(a).norm() <= 1e-10 * scale);
            prop_assert!(p.eval(b).norm() <= 1e-10 * scale * cond.max(1.0));
            let alt = QuadraticPoly::from_roots_by_subtraction(a, b).unwrap();
            prop_assert!(alt.b.approx_eq(p.b, 1e-10 * scale * cond.max(1.0)));
        }

        #[test]
        fn char_poly_roots_are_class_representatives(x in quat()) {
            let [upper, lower] = char_poly(x).roots();
            let s = x.proj_s();
            prop_assert!((upper - s.to_complex()).norm() <= 1e-7 * (1.0 + x.norm()));
            prop_assert!((lower - s.to_complex().conj()).norm() <= 1e-7 * (1.0 + x.norm()));
        }
    }
}
