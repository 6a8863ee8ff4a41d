//! Hamilton quaternions over `f64`.
//!
//! A quaternion `a1 + a2 i + a3 j + a4 k` is stored as its four real
//! coordinates and identified with a point of R^4. Equality is only ever
//! tolerance based; see [`Quaternion::approx_eq`].

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuatError {
    #[error("division by a zero quaternion")]
    DivisionByZero,
    #[error("cannot parse quaternion `{input}`: {reason}")]
    Parse { input: String, reason: String },
}

/// A quaternion `re + i·i + j·j + k·k`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Quaternion {
    pub re: f64,
    pub i: f64,
    pub j: f64,
    pub k: f64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(re: f64, i: f64, j: f64, k: f64) -> Self {
        Quaternion { re, i, j, k }
    }

    pub const fn real(re: f64) -> Self {
        Quaternion::new(re, 0.0, 0.0, 0.0)
    }

    /// Embeds a complex number as `re + im·i`.
    pub fn from_complex(z: Complex64) -> Self {
        Quaternion::new(z.re, z.im, 0.0, 0.0)
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Quaternion::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.re, self.i, self.j, self.k]
    }

    /// The `re + i·i` part as a complex number (drops `j` and `k`).
    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.i)
    }

    pub fn conj(self) -> Self {
        Quaternion::new(self.re, -self.i, -self.j, -self.k)
    }

    /// `q + conj(q) = 2·re`.
    pub fn trace(self) -> f64 {
        2.0 * self.re
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.i * self.i + self.j * self.j + self.k * self.k
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Length of the vector part `(i, j, k)`.
    pub fn imag_norm(self) -> f64 {
        (self.i * self.i + self.j * self.j + self.k * self.k).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.i.is_finite() && self.j.is_finite() && self.k.is_finite()
    }

    pub fn scale(self, s: f64) -> Self {
        Quaternion::new(self.re * s, self.i * s, self.j * s, self.k * s)
    }

    pub fn dot(self, other: Quaternion) -> f64 {
        self.re * other.re + self.i * other.i + self.j * other.j + self.k * other.k
    }

    /// `conj(q) / |q|^2`.
    pub fn inv(self) -> Result<Self, QuatError> {
        let n2 = self.norm_sqr();
        if n2 == 0.0 || !n2.is_finite() {
            return Err(QuatError::DivisionByZero);
        }
        Ok(self.conj().scale(1.0 / n2))
    }

    /// Projection onto the complex plane: `a1 + a2 i`.
    pub fn proj_c(self) -> Self {
        Quaternion::new(self.re, self.i, 0.0, 0.0)
    }

    /// Congruency projection: the representative `a1 + |v| i` of the class `[q]`
    /// with non-negative imaginary part.
    pub fn proj_s(self) -> Self {
        Quaternion::new(self.re, self.imag_norm(), 0.0, 0.0)
    }

    /// Euclidean distance in R^4.
    pub fn distance(self, other: Quaternion) -> f64 {
        (self - other).norm()
    }

    /// Distance between the congruence classes `[self]` and `[other]`.
    pub fn congruent_distance(self, other: Quaternion) -> f64 {
        self.proj_s().distance(other.proj_s())
    }

    /// Componentwise comparison with absolute tolerance `tol`.
    pub fn approx_eq(self, other: Quaternion, tol: f64) -> bool {
        let d = self - other;
        d.re.abs() <= tol && d.i.abs() <= tol && d.j.abs() <= tol && d.k.abs() <= tol
    }

    /// `self · other · self⁻¹` style conjugation by `w`: returns `w q w⁻¹`.
    pub fn conjugate_by(self, w: Quaternion) -> Result<Self, QuatError> {
        Ok(w * self * w.inv()?)
    }

    /// Quaternion whose only non-zero coordinates are `re` and `i`.
    pub fn is_complex(self) -> bool {
        self.j == 0.0 && self.k == 0.0
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.re + o.re, self.i + o.i, self.j + o.j, self.k + o.k)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.re - o.re, self.i - o.i, self.j - o.j, self.k - o.k)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, o: Quaternion) {
        *self = *self + o;
    }
}

impl SubAssign for Quaternion {
    fn sub_assign(&mut self, o: Quaternion) {
        *self = *self - o;
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.re, -self.i, -self.j, -self.k)
    }
}

/// Hamilton product.
impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: Quaternion) -> Quaternion {
        let (a1, b1, c1, d1) = (self.re, self.i, self.j, self.k);
        let (a2, b2, c2, d2) = (o.re, o.i, o.j, o.k);
        Quaternion::new(
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        )
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    fn mul(self, s: f64) -> Quaternion {
        self.scale(s)
    }
}

impl Mul<Quaternion> for f64 {
    type Output = Quaternion;
    fn mul(self, q: Quaternion) -> Quaternion {
        q.scale(self)
    }
}

impl Div<f64> for Quaternion {
    type Output = Quaternion;
    fn div(self, s: f64) -> Quaternion {
        self.scale(1.0 / s)
    }
}

impl From<f64> for Quaternion {
    fn from(re: f64) -> Self {
        Quaternion::real(re)
    }
}

impl From<Complex64> for Quaternion {
    fn from(z: Complex64) -> Self {
        Quaternion::from_complex(z)
    }
}

/// Prints `a1+a2i+a3j+a4k` with explicit signs on every term. Each
/// coordinate uses the shortest decimal that parses back to the same `f64`.
impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = f.precision() {
            write!(
                f,
                "{:.p$}{:+.p$}i{:+.p$}j{:+.p$}k",
                self.re,
                self.i,
                self.j,
                self.k,
                p = p
            )
        } else {
            write!(f, "{}{:+}i{:+}j{:+}k", self.re, self.i, self.j, self.k)
        }
    }
}

/// Serialized as its text form, e.g. `"1-2i+0.5j+0k"`.
impl Serialize for Quaternion {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Quaternion {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for Quaternion {
    type Err = QuatError;

    /// Accepts sums of signed terms such as `1+2i-3j+4k`, `-1.3+2.1i`, `j`,
    /// `-2.5e-3k` or `7`. Whitespace is ignored; a unit may repeat.
    fn from_str(input: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| QuatError::Parse {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        let s: String = input.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(err("empty input"));
        }

        // split into signed terms; a sign right after an exponent marker belongs to the number
        let bytes = s.as_bytes();
        let mut terms = Vec::new();
        let mut start = 0;
        for idx in 1..bytes.len() {
            let c = bytes[idx];
            if (c == b'+' || c == b'-') && !matches!(bytes[idx - 1], b'e' | b'E') {
                terms.push(&s[start..idx]);
                start = idx;
            }
        }
        terms.push(&s[start..]);

        let mut q = Quaternion::ZERO;
        for term in terms {
            let (body, unit) = match term.chars().last() {
                Some(u @ ('i' | 'j' | 'k')) => (&term[..term.len() - 1], Some(u)),
                _ => (term, None),
            };
            let value = match body {
                "" | "+" => 1.0,
                "-" => -1.0,
                b => b
                    .parse::<f64>()
                    .map_err(|e| err(&format!("bad term `{term}`: {e}")))?,
            };
            if unit.is_none() && matches!(body, "" | "+" | "-") {
                return Err(err("dangling sign"));
            }
            if !value.is_finite() {
                return Err(err("non-finite coordinate"));
            }
            match unit {
                None => q.re += value,
                Some('i') => q.i += value,
                Some('j') => q.j += value,
                Some(_) => q.k += value,
            }
        }
        Ok(q)
    }
}
