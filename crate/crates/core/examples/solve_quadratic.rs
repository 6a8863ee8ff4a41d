//! Solves a quadratic given by prescribed roots, then one given by coefficients.

use qquad::quartic::{self, solve_quartic};
use qquad::{QuadraticPoly, Quaternion};

fn main() -> Result<(), qquad::Error> {
    let alpha: Quaternion = "-1.3+2.1i+0.17j-0.31k".parse()?;
    let beta: Quaternion = "1.4+0.7i-0.23j+0.28k".parse()?;
    let p = QuadraticPoly::from_roots(alpha, beta)?;
    println!("b = {:.5}", p.b);
    println!("c = {:.5}", p.c);

    let f = p.companion_quartic()?;
    println!("F coefficients (low degree first): {:?}", f.coeffs);
    for z in solve_quartic(&f)?.roots {
        println!("  F root {:+.6} {:+.6}i", z.re, z.im);
    }
    for r in quartic::solve(&p)? {
        println!("case {:<8} root {:.6}  |P| = {:.1e}", r.case.label(), r.value, r.residual);
    }

    let sphere = QuadraticPoly::new(Quaternion::ZERO, Quaternion::ONE);
    for r in quartic::solve(&sphere)? {
        println!("x^2 + 1: {:.3} spherical family = {}", r.value, r.is_spherical_family());
    }
    Ok(())
}
