//! The quadratic x^2 - (i+j)x + k has the single root j, and Newton is
//! attracted along some directions and repelled along others.

use qquad::iterfun::{step, IterationMethod};
use qquad::quartic;
use qquad::{QuadraticPoly, Quaternion};

fn main() -> Result<(), qquad::Error> {
    let p = QuadraticPoly::new(-(Quaternion::I + Quaternion::J), Quaternion::K);
    let roots = quartic::solve(&p)?;
    for r in &roots {
        println!("root {} via case {} (|P| = {:.1e})", r.value, r.case.label(), r.residual);
    }

    let j = Quaternion::J;
    for eps in [1e-2, 1e-3, 1e-4] {
        let q1 = step(IterationMethod::LeftNewton, &p, j + Quaternion::real(eps)).expect("regular step");
        println!("eps {eps:.0e}: |q1 - j| / eps^2 = {:.4}", q1.distance(j) / (eps * eps));
    }

    let eps = 1e-3;
    let dirs = [Quaternion::ONE, Quaternion::I, Quaternion::J, Quaternion::K, Quaternion::new(1.0, 1.0, 0.0, 0.0)];
    for d in dirs {
        let d = d.scale(1.0 / d.norm());
        let q1 = step(IterationMethod::LeftNewton, &p, j + d.scale(eps)).expect("regular step");
        let ratio = q1.distance(j) / eps;
        let verdict = if ratio < 1.0 { "contracts" } else { "expands" };
        println!("direction {d:.3}: ratio {ratio:.3e} {verdict}");
    }
    Ok(())
}
