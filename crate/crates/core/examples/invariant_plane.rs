//! Jacobian spectra at both roots and the locally invariant planes.

use qquad::invplane::{eigen4, invariant_plane, jacobian, principal_angles, DEFAULT_FD_STEP};
use qquad::iterfun::IterationMethod;
use qquad::{QuadraticPoly, Quaternion};

fn main() -> Result<(), qquad::Error> {
    let alpha: Quaternion = "-1.3+2.1i+0.17j-0.31k".parse()?;
    let beta: Quaternion = "1.4+0.7i-0.23j+0.28k".parse()?;
    let p = QuadraticPoly::from_roots(alpha, beta)?;

    for (name, root, other) in [("alpha", alpha, beta), ("beta", beta, alpha)] {
        for method in IterationMethod::ALL {
            let jac = jacobian(method, &p, root, DEFAULT_FD_STEP)?;
            let eig = eigen4(&jac.entries)?;
            let mags: Vec<String> = eig.magnitudes().iter().map(|m| format!("{m:.3e}")).collect();
            println!("{name} {method}: |λ| = [{}]", mags.join(", "));
            match invariant_plane(method, &p, root, other) {
                Ok(plane) => println!("  u = {:.4?}\n  v = {:.4?}", plane.u, plane.v),
                Err(e) => println!("  no plane: {e}"),
            }
        }
    }

    let ln = invariant_plane(IterationMethod::LeftNewton, &p, alpha, beta)?;
    let rn = invariant_plane(IterationMethod::RightNewton, &p, alpha, beta)?;
    let h = invariant_plane(IterationMethod::Halley, &p, alpha, beta)?;
    let [a0, a1] = principal_angles(&ln, &h);
    println!("principal angles LN/Halley at alpha: {a0:.2e}, {a1:.2e}");
    let [b0, b1] = principal_angles(&ln, &rn);
    println!("principal angles LN/RN at alpha:     {b0:.2e}, {b1:.2e}");
    Ok(())
}
