//! Orbits of the three iterations from one seed, with their classification.

use qquad::iterfun::{classify_orbit, orbit, IterationMethod, OrbitOptions};
use qquad::{QuadraticPoly, Quaternion};

fn main() -> Result<(), qquad::Error> {
    let alpha: Quaternion = "-1.3+2.1i+0.17j-0.31k".parse()?;
    let beta: Quaternion = "1.4+0.7i-0.23j+0.28k".parse()?;
    let p = QuadraticPoly::from_roots(alpha, beta)?;
    let roots = [alpha, beta];
    let seed = Quaternion::new(0.2, 0.5, 0.0, 0.0);

    for method in IterationMethod::ALL {
        let o = orbit(method, &p, seed, &OrbitOptions::default());
        println!("{method}: {:?} after {} steps", o.termination, o.steps);
        for (n, q) in o.iterates.iter().enumerate().take(6) {
            println!("  {n:>2} {q:.6}");
        }
        println!("  class {:?}", classify_orbit(method, &p, &o, &roots));
    }
    Ok(())
}
