//! Hybrid iterations mixing quaternion steps on P with complex Newton on F.

use qquad::render::{HybridSchedule, Scene};
use qquad::{IterationMethod, QuadraticPoly, Quaternion, RenderJob, Tracing};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alpha: Quaternion = "-1.3+2.1i+0.17j-0.31k".parse()?;
    let beta: Quaternion = "1.4+0.7i-0.23j+0.28k".parse()?;
    let p = QuadraticPoly::from_roots(alpha, beta)?;

    let tracings = [
        Tracing::NewtonOnF,
        Tracing::Hybrid(HybridSchedule::LiftEveryStep),
        Tracing::Hybrid(HybridSchedule::TwoPOneFNoLift),
    ];
    for tracing in tracings {
        let job = RenderJob::new(p, IterationMethod::LeftNewton, tracing)
            .with_roots(vec![alpha, beta])
            .with_resolution(100);
        let scene = Scene::new(job)?;
        let raster = scene.render(0)?;
        println!("{tracing}:");
        for (class, n) in raster.classes.iter().zip(raster.histogram()) {
            println!("  {class:?}: {n} pixels");
        }
        let centre = raster.pixel(50, 50);
        println!("  centre pixel: {:?} in {} steps, terminal {:.6}", centre.termination, centre.steps, centre.terminal);
    }
    Ok(())
}
