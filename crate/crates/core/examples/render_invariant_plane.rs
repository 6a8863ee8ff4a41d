//! Renders the invariant plane of alpha for every method and reports cycles.

use qquad::iterfun::TerminalClass;
use qquad::render::{write_outputs, Scene};
use qquad::{IterationMethod, QuadraticPoly, Quaternion, RenderJob, Tracing};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alpha: Quaternion = "-1.3+2.1i+0.17j-0.31k".parse()?;
    let beta: Quaternion = "1.4+0.7i-0.23j+0.28k".parse()?;
    let p = QuadraticPoly::from_roots(alpha, beta)?;
    let dir = std::env::temp_dir().join("qquad_invariant_plane");

    for method in IterationMethod::ALL {
        let job = RenderJob::new(p, method, Tracing::InvariantPlane(0))
            .with_roots(vec![alpha, beta])
            .with_resolution(100);
        let stem = job.file_stem();
        let scene = Scene::new(job)?;
        let raster = scene.render(0)?;
        let out = write_outputs(&dir, &stem, &scene, &raster, false)?;
        println!("{method}: half-width {:.4}, image {}", scene.half_width, out.ppm.display());
        for class in &raster.classes {
            let share = 100.0 * raster.fraction(class);
            match class {
                TerminalClass::Cycle(key) => {
                    let pts: Vec<String> = key.points().iter().map(|q| format!("{q:.2}")).collect();
                    println!("  {share:5.1}% cycle of period {}: {}", key.period(), pts.join(" -> "));
                }
                other => println!("  {share:5.1}% {other:?}"),
            }
        }
    }
    Ok(())
}
