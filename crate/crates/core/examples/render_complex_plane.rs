//! Renders the three non-plane tracings for one method into a temporary directory.

use qquad::render::{write_outputs, Scene};
use qquad::{IterationMethod, QuadraticPoly, Quaternion, RenderJob, Tracing};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alpha: Quaternion = "-1.3+2.1i+0.17j-0.31k".parse()?;
    let beta: Quaternion = "1.4+0.7i-0.23j+0.28k".parse()?;
    let p = QuadraticPoly::from_roots(alpha, beta)?;
    let dir = std::env::temp_dir().join("qquad_complex_plane");

    for tracing in [Tracing::QuaternionTrace, Tracing::ComplexProjection, Tracing::CongruencyProjection] {
        let job = RenderJob::new(p, IterationMethod::LeftNewton, tracing)
            .with_roots(vec![alpha, beta])
            .with_resolution(200);
        let stem = job.file_stem();
        let scene = Scene::new(job)?;
        let raster = scene.render(0)?;
        let out = write_outputs(&dir, &stem, &scene, &raster, true)?;
        let shares: Vec<String> = raster
            .classes
            .iter()
            .zip(raster.histogram())
            .map(|(c, n)| format!("{c:?}: {n}"))
            .collect();
        println!("{} -> {}", tracing.label(), out.ppm.display());
        println!("  {}", shares.join(", "));
    }
    Ok(())
}
