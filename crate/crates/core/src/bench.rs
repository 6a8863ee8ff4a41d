//! Wall-clock timing of the tracing × method matrix.

use std::time::Instant;

use crate::iterfun::IterationMethod;
use crate::qpoly::QuadraticPoly;
use crate::quat::Quaternion;
use crate::render::{RenderError, RenderJob, Scene, Tracing};

pub const CSV_HEADER: &str = "method,left_newton,right_newton,halley";
pub const BENCH_RESOLUTION: usize = 100;

#[derive(Debug, Clone, Copy)]
pub struct BenchOptions {
    pub resolution: usize,
    pub repetitions: usize,
    pub workers: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            resolution: BENCH_RESOLUTION,
            repetitions: 3,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub tracing: Tracing,
    /// Median seconds, in [`IterationMethod::ALL`] order.
    pub seconds: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
    pub options: BenchOptions,
}

#[derive(Debug, Clone)]
pub struct SoftCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Median seconds to set up and render `job` on `workers` threads.
pub fn time_job(job: &RenderJob, repetitions: usize, workers: usize) -> Result<f64, RenderError> {
    let mut samples = Vec::with_capacity(repetitions);
    for _ in 0..repetitions.max(1) {
        let start = Instant::now();
        let scene = Scene::new(job.clone())?;
        std::hint::black_box(scene.render(workers)?);
        samples.push(start.elapsed().as_secs_f64());
    }
    Ok(median(samples))
}

/// Times the five table rows for every method, plus one Newton-on-`F` row.
pub fn run_bench(poly: QuadraticPoly, roots: Option<Vec<Quaternion>>, options: BenchOptions) -> Result<BenchTable, RenderError> {
    let job = |tracing, method| {
        let mut job = RenderJob::new(poly, method, tracing).with_resolution(options.resolution);
        job.roots = roots.clone();
        job
    };
    let mut rows = Vec::new();
    for tracing in Tracing::TABLE {
        let mut seconds = [0.0; 3];
        for (slot, method) in seconds.iter_mut().zip(IterationMethod::ALL) {
            *slot = time_job(&job(tracing, method), options.repetitions, options.workers)?;
        }
        rows.push(BenchRow { tracing, seconds });
    }
    let f = time_job(
        &job(Tracing::NewtonOnF, IterationMethod::LeftNewton),
        options.repetitions,
        options.workers,
    )?;
    rows.push(BenchRow {
        tracing: Tracing::NewtonOnF,
        seconds: [f; 3],
    });
    Ok(BenchTable { rows, options })
}

impl BenchTable {
    pub fn row(&self, tracing: Tracing) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.tracing == tracing)
    }

    /// Header, one line per row with 3-decimal seconds, and a final `workers` line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let [l, r, h] = row.seconds;
            out.push_str(&format!("{},{l:.3},{r:.3},{h:.3}\n", row.tracing.label()));
        }
        let w = self.options.workers;
        out.push_str(&format!("workers,{w},{w},{w}\n"));
        out
    }

    /// Relative-speed expectations; a failed check is a warning, not an error.
    pub fn soft_checks(&self) -> Vec<SoftCheck> {
        let mut checks = Vec::new();
        let cell = |t: Tracing, m: usize| self.row(t).map(|r| r.seconds[m]);
        let (ln, rn) = (0, 1);
        let mut order = |name: &str, slow: Option<f64>, fast: Option<f64>| {
            if let (Some(s), Some(f)) = (slow, fast) {
                checks.push(SoftCheck {
                    name: name.into(),
                    passed: s > f,
                    detail: format!("{s:.4}s vs {f:.4}s"),
                });
            }
        };
        order(
            "alpha plane: left_newton slower than right_newton",
            cell(Tracing::InvariantPlane(0), ln),
            cell(Tracing::InvariantPlane(0), rn),
        );
        order(
            "beta plane: right_newton slower than left_newton",
            cell(Tracing::InvariantPlane(1), rn),
            cell(Tracing::InvariantPlane(1), ln),
        );
        for (m, method) in IterationMethod::ALL.iter().enumerate() {
            for t in [Tracing::ComplexProjection, Tracing::CongruencyProjection] {
                order(
                    &format!("{method}: {t} faster than quaternion tracing"),
                    cell(Tracing::QuaternionTrace, m),
                    cell(t, m),
                );
            }
        }
        if let Some(f) = cell(Tracing::NewtonOnF, 0) {
            let fastest_rival = self
                .rows
                .iter()
                .filter(|r| r.tracing != Tracing::NewtonOnF)
                .flat_map(|r| r.seconds)
                .fold(f64::INFINITY, f64::min);
            checks.push(SoftCheck {
                name: "newton_on_f fastest".into(),
                passed: f < fastest_rival,
                detail: format!("{f:.4}s vs fastest other cell {fastest_rival:.4}s"),
            });
        }
        checks
    }
}
