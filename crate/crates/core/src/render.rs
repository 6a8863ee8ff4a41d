//! Escape-time polynomiographs of `P(x) = x^2 + bx + c`.
//!
//! Every pixel of a square grid is a seed. The seed is iterated until the
//! stopping rule, a short cycle, a singular step or the cap, and the pixel is
//! colored by the basin it ends in and by how many steps that took.
//!
//! | tracing                 | seeds                   | after each step |
//! |-------------------------|-------------------------|-----------------|
//! | `QuaternionTrace`       | complex plane           | nothing         |
//! | `ComplexProjection`     | complex plane           | `proj_c`        |
//! | `CongruencyProjection`  | complex plane           | `proj_s`        |
//! | `InvariantPlane(r)`     | invariant plane at root | nothing         |
//! | `NewtonOnF`             | complex plane           | complex Newton on `F` instead |
//! | `Hybrid(_)`             | complex plane           | see [`HybridSchedule`] |

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::invplane::{invariant_plane, InvariantPlane};
use crate::iterfun::{
    classify_terminal, refine_cycle, run_orbit, step, IterationMethod, OrbitOptions, StepError, TerminalClass,
    Termination, SINGULAR_THRESHOLD,
};
use crate::qpoly::{QuadraticPoly, RealQuartic};
use crate::quartic::{solve, solve_quartic};
use crate::quat::Quaternion;

pub const DEFAULT_HALF_WIDTH: f64 = 2.3;
pub const DEFAULT_RESOLUTION: usize = 1024;
pub const DEFAULT_HYBRID_EPS: f64 = 1e-6;
pub const METADATA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("invalid render job: {0}")]
    InvalidJob(String),
    #[error(transparent)]
    Numeric(#[from] crate::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("png encoding failed: {0}")]
    Png(#[from] png::EncodingError),
    #[error("metadata serialization failed: {0}")]
    Metadata(#[from] toml::ser::Error),
}

/// How quaternion steps on `P` and complex steps on `F` are interleaved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HybridSchedule {
    /// `y = proj_s(f(x))`, then lift `y` back to a quaternion in its class
    /// through `P̄(y) y P̄(y)⁻¹` (or the same from `ȳ`) when both are defined.
    LiftEveryStep,
    /// Two quaternion steps on `P`, `proj_s`, one complex Newton step on `F`;
    /// the iterate stays complex.
    TwoPOneFNoLift,
}

impl HybridSchedule {
    pub fn name(self) -> &'static str {
        match self {
            HybridSchedule::LiftEveryStep => "lift_every_step",
            HybridSchedule::TwoPOneFNoLift => "two_p_one_f",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Tracing {
    QuaternionTrace,
    ComplexProjection,
    CongruencyProjection,
    /// Seeds on the invariant plane of the root with this index.
    InvariantPlane(usize),
    NewtonOnF,
    Hybrid(HybridSchedule),
}

impl Tracing {
    /// The five tracings of the timing table, in row order.
    pub const TABLE: [Tracing; 5] = [
        Tracing::QuaternionTrace,
        Tracing::ComplexProjection,
        Tracing::CongruencyProjection,
        Tracing::InvariantPlane(0),
        Tracing::InvariantPlane(1),
    ];

    pub fn label(self) -> String {
        match self {
            Tracing::QuaternionTrace => "Method I: Tracing Quaternion Iterates".into(),
            Tracing::ComplexProjection => "Method II: Tracing Intermediate Projection".into(),
            Tracing::CongruencyProjection => "Method III: Tracing Congruence Projection".into(),
            Tracing::InvariantPlane(0) => "Method IV: Tracing Iterates in Invariant Plane of alpha".into(),
            Tracing::InvariantPlane(1) => "Method IV: Tracing Iterates in Invariant Plane of beta".into(),
            Tracing::InvariantPlane(r) => format!("Method IV: Tracing Iterates in Invariant Plane of root {r}"),
            Tracing::NewtonOnF => "Newton on F".into(),
            Tracing::Hybrid(s) => format!("Hybrid ({})", s.name()),
        }
    }

    /// Short token used in file names.
    pub fn slug(self) -> String {
        match self {
            Tracing::QuaternionTrace => "quat".into(),
            Tracing::ComplexProjection => "cproj".into(),
            Tracing::CongruencyProjection => "sproj".into(),
            Tracing::InvariantPlane(r) => format!("plane{r}"),
            Tracing::NewtonOnF => "newton_f".into(),
            Tracing::Hybrid(HybridSchedule::LiftEveryStep) => "hybrid_lift".into(),
            Tracing::Hybrid(HybridSchedule::TwoPOneFNoLift) => "hybrid_2p1f".into(),
        }
    }
}

impl fmt::Display for Tracing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tracing::QuaternionTrace => f.write_str("quaternion"),
            Tracing::ComplexProjection => f.write_str("complex_projection"),
            Tracing::CongruencyProjection => f.write_str("congruency_projection"),
            Tracing::InvariantPlane(r) => write!(f, "invariant_plane:{r}"),
            Tracing::NewtonOnF => f.write_str("newton_on_f"),
            Tracing::Hybrid(s) => write!(f, "hybrid:{}", s.name()),
        }
    }
}

impl FromStr for Tracing {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s.as_str(), None),
        };
        let t = match (head, arg) {
            ("quaternion" | "i", None) => Tracing::QuaternionTrace,
            ("complex_projection" | "ii", None) => Tracing::ComplexProjection,
            ("congruency_projection" | "iii", None) => Tracing::CongruencyProjection,
            ("invariant_plane" | "iv", Some(r)) => {
                Tracing::InvariantPlane(r.parse().map_err(|_| format!("bad root index `{r}`"))?)
            }
            ("newton_on_f", None) => Tracing::NewtonOnF,
            ("hybrid", Some("lift_every_step")) => Tracing::Hybrid(HybridSchedule::LiftEveryStep),
            ("hybrid", Some("two_p_one_f")) => Tracing::Hybrid(HybridSchedule::TwoPOneFNoLift),
            _ => return Err(format!("unknown tracing `{s}`")),
        };
        Ok(t)
    }
}

impl TryFrom<String> for Tracing {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Tracing> for String {
    fn from(t: Tracing) -> String {
        t.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Palette {
    #[default]
    Classic,
    Mono,
}

impl FromStr for Palette {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "classic" => Ok(Palette::Classic),
            "mono" => Ok(Palette::Mono),
            other => Err(format!("unknown palette `{other}`")),
        }
    }
}

/// Base colors of root basins, in root order.
pub const ROOT_COLORS: [[u8; 3]; 4] = [[220, 30, 30], [250, 210, 30], [40, 120, 230], [40, 180, 80]];
/// Base colors of cycle basins, in cycle-key order, reused past the end.
pub const CYCLE_COLORS: [[u8; 3]; 5] = [[150, 60, 210], [250, 130, 20], [20, 200, 200], [230, 90, 170], [140, 140, 40]];
pub const NO_CONVERGENCE_COLOR: [u8; 3] = [0, 0, 0];

/// Brightness factor for a pixel that needed `steps` iterations.
pub fn shade(steps: u32) -> f64 {
    0.15 + 0.85 * (-(steps as f64) / 10.0).exp()
}

impl Palette {
    /// Color of the class at `index` in a raster's class table.
    pub fn color(self, class: &TerminalClass, index: usize, root_count: usize, steps: u32) -> [u8; 3] {
        let base = match class {
            TerminalClass::NoConvergence => return NO_CONVERGENCE_COLOR,
            TerminalClass::Root(r) => ROOT_COLORS[r % ROOT_COLORS.len()],
            TerminalClass::Cycle(_) => CYCLE_COLORS[(index - root_count) % CYCLE_COLORS.len()],
        };
        let s = shade(steps);
        match self {
            Palette::Classic => base.map(|c| (c as f64 * s).round() as u8),
            Palette::Mono => [(255.0 * s).round() as u8; 3],
        }
    }
}

#[derive(Debug, Clone)]
pub struct RenderJob {
    pub poly: QuadraticPoly,
    /// Classification targets; solved from `poly` when absent.
    pub roots: Option<Vec<Quaternion>>,
    pub method: IterationMethod,
    pub tracing: Tracing,
    /// Window center in plane coordinates.
    pub center: [f64; 2],
    /// Half-width `s`; the default depends on the tracing.
    pub half_width: Option<f64>,
    pub resolution: usize,
    pub stop_tol: f64,
    pub cap: usize,
    pub cycle_check: bool,
    pub hybrid_eps: f64,
    pub palette: Palette,
}

impl RenderJob {
    pub fn new(poly: QuadraticPoly, method: IterationMethod, tracing: Tracing) -> Self {
        let opts = OrbitOptions::default();
        RenderJob {
            poly,
            roots: None,
            method,
            tracing,
            center: [0.0, 0.0],
            half_width: None,
            resolution: DEFAULT_RESOLUTION,
            stop_tol: opts.stop_tol,
            cap: opts.cap,
            cycle_check: opts.cycle_check,
            hybrid_eps: DEFAULT_HYBRID_EPS,
            palette: Palette::Classic,
        }
    }

    pub fn with_roots(mut self, roots: Vec<Quaternion>) -> Self {
        self.roots = Some(roots);
        self
    }

    pub fn with_resolution(mut self, resolution: usize) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn with_window(mut self, center: [f64; 2], half_width: f64) -> Self {
        self.center = center;
        self.half_width = Some(half_width);
        self
    }

    pub fn orbit_options(&self) -> OrbitOptions {
        OrbitOptions {
            stop_tol: self.stop_tol,
            cap: self.cap,
            cycle_check: self.cycle_check,
        }
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        let bad = |m: String| Err(RenderError::InvalidJob(m));
        if self.resolution == 0 {
            return bad("resolution must be at least 1".into());
        }
        if let Some(s) = self.half_width {
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("half-width must be positive, got {s}"));
            }
        }
        if !(self.stop_tol > 0.0 && self.stop_tol.is_finite()) {
            return bad(format!("stop_tol must be positive, got {}", self.stop_tol));
        }
        if !self.center.iter().all(|c| c.is_finite()) || !self.poly.b.is_finite() || !self.poly.c.is_finite() {
            return bad("non-finite window or coefficients".into());
        }
        if let Tracing::InvariantPlane(r) = self.tracing {
            if let Some(roots) = &self.roots {
                if r >= roots.len() {
                    return bad(format!("root index {r} out of range ({} roots)", roots.len()));
                }
            }
        }
        Ok(())
    }

    /// Deterministic file stem encoding the job parameters.
    pub fn file_stem(&self) -> String {
        format!(
            "{}_{}_r{}{}",
            self.tracing.slug(),
            self.method.name(),
            self.resolution,
            if self.cycle_check { "" } else { "_nocycle" }
        )
    }
}

/// Outcome of one seed.
#[derive(Debug, Clone)]
pub struct PixelRecord {
    pub class: TerminalClass,
    pub termination: Termination,
    pub steps: u32,
    pub terminal: Quaternion,
}

/// Bitwise equality of the terminal value.
impl PartialEq for PixelRecord {
    fn eq(&self, other: &Self) -> bool {
        self.class == other.class
            && self.termination == other.termination
            && self.steps == other.steps
            && self.terminal.to_array().map(f64::to_bits) == other.terminal.to_array().map(f64::to_bits)
    }
}

/// A job with everything derived from the polynomial resolved once.
#[derive(Debug, Clone)]
pub struct Scene {
    pub job: RenderJob,
    /// Roots of `P`.
    pub poly_roots: Vec<Quaternion>,
    /// Roots of the companion quartic, sorted by real then imaginary part.
    pub f_roots: [Complex64; 4],
    /// What terminals are classified against.
    pub targets: Vec<Quaternion>,
    pub plane: Option<InvariantPlane>,
    pub half_width: f64,
    /// Grid step `h = 2s / resolution`.
    pub grid_step: f64,
    quartic: RealQuartic,
}

impl Scene {
    pub fn new(job: RenderJob) -> Result<Scene, RenderError> {
        job.validate()?;
        let quartic = job.poly.companion_quartic().map_err(crate::Error::from)?;
        let f_roots = solve_quartic(&quartic).map_err(crate::Error::from)?.roots;
        let poly_roots = match &job.roots {
            Some(r) => r.clone(),
            None => solve(&job.poly)?.into_iter().map(|r| r.value).collect(),
        };
        let plane = match job.tracing {
            Tracing::InvariantPlane(r) => {
                if r >= poly_roots.len() || poly_roots.len() < 2 {
                    return Err(RenderError::InvalidJob(format!(
                        "invariant plane of root {r} needs two distinct roots, found {}",
                        poly_roots.len()
                    )));
                }
                let other = poly_roots[if r == 0 { 1 } else { 0 }];
                Some(invariant_plane(job.method, &job.poly, poly_roots[r], other).map_err(crate::Error::from)?)
            }
            _ => None,
        };
        let half_width = match (job.half_width, &plane) {
            (Some(s), _) => s,
            (None, Some(pl)) => pl.anchor_offset(),
            (None, None) => DEFAULT_HALF_WIDTH,
        };
        let targets = match job.tracing {
            Tracing::NewtonOnF => f_roots.iter().map(|z| Quaternion::from_complex(*z)).collect(),
            _ => poly_roots.clone(),
        };
        Ok(Scene {
            grid_step: 2.0 * half_width / job.resolution as f64,
            job,
            poly_roots,
            f_roots,
            targets,
            plane,
            half_width,
            quartic,
        })
    }

    /// Plane coordinates of the center of pixel `(px, py)`; `py` grows downward.
    pub fn pixel_coordinates(&self, px: usize, py: usize) -> (f64, f64) {
        let (h, s) = (self.grid_step, self.half_width);
        let x = self.job.center[0] + (px as f64 + 0.5) * h - s;
        let y = self.job.center[1] + s - (py as f64 + 0.5) * h;
        (x, y)
    }

    pub fn seed_for_pixel(&self, px: usize, py: usize) -> Quaternion {
        let (x, y) = self.pixel_coordinates(px, py);
        match &self.plane {
            Some(plane) => plane.point(x, y),
            None => Quaternion::new(x, y, 0.0, 0.0),
        }
    }

    fn newton_on_f(&self, q: Quaternion) -> Result<Quaternion, StepError> {
        let z = q.to_complex();
        let d = self.quartic.eval_deriv(z);
        if d.norm() < SINGULAR_THRESHOLD {
            return Err(StepError::SingularDerivative(d.norm()));
        }
        let next = z - self.quartic.eval(z) / d;
        if next.is_finite() {
            Ok(Quaternion::from_complex(next))
        } else {
            Err(StepError::NonFinite)
        }
    }

    /// `P̄(y) y P̄(y)⁻¹`, or the same from `ȳ` when that has the smaller residual.
    fn lift(&self, y: Quaternion) -> Quaternion {
        let eps = self.job.hybrid_eps;
        let conj_poly = self.job.poly.conj_poly();
        let (py, pyc) = (conj_poly.eval(y), conj_poly.eval(y.conj()));
        if py.norm() <= eps || pyc.norm() <= eps {
            return y;
        }
        let (Ok(q), Ok(q2)) = (y.conjugate_by(py), y.conj().conjugate_by(pyc)) else {
            return y;
        };
        if self.job.poly.eval(q2).norm() < self.job.poly.eval(q).norm() {
            q2
        } else {
            q
        }
    }

    /// One application of the tracing's composed map.
    pub fn apply(&self, q: Quaternion) -> Result<Quaternion, StepError> {
        let (m, p) = (self.job.method, &self.job.poly);
        match self.job.tracing {
            Tracing::QuaternionTrace | Tracing::InvariantPlane(_) => step(m, p, q),
            Tracing::ComplexProjection => step(m, p, q).map(Quaternion::proj_c),
            Tracing::CongruencyProjection => step(m, p, q).map(Quaternion::proj_s),
            Tracing::NewtonOnF => self.newton_on_f(q),
            Tracing::Hybrid(HybridSchedule::LiftEveryStep) => {
                if p.eval(q).norm() <= self.job.hybrid_eps {
                    return Ok(q);
                }
                Ok(self.lift(step(m, p, q)?.proj_s()))
            }
            Tracing::Hybrid(HybridSchedule::TwoPOneFNoLift) => {
                let x = step(m, p, step(m, p, q)?)?;
                self.newton_on_f(x.proj_s())
            }
        }
    }

    /// Hybrid orbits that settle are finished off: the lifted scheme until
    /// `|P(x)| ≤ eps`, the unlifted one by Newton on `F`.
    fn finish_hybrid(&self, schedule: HybridSchedule, mut x: Quaternion, steps: &mut usize) -> Quaternion {
        let budget = self.job.cap.max(50);
        for _ in 0..budget {
            let next = match schedule {
                HybridSchedule::LiftEveryStep if self.job.poly.eval(x).norm() <= self.job.hybrid_eps => break,
                HybridSchedule::LiftEveryStep => self.apply(x),
                HybridSchedule::TwoPOneFNoLift => self.newton_on_f(x),
            };
            let Ok(next) = next else { break };
            let moved = next.distance(x);
            x = next;
            *steps += 1;
            if schedule == HybridSchedule::TwoPOneFNoLift && moved <= 1e-13 * (1.0 + x.norm()) {
                break;
            }
        }
        x
    }

    pub fn trace_pixel(&self, seed: Quaternion) -> PixelRecord {
        let mut end = run_orbit(seed, &self.job.orbit_options(), |q| self.apply(q), |_| {});
        if let (Tracing::Hybrid(schedule), Termination::FixedPoint) = (self.job.tracing, end.termination) {
            end.terminal = self.finish_hybrid(schedule, end.terminal, &mut end.steps);
        }
        let refined = refine_cycle(end.cycle_points(), |q| self.apply(q));
        PixelRecord {
            class: classify_terminal(end.termination, end.terminal, &refined, &self.targets),
            termination: end.termination,
            steps: end.steps as u32,
            terminal: end.terminal,
        }
    }

    pub fn trace_pixel_at(&self, px: usize, py: usize) -> PixelRecord {
        self.trace_pixel(self.seed_for_pixel(px, py))
    }

    /// Traces every pixel on `workers` threads (0 picks the rayon default).
    pub fn render(&self, workers: usize) -> Result<Raster, RenderError> {
        let res = self.job.resolution;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| RenderError::InvalidJob(format!("cannot start worker pool: {e}")))?;
        let pixels: Vec<PixelRecord> =
            pool.install(|| (0..res * res).into_par_iter().map(|i| self.trace_pixel_at(i % res, i / res)).collect());
        Ok(Raster::assemble(res, res, pixels, self.targets.len()))
    }

    /// Iterates the composed map from `q` until it stops moving.
    pub fn polish(&self, mut q: Quaternion) -> Quaternion {
        for _ in 0..200 {
            match self.apply(q) {
                Ok(n) => {
                    let moved = n.distance(q);
                    q = n;
                    if moved <= 1e-13 * (1.0 + q.norm()) {
                        break;
                    }
                }
                Err(_) => break,
            }
        }
        q
    }
}

pub fn render(job: &RenderJob, workers: usize) -> Result<Raster, RenderError> {
    Scene::new(job.clone())?.render(workers)
}

/// Per-pixel records in row-major order, top row first, with the class table
/// `roots..., cycles (sorted by key)..., NoConvergence`.
#[derive(Debug, Clone)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<PixelRecord>,
    pub classes: Vec<TerminalClass>,
    pub class_ids: Vec<usize>,
    pub root_count: usize,
}

impl Raster {
    pub fn assemble(width: usize, height: usize, pixels: Vec<PixelRecord>, root_count: usize) -> Raster {
        let cycles: BTreeSet<&TerminalClass> =
            pixels.iter().map(|p| &p.class).filter(|c| matches!(c, TerminalClass::Cycle(_))).collect();
        let mut classes: Vec<TerminalClass> = (0..root_count).map(TerminalClass::Root).collect();
        classes.extend(cycles.into_iter().cloned());
        classes.push(TerminalClass::NoConvergence);
        let class_ids = pixels
            .iter()
            .map(|p| match &p.class {
                TerminalClass::Root(r) => *r,
                TerminalClass::NoConvergence => classes.len() - 1,
                c => classes[root_count..].binary_search(c).map(|i| i + root_count).unwrap_or(classes.len() - 1),
            })
            .collect();
        Raster {
            width,
            height,
            pixels,
            classes,
            class_ids,
            root_count,
        }
    }

    pub fn pixel(&self, px: usize, py: usize) -> &PixelRecord {
        &self.pixels[py * self.width + px]
    }

    /// Pixel count per entry of the class table.
    pub fn histogram(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for &id in &self.class_ids {
            counts[id] += 1;
        }
        counts
    }

    pub fn fraction(&self, class: &TerminalClass) -> f64 {
        let n = self.pixels.iter().filter(|p| &p.class == class).count();
        n as f64 / self.pixels.len() as f64
    }

    pub fn rgb(&self, palette: Palette) -> Vec<u8> {
        self.pixels
            .iter()
            .zip(&self.class_ids)
            .flat_map(|(p, &id)| palette.color(&p.class, id, self.root_count, p.steps))
            .collect()
    }
}

/// Binary portable pixmap, maxval 255.
pub fn encode_ppm(raster: &Raster, palette: Palette) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", raster.width, raster.height).into_bytes();
    out.extend(raster.rgb(palette));
    out
}

pub fn encode_png(raster: &Raster, palette: Palette) -> Result<Vec<u8>, RenderError> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, raster.width as u32, raster.height as u32);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        encoder.set_compression(png::Compression::Default);
        let mut writer = encoder.write_header()?;
        writer.write_image_data(&raster.rgb(palette))?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ClassCount {
    pub class: String,
    pub pixels: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FixedPointEntry {
    pub root: usize,
    pub value: String,
    pub pixels: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CycleEntry {
    pub period: usize,
    pub points: Vec<String>,
    pub pixels: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PlaneEntry {
    pub root: String,
    pub u: [f64; 4],
    pub v: [f64; 4],
    pub eigenvalues: [[f64; 2]; 2],
}

/// Sidecar record written next to every image.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RenderMetadata {
    pub version: u32,
    pub tracing: String,
    pub method: String,
    pub b: String,
    pub c: String,
    pub resolution: usize,
    pub center: [f64; 2],
    pub half_width: f64,
    pub stop_tol: f64,
    pub cap: usize,
    pub cycle_check: bool,
    pub palette: Palette,
    pub roots: Vec<String>,
    pub f_roots: Vec<[f64; 2]>,
    pub plane: Option<PlaneEntry>,
    pub fixed_points: Vec<FixedPointEntry>,
    pub cycles: Vec<CycleEntry>,
    pub histogram: Vec<ClassCount>,
}

fn class_name(class: &TerminalClass) -> String {
    match class {
        TerminalClass::Root(r) => format!("root {r}"),
        TerminalClass::Cycle(k) => format!("cycle {}", k.period()),
        TerminalClass::NoConvergence => "no convergence".into(),
    }
}

impl RenderMetadata {
    pub fn new(scene: &Scene, raster: &Raster) -> RenderMetadata {
        let job = &scene.job;
        let hist = raster.histogram();
        let fixed_points = (0..raster.root_count)
            .filter_map(|r| {
                let first = raster
                    .pixels
                    .iter()
                    .find(|p| p.class == TerminalClass::Root(r) && p.termination == Termination::FixedPoint)?;
                Some(FixedPointEntry {
                    root: r,
                    value: format!("{:.6}", scene.polish(first.terminal)),
                    pixels: hist[r],
                })
            })
            .collect();
        let cycles = raster
            .classes
            .iter()
            .zip(&hist)
            .filter_map(|(c, &n)| match c {
                TerminalClass::Cycle(k) => Some(CycleEntry {
                    period: k.period(),
                    points: k.points().iter().map(|q| format!("{q:.3}")).collect(),
                    pixels: n,
                }),
                _ => None,
            })
            .collect();
        RenderMetadata {
            version: METADATA_VERSION,
            tracing: job.tracing.to_string(),
            method: job.method.to_string(),
            b: job.poly.b.to_string(),
            c: job.poly.c.to_string(),
            resolution: job.resolution,
            center: job.center,
            half_width: scene.half_width,
            stop_tol: job.stop_tol,
            cap: job.cap,
            cycle_check: job.cycle_check,
            palette: job.palette,
            roots: scene.poly_roots.iter().map(|q| q.to_string()).collect(),
            f_roots: scene.f_roots.iter().map(|z| [z.re, z.im]).collect(),
            plane: scene.plane.map(|p| PlaneEntry {
                root: p.root.to_string(),
                u: p.u,
                v: p.v,
                eigenvalues: p.eigvals.map(|z| [z.re, z.im]),
            }),
            fixed_points,
            cycles,
            histogram: raster
                .classes
                .iter()
                .zip(hist)
                .map(|(c, n)| ClassCount {
                    class: class_name(c),
                    pixels: n,
                })
                .collect(),
        }
    }

    pub fn to_toml(&self) -> Result<String, RenderError> {
        Ok(toml::to_string(self)?)
    }
}

/// Files produced for one job.
#[derive(Debug, Clone)]
pub struct RenderOutput {
    pub ppm: PathBuf,
    pub png: Option<PathBuf>,
    pub metadata: PathBuf,
}

/// Writes `<stem>.ppm`, optionally `<stem>.png`, and `<stem>.toml` into `dir`.
pub fn write_outputs(
    dir: &Path,
    stem: &str,
    scene: &Scene,
    raster: &Raster,
    with_png: bool,
) -> Result<RenderOutput, RenderError> {
    std::fs::create_dir_all(dir)?;
    let palette = scene.job.palette;
    let ppm = dir.join(format!("{stem}.ppm"));
    std::fs::File::create(&ppm)?.write_all(&encode_ppm(raster, palette))?;
    let png = if with_png {
        let path = dir.join(format!("{stem}.png"));
        std::fs::write(&path, encode_png(raster, palette)?)?;
        Some(path)
    } else {
        None
    };
    let metadata = dir.join(format!("{stem}.toml"));
    std::fs::write(&metadata, RenderMetadata::new(scene, raster).to_toml()?)?;
    Ok(RenderOutput { ppm, png, metadata })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: f64, b: f64, c: f64, d: f64) -> Quaternion {
        Quaternion::new(a, b, c, d)
    }

    fn alpha() -> Quaternion {
        q(-1.3, 2.1, 0.17, -0.31)
    }

    fn beta() -> Quaternion {
        q(1.4, 0.7, -0.23, 0.28)
    }

    fn reference_job(method: IterationMethod, tracing: Tracing) -> RenderJob {
        RenderJob::new(QuadraticPoly::from_roots(alpha(), beta()).unwrap(), method, tracing)
            .with_roots(vec![alpha(), beta()])
    }

    #[test]
    fn seeds_follow_the_affine_pixel_map() {
        let job = reference_job(IterationMethod::LeftNewton, Tracing::QuaternionTrace).with_resolution(5);
        let scene = Scene::new(job).unwrap();
        assert!(scene.seed_for_pixel(2, 2).approx_eq(Quaternion::ZERO, 1e-15));

        let scene = Scene::new(reference_job(IterationMethod::LeftNewton, Tracing::QuaternionTrace)).unwrap();
        let h = 4.6 / 1024.0;
        let corner = scene.seed_for_pixel(0, 0);
        assert!(corner.approx_eq(q(-2.3 + h / 2.0, 2.3 - h / 2.0, 0.0, 0.0), 1e-12));
    }

    #[test]
    fn plane_center_pixel_is_the_root() {
        let job = reference_job(IterationMethod::Halley, Tracing::InvariantPlane(0)).with_resolution(101);
        let scene = Scene::new(job).unwrap();
        assert!(scene.seed_for_pixel(50, 50).approx_eq(alpha(), 1e-12));
        // the other root projects onto the right edge midpoint
        let (x, y) = scene.plane.unwrap().coordinates(beta());
        assert!((x - scene.half_width).abs() < 1e-12 && y.abs() < 1e-12);
    }

    #[test]
    fn projected_maps_keep_their_published_fixed_points() {
        let cases = [
            (Tracing::ComplexProjection, IterationMethod::LeftNewton, (-1.17679, 2.09022)),
            (Tracing::CongruencyProjection, IterationMethod::RightNewton, (1.33545, 0.687986)),
        ];
        for (tracing, method, (re, im)) in cases {
            let scene = Scene::new(reference_job(method, tracing)).unwrap();
            let seed = q(re + 0.003, im - 0.002, 0.0, 0.0);
            let rec = scene.trace_pixel(seed);
            assert_eq!(rec.termination, Termination::FixedPoint);
            assert!(scene.polish(rec.terminal).distance(q(re, im, 0.0, 0.0)) < 1e-3);
        }
    }

    #[test]
    fn single_pixel_at_a_root() {
        let p = QuadraticPoly::from_roots(q(0.0, 0.0, 0.0, 0.0), q(1.0, 1.0, 0.0, 0.0)).unwrap();
        let job = RenderJob::new(p, IterationMethod::LeftNewton, Tracing::QuaternionTrace)
            .with_resolution(1)
            .with_window([0.0, 0.0], 1.0);
        let raster = render(&job, 1).unwrap();
        assert_eq!(raster.pixels.len(), 1);
        assert!(raster.pixels[0].steps <= 1);
        let root = raster.pixels[0].class.clone();
        assert!(matches!(root, TerminalClass::Root(_)));
        assert!(raster.pixels[0].terminal.distance(Quaternion::ZERO) < 1e-12);
    }

    #[test]
    fn complex_polynomials_give_voronoi_basins() {
        let (r0, r1) = (q(1.0, 0.5, 0.0, 0.0), q(-1.0, 0.3, 0.0, 0.0));
        let p = QuadraticPoly::from_roots(r0, r1).unwrap();
        let job = RenderJob::new(p, IterationMethod::LeftNewton, Tracing::QuaternionTrace)
            .with_roots(vec![r0, r1])
            .with_resolution(60);
        let scene = Scene::new(job).unwrap();
        let raster = scene.render(2).unwrap();
        let mut agree = 0;
        for py in 0..60 {
            for px in 0..60 {
                let seed = scene.seed_for_pixel(px, py);
                let nearer = if seed.distance(r0) <= seed.distance(r1) { 0 } else { 1 };
                agree += (raster.pixel(px, py).class == TerminalClass::Root(nearer)) as usize;
            }
        }
        assert!(agree as f64 >= 0.98 * 3600.0, "{agree}");
    }

    #[test]
    fn rendering_ignores_worker_count() {
        let tracings = [
            Tracing::QuaternionTrace,
            Tracing::CongruencyProjection,
            Tracing::InvariantPlane(0),
            Tracing::NewtonOnF,
            Tracing::Hybrid(HybridSchedule::LiftEveryStep),
        ];
        for tracing in tracings {
            for method in IterationMethod::ALL {
                let job = reference_job(method, tracing).with_resolution(24);
                let a = render(&job, 1).unwrap();
                let b = render(&job, 3).unwrap();
                assert_eq!(a.pixels, b.pixels, "{tracing} {method}");
                assert_eq!(encode_ppm(&a, Palette::Classic), encode_ppm(&b, Palette::Classic));
                assert_eq!(encode_png(&a, Palette::Mono).unwrap(), encode_png(&b, Palette::Mono).unwrap());
            }
        }
    }

    #[test]
    fn ppm_layout() {
        let job = reference_job(IterationMethod::LeftNewton, Tracing::ComplexProjection).with_resolution(3);
        let raster = render(&job, 1).unwrap();
        let bytes = encode_ppm(&raster, Palette::Classic);
        let header = b"P6\n3 3\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len(), header.len() + 27);
    }

    #[test]
    fn shading_darkens_with_steps() {
        for s in 0..100 {
            assert!(shade(s + 1) < shade(s));
        }
        let class = TerminalClass::Root(0);
        assert_eq!(Palette::Classic.color(&class, 0, 2, 0), ROOT_COLORS[0]);
        assert_eq!(Palette::Mono.color(&TerminalClass::NoConvergence, 2, 2, 0), NO_CONVERGENCE_COLOR);
    }

    #[test]
    fn class_table_orders_roots_cycles_then_failure() {
        use crate::iterfun::CycleKey;
        let rec = |class| PixelRecord {
            class,
            termination: Termination::Cap,
            steps: 0,
            terminal: Quaternion::ZERO,
        };
        let k1 = CycleKey(vec![[1, 0, 0, 0], [2, 0, 0, 0]]);
        let k0 = CycleKey(vec![[0, 0, 0, 0], [5, 0, 0, 0]]);
        let pixels = vec![
            rec(TerminalClass::NoConvergence),
            rec(TerminalClass::Cycle(k1.clone())),
            rec(TerminalClass::Root(1)),
            rec(TerminalClass::Cycle(k0.clone())),
        ];
        let raster = Raster::assemble(2, 2, pixels, 2);
        assert_eq!(
            raster.classes,
            vec![
                TerminalClass::Root(0),
                TerminalClass::Root(1),
                TerminalClass::Cycle(k0),
                TerminalClass::Cycle(k1),
                TerminalClass::NoConvergence
            ]
        );
        assert_eq!(raster.class_ids, vec![4, 3, 1, 2]);
        assert_eq!(raster.histogram(), vec![0, 1, 1, 1, 1]);
    }

    #[test]
    fn tracing_names_round_trip() {
        let all = [
            Tracing::QuaternionTrace,
            Tracing::ComplexProjection,
            Tracing::CongruencyProjection,
            Tracing::InvariantPlane(1),
            Tracing::NewtonOnF,
            Tracing::Hybrid(HybridSchedule::LiftEveryStep),
            Tracing::Hybrid(HybridSchedule::TwoPOneFNoLift),
        ];
        for t in all {
            assert_eq!(t.to_string().parse::<Tracing>().unwrap(), t);
        }
        assert!("invariant_plane".parse::<Tracing>().is_err());
    }

    #[test]
    fn newton_on_f_classifies_against_quartic_roots() {
        let job = reference_job(IterationMethod::LeftNewton, Tracing::NewtonOnF).with_resolution(8);
        let scene = Scene::new(job).unwrap();
        assert_eq!(scene.targets.len(), 4);
        for z in scene.f_roots {
            let rec = scene.trace_pixel(Quaternion::from_complex(z + Complex64::new(0.01, -0.01)));
            let TerminalClass::Root(i) = rec.class else { panic!("{rec:?}") };
            assert!((scene.f_roots[i] - z).norm() < 1e-9);
        }
    }

    #[test]
    fn hybrid_from_a_root_stops_at_once() {
        let job = reference_job(IterationMethod::LeftNewton, Tracing::Hybrid(HybridSchedule::LiftEveryStep));
        let scene = Scene::new(job).unwrap();
        let rec = scene.trace_pixel(alpha());
        assert_eq!(rec.termination, Termination::FixedPoint);
        assert!(rec.steps <= 1);
        assert_eq!(rec.class, TerminalClass::Root(0));
    }

    #[test]
    fn lifted_hybrid_lands_in_the_class_of_alpha() {
        let job = reference_job(IterationMethod::LeftNewton, Tracing::Hybrid(HybridSchedule::LiftEveryStep));
        let scene = Scene::new(job).unwrap();
        let rec = scene.trace_pixel(alpha().proj_c());
        assert_eq!(rec.termination, Termination::FixedPoint);
        assert!(rec.terminal.proj_s().distance(alpha().proj_s()) < 1e-4, "{rec:?}");
    }

    #[test]
    fn two_p_one_f_terminals_are_quartic_roots() {
        use rand::{Rng, SeedableRng};
        let job = reference_job(IterationMethod::LeftNewton, Tracing::Hybrid(HybridSchedule::TwoPOneFNoLift));
        let scene = Scene::new(job).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut converged = 0;
        for _ in 0..100 {
            let seed = q(rng.gen_range(-2.3..2.3), rng.gen_range(-2.3..2.3), 0.0, 0.0);
            let rec = scene.trace_pixel(seed);
            if rec.termination == Termination::FixedPoint {
                converged += 1;
                let z = rec.terminal.to_complex();
                let nearest = scene.f_roots.iter().map(|r| (r - z).norm()).fold(f64::INFINITY, f64::min);
                assert!(nearest < 1e-4, "{z} is {nearest:e} from the nearest root");
            }
        }
        assert!(converged > 50);
    }

    #[test]
    fn metadata_lists_roots_and_histogram() {
        let job = reference_job(IterationMethod::LeftNewton, Tracing::ComplexProjection).with_resolution(16);
        let scene = Scene::new(job).unwrap();
        let raster = scene.render(2).unwrap();
        let meta = RenderMetadata::new(&scene, &raster);
        assert_eq!(meta.roots.len(), 2);
        assert_eq!(meta.f_roots.len(), 4);
        assert_eq!(meta.histogram.iter().map(|c| c.pixels).sum::<usize>(), 256);
        let text = meta.to_toml().unwrap();
        let back: RenderMetadata = toml::from_str(&text).unwrap();
        assert_eq!(back, meta);
    }

    #[test]
    fn writes_ppm_png_and_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let job = reference_job(IterationMethod::RightNewton, Tracing::CongruencyProjection).with_resolution(4);
        let scene = Scene::new(job.clone()).unwrap();
        let raster = scene.render(1).unwrap();
        let out = write_outputs(dir.path(), &job.file_stem(), &scene, &raster, true).unwrap();
        assert!(out.ppm.ends_with("sproj_right_newton_r4.ppm"));
        assert!(std::fs::read(&out.ppm).unwrap().starts_with(b"P6\n4 4\n255\n"));
        assert!(std::fs::read(out.png.unwrap()).unwrap().starts_with(b"\x89PNG"));
        assert!(std::fs::read_to_string(out.metadata).unwrap().contains("version = 1"));
    }
}
