use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qquad::bench::{run_bench, BenchOptions, BENCH_RESOLUTION};
use qquad::config::{Config, ConfigError, PolySpec};
use qquad::invplane::{eigen4, invariant_plane, jacobian, DEFAULT_FD_STEP};
use qquad::iterfun::{classify_orbit, orbit, run_orbit, OrbitOptions, DEFAULT_CAP, DEFAULT_STOP_TOL};
use qquad::quartic;
use qquad::render::{write_outputs, RenderError, RenderJob, Scene};
use qquad::{IterationMethod, QuadraticPoly, Quaternion, Tracing};

#[derive(Parser)]
#[command(name = "qquad", version, about = "Quaternion quadratic equations: roots, iterations, planes and basin images")]
struct Cli {
    /// TOML job file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads per render; 0 lets the pool decide.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// How seeds are read and iterates printed.
    #[arg(long, global = true, value_enum, default_value_t = SeedFormat::Text)]
    seed_format: SeedFormat,
    /// Image side length in pixels (overrides every job).
    #[arg(long, global = true, value_name = "N")]
    resolution: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SeedFormat {
    /// `a+bi+cj+dk`
    Text,
    /// `a,b,c,d`
    Csv,
}

impl SeedFormat {
    fn parse(self, s: &str) -> Result<Quaternion, String> {
        match self {
            SeedFormat::Text => s.parse().map_err(|e| format!("{e}")),
            SeedFormat::Csv => {
                let parts: Vec<f64> = s
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| format!("bad csv quaternion `{s}`: {e}"))?;
                let a: [f64; 4] = parts
                    .try_into()
                    .map_err(|_| format!("csv quaternion `{s}` needs 4 components"))?;
                Ok(Quaternion::from_array(a))
            }
        }
    }

    fn print(self, q: Quaternion) -> String {
        match self {
            SeedFormat::Text => q.to_string(),
            SeedFormat::Csv => {
                let [a, b, c, d] = q.to_array();
                format!("{a},{b},{c},{d}")
            }
        }
    }
}

#[derive(Args, Clone, Default)]
struct PolyArgs {
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Roots of the quadratic through its companion quartic.
    Solve {
        #[command(flatten)]
        poly: PolyArgs,
        /// One `key=value` record per root instead of a table.
        #[arg(long)]
        records: bool,
    },
    /// Basin images for the config jobs, or for one job given on the command line.
    Render {
        #[command(flatten)]
        poly: PolyArgs,
        #[arg(long)]
        tracing: Option<Tracing>,
        #[arg(long, default_value = "left_newton")]
        method: IterationMethod,
        /// Also write PNG files.
        #[arg(long)]
        png: bool,
    },
    /// One orbit, one iterate per line.
    Orbit {
        #[command(flatten)]
        poly: PolyArgs,
        #[arg(long, default_value = "left_newton")]
        method: IterationMethod,
        #[arg(long, allow_hyphen_values = true)]
        seed: String,
        /// Iterate the composed map of a tracing instead of the plain step.
        #[arg(long)]
        tracing: Option<Tracing>,
        #[arg(long, default_value_t = DEFAULT_STOP_TOL)]
        stop_tol: f64,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
        #[arg(long)]
        no_cycle_check: bool,
    },
    /// Jacobian spectrum and invariant plane at a root.
    Plane {
        #[command(flatten)]
        poly: PolyArgs,
        #[arg(long, default_value = "left_newton")]
        method: IterationMethod,
        /// Index of the root in the solved (or prescribed) root list.
        #[arg(long, default_value_t = 0)]
        root: usize,
    },
    /// Timing table as CSV.
    Bench {
        #[command(flatten)]
        poly: PolyArgs,
        #[arg(long)]
        repetitions: Option<usize>,
    },
}

enum Failure {
    Config(String),
    Numeric(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numeric(m) | Failure::Io(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::Io(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<RenderError> for Failure {
    fn from(e: RenderError) -> Self {
        match e {
            RenderError::InvalidJob(_) => Failure::Config(e.to_string()),
            RenderError::Numeric(_) => Failure::Numeric(e.to_string()),
            RenderError::Io(_) | RenderError::Png(_) | RenderError::Metadata(_) => Failure::Io(e.to_string()),
        }
    }
}

impl From<qquad::Error> for Failure {
    fn from(e: qquad::Error) -> Self {
        Failure::Numeric(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn quat(s: &str) -> Result<Quaternion, Failure> {
    s.parse().map_err(|e| Failure::Config(format!("{e}")))
}

struct Context {
    config: Option<Config>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    resolution: Option<usize>,
}

impl Context {
    fn polynomial(&self, args: &PolyArgs) -> Result<(QuadraticPoly, Option<Vec<Quaternion>>), Failure> {
        let given = [&args.b, &args.c, &args.alpha, &args.beta].iter().any(|a| a.is_some());
        let spec = if given {
            PolySpec {
                b: args.b.as_deref().map(quat).transpose()?,
                c: args.c.as_deref().map(quat).transpose()?,
                alpha: args.alpha.as_deref().map(quat).transpose()?,
                beta: args.beta.as_deref().map(quat).transpose()?,
            }
        } else if let Some(config) = &self.config {
            config.polynomial.clone()
        } else {
            return Err(Failure::Config(
                "no polynomial: pass --b/--c, --alpha/--beta or --config".into(),
            ));
        };
        Ok(spec.resolve()?)
    }

    fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| self.config.as_ref().map(|c| c.out_dir.clone()))
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    fn workers(&self) -> usize {
        self.workers
            .or_else(|| self.config.as_ref().map(|c| c.workers))
            .unwrap_or(0)
    }
}

fn roots_of(poly: &QuadraticPoly, prescribed: Option<Vec<Quaternion>>) -> Result<Vec<Quaternion>, Failure> {
    match prescribed {
        Some(r) => Ok(r),
        None => Ok(quartic::solve(poly)?.iter().map(|r| r.value).collect()),
    }
}

fn cmd_solve(out: &mut dyn Write, ctx: &Context, args: &PolyArgs, records: bool) -> Result<(), Failure> {
    let (poly, _) = ctx.polynomial(args)?;
    let roots = quartic::solve(&poly)?;
    writeln!(out, "P(x) = x^2 + ({})x + ({})", poly.b, poly.c)?;
    if records {
        for (n, r) in roots.iter().enumerate() {
            writeln!(
                out,
                "index={n} root={} case={} residual={:.3e} class={} theta={}{:+}i family={}",
                r.value,
                r.case,
                r.residual,
                r.value.proj_s(),
                r.source_theta.re,
                r.source_theta.im,
                r.is_spherical_family()
            )?;
        }
        return Ok(());
    }
    let width = roots.iter().map(|r| format!("{:.12}", r.value).len()).max().unwrap_or(4);
    writeln!(out, "{:<3} {:<width$} {:<9} {:<10} class", "#", "root", "case", "residual")?;
    for (n, r) in roots.iter().enumerate() {
        let note = if r.is_spherical_family() { "  (every member of the class is a root)" } else { "" };
        writeln!(
                out,
            "{n:<3} {:<width$} {:<9} {:<10.3e} {:.12}{note}",
            format!("{:.12}", r.value),
            r.case.label(),
            r.residual,
            r.value.proj_s()
        )?;
    }
    Ok(())
}

fn config_jobs(ctx: &Context, args: &PolyArgs, tracing: Option<Tracing>, method: IterationMethod) -> Result<Vec<RenderJob>, Failure> {
    let mut jobs = match (tracing, &ctx.config) {
        (Some(tracing), _) => {
            let (poly, roots) = ctx.polynomial(args)?;
            let mut job = RenderJob::new(poly, method, tracing);
            job.roots = roots;
            vec![job]
        }
        (None, Some(config)) => config.render_jobs()?,
        (None, None) => return Err(Failure::Config("render needs --config or --tracing".into())),
    };
    if let Some(res) = ctx.resolution {
        for job in &mut jobs {
            job.resolution = res;
        }
    }
    for job in &jobs {
        job.validate()?;
    }
    Ok(jobs)
}

fn cmd_render(out: &mut dyn Write, ctx: &Context, args: &PolyArgs, tracing: Option<Tracing>, method: IterationMethod, png: bool) -> Result<(), Failure> {
    let jobs = config_jobs(ctx, args, tracing, method)?;
    let png = png || ctx.config.as_ref().is_some_and(|c| c.png);
    let dir = ctx.out_dir();
    for job in jobs {
        let stem = job.file_stem();
        let scene = Scene::new(job)?;
        let raster = scene.render(ctx.workers())?;
        let files = write_outputs(&dir, &stem, &scene, &raster, png)?;
        writeln!(out, "{}", files.ppm.display())?;
        if let Some(p) = files.png {
            writeln!(out, "{}", p.display())?;
        }
        writeln!(out, "{}", files.metadata.display())?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_orbit(
    out: &mut dyn Write,
    ctx: &Context,
    format: SeedFormat,
    args: &PolyArgs,
    method: IterationMethod,
    seed: &str,
    tracing: Option<Tracing>,
    opts: OrbitOptions,
) -> Result<(), Failure> {
    let seed = format.parse(seed).map_err(Failure::Config)?;
    let (poly, prescribed) = ctx.polynomial(args)?;
    let roots = roots_of(&poly, prescribed)?;
    match tracing {
        None => {
            let o = orbit(method, &poly, seed, &opts);
            for q in &o.iterates {
                writeln!(out, "{}", format.print(*q))?;
            }
            let class = classify_orbit(method, &poly, &o, &roots);
            writeln!(out, "# termination={:?} steps={} class={class:?}", o.termination, o.steps)?;
        }
        Some(tracing) => {
            let mut job = RenderJob::new(poly, method, tracing).with_resolution(1).with_roots(roots);
            job.stop_tol = opts.stop_tol;
            job.cap = opts.cap;
            job.cycle_check = opts.cycle_check;
            job.validate()?;
            let scene = Scene::new(job)?;
            let mut iterates = Vec::new();
            run_orbit(seed, &opts, |q| scene.apply(q), |q| iterates.push(q));
            for q in iterates {
                writeln!(out, "{}", format.print(q))?;
            }
            let rec = scene.trace_pixel(seed);
            writeln!(out, "# termination={:?} steps={} class={:?}", rec.termination, rec.steps, rec.class)?;
        }
    }
    Ok(())
}

fn cmd_plane(out: &mut dyn Write, ctx: &Context, args: &PolyArgs, method: IterationMethod, index: usize) -> Result<(), Failure> {
    let (poly, prescribed) = ctx.polynomial(args)?;
    let roots = roots_of(&poly, prescribed)?;
    if roots.len() < 2 || index >= roots.len() {
        return Err(Failure::Config(format!(
            "need a root index below {} and at least two roots",
            roots.len()
        )));
    }
    let root = roots[index];
    let other = roots[if index == 0 { 1 } else { 0 }];
    let jac = jacobian(method, &poly, root, DEFAULT_FD_STEP).map_err(qquad::Error::from)?;
    let eig = eigen4(&jac.entries).map_err(qquad::Error::from)?;
    writeln!(out, "method      {method}")?;
    writeln!(out, "root        {root}")?;
    writeln!(out, "eigenvalues of D(root), fd step {DEFAULT_FD_STEP:e}:")?;
    for pair in &eig.pairs {
        writeln!(
                out,
            "  {:+.9} {:+.9}i   |λ| = {:.3e}   residual {:.1e}",
            pair.value.re,
            pair.value.im,
            pair.value.norm(),
            pair.residual
        )?;
    }
    if eig.defective {
        writeln!(out, "  (defective: fewer eigenvectors than the multiplicity)")?;
    }
    let plane = invariant_plane(method, &poly, root, other).map_err(qquad::Error::from)?;
    let fmt = |v: [f64; 4]| v.map(|x| format!("{x:+.9}")).join(" ");
    writeln!(out, "u           {}", fmt(plane.u))?;
    writeln!(out, "v           {}", fmt(plane.v))?;
    writeln!(out, "anchor      {}", plane.orientation_anchor)?;
    let (x, y) = plane.coordinates(plane.orientation_anchor);
    writeln!(out, "anchor in plane (x, y) = ({x:.6}, {y:.6}), offset {:.6}", plane.anchor_offset())?;
    writeln!(out, "anchor distance to plane {:.6}", plane.distance(plane.orientation_anchor))?;
    Ok(())
}

fn cmd_bench(out: &mut dyn Write, ctx: &Context, args: &PolyArgs, repetitions: Option<usize>) -> Result<(), Failure> {
    let (poly, roots) = ctx.polynomial(args)?;
    let repetitions = repetitions
        .or_else(|| ctx.config.as_ref().map(|c| c.timing_repetitions))
        .unwrap_or(3);
    if repetitions < 3 {
        return Err(Failure::Config("timing repetitions must be at least 3".into()));
    }
    let options = BenchOptions {
        resolution: ctx.resolution.unwrap_or(BENCH_RESOLUTION),
        repetitions,
        workers: ctx.workers.unwrap_or(1).max(1),
    };
    let table = run_bench(poly, roots, options)?;
    let csv = table.to_csv();
    write!(out, "{csv}")?;
    if let Some(dir) = &ctx.out {
        write_csv(dir, &csv)?;
    }
    for check in table.soft_checks() {
        if check.passed {
            eprintln!("ok: {} ({})", check.name, check.detail);
        } else {
            eprintln!("warning: {} does not hold ({})", check.name, check.detail);
        }
    }
    Ok(())
}

fn write_csv(dir: &Path, csv: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir)?;
    let path = dir.join("bench.csv");
    fs::write(&path, csv)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let config = cli.config.as_deref().map(Config::load).transpose()?;
    let ctx = Context {
        config,
        workers: cli.workers,
        out: cli.out,
        resolution: cli.resolution,
    };
    if ctx.resolution == Some(0) {
        return Err(Failure::Config("resolution must be at least 1".into()));
    }
    match cli.command {
        Command::Solve { poly, records } => cmd_solve(out, &ctx, &poly, records),
        Command::Render {
            poly,
            tracing,
            method,
            png,
        } => cmd_render(out, &ctx, &poly, tracing, method, png),
        Command::Orbit {
            poly,
            method,
            seed,
            tracing,
            stop_tol,
            cap,
            no_cycle_check,
        } => {
            let opts = OrbitOptions {
                stop_tol,
                cap,
                cycle_check: !no_cycle_check,
            };
            cmd_orbit(out, &ctx, cli.seed_format, &poly, method, &seed, tracing, opts)
        }
        Command::Plane { poly, method, root } => cmd_plane(out, &ctx, &poly, method, root),
        Command::Bench { poly, repetitions } => cmd_bench(out, &ctx, &poly, repetitions),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse(), &mut std::io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
