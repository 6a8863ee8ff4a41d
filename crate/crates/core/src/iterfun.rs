//! Left-Newton, Right-Newton and Halley iterations for `P(x) = x^2 + bx + c`,
//! orbits under the `‖q_{n+1} - q_n‖ ≤ tol` stopping rule, and detection of
//! 2- to 5-cycles.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qpoly::QuadraticPoly;
use crate::quat::Quaternion;

/// Below this norm `P'(q)` (or Halley's `Δ`) is treated as singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-13;
pub const DEFAULT_STOP_TOL: f64 = 0.01;
pub const DEFAULT_CAP: usize = 70;
/// Longest period looked for by cycle detection.
pub const MAX_PERIOD: usize = 5;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum StepError {
    #[error("P'(q) is singular (|P'(q)| = {0:e})")]
    SingularDerivative(f64),
    #[error("Halley denominator is singular (|Δ| = {0:e})")]
    SingularHalleyDelta(f64),
    #[error("iteration produced a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationMethod {
    LeftNewton,
    RightNewton,
    Halley,
}

impl IterationMethod {
    pub const ALL: [IterationMethod; 3] = [
        IterationMethod::LeftNewton,
        IterationMethod::RightNewton,
        IterationMethod::Halley,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IterationMethod::LeftNewton => "left_newton",
            IterationMethod::RightNewton => "right_newton",
            IterationMethod::Halley => "halley",
        }
    }
}

impl fmt::Display for IterationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IterationMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "left_newton" | "left" => Ok(IterationMethod::LeftNewton),
            "right_newton" | "right" => Ok(IterationMethod::RightNewton),
            "halley" => Ok(IterationMethod::Halley),
            other => Err(format!("unknown iteration method `{other}`")),
        }
    }
}

fn checked_inv(q: Quaternion, err: fn(f64) -> StepError) -> Result<Quaternion, StepError> {
    let n = q.norm();
    if n < SINGULAR_THRESHOLD {
        return Err(err(n));
    }
    q.inv().map_err(|_| err(n))
}

/// One application of the chosen iteration function.
pub fn step(method: IterationMethod, p: &QuadraticPoly, q: Quaternion) -> Result<Quaternion, StepError> {
    let value = p.eval(q);
    let d_inv = checked_inv(p.deriv1(q), StepError::SingularDerivative)?;
    let next = match method {
        IterationMethod::LeftNewton => q - d_inv * value,
        IterationMethod::RightNewton => q - value * d_inv,
        IterationMethod::Halley => {
            // Δ = P' - P P'⁻¹ ; H = q - P'⁻¹P - P'⁻¹ Δ⁻¹ P P'⁻¹ P
            let newton = d_inv * value;
            let delta = p.deriv1(q) - value * d_inv;
            let delta_inv = checked_inv(delta, StepError::SingularHalleyDelta)?;
            q - newton - d_inv * delta_inv * value * newton
        }
    };
    if next.is_finite() {
        Ok(next)
    } else {
        Err(StepError::NonFinite)
    }
}

/// Right-hand side of the Newton expansion about a root `xi`:
/// `xi + P'(q)⁻¹(xi - q)² - P'(q)⁻¹ E(xi, q)`, equal to the Left-Newton step.
pub fn newton_expansion(p: &QuadraticPoly, xi: Quaternion, q: Quaternion) -> Result<Quaternion, StepError> {
    let d_inv = checked_inv(p.deriv1(q), StepError::SingularDerivative)?;
    let d = xi - q;
    let e = p.taylor_remainder(xi, q);
    Ok(xi + d_inv * (d * d) - d_inv * e)
}

/// Remainder `E₃ = P'⁻¹Δ⁻¹(E (xi - q) - P P'⁻¹ E) - P'⁻¹ E` of the Halley expansion.
pub fn halley_remainder(p: &QuadraticPoly, xi: Quaternion, q: Quaternion) -> Result<Quaternion, StepError> {
    let value = p.eval(q);
    let d_inv = checked_inv(p.deriv1(q), StepError::SingularDerivative)?;
    let delta_inv = checked_inv(p.deriv1(q) - value * d_inv, StepError::SingularHalleyDelta)?;
    let e = p.taylor_remainder(xi, q);
    Ok(d_inv * delta_inv * (e * (xi - q) - value * d_inv * e) - d_inv * e)
}

/// Right-hand side of the Halley expansion about a root `xi`:
/// `xi - P'⁻¹Δ⁻¹(xi - q)³ + E₃`, equal to the Halley step.
pub fn halley_expansion(p: &QuadraticPoly, xi: Quaternion, q: Quaternion) -> Result<Quaternion, StepError> {
    let value = p.eval(q);
    let d_inv = checked_inv(p.deriv1(q), StepError::SingularDerivative)?;
    let delta_inv = checked_inv(p.deriv1(q) - value * d_inv, StepError::SingularHalleyDelta)?;
    let d = xi - q;
    Ok(xi - d_inv * delta_inv * (d * d * d) + halley_remainder(p, xi, q)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    FixedPoint,
    Cycle(usize),
    Cap,
    SingularStep,
}

#[derive(Debug, Clone, Copy)]
pub struct OrbitOptions {
    pub stop_tol: f64,
    pub cap: usize,
    pub cycle_check: bool,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        OrbitOptions {
            stop_tol: DEFAULT_STOP_TOL,
            cap: DEFAULT_CAP,
            cycle_check: true,
        }
    }
}

/// Result of running an iteration from a seed without keeping every iterate.
#[derive(Debug, Clone, Copy)]
pub struct OrbitEnd {
    pub termination: Termination,
    /// Number of successful applications of the map.
    pub steps: usize,
    pub terminal: Quaternion,
    /// For `Cycle(p)`, the last `p` iterates, oldest first.
    pub cycle: [Quaternion; MAX_PERIOD],
}

impl OrbitEnd {
    pub fn cycle_points(&self) -> &[Quaternion] {
        match self.termination {
            Termination::Cycle(p) => &self.cycle[..p],
            _ => &[],
        }
    }
}

/// Iterates `map` from `seed` until the stopping rule, a detected cycle, a
/// singular step or the cap. `visit` sees every iterate including the seed.
pub fn run_orbit<F, V>(seed: Quaternion, opts: &OrbitOptions, mut map: F, mut visit: V) -> OrbitEnd
where
    F: FnMut(Quaternion) -> Result<Quaternion, StepError>,
    V: FnMut(Quaternion),
{
    // history[n % LEN] holds iterate n
    const LEN: usize = MAX_PERIOD + 1;
    let mut history = [Quaternion::ZERO; LEN];
    history[0] = seed;
    visit(seed);
    let mut current = seed;
    let mut steps = 0;
    let end = |termination, steps, terminal, cycle| OrbitEnd {
        termination,
        steps,
        terminal,
        cycle,
    };

    while steps < opts.cap {
        let next = match map(current) {
            Ok(n) => n,
            Err(_) => return end(Termination::SingularStep, steps, current, [Quaternion::ZERO; MAX_PERIOD]),
        };
        steps += 1;
        visit(next);
        history[steps % LEN] = next;
        if next.distance(current) <= opts.stop_tol {
            return end(Termination::FixedPoint, steps, next, [Quaternion::ZERO; MAX_PERIOD]);
        }
        if opts.cycle_check {
            for period in 2..=MAX_PERIOD.min(steps) {
                if next.distance(history[(steps - period) % LEN]) <= opts.stop_tol {
                    let mut cycle = [Quaternion::ZERO; MAX_PERIOD];
                    for (slot, n) in cycle.iter_mut().zip(steps + 1 - period..=steps) {
                        *slot = history[n % LEN];
                    }
                    return end(Termination::Cycle(period), steps, next, cycle);
                }
            }
        }
        current = next;
    }
    end(Termination::Cap, steps, current, [Quaternion::ZERO; MAX_PERIOD])
}

/// An orbit with every iterate recorded; `iterates[0]` is the seed.
#[derive(Debug, Clone)]
pub struct Orbit {
    pub seed: Quaternion,
    pub iterates: Vec<Quaternion>,
    pub termination: Termination,
    pub steps: usize,
}

impl Orbit {
    pub fn terminal(&self) -> Quaternion {
        *self.iterates.last().expect("orbit holds its seed")
    }

    pub fn cycle_points(&self) -> &[Quaternion] {
        match self.termination {
            Termination::Cycle(p) => &self.iterates[self.iterates.len() - p..],
            _ => &[],
        }
    }
}

pub fn orbit(method: IterationMethod, p: &QuadraticPoly, seed: Quaternion, opts: &OrbitOptions) -> Orbit {
    let mut iterates = Vec::with_capacity(opts.cap + 1);
    let end = run_orbit(seed, opts, |q| step(method, p, q), |q| iterates.push(q));
    Orbit {
        seed,
        iterates,
        termination: end.termination,
        steps: end.steps,
    }
}

/// Canonical identity of a cycle: its points rounded to a `1e-3` grid,
/// rotated to the lexicographically smallest starting point.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CycleKey(pub Vec<[i64; 4]>);

const CYCLE_GRID: f64 = 1e-3;

impl CycleKey {
    pub fn from_points(points: &[Quaternion]) -> CycleKey {
        let rounded: Vec<[i64; 4]> = points
            .iter()
            .map(|q| q.to_array().map(|x| (x / CYCLE_GRID).round() as i64))
            .collect();
        let best = (0..rounded.len())
            .map(|r| {
                let mut rot = rounded.clone();
                rot.rotate_left(r);
                rot
            })
            .min()
            .unwrap_or_default();
        CycleKey(best)
    }

    pub fn period(&self) -> usize {
        self.0.len()
    }

    pub fn points(&self) -> Vec<Quaternion> {
        self.0
            .iter()
            .map(|a| Quaternion::from_array(a.map(|x| x as f64 * CYCLE_GRID)))
            .collect()
    }
}

/// Re-runs a detected cycle through `map` until its points settle so that
/// rounding them gives the same key from any seed in the basin.
pub fn refine_cycle<F>(points: &[Quaternion], mut map: F) -> Vec<Quaternion>
where
    F: FnMut(Quaternion) -> Result<Quaternion, StepError>,
{
    let period = points.len();
    if period == 0 {
        return Vec::new();
    }
    let mut start = points[0];
    for _ in 0..200 {
        let mut q = start;
        for _ in 0..period {
            match map(q) {
                Ok(n) => q = n,
                Err(_) => return points.to_vec(),
            }
        }
        let moved = q.distance(start);
        start = q;
        if moved <= 1e-12 * (1.0 + q.norm()) {
            break;
        }
    }
    let mut out = Vec::with_capacity(period);
    let mut q = start;
    for _ in 0..period {
        out.push(q);
        q = map(q).unwrap_or(q);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TerminalClass {
    Root(usize),
    Cycle(CycleKey),
    NoConvergence,
}

/// Index of the root nearest to `terminal` by class distance, then by
/// Euclidean distance, then lowest index.
pub fn nearest_root(terminal: Quaternion, roots: &[Quaternion]) -> Option<usize> {
    let mut best: Option<(usize, f64, f64)> = None;
    for (idx, root) in roots.iter().enumerate() {
        let cd = terminal.congruent_distance(*root);
        let ed = terminal.distance(*root);
        best = match best {
            None => Some((idx, cd, ed)),
            Some((bi, bc, be)) => {
                let tie = 1e-12 * (1.0 + bc.max(cd));
                if cd < bc - tie || ((cd - bc).abs() <= tie && ed < be - tie) {
                    Some((idx, cd, ed))
                } else {
                    Some((bi, bc, be))
                }
            }
        };
    }
    best.map(|b| b.0)
}

/// Basin identity of a finished orbit.
pub fn classify_terminal(
    termination: Termination,
    terminal: Quaternion,
    cycle_points: &[Quaternion],
    roots: &[Quaternion],
) -> TerminalClass {
    match termination {
        Termination::FixedPoint => match nearest_root(terminal, roots) {
            Some(i) => TerminalClass::Root(i),
            None => TerminalClass::NoConvergence,
        },
        Termination::Cycle(_) => TerminalClass::Cycle(CycleKey::from_points(cycle_points)),
        Termination::Cap | Termination::SingularStep => TerminalClass::NoConvergence,
    }
}

/// Classifies a recorded orbit of `method`, refining cycles before keying them.
pub fn classify_orbit(method: IterationMethod, p: &QuadraticPoly, orbit: &Orbit, roots: &[Quaternion]) -> TerminalClass {
    let refined = refine_cycle(orbit.cycle_points(), |q| step(method, p, q));
    classify_terminal(orbit.termination, orbit.terminal(), &refined, roots)
}
