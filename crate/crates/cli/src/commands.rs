use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use figeight::action::{action, angular_momentum, gradient, Potential};
use figeight::io::{reduction_report, write_branch_csv, write_orbit, write_plot_csv, write_trace_csv, EventsFile, read_orbit};
use figeight::loop_space::{LoopPath, Series};
use figeight::reduction::{ls_coefficients, predict_bifurcation, verify_identities, ReductionConfig, Side};
use figeight::solver::{minimize, seed_figure_eight_scaled, seed_lennard_jones, solve, SolveConfig, SolveReport};
use figeight::spectrum::{morse_index, spectrum as classified_spectrum};
use figeight::symmetry::{bifurcation_pattern, symmetry_residual, GroupElement, Projector};
use figeight::trace::{trace_bifurcated_branch, TraceConfig, TracedBranch};
use figeight::{continue_branch, detect_crossings, event_at, BifurcationEvent, Branch, ContinuationConfig, Error, Family};
use nalgebra::DVector;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::{Failure, Global, PotentialArgs, PotentialKind};

type Result<T> = figeight::Result<T>;
type Outcome = std::result::Result<(), Failure>;

const DEFAULT_MODES: usize = 32;
const MIN_MODES: usize = 8;
/// Symmetry residual below which a group element counts as a symmetry, relative to `‖q‖`.
const SYMMETRY_TOL: f64 = 1e-8;

pub fn prepare(g: &Global) -> Outcome {
    if let Some(n) = g.modes {
        if n < MIN_MODES {
            return Err(Error::InvalidConfig(format!("--modes must be at least {MIN_MODES}, got {n}")).into());
        }
    }
    if let Some(tol) = g.tol {
        if !(tol > 0.0) {
            return Err(Error::InvalidConfig(format!("--tol must be positive, got {tol}")).into());
        }
    }
    fs::create_dir_all(&g.out)?;
    Ok(())
}

fn modes(g: &Global) -> usize {
    g.modes.unwrap_or(DEFAULT_MODES)
}

fn out_file(g: &Global, name: &str) -> PathBuf {
    g.out.join(name)
}

/// Loaded orbit, moved to the requested truncation.
fn load_orbit(g: &Global, file: &Path) -> Result<(LoopPath, Potential)> {
    let (path, pot) = read_orbit(file)?;
    Ok(match g.modes {
        Some(n) if n != path.n_modes() => (path.resized(n), pot),
        _ => (path, pot),
    })
}

/// Potential and period selected on the command line.
fn resolve_potential(args: &PotentialArgs) -> Result<(Potential, f64)> {
    match args.potential {
        PotentialKind::Homogeneous => {
            let pot = Potential::homogeneous(args.a.unwrap_or(1.0))?;
            let period = args.period.unwrap_or(1.0);
            if !(period > 0.0 && period.is_finite()) {
                return Err(Error::InvalidConfig(format!("period must be positive, got {period}")));
            }
            Ok((pot, period))
        }
        PotentialKind::LennardJones => {
            if args.a.is_some() {
                return Err(Error::InvalidConfig("--a applies to the homogeneous potential only".into()));
            }
            let period = args.period.unwrap_or(20.0);
            if !(period > 0.0 && period.is_finite()) {
                return Err(Error::InvalidConfig(format!("period must be positive, got {period}")));
            }
            Ok((Potential::LennardJones, period))
        }
    }
}

/// Built-in figure-eight seed. Homogeneous orbits scale like `T^{2/(a+2)}`.
fn builtin_seed(pot: &Potential, period: f64, n: usize) -> LoopPath {
    match pot {
        Potential::Homogeneous { a } => {
            let s = period.powf(2.0 / (a + 2.0));
            seed_figure_eight_scaled(period, n, 0.31 * s, 0.1 * s)
        }
        _ => seed_lennard_jones(period, n),
    }
}

fn parse_projector(name: &str) -> Result<Option<Projector>> {
    if name.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    Projector::parse(name).map(Some).ok_or_else(|| {
        let known: Vec<_> = Projector::ALL.iter().map(|p| p.name()).collect();
        Error::InvalidConfig(format!("unknown projector {name:?}; expected one of {} or none", known.join(", ")))
    })
}

fn run_solver(seed: &LoopPath, pot: &Potential, cfg: &SolveConfig, minimise: bool) -> Result<SolveReport> {
    if minimise {
        minimize(seed, pot, cfg)
    } else {
        solve(seed, pot, cfg)
    }
}

const NAMED_ELEMENTS: [(&str, GroupElement); 5] =
    [("B", GroupElement::B), ("S", GroupElement::S), ("C", GroupElement::C), ("M", GroupElement::M), ("MS", GroupElement::MS)];

fn print_orbit_summary(path: &LoopPath, pot: &Potential) -> Result<()> {
    println!("potential        {}", describe(pot));
    println!("period           {}", path.period());
    println!("modes            {}", path.n_modes());
    println!("action           {:.12e}", action(path, pot)?);
    println!("gradient norm    {:.3e}", gradient(path, pot)?.norm());
    match classified_spectrum(path, pot) {
        Ok(spec) => println!("Morse index      {}", morse_index(&spec)),
        Err(e) => println!("Morse index      unavailable ({e})"),
    }
    for (name, g) in NAMED_ELEMENTS {
        println!("residual {name:<7} {:.3e}", symmetry_residual(g, path));
    }
    println!("angular momentum {:.3e}", angular_momentum(path));
    Ok(())
}

fn describe(pot: &Potential) -> String {
    match pot.exponent() {
        Some(a) => format!("{} (a = {a})", pot.kind()),
        None => pot.kind().to_string(),
    }
}

// find

#[derive(Args, Debug)]
pub struct FindArgs {
    #[command(flatten)]
    pub potential: PotentialArgs,
    /// Minimise the action instead of solving for any stationary loop.
    #[arg(long)]
    pub minimize: bool,
    /// Invariant subspace to search in, or "none".
    #[arg(long, default_value = "P_D6")]
    pub projector: String,
    /// Start from this orbit file instead of the built-in seed.
    #[arg(long)]
    pub from: Option<PathBuf>,
    /// Orbit file written inside the output directory.
    #[arg(long, default_value = "orbit.json")]
    pub output: String,
}

pub fn find(g: &Global, args: &FindArgs) -> Outcome {
    let (pot, period) = resolve_potential(&args.potential)?;
    let seed = match &args.from {
        Some(file) => {
            let (q, _) = load_orbit(g, file)?;
            match args.potential.period {
                Some(t) => q.with_period(t),
                None => q,
            }
        }
        None => builtin_seed(&pot, period, modes(g)),
    };
    let cfg = SolveConfig {
        projector: parse_projector(&args.projector)?,
        tolerance: g.tol.unwrap_or(SolveConfig::default().tolerance),
        ..SolveConfig::default()
    };
    let report = run_solver(&seed, &pot, &cfg, args.minimize)?;
    println!("converged in {} iterations", report.iterations);
    print_orbit_summary(&report.path, &pot)?;
    let file = out_file(g, &args.output);
    write_orbit(&file, &report.path, &pot)?;
    println!("wrote {}", file.display());
    Ok(())
}

// scan

type SegmentRun = figeight::Result<(Branch, Vec<BifurcationEvent>)>;

#[derive(Args, Debug)]
pub struct ScanArgs {
    /// Potential family; the starting value of the parameter is `--a`
    /// (homogeneous, at fixed `--T`) or `--T` (Lennard-Jones).
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub from: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub to: f64,
    /// Initial arclength step.
    #[arg(long, default_value_t = 1e-2)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-1)]
    pub max_step: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_points: usize,
    /// Orbit file used as the starting guess.
    #[arg(long)]
    pub seed_orbit: Option<PathBuf>,
    /// Write the orbit of every k-th branch point (0 writes none).
    #[arg(long, default_value_t = 0)]
    pub save_every: usize,
}

pub fn scan(g: &Global, args: &ScanArgs) -> Outcome {
    let (lo, hi) = (args.from.min(args.to), args.from.max(args.to));
    if !(hi > lo) {
        return Err(Error::InvalidConfig(format!("empty parameter range [{}, {}]", args.from, args.to)).into());
    }
    let (pot, period) = resolve_potential(&args.potential)?;
    let (family, anchor) = match pot {
        Potential::Homogeneous { a } => (Family::Homogeneous { period }, a),
        _ => (Family::LennardJones, period),
    };
    family.validate(lo)?;
    let n = modes(g);
    let cfg = ContinuationConfig {
        initial_step: args.step,
        min_step: ContinuationConfig::default().min_step.min(args.step),
        max_step: args.max_step,
        tolerance: g.tol.unwrap_or(1e-10),
        max_points: args.max_points,
        ..ContinuationConfig::default()
    };
    cfg.validate()?;

    let seed = match &args.seed_orbit {
        Some(file) => load_orbit(g, file)?.0,
        None => {
            let solve_cfg = SolveConfig::default().with_projector(Projector::PD6);
            let minimise = matches!(pot, Potential::LennardJones);
            run_solver(&builtin_seed(&pot, period, n), &pot, &solve_cfg, minimise)?.path
        }
    };

    // Segments leave the starting value towards each end of the range it does not already reach.
    let span = (lo.min(anchor), hi.max(anchor));
    let mut segments = Vec::new();
    if hi > anchor {
        segments.push(("up", 1.0));
    }
    if lo < anchor {
        segments.push(("down", -1.0));
    }
    let results: Vec<(&str, SegmentRun)> = segments
        .par_iter()
        .map(|&(name, dir)| {
            let run = continue_branch(&seed, family, anchor, span, dir, &cfg)
                .and_then(|b| detect_crossings(&b).map(|events| (b, events)));
            (name, run)
        })
        .collect();

    let in_range = |x: f64| (lo..=hi).contains(&x);
    let mut events = Vec::new();
    let mut failure = None;
    for (name, run) in results {
        match run {
            Ok((mut branch, found)) => {
                branch.points.retain(|p| in_range(p.param));
                let csv = write_branch(g, &branch, name, args.save_every)?;
                println!(
                    "segment {name}: {} points, terminated by {:?}; wrote {}",
                    branch.points.len(),
                    branch.termination,
                    csv.display()
                );
                events.extend(found.into_iter().filter(|e| in_range(e.xi0)));
            }
            Err(e) => {
                eprintln!("segment {name} failed: {e}");
                failure.get_or_insert(Failure::Core(e));
            }
        }
    }
    events.sort_by(|a, b| a.xi0.total_cmp(&b.xi0));

    let mut file = EventsFile::new(family.param_name(), &events);
    for (k, (record, event)) in file.events.iter_mut().zip(&events).enumerate() {
        let name = format!("event_{k}.json");
        write_orbit(&out_file(g, &name), &event.path, &event.potential()?)?;
        record.orbit = Some(name);
    }
    let events_path = out_file(g, "events.json");
    file.write(&events_path)?;
    println!("{} crossings in [{lo}, {hi}]:", file.events.len());
    println!("  k  {:>10}  irrep  d  order  type             slope      projector", file.param_name);
    for (k, r) in file.events.iter().enumerate() {
        println!(
            "{k:>3}  {:>10.6}  {:<5}  {}  {:<5}  {:<15}  {:>9.4}  {}",
            r.xi0, r.irrep, r.d, r.order, r.kind, r.kappa_slope, r.projector
        );
    }
    println!("wrote {}", events_path.display());
    failure.map_or(Ok(()), Err)
}

fn write_branch(g: &Global, branch: &Branch, name: &str, every: usize) -> Result<PathBuf> {
    let mut orbits = vec![None; branch.points.len()];
    if every > 0 {
        let pot_of = |x| branch.family.potential(x);
        for (i, p) in branch.points.iter().enumerate().step_by(every) {
            let file = format!("branch_{name}_{i:04}.json");
            write_orbit(&out_file(g, &file), &p.path, &pot_of(p.param)?)?;
            orbits[i] = Some(file);
        }
    }
    let path = out_file(g, &format!("branch_{name}.csv"));
    write_branch_csv(branch, BufWriter::new(File::create(&path)?), &orbits)?;
    Ok(path)
}

// spectrum

#[derive(Args, Debug)]
pub struct OrbitArgs {
    #[arg(long)]
    pub orbit: PathBuf,
    /// Number of nontrivial eigenspaces listed.
    #[arg(long, default_value_t = 12)]
    pub count: usize,
}

pub fn spectrum(g: &Global, args: &OrbitArgs) -> Outcome {
    let (path, pot) = load_orbit(g, &args.orbit)?;
    let spec = classified_spectrum(&path, &pot)?;
    match spec.group {
        Some(g) => println!("Morse index {}; symmetry group {g:?}", morse_index(&spec)),
        None => println!("Morse index {}; no symmetry group", morse_index(&spec)),
    }
    println!("{:>16}  mult  irrep", "eigenvalue");
    for p in spec.trivial() {
        println!("{:>16.8e}  {:>4}  trivial", p.value, p.multiplicity());
    }
    for p in spec.nontrivial().take(args.count) {
        let label = p.label.map_or("-".to_string(), |l| l.name().to_string());
        println!("{:>16.8e}  {:>4}  {label}", p.value, p.multiplicity());
    }
    Ok(())
}

// reduce

#[derive(Args, Debug)]
pub struct EventRef {
    /// Events file written by `scan`.
    #[arg(long)]
    pub events: PathBuf,
    /// Index of the crossing in the events file.
    #[arg(long)]
    pub event: usize,
}

fn load_event(g: &Global, r: &EventRef) -> Result<BifurcationEvent> {
    let file = EventsFile::read(&r.events)?;
    let record = file.events.get(r.event).ok_or_else(|| {
        Error::InvalidConfig(format!("{} has no event {} ({} events)", r.events.display(), r.event, file.events.len()))
    })?;
    let orbit = record
        .orbit
        .as_ref()
        .ok_or_else(|| Error::Format(format!("event {} names no orbit file", r.event)))?;
    let dir = r.events.parent().unwrap_or(Path::new("."));
    let (path, pot) = load_orbit(g, &dir.join(orbit))?;
    let family = match pot {
        Potential::Homogeneous { .. } => Family::Homogeneous { period: path.period() },
        Potential::LennardJones => Family::LennardJones,
        Potential::Free => return Err(Error::Unsupported("the free potential has no crossings".into())),
    };
    if family.param_name() != file.param_name {
        return Err(Error::Format(format!(
            "events are in {} but the orbit potential is parametrised by {}",
            file.param_name,
            family.param_name()
        )));
    }
    event_at(family, record.xi0, &path, record.label()?, record.kappa_slope)
}

#[derive(Args, Debug)]
pub struct ReduceArgs {
    #[command(flatten)]
    pub event: EventRef,
    /// Also fit the sixth-order angular coefficients (two-dimensional crossings only).
    #[arg(long)]
    pub sixth_order: bool,
}

pub fn reduce(g: &Global, args: &ReduceArgs) -> Outcome {
    let event = load_event(g, &args.event)?;
    let cfg = ReductionConfig {
        sixth_order: args.sixth_order,
        ..ReductionConfig::default()
    };
    let red = ls_coefficients(&event, &cfg)?;
    let checks = verify_identities(&red, g.tol.unwrap_or(1e-11))?;
    let predictions = event.patterns.iter().map(|p| predict_bifurcation(&red, p)).collect::<figeight::Result<Vec<_>>>()?;

    println!("irrep {} (d = {}) at {} = {:.6}", red.label, red.d(), event.family.param_name(), red.xi0);
    let a3 = red.a3.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let vanishing = if a3 <= 1e-8 * red.a3_scale { "  (vanishes)" } else { "" };
    println!("max |A3| = {a3:.3e} at scale {:.3e}{vanishing}", red.a3_scale);
    let (lo, hi) = red.a4.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    println!("A4 in [{lo:.6e}, {hi:.6e}]");
    if let Some(six) = &red.sixth {
        println!("A6+ = {:.6e}, A6- = {:.6e}, fit residual {:.2e}", six.plus, six.minus, six.residual);
    }
    for c in &checks {
        println!("identity {:<28} {:.2e} (tolerance {:.0e}) {}", c.name, c.residual, c.tolerance, if c.pass { "ok" } else { "FAILED" });
    }
    for p in &predictions {
        println!(
            "prediction {:<9} order {}  {:<15} side {}",
            p.pattern.projector.name(),
            p.order,
            p.pattern.kind.name(),
            p.side.name()
        );
    }
    let report = reduction_report(&red, &checks, &predictions, &[]);
    let file = out_file(g, &format!("reduction_{}.json", args.event.event));
    fs::write(&file, serde_json::to_string_pretty(&report)?)?;
    println!("wrote {}", file.display());
    match checks.iter().find(|c| !c.pass) {
        Some(c) => Err(Failure::Check(format!("identity {} fails with residual {:.2e}", c.name, c.residual))),
        None => Ok(()),
    }
}

// trace

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum SideArg {
    Above,
    Below,
    Both,
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    #[command(flatten)]
    pub event: EventRef,
    /// Pattern of the crossing, by index or by projector name.
    #[arg(long, alias = "projector", default_value = "0")]
    pub pattern: String,
    /// Side of the crossing value to follow.
    #[arg(long, value_enum, default_value = "both")]
    pub side: SideArg,
    /// Largest parameter offset from the crossing.
    #[arg(long, default_value_t = 1e-2)]
    pub reach: f64,
    /// Smallest parameter offset from the crossing.
    #[arg(long, default_value_t = 1e-4)]
    pub first_offset: f64,
    /// Samples per orbit in the plot files.
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
}

fn pattern_index(event: &BifurcationEvent, key: &str) -> Result<usize> {
    let patterns = bifurcation_pattern(event.label);
    let found = match key.parse::<usize>() {
        Ok(i) => (i < patterns.len()).then_some(i),
        Err(_) => Projector::parse(key).and_then(|p| patterns.iter().position(|q| q.projector == p)),
    };
    found.ok_or_else(|| {
        let names: Vec<_> = patterns.iter().enumerate().map(|(i, p)| format!("{i} ({})", p.projector)).collect();
        Error::InvalidConfig(format!("irrep {} has no pattern {key:?}; available: {}", event.label, names.join(", ")))
    })
}

pub fn trace(g: &Global, args: &TraceArgs) -> Outcome {
    let event = load_event(g, &args.event)?;
    let pattern = pattern_index(&event, &args.pattern)?;
    let cfg = TraceConfig {
        pattern,
        side: match args.side {
            SideArg::Above => Side::Above,
            SideArg::Below => Side::Below,
            SideArg::Both => Side::Both,
        },
        first_offset: args.first_offset,
        reach: args.reach,
        tolerance: g.tol.unwrap_or(TraceConfig::default().tolerance),
        ..TraceConfig::default()
    };
    cfg.validate()?;
    let red = ls_coefficients(&event, &ReductionConfig::default())?;
    let traced = trace_bifurcated_branch(&event, &red, &cfg)?;
    let pot = event.potential()?;
    let tag: String = traced.pattern.projector.name().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
    println!(
        "pattern {} {} ({}), symmetry {}: {} points, exponent {:.4}, found {}",
        event.label,
        traced.pattern.projector,
        traced.pattern.kind.name(),
        traced.pattern.residual_group.name(),
        traced.points.len(),
        traced.exponent,
        traced.sides.name()
    );
    for (side, sign) in [("above", 1.0), ("below", -1.0)] {
        let points: Vec<_> = traced.points.iter().filter(|p| (p.param - event.xi0) * sign > 0.0).cloned().collect();
        if points.is_empty() {
            continue;
        }
        let stem = format!("trace_{}_{}_{side}", args.event.event, tag.to_lowercase());
        let mut orbits = Vec::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            let name = format!("{stem}_{i:03}.json");
            write_orbit(&out_file(g, &name), &p.path, &pot)?;
            let plot = File::create(out_file(g, &format!("{stem}_{i:03}_plot.csv")))?;
            write_plot_csv(&p.path, args.samples, BufWriter::new(plot))?;
            orbits.push(Some(name));
        }
        let c_max = points.iter().fold(0.0f64, |m, p| m.max(p.angular_momentum.abs()));
        let half = TracedBranch {
            points,
            ..traced.clone()
        };
        let csv = out_file(g, &format!("{stem}.csv"));
        write_trace_csv(&half, BufWriter::new(File::create(&csv)?), &orbits)?;
        println!("  {side}: {} points, max |c| = {c_max:.3e}; wrote {}", half.points.len(), csv.display());
    }
    Ok(())
}

// verify

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub orbit: PathBuf,
    /// Random directions on which the gradient is compared with a difference quotient.
    #[arg(long, default_value_t = 4)]
    pub probes: usize,
}

pub fn verify(g: &Global, args: &VerifyArgs) -> Outcome {
    let (path, pot) = load_orbit(g, &args.orbit)?;
    print_orbit_summary(&path, &pot)?;
    let scale = path.norm();
    let symmetries: Vec<String> = GroupElement::all()
        .into_iter()
        .filter(|&e| symmetry_residual(e, &path) <= SYMMETRY_TOL * scale)
        .map(|e| e.to_string())
        .collect();
    println!("symmetries       {} of 12: {}", symmetries.len(), symmetries.join(" "));

    let grad = gradient(&path, &pot)?;
    let mut rng = StdRng::seed_from_u64(g.seed);
    let h = 1e-5 * scale;
    let mut worst = 0.0f64;
    for _ in 0..args.probes {
        let v = DVector::from_fn(path.coords().len(), |_, _| rng.gen_range(-1.0..1.0));
        let dir = grad.with_coords(v.normalize());
        let fd = (action(&path.displaced(&dir, h), &pot)? - action(&path.displaced(&dir, -h), &pot)?) / (2.0 * h);
        let exact = grad.coords().dot(dir.coords());
        worst = worst.max((fd - exact).abs() / (1.0 + grad.norm()));
    }
    println!("directional check {worst:.2e} over {} random directions", args.probes);

    let tol = g.tol.unwrap_or(1e-9);
    if grad.norm() > tol {
        return Err(Failure::Check(format!("not stationary: gradient norm {:.3e} exceeds {tol:.0e}", grad.norm())));
    }
    println!("stationary (gradient norm ≤ {tol:.0e})");
    Ok(())
}
