//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O, 2 parse or usage, 3 numerical failure,
//! 4 infeasible construction.

pub mod config;
pub mod render;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::ffi::OsString;
use std::io::{self, Write};
use std::path::PathBuf;

use crate::construct::{assemble_theorem_a, parse_blocks, ConstructError};
use crate::dynamics::{
    classify_omega, contraction_experiment, default_window, find_singular_point, orbit, shadow_check, shadow_threshold, DynamicsError,
    Side, StepPoint,
};
use crate::hair::{tail_polyline, HairError};
use crate::itinerary::{parse_itinerary, ItineraryError};
use config::{parse_config, RunConfig};
use render::{parse_res, parse_viewport, Density, RenderSpec};

#[derive(Parser, Debug)]
#[command(name = "exphair", about = "Hairs and orbits of λe^z")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    zeta: Option<f64>,
    #[arg(long = "M", global = true)]
    m: Option<u64>,
    #[arg(long, global = true)]
    p: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat `key=value` file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample the tail of a hair as CSV, optionally rendering a PPM.
    Trace(TraceArgs),
    /// Choose zero blocks so each stage passes twice through its target.
    Construct(ConstructArgs),
    #[command(subcommand)]
    Dynamics(DynCommand),
}

#[derive(Args, Debug)]
struct TraceArgs {
    itinerary: String,
    /// Largest potential; defaults to zeta + 10.
    #[arg(long)]
    eta_max: Option<f64>,
    #[arg(long, default_value_t = 0.25)]
    step: f64,
    #[arg(long)]
    render: Option<PathBuf>,
    /// `re_min,re_max,im_min,im_max`
    #[arg(long)]
    viewport: Option<String>,
    #[arg(long, default_value = "512x512")]
    res: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConstructArgs {
    /// Literal blocks, e.g. `"[1] [-1]"`.
    blocks: String,
    #[arg(long, default_value_t = 1)]
    depth: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SideArg {
    Plus,
    Minus,
}

#[derive(Subcommand, Debug)]
enum DynCommand {
    /// Forward orbit as CSV.
    Orbit {
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Shadowing of the orbit of zero.
    Shadow {
        #[arg(long, allow_hyphen_values = true, conflicts_with = "samples")]
        z: Option<String>,
        /// Random starting points left of the threshold, drawn from `--seed`.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 2)]
        n: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Approximate the point whose orbit follows an itinerary.
    FindZs {
        itinerary: String,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        /// Window half-width; defaults to a value derived from lambda.
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diameters of iterated inverse images of the contraction region.
    Contraction {
        #[arg(long, default_value_t = 2)]
        n: u32,
        #[arg(long, value_enum, default_value_t = SideArg::Plus)]
        side: SideArg,
        #[arg(long, default_value_t = 60)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify the omega-limit set of an orbit.
    Omega {
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long)]
        itinerary: Option<String>,
        #[arg(long, default_value_t = 200)]
        budget: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    Io(String),
    Parse(String),
    Numeric(String),
    Feasibility(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Feasibility(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Io(m) | CliError::Parse(m) | CliError::Numeric(m) | CliError::Feasibility(m) => m,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<ItineraryError> for CliError {
    fn from(e: ItineraryError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<HairError> for CliError {
    fn from(e: HairError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::Itinerary(i) => i.into(),
            e => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<ConstructError> for CliError {
    fn from(e: ConstructError) -> Self {
        match e {
            ConstructError::Certificate { .. } | ConstructError::ZeroBlock(_) => CliError::Parse(e.to_string()),
            ConstructError::NotFound { .. } | ConstructError::TowerInfeasible { .. } => CliError::Feasibility(e.to_string()),
            e => CliError::Numeric(e.to_string()),
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn load_config(g: &GlobalArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &g.config {
        let text = std::fs::read_to_string(path)?;
        cfg.apply(&parse_config(&text).map_err(CliError::Parse)?).map_err(CliError::Parse)?;
    }
    if let Some(v) = g.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = g.zeta {
        cfg.zeta = v;
    }
    if let Some(v) = g.m {
        cfg.m = v;
    }
    if let Some(v) = g.p {
        cfg.p = v;
    }
    if let Some(v) = g.seed {
        cfg.seed = v;
    }
    cfg.validate().map_err(CliError::Parse)?;
    Ok(cfg)
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

/// Parses `(x,y)`, `x,y` or a bare real `x`.
fn parse_point(text: &str) -> Result<Complex64, CliError> {
    let t = text.trim().trim_start_matches('(').trim_end_matches(')');
    let parts: Vec<&str> = t.split(',').map(str::trim).collect();
    let num = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite());
    let z = match parts.as_slice() {
        [x] => num(x).map(|x| Complex64::new(x, 0.0)),
        [x, y] => num(x).zip(num(y)).map(|(x, y)| Complex64::new(x, y)),
        _ => None,
    };
    z.ok_or_else(|| CliError::Parse(format!("bad point {text:?}; expected (x,y)")))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let cfg = load_config(&cli.global)?;
    match cli.command {
        Command::Trace(a) => trace(&cfg, a),
        Command::Construct(a) => construct(&cfg, a),
        Command::Dynamics(d) => dynamics(&cfg, d),
    }
}

fn trace(cfg: &RunConfig, a: TraceArgs) -> Result<(), CliError> {
    let s = parse_itinerary(&a.itinerary)?;
    if !(a.step > 0.0) {
        return Err(CliError::Parse("step must be positive".into()));
    }
    let viewport = a.viewport.as_deref().map(parse_viewport).transpose().map_err(CliError::Parse)?;
    let (w, h) = parse_res(&a.res).map_err(CliError::Parse)?;
    let eta_max = a.eta_max.unwrap_or(cfg.zeta + 10.0);
    let tail = tail_polyline(&s, cfg.zeta, eta_max, a.step, cfg.lambda)?;
    if let Some(bad) = tail.samples.iter().find(|p| p.err_bound > cfg.tolerances.depth_tol || p.depth > cfg.caps.max_depth) {
        return Err(CliError::Numeric(format!("sample at eta {} exceeds the depth tolerance or cap", bad.eta)));
    }
    let digest = cfg.digest(&format!("trace {s}"));

    let mut wtr = csv::Writer::from_writer(sink(&a.out)?);
    wtr.write_record(["eta", "re", "im", "depth", "err_bound", "config_digest"])?;
    for p in &tail.samples {
        wtr.write_record([
            format!("{:.17e}", p.eta),
            format!("{:.17e}", p.point.re),
            format!("{:.17e}", p.point.im),
            p.depth.to_string(),
            format!("{:e}", p.err_bound),
            digest.clone(),
        ])?;
    }
    wtr.flush()?;

    if let Some(path) = &a.render {
        let pts: Vec<Complex64> = tail.samples.iter().map(|p| p.point).collect();
        let spec = match viewport {
            Some([a0, a1, b0, b1]) => {
                RenderSpec { re_min: a0, re_max: a1, im_min: b0, im_max: b1, width: w, height: h, gamma: render::DEFAULT_GAMMA }
            }
            None => RenderSpec::fit(&pts, w, h),
        };
        spec.validate().map_err(CliError::Parse)?;
        let mut d = Density::new(spec);
        d.polyline(&pts);
        let mut f = io::BufWriter::new(std::fs::File::create(path)?);
        d.write_ppm(&mut f, &format!("config-digest {digest}"))?;
        f.flush()?;
    }
    Ok(())
}

fn construct(cfg: &RunConfig, a: ConstructArgs) -> Result<(), CliError> {
    let blocks = parse_blocks(&a.blocks)?;
    if blocks.is_empty() {
        return Err(CliError::Parse("no blocks given".into()));
    }
    let digest = cfg.digest(&format!("construct {} depth {}", a.blocks.trim(), a.depth));
    match assemble_theorem_a(&blocks, cfg.lambda, cfg.m, cfg.p, a.depth, cfg.zeta) {
        Ok(mut cert) => {
            cert.config_digest = digest;
            let mut out = sink(&a.out)?;
            out.write_all(cert.to_text().as_bytes())?;
            out.flush()?;
            Ok(())
        }
        Err(ConstructError::TowerInfeasible { j, mut certificate }) => {
            certificate.config_digest = digest;
            let mut out = sink(&a.out)?;
            out.write_all(certificate.to_text().as_bytes())?;
            out.flush()?;
            Err(CliError::Feasibility(format!("stage {j} target is beyond tower depth; certificate truncated")))
        }
        Err(e) => Err(e.into()),
    }
}

fn dynamics(cfg: &RunConfig, d: DynCommand) -> Result<(), CliError> {
    let lambda = cfg.lambda;
    match d {
        DynCommand::Orbit { z, steps, out } => {
            let z = parse_point(&z)?;
            let rec = orbit(z, lambda, steps);
            let digest = cfg.digest(&format!("orbit {z} {steps}"));
            let errs = rec.error_bounds();
            let mut wtr = csv::Writer::from_writer(sink(&out)?);
            wtr.write_record(["step", "re", "im", "strip", "t_level", "err_bound", "config_digest"])?;
            for (i, (s, e)) in rec.steps.iter().zip(&errs).enumerate() {
                let (re, im) = match s.point {
                    StepPoint::Machine(p) => (format!("{:.17e}", p.re), format!("{:.17e}", p.im)),
                    StepPoint::Tower(t) => (format!("|z|={t}"), String::new()),
                };
                let opt = |v: Option<String>| v.unwrap_or_default();
                wtr.write_record([
                    i.to_string(),
                    re,
                    im,
                    opt(s.strip.map(|k| k.to_string())),
                    opt(s.t_level.map(|k| k.to_string())),
                    format!("{e:e}"),
                    digest.clone(),
                ])?;
            }
            wtr.flush()?;
            eprintln!("verdict {:?}", rec.verdict);
            Ok(())
        }
        DynCommand::Shadow { z, samples, n, out } => {
            let thr = shadow_threshold(n, lambda).ok_or(DynamicsError::HypothesisUnverifiable(n))?;
            let points = match (z, samples) {
                (Some(z), _) => vec![parse_point(&z)?],
                (None, Some(k)) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    (0..k)
                        .map(|_| Complex64::new(rng.gen_range(thr - 10.0..thr), rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)))
                        .collect()
                }
                (None, None) => return Err(CliError::Parse("give --z or --samples".into())),
            };
            let digest = cfg.digest(&format!("shadow n {n} points {}", points.len()));
            let mut wtr = csv::Writer::from_writer(sink(&out)?);
            wtr.write_record(["re", "im", "n", "hypothesis", "all_within", "final_level", "max_ratio", "config_digest"])?;
            for z in points {
                let r = shadow_check(z, n, lambda)?;
                let ratio = r.distances.iter().zip(&r.radii).map(|(d, r)| d / r).fold(0.0, f64::max);
                wtr.write_record([
                    format!("{:.17e}", z.re),
                    format!("{:.17e}", z.im),
                    n.to_string(),
                    r.hypothesis.to_string(),
                    r.all_within.to_string(),
                    r.final_level.map(|k| k.to_string()).unwrap_or_default(),
                    format!("{ratio:e}"),
                    digest.clone(),
                ])?;
            }
            wtr.flush()?;
            Ok(())
        }
        DynCommand::FindZs { itinerary, depth, c, out } => {
            let s = parse_itinerary(&itinerary)?;
            let c = match c {
                Some(c) => c,
                None => default_window(lambda)?,
            };
            let est = find_singular_point(&s, lambda, depth, c)?;
            let mut o = sink(&out)?;
            writeln!(o, "digest {}", cfg.digest(&format!("find-zs {s} depth {depth} c {c:e}")))?;
            writeln!(o, "point {:.15e} {:.15e}", est.point.re, est.point.im)?;
            writeln!(o, "depth {}", est.depth)?;
            writeln!(o, "diameter_bound {:e}", est.diameter_bound)?;
            writeln!(o, "window_diameter {:e}", est.window_diameter)?;
            let m: Vec<String> = est.measured.iter().map(|d| format!("{d:e}")).collect();
            writeln!(o, "measured {}", m.join(" "))?;
            writeln!(o, "certified_prefix {}", est.certified_prefix)?;
            o.flush()?;
            Ok(())
        }
        DynCommand::Contraction { n, side, steps, out } => {
            let side = match side {
                SideArg::Plus => Side::Plus,
                SideArg::Minus => Side::Minus,
            };
            let rep = contraction_experiment(n, lambda, steps, side)?;
            let digest = cfg.digest(&format!("contraction n {n} {side:?} {steps}"));
            let mut wtr = csv::Writer::from_writer(sink(&out)?);
            wtr.write_record(["m", "diameter", "distance", "config_digest"])?;
            for (i, (d, r)) in rep.diameters.iter().zip(&rep.distances).enumerate() {
                wtr.write_record([(i + 1).to_string(), format!("{d:e}"), format!("{r:e}"), digest.clone()])?;
            }
            wtr.flush()?;
            eprintln!("m0 {} terminal {} fixed point {}", rep.m0, rep.terminal, rep.fixed_point);
            Ok(())
        }
        DynCommand::Omega { z, itinerary, budget, out } => {
            let z = parse_point(&z)?;
            let s = itinerary.as_deref().map(parse_itinerary).transpose()?;
            let rep = classify_omega(z, s.as_ref(), lambda, budget)?;
            let mut o = sink(&out)?;
            writeln!(o, "digest {}", cfg.digest(&format!("omega {z} {budget} {}", itinerary.unwrap_or_default())))?;
            writeln!(o, "class {:?}", rep.class)?;
            writeln!(o, "steps {}", rep.steps)?;
            writeln!(o, "episodes {:?}", rep.episodes)?;
            writeln!(o, "markers {}", rep.markers.len())?;
            writeln!(o, "max_re {:e}", rep.max_re)?;
            writeln!(o, "longest_increase {}", rep.longest_increase)?;
            o.flush()?;
            Ok(())
        }
    }
}
