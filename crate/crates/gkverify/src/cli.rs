//! Command-line front end.
//!
//! Exit status: 0 when every selected check passes, 1 when a check fails,
//! 2 on usage, file, parse or evaluation errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gkverify_core::geomap::MappingPair;
use gkverify_core::{CovKind, Expr};

use crate::deffile::{
    parse_mapping, parse_pair, parse_space, write_pair, ConnectionDef, Domain, PairDef, SpaceDef,
};
use crate::report::{CheckReport, SampleBox};
use crate::sampling::Sampler;
use crate::suites::{self, GeodesicOptions};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gkverify", version, about = "Numerical checks for generalized Kählerian spaces and geodesic mappings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Metric, connection and torsion summary of a space file.
    CheckSpace(CheckArgs),
    /// Structure algebra, constancy and torsion relations of a space file.
    CheckKahler(CheckArgs),
    /// Geodesic form, mapping conditions and equitorsion checks of a pair file.
    CheckMapping {
        #[command(flatten)]
        common: CheckArgs,
        #[arg(long, default_value = "all")]
        kind: KindArg,
    },
    /// Collinearity defect along geodesics of the source of a pair file.
    GeodesicTest {
        #[command(flatten)]
        common: CheckArgs,
        /// Number of random initial conditions.
        #[arg(long, default_value_t = 10)]
        curves: usize,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 1e-3)]
        h: f64,
        #[arg(long, default_value_t = 1e-8)]
        defect_tol: f64,
    },
    /// Writes a pair file whose mapped block is `base` deformed by a mapping file.
    BuildPair {
        base: PathBuf,
        mapping: PathBuf,
        /// `forward`: base is the source; `backward`: base is the target.
        #[arg(long, value_enum, default_value_t = Direction::Forward)]
        direction: Direction,
        /// Space file supplying the mapped block's metric and structure.
        #[arg(long)]
        overlay: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Points at which ξ is checked for antisymmetry.
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct CheckArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 50)]
    points: usize,
    #[arg(long, default_value_t = gkverify_core::DEFAULT_TOLERANCE)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the machine-readable report here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy)]
struct KindArg(Option<CovKind>);

impl std::str::FromStr for KindArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "all" {
            return Ok(KindArg(None));
        }
        s.parse::<u8>()
            .ok()
            .and_then(CovKind::from_number)
            .map(|k| KindArg(Some(k)))
            .ok_or_else(|| format!("expected 1, 2, 3, 4 or all, got `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Direction {
    Forward,
    Backward,
}

fn read(path: &Path) -> Result<(String, Vec<u8>)> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let text = String::from_utf8(bytes.clone())
        .with_context(|| format!("{} is not UTF-8", path.display()))?;
    Ok((text, bytes))
}

fn sample_box(domain: &Domain, excludes: &[Expr]) -> SampleBox {
    SampleBox {
        lo: domain.lo.clone(),
        hi: domain.hi.clone(),
        exclude: excludes.iter().map(|e| e.to_string()).collect(),
    }
}

/// Loaded input with its sampling setup.
struct Input<T> {
    def: T,
    bytes: Vec<u8>,
    domain: Domain,
    excludes: Vec<Expr>,
}

fn load_space(path: &Path) -> Result<Input<SpaceDef>> {
    let (text, bytes) = read(path)?;
    let def = parse_space(&text).with_context(|| path.display().to_string())?;
    Ok(Input {
        domain: def.domain(),
        excludes: def.excludes.clone(),
        def,
        bytes,
    })
}

fn load_pair(path: &Path) -> Result<Input<PairDef>> {
    let (text, bytes) = read(path)?;
    let def = parse_pair(&text).with_context(|| path.display().to_string())?;
    Ok(Input {
        domain: def.domain(),
        excludes: def.all_excludes(),
        def,
        bytes,
    })
}

fn new_report<T>(command: &str, args: &CheckArgs, input: &Input<T>, points: usize) -> CheckReport {
    CheckReport::new(
        command,
        &args.file.display().to_string(),
        &input.bytes,
        args.seed,
        points,
        sample_box(&input.domain, &input.excludes),
    )
}

fn finish(report: &CheckReport, json: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    if let Some(path) = json {
        std::fs::write(path, report.to_json())
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    out.write_all(report.to_table().as_bytes())?;
    Ok(if report.passed() { EXIT_PASS } else { EXIT_FAIL })
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::CheckSpace(args) => {
            let input = load_space(&args.file)?;
            let space = input.def.build(&stem(&args.file))?;
            let points = Sampler::new(args.seed).points(&input.domain, &input.excludes, args.points)?;
            let mut report = new_report("check-space", &args, &input, points.len());
            suites::check_space(&space, &points, args.tol, &mut report)?;
            finish(&report, args.json.as_deref(), out)
        }
        Command::CheckKahler(args) => {
            let input = load_space(&args.file)?;
            let space = input.def.build(&stem(&args.file))?;
            anyhow::ensure!(space.structure().is_some(), "{}: no structure F given", args.file.display());
            anyhow::ensure!(space.metric().is_some(), "{}: no metric given", args.file.display());
            let points = Sampler::new(args.seed).points(&input.domain, &input.excludes, args.points)?;
            let mut report = new_report("check-kahler", &args, &input, points.len());
            suites::check_kahler(&space, &points, args.tol, &mut report)?;
            finish(&report, args.json.as_deref(), out)
        }
        Command::CheckMapping { common: args, kind } => {
            let input = load_pair(&args.file)?;
            let points = Sampler::new(args.seed).points(&input.domain, &input.excludes, args.points)?;
            let (source, target) = input.def.build(&points)?;
            anyhow::ensure!(target.metric().is_some(), "{}: target has no metric", args.file.display());
            anyhow::ensure!(target.structure().is_some(), "{}: target has no structure F", args.file.display());
            let pair = MappingPair::new(&source, &target)?;
            let kinds = match kind.0 {
                Some(k) => vec![k],
                None => CovKind::ALL.to_vec(),
            };
            let mut report = new_report("check-mapping", &args, &input, points.len());
            suites::check_mapping(&pair, &kinds, &points, args.tol, &mut report)?;
            finish(&report, args.json.as_deref(), out)
        }
        Command::GeodesicTest {
            common: args,
            curves,
            steps,
            h,
            defect_tol,
        } => {
            let input = load_pair(&args.file)?;
            let mut sampler = Sampler::new(args.seed);
            let checks = sampler.points(&input.domain, &input.excludes, args.points)?;
            let (source, target) = input.def.build(&checks)?;
            let pair = MappingPair::new(&source, &target)?;
            let starts: Vec<_> = sampler
                .points(&input.domain, &input.excludes, curves)?
                .into_iter()
                .map(|x| {
                    let v = sampler.velocity(x.len());
                    (x, v)
                })
                .collect();
            let mut report = new_report("geodesic-test", &args, &input, starts.len());
            suites::geodesic_test(&pair, &starts, GeodesicOptions { steps, h, defect_tol }, &mut report)?;
            finish(&report, args.json.as_deref(), out)
        }
        Command::BuildPair {
            base,
            mapping,
            direction,
            overlay,
            output,
            points,
            seed,
        } => {
            let base_input = load_space(&base)?;
            let n = base_input.def.dimension;
            let (mapping_text, _) = read(&mapping)?;
            let mapping = parse_mapping(&mapping_text, n).with_context(|| mapping.display().to_string())?;
            let overlay = match overlay {
                Some(path) => Some(load_space(&path)?.def),
                None => None,
            };
            let pair = build_pair(base_input.def, mapping, overlay, direction)?;
            let checks = Sampler::new(seed).points(&pair.domain(), &pair.all_excludes(), points)?;
            pair.build(&checks)?;
            let text = write_pair(&pair);
            match output {
                Some(path) => std::fs::write(&path, text)
                    .with_context(|| format!("cannot write {}", path.display()))?,
                None => out.write_all(text.as_bytes())?,
            }
            Ok(EXIT_PASS)
        }
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "space".into())
}

fn build_pair(
    mut base: SpaceDef,
    mapping: crate::deffile::MappingDef,
    overlay: Option<SpaceDef>,
    direction: Direction,
) -> Result<PairDef> {
    if base.connection == ConnectionDef::Mapped {
        anyhow::bail!("the base space cannot itself be mapped");
    }
    let n = base.dimension;
    let (metric, structure, name) = match overlay {
        Some(o) => {
            anyhow::ensure!(o.dimension == n, "overlay has dimension {}, base has {n}", o.dimension);
            (o.metric, o.structure, o.name)
        }
        None => (base.metric.clone(), base.structure.clone(), None),
    };
    let base_name = base.name.clone().unwrap_or_else(|| "base".into());
    let mapped = SpaceDef {
        name: Some(name.unwrap_or_else(|| format!("{base_name} (mapped)"))),
        dimension: n,
        domain: None,
        excludes: Vec::new(),
        metric,
        structure,
        connection: ConnectionDef::Mapped,
    };
    let domain = base.domain.take();
    let excludes = std::mem::take(&mut base.excludes);
    let (source, target) = match direction {
        Direction::Forward => (base, mapped),
        Direction::Backward => (mapped, base),
    };
    Ok(PairDef {
        name: Some(format!("{} -> {}", source.name.as_deref().unwrap_or("source"), target.name.as_deref().unwrap_or("target"))),
        domain,
        excludes,
        source,
        target,
        mapping: Some(mapping),
    })
}

/// Runs the tool on `args` (program name first), writing the human report
/// and help text to `out` and diagnostics to `err`. Returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                EXIT_ERROR
            } else {
                let _ = out.write_all(text.as_bytes());
                EXIT_PASS
            };
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_ERROR
        }
    }
}
