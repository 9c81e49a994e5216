//! `dyadcz`: covering queries, decompositions and the acceptance battery.
//!
//! Exit codes: 0 success, 2 bad input, 3 hypothesis not met (or nothing
//! found), 4 a guaranteed bound or verification check failed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use dyadic_cz::covering::{cover_box, cover_ball, uncovered_witness};
use dyadic_cz::czd::{czd, verify_czd, Report};
use dyadic_cz::czo::{apply_truncated, default_eps, weak11_statistic, Kernel, KernelKind};
use dyadic_cz::geometry::{Ball, Cube, Point};
use dyadic_cz::grids::{CubeId, GridFamily};
use dyadic_cz::measure::{DiscreteMeasure, DoublingParams, MeasureFile};
use dyadic_cz::rational::Rational;
use dyadic_cz::suite::{run_all, SuiteSizes};
use dyadic_cz::{Error, Result};

#[derive(Parser)]
#[command(name = "dyadcz", version, about = "Shifted dyadic grids and nondoubling Calderón–Zygmund decompositions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find a cube of the family containing a ball or a box.
    Cover(CoverArgs),
    /// Describe one cube of a filtration.
    Grid(GridArgs),
    /// Build a ball that a subfamily of n filtrations cannot cover.
    Witness(WitnessArgs),
    /// Decompose the density of a measure at a level.
    Czd(CzdArgs),
    /// Re-check a decomposition report.
    Verify(VerifyArgs),
    /// Empirical weak-(1,1) statistic of a truncated singular integral.
    Weak11(Weak11Args),
    /// Run the acceptance battery.
    Suite(SuiteArgs),
}

#[derive(Args)]
struct Output {
    /// Write JSON here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CoverArgs {
    #[arg(long)]
    dim: usize,
    /// Ball center, comma separated rationals.
    #[arg(long, conflicts_with = "lower", requires = "radius")]
    center: Option<String>,
    #[arg(long)]
    radius: Option<String>,
    /// Box lower corner, comma separated rationals.
    #[arg(long, requires = "side")]
    lower: Option<String>,
    #[arg(long)]
    side: Option<String>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    dim: usize,
    /// Filtration index in 0..=dim.
    #[arg(long)]
    m: usize,
    /// Generation.
    #[arg(long, allow_hyphen_values = true)]
    k: i64,
    /// Locate the cube holding this point...
    #[arg(long, allow_hyphen_values = true, conflicts_with = "index")]
    point: Option<String>,
    /// ...or take the cube with these lattice indices.
    #[arg(long, allow_hyphen_values = true)]
    index: Option<String>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct WitnessArgs {
    #[arg(long)]
    dim: usize,
    /// Filtrations to keep, comma separated.
    #[arg(long, conflicts_with = "exclude")]
    keep: Option<String>,
    /// Filtration to drop; the other n are kept.
    #[arg(long)]
    exclude: Option<usize>,
    /// Largest allowed side ratio; defaults to 2p.
    #[arg(long)]
    max_ratio: Option<String>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct CzdArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    lambda: String,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    report: PathBuf,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct Weak11Args {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "cauchy_real")]
    kernel: String,
    /// Truncation radius, or `auto` for half the smallest atom separation.
    #[arg(long, default_value = "auto")]
    eps: String,
    /// Extra trials with random densities `u/8`, `u ∈ 0..=8`.
    #[arg(long, default_value_t = 0)]
    trials: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long, default_value_t = 20240607)]
    seed: u64,
    /// Reduced sizes for a fast smoke run.
    #[arg(long)]
    quick: bool,
    #[command(flatten)]
    out: Output,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Cover(a) => cover(a),
        Command::Grid(a) => grid(a),
        Command::Witness(a) => witness(a),
        Command::Czd(a) => decompose(a),
        Command::Verify(a) => verify(a),
        Command::Weak11(a) => weak11(a),
        Command::Suite(a) => suite(a),
    }
}

fn rational(text: &str) -> Result<Rational> {
    text.trim().parse()
}

fn emit<T: Serialize>(out: &Output, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match &out.output {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn cover(a: CoverArgs) -> Result<u8> {
    let family = GridFamily::new(a.dim)?;
    let (result, query) = match (a.center, a.radius, a.lower, a.side) {
        (Some(c), Some(r), None, _) => {
            let ball = Ball::new(Point::parse_list(&c)?, rational(&r)?)?;
            (cover_ball(&family, &ball)?, ball.circumscribed())
        }
        (None, _, Some(l), Some(s)) => {
            let b = Cube::new(Point::parse_list(&l)?, rational(&s)?)?;
            (cover_box(&family, &b)?, b)
        }
        _ => return Err(Error::InvalidArgument("give --center/--radius or --lower/--side".into())),
    };
    #[derive(Serialize)]
    struct Out<'a> {
        query: &'a Cube,
        cube: &'a CubeId,
        k0: i64,
        side_ratio: &'a Rational,
        r#box: Cube,
    }
    emit(
        &a.out,
        &Out { query: &query, cube: &result.cube, k0: result.k0, side_ratio: &result.side_ratio, r#box: family.cube_box(&result.cube) },
    )?;
    Ok(0)
}

fn grid(a: GridArgs) -> Result<u8> {
    let family = GridFamily::new(a.dim)?;
    let offset = family.offset(a.m, a.k)?;
    let id = match (a.point, a.index) {
        (Some(p), None) => {
            let x = Point::parse_list(&p)?;
            x.check_dim(a.dim)?;
            family.locate(a.m, a.k, &x)
        }
        (None, Some(j)) => {
            let j: Vec<i128> = j
                .split(',')
                .map(|s| s.trim().parse().map_err(|e| Error::Parse(format!("index {s:?}: {e}"))))
                .collect::<Result<_>>()?;
            if j.len() != a.dim {
                return Err(Error::DimensionMismatch { expected: a.dim, found: j.len() });
            }
            CubeId::new(a.m, a.k, j)
        }
        _ => return Err(Error::InvalidArgument("give --point or --index".into())),
    };
    #[derive(Serialize)]
    struct Out {
        cube: CubeId,
        r#box: Cube,
        offset: Rational,
        parent: CubeId,
        children: Vec<CubeId>,
    }
    let out = Out { r#box: family.cube_box(&id), offset, parent: family.parent(&id), children: family.children(&id), cube: id };
    emit(&a.out, &out)?;
    Ok(0)
}

fn witness(a: WitnessArgs) -> Result<u8> {
    let family = GridFamily::new(a.dim)?;
    let subset: Vec<usize> = match (a.keep, a.exclude) {
        (Some(k), None) => k
            .split(',')
            .map(|s| s.trim().parse().map_err(|e| Error::Parse(format!("filtration {s:?}: {e}"))))
            .collect::<Result<_>>()?,
        (None, Some(x)) => {
            if x > a.dim {
                return Err(Error::InvalidArgument(format!("filtration {x} out of range")));
            }
            family.filtrations().filter(|&m| m != x).collect()
        }
        _ => return Err(Error::InvalidArgument("give --keep or --exclude".into())),
    };
    let ratio = match a.max_ratio {
        Some(r) => rational(&r)?,
        None => family.ratio_bound(),
    };
    let ball = uncovered_witness(&family, &subset, &ratio)?;
    #[derive(Serialize)]
    struct Out {
        filtrations: Vec<usize>,
        max_ratio: Rational,
        ball: Ball,
    }
    emit(&a.out, &Out { filtrations: subset, max_ratio: ratio, ball })?;
    Ok(0)
}

/// A report for nonnegative `f`, or one per sign for signed `f`.
#[derive(Serialize)]
#[serde(untagged)]
enum Decomposed {
    Signed { positive: Report, negative: Report },
    Plain(Report),
}

impl Decomposed {
    // serde's untagged buffering cannot carry the i128 lattice indices, so
    // the shape is picked by hand
    fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let parse = |v: serde_json::Value| serde_json::from_value::<Report>(v).map_err(|e| Error::Parse(e.to_string()));
        match value {
            serde_json::Value::Object(mut map) if map.contains_key("positive") => {
                let positive = parse(map.remove("positive").unwrap_or_default())?;
                let negative = parse(map.remove("negative").unwrap_or_default())?;
                Ok(Decomposed::Signed { positive, negative })
            }
            other => Ok(Decomposed::Plain(parse(other)?)),
        }
    }

    fn reports(&self) -> Vec<&Report> {
        match self {
            Decomposed::Signed { positive, negative } => vec![positive, negative],
            Decomposed::Plain(r) => vec![r],
        }
    }
}

fn params_for(a: &CzdArgs, family: &GridFamily, mu: &DiscreteMeasure) -> Result<DoublingParams> {
    let defaults = DoublingParams::defaults(family, mu.growth_dim());
    let alpha = a.alpha.as_deref().map(rational).transpose()?.unwrap_or(defaults.alpha);
    let beta = a.beta.as_deref().map(rational).transpose()?.unwrap_or(defaults.beta);
    DoublingParams::new(alpha, beta)
}

fn decompose(a: CzdArgs) -> Result<u8> {
    let file = MeasureFile::from_json(&read(&a.input)?)?;
    let lambda = rational(&a.lambda)?;
    let family = GridFamily::new(file.dimension)?;
    let run_one = |mu: &DiscreteMeasure| -> Result<Report> {
        let params = params_for(&a, &family, mu)?;
        Ok(Report::new(mu, &family, czd(mu, &family, &lambda, &params)?))
    };
    let out = if file.has_negative_f() {
        let (pos, neg) = file.split_signed()?;
        Decomposed::Signed { positive: run_one(&pos)?, negative: run_one(&neg)? }
    } else {
        Decomposed::Plain(run_one(&DiscreteMeasure::try_from(file)?)?)
    };
    emit(&a.out, &out)?;
    Ok(status(&out))
}

fn status(d: &Decomposed) -> u8 {
    let ok = d.reports().iter().all(|r| r.verification.all_passed());
    if ok {
        0
    } else {
        for r in d.reports() {
            for c in r.verification.checks.iter().filter(|c| !c.passed) {
                eprintln!("check ({}) failed: {}", c.id, c.description);
                for f in &c.failures {
                    eprintln!("  {f}");
                }
            }
        }
        4
    }
}

fn verify(a: VerifyArgs) -> Result<u8> {
    let mut d = Decomposed::from_json(&read(&a.report)?)?;
    let recheck = |r: &mut Report| -> Result<()> {
        let family = GridFamily::new(r.measure.dim())?;
        r.verification = verify_czd(&r.measure, &family, &r.decomposition);
        Ok(())
    };
    match &mut d {
        Decomposed::Signed { positive, negative } => {
            recheck(positive)?;
            recheck(negative)?;
        }
        Decomposed::Plain(r) => recheck(r)?,
    }
    #[derive(Serialize)]
    struct Out<'a> {
        passed: bool,
        checks: Vec<&'a dyadic_cz::czd::VerificationReport>,
    }
    let reports = d.reports();
    let out = Out { passed: reports.iter().all(|r| r.verification.all_passed()), checks: reports.iter().map(|r| &r.verification).collect() };
    emit(&a.out, &out)?;
    Ok(status(&d))
}

fn weak11(a: Weak11Args) -> Result<u8> {
    use rand::{Rng, SeedableRng};

    let file = MeasureFile::from_json(&read(&a.input)?)?;
    let kind: KernelKind = a.kernel.parse()?;
    if a.trials > 0 && a.seed.is_none() {
        return Err(Error::InvalidArgument("--seed is required with --trials".into()));
    }
    // |f| drives the statistic; the sign pattern does not matter for nonnegativity
    let abs: Vec<Rational> = file.points.iter().map(|p| p.f.abs()).collect();
    let base = DiscreteMeasure::try_from(MeasureFile { points: file.points.iter().map(|p| {
        let mut p = p.clone();
        p.f = Rational::zero();
        p
    }).collect(), ..file.clone() })?;
    let ker = Kernel::for_measure(kind, base.dim(), base.growth_dim())?;
    let eps = if a.eps == "auto" { default_eps(&base) } else { rational(&a.eps)? };

    let mut densities = vec![abs];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(a.seed.unwrap_or(0));
    for _ in 0..a.trials {
        densities.push((0..base.len()).map(|_| Rational::ratio(rng.gen_range(0..=8), 8)).collect());
    }
    let mut stats = Vec::new();
    for f in densities {
        let mu = base.with_density(f)?;
        let l1 = mu.f_l1();
        if !l1.is_positive() {
            continue;
        }
        let t = apply_truncated(&mu, &ker, &eps)?;
        let err = t.error_bounds.iter().cloned().fold(0.0, f64::max);
        stats.push((weak11_statistic(&mu, &t.values, l1.to_f64())?, err));
    }
    if stats.is_empty() {
        return Err(Error::Hypothesis("every density has zero L1 norm".into()));
    }
    let mut sorted: Vec<f64> = stats.iter().map(|s| s.0).collect();
    sorted.sort_by(f64::total_cmp);
    #[derive(Serialize)]
    struct Trial {
        statistic: f64,
        max_error_bound: f64,
    }
    #[derive(Serialize)]
    struct Out {
        kernel: KernelKind,
        eps: Rational,
        trials: Vec<Trial>,
        min: f64,
        median: f64,
        max: f64,
    }
    let out = Out {
        kernel: kind,
        eps,
        min: sorted[0],
        median: sorted[sorted.len() / 2],
        max: sorted[sorted.len() - 1],
        trials: stats.into_iter().map(|(statistic, max_error_bound)| Trial { statistic, max_error_bound }).collect(),
    };
    emit(&a.out, &out)?;
    Ok(0)
}

fn suite(a: SuiteArgs) -> Result<u8> {
    let sizes = if a.quick { SuiteSizes::quick() } else { SuiteSizes::full() };
    let outcomes = run_all(a.seed, &sizes);
    for o in &outcomes {
        println!("{o}");
    }
    if a.out.output.is_some() {
        emit(&a.out, &outcomes)?;
    }
    Ok(if outcomes.iter().all(|o| o.passed) { 0 } else { 4 })
}
