//! Command-line front end and the batch runner behind it.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::config::{ConfigFile, Experiment, ExperimentConfig, InequalityId, DEFAULT_SEED};
use crate::error::{domain, Error, Result};
use crate::evolve::SpaceTimeSamples;
use crate::fields::random_field;
use crate::hyperbolic::{bump_spectrum, helgason_inverse, propagate_radial, RadialGrid};
use crate::maximal::{maximal_profile, sphere_triangle_bound};
use crate::probe::{
    convergence_sweep, judge, lemma_series, low_frequency_bound, maximal_series, smoothing_family, strichartz_series,
    ExperimentReport, ScalingSeries, Threshold,
};
use crate::report::{rows_of, svg_report, write_rows, Row};
use crate::spectra::{enumerate_modes, ModelKind, QuadratureGrid};

pub const WORKERS_ENV: &str = "SCHRODINGER_LAB_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "schrodinger-lab", version, about = "Exact Schrödinger evolution on model manifolds and checks of its dispersive inequalities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for every experiment, overriding the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Also write SVG charts.
    #[arg(long, global = true)]
    pub plot: bool,
    /// Allow runs on T³ and zonal S³.
    #[arg(long, global = true)]
    pub slow: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the mode table of a model.
    Spectra(FieldArgs),
    /// Sample the evolution of a random field.
    Evolve(EvolveArgs),
    /// Certified maximal profile of a random field, or the maximal checks of a configuration.
    Maximal(MaximalArgs),
    /// Space-time Strichartz scaling checks.
    Strichartz,
    /// Local smoothing checks on H³.
    Smoothing,
    /// Convergence sweeps as t decreases to 0.
    Sweep,
    /// Every experiment of the configuration.
    Report,
}

#[derive(Debug, Clone, Args)]
pub struct FieldArgs {
    #[arg(long, default_value = "circle")]
    pub model: ModelKind,
    #[arg(long, default_value_t = 16.0)]
    pub cutoff: f64,
    /// Sobolev index the random field is normalized in.
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
}

#[derive(Debug, Clone, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// Comma-separated sample times.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,1")]
    pub times: Vec<f64>,
    /// Bump centre for the hyperbolic model.
    #[arg(long, default_value_t = 8.0)]
    pub lambda0: f64,
}

#[derive(Debug, Clone, Args)]
pub struct MaximalArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
}

/// What one experiment produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub rows: Vec<Row>,
    pub reports: Vec<ExperimentReport>,
    /// Extra CSV artifacts, by file name.
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: Vec<String>,
    pub pass: bool,
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn summarize(r: &ExperimentReport) -> String {
    let s = &r.series;
    let fit = r.fit.map(|f| format!(" slope={:.4} r2={:.4}", f.slope, f.r2)).unwrap_or_default();
    format!(
        "{} {} {} p={}{} threshold={}",
        if r.pass { "PASS" } else { "FAIL" },
        s.inequality_id,
        s.model,
        s.p_or_q,
        fit,
        r.threshold
    )
}

fn from_reports(reports: Vec<ExperimentReport>) -> Outcome {
    let rows = reports.iter().flat_map(rows_of).collect();
    let summary = reports.iter().map(summarize).collect();
    let pass = reports.iter().all(|r| r.pass);
    Outcome { rows, reports, files: Vec::new(), summary, pass }
}

fn plain_row(e: &Experiment, p: Option<f64>, trials: usize, value: f64, threshold: String, pass: bool) -> Row {
    Row {
        inequality_id: e.id.name().into(),
        model: e.model.name().into(),
        h: None,
        p_or_q: p,
        trials,
        value,
        slope: None,
        r2: None,
        threshold,
        pass,
    }
}

/// Runs one resolved experiment.
pub fn run_experiment(e: &Experiment) -> Result<Outcome> {
    use InequalityId as I;
    let slope_at_least = |bound: f64| Threshold::SlopeAtLeast { bound, tol: e.slope_tol };
    match e.id {
        I::Strichartz | I::TorusPlane | I::TorusLine | I::TorusSpace | I::SphereSharp => {
            let s = strichartz_series(e.id.name(), e.model, &e.family, &e.hs, &e.trials, e.p)?;
            let t = match e.id {
                I::Strichartz => slope_at_least(-1.0 / e.p),
                I::SphereSharp => Threshold::SlopeNear { target: -0.125, tol: e.slope_tol },
                _ => slope_at_least(0.0),
            };
            Ok(from_reports(vec![judge(s, t)?]))
        }
        I::Maximal => {
            let s = maximal_series(e.id.name(), e.model, &e.family, &e.hs, &e.trials, e.p)?;
            Ok(from_reports(vec![judge(s, slope_at_least(-e.exponent))?]))
        }
        I::MaximalLemma => {
            let s = lemma_series(e.model, &e.family, &e.hs, &e.trials, e.p, e.beta)?;
            Ok(from_reports(vec![judge(s, slope_at_least(0.0))?]))
        }
        I::SphereCascade => sphere_cascade(e),
        I::SmoothingLow | I::SmoothingHigh => smoothing(e),
        I::LowFrequency => {
            let (v, ceiling) = low_frequency_bound(e.model, e.p, e.cutoff, &e.family, e.trials[0])?;
            let t = Threshold::AtMost { bound: ceiling };
            let pass = v <= ceiling;
            let row = plain_row(e, Some(e.p), e.trials[0].min(e.family.len()), v, t.to_string(), pass);
            let summary =
                format!("{} {} {} q={} value={v:.6} threshold={t}", if pass { "PASS" } else { "FAIL" }, e.id, e.model, e.p);
            Ok(Outcome { rows: vec![row], summary: vec![summary], pass, ..Default::default() })
        }
        I::Sweep => sweep(e),
    }
}

fn sphere_cascade(e: &Experiment) -> Result<Outcome> {
    let table = Arc::new(enumerate_modes(e.model, e.cutoff)?);
    let n = e.trials[0].min(e.family.len());
    let mut rows = Vec::with_capacity(n);
    let mut steps = Vec::new();
    writeln!(steps, "step,lhs,rhs,margin")?;
    let mut all = true;
    let mut worst: f64 = 0.0;
    let mut c = 0.0;
    for i in 0..n {
        let f = e.family.member(&table, i)?;
        let r = sphere_triangle_bound(&f, e.alpha, e.tolerance)?;
        c = r.c_alpha;
        let bound = r.c_alpha * r.sobolev_norm;
        let pass = r.holds(e.tolerance) && r.maximal_l2.hi <= bound;
        all &= pass;
        worst = worst.max(r.maximal_l2.hi / bound);
        for s in &r.steps {
            writeln!(steps, "t{i}.{},{:e},{:e},{:e}", s.step, s.lhs, s.rhs, s.margin())?;
        }
        let t = format!("cascade_within_{:e}&value<={bound:e}", e.tolerance);
        rows.push(plain_row(e, Some(2.0), 1, r.maximal_l2.hi, t, pass));
    }
    let summary = format!(
        "{} {} {} alpha={} trials={n} C_alpha={c:.6} max(value/bound)={worst:.6}",
        if all { "PASS" } else { "FAIL" },
        e.id,
        e.model,
        e.alpha
    );
    Ok(Outcome {
        rows,
        reports: Vec::new(),
        files: vec![(format!("{}_cascade.csv", e.name), steps)],
        summary: vec![summary],
        pass: all,
    })
}

fn smoothing(e: &Experiment) -> Result<Outcome> {
    let fam = smoothing_family(&e.lambdas, e.radius)?;
    let series = |index: f64, label: &str, pick: &dyn Fn(&crate::probe::SmoothingRow) -> f64| -> Result<ScalingSeries> {
        let mut s = ScalingSeries::new(e.id.name(), e.model.name(), index, label);
        for r in &fam {
            s.push(1.0 / r.lambda0, pick(r), 1)?;
        }
        Ok(s)
    };
    let mut reports = Vec::new();
    if e.id == InequalityId::SmoothingLow {
        reports.push(judge(series(-0.5, "bump", &|r| r.ratio_low)?, Threshold::MedianBounded { factor: 2.0 })?);
        reports.push(judge(
            series(0.0, "bump_l2", &|r| r.ratio_l2)?,
            Threshold::SlopeNear { target: 0.5, tol: e.slope_tol },
        )?);
    } else {
        reports.push(judge(series(1.5, "bump", &|r| r.ratio_high)?, Threshold::MedianBounded { factor: 2.0 })?);
    }
    let mut out = from_reports(reports);
    let s = bump_spectrum(e.lambdas[0], e.radius)?;
    out.files.push((format!("{}_spectrum.csv", e.name), csv_bytes(|b| s.write_csv(b))?));
    Ok(out)
}

fn sweep(e: &Experiment) -> Result<Outcome> {
    let rows = convergence_sweep(e.model, &e.family, &e.alphas, &e.times)?;
    let mut csv = Vec::new();
    writeln!(csv, "alpha,member,t,sup_error,sobolev_norm,bound")?;
    for r in &rows {
        writeln!(csv, "{:e},{},{:e},{:e},{:e},{:e}", r.alpha, r.member, r.t, r.sup_error, r.sobolev_norm, r.bound)?;
    }
    let tmin = e.times.iter().copied().fold(f64::INFINITY, f64::min);
    let mut out = Outcome { pass: true, ..Default::default() };
    for &a in &e.alphas {
        let these: Vec<_> = rows.iter().filter(|r| r.alpha == a).collect();
        let pass = these.iter().all(|r| r.sup_error <= r.bound);
        let at_min = these.iter().filter(|r| r.t == tmin).map(|r| r.sup_error).fold(0.0, f64::max);
        let members = these.iter().map(|r| r.member + 1).max().unwrap_or(0);
        out.rows.push(plain_row(e, Some(a), members, at_min, "sup_error<=t*rate".into(), pass));
        out.summary.push(format!(
            "{} {} {} alpha={a} sup_error(t={tmin})={at_min:.6e}",
            if pass { "PASS" } else { "FAIL" },
            e.id,
            e.model
        ));
        out.pass &= pass;
    }
    out.files.push((format!("{}_sweep.csv", e.name), csv));
    Ok(out)
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(dir.join(name)).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Options shared by every batch run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub plot: bool,
    pub slow: bool,
}

/// Resolves, runs and writes the selected experiments of `file`. Returns
/// the exit code: 0 all pass, 2 any failure.
pub fn run_config(file: &ConfigFile, select: &dyn Fn(InequalityId) -> bool, opts: &RunOptions) -> Result<i32> {
    let seed = opts.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let mut exps = Vec::new();
    for c in file.experiments.iter().filter(|c| select(c.inequality)) {
        let mut e = c.resolve(seed)?;
        if let Some(s) = opts.seed {
            e = ExperimentConfig { seed: Some(s), ..c.clone() }.resolve(s)?;
        }
        exps.push(e);
    }
    if exps.is_empty() {
        return Err(domain("the configuration selects no experiments for this command"));
    }
    let mut names: Vec<&str> = exps.iter().map(|e| e.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(domain(format!("two experiments share the output name `{}`; set `name`", w[0])));
    }
    let out_dir = opts.out.clone().or(file.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let plot = opts.plot || file.output.plot;
    let results: Vec<Option<Result<Outcome>>> = exps
        .par_iter()
        .map(|e| if e.is_slow() && !opts.slow { None } else { Some(run_experiment(e)) })
        .collect();
    let mut rows = Vec::new();
    let mut pass = true;
    for (e, r) in exps.iter().zip(results) {
        let Some(r) = r else {
            println!("SKIP {} {} (needs --slow)", e.id, e.model);
            continue;
        };
        let o = r?;
        for line in &o.summary {
            println!("{line}");
        }
        pass &= o.pass;
        for (name, bytes) in &o.files {
            write_atomic(&out_dir, name, bytes)?;
        }
        if plot {
            for (i, rep) in o.reports.iter().enumerate() {
                write_atomic(&out_dir, &format!("{}_{i}.svg", e.name), svg_report(rep).as_bytes())?;
            }
        }
        rows.extend(o.rows);
    }
    write_atomic(&out_dir, "report.csv", &csv_bytes(|b| write_rows(&rows, b))?)?;
    Ok(if pass { 0 } else { 2 })
}

fn field_table(a: &FieldArgs) -> Result<Arc<crate::spectra::ModeTable>> {
    Ok(Arc::new(enumerate_modes(a.model, a.cutoff)?))
}

fn default_config(ids: &[InequalityId]) -> ConfigFile {
    ConfigFile { experiments: ids.iter().map(|id| ExperimentConfig::minimal(*id)).collect(), ..Default::default() }
}

/// Runs a parsed command line and returns the process exit code.
pub fn execute(cli: Cli) -> Result<i32> {
    use InequalityId as I;
    let file = match &cli.config {
        Some(p) => Some(ConfigFile::load(p)?),
        None => None,
    };
    let opts = RunOptions { out: cli.out.clone(), seed: cli.seed, plot: cli.plot, slow: cli.slow };
    let out_dir = || {
        opts.out
            .clone()
            .or(file.as_ref().and_then(|f| f.output.dir.clone()))
            .unwrap_or_else(|| PathBuf::from("out"))
    };
    let seed = cli.seed.or(file.as_ref().and_then(|f| f.seed)).unwrap_or(DEFAULT_SEED);
    let batch = |ids: &[I], select: &dyn Fn(I) -> bool| -> Result<i32> {
        match &file {
            Some(f) => run_config(f, select, &opts),
            None => run_config(&default_config(ids), select, &opts),
        }
    };
    match &cli.command {
        Command::Spectra(a) => {
            let t = field_table(a)?;
            write_atomic(&out_dir(), "modes.csv", &csv_bytes(|b| t.write_csv(b))?)?;
            println!("{} modes, {} levels, cutoff {}", t.len(), t.levels().len(), t.cutoff());
            Ok(0)
        }
        Command::Evolve(a) => {
            if a.field.model == ModelKind::HyperbolicRadial3 {
                let s = bump_spectrum(a.lambda0, 1.0)?;
                let rg = RadialGrid::radii(12.0, s.grid().end())?;
                let dir = out_dir();
                write_atomic(&dir, "spectrum.csv", &csv_bytes(|b| s.write_csv(b))?)?;
                for (i, t) in a.times.iter().enumerate() {
                    let prof = helgason_inverse(&propagate_radial(&s, *t), &rg)?;
                    write_atomic(&dir, &format!("profile_{i}.csv"), &csv_bytes(|b| prof.write_csv(b))?)?;
                }
                println!("bump at λ₀={} sampled at {} times", a.lambda0, a.times.len());
                return Ok(0);
            }
            let t = field_table(&a.field)?;
            let f = random_field(&t, a.field.alpha, seed);
            let g = QuadratureGrid::for_table(&t)?;
            let s = SpaceTimeSamples::sample(&f, &a.times, &g)?;
            let dir = out_dir();
            write_atomic(&dir, "field.csv", &csv_bytes(|b| f.write_csv(b))?)?;
            write_atomic(&dir, "samples.csv", &csv_bytes(|b| s.write_csv(b))?)?;
            println!("{} modes sampled on {} points at {} times", t.len(), g.len(), a.times.len());
            Ok(0)
        }
        Command::Maximal(a) if file.is_none() => {
            let t = field_table(&a.field)?;
            let f = random_field(&t, a.field.alpha, seed);
            let g = QuadratureGrid::for_table(&t)?;
            let prof = maximal_profile(&f, &g, a.tol)?;
            let dir = out_dir();
            write_atomic(&dir, "field.csv", &csv_bytes(|b| f.write_csv(b))?)?;
            write_atomic(&dir, "maximal_profile.csv", &csv_bytes(|b| prof.write_csv(b))?)?;
            let l2 = crate::maximal::maximal_lp_norm(&prof, 2.0)?;
            println!("‖T*f‖_L2 ∈ [{:.6e}, {:.6e}] on {} points", l2.lo, l2.hi, g.len());
            Ok(0)
        }
        Command::Maximal(_) => batch(&[], &|id| {
            matches!(id, I::Maximal | I::MaximalLemma | I::SphereCascade | I::LowFrequency)
        }),
        Command::Strichartz => batch(&[I::Strichartz], &|id| {
            matches!(id, I::Strichartz | I::TorusPlane | I::TorusLine | I::TorusSpace | I::SphereSharp)
        }),
        Command::Smoothing => batch(&[I::SmoothingLow], &|id| matches!(id, I::SmoothingLow | I::SmoothingHigh)),
        Command::Sweep => batch(&[I::Sweep], &|id| id == I::Sweep),
        Command::Report => match &file {
            Some(_) => batch(&[], &|_| true),
            None => Err(domain("report needs --config")),
        },
    }
}

/// Applies the worker-count environment variable to the global pool.
pub fn init_workers() -> Result<()> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| crate::error::config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(crate::error::config(format!("{WORKERS_ENV} must be positive")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| crate::error::config(format!("cannot size the worker pool: {e}")))?;
    }
    Ok(())
}

/// Entry point: parses `args`, runs, and maps errors to exit code 1.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Err(e) = init_workers() {
        eprintln!("error: {e}");
        return 1;
    }
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FamilyKind;

    #[test]
    fn family_seed_follows_override() {
        let c = ExperimentConfig::minimal(InequalityId::Sweep);
        let e = ExperimentConfig { seed: Some(9), ..c }.resolve(1).unwrap();
        assert!(matches!(e.family.kind, FamilyKind::SobolevEnsemble { seed: 9, .. }));
    }

    #[test]
    fn atomic_write_replaces() {
        let d = tempfile::tempdir().unwrap();
        write_atomic(d.path(), "a.csv", b"one").unwrap();
        write_atomic(d.path(), "a.csv", b"two").unwrap();
        assert_eq!(std::fs::read(d.path().join("a.csv")).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(d.path()).unwrap().count(), 1);
    }
}
