use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use mpsens::analysis::{
    load_model, one_way_sweep, two_way_sweep, write_csv, write_json, Model, OutputFormat,
    SweepConfig, SweepRecord, SweepSpec,
};
use mpsens::analysis::{GridEntry, PositionEntry, SchemeEntry};
use mpsens::conditioning::{condition, Evidence};
use mpsens::covariation::{build_multi, verify_preserving, Scheme, Variation, Verdict};
use mpsens::divergence::{report_mp, scheme_ordering};
use mpsens::{CISet, Error, IndexSet};

#[derive(Parser)]
#[command(name = "mpsens", version, about = "Model-preserving sensitivity analysis for Gaussian CI models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify every CI statement of a model against its covariance.
    Check { model: PathBuf },
    /// Print the covariance implied by the model's DAG.
    BuildCov { model: PathBuf },
    /// Vary one covariance entry with a covariation scheme.
    Covary(CovaryArgs),
    /// One-way sensitivity sweep.
    Sweep(SweepArgs),
    /// Two-way sensitivity sweep.
    Sweep2(SweepArgs),
    /// Condition the model on observed values.
    Condition {
        model: PathBuf,
        /// Comma-separated name=value pairs.
        #[arg(long)]
        evidence: String,
    },
    /// Compare the Frobenius distances of all schemes at one point.
    Compare {
        model: PathBuf,
        #[arg(long)]
        pos: String,
        #[arg(long)]
        delta: f64,
    },
}

#[derive(Args)]
struct CovaryArgs {
    model: PathBuf,
    /// Entry to vary, as `i,j` (names or 1-based indices).
    #[arg(long)]
    pos: String,
    #[arg(long)]
    delta: f64,
    /// none, total, partial, row or column.
    #[arg(long, default_value = "partial")]
    scheme: String,
    /// Row set for the row scheme, comma-separated.
    #[arg(long = "E")]
    e: Option<String>,
    /// Column set for the column scheme, comma-separated.
    #[arg(long = "F")]
    f: Option<String>,
    /// Restrict the covariation to one statement (1-based).
    #[arg(long)]
    statement: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    /// Model file; overrides the one named in the config.
    model: Option<PathBuf>,
    /// JSON sweep description.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Varied entry as `i,j`; give it once per dimension.
    #[arg(long)]
    pos: Vec<String>,
    /// Grid as `min:max:step` or a comma-separated list, once per dimension.
    #[arg(long)]
    grid: Vec<String>,
    /// Scheme as `kind` or `kind:v1+v2` for row/column sets; repeatable.
    #[arg(long)]
    scheme: Vec<String>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failures that map to a specific exit status.
enum Outcome {
    Ok,
    Validation,
    Inadmissible,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Validation) => ExitCode::from(1),
        Ok(Outcome::Inadmissible) => ExitCode::from(2),
        Err(e) => {
            let broken_pipe = e.chain().any(|c| {
                c.downcast_ref::<io::Error>()
                    .is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe)
            });
            if broken_pipe {
                return ExitCode::SUCCESS;
            }
            eprintln!("error: {e:#}");
            let inadmissible = e
                .downcast_ref::<Error>()
                .is_some_and(|e| matches!(e, Error::Inadmissible(_)));
            ExitCode::from(if inadmissible { 2 } else { 1 })
        }
    }
}

fn run(cmd: Command) -> anyhow::Result<Outcome> {
    match cmd {
        Command::Check { model } => check(&load(&model)?),
        Command::BuildCov { model } => build_cov(&load(&model)?),
        Command::Covary(args) => covary(&args),
        Command::Sweep(args) => sweep(&args, 1),
        Command::Sweep2(args) => sweep(&args, 2),
        Command::Condition { model, evidence } => cond(&load(&model)?, &evidence),
        Command::Compare { model, pos, delta } => compare(&load(&model)?, &pos, delta),
    }
}

fn load(path: &Path) -> anyhow::Result<Model> {
    load_model(path).with_context(|| format!("loading {}", path.display()))
}

fn set_text(model: &Model, set: &IndexSet) -> String {
    format!("{{{}}}", model.names_of(set).join(","))
}

fn statement_text(model: &Model, k: usize) -> String {
    let s = &model.ci.statements()[k];
    format!(
        "{} _||_ {} | {}",
        set_text(model, s.a()),
        set_text(model, s.b()),
        set_text(model, s.c())
    )
}

fn check(model: &Model) -> anyhow::Result<Outcome> {
    let res = model.check()?;
    let mut out = io::stdout().lock();
    for k in 0..model.ci.len() {
        match res.failures.iter().find(|(f, _)| *f == k) {
            None => writeln!(out, "[{}] {}: holds", k + 1, statement_text(model, k))?,
            Some((_, w)) => writeln!(
                out,
                "[{}] {}: FAILS, witness {w}",
                k + 1,
                statement_text(model, k)
            )?,
        }
    }
    if res.holds {
        writeln!(out, "all {} statements hold", model.ci.len())?;
        Ok(Outcome::Ok)
    } else {
        writeln!(out, "{} of {} statements fail", res.failures.len(), model.ci.len())?;
        Ok(Outcome::Validation)
    }
}

fn print_matrix(model: &Model, m: &mpsens::SymMatrix) -> io::Result<()> {
    let mut out = io::stdout().lock();
    let width = model.variables.iter().map(|v| v.len()).max().unwrap_or(1);
    write!(out, "{:width$}", "")?;
    for v in &model.variables {
        write!(out, " {v:>14}")?;
    }
    writeln!(out)?;
    for (i, v) in model.variables.iter().enumerate() {
        write!(out, "{v:width$}")?;
        for x in m.row(i) {
            write!(out, " {x:>14}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn build_cov(model: &Model) -> anyhow::Result<Outcome> {
    let dag = model
        .dag
        .as_ref()
        .ok_or_else(|| anyhow!("the model has no dag section"))?;
    print_matrix(model, &dag.to_gaussian().1)?;
    Ok(Outcome::Ok)
}

fn parse_set(model: &Model, text: &str) -> anyhow::Result<IndexSet> {
    let ix = text
        .split([',', '+'])
        .map(|t| model.resolve(t.trim()))
        .collect::<mpsens::Result<Vec<_>>>()?;
    Ok(IndexSet::new(ix)?)
}

fn covary(args: &CovaryArgs) -> anyhow::Result<Outcome> {
    let model = load(&args.model)?;
    let (i, j) = model.parse_position(&args.pos)?;
    let scheme = match args.scheme.as_str() {
        "none" => Scheme::None,
        "total" => Scheme::Total,
        "partial" => Scheme::Partial,
        "row" => Scheme::Row(args.e.as_deref().map(|e| parse_set(&model, e)).transpose()?),
        "column" => Scheme::Column(args.f.as_deref().map(|f| parse_set(&model, f)).transpose()?),
        other => bail!("unknown scheme {other:?}; expected none, total, partial, row or column"),
    };
    if args.e.is_some() && !matches!(scheme, Scheme::Row(_)) {
        bail!("--E only applies to the row scheme");
    }
    if args.f.is_some() && !matches!(scheme, Scheme::Column(_)) {
        bail!("--F only applies to the column scheme");
    }
    let target = match args.statement {
        None => model.ci.clone(),
        Some(k) if (1..=model.ci.len()).contains(&k) => {
            CISet::new(vec![model.ci.statements()[k - 1].clone()])
        }
        Some(k) => bail!("model has {} statements, got {k}", model.ci.len()),
    };

    let v = Variation::single(model.dim(), i, j, args.delta)?;
    let plan = build_multi(&v, &[scheme], &target)?;
    let verdict = verify_preserving(&plan, &model.covariance, &model.ci, &model.tolerance)?;
    let report = report_mp(&model.covariance, &plan, &args.scheme)?;

    let mut out = io::stdout().lock();
    for w in plan.warnings() {
        writeln!(out, "warning: {w}")?;
    }
    writeln!(out, "{plan}")?;
    match &verdict {
        Verdict::Preserving => writeln!(out, "verdict: preserving")?,
        Verdict::NotPreserving(fails) => {
            writeln!(out, "verdict: NOT preserving")?;
            for (k, w) in fails {
                writeln!(out, "  [{}] {}: witness {w}", k + 1, statement_text(&model, *k))?;
            }
        }
    }
    writeln!(out, "frobenius: {}", report.frobenius)?;
    match report.kl {
        Some(kl) => writeln!(out, "kl: {kl}")?,
        None => writeln!(out, "kl: n/a (perturbed covariance is not positive definite)")?,
    }
    Ok(if report.admissible {
        Outcome::Ok
    } else {
        Outcome::Inadmissible
    })
}

fn parse_grid(text: &str) -> anyhow::Result<GridEntry> {
    let nums = |sep: char| -> anyhow::Result<Vec<f64>> {
        text.split(sep)
            .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad grid value {t:?}")))
            .collect()
    };
    if text.contains(':') {
        match nums(':')?[..] {
            [min, max, step] => Ok(GridEntry::Range { min, max, step }),
            _ => bail!("grid range must be min:max:step, got {text:?}"),
        }
    } else {
        Ok(GridEntry::List { values: nums(',')? })
    }
}

fn parse_scheme(text: &str) -> SchemeEntry {
    let (kind, set) = match text.split_once(':') {
        Some((k, s)) => (k, Some(s.split('+').map(str::to_string).collect())),
        None => (text, None),
    };
    SchemeEntry {
        kind: kind.to_string(),
        e: if kind == "row" { set.clone() } else { None },
        f: if kind == "column" { set } else { None },
        statement_index: None,
    }
}

fn sweep_spec(args: &SweepArgs) -> anyhow::Result<SweepSpec> {
    let mut spec = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            SweepSpec::from_json_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => SweepSpec::default(),
    };
    if !args.pos.is_empty() {
        spec.positions = args
            .pos
            .iter()
            .map(|p| match p.split_once(',') {
                Some((i, j)) => Ok(PositionEntry {
                    i: i.trim().to_string(),
                    j: j.trim().to_string(),
                }),
                None => Err(anyhow!("position must be i,j, got {p:?}")),
            })
            .collect::<anyhow::Result<_>>()?;
    }
    if !args.grid.is_empty() {
        spec.grids = args.grid.iter().map(|g| parse_grid(g)).collect::<anyhow::Result<_>>()?;
    }
    if !args.scheme.is_empty() {
        spec.schemes = args.scheme.iter().map(|s| parse_scheme(s)).collect();
    }
    if let Some(f) = &args.format {
        spec.format = Some(f.clone());
    }
    Ok(spec)
}

fn sweep(args: &SweepArgs, ways: usize) -> anyhow::Result<Outcome> {
    let spec = sweep_spec(args)?;
    let model_path = match (&args.model, &spec.model) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => match args.config.as_deref().and_then(Path::parent) {
            Some(dir) => dir.join(p),
            None => PathBuf::from(p),
        },
        (None, None) => bail!("no model given on the command line or in the config"),
    };
    let model = load(&model_path)?;
    let format: OutputFormat = spec.format.as_deref().unwrap_or("csv").parse()?;
    let cfg: SweepConfig = spec.to_config(&model)?;
    if cfg.positions.len() != ways {
        bail!("this sweep needs exactly {ways} position(s), got {}", cfg.positions.len());
    }
    let records = if ways == 1 {
        one_way_sweep(&model, &cfg)?
    } else {
        two_way_sweep(&model, &cfg)?
    };
    write_records(&records, format, args.out.as_deref())?;
    Ok(Outcome::Ok)
}

fn write_records(records: &[SweepRecord], format: OutputFormat, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => mpsens::analysis::emit(records, format, p)
            .with_context(|| format!("writing {}", p.display()))?,
        None => {
            let stdout = io::stdout().lock();
            match format {
                OutputFormat::Csv => write_csv(records, stdout)?,
                OutputFormat::Json => write_json(records, stdout)?,
            }
        }
    }
    Ok(())
}

fn cond(model: &Model, evidence: &str) -> anyhow::Result<Outcome> {
    let pairs = evidence
        .split(',')
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| anyhow!("evidence must be name=value, got {kv:?}"))?;
            let value: f64 = v.trim().parse().with_context(|| format!("bad value in {kv:?}"))?;
            Ok((model.resolve(k.trim())?, value))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let ev = Evidence::new(&pairs)?;
    let c = condition(&model.mean, &model.covariance, &ev)?;
    let mut out = io::stdout().lock();
    writeln!(out, "conditional mean:")?;
    for (k, i) in c.free.iter().enumerate() {
        writeln!(out, "  {:<8} {}", model.variables[i], c.mean[k])?;
    }
    writeln!(out, "conditional covariance:")?;
    let names = model.names_of(&c.free);
    for (k, name) in names.iter().enumerate() {
        write!(out, "  {name:<8}")?;
        for x in c.cov.row(k) {
            write!(out, " {x:>14.6}")?;
        }
        writeln!(out)?;
    }
    Ok(Outcome::Ok)
}

fn compare(model: &Model, pos: &str, delta: f64) -> anyhow::Result<Outcome> {
    let position = model.parse_position(pos)?;
    let rep = scheme_ordering(&model.covariance, position, delta, &model.ci)?;
    let mut out = io::stdout().lock();
    writeln!(out, "{:<10} {:>16} {:>16} {:>11}", "scheme", "frobenius", "kl", "admissible")?;
    for r in &rep.reports {
        let kl = r.kl.map_or("-".to_string(), |k| format!("{k:.10}"));
        writeln!(
            out,
            "{:<10} {:>16.10} {:>16} {:>11}",
            r.scheme, r.frobenius, kl, r.admissible
        )?;
    }
    if rep.chain_holds() {
        writeln!(out, "frobenius ordering holds")?;
    } else {
        for v in &rep.violations {
            writeln!(out, "ordering violated: {v}")?;
        }
    }
    Ok(Outcome::Ok)
}
