//! `gramtao`: generate tests with expected values from an annotated grammar,
//! run them against a program, and reduce the failures.
//!
//! Exit status is 0 when everything passes, 1 when failures were found or
//! the grammar was rejected, and 2 for usage, spec or infrastructure errors.

mod report;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gramtao::gdd::{self, GddError, ReductionReport, ReductionStrategy};
use gramtao::generate::{self, GenConfig, GenError, Generated, DEFAULT_DEPTH_BUDGET};
use gramtao::grammar::{self, GrammarSpec, ValidationReport};
use gramtao::harness::{self, CompareMode, InputMode, SutSpec};
use gramtao::semantics::{builtin_domain_parking, Domain, DomainCatalog, RateTable};
use gramtao::{textparse, TestArtifact, Verdict};

use report::{Format, Record, Summary};

#[derive(Parser)]
#[command(
    name = "gramtao",
    version,
    about = "Grammar-based test generation with oracles and reduction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a spec and check that it is proper.
    Check(SpecArgs),
    /// Generate artifacts with their expected values.
    Gen(GenArgs),
    /// Generate artifacts and run them against a SUT.
    Run(RunArgs),
    /// Run artifacts and reduce every failure.
    Reduce(ReduceArgs),
}

#[derive(Args)]
struct SpecArgs {
    /// Grammar spec file.
    #[arg(long, env = "GRAMTAO_SPEC")]
    spec: PathBuf,
    /// Rate table for the parking domain.
    #[arg(long, env = "GRAMTAO_RATES")]
    rates: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, env = "GRAMTAO_COUNT", default_value_t = 100)]
    count: usize,
    #[arg(long, env = "GRAMTAO_SEED", default_value_t = 0)]
    seed: u64,
    /// Depth past which expansion is forced to the shortest completion.
    #[arg(long, env = "GRAMTAO_DEPTH", default_value_t = DEFAULT_DEPTH_BUDGET)]
    depth: usize,
    /// Write the report here instead of standard output.
    #[arg(long, env = "GRAMTAO_REPORT")]
    report: Option<PathBuf>,
    #[arg(long, env = "GRAMTAO_FORMAT", value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct SutArgs {
    /// Command line of the program under test, split like a shell would.
    #[arg(long, env = "GRAMTAO_SUT")]
    sut: String,
    #[arg(long, env = "GRAMTAO_TIMEOUT_MS", default_value_t = 5000, value_parser = clap::value_parser!(u64).range(1..))]
    timeout_ms: u64,
    /// Parallel SUT invocations; defaults to the number of CPUs.
    #[arg(long, env = "GRAMTAO_JOBS")]
    jobs: Option<usize>,
    /// Run the SUT one invocation at a time.
    #[arg(long, env = "GRAMTAO_SERIAL")]
    serial: bool,
    /// Pass the test in a file named as the last argument instead of stdin.
    #[arg(long, env = "GRAMTAO_FILE_ARG")]
    file_arg: bool,
    /// Compare real values to the cent.
    #[arg(long, env = "GRAMTAO_CURRENCY")]
    currency: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    gen: GenArgs,
    #[command(flatten)]
    sut: SutArgs,
}

#[derive(Args)]
struct ReduceArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Reduction strategies, in `TAO-reduction` list syntax.
    #[arg(long, env = "GRAMTAO_STRATEGIES")]
    strategies: Option<String>,
    /// Reduce this test text instead of generating artifacts.
    #[arg(long, env = "GRAMTAO_INPUT", conflicts_with = "input_file")]
    input: Option<String>,
    /// Reduce the test text in this file.
    #[arg(long)]
    input_file: Option<PathBuf>,
}

/// The grammar was refused; reported with exit status 1.
#[derive(Debug)]
struct Rejected(ValidationReport);

impl std::fmt::Display for Rejected {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "grammar rejected:\n{}", self.0)
    }
}

impl std::error::Error for Rejected {}

#[derive(Debug, PartialEq, Eq)]
enum Status {
    Clean,
    Failures,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check(args) => cmd_check(&args),
        Command::Gen(args) => cmd_gen(&args),
        Command::Run(args) => cmd_run(&args),
        Command::Reduce(args) => cmd_reduce(&args),
    };
    match result {
        Ok(Status::Clean) => ExitCode::SUCCESS,
        Ok(Status::Failures) => ExitCode::from(1),
        Err(e) if e.is::<Rejected>() => {
            eprint!("{e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

struct Loaded {
    spec: GrammarSpec,
    domain: Domain,
}

fn load(args: &SpecArgs) -> Result<Loaded> {
    let src = fs::read_to_string(&args.spec)
        .with_context(|| format!("reading {}", args.spec.display()))?;
    let mut catalog = DomainCatalog::builtin();
    if let Some(path) = &args.rates {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let rates = RateTable::parse(&text).with_context(|| format!("in {}", path.display()))?;
        catalog.insert(builtin_domain_parking(rates));
    }
    let spec = grammar::parse_spec_with(&src, &catalog)
        .with_context(|| format!("in {}", args.spec.display()))?;
    let Some(domain) = catalog.get(spec.domain_name()).cloned() else {
        bail!("unknown semantic domain `{}`", spec.domain_name());
    };
    Ok(Loaded { spec, domain })
}

fn cmd_check(args: &SpecArgs) -> Result<Status> {
    let loaded = load(args)?;
    let report = grammar::validate_properness(&loaded.spec);
    if !report.is_proper() {
        return Err(Rejected(report).into());
    }
    println!(
        "{}: proper, {} productions, domain {}",
        args.spec.display(),
        loaded.spec.productions().len(),
        loaded.spec.domain_name()
    );
    Ok(Status::Clean)
}

fn generate_trees(spec: &GrammarSpec, args: &GenArgs) -> Result<Vec<Generated>> {
    let cfg = GenConfig {
        depth_budget: args.depth,
        ..GenConfig::new(args.seed, args.count)
    };
    match generate::generate(spec, &cfg) {
        Ok(trees) => Ok(trees),
        Err(GenError::NotProper(report)) => Err(Rejected(report).into()),
        Err(GenError::Exhausted { trees }) => {
            eprintln!(
                "warning: only {} distinct artifacts could be generated (asked for {})",
                trees.len(),
                args.count
            );
            Ok(trees)
        }
        Err(e) => Err(e.into()),
    }
}

/// Generated artifacts, in generation order. `None` where no oracle exists.
fn artifacts(loaded: &Loaded, args: &GenArgs) -> Result<Vec<(Record, Option<TestArtifact>)>> {
    let trees = generate_trees(&loaded.spec, args)?;
    Ok(trees
        .into_iter()
        .enumerate()
        .map(|(id, g)| {
            match TestArtifact::build(
                &loaded.spec,
                &loaded.domain,
                g.tree.clone(),
                Some(g.provenance),
            ) {
                Ok(a) => {
                    let mut r = Record::new(id, a.text.clone(), a.seed_info);
                    r.oracle = Some(a.oracle.to_string());
                    (r, Some(a))
                }
                Err(e) => {
                    let text = gramtao::render::yield_subtree_raw(&g.tree, g.tree.root());
                    let mut r = Record::new(id, text, Some(g.provenance));
                    r.error = Some(e.to_string());
                    (r, None)
                }
            }
        })
        .collect())
}

fn emit(path: Option<&Path>, format: Format, records: &[Record], summary: &Summary) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = io::BufWriter::new(
                fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
            );
            report::write(&mut f, format, records, summary)?;
        }
        None => report::write(&mut io::stdout().lock(), format, records, summary)?,
    }
    Ok(())
}

fn cmd_gen(args: &GenArgs) -> Result<Status> {
    let loaded = load(&args.spec)?;
    let rows = artifacts(&loaded, args)?;
    let without = rows.iter().filter(|(_, a)| a.is_none()).count();
    let records: Vec<Record> = rows.into_iter().map(|(r, _)| r).collect();
    let summary = vec![
        ("total", records.len().to_string()),
        ("with_oracle", (records.len() - without).to_string()),
        ("without_oracle", without.to_string()),
    ];
    emit(args.report.as_deref(), args.format, &records, &summary)?;
    Ok(Status::Clean)
}

fn sut_spec(args: &SutArgs) -> Result<SutSpec> {
    let command = shlex::split(&args.sut).context("unbalanced quotes in --sut")?;
    if command.is_empty() {
        bail!("--sut is empty");
    }
    Ok(SutSpec {
        input_mode: if args.file_arg {
            InputMode::FileArg
        } else {
            InputMode::Stdin
        },
        timeout: Duration::from_millis(args.timeout_ms),
        serial: args.serial,
        compare: if args.currency {
            CompareMode::Currency
        } else {
            CompareMode::Tolerant
        },
        ..SutSpec::new(command)
    })
}

fn jobs(args: &SutArgs) -> usize {
    if args.serial {
        return 1;
    }
    args.jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

/// Apply `f` to every item on up to `jobs` threads, keeping input order.
fn par_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let jobs = jobs.min(items.len()).max(1);
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let mut parts: Vec<(usize, R)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs)
            .map(|_| {
                s.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        let Some(item) = items.get(i) else { break };
                        done.push((i, f(item)));
                    }
                    done
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    parts.sort_by_key(|(i, _)| *i);
    parts.into_iter().map(|(_, r)| r).collect()
}

/// Run every artifact that has an oracle; fills in the verdict columns.
fn execute(
    rows: &mut [(Record, Option<TestArtifact>)],
    sut: &SutSpec,
    jobs: usize,
) -> Result<Vec<Option<Verdict>>> {
    let verdicts = par_map(rows, jobs, |(_, a)| {
        a.as_ref().map(|a| harness::run_one(sut, a)).transpose()
    });
    let verdicts = verdicts.into_iter().collect::<Result<Vec<_>, _>>()?;
    for ((record, _), v) in rows.iter_mut().zip(&verdicts) {
        if let Some(v) = v {
            record.set_verdict(v);
        } else {
            record.verdict = Some("no-oracle".into());
        }
    }
    Ok(verdicts)
}

fn run_summary(verdicts: &[Option<Verdict>]) -> Summary {
    let executed = verdicts.iter().flatten().count();
    let failed = verdicts.iter().flatten().filter(|v| !v.is_pass()).count();
    let ratio = if executed == 0 {
        0.0
    } else {
        failed as f64 / executed as f64
    };
    vec![
        ("total", verdicts.len().to_string()),
        ("executed", executed.to_string()),
        ("passed", (executed - failed).to_string()),
        ("failed", failed.to_string()),
        ("failure_ratio", report::fmt_ratio(ratio)),
    ]
}

fn print_summary(summary: &Summary) {
    let line: Vec<String> = summary.iter().map(|(k, v)| format!("{k}={v}")).collect();
    eprintln!("{}", line.join(" "));
}

fn cmd_run(args: &RunArgs) -> Result<Status> {
    let loaded = load(&args.gen.spec)?;
    let sut = sut_spec(&args.sut)?;
    let mut rows = artifacts(&loaded, &args.gen)?;
    let verdicts = execute(&mut rows, &sut, jobs(&args.sut))?;
    let summary = run_summary(&verdicts);
    let records: Vec<Record> = rows.into_iter().map(|(r, _)| r).collect();
    emit(
        args.gen.report.as_deref(),
        args.gen.format,
        &records,
        &summary,
    )?;
    print_summary(&summary);
    let failed = verdicts.iter().flatten().any(|v| !v.is_pass());
    Ok(if failed {
        Status::Failures
    } else {
        Status::Clean
    })
}

fn strategies(args: &ReduceArgs, spec: &GrammarSpec) -> Result<Vec<ReductionStrategy>> {
    match &args.strategies {
        Some(list) => {
            ReductionStrategy::parse_list(list).map_err(|e| anyhow::anyhow!("--strategies: {e}"))
        }
        None => Ok(spec.reduction_directives().to_vec()),
    }
}

fn cmd_reduce(args: &ReduceArgs) -> Result<Status> {
    let gen = &args.run.gen;
    let loaded = load(&gen.spec)?;
    let sut = sut_spec(&args.run.sut)?;
    let strategies = strategies(args, &loaded.spec)?;
    let input = match (&args.input, &args.input_file) {
        (Some(text), _) => Some(text.clone()),
        (None, Some(path)) => {
            Some(fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)
        }
        (None, None) => None,
    };
    let mut rows = match input {
        Some(text) => {
            let tree = textparse::parse_text(&loaded.spec, &text)
                .context("input is not in the grammar's language")?;
            let a = TestArtifact::build(&loaded.spec, &loaded.domain, tree, None)
                .context("input has no oracle")?;
            let mut r = Record::new(0, a.text.clone(), None);
            r.oracle = Some(a.oracle.to_string());
            vec![(r, Some(a))]
        }
        None => artifacts(&loaded, gen)?,
    };
    let jobs = jobs(&args.run.sut);
    let verdicts = execute(&mut rows, &sut, jobs)?;
    let failing: Vec<(Record, TestArtifact)> = rows
        .into_iter()
        .zip(&verdicts)
        .filter(|(_, v)| v.as_ref().is_some_and(|v| !v.is_pass()))
        .filter_map(|((r, a), _)| a.map(|a| (r, a)))
        .collect();

    let sessions: Vec<Result<ReductionReport, GddError>> = par_map(&failing, jobs, |(_, a)| {
        gdd::gdd(&loaded.spec, &loaded.domain, a, &strategies, &sut)
    });
    let mut records = Vec::new();
    let mut ratios = Vec::new();
    let mut skipped = 0;
    for ((mut record, _), session) in failing.into_iter().zip(sessions) {
        match session {
            Ok(rep) => {
                record.set_reduction(&rep);
                ratios.push(rep.ratio());
            }
            Err(GddError::NotFailing(v)) => {
                eprintln!(
                    "notice: artifact {} passed on re-run ({v}); skipped",
                    record.id
                );
                skipped += 1;
                record.error = Some(format!("not failing on re-run: {v}"));
            }
            Err(e) => return Err(e).with_context(|| format!("reducing artifact {}", record.id)),
        }
        records.push(record);
    }
    let mean = if ratios.is_empty() {
        0.0
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    };
    let mut summary = run_summary(&verdicts);
    summary.extend([
        ("reduced", ratios.len().to_string()),
        ("skipped", skipped.to_string()),
        ("mean_reduction_ratio", report::fmt_ratio(mean)),
    ]);
    emit(gen.report.as_deref(), gen.format, &records, &summary)?;
    print_summary(&summary);
    io::stderr().flush()?;
    Ok(if records.is_empty() {
        Status::Clean
    } else {
        Status::Failures
    })
}
