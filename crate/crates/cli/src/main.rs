//! `rcw`: batch decisions, certificate checks, reductions, Fraïssé stages and
//! model evaluations.
//!
//! Exit codes: 0 when a verdict or report was produced, 1 on usage or
//! internal errors, 2 when `verify` rejects a certificate or `fraisse check`
//! finds a violation. Logging goes to stderr and is set by `RCW_LOG`
//! (`quiet`, `info` or `debug`); stdout carries only the one-line results.

use std::fs;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{debug, info};

use rcw_core::deciders::{self, Certificate, Mode, Verdict};
use rcw_core::fraisse::{self, StageOutcome, STAGE_CAP};
use rcw_core::modelzoo::{self, ZooModel, ZooPrinciple};
use rcw_core::reductions::oracle::{write_trace, SeededOracle};
use rcw_core::reductions::{self, OracleFamily};
use rcw_core::verify::{verify_certificate, verify_json};

#[derive(Parser, Debug)]
#[command(name = "rcw", version, about = "Local choice-principle workbench")]
struct Cli {
    /// Worker threads for candidate-group searches; never changes the output.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bounded decisions for one implication.
    #[command(subcommand)]
    Decide(Decide),
    /// rc decisions over a range of target sizes.
    #[command(subcommand)]
    Matrix(Matrix),
    /// Checks a certificate file independently of the deciders.
    Verify { cert: PathBuf },
    /// Runs the executable reduction against a seeded adversarial oracle.
    Reduce(ReduceArgs),
    /// Builds and checks Fraïssé stages.
    #[command(subcommand)]
    Fraisse(Fraisse),
    /// Evaluates principles on finite model approximations.
    #[command(subcommand)]
    Zoo(Zoo),
}

#[derive(Subcommand, Debug)]
enum Decide {
    /// Do arity-N selections give choice on M-sets?
    Rc {
        #[arg(long)]
        arity: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value = "complete")]
        mode: Mode,
        /// Certificate output for a fails verdict.
        #[arg(long)]
        cert: Option<PathBuf>,
    },
    /// Do arity-M selections give arity-K selections?
    Nrc {
        #[arg(long)]
        arity: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        bound: usize,
        #[arg(long, default_value = "complete")]
        mode: Mode,
        #[arg(long)]
        cert: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum Matrix {
    Rc {
        #[arg(long)]
        arity: usize,
        /// Inclusive range `A..B`.
        #[arg(long, value_parser = parse_range)]
        m_range: RangeInclusive<usize>,
        #[arg(long, default_value = "complete")]
        mode: Mode,
        /// Directory receiving one certificate per fails verdict.
        #[arg(long)]
        cert_dir: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct ReduceArgs {
    #[arg(long)]
    n: usize,
    /// JSON array of disjoint atom lists, or an object with a `members` array.
    #[arg(long)]
    family: PathBuf,
    #[arg(long)]
    oracle_seed: u64,
    /// Run the prime-power reduction for `P^K` instead (with `--power`).
    #[arg(long, requires = "power")]
    prime: Option<u64>,
    #[arg(long, requires = "prime")]
    power: Option<u32>,
    /// Writes the partial selection as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Writes the oracle calls as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Fraisse {
    /// Builds stages `F_0 .. F_S` and writes the last one.
    Build {
        #[arg(long)]
        arity: usize,
        #[arg(long)]
        stages: usize,
        #[arg(long)]
        out: PathBuf,
        /// Atom cap for the whole build.
        #[arg(long, default_value_t = STAGE_CAP)]
        cap: usize,
        /// Write a resumable partial stage instead of failing at the cap.
        #[arg(long)]
        partial_ok: bool,
    },
    /// Continues a partial stage dump.
    Resume {
        file: PathBuf,
        #[arg(long)]
        cap: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Selection scans and the extension property on a stage dump.
    Check {
        file: PathBuf,
        /// Largest number of small sets scanned one by one.
        #[arg(long, default_value_t = 2_000_000)]
        set_budget: u64,
    },
}

#[derive(Subcommand, Debug)]
enum Zoo {
    Eval {
        /// `vfin`, `bfm` or `vlines`.
        #[arg(long, required_unless_present = "model_file")]
        model: Option<String>,
        #[arg(long, default_value = "")]
        params: String,
        /// Reads the model from a descriptor instead.
        #[arg(long, conflicts_with_all = ["model", "params"])]
        model_file: Option<PathBuf>,
        /// `nrc_fin`, `c_n`, `ncfin_minus` or `rc`.
        #[arg(long)]
        principle: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        support_budget: usize,
        #[arg(long, default_value_t = 64)]
        cap: usize,
        /// Comma-separated atoms fixed from the start.
        #[arg(long, value_delimiter = ',')]
        support: Vec<usize>,
        #[arg(long)]
        cert: Option<PathBuf>,
        /// Writes the model descriptor.
        #[arg(long)]
        descriptor: Option<PathBuf>,
    },
}

fn parse_range(s: &str) -> std::result::Result<RangeInclusive<usize>, String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected A..B, got {s:?}"))?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad range start {a:?}"))?;
    let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| format!("bad range end {b:?}"))?;
    if a > b {
        return Err(format!("empty range {s}"));
    }
    Ok(a..=b)
}

fn init_logging() -> Result<()> {
    let level = match std::env::var("RCW_LOG").as_deref() {
        Err(_) | Ok("") | Ok("quiet") => log::LevelFilter::Error,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        Ok(other) => bail!("RCW_LOG must be quiet, info or debug, got {other:?}"),
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Every printed fails verdict is checked by the independent verifier first.
fn checked(cert: &Certificate) -> Result<()> {
    verify_certificate(cert).map_err(|r| anyhow!("internal error: own certificate rejected ({r})"))
}

fn log_examined(v: &Verdict) {
    for e in &v.examined {
        debug!(
            "examined degree {} order {} gens [{}]{}",
            e.domain_size,
            e.order,
            e.generators.join(", "),
            if e.witness { " witness" } else { "" }
        );
    }
}

fn report_verdict(out: &mut impl Write, head: &str, v: &Verdict, cert: Option<&Path>) -> Result<()> {
    log_examined(v);
    let mut line = format!("{head}: {} ({} candidate groups examined", v.kind, v.examined.len());
    if let Some(c) = &v.witness {
        checked(c)?;
        line.push_str(&format!(", witness of degree {} verified", c.domain_size));
        if let Some(path) = cert {
            write_file(path, &c.to_json())?;
            line.push_str(&format!(", certificate {}", path.display()));
        }
    }
    line.push(')');
    writeln!(out, "{line}")?;
    Ok(())
}

fn run(cli: Cli, out: &mut impl Write) -> Result<u8> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global()?;
    }
    match cli.command {
        Command::Decide(Decide::Rc { arity, m, mode, cert }) => {
            info!("decide rc n={arity} m={m} mode={mode}");
            let v = deciders::decide_local_rc(arity, m, mode)?;
            report_verdict(out, &format!("rc n={arity} m={m} mode={mode}"), &v, cert.as_deref())?;
        }
        Command::Decide(Decide::Nrc { arity, k, bound, mode, cert }) => {
            info!("decide nrc m={arity} k={k} bound={bound} mode={mode}");
            let v = deciders::decide_local_nrc(arity, k, bound, mode)?;
            report_verdict(out, &format!("nrc m={arity} k={k} bound={bound} mode={mode}"), &v, cert.as_deref())?;
        }
        Command::Matrix(Matrix::Rc { arity, m_range, mode, cert_dir }) => {
            if let Some(d) = &cert_dir {
                fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
            }
            for (m, v) in deciders::implication_matrix(arity, m_range, mode)? {
                let path = cert_dir.as_ref().map(|d| d.join(format!("rc_n{arity}_m{m}.json")));
                report_verdict(out, &format!("rc n={arity} m={m} mode={mode}"), &v, path.as_deref())?;
            }
        }
        Command::Verify { cert } => {
            let text = read_file(&cert)?;
            return Ok(match verify_json(&text) {
                Ok(()) => {
                    writeln!(out, "accepted {}", cert.display())?;
                    0
                }
                Err(r) => {
                    writeln!(out, "rejected {}: {r}", cert.display())?;
                    2
                }
            });
        }
        Command::Reduce(a) => reduce(a, out)?,
        Command::Fraisse(f) => return fraisse_cmd(f, out),
        Command::Zoo(Zoo::Eval { model, params, model_file, principle, n, support_budget, cap, support, cert, descriptor }) => {
            let mut m = match model_file {
                Some(f) => ZooModel::from_descriptor(&read_file(&f)?)?,
                None => modelzoo::make_model(model.as_deref().expect("clap requires a model"), &params, cap, &support)?,
            };
            if !support.is_empty() {
                let e = rcw_core::SubsetCode::from_indices(support.iter().copied())?;
                m = m.with_support(m.support.union(e))?;
            }
            if let Some(d) = descriptor {
                write_file(&d, &m.to_descriptor())?;
            }
            let p = ZooPrinciple::parse(&principle, n)?;
            let v = modelzoo::evaluate(&m, p, support_budget)?;
            let mut line = v.summary();
            if let Some(c) = &v.certificate {
                checked(c)?;
                line.push_str("; certificate verified");
                if let Some(path) = &cert {
                    write_file(path, &c.to_json())?;
                    line.push_str(&format!(" ({})", path.display()));
                }
            }
            writeln!(out, "{line}")?;
        }
    }
    Ok(0)
}

fn reduce(a: ReduceArgs, out: &mut impl Write) -> Result<()> {
    let members = reductions::parse_family(&read_file(&a.family)?)?;
    let count = members.len();
    let mut oracle = SeededOracle::new(a.oracle_seed);
    let mut fam = OracleFamily::new(members, a.n, &mut oracle)?;
    let (label, sel) = match (a.prime, a.power) {
        (Some(p), Some(k)) => (format!("reduce p^k={p}^{k}"), reductions::reduce_pk_woc(p, k, &mut fam)?),
        _ => (format!("reduce n={}", a.n), reductions::reduce(a.n, &mut fam)?),
    };
    sel.validate(fam.members())?;
    if let Some(t) = &a.trace {
        write_file(t, &write_trace(fam.calls()))?;
    }
    if let Some(o) = &a.out {
        let mut s = serde_json::to_string_pretty(&sel)?;
        s.push('\n');
        write_file(o, &s)?;
    }
    writeln!(
        out,
        "{label}: {} of {count} members selected, valid (oracle seed {}, {} oracle calls)",
        sel.len(),
        a.oracle_seed,
        fam.calls().len()
    )?;
    Ok(())
}

fn fraisse_cmd(f: Fraisse, out: &mut impl Write) -> Result<u8> {
    match f {
        Fraisse::Build { arity, stages, out: path, cap, partial_ok } => {
            let mut st = fraisse::FraisseStage::empty(arity)?;
            for s in 1..=stages {
                match fraisse::build_stage_capped(&st, arity, cap)? {
                    StageOutcome::Complete(next) => {
                        info!("stage {s}: {} atoms", next.atom_count());
                        st = next;
                    }
                    StageOutcome::Partial(p) if partial_ok => {
                        write_file(&path, &fraisse::dump_stage(&p))?;
                        writeln!(out, "fraisse n={arity}: stage {s} partial at {} atoms (cap {cap}), resumable", p.atom_count())?;
                        return Ok(0);
                    }
                    StageOutcome::Partial(p) => {
                        let prev = p.boundary(s - 1);
                        bail!(
                            "stage {s} needs {} atoms, cap is {cap}; raise --cap or pass --partial-ok",
                            prev as u128 + fraisse::projected_growth(prev, s - 1, arity)
                        );
                    }
                }
            }
            write_file(&path, &fraisse::dump_stage(&st))?;
            writeln!(out, "fraisse n={arity}: stage {stages} complete, {} atoms", st.atom_count())?;
        }
        Fraisse::Resume { file, cap, out: path } => {
            let st = fraisse::load_stage(&read_file(&file)?)?;
            let (st, done) = match fraisse::resume_stage(&st, cap)? {
                StageOutcome::Complete(s) => (s, "complete"),
                StageOutcome::Partial(s) => (s, "partial"),
            };
            write_file(&path, &fraisse::dump_stage(&st))?;
            writeln!(out, "fraisse n={}: stage {} {done}, {} atoms", st.arity(), st.stage_index(), st.atom_count())?;
        }
        Fraisse::Check { file, set_budget } => {
            let st = fraisse::load_stage(&read_file(&file)?)?;
            let scan = fraisse::scan_sel(&st, set_budget)?;
            for v in scan.violations.iter().take(10) {
                info!("violation: {v}");
            }
            writeln!(
                out,
                "sel scan stage {}: {} entries, {} sets over the first {} atoms, {} violations",
                scan.stage,
                scan.exceptions_checked,
                scan.sets_checked,
                scan.exhaustive_prefix,
                scan.violations.len()
            )?;
            let mut bad = !scan.violations.is_empty();
            if st.stage_index() >= 2 && !st.is_partial() {
                let r = fraisse::check_extension_property(&st)?;
                writeln!(
                    out,
                    "extension stage {}: {} grounds, {} types, {} misses",
                    r.stage,
                    r.grounds_checked,
                    r.types_checked,
                    r.misses.len()
                )?;
                bad |= !r.misses.is_empty();
            } else {
                writeln!(out, "extension stage {}: skipped (needs a complete stage 2 or later)", st.stage_index())?;
            }
            return Ok(if bad { 2 } else { 0 });
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = init_logging() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
