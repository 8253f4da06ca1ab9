//! `rdlab`: rate-distortion regions, BOHO sweeps, simulations and checks.

mod manifest;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rdlab_core::boho::{boho_region_sweep, log_interior, BohoGrid};
use rdlab_core::checks::{containment_suite, continuity_suite, default_typicality_grid, typicality_suite, CheckRow};
use rdlab_core::regions::search::{
    sweep_bt, sweep_btsi, sweep_cc, sweep_flmc, swap_symmetrized, Scheme, SweepConfig, SweepResult,
};
use rdlab_core::regions::assemble_region;
use rdlab_core::sim::interleave::sweep_mcml;
use rdlab_core::sim::{run, SimConfig, SimKind};
use rdlab_core::source::{parse_source, SourceSpec};
use rdlab_core::text::fmt_real;
use rdlab_core::Error;

use manifest::RunManifest;

const REGION_HEADER: [&str; 8] = ["r1_bits", "r2_bits", "d1", "d2", "scheme", "n", "tau", "provenance_id"];

#[derive(Parser, Debug)]
#[command(name = "rdlab", version, about = "Two-encoder rate-distortion regions, sweeps and simulations")]
struct Cli {
    /// Worker threads (does not change output bytes).
    #[arg(long, global = true, env = "RDLAB_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Cc,
    Bt,
    Btsi,
    Flmc,
    Mcml,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SimArg {
    Quantizer,
    Correction,
    Interleave,
    Boho,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum Suite {
    Continuity,
    Typicality,
    Containment,
    All,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Region boundary of one scheme at fixed distortions.
    Region {
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        /// Source file, or `boho:p=..,eps=..`.
        source: String,
        /// Sweep configuration file.
        sweep: PathBuf,
        #[arg(long)]
        d1: f64,
        #[arg(long)]
        d2: f64,
        /// Output CSV (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also sweep the source with the encoders swapped.
        #[arg(long)]
        swap_symmetrize: bool,
    },
    /// BOHO boundaries, one curve per eps.
    Boho {
        #[arg(long)]
        p: f64,
        /// Cross-over probability of the private noise (repeatable).
        #[arg(long = "eps", required = true)]
        eps: Vec<f64>,
        #[arg(long)]
        d2max: f64,
        /// Log-spaced first-layer distortions in (0.01, 0.49).
        #[arg(long, default_value_t = 64)]
        delta_points: usize,
        #[arg(long, default_value_t = 32)]
        n_points: usize,
        #[arg(long, default_value_t = 16)]
        tau_points: usize,
        #[arg(long, default_value_t = 64)]
        delta1_points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo simulation of the coding construction.
    Sim {
        #[arg(value_enum)]
        kind: SimArg,
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Report path; per-trial CSV goes to `<out>.trials.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Invariant suites with a margin table.
    Check {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Random pairs per alphabet size in the continuity suite.
        #[arg(long, default_value_t = 10_000)]
        pairs: usize,
        /// Random specs in the containment suite.
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
}

/// Failure with its exit code.
struct Fail(u8, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Invariant(_) => 1,
            Error::Infeasible(_) | Error::CapExceeded(_) => 3,
            _ => 2,
        };
        Fail(code, e.to_string())
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail(2, e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| Fail(2, format!("{}: {e}", path.display())))
}

/// Writes `bytes` to `out`, or to stdout when `out` is `None`.
fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Fail> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Fail(2, format!("{}: {e}", p.display())))?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn opt_u64(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_real(v: Option<f64>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, Fail> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let err = |e: csv::Error| Fail(2, e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.into_inner().map_err(|e| Fail(2, e.to_string()))
}

fn cmd_region(
    scheme: SchemeArg,
    source: &str,
    sweep: &Path,
    d: (f64, f64),
    out: Option<&Path>,
    swap: bool,
) -> Result<(), Fail> {
    let mut man = RunManifest::new(None);
    let sweep_text = read(sweep)?;
    man.input(&sweep.display().to_string(), sweep_text.as_bytes());
    let cfg = SweepConfig::from_toml(&sweep_text).map_err(|e| Fail(2, format!("{}: {e}", sweep.display())))?;
    man.seed = Some(cfg.seed);
    let spec = if source.starts_with("boho:") {
        SourceSpec::Plain(rdlab_core::boho::parse_named_source(source)?)
    } else {
        let t = read(Path::new(source))?;
        man.input(source, t.as_bytes());
        parse_source(&t).map_err(|e| Fail(2, format!("{source}: {e}")))?
    };
    let scheme_id = match scheme {
        SchemeArg::Cc => Scheme::Cc,
        SchemeArg::Bt => Scheme::Bt,
        SchemeArg::Btsi => Scheme::Btsi,
        SchemeArg::Flmc => Scheme::Flmc,
        SchemeArg::Mcml => Scheme::Mcml,
    };
    let res: SweepResult = match (&spec, scheme_id) {
        (SourceSpec::SideInfo(s), Scheme::Btsi) => {
            if swap {
                return Err(Fail(2, "--swap-symmetrize is not available for btsi".into()));
            }
            sweep_btsi(s, &cfg)?
        }
        (SourceSpec::SideInfo(_), _) => {
            return Err(Fail(2, "source has side information; use --scheme btsi".into()));
        }
        (SourceSpec::Plain(_), Scheme::Btsi) => {
            return Err(Fail(2, "btsi needs a source with side information (y1, y2)".into()));
        }
        (SourceSpec::Plain(s), sc) => {
            let f = match sc {
                Scheme::Cc => sweep_cc,
                Scheme::Bt => sweep_bt,
                Scheme::Flmc => sweep_flmc,
                _ => sweep_mcml,
            };
            if swap {
                swap_symmetrized(s, &cfg, f)?
            } else {
                f(s, &cfg)?
            }
        }
    };
    let tuples = res.tuples();
    if tuples.is_empty() {
        return Err(Fail(3, "sweep produced no corners".into()));
    }
    let b = assemble_region(&tuples, d, true)?;
    let rows: Vec<Vec<String>> = b
        .points
        .iter()
        .map(|p| {
            let sp = &res.points[p.source];
            vec![
                fmt_real(p.r1),
                fmt_real(p.r2),
                fmt_real(sp.tuple.d1),
                fmt_real(sp.tuple.d2),
                sp.scheme.as_str().to_string(),
                opt_u64(sp.n),
                opt_real(sp.tau),
                sp.provenance_id.to_string(),
            ]
        })
        .collect();
    emit(out, &csv_bytes(&REGION_HEADER, &rows)?)?;
    let summary = format!(
        "points={} r1_min={} r2_min={} corners={} skipped={}",
        b.points.len(),
        fmt_real(b.points.first().map_or(f64::NAN, |p| p.r1)),
        fmt_real(b.points.last().map_or(f64::NAN, |p| p.r2)),
        tuples.len(),
        res.skipped.len()
    );
    if let Some(o) = out {
        let mut prov = String::new();
        for (i, r) in res.provenance.iter().enumerate() {
            prov.push_str(&format!("[{i}]\n{r}\n\n"));
        }
        let mut pp = o.as_os_str().to_owned();
        pp.push(".provenance.txt");
        std::fs::write(PathBuf::from(pp), prov)?;
        man.set("scheme", scheme_id.as_str())
            .set("source", source)
            .set("sweep", format!("{cfg:?}"))
            .set("d1", fmt_real(d.0))
            .set("d2", fmt_real(d.1))
            .set("swap_symmetrize", swap);
        man.write(o)?;
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

fn cmd_boho(
    p: f64,
    eps: &[f64],
    d2max: f64,
    grid: BohoGrid,
    out: Option<&Path>,
) -> Result<(), Fail> {
    let mut header: Vec<&str> = REGION_HEADER.to_vec();
    header.extend(["epsilon", "delta", "delta1"]);
    let mut rows = Vec::new();
    let mut id = 0usize;
    let mut curves = 0usize;
    for &e in eps {
        let s = match boho_region_sweep(p, e, d2max, &grid) {
            Ok(s) => s,
            Err(Error::Infeasible(m)) => {
                eprintln!("warning: eps = {e}: curve omitted ({m})");
                continue;
            }
            Err(err) => return Err(err.into()),
        };
        curves += 1;
        for bp in &s.boundary.points {
            let c = &s.corners[bp.source];
            rows.push(vec![
                fmt_real(bp.r1),
                fmt_real(bp.r2),
                fmt_real(c.tuple.d1),
                fmt_real(c.tuple.d2),
                if e == 0.0 { "cc" } else { "flmc" }.to_string(),
                opt_u64(c.n),
                opt_real(c.tau),
                id.to_string(),
                fmt_real(e),
                fmt_real(c.delta),
                fmt_real(c.delta1),
            ]);
            id += 1;
        }
    }
    if curves == 0 {
        return Err(Fail(3, "every requested eps has an empty admissible set".into()));
    }
    emit(out, &csv_bytes(&header, &rows)?)?;
    if let Some(o) = out {
        let mut man = RunManifest::new(None);
        man.set("p", fmt_real(p))
            .set("eps", eps.iter().map(|&e| fmt_real(e)).collect::<Vec<_>>().join(" "))
            .set("d2max", fmt_real(d2max))
            .set("delta_points", grid.delta.len())
            .set("n_points", grid.n_points)
            .set("tau_points", grid.tau_points)
            .set("delta1_points", grid.delta1_points);
        man.write(o)?;
        println!("curves={curves} points={}", rows.len());
    }
    Ok(())
}

fn cmd_sim(kind: SimArg, config: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<(), Fail> {
    let text = read(config)?;
    let mut cfg = SimConfig::from_toml(&text).map_err(|e| Fail(2, format!("{}: {e}", config.display())))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let kind = match kind {
        SimArg::Quantizer => SimKind::Quantizer,
        SimArg::Correction => SimKind::Correction,
        SimArg::Interleave => SimKind::Interleave,
        SimArg::Boho => SimKind::Boho,
    };
    let report = run(kind, &cfg)?;
    let mut txt = report.to_text();
    match out {
        Some(o) => {
            let name = RunManifest::path_for(o);
            let name = name.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            txt.push_str(&format!("manifest = {name}\n"));
            std::fs::write(o, &txt)?;
            let mut cp = o.as_os_str().to_owned();
            cp.push(".trials.csv");
            std::fs::write(PathBuf::from(cp), report.to_csv())?;
            let mut man = RunManifest::new(Some(cfg.seed));
            man.input(&config.display().to_string(), text.as_bytes())
                .set("kind", kind.as_str())
                .set("config", format!("{cfg:?}"));
            if let Some(src) = cfg.source.as_deref().filter(|s| !s.starts_with("boho:")) {
                let b = std::fs::read(src)?;
                man.input(src, &b);
            }
            man.write(o)?;
            print!("{}", report.to_text());
        }
        None => print!("{txt}"),
    }
    if !report.passed() {
        let failed: Vec<&str> = report
            .gates
            .iter()
            .filter(|g| g.hard && !g.passed && !g.vacuous)
            .map(|g| g.name.as_str())
            .collect();
        return Err(Fail(1, format!("hard gate failed: {}", failed.join(", "))));
    }
    Ok(())
}

fn print_rows(rows: &[CheckRow]) {
    println!("{:<12} {:<48} {:>10} {:>10} {:>14} status", "suite", "check", "checked", "violations", "min_margin");
    for r in rows {
        println!(
            "{:<12} {:<48} {:>10} {:>10} {:>14.6e} {}",
            r.suite,
            r.name,
            r.checked,
            r.violations,
            r.min_margin,
            if r.passed() { "PASS" } else { "FAIL" }
        );
        if !r.detail.is_empty() {
            println!("{:<12}   {}", "", r.detail);
        }
    }
}

fn cmd_check(suite: Suite, seed: u64, pairs: usize, samples: usize) -> Result<(), Fail> {
    let mut rows = Vec::new();
    if matches!(suite, Suite::Continuity | Suite::All) {
        rows.extend(continuity_suite(pairs, &[2, 4, 8], seed)?);
    }
    if matches!(suite, Suite::Typicality | Suite::All) {
        rows.extend(typicality_suite(&default_typicality_grid(), 12, 12)?);
    }
    if matches!(suite, Suite::Containment | Suite::All) {
        rows.extend(containment_suite(samples, seed)?);
    }
    print_rows(&rows);
    let failed = rows.iter().filter(|r| !r.passed()).count();
    if failed > 0 {
        return Err(Fail(1, format!("{failed} check(s) failed")));
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Fail> {
    match cli.command {
        Command::Region {
            scheme,
            source,
            sweep,
            d1,
            d2,
            out,
            swap_symmetrize,
        } => cmd_region(scheme, &source, &sweep, (d1, d2), out.as_deref(), swap_symmetrize),
        Command::Boho {
            p,
            eps,
            d2max,
            delta_points,
            n_points,
            tau_points,
            delta1_points,
            out,
        } => {
            let grid = BohoGrid {
                delta: log_interior(0.01, 0.49, delta_points),
                n_points,
                tau_points,
                delta1_points,
                n_grid_eps: eps.clone(),
            };
            cmd_boho(p, &eps, d2max, grid, out.as_deref())
        }
        Command::Sim { kind, config, seed, out } => cmd_sim(kind, &config, seed, out.as_deref()),
        Command::Check {
            suite,
            seed,
            pairs,
            samples,
        } => cmd_check(suite, seed, pairs, samples),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
