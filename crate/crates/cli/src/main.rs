//! `hecke-equidist`: command-line driver.
//!
//! Exit codes: 0 success, 1 domain or numerical error, 2 data-integrity
//! error, 3 transport error, 64 usage error.

use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use hecke_equidist::characters::DirichletCharacter;
use hecke_equidist::chebyshev::{
    cdf, cheb_eval, integrate, moment_closed_form, sample, MeasureP, DEFAULT_CDF_TOL,
    DEFAULT_MOMENT_TOL,
};
use hecke_equidist::equidist::{build_report, trace_ratio_prediction, DEFAULT_N_MAX};
use hecke_equidist::ingest::{
    fetch_remote, parse_dataset, CharConstraint, Config, DatasetFile, DatasetHeader, HttpTransport,
    NoNetwork, SpaceQuery, Transport,
};
use hecke_equidist::numtheory::{
    beta_psi_f, factorize, is_exceptional, is_prime, main_term_trace, psi, psi_new,
    rational_to_f64, Prime,
};
use hecke_equidist::output::{format_float, format_rational};
use hecke_equidist::selfcheck::{self, Scope};
use hecke_equidist::spectra::{EigenRecord, NormalizeTol};
use hecke_equidist::{Error, Result};

const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "hecke-equidist",
    version,
    about = "Equidistribution of Hecke eigenvalues with respect to mu_p"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PsiKind {
    /// psi(N)
    Psi,
    /// (beta * psi_f)(N)
    Beta,
    /// psi_new_f(N)
    New,
    /// Whether (N, f) is the exceptional case
    Exceptional,
    /// Main term of the trace of T_m; needs --m and --k
    Main,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Values of psi, beta*psi_f, psi_new and the trace main term
    Psi {
        #[arg(long = "N")]
        level: u64,
        #[arg(long, default_value_t = 1)]
        f: u64,
        #[arg(long, value_enum, default_value_t = PsiKind::New)]
        kind: PsiKind,
        #[arg(long)]
        m: Option<u64>,
        #[arg(long)]
        k: Option<u32>,
    },
    /// Limiting Chebyshev moment, or the trace-ratio prediction when --N is given
    Predict {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        n: u32,
        #[arg(long = "N")]
        level: Option<u64>,
        #[arg(long)]
        f: Option<u64>,
        #[arg(long)]
        k: Option<u32>,
    },
    /// Quadrature moments of X_n against mu_p next to the closed form (CSV)
    Moments {
        /// A prime, or `inf`
        #[arg(long)]
        p: MeasureP,
        #[arg(long, default_value_t = 20)]
        nmax: u32,
        #[arg(long, default_value_t = DEFAULT_MOMENT_TOL)]
        tol: f64,
    },
    /// Density of mu_p on an evenly spaced grid (CSV)
    Density {
        #[arg(long)]
        p: MeasureP,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Cumulative distribution of mu_p on an evenly spaced grid (CSV)
    Cdf {
        #[arg(long)]
        p: MeasureP,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long, default_value_t = DEFAULT_CDF_TOL)]
        tol: f64,
    },
    /// Synthetic draws from mu_p; with --out, a synthetic family dataset
    Sample {
        #[arg(long)]
        p: MeasureP,
        /// Comma-separated sizes, one space per size
        #[arg(long, value_delimiter = ',', default_value = "1000")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Prime the synthetic dataset is labelled with (defaults to --p)
        #[arg(long)]
        label_p: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// KS and moment diagnostics for a dataset
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = DEFAULT_N_MAX)]
        nmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        moments_csv: Option<PathBuf>,
        #[arg(long)]
        ks_csv: Option<PathBuf>,
        /// Treat every space in the dataset as complete
        #[arg(long)]
        assume_complete: bool,
        #[arg(long, default_value_t = DEFAULT_CDF_TOL)]
        cdf_tol: f64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Download newspace data into a dataset file
    Fetch {
        /// Level range, `a..=b` or a single level
        #[arg(long = "N")]
        levels: String,
        /// Weight range, `a..=b` or a single weight
        #[arg(long)]
        k: String,
        /// `any`, `trivial`, or a Conrey index
        #[arg(long = "char", default_value = "trivial")]
        character: String,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Serve from the cache only
        #[arg(long)]
        offline: bool,
    },
    /// Run the invariant suite
    Check {
        /// Sweep the larger ranges
        #[arg(long)]
        full: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut out = std::io::stdout().lock();
    match run(cli.command, &mut out) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn prime(p: u64) -> Result<Prime> {
    Prime::new(p)
}

fn grid(points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::Domain("--points must be at least 2".into()));
    }
    Ok((0..points)
        .map(|i| -2.0 + 4.0 * i as f64 / (points - 1) as f64)
        .collect())
}

fn parse_range<T: FromStr + Copy>(s: &str) -> Result<RangeInclusive<T>> {
    let bad = || {
        Error::Domain(format!(
            "bad range {s:?}; expected `a..=b` or a single value"
        ))
    };
    let parse = |t: &str| t.trim().parse::<T>().map_err(|_| bad());
    match s.split_once("..") {
        Some((a, b)) => {
            let b = b.strip_prefix('=').ok_or_else(bad)?;
            Ok(parse(a)?..=parse(b)?)
        }
        None => {
            let v = parse(s)?;
            Ok(v..=v)
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

fn run(command: Command, out: &mut impl Write) -> Result<u8> {
    match command {
        Command::Psi {
            level,
            f,
            kind,
            m,
            k,
        } => {
            let (n, ff) = (factorize(level)?, factorize(f)?);
            let value = match kind {
                PsiKind::Psi => format_rational(&psi(&n)),
                PsiKind::Beta => format_rational(&beta_psi_f(&n, &ff)),
                PsiKind::New => format_rational(&psi_new(&n, &ff)?),
                PsiKind::Exceptional => is_exceptional(&n, &ff)?.to_string(),
                PsiKind::Main => {
                    let m = m.ok_or_else(|| Error::Domain("--kind main needs --m".into()))?;
                    let k = k.ok_or_else(|| Error::Domain("--kind main needs --k".into()))?;
                    format_rational(&main_term_trace(&factorize(m)?, &n, &ff, k)?)
                }
            };
            writeln!(out, "{value}")?;
        }
        Command::Predict { p, n, level, f, k } => {
            let p = prime(p)?;
            let value = match level {
                None => moment_closed_form(n, p),
                Some(level) => {
                    trace_ratio_prediction(level, f.unwrap_or(1), k.unwrap_or(2), p, n)?.predicted
                }
            };
            writeln!(out, "{}", format_rational(&value))?;
        }
        Command::Moments { p, nmax, tol } => {
            writeln!(out, "n,quadrature,closed_form,abs_error")?;
            for n in 0..=nmax {
                let q = integrate(|x| cheb_eval(n as usize, x), p, tol)?;
                let exact = match p {
                    MeasureP::Prime(p) => moment_closed_form(n, p),
                    // Orthonormality: only X_0 has a nonzero mu_inf moment.
                    MeasureP::Infinity => moment_closed_form(u32::from(n != 0), Prime::new(2)?),
                };
                let err = (q - rational_to_f64(&exact)).abs();
                writeln!(
                    out,
                    "{n},{},{},{}",
                    format_float(q),
                    format_rational(&exact),
                    format_float(err)
                )?;
            }
        }
        Command::Density { p, points } => {
            writeln!(out, "x,density")?;
            for x in grid(points)? {
                writeln!(out, "{},{}", format_float(x), format_float(p.density(x)?))?;
            }
        }
        Command::Cdf { p, points, tol } => {
            writeln!(out, "x,cdf")?;
            for x in grid(points)? {
                writeln!(out, "{},{}", format_float(x), format_float(cdf(p, x, tol)?))?;
            }
        }
        Command::Sample {
            p,
            sizes,
            seed,
            label_p,
            out: path,
        } => match path {
            None => {
                for (i, &size) in sizes.iter().enumerate() {
                    for x in sample(p, size, seed.wrapping_add(i as u64)) {
                        writeln!(out, "{}", format_float(x))?;
                    }
                }
            }
            Some(path) => {
                let label_p = match (label_p, p) {
                    (Some(q), _) => prime(q)?,
                    (None, MeasureP::Prime(q)) => q,
                    (None, MeasureP::Infinity) => {
                        return Err(Error::Domain(
                            "--label-p is required when sampling mu_inf".into(),
                        ))
                    }
                };
                let ds = synthetic_family(p, label_p, &sizes, seed)?;
                write_text(&path, &ds.serialize())?;
            }
        },
        Command::Analyze {
            input,
            p,
            nmax,
            out: path,
            moments_csv,
            ks_csv,
            assume_complete,
            cdf_tol,
            config,
        } => {
            let p = prime(p)?;
            let tol = match config {
                Some(c) => Config::from_file(&c)?.tolerances.normalize(),
                None => NormalizeTol::default(),
            };
            let mut ds = parse_dataset(&input, tol)?;
            ds.header.complete |= assume_complete;
            let family: Vec<_> = ds
                .multisets(tol)?
                .into_iter()
                .filter(|ms| ms.key.p == p)
                .collect();
            if family.is_empty() {
                return Err(Error::Domain(format!(
                    "no records for p = {p} in {}",
                    input.display()
                )));
            }
            let report = build_report(&family, p, nmax, cdf_tol, tol)?;
            match &path {
                Some(path) => write_text(path, &report.to_json())?,
                None => writeln!(out, "{}", report.to_json())?,
            }
            if let Some(path) = moments_csv {
                write_text(&path, &report.moments_csv()?)?;
            }
            if let Some(path) = ks_csv {
                write_text(&path, &report.ks_csv()?)?;
            }
        }
        Command::Fetch {
            levels,
            k,
            character,
            p,
            out: path,
            config,
            offline,
        } => {
            let mut cfg = Config::load(config.as_deref())?;
            cfg.offline |= offline;
            let character = match character.as_str() {
                "any" => CharConstraint::Any,
                "trivial" => CharConstraint::Trivial,
                c => CharConstraint::Conrey(c.parse().map_err(|_| {
                    Error::Domain(format!(
                        "bad --char {c:?}; expected any, trivial or an index"
                    ))
                })?),
            };
            let query = SpaceQuery {
                levels: parse_range(&levels)?,
                weights: parse_range(&k)?,
                character,
                p: prime(p)?,
            };
            let transport: Box<dyn Transport> = if cfg.offline {
                Box::new(NoNetwork)
            } else {
                Box::new(HttpTransport::new(std::time::Duration::from_secs(
                    cfg.timeout_secs,
                )))
            };
            let outcome = fetch_remote(&query, &cfg, transport.as_ref())?;
            for a in &outcome.advisories {
                eprintln!("advisory: {a}");
            }
            write_text(&path, &outcome.dataset.serialize())?;
            writeln!(
                out,
                "{} records written to {}",
                outcome.dataset.records.len(),
                path.display()
            )?;
        }
        Command::Check { full } => {
            let checks = selfcheck::run(if full { Scope::FULL } else { Scope::QUICK });
            let mut ok = true;
            for c in &checks {
                ok &= c.passed;
                writeln!(
                    out,
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                )?;
            }
            return Ok(if ok { 0 } else { 1 });
        }
    }
    Ok(0)
}

/// One space per size: prime level `N != p`, weight 2, trivial character,
/// eigenvalues drawn from `mu` with seed `seed + i`.
fn synthetic_family(mu: MeasureP, p: Prime, sizes: &[usize], seed: u64) -> Result<DatasetFile> {
    let levels = (2u64..).filter(|&n| is_prime(n) && n != p.get());
    let mut records = Vec::new();
    for ((i, &size), level) in sizes.iter().enumerate().zip(levels) {
        let chi = DirichletCharacter::trivial(level)?;
        for (j, lambda) in sample(mu, size, seed.wrapping_add(i as u64))
            .into_iter()
            .enumerate()
        {
            let mut rec = EigenRecord::with_lambda(level, 2, chi.clone(), p, lambda)?;
            rec.char_label = format!("{level}.1");
            rec.form_id = Some(format!("{level}.2.synthetic.{j}"));
            records.push(rec);
        }
    }
    let header = DatasetHeader::new(format!("synthetic {mu} seed {seed}"), true);
    Ok(DatasetFile { header, records })
}
