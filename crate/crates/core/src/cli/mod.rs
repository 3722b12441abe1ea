//! Command-line frontend: ingest, certify, plot, oneform and verify.
//!
//! Exit codes: 0 certified, 1 inconclusive, 2 error.

pub mod cache;
pub mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::eigcert::{linspace, Certificate, Certifier, RunReport, Verdict};
use crate::error::{Error, Result};
use crate::floer::summary_table;
use crate::oneform::{optimize, triangulate, DomainSpec};
use crate::spectrum::{load_spectrum, parse_spectrum, sha256_hex, write_spectrum, ManifoldData};
use crate::synthetic::SyntheticSpectrum;
use crate::trace::{SideKind, TraceData};

pub use cache::CachedSpectrum;
pub use config::{OneformParams, PlotParams, RunConfig, SpincSelector};

#[derive(Debug, Parser)]
#[command(name = "diracflow", version, about = "Certify Dirac spectral flow from length-spectrum data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a spectrum file and write its canonical form with a sidecar.
    Ingest(IngestArgs),
    /// Run the certification pipeline.
    Certify(RunArgs),
    /// Write plot-ready CSV data.
    Plot(PlotArgs),
    /// Optimize an upper bound for C_Y on a Dirichlet domain.
    Oneform(RunArgs),
    /// Replay stored certificates from their constants.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    pub path: PathBuf,
    /// Directory for the canonical copy; defaults to the input's directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Accept a file without a sidecar (its digest is then recorded).
    #[arg(long)]
    pub no_sidecar: bool,
}

/// Flags mirroring `RunConfig`; each overrides the config file.
#[derive(Debug, Default, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
    #[arg(long)]
    pub synthetic: Option<PathBuf>,
    #[arg(long)]
    pub domain: Option<PathBuf>,
    #[arg(long)]
    pub spinc: Option<SpincSelector>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long)]
    pub tau_grid: Option<usize>,
    #[arg(long)]
    pub basis_size: Option<usize>,
    #[arg(long)]
    pub count_function: Option<String>,
    #[arg(long)]
    pub odd_function: Option<String>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    J0,
    JsAtTau,
    GammaOdd,
    Coexact,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long, value_enum)]
    pub which: PlotKind,
    /// `tau` of the `js-at-tau` curve.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub tau_points: Option<usize>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Certificate files: one certificate, a list, or a run report.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Certified,
    Inconclusive,
}

impl Outcome {
    pub fn exit_code(self) -> ExitCode {
        match self {
            Outcome::Certified => ExitCode::from(0),
            Outcome::Inconclusive => ExitCode::from(1),
        }
    }
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.spectrum {
            c.spectrum = Some(p.clone());
            c.synthetic = None;
        }
        if let Some(p) = &self.synthetic {
            c.synthetic = Some(p.clone());
            c.spectrum = None;
        }
        if let Some(p) = &self.domain {
            c.domain = Some(p.clone());
        }
        if let Some(s) = self.spinc {
            c.spinc = s;
        }
        if let Some(l) = self.lambda_max {
            c.lambda_max = Some(l);
        }
        if let Some(p) = &self.output {
            c.output = p.clone();
        }
        if let Some(p) = &self.cache {
            c.cache = Some(p.clone());
        }
        if let Some(n) = self.tau_grid {
            c.certify.tau_grid = n;
        }
        if let Some(n) = self.basis_size {
            c.certify.basis_size = n;
        }
        if let Some(f) = &self.count_function {
            c.certify.count_function = f.clone();
        }
        if let Some(f) = &self.odd_function {
            c.certify.odd_function = f.clone();
        }
        if let Some(n) = self.iterations {
            c.oneform.iterations = n;
        }
        if let Some(s) = self.seed {
            c.oneform.seed = s;
        }
        c.validate()?;
        Ok(c)
    }
}

/// Dispatch one command. Errors map to exit code 2 in `main`.
pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Ingest(a) => cmd_ingest(&a),
        Command::Certify(a) => cmd_certify(&a.resolve()?),
        Command::Plot(a) => {
            let mut c = a.run.resolve()?;
            if let Some(t) = a.tau {
                c.plot.tau = t;
            }
            if let Some(n) = a.tau_points {
                c.plot.tau_points = n;
            }
            c.validate()?;
            cmd_plot(&c, a.which).map(|_| Outcome::Certified)
        }
        Command::Oneform(a) => cmd_oneform(&a.resolve()?).map(|_| Outcome::Certified),
        Command::Verify(a) => cmd_verify(&a.files),
    }
}

/// Entry point for the binary.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::from(0) };
        }
    };
    match run(cli) {
        Ok(o) => o.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// The configured data source.
pub fn load_data(config: &RunConfig) -> Result<Arc<dyn TraceData>> {
    match (&config.spectrum, &config.synthetic) {
        (Some(p), None) => {
            let data = load_spectrum(p).map_err(|e| context(e, p))?;
            match &config.cache {
                Some(dir) => Ok(Arc::new(CachedSpectrum::new(data, dir)?)),
                None => Ok(Arc::new(data)),
            }
        }
        (None, Some(p)) => {
            let text = fs::read_to_string(p).map_err(|e| context(e.into(), p))?;
            Ok(Arc::new(SyntheticSpectrum::from_json(&text).map_err(|e| context(e, p))?))
        }
        (None, None) => Err(Error::Config("no `spectrum` or `synthetic` input given".into())),
        (Some(_), Some(_)) => Err(Error::Config("give either `spectrum` or `synthetic`, not both".into())),
    }
}

fn context(e: Error, path: &Path) -> Error {
    match e {
        Error::Io(io) => Error::Config(format!("{}: {io}", path.display())),
        Error::Schema(s) => Error::Schema(format!("{}: {s}", path.display())),
        other => other,
    }
}

#[derive(Debug, Serialize)]
struct IngestSummary {
    name: String,
    volume: f64,
    b1: u32,
    torsion_order: u32,
    cutoff: f64,
    records: usize,
    systole: Option<f64>,
    max_free_class: i64,
    source_checksum: String,
    canonical: PathBuf,
    canonical_checksum: String,
}

pub fn cmd_ingest(args: &IngestArgs) -> Result<Outcome> {
    let data: ManifoldData = if args.no_sidecar {
        let text = fs::read_to_string(&args.path).map_err(|e| context(e.into(), &args.path))?;
        parse_spectrum(&text).map_err(|e| context(e, &args.path))?
    } else {
        load_spectrum(&args.path).map_err(|e| context(e, &args.path))?
    };
    let dir = match &args.output {
        Some(d) => d.clone(),
        None => args.path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    fs::create_dir_all(&dir)?;
    let stem = args.path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| data.name.clone());
    let canonical = dir.join(format!("{stem}.canonical.json"));
    let canonical_checksum = write_spectrum(&data, &canonical)?;
    let summary = IngestSummary {
        name: data.name.clone(),
        volume: data.volume,
        b1: data.b1,
        torsion_order: data.torsion_order,
        cutoff: data.cutoff,
        records: data.geodesics.len(),
        systole: data.systole(),
        max_free_class: data.max_free_class(),
        source_checksum: data.checksum.clone(),
        canonical,
        canonical_checksum,
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    if data.b1 != 1 {
        eprintln!("warning: b1 = {}; certify will refuse this spectrum", data.b1);
    }
    Ok(Outcome::Certified)
}

/// Run the pipeline, write `report.json`, `certificates.json`, one Floer file
/// per certified class and `summary.txt`.
pub fn cmd_certify(config: &RunConfig) -> Result<Outcome> {
    let data = load_data(config)?;
    if let SpincSelector::K(k) = config.spinc {
        if k >= data.torsion_order() {
            return Err(Error::Config(format!("spinc {k} out of range for torsion order {}", data.torsion_order())));
        }
    }
    let certifier = Certifier::new(data, config.certify.clone())?;
    let only = config.spinc.only();
    let report = certifier.certify_all(config.lambda_max, only.as_deref())?;
    fs::create_dir_all(&config.output)?;
    write_certify_outputs(&report, &config.output)?;
    let rows: Vec<_> = report.classes.iter().map(|(c, r)| (*c, r.floer.clone())).collect();
    print!("{}", summary_table(&rows));
    if report.is_certified() {
        Ok(Outcome::Certified)
    } else {
        eprintln!("inconclusive: {}", report.first_failure().unwrap_or_else(|| "unknown step".into()));
        Ok(Outcome::Inconclusive)
    }
}

pub fn write_certify_outputs(report: &RunReport, dir: &Path) -> Result<()> {
    write_json(&dir.join("report.json"), report)?;
    let certs: Vec<&Certificate> = report
        .spectral_largeness
        .iter()
        .chain(report.classes.iter().flat_map(|(_, r)| r.all_certificates()))
        .collect();
    write_json(&dir.join("certificates.json"), &certs)?;
    for (class, r) in &report.classes {
        if let Some(f) = &r.floer {
            write_json(&dir.join(format!("floer_k{}.json", class.representative.k)), f)?;
        }
    }
    let rows: Vec<_> = report.classes.iter().map(|(c, r)| (*c, r.floer.clone())).collect();
    let mut summary = format!("spectrum {} sha256 {}\n", report.spectrum, report.checksum);
    summary.push_str(&summary_table(&rows));
    if let Some(f) = report.first_failure() {
        summary.push_str(&format!("first failure: {f}\n"));
    }
    fs::write(dir.join("summary.txt"), summary)?;
    Ok(())
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

fn plot_k(config: &RunConfig) -> u32 {
    match config.spinc {
        SpincSelector::K(k) => k,
        SpincSelector::All => 0,
    }
}

/// Write one CSV and return its path.
pub fn cmd_plot(config: &RunConfig, which: PlotKind) -> Result<PathBuf> {
    let certifier = Certifier::new(load_data(config)?, config.certify.clone())?;
    let k = plot_k(config);
    let p = &config.plot;
    fs::create_dir_all(&config.output)?;
    let taus = linspace(0.0, 1.0, p.tau_points);
    let ss = linspace(0.0, p.s_max, p.s_points);
    let (name, header, rows): (String, Vec<&str>, Vec<Vec<f64>>) = match which {
        PlotKind::J0 => {
            let m = certifier.matrix()?;
            let rows = taus
                .par_iter()
                .map(|&t| Ok(vec![t, m.solver(t, k)?.j(0.0)]))
                .collect::<Result<_>>()?;
            (format!("j0_k{k}.csv"), vec!["tau", "j0"], rows)
        }
        PlotKind::JsAtTau => {
            let solver = certifier.matrix()?.solver(p.tau, k)?;
            let rows = ss.par_iter().map(|&s| vec![s, solver.j(s)]).collect();
            (format!("js_tau{}_k{k}.csv", p.tau), vec!["s", "j"], rows)
        }
        PlotKind::GammaOdd => {
            let kf = certifier.odd_kernel()?;
            let side = certifier.side(Arc::new(kf), SideKind::DiracOdd)?;
            let rows = side
                .evaluate_grid(&taus, k)
                .into_iter()
                .zip(&taus)
                .map(|(e, &t)| vec![t, e.value, e.budget])
                .collect();
            (format!("gamma_odd_k{k}.csv"), vec!["tau", "gamma_odd", "budget"], rows)
        }
        PlotKind::Coexact => {
            let solver = certifier.coexact_matrix()?.solver(0.0, 0)?;
            let rows = ss.par_iter().map(|&s| vec![s, solver.j(s)]).collect();
            ("coexact.csv".into(), vec!["s", "j_coexact"], rows)
        }
    };
    let path = config.output.join(name);
    write_csv(&path, &header, &rows)?;
    println!("{}", path.display());
    Ok(path)
}

/// Triangulate the domain, optimize, and write `lipschitz.json` plus
/// `iterations.csv`.
pub fn cmd_oneform(config: &RunConfig) -> Result<crate::oneform::LipschitzReport> {
    let path = config.domain.as_ref().ok_or_else(|| Error::Config("no `domain` given".into()))?;
    let text = fs::read_to_string(path).map_err(|e| context(e.into(), path))?;
    let spec = DomainSpec::from_json(&text).map_err(|e| context(e, path))?;
    let complex = triangulate(&spec)?;
    let report = optimize(&complex, config.oneform.iterations, config.oneform.seed)?;
    fs::create_dir_all(&config.output)?;
    fs::write(config.output.join("lipschitz.json"), report.to_json()? + "\n")?;
    let rows: Vec<Vec<f64>> = report.log.iter().map(|r| vec![r.iteration as f64, r.bound, r.step]).collect();
    write_csv(&config.output.join("iterations.csv"), &["iteration", "bound", "step"], &rows)?;
    println!(
        "{}: {} tetrahedra, bound {} (C_Y <= {:.4}), domain sha256 {}",
        report.domain,
        report.tetrahedra,
        report.bound,
        report.rounded,
        sha256_hex(text.as_bytes())
    );
    Ok(report)
}

/// Certificates found in a file: a single certificate, a list of them, or a
/// full run report.
pub fn read_certificates(text: &str) -> Result<Vec<Certificate>> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.is_array() {
        return Ok(serde_json::from_value(value)?);
    }
    if value.get("classes").is_some() {
        let report: RunReport = serde_json::from_value(value)?;
        return Ok(report
            .spectral_largeness
            .iter()
            .cloned()
            .chain(report.classes.iter().flat_map(|(_, r)| r.all_certificates().into_iter().cloned()))
            .collect());
    }
    Ok(vec![serde_json::from_value(value)?])
}

/// Replay every certificate; any mismatch is an error, any inconclusive
/// verdict makes the outcome inconclusive.
pub fn cmd_verify(files: &[PathBuf]) -> Result<Outcome> {
    let mut all_certified = true;
    for path in files {
        let text = fs::read_to_string(path).map_err(|e| context(e.into(), path))?;
        let certs = read_certificates(&text).map_err(|e| context(e, path))?;
        let mut inconclusive = 0;
        for (i, c) in certs.iter().enumerate() {
            let v = c
                .replay()
                .map_err(|e| Error::Replay(format!("{} certificate {i} ({}): {e}", path.display(), c.rule)))?;
            if v != Verdict::Certified {
                inconclusive += 1;
            }
        }
        println!("{}: {} certificates replayed, {} inconclusive", path.display(), certs.len(), inconclusive);
        all_certified &= inconclusive == 0;
    }
    Ok(if all_certified { Outcome::Certified } else { Outcome::Inconclusive })
}
