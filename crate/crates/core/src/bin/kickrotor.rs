use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

use kickrotor::pendulum::{GQuadrature, GTable};
use kickrotor::scan::report::{gtable_csv, histogram_csv, peaks_csv, scan_csv, write_file};
use kickrotor::scan::{
    emit_report, exclusion_of, find_side_peaks, fit_x0, read_scan_csv, run_pdist, run_scan, EngineKind,
    EngineSelection, Exclusion, GridAxis, Header, PdistConfig, ReportInputs, ScanConfig,
};
use kickrotor::{Error, Result};

const THREADS_ENV: &str = "KICKROTOR_THREADS";

/// Kicked-rotor scans near quantum resonance.
#[derive(Parser)]
#[command(name = "kickrotor", version, about)]
struct Cli {
    /// Worker threads (default: config `threads`, then $KICKROTOR_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an energy scan over the configured grid.
    Scan(ScanArgs),
    /// Find side peaks and central widths in a scan CSV.
    Peaks(PeaksArgs),
    /// Fit the side-peak law |eps| = x0^2 / (t^2 k) to a scan CSV.
    #[command(name = "fit-x0")]
    FitX0(PeaksArgs),
    /// Tabulate the pendulum scaling function G(x).
    Gfunc(GfuncArgs),
    /// Momentum distributions after a number of kicks.
    Pdist(PdistArgs),
    /// Scan, peaks, fit, G(x) table and figure data in one go.
    Report(ReportArgs),
}

#[derive(Args)]
struct Overrides {
    /// TOML configuration file.
    #[arg(long, short)]
    config: PathBuf,
    #[arg(long)]
    engine: Option<EngineSelection>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    k: Option<f64>,
    /// Comma-separated kick counts.
    #[arg(long, value_delimiter = ',')]
    kicks: Option<Vec<u32>>,
    /// Quantum atoms per grid point.
    #[arg(long)]
    atoms: Option<usize>,
    /// Epsilon-classical trajectories per grid point.
    #[arg(long)]
    trajectories: Option<usize>,
    /// Output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn load(&self) -> Result<ScanConfig> {
        let mut cfg = ScanConfig::load(&self.config)?;
        if let Some(e) = self.engine {
            cfg.engine = e;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(kicks) = &self.kicks {
            cfg.kicks = kicks.clone();
        }
        if let Some(a) = self.atoms {
            cfg.ensemble.atoms = a;
        }
        if let Some(t) = self.trajectories {
            cfg.eclassical.trajectories = t;
        }
        if let Some(o) = &self.out {
            cfg.output.dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    cfg: Overrides,
}

#[derive(Args)]
struct PeaksArgs {
    /// Scan CSV written by `kickrotor scan`.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, default_value = "eclassical")]
    engine: EngineKind,
    /// Fixed exclusion half-width in eps (default: half the predicted side peak).
    #[arg(long)]
    exclusion: Option<f64>,
    #[arg(long, default_value_t = kickrotor::pendulum::DEFAULT_X0)]
    x0: f64,
    /// Output CSV (peaks only).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GfuncArgs {
    #[arg(long, default_value_t = 100.0)]
    x_max: f64,
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    /// Gauss-Legendre nodes per axis.
    #[arg(long, default_value_t = 400)]
    nodes: usize,
    #[arg(long, short, default_value = "gfunc.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct PdistArgs {
    #[command(flatten)]
    cfg: Overrides,
    /// Kick parameter values; repeat for several.
    #[arg(long = "kbar", allow_negative_numbers = true)]
    kbar: Vec<f64>,
    /// Kicks before the distribution is taken.
    #[arg(long = "at")]
    at: Option<u32>,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    cfg: Overrides,
    /// Leave out the G(x) table.
    #[arg(long)]
    skip_gfunc: bool,
}

fn configure_threads(flag: Option<usize>, config: Option<usize>) -> Result<()> {
    let env = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.parse::<usize>()
                .map_err(|_| Error::Config(format!("{THREADS_ENV}={v} is not a thread count")))?,
        ),
        Err(_) => None,
    };
    if let Some(n) = flag.or(config).or(env) {
        if n == 0 {
            return Err(Error::Config("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn header_for(cfg: &ScanConfig) -> Header {
    Header {
        config_hash: cfg.config_hash(),
        seed: cfg.seed,
        k: Some(cfg.k),
    }
}

fn peaks_from(args: &PeaksArgs) -> Result<(Header, kickrotor::scan::PeakReport)> {
    let (header, result) = read_scan_csv(&args.input)?;
    let exclusion = match args.exclusion {
        Some(w) => Exclusion::Fixed(w),
        None => Exclusion::Predicted { x0: args.x0 },
    };
    let report = find_side_peaks(&result, args.engine, exclusion)?;
    Ok((header, report))
}

fn print_peaks(report: &kickrotor::scan::PeakReport) {
    let show = |p: Option<kickrotor::scan::Peak>| match p {
        Some(p) => format!("{:+.5} (ratio {:.4})", p.epsilon, p.ratio),
        None => "missing".to_string(),
    };
    for e in &report.entries {
        let fwhm = e.fwhm.map(|w| format!("{w:.5}")).unwrap_or_else(|| "unresolved".into());
        println!(
            "t={:>3}  left {}  right {}  fwhm {}",
            e.kicks,
            show(e.left),
            show(e.right),
            fwhm
        );
    }
}

fn gfunc_header(x_max: f64, step: f64, nodes: usize) -> Header {
    let canonical = json!({ "gfunc": { "x_max": x_max, "step": step, "nodes": nodes } }).to_string();
    Header {
        config_hash: hex::encode(Sha256::digest(canonical.as_bytes())),
        seed: 0,
        k: None,
    }
}

fn pdist_plan(cfg: &ScanConfig, kbar: &[f64], at: Option<u32>) -> Result<(Vec<f64>, u32, Vec<f64>)> {
    let base = cfg.pdist.clone().unwrap_or_else(PdistConfig::reproduction);
    let kbars = if kbar.is_empty() { base.kbar } else { kbar.to_vec() };
    let kicks = at.unwrap_or(base.kicks);
    let edges = match base.edges {
        GridAxis::Resonance { .. } => return Err(Error::Config("pdist.edges cannot use the resonance form".into())),
        axis => axis.points()?,
    };
    Ok((kbars, kicks, edges))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Scan(args) => {
            let cfg = args.cfg.load()?;
            configure_threads(cli.threads, cfg.threads)?;
            let result = run_scan(&cfg)?;
            let path = cfg.output.dir.join("scan.csv");
            write_file(&path, &scan_csv(&header_for(&cfg), &result))?;
            println!("{} rows -> {}", result.rows().len(), path.display());
        }
        Command::Peaks(args) => {
            configure_threads(cli.threads, None)?;
            let (header, report) = peaks_from(&args)?;
            print_peaks(&report);
            if let Some(out) = &args.out {
                write_file(out, &peaks_csv(&header, &report))?;
                println!("peaks -> {}", out.display());
            }
        }
        Command::FitX0(args) => {
            configure_threads(cli.threads, None)?;
            let (header, report) = peaks_from(&args)?;
            let fit = fit_x0(&report)?;
            println!(
                "x0 = {:.4} +- {:.4}  ({} peaks, max relative residual {:.3})",
                fit.x0, fit.stderr, fit.points, fit.max_relative_residual
            );
            if let Some(out) = &args.out {
                write_file(out, &peaks_csv(&header, &report))?;
            }
        }
        Command::Gfunc(args) => {
            configure_threads(cli.threads, None)?;
            let quad = GQuadrature::new(args.nodes, args.nodes)?;
            let table = GTable::compute(args.x_max, args.step, quad)?;
            write_file(
                &args.out,
                &gtable_csv(&gfunc_header(args.x_max, args.step, args.nodes), &table),
            )?;
            println!(
                "{} nodes -> {} (error estimate {:.2e})",
                table.x().len(),
                args.out.display(),
                table.error_estimate()
            );
        }
        Command::Pdist(args) => {
            let cfg = args.cfg.load()?;
            configure_threads(cli.threads, cfg.threads)?;
            let (kbars, kicks, edges) = pdist_plan(&cfg, &args.kbar, args.at)?;
            let hists = run_pdist(&cfg, &kbars, kicks, &edges)?;
            for (kbar, h) in &hists {
                println!("kbar {kbar:.4}: mass beyond |p| = 10: {:.5}", h.wing_mass(10.0));
            }
            let path = cfg.output.dir.join("pdist.csv");
            write_file(&path, &histogram_csv(&header_for(&cfg), kicks, &hists))?;
            println!("-> {}", path.display());
        }
        Command::Report(args) => {
            let cfg = args.cfg.load()?;
            configure_threads(cli.threads, cfg.threads)?;
            report(&cfg, args.skip_gfunc)?;
        }
    }
    Ok(())
}

fn report(cfg: &ScanConfig, skip_gfunc: bool) -> Result<()> {
    let result = run_scan(cfg)?;
    let mut peaks = Vec::new();
    for engine in result.engines() {
        let rep = find_side_peaks(&result, engine, exclusion_of(cfg))?;
        println!("[{engine}]");
        print_peaks(&rep);
        match fit_x0(&rep) {
            Ok(fit) => println!("x0 = {:.4} +- {:.4}", fit.x0, fit.stderr),
            Err(e) => println!("x0 unavailable: {e}"),
        }
        peaks.push(rep);
    }
    let table = (!skip_gfunc).then(GTable::standard);
    let pdist = match &cfg.pdist {
        Some(_) => {
            let (kbars, kicks, edges) = pdist_plan(cfg, &[], None)?;
            Some((kicks, run_pdist(cfg, &kbars, kicks, &edges)?))
        }
        None => None,
    };
    let header = header_for(cfg);
    let written = emit_report(
        Path::new(&cfg.output.dir),
        ReportInputs {
            header: &header,
            scan: Some(&result),
            peaks: &peaks,
            gtable: table,
            pdist: pdist.as_ref().map(|(t, h)| (*t, h.as_slice())),
        },
    )?;
    for p in written {
        println!("-> {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
