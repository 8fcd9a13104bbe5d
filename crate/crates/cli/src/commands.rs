use std::fs;
use std::path::Path;

use dpsnn_core::energy::{comparison_report, energy_report};
use dpsnn_core::runtime::read_cluster_file;
use dpsnn_core::{calibrate_config, run_config, run_config_rank, Error, RunConfig};

use crate::platform::{parse_platform, platform_from_metrics};
use crate::{CalibrateArgs, ConfigArgs, ReportArgs, RunArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad command-line input.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Core(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

/// Resolve the config: file or defaults, then `--set`, then dedicated flags.
pub fn load_config(args: &ConfigArgs) -> CliResult<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::desk(),
    };
    cfg.apply_overrides(&args.overrides)?;
    if let Some(r) = args.ranks {
        cfg.ranks = r;
    }
    if let Some(s) = args.seed {
        cfg.grid.seed = s;
        cfg.stimulus_seed = s;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

pub fn run(args: RunArgs) -> CliResult {
    let mut cfg = load_config(&args.config)?;
    let report = match (args.rank, &args.cluster) {
        (Some(rank), Some(path)) => {
            let cluster = read_cluster_file(path)?;
            cfg.ranks = cluster.len();
            cfg.validate()?;
            if rank >= cluster.len() {
                return Err(CliError::Usage(format!(
                    "--rank {rank} is not listed in {} ({} ranks)",
                    path.display(),
                    cluster.len()
                )));
            }
            log::info!("rank {rank} of {} joining cluster", cluster.len());
            run_config_rank(&cfg, rank, &cluster)?
        }
        _ => {
            cfg.validate()?;
            log::info!(
                "running {} neurons for {} s on {} rank(s)",
                cfg.grid.total_neurons(),
                cfg.simulated_seconds,
                cfg.ranks
            );
            run_config(&cfg)?
        }
    };
    let written = report.write_artifacts(&cfg.output_dir)?;
    let m = &report.metrics;
    println!("mean rate        {:.3} Hz", m.mean_rate_hz);
    println!("spikes           {}", m.total_spikes);
    println!(
        "synaptic events  {} ({} internal, {} external)",
        m.total_synaptic_events(),
        m.internal_synaptic_events,
        m.external_synaptic_events
    );
    println!("equivalent syn.  {}", report.equivalent_synapses);
    println!("wall time        {:.3} s", m.wall_seconds);
    println!("throughput       {:.4e} events/s", m.events_per_wall_second());
    println!("raster sha256    {}", report.raster_sha256);
    if let Some(e) = &report.energy {
        println!();
        print!("{e}");
    }
    for path in written {
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

pub fn report(args: ReportArgs) -> CliResult {
    let mut records = Vec::new();
    for spec in &args.platform {
        records.push(parse_platform(spec)?);
    }
    for path in &args.metrics {
        records.push(platform_from_metrics(path, None)?);
    }
    let kv = match records.as_slice() {
        [] => return Err(CliError::Usage("give at least one --platform or --metrics record".into())),
        [one] => {
            let r = energy_report(one).map_err(with_guidance)?;
            print!("{r}");
            r.to_kv()
        }
        [a, b] => {
            let c = comparison_report(a, b).map_err(with_guidance)?;
            print!("{c}");
            c.to_kv()
        }
        _ => {
            return Err(CliError::Usage(format!(
                "a report takes one or two platform records, got {}",
                records.len()
            )))
        }
    };
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        let path = dir.join("report.txt");
        fs::write(&path, kv)?;
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn with_guidance(e: Error) -> Error {
    match e {
        Error::UndefinedMetric(msg) => Error::UndefinedMetric(format!(
            "{msg}; pass `events=N` in --platform or a metrics file from a completed run"
        )),
        other => other,
    }
}

pub fn calibrate(args: CalibrateArgs) -> CliResult {
    let mut cfg = load_config(&args.config)?;
    if let Some(t) = args.target_hz {
        cfg.calibration.target_hz = t;
    }
    cfg.validate()?;
    log::info!(
        "calibrating towards {} ± {} Hz from scale {}",
        cfg.calibration.target_hz,
        cfg.calibration.band_hz,
        cfg.exc_scale
    );
    let (derived, cal) = calibrate_config(&cfg)?;
    for (scale, rate) in &cal.probes {
        println!("probe scale {scale:<10.6} rate {rate:.3} Hz");
    }
    println!("calibrated scale {} -> {:.3} Hz", cal.scale, cal.rate_hz);
    let path = match &args.write {
        Some(p) => p.clone(),
        None => cfg.output_dir.join("calibrated.cfg"),
    };
    write_config(&derived, &path)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn write_config(cfg: &RunConfig, path: &Path) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, format!("# derived by `dpsnn calibrate`\n{}", cfg.to_text()))?;
    Ok(())
}
