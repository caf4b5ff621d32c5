//! Command-line front end: parse a TOML run configuration, execute the
//! named experiment, and write the result table (CSV), a metadata
//! sidecar that reproduces the run, and optional scattering-matrix
//! dumps.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use tmi::cascade::{cascade_green, fringe_scan, register_fringe_visibility};
use tmi::config::{parse_arm, parse_config, parse_mirror, RunConfig};
use tmi::error::{Result, TmiError};
use tmi::experiments::{
    delay_scan_widths, estimate_zeta, peak_ce_matrix, skew_vs_power, tradeoff_comparison,
    ExperimentResult,
};
use tmi::io::{dump_matrix, format_value, write_result_csv};

#[derive(Parser, Debug)]
#[command(
    name = "simulate",
    about = "Run a temporal-mode conversion or interferometry experiment from a config file"
)]
struct Cli {
    /// Path to the TOML run configuration.
    config: PathBuf,
    /// Output directory (overrides output.directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parallel fan-outs; any value produces
    /// byte-identical output.
    #[arg(long)]
    threads: Option<usize>,
    /// Also dump the cascade scattering matrix (overrides
    /// output.dump_green).
    #[arg(long)]
    dump_green: bool,
    /// Result table format (overrides output.format; only csv).
    #[arg(long)]
    format: Option<String>,
}

fn linspace(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(TmiError::Config(format!(
            "a scan needs at least 2 points, got {n}"
        )));
    }
    let h = (b - a) / (n - 1) as f64;
    Ok((0..n).map(|k| a + k as f64 * h).collect())
}

fn run_experiment(cfg: &RunConfig) -> Result<ExperimentResult> {
    let res = cfg.resolve()?;
    let exp = &cfg.experiment;
    match exp.name.as_str() {
        "fringe_scan" => {
            let spec = res.cascade_spec()?;
            let signal_in = res.scenario.signal(res.signal_family)?;
            let mirror = parse_mirror(&exp.mirror)?;
            let displacements = linspace(exp.scan_start_nm, exp.scan_stop_nm, exp.scan_points)?;
            let table = fringe_scan(&spec, mirror, &displacements, &signal_in)?;
            let max_ce = table.iter().map(|&(_, c)| c).fold(f64::MIN, f64::max);
            let min_ce = table.iter().map(|&(_, c)| c).fold(f64::MAX, f64::min);
            let visibility = register_fringe_visibility(&spec, &signal_in)?;
            Ok(ExperimentResult {
                name: "fringe_scan".into(),
                axes: vec!["displacement_nm".into(), "ce".into()],
                rows: table.into_iter().map(|(d, c)| vec![d, c]).collect(),
                summary: vec![
                    ("max_ce".into(), max_ce),
                    ("min_ce".into(), min_ce),
                    ("register_visibility".into(), visibility),
                ],
            })
        }
        "peak_ce_matrix" => peak_ce_matrix(&res.scenario, &res.basis),
        "delay_scan" => {
            let offsets = linspace(exp.offset_start_fs, exp.offset_stop_fs, exp.offset_points)?;
            match parse_arm(&exp.arm)? {
                Some(arm) => delay_scan_widths(
                    &res.scenario,
                    arm,
                    res.gamma_tilde,
                    exp.probe_gamma_tilde,
                    &offsets,
                ),
                None => {
                    let (zeta, s_scan, r_scan) = estimate_zeta(
                        &res.scenario,
                        res.gamma_tilde,
                        exp.probe_gamma_tilde,
                        &offsets,
                        &offsets,
                    )?;
                    let rows = s_scan
                        .rows
                        .iter()
                        .zip(&r_scan.rows)
                        .map(|(s, r)| vec![s[0], s[1], r[1]])
                        .collect();
                    let mut summary = Vec::new();
                    for (scan, tag) in [(&s_scan, "s"), (&r_scan, "r")] {
                        for (k, v) in &scan.summary {
                            summary.push((format!("{k}_{tag}"), *v));
                        }
                    }
                    summary.push(("zeta_estimate".into(), zeta));
                    Ok(ExperimentResult {
                        name: "delay_scan".into(),
                        axes: vec![
                            "arrival_offset_fs".into(),
                            "stage2_ce_s".into(),
                            "stage2_ce_r".into(),
                        ],
                        rows,
                        summary,
                    })
                }
            }
        }
        "skew_vs_power" => {
            let offsets = linspace(exp.offset_start_fs, exp.offset_stop_fs, exp.offset_points)?;
            skew_vs_power(
                &res.scenario,
                res.signal_family,
                &exp.gamma_list,
                exp.probe_gamma_tilde,
                &offsets,
            )
        }
        "tradeoff_comparison" => {
            tradeoff_comparison(&res.scenario, &res.basis, &exp.gamma_grid, res.n_kept)
        }
        other => Err(TmiError::Config(format!(
            "unknown experiment '{other}' (expected fringe_scan, peak_ce_matrix, \
             delay_scan, skew_vs_power or tradeoff_comparison)"
        ))),
    }
}

fn run(cli: &Cli) -> Result<()> {
    let mut cfg = parse_config(&cli.config)?;
    if let Some(out) = &cli.out {
        cfg.output.directory = out.display().to_string();
    }
    if cli.dump_green {
        cfg.output.dump_green = true;
    }
    if let Some(format) = &cli.format {
        cfg.output.format = format.clone();
    }
    cfg.validate()?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| TmiError::Config(format!("--threads: {e}")))?;
    }

    let result = run_experiment(&cfg)?;
    let dir = PathBuf::from(&cfg.output.directory);
    std::fs::create_dir_all(&dir)?;
    let table_path = dir.join(format!("{}.csv", result.name));
    write_result_csv(&result, &table_path)?;
    std::fs::write(dir.join(format!("{}.meta.toml", result.name)), cfg.to_toml()?)?;
    if cfg.output.dump_green {
        let res = cfg.resolve()?;
        let g = cascade_green(&res.cascade_spec()?, res.scenario.lambda_s_nm, &res.basis)?;
        dump_matrix(&g, &dir.join(format!("{}.green.bin", result.name)))?;
    }

    let mut line = format!("{} rows={}", result.name, result.rows.len());
    for (k, v) in &result.summary {
        line.push_str(&format!(" {k}={}", format_value(*v)));
    }
    line.push_str(&format!(" table={}", table_path.display()));
    println!("{line}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
