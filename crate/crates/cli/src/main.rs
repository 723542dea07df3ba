//! `pvbatt`: run the size sweep, fit regressions on its output and write
//! synthetic inputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pvbatt::economics::Scenario;
use pvbatt::profiles::{self, BuildingType, ProfileError};
use pvbatt::stats::feature_anova;
use pvbatt::sweep::{
    feature_table, read_cell_summaries, regress, regression_file_name, run_sweep, write_outputs,
    write_regression_csv, ObjectiveKind, Response, RunConfig, SizeSelection,
};

#[derive(Parser)]
#[command(name = "pvbatt", version, about = "PV-battery dispatch, profitability and attribution sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the size grid over every property and write cells and tables.
    Run {
        /// Directory with properties.csv and the load files it lists.
        #[arg(long)]
        profiles: PathBuf,
        /// Normalised PV generation, kWh per interval per kW_p.
        #[arg(long)]
        pv_profile: PathBuf,
        /// TOML run configuration; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Restrict to one objective (cost or grid).
        #[arg(long)]
        objective: Option<ObjectiveKind>,
        /// Restrict to one scenario (fit, market or none).
        #[arg(long)]
        scenario: Option<Scenario>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Regress one response on building features at one system size.
    Stats {
        #[arg(long)]
        cells: PathBuf,
        /// scr, ssr or irr.
        #[arg(long)]
        response: Response,
        #[arg(long)]
        pv: f64,
        #[arg(long)]
        batt: f64,
        #[arg(long, default_value = "cost")]
        objective: ObjectiveKind,
        #[arg(long, default_value = "fit")]
        scenario: Scenario,
        /// Output directory (default: next to the cells file).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic load profile, PV profile or property fleet.
    Synth {
        /// Building type of a single load profile.
        #[arg(long, conflicts_with_all = ["pv", "fleet"], required_unless_present_any = ["pv", "fleet"])]
        r#type: Option<BuildingType>,
        #[arg(long, requires = "type")]
        annual_mwh: Option<f64>,
        /// Write a normalised PV profile instead.
        #[arg(long, conflicts_with = "fleet")]
        pv: bool,
        /// Write N properties and a properties.csv into the --out directory.
        #[arg(long)]
        fleet: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command) -> Result<(), String> {
    match command {
        Command::Run {
            profiles,
            pv_profile,
            config,
            out,
            objective,
            scenario,
            jobs,
        } => {
            let mut cfg = match config {
                Some(path) => {
                    let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                    RunConfig::from_toml_str(&text).map_err(|e| format!("{}: {e}", path.display()))?
                }
                None => RunConfig::default(),
            };
            if let Some(o) = objective {
                cfg.sweep.objectives = vec![o];
            }
            if let Some(s) = scenario {
                cfg.sweep.scenarios = vec![s];
            }
            let properties = profiles::read_profile_dir(&profiles).map_err(|e| e.to_string())?;
            let pv = profiles::read_series(&pv_profile).map_err(|e| e.to_string())?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.unwrap_or(0))
                .build()
                .map_err(|e| e.to_string())?;
            let output = pool.install(|| run_sweep(&properties, &pv, &cfg)).map_err(|e| e.to_string())?;
            let written = write_outputs(&output, &cfg.sweep, &out).map_err(|e| e.to_string())?;
            println!(
                "{} cells from {} properties, {} files written to {}, {} LP window checks",
                output.cells.len(),
                properties.len(),
                written.len(),
                out.display(),
                output.lp_checks
            );
            Ok(())
        }
        Command::Stats {
            cells,
            response,
            pv,
            batt,
            objective,
            scenario,
            out,
        } => {
            let file = fs::File::open(&cells).map_err(|e| format!("{}: {e}", cells.display()))?;
            let summaries = read_cell_summaries(file).map_err(|e| format!("{}: {e}", cells.display()))?;
            let sel = SizeSelection {
                pv_size_rel: pv,
                batt_size_rel: batt,
                objective,
                scenario,
            };
            let fit = regress(&summaries, &sel, response).map_err(|e| e.to_string())?;
            let dir = out.unwrap_or_else(|| cells.parent().map(Path::to_path_buf).unwrap_or_default());
            fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            let path = dir.join(regression_file_name(response, &sel));
            let file = fs::File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            write_regression_csv(&fit, file).map_err(|e| format!("{}: {e}", path.display()))?;

            println!("{:<30} {:>12} {:>12} {:>9} {:>10}", "term", "estimate", "std_error", "t", "p");
            for j in 0..fit.k {
                println!(
                    "{:<30} {:>12.5} {:>12.5} {:>9.3} {:>10.4}",
                    fit.names[j], fit.coefficients[j], fit.std_errors[j], fit.t_stats[j], fit.p_values[j]
                );
            }
            println!(
                "n = {}, R² = {:.4}, F = {:.3} (p = {:.4}), AIC = {:.2}",
                fit.n, fit.r_squared, fit.f_statistic, fit.f_p_value, fit.aic
            );
            let (rows, y) = feature_table(&summaries, &sel, response);
            for p in feature_anova(&rows, &y).map_err(|e| e.to_string())? {
                let r = p.correlation.map(|r| format!(", r = {r:.3}")).unwrap_or_default();
                println!(
                    "ANOVA {:<14} R² = {:.4}, F({}, {}) = {:.3}, p = {:.4}{r}",
                    p.predictor, p.anova.r_squared, p.anova.df1, p.anova.df2, p.anova.f_statistic, p.anova.p_value
                );
            }
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Synth {
            r#type,
            annual_mwh,
            pv,
            fleet,
            seed,
            out,
        } => {
            let result: Result<(), ProfileError> = if pv {
                profiles::save_series(&profiles::generate_pv_profile(seed), &out)
            } else if let Some(n) = fleet {
                profiles::synthetic_fleet(n, seed).and_then(|f| profiles::write_profile_dir(&f, &out))
            } else {
                let kind = r#type.expect("clap requires a type here");
                let annual = annual_mwh.ok_or("--annual-mwh is required with --type")?;
                profiles::generate_synthetic(kind, annual, seed).and_then(|p| profiles::save_series(&p.load, &out))
            };
            result.map_err(|e| e.to_string())?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}
