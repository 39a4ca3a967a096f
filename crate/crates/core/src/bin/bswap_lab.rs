//! Command-line front end: each subcommand runs one named scenario of the
//! two-transmon bSWAP laboratory and writes data files plus a manifest.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bswap_core::harness::{run_scenario, ExperimentConfig, OutputFormat, OUT_DIR_ENV};

#[derive(Parser)]
#[command(
    name = "bswap-lab",
    version,
    about = "Two-transmon two-photon bSWAP gate laboratory"
)]
struct Cli {
    #[command(subcommand)]
    scenario: Scenario,
}

#[derive(Subcommand)]
enum Scenario {
    /// Fit J to the target ZZ, calibrate the gate working point, and freeze
    /// the reference constants
    Calibrate(CommonArgs),
    /// Transition table of the dressed device, including the two-photon
    /// |00>->|11> line
    Spectrum(CommonArgs),
    /// Two-photon Rabi trace at the calibrated operating point
    Fig2a(CommonArgs),
    /// Oscillation frequency versus drive amplitude with the closed-form
    /// overlay
    Fig2b(CommonArgs),
    /// Bell-state echo with linearly ramped phase
    Fig2c(CommonArgs),
    /// Bell preparation, state tomography (both estimators), and the
    /// Pauli-expectation phase sweep
    Fig3(CommonArgs),
    /// Process tomography of the sqrt(bSWAP) and bSWAP gates, noiseless and
    /// dephased
    Fig4(CommonArgs),
    /// Harmonic/pure-qubit limits and the enhancement factor
    Limits(CommonArgs),
    /// Numeric Schrieffer-Wolff coupling versus the closed form over a J
    /// grid
    Swcheck(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Device config file (key = value; omega/delta in GHz). Built-in
    /// reference device when omitted.
    #[arg(long)]
    device: Option<PathBuf>,
    /// Output directory (default: $BSWAP_LAB_OUT or ./out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format for data tables
    #[arg(long, default_value = "csv")]
    format: String,
    /// RNG seed; mandatory when --shots > 0
    #[arg(long)]
    seed: Option<u64>,
    /// Readout shots per record (0 = noiseless exact expectations)
    #[arg(long, default_value_t = 0)]
    shots: u64,
    /// Integrator step in ns
    #[arg(long, default_value_t = 0.1)]
    dt_ns: f64,
    /// Override the device's level count d
    #[arg(long)]
    levels: Option<usize>,
    /// Pure dephasing time of both transmons, in microseconds
    #[arg(long)]
    tphi_us: Option<f64>,
    /// Per-qubit pure dephasing overrides, in microseconds
    #[arg(long)]
    tphi1_us: Option<f64>,
    #[arg(long)]
    tphi2_us: Option<f64>,
    /// Reuse a calibration.json from a previous `calibrate` run
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Force recalibration even when --calibration is given
    #[arg(long, default_value_t = false)]
    recalibrate: bool,
}

impl CommonArgs {
    fn into_config(self, scenario: &str) -> Result<ExperimentConfig, String> {
        let out_dir = self
            .out
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        let format = match self.format.as_str() {
            "csv" => OutputFormat::Csv,
            "json" => OutputFormat::Json,
            other => return Err(format!("unknown format `{other}` (use csv or json)")),
        };
        let mut config = ExperimentConfig::new(scenario, out_dir);
        config.device_path = self.device;
        config.format = format;
        config.seed = self.seed;
        config.shots = self.shots;
        config.dt_ns = self.dt_ns;
        config.levels = self.levels;
        config.tphi_us_q1 = self.tphi1_us.or(self.tphi_us);
        config.tphi_us_q2 = self.tphi2_us.or(self.tphi_us);
        config.calibration_file = self.calibration;
        config.recalibrate = self.recalibrate;
        Ok(config)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match cli.scenario {
        Scenario::Calibrate(a) => ("calibrate", a),
        Scenario::Spectrum(a) => ("spectrum", a),
        Scenario::Fig2a(a) => ("fig2a", a),
        Scenario::Fig2b(a) => ("fig2b", a),
        Scenario::Fig2c(a) => ("fig2c", a),
        Scenario::Fig3(a) => ("fig3", a),
        Scenario::Fig4(a) => ("fig4", a),
        Scenario::Limits(a) => ("limits", a),
        Scenario::Swcheck(a) => ("swcheck", a),
    };
    let config = match args.into_config(name) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    match run_scenario(&config) {
        Ok(manifest) => {
            println!(
                "{}: wrote {} file(s) to {} in {:.2} s",
                manifest.scenario,
                manifest.outputs.len(),
                config.out_dir.display(),
                manifest.wall_seconds
            );
            for f in &manifest.outputs {
                println!("  {f}");
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
