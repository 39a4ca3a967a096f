//! Experiment catalog and output plumbing behind the command-line front end:
//! loads device configs, runs named scenarios, and writes data files plus a
//! run manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::calibration::{self, GateCalibration};
use crate::dynamics::{self, NoiseParams};
use crate::effective;
use crate::error::{Error, Result};
use crate::hilbert::C64;
use crate::model::{self, DeviceParams};
use crate::tomography::{self, PauliTransferMatrix, ReadoutModel, PAULI_LABELS};
use crate::units;

pub const SCENARIOS: [&str; 9] = [
    "calibrate", "spectrum", "fig2a", "fig2b", "fig2c", "fig3", "fig4", "limits", "swcheck",
];

/// Environment variable consulted for the default output directory.
pub const OUT_DIR_ENV: &str = "BSWAP_LAB_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Resolved run configuration.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    /// Device config file; the built-in reference device when absent.
    pub device_path: Option<PathBuf>,
    pub scenario: String,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
    pub seed: Option<u64>,
    pub shots: u64,
    /// Integrator step, ns (default 0.1).
    pub dt_ns: f64,
    /// Override the device's level count.
    pub levels: Option<usize>,
    /// Pure-dephasing overrides, μs.
    pub tphi_us_q1: Option<f64>,
    pub tphi_us_q2: Option<f64>,
    /// Gate calibration from a previous `calibrate` run; recomputed when
    /// absent or when `recalibrate` is set.
    pub calibration_file: Option<PathBuf>,
    pub recalibrate: bool,
}

impl ExperimentConfig {
    pub fn new(scenario: &str, out_dir: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            device_path: None,
            scenario: scenario.to_string(),
            out_dir: out_dir.into(),
            format: OutputFormat::Csv,
            seed: None,
            shots: 0,
            dt_ns: 0.1,
            levels: None,
            tphi_us_q1: None,
            tphi_us_q2: None,
            calibration_file: None,
            recalibrate: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !SCENARIOS.contains(&self.scenario.as_str()) {
            return Err(Error::UnknownScenario {
                name: self.scenario.clone(),
                valid: SCENARIOS.join(", "),
            });
        }
        if self.shots > 0 && self.seed.is_none() {
            return Err(Error::Config(
                "a --seed is mandatory whenever --shots > 0".into(),
            ));
        }
        if self.dt_ns.is_nan() || self.dt_ns <= 0.0 {
            return Err(Error::Config("dt must be positive".into()));
        }
        Ok(())
    }

    fn device(&self) -> Result<DeviceParams> {
        let mut dev = match &self.device_path {
            Some(path) => model::load_device_file(path)?,
            None => DeviceParams::reference(),
        };
        if let Some(levels) = self.levels {
            dev = dev.with_levels(levels)?;
        }
        Ok(dev)
    }

    fn dt(&self) -> f64 {
        units::ns(self.dt_ns)
    }
}

/// Calibration summary persisted by the `calibrate` scenario and reloadable
/// by other scenarios.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub j_ghz: f64,
    pub omega_formula_mhz: f64,
    pub delta_formula_khz: f64,
    pub omega_gate_mhz: f64,
    pub delta_gate_khz: f64,
    pub gate_duration_ns: f64,
    pub gate_ramp_ns: f64,
    pub omega_b_realized_khz: f64,
    /// Second-order coefficients at the formula operating point.
    #[serde(default)]
    pub omega_s_khz: f64,
    #[serde(default)]
    pub alpha_zz_khz: f64,
    #[serde(default)]
    pub alpha_diff_mhz: f64,
    pub frame_phases_rad: [f64; 4],
    pub bell_omega_mhz: f64,
    pub bell_delta_khz: f64,
    pub bell_fidelity: f64,
    pub enhancement_factor: f64,
    pub gate_levels: usize,
}

impl CalibrationRecord {
    pub fn from_calibration(cal: &GateCalibration, enhancement: f64) -> Result<Self> {
        let dev = cal.device();
        let coeffs = effective::EffectiveCoefficients::evaluate(
            &dev,
            cal.omega_formula,
            dev.lambda * cal.omega_formula,
            cal.delta_formula,
        )?;
        Ok(CalibrationRecord {
            j_ghz: units::to_ghz(dev.j),
            omega_formula_mhz: units::to_mhz(cal.omega_formula),
            delta_formula_khz: units::to_khz(cal.delta_formula),
            omega_gate_mhz: units::to_mhz(cal.omega),
            delta_gate_khz: units::to_khz(cal.delta),
            gate_duration_ns: cal.duration * 1e9,
            gate_ramp_ns: cal.ramp * 1e9,
            omega_b_realized_khz: units::to_khz(cal.omega_b_realized),
            omega_s_khz: units::to_khz(coeffs.omega_s),
            alpha_zz_khz: units::to_khz(coeffs.alpha_zz),
            alpha_diff_mhz: units::to_mhz(coeffs.alpha_diff),
            frame_phases_rad: cal.frame_phases,
            bell_omega_mhz: units::to_mhz(cal.bell_omega),
            bell_delta_khz: units::to_khz(cal.bell_delta),
            bell_fidelity: cal.bell_fidelity,
            enhancement_factor: enhancement,
            gate_levels: dev.space.levels(),
        })
    }
}

/// Manifest written alongside every scenario's outputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: String,
    pub software_version: String,
    pub device_config: String,
    pub seed: Option<u64>,
    pub shots: u64,
    pub dt_ns: f64,
    pub format: String,
    pub resolved: Value,
    pub outputs: Vec<String>,
    pub wall_seconds: f64,
}

/// Round to 12 significant digits (the output formatting contract).
fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

fn jnum(x: f64) -> Value {
    serde_json::Number::from_f64(sig12(x))
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

/// A rendered output table: header plus rows of 12-significant-digit
/// columns, serializable as CSV or JSON.
struct Table {
    name: &'static str,
    columns: Vec<String>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    fn new(name: &'static str, columns: &[&str]) -> Self {
        Table {
            name,
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn render(&self, format: OutputFormat) -> (String, String) {
        match format {
            OutputFormat::Csv => {
                let mut s = self.columns.join(",");
                s.push('\n');
                for row in &self.rows {
                    let fields: Vec<String> = row
                        .iter()
                        .map(|v| match v {
                            Value::Number(n) => fmt12(n.as_f64().unwrap_or(f64::NAN)),
                            Value::String(t) => t.clone(),
                            Value::Null => String::new(),
                            other => other.to_string(),
                        })
                        .collect();
                    s.push_str(&fields.join(","));
                    s.push('\n');
                }
                (format!("{}.csv", self.name), s)
            }
            OutputFormat::Json => {
                let body = json!({
                    "columns": self.columns,
                    "rows": self.rows,
                });
                (
                    format!("{}.json", self.name),
                    serde_json::to_string_pretty(&body).expect("table serializes") + "\n",
                )
            }
        }
    }
}

fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Dispatch a scenario: writes its outputs and manifest to the configured
/// directory, returning the manifest.
pub fn run_scenario(config: &ExperimentConfig) -> Result<RunManifest> {
    config.validate()?;
    let start = Instant::now();
    let dev = config.device()?;
    std::fs::create_dir_all(&config.out_dir)?;

    let (tables, extra_files, resolved) = match config.scenario.as_str() {
        "calibrate" => scenario_calibrate(config, &dev)?,
        "spectrum" => scenario_spectrum(&dev)?,
        "fig2a" => scenario_fig2a(config, &dev)?,
        "fig2b" => scenario_fig2b(&dev)?,
        "fig2c" => scenario_fig2c(config, &dev)?,
        "fig3" => scenario_fig3(config, &dev)?,
        "fig4" => scenario_fig4(config, &dev)?,
        "limits" => scenario_limits(&dev)?,
        "swcheck" => scenario_swcheck(&dev)?,
        other => {
            return Err(Error::UnknownScenario {
                name: other.to_string(),
                valid: SCENARIOS.join(", "),
            })
        }
    };

    let mut outputs = Vec::new();
    for table in &tables {
        let (name, content) = table.render(config.format);
        write_atomic(&config.out_dir.join(&name), &content)?;
        outputs.push(name);
    }
    for (name, content) in &extra_files {
        write_atomic(&config.out_dir.join(name), content)?;
        outputs.push(name.clone());
    }

    let manifest = RunManifest {
        scenario: config.scenario.clone(),
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        device_config: model::device_config_string(&dev),
        seed: config.seed,
        shots: config.shots,
        dt_ns: config.dt_ns,
        format: match config.format {
            OutputFormat::Csv => "csv".into(),
            OutputFormat::Json => "json".into(),
        },
        resolved,
        outputs: outputs.clone(),
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    write_atomic(
        &config.out_dir.join("manifest.json"),
        &(serde_json::to_string_pretty(&manifest)? + "\n"),
    )?;
    Ok(manifest)
}

fn gate_calibration(config: &ExperimentConfig, dev: &DeviceParams) -> Result<GateCalibration> {
    if !config.recalibrate {
        if let Some(path) = &config.calibration_file {
            let record: CalibrationRecord =
                serde_json::from_str(&std::fs::read_to_string(path)?)?;
            return calibration_from_record(dev, &record);
        }
    }
    GateCalibration::for_device(dev)
}

fn calibration_from_record(dev: &DeviceParams, record: &CalibrationRecord) -> Result<GateCalibration> {
    GateCalibration::from_parts(
        &dev.with_j(units::ghz(record.j_ghz)),
        record.gate_levels,
        units::mhz(record.omega_gate_mhz),
        units::khz(record.delta_gate_khz),
        units::ns(record.gate_duration_ns),
        units::ns(record.gate_ramp_ns),
        units::mhz(record.omega_formula_mhz),
        units::khz(record.delta_formula_khz),
        units::mhz(record.bell_omega_mhz),
        units::khz(record.bell_delta_khz),
        record.bell_fidelity,
        units::khz(record.omega_b_realized_khz),
        record.frame_phases_rad,
    )
}

type ScenarioOutput = (Vec<Table>, Vec<(String, String)>, Value);

fn scenario_calibrate(config: &ExperimentConfig, dev: &DeviceParams) -> Result<ScenarioOutput> {
    let cal = gate_calibration(config, dev)?;
    let enhancement = effective::enhancement_factor(dev)?;
    let record = CalibrationRecord::from_calibration(&cal, enhancement)?;
    let file = (
        "calibration.json".to_string(),
        serde_json::to_string_pretty(&record)? + "\n",
    );
    let mut resolved = serde_json::to_value(&record)?;
    // provenance: what each calibrated constant was fitted against
    resolved["provenance"] = json!({
        "j_ghz": { "fit": "static ZZ = E11 - E10 - E01", "target_zz_khz": 90.0, "tolerance_hz": 10.0 },
        "delta_formula_khz": { "fit": "alpha_IZ + alpha_ZI = 0", "tolerance_hz": 1.0 },
        "omega_formula_mhz": { "fit": "|Omega_B| = pi/(2 x 800 ns)", "target_khz": 312.5 },
        "delta_gate_khz": { "fit": "zero two-photon tilt of the realized 800 ns gate", "tolerance_rad": 1e-5 },
        "omega_gate_mhz": { "fit": "realized rotation angle = pi/2 at 800 ns", "tolerance_rad": 1e-6 },
        "bell_omega_mhz": { "fit": "maximum fitted-phase Bell fidelity at 800 ns" },
    });
    Ok((vec![], vec![file], resolved))
}

fn scenario_spectrum(dev: &DeviceParams) -> Result<ScenarioOutput> {
    let table = model::spectrum(dev)?;
    let mut out = Table::new("spectrum", &["from", "to", "photons", "frequency_ghz"]);
    for row in &table.rows {
        out.push(vec![
            Value::String(format!("{}{}", row.from.0, row.from.1)),
            Value::String(format!("{}{}", row.to.0, row.to.1)),
            Value::Number(row.photons.into()),
            jnum(units::to_ghz(row.frequency)),
        ]);
    }
    let two_photon = table
        .find((0, 0), (1, 1))
        .map(|r| units::to_ghz(r.frequency))
        .unwrap_or(f64::NAN);
    Ok((
        vec![out],
        vec![],
        json!({ "two_photon_00_11_ghz": jnum(two_photon) }),
    ))
}

fn scenario_fig2a(config: &ExperimentConfig, dev: &DeviceParams) -> Result<ScenarioOutput> {
    let cal = gate_calibration(config, dev)?;
    let devg = cal.device();
    let omega_d = cal.drive_frequency();
    let total = 6.0 * cal.duration;
    let n = 601;
    let durations: Vec<f64> = (0..n).map(|k| total * k as f64 / (n - 1) as f64).collect();
    let trace = dynamics::rabi_experiment(&devg, cal.omega, omega_d, &durations)?;
    let mut out = Table::new(
        "fig2a_rabi",
        &["time_ns", "p00", "p01", "p10", "p11", "leakage"],
    );
    for k in 0..trace.times.len() {
        out.push(vec![
            jnum(trace.times[k] * 1e9),
            jnum(trace.p00[k]),
            jnum(trace.p01[k]),
            jnum(trace.p10[k]),
            jnum(trace.p11[k]),
            jnum(trace.leakage[k]),
        ]);
    }
    let resolved = json!({
        "omega_mhz": jnum(units::to_mhz(cal.omega)),
        "delta_khz": jnum(units::to_khz(cal.delta)),
    });
    Ok((vec![out], vec![], resolved))
}

/// Default amplitude grid for the Fig. 2(b) sweep: a clean decade at the
/// bottom for the quadratic-slope fit, then the bending region.
pub fn default_sweep_amplitudes() -> Vec<f64> {
    [
        0.5, 0.7, 1.0, 1.4, 2.0, 2.8, 4.0, 5.0, 6.5, 8.0, 16.0, 22.0, 27.2, 33.0, 40.0,
    ]
    .iter()
    .map(|f| units::mhz(*f))
    .collect()
}

fn scenario_fig2b(dev: &DeviceParams) -> Result<ScenarioOutput> {
    let rows = dynamics::amplitude_sweep(dev, &default_sweep_amplitudes());
    let mut out = Table::new(
        "fig2b_sweep",
        &[
            "omega_mhz",
            "omega_b_sim_khz",
            "omega_b_formula_khz",
            "delta_formula_khz",
            "delta_tuned_khz",
            "visibility",
            "flag",
        ],
    );
    for row in &rows {
        out.push(vec![
            jnum(units::to_mhz(row.omega)),
            row.omega_b_sim.map(|v| jnum(units::to_khz(v))).unwrap_or(Value::Null),
            row.omega_b_formula
                .map(|v| jnum(units::to_khz(v)))
                .unwrap_or(Value::Null),
            row.delta_formula
                .map(|v| jnum(units::to_khz(v)))
                .unwrap_or(Value::Null),
            row.delta_tuned
                .map(|v| jnum(units::to_khz(v)))
                .unwrap_or(Value::Null),
            row.visibility.map(jnum).unwrap_or(Value::Null),
            row.flag
                .clone()
                .map(Value::String)
                .unwrap_or(Value::String(String::new())),
        ]);
    }
    let flagged = rows.iter().filter(|r| r.flag.is_some()).count();
    Ok((vec![out], vec![], json!({ "rows": rows.len(), "flagged": flagged })))
}

fn default_echo_noise(config: &ExperimentConfig) -> NoiseParams {
    // device-at-rest coherence: Table-I T1 with Tφ matching the measured T2*
    let t1_1 = units::us(model::reference::T1_Q1_US);
    let t1_2 = units::us(model::reference::T1_Q2_US);
    let tphi = |t2: f64, t1: f64| 1.0 / (1.0 / t2 - 0.5 / t1);
    NoiseParams {
        t1_q1: t1_1,
        t1_q2: t1_2,
        tphi_q1: config
            .tphi_us_q1
            .map(units::us)
            .unwrap_or_else(|| tphi(units::us(29.5), t1_1)),
        tphi_q2: config
            .tphi_us_q2
            .map(units::us)
            .unwrap_or_else(|| tphi(units::us(16.0), t1_2)),
    }
}

fn scenario_fig2c(config: &ExperimentConfig, dev: &DeviceParams) -> Result<ScenarioOutput> {
    let cal = gate_calibration(config, dev)?;
    let noise = default_echo_noise(config);
    let delays: Vec<f64> = (1..=24).map(|k| units::us(0.5) * k as f64).collect();
    let ramp_rate = units::TWO_PI * 0.25e6;
    let echo = dynamics::bell_echo_with(&cal, &noise, &delays, ramp_rate)?;
    let mut out = Table::new("fig2c_echo", &["delay_ns", "p00"]);
    for (t, p) in echo.trace.times.iter().zip(echo.trace.p00.iter()) {
        out.push(vec![jnum(t * 1e9), jnum(*p)]);
    }
    let resolved = json!({
        "echo_time_us": jnum(1e6 / echo.decay_rate.max(1e-12)),
        "decay_rate_per_s": jnum(echo.decay_rate),
        "oscillation_rad_per_s": jnum(echo.oscillation),
        "visibility": jnum(echo.visibility),
        "tphi_q1_us": jnum(noise.tphi_q1 * 1e6),
        "tphi_q2_us": jnum(noise.tphi_q2 * 1e6),
    });
    Ok((vec![out], vec![], resolved))
}

fn density_table(name: &'static str, rho: &Array2<C64>) -> Table {
    let mut out = Table::new(name, &["row", "col", "re", "im"]);
    for i in 0..4 {
        for j in 0..4 {
            out.push(vec![
                Value::Number(i.into()),
                Value::Number(j.into()),
                jnum(rho[(i, j)].re),
                jnum(rho[(i, j)].im),
            ]);
        }
    }
    out
}

fn scenario_fig3(config: &ExperimentConfig, dev: &DeviceParams) -> Result<ScenarioOutput> {
    let cal = gate_calibration(config, dev)?;
    let model_ro = ReadoutModel::default();
    let mut tables = Vec::new();
    let mut resolved = serde_json::Map::new();

    for (tag, phase) in [("phi000", 0.0), ("phi045", std::f64::consts::FRAC_PI_4)] {
        let rho4 = cal.bell_state_density(phase, config.dt())?;
        let records = tomography::simulate_readout(
            &rho4,
            &model_ro,
            config.shots,
            config.seed.unwrap_or(0),
        )?;
        let li = tomography::state_linear_inversion(&records, &model_ro)?;
        let mle = tomography::state_mle(&records, &model_ro)?;
        // fitted-phase Bell target from the reconstructed coherence
        let fit_phase = li.matrix[(3, 0)].arg();
        let f = std::f64::consts::FRAC_1_SQRT_2;
        let target = [
            C64::new(f, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, fit_phase).exp() * f,
        ];
        let fid_li = tomography::state_fidelity(&li.matrix, &target);
        let fid_mle = tomography::state_fidelity(mle.matrix(), &target);
        let name_li: &'static str = match tag {
            "phi000" => "fig3_state_phi000_li",
            _ => "fig3_state_phi045_li",
        };
        let name_mle: &'static str = match tag {
            "phi000" => "fig3_state_phi000_mle",
            _ => "fig3_state_phi045_mle",
        };
        tables.push(density_table(name_li, &li.matrix));
        tables.push(density_table(name_mle, mle.matrix()));
        resolved.insert(
            tag.to_string(),
            json!({
                "fitted_phase_rad": jnum(fit_phase),
                "fidelity_linear_inversion": jnum(fid_li),
                "fidelity_mle": jnum(fid_mle),
                "min_eigenvalue_li": jnum(li.min_eigenvalue),
            }),
        );
    }

    let phis: Vec<f64> = (0..49)
        .map(|k| units::TWO_PI * k as f64 / 48.0)
        .collect();
    let sweep = tomography::pauli_phase_sweep(&phis);
    let mut columns: Vec<&str> = vec!["phi_rad"];
    columns.extend(PAULI_LABELS.iter().skip(1));
    let mut table = Table::new("fig3_phase_sweep", &columns);
    for (phi, row) in sweep {
        let mut vals = vec![jnum(phi)];
        vals.extend(row.iter().map(|v| jnum(*v)));
        table.push(vals);
    }
    tables.push(table);
    Ok((tables, vec![], Value::Object(resolved)))
}

fn ptm_table(name: &'static str, ptm: &PauliTransferMatrix) -> Table {
    let mut columns: Vec<&str> = vec!["row"];
    columns.extend(PAULI_LABELS.iter());
    let mut out = Table::new(name, &columns);
    for (i, label) in PAULI_LABELS.iter().enumerate() {
        let mut row = vec![Value::String(label.to_string())];
        for j in 0..16 {
            row.push(jnum(ptm.matrix()[(i, j)]));
        }
        out.push(row);
    }
    out
}

fn scenario_fig4(config: &ExperimentConfig, dev: &DeviceParams) -> Result<ScenarioOutput> {
    let cal = gate_calibration(config, dev)?;
    let model_ro = ReadoutModel::default();
    let dephased = NoiseParams::pure_dephasing(
        config.tphi_us_q1.map(units::us).unwrap_or(units::us(4.0)),
        config.tphi_us_q2.map(units::us).unwrap_or(units::us(4.0)),
    );
    let seed = config.seed.unwrap_or(0);

    let mut tables = Vec::new();
    let mut resolved = serde_json::Map::new();
    for (gate_tag, kind) in [
        ("sqrtbswap", calibration::GateKind::SqrtBswap),
        ("bswap", calibration::GateKind::Bswap),
    ] {
        let ideal = cal.ideal_ptm(kind);
        tables.push(ptm_table(
            match gate_tag {
                "sqrtbswap" => "fig4_ptm_sqrtbswap_ideal",
                _ => "fig4_ptm_bswap_ideal",
            },
            &ideal,
        ));
        for (noise_tag, noise) in [
            ("noiseless", NoiseParams::noiseless()),
            ("dephased", dephased),
        ] {
            let channel = cal.gate_channel(kind, &noise, config.dt())?;
            let result = tomography::process_tomography(
                |rho| channel.apply(rho),
                &model_ro,
                config.shots,
                seed,
            )?;
            let f_raw = tomography::gate_fidelity(&result.raw, &ideal);
            let f_mle = tomography::gate_fidelity(&result.mle, &ideal);
            let name_raw: &'static str = match (gate_tag, noise_tag) {
                ("sqrtbswap", "noiseless") => "fig4_ptm_sqrtbswap_noiseless_raw",
                ("sqrtbswap", _) => "fig4_ptm_sqrtbswap_dephased_raw",
                ("bswap", "noiseless") => "fig4_ptm_bswap_noiseless_raw",
                _ => "fig4_ptm_bswap_dephased_raw",
            };
            tables.push(ptm_table(name_raw, &result.raw));
            resolved.insert(
                format!("{gate_tag}_{noise_tag}"),
                json!({
                    "gate_fidelity_raw": jnum(f_raw),
                    "gate_fidelity_mle": jnum(f_mle),
                }),
            );
        }
    }
    resolved.insert(
        "tphi_us".into(),
        json!([jnum(dephased.tphi_q1 * 1e6), jnum(dephased.tphi_q2 * 1e6)]),
    );
    Ok((tables, vec![], Value::Object(resolved)))
}

fn scenario_limits(dev: &DeviceParams) -> Result<ScenarioOutput> {
    // harmonic limit
    let mut harmonic = *dev;
    harmonic.q1.delta = 0.0;
    harmonic.q2.delta = 0.0;
    let omega = units::mhz(20.0);
    let harmonic_rate = effective::omega_b_main(&harmonic, omega)?;

    // pure-qubit limit convergence
    let mut rows = Vec::new();
    let dd = dev.detuning();
    for magnitude in [1e2, 1e3, 1e4] {
        let mut pure = *dev;
        pure.j = 2e-3 * dd.abs();
        pure.q1.delta = dd.abs() * magnitude;
        pure.q2.delta = dd.abs() * magnitude;
        let got = effective::omega_b_main(&pure, omega)?;
        let limit = -2.0 * pure.j * omega * omega * (1.0 + pure.lambda) / (dd * dd);
        rows.push((magnitude, got / limit));
    }
    let mut table = Table::new("limits", &["delta_over_detuning", "ratio_to_pure_qubit_limit"]);
    for (m, r) in &rows {
        table.push(vec![jnum(*m), jnum(*r)]);
    }
    let resolved = json!({
        "harmonic_omega_b": jnum(harmonic_rate),
        "enhancement_factor": jnum(effective::enhancement_factor(dev)?),
    });
    Ok((vec![table], vec![], resolved))
}

fn scenario_swcheck(dev: &DeviceParams) -> Result<ScenarioOutput> {
    let omega = units::mhz(27.0);
    let mut table = Table::new(
        "swcheck",
        &[
            "j_khz",
            "numeric_coupling_khz",
            "closed_form_khz",
            "ratio",
            "residual_hz",
        ],
    );
    let mut rows = Vec::new();
    for scale in [0.25, 0.5, 1.0, 2.0] {
        let devj = dev.with_j(dev.j * scale);
        let delta = effective::calibrate_delta(&devj, omega, devj.lambda * omega)?;
        let numeric = effective::numeric_bswap_coupling(&devj, omega, devj.lambda * omega, delta)?;
        let closed = effective::omega_b_full(&devj, omega, devj.lambda * omega, delta)?.abs();
        rows.push((devj.j, numeric, closed));
        table.push(vec![
            jnum(units::to_khz(devj.j)),
            jnum(units::to_khz(numeric)),
            jnum(units::to_khz(closed)),
            jnum(numeric / closed),
            jnum((numeric - closed) / units::TWO_PI),
        ]);
    }
    let full = rows.iter().find(|r| (r.0 - dev.j).abs() < 1e-9).unwrap();
    let half = rows
        .iter()
        .find(|r| (r.0 - dev.j * 0.5).abs() < 1e-9)
        .unwrap();
    let shrink = (full.1 - full.2).abs() / (half.1 - half.2).abs().max(1e-300);
    Ok((
        vec![table],
        vec![],
        json!({ "residual_shrink_on_halving_j": jnum(shrink) }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_scenario_is_rejected_with_catalog() {
        let config = ExperimentConfig::new("fig9", std::env::temp_dir());
        match run_scenario(&config) {
            Err(Error::UnknownScenario { name, valid }) => {
                assert_eq!(name, "fig9");
                assert!(valid.contains("spectrum"));
                assert!(valid.contains("fig2b"));
            }
            other => panic!("expected catalog error, got {other:?}"),
        }
    }

    #[test]
    fn shots_require_seed() {
        let mut config = ExperimentConfig::new("spectrum", std::env::temp_dir());
        config.shots = 100;
        assert!(matches!(run_scenario(&config), Err(Error::Config(_))));
    }

    #[test]
    fn sig12_rounds_to_twelve_digits() {
        #[allow(clippy::excessive_precision)]
        let x = 0.123456789012345678;
        assert_eq!(fmt12(x), "1.23456789012e-1");
        assert_eq!(sig12(x), 0.123456789012);
    }
}
