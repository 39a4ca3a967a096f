//! The physical device: static two-transmon Hamiltonian, drive term,
//! rotating-frame Hamiltonian, spectrum extraction, static ZZ, and exchange
//! coupling calibration.
//!
//! All frequencies here are angular (rad/s); device config files use linear
//! GHz and are converted on load.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::hilbert::{C64, FockSpace, Mode, Operator};
use crate::units;

/// One transmon: 0→1 transition frequency and anharmonicity δ = E12 − E01,
/// both angular. δ is negative for transmons; δ = 0 is allowed only for
/// harmonic-limit checks.
#[derive(Clone, Copy, Debug)]
pub struct TransmonParams {
    pub omega01: f64,
    pub delta: f64,
}

/// Full device: two transmons, exchange coupling J, drive-coupling ratio λ
/// of transmon 2 relative to transmon 1, and the truncated Fock space.
#[derive(Clone, Copy, Debug)]
pub struct DeviceParams {
    pub q1: TransmonParams,
    pub q2: TransmonParams,
    pub j: f64,
    pub lambda: f64,
    pub space: FockSpace,
}

/// Measured coupled-device constants (linear units). The anharmonicities are
/// E12 − E01 per transmon, taken from the in-situ rows.
pub mod reference {
    /// Transmon 1 (A5, coupled) 0→1 frequency, GHz.
    pub const OMEGA1_GHZ: f64 = 4.3796;
    /// Transmon 2 (A8, coupled) 0→1 frequency, GHz.
    pub const OMEGA2_GHZ: f64 = 4.61368;
    /// Transmon 1 anharmonicity, GHz (4.1403 − 4.3796).
    pub const DELTA1_GHZ: f64 = 4.1403 - 4.3796;
    /// Transmon 2 anharmonicity, GHz (4.3709 − 4.61368).
    pub const DELTA2_GHZ: f64 = 4.3709 - 4.61368;
    /// Drive-coupling ratio of transmon 2 to transmon 1.
    pub const LAMBDA: f64 = 1.0;
    /// Static ZZ the exchange coupling is calibrated against, kHz.
    pub const TARGET_ZZ_KHZ: f64 = 90.0;
    /// Exchange coupling fitted to the 90 kHz ZZ at d = 3, GHz. Frozen from
    /// the bracketed root search; `fit_j` reproduces it to ~1e-4 relative.
    pub const J_FITTED_GHZ: f64 = 6.2316966843e-4;
    /// Relaxation times of the coupled transmons, μs.
    pub const T1_Q1_US: f64 = 38.0;
    pub const T1_Q2_US: f64 = 32.0;
}

impl DeviceParams {
    /// Reference device with the frozen fitted J and default 3-level
    /// truncation.
    pub fn reference() -> Self {
        Self::reference_with_j(units::ghz(reference::J_FITTED_GHZ))
    }

    /// Reference transmon parameters with an explicit exchange coupling.
    pub fn reference_with_j(j: f64) -> Self {
        DeviceParams {
            q1: TransmonParams {
                omega01: units::ghz(reference::OMEGA1_GHZ),
                delta: units::ghz(reference::DELTA1_GHZ),
            },
            q2: TransmonParams {
                omega01: units::ghz(reference::OMEGA2_GHZ),
                delta: units::ghz(reference::DELTA2_GHZ),
            },
            j,
            lambda: reference::LAMBDA,
            space: FockSpace::new(3).expect("d = 3 is valid"),
        }
    }

    /// Δ = ω₁ − ω₂.
    pub fn detuning(&self) -> f64 {
        self.q1.omega01 - self.q2.omega01
    }

    pub fn with_levels(mut self, levels: usize) -> Result<Self> {
        self.space = FockSpace::new(levels)?;
        Ok(self)
    }

    pub fn with_j(mut self, j: f64) -> Self {
        self.j = j;
        self
    }
}

/// Monochromatic drive: amplitude Ω₁ on transmon 1 (transmon 2 receives
/// λΩ₁), frequency ω_d, phase φ, all angular.
#[derive(Clone, Copy, Debug)]
pub struct DriveParams {
    amplitude: f64,
    frequency: f64,
    phase: f64,
}

impl DriveParams {
    pub fn new(amplitude: f64, frequency: f64, phase: f64) -> Result<Self> {
        if amplitude < 0.0 {
            return Err(Error::Config(format!(
                "drive amplitude must be non-negative, got {amplitude}"
            )));
        }
        Ok(Self {
            amplitude,
            frequency,
            phase: phase.rem_euclid(units::TWO_PI),
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }
}

/// Static Hamiltonian
/// (ω₁−δ₁/2)a†a + (δ₁/2)(a†a)² + (ω₂−δ₂/2)b†b + (δ₂/2)(b†b)² + J(a†b + ab†).
pub fn system_hamiltonian(dev: &DeviceParams) -> Operator {
    let space = dev.space;
    let d = space.levels();
    let mut mat = Array2::<C64>::zeros((space.dim(), space.dim()));
    for i in 0..space.dim() {
        let (n1, n2) = space.occupation(i);
        let (n1, n2) = (n1 as f64, n2 as f64);
        let e = (dev.q1.omega01 - dev.q1.delta / 2.0) * n1
            + dev.q1.delta / 2.0 * n1 * n1
            + (dev.q2.omega01 - dev.q2.delta / 2.0) * n2
            + dev.q2.delta / 2.0 * n2 * n2;
        mat[(i, i)] = C64::new(e, 0.0);
    }
    // J(a†b + ab†): ⟨n1+1, n2−1|a†b|n1 n2⟩ = √(n1+1)·√n2
    for n1 in 0..d - 1 {
        for n2 in 1..d {
            let from = space.index(n1, n2);
            let to = space.index(n1 + 1, n2 - 1);
            let amp = dev.j * ((n1 + 1) as f64).sqrt() * (n2 as f64).sqrt();
            mat[(to, from)] += C64::new(amp, 0.0);
            mat[(from, to)] += C64::new(amp, 0.0);
        }
    }
    Operator::hermitian(space, mat)
}

/// Lab-frame drive term Ω₁cos(ω_d t + φ)(a + a† + λb + λb†) at time `t`.
pub fn drive_hamiltonian(dev: &DeviceParams, drv: &DriveParams, t: f64) -> Operator {
    let envelope = drv.amplitude * (drv.frequency * t + drv.phase).cos();
    let space = dev.space;
    let a = Operator::annihilation(space, Mode::One);
    let b = Operator::annihilation(space, Mode::Two);
    let quad = a
        .add(&a.dagger())
        .add(&b.add(&b.dagger()).scaled_re(dev.lambda));
    Operator::hermitian(space, quad.matrix() * C64::new(envelope, 0.0))
}

/// Time-independent Hamiltonian in the frame rotating at the drive
/// frequency, after the rotating-wave approximation:
/// H_sys − ω_d(a†a + b†b) + (Ω₁/2)(e^{iφ}a + e^{−iφ}a† + λe^{iφ}b + λe^{−iφ}b†).
pub fn rwa_hamiltonian(dev: &DeviceParams, drv: &DriveParams) -> Operator {
    let space = dev.space;
    let n_total = Operator::number(space, Mode::One).add(&Operator::number(space, Mode::Two));
    let mut h = system_hamiltonian(dev)
        .sub(&n_total.scaled_re(drv.frequency))
        .matrix()
        .clone();
    let phase = C64::new(0.0, drv.phase).exp();
    let a = Operator::annihilation(space, Mode::One);
    let b = Operator::annihilation(space, Mode::Two);
    let half = 0.5 * drv.amplitude;
    h = h + &(a.matrix() * (phase * half))
        + &(a.dagger().matrix() * (phase.conj() * half))
        + &(b.matrix() * (phase * half * dev.lambda))
        + &(b.dagger().matrix() * (phase.conj() * half * dev.lambda));
    Operator::hermitian(space, h)
}

/// Dressed spectrum of the static Hamiltonian with eigenstates labeled by
/// their maximum-overlap bare state.
#[derive(Clone, Debug)]
pub struct DressedSpectrum {
    /// energy_by_label[flat bare index] = dressed eigenvalue (rad/s).
    pub energy_by_label: Vec<f64>,
    space: FockSpace,
}

impl DressedSpectrum {
    pub fn energy(&self, n1: usize, n2: usize) -> f64 {
        self.energy_by_label[self.space.index(n1, n2)]
    }
}

/// Diagonalize the static Hamiltonian and label dressed states by maximum
/// modulus overlap with bare states. Double-claimed labels are flagged as
/// ambiguous rather than silently assigned.
pub fn dressed_spectrum(dev: &DeviceParams) -> Result<DressedSpectrum> {
    let eig = system_hamiltonian(dev).eigh()?;
    let n = dev.space.dim();
    let mut energy_by_label = vec![f64::NAN; n];
    let mut claimed_by = vec![usize::MAX; n];
    for k in 0..n {
        let mut label = 0usize;
        let mut best = -1.0f64;
        for i in 0..n {
            let mag = eig.vectors[(i, k)].norm_sqr();
            if mag > best {
                best = mag;
                label = i;
            }
        }
        if claimed_by[label] != usize::MAX {
            return Err(Error::AmbiguousLabel {
                k1: claimed_by[label],
                k2: k,
                label,
            });
        }
        claimed_by[label] = k;
        energy_by_label[label] = eig.values[k];
    }
    Ok(DressedSpectrum {
        energy_by_label,
        space: dev.space,
    })
}

/// One line of the transition table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionRow {
    pub from: (usize, usize),
    pub to: (usize, usize),
    /// Transition frequency per absorbed photon (rad/s): E_f − E_i for
    /// one-photon lines, (E_f − E_i)/2 for two-photon lines.
    pub frequency: f64,
    pub photons: u8,
}

/// Transition lines of the dressed device as driven from the ground and
/// singly-excited states.
#[derive(Clone, Debug)]
pub struct TransitionTable {
    pub rows: Vec<TransitionRow>,
}

impl TransitionTable {
    pub fn find(&self, from: (usize, usize), to: (usize, usize)) -> Option<&TransitionRow> {
        self.rows.iter().find(|r| r.from == from && r.to == to)
    }
}

/// Spectrum of the device: one-photon lines out of |00⟩, |01⟩, |10⟩ and
/// two-photon lines out of |00⟩, including the |00⟩→|11⟩ line at
/// (E₁₁ − E₀₀)/2.
pub fn spectrum(dev: &DeviceParams) -> Result<TransitionTable> {
    let dressed = dressed_spectrum(dev)?;
    let d = dev.space.levels();
    let mut rows = Vec::new();
    let mut one_photon = vec![
        ((0, 0), (0, 1)),
        ((0, 0), (1, 0)),
        ((0, 1), (1, 1)),
        ((1, 0), (1, 1)),
    ];
    if d >= 3 {
        one_photon.push(((0, 1), (0, 2)));
        one_photon.push(((1, 0), (2, 0)));
    }
    for (from, to) in one_photon {
        rows.push(TransitionRow {
            from,
            to,
            frequency: dressed.energy(to.0, to.1) - dressed.energy(from.0, from.1),
            photons: 1,
        });
    }
    let mut two_photon = vec![((0, 0), (1, 1))];
    if d >= 3 {
        two_photon.push(((0, 0), (0, 2)));
        two_photon.push(((0, 0), (2, 0)));
    }
    for (from, to) in two_photon {
        rows.push(TransitionRow {
            from,
            to,
            frequency: (dressed.energy(to.0, to.1) - dressed.energy(from.0, from.1)) / 2.0,
            photons: 2,
        });
    }
    if rows.iter().any(|r| r.frequency <= 0.0) {
        return Err(Error::Unphysical(
            "transition table contains a non-positive frequency".into(),
        ));
    }
    Ok(TransitionTable { rows })
}

/// Static ZZ coupling E₁₁ − E₁₀ − E₀₁ from exact dressed eigenvalues
/// (E₀₀ = 0 for this Hamiltonian).
pub fn static_zz(dev: &DeviceParams) -> Result<f64> {
    let dressed = dressed_spectrum(dev)?;
    Ok(dressed.energy(1, 1) - dressed.energy(1, 0) - dressed.energy(0, 1))
}

/// Calibrate the exchange coupling J so the static ZZ matches `target_zz`
/// (rad/s), by a bracketed root search over (0, |Δ|/2) refined by secant
/// steps; the smallest positive root is returned. Requires d ≥ 3.
pub fn fit_j(dev: &DeviceParams, target_zz: f64) -> Result<f64> {
    if dev.space.levels() < 3 {
        return Err(Error::Config(
            "fit_j requires at least 3 levels per transmon".into(),
        ));
    }
    if target_zz == 0.0 {
        return Ok(0.0);
    }
    let tol = units::hz(10.0);
    let hi = dev.detuning().abs() / 2.0;
    let f = |j: f64| -> Result<f64> { Ok(static_zz(&dev.with_j(j))? - target_zz) };

    // scan for the first sign change, then refine inside it
    let n_scan = 64;
    let mut prev_j = 0.0;
    let mut prev_f = -target_zz;
    let mut bracket = None;
    for k in 1..=n_scan {
        let j = hi * k as f64 / n_scan as f64;
        let fj = f(j)?;
        if prev_f.signum() != fj.signum() {
            bracket = Some((prev_j, prev_f, j, fj));
            break;
        }
        prev_j = j;
        prev_f = fj;
    }
    let (mut lo, mut flo, mut hi_b, mut fhi) = bracket.ok_or_else(|| Error::Calibration {
        what: "fit_j",
        detail: format!(
            "no sign change for target ZZ {:.6} kHz in bracket J ∈ (0, {:.6} MHz)",
            units::to_khz(target_zz),
            units::to_mhz(hi)
        ),
    })?;

    for _ in 0..200 {
        let mut mid = if fhi != flo {
            hi_b - fhi * (hi_b - lo) / (fhi - flo)
        } else {
            0.5 * (lo + hi_b)
        };
        if !(mid > lo && mid < hi_b) {
            mid = 0.5 * (lo + hi_b);
        }
        let fmid = f(mid)?;
        if fmid.abs() < tol {
            return Ok(mid);
        }
        if flo.signum() != fmid.signum() {
            hi_b = mid;
            fhi = fmid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
    Err(Error::Calibration {
        what: "fit_j",
        detail: "root search did not converge within 200 iterations".into(),
    })
}

/// Parse a device config file: `key = value` lines, `#` comments. Keys:
/// omega1_ghz, omega2_ghz, delta1_ghz, delta2_ghz, lambda, levels, and
/// exactly one of j_ghz / target_zz_khz.
pub fn load_device_file(path: &Path) -> Result<DeviceParams> {
    let text = std::fs::read_to_string(path)?;
    parse_device_config(&text)
}

pub fn parse_device_config(text: &str) -> Result<DeviceParams> {
    let mut omega1 = None;
    let mut omega2 = None;
    let mut delta1 = None;
    let mut delta2 = None;
    let mut lambda = None;
    let mut levels = None;
    let mut j_ghz = None;
    let mut target_zz_khz = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = key.trim();
        let value: f64 = value.trim().parse().map_err(|_| {
            Error::Config(format!(
                "line {}: `{}` is not a number",
                lineno + 1,
                value.trim()
            ))
        })?;
        match key {
            "omega1_ghz" => omega1 = Some(value),
            "omega2_ghz" => omega2 = Some(value),
            "delta1_ghz" => delta1 = Some(value),
            "delta2_ghz" => delta2 = Some(value),
            "lambda" => lambda = Some(value),
            "levels" => levels = Some(value as usize),
            "j_ghz" => j_ghz = Some(value),
            "target_zz_khz" => target_zz_khz = Some(value),
            other => {
                return Err(Error::Config(format!(
                    "line {}: unknown key `{}`",
                    lineno + 1,
                    other
                )))
            }
        }
    }

    let require =
        |name: &str, v: Option<f64>| v.ok_or_else(|| Error::Config(format!("missing key `{name}`")));
    let omega1 = require("omega1_ghz", omega1)?;
    let omega2 = require("omega2_ghz", omega2)?;
    let delta1 = require("delta1_ghz", delta1)?;
    let delta2 = require("delta2_ghz", delta2)?;
    let lambda = lambda.unwrap_or(1.0);
    let levels = levels.unwrap_or(3);

    if omega1 <= 0.0 || omega2 <= 0.0 {
        return Err(Error::Config("transmon frequencies must be positive".into()));
    }

    let mut dev = DeviceParams {
        q1: TransmonParams {
            omega01: units::ghz(omega1),
            delta: units::ghz(delta1),
        },
        q2: TransmonParams {
            omega01: units::ghz(omega2),
            delta: units::ghz(delta2),
        },
        j: 0.0,
        lambda,
        space: FockSpace::new(levels)?,
    };

    match (j_ghz, target_zz_khz) {
        (Some(_), Some(_)) => Err(Error::Config(
            "specify exactly one of `j_ghz` and `target_zz_khz`, not both".into(),
        )),
        (None, None) => Err(Error::Config(
            "specify exactly one of `j_ghz` and `target_zz_khz`".into(),
        )),
        (Some(j), None) => {
            dev.j = units::ghz(j);
            Ok(dev)
        }
        (None, Some(zz)) => {
            dev.j = fit_j(&dev, units::khz(zz))?;
            Ok(dev)
        }
    }
}

/// Render a device back to the config format (used by the harness manifest).
pub fn device_config_string(dev: &DeviceParams) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "omega1_ghz = {:.12e}", units::to_ghz(dev.q1.omega01));
    let _ = writeln!(s, "omega2_ghz = {:.12e}", units::to_ghz(dev.q2.omega01));
    let _ = writeln!(s, "delta1_ghz = {:.12e}", units::to_ghz(dev.q1.delta));
    let _ = writeln!(s, "delta2_ghz = {:.12e}", units::to_ghz(dev.q2.delta));
    let _ = writeln!(s, "lambda = {}", dev.lambda);
    let _ = writeln!(s, "levels = {}", dev.space.levels());
    let _ = writeln!(s, "j_ghz = {:.12e}", units::to_ghz(dev.j));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{ghz, khz, mhz, to_khz};

    #[test]
    fn uncoupled_d2_eigenvalues() {
        let dev = DeviceParams::reference_with_j(0.0).with_levels(2).unwrap();
        let eig = system_hamiltonian(&dev).eigh().unwrap();
        let w1 = dev.q1.omega01;
        let w2 = dev.q2.omega01;
        let mut expect = [0.0, w1, w2, w1 + w2];
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in eig.values.iter().zip(expect.iter()) {
            assert!((got - want).abs() < 1e-6 * w1, "{got} vs {want}");
        }
    }

    #[test]
    fn anharmonicity_definition_d3() {
        // E(|2,0⟩) = 2ω₁ + δ₁ at J = 0, so E12 − E01 = δ₁
        let dev = DeviceParams::reference_with_j(0.0);
        let dressed = dressed_spectrum(&dev).unwrap();
        let e20 = dressed.energy(2, 0);
        let expect = 2.0 * dev.q1.omega01 + dev.q1.delta;
        assert!((e20 - expect).abs() < 1e-6 * expect.abs());
        let e12 = e20 - dressed.energy(1, 0);
        let e01 = dressed.energy(1, 0);
        assert!((e12 - e01 - dev.q1.delta).abs() < 1e-5 * dev.q1.delta.abs());
    }

    #[test]
    fn hamiltonian_is_exactly_hermitian() {
        let dev = DeviceParams::reference();
        assert_eq!(
            crate::hilbert::hermiticity_defect(system_hamiltonian(&dev).matrix()),
            0.0
        );
        let drv = DriveParams::new(mhz(20.0), ghz(4.5), 1.1).unwrap();
        assert!(
            crate::hilbert::hermiticity_defect(rwa_hamiltonian(&dev, &drv).matrix()) < 1e-12
        );
    }

    #[test]
    fn zero_drive_is_zero_operator() {
        let dev = DeviceParams::reference();
        let drv = DriveParams::new(0.0, ghz(4.5), 0.3).unwrap();
        assert_eq!(drive_hamiltonian(&dev, &drv, 1e-9).max_abs(), 0.0);
    }

    #[test]
    fn drive_vanishes_at_cosine_zero() {
        let dev = DeviceParams::reference();
        let w = ghz(4.5);
        let drv = DriveParams::new(mhz(20.0), w, 0.0).unwrap();
        let t = std::f64::consts::FRAC_PI_2 / w;
        assert!(drive_hamiltonian(&dev, &drv, t).max_abs() < 1e-10 * drv.amplitude());
    }

    #[test]
    fn drive_symmetric_for_unit_lambda() {
        let mut dev = DeviceParams::reference().with_levels(2).unwrap();
        dev.lambda = 1.0;
        let drv = DriveParams::new(mhz(10.0), ghz(4.5), 0.0).unwrap();
        let h = drive_hamiltonian(&dev, &drv, 0.0);
        let space = dev.space;
        let m01 = h.matrix()[(space.index(0, 0), space.index(0, 1))];
        let m10 = h.matrix()[(space.index(0, 0), space.index(1, 0))];
        assert!((m01 - m10).norm() < 1e-12 * drv.amplitude());
    }

    #[test]
    fn rwa_resonant_frame_zero_splitting() {
        let dev = DeviceParams::reference_with_j(0.0).with_levels(2).unwrap();
        let drv = DriveParams::new(0.0, dev.q1.omega01, 0.0).unwrap();
        let h = rwa_hamiltonian(&dev, &drv);
        let space = dev.space;
        let e00 = h.matrix()[(space.index(0, 0), space.index(0, 0))].re;
        let e10 = h.matrix()[(space.index(1, 0), space.index(1, 0))].re;
        assert!((e10 - e00).abs() < 1e-9 * dev.q1.omega01);
    }

    #[test]
    fn rwa_phase_shift_flips_drive_quadrature() {
        let dev = DeviceParams::reference();
        let w = ghz(4.5);
        let amp = mhz(15.0);
        let d0 = DriveParams::new(amp, w, 0.4).unwrap();
        let d1 = DriveParams::new(amp, w, 0.4 + std::f64::consts::PI).unwrap();
        let h0 = rwa_hamiltonian(&dev, &d0);
        let h1 = rwa_hamiltonian(&dev, &d1);
        // drive quadratures are opposite: h0 + h1 = 2 × (frame part)
        let frame = rwa_hamiltonian(&dev, &DriveParams::new(0.0, w, 0.0).unwrap());
        let sum = h0.add(&h1).sub(&frame.scaled_re(2.0));
        assert!(sum.max_abs() < 1e-9 * amp);
    }

    #[test]
    fn spectrum_uncoupled_line_at_omega1() {
        let dev = DeviceParams::reference_with_j(0.0);
        let table = spectrum(&dev).unwrap();
        let row = table.find((0, 0), (1, 0)).unwrap();
        assert!((row.frequency - dev.q1.omega01).abs() < 1e-6 * dev.q1.omega01);
        assert_eq!(row.photons, 1);
    }

    #[test]
    fn two_photon_line_between_one_photon_lines() {
        let dev = DeviceParams::reference();
        let table = spectrum(&dev).unwrap();
        let f01 = table.find((0, 0), (0, 1)).unwrap().frequency;
        let f10 = table.find((0, 0), (1, 0)).unwrap().frequency;
        let f11 = table.find((0, 0), (1, 1)).unwrap().frequency;
        let (lo, hi) = if f01 < f10 { (f01, f10) } else { (f10, f01) };
        assert!(f11 > lo && f11 < hi);
    }

    #[test]
    fn level_repulsion_bound_at_zero_detuning() {
        let mut dev = DeviceParams::reference();
        dev.q2.omega01 = dev.q1.omega01; // Δ → 0
        dev.j = ghz(0.002);
        let eig = system_hamiltonian(&dev).eigh().unwrap();
        let singles: Vec<f64> = eig
            .values
            .iter()
            .copied()
            .filter(|e| (e - dev.q1.omega01).abs() < dev.q1.omega01 * 0.1)
            .collect();
        assert_eq!(singles.len(), 2);
        assert!((singles[1] - singles[0]).abs() >= 2.0 * dev.j - 1.0);
    }

    #[test]
    fn static_zz_zero_without_coupling() {
        let dev = DeviceParams::reference_with_j(0.0);
        assert!(static_zz(&dev).unwrap().abs() < khz(1e-9));
    }

    #[test]
    fn static_zz_vanishes_at_two_levels() {
        // exchange-only coupling gives no ZZ for two-level truncation
        let dev = DeviceParams::reference().with_levels(2).unwrap();
        assert!(static_zz(&dev).unwrap().abs() < crate::units::hz(1e-3));
    }

    #[test]
    fn fitted_j_reproduces_target_zz() {
        let dev = DeviceParams::reference_with_j(0.0);
        let target = khz(reference::TARGET_ZZ_KHZ);
        let j = fit_j(&dev, target).unwrap();
        let zz = static_zz(&dev.with_j(j)).unwrap();
        assert!(
            (zz - target).abs() < crate::units::hz(10.0),
            "zz = {} kHz",
            to_khz(zz)
        );
        let frozen = ghz(reference::J_FITTED_GHZ);
        assert!(
            (j - frozen).abs() < 2e-4 * frozen,
            "fit {j} vs frozen {frozen}"
        );
    }

    #[test]
    fn fit_j_zero_target() {
        let dev = DeviceParams::reference_with_j(0.0);
        assert_eq!(fit_j(&dev, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn fit_j_monotone_in_target() {
        let dev = DeviceParams::reference_with_j(0.0);
        let j1 = fit_j(&dev, khz(20.0)).unwrap();
        let j2 = fit_j(&dev, khz(40.0)).unwrap();
        assert!(j2 > j1);
        // perturbative ZZ ∝ J²: doubling the target scales J by ≈ √2
        let ratio = j2 / j1;
        assert!((ratio - 2f64.sqrt()).abs() < 0.02, "ratio {ratio}");
    }

    #[test]
    fn static_zz_is_quadratic_in_j() {
        let dev = DeviceParams::reference();
        let zz_full = static_zz(&dev).unwrap();
        let zz_half = static_zz(&dev.with_j(dev.j / 2.0)).unwrap();
        let ratio = zz_full / zz_half;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn eigenvalues_continuous_in_j() {
        let dev = DeviceParams::reference();
        let dj = dev.j * 1e-3;
        let d0 = dressed_spectrum(&dev).unwrap();
        let d1 = dressed_spectrum(&dev.with_j(dev.j + dj)).unwrap();
        for (a, b) in d0.energy_by_label.iter().zip(d1.energy_by_label.iter()) {
            assert!((a - b).abs() < 10.0 * dj, "jump {} vs δJ {dj}", (a - b).abs());
        }
    }

    #[test]
    fn degenerate_overlap_labels_are_flagged() {
        // ω₁ = ω₂ at d = 2: the singly-excited dressed states are the ±
        // superpositions with equal overlap on both bare states
        let mut dev = DeviceParams::reference().with_levels(2).unwrap();
        dev.q2.omega01 = dev.q1.omega01;
        dev.j = ghz(0.003);
        assert!(matches!(
            dressed_spectrum(&dev),
            Err(Error::AmbiguousLabel { .. })
        ));
    }

    #[test]
    fn spectrum_labels_are_a_permutation() {
        let dev = DeviceParams::reference();
        let dressed = dressed_spectrum(&dev).unwrap();
        assert!(dressed.energy_by_label.iter().all(|e| e.is_finite()));
    }

    #[test]
    fn config_parsing() {
        let good = "\
# reference device
omega1_ghz = 4.3796
omega2_ghz = 4.61368
delta1_ghz = -0.2393
delta2_ghz = -0.24278
lambda = 1.0
target_zz_khz = 90.0
levels = 3
";
        let dev = parse_device_config(good).unwrap();
        // fit_j tolerance is 10 Hz on the ZZ
        assert!((to_khz(static_zz(&dev).unwrap()) - 90.0).abs() < 0.011);

        let both = "omega1_ghz = 4.4\nomega2_ghz = 4.6\ndelta1_ghz = -0.2\ndelta2_ghz = -0.2\nj_ghz = 0.001\ntarget_zz_khz = 90\n";
        assert!(matches!(parse_device_config(both), Err(Error::Config(_))));

        let neither = "omega1_ghz = 4.4\nomega2_ghz = 4.6\ndelta1_ghz = -0.2\ndelta2_ghz = -0.2\n";
        assert!(matches!(parse_device_config(neither), Err(Error::Config(_))));

        let unknown = "omega1_ghz = 4.4\nbogus_key = 1\n";
        assert!(matches!(parse_device_config(unknown), Err(Error::Config(_))));
    }
}
