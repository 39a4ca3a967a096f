//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! with the measured values (run with `--nocapture` to see them on success).

use bswap_core::calibration::{
    self, bell_state_at_optimal_stop, reference_calibration, GateKind,
};
use bswap_core::dynamics::{self, NoiseParams};
use bswap_core::effective::{self, u_bell};
use bswap_core::harness::default_sweep_amplitudes;
use bswap_core::hilbert::C64;
use bswap_core::model::{self, reference, DeviceParams};
use bswap_core::tomography::{
    self, gate_fidelity, process_tomography, ptm_of_unitary, ReadoutModel,
};
use bswap_core::units::{self, khz, mhz, to_mhz};

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion}: {detail}");
}

#[test]
fn criterion_1_zz_calibration() {
    let dev3 = DeviceParams::reference_with_j(0.0);
    let target = khz(reference::TARGET_ZZ_KHZ);
    let j3 = model::fit_j(&dev3, target).unwrap();
    let zz = model::static_zz(&dev3.with_j(j3)).unwrap();
    let zz_err_hz = (zz - target).abs() / units::TWO_PI;

    let dev4 = dev3.with_levels(4).unwrap();
    let j4 = model::fit_j(&dev4, target).unwrap();
    let j_drift = (j4 - j3).abs() / j3;

    let pass = zz_err_hz < 10.0 && j_drift < 1e-3;
    report(
        "1 (ZZ calibration)",
        pass,
        &format!(
            "fitted J = {:.6} MHz, |ZZ − 90 kHz| = {:.3} Hz, d=3→4 drift = {:.2e}",
            to_mhz(j3),
            zz_err_hz,
            j_drift
        ),
    );
}

#[test]
fn criterion_2_enhancement_factor() {
    let factor = effective::enhancement_factor(&DeviceParams::reference()).unwrap();
    let pass = (12.0..=16.0).contains(&factor);
    report(
        "2 (enhancement factor)",
        pass,
        &format!("δ₂/2(δ₂−Δ) = {factor:.3}, paper cites ≈ 15"),
    );
}

#[test]
fn criterion_3_quadratic_scaling() {
    let dev = DeviceParams::reference();
    let rows = dynamics::amplitude_sweep(&dev, &default_sweep_amplitudes());
    for row in &rows {
        assert!(
            row.flag.is_none(),
            "sweep row at {} MHz flagged: {:?}",
            to_mhz(row.omega),
            row.flag
        );
    }

    // log-log slope over the lowest decade (0.5 – 5 MHz)
    let decade: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.omega <= mhz(5.0) + 1.0)
        .map(|r| (r.omega.ln(), r.omega_b_sim.unwrap().ln()))
        .collect();
    let n = decade.len() as f64;
    let sx: f64 = decade.iter().map(|p| p.0).sum();
    let sy: f64 = decade.iter().map(|p| p.1).sum();
    let sxx: f64 = decade.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = decade.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);

    // simulated/formula ratio wherever Ω_B ≤ 100 kHz
    let mut worst_ratio_dev: f64 = 0.0;
    for row in &rows {
        let formula = row.omega_b_formula.unwrap();
        if formula <= khz(100.0) {
            let ratio = row.omega_b_sim.unwrap() / formula;
            worst_ratio_dev = worst_ratio_dev.max((ratio - 1.0).abs());
        }
    }

    // sub-quadratic bending at the largest amplitude
    let last = rows.last().unwrap();
    let bend_ratio = last.omega_b_sim.unwrap() / last.omega_b_formula.unwrap();

    let pass = (slope - 2.0).abs() <= 0.05 && worst_ratio_dev <= 0.1 && bend_ratio < 1.0;
    report(
        "3 (quadratic scaling)",
        pass,
        &format!(
            "slope = {slope:.4}, max |sim/formula − 1| below 100 kHz = {worst_ratio_dev:.4}, \
             sim/formula at {} MHz = {bend_ratio:.3}",
            to_mhz(last.omega)
        ),
    );
}

#[test]
fn criterion_4_sqrt_bswap_operating_point() {
    let cal = reference_calibration().unwrap();
    let dev = DeviceParams::reference();

    // Ω solved from the closed form; evolution stopped at the realized
    // half-rotation
    let (fid_stop, t_stop) = bell_state_at_optimal_stop(&dev, cal.omega_formula).unwrap();

    // fine amplitude recalibration at the fixed 800 ns duration
    let fid_cal = cal.bell_fidelity;

    let pass = fid_stop >= 0.98 && fid_cal >= 0.99;
    report(
        "4 (√bSWAP operating point)",
        pass,
        &format!(
            "formula Ω/2π = {:.4} MHz: stopped-evolution Bell fidelity = {:.4} \
             (stop at {:.0} ns), recalibrated 800 ns fidelity = {:.4}",
            to_mhz(cal.omega_formula),
            fid_stop,
            t_stop * 1e9,
            fid_cal
        ),
    );
}

#[test]
fn criterion_5_tomography_round_trip() {
    let model_ro = ReadoutModel::default();

    // ideal bSWAP channel
    let bswap = u_bell(1.0, std::f64::consts::PI, 0.0);
    let ideal = ptm_of_unitary(&bswap);
    let u = bswap.matrix().clone();
    let ud = bswap.dagger().matrix().clone();
    let result = process_tomography(|rho| u.dot(rho).dot(&ud), &model_ro, 0, 0).unwrap();
    let f_ideal = gate_fidelity(&result.raw, &ideal);

    // full-dynamics noiseless √bSWAP
    let cal = reference_calibration().unwrap();
    let channel = cal
        .gate_channel(GateKind::SqrtBswap, &NoiseParams::noiseless(), units::ns(0.1))
        .unwrap();
    let sqrt_ideal = cal.ideal_ptm(GateKind::SqrtBswap);
    let sqrt_result =
        process_tomography(|rho| channel.apply(rho), &model_ro, 0, 0).unwrap();
    let f_sqrt = gate_fidelity(&sqrt_result.raw, &sqrt_ideal);

    let pass = (f_ideal - 1.0).abs() < 1e-6 && f_sqrt >= 0.98;
    report(
        "5 (tomography round trip)",
        pass,
        &format!("ideal bSWAP F_g − 1 = {:.2e}, full-dynamics √bSWAP F_g = {f_sqrt:.4}", f_ideal - 1.0),
    );
}

#[test]
fn criterion_6_decoherence_limited_fidelity() {
    // pure dephasing with Tφ = 4 μs per transmon makes the effective T₂*
    // during the gate exactly 4 μs
    let cal = reference_calibration().unwrap();
    let noise = NoiseParams::pure_dephasing(units::us(4.0), units::us(4.0));
    let channel = cal
        .gate_channel(GateKind::SqrtBswap, &noise, units::ns(0.1))
        .unwrap();
    let ideal = cal.ideal_ptm(GateKind::SqrtBswap);
    let result =
        process_tomography(|rho| channel.apply(rho), &ReadoutModel::default(), 0, 0).unwrap();
    let f_raw = gate_fidelity(&result.raw, &ideal);
    let f_mle = gate_fidelity(&result.mle, &ideal);

    let pass = (0.82..=0.92).contains(&f_raw);
    report(
        "6 (decoherence-limited fidelity)",
        pass,
        &format!(
            "800 ns √bSWAP with T₂* = 4 μs: F_g = {f_raw:.4} (raw), {f_mle:.4} (MLE); paper: 90%/86%"
        ),
    );
}

#[test]
fn criterion_7_sw_cross_validation() {
    let dev = DeviceParams::reference();
    let omega = mhz(27.0);

    let check = |devj: &DeviceParams| -> (f64, f64) {
        let delta = effective::calibrate_delta(devj, omega, devj.lambda * omega).unwrap();
        let numeric =
            effective::numeric_bswap_coupling(devj, omega, devj.lambda * omega, delta).unwrap();
        let closed = effective::omega_b_full(devj, omega, devj.lambda * omega, delta)
            .unwrap()
            .abs();
        (numeric, closed)
    };
    let (num_full, closed_full) = check(&dev);
    let (num_half, closed_half) = check(&dev.with_j(dev.j / 2.0));
    let rel = (num_full / closed_full - 1.0).abs();
    let shrink = (num_full - closed_full).abs() / (num_half - closed_half).abs();

    let pass = rel < 0.10 && shrink >= 6.0;
    report(
        "7 (SW cross-validation)",
        pass,
        &format!(
            "numeric/closed = {:.4} at the operating amplitude; residual shrinks {shrink:.1}× when J halves",
            num_full / closed_full
        ),
    );
}

#[test]
fn criterion_8_limit_identities() {
    let dev = DeviceParams::reference();
    let mut failures: Vec<String> = Vec::new();

    // harmonic limit: Ω_B = 0 exactly
    let mut harmonic = dev;
    harmonic.q1.delta = 0.0;
    harmonic.q2.delta = 0.0;
    if effective::omega_b_main(&harmonic, mhz(25.0)).unwrap() != 0.0 {
        failures.push("harmonic limit".into());
    }

    // pure-qubit limit: ratio → 1 with growing δ/Δ
    {
        let dd = dev.detuning();
        let mut pure = dev;
        pure.j = 2e-3 * dd.abs();
        let omega = mhz(10.0);
        let mut prev_dev = f64::INFINITY;
        for magnitude in [1e2, 1e3, 1e4] {
            pure.q1.delta = dd.abs() * magnitude;
            pure.q2.delta = dd.abs() * magnitude;
            let got = effective::omega_b_main(&pure, omega).unwrap();
            let limit = -2.0 * pure.j * omega * omega * (1.0 + pure.lambda) / (dd * dd);
            let deviation = (got / limit - 1.0).abs();
            if deviation >= 1e-2 / magnitude || deviation > prev_dev {
                failures.push(format!("pure-qubit limit at δ/Δ = {magnitude}"));
            }
            prev_dev = deviation;
        }
    }

    // omega_b_full(δ=0) ≡ omega_b_main
    for omega_mhz in [4.0, 11.0, 23.0] {
        let omega = mhz(omega_mhz);
        let full = effective::omega_b_full(&dev, omega, dev.lambda * omega, 0.0).unwrap();
        let main = effective::omega_b_main(&dev, omega).unwrap();
        if (full - main).abs() > 1e-12 * main.abs() {
            failures.push(format!("full ≡ main identity at {omega_mhz} MHz"));
        }
    }

    // u_bell periodicity and commutation with the frame corrections
    {
        let ob = khz(312.5);
        let full_period = u_bell(ob, 4.0 * std::f64::consts::PI / ob, 0.7);
        let parity = u_bell(ob, 2.0 * std::f64::consts::PI / ob, 0.7);
        let idm = effective::TwoQubitUnitary::identity();
        if full_period.max_abs_diff(&idm) > 1e-12 {
            failures.push("u_bell 4π period".into());
        }
        if (parity.matrix()[(0, 0)] + C64::new(1.0, 0.0)).norm() > 1e-12
            || (parity.matrix()[(1, 1)] - C64::new(1.0, 0.0)).norm() > 1e-12
        {
            failures.push("u_bell 2π parity".into());
        }
        let corr = effective::u_frame_corrections(mhz(1.6), mhz(-118.9), 8e-7);
        let ub = u_bell(ob, 0.9e-6, 1.3);
        if ub.matmul(&corr).max_abs_diff(&corr.matmul(&ub)) > 1e-12 {
            failures.push("frame-correction commutation".into());
        }
    }

    // PTM orthogonality and homomorphism
    {
        let u1 = u_bell(1.0, 1.31, 0.4);
        let u2 = u_bell(1.0, 2.63, 2.2);
        let r1 = ptm_of_unitary(&u1);
        if r1.orthogonality_defect() > 1e-9 {
            failures.push("PTM orthogonality".into());
        }
        let lhs = ptm_of_unitary(&u1.matmul(&u2));
        if lhs.max_abs_diff(&r1.compose(&ptm_of_unitary(&u2))) > 1e-9 {
            failures.push("PTM homomorphism".into());
        }
    }

    // linear-inversion round trip and MLE physicality
    {
        let model_ro = ReadoutModel::default();
        let f = std::f64::consts::FRAC_1_SQRT_2;
        let bell = tomography::DensityMatrix4::from_pure(&[
            C64::new(f, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, f),
        ])
        .unwrap();
        let records = tomography::simulate_readout(&bell, &model_ro, 0, 0).unwrap();
        let est = tomography::state_linear_inversion(&records, &model_ro).unwrap();
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((est.matrix[(i, j)] - bell.matrix()[(i, j)]).norm());
            }
        }
        if worst > 1e-9 {
            failures.push("linear-inversion round trip".into());
        }
        let noisy_model = ReadoutModel {
            noise: 3.0,
            ..ReadoutModel::default()
        };
        let noisy_records = tomography::simulate_readout(&bell, &noisy_model, 25, 17).unwrap();
        match tomography::state_mle(&noisy_records, &noisy_model) {
            Ok(mle) => {
                if mle.min_eigenvalue() < -1e-10 {
                    failures.push("MLE positivity".into());
                }
            }
            Err(e) => failures.push(format!("MLE convergence: {e}")),
        }
    }

    // local invariants: bSWAP ≡ iSWAP, √bSWAP ≡ √iSWAP
    {
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let iswap = effective::TwoQubitUnitary::new(ndarray::arr2(&[
            [one, z, z, z],
            [z, z, i, z],
            [z, i, z, z],
            [z, z, z, one],
        ]))
        .unwrap();
        let f = std::f64::consts::FRAC_1_SQRT_2;
        let sqrt_iswap = effective::TwoQubitUnitary::new(ndarray::arr2(&[
            [one, z, z, z],
            [z, C64::new(f, 0.0), C64::new(0.0, f), z],
            [z, C64::new(0.0, f), C64::new(f, 0.0), z],
            [z, z, z, one],
        ]))
        .unwrap();
        let ob = khz(312.5);
        let pairs = [
            (
                effective::local_invariants(&u_bell(ob, std::f64::consts::PI / ob, 0.0)),
                effective::local_invariants(&iswap),
                "bSWAP ≡ iSWAP",
            ),
            (
                effective::local_invariants(&u_bell(ob, std::f64::consts::FRAC_PI_2 / ob, 0.0)),
                effective::local_invariants(&sqrt_iswap),
                "√bSWAP ≡ √iSWAP",
            ),
        ];
        for (a, b, name) in pairs {
            if a.iter().zip(b.iter()).any(|(x, y)| (x - y).abs() > 1e-9) {
                failures.push(format!("local invariants {name}"));
            }
        }
    }

    let _ = calibration::GATE_LEVELS; // suite exercises the calibrated path elsewhere
    let pass = failures.is_empty();
    report(
        "8 (limit identities)",
        pass,
        &if pass {
            "harmonic zero, pure-qubit convergence, full≡main, u_bell algebra, PTM algebra, \
             estimator round trips, local invariants"
                .to_string()
        } else {
            format!("failed: {}", failures.join("; "))
        },
    );
}
