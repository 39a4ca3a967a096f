//! Second-order perturbation theory for the two-photon `{|00⟩, |11⟩}`
//! interaction: closed-form Schrieffer-Wolff coefficients, drive-detuning
//! calibration, the ideal effective unitaries, limit formulas, and a generic
//! numeric Schrieffer-Wolff engine used to validate the closed forms.
//!
//! The drive frequency convention is ω_d = (ω₁ + ω₂)/2 − δ.

use ndarray::Array2;


use crate::error::{Error, Result};
use crate::hilbert::{C64, Mode, Operator};
use crate::model::{system_hamiltonian, DeviceParams};
use crate::units;

/// Frozen closed-form operating constants of the reference device: the
/// amplitude solving |Ω_B| = 2π·312.5 kHz (a π/2 rotation in 800 ns) at the
/// self-consistently calibrated δ*. Recomputed and asserted by tests.
pub mod operating_point {
    /// Drive amplitude Ω/2π, MHz.
    pub const OMEGA_MHZ: f64 = 21.960485;
    /// Calibrated drive offset δ*/2π, kHz.
    pub const DELTA_STAR_KHZ: f64 = -1309.376;
    /// Target Bell rate |Ω_B|/2π, kHz.
    pub const OMEGA_B_KHZ: f64 = 312.5;
}

/// Second-order effective-Hamiltonian coefficients on the two-qubit
/// subspace, all angular (rad/s).
#[derive(Clone, Copy, Debug)]
pub struct EffectiveCoefficients {
    /// Bell-coupling rate Ω_B (signed).
    pub omega_b: f64,
    /// Residual (XX+YY)/2 exchange rate Ω_S.
    pub omega_s: f64,
    /// ZZ Stark coefficient α_ZZ.
    pub alpha_zz: f64,
    /// (α_IZ + α_ZI)/2; zero at the calibrated detuning.
    pub alpha_sum: f64,
    /// (α_IZ − α_ZI)/2; contains the Δ/2 frame term.
    pub alpha_diff: f64,
    /// Drive offset δ the coefficients were evaluated at.
    pub delta_cal: f64,
}

impl EffectiveCoefficients {
    /// Evaluate every coefficient at a given drive working point.
    pub fn evaluate(dev: &DeviceParams, omega1: f64, omega2: f64, delta: f64) -> Result<Self> {
        let (alpha_zz, alpha_sum, alpha_diff) = alpha_coeffs(dev, omega1, omega2, delta)?;
        Ok(EffectiveCoefficients {
            omega_b: omega_b_full(dev, omega1, omega2, delta)?,
            omega_s: omega_s(dev, omega1, omega2, delta)?,
            alpha_zz,
            alpha_sum,
            alpha_diff,
            delta_cal: delta,
        })
    }

    /// Calibrate δ so α_IZ + α_ZI = 0, then evaluate.
    pub fn at_calibrated(dev: &DeviceParams, omega1: f64, omega2: f64) -> Result<Self> {
        let delta = calibrate_delta(dev, omega1, omega2)?;
        Self::evaluate(dev, omega1, omega2, delta)
    }
}

/// Pole guard: a denominator factor smaller than 1e-6 of the geometric mean
/// of the nonzero frequency scales |Δ|, |δ₁|, |δ₂| is an error.
fn pole_threshold(dev: &DeviceParams) -> f64 {
    let scales: Vec<f64> = [dev.detuning().abs(), dev.q1.delta.abs(), dev.q2.delta.abs()]
        .into_iter()
        .filter(|s| *s > 0.0)
        .collect();
    if scales.is_empty() {
        return 0.0;
    }
    let log_mean = scales.iter().map(|s| s.ln()).sum::<f64>() / scales.len() as f64;
    1e-6 * log_mean.exp()
}

fn check_poles(dev: &DeviceParams, factors: &[(&'static str, f64)]) -> Result<()> {
    let threshold = pole_threshold(dev);
    for (name, value) in factors {
        if value.abs() <= threshold {
            return Err(Error::PoleProximity {
                name,
                value: *value,
                threshold,
            });
        }
    }
    Ok(())
}

/// Main-text Bell rate:
/// Ω_B = −2JΩ²(−Jλ(δ₁+δ₂) + λ²δ₂(δ₁+Δ) + δ₁(δ₂−Δ)) / ((δ₂−Δ)(δ₁+Δ)Δ²).
pub fn omega_b_main(dev: &DeviceParams, omega: f64) -> Result<f64> {
    let (d1, d2) = (dev.q1.delta, dev.q2.delta);
    let dd = dev.detuning();
    let lam = dev.lambda;
    check_poles(dev, &[("δ₂−Δ", d2 - dd), ("δ₁+Δ", d1 + dd), ("Δ", dd)])?;
    let j = dev.j;
    let num = -2.0
        * j
        * omega
        * omega
        * (-j * lam * (d1 + d2) + lam * lam * d2 * (d1 + dd) + d1 * (d2 - dd));
    Ok(num / ((d2 - dd) * (d1 + dd) * dd * dd))
}

/// Full Bell rate with independent drive amplitudes and the δ-dependent
/// denominator:
/// Ω_B = −2J(−JΩ₁Ω₂(δ₁+δ₂) + Ω₂²δ₂(δ₁+Δ) + Ω₁²δ₁(δ₂−Δ)) / ((δ₂−Δ)(δ₁+Δ)(−4δ²+Δ²)).
/// At δ = 0, Ω₂ = λΩ₁ it reduces to [`omega_b_main`].
pub fn omega_b_full(dev: &DeviceParams, omega1: f64, omega2: f64, delta: f64) -> Result<f64> {
    let (d1, d2) = (dev.q1.delta, dev.q2.delta);
    let dd = dev.detuning();
    check_poles(
        dev,
        &[
            ("δ₂−Δ", d2 - dd),
            ("δ₁+Δ", d1 + dd),
            ("Δ−2δ", dd - 2.0 * delta),
            ("Δ+2δ", dd + 2.0 * delta),
        ],
    )?;
    let j = dev.j;
    let num = -2.0
        * j
        * (-j * omega1 * omega2 * (d1 + d2)
            + omega2 * omega2 * d2 * (d1 + dd)
            + omega1 * omega1 * d1 * (d2 - dd));
    Ok(num / ((d2 - dd) * (d1 + dd) * (-4.0 * delta * delta + dd * dd)))
}

/// Residual (XX+YY)/2 exchange rate:
/// Ω_S = −2Jδ(JΩ₁Ω₂(δ₁−δ₂) + Ω₂²δ₂(δ₁+Δ) + Ω₁²δ₁(−δ₂+Δ))
///       / (Δ(δ₂−Δ)(δ₁+Δ)(−4δ²+Δ²)).
pub fn omega_s(dev: &DeviceParams, omega1: f64, omega2: f64, delta: f64) -> Result<f64> {
    let (d1, d2) = (dev.q1.delta, dev.q2.delta);
    let dd = dev.detuning();
    check_poles(
        dev,
        &[
            ("Δ", dd),
            ("δ₂−Δ", d2 - dd),
            ("δ₁+Δ", d1 + dd),
            ("Δ−2δ", dd - 2.0 * delta),
            ("Δ+2δ", dd + 2.0 * delta),
        ],
    )?;
    let j = dev.j;
    let num = -2.0
        * j
        * delta
        * (j * omega1 * omega2 * (d1 - d2)
            + omega2 * omega2 * d2 * (d1 + dd)
            + omega1 * omega1 * d1 * (-d2 + dd));
    Ok(num / (dd * (d2 - dd) * (d1 + dd) * (-4.0 * delta * delta + dd * dd)))
}

/// First-order-in-J Stark coefficients (α_ZZ, (α_IZ+α_ZI)/2, (α_IZ−α_ZI)/2).
pub fn alpha_coeffs(
    dev: &DeviceParams,
    omega1: f64,
    omega2: f64,
    delta: f64,
) -> Result<(f64, f64, f64)> {
    let (d1, d2) = (dev.q1.delta, dev.q2.delta);
    let dd = dev.detuning();
    let j = dev.j;
    let (o1sq, o2sq, o12) = (omega1 * omega1, omega2 * omega2, omega1 * omega2);

    let f_2dp2_m = 2.0 * (delta + d2) - dd; // 2(δ+δ₂)−Δ
    let f_2dp1_p = 2.0 * (delta + d1) + dd; // 2(δ+δ₁)+Δ
    let f_2d_p = 2.0 * delta + dd; // 2δ+Δ
    let f_2d_m = 2.0 * delta - dd; // 2δ−Δ
    let f_sq = -4.0 * delta * delta + dd * dd; // Δ²−4δ²
    check_poles(
        dev,
        &[
            ("δ₂−Δ", d2 - dd),
            ("2(δ+δ₂)−Δ", f_2dp2_m),
            ("2(δ+δ₁)+Δ", f_2dp1_p),
            ("2δ+Δ", f_2d_p),
            ("2δ−Δ", f_2d_m),
        ],
    )?;

    let alpha_zz = -o2sq / f_2dp2_m
        - 2.0
            * (-8.0 * delta * delta * (delta + d1) + 16.0 * d1 * d2 * d2
                - 4.0 * (delta * delta + 4.0 * d1 * d2) * dd
                + 2.0 * (delta + d1) * dd * dd
                + dd * dd * dd)
            * o12
            * j
            / ((d2 - dd) * f_2dp2_m * f_2dp1_p * f_sq);

    let alpha_sum = -delta - d1 * o1sq / (f_2d_p * f_2dp1_p)
        - d2 * o2sq / (4.0 * delta * (delta + d2) - 2.0 * (2.0 * delta + d2) * dd + dd * dd)
        + 4.0 * (2.0 * delta * (d1 + d2) + (-d1 + d2) * dd) * o12 * j
            / (f_2dp2_m * f_2dp1_p * (4.0 * delta * delta - dd * dd));

    let alpha_diff = 0.5 * (dd + 2.0 * d1 * o1sq / (f_2d_p * f_2dp1_p) - o2sq / f_2d_m)
        + (4.0 * delta * delta + 4.0 * delta * (d1 - d2 + dd) + dd * (-2.0 * (d1 + d2) + dd))
            * o12
            * j
            / ((d2 - dd) * f_2dp1_p * f_sq);

    Ok((alpha_zz, alpha_sum, alpha_diff))
}

/// Calibrate the drive offset δ (ω_d = (ω₁+ω₂)/2 − δ) so the Stark-shifted
/// |00⟩ and |11⟩ are degenerate to this order: α_IZ + α_ZI = 0. Bracketed
/// bisection refined by secant steps over |δ| < |Δ|/4, absolute tolerance
/// 2π·1 Hz on α_sum.
pub fn calibrate_delta(dev: &DeviceParams, omega1: f64, omega2: f64) -> Result<f64> {
    let half_width = dev.detuning().abs() / 4.0;
    let f = |delta: f64| -> Result<f64> { Ok(alpha_coeffs(dev, omega1, omega2, delta)?.1) };
    let tol = units::hz(1.0);

    let mut lo = -half_width;
    let mut hi = half_width;
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        // scan interior points for a sign change before giving up
        let mut found = None;
        let n = 64;
        let mut prev = (lo, flo);
        for k in 1..=n {
            let x = lo + (hi - lo) * k as f64 / n as f64;
            let fx = f(x)?;
            if prev.1.signum() != fx.signum() {
                found = Some((prev.0, prev.1, x));
                break;
            }
            prev = (x, fx);
        }
        match found {
            Some((a, fa, b)) => {
                lo = a;
                flo = fa;
                hi = b;
            }
            None => {
                return Err(Error::Calibration {
                    what: "calibrate_delta",
                    detail: format!(
                        "no root of α_IZ+α_ZI in |δ| < {:.3} MHz (endpoint values {:.3e}, {:.3e} rad/s)",
                        units::to_mhz(half_width),
                        flo,
                        fhi
                    ),
                });
            }
        }
    }

    let mut fhi = f(hi)?;
    for _ in 0..200 {
        let mut mid = if fhi != flo {
            hi - fhi * (hi - lo) / (fhi - flo)
        } else {
            0.5 * (lo + hi)
        };
        if !(mid > lo.min(hi) && mid < lo.max(hi)) {
            mid = 0.5 * (lo + hi);
        }
        let fmid = f(mid)?;
        if fmid.abs() < tol {
            return Ok(mid);
        }
        if flo.signum() != fmid.signum() {
            hi = mid;
            fhi = fmid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
    Err(Error::Calibration {
        what: "calibrate_delta",
        detail: "root search did not converge within 200 iterations".into(),
    })
}

/// Enhancement of Ω_B relative to the pure qubit limit: δ₂ / (2(δ₂−Δ)).
pub fn enhancement_factor(dev: &DeviceParams) -> Result<f64> {
    let d2 = dev.q2.delta;
    let dd = dev.detuning();
    check_poles(dev, &[("δ₂−Δ", d2 - dd)])?;
    Ok(d2 / (2.0 * (d2 - dd)))
}

/// 4×4 unitary on the computational subspace `{|00⟩,|01⟩,|10⟩,|11⟩}`.
#[derive(Clone, Debug)]
pub struct TwoQubitUnitary {
    mat: Array2<C64>,
}

impl TwoQubitUnitary {
    pub fn new(mat: Array2<C64>) -> Result<Self> {
        assert_eq!(mat.dim(), (4, 4));
        let mut defect = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..4 {
                    s += mat[(k, i)].conj() * mat[(k, j)];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((s - expect).norm());
            }
        }
        if defect > 1e-10 {
            return Err(Error::Unphysical(format!(
                "matrix is not unitary (defect {defect:.3e})"
            )));
        }
        Ok(Self { mat })
    }

    pub fn identity() -> Self {
        Self {
            mat: Array2::eye(4),
        }
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn matmul(&self, other: &TwoQubitUnitary) -> TwoQubitUnitary {
        TwoQubitUnitary {
            mat: self.mat.dot(&other.mat),
        }
    }

    pub fn dagger(&self) -> TwoQubitUnitary {
        let mut mat = Array2::zeros((4, 4));
        for i in 0..4 {
            for j in 0..4 {
                mat[(i, j)] = self.mat[(j, i)].conj();
            }
        }
        TwoQubitUnitary { mat }
    }

    pub fn max_abs_diff(&self, other: &TwoQubitUnitary) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((self.mat[(i, j)] - other.mat[(i, j)]).norm());
            }
        }
        worst
    }
}

/// The Bell-subspace rotation:
/// identity on {|01⟩,|10⟩}; on {|00⟩,|11⟩} a rotation by Ω_B·t with corner
/// phases −i e^{∓2iφ} sin(Ω_B t/2).
pub fn u_bell(omega_b: f64, t: f64, phase: f64) -> TwoQubitUnitary {
    let half = 0.5 * omega_b * t;
    let (c, s) = (half.cos(), half.sin());
    let mut mat = Array2::<C64>::eye(4);
    mat[(0, 0)] = C64::new(c, 0.0);
    mat[(3, 3)] = C64::new(c, 0.0);
    let m_i = C64::new(0.0, -1.0);
    mat[(0, 3)] = m_i * C64::new(0.0, -2.0 * phase).exp() * s;
    mat[(3, 0)] = m_i * C64::new(0.0, 2.0 * phase).exp() * s;
    TwoQubitUnitary { mat }
}

/// Frame-correction product U_ZZ·U_{IZ−ZI}:
/// U_ZZ = exp(−i α_ZZ ZZ t/4) and U_{IZ−ZI} = exp(−i (α_IZ−α_ZI) (IZ−ZI) t/4)
/// with the argument `alpha_diff` = (α_IZ−α_ZI)/2. Both factors are diagonal
/// and commute with [`u_bell`].
pub fn u_frame_corrections(alpha_zz: f64, alpha_diff: f64, t: f64) -> TwoQubitUnitary {
    // ZZ diag = (+1,−1,−1,+1); (IZ−ZI) diag = (0,−2,+2,0)
    let a = alpha_zz * t / 4.0;
    let b = alpha_diff * t / 2.0; // (α_IZ−α_ZI)·t/4 per IZ−ZI eigenvalue unit
    let phases = [-a, a + b, a - b, -a];
    let mut mat = Array2::<C64>::zeros((4, 4));
    for (i, p) in phases.iter().enumerate() {
        mat[(i, i)] = C64::new(0.0, *p).exp();
    }
    TwoQubitUnitary { mat }
}

/// Perturbation order of the Schrieffer-Wolff expansion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SwOrder {
    First,
    Second,
}

/// Output of [`sw_diagonalize`].
#[derive(Clone, Debug)]
pub struct SwDiagonalization {
    /// Order-corrected eigenvalues, in the input basis ordering.
    pub eigenvalues: Vec<f64>,
    /// Hermitian generator S of the frame change A = exp(−iS).
    pub generator: Array2<C64>,
}

fn commutator_m(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) - b.dot(a)
}

/// Degeneracy guard for perturbative denominators.
fn check_gap(h0: &[f64], v: &Array2<C64>, p: usize, q: usize) -> Result<()> {
    let coupling = v[(p, q)].norm();
    if coupling == 0.0 {
        return Ok(());
    }
    let scale = h0.iter().fold(0.0f64, |m, e| m.max(e.abs())).max(1.0);
    let gap = (h0[p] - h0[q]).abs();
    if gap < 1e-9 * scale {
        return Err(Error::Degeneracy {
            p,
            q,
            gap,
            coupling,
        });
    }
    Ok(())
}

/// Diagonalizing Schrieffer-Wolff transformation for H = H₀ + V with H₀
/// diagonal: generator entries ⟨p|S⁽ᵐ⁾|q⟩ = −i⟨p|H_x⁽ᵐ⁾|q⟩/(E_p − E_q),
/// effective eigenvalues from the Baker-Campbell-Hausdorff expansion.
pub fn sw_diagonalize(h0: &[f64], v: &Array2<C64>, order: SwOrder) -> Result<SwDiagonalization> {
    let n = h0.len();
    assert_eq!(v.dim(), (n, n));
    let mut s1 = Array2::<C64>::zeros((n, n));
    for p in 0..n {
        for q in 0..n {
            if p == q {
                continue;
            }
            check_gap(h0, v, p, q)?;
            if v[(p, q)].norm() > 0.0 {
                s1[(p, q)] = C64::new(0.0, -1.0) * v[(p, q)] / (h0[p] - h0[q]);
            }
        }
    }
    let mut eigenvalues: Vec<f64> = (0..n).map(|p| h0[p] + v[(p, p)].re).collect();
    let mut generator = s1.clone();

    if order == SwOrder::Second {
        // H_x^(2) = −[S1,[S1,H0]]/2 + i[S1,V]
        let h0m = Array2::from_diag(&ndarray::Array1::from(
            h0.iter().map(|e| C64::new(*e, 0.0)).collect::<Vec<_>>(),
        ));
        let s1_h0 = commutator_m(&s1, &h0m);
        let hx2 = commutator_m(&s1, &s1_h0).mapv(|z| z * C64::new(-0.5, 0.0))
            + commutator_m(&s1, v).mapv(|z| z * C64::new(0.0, 1.0));
        for (p, e) in eigenvalues.iter_mut().enumerate() {
            *e += hx2[(p, p)].re;
        }
        let mut s2 = Array2::<C64>::zeros((n, n));
        for p in 0..n {
            for q in 0..n {
                if p == q || hx2[(p, q)].norm() == 0.0 {
                    continue;
                }
                check_gap(h0, &hx2, p, q)?;
                s2[(p, q)] = C64::new(0.0, -1.0) * hx2[(p, q)] / (h0[p] - h0[q]);
            }
        }
        generator = generator + s2;
    }

    Ok(SwDiagonalization {
        eigenvalues,
        generator,
    })
}

/// Block-eliminating Schrieffer-Wolff transformation: removes the coupling
/// between the `low` manifold and its complement to the requested order,
/// taking S_ll = S_hh = 0, and returns the effective Hamiltonian on the low
/// manifold (indexed in the order given by `low`).
pub fn sw_block_eliminate(
    h0: &[f64],
    v: &Array2<C64>,
    low: &[usize],
    order: SwOrder,
) -> Result<Array2<C64>> {
    let n = h0.len();
    assert_eq!(v.dim(), (n, n));
    let is_low: Vec<bool> = {
        let mut f = vec![false; n];
        for &l in low {
            f[l] = true;
        }
        f
    };

    // first order: the low block of H0 + V
    let nl = low.len();
    let mut heff = Array2::<C64>::zeros((nl, nl));
    for (i, &p) in low.iter().enumerate() {
        for (j, &q) in low.iter().enumerate() {
            heff[(i, j)] = v[(p, q)];
        }
        heff[(i, i)] += h0[p];
    }

    if order == SwOrder::Second {
        // S1 restricted to the lh/hl blocks
        let mut s1 = Array2::<C64>::zeros((n, n));
        for p in 0..n {
            for q in 0..n {
                if is_low[p] == is_low[q] || v[(p, q)].norm() == 0.0 {
                    continue;
                }
                check_gap(h0, v, p, q)?;
                s1[(p, q)] = C64::new(0.0, -1.0) * v[(p, q)] / (h0[p] - h0[q]);
            }
        }
        let h0m = Array2::from_diag(&ndarray::Array1::from(
            h0.iter().map(|e| C64::new(*e, 0.0)).collect::<Vec<_>>(),
        ));
        let hx2 = commutator_m(&s1, &commutator_m(&s1, &h0m)).mapv(|z| z * C64::new(-0.5, 0.0))
            + commutator_m(&s1, v).mapv(|z| z * C64::new(0.0, 1.0));
        for (i, &p) in low.iter().enumerate() {
            for (j, &q) in low.iter().enumerate() {
                heff[(i, j)] += hx2[(p, q)];
            }
        }
    }
    Ok(heff)
}

/// Numerically extracted |00⟩↔|11⟩ coupling (rad/s, magnitude of 2·⟨00|H_eff|11⟩)
/// following the two-stage procedure behind the closed forms: exactly
/// diagonalize the static Hamiltonian, transfer the RWA drive into that
/// dressed frame, then block-eliminate the high-energy manifold at second
/// order around the low manifold {|00⟩, |11⟩, |02⟩} (or {|00⟩, |11⟩, |20⟩}
/// when Δ is nearer −δ₁ than δ₂).
pub fn numeric_bswap_coupling(
    dev: &DeviceParams,
    omega1: f64,
    omega2: f64,
    delta: f64,
) -> Result<f64> {
    let space = dev.space;
    let dd = dev.detuning();
    let leak_label = if (dd - dev.q2.delta).abs() <= (dd + dev.q1.delta).abs() {
        space.index(0, 2)
    } else {
        space.index(2, 0)
    };
    let low = [space.index(0, 0), space.index(1, 1), leak_label];
    let heff = numeric_effective_block(dev, omega1, omega2, delta, &low)?;
    Ok(2.0 * heff[(0, 1)].norm())
}

/// Second-order effective Hamiltonian on an arbitrary low manifold of bare
/// labels, built by the two-stage numeric procedure (exact dressed frame,
/// rotating frame at ω_d, block elimination of everything else). Indices of
/// the result follow the order of `low`.
pub fn numeric_effective_block(
    dev: &DeviceParams,
    omega1: f64,
    omega2: f64,
    delta: f64,
    low: &[usize],
) -> Result<Array2<C64>> {
    let space = dev.space;
    let n = space.dim();
    let eig = system_hamiltonian(dev).eigh()?;

    // label dressed columns by max-overlap bare index
    let mut col_of_label = vec![usize::MAX; n];
    for k in 0..n {
        let mut label = 0;
        let mut best = -1.0;
        for i in 0..n {
            let m = eig.vectors[(i, k)].norm_sqr();
            if m > best {
                best = m;
                label = i;
            }
        }
        if col_of_label[label] != usize::MAX {
            return Err(Error::AmbiguousLabel {
                k1: col_of_label[label],
                k2: k,
                label,
            });
        }
        col_of_label[label] = k;
    }
    let mut u = Array2::<C64>::zeros((n, n));
    let mut energies = vec![0.0; n];
    for label in 0..n {
        let k = col_of_label[label];
        for i in 0..n {
            u[(i, label)] = eig.vectors[(i, k)];
        }
        energies[label] = eig.values[k];
    }

    // rotating frame at ω_d and the transferred drive
    let omega_d = (dev.q1.omega01 + dev.q2.omega01) / 2.0 - delta;
    let phase = C64::new(1.0, 0.0);
    let a = Operator::annihilation(space, Mode::One);
    let b = Operator::annihilation(space, Mode::Two);
    let mut drive = Array2::<C64>::zeros((n, n));
    drive = drive
        + &(a.matrix() * (phase * 0.5 * omega1))
        + &(a.dagger().matrix() * (phase.conj() * 0.5 * omega1))
        + &(b.matrix() * (phase * 0.5 * omega2))
        + &(b.dagger().matrix() * (phase.conj() * 0.5 * omega2));

    let udag = {
        let mut m = Array2::<C64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = u[(j, i)].conj();
            }
        }
        m
    };
    let n_total = Operator::number(space, Mode::One)
        .add(&Operator::number(space, Mode::Two))
        .matrix()
        .clone();
    let frame = udag.dot(&n_total).dot(&u).mapv(|z| z * (-omega_d));
    let dressed_drive = udag.dot(&drive).dot(&u);

    // H0 = dressed energies + frame diagonal; V = drive + residual off-diagonals
    let mut h0 = vec![0.0; n];
    let mut v = dressed_drive;
    for i in 0..n {
        h0[i] = energies[i] + frame[(i, i)].re;
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                v[(i, j)] += frame[(i, j)];
            }
        }
        v[(i, i)] = C64::new(v[(i, i)].re, 0.0);
    }

    sw_block_eliminate(&h0, &v, low, SwOrder::Second)
}

/// Makhlin-style local invariants (Re G₁, Im G₁, G₂) of a two-qubit unitary,
/// computed in the magic basis; used for local-equivalence checks with both
/// sides evaluated by this one definition.
pub fn local_invariants(u: &TwoQubitUnitary) -> [f64; 3] {
    let f = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| C64::new(re * f, im * f);
    // magic basis
    let q = ndarray::arr2(&[
        [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)],
        [c(0.0, 0.0), c(0.0, 1.0), c(1.0, 0.0), c(0.0, 0.0)],
        [c(0.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, 0.0)],
        [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -1.0)],
    ]);
    let mut qdag = Array2::<C64>::zeros((4, 4));
    for i in 0..4 {
        for j in 0..4 {
            qdag[(i, j)] = q[(j, i)].conj();
        }
    }
    let mb = qdag.dot(u.matrix()).dot(&q);
    let m = mb.t().to_owned().dot(&mb);
    let tr_m: C64 = (0..4).map(|i| m[(i, i)]).sum();
    let m2 = m.dot(&m);
    let tr_m2: C64 = (0..4).map(|i| m2[(i, i)]).sum();
    let det_u = det4(u.matrix());
    let g1 = tr_m * tr_m / (det_u * 16.0);
    let g2 = (tr_m * tr_m - tr_m2) / (det_u * 4.0);
    [g1.re, g1.im, g2.re]
}

fn det4(m: &Array2<C64>) -> C64 {
    // LU-free cofactor expansion is fine at 4×4
    let mut a = m.clone();
    let mut det = C64::new(1.0, 0.0);
    for k in 0..4 {
        let mut piv = k;
        let mut best = a[(k, k)].norm();
        for i in k + 1..4 {
            if a[(i, k)].norm() > best {
                best = a[(i, k)].norm();
                piv = i;
            }
        }
        if best == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if piv != k {
            for j in 0..4 {
                let tmp = a[(k, j)];
                a[(k, j)] = a[(piv, j)];
                a[(piv, j)] = tmp;
            }
            det = -det;
        }
        det *= a[(k, k)];
        for i in k + 1..4 {
            let f = a[(i, k)] / a[(k, k)];
            for j in k..4 {
                let akj = a[(k, j)];
                a[(i, j)] -= f * akj;
            }
        }
    }
    det
}
