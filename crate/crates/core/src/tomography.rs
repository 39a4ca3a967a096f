//! Synthetic joint readout, two-qubit state tomography (linear inversion and
//! maximum likelihood), process tomography to Pauli transfer matrices, and
//! fidelity metrics.
//!
//! Pauli basis ordering is II, IX, IY, IZ, XI, … ZZ with the second-qubit
//! label fastest.

use ndarray::Array2;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::effective::TwoQubitUnitary;
use crate::error::{Error, Result};
use crate::hilbert::{eigh_hermitian, kron, C64};

/// Pauli label in the fixed basis order.
pub const PAULI_LABELS: [&str; 16] = [
    "II", "IX", "IY", "IZ", "XI", "XX", "XY", "XZ", "YI", "YX", "YY", "YZ", "ZI", "ZX", "ZY", "ZZ",
];

fn single_pauli(k: usize) -> Array2<C64> {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match k {
        0 => ndarray::arr2(&[[o, z], [z, o]]),
        1 => ndarray::arr2(&[[z, o], [o, z]]),
        2 => ndarray::arr2(&[[z, -i], [i, z]]),
        _ => ndarray::arr2(&[[o, z], [z, -o]]),
    }
}

/// The 16 two-qubit Pauli matrices in basis order.
pub fn pauli_basis() -> Vec<Array2<C64>> {
    let mut out = Vec::with_capacity(16);
    for i in 0..4 {
        for j in 0..4 {
            out.push(kron(&single_pauli(i), &single_pauli(j)));
        }
    }
    out
}

/// Single-qubit tomography pre-rotations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SingleRotation {
    #[serde(rename = "I")]
    I,
    #[serde(rename = "Xpi")]
    XPi,
    #[serde(rename = "X90")]
    XHalf,
    #[serde(rename = "X-90")]
    XMinusHalf,
    #[serde(rename = "Y90")]
    YHalf,
    #[serde(rename = "Y-90")]
    YMinusHalf,
}

impl SingleRotation {
    pub const ALL: [SingleRotation; 6] = [
        SingleRotation::I,
        SingleRotation::XPi,
        SingleRotation::XHalf,
        SingleRotation::XMinusHalf,
        SingleRotation::YHalf,
        SingleRotation::YMinusHalf,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            SingleRotation::I => "I",
            SingleRotation::XPi => "Xpi",
            SingleRotation::XHalf => "X90",
            SingleRotation::XMinusHalf => "X-90",
            SingleRotation::YHalf => "Y90",
            SingleRotation::YMinusHalf => "Y-90",
        }
    }

    /// exp(−i·angle·σ/2) for the rotation's axis and angle.
    pub fn unitary(&self) -> Array2<C64> {
        let (axis, angle) = match self {
            SingleRotation::I => (1, 0.0),
            SingleRotation::XPi => (1, std::f64::consts::PI),
            SingleRotation::XHalf => (1, std::f64::consts::FRAC_PI_2),
            SingleRotation::XMinusHalf => (1, -std::f64::consts::FRAC_PI_2),
            SingleRotation::YHalf => (2, std::f64::consts::FRAC_PI_2),
            SingleRotation::YMinusHalf => (2, -std::f64::consts::FRAC_PI_2),
        };
        let half = angle / 2.0;
        let sigma = single_pauli(axis);
        let mut u = Array2::<C64>::eye(2);
        for i in 0..2 {
            for j in 0..2 {
                u[(i, j)] = u[(i, j)] * half.cos() - C64::new(0.0, half.sin()) * sigma[(i, j)];
            }
        }
        u
    }
}

/// One of the 36 rotation settings, applied as R₁⊗R₂.
pub type RotationPair = (SingleRotation, SingleRotation);

/// The Cartesian square of {I, Xπ, X±π/2, Y±π/2} in fixed canonical order
/// (first element (I, I)).
pub fn measurement_set() -> Vec<RotationPair> {
    let mut out = Vec::with_capacity(36);
    for a in SingleRotation::ALL {
        for b in SingleRotation::ALL {
            out.push((a, b));
        }
    }
    out
}

pub fn rotation_unitary(pair: &RotationPair) -> Array2<C64> {
    kron(&pair.0.unitary(), &pair.1.unitary())
}

/// Joint-readout model: the measured observable is
/// M = β_II·II + β_IZ·IZ + β_ZI·ZI + β_ZZ·ZZ, with an optional Gaussian
/// noise scale applied per record as `noise/√shots`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ReadoutModel {
    pub beta_ii: f64,
    pub beta_iz: f64,
    pub beta_zi: f64,
    pub beta_zz: f64,
    pub noise: f64,
}

impl Default for ReadoutModel {
    fn default() -> Self {
        ReadoutModel {
            beta_ii: 0.0,
            beta_iz: 1.0 / 3.0,
            beta_zi: 1.0 / 3.0,
            beta_zz: 1.0 / 3.0,
            noise: 1.0,
        }
    }
}

impl ReadoutModel {
    pub fn validate(&self) -> Result<()> {
        if self.beta_iz == 0.0 && self.beta_zi == 0.0 && self.beta_zz == 0.0 {
            return Err(Error::Config(
                "readout observable must have a nonzero Z component".into(),
            ));
        }
        Ok(())
    }

    pub fn observable(&self) -> Array2<C64> {
        let p = pauli_basis();
        let mut m = Array2::<C64>::zeros((4, 4));
        for (beta, idx) in [
            (self.beta_ii, 0),
            (self.beta_iz, 3),
            (self.beta_zi, 12),
            (self.beta_zz, 15),
        ] {
            m = m + p[idx].mapv(|z| z * beta);
        }
        m
    }
}

/// One joint-readout record: rotation setting, observed mean, shot count
/// (0 = noiseless exact expectation).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub setting: RotationPair,
    pub mean: f64,
    pub shots: u64,
}

/// Physical two-qubit density matrix: Hermitian, unit trace, PSD within
/// −1e-8.
#[derive(Clone, Debug)]
pub struct DensityMatrix4 {
    mat: Array2<C64>,
}

impl DensityMatrix4 {
    pub fn new(mat: Array2<C64>) -> Result<Self> {
        assert_eq!(mat.dim(), (4, 4));
        let herm = crate::hilbert::hermiticity_defect(&mat);
        if herm > 1e-9 {
            return Err(Error::Unphysical(format!(
                "density matrix not Hermitian (defect {herm:.2e})"
            )));
        }
        let trace: C64 = (0..4).map(|i| mat[(i, i)]).sum();
        if (trace.re - 1.0).abs() > 1e-9 || trace.im.abs() > 1e-12 {
            return Err(Error::Unphysical(format!(
                "density matrix trace {} is not 1",
                trace.re
            )));
        }
        let (vals, _) = eigh_hermitian(&mat);
        if vals[0] < -1e-8 {
            return Err(Error::Unphysical(format!(
                "density matrix has negative eigenvalue {:.3e}",
                vals[0]
            )));
        }
        Ok(Self { mat })
    }

    pub fn from_pure(amps: &[C64; 4]) -> Result<Self> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Unphysical(format!("pure state norm {norm} is not 1")));
        }
        let mut mat = Array2::zeros((4, 4));
        for i in 0..4 {
            for j in 0..4 {
                mat[(i, j)] = amps[i] * amps[j].conj();
            }
        }
        Ok(Self { mat })
    }

    pub fn ground() -> Self {
        let one = C64::new(1.0, 0.0);
        Self::from_pure(&[one, C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)])
            .expect("ground state is physical")
    }

    pub fn maximally_mixed() -> Self {
        let mut mat = Array2::zeros((4, 4));
        for i in 0..4 {
            mat[(i, i)] = C64::new(0.25, 0.0);
        }
        Self { mat }
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eigh_hermitian(&self.mat).0[0]
    }
}

/// ⟨ψ|ρ|ψ⟩ for a normalized pure target.
pub fn state_fidelity(rho: &Array2<C64>, target: &[C64; 4]) -> f64 {
    let mut fid = C64::new(0.0, 0.0);
    for i in 0..4 {
        for j in 0..4 {
            fid += target[i].conj() * rho[(i, j)] * target[j];
        }
    }
    fid.re
}

fn gaussian_pair(rng: &mut rand_chacha::ChaCha8Rng) -> (f64, f64) {
    // Box-Muller on uniform deviates built from the top 53 bits
    let u1 = ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
    let u2 = ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
    let r = (-2.0 * u1.ln()).sqrt();
    let phi = 2.0 * std::f64::consts::PI * u2;
    (r * phi.cos(), r * phi.sin())
}

/// Forward readout model without physicality validation (used internally for
/// leaky channel outputs whose computational-block trace is below one).
fn records_of_raw(
    rho: &Array2<C64>,
    model: &ReadoutModel,
    shots: u64,
    seed: u64,
) -> Vec<MeasurementRecord> {
    let m = model.observable();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    measurement_set()
        .into_iter()
        .map(|setting| {
            let r = rotation_unitary(&setting);
            let rotated = r.dot(rho).dot(&crate::dynamics::dagger(&r));
            let mut mean = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    mean += (m[(j, i)] * rotated[(i, j)]).re;
                }
            }
            if shots > 0 {
                let (g, _) = gaussian_pair(&mut rng);
                mean += model.noise / (shots as f64).sqrt() * g;
            }
            MeasurementRecord {
                setting,
                mean,
                shots,
            }
        })
        .collect()
}

/// Simulate the 36 joint-readout records of a physical state. With
/// `shots` > 0, seeded Gaussian noise of scale `noise/√shots` is added;
/// deterministic given the seed.
pub fn simulate_readout(
    rho: &DensityMatrix4,
    model: &ReadoutModel,
    shots: u64,
    seed: u64,
) -> Result<Vec<MeasurementRecord>> {
    model.validate()?;
    Ok(records_of_raw(rho.matrix(), model, shots, seed))
}

/// Design matrix D[j, i] = tr[R_j† M R_j · P_i]/4 mapping Pauli components
/// to record means.
pub fn measurement_design(model: &ReadoutModel) -> Array2<f64> {
    let m = model.observable();
    let paulis = pauli_basis();
    let mut d = Array2::zeros((36, 16));
    for (j, setting) in measurement_set().iter().enumerate() {
        let r = rotation_unitary(setting);
        let mj = crate::dynamics::dagger(&r).dot(&m).dot(&r);
        for (i, p) in paulis.iter().enumerate() {
            let mut tr = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    tr += (mj[(b, a)] * p[(a, b)]).re;
                }
            }
            d[(j, i)] = tr / 4.0;
        }
    }
    d
}

/// Informational completeness of the rotation set for a readout model: the
/// record means plus the unit-trace constraint must determine all 16 Pauli
/// components. Returns the rank of the trace-augmented design matrix; if the
/// non-trace components are rank-deficient, the null directions are named.
pub fn completeness_rank(model: &ReadoutModel) -> Result<usize> {
    let d = measurement_design(model);
    // Gram spectrum of the traceless block
    let mut gram = Array2::<C64>::zeros((15, 15));
    for a in 0..15 {
        for b in 0..15 {
            let mut s = 0.0;
            for j in 0..36 {
                s += d[(j, a + 1)] * d[(j, b + 1)];
            }
            gram[(a, b)] = C64::new(s, 0.0);
        }
    }
    let (vals, vecs) = eigh_hermitian(&gram);
    let tol = vals[14].max(1e-300) * 1e-10;
    let mut null_dirs = Vec::new();
    let mut rank = 1; // the pinned trace component
    for k in 0..15 {
        if vals[k] > tol {
            rank += 1;
        } else {
            let mut dominant = 0;
            let mut best = 0.0;
            for i in 0..15 {
                let w = vecs[(i, k)].norm_sqr();
                if w > best {
                    best = w;
                    dominant = i;
                }
            }
            null_dirs.push(PAULI_LABELS[dominant + 1].to_string());
        }
    }
    if !null_dirs.is_empty() {
        return Err(Error::RankDeficient {
            directions: null_dirs,
        });
    }
    Ok(rank)
}

/// Linear-inversion state estimate: Hermitian and trace-1 by construction
/// but not necessarily positive.
#[derive(Clone, Debug)]
pub struct StateEstimate {
    pub matrix: Array2<C64>,
    pub min_eigenvalue: f64,
}

/// Least-squares inversion of the records via the pseudo-inverse of the
/// design matrix. The trace component is pinned to 1 (the traceless
/// observable cannot measure it); the 15 traceless components are solved.
pub fn state_linear_inversion(
    records: &[MeasurementRecord],
    model: &ReadoutModel,
) -> Result<StateEstimate> {
    if records.len() < 16 {
        return Err(Error::Config(format!(
            "need at least 16 records, got {}",
            records.len()
        )));
    }
    completeness_rank(model)?;
    let d = measurement_design(model);
    let set = measurement_set();
    // residual after the pinned trace component
    let mut rhs = Vec::with_capacity(records.len());
    let mut rows = Vec::with_capacity(records.len());
    for record in records {
        let j = set
            .iter()
            .position(|s| *s == record.setting)
            .ok_or_else(|| Error::Config("record setting not in the 36-set".into()))?;
        rows.push(j);
        rhs.push(record.mean - d[(j, 0)]);
    }
    // normal equations on the traceless block
    let mut gram = Array2::<C64>::zeros((15, 15));
    let mut proj = [0.0f64; 15];
    for a in 0..15 {
        for b in 0..15 {
            let mut s = 0.0;
            for &j in rows.iter() {
                s += d[(j, a + 1)] * d[(j, b + 1)];
            }
            gram[(a, b)] = C64::new(s, 0.0);
        }
        for (&j, r) in rows.iter().zip(rhs.iter()) {
            proj[a] += d[(j, a + 1)] * r;
        }
    }
    let (vals, vecs) = eigh_hermitian(&gram);
    let tol = vals[14].max(1e-300) * 1e-12;
    let mut s = [0.0f64; 15];
    for k in 0..15 {
        if vals[k] <= tol {
            continue;
        }
        let mut coef = 0.0;
        for i in 0..15 {
            coef += vecs[(i, k)].re * proj[i];
        }
        coef /= vals[k];
        for i in 0..15 {
            s[i] += vecs[(i, k)].re * coef;
        }
    }
    let paulis = pauli_basis();
    let mut mat = paulis[0].mapv(|z| z * 0.25);
    for i in 0..15 {
        mat = mat + paulis[i + 1].mapv(|z| z * (s[i] / 4.0));
    }
    let (vals, _) = eigh_hermitian(&mat);
    Ok(StateEstimate {
        matrix: mat,
        min_eigenvalue: vals[0],
    })
}

/// Maximum-likelihood state estimate: ρ = T†T / tr(T†T) with lower-triangular
/// T, minimizing the Gaussian negative log-likelihood of the records by
/// deterministic gradient descent with backtracking, seeded from the
/// linear-inversion estimate projected to the nearest physical state.
pub fn state_mle(records: &[MeasurementRecord], model: &ReadoutModel) -> Result<DensityMatrix4> {
    let seed_state = state_linear_inversion(records, model)?;
    let t0 = cholesky_of_projected(&seed_state.matrix);

    // rotated observables per record
    let m = model.observable();
    let set = measurement_set();
    let mut observables = Vec::with_capacity(records.len());
    let mut means = Vec::with_capacity(records.len());
    for record in records {
        let j = set
            .iter()
            .position(|s| *s == record.setting)
            .ok_or_else(|| Error::Config("record setting not in the 36-set".into()))?;
        let r = rotation_unitary(&set[j]);
        observables.push(crate::dynamics::dagger(&r).dot(&m).dot(&r));
        means.push(record.mean);
    }

    let rho_of = |t: &Array2<C64>| -> (Array2<C64>, f64) {
        let td = crate::dynamics::dagger(t);
        let tt = td.dot(t);
        let tau: f64 = (0..4).map(|i| tt[(i, i)].re).sum();
        (tt.mapv(|z| z / tau), tau)
    };
    let nll = |t: &Array2<C64>| -> f64 {
        let (rho, _) = rho_of(t);
        observables
            .iter()
            .zip(means.iter())
            .map(|(mj, mean)| {
                let mut e = 0.0;
                for i in 0..4 {
                    for j in 0..4 {
                        e += (mj[(j, i)] * rho[(i, j)]).re;
                    }
                }
                (mean - e) * (mean - e)
            })
            .sum()
    };

    let mut t = t0;
    let mut f = nll(&t);
    let mut step = 0.1;
    let max_iters = 20_000;
    for iter in 0..max_iters {
        let (rho, tau) = rho_of(&t);
        // ∇_{T*} Σ r_j² = Σ −2 r_j [(T M_j)/τ − tr(M_j ρ) T/τ]
        let mut grad = Array2::<C64>::zeros((4, 4));
        for (mj, mean) in observables.iter().zip(means.iter()) {
            let mut e = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    e += (mj[(j, i)] * rho[(i, j)]).re;
                }
            }
            let r = mean - e;
            let tm = t.dot(mj);
            for a in 0..4 {
                for b in 0..4 {
                    grad[(a, b)] += (-2.0 * r / tau) * (tm[(a, b)] - e * t[(a, b)]);
                }
            }
        }
        // restrict to the lower-triangular parametrization, real diagonal
        for a in 0..4 {
            for b in 0..4 {
                if b > a {
                    grad[(a, b)] = C64::new(0.0, 0.0);
                } else if b == a {
                    grad[(a, b)] = C64::new(grad[(a, b)].re, 0.0);
                }
            }
        }
        let gnorm: f64 = grad.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if gnorm < 1e-8 {
            let (rho, _) = rho_of(&t);
            return DensityMatrix4::new(hermitized(&rho));
        }
        // backtracking line search
        let mut improved = false;
        for _ in 0..60 {
            let trial = &t - &grad.mapv(|z| z * step);
            let f_trial = nll(&trial);
            if f_trial < f - 1e-4 * step * gnorm * gnorm {
                t = trial;
                f = f_trial;
                step *= 1.5;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            // gradient is numerically flat at this scale
            if gnorm < 1e-6 {
                let (rho, _) = rho_of(&t);
                return DensityMatrix4::new(hermitized(&rho));
            }
            return Err(Error::NonConvergence {
                what: "state_mle",
                iters: iter,
                grad_norm: gnorm,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "state_mle",
        iters: max_iters,
        grad_norm: f64::NAN,
    })
}

fn hermitized(m: &Array2<C64>) -> Array2<C64> {
    let mut out = Array2::zeros(m.dim());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out[(i, j)] = 0.5 * (m[(i, j)] + m[(j, i)].conj());
        }
    }
    out
}

/// Project to the nearest PSD unit-trace matrix and factor it as T†T with T
/// lower-triangular (the Cholesky of the index-reversed matrix).
fn cholesky_of_projected(mat: &Array2<C64>) -> Array2<C64> {
    let (vals, vecs) = eigh_hermitian(mat);
    let clipped: Vec<f64> = vals.iter().map(|v| v.max(1e-10)).collect();
    let norm: f64 = clipped.iter().sum();
    let n = mat.nrows();
    let mut psd = Array2::<C64>::zeros((n, n));
    for k in 0..n {
        let w = clipped[k] / norm;
        for i in 0..n {
            for j in 0..n {
                psd[(i, j)] += vecs[(i, k)] * w * vecs[(j, k)].conj();
            }
        }
    }
    // A' = P A P with P the index reversal; Cholesky A' = L L†; then
    // T = P L† P is lower-triangular with T†T = A
    let rev = |i: usize| n - 1 - i;
    let mut ap = Array2::<C64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            ap[(i, j)] = psd[(rev(i), rev(j))];
        }
    }
    let mut l = Array2::<C64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = ap[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            if i == j {
                l[(i, j)] = C64::new(s.re.max(1e-12).sqrt(), 0.0);
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    let mut t = Array2::<C64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            // (L†)[rev(i), rev(j)] = conj(L[rev(j), rev(i)])
            t[(i, j)] = l[(rev(j), rev(i))].conj();
        }
    }
    t
}

/// 16×16 real Pauli transfer matrix. Serializes as a row-major array of
/// rows with the basis-order header.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTransferMatrix {
    mat: Array2<f64>,
}

#[derive(Serialize, Deserialize)]
struct PtmWire {
    basis: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Serialize for PauliTransferMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let wire = PtmWire {
            basis: PAULI_LABELS.iter().map(|s| s.to_string()).collect(),
            rows: (0..16)
                .map(|i| (0..16).map(|j| self.mat[(i, j)]).collect())
                .collect(),
        };
        wire.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PauliTransferMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = PtmWire::deserialize(deserializer)?;
        if wire.rows.len() != 16 || wire.rows.iter().any(|r| r.len() != 16) {
            return Err(serde::de::Error::custom("expected a 16×16 row-major array"));
        }
        if wire.basis != PAULI_LABELS {
            return Err(serde::de::Error::custom("unexpected Pauli basis order"));
        }
        let mut mat = Array2::zeros((16, 16));
        for (i, row) in wire.rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                mat[(i, j)] = *v;
            }
        }
        Ok(PauliTransferMatrix { mat })
    }
}

impl PauliTransferMatrix {
    pub fn from_matrix(mat: Array2<f64>) -> Self {
        assert_eq!(mat.dim(), (16, 16));
        Self { mat }
    }

    pub fn identity() -> Self {
        Self {
            mat: Array2::eye(16),
        }
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.mat
    }

    pub fn entry(&self, row: &str, col: &str) -> f64 {
        let r = PAULI_LABELS.iter().position(|l| *l == row).expect("row label");
        let c = PAULI_LABELS.iter().position(|l| *l == col).expect("col label");
        self.mat[(r, c)]
    }

    /// Composition: the PTM of (this ∘ other) is the matrix product.
    pub fn compose(&self, other: &PauliTransferMatrix) -> PauliTransferMatrix {
        PauliTransferMatrix {
            mat: self.mat.dot(&other.mat),
        }
    }

    pub fn max_abs_diff(&self, other: &PauliTransferMatrix) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..16 {
            for j in 0..16 {
                worst = worst.max((self.mat[(i, j)] - other.mat[(i, j)]).abs());
            }
        }
        worst
    }

    /// ‖RᵀR − I‖_max: zero for the PTM of a unitary.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..16 {
            for j in 0..16 {
                let mut s = 0.0;
                for k in 0..16 {
                    s += self.mat[(k, i)] * self.mat[(k, j)];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - expect).abs());
            }
        }
        worst
    }

    /// Apply the map to a density matrix through its Pauli vector.
    pub fn apply(&self, rho: &Array2<C64>) -> Array2<C64> {
        let paulis = pauli_basis();
        let mut p_in = [0.0f64; 16];
        for (i, p) in paulis.iter().enumerate() {
            let mut tr = C64::new(0.0, 0.0);
            for a in 0..4 {
                for b in 0..4 {
                    tr += p[(b, a)] * rho[(a, b)];
                }
            }
            p_in[i] = tr.re;
        }
        let mut out = Array2::<C64>::zeros((4, 4));
        for (i, p) in paulis.iter().enumerate() {
            let mut v = 0.0;
            for (j, pin) in p_in.iter().enumerate() {
                v += self.mat[(i, j)] * pin;
            }
            out = out + p.mapv(|z| z * (v / 4.0));
        }
        out
    }
}

/// R_ij = tr[P_i U P_j U†]/4 for a unitary; always an orthogonal matrix.
pub fn ptm_of_unitary(u: &TwoQubitUnitary) -> PauliTransferMatrix {
    let paulis = pauli_basis();
    let ud = crate::dynamics::dagger(u.matrix());
    let mut mat = Array2::zeros((16, 16));
    for (j, pj) in paulis.iter().enumerate() {
        let moved = u.matrix().dot(pj).dot(&ud);
        for (i, pi) in paulis.iter().enumerate() {
            let mut tr = C64::new(0.0, 0.0);
            for a in 0..4 {
                for b in 0..4 {
                    tr += pi[(b, a)] * moved[(a, b)];
                }
            }
            mat[(i, j)] = tr.re / 4.0;
        }
    }
    PauliTransferMatrix { mat }
}

/// Result of process tomography: the raw linear-inversion PTM and its
/// CPTP-projected refinement.
#[derive(Clone, Debug)]
pub struct ProcessTomography {
    pub raw: PauliTransferMatrix,
    pub mle: PauliTransferMatrix,
}

/// Full synthetic process tomography: prepare the 36 rotated ground states,
/// pass each through the channel, run state tomography on each output
/// (36×36 records), and assemble the PTM by linear inversion; the MLE
/// variant projects onto the completely-positive trace-preserving set.
pub fn process_tomography<F>(
    channel: F,
    model: &ReadoutModel,
    shots: u64,
    seed: u64,
) -> Result<ProcessTomography>
where
    F: Fn(&Array2<C64>) -> Array2<C64>,
{
    model.validate()?;
    completeness_rank(model)?;
    let paulis = pauli_basis();
    let rho0 = DensityMatrix4::ground();
    let set = measurement_set();

    let mut a = Array2::<f64>::zeros((36, 16));
    let mut b = Array2::<f64>::zeros((36, 16));
    for (k, setting) in set.iter().enumerate() {
        let r = rotation_unitary(setting);
        let rho_in = r.dot(rho0.matrix()).dot(&crate::dynamics::dagger(&r));
        let rho_out = channel(&rho_in);
        // decorrelate the per-input RNG streams from neighboring seeds
        let input_seed = seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(k as u64);
        let records = records_of_raw(&rho_out, model, shots, input_seed);
        let est = state_linear_inversion(&records, model)?;
        for (i, p) in paulis.iter().enumerate() {
            let mut tin = C64::new(0.0, 0.0);
            let mut tout = C64::new(0.0, 0.0);
            for x in 0..4 {
                for y in 0..4 {
                    tin += p[(y, x)] * rho_in[(x, y)];
                    tout += p[(y, x)] * est.matrix[(x, y)];
                }
            }
            a[(k, i)] = tin.re;
            b[(k, i)] = tout.re;
        }
    }

    // R solves A Rᵀ = B in the least-squares sense
    let mut gram = Array2::<C64>::zeros((16, 16));
    for i in 0..16 {
        for j in 0..16 {
            let mut s = 0.0;
            for k in 0..36 {
                s += a[(k, i)] * a[(k, j)];
            }
            gram[(i, j)] = C64::new(s, 0.0);
        }
    }
    let (vals, vecs) = eigh_hermitian(&gram);
    let tol = vals[15].max(1e-300) * 1e-12;
    if vals[0] < tol {
        let mut dirs = Vec::new();
        for k in 0..16 {
            if vals[k] < tol {
                let mut dominant = 0;
                let mut best = 0.0;
                for i in 0..16 {
                    if vecs[(i, k)].norm_sqr() > best {
                        best = vecs[(i, k)].norm_sqr();
                        dominant = i;
                    }
                }
                dirs.push(PAULI_LABELS[dominant].to_string());
            }
        }
        return Err(Error::RankDeficient { directions: dirs });
    }
    let mut raw = Array2::<f64>::zeros((16, 16));
    for col in 0..16 {
        // solve gram · x = Aᵀ b[:, col]
        let mut rhs = [0.0f64; 16];
        for i in 0..16 {
            for k in 0..36 {
                rhs[i] += a[(k, i)] * b[(k, col)];
            }
        }
        for i in 0..16 {
            let mut x = 0.0;
            for kk in 0..16 {
                let mut coef = 0.0;
                for l in 0..16 {
                    coef += vecs[(l, kk)].re * rhs[l];
                }
                x += vecs[(i, kk)].re * coef / vals[kk];
            }
            raw[(col, i)] = x;
        }
    }
    let raw = PauliTransferMatrix { mat: raw };
    let mle = project_cptp(&raw)?;
    Ok(ProcessTomography { raw, mle })
}

/// Nearest completely-positive trace-preserving map (Frobenius distance on
/// the Choi matrix — the Gaussian-MLE projection) by alternating Dykstra
/// projections between the PSD cone and the trace-preservation subspace.
pub fn project_cptp(ptm: &PauliTransferMatrix) -> Result<PauliTransferMatrix> {
    let mut choi = choi_of_ptm(ptm);
    let mut increment = Array2::<C64>::zeros((16, 16));
    for _ in 0..20_000 {
        // PSD projection with Dykstra correction
        let target = &choi - &increment;
        let (vals, vecs) = eigh_hermitian(&target);
        let mut psd = Array2::<C64>::zeros((16, 16));
        for k in 0..16 {
            if vals[k] <= 0.0 {
                continue;
            }
            for i in 0..16 {
                for j in 0..16 {
                    psd[(i, j)] += vecs[(i, k)] * vals[k] * vecs[(j, k)].conj();
                }
            }
        }
        increment = &psd - &target;
        // TP projection (affine): C += (I − Tr_out C)/4 ⊗ I
        let mut defect = Array2::<C64>::zeros((4, 4));
        for k in 0..4 {
            for l in 0..4 {
                let mut s = C64::new(0.0, 0.0);
                for x in 0..4 {
                    s += psd[(4 * k + x, 4 * l + x)];
                }
                defect[(k, l)] = (if k == l { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }) - s;
            }
        }
        let mut next = psd.clone();
        for k in 0..4 {
            for l in 0..4 {
                for x in 0..4 {
                    next[(4 * k + x, 4 * l + x)] += defect[(k, l)] / 4.0;
                }
            }
        }
        let moved: f64 = next
            .iter()
            .zip(choi.iter())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        choi = next;
        let (vals, _) = eigh_hermitian(&choi);
        if moved < 1e-12 && vals[0] > -1e-10 {
            return Ok(ptm_of_choi(&choi));
        }
    }
    Err(Error::NonConvergence {
        what: "project_cptp",
        iters: 20_000,
        grad_norm: f64::NAN,
    })
}

/// Choi matrix C = Σ_{kl} |k⟩⟨l| ⊗ E(|k⟩⟨l|) of the map described by a PTM.
fn choi_of_ptm(ptm: &PauliTransferMatrix) -> Array2<C64> {
    let paulis = pauli_basis();
    let mut choi = Array2::<C64>::zeros((16, 16));
    // E(P_j) = Σ_i R_ij P_i; |k⟩⟨l| = Σ_j tr[P_j |k⟩⟨l|] P_j / 4
    for k in 0..4 {
        for l in 0..4 {
            let mut image = Array2::<C64>::zeros((4, 4));
            for (j, pj) in paulis.iter().enumerate() {
                let w = pj[(l, k)] / 4.0; // tr[P_j |k⟩⟨l|] = (P_j)_{lk}
                if w.norm() == 0.0 {
                    continue;
                }
                for (i, pi) in paulis.iter().enumerate() {
                    if ptm.mat[(i, j)] == 0.0 {
                        continue;
                    }
                    for x in 0..4 {
                        for y in 0..4 {
                            image[(x, y)] += w * ptm.mat[(i, j)] * pi[(x, y)];
                        }
                    }
                }
            }
            for x in 0..4 {
                for y in 0..4 {
                    choi[(4 * k + x, 4 * l + y)] = image[(x, y)];
                }
            }
        }
    }
    choi
}

fn ptm_of_choi(choi: &Array2<C64>) -> PauliTransferMatrix {
    let paulis = pauli_basis();
    let mut mat = Array2::zeros((16, 16));
    for i in 0..16 {
        for j in 0..16 {
            // R_ij = tr[C (P_jᵀ ⊗ P_i)]/4
            let mut s = C64::new(0.0, 0.0);
            for k in 0..4 {
                for l in 0..4 {
                    for x in 0..4 {
                        for y in 0..4 {
                            s += choi[(4 * k + x, 4 * l + y)]
                                * paulis[j][(k, l)]
                                * paulis[i][(y, x)];
                        }
                    }
                }
            }
            mat[(i, j)] = s.re / 4.0;
        }
    }
    PauliTransferMatrix { mat }
}

/// Gate fidelity F_g = (tr[R_ideal† R_measured] + 4)/20.
pub fn gate_fidelity(measured: &PauliTransferMatrix, ideal: &PauliTransferMatrix) -> f64 {
    let mut tr = 0.0;
    for i in 0..16 {
        for j in 0..16 {
            tr += ideal.mat[(j, i)] * measured.mat[(j, i)];
        }
    }
    (tr + 4.0) / 20.0
}

/// ⟨P⟩ of the 15 nontrivial Paulis for the Bell states prepared by the
/// half-rotation at each drive phase φ.
pub fn pauli_phase_sweep(phis: &[f64]) -> Vec<(f64, [f64; 15])> {
    let paulis = pauli_basis();
    phis.iter()
        .map(|&phi| {
            let u = crate::effective::u_bell(1.0, std::f64::consts::FRAC_PI_2, phi);
            let mut amps = [C64::new(0.0, 0.0); 4];
            for (i, amp) in amps.iter_mut().enumerate() {
                *amp = u.matrix()[(i, 0)];
            }
            let mut row = [0.0f64; 15];
            for (i, p) in paulis.iter().enumerate().skip(1) {
                let mut e = C64::new(0.0, 0.0);
                for a in 0..4 {
                    for b in 0..4 {
                        e += amps[a].conj() * p[(a, b)] * amps[b];
                    }
                }
                row[i - 1] = e.re;
            }
            (phi, row)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effective::u_bell;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn bell_plus() -> DensityMatrix4 {
        let f = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix4::from_pure(&[c(f, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(f, 0.0)]).unwrap()
    }

    #[test]
    fn measurement_set_has_36_settings_first_ii() {
        let set = measurement_set();
        assert_eq!(set.len(), 36);
        assert_eq!(set[0], (SingleRotation::I, SingleRotation::I));
    }

    #[test]
    fn default_model_is_informationally_complete_with_trace_pin() {
        let rank = completeness_rank(&ReadoutModel::default()).unwrap();
        assert_eq!(rank, 16);
    }

    #[test]
    fn zz_only_readout_is_rank_deficient() {
        // a pure-ZZ observable never sees single-qubit components
        let model = ReadoutModel {
            beta_ii: 0.0,
            beta_iz: 0.0,
            beta_zi: 0.0,
            beta_zz: 1.0,
            noise: 0.0,
        };
        match completeness_rank(&model) {
            Err(Error::RankDeficient { directions }) => {
                assert!(
                    directions.iter().any(|d| d.len() == 2 && d.contains('I')),
                    "null directions {directions:?} should include single-qubit Paulis"
                );
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn unphysical_density_matrices_are_rejected() {
        let mut mat = Array2::<C64>::zeros((4, 4));
        mat[(0, 0)] = c(1.3, 0.0);
        mat[(1, 1)] = c(-0.3, 0.0);
        assert!(matches!(
            DensityMatrix4::new(mat),
            Err(Error::Unphysical(_))
        ));
    }

    #[test]
    fn ptm_serialization_round_trip() {
        let r = ptm_of_unitary(&u_bell(1.0, 1.1, 0.2));
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"basis\""));
        assert!(text.contains("\"II\""));
        let back: PauliTransferMatrix = serde_json::from_str(&text).unwrap();
        assert!(r.max_abs_diff(&back) < 1e-15);
    }

    #[test]
    fn record_settings_serialize_as_labels() {
        let records = simulate_readout(
            &DensityMatrix4::ground(),
            &ReadoutModel::default(),
            0,
            0,
        )
        .unwrap();
        let text = serde_json::to_string(&records[7]).unwrap();
        assert!(text.contains("\"Xpi\""), "{text}");
    }

    #[test]
    fn degenerate_model_fails_completeness() {
        // ZZ-only observable cannot see single-qubit X/Y components alone?
        // it can, through the rotations; a truly degenerate case is β = 0
        let model = ReadoutModel {
            beta_ii: 1.0,
            beta_iz: 0.0,
            beta_zi: 0.0,
            beta_zz: 0.0,
            noise: 0.0,
        };
        assert!(model.validate().is_err());
    }

    #[test]
    fn readout_of_ground_state() {
        let model = ReadoutModel::default();
        let rho = DensityMatrix4::ground();
        let records = simulate_readout(&rho, &model, 0, 0).unwrap();
        // (I, I) setting: mean = β_II + β_IZ + β_ZI + β_ZZ
        let expect = model.beta_ii + model.beta_iz + model.beta_zi + model.beta_zz;
        assert!((records[0].mean - expect).abs() < 1e-12);
    }

    #[test]
    fn readout_of_maximally_mixed_is_flat() {
        let model = ReadoutModel::default();
        let rho = DensityMatrix4::maximally_mixed();
        let records = simulate_readout(&rho, &model, 0, 0).unwrap();
        for r in &records {
            assert!((r.mean - model.beta_ii).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_records_are_seed_independent() {
        let model = ReadoutModel::default();
        let rho = bell_plus();
        let a = simulate_readout(&rho, &model, 0, 1).unwrap();
        let b = simulate_readout(&rho, &model, 0, 2).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.mean, y.mean);
        }
    }

    #[test]
    fn seeded_records_are_reproducible() {
        let model = ReadoutModel::default();
        let rho = bell_plus();
        let a = simulate_readout(&rho, &model, 100, 7).unwrap();
        let b = simulate_readout(&rho, &model, 100, 7).unwrap();
        let c2 = simulate_readout(&rho, &model, 100, 8).unwrap();
        assert!(a.iter().zip(b.iter()).all(|(x, y)| x.mean == y.mean));
        assert!(a.iter().zip(c2.iter()).any(|(x, y)| x.mean != y.mean));
    }

    #[test]
    fn linear_inversion_round_trip_is_exact() {
        let model = ReadoutModel::default();
        for rho in [bell_plus(), DensityMatrix4::ground(), DensityMatrix4::maximally_mixed()] {
            let records = simulate_readout(&rho, &model, 0, 0).unwrap();
            let est = state_linear_inversion(&records, &model).unwrap();
            let mut worst = 0.0f64;
            for i in 0..4 {
                for j in 0..4 {
                    worst = worst.max((est.matrix[(i, j)] - rho.matrix()[(i, j)]).norm());
                }
            }
            assert!(worst < 1e-9, "round-trip error {worst}");
        }
    }

    #[test]
    fn linear_inversion_bell_fidelity_is_unity() {
        let model = ReadoutModel::default();
        let rho = bell_plus();
        let records = simulate_readout(&rho, &model, 0, 0).unwrap();
        let est = state_linear_inversion(&records, &model).unwrap();
        let f = std::f64::consts::FRAC_1_SQRT_2;
        let target = [c(f, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(f, 0.0)];
        let fid = state_fidelity(&est.matrix, &target);
        assert!((fid - 1.0).abs() < 1e-9, "fidelity {fid}");
    }

    #[test]
    fn heavy_noise_can_break_positivity() {
        let model = ReadoutModel {
            noise: 40.0,
            ..ReadoutModel::default()
        };
        let rho = bell_plus();
        let records = simulate_readout(&rho, &model, 4, 12345).unwrap();
        let est = state_linear_inversion(&records, &model).unwrap();
        assert!(
            est.min_eigenvalue < -1e-3,
            "expected a negative eigenvalue, got {}",
            est.min_eigenvalue
        );
    }

    #[test]
    fn mle_matches_inversion_on_clean_data() {
        let model = ReadoutModel::default();
        let rho = bell_plus();
        let records = simulate_readout(&rho, &model, 0, 0).unwrap();
        let mle = state_mle(&records, &model).unwrap();
        let f = std::f64::consts::FRAC_1_SQRT_2;
        let target = [c(f, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(f, 0.0)];
        let fid = state_fidelity(mle.matrix(), &target);
        assert!(fid >= 1.0 - 1e-6, "fidelity {fid}");
    }

    #[test]
    fn mle_output_is_physical_on_noisy_data() {
        let model = ReadoutModel {
            noise: 3.0,
            ..ReadoutModel::default()
        };
        let rho = bell_plus();
        let records = simulate_readout(&rho, &model, 16, 99).unwrap();
        let mle = state_mle(&records, &model).unwrap();
        assert!(mle.min_eigenvalue() >= -1e-12);
        let trace: C64 = (0..4).map(|i| mle.matrix()[(i, i)]).sum();
        assert!((trace.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mle_of_mixed_data_is_maximally_mixed() {
        let model = ReadoutModel::default();
        let rho = DensityMatrix4::maximally_mixed();
        let records = simulate_readout(&rho, &model, 0, 0).unwrap();
        let mle = state_mle(&records, &model).unwrap();
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 0.25 } else { 0.0 };
                worst = worst.max((mle.matrix()[(i, j)] - c(expect, 0.0)).norm());
            }
        }
        assert!(worst < 1e-3, "distance from I/4: {worst}");
    }

    #[test]
    fn state_fidelity_limits() {
        let f = std::f64::consts::FRAC_1_SQRT_2;
        let target = [c(f, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(f, 0.0)];
        assert!((state_fidelity(bell_plus().matrix(), &target) - 1.0).abs() < 1e-12);
        assert!(
            (state_fidelity(DensityMatrix4::maximally_mixed().matrix(), &target) - 0.25).abs()
                < 1e-12
        );
    }

    #[test]
    fn ptm_of_identity_and_bswap() {
        let id = TwoQubitUnitary::identity();
        assert!(ptm_of_unitary(&id).max_abs_diff(&PauliTransferMatrix::identity()) < 1e-12);

        let ob = 1.0;
        let bswap = u_bell(ob, std::f64::consts::PI, 0.0);
        let r = ptm_of_unitary(&bswap);
        assert!(r.orthogonality_defect() < 1e-9);
        // bSWAP maps IZ → −ZI and ZI → −IZ (block swap with signs)
        assert!((r.entry("ZI", "IZ") + 1.0).abs() < 1e-9);
        assert!((r.entry("IZ", "ZI") + 1.0).abs() < 1e-9);
        assert!((r.entry("ZZ", "ZZ") - 1.0).abs() < 1e-9);
        assert!((r.entry("XX", "XX") - 1.0).abs() < 1e-9);
        // first row is (1, 0, …, 0)
        for j in 1..16 {
            assert!(r.matrix()[(0, j)].abs() < 1e-9);
        }
    }

    #[test]
    fn ptm_is_a_homomorphism() {
        let u1 = u_bell(1.0, 0.8, 0.3);
        let u2 = u_bell(1.0, 1.9, 1.1);
        let lhs = ptm_of_unitary(&u1.matmul(&u2));
        let rhs = ptm_of_unitary(&u1).compose(&ptm_of_unitary(&u2));
        assert!(lhs.max_abs_diff(&rhs) < 1e-9);
    }

    #[test]
    fn identity_channel_process_tomography() {
        let model = ReadoutModel::default();
        let result = process_tomography(|rho| rho.clone(), &model, 0, 0).unwrap();
        assert!(result.raw.max_abs_diff(&PauliTransferMatrix::identity()) < 1e-9);
        assert!(
            (gate_fidelity(&result.raw, &PauliTransferMatrix::identity()) - 1.0).abs() < 1e-9
        );
        assert!(result.mle.max_abs_diff(&PauliTransferMatrix::identity()) < 1e-6);
    }

    #[test]
    fn ideal_bswap_channel_process_tomography() {
        let model = ReadoutModel::default();
        let bswap = u_bell(1.0, std::f64::consts::PI, 0.0);
        let ideal = ptm_of_unitary(&bswap);
        let u = bswap.matrix().clone();
        let ud = crate::dynamics::dagger(&u);
        let result =
            process_tomography(|rho| u.dot(rho).dot(&ud), &model, 0, 0).unwrap();
        assert!(result.raw.max_abs_diff(&ideal) < 1e-8);
        assert!((gate_fidelity(&result.raw, &ideal) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn gate_fidelity_reference_points() {
        let bswap = u_bell(1.0, std::f64::consts::PI, 0.0);
        let r = ptm_of_unitary(&bswap);
        assert!((gate_fidelity(&r, &r) - 1.0).abs() < 1e-12);
        // completely depolarizing channel: diag(1, 0, …, 0)
        let mut dep = Array2::zeros((16, 16));
        dep[(0, 0)] = 1.0;
        let dep = PauliTransferMatrix::from_matrix(dep);
        assert!((gate_fidelity(&dep, &r) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn fidelity_decreases_affinely_under_depolarizing() {
        let ideal = ptm_of_unitary(&u_bell(1.0, std::f64::consts::FRAC_PI_2, 0.0));
        let fidelity_at = |p: f64| {
            let mut mat = ideal.matrix().mapv(|x| (1.0 - p) * x);
            mat[(0, 0)] = 1.0;
            for j in 1..16 {
                mat[(0, j)] *= 0.0;
            }
            gate_fidelity(&PauliTransferMatrix::from_matrix(mat), &ideal)
        };
        let f0 = fidelity_at(0.0);
        let f1 = fidelity_at(0.5);
        let f2 = fidelity_at(1.0);
        assert!((f0 - 1.0).abs() < 1e-12);
        assert!(f0 > f1 && f1 > f2);
        assert!((f1 - 0.5 * (f0 + f2)).abs() < 1e-12, "not affine");
    }

    #[test]
    fn gate_fidelity_invariant_under_local_conjugation() {
        let ideal = ptm_of_unitary(&u_bell(1.0, std::f64::consts::FRAC_PI_2, 0.4));
        // a slightly depolarized measured map
        let mut mat = ideal.matrix().mapv(|x| 0.93 * x);
        mat[(0, 0)] = 1.0;
        for j in 1..16 {
            mat[(0, j)] = 0.0;
        }
        let measured = PauliTransferMatrix::from_matrix(mat);
        let f0 = gate_fidelity(&measured, &ideal);
        // conjugate both by a local unitary's PTM
        let local = {
            let r1 = SingleRotation::XHalf.unitary();
            let r2 = SingleRotation::YMinusHalf.unitary();
            TwoQubitUnitary::new(kron(&r1, &r2)).unwrap()
        };
        let l = ptm_of_unitary(&local);
        let lt = PauliTransferMatrix::from_matrix(l.matrix().t().to_owned());
        let measured_c = l.compose(&measured).compose(&lt);
        let ideal_c = l.compose(&ideal).compose(&lt);
        let f1 = gate_fidelity(&measured_c, &ideal_c);
        assert!((f0 - f1).abs() < 1e-9, "{f0} vs {f1}");
    }

    #[test]
    fn cptp_projection_fixes_nonphysical_ptm() {
        let ideal = ptm_of_unitary(&u_bell(1.0, std::f64::consts::FRAC_PI_2, 0.0));
        // inflate one entry beyond physicality
        let mut mat = ideal.matrix().clone();
        mat[(5, 5)] *= 1.2;
        let broken = PauliTransferMatrix::from_matrix(mat);
        let fixed = project_cptp(&broken).unwrap();
        let choi = choi_of_ptm(&fixed);
        let (vals, _) = eigh_hermitian(&choi);
        assert!(vals[0] > -1e-9, "min Choi eigenvalue {}", vals[0]);
        // trace preservation: first row restored to (1, 0, …, 0)
        assert!((fixed.matrix()[(0, 0)] - 1.0).abs() < 1e-6);
        for j in 1..16 {
            assert!(fixed.matrix()[(0, j)].abs() < 1e-6);
        }
    }

    #[test]
    fn phase_sweep_structure() {
        let phis: Vec<f64> = (0..24).map(|k| k as f64 * std::f64::consts::PI / 12.0).collect();
        let table = pauli_phase_sweep(&phis);
        let col = |name: &str| PAULI_LABELS.iter().position(|l| *l == name).unwrap() - 1;
        let (xx, yy, zz) = (col("XX"), col("YY"), col("ZZ"));
        for (phi, row) in &table {
            // ZZ constant (+1 for states in the {|00⟩,|11⟩} subspace);
            // single-qubit expectations vanish
            assert!((row[zz] - 1.0).abs() < 1e-12, "ZZ at φ={phi}");
            for name in ["IX", "IY", "IZ", "XI", "YI", "ZI"] {
                assert!(row[col(name)].abs() < 1e-12, "{name} at φ={phi}");
            }
            // antiphase oscillation with period π
            assert!((row[xx] + row[yy]).abs() < 1e-12);
            let expect_xx = (2.0 * phi).sin();
            assert!((row[xx] - expect_xx).abs() < 1e-9, "XX(φ={phi}) = {}", row[xx]);
        }
        // period π: φ and φ+π give identical rows
        let (_, row0) = &table[0];
        let (_, row12) = &table[12];
        for (a, b) in row0.iter().zip(row12.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn ptm_orthogonality_for_random_bell_rotations(theta in 0.05f64..6.0, phi in 0.0f64..6.2) {
            let u = u_bell(1.0, theta, phi);
            let r = ptm_of_unitary(&u);
            prop_assert!(r.orthogonality_defect() < 1e-9);
            for e in r.matrix().iter() {
                prop_assert!(e.abs() <= 1.0 + 1e-6);
            }
        }

        #[test]
        fn linear_inversion_round_trip_random_pure_states(seed in 0u64..500) {
            // random pure state from a seeded unitary-ish construction
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut amps = [C64::new(0.0, 0.0); 4];
            let mut norm = 0.0;
            for a in amps.iter_mut() {
                let (x, y) = gaussian_pair(&mut rng);
                *a = C64::new(x, y);
                norm += a.norm_sqr();
            }
            let norm = norm.sqrt();
            for a in amps.iter_mut() {
                *a /= norm;
            }
            let rho = DensityMatrix4::from_pure(&amps).unwrap();
            let model = ReadoutModel::default();
            let records = simulate_readout(&rho, &model, 0, 0).unwrap();
            let est = state_linear_inversion(&records, &model).unwrap();
            let mut worst = 0.0f64;
            for i in 0..4 {
                for j in 0..4 {
                    worst = worst.max((est.matrix[(i,j)] - rho.matrix()[(i,j)]).norm());
                }
            }
            prop_assert!(worst < 1e-9, "round trip {}", worst);
        }
    }
}
