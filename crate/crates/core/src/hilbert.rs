//! Linear-algebra substrate: complex vectors and operators on the tensor
//! product of two d-level modes, Hermitian eigendecomposition, and matrix
//! exponentials.
//!
//! Basis ordering is `|n1 n2⟩` with the mode-2 index fastest: the flat index
//! of `|n1 n2⟩` is `n1 * d + n2`. All modules build on this ordering.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Absolute Hermiticity budget for the `hermitian` tag.
const HERMITIAN_TOL: f64 = 1e-12;

/// Truncated two-mode Fock space: `d` levels per transmon, total dimension d².
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockSpace {
    d: usize,
}

impl FockSpace {
    pub fn new(levels: usize) -> Result<Self> {
        if levels < 2 {
            return Err(Error::Config(format!(
                "need at least 2 levels per transmon, got {levels}"
            )));
        }
        Ok(Self { d: levels })
    }

    /// Levels per mode.
    pub fn levels(&self) -> usize {
        self.d
    }

    /// Total Hilbert-space dimension d².
    pub fn dim(&self) -> usize {
        self.d * self.d
    }

    /// Flat index of `|n1 n2⟩` (mode-2 fastest).
    pub fn index(&self, n1: usize, n2: usize) -> usize {
        debug_assert!(n1 < self.d && n2 < self.d);
        n1 * self.d + n2
    }

    /// Inverse of [`FockSpace::index`].
    pub fn occupation(&self, index: usize) -> (usize, usize) {
        (index / self.d, index % self.d)
    }

    /// Flat indices of the computational states |00⟩, |01⟩, |10⟩, |11⟩.
    pub fn computational_indices(&self) -> [usize; 4] {
        [
            self.index(0, 0),
            self.index(0, 1),
            self.index(1, 0),
            self.index(1, 1),
        ]
    }
}

/// Which transmon an operator acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    One,
    Two,
}

/// Pure state on the two-mode space. Constructors enforce unit norm.
#[derive(Clone, Debug)]
pub struct Ket {
    space: FockSpace,
    amp: Array1<C64>,
}

impl Ket {
    /// Bare basis state `|n1 n2⟩`.
    pub fn basis(space: FockSpace, n1: usize, n2: usize) -> Self {
        let mut amp = Array1::zeros(space.dim());
        amp[space.index(n1, n2)] = C64::new(1.0, 0.0);
        Self { space, amp }
    }

    /// Build from amplitudes; rejects vectors whose norm deviates from 1 by
    /// more than 1e-9.
    pub fn from_amplitudes(space: FockSpace, amp: Array1<C64>) -> Result<Self> {
        if amp.len() != space.dim() {
            return Err(Error::Unphysical(format!(
                "amplitude vector has length {}, space dimension is {}",
                amp.len(),
                space.dim()
            )));
        }
        let norm = amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Unphysical(format!("state norm {norm} is not 1")));
        }
        Ok(Self { space, amp })
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amp
    }

    pub fn amplitude(&self, n1: usize, n2: usize) -> C64 {
        self.amp[self.space.index(n1, n2)]
    }

    pub fn population(&self, n1: usize, n2: usize) -> f64 {
        self.amplitude(n1, n2).norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ⟨self|other⟩.
    pub fn overlap(&self, other: &Ket) -> C64 {
        self.amp
            .iter()
            .zip(other.amp.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Complex operator on the two-mode space with a Hermiticity tag.
#[derive(Clone, Debug)]
pub struct Operator {
    space: FockSpace,
    mat: Array2<C64>,
    hermitian: bool,
}

impl Operator {
    pub fn zero(space: FockSpace) -> Self {
        Self {
            space,
            mat: Array2::zeros((space.dim(), space.dim())),
            hermitian: true,
        }
    }

    pub fn identity(space: FockSpace) -> Self {
        Self {
            space,
            mat: Array2::eye(space.dim()),
            hermitian: true,
        }
    }

    /// Wrap a matrix intended to be Hermitian: it is symmetrized exactly as
    /// (M + M†)/2 and tagged. Symmetrization of an already-Hermitian sum is a
    /// no-op up to rounding and guarantees `‖M − M†‖_max = 0` bit-exactly.
    pub fn hermitian(space: FockSpace, mat: Array2<C64>) -> Self {
        let n = space.dim();
        assert_eq!(mat.dim(), (n, n), "matrix shape mismatch");
        let mut sym = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                sym[(i, j)] = 0.5 * (mat[(i, j)] + mat[(j, i)].conj());
            }
        }
        Self {
            space,
            mat: sym,
            hermitian: true,
        }
    }

    /// Wrap a general matrix; the Hermitian tag is set only if the matrix is
    /// Hermitian within the absolute budget.
    pub fn general(space: FockSpace, mat: Array2<C64>) -> Self {
        let n = space.dim();
        assert_eq!(mat.dim(), (n, n), "matrix shape mismatch");
        let hermitian = hermiticity_defect(&mat) < HERMITIAN_TOL;
        Self {
            space,
            mat,
            hermitian,
        }
    }

    /// Annihilation operator of the requested mode: `a⊗I` or `I⊗b`, with
    /// `⟨n−1|a|n⟩ = √n` in the single-mode factor.
    pub fn annihilation(space: FockSpace, mode: Mode) -> Self {
        let d = space.levels();
        let mut single = Array2::<C64>::zeros((d, d));
        for n in 1..d {
            single[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
        }
        let eye = Array2::<C64>::eye(d);
        let mat = match mode {
            Mode::One => kron(&single, &eye),
            Mode::Two => kron(&eye, &single),
        };
        Self {
            space,
            mat,
            hermitian: false,
        }
    }

    pub fn creation(space: FockSpace, mode: Mode) -> Self {
        Self::annihilation(space, mode).dagger()
    }

    /// Number operator of the requested mode.
    pub fn number(space: FockSpace, mode: Mode) -> Self {
        let mut mat = Array2::<C64>::zeros((space.dim(), space.dim()));
        for i in 0..space.dim() {
            let (n1, n2) = space.occupation(i);
            let n = match mode {
                Mode::One => n1,
                Mode::Two => n2,
            };
            mat[(i, i)] = C64::new(n as f64, 0.0);
        }
        Self {
            space,
            mat,
            hermitian: true,
        }
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn dagger(&self) -> Self {
        let n = self.space.dim();
        let mut mat = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                mat[(i, j)] = self.mat[(j, i)].conj();
            }
        }
        Self {
            space: self.space,
            mat,
            hermitian: self.hermitian,
        }
    }

    pub fn add(&self, other: &Operator) -> Self {
        Self {
            space: self.space,
            mat: &self.mat + &other.mat,
            hermitian: self.hermitian && other.hermitian,
        }
    }

    pub fn sub(&self, other: &Operator) -> Self {
        Self {
            space: self.space,
            mat: &self.mat - &other.mat,
            hermitian: self.hermitian && other.hermitian,
        }
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            space: self.space,
            mat: self.mat.mapv(|z| z * c),
            hermitian: self.hermitian && c.im == 0.0,
        }
    }

    pub fn scaled_re(&self, c: f64) -> Self {
        self.scaled(C64::new(c, 0.0))
    }

    pub fn matmul(&self, other: &Operator) -> Self {
        Self {
            space: self.space,
            mat: self.mat.dot(&other.mat),
            hermitian: false,
        }
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        Self {
            space: self.space,
            mat: &self.mat.dot(&other.mat) - &other.mat.dot(&self.mat),
            hermitian: false,
        }
    }

    pub fn apply(&self, ket: &Ket) -> Array1<C64> {
        self.mat.dot(ket.amplitudes())
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// tr M.
    pub fn trace(&self) -> C64 {
        (0..self.space.dim()).map(|i| self.mat[(i, i)]).sum()
    }

    /// Hermitian eigendecomposition (cyclic Jacobi). Eigenvalues ascending;
    /// eigenvector phases fixed so the largest-magnitude component of each
    /// column is real positive.
    pub fn eigh(&self) -> Result<EighDecomposition> {
        if !self.hermitian {
            return Err(Error::NotHermitian {
                deviation: hermiticity_defect(&self.mat),
            });
        }
        let (values, vectors) = jacobi_eigh(&self.mat);
        Ok(EighDecomposition { values, vectors })
    }

    /// exp(scale · M). Hermitian operators go through the eigendecomposition;
    /// everything else through scaling-and-squaring (see [`Operator::expm_pade`]).
    pub fn expm(&self, scale: C64) -> Result<Operator> {
        if self.hermitian {
            let eig = self.eigh()?;
            let n = self.space.dim();
            let mut mat = Array2::<C64>::zeros((n, n));
            // V diag(e^{s λ}) V†
            for k in 0..n {
                let e = (scale * eig.values[k]).exp();
                for i in 0..n {
                    let vik = eig.vectors[(i, k)] * e;
                    for j in 0..n {
                        mat[(i, j)] += vik * eig.vectors[(j, k)].conj();
                    }
                }
            }
            Ok(Operator::general(self.space, mat))
        } else {
            Ok(self.expm_pade(scale))
        }
    }

    /// exp(scale · M) by scaling-and-squaring with a diagonal Padé
    /// approximant, independent of the eigendecomposition route.
    pub fn expm_pade(&self, scale: C64) -> Operator {
        let scaled = self.mat.mapv(|z| z * scale);
        Operator::general(self.space, expm_pade_matrix(&scaled))
    }
}

/// max |M - M†|.
pub fn hermiticity_defect(mat: &Array2<C64>) -> f64 {
    let n = mat.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Kronecker product.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::zeros((ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[(i, j)];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Result of a Hermitian eigendecomposition: `M = V diag(λ) V†`.
#[derive(Clone, Debug)]
pub struct EighDecomposition {
    /// Ascending eigenvalues.
    pub values: Array1<f64>,
    /// Eigenvectors as columns, orthonormal.
    pub vectors: Array2<C64>,
}

impl EighDecomposition {
    /// V e^{−i E t} V†, the free propagator of a Hamiltonian in rad/s over
    /// `t` seconds.
    pub fn propagator(&self, t: f64) -> Array2<C64> {
        let n = self.values.len();
        let mut mat = Array2::<C64>::zeros((n, n));
        for k in 0..n {
            let e = (C64::new(0.0, -1.0) * self.values[k] * t).exp();
            for i in 0..n {
                let vik = self.vectors[(i, k)] * e;
                for j in 0..n {
                    mat[(i, j)] += vik * self.vectors[(j, k)].conj();
                }
            }
        }
        mat
    }

    /// ⟨bra| e^{−iEt} |ket⟩ for a fixed pair of basis indices, cheap over
    /// many times: amplitude(t) = Σ_k ⟨bra|v_k⟩ e^{−iλ_k t} ⟨v_k|ket⟩.
    pub fn transition_amplitude(&self, bra: usize, ket: usize, t: f64) -> C64 {
        let n = self.values.len();
        let mut amp = C64::new(0.0, 0.0);
        for k in 0..n {
            let w = self.vectors[(bra, k)] * self.vectors[(ket, k)].conj();
            amp += w * (C64::new(0.0, -1.0) * self.values[k] * t).exp();
        }
        amp
    }
}

/// Eigendecomposition of a raw Hermitian matrix (no tag bookkeeping);
/// ascending eigenvalues, orthonormal columns.
pub fn eigh_hermitian(mat: &Array2<C64>) -> (Array1<f64>, Array2<C64>) {
    jacobi_eigh(mat)
}

/// Cyclic Jacobi diagonalization for Hermitian matrices. Adequate and very
/// accurate at the dimensions used here (≤ 36).
fn jacobi_eigh(mat: &Array2<C64>) -> (Array1<f64>, Array2<C64>) {
    let n = mat.nrows();
    let mut a = mat.clone();
    let mut v = Array2::<C64>::eye(n);
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let tol = scale * 1e-15;

    for _sweep in 0..100 {
        let mut largest = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                largest = largest.max(a[(p, q)].norm());
            }
        }
        if largest <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= tol * 1e-2 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let phase = apq / r; // e^{iα}
                let tau = (app - aqq) / (2.0 * r);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G = [[c, −s e^{iα}], [s e^{−iα}, c]] acting on columns (p, q)
                let se_pos = phase * s; // s e^{iα}
                let se_neg = phase.conj() * s; // s e^{−iα}
                // A ← G† A G: columns first, then rows
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = c * aip + se_neg * aiq;
                    a[(i, q)] = -se_pos * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = c * apj + se_pos * aqj;
                    a[(q, j)] = -se_neg * apj + c * aqj;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip + se_neg * viq;
                    v[(i, q)] = -se_pos * vip + c * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
    let mut values = Array1::zeros(n);
    let mut vectors = Array2::<C64>::zeros((n, n));
    for (col, &k) in order.iter().enumerate() {
        values[col] = a[(k, k)].re;
        // fix the phase: largest-magnitude component real positive
        let mut best = 0usize;
        let mut best_mag = 0.0f64;
        for i in 0..n {
            let m = v[(i, k)].norm();
            if m > best_mag {
                best_mag = m;
                best = i;
            }
        }
        let ph = if best_mag > 0.0 {
            v[(best, k)].conj() / best_mag
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..n {
            vectors[(i, col)] = v[(i, k)] * ph;
        }
    }
    (values, vectors)
}

/// Scaling-and-squaring matrix exponential with a [6/6] Padé approximant.
fn expm_pade_matrix(mat: &Array2<C64>) -> Array2<C64> {
    let n = mat.nrows();
    // 1-norm (max column sum)
    let mut norm: f64 = 0.0;
    for j in 0..n {
        let col: f64 = (0..n).map(|i| mat[(i, j)].norm()).sum();
        norm = norm.max(col);
    }
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let a = mat.mapv(|z| z / 2f64.powi(squarings as i32));

    // Padé [6/6] coefficients of e^x
    const C: [f64; 7] = [
        1.0,
        0.5,
        5.0 / 44.0,
        1.0 / 66.0,
        1.0 / 792.0,
        1.0 / 15840.0,
        1.0 / 665280.0,
    ];
    let eye = Array2::<C64>::eye(n);
    let mut powers = vec![eye.clone()];
    for k in 1..=6 {
        powers.push(powers[k - 1].dot(&a));
    }
    let mut num = Array2::<C64>::zeros((n, n));
    let mut den = Array2::<C64>::zeros((n, n));
    for (k, p) in powers.iter().enumerate() {
        let c = C64::new(C[k], 0.0);
        let sign = if k % 2 == 0 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(-1.0, 0.0)
        };
        num = num + p.mapv(|z| z * c);
        den = den + p.mapv(|z| z * c * sign);
    }
    let mut result = lu_solve_matrix(den, num);
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// Solve A X = B by LU with partial pivoting (A consumed).
fn lu_solve_matrix(mut a: Array2<C64>, mut b: Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let m = b.ncols();
    for k in 0..n {
        // pivot
        let mut piv = k;
        let mut pmag = a[(k, k)].norm();
        for i in (k + 1)..n {
            let mag = a[(i, k)].norm();
            if mag > pmag {
                pmag = mag;
                piv = i;
            }
        }
        if piv != k {
            for j in 0..n {
                let tmp = a[(k, j)];
                a[(k, j)] = a[(piv, j)];
                a[(piv, j)] = tmp;
            }
            for j in 0..m {
                let tmp = b[(k, j)];
                b[(k, j)] = b[(piv, j)];
                b[(piv, j)] = tmp;
            }
        }
        let akk = a[(k, k)];
        for i in (k + 1)..n {
            let factor = a[(i, k)] / akk;
            if factor == C64::new(0.0, 0.0) {
                continue;
            }
            for j in k..n {
                let akj = a[(k, j)];
                a[(i, j)] -= factor * akj;
            }
            for j in 0..m {
                let bkj = b[(k, j)];
                b[(i, j)] -= factor * bkj;
            }
        }
    }
    // back substitution
    let mut x = Array2::<C64>::zeros((n, m));
    for j in 0..m {
        for i in (0..n).rev() {
            let mut sum = b[(i, j)];
            for k in (i + 1)..n {
                sum -= a[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = sum / a[(i, i)];
        }
    }
    x
}
