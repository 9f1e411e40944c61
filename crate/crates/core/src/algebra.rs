//! Exact 2×2 operator algebra on the `{|1⟩, |2⟩}` basis and the orthonormal
//! Hilbert–Schmidt operator basis used by the generator and correlation code.
//!
//! Index 0 is the ground state `|1⟩`, index 1 the excited state `|2⟩`. Every
//! other module relies on this ordering.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;

/// Row/column index of the ground state `|1⟩`.
pub const GROUND: usize = 0;
/// Row/column index of the excited state `|2⟩`.
pub const EXCITED: usize = 1;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// A complex 2×2 matrix acting on the emitter's Hilbert space. Carries both
/// observables and density matrices.
#[derive(Clone, Copy, PartialEq)]
pub struct OperatorMatrix(pub Matrix2<C64>);

impl OperatorMatrix {
    pub fn zero() -> Self {
        Self(Matrix2::zeros())
    }

    pub fn identity() -> Self {
        Self(Matrix2::identity())
    }

    /// Build from row-major entries `[[m00, m01], [m10, m11]]`.
    pub fn from_rows(rows: [[C64; 2]; 2]) -> Self {
        Self(Matrix2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1]))
    }

    /// Build from real row-major entries.
    pub fn from_real_rows(rows: [[f64; 2]; 2]) -> Self {
        Self::from_rows(rows.map(|r| r.map(|x| C64::new(x, 0.0))))
    }

    /// Matrix unit `|row⟩⟨col|`.
    pub fn unit(row: usize, col: usize) -> Self {
        let mut m = Matrix2::zeros();
        m[(row, col)] = ONE;
        Self(m)
    }

    /// Raising operator `S⁺ = |2⟩⟨1|`.
    pub fn sigma_plus() -> Self {
        Self::unit(EXCITED, GROUND)
    }

    /// Lowering operator `S⁻ = |1⟩⟨2|`.
    pub fn sigma_minus() -> Self {
        Self::unit(GROUND, EXCITED)
    }

    /// Inversion `S_z = (|2⟩⟨2| − |1⟩⟨1|)/2`.
    pub fn sigma_z() -> Self {
        Self::from_real_rows([[-0.5, 0.0], [0.0, 0.5]])
    }

    /// Projector onto a basis level (`GROUND` or `EXCITED`).
    pub fn projector(level: usize) -> Self {
        Self::unit(level, level)
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn dagger(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self(self.0 * factor)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        Self(self.0 * C64::new(factor, 0.0))
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖A − A†‖_F`.
    pub fn hermiticity_defect(&self) -> f64 {
        (*self - self.dagger()).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl fmt::Debug for OperatorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            self.0[(0, 0)],
            self.0[(0, 1)],
            self.0[(1, 0)],
            self.0[(1, 1)]
        )
    }
}

impl Add for OperatorMatrix {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl AddAssign for OperatorMatrix {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
    }
}

impl Sub for OperatorMatrix {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

impl Neg for OperatorMatrix {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl Mul for OperatorMatrix {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self(self.0 * rhs.0)
    }
}

impl Mul<C64> for OperatorMatrix {
    type Output = Self;
    fn mul(self, rhs: C64) -> Self {
        self.scale(rhs)
    }
}

impl Mul<f64> for OperatorMatrix {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale_real(rhs)
    }
}

/// `ab − ba`.
pub fn commutator(a: &OperatorMatrix, b: &OperatorMatrix) -> OperatorMatrix {
    *a * *b - *b * *a
}

/// Hilbert–Schmidt inner product `Tr(a† b)`.
pub fn hs_inner(a: &OperatorMatrix, b: &OperatorMatrix) -> C64 {
    (a.dagger() * *b).trace()
}

/// `Tr(ρ q)`.
pub fn expectation(q: &OperatorMatrix, rho: &OperatorMatrix) -> C64 {
    (*rho * *q).trace()
}

/// Orthonormal operator basis `(I/√2, S⁺, S⁻, √2·S_z)`.
#[derive(Clone, Copy, Debug)]
pub struct HsBasis {
    elements: [OperatorMatrix; 4],
}

impl HsBasis {
    pub fn standard() -> Self {
        let s = std::f64::consts::SQRT_2;
        Self {
            elements: [
                OperatorMatrix::identity() * std::f64::consts::FRAC_1_SQRT_2,
                OperatorMatrix::sigma_plus(),
                OperatorMatrix::sigma_minus(),
                OperatorMatrix::sigma_z() * s,
            ],
        }
    }

    pub fn elements(&self) -> &[OperatorMatrix; 4] {
        &self.elements
    }

    pub fn get(&self, k: usize) -> &OperatorMatrix {
        &self.elements[k]
    }

    /// Gram matrix `G_jk = Tr(B_j† B_k)`.
    pub fn gram(&self) -> [[C64; 4]; 4] {
        let mut g = [[ZERO; 4]; 4];
        for (j, bj) in self.elements.iter().enumerate() {
            for (k, bk) in self.elements.iter().enumerate() {
                g[j][k] = hs_inner(bj, bk);
            }
        }
        g
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.gram();
        let mut worst: f64 = 0.0;
        for (j, row) in g.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                let target = if j == k { ONE } else { ZERO };
                worst = worst.max((v - target).norm());
            }
        }
        worst
    }
}

impl Default for HsBasis {
    fn default() -> Self {
        Self::standard()
    }
}

/// Coefficients `c_k = Tr(B_k† m)`.
pub fn hs_decompose(m: &OperatorMatrix, basis: &HsBasis) -> [C64; 4] {
    let mut c = [ZERO; 4];
    for (ck, bk) in c.iter_mut().zip(basis.elements()) {
        *ck = hs_inner(bk, m);
    }
    c
}

/// `Σ c_k B_k`.
pub fn hs_reconstruct(coeffs: &[C64; 4], basis: &HsBasis) -> OperatorMatrix {
    coeffs
        .iter()
        .zip(basis.elements())
        .fold(OperatorMatrix::zero(), |acc, (c, b)| acc + *b * *c)
}
