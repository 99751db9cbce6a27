//! Small dense matrices for the two-field phase space.
//!
//! Everything here is 4x4 (phase space) or 2x2 (helicity blocks), stored as
//! fixed-size row-major arrays. No external linear-algebra crate is needed at
//! these sizes.

use num_complex::Complex64;

pub type C64 = Complex64;

pub const ZERO_C: C64 = C64::new(0.0, 0.0);
pub const ONE_C: C64 = C64::new(1.0, 0.0);
pub const I_C: C64 = C64::new(0.0, 1.0);

/// Real 4x4 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat4(pub [[f64; 4]; 4]);

/// Complex 4x4 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CMat4(pub [[C64; 4]; 4]);

/// Complex 2x2 matrix (helicity blocks).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CMat2(pub [[C64; 2]; 2]);

impl Mat4 {
    pub fn zeros() -> Self {
        Mat4([[0.0; 4]; 4])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            m.0[i][i] = 1.0;
        }
        m
    }

    pub fn from_int(a: &[[i64; 4]; 4]) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = a[i][j] as f64;
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    pub fn mul(&self, rhs: &Mat4) -> Mat4 {
        let mut m = Mat4::zeros();
        for i in 0..4 {
            for k in 0..4 {
                let a = self.0[i][k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..4 {
                    m.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        m
    }

    pub fn add(&self, rhs: &Mat4) -> Mat4 {
        let mut m = *self;
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] += rhs.0[i][j];
            }
        }
        m
    }

    pub fn sub(&self, rhs: &Mat4) -> Mat4 {
        let mut m = *self;
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] -= rhs.0[i][j];
            }
        }
        m
    }

    pub fn scale(&self, s: f64) -> Mat4 {
        let mut m = *self;
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] *= s;
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        let mut v: f64 = 0.0;
        for r in &self.0 {
            for x in r {
                v = v.max(x.abs());
            }
        }
        v
    }

    pub fn max_abs_diff(&self, rhs: &Mat4) -> f64 {
        self.sub(rhs).max_abs()
    }

    /// Determinant by cofactor expansion (fine at 4x4).
    pub fn det(&self) -> f64 {
        let m = &self.0;
        let det3 = |a: [[f64; 3]; 3]| -> f64 {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        };
        let minor = |row: usize, col: usize| -> f64 {
            let mut sub = [[0.0; 3]; 3];
            let mut si = 0;
            for i in 0..4 {
                if i == row {
                    continue;
                }
                let mut sj = 0;
                for j in 0..4 {
                    if j == col {
                        continue;
                    }
                    sub[si][sj] = m[i][j];
                    sj += 1;
                }
                si += 1;
            }
            det3(sub)
        };
        let mut d = 0.0;
        for j in 0..4 {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            d += sign * m[0][j] * minor(0, j);
        }
        d
    }

    pub fn to_complex(&self) -> CMat4 {
        let mut m = CMat4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = C64::new(self.0[i][j], 0.0);
            }
        }
        m
    }

    pub fn apply(&self, v: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i] += self.0[i][j] * v[j];
            }
        }
        out
    }
}

impl CMat4 {
    pub fn zeros() -> Self {
        CMat4([[ZERO_C; 4]; 4])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            m.0[i][i] = ONE_C;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        let mut m = *self;
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = m.0[i][j].conj();
            }
        }
        m
    }

    pub fn mul(&self, rhs: &CMat4) -> CMat4 {
        let mut m = CMat4::zeros();
        for i in 0..4 {
            for k in 0..4 {
                let a = self.0[i][k];
                if a == ZERO_C {
                    continue;
                }
                for j in 0..4 {
                    m.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        m
    }

    pub fn add(&self, rhs: &CMat4) -> CMat4 {
        let mut m = *self;
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] += rhs.0[i][j];
            }
        }
        m
    }

    pub fn sub(&self, rhs: &CMat4) -> CMat4 {
        let mut m = *self;
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] -= rhs.0[i][j];
            }
        }
        m
    }

    pub fn scale(&self, s: C64) -> CMat4 {
        let mut m = *self;
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] *= s;
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        let mut v: f64 = 0.0;
        for r in &self.0 {
            for x in r {
                v = v.max(x.norm());
            }
        }
        v
    }

    pub fn max_abs_diff(&self, rhs: &CMat4) -> f64 {
        self.sub(rhs).max_abs()
    }

    pub fn max_imag(&self) -> f64 {
        let mut v: f64 = 0.0;
        for r in &self.0 {
            for x in r {
                v = v.max(x.im.abs());
            }
        }
        v
    }

    pub fn real_part(&self) -> Mat4 {
        let mut m = Mat4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = self.0[i][j].re;
            }
        }
        m
    }

    pub fn block(&self, bi: usize, bj: usize) -> CMat2 {
        let mut b = CMat2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                b.0[i][j] = self.0[2 * bi + i][2 * bj + j];
            }
        }
        b
    }

    pub fn from_blocks(a: &CMat2, b: &CMat2, c: &CMat2, d: &CMat2) -> CMat4 {
        let mut m = CMat4::zeros();
        for i in 0..2 {
            for j in 0..2 {
                m.0[i][j] = a.0[i][j];
                m.0[i][j + 2] = b.0[i][j];
                m.0[i + 2][j] = c.0[i][j];
                m.0[i + 2][j + 2] = d.0[i][j];
            }
        }
        m
    }
}

impl CMat2 {
    pub fn zeros() -> Self {
        CMat2([[ZERO_C; 2]; 2])
    }

    pub fn identity() -> Self {
        CMat2([[ONE_C, ZERO_C], [ZERO_C, ONE_C]])
    }

    pub fn diag(a: C64, b: C64) -> Self {
        CMat2([[a, ZERO_C], [ZERO_C, b]])
    }

    pub fn mul(&self, rhs: &CMat2) -> CMat2 {
        let a = &self.0;
        let b = &rhs.0;
        CMat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    pub fn adjoint(&self) -> CMat2 {
        CMat2([
            [self.0[0][0].conj(), self.0[1][0].conj()],
            [self.0[0][1].conj(), self.0[1][1].conj()],
        ])
    }

    pub fn add(&self, rhs: &CMat2) -> CMat2 {
        let mut m = *self;
        for i in 0..2 {
            for j in 0..2 {
                m.0[i][j] += rhs.0[i][j];
            }
        }
        m
    }

    pub fn conj(&self) -> CMat2 {
        CMat2([
            [self.0[0][0].conj(), self.0[0][1].conj()],
            [self.0[1][0].conj(), self.0[1][1].conj()],
        ])
    }

    pub fn scale(&self, s: C64) -> CMat2 {
        let mut m = *self;
        for i in 0..2 {
            for j in 0..2 {
                m.0[i][j] *= s;
            }
        }
        m
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn max_abs_diff(&self, rhs: &CMat2) -> f64 {
        let mut v: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                v = v.max((self.0[i][j] - rhs.0[i][j]).norm());
            }
        }
        v
    }
}

/// Symplectic form with the (positions, momenta) block ordering.
pub fn omega() -> Mat4 {
    Mat4([
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [-1.0, 0.0, 0.0, 0.0],
        [0.0, -1.0, 0.0, 0.0],
    ])
}

/// Unitary map from field variables to the helicity basis, U = (1/sqrt2) [[I, iI], [I, -iI]].
pub fn helicity_u() -> CMat4 {
    let s = 1.0 / 2.0_f64.sqrt();
    let mut m = CMat4::zeros();
    for i in 0..2 {
        m.0[i][i] = C64::new(s, 0.0);
        m.0[i][i + 2] = C64::new(0.0, s);
        m.0[i + 2][i] = C64::new(s, 0.0);
        m.0[i + 2][i + 2] = C64::new(0.0, -s);
    }
    m
}

/// The helicity-basis commutator form, J = -i diag(I2, -I2) = U Omega U^dag.
pub fn j_form() -> CMat4 {
    let mut m = CMat4::zeros();
    m.0[0][0] = -I_C;
    m.0[1][1] = -I_C;
    m.0[2][2] = I_C;
    m.0[3][3] = I_C;
    m
}

/// max |M^T Omega M - Omega|
pub fn symplectic_residual(m: &Mat4) -> f64 {
    let om = omega();
    m.transpose().mul(&om).mul(m).max_abs_diff(&om)
}

/// max |M^dag J M - J|
pub fn helicity_symplectic_residual(m: &CMat4) -> f64 {
    let j = j_form();
    m.adjoint().mul(&j).mul(m).max_abs_diff(&j)
}

/// Conjugate a field-basis matrix into the helicity basis: U M U^dag.
pub fn to_helicity(m: &Mat4) -> CMat4 {
    let u = helicity_u();
    u.mul(&m.to_complex()).mul(&u.adjoint())
}

/// Inverse conjugation; the result of a physical helicity matrix is real.
pub fn from_helicity(m: &CMat4) -> CMat4 {
    let u = helicity_u();
    u.adjoint().mul(m).mul(&u)
}

/// sin(x)/x, series-evaluated near zero to avoid cancellation.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
/// Used for physicality checks on covariance matrices.
pub fn symmetric_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i][j] * m[i][j];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() < 1e-18 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}

/// Cholesky factor (lower triangular) of a symmetric positive-definite matrix.
pub fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}
