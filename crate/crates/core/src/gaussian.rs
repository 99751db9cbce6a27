//! Gaussian (phase-space) representation of the evolved vacuum: covariance
//! matrices from Bogolyubov coefficients and from squeezing parameters, the
//! 8x8 field-basis covariance behind the Wigner function, reduction to the
//! system sector, and purity.
//!
//! Units with hbar = 1: position-position spectra scale as 1/k,
//! momentum-momentum as k, cross spectra are dimensionless.

use crate::bogolyubov::BogolyubovSet;
use crate::error::{Error, Result};
use crate::linalg::{sinc, symmetric_eigenvalues, C64};
use crate::symplectic::{MixingFactors, SqueezeRotParams};

/// The three 2x2 spectra blocks of the 4x4 covariance matrix. The
/// position-position and momentum-momentum blocks are symmetric; the cross
/// block is not, and enters the 4x4 assembly transposed in the lower-left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceBlocks {
    pub phiphi: [[f64; 2]; 2],
    pub pipi: [[f64; 2]; 2],
    pub phipi: [[f64; 2]; 2],
}

impl CovarianceBlocks {
    /// Vacuum covariance: phiphi = I/(2k), pipi = k I/2.
    pub fn vacuum(k: f64) -> Self {
        CovarianceBlocks {
            phiphi: [[0.5 / k, 0.0], [0.0, 0.5 / k]],
            pipi: [[0.5 * k, 0.0], [0.0, 0.5 * k]],
            phipi: [[0.0; 2]; 2],
        }
    }

    /// Assemble the symmetric 4x4 covariance [[phiphi, phipi], [phipi^T, pipi]].
    pub fn assemble(&self) -> [[f64; 4]; 4] {
        let mut m = [[0.0; 4]; 4];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = self.phiphi[i][j];
                m[i][j + 2] = self.phipi[i][j];
                m[i + 2][j] = self.phipi[j][i];
                m[i + 2][j + 2] = self.pipi[i][j];
            }
        }
        m
    }

    /// The ten independent entries in fixed CSV order:
    /// phiphi 11,12,22; pipi 11,12,22; phipi 11,12,21,22.
    pub fn independent_entries(&self) -> [f64; 10] {
        [
            self.phiphi[0][0],
            self.phiphi[0][1],
            self.phiphi[1][1],
            self.pipi[0][0],
            self.pipi[0][1],
            self.pipi[1][1],
            self.phipi[0][0],
            self.phipi[0][1],
            self.phipi[1][0],
            self.phipi[1][1],
        ]
    }

    /// Sector-i uncertainty combination phiphi_ii * pipi_ii - phipi_ii^2.
    /// Equals 1/4 exactly on pure sector states.
    pub fn sector_determinant(&self, sector: usize) -> f64 {
        let i = sector - 1;
        self.phiphi[i][i] * self.pipi[i][i] - self.phipi[i][i] * self.phipi[i][i]
    }

    pub fn max_abs_diff(&self, rhs: &CovarianceBlocks) -> f64 {
        let a = self.assemble();
        let b = rhs.assemble();
        let mut v: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                v = v.max((a[i][j] - b[i][j]).abs());
            }
        }
        v
    }
}

/// Covariance from Bogolyubov coefficients.
///
/// The blocks are quadratic forms in alpha +- conj(beta); the cross block
/// uses the symplectic constraints to collapse to the beta-weighted
/// combinations below.
pub fn covariance_from_bogolyubov(b: &BogolyubovSet, k: f64) -> CovarianceBlocks {
    let (a11, a12, a21, a22) = (b.alpha11, b.alpha12, b.alpha21, b.alpha22);
    let (b11, b12, b21, b22) = (b.beta11, b.beta12, b.beta21, b.beta22);
    let off_plus = (b11 * (b21.conj() + a21) + b12 * (b22.conj() + a22)).re;
    let off_minus_re = (b11 * (b21.conj() - a21) + b12 * (b22.conj() - a22)).re;
    let off_minus_im = (b11 * (b21.conj() - a21) + b12 * (b22.conj() - a22)).im;
    let off_plus_im = (b11 * (b21.conj() + a21) + b12 * (b22.conj() + a22)).im;
    let phiphi = [
        [
            0.5 * ((a11 + b11.conj()).norm_sqr() + (a12 + b12.conj()).norm_sqr()) / k,
            off_plus / k,
        ],
        [
            off_plus / k,
            0.5 * ((a21 + b21.conj()).norm_sqr() + (a22 + b22.conj()).norm_sqr()) / k,
        ],
    ];
    let pipi = [
        [
            0.5 * k * ((a11 - b11.conj()).norm_sqr() + (a12 - b12.conj()).norm_sqr()),
            k * off_minus_re,
        ],
        [
            k * off_minus_re,
            0.5 * k * ((a21 - b21.conj()).norm_sqr() + (a22 - b22.conj()).norm_sqr()),
        ],
    ];
    let phipi = [
        [(a11 * b11 + a12 * b12).im, -off_minus_im],
        [off_plus_im, (a21 * b21 + a22 * b22).im],
    ];
    CovarianceBlocks {
        phiphi,
        pipi,
        phipi,
    }
}

/// Covariance directly from the squeezing and rotation parameters.
///
/// Only theta3, theta4 and the mixing combination tau enter: the phi rotation
/// leaves the vacuum invariant up to phase. Reduces to the two-mode spectra
/// at tau = 0.
pub fn covariance_from_params(p: &SqueezeRotParams, k: f64) -> Result<CovarianceBlocks> {
    if !p.is_finite() {
        return Err(Error::Domain("non-finite parameters".into()));
    }
    let f = MixingFactors::from_angles(p.theta4, p.theta5, p.theta6)?;
    let sc = sinc(f.theta);
    let t_abs = f.tau.norm();
    let tt_abs = f.tau_tilde.norm();
    let arg_tt = if tt_abs > 0.0 { f.tau_tilde.arg() } else { 0.0 };
    let arg_t = if t_abs > 0.0 { f.tau.arg() } else { 0.0 };
    let (r1, r2) = (p.r1(), p.r2());
    let (ch1, ch2) = ((2.0 * r1).cosh(), (2.0 * r2).cosh());
    let (sh1, sh2) = ((2.0 * r1).sinh(), (2.0 * r2).sinh());
    let t3 = p.theta3;
    let tt2 = tt_abs * tt_abs;
    let sct2 = sc * sc * t_abs * t_abs;
    let cross = sc * tt_abs * t_abs;

    let pp11 = 0.5 / k
        * (tt2 * (ch1 + (2.0 * t3 + 2.0 * arg_tt).cos() * sh1)
            + sct2 * (ch2 - (2.0 * t3 + 2.0 * arg_t).cos() * sh2));
    let pp22 = 0.5 / k
        * (tt2 * (ch2 + (2.0 * t3 - 2.0 * arg_tt).cos() * sh2)
            + sct2 * (ch1 - (2.0 * t3 - 2.0 * arg_t).cos() * sh1));
    let pp12 = 0.5 / k
        * cross
        * ((arg_t + arg_tt).sin() * (ch2 - ch1)
            + (2.0 * t3 - arg_t + arg_tt).sin() * sh1
            + (2.0 * t3 + arg_t - arg_tt).sin() * sh2);

    let qq11 = 0.5
        * k
        * (tt2 * (ch1 - (2.0 * t3 + 2.0 * arg_tt).cos() * sh1)
            + sct2 * (ch2 + (2.0 * t3 + 2.0 * arg_t).cos() * sh2));
    let qq22 = 0.5
        * k
        * (tt2 * (ch2 - (2.0 * t3 - 2.0 * arg_tt).cos() * sh2)
            + sct2 * (ch1 + (2.0 * t3 - 2.0 * arg_t).cos() * sh1));
    let qq12 = 0.5
        * k
        * cross
        * ((arg_t + arg_tt).sin() * (ch2 - ch1)
            - (2.0 * t3 - arg_t + arg_tt).sin() * sh1
            - (2.0 * t3 + arg_t - arg_tt).sin() * sh2);

    let pq11 = 0.5
        * (-tt2 * (2.0 * t3 + 2.0 * arg_tt).sin() * sh1
            + sct2 * (2.0 * t3 + 2.0 * arg_t).sin() * sh2);
    let pq22 = 0.5
        * (-tt2 * (2.0 * t3 - 2.0 * arg_tt).sin() * sh2
            + sct2 * (2.0 * t3 - 2.0 * arg_t).sin() * sh1);
    let pq12 = 0.5
        * cross
        * ((arg_t + arg_tt).cos() * (ch1 - ch2)
            + (2.0 * t3 - arg_t + arg_tt).cos() * sh1
            + (2.0 * t3 + arg_t - arg_tt).cos() * sh2);
    let pq21 = 0.5
        * cross
        * ((arg_t + arg_tt).cos() * (ch2 - ch1)
            + (2.0 * t3 - arg_t + arg_tt).cos() * sh1
            + (2.0 * t3 + arg_t - arg_tt).cos() * sh2);

    Ok(CovarianceBlocks {
        phiphi: [[pp11, pp12], [pp12, pp22]],
        pipi: [[qq11, qq12], [qq12, qq22]],
        phipi: [[pq11, pq12], [pq21, pq22]],
    })
}

/// Gaussian Wigner function of the full two-field state.
///
/// The 8-vector ordering is (q1k, q1-k, q2k, q2-k, p1k, p1-k, p2k, p2-k) and
/// the 8x8 covariance is Cov4 (x) I2 in that ordering, so the k and -k copies
/// are uncorrelated and identical.
#[derive(Debug, Clone)]
pub struct WignerGaussian {
    pub cov8: [[f64; 8]; 8],
}

impl WignerGaussian {
    pub fn from_blocks(cov: &CovarianceBlocks) -> Self {
        let c4 = cov.assemble();
        let mut cov8 = [[0.0; 8]; 8];
        for i in 0..4 {
            for j in 0..4 {
                cov8[2 * i][2 * j] = c4[i][j];
                cov8[2 * i + 1][2 * j + 1] = c4[i][j];
            }
        }
        WignerGaussian { cov8 }
    }

    fn det_and_inverse(&self) -> Option<(f64, [[f64; 8]; 8])> {
        // Gaussian elimination with partial pivoting on an augmented system.
        let n = 8;
        let mut a = self.cov8;
        let mut inv = [[0.0; 8]; 8];
        for (i, row) in inv.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        let mut det = 1.0;
        for col in 0..n {
            let mut piv = col;
            for r in (col + 1)..n {
                if a[r][col].abs() > a[piv][col].abs() {
                    piv = r;
                }
            }
            if a[piv][col].abs() < 1e-300 {
                return None;
            }
            if piv != col {
                a.swap(piv, col);
                inv.swap(piv, col);
                det = -det;
            }
            det *= a[col][col];
            let d = a[col][col];
            for j in 0..n {
                a[col][j] /= d;
                inv[col][j] /= d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[r][col];
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[r][j] -= f * a[col][j];
                    inv[r][j] -= f * inv[col][j];
                }
            }
        }
        Some((det, inv))
    }

    /// Evaluate the Wigner density at an 8-vector; normalized so the plain
    /// phase-space integral is 1 (expectation values then carry the (2 pi)^4
    /// weight of the Wigner-Weyl convention).
    pub fn eval(&self, q: &[f64; 8]) -> Result<f64> {
        let (det, inv) = self
            .det_and_inverse()
            .ok_or_else(|| Error::NumericalRank("singular 8x8 covariance".into()))?;
        if det <= 1e-30 {
            return Err(Error::NumericalRank(format!(
                "covariance determinant {det:.3e} below rank guard"
            )));
        }
        let mut quad = 0.0;
        for i in 0..8 {
            for j in 0..8 {
                quad += q[i] * inv[i][j] * q[j];
            }
        }
        let norm = (2.0 * std::f64::consts::PI).powi(4) * det.sqrt();
        Ok((-0.5 * quad).exp() / norm)
    }

    pub fn determinant(&self) -> Option<f64> {
        self.det_and_inverse().map(|(d, _)| d)
    }
}

/// Reduced (system sector) covariance: rows/columns 1, 2, 5, 6 of the
/// 8-vector ordering, i.e. sector-1 positions and momenta for +-k.
pub fn reduce(cov: &CovarianceBlocks) -> [[f64; 4]; 4] {
    let w = WignerGaussian::from_blocks(cov);
    let keep = [0usize, 1, 4, 5];
    let mut out = [[0.0; 4]; 4];
    for (i, &ki) in keep.iter().enumerate() {
        for (j, &kj) in keep.iter().enumerate() {
            out[i][j] = w.cov8[ki][kj];
        }
    }
    out
}

fn det4(m: &[[f64; 4]; 4]) -> f64 {
    crate::linalg::Mat4(*m).det()
}

/// Purity of a reduced Gaussian state, gamma = (16 det Cov_red)^(-1/2).
pub fn purity_gaussian(cov_red: &[[f64; 4]; 4]) -> Result<f64> {
    let det = det4(cov_red);
    if det <= 0.0 {
        return Err(Error::NumericalRank(format!(
            "reduced covariance determinant {det:.3e} not positive"
        )));
    }
    Ok(1.0 / (16.0 * det).sqrt())
}

/// Purity, symplectic eigenvalue and entanglement entropy of the system
/// sector computed directly from the parameters.
#[derive(Debug, Clone, Copy)]
pub struct PurityReport {
    pub gamma: f64,
    pub symplectic_eigenvalue: f64,
    pub entanglement_entropy: f64,
}

/// Closed-form purity in the squeezing parameters; fully non-perturbative.
pub fn purity_params(p: &SqueezeRotParams) -> Result<PurityReport> {
    let f = MixingFactors::from_angles(p.theta4, p.theta5, p.theta6)?;
    let sc = sinc(f.theta);
    let t2 = f.tau.norm_sqr();
    let tt2 = f.tau_tilde.norm_sqr();
    let (r1, r2) = (p.r1(), p.r2());
    let phase = if f.tau.norm() > 0.0 {
        (2.0 * f.tau_tilde.arg() - 2.0 * f.tau.arg()).cos()
    } else {
        0.0
    };
    let bracket = (2.0 * r1).cosh() * (2.0 * r2).cosh() + phase * (2.0 * r1).sinh() * (2.0 * r2).sinh();
    let denom = tt2 * tt2 + sc.powi(4) * t2 * t2 + 2.0 * sc * sc * t2 * tt2 * bracket;
    let gamma = 1.0 / denom;
    Ok(report_from_gamma(gamma))
}

pub fn report_from_gamma(gamma: f64) -> PurityReport {
    let sigma = 0.5 / gamma.sqrt();
    // entanglement entropy of a one-mode Gaussian state, in bits
    let ent = if sigma > 0.5 + 1e-14 {
        (sigma + 0.5) * (sigma + 0.5).log2() - (sigma - 0.5) * (sigma - 0.5).log2()
    } else {
        0.0
    };
    PurityReport {
        gamma,
        symplectic_eigenvalue: sigma,
        entanglement_entropy: ent,
    }
}

/// Second-order (in |tau|) expansions of the system-sector spectra, with the
/// off-sector entries filled by the exact sector-swap symmetry and the cross
/// entries to leading order.
pub fn spectra_perturbative(p: &SqueezeRotParams, k: f64) -> Result<CovarianceBlocks> {
    if !p.is_finite() {
        return Err(Error::Domain("non-finite parameters".into()));
    }
    let tau = p.tau();
    let t2 = tau.norm_sqr();
    let arg_t = if tau.norm() > 0.0 { tau.arg() } else { 0.0 };
    let (r1, r2) = (p.r1(), p.r2());
    let (pp11, qq11, pq11) =
        sector_spectra_o2(k, p.theta3, p.theta4, arg_t, t2, r1, r2);
    // sector 2 by the swap r1 <-> r2, theta4 -> -theta4, arg tau -> -arg tau
    let (pp22_over, qq22_over, pq22) =
        sector_spectra_o2(k, p.theta3, -p.theta4, -arg_t, t2, r2, r1);
    // cross entries to leading (linear) order in |tau|
    let t_abs = t2.sqrt();
    let sc4 = sinc(p.theta4);
    let cross = sc4 * t_abs;
    let t3 = p.theta3;
    let (ch1, ch2) = ((2.0 * r1).cosh(), (2.0 * r2).cosh());
    let (sh1, sh2) = ((2.0 * r1).sinh(), (2.0 * r2).sinh());
    let pp12 = 0.5 / k
        * cross
        * ((arg_t + p.theta4).sin() * (ch2 - ch1)
            + (2.0 * t3 - arg_t + p.theta4).sin() * sh1
            + (2.0 * t3 + arg_t - p.theta4).sin() * sh2);
    let qq12 = 0.5
        * k
        * cross
        * ((arg_t + p.theta4).sin() * (ch2 - ch1)
            - (2.0 * t3 - arg_t + p.theta4).sin() * sh1
            - (2.0 * t3 + arg_t - p.theta4).sin() * sh2);
    let pq12 = 0.5
        * cross
        * ((arg_t + p.theta4).cos() * (ch1 - ch2)
            + (2.0 * t3 - arg_t + p.theta4).cos() * sh1
            + (2.0 * t3 + arg_t - p.theta4).cos() * sh2);
    let pq21 = 0.5
        * cross
        * ((arg_t + p.theta4).cos() * (ch2 - ch1)
            + (2.0 * t3 - arg_t + p.theta4).cos() * sh1
            + (2.0 * t3 + arg_t - p.theta4).cos() * sh2);
    Ok(CovarianceBlocks {
        phiphi: [[pp11, pp12], [pp12, pp22_over]],
        pipi: [[qq11, qq12], [qq12, qq22_over]],
        phipi: [[pq11, pq12], [pq21, pq22]],
    })
}

/// g1 = [cos x - cos(x + 2 t4) - 2 t4 sin(x + 2 t4)] / (2 t4^2), series-safe.
fn g1(t4: f64, x: f64) -> f64 {
    if t4.abs() > 1e-3 {
        ((x + t4).sin() * t4.sin() - t4 * (x + 2.0 * t4).sin()) / (t4 * t4)
    } else {
        -x.cos() * (1.0 - t4 * t4) + (4.0 / 3.0) * t4 * x.sin()
    }
}

/// g2 = [-sin x + sin(x + 2 t4) - 2 t4 cos(x + 2 t4)] / (2 t4^2), series-safe.
fn g2(t4: f64, x: f64) -> f64 {
    if t4.abs() > 1e-3 {
        ((x + t4).cos() * t4.sin() - t4 * (x + 2.0 * t4).cos()) / (t4 * t4)
    } else {
        x.sin() * (1.0 - t4 * t4) + (4.0 / 3.0) * t4 * x.cos()
    }
}

fn sector_spectra_o2(
    k: f64,
    t3: f64,
    t4: f64,
    arg_t: f64,
    t2: f64,
    r1: f64,
    r2: f64,
) -> (f64, f64, f64) {
    let x = 2.0 * t3;
    let sc2 = sinc(t4) * sinc(t4);
    let (ch1, ch2) = ((2.0 * r1).cosh(), (2.0 * r2).cosh());
    let (sh1, sh2) = ((2.0 * r1).sinh(), (2.0 * r2).sinh());
    let base_pp = ch1 + (x + 2.0 * t4).cos() * sh1;
    let base_qq = ch1 - (x + 2.0 * t4).cos() * sh1;
    let base_pq = -(x + 2.0 * t4).sin() * sh1;
    let corr_pp = -sc2 * ch1 + g1(t4, x) * sh1 + sc2 * (ch2 - (x + 2.0 * arg_t).cos() * sh2);
    let corr_qq = -sc2 * ch1 - g1(t4, x) * sh1 + sc2 * (ch2 + (x + 2.0 * arg_t).cos() * sh2);
    let corr_pq = g2(t4, x) * sh1 + sc2 * (x + 2.0 * arg_t).sin() * sh2;
    (
        0.5 / k * (base_pp + t2 * corr_pp),
        0.5 * k * (base_qq + t2 * corr_qq),
        0.5 * (base_pq + t2 * corr_pq),
    )
}

/// Physicality check: eigenvalues of Cov + (i/2) Omega as an 8x8 real
/// symmetric problem; all must be >= -tol.
pub fn uncertainty_eigen_min(cov: &CovarianceBlocks) -> f64 {
    // Hermitian H = Cov + (i/2) Omega embedded as [[Re, -Im], [Im, Re]].
    let c = cov.assemble();
    let om = crate::linalg::omega();
    let mut big = vec![vec![0.0; 8]; 8];
    for i in 0..4 {
        for j in 0..4 {
            big[i][j] = c[i][j];
            big[i + 4][j + 4] = c[i][j];
            big[i][j + 4] = -0.5 * om.0[i][j];
            big[i + 4][j] = 0.5 * om.0[i][j];
        }
    }
    let eig = symmetric_eigenvalues(&big);
    eig[0]
}

/// CSV header for spectra output.
pub const SPECTRA_CSV_HEADER: &str = "k,cov_phiphi_11,cov_phiphi_12,cov_phiphi_22,cov_pipi_11,cov_pipi_12,cov_pipi_22,cov_phipi_11,cov_phipi_12,cov_phipi_21,cov_phipi_22,gamma,sigma,s_ent";

pub fn spectra_csv_row(k: f64, cov: &CovarianceBlocks, rep: &PurityReport) -> String {
    let e = cov.independent_entries();
    let mut s = format!("{k:.16e}");
    for v in e {
        s.push_str(&format!(",{v:.16e}"));
    }
    s.push_str(&format!(
        ",{:.16e},{:.16e},{:.16e}",
        rep.gamma, rep.symplectic_eigenvalue, rep.entanglement_entropy
    ));
    s
}

/// Complex helper kept public for cross-module tests.
pub fn tau_of(p: &SqueezeRotParams) -> C64 {
    p.tau()
}
