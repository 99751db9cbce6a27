//! Time-dependent quadratic Hamiltonian kernels, Green-matrix integration of
//! the canonical equations, the cosmological two-field example, and
//! extraction of squeezing/rotation parameters along trajectories.

use num_complex::Complex64 as C64;

use crate::bogolyubov::BogolyubovSet;
use crate::error::{Error, Result};
use crate::linalg::{helicity_u, omega, symplectic_residual, CMat2, CMat4, Mat4};
use crate::symplectic::{
    decompose_bloch_messiah_helicity, generator, rotation_block, Basis, SqueezeRotParams,
};

/// The ten real parameters of one helicity-basis Hamiltonian kernel sample:
/// harmonic frequencies F, parametric amplitudes R, the transfer/entangling
/// couplings F12/R12 and their phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianParams {
    pub f1: f64,
    pub f2: f64,
    pub f12: f64,
    pub r1: f64,
    pub r2: f64,
    pub r12: f64,
    pub phi: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub xi: f64,
}

impl HamiltonianParams {
    pub fn zero() -> Self {
        HamiltonianParams {
            f1: 0.0,
            f2: 0.0,
            f12: 0.0,
            r1: 0.0,
            r2: 0.0,
            r12: 0.0,
            phi: 0.0,
            theta1: 0.0,
            theta2: 0.0,
            xi: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        [
            self.f1,
            self.f2,
            self.f12,
            self.r1,
            self.r2,
            self.r12,
            self.phi,
            self.theta1,
            self.theta2,
            self.xi,
        ]
        .iter()
        .all(|x| x.is_finite())
    }

    /// Whether only the harmonic terms are present (the Fock construction
    /// requires this at the initial time).
    pub fn is_harmonic_only(&self, tol: f64) -> bool {
        self.r1.abs() <= tol && self.r2.abs() <= tol && self.r12.abs() <= tol
            && self.f12.abs() <= tol
    }

    pub fn as_array(&self) -> [f64; 10] {
        [
            self.f1,
            self.f2,
            self.f12,
            self.phi,
            self.r1,
            self.r2,
            self.r12,
            self.theta1,
            self.theta2,
            self.xi,
        ]
    }
}

/// Helicity-basis kernel with block layout [[a, b], [conj b, conj a]]:
/// a Hermitian (harmonic + transfer), b symmetric (parametric + entangling).
pub fn kernel_matrix(p: &HamiltonianParams) -> CMat4 {
    let a = CMat2([
        [
            C64::new(p.f1, 0.0),
            C64::new(p.f12, 0.0) * C64::new(0.0, p.phi).exp(),
        ],
        [
            C64::new(p.f12, 0.0) * C64::new(0.0, -p.phi).exp(),
            C64::new(p.f2, 0.0),
        ],
    ]);
    let b = CMat2([
        [
            C64::new(p.r1, 0.0) * C64::new(0.0, p.theta1).exp(),
            C64::new(p.r12, 0.0) * C64::new(0.0, p.xi).exp(),
        ],
        [
            C64::new(p.r12, 0.0) * C64::new(0.0, p.xi).exp(),
            C64::new(p.r2, 0.0) * C64::new(0.0, p.theta2).exp(),
        ],
    ]);
    CMat4::from_blocks(&a, &b, &b.conj(), &a.conj())
}

/// Field-basis kernel for the canonical variables at wavenumber k,
/// H = D^T N D with N the real symmetric matrix conjugate to the helicity
/// kernel and D = diag(sqrt(k) I, I/sqrt(k)).
pub fn kernel_field_basis(p: &HamiltonianParams, k: f64) -> Mat4 {
    // N blocks: A = Re a + Re b, B = Re a - Re b, C = Im b - Im a
    let h = kernel_matrix(p);
    let a = h.block(0, 0);
    let b = h.block(0, 1);
    let mut n = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let re_a = a.0[i][j].re;
            let im_a = a.0[i][j].im;
            let re_b = b.0[i][j].re;
            let im_b = b.0[i][j].im;
            n.0[i][j] = (re_a + re_b) * k;
            n.0[i + 2][j + 2] = (re_a - re_b) / k;
            n.0[i][j + 2] = im_b - im_a;
        }
    }
    // lower-left is the transpose of upper-right
    for i in 0..2 {
        for j in 0..2 {
            n.0[i + 2][j] = n.0[j][i + 2];
        }
    }
    n
}

/// Least-squares decomposition of a complex 4x4 matrix onto the helicity
/// generators with real coefficients; returns (coefficients, residual).
pub fn decompose_on_helicity_generators(m: &CMat4) -> Result<([f64; 10], f64)> {
    let mut basis = Vec::with_capacity(10);
    for i in 1..=10 {
        basis.push(generator(i, Basis::Helicity)?);
    }
    // normal equations on the 32-real-dimensional flattening
    let mut gram = [[0.0f64; 10]; 10];
    let mut rhs = [0.0f64; 10];
    for (i, bi) in basis.iter().enumerate() {
        for (j, bj) in basis.iter().enumerate() {
            let mut acc = 0.0;
            for r in 0..4 {
                for c in 0..4 {
                    acc += bi.0[r][c].re * bj.0[r][c].re + bi.0[r][c].im * bj.0[r][c].im;
                }
            }
            gram[i][j] = acc;
        }
        let mut acc = 0.0;
        for r in 0..4 {
            for c in 0..4 {
                acc += bi.0[r][c].re * m.0[r][c].re + bi.0[r][c].im * m.0[r][c].im;
            }
        }
        rhs[i] = acc;
    }
    // Gaussian elimination with partial pivoting
    let mut aug = [[0.0f64; 11]; 10];
    for i in 0..10 {
        aug[i][..10].copy_from_slice(&gram[i]);
        aug[i][10] = rhs[i];
    }
    for col in 0..10 {
        let mut piv = col;
        for r in (col + 1)..10 {
            if aug[r][col].abs() > aug[piv][col].abs() {
                piv = r;
            }
        }
        if aug[piv][col].abs() < 1e-300 {
            return Err(Error::NumericalRank("generator basis degenerate".into()));
        }
        aug.swap(piv, col);
        let d = aug[col][col];
        for j in col..11 {
            aug[col][j] /= d;
        }
        for r in 0..10 {
            if r == col {
                continue;
            }
            let f = aug[r][col];
            for j in col..11 {
                aug[r][j] -= f * aug[col][j];
            }
        }
    }
    let mut coeffs = [0.0; 10];
    for i in 0..10 {
        coeffs[i] = aug[i][10];
    }
    let mut recon = CMat4::zeros();
    for (i, bi) in basis.iter().enumerate() {
        recon = recon.add(&bi.scale(C64::new(coeffs[i], 0.0)));
    }
    Ok((coeffs, recon.max_abs_diff(m)))
}

/// Closed-form scale factors for the cosmological example.
#[derive(Debug, Clone)]
pub enum ScaleFactor {
    /// a(eta) = -1/(H eta) on eta < 0.
    DeSitter { hubble: f64 },
    /// a(eta) = a0 (eta/eta0)^power on eta/eta0 > 0.
    PowerLaw { a0: f64, eta0: f64, power: f64 },
    /// Tabulated (eta, a, a'') with linear interpolation.
    Table { rows: Vec<(f64, f64, f64)> },
}

impl ScaleFactor {
    /// (a, a'') at conformal time eta.
    pub fn evaluate(&self, eta: f64) -> Result<(f64, f64)> {
        match self {
            ScaleFactor::DeSitter { hubble } => {
                if eta >= 0.0 {
                    return Err(Error::Domain(format!(
                        "de Sitter scale factor needs eta < 0, got {eta}"
                    )));
                }
                let a = -1.0 / (hubble * eta);
                let app = -2.0 / (hubble * eta * eta * eta);
                Ok((a, app))
            }
            ScaleFactor::PowerLaw { a0, eta0, power } => {
                let x = eta / eta0;
                if x <= 0.0 {
                    return Err(Error::Domain(format!(
                        "power-law scale factor needs eta/eta0 > 0, got {x}"
                    )));
                }
                let a = a0 * x.powf(*power);
                let app = a0 * power * (power - 1.0) * x.powf(power - 2.0) / (eta0 * eta0);
                Ok((a, app))
            }
            ScaleFactor::Table { rows } => {
                if rows.len() < 2 {
                    return Err(Error::Domain("scale-factor table needs >= 2 rows".into()));
                }
                let first = rows.first().unwrap();
                let last = rows.last().unwrap();
                if eta < first.0 || eta > last.0 {
                    return Err(Error::Domain(format!(
                        "eta {eta} outside table range [{}, {}]",
                        first.0, last.0
                    )));
                }
                let pos = rows.partition_point(|r| r.0 <= eta).min(rows.len() - 1);
                let (lo, hi) = (&rows[pos - 1], &rows[pos]);
                let w = if hi.0 > lo.0 {
                    (eta - lo.0) / (hi.0 - lo.0)
                } else {
                    0.0
                };
                Ok((lo.1 + w * (hi.1 - lo.1), lo.2 + w * (hi.2 - lo.2)))
            }
        }
    }
}

/// Two conformally coupled massless fields with a bilinear coupling lambda^2
/// on a homogeneous background.
#[derive(Debug, Clone)]
pub struct CosmologyModel {
    pub zeta: f64,
    pub lambda: f64,
    pub scale_factor: ScaleFactor,
    pub k: f64,
}

/// Kernel parameters at conformal time eta:
/// k R_i = (a^2/2) R zeta - a''/(2a) with R = 6 a''/a^3, k F_i = k^2 + k R_i,
/// F12 = R12 = lambda^2 a^2 / (2k), all phases zero.
pub fn cosmology_kernel(model: &CosmologyModel, eta: f64) -> Result<HamiltonianParams> {
    let (a, app) = model.scale_factor.evaluate(eta)?;
    if a <= 0.0 {
        return Err(Error::Domain(format!("scale factor a({eta}) = {a} <= 0")));
    }
    let k = model.k;
    let r_i = (3.0 * model.zeta - 0.5) * (app / a) / k;
    let coupling = model.lambda * model.lambda * a * a / (2.0 * k);
    Ok(HamiltonianParams {
        f1: k + r_i,
        f2: k + r_i,
        f12: coupling,
        r1: r_i,
        r2: r_i,
        r12: coupling,
        phi: 0.0,
        theta1: 0.0,
        theta2: 0.0,
        xi: 0.0,
    })
}

/// Integrated Green trajectory: field-basis and helicity matrices plus
/// continuity-anchored Bloch-Messiah parameters on a uniform grid.
#[derive(Debug, Clone)]
pub struct GreenTrajectory {
    pub k: f64,
    pub times: Vec<f64>,
    pub field: Vec<Mat4>,
    pub helicity: Vec<CMat4>,
    pub params: Vec<SqueezeRotParams>,
    /// Largest pre-correction symplectic defect seen during integration.
    pub max_uncorrected_drift: f64,
    /// Largest post-correction defect over the stored grid.
    pub max_residual: f64,
}

/// Restore exact symplecticity: G <- G E^{-1/2} with E = -Omega G^T Omega G,
/// evaluated by a binomial series in the defect and iterated to round-off.
fn project_symplectic(g: &Mat4) -> Mat4 {
    let om = omega();
    let ident = Mat4::identity();
    let mut g = *g;
    for _ in 0..4 {
        let e = om.mul(&g.transpose()).mul(&om).mul(&g).scale(-1.0);
        let delta = e.sub(&ident);
        let defect = delta.max_abs();
        if defect < 1e-15 {
            break;
        }
        // E^{-1/2} = I - d/2 + 3 d^2/8 - 5 d^3/16 + ...
        let d2 = delta.mul(&delta);
        let d3 = d2.mul(&delta);
        let corr = ident
            .sub(&delta.scale(0.5))
            .add(&d2.scale(3.0 / 8.0))
            .sub(&d3.scale(5.0 / 16.0));
        g = g.mul(&corr);
    }
    g
}

fn to_helicity_scaled(g: &Mat4, k: f64) -> CMat4 {
    let sk = k.sqrt();
    let mut d = Mat4::zeros();
    let mut dinv = Mat4::zeros();
    for i in 0..2 {
        d.0[i][i] = sk;
        d.0[i + 2][i + 2] = 1.0 / sk;
        dinv.0[i][i] = 1.0 / sk;
        dinv.0[i + 2][i + 2] = sk;
    }
    let u = helicity_u();
    let scaled = d.mul(g).mul(&dinv).to_complex();
    u.mul(&scaled).mul(&u.adjoint())
}

/// Integrate dG/dt = Omega H(t) G from the identity with the classical
/// fourth-order one-step method and per-step symplectic restoration.
pub fn evolve_green<F>(
    kernel: F,
    k: f64,
    t_in: f64,
    t_end: f64,
    steps: usize,
) -> Result<GreenTrajectory>
where
    F: Fn(f64) -> Result<HamiltonianParams>,
{
    if steps == 0 {
        return Err(Error::Domain("steps must be >= 1".into()));
    }
    if !(t_end > t_in) {
        return Err(Error::Domain(format!(
            "need t_end > t_in, got [{t_in}, {t_end}]"
        )));
    }
    if !(k > 0.0) {
        return Err(Error::Domain(format!("wavenumber must be positive: {k}")));
    }
    let h = (t_end - t_in) / steps as f64;
    let om = omega();
    let rhs = |t: f64, g: &Mat4| -> Result<Mat4> {
        let p = kernel(t)?;
        if !p.is_finite() {
            return Err(Error::Integration {
                t,
                reason: "non-finite kernel parameters".into(),
            });
        }
        Ok(om.mul(&kernel_field_basis(&p, k)).mul(g))
    };
    let mut g = Mat4::identity();
    let mut times = Vec::with_capacity(steps + 1);
    let mut field = Vec::with_capacity(steps + 1);
    times.push(t_in);
    field.push(g);
    let mut max_drift: f64 = 0.0;
    for step in 0..steps {
        let t = t_in + step as f64 * h;
        let k1 = rhs(t, &g)?;
        let k2 = rhs(t + h / 2.0, &g.add(&k1.scale(h / 2.0)))?;
        let k3 = rhs(t + h / 2.0, &g.add(&k2.scale(h / 2.0)))?;
        let k4 = rhs(t + h, &g.add(&k3.scale(h)))?;
        g = g.add(
            &k1.add(&k2.scale(2.0))
                .add(&k3.scale(2.0))
                .add(&k4)
                .scale(h / 6.0),
        );
        max_drift = max_drift.max(symplectic_residual(&g));
        g = project_symplectic(&g);
        times.push(t_in + (step + 1) as f64 * h);
        field.push(g);
    }
    let helicity: Vec<CMat4> = field.iter().map(|m| to_helicity_scaled(m, k)).collect();
    let mut params = Vec::with_capacity(field.len());
    let mut max_residual: f64 = 0.0;
    for (i, m) in helicity.iter().enumerate() {
        max_residual = max_residual.max(crate::linalg::helicity_symplectic_residual(m));
        let raw = decompose_bloch_messiah_helicity(m).map_err(|e| Error::Integration {
            t: times[i],
            reason: format!("parameter extraction failed: {e}"),
        })?;
        let anchored = match params.last() {
            None => raw,
            Some(prev) => anchor_params(prev, &raw),
        };
        params.push(anchored);
    }
    Ok(GreenTrajectory {
        k,
        times,
        field,
        helicity,
        params,
        max_uncorrected_drift: max_drift,
        max_residual,
    })
}

/// Nearest equivalent representation of a rotation (x3, su2 angles) to a
/// previous sample: x3 may shift by pi with a compensating SU(2) sign flip,
/// and the SU(2) log has a reflected branch.
fn anchor_rotation(
    prev: (f64, f64, f64, f64),
    raw: (f64, f64, f64, f64),
) -> (f64, f64, f64, f64) {
    let q = rotation_block(0.0, raw.1, raw.2, raw.3);
    let dist = |c: &(f64, f64, f64, f64)| -> f64 {
        (c.0 - prev.0).abs() + (c.1 - prev.1).abs() + (c.2 - prev.2).abs() + (c.3 - prev.3).abs()
    };
    let mut best = raw;
    let mut best_d = dist(&raw);
    for j in [-2i32, -1, 0, 1, 2] {
        let x3 = raw.0 + j as f64 * std::f64::consts::PI;
        let sign = if j.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let qj = q.scale(C64::new(sign, 0.0));
        for (t4, t5, t6) in crate::symplectic::su2_log_branches(&qj) {
            let cand = (x3, t4, t5, t6);
            let d = dist(&cand);
            if d < best_d {
                best = cand;
                best_d = d;
            }
        }
    }
    best
}

fn anchor_params(prev: &SqueezeRotParams, raw: &SqueezeRotParams) -> SqueezeRotParams {
    let (t3, t4, t5, t6) = anchor_rotation(
        (prev.theta3, prev.theta4, prev.theta5, prev.theta6),
        (raw.theta3, raw.theta4, raw.theta5, raw.theta6),
    );
    let (f3, f4, f5, f6) = anchor_rotation(
        (prev.phi3, prev.phi4, prev.phi5, prev.phi6),
        (raw.phi3, raw.phi4, raw.phi5, raw.phi6),
    );
    SqueezeRotParams {
        theta3: t3,
        theta4: t4,
        theta5: t5,
        theta6: t6,
        d1: raw.d1,
        d2: raw.d2,
        phi3: f3,
        phi4: f4,
        phi5: f5,
        phi6: f6,
    }
}

impl GreenTrajectory {
    /// Grid index of a stored time (within a relative tolerance).
    pub fn index_of_time(&self, t: f64) -> Result<usize> {
        let span = self.times.last().unwrap() - self.times[0];
        let tol = 1e-9 * span.max(1.0);
        match self
            .times
            .iter()
            .position(|&x| (x - t).abs() <= tol)
        {
            Some(i) => Ok(i),
            None => Err(Error::Domain(format!("time {t} not on the stored grid"))),
        }
    }

    pub fn bogolyubov_at(&self, index: usize) -> Result<BogolyubovSet> {
        BogolyubovSet::from_matrix(&self.helicity[index])
    }

    /// Largest beta coefficient over the trajectory (particle creation).
    pub fn max_beta(&self) -> f64 {
        self.helicity
            .iter()
            .map(|m| {
                BogolyubovSet::from_blocks(&m.block(0, 0), &m.block(0, 1)).max_beta()
            })
            .fold(0.0, f64::max)
    }
}

/// Continuity-anchored parameters at a stored grid time.
pub fn extract_params(traj: &GreenTrajectory, t: f64) -> Result<SqueezeRotParams> {
    let i = traj.index_of_time(t)?;
    Ok(traj.params[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{helicity_symplectic_residual, j_form};
    use crate::symplectic::compose_bloch_messiah;

    #[test]
    fn harmonic_kernel_blocks() {
        let mut p = HamiltonianParams::zero();
        p.f1 = 1.3;
        p.f2 = 1.3;
        let h = kernel_matrix(&p);
        let a = h.block(0, 0);
        assert!((a.0[0][0] - C64::new(1.3, 0.0)).norm() < 1e-15);
        assert!(a.0[0][1].norm() < 1e-15);
        assert!(h.block(0, 1).max_abs_diff(&CMat2::zeros()) < 1e-15);
        assert!(p.is_harmonic_only(0.0));
    }

    #[test]
    fn kernel_matches_cosmology_couplings() {
        let model = CosmologyModel {
            zeta: 0.11,
            lambda: 0.4,
            scale_factor: ScaleFactor::DeSitter { hubble: 1.0 },
            k: 1.7,
        };
        let eta = -2.3;
        let p = cosmology_kernel(&model, eta).unwrap();
        let (a, _) = model.scale_factor.evaluate(eta).unwrap();
        let expect = model.lambda.powi(2) * a * a / (2.0 * model.k);
        assert!((p.f12 - expect).abs() < 1e-14);
        assert!((p.r12 - expect).abs() < 1e-14);
        assert_eq!(p.phi, 0.0);
        assert_eq!(p.xi, 0.0);
    }

    #[test]
    fn conformal_coupling_removes_parametric_term() {
        let model = CosmologyModel {
            zeta: 1.0 / 6.0,
            lambda: 0.0,
            scale_factor: ScaleFactor::DeSitter { hubble: 1.0 },
            k: 2.0,
        };
        let p = cosmology_kernel(&model, -1.5).unwrap();
        assert!(p.r1.abs() < 1e-14);
        assert!((p.f1 - model.k).abs() < 1e-13);
        assert!(p.is_harmonic_only(1e-14));
    }

    #[test]
    fn constant_scale_factor_no_amplification() {
        let model = CosmologyModel {
            zeta: 0.3,
            lambda: 0.0,
            scale_factor: ScaleFactor::Table {
                rows: vec![(-10.0, 2.0, 0.0), (0.0, 2.0, 0.0)],
            },
            k: 1.0,
        };
        let p = cosmology_kernel(&model, -5.0).unwrap();
        assert_eq!(p.r1, 0.0);
        assert_eq!(p.f1, model.k);
    }

    #[test]
    fn de_sitter_parametric_value() {
        // zeta = 0, k = 1, eta = -1: k R_i = -a''/(2a) = -1/eta^2 = -1
        let model = CosmologyModel {
            zeta: 0.0,
            lambda: 0.0,
            scale_factor: ScaleFactor::DeSitter { hubble: 1.0 },
            k: 1.0,
        };
        let p = cosmology_kernel(&model, -1.0).unwrap();
        assert!((p.r1 - (-1.0)).abs() < 1e-14);
    }

    #[test]
    fn negative_scale_factor_rejected() {
        let model = CosmologyModel {
            zeta: 0.1,
            lambda: 0.0,
            scale_factor: ScaleFactor::Table {
                rows: vec![(-1.0, -2.0, 0.0), (0.0, -2.0, 0.0)],
            },
            k: 1.0,
        };
        assert!(matches!(
            cosmology_kernel(&model, -0.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn jh_lies_in_the_helicity_algebra() {
        let p = HamiltonianParams {
            f1: 1.2,
            f2: 0.8,
            f12: 0.3,
            r1: 0.4,
            r2: 0.25,
            r12: 0.15,
            phi: 0.3,
            theta1: -0.2,
            theta2: 0.6,
            xi: 0.1,
        };
        let jh = j_form().mul(&kernel_matrix(&p));
        let (_, residual) = decompose_on_helicity_generators(&jh).unwrap();
        assert!(residual < 1e-12, "residual {residual}");
    }

    #[test]
    fn zero_kernel_keeps_identity() {
        let traj = evolve_green(|_| Ok(HamiltonianParams::zero()), 1.0, 0.0, 2.0, 40).unwrap();
        for g in &traj.field {
            assert!(g.max_abs_diff(&Mat4::identity()) < 1e-13);
        }
        for p in &traj.params {
            assert!(p.as_array().iter().all(|x| x.abs() < 1e-7));
        }
    }

    #[test]
    fn constant_harmonic_kernel_is_phase_rotation() {
        let k = 1.4;
        let mut hp = HamiltonianParams::zero();
        hp.f1 = k;
        hp.f2 = k;
        let span = 1.1;
        let traj = evolve_green(move |_| Ok(hp), k, 0.0, span, 400).unwrap();
        let m = traj.helicity.last().unwrap();
        // annihilation block should be e^{-i k t} I2
        let expect = C64::new(0.0, -k * span).exp();
        assert!((m.block(0, 0).0[0][0] - expect).norm() < 1e-9);
        assert!((m.block(0, 0).0[1][1] - expect).norm() < 1e-9);
        assert!(m.block(0, 1).max_abs_diff(&CMat2::zeros()) < 1e-9);
        assert!(traj.max_beta() < 1e-9);
    }

    #[test]
    fn conformal_cosmology_has_no_particle_creation() {
        let model = CosmologyModel {
            zeta: 1.0 / 6.0,
            lambda: 0.0,
            scale_factor: ScaleFactor::DeSitter { hubble: 1.0 },
            k: 1.0,
        };
        let traj = evolve_green(
            |eta| cosmology_kernel(&model, eta),
            model.k,
            -8.0,
            -0.4,
            1200,
        )
        .unwrap();
        assert!(traj.max_beta() < 1e-8, "max beta {}", traj.max_beta());
    }

    #[test]
    fn trajectory_symplectic_and_unit_determinant() {
        let model = CosmologyModel {
            zeta: 0.0,
            lambda: 0.35,
            scale_factor: ScaleFactor::DeSitter { hubble: 1.0 },
            k: 1.0,
        };
        let traj = evolve_green(
            |eta| cosmology_kernel(&model, eta),
            model.k,
            -12.0,
            -0.8,
            1500,
        )
        .unwrap();
        for g in &traj.field {
            assert!(symplectic_residual(g) < 1e-8);
            assert!((g.det() - 1.0).abs() < 1e-8);
        }
        for m in &traj.helicity {
            assert!(helicity_symplectic_residual(m) < 1e-8);
        }
    }

    #[test]
    fn extracted_params_reproduce_helicity_matrix() {
        let model = CosmologyModel {
            zeta: 0.0,
            lambda: 0.4,
            scale_factor: ScaleFactor::DeSitter { hubble: 1.0 },
            k: 1.0,
        };
        let traj = evolve_green(
            |eta| cosmology_kernel(&model, eta),
            model.k,
            -10.0,
            -0.5,
            1000,
        )
        .unwrap();
        for idx in [0, 250, 500, 999] {
            let p = extract_params(&traj, traj.times[idx]).unwrap();
            let back = compose_bloch_messiah(&p, Basis::Helicity).unwrap();
            assert!(
                back.max_abs_diff(&traj.helicity[idx]) < 1e-8,
                "index {idx}"
            );
            let b1 = traj.bogolyubov_at(idx).unwrap();
            let b2 = crate::bogolyubov::from_params(&p).unwrap();
            assert!((b1.alpha11 - b2.alpha11).norm() < 1e-8);
            assert!((b1.beta12 - b2.beta12).norm() < 1e-8);
        }
    }

    #[test]
    fn initial_time_is_identity_and_params_zero() {
        let model = CosmologyModel {
            zeta: 0.0,
            lambda: 0.3,
            scale_factor: ScaleFactor::DeSitter { hubble: 1.0 },
            k: 1.0,
        };
        let traj =
            evolve_green(|eta| cosmology_kernel(&model, eta), model.k, -6.0, -1.0, 200).unwrap();
        assert!(traj.field[0].max_abs_diff(&Mat4::identity()) == 0.0);
        assert!(traj.params[0].as_array().iter().all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn synthetic_pure_squeezing_extraction() {
        // trajectory of exp(r(t) L2): extracted d2 must follow r(t)
        let mut prev: Option<SqueezeRotParams> = None;
        for step in 0..=20 {
            let r = 0.05 * step as f64;
            let m = crate::symplectic::exp_generator_helicity(2, r).unwrap();
            let raw = decompose_bloch_messiah_helicity(&m).unwrap();
            let anchored = match &prev {
                None => raw,
                Some(pv) => anchor_params(pv, &raw),
            };
            assert!((anchored.d2 - r).abs() < 1e-9, "step {step}");
            assert!(anchored.d1.abs() < 1e-9);
            assert!(anchored.theta4.abs() < 1e-7);
            prev = Some(anchored);
        }
    }

    #[test]
    fn anchoring_removes_branch_jumps() {
        // pure phase rotation: theta3(t) = k t grows far past the principal
        // branch; the anchored series must stay continuous
        let k = 1.0;
        let mut hp = HamiltonianParams::zero();
        hp.f1 = k;
        hp.f2 = k;
        let traj = evolve_green(move |_| Ok(hp), k, 0.0, 6.0, 600).unwrap();
        let mut prev = traj.params[0].theta3 + traj.params[0].phi3;
        for p in &traj.params[1..] {
            let cur = p.theta3 + p.phi3;
            assert!(
                (cur - prev).abs() < 0.1,
                "jump from {prev} to {cur} in total phase"
            );
            prev = cur;
        }
    }

    #[test]
    fn integrator_order_at_least_four() {
        let model = CosmologyModel {
            zeta: 0.0,
            lambda: 0.4,
            scale_factor: ScaleFactor::DeSitter { hubble: 1.0 },
            k: 1.0,
        };
        let run = |steps: usize| {
            evolve_green(
                |eta| cosmology_kernel(&model, eta),
                model.k,
                -6.0,
                -1.0,
                steps,
            )
            .unwrap()
            .field
            .last()
            .copied()
            .unwrap()
        };
        let reference = run(6400);
        let e1 = run(100).max_abs_diff(&reference);
        let e2 = run(200).max_abs_diff(&reference);
        let order = (e1 / e2).log2();
        assert!(order >= 3.9, "measured order {order} (e1 {e1}, e2 {e2})");
    }

    #[test]
    fn grid_lookup_rejects_off_grid_times() {
        let traj = evolve_green(|_| Ok(HamiltonianParams::zero()), 1.0, 0.0, 1.0, 10).unwrap();
        assert!(extract_params(&traj, 0.55).is_err());
        assert!(extract_params(&traj, 0.5).is_ok());
    }

    #[test]
    fn power_law_scale_factor_derivatives() {
        let sf = ScaleFactor::PowerLaw {
            a0: 2.0,
            eta0: 1.0,
            power: 3.0,
        };
        let (a, app) = sf.evaluate(2.0).unwrap();
        assert!((a - 16.0).abs() < 1e-12);
        // a'' = a0 p (p-1) eta^{p-2} = 2*3*2*2 = 24
        assert!((app - 24.0).abs() < 1e-12);
    }
}
