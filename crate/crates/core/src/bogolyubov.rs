//! Bogolyubov-coefficient representation of helicity-basis transfer matrices.
//!
//! A helicity-symplectic matrix has the block form [[A, B], [conj B, conj A]]
//! whose 2x2 blocks hold the eight complex Bogolyubov coefficients. The alpha
//! block conserves quanta, the beta block creates/annihilates pairs; the
//! symplectic condition fixes two real and two complex combinations of them.

use crate::error::{Error, Result};
use crate::linalg::{helicity_symplectic_residual, sinc, C64, CMat2, CMat4};
use crate::symplectic::SqueezeRotParams;

/// Tolerance on the four symplectic constraints; about 100x the round-off
/// floor of double-precision 4x4 compositions.
pub const CONSTRAINT_TOL: f64 = 1e-10;

/// The eight Bogolyubov coefficients of one helicity transfer matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BogolyubovSet {
    pub alpha11: C64,
    pub alpha12: C64,
    pub alpha21: C64,
    pub alpha22: C64,
    pub beta11: C64,
    pub beta12: C64,
    pub beta21: C64,
    pub beta22: C64,
}

impl BogolyubovSet {
    /// Identity transfer: alpha = I, beta = 0.
    pub fn identity() -> Self {
        BogolyubovSet {
            alpha11: C64::new(1.0, 0.0),
            alpha12: C64::new(0.0, 0.0),
            alpha21: C64::new(0.0, 0.0),
            alpha22: C64::new(1.0, 0.0),
            beta11: C64::new(0.0, 0.0),
            beta12: C64::new(0.0, 0.0),
            beta21: C64::new(0.0, 0.0),
            beta22: C64::new(0.0, 0.0),
        }
    }

    pub fn alpha_block(&self) -> CMat2 {
        CMat2([[self.alpha11, self.alpha12], [self.alpha21, self.alpha22]])
    }

    pub fn beta_block(&self) -> CMat2 {
        CMat2([[self.beta11, self.beta12], [self.beta21, self.beta22]])
    }

    pub fn from_blocks(a: &CMat2, b: &CMat2) -> Self {
        BogolyubovSet {
            alpha11: a.0[0][0],
            alpha12: a.0[0][1],
            alpha21: a.0[1][0],
            alpha22: a.0[1][1],
            beta11: b.0[0][0],
            beta12: b.0[0][1],
            beta21: b.0[1][0],
            beta22: b.0[1][1],
        }
    }

    /// Read the coefficients off a helicity-symplectic matrix.
    pub fn from_matrix(m: &CMat4) -> Result<Self> {
        let res = helicity_symplectic_residual(m);
        if res > CONSTRAINT_TOL {
            return Err(Error::NotSymplectic {
                residual: res,
                tol: CONSTRAINT_TOL,
            });
        }
        Ok(Self::from_blocks(&m.block(0, 0), &m.block(0, 1)))
    }

    /// The 16 real components in fixed CSV order:
    /// Re/Im of alpha11, alpha12, alpha21, alpha22, beta11, beta12, beta21, beta22.
    pub fn as_flat(&self) -> [f64; 16] {
        let cs = [
            self.alpha11,
            self.alpha12,
            self.alpha21,
            self.alpha22,
            self.beta11,
            self.beta12,
            self.beta21,
            self.beta22,
        ];
        let mut out = [0.0; 16];
        for (i, c) in cs.iter().enumerate() {
            out[2 * i] = c.re;
            out[2 * i + 1] = c.im;
        }
        out
    }

    /// Largest beta-coefficient magnitude (particle creation measure).
    pub fn max_beta(&self) -> f64 {
        [self.beta11, self.beta12, self.beta21, self.beta22]
            .iter()
            .fold(0.0f64, |a, b| a.max(b.norm()))
    }
}

/// Forward map from Bloch-Messiah parameters to the eight coefficients.
///
/// Each coefficient is a two-term combination of the theta- and phi-rotation
/// entries weighted by cosh/sinh of the sector squeezing amplitudes.
pub fn from_params(p: &SqueezeRotParams) -> Result<BogolyubovSet> {
    if !p.is_finite() {
        return Err(Error::Domain("non-finite parameters".into()));
    }
    let (r1, r2) = (p.r1(), p.r2());
    let theta = (p.theta4 * p.theta4 + p.theta5 * p.theta5 + p.theta6 * p.theta6).sqrt();
    let phi = (p.phi4 * p.phi4 + p.phi5 * p.phi5 + p.phi6 * p.phi6).sqrt();
    let st = sinc(theta);
    let sp = sinc(phi);
    // ct4 = cos(theta) - i theta4 sinc(theta) and its conjugate
    let ct4 = C64::new(theta.cos(), -p.theta4 * st);
    let ct4c = ct4.conj();
    let cf4 = C64::new(phi.cos(), -p.phi4 * sp);
    let cf4c = cf4.conj();
    // tm = (theta5 - i theta6) sinc(theta), tp = (theta5 + i theta6) sinc(theta)
    let tm = C64::new(p.theta5, -p.theta6) * st;
    let tp = C64::new(p.theta5, p.theta6) * st;
    let fm = C64::new(p.phi5, -p.phi6) * sp;
    let fp = C64::new(p.phi5, p.phi6) * sp;
    let e1 = C64::new(0.0, -(p.theta3 + p.phi3)).exp();
    let e2 = C64::new(0.0, -(p.theta3 - p.phi3)).exp();
    let (ch1, ch2) = (r1.cosh(), r2.cosh());
    let (sh1, sh2) = (r1.sinh(), r2.sinh());
    Ok(BogolyubovSet {
        alpha11: e1 * (ct4 * cf4 * ch1 - tm * fp * ch2),
        alpha12: e1 * (ct4 * fm * ch1 + tm * cf4c * ch2),
        alpha21: e1 * (-tp * cf4 * ch1 - ct4c * fp * ch2),
        alpha22: e1 * (-tp * fm * ch1 + ct4c * cf4c * ch2),
        beta11: e2 * (ct4 * cf4c * sh1 - tm * fm * sh2),
        beta12: e2 * (ct4 * fp * sh1 + tm * cf4 * sh2),
        beta21: e2 * (-tp * cf4c * sh1 - ct4c * fm * sh2),
        beta22: e2 * (-tp * fp * sh1 + ct4c * cf4 * sh2),
    })
}

/// The four symplectic-constraint residuals (two real conditions and the
/// moduli of the two complex ones).
pub fn constraint_residuals(b: &BogolyubovSet) -> [f64; 4] {
    let n1 = b.alpha11.norm_sqr() + b.alpha12.norm_sqr()
        - b.beta11.norm_sqr()
        - b.beta12.norm_sqr()
        - 1.0;
    let n2 = b.alpha21.norm_sqr() + b.alpha22.norm_sqr()
        - b.beta21.norm_sqr()
        - b.beta22.norm_sqr()
        - 1.0;
    let c3 = b.alpha11 * b.alpha21.conj() + b.alpha12 * b.alpha22.conj()
        - b.beta11 * b.beta21.conj()
        - b.beta12 * b.beta22.conj();
    let c4 = b.alpha11 * b.beta21 + b.alpha12 * b.beta22
        - b.alpha21 * b.beta11
        - b.alpha22 * b.beta12;
    [n1, n2, c3.norm(), c4.norm()]
}

pub fn max_constraint_residual(b: &BogolyubovSet) -> f64 {
    constraint_residuals(b)
        .iter()
        .fold(0.0f64, |a, r| a.max(r.abs()))
}

/// Assemble the helicity-symplectic matrix [[A, B], [conj B, conj A]].
/// Rejects coefficient sets violating the constraints above tolerance.
pub fn assemble_matrix(b: &BogolyubovSet) -> Result<CMat4> {
    let res = max_constraint_residual(b);
    if res > CONSTRAINT_TOL {
        return Err(Error::ConstraintViolation {
            residual: res,
            tol: CONSTRAINT_TOL,
        });
    }
    let a = b.alpha_block();
    let bb = b.beta_block();
    Ok(CMat4::from_blocks(&a, &bb, &bb.conj(), &a.conj()))
}

/// Header for the per-(k, t) coefficient CSV: 16 coefficient columns in the
/// `as_flat` order plus the four constraint residuals.
pub const CSV_HEADER: &str = "k,t,re_alpha11,im_alpha11,re_alpha12,im_alpha12,re_alpha21,im_alpha21,re_alpha22,im_alpha22,re_beta11,im_beta11,re_beta12,im_beta12,re_beta21,im_beta21,re_beta22,im_beta22,res_ct1,res_ct2,res_ct3,res_ct4";

pub fn csv_row(k: f64, t: f64, b: &BogolyubovSet) -> String {
    let flat = b.as_flat();
    let res = constraint_residuals(b);
    let mut s = format!("{k:.16e},{t:.16e}");
    for v in flat.iter().chain(res.iter()) {
        s.push_str(&format!(",{v:.16e}"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE_C;
    use crate::symplectic::{compose_bloch_messiah, Basis};
    use proptest::prelude::*;

    #[test]
    fn identity_set() {
        let b = BogolyubovSet::identity();
        assert_eq!(constraint_residuals(&b), [0.0, 0.0, 0.0, 0.0]);
        let m = assemble_matrix(&b).unwrap();
        assert!(m.max_abs_diff(&CMat4::identity()) < 1e-15);
    }

    #[test]
    fn zero_params_give_identity_transfer() {
        let b = from_params(&SqueezeRotParams::ZERO).unwrap();
        assert!((b.alpha11 - ONE_C).norm() < 1e-15);
        assert!((b.alpha22 - ONE_C).norm() < 1e-15);
        for c in [b.alpha12, b.alpha21, b.beta11, b.beta12, b.beta21, b.beta22] {
            assert!(c.norm() < 1e-15);
        }
    }

    #[test]
    fn no_mixing_angles_no_mixing_coefficients() {
        let mut p = SqueezeRotParams::ZERO;
        p.theta3 = 0.3;
        p.theta4 = 0.6;
        p.phi3 = -0.4;
        p.phi4 = 0.2;
        p.set_r(0.8, 0.5);
        let b = from_params(&p).unwrap();
        for c in [b.alpha12, b.alpha21, b.beta12, b.beta21] {
            assert!(c.norm() < 1e-15);
        }
        // single-sector reduction of the constraints
        assert!((b.alpha11.norm_sqr() - b.beta11.norm_sqr() - 1.0).abs() < 1e-12);
        assert!((b.alpha22.norm_sqr() - b.beta22.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pure_squeezing_matches_l2_exponential() {
        let r = 0.85;
        let mut p = SqueezeRotParams::ZERO;
        p.set_r(r, r); // d1 = 0, d2 = r: exp(r L2)
        let b = from_params(&p).unwrap();
        let m = assemble_matrix(&b).unwrap();
        let l2 = crate::symplectic::exp_generator_helicity(2, r).unwrap();
        assert!(m.max_abs_diff(&l2) < 1e-12);
        assert!((b.alpha11 - C64::new(r.cosh(), 0.0)).norm() < 1e-14);
        assert!((b.beta11 - C64::new(r.sinh(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn constraint_violation_is_rejected() {
        let mut b = BogolyubovSet::identity();
        b.beta11 = ONE_C;
        assert!(matches!(
            assemble_matrix(&b),
            Err(Error::ConstraintViolation { .. })
        ));
    }

    #[test]
    fn hand_perturbed_residual_is_exact_quadratic() {
        let mut p = SqueezeRotParams::ZERO;
        p.theta4 = 0.3;
        p.set_r(0.4, 0.2);
        let mut b = from_params(&p).unwrap();
        let base = constraint_residuals(&b)[0];
        let re_before = b.alpha11.re;
        b.alpha11 += C64::new(0.1, 0.0);
        let r = constraint_residuals(&b)[0];
        let expect = base + 2.0 * re_before * 0.1 + 0.01;
        assert!((r - expect).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn forward_map_satisfies_constraints(raw in proptest::array::uniform10(-1.0f64..1.0)) {
            let p = SqueezeRotParams::from_array(raw);
            let b = from_params(&p).unwrap();
            prop_assert!(max_constraint_residual(&b) < 1e-10);
        }

        #[test]
        fn assembly_matches_composition(raw in proptest::array::uniform10(-1.0f64..1.0)) {
            let p = SqueezeRotParams::from_array(raw);
            let b = from_params(&p).unwrap();
            let m = assemble_matrix(&b).unwrap();
            let direct = compose_bloch_messiah(&p, Basis::Helicity).unwrap();
            prop_assert!(m.max_abs_diff(&direct) < 1e-10);
        }

        #[test]
        fn group_closure(
            raw1 in proptest::array::uniform10(-0.8f64..0.8),
            raw2 in proptest::array::uniform10(-0.8f64..0.8),
        ) {
            let b1 = from_params(&SqueezeRotParams::from_array(raw1)).unwrap();
            let b2 = from_params(&SqueezeRotParams::from_array(raw2)).unwrap();
            let prod = assemble_matrix(&b1).unwrap().mul(&assemble_matrix(&b2).unwrap());
            prop_assert!(crate::linalg::helicity_symplectic_residual(&prod) < 1e-10);
            let b3 = BogolyubovSet::from_matrix(&prod).unwrap();
            prop_assert!(max_constraint_residual(&b3) < 1e-10);
            // and it decomposes back to valid parameters
            let q = crate::symplectic::decompose_bloch_messiah_helicity(&prod).unwrap();
            let back = compose_bloch_messiah(&q, Basis::Helicity).unwrap();
            prop_assert!(back.max_abs_diff(&prod) < 1e-8);
        }
    }
}
