//! Run orchestration and artifact emission: trajectory/spectra/purity CSVs
//! plus a manifest describing every file written. Outputs are deterministic
//! for a given config (fixed float formatting, fixed orderings, seeded RNG
//! recorded in the manifest), so re-running a config overwrites its artifacts
//! with identical bytes.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::bogolyubov;
use crate::config::{build_kernel, config_hash, Method, RunConfig};
use crate::decoherence;
use crate::dynamics::{evolve_green, extract_params, GreenTrajectory};
use crate::error::{Error, Result};
use crate::gaussian;

pub const SCHEMA_VERSION: &str = "1";

pub const TRAJECTORY_CSV_HEADER: &str = "t,re_alpha11,im_alpha11,re_alpha12,im_alpha12,re_alpha21,im_alpha21,re_alpha22,im_alpha22,re_beta11,im_beta11,re_beta12,im_beta12,re_beta21,im_beta21,re_beta22,im_beta22,theta3,theta4,theta5,theta6,d1,d2,phi3,phi4,phi5,phi6";

pub const PURITY_CSV_HEADER: &str = "k,method,gamma,error_estimate";

/// Write a CSV with the fixed header and a comment line carrying the config
/// hash (and optional extras).
pub fn write_csv<I>(path: &Path, hash: &str, extras: &str, header: &str, rows: I) -> Result<()>
where
    I: IntoIterator<Item = String>,
{
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "# schema={SCHEMA_VERSION} config_sha256={hash}{extras}")?;
    writeln!(f, "{header}")?;
    for row in rows {
        writeln!(f, "{row}")?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct ManifestFile {
    pub name: String,
    pub schema: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub schema_version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub files: Vec<ManifestFile>,
}

/// Everything a run produced, plus non-fatal warnings for the caller to show.
#[derive(Debug)]
pub struct RunArtifacts {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn trajectory_rows(traj: &GreenTrajectory) -> Result<Vec<String>> {
    let mut rows = Vec::with_capacity(traj.times.len());
    for (i, &t) in traj.times.iter().enumerate() {
        let b = traj.bogolyubov_at(i)?;
        let p = traj.params[i];
        let mut cells = vec![fmt(t)];
        cells.extend(b.as_flat().iter().map(|v| fmt(*v)));
        cells.extend(p.as_array().iter().map(|v| fmt(*v)));
        rows.push(cells.join(","));
    }
    Ok(rows)
}

/// Execute a run configuration: integrate every k-mode trajectory, emit the
/// trajectory CSVs and the requested diagnostic tables, and write a manifest.
pub fn run(config: &RunConfig, config_text: &str, out_dir: &Path) -> Result<RunArtifacts> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let hash = config_hash(config_text);
    let base = std::env::current_dir().unwrap_or_else(|_| PathBuf::from("."));
    let ks = config.k.values();
    let mut warnings = Vec::new();

    // admissibility: the Fock construction assumes a harmonic-only kernel at
    // t_in; warn (not error) otherwise
    for (i, &k) in ks.iter().enumerate() {
        let kernel = build_kernel(&config.model, k, &base)?;
        let p0 = kernel.at(config.time.start)?;
        if !p0.is_harmonic_only(1e-10 * p0.f1.abs().max(1.0)) {
            warnings.push(format!(
                "k[{i}] = {k}: kernel at t_in has non-harmonic terms (R1 = {:.3e}, R2 = {:.3e}, F12 = {:.3e}, R12 = {:.3e}); \
                 the evolved-vacuum construction is approximate there",
                p0.r1, p0.r2, p0.f12, p0.r12
            ));
        }
    }

    // integrate all modes (independent work items; results kept in k order)
    let trajectories: Vec<Result<GreenTrajectory>> = ks
        .par_iter()
        .map(|&k| {
            let kernel = build_kernel(&config.model, k, &base)?;
            evolve_green(
                |t| kernel.at(t),
                k,
                config.time.start,
                config.time.end,
                config.time.steps,
            )
        })
        .collect();
    let mut files = Vec::new();
    let mut trajs = Vec::with_capacity(ks.len());
    for (i, t) in trajectories.into_iter().enumerate() {
        let traj = t?;
        let path = out_dir.join(format!("trajectory_k{i:03}.csv"));
        write_csv(
            &path,
            &hash,
            &format!(" k={}", fmt(ks[i])),
            TRAJECTORY_CSV_HEADER,
            trajectory_rows(&traj)?,
        )?;
        files.push(path);
        trajs.push(traj);
    }

    // per-(k, t) Bogolyubov coefficients with the constraint residuals
    {
        let mut rows = Vec::new();
        for (i, traj) in trajs.iter().enumerate() {
            for (j, &t) in traj.times.iter().enumerate() {
                let b = traj.bogolyubov_at(j)?;
                rows.push(bogolyubov::csv_row(ks[i], t, &b));
            }
        }
        let path = out_dir.join("bogolyubov.csv");
        write_csv(&path, &hash, "", bogolyubov::CSV_HEADER, rows)?;
        files.push(path);
    }

    let final_params: Vec<_> = trajs
        .iter()
        .map(|t| extract_params(t, *t.times.last().unwrap()))
        .collect::<Result<Vec<_>>>()?;

    if config.methods.contains(&Method::Spectra) {
        let mut rows = Vec::new();
        for (i, &k) in ks.iter().enumerate() {
            let cov = gaussian::covariance_from_params(&final_params[i], k)?;
            let rep = gaussian::purity_params(&final_params[i])?;
            rows.push(gaussian::spectra_csv_row(k, &cov, &rep));
        }
        let path = out_dir.join("spectra.csv");
        write_csv(&path, &hash, "", gaussian::SPECTRA_CSV_HEADER, rows)?;
        files.push(path);
    }

    let purity_methods: Vec<Method> = config
        .methods
        .iter()
        .copied()
        .filter(|m| {
            matches!(
                m,
                Method::PurityGaussian | Method::PurityPerturbative | Method::PurityFock
            )
        })
        .collect();
    if !purity_methods.is_empty() {
        let mut rows = Vec::new();
        for (i, &k) in ks.iter().enumerate() {
            let p = &final_params[i];
            for m in &purity_methods {
                match m {
                    Method::PurityGaussian => {
                        let rep = gaussian::purity_params(p)?;
                        rows.push(format!("{},gaussian,{},{}", fmt(k), fmt(rep.gamma), fmt(0.0)));
                    }
                    Method::PurityPerturbative => {
                        let g = decoherence::purity_perturbative(p);
                        rows.push(format!(
                            "{},perturbative,{},{}",
                            fmt(k),
                            fmt(g),
                            fmt(p.tau().norm().powi(4))
                        ));
                    }
                    Method::PurityFock => {
                        if p.r1().abs().max(p.r2().abs()) > 2.0 {
                            warnings.push(format!(
                                "k = {k}: squeezing above r = 2; the Fock purity route is slow and \
                                 unreliable there, the Gaussian route is authoritative"
                            ));
                        }
                        let (g, tail) = decoherence::purity_fock(p, config.cutoff)?;
                        rows.push(format!("{},fock,{},{}", fmt(k), fmt(g), fmt(tail)));
                    }
                    Method::Spectra => unreachable!(),
                }
            }
        }
        let path = out_dir.join("purity.csv");
        write_csv(&path, &hash, "", PURITY_CSV_HEADER, rows)?;
        files.push(path);
    }

    let manifest = Manifest {
        schema_version: SCHEMA_VERSION.into(),
        config_sha256: hash.clone(),
        seed: config.seed,
        files: files
            .iter()
            .map(|p| ManifestFile {
                name: p.file_name().unwrap().to_string_lossy().into_owned(),
                schema: if p.to_string_lossy().contains("trajectory") {
                    "trajectory-v1".into()
                } else if p.to_string_lossy().contains("spectra") {
                    "spectra-v1".into()
                } else if p.to_string_lossy().contains("bogolyubov") {
                    "bogolyubov-v1".into()
                } else {
                    "purity-v1".into()
                },
            })
            .collect(),
    };
    let manifest_path = out_dir.join("manifest.json");
    let mut f = std::fs::File::create(&manifest_path)?;
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Config(format!("manifest serialization: {e}")))?;
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")?;
    files.push(manifest_path);

    Ok(RunArtifacts { files, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conformal_run_emits_unit_purity() {
        let text = r#"{
            "k": {"grid": [1.0, 2.0]},
            "time": {"start": -8.0, "end": -0.5, "steps": 400},
            "model": {"type": "cosmology", "zeta": 0.16666666666666666, "lambda": 0.0,
                      "scale_factor": {"type": "de_sitter", "hubble": 1.0}},
            "methods": ["spectra", "purity-gaussian"]
        }"#;
        let cfg = RunConfig::from_json(text).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let arts = run(&cfg, text, dir.path()).unwrap();
        assert!(arts.files.iter().any(|f| f.ends_with("purity.csv")));
        let purity = std::fs::read_to_string(dir.path().join("purity.csv")).unwrap();
        for line in purity.lines().skip(2) {
            let gamma: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
            assert!((gamma - 1.0).abs() < 1e-6, "{line}");
        }
        let manifest = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        assert!(manifest.contains("config_sha256"));
    }

    #[test]
    fn rerun_is_idempotent() {
        let text = r#"{
            "k": 1.0,
            "time": {"start": -4.0, "end": -1.0, "steps": 100},
            "model": {"type": "cosmology", "zeta": 0.0, "lambda": 0.3,
                      "scale_factor": {"type": "de_sitter", "hubble": 1.0}},
            "methods": ["spectra"]
        }"#;
        let cfg = RunConfig::from_json(text).unwrap();
        let dir = tempfile::tempdir().unwrap();
        run(&cfg, text, dir.path()).unwrap();
        let first = std::fs::read(dir.path().join("spectra.csv")).unwrap();
        run(&cfg, text, dir.path()).unwrap();
        let second = std::fs::read(dir.path().join("spectra.csv")).unwrap();
        assert_eq!(first, second);
        let t1 = std::fs::read(dir.path().join("trajectory_k000.csv")).unwrap();
        run(&cfg, text, dir.path()).unwrap();
        let t2 = std::fs::read(dir.path().join("trajectory_k000.csv")).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn coupled_run_warns_about_initial_time() {
        let text = r#"{
            "k": 1.0,
            "time": {"start": -6.0, "end": -1.0, "steps": 50},
            "model": {"type": "cosmology", "zeta": 0.0, "lambda": 0.4,
                      "scale_factor": {"type": "de_sitter", "hubble": 1.0}},
            "methods": []
        }"#;
        let cfg = RunConfig::from_json(text).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let arts = run(&cfg, text, dir.path()).unwrap();
        assert!(!arts.warnings.is_empty());
    }
}
