//! Command-line driver: algebra checks, trajectory runs, state tables,
//! spectra, purity and decoherence sweeps.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fourmode::amplitudes;
use fourmode::config::RunConfig;
use fourmode::decoherence::{self, GridRange, SweepThresholds};
use fourmode::error::Error;
use fourmode::gaussian;
use fourmode::oracle;
use fourmode::report;
use fourmode::symplectic::{self, Basis, SqueezeRotParams};

#[derive(Parser)]
#[command(
    name = "fourmode",
    about = "Four-mode squeezed states of two coupled scalar fields: dynamics, spectra and decoherence diagnostics",
    version
)]
struct Cli {
    /// Worker threads (default: FOURMODE_THREADS env var, then all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ParamArgs {
    /// Bloch-Messiah parameters as comma-separated key=value pairs. Keys:
    /// theta3..theta6, d1, d2, phi3..phi6, or r1/r2 for the squeezing
    /// amplitudes. Unset keys default to 0.
    #[arg(long, default_value = "")]
    params: String,
}

impl ParamArgs {
    fn parse(&self) -> Result<SqueezeRotParams, Error> {
        parse_params(&self.params)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Verify the Lie-algebra tables: commutators, helicity correspondence
    /// and closed-form exponentials
    AlgebraCheck,
    /// Integrate a configured run: trajectories, spectra and purity tables
    Evolve {
        /// JSON run configuration
        #[arg(long)]
        config: PathBuf,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump the truncated evolved-vacuum amplitude table as CSV
    State {
        #[command(flatten)]
        params: ParamArgs,
        /// Largest occupation label kept
        #[arg(long, default_value_t = 8)]
        cutoff: usize,
        /// Output CSV (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Covariance spectra, purity, symplectic eigenvalue and entropy
    Spectra {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Purity of the system sector by the chosen route
    Purity {
        #[command(flatten)]
        params: ParamArgs,
        /// fock | gaussian | perturbative | oracle
        #[arg(long, default_value = "gaussian")]
        method: String,
        /// Occupation cutoff for the fock and oracle routes
        #[arg(long, default_value_t = 14)]
        cutoff: usize,
    },
    /// Sweep coupling strength and squeezing; flags the region where purity
    /// drops while the spectra stay within tolerance
    Sweep {
        /// |tau| range as start:end:count
        #[arg(long)]
        tau: String,
        /// squeezing range (r1 = r2 = r) as start:end:count
        #[arg(long)]
        r: String,
        #[arg(long, default_value_t = 0.3)]
        theta3: f64,
        #[arg(long, default_value_t = 0.7)]
        theta4: f64,
        /// Phase of the coupling parameter tau
        #[arg(long, default_value_t = 0.0)]
        arg_tau: f64,
        /// Flag threshold: gamma below this counts as decohered
        #[arg(long, default_value_t = 0.5)]
        gamma_flag: f64,
        /// Flag threshold: relative spectra distortion below this counts as
        /// observationally safe
        #[arg(long, default_value_t = 0.05)]
        distortion_flag: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the closed-form amplitudes against the truncated-Fock circuit
    /// and report the purity triple
    OracleCompare {
        #[command(flatten)]
        params: ParamArgs,
        /// Comparison domain: occupation labels up to this value
        #[arg(long, default_value_t = 7)]
        cutoff: usize,
    },
}

fn parse_params(text: &str) -> Result<SqueezeRotParams, Error> {
    let mut p = SqueezeRotParams::ZERO;
    let mut r1: Option<f64> = None;
    let mut r2: Option<f64> = None;
    for piece in text.split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        let (key, value) = piece
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got '{piece}'")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|e| Error::Config(format!("bad value for {key}: {e}")))?;
        match key.trim() {
            "theta3" => p.theta3 = v,
            "theta4" => p.theta4 = v,
            "theta5" => p.theta5 = v,
            "theta6" => p.theta6 = v,
            "d1" => p.d1 = v,
            "d2" => p.d2 = v,
            "phi3" => p.phi3 = v,
            "phi4" => p.phi4 = v,
            "phi5" => p.phi5 = v,
            "phi6" => p.phi6 = v,
            "r1" => r1 = Some(v),
            "r2" => r2 = Some(v),
            other => return Err(Error::Config(format!("unknown parameter '{other}'"))),
        }
    }
    if r1.is_some() || r2.is_some() {
        p.set_r(r1.unwrap_or(0.0), r2.unwrap_or(0.0));
    }
    Ok(p)
}

fn parse_range(text: &str) -> Result<GridRange, Error> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "range must be start:end:count, got '{text}'"
        )));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|e| Error::Config(format!("bad range start: {e}")))?;
    let end: f64 = parts[1]
        .parse()
        .map_err(|e| Error::Config(format!("bad range end: {e}")))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|e| Error::Config(format!("bad range count: {e}")))?;
    if count == 0 {
        return Err(Error::Config("range count must be >= 1".into()));
    }
    Ok(GridRange { start, end, count })
}

fn algebra_check() -> Result<(), Error> {
    let mut exact = 0;
    let total = 45;
    for i in 1..=10 {
        for j in (i + 1)..=10 {
            let c = symplectic::commutator(i, j)?;
            let expect = symplectic::expected_commutator(i, j)?;
            let rhs = match expect {
                None => [[0i64; 4]; 4],
                Some((coeff, t)) => {
                    let k = symplectic::generator_int(t)?;
                    let mut r = [[0i64; 4]; 4];
                    for a in 0..4 {
                        for b in 0..4 {
                            r[a][b] = coeff * k[a][b];
                        }
                    }
                    r
                }
            };
            if c == rhs {
                exact += 1;
            } else {
                println!("MISMATCH: [K{i}, K{j}]");
            }
        }
    }
    println!("{exact}/{total} commutators exact (integer arithmetic)");
    let mut worst_l: f64 = 0.0;
    for i in 1..=10 {
        let l = symplectic::generator(i, Basis::Helicity)?;
        let u = fourmode::linalg::helicity_u();
        let k = fourmode::linalg::Mat4::from_int(&symplectic::generator_int(i)?).to_complex();
        let expect = u.mul(&k).mul(&u.adjoint());
        worst_l = worst_l.max(l.max_abs_diff(&expect));
    }
    println!("helicity correspondence L_i = U K_i U^dag: max residual {worst_l:.3e}");
    let mut worst_sym: f64 = 0.0;
    for i in 1..=10 {
        for &angle in &[-1.5, -0.3, 0.4, 2.0] {
            let m = symplectic::exp_generator(i, angle)?;
            worst_sym = worst_sym.max(fourmode::linalg::symplectic_residual(&m));
        }
    }
    println!("closed-form exponentials: max symplectic residual {worst_sym:.3e}");
    if exact != total || worst_l > 1e-12 || worst_sym > 1e-12 {
        return Err(Error::Domain("algebra check failed".into()));
    }
    Ok(())
}

fn oracle_compare(p: &SqueezeRotParams, cutoff: usize) -> Result<(), Error> {
    println!("tolerances in force: amplitude agreement 1e-8 (after leakage accounting), purity triple 1e-4");
    let rmax = p.r1().abs().max(p.r2().abs());
    let margin = oracle::truncation_margin(rmax, 1e-9).min(30);
    let space = oracle::TruncatedSpace::new(cutoff + margin);
    println!(
        "comparison labels <= {cutoff}; internal truncation N = {} (margin {margin})",
        space.cutoff
    );
    let (psi, report) = if rmax <= 0.85 {
        oracle::run_circuit(&space, p)?
    } else {
        println!("(strong squeezing: using the unitary block-rotation circuit)");
        oracle::run_circuit_block(&space, p)?
    };
    println!("circuit leakage: {:.3e}", report.leakage);
    let labels = amplitudes::state_table(p, cutoff)?.label_amplitudes();
    let mut worst = 0.0f64;
    for (l, v) in &labels {
        let got = psi[space.index([l[0] as usize, l[1] as usize, l[2] as usize, l[3] as usize])];
        worst = worst.max((got - v).norm());
    }
    println!("max amplitude discrepancy (closed form vs circuit): {worst:.3e}");
    let g_oracle = oracle::partial_trace_purity(&space, &psi);
    let (g_fock, tail) = decoherence::purity_fock(p, (2 * cutoff).max(16))?;
    let g_gauss = gaussian::purity_params(p)?.gamma;
    println!(
        "purity triple: oracle {g_oracle:.10} | fock-sum {g_fock:.10} (tail {tail:.2e}) | gaussian {g_gauss:.10}"
    );
    Ok(())
}

fn real_main() -> Result<(), Error> {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("FOURMODE_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::AlgebraCheck => algebra_check(),
        Command::Evolve { config, out } => {
            let (cfg, text) = RunConfig::load(&config)?;
            let arts = report::run(&cfg, &text, &out)?;
            for w in &arts.warnings {
                eprintln!("warning: {w}");
            }
            println!("tolerances in force: symplectic drift 1e-8, constraint residuals 1e-10");
            for f in &arts.files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::State {
            params,
            cutoff,
            out,
        } => {
            let p = params.parse()?;
            let table = amplitudes::state_table(&p, cutoff)?;
            println!(
                "# cutoff {cutoff}; norm deficit {:.3e}; tail bound {:.3e}",
                table.norm_deficit, table.tail_bound
            );
            let header = amplitudes::FockTable::CSV_HEADER;
            match out {
                Some(path) => {
                    let extras = format!(
                        " cutoff={cutoff} params={}",
                        p.as_array().map(|v| format!("{v:.6e}")).join(";")
                    );
                    report::write_csv(
                        &path,
                        &fourmode::config::config_hash(&params.params),
                        &extras,
                        header,
                        table.csv_rows().collect::<Vec<_>>(),
                    )?;
                    println!("wrote {}", path.display());
                }
                None => {
                    println!("{header}");
                    for row in table.csv_rows() {
                        println!("{row}");
                    }
                }
            }
            Ok(())
        }
        Command::Spectra { params, k, out } => {
            let p = params.parse()?;
            let cov = gaussian::covariance_from_params(&p, k)?;
            let rep = gaussian::purity_params(&p)?;
            let row = gaussian::spectra_csv_row(k, &cov, &rep);
            match out {
                Some(path) => {
                    report::write_csv(
                        &path,
                        &fourmode::config::config_hash(&params.params),
                        "",
                        gaussian::SPECTRA_CSV_HEADER,
                        vec![row],
                    )?;
                    println!("wrote {}", path.display());
                }
                None => {
                    println!("{}", gaussian::SPECTRA_CSV_HEADER);
                    println!("{row}");
                }
            }
            Ok(())
        }
        Command::Purity {
            params,
            method,
            cutoff,
        } => {
            let p = params.parse()?;
            let rmax = p.r1().abs().max(p.r2().abs());
            match method.as_str() {
                "gaussian" => {
                    let rep = gaussian::purity_params(&p)?;
                    println!("tolerance in force: closed form, round-off level");
                    println!(
                        "gamma = {:.12} (sigma = {:.12}, S_ent = {:.12} bits)",
                        rep.gamma, rep.symplectic_eigenvalue, rep.entanglement_entropy
                    );
                }
                "perturbative" => {
                    let g = decoherence::purity_perturbative(&p);
                    println!(
                        "tolerance in force: leading order, residual O(|tau|^4) ~ {:.2e}",
                        p.tau().norm().powi(4)
                    );
                    println!("gamma = {g:.12}");
                }
                "fock" => {
                    if rmax > 2.0 {
                        eprintln!(
                            "warning: squeezing r = {rmax:.2} > 2: the Fock sums converge slowly \
                             and are unreliable here; the Gaussian route is authoritative"
                        );
                    }
                    let (g, tail) = decoherence::purity_fock(&p, cutoff)?;
                    println!("tolerance in force: truncation tail bound {tail:.3e}");
                    println!("gamma = {g:.12} +- {tail:.3e}");
                }
                "oracle" => {
                    if rmax > 2.0 {
                        eprintln!(
                            "warning: squeezing r = {rmax:.2} > 2: truncated-Fock evolution is \
                             unreliable here; the Gaussian route is authoritative"
                        );
                    }
                    let space = oracle::TruncatedSpace::new(cutoff);
                    let (psi, rep) = oracle::run_circuit_block(&space, &p)?;
                    let g = oracle::partial_trace_purity(&space, &psi);
                    println!("tolerance in force: circuit leakage {:.3e}", rep.leakage);
                    println!("gamma = {g:.12}");
                }
                other => {
                    return Err(Error::Config(format!(
                        "unknown method '{other}' (expected fock|gaussian|perturbative|oracle)"
                    )))
                }
            }
            Ok(())
        }
        Command::Sweep {
            tau,
            r,
            theta3,
            theta4,
            arg_tau,
            gamma_flag,
            distortion_flag,
            out,
        } => {
            let tau_range = parse_range(&tau)?;
            let r_range = parse_range(&r)?;
            let mut base = SqueezeRotParams::ZERO;
            base.theta3 = theta3;
            base.theta4 = theta4;
            base.theta5 = arg_tau.sin();
            base.theta6 = -arg_tau.cos();
            let thresholds = SweepThresholds {
                gamma_below: gamma_flag,
                distortion_below: distortion_flag,
            };
            let rows = decoherence::decoherence_sweep(&base, &tau_range, &r_range, &thresholds)?;
            println!(
                "thresholds in force: flag when gamma < {gamma_flag} and distortion < {distortion_flag}"
            );
            let flagged = rows.iter().filter(|r| r.flagged).count();
            let spec = format!("tau={tau} r={r} theta3={theta3} theta4={theta4} arg_tau={arg_tau}");
            report::write_csv(
                &out,
                &fourmode::config::config_hash(&spec),
                "",
                decoherence::SWEEP_CSV_HEADER,
                rows.iter().map(decoherence::sweep_csv_row),
            )?;
            println!(
                "wrote {} ({} rows, {flagged} flagged)",
                out.display(),
                rows.len()
            );
            Ok(())
        }
        Command::OracleCompare { params, cutoff } => {
            let p = params.parse()?;
            oracle_compare(&p, cutoff)
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
