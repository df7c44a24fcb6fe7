use std::io::Write;
use std::path::{Path, PathBuf};

use pam_core::greens::{green_fourier, green_zero_monte_carlo};
use pam_core::montecarlo::{CollisionKernel, McOptions};
use pam_core::phase::{sweep_to_csv, write_phase_csv, LambdaSource, SweepAxis, SweepSpec};
use pam_core::{
    alpha, check_gn, green_at, green_l2sq, green_zero, lambda_mc, lambda_spectral, mu, sweep, tensor_gap, top_eigen,
    Field, LatticeBox, PamParams, SpectralOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Axis, Format, Kernel, LambdaColumn, Method, Quantity, RunConfig};
use crate::CliError;

const DEFAULT_TOL: f64 = 1e-10;

/// Result of one command in both output shapes.
struct Report {
    csv: Option<String>,
    json: Value,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a RunConfig,
    version: &'static str,
    seed: Option<u64>,
}

fn manifest(cfg: &RunConfig) -> Value {
    json!(Manifest { config: cfg, version: env!("CARGO_PKG_VERSION"), seed: cfg.seed })
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    if let Some(w) = cfg.workers {
        if w == 0 {
            return Err(CliError::Usage("--workers must be positive".into()));
        }
        // a second initialization only happens in tests; the pool size does not affect results
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    let report = match cfg.command.as_str() {
        "green" => green(cfg)?,
        "mu" => mu_cmd(cfg)?,
        "lambda-spectral" => lambda_spectral_cmd(cfg)?,
        "lambda-mc" => lambda_mc_cmd(cfg)?,
        "phase" => return phase(cfg),
        "check-gn" => check_gn_cmd(cfg)?,
        "tensor-gap" => tensor_gap_cmd(cfg)?,
        other => return Err(CliError::Usage(format!("unknown command '{other}'"))),
    };
    emit(cfg, report)
}

fn emit(cfg: &RunConfig, report: Report) -> Result<(), CliError> {
    let format = cfg.format.unwrap_or(if report.csv.is_some() { Format::Csv } else { Format::Json });
    match format {
        Format::Json => {
            let doc = json!({ "manifest": manifest(cfg), "result": report.json });
            let text = serde_json::to_string_pretty(&doc).expect("serializable") + "\n";
            write_out(cfg.out.as_deref(), &text)
        }
        Format::Csv => {
            let csv = report
                .csv
                .ok_or_else(|| CliError::Usage(format!("{} has no CSV output; use --format json", cfg.command)))?;
            write_out(cfg.out.as_deref(), &csv)?;
            write_manifest(cfg)
        }
    }
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Next to `--out` when given, otherwise on stderr.
fn write_manifest(cfg: &RunConfig) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(&manifest(cfg)).expect("serializable") + "\n";
    match &cfg.out {
        Some(out) => {
            let path = manifest_path(out);
            std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        }
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

fn params(cfg: &RunConfig) -> Result<PamParams, CliError> {
    Ok(PamParams::new(
        cfg.require(&cfg.d, "d")?,
        cfg.require(&cfg.n, "n")?,
        cfg.require(&cfg.p, "p")?,
        cfg.require(&cfg.kappa, "kappa")?,
        cfg.require(&cfg.rho, "rho")?,
    )?)
}

fn spectral_opts(cfg: &RunConfig) -> SpectralOptions {
    SpectralOptions { tol: cfg.tol.unwrap_or(DEFAULT_TOL), ..SpectralOptions::default() }
}

fn green(cfg: &RunConfig) -> Result<Report, CliError> {
    let d = cfg.require(&cfg.d, "d")?;
    let tol = cfg.tol.unwrap_or(DEFAULT_TOL);
    let quantity = cfg.quantity.unwrap_or(Quantity::Zero);
    let est = match (cfg.method.unwrap_or(Method::Time), quantity) {
        (Method::Time, Quantity::Zero) => green_zero(d, tol)?,
        (Method::Time, Quantity::L2) => green_l2sq(d, tol)?,
        (Method::Time, Quantity::Alpha) => alpha(d)?,
        (Method::Time, Quantity::At) => green_at(d, &cfg.require(&cfg.site, "site")?, tol)?,
        (Method::Fourier, q @ (Quantity::Zero | Quantity::L2)) => {
            green_fourier(d, if q == Quantity::Zero { 1 } else { 2 }, cfg.nodes.unwrap_or(64))?
        }
        (Method::Mc, Quantity::Zero) => {
            let seed = cfg.require(&cfg.seed, "seed")?;
            green_zero_monte_carlo(d, cfg.samples.unwrap_or(100_000), seed)?
        }
        (m, q) => return Err(CliError::Usage(format!("method {m:?} does not compute quantity {q:?}"))),
    };
    let mut value = serde_json::to_value(&est).expect("serializable");
    value["divergent"] = json!(est.value.is_divergent());
    Ok(Report { csv: None, json: value })
}

fn mu_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let d = cfg.require(&cfg.d, "d")?;
    let tol = cfg.tol.unwrap_or(DEFAULT_TOL);
    let kappas = match (&cfg.grid, cfg.kappa) {
        (Some(g), None) => g.clone(),
        (None, Some(k)) => vec![k],
        _ => return Err(CliError::Usage("mu requires exactly one of --kappa or --grid".into())),
    };
    let mut csv = String::from("d,kappa,mu\n");
    let mut rows = Vec::new();
    for k in kappas {
        let m = mu(d, k, tol)?;
        csv.push_str(&format!("{d},{k:?},{m:?}\n"));
        rows.push(json!({ "d": d, "kappa": k, "mu": m }));
    }
    Ok(Report { csv: Some(csv), json: Value::Array(rows) })
}

fn lambda_spectral_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let params = params(cfg)?;
    let radii = match (&cfg.radii, cfg.radius) {
        (Some(r), _) => r.clone(),
        (None, Some(r)) => vec![r],
        (None, None) => return Err(CliError::Usage("lambda-spectral requires --radius or --radii".into())),
    };
    let ests = lambda_spectral::<f64>(&params, &radii, &spectral_opts(cfg))?;
    let mut csv = String::from("d,n,p,kappa,rho,R,lambda_box,residual\n");
    let p = &params;
    for (r, e) in radii.iter().zip(&ests) {
        csv.push_str(&format!("{},{},{},{:?},{:?},{r},{:?},{:?}\n", p.d, p.n, p.p, p.kappa, p.rho, e.value, e.error));
    }
    Ok(Report { csv: Some(csv), json: serde_json::to_value(&ests).expect("serializable") })
}

fn lambda_mc_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let params = params(cfg)?;
    let seed = cfg.require(&cfg.seed, "seed")?;
    let t = cfg.require(&cfg.t, "t")?;
    let samples = cfg.require(&cfg.samples, "samples")?;
    let kernel = match cfg.kernel.unwrap_or(Kernel::Forward) {
        Kernel::Forward => CollisionKernel::Forward,
        Kernel::Reversed => CollisionKernel::Reversed,
    };
    let est = lambda_mc(&params, t, samples, seed, &McOptions { workers: cfg.workers, kernel })?;
    let p = &params;
    let csv = format!(
        "d,n,p,kappa,rho,t,samples,seed,lambda_t,stderr,ess\n{},{},{},{:?},{:?},{:?},{},{},{:?},{:?},{:?}\n",
        p.d, p.n, p.p, p.kappa, p.rho, t, samples, seed, est.lambda_t, est.stderr, est.ess
    );
    Ok(Report { csv: Some(csv), json: serde_json::to_value(&est).expect("serializable") })
}

fn sweep_spec(cfg: &RunConfig) -> Result<SweepSpec, CliError> {
    let d = cfg.require(&cfg.d, "d")?;
    let n = cfg.require(&cfg.n, "n")?;
    let ps = match (&cfg.ps, cfg.p) {
        (Some(ps), _) => ps.clone(),
        (None, Some(p)) => vec![p],
        (None, None) => return Err(CliError::Usage("phase requires --p or --ps".into())),
    };
    let axis = cfg.axis.unwrap_or(Axis::Kappa);
    let (axis, fixed) = match axis {
        Axis::Kappa => (SweepAxis::Kappa, cfg.require(&cfg.rho, "rho")?),
        Axis::Rho => (SweepAxis::Rho, cfg.require(&cfg.kappa, "kappa")?),
    };
    let grid = cfg.require(&cfg.grid, "grid")?;
    let column = cfg.lambda.unwrap_or(if cfg.radius.is_some() { LambdaColumn::Spectral } else { LambdaColumn::None });
    let lambda = match column {
        LambdaColumn::Spectral => LambdaSource::Spectral { radius: cfg.require(&cfg.radius, "radius")? },
        LambdaColumn::ClosedForm => LambdaSource::ClosedForm,
        LambdaColumn::None => LambdaSource::BoundsOnly,
    };
    Ok(SweepSpec { d, n, ps, axis, grid, fixed, lambda, spectral: spectral_opts(cfg) })
}

fn phase(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = sweep_spec(cfg)?;
    match (cfg.format.unwrap_or(Format::Csv), &cfg.out) {
        (Format::Csv, Some(out)) => {
            let progress = sweep_to_csv(&spec, out, cfg.batch.unwrap_or(8))?;
            if progress.failed_rows > 0 {
                eprintln!("pam: {} of {} rows failed", progress.failed_rows, progress.total_rows);
            }
            write_manifest(cfg)
        }
        (Format::Csv, None) => {
            let rows = sweep(&spec)?;
            write_phase_csv(std::io::stdout().lock(), &rows)?;
            write_manifest(cfg)
        }
        (Format::Json, _) => {
            let rows = sweep(&spec)?;
            let report = Report { csv: None, json: serde_json::to_value(&rows).expect("serializable") };
            emit(cfg, report)
        }
    }
}

fn random_field(lattice: &LatticeBox, rng: &mut ChaCha8Rng) -> Field<f64> {
    let density: f64 = rng.random_range(0.05..1.0);
    Field::from_fn(lattice, |_| if rng.random_bool(density) { rng.random_range(-1.0..1.0) } else { 0.0 })
}

fn check_gn_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let d = cfg.require(&cfg.d, "d")?;
    let seed = cfg.require(&cfg.seed, "seed")?;
    let count = cfg.samples.unwrap_or(1000);
    let lattice = LatticeBox::new(d, cfg.radius.unwrap_or(if d == 1 { 16 } else { 6 }))?;
    let anchor = check_gn(&Field::<f64>::delta(&lattice), d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut held = 0usize;
    let mut worst_ratio = anchor.lhs / anchor.rhs;
    for _ in 0..count {
        let f = random_field(&lattice, &mut rng);
        let c = check_gn(&f, d)?;
        held += c.holds as usize;
        if c.rhs > 0.0 {
            worst_ratio = worst_ratio.max(c.lhs / c.rhs);
        }
    }
    Ok(Report {
        csv: None,
        json: json!({
            "d": d,
            "fields": count,
            "held": held,
            "delta_anchor": anchor,
            "all_hold": held == count && anchor.holds,
            "max_lhs_over_rhs": worst_ratio,
        }),
    })
}

fn tensor_gap_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let d = cfg.require(&cfg.d, "d")?;
    let n = cfg.require(&cfg.n, "n")?;
    let params = PamParams::new(d, n, 1, cfg.require(&cfg.kappa, "kappa")?, cfg.require(&cfg.rho, "rho")?)?;
    let radius = cfg.require(&cfg.radius, "radius")?;
    let opts = spectral_opts(cfg);
    let tg = tensor_gap::<f64>(&params, radius, &opts)?;
    let lambda2 = top_eigen::<f64>(&params.with_p(2), radius, &opts)?;
    Ok(Report {
        csv: None,
        json: json!({
            "lambda1": tg.lambda1,
            "gap": tg.gap,
            "rayleigh2": tg.rayleigh2,
            "identity_residual": (tg.rayleigh2 - tg.lambda1 - tg.gap).abs(),
            "lambda2_box": lambda2.value,
        }),
    })
}
