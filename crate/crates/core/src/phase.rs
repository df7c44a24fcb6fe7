//! Bounds on the critical diffusion constant, certified intermittency labels
//! and resumable phase-diagram sweeps.

use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{PamError, Result};
use crate::greens::{alpha, green_zero};
use crate::spectral::{mu, mu_inverse, top_eigen, PamParams, SpectralOptions};

/// Largest moment order examined when searching for a certified window.
pub const MAX_CERTIFIED_Q: usize = 16;

/// Accuracy of the μ and μ⁻¹ evaluations inside the bounds.
const BOUND_TOL: f64 = 1e-10;

pub const PHASE_CSV_HEADER: &str = "d,n,p,kappa,rho,lambda_est,lambda_kind,kappa_lower,kappa_upper,regime,justification";

/// Two-sided bounds on the critical κ at which λ_p^{(n)}(·, ρ) reaches zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KappaBounds {
    pub d: usize,
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub lower: f64,
    pub upper: f64,
    /// Numerical error bound on `lower`.
    pub lower_error: f64,
    /// Numerical error bound on `upper`.
    pub upper_error: f64,
}

/// A critical κ that is infinite in d ≤ 2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CriticalKappa {
    Finite(f64),
    Infinite,
}

impl fmt::Display for CriticalKappa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CriticalKappa::Finite(v) => write!(f, "{v:?}"),
            CriticalKappa::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for CriticalKappa {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CriticalKappa::Finite(v) => s.serialize_f64(*v),
            CriticalKappa::Infinite => s.serialize_str("inf"),
        }
    }
}

/// Bounds that stay defined in every dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExtendedKappaBounds {
    pub d: usize,
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub lower: CriticalKappa,
    pub upper: CriticalKappa,
}

/// Per-dimension constants shared by many bound evaluations.
#[derive(Clone, Copy, Debug)]
pub struct BoundsContext {
    pub d: usize,
    pub g0: f64,
    pub g0_error: f64,
    /// α_d with its error, present for d ≥ 5.
    pub alpha: Option<(f64, f64)>,
}

impl BoundsContext {
    pub fn new(d: usize) -> Result<Self> {
        if d <= 2 {
            return Err(PamError::Domain(format!("critical kappa is infinite for d = {d}")));
        }
        let g = green_zero(d, 1e-12)?;
        let alpha = if d >= 5 {
            let a = alpha(d)?;
            Some((a.finite_value()?, a.abs_error))
        } else {
            None
        };
        Ok(Self { d, g0: g.finite_value()?, g0_error: g.abs_error, alpha })
    }

    /// Bounds for moment order p; `use_alpha` controls the d ≥ 5 lower bound.
    fn bounds_with(&self, n: usize, p: usize, rho: f64, use_alpha: bool) -> Result<KappaBounds> {
        if n == 0 || p == 0 {
            return Err(PamError::Parameter("n and p must be positive".into()));
        }
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(PamError::Parameter(format!("rho must be finite and non-negative, got {rho}")));
        }
        let (d, nf, pf) = (self.d, n as f64, p as f64);
        let upper = (nf * self.g0 * (1.0 - rho / (pf * self.g0))).max(0.0);
        let upper_error = if upper > 0.0 { nf * self.g0_error } else { 0.0 };
        let mut candidates = vec![
            (nf / (4.0 * d as f64) * mu(d, rho / pf, BOUND_TOL)?, nf / (4.0 * d as f64) * BOUND_TOL),
            (nf * mu_inverse(d, 4.0 * d as f64 * rho / pf, BOUND_TOL)?, nf * (BOUND_TOL + self.g0_error)),
        ];
        if let (true, Some((a, a_err))) = (use_alpha, self.alpha) {
            let v = nf * self.g0 - rho * nf / (pf * a);
            let err = nf * self.g0_error + rho * nf / pf * a_err / (a * a);
            candidates.push((v.max(0.0), if v > 0.0 { err } else { 0.0 }));
        }
        let (lower, lower_error) = candidates.into_iter().fold((0.0, 0.0), |best, c| if c.0 > best.0 { c } else { best });
        Ok(KappaBounds { d, n, p, rho, lower, upper, lower_error, upper_error })
    }

    pub fn bounds(&self, n: usize, p: usize, rho: f64) -> Result<KappaBounds> {
        self.bounds_with(n, p, rho, true)
    }

    /// Certified regime of the system at (κ, ρ).
    pub fn classify(&self, n: usize, kappa: f64, rho: f64) -> Regime {
        match self.try_classify(n, kappa, rho) {
            Ok(r) => r,
            Err(e) => Regime::new(RegimeLabel::Unresolved, format!("bound evaluation failed: {e}")),
        }
    }

    fn try_classify(&self, n: usize, kappa: f64, rho: f64) -> Result<Regime> {
        let nf = n as f64;
        if kappa >= nf * (self.g0 + self.g0_error) {
            return Ok(Regime::new(
                RegimeLabel::NotIntermittent,
                "kappa >= n*G_d(0): every moment exponent vanishes".into(),
            ));
        }
        for q in 2..=MAX_CERTIFIED_Q {
            let prev = self.bounds_with(n, q - 1, rho, true)?;
            if prev.upper + prev.upper_error > kappa {
                // the upper bounds grow with q, so no larger q can qualify
                break;
            }
            let qf = q as f64;
            let alpha_ok = self.alpha.is_some_and(|(a, e)| a - e > (qf - 1.0) / qf);
            let cur = self.bounds_with(n, q, rho, alpha_ok)?;
            if kappa < cur.lower - cur.lower_error {
                return Ok(Regime::new(
                    RegimeLabel::CertifiedQIntermittent(q),
                    format!(
                        "kappa >= upper critical bound {} for p={} so lambda_{}=0; kappa < lower critical bound {} for p={} so lambda_{}>0",
                        prev.upper,
                        q - 1,
                        q - 1,
                        cur.lower,
                        q,
                        q
                    ),
                ));
            }
        }
        Ok(Regime::new(
            RegimeLabel::PartialIntermittent,
            "kappa < n*G_d(0): some moment exponent is positive; full intermittency here is conjectured and not asserted".into(),
        ))
    }
}

/// Bounds on the critical κ for d ≥ 3.
pub fn kappa_bounds(d: usize, n: usize, p: usize, rho: f64) -> Result<KappaBounds> {
    BoundsContext::new(d)?.bounds(n, p, rho)
}

/// Like [`kappa_bounds`] but reports an infinite critical value for d ≤ 2.
pub fn kappa_bounds_extended(d: usize, n: usize, p: usize, rho: f64) -> Result<ExtendedKappaBounds> {
    if d == 0 {
        return Err(PamError::Parameter("dimension must be at least 1".into()));
    }
    if d <= 2 {
        if n == 0 || p == 0 || !(rho.is_finite() && rho >= 0.0) {
            return Err(PamError::Parameter("invalid n, p or rho".into()));
        }
        return Ok(ExtendedKappaBounds { d, n, p, rho, lower: CriticalKappa::Infinite, upper: CriticalKappa::Infinite });
    }
    let b = kappa_bounds(d, n, p, rho)?;
    Ok(ExtendedKappaBounds {
        d,
        n,
        p,
        rho,
        lower: CriticalKappa::Finite(b.lower),
        upper: CriticalKappa::Finite(b.upper),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegimeLabel {
    NotIntermittent,
    PartialIntermittent,
    CertifiedQIntermittent(usize),
    /// The row's own moment exponent is certified zero while the system
    /// remains intermittent through higher moments.
    ZeroExponent,
    /// A computation for this row failed.
    Unresolved,
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegimeLabel::NotIntermittent => f.write_str("NotIntermittent"),
            RegimeLabel::PartialIntermittent => f.write_str("PartialIntermittent"),
            RegimeLabel::CertifiedQIntermittent(q) => write!(f, "CertifiedQIntermittent({q})"),
            RegimeLabel::ZeroExponent => f.write_str("ZeroExponent"),
            RegimeLabel::Unresolved => f.write_str("Unresolved"),
        }
    }
}

impl Serialize for RegimeLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Regime {
    pub label: RegimeLabel,
    pub justification: String,
}

impl Regime {
    fn new(label: RegimeLabel, justification: String) -> Self {
        Self { label, justification }
    }
}

/// Certified intermittency regime at (d, n, κ, ρ).
pub fn classify(d: usize, n: usize, kappa: f64, rho: f64) -> Regime {
    if d == 0 || n == 0 || !(kappa.is_finite() && kappa >= 0.0) || !(rho.is_finite() && rho >= 0.0) {
        return Regime::new(RegimeLabel::Unresolved, "invalid parameters".into());
    }
    if d <= 2 {
        return Regime::new(
            RegimeLabel::PartialIntermittent,
            "recurrent walk: some moment exponent is positive for every kappa; full intermittency is conjectured and not asserted".into(),
        );
    }
    match BoundsContext::new(d) {
        Ok(ctx) => ctx.classify(n, kappa, rho),
        Err(e) => Regime::new(RegimeLabel::Unresolved, format!("bound evaluation failed: {e}")),
    }
}

/// Label for a single moment order: [`RegimeLabel::ZeroExponent`] when λ_p is
/// certified zero below the non-intermittent threshold, otherwise the system label.
pub fn classify_moment(params: &PamParams) -> Regime {
    if params.validate().is_err() {
        return Regime::new(RegimeLabel::Unresolved, "invalid parameters".into());
    }
    if params.d <= 2 {
        return classify(params.d, params.n, params.kappa, params.rho);
    }
    match BoundsContext::new(params.d) {
        Ok(ctx) => classify_moment_with(&ctx, params),
        Err(e) => Regime::new(RegimeLabel::Unresolved, format!("bound evaluation failed: {e}")),
    }
}

fn classify_moment_with(ctx: &BoundsContext, params: &PamParams) -> Regime {
    let system = ctx.classify(params.n, params.kappa, params.rho);
    if system.label == RegimeLabel::NotIntermittent || system.label == RegimeLabel::Unresolved {
        return system;
    }
    match ctx.bounds(params.n, params.p, params.rho) {
        Ok(b) if params.kappa >= b.upper + b.upper_error => Regime::new(
            RegimeLabel::ZeroExponent,
            format!("kappa >= upper critical bound {} so lambda_{}=0; system: {}", b.upper, params.p, system.label),
        ),
        Ok(_) => system,
        Err(e) => Regime::new(RegimeLabel::Unresolved, format!("bound evaluation failed: {e}")),
    }
}

/// Which parameter the sweep grid varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Kappa,
    Rho,
}

/// How each row's λ column is produced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaSource {
    /// Box eigenvalue at the given radius (a certified lower bound).
    Spectral { radius: usize },
    /// μ(κ + ρ), valid only for n = p = 1.
    ClosedForm,
    /// No λ column; bounds and labels only.
    BoundsOnly,
}

impl LambdaSource {
    fn tag(&self) -> &'static str {
        match self {
            LambdaSource::Spectral { .. } => "spectral",
            LambdaSource::ClosedForm => "closed-form",
            LambdaSource::BoundsOnly => "none",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub d: usize,
    pub n: usize,
    pub ps: Vec<usize>,
    pub axis: SweepAxis,
    /// Sorted values of the varied parameter.
    pub grid: Vec<f64>,
    /// Value of the parameter that is held fixed.
    pub fixed: f64,
    pub lambda: LambdaSource,
    pub spectral: SpectralOptions,
}

impl SweepSpec {
    fn validate(&self) -> Result<()> {
        if self.grid.is_empty() || self.ps.is_empty() {
            return Err(PamError::Parameter("sweep grid is empty".into()));
        }
        if self.grid.windows(2).any(|w| w[0] > w[1]) {
            return Err(PamError::Parameter("sweep grid must be sorted".into()));
        }
        for &p in &self.ps {
            self.params_at(p, self.grid[0]).validate()?;
        }
        Ok(())
    }

    fn params_at(&self, p: usize, x: f64) -> PamParams {
        let (kappa, rho) = match self.axis {
            SweepAxis::Kappa => (x, self.fixed),
            SweepAxis::Rho => (self.fixed, x),
        };
        PamParams { d: self.d, n: self.n, p, kappa, rho }
    }

    /// Row parameters in output order: p outer, grid inner.
    pub fn points(&self) -> Vec<PamParams> {
        self.ps.iter().flat_map(|&p| self.grid.iter().map(move |&x| self.params_at(p, x))).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseRow {
    pub params: PamParams,
    pub lambda_est: Option<f64>,
    pub lambda_kind: &'static str,
    pub kappa_lower: CriticalKappa,
    pub kappa_upper: CriticalKappa,
    pub regime: Regime,
}

impl PhaseRow {
    pub fn failed(&self) -> bool {
        self.regime.label == RegimeLabel::Unresolved
    }

    fn csv_record(&self) -> [String; 11] {
        let p = &self.params;
        [
            p.d.to_string(),
            p.n.to_string(),
            p.p.to_string(),
            format!("{:?}", p.kappa),
            format!("{:?}", p.rho),
            self.lambda_est.map(|v| format!("{v:?}")).unwrap_or_default(),
            self.lambda_kind.to_string(),
            self.kappa_lower.to_string(),
            self.kappa_upper.to_string(),
            self.regime.label.to_string(),
            self.regime.justification.clone(),
        ]
    }
}

fn compute_row(spec: &SweepSpec, ctx: Option<&BoundsContext>, params: PamParams) -> PhaseRow {
    let mut row = PhaseRow {
        params,
        lambda_est: None,
        lambda_kind: spec.lambda.tag(),
        kappa_lower: CriticalKappa::Infinite,
        kappa_upper: CriticalKappa::Infinite,
        regime: Regime::new(RegimeLabel::Unresolved, String::new()),
    };
    let fail = |mut row: PhaseRow, e: PamError| {
        row.regime = Regime::new(RegimeLabel::Unresolved, format!("row failed: {e}"));
        row
    };
    let lambda = match spec.lambda {
        LambdaSource::Spectral { radius } => top_eigen::<f64>(&params, radius, &spec.spectral).map(|e| Some(e.value)),
        LambdaSource::ClosedForm if params.n == 1 && params.p == 1 => {
            mu(params.d, params.kappa + params.rho, spec.spectral.tol.max(1e-12)).map(Some)
        }
        LambdaSource::ClosedForm => Err(PamError::Parameter("closed form needs n = p = 1".into())),
        LambdaSource::BoundsOnly => Ok(None),
    };
    match lambda {
        Ok(v) => row.lambda_est = v,
        Err(e) => return fail(row, e),
    }
    match ctx {
        Some(ctx) => match ctx.bounds(params.n, params.p, params.rho) {
            Ok(b) => {
                row.kappa_lower = CriticalKappa::Finite(b.lower);
                row.kappa_upper = CriticalKappa::Finite(b.upper);
                row.regime = classify_moment_with(ctx, &params);
            }
            Err(e) => return fail(row, e),
        },
        None => row.regime = classify(params.d, params.n, params.kappa, params.rho),
    }
    row
}

fn bounds_context(spec: &SweepSpec) -> Result<Option<BoundsContext>> {
    if spec.d <= 2 {
        Ok(None)
    } else {
        BoundsContext::new(spec.d).map(Some)
    }
}

/// Runs the whole sweep in memory; failures are confined to their rows.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<PhaseRow>> {
    spec.validate()?;
    let ctx = bounds_context(spec)?;
    Ok(spec.points().into_par_iter().map(|p| compute_row(spec, ctx.as_ref(), p)).collect())
}

/// Path of the resume cursor kept next to a sweep output file.
pub fn cursor_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".cursor");
    PathBuf::from(s)
}

fn read_cursor(path: &Path) -> Result<usize> {
    match fs::read_to_string(path) {
        Ok(s) => s.trim().parse().map_err(|_| PamError::Parameter(format!("corrupt cursor file {}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(0),
        Err(e) => Err(io_err(path, e)),
    }
}

fn io_err(path: &Path, e: std::io::Error) -> PamError {
    PamError::Parameter(format!("{}: {e}", path.display()))
}

/// Outcome of [`sweep_to_csv`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SweepProgress {
    pub total_rows: usize,
    /// Rows found already complete on disk.
    pub resumed_from: usize,
    pub failed_rows: usize,
}

/// Writes the sweep to `out` as CSV in grid order, `batch` rows at a time.
///
/// After each batch the count of completed rows is stored in
/// `<out>.cursor`; a later call with the same spec continues from there.
/// The cursor is removed once the sweep is complete.
pub fn sweep_to_csv(spec: &SweepSpec, out: &Path, batch: usize) -> Result<SweepProgress> {
    spec.validate()?;
    let ctx = bounds_context(spec)?;
    let points = spec.points();
    let cursor = cursor_path(out);
    let mut done = read_cursor(&cursor)?;
    if done > points.len() {
        return Err(PamError::Parameter(format!("cursor {done} exceeds the {} grid rows", points.len())));
    }
    let resumed_from = done;
    if done == 0 {
        let mut w = csv::Writer::from_path(out).map_err(|e| PamError::Parameter(format!("{}: {e}", out.display())))?;
        w.write_record(PHASE_CSV_HEADER.split(',')).and_then(|_| Ok(w.flush()?)).map_err(|e| PamError::Parameter(e.to_string()))?;
    } else {
        truncate_to_rows(out, done)?;
    }
    let mut failed_rows = 0;
    for chunk in points[done..].chunks(batch.max(1)) {
        let rows: Vec<PhaseRow> = chunk.par_iter().map(|&p| compute_row(spec, ctx.as_ref(), p)).collect();
        let file = OpenOptions::new().append(true).open(out).map_err(|e| io_err(out, e))?;
        let mut w = csv::Writer::from_writer(file);
        for row in &rows {
            failed_rows += row.failed() as usize;
            w.write_record(row.csv_record()).map_err(|e| PamError::Parameter(e.to_string()))?;
        }
        w.flush().map_err(|e| io_err(out, e))?;
        done += rows.len();
        fs::write(&cursor, done.to_string()).map_err(|e| io_err(&cursor, e))?;
    }
    fs::remove_file(&cursor).map_err(|e| io_err(&cursor, e))?;
    Ok(SweepProgress { total_rows: points.len(), resumed_from, failed_rows })
}

/// Drops any partially written rows beyond the first `rows` records.
fn truncate_to_rows(out: &Path, rows: usize) -> Result<()> {
    let file = File::open(out).map_err(|e| io_err(out, e))?;
    let mut keep = 0u64;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(BufReader::new(file));
    let mut record = csv::ByteRecord::new();
    let mut seen = 0;
    while seen < rows {
        match reader.read_byte_record(&mut record) {
            Ok(true) => {
                seen += 1;
                keep = reader.position().byte();
            }
            Ok(false) => break,
            Err(e) => return Err(PamError::Parameter(format!("{}: {e}", out.display()))),
        }
    }
    if seen < rows {
        return Err(PamError::Parameter(format!("{} holds {seen} rows but the cursor says {rows}", out.display())));
    }
    let f = OpenOptions::new().write(true).open(out).map_err(|e| io_err(out, e))?;
    f.set_len(keep).map_err(|e| io_err(out, e))?;
    Ok(())
}

/// Reads back a phase CSV as string records, header excluded.
pub fn read_phase_csv(path: &Path) -> Result<Vec<Vec<String>>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut first = String::new();
    BufReader::new(File::open(path).map_err(|e| io_err(path, e))?)
        .read_line(&mut first)
        .map_err(|e| io_err(path, e))?;
    if first.trim_end() != PHASE_CSV_HEADER {
        return Err(PamError::Parameter(format!("{} is not a phase table", path.display())));
    }
    let mut reader = csv::Reader::from_reader(file);
    reader
        .records()
        .map(|r| r.map(|r| r.iter().map(str::to_string).collect()).map_err(|e| PamError::Parameter(e.to_string())))
        .collect()
}

/// Writes rows to any sink as CSV with the phase header.
pub fn write_phase_csv<W: Write>(sink: W, rows: &[PhaseRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let err = |e: csv::Error| PamError::Parameter(e.to_string());
    w.write_record(PHASE_CSV_HEADER.split(',')).map_err(err)?;
    for row in rows {
        w.write_record(row.csv_record()).map_err(err)?;
    }
    w.flush().map_err(|e| PamError::Parameter(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(d: usize) -> f64 {
        green_zero(d, 1e-12).unwrap().finite_value().unwrap()
    }

    #[test]
    fn bounds_pinch_at_zero_rho() {
        for (d, n) in [(3, 1), (4, 2)] {
            let b = kappa_bounds(d, n, 2, 0.0).unwrap();
            let target = n as f64 * g(d);
            assert!((b.upper - target).abs() < 1e-12);
            assert!((b.lower - target).abs() < 1e-8, "{b:?}");
        }
    }

    #[test]
    fn upper_vanishes_at_threshold() {
        let g3 = g(3);
        let b = kappa_bounds(3, 1, 2, 2.0 * g3).unwrap();
        assert_eq!(b.upper, 0.0);
        let b = kappa_bounds(3, 1, 2, 3.0 * g3).unwrap();
        assert_eq!(b.upper, 0.0);
        assert!(b.lower <= b.upper + 1e-12);
    }

    #[test]
    fn low_dimensions() {
        assert!(matches!(kappa_bounds(2, 1, 1, 0.1), Err(PamError::Domain(_))));
        let e = kappa_bounds_extended(1, 1, 1, 0.1).unwrap();
        assert_eq!(e.upper, CriticalKappa::Infinite);
        assert_eq!(e.upper.to_string(), "inf");
        assert_eq!(classify(2, 1, 5.0, 0.3).label, RegimeLabel::PartialIntermittent);
        assert_eq!(classify(1, 1, 0.0, 0.0).label, RegimeLabel::PartialIntermittent);
    }

    #[test]
    fn large_kappa_is_not_intermittent() {
        let g3 = g(3);
        for rho in [0.0, 0.1, 1.0] {
            assert_eq!(classify(3, 1, 2.0 * g3, rho).label, RegimeLabel::NotIntermittent);
        }
    }

    #[test]
    fn alpha_bound_enters_in_five_dimensions() {
        let g5 = g(5);
        let a5 = alpha(5).unwrap().finite_value().unwrap();
        let rho = 0.5 * g5;
        let b = kappa_bounds(5, 1, 2, rho).unwrap();
        let expected = (g5 - rho / (2.0 * a5)).max(0.0);
        assert!(b.lower >= expected - 1e-12);
        assert!(b.lower <= b.upper);
    }

    #[test]
    fn moment_label_marks_vanishing_exponent() {
        let g5 = g(5);
        let rho = 0.2 * g5;
        let ctx = BoundsContext::new(5).unwrap();
        let up1 = ctx.bounds(1, 1, rho).unwrap().upper;
        let params = PamParams::new(5, 1, 1, up1 + 1e-3, rho).unwrap();
        assert_eq!(classify_moment(&params).label, RegimeLabel::ZeroExponent);
        let params = params.with_p(2);
        assert_eq!(classify_moment(&params).label, RegimeLabel::CertifiedQIntermittent(2));
    }

    #[test]
    fn cursor_sits_next_to_output() {
        assert_eq!(cursor_path(Path::new("/tmp/a/phase.csv")), PathBuf::from("/tmp/a/phase.csv.cursor"));
    }
}
