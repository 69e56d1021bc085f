use std::time::Instant;

use rayon::prelude::*;

use super::config::SweepSpec;
use crate::error::{invalid, Error, Result};
use crate::oracle::{qfi_finite_difference, FdConfig, QdrOracleFamily};
use crate::radar::{build_qdr_received, jc_approx, DurationConvention, QdrProbe, ScenarioParams};
use crate::spectral::{schmidt_spectrum, SchmidtSpectrum};

/// Grid coordinates of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub sigma_p: f64,
    pub c_xi: f64,
    pub eta: f64,
    pub n_b: f64,
}

impl SweepPoint {
    pub fn label(&self) -> String {
        format!(
            "(sigma_p = {:e}, c_xi = {}, eta = {}, n_b = {})",
            self.sigma_p, self.c_xi, self.eta, self.n_b
        )
    }
}

/// Fixed physics shared by every point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointPhysics {
    pub speed: f64,
    pub omega_c: f64,
    pub epsilon: f64,
    pub tail_tol: f64,
    pub convention: DurationConvention,
}

impl PointPhysics {
    pub fn of(spec: &SweepSpec) -> Self {
        Self {
            speed: spec.speed,
            omega_c: spec.omega_c,
            epsilon: spec.epsilon,
            tail_tol: spec.tail_tol,
            convention: spec.convention,
        }
    }
}

/// Result of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub epsilon: f64,
    pub xi: f64,
    pub mu: f64,
    pub n_s: f64,
    pub duration: f64,
    pub schmidt_number: f64,
    pub m_used: usize,
    pub jc: f64,
    pub jq: f64,
    pub ratio: f64,
    pub ratio_db: f64,
    /// Minimum eigenvalue of `σ_r + iΩ`.
    pub physicality_margin: f64,
    /// Seconds spent on this point; not written to the CSV.
    pub wall_time: f64,
}

/// Lexicographic grid order: `σ_p`, then `c_ξ`, `η`, `N_B` (fastest).
pub fn grid_points(spec: &SweepSpec) -> Vec<SweepPoint> {
    let (eta, n_b, c_xi) = (spec.eta.values(), spec.n_b.values(), spec.c_xi.values());
    let mut pts = Vec::with_capacity(spec.point_count());
    for &sigma_p in &spec.sigma_p_axis.values() {
        for &c in &c_xi {
            for &e in &eta {
                for &n in &n_b {
                    pts.push(SweepPoint {
                        sigma_p,
                        c_xi: c,
                        eta: e,
                        n_b: n,
                    });
                }
            }
        }
    }
    pts
}

/// Evaluates one point: matched CDR/QDR probes and their QFIs.
pub fn evaluate_point(physics: &PointPhysics, point: &SweepPoint) -> Result<SweepRow> {
    let start = Instant::now();
    let inner = || -> Result<SweepRow> {
        let scenario = ScenarioParams::new(physics.speed, physics.omega_c, point.eta, point.n_b)?;
        if point.eta == 1.0 && point.n_b == 0.0 {
            return Err(Error::PureState { excess: 0.0 });
        }
        let spectrum = schmidt_spectrum(point.sigma_p, physics.epsilon, physics.tail_tol)?;
        let k = spectrum.schmidt_number();
        let xi = point.c_xi * k;
        let probe = QdrProbe::new(spectrum, xi)?;
        let n_s = probe.n_s();
        let duration = probe.duration(physics.convention)?;
        let received = build_qdr_received(&probe, &scenario)?;
        let jq = received.qfi_unit()? / scenario.mu().powi(2);
        let jc = jc_approx(n_s, duration, &scenario);
        let ratio = jq / jc;
        let row = SweepRow {
            point: *point,
            epsilon: physics.epsilon,
            xi,
            mu: scenario.mu(),
            n_s,
            duration,
            schmidt_number: k,
            m_used: probe.pairs() - 1,
            jc,
            jq,
            ratio,
            ratio_db: 10.0 * ratio.log10(),
            physicality_margin: received.physicality_margin(),
            wall_time: 0.0,
        };
        check_row(&row)?;
        Ok(row)
    };
    inner()
        .map(|row| SweepRow {
            wall_time: start.elapsed().as_secs_f64(),
            ..row
        })
        .map_err(|e| Error::Point {
            params: point.label(),
            source: Box::new(e),
        })
}

fn check_row(row: &SweepRow) -> Result<()> {
    if !(row.jq > 0.0 && row.jc > 0.0 && row.ratio_db.is_finite()) {
        return Err(Error::InternalConsistency(format!(
            "non-positive QFI: J_q = {:e}, J_c = {:e}",
            row.jq, row.jc
        )));
    }
    if row.physicality_margin < -crate::symplectic::PHYSICALITY_TOL {
        return Err(Error::InternalConsistency(format!(
            "received covariance unphysical (margin {:.3e})",
            row.physicality_margin
        )));
    }
    Ok(())
}

/// One oracle re-check of a sweep row.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRecord {
    pub index: usize,
    pub point: SweepPoint,
    /// Schmidt pairs kept in the audited probe.
    pub pairs: usize,
    /// Pipeline `J_q` of the audited probe.
    pub jq: f64,
    /// Fidelity finite-difference QFI at the row's `μ`, if it ran.
    pub oracle: Option<f64>,
    pub rel_err: Option<f64>,
    pub status: String,
}

impl AuditRecord {
    pub fn passed(&self) -> bool {
        self.status == "ok" || self.status.starts_with("skipped")
    }
}

/// Relative agreement required between the pipeline and the oracle.
pub const AUDIT_TOLERANCE: f64 = 1e-4;
/// Largest Schmidt truncation handed to the oracle.
pub const AUDIT_MAX_PAIRS: usize = 24;
/// Pairs with fewer mean photons are dropped from the audited probe.
pub const AUDIT_PHOTON_FLOOR: f64 = 1e-4;

/// Re-derives `J_q` with the fidelity oracle at the row's `μ`, which also
/// spot-checks the `1/μ²` scale rule.
///
/// The oracle cannot resolve nearly empty pairs, so both sides use the row's
/// probe cut to the pairs holding at least [`AUDIT_PHOTON_FLOOR`] photons.
pub fn audit_row(physics: &PointPhysics, index: usize, row: &SweepRow) -> AuditRecord {
    let mut rec = AuditRecord {
        index,
        point: row.point,
        pairs: 0,
        jq: f64::NAN,
        oracle: None,
        rel_err: None,
        status: String::new(),
    };
    let run = |rec: &mut AuditRecord| -> Result<f64> {
        let full = QdrProbe::new(
            schmidt_spectrum(row.point.sigma_p, physics.epsilon, physics.tail_tol)?,
            row.xi,
        )?;
        let kept = full
            .photons()
            .iter()
            .take_while(|&&n| n >= AUDIT_PHOTON_FLOOR)
            .count()
            .clamp(1, AUDIT_MAX_PAIRS);
        rec.pairs = kept;
        let spectrum = SchmidtSpectrum::with_order(row.point.sigma_p, physics.epsilon, kept - 1)?;
        let probe = QdrProbe::new(spectrum, row.xi)?;
        let scenario =
            ScenarioParams::from_mu(row.mu, physics.omega_c, row.point.eta, row.point.n_b)?;
        rec.jq = build_qdr_received(&probe, &scenario)?.qfi_unit()? / row.mu.powi(2);
        let family = QdrOracleFamily::new(&probe, physics.omega_c, row.point.eta, row.point.n_b)?;
        let cfg = FdConfig {
            tolerance: AUDIT_TOLERANCE / 10.0,
            ..FdConfig::default()
        };
        Ok(qfi_finite_difference(&family, row.mu, &cfg)?.value)
    };
    match run(&mut rec) {
        Ok(v) => {
            let rel = (v - rec.jq).abs() / rec.jq;
            rec.oracle = Some(v);
            rec.rel_err = Some(rel);
            rec.status = if rel <= AUDIT_TOLERANCE {
                "ok".into()
            } else {
                "mismatch".into()
            };
        }
        Err(Error::OracleFailure(msg)) => rec.status = format!("skipped: {msg}"),
        Err(e) => rec.status = format!("error: {e}"),
    }
    rec
}

/// Rows picked for the audit: an even stride covering `fraction` of them.
pub fn audit_indices(n_rows: usize, fraction: f64) -> Vec<usize> {
    if fraction <= 0.0 || n_rows == 0 {
        return Vec::new();
    }
    let stride = (1.0 / fraction).round().max(1.0) as usize;
    (0..n_rows).step_by(stride).collect()
}

/// Rows in grid order plus the audit records, if any.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub audit: Vec<AuditRecord>,
}

/// Evaluates every grid point on a pool of `threads` workers; results come
/// back in grid order whatever the worker count.
pub fn run_sweep(spec: &SweepSpec, threads: usize) -> Result<SweepOutcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    let physics = PointPhysics::of(spec);
    let points = grid_points(spec);
    let rows: Vec<SweepRow> = pool.install(|| {
        points
            .par_iter()
            .map(|p| evaluate_point(&physics, p))
            .collect::<Result<Vec<_>>>()
    })?;
    let picks = audit_indices(rows.len(), spec.output.audit);
    let audit = pool.install(|| {
        picks
            .par_iter()
            .map(|&i| audit_row(&physics, i, &rows[i]))
            .collect()
    });
    Ok(SweepOutcome { rows, audit })
}
