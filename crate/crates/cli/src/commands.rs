//! The four subcommands as library functions returning serializable reports.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use ypq_core::dynamics::{
    integrate_geodesic, invariants, is_degenerate, jacobian_rank, momenta_from_velocities, random_state,
    ChartExit, IntegratorOptions, Invariant, PhaseState, Trajectory,
};
use ypq_core::geom::INTERIOR_MARGIN;
use ypq_core::toric::{ypq_toric_model, ToricModel};
use ypq_core::ypq::{make_params, PQParams};

use crate::suites::{self, stream, Check, SuiteConfig};

pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_RTOL: f64 = 1e-10;
pub const DEFAULT_ATOL: f64 = 1e-12;
pub const DEFAULT_T_END: f64 = 50.0;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_POINTS: usize = 20;

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub p: u32,
    pub q: u32,
    pub seed: u64,
    pub samples: usize,
    pub tol: f64,
    pub rtol: f64,
    pub atol: f64,
    pub t_end: f64,
    pub points: usize,
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub init: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(p: u32, q: u32) -> Self {
        Self {
            p,
            q,
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
            tol: DEFAULT_TOL,
            rtol: DEFAULT_RTOL,
            atol: DEFAULT_ATOL,
            t_end: DEFAULT_T_END,
            points: DEFAULT_POINTS,
            json: None,
            csv: None,
            init: None,
        }
    }

    pub fn params(&self) -> Result<PQParams, ConfigError> {
        make_params(self.p, self.q).map_err(|e| ConfigError(e.to_string()))
    }

    /// Ratio applied to every nominal tolerance; 1 at the default `--tol`.
    pub fn tol_scale(&self) -> f64 {
        self.tol / DEFAULT_TOL
    }

    fn suite_config(&self) -> SuiteConfig {
        SuiteConfig {
            seed: self.seed,
            samples: self.samples,
            scale: self.tol_scale(),
        }
    }

    pub fn validate(&self) -> Result<PQParams, ConfigError> {
        let pr = self.params()?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("tol", self.tol)?;
        positive("rtol", self.rtol)?;
        positive("atol", self.atol)?;
        if !self.t_end.is_finite() || self.t_end == 0.0 {
            return Err(ConfigError(format!("t-end must be finite and non-zero, got {}", self.t_end)));
        }
        if self.samples < 2 {
            return Err(ConfigError(format!("samples must be at least 2, got {}", self.samples)));
        }
        if self.points == 0 {
            return Err(ConfigError("points must be at least 1".into()));
        }
        Ok(pr)
    }
}

/// Invalid input; maps to exit code 2.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, Serialize)]
pub struct ParamSummary {
    pub p: u32,
    pub q: u32,
    pub a: f64,
    pub ell: f64,
    pub roots: [f64; 3],
}

impl From<&PQParams> for ParamSummary {
    fn from(pr: &PQParams) -> Self {
        Self {
            p: pr.p,
            q: pr.q,
            a: pr.a,
            ell: pr.ell,
            roots: pr.roots(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub command: &'static str,
    pub params: ParamSummary,
    pub seed: u64,
    pub samples: usize,
    pub tol: f64,
    pub checks: Vec<Check>,
    pub pass: bool,
}

pub fn verify(cfg: &RunConfig) -> Result<VerifyReport, ConfigError> {
    let pr = cfg.validate()?;
    let checks = suites::verify_all(&pr, &cfg.suite_config());
    Ok(VerifyReport {
        command: "verify",
        params: (&pr).into(),
        seed: cfg.seed,
        samples: cfg.samples,
        tol: cfg.tol,
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ToricReport {
    pub command: &'static str,
    pub params: ParamSummary,
    pub model: ToricModel,
    pub gorenstein: bool,
    pub seed: u64,
    pub samples: usize,
    pub det_constant: Option<f64>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

pub fn toric(cfg: &RunConfig) -> Result<ToricReport, ConfigError> {
    let pr = cfg.validate()?;
    let model = ypq_toric_model(&pr);
    let t = suites::toric(&pr, &cfg.suite_config());
    Ok(ToricReport {
        command: "toric",
        params: (&pr).into(),
        gorenstein: model.is_gorenstein(),
        model,
        seed: cfg.seed,
        samples: cfg.samples,
        det_constant: t.det_constant,
        pass: t.checks.iter().all(|c| c.pass),
        checks: t.checks,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RankState {
    pub state: PhaseState,
    pub rank: usize,
    pub singular_values: Vec<f64>,
    /// Rank of `(H, P_φ, P_ψ, P_α, J²)` alone.
    pub rank_first_five: usize,
    /// Rank of `(H, P_φ)`.
    pub rank_h_pphi: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RankReport {
    pub command: &'static str,
    pub params: ParamSummary,
    pub seed: u64,
    pub points: usize,
    pub relative_threshold: f64,
    /// Draws discarded for lying on a symmetry locus.
    pub degenerate_skipped: usize,
    pub states: Vec<RankState>,
    pub min_rank: usize,
    pub max_rank: usize,
    pub verdict: String,
    pub pass: bool,
}

pub const DOF: usize = 5;

pub fn generic_states(pr: &PQParams, seed: u64, n: usize) -> (Vec<PhaseState>, usize) {
    let mut rng = stream(seed, 10);
    let mut out = Vec::with_capacity(n);
    let mut skipped = 0;
    while out.len() < n {
        let s = random_state(pr, &mut rng, INTERIOR_MARGIN);
        if is_degenerate(&s) {
            skipped += 1;
        } else {
            out.push(s);
        }
    }
    (out, skipped)
}

pub fn rank(cfg: &RunConfig) -> Result<RankReport, ConfigError> {
    let pr = cfg.validate()?;
    let (states, skipped) = generic_states(&pr, cfg.seed, cfg.points);
    let results: Vec<Result<RankState, String>> = states
        .par_iter()
        .map(|s| {
            let all = jacobian_rank(&pr, s, &Invariant::ALL).map_err(|e| e.to_string())?;
            let five = jacobian_rank(&pr, s, &Invariant::ALL[..5]).map_err(|e| e.to_string())?;
            let two = jacobian_rank(&pr, s, &[Invariant::H, Invariant::PPhi]).map_err(|e| e.to_string())?;
            Ok(RankState {
                state: *s,
                rank: all.rank,
                singular_values: all.singular_values,
                rank_first_five: five.rank,
                rank_h_pphi: two.rank,
            })
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        rows.push(r.map_err(ConfigError)?);
    }
    let min_rank = rows.iter().map(|r| r.rank).min().unwrap_or(0);
    let max_rank = rows.iter().map(|r| r.rank).max().unwrap_or(0);
    let pass = min_rank == DOF && max_rank == DOF;
    let verdict = if pass {
        format!("completely integrable (rank {DOF} = dof)")
    } else if max_rank > DOF {
        format!("rank {max_rank} exceeds dof {DOF}")
    } else {
        format!("rank deficient (minimum rank {min_rank} < dof {DOF})")
    };
    Ok(RankReport {
        command: "rank",
        params: (&pr).into(),
        seed: cfg.seed,
        points: rows.len(),
        relative_threshold: ypq_core::dynamics::RANK_RTOL,
        degenerate_skipped: skipped,
        states: rows,
        min_rank,
        max_rank,
        verdict,
        pass,
    })
}

/// Initial condition file: positions plus either momenta or velocities.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitFile {
    pub x: [f64; 5],
    #[serde(default)]
    pub p: Option<[f64; 5]>,
    #[serde(default)]
    pub xdot: Option<[f64; 5]>,
}

pub fn load_init(pr: &PQParams, path: &std::path::Path) -> Result<PhaseState, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let init: InitFile = serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    pr.check_chart(&init.x).map_err(|e| ConfigError(e.to_string()))?;
    let p = match (init.p, init.xdot) {
        (Some(p), None) => p,
        (None, Some(v)) => momenta_from_velocities(pr, &init.x, &v).map_err(|e| ConfigError(e.to_string()))?,
        _ => return Err(ConfigError("init file needs exactly one of \"p\" or \"xdot\"".into())),
    };
    Ok(PhaseState::new(init.x, p))
}

#[derive(Clone, Debug, Serialize)]
pub struct DriftSummary {
    pub name: &'static str,
    pub max_drift: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IntegrateReport {
    pub command: &'static str,
    pub params: ParamSummary,
    pub seed: u64,
    pub init: &'static str,
    pub initial_state: PhaseState,
    pub initial_invariants: [f64; 7],
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
    pub samples: usize,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub max_drift: Vec<DriftSummary>,
    pub chart_exit: Option<ChartExit>,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn integrator_options(cfg: &RunConfig) -> IntegratorOptions {
    IntegratorOptions {
        rtol: cfg.rtol,
        atol: cfg.atol,
        samples: cfg.samples,
        ..Default::default()
    }
}

pub fn integrate(cfg: &RunConfig) -> Result<(IntegrateReport, Trajectory), ConfigError> {
    let pr = cfg.validate()?;
    let (s0, init) = match &cfg.init {
        Some(path) => (load_init(&pr, path)?, "file"),
        None => (random_state(&pr, &mut stream(cfg.seed, 11), INTERIOR_MARGIN), "random"),
    };
    let i0 = invariants(&pr, &s0).map_err(|e| ConfigError(e.to_string()))?;
    let tr = integrate_geodesic(&pr, &s0, cfg.t_end, &integrator_options(cfg)).map_err(|e| ConfigError(e.to_string()))?;
    let md = tr.max_drift();
    let max_drift = Invariant::ALL
        .iter()
        .map(|k| DriftSummary {
            name: k.name(),
            max_drift: md[k.index()],
        })
        .collect();
    let tolerance = suites::tol::DRIFT * cfg.tol_scale();
    Ok((
        IntegrateReport {
            command: "integrate",
            params: (&pr).into(),
            seed: cfg.seed,
            init,
            initial_state: s0,
            initial_invariants: i0,
            t_end: cfg.t_end,
            rtol: cfg.rtol,
            atol: cfg.atol,
            samples: tr.samples.len(),
            accepted_steps: tr.accepted_steps,
            rejected_steps: tr.rejected_steps,
            max_drift,
            chart_exit: tr.chart_exit.clone(),
            tolerance,
            pass: md.iter().all(|&d| d <= tolerance),
        },
        tr,
    ))
}

pub const CSV_STATE_COLUMNS: [&str; 11] = [
    "t", "theta", "phi", "y", "alpha", "psi", "p_theta", "p_phi", "p_y", "p_alpha", "p_psi",
];

pub fn csv_header() -> Vec<String> {
    let mut h: Vec<String> = CSV_STATE_COLUMNS.iter().map(|s| s.to_string()).collect();
    h.extend(Invariant::ALL.iter().map(|k| k.name().to_string()));
    h.extend(Invariant::ALL.iter().map(|k| format!("drift_{}", k.name())));
    h
}

pub fn write_csv<W: std::io::Write>(tr: &Trajectory, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(csv_header())?;
    for s in &tr.samples {
        let mut row = vec![crate::json::format_f64(s.t)];
        row.extend(s.state.x.iter().chain(&s.state.p).map(|v| crate::json::format_f64(*v)));
        row.extend(s.invariants.iter().chain(&s.drift).map(|v| crate::json::format_f64(*v)));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// One seeded geodesic of a conservation run.
#[derive(Clone, Debug, Serialize)]
pub struct ConservationRow {
    pub initial: PhaseState,
    pub max_drift: [f64; 7],
    pub chart_exit: Option<ChartExit>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConservationReport {
    pub completed: usize,
    pub chart_exits: usize,
    pub rows: Vec<ConservationRow>,
    /// Worst drift per invariant over every integrated segment, exits included.
    pub max_drift: [f64; 7],
}

/// Integrates seeded geodesics until `wanted` of them stay in the chart over
/// the whole interval. Trajectories that leave it are kept in the report and
/// replaced by the next draw.
pub fn conservation(
    pr: &PQParams,
    seed: u64,
    wanted: usize,
    t_end: f64,
    opts: &IntegratorOptions,
) -> ypq_core::Result<ConservationReport> {
    let mut rng = stream(seed, 12);
    let mut rows: Vec<ConservationRow> = Vec::new();
    let max_draws = 4 * wanted.max(1);
    let mut completed = 0;
    while completed < wanted && rows.len() < max_draws {
        let batch: Vec<PhaseState> = (0..wanted - completed)
            .map(|_| random_state(pr, &mut rng, INTERIOR_MARGIN))
            .collect();
        let done: Vec<ypq_core::Result<ConservationRow>> = batch
            .par_iter()
            .map(|s| {
                let tr = integrate_geodesic(pr, s, t_end, opts)?;
                Ok(ConservationRow {
                    initial: *s,
                    max_drift: tr.max_drift(),
                    chart_exit: tr.chart_exit,
                })
            })
            .collect();
        for r in done {
            let r = r?;
            if r.chart_exit.is_none() {
                completed += 1;
            }
            rows.push(r);
        }
    }
    let mut max_drift = [0.0f64; 7];
    for r in &rows {
        for k in 0..7 {
            max_drift[k] = max_drift[k].max(r.max_drift[k]);
        }
    }
    Ok(ConservationReport {
        completed,
        chart_exits: rows.iter().filter(|r| r.chart_exit.is_some()).count(),
        rows,
        max_drift,
    })
}
