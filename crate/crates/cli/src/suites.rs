//! Verification suites behind `ypq verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use ypq_core::cone::{
    angular_block, complex_residual, extract_base_killing, fit_complex_constant, lift_parallel_residual,
    omega_checks, closed_form_complex_psi, wedge_expansion_check, ConeMetric,
};
use ypq_core::dynamics::{
    contraction_invariant, contraction_tensor, fit_expanded_constant, invariant_bracket, invariant_t,
    k1_constant, momenta_blocks, momenta_from_velocities, random_state, Contraction, Invariant, PhaseState,
};
use ypq_core::geom::{einstein_residual, killing_yano_residual, special_killing_fit, INTERIOR_MARGIN};
use ypq_core::toric::{
    complex_coordinates, fit_det_constant, kahler_hessian_fd, legendre_roundtrip, mean_std, momentum_map,
    v5_closed_form, ypq_toric_model, ToricModel,
};
use ypq_core::ypq::{eta, reeb_at, FormKind, PQParams, YpqForm, YpqMetric};

/// Outcome of one check: the worst residual over its sample set against its tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub points: usize,
    /// A fitted constant, when the check has one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Check {
    pub fn new(name: &str, max_residual: f64, tolerance: f64, points: usize) -> Self {
        Self {
            name: name.to_string(),
            max_residual,
            tolerance,
            pass: max_residual.is_finite() && max_residual <= tolerance,
            points,
            value: None,
            error: None,
        }
    }

    pub fn from_result(name: &str, r: ypq_core::Result<f64>, tolerance: f64, points: usize) -> Self {
        match r {
            Ok(v) => Self::new(name, v, tolerance, points),
            Err(e) => Self::failed(name, tolerance, points, e.to_string()),
        }
    }

    pub fn failed(name: &str, tolerance: f64, points: usize, error: String) -> Self {
        Self {
            error: Some(error),
            ..Self::new(name, f64::NAN, tolerance, points)
        }
    }

    pub fn with_value(mut self, v: f64) -> Self {
        self.value = Some(v);
        self
    }
}

/// Nominal tolerances; `ypq verify --tol` rescales all of them together.
pub mod tol {
    pub const CUBIC_ROOT: f64 = 1e-12;
    pub const VIETA: f64 = 1e-12;
    pub const SUP1: f64 = 1e-10;
    /// Both `v₅` expressions agree to rounding.
    pub const V5: f64 = 4.0 * f64::EPSILON;
    pub const ETA_REEB: f64 = 2.0 * f64::EPSILON;
    pub const EINSTEIN: f64 = 1e-7;
    pub const CONE_RICCI: f64 = 1e-6;
    pub const KILLING_YANO: f64 = 1e-7;
    pub const SPECIAL_SPREAD: f64 = 1e-6;
    pub const CONE_PARALLEL: f64 = 1e-6;
    pub const EXTRACTION: f64 = 1e-7;
    pub const WEDGE: f64 = 1e-9;
    pub const FG_IDENTITY: f64 = 1e-8;
    /// Floor of the finite-difference Hessian near the facets.
    pub const FG_INVERSE_MAP: f64 = 1e-5;
    pub const LEGENDRE: f64 = 1e-9;
    pub const DET_SPREAD: f64 = 1e-6;
    pub const CHART_GRADIENT: f64 = 1e-8;
    pub const MOMENTA: f64 = 1e-10;
    pub const K_CONSTANT: f64 = 1e-8;
    pub const K_TENSOR: f64 = 1e-9;
    pub const BRACKET: f64 = 1e-8;
    pub const DRIFT: f64 = 1e-7;
}

/// Independent deterministic stream for each suite.
pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(id);
    r
}

pub fn base_points(pr: &PQParams, rng: &mut ChaCha8Rng, n: usize) -> Vec<[f64; 5]> {
    (0..n).map(|_| pr.sample_default(rng)).collect()
}

pub fn cone_points(pr: &PQParams, rng: &mut ChaCha8Rng, n: usize) -> Vec<[f64; 6]> {
    (0..n)
        .map(|_| {
            let r = rng.gen_range(0.5..2.0);
            let x = pr.sample_default(rng);
            [r, x[0], x[1], x[2], x[3], x[4]]
        })
        .collect()
}

/// Parallel max of `f` over `pts`; the first error (in point order) wins.
pub fn par_max<P, F>(pts: &[P], f: F) -> ypq_core::Result<f64>
where
    P: Sync,
    F: Fn(&P) -> ypq_core::Result<f64> + Sync,
{
    let vals: Vec<ypq_core::Result<f64>> = pts.par_iter().map(&f).collect();
    let mut m: f64 = 0.0;
    for v in vals {
        let v = v?;
        if v.is_nan() || m.is_nan() {
            m = f64::NAN;
        } else {
            m = m.max(v);
        }
    }
    Ok(m)
}

/// Tolerances and sample counts shared by all suites.
#[derive(Clone, Copy, Debug)]
pub struct SuiteConfig {
    pub seed: u64,
    pub samples: usize,
    /// Multiplies every nominal tolerance.
    pub scale: f64,
}

impl SuiteConfig {
    fn half(&self) -> usize {
        self.samples.div_ceil(2).max(2)
    }
}

pub fn parameter_identities(pr: &PQParams, cfg: &SuiteConfig) -> Vec<Check> {
    let s = cfg.scale;
    let roots = pr.roots();
    let cubic = roots.iter().map(|&y| pr.cubic(y).abs()).fold(0.0, f64::max);
    let vieta = (roots.iter().sum::<f64>() - 1.5).abs();
    let mut rng = stream(cfg.seed, 1);
    let pts = base_points(pr, &mut rng, cfg.samples);
    let target = -0.5 / pr.ell;
    let sup1 = pts
        .iter()
        .map(|x| (pr.a_of(x[2]) * pr.p_of(x[2]) - target).abs())
        .fold(0.0, f64::max);
    let model = ypq_toric_model(pr);
    let v5 = v5_closed_form(pr);
    let v5_diff = (0..3).map(|i| (model.normals[4][i] - v5[i]).abs()).fold(0.0, f64::max);
    let b = reeb_at(pr);
    let eta_b = pts
        .iter()
        .map(|x| {
            let e = eta(x);
            ((0..5).map(|i| e.get(&[i]) * b[i]).sum::<f64>() - 1.0).abs()
        })
        .fold(0.0, f64::max);
    vec![
        Check::new("cubic_roots", cubic, tol::CUBIC_ROOT * s, 3),
        Check::new("vieta_sum", vieta, tol::VIETA * s, 3),
        Check::new("a_times_p", sup1, tol::SUP1 * s, pts.len()),
        Check::new("v5_definitions", v5_diff, tol::V5 * s, 1),
        Check::new("eta_of_reeb", eta_b, tol::ETA_REEB * s, pts.len()),
    ]
}

pub fn einstein(pr: &PQParams, cfg: &SuiteConfig) -> Vec<Check> {
    let mut rng = stream(cfg.seed, 2);
    let pts = base_points(pr, &mut rng, cfg.samples);
    let m = YpqMetric::new(*pr);
    let base = par_max(&pts, |x| einstein_residual(&m, x, 4.0));
    let mut rng = stream(cfg.seed, 3);
    let cpts = cone_points(pr, &mut rng, cfg.half());
    let cm = ConeMetric::new(*pr);
    let cone = par_max(&cpts, |x| einstein_residual(&cm, x, 0.0));
    vec![
        Check::from_result("einstein", base, tol::EINSTEIN * cfg.scale, pts.len()),
        Check::from_result("cone_ricci_flat", cone, tol::CONE_RICCI * cfg.scale, cpts.len()),
    ]
}

pub const KILLING_FORMS: [FormKind; 4] = [FormKind::Eta, FormKind::Psi1, FormKind::RePsi, FormKind::ImPsi];

pub fn killing(pr: &PQParams, cfg: &SuiteConfig) -> Vec<Check> {
    let mut rng = stream(cfg.seed, 4);
    let pts = base_points(pr, &mut rng, cfg.half());
    let m = YpqMetric::new(*pr);
    let mut out = Vec::new();
    for kind in KILLING_FORMS {
        let f = YpqForm::new(*pr, kind);
        let r = par_max(&pts, |x| killing_yano_residual(&m, &f, x));
        out.push(Check::from_result(
            &format!("killing_yano_{}", kind.name()),
            r,
            tol::KILLING_YANO * cfg.scale,
            pts.len(),
        ));
    }
    for kind in KILLING_FORMS {
        let f = YpqForm::new(*pr, kind);
        let name = format!("special_killing_{}", kind.name());
        let t = tol::SPECIAL_SPREAD * cfg.scale;
        out.push(match special_killing_fit(&m, &f, &pts, f64::INFINITY) {
            Ok(fit) => Check::new(&name, fit.c_std / fit.c.abs(), t, pts.len()).with_value(fit.c),
            Err(e) => Check::failed(&name, t, pts.len(), e.to_string()),
        });
    }
    out
}

pub fn cone(pr: &PQParams, cfg: &SuiteConfig) -> Vec<Check> {
    let mut rng = stream(cfg.seed, 5);
    let pts = cone_points(pr, &mut rng, cfg.half());
    let t = tol::CONE_PARALLEL * cfg.scale;
    let mut out = Vec::new();
    for kind in [FormKind::RePsi, FormKind::ImPsi] {
        let f = YpqForm::new(*pr, kind);
        let r = par_max(&pts, |x| lift_parallel_residual(pr, &f, x));
        out.push(Check::from_result(&format!("cone_lift_parallel_{}", kind.name()), r, t, pts.len()));
    }
    let om: Vec<_> = pts.par_iter().map(|x| omega_checks(pr, x)).collect();
    match om.into_iter().collect::<ypq_core::Result<Vec<_>>>() {
        Ok(v) => {
            let closed = v.iter().map(|c| c.closed).fold(0.0, f64::max);
            let par = v.iter().map(|c| c.parallel).fold(0.0, f64::max);
            out.push(Check::new("omega_closed", closed, t, pts.len()));
            out.push(Check::new("omega_parallel", par, t, pts.len()));
        }
        Err(e) => {
            out.push(Check::failed("omega_closed", t, pts.len(), e.to_string()));
            out.push(Check::failed("omega_parallel", t, pts.len(), e.to_string()));
        }
    }
    out
}

/// `ι_{∂r}Ω/r²` against the closed-form complex form: one constant fitted at
/// the first point, residual over the rest.
pub fn extraction(pr: &PQParams, cfg: &SuiteConfig) -> Vec<Check> {
    let mut rng = stream(cfg.seed, 6);
    let pts = cone_points(pr, &mut rng, cfg.half() + 1);
    let t = tol::EXTRACTION * cfg.scale;
    let pair = |xc: &[f64; 6]| -> ypq_core::Result<_> {
        let x = [xc[1], xc[2], xc[3], xc[4], xc[5]];
        Ok((extract_base_killing(pr, xc)?, closed_form_complex_psi(pr, &x)))
    };
    let held = pts.len() - 1;
    let run = || -> ypq_core::Result<(f64, f64)> {
        let (a0, b0) = pair(&pts[0])?;
        let c = fit_complex_constant(&a0, &b0);
        let r = par_max(&pts[1..], |xc| {
            let (a, b) = pair(xc)?;
            Ok(complex_residual(&a, &b, c))
        })?;
        Ok((r, c.re))
    };
    let mut out = vec![match run() {
        Ok((r, c)) => Check::new("omega_extraction", r, t, held).with_value(c),
        Err(e) => Check::failed("omega_extraction", t, held, e.to_string()),
    }];
    let mut rng = stream(cfg.seed, 7);
    let bpts = base_points(pr, &mut rng, cfg.half());
    let reports: ypq_core::Result<Vec<_>> = bpts.par_iter().map(|x| wedge_expansion_check(pr, x)).collect();
    let tw = tol::WEDGE * cfg.scale;
    match reports {
        Ok(v) => {
            let wedge = v.iter().map(|r| r.max_wedge()).fold(0.0, f64::max);
            let all = v.iter().map(|r| r.max_all()).fold(0.0, f64::max);
            out.push(Check::new("wedge_products", wedge, tw, bpts.len()));
            out.push(Check::new("volume_form_assembly", all, tw, bpts.len()));
        }
        Err(e) => {
            out.push(Check::failed("wedge_products", tw, bpts.len(), e.to_string()));
            out.push(Check::failed("volume_form_assembly", tw, bpts.len(), e.to_string()));
        }
    }
    out
}

/// Moment points `μ(r, x)` for random cone points.
pub fn moment_points(pr: &PQParams, rng: &mut ChaCha8Rng, n: usize) -> Vec<(f64, [f64; 5], [f64; 3])> {
    cone_points(pr, rng, n)
        .into_iter()
        .map(|xc| {
            let x = [xc[1], xc[2], xc[3], xc[4], xc[5]];
            let y = momentum_map(pr, xc[0], &x).expect("interior sample");
            (xc[0], x, y)
        })
        .collect()
}

/// `max |F G − 1|` entrywise.
pub fn identity_defect(f: &[[f64; 3]; 3], g: &[[f64; 3]; 3]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let v: f64 = (0..3).map(|k| f[i][k] * g[k][j]).sum();
            worst = worst.max((v - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    worst
}

/// `∂y/∂x` of the inverse Legendre map: central differences at `h` and `h/2`
/// combined by Richardson extrapolation.
pub fn legendre_hessian(model: &ToricModel, y: &[f64; 3]) -> ypq_core::Result<[[f64; 3]; 3]> {
    let h = 1e-4;
    let a = kahler_hessian_fd(model, y, h)?;
    let b = kahler_hessian_fd(model, y, h / 2.0)?;
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| (4.0 * b[i][j] - a[i][j]) / 3.0)))
}

/// Toric duality results, also reported by `ypq toric`.
#[derive(Clone, Debug, Serialize)]
pub struct ToricChecks {
    pub checks: Vec<Check>,
    pub det_constant: Option<f64>,
}

pub fn toric(pr: &PQParams, cfg: &SuiteConfig) -> ToricChecks {
    let mut rng = stream(cfg.seed, 8);
    let pts = moment_points(pr, &mut rng, cfg.samples);
    let model = ypq_toric_model(pr);
    let s = cfg.scale;
    let n = pts.len();
    let mut checks = Vec::new();

    let fg = par_max(&pts, |(r, x, y)| {
        let f = angular_block(pr, &[*r, x[0], x[1], x[2], x[3], x[4]])?;
        let g = model.symplectic_potential(y)?.h;
        Ok(identity_defect(&f, &g))
    });
    checks.push(Check::from_result("fg_identity", fg, tol::FG_IDENTITY * s, n));

    let fd = par_max(&pts, |(_, _, y)| {
        let f = legendre_hessian(&model, y)?;
        let g = model.symplectic_potential(y)?.h;
        Ok(identity_defect(&f, &g))
    });
    checks.push(Check::from_result("fg_identity_inverse_map", fd, tol::FG_INVERSE_MAP * s, n));

    let lr = par_max(&pts, |(_, _, y)| Ok(legendre_roundtrip(&model, y, 0.02)?.roundtrip_error));
    checks.push(Check::from_result("legendre_roundtrip", lr, tol::LEGENDRE * s, n));

    let ys: Vec<[f64; 3]> = pts.iter().map(|p| p.2).collect();
    let mut det_constant = None;
    checks.push(match fit_det_constant(&model, &ys) {
        Ok(fit) => {
            det_constant = Some(fit.c);
            Check::new("det_constant", fit.rel_std, tol::DET_SPREAD * s, n).with_value(fit.c)
        }
        Err(e) => Check::failed("det_constant", tol::DET_SPREAD * s, n, e.to_string()),
    });

    let diffs: ypq_core::Result<Vec<[f64; 3]>> = pts
        .par_iter()
        .map(|(r, x, y)| {
            let z = complex_coordinates(pr, *r, x)?;
            let g = model.gradient(y)?;
            Ok(std::array::from_fn(|i| z[i].re - g[i]))
        })
        .collect();
    checks.push(match diffs {
        Ok(d) => {
            let spread = (0..3)
                .map(|i| mean_std(&d.iter().map(|v| v[i]).collect::<Vec<_>>()).1)
                .fold(0.0, f64::max);
            Check::new("chart_gradient", spread, tol::CHART_GRADIENT * s, n)
        }
        Err(e) => Check::failed("chart_gradient", tol::CHART_GRADIENT * s, n, e.to_string()),
    });
    ToricChecks { checks, det_constant }
}

pub fn random_states(pr: &PQParams, rng: &mut ChaCha8Rng, n: usize) -> Vec<PhaseState> {
    (0..n).map(|_| random_state(pr, rng, INTERIOR_MARGIN)).collect()
}

pub fn invariants(pr: &PQParams, cfg: &SuiteConfig) -> Vec<Check> {
    let mut rng = stream(cfg.seed, 9);
    let states = random_states(pr, &mut rng, cfg.samples);
    let n = states.len();
    let s = cfg.scale;
    let mut out = Vec::new();

    let vels: Vec<[f64; 5]> = (0..n).map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))).collect();
    let idx: Vec<usize> = (0..n).collect();
    let mom = par_max(&idx, |&k| {
        let (x, v) = (&states[k].x, &vels[k]);
        let a = momenta_blocks(pr, x, v)?;
        let b = momenta_from_velocities(pr, x, v)?;
        Ok((0..5).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max))
    });
    out.push(Check::from_result("momenta_blocks", mom, tol::MOMENTA * s, n));

    for which in [Invariant::K1, Invariant::K4] {
        let t = tol::K_CONSTANT * s;
        let lname = which.name().to_lowercase();
        match fit_expanded_constant(pr, which, &states) {
            Ok(fit) => {
                out.push(Check::new(&format!("{lname}_constant_spread"), fit.rel_std, t, n).with_value(fit.mean));
                out.push(Check::new(&format!("{lname}_frozen_constant"), fit.frozen_residual, t, n));
            }
            Err(e) => {
                out.push(Check::failed(&format!("{lname}_constant_spread"), t, n, e.to_string()));
                out.push(Check::failed(&format!("{lname}_frozen_constant"), t, n, e.to_string()));
            }
        }
    }

    let c1 = k1_constant(pr);
    let im = par_max(&states, |st| {
        let k1 = invariant_t(pr, Invariant::K1, &st.to_array())?;
        let kii = contraction_invariant(pr, Contraction::ImIm, st)?;
        Ok((k1 - c1 * kii).abs() / k1.abs().max(1.0))
    });
    out.push(Check::from_result("k1_from_im_im", im, tol::K_TENSOR * s, n));

    let mixed = par_max(&states, |st| {
        let ri = contraction_tensor(pr, Contraction::ReIm, &st.x)?;
        let rr = contraction_tensor(pr, Contraction::ReRe, &st.x)?;
        let scale = rr.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
        Ok(ri.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())) / scale)
    });
    out.push(Check::from_result("re_im_tensor_vanishes", mixed, tol::K_TENSOR * s, n));

    let kh = par_max(&states, |st| {
        let a = invariant_bracket(pr, Invariant::K1, Invariant::H, st)?;
        let b = invariant_bracket(pr, Invariant::K4, Invariant::H, st)?;
        let c = invariant_bracket(pr, Invariant::J2, Invariant::H, st)?;
        Ok(a.abs().max(b.abs()).max(c.abs()))
    });
    out.push(Check::from_result("brackets_with_h", kh, tol::BRACKET * s, n));

    let set = [
        Invariant::PPhi,
        Invariant::PPsi,
        Invariant::PAlpha,
        Invariant::J2,
        Invariant::K1,
    ];
    let inv = par_max(&states, |st| {
        let mut m: f64 = 0.0;
        for (i, &a) in set.iter().enumerate() {
            for &b in &set[i + 1..] {
                m = m.max(invariant_bracket(pr, a, b, st)?.abs());
            }
        }
        Ok(m)
    });
    out.push(Check::from_result("involution", inv, tol::BRACKET * s, n));
    out
}

/// Every suite of `ypq verify`, in report order.
pub fn verify_all(pr: &PQParams, cfg: &SuiteConfig) -> Vec<Check> {
    let mut out = parameter_identities(pr, cfg);
    out.extend(einstein(pr, cfg));
    out.extend(killing(pr, cfg));
    out.extend(cone(pr, cfg));
    out.extend(extraction(pr, cfg));
    out.extend(toric(pr, cfg).checks);
    out.extend(invariants(pr, cfg));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ypq_core::ypq::make_params;

    #[test]
    fn par_max_keeps_first_error_and_nan() {
        let pts = [1.0, 3.0, 2.0];
        assert_eq!(par_max(&pts, |v| Ok(*v)).unwrap(), 3.0);
        assert!(par_max(&pts, |v| Ok(if *v == 3.0 { f64::NAN } else { *v })).unwrap().is_nan());
        let e = par_max(&pts, |v| {
            if *v > 1.5 {
                Err(ypq_core::Error::StepFailure { t: *v })
            } else {
                Ok(*v)
            }
        });
        assert!(matches!(e, Err(ypq_core::Error::StepFailure { t }) if t == 3.0));
    }

    #[test]
    fn check_with_nan_fails() {
        assert!(!Check::new("x", f64::NAN, 1.0, 1).pass);
        assert!(Check::new("x", 0.0, 0.0, 1).pass);
    }

    #[test]
    fn streams_are_independent_and_reproducible() {
        let a: f64 = stream(42, 1).gen();
        let b: f64 = stream(42, 2).gen();
        assert_ne!(a, b);
        assert_eq!(a, stream(42, 1).gen::<f64>());
    }

    #[test]
    fn small_verify_run_passes() {
        let pr = make_params(2, 1).unwrap();
        let cfg = SuiteConfig {
            seed: 1,
            samples: 8,
            scale: 1.0,
        };
        for c in verify_all(&pr, &cfg) {
            assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn form_degrees_are_as_expected() {
        let pr = make_params(2, 1).unwrap();
        let d: Vec<usize> = KILLING_FORMS.iter().map(|&k| ypq_core::geom::FormField::degree(&YpqForm::new(pr, k))).collect();
        assert_eq!(d, [1, 3, 2, 2]);
    }
}
