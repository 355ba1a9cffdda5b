//! Geodesic Hamiltonian flow, first integrals and the independence test.
//!
//! Phase space points are `z = (θ, φ, y, α, ψ, P_θ, P_φ, P_y, P_α, P_ψ)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geom::{ky_to_sk, MetricField};
use crate::jet::{seed, Jet1, Scalar};
use crate::ypq::{psi1_expanded, re_im_psi, PQParams, YpqMetric, AL, PH, PS, TH, Y};
use crate::{Error, Result};

/// Below this `sinθ` the `J²` formula is refused.
pub const POLE_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub x: [f64; 5],
    pub p: [f64; 5],
}

impl PhaseState {
    pub fn new(x: [f64; 5], p: [f64; 5]) -> Self {
        Self { x, p }
    }

    pub fn to_array(&self) -> [f64; 10] {
        std::array::from_fn(|i| if i < 5 { self.x[i] } else { self.p[i - 5] })
    }

    pub fn from_array(z: &[f64; 10]) -> Self {
        Self {
            x: std::array::from_fn(|i| z[i]),
            p: std::array::from_fn(|i| z[i + 5]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Invariant {
    H,
    PPhi,
    PPsi,
    PAlpha,
    J2,
    K1,
    K4,
}

impl Invariant {
    pub const ALL: [Invariant; 7] = [
        Invariant::H,
        Invariant::PPhi,
        Invariant::PPsi,
        Invariant::PAlpha,
        Invariant::J2,
        Invariant::K1,
        Invariant::K4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Invariant::H => "H",
            Invariant::PPhi => "P_phi",
            Invariant::PPsi => "P_psi",
            Invariant::PAlpha => "P_alpha",
            Invariant::J2 => "J2",
            Invariant::K1 => "K1",
            Invariant::K4 => "K4",
        }
    }

    /// Homogeneity degree in the momenta.
    pub fn degree(self) -> i32 {
        match self {
            Invariant::PPhi | Invariant::PPsi | Invariant::PAlpha => 1,
            _ => 2,
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&k| k == self).unwrap()
    }
}

/// Values of `(H, P_φ, P_ψ, P_α, J², K⁽¹⁾, K⁽⁴⁾)`.
pub type InvariantVector = [f64; 7];

fn split<T: Copy>(z: &[T; 10]) -> ([T; 5], [T; 5]) {
    (std::array::from_fn(|i| z[i]), std::array::from_fn(|i| z[i + 5]))
}

fn mat_vec<T: Scalar>(m: &[[T; 5]; 5], v: &[T; 5]) -> [T; 5] {
    std::array::from_fn(|i| {
        let mut acc = T::zero();
        for j in 0..5 {
            acc += m[i][j] * v[j];
        }
        acc
    })
}

fn inverse_metric<T: Scalar>(params: &PQParams, x: &[T; 5]) -> [[T; 5]; 5] {
    YpqMetric::new(*params)
        .inverse_components(x)
        .expect("closed-form inverse")
}

/// `½ g^{μν} P_μ P_ν` on a phase-space point of any scalar type.
pub fn hamiltonian_t<T: Scalar>(params: &PQParams, z: &[T; 10]) -> T {
    let (x, p) = split(z);
    let v = mat_vec(&inverse_metric(params, &x), &p);
    let mut h = T::zero();
    for i in 0..5 {
        h += v[i] * p[i];
    }
    h * 0.5
}

pub fn hamiltonian(params: &PQParams, s: &PhaseState) -> Result<f64> {
    params.check_chart(&s.x)?;
    Ok(hamiltonian_t(params, &s.to_array()))
}

/// `P_μ = g_{μν} ẋ^ν`.
pub fn momenta_from_velocities(params: &PQParams, x: &[f64; 5], xdot: &[f64; 5]) -> Result<[f64; 5]> {
    params.check_chart(x)?;
    let g = YpqMetric::new(*params).components(x);
    Ok(mat_vec(&g, xdot))
}

/// `ẋ^μ = g^{μν} P_ν`.
pub fn velocities_from_momenta(params: &PQParams, x: &[f64; 5], p: &[f64; 5]) -> Result<[f64; 5]> {
    params.check_chart(x)?;
    Ok(mat_vec(&inverse_metric(params, x), p))
}

/// The momenta assembled block by block from `w`, `f`, `q` and `p(y)`.
pub fn momenta_blocks(params: &PQParams, x: &[f64; 5], xdot: &[f64; 5]) -> Result<[f64; 5]> {
    params.check_chart(x)?;
    let (th, y) = (x[TH], x[Y]);
    let (s, c) = (th.sin(), th.cos());
    let (w, f, q) = (params.w(y), params.f(y), params.q_of(y));
    let e4 = xdot[PS] - c * xdot[PH];
    let p_th = (1.0 - y) / 6.0 * xdot[TH];
    let p_y = xdot[Y] / (6.0 * params.p_of(y));
    let p_al = w * (xdot[AL] + f * e4);
    let p_ps = w * f * xdot[AL] + (q / 9.0 + w * f * f) * e4;
    let p_ph = (1.0 - y) / 6.0 * s * s * xdot[PH] - c * p_ps;
    Ok([p_th, p_ph, p_y, p_al, p_ps])
}

/// `K⁽¹⁾` in velocity variables, in its expanded polynomial form.
pub fn k1_velocity<T: Scalar>(a: f64, x: &[T; 5], v: &[T; 5]) -> T {
    let (th, y) = (x[TH], x[Y]);
    let [td, pd, yd, ad, sd] = *v;
    let c2 = (th * 2.0).cos();
    let c = th.cos();
    let one_y = T::one() - y;
    let y2 = y * y;
    let y3 = y2 * y;
    let big_a = (y * 2.0 - 3.0) * y2 + a;
    let pp = (y3 * 2.0 - y * 6.0 + (3.0 + a)) + (y3 * 2.0 - y2 * 6.0 + y * 6.0 + (a - 3.0)) * c2;
    one_y * td * td * 6.0 + pp / one_y * pd * pd
        - big_a * c / one_y * pd * ad * 24.0
        - big_a * c / one_y * pd * sd * 4.0
        + one_y / big_a * yd * yd * 18.0
        + big_a / one_y * ad * ad * 72.0
        + big_a / one_y * ad * sd * 24.0
        + big_a / one_y * sd * sd * 2.0
}

/// `K⁽⁴⁾` in velocity variables, in its expanded polynomial form.
pub fn k4_velocity<T: Scalar>(a: f64, x: &[T; 5], v: &[T; 5]) -> T {
    let (th, y) = (x[TH], x[Y]);
    let [td, pd, yd, ad, sd] = *v;
    let c2 = (th * 2.0).cos();
    let c = th.cos();
    let one_y = T::one() - y;
    let y2 = y * y;
    let y3 = y2 * y;
    let big_a = (y * 2.0 - 3.0) * y2 + a;
    let b4 = (y * 5.0 - y2 * 2.0 - 4.0) * y + a;
    let two_y = T::cst(2.0) - y;
    let c4 = T::cst(a) - two_y * two_y * (y * 2.0 - 1.0);
    let aa = (T::one() - y * 2.0) * y2 + a;
    let pp = (y2 * 12.0 - y * 18.0 - y3 * 2.0 + (7.0 + a))
        + (y2 * 6.0 - y * 6.0 - y3 * 2.0 + (1.0 + a)) * c2;
    one_y * td * td * 6.0 - b4 * c / one_y * pd * ad * 24.0 + pp / one_y * pd * pd
        - c4 * c / one_y * pd * sd * 4.0
        + one_y / big_a * yd * yd * 18.0
        + aa / one_y * ad * ad * 72.0
        + b4 / one_y * ad * sd * 24.0
        + c4 / one_y * sd * sd * 2.0
}

/// Constant relating the expanded `K⁽¹⁾` to `ẋᵀ ky_to_sk(ℜΨ, ℜΨ) ẋ`.
pub fn k1_constant(params: &PQParams) -> f64 {
    4.0 * params.ell * params.ell / 3.0
}

/// Constant relating the expanded `K⁽⁴⁾` to `ẋᵀ ky_to_sk(Ψ₁, Ψ₁) ẋ`.
pub const K4_CONSTANT: f64 = 1.0 / 36.0;

/// Invariant `which` on a phase-space point of any scalar type.
pub fn invariant_t<T: Scalar>(params: &PQParams, which: Invariant, z: &[T; 10]) -> Result<T> {
    let (x, p) = split(z);
    Ok(match which {
        Invariant::H => hamiltonian_t(params, z),
        Invariant::PPhi => p[PH],
        Invariant::PPsi => p[PS],
        Invariant::PAlpha => p[AL],
        Invariant::J2 => {
            let s = x[TH].sin();
            if s.value().abs() < POLE_EPS {
                return Err(Error::PoleSingularity {
                    sin_theta: s.value(),
                });
            }
            let m = p[PH] + x[TH].cos() * p[PS];
            p[TH] * p[TH] + m * m / (s * s) + p[PS] * p[PS]
        }
        Invariant::K1 | Invariant::K4 => {
            let v = mat_vec(&inverse_metric(params, &x), &p);
            if which == Invariant::K1 {
                k1_velocity(params.a, &x, &v)
            } else {
                k4_velocity(params.a, &x, &v)
            }
        }
    })
}

pub fn invariants_t<T: Scalar>(params: &PQParams, z: &[T; 10]) -> Result<[T; 7]> {
    let mut out = [T::zero(); 7];
    for (o, k) in out.iter_mut().zip(Invariant::ALL) {
        *o = invariant_t(params, k, z)?;
    }
    Ok(out)
}

pub fn invariants(params: &PQParams, s: &PhaseState) -> Result<InvariantVector> {
    params.check_chart(&s.x)?;
    invariants_t(params, &s.to_array())
}

/// Which pair of Killing-Yano forms feeds a contraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Contraction {
    ReRe,
    ImIm,
    ReIm,
    Psi1Psi1,
}

/// Stäckel-Killing tensor built from a pair of Killing-Yano forms at `x`.
pub fn contraction_tensor(params: &PQParams, which: Contraction, x: &[f64; 5]) -> Result<[[f64; 5]; 5]> {
    params.check_chart(x)?;
    let gi = inverse_metric(params, x);
    let (re, im) = re_im_psi(params, x);
    match which {
        Contraction::ReRe => ky_to_sk(&re, &re, &gi),
        Contraction::ImIm => ky_to_sk(&im, &im, &gi),
        Contraction::ReIm => ky_to_sk(&re, &im, &gi),
        Contraction::Psi1Psi1 => {
            let p1 = psi1_expanded(x);
            ky_to_sk(&p1, &p1, &gi)
        }
    }
}

/// `K_{μν} ẋ^μ ẋ^ν` with `ẋ = g⁻¹P`.
pub fn contraction_invariant(params: &PQParams, which: Contraction, s: &PhaseState) -> Result<f64> {
    let k = contraction_tensor(params, which, &s.x)?;
    let v = velocities_from_momenta(params, &s.x, &s.p)?;
    let kv = mat_vec(&k, &v);
    Ok((0..5).map(|i| kv[i] * v[i]).sum())
}

/// Ratio statistics of expanded over contracted values across states.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConstantFit {
    pub mean: f64,
    pub rel_std: f64,
    /// `max |expanded − frozen·contracted| / max(1, |expanded|)` with the frozen constant.
    pub frozen_residual: f64,
}

pub fn fit_expanded_constant(params: &PQParams, which: Invariant, states: &[PhaseState]) -> Result<ConstantFit> {
    let (pair, frozen) = match which {
        Invariant::K1 => (Contraction::ReRe, k1_constant(params)),
        Invariant::K4 => (Contraction::Psi1Psi1, K4_CONSTANT),
        _ => {
            return Err(Error::DegreeMismatch {
                expected: 2,
                found: which.degree() as usize,
            })
        }
    };
    if states.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let mut ratios = Vec::with_capacity(states.len());
    let mut frozen_residual: f64 = 0.0;
    for s in states {
        let expanded = invariant_t(params, which, &s.to_array())?;
        let contracted = contraction_invariant(params, pair, s)?;
        ratios.push(expanded / contracted);
        frozen_residual = frozen_residual.max((expanded - frozen * contracted).abs() / expanded.abs().max(1.0));
    }
    let n = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / n;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    Ok(ConstantFit {
        mean,
        rel_std: var.sqrt() / mean.abs(),
        frozen_residual,
    })
}

/// Phase-space gradient `(∂/∂x, ∂/∂P)` of an invariant.
pub fn invariant_gradient(params: &PQParams, which: Invariant, s: &PhaseState) -> Result<[f64; 10]> {
    params.check_chart(&s.x)?;
    let z: [Jet1<10>; 10] = seed(&s.to_array());
    Ok(invariant_t(params, which, &z)?.g)
}

/// `Σ (∂f/∂x ∂g/∂P − ∂f/∂P ∂g/∂x)` from two phase-space gradients.
pub fn bracket_of_gradients(df: &[f64; 10], dg: &[f64; 10]) -> f64 {
    (0..5).map(|i| df[i] * dg[i + 5] - df[i + 5] * dg[i]).sum()
}

/// Poisson bracket of two phase-space functions evaluated on jets.
pub fn poisson_bracket<F, G>(f: F, g: G, s: &PhaseState) -> f64
where
    F: Fn(&[Jet1<10>; 10]) -> Jet1<10>,
    G: Fn(&[Jet1<10>; 10]) -> Jet1<10>,
{
    let z: [Jet1<10>; 10] = seed(&s.to_array());
    bracket_of_gradients(&f(&z).g, &g(&z).g)
}

pub fn invariant_bracket(params: &PQParams, a: Invariant, b: Invariant, s: &PhaseState) -> Result<f64> {
    let da = invariant_gradient(params, a, s)?;
    let db = invariant_gradient(params, b, s)?;
    Ok(bracket_of_gradients(&da, &db))
}

/// Hamilton's equations `ẋ = ∂H/∂P`, `Ṗ = −∂H/∂x`.
pub fn hamilton_rhs(params: &PQParams, z: &[f64; 10]) -> [f64; 10] {
    let h = hamiltonian_t::<Jet1<10>>(params, &seed(z));
    std::array::from_fn(|i| if i < 5 { h.g[i + 5] } else { -h.g[i - 5] })
}

/// Random state: `x` uniform in the interior, `P` along a uniform direction
/// scaled to `H = ½`.
pub fn random_state<R: Rng + ?Sized>(params: &PQParams, rng: &mut R, margin: f64) -> PhaseState {
    let x = params.sample_interior(rng, margin);
    loop {
        let dir: [f64; 5] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let mut s = PhaseState::new(x, dir);
        let h = hamiltonian_t(params, &s.to_array());
        if h > 0.0 && h.is_finite() {
            let k = (0.5 / h).sqrt();
            s.p.iter_mut().for_each(|v| *v *= k);
            return s;
        }
    }
}

// ---------------------------------------------------------------------------
// Integrator

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Number of sample intervals on `[0, t_end]`.
    pub samples: usize,
    /// Distance to `θ ∈ {0, π}` or `y ∈ {y₁, y₂}` that ends the run.
    pub chart_margin: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            samples: 100,
            chart_margin: 1e-6,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Sample {
    pub t: f64,
    pub state: PhaseState,
    pub invariants: InvariantVector,
    pub drift: [f64; 7],
}

#[derive(Clone, Debug, Serialize)]
pub struct ChartExit {
    pub t: f64,
    pub x: [f64; 5],
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub chart_exit: Option<ChartExit>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn max_drift(&self) -> [f64; 7] {
        let mut m = [0.0f64; 7];
        for s in &self.samples {
            for k in 0..7 {
                m[k] = m[k].max(s.drift[k]);
            }
        }
        m
    }

    pub fn last_state(&self) -> Option<PhaseState> {
        self.samples.last().map(|s| s.state)
    }
}

/// Drift of each invariant relative to `max(|I₀|, (2H₀)^{d/2})`, where `d`
/// is the momentum degree of the invariant.
pub fn relative_drift(i0: &InvariantVector, i: &InvariantVector) -> [f64; 7] {
    let e = 2.0 * i0[0].abs();
    std::array::from_fn(|k| {
        let scale = i0[k].abs().max(e.powf(Invariant::ALL[k].degree() as f64 / 2.0));
        let d = (i[k] - i0[k]).abs();
        if scale > 0.0 {
            d / scale
        } else {
            d
        }
    })
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

type Vec10 = [f64; 10];

/// Dormand-Prince 5(4) with the standard fourth-order continuous extension.
struct Dopri5<'a> {
    params: &'a PQParams,
    opts: IntegratorOptions,
}

struct Step {
    y1: Vec10,
    k7: Vec10,
    err: f64,
    dense: [Vec10; 5],
}

impl Dopri5<'_> {
    fn admissible(&self, z: &Vec10) -> std::result::Result<(), String> {
        let pr = self.params;
        let m = self.opts.chart_margin;
        if z.iter().any(|v| !v.is_finite()) {
            return Err("non-finite state".into());
        }
        if z[TH] <= m || z[TH] >= PI - m {
            return Err(format!("theta = {} reached a pole", z[TH]));
        }
        if z[Y] <= pr.y1 + m || z[Y] >= pr.y2 - m {
            return Err(format!("y = {} reached a root of the cubic", z[Y]));
        }
        Ok(())
    }

    fn step(&self, y0: &Vec10, k1: &Vec10, h: f64) -> std::result::Result<Step, String> {
        let mut k = [[0.0; 10]; 7];
        k[0] = *k1;
        let mut y1 = *y0;
        for s in 1..7 {
            let mut ys = *y0;
            for i in 0..10 {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * k[j][i];
                }
                ys[i] += h * acc;
            }
            self.admissible(&ys)?;
            k[s] = hamilton_rhs(self.params, &ys);
            if s == 6 {
                y1 = ys;
            }
        }
        let mut err_sq = 0.0;
        for i in 0..10 {
            let e: f64 = h * (0..7).map(|s| E[s] * k[s][i]).sum::<f64>();
            let sc = self.opts.atol + self.opts.rtol * y0[i].abs().max(y1[i].abs());
            err_sq += (e / sc).powi(2);
        }
        let mut dense = [[0.0; 10]; 5];
        for i in 0..10 {
            let dy = y1[i] - y0[i];
            let bspl = h * k[0][i] - dy;
            dense[0][i] = y0[i];
            dense[1][i] = dy;
            dense[2][i] = bspl;
            dense[3][i] = dy - h * k[6][i] - bspl;
            dense[4][i] = h * (0..7).map(|s| D[s] * k[s][i]).sum::<f64>();
        }
        Ok(Step {
            y1,
            k7: k[6],
            err: (err_sq / 10.0).sqrt(),
            dense,
        })
    }

    fn interpolate(dense: &[Vec10; 5], theta: f64) -> Vec10 {
        let t1 = 1.0 - theta;
        std::array::from_fn(|i| {
            dense[0][i]
                + theta * (dense[1][i] + t1 * (dense[2][i] + theta * (dense[3][i] + t1 * dense[4][i])))
        })
    }
}

/// Integrates the geodesic flow from `s0` to `t_end` (which may be negative),
/// recording invariants and their drift at `samples + 1` evenly spaced times.
pub fn integrate_geodesic(
    params: &PQParams,
    s0: &PhaseState,
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    if !(opts.rtol > 0.0 && opts.atol > 0.0) || !t_end.is_finite() || opts.samples == 0 {
        return Err(Error::StepFailure { t: 0.0 });
    }
    params.check_chart(&s0.x)?;
    let solver = Dopri5 { params, opts: *opts };
    let mut y = s0.to_array();
    let i0 = invariants(params, s0)?;
    let record = |t: f64, z: &Vec10| -> Result<Sample> {
        let state = PhaseState::from_array(z);
        let inv = invariants_t(params, z)?;
        Ok(Sample {
            t,
            state,
            invariants: inv,
            drift: relative_drift(&i0, &inv),
        })
    };
    let n = opts.samples;
    let times: Vec<f64> = (0..=n).map(|k| t_end * k as f64 / n as f64).collect();
    let mut samples = vec![record(0.0, &y)?];
    let mut next = 1;
    let dir = if t_end < 0.0 { -1.0 } else { 1.0 };
    let span = t_end.abs();
    let mut t = 0.0f64;
    let mut k1 = hamilton_rhs(params, &y);
    let mut h = initial_step(&y, &k1, opts).min(span.max(f64::MIN_POSITIVE));
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut chart_exit = None;
    let h_min = 1e-14 * span.max(1.0);
    while next <= n {
        if accepted + rejected >= opts.max_steps {
            return Err(Error::StepFailure { t: dir * t });
        }
        h = h.min(span - t);
        let attempt = solver.step(&y, &k1, dir * h);
        let step = match attempt {
            Ok(st) if st.err <= 1.0 => st,
            Ok(st) => {
                rejected += 1;
                h *= (0.9 * st.err.powf(-0.2)).clamp(0.2, 1.0);
                if h < h_min {
                    return Err(Error::StepFailure { t: dir * t });
                }
                continue;
            }
            Err(reason) => {
                rejected += 1;
                h *= 0.5;
                if h < h_min {
                    chart_exit = Some(ChartExit {
                        t: dir * t,
                        x: std::array::from_fn(|i| y[i]),
                        reason,
                    });
                    break;
                }
                continue;
            }
        };
        accepted += 1;
        let t_new = if span - t - h <= 1e-15 * span { span } else { t + h };
        while next <= n && times[next].abs() <= t_new {
            let theta = ((times[next].abs() - t) / h).clamp(0.0, 1.0);
            let z = if times[next].abs() == t_new {
                step.y1
            } else {
                Dopri5::interpolate(&step.dense, theta)
            };
            samples.push(record(times[next], &z)?);
            next += 1;
        }
        t = t_new;
        y = step.y1;
        k1 = step.k7;
        let fac = if step.err == 0.0 {
            5.0
        } else {
            (0.9 * step.err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= fac;
    }
    Ok(Trajectory {
        samples,
        chart_exit,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}

fn initial_step(y: &Vec10, f: &Vec10, opts: &IntegratorOptions) -> f64 {
    let (mut d0, mut d1) = (0.0f64, 0.0f64);
    for i in 0..10 {
        let sc = opts.atol + opts.rtol * y[i].abs();
        d0 += (y[i] / sc).powi(2);
        d1 += (f[i] / sc).powi(2);
    }
    let (d0, d1) = ((d0 / 10.0).sqrt(), (d1 / 10.0).sqrt());
    if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        (0.01 * d0 / d1).min(1.0)
    }
}

// ---------------------------------------------------------------------------
// Functional independence

#[derive(Clone, Debug, Serialize)]
pub struct RankResult {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    /// The state lies on a symmetry locus (a vanishing momentum or `sinθ ≈ 0`).
    pub degenerate: bool,
}

pub const RANK_RTOL: f64 = 1e-8;

pub fn is_degenerate(s: &PhaseState) -> bool {
    s.x[TH].sin() < 1e-3 || s.p.iter().any(|v| v.abs() < 1e-6)
}

/// Jacobian of the chosen invariants with respect to the ten phase-space coordinates.
pub fn invariant_jacobian(params: &PQParams, s: &PhaseState, which: &[Invariant]) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(which.len(), 10);
    for (r, &k) in which.iter().enumerate() {
        let g = invariant_gradient(params, k, s)?;
        for c in 0..10 {
            m[(r, c)] = g[c];
        }
    }
    Ok(m)
}

pub fn numeric_rank(singular_values: &[f64], rtol: f64) -> usize {
    let max = singular_values.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    singular_values.iter().filter(|&&v| v > max * rtol).count()
}

pub fn jacobian_rank(params: &PQParams, s: &PhaseState, which: &[Invariant]) -> Result<RankResult> {
    let m = invariant_jacobian(params, s, which)?;
    let mut sv: Vec<f64> = m.singular_values().iter().cloned().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(RankResult {
        rank: numeric_rank(&sv, RANK_RTOL),
        singular_values: sv,
        degenerate: is_degenerate(s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ypq::make_params;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn states(p: u32, q: u32, n: usize, seed: u64) -> (PQParams, Vec<PhaseState>) {
        let pr = make_params(p, q).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..n).map(|_| random_state(&pr, &mut rng, 0.05)).collect();
        (pr, v)
    }

    #[test]
    fn hamiltonian_basics() {
        let (pr, st) = states(2, 1, 20, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for s in st {
            assert_eq!(hamiltonian(&pr, &PhaseState::new(s.x, [0.0; 5])).unwrap(), 0.0);
            assert!((hamiltonian(&pr, &s).unwrap() - 0.5).abs() < 1e-14);
            let v: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let p = momenta_from_velocities(&pr, &s.x, &v).unwrap();
            let g = YpqMetric::new(pr).components(&s.x);
            let gvv: f64 = (0..5).map(|i| (0..5).map(|j| g[i][j] * v[i] * v[j]).sum::<f64>()).sum();
            let h = hamiltonian(&pr, &PhaseState::new(s.x, p)).unwrap();
            assert!((h - 0.5 * gvv).abs() < 1e-12 * gvv.max(1.0));
            let back = velocities_from_momenta(&pr, &s.x, &p).unwrap();
            for i in 0..5 {
                assert!((back[i] - v[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn momentum_blocks_match_metric_contraction() {
        for (p, q) in [(2, 1), (3, 2), (7, 3)] {
            let (pr, st) = states(p, q, 100, 3);
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            for s in st {
                let v: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
                let a = momenta_blocks(&pr, &s.x, &v).unwrap();
                let b = momenta_from_velocities(&pr, &s.x, &v).unwrap();
                for i in 0..5 {
                    assert!((a[i] - b[i]).abs() < 1e-10, "{a:?} {b:?}");
                }
            }
        }
    }

    #[test]
    fn pure_psi_and_pure_theta_velocities() {
        let (pr, st) = states(3, 1, 10, 5);
        for s in st {
            let y = s.x[Y];
            let p = momenta_blocks(&pr, &s.x, &[0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
            let (w, f, q) = (pr.w(y), pr.f(y), pr.q_of(y));
            assert!((p[AL] - w * f).abs() < 1e-14);
            assert!((p[PS] - (q / 9.0 + w * f * f)).abs() < 1e-14);
            let p = momenta_from_velocities(&pr, &s.x, &[1.3, 0.0, 0.0, 0.0, 0.0]).unwrap();
            assert!(p[TH] != 0.0);
            assert!(p[1..].iter().all(|v| v.abs() < 1e-15));
        }
    }

    #[test]
    fn j2_refused_at_pole() {
        let pr = make_params(2, 1).unwrap();
        let z = [0.0, 0.1, 0.0, 0.1, 0.1, 1.0, 1.0, 1.0, 1.0, 1.0];
        assert!(matches!(
            invariant_t(&pr, Invariant::J2, &z),
            Err(Error::PoleSingularity { .. })
        ));
    }

    #[test]
    fn expanded_k_forms_match_contractions() {
        for (p, q) in [(2, 1), (5, 4), (7, 3)] {
            let (pr, st) = states(p, q, 100, 6);
            let f1 = fit_expanded_constant(&pr, Invariant::K1, &st).unwrap();
            assert!(f1.rel_std < 1e-8, "{f1:?}");
            assert!((f1.mean / k1_constant(&pr) - 1.0).abs() < 1e-9);
            assert!(f1.frozen_residual < 1e-8);
            let f4 = fit_expanded_constant(&pr, Invariant::K4, &st).unwrap();
            assert!(f4.rel_std < 1e-8, "{f4:?}");
            assert!((f4.mean / K4_CONSTANT - 1.0).abs() < 1e-9);
            for s in &st {
                let rr = contraction_invariant(&pr, Contraction::ReRe, s).unwrap();
                let ii = contraction_invariant(&pr, Contraction::ImIm, s).unwrap();
                assert!((rr - ii).abs() < 1e-9 * rr.abs().max(1.0));
                let ri = contraction_tensor(&pr, Contraction::ReIm, &s.x).unwrap();
                let rr_t = contraction_tensor(&pr, Contraction::ReRe, &s.x).unwrap();
                let scale = rr_t.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
                let mixed = ri.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
                assert!(mixed < 1e-9 * scale.max(1.0), "{mixed}");
            }
        }
    }

    #[test]
    fn brackets_vanish() {
        for (p, q) in [(2, 1), (3, 2)] {
            let (pr, st) = states(p, q, 50, 7);
            for s in &st {
                for k in Invariant::ALL {
                    let b = invariant_bracket(&pr, k, Invariant::H, s).unwrap();
                    assert!(b.abs() < 1e-8, "{{{}, H}} = {b}", k.name());
                }
                let set = [
                    Invariant::PPhi,
                    Invariant::PPsi,
                    Invariant::PAlpha,
                    Invariant::J2,
                    Invariant::K1,
                ];
                for (i, &a) in set.iter().enumerate() {
                    for &b in &set[i + 1..] {
                        let v = invariant_bracket(&pr, a, b, s).unwrap();
                        assert!(v.abs() < 1e-8, "{{{}, {}}} = {v}", a.name(), b.name());
                    }
                }
            }
        }
    }

    #[test]
    fn bracket_is_antisymmetric() {
        let (_, st) = states(2, 1, 10, 8);
        let f = |z: &[Jet1<10>; 10]| (z[0] * z[6]).sin() + z[2] * z[9] * z[9];
        let g = |z: &[Jet1<10>; 10]| (z[1] + z[5] * z[3]).exp() - z[7] * z[4];
        for s in &st {
            assert_eq!(poisson_bracket(f, f, s), 0.0);
            let a = poisson_bracket(f, g, s);
            let b = poisson_bracket(g, f, s);
            assert!((a + b).abs() <= 1e-15 * a.abs().max(1.0));
        }
    }

    #[test]
    fn bracket_of_coordinates_is_canonical() {
        let (_, st) = states(2, 1, 1, 9);
        for i in 0..5 {
            for j in 0..5 {
                let b = poisson_bracket(|z| z[i], |z| z[j + 5], &st[0]);
                assert_eq!(b, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn invariants_conserved_along_flow() {
        let (pr, st) = states(2, 1, 3, 10);
        for s in &st {
            let tr = integrate_geodesic(&pr, s, 50.0, &IntegratorOptions::default()).unwrap();
            assert!(tr.chart_exit.is_none());
            assert_eq!(tr.samples.len(), 101);
            let d = tr.max_drift();
            assert!(d.iter().all(|&v| v < 1e-7), "{d:?}");
        }
    }

    #[test]
    fn drift_shrinks_with_tolerance() {
        let (pr, st) = states(3, 1, 1, 11);
        let loose = IntegratorOptions {
            rtol: 1e-7,
            atol: 1e-9,
            ..Default::default()
        };
        let a = integrate_geodesic(&pr, &st[0], 20.0, &loose).unwrap().max_drift()[0];
        let b = integrate_geodesic(&pr, &st[0], 20.0, &IntegratorOptions::default())
            .unwrap()
            .max_drift()[0];
        assert!(b < a, "{b} !< {a}");
    }

    #[test]
    fn reeb_orbit_is_a_geodesic() {
        let pr = make_params(2, 1).unwrap();
        let x0 = [1.1, 0.4, 0.5 * (pr.y1 + pr.y2), 0.2, 0.3];
        let b = crate::ypq::reeb_at(&pr);
        let p = momenta_from_velocities(&pr, &x0, &b).unwrap();
        let s0 = PhaseState::new(x0, p);
        assert!((hamiltonian(&pr, &s0).unwrap() - 0.5).abs() < 1e-14);
        let tr = integrate_geodesic(&pr, &s0, 10.0, &IntegratorOptions::default()).unwrap();
        for smp in &tr.samples {
            for i in 0..5 {
                let expect = x0[i] + smp.t * b[i];
                assert!((smp.state.x[i] - expect).abs() < 1e-6, "{} {:?}", smp.t, smp.state.x);
            }
        }
    }

    #[test]
    fn time_reversal_returns_to_start() {
        let pr = make_params(2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let st: Vec<_> = (0..8).map(|_| random_state(&pr, &mut rng, 0.3)).collect();
        let opts = IntegratorOptions::default();
        for s in &st {
            let fwd = integrate_geodesic(&pr, s, 20.0, &opts).unwrap().last_state().unwrap();
            let flipped = PhaseState::new(fwd.x, fwd.p.map(|v| -v));
            let back = integrate_geodesic(&pr, &flipped, 20.0, &opts)
                .unwrap()
                .last_state()
                .unwrap();
            for i in 0..5 {
                assert!((back.x[i] - s.x[i]).abs() < 1e-6, "{back:?} {s:?}");
                assert!((-back.p[i] - s.p[i]).abs() < 1e-6, "{i} {back:?} {s:?}");
            }
        }
    }

    #[test]
    fn negative_time_matches_reversal() {
        let (pr, st) = states(2, 1, 1, 13);
        let opts = IntegratorOptions::default();
        let a = integrate_geodesic(&pr, &st[0], -5.0, &opts).unwrap().last_state().unwrap();
        let flipped = PhaseState::new(st[0].x, st[0].p.map(|v| -v));
        let b = integrate_geodesic(&pr, &flipped, 5.0, &opts).unwrap().last_state().unwrap();
        for i in 0..5 {
            assert!((a.x[i] - b.x[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_momentum_is_stationary() {
        let pr = make_params(2, 1).unwrap();
        let s = PhaseState::new([1.0, 0.5, 0.0, 0.1, 0.2], [0.0; 5]);
        let tr = integrate_geodesic(&pr, &s, 50.0, &IntegratorOptions::default()).unwrap();
        assert!(tr.max_drift().iter().all(|&v| v == 0.0));
        assert_eq!(tr.last_state().unwrap(), s);
    }

    #[test]
    fn polar_collision_reports_chart_exit() {
        let pr = make_params(2, 1).unwrap();
        let x = [0.3, 0.0, 0.0, 0.0, 0.0];
        let p = momenta_from_velocities(&pr, &x, &[-1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let tr = integrate_geodesic(&pr, &PhaseState::new(x, p), 5.0, &IntegratorOptions::default()).unwrap();
        let exit = tr.chart_exit.expect("exit");
        assert!(exit.x[TH] < 1e-3, "{exit:?}");
        assert!(exit.t > 0.0 && exit.t < 1.0);
    }

    #[test]
    fn dense_output_matches_direct_stepping() {
        let (pr, st) = states(2, 1, 1, 14);
        let opts = IntegratorOptions {
            samples: 37,
            ..Default::default()
        };
        let tr = integrate_geodesic(&pr, &st[0], 3.7, &opts).unwrap();
        let mid = &tr.samples[17];
        let direct = integrate_geodesic(&pr, &st[0], mid.t, &IntegratorOptions { samples: 1, ..opts })
            .unwrap()
            .last_state()
            .unwrap();
        for i in 0..5 {
            assert!((mid.state.x[i] - direct.x[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn rhs_matches_finite_differences_of_h() {
        let (pr, st) = states(5, 4, 5, 15);
        for s in st {
            let z = s.to_array();
            let f = hamilton_rhs(&pr, &z);
            for i in 0..10 {
                let h = 1e-6;
                let (mut zp, mut zm) = (z, z);
                zp[i] += h;
                zm[i] -= h;
                let d = (hamiltonian_t(&pr, &zp) - hamiltonian_t(&pr, &zm)) / (2.0 * h);
                let expect = if i < 5 { -d } else { d };
                let got = if i < 5 { f[i + 5] } else { f[i - 5] };
                assert!((got - expect).abs() < 1e-6 * expect.abs().max(1.0), "{i}");
            }
        }
    }

    #[test]
    fn rank_is_five() {
        for (p, q) in [(2, 1), (3, 2)] {
            let (pr, st) = states(p, q, 20, 16);
            for s in &st {
                assert!(!is_degenerate(s));
                let r = jacobian_rank(&pr, s, &Invariant::ALL).unwrap();
                assert_eq!(r.rank, 5, "{:?}", r.singular_values);
                let r = jacobian_rank(&pr, s, &Invariant::ALL[..5]).unwrap();
                assert_eq!(r.rank, 5, "{:?}", r.singular_values);
                let r = jacobian_rank(&pr, s, &[Invariant::H, Invariant::PPhi]).unwrap();
                assert_eq!(r.rank, 2);
            }
        }
    }
}
