//! The Calabi-Yau cone `dr² + r² g` over Y^{p,q} on the chart `(r, θ, φ, y, α, ψ)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{exterior_derivative, AntisymForm};
use crate::geom::{Connection, FormField, MetricEval, MetricField};
use crate::jet::{seed, Cx, Differentiable, Jet1, Jet2, Ring, Scalar};
use crate::toric::complex_chart;
use crate::ypq::{PQParams, YpqMetric};

/// Cone chart indices.
pub const R: usize = 0;
pub const CTH: usize = 1;
pub const CPH: usize = 2;
pub const CY: usize = 3;
pub const CAL: usize = 4;
pub const CPS: usize = 5;

#[derive(Clone, Copy, Debug)]
pub struct ConeMetric {
    pub params: PQParams,
}

impl ConeMetric {
    pub fn new(params: PQParams) -> Self {
        Self { params }
    }
}

fn base_of<T: Copy>(xc: &[T; 6]) -> [T; 5] {
    [xc[1], xc[2], xc[3], xc[4], xc[5]]
}

pub fn check_cone(params: &PQParams, xc: &[f64; 6]) -> Result<()> {
    if !(xc[R] > 0.0) {
        return Err(Error::OutOfChart(format!("r = {} must be positive", xc[R])));
    }
    params.check_chart(&base_of(xc))
}

impl MetricField<6> for ConeMetric {
    fn components<T: Scalar>(&self, x: &[T; 6]) -> [[T; 6]; 6] {
        let gb = YpqMetric::new(self.params).components(&base_of(x));
        let r2 = x[R] * x[R];
        let mut g = [[T::zero(); 6]; 6];
        g[0][0] = T::one();
        for i in 0..5 {
            for j in 0..5 {
                g[i + 1][j + 1] = r2 * gb[i][j];
            }
        }
        g
    }

    fn inverse_components<T: Scalar>(&self, x: &[T; 6]) -> Option<[[T; 6]; 6]> {
        let gb = YpqMetric::new(self.params).inverse_components(&base_of(x))?;
        let r2inv = (x[R] * x[R]).recip();
        let mut g = [[T::zero(); 6]; 6];
        g[0][0] = T::one();
        for i in 0..5 {
            for j in 0..5 {
                g[i + 1][j + 1] = r2inv * gb[i][j];
            }
        }
        Some(g)
    }

    fn check(&self, x: &[f64; 6]) -> Result<()> {
        check_cone(&self.params, x)
    }
}

/// Reference point `(1, π/2, 0, (y₁ + y₂)/2, 0, 0)` for constant fits.
pub fn reference_point(params: &PQParams) -> [f64; 6] {
    [1.0, std::f64::consts::FRAC_PI_2, 0.0, 0.5 * (params.y1 + params.y2), 0.0, 0.0]
}

/// `r^p dr∧Ψ + r^{p+1}/(p+1) dΨ` with first partials in all six coordinates.
pub fn lift_form_jet<F: FormField<5>>(form: &F, xc: &[f64; 6]) -> Result<AntisymForm<Jet1<6>>> {
    let p = form.degree();
    if p == 0 {
        return Err(Error::DegreeMismatch { expected: 1, found: 0 });
    }
    let xj: [Jet2<6>; 6] = seed(xc);
    let psi = form.eval(&base_of(&xj)).embed(1);
    let r = xj[R].truncate();
    let mut dr = vec![Jet1::<6>::zero(); 6];
    dr[R] = Jet1::constant(1.0);
    let first = AntisymForm::one_form(dr).wedge(&psi.map(|c| c.truncate()))?.times(r.powi(p as i32));
    if p == 5 {
        return Ok(first);
    }
    let dpsi = exterior_derivative::<_, 6>(&psi)?;
    Ok(first.add(&dpsi.times(r.powi(p as i32 + 1) / (p as f64 + 1.0))))
}

pub fn lift_form<F: FormField<5>>(params: &PQParams, form: &F, xc: &[f64; 6]) -> Result<AntisymForm<f64>> {
    check_cone(params, xc)?;
    Ok(lift_form_jet(form, xc)?.values())
}

/// `max ‖∇_μ Ψ_cone‖` with respect to the cone metric.
pub fn parallel_residual<T: Differentiable<6>>(conn: &Connection<6>, form: &AntisymForm<T>) -> Result<f64> {
    Ok(conn
        .covariant_derivative_form(form)?
        .iter()
        .map(|f| f.max_abs())
        .fold(0.0, f64::max))
}

pub fn lift_parallel_residual<F: FormField<5>>(params: &PQParams, form: &F, xc: &[f64; 6]) -> Result<f64> {
    let conn = Connection::at(&ConeMetric::new(*params), xc)?;
    parallel_residual(&conn, &lift_form_jet(form, xc)?)
}

/// `Ω = exp(z¹) dz¹∧dz²∧dz³` with first partials.
pub fn holomorphic_volume_jet(params: &PQParams, xc: &[f64; 6]) -> Result<AntisymForm<Cx<Jet1<6>>>> {
    check_cone(params, xc)?;
    let z = complex_chart(params, &seed::<Jet2<6>, 6>(xc));
    let dz: Vec<AntisymForm<Cx<Jet1<6>>>> = z
        .iter()
        .map(|zi| AntisymForm::one_form((0..6).map(|k| Cx::new(zi.re.partial(k), zi.im.partial(k))).collect()))
        .collect();
    let pref = Cx::new(z[0].re.truncate(), z[0].im.truncate()).exp();
    Ok(dz[0].wedge(&dz[1])?.wedge(&dz[2])?.times(pref))
}

pub fn holomorphic_volume(params: &PQParams, xc: &[f64; 6]) -> Result<AntisymForm<Cx<f64>>> {
    Ok(holomorphic_volume_jet(params, xc)?.map(|c| Cx::new(c.re.v, c.im.v)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OmegaChecks {
    /// `max |dΩ|`
    pub closed: f64,
    /// `max |∇Ω|`
    pub parallel: f64,
    /// `|Ω∧Ω̄| / vol_cone`
    pub modulus_ratio: f64,
}

pub fn omega_checks(params: &PQParams, xc: &[f64; 6]) -> Result<OmegaChecks> {
    let om = holomorphic_volume_jet(params, xc)?;
    let (re, im) = (om.re(), om.im());
    let closed = exterior_derivative::<_, 6>(&re)?
        .max_abs()
        .max(exterior_derivative::<_, 6>(&im)?.max_abs());
    let conn = Connection::at(&ConeMetric::new(*params), xc)?;
    let parallel = parallel_residual(&conn, &re)?.max(parallel_residual(&conn, &im)?);
    let vals = om.map(|c| Cx::new(c.re.v, c.im.v));
    let conj = vals.map(|c| c.conj());
    let top = vals.wedge(&conj)?.components()[0];
    let g = conn.metric.g;
    let det = nalgebra::Matrix6::from_fn(|i, j| g[i][j]).determinant();
    Ok(OmegaChecks {
        closed,
        parallel,
        modulus_ratio: top.re.hypot(top.im) / det.sqrt(),
    })
}

/// `Ψ = ι_{∂r} Ω / r²` restricted to the base chart.
pub fn extract_base_killing(params: &PQParams, xc: &[f64; 6]) -> Result<AntisymForm<Cx<f64>>> {
    let om = holomorphic_volume(params, xc)?;
    let r2 = xc[R] * xc[R];
    Ok(om.interior(R)?.restrict(1).map(|c| c.scale(1.0 / r2)))
}

/// `ℜΨ + iℑΨ` from the closed-form real and imaginary parts.
pub fn closed_form_complex_psi(params: &PQParams, x: &[f64; 5]) -> AntisymForm<Cx<f64>> {
    let (re, im) = crate::ypq::re_im_psi(params, x);
    AntisymForm::from_parts(&re, &im)
}

/// Least-squares complex `c` with `a ≈ c b`.
pub fn fit_complex_constant(a: &AntisymForm<Cx<f64>>, b: &AntisymForm<Cx<f64>>) -> Cx<f64> {
    let (mut num, mut den) = (Cx::new(0.0, 0.0), 0.0);
    for (u, v) in a.components().iter().zip(b.components()) {
        num += v.conj() * *u;
        den += v.re * v.re + v.im * v.im;
    }
    num.scale(1.0 / den)
}

pub fn complex_residual(a: &AntisymForm<Cx<f64>>, b: &AntisymForm<Cx<f64>>, c: Cx<f64>) -> f64 {
    a.components()
        .iter()
        .zip(b.components())
        .map(|(u, v)| {
            let d = *u - c * *v;
            d.re.hypot(d.im)
        })
        .fold(0.0, f64::max)
}

/// The three one-forms `T_i` on the base chart (`dγ = dα/ℓ`).
pub fn t_forms(params: &PQParams, x: &[f64; 5]) -> [AntisymForm<Cx<f64>>; 3] {
    let (th, y) = (x[0], x[2]);
    let (p, l, ell) = (params.p as f64, params.l as f64, params.ell);
    let (y1, y3) = (params.y1, params.y3);
    let s = params.half_cubic(y);
    let k = p * (y1 - y3) * (y - 1.0) / (2.0 * (1.0 - y1) * (y - y1) * (y - y3));
    let re = |v: f64| Cx::new(v, 0.0);
    let im = |v: f64| Cx::new(0.0, v);
    let t1 = vec![re(1.0 / th.tan()), Cx::zero(), re(0.5 * (3.0 * y * y - 3.0 * y) / s), Cx::zero(), im(1.0)];
    let t2 = vec![re((th / 2.0).tan()), im(1.0), re(-0.5 * (3.0 * y * y - 3.0 * y) / s), Cx::zero(), im(-1.0)];
    let t3 = vec![re(0.5 * l * (th / 2.0).tan()), im(0.5 * l), re(k), im(1.0 / ell), im(-0.5 * l)];
    [AntisymForm::one_form(t1), AntisymForm::one_form(t2), AntisymForm::one_form(t3)]
}

/// The radial coefficients `c_i` in `dz^i = c_i dr + T_i`, times `r`.
pub fn radial_coefficients(params: &PQParams) -> [f64; 3] {
    let (p, y1, y3) = (params.p as f64, params.y1, params.y3);
    [3.0, -3.0, p * (y1 - y3) / (1.0 - y1)]
}

fn two_form(terms: &[(usize, usize, Cx<f64>)], ell: f64) -> AntisymForm<Cx<f64>> {
    // index 5 stands for dγ = dα/ℓ
    let mut f = AntisymForm::zero(5, 2);
    for &(i, j, c) in terms {
        let (i, ci) = if i == 5 { (3, 1.0 / ell) } else { (i, 1.0) };
        let (j, cj) = if j == 5 { (3, 1.0 / ell) } else { (j, 1.0) };
        f.add_term(&[i, j], c.scale(ci * cj));
    }
    f
}

/// Closed-form expansions of `T₂∧T₃`, `T₁∧T₃` and `T₁∧T₂`.
pub fn expanded_t_wedges(params: &PQParams, x: &[f64; 5]) -> [AntisymForm<Cx<f64>>; 3] {
    const TH: usize = 0;
    const PH: usize = 1;
    const Y: usize = 2;
    const PS: usize = 4;
    const GA: usize = 5;
    let (th, y) = (x[0], x[2]);
    let (p, l) = (params.p as f64, params.l as f64);
    let (y1, y3) = (params.y1, params.y3);
    let s = params.half_cubic(y);
    let k = p * (y1 - y3) * (y - 1.0) / (2.0 * (1.0 - y1) * (y - y1) * (y - y3));
    let lq = 3.0 * y * (y - 1.0) / s;
    let kl = k + 0.25 * l * lq;
    let (tan2, cot, sin) = ((th / 2.0).tan(), 1.0 / th.tan(), th.sin());
    let re = |v: f64| Cx::new(v, 0.0);
    let im = |v: f64| Cx::new(0.0, v);
    let t23 = two_form(
        &[
            (TH, Y, re(tan2 * kl)),
            (Y, PH, im(-kl)),
            (Y, PS, im(kl)),
            (Y, GA, im(-0.5 * lq)),
            (TH, GA, im(tan2)),
            (PH, GA, re(-1.0)),
            (PS, GA, re(1.0)),
        ],
        params.ell,
    );
    let t13 = two_form(
        &[
            (TH, Y, re(k * cot - 0.25 * l * lq * tan2)),
            (Y, PS, im(-kl)),
            (TH, PH, im(0.5 * l * cot)),
            (TH, GA, im(cot)),
            (TH, PS, im(-0.5 * l / sin)),
            (Y, PH, im(0.25 * l * lq)),
            (Y, GA, im(0.5 * lq)),
            (PS, PH, re(-0.5 * l)),
            (PS, GA, re(-1.0)),
        ],
        params.ell,
    );
    let t12 = two_form(
        &[
            (TH, Y, re(-0.5 * lq / sin)),
            (TH, PH, im(cot)),
            (TH, PS, im(-1.0 / sin)),
            (Y, PH, im(0.5 * lq)),
            (PS, PH, re(-1.0)),
        ],
        params.ell,
    );
    [t23, t13, t12]
}

/// `sinθ √S e^{iψ} (3T₂∧T₃ + 3T₁∧T₃ + p(y₁−y₃)/(1−y₁) T₁∧T₂)` from given wedges.
fn tt_combination(params: &PQParams, x: &[f64; 5], w: &[AntisymForm<Cx<f64>>; 3]) -> AntisymForm<Cx<f64>> {
    let c3 = radial_coefficients(params)[2];
    let m = x[0].sin() * params.half_cubic(x[2]).sqrt();
    let phase = Cx::new(m * x[4].cos(), m * x[4].sin());
    w[0].scale(3.0).add(&w[1].scale(3.0)).add(&w[2].scale(c3)).times(phase)
}

/// The assembled closed form with `a(y)`.
pub fn expanded_cvol(params: &PQParams, x: &[f64; 5]) -> AntisymForm<Cx<f64>> {
    const TH: usize = 0;
    const PH: usize = 1;
    const Y: usize = 2;
    const PS: usize = 4;
    const GA: usize = 5;
    let (th, y, ps) = (x[0], x[2], x[4]);
    let ay = params.a_of(y);
    let ell = params.ell;
    let (sin, cos) = (th.sin(), th.cos());
    let re = |v: f64| Cx::new(v, 0.0);
    let im = |v: f64| Cx::new(0.0, v);
    let inner = two_form(
        &[
            (TH, Y, re(ay)),
            (PS, PH, re(0.5 / ell * sin)),
            (PH, GA, re(-3.0 * sin)),
            (TH, PS, im(0.5 / ell)),
            (TH, GA, im(3.0)),
            (Y, PH, im(-ay * sin)),
            (TH, PH, im(-0.5 / ell * cos)),
        ],
        ell,
    );
    let m = params.half_cubic(y).sqrt();
    inner.times(Cx::new(m * ps.cos(), m * ps.sin()))
}

/// The three closed forms of `a(y)`.
pub fn a_of_y_forms(params: &PQParams, y: f64) -> [f64; 3] {
    let (p, y1, y2, y3, a) = (params.p as f64, params.y1, params.y2, params.y3, params.a);
    let s = params.half_cubic(y);
    let f1 = 3.0 * p * (y1 - y3) * (y - 1.0) / (2.0 * (1.0 - y1) * (y - y1) * (y - y3))
        - p * (y1 - y3) / (2.0 * (1.0 - y1)) * 3.0 * y * (y - 1.0) / s;
    let f2 = 3.0 * p * y2 * (y1 - y3) / (1.0 - y1) * (1.0 - y) / (2.0 * y.powi(3) - 3.0 * y * y + a);
    let f3 = -1.5 / params.ell * (1.0 - y) / (2.0 * y.powi(3) - 3.0 * y * y + a);
    [f1, f2, f3]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WedgeReport {
    /// `max |dz^i − c_i dr/r − T_i|`
    pub dz_vs_t: f64,
    pub t2t3: f64,
    pub t1t3: f64,
    pub t1t2: f64,
    /// Assembled `T` combination against `ι_{∂r}Ω/r²`.
    pub tt_vs_extraction: f64,
    /// Closed form with `a(y)` against the `T` combination.
    pub cvol_vs_tt: f64,
    /// Closed form with `a(y)` against `ℜΨ + iℑΨ`.
    pub cvol_vs_re_im: f64,
    /// Spread of the three `a(y)` expressions.
    pub a_forms: f64,
}

impl WedgeReport {
    pub fn max_wedge(&self) -> f64 {
        self.t2t3.max(self.t1t3).max(self.t1t2)
    }

    pub fn max_all(&self) -> f64 {
        [
            self.dz_vs_t,
            self.t2t3,
            self.t1t3,
            self.t1t2,
            self.tt_vs_extraction,
            self.cvol_vs_tt,
            self.cvol_vs_re_im,
            self.a_forms,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn wedge_expansion_check(params: &PQParams, x: &[f64; 5]) -> Result<WedgeReport> {
    params.check_chart(x)?;
    let xc = [1.0, x[0], x[1], x[2], x[3], x[4]];
    let t = t_forms(params, x);
    let diff = |a: &AntisymForm<Cx<f64>>, b: &AntisymForm<Cx<f64>>| a.sub(b).max_abs();

    let z = complex_chart(params, &seed::<Jet1<6>, 6>(&xc));
    let rc = radial_coefficients(params);
    let mut dz_vs_t: f64 = 0.0;
    for i in 0..3 {
        dz_vs_t = dz_vs_t.max((z[i].re.g[R] - rc[i] / xc[R]).abs() + z[i].im.g[R].abs());
        for k in 0..5 {
            let d = Cx::new(z[i].re.g[k + 1], z[i].im.g[k + 1]) - t[i].get(&[k]);
            dz_vs_t = dz_vs_t.max(d.re.hypot(d.im));
        }
    }

    let computed = [t[1].wedge(&t[2])?, t[0].wedge(&t[2])?, t[0].wedge(&t[1])?];
    let expanded = expanded_t_wedges(params, x);
    let tt = tt_combination(params, x, &expanded);
    let extracted = extract_base_killing(params, &xc)?;
    let cvol = expanded_cvol(params, x);
    let af = a_of_y_forms(params, x[2]);
    let a_forms = (af[0] - af[2]).abs().max((af[1] - af[2]).abs());
    Ok(WedgeReport {
        dz_vs_t,
        t2t3: diff(&computed[0], &expanded[0]),
        t1t3: diff(&computed[1], &expanded[1]),
        t1t2: diff(&computed[2], &expanded[2]),
        tt_vs_extraction: diff(&tt, &extracted),
        cvol_vs_tt: diff(&cvol, &tt),
        cvol_vs_re_im: diff(&cvol, &closed_form_complex_psi(params, x)),
        a_forms,
    })
}

/// Angular frame `e₁ = ∂φ + ∂ψ`, `e₂ = ∂φ − (l/2)ℓ∂α`, `e₃ = ℓ∂α` on the cone chart.
pub fn toric_frame(params: &PQParams) -> [[f64; 6]; 3] {
    let (l, ell) = (params.l as f64, params.ell);
    let mut e = [[0.0; 6]; 3];
    e[0][CPH] = 1.0;
    e[0][CPS] = 1.0;
    e[1][CPH] = 1.0;
    e[1][CAL] = -0.5 * l * ell;
    e[2][CAL] = ell;
    e
}

/// `g_cone(e_i, e_j)` in the toric frame.
pub fn angular_block(params: &PQParams, xc: &[f64; 6]) -> Result<[[f64; 3]; 3]> {
    let g = MetricEval::at(&ConeMetric::new(*params), xc)?.g;
    let e = toric_frame(params);
    Ok(std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut s = 0.0;
            for a in 0..6 {
                for b in 0..6 {
                    s += e[i][a] * g[a][b] * e[j][b];
                }
            }
            s
        })
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{einstein_residual, killing_yano_residual};
    use crate::toric::{momentum_map, ypq_toric_model};
    use crate::ypq::{make_params, FormKind, YpqForm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cone_point(pr: &PQParams, rng: &mut ChaCha8Rng) -> [f64; 6] {
        let b = pr.sample_default(rng);
        [rng.gen_range(0.5..2.0), b[0], b[1], b[2], b[3], b[4]]
    }

    #[test]
    fn cone_metric_block_structure_and_ricci_flatness() {
        let pr = make_params(3, 1).unwrap();
        let cm = ConeMetric::new(pr);
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for _ in 0..5 {
            let xc = cone_point(&pr, &mut rng);
            let g = MetricEval::at(&cm, &xc).unwrap().g;
            let gb = crate::ypq::metric_at(&pr, &base_of(&xc)).unwrap().g;
            assert_eq!(g[0][0], 1.0);
            for j in 1..6 {
                assert_eq!(g[0][j], 0.0);
                for i in 1..6 {
                    assert!((g[i][j] - xc[0] * xc[0] * gb[i - 1][j - 1]).abs() < 1e-15);
                }
            }
            let res = einstein_residual(&cm, &xc, 0.0).unwrap();
            assert!(res < 1e-7, "{res:e} at {xc:?}");
        }
    }

    #[test]
    fn kahler_form_is_closed_and_parallel() {
        let pr = make_params(2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let xc = cone_point(&pr, &mut rng);
        let eta = YpqForm::new(pr, FormKind::Eta);
        let w = lift_form_jet(&eta, &xc).unwrap();
        assert!(exterior_derivative::<_, 6>(&w).unwrap().max_abs() < 1e-12);
        assert!(lift_parallel_residual(&pr, &eta, &xc).unwrap() < 1e-10);
        // lift of η equals ½ d(r² η)
        let r = xc[0];
        let e = crate::ypq::eta(&base_of(&xc)).embed(1);
        let mut half_d = AntisymForm::<f64>::zero(6, 2);
        for k in 1..6 {
            half_d.add_term(&[0, k], r * e.get(&[k]));
        }
        let de = crate::ypq::d_eta(&base_of(&xc)).embed(1).scale(0.5 * r * r);
        assert!(w.values().max_abs_diff(&half_d.add(&de)) < 1e-14);
    }

    #[test]
    fn lifted_complex_killing_forms_are_parallel() {
        let pr = make_params(7, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..3 {
            let xc = cone_point(&pr, &mut rng);
            for k in [FormKind::RePsi, FormKind::ImPsi] {
                assert!(lift_parallel_residual(&pr, &YpqForm::new(pr, k), &xc).unwrap() < 1e-9);
            }
        }
    }

    /// `θ dφ∧dψ`: not Killing-Yano.
    struct Generic;
    impl FormField<5> for Generic {
        fn degree(&self) -> usize {
            2
        }
        fn eval<T: Scalar>(&self, x: &[T; 5]) -> AntisymForm<T> {
            AntisymForm::from_terms(5, 2, &[(&[1, 4], x[0])])
        }
    }

    #[test]
    fn lift_of_generic_form_is_not_parallel() {
        let pr = make_params(2, 1).unwrap();
        let xc = reference_point(&pr);
        assert!(killing_yano_residual(&YpqMetric::new(pr), &Generic, &base_of(&xc)).unwrap() > 1e-2);
        assert!(lift_parallel_residual(&pr, &Generic, &xc).unwrap() > 1e-2);
    }

    #[test]
    fn omega_is_closed_parallel_with_constant_modulus() {
        let pr = make_params(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut ratios = Vec::new();
        for _ in 0..10 {
            let xc = cone_point(&pr, &mut rng);
            let c = omega_checks(&pr, &xc).unwrap();
            assert!(c.closed < 1e-9 && c.parallel < 1e-9, "{c:?}");
            ratios.push(c.modulus_ratio);
        }
        let (m, s) = crate::toric::mean_std(&ratios);
        assert!(s / m < 1e-10);
    }

    #[test]
    fn extraction_equals_closed_form_and_is_radius_independent() {
        let pr = make_params(2, 1).unwrap();
        let reference = reference_point(&pr);
        let c = fit_complex_constant(
            &extract_base_killing(&pr, &reference).unwrap(),
            &closed_form_complex_psi(&pr, &base_of(&reference)),
        );
        assert!((c.re - 1.0).abs() < 1e-12 && c.im.abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..10 {
            let mut xc = cone_point(&pr, &mut rng);
            let b = base_of(&xc);
            let e = extract_base_killing(&pr, &xc).unwrap();
            assert!(complex_residual(&e, &closed_form_complex_psi(&pr, &b), c) < 1e-10);
            xc[0] = 0.7;
            let e1 = extract_base_killing(&pr, &xc).unwrap();
            xc[0] = 1.9;
            let e2 = extract_base_killing(&pr, &xc).unwrap();
            assert!(e1.sub(&e2).max_abs() < 1e-11);
        }
    }

    #[test]
    fn wedge_expansions_reproduce_products() {
        for (p, q) in [(2, 1), (5, 4)] {
            let pr = make_params(p, q).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(25);
            for _ in 0..10 {
                let rep = wedge_expansion_check(&pr, &pr.sample_default(&mut rng)).unwrap();
                assert!(rep.max_wedge() < 1e-9, "{rep:?}");
                assert!(rep.max_all() < 1e-9, "{rep:?}");
            }
        }
    }

    #[test]
    fn t2_with_wrong_dy_coefficient_does_not_match_dz2() {
        // dy-coefficient (3y² − 2y) in place of (3y² − 3y)
        let pr = make_params(2, 1).unwrap();
        let x = [1.0, 0.0, 0.2, 0.0, 0.0];
        let z = complex_chart(&pr, &seed::<Jet1<6>, 6>(&[1.0, x[0], x[1], x[2], x[3], x[4]]));
        let s = pr.half_cubic(x[2]);
        let literal = -0.5 * (3.0 * x[2] * x[2] - 2.0 * x[2]) / s;
        let corrected = t_forms(&pr, &x)[1].get(&[2]).re;
        assert!((z[1].re.g[3] - corrected).abs() < 1e-14);
        assert!((z[1].re.g[3] - literal).abs() > 1e-2);
    }

    #[test]
    fn toric_hessian_inverse_is_angular_cone_metric() {
        let pr = make_params(2, 1).unwrap();
        let model = ypq_toric_model(&pr);
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for _ in 0..10 {
            let xc = cone_point(&pr, &mut rng);
            let y = momentum_map(&pr, xc[0], &base_of(&xc)).unwrap();
            let h = model.symplectic_potential(&y).unwrap().h;
            let ginv = crate::jet::invert(&h).unwrap();
            let ang = angular_block(&pr, &xc).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert!((ginv[i][j] - ang[i][j]).abs() < 1e-12, "{i}{j}");
                }
            }
        }
    }
}
