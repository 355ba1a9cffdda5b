//! The Y^{p,q} Sasaki-Einstein metrics in local coordinates `(θ, φ, y, α, ψ)`.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::AntisymForm;
use crate::geom::{FormField, MetricEval, MetricField, INTERIOR_MARGIN};
use crate::jet::Scalar;

pub const TH: usize = 0;
pub const PH: usize = 1;
pub const Y: usize = 2;
pub const AL: usize = 3;
pub const PS: usize = 4;

/// Scalars determined by the coprime pair `(p, q)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PQParams {
    pub p: u32,
    pub q: u32,
    pub a: f64,
    pub ell: f64,
    /// `l = p − q`
    pub l: i64,
    pub y1: f64,
    pub y2: f64,
    pub y3: f64,
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn make_params(p: u32, q: u32) -> Result<PQParams> {
    if q == 0 {
        return Err(Error::OutOfRange { p, q });
    }
    if gcd(p, q) != 1 {
        return Err(Error::NotCoprime { p, q });
    }
    if q >= p {
        return Err(Error::OutOfRange { p, q });
    }
    let (pf, qf) = (p as f64, q as f64);
    let s = (4.0 * pf * pf - 3.0 * qf * qf).sqrt();
    let a = 0.5 - (pf * pf - 3.0 * qf * qf) / (4.0 * pf.powi(3)) * s;
    let polish = |y: f64| {
        let c = 2.0 * y.powi(3) - 3.0 * y * y + a;
        let dc = 6.0 * y * y - 6.0 * y;
        y - c / dc
    };
    let y1 = polish((2.0 * pf - 3.0 * qf - s) / (4.0 * pf));
    let y2 = polish((2.0 * pf + 3.0 * qf - s) / (4.0 * pf));
    let y3 = polish(0.5 + s / (2.0 * pf));
    let ell = qf / (3.0 * qf * qf - 2.0 * pf * pf + pf * s);
    Ok(PQParams {
        p,
        q,
        a,
        ell,
        l: p as i64 - q as i64,
        y1,
        y2,
        y3,
    })
}

impl PQParams {
    /// `a − 3y² + 2y³`
    pub fn cubic<T: Scalar>(&self, y: T) -> T {
        (y * 2.0 - 3.0) * y * y + self.a
    }

    pub fn w<T: Scalar>(&self, y: T) -> T {
        (T::cst(self.a) - y * y) * 2.0 / (T::one() - y)
    }

    pub fn q_of<T: Scalar>(&self, y: T) -> T {
        self.cubic(y) / (T::cst(self.a) - y * y)
    }

    pub fn f<T: Scalar>(&self, y: T) -> T {
        (T::cst(self.a) - y * 2.0 + y * y) / ((T::cst(self.a) - y * y) * 6.0)
    }

    /// `p(y) = (2y³ − 3y² + a)/(3(1 − y))`
    pub fn p_of<T: Scalar>(&self, y: T) -> T {
        self.cubic(y) / ((T::one() - y) * 3.0)
    }

    /// `a(y) = −(3/(2ℓ)) (1 − y)/(2y³ − 3y² + a)`
    pub fn a_of<T: Scalar>(&self, y: T) -> T {
        (T::one() - y) / self.cubic(y) * (-1.5 / self.ell)
    }

    /// `y³ − (3/2)y² + a/2`, the radicand appearing in the complex chart.
    pub fn half_cubic<T: Scalar>(&self, y: T) -> T {
        self.cubic(y) * 0.5
    }

    pub fn roots(&self) -> [f64; 3] {
        [self.y1, self.y2, self.y3]
    }

    /// Interior test with margin `eps` on `θ` and `y`.
    pub fn is_interior(&self, x: &[f64; 5], eps: f64) -> bool {
        x[TH] > eps && x[TH] < PI - eps && x[Y] > self.y1 + eps && x[Y] < self.y2 - eps
    }

    pub fn check_chart(&self, x: &[f64; 5]) -> Result<()> {
        if !(x[TH] > 0.0 && x[TH] < PI) {
            return Err(Error::OutOfChart(format!("theta = {} not in (0, pi)", x[TH])));
        }
        if !(x[Y] > self.y1 && x[Y] < self.y2) {
            return Err(Error::OutOfChart(format!(
                "y = {} not in ({}, {})",
                x[Y], self.y1, self.y2
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutOfChart("non-finite coordinate".into()));
        }
        Ok(())
    }

    /// Uniform interior sample; `α` ranges over `[0, 2πℓ)`.
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R, eps: f64) -> [f64; 5] {
        [
            rng.gen_range(eps..PI - eps),
            rng.gen_range(0.0..2.0 * PI),
            rng.gen_range(self.y1 + eps..self.y2 - eps),
            rng.gen_range(0.0..2.0 * PI * self.ell),
            rng.gen_range(0.0..2.0 * PI),
        ]
    }

    pub fn sample_default<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 5] {
        self.sample_interior(rng, INTERIOR_MARGIN)
    }
}

/// The Einstein metric (`c = 1`).
#[derive(Clone, Copy, Debug)]
pub struct YpqMetric {
    pub params: PQParams,
}

impl YpqMetric {
    pub fn new(params: PQParams) -> Self {
        Self { params }
    }
}

impl MetricField<5> for YpqMetric {
    fn components<T: Scalar>(&self, x: &[T; 5]) -> [[T; 5]; 5] {
        let pr = &self.params;
        let (th, y) = (x[TH], x[Y]);
        let (s, c) = (th.sin(), th.cos());
        let w = pr.w(y);
        let q = pr.q_of(y);
        let f = pr.f(y);
        let one_y = T::one() - y;
        let z = T::zero();
        let o = T::one();
        // sum of squares of one-forms
        let blocks: [(T, [T; 5]); 5] = [
            (one_y / 6.0, [o, z, z, z, z]),
            (one_y * s * s / 6.0, [z, o, z, z, z]),
            ((w * q).recip(), [z, z, o, z, z]),
            (q / 9.0, [z, -c, z, z, o]),
            (w, [z, -(f * c), z, o, f]),
        ];
        sum_of_squares(&blocks)
    }

    fn inverse_components<T: Scalar>(&self, x: &[T; 5]) -> Option<[[T; 5]; 5]> {
        let pr = &self.params;
        let (th, y) = (x[TH], x[Y]);
        let (s, c) = (th.sin(), th.cos());
        let w = pr.w(y);
        let q = pr.q_of(y);
        let f = pr.f(y);
        let one_y = T::one() - y;
        let z = T::zero();
        let o = T::one();
        // dual frame of the one-forms above
        let blocks: [(T, [T; 5]); 5] = [
            (one_y.recip() * 6.0, [o, z, z, z, z]),
            ((one_y * s * s).recip() * 6.0, [z, o, z, z, c]),
            (w * q, [z, z, o, z, z]),
            (q.recip() * 9.0, [z, z, z, -f, o]),
            (w.recip(), [z, z, z, o, z]),
        ];
        Some(sum_of_squares(&blocks))
    }

    fn check(&self, x: &[f64; 5]) -> Result<()> {
        self.params.check_chart(x)
    }
}

fn sum_of_squares<T: Scalar>(blocks: &[(T, [T; 5]); 5]) -> [[T; 5]; 5] {
    let mut g = [[T::zero(); 5]; 5];
    for (k, v) in blocks {
        for i in 0..5 {
            for j in i..5 {
                let t = *k * v[i] * v[j];
                g[i][j] += t;
            }
        }
    }
    for i in 0..5 {
        for j in 0..i {
            g[i][j] = g[j][i];
        }
    }
    g
}

pub fn metric_at(params: &PQParams, x: &[f64; 5]) -> Result<MetricEval<5>> {
    MetricEval::at(&YpqMetric::new(*params), x)
}

/// Contact form `η = −2y dα + ((1 − y)/3)(dψ − cosθ dφ)`.
pub fn eta<T: Scalar>(x: &[T; 5]) -> AntisymForm<T> {
    let y = x[Y];
    let k = (T::one() - y) / 3.0;
    AntisymForm::one_form(vec![T::zero(), -(k * x[TH].cos()), T::zero(), y * -2.0, k])
}

pub fn eta_at(params: &PQParams, x: &[f64; 5]) -> Result<AntisymForm<f64>> {
    params.check_chart(x)?;
    Ok(eta(x))
}

/// Reeb vector `3∂_ψ − ½∂_α`.
pub fn reeb_at(_params: &PQParams) -> [f64; 5] {
    [0.0, 0.0, 0.0, -0.5, 3.0]
}

/// `dη = −2 dy∧dα − ⅓ dy∧dψ + ⅓cosθ dy∧dφ + ((1 − y)/3) sinθ dθ∧dφ`.
pub fn d_eta<T: Scalar>(x: &[T; 5]) -> AntisymForm<T> {
    let (th, y) = (x[TH], x[Y]);
    AntisymForm::from_terms(
        5,
        2,
        &[
            (&[Y, AL], T::cst(-2.0)),
            (&[Y, PS], T::cst(-1.0 / 3.0)),
            (&[Y, PH], th.cos() / 3.0),
            (&[TH, PH], (T::one() - y) * th.sin() / 3.0),
        ],
    )
}

/// The expanded 3-form `(1−y)²sinθ dθ∧dφ∧dψ − 6 dy∧dα∧dψ + 6cosθ dφ∧dy∧dα − 6(1−y)y sinθ dθ∧dφ∧dα`,
/// which equals `9 η∧dη`.
pub fn psi1_expanded<T: Scalar>(x: &[T; 5]) -> AntisymForm<T> {
    let (th, y) = (x[TH], x[Y]);
    let one_y = T::one() - y;
    AntisymForm::from_terms(
        5,
        3,
        &[
            (&[TH, PH, PS], one_y * one_y * th.sin()),
            (&[Y, AL, PS], T::cst(-6.0)),
            (&[PH, Y, AL], th.cos() * 6.0),
            (&[TH, PH, AL], one_y * y * th.sin() * -6.0),
        ],
    )
}

/// Real and imaginary parts of the complex special Killing 2-form, in the
/// closed form with prefactor `−(3/(2ℓ))√((1−y)/(6p(y)))`.
pub fn re_im_psi<T: Scalar>(params: &PQParams, x: &[T; 5]) -> (AntisymForm<T>, AntisymForm<T>) {
    let (th, y, ps) = (x[TH], x[Y], x[PS]);
    let p = params.p_of(y);
    let pref = ((T::one() - y) / (p * 6.0)).sqrt() * (-1.5 / params.ell);
    let (s, c) = (th.sin(), th.cos());
    let a = AntisymForm::from_terms(
        5,
        2,
        &[
            (&[TH, Y], T::one()),
            (&[PS, PH], -(p * s)),
            (&[PH, AL], p * s * 6.0),
        ],
    );
    let b = AntisymForm::from_terms(
        5,
        2,
        &[
            (&[TH, PS], -p),
            (&[TH, AL], p * -6.0),
            (&[Y, PH], -s),
            (&[TH, PH], p * c),
        ],
    );
    let (sp, cp) = (ps.sin(), ps.cos());
    let re = a.times(cp).sub(&b.times(sp)).times(pref);
    let im = a.times(sp).add(&b.times(cp)).times(pref);
    (re, im)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum FormKind {
    Eta,
    Phi1,
    Phi2,
    Psi1,
    Psi2,
    RePsi,
    ImPsi,
}

impl FormKind {
    pub const ALL: [FormKind; 7] = [
        FormKind::Eta,
        FormKind::Phi1,
        FormKind::Phi2,
        FormKind::Psi1,
        FormKind::Psi2,
        FormKind::RePsi,
        FormKind::ImPsi,
    ];

    pub fn degree(self) -> usize {
        match self {
            FormKind::Eta => 1,
            FormKind::Phi1 | FormKind::RePsi | FormKind::ImPsi => 2,
            FormKind::Psi1 => 3,
            FormKind::Phi2 => 4,
            FormKind::Psi2 => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FormKind::Eta => "eta",
            FormKind::Phi1 => "Phi1",
            FormKind::Phi2 => "Phi2",
            FormKind::Psi1 => "Psi1",
            FormKind::Psi2 => "Psi2",
            FormKind::RePsi => "RePsi",
            FormKind::ImPsi => "ImPsi",
        }
    }
}

/// One of the closed-form fields on Y^{p,q}, usable with the geometry operators.
#[derive(Clone, Copy, Debug)]
pub struct YpqForm {
    pub params: PQParams,
    pub kind: FormKind,
}

impl YpqForm {
    pub fn new(params: PQParams, kind: FormKind) -> Self {
        Self { params, kind }
    }
}

impl FormField<5> for YpqForm {
    fn degree(&self) -> usize {
        self.kind.degree()
    }

    fn eval<T: Scalar>(&self, x: &[T; 5]) -> AntisymForm<T> {
        let wedge = |a: &AntisymForm<T>, b: &AntisymForm<T>| a.wedge(b).expect("degrees fit in five dimensions");
        match self.kind {
            FormKind::Eta => eta(x),
            FormKind::Phi1 => d_eta(x),
            FormKind::Phi2 => {
                let de = d_eta(x);
                wedge(&de, &de)
            }
            FormKind::Psi1 => psi1_expanded(x),
            FormKind::Psi2 => {
                let de = d_eta(x);
                wedge(&eta(x), &wedge(&de, &de))
            }
            FormKind::RePsi => re_im_psi(&self.params, x).0,
            FormKind::ImPsi => re_im_psi(&self.params, x).1,
        }
    }
}

/// All closed-form Killing data at a point.
#[derive(Clone, Debug)]
pub struct SpecialForms {
    pub psi1: AntisymForm<f64>,
    pub psi2: AntisymForm<f64>,
    pub phi1: AntisymForm<f64>,
    pub phi2: AntisymForm<f64>,
    pub re_psi: AntisymForm<f64>,
    pub im_psi: AntisymForm<f64>,
}

pub fn special_forms(params: &PQParams, x: &[f64; 5]) -> Result<SpecialForms> {
    params.check_chart(x)?;
    let ev = |k| YpqForm::new(*params, k).eval(x);
    Ok(SpecialForms {
        psi1: ev(FormKind::Psi1),
        psi2: ev(FormKind::Psi2),
        phi1: ev(FormKind::Phi1),
        phi2: ev(FormKind::Phi2),
        re_psi: ev(FormKind::RePsi),
        im_psi: ev(FormKind::ImPsi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::exterior_derivative;
    use crate::geom::{einstein_residual, exterior_derivative_at, killing_vector_residual};
    use crate::jet::{seed, Jet1};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p21() -> PQParams {
        make_params(2, 1).unwrap()
    }

    #[test]
    fn y21_parameters_match_reference_values() {
        let pr = p21();
        let s13 = 13f64.sqrt();
        let exact = [0.5 - s13 / 32.0, 1.0 / (2.0 * s13 - 5.0), (1.0 - s13) / 8.0, (7.0 - s13) / 8.0, 0.5 + s13 / 4.0];
        let got = [pr.a, pr.ell, pr.y1, pr.y2, pr.y3];
        let approx = [0.38732466, 0.45226259, -0.32569404, 0.42430596, 1.40138809];
        for k in 0..5 {
            assert!((got[k] - exact[k]).abs() < 1e-15, "{k}");
            assert!((got[k] - approx[k]).abs() < 2e-6, "{k}");
        }
        assert!((pr.a - pr.y1 * pr.y1 * (3.0 - 2.0 * pr.y1)).abs() < 1e-15);
        assert_eq!(pr.l, 1);
    }

    #[test]
    fn roots_solve_the_cubic_and_sum_to_three_halves() {
        for (p, q) in [(2, 1), (3, 1), (3, 2), (5, 4), (7, 3), (40, 39)] {
            let pr = make_params(p, q).unwrap();
            for y in pr.roots() {
                assert!(pr.cubic(y).abs() < 1e-12, "({p},{q}) root {y}");
            }
            assert!((pr.y1 + pr.y2 + pr.y3 - 1.5).abs() < 1e-12);
            assert!(pr.y1 < 0.0 && 0.0 < pr.y2 && pr.y2 < 1.0 && 1.0 < pr.y3);
            assert!(pr.a > 0.0 && pr.a < 1.0);
        }
    }

    #[test]
    fn invalid_pairs_are_rejected() {
        assert_eq!(make_params(2, 2), Err(Error::NotCoprime { p: 2, q: 2 }));
        assert_eq!(make_params(4, 2), Err(Error::NotCoprime { p: 4, q: 2 }));
        assert_eq!(make_params(3, 0), Err(Error::OutOfRange { p: 3, q: 0 }));
        assert_eq!(make_params(2, 3), Err(Error::OutOfRange { p: 2, q: 3 }));
    }

    #[test]
    fn q_function_identity_and_positivity() {
        let pr = make_params(3, 2).unwrap();
        for i in 1..50 {
            let y = pr.y1 + (pr.y2 - pr.y1) * i as f64 / 50.0;
            assert!((pr.q_of(y) * (pr.a - y * y) - pr.cubic(y)).abs() < 1e-15);
            assert!(pr.w(y) > 0.0 && pr.q_of(y) > 0.0);
            assert!((pr.a_of(y) * pr.p_of(y) + 0.5 / pr.ell).abs() < 1e-10);
        }
    }

    #[test]
    fn metric_blocks_match_hand_expansion() {
        let pr = p21();
        let x = [PI / 2.0, 0.3, 0.1, 0.2, 1.0];
        let g = metric_at(&pr, &x).unwrap().g;
        let y = x[Y];
        let (w, q, f) = (pr.w(y), pr.q_of(y), pr.f(y));
        assert_eq!(g[TH][TH], (1.0 - y) / 6.0);
        // cosθ = 0: φ decouples from ψ and α
        assert!(g[PH][PS].abs() < 1e-16 && g[PH][AL].abs() < 1e-16);
        assert!((g[PH][PH] - (1.0 - y) / 6.0).abs() < 1e-15);
        assert!((g[PS][PS] - (q / 9.0 + w * f * f)).abs() < 1e-15);
        assert!((g[AL][PS] - w * f).abs() < 1e-15);
        assert!((g[AL][AL] - w).abs() < 1e-15);
        assert!((g[Y][Y] - 1.0 / (w * q)).abs() < 1e-12);
    }

    #[test]
    fn metric_is_einstein() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (p, q) in [(2, 1), (7, 3)] {
            let pr = make_params(p, q).unwrap();
            for _ in 0..5 {
                let x = pr.sample_default(&mut rng);
                assert!(einstein_residual(&YpqMetric::new(pr), &x, 4.0).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn closed_form_inverse_matches_numerical_inverse() {
        let pr = make_params(5, 4).unwrap();
        let m = YpqMetric::new(pr);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x = pr.sample_default(&mut rng);
            let g = m.components::<f64>(&x);
            let num = crate::jet::invert(&g).unwrap();
            let cf = m.inverse_components::<f64>(&x).unwrap();
            for i in 0..5 {
                for j in 0..5 {
                    assert!((num[i][j] - cf[i][j]).abs() < 1e-9 * cf[i][j].abs().max(1.0));
                }
            }
            assert!(metric_at(&pr, &x).unwrap().inverse_residual() < 1e-12);
        }
    }

    #[test]
    fn out_of_chart_points_are_rejected() {
        let pr = p21();
        assert!(matches!(metric_at(&pr, &[0.5, 0.0, 0.5, 0.0, 0.0]), Err(Error::OutOfChart(_))));
        assert!(matches!(metric_at(&pr, &[-0.1, 0.0, 0.0, 0.0, 0.0]), Err(Error::OutOfChart(_))));
    }

    #[test]
    fn reeb_vector_is_dual_to_eta() {
        let pr = p21();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = reeb_at(&pr);
        for _ in 0..10 {
            let x = pr.sample_default(&mut rng);
            let e = eta_at(&pr, &x).unwrap();
            let eb: f64 = (0..5).map(|i| e.get(&[i]) * b[i]).sum();
            assert!((eb - 1.0).abs() <= 2.0 * f64::EPSILON);
            assert_eq!(e.get(&[TH]), 0.0);
            let gb = metric_at(&pr, &x).unwrap().lower(&b);
            for i in 0..5 {
                assert!((gb[i] - e.get(&[i])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn isometry_generators_are_killing() {
        let pr = make_params(3, 1).unwrap();
        let m = YpqMetric::new(pr);
        let x = [1.1, 0.4, 0.05, 0.3, 2.0];
        for v in [reeb_at(&pr), [0.0, 1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 0.0, 1.0]] {
            assert!(killing_vector_residual(&m, &v, &x).unwrap() < 1e-12);
        }
    }

    #[test]
    fn closed_form_d_eta_matches_jet_derivative() {
        let pr = p21();
        let x = [0.7, 1.0, -0.1, 0.5, 2.0];
        let de = exterior_derivative_at(&YpqForm::new(pr, FormKind::Eta), &x).unwrap();
        assert!(de.max_abs_diff(&d_eta(&x)) < 1e-15);
        // oracle: 2ℓ dγ∧dy + ⅓ d[(1−y)(dψ − cosθ dφ)] expanded by hand
        let (th, y) = (x[TH], x[Y]);
        let hand = AntisymForm::from_terms(
            5,
            2,
            &[
                (&[AL, Y], 2.0),
                (&[Y, PS], -1.0 / 3.0),
                (&[Y, PH], th.cos() / 3.0),
                (&[TH, PH], (1.0 - y) * th.sin() / 3.0),
            ],
        );
        assert!(de.max_abs_diff(&hand) < 1e-15);
    }

    #[test]
    fn expanded_psi1_is_nine_eta_wedge_d_eta() {
        let pr = p21();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let x = pr.sample_default(&mut rng);
            let e = eta(&x);
            let w = e.wedge(&d_eta(&x)).unwrap().scale(9.0);
            let f = special_forms(&pr, &x).unwrap();
            assert!(f.psi1.max_abs_diff(&w) < 1e-14);
            let want = (1.0 - x[Y]).powi(2) * x[TH].sin();
            assert!((f.psi1.get(&[TH, PH, PS]) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn shipped_forms_satisfy_dd_zero() {
        let pr = make_params(5, 4).unwrap();
        let x = [2.0, 0.1, 0.2, 0.3, 0.4];
        for k in [FormKind::Eta, FormKind::Phi1, FormKind::Psi1, FormKind::RePsi, FormKind::ImPsi] {
            let form: AntisymForm<crate::jet::Jet2<5>> = YpqForm::new(pr, k).eval(&seed(&x));
            let d1 = exterior_derivative::<_, 5>(&form).unwrap();
            let dd = exterior_derivative::<_, 5>(&d1).unwrap();
            assert!(dd.max_abs() < 1e-12, "{k:?}");
        }
        let dphi1 = exterior_derivative_at(&YpqForm::new(pr, FormKind::Phi1), &x).unwrap();
        assert!(dphi1.max_abs() < 1e-15);
        let dphi2 = exterior_derivative_at(&YpqForm::new(pr, FormKind::Phi2), &x).unwrap();
        assert!(dphi2.max_abs() < 1e-14);
    }

    #[test]
    fn psi2_is_a_constant_multiple_of_the_volume_form() {
        let pr = make_params(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ratios: Vec<f64> = (0..20)
            .map(|_| {
                let x = pr.sample_default(&mut rng);
                let g = metric_at(&pr, &x).unwrap().g;
                let det = nalgebra::Matrix5::from_fn(|i, j| g[i][j]).determinant();
                special_forms(&pr, &x).unwrap().psi2.components()[0] / det.sqrt()
            })
            .collect();
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let sd = (ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / ratios.len() as f64).sqrt();
        assert!(sd / mean.abs() < 1e-10);
    }

    #[test]
    fn a_of_y_identity_with_radicand() {
        let pr = make_params(7, 3).unwrap();
        for i in 1..50 {
            let y = pr.y1 + (pr.y2 - pr.y1) * i as f64 / 50.0;
            let lhs = pr.half_cubic(y).sqrt() * pr.a_of(y);
            let rhs = -1.5 / pr.ell * ((1.0 - y) / (6.0 * pr.p_of(y))).sqrt();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn jet_metric_matches_finite_differences() {
        let pr = make_params(2, 1).unwrap();
        let m = YpqMetric::new(pr);
        let x = [1.3, 0.2, 0.1, 0.4, 0.9];
        let gj: [[Jet1<5>; 5]; 5] = m.components(&seed(&x));
        let h = 1e-4;
        for k in 0..5 {
            let at = |d: f64| {
                let mut xx = x;
                xx[k] += d;
                m.components::<f64>(&xx)
            };
            let (p1, m1, p2, m2) = (at(h), at(-h), at(2.0 * h), at(-2.0 * h));
            for i in 0..5 {
                for j in 0..5 {
                    let fd = (8.0 * (p1[i][j] - m1[i][j]) - (p2[i][j] - m2[i][j])) / (12.0 * h);
                    let scale = gj[i][j].g[k].abs().max(1.0);
                    assert!((fd - gj[i][j].g[k]).abs() / scale < 1e-6);
                }
            }
        }
    }
}
