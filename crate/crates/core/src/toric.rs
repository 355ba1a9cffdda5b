//! Toric description of the cone over Y^{p,q}: normals, symplectic potential,
//! momentum map, Legendre duality and the holomorphic chart.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{seed, Cx, Jet2, Scalar};
use crate::ypq::{PQParams, AL, PH, PS, TH, Y};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ToricMode {
    /// `G^can + G^B` over `v₁..v₄`, with `h ≡ 0`.
    CanonicalPlusReeb,
    /// `½ Σ_{A=1}^{6} l_A log|l_A|` with the auxiliary normals `v₅, v₆`.
    SixVectorExact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToricModel {
    pub normals: Vec<[f64; 3]>,
    pub reeb: [f64; 3],
    pub mode: ToricMode,
}

/// One term `½ κ l log(σ l)` of a symplectic potential, `l = ⟨v, y⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialTerm {
    pub v: [f64; 3],
    pub coef: f64,
    /// Sign of `l` on the moment cone.
    pub orientation: f64,
}

fn dot<T: Scalar>(v: &[f64; 3], y: &[T; 3]) -> T {
    y[0] * v[0] + y[1] * v[1] + y[2] * v[2]
}

pub fn reeb_vector(params: &PQParams) -> [f64; 3] {
    [3.0, -3.0, -1.5 * (params.l as f64 + 1.0 / (3.0 * params.ell))]
}

pub fn ypq_toric_model(params: &PQParams) -> ToricModel {
    let (p, q) = (params.p as f64, params.q as f64);
    let v1 = [1.0, -1.0, -p];
    let v2 = [1.0, 0.0, 0.0];
    let v3 = [1.0, -1.0, 0.0];
    let v4 = [1.0, -2.0, -p + q];
    let b = reeb_vector(params);
    let v5 = std::array::from_fn(|i| b[i] - v1[i] - v3[i]);
    let v6 = std::array::from_fn(|i| -v2[i] - v4[i]);
    ToricModel {
        normals: vec![v1, v2, v3, v4, v5, v6],
        reeb: b,
        mode: ToricMode::SixVectorExact,
    }
}

pub fn canonical_toric_model(params: &PQParams) -> ToricModel {
    let mut m = ypq_toric_model(params);
    m.normals.truncate(4);
    m.mode = ToricMode::CanonicalPlusReeb;
    m
}

/// `v₅` from its closed form `(1, −1, −p/2 + 3q/2 − 1/(2ℓ))`.
pub fn v5_closed_form(params: &PQParams) -> [f64; 3] {
    let (p, q) = (params.p as f64, params.q as f64);
    [1.0, -1.0, -0.5 * p + 1.5 * q - 0.5 / params.ell]
}

impl ToricModel {
    /// Normals of the form `(1, w)` among the first four.
    pub fn is_gorenstein(&self) -> bool {
        self.normals.iter().take(4).all(|v| v[0] == 1.0 && v.iter().all(|c| c.fract() == 0.0))
    }

    pub fn terms(&self) -> Vec<PotentialTerm> {
        match self.mode {
            ToricMode::SixVectorExact => self
                .normals
                .iter()
                .enumerate()
                .map(|(i, v)| PotentialTerm {
                    v: *v,
                    coef: 1.0,
                    // l₆ = −(l₂ + l₄) is negative on the whole cone
                    orientation: if i == 5 { -1.0 } else { 1.0 },
                })
                .collect(),
            ToricMode::CanonicalPlusReeb => {
                let mut t: Vec<PotentialTerm> = self
                    .normals
                    .iter()
                    .map(|v| PotentialTerm {
                        v: *v,
                        coef: 1.0,
                        orientation: 1.0,
                    })
                    .collect();
                let mut sum = [0.0; 3];
                for v in &self.normals {
                    for i in 0..3 {
                        sum[i] += v[i];
                    }
                }
                t.push(PotentialTerm {
                    v: self.reeb,
                    coef: 1.0,
                    orientation: 1.0,
                });
                t.push(PotentialTerm {
                    v: sum,
                    coef: -1.0,
                    orientation: 1.0,
                });
                t
            }
        }
    }

    /// Facet values `l_A(y) = ⟨v_A, y⟩`.
    pub fn facet_values(&self, y: &[f64; 3]) -> Vec<f64> {
        self.normals.iter().map(|v| dot(v, y)).collect()
    }

    pub fn check_domain(&self, y: &[f64; 3]) -> Result<()> {
        for (i, t) in self.terms().iter().enumerate() {
            let l = dot(&t.v, y);
            if !(t.orientation * l > 0.0) {
                return Err(Error::DomainError { facet: i + 1, value: l });
            }
        }
        Ok(())
    }

    /// Generic evaluation of `G`.
    pub fn potential<T: Scalar>(&self, y: &[T; 3]) -> T {
        self.terms().iter().fold(T::zero(), |acc, t| {
            let l = dot(&t.v, y);
            acc + l * (l * t.orientation).ln() * (0.5 * t.coef)
        })
    }

    /// `G` with gradient `x^i` and Hessian `G_ij`.
    pub fn symplectic_potential(&self, y: &[f64; 3]) -> Result<Jet2<3>> {
        self.check_domain(y)?;
        Ok(self.potential(&seed::<Jet2<3>, 3>(y)))
    }

    /// `½ Σ κ_A v_A v_Aᵀ / l_A`.
    pub fn analytic_hessian(&self, y: &[f64; 3]) -> [[f64; 3]; 3] {
        let mut h = [[0.0; 3]; 3];
        for t in self.terms() {
            let l = dot(&t.v, y);
            for i in 0..3 {
                for j in 0..3 {
                    h[i][j] += 0.5 * t.coef * t.v[i] * t.v[j] / l;
                }
            }
        }
        h
    }

    pub fn gradient(&self, y: &[f64; 3]) -> Result<[f64; 3]> {
        Ok(self.symplectic_potential(y)?.g)
    }
}

/// `y = (r²/2) η(e_i)` in the basis `e₁ = ∂φ + ∂ψ`, `e₂ = ∂φ − (l/2)ℓ∂α`, `e₃ = ℓ∂α`.
pub fn momentum_map_t<T: Scalar>(params: &PQParams, r: T, x: &[T; 5]) -> [T; 3] {
    let (c, y) = (x[TH].cos(), x[Y]);
    let r2 = r * r;
    let one_y = T::one() - y;
    let l = params.l as f64;
    [
        r2 * one_y * (T::one() - c) / 6.0,
        -(r2 * one_y * c / 6.0) + r2 * y * (0.5 * l * params.ell),
        r2 * y * (-params.ell),
    ]
}

pub fn momentum_map(params: &PQParams, r: f64, x: &[f64; 5]) -> Result<[f64; 3]> {
    if !(r > 0.0) {
        return Err(Error::OutOfChart(format!("r = {r} must be positive")));
    }
    params.check_chart(x)?;
    Ok(momentum_map_t(params, r, x))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LegendreResult {
    pub x: [f64; 3],
    pub y_back: [f64; 3],
    /// Kähler potential `F = ⟨y, x⟩ − G`.
    pub f: f64,
    pub iterations: usize,
    pub roundtrip_error: f64,
}

const NEWTON_MAX_ITER: usize = 100;

/// Solves `∇G(y) = x` by damped Newton from `start`.
pub fn invert_gradient(model: &ToricModel, x: &[f64; 3], start: &[f64; 3]) -> Result<([f64; 3], usize)> {
    model.check_domain(start)?;
    let resid = |y: &[f64; 3]| -> Option<(Vector3<f64>, Matrix3<f64>)> {
        model.check_domain(y).ok()?;
        let j = model.potential(&seed::<Jet2<3>, 3>(y));
        let r = Vector3::from_fn(|i, _| j.g[i] - x[i]);
        Some((r, Matrix3::from_fn(|i, k| j.h[i][k])))
    };
    let mut y = *start;
    let (mut r, mut h) = resid(&y).expect("start checked");
    let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for it in 0..NEWTON_MAX_ITER {
        if r.norm() <= 1e-15 * scale {
            return Ok((y, it));
        }
        let step = h.lu().solve(&r).ok_or(Error::NewtonDivergence {
            iterations: it,
            residual: r.norm(),
        })?;
        let mut t = 1.0;
        loop {
            let cand: [f64; 3] = std::array::from_fn(|i| y[i] - t * step[i]);
            match resid(&cand) {
                Some((rc, hc)) if rc.norm() < r.norm() || t < 1e-3 && rc.norm() <= r.norm() => {
                    y = cand;
                    r = rc;
                    h = hc;
                    break;
                }
                _ => {
                    t *= 0.5;
                    if t < 1e-10 {
                        // no descent left: either converged to rounding or stuck
                        if r.norm() <= 1e-12 * scale {
                            return Ok((y, it));
                        }
                        return Err(Error::NewtonDivergence {
                            iterations: it,
                            residual: r.norm(),
                        });
                    }
                }
            }
        }
    }
    if r.norm() <= 1e-12 * scale {
        Ok((y, NEWTON_MAX_ITER))
    } else {
        Err(Error::NewtonDivergence {
            iterations: NEWTON_MAX_ITER,
            residual: r.norm(),
        })
    }
}

/// `x = ∇G(y)`, then recovers `y` from `x` by Newton starting at a point
/// displaced from `y` by `displacement` (relative).
pub fn legendre_roundtrip(model: &ToricModel, y: &[f64; 3], displacement: f64) -> Result<LegendreResult> {
    let g = model.symplectic_potential(y)?;
    let x = g.g;
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let dir = [0.6, -0.48, 0.64];
    let mut start: [f64; 3] = std::array::from_fn(|i| y[i] + displacement * norm * dir[i]);
    if model.check_domain(&start).is_err() {
        start = std::array::from_fn(|i| y[i] * (1.0 + displacement));
    }
    let (y_back, iterations) = invert_gradient(model, &x, &start)?;
    let f = (0..3).map(|i| y[i] * x[i]).sum::<f64>() - g.v;
    let roundtrip_error = (0..3).fold(0.0f64, |m, i| m.max((y_back[i] - y[i]).abs()));
    Ok(LegendreResult {
        x,
        y_back,
        f,
        iterations,
        roundtrip_error,
    })
}

/// `F_ij = ∂y^i/∂x^j` by central differences of the inverse Legendre map.
pub fn kahler_hessian_fd(model: &ToricModel, y: &[f64; 3], h: f64) -> Result<[[f64; 3]; 3]> {
    let x = model.gradient(y)?;
    let mut out = [[0.0; 3]; 3];
    for j in 0..3 {
        let mut xp = x;
        let mut xm = x;
        xp[j] += h;
        xm[j] -= h;
        let (yp, _) = invert_gradient(model, &xp, y)?;
        let (ym, _) = invert_gradient(model, &xm, y)?;
        for i in 0..3 {
            out[i][j] = (yp[i] - ym[i]) / (2.0 * h);
        }
    }
    Ok(out)
}

/// `det(G_ij) · exp(2x¹)` at a moment point.
pub fn det_exp_product(model: &ToricModel, y: &[f64; 3]) -> Result<f64> {
    let g = model.symplectic_potential(y)?;
    let det = Matrix3::from_fn(|i, j| g.h[i][j]).determinant();
    Ok(det * (2.0 * g.g[0]).exp())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetFit {
    /// Constant with `det(G_ij) exp(2x¹ + c) = 1` on average.
    pub c: f64,
    pub rel_std: f64,
    pub samples: usize,
}

pub fn fit_det_constant(model: &ToricModel, ys: &[[f64; 3]]) -> Result<DetFit> {
    if ys.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: ys.len(),
        });
    }
    let vals: Vec<f64> = ys.iter().map(|y| det_exp_product(model, y)).collect::<Result<_>>()?;
    let (mean, sd) = mean_std(&vals);
    Ok(DetFit {
        c: -mean.ln(),
        rel_std: sd / mean.abs(),
        samples: vals.len(),
    })
}

pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Holomorphic coordinates on the cone chart `(r, θ, φ, y, α, ψ)`.
///
/// `z³` uses `log(y₃ − y)`, real on `y < y₃`.
pub fn complex_chart<T: Scalar>(params: &PQParams, xc: &[T; 6]) -> [Cx<T>; 3] {
    let (r, th, ph, y, al, ps) = (xc[0], xc[1], xc[2], xc[3], xc[4], xc[5]);
    let (p, l) = (params.p as f64, params.l as f64);
    let (y1, y3) = (params.y1, params.y3);
    let s = params.half_cubic(y);
    let r3 = r * r * r;
    let ch = (th * 0.5).cos();
    let x1 = (r3 * th.sin() * s.sqrt()).ln();
    let x2 = -(r3 * ch * ch * s.sqrt()).ln();
    let x3 = r.ln() * (p * (y1 - y3) / (1.0 - y1)) + (T::cst(y3) - y).ln() * (p * (1.0 - y3) / (2.0 * (1.0 - y1)))
        - ch.ln() * l
        - (y - y1).ln() * (p / 2.0);
    let gamma = al / params.ell;
    [
        Cx::new(x1, ps),
        Cx::new(x2, ph - ps),
        Cx::new(x3, ph * (l / 2.0) - ps * (l / 2.0) + gamma),
    ]
}

pub fn complex_coordinates(params: &PQParams, r: f64, x: &[f64; 5]) -> Result<[Cx<f64>; 3]> {
    if !(r > 0.0) {
        return Err(Error::OutOfChart(format!("r = {r} must be positive")));
    }
    params.check_chart(x)?;
    Ok(complex_chart(params, &[r, x[TH], x[PH], x[Y], x[AL], x[PS]]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ypq::make_params;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn y21_toric_data() {
        let pr = make_params(2, 1).unwrap();
        let m = ypq_toric_model(&pr);
        assert_eq!(m.normals[0], [1.0, -1.0, -2.0]);
        assert_eq!(m.normals[3], [1.0, -2.0, -1.0]);
        assert_eq!(m.normals[5], [-2.0, 2.0, 1.0]);
        let s13 = 13f64.sqrt();
        assert!((m.reeb[2] + (s13 - 1.0)).abs() < 1e-14);
        // both closed forms of v₅
        let v5 = v5_closed_form(&pr);
        for i in 0..3 {
            assert!((m.normals[4][i] - v5[i]).abs() < 1e-14);
        }
        assert!((v5[2] - (3.0 - s13)).abs() < 1e-14);
        assert!(m.is_gorenstein());
    }

    #[test]
    fn model_roundtrips_through_json() {
        let m = ypq_toric_model(&make_params(3, 1).unwrap());
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"mode\":\"SixVectorExact\""));
        let back: ToricModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn jet_hessian_matches_analytic_formula() {
        let pr = make_params(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for model in [ypq_toric_model(&pr), canonical_toric_model(&pr)] {
            for _ in 0..20 {
                let x = pr.sample_default(&mut rng);
                let y = momentum_map(&pr, 1.3, &x).unwrap();
                let g = model.symplectic_potential(&y).unwrap();
                let a = model.analytic_hessian(&y);
                for i in 0..3 {
                    for j in 0..3 {
                        assert!((g.h[i][j] - a[i][j]).abs() < 1e-10 * a[i][j].abs().max(1.0));
                        assert_eq!(g.h[i][j], g.h[j][i]);
                    }
                }
            }
        }
    }

    #[test]
    fn sixth_facet_is_negative_and_first_four_positive() {
        let pr = make_params(5, 4).unwrap();
        let model = ypq_toric_model(&pr);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let x = pr.sample_default(&mut rng);
            let l = model.facet_values(&momentum_map(&pr, 0.8, &x).unwrap());
            assert!(l[..5].iter().all(|&v| v > 0.0));
            assert!(l[5] < 0.0);
            assert!((l[5] + l[1] + l[3]).abs() < 1e-14);
        }
        assert!(matches!(
            model.symplectic_potential(&[-1.0, 0.0, 0.0]),
            Err(Error::DomainError { .. })
        ));
    }

    #[test]
    fn reeb_pairing_is_half_r_squared() {
        let pr = make_params(7, 3).unwrap();
        let b = reeb_vector(&pr);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for k in 0..20 {
            let r = 0.5 + 0.1 * k as f64;
            let y = momentum_map(&pr, r, &pr.sample_default(&mut rng)).unwrap();
            assert!((dot(&b, &y) - r * r / 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn momentum_image_approaches_first_facet_at_the_pole() {
        let pr = make_params(2, 1).unwrap();
        let y = momentum_map(&pr, 1.0, &[1e-6, 0.0, 0.1, 0.0, 0.0]).unwrap();
        assert!(y[0] >= 0.0 && y[0] < 1e-12);
    }

    #[test]
    fn legendre_inverse_recovers_moment_point() {
        let pr = make_params(2, 1).unwrap();
        let model = ypq_toric_model(&pr);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let y = momentum_map(&pr, 1.1, &pr.sample_default(&mut rng)).unwrap();
            let res = legendre_roundtrip(&model, &y, 0.02).unwrap();
            assert!(res.roundtrip_error < 1e-12, "{}", res.roundtrip_error);
        }
    }

    #[test]
    fn kahler_hessian_is_inverse_of_symplectic_hessian() {
        let pr = make_params(3, 1).unwrap();
        let model = ypq_toric_model(&pr);
        let y = momentum_map(&pr, 1.0, &[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let f = kahler_hessian_fd(&model, &y, 1e-5).unwrap();
        let g = model.symplectic_potential(&y).unwrap().h;
        let prod = Matrix3::from_fn(|i, j| f[i][j]) * Matrix3::from_fn(|i, j| g[i][j]);
        assert!((prod - Matrix3::identity()).abs().max() < 1e-8);
    }

    #[test]
    fn det_identity_holds_with_one_constant() {
        let pr = make_params(7, 3).unwrap();
        let model = ypq_toric_model(&pr);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ys: Vec<[f64; 3]> = (0..30)
            .map(|k| momentum_map(&pr, 0.5 + 0.05 * k as f64, &pr.sample_default(&mut rng)).unwrap())
            .collect();
        let fit = fit_det_constant(&model, &ys).unwrap();
        assert!(fit.rel_std < 1e-10, "{}", fit.rel_std);
    }

    #[test]
    fn chart_real_parts_match_legendre_gradient_up_to_constants() {
        let pr = make_params(2, 1).unwrap();
        let model = ypq_toric_model(&pr);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut diffs = vec![Vec::new(); 3];
        for k in 0..30 {
            let r = 0.4 + 0.07 * k as f64;
            let x = pr.sample_default(&mut rng);
            let z = complex_coordinates(&pr, r, &x).unwrap();
            let grad = model.gradient(&momentum_map(&pr, r, &x).unwrap()).unwrap();
            for i in 0..3 {
                diffs[i].push(z[i].re - grad[i]);
            }
        }
        for d in &diffs {
            assert!(mean_std(d).1 < 1e-12);
        }
    }

    #[test]
    fn exp_z1_and_r_independence_of_z1_plus_z2() {
        let pr = make_params(3, 2).unwrap();
        let x = [0.9, 0.4, 0.05, 0.7, 1.3];
        let s = pr.half_cubic(x[Y]).sqrt();
        for r in [0.7, 1.9] {
            let z = complex_coordinates(&pr, r, &x).unwrap();
            let e = z[0].exp();
            let m = r.powi(3) * x[TH].sin() * s;
            assert!((e.re - m * x[PS].cos()).abs() < 1e-12);
            assert!((e.im - m * x[PS].sin()).abs() < 1e-12);
            let sum = z[0].re + z[1].re;
            let want = x[TH].sin().ln() - 2.0 * (x[TH] / 2.0).cos().ln();
            assert!((sum - want).abs() < 1e-12);
        }
    }
}
