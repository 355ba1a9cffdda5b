//! Chart-based Riemannian geometry driven by second-order jets.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::forms::{sorted_tuples, AntisymForm};
use crate::jet::{invert, seed, Differentiable, Jet1, Jet2, Scalar};

/// Reciprocal condition number below which a metric is treated as singular.
pub const SINGULAR_RCOND: f64 = 1e-10;

/// Default interior margin for sampling and validity checks, in coordinate units.
pub const INTERIOR_MARGIN: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ChartId {
    /// `(θ, φ, y, α, ψ)` on the Sasaki-Einstein base.
    Base5,
    /// `(r, θ, φ, y, α, ψ)` on the cone.
    Cone6,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChartPoint {
    Base5([f64; 5]),
    Cone6([f64; 6]),
}

impl ChartPoint {
    pub fn chart(&self) -> ChartId {
        match self {
            ChartPoint::Base5(_) => ChartId::Base5,
            ChartPoint::Cone6(_) => ChartId::Cone6,
        }
    }

    pub fn coords(&self) -> &[f64] {
        match self {
            ChartPoint::Base5(x) => x,
            ChartPoint::Cone6(x) => x,
        }
    }

    /// The base coordinates; for a cone point the radius is dropped.
    pub fn base(&self) -> [f64; 5] {
        match self {
            ChartPoint::Base5(x) => *x,
            ChartPoint::Cone6(x) => [x[1], x[2], x[3], x[4], x[5]],
        }
    }
}

/// A metric given in closed form on an `N`-dimensional chart.
pub trait MetricField<const N: usize> {
    fn components<T: Scalar>(&self, x: &[T; N]) -> [[T; N]; N];

    /// Closed-form inverse metric, when available. Used in place of numerical
    /// inversion, which loses accuracy where the chart degenerates.
    fn inverse_components<T: Scalar>(&self, _x: &[T; N]) -> Option<[[T; N]; N]> {
        None
    }

    /// Rejects points outside the chart.
    fn check(&self, _x: &[f64; N]) -> Result<()> {
        Ok(())
    }
}

/// A differential form given in closed form on an `N`-dimensional chart.
pub trait FormField<const N: usize> {
    fn degree(&self) -> usize;
    fn eval<T: Scalar>(&self, x: &[T; N]) -> AntisymForm<T>;
}

/// A symmetric rank-2 tensor field.
pub trait SymmetricField<const N: usize> {
    fn eval<T: Scalar>(&self, x: &[T; N]) -> Result<[[T; N]; N]>;
}

pub type Mat<const N: usize> = [[f64; N]; N];
pub type Tensor3<const N: usize> = [[[f64; N]; N]; N];

fn zeros3<const N: usize>() -> Tensor3<N> {
    [[[0.0; N]; N]; N]
}

/// Metric, inverse and first/second partial derivatives at a point.
#[derive(Clone, Debug)]
pub struct MetricEval<const N: usize> {
    pub g: Mat<N>,
    pub g_inv: Mat<N>,
    /// `dg[k][i][j] = ∂_k g_ij`
    pub dg: Tensor3<N>,
    /// `d2g[k][l][i][j] = ∂_k ∂_l g_ij`
    pub d2g: Vec<Tensor3<N>>,
    /// `dg_inv[k][i][j] = ∂_k g^ij`
    pub dg_inv: Tensor3<N>,
}

/// Reciprocal 2-norm condition number.
pub fn rcond<const N: usize>(m: &Mat<N>) -> f64 {
    let d = DMatrix::from_fn(N, N, |i, j| m[i][j]);
    let sv = d.singular_values();
    let max = sv.max();
    let min = sv.min();
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

impl<const N: usize> MetricEval<N> {
    pub fn at<M: MetricField<N>>(field: &M, x: &[f64; N]) -> Result<Self> {
        field.check(x)?;
        let jets: [[Jet2<N>; N]; N] = field.components(&seed(x));
        let g: Mat<N> = std::array::from_fn(|i| std::array::from_fn(|j| jets[i][j].v));
        let rc = rcond(&g);
        if !(rc >= SINGULAR_RCOND) {
            return Err(Error::SingularMetric { rcond: rc });
        }
        let mut dg = zeros3::<N>();
        let mut d2g = vec![zeros3::<N>(); N];
        for i in 0..N {
            for j in 0..N {
                for k in 0..N {
                    dg[k][i][j] = jets[i][j].g[k];
                    for l in 0..N {
                        d2g[k][l][i][j] = jets[i][j].h[k][l];
                    }
                }
            }
        }
        let mut dg_inv = zeros3::<N>();
        let g_inv = match field.inverse_components::<Jet1<N>>(&seed(x)) {
            Some(inv) => {
                for i in 0..N {
                    for j in 0..N {
                        for k in 0..N {
                            dg_inv[k][i][j] = inv[i][j].g[k];
                        }
                    }
                }
                std::array::from_fn(|i| std::array::from_fn(|j| inv[i][j].v))
            }
            None => {
                let g_inv: Mat<N> = invert(&g).ok_or(Error::SingularMetric { rcond: rc })?;
                // ∂_k g^{ij} = −g^{ia} ∂_k g_ab g^{bj}
                for k in 0..N {
                    for i in 0..N {
                        for j in 0..N {
                            let mut acc = 0.0;
                            for a in 0..N {
                                for b in 0..N {
                                    acc += g_inv[i][a] * dg[k][a][b] * g_inv[b][j];
                                }
                            }
                            dg_inv[k][i][j] = -acc;
                        }
                    }
                }
                g_inv
            }
        };
        Ok(Self { g, g_inv, dg, d2g, dg_inv })
    }

    /// `max |g g⁻¹ − 1|`.
    pub fn inverse_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..N {
            for j in 0..N {
                let s: f64 = (0..N).map(|k| self.g[i][k] * self.g_inv[k][j]).sum();
                worst = worst.max((s - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        worst
    }

    pub fn is_positive_definite(&self) -> bool {
        let d = DMatrix::from_fn(N, N, |i, j| self.g[i][j]);
        d.cholesky().is_some()
    }

    pub fn lower(&self, v: &[f64; N]) -> [f64; N] {
        std::array::from_fn(|i| (0..N).map(|j| self.g[i][j] * v[j]).sum())
    }

    pub fn raise(&self, w: &[f64; N]) -> [f64; N] {
        std::array::from_fn(|i| (0..N).map(|j| self.g_inv[i][j] * w[j]).sum())
    }
}

/// Levi-Civita connection and its first derivatives at a point.
#[derive(Clone, Debug)]
pub struct Connection<const N: usize> {
    pub metric: MetricEval<N>,
    /// `gamma[l][m][n] = Γ^l_{mn}`
    pub gamma: Tensor3<N>,
}

impl<const N: usize> Connection<N> {
    pub fn at<M: MetricField<N>>(field: &M, x: &[f64; N]) -> Result<Self> {
        let metric = MetricEval::at(field, x)?;
        let first = first_kind(&metric.dg);
        let mut gamma = zeros3::<N>();
        for l in 0..N {
            for m in 0..N {
                for n in m..N {
                    let s: f64 = (0..N).map(|s| metric.g_inv[l][s] * first[s][m][n]).sum();
                    gamma[l][m][n] = s;
                    gamma[l][n][m] = s;
                }
            }
        }
        Ok(Self { metric, gamma })
    }

    /// `dgamma[r][l][m][n] = ∂_r Γ^l_{mn}`
    pub fn gamma_derivatives(&self) -> Vec<Tensor3<N>> {
        let met = &self.metric;
        let first = first_kind(&met.dg);
        (0..N)
            .map(|r| {
                let dginv = &met.dg_inv[r];
                let mut dfirst = zeros3::<N>();
                for s in 0..N {
                    for m in 0..N {
                        for n in 0..N {
                            dfirst[s][m][n] = 0.5
                                * (met.d2g[r][m][s][n] + met.d2g[r][n][s][m] - met.d2g[r][s][m][n]);
                        }
                    }
                }
                let mut out = zeros3::<N>();
                for l in 0..N {
                    for m in 0..N {
                        for n in m..N {
                            let v: f64 = (0..N)
                                .map(|s| dginv[l][s] * first[s][m][n] + met.g_inv[l][s] * dfirst[s][m][n])
                                .sum();
                            out[l][m][n] = v;
                            out[l][n][m] = v;
                        }
                    }
                }
                out
            })
            .collect()
    }

    /// Covariant derivative of a form whose components carry first partials.
    /// Entry `μ` of the result is `∇_μ ψ`.
    pub fn covariant_derivative_form<T: Differentiable<N>>(
        &self,
        form: &AntisymForm<T>,
    ) -> Result<Vec<AntisymForm<f64>>> {
        if form.dim() != N {
            return Err(Error::DimensionMismatch {
                left: form.dim(),
                right: N,
            });
        }
        let k = form.degree();
        if k == 0 {
            return Err(Error::DegreeMismatch {
                expected: 1,
                found: 0,
            });
        }
        let values = form.values();
        let tuples = sorted_tuples(N, k);
        let mut idx = vec![0usize; k];
        Ok((0..N)
            .map(|mu| {
                let mut out = AntisymForm::<f64>::zero(N, k);
                for (tuple, c) in tuples.iter().zip(form.components()) {
                    let mut v = c.partial(mu).value();
                    for slot in 0..k {
                        idx.copy_from_slice(tuple);
                        for lam in 0..N {
                            let gam = self.gamma[lam][mu][tuple[slot]];
                            if gam != 0.0 {
                                idx[slot] = lam;
                                v -= gam * values.get(&idx);
                            }
                        }
                    }
                    out.set_sorted(tuple, v);
                }
                out
            })
            .collect())
    }

    /// `∇_ρ K_{μν}` for a symmetric tensor given with first partials.
    pub fn covariant_derivative_symmetric<T: Differentiable<N>>(&self, k: &[[T; N]; N]) -> Tensor3<N> {
        let mut out = zeros3::<N>();
        for r in 0..N {
            for m in 0..N {
                for n in 0..N {
                    let mut v = k[m][n].partial(r).value();
                    for l in 0..N {
                        v -= self.gamma[l][r][m] * k[l][n].value() + self.gamma[l][r][n] * k[m][l].value();
                    }
                    out[r][m][n] = v;
                }
            }
        }
        out
    }
}

fn first_kind<const N: usize>(dg: &Tensor3<N>) -> Tensor3<N> {
    // Γ_{smn} = ½(∂_m g_sn + ∂_n g_sm − ∂_s g_mn)
    let mut out = zeros3::<N>();
    for s in 0..N {
        for m in 0..N {
            for n in 0..N {
                out[s][m][n] = 0.5 * (dg[m][s][n] + dg[n][s][m] - dg[s][m][n]);
            }
        }
    }
    out
}

/// Christoffel symbols `Γ^λ_{μν}`, indexed `[λ][μ][ν]`.
pub fn christoffel<M: MetricField<N>, const N: usize>(field: &M, x: &[f64; N]) -> Result<Tensor3<N>> {
    Ok(Connection::at(field, x)?.gamma)
}

/// Ricci tensor `R_{μν} = ∂_λΓ^λ_{μν} − ∂_νΓ^λ_{μλ} + Γ^λ_{λσ}Γ^σ_{μν} − Γ^λ_{νσ}Γ^σ_{μλ}`.
pub fn ricci<M: MetricField<N>, const N: usize>(field: &M, x: &[f64; N]) -> Result<Mat<N>> {
    let conn = Connection::at(field, x)?;
    let dgam = conn.gamma_derivatives();
    let gam = &conn.gamma;
    let mut ric = [[0.0; N]; N];
    for m in 0..N {
        for n in m..N {
            let mut v = 0.0;
            for l in 0..N {
                v += dgam[l][l][m][n] - dgam[n][l][m][l];
                for s in 0..N {
                    v += gam[l][l][s] * gam[s][m][n] - gam[l][n][s] * gam[s][m][l];
                }
            }
            ric[m][n] = v;
            ric[n][m] = v;
        }
    }
    Ok(ric)
}

/// `max |Ric − λ g|` at a point.
pub fn einstein_residual<M: MetricField<N>, const N: usize>(field: &M, x: &[f64; N], lambda: f64) -> Result<f64> {
    let ric = ricci(field, x)?;
    let g = MetricEval::at(field, x)?.g;
    let mut worst: f64 = 0.0;
    for i in 0..N {
        for j in 0..N {
            worst = worst.max((ric[i][j] - lambda * g[i][j]).abs());
        }
    }
    Ok(worst)
}

/// `∇_μ ψ` for every coordinate direction `μ`.
pub fn covariant_derivative_form<M, F, const N: usize>(
    metric: &M,
    form: &F,
    x: &[f64; N],
) -> Result<Vec<AntisymForm<f64>>>
where
    M: MetricField<N>,
    F: FormField<N>,
{
    let conn = Connection::at(metric, x)?;
    let psi: AntisymForm<Jet2<N>> = form.eval(&seed(x));
    conn.covariant_derivative_form(&psi)
}

/// `dψ` at a point.
pub fn exterior_derivative_at<F: FormField<N>, const N: usize>(form: &F, x: &[f64; N]) -> Result<AntisymForm<f64>> {
    let psi: AntisymForm<crate::jet::Jet1<N>> = form.eval(&seed(x));
    crate::forms::exterior_derivative::<_, N>(&psi)
}

/// `max |∇_μ ψ_I − (dψ)_{μI}/(p+1)|`, zero exactly for Killing-Yano forms.
pub fn killing_yano_residual_of<T: Differentiable<N>, const N: usize>(
    conn: &Connection<N>,
    psi: &AntisymForm<T>,
) -> Result<f64> {
    let p = psi.degree();
    let nabla = conn.covariant_derivative_form(psi)?;
    if p == N {
        return Ok(nabla.iter().map(|f| f.max_abs()).fold(0.0, f64::max));
    }
    let dpsi = crate::forms::exterior_derivative::<_, N>(psi)?.values();
    let mut worst: f64 = 0.0;
    let mut idx = Vec::with_capacity(p + 1);
    for (mu, nab) in nabla.iter().enumerate() {
        for (tuple, v) in nab.iter() {
            idx.clear();
            idx.push(mu);
            idx.extend_from_slice(&tuple);
            let r = v - dpsi.get(&idx) / (p as f64 + 1.0);
            worst = worst.max(r.abs());
        }
    }
    Ok(worst)
}

pub fn killing_yano_residual<M, F, const N: usize>(metric: &M, form: &F, x: &[f64; N]) -> Result<f64>
where
    M: MetricField<N>,
    F: FormField<N>,
{
    let conn = Connection::at(metric, x)?;
    let psi: AntisymForm<crate::jet::Jet1<N>> = form.eval(&seed(x));
    killing_yano_residual_of(&conn, &psi)
}

/// Killing-vector residual `max |∇_(μ X_ν)|` of a constant coordinate vector.
pub fn killing_vector_residual<M: MetricField<N>, const N: usize>(metric: &M, v: &[f64; N], x: &[f64; N]) -> Result<f64> {
    let conn = Connection::at(metric, x)?;
    // X_ν = g_νμ v^μ with jets for the partials
    let g: [[Jet2<N>; N]; N] = metric.components(&seed(x));
    let lowered: Vec<Jet2<N>> = (0..N)
        .map(|n| (0..N).fold(Jet2::constant(0.0), |acc, m| acc + g[n][m] * v[m]))
        .collect();
    let form = AntisymForm::one_form(lowered);
    let nabla = conn.covariant_derivative_form(&form)?;
    let mut worst: f64 = 0.0;
    for m in 0..N {
        for n in 0..N {
            worst = worst.max((nabla[m].get(&[n]) + nabla[n].get(&[m])).abs());
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpecialKillingFit {
    /// Least-squares constant in `∇_X(dψ) = c X* ∧ ψ`.
    pub c: f64,
    /// Largest deviation `|∇_μ(dψ) − c g(∂_μ,·) ∧ ψ|` after the fit.
    pub residual: f64,
    /// Standard deviation of the per-point fitted constants.
    pub c_std: f64,
    pub per_point: Vec<f64>,
    /// Largest Killing-Yano residual seen before fitting.
    pub killing_residual: f64,
}

/// Fits the special-Killing constant `c` over a set of points.
///
/// Fails with [`Error::NotKilling`] when the Killing-Yano residual at any
/// point exceeds `killing_tol`.
pub fn special_killing_fit<M, F, const N: usize>(
    metric: &M,
    form: &F,
    pts: &[[f64; N]],
    killing_tol: f64,
) -> Result<SpecialKillingFit>
where
    M: MetricField<N>,
    F: FormField<N>,
{
    if pts.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: pts.len(),
        });
    }
    let mut samples: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(pts.len());
    let mut ky_worst: f64 = 0.0;
    for x in pts {
        let conn = Connection::at(metric, x)?;
        let psi: AntisymForm<Jet2<N>> = form.eval(&seed(x));
        let ky = killing_yano_residual_of(&conn, &psi)?;
        ky_worst = ky_worst.max(ky);
        if ky > killing_tol {
            return Err(Error::NotKilling {
                residual: ky,
                tolerance: killing_tol,
            });
        }
        let dpsi = crate::forms::exterior_derivative::<_, N>(&psi)?;
        let nabla_d = conn.covariant_derivative_form(&dpsi)?;
        let psi_v = psi.values();
        let mut lhs = Vec::new();
        let mut rhs = Vec::new();
        for mu in 0..N {
            let xstar = AntisymForm::one_form(conn.metric.g[mu].to_vec());
            let r = xstar.wedge(&psi_v)?;
            lhs.extend_from_slice(nabla_d[mu].components());
            rhs.extend_from_slice(r.components());
        }
        samples.push((lhs, rhs));
    }
    let fit = |s: &[(Vec<f64>, Vec<f64>)]| {
        let (num, den) = s.iter().fold((0.0, 0.0), |(n, d), (l, r)| {
            (
                n + l.iter().zip(r).map(|(a, b)| a * b).sum::<f64>(),
                d + r.iter().map(|b| b * b).sum::<f64>(),
            )
        });
        num / den
    };
    let c = fit(&samples);
    let per_point: Vec<f64> = samples.iter().map(|s| fit(std::slice::from_ref(s))).collect();
    let mean = per_point.iter().sum::<f64>() / per_point.len() as f64;
    let var = per_point.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / per_point.len() as f64;
    let residual = samples
        .iter()
        .flat_map(|(l, r)| l.iter().zip(r).map(move |(a, b)| (a - c * b).abs()))
        .fold(0.0, f64::max);
    Ok(SpecialKillingFit {
        c,
        residual,
        c_std: var.sqrt(),
        per_point,
        killing_residual: ky_worst,
    })
}

/// Generic determinant by elimination with partial pivoting.
fn det<T: Scalar>(mut m: Vec<Vec<T>>) -> T {
    let n = m.len();
    let mut acc = T::one();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| m[r][col].value().abs().total_cmp(&m[s][col].value().abs()))
            .expect("non-empty range");
        if m[pivot][col].value() == 0.0 {
            return T::zero();
        }
        if pivot != col {
            m.swap(pivot, col);
            acc = -acc;
        }
        let p = m[col][col];
        acc *= p;
        let r = p.recip();
        for row in col + 1..n {
            let f = m[row][col] * r;
            for k in col..n {
                let v = m[col][k];
                m[row][k] -= f * v;
            }
        }
    }
    acc
}

/// Stäckel-Killing tensor from two Killing-Yano forms of equal degree `k`:
/// `K_ij = ψ_{i a…} σ_j^{a…} + σ_{i a…} ψ_j^{a…}` with full index sums over
/// the `k−1` contracted slots.
pub fn ky_to_sk<T: Scalar, const N: usize>(
    psi: &AntisymForm<T>,
    sigma: &AntisymForm<T>,
    g_inv: &[[T; N]; N],
) -> Result<[[T; N]; N]> {
    if psi.degree() != sigma.degree() {
        return Err(Error::DegreeMismatch {
            expected: psi.degree(),
            found: sigma.degree(),
        });
    }
    if psi.dim() != N || sigma.dim() != N {
        return Err(Error::DimensionMismatch {
            left: psi.dim(),
            right: N,
        });
    }
    let k = psi.degree();
    if k == 0 {
        return Err(Error::DegreeMismatch {
            expected: 1,
            found: 0,
        });
    }
    let tuples = sorted_tuples(N, k - 1);
    let mult: f64 = (1..k).map(|i| i as f64).product();
    // contraction of sorted tuples A, B: (k−1)! det(g^{A B})
    let minors: Vec<Vec<T>> = tuples
        .iter()
        .map(|a| {
            tuples
                .iter()
                .map(|b| {
                    let sub: Vec<Vec<T>> = a.iter().map(|&i| b.iter().map(|&j| g_inv[i][j]).collect()).collect();
                    det(sub).scale(mult)
                })
                .collect()
        })
        .collect();
    let mut idx = vec![0usize; k];
    let rows = |f: &AntisymForm<T>, i: usize, idx: &mut Vec<usize>| -> Vec<T> {
        tuples
            .iter()
            .map(|a| {
                idx[0] = i;
                idx[1..].copy_from_slice(a);
                f.get(idx)
            })
            .collect()
    };
    let psi_rows: Vec<Vec<T>> = (0..N).map(|i| rows(psi, i, &mut idx)).collect();
    let sig_rows: Vec<Vec<T>> = (0..N).map(|i| rows(sigma, i, &mut idx)).collect();
    let mut out = [[T::zero(); N]; N];
    for i in 0..N {
        for j in i..N {
            let mut acc = T::zero();
            for (a, ma) in minors.iter().enumerate() {
                for (b, m) in ma.iter().enumerate() {
                    acc += (psi_rows[i][a] * sig_rows[j][b] + sig_rows[i][a] * psi_rows[j][b]) * *m;
                }
            }
            out[i][j] = acc;
            out[j][i] = acc;
        }
    }
    Ok(out)
}

/// [`ky_to_sk`] as a tensor field, for Stäckel-Killing checks.
pub struct KyToSkField<'a, M, F, G> {
    pub metric: &'a M,
    pub psi: &'a F,
    pub sigma: &'a G,
}

impl<'a, M, F, G, const N: usize> SymmetricField<N> for KyToSkField<'a, M, F, G>
where
    M: MetricField<N>,
    F: FormField<N>,
    G: FormField<N>,
{
    fn eval<T: Scalar>(&self, x: &[T; N]) -> Result<[[T; N]; N]> {
        let g = self.metric.components(x);
        let g_inv = invert(&g).ok_or(Error::SingularMetric { rcond: 0.0 })?;
        ky_to_sk(&self.psi.eval(x), &self.sigma.eval(x), &g_inv)
    }
}

/// The metric itself as a symmetric field.
pub struct MetricAsTensor<'a, M>(pub &'a M);

impl<'a, M: MetricField<N>, const N: usize> SymmetricField<N> for MetricAsTensor<'a, M> {
    fn eval<T: Scalar>(&self, x: &[T; N]) -> Result<[[T; N]; N]> {
        Ok(self.0.components(x))
    }
}

/// `max |∇_(ρ K_μν)|`, zero for Stäckel-Killing tensors.
pub fn stackel_killing_residual<M, K, const N: usize>(metric: &M, k: &K, x: &[f64; N]) -> Result<f64>
where
    M: MetricField<N>,
    K: SymmetricField<N>,
{
    let conn = Connection::at(metric, x)?;
    let kj: [[crate::jet::Jet1<N>; N]; N] = k.eval(&seed(x))?;
    let nk = conn.covariant_derivative_symmetric(&kj);
    let mut worst: f64 = 0.0;
    for r in 0..N {
        for m in 0..N {
            for n in 0..N {
                let s = (nk[r][m][n] + nk[m][n][r] + nk[n][r][m]) / 3.0;
                worst = worst.max(s.abs());
            }
        }
    }
    Ok(worst)
}

/// `max |∇_ρ g_μν|`, zero for the Levi-Civita connection.
pub fn metric_compatibility_residual<M: MetricField<N>, const N: usize>(metric: &M, x: &[f64; N]) -> Result<f64> {
    let conn = Connection::at(metric, x)?;
    let g: [[crate::jet::Jet1<N>; N]; N] = metric.components(&seed(x));
    let ng = conn.covariant_derivative_symmetric(&g);
    Ok(ng.iter().flatten().flatten().fold(0.0, |m: f64, v| m.max(v.abs())))
}
