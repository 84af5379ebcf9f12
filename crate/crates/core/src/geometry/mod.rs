//! Differential geometry of parameterised immersions ψ: Ω ⊂ Rⁿ → R^{n+m+1}.
//!
//! Everything here is pointwise. Grids, sections and the discrete stability
//! operator live in [`grid`].

pub mod ad;
pub mod charts;
pub mod fd;
pub mod grid;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Value, first and second partial derivatives of a chart at a point.
/// `second[i * n + j]` holds ψ_{x^i x^j}.
#[derive(Debug, Clone)]
pub struct Jet {
    pub value: DVector<f64>,
    pub first: Vec<DVector<f64>>,
    pub second: Vec<DVector<f64>>,
}

impl Jet {
    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn d2(&self, i: usize, j: usize) -> &DVector<f64> {
        &self.second[i * self.first.len() + j]
    }
}

/// A smooth map from parameter space into Euclidean space.
pub trait Chart: Send + Sync {
    fn dim(&self) -> usize;
    fn ambient_dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> DVector<f64>;

    /// Closed-form jet, if the chart has one.
    fn jet(&self, _x: &[f64]) -> Option<Jet> {
        None
    }

    /// Smooth seed vectors for the normal frame at `x`. When absent the
    /// ambient standard basis is used.
    fn normal_seeds(&self, _x: &[f64]) -> Option<Vec<DVector<f64>>> {
        None
    }
}

/// A chart given by a closure, with optional closed-form jet.
pub struct FnChart<F, J = fn(&[f64]) -> Option<Jet>>
where
    F: Fn(&[f64]) -> DVector<f64> + Send + Sync,
{
    pub n: usize,
    pub ambient: usize,
    pub f: F,
    pub jet: Option<J>,
}

impl<F> FnChart<F>
where
    F: Fn(&[f64]) -> DVector<f64> + Send + Sync,
{
    pub fn new(n: usize, ambient: usize, f: F) -> Self {
        FnChart { n, ambient, f, jet: None }
    }
}

impl<F, J> Chart for FnChart<F, J>
where
    F: Fn(&[f64]) -> DVector<f64> + Send + Sync,
    J: Fn(&[f64]) -> Option<Jet> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }
    fn ambient_dim(&self) -> usize {
        self.ambient
    }
    fn eval(&self, x: &[f64]) -> DVector<f64> {
        (self.f)(x)
    }
    fn jet(&self, x: &[f64]) -> Option<Jet> {
        self.jet.as_ref().and_then(|j| j(x))
    }
}

/// Axis-aligned parameter box.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ParamBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        ParamBox { lower, upper }
    }

    pub fn cube(n: usize, lo: f64, hi: f64) -> Self {
        ParamBox { lower: vec![lo; n], upper: vec![hi; n] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn scale(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).fold(0.0, f64::max)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let tol = 1e-9 * self.scale().max(1.0);
        x.len() == self.dim()
            && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (a, b))| *v >= a - tol && *v <= b + tol)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| 0.5 * (a + b)).collect()
    }
}

/// How derivatives of a chart are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JetMode {
    Analytic,
    FiniteDifference { step: f64, richardson: usize },
}

/// Configured tolerances for chart quality and frame construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartTolerances {
    /// Smallest admissible singular value of Dψ.
    pub rank_tol: f64,
    /// Bound λ₀ on the eigenvalues of g: λ₀⁻¹ ≤ eig(g) ≤ λ₀.
    pub metric_bound: f64,
    /// Seeds whose normal residual falls below this are skipped.
    pub seed_threshold: f64,
    /// Step for differentiating the normal frame, relative to the domain scale.
    pub frame_step: f64,
}

impl Default for ChartTolerances {
    fn default() -> Self {
        ChartTolerances { rank_tol: 1e-8, metric_bound: 1e8, seed_threshold: 1e-3, frame_step: 1e-4 }
    }
}

/// A chart restricted to a parameter box, with a jet policy.
#[derive(Clone)]
pub struct ImmersionPatch {
    pub chart: Arc<dyn Chart>,
    pub domain: ParamBox,
    pub jet_mode: JetMode,
    pub tol: ChartTolerances,
    /// Fixed seed basis for completing the tangent space.
    pub seed_basis: Vec<DVector<f64>>,
}

impl std::fmt::Debug for ImmersionPatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ImmersionPatch")
            .field("n", &self.n())
            .field("ambient", &self.ambient_dim())
            .field("domain", &self.domain)
            .field("jet_mode", &self.jet_mode)
            .finish()
    }
}

/// Metric bundle at a point.
#[derive(Debug, Clone)]
pub struct MetricData {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub sqrt_det_g: f64,
    /// Γ^k_{ij} stored at `(k * n + i) * n + j`.
    pub christoffel: Vec<f64>,
}

impl MetricData {
    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.n();
        self.christoffel[(k * n + i) * n + j]
    }

    /// g^{ij} Γ^k_{ij}.
    pub fn gamma_trace(&self, k: usize) -> f64 {
        let n = self.n();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.g_inv[(i, j)] * self.gamma(k, i, j);
            }
        }
        s
    }
}

/// Orthonormal normal frame and its connection B^α_{βi} = (n_β)_{x^i}·n_α.
#[derive(Debug, Clone)]
pub struct NormalFrame {
    pub normals: Vec<DVector<f64>>,
    /// B^α_{βi} stored at `(i * k + α) * k + β`.
    pub connection: Vec<f64>,
}

impl NormalFrame {
    pub fn codim(&self) -> usize {
        self.normals.len()
    }

    pub fn b(&self, alpha: usize, beta: usize, i: usize) -> f64 {
        let k = self.codim();
        self.connection[(i * k + alpha) * k + beta]
    }

    /// Ambient vector Σ u^α n_α.
    pub fn compose(&self, u: &[f64]) -> DVector<f64> {
        let mut v = DVector::zeros(self.normals[0].len());
        for (ua, na) in u.iter().zip(&self.normals) {
            v.axpy(*ua, na, 1.0);
        }
        v
    }

    /// Coefficients V·n_α.
    pub fn coefficients(&self, v: &DVector<f64>) -> Vec<f64> {
        self.normals.iter().map(|na| na.dot(v)).collect()
    }

    /// Π V = Σ (V·n_α) n_α.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        self.compose(&self.coefficients(v))
    }
}

/// Second fundamental form A^α_{ij} = ψ_{ij}·n_α and derived quantities.
#[derive(Debug, Clone)]
pub struct SecondFundamentalForm {
    pub n: usize,
    pub k: usize,
    /// A^α_{ij} stored at `(α * n + i) * n + j`.
    pub a: Vec<f64>,
    pub norm_sq: f64,
    /// Coefficients of H = g^{ij} A^α_{ij} n_α.
    pub h_coeffs: Vec<f64>,
    pub mean_curvature: DVector<f64>,
}

impl SecondFundamentalForm {
    pub fn get(&self, alpha: usize, i: usize, j: usize) -> f64 {
        self.a[(alpha * self.n + i) * self.n + j]
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq.max(0.0).sqrt()
    }

    /// Matrix of Simons' operator, S^α_β = g^{kj} g^{il} A^β_{kl} A^α_{ij}.
    pub fn simons_matrix(&self, metric: &MetricData) -> DMatrix<f64> {
        let (n, k) = (self.n, self.k);
        // raise both indices once: Â^α_{kl} = g^{ki} A^α_{ij} g^{jl}
        let gi = &metric.g_inv;
        let mut raised = vec![0.0; k * n * n];
        for al in 0..k {
            let am = DMatrix::from_fn(n, n, |i, j| self.get(al, i, j));
            let r = gi * am * gi;
            for i in 0..n {
                for j in 0..n {
                    raised[(al * n + i) * n + j] = r[(i, j)];
                }
            }
        }
        DMatrix::from_fn(k, k, |al, be| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += raised[(al * n + i) * n + j] * self.get(be, i, j);
                }
            }
            s
        })
    }
}

/// Everything computed at one point of a patch.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub x: Vec<f64>,
    pub jet: Jet,
    pub metric: MetricData,
    pub frame: NormalFrame,
    pub sff: SecondFundamentalForm,
}

impl ImmersionPatch {
    /// Patch with analytic jets when the chart provides them, otherwise
    /// finite differences with step 1e-4·scale and one Richardson level.
    pub fn new(chart: Arc<dyn Chart>, domain: ParamBox) -> Self {
        assert_eq!(chart.dim(), domain.dim(), "domain dimension must match chart");
        let jet_mode = if chart.jet(&domain.center()).is_some() {
            JetMode::Analytic
        } else {
            JetMode::FiniteDifference { step: 1e-4 * domain.scale().max(1e-3), richardson: 1 }
        };
        let big_n = chart.ambient_dim();
        let mut p = ImmersionPatch {
            chart,
            domain,
            jet_mode,
            tol: ChartTolerances::default(),
            seed_basis: (0..big_n).map(|a| unit(big_n, a)).collect(),
        };
        p.seed_basis = p.reference_seed_order();
        p
    }

    /// Standard basis reordered greedily by normal residual at the domain
    /// center, so that the seeds used stay far from the tangent space across
    /// the patch.
    fn reference_seed_order(&self) -> Vec<DVector<f64>> {
        let big_n = self.ambient_dim();
        let std_basis: Vec<DVector<f64>> = (0..big_n).map(|a| unit(big_n, a)).collect();
        let c = self.domain.center();
        let Ok(tangents) = self.tangents_unchecked(&c) else { return std_basis };
        let mut basis: Vec<DVector<f64>> = Vec::new();
        for t in &tangents {
            let mut v = t.clone();
            if crate::linalg::orthogonalize(&mut v, &basis) <= 1e-12 {
                return std_basis;
            }
            basis.push(v);
        }
        let mut order = Vec::new();
        let mut left: Vec<usize> = (0..big_n).collect();
        while !left.is_empty() {
            let (pos, _) = left
                .iter()
                .enumerate()
                .map(|(p, &a)| {
                    let mut v = std_basis[a].clone();
                    (p, crate::linalg::orthogonalize(&mut v, &basis))
                })
                .fold((0, -1.0), |acc, (p, r)| if r > acc.1 + 1e-12 { (p, r) } else { acc });
            let a = left.remove(pos);
            let mut v = std_basis[a].clone();
            if crate::linalg::orthogonalize(&mut v, &basis) > 1e-12 {
                basis.push(v);
            }
            order.push(a);
        }
        order.into_iter().map(|a| std_basis[a].clone()).collect()
    }

    pub fn with_jet_mode(mut self, mode: JetMode) -> Self {
        self.jet_mode = mode;
        self
    }

    pub fn with_tolerances(mut self, tol: ChartTolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn n(&self) -> usize {
        self.chart.dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.chart.ambient_dim()
    }

    /// Codimension m + 1.
    pub fn codim(&self) -> usize {
        self.ambient_dim() - self.n()
    }

    pub fn eval(&self, x: &[f64]) -> DVector<f64> {
        self.chart.eval(x)
    }

    fn check_domain(&self, x: &[f64]) -> Result<()> {
        if self.domain.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { point: x.to_vec() })
        }
    }

    /// Jet according to the patch's jet mode; no domain check.
    pub fn jet_unchecked(&self, x: &[f64]) -> Result<Jet> {
        match self.jet_mode {
            JetMode::Analytic => self.chart.jet(x).ok_or(Error::JetUnavailable),
            JetMode::FiniteDifference { step, richardson } => {
                let f = |y: &[f64]| self.chart.eval(y).as_slice().to_vec();
                let (v, d1, d2) = fd::jet(&f, x, step, richardson, true);
                Ok(Jet {
                    value: DVector::from_vec(v),
                    first: d1.into_iter().map(DVector::from_vec).collect(),
                    second: d2.into_iter().map(DVector::from_vec).collect(),
                })
            }
        }
    }

    pub fn jet(&self, x: &[f64]) -> Result<Jet> {
        self.check_domain(x)?;
        self.jet_unchecked(x)
    }

    /// First derivatives only, used when differentiating the frame.
    fn tangents_unchecked(&self, x: &[f64]) -> Result<Vec<DVector<f64>>> {
        match self.jet_mode {
            JetMode::Analytic => Ok(self.chart.jet(x).ok_or(Error::JetUnavailable)?.first),
            JetMode::FiniteDifference { step, richardson } => {
                let f = |y: &[f64]| self.chart.eval(y).as_slice().to_vec();
                let (_, d1, _) = fd::jet(&f, x, step, richardson, false);
                Ok(d1.into_iter().map(DVector::from_vec).collect())
            }
        }
    }

    fn seeds(&self, x: &[f64]) -> Vec<DVector<f64>> {
        let mut seeds = self.chart.normal_seeds(x).unwrap_or_default();
        seeds.extend(self.seed_basis.iter().cloned());
        seeds
    }

    /// Orthonormal normals at `x` from given tangent vectors.
    pub fn normals_from_tangents(&self, x: &[f64], tangents: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        let k = self.codim();
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(self.ambient_dim());
        for t in tangents {
            let mut v = t.clone();
            let r = crate::linalg::orthogonalize(&mut v, &basis);
            if r <= self.tol.rank_tol * t.norm().max(1.0) {
                return Err(Error::RankDeficient { sigma_min: r });
            }
            basis.push(v);
        }
        let mut normals = Vec::with_capacity(k);
        for s in self.seeds(x) {
            if normals.len() == k {
                break;
            }
            let mut v = s.clone();
            let sn = s.norm();
            let r = crate::linalg::orthogonalize(&mut v, &basis);
            if r > self.tol.seed_threshold * sn {
                basis.push(v.clone());
                normals.push(v);
            }
        }
        if normals.len() < k {
            return Err(Error::FrameIncomplete { found: normals.len(), needed: k });
        }
        Ok(normals)
    }

    // NaN-filled on failure so that callers can detect it after differencing
    fn frame_flat(&self, y: &[f64]) -> Vec<f64> {
        match self.tangents_unchecked(y).and_then(|t| self.normals_from_tangents(y, &t)) {
            Ok(ns) => ns.iter().flat_map(|v| v.iter().copied()).collect(),
            Err(_) => vec![f64::NAN; self.codim() * self.ambient_dim()],
        }
    }

    fn frame_step(&self) -> f64 {
        self.tol.frame_step * self.domain.scale().max(1e-3)
    }

    /// Metric bundle from a jet.
    pub fn metric_from_jet(&self, jet: &Jet) -> Result<MetricData> {
        let n = jet.dim();
        let g = DMatrix::from_fn(n, n, |i, j| jet.first[i].dot(&jet.first[j]));
        let eig = g.clone().symmetric_eigen();
        let lmin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let lmax = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sigma_min = lmin.max(0.0).sqrt();
        if sigma_min < self.tol.rank_tol || lmin < 1.0 / self.tol.metric_bound || lmax > self.tol.metric_bound {
            return Err(Error::RankDeficient { sigma_min });
        }
        let g_inv = g.clone().try_inverse().ok_or(Error::RankDeficient { sigma_min })?;
        let sqrt_det_g = g.determinant().max(0.0).sqrt();
        let mut christoffel = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                let psi_ij = jet.d2(i, j);
                let low: Vec<f64> = (0..n).map(|l| jet.first[l].dot(psi_ij)).collect();
                for k in 0..n {
                    christoffel[(k * n + i) * n + j] = (0..n).map(|l| g_inv[(k, l)] * low[l]).sum();
                }
            }
        }
        Ok(MetricData { g, g_inv, sqrt_det_g, christoffel })
    }

    /// Metric and normal frame with connection.
    pub fn geometry_at(&self, x: &[f64]) -> Result<(MetricData, NormalFrame)> {
        let jet = self.jet(x)?;
        let metric = self.metric_from_jet(&jet)?;
        let frame = self.frame_with_connection(x, &jet)?;
        Ok((metric, frame))
    }

    fn frame_with_connection(&self, x: &[f64], jet: &Jet) -> Result<NormalFrame> {
        let normals = self.normals_from_tangents(x, &jet.first)?;
        let k = normals.len();
        let n = self.n();
        let big_n = self.ambient_dim();
        let (_, d1, _) = fd::jet(&|y: &[f64]| self.frame_flat(y), x, self.frame_step(), 1, false);
        let mut connection = vec![0.0; n * k * k];
        for i in 0..n {
            for al in 0..k {
                for be in 0..k {
                    let dnb = &d1[i][be * big_n..(be + 1) * big_n];
                    connection[(i * k + al) * k + be] = dnb.iter().zip(normals[al].iter()).map(|(a, b)| a * b).sum();
                }
            }
        }
        if connection.iter().any(|v| !v.is_finite()) {
            return Err(Error::RankDeficient { sigma_min: 0.0 });
        }
        Ok(NormalFrame { normals, connection })
    }

    /// First and second parameter derivatives of the normal frame, as
    /// `(d1[i][α], d2[i*n+j][α])`.
    pub fn frame_derivatives(&self, x: &[f64]) -> (Vec<Vec<DVector<f64>>>, Vec<Vec<DVector<f64>>>) {
        let k = self.codim();
        let big_n = self.ambient_dim();
        let h = 10.0 * self.frame_step();
        let (_, d1, d2) = fd::jet(&|y: &[f64]| self.frame_flat(y), x, h, 1, true);
        let split = |v: Vec<f64>| -> Vec<DVector<f64>> {
            (0..k).map(|a| DVector::from_column_slice(&v[a * big_n..(a + 1) * big_n])).collect()
        };
        (d1.into_iter().map(split).collect(), d2.into_iter().map(split).collect())
    }

    /// Second fundamental form in a given frame.
    pub fn sff_from(&self, jet: &Jet, metric: &MetricData, frame: &NormalFrame) -> SecondFundamentalForm {
        let n = jet.dim();
        let k = frame.codim();
        let mut a = vec![0.0; k * n * n];
        for al in 0..k {
            for i in 0..n {
                for j in i..n {
                    let v = jet.d2(i, j).dot(&frame.normals[al]);
                    a[(al * n + i) * n + j] = v;
                    a[(al * n + j) * n + i] = v;
                }
            }
        }
        let gi = &metric.g_inv;
        let mut norm_sq = 0.0;
        let mut h_coeffs = vec![0.0; k];
        for al in 0..k {
            let am = DMatrix::from_fn(n, n, |i, j| a[(al * n + i) * n + j]);
            let r = gi * &am * gi;
            norm_sq += r.component_mul(&am).sum();
            h_coeffs[al] = gi.component_mul(&am).sum();
        }
        let mean_curvature = frame.compose(&h_coeffs);
        SecondFundamentalForm { n, k, a, norm_sq, h_coeffs, mean_curvature }
    }

    pub fn second_fundamental_form_at(&self, x: &[f64], frame: &NormalFrame) -> Result<SecondFundamentalForm> {
        let jet = self.jet(x)?;
        let metric = self.metric_from_jet(&jet)?;
        Ok(self.sff_from(&jet, &metric, frame))
    }

    /// Full pointwise bundle.
    pub fn point_geometry(&self, x: &[f64]) -> Result<PointGeometry> {
        let jet = self.jet(x)?;
        let metric = self.metric_from_jet(&jet)?;
        let frame = self.frame_with_connection(x, &jet)?;
        let sff = self.sff_from(&jet, &metric, &frame);
        Ok(PointGeometry { x: x.to_vec(), jet, metric, frame, sff })
    }

    /// Pointwise bundle without the connection (cheaper).
    pub fn point_geometry_static(&self, x: &[f64]) -> Result<PointGeometry> {
        let jet = self.jet(x)?;
        let metric = self.metric_from_jet(&jet)?;
        let normals = self.normals_from_tangents(x, &jet.first)?;
        let k = normals.len();
        let frame = NormalFrame { normals, connection: vec![0.0; self.n() * k * k] };
        let sff = self.sff_from(&jet, &metric, &frame);
        Ok(PointGeometry { x: x.to_vec(), jet, metric, frame, sff })
    }

    /// H(x) = (g^{ij} ψ_{ij})^⊥, frame independent.
    pub fn mean_curvature_at(&self, x: &[f64]) -> Result<DVector<f64>> {
        let jet = self.jet(x)?;
        let metric = self.metric_from_jet(&jet)?;
        Ok(mean_curvature_from_jet(&jet, &metric))
    }

    /// H as the Laplace–Beltrami operator of the coordinate functions,
    /// (1/√g) ∂_i(√g g^{ij} ψ_j), differentiated numerically with step `h`.
    pub fn mean_curvature_divergence_form(&self, x: &[f64], h: f64) -> Result<DVector<f64>> {
        self.check_domain(x)?;
        let n = self.n();
        let flux = |y: &[f64], i: usize| -> Result<DVector<f64>> {
            let jet = self.jet_unchecked(y)?;
            let m = self.metric_from_jet(&jet)?;
            let mut v = DVector::zeros(self.ambient_dim());
            for j in 0..n {
                v.axpy(m.sqrt_det_g * m.g_inv[(i, j)], &jet.first[j], 1.0);
            }
            Ok(v)
        };
        let mut div = DVector::zeros(self.ambient_dim());
        for i in 0..n {
            let d = |s: f64| -> Result<DVector<f64>> {
                let mut yp = x.to_vec();
                yp[i] += s;
                let mut ym = x.to_vec();
                ym[i] -= s;
                Ok((flux(&yp, i)? - flux(&ym, i)?) / (2.0 * s))
            };
            let coarse = d(h)?;
            let fine = d(0.5 * h)?;
            div += (4.0 * fine - coarse) / 3.0;
        }
        let m = self.metric_from_jet(&self.jet(x)?)?;
        Ok(div / m.sqrt_det_g)
    }

    /// Simons' operator applied to normal coefficients u^α; returns
    /// coefficients of Ã(U).
    pub fn apply_simons(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        let pg = self.point_geometry_static(x)?;
        if u.len() != pg.frame.codim() {
            return Err(Error::InvalidInput(format!("expected {} normal components", pg.frame.codim())));
        }
        let s = pg.sff.simons_matrix(&pg.metric);
        Ok((0..u.len()).map(|al| (0..u.len()).map(|be| s[(al, be)] * u[be]).sum()).collect())
    }
}

fn unit(n: usize, a: usize) -> DVector<f64> {
    DVector::from_fn(n, |i, _| if i == a { 1.0 } else { 0.0 })
}

/// Mean curvature vector from a jet: the normal part of g^{ij}ψ_{ij}.
pub fn mean_curvature_from_jet(jet: &Jet, metric: &MetricData) -> DVector<f64> {
    let n = jet.dim();
    let mut w = DVector::zeros(jet.value.len());
    for i in 0..n {
        for j in 0..n {
            w.axpy(metric.g_inv[(i, j)], jet.d2(i, j), 1.0);
        }
    }
    tangent_reject(&w, &jet.first, &metric.g_inv)
}

/// V − Σ ψ_k g^{kl}(ψ_l·V).
pub fn tangent_reject(v: &DVector<f64>, tangents: &[DVector<f64>], g_inv: &DMatrix<f64>) -> DVector<f64> {
    let n = tangents.len();
    let dots: Vec<f64> = tangents.iter().map(|t| t.dot(v)).collect();
    let mut out = v.clone();
    for k in 0..n {
        let c: f64 = (0..n).map(|l| g_inv[(k, l)] * dots[l]).sum();
        out.axpy(-c, &tangents[k], 1.0);
    }
    out
}

#[cfg(test)]
mod tests;
