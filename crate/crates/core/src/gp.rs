//! Ordinary-kriging Gaussian process with an isotropic squared-exponential
//! correlation.
//!
//! Inputs are mapped into the unit cube of the search box before distances
//! are taken; outputs are used as-is and centred by the generalized
//! least-squares mean `μ̂`. The single length-scale is chosen by minimizing
//! the concentrated negative log-likelihood
//!
//! ```text
//! L(l) = n·ln(σ̂²(l) + ε) + ln det(R(l) + λI)
//! ```
//!
//! over a log-spaced grid followed by golden-section refinement.

use crate::doe::SearchBox;
use crate::error::{config_err, contract_err, Error, Result};
use crate::linalg::{Cholesky, LANES};
use crate::scalar::{dot, flush_threshold, squared_distance, Scalar};

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-2;
/// Log-correlations below this are stored as exact zeros, so the solves
/// never produce denormals.
fn log_correlation_floor<T: Scalar>() -> T {
    flush_threshold::<T>().ln()
}

#[inline(always)]
fn correlation_from_log<T: Scalar>(log_r: T, floor: T) -> T {
    if log_r < floor {
        T::zero()
    } else {
        log_r.exp()
    }
}

/// Evaluated points and their objective values.
#[derive(Debug, Clone, PartialEq)]
pub struct Archive<T> {
    rows: Vec<Vec<T>>,
    values: Vec<T>,
    incumbent: usize,
}

impl<T: Scalar> Archive<T> {
    pub fn new(rows: Vec<Vec<T>>, values: Vec<T>) -> Result<Self> {
        if rows.is_empty() {
            return Err(contract_err!("archive needs at least one point"));
        }
        if rows.len() != values.len() {
            return Err(contract_err!("{} rows but {} values", rows.len(), values.len()));
        }
        let dim = rows[0].len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(contract_err!("archive rows must share a nonzero dimension"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite objective value {v} in archive")));
        }
        let incumbent = argmin(&values);
        Ok(Self {
            rows,
            values,
            incumbent,
        })
    }

    pub fn push(&mut self, x: Vec<T>, y: T) -> Result<()> {
        if x.len() != self.dim() {
            return Err(contract_err!("point of dimension {} pushed into {}-d archive", x.len(), self.dim()));
        }
        if !y.is_finite() {
            return Err(Error::Numeric(format!("non-finite objective value {y}")));
        }
        self.rows.push(x);
        self.values.push(y);
        if y < self.values[self.incumbent] {
            self.incumbent = self.values.len() - 1;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Row of the lowest value; ties go to the earliest row.
    pub fn incumbent_index(&self) -> usize {
        self.incumbent
    }

    pub fn best(&self) -> (&[T], T) {
        (&self.rows[self.incumbent], self.values[self.incumbent])
    }
}

/// Index of the minimum, first occurrence on ties.
pub(crate) fn argmin<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Closed interval of admissible length-scales (unit-cube units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthScaleBounds<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Scalar> Default for LengthScaleBounds<T> {
    fn default() -> Self {
        Self {
            lower: T::lit(0.01),
            upper: T::lit(100.0),
        }
    }
}

impl<T: Scalar> LengthScaleBounds<T> {
    pub fn new(lower: T, upper: T) -> Result<Self> {
        let b = Self { lower, upper };
        b.validate()?;
        Ok(b)
    }

    fn validate(&self) -> Result<()> {
        if !(self.lower > T::zero() && self.lower <= self.upper && self.upper.is_finite()) {
            return Err(config_err!(
                "length-scale bounds [{}, {}] must satisfy 0 < lower <= upper < inf",
                self.lower,
                self.upper
            ));
        }
        Ok(())
    }
}

/// Settings of the one-dimensional likelihood search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions<T> {
    pub bounds: LengthScaleBounds<T>,
    /// Number of log-spaced grid points scanned before refinement.
    pub grid_points: usize,
    /// Relative tolerance of the golden-section refinement.
    pub refine_tol: T,
}

impl<T: Scalar> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            bounds: LengthScaleBounds::default(),
            grid_points: 64,
            refine_tol: T::lit(1e-3),
        }
    }
}

/// Predictive mean and variance at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction<T> {
    pub mean: T,
    pub variance: T,
}

impl<T: Scalar> Prediction<T> {
    pub fn sd(&self) -> T {
        self.variance.sqrt()
    }
}

/// `exp(-‖xi − xj‖² / (2 l²))`.
pub fn rbf_corr<T: Scalar>(xi: &[T], xj: &[T], length_scale: T) -> Result<T> {
    if !(length_scale > T::zero()) {
        return Err(config_err!("length-scale must be positive, got {length_scale}"));
    }
    if xi.len() != xj.len() {
        return Err(contract_err!("vectors of length {} and {}", xi.len(), xj.len()));
    }
    let d2 = squared_distance(xi, xj);
    Ok((-d2 / (T::lit(2.0) * length_scale * length_scale)).exp())
}

/// Unit-cube design plus pairwise squared distances; shared by every
/// likelihood evaluation of one fit.
struct Design<T> {
    n: usize,
    dim: usize,
    unit: Vec<T>,
    sqdist: Vec<T>,
    values: Vec<T>,
    constant: bool,
}

impl<T: Scalar> Design<T> {
    fn new(archive: &Archive<T>, bounds: &SearchBox<T>) -> Result<Self> {
        let n = archive.len();
        let dim = archive.dim();
        if bounds.dim() != dim {
            return Err(contract_err!("{dim}-d archive with {}-d box", bounds.dim()));
        }
        if let Some(i) = archive.rows().iter().position(|r| !bounds.contains(r)) {
            return Err(contract_err!("archive row {i} lies outside the search box"));
        }
        let mut unit = Vec::with_capacity(n * dim);
        for row in archive.rows() {
            unit.extend(bounds.to_unit(row));
        }
        let mut sqdist = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..i {
                let d = squared_distance(&unit[i * dim..(i + 1) * dim], &unit[j * dim..(j + 1) * dim]);
                sqdist[i * n + j] = d;
                sqdist[j * n + i] = d;
            }
        }
        let values = archive.values().to_vec();
        let constant = values.iter().all(|v| *v == values[0]);
        Ok(Self {
            n,
            dim,
            unit,
            sqdist,
            values,
            constant,
        })
    }

    /// Lower triangle of the correlation matrix at `length_scale`.
    fn correlation(&self, length_scale: T) -> Vec<T> {
        let n = self.n;
        let floor = log_correlation_floor();
        let scale = -T::one() / (T::lit(2.0) * length_scale * length_scale);
        let mut r = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..i {
                r[i * n + j] = correlation_from_log(self.sqdist[i * n + j] * scale, floor);
            }
            r[i * n + i] = T::one();
        }
        r
    }

    fn factor(&self, length_scale: T) -> Result<(Cholesky<T>, T)> {
        let r = self.correlation(length_scale);
        let mut jitter = T::lit(JITTER_START);
        let max = T::lit(JITTER_MAX);
        while jitter <= max {
            if let Some(c) = Cholesky::factor_shifted(&r, self.n, jitter) {
                return Ok((c, jitter));
            }
            jitter *= T::lit(10.0);
        }
        Err(Error::Model(format!(
            "correlation matrix not positive definite at length-scale {length_scale} even with jitter {JITTER_MAX}"
        )))
    }

    /// Profile quantities at one length-scale using forward solves only.
    fn profile(&self, length_scale: T) -> Result<Profile<T>> {
        let (chol, jitter) = self.factor(length_scale)?;
        let n = self.n;
        let mut w = vec![T::one(); n];
        chol.forward_in_place(&mut w);
        let mut z = self.values.clone();
        chol.forward_in_place(&mut z);
        let one_rinv_one = dot(&w, &w);
        let (mu_hat, sigma2_hat) = if self.constant {
            (self.values[0], T::zero())
        } else {
            let mu = dot(&w, &z) / one_rinv_one;
            let ss: T = z.iter().zip(&w).map(|(zi, wi)| (*zi - mu * *wi).powi(2)).sum();
            (mu, ss / T::lit(n as f64))
        };
        let nll = T::lit(n as f64) * (sigma2_hat + variance_floor()).ln() + chol.log_det();
        Ok(Profile {
            chol,
            jitter,
            mu_hat,
            sigma2_hat,
            one_rinv_one,
            nll,
        })
    }
}

struct Profile<T> {
    chol: Cholesky<T>,
    jitter: T,
    mu_hat: T,
    sigma2_hat: T,
    one_rinv_one: T,
    nll: T,
}

fn variance_floor<T: Scalar>() -> T {
    T::lit(1e-300).max(T::min_positive_value())
}

/// Concentrated negative log-likelihood `n·ln(σ̂²+ε) + ln det(R+λI)` at a
/// given length-scale, with the same input scaling and jitter policy as
/// [`fit`].
pub fn concentrated_nll<T: Scalar>(length_scale: T, archive: &Archive<T>, bounds: &SearchBox<T>) -> Result<T> {
    if !(length_scale > T::zero()) {
        return Err(config_err!("length-scale must be positive, got {length_scale}"));
    }
    if archive.len() < 2 {
        return Err(contract_err!("likelihood needs at least two points"));
    }
    Ok(Design::new(archive, bounds)?.profile(length_scale)?.nll)
}

/// Fitted ordinary-kriging model. Immutable; safe to query from many threads.
#[derive(Debug, Clone)]
pub struct GpModel<T> {
    bounds: SearchBox<T>,
    n: usize,
    dim: usize,
    unit: Vec<T>,
    length_scale: T,
    neg_inv_two_l2: T,
    log_floor: T,
    mu_hat: T,
    sigma2_hat: T,
    jitter: T,
    nll: T,
    chol: Cholesky<T>,
    alpha: Vec<T>,
    rinv_one: Vec<T>,
    one_rinv_one: T,
}

/// Fits the model with default search settings and the given bounds.
pub fn fit<T: Scalar>(archive: &Archive<T>, bounds: &SearchBox<T>, l_bounds: LengthScaleBounds<T>) -> Result<GpModel<T>> {
    fit_with(
        archive,
        bounds,
        &FitOptions {
            bounds: l_bounds,
            ..FitOptions::default()
        },
    )
}

pub fn fit_with<T: Scalar>(archive: &Archive<T>, bounds: &SearchBox<T>, opts: &FitOptions<T>) -> Result<GpModel<T>> {
    opts.bounds.validate()?;
    if archive.len() < 2 {
        return Err(contract_err!("fitting needs at least two points, got {}", archive.len()));
    }
    let design = Design::new(archive, bounds)?;
    let length_scale = search_length_scale(&design, opts)?;
    GpModel::assemble(design, bounds.clone(), length_scale)
}

/// Grid scan in `ln l` followed by golden-section refinement inside the
/// bracket formed by the best grid point's neighbours.
fn search_length_scale<T: Scalar>(design: &Design<T>, opts: &FitOptions<T>) -> Result<T> {
    let lo = opts.bounds.lower.ln();
    let hi = opts.bounds.upper.ln();
    let points = opts.grid_points.max(2);
    let objective = |t: T| -> T {
        match design.profile(t.exp()) {
            Ok(p) if p.nll.is_finite() => p.nll,
            _ => T::infinity(),
        }
    };
    if lo == hi {
        return if objective(lo).is_finite() {
            Ok(opts.bounds.lower)
        } else {
            Err(Error::Model("likelihood undefined at the only admissible length-scale".into()))
        };
    }
    let step = (hi - lo) / T::lit((points - 1) as f64);
    let grid: Vec<T> = (0..points)
        .map(|k| if k == points - 1 { hi } else { lo + step * T::lit(k as f64) })
        .collect();
    let scores: Vec<T> = grid.iter().map(|&t| objective(t)).collect();
    let best = argmin(&scores);
    if !scores[best].is_finite() {
        return Err(Error::Model("likelihood undefined on the whole length-scale grid".into()));
    }

    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(points - 1)];
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let tol = opts.refine_tol.ln_1p();
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    let (mut best_t, mut best_f) = (grid[best], scores[best]);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }
    for (t, f) in [(c, fc), (d, fd)] {
        if f < best_f {
            best_t = t;
            best_f = f;
        }
    }
    Ok(best_t.exp().max(opts.bounds.lower).min(opts.bounds.upper))
}

impl<T: Scalar> GpModel<T> {
    fn assemble(design: Design<T>, bounds: SearchBox<T>, length_scale: T) -> Result<Self> {
        let profile = design.profile(length_scale)?;
        let n = design.n;
        let rinv_one = profile.chol.solve(&vec![T::one(); n]);
        let alpha = if design.constant {
            vec![T::zero(); n]
        } else {
            let resid: Vec<T> = design.values.iter().map(|v| *v - profile.mu_hat).collect();
            profile.chol.solve(&resid)
        };
        Ok(Self {
            bounds,
            n,
            dim: design.dim,
            unit: design.unit,
            length_scale,
            neg_inv_two_l2: -T::one() / (T::lit(2.0) * length_scale * length_scale),
            log_floor: log_correlation_floor(),
            mu_hat: profile.mu_hat,
            sigma2_hat: profile.sigma2_hat,
            jitter: profile.jitter,
            nll: profile.nll,
            chol: profile.chol,
            alpha,
            rinv_one,
            one_rinv_one: profile.one_rinv_one,
        })
    }

    /// Fits at a fixed length-scale, skipping the likelihood search.
    pub fn with_length_scale(archive: &Archive<T>, bounds: &SearchBox<T>, length_scale: T) -> Result<Self> {
        if !(length_scale > T::zero()) {
            return Err(config_err!("length-scale must be positive, got {length_scale}"));
        }
        if archive.len() < 2 {
            return Err(contract_err!("fitting needs at least two points, got {}", archive.len()));
        }
        Self::assemble(Design::new(archive, bounds)?, bounds.clone(), length_scale)
    }

    pub fn length_scale(&self) -> T {
        self.length_scale
    }

    pub fn mu_hat(&self) -> T {
        self.mu_hat
    }

    pub fn sigma2_hat(&self) -> T {
        self.sigma2_hat
    }

    pub fn jitter(&self) -> T {
        self.jitter
    }

    /// Concentrated negative log-likelihood at the fitted length-scale.
    pub fn nll(&self) -> T {
        self.nll
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounds(&self) -> &SearchBox<T> {
        &self.bounds
    }

    pub fn cholesky(&self) -> &Cholesky<T> {
        &self.chol
    }

    /// `R⁻¹1` with the jittered correlation matrix.
    pub fn rinv_one(&self) -> &[T] {
        &self.rinv_one
    }

    /// `R⁻¹(f − 1μ̂)`.
    pub fn weights(&self) -> &[T] {
        &self.alpha
    }

    /// Training inputs in unit-cube coordinates, row `i` at `[i*dim, (i+1)*dim)`.
    pub fn unit_rows(&self) -> &[T] {
        &self.unit
    }

    /// Correlation for a squared unit-cube distance. Exact coincidence with a
    /// training input includes the jitter so that the model still
    /// interpolates its data.
    #[inline(always)]
    pub(crate) fn correlation_at(&self, sqdist: T) -> T {
        if sqdist == T::zero() {
            T::one() + self.jitter
        } else {
            correlation_from_log(sqdist * self.neg_inv_two_l2, self.log_floor)
        }
    }

    pub fn predict(&self, x: &[T]) -> Result<Prediction<T>> {
        if x.len() != self.dim {
            return Err(contract_err!("query of dimension {} for a {}-d model", x.len(), self.dim));
        }
        let u = self.bounds.to_unit(x);
        let r: Vec<T> = self
            .unit
            .chunks_exact(self.dim)
            .map(|row| self.correlation_at(squared_distance(&u, row)))
            .collect();
        Ok(self.predict_from_correlations(r))
    }

    /// Mean and variance given the correlation vector `r` between the query
    /// and every training input. `r` is consumed as scratch space.
    pub(crate) fn predict_from_correlations(&self, mut r: Vec<T>) -> Prediction<T> {
        let mean = self.mu_hat + dot(&r, &self.alpha);
        if self.sigma2_hat == T::zero() {
            return Prediction {
                mean,
                variance: T::zero(),
            };
        }
        let u = T::one() - dot(&self.rinv_one, &r);
        self.chol.forward_in_place(&mut r);
        let quad = dot(&r, &r);
        let variance = self.sigma2_hat * (T::one() - quad + u * u / self.one_rinv_one);
        Prediction {
            mean,
            variance: if variance > T::zero() { variance } else { T::zero() },
        }
    }

    /// [`LANES`] predictions at once from interleaved correlations,
    /// `r[t * LANES + k]` pairing training point `t` with query `k`. `r` is
    /// consumed as scratch space.
    #[inline(always)]
    pub(crate) fn predict_lanes(&self, r: &mut [T]) -> [Prediction<T>; LANES] {
        let mut mean = [self.mu_hat; LANES];
        let mut u = [T::one(); LANES];
        for (t, rt) in r.chunks_exact(LANES).enumerate() {
            let rt: &[T; LANES] = rt.try_into().expect("exact chunk");
            let (a, w) = (self.alpha[t], self.rinv_one[t]);
            for k in 0..LANES {
                mean[k] += a * rt[k];
                u[k] -= w * rt[k];
            }
        }
        let mut out = [Prediction {
            mean: T::zero(),
            variance: T::zero(),
        }; LANES];
        if self.sigma2_hat == T::zero() {
            for k in 0..LANES {
                out[k].mean = mean[k];
            }
            return out;
        }
        self.chol.forward_lanes(r);
        let mut quad = [T::zero(); LANES];
        for vt in r.chunks_exact(LANES) {
            let vt: &[T; LANES] = vt.try_into().expect("exact chunk");
            for k in 0..LANES {
                quad[k] += vt[k] * vt[k];
            }
        }
        for k in 0..LANES {
            let variance = self.sigma2_hat * (T::one() - quad[k] + u[k] * u[k] / self.one_rinv_one);
            out[k] = Prediction {
                mean: mean[k],
                variance: if variance > T::zero() { variance } else { T::zero() },
            };
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doe::lhs_sample;
    use crate::rng::RngState;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::Rng;

    /// Eqs. for μ̂, σ̂², ŷ, ŝ² evaluated with an explicit dense inverse.
    struct InverseOracle {
        mu: f64,
        sigma2: f64,
        rinv: DMatrix<f64>,
        f: DVector<f64>,
        unit: Vec<Vec<f64>>,
        l: f64,
        condition: f64,
    }

    impl InverseOracle {
        fn new(m: &GpModel<f64>, archive: &Archive<f64>, b: &SearchBox<f64>) -> Self {
            let n = archive.len();
            let unit: Vec<Vec<f64>> = archive.rows().iter().map(|r| b.to_unit(r)).collect();
            let l = m.length_scale();
            let k = |a: &[f64], c: &[f64]| {
                let d2: f64 = a.iter().zip(c).map(|(x, y)| (x - y).powi(2)).sum();
                (-d2 / (2.0 * l * l)).exp()
            };
            let r = DMatrix::from_fn(n, n, |i, j| k(&unit[i], &unit[j]) + if i == j { m.jitter() } else { 0.0 });
            let sv = r.clone().singular_values();
            let condition = sv.max() / sv.min();
            let rinv = r.try_inverse().unwrap();
            let one = DVector::from_element(n, 1.0);
            let f = DVector::from_column_slice(archive.values());
            let mu = (one.transpose() * &rinv * &f)[0] / (one.transpose() * &rinv * &one)[0];
            let res = &f - &one * mu;
            let sigma2 = (res.transpose() * &rinv * &res)[0] / n as f64;
            Self { mu, sigma2, rinv, f, unit, l, condition }
        }

        fn predict(&self, b: &SearchBox<f64>, x: &[f64]) -> (f64, f64) {
            let u = b.to_unit(x);
            let n = self.unit.len();
            let r = DVector::from_fn(n, |i, _| {
                let d2: f64 = u.iter().zip(&self.unit[i]).map(|(p, q)| (p - q).powi(2)).sum();
                (-d2 / (2.0 * self.l * self.l)).exp()
            });
            let one = DVector::from_element(n, 1.0);
            let res = &self.f - &one * self.mu;
            let mean = self.mu + (r.transpose() * &self.rinv * res)[0];
            let a = (one.transpose() * &self.rinv * &r)[0];
            let c = (one.transpose() * &self.rinv * &one)[0];
            let var = self.sigma2 * (1.0 - (r.transpose() * &self.rinv * &r)[0] + (1.0 - a).powi(2) / c);
            (mean, var.max(0.0))
        }
    }

    fn random_archive(seed: u64, n: usize, dim: usize) -> (Archive<f64>, SearchBox<f64>) {
        let b = SearchBox::uniform(dim, -2.0, 3.0).unwrap();
        let mut g = RngState::new(seed, 0).generator();
        let x: Vec<Vec<f64>> = (0..n).map(|_| b.sample_uniform(&mut g)).collect();
        let y: Vec<f64> = x.iter().map(|r| r.iter().map(|v| v.sin() + 0.1 * v * v).sum::<f64>() + g.random::<f64>()).collect();
        (Archive::new(x, y).unwrap(), b)
    }

    fn smooth_archive(seed: u64, n: usize, dim: usize) -> (Archive<f64>, SearchBox<f64>) {
        let b = SearchBox::uniform(dim, -2.0, 3.0).unwrap();
        let mut g = RngState::new(seed, 0).generator();
        let x: Vec<Vec<f64>> = (0..n).map(|_| b.sample_uniform(&mut g)).collect();
        let y = x
            .iter()
            .map(|r| r.iter().enumerate().map(|(i, v)| (v * (1.0 + 0.3 * i as f64)).sin() + 0.1 * v * v).sum())
            .collect();
        (Archive::new(x, y).unwrap(), b)
    }

    #[test]
    fn rbf_examples() {
        assert_eq!(rbf_corr(&[0.3, -1.0], &[0.3, -1.0], 0.7).unwrap(), 1.0);
        let l = 0.8f64;
        let v = rbf_corr(&[0.0], &[l * 2f64.sqrt()], l).unwrap();
        assert!((v - (-1f64).exp()).abs() < 1e-12);
        let v = rbf_corr(&[0.0, 0.0], &[3.0, 4.0], 5.0).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-12);
        assert!(rbf_corr(&[0.0], &[1.0], 0.0).is_err());
        assert!(rbf_corr(&[0.0], &[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn identity_correlation_gives_sample_moments() {
        let b = SearchBox::uniform(1, 0.0, 1.0).unwrap();
        let a = Archive::<f64>::new(vec![vec![0.0], vec![1.0]], vec![1.0, 3.0]).unwrap();
        let m = GpModel::with_length_scale(&a, &b, 0.01).unwrap();
        assert!((m.mu_hat() - 2.0).abs() < 1e-9);
        assert!((m.sigma2_hat() - 1.0).abs() < 1e-9);
        // far from both points the prediction reverts to the prior
        let p = m.predict(&[0.5]).unwrap();
        let limit = m.sigma2_hat() * (1.0 + 1.0 / m.rinv_one().iter().sum::<f64>());
        assert!((p.mean - m.mu_hat()).abs() < 1e-9);
        assert!((p.variance - limit).abs() < 1e-9);
        assert!((limit - 1.5).abs() < 1e-6);
    }

    #[test]
    fn constant_data_is_degenerate_but_valid() {
        let b = SearchBox::uniform(2, 0.0, 1.0).unwrap();
        let x = lhs_sample(6, &b, &mut RngState::new(2, 0).generator()).unwrap();
        let a = Archive::<f64>::new(x, vec![4.25; 6]).unwrap();
        let m = fit(&a, &b, LengthScaleBounds::default()).unwrap();
        assert_eq!(m.mu_hat(), 4.25);
        assert_eq!(m.sigma2_hat(), 0.0);
        for q in [[0.1, 0.9], [0.5, 0.5], [0.99, 0.01]] {
            let p = m.predict(&q).unwrap();
            assert!((p.mean - 4.25).abs() < 1e-9);
            assert_eq!(p.variance, 0.0);
        }
    }

    #[test]
    fn fit_matches_inverse_oracle() {
        let (a, b) = random_archive(30, 30, 3);
        let m = fit(&a, &b, LengthScaleBounds::default()).unwrap();
        let o = InverseOracle::new(&m, &a, &b);
        assert!((m.mu_hat() - o.mu).abs() <= 1e-8 * (1.0 + o.mu.abs()));
        assert!((m.sigma2_hat() - o.sigma2).abs() <= 1e-8 * (1.0 + o.sigma2));
    }

    #[test]
    fn predict_matches_inverse_oracle() {
        let mut compared = 0;
        for seed in 0..40 {
            let (a, b) = smooth_archive(100 + seed, 25, 2 + seed as usize % 5);
            let m = fit(&a, &b, LengthScaleBounds::default()).unwrap();
            let o = InverseOracle::new(&m, &a, &b);
            // an explicit inverse cannot resolve eight digits beyond this
            if o.condition > 1e7 {
                continue;
            }
            compared += 1;
            let mut g = RngState::new(seed, 1).generator();
            for _ in 0..20 {
                let x = b.sample_uniform(&mut g);
                let p = m.predict(&x).unwrap();
                let (mean, var) = o.predict(&b, &x);
                assert!((p.mean - mean).abs() <= 1e-8 * (1.0 + mean.abs()), "seed {seed}");
                assert!((p.variance - var).abs() <= 1e-8 * (1.0 + var), "seed {seed}");
            }
        }
        assert!(compared >= 30, "only {compared} well-conditioned instances");
    }

    #[test]
    fn fitted_model_interpolates() {
        let (a, b) = random_archive(8, 20, 4);
        let m = fit(&a, &b, LengthScaleBounds::default()).unwrap();
        assert!(m.jitter() <= 1e-10);
        for (x, y) in a.rows().iter().zip(a.values()) {
            let p = m.predict(x).unwrap();
            assert!((p.mean - y).abs() <= 1e-6 * (1.0 + y.abs()));
            assert!(p.variance <= 1e-6 * m.sigma2_hat());
        }
    }

    #[test]
    fn fit_is_deterministic_and_bounded() {
        let (a, b) = random_archive(12, 15, 2);
        let m1 = fit(&a, &b, LengthScaleBounds::default()).unwrap();
        let m2 = fit(&a, &b, LengthScaleBounds::default()).unwrap();
        assert_eq!(m1.length_scale(), m2.length_scale());
        assert!((0.01..=100.0).contains(&m1.length_scale()));
        let nll = concentrated_nll(m1.length_scale(), &a, &b).unwrap();
        assert_eq!(nll, m1.nll());
        // the chosen scale is no worse than any grid point
        for k in 0..64 {
            let l = (0.01f64.ln() + k as f64 / 63.0 * (100f64.ln() - 0.01f64.ln())).exp();
            assert!(concentrated_nll(l, &a, &b).unwrap() >= m1.nll() - 1e-9);
        }
    }

    #[test]
    fn cholesky_reproduces_jittered_correlation() {
        let (a, b) = random_archive(5, 12, 3);
        let m = fit(&a, &b, LengthScaleBounds::default()).unwrap();
        let unit: Vec<Vec<f64>> = a.rows().iter().map(|r| b.to_unit(r)).collect();
        let c = m.cholesky();
        for i in 0..a.len() {
            for j in 0..a.len() {
                let llt: f64 = (0..a.len()).map(|k| c.get(i, k) * c.get(j, k)).sum();
                let mut r = rbf_corr(&unit[i], &unit[j], m.length_scale()).unwrap();
                if i == j {
                    r += m.jitter();
                }
                assert!((llt - r).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn nll_identity_and_two_point_cases() {
        let b = SearchBox::uniform(1, 0.0, 1.0).unwrap();
        let a = Archive::<f64>::new(vec![vec![0.0], vec![1.0]], vec![1.0, 3.0]).unwrap();
        // R = I up to exp(-5000)
        let v = concentrated_nll(0.01, &a, &b).unwrap();
        assert!((v - 2.0 * 1f64.ln()).abs() < 1e-8);

        // two points at unit distance, l = 1: ρ = exp(-1/2)
        let a = Archive::new(vec![vec![0.0], vec![1.0]], vec![0.0, 2.0]).unwrap();
        let rho = (-0.5f64).exp();
        let lam = 1e-10;
        let (p, q) = (1.0 + lam, rho);
        let det = p * p - q * q;
        // symmetric R ⇒ μ̂ = mean; σ̂² = (res' R⁻¹ res)/2 with res = (-1, 1)
        let quad = (p + p + 2.0 * q) / det;
        let expect = 2.0 * (quad / 2.0).ln() + det.ln();
        let v = concentrated_nll(1.0, &a, &b).unwrap();
        assert!((v - expect).abs() < 1e-9, "{v} vs {expect}");
    }

    #[test]
    fn nll_invariant_to_row_order() {
        let (a, b) = random_archive(21, 10, 2);
        let mut rows = a.rows().to_vec();
        let mut vals = a.values().to_vec();
        rows.reverse();
        vals.reverse();
        rows.swap(0, 4);
        vals.swap(0, 4);
        let p = Archive::new(rows, vals).unwrap();
        for l in [0.05, 0.3, 2.0] {
            let x = concentrated_nll(l, &a, &b).unwrap();
            let y = concentrated_nll(l, &p, &b).unwrap();
            assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn duplicates_are_absorbed_by_jitter() {
        let b = SearchBox::uniform(2, 0.0, 1.0).unwrap();
        let x = vec![vec![0.2, 0.3], vec![0.2, 0.3], vec![0.7, 0.1], vec![0.9, 0.9]];
        let a = Archive::new(x, vec![1.0, 1.0, 2.0, 0.5]).unwrap();
        let m = fit(&a, &b, LengthScaleBounds::default()).unwrap();
        assert!(m.predict(&[0.5, 0.5]).unwrap().variance >= 0.0);
    }

    #[test]
    fn fit_errors() {
        let b = SearchBox::uniform(1, 0.0, 1.0).unwrap();
        let a = Archive::new(vec![vec![0.5]], vec![1.0]).unwrap();
        assert!(fit(&a, &b, LengthScaleBounds::default()).is_err());
        let a = Archive::new(vec![vec![0.5], vec![2.0]], vec![1.0, 2.0]).unwrap();
        assert!(fit(&a, &b, LengthScaleBounds::default()).is_err());
        assert!(LengthScaleBounds::new(0.0, 1.0).is_err());
        assert!(Archive::<f64>::new(vec![], vec![]).is_err());
        assert!(Archive::new(vec![vec![0.1]], vec![f64::NAN]).is_err());
    }

    #[test]
    fn archive_incumbent_ties_and_updates() {
        let mut a = Archive::new(vec![vec![0.0], vec![1.0], vec![2.0]], vec![3.0, 1.0, 2.0]).unwrap();
        assert_eq!(a.incumbent_index(), 1);
        a.push(vec![3.0], 1.0).unwrap();
        assert_eq!(a.incumbent_index(), 1);
        a.push(vec![4.0], 0.5).unwrap();
        assert_eq!(a.incumbent_index(), 4);
        let t = Archive::new(vec![vec![0.0], vec![1.0]], vec![5.0, 5.0]).unwrap();
        assert_eq!(t.incumbent_index(), 0);
    }

    #[test]
    fn single_precision_model_tracks_double() {
        let (a, b) = random_archive(77, 12, 2);
        let m64 = GpModel::with_length_scale(&a, &b, 0.3).unwrap();
        let rows32: Vec<Vec<f32>> = a.rows().iter().map(|r| r.iter().map(|v| *v as f32).collect()).collect();
        let vals32: Vec<f32> = a.values().iter().map(|v| *v as f32).collect();
        let b32 = SearchBox::uniform(2, -2.0f32, 3.0).unwrap();
        let m32 = GpModel::with_length_scale(&Archive::new(rows32, vals32).unwrap(), &b32, 0.3).unwrap();
        let p64 = m64.predict(&[0.1, 0.2]).unwrap();
        let p32 = m32.predict(&[0.1, 0.2]).unwrap();
        assert!((p64.mean - p32.mean as f64).abs() < 1e-2 * (1.0 + p64.mean.abs()));
    }

    proptest! {
        #[test]
        fn variance_never_negative(seed in 0u64..500, qx in prop::collection::vec(-2.0f64..3.0, 3)) {
            let (a, b) = random_archive(seed, 8, 3);
            let m = fit(&a, &b, LengthScaleBounds::default()).unwrap();
            let p = m.predict(&qx).unwrap();
            prop_assert!(p.variance >= 0.0);
            prop_assert!(p.mean.is_finite());
        }
    }
}
