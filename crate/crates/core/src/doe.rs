//! Search boxes, Latin hypercube designs, random coordinate subspaces and
//! random orthogonal matrices.

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{config_err, contract_err, Result};
use crate::scalar::Scalar;

/// Axis-aligned box `[lower_i, upper_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchBox<T> {
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> SearchBox<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.is_empty() {
            return Err(config_err!("search box must have at least one dimension"));
        }
        if lower.len() != upper.len() {
            return Err(config_err!(
                "search box bounds differ in length ({} vs {})",
                lower.len(),
                upper.len()
            ));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(config_err!("invalid bounds in dimension {i}: [{lo}, {hi}]"));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval repeated in every dimension.
    pub fn uniform(dim: usize, lower: T, upper: T) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> T {
        self.upper[i] - self.lower[i]
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn clamp(&self, x: &mut [T]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.max(*lo).min(*hi);
        }
    }

    /// Restriction of the box to the coordinates in `selection`, in order.
    pub fn project(&self, selection: &SubspaceSelection) -> Result<Self> {
        if let Some(&bad) = selection.iter().find(|&&i| i >= self.dim()) {
            return Err(contract_err!("index {bad} outside a {}-d box", self.dim()));
        }
        Ok(Self {
            lower: selection.iter().map(|&i| self.lower[i]).collect(),
            upper: selection.iter().map(|&i| self.upper[i]).collect(),
        })
    }

    /// Maps a point into the unit cube.
    pub fn to_unit(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .enumerate()
            .map(|(i, v)| (*v - self.lower[i]) / self.width(i))
            .collect()
    }

    pub fn from_unit(&self, u: &[T]) -> Vec<T> {
        u.iter()
            .enumerate()
            .map(|(i, v)| self.lower[i] + *v * self.width(i))
            .collect()
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        (0..self.dim())
            .map(|i| {
                let u: f64 = rng.random();
                self.lower[i] + T::lit(u) * self.width(i)
            })
            .collect()
    }
}

/// Distinct coordinate indices chosen for one iteration, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubspaceSelection(Vec<usize>);

impl SubspaceSelection {
    /// Builds a selection from arbitrary indices; they must be distinct and `< dim`.
    pub fn new(mut indices: Vec<usize>, dim: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(contract_err!("selection contains repeated indices"));
        }
        if indices.last().is_some_and(|&i| i >= dim) {
            return Err(contract_err!("selection index out of range for dimension {dim}"));
        }
        Ok(Self(indices))
    }

    pub fn full(dim: usize) -> Self {
        Self((0..dim).collect())
    }

    pub fn single(index: usize) -> Self {
        Self(vec![index])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.0.iter()
    }
}

impl<'a> IntoIterator for &'a SubspaceSelection {
    type Item = &'a usize;
    type IntoIter = std::slice::Iter<'a, usize>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Jittered Latin hypercube design of `n` points; rows are points.
///
/// Each dimension is cut into `n` equal strata, every stratum receives exactly
/// one point placed uniformly inside it, and the stratum order is permuted
/// independently per dimension.
pub fn lhs_sample<T: Scalar, R: Rng + ?Sized>(
    n: usize,
    bounds: &SearchBox<T>,
    rng: &mut R,
) -> Result<Vec<Vec<T>>> {
    if n == 0 {
        return Err(config_err!("Latin hypercube needs at least one sample"));
    }
    let dim = bounds.dim();
    let mut design = vec![vec![T::zero(); dim]; n];
    let nf = n as f64;
    let mut strata: Vec<usize> = (0..n).collect();
    for j in 0..dim {
        shuffle(&mut strata, rng);
        for (row, &k) in design.iter_mut().zip(&strata) {
            // stay clear of the stratum edges so rescaling round-off cannot
            // move a point into its neighbour
            let jitter: f64 = rng.random_range(1e-9..1.0 - 1e-9);
            let u = (k as f64 + jitter) / nf;
            row[j] = bounds.lower[j] + T::lit(u) * bounds.width(j);
        }
    }
    Ok(design)
}

/// Draws `d` distinct coordinates out of `dim`, uniformly without replacement.
pub fn select_subspace<R: Rng + ?Sized>(d: usize, dim: usize, rng: &mut R) -> Result<SubspaceSelection> {
    if d == 0 || d > dim {
        return Err(config_err!("subspace size {d} outside [1, {dim}]"));
    }
    let mut picked = index::sample(rng, dim, d).into_vec();
    picked.sort_unstable();
    Ok(SubspaceSelection(picked))
}

/// Fisher-Yates shuffle driven by the crate generator.
pub fn shuffle<V, R: Rng + ?Sized>(items: &mut [V], rng: &mut R) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}

/// Random orthogonal `dim × dim` matrix (row-major rows), obtained by
/// orthonormalizing independent standard normal rows.
pub fn random_rotation<T: Scalar, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Vec<T>> {
    let mut rows: Vec<Vec<T>> = (0..dim)
        .map(|_| {
            (0..dim)
                .map(|_| T::lit(rng.sample::<f64, _>(StandardNormal)))
                .collect()
        })
        .collect();
    for i in 0..dim {
        // two passes of modified Gram-Schmidt keep the result orthogonal to
        // machine precision
        for _ in 0..2 {
            for k in 0..i {
                let (done, rest) = rows.split_at_mut(i);
                let proj = crate::scalar::dot(&rest[0], &done[k]);
                for (v, q) in rest[0].iter_mut().zip(&done[k]) {
                    *v -= proj * *q;
                }
            }
        }
        let norm = crate::scalar::dot(&rows[i], &rows[i]).sqrt();
        if norm > T::lit(1e-8) {
            rows[i].iter_mut().for_each(|v| *v /= norm);
        } else {
            // vanishing probability; fall back to a fresh canonical direction
            let mut e = vec![T::zero(); dim];
            e[i] = T::one();
            rows[i] = e;
        }
    }
    rows
}
