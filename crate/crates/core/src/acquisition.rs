//! Expected improvement and its restriction to a coordinate subspace
//! through the incumbent.

use std::f64::consts::PI;

use statrs::function::erf::erfc;

use crate::doe::SubspaceSelection;
use crate::error::{contract_err, Error, Result};
use crate::gp::{GpModel, Prediction};
use crate::linalg::LANES;
use crate::scalar::{squared_distance, Scalar};

/// Standard deviations at or below this are treated as zero.
pub const SD_FLOOR: f64 = 1e-12;

pub fn normal_cdf<T: Scalar>(z: T) -> T {
    T::lit(0.5 * erfc(-z.to_f64_lossy() / std::f64::consts::SQRT_2))
}

pub fn normal_pdf<T: Scalar>(z: T) -> T {
    let z = z.to_f64_lossy();
    T::lit((-0.5 * z * z).exp() / (2.0 * PI).sqrt())
}

/// Closed-form `E[max(f_min − Y, 0)]` for `Y ~ N(mean, sd²)`.
pub fn expected_improvement<T: Scalar>(mean: T, sd: T, f_min: T) -> Result<T> {
    if !(mean.is_finite() && sd.is_finite() && f_min.is_finite()) {
        return Err(Error::Numeric(format!(
            "expected improvement of non-finite inputs (mean {mean}, sd {sd}, f_min {f_min})"
        )));
    }
    if sd < T::zero() {
        return Err(contract_err!("negative standard deviation {sd}"));
    }
    if sd <= T::lit(SD_FLOOR) {
        return Ok(T::zero());
    }
    let gap = f_min - mean;
    let z = gap / sd;
    let ei = gap * normal_cdf(z) + sd * normal_pdf(z);
    Ok(if ei > T::zero() { ei } else { T::zero() })
}

/// EI of a GP prediction.
pub fn expected_improvement_of<T: Scalar>(p: Prediction<T>, f_min: T) -> Result<T> {
    expected_improvement(p.mean, p.sd(), f_min)
}

/// Copy of `incumbent` with `selection[k]` overwritten by `values[k]`.
pub fn compose_point<T: Scalar>(incumbent: &[T], selection: &SubspaceSelection, values: &[T]) -> Result<Vec<T>> {
    if values.len() != selection.len() {
        return Err(contract_err!(
            "{} values for a selection of {} coordinates",
            values.len(),
            selection.len()
        ));
    }
    let mut x = incumbent.to_vec();
    for (&i, v) in selection.iter().zip(values) {
        if i >= x.len() {
            return Err(contract_err!("selected index {i} outside a {}-d point", x.len()));
        }
        x[i] = *v;
    }
    Ok(x)
}

/// Everything needed to score candidates on the slice through the
/// incumbent. The squared unit-cube distance from the incumbent to every
/// training input over the frozen coordinates is cached, so scoring a
/// candidate only touches the selected coordinates.
#[derive(Debug, Clone)]
pub struct AcquisitionContext<'m, T> {
    model: &'m GpModel<T>,
    f_min: T,
    incumbent: Vec<T>,
    selection: SubspaceSelection,
    frozen_sqdist: Vec<T>,
    selected_unit: Vec<T>,
    selected_lower: Vec<T>,
    selected_width: Vec<T>,
}

impl<'m, T: Scalar> AcquisitionContext<'m, T> {
    pub fn new(model: &'m GpModel<T>, f_min: T, incumbent: Vec<T>, selection: SubspaceSelection) -> Result<Self> {
        let dim = model.dim();
        if incumbent.len() != dim {
            return Err(contract_err!("incumbent of dimension {} for a {dim}-d model", incumbent.len()));
        }
        if selection.is_empty() || selection.iter().any(|&i| i >= dim) {
            return Err(contract_err!("selection must be non-empty with indices below {dim}"));
        }
        if !f_min.is_finite() {
            return Err(Error::Numeric(format!("non-finite f_min {f_min}")));
        }
        let bounds = model.bounds();
        let inc_unit = bounds.to_unit(&incumbent);
        let mut selected = vec![false; dim];
        for &i in &selection {
            selected[i] = true;
        }
        let frozen: Vec<usize> = (0..dim).filter(|i| !selected[*i]).collect();
        let frozen_inc: Vec<T> = frozen.iter().map(|&i| inc_unit[i]).collect();
        let mut buf = vec![T::zero(); frozen.len()];
        let mut frozen_sqdist = Vec::with_capacity(model.len());
        let mut selected_unit = Vec::with_capacity(model.len() * selection.len());
        for row in model.unit_rows().chunks_exact(dim) {
            for (b, &i) in buf.iter_mut().zip(&frozen) {
                *b = row[i];
            }
            frozen_sqdist.push(squared_distance(&frozen_inc, &buf));
            selected_unit.extend(selection.iter().map(|&i| row[i]));
        }
        Ok(Self {
            model,
            f_min,
            incumbent,
            selected_lower: selection.iter().map(|&i| bounds.lower()[i]).collect(),
            selected_width: selection.iter().map(|&i| bounds.width(i)).collect(),
            selection,
            frozen_sqdist,
            selected_unit,
        })
    }

    pub fn model(&self) -> &GpModel<T> {
        self.model
    }

    pub fn f_min(&self) -> T {
        self.f_min
    }

    pub fn incumbent(&self) -> &[T] {
        &self.incumbent
    }

    pub fn selection(&self) -> &SubspaceSelection {
        &self.selection
    }

    /// GP prediction at the incumbent with the selected coordinates replaced.
    pub fn predict(&self, values: &[T]) -> Result<Prediction<T>> {
        let d = self.selection.len();
        if values.len() != d {
            return Err(contract_err!("{} values for a selection of {d} coordinates", values.len()));
        }
        let unit: Vec<T> = values
            .iter()
            .zip(self.selected_lower.iter().zip(&self.selected_width))
            .map(|(v, (lo, w))| (*v - *lo) / *w)
            .collect();
        let r: Vec<T> = self
            .frozen_sqdist
            .iter()
            .zip(self.selected_unit.chunks_exact(d))
            .map(|(frozen, row)| self.model.correlation_at(*frozen + squared_distance(&unit, row)))
            .collect();
        Ok(self.model.predict_from_correlations(r))
    }

    /// Expected subspace improvement of the composed candidate.
    pub fn essi(&self, values: &[T]) -> Result<T> {
        expected_improvement_of(self.predict(values)?, self.f_min)
    }

    /// ESSI of many candidates, evaluated [`LANES`] at a time. Agrees with
    /// [`Self::essi`] up to rounding.
    pub fn essi_batch(&self, candidates: &[Vec<T>]) -> Result<Vec<T>> {
        let d = self.selection.len();
        if let Some(c) = candidates.iter().find(|c| c.len() != d) {
            return Err(contract_err!("{} values for a selection of {d} coordinates", c.len()));
        }
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx") {
            // SAFETY: the required CPU feature was detected above.
            return unsafe { self.essi_batch_avx(candidates) };
        }
        self.essi_batch_kernel(candidates)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx")]
    unsafe fn essi_batch_avx(&self, candidates: &[Vec<T>]) -> Result<Vec<T>> {
        self.essi_batch_kernel(candidates)
    }

    #[inline(always)]
    fn essi_batch_kernel(&self, candidates: &[Vec<T>]) -> Result<Vec<T>> {
        let d = self.selection.len();
        let n = self.model.len();
        let mut out = Vec::with_capacity(candidates.len());
        let mut q = vec![T::zero(); d * LANES];
        let mut r = vec![T::zero(); n * LANES];
        for chunk in candidates.chunks(LANES) {
            for k in 0..LANES {
                // idle lanes repeat the last candidate
                let c = &chunk[k.min(chunk.len() - 1)];
                for s in 0..d {
                    q[s * LANES + k] = (c[s] - self.selected_lower[s]) / self.selected_width[s];
                }
            }
            for (t, row) in self.selected_unit.chunks_exact(d).enumerate() {
                let mut acc = [T::zero(); LANES];
                for (s, &x) in row.iter().enumerate() {
                    let qs: &[T; LANES] = q[s * LANES..(s + 1) * LANES].try_into().expect("lane block");
                    for k in 0..LANES {
                        let diff = qs[k] - x;
                        acc[k] += diff * diff;
                    }
                }
                let frozen = self.frozen_sqdist[t];
                for k in 0..LANES {
                    r[t * LANES + k] = self.model.correlation_at(frozen + acc[k]);
                }
            }
            let predictions = self.model.predict_lanes(&mut r);
            for p in &predictions[..chunk.len()] {
                out.push(expected_improvement_of(*p, self.f_min)?);
            }
        }
        Ok(out)
    }

    /// Full-dimensional candidate for a vector of selected-coordinate values.
    pub fn compose(&self, values: &[T]) -> Result<Vec<T>> {
        compose_point(&self.incumbent, &self.selection, values)
    }
}

/// Standalone form of [`AcquisitionContext::essi`].
pub fn essi<T: Scalar>(ctx: &AcquisitionContext<'_, T>, values: &[T]) -> Result<T> {
    ctx.essi(values)
}
