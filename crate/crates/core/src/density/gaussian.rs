use crate::error::{Error, Result};

/// Smallest variance produced when exponentiating a log-variance.
pub const VARIANCE_FLOOR: f64 = 1e-38;

/// Variance from a log-variance, floored at [`VARIANCE_FLOOR`].
#[inline]
pub fn variance(log_var: f64) -> f64 {
    log_var.exp().max(VARIANCE_FLOOR)
}

/// A Gaussian with diagonal covariance, parameterized by its mean and the
/// natural log of each per-dimension variance.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagGaussian {
    mean: Vec<f64>,
    log_var: Vec<f64>,
}

impl DiagGaussian {
    pub fn new(mean: Vec<f64>, log_var: Vec<f64>) -> Result<Self> {
        GaussianView::new(&mean, &log_var)?;
        Ok(Self { mean, log_var })
    }

    /// Builds from a mean and per-dimension variances (not log-variances).
    pub fn from_variances(mean: Vec<f64>, var: &[f64]) -> Result<Self> {
        if let Some(v) = var.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "variance must be positive, got {v}"
            )));
        }
        Self::new(mean, var.iter().map(|v| v.ln()).collect())
    }

    /// Isotropic Gaussian `N(mean, var * I)`.
    pub fn isotropic(mean: Vec<f64>, var: f64) -> Result<Self> {
        let d = mean.len();
        Self::from_variances(mean, &vec![var; d])
    }

    /// `N(0, I)` in `d` dimensions.
    pub fn standard(d: usize) -> Result<Self> {
        Self::new(vec![0.0; d], vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn log_var(&self) -> &[f64] {
        &self.log_var
    }

    pub fn mean_mut(&mut self) -> &mut [f64] {
        &mut self.mean
    }

    pub fn log_var_mut(&mut self) -> &mut [f64] {
        &mut self.log_var
    }

    pub fn view(&self) -> GaussianView<'_> {
        GaussianView {
            mean: &self.mean,
            log_var: &self.log_var,
        }
    }

    /// Concatenates the dimensions of `self` and `other`.
    pub fn concat(&self, other: &DiagGaussian) -> DiagGaussian {
        let mut mean = self.mean.clone();
        mean.extend_from_slice(&other.mean);
        let mut log_var = self.log_var.clone();
        log_var.extend_from_slice(&other.log_var);
        DiagGaussian { mean, log_var }
    }
}

/// Borrowed view of a diagonal Gaussian, e.g. a row of an embedding table.
#[derive(Debug, Clone, Copy)]
pub struct GaussianView<'a> {
    pub mean: &'a [f64],
    pub log_var: &'a [f64],
}

impl<'a> GaussianView<'a> {
    pub fn new(mean: &'a [f64], log_var: &'a [f64]) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if mean.len() != log_var.len() {
            return Err(Error::InvalidArgument(format!(
                "mean has {} entries but log_var has {}",
                mean.len(),
                log_var.len()
            )));
        }
        if mean.iter().chain(log_var).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite parameter".into()));
        }
        Ok(Self { mean, log_var })
    }

    /// View without validation; callers guarantee equal, nonzero lengths.
    #[inline]
    pub(crate) fn unchecked(mean: &'a [f64], log_var: &'a [f64]) -> Self {
        debug_assert_eq!(mean.len(), log_var.len());
        Self { mean, log_var }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn to_owned(&self) -> DiagGaussian {
        DiagGaussian {
            mean: self.mean.to_vec(),
            log_var: self.log_var.to_vec(),
        }
    }
}

impl<'a> From<&'a DiagGaussian> for GaussianView<'a> {
    fn from(g: &'a DiagGaussian) -> Self {
        g.view()
    }
}

/// `log det(Σ)`, the sum of the log-variances.
pub fn log_det_volume<'a>(f: impl Into<GaussianView<'a>>) -> f64 {
    f.into().log_var.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mismatched_lengths() {
        assert!(DiagGaussian::new(vec![0.0; 2], vec![0.0; 3]).is_err());
        assert!(DiagGaussian::new(vec![], vec![]).is_err());
        assert!(DiagGaussian::new(vec![f64::NAN], vec![0.0]).is_err());
        assert!(DiagGaussian::from_variances(vec![0.0], &[0.0]).is_err());
    }

    #[test]
    fn log_det_examples() {
        let f = DiagGaussian::new(vec![0.0; 2], vec![0.0, 0.0]).unwrap();
        assert_eq!(log_det_volume(&f), 0.0);
        let f = DiagGaussian::from_variances(vec![0.0], &[std::f64::consts::E]).unwrap();
        assert!((log_det_volume(&f) - 1.0).abs() < 1e-15);
        let f = DiagGaussian::new(vec![0.0; 3], vec![-1.0, -2.0, -3.0]).unwrap();
        assert_eq!(log_det_volume(&f), -6.0);
    }

    #[test]
    fn variance_is_floored() {
        assert_eq!(variance(-1e4), VARIANCE_FLOOR);
        assert_eq!(variance(0.0), 1.0);
    }
}
