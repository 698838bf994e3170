use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::density::GaussianView;
use crate::error::{Error, Result};

/// Minimum sample count accepted by [`mc_kl`].
pub const MC_MIN_SAMPLES: usize = 1000;

/// Default trapezoid intervals for the 1-d quadratures.
pub const QUAD_DEFAULT_INTERVALS: usize = 20_000;

/// Largest change allowed when the quadrature grid is doubled, relative to
/// `max(1, |value|)`.
pub const QUAD_REFINE_TOL: f64 = 1e-8;

/// Half-width of the quadrature window in pooled standard deviations.
const QUAD_HALF_WIDTH: f64 = 10.0;

/// Half-width of the containment grid in pooled standard deviations.
const ENCAPSULATION_HALF_WIDTH: f64 = 8.0;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl McEstimate {
    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn agrees(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }
}

struct Axis {
    mu: f64,
    sd: f64,
}

fn axes(f: &GaussianView<'_>) -> Vec<Axis> {
    f.mean
        .iter()
        .zip(f.log_var)
        .map(|(&mu, &lv)| Axis {
            mu,
            sd: (0.5 * lv).exp(),
        })
        .collect()
}

/// Log density of a product of independent normals.
fn log_pdf(axes: &[Axis], x: &[f64]) -> f64 {
    axes.iter()
        .zip(x)
        .map(|(a, &xi)| {
            let z = (xi - a.mu) / a.sd;
            -0.5 * z * z - a.sd.ln() - 0.5 * (2.0 * PI).ln()
        })
        .sum()
}

fn check_dims(f: &GaussianView<'_>, g: &GaussianView<'_>) -> Result<()> {
    if f.dim() != g.dim() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: {} vs {}",
            f.dim(),
            g.dim()
        )));
    }
    Ok(())
}

/// Monte-Carlo estimate of `E_{X~f}[log f(X) − log g(X)]`.
pub fn mc_kl<'a, 'b, R: Rng + ?Sized>(
    f: impl Into<GaussianView<'a>>,
    g: impl Into<GaussianView<'b>>,
    n_samples: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    let (f, g) = (f.into(), g.into());
    check_dims(&f, &g)?;
    if n_samples < MC_MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MC_MIN_SAMPLES} samples, got {n_samples}"
        )));
    }
    let (af, ag) = (axes(&f), axes(&g));
    let mut x = vec![0.0; af.len()];
    // Welford running moments.
    let (mut mean, mut m2) = (0.0, 0.0);
    for k in 1..=n_samples {
        for (xi, a) in x.iter_mut().zip(&af) {
            let z: f64 = rng.sample(StandardNormal);
            *xi = a.mu + a.sd * z;
        }
        let s = log_pdf(&af, &x) - log_pdf(&ag, &x);
        let delta = s - mean;
        mean += delta / k as f64;
        m2 += delta * (s - mean);
    }
    let var = m2 / (n_samples - 1) as f64;
    Ok(McEstimate {
        mean,
        std_error: (var / n_samples as f64).sqrt(),
        samples: n_samples,
    })
}

fn one_d<'a>(f: &GaussianView<'a>) -> Result<Axis> {
    if f.dim() != 1 {
        return Err(Error::InvalidArgument(format!(
            "1-d quadrature got a {}-d density",
            f.dim()
        )));
    }
    Ok(axes(f).remove(0))
}

fn trapezoid(h: impl Fn(f64) -> f64, lo: f64, hi: f64, intervals: usize) -> f64 {
    let step = (hi - lo) / intervals as f64;
    let mut acc = 0.5 * (h(lo) + h(hi));
    for i in 1..intervals {
        acc += h(lo + step * i as f64);
    }
    acc * step
}

/// Trapezoid rule on `intervals` and `2·intervals` cells; errors if the two
/// disagree by more than [`QUAD_REFINE_TOL`]. Returns the refined value.
fn refined(h: impl Fn(f64) -> f64, lo: f64, hi: f64, intervals: usize) -> Result<f64> {
    if intervals < 2 {
        return Err(Error::InvalidArgument("quadrature needs >= 2 intervals".into()));
    }
    let coarse = trapezoid(&h, lo, hi, intervals);
    let fine = trapezoid(&h, lo, hi, 2 * intervals);
    if !fine.is_finite() || (coarse - fine).abs() > QUAD_REFINE_TOL * fine.abs().max(1.0) {
        return Err(Error::Oracle(format!(
            "quadrature unstable under refinement: {coarse} vs {fine}"
        )));
    }
    Ok(fine)
}

fn window(a: &Axis, b: &Axis, half_width: f64) -> (f64, f64) {
    (
        (a.mu - half_width * a.sd).min(b.mu - half_width * b.sd),
        (a.mu + half_width * a.sd).max(b.mu + half_width * b.sd),
    )
}

fn pdf_1d(a: &Axis, x: f64) -> f64 {
    let z = (x - a.mu) / a.sd;
    (-0.5 * z * z).exp() / (a.sd * (2.0 * PI).sqrt())
}

/// `−2 log ∫ f g dx` by trapezoid quadrature (1-d only).
pub fn quad_elk_1d<'a, 'b>(
    f: impl Into<GaussianView<'a>>,
    g: impl Into<GaussianView<'b>>,
    intervals: usize,
) -> Result<f64> {
    let (a, b) = (one_d(&f.into())?, one_d(&g.into())?);
    let (lo, hi) = window(&a, &b, QUAD_HALF_WIDTH);
    let inner = refined(|x| pdf_1d(&a, x) * pdf_1d(&b, x), lo, hi, intervals)?;
    Ok(-2.0 * inner.ln())
}

/// `∫ f log(f/g) dx` by trapezoid quadrature (1-d only).
pub fn quad_kl_1d<'a, 'b>(
    f: impl Into<GaussianView<'a>>,
    g: impl Into<GaussianView<'b>>,
    intervals: usize,
) -> Result<f64> {
    let (a, b) = (one_d(&f.into())?, one_d(&g.into())?);
    let (lo, hi) = window(&a, &b, QUAD_HALF_WIDTH);
    let h = |x: f64| {
        let p = pdf_1d(&a, x);
        if p == 0.0 {
            return 0.0;
        }
        let lp = log_pdf(std::slice::from_ref(&a), &[x]);
        let lq = log_pdf(std::slice::from_ref(&b), &[x]);
        p * (lp - lq)
    };
    refined(h, lo, hi, intervals)
}

/// `ln ∫ f^α g^{1−α} dx / (α(α−1))` by trapezoid quadrature (1-d only).
///
/// Only meaningful where the integral converges.
pub fn quad_renyi_1d<'a, 'b>(
    f: impl Into<GaussianView<'a>>,
    g: impl Into<GaussianView<'b>>,
    alpha: f64,
    intervals: usize,
) -> Result<f64> {
    if !alpha.is_finite() || alpha == 0.0 || alpha == 1.0 {
        return Err(Error::InvalidArgument(format!("alpha = {alpha}")));
    }
    let (a, b) = (one_d(&f.into())?, one_d(&g.into())?);
    // f^α g^{1−α} is itself an unnormalized normal when its precision is positive.
    let precision = alpha / (a.sd * a.sd) + (1.0 - alpha) / (b.sd * b.sd);
    if precision <= 0.0 {
        return Err(Error::Oracle(format!(
            "∫ f^α g^(1−α) diverges for alpha = {alpha}"
        )));
    }
    let mix = Axis {
        mu: (alpha * a.mu / (a.sd * a.sd) + (1.0 - alpha) * b.mu / (b.sd * b.sd)) / precision,
        sd: precision.sqrt().recip(),
    };
    let (lo1, hi1) = window(&a, &b, QUAD_HALF_WIDTH);
    let (lo2, hi2) = window(&mix, &mix, QUAD_HALF_WIDTH);
    let (lo, hi) = (lo1.min(lo2), hi1.max(hi2));
    let h = |x: f64| {
        let lp = log_pdf(std::slice::from_ref(&a), &[x]);
        let lq = log_pdf(std::slice::from_ref(&b), &[x]);
        (alpha * lp + (1.0 - alpha) * lq).exp()
    };
    let inner = refined(h, lo, hi, intervals)?;
    Ok(inner.ln() / (alpha * (alpha - 1.0)))
}

/// Central finite differences of `loss` at `params`.
pub fn fd_grad<F>(mut loss: F, params: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(1e-7..=1e-3).contains(&h) {
        return Err(Error::InvalidArgument(format!(
            "step {h} outside [1e-7, 1e-3]"
        )));
    }
    let mut x = params.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + h;
        let up = loss(&x);
        x[i] = orig - h;
        let down = loss(&x);
        x[i] = orig;
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

/// Outcome of a grid containment test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncapsulationCheck {
    /// No grid point has `f > η` while `g ≤ η`.
    pub contained: bool,
    /// `f` never exceeds `η` on the grid, so containment holds trivially.
    pub vacuous: bool,
}

/// Grid test of `{x : f(x) > η} ⊆ {x : g(x) > η}` for `d ≤ 2`.
///
/// `points` is the number of grid points per axis.
pub fn strict_encapsulation_check<'a, 'b>(
    f: impl Into<GaussianView<'a>>,
    g: impl Into<GaussianView<'b>>,
    eta: f64,
    points: usize,
) -> Result<EncapsulationCheck> {
    let (f, g) = (f.into(), g.into());
    check_dims(&f, &g)?;
    if f.dim() > 2 {
        return Err(Error::InvalidArgument(format!(
            "containment grid supports d <= 2, got {}",
            f.dim()
        )));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidArgument(format!("eta must be > 0, got {eta}")));
    }
    if points < 2 {
        return Err(Error::InvalidArgument("grid needs >= 2 points per axis".into()));
    }
    let (af, ag) = (axes(&f), axes(&g));
    let ranges: Vec<(f64, f64)> = af
        .iter()
        .zip(&ag)
        .map(|(a, b)| window(a, b, ENCAPSULATION_HALF_WIDTH))
        .collect();
    let coord = |axis: usize, i: usize| {
        let (lo, hi) = ranges[axis];
        lo + (hi - lo) * i as f64 / (points - 1) as f64
    };
    let ln_eta = eta.ln();
    let mut x = vec![0.0; af.len()];
    let mut any_above = false;
    let mut contained = true;
    let total = points.pow(af.len() as u32);
    for flat in 0..total {
        let mut rem = flat;
        for (axis, xi) in x.iter_mut().enumerate() {
            *xi = coord(axis, rem % points);
            rem /= points;
        }
        if log_pdf(&af, &x) > ln_eta {
            any_above = true;
            if log_pdf(&ag, &x) <= ln_eta {
                contained = false;
                break;
            }
        }
    }
    Ok(EncapsulationCheck {
        contained,
        vacuous: !any_above,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::DiagGaussian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn n1(mu: f64, var: f64) -> DiagGaussian {
        DiagGaussian::isotropic(vec![mu], var).unwrap()
    }

    #[test]
    fn mc_kl_identical_is_zero() {
        let f = n1(0.3, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let est = mc_kl(&f, &f, 5000, &mut rng).unwrap();
        assert_eq!(est.mean, 0.0);
        assert!(est.agrees(0.0, 3.0));
    }

    #[test]
    fn mc_kl_rejects_small_n() {
        let f = n1(0.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(mc_kl(&f, &f, 999, &mut rng).is_err());
    }

    #[test]
    fn std_error_halves_with_four_times_the_samples() {
        let (f, g) = (n1(0.0, 1.0), n1(0.0, 4.0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = mc_kl(&f, &g, 20_000, &mut rng).unwrap();
        let b = mc_kl(&f, &g, 80_000, &mut rng).unwrap();
        let ratio = a.std_error / b.std_error;
        assert!((ratio - 2.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn elk_quadrature() {
        let f = n1(0.0, 1.0);
        let v = quad_elk_1d(&f, &f, QUAD_DEFAULT_INTERVALS).unwrap();
        assert!((v - 2.531024246969291).abs() < 1e-6);
        let g = n1(1.5, 0.3);
        let ab = quad_elk_1d(&f, &g, QUAD_DEFAULT_INTERVALS).unwrap();
        let ba = quad_elk_1d(&g, &f, QUAD_DEFAULT_INTERVALS).unwrap();
        assert!((ab - ba).abs() < 1e-10);
    }

    #[test]
    fn coarse_grid_is_flagged() {
        let (f, g) = (n1(0.0, 1.0), n1(0.0, 1e-4));
        assert!(matches!(quad_elk_1d(&f, &g, 4), Err(Error::Oracle(_))));
    }

    #[test]
    fn kl_quadrature_known_value() {
        let v = quad_kl_1d(&n1(0.0, 1.0), &n1(0.0, 4.0), QUAD_DEFAULT_INTERVALS).unwrap();
        assert!((v - 0.3181471805599453).abs() < 1e-8);
    }

    #[test]
    fn fd_examples() {
        let g = fd_grad(|x| 0.5 * x[0] * x[0], &[3.0], 1e-5).unwrap();
        assert!((g[0] - 3.0).abs() < 1e-6);
        let g = fd_grad(|_| 7.0, &[1.0, 2.0], 1e-4).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
        assert!(fd_grad(|_| 0.0, &[1.0], 1e-2).is_err());
    }

    #[test]
    fn encapsulation_examples() {
        let narrow = n1(0.0, 0.25);
        let wide = n1(0.0, 4.0);
        let far = n1(3.0, 0.25);
        let c = strict_encapsulation_check(&narrow, &wide, 0.05, 2001).unwrap();
        assert!(c.contained && !c.vacuous);
        let c = strict_encapsulation_check(&far, &narrow, 0.05, 2001).unwrap();
        assert!(!c.contained);
        for eta in [1e-3, 0.1, 0.5, 10.0] {
            assert!(strict_encapsulation_check(&wide, &wide, eta, 501).unwrap().contained);
        }
        let c = strict_encapsulation_check(&wide, &narrow, 10.0, 501).unwrap();
        assert!(c.contained && c.vacuous);
    }

    #[test]
    fn encapsulation_in_two_dimensions() {
        let f = DiagGaussian::from_variances(vec![0.0, 0.0], &[0.1, 0.2]).unwrap();
        let g = DiagGaussian::from_variances(vec![0.1, 0.0], &[2.0, 3.0]).unwrap();
        assert!(strict_encapsulation_check(&f, &g, 0.05, 301).unwrap().contained);
        assert!(!strict_encapsulation_check(&g, &f, 0.05, 301).unwrap().contained);
    }
}
