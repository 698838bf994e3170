//! Closed-form divergences between diagonal Gaussians with analytic gradients.
//!
//! Every measure decomposes into a sum of per-dimension terms, so nothing
//! here materializes a covariance matrix. Gradients are taken with respect to
//! the means and the log-variances (`σ² = exp(ℓ)`).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use super::gaussian::{variance, GaussianView};
use crate::error::{Error, Result};

/// Which divergence `D(f ‖ g)` to use as the order-violation energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DivergenceKind {
    /// `KL(f ‖ g)`.
    Kl,
    /// `KL(g ‖ f)`.
    ReverseKl,
    /// Rényi α-divergence, normalized by `1 / (α(α−1))`.
    Renyi(Alpha),
    /// Negative log expected likelihood kernel, `−2 log ⟨f, g⟩`.
    NegLogElk,
}

/// Rényi order; never 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha == 0.0 || alpha == 1.0 {
            return Err(Error::InvalidArgument(format!(
                "Rényi alpha must be finite and not 0 or 1, got {alpha}"
            )));
        }
        Ok(Alpha(alpha))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl DivergenceKind {
    pub fn renyi(alpha: f64) -> Result<Self> {
        Ok(DivergenceKind::Renyi(Alpha::new(alpha)?))
    }
}

impl fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DivergenceKind::Kl => write!(f, "kl"),
            DivergenceKind::ReverseKl => write!(f, "reverse-kl"),
            DivergenceKind::Renyi(a) => write!(f, "renyi:{}", a.get()),
            DivergenceKind::NegLogElk => write!(f, "elk"),
        }
    }
}

impl FromStr for DivergenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kl" => Ok(DivergenceKind::Kl),
            "reverse-kl" | "reversekl" | "rkl" => Ok(DivergenceKind::ReverseKl),
            "elk" | "neg-log-elk" => Ok(DivergenceKind::NegLogElk),
            other => {
                let alpha = other
                    .strip_prefix("renyi:")
                    .or_else(|| other.strip_prefix("renyi="))
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown divergence '{s}'")))?;
                let alpha: f64 = alpha.parse().map_err(|_| {
                    Error::InvalidArgument(format!("bad Rényi alpha in '{s}'"))
                })?;
                DivergenceKind::renyi(alpha)
            }
        }
    }
}

/// Divergence value and its gradient with respect to both arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct GradPair {
    pub value: f64,
    pub d_mean_f: Vec<f64>,
    pub d_logvar_f: Vec<f64>,
    pub d_mean_g: Vec<f64>,
    pub d_logvar_g: Vec<f64>,
}

/// Mutable gradient accumulators for one `(f, g)` pair.
pub struct GradSink<'a> {
    pub mean_f: &'a mut [f64],
    pub log_var_f: &'a mut [f64],
    pub mean_g: &'a mut [f64],
    pub log_var_g: &'a mut [f64],
}

impl GradSink<'_> {
    fn swapped(&mut self) -> GradSink<'_> {
        GradSink {
            mean_f: self.mean_g,
            log_var_f: self.log_var_g,
            mean_g: self.mean_f,
            log_var_g: self.log_var_f,
        }
    }
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

/// `KL(f ‖ g)`.
pub fn kl<'a, 'b>(f: impl Into<GaussianView<'a>>, g: impl Into<GaussianView<'b>>) -> Result<f64> {
    let (f, g) = (f.into(), g.into());
    check_dims(&f, &g)?;
    Ok(kl_impl(f, g, None, 0.0))
}

/// Rényi α-divergence `D_α(f ‖ g)`.
pub fn renyi<'a, 'b>(
    alpha: f64,
    f: impl Into<GaussianView<'a>>,
    g: impl Into<GaussianView<'b>>,
) -> Result<f64> {
    let alpha = Alpha::new(alpha)?;
    let (f, g) = (f.into(), g.into());
    check_dims(&f, &g)?;
    renyi_impl(alpha.get(), f, g, None, 0.0)
}

/// `−2 log ⟨f, g⟩`, symmetric in its arguments.
pub fn neg_log_elk<'a, 'b>(
    f: impl Into<GaussianView<'a>>,
    g: impl Into<GaussianView<'b>>,
) -> Result<f64> {
    let (f, g) = (f.into(), g.into());
    check_dims(&f, &g)?;
    Ok(elk_impl(f, g, None, 0.0))
}

/// Dispatches to the divergence selected by `kind`.
pub fn divergence<'a, 'b>(
    kind: DivergenceKind,
    f: impl Into<GaussianView<'a>>,
    g: impl Into<GaussianView<'b>>,
) -> Result<f64> {
    let (f, g) = (f.into(), g.into());
    check_dims(&f, &g)?;
    eval(kind, f, g, None, 0.0)
}

/// Value plus analytic gradients for `kind`.
pub fn divergence_with_grad<'a, 'b>(
    kind: DivergenceKind,
    f: impl Into<GaussianView<'a>>,
    g: impl Into<GaussianView<'b>>,
) -> Result<GradPair> {
    let (f, g) = (f.into(), g.into());
    check_dims(&f, &g)?;
    let d = f.dim();
    let mut out = GradPair {
        value: 0.0,
        d_mean_f: vec![0.0; d],
        d_logvar_f: vec![0.0; d],
        d_mean_g: vec![0.0; d],
        d_logvar_g: vec![0.0; d],
    };
    let mut sink = GradSink {
        mean_f: &mut out.d_mean_f,
        log_var_f: &mut out.d_logvar_f,
        mean_g: &mut out.d_mean_g,
        log_var_g: &mut out.d_logvar_g,
    };
    out.value = eval(kind, f, g, Some(&mut sink), 1.0)?;
    Ok(out)
}

/// Evaluates `D(f ‖ g)`; when `sink` is given, adds `scale · ∇D` into it.
///
/// Dimensions are not checked here.
pub(crate) fn eval(
    kind: DivergenceKind,
    f: GaussianView<'_>,
    g: GaussianView<'_>,
    sink: Option<&mut GradSink<'_>>,
    scale: f64,
) -> Result<f64> {
    match kind {
        DivergenceKind::Kl => Ok(kl_impl(f, g, sink, scale)),
        DivergenceKind::ReverseKl => {
            let mut swapped = sink.map(|s| s.swapped());
            Ok(kl_impl(g, f, swapped.as_mut(), scale))
        }
        DivergenceKind::Renyi(a) => renyi_impl(a.get(), f, g, sink, scale),
        DivergenceKind::NegLogElk => Ok(elk_impl(f, g, sink, scale)),
    }
}

fn kl_impl(
    f: GaussianView<'_>,
    g: GaussianView<'_>,
    mut sink: Option<&mut GradSink<'_>>,
    scale: f64,
) -> f64 {
    let mut total = 0.0;
    for i in 0..f.dim() {
        let vf = variance(f.log_var[i]);
        let vg = variance(g.log_var[i]);
        let diff = f.mean[i] - g.mean[i];
        let ratio = vf / vg;
        let maha = diff * diff / vg;
        total += 0.5 * ((g.log_var[i] - f.log_var[i]) - 1.0 + ratio + maha);
        if let Some(s) = sink.as_deref_mut() {
            let dm = scale * diff / vg;
            s.mean_f[i] += dm;
            s.mean_g[i] -= dm;
            s.log_var_f[i] += scale * 0.5 * (ratio - 1.0);
            s.log_var_g[i] += scale * 0.5 * (1.0 - ratio - maha);
        }
    }
    total
}

fn renyi_impl(
    alpha: f64,
    f: GaussianView<'_>,
    g: GaussianView<'_>,
    mut sink: Option<&mut GradSink<'_>>,
    scale: f64,
) -> Result<f64> {
    // 2 D = −1/(α(α−1)) Σ [ln m − (1−α) ℓ_f − α ℓ_g] + Σ Δ²/m,  m = α σ²_g + (1−α) σ²_f
    let c = -0.5 / (alpha * (alpha - 1.0));
    let beta = 1.0 - alpha;
    let mut total = 0.0;
    for i in 0..f.dim() {
        let vf = variance(f.log_var[i]);
        let vg = variance(g.log_var[i]);
        let mix = alpha * vg + beta * vf;
        if !(mix > 0.0) {
            return Err(Error::Domain(format!(
                "Rényi mixture variance {mix} is not positive in dimension {i} (alpha = {alpha})"
            )));
        }
        let diff = f.mean[i] - g.mean[i];
        let log_term = mix.ln() - beta * f.log_var[i] - alpha * g.log_var[i];
        total += c * log_term + 0.5 * diff * diff / mix;
        if let Some(s) = sink.as_deref_mut() {
            let dm = scale * diff / mix;
            s.mean_f[i] += dm;
            s.mean_g[i] -= dm;
            let quad = 0.5 * diff * diff / (mix * mix);
            let dmix_f = beta * vf;
            let dmix_g = alpha * vg;
            s.log_var_f[i] += scale * (c * (dmix_f / mix - beta) - quad * dmix_f);
            s.log_var_g[i] += scale * (c * (dmix_g / mix - alpha) - quad * dmix_g);
        }
    }
    Ok(total)
}

fn elk_impl(
    f: GaussianView<'_>,
    g: GaussianView<'_>,
    mut sink: Option<&mut GradSink<'_>>,
    scale: f64,
) -> f64 {
    let log_two_pi = (2.0 * PI).ln();
    let mut total = 0.0;
    for i in 0..f.dim() {
        let vf = variance(f.log_var[i]);
        let vg = variance(g.log_var[i]);
        let sum = vf + vg;
        let diff = f.mean[i] - g.mean[i];
        let maha = diff * diff / sum;
        total += sum.ln() + log_two_pi + maha;
        if let Some(s) = sink.as_deref_mut() {
            let dm = scale * 2.0 * diff / sum;
            s.mean_f[i] += dm;
            s.mean_g[i] -= dm;
            let common = (1.0 - maha) / sum;
            s.log_var_f[i] += scale * common * vf;
            s.log_var_g[i] += scale * common * vg;
        }
    }
    total
}

/// Divergence plus threshold: the penalty is `max(0, D(f ‖ g) − γ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConfig {
    pub kind: DivergenceKind,
    gamma: f64,
}

impl PenaltyConfig {
    pub fn new(kind: DivergenceKind, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "threshold gamma must be finite and >= 0, got {gamma}"
            )));
        }
        Ok(Self { kind, gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Thresholded order-violation penalty `max(0, D(f ‖ g) − γ)`.
pub fn penalty<'a, 'b>(
    cfg: &PenaltyConfig,
    f: impl Into<GaussianView<'a>>,
    g: impl Into<GaussianView<'b>>,
) -> Result<f64> {
    Ok((divergence(cfg.kind, f, g)? - cfg.gamma).max(0.0))
}

/// Penalty and its gradient; the gradient is zero wherever `D ≤ γ`.
pub fn penalty_with_grad<'a, 'b>(
    cfg: &PenaltyConfig,
    f: impl Into<GaussianView<'a>>,
    g: impl Into<GaussianView<'b>>,
) -> Result<GradPair> {
    let mut out = divergence_with_grad(cfg.kind, f, g)?;
    if out.value > cfg.gamma {
        out.value -= cfg.gamma;
    } else {
        out.value = 0.0;
        for v in [
            &mut out.d_mean_f,
            &mut out.d_logvar_f,
            &mut out.d_mean_g,
            &mut out.d_logvar_g,
        ] {
            v.iter_mut().for_each(|x| *x = 0.0);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::DiagGaussian;

    fn n1(mean: f64, var: f64) -> DiagGaussian {
        DiagGaussian::isotropic(vec![mean], var).unwrap()
    }

    #[test]
    fn kl_closed_form_examples() {
        let f = DiagGaussian::standard(4).unwrap();
        assert_eq!(kl(&f, &f).unwrap(), 0.0);
        // 0.5 (ln 4 − 1 + 1/4)
        let v = kl(&n1(0.0, 1.0), &n1(0.0, 4.0)).unwrap();
        assert!((v - 0.318_147_180_559_945_3).abs() < 1e-12, "{v}");
        assert!((kl(&n1(1.0, 1.0), &n1(0.0, 1.0)).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let f = DiagGaussian::standard(2).unwrap();
        let g = DiagGaussian::standard(3).unwrap();
        assert!(matches!(kl(&f, &g), Err(Error::InvalidArgument(_))));
        assert!(matches!(neg_log_elk(&f, &g), Err(Error::InvalidArgument(_))));
        assert!(renyi(0.5, &f, &g).is_err());
    }

    #[test]
    fn renyi_rejects_degenerate_alpha() {
        let f = n1(0.0, 1.0);
        assert!(matches!(renyi(0.0, &f, &f), Err(Error::InvalidArgument(_))));
        assert!(matches!(renyi(1.0, &f, &f), Err(Error::InvalidArgument(_))));
        assert!("renyi:1".parse::<DivergenceKind>().is_err());
    }

    #[test]
    fn renyi_mixture_variance_guard() {
        // α = 3: m = 3 σ²_g − 2 σ²_f = 3 − 8 < 0
        let f = n1(0.0, 4.0);
        let g = n1(0.0, 1.0);
        assert!(matches!(renyi(3.0, &f, &g), Err(Error::Domain(_))));
        assert!(renyi(3.0, &g, &f).is_ok());
        assert!(renyi(-0.5, &f, &g).is_ok());
    }

    #[test]
    fn renyi_examples() {
        let f = n1(0.0, 1.0);
        let g = n1(2.0, 3.0);
        assert_eq!(renyi(0.5, &f, &f).unwrap(), 0.0);
        assert_eq!(renyi(0.5, &f, &g).unwrap(), renyi(0.5, &g, &f).unwrap());
        let g4 = n1(0.0, 4.0);
        let r = renyi(0.999, &f, &g4).unwrap();
        assert!((r - kl(&f, &g4).unwrap()).abs() < 1e-2, "{r}");
    }

    #[test]
    fn elk_examples() {
        let f = n1(0.0, 1.0);
        let v = neg_log_elk(&f, &f).unwrap();
        assert!((v - (4.0 * PI).ln()).abs() < 1e-12);
        assert!((v - 2.531_024).abs() < 1e-6);
        let g = n1(0.3, 2.5);
        assert_eq!(neg_log_elk(&f, &g).unwrap(), neg_log_elk(&g, &f).unwrap());
    }

    #[test]
    fn dispatcher() {
        let f = n1(0.0, 1.0);
        let g = n1(0.0, 4.0);
        assert_eq!(divergence(DivergenceKind::Kl, &f, &g).unwrap(), kl(&f, &g).unwrap());
        let r = divergence(DivergenceKind::ReverseKl, &f, &g).unwrap();
        assert!((r - 0.5 * ((0.25f64).ln() - 1.0 + 4.0)).abs() < 1e-12);
        assert!((r - 0.806_853).abs() < 1e-6);
        let k = DivergenceKind::renyi(0.5).unwrap();
        assert_eq!(divergence(k, &f, &f).unwrap(), 0.0);
    }

    #[test]
    fn gradient_examples() {
        let f = DiagGaussian::new(vec![0.3, -1.0], vec![0.2, -0.4]).unwrap();
        let gp = divergence_with_grad(DivergenceKind::Kl, &f, &f).unwrap();
        assert!(gp.d_mean_f.iter().chain(&gp.d_mean_g).all(|x| *x == 0.0));
        let gp = divergence_with_grad(DivergenceKind::Kl, &n1(1.0, 1.0), &n1(0.0, 1.0)).unwrap();
        assert_eq!(gp.d_mean_f, vec![1.0]);
        assert_eq!(gp.d_mean_g, vec![-1.0]);
    }

    #[test]
    fn penalty_examples() {
        let f = n1(0.0, 1.0);
        let g = n1(0.0, 4.0);
        let cfg = PenaltyConfig::new(DivergenceKind::Kl, 0.1).unwrap();
        assert!((penalty(&cfg, &f, &g).unwrap() - 0.218_147_180_559_945_3).abs() < 1e-12);
        assert_eq!(penalty(&cfg, &f, &f).unwrap(), 0.0);
        // exactly at the kink: value 0, gradient 0
        let d = kl(&f, &g).unwrap();
        let at = PenaltyConfig::new(DivergenceKind::Kl, d).unwrap();
        let gp = penalty_with_grad(&at, &f, &g).unwrap();
        assert_eq!(gp.value, 0.0);
        assert!(gp.d_logvar_f.iter().all(|x| *x == 0.0));
        assert!(PenaltyConfig::new(DivergenceKind::Kl, -1.0).is_err());
    }

    #[test]
    fn kind_roundtrips_through_strings() {
        for k in [
            DivergenceKind::Kl,
            DivergenceKind::ReverseKl,
            DivergenceKind::NegLogElk,
            DivergenceKind::renyi(0.25).unwrap(),
            DivergenceKind::renyi(1.5).unwrap(),
        ] {
            assert_eq!(k.to_string().parse::<DivergenceKind>().unwrap(), k);
        }
    }
}
