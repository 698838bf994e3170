use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::numeric::{
    fd_grad, mc_kl, quad_elk_1d, quad_renyi_1d, strict_encapsulation_check,
    QUAD_DEFAULT_INTERVALS,
};
use super::support::{brute_closure, enumerate_sampler_support, SupportQuery};
use crate::density::{divergence, divergence_with_grad, DiagGaussian, DivergenceKind};
use crate::error::{Error, Result};
use crate::hierarchy::{HierarchyGraph, NegMethod};

/// One row of the verification table.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// `|a − b| ≤ rtol · max(|a|, |b|, 1)`.
pub fn rel_close(a: f64, b: f64, rtol: f64) -> bool {
    (a - b).abs() <= rtol * a.abs().max(b.abs()).max(1.0)
}

/// Random diagonal Gaussian with means in `[-2, 2]` and log-variances in
/// `[lv_lo, lv_hi]`.
pub fn random_gaussian<R: Rng + ?Sized>(d: usize, lv_lo: f64, lv_hi: f64, rng: &mut R) -> DiagGaussian {
    let mean = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
    let log_var = (0..d).map(|_| rng.random_range(lv_lo..lv_hi)).collect();
    DiagGaussian::new(mean, log_var).expect("finite parameters")
}

/// Random DAG on `n` nodes named `n0..`: each `i < j` gets edge `i → j`
/// with probability `p`.
pub fn random_dag<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Vec<(String, String)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((format!("n{i}"), format!("n{j}")));
            }
        }
    }
    edges
}

/// Finite-difference check of `divergence_with_grad` for one pair.
///
/// Returns the worst offending coordinate, if any.
pub fn check_divergence_grad(
    kind: DivergenceKind,
    f: &DiagGaussian,
    g: &DiagGaussian,
    rtol: f64,
) -> Result<Option<String>> {
    let d = f.dim();
    let an = divergence_with_grad(kind, f, g)?;
    let mut params = f.concat(g).mean().to_vec();
    params.extend_from_slice(f.log_var());
    params.extend_from_slice(g.log_var());
    // layout: μ_f, μ_g, ℓ_f, ℓ_g
    let eval = |x: &[f64]| {
        let fx = DiagGaussian::new(x[..d].to_vec(), x[2 * d..3 * d].to_vec()).unwrap();
        let gx = DiagGaussian::new(x[d..2 * d].to_vec(), x[3 * d..].to_vec()).unwrap();
        divergence(kind, &fx, &gx).unwrap_or(f64::NAN)
    };
    let fd = fd_grad(eval, &params, 1e-5)?;
    let analytic: Vec<f64> = [&an.d_mean_f, &an.d_mean_g, &an.d_logvar_f, &an.d_logvar_g]
        .into_iter()
        .flatten()
        .copied()
        .collect();
    Ok(analytic
        .iter()
        .zip(&fd)
        .enumerate()
        .find(|(_, (a, n))| !rel_close(**a, **n, rtol))
        .map(|(i, (a, n))| format!("{kind} coordinate {i}: analytic {a}, fd {n}")))
}

fn row(name: &str, passed: bool, detail: String) -> OracleCheck {
    OracleCheck {
        name: name.to_owned(),
        passed,
        detail,
    }
}

fn n1(mu: f64, var: f64) -> DiagGaussian {
    DiagGaussian::isotropic(vec![mu], var).expect("valid")
}

/// Quick cross-check of the closed forms, gradients, closure and samplers
/// against the brute-force oracles.
pub fn battery(seed: u64) -> Result<Vec<OracleCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let (f, g) = (n1(0.0, 1.0), n1(0.0, 4.0));
    let est = mc_kl(&f, &g, 200_000, &mut rng)?;
    let cf = divergence(DivergenceKind::Kl, &f, &g)?;
    out.push(row(
        "kl vs monte carlo (1-d)",
        est.agrees(cf, 3.0),
        format!("closed {cf:.6}, mc {:.6} ± {:.1e}", est.mean, est.std_error),
    ));

    let est = mc_kl(&g, &f, 200_000, &mut rng)?;
    let cf = divergence(DivergenceKind::ReverseKl, &f, &g)?;
    out.push(row(
        "reverse kl vs monte carlo (1-d)",
        est.agrees(cf, 3.0),
        format!("closed {cf:.6}, mc {:.6} ± {:.1e}", est.mean, est.std_error),
    ));

    let (f5, g5) = (random_gaussian(5, -1.0, 1.0, &mut rng), random_gaussian(5, -1.0, 1.0, &mut rng));
    let est = mc_kl(&f5, &g5, 200_000, &mut rng)?;
    let cf = divergence(DivergenceKind::Kl, &f5, &g5)?;
    out.push(row(
        "kl vs monte carlo (5-d)",
        est.agrees(cf, 3.0),
        format!("closed {cf:.6}, mc {:.6} ± {:.1e}", est.mean, est.std_error),
    ));

    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (a, b) = (random_gaussian(1, -1.5, 1.5, &mut rng), random_gaussian(1, -1.5, 1.5, &mut rng));
        let q = quad_elk_1d(&a, &b, QUAD_DEFAULT_INTERVALS)?;
        worst = worst.max((q - divergence(DivergenceKind::NegLogElk, &a, &b)?).abs());
    }
    out.push(row("elk vs quadrature", worst < 1e-6, format!("max abs error {worst:.2e}")));

    let mut worst: f64 = 0.0;
    for alpha in [0.25, 0.5, 2.0] {
        for _ in 0..10 {
            let (a, b) = (random_gaussian(1, -0.5, 0.5, &mut rng), random_gaussian(1, -0.5, 0.5, &mut rng));
            let q = match quad_renyi_1d(&a, &b, alpha, QUAD_DEFAULT_INTERVALS) {
                Ok(q) => q,
                // outside the domain; the closed form rejects these too
                Err(Error::Oracle(_)) => continue,
                Err(e) => return Err(e),
            };
            let kind = DivergenceKind::renyi(alpha)?;
            worst = worst.max((q - divergence(kind, &a, &b)?).abs());
        }
    }
    out.push(row("renyi vs quadrature", worst < 1e-6, format!("max abs error {worst:.2e}")));

    for kind in [
        DivergenceKind::Kl,
        DivergenceKind::ReverseKl,
        DivergenceKind::renyi(0.5)?,
        DivergenceKind::renyi(2.0)?,
        DivergenceKind::NegLogElk,
    ] {
        let mut failure = None;
        for _ in 0..25 {
            // v_f ≤ 1 < 2 v_g keeps α = 2 inside its domain
            let f = random_gaussian(5, -1.0, 0.0, &mut rng);
            let g = random_gaussian(5, -0.5, 1.0, &mut rng);
            if let Some(msg) = check_divergence_grad(kind, &f, &g, 1e-4)? {
                failure = Some(msg);
                break;
            }
        }
        out.push(row(
            &format!("{kind} gradient vs finite differences"),
            failure.is_none(),
            failure.unwrap_or_else(|| "25 instances".into()),
        ));
    }

    let mut mismatch = None;
    for trial in 0..10 {
        let edges = random_dag(30, 0.08, &mut rng);
        if edges.is_empty() {
            continue;
        }
        let brute = brute_closure(&edges)?;
        let closure = HierarchyGraph::from_edges(&edges)?.transitive_closure()?;
        let fast: std::collections::BTreeSet<(String, String)> = closure
            .pairs()
            .iter()
            .map(|&(u, v)| (closure.name(u).to_owned(), closure.name(v).to_owned()))
            .collect();
        if fast != brute {
            mismatch = Some(format!("trial {trial}: {} vs {} pairs", fast.len(), brute.len()));
            break;
        }
    }
    out.push(row(
        "closure vs brute force",
        mismatch.is_none(),
        mismatch.unwrap_or_else(|| "10 random DAGs".into()),
    ));

    let tree: Vec<(String, String)> = [("a", "r"), ("b", "r"), ("c", "a"), ("d", "a")]
        .iter()
        .map(|(x, y)| (x.to_string(), y.to_string()))
        .collect();
    let s4 = enumerate_sampler_support(&tree, NegMethod::S4, &SupportQuery::Anchor("a".into(), "c".into()))?;
    let want = [(("d".to_string(), "c".to_string()), 1.0)];
    out.push(row(
        "s4 support on anchor (a, c)",
        s4.iter().map(|(k, v)| (k.clone(), *v)).eq(want.iter().cloned()),
        format!("{s4:?}"),
    ));

    let inside = strict_encapsulation_check(&n1(0.0, 0.25), &n1(0.0, 4.0), 0.05, 2001)?;
    let apart = strict_encapsulation_check(&n1(3.0, 0.25), &n1(0.0, 0.25), 0.05, 2001)?;
    out.push(row(
        "encapsulation grid",
        inside.contained && !apart.contained,
        format!("nested {}, disjoint {}", inside.contained, apart.contained),
    ));

    Ok(out)
}
