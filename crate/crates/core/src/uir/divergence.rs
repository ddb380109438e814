use crate::error::{Error, Result};

const NORMALIZATION_TOLERANCE: f64 = 1e-6;

fn check_distribution(p: &[f64], name: &str) -> Result<()> {
    if p.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "{name} has negative or non-finite entries"
        )));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::InvalidParameter(format!(
            "{name} sums to {total}, not 1"
        )));
    }
    Ok(())
}

/// `sum p ln(p/m)` with `0 ln 0 = 0`.
fn kl_to_mixture(p: &[f64], m: &[f64]) -> f64 {
    p.iter()
        .zip(m)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &mi)| pi * (pi / mi).ln())
        .sum()
}

/// Jensen-Shannon divergence in nats, clamped to `[0, ln 2]` against rounding.
pub fn js_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension(format!(
            "distributions have lengths {} and {}",
            p.len(),
            q.len()
        )));
    }
    if p.is_empty() {
        return Err(Error::Dimension("empty distributions".into()));
    }
    check_distribution(p, "p")?;
    check_distribution(q, "q")?;
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    let js = 0.5 * kl_to_mixture(p, &m) + 0.5 * kl_to_mixture(q, &m);
    Ok(js.clamp(0.0, std::f64::consts::LN_2))
}

/// Symmetric matrix of pairwise divergences, zero on the diagonal.
pub fn pairwise_js(dists: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
    let k = dists.len();
    let mut out = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let d = js_divergence(dists[i], dists[j])?;
            out[i][j] = d;
            out[j][i] = d;
        }
    }
    Ok(out)
}

/// Mean divergence over all unordered pairs.
pub fn ensemble_uncertainty(dists: &[&[f64]]) -> Result<f64> {
    let k = dists.len();
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "an ensemble needs at least 2 runs, got {k}"
        )));
    }
    Ok(mean_upper(&pairwise_js(dists)?))
}

pub(crate) fn mean_upper(matrix: &[Vec<f64>]) -> f64 {
    let k = matrix.len();
    let mut sum = 0.0;
    for (i, row) in matrix.iter().enumerate() {
        sum += row[i + 1..].iter().sum::<f64>();
    }
    2.0 * sum / (k * (k - 1)) as f64
}
