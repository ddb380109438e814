use crate::error::{Error, Result};

fn check_vectors(vectors: &[&[f64]]) -> Result<usize> {
    if vectors.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 feature vectors, got {}",
            vectors.len()
        )));
    }
    let d = vectors[0].len();
    if d == 0 {
        return Err(Error::Dimension("feature vectors are empty".into()));
    }
    if let Some(v) = vectors.iter().find(|v| v.len() != d) {
        return Err(Error::Dimension(format!(
            "feature vectors have dimensions {d} and {}",
            v.len()
        )));
    }
    if vectors.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
        return Err(Error::InvalidParameter(
            "feature vectors must be finite".into(),
        ));
    }
    Ok(d)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Coordinate-wise Hodges-Lehmann estimate: the median of all midpoints
/// `(h_i + h_j) / 2` over pairs `i < j`.
pub fn hl_estimate(vectors: &[&[f64]]) -> Result<Vec<f64>> {
    let d = check_vectors(vectors)?;
    let k = vectors.len();
    let mut mids = Vec::with_capacity(k * (k - 1) / 2);
    Ok((0..d)
        .map(|c| {
            mids.clear();
            for i in 0..k {
                for j in i + 1..k {
                    mids.push(0.5 * (vectors[i][c] + vectors[j][c]));
                }
            }
            median(&mut mids)
        })
        .collect())
}

/// Mean squared distance to `estimate`, divided by the dimension.
pub fn hl_dispersion(vectors: &[&[f64]], estimate: &[f64]) -> Result<f64> {
    let d = check_vectors(vectors)?;
    if estimate.len() != d {
        return Err(Error::Dimension(format!(
            "estimate has dimension {} but vectors have {d}",
            estimate.len()
        )));
    }
    let total: f64 = vectors
        .iter()
        .map(|v| {
            v.iter()
                .zip(estimate)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum();
    Ok(total / vectors.len() as f64 / d as f64)
}
