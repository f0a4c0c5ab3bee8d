use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex time-frequency matrix, indexed `[f][t]`.
pub type ComplexMatrix = Vec<Vec<Complex64>>;

fn check_shape(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Result<usize> {
    let same = a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.len() == y.len());
    if !same {
        return Err(Error::Validation("spectral shapes differ".into()));
    }
    let count: usize = a.iter().map(Vec::len).sum();
    if count == 0 {
        return Err(Error::Validation("empty spectral input".into()));
    }
    Ok(count)
}

fn pairs<'a>(
    a: &'a [Vec<Complex64>],
    b: &'a [Vec<Complex64>],
) -> impl Iterator<Item = (&'a Complex64, &'a Complex64)> {
    a.iter().zip(b).flat_map(|(x, y)| x.iter().zip(y))
}

/// Mean squared error between an estimated and an ideal complex ratio mask.
pub fn crm_mse(est: &[Vec<Complex64>], ideal: &[Vec<Complex64>]) -> Result<f64> {
    let n = check_shape(est, ideal)?;
    Ok(pairs(est, ideal).map(|(e, i)| (e - i).norm_sqr()).sum::<f64>() / n as f64)
}

/// Mean complex and magnitude errors `(L_c, L_m)`.
fn complex_and_magnitude(est: &[Vec<Complex64>], reference: &[Vec<Complex64>]) -> Result<(f64, f64)> {
    let n = check_shape(est, reference)? as f64;
    let (mut lc, mut lm) = (0.0, 0.0);
    for (e, r) in pairs(est, reference) {
        lc += (e.re - r.re).powi(2) + (e.im - r.im).powi(2);
        lm += (e.norm() - r.norm()).powi(2);
    }
    Ok((lc / n, lm / n))
}

/// `α·L_c + (1 - α)·L_m`, mean-reduced over bins.
pub fn complex_magnitude_loss(
    est: &[Vec<Complex64>],
    reference: &[Vec<Complex64>],
    alpha: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("weight {alpha} outside [0, 1]")));
    }
    let (lc, lm) = complex_and_magnitude(est, reference)?;
    Ok(alpha * lc + (1.0 - alpha) * lm)
}

/// `Σ_i w_i·(L_c(x̂_i, x) + L_m(x̂_i, x))` over refinement stages.
pub fn stagewise_loss(
    stages: &[ComplexMatrix],
    reference: &[Vec<Complex64>],
    weights: &[f64],
) -> Result<f64> {
    if stages.is_empty() || stages.len() != weights.len() {
        return Err(Error::Validation(format!(
            "{} stages but {} weights",
            stages.len(),
            weights.len()
        )));
    }
    let mut total = 0.0;
    for (stage, w) in stages.iter().zip(weights) {
        let (lc, lm) = complex_and_magnitude(stage, reference)?;
        total += w * (lc + lm);
    }
    Ok(total)
}
