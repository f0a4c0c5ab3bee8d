//! Signal-level evaluation: SNR, SI-SNR, permutation-invariant selection,
//! STFT and spectral training losses.

mod losses;
mod stft;

use serde::{Deserialize, Serialize};

pub use losses::{complex_magnitude_loss, crm_mse, stagewise_loss, ComplexMatrix};
pub use stft::{istft, stft, Spectrogram, StftParams};

use crate::error::{Error, Result};

/// Ratios are clamped to `±CLAMP_DB`.
pub const CLAMP_DB: f64 = 60.0;

/// Maximum source count for exhaustive permutation search.
pub const MAX_PIT_SOURCES: usize = 6;

/// A decibel value after clamping; `clamped` is set when the raw value was
/// outside `±CLAMP_DB` or infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClampedDb {
    pub value: f64,
    pub clamped: bool,
}

impl ClampedDb {
    fn from_ratio(num: f64, den: f64) -> ClampedDb {
        let raw = if den == 0.0 {
            f64::INFINITY
        } else {
            10.0 * (num / den).log10()
        };
        let value = raw.clamp(-CLAMP_DB, CLAMP_DB);
        ClampedDb {
            value,
            clamped: value != raw,
        }
    }

    fn negated(self) -> ClampedDb {
        ClampedDb {
            value: -self.value,
            clamped: self.clamped,
        }
    }
}

fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn same_len(reference: &[f64], estimate: &[f64]) -> Result<()> {
    if reference.len() != estimate.len() {
        return Err(Error::Validation(format!(
            "length mismatch: reference {} vs estimate {}",
            reference.len(),
            estimate.len()
        )));
    }
    if reference.is_empty() {
        return Err(Error::Validation("empty signals".into()));
    }
    Ok(())
}

/// Negative SNR, `-10·log10(‖x‖² / ‖x - x̂‖²)`.
pub fn snr_loss(reference: &[f64], estimate: &[f64]) -> Result<ClampedDb> {
    same_len(reference, estimate)?;
    let signal = energy(reference);
    if signal == 0.0 {
        return Err(Error::Domain("reference is all zero".into()));
    }
    let noise: f64 = reference
        .iter()
        .zip(estimate)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(ClampedDb::from_ratio(signal, noise).negated())
}

/// Scale-invariant SNR. With `zero_mean`, both signals are centered first.
pub fn si_snr(reference: &[f64], estimate: &[f64], zero_mean: bool) -> Result<ClampedDb> {
    same_len(reference, estimate)?;
    let center = |x: &[f64]| -> Vec<f64> {
        if zero_mean {
            let m = x.iter().sum::<f64>() / x.len() as f64;
            x.iter().map(|v| v - m).collect()
        } else {
            x.to_vec()
        }
    };
    let r = center(reference);
    let e = center(estimate);
    let rr = energy(&r);
    if rr == 0.0 || energy(&e) == 0.0 {
        return Err(Error::Domain("SI-SNR needs nonzero reference and estimate".into()));
    }
    let k = r.iter().zip(&e).map(|(a, b)| a * b).sum::<f64>() / rr;
    let target = k * k * rr;
    let residual: f64 = r
        .iter()
        .zip(&e)
        .map(|(a, b)| {
            let d = b - k * a;
            d * d
        })
        .sum();
    Ok(ClampedDb::from_ratio(target, residual))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    /// `assignment[i]` is the estimate paired with reference `i`.
    pub assignment: Vec<usize>,
    pub pair_losses: Vec<f64>,
    pub total: f64,
}

/// Assignment of estimates to references minimizing the summed pairwise
/// loss, by exhaustive search in lexicographic order (first minimum wins).
pub fn pit_select<F>(refs: &[Vec<f64>], ests: &[Vec<f64>], pairwise: F) -> Result<PermutationResult>
where
    F: Fn(&[f64], &[f64]) -> Result<f64>,
{
    let m = refs.len();
    if m != ests.len() {
        return Err(Error::Validation(format!(
            "{m} references but {} estimates",
            ests.len()
        )));
    }
    if m == 0 {
        return Err(Error::Validation("no sources".into()));
    }
    if m > MAX_PIT_SOURCES {
        return Err(Error::Size(format!(
            "{m} sources exceeds the exhaustive search limit of {MAX_PIT_SOURCES}"
        )));
    }
    let mut cost = vec![vec![0.0; m]; m];
    for (i, r) in refs.iter().enumerate() {
        for (j, e) in ests.iter().enumerate() {
            cost[i][j] = pairwise(r, e)?;
        }
    }
    let mut perm: Vec<usize> = (0..m).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let total: f64 = perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, perm.clone()));
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    let (total, assignment) = best.expect("at least one permutation");
    let pair_losses = assignment.iter().enumerate().map(|(i, &j)| cost[i][j]).collect();
    Ok(PermutationResult {
        assignment,
        pair_losses,
        total,
    })
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("pivot exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_examples() {
        let x = [1.0, -2.0, 3.0, 0.5];
        let r = snr_loss(&x, &x).unwrap();
        assert_eq!(r, ClampedDb { value: -60.0, clamped: true });
        let r = snr_loss(&x, &[0.0; 4]).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(!r.clamped);
        assert!(matches!(snr_loss(&[0.0; 4], &x), Err(Error::Domain(_))));
        assert!(matches!(snr_loss(&x, &[0.0; 3]), Err(Error::Validation(_))));
    }

    #[test]
    fn si_snr_examples() {
        assert_eq!(si_snr(&[1.0, 0.0], &[1.0, 1.0], false).unwrap().value, 0.0);
        let x = [1.0, -2.0, 3.0, 0.5];
        let twice: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let r = si_snr(&x, &twice, true).unwrap();
        assert_eq!(r.value, 60.0);
        assert!(r.clamped);
        assert!(matches!(si_snr(&x, &[0.0; 4], true), Err(Error::Domain(_))));
    }

    #[test]
    fn permutations_are_lexicographic() {
        let mut p = vec![0, 1, 2];
        let mut seen = vec![p.clone()];
        while next_permutation(&mut p) {
            seen.push(p.clone());
        }
        assert_eq!(
            seen,
            [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]]
        );
    }

    #[test]
    fn pit_swap_and_identity() {
        let a = vec![1.0, 2.0, -1.0, 0.0];
        let b = vec![0.0, -1.0, 1.0, 3.0];
        let loss = |r: &[f64], e: &[f64]| snr_loss(r, e).map(|d| d.value);
        let res = pit_select(&[a.clone(), b.clone()], &[b.clone(), a.clone()], loss).unwrap();
        assert_eq!(res.assignment, [1, 0]);
        assert_eq!(res.total, -120.0);
        let res = pit_select(std::slice::from_ref(&a), std::slice::from_ref(&a), loss).unwrap();
        assert_eq!(res.assignment, [0]);
        let seven = vec![a.clone(); 7];
        assert!(matches!(pit_select(&seven, &seven, loss), Err(Error::Size(_))));
    }
}
