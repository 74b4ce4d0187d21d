//! Non-circular Haar MODWT.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulate::TimeSeries;

/// Level-`j` Haar wavelet filter, normalized so that white noise of variance
/// σ² yields coefficients of variance σ²/2^j.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarFilter {
    level: usize,
    taps: Vec<f64>,
}

impl HaarFilter {
    pub fn new(level: usize) -> Result<Self> {
        if level == 0 || level > 60 {
            return Err(Error::InvalidArgument(format!("Haar level {level}")));
        }
        let width = 1usize << level;
        let half = width / 2;
        let a = 1.0 / width as f64;
        let taps = (0..width).map(|l| if l < half { a } else { -a }).collect();
        Ok(HaarFilter { level, taps })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn scale(&self) -> f64 {
        (1u64 << self.level) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletLevel {
    pub scale: f64,
    pub coefficients: Vec<f64>,
}

impl WaveletLevel {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletDecomposition {
    pub levels: Vec<WaveletLevel>,
    pub source_len: usize,
}

impl WaveletDecomposition {
    pub fn scales(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.scale).collect()
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }
}

/// `⌊log₂ T⌋`.
pub fn max_scales(t: usize) -> Result<usize> {
    if t < 2 {
        return Err(Error::TooShort { needed: 2, got: t });
    }
    Ok((usize::BITS - 1 - t.leading_zeros()) as usize)
}

/// Levels `1..=levels` of the transform, each holding the `T − 2^j + 1`
/// coefficients whose filter support lies inside the sample.
///
/// Computed by the pyramid of scaling averages
/// `V_j[k] = (V_{j−1}[k] + V_{j−1}[k+2^{j−1}]) / 2` with
/// `W_j[k] = (V_{j−1}[k+2^{j−1}] − V_{j−1}[k]) / 2`, which costs O(T) per level
/// and avoids the cancellation of global running sums.
pub fn modwt_haar(ts: &TimeSeries, levels: usize) -> Result<WaveletDecomposition> {
    modwt_haar_slice(ts.values(), levels)
}

pub(crate) fn modwt_haar_slice(y: &[f64], levels: usize) -> Result<WaveletDecomposition> {
    let jmax = max_scales(y.len())?;
    if levels == 0 || levels > jmax {
        return Err(Error::InvalidArgument(format!(
            "{levels} levels requested, series of length {} admits 1..={jmax}",
            y.len()
        )));
    }
    let mut v = y.to_vec();
    let mut out = Vec::with_capacity(levels);
    for j in 1..=levels {
        let half = 1usize << (j - 1);
        let m = v.len() - half;
        let mut w = Vec::with_capacity(m);
        // Ascending k reads v[k + half] before it is overwritten.
        for k in 0..m {
            let (a, b) = (v[k], v[k + half]);
            w.push(0.5 * (b - a));
            v[k] = 0.5 * (b + a);
        }
        v.truncate(m);
        out.push(WaveletLevel {
            scale: (1u64 << j) as f64,
            coefficients: w,
        });
    }
    Ok(WaveletDecomposition {
        levels: out,
        source_len: y.len(),
    })
}

/// Sum of squared coefficients and coefficient count of one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelEnergy {
    pub scale: f64,
    pub sum_sq: f64,
    pub count: usize,
}

/// Per-level sums of squared coefficients from a single pass over the
/// series, without storing the transform.
///
/// Level `j` keeps a ring of the last `2^{j−1}` scaling averages, so the
/// working set stays small; the arithmetic and the summation order match
/// [`modwt_haar`], so the sums are bit-identical to squaring its output.
pub fn haar_energies(ts: &TimeSeries, levels: usize) -> Result<Vec<LevelEnergy>> {
    let y = ts.values();
    let jmax = max_scales(y.len())?;
    if levels == 0 || levels > jmax {
        return Err(Error::InvalidArgument(format!(
            "{levels} levels requested, series of length {} admits 1..={jmax}",
            y.len()
        )));
    }
    let mut rings: Vec<Vec<f64>> = (0..levels).map(|j| vec![0.0; 1 << j]).collect();
    let mut seen = vec![0usize; levels];
    let mut sums = vec![0.0; levels];
    for &x in y {
        let mut v = x;
        for j in 0..levels {
            let i = seen[j];
            seen[j] += 1;
            let ring = &mut rings[j];
            // The slot holds V_j[i − 2^j] until it is overwritten.
            let slot = i & (ring.len() - 1);
            let a = ring[slot];
            ring[slot] = v;
            if i < ring.len() {
                break;
            }
            let w = 0.5 * (v - a);
            sums[j] += w * w;
            v = 0.5 * (v + a);
        }
    }
    Ok((0..levels)
        .map(|j| LevelEnergy {
            scale: (1u64 << (j + 1)) as f64,
            sum_sq: sums[j],
            count: y.len() + 1 - (1 << (j + 1)),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn direct(y: &[f64], j: usize) -> Vec<f64> {
        let h = HaarFilter::new(j).unwrap();
        let l = h.taps().len();
        (0..=y.len() - l)
            .map(|t| (0..l).map(|i| h.taps()[i] * y[t + l - 1 - i]).sum())
            .collect()
    }

    #[test]
    fn filter_moments() {
        for j in 1..12 {
            let h = HaarFilter::new(j).unwrap();
            let s: f64 = h.taps().iter().sum();
            let s2: f64 = h.taps().iter().map(|x| x * x).sum();
            assert_eq!(s, 0.0);
            assert!((s2 - 1.0 / h.scale()).abs() < 1e-15);
        }
    }

    #[test]
    fn scale_counts() {
        assert_eq!(max_scales(10_000).unwrap(), 13);
        assert_eq!(max_scales(1000).unwrap(), 9);
        assert_eq!(max_scales(2).unwrap(), 1);
        assert!(max_scales(1).is_err());
    }

    #[test]
    fn small_examples() {
        let d = modwt_haar_slice(&[1.0; 4], 1).unwrap();
        assert_eq!(d.levels[0].coefficients, vec![0.0; 3]);
        let d = modwt_haar_slice(&[0.0, 1.0], 1).unwrap();
        assert_eq!(d.levels[0].coefficients, vec![0.5]);
        let ramp: Vec<f64> = (1..=20).map(f64::from).collect();
        let d = modwt_haar_slice(&ramp, 2).unwrap();
        assert_eq!(d.levels[1].len(), 17);
        assert!(d.levels[1].coefficients.iter().all(|w| (w - 1.0).abs() < 1e-14));
        assert!(modwt_haar_slice(&ramp, 5).is_err());
        assert!(modwt_haar_slice(&ramp, 0).is_err());
    }

    proptest! {
        #[test]
        fn matches_direct_convolution(y in proptest::collection::vec(-1.0f64..1.0, 2..=64)) {
            let jmax = max_scales(y.len()).unwrap();
            let d = modwt_haar_slice(&y, jmax).unwrap();
            for (j, lvl) in d.levels.iter().enumerate() {
                let want = direct(&y, j + 1);
                prop_assert_eq!(lvl.len(), y.len() + 1 - (1 << (j + 1)));
                for (a, b) in lvl.coefficients.iter().zip(&want) {
                    prop_assert!((a - b).abs() <= 1e-13);
                }
            }
        }

        #[test]
        fn linear_and_shift_invariant(
            y in proptest::collection::vec(-10.0f64..10.0, 40),
            x in proptest::collection::vec(-10.0f64..10.0, 40),
            a in -5.0f64..5.0, b in -5.0f64..5.0, c in -1e3f64..1e3,
        ) {
            let comb: Vec<f64> = y.iter().zip(&x).map(|(u, v)| a * u + b * v).collect();
            let shifted: Vec<f64> = y.iter().map(|u| u + c).collect();
            let (dy, dx) = (modwt_haar_slice(&y, 5).unwrap(), modwt_haar_slice(&x, 5).unwrap());
            let dc = modwt_haar_slice(&comb, 5).unwrap();
            let ds = modwt_haar_slice(&shifted, 5).unwrap();
            for j in 0..5 {
                for t in 0..dc.levels[j].len() {
                    let want = a * dy.levels[j].coefficients[t] + b * dx.levels[j].coefficients[t];
                    prop_assert!((dc.levels[j].coefficients[t] - want).abs() <= 1e-12 * 100.0, "{} vs {}", dc.levels[j].coefficients[t], want);
                    prop_assert!((ds.levels[j].coefficients[t] - dy.levels[j].coefficients[t]).abs() <= 1e-12 * (1.0 + c.abs()));
                }
            }
        }
    }
}
