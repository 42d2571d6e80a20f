//! Splitting of the sorted parameter set into contiguous subsets and
//! upper-median bookkeeping.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum PartitionError {
    #[error("parameter values must be strictly increasing (violated at index {index})")]
    NotIncreasing { index: usize },
    #[error("parameter set must not be empty")]
    Empty,
    #[error("cannot split {n_params} parameters into {subsets} subsets")]
    InvalidPartition { n_params: usize, subsets: usize },
    #[error("subset index {index} out of range (have {n_subsets} subsets)")]
    InvalidSubset { index: usize, n_subsets: usize },
    #[error("upper median of an empty set is undefined")]
    EmptyMedian,
    #[error("uniform grid needs at least 2 points and min < max (got min={min}, max={max}, count={count})")]
    InvalidGrid { min: f64, max: f64, count: usize },
}

/// Strictly increasing set of shear moduli.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    values: Vec<f64>,
}

impl ParameterSet {
    pub fn new(values: Vec<f64>) -> Result<Self, PartitionError> {
        if values.is_empty() {
            return Err(PartitionError::Empty);
        }
        for i in 1..values.len() {
            if !(values[i] > values[i - 1]) {
                return Err(PartitionError::NotIncreasing { index: i });
            }
        }
        Ok(Self { values })
    }

    /// Uniformly spaced grid inclusive of both endpoints.
    pub fn uniform(min: f64, max: f64, count: usize) -> Result<Self, PartitionError> {
        if count < 2 || !(max > min) {
            return Err(PartitionError::InvalidGrid { min, max, count });
        }
        let step = (max - min) / (count as f64 - 1.0);
        let values = (0..count).map(|i| min + step * i as f64).collect();
        Self::new(values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Split into `subsets` contiguous index ranges whose sizes differ by at
    /// most one; when the division is uneven the leading subsets take the
    /// extra element.
    pub fn split(&self, subsets: usize) -> Result<ParameterPartition, PartitionError> {
        if subsets == 0 || subsets > self.len() {
            return Err(PartitionError::InvalidPartition {
                n_params: self.len(),
                subsets,
            });
        }
        let base = self.len() / subsets;
        let remainder = self.len() % subsets;
        let mut boundaries = Vec::with_capacity(subsets + 1);
        boundaries.push(0);
        let mut cursor = 0;
        for k in 0..subsets {
            cursor += base + usize::from(k < remainder);
            boundaries.push(cursor);
        }
        Ok(ParameterPartition {
            parent: self.clone(),
            boundaries,
        })
    }
}

/// 1-based index of the upper median of a sorted set of size `n`:
/// `floor(n/2) + 1`.
pub fn upper_median_index(n: usize) -> Result<usize, PartitionError> {
    if n == 0 {
        return Err(PartitionError::EmptyMedian);
    }
    Ok(n / 2 + 1)
}

/// A contiguous balanced partition of a [`ParameterSet`] with the upper
/// median located in every subset.
#[derive(Debug, Clone)]
pub struct ParameterPartition {
    parent: ParameterSet,
    boundaries: Vec<usize>,
}

impl ParameterPartition {
    pub fn parent(&self) -> &ParameterSet {
        &self.parent
    }

    pub fn n_subsets(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn subset_range(&self, k: usize) -> Result<std::ops::Range<usize>, PartitionError> {
        if k >= self.n_subsets() {
            return Err(PartitionError::InvalidSubset {
                index: k,
                n_subsets: self.n_subsets(),
            });
        }
        Ok(self.boundaries[k]..self.boundaries[k + 1])
    }

    pub fn subset_len(&self, k: usize) -> Result<usize, PartitionError> {
        Ok(self.subset_range(k)?.len())
    }

    pub fn subset_values(&self, k: usize) -> Result<&[f64], PartitionError> {
        Ok(&self.parent.values[self.subset_range(k)?])
    }

    /// 0-based local index of the upper median inside subset `k`.
    pub fn median_local(&self, k: usize) -> Result<usize, PartitionError> {
        let n = self.subset_len(k)?;
        Ok(upper_median_index(n).expect("subsets are nonempty") - 1)
    }

    /// 0-based global index of the upper median of subset `k`.
    pub fn median_global(&self, k: usize) -> Result<usize, PartitionError> {
        Ok(self.boundaries[k] + self.median_local(k)?)
    }

    pub fn median_value(&self, k: usize) -> Result<f64, PartitionError> {
        Ok(self.parent.values[self.median_global(k)?])
    }

    /// Subset containing global parameter index `i`.
    pub fn subset_of(&self, i: usize) -> Result<usize, PartitionError> {
        if i >= self.parent.len() {
            return Err(PartitionError::InvalidSubset {
                index: i,
                n_subsets: self.n_subsets(),
            });
        }
        let k = match self.boundaries.binary_search(&i) {
            Ok(pos) => pos,
            Err(pos) => pos - 1,
        };
        Ok(k.min(self.n_subsets() - 1))
    }

    /// Shift diagonal and raw parameter values of subset `k`:
    /// `D[i] = mu_i - mu_ref`, `v[i] = mu_i`.
    pub fn subset_diag(
        &self,
        k: usize,
        mu_ref: f64,
    ) -> Result<(Vec<f64>, Vec<f64>), PartitionError> {
        let values = self.subset_values(k)?;
        let d = values.iter().map(|mu| mu - mu_ref).collect();
        Ok((d, values.to_vec()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_1500_into_15_subsets_of_100() {
        let set = ParameterSet::uniform(20000.0, 60000.0, 1500).unwrap();
        let p = set.split(15).unwrap();
        for k in 0..15 {
            assert_eq!(p.subset_len(k).unwrap(), 100);
        }
    }

    #[test]
    fn split_balances_front_loaded() {
        let set = ParameterSet::new(vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let p = set.split(2).unwrap();
        assert_eq!(p.subset_len(0).unwrap(), 3);
        assert_eq!(p.subset_len(1).unwrap(), 2);
    }

    #[test]
    fn split_into_singletons() {
        let set = ParameterSet::new(vec![1.0, 2.0, 3.0]).unwrap();
        let p = set.split(3).unwrap();
        for k in 0..3 {
            assert_eq!(p.subset_len(k).unwrap(), 1);
            assert_eq!(p.median_local(k).unwrap(), 0);
            assert_eq!(p.median_value(k).unwrap(), set.value(k));
        }
    }

    #[test]
    fn split_rejects_bad_counts() {
        let set = ParameterSet::new(vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            set.split(0),
            Err(PartitionError::InvalidPartition { .. })
        ));
        assert!(matches!(
            set.split(3),
            Err(PartitionError::InvalidPartition { .. })
        ));
    }

    #[test]
    fn upper_median_examples() {
        assert_eq!(upper_median_index(100).unwrap(), 51);
        assert_eq!(upper_median_index(5).unwrap(), 3);
        assert_eq!(upper_median_index(1).unwrap(), 1);
        assert!(matches!(
            upper_median_index(0),
            Err(PartitionError::EmptyMedian)
        ));
    }

    #[test]
    fn subset_diag_zero_reference() {
        let set = ParameterSet::new(vec![2.0, 4.0, 6.0]).unwrap();
        let p = set.split(1).unwrap();
        let (d, v) = p.subset_diag(0, 0.0).unwrap();
        assert_eq!(d, vec![2.0, 4.0, 6.0]);
        assert_eq!(v, vec![2.0, 4.0, 6.0]);
    }

    #[test]
    fn subset_diag_shifted_reference() {
        let set = ParameterSet::new(vec![2.0, 4.0, 6.0]).unwrap();
        let p = set.split(1).unwrap();
        let (d, _) = p.subset_diag(0, 4.0).unwrap();
        assert_eq!(d, vec![-2.0, 0.0, 2.0]);
    }

    #[test]
    fn subset_diag_on_paper_grid() {
        let set = ParameterSet::uniform(20000.0, 60000.0, 10).unwrap();
        let p = set.split(2).unwrap();
        let mu_ref = 30000.0;
        let (d, v) = p.subset_diag(1, mu_ref).unwrap();
        for (di, vi) in d.iter().zip(&v) {
            assert_eq!(*di, vi - mu_ref);
        }
    }

    #[test]
    fn subset_diag_invalid_index() {
        let set = ParameterSet::new(vec![1.0, 2.0]).unwrap();
        let p = set.split(2).unwrap();
        assert!(matches!(
            p.subset_diag(2, 0.0),
            Err(PartitionError::InvalidSubset { .. })
        ));
    }

    #[test]
    fn not_increasing_rejected() {
        assert!(matches!(
            ParameterSet::new(vec![1.0, 1.0]),
            Err(PartitionError::NotIncreasing { index: 1 })
        ));
        assert!(matches!(
            ParameterSet::new(vec![]),
            Err(PartitionError::Empty)
        ));
    }

    #[test]
    fn ranges_cover_everything_exhaustively() {
        for m in 1usize..=50 {
            let set = ParameterSet::new((0..m).map(|i| i as f64).collect()).unwrap();
            for k in 1..=m {
                let p = set.split(k).unwrap();
                let mut covered = 0;
                let mut max_len = 0;
                let mut min_len = usize::MAX;
                for s in 0..k {
                    let r = p.subset_range(s).unwrap();
                    assert_eq!(r.start, covered, "gap or overlap at subset {s}");
                    covered = r.end;
                    max_len = max_len.max(r.len());
                    min_len = min_len.min(r.len());
                    for i in r.clone() {
                        assert_eq!(p.subset_of(i).unwrap(), s);
                    }
                }
                assert_eq!(covered, m);
                assert!(max_len - min_len <= 1);
            }
        }
    }

    #[test]
    fn upper_median_dominates_half_exhaustively() {
        for n in 1usize..=50 {
            let values: Vec<f64> = (0..n).map(|i| i as f64 * 1.5 + 0.25).collect();
            let idx = upper_median_index(n).unwrap() - 1;
            let median = values[idx];
            let below = values.iter().filter(|&&v| v <= median).count();
            let above = values.iter().filter(|&&v| v >= median).count();
            assert!(below * 2 >= n);
            assert!(above * 2 >= n);
        }
    }

    #[test]
    fn split_is_deterministic() {
        let set = ParameterSet::uniform(1.0, 2.0, 37).unwrap();
        let a = set.split(5).unwrap();
        let b = set.split(5).unwrap();
        assert_eq!(a.boundaries, b.boundaries);
        assert_eq!(a.parent, b.parent);
    }
}
