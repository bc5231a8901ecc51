use super::dct::OrthoDct;
use super::ReconError;
use crate::prmd::SamplingPattern;

/// Matrix-free `gather ∘ IDCT`: maps DCT coefficients of a length-`n`
/// signal to its values at the retained positions.
#[derive(Debug, Clone)]
pub struct MeasurementOperator {
    indices: Vec<usize>,
    dct: OrthoDct,
}

impl MeasurementOperator {
    /// `indices` must be strictly increasing and below `transform_len`.
    pub fn new(indices: Vec<usize>, transform_len: usize) -> Result<Self, ReconError> {
        if transform_len == 0 {
            return Err(ReconError::InvalidOperator("transform length is zero".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ReconError::InvalidOperator("indices not strictly increasing".into()));
        }
        if indices.last().is_some_and(|&i| i >= transform_len) {
            return Err(ReconError::InvalidOperator("index beyond transform length".into()));
        }
        Ok(Self {
            indices,
            dct: OrthoDct::new(transform_len),
        })
    }

    pub fn from_pattern(pattern: &SamplingPattern) -> Self {
        Self {
            indices: pattern.indices().to_vec(),
            dct: OrthoDct::new(pattern.original_len()),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn transform_len(&self) -> usize {
        self.dct.len()
    }

    pub fn measurement_count(&self) -> usize {
        self.indices.len()
    }

    pub fn dct(&self) -> &OrthoDct {
        &self.dct
    }

    /// Full-length synthesis of `coeffs`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        self.dct.inverse(coeffs)
    }

    pub fn forward(&self, coeffs: &[f64]) -> Vec<f64> {
        let full = self.dct.inverse(coeffs);
        self.indices.iter().map(|&i| full[i]).collect()
    }

    pub fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.indices.len());
        let mut full = vec![0.0; self.dct.len()];
        for (&i, &v) in self.indices.iter().zip(y) {
            full[i] = v;
        }
        self.dct.forward_in_place(&mut full);
        full
    }

    /// Column `k` restricted to the retained rows.
    pub fn column(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        self.indices.iter().map(move |&n| self.dct.atom(k, n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prmd::build_pattern;
    use crate::prng::StepPolicy;
    use proptest::prelude::*;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn norm(a: &[f64]) -> f64 {
        dot(a, a).sqrt()
    }

    #[test]
    fn rejects_bad_indices() {
        assert!(MeasurementOperator::new(vec![0, 2, 2], 5).is_err());
        assert!(MeasurementOperator::new(vec![0, 5], 5).is_err());
        assert!(MeasurementOperator::new(vec![0, 1], 0).is_err());
        assert!(MeasurementOperator::new(vec![0, 4], 5).is_ok());
    }

    #[test]
    fn forward_equals_explicit_columns() {
        let p = build_pattern(9, StepPolicy::mean_exact(3).unwrap(), 60).unwrap();
        let op = MeasurementOperator::from_pattern(&p);
        let x: Vec<f64> = (0..60).map(|i| if i % 7 == 0 { 1.0 + i as f64 } else { 0.0 }).collect();
        let fx = op.forward(&x);
        let mut expected = vec![0.0; op.measurement_count()];
        for (k, &c) in x.iter().enumerate() {
            for (row, v) in op.column(k).enumerate() {
                expected[row] += c * v;
            }
        }
        for (a, b) in fx.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn adjoint_consistency(seed in 1u32.., cr in 2u32..8, n in 8usize..600, salt in any::<u64>()) {
            let p = build_pattern(seed, StepPolicy::mean_exact(cr).unwrap(), n).unwrap();
            let op = MeasurementOperator::from_pattern(&p);
            let mut h = salt | 1;
            let mut rnd = || {
                h ^= h << 13; h ^= h >> 7; h ^= h << 17;
                (h % 2001) as f64 / 1000.0 - 1.0
            };
            let x: Vec<f64> = (0..n).map(|_| rnd()).collect();
            let y: Vec<f64> = (0..op.measurement_count()).map(|_| rnd()).collect();
            let lhs = dot(&op.forward(&x), &y);
            let rhs = dot(&x, &op.adjoint(&y));
            let scale = norm(&x) * norm(&y);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * scale.max(f64::MIN_POSITIVE));
        }
    }
}
