//! Linear classifiers with hard (thresholded) and soft (sigmoid) prediction
//! and the logistic loss with its analytic gradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{Dataset, Sample};

/// Clamp bound for probabilities before taking logs.
const PROB_CLAMP: f64 = 1e-12;

/// A linear classifier `f(x) = 1[<x, theta> >= 0]`.
///
/// By default the protected attribute is not used for prediction; with
/// `use_protected` the attribute is appended to the features as a real value
/// and `theta` carries one extra entry. `temperature` scales the logit of
/// the soft prediction; it only matters for constraint smoothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    pub theta: Vec<f64>,
    pub use_protected: bool,
    pub temperature: f64,
}

impl LinearClassifier {
    pub fn new(theta: Vec<f64>) -> Self {
        LinearClassifier { theta, use_protected: false, temperature: 1.0 }
    }

    pub fn with_options(theta: Vec<f64>, use_protected: bool, temperature: f64) -> Result<Self> {
        if temperature <= 0.0 || !temperature.is_finite() {
            return Err(Error::InvalidParameter("temperature must be positive".into()));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite theta entry".into()));
        }
        Ok(LinearClassifier { theta, use_protected, temperature })
    }

    /// Expected feature dimension of input samples.
    pub fn input_dim(&self) -> usize {
        self.theta.len() - usize::from(self.use_protected)
    }

    fn check_dim(&self, sample: &Sample) -> Result<()> {
        if sample.features.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: sample.features.len(),
            });
        }
        Ok(())
    }

    /// Inner product with the (possibly attribute-extended) feature vector.
    pub fn score(&self, sample: &Sample) -> Result<f64> {
        self.check_dim(sample)?;
        let mut dot: f64 =
            sample.features.iter().zip(&self.theta).map(|(x, t)| x * t).sum();
        if self.use_protected {
            dot += sample.group as f64 * self.theta[self.theta.len() - 1];
        }
        Ok(dot)
    }

    /// Hard prediction `1[<x, theta> >= 0]`; a tie at exactly 0 predicts 1.
    pub fn predict_hard(&self, sample: &Sample) -> Result<u8> {
        Ok(u8::from(self.score(sample)? >= 0.0))
    }

    /// Soft prediction `sigmoid(<x, theta> / temperature)`.
    pub fn predict_soft(&self, sample: &Sample) -> Result<f64> {
        Ok(sigmoid(self.score(sample)? / self.temperature))
    }

    pub fn predict_all_hard(&self, dataset: &Dataset) -> Result<Vec<u8>> {
        dataset.samples().iter().map(|s| self.predict_hard(s)).collect()
    }

    pub fn predict_all_soft(&self, dataset: &Dataset) -> Result<Vec<f64>> {
        dataset.samples().iter().map(|s| self.predict_soft(s)).collect()
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean negative log-likelihood and its exact gradient in `theta`.
///
/// Probabilities are clamped to `[1e-12, 1 - 1e-12]` before the logs, so the
/// loss is finite everywhere; the gradient is the analytic `(sigma - y) x / T`
/// of the unclamped objective.
pub fn logistic_loss(clf: &LinearClassifier, dataset: &Dataset) -> Result<(f64, Vec<f64>)> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = dataset.len() as f64;
    let t = clf.temperature;
    let mut loss = 0.0;
    let mut grad = vec![0.0; clf.theta.len()];
    for s in dataset.samples() {
        let z = clf.score(s)? / t;
        let sig = sigmoid(z);
        let pr = sig.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        loss -= if s.label == 1 { pr.ln() } else { (1.0 - pr).ln() };
        let coeff = (sig - f64::from(s.label)) / t;
        for (g, x) in grad.iter_mut().zip(&s.features) {
            *g += coeff * x;
        }
        if clf.use_protected {
            let last = grad.len() - 1;
            grad[last] += coeff * s.group as f64;
        }
    }
    loss /= n;
    for g in &mut grad {
        *g /= n;
    }
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Sample;

    fn sample(features: &[f64]) -> Sample {
        Sample::new(features.to_vec(), 1, 1)
    }

    #[test]
    fn hard_prediction_signs_and_tie() {
        let clf = LinearClassifier::new(vec![1.0, 0.0]);
        assert_eq!(clf.predict_hard(&sample(&[2.0, 5.0])).unwrap(), 1);
        assert_eq!(clf.predict_hard(&sample(&[-2.0, 5.0])).unwrap(), 0);
        let clf = LinearClassifier::new(vec![1.0, -1.0]);
        assert_eq!(clf.predict_hard(&sample(&[3.0, 3.0])).unwrap(), 1);
    }

    #[test]
    fn soft_prediction_values() {
        let clf = LinearClassifier::new(vec![1.0]);
        assert_eq!(clf.predict_soft(&sample(&[0.0])).unwrap(), 0.5);
        let p = clf.predict_soft(&sample(&[3.0f64.ln()])).unwrap();
        assert!((p - 0.75).abs() < 1e-15);
        // very large temperature flattens toward 1/2
        let clf = LinearClassifier::with_options(vec![1.0], false, 1e12).unwrap();
        assert!((clf.predict_soft(&sample(&[1.0])).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let clf = LinearClassifier::new(vec![1.0, 2.0]);
        assert!(matches!(
            clf.predict_hard(&sample(&[1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn loss_at_zero_theta_is_ln2() {
        let samples = vec![
            Sample::new(vec![1.0, -2.0], 1, 1),
            Sample::new(vec![0.5, 3.0], 0, 2),
            Sample::new(vec![-1.0, 0.2], 1, 2),
        ];
        let ds = Dataset::new(samples, 2).unwrap();
        let clf = LinearClassifier::new(vec![0.0, 0.0]);
        let (loss, _) = logistic_loss(&clf, &ds).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn single_sample_loss_value() {
        // y = 1, <x,theta> = ln 3 => loss = -ln(3/4)
        let ds = Dataset::new(vec![Sample::new(vec![3.0f64.ln()], 1, 1)], 1).unwrap();
        let clf = LinearClassifier::new(vec![1.0]);
        let (loss, _) = logistic_loss(&clf, &ds).unwrap();
        assert!((loss - (4.0f64 / 3.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn protected_attribute_extends_theta() {
        let clf = LinearClassifier::with_options(vec![0.0, 1.0], true, 1.0).unwrap();
        // score = 0*x + 1*z
        let s = Sample::new(vec![-5.0], 0, 2);
        assert_eq!(clf.score(&s).unwrap(), 2.0);
        assert_eq!(clf.predict_hard(&s).unwrap(), 1);
    }
}
