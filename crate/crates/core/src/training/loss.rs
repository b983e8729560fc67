use crate::error::{Error, Result};
use crate::numerics::Scalar;

/// Probabilities below this are clamped before taking the log.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Loss {
    /// `−Σ_t log p_t[gold_t]`.
    pub total: f64,
    pub tokens: usize,
}

impl Loss {
    pub fn mean(&self) -> f64 {
        if self.tokens == 0 {
            0.0
        } else {
            self.total / self.tokens as f64
        }
    }
}

pub fn token_loss<S: Scalar>(p: &[S], gold: usize) -> f64 {
    -p[gold].to_f64_lossless().max(LOG_FLOOR).ln()
}

pub fn cross_entropy<S: Scalar, P: AsRef<[S]>>(predicted: &[P], gold: &[usize]) -> Result<Loss> {
    if predicted.len() != gold.len() {
        return Err(Error::Structure(format!(
            "cross_entropy: {} distributions for {} gold tags",
            predicted.len(),
            gold.len()
        )));
    }
    let mut total = 0.0;
    for (p, &g) in predicted.iter().zip(gold) {
        let p = p.as_ref();
        if g >= p.len() {
            return Err(Error::OutOfRange {
                what: "tag distribution",
                index: g,
                len: p.len(),
            });
        }
        total += token_loss(p, g);
    }
    Ok(Loss {
        total,
        tokens: gold.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_hot_is_free() {
        let p = vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]];
        assert_eq!(cross_entropy::<f64, _>(&p, &[1, 0]).unwrap().total, 0.0);
    }

    #[test]
    fn uniform_over_18() {
        let p = vec![vec![1.0 / 18.0; 18]; 3];
        let l = cross_entropy::<f64, _>(&p, &[0, 5, 17]).unwrap();
        assert!((l.mean() - 18f64.ln()).abs() < 1e-12);
        assert!((l.mean() - 2.8904).abs() < 1e-4);
    }

    #[test]
    fn half_is_ln2() {
        let l = cross_entropy::<f32, _>(&[vec![0.5f32, 0.5]], &[1]).unwrap();
        assert!((l.total - 0.6931).abs() < 1e-4);
    }

    #[test]
    fn zero_probability_is_clamped() {
        let l = cross_entropy::<f64, _>(&[vec![1.0, 0.0]], &[1]).unwrap();
        assert!((l.total - 1e12f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn length_mismatch() {
        assert!(cross_entropy::<f64, _>(&[vec![1.0]], &[0, 0]).is_err());
        assert!(cross_entropy::<f64, _>(&[vec![1.0]], &[3]).is_err());
    }
}
