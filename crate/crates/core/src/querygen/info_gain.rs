use std::f64::consts::LN_2;

use crate::belief::{log_sigmoid, sigmoid, WeightVector};
use crate::env::FeatureVector;
use crate::error::{check_len, Error, Result};

/// Mutual information (bits) between the answer to a query with feature
/// difference ψ = Φ_A − Φ_B and the weights, on an equally weighted sample
/// set:
///
/// `(1/M) Σ_m Σ_I P(I|w_m) log₂( M P(I|w_m) / Σ_m' P(I|w_m') )`
pub fn info_gain(phi_a: &FeatureVector, phi_b: &FeatureVector, samples: &[WeightVector]) -> Result<f64> {
    let psi = phi_a.difference(phi_b)?;
    if samples.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let mut z = Vec::with_capacity(samples.len());
    for w in samples {
        check_len(psi.dim(), w.dim())?;
        z.push(w.dot_slice(psi.as_slice()));
    }
    Ok(info_gain_from_scores(&z))
}

/// Same estimator given the reward advantages `z_m = w_m · ψ`.
pub fn info_gain_from_scores(z: &[f64]) -> f64 {
    if z.windows(2).all(|p| p[0] == p[1]) {
        return 0.0;
    }
    let m = z.len() as f64;
    let (mut s_pos, mut s_neg) = (0.0, 0.0);
    let mut self_info = 0.0;
    for &zi in z {
        let p = sigmoid(zi);
        let q = sigmoid(-zi);
        s_pos += p;
        s_neg += q;
        // log_sigmoid stays finite, so p·ln p is 0 when p underflows.
        self_info += p * log_sigmoid(zi) + q * log_sigmoid(-zi);
    }
    let norm = |s: f64| if s > 0.0 { s * s.ln() } else { 0.0 };
    let nats = m.ln() + (self_info - norm(s_pos) - norm(s_neg)) / m;
    (nats / LN_2).clamp(0.0, 1.0)
}
