use super::{Label, PreferenceRecord, WeightVector};
use crate::env::FeatureVector;
use crate::error::Result;

/// Logistic function without overflow for any finite input.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(z)`, stable for large |z|.
pub fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// ψ = Φ_A − Φ_B.
pub fn feature_difference(phi_a: &FeatureVector, phi_b: &FeatureVector) -> Result<FeatureVector> {
    phi_a.difference(phi_b)
}

/// Boltzmann preference likelihood P(I | w).
///
/// `exp(w·Φ_A) / (exp(w·Φ_A) + exp(w·Φ_B))` equals `σ(w·ψ)`, which is the
/// form evaluated here, so only ψ matters.
pub fn preference_likelihood(
    w: &WeightVector,
    phi_a: &FeatureVector,
    phi_b: &FeatureVector,
    label: Label,
) -> Result<f64> {
    let psi = feature_difference(phi_a, phi_b)?;
    likelihood_from_difference(w, &psi, label)
}

pub fn likelihood_from_difference(w: &WeightVector, psi: &FeatureVector, label: Label) -> Result<f64> {
    Ok(sigmoid(label.sign() * w.dot(psi)?))
}

/// Unnormalized log posterior under a uniform prior on the unit ball;
/// `-inf` outside the ball.
pub fn posterior_logdensity(w: &WeightVector, records: &[PreferenceRecord]) -> Result<f64> {
    if !w.in_unit_ball() {
        return Ok(f64::NEG_INFINITY);
    }
    let mut total = 0.0;
    for r in records {
        let psi = r.difference()?;
        total += log_sigmoid(r.label.sign() * w.dot(&psi)?);
    }
    Ok(total)
}
