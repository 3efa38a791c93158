use crate::belief::WeightVector;
use crate::error::{Error, Result};

pub fn cosine_distance(a: &WeightVector, b: &WeightVector) -> f64 {
    1.0 - a.cosine_similarity(b)
}

/// Greedy max-min selection of `m` weights under cosine distance.
///
/// The sequential greedy pass is run from every starting sample and the
/// selection with the largest minimum pairwise distance is kept (earliest
/// start on ties). For `m = 2` this is the farthest pair. Zero-norm samples
/// are skipped.
pub fn select_diverse_weights(samples: &[WeightVector], m: usize) -> Result<Vec<WeightVector>> {
    Ok(select_diverse_indices(samples, m)?
        .into_iter()
        .map(|i| samples[i].clone())
        .collect())
}

pub fn select_diverse_indices(samples: &[WeightVector], m: usize) -> Result<Vec<usize>> {
    if m > samples.len() {
        return Err(Error::Config(format!("cannot select {m} of {} weights", samples.len())));
    }
    let valid: Vec<usize> = (0..samples.len()).filter(|&i| samples[i].norm() > 0.0).collect();
    if valid.len() < samples.len() {
        log::warn!("excluding {} zero-norm weight(s) from diversity selection", samples.len() - valid.len());
    }
    if m < 2 {
        return Ok(valid.iter().copied().take(m).collect());
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for &seed in &valid {
        let chosen = greedy_max_min(samples, &valid, m, seed);
        let spread = min_pairwise_distance(samples, &chosen);
        if best.as_ref().is_none_or(|(b, _)| spread > *b) {
            best = Some((spread, chosen));
        }
    }
    Ok(best.map(|(_, c)| c).unwrap_or_default())
}

/// Greedy max-min from a given starting index, over the candidate `pool`.
pub fn greedy_max_min(samples: &[WeightVector], pool: &[usize], m: usize, seed: usize) -> Vec<usize> {
    let m = m.min(pool.len());
    if m == 0 {
        return Vec::new();
    }
    let mut chosen = vec![seed];
    let mut min_dist: Vec<f64> = pool.iter().map(|&i| cosine_distance(&samples[i], &samples[seed])).collect();
    let mut taken: Vec<bool> = pool.iter().map(|&i| i == seed).collect();
    while chosen.len() < m {
        let mut best: Option<usize> = None;
        for (k, &d) in min_dist.iter().enumerate() {
            if taken[k] {
                continue;
            }
            if best.is_none_or(|b| d > min_dist[b]) {
                best = Some(k);
            }
        }
        let Some(k) = best else { break };
        taken[k] = true;
        let idx = pool[k];
        chosen.push(idx);
        for (j, &i) in pool.iter().enumerate() {
            min_dist[j] = min_dist[j].min(cosine_distance(&samples[i], &samples[idx]));
        }
    }
    chosen
}

/// Smallest pairwise cosine distance within a selection.
pub fn min_pairwise_distance(samples: &[WeightVector], chosen: &[usize]) -> f64 {
    let mut best = f64::INFINITY;
    for (a, &i) in chosen.iter().enumerate() {
        for &j in &chosen[a + 1..] {
            best = best.min(cosine_distance(&samples[i], &samples[j]));
        }
    }
    best
}
