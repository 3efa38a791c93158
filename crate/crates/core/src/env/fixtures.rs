//! Procedural environments for tests, benches and desk-scale experiments.

use rand::Rng;

use super::{Terrain, TerrainGrid};
use crate::rng::rng_from;

/// Patchy terrain: a handful of random sites, each cell taking the terrain
/// of its nearest site (Manhattan distance, ties to the lower site index).
/// Start top-left, goal bottom-right.
pub fn random_terrain_grid(size: usize, seed: u64) -> TerrainGrid {
    let mut rng = rng_from(seed, &[0x74_65_72_72]);
    let n_sites = (size * size / 12).clamp(4, 24);
    let sites: Vec<(usize, usize, Terrain)> = (0..n_sites)
        .map(|i| {
            // cycle through all terrains first so each one appears
            let t = if i < Terrain::COUNT {
                Terrain::ALL[i]
            } else {
                Terrain::ALL[rng.random_range(0..Terrain::COUNT)]
            };
            (rng.random_range(0..size), rng.random_range(0..size), t)
        })
        .collect();
    let mut terrain = Vec::with_capacity(size * size);
    for r in 0..size {
        for c in 0..size {
            let nearest = sites
                .iter()
                .min_by_key(|(sr, sc, _)| sr.abs_diff(r) + sc.abs_diff(c))
                .expect("at least one site");
            terrain.push(nearest.2);
        }
    }
    TerrainGrid::new(size, terrain, (0, 0), (size - 1, size - 1)).expect("valid grid")
}
