//! Environment parameters θ_E searched by the designer.
//!
//! GridWorld: nine values in `[0, 1]`, one per cell of a 3x3 patch layout
//! (row-major). Each value quantizes to terrain id `floor(4v)`, clamped to
//! 3, and paints its patch. Graphs: three values per edge, in edge order,
//! overwriting (distance, time, elevation) within the training ranges.

use serde::{Deserialize, Serialize};

use super::graph::{DISTANCE_RANGE, ELEVATION_RANGE, TIME_RANGE};
use super::{EnvironmentSpec, Terrain, TerrainGrid, World};
use crate::error::{check_len, Error, Result};

pub const PATCHES_PER_SIDE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamDomain {
    GridworldPatch,
    GraphEdges,
}

/// Box-bounded parameter space for one template environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    pub domain: ParamDomain,
    pub bounds: Vec<(f64, f64)>,
}

impl ParamSpace {
    pub fn dim(&self) -> usize {
        self.bounds.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvParamVector {
    pub values: Vec<f64>,
    pub space: ParamSpace,
}

impl EnvParamVector {
    pub fn new(values: Vec<f64>, space: ParamSpace) -> Result<Self> {
        check_len(space.dim(), values.len())?;
        for (index, (&value, &(lo, hi))) in values.iter().zip(&space.bounds).enumerate() {
            if !(lo..=hi).contains(&value) {
                return Err(Error::BoundsViolation { index, value, lo, hi });
            }
        }
        Ok(EnvParamVector { values, space })
    }
}

pub fn param_space(template: &EnvironmentSpec) -> ParamSpace {
    match template.world() {
        World::Grid(_) => ParamSpace {
            domain: ParamDomain::GridworldPatch,
            bounds: vec![(0.0, 1.0); PATCHES_PER_SIDE * PATCHES_PER_SIDE],
        },
        World::Graph(g) => ParamSpace {
            domain: ParamDomain::GraphEdges,
            bounds: g
                .edges()
                .iter()
                .flat_map(|_| [DISTANCE_RANGE, TIME_RANGE, ELEVATION_RANGE])
                .collect(),
        },
    }
}

/// Terrain id for a patch value: half-open quarters of `[0, 1)`.
pub fn quantize_terrain(v: f64) -> Terrain {
    let id = ((v * Terrain::COUNT as f64).floor().max(0.0) as usize).min(Terrain::COUNT - 1);
    Terrain::from_id(id).expect("clamped id")
}

fn patch_of(index: usize, size: usize) -> usize {
    (index * PATCHES_PER_SIDE / size).min(PATCHES_PER_SIDE - 1)
}

/// Build the environment described by `theta`, keeping the template's size,
/// topology, start, goal, discount and horizon.
pub fn decode_env(theta: &EnvParamVector, template: &EnvironmentSpec) -> Result<EnvironmentSpec> {
    let space = param_space(template);
    if space.domain != theta.space.domain {
        return Err(Error::Config(format!(
            "parameter domain {:?} does not match template {:?}",
            theta.space.domain, space.domain
        )));
    }
    // Revalidate against the template's bounds, not the vector's own.
    let theta = EnvParamVector::new(theta.values.clone(), space)?;
    let world = match template.world() {
        World::Grid(g) => {
            let n = g.size();
            let mut terrain = Vec::with_capacity(n * n);
            for r in 0..n {
                for c in 0..n {
                    let p = patch_of(r, n) * PATCHES_PER_SIDE + patch_of(c, n);
                    terrain.push(quantize_terrain(theta.values[p]));
                }
            }
            World::Grid(TerrainGrid::new(n, terrain, g.start(), g.goal())?)
        }
        World::Graph(g) => {
            let feats: Vec<[f64; 3]> = theta
                .values
                .chunks(3)
                .map(|c| [c[0], c[1], c[2]])
                .collect();
            World::Graph(g.with_edge_features(&feats)?)
        }
    };
    EnvironmentSpec::with_params(world, template.gamma(), template.horizon())
}

/// Current edge features of a graph environment as a parameter vector.
/// Grids have no exact inverse (quantization), so this is graph-only.
pub fn encode_env(env: &EnvironmentSpec) -> Result<EnvParamVector> {
    match env.world() {
        World::Graph(g) => {
            let values = g
                .edges()
                .iter()
                .flat_map(|e| [e.distance, e.time, e.elev])
                .collect();
            EnvParamVector::new(values, param_space(env))
        }
        World::Grid(_) => Err(Error::Config("grid environments have no edge encoding".into())),
    }
}
