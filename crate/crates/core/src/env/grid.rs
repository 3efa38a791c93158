use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row/column coordinate of a grid cell.
pub type Cell = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Terrain {
    Brick = 0,
    Gravel = 1,
    Sand = 2,
    Grass = 3,
}

impl Terrain {
    pub const COUNT: usize = 4;
    pub const ALL: [Terrain; 4] = [Terrain::Brick, Terrain::Gravel, Terrain::Sand, Terrain::Grass];

    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Option<Terrain> {
        Terrain::ALL.get(id).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Terrain::Brick => "brick",
            Terrain::Gravel => "gravel",
            Terrain::Sand => "sand",
            Terrain::Grass => "grass",
        }
    }
}

/// The four grid moves. Discriminants are action indices, which also fix
/// tie-breaking order in the planner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridAction {
    Up = 0,
    Right = 1,
    Down = 2,
    Left = 3,
}

impl GridAction {
    pub const ALL: [GridAction; 4] = [
        GridAction::Up,
        GridAction::Right,
        GridAction::Down,
        GridAction::Left,
    ];

    fn delta(self) -> (isize, isize) {
        match self {
            GridAction::Up => (-1, 0),
            GridAction::Right => (0, 1),
            GridAction::Down => (1, 0),
            GridAction::Left => (0, -1),
        }
    }
}

/// Square terrain map with 4-connected moves; every cell is passable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridFile", into = "GridFile")]
pub struct TerrainGrid {
    size: usize,
    terrain: Vec<Terrain>,
    start: Cell,
    goal: Cell,
}

#[derive(Serialize, Deserialize)]
struct GridFile {
    size: usize,
    terrain: Vec<Vec<usize>>,
    start: [usize; 2],
    goal: [usize; 2],
}

impl TryFrom<GridFile> for TerrainGrid {
    type Error = Error;

    fn try_from(f: GridFile) -> Result<Self> {
        if f.terrain.len() != f.size || f.terrain.iter().any(|row| row.len() != f.size) {
            return Err(Error::Invariant(format!(
                "terrain must be a {0}x{0} array",
                f.size
            )));
        }
        let terrain = f
            .terrain
            .iter()
            .flatten()
            .map(|&id| {
                Terrain::from_id(id).ok_or_else(|| Error::Invariant(format!("unknown terrain id {id}")))
            })
            .collect::<Result<Vec<_>>>()?;
        TerrainGrid::new(
            f.size,
            terrain,
            (f.start[0], f.start[1]),
            (f.goal[0], f.goal[1]),
        )
    }
}

impl From<TerrainGrid> for GridFile {
    fn from(g: TerrainGrid) -> Self {
        GridFile {
            size: g.size,
            terrain: g
                .terrain
                .chunks(g.size)
                .map(|row| row.iter().map(|t| t.id()).collect())
                .collect(),
            start: [g.start.0, g.start.1],
            goal: [g.goal.0, g.goal.1],
        }
    }
}

impl TerrainGrid {
    /// `terrain` is row-major with `size * size` entries.
    pub fn new(size: usize, terrain: Vec<Terrain>, start: Cell, goal: Cell) -> Result<Self> {
        if size == 0 {
            return Err(Error::Invariant("grid size must be positive".into()));
        }
        if terrain.len() != size * size {
            return Err(Error::Invariant(format!(
                "expected {} terrain cells, got {}",
                size * size,
                terrain.len()
            )));
        }
        for (name, c) in [("start", start), ("goal", goal)] {
            if c.0 >= size || c.1 >= size {
                return Err(Error::Invariant(format!("{name} {c:?} outside {size}x{size} grid")));
            }
        }
        if start == goal {
            return Err(Error::Invariant("start and goal coincide".into()));
        }
        // All cells are passable, so 4-connectivity makes the goal reachable.
        Ok(TerrainGrid {
            size,
            terrain,
            start,
            goal,
        })
    }

    /// Uniform terrain, start top-left and goal bottom-right.
    pub fn filled(size: usize, terrain: Terrain) -> Result<Self> {
        Self::new(
            size,
            vec![terrain; size * size],
            (0, 0),
            (size - 1, size - 1),
        )
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn start(&self) -> Cell {
        self.start
    }

    pub fn goal(&self) -> Cell {
        self.goal
    }

    pub fn terrain(&self) -> &[Terrain] {
        &self.terrain
    }

    pub fn at(&self, cell: Cell) -> Terrain {
        self.terrain[self.state_of(cell)]
    }

    pub fn set(&mut self, cell: Cell, t: Terrain) {
        let i = self.state_of(cell);
        self.terrain[i] = t;
    }

    pub fn state_of(&self, cell: Cell) -> usize {
        cell.0 * self.size + cell.1
    }

    pub fn cell_of(&self, state: usize) -> Cell {
        (state / self.size, state % self.size)
    }

    pub(crate) fn terrain_at(&self, state: usize) -> Terrain {
        self.terrain[state]
    }

    pub(crate) fn next_state(&self, state: usize, action: usize) -> Result<usize> {
        let invalid = Error::InvalidAction { state, action };
        if state >= self.size * self.size {
            return Err(invalid);
        }
        let act = GridAction::ALL.get(action).ok_or(Error::InvalidAction { state, action })?;
        let (r, c) = self.cell_of(state);
        let (dr, dc) = act.delta();
        let nr = r as isize + dr;
        let nc = c as isize + dc;
        if nr < 0 || nc < 0 || nr >= self.size as isize || nc >= self.size as isize {
            return Err(invalid);
        }
        Ok(self.state_of((nr as usize, nc as usize)))
    }

    pub(crate) fn moves(&self, state: usize) -> Vec<(usize, usize)> {
        (0..GridAction::ALL.len())
            .filter_map(|a| self.next_state(state, a).ok().map(|n| (a, n)))
            .collect()
    }
}
