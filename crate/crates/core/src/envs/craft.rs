use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::Rng;
use thiserror::Error;

use super::Environment;
use crate::automaton::Letter;
use crate::ltl::{Formula, PropId, CRAFT_PREDICATES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Structure {
    Workbench,
    Tree,
    Toolshed,
    Factory,
    RecyclingBin,
}

impl Structure {
    pub const ALL: [Structure; 5] =
        [Structure::Workbench, Structure::Tree, Structure::Toolshed, Structure::Factory, Structure::RecyclingBin];

    /// Proposition index of the structure's predicate; the bin has none.
    pub fn prop(self) -> Option<PropId> {
        let name = match self {
            Structure::Workbench => "workbench",
            Structure::Tree => "tree",
            Structure::Toolshed => "toolshed",
            Structure::Factory => "factory",
            Structure::RecyclingBin => return None,
        };
        craft_prop(name)
    }

    fn glyph(self) -> char {
        match self {
            Structure::Workbench => 'W',
            Structure::Tree => 'T',
            Structure::Toolshed => 'H',
            Structure::Factory => 'F',
            Structure::RecyclingBin => 'B',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Resource {
    Gold,
    Grass,
    Silver,
    Gem,
}

impl Resource {
    pub const ALL: [Resource; 4] = [Resource::Gold, Resource::Grass, Resource::Silver, Resource::Gem];

    pub fn prop(self) -> PropId {
        craft_prop(self.name()).expect("resource predicate")
    }

    pub fn name(self) -> &'static str {
        match self {
            Resource::Gold => "gold",
            Resource::Grass => "grass",
            Resource::Silver => "silver",
            Resource::Gem => "gem",
        }
    }

    fn glyph(self) -> char {
        match self {
            Resource::Gold => 'g',
            Resource::Grass => 'r',
            Resource::Silver => 's',
            Resource::Gem => 'e',
        }
    }
}

fn craft_prop(name: &str) -> Option<PropId> {
    CRAFT_PREDICATES.iter().position(|&p| p == name).map(|i| PropId(i as u8))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Wall,
    Free,
    Structure(Structure),
    /// A trash can that hands out its resource any number of times.
    Can(Resource),
}

impl Cell {
    pub fn passable(self) -> bool {
        self == Cell::Free
    }

    /// Observation plane of the cell; free cells have none.
    fn plane(self) -> Option<usize> {
        match self {
            Cell::Wall => Some(0),
            Cell::Free => None,
            Cell::Structure(s) => Some(1 + Structure::ALL.iter().position(|&x| x == s).expect("listed")),
            Cell::Can(r) => Some(6 + Resource::ALL.iter().position(|&x| x == r).expect("listed")),
        }
    }

    fn glyph(self) -> char {
        match self {
            Cell::Wall => '#',
            Cell::Free => '.',
            Cell::Structure(s) => s.glyph(),
            Cell::Can(r) => r.glyph(),
        }
    }

    fn from_glyph(c: char) -> Option<Cell> {
        match c {
            '#' => Some(Cell::Wall),
            '.' | 'R' => Some(Cell::Free),
            _ => Structure::ALL
                .iter()
                .find(|s| s.glyph() == c)
                .map(|&s| Cell::Structure(s))
                .or_else(|| Resource::ALL.iter().find(|r| r.glyph() == c).map(|&r| Cell::Can(r))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CraftAction {
    North,
    South,
    East,
    West,
    Use,
}

impl CraftAction {
    pub const ALL: [CraftAction; 5] =
        [CraftAction::North, CraftAction::South, CraftAction::East, CraftAction::West, CraftAction::Use];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            CraftAction::North => "north",
            CraftAction::South => "south",
            CraftAction::East => "east",
            CraftAction::West => "west",
            CraftAction::Use => "use",
        }
    }

    fn delta(self) -> Option<(i64, i64)> {
        match self {
            CraftAction::North => Some((0, -1)),
            CraftAction::South => Some((0, 1)),
            CraftAction::East => Some((1, 0)),
            CraftAction::West => Some((-1, 0)),
            CraftAction::Use => None,
        }
    }
}

const MOVES: [CraftAction; 4] = [CraftAction::North, CraftAction::South, CraftAction::East, CraftAction::West];

/// Side of the egocentric crop.
pub const CROP: usize = 5;
/// Cell-type planes of the crop: wall, five structures, four cans.
pub const CROP_PLANES: usize = 10;

pub const MAP_LEGEND: &str =
    "; # wall  . free  R robot  W workbench  T tree  H toolshed  F factory  B recycling bin  g gold  r grass  s silver  e gem";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CraftState {
    pub width: usize,
    pub height: usize,
    /// Row-major cells.
    pub cells: Vec<Cell>,
    pub robot: (usize, usize),
    pub holding: Option<Resource>,
    pub t: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MapError {
    #[error("line {line}: unknown cell {glyph:?}")]
    UnknownGlyph { line: usize, glyph: char },
    #[error("rows have different lengths")]
    Ragged,
    #[error("map needs exactly one robot, found {0}")]
    Robots(usize),
    #[error("empty map")]
    Empty,
}

impl CraftState {
    pub fn cell(&self, x: usize, y: usize) -> Cell {
        self.cells[y * self.width + x]
    }

    fn cell_at(&self, x: i64, y: i64) -> Cell {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            Cell::Wall
        } else {
            self.cell(x as usize, y as usize)
        }
    }

    fn neighbours(&self, (x, y): (usize, usize)) -> impl Iterator<Item = (CraftAction, i64, i64)> + '_ {
        MOVES.iter().map(move |&a| {
            let (dx, dy) = a.delta().expect("move");
            (a, x as i64 + dx, y as i64 + dy)
        })
    }

    fn adjacent_to(&self, pos: (usize, usize), target: Cell) -> bool {
        self.neighbours(pos).any(|(_, x, y)| self.cell_at(x, y) == target)
    }

    /// Cells whose neighbourhood makes proposition `p` true.
    fn targets(&self, p: PropId) -> Vec<(usize, usize)> {
        let Some(target) = target_cell(p) else { return vec![] };
        (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| (x, y)))
            .filter(|&(x, y)| self.cell(x, y) == target)
            .collect()
    }

    /// Manhattan distance from the robot to the nearest target of `p`.
    pub fn distance(&self, p: PropId) -> Option<usize> {
        let (rx, ry) = self.robot;
        self.targets(p).into_iter().map(|(x, y)| rx.abs_diff(x) + ry.abs_diff(y)).min()
    }

    /// Truth of a base predicate.
    pub fn holds(&self, p: PropId) -> bool {
        match target_cell(p) {
            Some(Cell::Can(r)) => self.holding == Some(r),
            Some(target) => self.adjacent_to(self.robot, target),
            None => false,
        }
    }

    /// Applies one action; moves into impassable cells leave the robot in place.
    pub fn apply(&mut self, action: CraftAction) {
        match action.delta() {
            Some((dx, dy)) => {
                let (x, y) = (self.robot.0 as i64 + dx, self.robot.1 as i64 + dy);
                if self.cell_at(x, y).passable() {
                    self.robot = (x as usize, y as usize);
                }
            }
            None => match self.holding {
                None => {
                    let can = self.neighbours(self.robot).find_map(|(_, x, y)| match self.cell_at(x, y) {
                        Cell::Can(r) => Some(r),
                        _ => None,
                    });
                    self.holding = can;
                }
                Some(_) => {
                    if self.adjacent_to(self.robot, Cell::Structure(Structure::RecyclingBin)) {
                        self.holding = None;
                    }
                }
            },
        }
        self.t += 1;
    }

    pub fn parse_map(text: &str) -> Result<Self, MapError> {
        let mut cells = Vec::new();
        let mut width = None;
        let mut robots = vec![];
        let mut height = 0;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with(';') {
                continue;
            }
            let row: Vec<char> = line.chars().collect();
            if *width.get_or_insert(row.len()) != row.len() {
                return Err(MapError::Ragged);
            }
            for (x, &c) in row.iter().enumerate() {
                let cell = Cell::from_glyph(c).ok_or(MapError::UnknownGlyph { line: i + 1, glyph: c })?;
                if c == 'R' {
                    robots.push((x, height));
                }
                cells.push(cell);
            }
            height += 1;
        }
        let width = width.ok_or(MapError::Empty)?;
        if robots.len() != 1 {
            return Err(MapError::Robots(robots.len()));
        }
        Ok(Self { width, height, cells, robot: robots[0], holding: None, t: 0 })
    }

    pub fn to_map(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAP_LEGEND}");
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(if (x, y) == self.robot { 'R' } else { self.cell(x, y).glyph() });
            }
            out.push('\n');
        }
        out
    }
}

fn target_cell(p: PropId) -> Option<Cell> {
    Resource::ALL
        .iter()
        .find(|r| r.prop() == p)
        .map(|&r| Cell::Can(r))
        .or_else(|| Structure::ALL.iter().find(|s| s.prop() == Some(p)).map(|&s| Cell::Structure(s)))
}

const BASE: usize = CRAFT_PREDICATES.len();

/// Letter over the base predicates and their `closer_` companions.
///
/// `closer_p` holds when `p` holds or the distance to `p`'s nearest target shrank since `prev`.
pub fn eval_predicates(s: &CraftState, prev: Option<&CraftState>) -> Letter {
    let mut l = Letter(0);
    for i in 0..BASE {
        let p = PropId(i as u8);
        let holds = s.holds(p);
        let closer = holds
            || match (prev.and_then(|q| q.distance(p)), s.distance(p)) {
                (Some(before), Some(now)) => now < before,
                _ => false,
            };
        l = l.with(p, holds).with(PropId((i + BASE) as u8), closer);
    }
    l
}

/// Rewrites every positive occurrence of a base predicate `p` as `closer_p U p`.
///
/// The result is over the alphabet with closer propositions.
pub fn transform_closer(f: &Formula) -> Formula {
    f.map_atoms(&mut |positive, p| {
        if positive && p.index() < BASE {
            Formula::Until(Box::new(Formula::Atom(PropId(p.0 + BASE as u8))), Box::new(Formula::Atom(p)))
        } else {
            Formula::Atom(p)
        }
    })
}

/// Random map: walls on the boundary, the five structures and four cans on distinct interior
/// cells, the robot on another. Needs at least 10 interior cells, so `size >= 6`.
pub fn craft_generate_map<R: Rng + ?Sized>(rng: &mut R, size: usize) -> CraftState {
    assert!(size >= 6, "a {size}x{size} map has no room for nine objects and the robot");
    let inner = size - 2;
    let mut cells = vec![Cell::Wall; size * size];
    for y in 1..size - 1 {
        for x in 1..size - 1 {
            cells[y * size + x] = Cell::Free;
        }
    }
    let picks = sample(rng, inner * inner, 10).into_vec();
    let pos = |k: usize| (1 + picks[k] % inner, 1 + picks[k] / inner);
    let objects = Structure::ALL.iter().map(|&s| Cell::Structure(s)).chain(Resource::ALL.iter().map(|&r| Cell::Can(r)));
    for (k, obj) in objects.enumerate() {
        let (x, y) = pos(k);
        cells[y * size + x] = obj;
    }
    CraftState { width: size, height: size, cells, robot: pos(9), holding: None, t: 0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CraftConfig {
    pub size: usize,
    pub horizon: usize,
}

impl Default for CraftConfig {
    fn default() -> Self {
        Self { size: 7, horizon: 100 }
    }
}

#[derive(Debug, Clone)]
pub struct CraftEnv {
    pub config: CraftConfig,
    pub state: CraftState,
}

impl CraftEnv {
    pub fn new(config: CraftConfig, state: CraftState) -> Self {
        Self { config, state }
    }

    pub fn random<R: Rng + ?Sized>(config: CraftConfig, rng: &mut R) -> Self {
        let state = craft_generate_map(rng, config.size);
        Self { config, state }
    }

    /// Length of the non-spatial part of the observation.
    pub const FLAT_FEATURES: usize = 4 + BASE + 1;
}

impl Environment for CraftEnv {
    fn action_count(&self) -> usize {
        CraftAction::ALL.len()
    }

    fn obs_dim(&self) -> usize {
        CROP_PLANES * CROP * CROP + Self::FLAT_FEATURES
    }

    /// Crop planes (plane-major, then rows, then columns), held resource, normalised
    /// distances to every base predicate, clock.
    fn observe(&self) -> Vec<f64> {
        let s = &self.state;
        let mut obs = vec![0.0; self.obs_dim()];
        let half = (CROP / 2) as i64;
        for dy in 0..CROP {
            for dx in 0..CROP {
                let cell = s.cell_at(s.robot.0 as i64 + dx as i64 - half, s.robot.1 as i64 + dy as i64 - half);
                if let Some(p) = cell.plane() {
                    obs[(p * CROP + dy) * CROP + dx] = 1.0;
                }
            }
        }
        let mut i = CROP_PLANES * CROP * CROP;
        for r in Resource::ALL {
            obs[i] = (s.holding == Some(r)) as u8 as f64;
            i += 1;
        }
        let diameter = (s.width + s.height - 2) as f64;
        for p in 0..BASE {
            let p = PropId(p as u8);
            obs[i] = if s.holds(p) { 0.0 } else { s.distance(p).map_or(1.0, |d| d as f64 / diameter) };
            i += 1;
        }
        obs[i] = s.t as f64 / self.config.horizon as f64;
        obs
    }

    fn apply(&mut self, action: usize) -> Letter {
        let prev = self.state.clone();
        self.state.apply(CraftAction::ALL[action]);
        eval_predicates(&self.state, Some(&prev))
    }

    fn action_name(&self, action: usize) -> String {
        CraftAction::ALL[action].name().to_string()
    }

    fn horizon(&self) -> usize {
        self.config.horizon
    }
}

/// Scripted expert: fetch `resource`, walk next to `structure`, then wait.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScriptedFetch {
    pub resource: Resource,
    pub structure: Structure,
}

impl ScriptedFetch {
    pub fn act(&self, s: &CraftState) -> CraftAction {
        if s.holding != Some(self.resource) {
            let can = Cell::Can(self.resource);
            if s.holding.is_none() && s.adjacent_to(s.robot, can) {
                return CraftAction::Use;
            }
            if let Some(a) = first_step(s, can) {
                return a;
            }
        } else if let Some(a) = first_step(s, Cell::Structure(self.structure)) {
            return a;
        }
        // wait: bump into a neighbouring obstacle so nothing changes
        s.neighbours(s.robot)
            .find(|&(_, x, y)| !s.cell_at(x, y).passable())
            .map(|(a, _, _)| a)
            .unwrap_or(CraftAction::North)
    }
}

/// First move of a shortest path to a cell next to `target`; `None` when already there or
/// unreachable.
fn first_step(s: &CraftState, target: Cell) -> Option<CraftAction> {
    if s.adjacent_to(s.robot, target) {
        return None;
    }
    let idx = |(x, y): (usize, usize)| y * s.width + x;
    let mut first: Vec<Option<CraftAction>> = vec![None; s.cells.len()];
    let mut seen = vec![false; s.cells.len()];
    seen[idx(s.robot)] = true;
    let mut queue = VecDeque::from([s.robot]);
    while let Some(pos) = queue.pop_front() {
        for (a, x, y) in s.neighbours(pos) {
            if !s.cell_at(x, y).passable() {
                continue;
            }
            let next = (x as usize, y as usize);
            if seen[idx(next)] {
                continue;
            }
            seen[idx(next)] = true;
            first[idx(next)] = first[idx(pos)].or(Some(a));
            if s.adjacent_to(next, target) {
                return first[idx(next)];
            }
            queue.push_back(next);
        }
    }
    None
}
