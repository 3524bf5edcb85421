//! Non-deterministic, non-stationary grid world.
//!
//! Coordinates put the origin at the lower-left corner: `y` grows upward, so
//! `Up` increments `y`. Each action moves in its intended direction with
//! probability `p_intended` and slips into each of the two orthogonal
//! directions with probability `p_orthogonal`. Moving into a wall or off the
//! grid leaves the agent where it was.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use rand::seq::index::sample;
use rand::Rng;

/// Reward for every step taken.
pub const STEP_REWARD: f64 = -1.0;
/// Bonus added on the step that enters the goal.
pub const GOAL_BONUS: f64 = 100.0;
/// Layout draws attempted before wall generation gives up.
pub const MAX_LAYOUT_ATTEMPTS: usize = 10_000;

const PROBABILITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("grid dimensions must be positive, got {width}x{height}")]
    EmptyGrid { width: usize, height: usize },
    #[error("cell {0} lies outside the grid")]
    OutOfBounds(Cell),
    #[error("start and goal must be distinct cells")]
    StartIsGoal,
    #[error("{0} must not be a wall")]
    WalledEndpoint(&'static str),
    #[error("transition probabilities must be in [0, 1] and satisfy p + 2q = 1, got p={p_intended}, q={p_orthogonal}")]
    BadProbabilities { p_intended: f64, p_orthogonal: f64 },
    #[error("goal {goal} is not reachable from start {start}")]
    Unreachable { start: Cell, goal: Cell },
    #[error("cannot step from {0}: it is a wall")]
    StepFromWall(Cell),
    #[error("cannot step from the goal {0}")]
    StepFromGoal(Cell),
    #[error("wall ratio {0} outside [0, 1)")]
    BadRatio(f64),
    #[error("no layout with reachable goal after {attempts} attempts ({walls} walls on {width}x{height})")]
    GenerationFailed {
        walls: usize,
        width: usize,
        height: usize,
        attempts: usize,
    },
    #[error("schedule must start at episode 0 with strictly increasing phase starts")]
    BadSchedule,
    #[error("ascii map line {line}: {message}")]
    Ascii { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Ordered `Up < Down < Left < Right`; that order breaks ties in greedy
/// policy extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn orthogonal(self) -> [Action; 2] {
        match self {
            Action::Up | Action::Down => [Action::Left, Action::Right],
            Action::Left | Action::Right => [Action::Up, Action::Down],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Up => "up",
            Action::Down => "down",
            Action::Left => "left",
            Action::Right => "right",
        }
    }

    pub fn from_name(name: &str) -> Option<Action> {
        Action::ALL.into_iter().find(|a| a.name() == name)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    width: usize,
    height: usize,
    walls: BTreeSet<Cell>,
    start: Cell,
    goal: Cell,
    p_intended: f64,
    p_orthogonal: f64,
}

impl GridConfig {
    /// Validates dimensions, endpoints, probabilities, and goal reachability.
    pub fn new(
        width: usize,
        height: usize,
        walls: BTreeSet<Cell>,
        start: Cell,
        goal: Cell,
        p_intended: f64,
    ) -> Result<Self, GridError> {
        let p_orthogonal = (1.0 - p_intended) / 2.0;
        Self::with_probabilities(width, height, walls, start, goal, p_intended, p_orthogonal)
    }

    pub fn with_probabilities(
        width: usize,
        height: usize,
        walls: BTreeSet<Cell>,
        start: Cell,
        goal: Cell,
        p_intended: f64,
        p_orthogonal: f64,
    ) -> Result<Self, GridError> {
        if width == 0 || height == 0 {
            return Err(GridError::EmptyGrid { width, height });
        }
        let in_bounds = |c: &Cell| c.x < width && c.y < height;
        for c in walls.iter().chain([&start, &goal]) {
            if !in_bounds(c) {
                return Err(GridError::OutOfBounds(*c));
            }
        }
        if start == goal {
            return Err(GridError::StartIsGoal);
        }
        if walls.contains(&start) {
            return Err(GridError::WalledEndpoint("start"));
        }
        if walls.contains(&goal) {
            return Err(GridError::WalledEndpoint("goal"));
        }
        let valid_p = |p: f64| (0.0..=1.0).contains(&p);
        if !valid_p(p_intended)
            || !valid_p(p_orthogonal)
            || (p_intended + 2.0 * p_orthogonal - 1.0).abs() > PROBABILITY_TOLERANCE
        {
            return Err(GridError::BadProbabilities {
                p_intended,
                p_orthogonal,
            });
        }
        let config = GridConfig {
            width,
            height,
            walls,
            start,
            goal,
            p_intended,
            p_orthogonal,
        };
        if !config.reachable_cells().contains(&goal) {
            return Err(GridError::Unreachable { start, goal });
        }
        Ok(config)
    }

    /// Start at the lower-left corner, goal at the upper-right.
    pub fn corners(
        width: usize,
        height: usize,
        walls: BTreeSet<Cell>,
        p_intended: f64,
    ) -> Result<Self, GridError> {
        let start = Cell::new(0, 0);
        let goal = Cell::new(width.saturating_sub(1), height.saturating_sub(1));
        Self::new(width, height, walls, start, goal, p_intended)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn walls(&self) -> &BTreeSet<Cell> {
        &self.walls
    }

    pub fn start(&self) -> Cell {
        self.start
    }

    pub fn goal(&self) -> Cell {
        self.goal
    }

    pub fn p_intended(&self) -> f64 {
        self.p_intended
    }

    pub fn p_orthogonal(&self) -> f64 {
        self.p_orthogonal
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    pub fn is_wall(&self, c: Cell) -> bool {
        self.walls.contains(&c)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).map(move |x| Cell::new(x, y)))
    }

    /// The adjacent cell in direction `a`, or `None` if it is off-grid.
    pub fn neighbor(&self, c: Cell, a: Action) -> Option<Cell> {
        match a {
            Action::Up if c.y + 1 < self.height => Some(Cell::new(c.x, c.y + 1)),
            Action::Down if c.y > 0 => Some(Cell::new(c.x, c.y - 1)),
            Action::Left if c.x > 0 => Some(Cell::new(c.x - 1, c.y)),
            Action::Right if c.x + 1 < self.width => Some(Cell::new(c.x + 1, c.y)),
            _ => None,
        }
    }

    /// Where a move in direction `a` actually lands.
    pub fn destination(&self, c: Cell, a: Action) -> Cell {
        match self.neighbor(c, a) {
            Some(n) if !self.is_wall(n) => n,
            _ => c,
        }
    }

    /// Breadth-first closure from the start over non-wall cells.
    pub fn reachable_cells(&self) -> BTreeSet<Cell> {
        self.distances_from(self.start)
            .into_iter()
            .map(|(c, _)| c)
            .collect()
    }

    /// Length of the shortest start-to-goal path.
    pub fn optimal_steps(&self) -> Result<usize, GridError> {
        self.distances_from(self.start)
            .into_iter()
            .find(|(c, _)| *c == self.goal)
            .map(|(_, d)| d)
            .ok_or(GridError::Unreachable {
                start: self.start,
                goal: self.goal,
            })
    }

    fn distances_from(&self, origin: Cell) -> Vec<(Cell, usize)> {
        let mut seen = vec![false; self.cell_count()];
        let idx = |c: Cell| c.y * self.width + c.x;
        let mut out = Vec::new();
        let mut queue = VecDeque::from([(origin, 0usize)]);
        seen[idx(origin)] = true;
        while let Some((c, d)) = queue.pop_front() {
            out.push((c, d));
            for a in Action::ALL {
                if let Some(n) = self.neighbor(c, a) {
                    if !self.is_wall(n) && !seen[idx(n)] {
                        seen[idx(n)] = true;
                        queue.push_back((n, d + 1));
                    }
                }
            }
        }
        out
    }

    /// Samples the direction actually taken when `a` is attempted.
    /// Always draws exactly one uniform variate.
    pub fn realized_direction<R: Rng + ?Sized>(&self, a: Action, rng: &mut R) -> Action {
        let u: f64 = rng.gen();
        let [left, right] = a.orthogonal();
        if u < self.p_intended {
            a
        } else if u < self.p_intended + self.p_orthogonal {
            left
        } else {
            right
        }
    }

    pub fn step<R: Rng + ?Sized>(
        &self,
        s: Cell,
        a: Action,
        rng: &mut R,
    ) -> Result<StepOutcome, GridError> {
        if self.is_wall(s) {
            return Err(GridError::StepFromWall(s));
        }
        if s == self.goal {
            return Err(GridError::StepFromGoal(s));
        }
        let direction = self.realized_direction(a, rng);
        let next = self.destination(s, direction);
        let terminal = next == self.goal;
        let reward = if terminal {
            STEP_REWARD + GOAL_BONUS
        } else {
            STEP_REWARD
        };
        Ok(StepOutcome {
            next,
            reward,
            terminal,
        })
    }

    /// ASCII map, top row first: `W` wall, `S` start, `G` goal, `.` free.
    pub fn to_ascii(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for y in (0..self.height).rev() {
            for x in 0..self.width {
                let c = Cell::new(x, y);
                out.push(if c == self.start {
                    'S'
                } else if c == self.goal {
                    'G'
                } else if self.is_wall(c) {
                    'W'
                } else {
                    '.'
                });
            }
            out.push('\n');
        }
        out
    }

    /// Inverse of [`GridConfig::to_ascii`]; probabilities are not part of the
    /// map and are supplied separately.
    pub fn from_ascii(text: &str, p_intended: f64) -> Result<Self, GridError> {
        let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.trim_end().chars().count());
        let (mut start, mut goal) = (None, None);
        let mut walls = BTreeSet::new();
        for (i, row) in rows.iter().enumerate() {
            let row = row.trim_end();
            let ascii_err = |message: String| GridError::Ascii {
                line: i + 1,
                message,
            };
            if row.chars().count() != width {
                return Err(ascii_err(format!(
                    "expected {width} columns, found {}",
                    row.chars().count()
                )));
            }
            let y = height - 1 - i;
            for (x, ch) in row.chars().enumerate() {
                let c = Cell::new(x, y);
                match ch {
                    '.' => {}
                    'W' => {
                        walls.insert(c);
                    }
                    'S' if start.is_none() => start = Some(c),
                    'G' if goal.is_none() => goal = Some(c),
                    'S' | 'G' => return Err(ascii_err(format!("duplicate `{ch}`"))),
                    other => return Err(ascii_err(format!("unexpected `{other}`"))),
                }
            }
        }
        let missing = |what: &str| GridError::Ascii {
            line: 0,
            message: format!("no `{what}` cell"),
        };
        let start = start.ok_or_else(|| missing("S"))?;
        let goal = goal.ok_or_else(|| missing("G"))?;
        Self::new(width, height, walls, start, goal, p_intended)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next: Cell,
    pub reward: f64,
    pub terminal: bool,
}

/// Draws exactly `floor(ratio * width * height)` walls uniformly from the
/// cells other than `start` and `goal`, redrawing the whole layout until the
/// goal is reachable.
pub fn generate_walls<R: Rng + ?Sized>(
    width: usize,
    height: usize,
    ratio: f64,
    start: Cell,
    goal: Cell,
    rng: &mut R,
) -> Result<BTreeSet<Cell>, GridError> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(GridError::BadRatio(ratio));
    }
    let total = width * height;
    // 1e-9 absorbs products like 0.1 * 100 landing just under an integer
    let count = (ratio * total as f64 + 1e-9).floor() as usize;
    let candidates: Vec<Cell> = (0..height)
        .flat_map(|y| (0..width).map(move |x| Cell::new(x, y)))
        .filter(|c| *c != start && *c != goal)
        .collect();
    let failed = GridError::GenerationFailed {
        walls: count,
        width,
        height,
        attempts: MAX_LAYOUT_ATTEMPTS,
    };
    if count > candidates.len() {
        return Err(failed);
    }
    for _ in 0..MAX_LAYOUT_ATTEMPTS {
        let walls: BTreeSet<Cell> = sample(rng, candidates.len(), count)
            .into_iter()
            .map(|i| candidates[i])
            .collect();
        match GridConfig::new(width, height, walls, start, goal, 1.0) {
            Ok(config) => return Ok(config.walls),
            Err(GridError::Unreachable { .. }) => continue,
            Err(other) => return Err(other),
        }
    }
    Err(failed)
}

/// Environment configurations indexed by the episode they take effect at.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    phases: Vec<(usize, GridConfig)>,
}

impl Schedule {
    pub fn new(phases: Vec<(usize, GridConfig)>) -> Result<Self, GridError> {
        match phases.first() {
            Some((0, _)) => {}
            _ => return Err(GridError::BadSchedule),
        }
        if phases.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(GridError::BadSchedule);
        }
        Ok(Schedule { phases })
    }

    pub fn stationary(config: GridConfig) -> Self {
        Schedule {
            phases: vec![(0, config)],
        }
    }

    pub fn phases(&self) -> &[(usize, GridConfig)] {
        &self.phases
    }

    /// Index of the phase in effect at `episode`.
    pub fn phase_at(&self, episode: usize) -> usize {
        self.phases.partition_point(|(start, _)| *start <= episode) - 1
    }

    pub fn config_at(&self, episode: usize) -> &GridConfig {
        &self.phases[self.phase_at(episode)].1
    }

    pub fn is_change(&self, episode: usize) -> bool {
        episode > 0 && self.phases.iter().any(|(start, _)| *start == episode)
    }
}
