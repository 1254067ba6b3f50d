//! Static grid geometry and the line-oriented map file format.
//!
//! ```text
//! map <name> <height> <width> <n_agents>
//! <height rows of '#' (blocked) and '.' (free)>
//! [tasks <per-agent-count>]
//! agent <i> start <row> <col> [goal <row> <col>]
//! ```
//!
//! Agents are numbered from 1 in the file and from 0 in memory. Rows and
//! columns are 0-indexed. A map with a `tasks` line is a warehouse map: its
//! agent lines carry no goal and targets are drawn per run.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// A grid cell, addressed row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }

    /// Chebyshev (king-move) distance.
    pub fn chebyshev(self, other: Cell) -> usize {
        self.row.abs_diff(other.row).max(self.col.abs_diff(other.col))
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// One of the four moves. The declaration order is the global action
/// ordering used for every tie-break in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Action {
        Action::ALL[index]
    }

    /// (row, col) unit offset.
    pub fn offset(self) -> (isize, isize) {
        match self {
            Action::Up => (-1, 0),
            Action::Down => (1, 0),
            Action::Left => (0, -1),
            Action::Right => (0, 1),
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
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "up" => Ok(Action::Up),
            "down" => Ok(Action::Down),
            "left" => Ok(Action::Left),
            "right" => Ok(Action::Right),
            other => Err(format!("unknown action `{other}`")),
        }
    }
}

/// Immediate rewards of the grid dynamics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardScheme {
    pub goal: f64,
    pub step: f64,
    /// Bounce caused by another agent.
    pub collision: f64,
    /// Bounce off the border or a blocked cell.
    pub wall: f64,
}

impl Default for RewardScheme {
    fn default() -> Self {
        RewardScheme {
            goal: 100.0,
            step: -1.0,
            collision: -10.0,
            wall: -10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Goals {
    /// One fixed goal per agent.
    Fixed(Vec<Cell>),
    /// Warehouse: each agent gets `per_agent` random targets per run.
    Tasks { per_agent: usize },
}

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct MapError {
    pub line: usize,
    pub message: String,
}

impl MapError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        MapError {
            line,
            message: message.into(),
        }
    }
}

/// Validated environment geometry.
#[derive(Clone, Debug)]
pub struct GridMap {
    name: String,
    height: usize,
    width: usize,
    blocked: Vec<bool>,
    starts: Vec<Cell>,
    goals: Goals,
    rewards: RewardScheme,
    free_index: Vec<Option<usize>>,
    free_cells: Vec<Cell>,
}

impl GridMap {
    /// Builds a map from parts, applying the same checks as the parser.
    pub fn new(
        name: impl Into<String>,
        height: usize,
        width: usize,
        blocked_cells: &[Cell],
        starts: Vec<Cell>,
        goals: Goals,
    ) -> Result<Self, MapError> {
        let mut blocked = vec![false; height * width];
        for c in blocked_cells {
            if c.row >= height || c.col >= width {
                return Err(MapError::new(0, format!("blocked cell {c} out of bounds")));
            }
            blocked[c.row * width + c.col] = true;
        }
        Self::from_parts(name.into(), height, width, blocked, starts, goals, &[0; 0])
    }

    fn from_parts(
        name: String,
        height: usize,
        width: usize,
        blocked: Vec<bool>,
        starts: Vec<Cell>,
        goals: Goals,
        agent_lines: &[usize],
    ) -> Result<Self, MapError> {
        let line_of = |i: usize| agent_lines.get(i).copied().unwrap_or(0);
        if height == 0 || width == 0 {
            return Err(MapError::new(1, "grid must have at least one row and column"));
        }
        let mut map = GridMap {
            name,
            height,
            width,
            blocked,
            starts,
            goals,
            rewards: RewardScheme::default(),
            free_index: Vec::new(),
            free_cells: Vec::new(),
        };
        for (i, &s) in map.starts.iter().enumerate() {
            if !map.in_bounds(s) {
                return Err(MapError::new(
                    line_of(i),
                    format!("agent {} start {s} out of bounds", i + 1),
                ));
            }
            if map.is_blocked(s) {
                return Err(MapError::new(
                    line_of(i),
                    format!("agent {} start {s} is blocked", i + 1),
                ));
            }
            if map.starts[..i].contains(&s) {
                return Err(MapError::new(
                    line_of(i),
                    format!("agent {} start {s} shared with another agent", i + 1),
                ));
            }
        }
        if let Goals::Fixed(goals) = &map.goals {
            if goals.len() != map.starts.len() {
                return Err(MapError::new(0, "every agent needs exactly one goal"));
            }
            for (i, &g) in goals.iter().enumerate() {
                if !map.in_bounds(g) {
                    return Err(MapError::new(
                        line_of(i),
                        format!("agent {} goal {g} out of bounds", i + 1),
                    ));
                }
                if map.is_blocked(g) {
                    return Err(MapError::new(
                        line_of(i),
                        format!("agent {} goal {g} is blocked", i + 1),
                    ));
                }
                if g == map.starts[i] {
                    return Err(MapError::new(
                        line_of(i),
                        format!("agent {} start equals its goal", i + 1),
                    ));
                }
            }
        }
        map.free_index = vec![None; height * width];
        for row in 0..height {
            for col in 0..width {
                let c = Cell::new(row, col);
                if !map.is_blocked(c) {
                    map.free_index[row * width + col] = Some(map.free_cells.len());
                    map.free_cells.push(c);
                }
            }
        }
        Ok(map)
    }

    pub fn with_rewards(mut self, rewards: RewardScheme) -> Self {
        self.rewards = rewards;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn n_agents(&self) -> usize {
        self.starts.len()
    }

    pub fn starts(&self) -> &[Cell] {
        &self.starts
    }

    pub fn goals(&self) -> &Goals {
        &self.goals
    }

    pub fn rewards(&self) -> &RewardScheme {
        &self.rewards
    }

    pub fn is_warehouse(&self) -> bool {
        matches!(self.goals, Goals::Tasks { .. })
    }

    /// Episode step cap guaranteeing termination of degenerate policies.
    pub fn max_steps(&self) -> usize {
        if self.is_warehouse() {
            100_000
        } else {
            10_000
        }
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.row < self.height && c.col < self.width
    }

    pub fn is_blocked(&self, c: Cell) -> bool {
        self.blocked[c.row * self.width + c.col]
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.in_bounds(c) && !self.is_blocked(c)
    }

    pub fn blocked_count(&self) -> usize {
        self.blocked.iter().filter(|&&b| b).count()
    }

    /// Cell reached by `action` from `c`, or `None` if it leaves the grid.
    pub fn neighbor(&self, c: Cell, action: Action) -> Option<Cell> {
        let (dr, dc) = action.offset();
        let row = c.row.checked_add_signed(dr)?;
        let col = c.col.checked_add_signed(dc)?;
        let n = Cell::new(row, col);
        self.in_bounds(n).then_some(n)
    }

    pub fn free_cells(&self) -> &[Cell] {
        &self.free_cells
    }

    pub fn free_index(&self, c: Cell) -> Option<usize> {
        if !self.in_bounds(c) {
            return None;
        }
        self.free_index[c.row * self.width + c.col]
    }

    pub fn free_count(&self) -> usize {
        self.free_cells.len()
    }

    /// Renders the map back into the file format.
    pub fn to_text(&self) -> String {
        let mut out = format!("map {} {} {} {}\n", self.name, self.height, self.width, self.n_agents());
        for row in 0..self.height {
            for col in 0..self.width {
                out.push(if self.is_blocked(Cell::new(row, col)) { '#' } else { '.' });
            }
            out.push('\n');
        }
        if let Goals::Tasks { per_agent } = self.goals {
            out.push_str(&format!("tasks {per_agent}\n"));
        }
        for (i, s) in self.starts.iter().enumerate() {
            out.push_str(&format!("agent {} start {} {}", i + 1, s.row, s.col));
            if let Goals::Fixed(g) = &self.goals {
                out.push_str(&format!(" goal {} {}", g[i].row, g[i].col));
            }
            out.push('\n');
        }
        out
    }
}

impl FromStr for GridMap {
    type Err = MapError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        load_map(text)
    }
}

fn parse_num(tok: Option<&str>, line: usize, what: &str) -> Result<usize, MapError> {
    let tok = tok.ok_or_else(|| MapError::new(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| MapError::new(line, format!("invalid {what} `{tok}`")))
}

/// Parses and validates a map file.
pub fn load_map(text: &str) -> Result<GridMap, MapError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end()))
        .filter(|(_, l)| !l.trim().is_empty());

    let (hline, header) = lines.next().ok_or_else(|| MapError::new(1, "empty map file"))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("map") {
        return Err(MapError::new(hline, "header must start with `map`"));
    }
    let name = toks
        .next()
        .ok_or_else(|| MapError::new(hline, "missing map name"))?
        .to_string();
    let height = parse_num(toks.next(), hline, "height")?;
    let width = parse_num(toks.next(), hline, "width")?;
    let n_agents = parse_num(toks.next(), hline, "agent count")?;
    if toks.next().is_some() {
        return Err(MapError::new(hline, "trailing tokens in header"));
    }
    if height == 0 || width == 0 {
        return Err(MapError::new(hline, "height and width must be positive"));
    }
    if n_agents == 0 {
        return Err(MapError::new(hline, "at least one agent required"));
    }

    let mut blocked = Vec::with_capacity(height * width);
    for r in 0..height {
        let (ln, row) = lines
            .next()
            .ok_or_else(|| MapError::new(hline + r + 1, format!("expected grid row {r}")))?;
        let row = row.trim();
        if row.chars().count() != width {
            return Err(MapError::new(
                ln,
                format!("grid row has {} cells, expected {width}", row.chars().count()),
            ));
        }
        for ch in row.chars() {
            match ch {
                '#' => blocked.push(true),
                '.' => blocked.push(false),
                other => return Err(MapError::new(ln, format!("unexpected grid character `{other}`"))),
            }
        }
    }

    let mut tasks: Option<usize> = None;
    let mut starts: Vec<Option<Cell>> = vec![None; n_agents];
    let mut goals: Vec<Option<Cell>> = vec![None; n_agents];
    let mut agent_lines = vec![0; n_agents];
    for (ln, l) in lines {
        let mut toks = l.split_whitespace();
        match toks.next() {
            Some("tasks") => {
                if tasks.is_some() {
                    return Err(MapError::new(ln, "duplicate `tasks` line"));
                }
                let k = parse_num(toks.next(), ln, "task count")?;
                if k == 0 {
                    return Err(MapError::new(ln, "task count must be positive"));
                }
                tasks = Some(k);
            }
            Some("agent") => {
                let id = parse_num(toks.next(), ln, "agent id")?;
                if id == 0 || id > n_agents {
                    return Err(MapError::new(ln, format!("agent id {id} outside 1..={n_agents}")));
                }
                let i = id - 1;
                if starts[i].is_some() {
                    return Err(MapError::new(ln, format!("agent {id} declared twice")));
                }
                if toks.next() != Some("start") {
                    return Err(MapError::new(ln, "expected `start`"));
                }
                let s = Cell::new(
                    parse_num(toks.next(), ln, "start row")?,
                    parse_num(toks.next(), ln, "start col")?,
                );
                starts[i] = Some(s);
                agent_lines[i] = ln;
                match toks.next() {
                    Some("goal") => {
                        let g = Cell::new(
                            parse_num(toks.next(), ln, "goal row")?,
                            parse_num(toks.next(), ln, "goal col")?,
                        );
                        goals[i] = Some(g);
                    }
                    None => {}
                    Some(other) => return Err(MapError::new(ln, format!("unexpected token `{other}`"))),
                }
                if toks.next().is_some() {
                    return Err(MapError::new(ln, "trailing tokens in agent line"));
                }
            }
            Some(other) => return Err(MapError::new(ln, format!("unexpected line starting with `{other}`"))),
            None => {}
        }
    }

    let last_line = text.lines().count();
    let starts = starts
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.ok_or_else(|| MapError::new(last_line, format!("agent {} not declared", i + 1))))
        .collect::<Result<Vec<_>, _>>()?;
    let goals = match tasks {
        Some(per_agent) => {
            if let Some(i) = goals.iter().position(Option::is_some) {
                return Err(MapError::new(agent_lines[i], "warehouse maps take no goal lines"));
            }
            Goals::Tasks { per_agent }
        }
        None => Goals::Fixed(
            goals
                .into_iter()
                .enumerate()
                .map(|(i, g)| g.ok_or_else(|| MapError::new(agent_lines[i], format!("agent {} has no goal", i + 1))))
                .collect::<Result<_, _>>()?,
        ),
    };
    GridMap::from_parts(name, height, width, blocked, starts, goals, &agent_lines)
}
