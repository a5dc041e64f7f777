//! Seeded grid-world simulators for the cookie, symbol, 2-keys and gravity
//! domains, with their labelling functions.
//!
//! The three-room domains share one map (see [`layout`]). The agent starts
//! every episode at the hallway centre `(8, 5)` and only sees objects in the
//! room it occupies.
//!
//! | domain  | objects                                                      | cap  |
//! |---------|--------------------------------------------------------------|------|
//! | cookie  | button (8,1); cookie cells (2,5) blue, (14,5) green          | 5000 |
//! | symbol  | board (8,0); club/spade/diamond at x=0 and x=16, y=3/5/7     | 500  |
//! | 2-keys  | key cells (2,4),(2,6),(14,4),(14,6); doors (8,4),(8,2); coffee (8,0) | 500 |
//! | gravity | 5×5 room, start (2,1), button (0,4), cookie (2,0)            | 500  |
//!
//! Any action slips with probability 0.05 to a uniformly chosen different
//! action. In the gravity domain the cookie sits one row above the start, so
//! it stays reachable while the force is on, only much less likely.

pub mod fixtures;
pub mod layout;
pub mod rollout;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::obs::{Alphabet, HighLevelObs};
use layout::{shift, Cell, Layout, DOWN, NUM_ACTIONS, UP};

pub use fixtures::{perfect_cookie_rm, perfect_gravity_rm, scripted_cookie_action};
pub use rollout::{collect_random_traces, RolloutStats};

pub const SLIP_PROBABILITY: f64 = 0.05;
/// Chance that "up" turns into "down" while the gravity force is on.
pub const GRAVITY_PULL: f64 = 0.9;

pub const START: Cell = (8, 5);
pub const BUTTON: Cell = (8, 1);
pub const COOKIE_CELLS: [Cell; 2] = [(2, 5), (14, 5)];
pub const BOARD: Cell = (8, 0);
pub const DOOR_CELLS: [Cell; 2] = [(8, 4), (8, 2)];
pub const COFFEE: Cell = (8, 0);
pub const BLUE_KEYS: [Cell; 2] = [(2, 4), (2, 6)];
pub const GREEN_KEYS: [Cell; 2] = [(14, 4), (14, 6)];
pub const GRAVITY_START: Cell = (2, 1);
pub const GRAVITY_BUTTON: Cell = (0, 4);
pub const GRAVITY_COOKIE: Cell = (2, 0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Cookie,
    Symbol,
    TwoKeys,
    Gravity,
}

impl Domain {
    pub const ALL: [Domain; 4] = [
        Domain::Cookie,
        Domain::Symbol,
        Domain::TwoKeys,
        Domain::Gravity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Domain::Cookie => "cookie",
            Domain::Symbol => "symbol",
            Domain::TwoKeys => "two_keys",
            Domain::Gravity => "gravity",
        }
    }

    pub fn max_steps(self) -> usize {
        match self {
            Domain::Cookie => 5000,
            _ => 500,
        }
    }

    pub fn proposition_names(self) -> &'static [&'static str] {
        match self {
            Domain::Cookie => &["C", "CE", "BP", "R0", "R1", "R2", "R3"],
            Domain::Symbol => &[
                "R0",
                "R1",
                "R2",
                "R3",
                "sym_club",
                "sym_spade",
                "sym_diamond",
                "arrow_left",
                "arrow_right",
                "no_arrow",
                "touched_correct",
                "touched_wrong",
            ],
            Domain::TwoKeys => &[
                "R0",
                "R1",
                "R2",
                "R3",
                "key_here",
                "carrying_key",
                "door1_open",
                "door2_open",
                "coffee_reached",
            ],
            Domain::Gravity => &["CE", "BP"],
        }
    }

    pub fn alphabet(self) -> Alphabet {
        Alphabet::new(self.proposition_names().iter().copied())
            .expect("domain propositions are distinct")
    }

    fn layout(self) -> Layout {
        match self {
            Domain::Cookie | Domain::Symbol => Layout::three_rooms(),
            Domain::TwoKeys => Layout::three_rooms_with_inner_wall(),
            Domain::Gravity => Layout::single_room(5),
        }
    }

    /// The labelling function `L(o, a, o')`. Only `o'` matters for these
    /// domains because observations carry the last step's events.
    pub fn label(self, _prev: Option<(&Observation, usize)>, obs: &Observation) -> HighLevelObs {
        let ab = self.alphabet();
        let mut names: Vec<&str> = Vec::new();
        let room_name = match obs.room {
            Room::Green => Some("R0"),
            Room::Hallway => Some("R1"),
            Room::Blue => Some("R2"),
            Room::Orange => Some("R3"),
            Room::Single => None,
        };
        if self != Domain::Gravity {
            names.extend(room_name);
        }
        let ev = obs.events;
        match self {
            Domain::Cookie => {
                if obs.visible.iter().any(|v| v.kind == ObjectKind::Cookie) {
                    names.push("C");
                }
                if ev.has(Events::COOKIE_EATEN) {
                    names.push("CE");
                }
                if ev.has(Events::BUTTON_PRESSED) {
                    names.push("BP");
                }
            }
            Domain::Gravity => {
                if ev.has(Events::COOKIE_EATEN) {
                    names.push("CE");
                }
                if ev.has(Events::BUTTON_PRESSED) {
                    names.push("BP");
                }
            }
            Domain::Symbol => {
                for v in &obs.visible {
                    if let ObjectKind::Board(sym, arrow) = v.kind {
                        names.push(sym.prop());
                        names.push(arrow.prop());
                    }
                }
                if ev.has(Events::TOUCHED_CORRECT) {
                    names.push("touched_correct");
                }
                if ev.has(Events::TOUCHED_WRONG) {
                    names.push("touched_wrong");
                }
            }
            Domain::TwoKeys => {
                if obs.visible.iter().any(|v| v.kind == ObjectKind::Key) {
                    names.push("key_here");
                }
                if obs.carrying_key {
                    names.push("carrying_key");
                }
                for v in &obs.visible {
                    match v.kind {
                        ObjectKind::Door {
                            index: 0,
                            open: true,
                        } => names.push("door1_open"),
                        ObjectKind::Door {
                            index: 1,
                            open: true,
                        } => names.push("door2_open"),
                        _ => {}
                    }
                }
                if ev.has(Events::COFFEE_REACHED) {
                    names.push("coffee_reached");
                }
            }
        }
        ab.obs(names).expect("labels use the domain's propositions")
    }
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Domain::ALL
            .into_iter()
            .find(|d| d.name() == s || (s == "2keys" && *d == Domain::TwoKeys))
            .ok_or_else(|| Error::Config(format!("unknown domain {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Room {
    Green,
    Hallway,
    Blue,
    Orange,
    /// The gravity domain's only room.
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Club,
    Spade,
    Diamond,
}

impl Symbol {
    pub const ALL: [Symbol; 3] = [Symbol::Club, Symbol::Spade, Symbol::Diamond];

    fn prop(self) -> &'static str {
        match self {
            Symbol::Club => "sym_club",
            Symbol::Spade => "sym_spade",
            Symbol::Diamond => "sym_diamond",
        }
    }

    /// Row of this symbol in the blue and green rooms.
    pub fn row(self) -> u8 {
        match self {
            Symbol::Club => 3,
            Symbol::Spade => 5,
            Symbol::Diamond => 7,
        }
    }
}

/// Which room holds the target symbol. Left is blue, right is green.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arrow {
    Left,
    Right,
    None,
}

impl Arrow {
    pub const ALL: [Arrow; 3] = [Arrow::Left, Arrow::Right, Arrow::None];

    fn prop(self) -> &'static str {
        match self {
            Arrow::Left => "arrow_left",
            Arrow::Right => "arrow_right",
            Arrow::None => "no_arrow",
        }
    }

    fn allows(self, room: Room) -> bool {
        match self {
            Arrow::Left => room == Room::Blue,
            Arrow::Right => room == Room::Green,
            Arrow::None => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjectKind {
    Button,
    Cookie,
    Board(Symbol, Arrow),
    Symbol(Symbol),
    Key,
    Door { index: u8, open: bool },
    Coffee,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Visible {
    pub kind: ObjectKind,
    pub cell: Cell,
}

/// Events caused by the last action, as bit flags.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Events(pub u8);

impl Events {
    pub const BUTTON_PRESSED: u8 = 1;
    pub const COOKIE_EATEN: u8 = 2;
    pub const TOUCHED_CORRECT: u8 = 4;
    pub const TOUCHED_WRONG: u8 = 8;
    pub const COFFEE_REACHED: u8 = 16;

    pub fn has(self, flag: u8) -> bool {
        self.0 & flag != 0
    }
}

/// What the agent sees. Only objects inside the agent's current room are
/// listed; everything else is blacked out. Hashable so it can key a Q-table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Observation {
    pub pos: Cell,
    pub room: Room,
    /// Objects in the current room, sorted.
    pub visible: Vec<Visible>,
    pub carrying_key: bool,
    pub events: Events,
}

/// Full simulator state.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub pos: Cell,
    pub steps: usize,
    pub cookie: Option<Cell>,
    pub board: Option<(Symbol, Arrow)>,
    /// Cells still holding a key.
    pub keys: Vec<Cell>,
    pub carrying_key: bool,
    pub doors_open: [bool; 2],
    pub force_on: bool,
    pub events: Events,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub obs: Observation,
    pub reward: f64,
    pub done: bool,
}

/// One domain instance. [`Env::reset`] must be called before stepping.
#[derive(Debug, Clone)]
pub struct Env {
    domain: Domain,
    layout: Layout,
    state: EnvState,
    rng: ChaCha8Rng,
}

impl Env {
    pub fn new(domain: Domain) -> Self {
        let mut env = Env {
            domain,
            layout: domain.layout(),
            state: EnvState {
                pos: START,
                steps: 0,
                cookie: None,
                board: None,
                keys: Vec::new(),
                carrying_key: false,
                doors_open: [false; 2],
                force_on: false,
                events: Events::default(),
                done: false,
            },
            rng: ChaCha8Rng::seed_from_u64(0),
        };
        env.reset(0);
        env
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn num_actions(&self) -> usize {
        NUM_ACTIONS
    }

    /// Starts a new episode whose randomness is fully determined by `seed`.
    pub fn reset(&mut self, seed: u64) -> Observation {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        let s = &mut self.state;
        s.pos = START;
        s.steps = 0;
        s.cookie = None;
        s.board = None;
        s.keys.clear();
        s.carrying_key = false;
        s.doors_open = [false; 2];
        s.force_on = false;
        s.events = Events::default();
        s.done = false;
        match self.domain {
            Domain::Cookie => {}
            Domain::Symbol => {
                let sym = Symbol::ALL[self.rng.gen_range(0..3)];
                let arrow = Arrow::ALL[self.rng.gen_range(0..3)];
                s.board = Some((sym, arrow));
            }
            Domain::TwoKeys => {
                s.keys = match self.rng.gen_range(0..3) {
                    0 => GREEN_KEYS.to_vec(),
                    1 => BLUE_KEYS.to_vec(),
                    _ => vec![BLUE_KEYS[0], GREEN_KEYS[1]],
                };
            }
            Domain::Gravity => {
                s.pos = GRAVITY_START;
                s.cookie = Some(GRAVITY_COOKIE);
                s.force_on = true;
            }
        }
        self.observe()
    }

    pub fn step(&mut self, action: usize) -> Result<Step> {
        if action >= NUM_ACTIONS {
            return Err(Error::Contract(format!(
                "action {action} is not in 0..{NUM_ACTIONS}"
            )));
        }
        if self.state.done {
            return Err(Error::Contract("episode is over, call reset".into()));
        }
        let mut executed = action;
        if self.rng.gen_bool(SLIP_PROBABILITY) {
            executed = (action + self.rng.gen_range(1..NUM_ACTIONS)) % NUM_ACTIONS;
        }
        if self.domain == Domain::Gravity
            && executed == UP
            && self.state.force_on
            && self.rng.gen_bool(GRAVITY_PULL)
        {
            executed = DOWN;
        }
        self.state.events = Events::default();
        self.state.steps += 1;
        let mut reward = 0.0;
        let mut terminal = false;
        if let Some(target) = shift(self.state.pos, executed) {
            if self.layout.passable(self.state.pos, target) && self.enter_door(target) {
                self.state.pos = target;
                (reward, terminal) = self.on_enter(target);
            }
        }
        self.state.done = terminal || self.state.steps >= self.domain.max_steps();
        Ok(Step {
            obs: self.observe(),
            reward,
            done: self.state.done,
        })
    }

    /// Whether the agent may enter `cell`, opening a closed door with a
    /// carried key. Keys are interchangeable and used up by a door.
    fn enter_door(&mut self, cell: Cell) -> bool {
        if self.domain != Domain::TwoKeys {
            return true;
        }
        match DOOR_CELLS.iter().position(|&d| d == cell) {
            None => true,
            Some(i) if self.state.doors_open[i] => true,
            Some(i) if self.state.carrying_key => {
                self.state.doors_open[i] = true;
                self.state.carrying_key = false;
                true
            }
            Some(_) => false,
        }
    }

    fn on_enter(&mut self, cell: Cell) -> (f64, bool) {
        let s = &mut self.state;
        match self.domain {
            Domain::Cookie => {
                if cell == BUTTON {
                    s.events.0 |= Events::BUTTON_PRESSED;
                    s.cookie = Some(COOKIE_CELLS[self.rng.gen_range(0..2)]);
                } else if s.cookie == Some(cell) {
                    s.events.0 |= Events::COOKIE_EATEN;
                    s.cookie = None;
                    return (1.0, false);
                }
                (0.0, false)
            }
            Domain::Gravity => {
                if cell == GRAVITY_BUTTON {
                    s.events.0 |= Events::BUTTON_PRESSED;
                    s.force_on = !s.force_on;
                } else if cell == GRAVITY_COOKIE {
                    s.events.0 |= Events::COOKIE_EATEN;
                    s.cookie = None;
                    return (1.0, true);
                }
                (0.0, false)
            }
            Domain::Symbol => {
                let Some(sym) = symbol_at(cell) else {
                    return (0.0, false);
                };
                let (target, arrow) = s.board.expect("symbol domain has a board");
                let room = self.layout.room(cell).expect("symbols lie in rooms");
                if sym == target && arrow.allows(room) {
                    s.events.0 |= Events::TOUCHED_CORRECT;
                    (1.0, true)
                } else {
                    s.events.0 |= Events::TOUCHED_WRONG;
                    (-1.0, true)
                }
            }
            Domain::TwoKeys => {
                if cell == COFFEE {
                    s.events.0 |= Events::COFFEE_REACHED;
                    return (1.0, true);
                }
                if !s.carrying_key {
                    if let Some(i) = s.keys.iter().position(|&k| k == cell) {
                        s.keys.remove(i);
                        s.carrying_key = true;
                    }
                }
                (0.0, false)
            }
        }
    }

    /// Every object with its cell, regardless of visibility.
    fn objects(&self) -> Vec<Visible> {
        let s = &self.state;
        let mut out = Vec::new();
        let mut add = |kind, cell| out.push(Visible { kind, cell });
        match self.domain {
            Domain::Cookie => add(ObjectKind::Button, BUTTON),
            Domain::Gravity => add(ObjectKind::Button, GRAVITY_BUTTON),
            Domain::Symbol => {
                let (sym, arrow) = s.board.expect("symbol domain has a board");
                add(ObjectKind::Board(sym, arrow), BOARD);
                for sym in Symbol::ALL {
                    add(ObjectKind::Symbol(sym), (0, sym.row()));
                    add(ObjectKind::Symbol(sym), (16, sym.row()));
                }
            }
            Domain::TwoKeys => {
                for &k in &s.keys {
                    add(ObjectKind::Key, k);
                }
                for (i, &d) in DOOR_CELLS.iter().enumerate() {
                    add(
                        ObjectKind::Door {
                            index: i as u8,
                            open: s.doors_open[i],
                        },
                        d,
                    );
                }
                add(ObjectKind::Coffee, COFFEE);
            }
        }
        if let Some(c) = s.cookie {
            out.push(Visible {
                kind: ObjectKind::Cookie,
                cell: c,
            });
        }
        out
    }

    pub fn observe(&self) -> Observation {
        let room = self
            .layout
            .room(self.state.pos)
            .expect("agent stands on a floor cell");
        let mut visible: Vec<Visible> = self
            .objects()
            .into_iter()
            .filter(|v| self.layout.room(v.cell) == Some(room))
            .collect();
        visible.sort();
        Observation {
            pos: self.state.pos,
            room,
            visible,
            carrying_key: self.state.carrying_key,
            events: self.state.events,
        }
    }

    pub fn label(&self, prev: Option<(&Observation, usize)>, obs: &Observation) -> HighLevelObs {
        self.domain.label(prev, obs)
    }

    pub fn alphabet(&self) -> Alphabet {
        self.domain.alphabet()
    }
}

fn symbol_at(cell: Cell) -> Option<Symbol> {
    if cell.0 != 0 && cell.0 != 16 {
        return None;
    }
    Symbol::ALL.into_iter().find(|s| s.row() == cell.1)
}

#[cfg(test)]
mod tests {
    use super::layout::{LEFT, RIGHT};
    use super::*;

    fn names(domain: Domain, obs: &Observation) -> Vec<String> {
        domain.alphabet().sorted_names(&domain.label(None, obs))
    }

    /// Walks to `to` along shortest paths, retrying after slips.
    fn walk(env: &mut Env, to: Cell) -> Vec<Step> {
        let mut out = Vec::new();
        while let Some(a) = env.layout().step_towards(env.state().pos, to) {
            let step = env.step(a).unwrap();
            let done = step.done;
            out.push(step);
            if done {
                break;
            }
        }
        out
    }

    #[test]
    fn cookie_reset_has_no_cookie() {
        let mut env = Env::new(Domain::Cookie);
        for seed in 0..50 {
            let obs = env.reset(seed);
            assert_eq!(env.state().cookie, None);
            assert_eq!(names(Domain::Cookie, &obs), vec!["R1"]);
        }
    }

    #[test]
    fn reset_is_deterministic() {
        for domain in Domain::ALL {
            let mut a = Env::new(domain);
            let mut b = Env::new(domain);
            assert_eq!(a.reset(7), b.reset(7));
            for t in 0..200 {
                let (x, y) = (a.step(t % 4), b.step(t % 4));
                assert_eq!(x.unwrap(), y.unwrap());
                if a.state().done {
                    break;
                }
            }
        }
    }

    #[test]
    fn key_placements_cover_all_three_cases() {
        let mut env = Env::new(Domain::TwoKeys);
        let mut counts = [0; 3];
        for seed in 0..1000 {
            env.reset(seed);
            let keys = &env.state().keys;
            let green = keys.iter().filter(|k| GREEN_KEYS.contains(k)).count();
            counts[green] += 1;
        }
        assert!(counts.iter().all(|&c| c > 250), "{counts:?}");
    }

    #[test]
    fn button_press_then_eat() {
        let mut env = Env::new(Domain::Cookie);
        env.reset(3);
        let steps = walk(&mut env, BUTTON);
        let last = steps.last().unwrap();
        assert!(names(Domain::Cookie, &last.obs).contains(&"BP".to_string()));
        let cookie = env.state().cookie.expect("press spawns a cookie");
        let steps = walk(&mut env, cookie);
        let last = steps.last().unwrap();
        assert_eq!(last.reward, 1.0);
        assert!(!last.done);
        assert_eq!(env.state().cookie, None);
        let expected = if cookie == COOKIE_CELLS[1] {
            vec!["CE", "R0"]
        } else {
            vec!["CE", "R2"]
        };
        assert_eq!(names(Domain::Cookie, &last.obs), expected);
    }

    #[test]
    fn cookie_in_green_room_is_eaten_with_r0_ce() {
        for seed in 0..20 {
            let mut env = Env::new(Domain::Cookie);
            env.reset(seed);
            walk(&mut env, BUTTON);
            if env.state().cookie == Some(COOKIE_CELLS[1]) {
                let last = walk(&mut env, COOKIE_CELLS[1]).pop().unwrap();
                assert_eq!(names(Domain::Cookie, &last.obs), vec!["CE", "R0"]);
                return;
            }
        }
        panic!("no seed put the cookie in the green room");
    }

    #[test]
    fn cookie_episodes_end_at_the_cap() {
        let mut env = Env::new(Domain::Cookie);
        env.reset(1);
        let mut n = 0;
        loop {
            n += 1;
            if env.step(UP).unwrap().done {
                break;
            }
        }
        assert_eq!(n, 5000);
        assert!(env.step(UP).is_err());
    }

    #[test]
    fn invalid_action_is_rejected() {
        let mut env = Env::new(Domain::Cookie);
        assert!(matches!(env.step(4), Err(Error::Contract(_))));
    }

    #[test]
    fn symbol_touch_ends_episode() {
        let mut env = Env::new(Domain::Symbol);
        env.reset(11);
        let (sym, arrow) = env.state().board.unwrap();
        let wrong_room = if arrow == Arrow::Right {
            (0, sym.row())
        } else {
            (16, sym.row())
        };
        let target = if arrow == Arrow::None {
            (0, Symbol::ALL[(sym as usize + 1) % 3].row())
        } else {
            wrong_room
        };
        let last = walk(&mut env, target).pop().unwrap();
        // A slip can reach another symbol first; every touch is terminal.
        assert!(last.done);
        assert!(last.reward == 1.0 || last.reward == -1.0);
        if env.state().pos == target {
            assert_eq!(last.reward, -1.0);
            assert!(names(Domain::Symbol, &last.obs).contains(&"touched_wrong".to_string()));
        }
    }

    #[test]
    fn board_is_only_visible_in_orange() {
        let mut env = Env::new(Domain::Symbol);
        let obs = env.reset(4);
        assert!(obs.visible.is_empty());
        let steps = walk(&mut env, (8, 3));
        let names = names(Domain::Symbol, &steps.last().unwrap().obs);
        assert!(names.contains(&"R3".to_string()));
        assert_eq!(names.len(), 3, "{names:?}");
    }

    #[test]
    fn two_keys_doors_need_keys() {
        let mut env = Env::new(Domain::TwoKeys);
        env.reset(0);
        // Without a key the door stays shut.
        for _ in 0..20 {
            env.step(UP).unwrap();
        }
        assert_eq!(env.layout().room(env.state().pos), Some(Room::Hallway));
        let key = env.state().keys[0];
        walk(&mut env, key);
        assert!(env.state().carrying_key);
        walk(&mut env, DOOR_CELLS[0]);
        assert!(env.state().doors_open[0] && !env.state().carrying_key);
        let obs = env.observe();
        assert!(names(Domain::TwoKeys, &obs).contains(&"door1_open".to_string()));
    }

    #[test]
    fn gravity_button_toggles_force() {
        let mut env = Env::new(Domain::Gravity);
        env.reset(0);
        assert!(env.state().force_on);
        let steps = walk(&mut env, GRAVITY_BUTTON);
        assert_eq!(
            names(Domain::Gravity, &steps.last().unwrap().obs),
            vec!["BP"]
        );
        assert!(!env.state().force_on);
        env.step(RIGHT).unwrap();
        env.step(LEFT).unwrap();
        if env.state().pos == GRAVITY_BUTTON {
            assert!(env.state().force_on);
        }
    }

    #[test]
    fn domain_names_parse() {
        for d in Domain::ALL {
            assert_eq!(d.name().parse::<Domain>().unwrap(), d);
        }
        assert!("maze".parse::<Domain>().is_err());
    }
}
