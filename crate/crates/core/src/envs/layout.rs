//! Fixed grid layouts.
//!
//! The three-room map is 17 × 8 cells, `y` grows downwards:
//!
//! ```text
//!   x: 0         1
//!      0123456789012345 6
//! y 0        OOOOO
//!   1        OOOOO
//!   2        OOOOO
//!   3  BBBBB OOOOO GGGGG
//!   4  BBBBB OOOOO GGGGG
//!   5  BBBBBHHHHHHHGGGGG
//!   6  BBBBB       GGGGG
//!   7  BBBBB       GGGGG
//! ```
//!
//! Rooms only connect through three openings: blue (4,5)–(5,5), green
//! (12,5)–(11,5) and orange (8,4)–(8,5). The gravity domain uses a single
//! 5 × 5 room.

use std::collections::VecDeque;

use super::Room;

pub type Cell = (u8, u8);

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;
pub const NUM_ACTIONS: usize = 4;

pub fn shift(cell: Cell, action: usize) -> Option<Cell> {
    let (x, y) = cell;
    match action {
        UP => y.checked_sub(1).map(|y| (x, y)),
        DOWN => Some((x, y + 1)),
        LEFT => x.checked_sub(1).map(|x| (x, y)),
        RIGHT => Some((x + 1, y)),
        _ => None,
    }
}

#[derive(Debug, Clone)]
pub struct Layout {
    pub width: u8,
    pub height: u8,
    rooms: Vec<Option<Room>>,
    /// Openings between different rooms.
    openings: Vec<(Cell, Cell)>,
    /// Cells that are walls inside a room.
    blocked: Vec<Cell>,
}

impl Layout {
    pub fn three_rooms() -> Self {
        let (width, height) = (17u8, 8u8);
        let mut rooms = vec![None; width as usize * height as usize];
        let mut fill =
            |xs: std::ops::RangeInclusive<u8>, ys: std::ops::RangeInclusive<u8>, room| {
                for y in ys {
                    for x in xs.clone() {
                        rooms[y as usize * width as usize + x as usize] = Some(room);
                    }
                }
            };
        fill(6..=10, 0..=4, Room::Orange);
        fill(5..=11, 5..=5, Room::Hallway);
        fill(0..=4, 3..=7, Room::Blue);
        fill(12..=16, 3..=7, Room::Green);
        Layout {
            width,
            height,
            rooms,
            openings: vec![((4, 5), (5, 5)), ((11, 5), (12, 5)), ((8, 4), (8, 5))],
            blocked: Vec::new(),
        }
    }

    /// The three-room map with a wall across the orange room at `y = 2`,
    /// leaving only `(8, 2)` open.
    pub fn three_rooms_with_inner_wall() -> Self {
        let mut layout = Self::three_rooms();
        layout.blocked = (6..=10).filter(|&x| x != 8).map(|x| (x, 2)).collect();
        layout
    }

    pub fn single_room(size: u8) -> Self {
        Layout {
            width: size,
            height: size,
            rooms: vec![Some(Room::Single); size as usize * size as usize],
            openings: Vec::new(),
            blocked: Vec::new(),
        }
    }

    pub fn room(&self, cell: Cell) -> Option<Room> {
        if cell.0 >= self.width || cell.1 >= self.height || self.blocked.contains(&cell) {
            return None;
        }
        self.rooms[cell.1 as usize * self.width as usize + cell.0 as usize]
    }

    /// Whether a single move from `a` to the adjacent cell `b` is possible,
    /// ignoring doors.
    pub fn passable(&self, a: Cell, b: Cell) -> bool {
        match (self.room(a), self.room(b)) {
            (Some(ra), Some(rb)) if ra == rb => true,
            (Some(_), Some(_)) => self
                .openings
                .iter()
                .any(|&(p, q)| (p, q) == (a, b) || (q, p) == (a, b)),
            _ => false,
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height)
            .flat_map(move |y| (0..self.width).map(move |x| (x, y)))
            .filter(|&c| self.room(c).is_some())
    }

    /// First action of a shortest path from `from` to `to`, lowest action id
    /// among ties. `None` if already there or unreachable.
    pub fn step_towards(&self, from: Cell, to: Cell) -> Option<usize> {
        if from == to {
            return None;
        }
        let dist = self.distances(to);
        let here = dist[self.index(from)]?;
        (0..NUM_ACTIONS).find(|&a| {
            shift(from, a)
                .filter(|&n| self.passable(from, n))
                .and_then(|n| dist[self.index(n)])
                .is_some_and(|d| d + 1 == here)
        })
    }

    /// Breadth-first distances to `target`.
    pub fn distances(&self, target: Cell) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.width as usize * self.height as usize];
        if self.room(target).is_none() {
            return dist;
        }
        dist[self.index(target)] = Some(0);
        let mut queue = VecDeque::from([target]);
        while let Some(c) = queue.pop_front() {
            let d = dist[self.index(c)].expect("queued cells have a distance");
            for a in 0..NUM_ACTIONS {
                if let Some(n) = shift(c, a) {
                    if self.passable(n, c) && dist[self.index(n)].is_none() {
                        dist[self.index(n)] = Some(d + 1);
                        queue.push_back(n);
                    }
                }
            }
        }
        dist
    }

    fn index(&self, cell: Cell) -> usize {
        cell.1 as usize * self.width as usize + cell.0 as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rooms_connect_only_through_openings() {
        let l = Layout::three_rooms();
        assert_eq!(l.room((8, 5)), Some(Room::Hallway));
        assert!(l.passable((8, 5), (8, 4)));
        assert!(!l.passable((7, 5), (7, 4)));
        assert!(l.passable((5, 5), (4, 5)));
        assert!(!l.passable((4, 4), (5, 4)));
        assert_eq!(l.cells().count(), 25 * 3 + 7);
    }

    #[test]
    fn shortest_paths_cross_the_hallway() {
        let l = Layout::three_rooms();
        let d = l.distances((2, 5));
        assert_eq!(d[5 * 17 + 8], Some(6));
        assert_eq!(l.step_towards((8, 5), (2, 5)), Some(LEFT));
        assert_eq!(l.step_towards((8, 5), (8, 1)), Some(UP));
        let walled = Layout::three_rooms_with_inner_wall();
        assert_eq!(walled.room((7, 2)), None);
        assert_eq!(walled.distances((8, 0))[4 * 17 + 6], Some(6));
    }
}
