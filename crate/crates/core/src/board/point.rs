use std::fmt;

/// Largest supported board dimension.
pub const MAX_SIZE: usize = 19;
/// Number of intersections on the largest board.
pub const MAX_POINTS: usize = MAX_SIZE * MAX_SIZE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Color {
    Black,
    White,
}

impl Color {
    #[inline]
    pub fn opponent(self) -> Color {
        match self {
            Color::Black => Color::White,
            Color::White => Color::Black,
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Color::Black => 0,
            Color::White => 1,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Color::Black => 'B',
            Color::White => 'W',
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Color::Black => "black",
            Color::White => "white",
        })
    }
}

/// An intersection, `(col, row)` with `(0, 0)` at the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub col: u8,
    pub row: u8,
}

impl Point {
    #[inline]
    pub const fn new(col: u8, row: u8) -> Point {
        Point { col, row }
    }

    /// Flattened row-major index on a board of `size`.
    #[inline]
    pub fn index(self, size: usize) -> usize {
        self.row as usize * size + self.col as usize
    }

    #[inline]
    pub fn from_index(index: usize, size: usize) -> Point {
        Point::new((index % size) as u8, (index / size) as u8)
    }

    #[inline]
    pub fn on_board(self, size: usize) -> bool {
        (self.col as usize) < size && (self.row as usize) < size
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.col, self.row)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Play(Point),
    Pass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Move {
    pub color: Color,
    pub kind: MoveKind,
}

impl Move {
    pub const fn play(color: Color, point: Point) -> Move {
        Move { color, kind: MoveKind::Play(point) }
    }

    pub const fn pass(color: Color) -> Move {
        Move { color, kind: MoveKind::Pass }
    }

    pub fn point(&self) -> Option<Point> {
        match self.kind {
            MoveKind::Play(p) => Some(p),
            MoveKind::Pass => None,
        }
    }

    pub fn is_pass(&self) -> bool {
        matches!(self.kind, MoveKind::Pass)
    }
}
