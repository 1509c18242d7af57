//! The dihedral group D4 acting on square boards.
//!
//! Elements are numbered 0..8: identity, three clockwise quarter turns, then
//! the four reflections (left-right, top-bottom, main diagonal, anti-diagonal).
//! Element 1 maps `(c, r)` to `(N-1-r, c)`.

use std::sync::OnceLock;

use super::point::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symmetry(u8);

// (transpose, flip column, flip row), applied in that order.
const PARTS: [(bool, bool, bool); 8] = [
    (false, false, false),
    (true, true, false),
    (false, true, true),
    (true, false, true),
    (false, true, false),
    (false, false, true),
    (true, false, false),
    (true, true, true),
];

struct Tables {
    compose: [[u8; 8]; 8],
    inverse: [u8; 8],
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        // An asymmetric probe set pins down each element uniquely.
        const N: usize = 5;
        let probe: Vec<Point> = (0..N * N).map(|i| Point::from_index(i, N)).collect();
        let image = |g: Symmetry| -> Vec<Point> { probe.iter().map(|&p| g.apply(p, N)).collect() };
        let mut compose = [[0u8; 8]; 8];
        let mut inverse = [0u8; 8];
        for a in Symmetry::all() {
            for b in Symmetry::all() {
                let ab: Vec<Point> = probe.iter().map(|&p| a.apply(b.apply(p, N), N)).collect();
                let c = Symmetry::all().find(|&c| image(c) == ab).expect("D4 is closed");
                compose[a.0 as usize][b.0 as usize] = c.0;
                if c == Symmetry::IDENTITY {
                    inverse[a.0 as usize] = b.0;
                }
            }
        }
        Tables { compose, inverse }
    })
}

impl Symmetry {
    pub const IDENTITY: Symmetry = Symmetry(0);
    pub const ROTATE_90: Symmetry = Symmetry(1);

    pub fn new(index: u8) -> Option<Symmetry> {
        (index < 8).then_some(Symmetry(index))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = Symmetry> {
        (0..8).map(Symmetry)
    }

    #[inline]
    pub fn apply(self, p: Point, size: usize) -> Point {
        let (transpose, flip_c, flip_r) = PARTS[self.0 as usize];
        let last = (size - 1) as u8;
        let (mut c, mut r) = if transpose { (p.row, p.col) } else { (p.col, p.row) };
        if flip_c {
            c = last - c;
        }
        if flip_r {
            r = last - r;
        }
        Point::new(c, r)
    }

    #[inline]
    pub fn apply_index(self, index: usize, size: usize) -> usize {
        self.apply(Point::from_index(index, size), size).index(size)
    }

    pub fn inverse(self) -> Symmetry {
        Symmetry(tables().inverse[self.0 as usize])
    }

    /// The element equal to applying `inner` first, then `self`.
    pub fn compose(self, inner: Symmetry) -> Symmetry {
        Symmetry(tables().compose[self.0 as usize][inner.0 as usize])
    }

    /// Permutation `perm[i] = g(i)` of flattened indices on a `size` board.
    pub fn permutation(self, size: usize) -> Vec<usize> {
        (0..size * size).map(|i| self.apply_index(i, size)).collect()
    }
}

/// Maps a row-major `size × size` plane through `g`: `out[g(i)] = input[i]`.
pub fn transform_plane<T: Copy>(input: &[T], size: usize, g: Symmetry, out: &mut [T]) {
    debug_assert_eq!(input.len(), size * size);
    for (i, &v) in input.iter().enumerate() {
        out[g.apply_index(i, size)] = v;
    }
}
