use std::sync::OnceLock;

use super::point::{Point, MAX_POINTS, MAX_SIZE};

pub(crate) const NONE: u16 = u16::MAX;

/// Precomputed adjacency for one board size.
#[derive(Debug)]
pub struct Geometry {
    pub size: usize,
    pub points: usize,
    adj: Vec<[u16; 4]>,
    adj_len: Vec<u8>,
    diag: Vec<[u16; 4]>,
    diag_len: Vec<u8>,
}

impl Geometry {
    fn build(size: usize) -> Geometry {
        let points = size * size;
        let mut adj = vec![[NONE; 4]; points];
        let mut adj_len = vec![0u8; points];
        let mut diag = vec![[NONE; 4]; points];
        let mut diag_len = vec![0u8; points];
        let s = size as i32;
        for i in 0..points {
            let (c, r) = ((i % size) as i32, (i / size) as i32);
            for (dc, dr) in [(0, -1), (-1, 0), (1, 0), (0, 1)] {
                let (nc, nr) = (c + dc, r + dr);
                if nc >= 0 && nc < s && nr >= 0 && nr < s {
                    adj[i][adj_len[i] as usize] = (nr * s + nc) as u16;
                    adj_len[i] += 1;
                }
            }
            for (dc, dr) in [(-1, -1), (1, -1), (-1, 1), (1, 1)] {
                let (nc, nr) = (c + dc, r + dr);
                if nc >= 0 && nc < s && nr >= 0 && nr < s {
                    diag[i][diag_len[i] as usize] = (nr * s + nc) as u16;
                    diag_len[i] += 1;
                }
            }
        }
        Geometry { size, points, adj, adj_len, diag, diag_len }
    }

    /// Shared table for `size`, or `None` when the size is unsupported.
    pub fn for_size(size: usize) -> Option<&'static Geometry> {
        static TABLES: OnceLock<Vec<Geometry>> = OnceLock::new();
        if !(2..=MAX_SIZE).contains(&size) {
            return None;
        }
        let tables = TABLES.get_or_init(|| (0..=MAX_SIZE).map(|s| Geometry::build(s.max(1))).collect());
        Some(&tables[size])
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u16] {
        &self.adj[i][..self.adj_len[i] as usize]
    }

    #[inline]
    pub fn diagonals(&self, i: usize) -> &[u16] {
        &self.diag[i][..self.diag_len[i] as usize]
    }

    #[inline]
    pub fn point(&self, i: usize) -> Point {
        Point::from_index(i, self.size)
    }
}

const WORDS: usize = MAX_POINTS.div_ceil(64);

/// Fixed-capacity bitset over board indices.
#[derive(Clone, Copy, PartialEq, Eq, Default)]
pub struct PointSet([u64; WORDS]);

impl PointSet {
    #[inline]
    pub fn insert(&mut self, i: usize) {
        self.0[i >> 6] |= 1 << (i & 63);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        self.0[i >> 6] &= !(1 << (i & 63));
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn union_with(&mut self, other: &PointSet) {
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a |= *b;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &bits)| {
            let mut bits = bits;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let t = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(w * 64 + t)
            })
        })
    }

    pub fn first(&self) -> Option<usize> {
        self.iter().next()
    }
}

impl std::fmt::Debug for PointSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
