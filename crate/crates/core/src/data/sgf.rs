//! Main-line SGF (FF[4]) reader for Go game records.

use thiserror::Error;

use crate::board::{Color, Move, Point, MAX_SIZE};

use super::Rank;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SgfError {
    #[error("malformed SGF at byte {offset}: {reason}")]
    MalformedSgf { offset: usize, reason: &'static str },
    #[error("unsupported board size {0}")]
    UnsupportedBoardSize(String),
}

fn malformed(offset: usize, reason: &'static str) -> SgfError {
    SgfError::MalformedSgf { offset, reason }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgfGame {
    pub size: usize,
    pub komi: f32,
    pub black_rank: Option<String>,
    pub white_rank: Option<String>,
    pub handicap: u32,
    pub setup: Vec<(Point, Color)>,
    pub moves: Vec<Move>,
    pub result: Option<String>,
}

impl SgfGame {
    pub fn new(size: usize) -> SgfGame {
        SgfGame { size, komi: 0.0, black_rank: None, white_rank: None, handicap: 0, setup: Vec::new(), moves: Vec::new(), result: None }
    }

    pub fn rank_of(&self, color: Color) -> Rank {
        let s = match color {
            Color::Black => &self.black_rank,
            Color::White => &self.white_rank,
        };
        s.as_deref().map(Rank::parse).unwrap_or(Rank::Unknown)
    }

    /// Side to move before the first recorded move.
    pub fn first_to_play(&self) -> Color {
        match self.moves.first() {
            Some(m) => m.color,
            None if self.handicap >= 2 || self.setup.iter().any(|s| s.1 == Color::Black) => Color::White,
            None => Color::Black,
        }
    }

    /// Serialises the game as a single-branch SGF record.
    pub fn to_sgf(&self) -> String {
        let mut out = format!("(;GM[1]FF[4]CA[UTF-8]SZ[{}]KM[{}]", self.size, self.komi);
        if self.handicap > 0 {
            out.push_str(&format!("HA[{}]", self.handicap));
        }
        if let Some(r) = &self.black_rank {
            out.push_str(&format!("BR[{}]", escape(r)));
        }
        if let Some(r) = &self.white_rank {
            out.push_str(&format!("WR[{}]", escape(r)));
        }
        if let Some(r) = &self.result {
            out.push_str(&format!("RE[{}]", escape(r)));
        }
        for (tag, color) in [("AB", Color::Black), ("AW", Color::White)] {
            let pts: Vec<_> = self.setup.iter().filter(|s| s.1 == color).collect();
            if !pts.is_empty() {
                out.push_str(tag);
                for (p, _) in pts {
                    out.push_str(&format!("[{}]", point_code(*p)));
                }
            }
        }
        for m in &self.moves {
            let v = m.point().map(point_code).unwrap_or_default();
            out.push_str(&format!(";{}[{}]", m.color.letter(), v));
        }
        out.push_str(")\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace(']', "\\]")
}

fn point_code(p: Point) -> String {
    let mut s = String::with_capacity(2);
    s.push((b'a' + p.col) as char);
    s.push((b'a' + p.row) as char);
    s
}

struct Property {
    ident: String,
    values: Vec<(usize, String)>,
}

struct Cursor<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn value(&mut self) -> Result<(usize, String), SgfError> {
        let start = self.pos;
        debug_assert_eq!(self.peek(), Some(b'['));
        self.pos += 1;
        let mut bytes = Vec::new();
        loop {
            match self.peek() {
                None => return Err(malformed(start, "unterminated property value")),
                Some(b']') => {
                    self.pos += 1;
                    break;
                }
                Some(b'\\') => {
                    self.pos += 1;
                    match self.peek() {
                        None => return Err(malformed(start, "unterminated property value")),
                        Some(c) => {
                            bytes.push(c);
                            self.pos += 1;
                        }
                    }
                }
                Some(c) => {
                    bytes.push(c);
                    self.pos += 1;
                }
            }
        }
        Ok((start, String::from_utf8_lossy(&bytes).into_owned()))
    }

    fn node(&mut self) -> Result<Vec<Property>, SgfError> {
        let mut props = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                Some(c) if c.is_ascii_alphabetic() => {
                    let start = self.pos;
                    let mut ident = String::new();
                    while let Some(c) = self.peek().filter(u8::is_ascii_alphabetic) {
                        // Old-style long names ("AddBlack") keep only capitals.
                        if c.is_ascii_uppercase() {
                            ident.push(c as char);
                        }
                        self.pos += 1;
                    }
                    self.skip_ws();
                    if self.peek() != Some(b'[') {
                        return Err(malformed(start, "property without value"));
                    }
                    let mut values = Vec::new();
                    while self.peek() == Some(b'[') {
                        values.push(self.value()?);
                        self.skip_ws();
                    }
                    props.push(Property { ident, values });
                }
                _ => return Ok(props),
            }
        }
    }
}

/// Main-line nodes of the first game tree in `text`.
fn main_line(text: &[u8]) -> Result<Vec<Vec<Property>>, SgfError> {
    let mut cur = Cursor { text, pos: 0 };
    // Skip anything before the first game tree.
    while cur.peek().is_some_and(|c| c != b'(') {
        cur.pos += 1;
    }
    if cur.peek().is_none() {
        return Err(malformed(cur.pos, "no game tree"));
    }
    struct Frame {
        main: bool,
        child_seen: bool,
    }
    let mut stack: Vec<Frame> = Vec::new();
    let mut nodes = Vec::new();
    loop {
        cur.skip_ws();
        let at = cur.pos;
        match cur.peek() {
            None => return Err(malformed(at, "unexpected end of input")),
            Some(b'(') => {
                cur.pos += 1;
                let main = match stack.last_mut() {
                    None => true,
                    Some(parent) => {
                        let main = parent.main && !parent.child_seen;
                        parent.child_seen = true;
                        main
                    }
                };
                stack.push(Frame { main, child_seen: false });
            }
            Some(b')') => {
                cur.pos += 1;
                if stack.pop().is_none() {
                    return Err(malformed(at, "unbalanced ')'"));
                }
                if stack.is_empty() {
                    return Ok(nodes);
                }
            }
            Some(b';') => {
                cur.pos += 1;
                let frame = stack.last().ok_or(malformed(at, "node outside game tree"))?;
                if frame.child_seen {
                    return Err(malformed(at, "node after variation"));
                }
                let main = frame.main;
                let props = cur.node()?;
                if main {
                    nodes.push(props);
                }
            }
            Some(_) => return Err(malformed(at, "unexpected character")),
        }
    }
}

fn parse_point(value: &str, size: usize, offset: usize) -> Result<Option<Point>, SgfError> {
    let b = value.trim().as_bytes();
    if b.is_empty() || (size <= 19 && b == b"tt") {
        return Ok(None);
    }
    if b.len() != 2 || !b[0].is_ascii_lowercase() || !b[1].is_ascii_lowercase() {
        return Err(malformed(offset, "bad point value"));
    }
    let p = Point::new(b[0] - b'a', b[1] - b'a');
    if !p.on_board(size) {
        return Err(malformed(offset, "point off the board"));
    }
    Ok(Some(p))
}

fn parse_point_list(value: &str, size: usize, offset: usize, out: &mut Vec<Point>) -> Result<(), SgfError> {
    match value.split_once(':') {
        None => {
            if let Some(p) = parse_point(value, size, offset)? {
                out.push(p);
            }
        }
        Some((a, b)) => {
            let a = parse_point(a, size, offset)?.ok_or(malformed(offset, "bad rectangle"))?;
            let b = parse_point(b, size, offset)?.ok_or(malformed(offset, "bad rectangle"))?;
            for row in a.row.min(b.row)..=a.row.max(b.row) {
                for col in a.col.min(b.col)..=a.col.max(b.col) {
                    out.push(Point::new(col, row));
                }
            }
        }
    }
    Ok(())
}

fn parse_size(value: &str) -> Result<usize, SgfError> {
    let v = value.trim();
    let (a, b) = v.split_once(':').unwrap_or((v, v));
    match (a.trim().parse::<usize>(), b.trim().parse::<usize>()) {
        (Ok(a), Ok(b)) if a == b && (2..=MAX_SIZE).contains(&a) => Ok(a),
        _ => Err(SgfError::UnsupportedBoardSize(v.to_string())),
    }
}

pub fn parse_sgf(text: &[u8]) -> Result<SgfGame, SgfError> {
    let nodes = main_line(text)?;
    let size = match nodes.first().and_then(|n| n.iter().find(|p| p.ident == "SZ")) {
        Some(p) => parse_size(&p.values[0].1)?,
        None => 19,
    };
    let mut game = SgfGame::new(size);
    for node in &nodes {
        for prop in node {
            let (offset, first) = (prop.values[0].0, prop.values[0].1.as_str());
            match prop.ident.as_str() {
                "KM" => game.komi = first.trim().parse().unwrap_or(0.0),
                "HA" => game.handicap = first.trim().parse().unwrap_or(0),
                "BR" => game.black_rank = Some(first.to_string()),
                "WR" => game.white_rank = Some(first.to_string()),
                "RE" => game.result = Some(first.to_string()),
                "AB" | "AW" => {
                    let color = if prop.ident == "AB" { Color::Black } else { Color::White };
                    let mut pts = Vec::new();
                    for (off, v) in &prop.values {
                        parse_point_list(v, size, *off, &mut pts)?;
                    }
                    game.setup.extend(pts.into_iter().map(|p| (p, color)));
                }
                "B" | "W" => {
                    let color = if prop.ident == "B" { Color::Black } else { Color::White };
                    game.moves.push(match parse_point(first, size, offset)? {
                        Some(p) => Move::play(color, p),
                        None => Move::pass(color),
                    });
                }
                _ => {}
            }
        }
    }
    Ok(game)
}
