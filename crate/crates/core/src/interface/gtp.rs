//! GTP version 2 server.

use std::io::{BufRead, Write};

use crate::board::{Color, Move, Point, Position};
use crate::data::Rank;

use super::engine::{color_from_letter, Action, Engine};

const COLUMNS: &[u8] = b"ABCDEFGHJKLMNOPQRST";

pub const COMMANDS: &[&str] = &[
    "protocol_version",
    "name",
    "version",
    "known_command",
    "list_commands",
    "boardsize",
    "clear_board",
    "komi",
    "play",
    "genmove",
    "undo",
    "final_score",
    "showboard",
    "quit",
    "tengen-set_rank",
    "tengen-set_rollouts",
    "tengen-top_n",
];

/// GTP text for a point, or `pass`. Row 1 is the bottom edge.
pub fn format_vertex(p: Option<Point>, size: usize) -> String {
    match p {
        Some(p) => format!("{}{}", COLUMNS[p.col as usize] as char, size - p.row as usize),
        None => "pass".into(),
    }
}

/// Inverse of [`format_vertex`]; `Ok(None)` is a pass.
pub fn parse_vertex(s: &str, size: usize) -> Result<Option<Point>, String> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("pass") {
        return Ok(None);
    }
    let mut chars = s.chars();
    let letter = chars.next().ok_or("empty vertex")?.to_ascii_uppercase();
    let col = COLUMNS.iter().position(|&c| c as char == letter).ok_or_else(|| format!("bad column in {s:?}"))?;
    let row: usize = chars.as_str().parse().map_err(|_| format!("bad row in {s:?}"))?;
    if col >= size || row == 0 || row > size {
        return Err(format!("{s:?} is off the board"));
    }
    Ok(Some(Point::new(col as u8, (size - row) as u8)))
}

/// Text diagram of the board with GTP coordinates.
pub fn render_board(p: &Position) -> String {
    let size = p.size();
    let letters: String = COLUMNS[..size].iter().map(|&c| format!(" {}", c as char)).collect();
    let mut out = format!("  {letters}\n");
    for row in 0..size {
        let label = size - row;
        out.push_str(&format!("{label:2}"));
        for col in 0..size {
            let c = match p.stone_at(Point::new(col as u8, row as u8)) {
                Some(Color::Black) => 'X',
                Some(Color::White) => 'O',
                None => '.',
            };
            out.push(' ');
            out.push(c);
        }
        out.push_str(&format!(" {label}\n"));
    }
    out.push_str(&format!("  {letters}\n"));
    out.push_str(&format!(
        "captures B {} W {}; {} to play",
        p.captures(Color::Black),
        p.captures(Color::White),
        if p.to_play() == Color::Black { "black" } else { "white" }
    ));
    out
}

pub struct GtpSession {
    engine: Box<dyn Engine>,
    position: Position,
    undo: Vec<Position>,
    komi: f32,
    seed: u64,
    done: bool,
}

type Reply = Result<String, String>;

impl GtpSession {
    pub fn new(mut engine: Box<dyn Engine>, size: usize, komi: f32, seed: u64) -> GtpSession {
        engine.new_game(seed);
        GtpSession { engine, position: Position::new(size).expect("supported board size"), undo: Vec::new(), komi, seed, done: false }
    }

    pub fn position(&self) -> &Position {
        &self.position
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Handles one input line. Returns the full reply, terminated by a blank
    /// line, or `None` for lines with no command.
    pub fn handle_line(&mut self, raw: &str) -> Option<String> {
        let cleaned: String = raw
            .split('#')
            .next()
            .unwrap_or("")
            .chars()
            .filter(|&c| c == '\t' || c == ' ' || !c.is_control())
            .map(|c| if c == '\t' { ' ' } else { c })
            .collect();
        let mut words = cleaned.split_whitespace().peekable();
        let id = match words.peek() {
            Some(w) if w.bytes().all(|b| b.is_ascii_digit()) => words.next(),
            _ => None,
        };
        let command = words.next()?;
        let args: Vec<&str> = words.collect();
        let reply = self.execute(command, &args);
        let id = id.unwrap_or("");
        Some(match reply {
            Ok(text) if text.is_empty() => format!("={id}\n\n"),
            Ok(text) if text.starts_with('\n') => format!("={id}{text}\n\n"),
            Ok(text) => format!("={id} {text}\n\n"),
            Err(msg) => format!("?{id} {msg}\n\n"),
        })
    }

    /// Serves until `quit` or end of input.
    pub fn run<R: BufRead, W: Write>(&mut self, input: R, mut output: W) -> std::io::Result<()> {
        for line in input.lines() {
            if let Some(reply) = self.handle_line(&line?) {
                output.write_all(reply.as_bytes())?;
                output.flush()?;
            }
            if self.done {
                break;
            }
        }
        Ok(())
    }

    fn reset(&mut self, size: usize) {
        self.position = Position::new(size).expect("supported board size");
        self.undo.clear();
        self.engine.new_game(self.seed);
    }

    fn execute(&mut self, command: &str, args: &[&str]) -> Reply {
        let size = self.position.size();
        match command {
            "protocol_version" => Ok("2".into()),
            "name" => Ok("tengen".into()),
            "version" => Ok(env!("CARGO_PKG_VERSION").into()),
            "known_command" => {
                let [name] = args else { return Err("syntax error".into()) };
                Ok(COMMANDS.contains(name).to_string())
            }
            "list_commands" => Ok(COMMANDS.join("\n")),
            "quit" => {
                self.done = true;
                Ok(String::new())
            }
            "boardsize" => {
                let [n] = args else { return Err("syntax error".into()) };
                let n: usize = n.parse().map_err(|_| "syntax error".to_string())?;
                if Position::new(n).is_err() {
                    return Err("unacceptable size".into());
                }
                self.reset(n);
                Ok(String::new())
            }
            "clear_board" => {
                self.reset(size);
                Ok(String::new())
            }
            "komi" => {
                let [k] = args else { return Err("syntax error".into()) };
                let k: f32 = k.parse().map_err(|_| "syntax error".to_string())?;
                if !k.is_finite() {
                    return Err("syntax error".into());
                }
                self.komi = k;
                Ok(String::new())
            }
            "play" => {
                let [c, v] = args else { return Err("syntax error".into()) };
                let color = color_from_letter(c).ok_or("syntax error")?;
                let vertex = parse_vertex(v, size).map_err(|_| "illegal move".to_string())?;
                let m = match vertex {
                    Some(pt) => Move::play(color, pt),
                    None => Move::pass(color),
                };
                self.apply(m)
            }
            "genmove" => {
                let [c] = args else { return Err("syntax error".into()) };
                let color = color_from_letter(c).ok_or("syntax error")?;
                let mut p = self.position.clone();
                if p.to_play() != color {
                    p.set_to_play(color);
                }
                match self.engine.genmove(&p, self.komi).map_err(|e| e.to_string())? {
                    Action::Resign => Ok("resign".into()),
                    Action::Play(m) => {
                        let m = Move { color, ..m };
                        self.apply(m).map_err(|_| format!("engine produced illegal move {}", format_vertex(m.point(), size)))?;
                        Ok(format_vertex(m.point(), size))
                    }
                }
            }
            "undo" => {
                let prev = self.undo.pop().ok_or("cannot undo")?;
                self.position = prev;
                Ok(String::new())
            }
            "final_score" => Ok(self.position.score(self.komi).to_string()),
            "showboard" => Ok(format!("\n{}", render_board(&self.position))),
            "tengen-set_rank" => {
                let [r] = args else { return Err("syntax error".into()) };
                let rank = Rank::parse(r);
                if rank == Rank::Unknown && !matches!(*r, "?" | "unknown") {
                    return Err(format!("invalid rank {r:?}"));
                }
                if self.engine.set_rank(rank) {
                    Ok(String::new())
                } else {
                    Err("engine has no rank input".into())
                }
            }
            "tengen-set_rollouts" => {
                let [n] = args else { return Err("syntax error".into()) };
                let n: usize = n.parse().map_err(|_| "syntax error".to_string())?;
                if n == 0 {
                    return Err("rollouts must be positive".into());
                }
                if self.engine.set_rollouts(n) {
                    Ok(String::new())
                } else {
                    Err("engine does not search".into())
                }
            }
            "tengen-top_n" => {
                let [n] = args else { return Err("syntax error".into()) };
                let n: usize = n.parse().map_err(|_| "syntax error".to_string())?;
                let top = self.engine.top_n(&self.position, n).map_err(|e| e.to_string())?;
                Ok(top.iter().map(|(pt, p)| format!("{} {:.4}", format_vertex(Some(*pt), size), p)).collect::<Vec<_>>().join("\n"))
            }
            _ => Err("unknown command".into()),
        }
    }

    /// Plays `m` for its color, whoever is to move.
    fn apply(&mut self, m: Move) -> Reply {
        let mut next = self.position.clone();
        if next.to_play() != m.color {
            next.set_to_play(m.color);
        }
        next.play_mut(m).map_err(|_| "illegal move".to_string())?;
        self.undo.push(std::mem::replace(&mut self.position, next));
        Ok(String::new())
    }
}
