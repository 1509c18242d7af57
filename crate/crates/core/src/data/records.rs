//! Binary example files.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! header:  "TGDS" | version u16 | board size u8 | reserved u8
//! record:  payload length u32 | payload | crc32(payload) u32
//! payload: game id u32 | side to move u8 | rank code u8 | expert u16
//!          | 5 × recent point u16 (0xffff = none) | cells, 2 bits each
//! ```
//!
//! Every file has a sidecar `<file>.manifest` of `key=value` lines.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::board::{Color, Point, RECENT_MOVES};

use super::{Rank, Snapshot, TrainingExample};

pub const MAGIC: &[u8; 4] = b"TGDS";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: u64 = 8;
const NO_POINT: u16 = 0xffff;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt record at byte offset {offset}")]
    CorruptRecord { offset: u64 },
    #[error("unsupported format version {found} (expected {FORMAT_VERSION})")]
    VersionMismatch { found: u16 },
    #[error("not a dataset file")]
    BadMagic,
    #[error("bad manifest: {0}")]
    BadManifest(String),
    #[error("example for a {found}x{found} board in a {expected}x{expected} dataset")]
    SizeMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitTag {
    Train,
    Test,
    All,
}

impl SplitTag {
    fn as_str(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Test => "test",
            SplitTag::All => "all",
        }
    }

    fn parse(s: &str) -> Option<SplitTag> {
        match s {
            "train" => Some(SplitTag::Train),
            "test" => Some(SplitTag::Test),
            "all" => Some(SplitTag::All),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub records: u64,
    pub games: u64,
    pub split: SplitTag,
    pub format_version: u16,
    pub board_size: usize,
    /// Examples per rank label (`6d`, `3k`, `?`, ...).
    pub rank_histogram: BTreeMap<String, u64>,
}

impl DatasetManifest {
    pub fn describe(examples: &[TrainingExample], split: SplitTag, board_size: usize) -> DatasetManifest {
        let mut rank_histogram = BTreeMap::new();
        let mut games: Vec<u32> = examples.iter().map(|e| e.game_id).collect();
        games.sort_unstable();
        games.dedup();
        for e in examples {
            *rank_histogram.entry(e.rank.to_string()).or_insert(0) += 1;
        }
        DatasetManifest { records: examples.len() as u64, games: games.len() as u64, split, format_version: FORMAT_VERSION, board_size, rank_histogram }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "format_version={}\nboard_size={}\nsplit={}\nrecords={}\ngames={}\n",
            self.format_version,
            self.board_size,
            self.split.as_str(),
            self.records,
            self.games
        );
        for (rank, n) in &self.rank_histogram {
            s.push_str(&format!("rank.{rank}={n}\n"));
        }
        s
    }

    pub fn parse(text: &str) -> Result<DatasetManifest, DataError> {
        let bad = |m: &str| DataError::BadManifest(m.to_string());
        let mut m = DatasetManifest { records: 0, games: 0, split: SplitTag::All, format_version: 0, board_size: 0, rank_histogram: BTreeMap::new() };
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (k, v) = line.split_once('=').ok_or_else(|| bad(line))?;
            let num = || v.trim().parse::<u64>().map_err(|_| bad(line));
            match k.trim() {
                "format_version" => m.format_version = num()? as u16,
                "board_size" => m.board_size = num()? as usize,
                "split" => m.split = SplitTag::parse(v.trim()).ok_or_else(|| bad(line))?,
                "records" => m.records = num()?,
                "games" => m.games = num()?,
                key => match key.strip_prefix("rank.") {
                    Some(rank) => {
                        m.rank_histogram.insert(rank.to_string(), num()?);
                    }
                    None => return Err(bad(line)),
                },
            }
        }
        if m.rank_histogram.values().sum::<u64>() != m.records {
            return Err(bad("rank histogram does not sum to record count"));
        }
        Ok(m)
    }
}

pub fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

fn payload_len(size: usize) -> usize {
    4 + 1 + 1 + 2 + 2 * RECENT_MOVES + (size * size).div_ceil(4)
}

fn point_code(p: Option<Point>, size: usize) -> u16 {
    p.map(|p| p.index(size) as u16).unwrap_or(NO_POINT)
}

pub fn encode_example(e: &TrainingExample, out: &mut Vec<u8>) {
    let size = e.snapshot.size;
    out.extend_from_slice(&e.game_id.to_le_bytes());
    out.push(e.snapshot.to_play.index() as u8);
    out.push(e.rank.code());
    out.extend_from_slice(&(e.expert.index(size) as u16).to_le_bytes());
    for r in e.snapshot.recent {
        out.extend_from_slice(&point_code(r, size).to_le_bytes());
    }
    let start = out.len();
    out.resize(start + (size * size).div_ceil(4), 0);
    for (i, c) in e.snapshot.cells.iter().enumerate() {
        let v = match c {
            None => 0u8,
            Some(Color::Black) => 1,
            Some(Color::White) => 2,
        };
        out[start + i / 4] |= v << (2 * (i % 4));
    }
}

/// Decodes one payload; `None` when any field is out of range.
pub fn decode_example(payload: &[u8], size: usize) -> Option<TrainingExample> {
    if payload.len() != payload_len(size) {
        return None;
    }
    let n = size * size;
    let u16_at = |o: usize| u16::from_le_bytes([payload[o], payload[o + 1]]);
    let game_id = u32::from_le_bytes(payload[0..4].try_into().ok()?);
    let to_play = match payload[4] {
        0 => Color::Black,
        1 => Color::White,
        _ => return None,
    };
    let rank = Rank::from_code(payload[5])?;
    let expert = u16_at(6) as usize;
    if expert >= n {
        return None;
    }
    let mut recent = [None; RECENT_MOVES];
    for (k, r) in recent.iter_mut().enumerate() {
        let code = u16_at(8 + 2 * k);
        if code != NO_POINT {
            if code as usize >= n {
                return None;
            }
            *r = Some(Point::from_index(code as usize, size));
        }
    }
    let grid = &payload[8 + 2 * RECENT_MOVES..];
    let mut cells = Vec::with_capacity(n);
    for i in 0..n {
        cells.push(match (grid[i / 4] >> (2 * (i % 4))) & 3 {
            0 => None,
            1 => Some(Color::Black),
            2 => Some(Color::White),
            _ => return None,
        });
    }
    // Padding bits past the last cell must be zero.
    if !n.is_multiple_of(4) && grid[n / 4] >> (2 * (n % 4)) != 0 {
        return None;
    }
    Some(TrainingExample { snapshot: Snapshot { size, cells, to_play, recent }, expert: Point::from_index(expert, size), rank, game_id })
}

pub struct RecordWriter<W: Write> {
    out: W,
    size: usize,
    buf: Vec<u8>,
    written: u64,
}

impl RecordWriter<BufWriter<File>> {
    pub fn create(path: &Path, size: usize) -> Result<Self, DataError> {
        RecordWriter::new(BufWriter::new(File::create(path)?), size)
    }
}

impl<W: Write> RecordWriter<W> {
    pub fn new(mut out: W, size: usize) -> Result<Self, DataError> {
        out.write_all(MAGIC)?;
        out.write_all(&FORMAT_VERSION.to_le_bytes())?;
        out.write_all(&[size as u8, 0])?;
        Ok(RecordWriter { out, size, buf: Vec::new(), written: 0 })
    }

    pub fn write(&mut self, e: &TrainingExample) -> Result<(), DataError> {
        if e.snapshot.size != self.size {
            return Err(DataError::SizeMismatch { expected: self.size, found: e.snapshot.size });
        }
        self.buf.clear();
        encode_example(e, &mut self.buf);
        self.out.write_all(&(self.buf.len() as u32).to_le_bytes())?;
        self.out.write_all(&self.buf)?;
        self.out.write_all(&crc32fast::hash(&self.buf).to_le_bytes())?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, DataError> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Streaming reader. Yields examples until the end of the file or the first
/// damaged record, which is reported once; iteration then stops.
pub struct RecordReader<R: Read> {
    input: R,
    size: usize,
    offset: u64,
    done: bool,
    buf: Vec<u8>,
}

impl RecordReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self, DataError> {
        RecordReader::new(BufReader::new(File::open(path)?))
    }
}

impl<R: Read> RecordReader<R> {
    pub fn new(mut input: R) -> Result<Self, DataError> {
        let mut header = [0u8; HEADER_LEN as usize];
        input.read_exact(&mut header).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => DataError::BadMagic,
            _ => DataError::Io(e),
        })?;
        if &header[0..4] != MAGIC {
            return Err(DataError::BadMagic);
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != FORMAT_VERSION {
            return Err(DataError::VersionMismatch { found: version });
        }
        let size = header[6] as usize;
        if crate::board::Position::new(size).is_err() {
            return Err(DataError::CorruptRecord { offset: 6 });
        }
        Ok(RecordReader { input, size, offset: HEADER_LEN, done: false, buf: Vec::new() })
    }

    pub fn board_size(&self) -> usize {
        self.size
    }

    fn read_record(&mut self) -> Result<Option<TrainingExample>, DataError> {
        let start = self.offset;
        let corrupt = DataError::CorruptRecord { offset: start };
        let mut len = [0u8; 4];
        let got = read_full(&mut self.input, &mut len)?;
        if got == 0 {
            return Ok(None);
        }
        if got < 4 {
            return Err(corrupt);
        }
        let len = u32::from_le_bytes(len) as usize;
        if len != payload_len(self.size) {
            return Err(corrupt);
        }
        self.buf.resize(len + 4, 0);
        if read_full(&mut self.input, &mut self.buf)? < len + 4 {
            return Err(corrupt);
        }
        let (payload, crc) = self.buf.split_at(len);
        if crc32fast::hash(payload).to_le_bytes() != crc {
            return Err(corrupt);
        }
        let e = decode_example(payload, self.size).ok_or(corrupt)?;
        self.offset += 4 + len as u64 + 4;
        Ok(Some(e))
    }
}

fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut n = 0;
    while n < buf.len() {
        match r.read(&mut buf[n..]) {
            Ok(0) => break,
            Ok(k) => n += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(n)
}

impl<R: Read> Iterator for RecordReader<R> {
    type Item = Result<TrainingExample, DataError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.read_record() {
            Ok(Some(e)) => Some(Ok(e)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Writes `examples` to `path` plus its manifest sidecar.
pub fn write_records(path: &Path, examples: &[TrainingExample], split: SplitTag) -> Result<DatasetManifest, DataError> {
    let size = examples.first().map(|e| e.snapshot.size).unwrap_or(19);
    let mut w = RecordWriter::create(path, size)?;
    for e in examples {
        w.write(e)?;
    }
    w.finish()?;
    let manifest = DatasetManifest::describe(examples, split, size);
    std::fs::write(manifest_path(path), manifest.to_text())?;
    Ok(manifest)
}

pub fn read_records(path: &Path) -> Result<RecordReader<BufReader<File>>, DataError> {
    RecordReader::open(path)
}

/// Reads a whole file into memory.
pub fn load_records(path: &Path) -> Result<Vec<TrainingExample>, DataError> {
    read_records(path)?.collect()
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest, DataError> {
    DatasetManifest::parse(&std::fs::read_to_string(manifest_path(path))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example(size: usize) -> TrainingExample {
        let mut cells = vec![None; size * size];
        cells[0] = Some(Color::Black);
        cells[size * size - 1] = Some(Color::White);
        TrainingExample {
            snapshot: Snapshot { size, cells, to_play: Color::White, recent: [Some(Point::new(0, 0)), None, None, None, None] },
            expert: Point::new(1, 1),
            rank: Rank::Dan(4),
            game_id: 42,
        }
    }

    #[test]
    fn payload_round_trip() {
        for size in [5, 9, 19] {
            let e = example(size);
            let mut buf = Vec::new();
            encode_example(&e, &mut buf);
            assert_eq!(buf.len(), payload_len(size));
            assert_eq!(decode_example(&buf, size), Some(e));
        }
    }

    #[test]
    fn truncated_stream_reports_offset() {
        let mut w = RecordWriter::new(Vec::new(), 9).unwrap();
        for _ in 0..3 {
            w.write(&example(9)).unwrap();
        }
        let bytes = w.finish().unwrap();
        let cut = &bytes[..bytes.len() - 5];
        let items: Vec<_> = RecordReader::new(cut).unwrap().collect();
        assert_eq!(items.len(), 3);
        assert!(items[0].is_ok() && items[1].is_ok());
        let rec = 4 + payload_len(9) as u64 + 4;
        assert!(matches!(items[2], Err(DataError::CorruptRecord { offset }) if offset == HEADER_LEN + 2 * rec));
    }

    #[test]
    fn flipped_byte_is_corrupt() {
        let mut w = RecordWriter::new(Vec::new(), 9).unwrap();
        w.write(&example(9)).unwrap();
        let mut bytes = w.finish().unwrap();
        bytes[20] ^= 0x10;
        let items: Vec<_> = RecordReader::new(&bytes[..]).unwrap().collect();
        assert!(matches!(items[0], Err(DataError::CorruptRecord { offset: HEADER_LEN })));
    }

    #[test]
    fn header_checks() {
        assert!(matches!(RecordReader::new(&b"NOPE\x01\x00\x09\x00"[..]), Err(DataError::BadMagic)));
        assert!(matches!(RecordReader::new(&b"TGDS\x02\x00\x09\x00"[..]), Err(DataError::VersionMismatch { found: 2 })));
    }

    #[test]
    fn manifest_text_round_trip() {
        let m = DatasetManifest::describe(&[example(9), example(9)], SplitTag::Test, 9);
        assert_eq!(DatasetManifest::parse(&m.to_text()).unwrap(), m);
        assert!(DatasetManifest::parse("records=3\nrank.1d=2\n").is_err());
    }
}
