//! Game records to training examples: SGF ingestion, train/test splitting,
//! symmetry sampling and the binary example format.

mod example;
mod rank;
pub mod records;
mod sgf;
mod split;
pub mod synth;

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use log::{info, warn};

pub use example::{game_to_examples, sample_symmetry, GameExamples, Snapshot, TrainingExample};
pub use rank::Rank;
pub use records::{load_records, read_manifest, read_records, write_records, DataError, DatasetManifest, RecordReader, RecordWriter, SplitTag};
pub use sgf::{parse_sgf, SgfError, SgfGame};
pub use split::{split_by_game, split_games, SplitSet, DEFAULT_TEST_FRACTION};

/// Which games to keep during ingestion.
#[derive(Debug, Clone, Copy)]
pub struct IngestFilter {
    pub include_handicap: bool,
    /// Drop examples whose mover is not a dan or professional player.
    pub dan_only: bool,
    /// Only ingest games on this board size.
    pub board_size: Option<usize>,
}

impl Default for IngestFilter {
    fn default() -> Self {
        IngestFilter { include_handicap: true, dan_only: false, board_size: None }
    }
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct IngestStats {
    pub files: usize,
    pub parsed: usize,
    pub rejected: usize,
    pub truncated: usize,
    pub filtered: usize,
}

/// `.sgf` and `.sgf.gz` files under `dir`, sorted for determinism.
pub fn find_sgf_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("").to_ascii_lowercase();
                if name.ends_with(".sgf") || name.ends_with(".sgf.gz") {
                    out.push(path);
                }
            }
        }
    }
    out.sort();
    Ok(out)
}

pub fn read_sgf_file(path: &Path) -> std::io::Result<Vec<u8>> {
    let raw = fs::read(path)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut text = Vec::new();
        flate2::read::MultiGzDecoder::new(&raw[..]).read_to_end(&mut text)?;
        Ok(text)
    } else {
        Ok(raw)
    }
}

/// Parses and replays every game under `dir`. Game ids are assigned in file
/// order. Unparsable files are skipped with a warning.
pub fn ingest_dir(dir: &Path, filter: IngestFilter) -> Result<(Vec<Vec<TrainingExample>>, IngestStats), DataError> {
    let mut stats = IngestStats::default();
    let mut games = Vec::new();
    for path in find_sgf_files(dir)? {
        stats.files += 1;
        let text = read_sgf_file(&path)?;
        let game = match parse_sgf(&text) {
            Ok(g) => g,
            Err(e) => {
                warn!("{}: {e}", path.display());
                stats.rejected += 1;
                continue;
            }
        };
        stats.parsed += 1;
        if (!filter.include_handicap && game.handicap >= 2) || filter.board_size.is_some_and(|s| s != game.size) {
            stats.filtered += 1;
            continue;
        }
        let id = games.len() as u32;
        match game_to_examples(&game, id) {
            Ok(mut ex) => {
                if ex.truncated.is_some() {
                    stats.truncated += 1;
                }
                if filter.dan_only {
                    ex.examples.retain(|e| matches!(e.rank, Rank::Dan(_) | Rank::Pro(_)));
                }
                games.push(ex.examples);
            }
            Err(e) => {
                warn!("{}: {e}", path.display());
                stats.rejected += 1;
            }
        }
    }
    info!(
        "ingested {} of {} files ({} rejected, {} truncated, {} filtered)",
        stats.parsed - stats.filtered,
        stats.files,
        stats.rejected,
        stats.truncated,
        stats.filtered
    );
    Ok((games, stats))
}
