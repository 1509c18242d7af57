use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DatasetManifest, SplitTag, TrainingExample};

/// Share of examples held out for testing in the reference corpus
/// (2M of 29.4M positions).
pub const DEFAULT_TEST_FRACTION: f64 = 0.068;

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSet {
    pub manifest: DatasetManifest,
    pub examples: Vec<TrainingExample>,
}

/// Assigns whole games to the test split. `round(test_fraction × games)`
/// games go to test (at least one, never all when there are two or more),
/// chosen by a seeded shuffle of game ids.
pub fn split_games(game_ids: &[u32], test_fraction: f64, seed: u64) -> (Vec<u32>, Vec<u32>) {
    assert!(test_fraction > 0.0 && test_fraction < 1.0, "test fraction must lie in (0, 1)");
    let mut ids = game_ids.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let n = ids.len();
    let mut n_test = (test_fraction * n as f64).round() as usize;
    if n >= 2 {
        n_test = n_test.clamp(1, n - 1);
    }
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut test = ids.split_off(n - n_test.min(n));
    ids.sort_unstable();
    test.sort_unstable();
    (ids, test)
}

/// Splits games (each a list of examples sharing a game id) into train and
/// test sets; every game lands wholly on one side.
pub fn split_by_game(games: Vec<Vec<TrainingExample>>, test_fraction: f64, seed: u64) -> (SplitSet, SplitSet) {
    let ids: Vec<u32> = games.iter().filter_map(|g| g.first().map(|e| e.game_id)).collect();
    let size = games.iter().flatten().next().map(|e| e.snapshot.size).unwrap_or(19);
    let (_, test_ids) = split_games(&ids, test_fraction, seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for g in games {
        match g.first() {
            Some(e) if test_ids.binary_search(&e.game_id).is_ok() => test.extend(g),
            _ => train.extend(g),
        }
    }
    (
        SplitSet { manifest: DatasetManifest::describe(&train, SplitTag::Train, size), examples: train },
        SplitSet { manifest: DatasetManifest::describe(&test, SplitTag::Test, size), examples: test },
    )
}
