#![no_main]

use libfuzzer_sys::fuzz_target;
use tengen::data::{game_to_examples, parse_sgf};

fuzz_target!(|data: &[u8]| {
    let Ok(game) = parse_sgf(data) else { return };
    // Whatever parses must survive a write and re-read unchanged.
    let again = parse_sgf(game.to_sgf().as_bytes()).expect("written record parses");
    assert_eq!(again.moves, game.moves);
    assert_eq!(again.size, game.size);
    let _ = game_to_examples(&game, 0);
});
