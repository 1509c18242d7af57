//! Ladder reading against an exhaustive forced-escape search written on the
//! flood-fill reference board.

mod common {
    pub mod boards;
    pub mod ladder_oracle;
}

use common::boards::parse;
use common::ladder_oracle::{cases, oracle};
use tengen::board::{Color, Point, Symmetry};
use tengen::features::is_ladder_capture;
#[test]
fn handcrafted_ladders_match_the_oracle() {
    let mut checked = 0;
    for case in cases() {
        let at = Point::new(case.at.0, case.at.1);
        let p = parse(&case.rows, Color::Black);
        let expected = oracle(&case.rows, at);
        let got = p.is_legal_point(at) && is_ladder_capture(&p, at).unwrap();
        assert_eq!(got, expected, "{}: library {got}, oracle {expected}", case.name);
        assert_eq!(expected, case.expected, "{}: oracle disagrees with the label", case.name);
        checked += 1;
        // Every orientation must give the same answer.
        for g in Symmetry::all() {
            let q = p.transform(g);
            let a = g.apply(at, p.size());
            assert_eq!(q.is_legal_point(a) && is_ladder_capture(&q, a).unwrap(), expected, "{} under {}", case.name, g.index());
            checked += 1;
        }
    }
    assert!(checked >= 20 * 9);
}

#[test]
fn corner_ladder_on_full_board() {
    let mut rows = vec!["..................."; 19];
    rows[15] = "...XO..............";
    rows[16] = "....XX.............";
    let at = Point::new(4, 14);
    let p = parse(&rows, Color::Black);
    assert!(oracle(&rows, at));
    assert!(is_ladder_capture(&p, at).unwrap());
    rows[4] = "...............O...";
    let p = parse(&rows, Color::Black);
    assert!(!oracle(&rows, at));
    assert!(!is_ladder_capture(&p, at).unwrap());
}

#[test]
fn random_positions_match_the_oracle() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let (mut ataris, mut ladders) = (0, 0);
    for _ in 0..1000 {
        let len = rand::Rng::gen_range(&mut rng, 10..70);
        let game = tengen::interface::selfcheck::random_position(9, len, &mut rng);
        let rows: Vec<String> = (0..9)
            .map(|r| {
                (0..9)
                    .map(|c| match game.stone_at(Point::new(c, r)) {
                        Some(Color::Black) => 'X',
                        Some(Color::White) => 'O',
                        None => '.',
                    })
                    .collect()
            })
            .collect();
        let rows: Vec<&str> = rows.iter().map(String::as_str).collect();
        // Rebuilt from the stones alone so no ko point carries over.
        let p = parse(&rows, Color::Black);
        for pt in p.legal_points() {
            let expected = oracle(&rows, pt);
            assert_eq!(is_ladder_capture(&p, pt).unwrap(), expected, "{rows:?} at {pt:?}");
            ataris += 1;
            ladders += expected as usize;
        }
    }
    assert!(ladders > 0 && ataris > ladders);
}
