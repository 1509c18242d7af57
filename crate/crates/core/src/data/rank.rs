use std::fmt;
use std::str::FromStr;

/// Player strength as recorded in game records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Rank {
    Kyu(u8),
    Dan(u8),
    Pro(u8),
    #[default]
    Unknown,
}

impl Rank {
    pub fn kyu(k: u8) -> Rank {
        if (1..=30).contains(&k) {
            Rank::Kyu(k)
        } else {
            Rank::Unknown
        }
    }

    pub fn dan(d: u8) -> Rank {
        if (1..=9).contains(&d) {
            Rank::Dan(d)
        } else {
            Rank::Unknown
        }
    }

    pub fn pro(p: u8) -> Rank {
        if (1..=9).contains(&p) {
            Rank::Pro(p)
        } else {
            Rank::Unknown
        }
    }

    /// Parses KGS-style rank strings such as `6d`, `12k`, `3p`, `2d?` or
    /// `5 dan`. Anything unrecognised is [`Rank::Unknown`].
    pub fn parse(s: &str) -> Rank {
        let t = s.trim().trim_end_matches(['?', '*']).trim().to_ascii_lowercase();
        let digits: String = t.chars().take_while(|c| c.is_ascii_digit()).collect();
        let Ok(n) = digits.parse::<u8>() else {
            return Rank::Unknown;
        };
        match t[digits.len()..].trim() {
            "d" | "dan" => Rank::dan(n),
            "k" | "kyu" => Rank::kyu(n),
            "p" | "pro" => Rank::pro(n),
            _ => Rank::Unknown,
        }
    }

    /// Dense code used by the record format: 0 unknown, 1..=30 kyu,
    /// 31..=39 dan, 40..=48 pro.
    pub fn code(self) -> u8 {
        match self {
            Rank::Unknown => 0,
            Rank::Kyu(k) => k,
            Rank::Dan(d) => 30 + d,
            Rank::Pro(p) => 39 + p,
        }
    }

    pub fn from_code(code: u8) -> Option<Rank> {
        match code {
            0 => Some(Rank::Unknown),
            1..=30 => Some(Rank::Kyu(code)),
            31..=39 => Some(Rank::Dan(code - 30)),
            40..=48 => Some(Rank::Pro(code - 39)),
            _ => None,
        }
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rank::Kyu(k) => write!(f, "{k}k"),
            Rank::Dan(d) => write!(f, "{d}d"),
            Rank::Pro(p) => write!(f, "{p}p"),
            Rank::Unknown => f.write_str("?"),
        }
    }
}

impl FromStr for Rank {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Rank, Self::Err> {
        Ok(Rank::parse(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_kgs_ranks() {
        assert_eq!(Rank::parse("6d"), Rank::Dan(6));
        assert_eq!(Rank::parse("12k"), Rank::Kyu(12));
        assert_eq!(Rank::parse("1p"), Rank::Pro(1));
        assert_eq!(Rank::parse("2d?"), Rank::Dan(2));
        assert_eq!(Rank::parse("5 dan"), Rank::Dan(5));
        assert_eq!(Rank::parse("10d"), Rank::Unknown);
        assert_eq!(Rank::parse("31k"), Rank::Unknown);
        assert_eq!(Rank::parse(""), Rank::Unknown);
        assert_eq!(Rank::parse("-"), Rank::Unknown);
    }

    #[test]
    fn codes_round_trip() {
        for code in 0..=48 {
            assert_eq!(Rank::from_code(code).unwrap().code(), code);
        }
        assert_eq!(Rank::from_code(49), None);
    }
}
