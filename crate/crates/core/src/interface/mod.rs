//! Engines, the GTP server, refereed matches, configuration files and the
//! command-line self-check.

pub mod arena;
pub mod config;
pub mod engine;
pub mod gtp;
pub mod selfcheck;

pub use arena::{run_match, stderr_percent, GameRecord, MatchConfig, MatchError, MatchReport, Outcome, Side};
pub use config::{Config, ConfigError};
pub use engine::{
    engine_from_spec, pass_is_safe, sensible_points, Action, Engine, EngineError, EngineMode, ExternalEngine, MctsEngine, PolicyEngine, RandomEngine,
};
pub use gtp::{format_vertex, parse_vertex, render_board, GtpSession, COMMANDS};
