//! Compiles timed lyrics and song features into the visualization script the UI plays.

mod compile;
mod moods;
mod wire;

pub use compile::{compile, BeatEvent, Compiled, LyricEvent, MoodSummary, VizError, VizScript, VIZ_SCRIPT_VERSION};
pub use moods::{MoodStyle, MoodStyleTable, MoodTableError, DEFAULT_MOOD_TABLE, MOOD_TABLE_VERSION};
pub use wire::{parse_script, serialize_script, WireError};
