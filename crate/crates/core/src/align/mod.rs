//! Word-level global alignment of a predicted transcript to the user's lyrics, and timing
//! transfer along the alignment.

mod nw;
mod timing;
mod tokens;

pub use nw::{align, align_normalized, path_score, AlignStep, AlignmentMatrix, AlignmentPath, Move, Scoring};
pub use timing::{transfer_timings, TimedEntry, TimedLyrics, TimingError, TimingSource};
pub use tokens::{normalize, similarity, Detached, Token, TokenSequence};
