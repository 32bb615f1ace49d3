use serde::{Deserialize, Serialize};

use super::nw::{AlignStep, AlignmentPath};
use super::tokens::TokenSequence;
use crate::music::TimedToken;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TimingSource {
    Matched,
    Interpolated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TimedEntry {
    pub lyric_token: String,
    pub start_ms: u64,
    pub end_ms: u64,
    pub source: TimingSource,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedLyrics {
    pub entries: Vec<TimedEntry>,
}

impl TimedLyrics {
    /// Sorted, non-overlapping, non-empty intervals inside `[0, duration_ms]`.
    pub fn is_well_formed(&self, duration_ms: u64) -> bool {
        self.entries.iter().all(|e| e.start_ms < e.end_ms && e.end_ms <= duration_ms)
            && self.entries.windows(2).all(|w| w[0].end_ms <= w[1].start_ms)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TimingError {
    #[error("cannot place lyric timings: {0}")]
    DegenerateTiming(String),
    #[error("alignment path does not fit its inputs: {0}")]
    PathMismatch(String),
    #[error("song lasts {duration_ms} ms but the transcript runs to {last_end_ms} ms")]
    DurationTooShort { duration_ms: u64, last_end_ms: u64 },
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    start: u64,
    end: u64,
    matched: bool,
}

/// Splits `[lo, hi]` into `k` back-to-back slots; the remainder goes to the last one.
fn subdivide(lo: u64, hi: u64, k: usize) -> Vec<(u64, u64)> {
    let k64 = k as u64;
    let width = (hi - lo) / k64;
    (0..k64)
        .map(|s| {
            let start = lo + s * width;
            let end = if s + 1 == k64 { hi } else { start + width };
            (start, end)
        })
        .collect()
}

/// Moves timings from predicted tokens onto lyric tokens along an alignment path.
///
/// Paired lyric tokens take their partner's interval. Runs of unpaired lyric tokens share the
/// gap between their neighbours evenly (from 0 before the first pair, up to the song end after
/// the last). A gap too narrow for its run also takes in the neighbouring paired interval.
pub fn transfer_timings<S>(
    path: &AlignmentPath<S>,
    predicted: &[TimedToken],
    predicted_tokens: &TokenSequence,
    lyrics: &TokenSequence,
    song_duration_ms: u64,
) -> Result<TimedLyrics, TimingError> {
    let (m, n) = (predicted_tokens.len(), lyrics.len());
    if !path.is_valid_for(m, n) {
        return Err(TimingError::PathMismatch(format!("path does not cover {m} predicted and {n} lyric tokens")));
    }
    if let Some(t) = predicted_tokens.tokens.iter().find(|t| t.origin >= predicted.len()) {
        return Err(TimingError::PathMismatch(format!("token `{}` has no transcript entry", t.surface)));
    }
    let last_end_ms = predicted.last().map_or(0, |t| t.end_ms);
    if song_duration_ms < last_end_ms {
        return Err(TimingError::DurationTooShort { duration_ms: song_duration_ms, last_end_ms });
    }
    if n == 0 {
        return Ok(TimedLyrics::default());
    }

    let mut partner: Vec<Option<usize>> = vec![None; n];
    for step in &path.steps {
        if let AlignStep::Match { i, j } = *step {
            partner[j] = Some(predicted_tokens.tokens[i].origin);
        }
    }
    let mut slots: Vec<Option<Slot>> = partner
        .iter()
        .map(|p| p.map(|o| Slot { start: predicted[o].start_ms, end: predicted[o].end_ms, matched: true }))
        .collect();

    let degenerate = |lo: u64, hi: u64, k: usize| {
        TimingError::DegenerateTiming(format!("{k} lyric token(s) cannot fit in [{lo}, {hi}] ms"))
    };
    let mut j = 0;
    while j < n {
        if slots[j].is_some() {
            j += 1;
            continue;
        }
        let run_start = j;
        while j < n && slots[j].is_none() {
            j += 1;
        }
        let k = j - run_start;
        let prev = run_start.checked_sub(1);
        let next = (j < n).then_some(j);
        let lo = prev.map_or(0, |p| slots[p].unwrap().end);
        let hi = next.map_or(song_duration_ms, |q| slots[q].unwrap().start);
        if hi.saturating_sub(lo) >= k as u64 {
            for (slot, (s, e)) in (run_start..j).zip(subdivide(lo, hi, k)) {
                slots[slot] = Some(Slot { start: s, end: e, matched: false });
            }
        } else if let Some(p) = prev {
            let anchor = slots[p].unwrap();
            if hi.saturating_sub(anchor.start) < (k + 1) as u64 {
                return Err(degenerate(anchor.start, hi, k));
            }
            let parts = subdivide(anchor.start, hi, k + 1);
            slots[p] = Some(Slot { end: parts[0].1, ..anchor });
            for (slot, (s, e)) in (run_start..j).zip(parts.into_iter().skip(1)) {
                slots[slot] = Some(Slot { start: s, end: e, matched: false });
            }
        } else if let Some(q) = next {
            let anchor = slots[q].unwrap();
            if anchor.end.saturating_sub(lo) < (k + 1) as u64 {
                return Err(degenerate(lo, anchor.end, k));
            }
            let parts = subdivide(lo, anchor.end, k + 1);
            slots[q] = Some(Slot { start: parts[k].0, ..anchor });
            for (slot, (s, e)) in (run_start..j).zip(parts) {
                slots[slot] = Some(Slot { start: s, end: e, matched: false });
            }
        } else {
            return Err(degenerate(lo, hi, k));
        }
    }

    let mut entries: Vec<TimedEntry> = slots
        .into_iter()
        .enumerate()
        .map(|(j, s)| {
            let s = s.expect("every slot placed");
            TimedEntry {
                lyric_token: lyrics.display(j),
                start_ms: s.start,
                end_ms: s.end,
                source: if s.matched { TimingSource::Matched } else { TimingSource::Interpolated },
            }
        })
        .collect();
    for idx in 1..entries.len() {
        let next_start = entries[idx].start_ms;
        let prev = &mut entries[idx - 1];
        if prev.end_ms > next_start {
            prev.end_ms = next_start;
        }
    }
    let out = TimedLyrics { entries };
    if !out.is_well_formed(song_duration_ms) {
        return Err(TimingError::DegenerateTiming("intervals collapse after clipping".into()));
    }
    Ok(out)
}
