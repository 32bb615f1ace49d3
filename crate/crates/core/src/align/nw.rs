use serde::{Deserialize, Serialize};

use super::tokens::{similarity, TokenSequence};
use crate::num::Score;

/// Substitution and gap scores for token alignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scoring<S> {
    pub exact: S,
    pub near: S,
    pub mismatch: S,
    pub gap: S,
    /// Similarity at or above which a non-identical pair scores `near`.
    pub near_threshold: f64,
}

impl<S: Score> Default for Scoring<S> {
    fn default() -> Self {
        Self { exact: S::lit(2), near: S::lit(1), mismatch: S::lit(-1), gap: S::lit(-1), near_threshold: 0.8 }
    }
}

impl<S: Score> Scoring<S> {
    pub fn pair(&self, a: &str, b: &str) -> S {
        if a == b {
            self.exact
        } else if similarity(a, b) >= self.near_threshold - 1e-12 {
            self.near
        } else {
            self.mismatch
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Move {
    Start,
    Diag,
    Up,
    Left,
}

/// Score and back-pointer grids, `(m+1) x (n+1)` with predicted tokens on rows.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentMatrix<S> {
    pub rows: usize,
    pub cols: usize,
    scores: Vec<S>,
    moves: Vec<Move>,
}

impl<S: Score> AlignmentMatrix<S> {
    pub fn fill(predicted: &[&str], lyrics: &[&str], scoring: &Scoring<S>) -> Self {
        let (m, n) = (predicted.len(), lyrics.len());
        let cols = n + 1;
        let mut scores = vec![S::zero(); (m + 1) * cols];
        let mut moves = vec![Move::Start; (m + 1) * cols];
        for i in 1..=m {
            scores[i * cols] = scores[(i - 1) * cols] + scoring.gap;
            moves[i * cols] = Move::Up;
        }
        for j in 1..=n {
            scores[j] = scores[j - 1] + scoring.gap;
            moves[j] = Move::Left;
        }
        for i in 1..=m {
            for j in 1..=n {
                let diag = scores[(i - 1) * cols + j - 1] + scoring.pair(predicted[i - 1], lyrics[j - 1]);
                let up = scores[(i - 1) * cols + j] + scoring.gap;
                let left = scores[i * cols + j - 1] + scoring.gap;
                let (best, mv) = if diag >= up && diag >= left {
                    (diag, Move::Diag)
                } else if up >= left {
                    (up, Move::Up)
                } else {
                    (left, Move::Left)
                };
                scores[i * cols + j] = best;
                moves[i * cols + j] = mv;
            }
        }
        Self { rows: m + 1, cols, scores, moves }
    }

    pub fn score(&self, i: usize, j: usize) -> S {
        self.scores[i * self.cols + j]
    }

    pub fn step(&self, i: usize, j: usize) -> Move {
        self.moves[i * self.cols + j]
    }

    /// Walks back from the bottom-right corner.
    pub fn traceback(&self) -> AlignmentPath<S> {
        let (mut i, mut j) = (self.rows - 1, self.cols - 1);
        let score = self.score(i, j);
        let mut steps = Vec::with_capacity(i + j);
        while i > 0 || j > 0 {
            match self.step(i, j) {
                Move::Diag => {
                    steps.push(AlignStep::Match { i: i - 1, j: j - 1 });
                    i -= 1;
                    j -= 1;
                }
                Move::Up => {
                    steps.push(AlignStep::GapPredicted { i: i - 1 });
                    i -= 1;
                }
                Move::Left => {
                    steps.push(AlignStep::GapLyrics { j: j - 1 });
                    j -= 1;
                }
                Move::Start => unreachable!("start cell only at origin"),
            }
        }
        steps.reverse();
        AlignmentPath { steps, score }
    }
}

/// One column of a global alignment. Indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "camelCase")]
pub enum AlignStep {
    /// Predicted token `i` paired with lyric token `j` (equal, near or mismatched).
    Match { i: usize, j: usize },
    /// Lyric token `j` has no predicted partner.
    GapLyrics { j: usize },
    /// Predicted token `i` has no lyric partner.
    GapPredicted { i: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentPath<S> {
    pub steps: Vec<AlignStep>,
    pub score: S,
}

impl<S> AlignmentPath<S> {
    /// `(i, j)` pairs of every match step, in order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.steps.iter().filter_map(|s| match *s {
            AlignStep::Match { i, j } => Some((i, j)),
            _ => None,
        })
    }

    /// Checks the path is monotone and consumes both sequences exactly once.
    pub fn is_valid_for(&self, m: usize, n: usize) -> bool {
        let (mut ni, mut nj) = (0, 0);
        for step in &self.steps {
            match *step {
                AlignStep::Match { i, j } if i == ni && j == nj => {
                    ni += 1;
                    nj += 1;
                }
                AlignStep::GapPredicted { i } if i == ni => ni += 1,
                AlignStep::GapLyrics { j } if j == nj => nj += 1,
                _ => return false,
            }
        }
        ni == m && nj == n
    }
}

/// Global alignment of normalized strings.
pub fn align_normalized<S: Score>(predicted: &[&str], lyrics: &[&str], scoring: &Scoring<S>) -> AlignmentPath<S> {
    AlignmentMatrix::fill(predicted, lyrics, scoring).traceback()
}

/// Global alignment of the predicted transcript (rows) against the lyrics (columns).
pub fn align<S: Score>(predicted: &TokenSequence, lyrics: &TokenSequence, scoring: &Scoring<S>) -> AlignmentPath<S> {
    align_normalized(&predicted.normalized(), &lyrics.normalized(), scoring)
}

/// Score of a path recomputed from its steps.
pub fn path_score<S: Score>(path: &AlignmentPath<S>, predicted: &[&str], lyrics: &[&str], scoring: &Scoring<S>) -> S {
    path.steps.iter().fold(S::zero(), |acc, s| {
        acc + match *s {
            AlignStep::Match { i, j } => scoring.pair(predicted[i], lyrics[j]),
            _ => scoring.gap,
        }
    })
}
