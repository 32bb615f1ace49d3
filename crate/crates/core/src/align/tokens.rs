use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub normalized: String,
    /// Index of this word in the original, unfiltered word list.
    pub origin: usize,
}

/// Punctuation-only word removed before alignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detached {
    /// Index of the kept token it followed, if any.
    pub after: Option<usize>,
    pub surface: String,
}

/// Words ready for alignment.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<Token>,
    pub detached: Vec<Detached>,
}

/// Lowercases, strips leading/trailing punctuation and collapses inner whitespace.
pub fn normalize(surface: &str) -> String {
    let lower = surface.to_lowercase();
    let words: Vec<&str> = lower
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|w| !w.is_empty())
        .collect();
    words.join(" ")
}

impl TokenSequence {
    pub fn from_words<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        let mut seq = TokenSequence::default();
        for (origin, surface) in words.into_iter().enumerate() {
            let normalized = normalize(surface);
            if normalized.is_empty() {
                let after = seq.tokens.len().checked_sub(1);
                seq.detached.push(Detached { after, surface: surface.to_string() });
            } else {
                seq.tokens.push(Token { surface: surface.to_string(), normalized, origin });
            }
        }
        seq
    }

    pub fn from_text(text: &str) -> Self {
        Self::from_words(text.split_whitespace())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn normalized(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.normalized.as_str()).collect()
    }

    /// Surface of token `i` with any detached punctuation glued back on.
    pub fn display(&self, i: usize) -> String {
        let mut out = String::new();
        if i == 0 {
            for d in self.detached.iter().filter(|d| d.after.is_none()) {
                out.push_str(&d.surface);
            }
        }
        out.push_str(&self.tokens[i].surface);
        for d in self.detached.iter().filter(|d| d.after == Some(i)) {
            out.push_str(&d.surface);
        }
        out
    }
}

fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if b.len() > 63 {
        return levenshtein_heap(a, b);
    }
    let mut prev = [0usize; 64];
    let mut cur = [0usize; 64];
    for (j, p) in prev.iter_mut().enumerate().take(b.len() + 1) {
        *p = j;
    }
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn levenshtein_heap<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - edit_distance / max_len` over characters; two empty strings are identical.
pub fn similarity(a: &str, b: &str) -> f64 {
    let (dist, longest) = if a.is_ascii() && b.is_ascii() {
        (levenshtein(a.as_bytes(), b.as_bytes()), a.len().max(b.len()))
    } else {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        (levenshtein(&a, &b), a.len().max(b.len()))
    };
    if longest == 0 {
        return 1.0;
    }
    1.0 - dist as f64 / longest as f64
}
