//! Independent reference checks shared by the unit-level suites and the acceptance target.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use songwell_core::align::{
    align, align_normalized, path_score, similarity, transfer_timings, Scoring, TimedLyrics, TimingError, TimingSource,
    TokenSequence,
};
use songwell_core::music::{build_style_prompt, MusicComponents, TimedToken, STYLE_PROMPT_MAX_CHARS};

pub const ALPHABET: [&str; 4] = ["la", "di", "da", "dum"];

/// Best score over every set of monotone pairs, given the pair score table; unpaired
/// tokens each cost one gap. Each predicted token either stays unpaired or takes a lyric
/// token after the previous pair.
pub fn brute_force_table(table: &[Vec<i32>], n: usize, gap: i32) -> i32 {
    #[allow(clippy::too_many_arguments)]
    fn walk(table: &[Vec<i32>], n: usize, i: usize, j0: usize, pairs: i32, sum: i32, gap: i32, best: &mut i32) {
        if i == table.len() {
            let unpaired = (table.len() + n) as i32 - 2 * pairs;
            *best = (*best).max(sum + gap * unpaired);
            return;
        }
        walk(table, n, i + 1, j0, pairs, sum, gap, best);
        for j in j0..n {
            walk(table, n, i + 1, j + 1, pairs + 1, sum + table[i][j], gap, best);
        }
    }
    let mut best = i32::MIN;
    walk(table, n, 0, 0, 0, 0, gap, &mut best);
    best
}

pub fn brute_force_score(pred: &[&str], lyr: &[&str], scoring: &Scoring<i32>) -> i32 {
    let table: Vec<Vec<i32>> = pred.iter().map(|a| lyr.iter().map(|b| scoring.pair(a, b)).collect()).collect();
    brute_force_table(&table, lyr.len(), scoring.gap)
}

/// Restricted growth strings of `len` over at most `k` symbols: one per relabeling class.
pub fn canonical_strings(len: usize, k: u8) -> Vec<Vec<u8>> {
    fn grow(cur: &mut Vec<u8>, len: usize, k: u8, next: u8, out: &mut Vec<Vec<u8>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for s in 0..=next.min(k - 1) {
            cur.push(s);
            grow(cur, len, k, if s == next { next + 1 } else { next }, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::with_capacity(len), len, k, 0, &mut out);
    out
}

fn check_pair(pred: &[&str], lyr: &[&str], oracle: i32, scoring: &Scoring<i32>) -> Result<(), String> {
    let path = align_normalized(pred, lyr, scoring);
    if !path.is_valid_for(pred.len(), lyr.len()) {
        return Err(format!("invalid path for {pred:?} / {lyr:?}"));
    }
    let recomputed = path_score(&path, pred, lyr, scoring);
    if path.score != oracle || recomputed != oracle {
        return Err(format!("{pred:?} / {lyr:?}: dp {} path {} oracle {oracle}", path.score, recomputed));
    }
    Ok(())
}

/// Every pair of sequences up to `max_len` tokens each over the four-token alphabet, one
/// representative per relabeling class. Returns the number of classes checked.
pub fn exhaustive_alignment_check(max_len: usize) -> Result<usize, String> {
    let scoring = Scoring::<i32>::default();
    // Relabeling is sound only if the score depends on token equality alone.
    for a in ALPHABET {
        for b in ALPHABET {
            if a != b && similarity(a, b) >= scoring.near_threshold {
                return Err(format!("alphabet tokens {a} and {b} are near matches"));
            }
        }
    }
    let symbol_scores: Vec<Vec<i32>> =
        ALPHABET.iter().map(|a| ALPHABET.iter().map(|b| scoring.pair(a, b)).collect()).collect();
    let mut checked = 0;
    for total in 0..=2 * max_len {
        let classes = canonical_strings(total, ALPHABET.len() as u8);
        for m in total.saturating_sub(max_len)..=total.min(max_len) {
            for class in &classes {
                let words: Vec<&str> = class.iter().map(|s| ALPHABET[*s as usize]).collect();
                let table: Vec<Vec<i32>> = class[..m]
                    .iter()
                    .map(|a| class[m..].iter().map(|b| symbol_scores[*a as usize][*b as usize]).collect())
                    .collect();
                let oracle = brute_force_table(&table, total - m, scoring.gap);
                check_pair(&words[..m], &words[m..], oracle, &scoring)?;
                checked += 1;
            }
        }
    }
    Ok(checked)
}

/// Random pairs up to `max_len` tokens over a vocabulary with near-miss spellings.
pub fn random_alignment_check(cases: usize, max_len: usize, seed: u64) -> Result<(), String> {
    const VOCAB: [&str; 10] = ["la", "di", "da", "dum", "window", "windo", "light", "lite", "morning", "mornin"];
    let scoring = Scoring::<i32>::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cases {
        let m = rng.gen_range(0..=max_len);
        let n = rng.gen_range(0..=max_len);
        let pred: Vec<&str> = (0..m).map(|_| VOCAB[rng.gen_range(0..VOCAB.len())]).collect();
        let lyr: Vec<&str> = (0..n).map(|_| VOCAB[rng.gen_range(0..VOCAB.len())]).collect();
        check_pair(&pred, &lyr, brute_force_score(&pred, &lyr, &scoring), &scoring)?;
    }
    Ok(())
}

/// Runs alignment and timing transfer for a timed transcript and lyric text.
pub fn transfer(pred: &[(String, u64, u64)], lyrics: &str, duration: u64) -> Result<TimedLyrics, TimingError> {
    let transcript: Vec<TimedToken> =
        pred.iter().map(|(t, s, e)| TimedToken { token: t.clone(), start_ms: *s, end_ms: *e }).collect();
    let p = TokenSequence::from_words(transcript.iter().map(|t| t.token.as_str()));
    let l = TokenSequence::from_text(lyrics);
    let path = align(&p, &l, &Scoring::<i32>::default());
    transfer_timings(&path, &transcript, &p, &l, duration)
}

pub fn spans(t: &TimedLyrics) -> Vec<(u64, u64)> {
    t.entries.iter().map(|e| (e.start_ms, e.end_ms)).collect()
}

fn owned(pred: &[(&str, u64, u64)]) -> Vec<(String, u64, u64)> {
    pred.iter().map(|(t, s, e)| (t.to_string(), *s, *e)).collect()
}

/// Interpolation cases with spans worked out by hand: a run of k unpaired tokens splits its
/// gap into k slots of floor(gap / k) ms, the last slot taking the remainder.
pub fn hand_timing_check() -> Result<usize, String> {
    type Case = (&'static [(&'static str, u64, u64)], &'static str, u64, &'static [(u64, u64)]);
    let cases: [Case; 6] = [
        (
            &[("rain", 500, 1000), ("falls", 2000, 2500)],
            "rain softly falls",
            3000,
            &[(500, 1000), (1000, 2000), (2000, 2500)],
        ),
        (&[("here", 3000, 3500)], "and now still here", 4000, &[(0, 1000), (1000, 2000), (2000, 3000), (3000, 3500)]),
        (&[("go", 0, 1000)], "go on and on", 2000, &[(0, 1000), (1000, 1333), (1333, 1666), (1666, 2000)]),
        (
            &[("a", 0, 100), ("e", 1100, 1200)],
            "a b c d e",
            1200,
            &[(0, 100), (100, 433), (433, 766), (766, 1100), (1100, 1200)],
        ),
        (&[], "one two three", 1000, &[(0, 333), (333, 666), (666, 1000)]),
        (
            &[("light", 200, 700), ("morning", 900, 1400)],
            "light, gentle morning",
            1500,
            &[(200, 700), (700, 900), (900, 1400)],
        ),
    ];
    for (pred, lyrics, duration, expected) in cases {
        let got = transfer(&owned(pred), lyrics, duration).map_err(|e| format!("{lyrics}: {e}"))?;
        if spans(&got) != expected {
            return Err(format!("{lyrics}: expected {expected:?}, got {:?}", spans(&got)));
        }
    }
    Ok(cases.len())
}

const WORDS: [&str; 14] = [
    "grey", "rain", "window", "hold", "quiet", "light", "slowly", "rise", "morning", "find", "still", "here", "heart",
    "sky",
];

/// Randomized transfers: identity cases must reproduce the transcript exactly; edited cases
/// must come out sorted, non-overlapping and inside the song, with paired tokens kept inside
/// their partner's interval.
pub fn random_timing_check(cases: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let n = rng.gen_range(1..=20);
        let lyrics: Vec<&str> = (0..n).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect();
        let identity = case % 5 == 0;
        let mut heard: Vec<String> = Vec::new();
        for w in &lyrics {
            let roll: f64 = if identity { 1.0 } else { rng.gen() };
            if roll < 0.15 {
                continue;
            }
            if roll < 0.25 {
                heard.push("oh".into());
            }
            heard.push(w.to_string());
        }
        let mut t = rng.gen_range(0..500u64);
        let mut pred = Vec::new();
        for w in heard {
            let len = rng.gen_range(100..600u64);
            pred.push((w, t, t + len));
            t += len + rng.gen_range(0..300u64);
        }
        let duration = t + rng.gen_range(0..2000u64);
        let text = lyrics.join(" ");
        let got = transfer(&pred, &text, duration).map_err(|e| format!("case {case} `{text}`: {e}"))?;
        if got.entries.len() != n || !got.is_well_formed(duration) {
            return Err(format!("case {case}: malformed output {:?}", spans(&got)));
        }
        if identity {
            let expected: Vec<(u64, u64)> = pred.iter().map(|(_, s, e)| (*s, *e)).collect();
            if spans(&got) != expected {
                return Err(format!("case {case}: identity transfer changed timings"));
            }
            continue;
        }
        for e in got.entries.iter().filter(|e| e.source == TimingSource::Matched) {
            let inside = pred.iter().any(|(_, s, end)| *s <= e.start_ms && e.end_ms <= *end);
            if !inside {
                return Err(format!("case {case}: paired token {} left its partner interval", e.lyric_token));
            }
        }
    }
    Ok(())
}

/// Checks one style prompt against a reference model: split every component on commas in
/// priority order, strip terminal punctuation, drop empties and case-insensitive repeats,
/// then keep the longest prefix whose rendering fits in 150 characters.
pub fn check_style_properties(c: &MusicComponents) -> Result<(), String> {
    let clean = |s: &str| -> String {
        let t: String = s.chars().filter(|ch| !matches!(ch, '.' | '!' | '?')).collect();
        let t = t.split_whitespace().collect::<Vec<_>>().join(" ");
        t.chars().take(STYLE_PROMPT_MAX_CHARS).collect::<String>().trim_end().to_string()
    };
    let present = |f: &Option<String>| f.as_deref().is_some_and(|s| s.split(',').any(|p| !clean(p).is_empty()));
    let result = build_style_prompt(c);
    if !present(&c.genre) && !present(&c.mood) {
        return match result {
            Err(e) if e.missing == ["genre", "mood"] => Ok(()),
            other => Err(format!("expected IncompleteComponents, got {other:?}")),
        };
    }
    let prompt = result.map_err(|e| format!("unexpected {e}"))?;
    let ordered = [&c.genre, &c.mood, &c.tempo, &c.dynamics, &c.rhythm, &c.vocal_tone]
        .into_iter()
        .filter_map(|f| f.as_deref())
        .chain(c.instrumentation.iter().map(String::as_str));
    let mut candidates: Vec<String> = Vec::new();
    for part in ordered.flat_map(|s| s.split(',')) {
        let k = clean(part);
        if !k.is_empty() && !candidates.iter().any(|x| x.to_lowercase() == k.to_lowercase()) {
            candidates.push(k);
        }
    }
    let mut expected: Vec<String> = Vec::new();
    for k in candidates {
        let mut trial = expected.clone();
        trial.push(k);
        if trial.join(", ").chars().count() > STYLE_PROMPT_MAX_CHARS {
            break;
        }
        expected = trial;
    }
    let text = &prompt.rendered_text;
    if text.chars().count() > STYLE_PROMPT_MAX_CHARS {
        return Err(format!("{} chars: {text}", text.chars().count()));
    }
    if *text != prompt.keywords.join(", ") {
        return Err(format!("rendering is not the comma-joined keywords: {text}"));
    }
    if text.contains(['.', '!', '?']) || prompt.keywords.iter().any(|k| k.is_empty() || k.contains(',')) {
        return Err(format!("bad keyword in {:?}", prompt.keywords));
    }
    if prompt.keywords != expected {
        return Err(format!("expected {expected:?}, got {:?}", prompt.keywords));
    }
    Ok(())
}

fn random_phrase(rng: &mut ChaCha8Rng, max_words: usize) -> String {
    const PARTS: [&str; 16] = [
        "slow",
        "Slow",
        "warm",
        "piano",
        "soft drums",
        "ballad",
        "indie pop",
        "hopeful",
        "calm.",
        "bright!",
        "strings",
        "airy",
        ",",
        "steady",
        "lo-fi",
        "gentle?",
    ];
    let words = rng.gen_range(0..=max_words);
    let mut s: Vec<String> = (0..words).map(|_| PARTS[rng.gen_range(0..PARTS.len())].to_string()).collect();
    if rng.gen_bool(0.05) {
        s.push("x".repeat(rng.gen_range(100..200)));
    }
    s.join(if rng.gen_bool(0.5) { " " } else { ", " })
}

/// Randomized component sets checked against the reference model.
pub fn random_style_check(cases: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let field = |rng: &mut ChaCha8Rng| rng.gen_bool(0.7).then(|| random_phrase(rng, 4));
        let c = MusicComponents {
            genre: field(&mut rng),
            mood: field(&mut rng),
            tempo: field(&mut rng),
            dynamics: field(&mut rng),
            rhythm: field(&mut rng),
            vocal_tone: field(&mut rng),
            instrumentation: (0..rng.gen_range(0..12)).map(|_| random_phrase(&mut rng, 2)).collect(),
        };
        check_style_properties(&c).map_err(|e| format!("case {case}: {e}"))?;
    }
    Ok(())
}
