use std::sync::LazyLock;

use regex::Regex;

static SPEAKER_PREFIX: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?im)^[ \t]*(?:bot|assistant|agent)[ \t]*:[ \t]*").unwrap());
// [12:03], 12:03:44, 2024-05-01 12:03, [2024/05/01]
static TIMESTAMP_PREFIX: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?m)^[ \t]*\[?(?:\d{4}[-/.]\d{1,2}[-/.]\d{1,2}(?:[ T]\d{1,2}:\d{2}(?::\d{2})?)?|\d{1,2}:\d{2}(?::\d{2})?(?:[ \t]*[AaPp][Mm])?)\]?[ \t]*(?:[-|:][ \t]*)?",
    )
    .unwrap()
});
static CODE_FENCE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?m)^[ \t]*```[^\n]*\n?").unwrap());
static HEADING: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?m)^[ \t]*#{1,6}[ \t]+").unwrap());
static EMPHASIS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\*\*|__").unwrap());

static EXAMPLE_MARKER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:for example|for instance|e\.g\.|such as|examples?:|options?:)").unwrap());
static QUOTED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#"[`'‘"“]([^`'‘’"“”\n]{1,40})['’"”]"#).unwrap());
static BULLET: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(?:[-*•]|\d{1,2}[.)]|\(?[A-Za-z]\))\s+(.+)$").unwrap());
static FILLER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^(?:words like|something like|things like|like|maybe|perhaps|you could say)\s+").unwrap()
});
static LIST_SPLIT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r",\s*(?:or\s+|and\s+)?|\s+or\s+").unwrap());

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sanitized {
    pub text: String,
    /// The raw reply broke the plain-string rule and was rewritten.
    pub changed: bool,
}

/// Removes speaker/timestamp prefixes and markdown decoration. Runs to a fixed point, so
/// applying it twice is the same as applying it once.
pub fn sanitize_reply(raw: &str) -> Sanitized {
    let mut text = raw.trim().to_string();
    loop {
        let mut next = CODE_FENCE.replace_all(&text, "").into_owned();
        next = EMPHASIS.replace_all(&next, "").into_owned();
        next = HEADING.replace_all(&next, "").into_owned();
        next = TIMESTAMP_PREFIX.replace_all(&next, "").into_owned();
        next = SPEAKER_PREFIX.replace_all(&next, "").into_owned();
        let next = next.trim().to_string();
        if next == text {
            break;
        }
        text = next;
    }
    let changed = text != raw;
    Sanitized { text, changed }
}

/// Pulls example answer options out of a reply so they can be offered as tappable chips.
/// Quoted candidates win; otherwise bullet lines or a short comma/or list after the marker.
pub fn parse_option_chips(text: &str) -> Vec<String> {
    let mut chips: Vec<String> = Vec::new();
    for marker in EXAMPLE_MARKER.find_iter(text) {
        let tail = &text[marker.end()..];
        let head = tail.trim_start_matches([' ', '\t', ',', ':', '-']);
        let candidates =
            if head.starts_with('\n') || head.is_empty() { bullet_items(head) } else { clause_items(head) };
        for c in candidates {
            let c = c.trim().trim_matches(|ch: char| ch.is_ascii_punctuation() && ch != '\'').trim().to_string();
            if !c.is_empty() && !chips.iter().any(|x| x.eq_ignore_ascii_case(&c)) {
                chips.push(c);
            }
        }
    }
    chips
}

fn bullet_items(tail: &str) -> Vec<String> {
    tail.lines()
        .skip_while(|l| l.trim().is_empty())
        .map_while(|l| BULLET.captures(l).map(|c| c[1].trim().to_string()))
        .collect()
}

fn clause_items(tail: &str) -> Vec<String> {
    let end = tail.find(['.', '?', '!', '\n']).unwrap_or(tail.len());
    let clause = &tail[..end];
    let quoted: Vec<String> = QUOTED.captures_iter(clause).map(|c| c[1].to_string()).collect();
    if !quoted.is_empty() {
        return quoted;
    }
    let clause = FILLER.replace(clause.trim(), "");
    let items: Vec<String> = LIST_SPLIT
        .split(&clause)
        .map(|s| s.trim().trim_end_matches("etc").trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if items.len() >= 2 && items.iter().all(|s| s.split_whitespace().count() <= 4) {
        items
    } else {
        Vec::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_speaker_prefix() {
        assert_eq!(sanitize_reply("bot: Hello").text, "Hello");
        assert_eq!(sanitize_reply("Assistant:  How are you?").text, "How are you?");
        assert!(sanitize_reply("bot: Hello").changed);
    }

    #[test]
    fn strips_timestamps_and_markdown() {
        assert_eq!(sanitize_reply("[12:03] **Hello** there").text, "Hello there");
        assert_eq!(sanitize_reply("2024-05-01 12:03:44 - assistant: hi").text, "hi");
        assert_eq!(sanitize_reply("```\nplain\n```").text, "plain");
    }

    #[test]
    fn clean_text_is_untouched() {
        let s = sanitize_reply("That sounds hard. What helped you today?");
        assert!(!s.changed);
        assert_eq!(s.text, "That sounds hard. What helped you today?");
    }

    #[test]
    fn nested_prefixes_collapse() {
        assert_eq!(sanitize_reply("**bot:** assistant: hey").text, "hey");
    }

    #[test]
    fn quoted_example_options() {
        let chips = parse_option_chips("For example, words like 'rough', 'calm', 'peaceful' could be used.");
        assert_eq!(chips, vec!["rough", "calm", "peaceful"]);
    }

    #[test]
    fn comma_list_options() {
        let chips = parse_option_chips("What tempo feels right, such as slow, medium, or fast?");
        assert_eq!(chips, vec!["slow", "medium", "fast"]);
    }

    #[test]
    fn bullet_options() {
        let chips = parse_option_chips("Here are some options:\n- a rainy street\n- a quiet room\n\nWhich fits?");
        assert_eq!(chips, vec!["a rainy street", "a quiet room"]);
    }

    #[test]
    fn no_marker_no_chips() {
        assert!(parse_option_chips("How has your week been?").is_empty());
        assert!(parse_option_chips("reply-42").is_empty());
    }

    #[test]
    fn long_prose_after_marker_is_not_a_list() {
        assert!(parse_option_chips("For example, you might tell me about a day when everything felt heavy.").is_empty());
    }
}
