//! Song lyrics as sections of lines.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SectionKind {
    Verse,
    Chorus,
    Bridge,
}

impl SectionKind {
    fn parse_header(line: &str) -> Option<Self> {
        let inner = line.trim().strip_prefix('[')?.strip_suffix(']')?.trim().to_ascii_lowercase();
        let word = inner.split_whitespace().next()?;
        match word {
            "verse" => Some(SectionKind::Verse),
            "chorus" => Some(SectionKind::Chorus),
            "bridge" => Some(SectionKind::Bridge),
            _ => None,
        }
    }
}

impl fmt::Display for SectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SectionKind::Verse => "Verse",
            SectionKind::Chorus => "Chorus",
            SectionKind::Bridge => "Bridge",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LyricsSection {
    pub kind: SectionKind,
    pub lines: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LyricsDocument {
    pub sections: Vec<LyricsSection>,
    pub full_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LyricsError {
    #[error("lyrics contain no [Verse]/[Chorus]/[Bridge] sections")]
    NoSections,
    #[error("generated lyrics need at least one verse and one chorus")]
    MissingVerseOrChorus,
    #[error("lyrics have no words")]
    Empty,
}

impl LyricsDocument {
    pub fn new(sections: Vec<LyricsSection>) -> Self {
        let full_text = render(&sections);
        Self { sections, full_text }
    }

    /// Parses bracketed section headers (`[Verse 1]`, `[Chorus]`, ...). Text before the first
    /// header and unknown headers are dropped.
    pub fn parse(text: &str) -> Result<Self, LyricsError> {
        let mut sections: Vec<LyricsSection> = Vec::new();
        let mut in_unknown = false;
        for raw in text.lines() {
            let line = raw.trim();
            if line.starts_with('[') && line.ends_with(']') {
                match SectionKind::parse_header(line) {
                    Some(kind) => {
                        sections.push(LyricsSection { kind, lines: Vec::new() });
                        in_unknown = false;
                    }
                    None => in_unknown = true,
                }
                continue;
            }
            if line.is_empty() || in_unknown {
                continue;
            }
            if let Some(current) = sections.last_mut() {
                current.lines.push(line.to_string());
            }
        }
        sections.retain(|s| !s.lines.is_empty());
        if sections.is_empty() {
            return Err(LyricsError::NoSections);
        }
        Ok(Self::new(sections))
    }

    /// Parse plus the shape rule for agent-written lyrics.
    pub fn parse_generated(text: &str) -> Result<Self, LyricsError> {
        let doc = Self::parse(text)?;
        let has = |k| doc.sections.iter().any(|s| s.kind == k);
        if !has(SectionKind::Verse) || !has(SectionKind::Chorus) {
            return Err(LyricsError::MissingVerseOrChorus);
        }
        Ok(doc)
    }

    pub fn words(&self) -> Vec<&str> {
        self.sections.iter().flat_map(|s| s.lines.iter()).flat_map(|l| l.split_whitespace()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.words().is_empty()
    }
}

fn render(sections: &[LyricsSection]) -> String {
    sections
        .iter()
        .map(|s| {
            let mut block = format!("[{}]", s.kind);
            for line in &s.lines {
                block.push('\n');
                block.push_str(line);
            }
            block
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}
