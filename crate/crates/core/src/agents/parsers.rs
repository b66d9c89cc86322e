//! Parsers for the final outputs of each agent.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Section headers every research report must carry.
pub const RESEARCH_SECTIONS: [&str; 6] = [
    "Target Overview",
    "Initialization Requirements",
    "Input Construction",
    "Exception Contract",
    "API Paths Of Interest",
    "Open Risks",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResearchReport {
    pub text: String,
    /// Body of each required section keyed by its canonical header.
    pub sections: BTreeMap<String, String>,
}

impl ResearchReport {
    pub fn section(&self, name: &str) -> Option<&str> {
        self.sections.get(name).map(String::as_str)
    }
}

fn header_title(line: &str) -> Option<&str> {
    let t = line.trim_start();
    let hashes = t.len() - t.trim_start_matches('#').len();
    if hashes == 0 || hashes > 6 {
        return None;
    }
    let rest = &t[hashes..];
    rest.starts_with(' ')
        .then(|| rest.trim().trim_end_matches(':').trim())
}

pub fn parse_research_report(text: &str) -> Result<ResearchReport> {
    let mut sections = BTreeMap::new();
    let mut current: Option<&str> = None;
    let mut body = String::new();
    let flush =
        |current: Option<&str>, body: &mut String, sections: &mut BTreeMap<String, String>| {
            if let Some(name) = current {
                sections.insert(name.to_string(), body.trim().to_string());
            }
            body.clear();
        };
    for line in text.lines() {
        if let Some(title) = header_title(line) {
            flush(current, &mut body, &mut sections);
            current = RESEARCH_SECTIONS
                .iter()
                .copied()
                .find(|s| s.eq_ignore_ascii_case(title));
            continue;
        }
        if current.is_some() {
            body.push_str(line);
            body.push('\n');
        }
    }
    flush(current, &mut body, &mut sections);
    let missing: Vec<&str> = RESEARCH_SECTIONS
        .iter()
        .copied()
        .filter(|s| !sections.contains_key(*s))
        .collect();
    if !missing.is_empty() {
        return Err(Error::parse(
            "research report",
            format!("missing required sections: {}", missing.join(", ")),
        ));
    }
    Ok(ResearchReport {
        text: text.to_string(),
        sections,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarnessArtifact {
    pub source: String,
    pub dependencies: Vec<String>,
    pub normalized_hash: String,
}

impl HarnessArtifact {
    pub fn new(source: impl Into<String>, dependencies: Vec<String>) -> Self {
        let source = source.into();
        HarnessArtifact {
            normalized_hash: normalize_and_hash(&source),
            source,
            dependencies,
        }
    }
}

fn is_fence(line: &str) -> bool {
    line.trim_start().starts_with("```")
}

/// Body of the first complete fenced block, as a range of line indices.
fn first_fenced_block(lines: &[&str]) -> Option<(usize, usize)> {
    let open = lines.iter().position(|l| is_fence(l))?;
    let close = lines[open + 1..].iter().position(|l| is_fence(l))? + open + 1;
    Some((open, close))
}

/// Extracts the harness source from the first fenced block and dependency
/// coordinates from the lines after a `DEPENDENCIES:` marker.
pub fn parse_harness_output(text: &str) -> Result<HarnessArtifact> {
    let lines: Vec<&str> = text.lines().collect();
    let (open, close) = first_fenced_block(&lines).ok_or(Error::NoCode)?;
    let source = lines[open + 1..close].join("\n");
    if source.trim().is_empty() {
        return Err(Error::EmptyCode);
    }
    let mut dependencies = Vec::new();
    let marker = lines
        .iter()
        .enumerate()
        .filter(|(i, _)| *i < open || *i > close)
        .find(|(_, l)| l.trim().starts_with("DEPENDENCIES:"))
        .map(|(i, _)| i);
    if let Some(m) = marker {
        let inline = lines[m].trim()["DEPENDENCIES:".len()..].trim();
        let rest = lines[m + 1..]
            .iter()
            .take_while(|l| !is_fence(l))
            .map(|l| l.trim());
        for dep in std::iter::once(inline).chain(rest) {
            let dep = dep.trim_start_matches(['-', '*']).trim();
            if !dep.is_empty() {
                dependencies.push(dep.to_string());
            }
        }
    }
    Ok(HarnessArtifact::new(format!("{source}\n"), dependencies))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Stop,
    Continue,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Stop => "stop",
            Decision::Continue => "continue",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminationDecision {
    pub decision: Decision,
    #[serde(default)]
    pub rationale: String,
    #[serde(default)]
    pub priority_methods: Vec<String>,
    #[serde(default)]
    pub strategy: String,
}

/// Reads a stop/continue decision from a JSON object, fenced or embedded in
/// prose.
pub fn parse_termination_decision(text: &str) -> Result<TerminationDecision> {
    let lines: Vec<&str> = text.lines().collect();
    let mut candidates: Vec<String> = Vec::new();
    if let Some((open, close)) = first_fenced_block(&lines) {
        candidates.push(lines[open + 1..close].join("\n"));
    }
    if let (Some(start), Some(end)) = (text.find('{'), text.rfind('}')) {
        if start < end {
            candidates.push(text[start..=end].to_string());
        }
    }
    let mut last_error = "no JSON object found".to_string();
    for candidate in candidates {
        match serde_json::from_str::<TerminationDecision>(&candidate) {
            Ok(d) => {
                if d.decision == Decision::Continue && d.priority_methods.is_empty() {
                    return Err(Error::parse(
                        "termination decision",
                        "decision \"continue\" requires at least one priority method",
                    ));
                }
                return Ok(d);
            }
            Err(e) => last_error = e.to_string(),
        }
    }
    Err(Error::parse("termination decision", last_error))
}

/// Source with comments removed and whitespace runs collapsed to one space.
/// String and character literals are kept intact.
pub fn normalize_source(source: &str) -> String {
    let chars: Vec<char> = source.chars().collect();
    let mut out = String::with_capacity(source.len());
    let mut gap = false;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        if c.is_whitespace() || (c == '/' && matches!(next, Some('/' | '*'))) {
            gap = true;
        } else if gap {
            if !out.is_empty() {
                out.push(' ');
            }
            gap = false;
        }
        match c {
            '"' | '\'' => {
                out.push(c);
                i += 1;
                while i < chars.len() {
                    out.push(chars[i]);
                    if chars[i] == '\\' && i + 1 < chars.len() {
                        out.push(chars[i + 1]);
                        i += 2;
                        continue;
                    }
                    i += 1;
                    if chars[i - 1] == c || chars[i - 1] == '\n' {
                        break;
                    }
                }
            }
            '/' if next == Some('/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '/' if next == Some('*') => {
                i += 2;
                while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                    i += 1;
                }
                i = (i + 2).min(chars.len());
            }
            _ if c.is_whitespace() => i += 1,
            _ => {
                out.push(c);
                i += 1;
            }
        }
    }
    out
}

/// Hex SHA-256 of [`normalize_source`].
pub fn normalize_and_hash(source: &str) -> String {
    hex::encode(Sha256::digest(normalize_source(source).as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const REPORT: &str =
        "# Target Overview\nParses args.\n## Initialization Requirements\nOptions first.\n\
        ## Input Construction\nSplit bytes.\n## Exception Contract\nParseException is expected.\n\
        ## API Paths Of Interest\nhandleToken\n## Open Risks\nnone\n";

    #[test]
    fn research_report_requires_all_sections() {
        let r = parse_research_report(REPORT).unwrap();
        assert_eq!(
            r.section("Exception Contract"),
            Some("ParseException is expected.")
        );
        let partial = REPORT.replace("## Open Risks\nnone\n", "");
        let err = parse_research_report(&partial).unwrap_err();
        assert!(err.to_string().contains("Open Risks"));
    }

    #[test]
    fn harness_with_dependencies() {
        let text = "Here it is.\n```java\nclass H {}\n```\nDEPENDENCIES:\ncommons-cli:commons-cli:1.6.0\n- org.example:util:2\n";
        let h = parse_harness_output(text).unwrap();
        assert_eq!(h.source, "class H {}\n");
        assert_eq!(
            h.dependencies,
            vec!["commons-cli:commons-cli:1.6.0", "org.example:util:2"]
        );
        let bare = parse_harness_output("```\nclass H {}\n```").unwrap();
        assert!(bare.dependencies.is_empty());
    }

    #[test]
    fn harness_errors() {
        assert_eq!(
            parse_harness_output("just prose").unwrap_err().code(),
            "PARSE_NO_CODE"
        );
        assert_eq!(
            parse_harness_output("```java\n  \n```").unwrap_err().code(),
            "PARSE_EMPTY"
        );
        assert_eq!(
            parse_harness_output("```java\nunterminated")
                .unwrap_err()
                .code(),
            "PARSE_NO_CODE"
        );
    }

    #[test]
    fn termination_decisions() {
        let stop = parse_termination_decision(
            r#"{"decision":"stop","rationale":"...","priority_methods":[],"strategy":""}"#,
        )
        .unwrap();
        assert_eq!(stop.decision, Decision::Stop);
        let cont = parse_termination_decision(
            "Remaining gaps below.\n```json\n{\"decision\": \"continue\", \"rationale\": \"gaps\", \"priority_methods\": [\"a\", \"b\"], \"strategy\": \"long options\"}\n```\nThanks.",
        )
        .unwrap();
        assert_eq!(cont.priority_methods.len(), 2);
        let bad = parse_termination_decision(r#"{"decision":"continue","priority_methods":[]}"#);
        assert_eq!(bad.unwrap_err().code(), "PARSE");
        assert!(parse_termination_decision("no json here").is_err());
    }

    #[test]
    fn hash_ignores_comments_and_layout() {
        let a = "class H {\n  // setup\n  int x = 1; /* note */\n}\n";
        let b = "class H { int x = 1;\n}";
        let c = "class H { int y = 1; }";
        assert_eq!(normalize_and_hash(a), normalize_and_hash(b));
        assert_ne!(normalize_and_hash(b), normalize_and_hash(c));
        assert_eq!(normalize_and_hash(""), hex::encode(Sha256::digest(b"")));
    }

    #[test]
    fn comment_markers_inside_strings_survive() {
        assert_eq!(
            normalize_source(r#"s = "a // b"; // gone"#),
            r#"s = "a // b";"#
        );
        assert_eq!(normalize_source(r#"s = "q\"/*"; x"#), r#"s = "q\"/*"; x"#);
    }
}
