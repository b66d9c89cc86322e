//! Source index for symbol and content queries.
//!
//! Declarations are found by a line-oriented scanner over brace-balanced
//! blocks, not a parser. It recognises Java-style class, method and field
//! headers, which is also the syntax of the sandbox's `.tl` sources. Comments
//! and string literals are blanked before structural matching, so braces
//! inside them do not disturb block tracking.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::docs_index::{signature_key, suggest};
use crate::error::{Error, Result};

pub const DEFAULT_EXTENSIONS: &[&str] = &["java", "tl"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolKind {
    Class,
    Method,
    Field,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolEntry {
    /// Simple name for classes and fields, `name(ParamTypes)` for methods.
    pub name: String,
    pub kind: SymbolKind,
    pub file: String,
    pub line_start: usize,
    pub line_end: usize,
    /// Innermost enclosing class.
    pub container: Option<String>,
    /// Dotted chain of enclosing classes, outermost first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub package: Option<String>,
}

impl SymbolEntry {
    /// Bare identifier: the method name without its parameter list.
    pub fn simple_name(&self) -> &str {
        self.name.split('(').next().unwrap_or(&self.name)
    }

    pub fn qualified_name(&self) -> String {
        let mut out = String::new();
        for part in [self.package.as_deref(), self.scope.as_deref()]
            .into_iter()
            .flatten()
        {
            out.push_str(part);
            out.push('.');
        }
        out.push_str(&self.name);
        out
    }
}

#[derive(Debug, Clone)]
pub struct SourceUnit {
    pub path: String,
    pub text: String,
    pub symbols: Vec<SymbolEntry>,
}

impl SourceUnit {
    fn lines(&self) -> Vec<&str> {
        self.text.split_inclusive('\n').collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeKind {
    Method,
    Class,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchKind {
    Definition,
    Refs,
    Symbol,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SearchHit {
    pub path: String,
    pub line: usize,
    pub excerpt: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResults {
    pub hits: Vec<SearchHit>,
    /// Number of matches before the cap was applied.
    pub total: usize,
}

impl SearchResults {
    pub fn truncated(&self) -> bool {
        self.total > self.hits.len()
    }

    pub fn render(&self) -> String {
        if self.hits.is_empty() {
            return "no matches".to_string();
        }
        let mut out = String::new();
        for hit in &self.hits {
            let _ = writeln!(out, "{}:{}: {}", hit.path, hit.line, hit.excerpt);
        }
        if self.truncated() {
            let _ = writeln!(
                out,
                "[truncated: {} more results]",
                self.total - self.hits.len()
            );
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct CodeIndex {
    units: Vec<SourceUnit>,
}

impl CodeIndex {
    pub fn build(root: &Path) -> Result<Self> {
        Self::build_with_extensions(root, DEFAULT_EXTENSIONS)
    }

    pub fn build_with_extensions(root: &Path, extensions: &[&str]) -> Result<Self> {
        if !root.is_dir() {
            return Err(Error::io(
                root,
                std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    "source root is not a directory",
                ),
            ));
        }
        let mut units = Vec::new();
        for entry in WalkDir::new(root).sort_by_file_name() {
            let entry = match entry {
                Ok(e) => e,
                Err(e) => {
                    log::warn!("skipping unreadable entry under {}: {e}", root.display());
                    continue;
                }
            };
            if !entry.file_type().is_file() {
                continue;
            }
            let ext = entry
                .path()
                .extension()
                .and_then(|e| e.to_str())
                .unwrap_or("");
            if !extensions.contains(&ext) {
                continue;
            }
            let rel = entry
                .path()
                .strip_prefix(root)
                .unwrap_or(entry.path())
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            match std::fs::read_to_string(entry.path()) {
                Ok(text) => units.push(SourceUnit {
                    symbols: scan_declarations(&rel, &text),
                    path: rel,
                    text,
                }),
                Err(e) => log::warn!("skipping {}: {e}", entry.path().display()),
            }
        }
        Self::from_units(units)
    }

    /// Builds an index from in-memory `(path, text)` pairs.
    pub fn from_sources<P: Into<String>, T: Into<String>>(
        sources: impl IntoIterator<Item = (P, T)>,
    ) -> Result<Self> {
        let units = sources
            .into_iter()
            .map(|(p, t)| {
                let (path, text) = (p.into(), t.into());
                SourceUnit {
                    symbols: scan_declarations(&path, &text),
                    path,
                    text,
                }
            })
            .collect();
        Self::from_units(units)
    }

    fn from_units(mut units: Vec<SourceUnit>) -> Result<Self> {
        if units.is_empty() {
            return Err(Error::IndexEmpty);
        }
        units.sort_by(|a, b| a.path.cmp(&b.path));
        for pair in units.windows(2) {
            if pair[0].path == pair[1].path {
                return Err(Error::Config(format!(
                    "duplicate source path {}",
                    pair[0].path
                )));
            }
        }
        Ok(CodeIndex { units })
    }

    pub fn units(&self) -> &[SourceUnit] {
        &self.units
    }

    pub fn symbols(&self) -> impl Iterator<Item = &SymbolEntry> {
        self.units.iter().flat_map(|u| u.symbols.iter())
    }

    pub fn get_code(&self, kind: CodeKind, qualifier: &str) -> Result<String> {
        let symbol = self.resolve(kind, qualifier.trim())?;
        let unit = self
            .units
            .iter()
            .find(|u| u.path == symbol.file)
            .expect("symbol belongs to an indexed unit");
        let lines = unit.lines();
        let body: String = lines[symbol.line_start - 1..symbol.line_end].concat();
        let body = body.strip_suffix('\n').unwrap_or(&body);
        Ok(format!(
            "// {}:{}-{}\n{}",
            symbol.file, symbol.line_start, symbol.line_end, body
        ))
    }

    /// Resolves a class or method qualifier to exactly one symbol. Methods
    /// are matched by exact signature first, then by bare name.
    pub fn resolve(&self, kind: CodeKind, qualifier: &str) -> Result<&SymbolEntry> {
        let wanted = match kind {
            CodeKind::Class => SymbolKind::Class,
            CodeKind::Method => SymbolKind::Method,
        };
        let candidates: Vec<&SymbolEntry> = self.symbols().filter(|s| s.kind == wanted).collect();
        let mut matches: Vec<&SymbolEntry> = match kind {
            CodeKind::Class => candidates
                .iter()
                .copied()
                .filter(|s| qualifies(&s.qualified_name(), qualifier))
                .collect(),
            CodeKind::Method => {
                let key = signature_key(qualifier);
                let exact: Vec<&SymbolEntry> = candidates
                    .iter()
                    .copied()
                    .filter(|s| {
                        key.contains('(') && qualifies(&signature_key(&s.qualified_name()), &key)
                    })
                    .collect();
                if exact.is_empty() {
                    let bare = key.split('(').next().unwrap_or(&key);
                    candidates
                        .iter()
                        .copied()
                        .filter(|s| {
                            let q = s.qualified_name();
                            let q = q.split('(').next().unwrap_or(&q);
                            qualifies(q, bare)
                        })
                        .collect()
                } else {
                    exact
                }
            }
        };
        matches.sort_by_key(|s| (s.file.clone(), s.line_start));
        match matches.len() {
            1 => Ok(matches[0]),
            0 => {
                let names: Vec<String> = candidates.iter().map(|s| s.qualified_name()).collect();
                let simple: Vec<String> = candidates
                    .iter()
                    .map(|s| match &s.container {
                        Some(c) if kind == CodeKind::Method => format!("{c}.{}", s.name),
                        _ => s.name.clone(),
                    })
                    .collect();
                Err(Error::not_found(
                    format!(
                        "{} {qualifier:?}",
                        if kind == CodeKind::Class {
                            "class"
                        } else {
                            "method"
                        }
                    ),
                    suggest(
                        qualifier,
                        names.iter().chain(simple.iter()).map(String::as_str),
                    ),
                ))
            }
            _ => Err(Error::Ambiguous {
                what: qualifier.to_string(),
                candidates: matches.iter().map(|s| s.qualified_name()).collect(),
            }),
        }
    }

    pub fn search(&self, kind: SearchKind, query: &str, max_results: i64) -> Result<SearchResults> {
        if max_results <= 0 {
            return Err(Error::BadArgs("max_results must be positive".into()));
        }
        let query = query.trim();
        if query.is_empty() {
            return Err(Error::BadArgs("query must not be empty".into()));
        }
        let mut hits: BTreeSet<SearchHit> = BTreeSet::new();
        match kind {
            SearchKind::Definition => {
                let key = signature_key(query);
                for s in self.symbols() {
                    if s.simple_name() == query
                        || signature_key(&s.name) == key
                        || qualifies(&signature_key(&s.qualified_name()), &key)
                    {
                        hits.insert(self.hit(&s.file, s.line_start));
                    }
                }
            }
            SearchKind::Symbol => {
                let needle = query.to_lowercase();
                for s in self.symbols() {
                    if s.qualified_name().to_lowercase().contains(&needle) {
                        hits.insert(self.hit(&s.file, s.line_start));
                    }
                }
            }
            SearchKind::Refs => {
                let token = reference_token(query);
                let word = Regex::new(&format!(r"\b{}\b", regex::escape(token)))
                    .map_err(|e| Error::BadArgs(e.to_string()))?;
                let declared: BTreeSet<(&str, usize)> = self
                    .symbols()
                    .filter(|s| s.simple_name() == token)
                    .map(|s| (s.file.as_str(), s.line_start))
                    .collect();
                for unit in &self.units {
                    let mut in_comment = false;
                    for (i, line) in unit.text.lines().enumerate() {
                        let code = blank_comments_and_strings(line, &mut in_comment);
                        if word.is_match(&code) && !declared.contains(&(unit.path.as_str(), i + 1))
                        {
                            hits.insert(hit_from(&unit.path, i + 1, line));
                        }
                    }
                }
            }
            SearchKind::Text => {
                let re = Regex::new(query)
                    .map_err(|e| Error::BadArgs(format!("invalid pattern: {e}")))?;
                for unit in &self.units {
                    for (i, line) in unit.text.lines().enumerate() {
                        if re.is_match(line) {
                            hits.insert(hit_from(&unit.path, i + 1, line));
                        }
                    }
                }
            }
        }
        let total = hits.len();
        Ok(SearchResults {
            hits: hits.into_iter().take(max_results as usize).collect(),
            total,
        })
    }

    fn hit(&self, path: &str, line: usize) -> SearchHit {
        let text = self
            .units
            .iter()
            .find(|u| u.path == path)
            .and_then(|u| u.text.lines().nth(line - 1))
            .unwrap_or("");
        hit_from(path, line, text)
    }
}

fn hit_from(path: &str, line: usize, text: &str) -> SearchHit {
    SearchHit {
        path: path.to_string(),
        line,
        excerpt: text.trim().to_string(),
    }
}

/// `name` equals `qualifier` or ends with `.qualifier`.
fn qualifies(name: &str, qualifier: &str) -> bool {
    name == qualifier
        || (name.len() > qualifier.len()
            && name.ends_with(qualifier)
            && name.as_bytes()[name.len() - qualifier.len() - 1] == b'.')
}

/// Identifier searched for by `refs`: the bare method or class name.
fn reference_token(query: &str) -> &str {
    let head = query.split('(').next().unwrap_or(query);
    head.rsplit('.').next().unwrap_or(head).trim()
}

/// Replaces comment text and string/char literal contents with spaces,
/// carrying block-comment state across lines.
pub(crate) fn blank_comments_and_strings(line: &str, in_block_comment: &mut bool) -> String {
    let chars: Vec<char> = line.chars().collect();
    let mut out = String::with_capacity(line.len());
    let mut i = 0;
    let mut quote: Option<char> = None;
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        if *in_block_comment {
            if c == '*' && next == Some('/') {
                *in_block_comment = false;
                out.push_str("  ");
                i += 2;
            } else {
                out.push(' ');
                i += 1;
            }
            continue;
        }
        if let Some(q) = quote {
            if c == '\\' {
                out.push_str("  ");
                i += 2;
                continue;
            }
            if c == q {
                quote = None;
                out.push(c);
            } else {
                out.push(' ');
            }
            i += 1;
            continue;
        }
        match (c, next) {
            ('/', Some('/')) => break,
            ('/', Some('*')) => {
                *in_block_comment = true;
                out.push_str("  ");
                i += 2;
            }
            ('"', _) | ('\'', _) => {
                quote = Some(c);
                out.push(c);
                i += 1;
            }
            _ => {
                out.push(c);
                i += 1;
            }
        }
    }
    out
}

const MODIFIERS: &str = r"(?:(?:public|protected|private|static|final|abstract|synchronized|native|default|sealed|strictfp|transient|volatile)\s+)*";

fn class_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(&format!(
            r"^\s*(?:@\w+(?:\([^)]*\))?\s+)*{MODIFIERS}(?:class|interface|enum|record)\s+([A-Za-z_]\w*)"
        ))
        .unwrap()
    })
}

fn method_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(&format!(
            r"^\s*(?:@\w+(?:\([^)]*\))?\s+)*{MODIFIERS}(?:<[^>]*>\s+)?(?:([\w.$]+(?:<.*>)?(?:\[\])*)\s+)?([A-Za-z_]\w*)\s*\(([^)]*)\)\s*(?:throws\s+[\w.,\s]+)?\s*(\{{|;)?"
        ))
        .unwrap()
    })
}

fn field_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(&format!(
            r"^\s*{MODIFIERS}[\w.$]+(?:<.*>)?(?:\[\])*\s+([A-Za-z_]\w*)\s*(?:=.*)?;\s*$"
        ))
        .unwrap()
    })
}

fn package_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*package\s+([\w.]+)\s*;").unwrap())
}

const NOT_METHOD_NAMES: &[&str] = &[
    "if",
    "for",
    "while",
    "switch",
    "catch",
    "return",
    "new",
    "synchronized",
    "throw",
    "else",
    "do",
    "try",
    "super",
    "this",
];

/// Parameter types of a declaration's parameter list, comma separated.
fn parameter_types(params: &str) -> String {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut current = String::new();
    for c in params.chars() {
        match c {
            '<' => depth += 1,
            '>' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(std::mem::take(&mut current));
                continue;
            }
            _ => {}
        }
        current.push(c);
    }
    parts.push(current);
    parts
        .iter()
        .map(|p| p.trim())
        .filter(|p| !p.is_empty())
        .map(|p| {
            let tokens: Vec<&str> = p
                .split_whitespace()
                .filter(|t| *t != "final" && !t.starts_with('@'))
                .collect();
            let ty = if tokens.len() > 1 {
                tokens[..tokens.len() - 1].join(" ")
            } else {
                tokens.join(" ")
            };
            signature_key(&ty)
        })
        .collect::<Vec<_>>()
        .join(",")
}

struct Open {
    symbol: usize,
    open_depth: i32,
    started: bool,
    is_class: bool,
}

/// Extracts class, method and field declarations from one source file.
pub fn scan_declarations(path: &str, text: &str) -> Vec<SymbolEntry> {
    let mut symbols: Vec<SymbolEntry> = Vec::new();
    let mut stack: Vec<Open> = Vec::new();
    let mut package: Option<String> = None;
    let mut depth = 0i32;
    let mut in_comment = false;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let code = blank_comments_and_strings(raw, &mut in_comment);
        if package.is_none() && stack.is_empty() {
            if let Some(c) = package_re().captures(&code) {
                package = Some(c[1].to_string());
            }
        }

        // Declarations are only recognised at file level or directly inside
        // a class body.
        let in_class_body = match stack.last() {
            None => depth == 0,
            Some(top) => top.is_class && top.started && depth == top.open_depth + 1,
        };
        let class_chain: Vec<&str> = stack
            .iter()
            .filter(|o| o.is_class)
            .map(|o| symbols[o.symbol].name.as_str())
            .collect();
        let scope = (!class_chain.is_empty()).then(|| class_chain.join("."));
        let container = class_chain.last().map(|s| s.to_string());

        let mut declared: Option<(SymbolEntry, bool)> = None;
        if in_class_body {
            if let Some(c) = class_re().captures(&code) {
                declared = Some((
                    entry(
                        &c[1],
                        SymbolKind::Class,
                        path,
                        line_no,
                        &container,
                        &scope,
                        &package,
                    ),
                    true,
                ));
            } else if let Some(c) = method_re().captures(&code).filter(|c| {
                let name = &c[2];
                let has_type = c
                    .get(1)
                    .is_some_and(|t| !NOT_METHOD_NAMES.contains(&t.as_str()));
                let is_ctor = c.get(1).is_none() && container.as_deref() == Some(name);
                container.is_some() && !NOT_METHOD_NAMES.contains(&name) && (has_type || is_ctor)
            }) {
                let name = format!("{}({})", &c[2], parameter_types(&c[3]));
                let mut e = entry(
                    &name,
                    SymbolKind::Method,
                    path,
                    line_no,
                    &container,
                    &scope,
                    &package,
                );
                let bodyless = c.get(4).is_some_and(|m| m.as_str() == ";");
                if bodyless {
                    symbols.push(e);
                } else {
                    e.line_end = line_no;
                    declared = Some((e, false));
                }
            } else if let Some(c) = field_re().captures(&code) {
                if container.is_some()
                    && !NOT_METHOD_NAMES.contains(&&c[1])
                    && !code.trim_start().starts_with("return")
                {
                    symbols.push(entry(
                        &c[1],
                        SymbolKind::Field,
                        path,
                        line_no,
                        &container,
                        &scope,
                        &package,
                    ));
                }
            }
        }
        if let Some((e, is_class)) = declared {
            symbols.push(e);
            stack.push(Open {
                symbol: symbols.len() - 1,
                open_depth: depth,
                started: false,
                is_class,
            });
        }

        let mut max_depth = depth;
        for c in code.chars() {
            match c {
                '{' => {
                    depth += 1;
                    max_depth = max_depth.max(depth);
                }
                '}' => depth -= 1,
                _ => {}
            }
        }
        if let Some(top) = stack.last_mut() {
            if max_depth > top.open_depth {
                top.started = true;
            }
        }
        while let Some(top) = stack.last() {
            if top.started && depth <= top.open_depth {
                symbols[top.symbol].line_end = line_no;
                stack.pop();
            } else {
                break;
            }
        }
    }
    let last = text.lines().count().max(1);
    for open in stack {
        symbols[open.symbol].line_end = last;
    }
    symbols
}

fn entry(
    name: &str,
    kind: SymbolKind,
    path: &str,
    line: usize,
    container: &Option<String>,
    scope: &Option<String>,
    package: &Option<String>,
) -> SymbolEntry {
    SymbolEntry {
        name: name.to_string(),
        kind,
        file: path.to_string(),
        line_start: line,
        line_end: line,
        container: container.clone(),
        scope: scope.clone(),
        package: package.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PARSER: &str = "package demo.cli;

/** Parses argv. { not a brace */
public class Parser {
    private Options options;
    static final String PREFIX = \"--{\";

    public Parser(Options options) {
        this.options = options;
    }

    public CommandLine parse(Options opts, String[] args) throws ParseException {
        for (String a : args) {
            handle(a);
        }
        return null;
    }

    private void handle(String token) {
        if (token.startsWith(PREFIX)) { options.get(token); }
    }

    static class State {
        int index = 0;

        void advance() { index++; }
    }

    abstract void hook(Map<String, List<Integer>> m, final int... xs);
}
";

    #[test]
    fn scanner_matches_hand_enumerated_declarations() {
        let symbols = scan_declarations("demo/Parser.tl", PARSER);
        let got: Vec<(&str, SymbolKind, usize, usize, Option<&str>)> = symbols
            .iter()
            .map(|s| {
                (
                    s.name.as_str(),
                    s.kind,
                    s.line_start,
                    s.line_end,
                    s.container.as_deref(),
                )
            })
            .collect();
        let expected = vec![
            ("Parser", SymbolKind::Class, 4, 30, None),
            ("options", SymbolKind::Field, 5, 5, Some("Parser")),
            ("PREFIX", SymbolKind::Field, 6, 6, Some("Parser")),
            ("Parser(Options)", SymbolKind::Method, 8, 10, Some("Parser")),
            (
                "parse(Options,String[])",
                SymbolKind::Method,
                12,
                17,
                Some("Parser"),
            ),
            ("handle(String)", SymbolKind::Method, 19, 21, Some("Parser")),
            ("State", SymbolKind::Class, 23, 27, Some("Parser")),
            ("index", SymbolKind::Field, 24, 24, Some("State")),
            ("advance()", SymbolKind::Method, 26, 26, Some("State")),
            (
                "hook(Map<String,List<Integer>>,int...)",
                SymbolKind::Method,
                29,
                29,
                Some("Parser"),
            ),
        ];
        assert_eq!(got, expected);
        assert!(symbols
            .iter()
            .all(|s| s.package.as_deref() == Some("demo.cli")));
        assert_eq!(
            symbols[8].qualified_name(),
            "demo.cli.Parser.State.advance()"
        );
    }

    #[test]
    fn blanking_keeps_code_and_drops_literals() {
        let mut c = false;
        assert_eq!(
            blank_comments_and_strings(r#"a("x{") // {"#, &mut c).trim_end(),
            r#"a("  ")"#
        );
        let line = blank_comments_and_strings("x /* open", &mut c);
        assert!(c && line.trim() == "x");
        let line = blank_comments_and_strings("still */ y", &mut c);
        assert!(!c && line.trim() == "y");
        assert_eq!(
            blank_comments_and_strings(r"'\'' + z", &mut c).trim_end(),
            "'  ' + z"
        );
    }

    #[test]
    fn get_code_is_byte_exact() {
        let idx = CodeIndex::from_sources([("demo/Parser.tl", PARSER)]).unwrap();
        let snippet = idx
            .get_code(CodeKind::Method, "Parser.handle(String)")
            .unwrap();
        let expected_body: Vec<&str> = PARSER.lines().skip(18).take(3).collect();
        assert_eq!(
            snippet,
            format!("// demo/Parser.tl:19-21\n{}", expected_body.join("\n"))
        );
        assert_eq!(idx.get_code(CodeKind::Method, "handle").unwrap(), snippet);
    }

    #[test]
    fn refs_skip_declaration_comments_and_strings() {
        let src = "class A {\n  void run() {}\n  // run later\n  void b() { run(); }\n  String s = \"run\";\n  void c() { run(); run(); }\n}\n";
        let idx = CodeIndex::from_sources([("A.tl", src)]).unwrap();
        let res = idx.search(SearchKind::Refs, "run()", 10).unwrap();
        let lines: Vec<usize> = res.hits.iter().map(|h| h.line).collect();
        assert_eq!(lines, vec![4, 6]);
    }

    #[test]
    fn search_argument_errors() {
        let idx = CodeIndex::from_sources([("A.tl", "class A {}\n")]).unwrap();
        assert_eq!(
            idx.search(SearchKind::Text, "(", 5).unwrap_err().code(),
            "BAD_ARGS"
        );
        assert_eq!(
            idx.search(SearchKind::Text, "A", 0).unwrap_err().code(),
            "BAD_ARGS"
        );
    }

    #[test]
    fn empty_index_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(
            CodeIndex::build(dir.path()).unwrap_err().code(),
            "INDEX_EMPTY"
        );
        std::fs::write(dir.path().join("notes.txt"), "class X {}").unwrap();
        assert_eq!(
            CodeIndex::build(dir.path()).unwrap_err().code(),
            "INDEX_EMPTY"
        );
    }
}
