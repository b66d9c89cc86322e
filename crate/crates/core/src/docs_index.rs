//! API documentation bundle and the six documentation queries.
//!
//! The bundle is a JSON document shaped like:
//!
//! ```json
//! {"packages": [{"name": "p", "doc": "...", "classes": [
//!     {"name": "C", "doc": "...", "methods": [
//!         {"signature": "parse(String)", "doc": "...",
//!          "params": [{"name": "html", "doc": "..."}],
//!          "returns": "...",
//!          "throws": [{"exception": "IllegalArgumentException", "condition": "..."}]}]}]}]}
//! ```
//!
//! Unknown fields are ignored. Method signatures are compared with all
//! whitespace removed, so `parse(String, String)` and `parse(String,String)`
//! name the same method.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{self, Error, Result};

const MAX_SUGGESTIONS: usize = 5;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DocsBundle {
    pub packages: Vec<PackageDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackageDoc {
    pub name: String,
    #[serde(default)]
    pub doc: String,
    #[serde(default)]
    pub classes: Vec<ClassDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDoc {
    pub name: String,
    #[serde(default)]
    pub doc: String,
    #[serde(default)]
    pub methods: Vec<MethodDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodDoc {
    pub signature: String,
    #[serde(default)]
    pub doc: String,
    #[serde(default)]
    pub params: Vec<ParamDoc>,
    #[serde(default)]
    pub returns: String,
    #[serde(default)]
    pub throws: Vec<ThrowsDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDoc {
    pub name: String,
    #[serde(default)]
    pub doc: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThrowsDoc {
    pub exception: String,
    #[serde(default)]
    pub condition: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocKind {
    Method,
    Class,
    Package,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityKind {
    Packages,
    Classes,
    Methods,
}

/// Strips whitespace so signatures compare independent of spacing.
pub fn signature_key(signature: &str) -> String {
    signature.chars().filter(|c| !c.is_whitespace()).collect()
}

impl DocsBundle {
    pub fn load(path: &Path) -> Result<Self> {
        let bundle: DocsBundle = error::read_json(path)?;
        bundle.validate(&path.display().to_string())?;
        Ok(bundle)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let bundle: DocsBundle = error::parse_json(text, "<bundle>")?;
        bundle.validate("<bundle>")?;
        Ok(bundle)
    }

    fn validate(&self, origin: &str) -> Result<()> {
        let mut packages = BTreeSet::new();
        for (pi, package) in self.packages.iter().enumerate() {
            if !packages.insert(package.name.as_str()) {
                return Err(Error::parse(
                    format!("{origin}: packages[{pi}].name"),
                    format!("duplicate package {:?}", package.name),
                ));
            }
            let mut classes = BTreeSet::new();
            for (ci, class) in package.classes.iter().enumerate() {
                if !classes.insert(class.name.as_str()) {
                    return Err(Error::parse(
                        format!("{origin}: packages[{pi}].classes[{ci}].name"),
                        format!(
                            "duplicate class {:?} in package {:?}",
                            class.name, package.name
                        ),
                    ));
                }
                let mut methods = BTreeSet::new();
                for (mi, method) in class.methods.iter().enumerate() {
                    if !methods.insert(signature_key(&method.signature)) {
                        return Err(Error::parse(
                            format!(
                                "{origin}: packages[{pi}].classes[{ci}].methods[{mi}].signature"
                            ),
                            format!(
                                "duplicate method {:?} in class {:?}",
                                method.signature, class.name
                            ),
                        ));
                    }
                    for (ti, throws) in method.throws.iter().enumerate() {
                        if throws.exception.trim().is_empty() {
                            return Err(Error::parse(
                                format!(
                                    "{origin}: packages[{pi}].classes[{ci}].methods[{mi}].throws[{ti}].exception"
                                ),
                                "exception name must not be empty",
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct ClassRef {
    package: usize,
    class: usize,
}

/// Read-only index over a [`DocsBundle`].
#[derive(Debug, Clone)]
pub struct DocsIndex {
    bundle: DocsBundle,
    packages: BTreeMap<String, usize>,
    /// Simple class name -> every package declaring it.
    classes: BTreeMap<String, Vec<ClassRef>>,
}

impl DocsIndex {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::new(DocsBundle::load(path)?))
    }

    pub fn new(bundle: DocsBundle) -> Self {
        let mut packages = BTreeMap::new();
        let mut classes: BTreeMap<String, Vec<ClassRef>> = BTreeMap::new();
        for (pi, package) in bundle.packages.iter().enumerate() {
            packages.insert(package.name.clone(), pi);
            for (ci, class) in package.classes.iter().enumerate() {
                classes
                    .entry(class.name.clone())
                    .or_default()
                    .push(ClassRef {
                        package: pi,
                        class: ci,
                    });
            }
        }
        DocsIndex {
            bundle,
            packages,
            classes,
        }
    }

    pub fn bundle(&self) -> &DocsBundle {
        &self.bundle
    }

    pub fn package_count(&self) -> usize {
        self.bundle.packages.len()
    }

    pub fn class_count(&self) -> usize {
        self.bundle.packages.iter().map(|p| p.classes.len()).sum()
    }

    pub fn method_count(&self) -> usize {
        self.bundle
            .packages
            .iter()
            .flat_map(|p| &p.classes)
            .map(|c| c.methods.len())
            .sum()
    }

    pub fn query_doc(&self, kind: DocKind, qualifier: &str) -> Result<String> {
        let qualifier = qualifier.trim();
        match kind {
            DocKind::Package => {
                let package = self.package(qualifier)?;
                Ok(render_package(package))
            }
            DocKind::Class => {
                let r = self.class(qualifier)?;
                Ok(render_class(
                    &self.bundle.packages[r.package].name,
                    self.class_doc(r),
                ))
            }
            DocKind::Method => {
                let (r, method) = self.method(qualifier)?;
                let package = &self.bundle.packages[r.package].name;
                Ok(render_method(package, &self.class_doc(r).name, method))
            }
        }
    }

    pub fn list_entities(&self, kind: EntityKind, parent: Option<&str>) -> Result<Vec<String>> {
        let mut out = match kind {
            EntityKind::Packages => self.packages.keys().cloned().collect(),
            EntityKind::Classes => {
                let name = parent
                    .ok_or_else(|| Error::BadArgs("listing classes requires a package".into()))?;
                self.package(name)?
                    .classes
                    .iter()
                    .map(|c| c.name.clone())
                    .collect::<Vec<_>>()
            }
            EntityKind::Methods => {
                let name = parent
                    .ok_or_else(|| Error::BadArgs("listing methods requires a class".into()))?;
                self.class_doc(self.class(name)?)
                    .methods
                    .iter()
                    .map(|m| m.signature.clone())
                    .collect::<Vec<_>>()
            }
        };
        out.sort();
        Ok(out)
    }

    /// Looks up a method documentation entry by qualified signature.
    pub fn method_doc(&self, qualifier: &str) -> Result<(&str, &str, &MethodDoc)> {
        let (r, m) = self.method(qualifier)?;
        Ok((
            &self.bundle.packages[r.package].name,
            &self.class_doc(r).name,
            m,
        ))
    }

    fn class_doc(&self, r: ClassRef) -> &ClassDoc {
        &self.bundle.packages[r.package].classes[r.class]
    }

    fn package(&self, name: &str) -> Result<&PackageDoc> {
        self.packages
            .get(name)
            .map(|&i| &self.bundle.packages[i])
            .ok_or_else(|| {
                Error::not_found(
                    format!("package {name:?}"),
                    suggest(name, self.packages.keys().map(String::as_str)),
                )
            })
    }

    fn class(&self, qualifier: &str) -> Result<ClassRef> {
        let (package, simple) = match qualifier.rsplit_once('.') {
            Some((p, c)) => (Some(p), c),
            None => (None, qualifier),
        };
        let candidates: Vec<ClassRef> = self
            .classes
            .get(simple)
            .map(|refs| {
                refs.iter()
                    .copied()
                    .filter(|r| package.is_none_or(|p| self.bundle.packages[r.package].name == p))
                    .collect()
            })
            .unwrap_or_default();
        match candidates.len() {
            1 => Ok(candidates[0]),
            0 => Err(Error::not_found(
                format!("class {qualifier:?}"),
                suggest(
                    qualifier,
                    self.qualified_class_names()
                        .iter()
                        .map(String::as_str)
                        .chain(self.classes.keys().map(String::as_str)),
                ),
            )),
            _ => Err(Error::Ambiguous {
                what: format!("class {qualifier:?}"),
                candidates: candidates
                    .iter()
                    .map(|r| self.qualified_class(*r))
                    .collect(),
            }),
        }
    }

    fn method(&self, qualifier: &str) -> Result<(ClassRef, &MethodDoc)> {
        let paren = qualifier.find('(').ok_or_else(|| {
            Error::BadArgs(format!(
                "method qualifier {qualifier:?} lacks a parameter list"
            ))
        })?;
        let (owner, sig) = match qualifier[..paren].rfind('.') {
            Some(dot) => (&qualifier[..dot], &qualifier[dot + 1..]),
            None => {
                return Err(Error::BadArgs(format!(
                    "method qualifier {qualifier:?} must be Class.method(...) or package.Class.method(...)"
                )))
            }
        };
        let class = self.class(owner).map_err(|e| match e {
            Error::NotFound { .. } => Error::not_found(
                format!("method {qualifier:?}"),
                suggest(
                    qualifier,
                    self.qualified_method_names().iter().map(String::as_str),
                ),
            ),
            other => other,
        })?;
        let key = signature_key(sig);
        let doc = self.class_doc(class);
        doc.methods
            .iter()
            .find(|m| signature_key(&m.signature) == key)
            .map(|m| (class, m))
            .ok_or_else(|| {
                let names: Vec<String> = doc
                    .methods
                    .iter()
                    .map(|m| format!("{}.{}", doc.name, m.signature))
                    .collect();
                Error::not_found(
                    format!("method {qualifier:?}"),
                    suggest(
                        &format!("{}.{}", doc.name, sig),
                        names.iter().map(String::as_str),
                    ),
                )
            })
    }

    fn qualified_class(&self, r: ClassRef) -> String {
        format!(
            "{}.{}",
            self.bundle.packages[r.package].name,
            self.class_doc(r).name
        )
    }

    fn qualified_class_names(&self) -> Vec<String> {
        self.classes
            .values()
            .flatten()
            .map(|r| self.qualified_class(*r))
            .collect()
    }

    fn qualified_method_names(&self) -> Vec<String> {
        self.bundle
            .packages
            .iter()
            .flat_map(|p| p.classes.iter())
            .flat_map(|c| {
                c.methods
                    .iter()
                    .map(move |m| format!("{}.{}", c.name, m.signature))
            })
            .collect()
    }
}

/// Case-insensitive prefix suggestions. The query is shortened one character
/// at a time until some candidate shares the prefix.
pub(crate) fn suggest<'a>(query: &str, candidates: impl Iterator<Item = &'a str>) -> Vec<String> {
    let candidates: BTreeSet<&str> = candidates.collect();
    let lowered: Vec<(String, &str)> = candidates.iter().map(|c| (c.to_lowercase(), *c)).collect();
    let query: Vec<char> = query.to_lowercase().chars().collect();
    for len in (1..=query.len()).rev() {
        let prefix: String = query[..len].iter().collect();
        let hits: Vec<String> = lowered
            .iter()
            .filter(|(l, _)| l.starts_with(&prefix))
            .map(|(_, c)| c.to_string())
            .take(MAX_SUGGESTIONS)
            .collect();
        if !hits.is_empty() {
            return hits;
        }
    }
    Vec::new()
}

fn render_package(package: &PackageDoc) -> String {
    let mut out = format!("Package: {}\n", package.name);
    if !package.doc.is_empty() {
        let _ = writeln!(out, "{}", package.doc.trim());
    }
    let mut classes: Vec<&str> = package.classes.iter().map(|c| c.name.as_str()).collect();
    classes.sort();
    let _ = writeln!(out, "Classes ({}):", classes.len());
    for c in classes {
        let _ = writeln!(out, "  {c}");
    }
    out
}

fn render_class(package: &str, class: &ClassDoc) -> String {
    let mut out = format!("Class: {package}.{}\n", class.name);
    if !class.doc.is_empty() {
        let _ = writeln!(out, "{}", class.doc.trim());
    }
    let mut methods: Vec<&str> = class.methods.iter().map(|m| m.signature.as_str()).collect();
    methods.sort();
    let _ = writeln!(out, "Methods ({}):", methods.len());
    for m in methods {
        let _ = writeln!(out, "  {m}");
    }
    out
}

fn render_method(package: &str, class: &str, method: &MethodDoc) -> String {
    let mut out = format!("Method: {package}.{class}.{}\n", method.signature);
    if !method.doc.is_empty() {
        let _ = writeln!(out, "{}", method.doc.trim());
    }
    if !method.params.is_empty() {
        out.push_str("Parameters:\n");
        for p in &method.params {
            let _ = writeln!(out, "  {}: {}", p.name, p.doc.trim());
        }
    }
    if !method.returns.is_empty() {
        let _ = writeln!(out, "Returns: {}", method.returns.trim());
    }
    if !method.throws.is_empty() {
        out.push_str("Throws:\n");
        for t in &method.throws {
            let _ = writeln!(out, "  {}: {}", t.exception, t.condition.trim());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> DocsIndex {
        let json = r#"{"packages": [
          {"name": "org.jsoup", "doc": "Entry points.", "classes": [
            {"name": "Jsoup", "doc": "Convenience facade.", "methods": [
              {"signature": "parse(String)", "doc": "Parse HTML into a Document.",
               "params": [{"name": "html", "doc": "HTML to parse"}],
               "returns": "sane HTML",
               "throws": [{"exception": "IllegalArgumentException", "condition": "if html is null"}]},
              {"signature": "parse(String, String)", "doc": "Parse with base URI."}
            ]},
            {"name": "Connection", "methods": []}
          ]},
          {"name": "org.jsoup.nodes", "classes": [{"name": "Document"}, {"name": "Element"}]},
          {"name": "org.jsoup.parser", "classes": [{"name": "Parser"}, {"name": "Document"}], "extra": 1}
        ]}"#;
        DocsIndex::new(DocsBundle::from_json(json).unwrap())
    }

    #[test]
    fn method_doc_contains_signature_and_throws() {
        let idx = fixture();
        let text = idx
            .query_doc(DocKind::Method, "Jsoup.parse(String)")
            .unwrap();
        assert!(text.contains("parse(String)"));
        assert!(text.contains("Throws:\n  IllegalArgumentException: if html is null"));
        let same = idx
            .query_doc(DocKind::Method, "org.jsoup.Jsoup.parse( String )")
            .unwrap();
        assert_eq!(text, same);
    }

    #[test]
    fn unknown_class_suggests_at_most_five() {
        let idx = fixture();
        match idx.query_doc(DocKind::Class, "Jsop").unwrap_err() {
            Error::NotFound { suggestions, .. } => {
                assert!(!suggestions.is_empty() && suggestions.len() <= 5);
                assert!(
                    suggestions.iter().any(|s| s.ends_with("Jsoup")),
                    "{suggestions:?}"
                );
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn ambiguous_class_lists_candidates() {
        let idx = fixture();
        match idx.query_doc(DocKind::Class, "Document").unwrap_err() {
            Error::Ambiguous { candidates, .. } => assert_eq!(
                candidates,
                vec!["org.jsoup.nodes.Document", "org.jsoup.parser.Document"]
            ),
            e => panic!("{e}"),
        }
        assert!(idx
            .query_doc(DocKind::Class, "org.jsoup.nodes.Document")
            .is_ok());
    }

    #[test]
    fn listings_are_sorted() {
        let idx = fixture();
        assert_eq!(
            idx.list_entities(EntityKind::Packages, None).unwrap(),
            vec!["org.jsoup", "org.jsoup.nodes", "org.jsoup.parser"]
        );
        assert_eq!(
            idx.list_entities(EntityKind::Methods, Some("Jsoup"))
                .unwrap(),
            vec!["parse(String)", "parse(String, String)"]
        );
        assert_eq!(
            idx.list_entities(EntityKind::Classes, Some("nope"))
                .unwrap_err()
                .code(),
            "NOT_FOUND"
        );
        assert_eq!(
            idx.list_entities(EntityKind::Classes, None)
                .unwrap_err()
                .code(),
            "BAD_ARGS"
        );
    }

    #[test]
    fn package_doc_lists_classes() {
        let idx = fixture();
        let text = idx.query_doc(DocKind::Package, "org.jsoup").unwrap();
        assert!(text.contains("Connection") && text.contains("Jsoup"));
    }

    #[test]
    fn empty_bundle_answers_not_found() {
        let idx = DocsIndex::new(DocsBundle::from_json(r#"{"packages": []}"#).unwrap());
        assert_eq!(idx.package_count(), 0);
        assert_eq!(
            idx.query_doc(DocKind::Package, "x").unwrap_err().code(),
            "NOT_FOUND"
        );
        assert_eq!(
            idx.query_doc(DocKind::Class, "X").unwrap_err().code(),
            "NOT_FOUND"
        );
        assert_eq!(
            idx.query_doc(DocKind::Method, "X.y()").unwrap_err().code(),
            "NOT_FOUND"
        );
    }

    #[test]
    fn duplicate_class_is_a_parse_error_naming_the_path() {
        let json = r#"{"packages": [{"name": "p", "classes": [{"name": "A"}, {"name": "A"}]}]}"#;
        match DocsBundle::from_json(json).unwrap_err() {
            Error::Parse { location, .. } => assert!(location.contains("packages[0].classes[1]")),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn schema_violation_names_json_path() {
        let json = r#"{"packages": [{"name": "p", "classes": [{"name": 3}]}]}"#;
        match DocsBundle::from_json(json).unwrap_err() {
            Error::Parse { location, .. } => assert!(
                location.contains("packages[0].classes[0].name"),
                "{location}"
            ),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn empty_exception_name_rejected() {
        let json = r#"{"packages": [{"name": "p", "classes": [{"name": "A", "methods": [
            {"signature": "f()", "throws": [{"exception": " "}]}]}]}]}"#;
        assert_eq!(DocsBundle::from_json(json).unwrap_err().code(), "PARSE");
    }
}
