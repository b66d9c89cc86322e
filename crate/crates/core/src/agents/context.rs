use serde::{Deserialize, Serialize};

use crate::code_index::{CodeIndex, CodeKind};
use crate::docs_index::{DocKind, DocsIndex};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBlock {
    pub label: String,
    pub body: String,
}

/// Labelled text blocks that open an agent's conversation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedContext {
    pub blocks: Vec<ContextBlock>,
    pub notes: Vec<String>,
}

impl SeedContext {
    pub fn push(&mut self, label: impl Into<String>, body: impl Into<String>) -> &mut Self {
        self.blocks.push(ContextBlock {
            label: label.into(),
            body: body.into(),
        });
        self
    }

    pub fn note(&mut self, note: impl Into<String>) -> &mut Self {
        self.notes.push(note.into());
        self
    }

    pub fn block(&self, label: &str) -> Option<&str> {
        self.blocks
            .iter()
            .find(|b| b.label == label)
            .map(|b| b.body.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for b in &self.blocks {
            out.push_str(&format!("## {}\n{}\n\n", b.label, b.body.trim_end()));
        }
        if !self.notes.is_empty() {
            out.push_str("## Notes\n");
            for n in &self.notes {
                out.push_str(&format!("- {n}\n"));
            }
        }
        out.trim_end().to_string()
    }
}

/// Seeds the research agent with the target's signature plus whatever
/// documentation and source the indexes hold for it.
pub fn build_research_context(
    method_id: &str,
    docs: &DocsIndex,
    code: &CodeIndex,
) -> Result<SeedContext> {
    let mut ctx = SeedContext::default();
    ctx.push("Signature", method_id);
    let doc = docs.query_doc(DocKind::Method, method_id);
    let source = code.get_code(CodeKind::Method, method_id);
    if doc.is_err() && source.is_err() {
        return Err(Error::TargetNotFound(method_id.to_string()));
    }
    match doc {
        Ok(text) => {
            ctx.push("Documentation", text);
        }
        Err(e) => {
            ctx.note(format!(
                "no documentation available for the target ({})",
                e.code()
            ));
        }
    }
    match source {
        Ok(text) => {
            ctx.push("Source", text);
        }
        Err(e) => {
            ctx.note(format!("no source available for the target ({})", e.code()));
        }
    }
    Ok(ctx)
}
