//! The documentation and source queries an agent uses to learn an API.

use std::path::Path;

use harnessgen::code_index::{CodeIndex, CodeKind, SearchKind};
use harnessgen::docs_index::{DocKind, DocsIndex, EntityKind};

fn main() -> harnessgen::Result<()> {
    let toylib = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/toylib");
    let docs = DocsIndex::load(&toylib.join("docs.json"))?;
    let code = CodeIndex::build(&toylib.join("src"))?;

    println!(
        "packages: {:?}",
        docs.list_entities(EntityKind::Packages, None)?
    );
    println!(
        "classes in toylib.cli: {:?}",
        docs.list_entities(EntityKind::Classes, Some("toylib.cli"))?
    );
    println!(
        "\n{}",
        docs.query_doc(DocKind::Method, "Parser.parse(Options, String[])")?
    );

    // Misspelled lookups fail with suggestions instead of silently guessing.
    if let Err(e) = docs.query_doc(DocKind::Class, "Parsr") {
        println!("\n{} -> {e}", e.code());
    }

    println!(
        "\n{}",
        code.get_code(CodeKind::Method, "Parser.handleConcatenatedOptions(String)")?
    );
    println!(
        "{}",
        code.search(SearchKind::Refs, "hasOption", 10)?.render()
    );
    println!(
        "{}",
        code.search(SearchKind::Text, r"substring\(", 10)?.render()
    );
    Ok(())
}
