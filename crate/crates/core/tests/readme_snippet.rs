//! Keeps the README's library sketch compiling.

use functag_core::corpus::{load_corpus, parse_sentence_line, LoadMode};
use functag_core::grammar::{default_grammar, TagMap};
use functag_core::relations::{run_pipeline, PipelineOptions};
use functag_core::Model;

#[test]
fn readme_sketch_runs() -> Result<(), Box<dyn std::error::Error>> {
    let path = functag_core::testkit::fixtures::path("corpus/training.txt");
    let corpus = load_corpus(path, LoadMode::Strict)?.sentences;
    let model = Model::train(&corpus)?;
    let sentence = parse_sentence_line("NC[မမ/n.person]#VC[သွား/v.common]#SFC[သည်/sf]။")?;
    let out = run_pipeline(
        &model,
        default_grammar(),
        &TagMap::default(),
        &sentence,
        PipelineOptions::default(),
    )?;
    assert!(!out.rendered.is_empty());
    if let Ok(tree) = out.parse {
        assert!(!functag_core::relations::render_tree(&tree).is_empty());
    }
    Ok(())
}
