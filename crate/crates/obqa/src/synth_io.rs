//! Writes a synthetic fixture to disk.
//!
//! ```text
//! <dir>/corpus/doc-0000.txt ...
//! <dir>/questions.jsonl      evaluation questions
//! <dir>/train.jsonl          training split
//! ```

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use obqa_core::synth::SynthFixture;

use crate::qa_eval::to_qa_eval_lines;

pub const CORPUS_DIR: &str = "corpus";
pub const QUESTIONS_FILE: &str = "questions.jsonl";
pub const TRAIN_FILE: &str = "train.jsonl";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixturePaths {
    pub corpus_root: PathBuf,
    pub questions: PathBuf,
    pub train: PathBuf,
}

impl FixturePaths {
    pub fn under(dir: &Path) -> Self {
        FixturePaths {
            corpus_root: dir.join(CORPUS_DIR),
            questions: dir.join(QUESTIONS_FILE),
            train: dir.join(TRAIN_FILE),
        }
    }
}

pub fn write_fixture(dir: &Path, fixture: &SynthFixture) -> io::Result<FixturePaths> {
    let paths = FixturePaths::under(dir);
    fs::create_dir_all(&paths.corpus_root)?;
    for doc in fixture.corpus.iter() {
        fs::write(paths.corpus_root.join(&doc.doc_id), &doc.text)?;
    }
    fs::write(&paths.questions, to_qa_eval_lines(&fixture.questions))?;
    fs::write(&paths.train, to_qa_eval_lines(&fixture.training))?;
    Ok(paths)
}
