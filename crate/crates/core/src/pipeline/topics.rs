use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lda::LdaModel;
use crate::vocab::Vocabulary;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicRow {
    pub topic_id: usize,
    pub words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicTable {
    pub rows: Vec<TopicRow>,
}

impl TopicTable {
    /// One `topic<TAB>word word ...` line per topic.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            writeln!(out, "{}\t{}", row.topic_id, row.words.join(" ")).expect("writing to a String");
        }
        out
    }
}

/// Top `m` words of every topic, in topic order.
pub fn emit_topic_table(model: &LdaModel, m: usize, vocab: &Vocabulary) -> Result<TopicTable> {
    let rows = (0..model.num_topics())
        .map(|k| {
            Ok(TopicRow {
                topic_id: k,
                words: model.top_words(vocab.words(), k, m)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TopicTable { rows })
}
