//! Example retrieval, prompt assembly and completion parsing.

mod doc;
mod embed;
mod output;
mod prompt;
mod retrieval;

pub use doc::{ApiDocument, ApiEntry, Param};
pub use embed::{cosine, normalize, EmbedError, Embedder, HashedTrigramEmbedder, HttpEmbedder, HASHED_DIM};
pub use output::{parse_program_output, parse_response_output, OutputParseError};
pub use prompt::{
    build_program_prompt, build_response_prompt, render_block, render_example, render_target, PromptConfig,
    PromptError, PromptSetting,
};
pub use retrieval::{
    extract_examples, keyword_counts, keywords, state_similarity, utterance_text, Example, ExamplePool, Query,
    RetrievalError, Scored, Target,
};
