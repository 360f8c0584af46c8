//! Candidate generation: a remote chat-completions client and an offline
//! stub behind one [`Generator`] trait, plus parsing of completions.

mod mock;
mod parse;
mod remote;
mod stub;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompt::PromptBundle;

pub use mock::{load_transcript, MockServer, MockServerConfig, TranscriptEntry};
pub use parse::{parse_recipe, ParsedRecipe};
pub use remote::{
    build_chat_request, generate_remote, request_hash, ChatMessage, ChatRequest, GeneratorEndpointConfig,
    RemoteGenerator, API_KEY_ENV,
};
pub use stub::{generate_stub, StubGenerator};

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("request failed after {attempts} attempts: {last}")]
    Transport { attempts: u32, last: String },
    #[error("endpoint returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("completion was empty")]
    EmptyCompletion,
    #[error("could not decode response: {0}")]
    Decode(String),
    #[error("prompt carries no retrieved context")]
    NoContext,
    #[error("prompt has no source rank")]
    MissingRank,
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
}

/// One generated recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecipe {
    pub raw_text: String,
    pub title: Option<String>,
    pub ingredients: Vec<String>,
    pub instructions: Vec<String>,
    /// Retrieval rank whose context produced this candidate.
    pub source_rank: usize,
}

impl CandidateRecipe {
    pub fn from_text(raw_text: String, source_rank: usize) -> Self {
        let ParsedRecipe { title, ingredients, instructions } = parse_recipe(&raw_text);
        Self { raw_text, title, ingredients, instructions, source_rank }
    }
}

/// Anything that turns a prompt into a candidate recipe.
///
/// `seed` is a per-request value derived by the caller; generators that
/// have their own seeding may ignore it.
pub trait Generator: Send + Sync {
    fn generate(&self, bundle: &PromptBundle, seed: u64) -> Result<CandidateRecipe, GenerateError>;
}
