//! Conversation documents with retrieved recipe context spliced in front of
//! the question turns, and the stochastic selection of that context.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusError, Datastore, Recipe};
use crate::metrics::{tokenize, Scheme};
use crate::retriever::RetrievalResult;
use crate::rng;

pub const SYSTEM_TEXT: &str = "You are a culinary assistant. Answer questions about the food shown in the image.";
pub const Q_TITLE: &str = "What is the name of this dish?";
pub const Q_INGREDIENTS: &str = "What ingredients are needed to make this dish?";
pub const Q_INSTRUCTIONS: &str = "How is this dish prepared? Give the cooking instructions.";

pub const TITLE_PREFIX: &str = "The food is";
pub const INGREDIENTS_PREFIX: &str = "The ingredients are:";
pub const INSTRUCTIONS_PREFIX: &str = "Here are the instructions:";

pub const DISCLAIMER_OPEN: &str = "Search results for reference is '";
pub const DISCLAIMER_CLOSE: &str = "'. The search results are only for referring, please focus on the image.";
pub const IMAGE_TOKEN: &str = "<Image>";

pub const DEFAULT_K: usize = 50;
pub const DEFAULT_MAX_PROMPT_TOKENS: usize = 4096;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("retrieval pool of {available} is smaller than the {required} ranks required")]
    PoolTooSmall { available: usize, required: usize },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("context holds {found} ingredient sets, the `{variant:?}` variant needs {expected}")]
    VariantMismatch { variant: SetsVariant, expected: usize, found: usize },
    #[error("rank {rank} is outside 1..={available}")]
    RankOutOfRange { rank: usize, available: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SdraMode {
    FixedTop,
    Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetsVariant {
    /// One ingredient set before the ingredient question, one instruction
    /// set before the instruction question.
    One,
    /// Two ingredient sets before the ingredient question; a third
    /// ingredient set plus the instruction set before the instruction
    /// question.
    Two,
}

impl SetsVariant {
    pub fn ingredient_sets(self) -> usize {
        match self {
            SetsVariant::One => 1,
            SetsVariant::Two => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// Instructions come from the same recipe as the last ingredient set.
    Matched,
    /// Instruction rank drawn from its own stream.
    Independent,
}

fn default_k() -> usize {
    DEFAULT_K
}

fn default_max_tokens() -> usize {
    DEFAULT_MAX_PROMPT_TOKENS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdraConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    pub mode: SdraMode,
    pub sets: SetsVariant,
    pub sampling: Sampling,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_tokens")]
    pub max_prompt_tokens: usize,
}

impl Default for SdraConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            mode: SdraMode::Stochastic,
            sets: SetsVariant::Two,
            sampling: Sampling::Matched,
            seed: 0,
            max_prompt_tokens: DEFAULT_MAX_PROMPT_TOKENS,
        }
    }
}

impl SdraConfig {
    pub fn validate(&self) -> Result<(), PromptError> {
        let min_k = self.sets.ingredient_sets();
        if self.k < min_k {
            return Err(PromptError::Config(format!(
                "k = {} but the {:?} variant needs k >= {min_k}",
                self.k, self.sets
            )));
        }
        if self.max_prompt_tokens == 0 {
            return Err(PromptError::Config("max_prompt_tokens must be positive".into()));
        }
        Ok(())
    }
}

/// Retrieved material chosen for one training document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedContext {
    pub sets: SetsVariant,
    pub ingredient_sets: Vec<Vec<String>>,
    pub instruction_set: Vec<String>,
    /// 1-based retrieval rank of each ingredient set.
    pub ingredient_ranks: Vec<usize>,
    pub instruction_rank: usize,
}

/// Picks ingredient and instruction sets from a retrieval result.
///
/// `FixedTop` takes ranks 1..=3 (or rank 1) for ingredients and rank 1 for
/// instructions, regardless of `sampling` and `seed`. `Stochastic` draws
/// distinct ranks uniformly from the first `min(k, hits)` ranks using a
/// stream derived from `(cfg.seed, sample_id)`.
pub fn sample_sdra(
    result: &RetrievalResult,
    store: &Datastore,
    cfg: &SdraConfig,
    sample_id: &str,
) -> Result<SelectedContext, PromptError> {
    cfg.validate()?;
    let required = cfg.sets.ingredient_sets();
    let pool = cfg.k.min(result.len());
    if pool < required {
        return Err(PromptError::PoolTooSmall { available: pool, required });
    }
    let (ingredient_ranks, instruction_rank) = match cfg.mode {
        SdraMode::FixedTop => ((1..=required).collect::<Vec<_>>(), 1),
        SdraMode::Stochastic => {
            let mut ing_rng = rng::stream(rng::derive_seed(cfg.seed, &[sample_id, "ingredients"]));
            let ranks: Vec<usize> = rng::sample_distinct(&mut ing_rng, pool, required)
                .into_iter()
                .map(|i| i + 1)
                .collect();
            let instr = match cfg.sampling {
                Sampling::Matched => ranks[required - 1],
                Sampling::Independent => {
                    let mut instr_rng = rng::stream(rng::derive_seed(cfg.seed, &[sample_id, "instructions"]));
                    rng::bounded(&mut instr_rng, pool) + 1
                }
            };
            (ranks, instr)
        }
    };
    let recipe_at = |rank: usize| -> Result<&Recipe, PromptError> {
        let hit = result.rank(rank).expect("rank within pool");
        Ok(store.require(&hit.id)?)
    };
    let ingredient_sets = ingredient_ranks
        .iter()
        .map(|&r| recipe_at(r).map(|rec| rec.ingredients.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let instruction_set = recipe_at(instruction_rank)?.instructions.clone();
    Ok(SelectedContext {
        sets: cfg.sets,
        ingredient_sets,
        instruction_set,
        ingredient_ranks,
        instruction_rank,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

/// One block of retrieved material inside a disclaimer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "items")]
pub enum RetrievedSet {
    Ingredients(Vec<String>),
    Instructions(Vec<String>),
}

impl RetrievedSet {
    fn render(&self) -> String {
        match self {
            RetrievedSet::Ingredients(items) => format!("[Ingredients: {}]", join_ingredients(items)),
            RetrievedSet::Instructions(steps) => format!("[Instructions: {}]", number_steps(steps)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    /// Retrieved sets spliced before `text`, in splice order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub context: Vec<RetrievedSet>,
    pub text: String,
}

impl Turn {
    fn plain(role: Role, text: impl Into<String>) -> Self {
        Self { role, context: Vec::new(), text: text.into() }
    }

    /// Message text with the disclaimer-wrapped context, if any.
    pub fn content(&self) -> String {
        if self.context.is_empty() {
            return self.text.clone();
        }
        let payload: Vec<String> = self.context.iter().map(RetrievedSet::render).collect();
        format!("{}\n{}", disclaimer(&payload.join(" ")), self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_text: String,
    pub turns: Vec<Turn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
    /// Retrieval rank whose context this inference prompt carries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_rank: Option<usize>,
}

impl PromptBundle {
    pub fn context_sets(&self) -> impl Iterator<Item = &RetrievedSet> {
        self.turns.iter().flat_map(|t| t.context.iter())
    }

    pub fn has_context(&self) -> bool {
        self.context_sets().next().is_some()
    }

    /// Drops whole retrieved sets, most recently spliced first, until the
    /// rendered prompt fits `max_tokens` or no context is left.
    pub fn fit_to_budget(&mut self, max_tokens: usize) {
        while estimate_tokens(&render_prompt(self)) > max_tokens {
            match self.turns.iter_mut().rev().find(|t| !t.context.is_empty()) {
                Some(turn) => {
                    turn.context.pop();
                }
                None => break,
            }
        }
    }
}

pub fn disclaimer(payload: &str) -> String {
    format!("{DISCLAIMER_OPEN}{payload}{DISCLAIMER_CLOSE}")
}

pub fn join_ingredients<S: AsRef<str>>(items: &[S]) -> String {
    items.iter().map(|s| s.as_ref().trim()).collect::<Vec<_>>().join(", ")
}

/// `1. first 2. second ...`
pub fn number_steps<S: AsRef<str>>(steps: &[S]) -> String {
    steps
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}. {}", i + 1, s.as_ref().trim()))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn title_answer(title: &str) -> String {
    format!("{TITLE_PREFIX} {}", title.trim())
}

pub fn ingredients_answer<S: AsRef<str>>(items: &[S]) -> String {
    format!("{INGREDIENTS_PREFIX} {}", join_ingredients(items))
}

pub fn instructions_answer<S: AsRef<str>>(steps: &[S]) -> String {
    format!("{INSTRUCTIONS_PREFIX} {}", number_steps(steps))
}

/// Whitespace-and-punctuation token count used for the length budget.
pub fn estimate_tokens(text: &str) -> usize {
    tokenize(text, Scheme::Simple).len()
}

/// Full three-question training document for a ground-truth recipe.
pub fn assemble_training_example(
    gt: &Recipe,
    ctx: &SelectedContext,
    max_tokens: usize,
) -> Result<PromptBundle, PromptError> {
    let expected = ctx.sets.ingredient_sets();
    if ctx.ingredient_sets.len() != expected || ctx.instruction_set.is_empty() {
        return Err(PromptError::VariantMismatch {
            variant: ctx.sets,
            expected,
            found: ctx.ingredient_sets.len(),
        });
    }
    let ing = |i: usize| RetrievedSet::Ingredients(ctx.ingredient_sets[i].clone());
    let instr = RetrievedSet::Instructions(ctx.instruction_set.clone());
    let (before_ingredients, before_instructions) = match ctx.sets {
        SetsVariant::One => (vec![ing(0)], vec![instr]),
        SetsVariant::Two => (vec![ing(0), ing(1)], vec![ing(2), instr]),
    };
    let mut bundle = PromptBundle {
        system_text: SYSTEM_TEXT.to_string(),
        turns: vec![
            Turn::plain(Role::User, Q_TITLE),
            Turn::plain(Role::Assistant, title_answer(&gt.title)),
            Turn { role: Role::User, context: before_ingredients, text: Q_INGREDIENTS.into() },
            Turn::plain(Role::Assistant, ingredients_answer(&gt.ingredients)),
            Turn { role: Role::User, context: before_instructions, text: Q_INSTRUCTIONS.into() },
            Turn::plain(Role::Assistant, instructions_answer(&gt.instructions)),
        ],
        image_ref: Some(gt.id.clone()),
        source_rank: None,
    };
    bundle.fit_to_budget(max_tokens);
    Ok(bundle)
}

/// Instruction-only prompt carrying the `rank`-th hit's ingredients and
/// steps.
pub fn assemble_inference_prompt(
    query_id: &str,
    result: &RetrievalResult,
    store: &Datastore,
    rank: usize,
    max_tokens: usize,
) -> Result<PromptBundle, PromptError> {
    let hit = result
        .rank(rank)
        .ok_or(PromptError::RankOutOfRange { rank, available: result.len() })?;
    let recipe = store.require(&hit.id)?;
    let mut bundle = PromptBundle {
        system_text: SYSTEM_TEXT.to_string(),
        turns: vec![Turn {
            role: Role::User,
            context: vec![
                RetrievedSet::Ingredients(recipe.ingredients.clone()),
                RetrievedSet::Instructions(recipe.instructions.clone()),
            ],
            text: Q_INSTRUCTIONS.into(),
        }],
        image_ref: Some(query_id.to_string()),
        source_rank: Some(rank),
    };
    bundle.fit_to_budget(max_tokens);
    Ok(bundle)
}

/// Byte-stable text form of a bundle.
pub fn render_prompt(bundle: &PromptBundle) -> String {
    let mut out = format!("SYSTEM: {}\n", bundle.system_text);
    if bundle.image_ref.is_some() {
        out.push_str(IMAGE_TOKEN);
        out.push('\n');
    }
    out.push_str("Conversations:\n");
    for turn in &bundle.turns {
        let tag = match turn.role {
            Role::User => "USER",
            Role::Assistant => "ASSISTANT",
        };
        out.push_str(tag);
        out.push_str(": ");
        out.push_str(&turn.content());
        out.push('\n');
    }
    out
}
