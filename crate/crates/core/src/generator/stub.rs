use crate::prompt::{ingredients_answer, instructions_answer, PromptBundle, RetrievedSet};
use crate::rng;

use super::{CandidateRecipe, GenerateError, Generator};

/// Offline generator that copies the spliced context, dropping each
/// ingredient and each step independently with probability `dropout`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StubGenerator {
    pub dropout: f64,
}

impl StubGenerator {
    pub fn new(dropout: f64) -> Result<Self, GenerateError> {
        if !(0.0..=1.0).contains(&dropout) {
            return Err(GenerateError::InvalidConfig(format!("dropout {dropout} outside [0, 1]")));
        }
        Ok(Self { dropout })
    }
}

impl Generator for StubGenerator {
    fn generate(&self, bundle: &PromptBundle, seed: u64) -> Result<CandidateRecipe, GenerateError> {
        generate_stub(bundle, seed, self.dropout)
    }
}

/// Uses the context of the last turn that carries any: its first
/// ingredient set and first instruction set.
pub fn generate_stub(bundle: &PromptBundle, noise_seed: u64, dropout: f64) -> Result<CandidateRecipe, GenerateError> {
    if !(0.0..=1.0).contains(&dropout) {
        return Err(GenerateError::InvalidConfig(format!("dropout {dropout} outside [0, 1]")));
    }
    let rank = bundle.source_rank.ok_or(GenerateError::MissingRank)?;
    let turn = bundle
        .turns
        .iter()
        .rev()
        .find(|t| !t.context.is_empty())
        .ok_or(GenerateError::NoContext)?;
    let ingredients: &[String] = turn
        .context
        .iter()
        .find_map(|c| match c {
            RetrievedSet::Ingredients(items) => Some(items.as_slice()),
            _ => None,
        })
        .unwrap_or(&[]);
    let steps: &[String] = turn
        .context
        .iter()
        .find_map(|c| match c {
            RetrievedSet::Instructions(items) => Some(items.as_slice()),
            _ => None,
        })
        .unwrap_or(&[]);

    let mut stream = rng::stream(noise_seed);
    let mut keep = |items: &[String]| -> Vec<String> {
        items
            .iter()
            .filter(|_| rng::unit_f64(&mut stream) >= dropout)
            .cloned()
            .collect()
    };
    let kept_ingredients = keep(ingredients);
    let kept_steps = keep(steps);
    let raw_text = format!(
        "{}\n{}",
        ingredients_answer(&kept_ingredients).trim_end(),
        instructions_answer(&kept_steps).trim_end()
    );
    Ok(CandidateRecipe::from_text(raw_text, rank))
}
