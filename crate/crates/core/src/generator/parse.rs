use crate::prompt::{INGREDIENTS_PREFIX, INSTRUCTIONS_PREFIX, TITLE_PREFIX};

/// Sections recovered from generated text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedRecipe {
    pub title: Option<String>,
    pub ingredients: Vec<String>,
    pub instructions: Vec<String>,
}

/// Splits generated text on the fixed answer phrases. Never fails: missing
/// sections come back empty.
pub fn parse_recipe(text: &str) -> ParsedRecipe {
    let instr_at = text.find(INSTRUCTIONS_PREFIX);

    let title = text.find(TITLE_PREFIX).and_then(|at| {
        let rest = &text[at + TITLE_PREFIX.len()..];
        let line = rest.split('\n').next().unwrap_or("").trim();
        (!line.is_empty()).then(|| line.to_string())
    });

    let ingredients = text
        .find(INGREDIENTS_PREFIX)
        .map(|at| {
            let start = at + INGREDIENTS_PREFIX.len();
            let end = instr_at.filter(|&i| i >= start).unwrap_or(text.len());
            text[start..end]
                .split([',', '\n'])
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect()
        })
        .unwrap_or_default();

    let instructions = instr_at
        .map(|at| split_steps(&text[at + INSTRUCTIONS_PREFIX.len()..]))
        .unwrap_or_default();

    ParsedRecipe { title, ingredients, instructions }
}

/// Numbered steps (`1. a 2. b`) are split at consecutive step numbers that
/// follow whitespace; anything else is split by line.
fn split_steps(section: &str) -> Vec<String> {
    let s = section.trim();
    if !s.starts_with("1. ") && s != "1." {
        return s
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect();
    }
    let mut steps = Vec::new();
    let mut start = 2.min(s.len());
    let mut next = 2usize;
    loop {
        let marker = format!("{next}. ");
        let found = s[start..].match_indices(&marker).map(|(i, _)| start + i).find(|&i| {
            s[..i].chars().next_back().is_some_and(char::is_whitespace)
        });
        match found {
            Some(pos) => {
                steps.push(s[start..pos].trim().to_string());
                start = pos + marker.len() - 1;
                next += 1;
            }
            None => {
                steps.push(s[start..].trim().to_string());
                break;
            }
        }
    }
    steps.retain(|step| !step.is_empty());
    steps
}
