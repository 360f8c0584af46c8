//! Recipe datastore, closed ingredient vocabulary and broader-category table.
//!
//! All three are loaded once and are read-only afterwards, so they can be
//! shared freely between worker threads.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on the Euclidean norm of stored embeddings.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

const DEFAULT_QUANTITY_TOKENS: &str = include_str!("../data/quantity_tokens.txt");

/// Shipped ingredient vocabulary (tab-separated, one class per line).
pub const BUILTIN_VOCABULARY: &str = include_str!("../data/vocabulary.tsv");
/// Shipped broader-category table.
pub const BUILTIN_CATEGORIES: &str = include_str!("../data/broader_categories.txt");

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("invalid recipe `{id}`: {reason}")]
    InvalidRecipe { id: String, reason: String },
    #[error("duplicate recipe id `{0}`")]
    DuplicateId(String),
    #[error("recipe `{id}` has an embedding of dimension {found}, expected {expected}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("alias `{alias}` maps to both `{first}` and `{second}`")]
    AliasCollision {
        alias: String,
        first: String,
        second: String,
    },
    #[error("line {line}: category `{name}` lists no ingredients")]
    EmptyCategory { line: usize, name: String },
    #[error("unknown recipe id `{0}`")]
    UnknownRecipe(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One datastore record: a titled recipe with its ingredient list and steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    pub id: String,
    pub title: String,
    pub ingredients: Vec<String>,
    pub instructions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
}

impl Recipe {
    /// Checks the per-record invariants that do not depend on the rest of
    /// the datastore.
    pub fn validate(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("empty id".into());
        }
        if self.ingredients.is_empty() {
            return Err("no ingredients".into());
        }
        if self.instructions.is_empty() {
            return Err("no instructions".into());
        }
        if let Some(emb) = &self.embedding {
            if emb.is_empty() {
                return Err("embedding has dimension 0".into());
            }
            if emb.iter().any(|x| !x.is_finite()) {
                return Err("embedding contains a non-finite value".into());
            }
            let norm = emb.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
                return Err(format!("embedding norm {norm} is not 1"));
            }
        }
        Ok(())
    }

    /// Title, ingredients and instructions joined into one text, used by the
    /// lexical retriever.
    pub fn full_text(&self) -> String {
        let mut parts = Vec::with_capacity(1 + self.ingredients.len() + self.instructions.len());
        parts.push(self.title.as_str());
        parts.extend(self.ingredients.iter().map(String::as_str));
        parts.extend(self.instructions.iter().map(String::as_str));
        parts.join(" ")
    }
}

/// Id-indexed recipe collection.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Datastore {
    recipes: BTreeMap<String, Recipe>,
    embedding_dim: Option<usize>,
}

impl Datastore {
    pub fn from_recipes<I>(recipes: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = Recipe>,
    {
        let mut store = Datastore::default();
        for recipe in recipes {
            recipe
                .validate()
                .map_err(|reason| CorpusError::InvalidRecipe {
                    id: recipe.id.clone(),
                    reason,
                })?;
            store.insert(recipe)?;
        }
        Ok(store)
    }

    fn insert(&mut self, recipe: Recipe) -> Result<(), CorpusError> {
        if self.recipes.contains_key(&recipe.id) {
            return Err(CorpusError::DuplicateId(recipe.id));
        }
        if let Some(emb) = &recipe.embedding {
            match self.embedding_dim {
                Some(expected) if expected != emb.len() => {
                    return Err(CorpusError::DimensionMismatch {
                        id: recipe.id,
                        expected,
                        found: emb.len(),
                    })
                }
                Some(_) => {}
                None => self.embedding_dim = Some(emb.len()),
            }
        }
        self.recipes.insert(recipe.id.clone(), recipe);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.recipes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recipes.is_empty()
    }

    pub fn embedding_dim(&self) -> Option<usize> {
        self.embedding_dim
    }

    pub fn get(&self, id: &str) -> Option<&Recipe> {
        self.recipes.get(id)
    }

    pub fn require(&self, id: &str) -> Result<&Recipe, CorpusError> {
        self.get(id)
            .ok_or_else(|| CorpusError::UnknownRecipe(id.to_string()))
    }

    /// Recipes in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = &Recipe> {
        self.recipes.values()
    }

    /// Writes the store in the line-delimited corpus format.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for recipe in self.iter() {
            serde_json::to_writer(&mut out, recipe)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        let path = path.as_ref();
        let file = File::create(path).map_err(io_err(path))?;
        let mut out = io::BufWriter::new(file);
        self.write_jsonl(&mut out).map_err(io_err(path))?;
        out.flush().map_err(io_err(path))
    }
}

/// Result of reading a corpus file.
#[derive(Debug)]
pub struct LoadedCorpus {
    pub datastore: Datastore,
    /// 1-based line numbers of records skipped in lenient mode.
    pub skipped_lines: Vec<usize>,
}

impl LoadedCorpus {
    pub fn skipped(&self) -> usize {
        self.skipped_lines.len()
    }
}

/// Reads a line-delimited JSON corpus.
///
/// In strict mode the first invalid record aborts the load; otherwise it is
/// skipped and its line number recorded. Duplicate ids and embedding
/// dimension mismatches are rejected in both modes.
pub fn load_corpus(path: impl AsRef<Path>, strict: bool) -> Result<LoadedCorpus, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    read_corpus(BufReader::new(file), strict).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

pub fn read_corpus<R: BufRead>(reader: R, strict: bool) -> Result<LoadedCorpus, CorpusError> {
    let mut datastore = Datastore::default();
    let mut skipped_lines = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: PathBuf::new(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<Recipe>(&line)
            .map_err(|e| e.to_string())
            .and_then(|r| r.validate().map(|_| r));
        match parsed {
            Ok(recipe) => datastore.insert(recipe)?,
            Err(reason) if strict => {
                return Err(CorpusError::Malformed {
                    line: lineno,
                    reason,
                })
            }
            Err(_) => skipped_lines.push(lineno),
        }
    }
    Ok(LoadedCorpus {
        datastore,
        skipped_lines,
    })
}

/// Dense ingredient class index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IngredientId(pub usize);

/// Normalization applied to ingredient mentions before alias lookup.
///
/// Lowercases, drops leading quantity tokens (numbers, fractions, unit
/// words), joins the remaining whitespace-separated tokens with `_` and
/// strips trailing punctuation. The last token is never dropped, so a bare
/// unit word such as "cup" normalizes to itself.
#[derive(Debug, Clone)]
pub struct Normalizer {
    quantity_words: HashSet<String>,
}

impl Default for Normalizer {
    fn default() -> Self {
        Self::from_stoplist(DEFAULT_QUANTITY_TOKENS)
    }
}

const FRACTION_GLYPHS: &str = "½⅓⅔¼¾⅛⅜⅝⅞⅕⅖⅗⅘⅙⅚";

impl Normalizer {
    /// Builds a normalizer from a stoplist text: one token per line, `#`
    /// comments and blank lines ignored.
    pub fn from_stoplist(text: &str) -> Self {
        let quantity_words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Self { quantity_words }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Ok(Self::from_stoplist(&text))
    }

    pub fn is_quantity_token(&self, token: &str) -> bool {
        if self.quantity_words.contains(token) {
            return true;
        }
        let mut has_amount = false;
        for c in token.chars() {
            if c.is_ascii_digit() || FRACTION_GLYPHS.contains(c) {
                has_amount = true;
            } else if !matches!(c, '.' | '/' | '-') {
                return false;
            }
        }
        has_amount
    }

    pub fn normalize(&self, raw: &str) -> String {
        let lowered = raw.trim().to_lowercase();
        let mut tokens: Vec<&str> = lowered.split_whitespace().collect();
        let mut start = 0;
        while start + 1 < tokens.len() && self.is_quantity_token(tokens[start]) {
            start += 1;
        }
        tokens.drain(..start);
        let joined = tokens.join("_");
        joined
            .trim_end_matches(|c: char| c.is_ascii_punctuation())
            .to_string()
    }
}

/// Closed ingredient label space with surface-form aliases.
#[derive(Debug, Clone)]
pub struct IngredientVocabulary {
    names: Vec<String>,
    aliases: HashMap<String, IngredientId>,
    max_alias_tokens: usize,
    normalizer: Normalizer,
}

impl IngredientVocabulary {
    /// Parses the tab-separated vocabulary format: canonical name followed
    /// by zero or more aliases per line. Ids are assigned in file order.
    pub fn parse(text: &str, normalizer: Normalizer) -> Result<Self, CorpusError> {
        let mut vocab = Self {
            names: Vec::new(),
            aliases: HashMap::new(),
            max_alias_tokens: 0,
            normalizer,
        };
        for (idx, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t').map(str::trim).filter(|f| !f.is_empty());
            let name = fields.next().ok_or_else(|| CorpusError::Malformed {
                line: idx + 1,
                reason: "missing canonical name".into(),
            })?;
            let id = IngredientId(vocab.names.len());
            vocab.names.push(name.to_string());
            for surface in std::iter::once(name).chain(fields) {
                vocab.add_alias(surface, id, idx + 1)?;
            }
        }
        Ok(vocab)
    }

    fn add_alias(&mut self, surface: &str, id: IngredientId, line: usize) -> Result<(), CorpusError> {
        let key = self.normalizer.normalize(surface);
        if key.is_empty() {
            return Err(CorpusError::Malformed {
                line,
                reason: format!("alias `{surface}` normalizes to an empty string"),
            });
        }
        match self.aliases.get(&key) {
            Some(&existing) if existing != id => Err(CorpusError::AliasCollision {
                alias: key,
                first: self.names[existing.0].clone(),
                second: self.names[id.0].clone(),
            }),
            Some(_) => Ok(()),
            None => {
                self.max_alias_tokens = self.max_alias_tokens.max(key.split('_').count());
                self.aliases.insert(key, id);
                Ok(())
            }
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: IngredientId) -> Option<&str> {
        self.names.get(id.0).map(String::as_str)
    }

    pub fn ids(&self) -> impl Iterator<Item = IngredientId> {
        (0..self.names.len()).map(IngredientId)
    }

    /// Looks up an already-normalized surface key.
    pub fn lookup_key(&self, key: &str) -> Option<IngredientId> {
        self.aliases.get(key).copied()
    }

    pub fn aliases(&self) -> impl Iterator<Item = (&str, IngredientId)> {
        self.aliases.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// Largest number of `_`-separated tokens in any alias key.
    pub fn max_alias_tokens(&self) -> usize {
        self.max_alias_tokens
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    pub fn canonicalize(&self, raw: &str) -> Option<IngredientId> {
        self.lookup_key(&self.normalizer.normalize(raw))
    }
}

pub fn load_vocabulary(path: impl AsRef<Path>) -> Result<IngredientVocabulary, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    IngredientVocabulary::parse(&text, Normalizer::default())
}

/// Maps a raw ingredient mention to its class id, if any alias matches.
pub fn canonicalize_ingredient(raw: &str, vocab: &IngredientVocabulary) -> Option<IngredientId> {
    vocab.canonicalize(raw)
}

static NO_CATEGORIES: BTreeSet<String> = BTreeSet::new();

/// Coarse ingredient groupings. An ingredient may sit in several groups.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BroaderCategoryTable {
    categories: BTreeMap<String, BTreeSet<String>>,
    membership: BTreeMap<String, BTreeSet<String>>,
}

impl BroaderCategoryTable {
    /// Parses `Category name: ingredient, ingredient, ...` lines. Repeated
    /// category names are merged.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut table = Self::default();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, items) = line.split_once(':').ok_or_else(|| CorpusError::Malformed {
                line: idx + 1,
                reason: "expected `category: ingredients`".into(),
            })?;
            let name = name.trim();
            if name.is_empty() {
                return Err(CorpusError::Malformed {
                    line: idx + 1,
                    reason: "empty category name".into(),
                });
            }
            let members: Vec<String> = items
                .split(',')
                .map(|s| s.trim().to_lowercase())
                .filter(|s| !s.is_empty())
                .collect();
            if members.is_empty() {
                return Err(CorpusError::EmptyCategory {
                    line: idx + 1,
                    name: name.to_string(),
                });
            }
            for member in members {
                table
                    .membership
                    .entry(member.clone())
                    .or_default()
                    .insert(name.to_string());
                table
                    .categories
                    .entry(name.to_string())
                    .or_default()
                    .insert(member);
            }
        }
        Ok(table)
    }

    /// Number of distinct category names.
    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn categories(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.categories
    }

    pub fn members(&self, category: &str) -> Option<&BTreeSet<String>> {
        self.categories.get(category)
    }

    /// Categories containing `ingredient`; empty when it is not listed.
    pub fn membership(&self, ingredient: &str) -> &BTreeSet<String> {
        self.membership.get(ingredient).unwrap_or(&NO_CATEGORIES)
    }

    pub fn ingredients(&self) -> impl Iterator<Item = &str> {
        self.membership.keys().map(String::as_str)
    }
}

pub fn load_broader_categories(path: impl AsRef<Path>) -> Result<BroaderCategoryTable, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    BroaderCategoryTable::parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recipe(id: &str) -> Recipe {
        Recipe {
            id: id.into(),
            title: format!("dish {id}"),
            ingredients: vec!["flour".into(), "milk".into()],
            instructions: vec!["Mix.".into(), "Bake.".into()],
            embedding: None,
        }
    }

    fn jsonl(recipes: &[Recipe]) -> String {
        recipes
            .iter()
            .map(|r| serde_json::to_string(r).unwrap() + "\n")
            .collect()
    }

    #[test]
    fn loads_distinct_records() {
        let text = jsonl(&[recipe("a"), recipe("b"), recipe("c")]);
        let loaded = read_corpus(text.as_bytes(), true).unwrap();
        assert_eq!(loaded.datastore.len(), 3);
        assert_eq!(loaded.skipped(), 0);
        assert!(loaded.datastore.embedding_dim().is_none());
    }

    #[test]
    fn duplicate_id_is_an_error_in_both_modes() {
        let text = jsonl(&[recipe("a"), recipe("b"), recipe("a")]);
        for strict in [true, false] {
            match read_corpus(text.as_bytes(), strict) {
                Err(CorpusError::DuplicateId(id)) => assert_eq!(id, "a"),
                other => panic!("expected duplicate id error, got {other:?}"),
            }
        }
    }

    #[test]
    fn lenient_mode_skips_and_counts() {
        let mut empty_ingredients = recipe("x");
        empty_ingredients.ingredients.clear();
        let lines = [
            serde_json::to_string(&recipe("a")).unwrap(),
            "{not json".to_string(),
            serde_json::to_string(&recipe("b")).unwrap(),
            serde_json::to_string(&empty_ingredients).unwrap(),
            serde_json::to_string(&recipe("c")).unwrap(),
        ];
        let text = lines.join("\n");
        let loaded = read_corpus(text.as_bytes(), false).unwrap();
        assert_eq!(loaded.datastore.len(), 3);
        assert_eq!(loaded.skipped_lines, vec![2, 4]);

        match read_corpus(text.as_bytes(), true) {
            Err(CorpusError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed error, got {other:?}"),
        }
    }

    #[test]
    fn embedding_dimension_mismatch() {
        let mut a = recipe("a");
        a.embedding = Some(vec![1.0, 0.0]);
        let mut b = recipe("b");
        b.embedding = Some(vec![0.0, 0.0, 1.0]);
        let text = jsonl(&[a, b]);
        assert!(matches!(
            read_corpus(text.as_bytes(), false),
            Err(CorpusError::DimensionMismatch { expected: 2, found: 3, .. })
        ));
    }

    #[test]
    fn non_unit_embedding_is_malformed() {
        let mut a = recipe("a");
        a.embedding = Some(vec![2.0, 0.0]);
        assert!(a.validate().is_err());
        a.embedding = Some(vec![0.6, 0.8]);
        assert!(a.validate().is_ok());
    }

    #[test]
    fn datastore_round_trip() {
        let mut a = recipe("a");
        a.embedding = Some(vec![0.6, 0.8]);
        let mut b = recipe("b");
        b.embedding = Some(vec![1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()]);
        let store = Datastore::from_recipes(vec![b, a]).unwrap();
        let mut buf = Vec::new();
        store.write_jsonl(&mut buf).unwrap();
        let reloaded = read_corpus(buf.as_slice(), true).unwrap().datastore;
        assert_eq!(store, reloaded);
    }

    fn vocab(text: &str) -> IngredientVocabulary {
        IngredientVocabulary::parse(text, Normalizer::default()).unwrap()
    }

    #[test]
    fn names_self_alias() {
        let v = vocab("flour\nmilk\n");
        assert_eq!(v.len(), 2);
        assert_eq!(v.aliases().count(), 2);
        assert_eq!(v.canonicalize("flour"), Some(IngredientId(0)));
        assert_eq!(v.canonicalize("milk"), Some(IngredientId(1)));
    }

    #[test]
    fn aliases_resolve_to_entry() {
        let v = vocab("pasta\tspaghetti_noodles\n");
        let pasta = v.canonicalize("pasta").unwrap();
        assert_eq!(v.canonicalize("spaghetti_noodles"), Some(pasta));
        assert_eq!(v.canonicalize("Spaghetti  Noodles"), Some(pasta));
    }

    #[test]
    fn alias_collision() {
        let err = IngredientVocabulary::parse("olive_oil\toil\nvegetable_oil\toil\n", Normalizer::default())
            .unwrap_err();
        assert!(matches!(err, CorpusError::AliasCollision { ref alias, .. } if alias == "oil"));
    }

    #[test]
    fn canonicalize_strips_quantities() {
        let v = vocab("flour\nsoy_sauce\nsalt\n");
        assert_eq!(v.canonicalize("2 cups Flour"), Some(IngredientId(0)));
        assert_eq!(v.canonicalize("flour"), Some(IngredientId(0)));
        assert_eq!(v.canonicalize("1/2 tsp salt."), Some(IngredientId(2)));
        assert_eq!(v.canonicalize("½ cup soy sauce"), Some(IngredientId(1)));
        assert_eq!(v.canonicalize("a pinch of salt"), Some(IngredientId(2)));
        assert_eq!(v.canonicalize("unicorn dust"), None);
    }

    #[test]
    fn last_token_is_never_stripped() {
        let n = Normalizer::default();
        assert_eq!(n.normalize("cup"), "cup");
        assert_eq!(n.normalize("2 cups"), "cups");
        assert_eq!(n.normalize("  "), "");
    }

    #[test]
    fn canonical_names_are_fixed_points() {
        let v = load_vocabulary(concat!(env!("CARGO_MANIFEST_DIR"), "/data/vocabulary.tsv")).unwrap();
        for id in v.ids() {
            assert_eq!(v.canonicalize(v.name(id).unwrap()), Some(id));
        }
    }

    #[test]
    fn categories_parse_and_invert() {
        let t = BroaderCategoryTable::parse("Pasta: pasta, spaghetti\n").unwrap();
        let expected: BTreeSet<String> = ["Pasta".to_string()].into();
        assert_eq!(t.membership("spaghetti"), &expected);
        assert!(t.membership("rice").is_empty());
    }

    #[test]
    fn ingredient_in_two_categories() {
        let t = BroaderCategoryTable::parse(
            "Meat: beef, bacon\nProcessed and Seasoned Foods: bacon, ham\n",
        )
        .unwrap();
        assert_eq!(t.membership("bacon").len(), 2);
    }

    #[test]
    fn empty_table_and_errors() {
        let t = BroaderCategoryTable::parse("").unwrap();
        assert!(t.is_empty());
        assert!(t.membership("anything").is_empty());
        assert!(matches!(
            BroaderCategoryTable::parse("Pasta:  , \n"),
            Err(CorpusError::EmptyCategory { line: 1, .. })
        ));
        assert!(matches!(
            BroaderCategoryTable::parse("no colon here"),
            Err(CorpusError::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn repeated_category_rows_merge() {
        let t = BroaderCategoryTable::parse("Drinks: tea\nDrinks: coffee\n").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.members("Drinks").unwrap().len(), 2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn membership_is_inverse_of_categories(
                rows in proptest::collection::vec(
                    ("[A-D]", proptest::collection::vec("[a-f]{1,2}", 1..5)),
                    0..8,
                )
            ) {
                let text: String = rows
                    .iter()
                    .map(|(c, items)| format!("{c}: {}\n", items.join(", ")))
                    .collect();
                let t = BroaderCategoryTable::parse(&text).unwrap();
                for (cat, members) in t.categories() {
                    for m in members {
                        prop_assert!(t.membership(m).contains(cat));
                    }
                }
                for ing in t.ingredients() {
                    for cat in t.membership(ing) {
                        prop_assert!(t.members(cat).unwrap().contains(ing));
                    }
                }
            }

            #[test]
            fn normalize_is_idempotent(raw in "[ 0-9a-zA-Z/.,½]{0,24}") {
                let n = Normalizer::default();
                let once = n.normalize(&raw);
                prop_assert_eq!(n.normalize(&once), once.clone());
            }
        }
    }
}
