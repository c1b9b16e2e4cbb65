//! Interaction model loading and deterministic utterance matching.
//!
//! An interaction model is a JSON document listing intents, each with sample
//! utterances containing `{slotName}` placeholders, plus a `slotTypes`
//! section mapping each slot type either to a list of phrases or to the
//! marker `"number"`. Intents may declare `slots` (`name` → `type`); an
//! undeclared slot uses the slot type of the same name.
//!
//! Matching is exact on literal tokens after [`normalize`]. Among all full
//! matches the winner has the most literal tokens, then the fewest slots,
//! then the smallest intent name, then the earliest template.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Longest token run tried for a numeric slot ("nine hundred and ninety nine").
const MAX_NUMBER_TOKENS: usize = 5;
/// Upper bound on instantiations enumerated when checking adjacent slots.
const MAX_ADJACENT_PRODUCT: usize = 100_000;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("interaction model line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate intent {0:?}")]
    DuplicateIntent(String),
    #[error("intent {0:?} has no samples")]
    NoSamples(String),
    #[error("template {template:?}: slot {slot:?} has unknown slot type {slot_type:?}")]
    UnknownSlotType {
        template: String,
        slot: String,
        slot_type: String,
    },
    #[error("template {template:?}: slots {first:?} and {second:?} are adjacent and cannot be told apart")]
    AdjacentSlots {
        template: String,
        first: String,
        second: String,
    },
    #[error("template {template:?}: slot {slot:?} appears twice")]
    RepeatedSlot { template: String, slot: String },
    #[error("template {0:?} has unbalanced braces or an empty slot name")]
    Malformed(String),
    #[error("template {0:?} contains no words")]
    EmptyTemplate(String),
    #[error("slot type {slot_type:?}: unknown marker {marker:?} (expected \"number\")")]
    BadMarker { slot_type: String, marker: String },
    #[error("slot type {0:?} has an empty phrase")]
    EmptyPhrase(String),
    #[error("slot type {0:?} is defined twice with different values")]
    ConflictingSlotType(String),
}

/// Lowercases, deletes apostrophes, turns all other punctuation into
/// spaces and splits on whitespace.
pub fn normalize(text: &str) -> Vec<String> {
    let mut cleaned = String::with_capacity(text.len());
    for c in text.chars().flat_map(char::to_lowercase) {
        if matches!(c, '\'' | '\u{2019}' | '\u{2018}' | '`') {
            continue;
        }
        if c.is_alphanumeric() {
            cleaned.push(c);
        } else {
            cleaned.push(' ');
        }
    }
    cleaned.split_whitespace().map(str::to_owned).collect()
}

fn unit_value(word: &str) -> Option<u32> {
    Some(match word {
        "one" => 1,
        "two" => 2,
        "three" => 3,
        "four" => 4,
        "five" => 5,
        "six" => 6,
        "seven" => 7,
        "eight" => 8,
        "nine" => 9,
        _ => return None,
    })
}

fn teen_value(word: &str) -> Option<u32> {
    Some(match word {
        "ten" => 10,
        "eleven" => 11,
        "twelve" => 12,
        "thirteen" => 13,
        "fourteen" => 14,
        "fifteen" => 15,
        "sixteen" => 16,
        "seventeen" => 17,
        "eighteen" => 18,
        "nineteen" => 19,
        _ => return None,
    })
}

fn tens_value(word: &str) -> Option<u32> {
    Some(match word {
        "twenty" => 20,
        "thirty" => 30,
        "forty" => 40,
        "fifty" => 50,
        "sixty" => 60,
        "seventy" => 70,
        "eighty" => 80,
        "ninety" => 90,
        _ => return None,
    })
}

/// Parses a value below one hundred that uses every token.
fn below_hundred(tokens: &[&str]) -> Option<u32> {
    match tokens {
        [w] => unit_value(w).or_else(|| teen_value(w)).or_else(|| tens_value(w)),
        [t, u] => Some(tens_value(t)? + unit_value(u)?),
        _ => None,
    }
}

/// Parses a number spelled with digits ("165") or English words up to 999
/// ("one hundred sixty five", "ninety"). Every token must be consumed.
pub fn parse_number<S: AsRef<str>>(tokens: &[S]) -> Option<u32> {
    let words: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
    match words.as_slice() {
        [] => None,
        [w] if w.bytes().all(|b| b.is_ascii_digit()) => w.parse().ok(),
        ["zero"] => Some(0),
        [u, "hundred", rest @ ..] => {
            let hundreds = unit_value(u)? * 100;
            let rest = match rest {
                ["and", tail @ ..] if !tail.is_empty() => tail,
                _ => rest,
            };
            if rest.is_empty() {
                Some(hundreds)
            } else {
                Some(hundreds + below_hundred(rest)?)
            }
        }
        _ => below_hundred(&words),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlotType {
    Number,
    /// Normalized phrases, longest first.
    Phrases(Vec<Vec<String>>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemplatePart {
    Literal(String),
    Slot { name: String, slot_type: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtteranceTemplate {
    pub source: String,
    pub parts: Vec<TemplatePart>,
}

impl UtteranceTemplate {
    pub fn literal_count(&self) -> usize {
        self.parts
            .iter()
            .filter(|p| matches!(p, TemplatePart::Literal(_)))
            .count()
    }

    pub fn slot_names(&self) -> impl Iterator<Item = &str> {
        self.parts.iter().filter_map(|p| match p {
            TemplatePart::Slot { name, .. } => Some(name.as_str()),
            TemplatePart::Literal(_) => None,
        })
    }
}

impl fmt::Display for UtteranceTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntentDef {
    pub name: String,
    pub samples: Vec<UtteranceTemplate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SlotValue {
    Number(u32),
    Text(String),
}

impl SlotValue {
    pub fn as_number(&self) -> Option<u32> {
        match self {
            SlotValue::Number(n) => Some(*n),
            SlotValue::Text(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            SlotValue::Text(t) => Some(t),
            SlotValue::Number(_) => None,
        }
    }
}

impl fmt::Display for SlotValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlotValue::Number(n) => write!(f, "{n}"),
            SlotValue::Text(t) => f.write_str(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntentMatch {
    pub intent_name: String,
    pub slots: BTreeMap<String, SlotValue>,
    pub template: UtteranceTemplate,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SlotTypeDoc {
    Marker(String),
    Phrases(Vec<String>),
}

impl PartialEq for SlotTypeDoc {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (SlotTypeDoc::Marker(a), SlotTypeDoc::Marker(b)) => a == b,
            (SlotTypeDoc::Phrases(a), SlotTypeDoc::Phrases(b)) => a == b,
            _ => false,
        }
    }
}

#[derive(Debug, Deserialize)]
struct SlotDecl {
    name: String,
    #[serde(rename = "type")]
    slot_type: String,
}

#[derive(Debug, Deserialize)]
struct IntentDoc {
    name: String,
    #[serde(default)]
    slots: Vec<SlotDecl>,
    #[serde(default)]
    samples: Vec<String>,
}

#[derive(Debug, Default, Deserialize)]
struct ModelDoc {
    #[serde(default)]
    intents: Vec<IntentDoc>,
    #[serde(rename = "slotTypes", default)]
    slot_types: BTreeMap<String, SlotTypeDoc>,
}

impl ModelDoc {
    fn parse(document: &str) -> Result<Self, ModelError> {
        let doc: ModelDoc = serde_json::from_str(document).map_err(|e| ModelError::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        let mut seen = HashSet::new();
        for intent in &doc.intents {
            if !seen.insert(intent.name.trim()) {
                return Err(ModelError::DuplicateIntent(intent.name.trim().to_string()));
            }
        }
        Ok(doc)
    }

    /// Folds an extension document in: new samples join the intent of the
    /// same (trimmed) name, new intents are appended.
    fn merge(&mut self, other: ModelDoc) -> Result<(), ModelError> {
        for (name, ty) in other.slot_types {
            match self.slot_types.get(&name) {
                Some(existing) if *existing != ty => {
                    return Err(ModelError::ConflictingSlotType(name))
                }
                Some(_) => {}
                None => {
                    self.slot_types.insert(name, ty);
                }
            }
        }
        for intent in other.intents {
            match self
                .intents
                .iter_mut()
                .find(|i| i.name.trim() == intent.name.trim())
            {
                Some(existing) => {
                    existing.samples.extend(intent.samples);
                    existing.slots.extend(intent.slots);
                }
                None => self.intents.push(intent),
            }
        }
        Ok(())
    }
}

/// Compiled, immutable interaction model.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionModel {
    intents: Vec<IntentDef>,
    slot_types: BTreeMap<String, SlotType>,
}

impl InteractionModel {
    pub fn load(document: &str) -> Result<Self, ModelError> {
        Self::compile(ModelDoc::parse(document)?)
    }

    /// Loads a base model and folds in extension documents of the same
    /// format, whose intents add samples to the base intents of the same name.
    pub fn load_with_extensions(base: &str, extensions: &[&str]) -> Result<Self, ModelError> {
        let mut doc = ModelDoc::parse(base)?;
        for ext in extensions {
            doc.merge(ModelDoc::parse(ext)?)?;
        }
        Self::compile(doc)
    }

    fn compile(doc: ModelDoc) -> Result<Self, ModelError> {
        let mut slot_types = BTreeMap::new();
        for (name, ty) in doc.slot_types {
            let compiled = match ty {
                SlotTypeDoc::Marker(m) if m == "number" => SlotType::Number,
                SlotTypeDoc::Marker(m) => {
                    return Err(ModelError::BadMarker {
                        slot_type: name,
                        marker: m,
                    })
                }
                SlotTypeDoc::Phrases(list) => {
                    let mut phrases = Vec::with_capacity(list.len());
                    for p in &list {
                        let toks = normalize(p);
                        if toks.is_empty() {
                            return Err(ModelError::EmptyPhrase(name));
                        }
                        phrases.push(toks);
                    }
                    phrases.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
                    phrases.dedup();
                    SlotType::Phrases(phrases)
                }
            };
            slot_types.insert(name, compiled);
        }

        let mut intents = Vec::with_capacity(doc.intents.len());
        for intent in doc.intents {
            let name = intent.name.trim().to_string();
            if intent.samples.is_empty() {
                return Err(ModelError::NoSamples(name));
            }
            let decls: HashMap<&str, &str> = intent
                .slots
                .iter()
                .map(|d| (d.name.as_str(), d.slot_type.as_str()))
                .collect();
            let samples = intent
                .samples
                .iter()
                .map(|s| compile_template(s, &decls, &slot_types))
                .collect::<Result<Vec<_>, _>>()?;
            intents.push(IntentDef { name, samples });
        }

        Ok(InteractionModel {
            intents,
            slot_types,
        })
    }

    pub fn intents(&self) -> &[IntentDef] {
        &self.intents
    }

    pub fn intent_names(&self) -> impl Iterator<Item = &str> {
        self.intents.iter().map(|i| i.name.as_str())
    }

    pub fn slot_type(&self, name: &str) -> Option<&SlotType> {
        self.slot_types.get(name)
    }

    /// Matches a raw utterance against every template.
    pub fn match_utterance(&self, text: &str) -> Option<IntentMatch> {
        self.match_tokens(&normalize(text))
    }

    pub fn match_tokens(&self, tokens: &[String]) -> Option<IntentMatch> {
        if tokens.is_empty() {
            return None;
        }
        let mut best: Option<(Rank<'_>, &IntentDef, &UtteranceTemplate, Vec<Binding>)> = None;
        let mut order = 0usize;
        for intent in &self.intents {
            for template in &intent.samples {
                order += 1;
                let mut bindings = Vec::new();
                if !self.match_parts(&template.parts, tokens, &mut bindings) {
                    continue;
                }
                let rank = Rank {
                    literals: template.literal_count(),
                    slots: template.parts.len() - template.literal_count(),
                    intent: &intent.name,
                    order,
                };
                if best.as_ref().is_none_or(|(b, ..)| rank.beats(b)) {
                    best = Some((rank, intent, template, bindings));
                }
            }
        }
        best.map(|(_, intent, template, bindings)| IntentMatch {
            intent_name: intent.name.clone(),
            slots: bindings
                .into_iter()
                .map(|b| (b.slot.to_string(), b.value))
                .collect(),
            template: template.clone(),
        })
    }

    /// Depth-first match; each slot tries its longest candidate first and
    /// backs off only when the rest of the template cannot match.
    fn match_parts<'m>(
        &'m self,
        parts: &'m [TemplatePart],
        tokens: &[String],
        bindings: &mut Vec<Binding<'m>>,
    ) -> bool {
        let Some((part, rest)) = parts.split_first() else {
            return tokens.is_empty();
        };
        match part {
            TemplatePart::Literal(word) => {
                tokens.first() == Some(word) && self.match_parts(rest, &tokens[1..], bindings)
            }
            TemplatePart::Slot { name, slot_type } => {
                for (len, value) in self.slot_candidates(slot_type, tokens) {
                    bindings.push(Binding { slot: name, value });
                    if self.match_parts(rest, &tokens[len..], bindings) {
                        return true;
                    }
                    bindings.pop();
                }
                false
            }
        }
    }

    fn slot_candidates(&self, slot_type: &str, tokens: &[String]) -> Vec<(usize, SlotValue)> {
        match &self.slot_types[slot_type] {
            SlotType::Number => (1..=tokens.len().min(MAX_NUMBER_TOKENS))
                .rev()
                .filter_map(|len| parse_number(&tokens[..len]).map(|n| (len, SlotValue::Number(n))))
                .collect(),
            SlotType::Phrases(phrases) => phrases
                .iter()
                .filter(|p| tokens.starts_with(p))
                .map(|p| (p.len(), SlotValue::Text(p.join(" "))))
                .collect(),
        }
    }
}

struct Binding<'m> {
    slot: &'m str,
    value: SlotValue,
}

struct Rank<'m> {
    literals: usize,
    slots: usize,
    intent: &'m str,
    order: usize,
}

impl Rank<'_> {
    fn beats(&self, other: &Rank<'_>) -> bool {
        other
            .literals
            .cmp(&self.literals)
            .then(self.slots.cmp(&other.slots))
            .then(self.intent.cmp(other.intent))
            .then(self.order.cmp(&other.order))
            .is_lt()
    }
}

fn compile_template(
    source: &str,
    decls: &HashMap<&str, &str>,
    slot_types: &BTreeMap<String, SlotType>,
) -> Result<UtteranceTemplate, ModelError> {
    let malformed = || ModelError::Malformed(source.to_string());
    let mut parts = Vec::new();
    let mut rest = source;
    let mut seen = HashSet::new();
    loop {
        let (literal, after) = match rest.find('{') {
            Some(i) => (&rest[..i], Some(&rest[i + 1..])),
            None => (rest, None),
        };
        if literal.contains('}') {
            return Err(malformed());
        }
        parts.extend(normalize(literal).into_iter().map(TemplatePart::Literal));
        let Some(after) = after else { break };
        let close = after.find('}').ok_or_else(malformed)?;
        let name = after[..close].trim();
        if name.is_empty() || name.contains('{') {
            return Err(malformed());
        }
        let slot_type = decls.get(name).copied().unwrap_or(name);
        if !slot_types.contains_key(slot_type) {
            return Err(ModelError::UnknownSlotType {
                template: source.to_string(),
                slot: name.to_string(),
                slot_type: slot_type.to_string(),
            });
        }
        if !seen.insert(name.to_string()) {
            return Err(ModelError::RepeatedSlot {
                template: source.to_string(),
                slot: name.to_string(),
            });
        }
        parts.push(TemplatePart::Slot {
            name: name.to_string(),
            slot_type: slot_type.to_string(),
        });
        rest = &after[close + 1..];
    }
    if parts.is_empty() {
        return Err(ModelError::EmptyTemplate(source.to_string()));
    }
    check_adjacent_slots(source, &parts, slot_types)?;
    Ok(UtteranceTemplate {
        source: source.to_string(),
        parts,
    })
}

/// Slots with no literal between them are accepted only when every
/// concatenation of their phrases splits back apart one way. Numeric slots
/// are never accepted next to another slot.
fn check_adjacent_slots(
    source: &str,
    parts: &[TemplatePart],
    slot_types: &BTreeMap<String, SlotType>,
) -> Result<(), ModelError> {
    let mut i = 0;
    while i < parts.len() {
        let run_end = parts[i..]
            .iter()
            .position(|p| matches!(p, TemplatePart::Literal(_)))
            .map_or(parts.len(), |n| i + n);
        if run_end - i >= 2 {
            let run = &parts[i..run_end];
            let names: Vec<&str> = run
                .iter()
                .map(|p| match p {
                    TemplatePart::Slot { name, .. } => name.as_str(),
                    TemplatePart::Literal(_) => unreachable!(),
                })
                .collect();
            let err = || ModelError::AdjacentSlots {
                template: source.to_string(),
                first: names[0].to_string(),
                second: names[1].to_string(),
            };
            let mut vocabularies = Vec::new();
            for p in run {
                let TemplatePart::Slot { slot_type, .. } = p else {
                    unreachable!()
                };
                match &slot_types[slot_type] {
                    SlotType::Number => return Err(err()),
                    SlotType::Phrases(ph) => vocabularies.push(ph),
                }
            }
            let product = vocabularies
                .iter()
                .try_fold(1usize, |acc, v| acc.checked_mul(v.len()))
                .unwrap_or(usize::MAX);
            if product > MAX_ADJACENT_PRODUCT || !unique_splits(&vocabularies) {
                return Err(err());
            }
        }
        i = run_end.max(i + 1);
    }
    Ok(())
}

fn unique_splits(vocabularies: &[&Vec<Vec<String>>]) -> bool {
    let mut seen: HashSet<Vec<String>> = HashSet::new();
    let mut combos: Vec<Vec<String>> = vec![Vec::new()];
    for vocab in vocabularies {
        combos = combos
            .iter()
            .flat_map(|prefix| {
                vocab.iter().map(move |phrase| {
                    let mut c = prefix.clone();
                    c.extend(phrase.iter().cloned());
                    c
                })
            })
            .collect();
    }
    combos.into_iter().all(|c| seen.insert(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shipped() -> InteractionModel {
        InteractionModel::load(crate::INTERACTION_MODEL).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize("What's the temperature?"), ["whats", "the", "temperature"]);
        assert_eq!(
            normalize("Set thermometer to 165 degrees."),
            ["set", "thermometer", "to", "165", "degrees"]
        );
        assert!(normalize("").is_empty());
        assert_eq!(normalize("sixty-five  DEGREES"), ["sixty", "five", "degrees"]);
        assert_eq!(normalize("what\u{2019}s up"), ["whats", "up"]);
    }

    #[test]
    fn parse_number_examples() {
        assert_eq!(parse_number(&["165"]), Some(165));
        assert_eq!(parse_number(&["one", "hundred", "sixty", "five"]), Some(165));
        assert_eq!(parse_number(&["ninety"]), Some(90));
        assert_eq!(parse_number(&["two", "hundred", "and", "five"]), Some(205));
        assert_eq!(parse_number(&["medium", "rare"]), None);
        assert_eq!(parse_number(&["one", "hundred", "and"]), None);
        assert_eq!(parse_number(&["sixty", "fifteen"]), None);
        assert_eq!(parse_number::<&str>(&[]), None);
    }

    #[test]
    fn shipped_model_loads_with_trimmed_names() {
        let m = shipped();
        assert_eq!(
            m.intent_names().collect::<Vec<_>>(),
            [
                "CurrentTempIntent",
                "SetTargetTempIntent",
                "CookTimeIntent",
                "SetTargetAlarmIntent"
            ]
        );
        assert_eq!(m.intents().iter().map(|i| i.samples.len()).sum::<usize>(), 12);
    }

    #[test]
    fn match_examples() {
        let m = shipped();
        let hit = m.match_utterance("how hot is my chicken").unwrap();
        assert_eq!(hit.intent_name, "CurrentTempIntent");
        assert_eq!(hit.slots["Food_ct"], SlotValue::Text("chicken".into()));

        let hit = m.match_utterance("set thermometer to 165 degrees").unwrap();
        assert_eq!(hit.intent_name, "SetTargetTempIntent");
        assert_eq!(hit.slots["Temp_stt"], SlotValue::Number(165));

        let hit = m.match_utterance("when will my beef be done").unwrap();
        assert_eq!(hit.intent_name, "CookTimeIntent");
        assert_eq!(hit.slots["Food_cti"], SlotValue::Text("beef".into()));
        assert_eq!(hit.slots["Complete_cti"], SlotValue::Text("done".into()));

        assert_eq!(m.match_utterance("play some music"), None);
        assert_eq!(m.match_utterance(""), None);
        assert_eq!(m.match_utterance("?!"), None);
    }

    #[test]
    fn longest_phrase_wins() {
        let m = shipped();
        let hit = m.match_utterance("Is my steak medium rare?").unwrap();
        assert_eq!(hit.slots["Complete_cti"], SlotValue::Text("medium rare".into()));
        let hit = m.match_utterance("is my steak medium").unwrap();
        assert_eq!(hit.slots["Complete_cti"], SlotValue::Text("medium".into()));
    }

    #[test]
    fn spelled_numbers_fill_numeric_slots() {
        let m = shipped();
        let hit = m
            .match_utterance("set thermometer to one hundred thirty five degrees")
            .unwrap();
        assert_eq!(hit.slots["Temp_stt"], SlotValue::Number(135));
    }

    #[test]
    fn more_literals_win() {
        let m = shipped();
        let hit = m.match_utterance("notify me when my food is done").unwrap();
        assert_eq!(hit.template.source, "notify me when my food is {Complete_stai}");
        assert_eq!(hit.slots.len(), 1);
    }

    #[test]
    fn adjacent_numeric_slots_rejected() {
        let doc = r#"{"intents":[{"name":"X","samples":["{A_x} {B_y} foo"]}],
                      "slotTypes":{"A_x":"number","B_y":"number"}}"#;
        assert!(matches!(
            InteractionModel::load(doc),
            Err(ModelError::AdjacentSlots { .. })
        ));
    }

    #[test]
    fn adjacent_ambiguous_phrases_rejected() {
        let doc = r#"{"intents":[{"name":"X","samples":["{A_x} {B_y} foo"]}],
                      "slotTypes":{"A_x":["medium","medium rare"],"B_y":["rare steak","steak"]}}"#;
        assert!(matches!(
            InteractionModel::load(doc),
            Err(ModelError::AdjacentSlots { .. })
        ));
    }

    #[test]
    fn load_errors() {
        let unknown = r#"{"intents":[{"name":"X","samples":["hi {Nope}"]}]}"#;
        match InteractionModel::load(unknown) {
            Err(ModelError::UnknownSlotType { template, .. }) => assert_eq!(template, "hi {Nope}"),
            other => panic!("unexpected {other:?}"),
        }
        let dup = r#"{"intents":[{"name":"X ","samples":["a"]},{"name":"X","samples":["b"]}]}"#;
        assert_eq!(
            InteractionModel::load(dup),
            Err(ModelError::DuplicateIntent("X".into()))
        );
        let empty = r#"{"intents":[{"name":"X","samples":[]}]}"#;
        assert!(matches!(InteractionModel::load(empty), Err(ModelError::NoSamples(_))));
        let marker = r#"{"intents":[],"slotTypes":{"T":"integer"}}"#;
        assert!(matches!(InteractionModel::load(marker), Err(ModelError::BadMarker { .. })));
        let brace = r#"{"intents":[{"name":"X","samples":["a {b"]}]}"#;
        assert!(matches!(InteractionModel::load(brace), Err(ModelError::Malformed(_))));
        let bad = "{\n\"intents\": [,]}";
        assert!(matches!(InteractionModel::load(bad), Err(ModelError::Parse { line: 2, .. })));
    }

    #[test]
    fn empty_model_never_matches() {
        let m = InteractionModel::load(r#"{"intents":[]}"#).unwrap();
        assert_eq!(m.match_utterance("how hot is my food"), None);
    }

    #[test]
    fn extensions_merge_into_intents() {
        let m = InteractionModel::load_with_extensions(
            crate::INTERACTION_MODEL,
            &[crate::UTTERANCE_EXTENSIONS],
        )
        .unwrap();
        assert_eq!(m.intents().len(), 4);
        let hit = m.match_utterance("What's the current temperature of my food?").unwrap();
        assert_eq!(hit.intent_name, "CurrentTempIntent");
        let hit = m.match_utterance("Set an alarm for when my food is 150 degrees.").unwrap();
        assert_eq!(hit.intent_name, "SetTargetAlarmIntent");
        assert_eq!(hit.slots["Temp_stai"], SlotValue::Number(150));
        let hit = m.match_utterance("Set the target temperature to 135 degrees.").unwrap();
        assert_eq!(hit.slots["Temp_stt"], SlotValue::Number(135));
    }
}
