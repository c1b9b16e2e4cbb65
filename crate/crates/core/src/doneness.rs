//! Meat doneness knowledge base.
//!
//! The table is loaded from a TOML knowledge file (see `data/doneness.toml`)
//! with one `[[category]]` record per food group and one `[[entry]]` record
//! per doneness row. Every row is a half-open band `[lower_f, upper_f)`; an
//! absent bound is open on that side. Within a category the bands must tile
//! the line without gaps or overlaps, which makes [`DonenessTable::classify`]
//! a total function above the lowest bound.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KbError {
    #[error("knowledge file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("overlapping doneness ranges: {first} and {second}")]
    Overlap { first: String, second: String },
    #[error("gap between doneness ranges {first} and {second}")]
    Gap { first: String, second: String },
    #[error("{entry}: lower bound {lower_f} is not below upper bound {upper_f}")]
    InvertedRange {
        entry: String,
        lower_f: f64,
        upper_f: f64,
    },
    #[error("category {0} is declared twice")]
    DuplicateCategory(CategoryId),
    #[error("{entry} references undeclared category {category}")]
    UndeclaredCategory { entry: String, category: CategoryId },
    #[error("doneness {0} is listed twice")]
    DuplicateEntry(String),
    #[error("unknown food category {0:?}")]
    UnknownCategory(String),
    #[error("no doneness {name:?} for {category}; valid names: {}", valid.join(", "))]
    UnknownDoneness {
        category: CategoryId,
        name: String,
        valid: Vec<String>,
    },
}

/// The four food groups of the USDA doneness guidelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoryId {
    BeefLambVealDuck,
    PorkVeal,
    Poultry,
    Fish,
}

impl CategoryId {
    pub const ALL: [CategoryId; 4] = [
        CategoryId::BeefLambVealDuck,
        CategoryId::PorkVeal,
        CategoryId::Poultry,
        CategoryId::Fish,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CategoryId::BeefLambVealDuck => "beef_lamb_veal_duck",
            CategoryId::PorkVeal => "pork_veal",
            CategoryId::Poultry => "poultry",
            CategoryId::Fish => "fish",
        }
    }
}

impl fmt::Display for CategoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CategoryId {
    type Err = KbError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        CategoryId::ALL
            .into_iter()
            .find(|c| c.as_str() == key)
            .ok_or_else(|| KbError::UnknownCategory(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoodCategory {
    pub id: CategoryId,
    pub display_name: String,
    pub usda_minimum_f: f64,
    #[serde(default)]
    pub usda_note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DonenessEntry {
    pub category: CategoryId,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper_f: Option<f64>,
    pub description: String,
}

impl DonenessEntry {
    /// Half-open membership test.
    pub fn contains(&self, temp_f: f64) -> bool {
        self.lower_f.is_none_or(|lo| temp_f >= lo) && self.upper_f.is_none_or(|hi| temp_f < hi)
    }

    fn label(&self) -> String {
        format!("{}/{}", self.category, self.name)
    }
}

/// Outcome of classifying a temperature within one category.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Classification<'a> {
    Entry(&'a DonenessEntry),
    BelowRange,
}

impl<'a> Classification<'a> {
    pub fn entry(self) -> Option<&'a DonenessEntry> {
        match self {
            Classification::Entry(e) => Some(e),
            Classification::BelowRange => None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Document {
    #[serde(rename = "category", default)]
    categories: Vec<FoodCategory>,
    #[serde(rename = "entry", default)]
    entries: Vec<DonenessEntry>,
}

/// Immutable, validated doneness table.
#[derive(Debug, Clone, PartialEq)]
pub struct DonenessTable {
    categories: Vec<FoodCategory>,
    entries: Vec<DonenessEntry>,
}

impl DonenessTable {
    /// Parses and validates a knowledge file.
    ///
    /// Categories and entries are put into canonical order (category
    /// declaration order of [`CategoryId`], then ascending lower bound), so
    /// the result does not depend on record order in the file.
    pub fn load(document: &str) -> Result<Self, KbError> {
        let doc: Document = toml::from_str(document).map_err(|e| KbError::Parse {
            line: e
                .span()
                .map(|span| line_of(document, span.start))
                .unwrap_or(1),
            message: e.message().to_string(),
        })?;
        Self::from_parts(doc.categories, doc.entries)
    }

    pub fn from_parts(
        mut categories: Vec<FoodCategory>,
        mut entries: Vec<DonenessEntry>,
    ) -> Result<Self, KbError> {
        categories.sort_by_key(|c| c.id);
        for pair in categories.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(KbError::DuplicateCategory(pair[0].id));
            }
        }
        for entry in &entries {
            if !categories.iter().any(|c| c.id == entry.category) {
                return Err(KbError::UndeclaredCategory {
                    entry: entry.name.clone(),
                    category: entry.category,
                });
            }
            if let (Some(lo), Some(hi)) = (entry.lower_f, entry.upper_f) {
                if lo.partial_cmp(&hi) != Some(Ordering::Less) {
                    return Err(KbError::InvertedRange {
                        entry: entry.label(),
                        lower_f: lo,
                        upper_f: hi,
                    });
                }
            }
        }

        entries.sort_by(|a, b| {
            a.category
                .cmp(&b.category)
                .then_with(|| cmp_lower(a.lower_f, b.lower_f))
        });

        for pair in entries.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if a.category != b.category {
                continue;
            }
            if names_equal(&a.name, &b.name) {
                return Err(KbError::DuplicateEntry(b.label()));
            }
            match (a.upper_f, b.lower_f) {
                (Some(hi), Some(lo)) if hi == lo => {}
                (Some(hi), Some(lo)) if hi < lo => {
                    return Err(KbError::Gap {
                        first: a.label(),
                        second: b.label(),
                    })
                }
                _ => {
                    return Err(KbError::Overlap {
                        first: a.label(),
                        second: b.label(),
                    })
                }
            }
        }

        Ok(DonenessTable {
            categories,
            entries,
        })
    }

    /// Writes the table back out in knowledge-file form.
    pub fn to_document(&self) -> String {
        let doc = Document {
            categories: self.categories.clone(),
            entries: self.entries.clone(),
        };
        toml::to_string(&doc).expect("doneness table serializes")
    }

    pub fn categories(&self) -> &[FoodCategory] {
        &self.categories
    }

    pub fn entries(&self) -> &[DonenessEntry] {
        &self.entries
    }

    pub fn category(&self, id: CategoryId) -> Result<&FoodCategory, KbError> {
        self.categories
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| KbError::UnknownCategory(id.to_string()))
    }

    /// Entries of one category, lowest band first.
    pub fn entries_for(&self, id: CategoryId) -> impl Iterator<Item = &DonenessEntry> {
        self.entries.iter().filter(move |e| e.category == id)
    }

    pub fn classify(&self, id: CategoryId, temp_f: f64) -> Result<Classification<'_>, KbError> {
        self.category(id)?;
        Ok(self
            .entries_for(id)
            .find(|e| e.contains(temp_f))
            .map_or(Classification::BelowRange, Classification::Entry))
    }

    pub fn target_range(
        &self,
        id: CategoryId,
        doneness: &str,
    ) -> Result<(Option<f64>, Option<f64>), KbError> {
        self.lookup(id, doneness).map(|e| (e.lower_f, e.upper_f))
    }

    /// Finds a doneness row by name, ignoring case and extra whitespace.
    pub fn lookup(&self, id: CategoryId, doneness: &str) -> Result<&DonenessEntry, KbError> {
        self.category(id)?;
        self.entries_for(id)
            .find(|e| names_equal(&e.name, doneness))
            .ok_or_else(|| KbError::UnknownDoneness {
                category: id,
                name: doneness.to_string(),
                valid: self.entries_for(id).map(|e| e.name.clone()).collect(),
            })
    }

    pub fn usda_minimum(&self, id: CategoryId) -> Result<f64, KbError> {
        self.category(id).map(|c| c.usda_minimum_f)
    }
}

impl Default for DonenessTable {
    /// The shipped canonical table.
    fn default() -> Self {
        DonenessTable::load(crate::DONENESS_KB).expect("shipped knowledge file is valid")
    }
}

fn cmp_lower(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(x), Some(y)) => x.total_cmp(&y),
    }
}

/// Case-folds and collapses internal whitespace.
pub fn canonical_name(name: &str) -> String {
    name.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

fn names_equal(a: &str, b: &str) -> bool {
    canonical_name(a) == canonical_name(b)
}

fn line_of(document: &str, offset: usize) -> usize {
    let end = offset.min(document.len());
    document.as_bytes()[..end].iter().filter(|&&b| b == b'\n').count() + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> DonenessTable {
        DonenessTable::default()
    }

    #[test]
    fn shipped_table_shape() {
        let t = table();
        assert_eq!(t.entries().len(), 16);
        assert_eq!(t.categories().len(), 4);
        let minima: Vec<f64> = CategoryId::ALL
            .iter()
            .map(|&c| t.usda_minimum(c).unwrap())
            .collect();
        assert_eq!(minima, vec![145.0, 145.0, 165.0, 145.0]);
    }

    #[test]
    fn classify_examples() {
        let t = table();
        let name = |c, f| t.classify(c, f).unwrap().entry().map(|e| e.name.clone());
        assert_eq!(name(CategoryId::BeefLambVealDuck, 132.0).as_deref(), Some("Medium rare"));
        assert_eq!(name(CategoryId::Poultry, 165.0).as_deref(), Some("Safe and moist"));
        assert_eq!(name(CategoryId::BeefLambVealDuck, 100.0), None);
        assert_eq!(name(CategoryId::Fish, 124.9), None);
        assert_eq!(name(CategoryId::Fish, 140.0).as_deref(), Some("Medium"));
        assert_eq!(name(CategoryId::PorkVeal, -40.0).as_deref(), Some("Raw"));
    }

    #[test]
    fn boundaries_belong_to_upper_band() {
        let t = table();
        let e = t.classify(CategoryId::BeefLambVealDuck, 130.0).unwrap().entry().unwrap();
        assert_eq!(e.name, "Medium rare");
        let e = t.classify(CategoryId::BeefLambVealDuck, 155.0).unwrap().entry().unwrap();
        assert_eq!(e.name, "Well done");
    }

    #[test]
    fn target_range_examples() {
        let t = table();
        assert_eq!(
            t.target_range(CategoryId::PorkVeal, "medium").unwrap(),
            (Some(135.0), Some(145.0))
        );
        assert_eq!(
            t.target_range(CategoryId::Fish, "Well done").unwrap(),
            (Some(145.0), None)
        );
        assert_eq!(
            t.target_range(CategoryId::BeefLambVealDuck, "  MEDIUM   rare ").unwrap(),
            (Some(130.0), Some(135.0))
        );
        match t.target_range(CategoryId::Poultry, "rare") {
            Err(KbError::UnknownDoneness { valid, .. }) => {
                assert_eq!(valid, vec!["Safe and moist".to_string()])
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn overlap_is_rejected() {
        let doc = crate::DONENESS_KB.replacen(
            "name = \"Medium rare\"\nlower_f = 130.0",
            "name = \"Medium rare\"\nlower_f = 129.0",
            1,
        );
        assert_ne!(doc, crate::DONENESS_KB);
        match DonenessTable::load(&doc) {
            Err(KbError::Overlap { first, second }) => {
                assert_eq!(first, "beef_lamb_veal_duck/Rare");
                assert_eq!(second, "beef_lamb_veal_duck/Medium rare");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gap_is_rejected() {
        let doc = crate::DONENESS_KB.replacen(
            "name = \"Medium rare\"\nlower_f = 130.0",
            "name = \"Medium rare\"\nlower_f = 131.0",
            1,
        );
        assert!(matches!(DonenessTable::load(&doc), Err(KbError::Gap { .. })));
    }

    #[test]
    fn parse_error_names_line() {
        let doc = "[[category]]\nid = \"beef_lamb_veal_duck\"\ndisplay_name = 3\n";
        match DonenessTable::load(doc) {
            Err(KbError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let doc = "[[entry]]\ncategory = \"goat\"\n";
        assert!(matches!(DonenessTable::load(doc), Err(KbError::Parse { line: 2, .. })));
    }

    #[test]
    fn undeclared_category_is_rejected() {
        let doc = "[[entry]]\ncategory = \"fish\"\nname = \"Rare\"\nlower_f = 125.0\ndescription = \"x\"\n";
        assert!(matches!(
            DonenessTable::load(doc),
            Err(KbError::UndeclaredCategory { .. })
        ));
    }

    #[test]
    fn unknown_category_in_partial_table() {
        let doc = "[[category]]\nid = \"fish\"\ndisplay_name = \"Fish\"\nusda_minimum_f = 145.0\n";
        let t = DonenessTable::load(doc).unwrap();
        assert!(matches!(
            t.classify(CategoryId::Poultry, 170.0),
            Err(KbError::UnknownCategory(_))
        ));
        assert!(t.usda_minimum(CategoryId::Poultry).is_err());
        assert_eq!(t.classify(CategoryId::Fish, 170.0).unwrap(), Classification::BelowRange);
    }

    #[test]
    fn category_ids_parse() {
        assert_eq!("Poultry".parse::<CategoryId>().unwrap(), CategoryId::Poultry);
        assert!("goat".parse::<CategoryId>().is_err());
    }
}
