use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown or missing access token")]
pub struct Unauthorized;

/// Static access-token → device mapping loaded from the service config.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenRegistry {
    entries: BTreeMap<String, String>,
}

impl TokenRegistry {
    pub fn new(entries: BTreeMap<String, String>) -> Self {
        TokenRegistry { entries }
    }

    pub fn resolve(&self, token: &str) -> Result<&str, Unauthorized> {
        if token.is_empty() {
            return Err(Unauthorized);
        }
        self.entries
            .get(token)
            .map(String::as_str)
            .ok_or(Unauthorized)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
