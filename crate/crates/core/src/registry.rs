//! Name-keyed registries for the interchangeable strategy families
//! (cost functions, barrier functions, integrators, command derivative
//! estimators).
//!
//! Each family exposes a default registry populated with the built-in
//! strategies. Applications embedding the filter can build their own
//! registry and [`Registry::register`] additional factories.

use std::fmt;

/// A lookup failure, carrying the list of names that would have matched.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {family} `{name}` (known: {})", .known.join(", "))]
pub struct UnknownStrategy {
    pub family: &'static str,
    pub name: String,
    pub known: Vec<String>,
}

/// Factories of type `F` registered under string names.
#[derive(Clone)]
pub struct Registry<F: Copy> {
    family: &'static str,
    entries: Vec<(String, F)>,
}

impl<F: Copy> Registry<F> {
    pub fn new(family: &'static str) -> Self {
        Self {
            family,
            entries: Vec::new(),
        }
    }

    /// Registers `factory` under `name`, replacing any previous entry.
    pub fn register(&mut self, name: impl Into<String>, factory: F) -> &mut Self {
        let name = name.into();
        match self.entries.iter_mut().find(|(n, _)| *n == name) {
            Some(entry) => entry.1 = factory,
            None => self.entries.push((name, factory)),
        }
        self
    }

    pub fn with(mut self, name: impl Into<String>, factory: F) -> Self {
        self.register(name, factory);
        self
    }

    pub fn get(&self, name: &str) -> Result<F, UnknownStrategy> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, f)| *f)
            .ok_or_else(|| UnknownStrategy {
                family: self.family,
                name: name.to_string(),
                known: self.names().map(str::to_string).collect(),
            })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.iter().any(|(n, _)| n == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn family(&self) -> &'static str {
        self.family
    }
}

impl<F: Copy> fmt::Debug for Registry<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("family", &self.family)
            .field("names", &self.names().collect::<Vec<_>>())
            .finish()
    }
}
