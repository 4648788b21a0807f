//! Dictionary-based entity and temporal-expression flags.

use std::path::Path;

use regex::Regex;

use crate::datamodel::normalize_query;
use crate::error::{Error, Result};

const DEFAULT_PERSON: &str = include_str!("../../data/gazetteer/person.txt");
const DEFAULT_LOCATION: &str = include_str!("../../data/gazetteer/location.txt");
const DEFAULT_ORGANIZATION: &str = include_str!("../../data/gazetteer/organization.txt");
const DEFAULT_TEMPORAL: &str = include_str!("../../data/gazetteer/temporal.txt");

/// Phrase lists for person/location/organization lookup plus temporal patterns.
#[derive(Clone, Debug)]
pub struct Gazetteer {
    pub person: Vec<String>,
    pub location: Vec<String>,
    pub organization: Vec<String>,
    pub temporal: Vec<Regex>,
}

fn phrases(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(normalize_query)
        .collect()
}

fn patterns(text: &str, origin: &str) -> Result<Vec<Regex>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|p| {
            regex::RegexBuilder::new(p)
                .case_insensitive(true)
                .build()
                .map_err(|e| Error::data(format!("{origin}: bad pattern '{p}': {e}")))
        })
        .collect()
}

impl Gazetteer {
    pub fn from_texts(person: &str, location: &str, organization: &str, temporal: &str) -> Result<Self> {
        Ok(Gazetteer {
            person: phrases(person),
            location: phrases(location),
            organization: phrases(organization),
            temporal: patterns(temporal, "temporal patterns")?,
        })
    }

    /// The lists shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_texts(DEFAULT_PERSON, DEFAULT_LOCATION, DEFAULT_ORGANIZATION, DEFAULT_TEMPORAL)
            .expect("built-in gazetteer patterns compile")
    }

    /// Load `person.txt`, `location.txt`, `organization.txt` and `temporal.txt`
    /// from `dir`. Missing files fall back to the built-in lists.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        if !dir.is_dir() {
            return Err(Error::data(format!("gazetteer directory {} not found", dir.display())));
        }
        let read = |name: &str, fallback: &'static str| -> Result<String> {
            let path = dir.join(name);
            if path.exists() {
                std::fs::read_to_string(&path).map_err(|e| Error::io(path, e))
            } else {
                Ok(fallback.to_string())
            }
        };
        Self::from_texts(
            &read("person.txt", DEFAULT_PERSON)?,
            &read("location.txt", DEFAULT_LOCATION)?,
            &read("organization.txt", DEFAULT_ORGANIZATION)?,
            &read("temporal.txt", DEFAULT_TEMPORAL)?,
        )
    }

    pub fn is_loaded(&self) -> bool {
        !(self.person.is_empty() && self.location.is_empty() && self.organization.is_empty() && self.temporal.is_empty())
    }
}

fn contains_phrase(padded_query: &str, list: &[String]) -> bool {
    list.iter()
        .any(|p| padded_query.contains(&format!(" {p} ")))
}

/// `(isPer, isLoc, isOrg, isTempEx)` as 0/1 values.
pub fn entity_flags(query: &str, gz: &Gazetteer) -> Result<(f64, f64, f64, f64)> {
    if !gz.is_loaded() {
        return Err(Error::data("gazetteer not loaded"));
    }
    let q = normalize_query(query);
    let padded = format!(" {q} ");
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    Ok((
        flag(contains_phrase(&padded, &gz.person)),
        flag(contains_phrase(&padded, &gz.location)),
        flag(contains_phrase(&padded, &gz.organization)),
        flag(gz.temporal.iter().any(|re| re.is_match(&q))),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_lists_are_populated() {
        let gz = Gazetteer::builtin();
        assert!(gz.person.len() >= 100);
        assert!(gz.location.len() >= 100);
        assert!(gz.organization.len() >= 100);
        assert_eq!(gz.temporal.len(), 5);
    }

    #[test]
    fn no_entities() {
        let gz = Gazetteer::builtin();
        assert_eq!(entity_flags("zika outbreak", &gz).unwrap(), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn temporal_expression() {
        let gz = Gazetteer::builtin();
        assert_eq!(entity_flags("april fools day 2006", &gz).unwrap().3, 1.0);
        assert_eq!(entity_flags("route 66", &gz).unwrap().3, 0.0);
        assert_eq!(entity_flags("census 1850", &gz).unwrap().3, 0.0);
        assert_eq!(entity_flags("9/11 anniversary", &gz).unwrap().3, 1.0);
    }

    #[test]
    fn custom_lists_and_token_boundaries() {
        let gz = Gazetteer::from_texts("johnny depp\n", "paris\n", "# none\nnasa\n", "").unwrap();
        assert_eq!(entity_flags("johnny depp paris", &gz).unwrap(), (1.0, 1.0, 0.0, 0.0));
        assert_eq!(entity_flags("comparison", &gz).unwrap().1, 0.0);
        assert_eq!(entity_flags("Johnny  DEPP", &gz).unwrap().0, 1.0);
    }

    #[test]
    fn empty_gazetteer_is_an_error() {
        let gz = Gazetteer::from_texts("", "", "", "").unwrap();
        assert!(entity_flags("anything", &gz).is_err());
    }

    #[test]
    fn bad_pattern_is_reported() {
        assert!(Gazetteer::from_texts("", "", "", "(unclosed\n").is_err());
    }
}
