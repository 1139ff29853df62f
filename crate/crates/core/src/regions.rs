//! Canonical names of the 21 Italian regions and autonomous provinces.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Canonical spelling followed by accepted variants.
const DEFAULT_REGIONS: [(&str, &[&str]); 21] = [
    ("Abruzzo", &[]),
    ("Basilicata", &[]),
    ("Calabria", &[]),
    ("Campania", &[]),
    ("Emilia-Romagna", &["Emilia Romagna"]),
    ("Friuli Venezia Giulia", &["Friuli-Venezia Giulia", "Friuli V. G."]),
    ("Lazio", &[]),
    ("Liguria", &[]),
    ("Lombardia", &[]),
    ("Marche", &[]),
    ("Molise", &[]),
    (
        "P.A. Bolzano",
        &["Bolzano", "Provincia autonoma di Bolzano", "Alto Adige", "Südtirol"],
    ),
    ("P.A. Trento", &["Trento", "Provincia autonoma di Trento"]),
    ("Piemonte", &[]),
    ("Puglia", &[]),
    ("Sardegna", &[]),
    ("Sicilia", &[]),
    ("Toscana", &[]),
    ("Umbria", &[]),
    (
        "Valle d'Aosta",
        &["Valle d Aosta", "Vallee d'Aoste", "Valle d'Aosta/Vallée d'Aoste"],
    ),
    ("Veneto", &[]),
];

fn key(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

#[derive(Debug, Clone)]
pub struct RegionCatalogue {
    canonical: Vec<String>,
    lookup: BTreeMap<String, usize>,
}

#[derive(Deserialize)]
struct CatalogueFile {
    region: Vec<CatalogueEntry>,
}

#[derive(Deserialize)]
struct CatalogueEntry {
    name: String,
    #[serde(default)]
    aliases: Vec<String>,
}

impl Default for RegionCatalogue {
    fn default() -> Self {
        RegionCatalogue::from_entries(
            DEFAULT_REGIONS
                .iter()
                .map(|(n, a)| (n.to_string(), a.iter().map(|s| s.to_string()).collect())),
        )
        .expect("built-in catalogue is consistent")
    }
}

impl RegionCatalogue {
    pub fn from_entries(entries: impl IntoIterator<Item = (String, Vec<String>)>) -> Result<Self> {
        let mut canonical = Vec::new();
        let mut lookup = BTreeMap::new();
        for (name, aliases) in entries {
            let idx = canonical.len();
            for variant in std::iter::once(&name).chain(&aliases) {
                if let Some(prev) = lookup.insert(key(variant), idx) {
                    if prev != idx {
                        return Err(Error::Config(format!("region alias '{variant}' is ambiguous")));
                    }
                }
            }
            canonical.push(name);
        }
        Ok(RegionCatalogue { canonical, lookup })
    }

    /// Parses `[[region]] name = "..." aliases = [...]` tables.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let file: CatalogueFile = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        RegionCatalogue::from_entries(file.region.into_iter().map(|e| (e.name, e.aliases)))
    }

    pub fn names(&self) -> &[String] {
        &self.canonical
    }

    /// Canonical spelling, ignoring case, spacing and punctuation.
    pub fn canonical(&self, name: &str) -> Option<&str> {
        self.lookup.get(&key(name)).map(|&i| self.canonical[i].as_str())
    }

    /// Canonical spelling when known, otherwise the input unchanged.
    pub fn normalize(&self, name: &str) -> String {
        self.canonical(name).unwrap_or(name).to_owned()
    }
}
