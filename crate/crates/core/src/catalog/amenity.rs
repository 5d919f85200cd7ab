use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CatalogError, Result};

/// One job amenity: its definition text and the two preference weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Amenity {
    pub name: String,
    pub definition: String,
    pub weight_absolute: f64,
    pub weight_relative: f64,
}

/// Ordered amenity definitions. Weights may be negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmenitySpec {
    amenities: Vec<Amenity>,
}

impl AmenitySpec {
    pub fn new(amenities: Vec<Amenity>) -> Result<Self> {
        if amenities.is_empty() {
            return Err(CatalogError::Empty("amenities"));
        }
        let mut names = HashSet::new();
        for a in &amenities {
            if a.definition.trim().is_empty() {
                return Err(CatalogError::EmptyDefinition(a.name.clone()));
            }
            if !a.weight_absolute.is_finite() || !a.weight_relative.is_finite() {
                return Err(CatalogError::AmenitySyntax(format!(
                    "amenity `{}` has a non-finite weight",
                    a.name
                )));
            }
            if !names.insert(a.name.as_str()) {
                return Err(CatalogError::DuplicateId {
                    kind: "amenity",
                    id: a.name.clone(),
                });
            }
        }
        Ok(Self { amenities })
    }

    pub fn amenities(&self) -> &[Amenity] {
        &self.amenities
    }

    pub fn len(&self) -> usize {
        self.amenities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amenities.is_empty()
    }

    /// `(name, definition)` pairs in spec order, ready for embedding.
    pub fn texts(&self) -> Vec<(String, String)> {
        self.amenities
            .iter()
            .map(|a| (a.name.clone(), a.definition.clone()))
            .collect()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(default)]
    amenity: Vec<RawAmenity>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAmenity {
    name: Option<String>,
    definition: Option<String>,
    weight_absolute: Option<f64>,
    weight_relative: Option<f64>,
}

/// Parses an amenity spec from TOML text: one `[[amenity]]` table per entry
/// with `name`, `definition`, `weight_absolute` and `weight_relative`.
pub fn parse_amenities(text: &str) -> Result<AmenitySpec> {
    let raw: RawSpec =
        toml::from_str(text).map_err(|e| CatalogError::AmenitySyntax(e.to_string()))?;
    let mut out = Vec::with_capacity(raw.amenity.len());
    for (idx, a) in raw.amenity.into_iter().enumerate() {
        let index = idx + 1;
        let missing = |field| CatalogError::AmenityMissingField { index, field };
        let name = a.name.ok_or_else(|| missing("name"))?;
        out.push(Amenity {
            definition: a.definition.ok_or_else(|| missing("definition"))?,
            weight_absolute: a
                .weight_absolute
                .ok_or_else(|| missing("weight_absolute"))?,
            weight_relative: a
                .weight_relative
                .ok_or_else(|| missing("weight_relative"))?,
            name,
        });
    }
    AmenitySpec::new(out)
}

pub fn load_amenities(path: &Path) -> Result<AmenitySpec> {
    let text = std::fs::read_to_string(path).map_err(|e| CatalogError::io(path, e))?;
    parse_amenities(&text)
}
