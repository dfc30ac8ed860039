use std::collections::{BTreeMap, HashMap};

use super::IngestError;
use crate::geometry::{GeoEntity, GeometryKind, Transform};

/// A collection of uniquely identified geo-entities with optional integer labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    entities: Vec<GeoEntity>,
    labels: BTreeMap<String, i64>,
    index: HashMap<String, usize>,
    /// Canonical transform applied to produce these coordinates, if any.
    pub transform: Option<Transform>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        entities: Vec<GeoEntity>,
        labels: BTreeMap<String, i64>,
    ) -> Result<Dataset, IngestError> {
        let mut index = HashMap::with_capacity(entities.len());
        for (i, e) in entities.iter().enumerate() {
            if index.insert(e.id.clone(), i).is_some() {
                return Err(IngestError::DuplicateId(e.id.clone()));
            }
        }
        if let Some(id) = labels.keys().find(|id| !index.contains_key(*id)) {
            return Err(IngestError::UnknownLabel(id.clone()));
        }
        Ok(Dataset {
            name: name.into(),
            entities,
            labels,
            index,
            transform: None,
        })
    }

    pub fn entities(&self) -> &[GeoEntity] {
        &self.entities
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn labels(&self) -> &BTreeMap<String, i64> {
        &self.labels
    }

    pub fn label(&self, id: &str) -> Option<i64> {
        self.labels.get(id).copied()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&GeoEntity> {
        self.index_of(id).map(|i| &self.entities[i])
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entities.iter().map(|e| e.id.as_str())
    }

    pub fn of_kind(&self, kind: GeometryKind) -> impl Iterator<Item = &GeoEntity> {
        self.entities.iter().filter(move |e| e.kind() == kind)
    }

    /// Returns a copy with every entity mapped through `t`.
    pub fn transformed(&self, t: Transform) -> Dataset {
        Dataset {
            name: self.name.clone(),
            entities: self.entities.iter().map(|e| t.apply_entity(e)).collect(),
            labels: self.labels.clone(),
            index: self.index.clone(),
            transform: Some(t),
        }
    }
}
