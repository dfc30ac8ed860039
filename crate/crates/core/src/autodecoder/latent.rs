use std::collections::HashMap;

use ndarray::{Array2, ArrayView1};

use super::{AutodecoderError, Real};

/// Entity id to latent code, one row per entity.
#[derive(Clone, Debug)]
pub struct LatentTable<T> {
    ids: Vec<String>,
    values: Array2<T>,
    index: HashMap<String, usize>,
}

impl<T: PartialEq> PartialEq for LatentTable<T> {
    fn eq(&self, other: &Self) -> bool {
        self.ids == other.ids && self.values == other.values
    }
}

impl<T: Real> LatentTable<T> {
    pub fn new(ids: Vec<String>, values: Array2<T>) -> Result<Self, AutodecoderError> {
        if values.nrows() != ids.len() {
            return Err(AutodecoderError::Shape("latent rows must match id count"));
        }
        if values.ncols() == 0 {
            return Err(AutodecoderError::Config("latent dimension must be positive"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(AutodecoderError::NonFinite);
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(AutodecoderError::DuplicateId(id.clone()));
            }
        }
        Ok(LatentTable { ids, values, index })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut Array2<T> {
        &mut self.values
    }

    pub fn row_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, T> {
        self.values.row(i)
    }

    pub fn get(&self, id: &str) -> Result<ArrayView1<'_, T>, AutodecoderError> {
        self.row_of(id)
            .map(|i| self.values.row(i))
            .ok_or_else(|| AutodecoderError::UnknownId(id.to_string()))
    }

    pub fn cast<U: Real>(&self) -> LatentTable<U> {
        LatentTable {
            ids: self.ids.clone(),
            values: self.values.mapv(|v| U::from_f64(v.as_f64())),
            index: self.index.clone(),
        }
    }
}
