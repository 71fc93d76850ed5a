use std::collections::HashSet;

use crate::error::{Error, Result};

/// Points with identifiers, planar coordinates, a predictor matrix and an
/// optional response. Used for training samples, prediction grids and test
/// samples alike.
///
/// Predictors are stored row-major (`n × p`).
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    ids: Vec<i64>,
    coords: Vec<[f64; 2]>,
    predictor_names: Vec<String>,
    predictors: Vec<f64>,
    response: Option<Vec<f64>>,
}

impl PointSet {
    pub fn new(
        ids: Vec<i64>,
        coords: Vec<[f64; 2]>,
        predictor_names: Vec<String>,
        predictors: Vec<f64>,
        response: Option<Vec<f64>>,
    ) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        Self::validated(ids, coords, predictor_names, predictors, response)
    }

    /// A point set with no rows. Only useful as the vacuous input to
    /// operations that map over points (e.g. prediction).
    pub fn empty(predictor_names: Vec<String>) -> Self {
        Self {
            ids: Vec::new(),
            coords: Vec::new(),
            predictor_names,
            predictors: Vec::new(),
            response: None,
        }
    }

    fn validated(
        ids: Vec<i64>,
        coords: Vec<[f64; 2]>,
        predictor_names: Vec<String>,
        predictors: Vec<f64>,
        response: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = ids.len();
        let p = predictor_names.len();
        if coords.len() != n {
            return Err(Error::LengthMismatch(format!(
                "{} ids but {} coordinates",
                n,
                coords.len()
            )));
        }
        if predictors.len() != n * p {
            return Err(Error::LengthMismatch(format!(
                "predictor matrix has {} values, expected {n} × {p}",
                predictors.len()
            )));
        }
        if let Some(r) = &response {
            if r.len() != n {
                return Err(Error::LengthMismatch(format!(
                    "{} ids but {} responses",
                    n,
                    r.len()
                )));
            }
        }
        let mut seen_names = HashSet::with_capacity(p);
        for name in &predictor_names {
            if !seen_names.insert(name.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate predictor column '{name}'"
                )));
            }
        }
        let mut seen = HashSet::with_capacity(n);
        for (i, &id) in ids.iter().enumerate() {
            if !seen.insert(id) {
                return Err(Error::DuplicateId(id));
            }
            if !coords[i].iter().all(|c| c.is_finite()) {
                return Err(Error::NonFinite {
                    id,
                    what: "coordinate",
                });
            }
            if !predictors[i * p..(i + 1) * p].iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite {
                    id,
                    what: "predictor",
                });
            }
            if let Some(r) = &response {
                if !r[i].is_finite() {
                    return Err(Error::NonFinite {
                        id,
                        what: "response",
                    });
                }
            }
        }
        Ok(Self {
            ids,
            coords,
            predictor_names,
            predictors,
            response,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[i64] {
        &self.ids
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn n_predictors(&self) -> usize {
        self.predictor_names.len()
    }

    pub fn predictor_names(&self) -> &[String] {
        &self.predictor_names
    }

    pub fn predictors(&self) -> &[f64] {
        &self.predictors
    }

    pub fn predictor_row(&self, i: usize) -> &[f64] {
        let p = self.n_predictors();
        &self.predictors[i * p..(i + 1) * p]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.predictor_names.iter().position(|c| c == name)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        let p = self.n_predictors();
        (0..self.len())
            .map(|i| self.predictors[i * p + j])
            .collect()
    }

    pub fn response(&self) -> Option<&[f64]> {
        self.response.as_deref()
    }

    pub fn require_response(&self) -> Result<&[f64]> {
        self.response().ok_or(Error::MissingResponse)
    }

    pub fn with_response(self, response: Vec<f64>) -> Result<Self> {
        Self::validated(
            self.ids,
            self.coords,
            self.predictor_names,
            self.predictors,
            Some(response),
        )
    }

    pub fn without_response(mut self) -> Self {
        self.response = None;
        self
    }

    /// Copies the given rows (in the given order) into a new set.
    pub fn subset(&self, indices: &[usize]) -> PointSet {
        let p = self.n_predictors();
        let mut predictors = Vec::with_capacity(indices.len() * p);
        for &i in indices {
            predictors.extend_from_slice(self.predictor_row(i));
        }
        PointSet {
            ids: indices.iter().map(|&i| self.ids[i]).collect(),
            coords: indices.iter().map(|&i| self.coords[i]).collect(),
            predictor_names: self.predictor_names.clone(),
            predictors,
            response: self
                .response
                .as_ref()
                .map(|r| indices.iter().map(|&i| r[i]).collect()),
        }
    }

    /// Concatenates two sets with the same predictor schema.
    pub fn concat(&self, other: &PointSet) -> Result<PointSet> {
        if self.predictor_names != other.predictor_names {
            return Err(schema_mismatch(
                &self.predictor_names,
                &other.predictor_names,
            ));
        }
        let response = match (&self.response, &other.response) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
            _ => None,
        };
        Self::validated(
            self.ids.iter().chain(&other.ids).copied().collect(),
            self.coords.iter().chain(&other.coords).copied().collect(),
            self.predictor_names.clone(),
            self.predictors
                .iter()
                .chain(&other.predictors)
                .copied()
                .collect(),
            response,
        )
    }

    /// Returns the permutation that orders rows by ascending id.
    pub fn id_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&i| self.ids[i]);
        order
    }

    /// Re-expresses this set's predictor matrix in the column order of
    /// `names`. Fails if the column sets differ.
    pub fn predictors_in_order(&self, names: &[String]) -> Result<Vec<f64>> {
        let idx = column_mapping(names, &self.predictor_names)?;
        let n = self.len();
        let mut out = Vec::with_capacity(n * names.len());
        for i in 0..n {
            let row = self.predictor_row(i);
            out.extend(idx.iter().map(|&j| row[j]));
        }
        Ok(out)
    }
}

/// For each `expected` column, the index of the same-named column in `actual`.
/// Both sides must name exactly the same set of columns.
pub(crate) fn column_mapping(expected: &[String], actual: &[String]) -> Result<Vec<usize>> {
    let missing: Vec<String> = expected
        .iter()
        .filter(|e| !actual.contains(e))
        .cloned()
        .collect();
    let extra: Vec<String> = actual
        .iter()
        .filter(|a| !expected.contains(a))
        .cloned()
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(Error::SchemaMismatch { missing, extra });
    }
    Ok(expected
        .iter()
        .map(|e| actual.iter().position(|a| a == e).expect("checked above"))
        .collect())
}

fn schema_mismatch(expected: &[String], actual: &[String]) -> Error {
    column_mapping(expected, actual).err().unwrap_or_else(|| {
        Error::InvalidParameter("predictor columns are ordered differently".into())
    })
}
