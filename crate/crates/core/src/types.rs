//! Domain values shared by every module: feature and preference vectors,
//! queries, rankings, and the linear reward.
//!
//! Behaviors never appear here directly. A behavior is an opaque [`ItemId`]
//! plus the feature vector its representation maps it to.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Largest query size accepted anywhere; ranking distributions are enumerated
/// exhaustively, so `K!` has to stay small.
pub const MAX_QUERY_SIZE: usize = 6;

/// Smallest query size a user can be asked to rank.
pub const MIN_QUERY_SIZE: usize = 2;

fn check_values(kind: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return invalid(format!("{kind} must have at least one coordinate"));
    }
    if let Some(i) = values.iter().position(|x| !x.is_finite()) {
        return invalid(format!("{kind} coordinate {i} is not finite ({})", values[i]));
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

macro_rules! dense_vector {
    ($(#[$meta:meta])* $name:ident, $kind:literal) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
        #[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
        pub struct $name(Vec<f64>);

        impl $name {
            /// Rejects empty vectors and non-finite coordinates.
            pub fn new(values: Vec<f64>) -> Result<Self> {
                check_values($kind, &values)?;
                Ok(Self(values))
            }

            pub fn zeros(dim: usize) -> Self {
                Self(vec![0.0; dim.max(1)])
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            pub fn into_vec(self) -> Vec<f64> {
                self.0
            }

            pub fn norm(&self) -> f64 {
                norm(&self.0)
            }

            pub fn scaled(&self, factor: f64) -> Self {
                Self(self.0.iter().map(|x| x * factor).collect())
            }

            /// Rescales onto the unit sphere when the norm exceeds one.
            pub fn clamped_to_unit_ball(self) -> Self {
                let n = self.norm();
                if n > 1.0 {
                    Self(self.0.into_iter().map(|x| x / n).collect())
                } else {
                    self
                }
            }

            /// Used internally where finiteness is already guaranteed by construction.
            pub(crate) fn from_raw(values: Vec<f64>) -> Self {
                debug_assert!(!values.is_empty() && values.iter().all(|x| x.is_finite()));
                Self(values)
            }
        }

        impl TryFrom<Vec<f64>> for $name {
            type Error = crate::error::Error;

            fn try_from(values: Vec<f64>) -> Result<Self> {
                Self::new(values)
            }
        }

        impl From<$name> for Vec<f64> {
            fn from(v: $name) -> Vec<f64> {
                v.0
            }
        }

        impl AsRef<[f64]> for $name {
            fn as_ref(&self) -> &[f64] {
                &self.0
            }
        }
    };
}

dense_vector!(
    /// A point in the d-dimensional representation space.
    FeatureVector,
    "feature vector"
);

dense_vector!(
    /// Linear reward weights over features.
    PreferenceVector,
    "preference vector"
);

/// The linear reward `omega . phi`.
pub fn reward(omega: &PreferenceVector, phi: &FeatureVector) -> Result<f64> {
    if omega.dim() != phi.dim() {
        return invalid(format!(
            "dimension mismatch: preference has {} coordinates, features have {}",
            omega.dim(),
            phi.dim()
        ));
    }
    Ok(dot(omega.as_slice(), phi.as_slice()))
}

/// Opaque identifier of a behavior shown to a user.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(String);

impl ItemId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ItemId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryItem {
    pub id: ItemId,
    pub phi: FeatureVector,
}

impl QueryItem {
    pub fn new(id: impl Into<ItemId>, phi: FeatureVector) -> Self {
        Self { id: id.into(), phi }
    }
}

/// An unordered set of `K` candidates shown to a user at once.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawQuery")]
pub struct Query {
    items: Vec<QueryItem>,
}

#[derive(Deserialize)]
struct RawQuery {
    items: Vec<QueryItem>,
}

impl TryFrom<RawQuery> for Query {
    type Error = crate::error::Error;

    fn try_from(raw: RawQuery) -> Result<Self> {
        Query::new(raw.items)
    }
}

impl Query {
    /// Checks `2 <= K <= 6`, unique ids and a common dimension.
    pub fn new(items: Vec<QueryItem>) -> Result<Self> {
        if !(MIN_QUERY_SIZE..=MAX_QUERY_SIZE).contains(&items.len()) {
            return invalid(format!(
                "query size {} outside [{MIN_QUERY_SIZE}, {MAX_QUERY_SIZE}]",
                items.len()
            ));
        }
        let dim = items[0].phi.dim();
        if let Some(item) = items.iter().find(|it| it.phi.dim() != dim) {
            return invalid(format!(
                "item {} has dimension {}, expected {dim}",
                item.id,
                item.phi.dim()
            ));
        }
        let mut seen = HashSet::with_capacity(items.len());
        for item in &items {
            if !seen.insert(&item.id) {
                return invalid(format!("duplicate item id {} in query", item.id));
            }
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[QueryItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.items[0].phi.dim()
    }

    pub fn ids(&self) -> Vec<ItemId> {
        self.items.iter().map(|it| it.id.clone()).collect()
    }

    pub fn position(&self, id: &ItemId) -> Option<usize> {
        self.items.iter().position(|it| &it.id == id)
    }

    pub fn get(&self, id: &ItemId) -> Option<&QueryItem> {
        self.items.iter().find(|it| &it.id == id)
    }

    /// Rewards of every item under `omega`, in item order.
    pub fn rewards(&self, omega: &PreferenceVector) -> Result<Vec<f64>> {
        if omega.dim() != self.dim() {
            return invalid(format!(
                "dimension mismatch: preference has {} coordinates, query items have {}",
                omega.dim(),
                self.dim()
            ));
        }
        Ok(self
            .items
            .iter()
            .map(|it| dot(omega.as_slice(), it.phi.as_slice()))
            .collect())
    }

    /// Items reordered as the ranking lists them, most-preferred first.
    pub fn apply(&self, ranking: &Ranking) -> Result<Vec<&QueryItem>> {
        let order = ranking.indices_in(self)?;
        Ok(order.into_iter().map(|i| &self.items[i]).collect())
    }
}

/// A total order over a query's items, most-preferred first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ranking {
    #[serde(rename = "order")]
    ordered_ids: Vec<ItemId>,
}

impl Ranking {
    pub fn new(ordered_ids: Vec<ItemId>) -> Self {
        Self { ordered_ids }
    }

    /// Builds the ranking that lists `query` items in the given index order.
    pub fn from_indices(query: &Query, order: &[usize]) -> Result<Self> {
        let ranking = Self {
            ordered_ids: order
                .iter()
                .map(|&i| {
                    query
                        .items
                        .get(i)
                        .map(|it| it.id.clone())
                        .ok_or_else(|| {
                            crate::error::Error::InvalidArgument(format!(
                                "index {i} out of range for query of size {}",
                                query.len()
                            ))
                        })
                })
                .collect::<Result<_>>()?,
        };
        ranking.indices_in(query)?;
        Ok(ranking)
    }

    pub fn ordered_ids(&self) -> &[ItemId] {
        &self.ordered_ids
    }

    pub fn len(&self) -> usize {
        self.ordered_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordered_ids.is_empty()
    }

    /// Positions of the ranked items inside `query`, most-preferred first.
    /// Fails unless the ranking is a bijection onto the query's ids.
    pub fn indices_in(&self, query: &Query) -> Result<Vec<usize>> {
        if self.ordered_ids.len() != query.len() {
            return invalid(format!(
                "ranking lists {} items but the query has {}",
                self.ordered_ids.len(),
                query.len()
            ));
        }
        let mut used = vec![false; query.len()];
        let mut order = Vec::with_capacity(query.len());
        for id in &self.ordered_ids {
            let Some(pos) = query.position(id) else {
                return invalid(format!("ranking mentions unknown item {id}"));
            };
            if std::mem::replace(&mut used[pos], true) {
                return invalid(format!("ranking lists item {id} twice"));
            }
            order.push(pos);
        }
        Ok(order)
    }
}
