//! Optional activity-composition model for DRE.
//!
//! This is a modelling aid, not the default ladder: each activity removes
//! up to `effectiveness[a]` of the defects, scaled by how much of it a scope
//! column includes, and activities act independently:
//!
//! `dre = 1 - prod_a (1 - effectiveness[a] * coverage(grade[a]))`
//!
//! It is off by default. When on, scope-cell edits move a level's DRE.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PlanningError;
use crate::scalar::Scalar;
use crate::scope::Grade;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositionModel<T> {
    #[serde(default)]
    pub enabled: bool,
    /// Maximum effectiveness per activity, each in [0, 1).
    #[serde(default = "BTreeMap::new")]
    pub effectiveness: BTreeMap<String, T>,
}

/// Coverage weight of an inclusion grade.
pub fn coverage_weight<T: Scalar>(grade: Grade) -> T {
    T::lit(match grade {
        Grade::No => 0.0,
        Grade::Minimal | Grade::Subset => 0.25,
        Grade::ChangedNew => 0.5,
        Grade::Good | Grade::Most => 0.75,
        Grade::Complete | Grade::All | Grade::Yes => 1.0,
    })
}

pub fn composed_dre<T: Scalar>(model: &CompositionModel<T>, column: &[(&str, Grade)]) -> Result<T, PlanningError> {
    let mut escape = T::one();
    for (activity, grade) in column {
        let e = *model.effectiveness.get(*activity).ok_or_else(|| {
            PlanningError::InvalidComposition(format!("no effectiveness configured for activity '{activity}'"))
        })?;
        if !(e.is_finite() && e >= T::zero() && e < T::one()) {
            return Err(PlanningError::InvalidComposition(format!(
                "effectiveness of '{activity}' must be in [0, 1), got {e}"
            )));
        }
        escape = escape * (T::one() - e * coverage_weight::<T>(*grade));
    }
    Ok(T::one() - escape)
}
