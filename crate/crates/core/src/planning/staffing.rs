use serde::{Deserialize, Serialize};

use super::PlanningError;
use crate::matrix::{LevelPlan, TestLevel};
use crate::scalar::{positive, Scalar};

// Guards ceil() against quotients like 11.000000000000002.
const CEIL_SLACK: f64 = 1e-9;

/// Test cases to execute per level and the historical execution rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseLoad<T> {
    /// Indexed by level ordinal.
    pub cases_per_level: Vec<u64>,
    /// Test cases per staff-week.
    pub execution_rate: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StaffConstraint<T> {
    /// Fixed head count.
    Staff(u32),
    /// Upper bound on calendar weeks.
    CalendarWeeks(T),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaffingEstimate<T> {
    pub staff: u32,
    pub staff_weeks: T,
    pub calendar_weeks: T,
}

/// Staffing from execution rates.
///
/// With a calendar constraint, staff is rounded up and calendar weeks are
/// recomputed, so `staff_weeks == staff * calendar_weeks` always holds and
/// the requested duration is an upper bound.
pub fn estimate_staffing<T: Scalar>(
    load: &CaseLoad<T>,
    level: &TestLevel,
    constraint: StaffConstraint<T>,
) -> Result<StaffingEstimate<T>, PlanningError> {
    if !positive(load.execution_rate) {
        return Err(PlanningError::ZeroRate);
    }
    match constraint {
        StaffConstraint::Staff(0) => return Err(PlanningError::ZeroConstraint),
        StaffConstraint::CalendarWeeks(w) if !positive(w) => return Err(PlanningError::ZeroConstraint),
        _ => {}
    }
    let cases =
        *load.cases_per_level.get(level.ordinal).ok_or_else(|| PlanningError::UnknownLevel(level.name.clone()))?;
    if cases == 0 {
        return Ok(StaffingEstimate { staff: 0, staff_weeks: T::zero(), calendar_weeks: T::zero() });
    }
    let staff_weeks = T::from_count(cases) / load.execution_rate;
    let staff = match constraint {
        StaffConstraint::Staff(n) => n,
        StaffConstraint::CalendarWeeks(weeks) => {
            let quotient = staff_weeks / weeks;
            let needed = (quotient - quotient * T::lit(CEIL_SLACK)).ceil();
            needed.to_u32().unwrap_or(u32::MAX).max(1)
        }
    };
    let calendar_weeks = staff_weeks / T::from_count(u64::from(staff));
    Ok(StaffingEstimate { staff, staff_weeks, calendar_weeks })
}

/// Per-level fractions of the worst-case staff-weeks, lowest level first.
///
/// Stored as weights relative to the last entry so that the default profile
/// (6, 12, 32, 60, 80 out of 80) scales exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingProfile<T> {
    weights: Vec<T>,
    staff_weights: Option<Vec<T>>,
}

impl<T: Scalar> Default for ScalingProfile<T> {
    /// Staff-weeks 6/12/32/60/80 and head count 2/2/4/5/5 relative to the top.
    fn default() -> Self {
        Self {
            weights: [6.0, 12.0, 32.0, 60.0, 80.0].map(T::lit).to_vec(),
            staff_weights: Some([2.0, 2.0, 4.0, 5.0, 5.0].map(T::lit).to_vec()),
        }
    }
}

impl<T: Scalar> ScalingProfile<T> {
    /// Staff-week fractions; the head count stays at the worst case's.
    pub fn from_fractions(fractions: Vec<T>) -> Result<Self, PlanningError> {
        let profile = Self { weights: fractions, staff_weights: None };
        profile.validate()?;
        match profile.weights.last() {
            Some(top) if *top == T::one() => Ok(profile),
            _ => Err(PlanningError::InvalidProfile("top fraction must be 1".into())),
        }
    }

    /// Head-count fractions relative to the worst case, one per level.
    pub fn with_staff_fractions(mut self, fractions: Vec<T>) -> Result<Self, PlanningError> {
        self.staff_weights = Some(fractions);
        self.validate()?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn fractions(&self) -> Vec<T> {
        let top = *self.weights.last().unwrap_or(&T::one());
        self.weights.iter().map(|w| *w / top).collect()
    }

    fn validate(&self) -> Result<(), PlanningError> {
        check_weights("staff-week", &self.weights)?;
        if let Some(staff) = &self.staff_weights {
            check_weights("staff", staff)?;
            if staff.len() != self.weights.len() {
                return Err(PlanningError::InvalidProfile("staff fractions must match the level count".into()));
            }
        }
        Ok(())
    }
}

fn check_weights<T: Scalar>(what: &str, weights: &[T]) -> Result<(), PlanningError> {
    let Some(top) = weights.last() else {
        return Err(PlanningError::InvalidProfile(format!("{what} profile is empty")));
    };
    if !positive(*top) {
        return Err(PlanningError::InvalidProfile(format!("{what} profile top must be > 0")));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
        return Err(PlanningError::InvalidProfile(format!("{what} fractions must be >= 0")));
    }
    if weights.windows(2).any(|w| w[1] < w[0]) {
        return Err(PlanningError::InvalidProfile(format!("{what} fractions must be nondecreasing")));
    }
    if weights.iter().any(|w| *w > *top) {
        return Err(PlanningError::InvalidProfile(format!("{what} fractions must not exceed the top")));
    }
    Ok(())
}

/// Scales a worst-case (top level) plan down the ladder.
///
/// `template` supplies the non-staffing fields of every level; its last entry
/// is replaced by `worst`. Each level gets `fraction * worst staff-weeks`,
/// head count from the staff profile (rounded, at least 1 when there is work)
/// and calendar weeks as staff-weeks over head count.
pub fn worst_case_scaling<T: Scalar>(
    worst: &LevelPlan<T>,
    template: &[LevelPlan<T>],
    profile: &ScalingProfile<T>,
) -> Result<Vec<LevelPlan<T>>, PlanningError> {
    profile.validate()?;
    if template.len() != profile.len() {
        return Err(PlanningError::InvalidProfile(format!(
            "profile has {} levels, ladder has {}",
            profile.len(),
            template.len()
        )));
    }
    let top = *profile.weights.last().expect("validated non-empty");
    let worst_staff_weeks = worst.staff_weeks();
    let worst_staff = T::from_count(u64::from(worst.staff));

    let mut plans = Vec::with_capacity(template.len());
    for (i, level) in template.iter().enumerate() {
        if i + 1 == template.len() {
            let mut top_plan = worst.clone();
            top_plan.level = level.level.clone();
            plans.push(top_plan);
            continue;
        }
        let staff_weeks = worst_staff_weeks * profile.weights[i] / top;
        let staff = match &profile.staff_weights {
            Some(sw) => {
                let staff_top = *sw.last().expect("validated non-empty");
                (worst_staff * sw[i] / staff_top).round().to_u32().unwrap_or(0)
            }
            None => worst.staff,
        };
        let staff = if staff_weeks > T::zero() { staff.max(1) } else { staff };
        let calendar_weeks = if staff == 0 {
            worst.calendar_weeks * profile.weights[i] / top
        } else {
            staff_weeks / T::from_count(u64::from(staff))
        };
        plans.push(LevelPlan { staff, calendar_weeks, ..level.clone() });
    }
    Ok(plans)
}
