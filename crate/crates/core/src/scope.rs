//! Test Scope Matrix: which test activities run, and how thoroughly, at each
//! scope level.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScopeError {
    #[error("unknown inclusion grade '{0}'")]
    UnknownGrade(String),
    #[error("activity '{activity}' mixes grades from different scales")]
    MixedScale { activity: String },
    #[error("activity '{activity}' has {got} grades, expected {expected}")]
    RaggedRow { activity: String, expected: usize, got: usize },
    #[error("duplicate {kind} name '{name}'")]
    DuplicateName { kind: &'static str, name: String },
    #[error("{kind} name must not be empty")]
    EmptyName { kind: &'static str },
    #[error("grade regression in '{activity}' at level {level}: {from} -> {to}")]
    MonotonicityViolation { activity: String, level: String, from: Grade, to: Grade },
    #[error("no scope cell ({activity}, {level})")]
    UnknownCell { activity: String, level: String },
    #[error("level position {position} out of range (0..={max})")]
    BadPosition { position: usize, max: usize },
}

impl ScopeError {
    pub fn code(&self) -> &'static str {
        match self {
            ScopeError::UnknownGrade(_) => "unknown-grade",
            ScopeError::MixedScale { .. } => "mixed-scale",
            ScopeError::RaggedRow { .. } => "ragged-row",
            ScopeError::DuplicateName { .. } => "duplicate-name",
            ScopeError::EmptyName { .. } => "empty-name",
            ScopeError::MonotonicityViolation { .. } => "monotonicity-violation",
            ScopeError::UnknownCell { .. } => "unknown-cell",
            ScopeError::BadPosition { .. } => "bad-position",
        }
    }
}

/// Ordered grade scales. `No` is the bottom of all three.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GradeScale {
    /// No < Yes
    Binary,
    /// No < Minimal < Good < Complete
    Coverage,
    /// No < Subset < Changed/New < Most < All
    Feature,
}

impl GradeScale {
    pub const ALL: [GradeScale; 3] = [GradeScale::Binary, GradeScale::Coverage, GradeScale::Feature];

    pub fn grades(self) -> &'static [Grade] {
        use Grade::*;
        match self {
            GradeScale::Binary => &[No, Yes],
            GradeScale::Coverage => &[No, Minimal, Good, Complete],
            GradeScale::Feature => &[No, Subset, ChangedNew, Most, All],
        }
    }

    pub fn contains(self, grade: Grade) -> bool {
        self.grades().contains(&grade)
    }
}

/// Inclusion grade of one activity at one scope level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Grade {
    No,
    Yes,
    Minimal,
    Good,
    Complete,
    Subset,
    ChangedNew,
    Most,
    All,
}

impl Grade {
    pub fn label(self) -> &'static str {
        match self {
            Grade::No => "No",
            Grade::Yes => "Yes",
            Grade::Minimal => "Minimal",
            Grade::Good => "Good",
            Grade::Complete => "Complete",
            Grade::Subset => "Subset",
            Grade::ChangedNew => "Changed/New",
            Grade::Most => "Most",
            Grade::All => "All",
        }
    }

    /// Position within the scales that contain it. `No` is 0 everywhere.
    pub fn rank(self) -> u8 {
        match self {
            Grade::No => 0,
            Grade::Yes | Grade::Minimal | Grade::Subset => 1,
            Grade::Good | Grade::ChangedNew => 2,
            Grade::Complete | Grade::Most => 3,
            Grade::All => 4,
        }
    }

    /// The unique scale holding this grade, or `None` for `No`.
    pub fn scale(self) -> Option<GradeScale> {
        match self {
            Grade::No => None,
            Grade::Yes => Some(GradeScale::Binary),
            Grade::Minimal | Grade::Good | Grade::Complete => Some(GradeScale::Coverage),
            Grade::Subset | Grade::ChangedNew | Grade::Most | Grade::All => Some(GradeScale::Feature),
        }
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Grade {
    type Err = ScopeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.trim().chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
        Ok(match key.as_str() {
            "no" => Grade::No,
            "yes" => Grade::Yes,
            "minimal" => Grade::Minimal,
            "good" => Grade::Good,
            "complete" => Grade::Complete,
            "subset" => Grade::Subset,
            "changed/new" | "changednew" | "changed_new" => Grade::ChangedNew,
            "most" => Grade::Most,
            "all" => Grade::All,
            _ => return Err(ScopeError::UnknownGrade(s.to_string())),
        })
    }
}

impl Serialize for Grade {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Grade {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// Scale shared by every grade in a row. A row of only `No` has no scale;
/// a row mixing scales yields the first two that conflict.
pub fn row_scale(grades: &[Grade]) -> Result<Option<GradeScale>, (GradeScale, GradeScale)> {
    let mut scale = None;
    for grade in grades {
        match (scale, grade.scale()) {
            (_, None) => {}
            (None, Some(s)) => scale = Some(s),
            (Some(a), Some(b)) if a == b => {}
            (Some(a), Some(b)) => return Err((a, b)),
        }
    }
    Ok(scale)
}

/// One activity row of the scope matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivityRow {
    pub name: String,
    pub grades: Vec<Grade>,
}

/// A cell whose grade is lower than the one to its left.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradeRegression {
    pub activity: String,
    pub level: String,
    pub from: Grade,
    pub to: Grade,
}

/// Activity × scope-level inclusion grid.
///
/// Shape (filled cells, unique names, one scale per row) is enforced on
/// construction. Monotonicity is a validation concern: a matrix with a
/// regression can exist so it can be reported, but [`extend`] refuses to
/// produce one.
///
/// [`extend`]: ScopeMatrix::extend
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScopeMatrix {
    levels: Vec<String>,
    activities: Vec<ActivityRow>,
}

impl<'de> Deserialize<'de> for ScopeMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            levels: Vec<String>,
            activities: Vec<ActivityRow>,
        }
        let raw = Raw::deserialize(deserializer)?;
        ScopeMatrix::new(raw.levels, raw.activities).map_err(serde::de::Error::custom)
    }
}

impl ScopeMatrix {
    pub fn new(levels: Vec<String>, activities: Vec<ActivityRow>) -> Result<Self, ScopeError> {
        check_names("level", levels.iter().map(String::as_str))?;
        check_names("activity", activities.iter().map(|a| a.name.as_str()))?;
        for row in &activities {
            if row.grades.len() != levels.len() {
                return Err(ScopeError::RaggedRow {
                    activity: row.name.clone(),
                    expected: levels.len(),
                    got: row.grades.len(),
                });
            }
            if row_scale(&row.grades).is_err() {
                return Err(ScopeError::MixedScale { activity: row.name.clone() });
            }
        }
        Ok(Self { levels, activities })
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn activities(&self) -> &[ActivityRow] {
        &self.activities
    }

    pub fn level_index(&self, label: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == label)
    }

    pub fn activity_index(&self, name: &str) -> Option<usize> {
        self.activities.iter().position(|a| a.name == name)
    }

    pub fn grade(&self, activity: &str, level: &str) -> Option<Grade> {
        let a = self.activity_index(activity)?;
        let l = self.level_index(level)?;
        Some(self.activities[a].grades[l])
    }

    /// Grades of every activity in one scope column.
    pub fn column(&self, level: &str) -> Option<Vec<(&str, Grade)>> {
        let l = self.level_index(level)?;
        Some(self.activities.iter().map(|a| (a.name.as_str(), a.grades[l])).collect())
    }

    /// Replaces one cell, keeping the row on a single scale.
    pub fn with_grade(&self, activity: &str, level: &str, grade: Grade) -> Result<Self, ScopeError> {
        let mut next = self.clone();
        let unknown = || ScopeError::UnknownCell { activity: activity.to_string(), level: level.to_string() };
        let a = self.activity_index(activity).ok_or_else(unknown)?;
        let l = self.level_index(level).ok_or_else(unknown)?;
        next.activities[a].grades[l] = grade;
        if row_scale(&next.activities[a].grades).is_err() {
            return Err(ScopeError::MixedScale { activity: activity.to_string() });
        }
        Ok(next)
    }

    /// Every adjacent pair (left to right) where the grade drops.
    pub fn regressions(&self) -> Vec<GradeRegression> {
        let mut out = Vec::new();
        for row in &self.activities {
            for (i, pair) in row.grades.windows(2).enumerate() {
                if pair[1].rank() < pair[0].rank() {
                    out.push(GradeRegression {
                        activity: row.name.clone(),
                        level: self.levels[i + 1].clone(),
                        from: pair[0],
                        to: pair[1],
                    });
                }
            }
        }
        out
    }

    pub fn check_monotone(&self) -> Result<(), ScopeError> {
        match self.regressions().into_iter().next() {
            None => Ok(()),
            Some(r) => {
                Err(ScopeError::MonotonicityViolation { activity: r.activity, level: r.level, from: r.from, to: r.to })
            }
        }
    }

    /// Returns a copy grown by a new activity row and/or a new scope level.
    ///
    /// `new_level` is `(label, position, grades)` where `grades` lists one
    /// grade per activity of the grown matrix, including `new_activity` when
    /// both are given. The result must stay monotone.
    pub fn extend(
        &self,
        new_activity: Option<ActivityRow>,
        new_level: Option<(String, usize, Vec<Grade>)>,
    ) -> Result<Self, ScopeError> {
        let mut levels = self.levels.clone();
        let mut activities = self.activities.clone();
        if let Some(row) = new_activity {
            activities.push(row);
        }
        if let Some((label, position, grades)) = new_level {
            if position > levels.len() {
                return Err(ScopeError::BadPosition { position, max: levels.len() });
            }
            if grades.len() != activities.len() {
                return Err(ScopeError::RaggedRow {
                    activity: format!("level {label}"),
                    expected: activities.len(),
                    got: grades.len(),
                });
            }
            levels.insert(position, label);
            for (row, grade) in activities.iter_mut().zip(grades) {
                // Rows appended above already have the new level's width.
                if row.grades.len() < levels.len() {
                    row.grades.insert(position, grade);
                }
            }
        }
        let grown = Self::new(levels, activities)?;
        grown.check_monotone()?;
        Ok(grown)
    }
}

fn check_names<'a>(kind: &'static str, names: impl Iterator<Item = &'a str>) -> Result<(), ScopeError> {
    let mut seen = std::collections::HashSet::new();
    for name in names {
        if name.trim().is_empty() {
            return Err(ScopeError::EmptyName { kind });
        }
        if !seen.insert(name) {
            return Err(ScopeError::DuplicateName { kind, name: name.to_string() });
        }
    }
    Ok(())
}

/// The standard five-activity grid over scope levels A to E.
pub fn default_scope_matrix() -> ScopeMatrix {
    use Grade::*;
    let row = |name: &str, grades: [Grade; 5]| ActivityRow { name: name.to_string(), grades: grades.to_vec() };
    ScopeMatrix::new(
        ["A", "B", "C", "D", "E"].iter().map(|s| s.to_string()).collect(),
        vec![
            row("Sanity", [Yes, Yes, Yes, Yes, Yes]),
            row("Features", [Subset, ChangedNew, Most, All, All]),
            row("Regression", [No, No, Minimal, Good, Complete]),
            row("Stress", [No, No, No, Good, Complete]),
            row("Load", [No, No, Minimal, Good, Complete]),
        ],
    )
    .expect("default scope matrix is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use Grade::*;

    #[test]
    fn default_rows() {
        let m = default_scope_matrix();
        for level in ["A", "B", "C", "D", "E"] {
            assert_eq!(m.grade("Sanity", level), Some(Yes));
        }
        assert_eq!(m.grade("Stress", "A"), Some(No));
        assert_eq!(m.grade("Stress", "D"), Some(Good));
        assert_eq!(m.grade("Stress", "E"), Some(Complete));
        assert_eq!(m.grade("Features", "B"), Some(ChangedNew));
        assert!(m.regressions().is_empty());
    }

    #[test]
    fn grade_labels_parse_back() {
        for scale in GradeScale::ALL {
            for g in scale.grades() {
                assert_eq!(g.label().parse::<Grade>().unwrap(), *g);
            }
        }
        assert_eq!(" changed / new ".parse::<Grade>().unwrap(), ChangedNew);
        assert!("Partial".parse::<Grade>().is_err());
    }

    #[test]
    fn ranks_follow_scales() {
        for scale in GradeScale::ALL {
            let ranks: Vec<u8> = scale.grades().iter().map(|g| g.rank()).collect();
            assert!(ranks.windows(2).all(|w| w[0] < w[1]), "{scale:?}");
        }
    }

    #[test]
    fn add_activity() {
        let m = default_scope_matrix();
        let perf = ActivityRow { name: "Performance".into(), grades: vec![No, No, Minimal, Good, Complete] };
        let grown = m.extend(Some(perf), None).unwrap();
        assert_eq!(grown.activities().len(), 6);
        assert_eq!(m.activities().len(), 5);
    }

    #[test]
    fn add_gray_scale_level() {
        let m = default_scope_matrix();
        let a_grades: Vec<Grade> = m.column("A").unwrap().into_iter().map(|(_, g)| g).collect();
        let grown = m.extend(None, Some(("A'".into(), 1, a_grades))).unwrap();
        assert_eq!(grown.levels(), &["A", "A'", "B", "C", "D", "E"]);
        assert!(grown.regressions().is_empty());
        assert_eq!(grown.grade("Features", "A'"), Some(Subset));
    }

    #[test]
    fn add_both_directions_at_once() {
        let m = default_scope_matrix();
        let row = ActivityRow { name: "Security".into(), grades: vec![No, No, No, Minimal, Good] };
        let level_grades = vec![Yes, All, Good, Good, Good, Minimal];
        let grown = m.extend(Some(row), Some(("D+".into(), 4, level_grades))).unwrap();
        assert_eq!(grown.levels().len(), 6);
        assert_eq!(grown.grade("Security", "D+"), Some(Minimal));
        assert_eq!(grown.grade("Load", "D+"), Some(Good));
    }

    #[test]
    fn extension_errors() {
        let m = default_scope_matrix();
        let bad = ActivityRow { name: "Usability".into(), grades: vec![Complete, No, No, No, No] };
        assert_eq!(m.extend(Some(bad), None).unwrap_err().code(), "monotonicity-violation");
        let dup = ActivityRow { name: "Load".into(), grades: vec![No; 5] };
        assert_eq!(m.extend(Some(dup), None).unwrap_err().code(), "duplicate-name");
        let dup_level = ("C".to_string(), 2, vec![Yes, Most, Minimal, No, Minimal]);
        assert_eq!(m.extend(None, Some(dup_level)).unwrap_err().code(), "duplicate-name");
        let mixed = ActivityRow { name: "Docs".into(), grades: vec![No, Yes, Good, Good, Good] };
        assert_eq!(m.extend(Some(mixed), None).unwrap_err().code(), "mixed-scale");
    }

    #[test]
    fn regression_is_located() {
        let m = default_scope_matrix().with_grade("Regression", "B", Good).unwrap();
        let found = m.regressions();
        assert_eq!(found.len(), 1);
        assert_eq!((found[0].activity.as_str(), found[0].level.as_str()), ("Regression", "C"));
    }
}
