use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::decision::Decision;

/// Decision the attacker wants the defender to take.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackGoal {
    DecisionEquals { target: Decision },
    DecisionInSet { targets: BTreeSet<Decision> },
}

/// Direction in which uniformly shifting the window should move the decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftDirection {
    Up,
    Down,
}

impl AttackGoal {
    pub fn equals(target: Decision) -> Self {
        AttackGoal::DecisionEquals { target }
    }

    /// Any inventory level `<= bound`.
    pub fn stock_at_most(bound: u64) -> Self {
        AttackGoal::DecisionInSet {
            targets: (0..=bound).map(Decision::Stock).collect(),
        }
    }

    pub fn contains(&self, decision: Decision) -> bool {
        match self {
            AttackGoal::DecisionEquals { target } => *target == decision,
            AttackGoal::DecisionInSet { targets } => targets.contains(&decision),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, AttackGoal::DecisionInSet { targets } if targets.is_empty())
    }

    fn bounds(&self) -> Option<(Decision, Decision)> {
        match self {
            AttackGoal::DecisionEquals { target } => Some((*target, *target)),
            AttackGoal::DecisionInSet { targets } => Some((*targets.first()?, *targets.last()?)),
        }
    }

    /// Shift directions worth trying from `current`: up when every target ranks
    /// above it, down when every target ranks below, otherwise both.
    pub fn directions_from(&self, current: Decision) -> Vec<ShiftDirection> {
        match self.bounds() {
            Some((lo, _)) if lo > current => vec![ShiftDirection::Up],
            Some((_, hi)) if hi < current => vec![ShiftDirection::Down],
            _ => vec![ShiftDirection::Up, ShiftDirection::Down],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_and_directions() {
        let place = AttackGoal::equals(Decision::Place);
        assert!(place.contains(Decision::Place));
        assert!(!place.contains(Decision::Skip));
        assert_eq!(
            place.directions_from(Decision::Skip),
            vec![ShiftDirection::Up]
        );

        let fewer = AttackGoal::stock_at_most(116);
        assert!(fewer.contains(Decision::Stock(116)));
        assert!(!fewer.contains(Decision::Stock(117)));
        assert_eq!(
            fewer.directions_from(Decision::Stock(136)),
            vec![ShiftDirection::Down]
        );
        assert_eq!(fewer.directions_from(Decision::Stock(50)).len(), 2);
    }

    #[test]
    fn serde_shape() {
        let g: AttackGoal =
            serde_json::from_str(r#"{"kind":"decision_equals","target":"place"}"#).unwrap();
        assert_eq!(g, AttackGoal::equals(Decision::Place));
        let g: AttackGoal =
            serde_json::from_str(r#"{"kind":"decision_in_set","targets":[1,2]}"#).unwrap();
        assert!(g.contains(Decision::Stock(2)));
        assert!(!AttackGoal::DecisionInSet {
            targets: BTreeSet::new()
        }
        .contains(Decision::Skip));
    }
}
