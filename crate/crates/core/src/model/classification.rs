use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationEntry {
    pub parameter_id: String,
    pub name: String,
    pub value: String,
}

/// Ordered parameter table describing the function under design.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FunctionClassification(pub Vec<ClassificationEntry>);

impl FunctionClassification {
    pub fn from_rows<'a>(rows: impl IntoIterator<Item = (&'a str, &'a str, &'a str)>) -> Self {
        FunctionClassification(
            rows.into_iter()
                .map(|(p, n, v)| ClassificationEntry {
                    parameter_id: p.to_owned(),
                    name: n.to_owned(),
                    value: v.to_owned(),
                })
                .collect(),
        )
    }

    pub fn get(&self, parameter_id: &str) -> Option<&ClassificationEntry> {
        self.0.iter().find(|e| e.parameter_id == parameter_id)
    }

    pub fn duplicate_ids(&self) -> Vec<String> {
        let mut seen = std::collections::BTreeSet::new();
        let mut dups = Vec::new();
        for e in &self.0 {
            if !seen.insert(e.parameter_id.as_str()) && !dups.contains(&e.parameter_id) {
                dups.push(e.parameter_id.clone());
            }
        }
        dups
    }

    /// Classification of a conditionally automated highway truck function.
    pub fn l3_highway_truck() -> Self {
        Self::from_rows([
            ("1.1", "Type", "Truck"),
            ("1.2.1", "Time to collision", "Large"),
            ("1.2.2", "Duration", "Continuous"),
            ("1.2.3", "Automation", "Level 3 conditional automation"),
            ("1.2.4", "Speed Range", "Low, Medium and high"),
            ("1.2.5", "Control force", "Low, Mid"),
            ("1.2.6", "Time headway", "Standard"),
            ("1.2.7", "Trigger", "1.2.7.1 System initiated"),
            ("1.2.8", "Coordination", "1.2.8.2 Without coordination"),
            ("2.1", "Driver qualification", "2.1.2 Professional"),
            ("2.2", "Driver Location", "2.2.1 Inside vehicle"),
            ("2.3", "Driver's Monitoring task", "2.3.2 Need not monitor"),
            ("2.4", "Driver activation", "2.4.1 Attentive 2.4.2 Inattentive"),
            ("2.5", "Driver is capable to control his vehicle", "2.5.2 Yes"),
            ("3.1.1", "Traffic mixed", "2.5.2 Yes"),
            ("3.1.2", "Traffic participants", "3.1.1.1 Yes"),
            ("3.1.3", "Traffic flow", "3.1.2.3 Motorized, type B"),
            ("3.2.1", "Road type", "N/A"),
            ("3.2.2", "Road accessibility", "3.2.2.1 Public 3.2.2.2 Private"),
            ("3.2.3", "Road condition", "3.2.3.1 Good 3.2.3.2 Slippery 3.2.3.3 Bumpy"),
            ("3.2.4", "Road geometry", "3.2.4.1 Straight 3.2.4.2 Curved 3.2.4.3 Steep"),
            (
                "3.2.5",
                "Road infrastructure",
                "3.2.5.1 Physical cut-off 3.2.5.2 Good lane markings 3.2.5.3 Guard rails 3.2.5.5 Emergency lanes",
            ),
            ("3.3.1", "Good visibility", "3.3.1.1 Good Visibility"),
            ("3.3.2", "Poor visibility due to obstacles", "3.3.2.1 Vehicles"),
            ("3.3.3", "Poor visibility due to weather conditions", "N/A"),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn highway_truck_table_has_unique_ids() {
        let c = FunctionClassification::l3_highway_truck();
        assert_eq!(c.0.len(), 25);
        assert!(c.duplicate_ids().is_empty());
        assert_eq!(c.get("1.2.3").unwrap().value, "Level 3 conditional automation");
    }

    #[test]
    fn duplicates_reported_once() {
        let c = FunctionClassification::from_rows([("1", "a", "x"), ("1", "b", "y"), ("1", "c", "z")]);
        assert_eq!(c.duplicate_ids(), vec!["1".to_owned()]);
    }
}
