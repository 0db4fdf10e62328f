//! JSON documents for solutions and roadmaps.

use serde::{Deserialize, Serialize};

use super::runner::SolverKind;
use crate::error::BenchError;
use crate::geometry::SphereObstacle;
use crate::instance::Solution;
use crate::postprocess::{path_length, total_traveling_time};
use crate::roadmap::{Roadmap, RoadmapDoc};
use crate::robots::{RobotModel, State};

pub const SOLUTION_SCHEMA: &str = "mrmp-solution/1";
pub const ROADMAPS_SCHEMA: &str = "mrmp-roadmaps/1";

/// Deterministic solution quality figures (no wall-clock values).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Sum over robots of configuration distance travelled.
    pub path_length: f64,
    pub total_travel_time: f64,
    pub total_travel_time_normalized: f64,
}

impl Metrics {
    pub fn compute(
        solution: &Solution,
        models: &[RobotModel],
        obstacles: &[SphereObstacle],
        seed: u64,
    ) -> Self {
        let (_, tt) = total_traveling_time(solution, models, obstacles, seed);
        Metrics {
            path_length: models
                .iter()
                .zip(&solution.paths)
                .map(|(m, p)| path_length(m, p))
                .sum(),
            total_travel_time: tt.raw,
            total_travel_time_normalized: tt.normalized,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub schema: String,
    pub instance_id: String,
    pub solver: SolverKind,
    pub paths: Vec<Vec<State>>,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Metrics>,
}

impl SolutionDoc {
    pub fn new(
        instance_id: &str,
        solver: SolverKind,
        solution: &Solution,
        metrics: Option<Metrics>,
    ) -> Self {
        SolutionDoc {
            schema: SOLUTION_SCHEMA.into(),
            instance_id: instance_id.into(),
            solver,
            paths: solution.paths.clone(),
            t: solution.makespan(),
            metrics,
        }
    }

    pub fn solution(&self) -> Solution {
        Solution {
            paths: self.paths.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let doc: SolutionDoc = serde_json::from_str(text)?;
        if doc.schema != SOLUTION_SCHEMA {
            return Err(BenchError::Invalid(format!(
                "unexpected schema `{}`",
                doc.schema
            )));
        }
        Ok(doc)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoadmapsDoc {
    pub schema: String,
    pub instance_id: String,
    pub roadmaps: Vec<RoadmapDoc>,
}

impl RoadmapsDoc {
    pub fn new(instance_id: &str, roadmaps: &[Roadmap]) -> Self {
        RoadmapsDoc {
            schema: ROADMAPS_SCHEMA.into(),
            instance_id: instance_id.into(),
            roadmaps: roadmaps.iter().map(Roadmap::to_doc).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("roadmaps serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let doc: RoadmapsDoc = serde_json::from_str(text)?;
        if doc.schema != ROADMAPS_SCHEMA {
            return Err(BenchError::Invalid(format!(
                "unexpected schema `{}`",
                doc.schema
            )));
        }
        Ok(doc)
    }

    pub fn roadmaps(&self) -> Result<Vec<Roadmap>, BenchError> {
        self.roadmaps
            .iter()
            .map(|d| Roadmap::from_doc(d).map_err(BenchError::Invalid))
            .collect()
    }
}
