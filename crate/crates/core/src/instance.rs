//! Problem instances and synchronized solutions, with their JSON forms.

use serde::{Deserialize, Serialize};

use crate::collision::collide_config;
use crate::error::{BenchError, ModelError};
use crate::geometry::{SphereObstacle, Vec3};
use crate::robots::{RobotModel, Scenario, State};

pub const INSTANCE_SCHEMA: &str = "mrmp-instance/1";

#[derive(Clone, Debug, PartialEq)]
pub struct Robot {
    pub model: RobotModel,
    pub start: State,
    pub goal: State,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub id: String,
    pub scenario: Scenario,
    pub robots: Vec<Robot>,
    pub obstacles: Vec<SphereObstacle>,
    pub seed: u64,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.robots.len()
    }

    pub fn models(&self) -> Vec<RobotModel> {
        self.robots.iter().map(|r| r.model.clone()).collect()
    }

    pub fn starts(&self) -> Vec<State> {
        self.robots.iter().map(|r| r.start.clone()).collect()
    }

    pub fn goals(&self) -> Vec<State> {
        self.robots.iter().map(|r| r.goal.clone()).collect()
    }

    /// Parameter sanity, obstacle-free endpoints, and no robot overlap at
    /// the start or goal configuration.
    pub fn validate(&self) -> Result<(), String> {
        if self.robots.is_empty() {
            return Err("instance has no robots".into());
        }
        for (i, r) in self.robots.iter().enumerate() {
            if r.model.scenario != self.scenario {
                return Err(format!(
                    "robot {i} has scenario {}, instance is {}",
                    r.model.scenario, self.scenario
                ));
            }
            r.model.validate().map_err(|e| format!("robot {i}: {e}"))?;
            for (what, q) in [("start", &r.start), ("goal", &r.goal)] {
                r.model
                    .check_state(q)
                    .map_err(|e| format!("robot {i} {what}: {e}"))?;
                if !r.model.is_valid(q, &self.obstacles) {
                    return Err(format!("robot {i} {what} is not obstacle-free"));
                }
            }
        }
        for o in &self.obstacles {
            if !(o.radius > 0.0 && o.center.is_finite()) {
                return Err("obstacle with non-positive radius or non-finite center".into());
            }
        }
        let models = self.models();
        for (what, cfg) in [("start", self.starts()), ("goal", self.goals())] {
            if collide_config(&models, &cfg, &cfg) {
                return Err(format!("robots overlap at the {what} configuration"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&InstanceDoc::from(self)).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let doc: InstanceDoc = serde_json::from_str(text)?;
        Instance::try_from(doc)
    }
}

/// Synchronized per-robot state sequences of equal length `T + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub paths: Vec<Vec<State>>,
}

impl Solution {
    pub fn makespan(&self) -> usize {
        self.paths.first().map_or(0, |p| p.len().saturating_sub(1))
    }

    pub fn config(&self, t: usize) -> Vec<State> {
        self.paths.iter().map(|p| p[t].clone()).collect()
    }

    /// Sum over robots of the configuration distance travelled.
    pub fn path_length(&self, models: &[RobotModel]) -> f64 {
        self.paths
            .iter()
            .zip(models)
            .map(|(p, m)| p.windows(2).map(|w| m.dist(&w[0], &w[1])).sum::<f64>())
            .sum()
    }

    /// Build from per-robot paths of possibly different lengths by letting
    /// robots that finish early wait at their last state.
    pub fn padded(mut paths: Vec<Vec<State>>) -> Self {
        let len = paths.iter().map(Vec::len).max().unwrap_or(0);
        for p in &mut paths {
            if let Some(last) = p.last().cloned() {
                p.resize(len, last);
            }
        }
        Solution { paths }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ObstacleDoc {
    center: Vec<f64>,
    radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct RobotDoc {
    radius: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    lengths: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    root: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    turning_radius: Option<f64>,
    start: State,
    goal: State,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct InstanceDoc {
    schema: String,
    id: String,
    scenario: Scenario,
    #[serde(rename = "N")]
    n: usize,
    robots: Vec<RobotDoc>,
    obstacles: Vec<ObstacleDoc>,
    seed: u64,
}

fn point_doc(p: Vec3, scenario: Scenario) -> Vec<f64> {
    p.to_array()[..scenario.workspace_dim().count()].to_vec()
}

fn point_from_doc(v: &[f64]) -> Result<Vec3, ModelError> {
    match *v {
        [x, y] => Ok(Vec3::xy(x, y)),
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(ModelError::InvalidParameter(format!(
            "point must have 2 or 3 coordinates, got {}",
            v.len()
        ))),
    }
}

impl From<&Instance> for InstanceDoc {
    fn from(inst: &Instance) -> Self {
        let sc = inst.scenario;
        InstanceDoc {
            schema: INSTANCE_SCHEMA.into(),
            id: inst.id.clone(),
            scenario: sc,
            n: inst.n(),
            robots: inst
                .robots
                .iter()
                .map(|r| RobotDoc {
                    radius: r.model.radius,
                    lengths: r.model.lengths.clone(),
                    root: r.model.root.map(|p| point_doc(p, sc)),
                    turning_radius: r.model.turning_radius,
                    start: r.start.clone(),
                    goal: r.goal.clone(),
                })
                .collect(),
            obstacles: inst
                .obstacles
                .iter()
                .map(|o| ObstacleDoc {
                    center: point_doc(o.center, sc),
                    radius: o.radius,
                })
                .collect(),
            seed: inst.seed,
        }
    }
}

impl TryFrom<InstanceDoc> for Instance {
    type Error = BenchError;

    fn try_from(doc: InstanceDoc) -> Result<Self, BenchError> {
        if doc.schema != INSTANCE_SCHEMA {
            return Err(BenchError::Invalid(format!(
                "unexpected schema `{}`",
                doc.schema
            )));
        }
        if doc.n != doc.robots.len() {
            return Err(BenchError::Invalid(format!(
                "N = {} but {} robots listed",
                doc.n,
                doc.robots.len()
            )));
        }
        let robots = doc
            .robots
            .into_iter()
            .map(|r| {
                let root = r.root.as_deref().map(point_from_doc).transpose()?;
                let model = RobotModel {
                    scenario: doc.scenario,
                    radius: r.radius,
                    lengths: r.lengths,
                    root,
                    turning_radius: r.turning_radius,
                };
                model.validate()?;
                model.check_state(&r.start)?;
                model.check_state(&r.goal)?;
                Ok(Robot {
                    model,
                    start: r.start,
                    goal: r.goal,
                })
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        let obstacles = doc
            .obstacles
            .iter()
            .map(|o| {
                Ok(SphereObstacle {
                    center: point_from_doc(&o.center)?,
                    radius: o.radius,
                })
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        Ok(Instance {
            id: doc.id,
            scenario: doc.scenario,
            robots,
            obstacles,
            seed: doc.seed,
        })
    }
}
