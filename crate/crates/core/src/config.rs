//! JSON scenario files.
//!
//! Agent indices in the file (graph edges, overrides) are 1-based. Unknown
//! keys are rejected. [`ScenarioFile::normalized`] fills in every default so
//! that a dumped file reloads to the same scenario.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::controller::{ControllerGains, EscalationPolicy};
use crate::error::{Error, Result};
use crate::expr::CompiledExpr;
use crate::game::{CostFn, GameSpec};
use crate::generator::{min_gamma2, GeneratorGains, GAMMA2_MARGIN};
use crate::graph::CommGraph;
use crate::internal_model::{InternalModelConfig, StabilizerOverride, StabilizerPair, StabilizerPreset};
use crate::numerics::Matrix;
use crate::plant::{example_plant, AgentDynamics, ExprAgent, ExprAgentSource, Exosystem, PlantModel};
use crate::simulation::{AgentInit, EstimateInit, InitSpec, Scenario, ScenarioParts, SimSettings, DEFAULT_DECIMATE};

/// Starting gain for every `k_s` when the file asks for `"auto"`.
pub const AUTO_K: f64 = 4.0;
pub const DEFAULT_GAMMA1: f64 = 1.0;
pub const DEFAULT_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Auto {
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutoOr<T> {
    Value(T),
    Auto(Auto),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GameSection {
    Quadratic {
        h1: Vec<f64>,
        h2: Vec<f64>,
        h3: Vec<f64>,
    },
    /// Costs in the variables `y1..yN`.
    Custom {
        costs: Vec<String>,
        sample_box: (f64, f64),
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdgeSpec {
    Weighted(usize, usize, f64),
    Unit(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub edges: Vec<EdgeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerAgent<T> {
    Each(Vec<T>),
    Shared(T),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantSection {
    /// The four-parameter-group benchmark plant; `w` perturbs `g` additively.
    Benchmark {
        g: PerAgent<[f64; 6]>,
        w_box: Vec<(f64, f64)>,
    },
    /// Expression-defined plant shared by all agents.
    Custom {
        f0: Vec<String>,
        drift: Vec<String>,
        steady_zero: Vec<String>,
        im_coeffs: Vec<Vec<f64>>,
        w_box: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExoSection {
    #[serde(rename = "S")]
    pub s: Vec<Vec<f64>>,
    pub v0_box: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    #[default]
    Factorial,
    Benchmark,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverrideSection {
    pub agent: usize,
    pub level: usize,
    #[serde(rename = "M")]
    pub m: Vec<Vec<f64>>,
    #[serde(rename = "N")]
    pub n: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ImSection {
    #[serde(default)]
    pub preset: PresetName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<OverrideSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    #[serde(default = "default_gamma1")]
    pub gamma1: f64,
    #[serde(default = "auto")]
    pub gamma2: AutoOr<f64>,
}

impl Default for GainsSection {
    fn default() -> Self {
        GainsSection {
            gamma1: DEFAULT_GAMMA1,
            gamma2: AutoOr::Auto(Auto::Auto),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EscalationSection {
    #[serde(default = "default_factor")]
    pub factor: f64,
    #[serde(default = "default_rounds")]
    pub max_rounds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    #[serde(default = "auto")]
    pub k: AutoOr<Vec<Vec<f64>>>,
    /// Enabled when `k` is `"auto"` or this section is present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub escalation: Option<EscalationSection>,
}

impl Default for ControllerSection {
    fn default() -> Self {
        ControllerSection {
            k: AutoOr::Auto(Auto::Auto),
            escalation: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKeyword {
    Zero,
    Equilibrium,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKeyword {
    Random,
    Manifold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KeywordOr<K, T> {
    Keyword(K),
    Value(T),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    #[serde(default = "zero_estimates")]
    pub estimates: KeywordOr<EstimateKeyword, Vec<Vec<f64>>>,
    #[serde(default = "random_agents")]
    pub agents: KeywordOr<AgentKeyword, Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<Vec<f64>>>,
}

impl Default for InitSection {
    fn default() -> Self {
        InitSection {
            estimates: zero_estimates(),
            agents: random_agents(),
            v0: None,
            w: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub t_final: f64,
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(rename = "R", default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_decimate")]
    pub decimate: usize,
    #[serde(default)]
    pub init: InitSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub game: GameSection,
    pub graph: GraphSection,
    pub plant: PlantSection,
    pub exosystem: ExoSection,
    #[serde(default)]
    pub internal_model: ImSection,
    #[serde(default)]
    pub gains: GainsSection,
    #[serde(default)]
    pub controller: ControllerSection,
    pub sim: SimSection,
}

fn default_gamma1() -> f64 {
    DEFAULT_GAMMA1
}
fn auto<T>() -> AutoOr<T> {
    AutoOr::Auto(Auto::Auto)
}
fn default_factor() -> f64 {
    EscalationPolicy::default().factor
}
fn default_rounds() -> usize {
    EscalationPolicy::default().max_rounds
}
fn default_radius() -> f64 {
    DEFAULT_RADIUS
}
fn default_decimate() -> usize {
    DEFAULT_DECIMATE
}
fn zero_estimates() -> KeywordOr<EstimateKeyword, Vec<Vec<f64>>> {
    KeywordOr::Keyword(EstimateKeyword::Zero)
}
fn random_agents() -> KeywordOr<AgentKeyword, Vec<Vec<f64>>> {
    KeywordOr::Keyword(AgentKeyword::Random)
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<Matrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Config(format!("{what}: rows have different lengths")));
    }
    Matrix::from_vec(rows.len(), cols, rows.concat()).map_err(|e| Error::Config(format!("{what}: {e}")))
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("scenario file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        ScenarioFile::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario files always serialize")
    }

    pub fn n_agents(&self) -> usize {
        match &self.game {
            GameSection::Quadratic { h1, .. } => h1.len(),
            GameSection::Custom { costs, .. } => costs.len(),
        }
    }

    /// Same scenario with every default written out and shared values
    /// expanded per agent.
    pub fn normalized(&self) -> ScenarioFile {
        let mut out = self.clone();
        let n = self.n_agents();
        out.graph.n = Some(self.graph.n.unwrap_or(n));
        out.graph.edges = self
            .graph
            .edges
            .iter()
            .map(|e| match *e {
                EdgeSpec::Unit(i, j) => EdgeSpec::Weighted(i, j, 1.0),
                ref w => w.clone(),
            })
            .collect();
        if let PlantSection::Benchmark { g: PerAgent::Shared(g), .. } = &self.plant {
            if let PlantSection::Benchmark { g: out_g, .. } = &mut out.plant {
                *out_g = PerAgent::Each(vec![*g; n]);
            }
        }
        out
    }

    pub fn game_spec(&self) -> Result<GameSpec> {
        match &self.game {
            GameSection::Quadratic { h1, h2, h3 } => GameSpec::quadratic(h1.clone(), h2.clone(), h3.clone()),
            GameSection::Custom { costs, sample_box } => {
                let vars: Vec<String> = (1..=costs.len()).map(|k| format!("y{k}")).collect();
                let fns = costs
                    .iter()
                    .map(|c| {
                        let e = CompiledExpr::parse(c, &vars)?;
                        Ok(Arc::new(move |y: &[f64]| e.eval(y)) as CostFn)
                    })
                    .collect::<Result<Vec<_>>>()?;
                GameSpec::custom(fns, *sample_box)
            }
        }
    }

    pub fn comm_graph(&self) -> Result<CommGraph> {
        let n = self.graph.n.unwrap_or(self.n_agents());
        let edges = self
            .graph
            .edges
            .iter()
            .map(|e| {
                let (i, j, w) = match *e {
                    EdgeSpec::Weighted(i, j, w) => (i, j, w),
                    EdgeSpec::Unit(i, j) => (i, j, 1.0),
                };
                if i == 0 || j == 0 {
                    return Err(Error::Config(format!("graph.edges: agents are numbered from 1, got ({i}, {j})")));
                }
                Ok((i - 1, j - 1, w))
            })
            .collect::<Result<Vec<_>>>()?;
        CommGraph::from_edges(n, &edges)
    }

    pub fn plant_model(&self) -> Result<PlantModel> {
        let n = self.n_agents();
        match &self.plant {
            PlantSection::Benchmark { g, .. } => {
                let gs = match g {
                    PerAgent::Shared(g) => vec![*g; n],
                    PerAgent::Each(gs) if gs.len() == n => gs.clone(),
                    PerAgent::Each(gs) => {
                        return Err(Error::Config(format!("plant.g has {} rows for {n} agents", gs.len())));
                    }
                };
                example_plant(&gs)
            }
            PlantSection::Custom {
                f0,
                drift,
                steady_zero,
                im_coeffs,
                w_box,
            } => {
                let agent = ExprAgent::compile(&ExprAgentSource {
                    n_v: self.exosystem.s.len(),
                    n_w: w_box.len(),
                    f0: f0.clone(),
                    drift: drift.clone(),
                    steady_zero: steady_zero.clone(),
                    im_coeffs: im_coeffs.clone(),
                })?;
                let shared: Arc<dyn AgentDynamics> = Arc::new(agent);
                PlantModel::new(vec![shared; n])
            }
        }
    }

    pub fn w_box(&self) -> Vec<(f64, f64)> {
        match &self.plant {
            PlantSection::Benchmark { w_box, .. } | PlantSection::Custom { w_box, .. } => w_box.clone(),
        }
    }

    pub fn exosystem(&self) -> Result<Exosystem> {
        Exosystem::new(matrix(&self.exosystem.s, "exosystem.S")?, self.exosystem.v0_box.clone())
    }

    pub fn im_config(&self) -> Result<InternalModelConfig> {
        let preset = match self.internal_model.preset {
            PresetName::Factorial => StabilizerPreset::Factorial,
            PresetName::Benchmark => StabilizerPreset::Benchmark,
        };
        let overrides = self
            .internal_model
            .overrides
            .iter()
            .map(|o| {
                if o.agent == 0 {
                    return Err(Error::Config("internal_model.overrides: agents are numbered from 1".into()));
                }
                Ok(StabilizerOverride {
                    agent: o.agent - 1,
                    level: o.level,
                    pair: StabilizerPair::new(matrix(&o.m, "internal_model override M")?, o.n.clone())
                        .map_err(|e| e.in_component(format!("internal model override (agent {}, level {})", o.agent, o.level)))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(InternalModelConfig {
            preset,
            overrides,
            coeffs: self.internal_model.coeffs.clone(),
        })
    }

    fn init_spec(&self) -> Result<InitSpec> {
        let init = &self.sim.init;
        Ok(InitSpec {
            estimates: match &init.estimates {
                KeywordOr::Keyword(EstimateKeyword::Zero) => EstimateInit::Zero,
                KeywordOr::Keyword(EstimateKeyword::Equilibrium) => EstimateInit::Equilibrium,
                KeywordOr::Value(rows) => EstimateInit::Explicit(matrix(rows, "sim.init.estimates")?),
            },
            agents: match &init.agents {
                KeywordOr::Keyword(AgentKeyword::Random) => AgentInit::Random,
                KeywordOr::Keyword(AgentKeyword::Manifold) => AgentInit::Manifold,
                KeywordOr::Value(rows) => AgentInit::Explicit(rows.clone()),
            },
            v0: init.v0.clone(),
            w: init.w.clone(),
        })
    }

    /// Validates the file and runs all synthesis steps.
    pub fn build(&self) -> Result<Scenario> {
        let n = self.n_agents();
        let game = self.game_spec()?;
        let graph = self.comm_graph()?;
        let plant = self.plant_model()?;
        let exo = self.exosystem()?;
        let r = plant.relative_degree();
        let gamma2 = match self.gains.gamma2 {
            AutoOr::Value(v) => v,
            AutoOr::Auto(_) => {
                let constants = game.estimate_constants()?;
                GAMMA2_MARGIN * min_gamma2(&constants, &graph)?
            }
        };
        let generator = GeneratorGains::new(self.gains.gamma1, gamma2)?;
        let controller = match &self.controller.k {
            AutoOr::Auto(_) => ControllerGains::uniform(n, r, AUTO_K)?,
            AutoOr::Value(k) => ControllerGains::new(k.clone())?,
        };
        let escalation = match (&self.controller.k, self.controller.escalation) {
            (_, Some(e)) => Some(EscalationPolicy {
                factor: e.factor,
                max_rounds: e.max_rounds,
            }),
            (AutoOr::Auto(_), None) => Some(EscalationPolicy::default()),
            (AutoOr::Value(_), None) => None,
        };
        if let Some(p) = escalation {
            if !(p.factor > 1.0) {
                return Err(Error::Config(format!("controller.escalation.factor must exceed 1, got {}", p.factor)));
            }
        }
        Scenario::new(ScenarioParts {
            game,
            graph,
            plant,
            exo,
            w_box: self.w_box(),
            im_config: self.im_config()?,
            generator,
            controller,
            escalation,
            sim: SimSettings {
                t_final: self.sim.t_final,
                dt: self.sim.dt,
                seed: self.sim.seed,
                radius: self.sim.radius,
                decimate: self.sim.decimate,
            },
            init: self.init_spec()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "game": {"kind": "quadratic", "h1": [1, 1], "h2": [0, 0], "h3": [0, 0]},
        "graph": {"edges": [[1, 2]]},
        "plant": {"kind": "benchmark", "g": [-1, 1, 0.5, 1, 0.2, -0.3], "w_box": [[0,0],[0,0],[0,0],[0,0],[0,0],[0,0]]},
        "exosystem": {"S": [[0, 1], [-1, 0]], "v0_box": [[0.5, 1], [0.5, 1]]},
        "sim": {"t_final": 1, "dt": 0.001}
    }"#;

    #[test]
    fn minimal_file_builds() {
        let f = ScenarioFile::parse(MINIMAL).unwrap();
        let sc = f.build().unwrap();
        assert_eq!(sc.n(), 2);
        assert_eq!(sc.controller.k, vec![vec![AUTO_K; 2]; 2]);
        assert!(sc.escalation.is_some());
        assert_eq!(sc.sim.decimate, DEFAULT_DECIMATE);
        assert_eq!(sc.p_star, vec![1.0, 1.0]);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replace("\"dt\": 0.001", "\"dt\": 0.001, \"bogus\": 1");
        let err = ScenarioFile::parse(&text).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn normalized_round_trip() {
        let f = ScenarioFile::parse(MINIMAL).unwrap().normalized();
        let again = ScenarioFile::parse(&f.to_json()).unwrap();
        assert_eq!(again, f);
        assert_eq!(again.normalized(), f);
    }

    #[test]
    fn disconnected_graph_rejected() {
        let text = MINIMAL
            .replace("\"h1\": [1, 1], \"h2\": [0, 0], \"h3\": [0, 0]", "\"h1\": [1, 1, 1], \"h2\": [0, 0, 0], \"h3\": [0, 0, 0]");
        let err = ScenarioFile::parse(&text).unwrap().build().unwrap_err();
        assert!(matches!(err, Error::Disconnected { .. }), "{err}");
    }

    #[test]
    fn explicit_gains_disable_escalation() {
        let text = MINIMAL.replace("\"sim\"", "\"controller\": {\"k\": [[2, 3], [2, 3]]}, \"sim\"");
        let sc = ScenarioFile::parse(&text).unwrap().build().unwrap();
        assert!(sc.escalation.is_none());
        assert_eq!(sc.controller.k[1], vec![2.0, 3.0]);
    }

    #[test]
    fn custom_game_parses() {
        let text = MINIMAL.replace(
            "{\"kind\": \"quadratic\", \"h1\": [1, 1], \"h2\": [0, 0], \"h3\": [0, 0]}",
            "{\"kind\": \"custom\", \"costs\": [\"(y1-1)^2\", \"(y2+1)^2 + y1*y2\"], \"sample_box\": [-3, 3]}",
        );
        let sc = ScenarioFile::parse(&text).unwrap().build().unwrap();
        assert!((sc.p_star[0] - 1.0).abs() < 1e-6);
        assert!((sc.p_star[1] + 1.5).abs() < 1e-6);
    }
}
