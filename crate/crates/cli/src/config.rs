use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use uavsim_core::channel::ChannelParams;
use uavsim_core::contract::EconomicParams;
use uavsim_core::ingest::{DetectConfig, LabelConfig, ParseOptions, PartitionConfig, SyntheticSpec};
use uavsim_core::learning::LearningConfig;
use uavsim_core::mixture::FitOptions;
use uavsim_core::placement::PlacementConfig;
use uavsim_core::sim::{ModelParams, Policy, SimConfig};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub bs_file: Option<PathBuf>,
    pub traffic_file: Option<PathBuf>,
    pub parse: ParseOptions,
    pub partition: PartitionConfig<f64>,
    pub labels: LabelConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub policies: Vec<Policy>,
    pub fleet_sizes: Vec<usize>,
    /// Scenario seeds are `seed, seed + 1, ...`.
    pub replicates: u64,
    pub ratios: Vec<f64>,
    /// Learning trials per ratio.
    pub trials: u64,
    pub kmean_k: Vec<usize>,
    /// Components of the unweighted UE mixture behind the EM baseline.
    pub em_components: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            policies: Policy::ALL.to_vec(),
            fleet_sizes: vec![2, 6, 10, 14],
            replicates: 10,
            ratios: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            trials: 20,
            kmean_k: vec![1, 3, 10],
            em_components: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContractCheckConfig {
    pub demand_bits: f64,
    pub grid_size: usize,
}

impl Default for ContractCheckConfig {
    fn default() -> Self {
        Self { demand_bits: 1e10, grid_size: 200 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub econ: EconomicParams<f64>,
    pub channel: ChannelParams<f64>,
    pub learning: LearningConfig<f64>,
    pub placement: PlacementConfig<f64>,
    pub sim: SimConfig<f64>,
    pub mixture: FitOptions<f64>,
    pub synthetic: SyntheticSpec,
    pub dataset: DatasetConfig,
    pub detect: DetectConfig<f64>,
    pub sweep: SweepConfig,
    pub contract: ContractCheckConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn model(&self) -> ModelParams<f64> {
        ModelParams {
            econ: self.econ,
            channel: self.channel,
            learning: self.learning,
            placement: self.placement,
            sim: self.sim,
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.model().validate()?;
        self.synthetic.validate()?;
        let s = &self.sweep;
        if s.policies.is_empty() || s.fleet_sizes.is_empty() || s.replicates == 0 {
            bail!("sweep needs at least one policy, fleet size and replicate");
        }
        if s.ratios.iter().any(|r| !(*r >= 1.0 && r.is_finite())) {
            bail!("rate ratios must be finite and at least 1");
        }
        if s.kmean_k.contains(&0) || s.em_components == 0 || s.trials == 0 {
            bail!("k-mean k, EM components and trials must be positive");
        }
        if !(self.contract.demand_bits > 0.0) || self.contract.grid_size < 2 {
            bail!("contract check needs positive demand and at least 2 grid points");
        }
        if !(self.mixture.tol >= 0.0) || self.mixture.max_iter == 0 {
            bail!("mixture tolerance must be nonnegative and max_iter positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::parse(&c.to_toml().unwrap()).unwrap(), c);
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let c = RunConfig::parse("seed = 4\n[econ]\np_max_w = 30.0\n[sweep]\nfleet_sizes = [3]\n").unwrap();
        assert_eq!(c.seed, 4);
        assert_eq!(c.econ.p_max_w, 30.0);
        assert_eq!(c.econ.hover_power_w, 16.0);
        assert_eq!(c.sweep.fleet_sizes, vec![3]);
        assert_eq!(c.sweep.replicates, 10);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("sed = 4\n").is_err());
        assert!(RunConfig::parse("[econ]\npmax = 1.0\n").is_err());
        assert!(RunConfig::parse("[sim]\ntraffic_components = 3\nfoo = 1\n").is_err());
    }

    #[test]
    fn policies_parse_by_name() {
        let c = RunConfig::parse("[sweep]\npolicies = [\"max_energy\", \"predictive\"]\n").unwrap();
        assert_eq!(c.sweep.policies, vec![Policy::MaxEnergy, Policy::Predictive]);
    }
}
