#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Predictive deployment of UAV aerial base stations.

pub mod channel;
pub mod contract;
pub mod error;
pub mod geom;
pub mod ingest;
pub mod learning;
pub mod mixture;
pub mod placement;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SpatialPointF64 = geom::SpatialPoint<f64>;
pub type RegionF64 = geom::Region<f64>;
pub type ChannelParamsF64 = channel::ChannelParams<f64>;
pub type MixtureModelF64 = mixture::MixtureModel<f64>;
pub type WeightedSamplesF64 = mixture::WeightedSamples<f64>;
pub type TransmissionRecordF64 = learning::TransmissionRecord<f64>;
pub type LearningConfigF64 = learning::LearningConfig<f64>;
pub type DemandEstimateF64 = learning::DemandEstimate<f64>;
pub type EconomicParamsF64 = contract::EconomicParams<f64>;
pub type ContractMenuF64 = contract::ContractMenu<f64>;
pub type UavProfileF64 = contract::UavProfile<f64>;
pub type PlacementConfigF64 = placement::PlacementConfig<f64>;
pub type ScenarioF64 = sim::Scenario<f64>;
pub type SimConfigF64 = sim::SimConfig<f64>;
pub type ModelParamsF64 = sim::ModelParams<f64>;
pub type MetricsReportF64 = sim::MetricsReport<f64>;
pub type LogEventF64 = sim::LogEvent<f64>;
pub type SyntheticScenarioF64 = ingest::SyntheticScenario<f64>;
