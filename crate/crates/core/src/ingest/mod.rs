//! Dataset parsing, service-area partition, label synthesis, congestion
//! detection and synthetic scenarios.

mod dataset;
mod dwt;
mod labels;
mod partition;
mod records;
mod synthetic;

pub use dataset::{hourly_city_series, parse_bs_table, parse_dataset, parse_traffic_table, Dataset, ParseOptions, RawBsRecord, RawTrafficRow};
pub use dwt::{dwt_congestion_detect, haar_forward, haar_inverse, robust_std, DetectConfig, HaarDecomposition};
pub use labels::{synthesize_bs_labels, synthesize_labels, BsLabels, LabelComponent, LabelConfig};
pub use partition::{nearest_site, project_and_partition, Partition, PartitionConfig, Projection};
pub use records::{read_record_stream, write_record_stream};
pub use synthetic::{measured_rate_ratio, synthetic_scenario, synthetic_scenario_with, BsTruth, SyntheticScenario, SyntheticSpec};

/// Independent stream seed for `key` under `seed` (splitmix64 finalizer).
pub fn sub_seed(seed: u64, key: u64) -> u64 {
    let mut z = seed ^ key.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
