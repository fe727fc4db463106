//! Datasets, configuration, the response cache and the remote client.

pub mod cache;
pub mod config;
pub mod dataset;
pub mod remote;

pub use cache::{Cache, CacheEntry};
pub use config::{Config, Mapping, Tolerances};
pub use dataset::{parse_dataset, parse_str, DatasetFile, DatasetHeader, SCHEMA_VERSION};
pub use remote::{
    fetch_remote, CharConstraint, FetchOutcome, HttpTransport, NoNetwork, SpaceQuery, Transport,
};
