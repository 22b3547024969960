//! Memento harvesting and replayability analysis for archived Instagram
//! account pages.
//!
//! The pipeline: [`cdx_client`] lists captures of a URL from CDX-speaking
//! archives, [`classifier`] decides what each capture replays as,
//! [`replayability`] turns classes into time series and finds when login-wall
//! redirects began, [`scraper`] extracts profile and post metadata from
//! replayable account pages, [`probe`] checks whether harvested URLs are
//! archived or live, and [`report`] writes everything to disk.

pub mod cdx_client;
pub mod classifier;
pub mod probe;
pub mod replayability;
pub mod report;
pub mod scraper;
pub mod time;
pub mod transport;

pub use cdx_client::{ArchiveEndpoint, CdxClient, CdxQuery, CdxRecord, EndpointRegistry, Fetcher};
pub use classifier::{Classification, Classifier, MementoClass, RevisitResolution};
pub use probe::{Archived, LiveStatus, ProbeVerdict, Prober};
pub use replayability::{Granularity, OnsetReport, ReplayabilityStats, TimeBucket};
pub use report::{Dataset, RunDir, RunManifest};
pub use scraper::{ScrapeResult, Scraper};
pub use time::Timestamp;
pub use transport::{HttpResponse, ReplayTransport, Transport, TransportError};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
