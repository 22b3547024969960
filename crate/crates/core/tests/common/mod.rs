#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use mementolens::cdx_client::account_target;
use mementolens::classifier::{Classification, ReplayResolver};
use mementolens::time::FakeClock;
use mementolens::{ArchiveEndpoint, CdxClient, CdxQuery, Classifier, EndpointRegistry, Fetcher, ReplayTransport};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn cassette() -> Arc<ReplayTransport> {
    static CASSETTE: OnceLock<Arc<ReplayTransport>> = OnceLock::new();
    CASSETTE
        .get_or_init(|| Arc::new(ReplayTransport::from_dir(fixtures().join("cassette")).expect("cassette loads")))
        .clone()
}

pub fn fetcher() -> Arc<Fetcher> {
    Arc::new(
        Fetcher::builder(cassette())
            .clock(Arc::new(FakeClock::default()))
            .rate(1000.0)
            .build(),
    )
}

pub fn summary() -> serde_json::Value {
    let text = std::fs::read_to_string(fixtures().join("expected/summary.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

pub fn lines(rel: &str) -> Vec<String> {
    std::fs::read_to_string(fixtures().join(rel))
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_string)
        .collect()
}

pub struct Truth {
    pub label: String,
    pub hops: Option<u32>,
}

/// Generator-side labels keyed by (endpoint, dataset, handle, timestamp).
pub fn truth() -> HashMap<(String, String, String, String), Truth> {
    let mut rdr = csv::Reader::from_path(fixtures().join("expected/classes.csv")).unwrap();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            (
                (r[0].to_string(), r[1].to_string(), r[2].to_string(), r[3].to_string()),
                Truth {
                    label: r[6].to_string(),
                    hops: r[7].parse().ok(),
                },
            )
        })
        .collect()
}

pub fn health_handles() -> Vec<String> {
    mementolens::report::load_dataset(&fixtures().join("datasets/health_authorities.txt"))
        .unwrap()
        .handles
}

pub fn endpoint(name: &str) -> ArchiveEndpoint {
    EndpointRegistry::builtin().get(name).unwrap().clone()
}

/// Fetch and classify every account of a dataset against the cassette.
pub fn classify_dataset(endpoint_name: &str, handles: &[String], workers: usize) -> Vec<(String, Vec<Classification>)> {
    let fetcher = fetcher();
    let ep = endpoint(endpoint_name);
    let client = CdxClient::new(fetcher.clone());
    let resolver = ReplayResolver::new(fetcher, EndpointRegistry::builtin());
    let classifier = Classifier::new(&resolver, &ep);
    handles
        .iter()
        .map(|h| {
            let records = client
                .fetch_cdx(&CdxQuery::new(ep.clone(), account_target(h)))
                .unwrap_or_else(|e| panic!("{h}: {e}"));
            let classes = classifier
                .classify_batch(&records, workers)
                .into_iter()
                .map(|c| c.unwrap_or_else(|e| panic!("{h}: {e}")))
                .collect();
            (h.clone(), classes)
        })
        .collect()
}
