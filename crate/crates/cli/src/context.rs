//! Transports, fetchers and run bookkeeping shared by the subcommands.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::{DateTime, Utc};
use mementolens::cdx_client::{ResponseCache, RetryPolicy};
use mementolens::report::{CacheState, StageRun};
use mementolens::transport::{AllowlistTransport, RecordingTransport};
use mementolens::{Fetcher, ReplayTransport, RunDir, RunManifest, Transport};

use crate::config::Config;
use crate::net::UreqTransport;
use crate::{Failure, Global};

const TIMEOUT: Duration = Duration::from_secs(30);

pub struct Ctx {
    pub archive: Arc<Fetcher>,
    pub live: Option<Arc<Fetcher>>,
    cache: Arc<ResponseCache>,
    started: DateTime<Utc>,
}

impl Ctx {
    /// `live` builds a second fetcher that may reach any host. The archive
    /// fetcher only ever talks to the configured archives.
    pub fn new(cfg: &Config, g: &Global, live: bool) -> Result<Ctx, Failure> {
        let replaying = !g.replay_cassette.is_empty();
        let base: Arc<dyn Transport> = if replaying {
            let mut cassette = ReplayTransport::new();
            for dir in &g.replay_cassette {
                cassette.load_dir(dir).map_err(Failure::fatal)?;
            }
            Arc::new(cassette)
        } else {
            Arc::new(UreqTransport::new(TIMEOUT))
        };
        let base: Arc<dyn Transport> = match &g.record_cassette {
            Some(dir) => Arc::new(RecordingTransport::new(base, dir).map_err(Failure::fatal)?),
            None => base,
        };
        let cache = Arc::new(ResponseCache::open(&cfg.cache_dir).map_err(Failure::fatal)?);

        // A cassette answers instantly and never rate limits, so pacing and
        // backoff would only slow replays down.
        let (rate, retry) = if replaying {
            (
                0.0,
                RetryPolicy {
                    attempts: cfg.retries,
                    base_delay: Duration::ZERO,
                    factor: 1.0,
                },
            )
        } else {
            (
                cfg.rate,
                RetryPolicy {
                    attempts: cfg.retries,
                    ..RetryPolicy::default()
                },
            )
        };
        let build = |t: Arc<dyn Transport>| {
            Arc::new(
                Fetcher::builder(t)
                    .rate(rate)
                    .retry(retry.clone())
                    .cache(cache.clone())
                    .refresh(g.refresh)
                    .build(),
            )
        };
        let archive = build(Arc::new(AllowlistTransport::new(
            base.clone(),
            cfg.registry.archive_hosts(),
        )));
        let live = live.then(|| build(base));
        Ok(Ctx {
            archive,
            live,
            cache,
            started: Utc::now(),
        })
    }

    pub fn network_calls(&self) -> u64 {
        self.archive.network_calls() + self.live.as_ref().map_or(0, |f| f.network_calls())
    }

    /// Flush the cache and record this stage in the manifest, replacing an
    /// earlier run of the same command.
    pub fn commit(
        &self,
        run: &RunDir,
        manifest: &mut RunManifest,
        command: &str,
        failures: Vec<String>,
    ) -> Result<(), Failure> {
        self.cache.flush().map_err(Failure::fatal)?;
        let calls = self.network_calls();
        let stage = StageRun {
            command: command.to_string(),
            started_at: self.started,
            finished_at: Utc::now(),
            cache_state: CacheState::from_network_calls(calls),
            network_calls: calls,
            failures,
        };
        let earlier = std::mem::take(&mut manifest.stages);
        manifest.cache_state = CacheState::Warm;
        manifest.finished_at = manifest.started_at;
        for s in earlier.into_iter().filter(|s| s.command != command) {
            manifest.push_stage(s);
        }
        manifest.push_stage(stage);
        run.write_manifest(manifest).map_err(Failure::fatal)
    }
}

/// The manifest of `run`, or a fresh one when the run is new.
pub fn manifest_for(run: &RunDir, run_id: &str) -> Result<RunManifest, Failure> {
    if run.exists() {
        run.read_manifest().map_err(Failure::fatal)
    } else {
        Ok(RunManifest::new(run_id, Utc::now()))
    }
}

pub fn existing_run(cfg: &Config, run_id: &str) -> Result<(RunDir, RunManifest), Failure> {
    let run = RunDir::new(&cfg.output_dir, run_id);
    if !run.exists() {
        return Err(Failure::usage(format!(
            "no run {run_id:?} under {}",
            cfg.output_dir.join("runs").display()
        )));
    }
    let manifest = run.read_manifest().map_err(Failure::fatal)?;
    Ok((run, manifest))
}

/// Map `f` over `items` on up to `workers` threads, keeping input order.
pub fn pool_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, items.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(item) = items.get(i) else { break };
                *slots[i].lock().unwrap() = Some(f(item));
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every slot filled"))
        .collect()
}
