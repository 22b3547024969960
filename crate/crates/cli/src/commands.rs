use std::collections::BTreeMap;
use std::path::Path;

use mementolens::cdx_client::account_target;
use mementolens::classifier::{Classification, ReplayResolver};
use mementolens::replayability::{bucketize, detect_onset, login_page_series, DayCount, OnsetError};
use mementolens::report::{
    self, read_classified, read_onset, read_scrape, read_series_csv, read_series_json, read_verdicts,
    resolve_dataset, write_atomic, write_classified, write_json, write_onset, write_series_csv,
    write_series_json, write_verdicts, ReportError, CLASSIFIED_CSV, ONSET_JSON, RECORDS_DIR,
    REPLAYABILITY_CSV, REPLAYABILITY_JSON, SCRAPES_DIR, VERDICTS_CSV,
};
use mementolens::{
    ArchiveEndpoint, Archived, CdxClient, CdxQuery, CdxRecord, Classifier, LiveStatus, OnsetReport, Prober, RunDir,
    RunManifest, Scraper, TimeBucket,
};
use serde::Serialize;

use crate::config::Config;
use crate::context::{existing_run, manifest_for, pool_map, Ctx};
use crate::{
    AnalyzeArgs, Failure, FetchArgs, Format, Global, LoginWindow, OnsetArgs, ProbeArgs, ReportArgs, RunArg,
    ScrapeArgs, EXIT_OK, EXIT_PARTIAL,
};

fn exit_for(failures: &[String]) -> u8 {
    if failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    }
}

fn endpoint<'a>(cfg: &'a Config, name: &str) -> Result<&'a ArchiveEndpoint, Failure> {
    cfg.registry.get(name).map_err(|e| Failure::usage(e.to_string()))
}

fn run_endpoint<'a>(cfg: &'a Config, manifest: &RunManifest) -> Result<&'a ArchiveEndpoint, Failure> {
    let name = manifest
        .endpoints
        .first()
        .ok_or_else(|| Failure::usage(format!("run {:?} names no endpoint; fetch it first", manifest.run_id)))?;
    endpoint(cfg, name)
}

/// Non-empty lines with `#` comments removed.
fn list_file(path: &Path) -> Result<Vec<String>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

/// Account handle of a captured URL: its first path segment.
fn handle_of(original: &str) -> String {
    let rest = original.split_once("://").map_or(original, |(_, r)| r);
    rest.split(['?', '#'])
        .next()
        .unwrap_or("")
        .split('/')
        .skip(1)
        .find(|s| !s.is_empty())
        .unwrap_or("")
        .to_lowercase()
}

fn write_report(run: &RunDir, rel: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<(), ReportError>) -> Result<(), Failure> {
    write_atomic(&run.path(rel), f).map_err(Failure::fatal)
}

pub fn fetch(cfg: &Config, g: &Global, a: FetchArgs) -> Result<u8, Failure> {
    let ep = endpoint(cfg, &a.endpoint)?;
    let dataset = resolve_dataset(&a.dataset).map_err(|e| Failure::usage(e.to_string()))?;
    if let (Some(from), Some(to)) = (a.from, a.to) {
        if from > to {
            return Err(Failure::usage(format!("--from {from} is after --to {to}")));
        }
    }
    let ctx = Ctx::new(cfg, g, false)?;
    let run_id = a.run_id.unwrap_or_else(|| format!("{}-{}", dataset.name, ep.name));
    let run = RunDir::new(&cfg.output_dir, &run_id);
    let mut manifest = manifest_for(&run, &run_id)?;

    let client = CdxClient::new(ctx.archive.clone());
    let results = pool_map(&dataset.handles, cfg.workers, |h| {
        client.fetch_cdx(&CdxQuery::new(ep.clone(), account_target(h)).bounds(a.from, a.to))
    });
    let mut failures = Vec::new();
    let mut fetched = 0;
    for (h, result) in dataset.handles.iter().zip(results) {
        match result {
            Ok(records) => {
                run.write_records(h, &records).map_err(Failure::fatal)?;
                manifest.add_output(format!("{RECORDS_DIR}/{h}.json"));
                fetched += records.len() as u64;
            }
            Err(e) => {
                eprintln!("{h}: {e}");
                failures.push(format!("{h}: {e}"));
            }
        }
    }
    manifest.dataset = Some(dataset.name.clone());
    manifest.endpoints = vec![ep.name.clone()];
    manifest.from = a.from;
    manifest.to = a.to;
    manifest.counts.fetched = fetched;
    manifest.counts.failed = failures.len() as u64;
    let code = exit_for(&failures);
    ctx.commit(&run, &mut manifest, "fetch", failures)?;
    println!(
        "{run_id}: {fetched} captures of {} accounts from {} -> {}",
        dataset.handles.len(),
        ep.name,
        run.root().display()
    );
    Ok(code)
}

type Accounts = Vec<(String, Vec<Classification>)>;

fn classify_run(cfg: &Config, ctx: &Ctx, run: &RunDir, ep: &ArchiveEndpoint) -> Result<(Accounts, Vec<String>), Failure> {
    let handles = run.record_handles().map_err(Failure::fatal)?;
    let resolver = ReplayResolver::new(ctx.archive.clone(), cfg.registry.clone()).hop_limit(cfg.hop_limit);
    let classifier = Classifier::new(&resolver, ep);
    let results = pool_map(&handles, cfg.workers, |h| -> Result<(Vec<Classification>, Vec<String>), ReportError> {
        let records: Vec<CdxRecord> = run.read_records(h)?;
        let mut ok = Vec::with_capacity(records.len());
        let mut bad = Vec::new();
        for r in classifier.classify_batch(&records, 1) {
            match r {
                Ok(c) => ok.push(c),
                Err(e) => bad.push(format!("{h}: {e}")),
            }
        }
        Ok((ok, bad))
    });
    let mut accounts = Vec::new();
    let mut failures = Vec::new();
    for (h, r) in handles.into_iter().zip(results) {
        let (ok, bad) = r.map_err(Failure::fatal)?;
        failures.extend(bad);
        accounts.push((h, ok));
    }
    for f in &failures {
        eprintln!("{f}");
    }
    Ok((accounts, failures))
}

fn write_classified_run(
    cfg: &Config,
    ctx: &Ctx,
    run: &RunDir,
    manifest: &mut RunManifest,
) -> Result<(Accounts, Vec<String>), Failure> {
    let handles = run.record_handles().map_err(Failure::fatal)?;
    let (accounts, failures) = if handles.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        let ep = run_endpoint(cfg, manifest)?;
        classify_run(cfg, ctx, run, ep)?
    };
    let rows: Vec<Classification> = accounts.iter().flat_map(|(_, cs)| cs.iter().cloned()).collect();
    write_report(run, CLASSIFIED_CSV, |b| write_classified(b, &rows))?;
    manifest.add_output(CLASSIFIED_CSV);
    manifest.counts.classified = rows.len() as u64;
    Ok((accounts, failures))
}

pub fn classify(cfg: &Config, g: &Global, a: RunArg) -> Result<u8, Failure> {
    let (run, mut manifest) = existing_run(cfg, &a.run)?;
    let ctx = Ctx::new(cfg, g, false)?;
    let (accounts, failures) = write_classified_run(cfg, &ctx, &run, &mut manifest)?;
    let code = exit_for(&failures);
    ctx.commit(&run, &mut manifest, "classify", failures)?;
    let n: usize = accounts.iter().map(|(_, c)| c.len()).sum();
    println!("{}: {n} captures classified -> {}", a.run, run.path(CLASSIFIED_CSV).display());
    Ok(code)
}

/// Classified rows of a run grouped by account.
fn read_accounts(run: &RunDir) -> Result<Option<Accounts>, Failure> {
    let p = run.path(CLASSIFIED_CSV);
    if !p.is_file() {
        return Ok(None);
    }
    let file = std::fs::File::open(&p).map_err(|e| Failure::fatal(format!("{}: {e}", p.display())))?;
    let rows = read_classified(file).map_err(|e| Failure::fatal(format!("{}: {e}", p.display())))?;
    let mut by: BTreeMap<String, Vec<Classification>> = BTreeMap::new();
    for c in rows {
        by.entry(handle_of(&c.record.original)).or_default().push(c);
    }
    Ok(Some(by.into_iter().collect()))
}

fn login_series(ctx: &Ctx, ep: &ArchiveEndpoint, w: &LoginWindow) -> Result<Vec<DayCount>, Failure> {
    match (w.login_from, w.login_to) {
        (Some(from), Some(to)) => {
            login_page_series(&CdxClient::new(ctx.archive.clone()), ep, from, to).map_err(Failure::fatal)
        }
        _ => Ok(Vec::new()),
    }
}

/// `None` when there is nothing to report on.
fn onset_report(accounts: &Accounts, series: &[DayCount]) -> Option<OnsetReport> {
    match detect_onset(accounts, series) {
        Ok(r) => Some(r),
        Err(OnsetError::NoLoginRedirects { report }) => {
            tracing::warn!("no login-wall redirects among the classified captures");
            Some(*report)
        }
        Err(OnsetError::EmptyInput) => None,
    }
}

fn print_onset(r: &OnsetReport) {
    match &r.first_login_redirect {
        Some(f) => println!("first login redirect: {} at {}", f.handle, f.timestamp),
        None => println!("first login redirect: none"),
    }
    if let Some(j) = &r.max_daily_jump {
        println!(
            "largest daily jump: {} -> {} ({} -> {})",
            j.date_from, j.date_to, j.count_from, j.count_to
        );
    }
}

fn print_series(series: &[TimeBucket]) {
    println!("{:<10} {:>8} {:>8} {:>8}", "period", "num", "den", "pct");
    for b in series {
        println!(
            "{:<10} {:>8} {:>8} {:>8}",
            b.period.to_string(),
            b.stats.numerator(),
            b.stats.denominator(),
            report::format_pct(&b.stats)
        );
    }
}

pub fn analyze(cfg: &Config, g: &Global, a: AnalyzeArgs) -> Result<u8, Failure> {
    let (run, mut manifest) = existing_run(cfg, &a.run)?;
    let ctx = Ctx::new(cfg, g, false)?;
    let (accounts, failures) = match read_accounts(&run)? {
        Some(acc) => (acc, Vec::new()),
        None => write_classified_run(cfg, &ctx, &run, &mut manifest)?,
    };
    let series = bucketize(accounts.iter().flat_map(|(_, cs)| cs.iter()), a.granularity);
    write_report(&run, REPLAYABILITY_CSV, |b| write_series_csv(b, &series))?;
    write_report(&run, REPLAYABILITY_JSON, |b| write_series_json(b, &series))?;
    manifest.add_output(REPLAYABILITY_CSV);
    manifest.add_output(REPLAYABILITY_JSON);

    let days = if a.login.login_from.is_some() {
        login_series(&ctx, run_endpoint(cfg, &manifest)?, &a.login)?
    } else {
        Vec::new()
    };
    let onset = onset_report(&accounts, &days);
    if let Some(r) = &onset {
        write_report(&run, ONSET_JSON, |b| write_onset(b, r))?;
        manifest.add_output(ONSET_JSON);
    }
    let code = exit_for(&failures);
    ctx.commit(&run, &mut manifest, "analyze", failures)?;
    print_series(&series);
    if let Some(r) = &onset {
        print_onset(r);
    }
    Ok(code)
}

pub fn onset(cfg: &Config, g: &Global, a: OnsetArgs) -> Result<u8, Failure> {
    let mut runs = Vec::new();
    let mut accounts = Vec::new();
    for id in &a.run {
        let (run, manifest) = existing_run(cfg, id)?;
        let acc = read_accounts(&run)?
            .ok_or_else(|| Failure::usage(format!("run {id:?} is not classified; run `classify --run {id}` first")))?;
        accounts.extend(acc);
        runs.push((run, manifest));
    }
    let (run, mut manifest) = runs.swap_remove(0);
    let ctx = Ctx::new(cfg, g, false)?;
    let days = if a.login.login_from.is_some() {
        let ep = match &a.endpoint {
            Some(name) => endpoint(cfg, name)?,
            None => run_endpoint(cfg, &manifest)?,
        };
        login_series(&ctx, ep, &a.login)?
    } else {
        Vec::new()
    };
    let Some(r) = onset_report(&accounts, &days) else {
        println!("nothing to analyze: no classified captures and no login series");
        return Ok(EXIT_OK);
    };
    write_report(&run, ONSET_JSON, |b| write_onset(b, &r))?;
    manifest.add_output(ONSET_JSON);
    ctx.commit(&run, &mut manifest, "onset", Vec::new())?;
    print_onset(&r);
    Ok(EXIT_OK)
}

pub fn scrape(cfg: &Config, g: &Global, a: ScrapeArgs) -> Result<u8, Failure> {
    let mut urims = a.urims.clone();
    if let Some(p) = &a.batch {
        urims.extend(list_file(p)?);
    }
    if urims.is_empty() {
        return Err(Failure::usage("no URI-Ms given; pass them as arguments or with --batch"));
    }
    let ctx = Ctx::new(cfg, g, false)?;
    let run = RunDir::new(&cfg.output_dir, &a.run);
    let mut manifest = manifest_for(&run, &a.run)?;
    let probe = cfg.probe_images && !a.no_probe;
    let scraper = Scraper::new(ctx.archive.clone(), cfg.registry.clone())
        .hop_limit(cfg.hop_limit)
        .probe_workers(cfg.workers);
    let results = pool_map(&urims, cfg.workers, |u| scraper.scrape(u, probe));

    let mut failures = Vec::new();
    let mut scraped = 0;
    for (urim, r) in urims.iter().zip(results) {
        match r {
            Ok(result) => {
                let path = run.write_scrape(&result).map_err(Failure::fatal)?;
                manifest.add_output(format!("{SCRAPES_DIR}/{}", result.file_name()));
                scraped += 1;
                println!("{}", path.display());
            }
            Err(e) => {
                eprintln!("{urim}: {e}");
                failures.push(format!("{urim}: {e}"));
            }
        }
    }
    manifest.counts.scraped = scraped;
    manifest.counts.failed = failures.len() as u64;
    let code = exit_for(&failures);
    ctx.commit(&run, &mut manifest, "scrape", failures)?;
    Ok(code)
}

pub fn probe(cfg: &Config, g: &Global, a: ProbeArgs) -> Result<u8, Failure> {
    if a.live && !a.i_understand_live_probing {
        return Err(Failure::usage(
            "--live sends requests to the live web; add --i-understand-live-probing to proceed",
        ));
    }
    let ep = endpoint(cfg, &a.endpoint)?;
    let urls = list_file(&a.urls)?;
    let ctx = Ctx::new(cfg, g, a.live)?;
    let run = RunDir::new(&cfg.output_dir, &a.run);
    let mut manifest = manifest_for(&run, &a.run)?;
    let mut prober = Prober::new(CdxClient::new(ctx.archive.clone()));
    if let Some(live) = &ctx.live {
        prober = prober.with_live(live.clone());
    }
    let verdicts = prober.probe_many(&urls, ep, cfg.workers);
    write_report(&run, VERDICTS_CSV, |b| write_verdicts(b, &verdicts))?;
    manifest.add_output(VERDICTS_CSV);
    if !manifest.endpoints.contains(&ep.name) {
        manifest.endpoints.push(ep.name.clone());
    }
    let failures: Vec<String> = verdicts
        .iter()
        .filter_map(|v| match &v.archived {
            Archived::Indeterminate { reason } => Some(format!("{}: {reason}", v.url)),
            _ => None,
        })
        .collect();
    for f in &failures {
        eprintln!("{f}");
    }
    manifest.counts.probed = verdicts.len() as u64;
    manifest.counts.failed = failures.len() as u64;
    let code = exit_for(&failures);
    ctx.commit(&run, &mut manifest, "probe", failures)?;
    for v in &verdicts {
        let live = match &v.live_status {
            LiveStatus::NotChecked => "-".to_string(),
            LiveStatus::Status { code } => code.to_string(),
            LiveStatus::Unreachable { .. } => "unreachable".to_string(),
        };
        println!("{}\t{}\t{}", v.archived.label(), live, v.url);
    }
    Ok(code)
}

#[derive(Serialize)]
struct Checked {
    output: String,
    rows: usize,
    lossless: bool,
}

fn reencode<T>(
    bytes: &[u8],
    read: impl FnOnce(&[u8]) -> Result<T, ReportError>,
    write: impl FnOnce(&mut Vec<u8>, &T) -> Result<(), ReportError>,
    rows: impl FnOnce(&T) -> usize,
) -> Result<(usize, bool), ReportError> {
    let value = read(bytes)?;
    let mut again = Vec::new();
    write(&mut again, &value)?;
    Ok((rows(&value), again == bytes))
}

/// Re-parse one output and write it back; lossless when the bytes match.
fn check_output(run: &RunDir, rel: &str) -> Result<(usize, bool), ReportError> {
    let path = run.path(rel);
    let bytes = std::fs::read(&path).map_err(|source| mementolens::cdx_client::StorageError { path, source })?;
    match rel {
        CLASSIFIED_CSV => reencode(&bytes, |b| read_classified(b), |w, v| write_classified(w, v), Vec::len),
        REPLAYABILITY_CSV => reencode(&bytes, |b| read_series_csv(b), |w, v| write_series_csv(w, v), Vec::len),
        REPLAYABILITY_JSON => reencode(&bytes, |b| read_series_json(b), |w, v| write_series_json(w, v), Vec::len),
        ONSET_JSON => reencode(&bytes, |b| read_onset(b), |w, v| write_onset(w, v), |r| r.series.len()),
        VERDICTS_CSV => reencode(&bytes, |b| read_verdicts(b), |w, v| write_verdicts(w, v), Vec::len),
        r if r.starts_with(RECORDS_DIR) => reencode(
            &bytes,
            |b| serde_json::from_slice::<Vec<CdxRecord>>(b).map_err(ReportError::from),
            |w, v| write_json(w, v),
            Vec::len,
        ),
        r if r.starts_with(SCRAPES_DIR) => {
            let value = read_scrape(&run.path(r))?;
            let mut again = Vec::new();
            write_json(&mut again, &value)?;
            Ok((1 + value.user_media.len(), again == bytes))
        }
        other => Err(ReportError::Malformed {
            row: 0,
            reason: format!("unknown output kind {other:?}"),
        }),
    }
}

pub fn report(cfg: &Config, a: ReportArgs) -> Result<u8, Failure> {
    let (run, manifest) = existing_run(cfg, &a.run)?;
    let mut checked = Vec::new();
    let mut failures = Vec::new();
    for rel in &manifest.outputs {
        match check_output(&run, rel) {
            Ok((rows, lossless)) => {
                if !lossless {
                    failures.push(format!("{rel}: re-encoding differs from the file"));
                }
                checked.push(Checked {
                    output: rel.clone(),
                    rows,
                    lossless,
                });
            }
            Err(e) => failures.push(format!("{rel}: {e}")),
        }
    }
    let series = match std::fs::read(run.path(REPLAYABILITY_CSV)) {
        Ok(b) if manifest.outputs.iter().any(|o| o == REPLAYABILITY_CSV) => read_series_csv(&b[..]).ok(),
        _ => None,
    };
    match a.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                run_id: &'a str,
                counts: &'a mementolens::report::StageCounts,
                cache_state: &'a mementolens::report::CacheState,
                outputs: &'a [Checked],
                failures: &'a [String],
            }
            let out = Out {
                run_id: &manifest.run_id,
                counts: &manifest.counts,
                cache_state: &manifest.cache_state,
                outputs: &checked,
                failures: &failures,
            };
            println!("{}", serde_json::to_string_pretty(&out).map_err(Failure::fatal)?);
        }
        Format::Table => {
            let c = &manifest.counts;
            println!("run {} ({:?} cache)", manifest.run_id, manifest.cache_state);
            println!(
                "fetched {} classified {} scraped {} probed {} failed {}",
                c.fetched, c.classified, c.scraped, c.probed, c.failed
            );
            for ch in &checked {
                println!("{:<48} {:>7} {}", ch.output, ch.rows, if ch.lossless { "ok" } else { "MISMATCH" });
            }
            if let Some(s) = &series {
                println!();
                print_series(s);
            }
        }
    }
    for f in &failures {
        eprintln!("{f}");
    }
    Ok(exit_for(&failures))
}
