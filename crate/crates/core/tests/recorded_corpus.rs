//! Pipeline checks against the recorded cassette in fixtures/.

mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::NaiveDate;
use common::*;
use mementolens::cdx_client::account_target;
use mementolens::replayability::{bucketize, detect_onset, login_page_series, merge_series, Granularity};
use mementolens::report::top25;
use mementolens::scraper::{collect_shortcodes, provenance, trend_series, ScrapeError, TrendMetric};
use mementolens::time::FakeClock;
use mementolens::{Archived, CdxClient, CdxQuery, EndpointRegistry, LiveStatus, Prober, Scraper};

fn check_labels(endpoint: &str, dataset: &str, handles: &[String]) {
    let truth = truth();
    let mut checked = 0;
    for (handle, classes) in classify_dataset(endpoint, handles, 4) {
        for c in classes {
            let key = (endpoint.to_string(), dataset.to_string(), handle.clone(), c.record.timestamp.to_string());
            let t = truth.get(&key).unwrap_or_else(|| panic!("no truth for {key:?}"));
            assert_eq!(c.class.to_string(), t.label, "{key:?} note={:?}", c.note);
            assert_eq!(c.hops, t.hops, "{key:?}");
            checked += 1;
        }
    }
    let expected = truth.keys().filter(|k| k.0 == endpoint && k.1 == dataset).count();
    assert_eq!(checked, expected);
}

#[test]
fn top25_labels_match_generator() {
    check_labels("wayback", "top25", &top25().handles);
}

#[test]
fn health_labels_match_generator() {
    check_labels("wayback", "health_authorities", &health_handles());
}

#[test]
fn arquivo_labels_match_generator() {
    check_labels("arquivo", "top25", &top25().handles);
}

#[test]
fn monthly_counters_match_generator() {
    let summary = summary();
    let expected = &summary["monthly_replayability"]["wayback/top25"];
    let series = merge_series(
        classify_dataset("wayback", &top25().handles, 4)
            .iter()
            .map(|(_, cs)| bucketize(cs, Granularity::Month)),
    );
    assert_eq!(series.len(), expected.as_object().unwrap().len());
    for b in &series {
        let e = &expected[b.period.to_string()];
        assert_eq!(b.stats.numerator(), e["num"].as_u64().unwrap(), "{}", b.period);
        assert_eq!(b.stats.denominator(), e["den"].as_u64().unwrap(), "{}", b.period);
    }
}

#[test]
fn paged_listing_equals_single_request() {
    let client = CdxClient::new(fetcher());
    let ep = endpoint("wayback");
    let whole = client.fetch_cdx(&CdxQuery::new(ep.clone(), account_target("nike"))).unwrap();
    let paged = client
        .fetch_cdx(&CdxQuery::new(ep, account_target("nike")).page_limit(50))
        .unwrap();
    assert!(whole.len() > 100);
    assert_eq!(whole, paged);
}

#[test]
fn onset_on_recorded_slices() {
    let client = CdxClient::new(fetcher());
    let aug = (NaiveDate::from_ymd_opt(2019, 8, 1).unwrap(), NaiveDate::from_ymd_opt(2019, 8, 31).unwrap());
    for ep in ["wayback", "arquivo"] {
        let series = login_page_series(&client, &endpoint(ep), aug.0, aug.1).unwrap();
        assert_eq!(series.len(), 31);
        let mut accounts = classify_dataset("wayback", &health_handles(), 4);
        accounts.extend(classify_dataset("wayback", &top25().handles, 4));
        let report = detect_onset(&accounts, &series).unwrap();
        let jump = report.max_daily_jump.unwrap();
        assert_eq!(jump.date_from.to_string(), "2019-08-20", "{ep}");
        assert_eq!(jump.date_to.to_string(), "2019-08-21", "{ep}");
        let first = report.first_login_redirect.unwrap();
        assert_eq!(first.handle, "thisisbillgates");
        assert_eq!(first.timestamp.date().to_string(), "2019-08-22");
    }
}

fn scraper() -> Scraper {
    Scraper::new(fetcher(), EndpointRegistry::builtin())
}

#[test]
fn every_recorded_page_scrapes_as_generated() {
    let s = scraper();
    let summary = summary();
    let mut by_kind: BTreeMap<String, usize> = BTreeMap::new();
    for page in summary["scrapes"].as_array().unwrap() {
        let urim = page["urim"].as_str().unwrap();
        let kind = page["kind"].as_str().unwrap();
        *by_kind.entry(kind.to_string()).or_default() += 1;
        let got = s.scrape(urim, false);
        if let Some(err) = page["error"].as_str() {
            let e = got.expect_err(urim);
            let name = match e {
                ScrapeError::MalformedEmbeddedData { .. } => "MalformedEmbeddedData",
                ScrapeError::UnsupportedFormat { .. } => "UnsupportedFormat",
                ScrapeError::LoginPageContent { .. } => "LoginPageContent",
                ref other => panic!("{urim}: {other}"),
            };
            assert_eq!(name, err, "{urim}");
            continue;
        }
        let r = got.unwrap_or_else(|e| panic!("{urim}: {e}"));
        assert_eq!(r.era, page["era"].as_str().unwrap(), "{urim}");
        assert_eq!(r.profile_user.username, page["username"].as_str().unwrap());
        assert_eq!(r.profile_user.count.followed_by, page["followed_by"].as_u64(), "{urim}");
        assert_eq!(r.profile_user.count.follows, page["follows"].as_u64(), "{urim}");
        assert_eq!(r.profile_user.count.media, page["media"].as_u64(), "{urim}");
        let codes: Vec<&str> = r.user_media.iter().map(|p| p.short_code.as_str()).collect();
        let want: Vec<&str> = page["short_codes"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
        assert_eq!(codes, want, "{urim}");
        let times: Vec<Option<i64>> = r.user_media.iter().map(|p| p.created_time).collect();
        let want: Vec<Option<i64>> = page["created_times"].as_array().unwrap().iter().map(|v| v.as_i64()).collect();
        assert_eq!(times, want, "{urim}");
        assert_eq!(r.replaced_bytes as u64, page["replaced_bytes"].as_u64().unwrap_or(0), "{urim}");
    }
    assert_eq!(by_kind["monthly"], 68);
}

#[test]
fn scraped_values_trace_back_to_source() {
    let s = scraper();
    let ep = endpoint("wayback");
    let transport = cassette();
    let mut urims = lines("lists/monthly.txt");
    urims.extend(lines("lists/boundary.txt"));
    urims.extend(lines("lists/trend_beyonce.txt"));
    for urim in urims {
        let r = s.scrape(&urim, false).unwrap();
        let body = mementolens::Transport::get(&*transport, &urim).unwrap().body;
        let (html, _) = mementolens::scraper::decode_lossy(&body);
        let ts = r.memento_timestamp().unwrap();
        let spans = provenance::audit(&r, &html, &s.rewriter(&ep, &ts)).unwrap_or_else(|e| panic!("{urim}: {e:?}"));
        assert!(!spans.is_empty());
    }
}

const BEYONCE: &str = "https://web.archive.org/web/20170214033011/https://www.instagram.com/beyonce/";

#[test]
fn beyonce_capture_with_image_probes() {
    let r = scraper().scrape(BEYONCE, true).unwrap();
    let u = &r.profile_user;
    assert_eq!(u.username, "beyonce");
    assert_eq!(u.full_name.as_deref(), Some("Beyoncé"));
    assert_eq!(u.bio.as_deref(), Some("#LEMONADE"));
    assert_eq!(u.website.as_deref(), Some("https://web.archive.org/web/20170214033011/http://www.beyonce.com/"));
    let pic = u.profile_picture.as_ref().unwrap();
    assert_eq!(
        pic.uri,
        "https://web.archive.org/web/20170214033011/https://scontent-sea1-1.cdninstagram.com/t51.2885-19/s150x150/12918039_230227960666719_282379501_a.jpg"
    );
    assert_eq!(pic.status_code, Some(200));
    assert_eq!((u.count.media, u.count.followed_by, u.count.follows), (Some(1403), Some(94709950), Some(0)));
    assert_eq!((u.id.as_deref(), u.is_verified), (Some("247944034"), Some(true)));

    assert_eq!(r.user_media.len(), 12);
    let post = &r.user_media[0];
    assert_eq!(post.short_code, "BP-rXUGBPJa");
    assert_eq!((post.likes_count, post.comments_count), (Some(10400019), Some(504384)));
    assert_eq!((post.created_time, post.comments_disabled), (Some(1485974340), Some(false)));
    assert_eq!(post.created_time_iso.as_deref(), Some("2017-02-01T18:39:00Z"));
    assert!(post.caption.as_deref().unwrap().ends_with("- The Carters"));
    assert_eq!(post.images["display"].status_code, Some(200));
    assert_eq!(post.images["thumbnail"].status_code, Some(404));
    assert!(r.images().all(|i| i.status_code.is_some() && i.probe_error.is_none()));

    let json = serde_json::to_value(&r).unwrap();
    let keys: Vec<&str> = json["userMedia"][0].as_object().unwrap().keys().map(String::as_str).collect();
    for k in ["comments_disabled", "comments", "caption", "short_code", "likes", "created_time", "images"] {
        assert!(keys.contains(&k), "{k} missing from {keys:?}");
    }
    assert_eq!(json["userMedia"][0]["likes"]["count"], 10400019);
    assert_eq!(json["profileUser"]["isVerified"], true);
}

#[test]
fn created_time_iso_agrees_with_unix_time() {
    let s = scraper();
    let mut urims = lines("lists/monthly.txt");
    urims.extend(lines("lists/boundary.txt"));
    let mut posts = 0;
    for urim in urims {
        for p in s.scrape(&urim, false).unwrap().user_media {
            let (Some(t), Some(iso)) = (p.created_time, p.created_time_iso.as_deref()) else {
                panic!("{urim}: {} lacks a time", p.short_code)
            };
            // Independent conversion: days from civil date.
            let days = t.div_euclid(86_400);
            let secs = t.rem_euclid(86_400);
            let date = NaiveDate::from_ymd_opt(1970, 1, 1).unwrap() + chrono::Days::new(days as u64);
            let want = format!("{}T{:02}:{:02}:{:02}Z", date.format("%Y-%m-%d"), secs / 3600, secs / 60 % 60, secs % 60);
            assert_eq!(iso, want);
            posts += 1;
        }
    }
    assert!(posts > 500);
}

#[test]
fn scraping_without_probes_fetches_only_the_page() {
    use mementolens::transport::CountingTransport;
    let counting = Arc::new(CountingTransport::new(cassette()));
    let fetcher = Arc::new(mementolens::Fetcher::builder(counting.clone()).clock(Arc::new(FakeClock::default())).build());
    let s = Scraper::new(fetcher, EndpointRegistry::builtin());
    let r = s.scrape(BEYONCE, false).unwrap();
    assert_eq!(counting.calls(), 1);
    assert!(r.images().all(|i| i.status_code.is_none()));
    let text = serde_json::to_string(&r).unwrap();
    assert!(!text.contains("status_code"));
    s.scrape(BEYONCE, true).unwrap();
    assert!(counting.calls() > 1);
}

#[test]
fn trend_across_eras_has_gaps_where_pages_lacked_counts() {
    let s = scraper();
    let results: Vec<_> = lines("lists/trend_beyonce.txt").iter().map(|u| s.scrape(u, false).unwrap()).collect();
    let followers = trend_series(&results, TrendMetric::FollowedBy);
    assert!(followers.iter().all(|p| p.value.is_some()));
    assert!(followers.windows(2).all(|w| w[0].timestamp < w[1].timestamp && w[0].value < w[1].value));
    assert_eq!(followers[2].value, Some(95_000_000));
    let follows = trend_series(&results, TrendMetric::Follows);
    assert_eq!(follows[0].value, None);
    assert_eq!(follows[1].value, Some(0));
    let sightings = collect_shortcodes(&results);
    let fig = sightings.iter().find(|s| s.short_code == "BP-rXUGBPJa").unwrap();
    assert_eq!(fig.first_seen.to_string(), "20170214033011");
}

#[test]
fn probe_verdicts_from_recorded_index_and_live_stubs() {
    use mementolens::transport::AllowlistTransport;
    let ep = endpoint("wayback");
    let urls = lines("lists/probe_urls.txt");
    let guarded = Arc::new(AllowlistTransport::new(cassette(), ["web.archive.org"]));
    let archive = Arc::new(mementolens::Fetcher::builder(guarded.clone()).clock(Arc::new(FakeClock::default())).rate(100.0).build());
    let offline = Prober::new(CdxClient::new(archive.clone()));
    let verdicts = offline.probe_many(&urls, &ep, 4);
    assert_eq!(guarded.refused(), 0);
    assert_eq!(verdicts.len(), urls.len());
    let labels: Vec<&str> = verdicts.iter().map(|v| v.archived.label()).collect();
    assert_eq!(labels, ["true", "true", "true", "false", "false", "false"]);
    assert!(verdicts.iter().all(|v| v.live_status == LiveStatus::NotChecked));
    match &verdicts[0].archived {
        Archived::Yes { count, .. } => assert_eq!(*count, summary()["login_listing_total"].as_u64().unwrap()),
        other => panic!("{other:?}"),
    }

    let live_t = Arc::new(mementolens::ReplayTransport::from_dir(fixtures().join("live")).unwrap());
    let live = Arc::new(mementolens::Fetcher::builder(live_t).clock(Arc::new(FakeClock::default())).build());
    let online = Prober::new(CdxClient::new(archive)).with_live(live);
    let verdicts = online.probe_many(&urls, &ep, 2);
    let codes: Vec<Option<u16>> = verdicts
        .iter()
        .map(|v| match v.live_status {
            LiveStatus::Status { code } => Some(code),
            _ => None,
        })
        .collect();
    assert_eq!(codes, [Some(200), Some(200), Some(200), Some(410), Some(403), Some(404)]);
    assert!(verdicts[5].live_status.likely_deleted());
    assert_eq!(verdicts[5].archived, Archived::No);
}

#[test]
fn network_failure_is_never_a_negative_verdict() {
    let dead = mementolens::transport::FnTransport(|url: &str| {
        Err(mementolens::TransportError::Connect { url: url.into(), reason: "refused".into() })
    });
    let f = Arc::new(mementolens::Fetcher::builder(Arc::new(dead)).clock(Arc::new(FakeClock::default())).build());
    let p = Prober::new(CdxClient::new(f.clone())).with_live(f);
    let v = p.probe("instagram.com/p/BP-rXUGBPJa/", &endpoint("wayback"));
    assert_eq!(v.archived.label(), "indeterminate");
    assert!(matches!(v.live_status, LiveStatus::Unreachable { .. }));
}

#[test]
fn warm_cache_fetch_makes_no_network_calls() {
    let dir = tempfile::tempdir().unwrap();
    let run = |expect_calls: bool| {
        let cache = Arc::new(mementolens::cdx_client::ResponseCache::open(dir.path()).unwrap());
        let f = Arc::new(
            mementolens::Fetcher::builder(cassette())
                .clock(Arc::new(FakeClock::default()))
                .rate(1000.0)
                .cache(cache.clone())
                .build(),
        );
        let client = CdxClient::new(f.clone());
        let ep = endpoint("wayback");
        let all: Vec<_> = top25()
            .handles
            .iter()
            .map(|h| client.fetch_cdx(&CdxQuery::new(ep.clone(), account_target(h))).unwrap())
            .collect();
        cache.flush().unwrap();
        assert_eq!(f.network_calls() > 0, expect_calls);
        all
    };
    let cold = run(true);
    let warm = run(false);
    assert_eq!(cold, warm);
}
