//! Full-size classified table: 75,378 rows, the size of the original harvest.

use mementolens::cdx_client::CdxStatus;
use mementolens::classifier::ResolvedVia;
use mementolens::report::{read_classified, write_classified, write_series_csv};
use mementolens::replayability::bucketize;
use mementolens::{CdxRecord, Classification, Granularity, MementoClass, RevisitResolution, Timestamp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ROWS: usize = 75_378;

fn synthetic(rng: &mut ChaCha8Rng, i: usize) -> Classification {
    let handle = format!("acct{}", i % 25);
    let ts = Timestamp::from_unix(1_352_246_400 + rng.gen_range(0..333_000_000)).unwrap();
    let original = format!("https://www.instagram.com/{handle}/");
    let login = format!("https://www.instagram.com/accounts/login/?next=/{handle}/");
    let (status, class, hops, via) = match rng.gen_range(0..8) {
        0 => ("200", MementoClass::Success, None, ResolvedVia::None),
        1 => ("302", MementoClass::RedirectToLogin { final_uri: login }, Some(1), ResolvedVia::Network),
        2 => (
            "301",
            MementoClass::RedirectCanonical { final_uri: original.replace("www.", "") },
            Some(rng.gen_range(1..3)),
            ResolvedVia::Network,
        ),
        3 => ("302", MementoClass::RedirectOther { final_uri: None }, None, ResolvedVia::None),
        4 => ("404", MementoClass::ClientError { status: 404 }, None, ResolvedVia::None),
        5 => ("503", MementoClass::ServerError { status: 503 }, None, ResolvedVia::None),
        6 => ("-", MementoClass::Revisit { resolution: RevisitResolution::Success }, None, ResolvedVia::Digest),
        _ => ("-", MementoClass::Revisit { resolution: RevisitResolution::Unresolved }, None, ResolvedVia::None),
    };
    Classification {
        note: matches!(class, MementoClass::RedirectOther { final_uri: None }).then(|| "unresolvable redirect: hop limit, \"10\"".into()),
        record: CdxRecord {
            timestamp: ts,
            original,
            mimetype: if status == "-" { "warc/revisit" } else { "text/html" }.into(),
            statuscode: CdxStatus::parse(status).unwrap(),
            digest: Some(format!("{:032X}", rng.gen::<u128>())),
            endpoint_name: "wayback".into(),
        },
        class,
        hops,
        resolved_via: via,
    }
}

#[test]
fn full_size_classified_table_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(75_378);
    let rows: Vec<Classification> = (0..ROWS).map(|i| synthetic(&mut rng, i)).collect();
    let mut buf = Vec::new();
    write_classified(&mut buf, &rows).unwrap();
    let back = read_classified(&buf[..]).unwrap();
    assert_eq!(back.len(), ROWS);
    assert_eq!(back, rows);

    let mut again = Vec::new();
    write_classified(&mut again, &back).unwrap();
    assert_eq!(buf, again);

    let series = bucketize(&rows, Granularity::Month);
    let total: u64 = series.iter().map(|b| b.stats.total()).sum();
    assert_eq!(total as usize, ROWS);
    let mut a = Vec::new();
    let mut b = Vec::new();
    write_series_csv(&mut a, &series).unwrap();
    write_series_csv(&mut b, &series).unwrap();
    assert_eq!(a, b);
}
