//! Metrics CSV. A `#` comment line with the tool version, seed and RNG
//! comes first, then the column header, then one row per simulated second.

use smforge_core::sim::{MetricsRow, SimOutcome, RNG_NAME};

pub const COLUMNS: [&str; 4] = [
    "t_s",
    "cluster_fraction",
    "centroid_beacon_dist_cm",
    "max_spread_cm",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn row(r: &MetricsRow) -> [String; 4] {
    [
        r.t_s.to_string(),
        r.cluster_fraction.to_string(),
        opt(r.centroid_beacon_dist),
        opt(r.max_spread),
    ]
}

pub fn header_comment(seed: u64) -> String {
    format!(
        "# smforge {}; seed {seed}; rng {RNG_NAME}\n",
        smforge_core::VERSION
    )
}

pub fn to_csv(seed: u64, outcome: &SimOutcome) -> String {
    let mut w = csv::Writer::from_writer(header_comment(seed).into_bytes());
    w.write_record(COLUMNS).expect("in-memory write");
    for r in &outcome.rows {
        w.write_record(row(r)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
}

/// The one-line summary `sim` prints.
pub fn summary(r: &MetricsRow) -> String {
    let [t, c, d, s] = row(r);
    format!("t_s={t} cluster_fraction={c} centroid_beacon_dist_cm={d} max_spread_cm={s}")
}
