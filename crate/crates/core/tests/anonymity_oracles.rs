//! Anonymity metric oracles: every metric must be recomputable by an
//! independent brute-force pass over the raw event log and timelines.

use pgpp_core::anonymity::{
    degree_of_anonymity, global_bulk_anonymity, local_bulk_anonymity,
};
use pgpp_core::mobility::{attach_timeline, synth_traces, AttachmentTimeline};
use pgpp_core::paging::{run_sim, SimConfig, SimMode, SimReport};
use pgpp_core::topology::{synth_sites, SynthTopologyConfig, Topology};
use proptest::prelude::*;

fn simulated_world() -> (Topology, Vec<AttachmentTimeline>, SimReport) {
    let cfg = SynthTopologyConfig {
        n_sites: 150,
        n_clusters: 12,
        seed: 4,
        ..Default::default()
    };
    let topo = Topology::from_sites(synth_sites(&cfg)).unwrap();
    let traces = synth_traces(topo.region, 60, 60, 90, 6);
    let timelines: Vec<_> = traces
        .iter()
        .map(|t| attach_timeline(t, &topo).unwrap())
        .collect();
    let report = run_sim(&timelines, &topo, &SimConfig::new(SimMode::Tal(6), 19)).unwrap();
    (topo, timelines, report)
}

#[test]
fn local_bulk_matches_timeline_recount() {
    let (_, timelines, report) = simulated_world();
    let n_enbs = report.config.n_enbs;
    let ticks = report.config.duration_ticks;
    let mut sum = 0u64;
    let mut nonempty = 0u64;
    for tick in 0..ticks {
        let mut counts = vec![0u64; n_enbs];
        for t in &timelines {
            counts[t.enb_at(tick) as usize] += 1;
        }
        for &c in &counts {
            if c > 0 {
                sum += c;
                nonempty += 1;
            }
        }
    }
    let s = sum as f64 / nonempty as f64;
    let want = degree_of_anonymity(s, timelines.len() as f64).unwrap();
    let got = local_bulk_anonymity(&report, timelines.len() as u64).unwrap();
    assert!((got - want).abs() < 1e-12);
}

#[test]
fn global_bulk_matches_record_recount() {
    let (_, timelines, report) = simulated_world();
    // independent pass: count occupied eNBs per page from the timelines
    let mut counts: Vec<u32> = report
        .page_records
        .iter()
        .map(|r| {
            let tick = r.tick as usize;
            r.enbs_paged
                .iter()
                .filter(|&&e| timelines.iter().any(|t| t.enb_at(tick) == e))
                .count() as u32
        })
        .collect();
    // the report's own counters must agree with the recount
    for (r, &c) in report.page_records.iter().zip(&counts) {
        assert_eq!(r.enbs_with_users, c);
    }
    counts.sort_unstable();
    let n = counts.len();
    let median = if n % 2 == 1 {
        counts[n / 2] as f64
    } else {
        (counts[n / 2 - 1] as f64 + counts[n / 2] as f64) / 2.0
    };
    let want = degree_of_anonymity(median, timelines.len() as f64).unwrap();
    let got = global_bulk_anonymity(&report, timelines.len() as u64).unwrap();
    assert!((got - want).abs() < 1e-12);
}

proptest! {
    #[test]
    fn degree_bounds_and_monotonicity(n in 2u64..100_000, a in 1u64..100_000, b in 1u64..100_000) {
        let a = a.min(n);
        let b = b.min(n);
        let da = degree_of_anonymity(a as f64, n as f64).unwrap();
        let db = degree_of_anonymity(b as f64, n as f64).unwrap();
        prop_assert!((0.0..=1.0).contains(&da));
        if a <= b {
            prop_assert!(da <= db);
        }
        prop_assert_eq!(degree_of_anonymity(1.0, n as f64).unwrap(), 0.0);
        prop_assert_eq!(degree_of_anonymity(n as f64, n as f64).unwrap(), 1.0);
    }
}
