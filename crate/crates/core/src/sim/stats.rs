//! Trace summarization: per-flow delays and aggregate figures.
//!
//! Metric definitions:
//! - setup delay: first trace event of the flow to its `tuned` event, i.e.
//!   the whole control phase including any control-channel waits;
//! - queueing delay: `tuned` to `data-start`, i.e. time spent waiting for
//!   the data channel after the flow is ready to transmit;
//! - completion time: first trace event to `data-end`.

use super::{EventKind, SimError, SimTrace, TraceEvent};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FlowStats {
    pub flow: u64,
    pub setup_us: u64,
    pub queueing_us: u64,
    pub completion_us: u64,
    pub control_messages: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct Aggregate {
    pub mean: f64,
    pub p95: u64,
    pub max: u64,
}

impl Aggregate {
    fn over(values: &[u64]) -> Aggregate {
        if values.is_empty() {
            return Aggregate::default();
        }
        let mut sorted = values.to_vec();
        sorted.sort_unstable();
        let rank = ((values.len() as f64) * 0.95).ceil() as usize;
        Aggregate {
            mean: sorted.iter().sum::<u64>() as f64 / sorted.len() as f64,
            p95: sorted[rank.max(1) - 1],
            max: *sorted.last().unwrap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct SimStats {
    pub flows_submitted: usize,
    pub flows_completed: usize,
    pub flows_incomplete: usize,
    pub control_messages: usize,
    pub per_flow: Vec<FlowStats>,
    pub setup: Aggregate,
    pub queueing: Aggregate,
    pub completion: Aggregate,
}

impl SimStats {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("stats serialize")
    }
}

struct FlowScan<'a> {
    events: Vec<&'a TraceEvent>,
}

impl<'a> FlowScan<'a> {
    fn first(&self, kind: EventKind) -> Option<&TraceEvent> {
        self.events.iter().find(|e| e.kind == kind).copied()
    }

    fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }
}

/// Summarizes a trace, checking the per-flow event invariants along the way.
pub fn stats(trace: &SimTrace) -> Result<SimStats, SimError> {
    if trace
        .events
        .windows(2)
        .any(|w| w[0].time_us > w[1].time_us)
    {
        return Err(SimError::MalformedTrace(
            "event times are not globally non-decreasing".into(),
        ));
    }

    let mut flows: BTreeMap<u64, FlowScan> = BTreeMap::new();
    for e in &trace.events {
        flows
            .entry(e.flow)
            .or_insert_with(|| FlowScan { events: Vec::new() })
            .events
            .push(e);
    }

    let mut per_flow = Vec::new();
    let mut incomplete = 0usize;
    let mut control_messages = 0usize;
    for (&flow, scan) in &flows {
        let bad = |msg: String| SimError::MalformedTrace(format!("flow {flow}: {msg}"));

        let requests = scan.count(EventKind::RequestSent);
        let grants = scan.count(EventKind::GrantSent);
        control_messages += requests + grants;
        if requests > 1 {
            return Err(bad(format!("{requests} request events")));
        }
        if requests == 1 && grants != 2 {
            return Err(bad(format!("{grants} grant events, expected 2")));
        }
        if requests == 0 && grants != 0 {
            return Err(bad("grants without a request".into()));
        }
        for kind in [EventKind::Tuned, EventKind::DataStart, EventKind::DataEnd] {
            if scan.count(kind) > 1 {
                return Err(bad(format!("duplicate {kind:?} event")));
            }
        }
        if scan.count(EventKind::Blocked) < scan.count(EventKind::Unblocked) {
            return Err(bad("unblocked without matching blocked".into()));
        }

        // Protocol phases must appear in order when present.
        let phase_times: Vec<u64> = [
            scan.first(EventKind::RequestSent),
            scan.first(EventKind::GrantSent),
            scan.first(EventKind::Tuned),
            scan.first(EventKind::DataStart),
            scan.first(EventKind::DataEnd),
        ]
        .iter()
        .flatten()
        .map(|e| e.time_us)
        .collect();
        if phase_times.windows(2).any(|w| w[0] > w[1]) {
            return Err(bad("protocol events out of order".into()));
        }
        let phase_kinds: Vec<EventKind> = scan
            .events
            .iter()
            .map(|e| e.kind)
            .filter(|k| !matches!(k, EventKind::Blocked | EventKind::Unblocked))
            .collect();
        let mut expected = phase_kinds.clone();
        expected.sort_by_key(|k| match k {
            EventKind::RequestSent => 0,
            EventKind::GrantSent => 1,
            EventKind::Tuned => 2,
            EventKind::DataStart => 3,
            EventKind::DataEnd => 4,
            _ => unreachable!(),
        });
        if phase_kinds != expected {
            return Err(bad("protocol events out of sequence".into()));
        }
        if scan.first(EventKind::DataEnd).is_some() && scan.first(EventKind::DataStart).is_none() {
            return Err(bad("data-end without data-start".into()));
        }

        match (
            scan.first(EventKind::Tuned).map(|e| e.time_us),
            scan.first(EventKind::DataStart).map(|e| e.time_us),
            scan.first(EventKind::DataEnd).map(|e| e.time_us),
        ) {
            (Some(tuned), Some(start), Some(end)) => {
                let first = scan.events[0].time_us;
                per_flow.push(FlowStats {
                    flow,
                    setup_us: tuned - first,
                    queueing_us: start - tuned,
                    completion_us: end - first,
                    control_messages: requests + grants,
                });
            }
            _ => incomplete += 1,
        }
    }

    let setup: Vec<u64> = per_flow.iter().map(|f| f.setup_us).collect();
    let queueing: Vec<u64> = per_flow.iter().map(|f| f.queueing_us).collect();
    let completion: Vec<u64> = per_flow.iter().map(|f| f.completion_us).collect();
    Ok(SimStats {
        flows_submitted: flows.len(),
        flows_completed: per_flow.len(),
        flows_incomplete: incomplete,
        control_messages,
        setup: Aggregate::over(&setup),
        queueing: Aggregate::over(&queueing),
        completion: Aggregate::over(&completion),
        per_flow,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rwa::table1_fixture;
    use crate::sim::{run, FlowRequest, SimConfig};
    use crate::topology::{
        build_fog_topology, Endpoint, GroupId, OltCapacity, ServerId, TopologyParams,
    };

    fn config() -> SimConfig {
        let topo =
            build_fog_topology(&TopologyParams::default(), &OltCapacity::default()).unwrap();
        SimConfig::new(topo, table1_fixture())
    }

    fn sid(group: usize, index: usize) -> ServerId {
        ServerId {
            group: GroupId(group),
            index,
        }
    }

    #[test]
    fn empty_trace_has_zero_counters() {
        let s = stats(&SimTrace::default()).unwrap();
        assert_eq!(s.flows_submitted, 0);
        assert_eq!(s.control_messages, 0);
        assert_eq!(s.setup, Aggregate::default());
    }

    #[test]
    fn single_inter_group_flow_counts_three_control_messages() {
        let cfg = config();
        let trace = run(
            &cfg,
            &[FlowRequest {
                id: 1,
                src: sid(2, 0),
                dst: sid(4, 0),
                size_bits: 1_000_000,
                arrival_us: 0,
            }],
        )
        .unwrap();
        let s = stats(&trace).unwrap();
        assert_eq!(s.control_messages, 3);
        assert_eq!(s.flows_completed, 1);
        assert_eq!(s.per_flow[0].setup_us, 211);
        assert_eq!(s.per_flow[0].queueing_us, 0);
        assert_eq!(s.per_flow[0].completion_us, 311);
    }

    #[test]
    fn contention_shows_up_as_queueing_delay_on_the_second_flow() {
        let cfg = config();
        let trace = run(
            &cfg,
            &[
                FlowRequest {
                    id: 1,
                    src: sid(0, 0),
                    dst: sid(2, 0),
                    size_bits: 1_000_000,
                    arrival_us: 0,
                },
                FlowRequest {
                    id: 2,
                    src: sid(0, 1),
                    dst: sid(2, 1),
                    size_bits: 500_000,
                    arrival_us: 0,
                },
            ],
        )
        .unwrap();
        let s = stats(&trace).unwrap();
        assert_eq!(s.per_flow[0].queueing_us, 0);
        // Flow 2 becomes ready at 212 while flow 1 transmits until 311; the
        // queueing delay is exactly flow 1's residual transmission time.
        assert_eq!(s.per_flow[1].queueing_us, 99);
        assert_eq!(s.flows_completed + s.flows_incomplete, s.flows_submitted);
    }

    #[test]
    fn malformed_traces_are_rejected() {
        let mut trace = SimTrace::default();
        trace.events.push(TraceEvent {
            time_us: 5,
            kind: EventKind::DataEnd,
            flow: 1,
            wavelength: Some(1),
            from: Endpoint::Group(GroupId(0)),
            to: Endpoint::Group(GroupId(1)),
        });
        assert!(matches!(
            stats(&trace),
            Err(SimError::MalformedTrace(_))
        ));

        let mut backwards = SimTrace::default();
        for t in [10, 5] {
            backwards.events.push(TraceEvent {
                time_us: t,
                kind: EventKind::Tuned,
                flow: 1,
                wavelength: None,
                from: Endpoint::Group(GroupId(0)),
                to: Endpoint::Group(GroupId(0)),
            });
        }
        assert!(matches!(
            stats(&backwards),
            Err(SimError::MalformedTrace(_))
        ));
    }

    #[test]
    fn p95_uses_nearest_rank() {
        let agg = Aggregate::over(&(1..=100).collect::<Vec<u64>>());
        assert_eq!(agg.p95, 95);
        assert_eq!(agg.max, 100);
        let one = Aggregate::over(&[42]);
        assert_eq!(one.p95, 42);
        assert_eq!(one.mean, 42.0);
    }
}
