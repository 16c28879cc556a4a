//! Event loop: a single priority queue of timestamped engine events with a
//! total, deterministic ordering (time, then releases before sends, then flow
//! id, then scheduling sequence).

use super::{EventKind, FlowRequest, SimConfig, SimError, SimTrace, TraceEvent};
use crate::rwa;
use crate::topology::Endpoint;
use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap, VecDeque};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum ChannelLambda {
    Lambda(u32),
    /// Reflective intra-rack medium; carries no routed wavelength.
    IntraRack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Dir {
    Tx,
    Rx,
}

/// One direction of one wavelength on one endpoint's shared segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct ChannelKey {
    endpoint: usize,
    lambda: ChannelLambda,
    dir: Dir,
}

#[derive(Debug, Default)]
struct Channel {
    holder: Option<u64>,
    /// Waiting (flow, claim slot) pairs, FIFO. Only the tx leg queues; under
    /// a valid routing map any two claims sharing one leg share both.
    queue: VecDeque<(u64, Slot)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Request = 0,
    GrantSrc = 1,
    GrantDst = 2,
    Data = 3,
}

/// A two-leg channel claim plus the labels its trace events carry.
#[derive(Debug, Clone, Copy)]
struct Claim {
    tx: ChannelKey,
    rx: ChannelKey,
    wavelength: Option<u32>,
    from: Endpoint,
    to: Endpoint,
}

#[derive(Debug, Clone, Copy)]
enum Ev {
    Arrive,
    RequestDelivered,
    GrantsReady,
    GrantDelivered,
    LegTuned,
    ControlRelease(Slot),
    DataEnd,
}

#[derive(Debug)]
struct Sched {
    time: u64,
    rank: u8,
    flow: u64,
    seq: u64,
    ev: Ev,
}

impl PartialEq for Sched {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Sched {}
impl PartialOrd for Sched {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Sched {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.rank, self.flow, self.seq).cmp(&(
            other.time,
            other.rank,
            other.flow,
            other.seq,
        ))
    }
}

struct FlowState {
    req: FlowRequest,
    intra: bool,
    claims: [Option<Claim>; 4],
    legs_tuned: u8,
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    olt: usize,
    heap: BinaryHeap<Reverse<Sched>>,
    seq: u64,
    channels: HashMap<ChannelKey, Channel>,
    flows: BTreeMap<u64, FlowState>,
    trace: Vec<TraceEvent>,
    now: u64,
}

/// Runs the control protocol over a request list and returns the event
/// trace. Identical inputs produce a bit-identical trace.
pub fn run(cfg: &SimConfig, requests: &[FlowRequest]) -> Result<SimTrace, SimError> {
    cfg.params.validate()?;
    let n_groups = cfg.topo.n_groups();
    if cfg.map.n_endpoints() != n_groups + 1 {
        return Err(SimError::InvalidConfig(format!(
            "routing map covers {} endpoints but the topology needs {} (groups + OLT)",
            cfg.map.n_endpoints(),
            n_groups + 1
        )));
    }
    let report = rwa::verify(&cfg.map);
    if !report.valid() {
        return Err(SimError::InvalidConfig(format!(
            "routing map is invalid: {report}"
        )));
    }

    let mut engine = Engine {
        cfg,
        olt: n_groups,
        heap: BinaryHeap::new(),
        seq: 0,
        channels: HashMap::new(),
        flows: BTreeMap::new(),
        trace: Vec::new(),
        now: 0,
    };
    engine.admit(requests)?;
    engine.drain();
    Ok(SimTrace {
        events: engine.trace,
    })
}

impl<'a> Engine<'a> {
    fn admit(&mut self, requests: &[FlowRequest]) -> Result<(), SimError> {
        for req in requests {
            let fail = |msg: String| SimError::InvalidRequest {
                id: req.id,
                msg,
            };
            if self.flows.contains_key(&req.id) {
                return Err(fail("duplicate flow id".into()));
            }
            if req.src == req.dst {
                return Err(fail("source and destination are the same server".into()));
            }
            if req.size_bits == 0 {
                return Err(fail("size_bits must be > 0".into()));
            }
            for (side, id) in [("source", req.src), ("destination", req.dst)] {
                if self.cfg.topo.server(id).is_none() {
                    return Err(fail(format!("unknown {side} server {id}")));
                }
            }

            let src_group = req.src.group.0;
            let dst_group = req.dst.group.0;
            let intra = src_group == dst_group;
            let mut claims: [Option<Claim>; 4] = [None; 4];
            if intra {
                claims[Slot::Data as usize] = Some(Claim {
                    tx: self.key(src_group, ChannelLambda::IntraRack, Dir::Tx),
                    rx: self.key(src_group, ChannelLambda::IntraRack, Dir::Rx),
                    wavelength: None,
                    from: Endpoint::Group(req.src.group),
                    to: Endpoint::Group(req.dst.group),
                });
            } else {
                let lam = |s, d| {
                    rwa::wavelength(&self.cfg.map, s, d)
                        .expect("verified map is total over ordered pairs")
                };
                let lam_req = lam(src_group, self.olt);
                let lam_gs = lam(self.olt, src_group);
                let lam_gd = lam(self.olt, dst_group);
                let lam_data = lam(src_group, dst_group);
                claims[Slot::Request as usize] = Some(Claim {
                    tx: self.key(src_group, ChannelLambda::Lambda(lam_req), Dir::Tx),
                    rx: self.key(self.olt, ChannelLambda::Lambda(lam_req), Dir::Rx),
                    wavelength: Some(lam_req),
                    from: Endpoint::Group(req.src.group),
                    to: Endpoint::Olt,
                });
                claims[Slot::GrantSrc as usize] = Some(Claim {
                    tx: self.key(self.olt, ChannelLambda::Lambda(lam_gs), Dir::Tx),
                    rx: self.key(src_group, ChannelLambda::Lambda(lam_gs), Dir::Rx),
                    wavelength: Some(lam_gs),
                    from: Endpoint::Olt,
                    to: Endpoint::Group(req.src.group),
                });
                claims[Slot::GrantDst as usize] = Some(Claim {
                    tx: self.key(self.olt, ChannelLambda::Lambda(lam_gd), Dir::Tx),
                    rx: self.key(dst_group, ChannelLambda::Lambda(lam_gd), Dir::Rx),
                    wavelength: Some(lam_gd),
                    from: Endpoint::Olt,
                    to: Endpoint::Group(req.dst.group),
                });
                claims[Slot::Data as usize] = Some(Claim {
                    tx: self.key(src_group, ChannelLambda::Lambda(lam_data), Dir::Tx),
                    rx: self.key(dst_group, ChannelLambda::Lambda(lam_data), Dir::Rx),
                    wavelength: Some(lam_data),
                    from: Endpoint::Group(req.src.group),
                    to: Endpoint::Group(req.dst.group),
                });
            }

            let arrival = req.arrival_us;
            let id = req.id;
            self.flows.insert(
                id,
                FlowState {
                    req: *req,
                    intra,
                    claims,
                    legs_tuned: 0,
                },
            );
            self.schedule(arrival, 1, id, Ev::Arrive);
        }
        Ok(())
    }

    fn key(&self, endpoint: usize, lambda: ChannelLambda, dir: Dir) -> ChannelKey {
        ChannelKey {
            endpoint,
            lambda,
            dir,
        }
    }

    fn schedule(&mut self, time: u64, rank: u8, flow: u64, ev: Ev) {
        let seq = self.seq;
        self.seq += 1;
        self.heap.push(Reverse(Sched {
            time,
            rank,
            flow,
            seq,
            ev,
        }));
    }

    fn emit(&mut self, kind: EventKind, flow: u64, claim: &Claim) {
        self.trace.push(TraceEvent {
            time_us: self.now,
            kind,
            flow,
            wavelength: claim.wavelength,
            from: claim.from,
            to: claim.to,
        });
    }

    fn drain(&mut self) {
        while let Some(Reverse(sched)) = self.heap.pop() {
            debug_assert!(sched.time >= self.now, "time went backwards");
            self.now = sched.time;
            self.handle(sched.flow, sched.ev);
        }
    }

    fn claim(&mut self, flow: u64, slot: Slot) {
        let claim = self.flows[&flow].claims[slot as usize].expect("claim exists");
        let tx_free = self
            .channels
            .get(&claim.tx)
            .is_none_or(|c| c.holder.is_none());
        let rx_free = self
            .channels
            .get(&claim.rx)
            .is_none_or(|c| c.holder.is_none());
        if tx_free && rx_free {
            self.channels.entry(claim.tx).or_default().holder = Some(flow);
            self.channels.entry(claim.rx).or_default().holder = Some(flow);
            self.acquired(flow, slot);
        } else {
            self.channels
                .entry(claim.tx)
                .or_default()
                .queue
                .push_back((flow, slot));
            self.emit(EventKind::Blocked, flow, &claim);
        }
    }

    fn release(&mut self, flow: u64, slot: Slot) {
        let claim = self.flows[&flow].claims[slot as usize].expect("claim exists");
        for key in [claim.tx, claim.rx] {
            let ch = self.channels.get_mut(&key).expect("held channel exists");
            debug_assert_eq!(ch.holder, Some(flow));
            ch.holder = None;
        }
        // Wake the next waiter immediately; a channel never idles while its
        // queue is non-empty.
        if let Some((next_flow, next_slot)) = self
            .channels
            .get_mut(&claim.tx)
            .and_then(|c| c.queue.pop_front())
        {
            let next = self.flows[&next_flow].claims[next_slot as usize].expect("claim exists");
            debug_assert_eq!(next.tx, claim.tx);
            self.channels.entry(next.tx).or_default().holder = Some(next_flow);
            self.channels.entry(next.rx).or_default().holder = Some(next_flow);
            self.emit(EventKind::Unblocked, next_flow, &next);
            self.acquired(next_flow, next_slot);
        }
    }

    /// Continuation once a claim holds both legs.
    fn acquired(&mut self, flow: u64, slot: Slot) {
        let state = &self.flows[&flow];
        let claim = state.claims[slot as usize].expect("claim exists");
        let (src_group, dst_group) = (state.req.src.group, state.req.dst.group);
        let size_bits = state.req.size_bits;
        let msg = self.cfg.params.control_msg_us;
        match slot {
            Slot::Request => {
                let prop = self
                    .cfg
                    .params
                    .propagation_us(self.cfg.topo.olt_km(src_group).unwrap());
                self.emit(EventKind::RequestSent, flow, &claim);
                self.schedule(self.now + msg, 0, flow, Ev::ControlRelease(Slot::Request));
                self.schedule(self.now + prop, 1, flow, Ev::RequestDelivered);
            }
            Slot::GrantSrc | Slot::GrantDst => {
                let group = match slot {
                    Slot::GrantSrc => src_group,
                    _ => dst_group,
                };
                let prop = self
                    .cfg
                    .params
                    .propagation_us(self.cfg.topo.olt_km(group).unwrap());
                self.emit(EventKind::GrantSent, flow, &claim);
                self.schedule(self.now + msg, 0, flow, Ev::ControlRelease(slot));
                self.schedule(self.now + prop, 1, flow, Ev::GrantDelivered);
            }
            Slot::Data => {
                let tx = self.cfg.params.tx_time_us(size_bits);
                self.emit(EventKind::DataStart, flow, &claim);
                self.schedule(self.now + tx, 0, flow, Ev::DataEnd);
            }
        }
    }

    fn handle(&mut self, flow: u64, ev: Ev) {
        match ev {
            Ev::Arrive => {
                if self.flows[&flow].intra {
                    let tune = self.cfg.params.tuning_us;
                    self.schedule(self.now + tune, 1, flow, Ev::LegTuned);
                } else {
                    self.claim(flow, Slot::Request);
                }
            }
            Ev::RequestDelivered => {
                let proc = self.cfg.params.olt_processing_us;
                self.schedule(self.now + proc, 1, flow, Ev::GrantsReady);
            }
            Ev::GrantsReady => {
                self.claim(flow, Slot::GrantSrc);
                self.claim(flow, Slot::GrantDst);
            }
            Ev::GrantDelivered => {
                let tune = self.cfg.params.tuning_us;
                self.schedule(self.now + tune, 1, flow, Ev::LegTuned);
            }
            Ev::LegTuned => {
                let (ready, data) = {
                    let state = self.flows.get_mut(&flow).expect("known flow");
                    state.legs_tuned += 1;
                    (
                        state.intra || state.legs_tuned == 2,
                        state.claims[Slot::Data as usize].expect("claim exists"),
                    )
                };
                if ready {
                    self.emit(EventKind::Tuned, flow, &data);
                    self.claim(flow, Slot::Data);
                }
            }
            Ev::ControlRelease(slot) => self.release(flow, slot),
            Ev::DataEnd => {
                let data = self.flows[&flow].claims[Slot::Data as usize].expect("claim exists");
                self.emit(EventKind::DataEnd, flow, &data);
                self.release(flow, Slot::Data);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rwa::table1_fixture;
    use crate::sim::{setup_latency, SimConfig};
    use crate::topology::{
        build_fog_topology, GroupId, OltCapacity, ServerId, TopologyParams,
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

    fn flow(id: u64, src: ServerId, dst: ServerId, size_bits: u64, arrival_us: u64) -> FlowRequest {
        FlowRequest {
            id,
            src,
            dst,
            size_bits,
            arrival_us,
        }
    }

    #[test]
    fn g3_to_g5_follows_the_published_wavelength_sequence() {
        let cfg = config();
        // G3 server -> G5 server: request on L4, grants on L3 and L1, data on L6.
        let trace = run(&cfg, &[flow(1, sid(2, 0), sid(4, 0), 1_000_000, 0)]).unwrap();
        let kinds: Vec<(EventKind, Option<u32>, String, String)> = trace
            .events
            .iter()
            .map(|e| (e.kind, e.wavelength, e.from.to_string(), e.to.to_string()))
            .collect();
        assert_eq!(
            kinds,
            vec![
                (EventKind::RequestSent, Some(4), "G3".into(), "OLT".into()),
                (EventKind::GrantSent, Some(3), "OLT".into(), "G3".into()),
                (EventKind::GrantSent, Some(1), "OLT".into(), "G5".into()),
                (EventKind::Tuned, Some(6), "G3".into(), "G5".into()),
                (EventKind::DataStart, Some(6), "G3".into(), "G5".into()),
                (EventKind::DataEnd, Some(6), "G3".into(), "G5".into()),
            ]
        );
        let times: Vec<u64> = trace.events.iter().map(|e| e.time_us).collect();
        assert_eq!(times, vec![0, 110, 110, 211, 211, 311]);
        // Idle-system data start equals the closed-form setup latency.
        assert_eq!(times[4], setup_latency(&cfg, GroupId(2), GroupId(4)));
    }

    #[test]
    fn reverse_direction_uses_its_own_map_entry() {
        let cfg = config();
        let trace = run(&cfg, &[flow(9, sid(4, 0), sid(2, 0), 10_000, 0)]).unwrap();
        let data = trace
            .events
            .iter()
            .find(|e| e.kind == EventKind::DataStart)
            .unwrap();
        assert_eq!(data.wavelength, Some(5)); // G5 -> G3
    }

    #[test]
    fn intra_rack_flow_never_contacts_the_olt() {
        let cfg = config();
        let trace = run(&cfg, &[flow(1, sid(0, 0), sid(0, 7), 40_000, 5)]).unwrap();
        assert!(trace
            .events
            .iter()
            .all(|e| !matches!(e.kind, EventKind::RequestSent | EventKind::GrantSent)));
        assert!(trace
            .events
            .iter()
            .all(|e| e.from != Endpoint::Olt && e.to != Endpoint::Olt));
        let start = trace
            .events
            .iter()
            .find(|e| e.kind == EventKind::DataStart)
            .unwrap();
        // data-start = arrival + tuning.
        assert_eq!(start.time_us, 5 + cfg.params.tuning_us);
        assert_eq!(start.wavelength, None);
    }

    #[test]
    fn contending_flows_serialize_on_the_shared_data_channel() {
        let cfg = config();
        let trace = run(
            &cfg,
            &[
                flow(1, sid(0, 0), sid(2, 0), 1_000_000, 0),
                flow(2, sid(0, 1), sid(2, 1), 500_000, 0),
            ],
        )
        .unwrap();
        let f2_start = trace
            .events
            .iter()
            .find(|e| e.flow == 2 && e.kind == EventKind::DataStart)
            .unwrap();
        let f1_end = trace
            .events
            .iter()
            .find(|e| e.flow == 1 && e.kind == EventKind::DataEnd)
            .unwrap();
        assert_eq!(f2_start.time_us, f1_end.time_us);
        assert!(trace
            .events
            .iter()
            .any(|e| e.flow == 2 && e.kind == EventKind::Blocked && e.wavelength == Some(2)));
    }

    #[test]
    fn repeated_runs_are_bit_identical() {
        let cfg = config();
        let reqs = [
            flow(1, sid(0, 0), sid(2, 0), 1_000_000, 0),
            flow(2, sid(0, 1), sid(2, 1), 500_000, 0),
            flow(3, sid(3, 3), sid(3, 4), 123_456, 7),
        ];
        let a = run(&cfg, &reqs).unwrap();
        let b = run(&cfg, &reqs).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_jsonl(), b.to_jsonl());
    }

    #[test]
    fn run_rejects_bad_requests() {
        let cfg = config();
        let same = flow(1, sid(0, 0), sid(0, 0), 10, 0);
        assert!(matches!(
            run(&cfg, &[same]),
            Err(SimError::InvalidRequest { id: 1, .. })
        ));
        let unknown = flow(2, sid(0, 0), sid(9, 0), 10, 0);
        assert!(matches!(
            run(&cfg, &[unknown]),
            Err(SimError::InvalidRequest { id: 2, .. })
        ));
        let dup = [
            flow(3, sid(0, 0), sid(1, 0), 10, 0),
            flow(3, sid(0, 1), sid(1, 1), 10, 0),
        ];
        assert!(matches!(
            run(&cfg, &dup),
            Err(SimError::InvalidRequest { id: 3, .. })
        ));
        let empty = flow(4, sid(0, 0), sid(1, 0), 0, 0);
        assert!(matches!(
            run(&cfg, &[empty]),
            Err(SimError::InvalidRequest { id: 4, .. })
        ));
    }

    #[test]
    fn run_rejects_mismatched_or_invalid_map() {
        let topo =
            build_fog_topology(&TopologyParams::default(), &OltCapacity::default()).unwrap();
        let small = crate::rwa::solve(3).unwrap();
        let cfg = SimConfig::new(topo.clone(), small);
        assert!(matches!(
            run(&cfg, &[]),
            Err(SimError::InvalidConfig(_))
        ));

        let mut broken = table1_fixture();
        broken.clear(0, 1).unwrap();
        let cfg = SimConfig::new(topo, broken);
        assert!(matches!(run(&cfg, &[]), Err(SimError::InvalidConfig(_))));
    }

    #[test]
    fn empty_workload_yields_empty_trace() {
        let cfg = config();
        let trace = run(&cfg, &[]).unwrap();
        assert!(trace.events.is_empty());
    }

    #[test]
    fn global_times_are_non_decreasing() {
        let cfg = config();
        let reqs: Vec<FlowRequest> = (0..20)
            .map(|i| {
                flow(
                    i,
                    sid((i % 6) as usize, (i % 16) as usize),
                    sid(((i + 2) % 6) as usize, ((i + 3) % 16) as usize),
                    50_000 + 1000 * i,
                    (i * 13) % 40,
                )
            })
            .collect();
        let trace = run(&cfg, &reqs).unwrap();
        assert!(trace
            .events
            .windows(2)
            .all(|w| w[0].time_us <= w[1].time_us));
    }
}
