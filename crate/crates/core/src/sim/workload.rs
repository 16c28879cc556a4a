//! Workload input: CSV parsing and synthetic generation.

use super::{FlowRequest, SimError};
use crate::topology::{FogTopology, GroupId, ServerId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Header of the workload CSV. Cell, group and server ids in the file are
/// 1-based, matching the `G1..` labels used in reports.
pub const WORKLOAD_HEADER: &str =
    "flow_id,src_cell,src_group,src_server,dst_cell,dst_group,dst_server,size_bits,arrival_us";

/// Parses a workload CSV against a topology, validating every reference.
/// Errors carry 1-based line numbers.
pub fn parse_workload(text: &str, topo: &FogTopology) -> Result<Vec<FlowRequest>, SimError> {
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != WORKLOAD_HEADER {
                return Err(SimError::WorkloadParse {
                    line: lineno,
                    msg: format!("expected header '{WORKLOAD_HEADER}'"),
                });
            }
            saw_header = true;
            continue;
        }

        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 9 {
            return Err(SimError::WorkloadParse {
                line: lineno,
                msg: format!("expected 9 fields, found {}", fields.len()),
            });
        }
        let num = |i: usize, name: &str| -> Result<u64, SimError> {
            fields[i].parse().map_err(|_| SimError::WorkloadParse {
                line: lineno,
                msg: format!("{name} '{}' is not a non-negative integer", fields[i]),
            })
        };
        let id = num(0, "flow_id")?;
        let src = endpoint_ref(
            topo,
            lineno,
            "src",
            num(1, "src_cell")?,
            num(2, "src_group")?,
            num(3, "src_server")?,
        )?;
        let dst = endpoint_ref(
            topo,
            lineno,
            "dst",
            num(4, "dst_cell")?,
            num(5, "dst_group")?,
            num(6, "dst_server")?,
        )?;
        let size_bits = num(7, "size_bits")?;
        let arrival_us = num(8, "arrival_us")?;
        if size_bits == 0 {
            return Err(SimError::WorkloadParse {
                line: lineno,
                msg: "size_bits must be > 0".into(),
            });
        }
        rows.push(FlowRequest {
            id,
            src,
            dst,
            size_bits,
            arrival_us,
        });
    }
    Ok(rows)
}

fn endpoint_ref(
    topo: &FogTopology,
    lineno: usize,
    side: &str,
    cell_1b: u64,
    group_1b: u64,
    server_1b: u64,
) -> Result<ServerId, SimError> {
    let fail = |msg: String| SimError::WorkloadParse { line: lineno, msg };
    if cell_1b == 0 || group_1b == 0 || server_1b == 0 {
        return Err(fail(format!("{side} ids are 1-based; 0 is not valid")));
    }
    let group = GroupId(group_1b as usize - 1);
    let cell = cell_1b as usize - 1;
    let index = server_1b as usize - 1;
    match topo.group(group) {
        None => Err(fail(format!("{side}_group {group_1b} does not exist"))),
        Some(g) if g.cell != cell => Err(fail(format!(
            "{side}_group {group_1b} lives in cell {}, not cell {cell_1b}",
            g.cell + 1
        ))),
        Some(g) if index >= g.servers.len() => Err(fail(format!(
            "{side}_server {server_1b} exceeds the {} servers of group {group_1b}",
            g.servers.len()
        ))),
        Some(_) => Ok(ServerId { group, index }),
    }
}

/// Renders requests back to the CSV format accepted by [`parse_workload`].
pub fn render_workload(topo: &FogTopology, requests: &[FlowRequest]) -> String {
    let mut s = String::from(WORKLOAD_HEADER);
    s.push('\n');
    for r in requests {
        let src_cell = topo.cell_of(r.src.group).expect("known group") + 1;
        let dst_cell = topo.cell_of(r.dst.group).expect("known group") + 1;
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.id,
            src_cell,
            r.src.group.0 + 1,
            r.src.index + 1,
            dst_cell,
            r.dst.group.0 + 1,
            r.dst.index + 1,
            r.size_bits,
            r.arrival_us
        ));
    }
    s
}

/// Deterministic random workload: `n_flows` transfers between distinct
/// servers with sizes in [10 kb, 10 Mb] and arrivals in [0, 1000) us. The
/// same seed always yields the same workload.
pub fn synthetic_workload(topo: &FogTopology, n_flows: usize, seed: u64) -> Vec<FlowRequest> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let servers: Vec<ServerId> = topo
        .cells
        .iter()
        .flat_map(|c| &c.groups)
        .flat_map(|g| &g.servers)
        .map(|s| s.id())
        .collect();
    assert!(servers.len() >= 2, "need at least two servers");
    (0..n_flows)
        .map(|i| {
            let src = servers[rng.gen_range(0..servers.len())];
            let dst = loop {
                let d = servers[rng.gen_range(0..servers.len())];
                if d != src {
                    break d;
                }
            };
            FlowRequest {
                id: i as u64 + 1,
                src,
                dst,
                size_bits: rng.gen_range(10_000..=10_000_000),
                arrival_us: rng.gen_range(0..1000),
            }
        })
        .collect()
}
