//! Cellular PON fog topology and the spine-and-leaf reference fabric.
//!
//! A fog computing unit is a *PON cell* made of racks; each rack is a *PON
//! group* whose servers attach through tunable ONUs to a shared optical
//! segment. One AWGR per group provides passive inter-group routing, and each
//! group has one uplink to the SDN-enabled OLT through an AWG multiplexer.
//! The data plane is entirely passive: server-to-server paths never cross the
//! OLT or any packet switch.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Maximum OLT-to-cell reach, km.
pub const MAX_OLT_KM: f64 = 20.0;
/// Default OLT-to-cell distance, km.
pub const DEFAULT_OLT_KM: f64 = 20.0;
/// Default in-rack fiber run (ONU to rack head), km.
pub const DEFAULT_INTRA_RACK_KM: f64 = 0.005;
/// Default fiber length between AWGRs of racks in the same cell, km.
pub const DEFAULT_INTRA_CELL_AWGR_KM: f64 = 0.05;
/// Default fiber length between AWGRs in different cells, km.
pub const DEFAULT_INTER_CELL_AWGR_KM: f64 = 0.5;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(
        "capacity exceeded: {servers} servers > {max} supported by {usable_cards} usable OLT cards"
    )]
    CapacityExceeded {
        servers: usize,
        max: usize,
        usable_cards: usize,
    },
    #[error("source and destination are the same server")]
    SamePath,
    #[error("unknown server: group index {group}, server index {index}")]
    UnknownNode { group: usize, index: usize },
}

/// Global, dense, 0-based PON group id. Displays as the 1-based rack label
/// used in reports (`G1`, `G2`, ...).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct GroupId(pub usize);

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G{}", self.0 + 1)
    }
}

/// Identifies a server by its group and rack-local index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ServerId {
    pub group: GroupId,
    pub index: usize,
}

impl fmt::Display for ServerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/s{}", self.group, self.index + 1)
    }
}

/// OLT-to-cell distance: one figure for all cells or one per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellKm {
    Uniform(f64),
    PerCell(Vec<f64>),
}

impl CellKm {
    pub fn for_cell(&self, cell: usize) -> f64 {
        match self {
            CellKm::Uniform(km) => *km,
            CellKm::PerCell(v) => v[cell],
        }
    }
}

impl Default for CellKm {
    fn default() -> Self {
        CellKm::Uniform(DEFAULT_OLT_KM)
    }
}

/// Shape of the fog architecture. The default profile is 3 cells of 2 racks
/// of 16 servers (96 servers total).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyParams {
    pub cells: usize,
    pub racks_per_cell: usize,
    pub servers_per_rack: usize,
    pub olt_to_cell_km: CellKm,
    pub intra_rack_km: f64,
    pub intra_cell_awgr_km: f64,
    pub inter_cell_awgr_km: f64,
}

impl Default for TopologyParams {
    fn default() -> Self {
        TopologyParams {
            cells: 3,
            racks_per_cell: 2,
            servers_per_rack: 16,
            olt_to_cell_km: CellKm::default(),
            intra_rack_km: DEFAULT_INTRA_RACK_KM,
            intra_cell_awgr_km: DEFAULT_INTRA_CELL_AWGR_KM,
            inter_cell_awgr_km: DEFAULT_INTER_CELL_AWGR_KM,
        }
    }
}

impl TopologyParams {
    pub fn n_groups(&self) -> usize {
        self.cells * self.racks_per_cell
    }

    pub fn servers_per_cell(&self) -> usize {
        self.racks_per_cell * self.servers_per_rack
    }

    pub fn total_servers(&self) -> usize {
        self.cells * self.servers_per_cell()
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        if self.cells == 0 || self.racks_per_cell == 0 || self.servers_per_rack == 0 {
            return Err(TopologyError::InvalidParams(
                "cells, racks_per_cell and servers_per_rack must all be >= 1".into(),
            ));
        }
        if let CellKm::PerCell(v) = &self.olt_to_cell_km {
            if v.len() != self.cells {
                return Err(TopologyError::InvalidParams(format!(
                    "olt_to_cell_km lists {} distances for {} cells",
                    v.len(),
                    self.cells
                )));
            }
        }
        for cell in 0..self.cells {
            let km = self.olt_to_cell_km.for_cell(cell);
            if !(km > 0.0 && km <= MAX_OLT_KM) {
                return Err(TopologyError::InvalidParams(format!(
                    "olt_to_cell_km for cell {cell} is {km}; must lie in (0, {MAX_OLT_KM}]"
                )));
            }
        }
        for (name, km) in [
            ("intra_rack_km", self.intra_rack_km),
            ("intra_cell_awgr_km", self.intra_cell_awgr_km),
            ("inter_cell_awgr_km", self.inter_cell_awgr_km),
        ] {
            if !(km >= 0.0 && km.is_finite()) {
                return Err(TopologyError::InvalidParams(format!(
                    "{name} is {km}; must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }
}

/// OLT chassis capacity: 18 card slots, two reserved for switching matrix and
/// control, 16 GPON ports per card, up to 128 ONUs per port.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OltCapacity {
    pub cards_per_chassis_total: usize,
    pub cards_reserved: usize,
    pub ports_per_card: usize,
    pub split_ratio_per_port: usize,
}

impl Default for OltCapacity {
    fn default() -> Self {
        OltCapacity {
            cards_per_chassis_total: 18,
            cards_reserved: 2,
            ports_per_card: 16,
            split_ratio_per_port: 128,
        }
    }
}

impl OltCapacity {
    pub fn usable_cards(&self) -> usize {
        self.cards_per_chassis_total - self.cards_reserved
    }

    /// Servers one GPON line card can serve (2048 with the defaults).
    pub fn card_capacity(&self) -> usize {
        self.ports_per_card * self.split_ratio_per_port
    }

    pub fn max_servers(&self) -> usize {
        self.usable_cards() * self.card_capacity()
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        if self.cards_per_chassis_total == 0
            || self.ports_per_card == 0
            || self.split_ratio_per_port == 0
        {
            return Err(TopologyError::InvalidParams(
                "OLT card, port and split-ratio counts must all be >= 1".into(),
            ));
        }
        if self.cards_reserved >= self.cards_per_chassis_total {
            return Err(TopologyError::InvalidParams(format!(
                "{} reserved cards leave no usable card in a {}-slot chassis",
                self.cards_reserved, self.cards_per_chassis_total
            )));
        }
        Ok(())
    }
}

/// Wavelength-tunable ONU transceiver attached to one server.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Onu {
    /// Globally unique transceiver id (equals the server's global index).
    pub id: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServerNode {
    pub group: GroupId,
    pub index: usize,
    pub onu: Onu,
}

impl ServerNode {
    pub fn id(&self) -> ServerId {
        ServerId {
            group: self.group,
            index: self.index,
        }
    }
}

/// One rack: a PON group sharing an optical segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PonGroup {
    pub cell: usize,
    pub id: GroupId,
    pub servers: Vec<ServerNode>,
}

/// One fog computing unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PonCell {
    pub id: usize,
    pub olt_km: f64,
    pub groups: Vec<PonGroup>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkKind {
    IntraCell,
    InterCell,
}

/// Unordered AWGR-to-AWGR fiber link, stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AwgrLink {
    pub a: GroupId,
    pub b: GroupId,
    pub kind: LinkKind,
    pub length_km: f64,
}

/// Per-group uplink toward the OLT through the cell's AWG multiplexer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AwgUplink {
    pub group: GroupId,
    pub length_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OltNode {
    pub capacity: OltCapacity,
}

/// The cellular PON fog architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FogTopology {
    pub params: TopologyParams,
    pub olt: OltNode,
    pub cells: Vec<PonCell>,
    pub awgr_links: Vec<AwgrLink>,
    pub awg_uplinks: Vec<AwgUplink>,
}

/// RWA endpoint: a PON group or the OLT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Endpoint {
    Group(GroupId),
    Olt,
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Group(g) => write!(f, "{g}"),
            Endpoint::Olt => write!(f, "OLT"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathClass {
    IntraRack,
    InterRackSameCell,
    InterCell,
}

/// Element of a data path. Leaf/spine switches and server transceivers only
/// ever appear in spine-and-leaf paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathElement {
    Onu(ServerId),
    CouplerFbg(GroupId),
    Awgr(GroupId),
    Fiber { km: f64 },
    LeafSwitch(usize),
    SpineSwitch(usize),
    Transceiver(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPath {
    pub elements: Vec<PathElement>,
    pub class: PathClass,
}

impl DataPath {
    pub fn awgr_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, PathElement::Awgr(_)))
            .count()
    }

    pub fn crosses_olt(&self) -> bool {
        // The OLT has no path-element variant; a data path can never contain it.
        false
    }
}

/// Structural violation found by [`FogTopology::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    MissingAwgrLink { a: GroupId, b: GroupId },
    DuplicateAwgrLink { a: GroupId, b: GroupId },
    SelfAwgrLink { group: GroupId },
    DanglingAwgrLink { a: GroupId, b: GroupId },
    WrongLinkKind { a: GroupId, b: GroupId },
    MissingOltUplink { group: GroupId },
    DuplicateOltUplink { group: GroupId },
    DanglingOltUplink { group: GroupId },
    NonDenseGroupIds { expected: usize, got: Vec<usize> },
    InvalidDistance { what: String, km: f64 },
    EmptyGroup { group: GroupId },
    ServerGroupMismatch { group: GroupId, index: usize },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::MissingAwgrLink { a, b } => {
                write!(f, "missing AWGR link between {a} and {b}")
            }
            Diagnostic::DuplicateAwgrLink { a, b } => {
                write!(f, "duplicate AWGR link between {a} and {b}")
            }
            Diagnostic::SelfAwgrLink { group } => write!(f, "AWGR link from {group} to itself"),
            Diagnostic::DanglingAwgrLink { a, b } => {
                write!(f, "AWGR link {a}-{b} references an unknown group")
            }
            Diagnostic::WrongLinkKind { a, b } => {
                write!(f, "AWGR link {a}-{b} has a kind inconsistent with its cells")
            }
            Diagnostic::MissingOltUplink { group } => {
                write!(f, "group {group} has no uplink to the OLT")
            }
            Diagnostic::DuplicateOltUplink { group } => {
                write!(f, "group {group} has more than one uplink to the OLT")
            }
            Diagnostic::DanglingOltUplink { group } => {
                write!(f, "OLT uplink references unknown group {group}")
            }
            Diagnostic::NonDenseGroupIds { expected, got } => write!(
                f,
                "group ids are not dense 0..{expected}: found {got:?}"
            ),
            Diagnostic::InvalidDistance { what, km } => {
                write!(f, "{what}: distance {km} km out of range")
            }
            Diagnostic::EmptyGroup { group } => write!(f, "group {group} has no servers"),
            Diagnostic::ServerGroupMismatch { group, index } => write!(
                f,
                "server {index} in group {group} carries a different group id"
            ),
        }
    }
}

/// Builds the cellular PON fog topology. Deterministic: identical inputs
/// produce an identical structure.
pub fn build_fog_topology(
    params: &TopologyParams,
    capacity: &OltCapacity,
) -> Result<FogTopology, TopologyError> {
    params.validate()?;
    capacity.validate()?;

    let servers = params.total_servers();
    if servers > capacity.max_servers() {
        return Err(TopologyError::CapacityExceeded {
            servers,
            max: capacity.max_servers(),
            usable_cards: capacity.usable_cards(),
        });
    }

    let mut cells = Vec::with_capacity(params.cells);
    let mut onu_id = 0usize;
    for cell in 0..params.cells {
        let mut groups = Vec::with_capacity(params.racks_per_cell);
        for rack in 0..params.racks_per_cell {
            let gid = GroupId(cell * params.racks_per_cell + rack);
            let servers = (0..params.servers_per_rack)
                .map(|index| {
                    let node = ServerNode {
                        group: gid,
                        index,
                        onu: Onu { id: onu_id },
                    };
                    onu_id += 1;
                    node
                })
                .collect();
            groups.push(PonGroup {
                cell,
                id: gid,
                servers,
            });
        }
        cells.push(PonCell {
            id: cell,
            olt_km: params.olt_to_cell_km.for_cell(cell),
            groups,
        });
    }

    let n_groups = params.n_groups();
    let cell_of = |g: usize| g / params.racks_per_cell;
    let mut awgr_links = Vec::with_capacity(n_groups * n_groups.saturating_sub(1) / 2);
    for a in 0..n_groups {
        for b in (a + 1)..n_groups {
            let (kind, length_km) = if cell_of(a) == cell_of(b) {
                (LinkKind::IntraCell, params.intra_cell_awgr_km)
            } else {
                (LinkKind::InterCell, params.inter_cell_awgr_km)
            };
            awgr_links.push(AwgrLink {
                a: GroupId(a),
                b: GroupId(b),
                kind,
                length_km,
            });
        }
    }

    let awg_uplinks = (0..n_groups)
        .map(|g| AwgUplink {
            group: GroupId(g),
            length_km: params.olt_to_cell_km.for_cell(cell_of(g)),
        })
        .collect();

    Ok(FogTopology {
        params: params.clone(),
        olt: OltNode {
            capacity: capacity.clone(),
        },
        cells,
        awgr_links,
        awg_uplinks,
    })
}

impl FogTopology {
    pub fn n_groups(&self) -> usize {
        self.cells.iter().map(|c| c.groups.len()).sum()
    }

    pub fn n_servers(&self) -> usize {
        self.cells
            .iter()
            .flat_map(|c| &c.groups)
            .map(|g| g.servers.len())
            .sum()
    }

    pub fn group(&self, id: GroupId) -> Option<&PonGroup> {
        self.cells
            .iter()
            .flat_map(|c| &c.groups)
            .find(|g| g.id == id)
    }

    pub fn server(&self, id: ServerId) -> Option<&ServerNode> {
        self.group(id.group)?.servers.get(id.index)
    }

    pub fn cell_of(&self, id: GroupId) -> Option<usize> {
        self.group(id).map(|g| g.cell)
    }

    /// OLT-to-cell distance for the cell hosting `id`, km.
    pub fn olt_km(&self, id: GroupId) -> Option<f64> {
        let cell = self.cell_of(id)?;
        self.cells.get(cell).map(|c| c.olt_km)
    }

    pub fn has_awgr_link(&self, a: GroupId, b: GroupId) -> bool {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        self.awgr_links.iter().any(|l| l.a == lo && l.b == hi)
    }

    pub fn awgr_link(&self, a: GroupId, b: GroupId) -> Option<&AwgrLink> {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        self.awgr_links.iter().find(|l| l.a == lo && l.b == hi)
    }

    /// All RWA endpoints: groups in global id order, then the OLT.
    pub fn endpoints(&self) -> Vec<Endpoint> {
        let mut eps: Vec<Endpoint> = self
            .cells
            .iter()
            .flat_map(|c| &c.groups)
            .map(|g| Endpoint::Group(g.id))
            .collect();
        eps.sort();
        eps.push(Endpoint::Olt);
        eps
    }

    /// Passive data path between two servers. The OLT never appears;
    /// inter-group paths traverse exactly two AWGRs.
    pub fn data_path(&self, src: ServerId, dst: ServerId) -> Result<DataPath, TopologyError> {
        if src == dst {
            return Err(TopologyError::SamePath);
        }
        for id in [src, dst] {
            if self.server(id).is_none() {
                return Err(TopologyError::UnknownNode {
                    group: id.group.0,
                    index: id.index,
                });
            }
        }

        if src.group == dst.group {
            return Ok(DataPath {
                elements: vec![
                    PathElement::Onu(src),
                    PathElement::CouplerFbg(src.group),
                    PathElement::Onu(dst),
                ],
                class: PathClass::IntraRack,
            });
        }

        let link = self
            .awgr_link(src.group, dst.group)
            .ok_or(TopologyError::UnknownNode {
                group: dst.group.0,
                index: dst.index,
            })?;
        let class = match link.kind {
            LinkKind::IntraCell => PathClass::InterRackSameCell,
            LinkKind::InterCell => PathClass::InterCell,
        };
        Ok(DataPath {
            elements: vec![
                PathElement::Onu(src),
                PathElement::Fiber {
                    km: self.params.intra_rack_km,
                },
                PathElement::Awgr(src.group),
                PathElement::Fiber { km: link.length_km },
                PathElement::Awgr(dst.group),
                PathElement::Fiber {
                    km: self.params.intra_rack_km,
                },
                PathElement::Onu(dst),
            ],
            class,
        })
    }

    /// Checks every structural invariant and returns one diagnostic per
    /// violation. Empty result means the topology is sound.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();

        let mut ids: Vec<usize> = self
            .cells
            .iter()
            .flat_map(|c| &c.groups)
            .map(|g| g.id.0)
            .collect();
        ids.sort_unstable();
        let n = ids.len();
        if ids != (0..n).collect::<Vec<_>>() {
            out.push(Diagnostic::NonDenseGroupIds {
                expected: n,
                got: ids.clone(),
            });
        }
        let known = |g: GroupId| self.group(g).is_some();

        for cell in &self.cells {
            if !(cell.olt_km > 0.0 && cell.olt_km <= MAX_OLT_KM) {
                out.push(Diagnostic::InvalidDistance {
                    what: format!("cell {} OLT uplink", cell.id),
                    km: cell.olt_km,
                });
            }
            for group in &cell.groups {
                if group.servers.is_empty() {
                    out.push(Diagnostic::EmptyGroup { group: group.id });
                }
                for (index, server) in group.servers.iter().enumerate() {
                    if server.group != group.id {
                        out.push(Diagnostic::ServerGroupMismatch {
                            group: group.id,
                            index,
                        });
                    }
                }
            }
        }

        // Complete graph over AWGRs: every pair linked exactly once, kinds
        // consistent with cell membership.
        let mut seen = std::collections::BTreeSet::new();
        for link in &self.awgr_links {
            if link.a == link.b {
                out.push(Diagnostic::SelfAwgrLink { group: link.a });
                continue;
            }
            if !known(link.a) || !known(link.b) {
                out.push(Diagnostic::DanglingAwgrLink {
                    a: link.a,
                    b: link.b,
                });
                continue;
            }
            let key = if link.a < link.b {
                (link.a, link.b)
            } else {
                (link.b, link.a)
            };
            if !seen.insert(key) {
                out.push(Diagnostic::DuplicateAwgrLink { a: key.0, b: key.1 });
            }
            let same_cell = self.cell_of(link.a) == self.cell_of(link.b);
            let kind_ok = matches!(
                (same_cell, link.kind),
                (true, LinkKind::IntraCell) | (false, LinkKind::InterCell)
            );
            if !kind_ok {
                out.push(Diagnostic::WrongLinkKind {
                    a: link.a,
                    b: link.b,
                });
            }
        }
        for a in 0..n {
            for b in (a + 1)..n {
                if !seen.contains(&(GroupId(a), GroupId(b))) {
                    out.push(Diagnostic::MissingAwgrLink {
                        a: GroupId(a),
                        b: GroupId(b),
                    });
                }
            }
        }

        // Exactly one OLT uplink per group.
        let mut uplinked = std::collections::BTreeSet::new();
        for up in &self.awg_uplinks {
            if !known(up.group) {
                out.push(Diagnostic::DanglingOltUplink { group: up.group });
                continue;
            }
            if !uplinked.insert(up.group) {
                out.push(Diagnostic::DuplicateOltUplink { group: up.group });
            }
        }
        for g in 0..n {
            if known(GroupId(g)) && !uplinked.contains(&GroupId(g)) {
                out.push(Diagnostic::MissingOltUplink { group: GroupId(g) });
            }
        }

        out
    }

    /// Pretty-printed JSON document with stable key order.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serializes")
    }

    /// DOT digraph of the physical topology for visualization tooling.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph pon_fog {\n");
        s.push_str("  rankdir=TB;\n");
        s.push_str("  olt [label=\"SDN-enabled OLT\", shape=box];\n");
        for cell in &self.cells {
            s.push_str(&format!(
                "  subgraph cluster_cell{} {{\n    label=\"PON cell {}\";\n",
                cell.id,
                cell.id + 1
            ));
            for group in &cell.groups {
                let g = group.id.0;
                s.push_str(&format!(
                    "    rack{g} [label=\"{} ({} servers)\", shape=box];\n",
                    group.id,
                    group.servers.len()
                ));
                s.push_str(&format!(
                    "    awgr{g} [label=\"AWGR {}\", shape=diamond];\n",
                    group.id
                ));
            }
            s.push_str(&format!(
                "    awg{} [label=\"AWG mux (cell {})\", shape=trapezium];\n",
                cell.id,
                cell.id + 1
            ));
            s.push_str("  }\n");
        }
        for cell in &self.cells {
            for group in &cell.groups {
                s.push_str(&format!("  rack{g} -> awgr{g};\n", g = group.id.0));
            }
        }
        for link in &self.awgr_links {
            s.push_str(&format!(
                "  awgr{} -> awgr{} [label=\"{:.2} km\"];\n",
                link.a.0, link.b.0, link.length_km
            ));
        }
        for up in &self.awg_uplinks {
            if let Some(cell) = self.cell_of(up.group) {
                s.push_str(&format!("  awgr{} -> awg{};\n", up.group.0, cell));
            }
        }
        for cell in &self.cells {
            s.push_str(&format!(
                "  awg{} -> olt [label=\"{:.1} km\"];\n",
                cell.id, cell.olt_km
            ));
        }
        s.push_str("}\n");
        s
    }
}

/// Sizing rule for the switched reference fabric: one leaf per 48 servers,
/// at least two spines, one spine per four leaves beyond that.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpineLeafParams {
    pub leaf_server_ports: usize,
    pub leaf_uplink_ports: usize,
    pub min_spines: usize,
    pub leaves_per_spine: usize,
}

impl Default for SpineLeafParams {
    fn default() -> Self {
        SpineLeafParams {
            leaf_server_ports: 48,
            leaf_uplink_ports: 32,
            min_spines: 2,
            leaves_per_spine: 4,
        }
    }
}

/// Two-tier switched fabric sized by [`build_spine_leaf`]. Every server
/// attaches to exactly one leaf; every leaf links to every spine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpineLeafTopology {
    pub n_servers: usize,
    pub n_leaves: usize,
    pub n_spines: usize,
    pub params: SpineLeafParams,
}

pub fn build_spine_leaf(
    n_servers: usize,
    params: &SpineLeafParams,
) -> Result<SpineLeafTopology, TopologyError> {
    if params.leaf_server_ports == 0
        || params.leaf_uplink_ports == 0
        || params.min_spines == 0
        || params.leaves_per_spine == 0
    {
        return Err(TopologyError::InvalidParams(
            "spine-leaf port and ratio parameters must all be >= 1".into(),
        ));
    }
    if n_servers == 0 {
        return Err(TopologyError::InvalidParams(
            "spine-leaf fabric needs at least one server".into(),
        ));
    }
    let n_leaves = n_servers.div_ceil(params.leaf_server_ports);
    let n_spines = params
        .min_spines
        .max(n_leaves.div_ceil(params.leaves_per_spine));
    if n_spines > params.leaf_uplink_ports {
        return Err(TopologyError::InvalidParams(format!(
            "{n_spines} spines exceed {} leaf uplink ports",
            params.leaf_uplink_ports
        )));
    }
    Ok(SpineLeafTopology {
        n_servers,
        n_leaves,
        n_spines,
        params: params.clone(),
    })
}

impl SpineLeafTopology {
    pub fn leaf_of_server(&self, server: usize) -> Option<usize> {
        (server < self.n_servers).then(|| server / self.params.leaf_server_ports)
    }

    /// All leaf-spine links (complete bipartite).
    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_leaves).flat_map(move |l| (0..self.n_spines).map(move |s| (l, s)))
    }

    /// Switched path between two servers; crosses a spine unless both share
    /// a leaf. Spine choice is a deterministic hash of the leaf pair.
    pub fn path_elements(
        &self,
        src: usize,
        dst: usize,
    ) -> Result<Vec<PathElement>, TopologyError> {
        if src == dst {
            return Err(TopologyError::SamePath);
        }
        let (src_leaf, dst_leaf) = match (self.leaf_of_server(src), self.leaf_of_server(dst)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(TopologyError::UnknownNode {
                    group: 0,
                    index: src.max(dst),
                })
            }
        };
        let mut elements = vec![
            PathElement::Transceiver(src),
            PathElement::LeafSwitch(src_leaf),
        ];
        if src_leaf != dst_leaf {
            elements.push(PathElement::SpineSwitch((src_leaf + dst_leaf) % self.n_spines));
            elements.push(PathElement::LeafSwitch(dst_leaf));
        }
        elements.push(PathElement::Transceiver(dst));
        Ok(elements)
    }
}
