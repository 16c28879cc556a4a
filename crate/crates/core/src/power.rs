//! Itemized power accounting for the PON fog architecture and the
//! spine-and-leaf reference, plus savings sweeps over server counts.
//!
//! The fog side draws power only in tunable ONUs (one per server) and OLT
//! GPON line cards; AWGRs, AWG multiplexers and FBG/star couplers are passive
//! and listed at 0 W. The switched reference draws power in leaf switches,
//! spine switches and per-server transceivers. All arithmetic is generic
//! over the float type; `f64` aliases live at the crate root.

use crate::topology::{self, OltCapacity, SpineLeafParams, TopologyError, TopologyParams};
use num_traits::{Float, FromPrimitive};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Scalar type the power arithmetic runs on: `f32`, `f64`, or anything
/// float-like with the same trait surface.
pub trait Scalar: Float + FromPrimitive + fmt::Debug + fmt::Display {}
impl<T> Scalar for T where T: Float + FromPrimitive + fmt::Debug + fmt::Display {}

#[derive(Debug, Error)]
pub enum PowerError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// How GPON line cards are counted against servers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CardAllocation {
    /// One card per PON cell (more if a cell outgrows one card's split
    /// capacity). Reproduces the published 96-server operating point.
    #[default]
    PerCell,
    /// Cards pooled across the whole deployment, one per 2048 servers.
    SharedByCapacity,
}

/// Device power constants in watts. Defaults are the published equipment
/// figures: 90 W GPON card, 2.5 W tunable ONU, 660 W spine switch, 508 W
/// leaf switch, 3 W server transceiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    deny_unknown_fields,
    bound(deserialize = "T: serde::Deserialize<'de> + Scalar")
)]
pub struct PowerParams<T> {
    pub olt_gpon_card_w: T,
    pub tunable_onu_w: T,
    pub spine_switch_w: T,
    pub leaf_switch_w: T,
    pub server_transceiver_w: T,
    /// Extra OLT power (switching matrix, control cards) not priced by the
    /// equipment table. Disabled by default.
    pub olt_overhead_w: T,
    pub card_allocation: CardAllocation,
}

impl<T: Scalar> Default for PowerParams<T> {
    fn default() -> Self {
        let w = |x| T::from_f64(x).expect("constant fits scalar");
        PowerParams {
            olt_gpon_card_w: w(90.0),
            tunable_onu_w: w(2.5),
            spine_switch_w: w(660.0),
            leaf_switch_w: w(508.0),
            server_transceiver_w: w(3.0),
            olt_overhead_w: w(0.0),
            card_allocation: CardAllocation::default(),
        }
    }
}

impl<T: Scalar> PowerParams<T> {
    pub fn validate(&self) -> Result<(), PowerError> {
        let fields = [
            ("olt_gpon_card_w", self.olt_gpon_card_w),
            ("tunable_onu_w", self.tunable_onu_w),
            ("spine_switch_w", self.spine_switch_w),
            ("leaf_switch_w", self.leaf_switch_w),
            ("server_transceiver_w", self.server_transceiver_w),
            ("olt_overhead_w", self.olt_overhead_w),
        ];
        for (name, v) in fields {
            if !(v >= T::zero() && v.is_finite()) {
                return Err(PowerError::InvalidParams(format!(
                    "{name} must be finite and >= 0 (got {v})"
                )));
            }
        }
        Ok(())
    }

    /// All unit powers multiplied by a common factor; savings are invariant
    /// under this.
    pub fn scaled(&self, factor: T) -> PowerParams<T> {
        PowerParams {
            olt_gpon_card_w: self.olt_gpon_card_w * factor,
            tunable_onu_w: self.tunable_onu_w * factor,
            spine_switch_w: self.spine_switch_w * factor,
            leaf_switch_w: self.leaf_switch_w * factor,
            server_transceiver_w: self.server_transceiver_w * factor,
            olt_overhead_w: self.olt_overhead_w * factor,
            card_allocation: self.card_allocation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeviceKind {
    OltGponCard,
    TunableOnu,
    Awgr,
    AwgMux,
    FbgCoupler,
    OltOverhead,
    LeafSwitch,
    SpineSwitch,
    ServerTransceiver,
}

impl DeviceKind {
    pub fn is_switch(&self) -> bool {
        matches!(self, DeviceKind::LeafSwitch | DeviceKind::SpineSwitch)
    }

    pub fn is_passive(&self) -> bool {
        matches!(
            self,
            DeviceKind::Awgr | DeviceKind::AwgMux | DeviceKind::FbgCoupler
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    PonFog,
    SpineLeaf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerItem<T> {
    pub device: DeviceKind,
    pub count: usize,
    pub unit_w: T,
    pub subtotal_w: T,
}

/// Itemized power report for one architecture.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerBreakdown<T> {
    pub architecture: Architecture,
    pub items: Vec<PowerItem<T>>,
    pub total_w: T,
}

impl<T: Scalar> PowerBreakdown<T> {
    fn build(architecture: Architecture, raw: Vec<(DeviceKind, usize, T)>) -> Self {
        let items: Vec<PowerItem<T>> = raw
            .into_iter()
            .map(|(device, count, unit_w)| PowerItem {
                device,
                count,
                unit_w,
                subtotal_w: unit_w * T::from_usize(count).expect("count fits scalar"),
            })
            .collect();
        let total_w = items
            .iter()
            .fold(T::zero(), |acc, item| acc + item.subtotal_w);
        PowerBreakdown {
            architecture,
            items,
            total_w,
        }
    }

    /// True when every subtotal equals count x unit watts and the total is
    /// the sum of subtotals.
    pub fn is_consistent(&self) -> bool {
        let mut sum = T::zero();
        for item in &self.items {
            let expect = item.unit_w * T::from_usize(item.count).expect("count fits scalar");
            if item.subtotal_w != expect {
                return false;
            }
            sum = sum + item.subtotal_w;
        }
        sum == self.total_w
    }

    pub fn to_json(&self) -> String
    where
        T: Serialize,
    {
        serde_json::to_string_pretty(self).expect("breakdown serializes")
    }
}

/// GPON line cards needed for `n_servers` under the given allocation policy.
fn gpon_cards(
    n_servers: usize,
    topo: &TopologyParams,
    capacity: &OltCapacity,
    allocation: CardAllocation,
) -> usize {
    let card_cap = capacity.card_capacity();
    match allocation {
        CardAllocation::PerCell => {
            let per_cell = topo.servers_per_cell();
            let full = n_servers / per_cell;
            let rem = n_servers % per_cell;
            let cards_full_cell = per_cell.div_ceil(card_cap);
            full * cards_full_cell + if rem > 0 { rem.div_ceil(card_cap) } else { 0 }
        }
        CardAllocation::SharedByCapacity => n_servers.div_ceil(card_cap),
    }
}

/// Power of the PON fog architecture at an arbitrary server count, growing
/// the default cell shape as needed (one more cell per `servers_per_cell`
/// servers).
pub fn pon_fog_power_for_servers<T: Scalar>(
    n_servers: usize,
    topo: &TopologyParams,
    capacity: &OltCapacity,
    p: &PowerParams<T>,
) -> Result<PowerBreakdown<T>, PowerError> {
    topo.validate()?;
    capacity.validate()?;
    p.validate()?;
    if n_servers == 0 {
        return Err(PowerError::InvalidParams(
            "power model needs at least one server".into(),
        ));
    }
    if n_servers > capacity.max_servers() {
        return Err(TopologyError::CapacityExceeded {
            servers: n_servers,
            max: capacity.max_servers(),
            usable_cards: capacity.usable_cards(),
        }
        .into());
    }

    let cards = gpon_cards(n_servers, topo, capacity, p.card_allocation);
    let groups = n_servers.div_ceil(topo.servers_per_rack);
    let cells = n_servers.div_ceil(topo.servers_per_cell());

    let mut raw = vec![
        (DeviceKind::OltGponCard, cards, p.olt_gpon_card_w),
        (DeviceKind::TunableOnu, n_servers, p.tunable_onu_w),
        (DeviceKind::Awgr, groups, T::zero()),
        (DeviceKind::AwgMux, cells, T::zero()),
        (DeviceKind::FbgCoupler, groups, T::zero()),
    ];
    if p.olt_overhead_w > T::zero() {
        raw.push((DeviceKind::OltOverhead, 1, p.olt_overhead_w));
    }
    Ok(PowerBreakdown::build(Architecture::PonFog, raw))
}

/// Power of the PON fog architecture described exactly by `topo`.
pub fn pon_fog_power<T: Scalar>(
    topo: &TopologyParams,
    capacity: &OltCapacity,
    p: &PowerParams<T>,
) -> Result<PowerBreakdown<T>, PowerError> {
    topo.validate()?;
    pon_fog_power_for_servers(topo.total_servers(), topo, capacity, p)
}

/// Power of the spine-and-leaf reference at `n_servers`.
pub fn spine_leaf_power<T: Scalar>(
    n_servers: usize,
    slp: &SpineLeafParams,
    p: &PowerParams<T>,
) -> Result<PowerBreakdown<T>, PowerError> {
    p.validate()?;
    let fabric = topology::build_spine_leaf(n_servers, slp)?;
    Ok(PowerBreakdown::build(
        Architecture::SpineLeaf,
        vec![
            (DeviceKind::LeafSwitch, fabric.n_leaves, p.leaf_switch_w),
            (DeviceKind::SpineSwitch, fabric.n_spines, p.spine_switch_w),
            (
                DeviceKind::ServerTransceiver,
                n_servers,
                p.server_transceiver_w,
            ),
        ],
    ))
}

/// Fractional power saving of the fog architecture over the switched
/// reference: `1 - pon_fog / spine_leaf`.
pub fn savings<T: Scalar>(
    n_servers: usize,
    topo: &TopologyParams,
    capacity: &OltCapacity,
    slp: &SpineLeafParams,
    p: &PowerParams<T>,
) -> Result<T, PowerError> {
    let pon = pon_fog_power_for_servers(n_servers, topo, capacity, p)?;
    let reference = spine_leaf_power(n_servers, slp, p)?;
    if reference.total_w <= T::zero() {
        return Err(PowerError::InvalidParams(
            "reference architecture consumes no power; savings undefined".into(),
        ));
    }
    Ok(T::one() - pon.total_w / reference.total_w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint<T> {
    pub pon_fog_w: T,
    pub spine_leaf_w: T,
    pub savings: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub n_servers: usize,
    /// `Err` carries the reason a point was infeasible; the sweep continues.
    pub result: Result<SweepPoint<T>, String>,
}

/// Rows of (server count, fog watts, reference watts, savings), ascending in
/// server count.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSeries<T> {
    pub rows: Vec<SweepRow<T>>,
}

impl<T: Scalar> SweepSeries<T> {
    /// CSV with fixed-point watts (one decimal) and four-decimal savings.
    /// Infeasible rows keep their server count and dash out the values.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n_servers,pon_fog_w,spine_leaf_w,savings\n");
        for row in &self.rows {
            match &row.result {
                Ok(p) => s.push_str(&format!(
                    "{},{:.1},{:.1},{:.4}\n",
                    row.n_servers, p.pon_fog_w, p.spine_leaf_w, p.savings
                )),
                Err(_) => s.push_str(&format!("{},-,-,-\n", row.n_servers)),
            }
        }
        s
    }

    /// Space-separated data block for gnuplot; infeasible rows become
    /// comments.
    pub fn to_gnuplot(&self) -> String {
        let mut s = String::from("# n_servers pon_fog_w spine_leaf_w savings\n");
        for row in &self.rows {
            match &row.result {
                Ok(p) => s.push_str(&format!(
                    "{} {:.1} {:.1} {:.4}\n",
                    row.n_servers, p.pon_fog_w, p.spine_leaf_w, p.savings
                )),
                Err(reason) => {
                    s.push_str(&format!("# {} infeasible: {}\n", row.n_servers, reason))
                }
            }
        }
        s
    }

    pub fn savings_values(&self) -> Vec<T> {
        self.rows
            .iter()
            .filter_map(|r| r.result.as_ref().ok().map(|p| p.savings))
            .collect()
    }
}

/// Evaluates both power models over a strictly ascending list of server
/// counts. Infeasible points are flagged in place rather than aborting.
pub fn sweep<T: Scalar>(
    server_counts: &[usize],
    topo: &TopologyParams,
    capacity: &OltCapacity,
    slp: &SpineLeafParams,
    p: &PowerParams<T>,
) -> Result<SweepSeries<T>, PowerError> {
    if server_counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(PowerError::InvalidParams(
            "server counts must be strictly ascending".into(),
        ));
    }
    let rows = server_counts
        .iter()
        .map(|&n| {
            let result = pon_fog_power_for_servers(n, topo, capacity, p)
                .and_then(|pon| {
                    spine_leaf_power(n, slp, p).map(|sl| (pon.total_w, sl.total_w))
                })
                .and_then(|(pon_w, sl_w)| {
                    if sl_w <= T::zero() {
                        Err(PowerError::InvalidParams(
                            "reference architecture consumes no power".into(),
                        ))
                    } else {
                        Ok(SweepPoint {
                            pon_fog_w: pon_w,
                            spine_leaf_w: sl_w,
                            savings: T::one() - pon_w / sl_w,
                        })
                    }
                })
                .map_err(|e| e.to_string());
            SweepRow {
                n_servers: n,
                result,
            }
        })
        .collect();
    Ok(SweepSeries { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn defaults() -> (TopologyParams, OltCapacity, SpineLeafParams, PowerParams<f64>) {
        (
            TopologyParams::default(),
            OltCapacity::default(),
            SpineLeafParams::default(),
            PowerParams::default(),
        )
    }

    #[test]
    fn pon_fog_96_servers_draws_510_w() {
        let (topo, cap, _, p) = defaults();
        let b = pon_fog_power(&topo, &cap, &p).unwrap();
        assert_eq!(b.total_w, 510.0);
        assert!(b.is_consistent());
        assert!(b.items.iter().all(|i| !i.device.is_switch()));
        for kind in [DeviceKind::Awgr, DeviceKind::AwgMux, DeviceKind::FbgCoupler] {
            let item = b.items.iter().find(|i| i.device == kind).unwrap();
            assert_eq!(item.unit_w, 0.0);
            assert!(item.count > 0);
        }
        let cards = b
            .items
            .iter()
            .find(|i| i.device == DeviceKind::OltGponCard)
            .unwrap();
        assert_eq!(cards.count, 3);
    }

    #[test]
    fn pon_fog_1536_servers_draws_8160_w() {
        let (topo, cap, _, p) = defaults();
        let b = pon_fog_power_for_servers(1536, &topo, &cap, &p).unwrap();
        assert_eq!(b.total_w, 8160.0);
        let cards = b
            .items
            .iter()
            .find(|i| i.device == DeviceKind::OltGponCard)
            .unwrap();
        assert_eq!(cards.count, 48);
    }

    #[test]
    fn degenerate_topology_is_rejected() {
        let (mut topo, cap, _, p) = defaults();
        topo.cells = 0;
        assert!(matches!(
            pon_fog_power(&topo, &cap, &p),
            Err(PowerError::Topology(TopologyError::InvalidParams(_)))
        ));
    }

    #[test]
    fn over_capacity_is_propagated() {
        let (topo, cap, _, p) = defaults();
        let err = pon_fog_power_for_servers(40_000, &topo, &cap, &p).unwrap_err();
        assert!(matches!(
            err,
            PowerError::Topology(TopologyError::CapacityExceeded { .. })
        ));
    }

    #[test]
    fn spine_leaf_examples() {
        let (_, _, slp, p) = defaults();
        assert_eq!(spine_leaf_power(96, &slp, &p).unwrap().total_w, 2624.0);
        assert_eq!(spine_leaf_power(1, &slp, &p).unwrap().total_w, 1831.0);
        assert_eq!(spine_leaf_power(1536, &slp, &p).unwrap().total_w, 26144.0);
    }

    #[test]
    fn savings_at_96_servers_brackets_published_value() {
        let (topo, cap, slp, p) = defaults();
        let s = savings(96, &topo, &cap, &slp, &p).unwrap();
        assert_relative_eq!(s, 1.0 - 510.0 / 2624.0, max_relative = 1e-12);
        assert!((0.78..=0.83).contains(&s));
    }

    #[test]
    fn savings_at_1536_servers() {
        let (topo, cap, slp, p) = defaults();
        let s = savings(1536, &topo, &cap, &slp, &p).unwrap();
        assert_relative_eq!(s, 1.0 - 8160.0 / 26144.0, max_relative = 1e-12);
        assert_relative_eq!(s, 0.688, max_relative = 1e-3);
    }

    #[test]
    fn equal_totals_give_zero_savings() {
        let (topo, cap, slp, _) = defaults();
        // 1 ONU watt vs params that make spine-leaf cost the same 510 W at 96
        // servers: 96 x 2.5 + 3 x 90 = 510 both sides.
        let p = PowerParams::<f64> {
            leaf_switch_w: 0.0,
            spine_switch_w: 15.0,
            server_transceiver_w: 5.0,
            ..PowerParams::default()
        };
        // spine-leaf: 2 leaves x 0 + 2 spines x 15 + 96 x 5 = 510
        let s = savings(96, &topo, &cap, &slp, &p).unwrap();
        assert_relative_eq!(s, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn shared_card_allocation_changes_the_answer() {
        let (topo, cap, slp, mut p) = defaults();
        p.card_allocation = CardAllocation::SharedByCapacity;
        let b = pon_fog_power(&topo, &cap, &p).unwrap();
        assert_eq!(b.total_w, 330.0); // 96 x 2.5 + 1 card
        let s = savings(96, &topo, &cap, &slp, &p).unwrap();
        assert_relative_eq!(s, 1.0 - 330.0 / 2624.0, max_relative = 1e-12);
    }

    #[test]
    fn pon_marginal_cost_is_one_onu_between_cell_steps() {
        let (topo, cap, _, p) = defaults();
        let at = |n| {
            pon_fog_power_for_servers(n, &topo, &cap, &p)
                .unwrap()
                .total_w
        };
        assert_eq!(at(97) - at(96), 92.5); // new cell: ONU + card
        assert_eq!(at(98) - at(97), 2.5);
        assert_eq!(at(100) - at(99), 2.5);
    }

    #[test]
    fn spine_leaf_marginal_cost_steps_at_switch_boundaries() {
        let (_, _, slp, p) = defaults();
        let at = |n| spine_leaf_power(n, &slp, &p).unwrap().total_w;
        assert_eq!(at(48) - at(47), 3.0);
        assert_eq!(at(49) - at(48), 511.0); // +1 leaf
        assert_eq!(at(50) - at(49), 3.0);
        assert_eq!(at(385) - at(384), 1171.0); // +1 leaf, +1 spine
    }

    #[test]
    fn sweep_default_points_match_frozen_csv() {
        let (topo, cap, slp, p) = defaults();
        let series = sweep(&[96, 192, 384, 768, 1536], &topo, &cap, &slp, &p).unwrap();
        let expected = "n_servers,pon_fog_w,spine_leaf_w,savings\n\
                        96,510.0,2624.0,0.8056\n\
                        192,1020.0,3928.0,0.7403\n\
                        384,2040.0,6536.0,0.6879\n\
                        768,4080.0,13072.0,0.6879\n\
                        1536,8160.0,26144.0,0.6879\n";
        assert_eq!(series.to_csv(), expected);
        let s = series.savings_values();
        assert!(s.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn sweep_flags_infeasible_rows_and_continues() {
        let (topo, cap, slp, p) = defaults();
        let series = sweep(&[96, 40_000], &topo, &cap, &slp, &p).unwrap();
        assert!(series.rows[0].result.is_ok());
        assert!(series.rows[1].result.is_err());
        assert!(series.to_csv().contains("40000,-,-,-"));
        assert!(series.to_gnuplot().contains("# 40000 infeasible:"));
    }

    #[test]
    fn sweep_rejects_unsorted_input() {
        let (topo, cap, slp, p) = defaults();
        assert!(matches!(
            sweep(&[192, 96], &topo, &cap, &slp, &p),
            Err(PowerError::InvalidParams(_))
        ));
        assert!(matches!(
            sweep(&[96, 96], &topo, &cap, &slp, &p),
            Err(PowerError::InvalidParams(_))
        ));
    }

    #[test]
    fn single_point_sweep() {
        let (topo, cap, slp, p) = defaults();
        let series = sweep(&[96], &topo, &cap, &slp, &p).unwrap();
        assert_eq!(series.rows.len(), 1);
        let point = series.rows[0].result.as_ref().unwrap();
        assert_eq!(point.pon_fog_w, 510.0);
        assert_eq!(point.spine_leaf_w, 2624.0);
    }

    #[test]
    fn savings_stay_strictly_inside_the_unit_interval() {
        let (topo, cap, slp, p) = defaults();
        for n in 32..=4096usize {
            let s = savings(n, &topo, &cap, &slp, &p).unwrap();
            assert!(s > 0.0 && s < 1.0, "savings({n}) = {s}");
        }
    }

    #[test]
    fn breakdowns_recompute_consistently_across_the_scan() {
        let (topo, cap, slp, p) = defaults();
        for n in (32..=4096usize).step_by(97) {
            assert!(pon_fog_power_for_servers(n, &topo, &cap, &p)
                .unwrap()
                .is_consistent());
            assert!(spine_leaf_power(n, &slp, &p).unwrap().is_consistent());
        }
    }

    #[test]
    fn savings_is_ratio_invariant_under_scaling() {
        let (topo, cap, slp, p) = defaults();
        let base = savings(96, &topo, &cap, &slp, &p).unwrap();
        let scaled = savings(96, &topo, &cap, &slp, &p.scaled(3.7)).unwrap();
        assert_relative_eq!(base, scaled, max_relative = 1e-12);
    }

    #[test]
    fn works_with_f32_scalars() {
        let topo = TopologyParams::default();
        let cap = OltCapacity::default();
        let slp = SpineLeafParams::default();
        let p = PowerParams::<f32>::default();
        let s = savings(96, &topo, &cap, &slp, &p).unwrap();
        assert!((s - 0.8056).abs() < 1e-4);
    }

    #[test]
    fn negative_power_params_are_rejected() {
        let p = PowerParams::<f64> {
            tunable_onu_w: -1.0,
            ..PowerParams::default()
        };
        assert!(matches!(p.validate(), Err(PowerError::InvalidParams(_))));
    }
}
