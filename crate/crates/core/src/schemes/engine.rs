use serde::{Deserialize, Serialize};

use super::{omega, spec_eff, Request, Scheme, SchemeParams, SubPathSet};
use crate::error::SimError;
use crate::modulation::{reach_ok, slots_needed, ModulationFormat};
use crate::network::{Network, NetworkState};
use crate::rsa::{serve_segment, Reservation, SegmentPlan};
use crate::topology::NodeId;
use crate::virtual_topology::{FlowId, LightpathId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttemptResult {
    /// No route at this rank in the reachability graph.
    NoPath,
    /// Route has more sub-paths than the hop bound allows.
    ExceedsMhc,
    /// Segment with this index could not be served; earlier ones were
    /// rolled back.
    SegmentFailed(usize),
    Accepted,
}

/// One `(M, k)` trial of an engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub modulation: ModulationFormat,
    /// Rank tried in the reachability graph; single-hop engines leave it
    /// empty.
    pub k: Option<usize>,
    /// Source, articulation nodes and destination of the trial route.
    pub nodes: Vec<NodeId>,
    /// Format given to each segment.
    pub modulations: Vec<ModulationFormat>,
    pub result: AttemptResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTrace {
    pub scheme: Scheme,
    pub request: Request,
    /// Hop bound in force for this request, if any.
    pub mhc: Option<usize>,
    pub attempts: Vec<Attempt>,
    pub accepted: bool,
}

/// A served segment as it ended up in the flow's chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub lightpath: LightpathId,
    pub source: NodeId,
    pub destination: NodeId,
    pub modulation: ModulationFormat,
    pub km: f64,
    /// Nodes of the lightpath's physical route.
    pub route: Vec<NodeId>,
    pub data_slots: usize,
    pub groomed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Accepted(Vec<SegmentRecord>),
    Blocked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub outcome: Outcome,
    pub trace: DecisionTrace,
}

impl Decision {
    pub fn accepted(&self) -> bool {
        matches!(self.outcome, Outcome::Accepted(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum HopLimit {
    /// Bound recomputed from the current fragmentation.
    Dynamic,
    Fixed(usize),
    Unlimited,
}

/// Serves `req` with `scheme`. Accepted requests are committed as flow
/// `flow`; blocked ones leave `state` untouched.
pub fn serve(
    scheme: Scheme,
    params: &SchemeParams,
    net: &Network,
    state: &mut NetworkState,
    req: Request,
    flow: FlowId,
    now: f64,
    holding_time: f64,
) -> Result<Decision, SimError> {
    if req.source == req.destination {
        return Err(SimError::InvalidRequest(format!("source and destination are both {}", req.source)));
    }
    if !(req.bitrate_gbps > 0.0) || !req.bitrate_gbps.is_finite() {
        return Err(SimError::InvalidRequest(format!("bitrate {} Gb/s", req.bitrate_gbps)));
    }
    let n = net.topology().node_count();
    if req.source.0 >= n || req.destination.0 >= n {
        return Err(SimError::InvalidRequest("node outside topology".into()));
    }
    let (limit, per_segment) = match scheme {
        Scheme::Dmmas => (Some(HopLimit::Dynamic), true),
        Scheme::DmmasWoMhc => (Some(HopLimit::Unlimited), true),
        Scheme::Amms => (Some(HopLimit::Fixed(params.amms_mhc.max(1))), false),
        Scheme::Madap | Scheme::Eems => (None, false),
    };
    let (mhc, attempts, plan) = match limit {
        Some(limit) => multi_hop(net, state, req, limit, per_segment)?,
        None => {
            let (attempts, plan) = single_hop(net, state, req, scheme == Scheme::Eems)?;
            (None, attempts, plan)
        }
    };
    let outcome = match plan {
        Some(reservation) => {
            let plans = reservation.plans().to_vec();
            let chain = reservation.commit(
                net,
                state,
                flow,
                req.source,
                req.destination,
                req.bitrate_gbps,
                now,
                holding_time,
            )?;
            let segments = plans
                .into_iter()
                .zip(chain)
                .map(|(plan, lightpath)| {
                    let lp = state.virtual_topology.get(lightpath).expect("just committed");
                    SegmentRecord {
                        lightpath,
                        source: lp.source(),
                        destination: lp.destination(),
                        modulation: lp.modulation,
                        km: lp.route.total_km,
                        route: lp.route.nodes.clone(),
                        data_slots: lp.block.data_len,
                        groomed: matches!(plan, SegmentPlan::Groomed(_)),
                    }
                })
                .collect();
            Outcome::Accepted(segments)
        }
        None => Outcome::Blocked,
    };
    Ok(Decision {
        trace: DecisionTrace {
            scheme,
            request: req,
            mhc,
            attempts,
            accepted: matches!(outcome, Outcome::Accepted(_)),
        },
        outcome,
    })
}

type Planned = (Option<usize>, Vec<Attempt>, Option<Reservation>);

/// Walks formats from most to least efficient and, for each, the ranked
/// routes of its reachability graph until every segment of one route can
/// be served.
pub(crate) fn multi_hop(
    net: &Network,
    state: &mut NetworkState,
    req: Request,
    limit: HopLimit,
    per_segment: bool,
) -> Result<Planned, SimError> {
    let formats = &net.config().modulations;
    let mhc = match limit {
        HopLimit::Dynamic => Some(super::compute_mhc(
            net.diameter_km(),
            state.spectrum.network_f_ent_normalized(),
            formats.max().reach_km(),
        )),
        HopLimit::Fixed(n) => Some(n),
        HopLimit::Unlimited => None,
    };
    let mut attempts = Vec::new();
    for m in formats.descending() {
        for k in 1..=net.config().max_k {
            let Some(p) = omega(net.routes(), req.source, req.destination, k, m) else {
                attempts.push(Attempt {
                    modulation: m,
                    k: Some(k),
                    nodes: vec![],
                    modulations: vec![],
                    result: AttemptResult::NoPath,
                });
                continue;
            };
            if mhc.is_some_and(|bound| p.len() > bound) {
                attempts.push(Attempt {
                    modulation: m,
                    k: Some(k),
                    nodes: p.nodes(),
                    modulations: p.modulations(),
                    result: AttemptResult::ExceedsMhc,
                });
                continue;
            }
            let p: SubPathSet = if per_segment { spec_eff(&p, m, formats) } else { p };
            let mut reservation = Reservation::new();
            let mut failed = None;
            for (i, sp) in p.iter().enumerate() {
                if !reservation.plan_segment(net, state, sp.source, sp.destination, req.bitrate_gbps, sp.modulation)? {
                    failed = Some(i);
                    break;
                }
            }
            let result = failed.map_or(AttemptResult::Accepted, AttemptResult::SegmentFailed);
            attempts.push(Attempt {
                modulation: m,
                k: Some(k),
                nodes: p.nodes(),
                modulations: p.modulations(),
                result,
            });
            if failed.is_some() {
                reservation.rollback(state)?;
            } else {
                return Ok((mhc, attempts, Some(reservation)));
            }
        }
    }
    Ok((mhc, attempts, None))
}

/// One lightpath from source to destination, trying formats from most to
/// least efficient. With `lowest_equal_slots`, a new lightpath is then
/// given the least efficient format that reaches and needs the same
/// number of slots.
fn single_hop(
    net: &Network,
    state: &mut NetworkState,
    req: Request,
    lowest_equal_slots: bool,
) -> Result<(Vec<Attempt>, Option<Reservation>), SimError> {
    let formats = &net.config().modulations;
    let mut attempts = Vec::new();
    for m in formats.descending() {
        let plan = serve_segment(
            net,
            state,
            req.source,
            req.destination,
            req.bitrate_gbps,
            m,
            net.config().rsa_k,
        )?;
        let Some(plan) = plan else {
            attempts.push(Attempt {
                modulation: m,
                k: None,
                nodes: vec![req.source, req.destination],
                modulations: vec![m],
                result: AttemptResult::SegmentFailed(0),
            });
            continue;
        };
        let plan = match plan {
            SegmentPlan::New { route, block, modulation } if lowest_equal_slots => {
                let chosen = formats
                    .iter()
                    .find(|&f| {
                        reach_ok(route.total_km, f)
                            && slots_needed(req.bitrate_gbps, f).ok() == Some(block.data_len)
                    })
                    .unwrap_or(modulation);
                SegmentPlan::New {
                    route,
                    block,
                    modulation: chosen,
                }
            }
            other => other,
        };
        let used = match &plan {
            SegmentPlan::New { modulation, .. } => *modulation,
            SegmentPlan::Groomed(id) => state.virtual_topology.get(*id).map_or(m, |lp| lp.modulation),
        };
        attempts.push(Attempt {
            modulation: m,
            k: None,
            nodes: vec![req.source, req.destination],
            modulations: vec![used],
            result: AttemptResult::Accepted,
        });
        let mut reservation = Reservation::new();
        reservation.hold(state, plan)?;
        return Ok((attempts, Some(reservation)));
    }
    Ok((attempts, None))
}
