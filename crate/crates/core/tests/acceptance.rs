//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails or runs over its time budget.
//!
//! Every check compares library output against an oracle written here:
//! brute-force enumeration, exhaustive scans, hand traces or direct
//! recomputation from the event log.

use std::collections::{BTreeMap, HashMap};
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eonsim::energy::{self, EnergyLedger, LightpathEnergyRecord};
use eonsim::modulation::{reach_ok, slots_needed, ModulationFormat};
use eonsim::network::{Network, NetworkConfig, NetworkState};
use eonsim::schemes::{self, compute_mhc, omega, AttemptResult, Decision, Outcome, Request, Scheme, SchemeParams};
use eonsim::simulator::{self, t_interval, LogEvent, Replicated, RunConfig, WorkloadConfig, WorkloadGenerator};
use eonsim::spectrum::{f_ent, f_ext, SlotGrid, SpectrumBlock, SpectrumState};
use eonsim::topology::{parse_topology, DirectedLink, ModulationTopology, NodeId, PhysicalTopology};
use eonsim::virtual_topology::{FlowId, LightpathId};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn close(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs().max(f64::MIN_POSITIVE)
}

// Format table written out independently of the library:
// (name, bits per symbol, reach km).
const FORMATS: [(&str, u32, f64); 6] = [
    ("BPSK", 1, 8000.0),
    ("QPSK", 2, 4000.0),
    ("8QAM", 3, 2000.0),
    ("16QAM", 4, 1000.0),
    ("32QAM", 5, 500.0),
    ("64QAM", 6, 250.0),
];

fn table_row(m: ModulationFormat) -> (u32, f64) {
    let row = FORMATS.iter().find(|r| r.0 == m.name()).expect("known format");
    (row.1, row.2)
}

fn oracle_reach(m: ModulationFormat) -> f64 {
    table_row(m).1
}

fn oracle_subcarrier(m: ModulationFormat) -> f64 {
    12.5 * table_row(m).0 as f64
}

fn topology_path(name: &str) -> String {
    format!("{}/topologies/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn load(name: &str) -> PhysicalTopology {
    let text = std::fs::read_to_string(topology_path(name)).expect("topology file");
    parse_topology(&text).expect("valid topology")
}

fn ids(v: &[usize]) -> Vec<NodeId> {
    v.iter().map(|&i| NodeId(i)).collect()
}

/// Connected random graph with integer lengths, so path sums are exact and
/// ties are common.
fn random_links(rng: &mut ChaCha8Rng, n: usize, max_len: u32, extra: f64) -> Vec<(usize, usize, f64)> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut links = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for i in 1..n {
        let a = order[i];
        let b = order[rng.random_range(0..i)];
        seen.insert((a.min(b), a.max(b)));
        links.push((a, b, rng.random_range(1..=max_len) as f64));
    }
    for a in 0..n {
        for b in a + 1..n {
            if !seen.contains(&(a, b)) && rng.random_bool(extra) {
                seen.insert((a, b));
                links.push((a, b, rng.random_range(1..=max_len) as f64));
            }
        }
    }
    links
}

// ---------------------------------------------------------------- 1

fn formulas() -> Check {
    use ModulationFormat::*;
    for (b, m, want) in [(50.0, Bpsk, 4), (50.0, Qpsk, 2), (75.0, Qpsk, 3), (75.0, Bpsk, 6)] {
        let got = slots_needed(b, m).map_err(|e| e.to_string())?;
        ensure!(got == want, "slots_needed({b}, {m}) = {got}, want {want}");
    }
    for m in ModulationFormat::ALL {
        let (bits, reach) = table_row(m);
        ensure!(close(m.subcarrier_gbps(), 12.5 * bits as f64, 1e-9), "{m} subcarrier rate");
        ensure!(close(m.reach_km(), reach, 1e-9), "{m} reach");
        ensure!(reach_ok(reach, m) && !reach_ok(reach + 1.0, m), "{m} reach boundary");
        for b in [25.0, 50.0, 100.0, 200.0, 300.0, 400.0] {
            let want = (b / (12.5 * bits as f64)).ceil() as usize;
            ensure!(slots_needed(b, m).ok() == Some(want), "slots_needed({b}, {m})");
        }
    }

    // external fragmentation: free blocks {7, 3} -> 1 - 7/10
    let mut pattern = vec![false; 7];
    pattern.push(true);
    pattern.extend([false; 3]);
    let g = SlotGrid::from_occupancy(&pattern);
    ensure!(close(f_ext(&g), 0.3, 1e-9), "f_ext {{7,3}} = {}", f_ext(&g));
    ensure!(f_ext(&SlotGrid::new(320)) == 0.0, "f_ext of a free grid");
    ensure!(f_ext(&SlotGrid::from_occupancy(&[true; 8])) == 0.0, "f_ext of a full grid");

    // entropy: two free runs of 5 in an 11-slot grid
    let mut pattern = vec![false; 5];
    pattern.push(true);
    pattern.extend([false; 5]);
    let g = SlotGrid::from_occupancy(&pattern);
    let want = 2.0 * (5.0 / 11.0) * (11.0f64 / 5.0).ln();
    ensure!(close(f_ent(&g), want, 1e-9), "f_ent = {}, want {want}", f_ent(&g));
    ensure!(f_ent(&SlotGrid::new(320)) == 0.0, "f_ent of a free grid");

    // normalized entropy and the hop bound
    let mut st = SpectrumState::new(1, 11);
    st.allocate(&[DirectedLink(0)], &SpectrumBlock { start: 5, data_len: 1, guard_len: 0 })
        .map_err(|e| e.to_string())?;
    let want_norm = want / 5.5f64.ln();
    ensure!(close(st.network_f_ent_normalized(), want_norm, 1e-9), "normalized entropy");
    ensure!(SpectrumState::new(4, 320).network_f_ent_normalized() == 1e-6, "entropy floor");
    ensure!(compute_mhc(1000.0, 1.0, 250.0) == 4, "mhc(1000, 1.0)");
    ensure!(compute_mhc(1000.0, 0.1, 250.0) == 1, "mhc(1000, 0.1)");
    ensure!(compute_mhc(1000.0, 1e-6, 250.0) == 1, "mhc at the floor");

    // transponder power, cross-connect setup, data, efficiency
    for (tr, want) in [(12.5, 112.3705), (0.0, 91.333), (75.0, 217.558), (100.0, 259.633)] {
        ensure!(close(energy::pc_bvt(tr), want, 1e-9), "pc_bvt({tr}) = {}", energy::pc_bvt(tr));
    }
    for (n, e, want) in [(3, 2, 455.0), (0, 0, 0.0), (1, 1, 185.0)] {
        ensure!(close(energy::ec_oxc_setup(n, e), want, 1e-9), "ec_oxc_setup({n}, {e})");
    }
    let topo = PhysicalTopology::new("pair", vec![None; 2], &[(0, 1, 80.0)]).map_err(|e| e.to_string())?;
    let route = topo.shortest_path(NodeId(0), NodeId(1)).map_err(|e| e.to_string())?;
    let setup = 2.0 * (85.0 + 100.0);
    let want = setup + (259.633 + 300.0 + 100.0) * 600.0;
    let got = energy::ec_lightpath(&topo, &route, 100.0, 600.0).map_err(|e| e.to_string())?;
    ensure!(close(got, want, 1e-9), "ec_lightpath = {got}, want {want}");
    ensure!(energy::ec_lightpath(&topo, &route, 100.0, -1.0).is_err(), "negative holding accepted");
    ensure!(close(energy::dt_flow(100.0, 600.0), 6e13, 1e-9), "dt_flow(100, 600)");
    ensure!(close(energy::dt_flow(25.0, 2.0), 5e10, 1e-9), "dt_flow(25, 2)");

    let mut ledger = EnergyLedger::new();
    ledger
        .open_lightpath(LightpathEnergyRecord {
            lightpath: LightpathId(0),
            source: NodeId(0),
            destination: NodeId(1),
            route_nodes: 2,
            ola_count: 1,
            modulation: ModulationFormat::Qpsk,
            capacity_gbps: 100.0,
            setup_j: setup,
            power_w: 659.633,
            established_at: 0.0,
            torn_down_at: None,
        })
        .map_err(|e| e.to_string())?;
    ledger.close_lightpath(LightpathId(0), 600.0).map_err(|e| e.to_string())?;
    ledger.add_data_bits(6e13);
    let en_eff = energy::energy_efficiency(&ledger);
    ensure!(close(en_eff, 6e13 / want, 1e-9), "en_eff = {en_eff}");
    ensure!(energy::energy_efficiency(&EnergyLedger::new()) == 0.0, "empty ledger");
    ensure!(close(energy::effective_energy_efficiency(2e9, 0.25), 1.5e9, 1e-9), "eee(2e9, 0.25)");
    ensure!(energy::effective_energy_efficiency(2e9, 1.0) == 0.0, "eee at full blocking");
    ensure!(energy::effective_energy_efficiency(2e9, 0.0) == 2e9, "eee without blocking");
    Ok("slot counts, reach, fragmentation, hop bound and energy formulas".into())
}

// ---------------------------------------------------------------- 2

/// Every simple path from `s` to `d`, ranked by length, hops, node order.
fn all_simple_paths(n: usize, links: &[(usize, usize, f64)], s: usize, d: usize) -> Vec<(f64, Vec<usize>)> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b, w) in links {
        adj[a].push((b, w));
        adj[b].push((a, w));
    }
    fn dfs(
        adj: &[Vec<(usize, f64)>],
        d: usize,
        path: &mut Vec<usize>,
        cost: f64,
        out: &mut Vec<(f64, Vec<usize>)>,
    ) {
        let u = *path.last().unwrap();
        if u == d {
            out.push((cost, path.clone()));
            return;
        }
        for &(v, w) in &adj[u] {
            if !path.contains(&v) {
                path.push(v);
                dfs(adj, d, path, cost + w, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    dfs(&adj, d, &mut vec![s], 0.0, &mut out);
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.len().cmp(&b.1.len())).then(a.1.cmp(&b.1)));
    out
}

fn routing() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let graphs = 150;
    let mut queries = 0;
    for g in 0..graphs {
        let n = rng.random_range(2..=8);
        let links = random_links(&mut rng, n, 12, 0.4);
        let topo = PhysicalTopology::new("random", vec![None; n], &links).map_err(|e| e.to_string())?;
        let mut diameter: f64 = 0.0;
        for s in 0..n {
            for d in (0..n).filter(|&d| d != s) {
                let all = all_simple_paths(n, &links, s, d);
                diameter = diameter.max(all[0].0);
                let sp = topo.shortest_path(NodeId(s), NodeId(d)).map_err(|e| e.to_string())?;
                ensure!(sp.nodes == ids(&all[0].1), "graph {g} {s}->{d}: shortest {:?} vs {:?}", sp.nodes, all[0].1);
                ensure!(sp.total_km == all[0].0, "graph {g} {s}->{d}: length");
                for k in 1..=4 {
                    let got = topo.k_shortest_paths(NodeId(s), NodeId(d), k).map_err(|e| e.to_string())?;
                    let want: Vec<_> = all.iter().take(k).collect();
                    ensure!(got.len() == want.len(), "graph {g} {s}->{d} k={k}: {} paths, want {}", got.len(), want.len());
                    for (p, (cost, nodes)) in got.iter().zip(want) {
                        ensure!(p.nodes == ids(nodes) && p.total_km == *cost, "graph {g} {s}->{d} k={k}: {:?} vs {nodes:?}", p.nodes);
                    }
                    queries += 1;
                }
            }
        }
        ensure!(topo.diameter_km() == diameter, "graph {g}: diameter");
    }
    Ok(format!("{graphs} graphs, {queries} k-shortest queries"))
}

// ---------------------------------------------------------------- 3

fn exhaustive_first_fit(model: &[Vec<bool>], route: &[usize], need: usize) -> Option<usize> {
    let slots = model[0].len();
    (0..slots).find(|&start| {
        start + need <= slots && route.iter().all(|&l| (start..start + need).all(|i| !model[l][i]))
    })
}

fn free_runs(occ: &[bool]) -> Vec<usize> {
    let mut runs = Vec::new();
    let mut cur = 0;
    for &o in occ {
        if o {
            if cur > 0 {
                runs.push(cur);
            }
            cur = 0;
        } else {
            cur += 1;
        }
    }
    if cur > 0 {
        runs.push(cur);
    }
    runs
}

fn oracle_f_ext(occ: &[bool]) -> f64 {
    let runs = free_runs(occ);
    let total: usize = runs.iter().sum();
    if total == 0 {
        return 0.0;
    }
    1.0 - *runs.iter().max().unwrap() as f64 / total as f64
}

fn oracle_f_ent(occ: &[bool]) -> f64 {
    let s = occ.len() as f64;
    free_runs(occ)
        .iter()
        .map(|&r| {
            let p = r as f64 / s;
            -p * p.ln()
        })
        .sum::<f64>()
        .max(0.0)
}

fn spectrum() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cases = 1500;
    let mut ops = 0;
    for case in 0..cases {
        let links = rng.random_range(1..=6);
        let slots = rng.random_range(1..=96);
        let mut st = SpectrumState::new(links, slots);
        let mut model = vec![vec![false; slots]; links];
        let mut live: Vec<(Vec<usize>, SpectrumBlock)> = Vec::new();
        for _ in 0..rng.random_range(1..=40) {
            let mut route: Vec<usize> = (0..links).collect();
            route.shuffle(&mut rng);
            route.truncate(rng.random_range(1..=links));
            let dl: Vec<DirectedLink> = route.iter().map(|&l| DirectedLink(l)).collect();
            let release = !live.is_empty() && rng.random_bool(0.35);
            if release {
                let (r, b) = live.swap_remove(rng.random_range(0..live.len()));
                let rl: Vec<DirectedLink> = r.iter().map(|&l| DirectedLink(l)).collect();
                st.release(&rl, &b).map_err(|e| format!("case {case}: release {e}"))?;
                for &l in &r {
                    model[l][b.start..b.end()].iter_mut().for_each(|x| *x = false);
                }
            } else {
                let data = rng.random_range(1..=6);
                let guard = rng.random_range(0..=3);
                let got = st.first_fit(&dl, data, guard).map(|b| b.start);
                let want = exhaustive_first_fit(&model, &route, data + guard);
                ensure!(got == want, "case {case}: first_fit {got:?}, exhaustive {want:?}");
                if let Some(start) = got {
                    let b = SpectrumBlock { start, data_len: data, guard_len: guard };
                    st.allocate(&dl, &b).map_err(|e| format!("case {case}: allocate {e}"))?;
                    for &l in &route {
                        model[l][b.start..b.end()].iter_mut().for_each(|x| *x = true);
                    }
                    // the same footprint cannot be taken twice
                    let before = st.clone();
                    ensure!(st.allocate(&dl, &b).is_err(), "case {case}: double allocation accepted");
                    ensure!(st == before, "case {case}: failed allocation changed state");
                    live.push((route, b));
                }
            }
            ops += 1;
            for (l, occ) in model.iter().enumerate() {
                let grid = st.grid(DirectedLink(l));
                ensure!(grid.occupancy() == *occ, "case {case}: link {l} occupancy diverged");
                ensure!(grid.f_ext() == oracle_f_ext(occ), "case {case}: link {l} f_ext");
                ensure!(close(grid.f_ent(), oracle_f_ent(occ), 1e-12) || oracle_f_ent(occ) == 0.0 && grid.f_ent() == 0.0, "case {case}: link {l} f_ent");
            }
        }
    }
    Ok(format!("{cases} random grid sets, {ops} allocate/release steps"))
}

// ---------------------------------------------------------------- 4

fn modulation_topology() -> Check {
    let topo = load("seven_node.json");
    let by_label: HashMap<&str, NodeId> = topo.nodes().map(|n| (topo.label(n).unwrap(), n)).collect();
    let (p1, p2, p4) = (by_label["P1"], by_label["P2"], by_label["P4"]);
    let table = topo.all_pairs_shortest();
    let bpsk = ModulationTopology::from_table(&table, ModulationFormat::Bpsk);
    let qpsk = ModulationTopology::from_table(&table, ModulationFormat::Qpsk);
    ensure!(bpsk.has_edge(p1, p4), "BPSK lacks P1-P4");
    ensure!(!qpsk.has_edge(p1, p4), "QPSK has P1-P4");
    ensure!(qpsk.has_edge(p1, p2) && qpsk.has_edge(p2, p4), "QPSK lacks P1-P2-P4");

    let net = Network::new(topo, NetworkConfig::default()).map_err(|e| e.to_string())?;
    let b = omega(net.routes(), p1, p4, 1, ModulationFormat::Bpsk).ok_or("no BPSK route")?;
    ensure!(b.nodes() == vec![p1, p4], "BPSK route {:?}", b.nodes());
    let q = omega(net.routes(), p1, p4, 1, ModulationFormat::Qpsk).ok_or("no QPSK route")?;
    ensure!(q.nodes() == vec![p1, p2, p4], "QPSK route {:?}", q.nodes());
    ensure!(q.modulations() == vec![ModulationFormat::Qpsk; 2], "QPSK formats");
    Ok("BPSK P1-P4 direct, QPSK P1-P2-P4".into())
}

// ---------------------------------------------------------------- 5

fn chain_network(km: &[f64], slots: usize) -> Result<Network, String> {
    let links: Vec<_> = km.iter().enumerate().map(|(i, &l)| (i, i + 1, l)).collect();
    let topo = PhysicalTopology::new("chain", vec![None; km.len() + 1], &links).map_err(|e| e.to_string())?;
    Network::new(topo, NetworkConfig { slots_per_link: slots, ..NetworkConfig::default() }).map_err(|e| e.to_string())
}

fn serve(net: &Network, st: &mut NetworkState, s: usize, d: usize, b: f64, flow: u64) -> Result<Decision, String> {
    let req = Request { source: NodeId(s), destination: NodeId(d), bitrate_gbps: b };
    schemes::serve(Scheme::Dmmas, &SchemeParams::default(), net, st, req, FlowId(flow), 0.0, 600.0).map_err(|e| e.to_string())
}

type TraceRow = (ModulationFormat, usize, AttemptResult, Vec<usize>);

fn trace_rows(d: &Decision) -> Vec<TraceRow> {
    d.trace
        .attempts
        .iter()
        .map(|a| (a.modulation, a.k.unwrap_or(0), a.result, a.nodes.iter().map(|n| n.0).collect()))
        .collect()
}

fn hand_traces() -> Result<(), String> {
    use AttemptResult::*;
    use ModulationFormat::*;

    // Five 240 km hops, empty grids: entropy at its floor, so the bound is 1.
    // Only neighbours are within 64QAM reach; 32QAM and 16QAM routes need
    // 3 and 2 lightpaths; 8QAM (2000 km) reaches end to end.
    let net = chain_network(&[240.0; 5], 320)?;
    let mut st = net.new_state();
    let d = serve(&net, &mut st, 0, 5, 100.0, 0)?;
    ensure!(d.trace.mhc == Some(1), "chain: bound {:?}", d.trace.mhc);
    let want: Vec<TraceRow> = vec![
        (Qam64, 1, ExceedsMhc, vec![0, 1, 2, 3, 4, 5]),
        (Qam64, 2, NoPath, vec![]),
        (Qam64, 3, NoPath, vec![]),
        (Qam32, 1, ExceedsMhc, vec![0, 1, 3, 5]),
        (Qam32, 2, ExceedsMhc, vec![0, 2, 3, 5]),
        (Qam32, 3, ExceedsMhc, vec![0, 2, 4, 5]),
        (Qam16, 1, ExceedsMhc, vec![0, 1, 5]),
        (Qam16, 2, ExceedsMhc, vec![0, 2, 5]),
        (Qam16, 3, ExceedsMhc, vec![0, 3, 5]),
        (Qam8, 1, Accepted, vec![0, 5]),
    ];
    ensure!(trace_rows(&d) == want, "chain trace {:?}", trace_rows(&d));
    let Outcome::Accepted(segs) = &d.outcome else { return Err("chain: blocked".into()) };
    ensure!(segs.len() == 1 && segs[0].modulation == Qam8 && segs[0].data_slots == 3, "chain: segments {segs:?}");

    // Same chain with 32 slots, each grid cut by single used slots at
    // 0, 4, ..., 28: eight free runs of 3. Entropy 8 * 3/32 * ln(32/3),
    // normalized by ln 16, gives 0.6403 and a bound of ceil(1200 * 0.6403 / 250) = 4.
    let net = chain_network(&[240.0; 5], 32)?;
    let mut st = net.new_state();
    for l in 0..net.topology().directed_link_count() {
        for start in (0..32).step_by(4) {
            st.spectrum
                .allocate(&[DirectedLink(l)], &SpectrumBlock { start, data_len: 1, guard_len: 0 })
                .map_err(|e| e.to_string())?;
        }
    }
    let d = serve(&net, &mut st, 0, 5, 25.0, 1)?;
    ensure!(d.trace.mhc == Some(4), "fragmented chain: bound {:?}", d.trace.mhc);
    let want: Vec<TraceRow> = vec![
        (Qam64, 1, ExceedsMhc, vec![0, 1, 2, 3, 4, 5]),
        (Qam64, 2, NoPath, vec![]),
        (Qam64, 3, NoPath, vec![]),
        (Qam32, 1, Accepted, vec![0, 1, 3, 5]),
    ];
    ensure!(trace_rows(&d) == want, "fragmented chain trace {:?}", trace_rows(&d));
    // the 240 km first leg is upgraded to 64QAM; each segment lands in the first free run
    ensure!(d.trace.attempts[3].modulations == vec![Qam64, Qam32, Qam32], "upgrade {:?}", d.trace.attempts[3].modulations);
    let Outcome::Accepted(segs) = &d.outcome else { return Err("fragmented chain: blocked".into()) };
    for s in segs {
        let lp = st.virtual_topology.get(s.lightpath).ok_or("missing lightpath")?;
        ensure!(lp.block == SpectrumBlock { start: 1, data_len: 1, guard_len: 2 }, "block {:?}", lp.block);
    }

    // Three 240 km hops with 8 slots; the last hop is full. Every attempt
    // reaching it fails and leaves nothing behind.
    let net = chain_network(&[240.0; 3], 8)?;
    let mut st = net.new_state();
    let last = net.topology().directed_link(NodeId(2), NodeId(3)).ok_or("no link")?;
    st.spectrum
        .allocate(&[last], &SpectrumBlock { start: 0, data_len: 6, guard_len: 2 })
        .map_err(|e| e.to_string())?;
    let before = format!("{st:?}");
    let d = serve(&net, &mut st, 0, 3, 50.0, 2)?;
    ensure!(d.outcome == Outcome::Blocked, "saturated chain accepted");
    ensure!(format!("{st:?}") == before, "saturated chain: state changed");
    ensure!(d.trace.attempts.iter().all(|a| a.result != Accepted), "saturated chain: accepted attempt");
    Ok(())
}

/// Hop bound recomputed from raw occupancy.
fn oracle_mhc(net: &Network, st: &NetworkState) -> usize {
    let grids = st.spectrum.grids();
    let slots = st.spectrum.slots_per_link() as f64;
    let norm = (slots / 2.0).ln();
    let mean = grids.iter().map(|g| oracle_f_ent(&g.occupancy()) / norm).sum::<f64>() / grids.len() as f64;
    let f = mean.clamp(1e-6, 1.0);
    let reach = FORMATS.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    ((net.diameter_km() * f / reach).ceil() as usize).max(1)
}

fn conformance() -> Check {
    hand_traces()?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let bitrates = [25.0, 50.0, 100.0, 200.0, 300.0, 400.0];
    let (mut accepted, mut blocked, mut multi) = (0, 0, 0);
    let total = 10_000u64;
    let per_instance = 500;
    let mut flow = 0u64;
    while flow < total {
        let n = rng.random_range(3..=6);
        let links: Vec<_> = random_links(&mut rng, n, 12, 0.5).into_iter().map(|(a, b, w)| (a, b, w * 60.0)).collect();
        let topo = PhysicalTopology::new("random", vec![None; n], &links).map_err(|e| e.to_string())?;
        let km: HashMap<(usize, usize), f64> = links.iter().flat_map(|&(a, b, w)| [((a, b), w), ((b, a), w)]).collect();
        let slots = rng.random_range(16..=48);
        let net = Network::new(topo, NetworkConfig { slots_per_link: slots, ..NetworkConfig::default() }).map_err(|e| e.to_string())?;
        let mut st = net.new_state();
        let mut active = Vec::new();
        for _ in 0..per_instance {
            while !active.is_empty() && rng.random_bool(0.45) {
                let f = active.swap_remove(rng.random_range(0..active.len()));
                st.depart(f, 0.0).map_err(|e| e.to_string())?;
            }
            let s = rng.random_range(0..n);
            let d = (s + rng.random_range(1..n)) % n;
            let b = bitrates[rng.random_range(0..bitrates.len())];
            let bound = oracle_mhc(&net, &st);
            let before = format!("{st:?}");
            let dec = serve(&net, &mut st, s, d, b, flow)?;
            ensure!(dec.trace.mhc == Some(bound), "flow {flow}: bound {:?}, oracle {bound}", dec.trace.mhc);
            match &dec.outcome {
                Outcome::Blocked => {
                    blocked += 1;
                    ensure!(format!("{st:?}") == before, "flow {flow}: blocked request changed the state");
                }
                Outcome::Accepted(segs) => {
                    accepted += 1;
                    if segs.len() > 1 {
                        multi += 1;
                    }
                    active.push(FlowId(flow));
                    ensure!(segs.len() <= bound, "flow {flow}: {} lightpaths over bound {bound}", segs.len());
                    ensure!(segs[0].source == NodeId(s) && segs.last().unwrap().destination == NodeId(d), "flow {flow}: endpoints");
                    for w in segs.windows(2) {
                        ensure!(w[0].destination == w[1].source, "flow {flow}: broken chain");
                    }
                    for seg in segs {
                        let len: f64 = seg.route.windows(2).map(|w| km[&(w[0].0, w[1].0)]).sum();
                        ensure!(len == seg.km, "flow {flow}: segment length {} vs {len}", seg.km);
                        ensure!(len <= oracle_reach(seg.modulation), "flow {flow}: {len} km at {}", seg.modulation);
                    }
                }
            }
            flow += 1;
        }
    }
    ensure!(blocked > 100 && multi > 100, "too few blocked ({blocked}) or multi-hop ({multi}) requests to be meaningful");
    Ok(format!("3 hand traces; {total} random requests: {accepted} accepted ({multi} multi-hop), {blocked} blocked"))
}

// ---------------------------------------------------------------- 6

struct Sweep {
    loads: Vec<f64>,
    cells: BTreeMap<Scheme, Vec<Replicated>>,
}

fn sweep(file: &str, loads: Vec<f64>) -> Result<Sweep, String> {
    let net = Network::new(load(file), NetworkConfig::default()).map_err(|e| e.to_string())?;
    let mut cells = BTreeMap::new();
    for scheme in [Scheme::Dmmas, Scheme::Madap, Scheme::Eems] {
        let mut v = Vec::new();
        for &l in &loads {
            let cfg = RunConfig::new(scheme, WorkloadConfig::new(l, 10_000, 1));
            v.push(simulator::replicate(&net, &cfg, 5).map_err(|e| e.to_string())?);
        }
        cells.insert(scheme, v);
    }
    Ok(Sweep { loads, cells })
}

fn trends_on(name: &str, sw: &Sweep, check_formats: bool) -> Result<String, String> {
    let metric = |s: Scheme, i: usize, m: &str| *sw.cells[&s][i].get(m).expect("metric present");
    let n = sw.loads.len();
    let mid = n / 4..n / 4 + n.div_ceil(2);
    println!("  {name}: load  BBR DMMAS / mAdap / EEMS (95% half-width)  hops DMMAS");
    for (i, l) in sw.loads.iter().enumerate() {
        let (d, m, e) = (metric(Scheme::Dmmas, i, "bbr"), metric(Scheme::Madap, i, "bbr"), metric(Scheme::Eems, i, "bbr"));
        println!(
            "    {l:>6}  {:.5}±{:.5}  {:.5}±{:.5}  {:.5}±{:.5}  {:.4}",
            d.mean, d.ci_halfwidth, m.mean, m.ci_halfwidth, e.mean, e.ci_halfwidth,
            metric(Scheme::Dmmas, i, "avg_virtual_hops").mean
        );
    }
    for (i, l) in sw.loads.iter().enumerate() {
        let d = metric(Scheme::Dmmas, i, "bbr");
        for other in [Scheme::Madap, Scheme::Eems] {
            let o = metric(other, i, "bbr");
            ensure!(d.mean <= o.mean, "{name} load {l}: DMMAS BBR {} above {other} {}", d.mean, o.mean);
            if mid.contains(&i) {
                ensure!(d.upper() < o.lower(), "{name} load {l}: DMMAS and {other} BBR intervals overlap");
            }
        }
        for single in [Scheme::Madap, Scheme::Eems] {
            for run in &sw.cells[&single][i].runs {
                ensure!(run.avg_virtual_hops == 1.0, "{name} load {l}: {single} hops {}", run.avg_virtual_hops);
            }
        }
    }
    let hops: Vec<f64> = (0..n).map(|i| metric(Scheme::Dmmas, i, "avg_virtual_hops").mean).collect();
    for w in hops.windows(2) {
        ensure!(w[1] > w[0], "{name}: DMMAS hops not increasing {hops:?}");
    }
    let mut note = format!("{name}: BBR ordering holds, CIs disjoint at loads {:?}", &sw.loads[mid]);
    if check_formats {
        let share = |s: Scheme| (0..n).map(|i| metric(s, i, "mod_usage_64QAM").mean).sum::<f64>() / n as f64;
        let (d, m) = (share(Scheme::Dmmas), share(Scheme::Madap));
        println!("  {name}: mean 64QAM share DMMAS {d:.2}% vs mAdap {m:.2}%");
        ensure!(d > m, "{name}: DMMAS 64QAM share {d:.2}% not above mAdap {m:.2}%");
        note += &format!(", 64QAM share {d:.1}% vs {m:.1}%");
    }
    Ok(note)
}

fn trends() -> Check {
    let usa = sweep("usa_like.json", (3..=9).map(|i| i as f64 * 100.0).collect())?;
    let german = sweep("german_like.json", (0..5).map(|i| 700.0 + 200.0 * i as f64).collect())?;
    let a = trends_on("USA-like", &usa, false)?;
    let b = trends_on("German-like", &german, true)?;
    Ok(format!("{a}; {b}"))
}

// ---------------------------------------------------------------- 7

fn statistics() -> Check {
    let cfg = WorkloadConfig::new(500.0, 10, 7);
    let mut generator = WorkloadGenerator::new(&cfg, 24).map_err(|e| e.to_string())?;
    let draws = 1_000_000;
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    for _ in 0..draws {
        *counts.entry(generator.sample_bitrate() as u64).or_default() += 1;
    }
    for (rate, weight) in [(25u64, 6.0), (50, 5.0), (100, 4.0), (200, 3.0), (300, 2.0), (400, 1.0)] {
        let share = counts.get(&rate).copied().unwrap_or(0) as f64 / draws as f64;
        let want = weight / 21.0;
        ensure!(((share - want) / want).abs() < 0.01, "{rate} Gb/s share {share:.5}, want {want:.5}");
    }
    ensure!(counts.len() == 6, "unexpected bitrates {:?}", counts.keys());
    let n = 100_000;
    let mean = (0..n).map(|_| generator.sample_holding()).sum::<f64>() / n as f64;
    ensure!((mean - 600.0).abs() <= 12.0, "holding mean {mean}");

    // textbook interval: t(0.975, 4) = 2.7764451052 from printed tables
    let s = t_interval(&[1.0, 2.0, 3.0, 4.0, 5.0]).map_err(|e| e.to_string())?;
    let want = 2.7764451052 * (2.5f64 / 5.0).sqrt();
    ensure!(s.mean == 3.0 && close(s.ci_halfwidth, want, 1e-9), "t interval {s:?}, want 3 ± {want}");

    // replicate() reports the same interval for every metric
    let net = Network::new(load("seven_node.json"), NetworkConfig::default()).map_err(|e| e.to_string())?;
    let cfg = RunConfig::new(Scheme::Dmmas, WorkloadConfig::new(60.0, 400, 11));
    let rep = simulator::replicate(&net, &cfg, 5).map_err(|e| e.to_string())?;
    for name in ["bbr", "avg_virtual_hops", "en_eff"] {
        let values: Vec<f64> = rep
            .runs
            .iter()
            .map(|r| r.reported().into_iter().find(|(k, _)| k == name).unwrap().1)
            .collect();
        let m = values.iter().sum::<f64>() / 5.0;
        let sd = (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 4.0).sqrt();
        let hw = 2.7764451052 * sd / 5f64.sqrt();
        let got = rep.get(name).ok_or("missing metric")?;
        ensure!(close(got.mean, m, 1e-9) && (got.ci_halfwidth - hw).abs() <= 1e-9 * hw.max(1e-300), "{name}: {got:?} vs {m} ± {hw}");
    }
    Ok(format!("bitrate shares over {draws} draws, holding mean {mean:.2} s, t intervals"))
}

// ---------------------------------------------------------------- 8

fn scale() -> Check {
    let net = Network::new(load("usa_like.json"), NetworkConfig::default()).map_err(|e| e.to_string())?;
    let cfg = RunConfig::new(Scheme::Dmmas, WorkloadConfig::new(700.0, 100_000, 1));
    let started = Instant::now();
    let out = simulator::run(&net, &cfg).map_err(|e| e.to_string())?;
    let secs = started.elapsed().as_secs_f64();
    ensure!(out.metrics.requests == 100_000, "ran {} requests", out.metrics.requests);
    ensure!(secs < 60.0, "took {secs:.1} s");
    Ok(format!("100000 DMMAS requests on the 24-node mesh in {secs:.2} s (BBR {:.4})", out.metrics.bbr))
}

// ---------------------------------------------------------------- 9

fn energy_ledger() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut lightpaths = 0usize;
    for run in 0..100 {
        let n = rng.random_range(3..=8);
        let links: Vec<_> = random_links(&mut rng, n, 30, 0.4).into_iter().map(|(a, b, w)| (a, b, w * 37.0)).collect();
        let topo = PhysicalTopology::new("random", vec![None; n], &links).map_err(|e| e.to_string())?;
        let mut degree = vec![0usize; n];
        let mut km = HashMap::new();
        for &(a, b, w) in &links {
            degree[a] += 1;
            degree[b] += 1;
            km.insert((a, b), w);
            km.insert((b, a), w);
        }
        let slots = rng.random_range(24..=160);
        let net = Network::new(topo, NetworkConfig { slots_per_link: slots, ..NetworkConfig::default() }).map_err(|e| e.to_string())?;
        let scheme = Scheme::ALL[rng.random_range(0..Scheme::ALL.len())];
        let load = rng.random_range(5.0..150.0);
        let mut cfg = RunConfig::new(scheme, WorkloadConfig::new(load, rng.random_range(50..400), rng.random()));
        cfg.record_log = true;
        let out = simulator::run(&net, &cfg).map_err(|e| e.to_string())?;

        let (mut setup, mut operating, mut bits) = (0.0, 0.0, 0.0);
        let mut open: HashMap<LightpathId, (f64, f64)> = HashMap::new();
        for ev in &out.log {
            match ev {
                LogEvent::Arrival { time, holding_time, request, segments: Some(segs), .. } => {
                    bits += request.bitrate_gbps * 1e9 * holding_time;
                    for s in segs.iter().filter(|s| !s.groomed) {
                        let last = s.route.len() - 1;
                        setup += s
                            .route
                            .iter()
                            .enumerate()
                            .map(|(i, v)| degree[v.0] as f64 * 85.0 + if i == 0 || i == last { 100.0 } else { 0.0 })
                            .sum::<f64>();
                        let amps: f64 = s.route.windows(2).map(|w| (km[&(w[0].0, w[1].0)] / 80.0).floor()).sum();
                        let rate = s.data_slots as f64 * oracle_subcarrier(s.modulation);
                        let power = 1.683 * rate + 91.333 + 150.0 * s.route.len() as f64 + 100.0 * amps;
                        ensure!(open.insert(s.lightpath, (*time, power)).is_none(), "run {run}: lightpath reused while open");
                        lightpaths += 1;
                    }
                }
                LogEvent::Arrival { .. } => {}
                LogEvent::Departure { time, torn_down, .. } => {
                    for id in torn_down {
                        let (t0, p) = open.remove(id).ok_or_else(|| format!("run {run}: unknown teardown {id:?}"))?;
                        operating += p * (time - t0);
                    }
                }
            }
        }
        ensure!(open.is_empty(), "run {run}: {} lightpaths never torn down", open.len());
        let total = setup + operating;
        let m = &out.metrics;
        ensure!(close(m.total_energy_j, total, 1e-6), "run {run}: energy {} vs recomputed {total}", m.total_energy_j);
        ensure!(close(m.total_data_bits, bits, 1e-6) || bits == 0.0 && m.total_data_bits == 0.0, "run {run}: bits {} vs {bits}", m.total_data_bits);
        if total > 0.0 {
            ensure!(close(m.en_eff, bits / total, 1e-6), "run {run}: en_eff");
        }
        ensure!(m.eee <= m.en_eff, "run {run}: EEE {} above EnEff {}", m.eee, m.en_eff);
    }
    Ok(format!("100 runs, {lightpaths} lightpaths recomputed from the event log"))
}

// ----------------------------------------------------------------

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Check); 9] = [
        ("1 formula oracles", Duration::from_secs(1), formulas),
        ("2 routing oracle", Duration::from_secs(30), routing),
        ("3 spectrum oracle", Duration::from_secs(30), spectrum),
        ("4 modulation topology", Duration::from_secs(1), modulation_topology),
        ("5 scheme conformance", Duration::from_secs(120), conformance),
        ("6 trend reproduction", Duration::from_secs(600), trends),
        ("7 statistical harness", Duration::from_secs(60), statistics),
        ("8 scale", Duration::from_secs(60), scale),
        ("9 energy ledger", Duration::from_secs(120), energy_ledger),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let started = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let took = started.elapsed();
        let result = match result {
            Ok(note) if took > budget => Err(format!("{note}; over budget ({:.1} s > {} s)", took.as_secs_f64(), budget.as_secs())),
            other => other,
        };
        match result {
            Ok(note) => println!("PASS {name} ({:.2} s): {note}", took.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({:.2} s): {why}", took.as_secs_f64());
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 9 criteria failed");
        ExitCode::FAILURE
    }
}
