//! One line per acceptance criterion. Run with `--nocapture` to see the report.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use common::*;
use manetsim_core::analytics::*;
use manetsim_core::engine::packet::{has_repeats, PacketKind};
use manetsim_core::engine::radio::verify_bandwidth;
use manetsim_core::engine::{NodeId, RadioConfig, Simulation};
use manetsim_core::harness::matrix::{Preset, Sweep};
use manetsim_core::harness::run::write_rows;
use manetsim_core::harness::sweep::sweep;
use manetsim_core::harness::verdict::verdict;
use manetsim_core::harness::{run as run_scenario, run_with_log, ProtocolKind, RunResult, Scenario};
use manetsim_core::metrics::{avg_e2ed, CtrlCounts};
use manetsim_core::mobility::Position;
use manetsim_core::routing::ErsSchedule;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const COUNT_MAX: u64 = 10_000;
const ORACLE_BUDGET: Duration = Duration::from_secs(1);
const IDENTITY_DRAWS: usize = 1000;
const STATIC_MIN_DELIVERY: f64 = 0.99;
const STATIC_MAX_E2ED_S: f64 = 0.015;
const STATIC_BUDGET: Duration = Duration::from_secs(5);
const TREND_SEEDS: u64 = 5;
const TREND_CLAIMS: usize = 5;
const TREND_MIN_HOLDING: usize = 4;

struct Report {
    lines: Vec<(bool, String)>,
}

impl Report {
    fn check(&mut self, name: &str, ok: bool, detail: String) {
        let line = format!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push((ok, line));
    }
}

fn oracle_ring(d_avg: f64, n: u64) -> f64 {
    let mut s = d_avg;
    for i in 1..=n {
        s += d_avg * i as f64;
    }
    s
}

fn oracle_pairs(n: u64) -> f64 {
    let mut s = 0.0;
    for i in 1..=n {
        s += i as f64;
    }
    s
}

fn exact(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

fn formula_oracles(r: &mut Report) {
    let started = Instant::now();
    let mut mismatches = 0u64;
    let d_avg = 3.0;
    // Running oracle totals so each count in [0, COUNT_MAX] costs one step.
    let (mut ring, mut pairs) = (d_avg, 0.0);
    for n in 0..=COUNT_MAX {
        if n > 0 {
            ring += d_avg * n as f64;
            pairs += n as f64;
        }
        let p = CostParams {
            d_avg,
            rings: vec![n],
            n_llr: n,
            n_rerr: n,
            n_ps: n,
            n_rn: n,
            tau_route_in_use: 30.0,
            tau_h_interval: 1.0,
            lb_indicator: true,
            pus_llr_indicator: true,
        };
        let hello = 30.0 * n as f64;
        let ok = exact(ce_ring(d_avg, n), ring)
            && exact(ce_rd(d_avg, &p.rings).unwrap(), ring)
            && exact(ce_rm_dsr(n), pairs)
            && exact(ce_rm_aodv_ll(&p), 2.0 * pairs)
            && exact(ce_rm_aodv(&p).unwrap(), hello + 2.0 * pairs)
            && exact(ce_rm_dymo(&p).unwrap(), hello + pairs);
        mismatches += (!ok) as u64;
    }
    // Spot checks against fully independent nested loops.
    for n in [0, 1, 2, 17, 999, 4321, COUNT_MAX] {
        mismatches += (!exact(ce_ring(2.5, n), oracle_ring(2.5, n))) as u64;
        mismatches += (!exact(ce_rm_dsr(n), oracle_pairs(n))) as u64;
    }
    let hello = ce_hello(900.0, 1.0, 50).unwrap();
    let took = started.elapsed();
    r.check(
        "formula oracles",
        mismatches == 0 && hello == 45000.0 && took < ORACLE_BUDGET,
        format!("{mismatches} mismatches over counts 0..={COUNT_MAX}, ce_hello(900,1,50)={hello}, {took:.2?}"),
    );
}

fn structural_identities(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut bad = 0;
    for _ in 0..IDENTITY_DRAWS {
        let p = CostParams {
            d_avg: rng.random_range(0.0..20.0),
            rings: (0..rng.random_range(1..8))
                .map(|_| rng.random_range(0..=COUNT_MAX))
                .collect(),
            n_llr: rng.random_range(0..=COUNT_MAX),
            n_rerr: rng.random_range(0..=COUNT_MAX),
            n_ps: rng.random_range(0..=COUNT_MAX),
            n_rn: rng.random_range(0..=COUNT_MAX),
            tau_route_in_use: rng.random_range(0.0..900.0),
            tau_h_interval: rng.random_range(0.1..5.0),
            lb_indicator: rng.random(),
            pus_llr_indicator: rng.random(),
        };
        let hello = ce_hello(p.tau_route_in_use, p.tau_h_interval, p.n_rn).unwrap();
        let aodv = ce_rm_aodv(&p).unwrap();
        let rd = ce_rd(p.d_avg, &p.rings).unwrap();
        let ll_ok = (ce_rm_aodv_ll(&p) - (aodv - hello)).abs() <= 1e-9 * aodv.max(1.0);
        let total_ok = ce_total(rd, aodv) == rd + aodv;
        bad += (!(ll_ok && total_ok)) as usize;
    }
    r.check(
        "structural identities",
        bad == 0,
        format!("{bad} of {IDENTITY_DRAWS} draws break ll = aodv - hello or total = rd + rm"),
    );
}

fn conserved(res: &RunResult) -> bool {
    let s = &res.stats;
    s.data_originated == s.data_delivered + s.data_dropped + s.data_in_flight && s.data_in_flight == res.live_data
}

fn engine_runs(r: &mut Report) {
    let mut runs = 0;
    let (mut leaks, mut miscounts, mut violations) = (0, 0, 0);
    for p in ProtocolKind::ALL {
        for seed in 1..=4 {
            let (out, _) = scenario_output(&small(p, 15, 20.0, 0.0, 8.0, seed), false);
            let s = &out.stats;
            let mut counted = CtrlCounts::default();
            let mut control = 0u64;
            for t in &out.transmissions {
                counted.record(t.kind, t.gratuitous);
                control += (t.kind != PacketKind::Data) as u64;
            }
            runs += 1;
            leaks += (s.data_originated != s.data_delivered + s.data_dropped + s.data_in_flight) as u32;
            miscounts += (counted != s.ctrl_counts || control != s.ctrl_counts.total()) as u32;
            violations += verify_bandwidth(&out.transmissions, 2_000_000).len();
        }
    }
    r.check(
        "conservation (engine traces)",
        leaks == 0 && miscounts == 0,
        format!("{runs} runs, {leaks} packet leaks, {miscounts} control-count mismatches"),
    );
    r.check(
        "constraint 1.a (engine traces)",
        violations == 0,
        format!("{violations} sliding-window bandwidth violations over {runs} runs"),
    );
}

fn determinism(r: &mut Report) {
    let mut differing = Vec::new();
    for p in ProtocolKind::ALL {
        let sc = small(p, 12, 25.0, 0.0, 4.0, 11);
        let once = || {
            let log = manetsim_core::engine::MemoryLog::default();
            let res = run_with_log(&sc, Some(Box::new(log.clone()))).unwrap();
            let mut csv = Vec::new();
            write_rows(&mut csv, &[res.row]).unwrap();
            (csv, log.contents())
        };
        if once() != once() {
            differing.push(p.as_str());
        }
    }
    r.check(
        "determinism",
        differing.is_empty(),
        format!("CSV rows and event logs byte-identical across reruns; differing: {differing:?}"),
    );
}

fn static_pair(r: &mut Report) {
    let started = Instant::now();
    let mut worst_ratio = f64::INFINITY;
    let mut worst_e2ed: f64 = 0.0;
    for p in ProtocolKind::ALL {
        let sc = Scenario {
            protocol: p,
            duration_s: 300.0,
            ..Scenario::default()
        };
        let flows = vec![flow(0, 1, 0.25, 0.5)];
        let pos = [Position::new(0.0, 0.0), Position::new(200.0, 0.0)];
        let out = match p {
            ProtocolKind::Aodv => run(fixed(&pos), flows, sc.duration_s, aodv),
            ProtocolKind::AodvLl => run(fixed(&pos), flows, sc.duration_s, aodv_ll),
            ProtocolKind::Dsr => run(fixed(&pos), flows, sc.duration_s, dsr),
            ProtocolKind::DsrM => run(fixed(&pos), flows, sc.duration_s, dsr_m),
            ProtocolKind::Dymo => run(fixed(&pos), flows, sc.duration_s, dymo),
        };
        let s = &out.stats;
        worst_ratio = worst_ratio.min(s.data_delivered as f64 / s.data_originated as f64);
        worst_e2ed = worst_e2ed.max(avg_e2ed(s).unwrap_or(f64::INFINITY));
    }
    let took = started.elapsed();
    r.check(
        "static 2-node sanity",
        worst_ratio >= STATIC_MIN_DELIVERY && worst_e2ed <= STATIC_MAX_E2ED_S && took < STATIC_BUDGET,
        format!(
            "worst delivery {worst_ratio:.4}, worst mean E2ED {:.2} ms, five protocols in {took:.2?}",
            worst_e2ed * 1e3
        ),
    );
}

fn random_connected(n: usize, side: f64, rng: &mut ChaCha8Rng) -> Vec<Position> {
    loop {
        let pos: Vec<Position> = (0..n)
            .map(|_| Position::new(rng.random_range(0.0..side), rng.random_range(0.0..side)))
            .collect();
        let mut seen = BTreeSet::from([0usize]);
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if pos[i].distance(pos[j]) <= 250.0 && seen.insert(j) {
                    stack.push(j);
                }
            }
        }
        if seen.len() == n {
            return pos;
        }
    }
}

fn walks_terminate(tables: &[&manetsim_core::routing::RouteTable], at: f64) -> usize {
    let n = tables.len();
    let mut loops = 0;
    for dst in 0..n {
        for start in 0..n {
            let (mut node, mut hops) = (start, 0);
            while node != dst {
                match tables[node].route(NodeId(dst as u32), secs(at)) {
                    Some(e) if hops <= n => {
                        node = e.next_hop.index();
                        hops += 1;
                    }
                    Some(_) => {
                        loops += 1;
                        break;
                    }
                    None => break,
                }
            }
        }
    }
    loops
}

fn loop_freedom(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut loops, mut repeats, mut dsr_paths) = (0, 0, 0);
    for topo in 0..5u64 {
        let n = 16;
        let pos = random_connected(n, 800.0, &mut rng);
        let flows: Vec<_> = (0..6u32)
            .map(|i| flow(i, n as u32 - 1 - i, 0.5 + 0.1 * i as f64, 0.5))
            .collect();
        let horizon = 40.0;
        let mut a = Simulation::new(
            RadioConfig::default(),
            fixed(&pos),
            flows.clone(),
            secs(horizon),
            topo,
            aodv,
        );
        let mut y = Simulation::new(
            RadioConfig::default(),
            fixed(&pos),
            flows.clone(),
            secs(horizon),
            topo,
            dymo,
        );
        a.run_until(secs(horizon));
        y.run_until(secs(horizon));
        loops += walks_terminate(&a.routers().iter().map(|x| x.table()).collect::<Vec<_>>(), horizon);
        loops += walks_terminate(&y.routers().iter().map(|x| x.table()).collect::<Vec<_>>(), horizon);

        let log = manetsim_core::engine::MemoryLog::default();
        let mut d = Simulation::new(RadioConfig::default(), fixed(&pos), flows, secs(horizon), topo, dsr)
            .with_event_log(Box::new(log.clone()));
        d.run_until(secs(horizon));
        for router in d.routers() {
            for p in router.cache().paths() {
                dsr_paths += 1;
                repeats += has_repeats(&p.nodes) as usize;
            }
        }
        drop(d.finish());
        let mut visited: BTreeMap<u64, Vec<NodeId>> = BTreeMap::new();
        for e in events(&log.text()) {
            if e.event == "rx" && e.kind == "DATA" {
                visited.entry(e.uid.unwrap()).or_default().push(NodeId(e.node));
            }
        }
        repeats += visited.values().filter(|v| has_repeats(v)).count();
    }
    r.check(
        "loop freedom",
        loops == 0 && repeats == 0 && dsr_paths > 0,
        format!(
            "{loops} looping next-hop walks, {repeats} repeated-node DSR routes ({dsr_paths} cached paths checked)"
        ),
    );
}

fn trend_suite(r: &mut Report) {
    let started = Instant::now();
    let mobility = Sweep {
        label: "mobility".into(),
        cells: Preset::Mobility
            .cells()
            .into_iter()
            .filter(|c| c.pause_s == 0.0 && (c.speed_mps == 2.0 || c.speed_mps == 30.0))
            .collect(),
    };
    let scalability = Sweep::preset(Preset::Scalability);
    let mut rows = Vec::new();
    let (mut runs, mut broken, mut violations) = (0, 0, 0);
    for sw in [&mobility, &scalability] {
        for sc in sw.runs(TREND_SEEDS) {
            let res = run_scenario(&sc).unwrap();
            runs += 1;
            broken += (!conserved(&res)) as usize;
            violations += res.bandwidth_violations + res.report.count(ConstraintId::C1a) as usize;
            let mut row = res.row;
            row.scenario_id = format!("{}/{}", sw.label, row.scenario_id);
            rows.push(row);
        }
    }
    r.check(
        "conservation (every trend run)",
        broken == 0,
        format!("{broken} of {runs} runs lose or invent packets"),
    );
    r.check(
        "constraint 1.a (every trend run)",
        violations == 0,
        format!("{violations} bandwidth violations over {runs} runs"),
    );
    let v = verdict(&rows);
    for c in &v.results {
        println!("    {c}");
    }
    r.check(
        "directional trend suite",
        v.applicable == TREND_CLAIMS && v.passed >= TREND_MIN_HOLDING && v.failed == 0,
        format!(
            "{} of {} claims hold, {} inverted beyond pooled sd, {runs} runs in {:.1?}",
            v.passed,
            v.applicable,
            v.failed,
            started.elapsed()
        ),
    );
}

fn analytic_shape(r: &mut Report) {
    let ers = ErsSchedule::default();
    let mut monotone = true;
    for d_avg in [1.0, 2.5, 4.0, 8.0] {
        let p = CostParams {
            d_avg,
            rings: manetsim_core::harness::sweep::default_rings(d_avg, &ers),
            ..CostParams::default()
        };
        let rows = sweep(&p, &ers);
        monotone &= rows.len() == ers.max_rings() as usize
            && rows
                .windows(2)
                .all(|w| w[1].ce_rd > w[0].ce_rd && w[1].waiting_time_s > w[0].waiting_time_s);
    }
    r.check(
        "analytic sweep shape",
        monotone,
        "ce_rd and cumulative waiting time strictly increase with M for d_avg in {1, 2.5, 4, 8}".into(),
    );
}

#[test]
fn acceptance() {
    let mut r = Report { lines: Vec::new() };
    formula_oracles(&mut r);
    structural_identities(&mut r);
    engine_runs(&mut r);
    determinism(&mut r);
    static_pair(&mut r);
    loop_freedom(&mut r);
    analytic_shape(&mut r);
    trend_suite(&mut r);
    let failed: Vec<&String> = r.lines.iter().filter(|(ok, _)| !ok).map(|(_, l)| l).collect();
    println!("{} of {} criteria pass", r.lines.len() - failed.len(), r.lines.len());
    assert!(failed.is_empty(), "{failed:#?}");
}
